//! Monte Carlo campaigns: configuration, execution and reporting.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{spatial_waterfilling, stream_rng, uniform_spatial, AntennaPowerProfile, ChannelRealization};
use crate::covariance::{coloring_factor, scheme_covariance, ColoringFactor, InputCovariance, PowerConstraint, Scheme, SpatialAllocation};
use crate::par::{map_indexed, Execution};
use crate::papr::{
    closed_form_ccdf_rx, closed_form_ccdf_tx, log_grid, sup_gap, theoretical_ccdf_integral, write_curves_csv, CcdfAccumulator,
    CcdfCurve, CcdfKind, CurveMeta, SupGap, DEFAULT_GRID_POINTS, MIN_REFERENCE_PROB,
};
use crate::plot::{write_ccdf_svg, PlotSeries};
use crate::pulse::{default_span, minimum_span, PulseShape, SampledPulse, DEFAULT_BETA, DEFAULT_OVERSAMPLING, DEFAULT_SYMBOL_PERIOD};
use crate::synth::{draw_colored_symbols, synthesize_waveform, CircularSynthesizer, Synthesis, SymbolBlock};
use crate::{Error, Result};

/// Tolerance on measured mean power relative to the budget.
pub const POWER_TOLERANCE: f64 = 0.03;

/// Threshold grid. Thresholds run from `min_db` below the reference power
/// up to where the largest per-antenna budget's exponential reaches
/// `floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaGridConfig {
    pub points: usize,
    pub min_db: f64,
    pub floor: f64,
}

impl Default for GammaGridConfig {
    fn default() -> Self {
        GammaGridConfig {
            points: DEFAULT_GRID_POINTS,
            min_db: -30.0,
            floor: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub delta_list: Vec<f64>,
    pub beta: f64,
    #[serde(alias = "T")]
    pub symbol_period: f64,
    /// Requested frame length; the odd frame `2⌊n/2⌋+1` is used.
    pub n_symbols: usize,
    #[serde(alias = "K")]
    pub k_tx: usize,
    #[serde(alias = "L")]
    pub l_rx: usize,
    pub schemes: Vec<Scheme>,
    pub constraint: PowerConstraint,
    pub realizations: usize,
    pub master_seed: u64,
    /// Samples per symbol interval `Q`.
    pub oversampling: usize,
    /// Pulse truncation in symbol intervals per side; default `⌈16/δ⌉`.
    pub span: Option<usize>,
    pub synthesis: Synthesis,
    pub gamma_grid: GammaGridConfig,
    /// Allowed sup gap between empirical and closed-form curves.
    pub tolerance: f64,
    pub output_dir: PathBuf,
    pub execution: Execution,
    /// Also write per-realization channel matrices.
    pub dump_channels: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".into(),
            delta_list: vec![0.5, 0.8, 1.0],
            beta: DEFAULT_BETA,
            symbol_period: DEFAULT_SYMBOL_PERIOD,
            n_symbols: 2000,
            k_tx: 1,
            l_rx: 1,
            schemes: vec![Scheme::Uniform, Scheme::Optimal],
            constraint: PowerConstraint::default(),
            realizations: 200,
            master_seed: 20_240_917,
            oversampling: DEFAULT_OVERSAMPLING,
            span: None,
            synthesis: Synthesis::Circular,
            gamma_grid: GammaGridConfig::default(),
            tolerance: 0.02,
            output_dir: PathBuf::from("out"),
            execution: Execution::Parallel,
            dump_channels: false,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Odd frame length actually simulated.
    pub fn frame_len(&self) -> usize {
        2 * (self.n_symbols / 2) + 1
    }

    pub fn shape(&self, delta: f64) -> Result<PulseShape> {
        let shape = PulseShape::new(self.beta, self.symbol_period, delta)?;
        let span = self.span.unwrap_or_else(|| default_span(delta));
        shape.with_span(span)?.with_oversampling(self.oversampling)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta_list.is_empty() {
            return Err(Error::config("delta_list", "must list at least one acceleration factor"));
        }
        for &d in &self.delta_list {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::config("delta_list", format!("{d} is outside (0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::config("beta", format!("{} is outside [0, 1]", self.beta)));
        }
        if !(self.symbol_period > 0.0 && self.symbol_period.is_finite()) {
            return Err(Error::config("symbol_period", "must be positive"));
        }
        if self.k_tx == 0 {
            return Err(Error::config("k_tx", "need at least one transmit antenna"));
        }
        if self.l_rx == 0 {
            return Err(Error::config("l_rx", "need at least one receive antenna"));
        }
        if self.realizations == 0 {
            return Err(Error::config("realizations", "must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "must list at least one scheme"));
        }
        if self.oversampling < 2 {
            return Err(Error::config("oversampling", "must be at least 2"));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::config("tolerance", "must be positive"));
        }
        let g = &self.gamma_grid;
        if g.points < 2 || !g.min_db.is_finite() || !(g.floor > 0.0 && g.floor < 1.0) {
            return Err(Error::config("gamma_grid", "need points >= 2, finite min_db and 0 < floor < 1"));
        }
        self.constraint
            .validate()
            .map_err(|e| Error::config("constraint", e.to_string()))?;
        for &d in &self.delta_list {
            let span = self.span.unwrap_or_else(|| default_span(d));
            if span < minimum_span(d) {
                return Err(Error::config(
                    "span",
                    format!("{span} is below the minimum {} for delta {d}", minimum_span(d)),
                ));
            }
            if self.n_symbols < 4 * span {
                return Err(Error::config(
                    "n_symbols",
                    format!("{} is shorter than 4 x pulse span ({span}) at delta {d}", self.n_symbols),
                ));
            }
            let shape = self.shape(d).map_err(|e| Error::config("delta_list", e.to_string()))?;
            for s in &self.schemes {
                s.check_regime(&shape)
                    .map_err(|e| Error::config("schemes", format!("{s}: {e}")))?;
            }
        }
        Ok(())
    }

    /// Power the dB axis is referenced to.
    pub fn reference_power(&self) -> f64 {
        match self.constraint {
            PowerConstraint::FixedTxSnr { power, .. } => power,
            PowerConstraint::FixedRxSnr { energy, .. } => energy / self.symbol_period,
        }
    }

    /// Per-antenna budget `P` or `E/(δT)` at `delta`.
    pub fn budget(&self, delta: f64) -> f64 {
        match self.constraint {
            PowerConstraint::FixedTxSnr { power, .. } => power,
            PowerConstraint::FixedRxSnr { energy, .. } => energy / (delta * self.symbol_period),
        }
    }

    pub fn gammas(&self) -> Result<Vec<f64>> {
        let peak = self
            .delta_list
            .iter()
            .map(|&d| self.budget(d))
            .fold(0.0, f64::max);
        let g = &self.gamma_grid;
        log_grid(
            self.reference_power() * 10f64.powf(g.min_db / 10.0),
            peak * (1.0 / g.floor).ln(),
            g.points,
        )
    }

    fn meta(&self, delta: f64, scheme: Scheme) -> CurveMeta {
        CurveMeta {
            delta,
            beta: self.beta,
            symbol_period: self.symbol_period,
            scheme: scheme.label().into(),
            constraint: self.constraint.label().into(),
            k_tx: self.k_tx,
            l_rx: self.l_rx,
            realizations: self.realizations,
            seed: self.master_seed,
        }
    }
}

enum Synthesizer {
    Circular(CircularSynthesizer),
    Linear(SampledPulse),
}

impl Synthesizer {
    fn interior(&self, a: Vec<Complex64>, scheme: Scheme) -> Result<Vec<Complex64>> {
        let block = SymbolBlock { a, scheme };
        Ok(match self {
            Synthesizer::Circular(s) => s.synthesize(&block.a),
            Synthesizer::Linear(p) => {
                let f = synthesize_waveform(&block, p, 1.0)?;
                f.interior().to_vec()
            }
        })
    }
}

/// Everything a realization needs for one `(δ, scheme)` point.
struct PointContext<'a> {
    cfg: &'a ScenarioConfig,
    scheme: Scheme,
    cov: InputCovariance,
    factor: ColoringFactor,
    synth: Synthesizer,
    budget: f64,
    gammas: &'a [f64],
}

struct RealizationOutcome {
    acc: CcdfAccumulator,
    mean_power: f64,
    degenerate: bool,
    channel: Option<ChannelRealization>,
}

impl PointContext<'_> {
    fn allocation(&self, ch: &ChannelRealization) -> Result<AntennaPowerProfile> {
        match self.scheme.spatial() {
            SpatialAllocation::Waterfilling => {
                spatial_waterfilling(ch, self.budget, self.cfg.constraint.sigma0_sq())
            }
            SpatialAllocation::Uniform => uniform_spatial(self.cfg.k_tx, self.budget),
        }
    }

    /// Per-antenna powers `|x_k|²·P/P_k` pooled over antennas.
    fn realization(&self, r: usize) -> Result<RealizationOutcome> {
        let cfg = self.cfg;
        let (k, n) = (cfg.k_tx, self.cov.n());
        let seed = cfg.master_seed;
        let ch = ChannelRealization::draw(k, cfg.l_rx, seed, r as u64)?;
        let alloc = self.allocation(&ch)?;
        let modes: Vec<Option<SymbolBlock>> = (0..k)
            .map(|m| {
                (alloc.mode_powers[m] > 0.0).then(|| {
                    let mut rng = stream_rng(seed, r as u64, 1 + m as u64);
                    draw_colored_symbols(&self.cov, &self.factor, &mut rng)
                })
            })
            .collect();
        let mut values = Vec::new();
        for ant in 0..k {
            let mut a = vec![Complex64::new(0.0, 0.0); n];
            for (m, block) in modes.iter().enumerate() {
                if let Some(b) = block {
                    let w = alloc.precoder[(ant, m)] * (alloc.mode_powers[m] / self.budget).sqrt();
                    for (dst, s) in a.iter_mut().zip(&b.a) {
                        *dst += w * s;
                    }
                }
            }
            let pk = alloc.per_antenna[ant];
            let scale = if pk > 0.0 { self.budget / pk } else { 0.0 };
            let x = self.synth.interior(a, self.scheme)?;
            values.extend(x.iter().map(|z| z.norm_sqr() * scale));
        }
        let mean_power = values.iter().sum::<f64>() / values.len().max(1) as f64;
        let mut acc = CcdfAccumulator::new(self.gammas)?;
        acc.add_realization(&values)?;
        Ok(RealizationOutcome {
            acc,
            mean_power,
            degenerate: alloc.degenerate,
            channel: cfg.dump_channels.then_some(ch),
        })
    }
}

/// Results for one `(δ, scheme)` point.
#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub delta: f64,
    pub scheme: Scheme,
    pub frame_len: usize,
    pub rank: usize,
    pub budget: f64,
    /// Empirical vs closed form over the region where the latter is `>= 1e-2`.
    pub empirical_gap: SupGap,
    /// Phase-integrated theory vs closed form, same region.
    pub theory_gap: SupGap,
    /// Measured mean per-antenna power over the budget.
    pub mean_power_ratio: f64,
    pub degenerate_channels: usize,
    pub passed: bool,
    pub breaches: Vec<String>,
    pub files: Vec<PathBuf>,
    #[serde(skip)]
    pub empirical: CcdfCurve,
    #[serde(skip)]
    pub theory: CcdfCurve,
    #[serde(skip)]
    pub closed_form: CcdfCurve,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub config: ScenarioConfig,
    pub frame_len: usize,
    pub tolerance: f64,
    pub points: Vec<PointReport>,
    pub all_passed: bool,
    pub files: Vec<PathBuf>,
}

impl ScenarioReport {
    /// Breached properties, one line each.
    pub fn breaches(&self) -> Vec<String> {
        self.points
            .iter()
            .flat_map(|p| p.breaches.iter().map(move |b| format!("delta={} {}: {b}", p.delta, p.scheme)))
            .collect()
    }

    pub fn point(&self, delta: f64, scheme: Scheme) -> Option<&PointReport> {
        self.points
            .iter()
            .find(|p| p.scheme == scheme && (p.delta - delta).abs() < 1e-12)
    }
}

/// Run a single `(δ, scheme)` point without writing anything.
pub fn simulate_point(cfg: &ScenarioConfig, delta: f64, scheme: Scheme, gammas: &[f64]) -> Result<PointReport> {
    let shape = cfg.shape(delta)?;
    let n = cfg.frame_len();
    let budget = cfg.budget(delta);
    let constraint = PowerConstraint::FixedTxSnr {
        power: budget,
        sigma0_sq: cfg.constraint.sigma0_sq(),
    };
    let cov = scheme_covariance(scheme, &shape, n, constraint)?;
    let factor = coloring_factor(&cov);
    let synth = match cfg.synthesis {
        Synthesis::Circular => Synthesizer::Circular(CircularSynthesizer::new(&shape, n, cfg.oversampling)?),
        Synthesis::Linear => Synthesizer::Linear(shape.sampled_pulse()?),
    };
    let ctx = PointContext {
        cfg,
        scheme,
        cov,
        factor,
        synth,
        budget,
        gammas,
    };
    let outcomes = map_indexed(cfg.realizations, cfg.execution, |r| ctx.realization(r));
    let mut acc = CcdfAccumulator::new(gammas)?;
    let mut power_sum = 0.0;
    let mut degenerate = 0;
    let mut channels = Vec::new();
    for o in outcomes {
        let o = o?;
        acc = acc.merge(o.acc)?;
        power_sum += o.mean_power;
        degenerate += o.degenerate as usize;
        channels.extend(o.channel);
    }
    let meta = cfg.meta(delta, scheme);
    let reference = cfg.reference_power();
    let kind = match cfg.constraint {
        PowerConstraint::FixedTxSnr { .. } => CcdfKind::EmpiricalPapr,
        PowerConstraint::FixedRxSnr { .. } => CcdfKind::EmpiricalPower,
    };
    let empirical = acc.into_curve(kind, reference, meta.clone())?;
    let closed_form = match cfg.constraint {
        PowerConstraint::FixedTxSnr { power, .. } => closed_form_ccdf_tx(power, gammas, meta.clone())?,
        PowerConstraint::FixedRxSnr { energy, .. } => {
            closed_form_ccdf_rx(energy, delta, cfg.symbol_period, gammas, meta.clone())?
        }
    };
    let theory = theoretical_ccdf_integral(&ctx.cov, &shape, gammas, cfg.oversampling, reference, meta)?;
    let empirical_gap = sup_gap(&empirical, &closed_form, MIN_REFERENCE_PROB)?;
    let theory_gap = sup_gap(&theory, &closed_form, MIN_REFERENCE_PROB)?;
    let mean_power_ratio = power_sum / cfg.realizations as f64 / budget;

    let mut breaches = Vec::new();
    if empirical_gap.gap > cfg.tolerance {
        breaches.push(format!(
            "empirical CCDF sup gap {:.4} > {:.4} (at {:.2} dB)",
            empirical_gap.gap, cfg.tolerance, empirical_gap.at_db
        ));
    }
    if (mean_power_ratio - 1.0).abs() > POWER_TOLERANCE {
        breaches.push(format!(
            "mean power {mean_power_ratio:.4} x budget, outside 1 +- {POWER_TOLERANCE}"
        ));
    }
    if !empirical.probs.windows(2).all(|w| w[1] <= w[0]) {
        breaches.push("empirical CCDF is not monotone".into());
    }
    let mut files = Vec::new();
    if cfg.dump_channels && !channels.is_empty() {
        fs::create_dir_all(&cfg.output_dir)?;
        let path = cfg
            .output_dir
            .join(format!("channels_delta{delta:.3}_{}.csv", scheme.label()));
        let mut out = BufWriter::new(File::create(&path)?);
        for (i, ch) in channels.iter().enumerate() {
            ch.write_csv(&mut out, i == 0)?;
        }
        files.push(path);
    }
    Ok(PointReport {
        delta,
        scheme,
        frame_len: n,
        rank: ctx.cov.rank(),
        budget,
        empirical_gap,
        theory_gap,
        mean_power_ratio,
        degenerate_channels: degenerate,
        passed: breaches.is_empty(),
        breaches,
        files,
        empirical,
        theory,
        closed_form,
    })
}

/// Validate, simulate every `(δ, scheme)` pair and write CSVs, an SVG and
/// `summary.json` into `output_dir`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    cfg.validate()?;
    let gammas = cfg.gammas()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut points = Vec::new();
    let mut files = Vec::new();
    for &delta in &cfg.delta_list {
        for &scheme in &cfg.schemes {
            log::info!("delta={delta} scheme={scheme}: {} realizations", cfg.realizations);
            let mut p = simulate_point(cfg, delta, scheme, &gammas)?;
            for (curve, kind) in [
                (&p.empirical, "empirical"),
                (&p.theory, "theory"),
                (&p.closed_form, "closed"),
            ] {
                let path = cfg
                    .output_dir
                    .join(format!("ccdf_delta{delta:.3}_{}_{kind}.csv", scheme.label()));
                write_curves_csv(std::slice::from_ref(curve), BufWriter::new(File::create(&path)?))?;
                p.files.push(path);
            }
            log::info!(
                "delta={delta} scheme={scheme}: sup gap {:.4}, mean power {:.4}",
                p.empirical_gap.gap,
                p.mean_power_ratio
            );
            files.extend(p.files.iter().cloned());
            points.push(p);
        }
    }
    let svg = cfg.output_dir.join(format!("{}.svg", cfg.name));
    write_ccdf_svg(&svg, &cfg.name, &plot_series(&points), cfg.gamma_grid.floor)?;
    files.push(svg);
    let all_passed = points.iter().all(|p| p.passed);
    let mut report = ScenarioReport {
        name: cfg.name.clone(),
        config: cfg.clone(),
        frame_len: cfg.frame_len(),
        tolerance: cfg.tolerance,
        points,
        all_passed,
        files,
    };
    let summary = cfg.output_dir.join("summary.json");
    report.files.push(summary.clone());
    serde_json::to_writer_pretty(BufWriter::new(File::create(&summary)?), &report)?;
    Ok(report)
}

fn plot_series(points: &[PointReport]) -> Vec<PlotSeries> {
    let mut series: Vec<PlotSeries> = points
        .iter()
        .map(|p| PlotSeries::from_curve(&p.empirical, format!("{} δ={}", p.scheme, p.delta), false))
        .collect();
    // one closed-form overlay per distinct curve
    let mut seen: Vec<&CcdfCurve> = Vec::new();
    for p in points {
        if !seen.iter().any(|c| c.probs == p.closed_form.probs) {
            seen.push(&p.closed_form);
            let label = match p.closed_form.kind {
                CcdfKind::ClosedFormRx => format!("closed form δ={}", p.delta),
                _ => "closed form".to_string(),
            };
            series.push(PlotSeries::from_curve(&p.closed_form, label, true));
        }
    }
    series
}
