//! Built-in verification suites behind `ftn-papr verify`.
//!
//! Each check prints its observed value next to its tolerance. Tolerances
//! can be scaled (`tolerance_scale`) to exercise the failure path.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::covariance::{scheme_covariance, PowerConstraint, Scheme};
use crate::gram::{asymptotic_eigenvalues, build_gram, sorted_spectrum_deviation};
use crate::par::Execution;
use crate::papr::{closed_form_ccdf_rx, closed_form_ccdf_tx, default_gamma_grid, theoretical_ccdf_integral, CurveMeta};
use crate::pulse::{PulseShape, DEFAULT_BETA, DEFAULT_OVERSAMPLING, DEFAULT_SYMBOL_PERIOD};
use crate::scenario::{run_scenario, ScenarioConfig};
use crate::synth::dft_phase_vector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Spectral,
    Power,
    Ccdf,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Suite::Spectral),
            "power" => Ok(Suite::Power),
            "ccdf" => Ok(Suite::Ccdf),
            "all" => Ok(Suite::All),
            _ => Err(Error::config("suite", format!("unknown suite `{s}` (spectral, power, ccdf, all)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub observed: f64,
    pub bound: Bound,
    pub tolerance: f64,
    pub passed: bool,
    pub note: Option<String>,
}

impl Check {
    fn new(suite: &'static str, name: String, observed: f64, bound: Bound, tolerance: f64) -> Self {
        let passed = match bound {
            Bound::AtMost => observed <= tolerance,
            Bound::AtLeast => observed >= tolerance,
        };
        Check {
            suite,
            name,
            observed,
            bound,
            tolerance,
            passed,
            note: None,
        }
    }

    fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        write!(
            f,
            "{} [{}] {}: observed {:.6e} (required {op} {:.6e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.observed,
            self.tolerance
        )?;
        if let Some(n) = &self.note {
            write!(f, "; {n}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Multiplies every tolerance; values below 1 tighten the checks.
    pub tolerance_scale: f64,
    pub execution: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tolerance_scale: 1.0,
            execution: Execution::Parallel,
        }
    }
}

fn shape(delta: f64) -> Result<PulseShape> {
    PulseShape::new(DEFAULT_BETA, DEFAULT_SYMBOL_PERIOD, delta)
}

/// Peak-relative deviation of sorted asymptotic vs exact eigenvalues at
/// `n`: `(mean, sup)`.
pub fn eigenvalue_deviation(delta: f64, n: usize) -> Result<(f64, f64)> {
    let s = shape(delta)?;
    let exact = build_gram(&s, n)?.eigenvalues();
    let asym = asymptotic_eigenvalues(&s, n)?;
    let d = sorted_spectrum_deviation(&asym, &exact);
    Ok((d.mean, d.sup))
}

pub fn spectral_checks(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let k = opts.tolerance_scale;
    let mut out = Vec::new();
    for delta in [0.5, 0.8] {
        let (mean, sup) = eigenvalue_deviation(delta, 1001)?;
        let (mean_small, sup_small) = eigenvalue_deviation(delta, 201)?;
        out.push(Check::new("spectral", format!("eigenvalue mean deviation, delta={delta}, N=1001"), mean, Bound::AtMost, 0.01 * k));
        out.push(Check::new("spectral", format!("eigenvalue sup deviation, delta={delta}, N=1001"), sup, Bound::AtMost, 0.03 * k));
        out.push(
            Check::new(
                "spectral",
                format!("eigenvalue deviation shrinks from N=201 to N=1001, delta={delta}"),
                mean_small - mean,
                Bound::AtLeast,
                0.0,
            )
            .with_note(format!(
                "mean {mean_small:.3e} -> {mean:.3e}, sup {sup_small:.3e} -> {sup:.3e}"
            )),
        );
    }
    let (gap, leak) = phase_vector_identity(2001, 16)?;
    out.push(Check::new("spectral", "q_tau closed form, sup gap on support (N=2001, delta=0.5, 16 phases)".into(), gap, Bound::AtMost, 1e-3 * k));
    out.push(Check::new("spectral", "q_tau energy outside the support".into(), leak, Bound::AtMost, 1e-6 * k));
    Ok(out)
}

/// Worst peak-relative closed-form gap and worst out-of-support energy
/// fraction over `phases` phases at `δ = 0.5`.
pub fn phase_vector_identity(n: usize, phases: usize) -> Result<(f64, f64)> {
    let s = shape(0.5)?;
    let dt = s.symbol_interval();
    let mut gap = 0.0f64;
    let mut leak = 0.0f64;
    for j in 0..phases {
        let ps = dft_phase_vector(&s, j as f64 * dt / phases as f64, n)?;
        gap = gap.max(ps.support_gap());
        let total: f64 = ps.direct.iter().map(|z| z.norm_sqr()).sum();
        let outside: f64 = ps
            .direct
            .iter()
            .zip(&ps.closed)
            .filter(|(_, c)| c.norm() == 0.0)
            .map(|(d, _)| d.norm_sqr())
            .sum();
        leak = leak.max(outside / total);
    }
    Ok((gap, leak))
}

/// `trace(ΣG)/(NδT)/P` with its circulant-basis and interior-row
/// counterparts.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerIdentity {
    pub frame: f64,
    pub circulant: f64,
    pub interior: f64,
    pub rank: usize,
}

pub fn power_identity(scheme: Scheme, delta: f64, n: usize) -> Result<PowerIdentity> {
    let s = shape(delta)?;
    let p = 1.0;
    let cov = scheme_covariance(scheme, &s, n, PowerConstraint::fixed_tx(p))?;
    let g = build_gram(&s, n)?;
    Ok(PowerIdentity {
        frame: cov.frame_power(&g)? / p,
        circulant: cov.asymptotic_power() / p,
        interior: cov.interior_power(&g) / p,
        rank: cov.rank(),
    })
}

pub fn power_checks(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let k = opts.tolerance_scale;
    let mut out = Vec::new();
    for delta in [0.5, 0.8, 1.0] {
        for scheme in Scheme::FIGURE_SET {
            let id = power_identity(scheme, delta, 2001)?;
            out.push(
                Check::new(
                    "power",
                    format!("|trace(Sigma G)/(N dT P) - 1|, {scheme}, delta={delta}, N=2001"),
                    (id.frame - 1.0).abs(),
                    Bound::AtMost,
                    0.02 * k,
                )
                .with_note(format!(
                    "ratio {:.5}, circulant-basis {:.5}, interior rows {:.5}, rank {}",
                    id.frame, id.circulant, id.interior, id.rank
                )),
            );
        }
    }
    Ok(out)
}

/// Largest change of the phase-integrated CCDF when `Q` goes 16 -> 32.
pub fn phase_refinement(scheme: Scheme, delta: f64, n: usize) -> Result<f64> {
    let s = shape(delta)?;
    let cov = scheme_covariance(scheme, &s, n, PowerConstraint::fixed_tx(1.0))?;
    let g = default_gamma_grid(1.0, 1.0)?;
    let a = theoretical_ccdf_integral(&cov, &s, &g, 16, 1.0, CurveMeta::default())?;
    let b = theoretical_ccdf_integral(&cov, &s, &g, 32, 1.0, CurveMeta::default())?;
    Ok(a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Largest `|C̄(γ) − exp(−γ/P)|` over the default grid for the
/// small-acceleration optimum at `δ = 0.5`.
pub fn integral_vs_closed_form(n: usize) -> Result<f64> {
    let s = shape(0.5)?;
    let cov = scheme_covariance(Scheme::OptimalSmall, &s, n, PowerConstraint::fixed_tx(1.0))?;
    let g = default_gamma_grid(1.0, 1.0)?;
    let th = theoretical_ccdf_integral(&cov, &s, &g, DEFAULT_OVERSAMPLING, 1.0, CurveMeta::default())?;
    let cf = closed_form_ccdf_tx(1.0, &g, CurveMeta::default())?;
    Ok(th.probs.iter().zip(&cf.probs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

pub fn ccdf_checks(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let k = opts.tolerance_scale;
    let mut out = vec![Check::new(
        "ccdf",
        "integral CCDF vs exp(-gamma/P), optimal-small, delta=0.5, N=2001".into(),
        integral_vs_closed_form(2001)?,
        Bound::AtMost,
        1e-2 * k,
    )];
    let mut worst = (0.0f64, String::new());
    for delta in [0.5, 0.8, 1.0] {
        for scheme in Scheme::FIGURE_SET {
            let d = phase_refinement(scheme, delta, 2001)?;
            if d >= worst.0 {
                worst = (d, format!("{scheme} delta={delta}"));
            }
        }
    }
    out.push(
        Check::new("ccdf", "phase refinement 16 -> 32, worst curve change".into(), worst.0, Bound::AtMost, 5e-3 * k)
            .with_note(format!("worst at {}", worst.1)),
    );

    let t = DEFAULT_SYMBOL_PERIOD;
    let g = default_gamma_grid(1.0, 2.0)?;
    let tx = closed_form_ccdf_tx(1.0, &g, CurveMeta::default())?;
    let rx1 = closed_form_ccdf_rx(t, 1.0, t, &g, CurveMeta::default())?;
    let same = tx.probs.iter().zip(&rx1.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.push(Check::new("ccdf", "fixed-rx closed form at delta=1, E=PT equals fixed-tx".into(), same, Bound::AtMost, 1e-12 * k));
    let rx_half = closed_form_ccdf_rx(t, 0.5, t, &g, CurveMeta::default())?;
    let shift = match (rx_half.db_at_level(0.1), rx1.db_at_level(0.1)) {
        (Some(a), Some(b)) => a - b,
        _ => f64::NAN,
    };
    out.push(Check::new(
        "ccdf",
        "fixed-rx closed form, |shift at CCDF 0.1 per halving of delta - 3.0103 dB|".into(),
        (shift - 10.0 * 2f64.log10()).abs(),
        Bound::AtMost,
        0.05 * k,
    ));

    let dir = tempfile_dir()?;
    let cfg = ScenarioConfig {
        name: "verify".into(),
        delta_list: vec![1.0],
        schemes: vec![Scheme::Uniform],
        realizations: 10,
        tolerance: 0.05 * k,
        output_dir: dir.clone(),
        execution: opts.execution,
        ..ScenarioConfig::default()
    };
    let report = run_scenario(&cfg);
    let _ = std::fs::remove_dir_all(&dir);
    let report = report?;
    out.push(Check::new(
        "ccdf",
        "Monte Carlo (delta=1, uniform, 10 realizations) sup gap vs exp(-gamma/P)".into(),
        report.points[0].empirical_gap.gap,
        Bound::AtMost,
        0.05 * k,
    ));
    Ok(out)
}

fn tempfile_dir() -> Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("ftn-papr-verify-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Spectral | Suite::All) {
        checks.extend(spectral_checks(opts)?);
    }
    if matches!(suite, Suite::Power | Suite::All) {
        checks.extend(power_checks(opts)?);
    }
    if matches!(suite, Suite::Ccdf | Suite::All) {
        checks.extend(ccdf_checks(opts)?);
    }
    Ok(VerifyReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn check_bounds() {
        assert!(Check::new("x", "a".into(), 1.0, Bound::AtMost, 1.0).passed);
        assert!(!Check::new("x", "a".into(), 1.1, Bound::AtMost, 1.0).passed);
        assert!(!Check::new("x", "a".into(), 0.0, Bound::AtLeast, 1e-9).passed);
        let line = Check::new("x", "a".into(), 0.5, Bound::AtMost, 1.0).to_string();
        assert!(line.starts_with("PASS [x] a: observed"));
    }

    #[test]
    fn white_power_identity_is_exact() {
        let id = power_identity(Scheme::Uniform, 0.8, 201).unwrap();
        assert!((id.frame - 1.0).abs() < 1e-12);
        assert!((id.circulant - 1.0).abs() < 1e-2);
    }
}
