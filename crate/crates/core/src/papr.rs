//! Empirical and theoretical CCDFs of instantaneous power and PAPR.
//!
//! Empirical curves pool every interior sample of a frame, i.e. all `Q`
//! phases of every symbol interval, which estimates the period-averaged CCDF
//! directly. Counting is done in a [`CcdfAccumulator`], an integer monoid
//! that merges partial results from parallel workers without any
//! dependence on merge order.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::covariance::InputCovariance;
use crate::pulse::PulseShape;
use crate::synth::{variance_profile, WaveformFrame};
use crate::{Error, Result};

/// Grid points in the default threshold grid.
pub const DEFAULT_GRID_POINTS: usize = 200;

/// Comparisons ignore the tail where the reference falls below this.
pub const MIN_REFERENCE_PROB: f64 = 1e-2;

/// Pointwise comparisons ignore points with fewer exceedances than this.
pub const MIN_EVENTS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CcdfKind {
    EmpiricalPower,
    EmpiricalPapr,
    TheoreticalIntegral,
    ClosedFormTx,
    ClosedFormRx,
}

impl CcdfKind {
    pub fn label(&self) -> &'static str {
        match self {
            CcdfKind::EmpiricalPower => "empirical-power",
            CcdfKind::EmpiricalPapr => "empirical-papr",
            CcdfKind::TheoreticalIntegral => "theoretical-integral",
            CcdfKind::ClosedFormTx => "closed-form-tx",
            CcdfKind::ClosedFormRx => "closed-form-rx",
        }
    }
}

/// Provenance of a curve.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CurveMeta {
    pub delta: f64,
    pub beta: f64,
    pub symbol_period: f64,
    pub scheme: String,
    pub constraint: String,
    pub k_tx: usize,
    pub l_rx: usize,
    pub realizations: usize,
    pub seed: u64,
}

/// Exceedance probabilities on a threshold grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CcdfCurve {
    /// Thresholds in linear units (watts, or a power ratio for PAPR).
    pub gammas: Vec<f64>,
    /// `γ = reference` is 0 dB.
    pub reference: f64,
    pub probs: Vec<f64>,
    pub kind: CcdfKind,
    pub meta: CurveMeta,
    /// Standard error per point (empirical curves only).
    pub std_errors: Option<Vec<f64>>,
    /// Exceedance counts per point (empirical curves only).
    pub events: Option<Vec<u64>>,
}

impl CcdfCurve {
    fn analytic(gammas: &[f64], reference: f64, kind: CcdfKind, meta: CurveMeta, f: impl Fn(f64) -> f64) -> Self {
        CcdfCurve {
            gammas: gammas.to_vec(),
            reference,
            probs: gammas.iter().map(|&g| f(g)).collect(),
            kind,
            meta,
            std_errors: None,
            events: None,
        }
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn gammas_db(&self) -> Vec<f64> {
        self.gammas
            .iter()
            .map(|g| 10.0 * (g / self.reference).log10())
            .collect()
    }

    /// Threshold in dB where the curve crosses `level`, interpolating
    /// linearly in `(dB, ln p)`. `None` if the curve never crosses it.
    pub fn db_at_level(&self, level: f64) -> Option<f64> {
        let db = self.gammas_db();
        (1..self.len()).find_map(|i| {
            let (p0, p1) = (self.probs[i - 1], self.probs[i]);
            if p0 >= level && p1 < level && p1 > 0.0 {
                let w = (p0.ln() - level.ln()) / (p0.ln() - p1.ln());
                Some(db[i - 1] + w * (db[i] - db[i - 1]))
            } else {
                None
            }
        })
    }
}

/// `points` log-spaced thresholds over `[lo, hi]`, ascending.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid("gammas", format!("bad grid range [{lo}, {hi}]")));
    }
    if points < 2 {
        return Err(Error::invalid("gammas", "need at least two grid points"));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

/// Default grid: from 30 dB below `reference` up to where an exponential
/// of mean `peak_mean` falls to 10⁻⁴.
pub fn default_gamma_grid(reference: f64, peak_mean: f64) -> Result<Vec<f64>> {
    log_grid(reference * 1e-3, peak_mean * 1e4f64.ln(), DEFAULT_GRID_POINTS)
}

fn check_grid(gammas: &[f64]) -> Result<()> {
    if gammas.is_empty() {
        return Err(Error::invalid("gammas", "empty threshold grid"));
    }
    if gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::invalid("gammas", "thresholds must be finite and non-negative"));
    }
    if gammas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("gammas", "thresholds must be strictly increasing"));
    }
    Ok(())
}

/// Per-threshold exceedance counts, mergeable across workers.
///
/// Each realization contributes one batch of the same size; the spread of
/// per-realization fractions gives the standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfAccumulator {
    thresholds: Vec<f64>,
    batch: Option<u64>,
    realizations: u64,
    counts: Vec<u64>,
    squares: Vec<u128>,
}

impl CcdfAccumulator {
    pub fn new(thresholds: &[f64]) -> Result<Self> {
        check_grid(thresholds)?;
        let n = thresholds.len();
        Ok(CcdfAccumulator {
            thresholds: thresholds.to_vec(),
            batch: None,
            realizations: 0,
            counts: vec![0; n],
            squares: vec![0; n],
        })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn realizations(&self) -> u64 {
        self.realizations
    }

    pub fn total_samples(&self) -> u64 {
        self.realizations * self.batch.unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    fn check_batch(&mut self, batch: u64) -> Result<()> {
        match self.batch {
            None => {
                self.batch = Some(batch);
                Ok(())
            }
            Some(b) if b == batch => Ok(()),
            Some(b) => Err(Error::invalid(
                "batch",
                format!("realization has {batch} samples, earlier ones had {b}"),
            )),
        }
    }

    /// Count one realization's samples.
    pub fn add_realization(&mut self, values: &[f64]) -> Result<()> {
        if values.is_empty() {
            return Err(Error::EmptyInterior);
        }
        self.check_batch(values.len() as u64)?;
        let mut hist = vec![0u64; self.thresholds.len() + 1];
        for &v in values {
            // number of thresholds <= v
            hist[self.thresholds.partition_point(|&t| t <= v)] += 1;
        }
        let mut above = 0u64;
        for i in (0..self.thresholds.len()).rev() {
            above += hist[i + 1];
            self.counts[i] += above;
            self.squares[i] += above as u128 * above as u128;
        }
        self.realizations += 1;
        Ok(())
    }

    /// Sum of two partial results; the result does not depend on order.
    pub fn merge(mut self, other: CcdfAccumulator) -> Result<Self> {
        if self.thresholds != other.thresholds {
            return Err(Error::invalid("thresholds", "accumulators use different grids"));
        }
        if let Some(b) = other.batch {
            self.check_batch(b)?;
        }
        self.realizations += other.realizations;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.squares.iter_mut().zip(&other.squares) {
            *a += b;
        }
        Ok(self)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total_samples() as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }

    /// Standard error of each probability from the realization spread.
    pub fn std_errors(&self) -> Vec<f64> {
        let r = self.realizations as f64;
        let b = self.batch.unwrap_or(1) as f64;
        self.counts
            .iter()
            .zip(&self.squares)
            .map(|(&c, &s)| {
                if self.realizations < 2 {
                    return f64::NAN;
                }
                let mean = c as f64 / (r * b);
                let mean_sq = s as f64 / (r * b * b);
                let var = (mean_sq - mean * mean).max(0.0) * r / (r - 1.0);
                (var / r).sqrt()
            })
            .collect()
    }

    pub fn into_curve(self, kind: CcdfKind, reference: f64, meta: CurveMeta) -> Result<CcdfCurve> {
        if self.realizations == 0 {
            return Err(Error::EmptyInterior);
        }
        Ok(CcdfCurve {
            probs: self.probabilities(),
            std_errors: Some(self.std_errors()),
            events: Some(self.counts.clone()),
            gammas: self.thresholds,
            reference,
            kind,
            meta,
        })
    }
}

/// What each interior sample is divided by before thresholding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Raw instantaneous power `|x|²`.
    None,
    /// `|x|² / P_k` with the frame's nominal power.
    Nominal,
    /// `|x|²` over the frame's measured interior mean (diagnostic).
    Measured,
}

/// Pooled CCDF over the interiors of `frames` (one realization each).
pub fn empirical_ccdf(frames: &[WaveformFrame], gammas: &[f64], normalization: Normalization, meta: CurveMeta) -> Result<CcdfCurve> {
    if frames.is_empty() {
        return Err(Error::invalid("frames", "need at least one frame"));
    }
    let mut acc = CcdfAccumulator::new(gammas)?;
    for f in frames {
        let div = match normalization {
            Normalization::None => 1.0,
            Normalization::Nominal => f.nominal_power,
            Normalization::Measured => f.interior_mean_power(),
        };
        let values: Vec<f64> = f.interior().iter().map(|z| z.norm_sqr() / div).collect();
        acc.add_realization(&values)?;
    }
    let (kind, reference) = match normalization {
        Normalization::None => (CcdfKind::EmpiricalPower, frames[0].nominal_power),
        _ => (CcdfKind::EmpiricalPapr, 1.0),
    };
    acc.into_curve(kind, reference, meta)
}

/// `(1/δT) ∫ exp(−γ / v(τ)) dτ` by the periodic trapezoid rule on `Q`
/// phases, which is the plain mean over the phases.
pub fn theoretical_ccdf_integral(
    cov: &InputCovariance,
    shape: &PulseShape,
    gammas: &[f64],
    phase_count: usize,
    reference: f64,
    meta: CurveMeta,
) -> Result<CcdfCurve> {
    check_grid(gammas)?;
    if phase_count == 0 {
        return Err(Error::invalid("phase_count", "must be positive"));
    }
    let v = variance_profile(cov, shape, phase_count)?;
    Ok(CcdfCurve::analytic(gammas, reference, CcdfKind::TheoreticalIntegral, meta, |g| {
        v.iter().map(|&vq| exceed_exponential(g, vq)).sum::<f64>() / v.len() as f64
    }))
}

fn exceed_exponential(gamma: f64, mean: f64) -> f64 {
    if gamma <= 0.0 {
        1.0
    } else if mean <= 0.0 {
        0.0
    } else {
        (-gamma / mean).exp()
    }
}

/// `exp(−γ / P_k)`.
pub fn closed_form_ccdf_tx(power: f64, gammas: &[f64], meta: CurveMeta) -> Result<CcdfCurve> {
    check_grid(gammas)?;
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::invalid("power", format!("{power} must be positive")));
    }
    Ok(CcdfCurve::analytic(gammas, power, CcdfKind::ClosedFormTx, meta, |g| exceed_exponential(g, power)))
}

/// `exp(−γ δT / E)`, plotted against the reference `E/T`.
pub fn closed_form_ccdf_rx(energy: f64, delta: f64, symbol_period: f64, gammas: &[f64], meta: CurveMeta) -> Result<CcdfCurve> {
    check_grid(gammas)?;
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::invalid("energy", format!("{energy} must be positive")));
    }
    if !(delta > 0.0 && symbol_period > 0.0) {
        return Err(Error::invalid("delta", "delta and symbol period must be positive"));
    }
    let mean = energy / (delta * symbol_period);
    Ok(CcdfCurve::analytic(
        gammas,
        energy / symbol_period,
        CcdfKind::ClosedFormRx,
        meta,
        |g| exceed_exponential(g, mean),
    ))
}

/// Worst absolute difference where the reference is at least `floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupGap {
    pub gap: f64,
    /// dB position of the worst point.
    pub at_db: f64,
    pub points: usize,
}

pub fn sup_gap(curve: &CcdfCurve, reference: &CcdfCurve, floor: f64) -> Result<SupGap> {
    same_grid(curve, reference)?;
    let db = curve.gammas_db();
    let mut out = SupGap {
        gap: 0.0,
        at_db: f64::NAN,
        points: 0,
    };
    for ((&p, &r), &d) in curve.probs.iter().zip(&reference.probs).zip(&db) {
        if r < floor {
            continue;
        }
        out.points += 1;
        let g = (p - r).abs();
        if g > out.gap || out.at_db.is_nan() {
            out.gap = out.gap.max(g);
            out.at_db = d;
        }
    }
    Ok(out)
}

fn same_grid(a: &CcdfCurve, b: &CcdfCurve) -> Result<()> {
    if a.gammas != b.gammas {
        return Err(Error::invalid("gammas", "curves are on different threshold grids"));
    }
    Ok(())
}

/// Pointwise `|p_a − p_b| <= k·√(se_a² + se_b²)` over points where both
/// curves saw at least `min_events` exceedances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeAgreement {
    /// Largest `|p_a − p_b| / √(se_a² + se_b²)`.
    pub worst_z: f64,
    pub at_db: f64,
    pub violations: usize,
    pub points: usize,
}

pub fn se_agreement(a: &CcdfCurve, b: &CcdfCurve, k: f64, min_events: u64) -> Result<SeAgreement> {
    same_grid(a, b)?;
    let missing = || Error::invalid("curve", "standard errors need empirical curves");
    let (sa, sb) = (a.std_errors.as_ref().ok_or_else(missing)?, b.std_errors.as_ref().ok_or_else(missing)?);
    let (ea, eb) = (a.events.as_ref().ok_or_else(missing)?, b.events.as_ref().ok_or_else(missing)?);
    let db = a.gammas_db();
    let mut out = SeAgreement {
        worst_z: 0.0,
        at_db: f64::NAN,
        violations: 0,
        points: 0,
    };
    for i in 0..a.len() {
        if ea[i] < min_events || eb[i] < min_events {
            continue;
        }
        out.points += 1;
        let se = (sa[i] * sa[i] + sb[i] * sb[i]).sqrt();
        let diff = (a.probs[i] - b.probs[i]).abs();
        let z = if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if z > k {
            out.violations += 1;
        }
        if z > out.worst_z || out.at_db.is_nan() {
            out.worst_z = out.worst_z.max(z);
            out.at_db = db[i];
        }
    }
    Ok(out)
}

/// CSV with columns `gamma_dB,ccdf,kind,delta,beta,scheme,constraint,seed`.
pub fn write_curves_csv<W: Write>(curves: &[CcdfCurve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["gamma_dB", "ccdf", "kind", "delta", "beta", "scheme", "constraint", "seed"])?;
    for c in curves {
        for (db, p) in c.gammas_db().iter().zip(&c.probs) {
            w.write_record([
                format!("{db:.6}"),
                format!("{p:.9e}"),
                c.kind.label().to_string(),
                format!("{:.6}", c.meta.delta),
                format!("{:.6}", c.meta.beta),
                c.meta.scheme.clone(),
                c.meta.constraint.clone(),
                c.meta.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{scheme_covariance, PowerConstraint, Scheme};
    use crate::pulse::DEFAULT_SYMBOL_PERIOD;
    use approx::assert_abs_diff_eq;

    fn grid() -> Vec<f64> {
        log_grid(1e-3, 10.0, 50).unwrap()
    }

    #[test]
    fn accumulator_counts_inclusive_exceedances() {
        let mut acc = CcdfAccumulator::new(&[0.5, 1.0, 2.0]).unwrap();
        acc.add_realization(&[0.1, 0.5, 1.0, 1.5, 3.0]).unwrap();
        assert_eq!(acc.counts(), &[4, 3, 1]);
        assert_eq!(acc.probabilities(), vec![0.8, 0.6, 0.2]);
    }

    #[test]
    fn accumulator_rejects_ragged_batches() {
        let mut acc = CcdfAccumulator::new(&[1.0]).unwrap();
        acc.add_realization(&[0.0, 2.0]).unwrap();
        assert!(acc.add_realization(&[1.0]).is_err());
        assert!(matches!(acc.add_realization(&[]), Err(Error::EmptyInterior)));
    }

    #[test]
    fn merge_is_order_independent() {
        let g = grid();
        let parts: Vec<CcdfAccumulator> = (0..5)
            .map(|r| {
                let mut a = CcdfAccumulator::new(&g).unwrap();
                let v: Vec<f64> = (0..100).map(|i| ((i * 7 + r * 13) % 97) as f64 / 20.0).collect();
                a.add_realization(&v).unwrap();
                a
            })
            .collect();
        let empty = CcdfAccumulator::new(&g).unwrap();
        let fwd = parts.iter().cloned().try_fold(empty.clone(), |a, b| a.merge(b)).unwrap();
        let rev = parts.iter().rev().cloned().try_fold(empty, |a, b| a.merge(b)).unwrap();
        assert_eq!(fwd, rev);
        assert_eq!(fwd.realizations(), 5);
    }

    #[test]
    fn std_error_of_identical_realizations_is_zero() {
        let mut acc = CcdfAccumulator::new(&[1.0]).unwrap();
        for _ in 0..4 {
            acc.add_realization(&[0.0, 2.0]).unwrap();
        }
        assert_eq!(acc.std_errors(), vec![0.0]);
        let mut acc = CcdfAccumulator::new(&[1.0]).unwrap();
        acc.add_realization(&[0.0, 0.0]).unwrap();
        acc.add_realization(&[2.0, 2.0]).unwrap();
        // fractions 0 and 1: sample sd 1/√2, se 1/2
        assert_abs_diff_eq!(acc.std_errors()[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn closed_forms() {
        let g = [0.0, 2.0 * 100f64.ln()];
        let tx = closed_form_ccdf_tx(2.0, &g, CurveMeta::default()).unwrap();
        assert_eq!(tx.probs[0], 1.0);
        assert_abs_diff_eq!(tx.probs[1], 0.01, epsilon = 1e-15);
        let t = DEFAULT_SYMBOL_PERIOD;
        let rx = closed_form_ccdf_rx(2.0 * t, 1.0, t, &g, CurveMeta::default()).unwrap();
        for (a, b) in rx.probs.iter().zip(&tx.probs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let fine = closed_form_ccdf_rx(t, 1e-9, t, &[5.0], CurveMeta::default()).unwrap();
        assert!(fine.probs[0] > 0.999_999);
    }

    #[test]
    fn halving_delta_shifts_by_three_db() {
        let g = log_grid(1e-2, 1e3, 2000).unwrap();
        let t = DEFAULT_SYMBOL_PERIOD;
        let a = closed_form_ccdf_rx(t, 1.0, t, &g, CurveMeta::default()).unwrap();
        let b = closed_form_ccdf_rx(t, 0.5, t, &g, CurveMeta::default()).unwrap();
        let shift = b.db_at_level(0.1).unwrap() - a.db_at_level(0.1).unwrap();
        assert_abs_diff_eq!(shift, 10.0 * 2f64.log10(), epsilon = 1e-3);
    }

    #[test]
    fn white_brick_wall_integral_is_exponential() {
        let s = PulseShape::new(0.0, DEFAULT_SYMBOL_PERIOD, 1.0).unwrap();
        let n = 201;
        let cov = scheme_covariance(Scheme::Uniform, &s, n, PowerConstraint::fixed_tx(1.0)).unwrap();
        let v = variance_profile(&cov, &s, 16).unwrap();
        let curve = theoretical_ccdf_integral(&cov, &s, &grid(), 16, 1.0, CurveMeta::default()).unwrap();
        for (g, p) in curve.gammas.iter().zip(&curve.probs) {
            assert_abs_diff_eq!(*p, (-g / v[0]).exp(), epsilon = 1e-2);
        }
        assert!(curve.probs.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn sup_gap_respects_floor() {
        let g = [0.1, 1.0, 10.0];
        let a = closed_form_ccdf_tx(1.0, &g, CurveMeta::default()).unwrap();
        let mut b = a.clone();
        b.probs[2] += 0.5;
        assert_eq!(sup_gap(&b, &a, 1e-2).unwrap().points, 2);
        assert_eq!(sup_gap(&b, &a, 1e-2).unwrap().gap, 0.0);
        assert_eq!(sup_gap(&b, &a, 0.0).unwrap().gap, 0.5);
    }

    #[test]
    fn csv_layout() {
        let c = closed_form_ccdf_tx(1.0, &[0.5, 1.0], CurveMeta::default()).unwrap();
        let mut buf = Vec::new();
        write_curves_csv(&[c], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "gamma_dB,ccdf,kind,delta,beta,scheme,constraint,seed");
        assert!(lines[2].starts_with("0.000000,3.678794412e-1,closed-form-tx,"));
    }

    #[test]
    fn grids_must_increase() {
        assert!(CcdfAccumulator::new(&[1.0, 1.0]).is_err());
        assert!(closed_form_ccdf_tx(1.0, &[], CurveMeta::default()).is_err());
        assert!(log_grid(0.0, 1.0, 10).is_err());
    }
}
