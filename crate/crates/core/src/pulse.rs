//! Root-raised-cosine pulse shaping.
//!
//! The transmit pulse `p(t)` is the unit-energy root-raised-cosine (RRC)
//! pulse. Its matched-filter response `g(t) = p(t) * p(-t)` is the
//! raised-cosine (RC) pulse, with Fourier transform `G(f)`; both are given
//! in closed form here and every other module builds on them.
//!
//! Times are in seconds and frequencies in hertz. `G(0) = T`, `g(0) = 1`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

pub const DEFAULT_BETA: f64 = 0.3;
pub const DEFAULT_SYMBOL_PERIOD: f64 = 0.01;
pub const DEFAULT_OVERSAMPLING: usize = 16;

/// Removable singularities are replaced by their limits within this many
/// symbol periods of the singular point.
const SINGULARITY_TOL: f64 = 1e-9;

/// Minimum fraction of the ideal pulse energy the truncated pulse must keep.
const ENERGY_CAPTURE: f64 = 1.0 - 1e-4;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn ceil_ratio(num: f64, delta: f64) -> usize {
    // 16/0.8 must give 20, not 21.
    ((num / delta) - 1e-9).ceil().max(1.0) as usize
}

/// Smallest truncation half-width (in `δT` intervals) accepted for `delta`.
pub fn minimum_span(delta: f64) -> usize {
    ceil_ratio(8.0, delta)
}

/// Default truncation half-width: sixteen Nyquist periods.
pub fn default_span(delta: f64) -> usize {
    ceil_ratio(16.0, delta)
}

/// Pulse and signaling parameters shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    beta: f64,
    symbol_period: f64,
    delta: f64,
    span: usize,
    oversampling: usize,
}

impl PulseShape {
    /// Shape with the default truncation (`ceil(16/δ)` intervals) and
    /// sixteen samples per `δT`.
    pub fn new(beta: f64, symbol_period: f64, delta: f64) -> Result<Self> {
        let shape = PulseShape {
            beta,
            symbol_period,
            delta,
            span: if delta > 0.0 { default_span(delta) } else { 0 },
            oversampling: DEFAULT_OVERSAMPLING,
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn with_span(mut self, span: usize) -> Result<Self> {
        self.span = span;
        self.validate()?;
        Ok(self)
    }

    pub fn with_oversampling(mut self, oversampling: usize) -> Result<Self> {
        self.oversampling = oversampling;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid("delta", format!("{} not in (0, 1]", self.delta)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid("beta", format!("{} not in [0, 1]", self.beta)));
        }
        if !(self.symbol_period > 0.0 && self.symbol_period.is_finite()) {
            return Err(Error::invalid(
                "symbol_period",
                format!("{} must be positive", self.symbol_period),
            ));
        }
        let min_span = minimum_span(self.delta);
        if self.span < min_span {
            return Err(Error::invalid(
                "span",
                format!("{} below minimum {min_span} for delta {}", self.span, self.delta),
            ));
        }
        if self.oversampling < 2 {
            return Err(Error::invalid(
                "oversampling",
                format!("{} samples per interval, need at least 2", self.oversampling),
            ));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn symbol_period(&self) -> f64 {
        self.symbol_period
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    /// FTN symbol spacing `δT`.
    pub fn symbol_interval(&self) -> f64 {
        self.delta * self.symbol_period
    }

    /// `1/(1+β)`: below it the folded spectrum has gaps.
    pub fn regime_boundary(&self) -> f64 {
        1.0 / (1.0 + self.beta)
    }

    pub fn is_small_acceleration(&self) -> bool {
        self.delta < self.regime_boundary()
    }

    /// Raised-cosine autocorrelation `g(t)`; `g(0) = 1`, `g(kT) = 0` for `k != 0`.
    pub fn autocorrelation(&self, t: f64) -> f64 {
        let x = t / self.symbol_period;
        let b = self.beta;
        if b > 0.0 {
            let sing = 1.0 / (2.0 * b);
            if (x.abs() - sing).abs() < SINGULARITY_TOL {
                return PI / 4.0 * sinc(sing);
            }
        }
        sinc(x) * (PI * b * x).cos() / (1.0 - (2.0 * b * x).powi(2))
    }

    /// Raised-cosine spectrum `G(f)`: flat at `T` in the passband, cosine
    /// taper over the roll-off band and zero beyond `(1+β)/(2T)`.
    pub fn spectrum(&self, f: f64) -> f64 {
        let t = self.symbol_period;
        let b = self.beta;
        let a = f.abs() * t;
        let lo = (1.0 - b) / 2.0;
        let hi = (1.0 + b) / 2.0;
        if a > hi {
            0.0
        } else if a < lo {
            t
        } else if b == 0.0 {
            // brick-wall edge: midpoint, so aliases fold to a flat T
            t / 2.0
        } else {
            t / 2.0 * (1.0 + (PI / b * (a - lo)).cos())
        }
    }

    /// Analytic unit-energy RRC pulse `p(t)` (untruncated).
    pub fn root_pulse(&self, t: f64) -> f64 {
        let ts = self.symbol_period;
        let b = self.beta;
        let x = t / ts;
        let norm = 1.0 / ts.sqrt();
        if x.abs() < SINGULARITY_TOL {
            return norm * (1.0 - b + 4.0 * b / PI);
        }
        if b > 0.0 && (x.abs() - 1.0 / (4.0 * b)).abs() < SINGULARITY_TOL {
            let arg = PI / (4.0 * b);
            return norm * b / 2f64.sqrt()
                * ((1.0 + 2.0 / PI) * arg.sin() + (1.0 - 2.0 / PI) * arg.cos());
        }
        let num = (PI * x * (1.0 - b)).sin() + 4.0 * b * x * (PI * x * (1.0 + b)).cos();
        let den = PI * x * (1.0 - (4.0 * b * x).powi(2));
        norm * num / den
    }

    /// RRC pulse sampled at `kδT/Q` for `|k| <= span·Q`, renormalized to
    /// unit energy.
    pub fn sampled_pulse(&self) -> Result<SampledPulse> {
        let q = self.oversampling;
        let half = self.span * q;
        let step = self.symbol_interval() / q as f64;
        let mut taps: Vec<f64> = (0..=2 * half)
            .map(|k| self.root_pulse((k as f64 - half as f64) * step))
            .collect();
        let energy: f64 = taps.iter().map(|v| v * v).sum::<f64>() * step;
        if energy < ENERGY_CAPTURE {
            return Err(Error::invalid(
                "span",
                format!(
                    "truncated pulse keeps {:.6} of its energy (< {ENERGY_CAPTURE}); \
                     increase span or oversampling",
                    energy
                ),
            ));
        }
        let scale = 1.0 / energy.sqrt();
        taps.iter_mut().for_each(|v| *v *= scale);
        Ok(SampledPulse {
            taps,
            step,
            oversampling: q,
            span: self.span,
        })
    }

    /// Phase vector `p_τ` with entries `p(τ - mδT)`, `m = -M..=M`.
    pub fn phase_vector(&self, tau: f64, half_len: usize) -> Result<PhaseVector> {
        let dt = self.symbol_interval();
        if !(0.0..dt).contains(&tau) {
            return Err(Error::invalid(
                "tau",
                format!("{tau} outside [0, {dt})"),
            ));
        }
        let m0 = half_len as isize;
        let values = (-m0..=m0)
            .map(|m| self.root_pulse(tau - m as f64 * dt))
            .collect();
        Ok(PhaseVector { tau, values })
    }
}

/// Truncated, oversampled RRC pulse with unit energy.
#[derive(Debug, Clone)]
pub struct SampledPulse {
    taps: Vec<f64>,
    step: f64,
    oversampling: usize,
    span: usize,
}

impl SampledPulse {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Sample spacing `δT/Q` in seconds.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn span(&self) -> usize {
        self.span
    }

    /// Index of the `t = 0` tap.
    pub fn center(&self) -> usize {
        self.span * self.oversampling
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|v| v * v).sum::<f64>() * self.step
    }

    /// Discrete autocorrelation at a lag of `lag` symbol intervals.
    pub fn autocorrelation(&self, lag: usize) -> f64 {
        let shift = lag * self.oversampling;
        if shift >= self.taps.len() {
            return 0.0;
        }
        self.taps
            .iter()
            .zip(&self.taps[shift..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.step
    }
}

/// Pulse samples seen by one sampling phase `τ`, ordered `m = -M..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    pub tau: f64,
    pub values: Vec<f64>,
}

impl PhaseVector {
    pub fn half_len(&self) -> usize {
        self.values.len() / 2
    }

    /// Entry for symbol offset `m`.
    pub fn at(&self, m: isize) -> f64 {
        self.values[(m + self.half_len() as isize) as usize]
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn shape(beta: f64, delta: f64) -> PulseShape {
        PulseShape::new(beta, DEFAULT_SYMBOL_PERIOD, delta).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PulseShape::new(0.3, 0.01, 0.0).is_err());
        assert!(PulseShape::new(0.3, 0.01, 1.2).is_err());
        assert!(PulseShape::new(-0.1, 0.01, 0.5).is_err());
        assert!(PulseShape::new(0.3, 0.0, 0.5).is_err());
        let s = shape(0.3, 0.5);
        assert!(s.with_span(15).is_err());
        assert!(s.with_span(16).is_ok());
        assert!(s.with_oversampling(1).is_err());
    }

    #[test]
    fn default_span_is_sixteen_periods() {
        assert_eq!(default_span(0.8), 20);
        assert_eq!(default_span(0.5), 32);
        assert_eq!(default_span(1.0), 16);
        assert_eq!(minimum_span(0.25), 32);
    }

    #[test]
    fn autocorrelation_nyquist_zeros() {
        for beta in [0.0, 0.25, 0.3, 0.5, 1.0] {
            let s = shape(beta, 1.0);
            assert_abs_diff_eq!(s.autocorrelation(0.0), 1.0, epsilon = 1e-15);
            for k in 1..20 {
                let t = k as f64 * s.symbol_period();
                assert_abs_diff_eq!(s.autocorrelation(t), 0.0, epsilon = 1e-14);
                assert_abs_diff_eq!(s.autocorrelation(-t), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn autocorrelation_singularity_is_continuous() {
        let s = shape(0.3, 1.0);
        let t0 = s.symbol_period() / (2.0 * 0.3);
        let at = s.autocorrelation(t0);
        let near = s.autocorrelation(t0 * (1.0 + 1e-6));
        assert_abs_diff_eq!(at, near, epsilon = 1e-6);
    }

    #[test]
    fn root_pulse_singularities_are_continuous() {
        let s = shape(0.3, 1.0);
        let t0 = s.symbol_period() / (4.0 * 0.3);
        assert_abs_diff_eq!(
            s.root_pulse(t0),
            s.root_pulse(t0 * (1.0 + 1e-6)),
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(s.root_pulse(0.0), s.root_pulse(1e-8 * s.symbol_period()), epsilon = 1e-6);
    }

    #[test]
    fn spectrum_support_and_limits() {
        let s = shape(0.3, 1.0);
        let t = s.symbol_period();
        assert_eq!(s.spectrum(0.66 / t), 0.0);
        assert_eq!(s.spectrum(-0.9 / t), 0.0);
        assert_eq!(s.spectrum(0.0), t);
        assert_abs_diff_eq!(s.spectrum(0.5 / t), t / 2.0, epsilon = 1e-15);
        let brick = shape(0.0, 1.0);
        for f in [0.0, 0.1, 0.3, 0.49, -0.45] {
            assert_eq!(brick.spectrum(f / t), t);
        }
        assert_eq!(brick.spectrum(0.51 / t), 0.0);
    }

    #[test]
    fn sampled_pulse_unit_energy_and_lags() {
        let s = shape(0.3, 1.0);
        let p = s.sampled_pulse().unwrap();
        assert_abs_diff_eq!(p.autocorrelation(0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.autocorrelation(1), 0.0, epsilon = 1e-4);
        assert_abs_diff_eq!(p.autocorrelation(2), 0.0, epsilon = 1e-4);

        let s = shape(0.3, 0.8);
        let p = s.sampled_pulse().unwrap();
        let analytic = s.autocorrelation(s.symbol_interval());
        assert_abs_diff_eq!(p.autocorrelation(1), analytic, epsilon = 1e-4);
        assert_eq!(p.taps().len(), 2 * 20 * 16 + 1);
    }

    #[test]
    fn sampled_pulse_rejects_short_span_for_low_rolloff() {
        // beta = 0 decays like 1/t: 8 periods keep far less than 1 - 1e-4.
        let s = shape(0.0, 1.0).with_span(8).unwrap();
        assert!(s.sampled_pulse().is_err());
    }

    #[test]
    fn phase_vector_layout() {
        let s = shape(0.3, 0.5);
        let tau = 0.3 * s.symbol_interval();
        let v = s.phase_vector(tau, 10).unwrap();
        assert_eq!(v.values.len(), 21);
        for m in -10isize..=10 {
            let want = s.root_pulse(tau - m as f64 * s.symbol_interval());
            assert_eq!(v.at(m), want);
        }
        // p is even: p(-m dT) = p(m dT) at tau = 0.
        let v0 = s.phase_vector(0.0, 10).unwrap();
        for m in 1..=10 {
            assert_abs_diff_eq!(v0.at(m), v0.at(-m), epsilon = 1e-12);
        }
        assert!(s.phase_vector(s.symbol_interval(), 10).is_err());
        assert!(s.phase_vector(-1e-9, 10).is_err());
    }
}
