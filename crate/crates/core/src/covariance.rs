//! Input covariance matrices for every allocation scheme and power constraint.
//!
//! Every covariance built here is diagonal in the DFT basis,
//!
//! ```text
//! Σ = c·δT · D · diag(s_i) · Dᴴ,     (D)_{m,i} = e^{-j2π m i / N} / √N
//! ```
//!
//! with `c` the per-symbol power (`P` under a fixed transmit SNR, `E/(δT)`
//! under a fixed received SNR) and `s_i` the spectral profile: `1/λ_i` for
//! the moderate-acceleration optimum, the sampled optimal spectrum for the
//! small-acceleration optimum and all ones for white inputs. `Σ` is therefore
//! circulant, real and symmetric; it is stored by its first column.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::gram::{CovarianceSpectrum, GramMatrix};
use crate::pulse::PulseShape;
use crate::{Error, Result};

/// Folded spectra with `min/max` below this are refused by the
/// moderate-acceleration construction.
pub const NEAR_SINGULAR_RATIO: f64 = 1e-8;

/// Spectral gains below this fraction of the peak are clamped to zero when
/// factoring.
pub const RANK_FLOOR: f64 = 1e-12;

const IMAG_RESIDUE_TOL: f64 = 1e-8;

/// Power-allocation scheme as named in campaigns and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Capacity-optimal in time and space; dispatches on the regime boundary.
    Optimal,
    /// Inverse-Gram optimum, valid for `1/(1+β) <= δ <= 1`.
    OptimalModerate,
    /// Sampled optimal spectrum, valid for `δ < 1/(1+β)`.
    OptimalSmall,
    /// Optimal temporal covariance with uniform spatial allocation.
    TimeInverse,
    /// White temporal covariance with spatial waterfilling.
    UniformFrequency,
    /// White temporal covariance with uniform spatial allocation.
    Uniform,
}

impl Scheme {
    pub const FIGURE_SET: [Scheme; 4] = [
        Scheme::Optimal,
        Scheme::TimeInverse,
        Scheme::UniformFrequency,
        Scheme::Uniform,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Optimal => "optimal",
            Scheme::OptimalModerate => "optimal-moderate",
            Scheme::OptimalSmall => "optimal-small",
            Scheme::TimeInverse => "time-inverse",
            Scheme::UniformFrequency => "uniform-frequency",
            Scheme::Uniform => "uniform",
        }
    }

    pub fn spatial(&self) -> SpatialAllocation {
        match self {
            Scheme::Optimal
            | Scheme::OptimalModerate
            | Scheme::OptimalSmall
            | Scheme::UniformFrequency => SpatialAllocation::Waterfilling,
            Scheme::TimeInverse | Scheme::Uniform => SpatialAllocation::Uniform,
        }
    }

    /// Whether the scheme can be built at this acceleration factor.
    pub fn check_regime(&self, shape: &PulseShape) -> Result<()> {
        let boundary = shape.regime_boundary();
        match self {
            Scheme::OptimalModerate if shape.is_small_acceleration() => Err(Error::WrongRegime {
                delta: shape.delta(),
                boundary,
                expected: "moderate-acceleration (delta >= 1/(1+beta))",
            }),
            Scheme::OptimalSmall if !shape.is_small_acceleration() => Err(Error::WrongRegime {
                delta: shape.delta(),
                boundary,
                expected: "small-acceleration (delta < 1/(1+beta))",
            }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Scheme::Optimal,
            Scheme::OptimalModerate,
            Scheme::OptimalSmall,
            Scheme::TimeInverse,
            Scheme::UniformFrequency,
            Scheme::Uniform,
        ]
        .into_iter()
        .find(|sch| sch.label() == s)
        .ok_or_else(|| Error::config("schemes", format!("unknown scheme `{s}`")))
    }
}

/// How power is spread over transmit antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpatialAllocation {
    Waterfilling,
    Uniform,
}

/// Shape of `Σ` in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemporalShape {
    /// `G⁻¹` realized spectrally as `D diag(1/λ) Dᴴ`.
    InverseGram,
    /// Sampled optimal input spectrum, rank `Z`.
    OptimalSpectrum,
    /// Identity.
    White,
}

/// Transmit power constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PowerConstraint {
    /// Transmit power `P` fixed; `SNR_tx = P/σ₀²`.
    FixedTxSnr {
        power: f64,
        #[serde(default = "unit_noise")]
        sigma0_sq: f64,
    },
    /// Symbol energy `E` fixed; `SNR_rx = (E/T)/σ₀²`.
    FixedRxSnr {
        energy: f64,
        #[serde(default = "unit_noise")]
        sigma0_sq: f64,
    },
}

fn unit_noise() -> f64 {
    1.0
}

impl Default for PowerConstraint {
    fn default() -> Self {
        PowerConstraint::fixed_tx(1.0)
    }
}

impl PowerConstraint {
    pub fn fixed_tx(power: f64) -> Self {
        PowerConstraint::FixedTxSnr {
            power,
            sigma0_sq: 1.0,
        }
    }

    pub fn fixed_rx(energy: f64) -> Self {
        PowerConstraint::FixedRxSnr {
            energy,
            sigma0_sq: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (name, v, s) = match *self {
            PowerConstraint::FixedTxSnr { power, sigma0_sq } => ("power", power, sigma0_sq),
            PowerConstraint::FixedRxSnr { energy, sigma0_sq } => ("energy", energy, sigma0_sq),
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(name, format!("{v} must be positive")));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid("sigma0_sq", format!("{s} must be positive")));
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self {
            PowerConstraint::FixedTxSnr { .. } => "fixed-tx-snr",
            PowerConstraint::FixedRxSnr { .. } => "fixed-rx-snr",
        }
    }

    pub fn sigma0_sq(&self) -> f64 {
        match *self {
            PowerConstraint::FixedTxSnr { sigma0_sq, .. }
            | PowerConstraint::FixedRxSnr { sigma0_sq, .. } => sigma0_sq,
        }
    }

    /// Transmit power actually radiated at this `δ`: `P`, or `E/(δT)`.
    pub fn transmit_power(&self, shape: &PulseShape) -> f64 {
        match *self {
            PowerConstraint::FixedTxSnr { power, .. } => power,
            PowerConstraint::FixedRxSnr { energy, .. } => energy / shape.symbol_interval(),
        }
    }

    /// `δ`-independent reference used for the dB axis: `P`, or `E/T`.
    pub fn reference_power(&self, shape: &PulseShape) -> f64 {
        match *self {
            PowerConstraint::FixedTxSnr { power, .. } => power,
            PowerConstraint::FixedRxSnr { energy, .. } => energy / shape.symbol_period(),
        }
    }

    pub fn snr_tx(&self, shape: &PulseShape) -> f64 {
        self.transmit_power(shape) / self.sigma0_sq()
    }

    pub fn snr_rx(&self, shape: &PulseShape) -> f64 {
        self.transmit_power(shape) * shape.delta() / self.sigma0_sq()
    }
}

/// An `N × N` symbol covariance with its DFT-domain description.
#[derive(Debug, Clone)]
pub struct InputCovariance {
    scheme: Scheme,
    temporal: TemporalShape,
    constraint: PowerConstraint,
    spectrum: CovarianceSpectrum,
    /// `s_i`, centered bin order.
    profile: Vec<f64>,
    /// Per-symbol power `c`.
    power: f64,
    /// `c·δT`.
    power_scale: f64,
    symbol_interval: f64,
    first_column: Vec<f64>,
}

impl InputCovariance {
    fn from_profile(
        scheme: Scheme,
        temporal: TemporalShape,
        shape: &PulseShape,
        constraint: PowerConstraint,
        spectrum: CovarianceSpectrum,
        profile: Vec<f64>,
    ) -> Result<Self> {
        constraint.validate()?;
        let power = constraint.transmit_power(shape);
        let power_scale = power * shape.symbol_interval();
        let first_column = circulant_column(&profile, power_scale)?;
        Ok(InputCovariance {
            scheme,
            temporal,
            constraint,
            spectrum,
            profile,
            power,
            power_scale,
            symbol_interval: shape.symbol_interval(),
            first_column,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn temporal(&self) -> TemporalShape {
        self.temporal
    }

    pub fn spatial(&self) -> SpatialAllocation {
        self.scheme.spatial()
    }

    pub fn constraint(&self) -> PowerConstraint {
        self.constraint
    }

    pub fn spectrum(&self) -> &CovarianceSpectrum {
        &self.spectrum
    }

    /// Spectral profile `s_i` (before the `c·δT` scale), centered bin order.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// Nominal per-antenna power `c` (`P` or `E/(δT)`).
    pub fn power(&self) -> f64 {
        self.power
    }

    /// `c·δT`, the scalar in front of the spectral factorization.
    pub fn power_scale(&self) -> f64 {
        self.power_scale
    }

    pub fn symbol_interval(&self) -> f64 {
        self.symbol_interval
    }

    pub fn n(&self) -> usize {
        self.profile.len()
    }

    /// Number of bins with a nonzero profile entry.
    pub fn rank(&self) -> usize {
        let peak = self.profile.iter().copied().fold(0.0, f64::max);
        self.profile.iter().filter(|&&s| s > RANK_FLOOR * peak).count()
    }

    /// First column of the circulant `Σ`.
    pub fn first_column(&self) -> &[f64] {
        &self.first_column
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        let n = self.n();
        self.first_column[(r + n - c) % n]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |r, c| self.entry(r, c))
    }

    pub fn trace(&self) -> f64 {
        self.first_column[0] * self.n() as f64
    }

    /// `trace(Σ G)`, the expected energy of the finite linear frame.
    pub fn trace_with_gram(&self, gram: &GramMatrix) -> Result<f64> {
        let n = self.n();
        if gram.n() != n {
            return Err(Error::invalid(
                "gram",
                format!("dimension {} does not match covariance {n}", gram.n()),
            ));
        }
        // Σ_{a,b} Σ_ab G_ba grouped by lag k = a - b.
        let g = gram.first_row();
        let mut acc = n as f64 * self.first_column[0] * g[0];
        for (k, &gk) in g.iter().enumerate().skip(1) {
            let pairs = (n - k) as f64;
            acc += pairs * (self.first_column[k] + self.first_column[n - k]) * gk;
        }
        Ok(acc)
    }

    /// `trace(Σ G) / (N δT)`: mean power of the finite frame.
    pub fn frame_power(&self, gram: &GramMatrix) -> Result<f64> {
        Ok(self.trace_with_gram(gram)? / (self.n() as f64 * self.symbol_interval))
    }

    /// Mean of `(ΣG)_{aa}/δT` over the middle rows `[N/4, 3N/4)`, away from
    /// the frame edges.
    pub fn interior_power(&self, gram: &GramMatrix) -> f64 {
        let n = self.n();
        let g = gram.first_row();
        let rows = n / 4..(3 * n) / 4;
        let count = rows.len() as f64;
        let sum: f64 = rows
            .map(|a| {
                (0..n)
                    .map(|b| self.entry(a, b) * g[a.abs_diff(b)])
                    .sum::<f64>()
            })
            .sum();
        sum / (count * self.symbol_interval)
    }

    /// Frame power with `G` replaced by its circulant (DFT-diagonal)
    /// approximation: `c·Σ s_i λ_i / N`.
    pub fn asymptotic_power(&self) -> f64 {
        let n = self.n() as f64;
        self.power
            * self
                .profile
                .iter()
                .zip(&self.spectrum.lambdas)
                .map(|(s, l)| s * l)
                .sum::<f64>()
            / n
    }

    /// Write the spectral profile as CSV: `bin,f_n,lambda,profile,scale`.
    pub fn write_profile_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin", "f_n", "lambda", "profile", "scale"])?;
        let m = self.spectrum.half_len() as isize;
        for (k, (&s, &l)) in self.profile.iter().zip(&self.spectrum.lambdas).enumerate() {
            w.write_record([
                format!("{}", k as isize - m),
                format!("{:.9}", self.spectrum.f_grid[k]),
                format!("{l:.12e}"),
                format!("{s:.12e}"),
                format!("{:.12e}", self.power_scale),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `c[k] = (scale/N) Σ_i s_i e^{-j2π i k/N}` via FFT; the imaginary residue
/// must vanish because `s` is even in `i`.
fn circulant_column(profile: &[f64], scale: f64) -> Result<Vec<f64>> {
    let n = profile.len();
    let m = n / 2;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(profile[(k + m) % n], 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let peak = buf.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let resid = buf.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if resid > IMAG_RESIDUE_TOL * peak.max(f64::MIN_POSITIVE) {
        return Err(Error::invalid(
            "profile",
            format!("not even in frequency: imaginary residue {resid:.3e}"),
        ));
    }
    Ok(buf.iter().map(|z| z.re * scale / n as f64).collect())
}

/// Centered bin `i` to FFT slot `i mod N`.
fn to_fft_order(centered: &[f64]) -> Vec<f64> {
    let n = centered.len();
    let m = n / 2;
    (0..n).map(|k| centered[(k + m) % n]).collect()
}

/// Optimum for `1/(1+β) <= δ <= 1`: `Σ = c·δT·G⁻¹`, spectrally.
pub fn optimal_covariance_moderate(
    shape: &PulseShape,
    n: usize,
    constraint: PowerConstraint,
) -> Result<InputCovariance> {
    Scheme::OptimalModerate.check_regime(shape)?;
    let spectrum = CovarianceSpectrum::new(shape, n)?;
    let ratio = spectrum.condition_ratio();
    if ratio < NEAR_SINGULAR_RATIO {
        return Err(Error::NearSingular { ratio });
    }
    let profile = spectrum.inv_lambdas.clone();
    InputCovariance::from_profile(
        Scheme::OptimalModerate,
        TemporalShape::InverseGram,
        shape,
        constraint,
        spectrum,
        profile,
    )
}

/// Optimum for `δ < 1/(1+β)`: rank-`Z` covariance from the sampled optimal
/// input spectrum `T / (G(f/δT)(1+β))`.
pub fn optimal_covariance_small(
    shape: &PulseShape,
    n: usize,
    constraint: PowerConstraint,
) -> Result<InputCovariance> {
    Scheme::OptimalSmall.check_regime(shape)?;
    let spectrum = CovarianceSpectrum::new(shape, n)?;
    let profile = spectrum.inv_lambdas.clone();
    InputCovariance::from_profile(
        Scheme::OptimalSmall,
        TemporalShape::OptimalSpectrum,
        shape,
        constraint,
        spectrum,
        profile,
    )
}

/// Covariance for any scheme. `Optimal` and `TimeInverse` dispatch on the
/// regime boundary; the two uniform schemes share `Σ = c·δT·I` and differ
/// only in their spatial allocation.
pub fn scheme_covariance(
    scheme: Scheme,
    shape: &PulseShape,
    n: usize,
    constraint: PowerConstraint,
) -> Result<InputCovariance> {
    scheme.check_regime(shape)?;
    let optimal = |shape: &PulseShape| {
        if shape.is_small_acceleration() {
            optimal_covariance_small(shape, n, constraint)
        } else {
            optimal_covariance_moderate(shape, n, constraint)
        }
    };
    let mut cov = match scheme {
        Scheme::OptimalModerate => optimal_covariance_moderate(shape, n, constraint)?,
        Scheme::OptimalSmall => optimal_covariance_small(shape, n, constraint)?,
        Scheme::Optimal | Scheme::TimeInverse => optimal(shape)?,
        Scheme::UniformFrequency | Scheme::Uniform => {
            let spectrum = CovarianceSpectrum::new(shape, n)?;
            let profile = vec![1.0; spectrum.n()];
            InputCovariance::from_profile(
                scheme,
                TemporalShape::White,
                shape,
                constraint,
                spectrum,
                profile,
            )?
        }
    };
    cov.scheme = scheme;
    Ok(cov)
}

/// Factor `C = D · diag(g)` with `C Cᴴ = Σ`; `g_i = √(c·δT·s_i)`.
#[derive(Clone)]
pub struct ColoringFactor {
    /// Gains in FFT slot order.
    gains: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for ColoringFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ColoringFactor")
            .field("n", &self.gains.len())
            .field("rank", &self.rank())
            .finish()
    }
}

/// Spectral square root of `cov`. Gains under `RANK_FLOOR × peak` are zero.
pub fn coloring_factor(cov: &InputCovariance) -> ColoringFactor {
    let peak = cov.profile.iter().copied().fold(0.0, f64::max);
    let gains = to_fft_order(&cov.profile)
        .into_iter()
        .map(|s| {
            if s > RANK_FLOOR * peak {
                (cov.power_scale * s).sqrt()
            } else {
                0.0
            }
        })
        .collect::<Vec<_>>();
    let fft = FftPlanner::new().plan_fft_forward(gains.len());
    ColoringFactor { gains, fft }
}

impl ColoringFactor {
    pub fn n(&self) -> usize {
        self.gains.len()
    }

    /// Gains in FFT slot order (slot `k` is bin `i ≡ k mod N`).
    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// Number of nonzero columns in the DFT basis.
    pub fn rank(&self) -> usize {
        self.gains.iter().filter(|&&g| g > 0.0).count()
    }

    /// `C w` in place: scale by the gains, then apply `D`.
    pub fn apply_in_place(&self, w: &mut [Complex64]) {
        assert_eq!(w.len(), self.n(), "white vector length");
        for (z, g) in w.iter_mut().zip(&self.gains) {
            *z *= g;
        }
        self.fft.process(w);
        let norm = 1.0 / (self.n() as f64).sqrt();
        w.iter_mut().for_each(|z| *z *= norm);
    }

    pub fn apply(&self, w: &[Complex64]) -> Vec<Complex64> {
        let mut out = w.to_vec();
        self.apply_in_place(&mut out);
        out
    }

    /// Dense `C`; only for inspection at small `N`.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.n();
        let norm = 1.0 / (n as f64).sqrt();
        DMatrix::from_fn(n, n, |m, k| {
            let phase = -2.0 * std::f64::consts::PI * ((m * k) % n) as f64 / n as f64;
            Complex64::from_polar(norm * self.gains[k], phase)
        })
    }
}
