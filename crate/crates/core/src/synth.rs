//! Colored Gaussian symbol blocks, waveform synthesis and the per-phase
//! variance of the resulting cyclostationary process.
//!
//! Two synthesizers are provided. [`synthesize_waveform`] overlap-adds the
//! truncated sampled pulse and marks `span` periods at each frame end as
//! guard. [`CircularSynthesizer`] treats the block as one period of a
//! periodic symbol stream and evaluates the exact band-limited waveform by
//! FFT, so every sample is interior.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::channel::complex_normal;
use crate::covariance::{ColoringFactor, InputCovariance, Scheme};
use crate::pulse::{PulseShape, SampledPulse};
use crate::{Error, Result};

/// How a symbol block is turned into a waveform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Synthesis {
    /// Periodic symbol stream, exact band-limited pulse, no edges.
    #[default]
    Circular,
    /// Overlap-add of the truncated pulse; `span` guard periods per side.
    Linear,
}

/// One block of `N` symbols `a = C w`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub a: Vec<Complex64>,
    pub scheme: Scheme,
}

impl SymbolBlock {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn real(&self) -> Vec<f64> {
        self.a.iter().map(|z| z.re).collect()
    }

    pub fn imag(&self) -> Vec<f64> {
        self.a.iter().map(|z| z.im).collect()
    }
}

/// Draw `w ~ CN(0, I)` and return `C w`.
pub fn draw_colored_symbols<R: Rng + ?Sized>(cov: &InputCovariance, factor: &ColoringFactor, rng: &mut R) -> SymbolBlock {
    let mut w: Vec<Complex64> = (0..factor.n()).map(|_| complex_normal(rng, 1.0)).collect();
    factor.apply_in_place(&mut w);
    SymbolBlock {
        a: w,
        scheme: cov.scheme(),
    }
}

/// Waveform samples on the grid `t = j·δT/Q`.
#[derive(Debug, Clone)]
pub struct WaveformFrame {
    pub samples: Vec<Complex64>,
    /// `Q`, samples per symbol interval.
    pub phase_count: usize,
    /// Power `P_k` used to normalize PAPR.
    pub nominal_power: f64,
    /// Symbol intervals excluded at each end.
    pub edge_guard: usize,
    pub symbol_interval: f64,
}

impl WaveformFrame {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Index range of samples outside the guards.
    pub fn interior_range(&self) -> std::ops::Range<usize> {
        let g = self.edge_guard * self.phase_count;
        g..self.samples.len().saturating_sub(g).max(g)
    }

    pub fn interior(&self) -> &[Complex64] {
        &self.samples[self.interior_range()]
    }

    pub fn interior_mean_power(&self) -> f64 {
        let s = self.interior();
        s.iter().map(|z| z.norm_sqr()).sum::<f64>() / s.len().max(1) as f64
    }

    /// `|x|² / P_k` over the interior.
    pub fn interior_papr(&self) -> Vec<f64> {
        self.interior()
            .iter()
            .map(|z| z.norm_sqr() / self.nominal_power)
            .collect()
    }

    /// Rows `t,re,im,abs2`; guard samples included.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "re", "im", "abs2"])?;
        let step = self.symbol_interval / self.phase_count as f64;
        for (j, z) in self.samples.iter().enumerate() {
            w.write_record([
                format!("{:.9e}", j as f64 * step),
                format!("{:.12e}", z.re),
                format!("{:.12e}", z.im),
                format!("{:.12e}", z.norm_sqr()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Overlap-add `Σ_n a[n] p(t − nδT)` with the truncated sampled pulse.
///
/// Symbol `n` sits at sample `nQ`; the frame has `N·Q` samples and the
/// first and last `span` periods are guard.
pub fn synthesize_waveform(block: &SymbolBlock, pulse: &SampledPulse, nominal_power: f64) -> Result<WaveformFrame> {
    let n = block.len();
    let q = pulse.oversampling();
    let span = pulse.span();
    if n <= 2 * span {
        return Err(Error::FrameTooShort { symbols: n, guard: span });
    }
    let len = n * q;
    let taps = pulse.taps();
    let c = pulse.center() as isize;
    let mut samples = vec![Complex64::new(0.0, 0.0); len];
    for (k, &a) in block.a.iter().enumerate() {
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let origin = (k * q) as isize - c;
        let lo = (-origin).max(0) as usize;
        let hi = taps.len().min((len as isize - origin).max(0) as usize);
        for (i, &p) in taps.iter().enumerate().take(hi).skip(lo) {
            samples[(origin + i as isize) as usize] += a * p;
        }
    }
    Ok(WaveformFrame {
        samples,
        phase_count: q,
        nominal_power,
        edge_guard: span,
        symbol_interval: pulse.step() * q as f64,
    })
}

/// Exact periodic synthesis by FFT.
///
/// With `A = FFT_N(a)`, the waveform of the `N`-periodic symbol stream has
/// Fourier-series coefficients `c_k = A[k mod N]·√G(k/(NδT))/(NδT)` on the
/// band `|k| <= Nδ(1+β)/2`; an unnormalized inverse FFT of length `N·Q`
/// evaluates it at `t = jδT/Q`.
#[derive(Clone)]
pub struct CircularSynthesizer {
    n: usize,
    q: usize,
    symbol_interval: f64,
    /// `(slot in the N·Q grid, symbol bin, weight)`.
    taps: Vec<(usize, usize, f64)>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CircularSynthesizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CircularSynthesizer")
            .field("n", &self.n)
            .field("q", &self.q)
            .field("band_bins", &self.taps.len())
            .finish()
    }
}

impl CircularSynthesizer {
    pub fn new(shape: &PulseShape, n: usize, q: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n_symbols", "must be positive"));
        }
        if q == 0 {
            return Err(Error::invalid("oversampling", "must be positive"));
        }
        let len = n * q;
        let period = n as f64 * shape.symbol_interval();
        let edge = (1.0 + shape.beta()) / (2.0 * shape.symbol_period());
        let kmax = (edge * period).floor() as i64;
        if 2 * kmax >= len as i64 {
            return Err(Error::invalid(
                "oversampling",
                format!("Q = {q} does not cover the signal band (need Q > δ(1+β))"),
            ));
        }
        let taps = (-kmax..=kmax)
            .filter_map(|k| {
                let g = shape.spectrum(k as f64 / period);
                (g > 0.0).then(|| {
                    (
                        k.rem_euclid(len as i64) as usize,
                        k.rem_euclid(n as i64) as usize,
                        g.sqrt() / period,
                    )
                })
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(CircularSynthesizer {
            n,
            q,
            symbol_interval: shape.symbol_interval(),
            taps,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(len),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn oversampling(&self) -> usize {
        self.q
    }

    /// Samples of one period, `N·Q` values.
    pub fn synthesize(&self, a: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(a.len(), self.n, "symbol block length");
        let mut spec = a.to_vec();
        self.forward.process(&mut spec);
        let mut out = vec![Complex64::new(0.0, 0.0); self.n * self.q];
        for &(slot, bin, w) in &self.taps {
            out[slot] += spec[bin] * w;
        }
        self.inverse.process(&mut out);
        out
    }

    pub fn synthesize_frame(&self, block: &SymbolBlock, nominal_power: f64) -> WaveformFrame {
        WaveformFrame {
            samples: self.synthesize(&block.a),
            phase_count: self.q,
            nominal_power,
            edge_guard: 0,
            symbol_interval: self.symbol_interval,
        }
    }
}

/// `q_τ` two ways: the DFT of the sampled phase vector and, in the
/// small-acceleration regime, the closed form from the pulse spectrum.
#[derive(Debug, Clone)]
pub struct PhaseSpectrum {
    pub tau: f64,
    /// `(1/√N) Σ_m p(τ − mδT) e^{-j2πmn/N}`, `n = -M..=M`.
    pub direct: Vec<Complex64>,
    /// `(1/(√N δT)) √G(n/(NδT)) e^{-j2πnτ/(NδT)}`, `n = -M..=M`.
    pub closed: Vec<Complex64>,
}

impl PhaseSpectrum {
    /// `max |direct − closed|` relative to `max |closed|`, over the bins
    /// where the closed form is nonzero.
    pub fn support_gap(&self) -> f64 {
        let peak = self.closed.iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.direct
            .iter()
            .zip(&self.closed)
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(d, c)| (d - c).norm())
            .fold(0.0, f64::max)
            / peak
    }
}

/// DFT of the phase vector `p_τ`, `n = -M..=M` with `N = 2M+1`.
pub fn direct_phase_spectrum(shape: &PulseShape, tau: f64, n: usize) -> Result<Vec<Complex64>> {
    if n.is_multiple_of(2) || n < 3 {
        return Err(Error::invalid("n", format!("{n} must be odd and >= 3")));
    }
    let m = n / 2;
    let pv = shape.phase_vector(tau, m)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (i, &v) in pv.values.iter().enumerate() {
        let offset = i as isize - m as isize;
        buf[offset.rem_euclid(n as isize) as usize] = Complex64::new(v, 0.0);
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = 1.0 / (n as f64).sqrt();
    Ok((0..n).map(|k| buf[(k + m + 1) % n] * norm).collect())
}

/// `q_τ` with both the direct transform and the closed form.
///
/// The closed form assumes the aliases of `G` do not overlap, so it is only
/// offered for `δ < 1/(1+β)`.
pub fn dft_phase_vector(shape: &PulseShape, tau: f64, n: usize) -> Result<PhaseSpectrum> {
    if !shape.is_small_acceleration() {
        return Err(Error::WrongRegime {
            delta: shape.delta(),
            boundary: shape.regime_boundary(),
            expected: "small-acceleration (delta < 1/(1+beta))",
        });
    }
    let direct = direct_phase_spectrum(shape, tau, n)?;
    let dt = shape.symbol_interval();
    let period = n as f64 * dt;
    let m = (n / 2) as isize;
    let scale = 1.0 / ((n as f64).sqrt() * dt);
    let closed = (-m..=m)
        .map(|k| {
            let f = k as f64 / period;
            Complex64::from_polar(scale * shape.spectrum(f).sqrt(), -2.0 * PI * f * tau)
        })
        .collect();
    Ok(PhaseSpectrum { tau, direct, closed })
}

/// `p_τᴴ Σ p_τ = c·δT·Σ_n s_n |(q_τ)_n|²`.
pub fn instantaneous_variance(cov: &InputCovariance, shape: &PulseShape, tau: f64) -> Result<f64> {
    let q = direct_phase_spectrum(shape, tau, cov.n())?;
    Ok(cov.power_scale()
        * q.iter()
            .zip(cov.profile())
            .map(|(z, s)| z.norm_sqr() * s)
            .sum::<f64>())
}

/// Variance at the `Q` sampling phases `τ_j = jδT/Q`.
pub fn variance_profile(cov: &InputCovariance, shape: &PulseShape, q: usize) -> Result<Vec<f64>> {
    let dt = shape.symbol_interval();
    (0..q)
        .map(|j| instantaneous_variance(cov, shape, j as f64 * dt / q as f64))
        .collect()
}
