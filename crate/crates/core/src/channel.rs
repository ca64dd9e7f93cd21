//! Rayleigh MIMO channels and spatial power allocation.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::{Error, Result};

/// Word offset between RNG lanes of one realization; 2^40 words per lane.
const LANE_STRIDE: u128 = 1 << 40;

/// Eigenmodes weaker than this fraction of the strongest count as null.
pub const GAIN_FLOOR: f64 = 1e-12;

/// Relative bisection tolerance on the water level.
pub const WATER_LEVEL_TOL: f64 = 1e-10;

/// Independent RNG for `(master seed, realization, lane)`.
///
/// Each realization owns a ChaCha stream; lanes are disjoint word ranges in
/// it (lane 0 is the channel, lane `1 + m` the symbols of mode `m`).
pub fn stream_rng(seed: u64, realization: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization);
    rng.set_word_pos(lane as u128 * LANE_STRIDE);
    rng
}

/// One draw of the `L × K` flat-fading channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub k_tx: usize,
    pub l_rx: usize,
    /// `L × K`, entries `h_lk`.
    pub h: DMatrix<Complex64>,
    pub seed: u64,
    pub realization: u64,
}

/// `CN(0, s²)` sample: real and imaginary parts each `N(0, s²/2)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// I.i.d. `CN(0, 1/K)` entries, drawn column-major from `rng`.
pub fn sample_channel<R: Rng + ?Sized>(k_tx: usize, l_rx: usize, rng: &mut R) -> Result<DMatrix<Complex64>> {
    if k_tx == 0 {
        return Err(Error::invalid("k_tx", "need at least one transmit antenna"));
    }
    if l_rx == 0 {
        return Err(Error::invalid("l_rx", "need at least one receive antenna"));
    }
    let var = 1.0 / k_tx as f64;
    Ok(DMatrix::from_fn(l_rx, k_tx, |_, _| complex_normal(rng, var)))
}

impl ChannelRealization {
    /// Channel for realization `index` under `seed`, drawn from lane 0.
    pub fn draw(k_tx: usize, l_rx: usize, seed: u64, realization: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, realization, 0);
        let h = sample_channel(k_tx, l_rx, &mut rng)?;
        Ok(ChannelRealization {
            k_tx,
            l_rx,
            h,
            seed,
            realization,
        })
    }

    /// Eigenmodes of `hᴴh`: squared singular values (descending) and the
    /// matching right singular vectors as columns of a `K × K` unitary.
    pub fn eigenmodes(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let gram = self.h.adjoint() * &self.h;
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..self.k_tx).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let gains = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let v = DMatrix::from_fn(self.k_tx, self.k_tx, |r, c| eig.eigenvectors[(r, order[c])]);
        (gains, v)
    }

    /// Rows `seed,realization,k_tx,l_rx,row,col,re,im`.
    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if header {
            w.write_record(["seed", "realization", "k_tx", "l_rx", "row", "col", "re", "im"])?;
        }
        for c in 0..self.k_tx {
            for r in 0..self.l_rx {
                let z = self.h[(r, c)];
                w.write_record([
                    self.seed.to_string(),
                    self.realization.to_string(),
                    self.k_tx.to_string(),
                    self.l_rx.to_string(),
                    r.to_string(),
                    c.to_string(),
                    format!("{:.12e}", z.re),
                    format!("{:.12e}", z.im),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Spatial allocation and the resulting per-antenna powers.
#[derive(Debug, Clone, Serialize)]
pub struct AntennaPowerProfile {
    /// `p_m`, one per eigenmode (strongest first).
    pub mode_powers: Vec<f64>,
    /// `K × K` unitary spatial precoder; column `m` feeds mode `m`.
    #[serde(skip)]
    pub precoder: DMatrix<Complex64>,
    /// `P_k = Σ_m |V_km|² p_m`.
    pub per_antenna: Vec<f64>,
    /// Final water level, when waterfilling ran.
    pub water_level: Option<f64>,
    /// The channel had no usable gain; the whole budget went to mode 0.
    pub degenerate: bool,
}

impl AntennaPowerProfile {
    fn from_modes(mode_powers: Vec<f64>, precoder: DMatrix<Complex64>, water_level: Option<f64>, degenerate: bool) -> Self {
        let k = precoder.nrows();
        let per_antenna = (0..k)
            .map(|r| {
                mode_powers
                    .iter()
                    .enumerate()
                    .map(|(m, p)| precoder[(r, m)].norm_sqr() * p)
                    .sum()
            })
            .collect();
        AntennaPowerProfile {
            mode_powers,
            precoder,
            per_antenna,
            water_level,
            degenerate,
        }
    }

    pub fn k_tx(&self) -> usize {
        self.per_antenna.len()
    }

    pub fn total_power(&self) -> f64 {
        self.mode_powers.iter().sum()
    }

    /// Number of modes carrying power.
    pub fn active_modes(&self) -> usize {
        self.mode_powers.iter().filter(|&&p| p > 0.0).count()
    }
}

/// Water-filling powers `max(0, μ − σ₀²/g_m)` for channel gains `g_m = s_m²`.
///
/// Returns `(powers, μ)`, or `None` when every gain is zero.
pub fn waterfill(gains: &[f64], total_power: f64, sigma0_sq: f64) -> Option<(Vec<f64>, f64)> {
    let floors: Vec<f64> = gains
        .iter()
        .map(|&g| if g > 0.0 { sigma0_sq / g } else { f64::INFINITY })
        .collect();
    let base = floors.iter().copied().fold(f64::INFINITY, f64::min);
    if !base.is_finite() {
        return None;
    }
    let filled = |mu: f64| -> f64 { floors.iter().map(|&f| (mu - f).max(0.0)).sum() };
    let (mut lo, mut hi) = (base, base + total_power);
    while hi - lo > WATER_LEVEL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if filled(mid) < total_power {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Exact level from the active set found by bisection.
    let mu_b = 0.5 * (lo + hi);
    let active: Vec<f64> = floors.iter().copied().filter(|&f| f < mu_b).collect();
    let mu = (total_power + active.iter().sum::<f64>()) / active.len() as f64;
    let powers = floors.iter().map(|&f| (mu - f).max(0.0)).collect();
    Some((powers, mu))
}

/// Waterfilling over the eigenmodes of `ch`; precoder = right singular vectors.
pub fn spatial_waterfilling(ch: &ChannelRealization, total_power: f64, sigma0_sq: f64) -> Result<AntennaPowerProfile> {
    check_power(total_power)?;
    if !(sigma0_sq > 0.0 && sigma0_sq.is_finite()) {
        return Err(Error::invalid("sigma0_sq", format!("{sigma0_sq} must be positive")));
    }
    let (gains, v) = ch.eigenmodes();
    let peak = gains.first().copied().unwrap_or(0.0);
    let usable: Vec<f64> = gains
        .iter()
        .map(|&g| if g > GAIN_FLOOR * peak { g } else { 0.0 })
        .collect();
    match waterfill(&usable, total_power, sigma0_sq) {
        Some((powers, mu)) => Ok(AntennaPowerProfile::from_modes(powers, v, Some(mu), false)),
        None => {
            log::warn!(
                "channel realization {} has no usable gain; placing the full budget on mode 0",
                ch.realization
            );
            let mut powers = vec![0.0; ch.k_tx];
            powers[0] = total_power;
            Ok(AntennaPowerProfile::from_modes(powers, v, None, true))
        }
    }
}

/// `P/K` per antenna through an identity precoder.
pub fn uniform_spatial(k_tx: usize, total_power: f64) -> Result<AntennaPowerProfile> {
    if k_tx == 0 {
        return Err(Error::invalid("k_tx", "need at least one transmit antenna"));
    }
    check_power(total_power)?;
    let p = total_power / k_tx as f64;
    Ok(AntennaPowerProfile::from_modes(
        vec![p; k_tx],
        DMatrix::identity(k_tx, k_tx),
        None,
        false,
    ))
}

fn check_power(total_power: f64) -> Result<()> {
    if total_power > 0.0 && total_power.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("total_power", format!("{total_power} must be positive")))
    }
}
