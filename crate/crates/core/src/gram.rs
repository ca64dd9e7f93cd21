//! Toeplitz Gram matrix of the FTN pulse train and its generating function.
//!
//! `(G)_{n,m} = g((n-m)δT)`. Asymptotically its eigenvectors are DFT vectors
//! and its eigenvalues are uniform samples of the folded spectrum
//!
//! ```text
//! λ(f) = (1/δT) Σ_m G((f - m)/δT),   f ∈ [-1/2, 1/2)
//! ```
//!
//! Spectral vectors throughout the crate are stored in centered bin order:
//! slot `i + M` holds bin `i = -M..=M` at normalized frequency `i/N`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::pulse::PulseShape;
use crate::{Error, Result};

/// Relative floor below which a folded-spectrum sample counts as zero.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

fn check_odd(n: usize) -> Result<usize> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::invalid(
            "n",
            format!("{n}: dimension must be odd (N = 2M+1) and at least 3"),
        ));
    }
    Ok(n / 2)
}

/// Symmetric Toeplitz Gram matrix, stored by its first row.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    first_row: Vec<f64>,
    delta: f64,
    beta: f64,
    symbol_period: f64,
}

/// Build `G` for an `n × n` frame. `n` must be odd.
pub fn build_gram(shape: &PulseShape, n: usize) -> Result<GramMatrix> {
    check_odd(n)?;
    let dt = shape.symbol_interval();
    let first_row = (0..n).map(|k| shape.autocorrelation(k as f64 * dt)).collect();
    Ok(GramMatrix {
        first_row,
        delta: shape.delta(),
        beta: shape.beta(),
        symbol_period: shape.symbol_period(),
    })
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn symbol_period(&self) -> f64 {
        self.symbol_period
    }

    /// `g[r - c]`.
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.first_row[r.abs_diff(c)]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |r, c| self.entry(r, c))
    }

    /// Eigenvalues from a dense symmetric eigensolver, ascending. O(N³).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.to_dense());
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Folded, scaled raised-cosine spectrum at normalized frequency `f_n`.
///
/// Periodic with period one. The alias sum runs over `|m| <= ceil(1/δ)+1`,
/// which is exact because `G` vanishes beyond `(1+β)/(2T)`.
pub fn generating_function(shape: &PulseShape, f_n: f64) -> f64 {
    let f = f_n - f_n.round();
    let dt = shape.symbol_interval();
    let reach = (1.0 / shape.delta()).ceil() as i64 + 1;
    (-reach..=reach)
        .map(|m| shape.spectrum((f - m as f64) / dt))
        .sum::<f64>()
        / dt
}

/// Generating-function samples `λ_i = λ(i/N)`, `i = -M..=M`.
pub fn asymptotic_eigenvalues(shape: &PulseShape, n: usize) -> Result<Vec<f64>> {
    let m = check_odd(n)? as isize;
    Ok((-m..=m)
        .map(|i| generating_function(shape, i as f64 / n as f64))
        .collect())
}

fn support_mask(lambdas: &[f64], threshold: f64) -> Vec<bool> {
    let peak = lambdas.iter().copied().fold(0.0, f64::max);
    lambdas.iter().map(|&l| l > threshold * peak).collect()
}

/// Number `Z` of folded-spectrum samples above `threshold × peak`.
///
/// Equals `n` when `δ >= 1/(1+β)`. The count is odd because the spectrum
/// is even and bin 0 is always in the support.
pub fn support_count(shape: &PulseShape, n: usize, threshold: f64) -> Result<usize> {
    let lambdas = asymptotic_eigenvalues(shape, n)?;
    if !shape.is_small_acceleration() {
        return Ok(n);
    }
    Ok(support_mask(&lambdas, threshold).iter().filter(|&&b| b).count())
}

/// Asymptotic spectral description of `G` and of the optimal `Σ` profile.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpectrum {
    /// `λ_i`, centered bin order.
    pub lambdas: Vec<f64>,
    /// Optimal inverse-spectrum samples: `1/λ_i` when `δ >= 1/(1+β)`,
    /// otherwise `T / (G(i/(NδT))(1+β))` on the support and 0 off it.
    pub inv_lambdas: Vec<f64>,
    pub z_count: usize,
    /// `i/N` per bin.
    pub f_grid: Vec<f64>,
}

impl CovarianceSpectrum {
    pub fn new(shape: &PulseShape, n: usize) -> Result<Self> {
        let half = check_odd(n)? as isize;
        let lambdas = asymptotic_eigenvalues(shape, n)?;
        let f_grid: Vec<f64> = (-half..=half).map(|i| i as f64 / n as f64).collect();
        let (inv_lambdas, z_count) = if shape.is_small_acceleration() {
            let mask = support_mask(&lambdas, SUPPORT_THRESHOLD);
            let dt = shape.symbol_interval();
            let t = shape.symbol_period();
            let inv = f_grid
                .iter()
                .zip(&mask)
                .map(|(&f, &inside)| {
                    if inside {
                        t / (shape.spectrum(f / dt) * (1.0 + shape.beta()))
                    } else {
                        0.0
                    }
                })
                .collect();
            (inv, mask.iter().filter(|&&b| b).count())
        } else {
            let inv = lambdas
                .iter()
                .map(|&l| if l > 0.0 { 1.0 / l } else { f64::INFINITY })
                .collect();
            (inv, n)
        };
        Ok(CovarianceSpectrum {
            lambdas,
            inv_lambdas,
            z_count,
            f_grid,
        })
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn half_len(&self) -> usize {
        self.n() / 2
    }

    /// `min λ / max λ`.
    pub fn condition_ratio(&self) -> f64 {
        let max = self.lambdas.iter().copied().fold(f64::MIN, f64::max);
        let min = self.lambdas.iter().copied().fold(f64::MAX, f64::min);
        min / max
    }
}

/// Deviation between two spectra compared as sorted sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDeviation {
    /// Mean of `|a_(k) - b_(k)| / max(a)`.
    pub mean: f64,
    /// Largest such term.
    pub sup: f64,
}

/// Compare sorted asymptotic samples against sorted exact eigenvalues.
///
/// Deviations are normalized by the asymptotic peak: below the regime
/// boundary a fraction of both spectra sits at (numerical) zero, where
/// entrywise relative error is undefined.
pub fn sorted_spectrum_deviation(asymptotic: &[f64], exact: &[f64]) -> SpectralDeviation {
    assert_eq!(asymptotic.len(), exact.len(), "spectra differ in length");
    let mut a = asymptotic.to_vec();
    let mut b = exact.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let peak = a.last().copied().unwrap_or(1.0).abs().max(f64::MIN_POSITIVE);
    let devs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - y).abs() / peak).collect();
    SpectralDeviation {
        mean: devs.iter().sum::<f64>() / devs.len() as f64,
        sup: devs.iter().copied().fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::DEFAULT_SYMBOL_PERIOD;
    use approx::assert_abs_diff_eq;

    fn shape(beta: f64, delta: f64) -> PulseShape {
        PulseShape::new(beta, DEFAULT_SYMBOL_PERIOD, delta).unwrap()
    }

    #[test]
    fn gram_rejects_even_dimension() {
        assert!(build_gram(&shape(0.3, 0.8), 4).is_err());
        assert!(build_gram(&shape(0.3, 0.8), 1).is_err());
        assert!(build_gram(&shape(0.3, 0.8), 5).is_ok());
    }

    #[test]
    fn gram_is_identity_at_nyquist() {
        for beta in [0.0, 0.3, 1.0] {
            let g = build_gram(&shape(beta, 1.0), 9).unwrap();
            assert_eq!(g.first_row()[0], 1.0);
            for &v in &g.first_row()[1..] {
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn gram_is_symmetric_toeplitz_psd() {
        let g = build_gram(&shape(0.3, 0.5), 41).unwrap();
        let d = g.to_dense();
        assert_eq!(d, d.transpose());
        for r in 1..41 {
            for c in 1..41 {
                assert_eq!(d[(r, c)], d[(r - 1, c - 1)]);
            }
        }
        assert!(g.eigenvalues()[0] > -1e-10);
    }

    #[test]
    fn generating_function_brick_wall_is_flat() {
        let s = shape(0.0, 1.0);
        for f in [-0.5, -0.3, 0.0, 0.1, 0.49] {
            assert_abs_diff_eq!(generating_function(&s, f), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn generating_function_support_gap() {
        let s = shape(0.3, 0.5);
        // support is |f| <= 0.325
        for f in [0.33, 0.4, 0.5, -0.45] {
            assert_eq!(generating_function(&s, f), 0.0);
        }
        assert!(generating_function(&s, 0.32) > 0.0);
    }

    #[test]
    fn generating_function_even_and_periodic() {
        let s = shape(0.3, 0.8);
        for f in [0.05, 0.2, 0.31, 0.47] {
            let v = generating_function(&s, f);
            assert_abs_diff_eq!(v, generating_function(&s, -f), epsilon = 1e-12);
            assert_abs_diff_eq!(v, generating_function(&s, f + 1.0), epsilon = 1e-12);
            assert_abs_diff_eq!(v, generating_function(&s, f - 3.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn asymptotic_eigenvalues_nyquist_and_mean() {
        let ones = asymptotic_eigenvalues(&shape(0.3, 1.0), 101).unwrap();
        assert!(ones.iter().all(|&l| (l - 1.0).abs() < 1e-12));

        for delta in [0.5, 0.8] {
            let n = 501;
            let l = asymptotic_eigenvalues(&shape(0.3, delta), n).unwrap();
            let mean = l.iter().sum::<f64>() / n as f64;
            assert_abs_diff_eq!(mean, 1.0, epsilon = 2.0 / n as f64);
        }
    }

    #[test]
    fn support_count_matches_bandwidth() {
        let s = shape(0.3, 0.5);
        let z = support_count(&s, 2001, SUPPORT_THRESHOLD).unwrap();
        assert_eq!(z % 2, 1);
        assert!((z as f64 / 2001.0 - 0.65).abs() <= 2.0 / 2001.0);
        assert!(z == 1299 || z == 1301);

        assert_eq!(support_count(&shape(0.3, 0.8), 2001, SUPPORT_THRESHOLD).unwrap(), 2001);

        let mut last = usize::MAX;
        for delta in [0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1] {
            let z = support_count(&shape(0.3, delta), 1001, SUPPORT_THRESHOLD).unwrap();
            assert!(z < last);
            assert!((z as f64 / 1001.0 - delta * 1.3).abs() <= 2.0 / 1001.0);
            last = z;
        }
    }

    #[test]
    fn asymptotic_spectrum_positive_above_boundary() {
        for delta in [0.77, 0.8, 0.9, 1.0] {
            let l = asymptotic_eigenvalues(&shape(0.3, delta), 1001).unwrap();
            assert!(l.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn covariance_spectrum_small_regime() {
        let s = shape(0.3, 0.5);
        let spec = CovarianceSpectrum::new(&s, 2001).unwrap();
        let m = spec.half_len();
        assert_eq!(spec.inv_lambdas.iter().filter(|&&v| v > 0.0).count(), spec.z_count);
        // centre bin: T / (G(0)(1+β)) = 1/(1+β)
        let centre = s.symbol_period() / (s.spectrum(0.0) * 1.3);
        assert_abs_diff_eq!(spec.inv_lambdas[m], centre, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.inv_lambdas[m], 1.0 / 1.3, epsilon = 1e-12);
        for (i, &v) in spec.inv_lambdas.iter().enumerate() {
            assert_eq!(v, spec.inv_lambdas[2 * m - i]);
            assert_eq!(v == 0.0, spec.lambdas[i] <= SUPPORT_THRESHOLD * spec.lambdas[m]);
        }
    }

    #[test]
    fn sorted_deviation_is_permutation_invariant() {
        let a = [3.0, 1.0, 2.0];
        let b = [1.0, 2.0, 3.3];
        let d = sorted_spectrum_deviation(&a, &b);
        assert_abs_diff_eq!(d.sup, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(d.mean, 0.1 / 3.0, epsilon = 1e-12);
    }
}
