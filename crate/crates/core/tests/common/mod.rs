//! Textbook reference formulas, written independently of the crate.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Evaluate `f` at `t`, or as the two-sided mean at `t ± h` when the
/// direct value is not finite.
fn limit(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    let v = f(t);
    if v.is_finite() {
        v
    } else {
        0.5 * (f(t - h) + f(t + h))
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Unit-energy root-raised-cosine pulse.
pub fn rrc(t: f64, beta: f64, period: f64) -> f64 {
    let raw = |t: f64| {
        let x = t / period;
        if x == 0.0 {
            return (1.0 - beta + 4.0 * beta / PI) / period.sqrt();
        }
        let num = (PI * x * (1.0 - beta)).sin() + 4.0 * beta * x * (PI * x * (1.0 + beta)).cos();
        let den = PI * x * (1.0 - (4.0 * beta * x).powi(2));
        num / den / period.sqrt()
    };
    let x = t / period;
    if beta > 0.0 && ((4.0 * beta * x).abs() - 1.0).abs() < 1e-10 {
        return 0.5 * (raw(t - 1e-7 * period) + raw(t + 1e-7 * period));
    }
    limit(raw, t, 1e-7 * period)
}

/// Raised-cosine autocorrelation (unit at zero).
pub fn rc(t: f64, beta: f64, period: f64) -> f64 {
    let raw = |t: f64| {
        let x = t / period;
        sinc(x) * (PI * beta * x).cos() / (1.0 - (2.0 * beta * x).powi(2))
    };
    let x = t / period;
    if beta > 0.0 && ((2.0 * beta * x).abs() - 1.0).abs() < 1e-10 {
        return 0.5 * (raw(t - 1e-7 * period) + raw(t + 1e-7 * period));
    }
    limit(raw, t, 1e-7 * period)
}

/// Raised-cosine spectrum.
pub fn rc_spectrum(f: f64, beta: f64, period: f64) -> f64 {
    let a = f.abs();
    let f1 = (1.0 - beta) / (2.0 * period);
    let f2 = (1.0 + beta) / (2.0 * period);
    if a <= f1 {
        period
    } else if a <= f2 {
        0.5 * period * (1.0 + (PI * period / beta * (a - f1)).cos())
    } else {
        0.0
    }
}

/// Dense Gram matrix `G[r][c] = rc((r − c) δT)`.
pub fn gram(n: usize, delta: f64, beta: f64, period: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|r| {
            (0..n)
                .map(|c| rc((r as f64 - c as f64) * delta * period, beta, period))
                .collect()
        })
        .collect()
}

/// `exp(−γ / mean)`.
pub fn exponential_ccdf(gamma: f64, mean: f64) -> f64 {
    (-gamma / mean).exp()
}
