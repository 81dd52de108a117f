//! Standard normal helpers.

use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// Latent values are clipped to this many standard deviations.
pub const LATENT_CLIP: f64 = 6.0;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn norm_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

pub fn norm_ppf(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        -SQRT_2 * erfc_inv(2.0 * p)
    }
}

pub fn clipped_ppf(p: f64) -> f64 {
    norm_ppf(p).clamp(-LATENT_CLIP, LATENT_CLIP)
}

/// Mean of a standard normal truncated to `[lo, hi]`.
pub fn truncated_mean(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    // Work in the lower tail, where the cdf difference keeps its precision.
    if lo + hi > 0.0 {
        return -truncated_mean(-hi, -lo);
    }
    let mass = norm_cdf(hi) - norm_cdf(lo);
    if mass <= 1e-300 {
        return 0.5 * (lo + hi);
    }
    ((norm_pdf(lo) - norm_pdf(hi)) / mass).clamp(lo, hi)
}
