//! Gaussian kernel density estimate on [0, 1] with reflection at both ends.
//!
//! A sample `p_1..p_m` is extended to `{-p_i, p_i, 2 - p_i}`, a Gaussian KDE is
//! fitted to those `3m` centres with Silverman's bandwidth, and the result is
//! truncated to [0, 1] and renormalised. The normaliser is the exact kernel
//! mass inside [0, 1], computed from normal CDF differences.

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// Kernels further than this many bandwidths beyond the nearest one contribute
/// nothing representable relative to it.
const KERNEL_REACH: f64 = 40.0;
/// Smallest bandwidth the degenerate-sample fallback will return.
pub const MIN_BANDWIDTH: f64 = 1e-3;

/// A fitted density on [0, 1]. An empty sample gives the uniform density.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel {
    // sorted extended sample; empty for the uniform model
    centers: Vec<f64>,
    bandwidth: f64,
    normalizer: f64,
}

impl KdeModel {
    pub fn uniform() -> Self {
        Self {
            centers: Vec::new(),
            bandwidth: f64::NAN,
            normalizer: 1.0,
        }
    }

    /// Fits the reflected KDE to `past`, whose values should lie in [0, 1].
    pub fn fit(past: &[f64]) -> Self {
        let mut sorted = past.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self::fit_sorted(&sorted)
    }

    /// Same as [`KdeModel::fit`] for an already ascending sample.
    pub fn fit_sorted(sorted: &[f64]) -> Self {
        debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        debug_assert!(sorted.iter().all(|p| (0.0..=1.0).contains(p)));
        if sorted.is_empty() {
            return Self::uniform();
        }
        let centers = reflect_sorted(sorted);
        let bandwidth = silverman_sorted(&centers);
        let mass: f64 = centers
            .iter()
            .map(|&c| normal_mass((0.0 - c) / bandwidth, (1.0 - c) / bandwidth))
            .sum();
        Self {
            normalizer: mass / centers.len() as f64,
            centers,
            bandwidth,
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.centers.is_empty()
    }

    /// Number of original sample points (a third of the extended sample).
    pub fn sample_len(&self) -> usize {
        self.centers.len() / 3
    }

    /// Bandwidth, or `None` for the uniform model.
    pub fn bandwidth(&self) -> Option<f64> {
        (!self.is_uniform()).then_some(self.bandwidth)
    }

    /// Fraction of the extended-sample kernel mass lying in [0, 1].
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Density at `p`; zero outside [0, 1].
    pub fn density(&self, p: f64) -> f64 {
        self.ln_density(p).exp()
    }

    /// Log density at `p`; `-inf` outside [0, 1].
    ///
    /// Computed relative to the nearest centre, so points many bandwidths away
    /// from every centre still get a finite value.
    pub fn ln_density(&self, p: f64) -> f64 {
        if !(0.0..=1.0).contains(&p) {
            return f64::NEG_INFINITY;
        }
        if self.is_uniform() {
            return 0.0;
        }
        let h = self.bandwidth;
        let c = &self.centers;
        let at = c.partition_point(|&x| x < p);
        let nearest = [at.checked_sub(1), (at < c.len()).then_some(at)]
            .into_iter()
            .flatten()
            .map(|i| (p - c[i]).abs())
            .fold(f64::INFINITY, f64::min);
        let reach = nearest + KERNEL_REACH * h;
        let lo = c.partition_point(|&x| x < p - reach);
        let hi = c.partition_point(|&x| x <= p + reach);
        let u0 = nearest / h;
        let shift = -0.5 * u0 * u0;
        let sum: f64 = c[lo..hi]
            .iter()
            .map(|&x| {
                let u = (p - x) / h;
                (-0.5 * u * u - shift).exp()
            })
            .sum();
        shift + sum.ln() + (FRAC_1_SQRT_2PI / (c.len() as f64 * h * self.normalizer)).ln()
    }
}

/// `{-p, p, 2 - p}` for an ascending sample in [0, 1], itself ascending.
fn reflect_sorted(sorted: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * sorted.len());
    out.extend(sorted.iter().rev().map(|&p| -p));
    out.extend_from_slice(sorted);
    out.extend(sorted.iter().rev().map(|&p| 2.0 - p));
    out
}

/// Silverman's rule of thumb, `0.9 · min(sd, IQR/1.34) · m^(-1/5)`.
///
/// `sd` uses the `m - 1` denominator; quartiles interpolate linearly between
/// order statistics (position `(m - 1)·q`). If the minimum is zero, `sd` is
/// used alone; if that is also zero or undefined (a constant or single-point
/// sample, so every value equals `x_1`), the bandwidth is
/// `max(1e-3, 0.9·|x_1|·m^(-1/5))`.
pub fn silverman_bandwidth(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid("bandwidth needs a nonempty sample"));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("bandwidth sample contains non-finite values"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(silverman_sorted(&sorted))
}

fn silverman_sorted(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    let scale = (m as f64).powf(-0.2);
    let sd = sample_sd(sorted);
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let mut lo = sd.min(iqr / 1.34);
    if lo.is_nan() || lo <= 0.0 {
        lo = sd;
    }
    if lo.is_nan() || lo <= 0.0 {
        return fallback(sorted[0], m);
    }
    0.9 * lo * scale
}

fn fallback(first: f64, m: usize) -> f64 {
    (0.9 * first.abs() * (m as f64).powf(-0.2)).max(MIN_BANDWIDTH)
}

fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Quantile of an ascending sample by linear interpolation at `(m - 1)·q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Standard normal probability of the interval `[a, b]`.
pub fn normal_mass(a: f64, b: f64) -> f64 {
    // work in the tail on the side away from the bulk to avoid cancellation
    if a >= 0.0 {
        0.5 * (libm::erfc(a / std::f64::consts::SQRT_2) - libm::erfc(b / std::f64::consts::SQRT_2))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b / std::f64::consts::SQRT_2) - libm::erfc(-a / std::f64::consts::SQRT_2))
    } else {
        1.0 - 0.5 * (libm::erfc(-a / std::f64::consts::SQRT_2) + libm::erfc(b / std::f64::consts::SQRT_2))
    }
}
