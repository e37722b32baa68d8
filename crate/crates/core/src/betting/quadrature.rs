//! Log-space Gauss–Legendre quadrature for the power-mixture integral
//! `I(n, s) = ∫₀¹ ε^n · exp((ε − 1)·s) dε`.

use std::sync::OnceLock;

/// Nodes per panel.
const ORDER: usize = 16;
/// Panels per integral; `PANELS * ORDER` = 512 nodes.
const PANELS: usize = 32;
/// Integrand values below `max · e^-CUTOFF` are dropped from the integration window.
const CUTOFF: f64 = 60.0;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

// P_n(x) and P_n'(x) by the three-term recurrence
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

/// Log of the integrand without its constant `-s` term: `n·ln ε + ε·s`.
fn log_integrand(n: u64, s: f64, eps: f64) -> f64 {
    if n == 0 {
        eps * s
    } else {
        n as f64 * eps.ln() + eps * s
    }
}

/// `ln I(n, s)` for finite `s ≤ 0` (a sum of log p-values).
///
/// The log-integrand is concave, so its mass sits in one window around the
/// mode; that window is located by bisection and covered with 32 panels of
/// 16-point Gauss–Legendre, accumulated with a max-shift.
pub fn ln_mixture_integral(n: u64, s: f64) -> f64 {
    debug_assert!(!s.is_nan());
    let nf = n as f64;
    let mode = if s < 0.0 { (nf / -s).min(1.0) } else { 1.0 };
    let g = |e: f64| log_integrand(n, s, e);
    let peak = g(mode);
    let floor = peak - CUTOFF;

    let lo = if g(0.0) >= floor { 0.0 } else { bisect(&g, 0.0, mode, floor) };
    let hi = if g(1.0) >= floor { 1.0 } else { bisect(&g, 1.0, mode, floor) };

    let (nodes, weights) = rule();
    let width = (hi - lo) / PANELS as f64;
    let mut terms = Vec::with_capacity(PANELS * ORDER);
    for k in 0..PANELS {
        let a = lo + width * k as f64;
        let half = width / 2.0;
        let mid = a + half;
        for (x, w) in nodes.iter().zip(weights) {
            let e = mid + half * x;
            terms.push((w * half).ln() + g(e));
        }
    }
    log_sum_exp(&terms) - s
}

// finds e between `outside` (g < level) and `inside` (g >= level) with g(e) ≈ level
fn bisect(g: &impl Fn(f64) -> f64, mut outside: f64, mut inside: f64, level: f64) -> f64 {
    for _ in 0..64 {
        let mid = 0.5 * (outside + inside);
        if mid == outside || mid == inside {
            break;
        }
        if g(mid) >= level {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    outside
}

/// `ln Σ exp(xᵢ)`, stable for widely scaled terms.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact through degree 31
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((int - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn closed_forms() {
        // ∫ ε e^{1-ε} dε = e - 2
        let v = ln_mixture_integral(1, -1.0).exp();
        assert!((v - (std::f64::consts::E - 2.0)).abs() < 1e-13, "{v}");
        for n in 0..50u64 {
            let v = ln_mixture_integral(n, 0.0);
            assert!((v + ((n + 1) as f64).ln()).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn extreme_scales_stay_finite() {
        for &(n, s) in &[(10_000u64, -10_000.0), (10_000, -1.0), (10_000, -1e6), (1, -1e4), (0, -500.0)] {
            let v = ln_mixture_integral(n, s);
            assert!(v.is_finite(), "n={n} s={s} -> {v}");
        }
    }

    #[test]
    fn log_sum_exp_handles_empty_and_large() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
