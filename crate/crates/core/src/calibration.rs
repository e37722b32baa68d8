//! Synthetic streams and statistical oracles used to check validity and power.

use rand_distr::Beta;

use crate::betting::{BettingStrategy, StrategyKind};
use crate::error::{Error, Result};
use crate::rng::RngHandle;
use crate::types::{Label, LabeledExample};

/// An isotropic Gaussian class-conditional distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub mean: Vec<f64>,
    pub std: f64,
}

/// Switch to a new set of class distributions from example `at` (1-based) on.
#[derive(Debug, Clone, PartialEq)]
pub struct Changepoint {
    pub at: usize,
    pub classes: Vec<ClassSpec>,
}

/// Gaussian-mixture stream: each example picks a class uniformly at random and
/// draws its features from that class.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_examples: usize,
    pub classes: Vec<ClassSpec>,
    pub changepoint: Option<Changepoint>,
    pub seed: u64,
}

impl SynthConfig {
    /// `n_classes` unit-variance classes; class `k` sits `separation` away from
    /// the origin along axis `k mod dim` (further out on each wrap-around).
    pub fn gaussian_classes(n_examples: usize, n_classes: usize, dim: usize, separation: f64, std: f64, seed: u64) -> Self {
        let classes = (0..n_classes)
            .map(|k| {
                let mut mean = vec![0.0; dim];
                if let Some(wrap) = k.checked_div(dim) {
                    mean[k % dim] = separation * (1 + wrap) as f64;
                }
                ClassSpec { mean, std }
            })
            .collect();
        Self {
            n_examples,
            classes,
            changepoint: None,
            seed,
        }
    }

    /// Two classes at separation 2 with unit standard deviation.
    pub fn two_class(n_examples: usize, dim: usize, seed: u64) -> Self {
        Self::gaussian_classes(n_examples, 2, dim, 2.0, 1.0, seed)
    }

    /// From example `at` on, the first class's mean moves `shift` of its
    /// standard deviations along the first feature; other classes stay put.
    pub fn with_mean_shift(self, at: usize, shift: f64) -> Self {
        let mut classes = self.classes.clone();
        if let Some(c) = classes.first_mut() {
            if let Some(m) = c.mean.first_mut() {
                *m += shift * c.std;
            }
        }
        self.with_changepoint(at, classes)
    }

    /// From example `at` on, every coordinate of every class mean moves by
    /// `shift` of that class's standard deviations.
    pub fn with_translation(self, at: usize, shift: f64) -> Self {
        let classes = self
            .classes
            .iter()
            .map(|c| ClassSpec {
                mean: c.mean.iter().map(|m| m + shift * c.std).collect(),
                std: c.std,
            })
            .collect();
        self.with_changepoint(at, classes)
    }

    pub fn with_changepoint(mut self, at: usize, classes: Vec<ClassSpec>) -> Self {
        self.changepoint = Some(Changepoint { at, classes });
        self
    }

    pub fn dim(&self) -> usize {
        self.classes.first().map_or(0, |c| c.mean.len())
    }

    pub fn validate(&self) -> Result<()> {
        check_classes(&self.classes, None)?;
        if let Some(cp) = &self.changepoint {
            if cp.at <= 1 || cp.at >= self.n_examples {
                return Err(Error::invalid(format!(
                    "changepoint {} must lie strictly between 1 and {}",
                    cp.at, self.n_examples
                )));
            }
            if cp.classes.len() != self.classes.len() {
                return Err(Error::invalid("changepoint must keep the number of classes"));
            }
            check_classes(&cp.classes, Some(self.dim()))?;
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<Vec<LabeledExample>> {
        self.validate()?;
        let mut rng = RngHandle::new(self.seed);
        (1..=self.n_examples)
            .map(|i| {
                let classes = match &self.changepoint {
                    Some(cp) if i >= cp.at => &cp.classes,
                    _ => &self.classes,
                };
                let k = rng.below(classes.len());
                let c = &classes[k];
                let x = c.mean.iter().map(|m| m + c.std * rng.normal()).collect();
                LabeledExample::new(x, Label(k as u32))
            })
            .collect()
    }
}

fn check_classes(classes: &[ClassSpec], dim: Option<usize>) -> Result<()> {
    let Some(first) = classes.first() else {
        return Err(Error::invalid("at least one class is required"));
    };
    let dim = dim.unwrap_or(first.mean.len());
    if dim == 0 {
        return Err(Error::invalid("feature dimension must be positive"));
    }
    for c in classes {
        if c.mean.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.mean.len(),
            });
        }
        if c.std <= 0.0 || !c.std.is_finite() || c.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("class parameters must be finite with std > 0"));
        }
    }
    Ok(())
}

/// Result of a one-sample Kolmogorov–Smirnov test against U[0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample KS test of uniformity on [0, 1], with the asymptotic
/// Kolmogorov p-value (Stephens' small-sample correction of the argument).
pub fn ks_uniform(values: &[f64]) -> Result<KsResult> {
    if values.is_empty() {
        return Err(Error::invalid("KS test needs at least one value"));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("KS uniformity input {v} is outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let above = (i + 1) as f64 / n - x;
            let below = x - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic;
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_q(lambda),
    })
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (-1)^(k-1) exp(-2 k² λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Mean log factor `(1/n) Σ ln f_i(p_i)` of a fresh strategy replayed over `pvalues`.
pub fn avg_log_growth(pvalues: &[f64], kind: StrategyKind) -> Result<f64> {
    if pvalues.is_empty() {
        return Err(Error::invalid("growth needs at least one p-value"));
    }
    let mut strategy = BettingStrategy::new(kind)?;
    let mut total = 0.0;
    for &p in pvalues {
        total += strategy.bet(p)?.ln;
    }
    Ok(total / pvalues.len() as f64)
}

/// The grid `0.01, 0.02, ..., 0.99`.
pub fn epsilon_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

/// Best power-martingale growth over `grid`, as `(epsilon, growth)`.
pub fn best_power_growth(pvalues: &[f64], grid: &[f64]) -> Result<(f64, f64)> {
    if pvalues.is_empty() || grid.is_empty() {
        return Err(Error::invalid("need p-values and a nonempty epsilon grid"));
    }
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for &eps in grid {
        let g = avg_log_growth(pvalues, StrategyKind::Power(eps))?;
        if g > best.1 {
            best = (eps, g);
        }
    }
    Ok(best)
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let cov: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}

/// Draws `n` values from a finite mixture of Beta distributions given as
/// `(weight, a, b)` components.
pub fn beta_mixture_sample(components: &[(f64, f64, f64)], n: usize, seed: u64) -> Result<Vec<f64>> {
    let total: f64 = components.iter().map(|c| c.0).sum();
    if components.is_empty() || total.is_nan() || total <= 0.0 {
        return Err(Error::invalid("beta mixture needs positive weights"));
    }
    let betas = components
        .iter()
        .map(|&(_, a, b)| Beta::new(a, b).map_err(|e| Error::invalid(format!("beta({a}, {b}): {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = RngHandle::new(seed);
    Ok((0..n)
        .map(|_| {
            let mut u = rng.uniform() * total;
            let mut k = 0;
            while k + 1 < components.len() && u >= components[k].0 {
                u -= components[k].0;
                k += 1;
            }
            // p-values live in (0, 1]; a Beta draw may round to exactly 0
            rng.sample(&betas[k]).max(f64::MIN_POSITIVE)
        })
        .collect())
}

/// `∫₀¹ f(p) dp` for a density given by its log as a function of `ln p`.
///
/// Substitutes `p = exp(-e^v)` and applies composite Simpson over
/// `v ∈ [-40, 25]`, so integrable singularities at `p = 0` (down to far below
/// the smallest `f64`) are resolved.
pub fn integrate_density_log(ln_f: impl Fn(f64) -> f64) -> f64 {
    const LO: f64 = -40.0;
    const HI: f64 = 25.0;
    const INTERVALS: usize = 65_000;
    let h = (HI - LO) / INTERVALS as f64;
    let integrand = |v: f64| {
        let t = v.exp();
        let val = ln_f(-t) - t + v;
        if val.is_nan() {
            0.0
        } else {
            val.exp()
        }
    };
    let mut s = integrand(LO) + integrand(HI);
    for i in 1..INTERVALS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * integrand(LO + i as f64 * h);
    }
    s * h / 3.0
}
