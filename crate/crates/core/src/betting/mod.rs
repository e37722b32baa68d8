//! Betting functions: densities on [0, 1] that turn each p-value into a
//! multiplicative martingale factor.

mod kde;
mod quadrature;

use std::fmt;
use std::str::FromStr;

pub use kde::{normal_mass, quantile_sorted, silverman_bandwidth, KdeModel, MIN_BANDWIDTH};
pub use quadrature::{gauss_legendre, ln_mixture_integral, log_sum_exp};

use crate::error::{Error, Result};

/// A martingale factor kept in natural-log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetFactor {
    pub ln: f64,
}

impl BetFactor {
    pub fn value(self) -> f64 {
        self.ln.exp()
    }

    pub fn log10(self) -> f64 {
        self.ln * std::f64::consts::LOG10_E
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("p-value must lie in (0, 1], got {p}")))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("power epsilon must lie in (0, 1], got {eps}")))
    }
}

fn ln_power_bet(p: f64, eps: f64) -> f64 {
    eps.ln() + (eps - 1.0) * p.ln()
}

/// `ε · p^(ε-1)`.
pub fn power_bet(p: f64, eps: f64) -> Result<f64> {
    check_p(p)?;
    check_eps(eps)?;
    Ok(ln_power_bet(p, eps).exp())
}

/// Ratio `M_n / M_{n-1}` of the simple mixture martingale, where
/// `M_n = I(n, s_prev + ln p_new)` and `s_prev` sums the logs of the first
/// `n - 1` p-values.
pub fn mixture_increment(n: u64, s_prev: f64, p_new: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("mixture step count starts at 1"));
    }
    check_p(p_new)?;
    let prev = if n == 1 { 0.0 } else { ln_mixture_integral(n - 1, s_prev) };
    Ok((ln_mixture_integral(n, s_prev + p_new.ln()) - prev).exp())
}

/// Which betting rule a martingale uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategyKind {
    Constant,
    Power(f64),
    SimpleMixture,
    /// Reflected-KDE density of past p-values, refitted every `stride` steps.
    PlugIn { stride: usize },
}

impl StrategyKind {
    pub fn plugin() -> Self {
        StrategyKind::PlugIn { stride: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StrategyKind::Power(eps) => check_eps(eps),
            StrategyKind::PlugIn { stride: 0 } => Err(Error::invalid("plug-in stride must be positive")),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::Constant => f.write_str("constant"),
            StrategyKind::Power(eps) => write!(f, "power:{eps}"),
            StrategyKind::SimpleMixture => f.write_str("mixture"),
            StrategyKind::PlugIn { stride: 1 } => f.write_str("plugin"),
            StrategyKind::PlugIn { stride } => write!(f, "plugin:{stride}"),
        }
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    /// Accepts `constant`, `power:<eps>`, `mixture`, `plugin` and `plugin:<stride>`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let kind = match (name, arg) {
            ("constant", None) => StrategyKind::Constant,
            ("mixture", None) => StrategyKind::SimpleMixture,
            ("plugin", None) => StrategyKind::plugin(),
            ("plugin", Some(a)) => StrategyKind::PlugIn {
                stride: a.parse().map_err(|_| Error::invalid(format!("bad plug-in stride in {s:?}")))?,
            },
            ("power", Some(a)) => StrategyKind::Power(
                a.parse().map_err(|_| Error::invalid(format!("bad power epsilon in {s:?}")))?,
            ),
            _ => return Err(Error::invalid(format!("unknown strategy {s:?}"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Running state of the simple mixture martingale.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureState {
    steps: u64,
    log_sum: f64,
    // ln M_steps
    ln_value: f64,
}

/// Running state of the plug-in martingale.
#[derive(Debug, Clone, PartialEq)]
pub struct PlugInState {
    stride: usize,
    // every p-value seen so far, ascending
    sorted: Vec<f64>,
    model: KdeModel,
    fitted_on: usize,
}

impl PlugInState {
    fn new(stride: usize) -> Self {
        Self {
            stride,
            sorted: Vec::new(),
            model: KdeModel::uniform(),
            fitted_on: 0,
        }
    }

    fn refresh(&mut self) {
        let m = self.sorted.len();
        if m > 0 && (self.fitted_on == 0 || m - self.fitted_on >= self.stride) {
            self.model = KdeModel::fit_sorted(&self.sorted);
            self.fitted_on = m;
        }
    }

    /// Density currently used for betting on the next p-value.
    pub fn model(&self) -> &KdeModel {
        &self.model
    }

    pub fn history(&self) -> &[f64] {
        &self.sorted
    }
}

/// A betting function together with whatever history it depends on.
#[derive(Debug, Clone, PartialEq)]
pub enum BettingStrategy {
    Constant,
    Power { eps: f64 },
    SimpleMixture(MixtureState),
    PlugIn(PlugInState),
}

impl BettingStrategy {
    pub fn new(kind: StrategyKind) -> Result<Self> {
        kind.validate()?;
        Ok(match kind {
            StrategyKind::Constant => BettingStrategy::Constant,
            StrategyKind::Power(eps) => BettingStrategy::Power { eps },
            StrategyKind::SimpleMixture => BettingStrategy::SimpleMixture(MixtureState {
                steps: 0,
                log_sum: 0.0,
                ln_value: 0.0,
            }),
            StrategyKind::PlugIn { stride } => BettingStrategy::PlugIn(PlugInState::new(stride)),
        })
    }

    pub fn kind(&self) -> StrategyKind {
        match self {
            BettingStrategy::Constant => StrategyKind::Constant,
            BettingStrategy::Power { eps } => StrategyKind::Power(*eps),
            BettingStrategy::SimpleMixture(_) => StrategyKind::SimpleMixture,
            BettingStrategy::PlugIn(s) => StrategyKind::PlugIn { stride: s.stride },
        }
    }

    /// Log of the current betting function at `p`, given the history so far.
    pub fn ln_density(&self, p: f64) -> f64 {
        if !(0.0..=1.0).contains(&p) {
            return f64::NEG_INFINITY;
        }
        match self {
            BettingStrategy::PlugIn(s) => s.model.ln_density(p),
            _ => self.ln_density_log(p.ln()),
        }
    }

    /// Log of the current betting function at `p = exp(ln_p)`.
    ///
    /// Stays accurate when `p` itself would underflow, which matters for the
    /// mixture: its betting function carries visible mass below `1e-300`.
    pub fn ln_density_log(&self, ln_p: f64) -> f64 {
        if ln_p.is_nan() || ln_p > 0.0 {
            return f64::NEG_INFINITY;
        }
        match self {
            BettingStrategy::Constant => 0.0,
            BettingStrategy::Power { eps } => eps.ln() + (eps - 1.0) * ln_p,
            BettingStrategy::SimpleMixture(m) => {
                if ln_p == f64::NEG_INFINITY {
                    return f64::INFINITY;
                }
                ln_mixture_integral(m.steps + 1, m.log_sum + ln_p) - m.ln_value
            }
            BettingStrategy::PlugIn(s) => s.model.ln_density(ln_p.exp()),
        }
    }

    /// The current betting function at `p`; integrates to one over [0, 1].
    pub fn density(&self, p: f64) -> f64 {
        self.ln_density(p).exp()
    }

    /// Bets on `p`, returning the factor and folding `p` into the history.
    pub fn bet(&mut self, p: f64) -> Result<BetFactor> {
        check_p(p)?;
        let ln = match self {
            BettingStrategy::Constant => 0.0,
            BettingStrategy::Power { eps } => ln_power_bet(p, *eps),
            BettingStrategy::SimpleMixture(m) => {
                m.steps += 1;
                m.log_sum += p.ln();
                let next = ln_mixture_integral(m.steps, m.log_sum);
                let ln = next - m.ln_value;
                m.ln_value = next;
                ln
            }
            BettingStrategy::PlugIn(s) => {
                // the model only ever sees strictly earlier p-values
                let ln = s.model.ln_density(p);
                let at = s.sorted.partition_point(|&v| v < p);
                s.sorted.insert(at, p);
                s.refresh();
                ln
            }
        };
        if !ln.is_finite() {
            return Err(Error::invalid(format!(
                "betting function of {} is degenerate at p = {p}",
                self.kind()
            )));
        }
        Ok(BetFactor { ln })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngHandle;

    use crate::calibration::integrate_density_log;

    #[test]
    fn power_examples() {
        assert_eq!(power_bet(0.37, 1.0).unwrap(), 1.0);
        assert!((power_bet(0.25, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(power_bet(0.0, 0.5).is_err());
        assert!(power_bet(0.5, 0.0).is_err());
        assert!(power_bet(0.5, 1.5).is_err());
    }

    #[test]
    fn power_integrates_to_one() {
        for eps in [0.1, 0.5, 0.9] {
            let total = integrate_density_log(|lp| power_bet(lp.exp(), eps).map_or(f64::NEG_INFINITY, f64::ln));
            assert!((total - 1.0).abs() < 1e-6, "eps={eps}: {total}");
        }
    }

    #[test]
    fn mixture_closed_forms() {
        let m1 = mixture_increment(1, 0.0, (-1.0f64).exp()).unwrap();
        assert!((m1 - (std::f64::consts::E - 2.0)).abs() < 1e-12);

        let mut s = BettingStrategy::new(StrategyKind::SimpleMixture).unwrap();
        let f1 = s.bet(1.0).unwrap().value();
        let f2 = s.bet(1.0).unwrap().value();
        assert!((f1 - 0.5).abs() < 1e-14);
        assert!((f1 * f2 - 1.0 / 3.0).abs() < 1e-14);
        // M_n / M_{n-1} = n / (n + 1) when every p is 1
        assert!((f2 - 2.0 / 3.0).abs() < 1e-14);
        assert!(mixture_increment(0, 0.0, 0.5).is_err());
    }

    #[test]
    fn mixture_telescopes() {
        let mut rng = RngHandle::new(3);
        let mut s = BettingStrategy::new(StrategyKind::SimpleMixture).unwrap();
        let mut ln_prod = 0.0;
        let mut log_sum = 0.0;
        for n in 1..=2000u64 {
            let p = rng.uniform();
            let inc = mixture_increment(n, log_sum, p).unwrap();
            log_sum += p.ln();
            let f = s.bet(p).unwrap();
            assert!((f.value() / inc - 1.0).abs() < 1e-10);
            ln_prod += f.ln;
        }
        let direct = ln_mixture_integral(2000, log_sum);
        assert!((ln_prod - direct).abs() < 1e-9, "{ln_prod} vs {direct}");
    }

    #[test]
    fn every_strategy_integrates_to_one() {
        let mut rng = RngHandle::new(8);
        for trial in 0..10 {
            let kinds = [
                StrategyKind::Constant,
                StrategyKind::Power(0.3),
                StrategyKind::SimpleMixture,
                StrategyKind::plugin(),
                StrategyKind::PlugIn { stride: 7 },
            ];
            for kind in kinds {
                let mut s = BettingStrategy::new(kind).unwrap();
                for _ in 0..(trial * 13) {
                    s.bet(rng.uniform().powf(1.5)).unwrap();
                }
                let total = integrate_density_log(|lp| s.ln_density_log(lp));
                assert!((total - 1.0).abs() < 1e-6, "{kind} after {} bets: {total}", trial * 13);
            }
        }
    }

    #[test]
    fn plugin_warm_up_and_strict_past() {
        let mut s = BettingStrategy::new(StrategyKind::plugin()).unwrap();
        assert_eq!(s.bet(0.9).unwrap().ln, 0.0);
        // second factor depends only on the first p-value
        let mut a = s.clone();
        let mut b = s.clone();
        let fa = a.bet(0.2).unwrap();
        let expected = KdeModel::fit(&[0.9]).ln_density(0.2);
        assert_eq!(fa.ln, expected);
        let _ = b.bet(0.2000001).unwrap();
        if let (BettingStrategy::PlugIn(x), BettingStrategy::PlugIn(y)) = (&a, &b) {
            assert_eq!(x.history().len(), 2);
            assert_ne!(x.model(), y.model());
        }
    }

    #[test]
    fn plugin_stride_reuses_model() {
        let mut s = BettingStrategy::new(StrategyKind::PlugIn { stride: 3 }).unwrap();
        let ps = [0.1, 0.4, 0.8, 0.3, 0.6];
        for &p in &ps {
            s.bet(p).unwrap();
        }
        let BettingStrategy::PlugIn(st) = &s else { unreachable!() };
        // fitted after 1 and after 4 p-values
        assert_eq!(st.model().sample_len(), 4);
    }

    #[test]
    fn plugin_on_uniform_has_small_log_loss() {
        let mut rng = RngHandle::new(12);
        let mut s = BettingStrategy::new(StrategyKind::plugin()).unwrap();
        let mut total = 0.0;
        for _ in 0..5000 {
            total += s.bet(rng.uniform()).unwrap().ln;
        }
        let mean = total / 5000.0;
        assert!(mean.abs() <= 0.02, "{mean}");
    }

    #[test]
    fn power_one_is_constant() {
        let mut rng = RngHandle::new(2);
        let mut s = BettingStrategy::new(StrategyKind::Power(1.0)).unwrap();
        for _ in 0..100 {
            assert_eq!(s.bet(rng.uniform()).unwrap().ln, 0.0);
        }
    }

    #[test]
    fn kind_round_trips_through_text() {
        for text in ["constant", "power:0.5", "mixture", "plugin", "plugin:4"] {
            let k: StrategyKind = text.parse().unwrap();
            assert_eq!(k.to_string(), text);
        }
        for bad in ["power", "power:0", "power:2", "plugin:0", "kde", "mixture:1"] {
            assert!(bad.parse::<StrategyKind>().is_err(), "{bad}");
        }
    }

    #[test]
    fn bet_rejects_bad_p() {
        let mut s = BettingStrategy::new(StrategyKind::plugin()).unwrap();
        assert!(s.bet(0.0).is_err());
        assert!(s.bet(1.2).is_err());
        assert!(s.bet(f64::NAN).is_err());
    }
}
