//! Online randomized conformal p-values.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonconformity::NonconformityState;
use crate::rng::RngHandle;
use crate::types::{ExtReal, LabeledExample};

/// One emitted p-value together with the randomness that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PValueRecord {
    /// 1-based position in the stream.
    pub index: usize,
    pub p: f64,
    pub theta: f64,
    #[serde(skip)]
    pub alpha: ExtReal,
}

/// Randomized rank of the last score among all scores (itself included):
/// `(#{alpha_i > alpha_n} + theta * #{alpha_i == alpha_n}) / n`.
pub fn next_pvalue(alphas: &[ExtReal], theta: f64) -> Result<f64> {
    let Some(&current) = alphas.last() else {
        return Err(Error::invalid("next_pvalue needs at least one score"));
    };
    check_theta(theta)?;
    Ok(rank_pvalue(alphas.iter().copied(), current, theta))
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("theta must lie in (0, 1), got {theta}")))
    }
}

fn rank_pvalue(scores: impl Iterator<Item = ExtReal>, current: ExtReal, theta: f64) -> f64 {
    let mut greater = 0usize;
    let mut equal = 0usize;
    let mut n = 0usize;
    for a in scores {
        n += 1;
        match a.cmp(&current) {
            std::cmp::Ordering::Greater => greater += 1,
            std::cmp::Ordering::Equal => equal += 1,
            std::cmp::Ordering::Less => {}
        }
    }
    (greater as f64 + theta * equal as f64) / n as f64
}

/// Turns a stream of examples into conformal p-values, one per example.
#[derive(Debug, Clone)]
pub struct PValueStream {
    state: NonconformityState,
    rng: RngHandle,
}

impl PValueStream {
    pub fn new(rng: RngHandle) -> Self {
        Self {
            state: NonconformityState::new(),
            rng,
        }
    }

    pub fn len(&self) -> usize {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }

    pub fn state(&self) -> &NonconformityState {
        &self.state
    }

    /// Observes `z`, updates all scores, then draws theta and ranks the new score.
    pub fn observe(&mut self, z: &LabeledExample) -> Result<PValueRecord> {
        let idx = self.state.push(z)?;
        let theta = self.rng.uniform();
        let alpha = self.state.score(idx);
        let st = &self.state;
        let p = rank_pvalue((0..st.len()).map(|i| st.score(i)), alpha, theta);
        Ok(PValueRecord {
            index: idx + 1,
            p,
            theta,
            alpha,
        })
    }
}

/// Runs [`PValueStream`] over a whole sequence.
pub fn process_stream(examples: &[LabeledExample], rng: RngHandle) -> Result<Vec<PValueRecord>> {
    let mut stream = PValueStream::new(rng);
    examples.iter().map(|z| stream.observe(z)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{ks_uniform, lag1_autocorrelation, SynthConfig};
    use crate::types::Label;

    fn scores(v: &[f64]) -> Vec<ExtReal> {
        v.iter().map(|&x| ExtReal::new(x).unwrap()).collect()
    }

    #[test]
    fn formula_examples() {
        assert_eq!(next_pvalue(&scores(&[5.0, 4.0, 3.0, 10.0]), 0.5).unwrap(), 0.125);
        assert_eq!(next_pvalue(&scores(&[2.0, 2.0]), 0.5).unwrap(), 0.5);
        let p = next_pvalue(&scores(&[1.0, 3.0, 2.0]), 0.3).unwrap();
        assert!((p - 1.3 / 3.0).abs() < 1e-15);
        assert_eq!(next_pvalue(&scores(&[42.0]), 0.7).unwrap(), 0.7);
    }

    #[test]
    fn inf_ties_inf() {
        let a = [ExtReal::INF, ExtReal::ONE, ExtReal::INF];
        assert_eq!(next_pvalue(&a, 0.5).unwrap(), (0.0 + 0.5 * 2.0) / 3.0);
    }

    #[test]
    fn theta_must_be_open() {
        let a = scores(&[1.0]);
        assert!(next_pvalue(&a, 0.0).is_err());
        assert!(next_pvalue(&a, 1.0).is_err());
        assert!(next_pvalue(&a, f64::NAN).is_err());
        assert!(next_pvalue(&[], 0.5).is_err());
    }

    #[test]
    fn single_example_gets_theta() {
        let z = LabeledExample::new(vec![0.3], Label(1)).unwrap();
        let recs = process_stream(&[z], RngHandle::new(3)).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].p, recs[0].theta);
        assert_eq!(recs[0].index, 1);
    }

    #[test]
    fn deterministic_per_seed() {
        let data = SynthConfig::two_class(300, 4, 17).generate().unwrap();
        let a = process_stream(&data, RngHandle::new(8)).unwrap();
        let b = process_stream(&data, RngHandle::new(8)).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.p.to_bits() == y.p.to_bits()));
        assert!(a.iter().all(|r| r.p > 0.0 && r.p <= 1.0 && r.p >= r.theta / r.index as f64));
    }

    #[test]
    fn exchangeable_mixture_gives_uniform_pvalues() {
        let data = SynthConfig::two_class(2000, 2, 2024).generate().unwrap();
        let p: Vec<f64> = process_stream(&data, RngHandle::new(1))
            .unwrap()
            .iter()
            .map(|r| r.p)
            .collect();
        let ks = ks_uniform(&p).unwrap();
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn exchangeable_pvalues_are_uncorrelated() {
        for seed in 0..5 {
            let data = SynthConfig::two_class(2000, 10, 600 + seed).generate().unwrap();
            let p: Vec<f64> = process_stream(&data, RngHandle::new(seed)).unwrap().iter().map(|r| r.p).collect();
            let r = lag1_autocorrelation(&p);
            assert!(r.abs() <= 3.0 / (p.len() as f64).sqrt(), "seed {seed}: {r}");
        }
    }
}
