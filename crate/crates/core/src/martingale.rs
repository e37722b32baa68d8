//! Martingale trajectories in log10 space, with threshold alarms.

use serde::Serialize;

use crate::betting::{BetFactor, BettingStrategy, StrategyKind};
use crate::error::{Error, Result};
use crate::pvalue::PValueRecord;

/// Conventional alarm levels.
pub const DEFAULT_THRESHOLDS: [f64; 2] = [20.0, 100.0];

/// First time a martingale reached a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alarm {
    pub threshold: f64,
    /// 1-based step of the first crossing, if any.
    pub step: Option<usize>,
}

/// Running value of one martingale, starting from `S_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleTracker {
    name: String,
    log10_value: f64,
    log10_max: f64,
    step: usize,
    alarms: Vec<Alarm>,
}

pub fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    match thresholds.iter().find(|t| **t < 1.0 || !t.is_finite()) {
        Some(t) => Err(Error::invalid(format!("alarm thresholds must be finite and >= 1, got {t}"))),
        None => Ok(()),
    }
}

impl MartingaleTracker {
    pub fn new(name: impl Into<String>, thresholds: &[f64]) -> Result<Self> {
        check_thresholds(thresholds)?;
        Ok(Self {
            name: name.into(),
            log10_value: 0.0,
            log10_max: 0.0,
            step: 0,
            alarms: thresholds
                .iter()
                .map(|&threshold| Alarm { threshold, step: None })
                .collect(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn log10_value(&self) -> f64 {
        self.log10_value
    }

    /// Largest log10 value seen so far, `S_0` included.
    pub fn log10_max(&self) -> f64 {
        self.log10_max
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn alarms(&self) -> &[Alarm] {
        &self.alarms
    }

    /// Multiplies the martingale by `factor`.
    pub fn step(&mut self, factor: f64) -> Result<()> {
        if factor <= 0.0 || !factor.is_finite() {
            return Err(Error::invalid(format!("martingale factor must be positive and finite, got {factor}")));
        }
        self.advance(factor.log10());
        Ok(())
    }

    /// Multiplies the martingale by a factor given in log form.
    pub fn step_factor(&mut self, factor: BetFactor) -> Result<()> {
        if !factor.ln.is_finite() {
            return Err(Error::invalid(format!("martingale log-factor must be finite, got {}", factor.ln)));
        }
        self.advance(factor.log10());
        Ok(())
    }

    fn advance(&mut self, log10_factor: f64) {
        self.log10_value += log10_factor;
        self.step += 1;
        self.log10_max = self.log10_max.max(self.log10_value);
        for alarm in &mut self.alarms {
            if alarm.step.is_none() && self.log10_value >= alarm.threshold.log10() {
                alarm.step = Some(self.step);
            }
        }
    }
}

/// Per-step log10 values of one martingale over a p-value sequence.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub kind: StrategyKind,
    pub log10: Vec<f64>,
    pub tracker: MartingaleTracker,
}

/// Runs every strategy over the same p-value sequence.
pub fn run(kinds: &[StrategyKind], pvalues: &[PValueRecord], thresholds: &[f64]) -> Result<Vec<Trajectory>> {
    check_thresholds(thresholds)?;
    kinds
        .iter()
        .map(|&kind| {
            let mut strategy = BettingStrategy::new(kind)?;
            let mut tracker = MartingaleTracker::new(kind.to_string(), thresholds)?;
            let mut log10 = Vec::with_capacity(pvalues.len());
            for rec in pvalues {
                tracker.step_factor(strategy.bet(rec.p)?)?;
                log10.push(tracker.log10_value());
            }
            Ok(Trajectory { kind, log10, tracker })
        })
        .collect()
}
