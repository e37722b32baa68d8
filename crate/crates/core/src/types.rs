//! Domain values shared by every stage of the pipeline.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Categorical class identifier. Loaders intern raw label tokens into these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub u32);

/// A feature vector together with its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    features: Vec<f64>,
    label: Label,
}

impl LabeledExample {
    /// Fails if the vector is empty or any feature is NaN or infinite.
    pub fn new(features: Vec<f64>, label: Label) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::invalid("example has no features"));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "feature {pos} is not finite ({})",
                features[pos]
            )));
        }
        Ok(Self { features, label })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// Checks that every example has the same dimensionality and returns it.
pub fn common_dim(examples: &[LabeledExample]) -> Result<Option<usize>> {
    let Some(first) = examples.first() else {
        return Ok(None);
    };
    let dim = first.dim();
    for ex in examples {
        if ex.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: ex.dim(),
            });
        }
    }
    Ok(Some(dim))
}

/// A nonnegative real extended with a top element `INF`.
///
/// Stored as an `f64` where `INF` is `f64::INFINITY`; NaN and negative values
/// are unrepresentable, which makes the order total.
#[derive(Clone, Copy, PartialEq)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal(0.0);
    pub const ONE: ExtReal = ExtReal(1.0);
    pub const INF: ExtReal = ExtReal(f64::INFINITY);

    /// Accepts any nonnegative value, including `+inf`.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::invalid(format!(
                "{value} is not an extended nonnegative real"
            )));
        }
        // normalise -0.0 so that bitwise and numeric equality agree
        Ok(ExtReal(value + 0.0))
    }

    pub fn is_inf(self) -> bool {
        self.0.is_infinite()
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            f.write_str("INF")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Ratio closed over `[0, INF]`.
///
/// `x/0 = INF` for `x > 0`, `INF/x = INF` for finite `x`, `x/INF = 0` for finite `x`,
/// and both `INF/INF` and `0/0` are `1`.
pub fn ext_ratio(num: ExtReal, den: ExtReal) -> ExtReal {
    match (num.is_inf(), den.is_inf()) {
        (true, true) => ExtReal::ONE,
        (true, false) => ExtReal::INF,
        (false, true) => ExtReal::ZERO,
        (false, false) => {
            if den.0 == 0.0 {
                if num.0 == 0.0 {
                    ExtReal::ONE
                } else {
                    ExtReal::INF
                }
            } else {
                // a finite quotient can still overflow for subnormal denominators
                ExtReal(num.0 / den.0)
            }
        }
    }
}

/// Euclidean distance between two feature vectors of equal length.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(sq_dist(a, b).sqrt())
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}
