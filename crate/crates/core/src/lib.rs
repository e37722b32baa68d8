//! Online testing of the exchangeability assumption.
//!
//! Labeled examples arrive one at a time. Each is scored by a 1-nearest-neighbour
//! nonconformity measure, the scores are turned into randomized conformal
//! p-values (uniform and independent while the data stay exchangeable), and
//! the p-values drive product-form martingales whose size measures evidence
//! against exchangeability.
//!
//! ```
//! use exmart::betting::StrategyKind;
//! use exmart::calibration::SynthConfig;
//! use exmart::martingale;
//! use exmart::pvalue::process_stream;
//! use exmart::rng::RngHandle;
//!
//! let data = SynthConfig::two_class(200, 3, 1).generate().unwrap();
//! let pvalues = process_stream(&data, RngHandle::new(2)).unwrap();
//! let runs = martingale::run(
//!     &[StrategyKind::SimpleMixture, StrategyKind::plugin()],
//!     &pvalues,
//!     &martingale::DEFAULT_THRESHOLDS,
//! )
//! .unwrap();
//! assert_eq!(runs[0].log10.len(), 200);
//! ```

pub mod betting;
pub mod calibration;
pub mod error;
pub mod io;
pub mod martingale;
pub mod nonconformity;
pub mod pvalue;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
pub use types::{euclidean_distance, ext_ratio, ExtReal, Label, LabeledExample};
