//! Answers batches of range queries over count vectors under
//! ε-differential privacy with a two-stage mechanism: a private,
//! data-adaptive partition of the domain followed by workload-adaptive
//! estimation of the bucket counts.
//!
//! ```
//! use dawa::{mechanisms, DataVector, PrivacyBudget, RngStream, Workload};
//! use dawa::partition::CostMode;
//!
//! let x = DataVector::new(vec![2, 3, 8, 1, 0, 2, 0, 4, 2, 4]).unwrap();
//! let w = Workload::identity(x.len()).unwrap();
//! let budget = PrivacyBudget::new(1.0).unwrap();
//! let mut rng = RngStream::new(7);
//! let xhat = mechanisms::run_dawa(&x, &w, &budget, CostMode::All, 2, &mut rng).unwrap();
//! assert_eq!(xhat.len(), 10);
//! ```

pub mod domain;
pub mod estimation;
pub mod harness;
pub mod error;
pub mod io;
pub mod mechanisms;
pub mod partition;
pub mod rng;
pub mod spatial;
pub mod transform;

pub use domain::{
    average_workload_error, evaluate_query, uniform_expand, validate_partition, DataVector,
    EstimateVector, Histogram, Interval, Partition, PrivacyBudget, RangeSum, Workload,
};
pub use error::{Error, Result};
pub use rng::{laplace_sample, RngStream};
