//! Model evaluation: ROC/AUROC, the DeLong test for correlated AUROCs,
//! ROC aggregation across replications, and temporal cross-validation.

pub mod band;
pub mod delong;
pub mod roc;
pub mod temporal;

pub use band::{aggregate_roc, RocBand};
pub use delong::{delong_components, delong_test, DelongResult};
pub use roc::{roc_auroc, RocCurve};
pub use temporal::{temporal_cv, Scorer, TemporalCvConfig, TemporalCvResult};
