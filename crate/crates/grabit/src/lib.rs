//! Gradient tree boosting for censored regression (the Grabit model),
//! with linear Tobit and logistic baselines, scale-parameter selection,
//! ROC-based evaluation, interpretation tools, and a simulation study
//! driver for class-imbalanced default prediction.

pub mod boost;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod interpret;
pub mod linear;
pub mod loss;
pub mod model;
pub mod optim;
pub mod plot;
pub mod sigma;
pub mod sim;
pub mod tree;

pub use boost::{fit_boosted, BoostConfig, BoostedEnsemble};
pub use data::{lower_median, read_csv, read_feature_csv, Dataset, Matrix};
pub use error::{Error, Result};
pub use linear::{fit_linear_tobit, fit_logit, LinearFit, LinearModel};
pub use loss::{CensorStatus, CensoringBounds, Loss};
pub use tree::{RegressionTree, TreeConfig};

/// Command-line entry point; returns the process exit code.
pub fn run() -> i32 {
    cli::run()
}
