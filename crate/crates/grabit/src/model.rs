//! Versioned JSON persistence for trained models: a single envelope that
//! stores either a boosted ensemble or a linear model together with the
//! feature names and the log-transform applied at training time.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boost::BoostedEnsemble;
use crate::error::{Error, Result};
use crate::linear::LinearModel;
use crate::loss::Loss;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    Boosted(BoostedEnsemble),
    Linear(LinearModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    /// Feature column names in training order, when known.
    #[serde(default)]
    pub feature_names: Vec<String>,
    /// Columns that were log-transformed before training; prediction
    /// inputs must receive the same transform.
    #[serde(default)]
    pub log_transform: Vec<String>,
    #[serde(flatten)]
    pub body: ModelBody,
}

impl Model {
    pub fn boosted(
        ensemble: BoostedEnsemble,
        feature_names: Vec<String>,
        log_transform: Vec<String>,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            feature_names,
            log_transform,
            body: ModelBody::Boosted(ensemble),
        }
    }

    pub fn linear(
        model: LinearModel,
        feature_names: Vec<String>,
        log_transform: Vec<String>,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            feature_names,
            log_transform,
            body: ModelBody::Linear(model),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.body {
            ModelBody::Boosted(e) => match e.loss {
                Loss::Tobit { .. } => "boosted tobit",
                Loss::BernoulliLogit => "boosted logit",
                Loss::Squared => "boosted least squares",
            },
            ModelBody::Linear(m) => {
                if m.sigma.is_some() {
                    "linear tobit"
                } else {
                    "logit"
                }
            }
        }
    }

    pub fn n_features(&self) -> usize {
        match &self.body {
            ModelBody::Boosted(e) => e.n_features(),
            ModelBody::Linear(m) => m.coefficients.len(),
        }
    }

    pub fn predict_latent(&self, x: &[f64]) -> Result<f64> {
        match &self.body {
            ModelBody::Boosted(e) => e.predict_latent(x),
            ModelBody::Linear(m) => m.predict_latent(x),
        }
    }

    /// Default probability. Tobit models use the censored-normal tail;
    /// logistic models (boosted or linear without a scale) use the
    /// inverse-logit of the latent score.
    pub fn predict_default_prob(&self, x: &[f64]) -> Result<f64> {
        match &self.body {
            ModelBody::Boosted(e) => match e.loss {
                Loss::Tobit { .. } => e.predict_default_prob(x),
                Loss::BernoulliLogit => {
                    let f = e.predict_latent(x)?;
                    Ok(1.0 / (1.0 + (-f).exp()))
                }
                Loss::Squared => Err(Error::NotTobitUpper),
            },
            ModelBody::Linear(m) => {
                if m.sigma.is_some() {
                    m.predict_default_prob(x)
                } else {
                    let f = m.predict_latent(x)?;
                    Ok(1.0 / (1.0 + (-f).exp()))
                }
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let mut model: Model = serde_json::from_reader(BufReader::new(file))?;
        if model.format_version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                model.format_version
            )));
        }
        // bounds serialize infinities as null; restore and re-validate
        match &mut model.body {
            ModelBody::Boosted(e) => {
                if let Loss::Tobit { bounds, sigma } = &e.loss {
                    e.loss = Loss::tobit(bounds.clone().validated()?, *sigma)?;
                }
            }
            ModelBody::Linear(m) => {
                if let Some(b) = m.bounds.take() {
                    m.bounds = Some(b.validated()?);
                }
                if let Some(s) = m.sigma {
                    if !(s > 0.0 && s.is_finite()) {
                        return Err(Error::Model(format!("invalid sigma {s}")));
                    }
                }
            }
        }
        Ok(model)
    }
}
