//! Selection of the latent scale sigma: profile likelihood over a grid
//! with optional golden-section refinement on phi = log sigma, and
//! validation-AUROC selection over the same grid.

use crate::boost::{fit_boosted, BoostConfig};
use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::eval::roc::roc_auroc;
use crate::loss::Loss;
use crate::optim::golden_section_max;

/// Default sigma grid.
pub const DEFAULT_SIGMA_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSearchConfig {
    /// Candidate sigmas; sorted internally, must be positive and distinct.
    pub grid: Vec<f64>,
    /// Golden-section refinement on phi = log sigma around the grid argmax.
    pub refine: bool,
}

impl Default for SigmaSearchConfig {
    fn default() -> Self {
        Self {
            grid: DEFAULT_SIGMA_GRID.to_vec(),
            refine: true,
        }
    }
}

impl SigmaSearchConfig {
    fn sorted_grid(&self) -> Result<Vec<f64>> {
        if self.grid.is_empty() {
            return Err(Error::InvalidConfig("sigma grid is empty".into()));
        }
        let mut g = self.grid.clone();
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in g.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidConfig(format!(
                    "sigma grid contains duplicate {}",
                    w[0]
                )));
            }
        }
        if !(g[0] > 0.0) {
            return Err(Error::InvalidSigma(g[0]));
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaDiagnostics {
    /// (sigma, profile log-likelihood) over the sorted grid.
    pub trace: Vec<(f64, f64)>,
    /// Refined point, when refinement ran and improved on the grid.
    pub refined: Option<(f64, f64)>,
}

fn with_sigma(base: &BoostConfig, sigma: f64) -> Result<BoostConfig> {
    match &base.loss {
        Loss::Tobit { bounds, .. } => {
            let mut cfg = base.clone();
            cfg.loss = Loss::tobit(*bounds, sigma)?;
            Ok(cfg)
        }
        _ => Err(Error::InvalidConfig(
            "sigma selection requires a censored-loss configuration".into(),
        )),
    }
}

/// Profile log-likelihood l(sigma): fit the ensemble with sigma held
/// fixed and return the negative training empirical loss.
pub fn profile_loglik(
    features: &Matrix,
    response: &[f64],
    base: &BoostConfig,
    sigma: f64,
) -> Result<f64> {
    let cfg = with_sigma(base, sigma)?;
    let model = fit_boosted(features, response, &cfg)?;
    Ok(-model.empirical_loss(features, response)?)
}

/// Grid argmax with ties broken toward the smaller sigma (ascending scan
/// with a strict improvement test).
pub(crate) fn pick_best(trace: &[(f64, f64)]) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for &(s, l) in trace {
        if !l.is_finite() {
            continue;
        }
        match best {
            None => best = Some((s, l)),
            Some((_, lb)) if l > lb => best = Some((s, l)),
            _ => {}
        }
    }
    best.ok_or(Error::NoFiniteGridPoint)
}

/// Select sigma by maximizing the profile log-likelihood over the grid,
/// optionally refined by golden-section search on phi = log sigma in the
/// interval bracketing the grid argmax.
pub fn select_sigma(
    features: &Matrix,
    response: &[f64],
    base: &BoostConfig,
    search: &SigmaSearchConfig,
) -> Result<(f64, SigmaDiagnostics)> {
    let grid = search.sorted_grid()?;
    let mut trace = Vec::with_capacity(grid.len());
    for &s in &grid {
        let l = profile_loglik(features, response, base, s)?;
        trace.push((s, l));
    }
    let (mut sigma_hat, mut ell_hat) = pick_best(&trace)?;
    let mut refined = None;
    if search.refine && grid.len() >= 2 {
        let k = grid.iter().position(|&s| s == sigma_hat).unwrap();
        let lo = grid[k.saturating_sub(1)].ln();
        let hi = grid[(k + 1).min(grid.len() - 1)].ln();
        if hi > lo {
            let r = golden_section_max(
                |phi| {
                    profile_loglik(features, response, base, phi.exp())
                        .unwrap_or(f64::NEG_INFINITY)
                },
                lo,
                hi,
                1e-5,
            );
            // monotone improvement: never fall below the grid maximum, and
            // keep the smaller sigma on exact ties
            let s_ref = r.x.exp();
            if r.fx > ell_hat || (r.fx == ell_hat && s_ref < sigma_hat) {
                sigma_hat = s_ref;
                ell_hat = r.fx;
                refined = Some((s_ref, r.fx));
            }
        }
    }
    let _ = ell_hat;
    Ok((sigma_hat, SigmaDiagnostics { trace, refined }))
}

/// Select sigma from the grid by maximizing validation AUROC of the
/// default-probability predictions; ties go to the smallest sigma.
pub fn select_sigma_cv(
    train_features: &Matrix,
    train_response: &[f64],
    valid_features: &Matrix,
    valid_labels: &[f64],
    base: &BoostConfig,
    search: &SigmaSearchConfig,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let grid = search.sorted_grid()?;
    let mut trace = Vec::with_capacity(grid.len());
    for &s in &grid {
        let cfg = with_sigma(base, s)?;
        let model = fit_boosted(train_features, train_response, &cfg)?;
        let scores: Vec<f64> = (0..valid_features.n_rows())
            .map(|i| model.predict_default_prob(valid_features.row(i)))
            .collect::<Result<_>>()?;
        let auroc = roc_auroc(&scores, valid_labels)?.auroc;
        trace.push((s, auroc));
    }
    let (sigma_hat, _) = pick_best(&trace)?;
    Ok((sigma_hat, trace))
}
