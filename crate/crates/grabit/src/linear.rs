//! Linear baselines: logistic regression fitted by Newton iterations with
//! step halving, and the linear Tobit model fitted by BFGS over
//! (intercept, coefficients, log sigma).
//!
//! Features are standardized internally for conditioning; reported
//! coefficients are on the original scale.

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::loss::{norm_cdf, tobit_gradient, tobit_loss, CensorStatus, CensoringBounds, inv_mills};
use crate::optim::{bfgs_min, solve_spd};

const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Latent scale; present for Tobit fits only.
    pub sigma: Option<f64>,
    pub bounds: Option<CensoringBounds>,
}

impl LinearModel {
    pub fn predict_latent(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coefficients.len(),
                got: x.len(),
            });
        }
        Ok(self.intercept + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
    }

    /// Default probability 1 - Phi((y_u - F(x))/sigma) for Tobit fits.
    pub fn predict_default_prob(&self, x: &[f64]) -> Result<f64> {
        let (bounds, sigma) = match (&self.bounds, self.sigma) {
            (Some(b), Some(s)) if b.upper.is_finite() => (b, s),
            _ => return Err(Error::NotTobitUpper),
        };
        let f = self.predict_latent(x)?;
        Ok(norm_cdf((f - bounds.upper) / sigma))
    }
}

#[derive(Debug, Clone)]
pub struct LinearFit {
    pub model: LinearModel,
    pub converged: bool,
    pub iterations: usize,
    pub warning: Option<String>,
}

struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(features: &Matrix) -> Self {
        let n = features.n_rows() as f64;
        let p = features.n_cols();
        let mut mean = vec![0.0; p];
        let mut scale = vec![0.0; p];
        for i in 0..features.n_rows() {
            for (j, v) in features.row(i).iter().enumerate() {
                mean[j] += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        for i in 0..features.n_rows() {
            for (j, v) in features.row(i).iter().enumerate() {
                scale[j] += (v - mean[j]) * (v - mean[j]);
            }
        }
        for s in &mut scale {
            *s = (*s / n).sqrt();
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        Self { mean, scale }
    }

    fn transform(&self, features: &Matrix) -> Matrix {
        let mut out = features.clone();
        for i in 0..out.n_rows() {
            let row = out.row_mut(i);
            for j in 0..row.len() {
                row[j] = (row[j] - self.mean[j]) / self.scale[j];
            }
        }
        out
    }

    /// Map (intercept, beta) on the standardized scale back to raw inputs.
    fn unscale(&self, intercept: f64, beta: &[f64]) -> (f64, Vec<f64>) {
        let coefs: Vec<f64> = beta.iter().zip(&self.scale).map(|(b, s)| b / s).collect();
        let shift: f64 = coefs.iter().zip(&self.mean).map(|(c, m)| c * m).sum();
        (intercept - shift, coefs)
    }
}

/// Logistic regression by Newton's method with step halving.
pub fn fit_logit(features: &Matrix, labels: &[f64]) -> Result<LinearFit> {
    let n = features.n_rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    for &y in labels {
        if y != 0.0 && y != 1.0 {
            return Err(Error::NonBinaryResponse(y));
        }
    }
    let pos = labels.iter().filter(|&&y| y == 1.0).count();
    if pos == 0 || pos == n {
        return Err(Error::SingleClass);
    }

    let std = Standardizer::fit(features);
    let xs = std.transform(features);
    let p = xs.n_cols();
    let dim = p + 1; // intercept first

    let nll = |theta: &[f64]| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            let f = theta[0] + xs.row(i).iter().zip(&theta[1..]).map(|(x, b)| x * b).sum::<f64>();
            let l = if f > 0.0 {
                f + (-f).exp().ln_1p() - labels[i] * f
            } else {
                f.exp().ln_1p() - labels[i] * f
            };
            total += l;
        }
        total
    };

    let mut theta = vec![0.0; dim];
    let mut f_cur = nll(&theta);
    let mut iterations = 0;
    let mut converged = false;
    let mut grad = vec![0.0; dim];

    while iterations < MAX_ITER {
        // gradient and Hessian of the NLL
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut hess = vec![0.0; dim * dim];
        for i in 0..n {
            let row = xs.row(i);
            let f = theta[0] + row.iter().zip(&theta[1..]).map(|(x, b)| x * b).sum::<f64>();
            let pi = if f >= 0.0 {
                1.0 / (1.0 + (-f).exp())
            } else {
                let e = f.exp();
                e / (1.0 + e)
            };
            let r = pi - labels[i];
            let w = (pi * (1.0 - pi)).max(1e-12);
            grad[0] += r;
            for j in 0..p {
                grad[j + 1] += r * row[j];
            }
            hess[0] += w;
            for j in 0..p {
                hess[j + 1] += w * row[j];
                hess[(j + 1) * dim] += w * row[j];
                for k in 0..p {
                    hess[(j + 1) * dim + k + 1] += w * row[j] * row[k];
                }
            }
        }
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        // per-observation gradient tolerance
        if gmax < GRAD_TOL * n as f64 {
            converged = true;
            break;
        }
        iterations += 1;
        let step = match solve_spd(&hess, &grad, dim) {
            Some(s) => s,
            None => break,
        };
        if gmax < 1e-4 * n as f64 {
            // quadratic phase: close enough that the NLL improvement can be
            // below double precision; take the full Newton step
            for (t, s) in theta.iter_mut().zip(&step) {
                *t -= s;
            }
            f_cur = nll(&theta);
            continue;
        }
        // step halving until the NLL decreases
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t - alpha * s).collect();
            let f_new = nll(&cand);
            if f_new.is_finite() && f_new < f_cur {
                theta = cand;
                f_cur = f_new;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }

    // perfect separation keeps pushing coefficients outward; the gradient
    // still vanishes in the limit, so detect it independently of `converged`
    let separated = theta.iter().fold(0.0f64, |m, t| m.max(t.abs())) > 10.0
        && (0..n).all(|i| {
            let f = theta[0]
                + xs.row(i).iter().zip(&theta[1..]).map(|(x, b)| x * b).sum::<f64>();
            (f > 0.0) == (labels[i] == 1.0)
        });
    if separated {
        converged = false;
    }
    let warning = if separated {
        Some("possible perfect separation; returning last iterate".to_string())
    } else if converged {
        None
    } else {
        Some("logit fit did not converge".to_string())
    };

    let (intercept, coefficients) = std.unscale(theta[0], &theta[1..]);
    Ok(LinearFit {
        model: LinearModel {
            intercept,
            coefficients,
            sigma: None,
            bounds: None,
        },
        converged,
        iterations,
        warning,
    })
}

fn ols(xs: &Matrix, y: &[f64]) -> Option<Vec<f64>> {
    let n = xs.n_rows();
    let p = xs.n_cols();
    let dim = p + 1;
    let mut xtx = vec![0.0; dim * dim];
    let mut xty = vec![0.0; dim];
    for i in 0..n {
        let row = xs.row(i);
        xtx[0] += 1.0;
        xty[0] += y[i];
        for j in 0..p {
            xtx[j + 1] += row[j];
            xtx[(j + 1) * dim] += row[j];
            xty[j + 1] += row[j] * y[i];
            for k in 0..p {
                xtx[(j + 1) * dim + k + 1] += row[j] * row[k];
            }
        }
    }
    solve_spd(&xtx, &xty, dim)
}

/// Linear Tobit fit: jointly minimizes the summed Tobit loss over
/// (intercept, beta, log sigma) by BFGS with backtracking line search.
pub fn fit_linear_tobit(
    features: &Matrix,
    response: &[f64],
    bounds: CensoringBounds,
) -> Result<LinearFit> {
    let n = features.n_rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if response.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: response.len(),
        });
    }
    let statuses: Vec<CensorStatus> = response
        .iter()
        .map(|&y| bounds.status(y))
        .collect::<Result<_>>()?;
    if !statuses.iter().any(|s| *s == CensorStatus::Interior) {
        return Err(Error::NoInteriorObservations);
    }

    let std = Standardizer::fit(features);
    let xs = std.transform(features);
    let p = xs.n_cols();
    let dim = p + 2; // intercept, beta, phi = log sigma

    // start from OLS treating everything as uncensored
    let mut theta0 = vec![0.0; dim];
    if let Some(beta) = ols(&xs, response) {
        theta0[..=p].copy_from_slice(&beta);
    } else {
        theta0[0] = response.iter().sum::<f64>() / n as f64;
    }
    let resid_var: f64 = (0..n)
        .map(|i| {
            let f = theta0[0]
                + xs.row(i).iter().zip(&theta0[1..=p]).map(|(x, b)| x * b).sum::<f64>();
            (response[i] - f) * (response[i] - f)
        })
        .sum::<f64>()
        / n as f64;
    theta0[p + 1] = resid_var.sqrt().max(1e-3).ln();

    let fg = |theta: &[f64]| -> (f64, Vec<f64>) {
        let sigma = theta[p + 1].exp();
        if !sigma.is_finite() || sigma <= 0.0 {
            return (f64::INFINITY, vec![0.0; dim]);
        }
        let mut total = 0.0;
        let mut grad = vec![0.0; dim];
        for i in 0..n {
            let row = xs.row(i);
            let f = theta[0] + row.iter().zip(&theta[1..=p]).map(|(x, b)| x * b).sum::<f64>();
            let y = response[i];
            total += match tobit_loss(y, f, sigma, &bounds) {
                Ok(l) => l,
                Err(_) => return (f64::INFINITY, vec![0.0; dim]),
            };
            let gf = tobit_gradient(y, f, sigma, &bounds).unwrap_or(f64::NAN);
            grad[0] += gf;
            for j in 0..p {
                grad[j + 1] += gf * row[j];
            }
            // dL/dphi = sigma * dL/dsigma per censoring branch
            let gphi = match statuses[i] {
                CensorStatus::Interior => {
                    let r = y - f;
                    1.0 - r * r / (sigma * sigma)
                }
                CensorStatus::LowerCensored => {
                    let z = (bounds.lower - f) / sigma;
                    inv_mills(z) * z
                }
                CensorStatus::UpperCensored => {
                    let z = (bounds.upper - f) / sigma;
                    -inv_mills(-z) * z
                }
            };
            grad[p + 1] += gphi;
        }
        // per-observation scale keeps the stopping rule size-independent
        let inv_n = 1.0 / n as f64;
        for g in &mut grad {
            *g *= inv_n;
        }
        (total * inv_n, grad)
    };

    let res = bfgs_min(fg, &theta0, 1e-6, 2 * MAX_ITER);
    let sigma = res.x[p + 1].exp();
    let (intercept, coefficients) = std.unscale(res.x[0], &res.x[1..=p]);
    let warning = if res.converged {
        None
    } else {
        Some(format!(
            "tobit fit did not converge after {} iterations (grad max-norm {:.3e})",
            res.iterations, res.grad_norm
        ))
    };
    Ok(LinearFit {
        model: LinearModel {
            intercept,
            coefficients,
            sigma: Some(sigma),
            bounds: Some(bounds),
        },
        converged: res.converged,
        iterations: res.iterations,
        warning,
    })
}
