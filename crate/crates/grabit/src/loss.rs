//! Censored (Tobit) loss calculus plus the Bernoulli-logit and squared
//! losses used by the baseline models.
//!
//! The Tobit negative log-likelihood mixes a continuous interior branch
//! with discrete point masses at the censoring bounds. All tail
//! quantities (log CDF, inverse Mills ratio) are evaluated in log space
//! so that gradients and Hessians stay finite far into the tails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT_2PI: f64 = 2.5066282746310002;
pub const LN_SQRT_2PI: f64 = 0.9189385332046727;

/// Default floor applied to Hessians before Newton steps.
pub const DEFAULT_HESSIAN_FLOOR: f64 = 1e-12;

/// Relative tolerance for snapping responses onto a censoring bound.
pub const SNAP_REL_TOL: f64 = 1e-9;

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

pub fn norm_log_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// log Phi(z). erfc keeps full relative accuracy until it underflows
/// near z = -37, so the asymptotic tail expansion only takes over deep in
/// the lower tail; in the upper tail log1p keeps the result strictly
/// negative instead of rounding to zero.
pub fn norm_log_cdf(z: f64) -> f64 {
    if z > 8.0 {
        (-norm_cdf(-z)).ln_1p()
    } else if z > -35.0 {
        norm_cdf(z).ln()
    } else {
        // Phi(z) = phi(z)/(-z) * (1 - 1/z^2 + 3/z^4 - 15/z^6 + ...)
        let zi = 1.0 / (z * z);
        let series = 1.0
            + zi * (-1.0
                + zi * (3.0
                    + zi * (-15.0
                        + zi * (105.0 + zi * (-945.0 + zi * (10395.0 - zi * 135135.0))))));
        norm_log_pdf(z) - (-z).ln() + series.ln()
    }
}

/// Inverse Mills ratio phi(z)/Phi(z).
pub fn inv_mills(z: f64) -> f64 {
    (norm_log_pdf(z) - norm_log_cdf(z)).exp()
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidSigma(sigma));
    }
    Ok(())
}

/// Censoring status of a single observation relative to its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensorStatus {
    LowerCensored,
    Interior,
    UpperCensored,
}

/// Lower/upper censoring thresholds; either may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoringBounds {
    #[serde(with = "opt_inf", rename = "lower")]
    pub lower: f64,
    #[serde(with = "opt_inf", rename = "upper")]
    pub upper: f64,
}

/// JSON has no literal for infinities; infinite bounds round-trip as null.
mod opt_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let opt = Option::<f64>::deserialize(d)?;
        Ok(opt.unwrap_or(f64::NAN))
    }
}

impl CensoringBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || !(lower < upper) {
            return Err(Error::InvalidBounds { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    /// One-sided upper censoring: (-inf, upper].
    pub fn upper_only(upper: f64) -> Result<Self> {
        Self::new(f64::NEG_INFINITY, upper)
    }

    /// No censoring at all; the Tobit loss reduces to the Gaussian loss.
    pub fn unbounded() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    /// Re-validate after deserialization (null bounds come back as NaN).
    pub fn validated(self) -> Result<Self> {
        let lower = if self.lower.is_nan() {
            f64::NEG_INFINITY
        } else {
            self.lower
        };
        let upper = if self.upper.is_nan() {
            f64::INFINITY
        } else {
            self.upper
        };
        Self::new(lower, upper)
    }

    pub fn is_censoring(&self) -> bool {
        self.lower.is_finite() || self.upper.is_finite()
    }

    /// Status by exact equality with a bound; `snap` handles near-ties.
    pub fn status(&self, y: f64) -> Result<CensorStatus> {
        if y == self.lower {
            Ok(CensorStatus::LowerCensored)
        } else if y == self.upper {
            Ok(CensorStatus::UpperCensored)
        } else if y > self.lower && y < self.upper {
            Ok(CensorStatus::Interior)
        } else {
            Err(Error::ResponseOutsideBounds {
                y,
                lower: self.lower,
                upper: self.upper,
            })
        }
    }

    /// Snapping tolerance: relative to the bound spread when both bounds are
    /// finite, otherwise relative to the magnitude of the finite bound.
    fn snap_tol(&self) -> f64 {
        if self.lower.is_finite() && self.upper.is_finite() {
            SNAP_REL_TOL * (self.upper - self.lower)
        } else {
            let b = if self.lower.is_finite() {
                self.lower
            } else {
                self.upper
            };
            SNAP_REL_TOL * b.abs().max(1.0)
        }
    }

    /// Snap a response onto a bound if it lies within the ingestion
    /// tolerance; values already inside stay untouched.
    pub fn snap(&self, y: f64) -> f64 {
        let tol = self.snap_tol();
        if self.lower.is_finite() && (y - self.lower).abs() <= tol {
            self.lower
        } else if self.upper.is_finite() && (y - self.upper).abs() <= tol {
            self.upper
        } else {
            y
        }
    }
}

/// Tobit density of the observed response with respect to Lebesgue measure
/// plus point masses at the bounds.
pub fn tobit_density(y: f64, f: f64, sigma: f64, bounds: &CensoringBounds) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(match bounds.status(y)? {
        CensorStatus::LowerCensored => norm_cdf((bounds.lower - f) / sigma),
        CensorStatus::Interior => norm_pdf((y - f) / sigma) / sigma,
        CensorStatus::UpperCensored => norm_cdf((f - bounds.upper) / sigma),
    })
}

/// Negative Tobit log-likelihood of a single observation, computed in
/// log space.
pub fn tobit_loss(y: f64, f: f64, sigma: f64, bounds: &CensoringBounds) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(match bounds.status(y)? {
        CensorStatus::LowerCensored => -norm_log_cdf((bounds.lower - f) / sigma),
        CensorStatus::Interior => {
            let r = y - f;
            r * r / (2.0 * sigma * sigma) + sigma.ln() + LN_SQRT_2PI
        }
        CensorStatus::UpperCensored => -norm_log_cdf((f - bounds.upper) / sigma),
    })
}

/// dL/dF of the Tobit loss; censored branches use the inverse Mills ratio.
pub fn tobit_gradient(y: f64, f: f64, sigma: f64, bounds: &CensoringBounds) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(match bounds.status(y)? {
        CensorStatus::LowerCensored => inv_mills((bounds.lower - f) / sigma) / sigma,
        CensorStatus::Interior => -(y - f) / (sigma * sigma),
        CensorStatus::UpperCensored => -inv_mills((f - bounds.upper) / sigma) / sigma,
    })
}

/// d2L/dF2 of the Tobit loss; strictly positive for finite inputs.
pub fn tobit_hessian(y: f64, f: f64, sigma: f64, bounds: &CensoringBounds) -> Result<f64> {
    check_sigma(sigma)?;
    let s2 = sigma * sigma;
    Ok(match bounds.status(y)? {
        CensorStatus::LowerCensored => {
            let z = (bounds.lower - f) / sigma;
            let m = inv_mills(z);
            m * (z + m) / s2
        }
        CensorStatus::Interior => 1.0 / s2,
        CensorStatus::UpperCensored => {
            let z = (bounds.upper - f) / sigma;
            let m = inv_mills(-z);
            m * (m - z) / s2
        }
    })
}

/// Bernoulli negative log-likelihood with logistic link: returns
/// (loss, gradient, hessian) in F, overflow-safe in both tails.
pub fn bernoulli_logit_loss_grad_hess(y: f64, f: f64) -> Result<(f64, f64, f64)> {
    if y != 0.0 && y != 1.0 {
        return Err(Error::NonBinaryResponse(y));
    }
    // loss = log(1 + e^f) - y f, arranged so the surviving term is never
    // the difference of two large near-equal quantities
    let loss = if f > 0.0 {
        (-f).exp().ln_1p() + (1.0 - y) * f
    } else {
        f.exp().ln_1p() - y * f
    };
    // p and its complement q = 1 - p, each computed from the small
    // exponential so neither saturates to exactly 0 or 1
    let (p, q) = if f >= 0.0 {
        let e = (-f).exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    } else {
        let e = f.exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    };
    // grad = p - y without cancellation in either tail
    let grad = if y == 1.0 { -q } else { p };
    let hess = p * q;
    Ok((loss, grad, hess))
}

/// Loss-family identity used by boosted and linear models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "loss", rename_all = "snake_case")]
pub enum Loss {
    Tobit {
        bounds: CensoringBounds,
        sigma: f64,
    },
    BernoulliLogit,
    Squared,
}

impl Loss {
    pub fn tobit(bounds: CensoringBounds, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Loss::Tobit { bounds, sigma })
    }

    pub fn validate_responses(&self, ys: &[f64]) -> Result<()> {
        match self {
            Loss::Tobit { bounds, .. } => {
                for &y in ys {
                    bounds.status(y)?;
                }
            }
            Loss::BernoulliLogit => {
                for &y in ys {
                    if y != 0.0 && y != 1.0 {
                        return Err(Error::NonBinaryResponse(y));
                    }
                }
            }
            Loss::Squared => {
                for &y in ys {
                    if !y.is_finite() {
                        return Err(Error::NonFinite(format!("response {y}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn loss(&self, y: f64, f: f64) -> Result<f64> {
        match self {
            Loss::Tobit { bounds, sigma } => tobit_loss(y, f, *sigma, bounds),
            Loss::BernoulliLogit => Ok(bernoulli_logit_loss_grad_hess(y, f)?.0),
            Loss::Squared => Ok(0.5 * (y - f) * (y - f)),
        }
    }

    pub fn grad(&self, y: f64, f: f64) -> Result<f64> {
        match self {
            Loss::Tobit { bounds, sigma } => tobit_gradient(y, f, *sigma, bounds),
            Loss::BernoulliLogit => Ok(bernoulli_logit_loss_grad_hess(y, f)?.1),
            Loss::Squared => Ok(f - y),
        }
    }

    /// Hessian floored at `DEFAULT_HESSIAN_FLOOR` for Newton steps.
    pub fn hess(&self, y: f64, f: f64) -> Result<f64> {
        let h = match self {
            Loss::Tobit { bounds, sigma } => tobit_hessian(y, f, *sigma, bounds)?,
            Loss::BernoulliLogit => bernoulli_logit_loss_grad_hess(y, f)?.2,
            Loss::Squared => 1.0,
        };
        Ok(h.max(DEFAULT_HESSIAN_FLOOR))
    }

    /// Initial constant F^[0]: the response mean for Tobit/Squared, the
    /// empirical log-odds for the Bernoulli-logit loss.
    pub fn init_value(&self, ys: &[f64]) -> Result<f64> {
        if ys.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        Ok(match self {
            Loss::Tobit { .. } | Loss::Squared => mean,
            Loss::BernoulliLogit => {
                let n = ys.len() as f64;
                let p = mean.clamp(0.5 / n, 1.0 - 0.5 / n);
                (p / (1.0 - p)).ln()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_sided() -> CensoringBounds {
        CensoringBounds::new(0.0, 10.0).unwrap()
    }

    #[test]
    fn density_branch_values() {
        let b = two_sided();
        // upper bound, f at the bound
        assert!((tobit_density(10.0, 10.0, 1.0, &b).unwrap() - 0.5).abs() < 1e-15);
        // interior at the mode
        let d = tobit_density(5.0, 5.0, 1.0, &b).unwrap();
        assert!((d - 0.3989422804014327).abs() < 1e-15);
        // lower bound: Phi(-1), reference from an independent high-precision
        // erfc evaluation
        let d = tobit_density(0.0, 1.0, 1.0, &b).unwrap();
        assert!((d - 0.15865525393145705).abs() < 1e-15);
    }

    #[test]
    fn loss_branch_values() {
        let b = two_sided();
        let l = tobit_loss(5.0, 5.0, 1.0, &b).unwrap();
        assert!((l - 0.9189385332046727).abs() < 1e-15);
        let l = tobit_loss(10.0, 10.0, 1.0, &b).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        // deep upper tail, y = y_u, f = y_u - 10: -log Phi(-10); reference
        // value computed with 30-digit arithmetic
        let l = tobit_loss(10.0, 0.0, 1.0, &b).unwrap();
        assert!((l - 53.23128515051247).abs() / 53.23128515051247 < 1e-12);
    }

    #[test]
    fn gradient_branch_values() {
        let b = two_sided();
        assert!((tobit_gradient(5.0, 4.0, 1.0, &b).unwrap() - (-1.0)).abs() < 1e-15);
        let g = tobit_gradient(10.0, 10.0, 1.0, &b).unwrap();
        assert!((g - (-0.7978845608028654)).abs() < 1e-14);
        let g = tobit_gradient(0.0, 0.0, 1.0, &b).unwrap();
        assert!((g - 0.7978845608028654).abs() < 1e-14);
    }

    #[test]
    fn hessian_branch_values() {
        let b = two_sided();
        assert!((tobit_hessian(5.0, 1.0, 1.0, &b).unwrap() - 1.0).abs() < 1e-15);
        let h = tobit_hessian(0.0, 0.0, 1.0, &b).unwrap();
        assert!((h - 2.0 / std::f64::consts::PI).abs() < 1e-14);
        let h = tobit_hessian(10.0, 10.0, 1.0, &b).unwrap();
        assert!((h - 2.0 / std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let b = two_sided();
        assert!(matches!(
            tobit_loss(5.0, 0.0, -1.0, &b),
            Err(Error::InvalidSigma(_))
        ));
        assert!(matches!(
            tobit_loss(11.0, 0.0, 1.0, &b),
            Err(Error::ResponseOutsideBounds { .. })
        ));
        assert!(CensoringBounds::new(3.0, 3.0).is_err());
        assert!(CensoringBounds::new(5.0, 1.0).is_err());
    }

    #[test]
    fn bernoulli_values() {
        let (l, g, h) = bernoulli_logit_loss_grad_hess(1.0, 0.0).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((g + 0.5).abs() < 1e-15);
        assert!((h - 0.25).abs() < 1e-15);
        let (l, g, h) = bernoulli_logit_loss_grad_hess(0.0, 0.0).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((g - 0.5).abs() < 1e-15);
        assert!((h - 0.25).abs() < 1e-15);
        // saturation: reference value log(1+e^-50) from high-precision log1p
        let (l, g, h) = bernoulli_logit_loss_grad_hess(1.0, 50.0).unwrap();
        let e50 = 1.9287498479639178e-22;
        assert!((l - e50).abs() / e50 < 1e-12);
        assert!((g + e50).abs() / e50 < 1e-12);
        assert!((h - e50).abs() / e50 < 1e-12);
        assert!(bernoulli_logit_loss_grad_hess(0.5, 0.0).is_err());
    }

    #[test]
    fn log_cdf_tail_accuracy() {
        // log Phi(-12) reference from 30-digit arithmetic
        let v = norm_log_cdf(-12.0);
        assert!((v - (-75.41067300156879)).abs() / 75.41 < 1e-12);
        // continuity across the branch switches at z = -35 and z = 8
        // (offset small enough that the local slope |z| contributes < 1e-13
        // relative difference)
        let a = norm_log_cdf(-35.0 + 1e-12);
        let b = norm_log_cdf(-35.0 - 1e-12);
        assert!((a - b).abs() / a.abs() < 1e-12);
        let a = norm_log_cdf(8.0 + 1e-9);
        let b = norm_log_cdf(8.0 - 1e-9);
        assert!((a - b).abs() < 1e-14);
        // upper tail stays strictly negative instead of rounding to zero
        assert!(norm_log_cdf(10.0) < 0.0);
        // inverse Mills ratio deep in the tail, reference value
        assert!((inv_mills(-12.0) - 12.082214175254284).abs() < 1e-10);
    }

    /// Grid covering all three branches and |z| up to 12.
    fn branch_grid() -> Vec<(f64, f64, f64)> {
        let b = two_sided();
        let mut grid = Vec::new();
        for &sigma in &[0.5, 1.0, 2.0] {
            for zi in -24..=24 {
                let z = zi as f64 * 0.5;
                // lower-censored: y = 0, f = -z*sigma
                grid.push((0.0, -z * sigma, sigma));
                // upper-censored: y = 10, f = 10 - z*sigma
                grid.push((10.0, 10.0 - z * sigma, sigma));
                // interior: y = 5, f = 5 - z*sigma (keep y in (0,10))
                grid.push((5.0, 5.0 - z * sigma, sigma));
            }
        }
        grid.retain(|&(y, _, _)| b.status(y).is_ok());
        grid
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let b = two_sided();
        for (y, f, sigma) in branch_grid() {
            let h = 1e-6 * sigma.max(1.0);
            let lp = tobit_loss(y, f + h, sigma, &b).unwrap();
            let lm = tobit_loss(y, f - h, sigma, &b).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let g = tobit_gradient(y, f, sigma, &b).unwrap();
            // absolute escape hatch: once |g| drops toward 1e-10 the loss
            // changes by less than double precision over the FD step, so the
            // quotient is pure rounding noise
            let scale = g.abs().max(1e-8);
            assert!(
                (fd - g).abs() / scale < 1e-5 || (fd - g).abs() < 1e-9,
                "grad mismatch at y={y} f={f} sigma={sigma}: fd={fd} g={g}"
            );
        }
    }

    #[test]
    fn hessian_matches_finite_differences_and_is_positive() {
        let b = two_sided();
        for (y, f, sigma) in branch_grid() {
            let h = 1e-6 * sigma.max(1.0);
            let gp = tobit_gradient(y, f + h, sigma, &b).unwrap();
            let gm = tobit_gradient(y, f - h, sigma, &b).unwrap();
            let fd = (gp - gm) / (2.0 * h);
            let hh = tobit_hessian(y, f, sigma, &b).unwrap();
            assert!(hh > 0.0, "hessian not positive at y={y} f={f} sigma={sigma}");
            let scale = hh.abs().max(1e-8);
            assert!(
                (fd - hh).abs() / scale < 1e-4 || (fd - hh).abs() < 1e-9,
                "hess mismatch at y={y} f={f} sigma={sigma}: fd={fd} h={hh}"
            );
        }
    }

    #[test]
    fn loss_is_monotone_at_bounds() {
        // at y = y_u the loss decreases in f; at y = y_l it increases
        let b = two_sided();
        let mut prev_u = f64::INFINITY;
        let mut prev_l = f64::NEG_INFINITY;
        for i in 0..100 {
            let f = -10.0 + 0.25 * i as f64;
            let lu = tobit_loss(10.0, f, 1.0, &b).unwrap();
            let ll = tobit_loss(0.0, f, 1.0, &b).unwrap();
            assert!(lu < prev_u);
            assert!(ll > prev_l);
            prev_u = lu;
            prev_l = ll;
        }
    }

    #[test]
    fn unbounded_tobit_reduces_to_scaled_squared_loss() {
        let b = CensoringBounds::unbounded();
        for &sigma in &[0.5, 1.0, 3.0] {
            for i in 0..20 {
                let y = 1.3;
                let f = -2.0 + 0.4 * i as f64;
                let f2 = f + 0.7;
                let dt = tobit_loss(y, f, sigma, &b).unwrap() - tobit_loss(y, f2, sigma, &b).unwrap();
                let ds = (0.5 * (y - f) * (y - f) - 0.5 * (y - f2) * (y - f2)) / (sigma * sigma);
                assert!((dt - ds).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn density_has_unit_total_mass() {
        // point masses at the bounds plus Simpson quadrature of the interior
        let b = two_sided();
        for &(f, sigma) in &[(3.0, 1.0), (9.0, 2.0), (-1.0, 0.5), (11.0, 3.0)] {
            let mass_l = norm_cdf((b.lower - f) / sigma);
            let mass_u = norm_cdf((f - b.upper) / sigma);
            let n = 20000;
            let h = (b.upper - b.lower) / n as f64;
            let mut s = 0.0;
            for i in 0..=n {
                let y = b.lower + i as f64 * h;
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                s += w * norm_pdf((y - f) / sigma) / sigma;
            }
            let interior = s * h / 3.0;
            assert!((mass_l + mass_u + interior - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn snapping_detects_near_ties() {
        let b = two_sided();
        assert_eq!(b.snap(10.0 - 1e-10), 10.0);
        assert_eq!(b.snap(1e-10), 0.0);
        assert_eq!(b.snap(5.0), 5.0);
        let one = CensoringBounds::upper_only(60.0).unwrap();
        assert_eq!(one.snap(60.0 + 1e-9), 60.0);
        assert_eq!(one.snap(59.9), 59.9);
    }

    #[test]
    fn bounds_serde_roundtrip_with_infinities() {
        let b = CensoringBounds::upper_only(60.0).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.contains("null"));
        let back: CensoringBounds = serde_json::from_str(&s).unwrap();
        let back = back.validated().unwrap();
        assert_eq!(back.lower, f64::NEG_INFINITY);
        assert_eq!(back.upper, 60.0);
    }
}
