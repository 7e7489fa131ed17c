//! Small numerical optimizers: golden-section 1-D search and a dense BFGS
//! quasi-Newton minimizer with backtracking line search.

pub struct GoldenResult {
    pub x: f64,
    pub fx: f64,
}

/// Maximize a unimodal function on [a, b] by golden-section search.
pub fn golden_section_max(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> GoldenResult {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    // never come back worse than an evaluated interior point
    if f1 > fx && f1 > f2 {
        GoldenResult { x: x1, fx: f1 }
    } else if f2 > fx {
        GoldenResult { x: x2, fx: f2 }
    } else {
        GoldenResult { x, fx }
    }
}

pub struct BfgsResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize f by BFGS with Armijo backtracking. `fg` returns the value
/// and gradient. Converges when the gradient max-norm drops below `tol`.
pub fn bfgs_min(
    mut fg: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> BfgsResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = fg(&x);
    // inverse Hessian approximation, started at identity
    let mut h_inv = vec![0.0; n * n];
    for i in 0..n {
        h_inv[i * n + i] = 1.0;
    }

    let max_norm = |v: &[f64]| v.iter().fold(0.0f64, |m, &a| m.max(a.abs()));
    let mut iterations = 0;
    let mut converged = max_norm(&g) < tol;

    while !converged && iterations < max_iter {
        iterations += 1;
        // direction d = -H_inv * g
        let mut d = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += h_inv[i * n + j] * g[j];
            }
            d[i] = -s;
        }
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !slope.is_finite() || slope >= 0.0 {
            // reset to steepest descent when curvature info degenerates
            for i in 0..n * n {
                h_inv[i] = 0.0;
            }
            for i in 0..n {
                h_inv[i * n + i] = 1.0;
                d[i] = -g[i];
            }
            slope = -g.iter().map(|v| v * v).sum::<f64>();
            if slope == 0.0 {
                break;
            }
        }

        // Armijo backtracking
        let mut step = 1.0;
        let c1 = 1e-4;
        let mut accepted = false;
        let mut x_new = x.clone();
        let mut f_new = fx;
        let mut g_new = g.clone();
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            let (fv, gv) = fg(&x_new);
            // the noise allowance keeps the search from stalling when the
            // true decrease falls below double precision near the optimum
            if fv.is_finite() && fv <= fx + c1 * step * slope + 1e-13 * (1.0 + fx.abs()) {
                f_new = fv;
                g_new = gv;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }

        // BFGS update of the inverse Hessian
        let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
        let yv: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            // H' = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let mut hy = vec![0.0; n];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += h_inv[i * n + j] * yv[j];
                }
                hy[i] = acc;
            }
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h_inv[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
        }

        x = x_new;
        fx = f_new;
        g = g_new;
        converged = max_norm(&g) < tol;
    }

    BfgsResult {
        grad_norm: max_norm(&g),
        x,
        fx,
        iterations,
        converged,
    }
}

/// Solve the symmetric positive definite system A x = b by Cholesky,
/// with a small ridge added for near-singular systems.
pub fn solve_spd(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = a.to_vec();
    let ridge = 1e-10 * (1.0 + (0..n).map(|i| a[i * n + i].abs()).fold(0.0f64, f64::max));
    for i in 0..n {
        l[i * n + i] += ridge;
    }
    // in-place Cholesky, lower triangle
    for j in 0..n {
        for k in 0..j {
            let ljk = l[j * n + k];
            for i in j..n {
                l[i * n + j] -= l[i * n + k] * ljk;
            }
        }
        let d = l[j * n + j];
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let sqrt_d = d.sqrt();
        for i in j..n {
            l[i * n + j] /= sqrt_d;
        }
    }
    // forward/back substitution
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_max() {
        let r = golden_section_max(|x| -(x - 1.3) * (x - 1.3), -5.0, 5.0, 1e-8);
        assert!((r.x - 1.3).abs() < 1e-6);
    }

    #[test]
    fn bfgs_minimizes_rosenbrock() {
        let fg = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            (f, g)
        };
        let r = bfgs_min(fg, &[-1.2, 1.0], 1e-8, 200);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn spd_solver_round_trips() {
        // A = [[4,1],[1,3]], b = [1,2]
        let a = [4.0, 1.0, 1.0, 3.0];
        let x = solve_spd(&a, &[1.0, 2.0], 2).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-8);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-8);
    }
}
