//! Damped Gauss-Newton engine (Levenberg-Marquardt damping schedule) with
//! analytic Jacobians, plus the small dense linear algebra it needs.
//! Everything is deterministic: no randomness, fixed iteration policy.

/// One weighted observation `(x, y, σ)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Observation {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

impl Observation {
    /// Weight `1/σ²`; a zero/invalid σ falls back to σ = 1.
    fn weight(&self) -> f64 {
        if self.sigma > 0.0 && self.sigma.is_finite() {
            1.0 / (self.sigma * self.sigma)
        } else {
            1.0
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct LmFit {
    pub params: Vec<f64>,
    /// Flattened row-major covariance `(JᵀJ)⁻¹` at the optimum.
    pub covariance: Vec<f64>,
    pub chi2: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LmFit {
    pub fn stderr(&self, index: usize) -> f64 {
        let n = self.params.len();
        self.covariance[index * n + index].max(0.0).sqrt()
    }
}

pub(crate) struct LmOptions {
    pub max_iterations: usize,
    pub chi2_rel_tol: f64,
    pub step_rel_tol: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            chi2_rel_tol: 1e-12,
            step_rel_tol: 1e-11,
            initial_damping: 1e-3,
        }
    }
}

/// Model evaluator: `(params, x, grad_out) -> value`, filling `grad_out`
/// with `∂f/∂params`.
pub(crate) type ModelFn<'a> = &'a dyn Fn(&[f64], f64, &mut [f64]) -> f64;

/// Minimize `Σ w_i (y_i − f(params, x_i))²`.
///
/// `eval(params, x, grad)` returns the model value and fills `grad` with
/// `∂f/∂params`. Non-convergence after the iteration cap is reported via
/// `converged = false`, never silently accepted.
pub(crate) fn levenberg_marquardt(
    eval: ModelFn<'_>,
    data: &[Observation],
    start: &[f64],
    options: &LmOptions,
) -> LmFit {
    let n_par = start.len();
    let mut params = start.to_vec();
    let mut grad_buf = vec![0.0; n_par];

    let chi2_of = |p: &[f64], grad_buf: &mut [f64]| -> f64 {
        data.iter()
            .map(|obs| {
                let f = eval(p, obs.x, grad_buf);
                let r = obs.y - f;
                obs.weight() * r * r
            })
            .sum()
    };

    let mut chi2 = chi2_of(&params, &mut grad_buf);
    let mut damping = options.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..options.max_iterations {
        iterations = iter + 1;
        // Normal equations: (JᵀWJ) δ = JᵀW r.
        let mut jtj = vec![0.0; n_par * n_par];
        let mut jtr = vec![0.0; n_par];
        for obs in data {
            let f = eval(&params, obs.x, &mut grad_buf);
            let w = obs.weight();
            let r = obs.y - f;
            for a in 0..n_par {
                jtr[a] += w * grad_buf[a] * r;
                for b in a..n_par {
                    jtj[a * n_par + b] += w * grad_buf[a] * grad_buf[b];
                }
            }
        }
        for a in 0..n_par {
            for b in 0..a {
                jtj[a * n_par + b] = jtj[b * n_par + a];
            }
        }

        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = jtj.clone();
            for a in 0..n_par {
                let d = damped[a * n_par + a];
                damped[a * n_par + a] = d + damping * d.max(1e-12);
            }
            let Some(step) = solve(&mut damped, &jtr, n_par) else {
                damping *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(&step).map(|(p, s)| p + s).collect();
            let trial_chi2 = chi2_of(&trial, &mut grad_buf);
            if trial_chi2.is_finite() && trial_chi2 <= chi2 {
                let rel_drop = (chi2 - trial_chi2) / chi2.max(1e-300);
                let rel_step = step
                    .iter()
                    .zip(&params)
                    .map(|(s, p)| s.abs() / (p.abs() + 1e-12))
                    .fold(0.0f64, f64::max);
                params = trial;
                chi2 = trial_chi2;
                damping = (damping * 0.1).max(1e-14);
                accepted = true;
                if rel_drop < options.chi2_rel_tol || rel_step < options.step_rel_tol {
                    converged = true;
                }
                break;
            }
            damping *= 10.0;
        }
        if converged || !accepted {
            // A fully rejected iteration means the damping blew up; treat a
            // tiny gradient as convergence, otherwise report failure.
            if !accepted {
                let grad_norm = jtr.iter().map(|g| g * g).sum::<f64>().sqrt();
                converged = grad_norm < 1e-8 * chi2.max(1.0);
            }
            break;
        }
    }

    // Covariance from the undamped normal matrix at the optimum.
    let mut jtj = vec![0.0; n_par * n_par];
    for obs in data {
        let _ = eval(&params, obs.x, &mut grad_buf);
        let w = obs.weight();
        for a in 0..n_par {
            for b in a..n_par {
                jtj[a * n_par + b] += w * grad_buf[a] * grad_buf[b];
            }
        }
    }
    for a in 0..n_par {
        for b in 0..a {
            jtj[a * n_par + b] = jtj[b * n_par + a];
        }
    }
    let covariance = invert(&jtj, n_par).unwrap_or_else(|| vec![f64::NAN; n_par * n_par]);

    LmFit {
        params,
        covariance,
        chi2,
        iterations,
        converged,
    }
}

/// Weighted linear least squares on a fixed basis: returns coefficients and
/// covariance for `y ≈ Σ a_k basis_k(x)`.
pub(crate) fn weighted_linear_fit(
    basis: &dyn Fn(f64, &mut [f64]),
    data: &[Observation],
    n_par: usize,
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let mut m = vec![0.0; n_par * n_par];
    let mut b = vec![0.0; n_par];
    let mut phi = vec![0.0; n_par];
    for obs in data {
        basis(obs.x, &mut phi);
        let w = obs.weight();
        for i in 0..n_par {
            b[i] += w * phi[i] * obs.y;
            for j in i..n_par {
                m[i * n_par + j] += w * phi[i] * phi[j];
            }
        }
    }
    for i in 0..n_par {
        for j in 0..i {
            m[i * n_par + j] = m[j * n_par + i];
        }
    }
    let covariance = invert(&m, n_par)?;
    let coeffs = solve(&mut m.clone(), &b, n_par)?;
    let chi2: f64 = data
        .iter()
        .map(|obs| {
            basis(obs.x, &mut phi);
            let f: f64 = coeffs.iter().zip(&phi).map(|(c, p)| c * p).sum();
            let r = obs.y - f;
            obs.weight() * r * r
        })
        .sum();
    Some((coeffs, covariance, chi2))
}

/// Gaussian elimination with partial pivoting; `a` is row-major `n×n` and is
/// destroyed. Returns `None` for a (numerically) singular system.
pub(crate) fn solve(a: &mut [f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            rhs.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in (row + 1)..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Some(x)
}

/// Gauss-Jordan inverse of a row-major `n×n` matrix.
pub(crate) fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut work = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if work[row * n + col].abs() > work[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if work[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                work.swap(col * n + k, pivot * n + k);
                inv.swap(col * n + k, pivot * n + k);
            }
        }
        let diag = work[col * n + col];
        for k in 0..n {
            work[col * n + k] /= diag;
            inv[col * n + k] /= diag;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = work[row * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n {
                work[row * n + k] -= factor * work[col * n + k];
                inv[row * n + k] -= factor * inv[col * n + k];
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_invert_small_system() {
        let a = vec![4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0];
        let b = vec![1.0, 2.0, 3.0];
        let x = solve(&mut a.clone(), &b, 3).unwrap();
        for i in 0..3 {
            let lhs: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((lhs - b[i]).abs() < 1e-12);
        }
        let inv = invert(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let prod: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lm_recovers_exponential_decay() {
        // y = p0 · exp(−p1 x), noiseless.
        let truth = [2.5, 0.7];
        let data: Vec<Observation> = (0..40)
            .map(|i| {
                let x = i as f64 * 0.1;
                Observation {
                    x,
                    y: truth[0] * (-truth[1] * x).exp(),
                    sigma: 1.0,
                }
            })
            .collect();
        let eval = |p: &[f64], x: f64, grad: &mut [f64]| -> f64 {
            let e = (-p[1] * x).exp();
            grad[0] = e;
            grad[1] = -p[0] * x * e;
            p[0] * e
        };
        let fit = levenberg_marquardt(&eval, &data, &[1.0, 0.2], &LmOptions::default());
        assert!(fit.converged);
        assert!((fit.params[0] - truth[0]).abs() < 1e-8);
        assert!((fit.params[1] - truth[1]).abs() < 1e-8);
        assert!(fit.chi2 < 1e-16);
    }

    #[test]
    fn linear_fit_matches_closed_form() {
        // y = 3 + 2x with unequal weights.
        let data: Vec<Observation> = (0..10)
            .map(|i| {
                let x = i as f64;
                Observation {
                    x,
                    y: 3.0 + 2.0 * x,
                    sigma: 1.0 + 0.1 * x,
                }
            })
            .collect();
        let basis = |x: f64, phi: &mut [f64]| {
            phi[0] = 1.0;
            phi[1] = x;
        };
        let (coeffs, _, chi2) = weighted_linear_fit(&basis, &data, 2).unwrap();
        assert!((coeffs[0] - 3.0).abs() < 1e-12);
        assert!((coeffs[1] - 2.0).abs() < 1e-12);
        assert!(chi2 < 1e-20);
    }
}
