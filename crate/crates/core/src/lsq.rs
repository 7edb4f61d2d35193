//! Levenberg–Marquardt nonlinear least squares shared by the peak, Rabi and
//! decay fitters.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost decrease below which the fit is converged.
    pub ftol: f64,
    /// Relative step size below which the fit is converged.
    pub xtol: f64,
    pub initial_lambda: f64,
    /// Converged once the cost falls below this fraction of its start value.
    pub cost_floor: f64,
    /// Converged after this many accepted steps in a row that each gain
    /// less than 1e-9 relative cost.
    pub stall_steps: usize,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: 1e-15,
            xtol: 1e-12,
            initial_lambda: 1e-3,
            cost_floor: 1e-20,
            stall_steps: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    /// (JᵀJ)⁻¹ at the solution, unscaled.
    pub inverse_hessian: Option<DMatrix<f64>>,
    pub n_residuals: usize,
}

impl LmFit {
    /// Parameter covariance scaled by the residual variance cost/(m − n).
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        let dof = self.n_residuals.checked_sub(self.params.len())?;
        if dof == 0 {
            return None;
        }
        self.inverse_hessian
            .as_ref()
            .map(|h| h * (self.cost / dof as f64))
    }

    pub fn standard_errors(&self) -> Option<Vec<f64>> {
        self.covariance()
            .map(|c| (0..c.nrows()).map(|k| c[(k, k)].max(0.0).sqrt()).collect())
    }
}

/// Forward-difference Jacobian of `f` at `p`.
pub fn numeric_jacobian<F>(f: &F, p: &[f64], m: usize) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let f0 = f(p);
    let mut jac = DMatrix::zeros(m, p.len());
    let mut q = p.to_vec();
    for k in 0..p.len() {
        let h = 1e-7 * p[k].abs().max(1e-3);
        q[k] = p[k] + h;
        let f1 = f(&q);
        q[k] = p[k];
        for r in 0..m {
            jac[(r, k)] = (f1[r] - f0[r]) / h;
        }
    }
    jac
}

/// Minimize Σ r(p)² from `p0`. `project` maps trial points back into the
/// feasible set (e.g. positive widths).
pub fn levenberg_marquardt<F, J, P>(
    residuals: F,
    jacobian: J,
    project: P,
    p0: &[f64],
    opts: &LmOptions,
) -> Result<LmFit>
where
    F: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> DMatrix<f64>,
    P: Fn(&mut [f64]),
{
    let n = p0.len();
    let mut p = p0.to_vec();
    project(&mut p);
    let mut r = DVector::from_vec(residuals(&p));
    let m = r.len();
    let mut cost = r.norm_squared();
    let cost0 = cost;
    let mut stalled = 0;
    let mut lambda = opts.initial_lambda;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&p);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        if g.amax() < 1e-300 {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|ch| ch.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            project(&mut trial);
            let r_trial = DVector::from_vec(residuals(&trial));
            let cost_trial = r_trial.norm_squared();
            if cost_trial.is_finite() && cost_trial <= cost {
                let dx = trial
                    .iter()
                    .zip(&p)
                    .map(|(a, b)| (a - b).abs() / b.abs().max(1e-12))
                    .fold(0.0, f64::max);
                let rel = (cost - cost_trial) / cost.max(1e-300);
                p = trial;
                r = r_trial;
                cost = cost_trial;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                stalled = if rel < 1e-9 { stalled + 1 } else { 0 };
                if rel < opts.ftol || dx < opts.xtol || cost <= opts.cost_floor * cost0 || stalled >= opts.stall_steps {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations });
    }
    let jac = jacobian(&p);
    let inverse_hessian = (jac.transpose() * &jac).try_inverse();
    Ok(LmFit {
        params: p,
        cost,
        iterations,
        inverse_hessian,
        n_residuals: m,
    })
}
