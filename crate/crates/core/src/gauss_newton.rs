//! Gauss-Newton MAP solver and direct normal-equation minimizers.
//!
//! These routines solve the same estimation problems as the filter
//! corrections but through an entirely different route — stacked weighted
//! least squares and normal equations instead of gain algebra — which makes
//! them suitable as independent cross-checks:
//!
//! * [`map_correct_gn`] iterates the Gauss-Newton normal equations on the
//!   stacked prior + observation system; at convergence its mean matches
//!   the iterated EKF and its covariance is the inverse approximate
//!   Hessian `(P⁻¹ + HᵀR⁻¹H)⁻¹`.
//! * [`ieskf_cost_minimize`] minimizes the quadratic error-state cost of a
//!   single iterated update directly, for comparison against the gain-form
//!   step the filter takes.
//!
//! No step damping is applied; divergence is reported, never repaired.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, RealField};

use crate::filters::{Belief, ErrorBelief, IterationConfig};
use crate::linalg::{check_pd, checked_inverse, symmetrize};
use crate::models::{wrap_residual, ErrorStateModel, NonlinearModel};
use crate::{Error, Result};

type ObsFn<T> = Arc<dyn Fn(&DVector<T>) -> DVector<T> + Send + Sync>;
type ObsJac<T> = Arc<dyn Fn(&DVector<T>) -> DMatrix<T> + Send + Sync>;

/// A single MAP correction problem: Gaussian prior, observation function
/// with its Jacobian, observation noise and the measured value.
#[derive(Clone)]
pub struct MapProblem<T: RealField + Copy> {
    pub prior: Belief<T>,
    h: ObsFn<T>,
    jac_h: ObsJac<T>,
    pub r: DMatrix<T>,
    pub z: DVector<T>,
    pub obs_angular: Vec<bool>,
}

impl<T: RealField + Copy> std::fmt::Debug for MapProblem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MapProblem")
            .field("state_dim", &self.prior.dim())
            .field("obs_dim", &self.z.len())
            .finish_non_exhaustive()
    }
}

impl<T: RealField + Copy> MapProblem<T> {
    pub fn new(
        prior: Belief<T>,
        h: ObsFn<T>,
        jac_h: ObsJac<T>,
        r: DMatrix<T>,
        z: DVector<T>,
        obs_angular: Vec<bool>,
    ) -> Result<Self> {
        check_pd(&prior.p, "MAP prior covariance")?;
        check_pd(&r, "MAP observation covariance")?;
        if r.nrows() != z.len() {
            return Err(Error::dims("MAP observation covariance", z.len(), r.nrows()));
        }
        Ok(Self { prior, h, jac_h, r, z, obs_angular })
    }

    /// Builds the problem from a model's observation path. The noise
    /// covariance is mapped through `H_v` evaluated at the prior mean
    /// (identity for additive-noise models).
    pub fn from_model(prior: Belief<T>, m: &NonlinearModel<T>, z: DVector<T>) -> Result<Self> {
        let h_v = m.jac_h_v(&prior.x_hat);
        let r_lin = symmetrize(&(&h_v * &m.r * h_v.transpose()));
        let (mh, mj) = (m.clone(), m.clone());
        Self::new(
            prior,
            Arc::new(move |x| mh.predicted_obs(x)),
            Arc::new(move |x| mj.jac_h_x(x)),
            r_lin,
            z,
            m.obs_angular.clone(),
        )
    }

    pub fn observe(&self, x: &DVector<T>) -> DVector<T> {
        (self.h)(x)
    }

    pub fn jac(&self, x: &DVector<T>) -> DMatrix<T> {
        (self.jac_h)(x)
    }
}

/// Gauss-Newton MAP correction on the stacked system `y = [x̂_prior; z]`,
/// `g(x) = [x; h(x)]` with block weight `diag(P, R)⁻¹`.
///
/// Each iteration solves `(Jᵀ P_e⁻¹ J) δx = Jᵀ P_e⁻¹ r` with `J = [I; H]`
/// and applies `δx`; a step with `‖δx‖ < ε` is treated as convergence
/// confirmation and neither applied nor counted, so a quadratic (linear-`h`)
/// problem reports exactly one iteration. Returns the converged belief —
/// covariance `(P⁻¹ + HᵀR⁻¹H)⁻¹` at the final iterate — and the iteration
/// count.
pub fn map_correct_gn<T: RealField + Copy>(
    p: &MapProblem<T>,
    cfg: &IterationConfig<T>,
) -> Result<(Belief<T>, usize)> {
    let p_inv = checked_inverse(&p.prior.p, "prior covariance")?.inverse;
    let r_inv = checked_inverse(&p.r, "observation covariance")?.inverse;
    let mut x = p.prior.x_hat.clone();
    let mut iterations = 0;
    loop {
        let h = p.jac(&x);
        let obs_residual = wrap_residual(&p.z - p.observe(&x), &p.obs_angular);
        let prior_residual = &p.prior.x_hat - &x;
        let normal = &p_inv + h.transpose() * &r_inv * &h;
        let rhs = &p_inv * prior_residual + h.transpose() * &r_inv * obs_residual;
        let step = checked_inverse(&normal, "Gauss-Newton normal matrix")?.inverse * rhs;
        if step.norm() < cfg.epsilon {
            break;
        }
        x += &step;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { what: "Gauss-Newton iterate".to_string() });
        }
        iterations += 1;
        if iterations >= cfg.max_iters {
            break;
        }
    }
    let h = p.jac(&x);
    let normal = &p_inv + h.transpose() * &r_inv * &h;
    let cov = symmetrize(&checked_inverse(&normal, "Gauss-Newton normal matrix")?.inverse);
    Ok((Belief { x_hat: x, p: cov }, iterations))
}

/// Normal-equation solution of the quadratic error-state cost
///
/// `‖ẑ − H δx‖²_{R_lin⁻¹} + ‖c + J δx‖²_{P⁻¹}`
///
/// for raw linearized quantities: solves
/// `(Hᵀ R_lin⁻¹ H + Jᵀ P⁻¹ J) δx = Hᵀ R_lin⁻¹ ẑ − Jᵀ P⁻¹ c`.
pub fn error_state_step_normal_eq<T: RealField + Copy>(
    p: &DMatrix<T>,
    r_lin: &DMatrix<T>,
    h: &DMatrix<T>,
    j: &DMatrix<T>,
    c: &DVector<T>,
    z_res: &DVector<T>,
) -> Result<DVector<T>> {
    let p_inv = checked_inverse(p, "prior covariance")?.inverse;
    let r_inv = checked_inverse(r_lin, "observation covariance")?.inverse;
    let normal = h.transpose() * &r_inv * h + j.transpose() * &p_inv * j;
    let rhs = h.transpose() * &r_inv * z_res - j.transpose() * &p_inv * c;
    let solved = checked_inverse(&normal, "error-state normal matrix")?.inverse * rhs;
    Ok(solved)
}

/// Direct minimizer of the iterated error-state cost at the iterate
/// `x_init`, given the prediction `prior` (nominal mean and covariance).
/// Returns the arg-min error-state vector for comparison against the
/// gain-form step taken by the iterated filter.
pub fn ieskf_cost_minimize<T: RealField + Copy>(
    prior: &ErrorBelief<T>,
    m: &ErrorStateModel<T>,
    z: &DVector<T>,
    x_init: &DVector<T>,
) -> Result<DVector<T>> {
    let h = m.jac_h_dx(x_init);
    let h_v = m.jac_h_v(x_init);
    let r_lin = symmetrize(&(&h_v * &m.r * h_v.transpose()));
    let j = m.jac_retraction(x_init, &prior.x_nominal);
    let c = m.boxminus(x_init, &prior.x_nominal);
    let z_res = wrap_residual(z - m.h_nominal(x_init), &m.obs_angular);
    error_state_step_normal_eq(&prior.p, &r_lin, &h, &j, &c, &z_res)
}
