//! The filter family: KF, 1D KF, EKF, ESKF, IEKF and IESKF, each as a pure
//! prediction and correction over immutable belief values.
//!
//! Conventions shared by every correction:
//!
//! * all innovation-covariance inversions go through the checked routine in
//!   [`crate::linalg`], so singular matrices raise errors carrying a
//!   condition estimate instead of being silently regularized;
//! * posterior covariances are re-symmetrized after `(I − KH)P`, which is
//!   not symmetric under round-off;
//! * angular observation components are wrapped into `(−π, π]` in the
//!   residual before the gain is applied.
//!
//! The iterated corrections anchor each new iterate at the prediction,
//! which is the Gauss-Newton step on the underlying MAP cost; on a linear
//! model the second step is exactly zero. Non-convergence within
//! `max_iters` is reported through [`CorrectionDiagnostics::converged`],
//! not as an error, and the last iterate is returned.

use nalgebra::{DMatrix, DVector, RealField};

use crate::gaussian::{gaussian_product_1d, Gaussian1D};
use crate::linalg::{check_psd, checked_inverse, symmetrize};
use crate::models::{wrap_residual, ErrorStateModel, Linear1DModel, LinearModel, NonlinearModel};
use crate::{Error, Result};

/// Gaussian belief over the full state: mean `x̂` and covariance `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief<T: RealField + Copy> {
    pub x_hat: DVector<T>,
    pub p: DMatrix<T>,
}

impl<T: RealField + Copy> Belief<T> {
    /// Validated constructor: `P` must be square, match the mean length,
    /// and pass the symmetric-PSD check.
    pub fn new(x_hat: DVector<T>, p: DMatrix<T>) -> Result<Self> {
        if p.nrows() != x_hat.len() || p.ncols() != x_hat.len() {
            return Err(Error::dims(
                "Belief covariance",
                format!("{0}x{0}", x_hat.len()),
                format!("{}x{}", p.nrows(), p.ncols()),
            ));
        }
        check_psd(&p, "Belief covariance")?;
        Ok(Self { x_hat, p })
    }

    pub fn dim(&self) -> usize {
        self.x_hat.len()
    }
}

/// Error-state belief: nominal state, error mean (held at exactly zero
/// between corrections by construction) and error covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBelief<T: RealField + Copy> {
    pub x_nominal: DVector<T>,
    pub dx_hat: DVector<T>,
    pub p: DMatrix<T>,
}

impl<T: RealField + Copy> ErrorBelief<T> {
    /// Starts an error-state belief with a zero error mean.
    pub fn new(x_nominal: DVector<T>, p: DMatrix<T>) -> Result<Self> {
        check_psd(&p, "ErrorBelief covariance")?;
        let d = p.nrows();
        Ok(Self { x_nominal, dx_hat: DVector::zeros(d), p })
    }

    pub fn error_dim(&self) -> usize {
        self.dx_hat.len()
    }
}

/// Convergence control for the iterated corrections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationConfig<T: RealField + Copy> {
    /// Stop once the Euclidean norm of the update step falls below this.
    pub epsilon: T,
    /// Hard iteration budget (≥ 1); hitting it is not an error.
    pub max_iters: usize,
}

impl<T: RealField + Copy> Default for IterationConfig<T> {
    fn default() -> Self {
        Self { epsilon: nalgebra::convert(1e-8), max_iters: 20 }
    }
}

impl<T: RealField + Copy> IterationConfig<T> {
    pub fn new(epsilon: T, max_iters: usize) -> Result<Self> {
        if !(epsilon > T::zero()) {
            return Err(Error::InvalidConfig {
                field: "epsilon".to_string(),
                detail: "must be positive".to_string(),
            });
        }
        if max_iters == 0 {
            return Err(Error::InvalidConfig {
                field: "max_iters".to_string(),
                detail: "must be at least 1".to_string(),
            });
        }
        Ok(Self { epsilon, max_iters })
    }
}

/// Inspection data from a correction: iteration count, the norm of the
/// last update step, the residual fed to the gain, and the gain itself.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionDiagnostics<T: RealField + Copy> {
    pub iterations: usize,
    pub converged: bool,
    pub final_step_norm: T,
    pub innovation: DVector<T>,
    pub kalman_gain: DMatrix<T>,
}

/// `K = P Hᵀ (H P Hᵀ + R_lin)⁻¹`, with the innovation covariance inverted
/// through the checked routine.
fn linearized_gain<T: RealField + Copy>(
    p: &DMatrix<T>,
    h: &DMatrix<T>,
    r_lin: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    let s = h * p * h.transpose() + r_lin;
    let s_inv = checked_inverse(&s, "innovation covariance")?.inverse;
    Ok(p * h.transpose() * s_inv)
}

/// One gain-form iterated error-state step computed from raw linearized
/// quantities:
///
/// `S = H J⁻¹ P J⁻ᵀ Hᵀ + R_lin`, `K = J⁻¹ P J⁻ᵀ Hᵀ S⁻¹`,
/// `δx̂ = K(ẑ + H J⁻¹ c) − J⁻¹ c`
///
/// where `ẑ` is the wrapped measurement residual at the iterate and
/// `c = x̂ⱼ ⊟ x̂_prior`. Exposed so the closed form can be compared against
/// the independent normal-equation minimizer on arbitrary instances.
pub fn ieskf_boxed_step<T: RealField + Copy>(
    p: &DMatrix<T>,
    r_lin: &DMatrix<T>,
    h: &DMatrix<T>,
    j: &DMatrix<T>,
    c: &DVector<T>,
    z_res: &DVector<T>,
) -> Result<IeskfStep<T>> {
    let j_inv = checked_inverse(j, "retraction Jacobian J")?.inverse;
    let p_bar = &j_inv * p * j_inv.transpose();
    let gain = linearized_gain(&p_bar, h, r_lin)?;
    let anchored = &j_inv * c;
    let residual = z_res + h * &anchored;
    let step = &gain * &residual - &anchored;
    Ok(IeskfStep { step, residual, gain, p_bar })
}

/// Output of [`ieskf_boxed_step`]: the error-state step, the anchored
/// residual the gain was applied to, the gain, and `J⁻¹ P J⁻ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IeskfStep<T: RealField + Copy> {
    pub step: DVector<T>,
    pub residual: DVector<T>,
    pub gain: DMatrix<T>,
    pub p_bar: DMatrix<T>,
}

/// `(I − KH) P`, re-symmetrized.
fn posterior_cov<T: RealField + Copy>(
    k: &DMatrix<T>,
    h: &DMatrix<T>,
    p: &DMatrix<T>,
) -> DMatrix<T> {
    let n = p.nrows();
    symmetrize(&((DMatrix::identity(n, n) - k * h) * p))
}

fn ensure_finite<T: RealField + Copy>(v: &DVector<T>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what: what.to_string() })
    }
}

/// KF prediction: `x̂ ← F x̂ + B u`, `P ← F P Fᵀ + Q`.
pub fn kf_predict<T: RealField + Copy>(
    b: &Belief<T>,
    m: &LinearModel<T>,
    u: &DVector<T>,
) -> Result<Belief<T>> {
    let n = m.state_dim();
    if b.dim() != n {
        return Err(Error::dims("kf_predict state", n, b.dim()));
    }
    if u.len() != m.control_dim() {
        return Err(Error::dims("kf_predict control", m.control_dim(), u.len()));
    }
    let x_hat = &m.f * &b.x_hat + &m.b * u;
    let p = symmetrize(&(&m.f * &b.p * m.f.transpose() + &m.q));
    Ok(Belief { x_hat, p })
}

/// KF correction: `K = P Hᵀ (H P Hᵀ + R)⁻¹`, `x̂ ← x̂ + K(z − H x̂)`,
/// `P ← (I − KH) P`.
pub fn kf_correct<T: RealField + Copy>(
    b: &Belief<T>,
    m: &LinearModel<T>,
    z: &DVector<T>,
) -> Result<(Belief<T>, CorrectionDiagnostics<T>)> {
    if z.len() != m.obs_dim() {
        return Err(Error::dims("kf_correct observation", m.obs_dim(), z.len()));
    }
    if b.dim() != m.state_dim() {
        return Err(Error::dims("kf_correct state", m.state_dim(), b.dim()));
    }
    let k = linearized_gain(&b.p, &m.h, &m.r)?;
    let innovation = z - &m.h * &b.x_hat;
    let step = &k * &innovation;
    let x_hat = &b.x_hat + &step;
    let p = posterior_cov(&k, &m.h, &b.p);
    let diag = CorrectionDiagnostics {
        iterations: 1,
        converged: true,
        final_step_norm: step.norm(),
        innovation,
        kalman_gain: k,
    };
    Ok((Belief { x_hat, p }, diag))
}

/// Scalar KF prediction: `μ ← μ + u`, `σ² ← σ² + σ²_motion`.
pub fn kf1d_predict<T: RealField + Copy>(
    b: Gaussian1D<T>,
    m: &Linear1DModel<T>,
    u: T,
) -> Gaussian1D<T> {
    Gaussian1D { mean: b.mean + u, var: b.var + m.sigma2_motion }
}

/// Scalar KF correction — the renormalized product of the predicted belief
/// with the observation density `N(z, σ²_obs)`.
pub fn kf1d_correct<T: RealField + Copy>(
    b: Gaussian1D<T>,
    m: &Linear1DModel<T>,
    z: T,
) -> Result<Gaussian1D<T>> {
    gaussian_product_1d(b, Gaussian1D { mean: z, var: m.sigma2_obs })
}

/// EKF prediction: `x̂ ← f(x̂, u, 0)`, `P ← F P Fᵀ + F_w Q F_wᵀ` with the
/// Jacobians evaluated at the previous mean.
pub fn ekf_predict<T: RealField + Copy>(
    b: &Belief<T>,
    m: &NonlinearModel<T>,
    u: &DVector<T>,
) -> Result<Belief<T>> {
    if b.dim() != m.dims.state {
        return Err(Error::dims("ekf_predict state", m.dims.state, b.dim()));
    }
    if u.len() != m.dims.control {
        return Err(Error::dims("ekf_predict control", m.dims.control, u.len()));
    }
    let f_x = m.jac_f_x(&b.x_hat, u);
    let f_w = m.jac_f_w(&b.x_hat, u);
    let x_hat = m.motion_mean(&b.x_hat, u);
    ensure_finite(&x_hat, "ekf_predict motion output")?;
    let p = symmetrize(&(&f_x * &b.p * f_x.transpose() + &f_w * &m.q * f_w.transpose()));
    Ok(Belief { x_hat, p })
}

/// EKF correction with the Jacobians evaluated at the predicted mean;
/// angular residual components are wrapped.
pub fn ekf_correct<T: RealField + Copy>(
    b: &Belief<T>,
    m: &NonlinearModel<T>,
    z: &DVector<T>,
) -> Result<(Belief<T>, CorrectionDiagnostics<T>)> {
    if z.len() != m.dims.obs {
        return Err(Error::dims("ekf_correct observation", m.dims.obs, z.len()));
    }
    let h = m.jac_h_x(&b.x_hat);
    let h_v = m.jac_h_v(&b.x_hat);
    let r_lin = &h_v * &m.r * h_v.transpose();
    let k = linearized_gain(&b.p, &h, &r_lin)?;
    let innovation = wrap_residual(z - m.predicted_obs(&b.x_hat), &m.obs_angular);
    let step = &k * &innovation;
    let x_hat = &b.x_hat + &step;
    let p = posterior_cov(&k, &h, &b.p);
    let diag = CorrectionDiagnostics {
        iterations: 1,
        converged: true,
        final_step_norm: step.norm(),
        innovation,
        kalman_gain: k,
    };
    Ok((Belief { x_hat, p }, diag))
}

/// ESKF prediction: the error mean stays exactly zero; the nominal state
/// propagates through `f` and the error covariance through the error-state
/// Jacobians.
pub fn eskf_predict<T: RealField + Copy>(
    b: &ErrorBelief<T>,
    m: &ErrorStateModel<T>,
    u: &DVector<T>,
) -> Result<ErrorBelief<T>> {
    if b.error_dim() != m.dims.error {
        return Err(Error::dims("eskf_predict error state", m.dims.error, b.error_dim()));
    }
    let f_dx = m.jac_f_dx(&b.x_nominal, u);
    let f_w = m.jac_f_w(&b.x_nominal, u);
    let x_nominal = m.f_nominal(&b.x_nominal, u);
    ensure_finite(&x_nominal, "eskf_predict nominal propagation")?;
    let p = symmetrize(&(&f_dx * &b.p * f_dx.transpose() + &f_w * &m.q * f_w.transpose()));
    Ok(ErrorBelief { x_nominal, dx_hat: DVector::zeros(m.dims.error), p })
}

/// ESKF correction: fold the estimated error into the nominal state via
/// the retraction, then reset (`δx̂ ← 0`, `P ← G P Gᵀ`).
pub fn eskf_correct<T: RealField + Copy>(
    b: &ErrorBelief<T>,
    m: &ErrorStateModel<T>,
    z: &DVector<T>,
) -> Result<(ErrorBelief<T>, CorrectionDiagnostics<T>)> {
    if z.len() != m.dims.obs {
        return Err(Error::dims("eskf_correct observation", m.dims.obs, z.len()));
    }
    let h = m.jac_h_dx(&b.x_nominal);
    let h_v = m.jac_h_v(&b.x_nominal);
    let r_lin = &h_v * &m.r * h_v.transpose();
    let k = linearized_gain(&b.p, &h, &r_lin)?;
    let innovation = wrap_residual(z - m.h_nominal(&b.x_nominal), &m.obs_angular);
    let dx = &k * &innovation;
    let x_nominal = m.boxplus(&b.x_nominal, &dx);
    let p = posterior_cov(&k, &h, &b.p);
    let g = m.jac_reset(&x_nominal, &dx);
    let p = symmetrize(&(&g * p * g.transpose()));
    let diag = CorrectionDiagnostics {
        iterations: 1,
        converged: true,
        final_step_norm: dx.norm(),
        innovation,
        kalman_gain: k,
    };
    Ok((ErrorBelief { x_nominal, dx_hat: DVector::zeros(m.dims.error), p }, diag))
}

/// Iterated EKF correction. Each pass relinearizes `h` at the current
/// iterate and takes the Gauss-Newton step anchored at the prediction:
///
/// `x̂ⱼ₊₁ = x̂_prior + Kⱼ(z − h(x̂ⱼ) − Hⱼ(x̂_prior − x̂ⱼ))`
///
/// The loop stops once the iterate-to-iterate step norm drops below
/// `cfg.epsilon` or the budget is exhausted; the posterior covariance uses
/// the final-iteration gain and Jacobian.
pub fn iekf_correct<T: RealField + Copy>(
    b: &Belief<T>,
    m: &NonlinearModel<T>,
    z: &DVector<T>,
    cfg: &IterationConfig<T>,
) -> Result<(Belief<T>, CorrectionDiagnostics<T>)> {
    if z.len() != m.dims.obs {
        return Err(Error::dims("iekf_correct observation", m.dims.obs, z.len()));
    }
    let x_prior = &b.x_hat;
    let mut x_j = b.x_hat.clone();
    let mut iterations = 0;
    let mut converged = false;
    let (final_step_norm, innovation, k_n, h_n) = loop {
        let h_j = m.jac_h_x(&x_j);
        let h_vj = m.jac_h_v(&x_j);
        let r_lin = &h_vj * &m.r * h_vj.transpose();
        let k = linearized_gain(&b.p, &h_j, &r_lin)?;
        let residual =
            wrap_residual(z - m.predicted_obs(&x_j), &m.obs_angular) - &h_j * (x_prior - &x_j);
        // x̂ⱼ₊₁ = x_prior + K·residual, expressed as a step from x̂ⱼ so the
        // convergence norm is the iterate-to-iterate change.
        let step = &k * &residual - (&x_j - x_prior);
        x_j += &step;
        ensure_finite(&x_j, "iekf_correct iterate")?;
        iterations += 1;
        let step_norm = step.norm();
        if step_norm < cfg.epsilon {
            converged = true;
            break (step_norm, residual, k, h_j);
        }
        if iterations >= cfg.max_iters {
            break (step_norm, residual, k, h_j);
        }
    };
    let p = posterior_cov(&k_n, &h_n, &b.p);
    let diag = CorrectionDiagnostics {
        iterations,
        converged,
        final_step_norm,
        innovation,
        kalman_gain: k_n,
    };
    Ok((Belief { x_hat: x_j, p }, diag))
}

/// Iterated ESKF correction. Each pass maps the prediction covariance
/// through the retraction Jacobian `J` evaluated at the iterate,
///
/// `S = H J⁻¹ P J⁻ᵀ Hᵀ + H_v R H_vᵀ`, `K = J⁻¹ P J⁻ᵀ Hᵀ S⁻¹`,
/// `δx̂ = K(z − h(x̂ⱼ) + H J⁻¹(x̂ⱼ ⊟ x̂_prior)) − J⁻¹(x̂ⱼ ⊟ x̂_prior)`,
///
/// retracts `x̂ⱼ₊₁ = x̂ⱼ ⊞ δx̂`, and stops on `‖δx̂‖ < ε` or the budget.
/// The posterior covariance is `(I − KH) J⁻¹ P J⁻ᵀ` at the final iterate,
/// followed by the reset `P ← G P Gᵀ` with `δx̂ ← 0`.
pub fn ieskf_correct<T: RealField + Copy>(
    b: &ErrorBelief<T>,
    m: &ErrorStateModel<T>,
    z: &DVector<T>,
    cfg: &IterationConfig<T>,
) -> Result<(ErrorBelief<T>, CorrectionDiagnostics<T>)> {
    if z.len() != m.dims.obs {
        return Err(Error::dims("ieskf_correct observation", m.dims.obs, z.len()));
    }
    let x_prior = &b.x_nominal;
    let mut x_j = b.x_nominal.clone();
    let d = m.dims.error;
    let mut iterations = 0;
    let mut converged = false;
    let (it, h_n) = loop {
        let h_j = m.jac_h_dx(&x_j);
        let h_vj = m.jac_h_v(&x_j);
        let r_lin = &h_vj * &m.r * h_vj.transpose();
        let j = m.jac_retraction(&x_j, x_prior);
        let c = m.boxminus(&x_j, x_prior);
        let z_res = wrap_residual(z - m.h_nominal(&x_j), &m.obs_angular);
        let it = ieskf_boxed_step(&b.p, &r_lin, &h_j, &j, &c, &z_res)?;
        x_j = m.boxplus(&x_j, &it.step);
        ensure_finite(&x_j, "ieskf_correct iterate")?;
        iterations += 1;
        if it.step.norm() < cfg.epsilon {
            converged = true;
            break (it, h_j);
        }
        if iterations >= cfg.max_iters {
            break (it, h_j);
        }
    };
    let final_step_norm = it.step.norm();
    let innovation = it.residual;
    let k_n = it.gain;
    let p = posterior_cov(&k_n, &h_n, &it.p_bar);
    let g = m.jac_reset(&x_j, &it.step);
    let p = symmetrize(&(&g * p * g.transpose()));
    let diag = CorrectionDiagnostics {
        iterations,
        converged,
        final_step_norm,
        innovation,
        kalman_gain: k_n,
    };
    Ok((ErrorBelief { x_nominal: x_j, dx_hat: DVector::zeros(d), p }, diag))
}
