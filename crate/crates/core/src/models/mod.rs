//! State-space model abstractions consumed by the filters, plus Jacobian
//! tooling (analytic evaluators cross-checked against finite differences).
//!
//! Three abstractions cover the filter family:
//!
//! * [`LinearModel`] / [`Linear1DModel`] — fixed matrices `F, B, H, Q, R`.
//! * [`NonlinearModel`] — motion `f(x, u, w)` and observation `h(x, v)`
//!   with analytic Jacobian evaluators for the state and the noise.
//! * [`ErrorStateModel`] — nominal propagation plus error-state Jacobians,
//!   a `boxplus` retraction (with its inverse `boxminus`), the retraction
//!   Jacobian used by the iterated update, and the post-reset Jacobian.
//!
//! Noise enters additively in all built-in models, so their noise Jacobians
//! are identity; the abstraction still carries general `F_w`/`H_v`
//! evaluators so non-additive models fit the same interface.

mod builtin;

pub use builtin::{builtin_model, BuiltinModel, BuiltinModelId, ModelParams};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, RealField};

use crate::linalg::{check_pd, check_psd, max_abs};
use crate::{Error, Result};

type Fn1<T> = Arc<dyn Fn(&DVector<T>) -> DVector<T> + Send + Sync>;
type Fn2<T> = Arc<dyn Fn(&DVector<T>, &DVector<T>) -> DVector<T> + Send + Sync>;
type Fn3<T> = Arc<dyn Fn(&DVector<T>, &DVector<T>, &DVector<T>) -> DVector<T> + Send + Sync>;
type Jac1<T> = Arc<dyn Fn(&DVector<T>) -> DMatrix<T> + Send + Sync>;
type Jac2<T> = Arc<dyn Fn(&DVector<T>, &DVector<T>) -> DMatrix<T> + Send + Sync>;

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle<T: RealField + Copy>(a: T) -> T {
    let two_pi = T::two_pi();
    a - two_pi * ((a - T::pi()) / two_pi).ceil()
}

/// Wraps the masked (angular) components of a residual into `(−π, π]`.
pub fn wrap_residual<T: RealField + Copy>(mut v: DVector<T>, angular: &[bool]) -> DVector<T> {
    for (i, is_angle) in angular.iter().enumerate() {
        if *is_angle && i < v.len() {
            v[i] = wrap_angle(v[i]);
        }
    }
    v
}

/// Central-difference Jacobian of `fn` at `x`: column `j` is
/// `(fn(x + step·eⱼ) − fn(x − step·eⱼ)) / (2·step)`.
pub fn finite_difference_jacobian<T, F>(f: F, x: &DVector<T>, step: T) -> Result<DMatrix<T>>
where
    T: RealField + Copy,
    F: Fn(&DVector<T>) -> DVector<T>,
{
    if step <= T::zero() {
        return Err(Error::InvalidConfig {
            field: "step".to_string(),
            detail: "must be positive".to_string(),
        });
    }
    let out_dim = f(x).len();
    let mut jac = DMatrix::zeros(out_dim, x.len());
    let two = T::one() + T::one();
    for j in 0..x.len() {
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi[j] += step;
        lo[j] -= step;
        let fhi = f(&hi);
        let flo = f(&lo);
        if fhi.len() != out_dim || flo.len() != out_dim {
            return Err(Error::dims("finite_difference_jacobian output", out_dim, fhi.len()));
        }
        if !fhi.iter().chain(flo.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                what: "finite_difference_jacobian function output".to_string(),
            });
        }
        jac.set_column(j, &((fhi - flo) / (two * step)));
    }
    Ok(jac)
}

/// Per-coordinate FD step used when validating analytic Jacobians:
/// `1e-6·(1 + |xⱼ|)`, balancing truncation against round-off in doubles.
pub const FD_VALIDATION_STEP: f64 = 1e-6;

/// Central-difference Jacobian with the per-coordinate step
/// `base·(1 + |xⱼ|)`; this is the reference every analytic Jacobian in the
/// crate is validated against.
pub fn fd_jacobian_scaled<T, F>(f: F, x: &DVector<T>, base: T) -> Result<DMatrix<T>>
where
    T: RealField + Copy,
    F: Fn(&DVector<T>) -> DVector<T>,
{
    let out_dim = f(x).len();
    let mut jac = DMatrix::zeros(out_dim, x.len());
    let two = T::one() + T::one();
    for j in 0..x.len() {
        let step = base * (T::one() + x[j].abs());
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi[j] += step;
        lo[j] -= step;
        let fhi = f(&hi);
        let flo = f(&lo);
        if !fhi.iter().chain(flo.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                what: "fd_jacobian_scaled function output".to_string(),
            });
        }
        jac.set_column(j, &((fhi - flo) / (two * step)));
    }
    Ok(jac)
}

/// `max|A − B| / max(1, max|B|)` — the relative-error measure used for
/// Jacobian validation.
pub fn relative_error<T: RealField + Copy>(approx: &DMatrix<T>, reference: &DMatrix<T>) -> T {
    max_abs(&(approx - reference)) / T::one().max(max_abs(reference))
}

/// Linear state-space model `x' = Fx + Bu + w`, `z = Hx + v` with
/// `w ~ N(0, Q)` and `v ~ N(0, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T: RealField + Copy> {
    pub f: DMatrix<T>,
    pub b: DMatrix<T>,
    pub h: DMatrix<T>,
    pub q: DMatrix<T>,
    pub r: DMatrix<T>,
}

impl<T: RealField + Copy> LinearModel<T> {
    pub fn new(
        f: DMatrix<T>,
        b: DMatrix<T>,
        h: DMatrix<T>,
        q: DMatrix<T>,
        r: DMatrix<T>,
    ) -> Result<Self> {
        let n = f.nrows();
        if f.ncols() != n {
            return Err(Error::dims("F", "square", format!("{}x{}", f.nrows(), f.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::dims("B rows", n, b.nrows()));
        }
        let k = h.nrows();
        if h.ncols() != n {
            return Err(Error::dims("H cols", n, h.ncols()));
        }
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::dims("Q", format!("{n}x{n}"), format!("{}x{}", q.nrows(), q.ncols())));
        }
        if r.nrows() != k || r.ncols() != k {
            return Err(Error::dims("R", format!("{k}x{k}"), format!("{}x{}", r.nrows(), r.ncols())));
        }
        check_psd(&q, "Q")?;
        check_pd(&r, "R")?;
        Ok(Self { f, b, h, q, r })
    }

    pub fn state_dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn obs_dim(&self) -> usize {
        self.h.nrows()
    }
}

/// Scalar random-walk model: `x' = x + u + w`, `z = x + v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear1DModel<T: RealField + Copy> {
    pub sigma2_motion: T,
    pub sigma2_obs: T,
}

impl<T: RealField + Copy> Linear1DModel<T> {
    pub fn new(sigma2_motion: T, sigma2_obs: T) -> Result<Self> {
        if sigma2_motion < T::zero() {
            return Err(Error::InvalidConfig {
                field: "sigma2_motion".to_string(),
                detail: "must be nonnegative".to_string(),
            });
        }
        if sigma2_obs <= T::zero() {
            return Err(Error::InvalidConfig {
                field: "sigma2_obs".to_string(),
                detail: "must be positive".to_string(),
            });
        }
        Ok(Self { sigma2_motion, sigma2_obs })
    }

    /// Equivalent 1x1 matrix model.
    pub fn to_linear(&self) -> LinearModel<T> {
        let one = DMatrix::from_element(1, 1, T::one());
        LinearModel {
            f: one.clone(),
            b: one.clone(),
            h: one,
            q: DMatrix::from_element(1, 1, self.sigma2_motion),
            r: DMatrix::from_element(1, 1, self.sigma2_obs),
        }
    }
}

/// Dimensions of a nonlinear model: state `n`, control `m`, observation `k`,
/// and the motion/observation noise dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonlinearDims {
    pub state: usize,
    pub control: usize,
    pub obs: usize,
    pub motion_noise: usize,
    pub obs_noise: usize,
}

/// Nonlinear model `x' = f(x, u, w)`, `z = h(x, v)` with analytic Jacobian
/// evaluators. All evaluators are pure; the model is freely shareable.
#[derive(Clone)]
pub struct NonlinearModel<T: RealField + Copy> {
    pub dims: NonlinearDims,
    f: Fn3<T>,
    h: Fn2<T>,
    jac_f_x: Jac2<T>,
    jac_f_w: Jac2<T>,
    jac_h_x: Jac1<T>,
    jac_h_v: Jac1<T>,
    pub q: DMatrix<T>,
    pub r: DMatrix<T>,
    /// Which observation components are angles (wrapped in residuals).
    pub obs_angular: Vec<bool>,
    /// Which state components are angles (wrapped in evaluation residuals).
    pub state_angular: Vec<bool>,
}

impl<T: RealField + Copy> std::fmt::Debug for NonlinearModel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NonlinearModel").field("dims", &self.dims).finish_non_exhaustive()
    }
}

impl<T: RealField + Copy> NonlinearModel<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dims: NonlinearDims,
        f: Fn3<T>,
        h: Fn2<T>,
        jac_f_x: Jac2<T>,
        jac_f_w: Jac2<T>,
        jac_h_x: Jac1<T>,
        jac_h_v: Jac1<T>,
        q: DMatrix<T>,
        r: DMatrix<T>,
        obs_angular: Vec<bool>,
        state_angular: Vec<bool>,
    ) -> Result<Self> {
        if q.nrows() != dims.motion_noise || q.ncols() != dims.motion_noise {
            return Err(Error::dims(
                "Q",
                format!("{0}x{0}", dims.motion_noise),
                format!("{}x{}", q.nrows(), q.ncols()),
            ));
        }
        if r.nrows() != dims.obs_noise || r.ncols() != dims.obs_noise {
            return Err(Error::dims(
                "R",
                format!("{0}x{0}", dims.obs_noise),
                format!("{}x{}", r.nrows(), r.ncols()),
            ));
        }
        check_psd(&q, "Q")?;
        check_pd(&r, "R")?;
        Ok(Self {
            dims,
            f,
            h,
            jac_f_x,
            jac_f_w,
            jac_h_x,
            jac_h_v,
            q,
            r,
            obs_angular,
            state_angular,
        })
    }

    pub fn motion(&self, x: &DVector<T>, u: &DVector<T>, w: &DVector<T>) -> DVector<T> {
        (self.f)(x, u, w)
    }

    /// `f(x, u, 0)`.
    pub fn motion_mean(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        (self.f)(x, u, &DVector::zeros(self.dims.motion_noise))
    }

    pub fn observe(&self, x: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        (self.h)(x, v)
    }

    /// `h(x, 0)`.
    pub fn predicted_obs(&self, x: &DVector<T>) -> DVector<T> {
        (self.h)(x, &DVector::zeros(self.dims.obs_noise))
    }

    pub fn jac_f_x(&self, x: &DVector<T>, u: &DVector<T>) -> DMatrix<T> {
        (self.jac_f_x)(x, u)
    }

    pub fn jac_f_w(&self, x: &DVector<T>, u: &DVector<T>) -> DMatrix<T> {
        (self.jac_f_w)(x, u)
    }

    pub fn jac_h_x(&self, x: &DVector<T>) -> DMatrix<T> {
        (self.jac_h_x)(x)
    }

    pub fn jac_h_v(&self, x: &DVector<T>) -> DMatrix<T> {
        (self.jac_h_v)(x)
    }

    /// Wraps a linear model; the Jacobians are the constant matrices.
    pub fn from_linear(m: &LinearModel<T>) -> Self {
        let dims = NonlinearDims {
            state: m.state_dim(),
            control: m.control_dim(),
            obs: m.obs_dim(),
            motion_noise: m.state_dim(),
            obs_noise: m.obs_dim(),
        };
        let (f, b, h) = (m.f.clone(), m.b.clone(), m.h.clone());
        let (fj, hj) = (m.f.clone(), m.h.clone());
        let (n, k) = (dims.state, dims.obs);
        Self {
            dims,
            f: Arc::new(move |x, u, w| &f * x + &b * u + w),
            h: Arc::new(move |x, v| &h * x + v),
            jac_f_x: Arc::new(move |_, _| fj.clone()),
            jac_f_w: Arc::new(move |_, _| DMatrix::identity(n, n)),
            jac_h_x: Arc::new(move |_| hj.clone()),
            jac_h_v: Arc::new(move |_| DMatrix::identity(k, k)),
            q: m.q.clone(),
            r: m.r.clone(),
            obs_angular: vec![false; k],
            state_angular: vec![false; n],
        }
    }

    /// Validates every analytic Jacobian against central finite differences
    /// at the given evaluation points, returning the worst relative error.
    pub fn validate_jacobians(&self, points: &[(DVector<T>, DVector<T>)]) -> Result<T> {
        let base: T = nalgebra::convert(FD_VALIDATION_STEP);
        let w0 = DVector::zeros(self.dims.motion_noise);
        let v0 = DVector::zeros(self.dims.obs_noise);
        let mut worst = T::zero();
        for (x, u) in points {
            let fd = fd_jacobian_scaled(|p| self.motion(p, u, &w0), x, base)?;
            worst = worst.max(relative_error(&fd, &self.jac_f_x(x, u)));

            let fd = fd_jacobian_scaled(|w| self.motion(x, u, w), &w0, base)?;
            worst = worst.max(relative_error(&fd, &self.jac_f_w(x, u)));

            let fd = fd_jacobian_scaled(|p| self.observe(p, &v0), x, base)?;
            worst = worst.max(relative_error(&fd, &self.jac_h_x(x)));

            let fd = fd_jacobian_scaled(|v| self.observe(x, v), &v0, base)?;
            worst = worst.max(relative_error(&fd, &self.jac_h_v(x)));
        }
        Ok(worst)
    }
}

/// Dimensions of an error-state model: nominal state `n`, error state `d`,
/// observation `k`, plus noise dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorStateDims {
    pub nominal: usize,
    pub error: usize,
    pub control: usize,
    pub obs: usize,
    pub motion_noise: usize,
    pub obs_noise: usize,
}

/// Error-state model: nominal propagation/observation evaluated at zero
/// error and zero noise, Jacobians taken with respect to the error state,
/// a retraction `boxplus` folding an error vector into the nominal state,
/// its inverse difference `boxminus`, the retraction Jacobian used by the
/// iterated update, and the reset Jacobian `G`.
#[derive(Clone)]
pub struct ErrorStateModel<T: RealField + Copy> {
    pub dims: ErrorStateDims,
    f_nominal: Fn2<T>,
    h_nominal: Fn1<T>,
    jac_f_dx: Jac2<T>,
    jac_f_w: Jac2<T>,
    jac_h_dx: Jac1<T>,
    jac_h_v: Jac1<T>,
    boxplus: Fn2<T>,
    boxminus: Fn2<T>,
    jac_retraction: Jac2<T>,
    jac_reset: Jac2<T>,
    pub q: DMatrix<T>,
    pub r: DMatrix<T>,
    pub obs_angular: Vec<bool>,
}

impl<T: RealField + Copy> std::fmt::Debug for ErrorStateModel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ErrorStateModel").field("dims", &self.dims).finish_non_exhaustive()
    }
}

impl<T: RealField + Copy> ErrorStateModel<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dims: ErrorStateDims,
        f_nominal: Fn2<T>,
        h_nominal: Fn1<T>,
        jac_f_dx: Jac2<T>,
        jac_f_w: Jac2<T>,
        jac_h_dx: Jac1<T>,
        jac_h_v: Jac1<T>,
        boxplus: Fn2<T>,
        boxminus: Fn2<T>,
        jac_retraction: Jac2<T>,
        jac_reset: Jac2<T>,
        q: DMatrix<T>,
        r: DMatrix<T>,
        obs_angular: Vec<bool>,
    ) -> Result<Self> {
        check_psd(&q, "Q")?;
        check_pd(&r, "R")?;
        if q.nrows() != dims.motion_noise {
            return Err(Error::dims("Q", dims.motion_noise, q.nrows()));
        }
        if r.nrows() != dims.obs_noise {
            return Err(Error::dims("R", dims.obs_noise, r.nrows()));
        }
        Ok(Self {
            dims,
            f_nominal,
            h_nominal,
            jac_f_dx,
            jac_f_w,
            jac_h_dx,
            jac_h_v,
            boxplus,
            boxminus,
            jac_retraction,
            jac_reset,
            q,
            r,
            obs_angular,
        })
    }

    /// Nominal propagation `f(x, δx=0, u, w=0)`.
    pub fn f_nominal(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        (self.f_nominal)(x, u)
    }

    /// Nominal observation `h(x, δx=0, v=0)`.
    pub fn h_nominal(&self, x: &DVector<T>) -> DVector<T> {
        (self.h_nominal)(x)
    }

    pub fn jac_f_dx(&self, x: &DVector<T>, u: &DVector<T>) -> DMatrix<T> {
        (self.jac_f_dx)(x, u)
    }

    pub fn jac_f_w(&self, x: &DVector<T>, u: &DVector<T>) -> DMatrix<T> {
        (self.jac_f_w)(x, u)
    }

    pub fn jac_h_dx(&self, x: &DVector<T>) -> DMatrix<T> {
        (self.jac_h_dx)(x)
    }

    pub fn jac_h_v(&self, x: &DVector<T>) -> DMatrix<T> {
        (self.jac_h_v)(x)
    }

    /// Retraction `x ⊞ δx`.
    pub fn boxplus(&self, x: &DVector<T>, dx: &DVector<T>) -> DVector<T> {
        (self.boxplus)(x, dx)
    }

    /// Inverse retraction `a ⊟ b`.
    pub fn boxminus(&self, a: &DVector<T>, b: &DVector<T>) -> DVector<T> {
        (self.boxminus)(a, b)
    }

    /// Retraction Jacobian `J` of `(x ⊞ δx) ⊟ x_ref` at `δx = 0`.
    pub fn jac_retraction(&self, x: &DVector<T>, x_ref: &DVector<T>) -> DMatrix<T> {
        (self.jac_retraction)(x, x_ref)
    }

    /// Reset Jacobian `G` at the given nominal state and correction.
    pub fn jac_reset(&self, x: &DVector<T>, dx: &DVector<T>) -> DMatrix<T> {
        (self.jac_reset)(x, dx)
    }

    /// Vector-space error model wrapping a linear model: `⊞` is plain
    /// addition and every structural Jacobian is identity.
    pub fn from_linear(m: &LinearModel<T>) -> Self {
        Self::from_nonlinear(&NonlinearModel::from_linear(m))
    }

    /// Vector-space error model wrapping a nonlinear model with additive
    /// error (`x_true = x + δx`). Angular state components wrap in `⊞`/`⊟`.
    pub fn from_nonlinear(m: &NonlinearModel<T>) -> Self {
        let dims = ErrorStateDims {
            nominal: m.dims.state,
            error: m.dims.state,
            control: m.dims.control,
            obs: m.dims.obs,
            motion_noise: m.dims.motion_noise,
            obs_noise: m.dims.obs_noise,
        };
        let d = dims.error;
        let state_angular = m.state_angular.clone();
        let mask_plus = state_angular.clone();
        let mask_minus = state_angular;
        let (m_f, m_h, m_jfx, m_jfw, m_jhx, m_jhv) = (
            m.clone(),
            m.clone(),
            m.clone(),
            m.clone(),
            m.clone(),
            m.clone(),
        );
        Self {
            dims,
            f_nominal: Arc::new(move |x, u| m_f.motion_mean(x, u)),
            h_nominal: Arc::new(move |x| m_h.predicted_obs(x)),
            jac_f_dx: Arc::new(move |x, u| m_jfx.jac_f_x(x, u)),
            jac_f_w: Arc::new(move |x, u| m_jfw.jac_f_w(x, u)),
            jac_h_dx: Arc::new(move |x| m_jhx.jac_h_x(x)),
            jac_h_v: Arc::new(move |x| m_jhv.jac_h_v(x)),
            boxplus: Arc::new(move |x, dx| {
                let mut out = x + dx;
                for (i, ang) in mask_plus.iter().enumerate() {
                    if *ang {
                        out[i] = wrap_angle(out[i]);
                    }
                }
                out
            }),
            boxminus: Arc::new(move |a, b| {
                let mut out = a - b;
                for (i, ang) in mask_minus.iter().enumerate() {
                    if *ang {
                        out[i] = wrap_angle(out[i]);
                    }
                }
                out
            }),
            jac_retraction: Arc::new(move |_, _| DMatrix::identity(d, d)),
            jac_reset: Arc::new(move |_, _| DMatrix::identity(d, d)),
            q: m.q.clone(),
            r: m.r.clone(),
            obs_angular: m.obs_angular.clone(),
        }
    }

    /// Validates the error-state Jacobians against finite differences of
    /// the composed maps `δx ↦ f(x ⊞ δx, u)` and `δx ↦ h(x ⊞ δx)` at
    /// `δx = 0`, returning the worst relative error.
    pub fn validate_jacobians(&self, points: &[(DVector<T>, DVector<T>)]) -> Result<T> {
        let base: T = nalgebra::convert(FD_VALIDATION_STEP);
        let zero_dx = DVector::zeros(self.dims.error);
        let mut worst = T::zero();
        for (x, u) in points {
            let fd = fd_jacobian_scaled(|dx| self.f_nominal(&self.boxplus(x, dx), u), &zero_dx, base)?;
            worst = worst.max(relative_error(&fd, &self.jac_f_dx(x, u)));

            let fd = fd_jacobian_scaled(|dx| self.h_nominal(&self.boxplus(x, dx)), &zero_dx, base)?;
            worst = worst.max(relative_error(&fd, &self.jac_h_dx(x)));
        }
        Ok(worst)
    }
}
