//! Built-in scenario models with analytic Jacobians.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, RealField};

use super::{
    wrap_angle, ErrorStateDims, ErrorStateModel, Linear1DModel, LinearModel, NonlinearDims,
    NonlinearModel,
};
use crate::{Error, Result};

pub const BUILTIN_MODEL_NAMES: [&str; 4] =
    ["linear-1d", "linear-cv-2d", "range-bearing-2d", "heading-robot-se2-lite"];

/// Identifier of a built-in model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinModelId {
    /// Scalar random walk, `x' = x + u + w`, `z = x + v`.
    Linear1D,
    /// Planar constant-velocity target with acceleration control and
    /// position measurements.
    LinearCv2D,
    /// Unicycle robot observing range and bearing to a fixed landmark.
    RangeBearing2D,
    /// Unicycle robot whose heading lives on the circle: `⊞` wraps the
    /// heading component; observes range to a landmark plus heading.
    HeadingRobotSe2Lite,
}

impl BuiltinModelId {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinModelId::Linear1D => "linear-1d",
            BuiltinModelId::LinearCv2D => "linear-cv-2d",
            BuiltinModelId::RangeBearing2D => "range-bearing-2d",
            BuiltinModelId::HeadingRobotSe2Lite => "heading-robot-se2-lite",
        }
    }
}

impl fmt::Display for BuiltinModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear-1d" => Ok(BuiltinModelId::Linear1D),
            "linear-cv-2d" => Ok(BuiltinModelId::LinearCv2D),
            "range-bearing-2d" => Ok(BuiltinModelId::RangeBearing2D),
            "heading-robot-se2-lite" => Ok(BuiltinModelId::HeadingRobotSe2Lite),
            other => Err(Error::UnknownName {
                kind: "model",
                got: other.to_string(),
                valid: BUILTIN_MODEL_NAMES.to_vec(),
            }),
        }
    }
}

/// Tunable parameters of the built-in models. `motion_noise` / `obs_noise`
/// are covariance diagonals; when absent each model supplies its defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T: RealField + Copy> {
    pub dt: T,
    pub motion_noise: Option<Vec<T>>,
    pub obs_noise: Option<Vec<T>>,
    pub landmark: [T; 2],
}

impl<T: RealField + Copy> Default for ModelParams<T> {
    fn default() -> Self {
        Self {
            dt: nalgebra::convert(0.1),
            motion_noise: None,
            obs_noise: None,
            landmark: [nalgebra::convert(2.0), nalgebra::convert(2.0)],
        }
    }
}

impl<T: RealField + Copy> ModelParams<T> {
    fn noise_diag(
        given: &Option<Vec<T>>,
        default: &[f64],
        field: &str,
        allow_zero: bool,
    ) -> Result<DMatrix<T>> {
        let values: Vec<T> = match given {
            Some(v) => {
                if v.len() != default.len() {
                    return Err(Error::InvalidConfig {
                        field: field.to_string(),
                        detail: format!("expected {} entries, got {}", default.len(), v.len()),
                    });
                }
                v.clone()
            }
            None => default.iter().map(|&d| nalgebra::convert(d)).collect(),
        };
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidConfig {
                    field: format!("{field}[{i}]"),
                    detail: "must be finite".to_string(),
                });
            }
            if (allow_zero && *v < T::zero()) || (!allow_zero && *v <= T::zero()) {
                return Err(Error::InvalidConfig {
                    field: format!("{field}[{i}]"),
                    detail: if allow_zero {
                        "variance must be nonnegative".to_string()
                    } else {
                        "variance must be positive".to_string()
                    },
                });
            }
        }
        Ok(DMatrix::from_diagonal(&DVector::from_vec(values)))
    }

    fn check_dt(&self) -> Result<T> {
        if !self.dt.is_finite() || self.dt <= T::zero() {
            return Err(Error::InvalidConfig {
                field: "model.dt".to_string(),
                detail: "must be positive and finite".to_string(),
            });
        }
        Ok(self.dt)
    }
}

/// A built-in model in whichever abstraction is natural for it.
#[derive(Debug, Clone)]
pub enum BuiltinModel<T: RealField + Copy> {
    Linear1D(Linear1DModel<T>),
    Linear(LinearModel<T>),
    Nonlinear(NonlinearModel<T>),
    ErrorState(ErrorStateModel<T>),
}

/// Instantiates a built-in model. Observation-noise variances must be
/// strictly positive; motion-noise variances may be zero.
pub fn builtin_model<T: RealField + Copy>(
    id: BuiltinModelId,
    params: &ModelParams<T>,
) -> Result<BuiltinModel<T>> {
    match id {
        BuiltinModelId::Linear1D => {
            let q = ModelParams::noise_diag(&params.motion_noise, &[0.25], "model.motion_noise", true)?;
            let r = ModelParams::noise_diag(&params.obs_noise, &[0.5], "model.obs_noise", false)?;
            Ok(BuiltinModel::Linear1D(Linear1DModel::new(q[(0, 0)], r[(0, 0)])?))
        }
        BuiltinModelId::LinearCv2D => Ok(BuiltinModel::Linear(linear_cv_2d(params)?)),
        BuiltinModelId::RangeBearing2D => Ok(BuiltinModel::Nonlinear(range_bearing_2d(params)?)),
        BuiltinModelId::HeadingRobotSe2Lite => {
            Ok(BuiltinModel::ErrorState(heading_robot_se2_lite(params)?))
        }
    }
}

fn linear_cv_2d<T: RealField + Copy>(params: &ModelParams<T>) -> Result<LinearModel<T>> {
    let dt = params.check_dt()?;
    let (zero, one) = (T::zero(), T::one());
    let half: T = nalgebra::convert(0.5);
    let dt2h = dt * dt * half;
    let f = DMatrix::from_row_slice(
        4,
        4,
        &[one, zero, dt, zero, zero, one, zero, dt, zero, zero, one, zero, zero, zero, zero, one],
    );
    let b = DMatrix::from_row_slice(4, 2, &[dt2h, zero, zero, dt2h, dt, zero, zero, dt]);
    let h = DMatrix::from_row_slice(2, 4, &[one, zero, zero, zero, zero, one, zero, zero]);
    let q = ModelParams::noise_diag(
        &params.motion_noise,
        &[1e-3, 1e-3, 5e-3, 5e-3],
        "model.motion_noise",
        true,
    )?;
    let r = ModelParams::noise_diag(&params.obs_noise, &[0.05, 0.05], "model.obs_noise", false)?;
    LinearModel::new(f, b, h, q, r)
}

/// Unicycle motion shared by the two planar robot models:
/// `(x, y, θ) ← (x + v·dt·cosθ, y + v·dt·sinθ, θ + ω·dt)`.
fn unicycle_step<T: RealField + Copy>(x: &DVector<T>, u: &DVector<T>, dt: T) -> DVector<T> {
    let (v, omega) = (u[0], u[1]);
    DVector::from_vec(vec![
        x[0] + v * dt * x[2].cos(),
        x[1] + v * dt * x[2].sin(),
        x[2] + omega * dt,
    ])
}

fn unicycle_jacobian<T: RealField + Copy>(x: &DVector<T>, u: &DVector<T>, dt: T) -> DMatrix<T> {
    let (zero, one) = (T::zero(), T::one());
    let v = u[0];
    DMatrix::from_row_slice(
        3,
        3,
        &[
            one,
            zero,
            -v * dt * x[2].sin(),
            zero,
            one,
            v * dt * x[2].cos(),
            zero,
            zero,
            one,
        ],
    )
}

fn range_to_landmark<T: RealField + Copy>(x: &DVector<T>, lm: &[T; 2]) -> T {
    let dx = x[0] - lm[0];
    let dy = x[1] - lm[1];
    (dx * dx + dy * dy).sqrt()
}

fn range_bearing_2d<T: RealField + Copy>(params: &ModelParams<T>) -> Result<NonlinearModel<T>> {
    let dt = params.check_dt()?;
    let lm = params.landmark;
    if !lm[0].is_finite() || !lm[1].is_finite() {
        return Err(Error::InvalidConfig {
            field: "model.landmark".to_string(),
            detail: "must be finite".to_string(),
        });
    }
    let q = ModelParams::noise_diag(
        &params.motion_noise,
        &[1e-3, 1e-3, 1e-3],
        "model.motion_noise",
        true,
    )?;
    let r = ModelParams::noise_diag(&params.obs_noise, &[0.01, 0.0025], "model.obs_noise", false)?;
    let dims = NonlinearDims { state: 3, control: 2, obs: 2, motion_noise: 3, obs_noise: 2 };
    let lm_h = lm;
    let lm_j = lm;
    NonlinearModel::new(
        dims,
        Arc::new(move |x, u, w| unicycle_step(x, u, dt) + w),
        Arc::new(move |x, v| {
            // Raw bearing difference; residual wrapping happens in the filters.
            let bearing = (lm_h[1] - x[1]).atan2(lm_h[0] - x[0]) - x[2];
            DVector::from_vec(vec![range_to_landmark(x, &lm_h) + v[0], bearing + v[1]])
        }),
        Arc::new(move |x, u| unicycle_jacobian(x, u, dt)),
        Arc::new(move |_, _| DMatrix::identity(3, 3)),
        Arc::new(move |x| range_bearing_obs_jacobian(x, &lm_j)),
        Arc::new(move |_| DMatrix::identity(2, 2)),
        q,
        r,
        vec![false, true],
        vec![false, false, true],
    )
}

fn range_bearing_obs_jacobian<T: RealField + Copy>(x: &DVector<T>, lm: &[T; 2]) -> DMatrix<T> {
    let dx = lm[0] - x[0];
    let dy = lm[1] - x[1];
    let q = dx * dx + dy * dy;
    let range = q.sqrt();
    let (zero, one) = (T::zero(), T::one());
    DMatrix::from_row_slice(
        2,
        3,
        &[-dx / range, -dy / range, zero, dy / q, -dx / q, -one],
    )
}

fn heading_robot_se2_lite<T: RealField + Copy>(params: &ModelParams<T>) -> Result<ErrorStateModel<T>> {
    let dt = params.check_dt()?;
    let lm = params.landmark;
    if !lm[0].is_finite() || !lm[1].is_finite() {
        return Err(Error::InvalidConfig {
            field: "model.landmark".to_string(),
            detail: "must be finite".to_string(),
        });
    }
    let q = ModelParams::noise_diag(
        &params.motion_noise,
        &[1e-3, 1e-3, 1e-3],
        "model.motion_noise",
        true,
    )?;
    let r = ModelParams::noise_diag(&params.obs_noise, &[0.01, 0.0025], "model.obs_noise", false)?;
    let dims = ErrorStateDims {
        nominal: 3,
        error: 3,
        control: 2,
        obs: 2,
        motion_noise: 3,
        obs_noise: 2,
    };
    let (lm_h, lm_j) = (lm, lm);
    ErrorStateModel::new(
        dims,
        Arc::new(move |x, u| {
            let mut next = unicycle_step(x, u, dt);
            next[2] = wrap_angle(next[2]);
            next
        }),
        Arc::new(move |x| DVector::from_vec(vec![range_to_landmark(x, &lm_h), x[2]])),
        Arc::new(move |x, u| unicycle_jacobian(x, u, dt)),
        Arc::new(move |_, _| DMatrix::identity(3, 3)),
        Arc::new(move |x| {
            let dx = x[0] - lm_j[0];
            let dy = x[1] - lm_j[1];
            let range = (dx * dx + dy * dy).sqrt();
            let (zero, one) = (T::zero(), T::one());
            DMatrix::from_row_slice(2, 3, &[dx / range, dy / range, zero, zero, zero, one])
        }),
        Arc::new(move |_| DMatrix::identity(2, 2)),
        Arc::new(move |x, dx| {
            let mut out = x + dx;
            out[2] = wrap_angle(out[2]);
            out
        }),
        Arc::new(move |a, b| {
            let mut out = a - b;
            out[2] = wrap_angle(out[2]);
            out
        }),
        // The wrapped-heading retraction differs from plain addition by a
        // constant 2π shift, so its derivative is identity everywhere.
        Arc::new(move |_, _| DMatrix::identity(3, 3)),
        Arc::new(move |_, _| DMatrix::identity(3, 3)),
        q,
        r,
        vec![false, true],
    )
}

impl<T: RealField + Copy> BuiltinModel<T> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            BuiltinModel::Linear1D(_) => "linear-1d",
            BuiltinModel::Linear(_) => "linear",
            BuiltinModel::Nonlinear(_) => "nonlinear",
            BuiltinModel::ErrorState(_) => "error-state",
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            BuiltinModel::Linear1D(_) => 1,
            BuiltinModel::Linear(m) => m.state_dim(),
            BuiltinModel::Nonlinear(m) => m.dims.state,
            BuiltinModel::ErrorState(m) => m.dims.nominal,
        }
    }

    pub fn control_dim(&self) -> usize {
        match self {
            BuiltinModel::Linear1D(_) => 1,
            BuiltinModel::Linear(m) => m.control_dim(),
            BuiltinModel::Nonlinear(m) => m.dims.control,
            BuiltinModel::ErrorState(m) => m.dims.control,
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            BuiltinModel::Linear1D(_) => 1,
            BuiltinModel::Linear(m) => m.obs_dim(),
            BuiltinModel::Nonlinear(m) => m.dims.obs,
            BuiltinModel::ErrorState(m) => m.dims.obs,
        }
    }

    pub fn motion_noise_cov(&self) -> DMatrix<T> {
        match self {
            BuiltinModel::Linear1D(m) => DMatrix::from_element(1, 1, m.sigma2_motion),
            BuiltinModel::Linear(m) => m.q.clone(),
            BuiltinModel::Nonlinear(m) => m.q.clone(),
            BuiltinModel::ErrorState(m) => m.q.clone(),
        }
    }

    pub fn obs_noise_cov(&self) -> DMatrix<T> {
        match self {
            BuiltinModel::Linear1D(m) => DMatrix::from_element(1, 1, m.sigma2_obs),
            BuiltinModel::Linear(m) => m.r.clone(),
            BuiltinModel::Nonlinear(m) => m.r.clone(),
            BuiltinModel::ErrorState(m) => m.r.clone(),
        }
    }

    /// Truth propagation with sampled motion noise.
    pub fn propagate_truth(&self, x: &DVector<T>, u: &DVector<T>, w: &DVector<T>) -> DVector<T> {
        match self {
            BuiltinModel::Linear1D(_) => DVector::from_vec(vec![x[0] + u[0] + w[0]]),
            BuiltinModel::Linear(m) => &m.f * x + &m.b * u + w,
            BuiltinModel::Nonlinear(m) => m.motion(x, u, w),
            BuiltinModel::ErrorState(m) => m.boxplus(&m.f_nominal(x, u), w),
        }
    }

    /// Truth observation with sampled observation noise.
    pub fn observe_truth(&self, x: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        match self {
            BuiltinModel::Linear1D(_) => DVector::from_vec(vec![x[0] + v[0]]),
            BuiltinModel::Linear(m) => &m.h * x + v,
            BuiltinModel::Nonlinear(m) => m.observe(x, v),
            BuiltinModel::ErrorState(m) => m.h_nominal(x) + v,
        }
    }

    /// Manifold-aware state residual `a ⊟ b` (angular components wrapped).
    pub fn state_residual(&self, a: &DVector<T>, b: &DVector<T>) -> DVector<T> {
        match self {
            BuiltinModel::Linear1D(_) | BuiltinModel::Linear(_) => a - b,
            BuiltinModel::Nonlinear(m) => {
                let mut out = a - b;
                for (i, ang) in m.state_angular.iter().enumerate() {
                    if *ang {
                        out[i] = wrap_angle(out[i]);
                    }
                }
                out
            }
            BuiltinModel::ErrorState(m) => m.boxminus(a, b),
        }
    }

    pub fn as_linear_1d(&self) -> Option<Linear1DModel<T>> {
        match self {
            BuiltinModel::Linear1D(m) => Some(*m),
            _ => None,
        }
    }

    pub fn as_linear(&self) -> Option<LinearModel<T>> {
        match self {
            BuiltinModel::Linear1D(m) => Some(m.to_linear()),
            BuiltinModel::Linear(m) => Some(m.clone()),
            _ => None,
        }
    }

    pub fn as_nonlinear(&self) -> Option<NonlinearModel<T>> {
        match self {
            BuiltinModel::Linear1D(m) => Some(NonlinearModel::from_linear(&m.to_linear())),
            BuiltinModel::Linear(m) => Some(NonlinearModel::from_linear(m)),
            BuiltinModel::Nonlinear(m) => Some(m.clone()),
            BuiltinModel::ErrorState(_) => None,
        }
    }

    pub fn as_error_state(&self) -> Option<ErrorStateModel<T>> {
        match self {
            BuiltinModel::Linear1D(m) => Some(ErrorStateModel::from_linear(&m.to_linear())),
            BuiltinModel::Linear(m) => Some(ErrorStateModel::from_linear(m)),
            BuiltinModel::Nonlinear(m) => Some(ErrorStateModel::from_nonlinear(m)),
            BuiltinModel::ErrorState(m) => Some(m.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::models::relative_error;
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ModelParams<f64> {
        ModelParams::default()
    }

    #[test]
    fn unknown_name_lists_valid_models() {
        let err = "linear-3d".parse::<BuiltinModelId>().unwrap_err();
        match err {
            Error::UnknownName { valid, .. } => assert_eq!(valid, BUILTIN_MODEL_NAMES.to_vec()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn linear_1d_constructor() {
        let m = builtin_model::<f64>(BuiltinModelId::Linear1D, &params()).unwrap();
        let m = m.as_linear_1d().unwrap();
        assert_eq!(m.sigma2_motion, 0.25);
        assert_eq!(m.sigma2_obs, 0.5);
    }

    #[test]
    fn negative_variance_rejected_with_field_path() {
        let p = ModelParams { motion_noise: Some(vec![-1.0]), ..params() };
        let err = builtin_model::<f64>(BuiltinModelId::Linear1D, &p).unwrap_err();
        match err {
            Error::InvalidConfig { field, .. } => assert_eq!(field, "model.motion_noise[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn random_pose(rng: &mut ChaCha8Rng) -> DVector<f64> {
        // Poses kept a safe distance from the landmark at (2, 2) and away
        // from the atan2 branch cut so finite differences stay valid.
        loop {
            let x = dvector![
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-2.5..2.5)
            ];
            let d = ((x[0] - 2.0f64).powi(2) + (x[1] - 2.0).powi(2)).sqrt();
            if d > 0.5 {
                return x;
            }
        }
    }

    #[test]
    fn range_bearing_jacobians_match_finite_differences() {
        let m = builtin_model::<f64>(BuiltinModelId::RangeBearing2D, &params()).unwrap();
        let m = m.as_nonlinear().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let points: Vec<_> = (0..100)
            .map(|_| {
                (random_pose(&mut rng), dvector![rng.random_range(0.0..1.0), rng.random_range(-1.0..1.0)])
            })
            .collect();
        let worst = m.validate_jacobians(&points).unwrap();
        assert!(worst < 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn heading_robot_jacobians_match_finite_differences() {
        let m = builtin_model::<f64>(BuiltinModelId::HeadingRobotSe2Lite, &params()).unwrap();
        let m = m.as_error_state().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let points: Vec<_> = (0..100)
            .map(|_| {
                (random_pose(&mut rng), dvector![rng.random_range(0.0..1.0), rng.random_range(-1.0..1.0)])
            })
            .collect();
        let worst = m.validate_jacobians(&points).unwrap();
        assert!(worst < 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn heading_boxplus_identity_and_wrap() {
        let m = builtin_model::<f64>(BuiltinModelId::HeadingRobotSe2Lite, &params()).unwrap();
        let m = m.as_error_state().unwrap();
        let zero = DVector::zeros(3);
        // boxplus(x, 0) = x exactly, over a grid of headings
        for i in -314..=314 {
            let x = dvector![0.3, -0.7, i as f64 / 100.0];
            assert_eq!(m.boxplus(&x, &zero), x);
        }
        // wrap lands in (−π, π]
        let pi = std::f64::consts::PI;
        let x = dvector![0.0, 0.0, 3.0];
        let res = m.boxplus(&x, &dvector![0.0, 0.0, 0.3]);
        assert!((res[2] - (3.3 - 2.0 * pi)).abs() < 1e-12);
    }

    #[test]
    fn heading_boxplus_associative_up_to_wrap() {
        let m = builtin_model::<f64>(BuiltinModelId::HeadingRobotSe2Lite, &params()).unwrap();
        let m = m.as_error_state().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let two_pi = std::f64::consts::TAU;
        for _ in 0..200 {
            let x = dvector![
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-3.0..3.0)
            ];
            let a = dvector![
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-3.0..3.0)
            ];
            let b = dvector![
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-3.0..3.0)
            ];
            let lhs = m.boxplus(&m.boxplus(&x, &a), &b);
            let rhs = m.boxplus(&x, &(&a + &b));
            // positions exactly associative
            assert_eq!(lhs[0], rhs[0]);
            assert_eq!(lhs[1], rhs[1]);
            // heading associative modulo 2π
            let d = (lhs[2] - rhs[2]) / two_pi;
            assert!((d - d.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn wrapped_linear_jacobians_are_exact() {
        let m = builtin_model::<f64>(BuiltinModelId::LinearCv2D, &params()).unwrap();
        let lin = m.as_linear().unwrap();
        let non = m.as_nonlinear().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let x = DVector::from_fn(4, |_, _| rng.random_range(-5.0..5.0));
            let u = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            assert_eq!(non.jac_f_x(&x, &u), lin.f);
            assert_eq!(non.jac_h_x(&x), lin.h);
        }
        let points: Vec<_> = (0..20)
            .map(|_| {
                (
                    DVector::from_fn(4, |_, _| rng.random_range(-5.0..5.0)),
                    DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)),
                )
            })
            .collect();
        assert!(m.as_nonlinear().unwrap().validate_jacobians(&points).unwrap() < 1e-5);
    }

    #[test]
    fn range_bearing_observation_matches_geometry() {
        let p = ModelParams { landmark: [1.0, 0.0], ..params() };
        let m = builtin_model::<f64>(BuiltinModelId::RangeBearing2D, &p).unwrap();
        let m = m.as_nonlinear().unwrap();
        let z = m.predicted_obs(&dvector![0.0, 0.0, 0.0]);
        assert!((z[0] - 1.0).abs() < 1e-15);
        assert!(z[1].abs() < 1e-15);
        // analytic H at a known pose against hand finite differences
        let x = dvector![0.5, -0.5, 0.3];
        let h = m.jac_h_x(&x);
        let fd = crate::models::fd_jacobian_scaled(|p| m.predicted_obs(p), &x, 1e-6).unwrap();
        assert!(relative_error(&fd, &h) < 1e-7, "{}", max_abs(&(fd - h)));
    }
}
