//! Scenario simulation, filter execution and evaluation metrics.
//!
//! A [`Scenario`] fully determines a run: model, horizon, control schedule,
//! seed and initial belief. [`simulate`] rolls out ground truth and noisy
//! measurements (all randomness flows from the seed through the pinned
//! generator in [`rng`]), [`run_filter`] drives a filter over the
//! trajectory recording per-step beliefs, NEES and iteration counts, and
//! [`compare_filters`] runs several filters against one shared trajectory.

pub mod rng;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::filters::{
    ekf_correct, ekf_predict, eskf_correct, eskf_predict, iekf_correct, ieskf_correct, kf1d_correct,
    kf1d_predict, kf_correct, kf_predict, Belief, ErrorBelief, IterationConfig,
};
use crate::gaussian::Gaussian1D;
use crate::linalg::{checked_inverse, psd_sqrt};
use crate::models::{builtin_model, BuiltinModel, BuiltinModelId, ModelParams};
use crate::{Error, Result};
use rng::GaussianRng;

pub const FILTER_NAMES: [&str; 7] =
    ["kf", "kf1d", "ekf", "eskf", "iekf", "ieskf", "dead-reckoning"];

/// Which filter to run over a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Kf,
    Kf1d,
    Ekf,
    Eskf,
    Iekf,
    Ieskf,
    /// Predict-only baseline (no corrections); runs on any model.
    DeadReckoning,
}

impl FilterKind {
    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::Kf => "kf",
            FilterKind::Kf1d => "kf1d",
            FilterKind::Ekf => "ekf",
            FilterKind::Eskf => "eskf",
            FilterKind::Iekf => "iekf",
            FilterKind::Ieskf => "ieskf",
            FilterKind::DeadReckoning => "dead-reckoning",
        }
    }

    /// True for the filters whose correction iterates.
    pub fn is_iterated(&self) -> bool {
        matches!(self, FilterKind::Iekf | FilterKind::Ieskf)
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kf" => Ok(FilterKind::Kf),
            "kf1d" => Ok(FilterKind::Kf1d),
            "ekf" => Ok(FilterKind::Ekf),
            "eskf" => Ok(FilterKind::Eskf),
            "iekf" => Ok(FilterKind::Iekf),
            "ieskf" => Ok(FilterKind::Ieskf),
            "dead-reckoning" => Ok(FilterKind::DeadReckoning),
            other => Err(Error::UnknownName {
                kind: "filter",
                got: other.to_string(),
                valid: FILTER_NAMES.to_vec(),
            }),
        }
    }
}

/// Simulation input: model, horizon, per-step controls, seed and the
/// initial belief handed to the filters. The seed fully determines all
/// randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model_id: BuiltinModelId,
    pub params: ModelParams<f64>,
    pub horizon: usize,
    pub controls: Vec<DVector<f64>>,
    pub seed: u64,
    pub initial_truth: DVector<f64>,
    pub initial_belief: Belief<f64>,
}

/// Default initial covariance scale: `P₀ = 1e-2·I` with `x̂₀ = 0`.
pub const DEFAULT_P0: f64 = 1e-2;

impl Scenario {
    pub fn new(
        model_id: BuiltinModelId,
        params: ModelParams<f64>,
        horizon: usize,
        controls: Vec<DVector<f64>>,
        seed: u64,
        initial_truth: DVector<f64>,
        initial_belief: Belief<f64>,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidConfig {
                field: "scenario.horizon".to_string(),
                detail: "must be at least 1".to_string(),
            });
        }
        if controls.len() != horizon {
            return Err(Error::InvalidConfig {
                field: "scenario.controls".to_string(),
                detail: format!("expected {horizon} entries, got {}", controls.len()),
            });
        }
        let model = builtin_model(model_id, &params)?;
        let (n, m) = (model.state_dim(), model.control_dim());
        if initial_truth.len() != n {
            return Err(Error::dims("scenario.initial_truth", n, initial_truth.len()));
        }
        if initial_belief.dim() != n {
            return Err(Error::dims("scenario.initial_belief", n, initial_belief.dim()));
        }
        for (t, u) in controls.iter().enumerate() {
            if u.len() != m {
                return Err(Error::dims(format!("scenario.controls[{t}]").as_str(), m, u.len()));
            }
        }
        Ok(Self { model_id, params, horizon, controls, seed, initial_truth, initial_belief })
    }

    /// Scenario with one control applied at every step, truth starting at
    /// the origin and the default belief `x̂₀ = 0`, `P₀ = 1e-2·I`.
    pub fn with_constant_control(
        model_id: BuiltinModelId,
        params: ModelParams<f64>,
        horizon: usize,
        control: DVector<f64>,
        seed: u64,
    ) -> Result<Self> {
        let model = builtin_model(model_id, &params)?;
        let n = model.state_dim();
        let belief = Belief::new(DVector::zeros(n), DMatrix::identity(n, n) * DEFAULT_P0)?;
        Scenario::new(
            model_id,
            params,
            horizon,
            vec![control; horizon],
            seed,
            DVector::zeros(n),
            belief,
        )
    }

    pub fn model(&self) -> Result<BuiltinModel<f64>> {
        builtin_model(self.model_id, &self.params)
    }
}

/// Ground truth, controls and measurements for one rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `horizon + 1` states; index 0 is the initial truth.
    pub truth: Vec<DVector<f64>>,
    /// `horizon` controls, `controls[t]` applied between steps `t` and `t+1`.
    pub controls: Vec<DVector<f64>>,
    /// `horizon` measurements, `measurements[t]` taken at step `t+1`.
    pub measurements: Vec<DVector<f64>>,
}

/// Rolls out the scenario: `x_t = f(x_{t−1}, u_t, w_t)` with `w ~ N(0, Q)`
/// and `z_t = h(x_t, v_t)` with `v ~ N(0, R)`.
///
/// Noise is drawn in a fixed documented order — per step, motion noise
/// first, then observation noise, components in index order — via
/// covariance square roots applied to standard-normal vectors.
pub fn simulate(s: &Scenario) -> Result<Trajectory> {
    let model = s.model()?;
    let mut rng = GaussianRng::seed_from_u64(s.seed);
    let q_root = psd_sqrt(&model.motion_noise_cov(), "scenario motion noise")?;
    let r_root = psd_sqrt(&model.obs_noise_cov(), "scenario observation noise")?;
    let mut truth = Vec::with_capacity(s.horizon + 1);
    let mut measurements = Vec::with_capacity(s.horizon);
    truth.push(s.initial_truth.clone());
    let mut x = s.initial_truth.clone();
    for u in &s.controls {
        let w = &q_root * rng.standard_normal_vector(q_root.nrows());
        x = model.propagate_truth(&x, u, &w);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { what: "simulated state".to_string() });
        }
        let v = &r_root * rng.standard_normal_vector(r_root.nrows());
        let z = model.observe_truth(&x, &v);
        if !z.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { what: "simulated measurement".to_string() });
        }
        measurements.push(z);
        truth.push(x.clone());
    }
    Ok(Trajectory { truth, controls: s.controls.clone(), measurements })
}

/// Per-step record of a filter run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based step index.
    pub step: usize,
    pub x_hat: DVector<f64>,
    pub p_diag: DVector<f64>,
    pub nees: f64,
    pub iterations: usize,
    pub innovation_norm: f64,
}

/// Output of one filter run over a trajectory. `wall_time` is informative
/// only and excluded from equality so reports stay comparable bit for bit.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub filter: FilterKind,
    pub steps: Vec<StepRecord>,
    /// Per-component RMSE over all steps (wrapped residuals).
    pub rmse: DVector<f64>,
    pub mean_nees: f64,
    pub mean_iterations: f64,
    pub wall_time: Duration,
}

impl PartialEq for RunReport {
    fn eq(&self, other: &Self) -> bool {
        self.filter == other.filter
            && self.steps == other.steps
            && self.rmse == other.rmse
            && self.mean_nees == other.mean_nees
            && self.mean_iterations == other.mean_iterations
    }
}

impl RunReport {
    /// Root-mean-square of the full state error norm (single summary number).
    pub fn rmse_norm(&self) -> f64 {
        self.rmse.norm()
    }
}

enum FilterState {
    Linear(Belief<f64>, crate::models::LinearModel<f64>),
    Scalar(Gaussian1D<f64>, crate::models::Linear1DModel<f64>),
    Nonlinear(Belief<f64>, crate::models::NonlinearModel<f64>),
    ErrorState(ErrorBelief<f64>, crate::models::ErrorStateModel<f64>),
}

fn init_state(kind: FilterKind, s: &Scenario, model: &BuiltinModel<f64>) -> Result<FilterState> {
    let incompatible = || Error::IncompatibleFilter {
        filter: kind.name().to_string(),
        model: s.model_id.name().to_string(),
    };
    let belief = s.initial_belief.clone();
    match kind {
        FilterKind::Kf => Ok(FilterState::Linear(belief, model.as_linear().ok_or_else(incompatible)?)),
        FilterKind::Kf1d => {
            let m = model.as_linear_1d().ok_or_else(incompatible)?;
            Ok(FilterState::Scalar(
                Gaussian1D::new(belief.x_hat[0], belief.p[(0, 0)])?,
                m,
            ))
        }
        FilterKind::Ekf | FilterKind::Iekf => {
            Ok(FilterState::Nonlinear(belief, model.as_nonlinear().ok_or_else(incompatible)?))
        }
        FilterKind::Eskf | FilterKind::Ieskf | FilterKind::DeadReckoning => {
            let m = model.as_error_state().ok_or_else(incompatible)?;
            let eb = ErrorBelief::new(belief.x_hat, belief.p)?;
            Ok(FilterState::ErrorState(eb, m))
        }
    }
}

fn with_step_context(e: Error, step: usize) -> Error {
    match e {
        Error::SingularMatrix { what, condition } => {
            Error::SingularMatrix { what: format!("step {step}: {what}"), condition }
        }
        other => other,
    }
}

/// Runs one filter over a simulated trajectory, alternating predict and
/// correct and recording `NEES_t = eᵀ P⁻¹ e` with the manifold-aware
/// residual `e = x̂ ⊟ x_truth`. Dead reckoning skips every correction.
pub fn run_filter(
    kind: FilterKind,
    s: &Scenario,
    t: &Trajectory,
    cfg: &IterationConfig<f64>,
) -> Result<RunReport> {
    if t.truth.len() != s.horizon + 1 || t.measurements.len() != s.horizon {
        return Err(Error::dims("trajectory length", s.horizon, t.measurements.len()));
    }
    let model = s.model()?;
    let started = Instant::now();
    let mut state = init_state(kind, s, &model)?;
    let mut steps = Vec::with_capacity(s.horizon);
    let mut sq_err: DVector<f64> = DVector::zeros(model.state_dim());
    for step in 1..=s.horizon {
        let u = &t.controls[step - 1];
        let z = &t.measurements[step - 1];
        let correct = kind != FilterKind::DeadReckoning;
        let (x_hat, p, iterations, innovation_norm) = match &mut state {
            FilterState::Linear(b, m) => {
                *b = kf_predict(b, m, u).map_err(|e| with_step_context(e, step))?;
                let mut diag_info = (0usize, 0.0);
                if correct {
                    let (nb, diag) = kf_correct(b, m, z).map_err(|e| with_step_context(e, step))?;
                    *b = nb;
                    diag_info = (diag.iterations, diag.innovation.norm());
                }
                (b.x_hat.clone(), b.p.clone(), diag_info.0, diag_info.1)
            }
            FilterState::Scalar(g, m) => {
                *g = kf1d_predict(*g, m, u[0]);
                let mut diag_info = (0usize, 0.0);
                if correct {
                    let prior_mean = g.mean;
                    *g = kf1d_correct(*g, m, z[0]).map_err(|e| with_step_context(e, step))?;
                    diag_info = (1, (z[0] - prior_mean).abs());
                }
                (
                    DVector::from_vec(vec![g.mean]),
                    DMatrix::from_element(1, 1, g.var),
                    diag_info.0,
                    diag_info.1,
                )
            }
            FilterState::Nonlinear(b, m) => {
                *b = ekf_predict(b, m, u).map_err(|e| with_step_context(e, step))?;
                let mut diag_info = (0usize, 0.0);
                if correct {
                    let (nb, diag) = if kind == FilterKind::Iekf {
                        iekf_correct(b, m, z, cfg).map_err(|e| with_step_context(e, step))?
                    } else {
                        ekf_correct(b, m, z).map_err(|e| with_step_context(e, step))?
                    };
                    *b = nb;
                    diag_info = (diag.iterations, diag.innovation.norm());
                }
                (b.x_hat.clone(), b.p.clone(), diag_info.0, diag_info.1)
            }
            FilterState::ErrorState(b, m) => {
                *b = eskf_predict(b, m, u).map_err(|e| with_step_context(e, step))?;
                let mut diag_info = (0usize, 0.0);
                if correct {
                    let (nb, diag) = if kind == FilterKind::Ieskf {
                        ieskf_correct(b, m, z, cfg).map_err(|e| with_step_context(e, step))?
                    } else {
                        eskf_correct(b, m, z).map_err(|e| with_step_context(e, step))?
                    };
                    *b = nb;
                    diag_info = (diag.iterations, diag.innovation.norm());
                }
                debug_assert!(b.dx_hat.iter().all(|v| *v == 0.0));
                (b.x_nominal.clone(), b.p.clone(), diag_info.0, diag_info.1)
            }
        };
        let err = model.state_residual(&x_hat, &t.truth[step]);
        let p_inv = checked_inverse(&p, "NEES covariance")
            .map_err(|e| with_step_context(e, step))?
            .inverse;
        let nees = (err.transpose() * p_inv * &err)[(0, 0)];
        sq_err += err.component_mul(&err);
        steps.push(StepRecord {
            step,
            x_hat,
            p_diag: p.diagonal(),
            nees,
            iterations,
            innovation_norm,
        });
    }
    let horizon = s.horizon as f64;
    let rmse = (sq_err / horizon).map(f64::sqrt);
    let mean_nees = steps.iter().map(|r| r.nees).sum::<f64>() / horizon;
    let mean_iterations = steps.iter().map(|r| r.iterations as f64).sum::<f64>() / horizon;
    Ok(RunReport {
        filter: kind,
        steps,
        rmse,
        mean_nees,
        mean_iterations,
        wall_time: started.elapsed(),
    })
}

/// Runs several filters against one shared trajectory (same seed), keeping
/// the reports aligned step for step.
pub fn compare_filters(
    kinds: &[FilterKind],
    s: &Scenario,
    cfg: &IterationConfig<f64>,
) -> Result<Vec<RunReport>> {
    if kinds.is_empty() {
        return Err(Error::InvalidConfig {
            field: "filter.kinds".to_string(),
            detail: "need at least one filter".to_string(),
        });
    }
    let trajectory = simulate(s)?;
    kinds.iter().map(|k| run_filter(*k, s, &trajectory, cfg)).collect()
}
