//! Named cross-check suites behind `recbayes validate --suite NAME`.
//!
//! Each suite pits a filter path against an independent route to the same
//! quantity (grid quadrature, Gauss-Newton normal equations, direct cost
//! minimization, cross-filter collapse, finite differences) and reports
//! the worst observed margin against a fixed threshold.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use recbayes::filters::{
    ekf_correct, ekf_predict, eskf_correct, eskf_predict, iekf_correct, ieskf_boxed_step,
    ieskf_correct, kf1d_correct, kf1d_predict, kf_correct, kf_predict, Belief, ErrorBelief,
    IterationConfig,
};
use recbayes::gauss_newton::{error_state_step_normal_eq, ieskf_cost_minimize, map_correct_gn, MapProblem};
use recbayes::gaussian::Gaussian1D;
use recbayes::grid::{gaussian_density, grid_correct, grid_moments, grid_predict, GridBelief};
use recbayes::linalg::max_abs;
use recbayes::models::{
    builtin_model, BuiltinModelId, ErrorStateModel, LinearModel, ModelParams, NonlinearModel,
};
use recbayes::sim::{simulate, Scenario};

use crate::CliError;

pub const SUITE_NAMES: [&str; 5] =
    ["grid-vs-kf", "gn-vs-iekf", "cost-vs-ieskf", "linear-collapse", "jacobians"];

/// One named margin against its threshold.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub margin: f64,
    pub threshold: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, margin: f64, threshold: f64) -> Self {
        Self { name: name.into(), margin, threshold }
    }

    pub fn passed(&self) -> bool {
        self.margin.is_finite() && self.margin < self.threshold
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

/// Runs a named suite, or fails with the list of valid names.
pub fn run_suite(name: &str) -> Result<SuiteReport, CliError> {
    match name {
        "grid-vs-kf" => grid_vs_kf(),
        "gn-vs-iekf" => gn_vs_iekf(),
        "cost-vs-ieskf" => cost_vs_ieskf(),
        "linear-collapse" => linear_collapse(),
        "jacobians" => jacobians(),
        other => Err(CliError::config(format!(
            "unknown suite {other:?}; valid suites: {}",
            SUITE_NAMES.join(", ")
        ))),
    }
}

/// Grid nodes pinned by the comparison protocol.
pub const GRID_NODES: usize = 4001;
/// Envelope half-width in posterior standard deviations.
pub const GRID_SIGMAS: f64 = 8.0;

/// Scalar linear scenario, 20 steps: the histogram filter and the 1D KF
/// must agree on every per-step mean and variance within 1e-3.
pub fn grid_vs_kf() -> Result<SuiteReport, CliError> {
    let started = Instant::now();
    let s = Scenario::with_constant_control(
        BuiltinModelId::Linear1D,
        ModelParams::default(),
        20,
        DVector::from_vec(vec![0.1]),
        7,
    )?;
    let m = s.model()?.as_linear_1d().expect("linear-1d scenario");
    let t = simulate(&s)?;

    // First pass: analytic filter, recording every predicted and corrected
    // belief so the grid domain can be sized to the ±8σ envelope.
    let mut beliefs = Vec::new();
    let mut g = Gaussian1D::new(s.initial_belief.x_hat[0], s.initial_belief.p[(0, 0)])?;
    beliefs.push(g);
    let mut kf_steps = Vec::new();
    for step in 0..s.horizon {
        let pred = kf1d_predict(g, &m, s.controls[step][0]);
        let post = kf1d_correct(pred, &m, t.measurements[step][0])?;
        beliefs.push(pred);
        beliefs.push(post);
        kf_steps.push((pred, post));
        g = post;
    }
    let lo = beliefs
        .iter()
        .map(|b| b.mean - GRID_SIGMAS * b.var.sqrt())
        .fold(f64::INFINITY, f64::min);
    let hi = beliefs
        .iter()
        .map(|b| b.mean + GRID_SIGMAS * b.var.sqrt())
        .fold(f64::NEG_INFINITY, f64::max);

    // Second pass: histogram filter over the same data.
    let mut grid = GridBelief::gaussian(lo, hi, GRID_NODES, beliefs[0].mean, beliefs[0].var)?;
    let q = m.sigma2_motion;
    let r = m.sigma2_obs;
    let mut mean_margin = 0.0f64;
    let mut var_margin = 0.0f64;
    for step in 0..s.horizon {
        grid = grid_predict(&grid, |x, xp, u| gaussian_density(x, xp + u, q), s.controls[step][0])?;
        let gm = grid_moments(&grid);
        mean_margin = mean_margin.max((gm.mean - kf_steps[step].0.mean).abs());
        var_margin = var_margin.max((gm.var - kf_steps[step].0.var).abs());
        grid = grid_correct(&grid, |z, x| gaussian_density(z, x, r), t.measurements[step][0])?;
        let gm = grid_moments(&grid);
        mean_margin = mean_margin.max((gm.mean - kf_steps[step].1.mean).abs());
        var_margin = var_margin.max((gm.var - kf_steps[step].1.var).abs());
    }
    let elapsed = started.elapsed().as_secs_f64();
    Ok(SuiteReport {
        suite: "grid-vs-kf",
        checks: vec![
            Check::new("max |grid mean - kf mean|", mean_margin, 1e-3),
            Check::new("max |grid var - kf var|", var_margin, 1e-3),
            Check::new("runtime seconds", elapsed, 10.0),
        ],
    })
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (a.transpose() * &a + DMatrix::identity(n, n) * (0.5 * n as f64)) * scale
}

fn random_pose_near_landmark(rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let x = DVector::from_vec(vec![
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-2.0..2.0),
        ]);
        let d = ((x[0] - 2.0f64).powi(2) + (x[1] - 2.0).powi(2)).sqrt();
        if d > 0.8 {
            return x;
        }
    }
}

/// Converged iterated-EKF corrections must match the Gauss-Newton MAP
/// solution, and Gauss-Newton on a linear observation must reproduce the
/// KF correction in a single iteration.
pub fn gn_vs_iekf() -> Result<SuiteReport, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(2001);
    let m = builtin_model(BuiltinModelId::RangeBearing2D, &ModelParams::default())?
        .as_nonlinear()
        .expect("nonlinear model");
    let cfg = IterationConfig::new(1e-12, 50)?;
    let mut mean_margin = 0.0f64;
    let mut cov_margin = 0.0f64;
    for _ in 0..100 {
        let x_hat = random_pose_near_landmark(&mut rng);
        let p = random_spd(&mut rng, 3, 0.02);
        let prior = Belief::new(x_hat.clone(), p)?;
        let truth = &x_hat
            + DVector::from_vec(vec![
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.15..0.15),
            ]);
        let z = m.predicted_obs(&truth);
        let (iekf, _) = iekf_correct(&prior, &m, &z, &cfg)?;
        let problem = MapProblem::from_model(prior, &m, z)?;
        let (gn, _) = map_correct_gn(&problem, &cfg)?;
        mean_margin = mean_margin.max((&iekf.x_hat - &gn.x_hat).norm());
        cov_margin = cov_margin.max(max_abs(&(&iekf.p - &gn.p)));
    }

    // Linear part: one GN iteration reproduces the KF correction.
    let mut lin_margin = 0.0f64;
    let mut iter_margin = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=4);
        let k = rng.random_range(1..=n);
        let lm = LinearModel::new(
            DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)),
            DMatrix::identity(n, 1),
            DMatrix::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0)),
            random_spd(&mut rng, n, 0.1),
            random_spd(&mut rng, k, 0.1),
        )
        .map_err(CliError::from)?;
        let prior = Belief::new(
            DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
            random_spd(&mut rng, n, 0.2),
        )?;
        let z = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
        let (kf, _) = kf_correct(&prior, &lm, &z)?;
        let nm = NonlinearModel::from_linear(&lm);
        let problem = MapProblem::from_model(prior, &nm, z)?;
        let (gn, iterations) = map_correct_gn(&problem, &IterationConfig::default())?;
        iter_margin = iter_margin.max((iterations as f64 - 1.0).abs());
        lin_margin = lin_margin.max((&gn.x_hat - &kf.x_hat).norm());
        lin_margin = lin_margin.max(max_abs(&(&gn.p - &kf.p)));
    }

    Ok(SuiteReport {
        suite: "gn-vs-iekf",
        checks: vec![
            Check::new("max |iekf mean - gn mean| (100 range-bearing)", mean_margin, 1e-8),
            Check::new("max |iekf cov - gn cov| (100 range-bearing)", cov_margin, 1e-8),
            Check::new("max |gn - kf| on linear h (100 instances)", lin_margin, 1e-10),
            Check::new("max |gn iterations - 1| on linear h", iter_margin, 0.5),
        ],
    })
}

/// The gain-form iterated error-state step must equal the direct
/// normal-equation minimizer of its quadratic cost on randomized
/// well-conditioned instances with dimensions up to 5.
pub fn cost_vs_ieskf() -> Result<SuiteReport, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(3001);
    let mut margin = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=5);
        let k = rng.random_range(1..=5);
        let p = random_spd(&mut rng, n, 0.3);
        let r_lin = random_spd(&mut rng, k, 0.3);
        let h = DMatrix::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));
        // J stays near identity so it is safely invertible.
        let j = DMatrix::identity(n, n)
            + DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.3..0.3));
        let c = DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5));
        let z_res = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
        let boxed = ieskf_boxed_step(&p, &r_lin, &h, &j, &c, &z_res)?;
        let direct = error_state_step_normal_eq(&p, &r_lin, &h, &j, &c, &z_res)?;
        margin = margin.max((&boxed.step - &direct).norm());
    }

    // Model-level route: the minimizer at the prediction equals the plain
    // error-state correction.
    let m = builtin_model(BuiltinModelId::HeadingRobotSe2Lite, &ModelParams::default())?
        .as_error_state()
        .expect("error-state model");
    let mut at_prior_margin = 0.0f64;
    for _ in 0..20 {
        let x = random_pose_near_landmark(&mut rng);
        let b = ErrorBelief::new(x, random_spd(&mut rng, 3, 0.02))?;
        let z = DVector::from_vec(vec![
            rng.random_range(1.0..4.0),
            rng.random_range(-3.0..3.0),
        ]);
        let dx = ieskf_cost_minimize(&b, &m, &z, &b.x_nominal.clone())?;
        let (_, diag) = eskf_correct(&b, &m, &z)?;
        let eskf_dx = &diag.kalman_gain * &diag.innovation;
        at_prior_margin = at_prior_margin.max((dx - eskf_dx).norm());
    }

    Ok(SuiteReport {
        suite: "cost-vs-ieskf",
        checks: vec![
            Check::new("max |boxed step - normal-eq step| (100 instances)", margin, 1e-6),
            Check::new("max |minimizer at prior - eskf step|", at_prior_margin, 1e-10),
        ],
    })
}

/// On a linear model every filter in the family must produce the same
/// posterior mean and covariance at every step.
pub fn linear_collapse() -> Result<SuiteReport, CliError> {
    let s = Scenario::with_constant_control(
        BuiltinModelId::LinearCv2D,
        ModelParams::default(),
        100,
        DVector::from_vec(vec![0.05, -0.02]),
        13,
    )?;
    let model = s.model()?;
    let lm = model.as_linear().expect("linear model");
    let nm = model.as_nonlinear().expect("wrapped nonlinear");
    let em = model.as_error_state().expect("wrapped error-state");
    let t = simulate(&s)?;

    let mut kf = s.initial_belief.clone();
    let mut ekf = s.initial_belief.clone();
    let mut iekf: Vec<Belief<f64>> = vec![s.initial_belief.clone(); 3];
    let mut eskf = ErrorBelief::new(s.initial_belief.x_hat.clone(), s.initial_belief.p.clone())?;
    let mut ieskf: Vec<ErrorBelief<f64>> = vec![eskf.clone(); 3];
    let budgets = [1usize, 3, 20];

    let mut margin = 0.0f64;
    let mut track = |mean_diff: f64, cov_diff: f64| {
        margin = margin.max(mean_diff).max(cov_diff);
    };
    for step in 0..s.horizon {
        let u = &t.controls[step];
        let z = &t.measurements[step];
        kf = kf_predict(&kf, &lm, u)?;
        kf = kf_correct(&kf, &lm, z)?.0;

        ekf = ekf_predict(&ekf, &nm, u)?;
        ekf = ekf_correct(&ekf, &nm, z)?.0;
        track((&ekf.x_hat - &kf.x_hat).norm(), max_abs(&(&ekf.p - &kf.p)));

        eskf = eskf_predict(&eskf, &em, u)?;
        eskf = eskf_correct(&eskf, &em, z)?.0;
        track((&eskf.x_nominal - &kf.x_hat).norm(), max_abs(&(&eskf.p - &kf.p)));

        for (b, max_iters) in iekf.iter_mut().zip(budgets) {
            let cfg = IterationConfig::new(1e-8, max_iters)?;
            *b = ekf_predict(b, &nm, u)?;
            *b = iekf_correct(b, &nm, z, &cfg)?.0;
            track((&b.x_hat - &kf.x_hat).norm(), max_abs(&(&b.p - &kf.p)));
        }
        for (b, max_iters) in ieskf.iter_mut().zip(budgets) {
            let cfg = IterationConfig::new(1e-8, max_iters)?;
            *b = eskf_predict(b, &em, u)?;
            *b = ieskf_correct(b, &em, z, &cfg)?.0;
            track((&b.x_nominal - &kf.x_hat).norm(), max_abs(&(&b.p - &kf.p)));
        }
    }

    Ok(SuiteReport {
        suite: "linear-collapse",
        checks: vec![Check::new(
            "max per-step deviation across kf/ekf/eskf/iekf/ieskf (100 steps)",
            margin,
            1e-10,
        )],
    })
}

/// Every analytic Jacobian of every built-in model must match central
/// finite differences at 100 random evaluation points.
pub fn jacobians() -> Result<SuiteReport, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(4001);
    let mut checks = Vec::new();
    for id in [
        BuiltinModelId::Linear1D,
        BuiltinModelId::LinearCv2D,
        BuiltinModelId::RangeBearing2D,
        BuiltinModelId::HeadingRobotSe2Lite,
    ] {
        let model = builtin_model(id, &ModelParams::default())?;
        let worst = match (model.as_nonlinear(), model.as_error_state()) {
            (Some(nm), _) => {
                let points = random_points(&mut rng, id, nm.dims.state, nm.dims.control);
                nm.validate_jacobians(&points)?
            }
            (None, Some(em)) => {
                let points = random_points(&mut rng, id, em.dims.nominal, em.dims.control);
                validate_error_state(&em, &points)?
            }
            _ => unreachable!("every built-in has a differentiable form"),
        };
        checks.push(Check::new(format!("{id}: worst Jacobian rel. error (100 points)"), worst, 1e-5));
    }
    Ok(SuiteReport { suite: "jacobians", checks })
}

fn validate_error_state(
    em: &ErrorStateModel<f64>,
    points: &[(DVector<f64>, DVector<f64>)],
) -> Result<f64, CliError> {
    Ok(em.validate_jacobians(points)?)
}

fn random_points(
    rng: &mut ChaCha8Rng,
    id: BuiltinModelId,
    state: usize,
    control: usize,
) -> Vec<(DVector<f64>, DVector<f64>)> {
    (0..100)
        .map(|_| {
            let x = match id {
                BuiltinModelId::RangeBearing2D | BuiltinModelId::HeadingRobotSe2Lite => {
                    random_pose_near_landmark(rng)
                }
                _ => DVector::from_fn(state, |_, _| rng.random_range(-5.0..5.0)),
            };
            let u = DVector::from_fn(control, |_, _| rng.random_range(-1.0..1.0));
            (x, u)
        })
        .collect()
}
