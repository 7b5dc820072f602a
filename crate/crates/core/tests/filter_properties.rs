//! Long-run and statistical properties of the filter family.

use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use recbayes::filters::{
    ekf_correct, ekf_predict, eskf_correct, eskf_predict, iekf_correct, ieskf_correct, kf_correct,
    kf_predict, Belief, ErrorBelief, IterationConfig,
};
use recbayes::linalg::{check_psd, check_symmetric, max_abs, symmetric_eigenvalues};
use recbayes::models::{BuiltinModelId, LinearModel, ModelParams};
use recbayes::sim::{run_filter, simulate, FilterKind, Scenario};

/// Landmark placed off the circular nominal path so thousand-step runs
/// never graze the range singularity.
fn long_run_params() -> ModelParams<f64> {
    ModelParams { landmark: [4.0, 2.0], ..ModelParams::default() }
}

fn scenario(
    id: BuiltinModelId,
    params: &ModelParams<f64>,
    horizon: usize,
    control: DVector<f64>,
    seed: u64,
) -> Scenario {
    Scenario::with_constant_control(id, params.clone(), horizon, control, seed).unwrap()
}

fn assert_valid_cov(p: &DMatrix<f64>, context: &str) {
    check_symmetric(p, context).unwrap_or_else(|e| panic!("{context}: {e}"));
    check_psd(p, context).unwrap_or_else(|e| panic!("{context}: {e}"));
}

#[test]
fn covariance_stays_symmetric_psd_over_1000_steps() {
    let cfg = IterationConfig::default();
    for seed in 0..10u64 {
        // linear constant-velocity model via the KF
        let s = scenario(
            BuiltinModelId::LinearCv2D,
            &ModelParams::default(),
            1000,
            dvector![0.05, -0.02],
            seed,
        );
        let m = s.model().unwrap().as_linear().unwrap();
        let t = simulate(&s).unwrap();
        let mut b = s.initial_belief.clone();
        for step in 0..s.horizon {
            b = kf_predict(&b, &m, &t.controls[step]).unwrap();
            assert_valid_cov(&b.p, "kf predict");
            b = kf_correct(&b, &m, &t.measurements[step]).unwrap().0;
            assert_valid_cov(&b.p, "kf correct");
        }

        // range-bearing via EKF and IEKF
        let s = scenario(
            BuiltinModelId::RangeBearing2D,
            &long_run_params(),
            1000,
            dvector![0.8, 0.4],
            seed,
        );
        let m = s.model().unwrap().as_nonlinear().unwrap();
        let t = simulate(&s).unwrap();
        let mut ekf = s.initial_belief.clone();
        let mut iekf = s.initial_belief.clone();
        for step in 0..s.horizon {
            ekf = ekf_predict(&ekf, &m, &t.controls[step]).unwrap();
            assert_valid_cov(&ekf.p, "ekf predict");
            ekf = ekf_correct(&ekf, &m, &t.measurements[step]).unwrap().0;
            assert_valid_cov(&ekf.p, "ekf correct");

            iekf = ekf_predict(&iekf, &m, &t.controls[step]).unwrap();
            iekf = iekf_correct(&iekf, &m, &t.measurements[step], &cfg).unwrap().0;
            assert_valid_cov(&iekf.p, "iekf correct");
        }

        // wrapped-heading robot via ESKF and IESKF
        let s = scenario(
            BuiltinModelId::HeadingRobotSe2Lite,
            &long_run_params(),
            1000,
            dvector![1.0, 0.5],
            seed,
        );
        let m = s.model().unwrap().as_error_state().unwrap();
        let t = simulate(&s).unwrap();
        let mut eskf = ErrorBelief::new(s.initial_belief.x_hat.clone(), s.initial_belief.p.clone())
            .unwrap();
        let mut ieskf = eskf.clone();
        for step in 0..s.horizon {
            eskf = eskf_predict(&eskf, &m, &t.controls[step]).unwrap();
            assert_valid_cov(&eskf.p, "eskf predict");
            assert!(eskf.dx_hat.iter().all(|v| *v == 0.0));
            eskf = eskf_correct(&eskf, &m, &t.measurements[step]).unwrap().0;
            assert_valid_cov(&eskf.p, "eskf correct");
            assert!(eskf.dx_hat.iter().all(|v| *v == 0.0));

            ieskf = eskf_predict(&ieskf, &m, &t.controls[step]).unwrap();
            ieskf = ieskf_correct(&ieskf, &m, &t.measurements[step], &cfg).unwrap().0;
            assert_valid_cov(&ieskf.p, "ieskf correct");
            assert!(ieskf.dx_hat.iter().all(|v| *v == 0.0));
        }
    }
}

#[test]
fn kalman_gain_monotone_in_noise_levels() {
    // Scalar model: K decreasing in R, increasing in Q over a log sweep.
    let sweep: Vec<f64> = (0..25).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 24.0)).collect();
    let belief = Belief::new(dvector![0.0], dmatrix![1.0]).unwrap();

    let mut previous = f64::INFINITY;
    for r in &sweep {
        let m = LinearModel::new(dmatrix![1.0], dmatrix![1.0], dmatrix![1.0], dmatrix![0.5], dmatrix![*r])
            .unwrap();
        let pred = kf_predict(&belief, &m, &dvector![0.0]).unwrap();
        let (_, diag) = kf_correct(&pred, &m, &dvector![0.3]).unwrap();
        let k = diag.kalman_gain[(0, 0)];
        assert!(k < previous, "K not strictly decreasing in R at R={r}");
        previous = k;
    }

    let mut previous = f64::NEG_INFINITY;
    for q in &sweep {
        let m = LinearModel::new(dmatrix![1.0], dmatrix![1.0], dmatrix![1.0], dmatrix![*q], dmatrix![0.5])
            .unwrap();
        let pred = kf_predict(&belief, &m, &dvector![0.0]).unwrap();
        let (_, diag) = kf_correct(&pred, &m, &dvector![0.3]).unwrap();
        let k = diag.kalman_gain[(0, 0)];
        assert!(k > previous, "K not strictly increasing in Q at Q={q}");
        previous = k;
    }
}

#[test]
fn joseph_free_posterior_matches_information_form() {
    // (I − KH)P equals (P⁻¹ + HᵀR⁻¹H)⁻¹ on random well-conditioned
    // instances up to dimension 6.
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let k = rng.random_range(1..=n);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let p = &a * a.transpose() + DMatrix::identity(n, n) * n as f64 * 0.5;
        let b = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
        let r = &b * b.transpose() + DMatrix::identity(k, k) * k as f64 * 0.5;
        let h = DMatrix::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));

        let s = &h * &p * h.transpose() + &r;
        let gain = &p * h.transpose() * s.try_inverse().unwrap();
        let direct = (DMatrix::identity(n, n) - &gain * &h) * &p;
        let information =
            (p.try_inverse().unwrap() + h.transpose() * r.try_inverse().unwrap() * &h)
                .try_inverse()
                .unwrap();
        assert!(
            max_abs(&(direct - information)) < 1e-8,
            "covariance forms disagree at n={n}, k={k}"
        );
    }
}

#[test]
fn nees_has_no_wrap_artifacts_on_heading_scenario() {
    // Constant positive turn rate sweeps the heading through ±π many
    // times; with wrapped residuals the NEES series may never jump by
    // more than (2π)²/λ_min(P) between consecutive steps.
    let s = scenario(
        BuiltinModelId::HeadingRobotSe2Lite,
        &long_run_params(),
        400,
        dvector![1.0, 0.5],
        31,
    );
    let t = simulate(&s).unwrap();
    let cfg = IterationConfig::default();
    let report = run_filter(FilterKind::Eskf, &s, &t, &cfg).unwrap();
    // the heading really does wrap during this run
    let wraps = t
        .truth
        .windows(2)
        .filter(|w| (w[1][2] - w[0][2]).abs() > std::f64::consts::PI)
        .count();
    assert!(wraps > 0, "scenario never wrapped the heading");

    let m = s.model().unwrap().as_error_state().unwrap();
    let mut eskf = ErrorBelief::new(s.initial_belief.x_hat.clone(), s.initial_belief.p.clone())
        .unwrap();
    let mut min_eig = f64::INFINITY;
    for step in 0..s.horizon {
        eskf = eskf_predict(&eskf, &m, &t.controls[step]).unwrap();
        eskf = eskf_correct(&eskf, &m, &t.measurements[step]).unwrap().0;
        min_eig = min_eig.min(symmetric_eigenvalues(&eskf.p)[0]);
    }
    let bound = (std::f64::consts::TAU).powi(2) / min_eig;
    for w in report.steps.windows(2) {
        let jump = (w[1].nees - w[0].nees).abs();
        assert!(jump < bound, "NEES jump {jump} exceeds wrap bound {bound}");
    }
}

#[test]
fn iekf_beats_ekf_on_transient_localization() {
    // Precise sensor, close landmark pass, and an initial belief a full
    // unit off the truth: relinearization pays during the transient. The
    // 60% win-rate threshold was calibrated once over independent seed
    // ranges (observed 70–82%) and is frozen here.
    let params = ModelParams {
        motion_noise: Some(vec![1e-4, 1e-4, 1e-4]),
        obs_noise: Some(vec![1e-4, 1e-4]),
        landmark: [1.0, 0.3],
        ..ModelParams::default()
    };
    let cfg = IterationConfig::default();
    let mut wins = 0;
    for seed in 0..50u64 {
        let belief = Belief::new(DVector::zeros(3), DMatrix::identity(3, 3)).unwrap();
        let s = Scenario::new(
            BuiltinModelId::RangeBearing2D,
            params.clone(),
            10,
            vec![dvector![0.8, 0.4]; 10],
            seed,
            dvector![0.8, -0.6, 0.5],
            belief,
        )
        .unwrap();
        let t = simulate(&s).unwrap();
        let ekf = run_filter(FilterKind::Ekf, &s, &t, &cfg).unwrap();
        let iekf = run_filter(FilterKind::Iekf, &s, &t, &cfg).unwrap();
        if iekf.rmse_norm() <= ekf.rmse_norm() {
            wins += 1;
        }
    }
    assert!(wins >= 30, "iekf won only {wins}/50 seeds");
}

#[test]
fn filtering_beats_dead_reckoning_on_every_builtin() {
    let cfg = IterationConfig::default();
    let cases = [
        (BuiltinModelId::Linear1D, dvector![0.1], FilterKind::Kf),
        (BuiltinModelId::LinearCv2D, dvector![0.05, -0.02], FilterKind::Kf),
        (BuiltinModelId::RangeBearing2D, dvector![0.8, 0.4], FilterKind::Ekf),
        (BuiltinModelId::HeadingRobotSe2Lite, dvector![1.0, 0.5], FilterKind::Eskf),
    ];
    for (id, control, kind) in cases {
        let mut filtered = 0.0;
        let mut dead = 0.0;
        for seed in 0..20u64 {
            let s = scenario(id, &long_run_params(), 60, control.clone(), seed);
            let t = simulate(&s).unwrap();
            filtered += run_filter(kind, &s, &t, &cfg).unwrap().rmse_norm();
            dead += run_filter(FilterKind::DeadReckoning, &s, &t, &cfg).unwrap().rmse_norm();
        }
        assert!(
            filtered < dead,
            "{id}: filtered rmse {filtered} not below dead-reckoning {dead}"
        );
    }
}

#[test]
fn range_bearing_mean_nees_within_consistency_band() {
    // Chi-square 95% band for the seed-averaged mean NEES, frozen as
    // [n/2, 2n] for the 3-dimensional state (accounts for the step-to-step
    // correlation of the series; observed values sit near 2.1–2.5).
    let params = ModelParams {
        motion_noise: Some(vec![1e-4, 1e-4, 1e-4]),
        obs_noise: Some(vec![0.04, 0.09]),
        landmark: [2.0, 2.0],
        ..ModelParams::default()
    };
    let cfg = IterationConfig::default();
    let mut total = 0.0;
    for seed in 0..50u64 {
        let belief = Belief::new(DVector::zeros(3), DMatrix::identity(3, 3) * 0.5).unwrap();
        let s = Scenario::new(
            BuiltinModelId::RangeBearing2D,
            params.clone(),
            40,
            vec![dvector![0.8, 0.4]; 40],
            seed,
            DVector::zeros(3),
            belief,
        )
        .unwrap();
        let t = simulate(&s).unwrap();
        total += run_filter(FilterKind::Ekf, &s, &t, &cfg).unwrap().mean_nees;
    }
    let mean_nees = total / 50.0;
    assert!(
        (1.5..=6.0).contains(&mean_nees),
        "mean NEES {mean_nees} outside [1.5, 6.0]"
    );
}

#[test]
fn reports_identical_for_identical_inputs() {
    let s = scenario(BuiltinModelId::HeadingRobotSe2Lite, &long_run_params(), 50, dvector![1.0, 0.5], 17);
    let cfg = IterationConfig::default();
    let t1 = simulate(&s).unwrap();
    let t2 = simulate(&s).unwrap();
    assert_eq!(t1, t2);
    let a = run_filter(FilterKind::Ieskf, &s, &t1, &cfg).unwrap();
    let b = run_filter(FilterKind::Ieskf, &s, &t2, &cfg).unwrap();
    assert_eq!(a, b);
    for (ra, rb) in a.steps.iter().zip(&b.steps) {
        for (x, y) in ra.x_hat.iter().zip(rb.x_hat.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn builtin_scenarios_collapse_on_linear_model_with_kf1d() {
    // All-filter agreement across the scalar chain, including the 1D
    // specialization driven end to end through run_filter.
    let s = scenario(BuiltinModelId::Linear1D, &ModelParams::default(), 100, dvector![0.1], 3);
    let t = simulate(&s).unwrap();
    let cfg = IterationConfig::default();
    let reports: Vec<_> = [
        FilterKind::Kf,
        FilterKind::Kf1d,
        FilterKind::Ekf,
        FilterKind::Eskf,
        FilterKind::Iekf,
        FilterKind::Ieskf,
    ]
    .iter()
    .map(|k| run_filter(*k, &s, &t, &cfg).unwrap())
    .collect();
    for r in &reports[1..] {
        for (a, b) in reports[0].steps.iter().zip(&r.steps) {
            assert!(
                (a.x_hat[0] - b.x_hat[0]).abs() < 1e-10,
                "{}: mean deviates at step {}",
                r.filter,
                a.step
            );
            assert!(
                (a.p_diag[0] - b.p_diag[0]).abs() < 1e-10,
                "{}: variance deviates at step {}",
                r.filter,
                a.step
            );
        }
    }
}
