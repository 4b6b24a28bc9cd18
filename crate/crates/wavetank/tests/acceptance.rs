//! Acceptance suite. Each test covers one criterion at its stated tolerance
//! and prints a PASS line with the observed margin (visible with
//! `cargo test --test acceptance -- --nocapture`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavetank::analytic::GaussianState;
use wavetank::fit::{fit_trajectory, UnwrapPolicy};
use wavetank::model::{derive_frequencies, DimensionlessFrame, PhysicalParams};
use wavetank::phase::wrap;
use wavetank::scenario::{self, Scenario};
use wavetank::solver::{init_gaussian, propagate, GridSpec, SolverConfig};

fn tank_params(omega_detuning: f64, eps: f64, force: f64) -> PhysicalParams {
    PhysicalParams::new(20.0, 9.81, eps / 20.0, 0.8, omega_detuning, eps, force).unwrap()
}

fn tank_frame(omega_detuning: f64, eps: f64, force: f64) -> DimensionlessFrame {
    DimensionlessFrame::new(tank_params(omega_detuning, eps, force))
}

#[test]
fn criterion_1_group_velocity_from_dispersion() {
    let (_, c_g) = derive_frequencies(20.0, 9.81).unwrap();
    let rel = (c_g - 0.35).abs() / 0.35;
    assert!(rel < 5e-3, "c_g = {c_g}, relative deviation {rel}");
    println!(
        "[acceptance] criterion 1 PASS: c_g = {c_g:.6} m/s vs 0.35 m/s ({:.2e} relative)",
        rel
    );
}

#[test]
fn criterion_2_fit_coefficient_inversion() {
    let cases = [(2.44, 2.0, 0.351), (2.86, 0.0, 0.350), (3.23, -2.0, 0.354)];
    let mut worst_cg = 0.0f64;
    for &(a1, omega, expected_cg) in &cases {
        let params = tank_params(omega, 0.06, 0.0);
        // noise-free quadratic synthesized from the published coefficients
        let points: Vec<(f64, f64)> = (1..=10)
            .map(|i| {
                let x = 0.5 * i as f64;
                (x, a1 * x + 0.15 * x * x)
            })
            .collect();
        let fit = fit_trajectory(&points, &params).unwrap();
        let rel_cg = (fit.c_g_recovered - expected_cg).abs() / expected_cg;
        assert!(rel_cg < 5e-3, "a1 = {a1}: c_g = {} vs {expected_cg}", fit.c_g_recovered);
        worst_cg = worst_cg.max(rel_cg);

        let rel_f = (fit.f_recovered - (-24.4)).abs() / 24.4;
        assert!(rel_f < 1.5e-2, "a2 = 0.15: F = {}", fit.f_recovered);
    }
    println!(
        "[acceptance] criterion 2 PASS: c_g inversion within {worst_cg:.2e}, F(a2 = 0.15) within 1.5% of -24.4"
    );
}

/// The nine (p0, F) solver runs shared by criteria 3 and 4.
fn solver_oracle_runs() -> Vec<(f64, f64, f64, f64, f64)> {
    let frame = tank_frame(0.0, 0.06, 0.0);
    let xi_target = 2.0 * frame.xi_s();
    let config = SolverConfig::for_frame(&frame);
    let mut results = Vec::new();
    for &p0 in &[0.0, 2.38, -2.38] {
        for &force in &[0.0, -3.86, -24.4] {
            let grid = GridSpec::auto(&frame, p0, force, xi_target);
            let field = init_gaussian(&frame, p0, &grid).unwrap();
            let norm_in = field.norm();
            let out = propagate(&field, force, xi_target, &config).unwrap();
            let state = GaussianState::new(frame, p0, force);

            let mut env_err = 0.0f64;
            for (i, v) in out.values().iter().enumerate() {
                env_err =
                    env_err.max((v.norm() - state.envelope_magnitude(out.tau(i), xi_target)).abs());
            }
            let peak = out.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
            let pk = out
                .values()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap()
                .0;
            let reference = (out.values()[pk] * state.field(out.tau(pk), xi_target).conj()).arg();
            let mut phase_err = 0.0f64;
            for (i, v) in out.values().iter().enumerate() {
                let exact = state.field(out.tau(i), xi_target);
                if exact.norm() < 1e-3 * peak {
                    continue;
                }
                phase_err = phase_err.max(((v * exact.conj()).arg() - reference).abs());
            }
            let drift = (out.norm() / norm_in - 1.0).abs();
            results.push((p0, force, env_err, phase_err, drift));
        }
    }
    results
}

#[test]
fn criterion_3_solver_matches_closed_form() {
    let runs = solver_oracle_runs();
    let mut worst_env = 0.0f64;
    let mut worst_phase = 0.0f64;
    for &(p0, force, env_err, phase_err, _) in &runs {
        assert!(env_err < 1e-6, "p0 = {p0}, F = {force}: envelope error {env_err}");
        assert!(phase_err < 1e-4, "p0 = {p0}, F = {force}: phase error {phase_err}");
        worst_env = worst_env.max(env_err);
        worst_phase = worst_phase.max(phase_err);
    }
    println!(
        "[acceptance] criterion 3 PASS: 9 runs, max envelope error {worst_env:.2e} (< 1e-6), max peak-referenced phase error {worst_phase:.2e} rad (< 1e-4)"
    );
}

#[test]
fn criterion_4_norm_conservation() {
    let runs = solver_oracle_runs();
    let mut worst = 0.0f64;
    for &(p0, force, _, _, drift) in &runs {
        assert!(drift < 1e-10, "p0 = {p0}, F = {force}: norm drift {drift}");
        worst = worst.max(drift);
    }
    println!("[acceptance] criterion 4 PASS: max relative norm drift {worst:.2e} (< 1e-10)");
}

#[test]
fn criterion_5_algebraic_identity_suite() {
    // tank-regime tuples: strong force over short propagation and weak
    // force over the full tank length
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97);
    let omega0 = (20.0f64 * 9.81).sqrt();
    let mut worst_id = 0.0f64;
    let mut worst_amp = 0.0f64;
    let mut worst_ph = 0.0f64;
    for i in 0..10_000 {
        let tau0: f64 = rng.random_range(0.4..1.6);
        let p0: f64 = rng.random_range(-2.5..2.5);
        let (force, xi): (f64, f64) = if i % 2 == 0 {
            (rng.random_range(-25.0..25.0), rng.random_range(0.0..0.4))
        } else {
            (rng.random_range(-4.0..4.0), rng.random_range(0.0..1.5))
        };
        let eps = 0.1;
        let t0 = tau0 / (eps * omega0);
        let params = PhysicalParams::new(20.0, 9.81, eps / 20.0, t0, 0.0, eps, force).unwrap();
        let frame = DimensionlessFrame::new(params);
        let state = GaussianState::new(frame, p0, force);
        let rest = GaussianState::new(frame, 0.0, force);

        // phase at the moving maximum equals the reduced expression
        let id = (state.envelope_phase(state.tau_at_maximum(xi), xi)
            - state.phase_at_maximum(xi))
        .abs();
        assert!(id < 1e-12, "identity residual {id} at tau0={tau0} p0={p0} F={force} xi={xi}");
        worst_id = worst_id.max(id);

        // boost identities relating the packet to its rest counterpart
        let tau = state.tau_at_maximum(xi) + rng.random_range(-4.0..4.0) * tau0;
        let amp = state.galilean_amplitude_residual(&rest, tau, xi).unwrap().abs();
        let ph = state.galilean_phase_residual(&rest, tau, xi).unwrap().abs();
        assert!(amp < 1e-12, "amplitude shift residual {amp}");
        assert!(ph < 1e-12, "phase shift residual {ph}");
        worst_amp = worst_amp.max(amp);
        worst_ph = worst_ph.max(ph);
    }
    println!(
        "[acceptance] criterion 5 PASS: 10^4 tuples, worst residuals: reduction {worst_id:.2e}, amplitude shift {worst_amp:.2e}, phase shift {worst_ph:.2e} (all < 1e-12)"
    );
}

#[test]
fn criterion_6_full_pipeline_closure() {
    let mut worst_cg = 0.0f64;
    let mut worst_f = 0.0f64;
    for name in ["fig1a", "fig1b", "fig1c"] {
        let scenario = Scenario::load(name).unwrap();
        let run = scenario::execute(&scenario, false).unwrap();
        let case = &run.cases[0];
        for branch in &case.branches {
            let fit = branch.fit.as_ref().expect("10 gauges fit");
            let params = scenario
                .params_for(case.omega_detuning, branch.force)
                .unwrap();
            let rel_cg =
                (fit.c_g_recovered - params.group_velocity()).abs() / params.group_velocity();
            assert!(rel_cg < 1e-2, "{name} F={}: c_g off by {rel_cg}", branch.force);
            worst_cg = worst_cg.max(rel_cg);
            if branch.with_flow {
                let rel_f = (fit.f_recovered - (-24.4)).abs() / 24.4;
                assert!(rel_f < 2e-2, "{name}: F recovered {}", fit.f_recovered);
                worst_f = worst_f.max(rel_f);
            }
        }
    }
    println!(
        "[acceptance] criterion 6 PASS: three trajectory scenarios, c_g recovered within {worst_cg:.2e} (< 1%), F within {worst_f:.2e} (< 2%)"
    );
}

#[test]
fn criterion_7_phase_difference_curves() {
    let scenario = Scenario::load("fig2").unwrap();
    let run = scenario::execute(&scenario, false).unwrap();
    assert_eq!(run.cases.len(), 3);

    let mut worst_dev = 0.0f64;
    for case in &run.cases {
        let curve = case.phase_curve.as_ref().expect("both branches present");
        assert!(curve.unwrap_reliable, "gauge spacing too coarse for unwrapping");
        assert!(
            curve.max_deviation < 5e-2,
            "omega = {}: deviation {}",
            case.omega_detuning,
            curve.max_deviation
        );
        worst_dev = worst_dev.max(curve.max_deviation);
    }

    // free-propagation phase depends only on |p0|: the detuned curves match
    let curve_of = |omega: f64| {
        run.cases
            .iter()
            .find(|c| c.omega_detuning == omega)
            .and_then(|c| c.phase_curve.as_ref())
            .map(|c| c.phi_without_flow.clone())
            .unwrap()
    };
    let plus = curve_of(4.0);
    let minus = curve_of(-4.0);
    let coincidence = plus
        .iter()
        .zip(&minus)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(coincidence < 1e-3, "free curves differ by {coincidence}");

    println!(
        "[acceptance] criterion 7 PASS: max |difference - model| {worst_dev:.2e} rad (< 5e-2); free curves for +/-4 rad/s coincide within {coincidence:.2e} rad (< 1e-3)"
    );
}

#[test]
fn criterion_8_second_order_convergence() {
    let frame = tank_frame(0.0, 0.06, 0.0);
    let (p0, force) = (2.38, -24.4);
    let xi_target = 2.0 * frame.xi_s();
    let grid = GridSpec::auto(&frame, p0, force, xi_target);
    let field = init_gaussian(&frame, p0, &grid).unwrap();
    let state = GaussianState::new(frame, p0, force);

    let divisors = [500.0, 1000.0, 2000.0, 4000.0];
    let mut log_d = Vec::new();
    let mut log_e = Vec::new();
    for &div in &divisors {
        let config = SolverConfig {
            d_xi: frame.xi_s() / div,
            ..SolverConfig::for_frame(&frame)
        };
        let out = propagate(&field, force, xi_target, &config).unwrap();
        let err = out
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - state.field(out.tau(i), xi_target)).norm())
            .fold(0.0, f64::max);
        log_d.push((frame.xi_s() / div).ln());
        log_e.push(err.ln());
    }
    // least-squares slope of ln(error) against ln(d_xi)
    let n = log_d.len() as f64;
    let sx: f64 = log_d.iter().sum();
    let sy: f64 = log_e.iter().sum();
    let sxx: f64 = log_d.iter().map(|x| x * x).sum();
    let sxy: f64 = log_d.iter().zip(&log_e).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!((slope - 2.0).abs() <= 0.1, "convergence slope {slope}");
    println!("[acceptance] criterion 8 PASS: log-log error slope {slope:.3} (2.0 +/- 0.1)");
}

#[test]
fn criterion_9_deterministic_outputs() {
    let mut compared = 0usize;
    for name in ["fig1a", "fig1b", "fig1c", "fig2"] {
        let scenario = Scenario::load(name).unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let out_a = scenario::run_scenario(&scenario, dir_a.path()).unwrap();
        let out_b = scenario::run_scenario(&scenario, dir_b.path()).unwrap();
        assert_eq!(out_a.files.len(), out_b.files.len(), "{name}");
        for (a, b) in out_a.files.iter().zip(&out_b.files) {
            assert_eq!(a.file_name(), b.file_name(), "{name}");
            let bytes_a = std::fs::read(a).unwrap();
            let bytes_b = std::fs::read(b).unwrap();
            assert_eq!(bytes_a, bytes_b, "{name}: {a:?} differs between runs");
            compared += 1;
        }
    }
    println!(
        "[acceptance] criterion 9 PASS: {compared} output files byte-identical across repeated runs"
    );
}

/// Cross-checks from the mode-comparison contract (not a numbered
/// criterion, but pins the thresholds the comparison table promises).
#[test]
fn compare_modes_thresholds() {
    let text = "\
# reduced scenario for mode comparison
k0 = 20.0
a0 = 0.006
t0 = 0.8
epsilon = 0.12
omega_detuning = 4.0
force_F = -3.86
gauge_positions = 1.0,2.0,3.0,4.0,5.0
mode = full-pipeline
";
    let scenario = Scenario::parse("compare-test", text).unwrap();
    let report = scenario::compare_modes(&scenario).unwrap();
    assert_eq!(report.rows.len(), 10);
    for row in &report.rows {
        assert!(row.envelope_numeric_vs_analytic < 1e-6, "{row:?}");
        assert!(row.phase_pipeline_vs_analytic < 1e-2, "{row:?}");
        assert!(row.t_mean_numeric_vs_pipeline < row.sample_period, "{row:?}");
    }
    let wrapped_ok = report
        .rows
        .iter()
        .all(|r| wrap(r.phase_numeric_vs_pipeline).abs() < 1e-2);
    assert!(wrapped_ok);
}

/// Momentum recovery from the free-propagation phase slope, run through the
/// measurement pipeline end to end.
#[test]
fn momentum_recovery_through_pipeline() {
    let frame = tank_frame(4.0, 0.12, 0.0);
    let p0 = frame.params().effective_momentum();
    let positions: Vec<f64> = (0..=40).map(|i| 0.125 * i as f64).collect();
    let mut points = Vec::new();
    for &x in &positions {
        let (_, stats) = wavetank::gauge::measure_gauge(&frame, p0, 0.0, x).unwrap();
        points.push((x, stats.phase_at_peak));
    }
    let fit =
        wavetank::fit::recover_momentum_phase(&points, &frame, UnwrapPolicy::ChainUnwrap).unwrap();
    let expected = p0 * p0;
    assert!(
        (fit.p0_squared - expected).abs() < 1e-2,
        "p0^2 = {} vs {expected}",
        fit.p0_squared
    );
    assert!((fit.p0_squared - 5.66).abs() < 1e-2);
}
