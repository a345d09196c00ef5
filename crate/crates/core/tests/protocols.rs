use qcorr::engine::{fourth_order_protocol, run, run_direct, second_order_protocol, sweep, CouplingMode, SweepResult};
use qcorr::oracle::{analytic_c_plus_minus, exact_s2_taylor, leakage_signal};
use qcorr::synthesis::{CouplingSet, SlotChoice};
use qcorr::{system, Eta, ExperimentParams, GeneralWeightProblem, OrderingSequence, SystemModel};

fn model_dt(dt: f64) -> SystemModel {
    SystemModel::build(ExperimentParams::default().with_delta_t(dt)).unwrap()
}

#[test]
fn small_window_limit_is_target_correlation() {
    let dt = 1e-6;
    let m = model_dt(dt);
    for tau in [2e-6, 13e-6, 40e-6] {
        let s = run(&second_order_protocol(&m, tau).unwrap()).unwrap();
        let c = analytic_c_plus_minus(tau, &m.params).unwrap();
        assert!((s / (dt * dt) - c).abs() < 1e-5 * c.abs().max(1.0), "{tau}");
    }
}

#[test]
fn next_order_coefficient_by_extrapolation() {
    let tau = 8e-6;
    let (c2, c4) = exact_s2_taylor(0.0, tau, &model_dt(1e-4)).unwrap();
    let est: Vec<f64> = [2e-5, 1e-5]
        .iter()
        .map(|&dt| {
            let s = run(&second_order_protocol(&model_dt(dt), tau).unwrap()).unwrap();
            (s - c2 * dt * dt) / dt.powi(4)
        })
        .collect();
    // The residual ratio is O(δt²); Richardson removes it.
    let rich = (4.0 * est[1] - est[0]) / 3.0;
    assert!((rich / c4 - 1.0).abs() < 1e-6, "{rich} vs {c4}");
}

#[test]
fn drive_during_window_shifts_the_clock() {
    let dt = 1e-7;
    let m = model_dt(dt);
    let tau = 9e-6;
    let spec = second_order_protocol(&m, tau).unwrap().with_mode(CouplingMode::CouplingPlusBathDrive);
    assert_eq!(spec.window_times(), vec![0.0, tau + dt]);
    let s = run(&spec).unwrap();
    let c = analytic_c_plus_minus(tau + dt, &m.params).unwrap();
    assert!((s / (dt * dt) / c - 1.0).abs() < 1e-3);
}

#[test]
fn term_expansion_matches_cached_matrix() {
    let m = model_dt(0.5e-3);
    for n in 1..=3 {
        let spec = fourth_order_protocol(&m, 6e-6, 10e-6, 4e-6, n, 0.04).unwrap();
        let a = run(&spec).unwrap();
        let b = run_direct(&spec).unwrap();
        assert!((a - b).abs() < 1e-15, "{n}: {a} {b}");
    }
}

#[test]
fn leakage_model_tracks_engine_at_small_window() {
    let dt = 2e-5;
    let m = model_dt(dt);
    let (t21, t32, t43) = (6e-6, 10e-6, 10e-6);
    for n in [1, 2] {
        let s = run(&fourth_order_protocol(&m, t21, t32, t43, n, 0.04).unwrap()).unwrap();
        let (main, leak) = leakage_signal(0.04, n, dt, [t21, t32, t43], &m.params).unwrap();
        // The two-term model drops pathways of relative order δθ².
        assert!(((main + leak) / s - 1.0).abs() < 0.04 * 0.04, "{n}: {s} vs {}", main + leak);
    }
}

#[test]
fn single_precision_tracks_double() {
    let p32 = system::ExperimentParams::<f32>::default();
    let m32 = system::SystemModel::<f32>::build(p32).unwrap();
    let m64 = model_dt(0.5e-3);
    for tau in [4e-6, 22e-6] {
        let a = run(&second_order_protocol(&m32, tau as f32).unwrap()).unwrap() as f64;
        let b = run(&second_order_protocol(&m64, tau).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-4 * b.abs().max(1e-3), "{a} {b}");
    }
}

#[test]
fn sweep_csv_round_trip() {
    let m = model_dt(0.5e-3);
    let grid: Vec<f64> = (0..8).map(|k| k as f64 * 2e-6).collect();
    let r = sweep(&grid, |t| second_order_protocol(&m, t)).unwrap().with_meta("delta_t", 0.5e-3);
    let back = SweepResult::from_csv(&r.to_csv()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn general_solver_four_slots_isotropic() {
    let seq: OrderingSequence = "+--+".parse().unwrap();
    let target: Vec<SlotChoice> = seq.entries().iter().map(|&e| SlotChoice::new(e, 2)).collect();
    assert_eq!(target.first().map(|c| c.eta), Some(Eta::Plus));
    let sol = GeneralWeightProblem::new(4, CouplingSet::isotropic(), target).unwrap().solve().unwrap();
    assert!((sol.target_coefficient() - 1.0).abs() < 1e-8);
    assert!(sol.max_off_target < 1e-8, "{}", sol.max_off_target);
}
