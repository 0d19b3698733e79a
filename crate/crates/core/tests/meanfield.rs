use macrosync_core::model::meanfield_rhs;
use macrosync_core::{
    critical_coupling, default_initial, integrate, order_parameter, spectral_abscissa, Complex64,
    ComplexMatrix64, DensityMatrix64, Group, InitialKind, IntegratorConfig64, MeanFieldState,
    ModelParams64,
};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn state_from(x: &[f64]) -> DensityMatrix64 {
    let a = ComplexMatrix64::from_fn(3, |i, j| c(x[3 * i + j], x[9 + 3 * i + j]));
    let m = &a * &a.adjoint();
    let tr = m.trace().re;
    DensityMatrix64::from_hermitized(&m.scale_real(1.0 / tr)).unwrap()
}

fn params_strategy() -> impl Strategy<Value = ModelParams64> {
    (-5.0f64..5.0, -5.0f64..5.0, 0.0f64..5.0, 0.0f64..5.0, 0.0f64..3.0, 0.05f64..3.0).prop_map(
        |(delta, k, v, v_ab, gamma_plus, gamma_minus)| ModelParams64 {
            delta,
            k,
            v,
            v_ab,
            gamma_plus,
            gamma_minus,
            omega: 0.0,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn unsynchronized_state_is_stationary(p in params_strategy()) {
        let (da, db) = meanfield_rhs(&p, &MeanFieldState::fixed_point());
        prop_assert!(da.max_abs() < 1e-12 && db.max_abs() < 1e-12);
    }

    #[test]
    fn rhs_is_traceless_and_hermitian(
        p in params_strategy(),
        xa in prop::collection::vec(-1.0f64..1.0, 18),
        xb in prop::collection::vec(-1.0f64..1.0, 18),
    ) {
        let s = MeanFieldState::new(state_from(&xa), state_from(&xb)).unwrap();
        let (da, db) = meanfield_rhs(&p, &s);
        for d in [da, db] {
            prop_assert!(d.trace().norm() < 1e-12);
            prop_assert!(d.hermiticity_error() < 1e-12);
        }
    }
}

fn short_cfg() -> IntegratorConfig64 {
    IntegratorConfig64 { rel_tol: 1e-10, abs_tol: 1e-10, ..IntegratorConfig64::new(40.0, 401) }
}

#[test]
fn swapping_groups_with_opposite_detuning_swaps_trajectories() {
    let p = ModelParams64 { delta: 0.8, k: -0.4, v: 1.0, v_ab: 0.6, gamma_plus: 0.5, ..Default::default() };
    let ra = default_initial::<f64>(InitialKind::PerturbedComplex);
    let rb = default_initial::<f64>(InitialKind::Perturbed);
    let fwd = integrate(&p, &MeanFieldState::new(ra.clone(), rb.clone()).unwrap(), &short_cfg()).unwrap();
    let mirrored = ModelParams64 { delta: -p.delta, ..p };
    let back = integrate(&mirrored, &MeanFieldState::new(rb, ra).unwrap(), &short_cfg()).unwrap();
    for (x, y) in fwd.amps_a.iter().zip(&back.amps_b).chain(fwd.amps_b.iter().zip(&back.amps_a)) {
        assert!((x - y).norm() < 1e-7);
    }
}

#[test]
fn conjugating_states_and_hamiltonian_conjugates_amplitudes() {
    let p = ModelParams64 { delta: 0.8, k: -0.4, v: 1.0, v_ab: 0.6, gamma_plus: 0.5, ..Default::default() };
    let ra = default_initial::<f64>(InitialKind::PerturbedComplex);
    let rb = default_initial::<f64>(InitialKind::Perturbed);
    let fwd = integrate(&p, &MeanFieldState::new(ra.clone(), rb.clone()).unwrap(), &short_cfg()).unwrap();
    let conj = |r: &DensityMatrix64| DensityMatrix64::from_hermitized(&r.matrix().conj()).unwrap();
    // ρ → ρ* solves the master equation with H → −H*
    let flipped = ModelParams64 { delta: -p.delta, k: -p.k, v: -p.v, v_ab: -p.v_ab, ..p };
    let back = integrate(&flipped, &MeanFieldState::new(conj(&ra), conj(&rb)).unwrap(), &short_cfg()).unwrap();
    for (x, y) in fwd.amps_a.iter().zip(&back.amps_a).chain(fwd.amps_b.iter().zip(&back.amps_b)) {
        assert!((x - y.conj()).norm() < 1e-7);
    }
}

#[test]
fn integration_keeps_states_physical() {
    let p = ModelParams64 { delta: 0.5, v: 1.0, v_ab: 0.5, gamma_plus: 0.5, ..Default::default() };
    let init = MeanFieldState::new(
        default_initial(InitialKind::Perturbed),
        default_initial(InitialKind::Uniform),
    )
    .unwrap();
    let traj = integrate(&p, &init, &IntegratorConfig64::new(200.0, 2001)).unwrap();
    let d = traj.diagnostics;
    assert!(d.max_trace_error <= 1e-8);
    assert!(d.max_hermiticity_error <= 1e-8);
    assert!(d.min_eigenvalue >= -1e-6);
}

#[test]
fn stability_and_integration_agree_across_threshold() {
    let base = ModelParams64 { gamma_plus: 0.5, ..Default::default() };
    let vc = critical_coupling(&base, 30.0).unwrap().unwrap();
    let init = MeanFieldState::new(
        default_initial(InitialKind::Perturbed),
        default_initial(InitialKind::Perturbed),
    )
    .unwrap();
    for v in [0.8 * vc, 1.25 * vc] {
        let p = ModelParams64 { v, ..base };
        let unstable = spectral_abscissa(&p).unwrap().unstable;
        let traj = integrate(&p, &init, &IntegratorConfig64::new(1500.0, 1500)).unwrap();
        let op = order_parameter(&traj, Group::A, 0.5).unwrap();
        assert_eq!(unstable, op > 1e-3, "V = {v}: order parameter {op}");
    }
}
