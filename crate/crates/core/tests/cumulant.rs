use macrosync_core::cumulant::{derive_equations, integrate_cumulant, Closure, GroupSize, MomentState};
use macrosync_core::linalg::expm;
use macrosync_core::model::{meanfield_rhs_matrices, two_oscillator_liouvillian};
use macrosync_core::quantum::{devectorize, ket_bra, tensor, vectorize};
use macrosync_core::{
    default_initial, integrate, Complex64, ComplexMatrix64, DensityMatrix64, Group, InitialKind,
    IntegratorConfig64, MeanFieldState, ModelParams64,
};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_state(x: &[f64]) -> DensityMatrix64 {
    // ρ = AA† / Tr(AA†)
    let a = ComplexMatrix64::from_fn(3, |i, j| c(x[3 * i + j], x[9 + 3 * i + j]));
    let m = &a * &a.adjoint();
    let tr = m.trace().re;
    DensityMatrix64::from_hermitized(&m.scale_real(1.0 / tr)).unwrap()
}

fn params(v: f64) -> ModelParams64 {
    ModelParams64 { gamma_plus: 0.5, gamma_minus: 1.0, v, k: 0.4, ..Default::default() }
}

proptest! {
    #[test]
    fn factorized_infinite_group_reproduces_meanfield(
        x in prop::collection::vec(-1.0f64..1.0, 18),
        v in 0.0f64..3.0,
        k in -2.0f64..2.0,
    ) {
        let rho = random_state(&x);
        let p = ModelParams64 { k, ..params(v) };
        let sys = derive_equations(&p, GroupSize::Infinite).unwrap();
        let d = sys.rhs(&MomentState::product(&rho).unwrap(), Closure::Factorized);
        let (drho, _) = meanfield_rhs_matrices(&p, rho.matrix(), rho.matrix()).unwrap();
        for (slot, &label) in macrosync_core::cumulant::INDEPENDENT.iter().enumerate() {
            let (a, b) = (label / 3, label % 3);
            prop_assert!((d.first[slot] - drho[(b, a)]).norm() < 1e-12);
        }
    }

    #[test]
    fn moment_rates_respect_hermiticity(
        x in prop::collection::vec(-1.0f64..1.0, 18),
        v in 0.0f64..3.0,
        n in 2usize..200,
    ) {
        let sys = derive_equations(&params(v), GroupSize::Finite(n)).unwrap();
        let st = MomentState::product(&random_state(&x)).unwrap();
        let d = sys.rhs(&st, Closure::SecondOrder);
        let mut full = [c(0.0, 0.0); 9];
        for (slot, &label) in macrosync_core::cumulant::INDEPENDENT.iter().enumerate() {
            full[label] = d.first[slot];
        }
        full[4] = -full[0] - full[8];
        for a in 0..3 {
            for b in 0..3 {
                prop_assert!((full[3 * a + b] - full[3 * b + a].conj()).norm() < 1e-12);
            }
            prop_assert!(full[4 * a].im.abs() < 1e-12);
        }
    }
}

#[test]
fn two_sites_match_exact_master_equation() {
    let v = 1.3;
    let p = params(v);
    let rho0 = default_initial::<f64>(InitialKind::PerturbedComplex);

    // exact: two sites, exchange strength V/N with N = 2
    let pair = ModelParams64 { v: 0.0, v_ab: v / 2.0, ..p };
    let l = two_oscillator_liouvillian(&pair).unwrap();
    let r0 = vectorize(&tensor(rho0.matrix(), rho0.matrix()));
    let id = ComplexMatrix64::identity(3);

    let sys = derive_equations(&p, GroupSize::Finite(2)).unwrap();
    let cfg = IntegratorConfig64 { rel_tol: 1e-10, abs_tol: 1e-12, ..IntegratorConfig64::new(5.0, 6) };
    let traj = integrate_cumulant(&sys, &MomentState::product(&rho0).unwrap(), &cfg, Closure::SecondOrder).unwrap();

    for (k, &t) in traj.times.iter().enumerate() {
        let prop = expm(&l.matrix().scale_real(t));
        let rho_t = devectorize(&prop.mul_vec(&r0).unwrap()).unwrap();
        let splus = tensor(&macrosync_core::quantum::spin1_operators::<f64>().splus, &id);
        let exact = rho_t.trace_product(&splus).unwrap();
        assert!((traj.amplitude[k] - exact).norm() < 1e-6, "t = {t}: {} vs {exact}", traj.amplitude[k]);
    }
    // pair moments at the final time
    let t = *traj.times.last().unwrap();
    let rho_t = devectorize(&expm(&l.matrix().scale_real(t)).mul_vec(&r0).unwrap()).unwrap();
    let m2 = traj.final_state.second_full();
    for la in 0..9 {
        for lb in 0..9 {
            let op = tensor(&ket_bra::<f64>(la / 3, la % 3), &ket_bra::<f64>(lb / 3, lb % 3));
            let exact = rho_t.trace_product(&op).unwrap();
            assert!((m2[la][lb] - exact).norm() < 1e-6);
        }
    }
}

#[test]
fn large_group_approaches_meanfield() {
    let p = ModelParams64 { v: 1.5, ..params(0.0) };
    let rho0 = default_initial::<f64>(InitialKind::PerturbedComplex);
    let cfg = IntegratorConfig64::new(30.0, 301);
    let mf = integrate(&p, &MeanFieldState::new(rho0.clone(), rho0.clone()).unwrap(), &cfg).unwrap();
    let sys = derive_equations(&p, GroupSize::Finite(1_000_000)).unwrap();
    let cu = integrate_cumulant(&sys, &MomentState::product(&rho0).unwrap(), &cfg, Closure::SecondOrder).unwrap();
    let worst = mf
        .amplitudes(Group::A)
        .iter()
        .zip(cu.amplitude.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "max deviation {worst}");
    assert!(cu.max_hermiticity_error < 1e-8);
}

#[test]
fn factorized_closure_tracks_meanfield_trajectory() {
    let p = ModelParams64 { v: 1.0, ..params(0.0) };
    let rho0 = default_initial::<f64>(InitialKind::Perturbed);
    let cfg = IntegratorConfig64::new(50.0, 501);
    let mf = integrate(&p, &MeanFieldState::new(rho0.clone(), rho0.clone()).unwrap(), &cfg).unwrap();
    let sys = derive_equations(&p, GroupSize::Infinite).unwrap();
    let cu = integrate_cumulant(&sys, &MomentState::product(&rho0).unwrap(), &cfg, Closure::Factorized).unwrap();
    for (a, b) in mf.amplitudes(Group::A).iter().zip(cu.amplitude.iter()) {
        assert!((a - b).norm() < 1e-6);
    }
}

fn lifetime_for(v: f64, n: usize) -> (Vec<f64>, Option<f64>) {
    let p = ModelParams64 { v, ..params(0.0) };
    let rho0 = default_initial::<f64>(InitialKind::Perturbed);
    let sys = derive_equations(&p, GroupSize::Finite(n)).unwrap();
    let cfg = IntegratorConfig64::new(100.0, 1001);
    let tr = integrate_cumulant(&sys, &MomentState::product(&rho0).unwrap(), &cfg, Closure::SecondOrder).unwrap();
    let amp = tr.abs_amplitude();
    let t = macrosync_core::cumulant::lifetime(&tr.times, &amp).unwrap();
    (amp, t)
}

#[test]
fn uncoupled_lifetime_is_independent_of_group_size() {
    // |⟨S⁺⟩| = √2|ρ₁₂| decays at γ₋/2 without coupling
    for n in [2, 100, 5000] {
        let (_, t) = lifetime_for(0.0, n);
        assert!((t.unwrap() - 2.0).abs() < 1e-3);
    }
}

#[test]
fn small_groups_lose_coherence_sooner() {
    let (small, _) = lifetime_for(1.0, 100);
    let (large, _) = lifetime_for(1.0, 2000);
    let area = |a: &[f64]| a.iter().sum::<f64>();
    assert!(area(&small) < area(&large));
    assert!(large[300] > small[300]);
}
