use std::f64::consts::PI;

use nlgauge::dynamics::{
    continuity_check, evolve, evolve_linear_exact, Coefficients, Potential, SimulationConfig,
};
use nlgauge::ensembles::{
    canonical_pair, density_matrix, equivalent_decompositions, mixed_divergence, MixedState,
};
use nlgauge::grid::{make_grid, RealField};
use nlgauge::states::{free_gaussian, gaussian, periodic_gaussian, phase_modulated};
use nlgauge::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn well_posed() -> impl Strategy<Value = Coefficients> {
    prop::array::uniform10(-0.5f64..0.5)
        .prop_map(Coefficients::from_array)
        .prop_filter("well posed", |c| c.nu1.abs() >= 0.1 && c.is_well_posed())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn norm_is_conserved_across_the_family(c in well_posed()) {
        let g = make_grid(1, 64, 2.0 * PI).unwrap();
        let psi0 = phase_modulated(&periodic_gaussian(&g, PI, 1.0, 0.0).unwrap(), 0.4, 1);
        let v = Potential(RealField::from_fn(g, |x, _| x.cos()));
        let bound = SimulationConfig::stability_bound(&g, &c);
        let dt = 0.2 / (0.2 / bound).ceil();
        let traj = evolve(&c, &v, &psi0, &SimulationConfig::new(dt, 0.2, 10)).unwrap();
        prop_assert!(traj.max_norm_drift() <= 1e-8 * 0.2, "drift {:e}", traj.max_norm_drift());
    }

    #[test]
    fn global_phase_commutes_with_evolution(theta in -PI..PI) {
        let g = make_grid(1, 64, 2.0 * PI).unwrap();
        let psi0 = periodic_gaussian(&g, PI, 1.0, 0.0).unwrap();
        let c = Coefficients { nu2: 0.05, mu1: 0.1, mu3: 0.05, mu5: -0.05, alpha1: 0.2, ..Coefficients::free() };
        let cfg = SimulationConfig::new(1e-3, 0.1, 100);
        let v = Potential::zero(g);
        let phase = Complex64::from_polar(1.0, theta);
        let a = evolve(&c, &v, &psi0, &cfg).unwrap().last().psi.scaled(phase);
        let b = evolve(&c, &v, &psi0.scaled(phase), &cfg).unwrap().last().psi.clone();
        prop_assert!(a.max_distance(&b).unwrap() < 1e-12);
    }
}

#[test]
fn free_gaussian_oracle() {
    let g = make_grid(1, 256, 40.0).unwrap();
    let psi0 = gaussian(&g, 20.0, 1.0, 0.8).unwrap();
    let traj = evolve(&Coefficients::free(), &Potential::zero(g), &psi0, &SimulationConfig::new(1e-3, 0.5, 100)).unwrap();
    for frame in &traj.frames {
        let exact = free_gaussian(&g, -0.5, 20.0, 1.0, 0.8, frame.t);
        assert!(frame.psi.max_distance(&exact).unwrap() < 1e-8, "t = {}", frame.t);
    }
}

#[test]
fn rk4_agrees_with_split_step_on_linear_problem() {
    let g = make_grid(1, 64, 2.0 * PI).unwrap();
    let psi0 = periodic_gaussian(&g, PI, 0.8, 1.0).unwrap();
    let v = Potential(RealField::from_fn(g, |x, _| 0.5 * (2.0 * x).cos()));
    let c = Coefficients::linear(-0.5, 1.0);
    let mut gaps = Vec::new();
    for dt in [2e-3, 1e-3] {
        let cfg = SimulationConfig::new(dt, 0.5, 1);
        let a = evolve(&c, &v, &psi0, &cfg).unwrap();
        let b = evolve_linear_exact(-0.5, 1.0, &v, &psi0, &cfg).unwrap();
        gaps.push(a.last().psi.l2_distance(&b.last().psi).unwrap());
    }
    // the splitting error is second order and dominates
    let order = (gaps[0] / gaps[1]).log2();
    assert!(gaps[1] < 1e-5 && (1.8..2.2).contains(&order), "{gaps:?}");
}

#[test]
fn continuity_residual_is_second_order() {
    let g = make_grid(1, 32, 2.0 * PI).unwrap();
    let psi0 = phase_modulated(&periodic_gaussian(&g, PI, 1.2, 0.0).unwrap(), 0.5, 1);
    let c = Coefficients { nu2: 0.1, ..Coefficients::free() };
    let cfg = SimulationConfig::new(0.01, 0.1, 1);
    let r: Vec<f64> = [0.01, 0.005]
        .iter()
        .map(|&dt| continuity_check(&c, &Potential::zero(g), &psi0, dt, 0.1, &cfg.policy).unwrap().residual)
        .collect();
    assert!(((r[0] / r[1]).log2() - 2.0).abs() < 0.2, "{r:?}");
}

#[test]
fn density_matrix_ignores_component_phases() {
    let g = make_grid(1, 64, 10.0).unwrap();
    let (a, b) = canonical_pair(&g).unwrap();
    let plain = MixedState::new(vec![(0.3, a.clone()), (0.7, b.clone())]).unwrap();
    let rotated = MixedState::new(vec![
        (0.3, a.scaled(Complex64::from_polar(1.0, 1.1))),
        (0.7, b.scaled(Complex64::from_polar(1.0, -2.3))),
    ])
    .unwrap();
    let (w1, w2) = (density_matrix(&plain).unwrap(), density_matrix(&rotated).unwrap());
    assert!(w1.hilbert_schmidt_distance(&w2).unwrap() < 1e-14);
    assert!((w1.trace() - 1.0).abs() < 1e-12);
    assert!((w1.purity() - (0.09 + 0.49)).abs() < 1e-12);
}

#[test]
fn linear_evolution_preserves_decomposition_equivalence() {
    let g = make_grid(1, 128, 20.0).unwrap();
    let (p1, p2) = canonical_pair(&g).unwrap();
    for angle in [0.3, PI / 4.0, 1.2] {
        let (a, b) = equivalent_decompositions(&p1, &p2, angle).unwrap();
        let d = mixed_divergence(&Coefficients::free(), &Potential::zero(g), &a, &b, &SimulationConfig::new(2e-3, 0.2, 20), false)
            .unwrap();
        assert!(d.max() < 1e-12, "angle {angle}: {}", d.max());
    }
}

#[test]
fn mismatched_ensembles_are_rejected() {
    let g = make_grid(1, 64, 10.0).unwrap();
    let (p1, p2) = canonical_pair(&g).unwrap();
    let a = MixedState::new(vec![(0.5, p1.clone()), (0.5, p2.clone())]).unwrap();
    let b = MixedState::new(vec![(0.2, p1), (0.8, p2)]).unwrap();
    let err = mixed_divergence(&Coefficients::free(), &Potential::zero(g), &a, &b, &SimulationConfig::new(1e-3, 0.01, 1), false)
        .unwrap_err();
    assert!(matches!(err, Error::Invariant(_)));
}
