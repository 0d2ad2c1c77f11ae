use nlgauge::ensembles::tensor_product;
use nlgauge::functionals::{density, functional_r, modulus_phase, RegularizationPolicy};
use nlgauge::grid::{make_grid, ComplexField};
use nlgauge::states::random_nodeless;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field(n: usize, seed: u64) -> ComplexField {
    let g = make_grid(1, n, 2.0 * std::f64::consts::PI).unwrap();
    random_nodeless(&g, 3, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn sup(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quotients_are_additive_on_products(s1 in any::<u64>(), s2 in any::<u64>(), index in 1usize..=5, nu1 in -1.0f64..1.0) {
        let policy = RegularizationPolicy::default();
        let (phi, chi) = (field(32, s1), field(32, s2));
        let joint = functional_r(index, &tensor_product(&phi, &chi).unwrap(), nu1, &policy).unwrap().values;
        let a = functional_r(index, &phi, nu1, &policy).unwrap().values;
        let b = functional_r(index, &chi, nu1, &policy).unwrap().values;
        let n = 32;
        let scale = sup(joint.values()).max(1.0);
        for (k, v) in joint.values().iter().enumerate() {
            prop_assert!((v - a.values()[k / n] - b.values()[k % n]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn quotients_ignore_global_phase_and_scale(seed in any::<u64>(), index in 1usize..=5, theta in -10.0f64..10.0, scale in 0.1f64..10.0) {
        let policy = RegularizationPolicy::default();
        let psi = field(64, seed);
        let moved = psi.scaled(Complex64::from_polar(scale, theta));
        let a = functional_r(index, &psi, -0.5, &policy).unwrap().values;
        let b = functional_r(index, &moved, -0.5, &policy).unwrap().values;
        let tol = 1e-10 * sup(a.values()).max(1.0);
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= tol);
        }
    }

    #[test]
    fn modulus_phase_round_trips(seed in any::<u64>(), dimension in 1usize..=2) {
        let g = make_grid(dimension, 48, 2.0 * std::f64::consts::PI).unwrap();
        let psi = random_nodeless(&g, 3, &mut ChaCha8Rng::seed_from_u64(seed));
        let split = modulus_phase(&psi, &RegularizationPolicy::default());
        prop_assert!(split.reconstruct().max_distance(&psi).unwrap() < 1e-13);
        prop_assert_eq!(split.regularized, 0);
    }
}

#[test]
fn log_density_and_phase_are_additive() {
    let policy = RegularizationPolicy::default();
    let (phi, chi) = (field(32, 1), field(32, 2));
    let joint = tensor_product(&phi, &chi).unwrap();
    let (rj, ra, rb) = (density(&joint), density(&phi), density(&chi));
    let (sj, sa, sb) = (
        modulus_phase(&joint, &policy).phase,
        modulus_phase(&phi, &policy).phase,
        modulus_phase(&chi, &policy).phase,
    );
    let n = 32;
    for k in 0..n * n {
        let (i, j) = (k / n, k % n);
        assert!((rj.values()[k].ln() - ra.values()[i].ln() - rb.values()[j].ln()).abs() < 1e-12);
        // phases agree up to a whole turn
        let gap = sj.values()[k] - sa.values()[i] - sb.values()[j];
        assert!((gap - (gap / std::f64::consts::TAU).round() * std::f64::consts::TAU).abs() < 1e-12);
    }
}
