//! The transported coefficients are checked against the chain rule: for any
//! state `ψ`, `d/dε N[ψ + ε·F_c(ψ)]` at `ε = 0` must equal `F_c'(N[ψ])`,
//! where `F_c` is the right-hand side with coefficients `c`.

use nlgauge::dynamics::{rhs, Coefficients, Potential};
use nlgauge::equivalence::{
    in_linearizable_closure, linearizing_gauge, push_forward_family, push_forward_linear,
};
use nlgauge::functionals::RegularizationPolicy;
use nlgauge::gauge::{apply_gauge, compose, invert, GaugeTransform};
use nlgauge::grid::{make_grid, ComplexField, RealField};
use nlgauge::states::random_nodeless;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn coefficients() -> impl Strategy<Value = Coefficients> {
    (prop::array::uniform10(-0.5f64..0.5), 0.1f64..1.0, any::<bool>()).prop_map(|(mut a, m, neg)| {
        a[0] = if neg { -m } else { m };
        Coefficients::from_array(a)
    })
}

fn scaling() -> impl Strategy<Value = GaugeTransform> {
    (-2.0f64..2.0, 0.3f64..3.0, any::<bool>())
        .prop_map(|(g, l, neg)| GaugeTransform::scaling(g, if neg { -l } else { l }).unwrap())
}

/// Random nodeless state rescaled so that `ψ = 1` at the reference point,
/// which puts the transformed phase there on the principal branch.
fn state(seed: u64) -> ComplexField {
    let g = make_grid(1, 64, 2.0 * std::f64::consts::PI).unwrap();
    let psi = random_nodeless(&g, 2, &mut ChaCha8Rng::seed_from_u64(seed));
    let pin = psi.values()[0];
    psi.scaled(1.0 / pin)
}

fn chain_rule_gap(g: &GaugeTransform, c: &Coefficients, psi: &ComplexField) -> (f64, f64) {
    let policy = RegularizationPolicy::default();
    let grid = *psi.grid();
    let v = Potential(RealField::from_fn(grid, |x, _| x.cos()));
    let pushed = push_forward_family(g, c).unwrap();
    let velocity = rhs(c, &v, psi, &policy).unwrap().value;
    let h = 1e-5;
    let shifted = |s: f64| {
        let values = psi.values().iter().zip(velocity.values()).map(|(p, d)| p + d * s).collect();
        apply_gauge(g, &ComplexField::new(grid, values).unwrap(), &policy).unwrap().field
    };
    let (plus, minus) = (shifted(h), shifted(-h));
    let fd: Vec<Complex64> =
        plus.values().iter().zip(minus.values()).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let image = apply_gauge(g, psi, &policy).unwrap().field;
    let expected = rhs(&pushed, &v, &image, &policy).unwrap().value;
    let gap = fd.iter().zip(expected.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let scale = expected.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
    (gap, scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transported_rhs_obeys_chain_rule(seed in any::<u64>(), c in coefficients(), g in scaling()) {
        let (gap, scale) = chain_rule_gap(&g, &c, &state(seed));
        prop_assert!(gap <= 1e-6 * scale.max(1.0), "gap {gap:e} scale {scale:e}");
    }

    #[test]
    fn transport_is_a_group_action(c in coefficients(), g1 in scaling(), g2 in scaling()) {
        let stepwise = push_forward_family(&g2, &push_forward_family(&g1, &c).unwrap()).unwrap();
        let direct = push_forward_family(&compose(&g2, &g1).unwrap(), &c).unwrap();
        let scale = direct.to_array().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(stepwise.max_difference(&direct) <= 1e-12 * scale);
        let back = push_forward_family(&invert(&g1), &push_forward_family(&g1, &c).unwrap()).unwrap();
        prop_assert!(back.max_difference(&c) <= 1e-12 * scale);
    }

    #[test]
    fn principal_symbol_is_invariant(c in coefficients(), g in scaling()) {
        let pushed = push_forward_family(&g, &c).unwrap();
        let (t0, d0) = c.principal_symbol();
        let (t1, d1) = pushed.principal_symbol();
        prop_assert!((t0 - t1).abs() <= 1e-12 * (1.0 + t0.abs()));
        prop_assert!((d0 - d1).abs() <= 1e-12 * (1.0 + d0.abs()));
    }

    #[test]
    fn linear_images_are_recognized(gamma in -3.0f64..3.0, lambda in 0.2f64..4.0, nu1 in -1.0f64..-0.1, mu0 in -2.0f64..2.0) {
        let c = push_forward_linear(gamma, lambda, nu1, mu0).unwrap();
        prop_assert!(in_linearizable_closure(&c, 1e-12));
        let (g, n, m) = linearizing_gauge(&c, 1e-10).unwrap();
        prop_assert!((g.gamma() - gamma).abs() < 1e-9 && (g.lambda() - lambda).abs() < 1e-9);
        prop_assert!((n - nu1).abs() < 1e-9 && (m - mu0).abs() < 1e-9);
    }
}

#[test]
fn identity_transport_is_exact() {
    let c = Coefficients { nu2: 0.05, mu1: 0.1, alpha1: 0.2, alpha2: -0.3, ..Coefficients::free() };
    assert_eq!(push_forward_family(&GaugeTransform::identity(), &c).unwrap(), c);
}

#[test]
fn linear_image_closed_form() {
    let (gamma, lambda, nu1, mu0) = (0.7, -1.6, -0.5, 1.3);
    let c = push_forward_linear(gamma, lambda, nu1, mu0).unwrap();
    let k = lambda * lambda + gamma * gamma - 1.0;
    let expected = Coefficients {
        nu1: nu1 / lambda,
        nu2: -gamma * nu1 / (2.0 * lambda),
        mu0: lambda * mu0,
        mu1: gamma / 2.0,
        mu2: nu1 * k / (2.0 * lambda),
        mu3: 0.0,
        mu4: -gamma / 2.0,
        mu5: -nu1 * k / (4.0 * lambda),
        alpha1: 0.0,
        alpha2: 0.0,
    };
    assert!(c.max_difference(&expected) < 1e-15);
}

#[test]
fn chain_rule_on_linear_equation() {
    for (gamma, lambda) in [(0.5, 1.0), (0.0, 2.0), (-2.0, 0.5), (2.0, -1.0)] {
        let g = GaugeTransform::scaling(gamma, lambda).unwrap();
        let (gap, scale) = chain_rule_gap(&g, &Coefficients::linear(-0.5, 1.0), &state(11));
        assert!(gap <= 1e-6 * scale, "({gamma}, {lambda}): {gap:e} vs {scale:e}");
    }
}

#[test]
fn nonzero_theta_is_rejected() {
    let g = GaugeTransform::new(0.0, 1.0, nlgauge::gauge::Theta::Uniform(0.3)).unwrap();
    assert!(push_forward_family(&g, &Coefficients::free()).is_err());
}
