//! Coefficient transport under gauge maps.
//!
//! If `ψ` solves the family with coefficients `c` then `N(γ,Λ,0)ψ` solves it
//! with `push_forward_family(g, c)`. The map is derived in hydrodynamic form,
//! where the phase equation reads
//!
//! ```text
//! ∂ₜS = ν₁(∇S)² − ν₁ΔR/R − μ₀V − Σ μᵢRᵢ − α₁ log ρ − α₂S,
//! ```
//!
//! and both the continuity equation and this equation are rewritten in terms
//! of `S' = γ ln R + ΛS`.

use crate::dynamics::{
    evolve_from_anchor, Coefficients, Potential, SimulationConfig, Trajectory,
};
use crate::error::{Error, Result};
use crate::functionals::{density, modulus_phase};
use crate::gauge::{apply_gauge_anchored, GaugeTransform};
use crate::grid::ComplexField;

/// Coefficients of the gauge-transformed equation.
///
/// Only `θ ≡ 0` is accepted: a position-dependent `θ` generates `∇θ` terms
/// outside the family, and with `α₂ ≠ 0` even a constant `θ` adds a uniform
/// potential.
pub fn push_forward_family(g: &GaugeTransform, c: &Coefficients) -> Result<Coefficients> {
    c.validate()?;
    if !g.theta().is_zero() {
        return Err(Error::InvalidArgument("coefficients are transported only for theta = 0".into()));
    }
    let (gamma, lambda) = (g.gamma(), g.lambda());
    let nu1 = c.nu1;

    // hydrodynamic coefficients of the ρ- and S-equations
    let a1 = -2.0 * nu1 * c.mu1;
    let a2 = 0.5 * nu1 + c.mu2;
    let b = 4.0 * nu1 * nu1 * c.mu3 - nu1;
    let a4 = -2.0 * nu1 * c.mu4;
    let a5 = c.mu5 - 0.25 * nu1;

    let nu1p = nu1 / lambda;
    let nu2p = c.nu2 - gamma * nu1 / (2.0 * lambda);
    let a1p = a1 - gamma * nu1 / lambda;
    let bp = b / lambda;
    let a4p = a4 - gamma * b / lambda;
    let a2p = lambda * a2 + gamma * gamma * nu1 / (2.0 * lambda) - gamma * c.nu2 - 0.5 * gamma * a1;
    let a5p = lambda * a5 + gamma * gamma * b / (4.0 * lambda) - 0.5 * gamma * a4;

    let (mu1, mu3, mu4) = if nu1p == 0.0 {
        // J ≡ 0, so the current-dependent quotients carry no information
        (0.0, 0.0, 0.0)
    } else {
        (-a1p / (2.0 * nu1p), (bp + nu1p) / (4.0 * nu1p * nu1p), -a4p / (2.0 * nu1p))
    };
    Ok(Coefficients {
        nu1: nu1p,
        nu2: nu2p,
        mu0: lambda * c.mu0,
        mu1,
        mu2: a2p - 0.5 * nu1p,
        mu3,
        mu4,
        mu5: a5p + 0.25 * nu1p,
        alpha1: lambda * c.alpha1 - 0.5 * gamma * c.alpha2,
        alpha2: c.alpha2,
    })
}

/// Image of the linear equation `i∂ₜψ = (ν₁Δ + μ₀V)ψ` under `N(γ,Λ,0)`:
///
/// ```text
/// ν₁' = ν₁/Λ          ν₂' = −γν₁/(2Λ)      μ₀' = Λμ₀
/// μ₁' = γ/2           μ₂' = ν₁(Λ²+γ²−1)/(2Λ)
/// μ₃' = 0             μ₄' = −γ/2           μ₅' = −ν₁(Λ²+γ²−1)/(4Λ)
/// α₁' = α₂' = 0
/// ```
pub fn push_forward_linear(gamma: f64, lambda: f64, nu1: f64, mu0: f64) -> Result<Coefficients> {
    let g = GaugeTransform::scaling(gamma, lambda)?;
    push_forward_family(&g, &Coefficients::linear(nu1, mu0))
}

/// Whether `c` satisfies the relations shared by every gauge image of a
/// linear equation: `μ₃ = 0`, `μ₄ = −μ₁`, `μ₅ = −μ₂/2`, `ν₂ = −ν₁μ₁`,
/// `α₁ = α₂ = 0`. This describes the closure of the orbit; points with
/// `2μ₂/ν₁ + 1 − 4μ₁² ≤ 0` satisfy it without being reachable.
pub fn in_linearizable_closure(c: &Coefficients, tol: f64) -> bool {
    let checks = [
        c.mu3,
        c.mu4 + c.mu1,
        c.mu5 + 0.5 * c.mu2,
        c.nu2 + c.nu1 * c.mu1,
        c.alpha1,
        c.alpha2,
    ];
    checks.iter().all(|v| v.abs() <= tol)
}

/// A gauge `g` with `Λ > 0` and linear coefficients `(ν₁, μ₀)` such that
/// `push_forward_linear` reproduces `c` within `tol`, if any.
pub fn linearizing_gauge(c: &Coefficients, tol: f64) -> Option<(GaugeTransform, f64, f64)> {
    if c.nu1 == 0.0 || !in_linearizable_closure(c, tol) {
        return None;
    }
    let gamma = 2.0 * c.mu1;
    let lambda_sq = 2.0 * c.mu2 / c.nu1 + 1.0 - gamma * gamma;
    if lambda_sq.is_nan() || lambda_sq <= 0.0 {
        return None;
    }
    let lambda = lambda_sq.sqrt();
    let (nu1, mu0) = (lambda * c.nu1, c.mu0 / lambda);
    let back = push_forward_linear(gamma, lambda, nu1, mu0).ok()?;
    let scale = 1.0 + c.to_array().iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if back.max_difference(c) > tol * scale {
        return None;
    }
    Some((GaugeTransform::scaling(gamma, lambda).ok()?, nu1, mu0))
}

/// Deviation between "evolve then gauge" and "gauge then evolve".
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// Coefficients used on the gauged path.
    pub pushed: Coefficients,
    /// `(t, ‖N ψ_t − ψ'_t‖)` with the grid L² norm, at the requested `dt`.
    pub residual_series: Vec<(f64, f64)>,
    pub residual_sup: f64,
    /// Same supremum at `dt/2`.
    pub refined_residual_sup: f64,
    /// `log₂` of the ratio of the two suprema.
    pub refinement_order: f64,
    /// Largest density deviation `max |ρ_A − ρ_B|` along the two paths.
    pub density_sup: f64,
    /// Largest fraction of points at or below the density floor on either
    /// path. Non-zero values mean the phase map was regularized somewhere
    /// and the comparison is not meaningful there.
    pub regularized_fraction: f64,
}

impl EquivalenceReport {
    pub fn is_regularized(&self) -> bool {
        self.regularized_fraction > 0.0
    }
}

/// Evolves path A = `N(evolve(c, ψ₀))` frame by frame and path B =
/// `evolve(push_forward_family(g, c), N ψ₀)`, at `dt` and `dt/2`.
pub fn commuting_residual(
    g: &GaugeTransform,
    c: &Coefficients,
    psi0: &ComplexField,
    potential: &Potential,
    config: &SimulationConfig,
) -> Result<EquivalenceReport> {
    let pushed = push_forward_family(g, c)?;
    commuting_residual_with(g, c, &pushed, psi0, potential, config)
}

/// [`commuting_residual`] with explicitly supplied coefficients for path B
/// (for instance deliberately wrong ones).
pub fn commuting_residual_with(
    g: &GaugeTransform,
    c: &Coefficients,
    pushed: &Coefficients,
    psi0: &ComplexField,
    potential: &Potential,
    config: &SimulationConfig,
) -> Result<EquivalenceReport> {
    let (coarse, fine) = rayon::join(
        || paths(g, c, pushed, psi0, potential, config),
        || paths(g, c, pushed, psi0, potential, &config.refined(2)),
    );
    let (coarse, fine) = (coarse?, fine?);
    Ok(EquivalenceReport {
        pushed: *pushed,
        residual_sup: coarse.residual_sup,
        refined_residual_sup: fine.residual_sup,
        refinement_order: (coarse.residual_sup / fine.residual_sup).log2(),
        density_sup: coarse.density_sup.max(fine.density_sup),
        regularized_fraction: coarse.regularized_fraction.max(fine.regularized_fraction),
        residual_series: coarse.series,
    })
}

struct PathComparison {
    series: Vec<(f64, f64)>,
    residual_sup: f64,
    density_sup: f64,
    regularized_fraction: f64,
}

fn paths(
    g: &GaugeTransform,
    c: &Coefficients,
    pushed: &Coefficients,
    psi0: &ComplexField,
    potential: &Potential,
    config: &SimulationConfig,
) -> Result<PathComparison> {
    let anchor = modulus_phase(psi0, &config.policy).reference_phase();
    let gauged0 = apply_gauge_anchored(g, psi0, &config.policy, Some(anchor))?;
    let (original, transformed) = rayon::join(
        || evolve_from_anchor(c, potential, psi0, config, anchor),
        || evolve_from_anchor(pushed, potential, &gauged0.field, config, gauged0.reference_phase),
    );
    compare(&original?, &transformed?, g, config)
}

fn compare(
    original: &Trajectory,
    transformed: &Trajectory,
    g: &GaugeTransform,
    config: &SimulationConfig,
) -> Result<PathComparison> {
    let mut series = Vec::with_capacity(original.frames.len());
    let mut density_sup: f64 = 0.0;
    let mut regularized_fraction = transformed.max_regularized_fraction();
    for (a, b) in original.frames.iter().zip(&transformed.frames) {
        let gauged = apply_gauge_anchored(g, &a.psi, &config.policy, Some(a.reference_phase))?;
        let n = a.psi.grid().len() as f64;
        regularized_fraction = regularized_fraction.max(gauged.regularized as f64 / n);
        series.push((a.t, gauged.field.l2_distance(&b.psi)?));
        let (ra, rb) = (density(&a.psi), density(&b.psi));
        for (x, y) in ra.values().iter().zip(rb.values()) {
            density_sup = density_sup.max((x - y).abs());
        }
    }
    let residual_sup = series.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(PathComparison { series, residual_sup, density_sup, regularized_fraction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::states::{periodic_gaussian, phase_modulated};
    use crate::gauge::Theta;
    use std::f64::consts::PI;

    fn close(a: &Coefficients, b: &Coefficients) -> bool {
        a.max_difference(b) < 1e-12
    }

    #[test]
    fn identity_fixes_every_point() {
        let c = Coefficients::from_array([-0.4, 0.1, 1.0, 0.3, -0.2, 0.7, 0.05, 0.4, 0.6, -0.3]);
        assert!(close(&push_forward_family(&GaugeTransform::identity(), &c).unwrap(), &c));
        let p = push_forward_linear(0.0, 1.0, -0.5, 2.0).unwrap();
        assert_eq!(p, Coefficients::linear(-0.5, 2.0));
    }

    #[test]
    fn linear_image_closed_form() {
        let (nu1, mu0, gamma, lambda) = (-0.5, 2.0, 0.8, 1.7);
        let p = push_forward_linear(gamma, lambda, nu1, mu0).unwrap();
        let q = lambda * lambda + gamma * gamma - 1.0;
        let expected = Coefficients {
            nu1: nu1 / lambda,
            nu2: -gamma * nu1 / (2.0 * lambda),
            mu0: lambda * mu0,
            mu1: gamma / 2.0,
            mu2: nu1 * q / (2.0 * lambda),
            mu3: 0.0,
            mu4: -gamma / 2.0,
            mu5: -nu1 * q / (4.0 * lambda),
            alpha1: 0.0,
            alpha2: 0.0,
        };
        assert!(close(&p, &expected), "{p:?}");
        assert!(in_linearizable_closure(&p, 1e-12));
    }

    #[test]
    fn log_gauge_creates_diffusion() {
        let p = push_forward_linear(0.4, 1.0, -0.5, 0.0).unwrap();
        assert!((p.nu2 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn phase_scaling_of_free_equation() {
        // γ = 0: ψ' = R e^{iΛS} solves a member with ν₁' = ν₁/Λ and a
        // quantum-potential correction ν₁(Λ²−1)/(2Λ) in μ₂
        let p = push_forward_linear(0.0, 2.0, -0.5, 0.0).unwrap();
        assert!((p.nu1 + 0.25).abs() < 1e-15);
        assert!((p.mu2 + 0.375).abs() < 1e-15);
        assert!((p.mu5 - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn linearizing_gauge_recovers_parameters() {
        let p = push_forward_linear(-0.6, 0.4, -0.5, 1.5).unwrap();
        let (h, nu1, mu0) = linearizing_gauge(&p, 1e-12).unwrap();
        assert!((h.gamma() + 0.6).abs() < 1e-12 && (h.lambda() - 0.4).abs() < 1e-12);
        assert!((nu1 + 0.5).abs() < 1e-12 && (mu0 - 1.5).abs() < 1e-12);
        let nonlinear = Coefficients { mu3: 0.1, ..p };
        assert!(linearizing_gauge(&nonlinear, 1e-12).is_none());
    }

    #[test]
    fn rejects_theta() {
        let grid = make_grid(1, 8, 1.0).unwrap();
        let field = crate::grid::RealField::from_fn(grid, |x, _| x);
        let g = GaugeTransform::new(0.5, 1.0, Theta::Field(field)).unwrap();
        assert!(push_forward_family(&g, &Coefficients::free()).is_err());
        let g = GaugeTransform::new(0.5, 1.0, Theta::Uniform(0.3)).unwrap();
        assert!(push_forward_family(&g, &Coefficients::free()).is_err());
        assert!(push_forward_linear(0.5, 0.0, -0.5, 0.0).is_err());
    }

    #[test]
    fn nu1_zero_drops_current_terms() {
        let c = Coefficients { nu1: 0.0, mu1: 0.3, mu3: 0.2, alpha1: 0.5, ..Default::default() };
        let p = push_forward_family(&GaugeTransform::scaling(0.7, 1.3).unwrap(), &c).unwrap();
        assert_eq!((p.mu1, p.mu3, p.mu4), (0.0, 0.0, 0.0));
        assert!(p.to_array().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn commuting_diagram_closes_for_linear_equation() {
        let grid = make_grid(1, 64, 2.0 * PI).unwrap();
        // ΛS must stay periodic, so the phase carries no winding
        let psi0 = phase_modulated(&periodic_gaussian(&grid, PI, 0.9, 0.0).unwrap(), 0.6, 1);
        let g = GaugeTransform::scaling(0.5, 1.5).unwrap();
        let config = SimulationConfig::new(2e-3, 0.2, 20);
        let report =
            commuting_residual(&g, &Coefficients::free(), &psi0, &Potential::zero(grid), &config).unwrap();
        assert_eq!(report.residual_series.len(), 6);
        assert!(report.residual_series[0].1 < 1e-13);
        assert!(report.residual_sup < 1e-6, "{}", report.residual_sup);
        assert!(report.density_sup < 1e-6);
        assert!(!report.is_regularized());
    }
}
