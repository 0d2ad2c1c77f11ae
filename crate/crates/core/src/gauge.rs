//! Nonlinear gauge transformations
//!
//! ```text
//! N_(γ,Λ,θ)[ψ] = R·exp(i(γ·ln R + Λ·S + θ)),    R = |ψ|, S = arg ψ
//! ```
//!
//! and their group structure. Every transformation leaves `|ψ|²` untouched:
//! the modulus is copied through and only the phase is rewritten.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::functionals::{density, modulus_phase_anchored, RegularizationPolicy};
use crate::grid::{ComplexField, RealField};

/// Position-dependent phase offset of a gauge transformation.
#[derive(Debug, Clone, PartialEq)]
pub enum Theta {
    Zero,
    /// The same offset at every point (a global phase).
    Uniform(f64),
    Field(RealField),
}

impl Theta {
    pub fn is_zero(&self) -> bool {
        match self {
            Theta::Zero => true,
            Theta::Uniform(c) => *c == 0.0,
            Theta::Field(f) => f.values().iter().all(|&v| v == 0.0),
        }
    }

    fn at(&self, k: usize) -> f64 {
        match self {
            Theta::Zero => 0.0,
            Theta::Uniform(c) => *c,
            Theta::Field(f) => f.values()[k],
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Theta::Zero => true,
            Theta::Uniform(c) => c.is_finite(),
            Theta::Field(f) => f.is_finite(),
        }
    }

    /// `scale·a + b`
    fn affine(scale: f64, a: &Theta, b: &Theta) -> Result<Theta> {
        Ok(match (a, b) {
            (Theta::Zero, Theta::Zero) => Theta::Zero,
            (Theta::Field(fa), _) => {
                let mut out = fa.map(|v| scale * v);
                if let Theta::Field(fb) = b {
                    if fa.grid() != fb.grid() {
                        return Err(Error::GridMismatch("theta fields on different grids".into()));
                    }
                }
                for (k, v) in out.values_mut().iter_mut().enumerate() {
                    *v += b.at(k);
                }
                Theta::Field(out)
            }
            (_, Theta::Field(fb)) => {
                let shift = scale * a.at(0);
                Theta::Field(fb.map(|v| v + shift))
            }
            _ => Theta::Uniform(scale * a.at(0) + b.at(0)),
        })
    }
}

/// Parameters `(γ, Λ, θ)` of one nonlinear gauge transformation at a fixed
/// time. `Λ ≠ 0` is enforced on construction, so every value is invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeTransform {
    gamma: f64,
    lambda: f64,
    theta: Theta,
}

impl GaugeTransform {
    pub fn new(gamma: f64, lambda: f64, theta: Theta) -> Result<Self> {
        if lambda == 0.0 {
            return Err(Error::SingularGauge);
        }
        if !(gamma.is_finite() && lambda.is_finite() && theta.is_finite()) {
            return Err(Error::NonFinite("gauge parameters".into()));
        }
        Ok(Self { gamma, lambda, theta })
    }

    /// `(γ, Λ)` with `θ ≡ 0`.
    pub fn scaling(gamma: f64, lambda: f64) -> Result<Self> {
        Self::new(gamma, lambda, Theta::Zero)
    }

    pub fn identity() -> Self {
        Self { gamma: 0.0, lambda: 1.0, theta: Theta::Zero }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn theta(&self) -> &Theta {
        &self.theta
    }

    pub fn is_identity(&self) -> bool {
        self.gamma == 0.0 && self.lambda == 1.0 && self.theta.is_zero()
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &GaugeTransform) -> Result<GaugeTransform> {
        compose(self, first)
    }

    pub fn inverse(&self) -> GaugeTransform {
        invert(self)
    }
}

/// Random `(γ, Λ)` with `|γ| ≤ gamma_max` and `|Λ|` log-uniform in
/// `[lambda_min, lambda_max]` with a random sign; `θ ≡ 0`.
pub fn random_scaling<R: Rng + ?Sized>(
    rng: &mut R,
    gamma_max: f64,
    lambda_min: f64,
    lambda_max: f64,
) -> Result<GaugeTransform> {
    if !(gamma_max >= 0.0 && lambda_min > 0.0 && lambda_max >= lambda_min) {
        return Err(Error::InvalidArgument(format!(
            "bad gauge sampling range: gamma_max {gamma_max}, lambda in [{lambda_min}, {lambda_max}]"
        )));
    }
    let gamma = rng.random_range(-gamma_max..=gamma_max);
    let magnitude = rng.random_range(lambda_min.ln()..=lambda_max.ln()).exp();
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    GaugeTransform::scaling(gamma, sign * magnitude.clamp(lambda_min, lambda_max))
}

/// Parameters of `g2 ∘ g1`:
/// `(γ₂ + Λ₂γ₁, Λ₂Λ₁, Λ₂θ₁ + θ₂)`.
///
/// Fails only when both transforms carry θ fields on different grids.
pub fn compose(g2: &GaugeTransform, g1: &GaugeTransform) -> Result<GaugeTransform> {
    Ok(GaugeTransform {
        gamma: g2.gamma + g2.lambda * g1.gamma,
        lambda: g2.lambda * g1.lambda,
        theta: Theta::affine(g2.lambda, &g1.theta, &g2.theta)?,
    })
}

/// `(−γ/Λ, 1/Λ, −θ/Λ)`.
pub fn invert(g: &GaugeTransform) -> GaugeTransform {
    let inv = 1.0 / g.lambda;
    GaugeTransform {
        gamma: -g.gamma * inv,
        lambda: inv,
        theta: Theta::affine(-inv, &g.theta, &Theta::Zero).expect("no grid pairing"),
    }
}

/// Result of applying a gauge transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct Gauged {
    pub field: ComplexField,
    /// Points with `ρ ≤ ε`; there `ln R` is floored and the phase `S` is a
    /// convention, so the group law holds only up to branch choices.
    pub regularized: usize,
    /// Unwrapped output phase `γ ln R + ΛS + θ` at the reference point. Pass
    /// it as the anchor of a following application to keep `S` on the same
    /// branch.
    pub reference_phase: f64,
}

impl Gauged {
    pub fn has_warning(&self) -> bool {
        self.regularized > 0
    }
}

pub fn apply_gauge(
    g: &GaugeTransform,
    psi: &ComplexField,
    policy: &RegularizationPolicy,
) -> Result<Gauged> {
    apply_gauge_anchored(g, psi, policy, None)
}

/// [`apply_gauge`] with the branch of `S` at the reference point chosen
/// nearest to `anchor` (see [`modulus_phase_anchored`]).
pub fn apply_gauge_anchored(
    g: &GaugeTransform,
    psi: &ComplexField,
    policy: &RegularizationPolicy,
    anchor: Option<f64>,
) -> Result<Gauged> {
    if let Theta::Field(f) = &g.theta {
        psi.grid().ensure_same(f.grid())?;
    }
    let split = modulus_phase_anchored(psi, policy, anchor);
    let log_floor = 0.5 * policy.floor(&density(psi)).ln();
    let phase_at = |k: usize, r: f64, s: f64| {
        let log_r = if g.gamma == 0.0 || r == 0.0 { 0.0 } else { r.ln().max(log_floor) };
        g.gamma * log_r + g.lambda * s + g.theta.at(k)
    };
    let reference_phase = phase_at(0, split.modulus.values()[0], split.phase.values()[0]);
    let values = split
        .modulus
        .values()
        .iter()
        .zip(split.phase.values())
        .enumerate()
        .map(|(k, (&r, &s))| {
            if r == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::from_polar(r, phase_at(k, r, s))
        })
        .collect();
    Ok(Gauged {
        field: ComplexField::new(*psi.grid(), values)?,
        regularized: split.regularized,
        reference_phase,
    })
}
