//! Initial-state presets and the closed-form free Gaussian packet.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};

/// Signed distance from `c` to `x` on a circle of circumference `length`,
/// in `[−L/2, L/2)`.
pub fn periodic_offset(x: f64, c: f64, length: f64) -> f64 {
    (x - c + 0.5 * length).rem_euclid(length) - 0.5 * length
}

fn check_width(width: f64) -> Result<()> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidArgument(format!("width must be positive, got {width}")));
    }
    Ok(())
}

/// `exp(−(x−c)²/(2w²) + ikx)` on a 1D grid, normalized on the grid.
///
/// The packet is not periodic; its tails should vanish well inside the box.
pub fn gaussian(grid: &Grid, center: f64, width: f64, momentum: f64) -> Result<ComplexField> {
    check_width(width)?;
    let l = grid.length();
    let psi = ComplexField::from_fn(grid.axis(), |x, _| {
        let d = periodic_offset(x, center, l);
        Complex64::from_polar((-d * d / (2.0 * width * width)).exp(), momentum * x)
    });
    Ok(psi.normalized())
}

/// Smooth periodic bump `exp(β(cos(2π(x−c)/L) − 1) + ikx)` with
/// `β = (L/(2πw))²`, so that near `c` it matches a Gaussian of width `w`.
///
/// Unlike [`gaussian`], the profile is analytic on the circle and never
/// vanishes, which keeps phases and the density quotients well defined
/// everywhere. `momentum` should be a multiple of `2π/L`.
pub fn periodic_gaussian(grid: &Grid, center: f64, width: f64, momentum: f64) -> Result<ComplexField> {
    check_width(width)?;
    let l = grid.length();
    let beta = (l / (2.0 * PI * width)).powi(2);
    let psi = ComplexField::from_fn(grid.axis(), |x, _| {
        let arg = 2.0 * PI * (x - center) / l;
        Complex64::from_polar((beta * (arg.cos() - 1.0)).exp(), momentum * x)
    });
    Ok(psi.normalized())
}

/// Normalized plane wave `exp(i·mode·2πx/L)/√L`.
pub fn plane_wave(grid: &Grid, mode: i64) -> ComplexField {
    let k = mode as f64 * 2.0 * PI / grid.length();
    let amp = 1.0 / grid.length().sqrt();
    ComplexField::from_fn(grid.axis(), |x, _| Complex64::from_polar(amp, k * x))
}

/// `ψ·exp(i·a·sin(2π·mode·x/L))`: a phase without winding, so that `ΛS`
/// stays periodic for every `Λ`. Norm is unchanged.
pub fn phase_modulated(psi: &ComplexField, amplitude: f64, mode: i64) -> ComplexField {
    let grid = *psi.grid();
    let k = mode as f64 * 2.0 * PI / grid.length();
    let values = psi
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(1.0, amplitude * (k * grid.point(i).0).sin()))
        .collect();
    ComplexField::new(grid, values).expect("same grid, finite phase")
}

/// Exact solution of `i∂ₜψ = ν₁ψ''` on the line for the initial packet
/// `(πw²)^{−1/4} exp(−(x−c)²/(2w²) + ik(x−c))·e^{ikc}`, evaluated on a
/// periodic grid by the minimal image of `x − c − kτ`. Here `τ = −2ν₁t`.
pub fn free_gaussian(
    grid: &Grid,
    nu1: f64,
    center: f64,
    width: f64,
    momentum: f64,
    t: f64,
) -> ComplexField {
    let tau = -2.0 * nu1 * t;
    let w2 = width * width;
    let spread = Complex64::new(1.0, tau / w2);
    let prefactor = (PI * w2).powf(-0.25) / spread.sqrt();
    let l = grid.length();
    ComplexField::from_fn(grid.axis(), |x, _| {
        let d = periodic_offset(x, center + momentum * tau, l);
        let gauss = (-(d * d) / (2.0 * w2 * spread)).exp();
        let carrier = Complex64::from_polar(1.0, momentum * x - 0.5 * momentum * momentum * tau);
        prefactor * gauss * carrier
    })
}

/// Random smooth field `exp(a + ib)`, normalized, where `a` and `b` are
/// trigonometric polynomials of degree `modes` along each axis with
/// coefficients in `[−0.3, 0.3]` and `[−0.5, 0.5]` respectively.
///
/// The modulus is bounded away from zero and the phase has no winding.
pub fn random_nodeless<R: Rng + ?Sized>(grid: &Grid, modes: usize, rng: &mut R) -> ComplexField {
    let l = grid.length();
    let mut terms = Vec::new();
    for axis in 0..grid.dimension() {
        for m in 1..=modes {
            let k = 2.0 * PI * m as f64 / l;
            terms.push((
                axis,
                k,
                rng.random_range(-0.3..=0.3),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(-0.5..=0.5),
                rng.random_range(0.0..2.0 * PI),
            ));
        }
    }
    let offset = rng.random_range(-PI..PI);
    ComplexField::from_fn(*grid, |x, y| {
        let (mut a, mut b) = (0.0, offset);
        for &(axis, k, amp, shift, phase_amp, phase_shift) in &terms {
            let u = if axis == 0 { x } else { y };
            a += amp * (k * u + shift).cos();
            b += phase_amp * (k * u + phase_shift).cos();
        }
        Complex64::from_polar(a.exp(), b)
    })
    .normalized()
}
