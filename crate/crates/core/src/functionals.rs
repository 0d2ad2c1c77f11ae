//! Density, probability current, modulus/phase split and the five
//! density/current quotients `R₁ … R₅` that enter the nonlinear family.
//!
//! With `J = −2ν₁·Im(ψ̄∇ψ)`:
//!
//! ```text
//! ρ R₁ = ∇·J      ρ R₂ = Δρ      ρ² R₃ = J²      ρ² R₄ = J·∇ρ      ρ² R₅ = (∇ρ)²
//! ```
//!
//! Denominators are floored at `ε = rho_floor_rel · max ρ` (and `ε²`), so the
//! quotients stay finite at nodes. Every result reports how many points hit
//! the floor; tests on nodeless states require that count to be zero.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, RealField, Spectrum};

/// Relative density floor used wherever the functionals divide by `ρ` or take
/// `log ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationPolicy {
    pub rho_floor_rel: f64,
}

impl Default for RegularizationPolicy {
    fn default() -> Self {
        Self { rho_floor_rel: 1e-12 }
    }
}

impl RegularizationPolicy {
    pub fn new(rho_floor_rel: f64) -> Result<Self> {
        if !(rho_floor_rel.is_finite() && rho_floor_rel > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rho_floor_rel must be positive, got {rho_floor_rel}"
            )));
        }
        Ok(Self { rho_floor_rel })
    }

    /// Absolute floor `ε` for a given density.
    pub fn floor(&self, rho: &RealField) -> f64 {
        self.rho_floor_rel * rho.max().max(0.0)
    }
}

/// `ρ = |ψ|²`.
pub fn density(psi: &ComplexField) -> RealField {
    RealField::from_raw(*psi.grid(), psi.values().iter().map(|v| v.norm_sqr()).collect())
}

/// Probability current `J = −2ν₁·Im(ψ̄∇ψ)`, one component per axis.
///
/// With this sign the linear equation `i∂ₜψ = ν₁Δψ` satisfies
/// `∂ₜρ + ∇·J = 0`.
pub fn current(psi: &ComplexField, nu1: f64) -> Vec<RealField> {
    let spec = Spectrum::of_complex(psi);
    current_from(psi, &spec, nu1)
}

fn current_from(psi: &ComplexField, spec: &Spectrum, nu1: f64) -> Vec<RealField> {
    let grid = *psi.grid();
    (0..grid.dimension())
        .map(|axis| {
            let d = spec.derivative(axis, 1);
            let values = psi
                .values()
                .iter()
                .zip(d.values())
                .map(|(p, dp)| -2.0 * nu1 * (p.conj() * dp).im)
                .collect();
            RealField::from_raw(grid, values)
        })
        .collect()
}

/// Modulus and unwrapped phase of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePair {
    pub modulus: RealField,
    pub phase: RealField,
    /// Number of points with `ρ ≤ ε`, where the phase was carried over from
    /// the previous valid point instead of being measured.
    pub regularized: usize,
}

impl PhasePair {
    pub fn regularized_fraction(&self) -> f64 {
        self.regularized as f64 / self.modulus.grid().len() as f64
    }

    /// True when some phase values are conventional rather than measured.
    pub fn has_regularized(&self) -> bool {
        self.regularized > 0
    }

    /// `R·exp(iS)`.
    pub fn reconstruct(&self) -> ComplexField {
        let values = self
            .modulus
            .values()
            .iter()
            .zip(self.phase.values())
            .map(|(&r, &s)| Complex64::from_polar(r, s))
            .collect();
        ComplexField::new(*self.modulus.grid(), values).expect("finite by construction")
    }

    /// Phase at the reference point (flat index 0).
    pub fn reference_phase(&self) -> f64 {
        self.phase.values()[0]
    }
}

/// Branch of `raw` closest to `target`: `raw + 2πm` with `|result − target| ≤ π`.
pub fn nearest_branch(raw: f64, target: f64) -> f64 {
    raw + 2.0 * PI * ((target - raw) / (2.0 * PI)).round()
}

/// Splits `ψ = R·exp(iS)` with `S` unwrapped.
///
/// The reference point is flat index 0 and takes the principal value of
/// `arg ψ`. The phase is then unwrapped along axis 0 and, in 2D, along each
/// row (axis 1) starting from that row's first entry. Points with `ρ ≤ ε`
/// inherit the phase of the previous point on the scan path.
pub fn modulus_phase(psi: &ComplexField, policy: &RegularizationPolicy) -> PhasePair {
    modulus_phase_anchored(psi, policy, None)
}

/// As [`modulus_phase`], but when `anchor` is given the reference point takes
/// the branch of `arg ψ` nearest to it instead of the principal value. Time
/// integrators pass the previous reference phase here so that `S` evolves
/// continuously instead of jumping by `2π`.
pub fn modulus_phase_anchored(
    psi: &ComplexField,
    policy: &RegularizationPolicy,
    anchor: Option<f64>,
) -> PhasePair {
    let grid = *psi.grid();
    let rho = density(psi);
    let eps = policy.floor(&rho);
    let valid: Vec<bool> = rho.values().iter().map(|&r| r > eps).collect();
    let regularized = valid.iter().filter(|v| !**v).count();
    let raw: Vec<f64> = psi.values().iter().map(|v| v.arg()).collect();

    let mut phase = vec![0.0; grid.len()];
    phase[0] = match (valid[0], anchor) {
        (true, Some(a)) => nearest_branch(raw[0], a),
        (true, None) => raw[0],
        (false, a) => a.unwrap_or(0.0),
    };
    let n = grid.points_per_axis();
    let step = |prev: f64, k: usize| if valid[k] { nearest_branch(raw[k], prev) } else { prev };
    match grid.dimension() {
        1 => {
            for k in 1..n {
                phase[k] = step(phase[k - 1], k);
            }
        }
        _ => {
            for i in 1..n {
                phase[i * n] = step(phase[(i - 1) * n], i * n);
            }
            for i in 0..n {
                for j in 1..n {
                    let k = i * n + j;
                    phase[k] = step(phase[k - 1], k);
                }
            }
        }
    }

    PhasePair {
        modulus: RealField::from_raw(grid, psi.values().iter().map(|v| v.norm()).collect()),
        phase: RealField::from_raw(grid, phase),
        regularized,
    }
}

/// Selector for one of the five quotients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Functional {
    /// `∇·J / ρ`
    R1,
    /// `Δρ / ρ`
    R2,
    /// `J² / ρ²`
    R3,
    /// `J·∇ρ / ρ²`
    R4,
    /// `(∇ρ)² / ρ²`
    R5,
}

impl Functional {
    pub const ALL: [Functional; 5] = [Self::R1, Self::R2, Self::R3, Self::R4, Self::R5];

    pub fn from_index(index: usize) -> Result<Self> {
        match index {
            1..=5 => Ok(Self::ALL[index - 1]),
            _ => Err(Error::InvalidArgument(format!(
                "functional index must be in 1..=5, got {index}"
            ))),
        }
    }

    pub fn index(self) -> usize {
        self as usize + 1
    }
}

/// A real field computed with regularized denominators.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedField {
    pub values: RealField,
    pub regularized: usize,
}

impl RegularizedField {
    pub fn regularized_fraction(&self) -> f64 {
        self.regularized as f64 / self.values.grid().len() as f64
    }
}

/// The quotient `R_index[ψ]` for `index ∈ 1..=5`.
pub fn functional_r(
    index: usize,
    psi: &ComplexField,
    nu1: f64,
    policy: &RegularizationPolicy,
) -> Result<RegularizedField> {
    let which = Functional::from_index(index)?;
    let mut needed = [false; 5];
    needed[which.index() - 1] = true;
    let set = FunctionalSet::compute(psi, &Spectrum::of_complex(psi), nu1, policy, needed, None);
    Ok(RegularizedField {
        values: set.get(which).cloned().expect("requested functional computed"),
        regularized: set.regularized,
    })
}

/// All requested quotients of one state, sharing the spectral work.
#[derive(Debug, Clone)]
pub struct FunctionalSet {
    values: [Option<RealField>; 5],
    pub rho: RealField,
    pub floor: f64,
    pub regularized: usize,
}

impl FunctionalSet {
    /// Computes every quotient.
    pub fn all(psi: &ComplexField, nu1: f64, policy: &RegularizationPolicy) -> Self {
        Self::compute(psi, &Spectrum::of_complex(psi), nu1, policy, [true; 5], None)
    }

    pub(crate) fn compute(
        psi: &ComplexField,
        spec: &Spectrum,
        nu1: f64,
        policy: &RegularizationPolicy,
        needed: [bool; 5],
        lap: Option<&ComplexField>,
    ) -> Self {
        let grid = *psi.grid();
        let rho = density(psi);
        let eps = policy.floor(&rho);
        let regularized = rho.values().iter().filter(|&&r| r <= eps).count();
        let mut values: [Option<RealField>; 5] = Default::default();
        if !needed.iter().any(|&b| b) {
            return Self { values, rho, floor: eps, regularized };
        }
        if eps == 0.0 {
            // ψ ≡ 0: every quotient is conventionally zero
            for (slot, &want) in values.iter_mut().zip(&needed) {
                if want {
                    *slot = Some(RealField::zeros(grid));
                }
            }
            return Self { values, rho, floor: eps, regularized };
        }

        let [w1, w2, w3, w4, w5] = needed;
        // Derivatives act on ψ only (product rule), never on ρ or J: the
        // second-order parts of R₁, R₂ and of ν₁Δψ then share one discrete
        // Laplacian, which keeps their cancellations exact near Nyquist.
        let grad: Vec<ComplexField> = if w1 || w2 || w3 || w4 || w5 {
            (0..grid.dimension()).map(|a| spec.derivative(a, 1)).collect()
        } else {
            Vec::new()
        };
        let owned_lap;
        let lap = match lap {
            Some(l) => Some(l),
            None if w1 || w2 => {
                owned_lap = spec.laplacian();
                Some(&owned_lap)
            }
            None => None,
        };
        let need_j = w3 || w4;
        let need_grad_rho = w4 || w5;
        let from_grad = |f: &dyn Fn(Complex64) -> f64| -> Vec<RealField> {
            grad.iter()
                .map(|d| {
                    let v = psi.values().iter().zip(d.values()).map(|(p, dp)| f(p.conj() * dp)).collect();
                    RealField::from_raw(grid, v)
                })
                .collect()
        };
        let current = if need_j { from_grad(&|z| -2.0 * nu1 * z.im) } else { Vec::new() };
        let grad_rho = if need_grad_rho { from_grad(&|z| 2.0 * z.re) } else { Vec::new() };

        let r = rho.values();
        let den1: Vec<f64> = r.iter().map(|&v| v.max(eps)).collect();
        let den2: Vec<f64> = r.iter().map(|&v| (v * v).max(eps * eps)).collect();
        let quotient = |num: Vec<f64>, den: &[f64]| {
            RealField::from_raw(grid, num.iter().zip(den).map(|(a, b)| a / b).collect())
        };
        let dot = |a: &[RealField], b: &[RealField]| -> Vec<f64> {
            (0..grid.len())
                .map(|k| a.iter().zip(b).map(|(x, y)| x.values()[k] * y.values()[k]).sum())
                .collect()
        };
        let psi_lap = |f: &dyn Fn(usize, Complex64) -> f64| -> Vec<f64> {
            let l = lap.expect("laplacian available").values();
            psi.values().iter().zip(l).enumerate().map(|(k, (p, lp))| f(k, p.conj() * lp)).collect()
        };
        if w1 {
            // ∇·J = −2ν₁ Im(ψ̄Δψ)
            values[0] = Some(quotient(psi_lap(&|_, z| -2.0 * nu1 * z.im), &den1));
        }
        if w2 {
            // Δρ = 2 Re(ψ̄Δψ) + 2|∇ψ|²
            let lap_rho = psi_lap(&|k, z| {
                2.0 * z.re + 2.0 * grad.iter().map(|d| d.values()[k].norm_sqr()).sum::<f64>()
            });
            values[1] = Some(quotient(lap_rho, &den1));
        }
        if w3 {
            values[2] = Some(quotient(dot(&current, &current), &den2));
        }
        if w4 {
            values[3] = Some(quotient(dot(&current, &grad_rho), &den2));
        }
        if w5 {
            values[4] = Some(quotient(dot(&grad_rho, &grad_rho), &den2));
        }
        Self { values, rho, floor: eps, regularized }
    }

    pub fn get(&self, which: Functional) -> Option<&RealField> {
        self.values[which.index() - 1].as_ref()
    }

    pub fn regularized_fraction(&self) -> f64 {
        self.regularized as f64 / self.rho.grid().len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Grid};

    fn gaussian_box() -> (Grid, ComplexField) {
        // exp(−x²/2) centred in a box wide enough that the tails vanish
        let g = make_grid(1, 256, 24.0).unwrap();
        let psi = ComplexField::from_fn(g, |x, _| Complex64::new((-(x - 12.0).powi(2) / 2.0).exp(), 0.0));
        (g, psi)
    }

    #[test]
    fn density_examples() {
        let g = make_grid(1, 32, 2.0 * PI).unwrap();
        let wave = ComplexField::from_fn(g, |x, _| Complex64::from_polar(1.0, 3.0 * x));
        assert!(density(&wave).values().iter().all(|&r| (r - 1.0).abs() < 1e-15));
        assert!(density(&ComplexField::zeros(g)).values().iter().all(|&r| r == 0.0));
        let phase = Complex64::new(1.0, 1.0) / 2f64.sqrt();
        let shaped = ComplexField::from_fn(g, |x, _| phase * x.cos());
        for (k, &r) in density(&shaped).values().iter().enumerate() {
            let x = g.coords()[k];
            assert!((r - x.cos().powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn current_of_real_field_vanishes() {
        let (_, psi) = gaussian_box();
        assert!(current(&psi, -0.5)[0].values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn current_of_plane_wave() {
        // −2ν₁·Im(ψ̄ ∂ψ) = −2ν₁k; with ν₁ = −1/2 that is k
        let l = 2.0 * PI;
        let g = make_grid(1, 32, l).unwrap();
        let k = 3.0;
        let psi = ComplexField::from_fn(g, |x, _| Complex64::from_polar(1.0, k * x));
        assert!(current(&psi, -0.5)[0].values().iter().all(|v| (v - k).abs() < 1e-12));
        assert!(current(&psi, 0.25)[0].values().iter().all(|v| (v + 0.5 * k).abs() < 1e-12));
    }

    #[test]
    fn current_of_moving_gaussian() {
        let l = 2.0 * PI * 4.0;
        let g = make_grid(1, 256, l).unwrap();
        let k = 2.0 * (2.0 * PI / l);
        let psi = ComplexField::from_fn(g, |x, _| {
            Complex64::from_polar((-(x - l / 2.0).powi(2) / 2.0).exp(), k * x)
        });
        let rho = density(&psi);
        let j = current(&psi, -0.5);
        for (a, b) in j[0].values().iter().zip(rho.values()) {
            assert!((a - k * b).abs() < 1e-12);
        }
    }

    #[test]
    fn unwrap_plane_wave_is_linear() {
        let l = 1.0;
        let g = make_grid(1, 64, l).unwrap();
        let k = 2.0 * (2.0 * PI / l);
        let psi = ComplexField::from_fn(g, |x, _| Complex64::from_polar(1.0, k * x));
        let pp = modulus_phase(&psi, &RegularizationPolicy::default());
        assert_eq!(pp.regularized, 0);
        for (s, x) in pp.phase.values().iter().zip(g.coords()) {
            assert!((s - k * x).abs() < 1e-12);
        }
        // strictly increasing past π: not wrapped
        assert!(pp.phase.max() > 3.0 * PI);
    }

    #[test]
    fn unwrap_of_real_inputs() {
        let (_, psi) = gaussian_box();
        let pp = modulus_phase(&psi, &RegularizationPolicy::new(1e-300).unwrap());
        assert!(pp.phase.values().iter().all(|&s| s == 0.0));
        assert_eq!(pp.modulus.values(), &psi.values().iter().map(|v| v.re).collect::<Vec<_>>()[..]);

        let g = make_grid(1, 16, 1.0).unwrap();
        let minus = ComplexField::from_fn(g, |_, _| Complex64::new(-1.0, 0.0));
        let pp = modulus_phase(&minus, &RegularizationPolicy::default());
        assert!(pp.phase.values().iter().all(|&s| (s - PI).abs() < 1e-15));
        assert!(pp.modulus.values().iter().all(|&r| r == 1.0));
    }

    #[test]
    fn unwrap_flags_nodes() {
        let g = make_grid(1, 16, 2.0 * PI).unwrap();
        let psi = ComplexField::from_fn(g, |x, _| Complex64::new(x.sin(), 0.0));
        let pp = modulus_phase(&psi, &RegularizationPolicy::default());
        assert!(pp.has_regularized());
        // sin vanishes at x = 0 and x = π on this grid
        assert_eq!(pp.regularized, 2);
    }

    #[test]
    fn anchor_selects_branch() {
        let g = make_grid(1, 8, 1.0).unwrap();
        let psi = ComplexField::from_fn(g, |_, _| Complex64::from_polar(1.0, 3.0));
        let pp = modulus_phase_anchored(&psi, &RegularizationPolicy::default(), Some(9.0));
        assert!((pp.reference_phase() - (3.0 + 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn unwrap_2d_row_major() {
        let l = 2.0 * PI;
        let g = make_grid(2, 16, l).unwrap();
        let psi = ComplexField::from_fn(g, |x, y| Complex64::from_polar(1.0, 2.0 * x + 3.0 * y));
        let pp = modulus_phase(&psi, &RegularizationPolicy::default());
        for k in 0..g.len() {
            let (x, y) = g.point(k);
            assert!((pp.phase.values()[k] - (2.0 * x + 3.0 * y)).abs() < 1e-12);
        }
        let back = pp.reconstruct();
        assert!(back.max_distance(&psi).unwrap() < 1e-13);
    }

    #[test]
    fn r2_and_r5_of_gaussian() {
        // ρ = e^{−x²}: Δρ/ρ = 4x² − 2 and (∇ρ)²/ρ² = 4x²
        let (g, psi) = gaussian_box();
        let policy = RegularizationPolicy::default();
        let r2 = functional_r(2, &psi, -0.5, &policy).unwrap();
        let r5 = functional_r(5, &psi, -0.5, &policy).unwrap();
        for (k, x) in g.coords().iter().enumerate() {
            let u = x - 12.0;
            if u.abs() < 3.0 {
                assert!((r2.values.values()[k] - (4.0 * u * u - 2.0)).abs() < 1e-6);
                assert!((r5.values.values()[k] - 4.0 * u * u).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn current_quotients_vanish_when_expected() {
        let (_, psi) = gaussian_box();
        let policy = RegularizationPolicy::default();
        let r3 = functional_r(3, &psi, -0.5, &policy).unwrap();
        assert!(r3.values.values().iter().all(|&v| v.abs() < 1e-12));

        let g = make_grid(1, 32, 2.0 * PI).unwrap();
        let wave = ComplexField::from_fn(g, |x, _| Complex64::from_polar(1.0, 2.0 * x));
        let r1 = functional_r(1, &wave, -0.5, &policy).unwrap();
        assert_eq!(r1.regularized, 0);
        assert!(r1.values.values().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn functional_index_validation() {
        let g = make_grid(1, 8, 1.0).unwrap();
        let psi = ComplexField::zeros(g);
        assert!(functional_r(0, &psi, -0.5, &RegularizationPolicy::default()).is_err());
        assert!(functional_r(6, &psi, -0.5, &RegularizationPolicy::default()).is_err());
        let z = functional_r(2, &psi, -0.5, &RegularizationPolicy::default()).unwrap();
        assert_eq!(z.regularized, 8);
        assert!(z.values.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn policy_validation() {
        assert!(RegularizationPolicy::new(0.0).is_err());
        assert!(RegularizationPolicy::new(f64::NAN).is_err());
        assert!(RegularizationPolicy::new(1e-10).is_ok());
    }
}
