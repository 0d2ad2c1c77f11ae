//! Mixed states, density matrices and product states.
//!
//! Linear evolution acts on the density matrix `W = Σ pₖ|ψₖ⟩⟨ψₖ|` alone.
//! A nonlinear member of the family evolves each component separately, so
//! two decompositions with the same `W` generally drift apart.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{evolve, Coefficients, Potential, SimulationConfig, Trajectory};
use crate::error::{Error, Result};
use crate::functionals::modulus_phase;
use crate::grid::{ComplexField, Grid, RealField};
use crate::states::gaussian;

/// Weighted ensemble of normalized pure states on one grid.
#[derive(Debug, Clone)]
pub struct MixedState {
    components: Vec<(f64, ComplexField)>,
}

impl MixedState {
    pub fn new(components: Vec<(f64, ComplexField)>) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return Err(Error::InvalidArgument("empty ensemble".into()));
        };
        let grid = *first.grid();
        let mut total = 0.0;
        for (p, psi) in &components {
            grid.ensure_same(psi.grid())?;
            if !(p.is_finite() && *p > 0.0) {
                return Err(Error::InvalidArgument(format!("weight {p} is not a probability")));
            }
            let drift = (psi.norm_sqr() - 1.0).abs();
            if drift > 1e-10 {
                return Err(Error::NotNormalized(drift));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weights sum to {total}")));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[(f64, ComplexField)] {
        &self.components
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].1.grid()
    }
}

/// Kernel `W(x, x')` of a 1D mixed state sampled on the grid, stored together
/// with the quadrature weight so that `Tr W = dx·Σ W(xᵢ, xᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    grid: Grid,
    kernel: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn kernel(&self) -> &DMatrix<Complex64> {
        &self.kernel
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn trace(&self) -> f64 {
        self.kernel.diagonal().iter().map(|v| v.re).sum::<f64>() * self.grid.dx()
    }

    /// `Tr W²`.
    pub fn purity(&self) -> f64 {
        let dx = self.grid.dx();
        self.kernel.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx * dx
    }

    /// Hilbert–Schmidt distance `(∬|W₁ − W₂|²)^{1/2}`.
    pub fn hilbert_schmidt_distance(&self, other: &DensityMatrix) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok((&self.kernel - &other.kernel).norm() * self.grid.dx())
    }

    /// `½ Tr|W₁ − W₂|`, from the eigenvalues of the Hermitian difference.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let diff = (&self.kernel - &other.kernel) * Complex64::new(self.grid.dx(), 0.0);
        let eig = SymmetricEigen::new(diff);
        Ok(0.5 * eig.eigenvalues.iter().map(|v| v.abs()).sum::<f64>())
    }
}

fn kernel_of(grid: Grid, components: &[(f64, &ComplexField)]) -> DMatrix<Complex64> {
    let n = grid.len();
    let mut kernel = DMatrix::zeros(n, n);
    for &(p, psi) in components {
        let v = psi.values();
        for j in 0..n {
            let right = v[j].conj() * p;
            for i in 0..n {
                kernel[(i, j)] += v[i] * right;
            }
        }
    }
    kernel
}

/// Density matrix of a 1D ensemble.
pub fn density_matrix(state: &MixedState) -> Result<DensityMatrix> {
    let grid = *state.grid();
    if grid.dimension() != 1 {
        return Err(Error::InvalidGrid("density matrices are built on 1D grids".into()));
    }
    let refs: Vec<_> = state.components.iter().map(|(p, psi)| (*p, psi)).collect();
    Ok(DensityMatrix { grid, kernel: kernel_of(grid, &refs) })
}

/// Two orthonormal packets at `L/2 ± separation/2`: Gaussians of the given
/// width, the second Gram–Schmidt orthogonalized against the first.
pub fn gaussian_pair(grid: &Grid, separation: f64, width: f64) -> Result<(ComplexField, ComplexField)> {
    if grid.dimension() != 1 {
        return Err(Error::InvalidGrid("gaussian pairs are defined in 1D".into()));
    }
    let l = grid.length();
    if !(separation.is_finite() && separation > 0.0 && separation < l) {
        return Err(Error::InvalidArgument(format!(
            "separation must lie in (0, {l}), got {separation}"
        )));
    }
    let a = gaussian(grid, 0.5 * (l - separation), width, 0.0)?;
    let b = gaussian(grid, 0.5 * (l + separation), width, 0.0)?;
    let overlap = a.inner(&b)?;
    if overlap.norm() > 0.99 {
        return Err(Error::InvalidArgument("packets overlap too strongly to orthogonalize".into()));
    }
    let values = b.values().iter().zip(a.values()).map(|(bv, av)| bv - av * overlap).collect();
    Ok((a, ComplexField::new(*grid, values)?.normalized()))
}

/// The standard scenario: [`gaussian_pair`] at `L/2 ± L/8` with width `L/32`.
pub fn canonical_pair(grid: &Grid) -> Result<(ComplexField, ComplexField)> {
    let l = grid.length();
    gaussian_pair(grid, 0.25 * l, l / 32.0)
}

/// `A = {(½, ψa), (½, ψb)}` and `B = {(½, cosθ·ψa + sinθ·ψb),
/// (½, −sinθ·ψa + cosθ·ψb)}` for orthonormal `ψa, ψb`. Equal-weight
/// mixtures are basis independent on their span, so both have the same
/// density matrix; on 1D grids this is checked before returning.
pub fn equivalent_decompositions(
    psi_a: &ComplexField,
    psi_b: &ComplexField,
    angle: f64,
) -> Result<(MixedState, MixedState)> {
    psi_a.grid().ensure_same(psi_b.grid())?;
    let overlap = psi_a.inner(psi_b)?.norm();
    if overlap > 1e-10 {
        return Err(Error::InvalidArgument(format!("components overlap by {overlap:e}")));
    }
    let (s, c) = angle.sin_cos();
    let rotate = |ca: f64, cb: f64| {
        let values = psi_a.values().iter().zip(psi_b.values()).map(|(a, b)| a * ca + b * cb).collect();
        ComplexField::new(*psi_a.grid(), values)
    };
    let a = MixedState::new(vec![(0.5, psi_a.clone()), (0.5, psi_b.clone())])?;
    let b = MixedState::new(vec![(0.5, rotate(c, s)?), (0.5, rotate(-s, c)?)])?;
    if psi_a.grid().dimension() == 1 {
        let gap = density_matrix(&a)?.hilbert_schmidt_distance(&density_matrix(&b)?)?;
        if gap > 1e-12 {
            return Err(Error::Invariant(format!("decompositions differ by {gap:e}")));
        }
    }
    Ok((a, b))
}

/// Evolves every component of the ensemble independently.
pub fn evolve_mixed(
    c: &Coefficients,
    potential: &Potential,
    state: &MixedState,
    config: &SimulationConfig,
) -> Result<Vec<Trajectory>> {
    state
        .components
        .par_iter()
        .map(|(_, psi)| evolve(c, potential, psi, config))
        .collect()
}

/// Distance between the density matrices obtained by evolving two
/// decompositions of the same initial mixed state.
#[derive(Debug, Clone)]
pub struct MixedDivergence {
    pub times: Vec<f64>,
    /// Hilbert–Schmidt distance per frame.
    pub distance: Vec<f64>,
    pub trace_distance: Option<Vec<f64>>,
}

impl MixedDivergence {
    pub fn max(&self) -> f64 {
        self.distance.iter().cloned().fold(0.0, f64::max)
    }

    pub fn last(&self) -> f64 {
        *self.distance.last().unwrap_or(&0.0)
    }
}

pub fn mixed_divergence(
    c: &Coefficients,
    potential: &Potential,
    a: &MixedState,
    b: &MixedState,
    config: &SimulationConfig,
    with_trace_distance: bool,
) -> Result<MixedDivergence> {
    a.grid().ensure_same(b.grid())?;
    if a.grid().dimension() != 1 {
        return Err(Error::InvalidGrid("density matrices are built on 1D grids".into()));
    }
    let gap = density_matrix(a)?.hilbert_schmidt_distance(&density_matrix(b)?)?;
    if gap > 1e-10 {
        return Err(Error::Invariant(format!("initial density matrices differ by {gap:e}")));
    }
    let (ta, tb) = rayon::join(
        || evolve_mixed(c, potential, a, config),
        || evolve_mixed(c, potential, b, config),
    );
    let (ta, tb) = (ta?, tb?);
    let grid = *a.grid();
    let frames = ta[0].frames.len();
    let kernel_at = |state: &MixedState, trajs: &[Trajectory], f: usize| {
        let refs: Vec<_> = state
            .components
            .iter()
            .zip(trajs)
            .map(|((p, _), t)| (*p, &t.frames[f].psi))
            .collect();
        DensityMatrix { grid, kernel: kernel_of(grid, &refs) }
    };
    let rows: Vec<(f64, f64, Option<f64>)> = (0..frames)
        .into_par_iter()
        .map(|f| {
            let wa = kernel_at(a, &ta, f);
            let wb = kernel_at(b, &tb, f);
            let hs = wa.hilbert_schmidt_distance(&wb)?;
            let td = if with_trace_distance { Some(wa.trace_distance(&wb)?) } else { None };
            Ok((ta[0].frames[f].t, hs, td))
        })
        .collect::<Result<_>>()?;
    Ok(MixedDivergence {
        times: rows.iter().map(|r| r.0).collect(),
        distance: rows.iter().map(|r| r.1).collect(),
        trace_distance: with_trace_distance.then(|| rows.iter().map(|r| r.2.unwrap_or(0.0)).collect()),
    })
}

/// `ψ(x, y) = φ(x)χ(y)` on the square grid over the 1D grid of `phi`.
pub fn tensor_product(phi: &ComplexField, chi: &ComplexField) -> Result<ComplexField> {
    let g = *phi.grid();
    g.ensure_same(chi.grid())?;
    if g.dimension() != 1 {
        return Err(Error::InvalidGrid("tensor factors must be 1D".into()));
    }
    let n = g.points_per_axis();
    let (a, b) = (phi.values(), chi.values());
    let values = (0..n * n).map(|k| a[k / n] * b[k % n]).collect();
    ComplexField::new(g.square(), values)
}

/// `∫|Ψ(x, y)|² dy` of a 2D field, as a field on the 1D axis grid.
pub fn marginal_density(psi: &ComplexField) -> Result<RealField> {
    let g = *psi.grid();
    if g.dimension() != 2 {
        return Err(Error::InvalidGrid("marginal density needs a 2D field".into()));
    }
    let n = g.points_per_axis();
    let values = psi
        .values()
        .chunks(n)
        .map(|row| row.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dx())
        .collect();
    RealField::new(g.axis(), values)
}

/// Product-state check for an additive potential `V₁(x) + V₂(y)`.
#[derive(Debug, Clone)]
pub struct SeparabilityReport {
    pub times: Vec<f64>,
    /// Grid L² distance between the 2D solution and the product of the 1D
    /// solutions, per frame.
    pub residuals: Vec<f64>,
    pub residual_sup: f64,
}

/// Evolves `φ ⊗ χ` in 2D under `V₁ + V₂` and compares with the product of
/// the 1D evolutions of `φ` under `V₁` and `χ` under `V₂`.
pub fn separability_residual(
    c: &Coefficients,
    v1: &Potential,
    v2: &Potential,
    phi: &ComplexField,
    chi: &ComplexField,
    config: &SimulationConfig,
) -> Result<SeparabilityReport> {
    let psi0 = tensor_product(phi, chi)?;
    let v = Potential::additive(v1, v2)?;
    if c.alpha2 != 0.0 {
        // the 2D phase is unwrapped from the product; it must start on the
        // branch S₁ + S₂ for the α₂ term to factor
        let joint = modulus_phase(&psi0, &config.policy).reference_phase();
        let parts = modulus_phase(phi, &config.policy).reference_phase()
            + modulus_phase(chi, &config.policy).reference_phase();
        if (joint - parts).abs() > 1e-9 {
            return Err(Error::InvalidArgument(
                "initial phases too large for a consistent product branch".into(),
            ));
        }
    }
    let ((joint, left), right) = rayon::join(
        || rayon::join(|| evolve(c, &v, &psi0, config), || evolve(c, v1, phi, config)),
        || evolve(c, v2, chi, config),
    );
    let (joint, left, right) = (joint?, left?, right?);
    let mut times = Vec::new();
    let mut residuals = Vec::new();
    for ((fj, fl), fr) in joint.frames.iter().zip(&left.frames).zip(&right.frames) {
        let product = tensor_product(&fl.psi, &fr.psi)?;
        times.push(fj.t);
        residuals.push(fj.psi.l2_distance(&product)?);
    }
    let residual_sup = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(SeparabilityReport { times, residuals, residual_sup })
}
