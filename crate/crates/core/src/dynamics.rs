//! The ten-parameter nonlinear family
//!
//! ```text
//! i∂ₜψ = (ν₁Δ + μ₀V)ψ + iν₂R₂ψ + Σᵢ μᵢRᵢψ + α₁ log|ψ|² ψ + α₂ (arg ψ) ψ
//! ```
//!
//! integrated with classical RK4, plus an exact Fourier split-step propagator
//! for the linear member that serves as the reference solution.
//!
//! Every term except `ν₁Δ` and `iν₂R₂` is a real multiplier of `ψ`, so the
//! density obeys `∂ₜρ = −∇·J + 2ν₂Δρ` and the norm is conserved on the
//! periodic box for every coefficient choice.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::{
    current, density, modulus_phase_anchored, nearest_branch, Functional, FunctionalSet,
    RegularizationPolicy,
};
use crate::grid::{divergence, laplacian_real, ComplexField, Grid, RealField, Spectrum};

/// Coefficients `(ν₁, ν₂, μ₀, μ₁…μ₅, α₁, α₂)` of the family.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coefficients {
    pub nu1: f64,
    pub nu2: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
    pub mu5: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Coefficients {
    pub const NAMES: [&'static str; 10] =
        ["nu1", "nu2", "mu0", "mu1", "mu2", "mu3", "mu4", "mu5", "alpha1", "alpha2"];

    /// The linear equation `i∂ₜψ = (ν₁Δ + μ₀V)ψ`.
    pub fn linear(nu1: f64, mu0: f64) -> Self {
        Self { nu1, mu0, ..Default::default() }
    }

    /// Free particle of unit mass, `ν₁ = −1/2`.
    pub fn free() -> Self {
        Self::linear(-0.5, 0.0)
    }

    pub fn from_array(a: [f64; 10]) -> Self {
        let [nu1, nu2, mu0, mu1, mu2, mu3, mu4, mu5, alpha1, alpha2] = a;
        Self { nu1, nu2, mu0, mu1, mu2, mu3, mu4, mu5, alpha1, alpha2 }
    }

    pub fn to_array(&self) -> [f64; 10] {
        [
            self.nu1, self.nu2, self.mu0, self.mu1, self.mu2, self.mu3, self.mu4, self.mu5,
            self.alpha1, self.alpha2,
        ]
    }

    pub fn mu(&self, which: Functional) -> f64 {
        match which {
            Functional::R1 => self.mu1,
            Functional::R2 => self.mu2,
            Functional::R3 => self.mu3,
            Functional::R4 => self.mu4,
            Functional::R5 => self.mu5,
        }
    }

    pub fn is_linear(&self) -> bool {
        let a = self.to_array();
        a[1] == 0.0 && a[3..].iter().all(|&v| v == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("coefficients".into()))
        }
    }

    /// Largest absolute entrywise difference.
    pub fn max_difference(&self, other: &Coefficients) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Trace and determinant of the leading-order (`k²`) symbol of the
    /// equation linearized about a uniform state, acting on
    /// `(δρ/ρ, δS)`:
    ///
    /// ```text
    /// [ −2ν₂          −2ν₁    ]
    /// [ ν₁/2 + μ₂     −2ν₁μ₁  ]
    /// ```
    ///
    /// Both are invariant under gauge push-forward.
    pub fn principal_symbol(&self) -> (f64, f64) {
        let a1 = -2.0 * self.nu1 * self.mu1;
        let a2 = 0.5 * self.nu1 + self.mu2;
        let trace = a1 - 2.0 * self.nu2;
        let det = -2.0 * self.nu2 * a1 + 2.0 * self.nu1 * a2;
        (trace, det)
    }

    /// Largest eigenvalue modulus of the principal symbol; short waves of
    /// wavenumber `k` evolve at rate up to `stiffness()·k²`.
    pub fn stiffness(&self) -> f64 {
        let (trace, det) = self.principal_symbol();
        let disc = 0.25 * trace * trace - det;
        if disc >= 0.0 {
            0.5 * trace.abs() + disc.sqrt()
        } else {
            det.sqrt()
        }
    }

    /// No short-wave mode grows: both eigenvalues of the principal symbol
    /// have non-positive real part. Outside this region the initial value
    /// problem is ill-posed and any grid refinement blows up.
    pub fn is_well_posed(&self) -> bool {
        let (trace, det) = self.principal_symbol();
        trace <= 0.0 && det >= 0.0
    }
}

/// External potential `V` entering as `μ₀V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential(pub RealField);

impl Potential {
    pub fn zero(grid: Grid) -> Self {
        Potential(RealField::zeros(grid))
    }

    pub fn field(&self) -> &RealField {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.values().iter().all(|&v| v == 0.0)
    }

    /// `V(x, y) = V₁(x) + V₂(y)` on the square grid built from two 1D
    /// potentials.
    pub fn additive(v1: &Potential, v2: &Potential) -> Result<Potential> {
        let g = *v1.0.grid();
        g.ensure_same(v2.0.grid())?;
        if g.dimension() != 1 {
            return Err(Error::InvalidArgument("additive potential needs 1D parts".into()));
        }
        let n = g.points_per_axis();
        let (a, b) = (v1.0.values(), v2.0.values());
        let values = (0..n * n).map(|k| a[k / n] + b[k % n]).collect();
        Ok(Potential(RealField::new(g.square(), values)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub dt: f64,
    pub t_final: f64,
    pub output_every: usize,
    pub policy: RegularizationPolicy,
    /// Skip the explicit-scheme step-size check.
    pub force_dt: bool,
}

impl SimulationConfig {
    pub fn new(dt: f64, t_final: f64, output_every: usize) -> Self {
        Self {
            dt,
            t_final,
            output_every,
            policy: RegularizationPolicy::default(),
            force_dt: false,
        }
    }

    /// Same run with `dt` divided by `factor` and the output cadence
    /// multiplied by it, so frames land at the same times.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            dt: self.dt / factor as f64,
            output_every: self.output_every * factor,
            ..*self
        }
    }

    /// `0.2·dx² / (d·max(|ν₁|, |ν₂|, σ, dx²))` on a `d`-dimensional grid,
    /// with `σ` the [stiffness](Coefficients::stiffness). The factor `d`
    /// accounts for `|k|²` reaching `d·(π/dx)²` at the corner mode.
    pub fn stability_bound(grid: &Grid, c: &Coefficients) -> f64 {
        let dx2 = grid.dx().powi(2);
        let rate = c.nu1.abs().max(c.nu2.abs()).max(c.stiffness()).max(dx2);
        0.2 * dx2 / (grid.dimension() as f64 * rate)
    }

    /// Number of steps; `t_final` must be an integer multiple of `dt`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if self.output_every == 0 {
            return Err(Error::InvalidArgument("output_every must be at least 1".into()));
        }
        let steps = (self.t_final / self.dt).round();
        if (steps * self.dt - self.t_final).abs() > 1e-9 * self.t_final || steps < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "t_final = {} is not a multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self, grid: &Grid, c: &Coefficients) -> Result<usize> {
        let steps = self.steps()?;
        let bound = Self::stability_bound(grid, c);
        if !self.force_dt && self.dt > bound {
            return Err(Error::UnstableTimeStep { dt: self.dt, bound });
        }
        Ok(steps)
    }
}

/// Time derivative `∂ₜψ` with regularization diagnostics.
#[derive(Debug, Clone)]
pub struct RhsEval {
    pub value: ComplexField,
    pub regularized: usize,
}

/// `∂ₜψ = −i[ν₁Δψ + μ₀Vψ + iν₂R₂ψ + Σ μᵢRᵢψ + α₁ log max(ρ,ε) ψ + α₂ S ψ]`.
pub fn rhs(
    c: &Coefficients,
    potential: &Potential,
    psi: &ComplexField,
    policy: &RegularizationPolicy,
) -> Result<RhsEval> {
    psi.grid().ensure_same(potential.0.grid())?;
    Ok(rhs_anchored(c, potential, psi, policy, None))
}

pub(crate) fn rhs_anchored(
    c: &Coefficients,
    potential: &Potential,
    psi: &ComplexField,
    policy: &RegularizationPolicy,
    anchor: Option<f64>,
) -> RhsEval {
    let grid = *psi.grid();
    let spec = Spectrum::of_complex(psi);
    let lap = if c.nu1 != 0.0 { Some(spec.laplacian()) } else { None };

    let needed = [
        c.mu1 != 0.0,
        c.mu2 != 0.0 || c.nu2 != 0.0,
        c.mu3 != 0.0,
        c.mu4 != 0.0,
        c.mu5 != 0.0,
    ];
    let set = FunctionalSet::compute(psi, &spec, c.nu1, policy, needed, lap.as_ref());

    // real multiplier m(x) and imaginary multiplier ν₂R₂
    let mut real = vec![0.0; grid.len()];
    if c.mu0 != 0.0 {
        for (m, v) in real.iter_mut().zip(potential.0.values()) {
            *m += c.mu0 * v;
        }
    }
    for which in Functional::ALL {
        let mu = c.mu(which);
        if mu != 0.0 {
            let r = set.get(which).expect("computed on demand");
            for (m, v) in real.iter_mut().zip(r.values()) {
                *m += mu * v;
            }
        }
    }
    if c.alpha1 != 0.0 && set.floor > 0.0 {
        for (m, r) in real.iter_mut().zip(set.rho.values()) {
            *m += c.alpha1 * r.max(set.floor).ln();
        }
    }
    if c.alpha2 != 0.0 {
        let split = modulus_phase_anchored(psi, policy, anchor);
        for (m, s) in real.iter_mut().zip(split.phase.values()) {
            *m += c.alpha2 * s;
        }
    }
    let r2 = if c.nu2 != 0.0 { set.get(Functional::R2) } else { None };

    let minus_i = Complex64::new(0.0, -1.0);
    let values = psi
        .values()
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let imag = r2.map_or(0.0, |r| c.nu2 * r.values()[k]);
            let mut h = p * Complex64::new(real[k], imag);
            if let Some(l) = &lap {
                h += c.nu1 * l.values()[k];
            }
            minus_i * h
        })
        .collect();
    RhsEval { value: ComplexField::from_raw(grid, values), regularized: set.regularized }
}

fn axpy(base: &ComplexField, scale: f64, dir: &ComplexField) -> ComplexField {
    let values = base
        .values()
        .iter()
        .zip(dir.values())
        .map(|(b, d)| b + d * scale)
        .collect();
    ComplexField::from_raw(*base.grid(), values)
}

fn rk4_anchored(
    c: &Coefficients,
    potential: &Potential,
    psi: &ComplexField,
    dt: f64,
    policy: &RegularizationPolicy,
    anchor: Option<f64>,
) -> ComplexField {
    let f = |state: &ComplexField| rhs_anchored(c, potential, state, policy, anchor).value;
    let k1 = f(psi);
    let k2 = f(&axpy(psi, 0.5 * dt, &k1));
    let k3 = f(&axpy(psi, 0.5 * dt, &k2));
    let k4 = f(&axpy(psi, dt, &k3));
    let values = psi
        .values()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            p + (k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i])
                * (dt / 6.0)
        })
        .collect();
    ComplexField::from_raw(*psi.grid(), values)
}

/// One classical RK4 step of size `dt`.
pub fn step_rk4(
    c: &Coefficients,
    potential: &Potential,
    psi: &ComplexField,
    dt: f64,
    policy: &RegularizationPolicy,
) -> Result<ComplexField> {
    psi.grid().ensure_same(potential.0.grid())?;
    let out = rk4_anchored(c, potential, psi, dt, policy, None);
    if !out.is_finite() {
        return Err(Error::Blowup { t: dt });
    }
    Ok(out)
}

/// One stored output time of a run.
#[derive(Debug, Clone)]
pub struct Frame {
    pub t: f64,
    pub psi: ComplexField,
    pub norm_sqr: f64,
    /// Fraction of points at or below the density floor.
    pub regularized_fraction: f64,
    /// Continuously tracked phase at the reference point (flat index 0).
    pub reference_phase: f64,
}

/// Output frames of one run, including `t = 0` and `t = t_final`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
}

impl Trajectory {
    pub fn last(&self) -> &Frame {
        self.frames.last().expect("trajectory always holds the initial frame")
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }

    /// `max_t |‖ψ_t‖² − ‖ψ_0‖²|`.
    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.frames[0].norm_sqr;
        self.frames.iter().fold(0.0, |m, f| m.max((f.norm_sqr - n0).abs()))
    }

    pub fn max_regularized_fraction(&self) -> f64 {
        self.frames.iter().fold(0.0, |m, f| m.max(f.regularized_fraction))
    }
}

/// Norm drift beyond which a run is considered unresolved.
pub const NORM_DRIFT_LIMIT: f64 = 1e-3;

fn check_initial(psi0: &ComplexField, potential: &Potential) -> Result<()> {
    psi0.grid().ensure_same(potential.0.grid())?;
    if !psi0.is_finite() {
        return Err(Error::NonFinite("initial state".into()));
    }
    let drift = (psi0.norm_sqr() - 1.0).abs();
    if drift > 1e-10 {
        return Err(Error::NotNormalized(drift));
    }
    Ok(())
}

fn regularized_fraction(psi: &ComplexField, policy: &RegularizationPolicy) -> f64 {
    let rho = density(psi);
    let eps = policy.floor(&rho);
    rho.values().iter().filter(|&&r| r <= eps).count() as f64 / rho.values().len() as f64
}

/// Follows the phase at the reference point from step to step.
fn track_reference(psi: &ComplexField, anchor: f64, policy: &RegularizationPolicy) -> f64 {
    let p0 = psi.values()[0];
    let floor = policy.rho_floor_rel * psi.values().iter().fold(0.0, |m: f64, v| m.max(v.norm_sqr()));
    if p0.norm_sqr() > floor {
        nearest_branch(p0.arg(), anchor)
    } else {
        anchor
    }
}

struct Runner<'a> {
    config: &'a SimulationConfig,
    steps: usize,
    frames: Vec<Frame>,
}

impl<'a> Runner<'a> {
    fn new(config: &'a SimulationConfig, steps: usize) -> Self {
        Self { config, steps, frames: Vec::new() }
    }

    fn record(&mut self, step: usize, psi: &ComplexField, anchor: f64) -> Result<()> {
        let t = step as f64 * self.config.dt;
        if !psi.is_finite() {
            return Err(Error::Blowup { t });
        }
        let norm_sqr = psi.norm_sqr();
        if let Some(first) = self.frames.first() {
            let drift = (norm_sqr - first.norm_sqr).abs();
            if drift > NORM_DRIFT_LIMIT {
                return Err(Error::NormDrift { t, drift, limit: NORM_DRIFT_LIMIT });
            }
        }
        if step.is_multiple_of(self.config.output_every) || step == self.steps {
            self.frames.push(Frame {
                t,
                psi: psi.clone(),
                norm_sqr,
                regularized_fraction: regularized_fraction(psi, &self.config.policy),
                reference_phase: anchor,
            });
        }
        Ok(())
    }
}

fn initial_anchor(psi0: &ComplexField, policy: &RegularizationPolicy) -> f64 {
    modulus_phase_anchored(psi0, policy, None).reference_phase()
}

/// Integrates the family with RK4 from `psi0` to `config.t_final`.
pub fn evolve(
    c: &Coefficients,
    potential: &Potential,
    psi0: &ComplexField,
    config: &SimulationConfig,
) -> Result<Trajectory> {
    let anchor = initial_anchor(psi0, &config.policy);
    evolve_from_anchor(c, potential, psi0, config, anchor)
}

/// [`evolve`] with the branch of `arg ψ₀` at the reference point given
/// explicitly (used when `ψ₀` is itself the output of a gauge map).
pub fn evolve_from_anchor(
    c: &Coefficients,
    potential: &Potential,
    psi0: &ComplexField,
    config: &SimulationConfig,
    anchor: f64,
) -> Result<Trajectory> {
    c.validate()?;
    check_initial(psi0, potential)?;
    let steps = config.validate(psi0.grid(), c)?;
    let mut anchor = anchor;
    let mut runner = Runner::new(config, steps);
    let mut psi = psi0.clone();
    runner.record(0, &psi, anchor)?;
    for step in 1..=steps {
        psi = rk4_anchored(c, potential, &psi, config.dt, &config.policy, Some(anchor));
        anchor = track_reference(&psi, anchor, &config.policy);
        runner.record(step, &psi, anchor)?;
    }
    Ok(Trajectory { frames: runner.frames })
}

/// Strang split-step solution of `i∂ₜψ = (ν₁Δ + μ₀V)ψ`: half potential
/// phase, exact kinetic phase `exp(iν₁k²dt)` in Fourier space, half
/// potential phase. Exact for any `dt` when `μ₀V ≡ 0`.
pub fn evolve_linear_exact(
    nu1: f64,
    mu0: f64,
    potential: &Potential,
    psi0: &ComplexField,
    config: &SimulationConfig,
) -> Result<Trajectory> {
    check_initial(psi0, potential)?;
    let steps = config.steps()?;
    let dt = config.dt;
    let free = mu0 == 0.0 || potential.is_zero();
    let half_kick: Vec<Complex64> = potential
        .0
        .values()
        .iter()
        .map(|v| Complex64::from_polar(1.0, -0.5 * mu0 * v * dt))
        .collect();
    let kick = |psi: &mut ComplexField| {
        if !free {
            psi.values_mut().iter_mut().zip(&half_kick).for_each(|(p, k)| *p *= k);
        }
    };

    let mut anchor = initial_anchor(psi0, &config.policy);
    let mut runner = Runner::new(config, steps);
    let mut psi = psi0.clone();
    runner.record(0, &psi, anchor)?;
    for step in 1..=steps {
        kick(&mut psi);
        let spec = Spectrum::of_complex(&psi);
        psi = spec.inverse(|idx| Complex64::from_polar(1.0, nu1 * spec.k_squared(idx) * dt));
        kick(&mut psi);
        anchor = track_reference(&psi, anchor, &config.policy);
        runner.record(step, &psi, anchor)?;
    }
    Ok(Trajectory { frames: runner.frames })
}

/// Comparison of a centred finite difference of `ρ` in time against the
/// balance law `∂ₜρ = −∇·J + 2ν₂Δρ`.
#[derive(Debug, Clone, Copy)]
pub struct ContinuityCheck {
    /// Grid L² norm of `(ρ(t+dt) − ρ(t−dt))/(2dt) + ∇·J − 2ν₂Δρ` at `t`.
    pub residual: f64,
    /// Grid L² norm of the predicted rate `−∇·J + 2ν₂Δρ`.
    pub rate: f64,
}

/// Runs RK4 with step `dt` to `t_probe + dt` and evaluates the balance law
/// at `t_probe`. `t_probe` must be a positive multiple of `dt`.
pub fn continuity_check(
    c: &Coefficients,
    potential: &Potential,
    psi0: &ComplexField,
    dt: f64,
    t_probe: f64,
    policy: &RegularizationPolicy,
) -> Result<ContinuityCheck> {
    check_initial(psi0, potential)?;
    let n = (t_probe / dt).round() as usize;
    if n == 0 || ((n as f64) * dt - t_probe).abs() > 1e-9 * t_probe {
        return Err(Error::InvalidArgument("t_probe must be a positive multiple of dt".into()));
    }
    let mut anchor = initial_anchor(psi0, policy);
    let mut psi = psi0.clone();
    let mut before = None;
    let mut at = None;
    for step in 1..=n + 1 {
        psi = rk4_anchored(c, potential, &psi, dt, policy, Some(anchor));
        if !psi.is_finite() {
            return Err(Error::Blowup { t: step as f64 * dt });
        }
        anchor = track_reference(&psi, anchor, policy);
        if step == n - 1 {
            before = Some(density(&psi));
        }
        if step == n {
            at = Some(psi.clone());
        }
    }
    let before = before.unwrap_or_else(|| density(psi0));
    let at = at.expect("n ≥ 1");
    let after = density(&psi);

    let div_j = divergence(&current(&at, c.nu1))?;
    let lap_rho = laplacian_real(&density(&at));
    let vol = at.grid().cell_volume();
    let (mut res, mut rate) = (0.0, 0.0);
    for k in 0..after.values().len() {
        let predicted = -div_j.values()[k] + 2.0 * c.nu2 * lap_rho.values()[k];
        let measured = (after.values()[k] - before.values()[k]) / (2.0 * dt);
        res += (measured - predicted).powi(2);
        rate += predicted * predicted;
    }
    Ok(ContinuityCheck { residual: (res * vol).sqrt(), rate: (rate * vol).sqrt() })
}
