//! Validation of a config into a ready-to-run plan, and the experiment
//! harnesses themselves.

use std::f64::consts::PI;

use nlgauge::dynamics::{evolve, Coefficients, Potential, SimulationConfig};
use nlgauge::ensembles::{
    equivalent_decompositions, gaussian_pair, mixed_divergence, separability_residual,
    tensor_product, MixedState,
};
use nlgauge::equivalence::{commuting_residual_with, push_forward_family};
use nlgauge::functionals::{density, RegularizationPolicy};
use nlgauge::gauge::{apply_gauge, random_scaling, GaugeTransform, Theta};
use nlgauge::grid::{make_grid, ComplexField, Grid, RealField};
use nlgauge::states::{
    free_gaussian, gaussian, periodic_gaussian, periodic_offset, phase_modulated, plane_wave,
    random_nodeless,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::config::{
    ExperimentConfig, Experiment, GaugeBlock, InitialBlock, InitialPreset, PotentialBlock,
};
use crate::error::{compute, config, CliError};
use crate::output::Table;

/// Largest relative density change tolerated by `gauge-check`.
pub const GAUGE_CHECK_TOLERANCE: f64 = 1e-12;

/// Random gauge ranges used by `gauge-check`.
const GAMMA_MAX: f64 = 5.0;
const LAMBDA_RANGE: (f64, f64) = (0.1, 10.0);

pub enum Plan {
    Evolve {
        c: Coefficients,
        v: Potential,
        psi0: ComplexField,
        sim: SimulationConfig,
        oracle: Option<(f64, f64, f64)>,
    },
    GaugeCheck {
        grid: Grid,
        states: CheckedStates,
        gauge: Option<GaugeTransform>,
        policy: RegularizationPolicy,
        trials: usize,
        seed: u64,
    },
    Equivalence {
        g: GaugeTransform,
        c: Coefficients,
        pushed: Coefficients,
        v: Potential,
        psi0: ComplexField,
        sim: SimulationConfig,
    },
    Mixprobe {
        c: Coefficients,
        v: Potential,
        a: MixedState,
        b: MixedState,
        sim: SimulationConfig,
        trace_distance: bool,
    },
    Separability {
        c: Coefficients,
        v1: Potential,
        v2: Potential,
        phi: ComplexField,
        chi: ComplexField,
        sim: SimulationConfig,
    },
    Convergence {
        c: Coefficients,
        v: Potential,
        psi0: ComplexField,
        sim: SimulationConfig,
        levels: usize,
    },
}

/// States whose density `gauge-check` compares, besides the random fields.
pub enum CheckedStates {
    None,
    Initial(ComplexField),
    Evolved(Coefficients, Potential, ComplexField, SimulationConfig),
}

/// Tables to write and diagnostics for the manifest.
pub struct Outcome {
    pub tables: Vec<(&'static str, Table)>,
    pub diagnostics: Map<String, Value>,
    /// Raised after the outputs are written.
    pub failure: Option<CliError>,
}

fn missing(block: &str, cfg: &ExperimentConfig) -> CliError {
    CliError::Config(format!("experiment {} needs a {block} block", cfg.experiment.name()))
}

fn coefficients(cfg: &ExperimentConfig) -> Result<Coefficients, CliError> {
    let c = cfg.coefficients.ok_or_else(|| missing("coefficients", cfg))?.to_core();
    c.validate().map_err(config)?;
    Ok(c)
}

fn gauge(block: &GaugeBlock) -> Result<GaugeTransform, CliError> {
    let theta = if block.theta_const == 0.0 { Theta::Zero } else { Theta::Uniform(block.theta_const) };
    GaugeTransform::new(block.gamma, block.lambda, theta).map_err(config)
}

fn single_state(block: &InitialBlock, axis: &Grid) -> Result<ComplexField, CliError> {
    let psi = match block.preset {
        InitialPreset::Gaussian { center, width, momentum } => gaussian(axis, center, width, momentum),
        InitialPreset::PeriodicGaussian { center, width, momentum } => {
            periodic_gaussian(axis, center, width, momentum)
        }
        InitialPreset::PlaneWave { mode } => Ok(plane_wave(axis, mode)),
        InitialPreset::TwoGaussian { .. } => {
            return Err(CliError::Config("the two-gaussian preset is only used by mixprobe".into()))
        }
    }
    .map_err(config)?;
    Ok(match block.modulation {
        Some(m) => phase_modulated(&psi, m.amplitude, m.mode),
        None => psi,
    })
}

fn axis_potential(block: &PotentialBlock, axis: &Grid) -> Result<RealField, CliError> {
    let l = axis.length();
    Ok(match block {
        PotentialBlock::None => RealField::zeros(*axis),
        PotentialBlock::Harmonic { omega, center } => {
            let c = center.unwrap_or(0.5 * l);
            RealField::from_fn(*axis, |x, _| 0.5 * omega * omega * periodic_offset(x, c, l).powi(2))
        }
        PotentialBlock::Cosine { amplitude, mode, offset } => {
            let k = 2.0 * PI * *mode as f64 / l;
            RealField::from_fn(*axis, |x, _| amplitude * (k * x).cos() + offset)
        }
        PotentialBlock::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("potential file {}: {e}", path.display())))?;
            let values = text
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(format!("potential file {}: {e}", path.display())))?;
            if values.len() != axis.len() {
                return Err(CliError::Config(format!(
                    "potential file {} has {} values, grid axis has {}",
                    path.display(),
                    values.len(),
                    axis.len()
                )));
            }
            RealField::new(*axis, values).map_err(config)?
        }
    })
}

fn potential_pair(cfg: &ExperimentConfig, axis: &Grid) -> Result<(Potential, Potential), CliError> {
    let vx = axis_potential(&cfg.potential, axis)?;
    let vy = axis_potential(cfg.potential_y.as_ref().unwrap_or(&cfg.potential), axis)?;
    Ok((Potential(vx), Potential(vy)))
}

fn potential(cfg: &ExperimentConfig, grid: &Grid) -> Result<Potential, CliError> {
    let axis = grid.axis();
    if grid.dimension() == 1 {
        return Ok(Potential(axis_potential(&cfg.potential, &axis)?));
    }
    let (vx, vy) = potential_pair(cfg, &axis)?;
    Potential::additive(&vx, &vy).map_err(config)
}

fn state(cfg: &ExperimentConfig, grid: &Grid) -> Result<ComplexField, CliError> {
    let first = cfg.initial.as_ref().ok_or_else(|| missing("initial", cfg))?;
    let axis = grid.axis();
    let phi = single_state(first, &axis)?;
    if grid.dimension() == 1 {
        return Ok(phi);
    }
    let chi = single_state(cfg.initial_y.as_ref().unwrap_or(first), &axis)?;
    tensor_product(&phi, &chi).map_err(config)
}

fn simulation(cfg: &ExperimentConfig, force_dt: bool) -> Result<SimulationConfig, CliError> {
    let run = &cfg.run;
    Ok(SimulationConfig {
        dt: run.dt,
        t_final: run.t_final,
        output_every: run.output_every,
        policy: RegularizationPolicy::new(run.rho_floor_rel).map_err(config)?,
        force_dt,
    })
}

/// Checks every block the experiment uses and builds its inputs. Nothing is
/// integrated here.
pub fn plan(cfg: &ExperimentConfig, force_dt: bool) -> Result<Plan, CliError> {
    let gb = cfg.grid;
    let grid = make_grid(gb.dimension, gb.n, gb.length).map_err(config)?;
    let sim = simulation(cfg, force_dt)?;
    let one_dimensional = |what: &str| {
        if grid.dimension() == 1 {
            Ok(())
        } else {
            Err(CliError::Config(format!("{what} runs on 1D grids")))
        }
    };
    Ok(match cfg.experiment {
        Experiment::Evolve => {
            let c = coefficients(cfg)?;
            sim.validate(&grid, &c).map_err(config)?;
            let oracle = match (&cfg.initial, grid.dimension()) {
                (Some(InitialBlock { preset: InitialPreset::Gaussian { center, width, momentum }, modulation: None }), 1)
                    if c.is_linear() && (c.mu0 == 0.0 || matches!(cfg.potential, PotentialBlock::None)) =>
                {
                    Some((*center, *width, *momentum))
                }
                _ => None,
            };
            Plan::Evolve { c, v: potential(cfg, &grid)?, psi0: state(cfg, &grid)?, sim, oracle }
        }
        Experiment::GaugeCheck => {
            if cfg.run.trials == 0 && cfg.gauge.is_none() {
                return Err(CliError::Config("gauge-check needs trials > 0 or a gauge block".into()));
            }
            let states = match (&cfg.coefficients, &cfg.initial) {
                (Some(_), Some(_)) => {
                    let c = coefficients(cfg)?;
                    sim.validate(&grid, &c).map_err(config)?;
                    CheckedStates::Evolved(c, potential(cfg, &grid)?, state(cfg, &grid)?, sim)
                }
                (None, Some(_)) => CheckedStates::Initial(state(cfg, &grid)?),
                _ => CheckedStates::None,
            };
            Plan::GaugeCheck {
                grid,
                states,
                gauge: cfg.gauge.as_ref().map(gauge).transpose()?,
                policy: sim.policy,
                trials: cfg.run.trials,
                seed: cfg.run.seed,
            }
        }
        Experiment::Equivalence => {
            let c = coefficients(cfg)?;
            let g = gauge(cfg.gauge.as_ref().ok_or_else(|| missing("gauge", cfg))?)?;
            let pushed = push_forward_family(&g, &c).map_err(config)?;
            sim.validate(&grid, &c).map_err(config)?;
            sim.validate(&grid, &pushed).map_err(config)?;
            Plan::Equivalence { g, c, pushed, v: potential(cfg, &grid)?, psi0: state(cfg, &grid)?, sim }
        }
        Experiment::Mixprobe => {
            one_dimensional("mixprobe")?;
            let c = coefficients(cfg)?;
            sim.validate(&grid, &c).map_err(config)?;
            let Some(InitialBlock { preset: InitialPreset::TwoGaussian { separation, width, angle }, .. }) = cfg.initial
            else {
                return Err(CliError::Config("mixprobe needs the two-gaussian initial preset".into()));
            };
            let (pa, pb) = gaussian_pair(&grid, separation, width).map_err(config)?;
            let (a, b) = equivalent_decompositions(&pa, &pb, angle).map_err(compute)?;
            Plan::Mixprobe { c, v: potential(cfg, &grid)?, a, b, sim, trace_distance: cfg.run.trace_distance }
        }
        Experiment::Separability => {
            if grid.dimension() != 2 {
                return Err(CliError::Config("separability runs on 2D grids".into()));
            }
            let c = coefficients(cfg)?;
            sim.validate(&grid, &c).map_err(config)?;
            let axis = grid.axis();
            let first = cfg.initial.as_ref().ok_or_else(|| missing("initial", cfg))?;
            let phi = single_state(first, &axis)?;
            let chi = single_state(cfg.initial_y.as_ref().unwrap_or(first), &axis)?;
            let (v1, v2) = potential_pair(cfg, &axis)?;
            Plan::Separability { c, v1, v2, phi, chi, sim }
        }
        Experiment::Convergence => {
            let c = coefficients(cfg)?;
            sim.validate(&grid, &c).map_err(config)?;
            if cfg.run.levels < 3 {
                return Err(CliError::Config("convergence needs levels >= 3".into()));
            }
            Plan::Convergence { c, v: potential(cfg, &grid)?, psi0: state(cfg, &grid)?, sim, levels: cfg.run.levels }
        }
    })
}

fn coefficient_json(c: &Coefficients) -> Value {
    let names = ["nu1", "nu2", "mu0", "mu1", "mu2", "mu3", "mu4", "mu5", "alpha1", "alpha2"];
    Value::Object(names.iter().zip(c.to_array()).map(|(n, v)| (n.to_string(), json!(v))).collect())
}

fn max_relative_density_change(g: &GaugeTransform, psi: &ComplexField, policy: &RegularizationPolicy) -> Result<f64, CliError> {
    let out = apply_gauge(g, psi, policy).map_err(compute)?;
    let (before, after) = (density(psi), density(&out.field));
    let scale = before.max();
    let dev = before.values().iter().zip(after.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(if scale > 0.0 { dev / scale } else { dev })
}

pub fn execute(plan: &Plan) -> Result<Outcome, CliError> {
    let mut diagnostics = Map::new();
    let mut failure = None;
    let tables = match plan {
        Plan::Evolve { c, v, psi0, sim, oracle } => {
            let traj = evolve(c, v, psi0, sim).map_err(compute)?;
            let grid = *psi0.grid();
            let mut table = Table::new(if grid.dimension() == 1 {
                &["t", "x", "re", "im", "rho"][..]
            } else {
                &["t", "x", "y", "re", "im", "rho"][..]
            });
            for frame in &traj.frames {
                for (k, z) in frame.psi.values().iter().enumerate() {
                    let (x, y) = grid.point(k);
                    if grid.dimension() == 1 {
                        table.row(&[frame.t, x, z.re, z.im, z.norm_sqr()]);
                    } else {
                        table.row(&[frame.t, x, y, z.re, z.im, z.norm_sqr()]);
                    }
                }
            }
            diagnostics.insert("norm_drift".into(), json!(traj.max_norm_drift()));
            diagnostics.insert("regularized_fraction".into(), json!(traj.max_regularized_fraction()));
            diagnostics.insert("frames".into(), json!(traj.frames.len()));
            if let Some((center, width, momentum)) = oracle {
                let err = traj.frames.iter().fold(0.0f64, |m, f| {
                    let exact = free_gaussian(&grid, c.nu1, *center, *width, *momentum, f.t);
                    m.max(f.psi.max_distance(&exact).unwrap_or(f64::INFINITY))
                });
                diagnostics.insert("oracle_max_error".into(), json!(err));
            }
            vec![("frames.csv", table)]
        }
        Plan::GaugeCheck { grid, states, gauge, policy, trials, seed } => {
            let frames = match states {
                CheckedStates::Evolved(c, v, psi0, sim) => {
                    let traj = evolve(c, v, psi0, sim).map_err(compute)?;
                    traj.frames.into_iter().map(|f| (f.t, Some(f.psi))).collect()
                }
                CheckedStates::Initial(psi0) => vec![(0.0, Some(psi0.clone()))],
                CheckedStates::None => vec![(0.0, None)],
            };
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut table = Table::new(&["t", "value"]);
            let mut worst = 0.0f64;
            for (t, psi) in &frames {
                let mut dev = 0.0f64;
                if let (Some(g), Some(psi)) = (gauge, psi) {
                    dev = dev.max(max_relative_density_change(g, psi, policy)?);
                }
                for _ in 0..*trials {
                    let g = random_scaling(&mut rng, GAMMA_MAX, LAMBDA_RANGE.0, LAMBDA_RANGE.1).map_err(compute)?;
                    let field = random_nodeless(grid, 3, &mut rng);
                    dev = dev.max(max_relative_density_change(&g, &field, policy)?);
                    if let Some(psi) = psi {
                        dev = dev.max(max_relative_density_change(&g, psi, policy)?);
                    }
                }
                worst = worst.max(dev);
                table.row(&[*t, dev]);
            }
            diagnostics.insert("max_density_deviation".into(), json!(worst));
            diagnostics.insert("tolerance".into(), json!(GAUGE_CHECK_TOLERANCE));
            if worst > GAUGE_CHECK_TOLERANCE {
                failure = Some(CliError::Invariant(format!(
                    "density changed by {worst:e} relative to max rho (limit {GAUGE_CHECK_TOLERANCE:e})"
                )));
            }
            vec![("series.csv", table)]
        }
        Plan::Equivalence { g, c, pushed, v, psi0, sim } => {
            let report = commuting_residual_with(g, c, pushed, psi0, v, sim).map_err(compute)?;
            let mut table = Table::new(&["t", "value"]);
            for (t, r) in &report.residual_series {
                table.row(&[*t, *r]);
            }
            diagnostics.insert("residual_sup".into(), json!(report.residual_sup));
            diagnostics.insert("refined_residual_sup".into(), json!(report.refined_residual_sup));
            diagnostics.insert("refinement_order".into(), json!(report.refinement_order));
            diagnostics.insert("density_sup".into(), json!(report.density_sup));
            diagnostics.insert("regularized_fraction".into(), json!(report.regularized_fraction));
            diagnostics.insert("pushed_coefficients".into(), coefficient_json(&report.pushed));
            vec![("series.csv", table)]
        }
        Plan::Mixprobe { c, v, a, b, sim, trace_distance } => {
            let d = mixed_divergence(c, v, a, b, sim, *trace_distance).map_err(compute)?;
            let mut table = Table::new(&["t", "value"]);
            for (t, x) in d.times.iter().zip(&d.distance) {
                table.row(&[*t, *x]);
            }
            diagnostics.insert("max_divergence".into(), json!(d.max()));
            diagnostics.insert("final_divergence".into(), json!(d.last()));
            let mut tables = vec![("series.csv", table)];
            if let Some(td) = &d.trace_distance {
                let mut extra = Table::new(&["t", "value"]);
                for (t, x) in d.times.iter().zip(td) {
                    extra.row(&[*t, *x]);
                }
                diagnostics.insert("max_trace_distance".into(), json!(td.iter().cloned().fold(0.0, f64::max)));
                tables.push(("trace_distance.csv", extra));
            }
            tables
        }
        Plan::Separability { c, v1, v2, phi, chi, sim } => {
            let report = separability_residual(c, v1, v2, phi, chi, sim).map_err(compute)?;
            let mut table = Table::new(&["t", "value"]);
            for (t, r) in report.times.iter().zip(&report.residuals) {
                table.row(&[*t, *r]);
            }
            diagnostics.insert("residual_sup".into(), json!(report.residual_sup));
            vec![("series.csv", table)]
        }
        Plan::Convergence { c, v, psi0, sim, levels } => {
            let runs = (0..*levels)
                .map(|k| {
                    let factor = 1usize << k;
                    let cfg = SimulationConfig { output_every: usize::MAX, ..sim.refined(factor) };
                    evolve(c, v, psi0, &cfg).map(|t| (cfg.dt, t.last().psi.clone())).map_err(compute)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let errors: Vec<(f64, f64)> = runs
                .windows(2)
                .map(|w| Ok((w[0].0, w[0].1.l2_distance(&w[1].1).map_err(compute)?)))
                .collect::<Result<_, CliError>>()?;
            let mut table = Table::new(&["dt", "error", "observed_order"]);
            let mut last_order = f64::NAN;
            for (i, (dt, e)) in errors.iter().enumerate() {
                let order = errors.get(i + 1).map_or(f64::NAN, |(_, next)| (e / next).log2());
                if order.is_finite() {
                    last_order = order;
                }
                table.row(&[*dt, *e, order]);
            }
            diagnostics.insert("observed_order".into(), json!(last_order));
            vec![("convergence.csv", table)]
        }
    };
    Ok(Outcome { tables, diagnostics, failure })
}
