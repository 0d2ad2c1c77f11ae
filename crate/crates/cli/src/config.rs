//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Evolve,
    GaugeCheck,
    Equivalence,
    Mixprobe,
    Separability,
    Convergence,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Evolve => "evolve",
            Self::GaugeCheck => "gauge-check",
            Self::Equivalence => "equivalence",
            Self::Mixprobe => "mixprobe",
            Self::Separability => "separability",
            Self::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub grid: GridBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge: Option<GaugeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialBlock>,
    /// Second factor of a product state on 2D grids; defaults to `initial`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_y: Option<InitialBlock>,
    #[serde(default)]
    pub potential: PotentialBlock,
    /// Potential along the second axis; defaults to `potential`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential_y: Option<PotentialBlock>,
    pub run: RunBlock,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub dimension: usize,
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientsBlock {
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

impl CoefficientsBlock {
    pub fn to_core(self) -> nlgauge::dynamics::Coefficients {
        nlgauge::dynamics::Coefficients::from_array([
            self.nu1, self.nu2, self.mu0, self.mu1, self.mu2, self.mu3, self.mu4, self.mu5,
            self.alpha1, self.alpha2,
        ])
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeBlock {
    pub gamma: f64,
    pub lambda: f64,
    #[serde(default)]
    pub theta_const: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialBlock {
    #[serde(flatten)]
    pub preset: InitialPreset,
    /// Optional phase factor `exp(i·a·sin(2π·mode·x/L))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<Modulation>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum InitialPreset {
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default)]
        momentum: f64,
    },
    PeriodicGaussian {
        center: f64,
        width: f64,
        #[serde(default)]
        momentum: f64,
    },
    PlaneWave {
        mode: i64,
    },
    TwoGaussian {
        separation: f64,
        width: f64,
        #[serde(default = "quarter_turn")]
        angle: f64,
    },
}

fn quarter_turn() -> f64 {
    std::f64::consts::FRAC_PI_4
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modulation {
    pub amplitude: f64,
    #[serde(default = "one")]
    pub mode: i64,
}

fn one() -> i64 {
    1
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialBlock {
    #[default]
    None,
    /// `½ω²d²` with `d` the periodic distance to `center`.
    Harmonic {
        omega: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<f64>,
    },
    /// `amplitude·cos(2π·mode·x/L) + offset`.
    Cosine {
        amplitude: f64,
        #[serde(default = "one")]
        mode: i64,
        #[serde(default)]
        offset: f64,
    },
    /// Whitespace-separated values, one per grid point along an axis.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "one_usize")]
    pub output_every: usize,
    #[serde(default = "default_floor")]
    pub rho_floor_rel: f64,
    #[serde(default)]
    pub seed: u64,
    /// Random gauges per frame in `gauge-check`.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Number of step sizes `dt, dt/2, …` in `convergence`.
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Also report the trace distance in `mixprobe`.
    #[serde(default)]
    pub trace_distance: bool,
}

fn one_usize() -> usize {
    1
}

fn default_floor() -> f64 {
    1e-12
}

fn default_trials() -> usize {
    100
}

fn default_levels() -> usize {
    3
}

/// A config file, or a manifest written by an earlier run. Manifests carry
/// the resolved config and the step-size override.
pub struct Loaded {
    pub config: ExperimentConfig,
    pub force_dt: bool,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let (config, force_dt) = match value.get("config") {
        Some(inner) if value.get("tool").is_some() => {
            let force = value.get("force_dt").and_then(|v| v.as_bool()).unwrap_or(false);
            (inner.clone(), force)
        }
        _ => (value, false),
    };
    let mut config: ExperimentConfig = serde_json::from_value(config)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    config.resolve_paths(base)?;
    Ok(Loaded { config, force_dt })
}

impl ExperimentConfig {
    /// Makes potential file paths absolute relative to the config location.
    fn resolve_paths(&mut self, base: &Path) -> Result<(), CliError> {
        for block in std::iter::once(&mut self.potential).chain(self.potential_y.as_mut()) {
            if let PotentialBlock::File { path } = block {
                let joined = if path.is_absolute() { path.clone() } else { base.join(&*path) };
                *path = joined.canonicalize().map_err(|e| {
                    CliError::Config(format!("potential file {}: {e}", joined.display()))
                })?;
            }
        }
        Ok(())
    }
}
