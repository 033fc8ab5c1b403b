//! TOML run configuration and its resolution into a [`Problem`].

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::{Field, Grid};
use crate::io::read_field_csv;
use crate::kernel::{build_kernel, ConvolutionMethod, KernelFamily, KernelSpec};
use crate::model::{ModelParams, SourceSpec, Supply, ValidationMode};
use crate::potential::PotentialParams;
use crate::solver::{Problem, RunOptions, SchemeConfig};

/// Top-level configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every random initial condition. Mandatory when one is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub mode: ValidationMode,
    pub t_final: f64,
    pub grid: GridConfig,
    pub kernel: KernelConfig,
    pub potential: PotentialConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    /// Directory that relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// One entry for 1-D, two for 2-D.
    pub cells: Vec<usize>,
    pub lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: KernelFamily,
    pub width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    pub cutoff_radius: f64,
    /// When set, the amplitude is rescaled so that `a = interior_mass` away
    /// from the boundary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_mass: Option<f64>,
    #[serde(default)]
    pub method: ConvolutionMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    /// `h = 1 - φ̄`.
    pub h: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub tau: f64,
    pub chi: f64,
    pub b: f64,
    pub c: f64,
    pub m: f64,
    #[serde(default)]
    pub h1: SourceSpec,
    #[serde(default)]
    pub h2: SourceSpec,
    pub sigma_s: SupplyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SupplyConfig {
    Constant(f64),
    File { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub phi: InitialSpec,
    pub sigma: InitialSpec,
}

/// Built-in initial fields. Profiles vary along `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Constant {
        value: f64,
    },
    /// `low + (high - low) (1 + tanh((x - position) / width)) / 2`.
    SmoothedStep {
        low: f64,
        high: f64,
        position: f64,
        width: f64,
    },
    /// `mean + amplitude U(-1, 1)`, drawn from the configuration seed.
    RandomPerturbed {
        mean: f64,
        amplitude: f64,
    },
    /// `mean + amplitude cos(π mode x / Lx)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one_usize")]
        mode: usize,
    },
    /// Values read from a field CSV.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Write field snapshots every this many steps (0 writes only the ends).
    pub snapshot_every: usize,
    pub residual_tol: f64,
    pub monitor_tol: f64,
    /// Mean-envelope slack as a multiple of `dt`.
    pub envelope_slack: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        let o = RunOptions::default();
        Self {
            snapshot_every: o.snapshot_every,
            residual_tol: o.residual_tol,
            monitor_tol: o.monitor_tol,
            envelope_slack: o.envelope_slack,
        }
    }
}

/// Parameters of the comparison and sweep drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub taus: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Amplitude of the cosine perturbation added to `φ₀` by `compare`.
    pub perturbation: f64,
    pub perturbation_mode: usize,
    /// Largest allowed `τ ‖∂ₜφ‖²` across the τ sweep, relative to its first entry.
    pub tau_bound_factor: f64,
    /// Each successive λ distance must be at most this fraction of the previous one.
    pub cauchy_factor: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            taus: vec![0.1, 0.05, 0.025, 0.0],
            lambdas: vec![1e-2, 5e-3, 2.5e-3],
            perturbation: 1e-3,
            perturbation_mode: 2,
            tau_bound_factor: 2.0,
            cauchy_factor: 0.7,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_lambda() -> f64 {
    crate::potential::DEFAULT_LAMBDA
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    fn resolve_path(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn build_grid(&self) -> Result<Grid, Error> {
        let g = &self.grid;
        let grid = match (g.cells.as_slice(), g.lengths.as_slice()) {
            ([n], [l]) => Grid::new_1d(*n, *l),
            ([nx, ny], [lx, ly]) => Grid::new_2d(*nx, *ny, *lx, *ly),
            _ => {
                return Err(Error::Config(format!(
                    "grid needs one or two cells/lengths entries, got {} and {}",
                    g.cells.len(),
                    g.lengths.len()
                )))
            }
        };
        grid.map_err(|e| Error::Config(format!("grid: {e}")))
    }

    pub fn potential_params(&self) -> Result<PotentialParams, Error> {
        PotentialParams::from_h(self.potential.h, self.potential.lambda)
            .map_err(|e| Error::Config(format!("potential: {e}")))
    }

    pub fn model_params(&self, grid: Grid) -> Result<ModelParams, Error> {
        let m = &self.model;
        let sigma_s = match &m.sigma_s {
            SupplyConfig::Constant(v) => Supply::Constant(*v),
            SupplyConfig::File { file } => Supply::Field(read_field_csv(&self.resolve_path(file), grid)?),
        };
        Ok(ModelParams {
            tau: m.tau,
            chi: m.chi,
            b: m.b,
            c: m.c,
            m: m.m,
            h1: m.h1,
            h2: m.h2,
            sigma_s,
            mode: self.mode,
        })
    }

    pub fn kernel_spec(&self, grid: &Grid) -> Result<KernelSpec, Error> {
        let k = &self.kernel;
        let spec = KernelSpec {
            family: k.family,
            width: k.width,
            amplitude: k.amplitude,
            cutoff_radius: k.cutoff_radius,
        };
        match k.interior_mass {
            Some(mass) => spec
                .with_interior_mass(grid, mass)
                .map_err(|e| Error::Config(format!("kernel: {e}"))),
            None => Ok(spec),
        }
    }

    /// Samples an initial field; `stream` separates the random draws of `φ`
    /// and `σ` under one seed.
    pub fn initial_field(&self, spec: &InitialSpec, grid: Grid, stream: u64) -> Result<Field, Error> {
        let lx = grid.lengths()[0];
        Ok(match spec {
            InitialSpec::Constant { value } => Field::constant(grid, *value),
            InitialSpec::SmoothedStep {
                low,
                high,
                position,
                width,
            } => Field::from_fn(grid, |x, _| {
                low + (high - low) * 0.5 * (1.0 + ((x - position) / width).tanh())
            }),
            InitialSpec::RandomPerturbed { mean, amplitude } => {
                let seed = self.seed.ok_or_else(|| {
                    Error::Config("a random initial condition needs `seed` (or --seed)".into())
                })?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                let v = (0..grid.len())
                    .map(|_| mean + amplitude * rng.gen_range(-1.0..=1.0))
                    .collect();
                Field::from_values(grid, v).expect("sized to grid")
            }
            InitialSpec::Cosine {
                mean,
                amplitude,
                mode,
            } => Field::from_fn(grid, |x, _| {
                mean + amplitude * (std::f64::consts::PI * *mode as f64 * x / lx).cos()
            }),
            InitialSpec::File { path } => read_field_csv(&self.resolve_path(path), grid)?,
        })
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            snapshot_every: self.output.snapshot_every,
            keep_trajectory: false,
            residual_tol: self.output.residual_tol,
            monitor_tol: self.output.monitor_tol,
            envelope_slack: self.output.envelope_slack,
        }
    }

    /// Builds every module-level object the solver needs.
    pub fn resolve(&self) -> Result<Problem, Error> {
        let grid = self.build_grid()?;
        let potential = self.potential_params()?;
        let model = self.model_params(grid)?;
        let spec = self.kernel_spec(&grid)?;
        let kernel = build_kernel(spec, grid)
            .map_err(|e| Error::Config(format!("kernel: {e}")))?
            .with_method(self.kernel.method);
        let phi0 = self.initial_field(&self.initial.phi, grid, 0)?;
        let sigma0 = self.initial_field(&self.initial.sigma, grid, 1)?;
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::Config(format!("t_final must be non-negative, got {}", self.t_final)));
        }
        self.scheme
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Problem {
            model,
            potential,
            kernel,
            scheme: self.scheme,
            t_final: self.t_final,
            phi0,
            sigma0,
        })
    }
}

/// The configuration shipped as `configs/default.toml`.
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");
