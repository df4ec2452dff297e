use std::path::{Path, PathBuf};

use eulerband_core::bound::MRule;
use eulerband_core::dynamics::IntegratorConfig;
use eulerband_core::flowfield::{FourierStream, ModeSpec};
use serde::{Deserialize, Serialize};

use crate::{CliError, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowSource {
    Builtin(String),
    Fourier(Vec<ModeSpec>),
}

impl FlowSource {
    pub fn build(&self) -> Result<FourierStream, CliError> {
        match self {
            FlowSource::Builtin(name) => FourierStream::builtin(name).ok_or_else(|| {
                CliError::usage(format!(
                    "unknown flow '{name}', expected one of {}",
                    FourierStream::BUILTINS.join(", ")
                ))
            }),
            FlowSource::Fourier(specs) => FourierStream::from_specs("fourier", specs)
                .map_err(|e| CliError::stage(Stage::Steadiness, e)),
        }
    }
}

/// `"equal"` or a fixed number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MSetting {
    Named(String),
    Fixed(f64),
}

impl MSetting {
    pub fn rule(&self) -> Result<MRule, CliError> {
        match self {
            MSetting::Named(s) if s == "equal" => Ok(MRule::EqualK),
            MSetting::Named(s) => Err(CliError::usage(format!(
                "M must be \"equal\" or a number, got '{s}'"
            ))),
            MSetting::Fixed(m) if *m >= 1.0 => Ok(MRule::Fixed(*m)),
            MSetting::Fixed(m) => Err(CliError::usage(format!("M = {m} must be at least 1"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    #[serde(rename = "M")]
    pub m: MSetting,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![-0.9, -0.5, 0.0, 0.5, 0.9],
            k: vec![10.0, 20.0, 40.0],
            m: MSetting::Named("equal".into()),
        }
    }
}

/// `[lo, hi, step]` per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRanges {
    pub re: [f64; 3],
    pub im: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub n_max: Vec<i32>,
    pub probes: Vec<[f64; 2]>,
    pub grid: GridRanges,
    /// Truncation order of the pseudospectrum grid; the smallest of `n_max` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n_max: Option<i32>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            n_max: vec![8, 12, 16],
            probes: vec![[0.5, 0.0], [1.5, 0.0], [0.5, 1.0], [1.5, 1.0]],
            grid: GridRanges {
                re: [-2.0, 2.0, 0.05],
                im: [-2.0, 2.0, 0.05],
            },
            grid_n_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub horizon: f64,
    /// `ε` as a fraction of the largest admissible value at each `λ`.
    pub eps_fraction: f64,
    pub n_samples: usize,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            horizon: 30.0,
            eps_fraction: 0.5,
            n_samples: 3001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusConfig {
    pub t: f64,
    pub n_max: i32,
}

impl Default for AnnulusConfig {
    fn default() -> Self {
        Self { t: 2.0, n_max: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub flow: FlowSource,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub annulus: AnnulusConfig,
    #[serde(default = "default_lyapunov_horizon")]
    pub lyapunov_horizon: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_lyapunov_horizon() -> f64 {
    30.0
}

fn default_out() -> PathBuf {
    PathBuf::from("results/")
}

impl RunConfig {
    pub fn builtin(name: &str) -> Self {
        Self {
            flow: FlowSource::Builtin(name.into()),
            integrator: IntegratorConfig::default(),
            sweep: SweepConfig::default(),
            spectrum: SpectrumConfig::default(),
            decay: DecayConfig::default(),
            annulus: AnnulusConfig::default(),
            lyapunov_horizon: default_lyapunov_horizon(),
            out: default_out(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks that do not need `Λ`.
    pub fn validate(&self) -> Result<(), CliError> {
        self.integrator
            .validate()
            .map_err(|e| CliError::usage(format!("integrator: {e}")))?;
        self.sweep.m.rule()?;
        if !self.sweep.k.windows(2).all(|w| w[0] < w[1]) || self.sweep.k.iter().any(|k| *k <= 0.0) {
            return Err(CliError::usage(
                "sweep.K must be positive and strictly ascending",
            ));
        }
        let n = &self.spectrum.n_max;
        if n.is_empty() || !n.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::usage(
                "spectrum.n_max must be nonempty and strictly ascending",
            ));
        }
        for axis in [self.spectrum.grid.re, self.spectrum.grid.im] {
            if !(axis[2] > 0.0 && axis[0] <= axis[1]) {
                return Err(CliError::usage(
                    "spectrum.grid ranges need lo ≤ hi and a positive step",
                ));
            }
        }
        if !(self.decay.eps_fraction > 0.0 && self.decay.eps_fraction < 1.0) {
            return Err(CliError::usage("decay.eps_fraction must lie in (0, 1)"));
        }
        if self.decay.horizon <= 0.0 || self.lyapunov_horizon < 10.0 {
            return Err(CliError::usage(
                "decay.horizon must be positive and lyapunov_horizon at least 10",
            ));
        }
        Ok(())
    }

    pub fn grid_n_max(&self) -> i32 {
        self.spectrum.grid_n_max.unwrap_or(self.spectrum.n_max[0])
    }
}
