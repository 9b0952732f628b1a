//! Run configuration: JSON files with an `experiment` tag, model parameters
//! and numerics. Everything is validated before any computation starts.

use std::fs;
use std::path::{Path, PathBuf};

use polaron_core::experiments::{SweepParameter, TimeGrid};
use polaron_core::polaron::{FixedPointOptions, QuadSettings};
use polaron_core::spectrum::{linspace, Broadening, Denominator, SpectrumMethod};
use polaron_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    pub model: ModelParams,
    pub numeric: Numeric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Experiment {
    DeltaRSweep {
        parameter: SweepParameter,
        values: Vec<f64>,
    },
    Dynamics {
        /// Couplings to run; defaults to `model.g`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        couplings: Option<Vec<f64>>,
        time: TimeGrid,
    },
    OnsetScan {
        /// Qubit-bath strengths to scan; defaults to `model.alpha`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphas: Option<Vec<f64>>,
        /// Couplings to scan; defaults to `model.g`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g_values: Option<ValueGrid>,
        dt: f64,
    },
    Spectrum {
        omega_grid: ValueGrid,
        methods: Vec<SpectrumMethod>,
        #[serde(default)]
        resonant: bool,
        #[serde(default)]
        denominator: Denominator,
        #[serde(default = "default_broadening")]
        broadening: Broadening,
    },
    BathCheck,
    ChainMap,
}

fn default_broadening() -> Broadening {
    Broadening::LocalSpacing
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::DeltaRSweep { .. } => "delta_r_sweep",
            Experiment::Dynamics { .. } => "dynamics",
            Experiment::OnsetScan { .. } => "onset_scan",
            Experiment::Spectrum { .. } => "spectrum",
            Experiment::BathCheck => "bath_check",
            Experiment::ChainMap => "chain_map",
        }
    }
}

/// Inclusive linear grid `[min, max]` with `points` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl ValueGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            vec![self.min]
        } else {
            linspace(self.min, self.max, self.points)
        }
    }

    fn validate(&self, field: &str) -> Result<(), CliError> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(CliError::field(field, "bounds must be finite"));
        }
        if self.points == 0 {
            return Err(CliError::field(
                format!("{field}.points"),
                "must be positive",
            ));
        }
        if self.max < self.min {
            return Err(CliError::field(format!("{field}.max"), "must be >= min"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numeric {
    pub n_modes: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_quad_rel_tol")]
    pub quad_rel_tol: f64,
}

fn default_tolerance() -> f64 {
    FixedPointOptions::default().tolerance
}

fn default_damping() -> f64 {
    FixedPointOptions::default().damping
}

fn default_max_iterations() -> usize {
    FixedPointOptions::default().max_iterations
}

fn default_quad_rel_tol() -> f64 {
    FixedPointOptions::default().quad.rel_tol
}

impl Numeric {
    pub fn new(n_modes: usize) -> Self {
        Numeric {
            n_modes,
            tolerance: default_tolerance(),
            damping: default_damping(),
            max_iterations: default_max_iterations(),
            quad_rel_tol: default_quad_rel_tol(),
        }
    }

    pub fn fixed_point(&self) -> FixedPointOptions {
        let d = FixedPointOptions::default();
        FixedPointOptions {
            damping: self.damping,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            quad: QuadSettings {
                rel_tol: self.quad_rel_tol,
                ..d.quad
            },
            ..d
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.n_modes == 0 {
            return Err(CliError::field("numeric.n_modes", "must be positive"));
        }
        for (field, v) in [
            ("numeric.tolerance", self.tolerance),
            ("numeric.quad_rel_tol", self.quad_rel_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::field(field, "must be positive"));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(CliError::field("numeric.damping", "must lie in (0, 1]"));
        }
        if self.max_iterations == 0 {
            return Err(CliError::field(
                "numeric.max_iterations",
                "must be positive",
            ));
        }
        Ok(())
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::field(field, "must be positive"))
    }
}

fn check_values(field: &str, values: &[f64], allow_empty: bool) -> Result<(), CliError> {
    if values.is_empty() && !allow_empty {
        return Err(CliError::field(field, "must not be empty"));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(CliError::field(
            field,
            format!("{v} is not a finite non-negative number"),
        ));
    }
    Ok(())
}

fn check_model(p: &ModelParams) -> Result<(), CliError> {
    p.validate().map_err(|e| match e {
        polaron_core::Error::InvalidParameter { field, reason } => {
            CliError::field(format!("model.{field}"), reason)
        }
        other => CliError::Config(other.to_string()),
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check_model(&self.model)?;
        self.numeric.validate()?;
        match &self.experiment {
            Experiment::DeltaRSweep { parameter, values } => {
                check_values("values", values, true)?;
                for &v in values {
                    check_model(&parameter.apply(&self.model, v))?;
                }
            }
            Experiment::Dynamics { couplings, time } => {
                if let Some(c) = couplings {
                    check_values("couplings", c, false)?;
                }
                positive("time.t_max", time.t_max)?;
                positive("time.dt", time.dt)?;
            }
            Experiment::OnsetScan {
                alphas,
                g_values,
                dt,
            } => {
                if let Some(a) = alphas {
                    check_values("alphas", a, false)?;
                }
                if let Some(g) = g_values {
                    g.validate("g_values")?;
                    if g.min < 0.0 {
                        return Err(CliError::field("g_values.min", "must be non-negative"));
                    }
                }
                positive("dt", *dt)?;
            }
            Experiment::Spectrum {
                omega_grid,
                methods,
                broadening,
                ..
            } => {
                omega_grid.validate("omega_grid")?;
                if omega_grid.min <= 0.0 {
                    return Err(CliError::field("omega_grid.min", "must be positive"));
                }
                if methods.is_empty() {
                    return Err(CliError::field("methods", "must not be empty"));
                }
                if let Broadening::Fixed(e) = broadening {
                    positive("broadening.fixed", *e)?;
                }
            }
            Experiment::BathCheck | Experiment::ChainMap => {}
        }
        Ok(())
    }
}

/// A grid of up to three model parameters applied to a base run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub grid: Vec<GridAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub parameter: ModelField,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelField {
    Delta,
    Omega,
    G,
    Alpha,
    AlphaCav,
    OmegaC,
}

impl ModelField {
    pub fn name(self) -> &'static str {
        match self {
            ModelField::Delta => "delta",
            ModelField::Omega => "omega",
            ModelField::G => "g",
            ModelField::Alpha => "alpha",
            ModelField::AlphaCav => "alpha_cav",
            ModelField::OmegaC => "omega_c",
        }
    }

    /// Sets the field on the base run. Per-run lists of the same parameter
    /// are dropped so that the grid value is used.
    pub fn apply(self, cfg: &mut RunConfig, value: f64) {
        let m = &mut cfg.model;
        match self {
            ModelField::Delta => m.delta = value,
            ModelField::Omega => m.omega = value,
            ModelField::G => m.g = value,
            ModelField::Alpha => m.alpha = value,
            ModelField::AlphaCav => m.alpha_cav = value,
            ModelField::OmegaC => m.omega_c = value,
        }
        match (&mut cfg.experiment, self) {
            (Experiment::Dynamics { couplings, .. }, ModelField::G) => *couplings = None,
            (Experiment::OnsetScan { g_values, .. }, ModelField::G) => *g_values = None,
            (Experiment::OnsetScan { alphas, .. }, ModelField::Alpha) => *alphas = None,
            _ => {}
        }
    }
}

pub const MAX_SWEEP_AXES: usize = 3;

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: SweepConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.base.numeric.validate()?;
        if self.grid.len() > MAX_SWEEP_AXES {
            return Err(CliError::field(
                "grid",
                format!("at most {MAX_SWEEP_AXES} parameters"),
            ));
        }
        for (i, a) in self.grid.iter().enumerate() {
            if self.grid[..i].iter().any(|b| b.parameter == a.parameter) {
                return Err(CliError::field(
                    "grid",
                    format!("parameter `{}` repeated", a.parameter.name()),
                ));
            }
            if let Some(v) = a.values.iter().find(|v| !v.is_finite()) {
                return Err(CliError::field(
                    format!("grid.{}", a.parameter.name()),
                    format!("{v} is not finite"),
                ));
            }
        }
        Ok(())
    }
}
