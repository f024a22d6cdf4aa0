//! Declarative run configuration, read from TOML.
//!
//! Every section is optional. Absent `[model]` and `[bath]` sections fall
//! back to the defaults of the command being run; absent fields inside a
//! present section take the generic defaults `ε = β = 1`, `Δ = 3`, `γ = 0`,
//! `ω_c = 5`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sbeq::pimc::PimcSettings;
use sbeq::{BathParams, Method, ModelParams};
use serde::{Deserialize, Deserializer, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// Anything a table row can be computed with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MethodName {
    Perturbative(Method),
    Pimc,
    Adiabatic,
}

impl MethodName {
    pub const PIMC: &'static str = "pimc";
    pub const ADIABATIC: &'static str = "adiabatic";

    pub fn all() -> Vec<MethodName> {
        let mut v: Vec<_> = Method::ALL.into_iter().map(MethodName::Perturbative).collect();
        v.extend([MethodName::Pimc, MethodName::Adiabatic]);
        v
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodName::Perturbative(m) => write!(f, "{m}"),
            MethodName::Pimc => f.write_str(Self::PIMC),
            MethodName::Adiabatic => f.write_str(Self::ADIABATIC),
        }
    }
}

impl FromStr for MethodName {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            Self::PIMC => Ok(MethodName::Pimc),
            Self::ADIABATIC => Ok(MethodName::Adiabatic),
            _ => s
                .parse::<Method>()
                .map(MethodName::Perturbative)
                .map_err(|_| ConfigError::Invalid(format!("unknown method {s:?}"))),
        }
    }
}

impl<'de> Deserialize<'de> for MethodName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for MethodName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// A list of values, given either explicitly or as a range.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

impl Grid {
    pub fn linear(start: f64, stop: f64, points: usize) -> Self {
        Grid::Range {
            start,
            stop,
            points,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(start: f64, stop: f64, points: usize) -> Self {
        Grid::Range {
            start,
            stop,
            points,
            spacing: Spacing::Log,
        }
    }

    /// Expanded values; ranges include both ends.
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        let v = match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Range {
                start,
                stop,
                points,
                spacing,
            } => {
                if points == 0 {
                    return invalid("grid range needs at least one point");
                }
                if spacing == Spacing::Log && !(start > 0.0 && stop > 0.0) {
                    return invalid("log grid needs positive ends");
                }
                let frac = |k: usize| {
                    if points == 1 {
                        0.0
                    } else {
                        k as f64 / (points - 1) as f64
                    }
                };
                (0..points)
                    .map(|k| match spacing {
                        Spacing::Linear => start + (stop - start) * frac(k),
                        Spacing::Log => start * (stop / start).powf(frac(k)),
                    })
                    .collect()
            }
        };
        if v.is_empty() {
            return invalid("grid is empty");
        }
        if v.iter().any(|x| !x.is_finite()) {
            return invalid("grid has non-finite values");
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("grid must be strictly increasing");
        }
        Ok(v)
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            delta: 3.0,
            beta: 1.0,
        }
    }
}

impl ModelSection {
    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        ModelParams::new(self.epsilon, self.delta, self.beta).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    pub gamma: f64,
    pub omega_c: f64,
}

impl Default for BathSection {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            omega_c: 5.0,
        }
    }
}

impl BathSection {
    pub fn params(&self) -> Result<BathParams, ConfigError> {
        BathParams::new(self.gamma, self.omega_c).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PimcSection {
    pub steps: usize,
    pub n_samples: u64,
    pub seed: u64,
    pub n_batches: usize,
}

impl Default for PimcSection {
    fn default() -> Self {
        Self {
            steps: 256,
            n_samples: 100_000,
            seed: 0,
            n_batches: 100,
        }
    }
}

impl PimcSection {
    pub fn settings(&self) -> Result<PimcSettings, ConfigError> {
        let s = PimcSettings {
            steps: self.steps,
            n_samples: self.n_samples,
            seed: self.seed,
            n_batches: self.n_batches,
            ..Default::default()
        };
        s.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    #[default]
    Gamma,
    OmegaC,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub variable: SweepVariable,
    pub grid: Grid,
    pub methods: Vec<MethodName>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            variable: SweepVariable::Gamma,
            grid: Grid::linear(0.0, 50.0, 26),
            methods: MethodName::all()
                .into_iter()
                .filter(|m| *m != MethodName::Adiabatic)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiScanSection {
    pub gammas: Vec<f64>,
    pub b_grid: Grid,
}

impl Default for PsiScanSection {
    fn default() -> Self {
        Self {
            gammas: vec![9.5, 10.0, 10.6],
            b_grid: Grid::linear(0.0025, 1.0, 400),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramSection {
    pub gamma_grid: Grid,
    pub omega_c_grid: Grid,
    pub methods: Vec<MethodName>,
    #[serde(default = "default_reference")]
    pub reference: MethodName,
}

fn default_reference() -> MethodName {
    MethodName::Pimc
}

impl Default for PhaseDiagramSection {
    fn default() -> Self {
        Self {
            gamma_grid: Grid::log(0.5, 50.0, 11),
            omega_c_grid: Grid::log(0.5, 10.0, 11),
            methods: [Method::Orig2, Method::Pol2, Method::Var2]
                .map(MethodName::Perturbative)
                .to_vec(),
            reference: MethodName::Pimc,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscontinuitySection {
    pub gamma_range: (f64, f64),
    pub scan_points: usize,
}

impl Default for DiscontinuitySection {
    fn default() -> Self {
        Self {
            gamma_range: (5.0, 15.0),
            scan_points: 21,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub out: Option<PathBuf>,
    pub model: Option<ModelSection>,
    pub bath: Option<BathSection>,
    #[serde(default)]
    pub pimc: PimcSection,
    pub sweep: Option<SweepSection>,
    pub psi_scan: Option<PsiScanSection>,
    pub phase_diagram: Option<PhaseDiagramSection>,
    pub discontinuity: Option<DiscontinuitySection>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.into(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse {
                path: path.into(),
                source,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<inline>"),
            source: Box::new(e),
        })
    }
}

/// Parameters every command is run with, after defaults are filled in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Setup {
    pub model: ModelParams,
    pub bath: BathParams,
}

impl Setup {
    pub fn resolve(config: &Config, model: ModelSection, bath: BathSection) -> Result<Self, ConfigError> {
        Ok(Self {
            model: config.model.unwrap_or(model).params()?,
            bath: config.bath.unwrap_or(bath).params()?,
        })
    }
}

/// Defaults of the tunneling-dominated fast bath (`Δ = 3`, `ω_c = 5`).
pub fn fast_bath_defaults() -> (ModelSection, BathSection) {
    (ModelSection::default(), BathSection::default())
}

/// Defaults of the slow bath with a variational jump (`Δ = 5`, `ω_c = 1.5`).
pub fn slow_bath_defaults() -> (ModelSection, BathSection) {
    (
        ModelSection {
            delta: 5.0,
            ..Default::default()
        },
        BathSection {
            omega_c: 1.5,
            ..Default::default()
        },
    )
}

pub(crate) fn check_methods(methods: &[MethodName]) -> Result<(), ConfigError> {
    if methods.is_empty() {
        return invalid("methods list is empty");
    }
    for (i, m) in methods.iter().enumerate() {
        if methods[..i].contains(m) {
            return invalid(format!("method {m} listed twice"));
        }
    }
    Ok(())
}
