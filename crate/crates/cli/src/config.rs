//! JSON run configuration.

use std::collections::BTreeMap;
use std::path::Path;

use polaron_qme::generators::GeneratorKind;
use polaron_qme::linalg::CMatrix;
use polaron_qme::model::{ComplexEntry, DensityMatrix, Model, ModelConfig, SpectralDensityConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// How inverse temperatures and times in the config are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Values are used as given.
    #[default]
    Absolute,
    /// `β` means `β·δE_21` and `t` means `t·δE_21`, with `δE_21` the lowest gap of the bare `H_S`.
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// `|0⟩⟨0|`, i.e. `(σ_z + I)/2` for a two-level system.
    SpinUp,
    MaximallyMixed,
    Basis(usize),
    /// Row-major matrix of numbers or `[re, im]` pairs.
    Matrix(Vec<Vec<ComplexEntry>>),
}

impl InitialState {
    pub fn build(&self, n: usize) -> Result<DensityMatrix, CliError> {
        match self {
            Self::SpinUp => Ok(DensityMatrix::basis_state(n, 0)),
            Self::MaximallyMixed => Ok(DensityMatrix::maximally_mixed(n)),
            Self::Basis(k) if *k < n => Ok(DensityMatrix::basis_state(n, *k)),
            Self::Basis(k) => Err(CliError::Config(format!("basis state {k} out of range for dimension {n}"))),
            Self::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::Config(format!("initial_state matrix must be {n}x{n}")));
                }
                let m = CMatrix::from_fn(n, n, |i, j| rows[i][j].value());
                Ok(DensityMatrix::new(m)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    pub t_max: f64,
    pub steps: usize,
}

/// Either an explicit list or `count` evenly spaced values from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::List(v) => v.clone(),
            Self::Range { start, stop, count } => match count {
                0 => vec![],
                1 => vec![*start],
                _ => (0..*count).map(|k| start + (stop - start) * k as f64 / (*count - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub gammas: Axis,
    pub betas: Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub modes: usize,
    pub cutoff: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<GeneratorKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<GeneratorKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<Units>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    /// Times at which `correlation` evaluates `C(τ)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    /// Per-check tolerance overrides for `validate`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(model, method, methods, units, initial_state, time, grid, taus, oracle);
        self.tolerances.extend(other.tolerances);
        self
    }

    pub fn units(&self) -> Units {
        self.units.unwrap_or_default()
    }

    pub fn method(&self) -> GeneratorKind {
        self.method.unwrap_or(GeneratorKind::PtCcqme)
    }

    pub fn methods(&self) -> Vec<GeneratorKind> {
        self.methods.clone().unwrap_or_else(|| GeneratorKind::ALL.to_vec())
    }

    pub fn model_config(&self) -> Result<&ModelConfig, CliError> {
        self.model.as_ref().ok_or_else(|| CliError::Config("config has no `model` section".into()))
    }

    /// The model with `β` converted to absolute units.
    pub fn model(&self) -> Result<Model, CliError> {
        let cfg = self.model_config()?;
        let mut m = cfg.build()?;
        if self.units() == Units::Gap {
            let beta = cfg.bath.beta / bare_gap(&m)?;
            m = m.with_bath(m.bath.with_beta(beta)?);
        }
        Ok(m)
    }

    /// `(t_max, dt)` in absolute units.
    pub fn window(&self, model: &Model) -> Result<(f64, f64), CliError> {
        let w = self.time.ok_or_else(|| CliError::Config("config has no `time` section".into()))?;
        if !(w.t_max > 0.0) || w.steps == 0 {
            return Err(CliError::Config("time window needs t_max > 0 and steps ≥ 1".into()));
        }
        let scale = match self.units() {
            Units::Absolute => 1.0,
            Units::Gap => bare_gap(model)?,
        };
        Ok((w.t_max / scale, w.t_max / scale / w.steps as f64))
    }

    pub fn initial_state(&self, n: usize) -> Result<DensityMatrix, CliError> {
        self.initial_state.clone().unwrap_or(InitialState::SpinUp).build(n)
    }

    /// `(γ values, β values)` as written in the config.
    pub fn grid(&self) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        let g = self.grid.as_ref().ok_or_else(|| CliError::Config("config has no `grid` section".into()))?;
        let (gammas, betas) = (g.gammas.values(), g.betas.values());
        if gammas.is_empty() || betas.is_empty() {
            return Err(CliError::Config("scan grids must be non-empty".into()));
        }
        if self.methods().is_empty() {
            return Err(CliError::Config("`methods` must be non-empty".into()));
        }
        if gammas.iter().chain(&betas).any(|x| !x.is_finite()) {
            return Err(CliError::Config("scan grids must be finite".into()));
        }
        Ok((gammas, betas))
    }

    /// Cutoff frequency of the super-Ohmic density, required by γ scans.
    pub fn omega_c(&self) -> Result<f64, CliError> {
        match &self.model_config()?.bath.spectral_density {
            SpectralDensityConfig::SuperOhmic { omega_c, .. } => Ok(*omega_c),
            SpectralDensityConfig::Tabulated { .. } => {
                Err(CliError::Config("coupling scans need a super_ohmic spectral density".into()))
            }
        }
    }
}

/// Lowest gap `E_1 − E_0` of the bare system Hamiltonian.
pub fn bare_gap(model: &Model) -> Result<f64, CliError> {
    let e = polaron_qme::linalg::hermitian_eigenvalues(&model.system.hamiltonian())?;
    let gap = e[1] - e[0];
    if !(gap > 0.0) {
        return Err(CliError::Config("gap units need a non-degenerate ground state".into()));
    }
    Ok(gap)
}
