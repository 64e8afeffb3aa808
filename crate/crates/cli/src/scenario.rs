//! Scenario files: a JSON description of plant, coupling, observers, gain
//! source, initial conditions and horizon.

use std::path::Path;

use coupled_consensus::{
    Complex64, CouplingNetwork, DMatrix, DVector, Error as CoreError, GainSpec, ObserverGraph, Plant,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub n: usize,
    pub m: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    pub n_agents: usize,
    pub adjacency: Vec<Vec<f64>>,
    pub self_gains: Vec<f64>,
    /// Multiplies `self_gains`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Multiplies `adjacency`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    pub alpha: Vec<Vec<f64>>,
    pub pinning: Vec<f64>,
    #[serde(default = "default_mu")]
    pub mu: f64,
}

fn default_mu() -> f64 {
    coupled_consensus::network::DEFAULT_MU
}

/// A pole written either as a bare real number or as `{"re": .., "im": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Pole {
    Real(f64),
    Complex { re: f64, im: f64 },
}

impl Pole {
    pub fn value(self) -> Complex64 {
        match self {
            Pole::Real(re) => Complex64::new(re, 0.0),
            Pole::Complex { re, im } => Complex64::new(re, im),
        }
    }
}

/// Exactly one source for the feedback gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GainSection {
    Explicit {
        f: Vec<Vec<f64>>,
    },
    Spec {
        dominant_poles: Vec<Pole>,
        sigmas: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<Vec<Vec<f64>>>,
    },
    /// Riccati gain with state weight `q`.
    Theorem1 {
        q: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub leader: Vec<f64>,
    pub agents: Vec<Vec<f64>>,
    pub observers: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub plant: PlantSection,
    pub coupling: CouplingSection,
    pub observers: ObserverSection,
    pub gain: GainSection,
    pub initial: InitialSection,
    pub t_final: f64,
    pub step: f64,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
}

pub fn default_thresholds() -> Vec<f64> {
    vec![0.5]
}

/// The gain source after conversion to matrices.
#[derive(Debug, Clone)]
pub enum GainSource {
    Explicit(DMatrix<f64>),
    Spec(GainSpec),
    Theorem1(DMatrix<f64>),
}

/// A validated scenario file in library types.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub plant: Plant,
    /// Coupling with `rho` and `epsilon` already applied.
    pub coupling: CouplingNetwork,
    pub observers: ObserverGraph,
    pub gain: GainSource,
    pub leader_init: DVector<f64>,
    pub agent_inits: Vec<DVector<f64>>,
    pub observer_inits: Vec<DVector<f64>>,
    pub t_final: f64,
    pub step: f64,
    pub thresholds: Vec<f64>,
}

fn matrix(field: &str, rows: &[Vec<f64>], shape: (usize, usize)) -> Result<DMatrix<f64>, CoreError> {
    if rows.len() != shape.0 {
        return Err(CoreError::Dimension {
            what: format!("{field} rows"),
            expected: shape.0.to_string(),
            found: rows.len().to_string(),
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != shape.1 {
            return Err(CoreError::Dimension {
                what: format!("{field}[{i}] columns"),
                expected: shape.1.to_string(),
                found: row.len().to_string(),
            });
        }
    }
    Ok(DMatrix::from_fn(shape.0, shape.1, |i, j| rows[i][j]))
}

fn vector(field: &str, values: &[f64], len: usize) -> Result<DVector<f64>, CoreError> {
    if values.len() != len {
        return Err(CoreError::Dimension {
            what: field.to_string(),
            expected: len.to_string(),
            found: values.len().to_string(),
        });
    }
    Ok(DVector::from_column_slice(values))
}

fn vectors(field: &str, values: &[Vec<f64>], count: usize, len: usize) -> Result<Vec<DVector<f64>>, CoreError> {
    if values.len() != count {
        return Err(CoreError::Dimension {
            what: field.to_string(),
            expected: count.to_string(),
            found: values.len().to_string(),
        });
    }
    values
        .iter()
        .enumerate()
        .map(|(i, v)| vector(&format!("{field}[{i}]"), v, len))
        .collect()
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl ScenarioFile {
    pub fn parse(source: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(source)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }

    /// Reads and parses a scenario file, returning the source text for
    /// later diagnostics.
    pub fn read(path: &Path) -> Result<(Self, String), CliError> {
        let source = std::fs::read_to_string(path).map_err(|e| CliError::Read {
            path: path.to_path_buf(),
            source: e,
        })?;
        let file = Self::parse(&source).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Ok((file, source))
    }

    /// [`resolve`](Self::resolve) with validation failures located in the
    /// file's source text.
    pub fn resolve_at(&self, path: &Path, source: &str) -> Result<ResolvedScenario, CliError> {
        self.resolve().map_err(|e| CliError::invalid(path, source, e))
    }

    /// Converts to library types, checking every declared dimension.
    pub fn resolve(&self) -> Result<ResolvedScenario, CoreError> {
        let (n, m) = (self.plant.n, self.plant.m);
        let plant = Plant::new(
            matrix("plant.a", &self.plant.a, (n, n))?,
            matrix("plant.b", &self.plant.b, (n, m))?,
        )?;

        let agents = self.coupling.n_agents;
        let rho = self.coupling.rho.unwrap_or(1.0);
        let epsilon = self.coupling.epsilon.unwrap_or(1.0);
        for (field, value) in [("coupling.rho", rho), ("coupling.epsilon", epsilon)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(CoreError::Validation {
                    field: field.into(),
                    reason: format!("must be a nonnegative number, got {value}"),
                });
            }
        }
        let coupling = CouplingNetwork::new(
            matrix("coupling.adjacency", &self.coupling.adjacency, (agents, agents))?,
            vector("coupling.self_gains", &self.coupling.self_gains, agents)?,
        )?
        .scaled(rho, epsilon)?;

        let observers = ObserverGraph::new(
            matrix("observers.alpha", &self.observers.alpha, (agents, agents))?,
            vector("observers.pinning", &self.observers.pinning, agents)?,
            self.observers.mu,
        )?;

        let gain = match &self.gain {
            GainSection::Explicit { f } => GainSource::Explicit(matrix("gain.explicit.f", f, (m, n))?),
            GainSection::Spec {
                dominant_poles,
                sigmas,
                v,
            } => {
                let poles = dominant_poles.iter().map(|p| p.value()).collect();
                let spec = match v {
                    None => GainSpec::new(poles, sigmas.clone())?,
                    Some(v) => GainSpec::with_mixing(poles, sigmas.clone(), matrix("gain.spec.v", v, (m, m))?)?,
                };
                GainSource::Spec(spec)
            }
            GainSection::Theorem1 { q } => GainSource::Theorem1(matrix("gain.theorem1.q", q, (n, n))?),
        };

        let leader_init = vector("initial.leader", &self.initial.leader, n)?;
        let agent_inits = vectors("initial.agents", &self.initial.agents, agents, n)?;
        let observer_inits = vectors("initial.observers", &self.initial.observers, agents, n)?;
        for (field, value) in [("step", self.step), ("t_final", self.t_final)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(CoreError::Validation {
                    field: field.into(),
                    reason: format!("must be positive, got {value}"),
                });
            }
        }
        if self.t_final < self.step {
            return Err(CoreError::Validation {
                field: "t_final".into(),
                reason: format!("must cover at least one step of {}", self.step),
            });
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(CoreError::Validation {
                field: "thresholds".into(),
                reason: format!("must be positive, got {t}"),
            });
        }
        Ok(ResolvedScenario {
            plant,
            coupling,
            observers,
            gain,
            leader_init,
            agent_inits,
            observer_inits,
            t_final: self.t_final,
            step: self.step,
            thresholds: self.thresholds.clone(),
        })
    }

    /// Copy of this scenario with the gain replaced by an explicit matrix.
    pub fn with_explicit_gain(&self, f: &DMatrix<f64>) -> Self {
        Self {
            gain: GainSection::Explicit { f: rows_of(f) },
            ..self.clone()
        }
    }
}

/// Converts a matrix to nested rows for serialization.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    rows_of(m)
}
