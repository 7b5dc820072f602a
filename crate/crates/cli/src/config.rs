//! Scenario configuration documents.
//!
//! One format only: TOML with a `schema_version` gate. Unknown keys are
//! rejected, every numeric field must be finite, and validation failures
//! carry the path of the offending field. All randomness flows from the
//! config's seed (overridable by `--seed`); the CLI adds none.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use recbayes::filters::{Belief, IterationConfig};
use recbayes::models::{BuiltinModelId, ModelParams};
use recbayes::sim::{FilterKind, Scenario, DEFAULT_P0};

use crate::CliError;

/// The schema version this build reads.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub schema_version: u32,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub filter: FilterSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// Built-in model name.
    pub model: String,
    pub horizon: usize,
    pub seed: u64,
    /// Constant control applied at every step (exclusive with `controls`).
    pub control: Option<Vec<f64>>,
    /// Explicit per-step control schedule.
    pub controls: Option<Vec<Vec<f64>>>,
    /// Initial truth state; defaults to the origin.
    pub initial_truth: Option<Vec<f64>>,
    pub initial_belief: Option<InitialBeliefSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBeliefSection {
    pub mean: Vec<f64>,
    pub cov_diag: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub dt: Option<f64>,
    pub motion_noise: Option<Vec<f64>>,
    pub obs_noise: Option<Vec<f64>>,
    pub landmark: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    /// Filter for `run`.
    pub kind: Option<String>,
    /// Filters for `compare`.
    pub kinds: Option<Vec<String>>,
    pub epsilon: Option<f64>,
    pub max_iters: Option<usize>,
}

fn require_finite(field: &str, values: &[f64]) -> Result<(), CliError> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(CliError::config(format!("{field}[{i}]: must be finite")));
        }
    }
    Ok(())
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc: ConfigDoc =
            toml::from_str(text).map_err(|e| CliError::config(format!("config parse error: {e}")))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                doc.schema_version
            )));
        }
        doc.validate_finite()?;
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate_finite(&self) -> Result<(), CliError> {
        if let Some(c) = &self.scenario.control {
            require_finite("scenario.control", c)?;
        }
        if let Some(cs) = &self.scenario.controls {
            for (t, c) in cs.iter().enumerate() {
                require_finite(&format!("scenario.controls[{t}]"), c)?;
            }
        }
        if let Some(x) = &self.scenario.initial_truth {
            require_finite("scenario.initial_truth", x)?;
        }
        if let Some(b) = &self.scenario.initial_belief {
            require_finite("scenario.initial_belief.mean", &b.mean)?;
            require_finite("scenario.initial_belief.cov_diag", &b.cov_diag)?;
            for (i, v) in b.cov_diag.iter().enumerate() {
                if *v < 0.0 {
                    return Err(CliError::config(format!(
                        "scenario.initial_belief.cov_diag[{i}]: variance must be nonnegative"
                    )));
                }
            }
        }
        if let Some(dt) = self.model.dt {
            require_finite("model.dt", &[dt])?;
        }
        if let Some(q) = &self.model.motion_noise {
            require_finite("model.motion_noise", q)?;
        }
        if let Some(r) = &self.model.obs_noise {
            require_finite("model.obs_noise", r)?;
        }
        if let Some(lm) = &self.model.landmark {
            require_finite("model.landmark", lm)?;
        }
        if let Some(e) = self.filter.epsilon {
            require_finite("filter.epsilon", &[e])?;
        }
        Ok(())
    }

    pub fn model_id(&self) -> Result<BuiltinModelId, CliError> {
        self.scenario.model.parse::<BuiltinModelId>().map_err(CliError::from)
    }

    pub fn model_params(&self) -> ModelParams<f64> {
        let defaults = ModelParams::default();
        ModelParams {
            dt: self.model.dt.unwrap_or(defaults.dt),
            motion_noise: self.model.motion_noise.clone(),
            obs_noise: self.model.obs_noise.clone(),
            landmark: self.model.landmark.unwrap_or(defaults.landmark),
        }
    }

    /// Builds the scenario, applying an optional seed override.
    pub fn to_scenario(&self, seed_override: Option<u64>) -> Result<Scenario, CliError> {
        let model_id = self.model_id()?;
        let params = self.model_params();
        let model = recbayes::models::builtin_model(model_id, &params)?;
        let (n, m) = (model.state_dim(), model.control_dim());
        let horizon = self.scenario.horizon;
        if horizon == 0 {
            return Err(CliError::config("scenario.horizon: must be at least 1"));
        }

        let controls: Vec<DVector<f64>> = match (&self.scenario.control, &self.scenario.controls) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "scenario.control: exclusive with scenario.controls",
                ))
            }
            (Some(c), None) => {
                if c.len() != m {
                    return Err(CliError::config(format!(
                        "scenario.control: expected {m} entries, got {}",
                        c.len()
                    )));
                }
                vec![DVector::from_vec(c.clone()); horizon]
            }
            (None, Some(cs)) => {
                if cs.len() != horizon {
                    return Err(CliError::config(format!(
                        "scenario.controls: expected {horizon} entries, got {}",
                        cs.len()
                    )));
                }
                cs.iter().map(|c| DVector::from_vec(c.clone())).collect()
            }
            (None, None) => vec![DVector::zeros(m); horizon],
        };

        let initial_truth = match &self.scenario.initial_truth {
            Some(x) => {
                if x.len() != n {
                    return Err(CliError::config(format!(
                        "scenario.initial_truth: expected {n} entries, got {}",
                        x.len()
                    )));
                }
                DVector::from_vec(x.clone())
            }
            None => DVector::zeros(n),
        };

        let initial_belief = match &self.scenario.initial_belief {
            Some(b) => {
                if b.mean.len() != n || b.cov_diag.len() != n {
                    return Err(CliError::config(format!(
                        "scenario.initial_belief: expected {n} entries in mean and cov_diag"
                    )));
                }
                Belief::new(
                    DVector::from_vec(b.mean.clone()),
                    DMatrix::from_diagonal(&DVector::from_vec(b.cov_diag.clone())),
                )?
            }
            None => Belief::new(DVector::zeros(n), DMatrix::identity(n, n) * DEFAULT_P0)?,
        };

        let seed = seed_override.unwrap_or(self.scenario.seed);
        Ok(Scenario::new(model_id, params, horizon, controls, seed, initial_truth, initial_belief)?)
    }

    /// Filter for `run`, honoring a `--filter` override.
    pub fn filter_kind(&self, flag: Option<&str>) -> Result<FilterKind, CliError> {
        let name = flag
            .map(str::to_string)
            .or_else(|| self.filter.kind.clone())
            .ok_or_else(|| CliError::config("filter.kind: missing (set it or pass --filter)"))?;
        Ok(name.parse::<FilterKind>()?)
    }

    /// Filter list for `compare`.
    pub fn filter_kinds(&self, flag: Option<&str>) -> Result<Vec<FilterKind>, CliError> {
        if let Some(f) = flag {
            return Ok(vec![f.parse::<FilterKind>()?]);
        }
        let names = self
            .filter
            .kinds
            .clone()
            .or_else(|| self.filter.kind.clone().map(|k| vec![k]))
            .ok_or_else(|| CliError::config("filter.kinds: missing"))?;
        if names.is_empty() {
            return Err(CliError::config("filter.kinds: need at least one filter"));
        }
        names.iter().map(|n| Ok(n.parse::<FilterKind>()?)).collect()
    }

    pub fn iteration_config(&self) -> Result<IterationConfig<f64>, CliError> {
        let d = IterationConfig::default();
        Ok(IterationConfig::new(
            self.filter.epsilon.unwrap_or(d.epsilon),
            self.filter.max_iters.unwrap_or(d.max_iters),
        )?)
    }
}
