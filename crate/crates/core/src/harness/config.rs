//! Experiment configuration: a flat key-value text format with comments, or an
//! inline JSON object for programmatic sweeps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{HarnessError, HarnessResult};
use crate::bandit::LinearBanditInstance;
use crate::rng::{derive_stream, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Ts,
    Es,
    Uniform,
}

impl std::str::FromStr for AgentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ts" => Ok(AgentKind::Ts),
            "es" => Ok(AgentKind::Es),
            "uniform" => Ok(AgentKind::Uniform),
            other => Err(format!("unknown agent '{other}' (expected ts|es|uniform)")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Inline action rows; mutually exclusive with the generator fields.
    pub actions: Option<Vec<Vec<f64>>>,
    pub prior_mean: Option<Vec<f64>>,
    pub prior_cov: Option<Vec<Vec<f64>>>,
    pub noise_var: f64,
    /// Random-instance generator: K actions in d dimensions from `gen_seed`.
    pub gen_k: Option<usize>,
    pub gen_d: Option<usize>,
    pub gen_seed: Option<u64>,
    pub agent: AgentKind,
    pub ensemble_size: usize,
    pub horizon: usize,
    pub replications: usize,
    pub base_seed: u64,
    /// Posterior draws per mismatch measurement and bound estimate.
    pub n_post: usize,
    pub smoothing_alpha: f64,
    /// Mismatch measurement stride in steps; 0 disables measurement.
    pub mismatch_every: usize,
    /// Ensemble sizes swept by the `mismatch` subcommand.
    pub m_values: Vec<usize>,
    pub out_dir: Option<String>,
    pub csv_path: Option<String>,
    pub json_path: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            actions: None,
            prior_mean: None,
            prior_cov: None,
            noise_var: 1.0,
            gen_k: None,
            gen_d: None,
            gen_seed: None,
            agent: AgentKind::Ts,
            ensemble_size: 1,
            horizon: 100,
            replications: 100,
            base_seed: 0,
            n_post: 10_000,
            smoothing_alpha: 0.5,
            mismatch_every: 0,
            m_values: vec![1, 10, 100],
            out_dir: None,
            csv_path: None,
            json_path: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses either the flat key-value format or a JSON object.
    pub fn parse(text: &str) -> HarnessResult<Self> {
        let trimmed = text.trim_start();
        let cfg = if trimmed.starts_with('{') {
            serde_json::from_str::<ExperimentConfig>(text)
                .map_err(|e| HarnessError::Config(format!("invalid JSON config: {e}")))?
        } else {
            Self::parse_flat(text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn parse_flat(text: &str) -> HarnessResult<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let bad = |e: String| HarnessError::Config(format!("line {}: {key}: {e}", lineno + 1));
            match key {
                "actions" => cfg.actions = Some(parse_rows(value).map_err(bad)?),
                "prior_mean" => cfg.prior_mean = Some(parse_row(value).map_err(bad)?),
                "prior_cov" => cfg.prior_cov = Some(parse_rows(value).map_err(bad)?),
                "noise_var" => cfg.noise_var = value.parse().map_err(|e| bad(format!("{e}")))?,
                "gen_k" => cfg.gen_k = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
                "gen_d" => cfg.gen_d = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
                "gen_seed" => cfg.gen_seed = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
                "agent" => cfg.agent = value.parse().map_err(bad)?,
                "ensemble_size" => cfg.ensemble_size = value.parse().map_err(|e| bad(format!("{e}")))?,
                "horizon" => cfg.horizon = value.parse().map_err(|e| bad(format!("{e}")))?,
                "replications" => cfg.replications = value.parse().map_err(|e| bad(format!("{e}")))?,
                "base_seed" => cfg.base_seed = value.parse().map_err(|e| bad(format!("{e}")))?,
                "n_post" => cfg.n_post = value.parse().map_err(|e| bad(format!("{e}")))?,
                "smoothing_alpha" => cfg.smoothing_alpha = value.parse().map_err(|e| bad(format!("{e}")))?,
                "mismatch_every" => cfg.mismatch_every = value.parse().map_err(|e| bad(format!("{e}")))?,
                "m_values" => {
                    cfg.m_values = value
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<usize>().map_err(|e| bad(format!("{e}"))))
                        .collect::<Result<_, _>>()?
                }
                "out_dir" => cfg.out_dir = Some(value.to_string()),
                "csv_path" => cfg.csv_path = Some(value.to_string()),
                "json_path" => cfg.json_path = Some(value.to_string()),
                other => return Err(HarnessError::Config(format!("line {}: unknown key '{other}'", lineno + 1))),
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> HarnessResult<()> {
        if self.horizon < 1 {
            return Err(HarnessError::Config("horizon must be >= 1".into()));
        }
        if self.replications < 1 {
            return Err(HarnessError::Config("replications must be >= 1".into()));
        }
        if self.agent == AgentKind::Es && self.ensemble_size < 1 {
            return Err(HarnessError::Config("ensemble_size must be >= 1 for agent = es".into()));
        }
        if self.mismatch_every > 0 && self.n_post < 1000 {
            return Err(HarnessError::Config(
                "n_post must be >= 1000 when mismatch measurement is enabled".into(),
            ));
        }
        if self.smoothing_alpha < 0.0 {
            return Err(HarnessError::Config("smoothing_alpha must be >= 0".into()));
        }
        let inline = self.actions.is_some();
        let generated = self.gen_k.is_some() || self.gen_d.is_some();
        match (inline, generated) {
            (true, true) => Err(HarnessError::Config(
                "specify either inline actions or gen_k/gen_d, not both".into(),
            )),
            (false, false) => Err(HarnessError::Config(
                "instance unspecified: provide actions or gen_k/gen_d".into(),
            )),
            (false, true) if self.gen_k.is_none() || self.gen_d.is_none() => Err(HarnessError::Config(
                "generator needs both gen_k and gen_d".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Builds the validated bandit instance this config describes.
    pub fn build_instance(&self) -> HarnessResult<LinearBanditInstance> {
        if let Some(rows) = &self.actions {
            let k = rows.len();
            let d = rows.first().map(|r| r.len()).unwrap_or(0);
            if rows.iter().any(|r| r.len() != d) {
                return Err(HarnessError::Config("ragged action rows".into()));
            }
            let actions = DMatrix::from_row_slice(k, d, &rows.concat());
            let mean = match &self.prior_mean {
                Some(v) => DVector::from_vec(v.clone()),
                None => DVector::zeros(d),
            };
            let cov = match &self.prior_cov {
                Some(rows) => {
                    let n = rows.len();
                    if rows.iter().any(|r| r.len() != n) {
                        return Err(HarnessError::Config("prior_cov must be square".into()));
                    }
                    DMatrix::from_row_slice(n, n, &rows.concat())
                }
                None => DMatrix::identity(d, d),
            };
            Ok(LinearBanditInstance::new(actions, mean, cov, self.noise_var)?)
        } else {
            let k = self.gen_k.expect("validated");
            let d = self.gen_d.expect("validated");
            let seed = self.gen_seed.unwrap_or(self.base_seed);
            let mut rng = derive_stream(seed, u64::MAX, Role::Environment);
            let actions = DMatrix::from_fn(k, d, |_, _| {
                rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)
            });
            Ok(LinearBanditInstance::new(
                actions,
                DVector::zeros(d),
                DMatrix::identity(d, d),
                self.noise_var,
            )?)
        }
    }

    /// Default output directory: `out_dir` key, else the env var, else `.`.
    pub fn output_dir(&self) -> std::path::PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var("ESBANDIT_OUT_DIR").ok())
            .unwrap_or_else(|| ".".into())
            .into()
    }
}

fn parse_row(s: &str) -> Result<Vec<f64>, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|tok| !tok.is_empty())
        .map(|tok| tok.parse::<f64>().map_err(|e| format!("{e}")))
        .collect()
}

fn parse_rows(s: &str) -> Result<Vec<Vec<f64>>, String> {
    s.split(';').map(parse_row).collect()
}
