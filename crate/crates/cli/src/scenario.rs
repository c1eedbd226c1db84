//! Scenario files.
//!
//! ```toml
//! seed = 1
//! replications = 10
//! output = "out/stylized"
//!
//! [market]
//! m = 1.0
//! lambda = 0.5
//! d = 200.0
//! horizon_arrivals = 70000
//! warmup_agents = 5000
//!
//! [policy]
//! kind = "greedy"        # greedy | patient | batching
//!
//! [model]
//! kind = "two_type"      # two_type | homogeneous | matrix
//! p = 0.1
//! q = 0.04
//!
//! [sweep]
//! parameter = "lambda"   # m | lambda | T
//! values = [0.222, 0.857, 2.0]
//! ```

use std::path::{Path, PathBuf};

use dynmatch::compat::{load_pool_matrix, CompatModel};
use dynmatch::sim::{Policy, SimConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub output: Option<String>,
    pub market: MarketSection,
    pub policy: PolicySection,
    pub model: ModelSection,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub m: f64,
    pub lambda: f64,
    pub d: f64,
    pub horizon_arrivals: usize,
    pub warmup_agents: usize,
    pub capacity_kappa: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Greedy,
    Patient,
    Batching,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub kind: PolicyKind,
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    TwoType,
    Homogeneous,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "m")]
    M,
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "T")]
    Period,
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParameter::M => "m",
            SweepParameter::Lambda => "lambda",
            SweepParameter::Period => "T",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub output: Option<String>,
    pub policy: Option<PolicyKind>,
    pub period: Option<f64>,
    pub m: Option<f64>,
    pub lambda: Option<f64>,
    pub d: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub horizon_arrivals: Option<usize>,
    pub warmup_agents: Option<usize>,
    pub capacity_kappa: Option<f64>,
}

/// A fully resolved scenario.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub seed: u64,
    pub replications: usize,
    pub output: PathBuf,
    pub market: MarketSection,
    pub policy: PolicySection,
    pub model: ModelSection,
    pub sweep: Option<SweepSection>,
    #[serde(skip)]
    pub compat: CompatModel,
}

/// Line of the first `key = ...` assignment, for diagnostics. `key` may be
/// qualified by its section, as in `model.kind`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let (section, key) = match key.split_once('.') {
        Some((s, k)) => (Some(format!("[{s}]")), k),
        None => (None, key),
    };
    let start = match &section {
        Some(header) => text.lines().position(|l| l.trim() == header)?,
        None => 0,
    };
    text.lines()
        .enumerate()
        .skip(start)
        .find(|(_, l)| {
            let t = l.trim_start();
            t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|(i, _)| i + 1)
}

fn config_error(text: Option<&str>, key: &str, msg: impl Into<String>) -> CliError {
    let msg = msg.into();
    match text.and_then(|t| line_of(t, key)) {
        Some(line) => CliError::Config(format!("line {line}: {msg}")),
        None => CliError::Config(msg),
    }
}

pub fn parse_scenario(text: &str) -> CliResult<ScenarioFile> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1));
        match line {
            Some(l) => CliError::Config(format!("line {l}: {}", e.message())),
            None => CliError::Config(e.message().to_string()),
        }
    })
}

impl ScenarioFile {
    /// Scenario built entirely from flags; seed, policy, replications and
    /// output must be given.
    pub fn from_flags(o: &Overrides) -> CliResult<Self> {
        let need = |name: &str| CliError::Config(format!("--{name} is required without a scenario file"));
        if o.seed.is_none() {
            return Err(need("seed"));
        }
        if o.replications.is_none() {
            return Err(need("reps"));
        }
        if o.output.is_none() {
            return Err(need("out"));
        }
        let kind = o.policy.ok_or_else(|| need("policy"))?;
        let m = o.m.ok_or_else(|| need("m"))?;
        let lambda = o.lambda.ok_or_else(|| need("lambda"))?;
        let d = o.d.ok_or_else(|| need("d"))?;
        let horizon = o.horizon_arrivals.ok_or_else(|| need("horizon"))?;
        Ok(ScenarioFile {
            seed: None,
            replications: None,
            output: None,
            market: MarketSection {
                m,
                lambda,
                d,
                horizon_arrivals: horizon,
                warmup_agents: o.warmup_agents.unwrap_or(horizon / 10),
                capacity_kappa: None,
            },
            policy: PolicySection { kind, period: None },
            model: ModelSection { kind: ModelKind::TwoType, p: o.p, q: o.q, path: None },
            sweep: None,
        })
    }

    /// Applies overrides and checks everything, loading matrix pools
    /// relative to `base_dir`.
    pub fn resolve(mut self, o: &Overrides, text: Option<&str>, base_dir: &Path) -> CliResult<Scenario> {
        if let Some(k) = o.policy {
            self.policy.kind = k;
        }
        macro_rules! apply {
            ($($field:ident => $target:expr),*) => {$(
                if let Some(v) = o.$field.clone() {
                    $target = v.into();
                }
            )*};
        }
        apply!(
            seed => self.seed,
            replications => self.replications,
            output => self.output,
            period => self.policy.period,
            m => self.market.m,
            lambda => self.market.lambda,
            d => self.market.d,
            p => self.model.p,
            q => self.model.q,
            horizon_arrivals => self.market.horizon_arrivals,
            warmup_agents => self.market.warmup_agents,
            capacity_kappa => self.market.capacity_kappa
        );

        let replications = self.replications.unwrap_or(1);
        if replications == 0 {
            return Err(config_error(text, "replications", "replications must be at least 1"));
        }
        let output = self.output.clone().ok_or_else(|| config_error(text, "output", "no output prefix given"))?;

        if self.policy.kind == PolicyKind::Batching && self.policy.period.is_none() {
            return Err(config_error(text, "policy.kind", "batching policy needs a period"));
        }
        if self.policy.kind != PolicyKind::Batching && self.policy.period.is_some() {
            return Err(config_error(text, "policy.period", "period is only meaningful for the batching policy"));
        }

        let compat = match self.model.kind {
            ModelKind::TwoType => {
                let p = self.model.p.ok_or_else(|| config_error(text, "model.kind", "two_type model needs p"))?;
                let q = self.model.q.ok_or_else(|| config_error(text, "model.kind", "two_type model needs q"))?;
                CompatModel::TwoType { p, q }
            }
            ModelKind::Homogeneous => CompatModel::Homogeneous {
                p: self.model.p.ok_or_else(|| config_error(text, "model.kind", "homogeneous model needs p"))?,
            },
            ModelKind::Matrix => {
                let path = self
                    .model
                    .path
                    .clone()
                    .ok_or_else(|| config_error(text, "model.kind", "matrix model needs path"))?;
                let full = if path.is_absolute() { path } else { base_dir.join(path) };
                load_pool_matrix(&full)
                    .map_err(|e| config_error(text, "model.path", format!("{}: {e}", full.display())))?
            }
        };
        compat.validate().map_err(|e| config_error(text, "model.p", e.to_string()))?;

        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(config_error(text, "sweep.values", "sweep values must not be empty"));
            }
            if sweep.parameter == SweepParameter::Period && self.policy.kind != PolicyKind::Batching {
                return Err(config_error(text, "sweep.parameter", "sweeping T requires the batching policy"));
            }
        }

        let scenario = Scenario {
            seed: self.seed.unwrap_or(0),
            replications,
            output: PathBuf::from(output),
            market: self.market,
            policy: self.policy,
            model: self.model,
            sweep: self.sweep,
            compat,
        };
        for value in scenario.sweep_values() {
            scenario.sim_config(value, 0).validate().map_err(|e| {
                let key = match &scenario.sweep {
                    Some(_) => "sweep.values",
                    None => "market.m",
                };
                config_error(text, key, e.to_string())
            })?;
        }
        Ok(scenario)
    }
}

impl Scenario {
    /// Loads and resolves a scenario file.
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let file = parse_scenario(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        file.resolve(overrides, Some(&text), base).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Sweep values, or a single `None` point without a sweep.
    pub fn sweep_values(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
            None => vec![None],
        }
    }

    pub fn policy(&self, period_override: Option<f64>) -> Policy {
        match self.policy.kind {
            PolicyKind::Greedy => Policy::Greedy,
            PolicyKind::Patient => Policy::Patient,
            PolicyKind::Batching => {
                Policy::Batching { period: period_override.or(self.policy.period).unwrap_or(f64::NAN) }
            }
        }
    }

    /// Simulation config for one sweep value and replication.
    pub fn sim_config(&self, value: Option<f64>, replication: usize) -> SimConfig {
        let mut m = self.market.m;
        let mut lambda = self.market.lambda;
        let mut period = None;
        if let (Some(s), Some(v)) = (&self.sweep, value) {
            match s.parameter {
                SweepParameter::M => m = v,
                SweepParameter::Lambda => lambda = v,
                SweepParameter::Period => period = Some(v),
            }
        }
        SimConfig {
            m,
            lambda,
            d: self.market.d,
            model: self.compat.clone(),
            policy: self.policy(period),
            horizon_arrivals: self.market.horizon_arrivals,
            warmup_agents: self.market.warmup_agents,
            capacity_kappa: self.market.capacity_kappa,
            seed: self.seed.wrapping_add(replication as u64),
        }
    }
}
