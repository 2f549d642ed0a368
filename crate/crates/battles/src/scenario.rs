use serde::Deserialize;

use heavyq::stability::Verdict;
use heavyq::{ArrivalSpec, BatchLaw, SojournModel};

use crate::BattleError;

/// Scenarios shipped with the binary.
pub const BUILTIN: &str = include_str!("../scenarios/battles.toml");

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchConfig {
    PowerLaw(f64),
    Constant(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SojournConfig {
    Exponential(f64),
    PowerLaw(f64),
    Deterministic(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expected {
    Stable,
    Unstable,
}

impl Expected {
    pub fn verdict(self) -> Verdict {
        match self {
            Expected::Stable => Verdict::Stable,
            Expected::Unstable => Verdict::Unstable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Verdict,
    Stationary,
    Transient,
    Loglog,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub title: String,
    pub lambda: f64,
    pub batch: BatchConfig,
    pub sojourn: SojournConfig,
    pub expected: Expected,
    pub outputs: Vec<Output>,
    /// Times at which transient distributions are computed and simulated.
    #[serde(default)]
    pub times: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct ScenarioFile {
    scenario: Vec<Scenario>,
}

impl Scenario {
    pub fn spec(&self) -> heavyq::Result<ArrivalSpec> {
        let batch = match self.batch {
            BatchConfig::PowerLaw(p) => BatchLaw::power_law(p)?,
            BatchConfig::Constant(m) => BatchLaw::constant(m)?,
        };
        let sojourn = match self.sojourn {
            SojournConfig::Exponential(mu) => SojournModel::exponential(mu)?,
            SojournConfig::PowerLaw(q) => SojournModel::power_law(q)?,
            SojournConfig::Deterministic(d) => SojournModel::deterministic(d)?,
        };
        ArrivalSpec::new(self.lambda, batch, sojourn)
    }

    pub fn wants(&self, output: Output) -> bool {
        self.outputs.contains(&output)
    }
}

/// Parses a scenario file and checks that names are unique.
pub fn parse(text: &str) -> Result<Vec<Scenario>, BattleError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| BattleError::Config(e.to_string()))?;
    let mut names: Vec<&str> = file.scenario.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(BattleError::Config(format!("scenario name {:?} appears twice", w[0])));
    }
    for s in &file.scenario {
        if s.times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(BattleError::Config(format!("{}: times must be positive", s.name)));
        }
    }
    Ok(file.scenario)
}

pub fn builtin() -> Vec<Scenario> {
    parse(BUILTIN).expect("built-in scenarios parse")
}
