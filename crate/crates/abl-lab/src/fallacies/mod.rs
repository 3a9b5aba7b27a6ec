//! Classical generative models in which post-selection manufactures
//! striking conditional statistics out of nothing: hospital admission
//! (collider bias), coin darkening, a shutter with a clang detector, and
//! an object hidden in one of three boxes.
//!
//! Each scenario pairs closed-form analytics with a Monte Carlo twin on
//! the same per-trial substream contract as the quantum ensemble module.
//! Every report carries machine-readable `post_selected` and
//! `ensemble_level` flags so downstream consumers cannot quote a number
//! with its selection context stripped.
//!
//! Scenarios register behind a common trait; the CLI and tests dispatch
//! by name without knowing any parameter shapes.

mod berkson;
mod boxes;
mod coins;
mod shutter;

pub use berkson::{berkson_exact, berkson_mc, BerksonFractions, BerksonParams, BerksonSample};
pub use boxes::{three_boxes_mc, BoxesOutcome};
pub use coins::{coin_darkening_mc, CoinOutcome, CoinParams};
pub use shutter::{shutter_mc, ShutterOutcome, ShutterParams};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FallacyError {
    #[error("parameter {name} = {value} is outside [0, 1]")]
    BadProbability { name: &'static str, value: f64 },
    #[error("selection has zero probability")]
    EmptySelection,
    #[error("{0}")]
    BadParameter(String),
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NamedCount {
    pub name: String,
    pub value: u64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NamedQuantity {
    pub name: String,
    /// Monte Carlo estimate; `None` when the conditioning set was empty.
    pub empirical: Option<f64>,
    /// Closed-form counterpart; `None` when the selection is impossible.
    pub exact: Option<f64>,
}

/// Uniform report shape for all scenarios.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FallacyReport {
    pub schema: u32,
    pub scenario: String,
    /// True: every quantity below conditions on the selection cut.
    pub post_selected: bool,
    /// True: every quantity below is an ensemble aggregate, not a
    /// property of any single trial.
    pub ensemble_level: bool,
    /// Set when the report juxtaposes conditionals taken from different
    /// selections, which must not be read as one ensemble.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distinct_ensembles: Option<bool>,
    pub n_trials: u64,
    pub seed: u64,
    pub counts: Vec<NamedCount>,
    pub quantities: Vec<NamedQuantity>,
    pub notes: Vec<String>,
}

impl FallacyReport {
    pub(crate) fn new(scenario: &str, n_trials: u64, seed: u64) -> Self {
        Self {
            schema: 1,
            scenario: scenario.to_string(),
            post_selected: true,
            ensemble_level: true,
            distinct_ensembles: None,
            n_trials,
            seed,
            counts: Vec::new(),
            quantities: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub(crate) fn count(mut self, name: &str, value: u64) -> Self {
        self.counts.push(NamedCount {
            name: name.to_string(),
            value,
        });
        self
    }

    pub(crate) fn quantity(mut self, name: &str, empirical: Option<f64>, exact: Option<f64>) -> Self {
        self.quantities.push(NamedQuantity {
            name: name.to_string(),
            empirical,
            exact,
        });
        self
    }

    pub(crate) fn note(mut self, text: &str) -> Self {
        self.notes.push(text.to_string());
        self
    }
}

/// A named selection-bias demonstration runnable with default parameters.
pub trait FallacyScenario: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Trial count used when the caller does not override it. Scenarios
    /// with rare selections need more trials than the usual 10,000.
    fn default_trials(&self) -> u64;
    fn run(&self, n_trials: u64, seed: u64) -> Result<FallacyReport, FallacyError>;
}

pub fn registry() -> Vec<Box<dyn FallacyScenario>> {
    vec![
        Box::new(berkson::BerksonScenario),
        Box::new(coins::CoinScenario),
        Box::new(shutter::ShutterScenario),
        Box::new(boxes::BoxesScenario),
    ]
}

pub fn find(name: &str) -> Option<Box<dyn FallacyScenario>> {
    registry().into_iter().find(|s| s.name() == name)
}
