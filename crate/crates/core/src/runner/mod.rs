//! Experiment harness: JSON configuration, closed-form sweeps, simulated
//! footprint runs with an energy oracle, break-even solving and result
//! emission.

mod analysis;
mod breakeven;
mod config;
mod output;
mod presets;
mod simulate;
mod sweep;

pub use analysis::{evaluate_point, run_analysis};
pub use breakeven::{break_even_ee, crossover, BreakEven, CarbonLine};
pub use config::{
    load_config, parse_config, CarbonConfig, DatasetConfig, ExperimentConfig, LearnerConfig,
    PartitionConfig, RunMode, TopologyConfig,
};
pub use output::{emit_results, parse_csv, round_sig, write_csv, write_jsonl, Format, ResultRow};
pub use presets::{preset, PRESET_NAMES};
pub use simulate::{bill_events, run_simulation, SchemeRun, SimulationOutput};
pub use sweep::{Range, Scenario, SweepAxis, SweepParam, SweepSpec, MAX_AXES, MAX_POINTS};

use std::io;

use thiserror::Error;

use crate::energy::EnergyError;
use crate::fedsim::SimError;
use crate::topology::TopologyError;
use crate::Scheme;

#[derive(Debug, Error)]
pub enum RunError {
    /// Bad or inconsistent configuration; `path` names the offending field.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("event-billed and closed-form energies disagree for {scheme}: {detail}")]
    OracleMismatch { scheme: Scheme, detail: String },
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("{0}")]
    Output(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl RunError {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        RunError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 for configuration errors, 3 for oracle failures,
    /// 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config { .. } => 2,
            RunError::OracleMismatch { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, RunError>;
