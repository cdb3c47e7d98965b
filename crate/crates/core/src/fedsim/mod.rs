//! Round-based federated training engine.
//!
//! A small softmax learner on synthetic Gaussian clusters stands in for the
//! real workload. The engine exists to measure rounds-to-target-loss for
//! CL, FL and CFL under IID or label-skewed partitions, and to log every
//! compute and communication action so that it can be billed.

mod aggregate;
mod dataset;
mod engine;
mod model;
mod optim;
mod partition;
mod trace;
mod train;

pub use aggregate::{consensus_step, fedavg_aggregate, fedavg_literal};
pub use dataset::{make_synthetic_dataset, Dataset, SyntheticSplit};
pub use engine::{run_training, Payload, TrainingSetup};
pub use model::{
    evaluate, init_params, loss_and_grad, LearnerSpec, LossKind, OptimizerSpec, ParamVector,
};
pub use optim::{Adam, Optimizer, Sgd};
pub use partition::{partition_dataset, DatasetPartition, PartitionMode};
pub use trace::{
    rounds_to_target, ComputeRole, CostEvent, EventKind, RoundRecord, TrainingTrace,
};
pub use train::local_train;

use thiserror::Error;

use crate::topology::TopologyError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid learner: {0}")]
    InvalidLearner(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("shard is empty")]
    EmptyShard,
    #[error("no models to aggregate")]
    NoModels,
    #[error("parameter dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("consensus over {actual} neighbors exceeds N = {cap}")]
    TooManyNeighbors { actual: usize, cap: usize },
    #[error("invalid setup: {0}")]
    InvalidSetup(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

pub type Result<T> = std::result::Result<T, SimError>;
