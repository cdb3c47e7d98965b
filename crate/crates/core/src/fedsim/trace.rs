use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::energy::Node;
use crate::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Compute,
    Ul,
    Dl,
    Mesh,
}

/// Which compute profile a compute event is billed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComputeRole {
    /// One data-center training round.
    CenterTrain,
    /// Parameter-server model averaging.
    PsAverage,
    /// One local training round on a device.
    DeviceTrain,
}

/// One billable action. Round 0 holds the one-time raw-data uploads of CL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEvent {
    pub round: usize,
    pub kind: EventKind,
    pub src: Node,
    /// `None` for compute events and for broadcast downlinks.
    pub dst: Option<Node>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ComputeRole>,
}

impl CostEvent {
    pub fn compute(round: usize, src: Node, role: ComputeRole) -> Self {
        Self {
            round,
            kind: EventKind::Compute,
            src,
            dst: None,
            bits: None,
            profile: Some(role),
        }
    }

    pub fn transfer(round: usize, kind: EventKind, src: Node, dst: Option<Node>, bits: f64) -> Self {
        Self {
            round,
            kind,
            src,
            dst,
            bits: Some(bits),
            profile: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub active: Vec<usize>,
    pub train_loss: f64,
    pub val_loss: f64,
    pub accuracy: f64,
}

/// Loss curve and cost log of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub scheme: Scheme,
    pub rounds: Vec<RoundRecord>,
    pub events: Vec<CostEvent>,
    pub target_loss: Option<f64>,
    pub target_reached: bool,
}

impl TrainingTrace {
    /// Number of rounds executed.
    pub fn final_round(&self) -> usize {
        self.rounds.len()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.rounds.last().map(|r| r.val_loss)
    }

    pub fn losses(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.val_loss).collect()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// One JSON object per event, one per line.
    pub fn write_events_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// First round (1-based) whose validation loss is at or below `target`.
pub fn rounds_to_target(trace: &TrainingTrace, target: f64) -> Option<usize> {
    trace
        .rounds
        .iter()
        .position(|r| r.val_loss <= target)
        .map(|i| trace.rounds[i].round)
}
