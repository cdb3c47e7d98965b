use super::{
    consensus_step, evaluate, fedavg_aggregate, fedavg_literal, init_params, local_train,
    ComputeRole, CostEvent, Dataset, DatasetPartition, EventKind, LearnerSpec, ParamVector, Result,
    RoundRecord, SimError, SyntheticSplit, TrainingTrace,
};
use crate::energy::{DownlinkMode, Node};
use crate::exec::Exec;
use crate::rng;
use crate::topology::{round_robin_over, select_neighbors, validate_topology, Topology};
use crate::Scheme;

/// Sizes written into the event log. They come from configuration, not from
/// the stand-in learner's parameter count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Payload {
    pub model_bits: f64,
    pub dataset_bits: f64,
}

/// Everything one training run needs.
#[derive(Debug, Clone)]
pub struct TrainingSetup<'a> {
    pub scheme: Scheme,
    pub learner: &'a LearnerSpec,
    pub data: &'a SyntheticSplit,
    pub partition: &'a DatasetPartition,
    pub topology: &'a Topology,
    pub active_per_round: usize,
    /// Consensus neighbors per active device (CFL only).
    pub neighbors: usize,
    /// Mini-batch steps per round (B).
    pub batches: usize,
    pub max_rounds: usize,
    /// Stop at the first round whose validation loss reaches this value.
    /// `None` runs all `max_rounds`.
    pub target_loss: Option<f64>,
    pub seed: u64,
    pub downlink: DownlinkMode,
    pub literal_fedavg: bool,
    pub payload: Payload,
    pub exec: Exec,
}

impl TrainingSetup<'_> {
    fn check(&self) -> Result<()> {
        self.learner.validate()?;
        if self.max_rounds < 1 {
            return Err(SimError::InvalidSetup("max_rounds must be at least 1".into()));
        }
        let k = self.partition.devices();
        if self.topology.node_count() != k {
            return Err(SimError::InvalidSetup(format!(
                "topology has {} nodes but the partition has {k} devices",
                self.topology.node_count()
            )));
        }
        if self.partition.total() > self.data.train.len() {
            return Err(SimError::InvalidSetup(
                "partition indexes more examples than the training set holds".into(),
            ));
        }
        validate_topology(self.topology, self.scheme)?;
        if self.scheme != Scheme::Cl {
            let eligible = self.partition.eligible().len();
            if self.active_per_round < 1 || self.active_per_round > eligible {
                return Err(SimError::InvalidSetup(format!(
                    "active_per_round must be in 1..={eligible} (devices holding data), got {}",
                    self.active_per_round
                )));
            }
        }
        if self.scheme == Scheme::Cfl && self.neighbors < 1 {
            return Err(SimError::InvalidSetup("CFL needs at least one neighbor per round".into()));
        }
        Ok(())
    }

    fn eval_set(&self) -> &Dataset {
        if self.data.validation.is_empty() {
            &self.data.train
        } else {
            &self.data.validation
        }
    }

    fn train_seed(&self, round: usize, node: Node) -> u64 {
        let who = match node {
            Node::Center => 0,
            Node::Device(k) => k as u64 + 1,
        };
        rng::mix(&[self.seed, round as u64, who])
    }
}

/// Runs CL, FL or CFL until the target loss or `max_rounds`.
///
/// Per-device work inside a round runs through `setup.exec`; results are
/// consumed in ascending device order, so traces do not depend on the
/// number of worker threads.
pub fn run_training(setup: &TrainingSetup<'_>) -> Result<TrainingTrace> {
    setup.check()?;
    let mut trace = TrainingTrace {
        scheme: setup.scheme,
        rounds: Vec::new(),
        events: Vec::new(),
        target_loss: setup.target_loss,
        target_reached: false,
    };
    match setup.scheme {
        Scheme::Cl => run_cl(setup, &mut trace)?,
        Scheme::Fl => run_fl(setup, &mut trace)?,
        Scheme::Cfl => run_cfl(setup, &mut trace)?,
    }
    Ok(trace)
}

/// Records a round and reports whether training should stop.
fn finish_round(
    setup: &TrainingSetup<'_>,
    trace: &mut TrainingTrace,
    round: usize,
    active: Vec<usize>,
    train_loss: f64,
    model: &ParamVector,
) -> Result<bool> {
    let (val_loss, accuracy) = evaluate(setup.learner, model, setup.eval_set())?;
    trace.rounds.push(RoundRecord {
        round,
        active,
        train_loss,
        val_loss,
        accuracy,
    });
    let reached = setup.target_loss.is_some_and(|t| val_loss <= t);
    trace.target_reached = reached;
    Ok(reached)
}

fn run_cl(setup: &TrainingSetup<'_>, trace: &mut TrainingTrace) -> Result<()> {
    let pooled: Vec<usize> = {
        let mut all: Vec<usize> = (0..setup.partition.devices())
            .flat_map(|k| setup.partition.shard(k).iter().copied())
            .collect();
        all.sort_unstable();
        all
    };
    for k in 0..setup.partition.devices() {
        trace.events.push(CostEvent::transfer(
            0,
            EventKind::Ul,
            Node::Device(k),
            Some(Node::Center),
            setup.payload.dataset_bits,
        ));
    }
    let mut model = init_params(setup.learner, setup.seed);
    for round in 1..=setup.max_rounds {
        let (next, loss) = local_train(
            &model,
            &setup.data.train,
            &pooled,
            setup.learner,
            setup.batches,
            setup.train_seed(round, Node::Center),
        )?;
        model = next;
        trace.events.push(CostEvent::compute(round, Node::Center, ComputeRole::CenterTrain));
        if finish_round(setup, trace, round, Vec::new(), loss, &model)? {
            break;
        }
    }
    Ok(())
}

fn run_fl(setup: &TrainingSetup<'_>, trace: &mut TrainingTrace) -> Result<()> {
    let sizes = setup.partition.sizes();
    let global_q = setup.partition.total();
    let schedule = round_robin_over(&setup.partition.eligible(), setup.active_per_round, setup.max_rounds)?;
    let bits = setup.payload.model_bits;
    let mut model = init_params(setup.learner, setup.seed);

    for round in 1..=setup.max_rounds {
        let active = schedule.round(round - 1).to_vec();
        let results = setup.exec.map(&active, |&k| {
            local_train(
                &model,
                &setup.data.train,
                setup.partition.shard(k),
                setup.learner,
                setup.batches,
                setup.train_seed(round, Node::Device(k)),
            )
        });
        let mut locals = Vec::with_capacity(active.len());
        let mut loss_sum = 0.0;
        for (&k, res) in active.iter().zip(results) {
            let (w, loss) = res?;
            loss_sum += loss;
            trace.events.push(CostEvent::compute(round, Node::Device(k), ComputeRole::DeviceTrain));
            trace.events.push(CostEvent::transfer(
                round,
                EventKind::Ul,
                Node::Device(k),
                Some(Node::Center),
                bits,
            ));
            locals.push((w, sizes[k]));
        }
        let refs: Vec<(&ParamVector, usize)> = locals.iter().map(|(w, q)| (w, *q)).collect();
        model = if setup.literal_fedavg {
            fedavg_literal(&refs, global_q)?
        } else {
            fedavg_aggregate(&refs)?
        };
        trace.events.push(CostEvent::compute(round, Node::Center, ComputeRole::PsAverage));
        match setup.downlink {
            DownlinkMode::Unicast => {
                for k in 0..setup.partition.devices() {
                    trace.events.push(CostEvent::transfer(
                        round,
                        EventKind::Dl,
                        Node::Center,
                        Some(Node::Device(k)),
                        bits,
                    ));
                }
            }
            DownlinkMode::Broadcast => {
                trace.events.push(CostEvent::transfer(round, EventKind::Dl, Node::Center, None, bits));
            }
        }
        let train_loss = loss_sum / active.len() as f64;
        if finish_round(setup, trace, round, active, train_loss, &model)? {
            break;
        }
    }
    Ok(())
}

fn run_cfl(setup: &TrainingSetup<'_>, trace: &mut TrainingTrace) -> Result<()> {
    let sizes = setup.partition.sizes();
    let eligible = setup.partition.eligible();
    let schedule = round_robin_over(&eligible, setup.active_per_round, setup.max_rounds)?;
    let bits = setup.payload.model_bits;
    let mut models = vec![init_params(setup.learner, setup.seed); setup.partition.devices()];

    for round in 1..=setup.max_rounds {
        let active = schedule.round(round - 1).to_vec();
        let snapshot = &models;
        let results = setup.exec.map(&active, |&k| -> Result<(Vec<usize>, ParamVector, f64)> {
            let picked = select_neighbors(setup.topology, k, round, setup.neighbors, setup.seed)?;
            let nbrs: Vec<(&ParamVector, usize)> = picked.iter().map(|&h| (&snapshot[h], sizes[h])).collect();
            let merged = consensus_step((&snapshot[k], sizes[k]), &nbrs, setup.neighbors)?;
            let (w, loss) = local_train(
                &merged,
                &setup.data.train,
                setup.partition.shard(k),
                setup.learner,
                setup.batches,
                setup.train_seed(round, Node::Device(k)),
            )?;
            Ok((picked, w, loss))
        });
        let mut updates = Vec::with_capacity(active.len());
        let mut loss_sum = 0.0;
        for (&k, res) in active.iter().zip(results) {
            let (picked, w, loss) = res?;
            for &h in &picked {
                trace.events.push(CostEvent::transfer(
                    round,
                    EventKind::Mesh,
                    Node::Device(k),
                    Some(Node::Device(h)),
                    bits,
                ));
            }
            trace.events.push(CostEvent::compute(round, Node::Device(k), ComputeRole::DeviceTrain));
            loss_sum += loss;
            updates.push((k, w));
        }
        for (k, w) in updates {
            models[k] = w;
        }
        let average = mean_model(eligible.iter().map(|&k| &models[k]));
        let train_loss = loss_sum / active.len() as f64;
        if finish_round(setup, trace, round, active, train_loss, &average)? {
            break;
        }
    }
    Ok(())
}

fn mean_model<'a>(models: impl Iterator<Item = &'a ParamVector>) -> ParamVector {
    let mut sum: Vec<f64> = Vec::new();
    let mut count = 0usize;
    for m in models {
        if sum.is_empty() {
            sum = vec![0.0; m.len()];
        }
        for (s, v) in sum.iter_mut().zip(&m.0) {
            *s += v;
        }
        count += 1;
    }
    let inv = 1.0 / count.max(1) as f64;
    ParamVector(sum.into_iter().map(|s| s * inv).collect())
}
