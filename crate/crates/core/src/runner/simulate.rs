use super::analysis::build_row;
use super::{ExperimentConfig, ResultRow, Result, RunError, RunMode};
use crate::energy::{
    energy_cl, energy_cfl_with, energy_fl_with, Category, EnergyBreakdown, FleetSpec, Ledger,
    LinkEfficiencies, Node, Participation,
};
use crate::exec::Exec;
use crate::fedsim::{
    make_synthetic_dataset, partition_dataset, run_training, ComputeRole, CostEvent,
    DatasetPartition, EventKind, Payload, TrainingSetup, TrainingTrace,
};
use crate::topology::Topology;
use crate::Scheme;

/// One scheme's simulated run.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub scheme: Scheme,
    pub trace: TrainingTrace,
    /// Energy summed event by event.
    pub billed: EnergyBreakdown,
    pub row: ResultRow,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    /// In configuration scheme order.
    pub runs: Vec<SchemeRun>,
}

impl SimulationOutput {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.runs.iter().map(|r| r.row.clone()).collect()
    }
}

fn payload_bits(event: &CostEvent) -> Result<f64> {
    event
        .bits
        .ok_or_else(|| RunError::Output(format!("transfer event without bits: {event:?}")))
}

/// Sums the energy of every logged action.
///
/// Compute events cost one round of the relevant profile (PS averaging a
/// fraction of it, with PUE at the center); transfers cost bits over the
/// link efficiency, with the center's PUE on downlinks. Uplink and mesh
/// energy is charged to the sender, downlink energy to the center.
pub fn bill_events(
    events: &[CostEvent],
    fleet: &FleetSpec,
    links: &LinkEfficiencies,
) -> Result<EnergyBreakdown> {
    let center = &fleet.center_profile;
    let e0 = center.round_energy();
    let ek = fleet.device_round_energy();
    let ee_mesh = links.mesh()?;
    let mut ledger = Ledger::new();
    for e in events {
        match e.kind {
            EventKind::Compute => {
                let joules = match e.profile {
                    Some(ComputeRole::CenterTrain) => center.pue * e0,
                    Some(ComputeRole::PsAverage) => center.pue * center.avg_fraction * e0,
                    Some(ComputeRole::DeviceTrain) => ek,
                    None => {
                        return Err(RunError::Output(format!(
                            "compute event without a profile: {e:?}"
                        )))
                    }
                };
                ledger.add(e.src, Category::Compute, joules);
            }
            EventKind::Ul => ledger.add(e.src, Category::Uplink, payload_bits(e)? / links.ee_up),
            EventKind::Dl => ledger.add(
                Node::Center,
                Category::Downlink,
                center.pue * payload_bits(e)? / links.ee_down,
            ),
            EventKind::Mesh => ledger.add(e.src, Category::Mesh, payload_bits(e)? / ee_mesh),
        }
    }
    Ok(EnergyBreakdown::from_ledger(ledger))
}

const ORACLE_TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= ORACLE_TOL * a.abs().max(b.abs())
}

fn check_oracle(scheme: Scheme, billed: &EnergyBreakdown, closed: &EnergyBreakdown) -> Result<()> {
    let names = ["compute_device", "compute_center", "comm_up", "comm_down", "comm_mesh"];
    for ((name, a), b) in names.iter().zip(billed.categories()).zip(closed.categories()) {
        if !close(a, b) {
            return Err(RunError::OracleMismatch {
                scheme,
                detail: format!("{name}: events {a} J, closed form {b} J"),
            });
        }
    }
    let mut keys: Vec<_> = billed
        .per_node_j
        .iter()
        .chain(closed.per_node_j.iter())
        .map(|(n, c, _)| (n, c))
        .collect();
    keys.sort();
    keys.dedup();
    for (node, cat) in keys {
        let (a, b) = (billed.per_node_j.get(node, cat), closed.per_node_j.get(node, cat));
        if !close(a, b) {
            return Err(RunError::OracleMismatch {
                scheme,
                detail: format!("{node} {cat:?}: events {a} J, closed form {b} J"),
            });
        }
    }
    Ok(())
}

/// Closed-form energy for the rounds actually run, with the devices that
/// actually took turns and the neighbor counts the topology allows.
fn closed_form(
    scheme: Scheme,
    n: usize,
    config: &ExperimentConfig,
    partition: &DatasetPartition,
    topology: &Topology,
) -> Result<EnergyBreakdown> {
    let fleet = &config.fleet;
    let links = &config.links;
    Ok(match scheme {
        Scheme::Cl => energy_cl(n, fleet, links)?,
        Scheme::Fl => {
            let p = Participation::new(partition.eligible(), None);
            energy_fl_with(n, fleet, links, config.downlink(), &p)?
        }
        Scheme::Cfl => {
            let counts = (0..fleet.total_devices)
                .map(|k| fleet.neighbors_per_round.min(topology.degree(k)))
                .collect();
            let p = Participation::new(partition.eligible(), Some(counts));
            energy_cfl_with(n, fleet, links, &p)?
        }
    })
}

/// Trains every configured scheme to the target loss (or `max_rounds`),
/// bills the logged events and checks them against the closed form at the
/// measured number of rounds.
///
/// Schemes run through `exec`, and so does per-device work inside each
/// round; results do not depend on the thread count.
pub fn run_simulation(config: &ExperimentConfig, exec: Exec) -> Result<SimulationOutput> {
    let (learner, target_loss) = match config.mode()? {
        RunMode::Learn {
            learner,
            target_loss,
        } => (learner, target_loss),
        RunMode::Fixed(_) => {
            return Err(RunError::config(
                "target_loss",
                "simulation needs `target_loss` and a learner",
            ))
        }
    };
    let k = config.fleet.total_devices;
    let spec = &learner.model;
    let data = make_synthetic_dataset(
        spec.classes,
        spec.input_dim,
        learner.dataset.per_class,
        learner.dataset.spread,
        config.seed,
    )?;
    let partition = partition_dataset(
        &data.train,
        k,
        learner.partition.mode,
        learner.partition.shards_per_device,
        config.seed,
    )?;
    let topology = config.topology.build(k)?;
    let ci = config.intensities()?;

    let results = exec.map(&config.schemes, |&scheme| -> Result<SchemeRun> {
        let setup = TrainingSetup {
            scheme,
            learner: spec,
            data: &data,
            partition: &partition,
            topology: &topology,
            active_per_round: config.fleet.active_per_round,
            neighbors: config.fleet.neighbors_per_round,
            batches: config.fleet.center_profile.batches_per_round as usize,
            max_rounds: learner.max_rounds,
            target_loss: Some(target_loss),
            seed: config.seed,
            downlink: config.downlink(),
            literal_fedavg: config.literal_fedavg,
            payload: Payload {
                model_bits: config.links.model_bits,
                dataset_bits: config.links.dataset_bits_per_device,
            },
            exec,
        };
        let trace = run_training(&setup)?;
        let n = trace.final_round();
        let billed = bill_events(&trace.events, &config.fleet, &config.links)?;
        let closed = closed_form(scheme, n, config, &partition, &topology)?;
        check_oracle(scheme, &billed, &closed)?;
        let row = build_row(
            scheme,
            n,
            &config.fleet,
            &config.links,
            &billed,
            &ci,
            config.retrain_period_h,
            Some((trace.final_loss(), trace.target_reached)),
        )?;
        Ok(SchemeRun {
            scheme,
            trace,
            billed,
            row,
        })
    });
    Ok(SimulationOutput {
        runs: results.into_iter().collect::<Result<_>>()?,
    })
}
