use fedcarbon::energy::{DownlinkMode, Node};
use fedcarbon::exec::Exec;
use fedcarbon::fedsim::{
    make_synthetic_dataset, partition_dataset, run_training, EventKind, LearnerSpec, LossKind,
    OptimizerSpec, Payload, PartitionMode, TrainingSetup, TrainingTrace,
};
use fedcarbon::runner::{preset, run_simulation};
use fedcarbon::topology::Topology;
use fedcarbon::Scheme;

const MODEL_BITS: f64 = 2.32e6;

fn spec() -> LearnerSpec {
    LearnerSpec {
        input_dim: 16,
        hidden_dims: Vec::new(),
        classes: 6,
        loss: LossKind::CrossEntropy,
        optimizer: OptimizerSpec::adam(0.02),
        batch_size: 128,
    }
}

fn train(scheme: Scheme, k: usize, ka: usize, max_rounds: usize, seed: u64) -> TrainingTrace {
    let spec = spec();
    let data = make_synthetic_dataset(6, 16, 100, 0.3, seed).unwrap();
    let partition = partition_dataset(&data.train, k, PartitionMode::Iid, 1, seed).unwrap();
    let topology = Topology::ring(k);
    let setup = TrainingSetup {
        scheme,
        learner: &spec,
        data: &data,
        partition: &partition,
        topology: &topology,
        active_per_round: ka,
        neighbors: 1,
        batches: 3,
        max_rounds,
        target_loss: Some(0.1),
        seed,
        downlink: DownlinkMode::Unicast,
        literal_fedavg: false,
        payload: Payload {
            model_bits: MODEL_BITS,
            dataset_bits: 2.4e8,
        },
        exec: Exec::Parallel,
    };
    run_training(&setup).unwrap()
}

#[test]
fn centralized_training_converges_on_separable_data() {
    let reached = (0..10u64)
        .filter(|&seed| train(Scheme::Cl, 10, 6, 200, seed).target_reached)
        .count();
    assert!(reached >= 9, "only {reached}/10 seeds reached the target");
}

#[test]
fn full_participation_ring_sends_one_model_per_device_per_round() {
    let k = 8;
    let trace = train(Scheme::Cfl, k, k, 15, 2);
    for r in 1..=trace.final_round() {
        let mesh: Vec<_> = trace
            .events
            .iter()
            .filter(|e| e.round == r && e.kind == EventKind::Mesh)
            .collect();
        assert_eq!(mesh.len(), k, "round {r}");
        let bits: f64 = mesh.iter().map(|e| e.bits.unwrap()).sum();
        assert_eq!(bits, k as f64 * MODEL_BITS);
        let mut senders: Vec<_> = mesh.iter().map(|e| e.src).collect();
        senders.sort();
        senders.dedup();
        assert_eq!(senders.len(), k);
        assert!(mesh.iter().all(|e| e.dst != Some(Node::Center)));
    }
    assert_eq!(trace.count(EventKind::Ul), 0);
    assert_eq!(trace.count(EventKind::Dl), 0);
}

#[test]
fn losses_are_finite_and_trend_down() {
    for scheme in [Scheme::Cl, Scheme::Fl, Scheme::Cfl] {
        let trace = train(scheme, 10, 6, 20, 4);
        let losses = trace.losses();
        assert!(losses.iter().all(|l| l.is_finite()));
        assert!(losses.last().unwrap() < &losses[0], "{scheme}: {losses:?}");
    }
}

#[test]
fn table3_preset_reaches_target() {
    let config = preset("table3").unwrap();
    let out = run_simulation(&config, Exec::Parallel).unwrap();
    assert_eq!(out.runs.len(), 3);
    for run in &out.runs {
        assert!(run.trace.target_reached, "{} did not reach the target", run.scheme);
        assert_eq!(run.row.target_reached, Some(true));
        assert_eq!(run.row.n, run.trace.final_round());
        assert!(run.row.carbon_total_g > 0.0);
    }
}
