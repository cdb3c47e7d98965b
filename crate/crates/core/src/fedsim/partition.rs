use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, Result, SimError};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMode {
    #[default]
    Iid,
    /// Sort by label, cut into contiguous shards, deal a few shards to each
    /// device.
    LabelShard,
}

/// Disjoint per-device index lists into a training set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPartition {
    mode: PartitionMode,
    shards: Vec<Vec<usize>>,
}

impl DatasetPartition {
    pub fn mode(&self) -> PartitionMode {
        self.mode
    }

    pub fn devices(&self) -> usize {
        self.shards.len()
    }

    /// Sorted example indices of device `k`.
    pub fn shard(&self, k: usize) -> &[usize] {
        &self.shards[k]
    }

    /// Local example counts `Q_k`.
    pub fn sizes(&self) -> Vec<usize> {
        self.shards.iter().map(Vec::len).collect()
    }

    /// Global example count `Q`.
    pub fn total(&self) -> usize {
        self.shards.iter().map(Vec::len).sum()
    }

    /// Devices holding at least one example, ascending.
    pub fn eligible(&self) -> Vec<usize> {
        (0..self.shards.len()).filter(|&k| !self.shards[k].is_empty()).collect()
    }
}

/// Splits `data` across `devices` devices.
///
/// `Iid` deals a random permutation into near-equal contiguous parts.
/// `LabelShard` sorts by label, cuts `devices * shards_per_device`
/// near-equal contiguous shards and deals `shards_per_device` random shards
/// to each device.
pub fn partition_dataset(
    data: &Dataset,
    devices: usize,
    mode: PartitionMode,
    shards_per_device: usize,
    seed: u64,
) -> Result<DatasetPartition> {
    if devices == 0 {
        return Err(SimError::InvalidPartition("need at least one device".into()));
    }
    if devices > data.len() {
        return Err(SimError::InvalidPartition(format!(
            "{devices} devices but only {} examples",
            data.len()
        )));
    }
    let mut rng = rng::keyed(seed, Stream::Partition, devices as u64, 0);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);

    let shards = match mode {
        PartitionMode::Iid => cut(&order, devices),
        PartitionMode::LabelShard => {
            if shards_per_device == 0 {
                return Err(SimError::InvalidPartition(
                    "shards_per_device must be at least 1".into(),
                ));
            }
            order.sort_by_key(|&i| data.y(i));
            let mut pieces = cut(&order, devices * shards_per_device);
            pieces.shuffle(&mut rng);
            pieces
                .chunks(shards_per_device)
                .map(|group| group.concat())
                .collect()
        }
    };
    let shards = shards
        .into_iter()
        .map(|mut s| {
            s.sort_unstable();
            s
        })
        .collect();
    Ok(DatasetPartition { mode, shards })
}

fn cut(items: &[usize], parts: usize) -> Vec<Vec<usize>> {
    let (base, extra) = (items.len() / parts, items.len() % parts);
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        out.push(items[start..start + len].to_vec());
        start += len;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fedsim::make_synthetic_dataset;

    fn covers_disjointly(p: &DatasetPartition, n: usize) {
        let mut all: Vec<usize> = (0..p.devices()).flat_map(|k| p.shard(k).to_vec()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn iid_equal_sizes_near_uniform_labels() {
        let s = make_synthetic_dataset(6, 4, 1334, 0.3, 1).unwrap();
        // Take exactly 1200 training examples to match the K=10 example.
        let sub = Dataset::new(
            4,
            6,
            (0..1200).flat_map(|i| s.train.x(i).to_vec()).collect(),
            s.train.labels()[..1200].to_vec(),
        )
        .unwrap();
        let global = sub.histogram(&(0..1200).collect::<Vec<_>>());
        let p = partition_dataset(&sub, 10, PartitionMode::Iid, 1, 5).unwrap();
        assert!(p.sizes().iter().all(|&q| q == 120));
        covers_disjointly(&p, 1200);
        // Hypergeometric-ish: each count within 3 sigma of the proportional
        // expectation.
        for k in 0..10 {
            let h = sub.histogram(p.shard(k));
            for (c, &count) in h.iter().enumerate() {
                let prob = global[c] as f64 / 1200.0;
                let mean = 120.0 * prob;
                let sigma = (120.0 * prob * (1.0 - prob)).sqrt();
                assert!((count as f64 - mean).abs() <= 3.0 * sigma, "device {k} class {c}: {count}");
            }
        }
    }

    #[test]
    fn one_shard_per_device_means_one_class() {
        let s = make_synthetic_dataset(6, 4, 200, 0.3, 2).unwrap();
        let p = partition_dataset(&s.train, 6, PartitionMode::LabelShard, 1, 3).unwrap();
        covers_disjointly(&p, s.train.len());
        for k in 0..6 {
            let h = s.train.histogram(p.shard(k));
            assert_eq!(h.iter().filter(|&&c| c > 0).count(), 1);
        }
    }

    #[test]
    fn single_device_gets_everything() {
        let s = make_synthetic_dataset(3, 2, 20, 0.3, 2).unwrap();
        let a = partition_dataset(&s.train, 1, PartitionMode::Iid, 1, 3).unwrap();
        let b = partition_dataset(&s.train, 1, PartitionMode::LabelShard, 2, 3).unwrap();
        assert_eq!(a.shard(0), b.shard(0));
        assert_eq!(a.total(), s.train.len());
    }

    #[test]
    fn too_many_devices_is_an_error() {
        let s = make_synthetic_dataset(2, 2, 3, 0.3, 2).unwrap();
        assert!(partition_dataset(&s.train, s.train.len() + 1, PartitionMode::Iid, 1, 0).is_err());
        assert!(partition_dataset(&s.train, 0, PartitionMode::Iid, 1, 0).is_err());
        assert!(partition_dataset(&s.train, 2, PartitionMode::LabelShard, 0, 0).is_err());
    }

    #[test]
    fn surplus_shards_leave_devices_empty() {
        let s = make_synthetic_dataset(2, 2, 3, 0.3, 2).unwrap();
        let n = s.train.len();
        let mut saw_empty = false;
        for seed in 0..20 {
            let p = partition_dataset(&s.train, n, PartitionMode::LabelShard, 2, seed).unwrap();
            covers_disjointly(&p, n);
            saw_empty |= p.eligible().len() < n;
        }
        assert!(saw_empty);
    }
}
