use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Result, SimError};
use crate::rng::{self, Stream};

/// Dense labeled examples, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    classes: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(dim: usize, classes: usize, features: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(SimError::InvalidDataset(format!(
                "{} features do not fit {} rows of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(SimError::InvalidDataset(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        Ok(Self {
            dim,
            classes,
            features,
            labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn y(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Example count per class over `indices`.
    pub fn histogram(&self, indices: &[usize]) -> Vec<usize> {
        let mut h = vec![0; self.classes];
        for &i in indices {
            h[self.labels[i]] += 1;
        }
        h
    }
}

/// Training set and held-out validation set.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSplit {
    pub train: Dataset,
    pub validation: Dataset,
}

impl SyntheticSplit {
    pub fn total(&self) -> usize {
        self.train.len() + self.validation.len()
    }
}

/// Gaussian clusters around random unit-norm class centers with a shared
/// isotropic `spread`. Each class contributes `per_class` examples, a tenth
/// of which (rounded down) go to validation.
///
/// `spread` is the RMS distance of an example from its center, so the
/// per-coordinate standard deviation is `spread / sqrt(input_dim)` and the
/// overlap between classes does not grow with the dimension.
pub fn make_synthetic_dataset(
    classes: usize,
    input_dim: usize,
    per_class: usize,
    spread: f64,
    seed: u64,
) -> Result<SyntheticSplit> {
    if classes < 2 {
        return Err(SimError::InvalidDataset("need at least 2 classes".into()));
    }
    if per_class < 1 || input_dim < 1 {
        return Err(SimError::InvalidDataset(
            "per_class and input_dim must be at least 1".into(),
        ));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(SimError::InvalidDataset(format!("spread {spread} is invalid")));
    }
    let mut rng = rng::keyed(seed, Stream::Dataset, 0, 0);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| loop {
            let v: Vec<f64> = (0..input_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect();

    let sigma = spread / (input_dim as f64).sqrt();
    let n_val = per_class / 10;
    let mut train = (Vec::new(), Vec::new());
    let mut val = (Vec::new(), Vec::new());
    for (c, center) in centers.iter().enumerate() {
        for i in 0..per_class {
            let (feats, labels) = if i < per_class - n_val {
                (&mut train.0, &mut train.1)
            } else {
                (&mut val.0, &mut val.1)
            };
            for &mu in center {
                let noise: f64 = StandardNormal.sample(&mut rng);
                feats.push(mu + sigma * noise);
            }
            labels.push(c);
        }
    }

    let train = shuffled(input_dim, train.0, train.1, &mut rng);
    Ok(SyntheticSplit {
        train: Dataset::new(input_dim, classes, train.0, train.1)?,
        validation: Dataset::new(input_dim, classes, val.0, val.1)?,
    })
}

fn shuffled(
    dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    rng: &mut impl Rng,
) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
    let mut f = Vec::with_capacity(features.len());
    let mut l = Vec::with_capacity(labels.len());
    for i in order {
        f.extend_from_slice(&features[i * dim..(i + 1) * dim]);
        l.push(labels[i]);
    }
    (f, l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_and_sized() {
        let s = make_synthetic_dataset(6, 8, 200, 0.3, 7).unwrap();
        assert_eq!(s.total(), 1200);
        assert_eq!(s.train.len(), 1080);
        let all: Vec<usize> = (0..s.train.len()).collect();
        assert!(s.train.histogram(&all).iter().all(|&c| c == 180));
        let all: Vec<usize> = (0..s.validation.len()).collect();
        assert!(s.validation.histogram(&all).iter().all(|&c| c == 20));
    }

    #[test]
    fn deterministic_under_seed() {
        let a = make_synthetic_dataset(3, 4, 20, 0.5, 1).unwrap();
        let b = make_synthetic_dataset(3, 4, 20, 0.5, 1).unwrap();
        let c = make_synthetic_dataset(3, 4, 20, 0.5, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_spread_collapses_to_centers() {
        let s = make_synthetic_dataset(4, 5, 30, 0.0, 3).unwrap();
        for i in 0..s.train.len() {
            let norm: f64 = s.train.x(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_degenerate_requests() {
        assert!(make_synthetic_dataset(1, 4, 10, 0.1, 0).is_err());
        assert!(make_synthetic_dataset(3, 4, 0, 0.1, 0).is_err());
        assert!(make_synthetic_dataset(3, 0, 10, 0.1, 0).is_err());
        assert!(make_synthetic_dataset(3, 4, 10, -1.0, 0).is_err());
    }
}
