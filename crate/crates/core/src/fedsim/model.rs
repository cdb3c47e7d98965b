use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Result, SimError};
use crate::rng::{self, Stream};

/// Flat model parameters (weights and biases, layer by layer).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    #[default]
    CrossEntropy,
    /// Element-wise Huber (delta = 1) between the softmax output and the
    /// one-hot target, averaged over classes.
    HuberOnOneHot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerSpec {
    Adam {
        step_size: f64,
        #[serde(default = "beta1")]
        beta1: f64,
        #[serde(default = "beta2")]
        beta2: f64,
        #[serde(default = "epsilon")]
        epsilon: f64,
    },
    Sgd {
        step_size: f64,
    },
}

fn beta1() -> f64 {
    0.9
}
fn beta2() -> f64 {
    0.999
}
fn epsilon() -> f64 {
    1e-8
}

impl OptimizerSpec {
    pub fn adam(step_size: f64) -> Self {
        OptimizerSpec::Adam {
            step_size,
            beta1: beta1(),
            beta2: beta2(),
            epsilon: epsilon(),
        }
    }
}

/// Softmax classifier: multinomial logistic regression when `hidden_dims`
/// is empty, otherwise an MLP with tanh hidden layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub input_dim: usize,
    #[serde(default)]
    pub hidden_dims: Vec<usize>,
    pub classes: usize,
    #[serde(default)]
    pub loss: LossKind,
    pub optimizer: OptimizerSpec,
    pub batch_size: usize,
}

impl LearnerSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::InvalidLearner(m.to_string()));
        if self.classes < 2 {
            return bad("classes must be at least 2");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1");
        }
        if self.input_dim < 1 || self.hidden_dims.contains(&0) {
            return bad("layer widths must be at least 1");
        }
        let ok = match self.optimizer {
            OptimizerSpec::Adam {
                step_size,
                beta1,
                beta2,
                epsilon,
            } => {
                step_size > 0.0
                    && (0.0..1.0).contains(&beta1)
                    && (0.0..1.0).contains(&beta2)
                    && epsilon > 0.0
            }
            OptimizerSpec::Sgd { step_size } => step_size > 0.0,
        };
        if !ok {
            return bad("optimizer hyper-parameters out of range");
        }
        Ok(())
    }

    /// Layer widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden_dims.len() + 2);
        w.push(self.input_dim);
        w.extend_from_slice(&self.hidden_dims);
        w.push(self.classes);
        w
    }

    pub fn param_count(&self) -> usize {
        self.widths().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Gaussian init with variance `1/fan_in` for weights, zero biases.
pub fn init_params(spec: &LearnerSpec, seed: u64) -> ParamVector {
    let mut rng = rng::keyed(seed, Stream::Init, 0, 0);
    let mut out = Vec::with_capacity(spec.param_count());
    for w in spec.widths().windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let normal = Normal::new(0.0, (1.0 / fan_in as f64).sqrt()).expect("finite std");
        out.extend((0..fan_in * fan_out).map(|_| normal.sample(&mut rng)));
        out.extend(std::iter::repeat_n(0.0, fan_out));
    }
    ParamVector(out)
}

fn check_dims(spec: &LearnerSpec, params: &ParamVector, data: &Dataset) -> Result<()> {
    let expected = spec.param_count();
    if params.len() != expected {
        return Err(SimError::DimensionMismatch {
            expected,
            found: params.len(),
        });
    }
    if data.dim() != spec.input_dim {
        return Err(SimError::DimensionMismatch {
            expected: spec.input_dim,
            found: data.dim(),
        });
    }
    if data.classes() > spec.classes {
        return Err(SimError::InvalidLearner(format!(
            "dataset has {} classes but the learner outputs {}",
            data.classes(),
            spec.classes
        )));
    }
    Ok(())
}

/// Activations of every layer for one example; the last entry holds logits.
fn forward(widths: &[usize], params: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
    let layers = widths.len() - 1;
    let mut acts = Vec::with_capacity(widths.len());
    acts.push(x.to_vec());
    let mut offset = 0;
    for l in 0..layers {
        let (n_in, n_out) = (widths[l], widths[l + 1]);
        let w = &params[offset..offset + n_in * n_out];
        let b = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
        offset += n_in * n_out + n_out;
        let a = &acts[l];
        let mut z: Vec<f64> = (0..n_out)
            .map(|o| b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(a).map(|(wi, ai)| wi * ai).sum::<f64>())
            .collect();
        if l + 1 < layers {
            z.iter_mut().for_each(|v| *v = v.tanh());
        }
        acts.push(z);
    }
    acts
}

fn softmax(logits: &[f64]) -> (Vec<f64>, f64) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let log_sum = max + sum.ln();
    (exps.into_iter().map(|e| e / sum).collect(), log_sum)
}

fn huber(r: f64) -> (f64, f64) {
    if r.abs() <= 1.0 {
        (0.5 * r * r, r)
    } else {
        (r.abs() - 0.5, r.signum())
    }
}

/// Loss of one example and its gradient with respect to the logits.
fn output_loss(kind: LossKind, logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let (p, log_sum) = softmax(logits);
    match kind {
        LossKind::CrossEntropy => {
            let loss = log_sum - logits[label];
            let mut g = p;
            g[label] -= 1.0;
            (loss, g)
        }
        LossKind::HuberOnOneHot => {
            let c = p.len() as f64;
            let mut loss = 0.0;
            let dp: Vec<f64> = p
                .iter()
                .enumerate()
                .map(|(j, &pj)| {
                    let (h, dh) = huber(pj - if j == label { 1.0 } else { 0.0 });
                    loss += h / c;
                    dh / c
                })
                .collect();
            let dot: f64 = p.iter().zip(&dp).map(|(a, b)| a * b).sum();
            let g = p.iter().zip(&dp).map(|(pj, gj)| pj * (gj - dot)).collect();
            (loss, g)
        }
    }
}

/// Mean loss over `indices` and its gradient with respect to `params`.
pub fn loss_and_grad(
    spec: &LearnerSpec,
    params: &ParamVector,
    data: &Dataset,
    indices: &[usize],
) -> Result<(f64, ParamVector)> {
    check_dims(spec, params, data)?;
    if indices.is_empty() {
        return Err(SimError::EmptyShard);
    }
    let widths = spec.widths();
    let layers = widths.len() - 1;
    let mut grad = vec![0.0; params.len()];
    let mut total = 0.0;
    let offsets: Vec<usize> = widths
        .windows(2)
        .scan(0, |off, w| {
            let here = *off;
            *off += w[0] * w[1] + w[1];
            Some(here)
        })
        .collect();

    for &i in indices {
        let acts = forward(&widths, &params.0, data.x(i));
        let (loss, mut delta) = output_loss(spec.loss, &acts[layers], data.y(i));
        total += loss;
        for l in (0..layers).rev() {
            let (n_in, n_out) = (widths[l], widths[l + 1]);
            let off = offsets[l];
            let a = &acts[l];
            for o in 0..n_out {
                let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for (g, ai) in row.iter_mut().zip(a) {
                    *g += delta[o] * ai;
                }
                grad[off + n_in * n_out + o] += delta[o];
            }
            if l > 0 {
                let w = &params.0[off..off + n_in * n_out];
                delta = (0..n_in)
                    .map(|j| {
                        let back: f64 = (0..n_out).map(|o| w[o * n_in + j] * delta[o]).sum();
                        back * (1.0 - a[j] * a[j])
                    })
                    .collect();
            }
        }
    }
    let scale = 1.0 / indices.len() as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok((total * scale, ParamVector(grad)))
}

/// Mean loss and accuracy over the whole dataset.
pub fn evaluate(spec: &LearnerSpec, params: &ParamVector, data: &Dataset) -> Result<(f64, f64)> {
    check_dims(spec, params, data)?;
    if data.is_empty() {
        return Err(SimError::InvalidDataset("cannot evaluate on an empty set".into()));
    }
    let widths = spec.widths();
    let (mut loss, mut correct) = (0.0, 0usize);
    for i in 0..data.len() {
        let acts = forward(&widths, &params.0, data.x(i));
        let logits = acts.last().expect("output layer");
        loss += output_loss(spec.loss, logits, data.y(i)).0;
        let argmax = logits
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best })
            .0;
        correct += usize::from(argmax == data.y(i));
    }
    let n = data.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(hidden: Vec<usize>, loss: LossKind) -> LearnerSpec {
        LearnerSpec {
            input_dim: 3,
            hidden_dims: hidden,
            classes: 4,
            loss,
            optimizer: OptimizerSpec::Sgd { step_size: 0.1 },
            batch_size: 4,
        }
    }

    #[test]
    fn param_count_and_init() {
        let s = spec(vec![5], LossKind::CrossEntropy);
        assert_eq!(s.param_count(), 3 * 5 + 5 + 5 * 4 + 4);
        let p = init_params(&s, 1);
        assert_eq!(p.len(), s.param_count());
        assert_eq!(p, init_params(&s, 1));
        assert_ne!(p, init_params(&s, 2));
    }

    #[test]
    fn uniform_logits_give_log_c_cross_entropy() {
        let s = spec(vec![], LossKind::CrossEntropy);
        let data = Dataset::new(3, 4, vec![0.5, -1.0, 2.0], vec![2]).unwrap();
        let (loss, _) = loss_and_grad(&s, &ParamVector::zeros(s.param_count()), &data, &[0]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn huber_switches_branch_outside_unit_residual() {
        assert_eq!(huber(0.5), (0.125, 0.5));
        assert_eq!(huber(-2.0), (1.5, -1.0));
    }

    #[test]
    fn validation_catches_bad_specs() {
        let mut s = spec(vec![], LossKind::CrossEntropy);
        assert!(s.validate().is_ok());
        s.classes = 1;
        assert!(s.validate().is_err());
        let mut s = spec(vec![0], LossKind::CrossEntropy);
        assert!(s.validate().is_err());
        s.hidden_dims = vec![];
        s.batch_size = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s = spec(vec![], LossKind::CrossEntropy);
        let data = Dataset::new(3, 4, vec![0.0; 3], vec![0]).unwrap();
        assert!(matches!(
            loss_and_grad(&s, &ParamVector::zeros(3), &data, &[0]),
            Err(SimError::DimensionMismatch { .. })
        ));
    }
}
