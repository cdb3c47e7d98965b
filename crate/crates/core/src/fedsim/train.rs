use rand::seq::index;

use super::optim;
use super::{loss_and_grad, Dataset, LearnerSpec, ParamVector, Result, SimError};
use crate::rng::{self, Stream};

/// Runs exactly `batches` mini-batch optimizer steps from `params` on the
/// examples in `shard`. The optimizer starts from fresh state on every call.
///
/// Each step draws `batch_size` examples without replacement (the whole
/// shard if it is smaller). Returns the updated parameters and the mean
/// mini-batch loss measured before each step; with zero steps the loss is
/// that of the whole shard.
pub fn local_train(
    params: &ParamVector,
    data: &Dataset,
    shard: &[usize],
    spec: &LearnerSpec,
    batches: usize,
    seed: u64,
) -> Result<(ParamVector, f64)> {
    if shard.is_empty() {
        return Err(SimError::EmptyShard);
    }
    if batches == 0 {
        let (loss, _) = loss_and_grad(spec, params, data, shard)?;
        return Ok((params.clone(), loss));
    }
    let mut rng = rng::keyed(seed, Stream::LocalTrain, 0, 0);
    let mut opt = optim::build(&spec.optimizer, params.len());
    let mut current = params.clone();
    let take = spec.batch_size.min(shard.len());
    let mut batch = Vec::with_capacity(take);
    let mut loss_sum = 0.0;
    for _ in 0..batches {
        batch.clear();
        batch.extend(index::sample(&mut rng, shard.len(), take).into_iter().map(|i| shard[i]));
        let (loss, grad) = loss_and_grad(spec, &current, data, &batch)?;
        loss_sum += loss;
        opt.step(&mut current, &grad);
    }
    Ok((current, loss_sum / batches as f64))
}
