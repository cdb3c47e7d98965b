use super::{ParamVector, Result, SimError};

fn check_same_dim<'a>(models: impl IntoIterator<Item = &'a ParamVector>, expected: usize) -> Result<()> {
    for m in models {
        if m.len() != expected {
            return Err(SimError::DimensionMismatch {
                expected,
                found: m.len(),
            });
        }
    }
    Ok(())
}

/// Federated averaging with weights `Q_k / sum(Q)` over the received
/// models, so the weights sum to one. Models are consumed in the given
/// order.
pub fn fedavg_aggregate(models: &[(&ParamVector, usize)]) -> Result<ParamVector> {
    let first = models.first().ok_or(SimError::NoModels)?.0;
    check_same_dim(models.iter().map(|m| m.0), first.len())?;
    let total: usize = models.iter().map(|m| m.1).sum();
    if total == 0 {
        return Err(SimError::InvalidSetup("aggregated models hold no examples".into()));
    }
    let mut out = vec![0.0; first.len()];
    for (w, q) in models {
        let weight = *q as f64 / total as f64;
        for (o, v) in out.iter_mut().zip(&w.0) {
            *o += weight * v;
        }
    }
    Ok(ParamVector(out))
}

/// The unnormalized form `(1/K_a) * sum_k (Q_k / Q) * W_k`, with `Q` the
/// global example count. Its weights sum to `sum(Q_k) / (K_a * Q)`, which
/// shrinks the model whenever that is below one.
pub fn fedavg_literal(models: &[(&ParamVector, usize)], global_examples: usize) -> Result<ParamVector> {
    let first = models.first().ok_or(SimError::NoModels)?.0;
    check_same_dim(models.iter().map(|m| m.0), first.len())?;
    if global_examples == 0 {
        return Err(SimError::InvalidSetup("global example count is zero".into()));
    }
    let ka = models.len() as f64;
    let mut out = vec![0.0; first.len()];
    for (w, q) in models {
        let weight = *q as f64 / global_examples as f64 / ka;
        for (o, v) in out.iter_mut().zip(&w.0) {
            *o += weight * v;
        }
    }
    Ok(ParamVector(out))
}

/// One consensus update of a device model toward its neighbors:
/// `W_k + sum_h G_h (W_h - W_k)` with `G_h = Q_h / (N * sum Q_h)`.
///
/// The weights sum to `1/N`, so the result is the convex combination
/// `(1 - 1/N) W_k + sum_h G_h W_h`, which is how it is evaluated. With a
/// single equal-weight neighbor and `N = 1` this returns the neighbor's
/// model exactly. Neighbors holding no examples carry zero weight; if all of
/// them are empty the model is returned unchanged.
pub fn consensus_step(
    own: (&ParamVector, usize),
    neighbors: &[(&ParamVector, usize)],
    cap: usize,
) -> Result<ParamVector> {
    if neighbors.is_empty() {
        return Err(SimError::NoModels);
    }
    if cap < neighbors.len() {
        return Err(SimError::TooManyNeighbors {
            actual: neighbors.len(),
            cap,
        });
    }
    let dim = own.0.len();
    check_same_dim(neighbors.iter().map(|m| m.0), dim)?;
    let q_sum: usize = neighbors.iter().map(|m| m.1).sum();
    if q_sum == 0 {
        return Ok(own.0.clone());
    }
    let denom = cap as f64 * q_sum as f64;
    let gammas: Vec<f64> = neighbors.iter().map(|m| m.1 as f64 / denom).collect();
    let self_weight = 1.0 - gammas.iter().sum::<f64>();
    let mut out: Vec<f64> = own.0.0.iter().map(|v| self_weight * v).collect();
    for ((w, _), g) in neighbors.iter().zip(&gammas) {
        for (o, v) in out.iter_mut().zip(&w.0) {
            *o += g * v;
        }
    }
    Ok(ParamVector(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector(v.to_vec())
    }

    #[test]
    fn fedavg_examples() {
        assert_eq!(fedavg_aggregate(&[(&pv(&[0.0]), 5), (&pv(&[2.0]), 5)]).unwrap(), pv(&[1.0]));
        assert_eq!(fedavg_aggregate(&[(&pv(&[3.5, -1.0]), 7)]).unwrap(), pv(&[3.5, -1.0]));
        assert_eq!(fedavg_aggregate(&[(&pv(&[0.0]), 1), (&pv(&[4.0]), 3)]).unwrap(), pv(&[3.0]));
    }

    #[test]
    fn fedavg_errors() {
        assert_eq!(fedavg_aggregate(&[]), Err(SimError::NoModels));
        assert!(matches!(
            fedavg_aggregate(&[(&pv(&[0.0]), 1), (&pv(&[1.0, 2.0]), 1)]),
            Err(SimError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn literal_fedavg_shrinks() {
        // Two of four equal devices: weights (1/2)(1/4) each, sum 1/4.
        let out = fedavg_literal(&[(&pv(&[4.0]), 10), (&pv(&[4.0]), 10)], 40).unwrap();
        assert_eq!(out, pv(&[1.0]));
    }

    #[test]
    fn consensus_examples() {
        let own = pv(&[1.5, -2.0]);
        let same = consensus_step((&own, 3), &[(&own, 3), (&own, 3)], 2).unwrap();
        assert_eq!(same, own);

        let nb = pv(&[0.1, 0.7]);
        assert_eq!(consensus_step((&own, 4), &[(&nb, 4)], 1).unwrap(), nb);

        let out = consensus_step((&pv(&[2.0]), 1), &[(&pv(&[0.0]), 1), (&pv(&[4.0]), 1)], 2).unwrap();
        assert_eq!(out, pv(&[2.0]));
    }

    #[test]
    fn consensus_errors_and_empty_neighbors() {
        let a = pv(&[1.0]);
        assert_eq!(consensus_step((&a, 1), &[], 1), Err(SimError::NoModels));
        assert!(matches!(
            consensus_step((&a, 1), &[(&a, 1), (&a, 1)], 1),
            Err(SimError::TooManyNeighbors { actual: 2, cap: 1 })
        ));
        assert!(consensus_step((&a, 1), &[(&pv(&[1.0, 2.0]), 1)], 1).is_err());
        assert_eq!(consensus_step((&a, 1), &[(&pv(&[9.0]), 0)], 1).unwrap(), a);
    }
}
