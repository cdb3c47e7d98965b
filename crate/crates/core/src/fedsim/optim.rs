use super::{OptimizerSpec, ParamVector};

/// One in-place parameter update from a gradient.
pub trait Optimizer {
    fn step(&mut self, params: &mut ParamVector, grad: &ParamVector);
}

#[derive(Debug, Clone)]
pub struct Sgd {
    pub step_size: f64,
}

impl Optimizer for Sgd {
    fn step(&mut self, params: &mut ParamVector, grad: &ParamVector) {
        for (p, g) in params.0.iter_mut().zip(&grad.0) {
            *p -= self.step_size * g;
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    step_size: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(step_size: f64, beta1: f64, beta2: f64, epsilon: f64, dim: usize) -> Self {
        Self {
            step_size,
            beta1,
            beta2,
            epsilon,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }
}

impl Optimizer for Adam {
    fn step(&mut self, params: &mut ParamVector, grad: &ParamVector) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.0.len() {
            let g = grad.0[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params.0[i] -= self.step_size * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// Fresh optimizer state for `dim` parameters.
pub(crate) fn build(spec: &OptimizerSpec, dim: usize) -> Box<dyn Optimizer> {
    match *spec {
        OptimizerSpec::Adam {
            step_size,
            beta1,
            beta2,
            epsilon,
        } => Box::new(Adam::new(step_size, beta1, beta2, epsilon, dim)),
        OptimizerSpec::Sgd { step_size } => Box::new(Sgd { step_size }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_first_step_moves_by_step_size() {
        // With bias correction the first update is step_size * sign(g).
        let mut adam = Adam::new(0.01, 0.9, 0.999, 1e-12, 2);
        let mut p = ParamVector(vec![1.0, 1.0]);
        adam.step(&mut p, &ParamVector(vec![3.0, -0.5]));
        assert!((p.0[0] - 0.99).abs() < 1e-9);
        assert!((p.0[1] - 1.01).abs() < 1e-9);
    }

    #[test]
    fn adam_minimizes_a_quadratic() {
        let mut adam = Adam::new(0.1, 0.9, 0.999, 1e-8, 1);
        let mut p = ParamVector(vec![5.0]);
        for _ in 0..500 {
            let g = ParamVector(vec![2.0 * (p.0[0] - 1.5)]);
            adam.step(&mut p, &g);
        }
        assert!((p.0[0] - 1.5).abs() < 1e-2);
    }

    #[test]
    fn sgd_step() {
        let mut sgd = Sgd { step_size: 0.5 };
        let mut p = ParamVector(vec![1.0]);
        sgd.step(&mut p, &ParamVector(vec![4.0]));
        assert_eq!(p.0, vec![-1.0]);
    }
}
