//! SGD with momentum/weight decay and bias-corrected Adam.
//!
//! Both optimizers own their per-parameter state and update parameter
//! tensors in place. Parameter and gradient lists must keep a stable order
//! across steps.

use thiserror::Error;

use crate::tensor::Tensor;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("parameter {index} has shape {param:?} but gradient shape {grad:?}")]
    ShapeMismatch {
        index: usize,
        param: Vec<usize>,
        grad: Vec<usize>,
    },
    #[error("expected {expected} gradients, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("learning rate must be positive, got {0}")]
    InvalidLearningRate(f64),
}

fn check_pairs(params: &[&mut Tensor], grads: &[Tensor]) -> Result<(), OptimError> {
    if params.len() != grads.len() {
        return Err(OptimError::CountMismatch {
            expected: params.len(),
            got: grads.len(),
        });
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() {
            return Err(OptimError::ShapeMismatch {
                index: i,
                param: p.shape().to_vec(),
                grad: g.shape().to_vec(),
            });
        }
    }
    Ok(())
}

/// v <- momentum*v + grad + weight_decay*param; param <- param - lr*v
#[derive(Debug, Clone)]
pub struct Sgd {
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: Vec<Tensor>,
}

impl Sgd {
    pub fn new(momentum: f64, weight_decay: f64) -> Self {
        Sgd {
            momentum,
            weight_decay,
            velocity: Vec::new(),
        }
    }

    pub fn step(
        &mut self,
        lr: f64,
        params: &mut [&mut Tensor],
        grads: &[Tensor],
    ) -> Result<(), OptimError> {
        if lr <= 0.0 {
            return Err(OptimError::InvalidLearningRate(lr));
        }
        check_pairs(params, grads)?;
        if self.velocity.is_empty() {
            self.velocity = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        }
        for ((param, grad), vel) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
            let pd = param.data_mut();
            let vd = vel.data_mut();
            for i in 0..pd.len() {
                vd[i] = self.momentum * vd[i] + grad.data()[i] + self.weight_decay * pd[i];
                pd[i] -= lr * vd[i];
            }
        }
        Ok(())
    }
}

/// Adam with bias correction. Defaults: beta1 0.9, beta2 0.999, eps 1e-8.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    pub fn new(beta1: f64, beta2: f64, eps: f64) -> Self {
        assert!(
            (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2),
            "betas must lie in [0, 1)"
        );
        Adam {
            beta1,
            beta2,
            eps,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn with_defaults() -> Self {
        Adam::new(0.9, 0.999, 1e-8)
    }

    pub fn step(
        &mut self,
        lr: f64,
        params: &mut [&mut Tensor],
        grads: &[Tensor],
    ) -> Result<(), OptimError> {
        if lr <= 0.0 {
            return Err(OptimError::InvalidLearningRate(lr));
        }
        check_pairs(params, grads)?;
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
            self.v = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((param, grad), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            let pd = param.data_mut();
            let md = m.data_mut();
            let vd = v.data_mut();
            for i in 0..pd.len() {
                let g = grad.data()[i];
                md[i] = self.beta1 * md[i] + (1.0 - self.beta1) * g;
                vd[i] = self.beta2 * vd[i] + (1.0 - self.beta2) * g * g;
                let m_hat = md[i] / bc1;
                let v_hat = vd[i] / bc2;
                pd[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
