//! Parameter update rules.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub decay: f64,
    pub epsilon: f64,
}

/// Squared-gradient accumulator and momentum buffer for each parameter tensor.
///
/// Per component: `r ← γ·r + (1−γ)·g²`, `v ← μ·v − lr·g/√(r+ε)`, `θ ← θ + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsPropState {
    pub accumulators: Vec<Tensor>,
    pub velocities: Vec<Tensor>,
    pub steps: u64,
}

fn mismatch(left: &Tensor, right: &Tensor) -> Error {
    Error::Dimension {
        op: "optimizer update",
        left: left.shape().to_vec(),
        right: right.shape().to_vec(),
    }
}

impl RmsPropState {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let accumulators: Vec<Tensor> = params.into_iter().map(|p| Tensor::zeros(p.shape())).collect();
        RmsPropState {
            velocities: accumulators.clone(),
            accumulators,
            steps: 0,
        }
    }

    pub fn update(&mut self, params: &mut [&mut Tensor], grads: &[Tensor], cfg: &RmsPropConfig) -> Result<()> {
        if params.len() != self.accumulators.len() || grads.len() != params.len() {
            return Err(Error::Dimension {
                op: "optimizer update",
                left: vec![self.accumulators.len()],
                right: vec![params.len(), grads.len()],
            });
        }
        for (i, p) in params.iter().enumerate() {
            if p.shape() != grads[i].shape() {
                return Err(mismatch(p, &grads[i]));
            }
            if p.shape() != self.accumulators[i].shape() {
                return Err(mismatch(p, &self.accumulators[i]));
            }
        }
        for (((p, g), r), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.accumulators.iter_mut())
            .zip(self.velocities.iter_mut())
        {
            for (((theta, &g), r), v) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(r.data_mut())
                .zip(v.data_mut())
            {
                *r = cfg.decay * *r + (1.0 - cfg.decay) * g * g;
                *v = cfg.momentum * *v - cfg.learning_rate * g / (*r + cfg.epsilon).sqrt();
                *theta += *v;
            }
        }
        self.steps += 1;
        Ok(())
    }
}

/// Plain stochastic gradient descent: `θ ← θ − lr·g`.
pub fn sgd_update(params: &mut [&mut Tensor], grads: &[Tensor], learning_rate: f64) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::Dimension {
            op: "sgd update",
            left: vec![params.len()],
            right: vec![grads.len()],
        });
    }
    for (p, g) in params.iter().zip(grads) {
        if p.shape() != g.shape() {
            return Err(mismatch(p, g));
        }
    }
    for (p, g) in params.iter_mut().zip(grads) {
        for (theta, d) in p.data_mut().iter_mut().zip(g.data()) {
            *theta -= learning_rate * d;
        }
    }
    Ok(())
}
