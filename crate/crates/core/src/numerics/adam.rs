use super::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for one parameter matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: Vec<f32>,
    v: Vec<f32>,
    shape: (usize, usize),
}

impl AdamState {
    pub fn new(shape: (usize, usize), config: AdamConfig) -> Self {
        let n = shape.0 * shape.1;
        Self {
            config,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
            shape,
        }
    }

    pub fn for_params(params: &Matrix, config: AdamConfig) -> Self {
        Self::new(params.shape(), config)
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update.
    ///
    /// Entries whose gradient is exactly zero keep their parameter and moment
    /// values, so parameters of features that never fire stay frozen no matter
    /// what momentum they carried before.
    pub fn update(&mut self, params: &mut Matrix, grads: &Matrix) -> Result<()> {
        if params.shape() != self.shape || grads.shape() != self.shape {
            return Err(Error::Dimension(format!(
                "adam state {:?}, params {:?}, grads {:?}",
                self.shape,
                params.shape(),
                grads.shape()
            )));
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        if !(lr > 0.0) {
            return Err(Error::Parameter(format!("learning rate must be positive, got {lr}")));
        }
        if let Some(i) = grads.as_slice().iter().position(|g| !g.is_finite()) {
            return Err(Error::Divergence {
                step: self.step,
                reason: format!("non-finite gradient at entry {i}"),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - (beta1 as f64).powi(t);
        let bc2 = 1.0 - (beta2 as f64).powi(t);
        let p = params.as_mut_slice();
        for (i, &g) in grads.as_slice().iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let m = beta1 * self.m[i] + (1.0 - beta1) * g;
            let v = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            self.m[i] = m;
            self.v[i] = v;
            let m_hat = m as f64 / bc1;
            let v_hat = v as f64 / bc2;
            p[i] -= (lr as f64 * m_hat / (v_hat.sqrt() + eps as f64)) as f32;
        }
        if let Some(i) = p.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: self.step,
                reason: format!("non-finite parameter at entry {i}"),
            });
        }
        Ok(())
    }
}

/// Apply one Adam step to `params`, advancing `state`.
pub fn adam_step(params: &mut Matrix, grads: &Matrix, state: &mut AdamState) -> Result<()> {
    state.update(params, grads)
}
