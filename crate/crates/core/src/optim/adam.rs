use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment accumulators for one named parameter buffer.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub name: String,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(name: impl Into<String>, len: usize) -> Self {
        Self::with_config(name, len, AdamConfig::default())
    }

    pub fn with_config(name: impl Into<String>, len: usize, config: AdamConfig) -> Self {
        AdamState { name: name.into(), m: vec![0.0; len], v: vec![0.0; len], step: 0, config }
    }
}

/// `lr / (1 + (iteration - offset) * decay)`.
pub fn lr_decay(base_lr: f64, iteration: i64, offset: i64, decay: f64) -> Result<f64> {
    let denom = 1.0 + (iteration - offset) as f64 * decay;
    if !(denom > 0.0) {
        return Err(Error::invalid("lr_decay", format!("non-positive denominator {denom}")));
    }
    Ok(base_lr / denom)
}

/// One bias-corrected Adam update in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "adam `{}`: params {}, grads {}, state {}",
            state.name,
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient of {}", state.name)));
    }
    let AdamConfig { beta1, beta2, eps } = state.config;
    state.step += 1;
    let c1 = 1.0 - beta1.powi(state.step as i32);
    let c2 = 1.0 - beta2.powi(state.step as i32);
    for ((p, &g), (m, v)) in params.iter_mut().zip(grads).zip(state.m.iter_mut().zip(state.v.iter_mut())) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_examples() {
        assert_eq!(lr_decay(3e-4, 17, 17, 0.5).unwrap(), 3e-4);
        assert!((lr_decay(2e-4, 0, -5000, 2e-4).unwrap() - 1e-4).abs() < 1e-18);
        for it in [0, 10, 100_000] {
            assert_eq!(lr_decay(4e-4, it, -5000, 0.0).unwrap(), 4e-4);
        }
        assert!(lr_decay(1.0, 0, 10, 0.2).is_err());
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::new("p", 2);
        for _ in 0..10 {
            adam_step(&mut p, &[0.0, 0.0], &mut s, 0.1).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![0.0];
        let mut s = AdamState::new("p", 1);
        adam_step(&mut p, &[1.0], &mut s, 0.01).unwrap();
        // m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
        assert!((p[0] + 0.01 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn parameters_update_independently() {
        let mut both = vec![0.0, 0.0];
        let mut s = AdamState::new("both", 2);
        let mut a = vec![0.0];
        let mut sa = AdamState::new("a", 1);
        for k in 0..5 {
            let g = [0.3 * k as f64, -1.0];
            adam_step(&mut both, &g, &mut s, 0.05).unwrap();
            adam_step(&mut a, &g[..1], &mut sa, 0.05).unwrap();
        }
        assert_eq!(both[0], a[0]);
    }

    #[test]
    fn nan_gradient_names_parameter() {
        let mut p = vec![0.0];
        let mut s = AdamState::new("density", 1);
        let err = adam_step(&mut p, &[f64::NAN], &mut s, 0.1).unwrap_err();
        assert!(err.to_string().contains("density"));
        assert!(adam_step(&mut p, &[0.0, 0.0], &mut s, 0.1).is_err());
    }
}
