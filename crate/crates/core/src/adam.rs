use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates for one parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    pub m: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self {
            step: 0,
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
        }
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_step<T: Scalar>(
    param: &mut [T],
    grad: &[T],
    state: &mut AdamState<T>,
    cfg: &AdamConfig,
) -> Result<()> {
    if grad.len() != param.len() {
        return Err(Error::LengthMismatch {
            op: "adam_step gradient",
            expected: param.len(),
            actual: grad.len(),
        });
    }
    if state.m.len() != param.len() || state.v.len() != param.len() {
        return Err(Error::LengthMismatch {
            op: "adam_step state",
            expected: param.len(),
            actual: state.m.len().min(state.v.len()),
        });
    }
    state.step += 1;
    let t = state.step as f64;
    let b1 = T::lit(cfg.beta1);
    let b2 = T::lit(cfg.beta2);
    let one = T::one();
    let c1 = T::lit(1.0 - cfg.beta1.powf(t));
    let c2 = T::lit(1.0 - cfg.beta2.powf(t));
    let lr = T::lit(cfg.learning_rate);
    let eps = T::lit(cfg.epsilon);
    for (((p, &g), m), v) in param
        .iter_mut()
        .zip(grad)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
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
    fn zero_gradient_leaves_parameter() {
        let mut p = vec![0.3f64, -1.2];
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p, vec![0.3, -1.2]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = vec![0.0f64];
        let mut s = AdamState::new(1);
        let cfg = AdamConfig {
            learning_rate: 0.1,
            ..AdamConfig::default()
        };
        adam_step(&mut p, &[1.0], &mut s, &cfg).unwrap();
        assert!((p[0] + 0.1).abs() < 1e-8, "{}", p[0]);
        assert!(s.v[0] >= 0.0);
    }

    #[test]
    fn deterministic_sequence() {
        let run = || {
            let mut p = vec![0.5f32, -0.25, 1.0];
            let mut s = AdamState::new(3);
            for i in 0..50 {
                let g: Vec<f32> = p.iter().map(|x| 2.0 * x + i as f32 * 0.01).collect();
                adam_step(&mut p, &g, &mut s, &AdamConfig::default()).unwrap();
            }
            p
        };
        let a = run();
        let b = run();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn length_mismatch() {
        let mut p = vec![0.0f64; 2];
        let mut s = AdamState::new(2);
        assert!(adam_step(&mut p, &[1.0], &mut s, &AdamConfig::default()).is_err());
        let mut short = AdamState::new(1);
        assert!(adam_step(&mut p, &[1.0, 1.0], &mut short, &AdamConfig::default()).is_err());
    }
}
