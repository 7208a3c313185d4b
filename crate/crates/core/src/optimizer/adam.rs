use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_hat: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok =
            self.lr > 0.0 && (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.eps_hat > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(n: usize, config: AdamConfig) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            config,
        }
    }

    pub fn reset(&mut self) {
        self.m.iter_mut().for_each(|x| *x = 0.0);
        self.v.iter_mut().for_each(|x| *x = 0.0);
        self.step = 0;
    }
}

/// One bias-corrected Adam update of `theta` in place.
pub fn adam_step(state: &mut AdamState, theta: &mut [f64], grad: &[f64]) -> Result<()> {
    let n = state.m.len();
    for len in [theta.len(), grad.len()] {
        if len != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: len,
            });
        }
    }
    if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient {
            index,
            primitive: "adam input",
        });
    }
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps_hat,
    } = state.config;
    state.step += 1;
    let c1 = 1.0 - beta1.powi(state.step as i32);
    let c2 = 1.0 - beta2.powi(state.step as i32);
    for i in 0..n {
        let g = grad[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + eps_hat);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_leaves_theta() {
        let mut s = AdamState::new(3, AdamConfig::default());
        let mut th = [1.0, -2.0, 0.5];
        adam_step(&mut s, &mut th, &[0.0; 3]).unwrap();
        assert_eq!(th, [1.0, -2.0, 0.5]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        let mut s = AdamState::new(3, AdamConfig::default());
        let mut th = [0.0; 3];
        adam_step(&mut s, &mut th, &[3.0, -0.02, 1e4]).unwrap();
        for (t, sign) in th.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((t - sign * 1e-3).abs() < 1e-9, "{t}");
        }
    }

    #[test]
    fn two_steps_on_square_match_hand_recurrence() {
        // θ ↦ θ², θ₀ = 1, written out without the shared code path
        let (lr, b1, b2, eps) = (1e-3f64, 0.9f64, 0.999f64, 1e-8f64);
        let (mut m, mut v, mut x) = (0.0f64, 0.0f64, 1.0f64);
        for k in 1..=2 {
            let g = 2.0 * x;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            x -= lr * (m / (1.0 - b1.powi(k))) / ((v / (1.0 - b2.powi(k))).sqrt() + eps);
        }
        // fixture from the scalar recurrence above
        assert!((x - 0.998_000_026_213_834_3).abs() < 1e-15, "{x}");

        let mut s = AdamState::new(1, AdamConfig::default());
        let mut th = [1.0];
        for _ in 0..2 {
            let g = [2.0 * th[0]];
            adam_step(&mut s, &mut th, &g).unwrap();
        }
        assert_eq!(th[0], x);
    }

    #[test]
    fn rejects_nan_and_mismatched_shapes() {
        let mut s = AdamState::new(2, AdamConfig::default());
        let mut th = [0.0; 2];
        assert!(matches!(
            adam_step(&mut s, &mut th, &[0.0, f64::NAN]),
            Err(Error::NonFiniteGradient { index: 1, .. })
        ));
        assert!(adam_step(&mut s, &mut th, &[0.0]).is_err());
    }

    proptest! {
        // With a gradient of fixed sign and magnitude the step never exceeds lr.
        #[test]
        fn step_bounded_by_lr_for_consistent_gradients(
            g in proptest::collection::vec(-1e3..1e3f64, 1..6),
            steps in 1usize..40,
        ) {
            let cfg = AdamConfig::default();
            let mut s = AdamState::new(g.len(), cfg);
            let mut th = vec![0.0; g.len()];
            for _ in 0..steps {
                let before = th.clone();
                adam_step(&mut s, &mut th, &g).unwrap();
                for (a, b) in th.iter().zip(&before) {
                    prop_assert!((a - b).abs() <= cfg.lr * (1.0 + 1e-9));
                }
                prop_assert!(s.v.iter().all(|v| *v >= 0.0));
            }
        }
    }
}
