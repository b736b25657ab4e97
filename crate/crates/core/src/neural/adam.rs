//! Adam with bias correction.

use super::{NeuralError, ParamSet};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates mirroring the parameter set.
#[derive(Clone, Debug)]
pub struct AdamState<S> {
    step: u64,
    m: ParamSet<S>,
    v: ParamSet<S>,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(params: &ParamSet<S>) -> AdamState<S> {
        AdamState {
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&ParamSet<S>, &ParamSet<S>) {
        (&self.m, &self.v)
    }

    /// One update: m and v track the gradient moments, parameters move
    /// by lr * m_hat / (sqrt(v_hat) + eps).
    pub fn step(
        &mut self,
        cfg: &AdamConfig,
        params: &mut ParamSet<S>,
        grads: &ParamSet<S>,
    ) -> Result<(), NeuralError> {
        if !params.same_shape(grads) || !params.same_shape(&self.m) {
            return Err(NeuralError::ShapeMismatch(
                "adam state/params/grads disagree".into(),
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let b1 = S::from_f64_lossy(cfg.beta1);
        let b2 = S::from_f64_lossy(cfg.beta2);
        let one = S::one();
        let corr1 = S::from_f64_lossy(1.0 / (1.0 - cfg.beta1.powi(t)));
        let corr2 = S::from_f64_lossy(1.0 / (1.0 - cfg.beta2.powi(t)));
        let lr = S::from_f64_lossy(cfg.lr);
        let eps = S::from_f64_lossy(cfg.eps);
        for i in 0..params.len() {
            let g = grads.get(i).values();
            let m = self.m.get_mut(i).values_mut();
            for (mi, &gi) in m.iter_mut().zip(g) {
                *mi = b1 * *mi + (one - b1) * gi;
            }
            let v = self.v.get_mut(i).values_mut();
            for (vi, &gi) in v.iter_mut().zip(g) {
                *vi = b2 * *vi + (one - b2) * gi * gi;
            }
            let m = self.m.get(i).values();
            let v = self.v.get(i).values();
            let p = params.get_mut(i).values_mut();
            for ((pi, &mi), &vi) in p.iter_mut().zip(m).zip(v) {
                let m_hat = mi * corr1;
                let v_hat = vi * corr2;
                *pi -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::tensor::Tensor;

    fn single_param(values: Vec<f64>) -> ParamSet<f64> {
        let mut p = ParamSet {
            names: vec!["w".into()],
            tensors: vec![Tensor::zeros(vec![values.len()])],
        };
        p.get_mut(0).values_mut().copy_from_slice(&values);
        p
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut params = single_param(vec![0.5, -0.25, 3.0]);
        let grads = params.zeros_like();
        let mut state = AdamState::new(&params);
        state
            .step(&AdamConfig::default(), &mut params, &grads)
            .unwrap();
        assert_eq!(params.get(0).values(), &[0.5, -0.25, 3.0]);
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        let cfg = AdamConfig::default();
        let mut params = single_param(vec![1.0]);
        let mut grads = params.zeros_like();
        grads.get_mut(0).values_mut()[0] = 0.37;
        let mut state = AdamState::new(&params);
        state.step(&cfg, &mut params, &grads).unwrap();
        // Bias-corrected first step is lr * g/|g| up to eps.
        let moved = 1.0 - params.get(0).values()[0];
        assert!((moved - cfg.lr).abs() < 1e-6, "moved {moved}");
    }

    #[test]
    fn two_constant_steps_follow_closed_form() {
        let cfg = AdamConfig::default();
        let g = -0.8f64;
        let mut params = single_param(vec![0.0]);
        let mut grads = params.zeros_like();
        grads.get_mut(0).values_mut()[0] = g;
        let mut state = AdamState::new(&params);
        state.step(&cfg, &mut params, &grads).unwrap();
        state.step(&cfg, &mut params, &grads).unwrap();
        assert_eq!(state.step_count(), 2);

        // Closed-form recurrences evaluated independently.
        let mut theta = 0.0f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        for t in 1..=2 {
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            let m_hat = m / (1.0 - cfg.beta1.powi(t));
            let v_hat = v / (1.0 - cfg.beta2.powi(t));
            theta -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
        let got = params.get(0).values()[0];
        assert!((got - theta).abs() < 1e-12, "got {got}, want {theta}");
        assert!((state.m.get(0).values()[0] - m).abs() < 1e-12);
        assert!((state.v.get(0).values()[0] - v).abs() < 1e-12);
    }
}
