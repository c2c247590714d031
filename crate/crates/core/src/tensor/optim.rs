use super::{ParamSet, Parameter, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam settings {self:?}")))
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter Adam moments.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub first_moment: Tensor,
    pub second_moment: Tensor,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
}

impl AdamState {
    pub fn new(shape: &[usize], config: AdamConfig) -> Self {
        Self {
            first_moment: Tensor::zeros(shape),
            second_moment: Tensor::zeros(shape),
            step_count: 0,
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            learning_rate: config.learning_rate,
        }
    }
}

/// One bias-corrected Adam update of `param` from its current gradient.
pub fn adam_step(param: &mut Parameter, state: &mut AdamState) {
    state.step_count += 1;
    let t = state.step_count as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    let m = state.first_moment.data_mut();
    let v = state.second_moment.data_mut();
    let values = param.value.data_mut();
    for (((w, &g), m), v) in values.iter_mut().zip(param.grad.data()).zip(m).zip(v) {
        *m = state.beta1 * *m + (1.0 - state.beta1) * g;
        *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
}

/// Adam over every parameter of a [`ParamSet`].
#[derive(Clone, Debug)]
pub struct Adam {
    states: Vec<AdamState>,
}

impl Adam {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            states: params.iter().map(|p| AdamState::new(p.value.shape(), config)).collect(),
        })
    }

    /// Applies one update and clears the gradients.
    pub fn step(&mut self, params: &mut ParamSet) {
        for (p, s) in params.iter_mut().zip(&mut self.states) {
            adam_step(p, s);
        }
        params.zero_grad();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(v: f64, g: f64) -> Parameter {
        let mut p = Parameter::new("p", Tensor::scalar(v));
        p.grad = Tensor::scalar(g);
        p
    }

    #[test]
    fn zero_gradient_leaves_value_unchanged() {
        let mut p = scalar_param(1.25, 0.0);
        let mut s = AdamState::new(&[1], AdamConfig::default());
        adam_step(&mut p, &mut s);
        assert_eq!(p.value.data()[0], 1.25);
        assert_eq!(s.step_count, 1);
        assert_eq!(s.first_moment.data()[0], 0.0);
    }

    #[test]
    fn moments_decay_under_zero_gradient() {
        let mut p = scalar_param(0.0, 1.0);
        let mut s = AdamState::new(&[1], AdamConfig::default());
        adam_step(&mut p, &mut s);
        let (m1, v1) = (s.first_moment.data()[0], s.second_moment.data()[0]);
        p.grad = Tensor::scalar(0.0);
        adam_step(&mut p, &mut s);
        assert!(s.first_moment.data()[0].abs() < m1.abs());
        assert!(s.second_moment.data()[0] < v1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [1e-3, 0.7, -42.0] {
            let mut p = scalar_param(0.0, g);
            let cfg = AdamConfig::with_learning_rate(1e-3);
            let mut s = AdamState::new(&[1], cfg);
            adam_step(&mut p, &mut s);
            // m̂ = g, v̂ = g², step = lr·g/(|g|+ε)
            let expected = -1e-3 * g / (g.abs() + 1e-8);
            assert!((p.value.data()[0] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_calls_are_identical() {
        let run = || {
            let mut p = scalar_param(0.5, -0.3);
            let mut s = AdamState::new(&[1], AdamConfig::default());
            for _ in 0..5 {
                adam_step(&mut p, &mut s);
            }
            (p.value.data()[0], s.second_moment.data()[0])
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = AdamConfig { beta1: 1.0, ..AdamConfig::default() };
        assert!(Adam::new(&ParamSet::new(), cfg).is_err());
    }
}
