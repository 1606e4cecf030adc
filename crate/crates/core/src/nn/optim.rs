use serde::{Deserialize, Serialize};

use super::param::Module;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moments. State is keyed by visit order, so an
/// optimizer must only be used with the module it was first stepped on.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Clears moments and the step counter.
    pub fn reset(&mut self) {
        self.step = 0;
        self.first.clear();
        self.second.clear();
    }

    /// Applies one update to every trainable parameter using its
    /// accumulated gradient. Frozen parameters are left untouched.
    pub fn step<M: Module + ?Sized>(&mut self, module: &mut M) {
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        let first = &mut self.first;
        let second = &mut self.second;
        let mut slot = 0;
        module.visit_mut(&mut |p| {
            if first.len() <= slot {
                first.push(vec![0.0; p.count()]);
                second.push(vec![0.0; p.count()]);
            }
            if p.trainable {
                let m = &mut first[slot];
                let v = &mut second[slot];
                let grad = p.grad.data();
                for (i, w) in p.value.data_mut().iter_mut().enumerate() {
                    let g = grad[i];
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                    let mhat = m[i] / bc1;
                    let vhat = v[i] / bc2;
                    *w -= lr * mhat / (vhat.sqrt() + eps);
                }
            }
            slot += 1;
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::param::Param;
    use crate::nn::tensor::Tensor;

    struct Bowl(Param, Param);

    impl Module for Bowl {
        fn visit(&self, f: &mut dyn FnMut(&Param)) {
            f(&self.0);
            f(&self.1);
        }
        fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
            f(&mut self.0);
            f(&mut self.1);
        }
    }

    fn bowl() -> Bowl {
        Bowl(
            Param::new("w", Tensor::vector(vec![1.0, 1.0])),
            Param::new("frozen", Tensor::vector(vec![0.25, -3.0])),
        )
    }

    #[test]
    fn quadratic_bowl_descends() {
        let mut b = bowl();
        let mut opt = Adam::new(AdamConfig {
            lr: 0.01,
            ..Default::default()
        });
        let loss = |b: &Bowl| b.0.value.data().iter().map(|w| w * w).sum::<f64>();
        let mut prev = loss(&b);
        for _ in 0..100 {
            b.zero_grad();
            let g = b.0.value.map(|w| 2.0 * w);
            b.0.accumulate(&g);
            opt.step(&mut b);
            let now = loss(&b);
            assert!(now < prev, "{now} !< {prev}");
            prev = now;
        }
    }

    #[test]
    fn frozen_param_is_bitwise_unchanged() {
        let mut b = bowl();
        b.1.trainable = false;
        let before = b.1.value.clone();
        let mut opt = Adam::new(AdamConfig::default());
        for _ in 0..10 {
            b.1.accumulate(&Tensor::vector(vec![5.0, -7.0]));
            b.0.accumulate(&Tensor::vector(vec![1.0, 1.0]));
            opt.step(&mut b);
        }
        assert_eq!(b.1.value, before);
        assert_ne!(b.0.value.data(), &[1.0, 1.0]);
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut b = bowl();
        let before = b.flat_values();
        let mut opt = Adam::new(AdamConfig::default());
        opt.step(&mut b);
        assert_eq!(b.flat_values(), before);
    }
}
