//! Adaptive-moment optimizer with bias correction.

use super::ParamStore;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

pub struct Adam {
    pub cfg: AdamConfig,
    step: u64,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

impl Adam {
    pub fn new(cfg: AdamConfig, store: &ParamStore) -> Self {
        let m = store.iter().map(|p| vec![0.0; p.value.len()]).collect();
        let v = store.iter().map(|p| vec![0.0; p.value.len()]).collect();
        Self { cfg, step: 0, m, v }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over every parameter; consumes and clears the gradients.
    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        if !store.grads_ready() {
            return Err(Error::MissingGrads);
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.cfg.beta1.powi(t);
        let bc2 = 1.0 - self.cfg.beta2.powi(t);
        for id in 0..store.len() {
            let grad = store.grad(id).to_vec();
            let m = &mut self.m[id];
            let v = &mut self.v[id];
            let value = store.value_mut(id).data_mut();
            for i in 0..grad.len() {
                let g = grad[i];
                m[i] = self.cfg.beta1 * m[i] + (1.0 - self.cfg.beta1) * g;
                v[i] = self.cfg.beta2 * v[i] + (1.0 - self.cfg.beta2) * g * g;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                value[i] -= self.cfg.lr * mhat / (vhat.sqrt() + self.cfg.eps);
            }
        }
        store.zero_grads();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::nn::GraphBuilder;

    #[test]
    fn step_without_grads_is_an_error() {
        let mut store = ParamStore::new();
        store.add("x", Tensor::scalar(1.0));
        let mut adam = Adam::new(AdamConfig::default(), &store);
        assert!(matches!(adam.step(&mut store), Err(Error::MissingGrads)));
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut store = ParamStore::new();
        let x = store.add("x", Tensor::new(vec![2], vec![1.5, -0.5]).unwrap());
        // a graph that never touches x still marks grads ready
        let y = store.add("y", Tensor::scalar(2.0));
        let mut g = GraphBuilder::new(&store);
        let yn = g.param(&store, y);
        let loss = g.tape.sum_all(yn).unwrap();
        g.tape.backward(loss).unwrap();
        store.absorb_grads(&g.tape);
        let mut adam = Adam::new(AdamConfig::default(), &store);
        let before = store.value(x).data().to_vec();
        adam.step(&mut store).unwrap();
        assert_eq!(store.value(x).data(), before.as_slice());
        assert_eq!(adam.step_count(), 1);
    }

    /// One step on f(x) = x^2 from x = 1 with lr 0.1 must move downhill.
    #[test]
    fn single_step_descends_quadratic() {
        let mut store = ParamStore::new();
        let x = store.add("x", Tensor::scalar(1.0));
        let mut adam = Adam::new(AdamConfig { lr: 0.1, ..Default::default() }, &store);
        let mut g = GraphBuilder::new(&store);
        let xn = g.param(&store, x);
        let sq = g.tape.mul(xn, xn).unwrap();
        let loss = g.tape.sum_all(sq).unwrap();
        g.tape.backward(loss).unwrap();
        store.absorb_grads(&g.tape);
        adam.step(&mut store).unwrap();
        let after = store.value(x).item();
        assert!(after < 1.0 && after > 0.0, "expected descent, got {after}");
    }

    /// 200 steps on a 2-d quadratic land within 1e-2 of the closed-form
    /// minimizer (1.0, -0.5).
    #[test]
    fn converges_to_quadratic_minimizer() {
        let target = [1.0f32, -0.5];
        let mut store = ParamStore::new();
        let x = store.add("x", Tensor::new(vec![2], vec![0.0, 0.5]).unwrap());
        let mut adam = Adam::new(AdamConfig { lr: 0.02, ..Default::default() }, &store);
        for _ in 0..200 {
            let mut g = GraphBuilder::new(&store);
            let xn = g.param(&store, x);
            let t = g.input(Tensor::new(vec![2], target.to_vec()).unwrap());
            let neg = g.tape.scale(t, -1.0).unwrap();
            let diff = g.tape.add(xn, neg).unwrap();
            let sq = g.tape.mul(diff, diff).unwrap();
            let loss = g.tape.sum_all(sq).unwrap();
            g.tape.backward(loss).unwrap();
            store.absorb_grads(&g.tape);
            adam.step(&mut store).unwrap();
        }
        let x_final = store.value(x).data();
        for (v, t) in x_final.iter().zip(&target) {
            assert!((v - t).abs() < 1e-2, "final {x_final:?} vs target {target:?}");
        }
    }
}
