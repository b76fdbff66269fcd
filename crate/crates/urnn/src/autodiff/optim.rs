use crate::autodiff::tensor::ParamSet;
use crate::autodiff::Real;
use crate::error::{Error, Result};

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct AdamState<F: Real = f64> {
    lr: F,
    beta1: F,
    beta2: F,
    eps: F,
    step: u64,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
}

impl<F: Real> AdamState<F> {
    /// Moment buffers are allocated to match `params` slot by slot.
    pub fn new(params: &ParamSet<F>, lr: F) -> Self {
        let m = params.iter().map(|(_, t)| vec![F::zero(); t.numel()]).collect();
        let v = params.iter().map(|(_, t)| vec![F::zero(); t.numel()]).collect();
        AdamState {
            lr,
            beta1: F::lit(0.9),
            beta2: F::lit(0.999),
            eps: F::lit(1e-8),
            step: 0,
            m,
            v,
        }
    }

    pub fn with_betas(mut self, beta1: F, beta2: F) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }

    pub fn lr(&self) -> F {
        self.lr
    }

    pub fn set_lr(&mut self, lr: F) {
        self.lr = lr;
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over every parameter. Gradients are read, never written.
    pub fn step(&mut self, params: &mut ParamSet<F>) -> Result<()> {
        assert_eq!(self.m.len(), params.len(), "optimizer/params mismatch");
        self.step += 1;
        let t = self.step as i32;
        let bc1 = F::one() - self.beta1.powi(t);
        let bc2 = F::one() - self.beta2.powi(t);
        for idx in 0..params.len() {
            let (name, tensor) = params.at_mut(idx);
            let grad: Vec<F> = match tensor.grad() {
                Some(g) => g.to_vec(),
                None => return Err(Error::MissingGrad(name.to_string())),
            };
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            debug_assert_eq!(m.len(), grad.len());
            let data = tensor.data_mut();
            for j in 0..grad.len() {
                let g = grad[j];
                m[j] = self.beta1 * m[j] + (F::one() - self.beta1) * g;
                v[j] = self.beta2 * v[j] + (F::one() - self.beta2) * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                data[j] = data[j] - self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Scales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the factor applied (1.0 when already within the bound).
pub fn clip_grad_norm<F: Real>(params: &mut ParamSet<F>, max_norm: F) -> F {
    assert!(max_norm > F::zero());
    let mut sq = F::zero();
    for (_, t) in params.iter() {
        if let Some(g) = t.grad() {
            for &x in g {
                sq += x * x;
            }
        }
    }
    let norm = sq.sqrt();
    if norm <= max_norm || norm == F::zero() {
        return F::one();
    }
    let factor = max_norm / norm;
    for (_, t) in params.iter_mut() {
        if let Some(g) = t.grad() {
            let scaled: Vec<F> = g.iter().map(|&x| x * factor).collect();
            t.zero_grad();
            t.accumulate_grad(&scaled);
        }
    }
    factor
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn one_param(value: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("x", Tensor::new(vec![1], vec![value]).unwrap());
        p
    }

    #[test]
    fn zero_grad_leaves_param_unchanged() {
        let mut p = one_param(1.5);
        p.get_mut("x").unwrap().accumulate_grad(&[0.0]);
        let mut adam = AdamState::new(&p, 0.05);
        adam.step(&mut p).unwrap();
        assert_eq!(p.get("x").unwrap().data(), &[1.5]);
    }

    #[test]
    fn first_step_magnitude_close_to_lr() {
        for &g in &[0.3, -2.0, 17.0] {
            let mut p = one_param(0.0);
            p.get_mut("x").unwrap().accumulate_grad(&[g]);
            let mut adam = AdamState::new(&p, 1e-3);
            adam.step(&mut p).unwrap();
            let moved = p.get("x").unwrap().data()[0].abs();
            assert!((moved - 1e-3).abs() < 1e-6, "step {moved} for grad {g}");
        }
    }

    #[test]
    fn missing_grad_is_an_error() {
        let mut p = one_param(0.0);
        let mut adam = AdamState::new(&p, 1e-3);
        let err = adam.step(&mut p).unwrap_err();
        assert!(matches!(err, Error::MissingGrad(name) if name == "x"));
    }

    #[test]
    fn descends_quadratic_to_near_zero() {
        // independent scalar-descent oracle: minimize f(x) = x^2 from x0 = 1
        let mut p = one_param(1.0);
        let mut adam = AdamState::new(&p, 0.05);
        for _ in 0..200 {
            let x = p.get("x").unwrap().data()[0];
            p.zero_grads();
            p.get_mut("x").unwrap().accumulate_grad(&[2.0 * x]);
            adam.step(&mut p).unwrap();
        }
        assert!(p.get("x").unwrap().data()[0].abs() < 0.01);
    }

    #[test]
    fn step_counter_increments() {
        let mut p = one_param(0.0);
        p.get_mut("x").unwrap().accumulate_grad(&[1.0]);
        let mut adam = AdamState::new(&p, 1e-3);
        for want in 1..=5 {
            adam.step(&mut p).unwrap();
            assert_eq!(adam.step_count(), want);
        }
    }

    #[test]
    fn clip_noop_within_bound() {
        let mut p = one_param(0.0);
        p.get_mut("x").unwrap().accumulate_grad(&[0.5]);
        assert_eq!(clip_grad_norm(&mut p, 1.0), 1.0);
        assert_eq!(p.get("x").unwrap().grad().unwrap(), &[0.5]);
    }

    #[test]
    fn clip_rescales_three_four_five() {
        let mut p = ParamSet::<f64>::new();
        p.insert("g", Tensor::zeros(vec![2]));
        p.get_mut("g").unwrap().accumulate_grad(&[3.0, 4.0]);
        let f = clip_grad_norm(&mut p, 1.0);
        assert!((f - 0.2).abs() < 1e-15);
        let g = p.get("g").unwrap().grad().unwrap();
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn clip_multi_tensor_hits_target_norm() {
        let mut p = ParamSet::<f64>::new();
        p.insert("a", Tensor::zeros(vec![3]));
        p.insert("b", Tensor::zeros(vec![2]));
        p.get_mut("a").unwrap().accumulate_grad(&[1.0, -2.0, 3.0]);
        p.get_mut("b").unwrap().accumulate_grad(&[4.0, 0.5]);
        clip_grad_norm(&mut p, 1.0);
        let mut sq = 0.0;
        for (_, t) in p.iter() {
            for &x in t.grad().unwrap() {
                sq += x * x;
            }
        }
        assert!((sq.sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_given_same_inputs() {
        let run = || {
            let mut p = one_param(0.7);
            p.get_mut("x").unwrap().accumulate_grad(&[0.3]);
            let mut adam = AdamState::new(&p, 1e-2);
            adam.step(&mut p).unwrap();
            p.get("x").unwrap().data()[0]
        };
        assert_eq!(run().to_bits(), run().to_bits());
    }
}
