//! Single linear maps (`y = x W + b`) shared by the velocity embedding,
//! the grid embedding and the decoder output head.

use crate::autodiff::{Graph, ParamSet, Real, Tensor, Value};
use crate::error::Result;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams<F: Real = f64> {
    pub w: Tensor<F>, // [in, out]
    pub b: Tensor<F>, // [out]
}

impl<F: Real> LinearParams<F> {
    /// Weights uniform in `[-1/sqrt(in), 1/sqrt(in)]`, zero bias.
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        assert!(in_dim > 0 && out_dim > 0);
        let k = 1.0 / (in_dim as f64).sqrt();
        let w: Vec<F> = (0..in_dim * out_dim)
            .map(|_| F::lit(rng.random_range(-k..k)))
            .collect();
        LinearParams {
            w: Tensor::new(vec![in_dim, out_dim], w).unwrap(),
            b: Tensor::zeros(vec![out_dim]),
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        LinearParams {
            w: Tensor::zeros(vec![in_dim, out_dim]),
            b: Tensor::zeros(vec![out_dim]),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn out_dim(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn param_count(&self) -> usize {
        self.w.numel() + self.b.numel()
    }

    pub fn register(self, set: &mut ParamSet<F>, prefix: &str) {
        set.insert(&format!("{prefix}.w"), self.w);
        set.insert(&format!("{prefix}.b"), self.b);
    }

    pub fn bind(&self, g: &mut Graph<F>) -> BoundLinear {
        BoundLinear {
            in_dim: self.in_dim(),
            out_dim: self.out_dim(),
            w: g.leaf(&self.w),
            b: g.leaf(&self.b),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundLinear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Value,
    pub b: Value,
}

impl BoundLinear {
    pub fn from_set<F: Real>(g: &mut Graph<F>, set: &ParamSet<F>, prefix: &str) -> BoundLinear {
        let w = set
            .get(&format!("{prefix}.w"))
            .unwrap_or_else(|| panic!("missing `{prefix}.w`"));
        let b = set.get(&format!("{prefix}.b")).unwrap();
        BoundLinear {
            in_dim: w.shape()[0],
            out_dim: w.shape()[1],
            w: g.leaf(w),
            b: g.leaf(b),
        }
    }

    pub fn apply<F: Real>(&self, g: &mut Graph<F>, x: Value) -> Result<Value> {
        let xw = g.matmul(x, self.w)?;
        g.add(xw, self.b)
    }
}
