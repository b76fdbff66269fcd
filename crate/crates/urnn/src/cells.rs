//! GRU and LSTM step functions.
//!
//! Gate weights are stored as three (GRU) or four (LSTM) blocks concatenated
//! along the output axis: `w_ih[input_dim, gates*hidden]`,
//! `w_hh[hidden, gates*hidden]`, `b[gates*hidden]`. Gate order is
//! update/reset/candidate for GRU and input/forget/cell/output for LSTM.

use crate::autodiff::{Graph, ParamSet, Real, Tensor, Value};
use crate::error::{Error, Result};
use rand::Rng;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Gru,
    Lstm,
}

impl CellKind {
    pub fn gate_blocks(self) -> usize {
        match self {
            CellKind::Gru => 3,
            CellKind::Lstm => 4,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            CellKind::Gru => "gru",
            CellKind::Lstm => "lstm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gru" => Ok(CellKind::Gru),
            "lstm" => Ok(CellKind::Lstm),
            other => Err(Error::Config(format!("unknown cell kind `{other}`"))),
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Learnable weights of one recurrent cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellParams<F: Real = f64> {
    pub kind: CellKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_ih: Tensor<F>,
    pub w_hh: Tensor<F>,
    pub b: Tensor<F>,
}

impl<F: Real> CellParams<F> {
    /// Weights uniform in `[-1/sqrt(hidden), 1/sqrt(hidden)]`, biases zero
    /// except the LSTM forget gate, which starts at one.
    pub fn init(kind: CellKind, input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        assert!(input_dim > 0 && hidden_dim > 0);
        let gates = kind.gate_blocks() * hidden_dim;
        let k = 1.0 / (hidden_dim as f64).sqrt();
        let mut uniform = |n: usize| -> Vec<F> {
            (0..n).map(|_| F::lit(rng.random_range(-k..k))).collect()
        };
        let w_ih = Tensor::new(vec![input_dim, gates], uniform(input_dim * gates)).unwrap();
        let w_hh = Tensor::new(vec![hidden_dim, gates], uniform(hidden_dim * gates)).unwrap();
        let mut bias = vec![F::zero(); gates];
        if kind == CellKind::Lstm {
            for x in &mut bias[hidden_dim..2 * hidden_dim] {
                *x = F::one();
            }
        }
        let b = Tensor::new(vec![gates], bias).unwrap();
        CellParams {
            kind,
            input_dim,
            hidden_dim,
            w_ih,
            w_hh,
            b,
        }
    }

    pub fn zeros(kind: CellKind, input_dim: usize, hidden_dim: usize) -> Self {
        let gates = kind.gate_blocks() * hidden_dim;
        CellParams {
            kind,
            input_dim,
            hidden_dim,
            w_ih: Tensor::zeros(vec![input_dim, gates]),
            w_hh: Tensor::zeros(vec![hidden_dim, gates]),
            b: Tensor::zeros(vec![gates]),
        }
    }

    pub fn param_count(&self) -> usize {
        self.w_ih.numel() + self.w_hh.numel() + self.b.numel()
    }

    /// Moves the weights into `set` under `{prefix}.w_ih` etc.
    pub fn register(self, set: &mut ParamSet<F>, prefix: &str) {
        set.insert(&format!("{prefix}.w_ih"), self.w_ih);
        set.insert(&format!("{prefix}.w_hh"), self.w_hh);
        set.insert(&format!("{prefix}.b"), self.b);
    }

    /// Binds the owned tensors straight into a graph.
    pub fn bind(&self, g: &mut Graph<F>) -> BoundCell {
        BoundCell {
            kind: self.kind,
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            w_ih: g.leaf(&self.w_ih),
            w_hh: g.leaf(&self.w_hh),
            b: g.leaf(&self.b),
        }
    }
}

/// Cell weights bound to graph nodes for one evaluation.
#[derive(Debug, Clone, Copy)]
pub struct BoundCell {
    pub kind: CellKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_ih: Value,
    pub w_hh: Value,
    pub b: Value,
}

impl BoundCell {
    /// Binds cell weights registered in a [`ParamSet`] under `prefix`.
    pub fn from_set<F: Real>(
        g: &mut Graph<F>,
        set: &ParamSet<F>,
        prefix: &str,
        kind: CellKind,
    ) -> BoundCell {
        let w_ih = set
            .get(&format!("{prefix}.w_ih"))
            .unwrap_or_else(|| panic!("missing `{prefix}.w_ih`"));
        let w_hh = set.get(&format!("{prefix}.w_hh")).unwrap();
        let b = set.get(&format!("{prefix}.b")).unwrap();
        let input_dim = w_ih.shape()[0];
        let hidden_dim = w_hh.shape()[0];
        BoundCell {
            kind,
            input_dim,
            hidden_dim,
            w_ih: g.leaf(w_ih),
            w_hh: g.leaf(w_hh),
            b: g.leaf(b),
        }
    }
}

/// Recurrent state: hidden vector, plus a cell vector for LSTM.
#[derive(Debug, Clone, Copy)]
pub struct CellState {
    pub h: Value,
    pub c: Option<Value>,
}

impl CellState {
    pub fn zeros<F: Real>(g: &mut Graph<F>, kind: CellKind, hidden_dim: usize) -> CellState {
        CellState {
            h: g.zeros(vec![hidden_dim]),
            c: match kind {
                CellKind::Lstm => Some(g.zeros(vec![hidden_dim])),
                CellKind::Gru => None,
            },
        }
    }
}

/// One recurrent step: `state' = cell(state, input)`.
pub fn cell_step<F: Real>(
    g: &mut Graph<F>,
    cell: &BoundCell,
    state: &CellState,
    input: Value,
) -> Result<CellState> {
    let h = cell.hidden_dim;
    if g.shape(input) != [cell.input_dim] {
        return Err(Error::ShapeMismatch {
            op: "cell_step input",
            lhs: g.shape(input).to_vec(),
            rhs: vec![cell.input_dim],
        });
    }
    if g.shape(state.h) != [h] {
        return Err(Error::ShapeMismatch {
            op: "cell_step state",
            lhs: g.shape(state.h).to_vec(),
            rhs: vec![h],
        });
    }
    match cell.kind {
        CellKind::Gru => {
            let xw = g.matmul(input, cell.w_ih)?;
            let gi = g.add(xw, cell.b)?;
            let gi_z = g.slice(gi, 0, 0, h)?;
            let gi_r = g.slice(gi, 0, h, h)?;
            let gi_n = g.slice(gi, 0, 2 * h, h)?;
            let w_hh_zr = g.slice(cell.w_hh, 1, 0, 2 * h)?;
            let w_hh_n = g.slice(cell.w_hh, 1, 2 * h, h)?;
            let gh_zr = g.matmul(state.h, w_hh_zr)?;
            let gh_z = g.slice(gh_zr, 0, 0, h)?;
            let gh_r = g.slice(gh_zr, 0, h, h)?;
            let z_pre = g.add(gi_z, gh_z)?;
            let z = g.sigmoid(z_pre);
            let r_pre = g.add(gi_r, gh_r)?;
            let r = g.sigmoid(r_pre);
            let rh = g.mul(r, state.h)?;
            let gh_n = g.matmul(rh, w_hh_n)?;
            let n_pre = g.add(gi_n, gh_n)?;
            let n = g.tanh(n_pre);
            // h' = z*h + (1-z)*n
            let zh = g.mul(z, state.h)?;
            let neg_z = g.neg(z);
            let one_minus_z = g.offset(neg_z, F::one());
            let zn = g.mul(one_minus_z, n)?;
            let h_next = g.add(zh, zn)?;
            Ok(CellState {
                h: h_next,
                c: None,
            })
        }
        CellKind::Lstm => {
            let c_prev = state.c.ok_or_else(|| Error::ShapeMismatch {
                op: "cell_step lstm state",
                lhs: vec![],
                rhs: vec![h],
            })?;
            let xw = g.matmul(input, cell.w_ih)?;
            let hw = g.matmul(state.h, cell.w_hh)?;
            let pre0 = g.add(xw, hw)?;
            let pre = g.add(pre0, cell.b)?;
            let i_pre = g.slice(pre, 0, 0, h)?;
            let f_pre = g.slice(pre, 0, h, h)?;
            let g_pre = g.slice(pre, 0, 2 * h, h)?;
            let o_pre = g.slice(pre, 0, 3 * h, h)?;
            let i = g.sigmoid(i_pre);
            let f = g.sigmoid(f_pre);
            let cand = g.tanh(g_pre);
            let o = g.sigmoid(o_pre);
            let fc = g.mul(f, c_prev)?;
            let ig = g.mul(i, cand)?;
            let c_next = g.add(fc, ig)?;
            let c_act = g.tanh(c_next);
            let h_next = g.mul(o, c_act)?;
            Ok(CellState {
                h: h_next,
                c: Some(c_next),
            })
        }
    }
}
