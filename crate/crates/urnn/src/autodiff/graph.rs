use crate::autodiff::tensor::Tensor;
use crate::autodiff::Real;
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Value(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op<F> {
    Leaf,
    Add(Value, Value),
    Sub(Value, Value),
    Mul(Value, Value),
    Div(Value, Value),
    Tanh(Value),
    Sigmoid(Value),
    Relu(Value),
    Exp(Value),
    Ln(Value),
    Scale(Value, F),
    Offset(Value),
    Matmul {
        a: Value,
        b: Value,
        m: usize,
        k: usize,
        n: usize,
    },
    Concat {
        a: Value,
        b: Value,
        axis: usize,
    },
    Slice {
        a: Value,
        axis: usize,
        start: usize,
        len: usize,
    },
    Sum(Value),
    Mean(Value),
    /// Mean-pools payload vectors into slots of a flat grid.
    ScatterMean {
        entries: Vec<(usize, Value)>,
        channels: usize,
    },
}

#[derive(Debug)]
struct Node<F: Real> {
    shape: Vec<usize>,
    data: Vec<F>,
    grad: Vec<F>,
    requires_grad: bool,
    op: Op<F>,
}

/// Record of executed operations; replayed in reverse to propagate gradients.
///
/// A graph and the values it hands out form a single-owner unit. Evaluate
/// distinct scenes on distinct graphs when running in parallel.
#[derive(Debug, Default)]
pub struct Graph<F: Real = f64> {
    nodes: Vec<Node<F>>,
}

impl<F: Real> Graph<F> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<F>, requires_grad: bool, op: Op<F>) -> Value {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        let grad = if requires_grad {
            vec![F::zero(); data.len()]
        } else {
            Vec::new()
        };
        self.nodes.push(Node {
            shape,
            data,
            grad,
            requires_grad,
            op,
        });
        Value(self.nodes.len() - 1)
    }

    /// Inserts a constant (no gradient tracked).
    pub fn input(&mut self, shape: Vec<usize>, data: Vec<F>) -> Result<Value> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::ShapeMismatch {
                op: "input",
                lhs: shape,
                rhs: vec![data.len()],
            });
        }
        Ok(self.push(shape, data, false, Op::Leaf))
    }

    pub fn zeros(&mut self, shape: Vec<usize>) -> Value {
        let n = shape.iter().product();
        self.push(shape, vec![F::zero(); n], false, Op::Leaf)
    }

    /// Binds a tensor as a leaf; gradient is tracked iff the tensor asks for it.
    pub fn leaf(&mut self, t: &Tensor<F>) -> Value {
        self.push(
            t.shape().to_vec(),
            t.data().to_vec(),
            t.requires_grad(),
            Op::Leaf,
        )
    }

    pub fn shape(&self, v: Value) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn value(&self, v: Value) -> &[F] {
        &self.nodes[v.0].data
    }

    /// Gradient accumulated at `v`; empty slice if the node tracks none.
    pub fn grad(&self, v: Value) -> &[F] {
        &self.nodes[v.0].grad
    }

    fn numel(&self, v: Value) -> usize {
        self.nodes[v.0].data.len()
    }

    fn rg(&self, v: Value) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn same_shape(&self, op: &'static str, a: Value, b: Value) -> Result<()> {
        if self.nodes[a.0].shape != self.nodes[b.0].shape {
            return Err(Error::ShapeMismatch {
                op,
                lhs: self.nodes[a.0].shape.clone(),
                rhs: self.nodes[b.0].shape.clone(),
            });
        }
        Ok(())
    }

    fn binary(
        &mut self,
        op: &'static str,
        a: Value,
        b: Value,
        f: impl Fn(F, F) -> F,
        tag: impl Fn(Value, Value) -> Op<F>,
    ) -> Result<Value> {
        self.same_shape(op, a, b)?;
        let data: Vec<F> = self.nodes[a.0]
            .data
            .iter()
            .zip(&self.nodes[b.0].data)
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = self.nodes[a.0].shape.clone();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(shape, data, rg, tag(a, b)))
    }

    fn unary(&mut self, a: Value, f: impl Fn(F) -> F, op: Op<F>) -> Value {
        let data: Vec<F> = self.nodes[a.0].data.iter().map(|&x| f(x)).collect();
        let shape = self.nodes[a.0].shape.clone();
        let rg = self.rg(a);
        self.push(shape, data, rg, op)
    }

    pub fn add(&mut self, a: Value, b: Value) -> Result<Value> {
        self.binary("add", a, b, |x, y| x + y, Op::Add)
    }

    pub fn sub(&mut self, a: Value, b: Value) -> Result<Value> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub)
    }

    pub fn mul(&mut self, a: Value, b: Value) -> Result<Value> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul)
    }

    pub fn div(&mut self, a: Value, b: Value) -> Result<Value> {
        self.binary("div", a, b, |x, y| x / y, Op::Div)
    }

    pub fn tanh(&mut self, a: Value) -> Value {
        self.unary(a, |x| x.tanh(), Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Value) -> Value {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Value) -> Value {
        self.unary(a, |x| if x > F::zero() { x } else { F::zero() }, Op::Relu(a))
    }

    pub fn exp(&mut self, a: Value) -> Value {
        self.unary(a, |x| x.exp(), Op::Exp(a))
    }

    pub fn ln(&mut self, a: Value) -> Value {
        self.unary(a, |x| x.ln(), Op::Ln(a))
    }

    /// Elementwise multiplication by a constant.
    pub fn scale(&mut self, a: Value, c: F) -> Value {
        self.unary(a, |x| x * c, Op::Scale(a, c))
    }

    /// Elementwise addition of a constant.
    pub fn offset(&mut self, a: Value, c: F) -> Value {
        self.unary(a, |x| x + c, Op::Offset(a))
    }

    pub fn neg(&mut self, a: Value) -> Value {
        self.scale(a, -F::one())
    }

    /// Matrix product. 1-D operands are promoted to a single row (left) or
    /// column (right) and the result keeps the reduced rank.
    pub fn matmul(&mut self, a: Value, b: Value) -> Result<Value> {
        let sa = &self.nodes[a.0].shape;
        let sb = &self.nodes[b.0].shape;
        let mismatch = || Error::ShapeMismatch {
            op: "matmul",
            lhs: sa.clone(),
            rhs: sb.clone(),
        };
        let (m, k) = match sa.len() {
            1 => (1, sa[0]),
            2 => (sa[0], sa[1]),
            _ => return Err(mismatch()),
        };
        let (k2, n) = match sb.len() {
            1 => (sb[0], 1),
            2 => (sb[0], sb[1]),
            _ => return Err(mismatch()),
        };
        if k != k2 {
            return Err(mismatch());
        }
        let out_shape = match (sa.len(), sb.len()) {
            (1, 1) => vec![1],
            (1, 2) => vec![n],
            (2, 1) => vec![m],
            _ => vec![m, n],
        };
        let mut data = vec![F::zero(); m * n];
        {
            let da = &self.nodes[a.0].data;
            let db = &self.nodes[b.0].data;
            for i in 0..m {
                for p in 0..k {
                    let aip = da[i * k + p];
                    if aip == F::zero() {
                        continue;
                    }
                    let row = &db[p * n..(p + 1) * n];
                    let out = &mut data[i * n..(i + 1) * n];
                    for (o, &bpj) in out.iter_mut().zip(row) {
                        *o += aip * bpj;
                    }
                }
            }
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out_shape, data, rg, Op::Matmul { a, b, m, k, n }))
    }

    /// Concatenates two tensors along `axis`.
    pub fn concat(&mut self, a: Value, b: Value, axis: usize) -> Result<Value> {
        let sa = self.nodes[a.0].shape.clone();
        let sb = self.nodes[b.0].shape.clone();
        let bad = sa.len() != sb.len()
            || axis >= sa.len()
            || sa
                .iter()
                .zip(&sb)
                .enumerate()
                .any(|(i, (x, y))| i != axis && x != y);
        if bad {
            return Err(Error::ShapeMismatch {
                op: "concat",
                lhs: sa,
                rhs: sb,
            });
        }
        let outer: usize = sa[..axis].iter().product();
        let inner: usize = sa[axis + 1..].iter().product();
        let wa = sa[axis] * inner;
        let wb = sb[axis] * inner;
        let mut shape = sa.clone();
        shape[axis] += sb[axis];
        let mut data = Vec::with_capacity(outer * (wa + wb));
        for o in 0..outer {
            data.extend_from_slice(&self.nodes[a.0].data[o * wa..(o + 1) * wa]);
            data.extend_from_slice(&self.nodes[b.0].data[o * wb..(o + 1) * wb]);
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(shape, data, rg, Op::Concat { a, b, axis }))
    }

    /// Takes `len` indices along `axis` starting at `start`.
    pub fn slice(&mut self, a: Value, axis: usize, start: usize, len: usize) -> Result<Value> {
        let sa = self.nodes[a.0].shape.clone();
        if axis >= sa.len() || len == 0 || start + len > sa[axis] {
            return Err(Error::ShapeMismatch {
                op: "slice",
                lhs: sa,
                rhs: vec![axis, start, len],
            });
        }
        let outer: usize = sa[..axis].iter().product();
        let inner: usize = sa[axis + 1..].iter().product();
        let w = sa[axis] * inner;
        let mut shape = sa.clone();
        shape[axis] = len;
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * w + start * inner;
            data.extend_from_slice(&self.nodes[a.0].data[base..base + len * inner]);
        }
        let rg = self.rg(a);
        Ok(self.push(
            shape,
            data,
            rg,
            Op::Slice {
                a,
                axis,
                start,
                len,
            },
        ))
    }

    /// Sum of all elements, as a `[1]` tensor.
    pub fn sum(&mut self, a: Value) -> Value {
        let mut s = F::zero();
        for &x in &self.nodes[a.0].data {
            s += x;
        }
        let rg = self.rg(a);
        self.push(vec![1], vec![s], rg, Op::Sum(a))
    }

    /// Mean of all elements, as a `[1]` tensor.
    pub fn mean(&mut self, a: Value) -> Value {
        let n = F::from_usize(self.numel(a)).unwrap();
        let mut s = F::zero();
        for &x in &self.nodes[a.0].data {
            s += x;
        }
        let rg = self.rg(a);
        self.push(vec![1], vec![s / n], rg, Op::Mean(a))
    }

    /// Builds a flat `[n_slots * channels]` grid: each entry adds its payload
    /// (shape `[channels]`) to a slot and occupied slots hold the mean of
    /// their payloads. Entries are consumed in the order given.
    pub fn scatter_mean(
        &mut self,
        entries: &[(usize, Value)],
        n_slots: usize,
        channels: usize,
    ) -> Result<Value> {
        let mut data = vec![F::zero(); n_slots * channels];
        let mut counts = vec![0usize; n_slots];
        let mut rg = false;
        for &(slot, v) in entries {
            if self.nodes[v.0].shape != [channels] {
                return Err(Error::ShapeMismatch {
                    op: "scatter_mean",
                    lhs: self.nodes[v.0].shape.clone(),
                    rhs: vec![channels],
                });
            }
            assert!(slot < n_slots, "slot {slot} out of range {n_slots}");
            counts[slot] += 1;
            rg |= self.rg(v);
            for c in 0..channels {
                let x = self.nodes[v.0].data[c];
                data[slot * channels + c] += x;
            }
        }
        for (slot, &k) in counts.iter().enumerate() {
            if k > 1 {
                let inv = F::one() / F::from_usize(k).unwrap();
                for c in 0..channels {
                    data[slot * channels + c] *= inv;
                }
            }
        }
        Ok(self.push(
            vec![n_slots * channels],
            data,
            rg,
            Op::ScatterMean {
                entries: entries.to_vec(),
                channels,
            },
        ))
    }

    /// Reverse pass from a scalar root. Gradients accumulate: calling twice
    /// without rebuilding the graph doubles every leaf gradient.
    pub fn backward(&mut self, root: Value) -> Result<()> {
        if self.numel(root) != 1 {
            return Err(Error::NonScalarRoot(self.nodes[root.0].shape.clone()));
        }
        if !self.rg(root) {
            return Ok(());
        }
        self.nodes[root.0].grad[0] += F::one();
        for i in (0..=root.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let mut g = std::mem::take(&mut self.nodes[i].grad);
            let op = self.nodes[i].op.clone();
            self.propagate(i, &op, &g);
            // interior grads are consumed by propagation; only leaves keep
            // accumulating across repeated backward calls
            if !matches!(op, Op::Leaf) {
                g.iter_mut().for_each(|x| *x = F::zero());
            }
            self.nodes[i].grad = g;
        }
        Ok(())
    }

    fn add_grad(&mut self, v: Value, f: impl Fn(usize) -> F) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        let n = self.nodes[v.0].grad.len();
        for j in 0..n {
            let d = f(j);
            self.nodes[v.0].grad[j] += d;
        }
    }

    fn propagate(&mut self, node: usize, op: &Op<F>, g: &[F]) {
        match *op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.add_grad(a, |j| g[j]);
                self.add_grad(b, |j| g[j]);
            }
            Op::Sub(a, b) => {
                self.add_grad(a, |j| g[j]);
                self.add_grad(b, |j| -g[j]);
            }
            Op::Mul(a, b) => {
                let db: Vec<F> = self.nodes[b.0].data.clone();
                let da: Vec<F> = self.nodes[a.0].data.clone();
                self.add_grad(a, |j| g[j] * db[j]);
                self.add_grad(b, |j| g[j] * da[j]);
            }
            Op::Div(a, b) => {
                let da: Vec<F> = self.nodes[a.0].data.clone();
                let db: Vec<F> = self.nodes[b.0].data.clone();
                self.add_grad(a, |j| g[j] / db[j]);
                self.add_grad(b, |j| -g[j] * da[j] / (db[j] * db[j]));
            }
            Op::Tanh(a) => {
                let y: Vec<F> = self.nodes[node].data.clone();
                self.add_grad(a, |j| g[j] * (F::one() - y[j] * y[j]));
            }
            Op::Sigmoid(a) => {
                let y: Vec<F> = self.nodes[node].data.clone();
                self.add_grad(a, |j| g[j] * y[j] * (F::one() - y[j]));
            }
            Op::Relu(a) => {
                let x: Vec<F> = self.nodes[a.0].data.clone();
                self.add_grad(a, |j| if x[j] > F::zero() { g[j] } else { F::zero() });
            }
            Op::Exp(a) => {
                let y: Vec<F> = self.nodes[node].data.clone();
                self.add_grad(a, |j| g[j] * y[j]);
            }
            Op::Ln(a) => {
                let x: Vec<F> = self.nodes[a.0].data.clone();
                self.add_grad(a, |j| g[j] / x[j]);
            }
            Op::Scale(a, c) => {
                self.add_grad(a, |j| g[j] * c);
            }
            Op::Offset(a) => {
                self.add_grad(a, |j| g[j]);
            }
            Op::Matmul { a, b, m, k, n } => {
                if self.nodes[a.0].requires_grad {
                    let db = self.nodes[b.0].data.clone();
                    // dA = dC . B^T
                    self.add_grad(a, |idx| {
                        let (i, p) = (idx / k, idx % k);
                        let mut s = F::zero();
                        for j in 0..n {
                            s += g[i * n + j] * db[p * n + j];
                        }
                        s
                    });
                }
                if self.nodes[b.0].requires_grad {
                    let da = self.nodes[a.0].data.clone();
                    // dB = A^T . dC
                    self.add_grad(b, |idx| {
                        let (p, j) = (idx / n, idx % n);
                        let mut s = F::zero();
                        for i in 0..m {
                            s += da[i * k + p] * g[i * n + j];
                        }
                        s
                    });
                }
            }
            Op::Concat { a, b, axis } => {
                let sa = self.nodes[a.0].shape.clone();
                let sb = self.nodes[b.0].shape.clone();
                let inner: usize = sa[axis + 1..].iter().product();
                let wa = sa[axis] * inner;
                let wb = sb[axis] * inner;
                let w = wa + wb;
                self.add_grad(a, |idx| {
                    let (o, r) = (idx / wa, idx % wa);
                    g[o * w + r]
                });
                self.add_grad(b, |idx| {
                    let (o, r) = (idx / wb, idx % wb);
                    g[o * w + wa + r]
                });
            }
            Op::Slice {
                a,
                axis,
                start,
                len,
            } => {
                let sa = self.nodes[a.0].shape.clone();
                let inner: usize = sa[axis + 1..].iter().product();
                let w = sa[axis] * inner;
                let ws = len * inner;
                self.add_grad(a, |idx| {
                    let (o, r) = (idx / w, idx % w);
                    let lo = start * inner;
                    if r >= lo && r < lo + ws {
                        g[o * ws + (r - lo)]
                    } else {
                        F::zero()
                    }
                });
            }
            Op::Sum(a) => {
                self.add_grad(a, |_| g[0]);
            }
            Op::Mean(a) => {
                let inv = F::one() / F::from_usize(self.numel(a)).unwrap();
                self.add_grad(a, |_| g[0] * inv);
            }
            Op::ScatterMean {
                ref entries,
                channels,
            } => {
                let mut counts = std::collections::HashMap::new();
                for &(slot, _) in entries {
                    *counts.entry(slot).or_insert(0usize) += 1;
                }
                for &(slot, v) in entries {
                    let inv = F::one() / F::from_usize(counts[&slot]).unwrap();
                    self.add_grad(v, |c| g[slot * channels + c] * inv);
                }
            }
        }
    }
}

fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}
