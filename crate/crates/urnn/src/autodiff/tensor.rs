use crate::autodiff::Real;
use crate::error::{Error, Result};

/// Dense real-valued array with an optional gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F: Real = f64> {
    shape: Vec<usize>,
    data: Vec<F>,
    requires_grad: bool,
    grad: Option<Vec<F>>,
}

impl<F: Real> Tensor<F> {
    pub fn new(shape: Vec<usize>, data: Vec<F>) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if expect != data.len() {
            return Err(Error::ShapeMismatch {
                op: "tensor",
                lhs: shape,
                rhs: vec![data.len()],
            });
        }
        Ok(Tensor {
            shape,
            data,
            requires_grad: false,
            grad: None,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![F::zero(); n],
            requires_grad: false,
            grad: None,
        }
    }

    pub fn full(shape: Vec<usize>, fill: F) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![fill; n],
            requires_grad: false,
            grad: None,
        }
    }

    pub fn scalar(x: F) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![x],
            requires_grad: false,
            grad: None,
        }
    }

    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn grad(&self) -> Option<&[F]> {
        self.grad.as_deref()
    }

    /// Adds `delta` into the gradient buffer, allocating zeros on first use.
    pub fn accumulate_grad(&mut self, delta: &[F]) {
        debug_assert_eq!(delta.len(), self.data.len());
        let g = self
            .grad
            .get_or_insert_with(|| vec![F::zero(); self.data.len()]);
        for (gi, di) in g.iter_mut().zip(delta) {
            *gi += *di;
        }
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = &mut self.grad {
            g.iter_mut().for_each(|x| *x = F::zero());
        }
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }
}

/// Ordered collection of named parameter tensors.
///
/// Insertion order is the canonical order: it fixes RNG consumption during
/// initialization, gradient reduction order, and the record order in model
/// files.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet<F: Real = f64> {
    items: Vec<(String, Tensor<F>)>,
}

impl<F: Real> ParamSet<F> {
    pub fn new() -> Self {
        ParamSet { items: Vec::new() }
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor<F>) {
        assert!(
            self.index_of(name).is_none(),
            "duplicate parameter `{name}`"
        );
        self.items.push((name.to_string(), tensor.with_grad()));
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.items.iter().position(|(n, _)| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<F>> {
        self.items.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<F>> {
        self.items
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn at(&self, idx: usize) -> (&str, &Tensor<F>) {
        let (n, t) = &self.items[idx];
        (n, t)
    }

    pub fn at_mut(&mut self, idx: usize) -> (&str, &mut Tensor<F>) {
        let (n, t) = &mut self.items[idx];
        (n, t)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<F>)> {
        self.items.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor<F>)> {
        self.items.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    /// Total number of scalar parameters.
    pub fn total_len(&self) -> usize {
        self.items.iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn zero_grads(&mut self) {
        for (_, t) in &mut self.items {
            t.zero_grad();
        }
    }

    pub fn clear_grads(&mut self) {
        for (_, t) in &mut self.items {
            t.clear_grad();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_shape_must_match_data() {
        assert!(Tensor::<f64>::new(vec![2, 3], vec![0.0; 6]).is_ok());
        let err = Tensor::<f64>::new(vec![2, 3], vec![0.0; 5]).unwrap_err();
        assert!(err.to_string().contains("shape mismatch"));
    }

    #[test]
    fn grad_accumulates_and_resets() {
        let mut t = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap().with_grad();
        t.accumulate_grad(&[0.5, 0.5]);
        t.accumulate_grad(&[1.0, -0.5]);
        assert_eq!(t.grad().unwrap(), &[1.5, 0.0]);
        t.zero_grad();
        assert_eq!(t.grad().unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn param_set_keeps_insertion_order() {
        let mut p = ParamSet::<f64>::new();
        p.insert("b", Tensor::zeros(vec![2]));
        p.insert("a", Tensor::zeros(vec![3]));
        let names: Vec<_> = p.iter().map(|(n, _)| n.to_string()).collect();
        assert_eq!(names, ["b", "a"]);
        assert_eq!(p.total_len(), 5);
    }
}
