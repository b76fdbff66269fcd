//! Dense-tensor math with tape-based reverse-mode differentiation.
//!
//! The engine is deliberately small: it supports exactly the operations the
//! forecasting models need (matmul, pointwise ops, concat, slice, reductions
//! and a grid scatter), records them on a per-evaluation [`Graph`], and
//! replays the tape backwards to fill gradients. Precision is a type
//! parameter; `f64` is the default and is what training and the model file
//! format use, `f32` is available for speed.

mod graph;
mod optim;
mod tensor;

pub mod gradcheck;

pub use graph::{Graph, Value};
pub use optim::{clip_grad_norm, AdamState};
pub use tensor::{ParamSet, Tensor};

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, MulAssign, SubAssign};

/// Scalar type the engine runs on.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Conversion from an `f64` literal.
    fn lit(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f64 {
    fn lit(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    fn lit(x: f64) -> Self {
        x as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}
