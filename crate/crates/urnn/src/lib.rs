//! Recurrent pedestrian-trajectory forecasting at desk scale.
//!
//! The crate bundles everything needed to compare sequence encoders for
//! trajectory prediction under identical conditions: a small reverse-mode
//! tensor engine, GRU/LSTM cells, four trajectory encoders (plain, Bi,
//! U and reversed-U), grid-based interaction pooling, a recurrent decoder
//! with training loop, classical baselines, benchmark-style scene data
//! handling with a synthetic scenario generator, and ADE/FDE/collision
//! metrics with per-category reports.

pub mod autodiff;
pub mod cells;
pub mod encoders;
pub mod linear;
pub mod baselines;
pub mod pooling;
pub mod scene;
pub mod error;

pub use error::{Error, Result};
