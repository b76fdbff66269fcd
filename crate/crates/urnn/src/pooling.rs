//! Grid-based neighborhood featurizers.
//!
//! A square grid centered on the ego pedestrian collects neighbor payloads
//! (a constant for occupancy, velocities for directional, decoder hidden
//! states for social pooling); occupied cells hold the mean of their
//! payloads and the flattened grid is mapped through one linear embedding.

use crate::autodiff::{Graph, Real, Value};
use crate::error::{Error, Result};
use crate::linear::BoundLinear;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoolingKind {
    None,
    Occupancy,
    Directional,
    Social,
}

impl PoolingKind {
    pub const ALL: [PoolingKind; 4] = [
        PoolingKind::None,
        PoolingKind::Occupancy,
        PoolingKind::Directional,
        PoolingKind::Social,
    ];

    pub fn token(self) -> &'static str {
        match self {
            PoolingKind::None => "none",
            PoolingKind::Occupancy => "occupancy",
            PoolingKind::Directional => "directional",
            PoolingKind::Social => "social",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PoolingKind::None),
            "occupancy" => Ok(PoolingKind::Occupancy),
            "directional" => Ok(PoolingKind::Directional),
            "social" => Ok(PoolingKind::Social),
            other => Err(Error::Config(format!("unknown pooling kind `{other}`"))),
        }
    }

    /// Payload width per cell; `social_dim` is the decoder hidden size.
    pub fn channels(self, social_dim: usize) -> usize {
        match self {
            PoolingKind::None => 0,
            PoolingKind::Occupancy => 1,
            PoolingKind::Directional => 2,
            PoolingKind::Social => social_dim,
        }
    }
}

impl fmt::Display for PoolingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Square, ego-centered grid geometry plus orientation/payload flags.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    /// Cells per side; even so the ego sits on a cell corner.
    pub n_cells: usize,
    /// Cell side length in meters.
    pub cell_side: f64,
    /// Rotate the neighborhood into the ego heading frame instead of the
    /// world frame.
    pub ego_aligned: bool,
    /// Directional payloads are relative (neighbor minus ego) velocities
    /// rather than absolute ones.
    pub relative_velocity: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_cells: 12,
            cell_side: 0.6,
            ego_aligned: false,
            relative_velocity: true,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_cells == 0 || self.n_cells % 2 != 0 {
            return Err(Error::Config(format!(
                "grid n_cells must be even and positive, got {}",
                self.n_cells
            )));
        }
        if !(self.cell_side > 0.0) {
            return Err(Error::Config(format!(
                "grid cell_side must be positive, got {}",
                self.cell_side
            )));
        }
        Ok(())
    }

    pub fn n_slots(&self) -> usize {
        self.n_cells * self.n_cells
    }

    /// Half-open cell binning of an offset relative to the ego.
    /// Returns `None` when the offset falls outside the grid extent.
    ///
    /// Cell edges sit at integer multiples of `cell_side`, computed by
    /// direct division so an offset exactly on a representable edge lands
    /// in the upper cell.
    pub fn cell_index(&self, rel: [f64; 2]) -> Option<usize> {
        let half = (self.n_cells / 2) as i64;
        let mut idx = [0usize; 2];
        for axis in 0..2 {
            if !rel[axis].is_finite() {
                return None;
            }
            let i = (rel[axis] / self.cell_side).floor() as i64 + half;
            if i < 0 || i >= self.n_cells as i64 {
                return None;
            }
            idx[axis] = i as usize;
        }
        Some(idx[1] * self.n_cells + idx[0])
    }
}

/// One neighbor contribution: its offset from the ego (plain data, used
/// only for binning) and its payload on the graph.
#[derive(Debug, Clone, Copy)]
pub struct GridEntry {
    pub rel: [f64; 2],
    pub payload: Value,
}

/// Bins neighbor payloads into the flat `[n_cells^2 * channels]` grid.
/// Out-of-range neighbors are dropped; occupied cells hold mean payloads.
///
/// Contributions are re-ordered by (cell, offset bits, payload bits) before
/// accumulation, which makes the result invariant under permutations of the
/// neighbor list.
pub fn rasterize<F: Real>(
    g: &mut Graph<F>,
    spec: &GridSpec,
    channels: usize,
    neighbors: &[GridEntry],
) -> Result<Value> {
    let mut entries: Vec<(usize, [u64; 2], Vec<u64>, Value)> = Vec::new();
    for e in neighbors {
        if let Some(slot) = spec.cell_index(e.rel) {
            let pos_bits = [e.rel[0].to_bits(), e.rel[1].to_bits()];
            let payload_bits: Vec<u64> =
                g.value(e.payload).iter().map(|x| x.as_f64().to_bits()).collect();
            entries.push((slot, pos_bits, payload_bits, e.payload));
        }
    }
    entries.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
    let slotted: Vec<(usize, Value)> = entries.iter().map(|e| (e.0, e.3)).collect();
    g.scatter_mean(&slotted, spec.n_slots(), channels)
}

/// Plain-data rasterization with the same semantics as [`rasterize`].
pub fn rasterize_data(
    spec: &GridSpec,
    channels: usize,
    neighbors: &[([f64; 2], Vec<f64>)],
) -> Vec<f64> {
    let mut grid = vec![0.0; spec.n_slots() * channels];
    let mut counts = vec![0usize; spec.n_slots()];
    let mut entries: Vec<(usize, [u64; 2], &[f64])> = neighbors
        .iter()
        .filter_map(|(rel, payload)| {
            assert_eq!(payload.len(), channels);
            spec.cell_index(*rel)
                .map(|slot| (slot, [rel[0].to_bits(), rel[1].to_bits()], &payload[..]))
        })
        .collect();
    entries.sort_by(|a, b| {
        let ka = (a.0, a.1, a.2.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        let kb = (b.0, b.1, b.2.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        ka.cmp(&kb)
    });
    for (slot, _, payload) in &entries {
        counts[*slot] += 1;
        for (c, &p) in payload.iter().enumerate() {
            grid[slot * channels + c] += p;
        }
    }
    for (slot, &k) in counts.iter().enumerate() {
        if k > 1 {
            for c in 0..channels {
                grid[slot * channels + c] /= k as f64;
            }
        }
    }
    grid
}

/// Linear embedding of a flattened grid.
pub fn embed_grid<F: Real>(g: &mut Graph<F>, lin: &BoundLinear, grid: Value) -> Result<Value> {
    lin.apply(g, grid)
}

/// Interaction embedding of the no-interaction model: a zero vector, so the
/// decoder wiring stays identical across pooling kinds.
pub fn pool_none<F: Real>(g: &mut Graph<F>, pool_dim: usize) -> Value {
    g.zeros(vec![pool_dim])
}

/// cos/sin of the heading rotation that maps `vel` onto the +x axis.
/// `None` when the speed is too small to define a heading.
pub fn heading_rotation(vel: [f64; 2]) -> Option<(f64, f64)> {
    let speed = (vel[0] * vel[0] + vel[1] * vel[1]).sqrt();
    if speed < 1e-9 {
        return None;
    }
    Some((vel[0] / speed, -vel[1] / speed))
}

/// Rotates a plain 2-vector by the rotation given as (cos, sin).
pub fn rotate2_data(v: [f64; 2], rot: (f64, f64)) -> [f64; 2] {
    let (c, s) = rot;
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Rotates a `[2]` value on the graph by a constant rotation.
pub fn rotate2<F: Real>(g: &mut Graph<F>, v: Value, rot: (f64, f64)) -> Result<Value> {
    let (c, s) = rot;
    // column-vector convention: row i of R lands in output i
    let r = g.input(
        vec![2, 2],
        vec![F::lit(c), F::lit(s), F::lit(-s), F::lit(c)],
    )?;
    g.matmul(v, r)
}
