//! Scene and track data model, benchmark-format ingestion, categorization
//! and the synthetic scenario generator.

mod categorize;
mod format;
mod synth;

pub use categorize::{categorize, CategorizeThresholds};
pub use format::{parse_scenes, parse_scenes_csv, write_scenes, CsvWindow, Format};
pub use synth::{synth_scenes, SynthParams};

use crate::error::{Error, Result};

pub type PedId = i64;
pub type FrameId = i64;

/// One pedestrian's samples: strictly increasing frames, finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub ped_id: PedId,
    pub samples: Vec<(FrameId, f64, f64)>,
}

impl Track {
    pub fn new(ped_id: PedId, samples: Vec<(FrameId, f64, f64)>) -> Result<Self> {
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::NonMonotonicFrames { ped: ped_id });
            }
        }
        if samples.iter().any(|&(_, x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::NonFiniteInput("track coordinates"));
        }
        Ok(Track { ped_id, samples })
    }

    pub fn position_at(&self, frame: FrameId) -> Option<[f64; 2]> {
        self.samples
            .iter()
            .find(|&&(f, _, _)| f == frame)
            .map(|&(_, x, y)| [x, y])
    }

    /// Last sample at or before `frame`.
    pub fn last_position_at_or_before(&self, frame: FrameId) -> Option<[f64; 2]> {
        self.samples
            .iter()
            .rev()
            .find(|&&(f, _, _)| f <= frame)
            .map(|&(_, x, y)| [x, y])
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.samples.iter().map(|&(_, x, y)| [x, y]).collect()
    }

    /// First differences of the positions; requires at least two samples.
    pub fn velocities(&self) -> Result<Vec<[f64; 2]>> {
        velocities(&self.positions())
    }
}

/// First differences of a position sequence.
pub fn velocities(positions: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    if positions.len() < 2 {
        return Err(Error::ShapeMismatch {
            op: "velocities",
            lhs: vec![positions.len()],
            rhs: vec![2],
        });
    }
    Ok(positions
        .windows(2)
        .map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]])
        .collect())
}

/// One evaluation unit: tracks over a frame window with a designated
/// primary pedestrian.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: i64,
    pub primary: PedId,
    pub start: FrameId,
    pub end: FrameId,
    pub fps: f64,
    pub tracks: Vec<Track>,
    /// Category annotation carried through ndjson round-trips.
    pub tag: Option<SceneType>,
}

impl Scene {
    pub fn primary_track(&self) -> Result<&Track> {
        self.tracks
            .iter()
            .find(|t| t.ped_id == self.primary)
            .ok_or_else(|| Error::BadScene {
                scene: self.scene_id,
                reason: format!("primary pedestrian {} has no track", self.primary),
            })
    }

    /// The window's frame grid: the primary's samples from `start` to `end`.
    /// Validates full coverage (`total` uniformly spaced frames).
    pub fn window_frames(&self, total: usize) -> Result<Vec<FrameId>> {
        let primary = self.primary_track()?;
        let frames: Vec<FrameId> = primary
            .samples
            .iter()
            .map(|&(f, _, _)| f)
            .filter(|&f| f >= self.start && f <= self.end)
            .collect();
        let reject = |reason: String| Error::BadScene {
            scene: self.scene_id,
            reason,
        };
        if frames.len() != total {
            return Err(reject(format!(
                "primary covers {} of {} window frames",
                frames.len(),
                total
            )));
        }
        if frames[0] != self.start || frames[total - 1] != self.end {
            return Err(reject("primary does not span the window".into()));
        }
        let step = frames[1] - frames[0];
        if step <= 0 || frames.windows(2).any(|w| w[1] - w[0] != step) {
            return Err(reject("window frames not uniformly spaced".into()));
        }
        Ok(frames)
    }

    /// All pedestrian ids present in the scene, primary first.
    pub fn ped_ids(&self) -> Vec<PedId> {
        let mut ids: Vec<PedId> = self.tracks.iter().map(|t| t.ped_id).collect();
        ids.sort_unstable();
        ids.dedup();
        if let Some(pos) = ids.iter().position(|&p| p == self.primary) {
            ids.remove(pos);
            ids.insert(0, self.primary);
        }
        ids
    }

    pub fn track(&self, ped: PedId) -> Option<&Track> {
        self.tracks.iter().find(|t| t.ped_id == ped)
    }
}

/// Rigid rotation of every coordinate in the scene about `center`.
pub fn rotate_scene(scene: &Scene, theta: f64, center: [f64; 2]) -> Scene {
    let (s, c) = theta.sin_cos();
    let mut out = scene.clone();
    for track in &mut out.tracks {
        for sample in &mut track.samples {
            let dx = sample.1 - center[0];
            let dy = sample.2 - center[1];
            sample.1 = center[0] + c * dx - s * dy;
            sample.2 = center[1] + s * dx + c * dy;
        }
    }
    out
}

/// Mean of all track positions; rotation-augmentation center.
pub fn scene_centroid(scene: &Scene) -> [f64; 2] {
    let mut sum = [0.0, 0.0];
    let mut n = 0usize;
    for t in &scene.tracks {
        for &(_, x, y) in &t.samples {
            sum[0] += x;
            sum[1] += y;
            n += 1;
        }
    }
    if n == 0 {
        return [0.0, 0.0];
    }
    [sum[0] / n as f64, sum[1] / n as f64]
}

/// Interaction flavor of a Type III scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InteractionSubtype {
    LeaderFollower,
    CollisionAvoidance,
    Group,
    Others,
}

impl InteractionSubtype {
    pub const ALL: [InteractionSubtype; 4] = [
        InteractionSubtype::LeaderFollower,
        InteractionSubtype::CollisionAvoidance,
        InteractionSubtype::Group,
        InteractionSubtype::Others,
    ];

    pub fn token(self) -> &'static str {
        match self {
            InteractionSubtype::LeaderFollower => "leader-follower",
            InteractionSubtype::CollisionAvoidance => "collision-avoidance",
            InteractionSubtype::Group => "group",
            InteractionSubtype::Others => "others",
        }
    }

    fn number(self) -> u8 {
        match self {
            InteractionSubtype::LeaderFollower => 1,
            InteractionSubtype::CollisionAvoidance => 2,
            InteractionSubtype::Group => 3,
            InteractionSubtype::Others => 4,
        }
    }

    fn from_number(n: u8) -> Option<Self> {
        Some(match n {
            1 => InteractionSubtype::LeaderFollower,
            2 => InteractionSubtype::CollisionAvoidance,
            3 => InteractionSubtype::Group,
            4 => InteractionSubtype::Others,
            _ => return None,
        })
    }
}

/// Benchmark scene category with respect to the primary pedestrian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SceneType {
    /// I: the primary barely moves.
    Static,
    /// II: a constant-velocity Kalman filter already predicts the primary.
    Linear,
    /// III: the primary interacts with other agents.
    Interacting(InteractionSubtype),
    /// IV: none of the above.
    Other,
}

impl SceneType {
    pub fn label(&self) -> String {
        match self {
            SceneType::Static => "I".into(),
            SceneType::Linear => "II".into(),
            SceneType::Interacting(sub) => format!("III/{}", sub.token()),
            SceneType::Other => "IV".into(),
        }
    }

    pub fn main_number(&self) -> u8 {
        match self {
            SceneType::Static => 1,
            SceneType::Linear => 2,
            SceneType::Interacting(_) => 3,
            SceneType::Other => 4,
        }
    }

    pub fn is_interacting(&self) -> bool {
        matches!(self, SceneType::Interacting(_))
    }

    pub(crate) fn to_tag(self) -> (u8, Vec<u8>) {
        match self {
            SceneType::Interacting(sub) => (3, vec![sub.number()]),
            other => (other.main_number(), vec![]),
        }
    }

    pub(crate) fn from_tag(main: u8, subs: &[u8]) -> Option<Self> {
        Some(match main {
            1 => SceneType::Static,
            2 => SceneType::Linear,
            3 => SceneType::Interacting(
                subs.first()
                    .copied()
                    .and_then(InteractionSubtype::from_number)
                    .unwrap_or(InteractionSubtype::Others),
            ),
            4 => SceneType::Other,
            _ => return None,
        })
    }
}

/// Seeded, type-stratified split into train/val/test.
pub fn split(
    scenes: Vec<Scene>,
    types: &[SceneType],
    ratios: [f64; 3],
    seed: u64,
) -> (Vec<Scene>, Vec<Scene>, Vec<Scene>) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    assert_eq!(scenes.len(), types.len());
    let total: f64 = ratios.iter().sum();
    assert!(total > 0.0, "split ratios must not all be zero");

    let mut strata: Vec<(SceneType, Vec<Scene>)> = Vec::new();
    for (scene, &ty) in scenes.into_iter().zip(types) {
        match strata.iter_mut().find(|(t, _)| *t == ty) {
            Some((_, v)) => v.push(scene),
            None => strata.push((ty, vec![scene])),
        }
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (_, mut bucket) in strata {
        bucket.shuffle(&mut rng);
        let n = bucket.len();
        let n_train = (ratios[0] / total * n as f64).round() as usize;
        let n_val = (((ratios[0] + ratios[1]) / total * n as f64).round() as usize)
            .saturating_sub(n_train)
            .min(n - n_train.min(n));
        let n_train = n_train.min(n);
        for (i, scene) in bucket.into_iter().enumerate() {
            if i < n_train {
                train.push(scene);
            } else if i < n_train + n_val {
                val.push(scene);
            } else {
                test.push(scene);
            }
        }
    }
    (train, val, test)
}
