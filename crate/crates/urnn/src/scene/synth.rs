//! Goal-directed synthetic scenario generator.
//!
//! Agents steer toward a preferred velocity and repel each other with a
//! short-range exponential force. Scenario templates (crossing, head-on,
//! leader-follower, group) are sampled and simulated, and every emitted
//! scene is post-filtered to categorize as interacting.

use crate::error::{Error, Result};
use crate::scene::{categorize, CategorizeThresholds, FrameId, Scene, SceneType, Track};
use rand::Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub obs_len: usize,
    pub pred_len: usize,
    pub fps: f64,
    /// Preferred walking speed distribution, m/s.
    pub speed_mean: f64,
    pub speed_std: f64,
    /// Simulation retries per accepted scene before giving up.
    pub max_attempts: usize,
    pub thresholds: CategorizeThresholds,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            obs_len: 9,
            pred_len: 12,
            fps: 2.5,
            speed_mean: 1.34,
            speed_std: 0.26,
            max_attempts: 200,
            thresholds: CategorizeThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Scenario {
    Crossing,
    HeadOn,
    LeaderFollower,
    Group,
}

const SCENARIOS: [Scenario; 4] = [
    Scenario::Crossing,
    Scenario::HeadOn,
    Scenario::LeaderFollower,
    Scenario::Group,
];

#[derive(Debug, Clone)]
struct Agent {
    pos: [f64; 2],
    vel: [f64; 2],
    goal_dir: [f64; 2],
    pref_speed: f64,
    /// Heading rotation rate, rad/s; curves the preferred direction.
    turn_rate: f64,
    /// Frame index after which the preferred speed is rescaled.
    slow_after: Option<(usize, f64)>,
    /// Scales how strongly this agent repels from others.
    repulse_scale: f64,
}

/// Generates `n` interacting scenes. Scene ids run 0..n and pedestrian ids
/// are unique across scenes so the batch serializes to one file.
pub fn synth_scenes(n: usize, rng: &mut impl Rng, params: &SynthParams) -> Result<Vec<Scene>> {
    let mut scenes = Vec::with_capacity(n);
    for scene_id in 0..n {
        let mut accepted = None;
        for _ in 0..params.max_attempts {
            let scenario = SCENARIOS[rng.random_range(0..SCENARIOS.len())];
            let agents = spawn(scenario, rng, params);
            let scene = simulate(scene_id as i64, agents, params);
            match categorize(&scene, &params.thresholds) {
                Ok(SceneType::Interacting(sub)) => {
                    let mut scene = scene;
                    scene.tag = Some(SceneType::Interacting(sub));
                    accepted = Some(scene);
                    break;
                }
                _ => continue,
            }
        }
        match accepted {
            Some(s) => scenes.push(s),
            None => return Err(Error::SynthExhausted(params.max_attempts)),
        }
    }
    Ok(scenes)
}

fn sample_speed(rng: &mut impl Rng, params: &SynthParams) -> f64 {
    let normal = Normal::new(params.speed_mean, params.speed_std).unwrap();
    normal.sample(rng).clamp(0.5, 2.5)
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt().max(1e-12);
    [v[0] / n, v[1] / n]
}

fn spawn(scenario: Scenario, rng: &mut impl Rng, params: &SynthParams) -> Vec<Agent> {
    let base = |pos: [f64; 2], dir: [f64; 2], speed: f64| Agent {
        pos,
        vel: [dir[0] * speed, dir[1] * speed],
        goal_dir: dir,
        pref_speed: speed,
        turn_rate: 0.0,
        slow_after: None,
        repulse_scale: 1.0,
    };
    match scenario {
        Scenario::Crossing => {
            // two walkers on perpendicular courses meeting after the
            // observation window, so the pre-deflection course is observed
            let meet = params.obs_len as f64 / params.fps + rng.random_range(1.2..3.2);
            let sa = sample_speed(rng, params);
            let sb = sample_speed(rng, params);
            let jitter = rng.random_range(-0.2..0.2);
            vec![
                base([-sa * meet, jitter], [1.0, 0.0], sa),
                base([rng.random_range(-0.2..0.2), -sb * meet], [0.0, 1.0], sb),
            ]
        }
        Scenario::HeadOn => {
            let meet = params.obs_len as f64 / params.fps + rng.random_range(1.2..3.2);
            let sa = sample_speed(rng, params);
            let sb = sample_speed(rng, params);
            let lateral = rng.random_range(0.05..0.25);
            vec![
                base([-sa * meet, 0.0], [1.0, 0.0], sa),
                base([sb * meet, lateral], [-1.0, 0.0], sb),
            ]
        }
        Scenario::LeaderFollower => {
            let sl = sample_speed(rng, params);
            let sf = sl * rng.random_range(1.05..1.3);
            let gap = rng.random_range(1.2..2.5);
            // the leader brakes somewhere in the prediction horizon
            let brake_at = params.obs_len + rng.random_range(0..params.pred_len / 2);
            let factor = rng.random_range(0.3..0.6);
            let mut leader = base([gap, 0.0], [1.0, 0.0], sl);
            leader.slow_after = Some((brake_at, factor));
            vec![base([0.0, 0.0], [1.0, 0.0], sf), leader]
        }
        Scenario::Group => {
            let speed = sample_speed(rng, params);
            let spacing = rng.random_range(0.4..0.7);
            let turn = rng.random_range(0.15..0.35) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let mut agents = vec![base([0.0, 0.0], [1.0, 0.0], speed)];
            let members = rng.random_range(1..3usize);
            for m in 1..=members {
                agents.push(base([0.0, spacing * m as f64], [1.0, 0.0], speed));
            }
            for a in &mut agents {
                a.turn_rate = turn;
                a.repulse_scale = 0.2; // group members tolerate proximity
            }
            agents
        }
    }
}

/// Fixed-step integration with short-range repulsion; samples one frame
/// per 1/fps seconds.
fn simulate(scene_id: i64, mut agents: Vec<Agent>, params: &SynthParams) -> Scene {
    const RELAX: f64 = 0.6; // s
    const REPULSE_GAIN: f64 = 1.6; // m/s^2
    const REPULSE_RANGE: f64 = 0.45; // m
    const SUBSTEPS: usize = 4;

    let total = params.obs_len + params.pred_len;
    let dt = 1.0 / params.fps;
    let h = dt / SUBSTEPS as f64;
    let mut positions: Vec<Vec<[f64; 2]>> = vec![Vec::with_capacity(total); agents.len()];

    for frame in 0..total {
        for (i, agent) in agents.iter().enumerate() {
            positions[i].push(agent.pos);
        }
        for _ in 0..SUBSTEPS {
            let snapshot: Vec<[f64; 2]> = agents.iter().map(|a| a.pos).collect();
            for (i, agent) in agents.iter_mut().enumerate() {
                // steer toward the (possibly turning, possibly slowed) goal
                if agent.turn_rate != 0.0 {
                    let (s, c) = (agent.turn_rate * h).sin_cos();
                    agent.goal_dir = unit([
                        c * agent.goal_dir[0] - s * agent.goal_dir[1],
                        s * agent.goal_dir[0] + c * agent.goal_dir[1],
                    ]);
                }
                let speed = match agent.slow_after {
                    Some((at, factor)) if frame >= at => agent.pref_speed * factor,
                    _ => agent.pref_speed,
                };
                let mut acc = [
                    (agent.goal_dir[0] * speed - agent.vel[0]) / RELAX,
                    (agent.goal_dir[1] * speed - agent.vel[1]) / RELAX,
                ];
                for (j, other) in snapshot.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let away = [agent.pos[0] - other[0], agent.pos[1] - other[1]];
                    let d = (away[0] * away[0] + away[1] * away[1]).sqrt().max(1e-6);
                    let mag = agent.repulse_scale * REPULSE_GAIN * (-d / REPULSE_RANGE).exp();
                    acc[0] += mag * away[0] / d;
                    acc[1] += mag * away[1] / d;
                }
                agent.vel[0] += acc[0] * h;
                agent.vel[1] += acc[1] * h;
                agent.pos[0] += agent.vel[0] * h;
                agent.pos[1] += agent.vel[1] * h;
            }
        }
    }

    let ped_base = scene_id * 1000 + 1;
    let tracks = positions
        .into_iter()
        .enumerate()
        .map(|(i, pos)| {
            Track::new(
                ped_base + i as i64,
                pos.iter()
                    .enumerate()
                    .map(|(f, p)| (f as FrameId, p[0], p[1]))
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    Scene {
        scene_id,
        primary: ped_base,
        start: 0,
        end: (total - 1) as FrameId,
        fps: params.fps,
        tracks,
        tag: None,
    }
}
