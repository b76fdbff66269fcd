//! Learning-free predictors: constant velocity and a constant-velocity
//! Kalman filter.

use crate::error::{Error, Result};
use nalgebra::{Matrix2, Matrix4, Matrix4x2, Matrix2x4, Vector2, Vector4};

/// Straight-line continuation of the last observed velocity:
/// `x[T+k] = x[T] + k * (x[T] - x[T-1])`.
pub fn predict_constant_velocity(obs: &[[f64; 2]], pred_len: usize) -> Result<Vec<[f64; 2]>> {
    if obs.len() < 2 {
        return Err(Error::ShapeMismatch {
            op: "predict_constant_velocity",
            lhs: vec![obs.len()],
            rhs: vec![2],
        });
    }
    let last = obs[obs.len() - 1];
    let prev = obs[obs.len() - 2];
    let vel = [last[0] - prev[0], last[1] - prev[1]];
    Ok((1..=pred_len)
        .map(|k| {
            let k = k as f64;
            [last[0] + k * vel[0], last[1] + k * vel[1]]
        })
        .collect())
}

/// Noise scales of the constant-velocity Kalman filter, in m^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanNoise {
    pub process: f64,
    pub observation: f64,
}

impl Default for KalmanNoise {
    fn default() -> Self {
        KalmanNoise {
            process: 1e-2,
            observation: 1e-3,
        }
    }
}

/// Filter state over (x, y, vx, vy) with one frame as the time unit.
#[derive(Debug, Clone)]
pub struct KalmanState {
    pub state: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub noise: KalmanNoise,
}

impl KalmanState {
    /// Initializes position and velocity from the first two observations.
    pub fn from_first_two(z0: [f64; 2], z1: [f64; 2], noise: KalmanNoise) -> Self {
        KalmanState {
            state: Vector4::new(z1[0], z1[1], z1[0] - z0[0], z1[1] - z0[1]),
            covariance: Matrix4::identity() * 0.1,
            noise,
        }
    }

    fn transition() -> Matrix4<f64> {
        let mut f = Matrix4::identity();
        f[(0, 2)] = 1.0;
        f[(1, 3)] = 1.0;
        f
    }

    /// Time update: advance one frame under the motion model.
    pub fn predict_step(&mut self) {
        let f = Self::transition();
        self.state = f * self.state;
        self.covariance =
            f * self.covariance * f.transpose() + Matrix4::identity() * self.noise.process;
    }

    /// Measurement update in Joseph form, which keeps the covariance
    /// symmetric positive semi-definite.
    pub fn update(&mut self, z: [f64; 2]) {
        let h = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let r = Matrix2::identity() * self.noise.observation;
        let innovation = Vector2::new(z[0], z[1]) - h * self.state;
        let s = h * self.covariance * h.transpose() + r;
        let s_inv = s.try_inverse().expect("innovation covariance invertible");
        let k: Matrix4x2<f64> = self.covariance * h.transpose() * s_inv;
        self.state += k * innovation;
        let ikh = Matrix4::identity() - k * h;
        self.covariance =
            ikh * self.covariance * ikh.transpose() + k * r * k.transpose();
        self.covariance = (self.covariance + self.covariance.transpose()) * 0.5;
    }

    pub fn position(&self) -> [f64; 2] {
        [self.state[0], self.state[1]]
    }
}

/// Filters the observation window, then rolls the motion model forward
/// `pred_len` frames without observations.
pub fn predict_kalman(
    obs: &[[f64; 2]],
    pred_len: usize,
    noise: KalmanNoise,
) -> Result<Vec<[f64; 2]>> {
    if obs.len() < 2 {
        return Err(Error::ShapeMismatch {
            op: "predict_kalman",
            lhs: vec![obs.len()],
            rhs: vec![2],
        });
    }
    if obs.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::NonFiniteInput("kalman observations"));
    }
    let mut kf = KalmanState::from_first_two(obs[0], obs[1], noise);
    for z in &obs[2..] {
        kf.predict_step();
        kf.update(*z);
    }
    let mut out = Vec::with_capacity(pred_len);
    for _ in 0..pred_len {
        kf.predict_step();
        out.push(kf.position());
    }
    Ok(out)
}
