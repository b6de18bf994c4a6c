//! Motion and measurement models for planar range–azimuth tracking.
//!
//! Kinematic states are ordered `[x, vx, y, vy]` (metres and metres per
//! second). The sensor sits at the origin and reports `[range, azimuth]`,
//! azimuth measured counterclockwise from the +x axis and wrapped to (−π, π].

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dimension of the kinematic state `[x, vx, y, vy]`.
pub const STATE_DIM: usize = 4;
/// Dimension of a sensor report `[range, azimuth]`.
pub const MEAS_DIM: usize = 2;

/// Planar position/velocity state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicState {
    pub x: f64,
    pub vx: f64,
    pub y: f64,
    pub vy: f64,
}

impl KinematicState {
    pub fn new(x: f64, vx: f64, y: f64, vy: f64) -> Self {
        Self { x, vx, y, vy }
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.x, self.vx, self.y, self.vy)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Position components `(x, y)`.
    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

/// A linear-Gaussian motion hypothesis: `x_k = F x_{k-1} + w`, `w ~ N(0, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    pub f: Matrix4<f64>,
    pub q: Matrix4<f64>,
}

/// Process noise with per-axis position/velocity intensities `q_pos`, `q_vel`
/// replicated over the x and y axes.
pub fn axis_process_noise(q_pos: f64, q_vel: f64) -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(q_pos, q_vel, q_pos, q_vel))
}

/// Constant-velocity model over a sample time `t`.
pub fn cv_model(t: f64, q: Matrix4<f64>) -> Result<MotionModel> {
    if t <= 0.0 {
        return Err(Error::NonPositiveSampleTime(t));
    }
    let mut f = Matrix4::identity();
    f[(0, 1)] = t;
    f[(2, 3)] = t;
    Ok(MotionModel { f, q })
}

/// Coordinated-turn model with known turn rate `omega` (rad/s) over a sample
/// time `t`. The velocity rotates by `omega*t` per step while the position
/// advances along the arc. `omega = 0` is rejected: the matrix entries with
/// `sin(omega*t)/omega` degenerate, and the constant-velocity model covers
/// that case exactly.
pub fn ct_model(t: f64, omega: f64, q: Matrix4<f64>) -> Result<MotionModel> {
    if t <= 0.0 {
        return Err(Error::NonPositiveSampleTime(t));
    }
    if omega == 0.0 {
        return Err(Error::ZeroTurnRate);
    }
    let theta = omega * t;
    let (s, c) = theta.sin_cos();
    let f = Matrix4::new(
        1.0, s / omega, 0.0, -(1.0 - c) / omega,
        0.0, c, 0.0, -s,
        0.0, (1.0 - c) / omega, 1.0, s / omega,
        0.0, s, 0.0, c,
    );
    Ok(MotionModel { f, q })
}

/// Wrap an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// Difference `a − b` on the circle, wrapped to (−π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

/// Range–azimuth observation of a kinematic state. Fails within a metre of
/// the sensor, where azimuth is undefined.
pub fn measure(state: &Vector4<f64>) -> Result<Vector2<f64>> {
    let (x, y) = (state[0], state[2]);
    let r = x.hypot(y);
    if r < 1e-6 {
        return Err(Error::ZeroRange);
    }
    Ok(Vector2::new(r, wrap_angle(y.atan2(x))))
}

/// Jacobian of [`measure`] with respect to the state, evaluated at `state`.
pub fn measurement_jacobian(state: &Vector4<f64>) -> Result<Matrix2x4<f64>> {
    let (x, y) = (state[0], state[2]);
    let r2 = x * x + y * y;
    let r = r2.sqrt();
    if r < 1e-6 {
        return Err(Error::ZeroRange);
    }
    Ok(Matrix2x4::new(
        x / r, 0.0, y / r, 0.0,
        -y / r2, 0.0, x / r2, 0.0,
    ))
}

/// Cartesian position implied by a range–azimuth measurement.
pub fn cartesian_from_polar(meas: &Vector2<f64>) -> Vector2<f64> {
    let (r, az) = (meas[0], meas[1]);
    Vector2::new(r * az.cos(), r * az.sin())
}

/// Measurement noise covariance from standard deviations in range (m) and
/// azimuth (rad).
pub fn measurement_noise(sigma_r: f64, sigma_az: f64) -> Matrix2<f64> {
    Matrix2::from_diagonal(&Vector2::new(sigma_r * sigma_r, sigma_az * sigma_az))
}

/// Surveillance region in measurement coordinates, and therefore also the
/// association gate volume: `volume = (r_max − r_min)·(az_max − az_min)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub range_min: f64,
    pub range_max: f64,
    pub azimuth_min: f64,
    pub azimuth_max: f64,
}

impl Region {
    pub fn volume(&self) -> f64 {
        (self.range_max - self.range_min) * (self.azimuth_max - self.azimuth_min)
    }

    pub fn contains(&self, meas: &Vector2<f64>) -> bool {
        meas[0] >= self.range_min
            && meas[0] <= self.range_max
            && meas[1] >= self.azimuth_min
            && meas[1] <= self.azimuth_max
    }
}
