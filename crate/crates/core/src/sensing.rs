//! Radar measurement model and the detection-and-jamming indicator.
//!
//! An agent receives a range/azimuth/inclination triple of the target only
//! while the target is inside its spherical sensing volume; detection and
//! jamming are the same in-range event. Ground-truth gating always uses the
//! exact sphere — the dodecahedron approximation exists only inside the
//! controllers.

use crate::dynamics::{MvnSampler, State6};
use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Log-density stand-in for "impossible under the gating model"; finite so
/// weight normalization survives a fully inconsistent particle set.
pub const LOG_IMPOSSIBLE: f64 = -1e9;

#[derive(Debug, Error)]
pub enum SensingError {
    #[error("target and agent positions coincide; angles undefined")]
    CoincidentPositions,
    #[error("measurement noise covariance is singular but a measurement is present")]
    SingularNoise,
    #[error("invalid sensor parameter {name}: {value}")]
    InvalidParam { name: &'static str, value: f64 },
}

/// Range (m), azimuth in (-pi, pi], inclination in [0, pi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub range: f64,
    pub azimuth: f64,
    pub inclination: f64,
}

/// Sensing/jamming radius and measurement noise covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorParams {
    pub radius: f64,
    pub noise_cov: Matrix3<f64>,
}

impl SensorParams {
    pub fn validate(&self) -> Result<(), SensingError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(SensingError::InvalidParam { name: "radius", value: self.radius });
        }
        Ok(())
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Noise-free measurement function.
///
/// Azimuth uses the full-quadrant two-argument arctangent with the
/// convention azimuth = 0 when the horizontal offset vanishes; inclination
/// is measured from the +z axis.
pub fn h(target_pos: &Vector3<f64>, agent_pos: &Vector3<f64>) -> Result<Measurement, SensingError> {
    let d = target_pos - agent_pos;
    let range = d.norm();
    if range == 0.0 {
        return Err(SensingError::CoincidentPositions);
    }
    let horiz = d.fixed_rows::<2>(0).norm();
    let azimuth = if horiz == 0.0 { 0.0 } else { d.y.atan2(d.x) };
    let inclination = horiz.atan2(d.z);
    Ok(Measurement { range, azimuth, inclination })
}

/// In-range detection-and-jamming indicator on the exact sphere.
pub fn detect(target_pos: &Vector3<f64>, agent_pos: &Vector3<f64>, p: &SensorParams) -> bool {
    (target_pos - agent_pos).norm() <= p.radius
}

/// Gated noisy measurement: `None` when the target is out of range,
/// otherwise `h` plus zero-mean Gaussian noise with the sensor covariance.
/// Angles are re-wrapped into their ranges and the range clamped at zero.
pub fn measure<R: Rng>(
    target_pos: &Vector3<f64>,
    agent_pos: &Vector3<f64>,
    p: &SensorParams,
    rng: &mut R,
) -> Result<Option<Measurement>, SensingError> {
    p.validate()?;
    if !detect(target_pos, agent_pos, p) {
        return Ok(None);
    }
    let clean = h(target_pos, agent_pos)?;
    let sampler = MvnSampler::<3>::new(&p.noise_cov)
        .map_err(|_| SensingError::InvalidParam { name: "noise_cov", value: f64::NAN })?;
    let w = sampler.draw(rng);
    Ok(Some(Measurement {
        range: (clean.range + w[0]).max(0.0),
        azimuth: wrap_angle(clean.azimuth + w[1]),
        inclination: (clean.inclination + w[2]).clamp(0.0, PI),
    }))
}

/// Precomputed likelihood terms for one sensor; build once per update sweep.
#[derive(Debug, Clone)]
pub struct LikelihoodModel {
    params: SensorParams,
    noise_inv: Option<Matrix3<f64>>,
    log_norm: f64,
}

impl LikelihoodModel {
    /// `measurement_present` decides whether a singular noise covariance is
    /// an error (the Gaussian density is required) or irrelevant.
    pub fn new(params: &SensorParams, measurement_present: bool) -> Result<Self, SensingError> {
        params.validate()?;
        let chol = params.noise_cov.cholesky();
        if measurement_present && chol.is_none() {
            return Err(SensingError::SingularNoise);
        }
        let (noise_inv, log_norm) = match chol {
            Some(c) => {
                let det = c.determinant();
                (Some(c.inverse()), -0.5 * ((2.0 * PI).powi(3) * det).ln())
            }
            None => (None, 0.0),
        };
        Ok(Self { params: params.clone(), noise_inv, log_norm })
    }

    /// Log-likelihood of `y` (possibly absent) for a particle state, per the
    /// gated model: out-of-range particles explain an absent measurement
    /// exactly (log 1 = 0) and a present one not at all; in-range particles
    /// are scored by the Gaussian density of the wrapped residual, or ruled
    /// out when no measurement arrived.
    pub fn log_likelihood(
        &self,
        y: Option<&Measurement>,
        particle: &State6,
        agent_pos: &Vector3<f64>,
    ) -> f64 {
        let in_range = detect(&particle.pos, agent_pos, &self.params);
        match (y, in_range) {
            (None, false) => 0.0,
            (Some(_), false) | (None, true) => LOG_IMPOSSIBLE,
            (Some(m), true) => {
                let predicted = match h(&particle.pos, agent_pos) {
                    Ok(p) => p,
                    Err(_) => return LOG_IMPOSSIBLE,
                };
                let resid = Vector3::new(
                    m.range - predicted.range,
                    wrap_angle(m.azimuth - predicted.azimuth),
                    m.inclination - predicted.inclination,
                );
                let inv = self.noise_inv.as_ref().expect("checked at construction");
                self.log_norm - 0.5 * (resid.transpose() * inv * resid)[0]
            }
        }
    }
}

/// One-shot convenience wrapper over [`LikelihoodModel`].
pub fn log_likelihood(
    y: Option<&Measurement>,
    particle: &State6,
    agent_pos: &Vector3<f64>,
    params: &SensorParams,
) -> Result<f64, SensingError> {
    let model = LikelihoodModel::new(params, y.is_some())?;
    Ok(model.log_likelihood(y, particle, agent_pos))
}
