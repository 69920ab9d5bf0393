//! Discrete state-space models for the target and the agents.
//!
//! Both bodies follow the same linear double-integrator with velocity drag:
//!
//! ```text
//! x' = Phi x + Gamma u (+ w,  w ~ N(0, Q) for the target)
//!
//! Phi = | I  dt*I |        Gamma = |    0     |
//!       | 0  (1-eta)*I |           | (dt/m)*I |
//! ```
//!
//! States are 6-vectors of position and velocity; controls are 3-vector
//! forces.

use nalgebra::{Matrix3, Matrix6, Matrix6x3, SMatrix, SVector, Vector3, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid dynamics parameter {name}: {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("covariance is not symmetric positive semidefinite (min eigenvalue {min_eig})")]
    NotPsd { min_eig: f64 },
    #[error("non-finite state or control component")]
    NonFinite,
}

/// Position + velocity state shared by the target and the agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 6]", from = "[f64; 6]")]
pub struct State6 {
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
}

impl State6 {
    pub fn new(pos: Vector3<f64>, vel: Vector3<f64>) -> Self {
        Self { pos, vel }
    }

    pub fn zero() -> Self {
        Self { pos: Vector3::zeros(), vel: Vector3::zeros() }
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self { pos: v.fixed_rows::<3>(0).into(), vel: v.fixed_rows::<3>(3).into() }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.pos);
        v.fixed_rows_mut::<3>(3).copy_from(&self.vel);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.pos.iter().chain(self.vel.iter()).all(|c| c.is_finite())
    }
}

impl From<State6> for [f64; 6] {
    fn from(s: State6) -> Self {
        [s.pos.x, s.pos.y, s.pos.z, s.vel.x, s.vel.y, s.vel.z]
    }
}

impl From<[f64; 6]> for State6 {
    fn from(a: [f64; 6]) -> Self {
        Self {
            pos: Vector3::new(a[0], a[1], a[2]),
            vel: Vector3::new(a[3], a[4], a[5]),
        }
    }
}

/// A 3-vector force input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 3]", from = "[f64; 3]")]
pub struct ControlInput {
    pub force: Vector3<f64>,
}

impl ControlInput {
    pub fn new(fx: f64, fy: f64, fz: f64) -> Self {
        Self { force: Vector3::new(fx, fy, fz) }
    }

    pub fn zero() -> Self {
        Self { force: Vector3::zeros() }
    }
}

impl From<ControlInput> for [f64; 3] {
    fn from(u: ControlInput) -> Self {
        [u.force.x, u.force.y, u.force.z]
    }
}

impl From<[f64; 3]> for ControlInput {
    fn from(a: [f64; 3]) -> Self {
        Self { force: Vector3::new(a[0], a[1], a[2]) }
    }
}

/// Per-body dynamics parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    /// Sampling interval, seconds.
    pub dt: f64,
    /// Body mass, kilograms.
    pub mass: f64,
    /// Air resistance coefficient in [0, 1).
    pub drag: f64,
    /// Process noise covariance (zero for agents).
    pub process_noise_cov: Matrix6<f64>,
    /// Speed bound, applied per velocity component, m/s.
    pub v_max: f64,
    /// Force bound, applied per control component, N.
    pub u_max: f64,
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DynamicsError::InvalidParam { name: "dt", value: self.dt });
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(DynamicsError::InvalidParam { name: "mass", value: self.mass });
        }
        if !(0.0..1.0).contains(&self.drag) {
            return Err(DynamicsError::InvalidParam { name: "drag", value: self.drag });
        }
        if !(self.v_max > 0.0) {
            return Err(DynamicsError::InvalidParam { name: "v_max", value: self.v_max });
        }
        if !(self.u_max >= 0.0) {
            return Err(DynamicsError::InvalidParam { name: "u_max", value: self.u_max });
        }
        check_psd6(&self.process_noise_cov)?;
        Ok(())
    }
}

/// State transition matrices of the linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrices {
    pub phi: Matrix6<f64>,
    pub gamma: Matrix6x3<f64>,
}

/// Builds the transition matrices for the given parameters.
pub fn build_transition(params: &DynamicsParams) -> Result<TransitionMatrices, DynamicsError> {
    params.validate()?;
    let mut phi = Matrix6::zeros();
    phi.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    phi.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(Matrix3::identity() * params.dt));
    phi.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(Matrix3::identity() * (1.0 - params.drag)));
    let mut gamma = Matrix6x3::zeros();
    gamma
        .fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(Matrix3::identity() * (params.dt / params.mass)));
    Ok(TransitionMatrices { phi, gamma })
}

/// One noiseless step of the linear model.
pub fn step_deterministic(x: &State6, u: &ControlInput, m: &TransitionMatrices) -> State6 {
    let v = m.phi * x.to_vector() + m.gamma * u.force;
    State6::from_vector(&v)
}

/// One step with additive zero-mean Gaussian process noise of covariance `q`.
pub fn step_stochastic<R: Rng>(
    x: &State6,
    u: &ControlInput,
    m: &TransitionMatrices,
    q: &Matrix6<f64>,
    rng: &mut R,
) -> Result<State6, DynamicsError> {
    if !x.is_finite() || !u.force.iter().all(|c| c.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    let sampler = MvnSampler::<6>::new(q)?;
    let mut next = step_deterministic(x, u, m).to_vector();
    next += sampler.draw(rng);
    Ok(State6::from_vector(&next))
}

fn check_psd6(q: &Matrix6<f64>) -> Result<(), DynamicsError> {
    let scale = q.norm().max(1.0);
    if (q - q.transpose()).norm() > 1e-10 * scale {
        return Err(DynamicsError::NotPsd { min_eig: f64::NAN });
    }
    let eig = q.symmetric_eigenvalues();
    let min_eig = eig.min();
    if min_eig < -1e-10 * scale {
        return Err(DynamicsError::NotPsd { min_eig });
    }
    Ok(())
}

/// Samples from a zero-mean multivariate normal with fixed covariance.
///
/// Uses the Cholesky factor when the covariance is positive definite and
/// falls back to an eigendecomposition with negative eigenvalues clipped at
/// zero (tolerance 1e-10) for PSD-but-singular matrices, e.g. diagonal
/// covariances with zero entries.
#[derive(Debug, Clone)]
pub struct MvnSampler<const N: usize> {
    factor: SMatrix<f64, N, N>,
}

impl<const N: usize> MvnSampler<N> {
    pub fn new(cov: &SMatrix<f64, N, N>) -> Result<Self, DynamicsError> {
        let scale = cov.norm().max(1.0);
        if (cov - cov.transpose()).norm() > 1e-10 * scale {
            return Err(DynamicsError::NotPsd { min_eig: f64::NAN });
        }
        if let Some(chol) = cov.clone_owned().cholesky() {
            return Ok(Self { factor: chol.l() });
        }
        let eig = cov.clone_owned().symmetric_eigen();
        let min_eig = eig.eigenvalues.min();
        if min_eig < -1e-10 * scale {
            return Err(DynamicsError::NotPsd { min_eig });
        }
        let mut factor = eig.eigenvectors;
        for (j, lam) in eig.eigenvalues.iter().enumerate() {
            let s = lam.max(0.0).sqrt();
            factor.column_mut(j).scale_mut(s);
        }
        Ok(Self { factor })
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> SVector<f64, N> {
        let z = SVector::<f64, N>::from_fn(|_, _| rng.sample(StandardNormal));
        &self.factor * z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamId};
    use approx::assert_relative_eq;

    fn params(dt: f64, drag: f64, mass: f64) -> DynamicsParams {
        DynamicsParams {
            dt,
            mass,
            drag,
            process_noise_cov: Matrix6::zeros(),
            v_max: 20.0,
            u_max: 25.0,
        }
    }

    #[test]
    fn transition_blocks_match_definition() {
        // dt=1, eta=0.2, m=3.25: lower-right block 0.8*I, Gamma bottom (1/3.25)*I
        let m = build_transition(&params(1.0, 0.2, 3.25)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(m.phi[(i, j)], id);
                assert_relative_eq!(m.phi[(i, j + 3)], id * 1.0);
                assert_relative_eq!(m.phi[(i + 3, j)], 0.0);
                assert_relative_eq!(m.phi[(i + 3, j + 3)], 0.8 * id);
                assert_relative_eq!(m.gamma[(i, j)], 0.0);
                assert_relative_eq!(m.gamma[(i + 3, j)], id / 3.25, max_relative = 1e-15);
            }
        }
        assert_relative_eq!(m.gamma[(3, 0)], 0.307_692_307_692_307_7, max_relative = 1e-12);
    }

    #[test]
    fn transition_dragfree_unit_mass() {
        let m = build_transition(&params(1.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(m.phi[(3, 3)], 1.0);
        assert_relative_eq!(m.gamma[(3, 0)], 1.0);
    }

    #[test]
    fn transition_half_dt() {
        let m = build_transition(&params(0.5, 0.2, 2.0)).unwrap();
        assert_relative_eq!(m.phi[(0, 3)], 0.5);
        assert_relative_eq!(m.gamma[(3, 0)], 0.25);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(build_transition(&params(0.0, 0.2, 1.0)).is_err());
        assert!(build_transition(&params(1.0, 1.0, 1.0)).is_err());
        assert!(build_transition(&params(1.0, 0.2, -1.0)).is_err());
    }

    #[test]
    fn step_zero_is_zero() {
        let m = build_transition(&params(1.0, 0.2, 3.25)).unwrap();
        let out = step_deterministic(&State6::zero(), &ControlInput::zero(), &m);
        assert_eq!(out, State6::zero());
    }

    #[test]
    fn step_constant_velocity() {
        let m = build_transition(&params(1.0, 0.0, 1.0)).unwrap();
        let x = State6::new(Vector3::new(1.0, 0.0, 0.0), Vector3::new(2.0, 0.0, 0.0));
        let out = step_deterministic(&x, &ControlInput::zero(), &m);
        assert_relative_eq!(out.pos.x, 3.0);
        assert_relative_eq!(out.vel.x, 2.0);
    }

    #[test]
    fn step_pure_force() {
        // Gamma u with dt=1, m=3.25: force 3.25 N gives exactly 1 m/s, no
        // position change within the step.
        let m = build_transition(&params(1.0, 0.2, 3.25)).unwrap();
        let out = step_deterministic(&State6::zero(), &ControlInput::new(3.25, 0.0, 0.0), &m);
        assert_relative_eq!(out.vel.x, 1.0, max_relative = 1e-15);
        assert_relative_eq!(out.pos.x, 0.0);
    }

    #[test]
    fn step_is_linear() {
        let m = build_transition(&params(1.0, 0.2, 3.25)).unwrap();
        let x1 = State6::new(Vector3::new(1.0, -2.0, 3.0), Vector3::new(0.5, 0.1, -0.7));
        let x2 = State6::new(Vector3::new(-4.0, 0.3, 2.0), Vector3::new(1.5, -1.1, 0.2));
        let u1 = ControlInput::new(1.0, 2.0, -3.0);
        let u2 = ControlInput::new(-0.5, 0.25, 4.0);
        let (a, b) = (2.5, -1.25);
        let mixed_x = State6::from_vector(&(x1.to_vector() * a + x2.to_vector() * b));
        let mixed_u = ControlInput { force: u1.force * a + u2.force * b };
        let lhs = step_deterministic(&mixed_x, &mixed_u, &m).to_vector();
        let rhs =
            step_deterministic(&x1, &u1, &m).to_vector() * a + step_deterministic(&x2, &u2, &m).to_vector() * b;
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn drag_contracts_speed() {
        let m = build_transition(&params(1.0, 0.2, 3.25)).unwrap();
        let x = State6::new(Vector3::zeros(), Vector3::new(3.0, -4.0, 1.0));
        let out = step_deterministic(&x, &ControlInput::zero(), &m);
        assert_relative_eq!(out.vel.norm(), 0.8 * x.vel.norm(), max_relative = 1e-12);
        let m0 = build_transition(&params(1.0, 0.0, 3.25)).unwrap();
        let out0 = step_deterministic(&x, &ControlInput::zero(), &m0);
        assert_relative_eq!(out0.vel.norm(), x.vel.norm(), max_relative = 1e-12);
    }

    #[test]
    fn stochastic_zero_noise_matches_deterministic() {
        let m = build_transition(&params(1.0, 0.2, 3.25)).unwrap();
        let x = State6::new(Vector3::new(1.0, 2.0, 3.0), Vector3::new(-1.0, 0.0, 0.5));
        let u = ControlInput::new(1.0, -2.0, 0.0);
        let q = Matrix6::zeros();
        let mut rng = stream(9, StreamId::TargetProcess);
        let out = step_stochastic(&x, &u, &m, &q, &mut rng).unwrap();
        assert_eq!(out, step_deterministic(&x, &u, &m));
    }

    #[test]
    fn stochastic_noise_stats() {
        // 1e5 draws: empirical mean within 4 sigma / sqrt(n); empirical
        // covariance within 5% of Q = diag([1,1,1,0.5,0.5,0.5]).
        let m = build_transition(&params(1.0, 0.2, 3.25)).unwrap();
        let q = Matrix6::from_diagonal(&Vector6::new(1.0, 1.0, 1.0, 0.5, 0.5, 0.5));
        let x = State6::zero();
        let u = ControlInput::zero();
        let det = step_deterministic(&x, &u, &m).to_vector();
        let n = 100_000;
        let mut rng = stream(123, StreamId::TargetProcess);
        let mut sum = Vector6::zeros();
        let mut sq = Matrix6::zeros();
        for _ in 0..n {
            let w = step_stochastic(&x, &u, &m, &q, &mut rng).unwrap().to_vector() - det;
            sum += w;
            sq += w * w.transpose();
        }
        let mean = sum / n as f64;
        for i in 0..6 {
            let sigma = q[(i, i)].sqrt();
            assert!(
                mean[i].abs() < 4.0 * sigma / (n as f64).sqrt(),
                "component {i} mean {} too large",
                mean[i]
            );
        }
        let cov = sq / n as f64;
        for i in 0..6 {
            assert_relative_eq!(cov[(i, i)], q[(i, i)], max_relative = 0.05);
        }
    }

    #[test]
    fn sampler_handles_singular_psd() {
        let mut q = Matrix6::zeros();
        q[(0, 0)] = 2.0; // rank-1 covariance
        let s = MvnSampler::<6>::new(&q).unwrap();
        let mut rng = stream(5, StreamId::TruthInit);
        for _ in 0..100 {
            let w = s.draw(&mut rng);
            for i in 1..6 {
                assert_eq!(w[i], 0.0);
            }
        }
        let mut bad = Matrix6::identity();
        bad[(0, 0)] = -1.0;
        assert!(MvnSampler::<6>::new(&bad).is_err());
    }
}
