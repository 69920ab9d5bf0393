//! Target state estimation: per-agent particle filters, closed-form horizon
//! prediction of the target distribution, and sequential
//! covariance-intersection fusion across agents.

use crate::dynamics::{step_deterministic, ControlInput, MvnSampler, State6, TransitionMatrices};
use crate::sensing::{LikelihoodModel, Measurement, SensorParams, LOG_IMPOSSIBLE};
use nalgebra::{Matrix6, Vector3, Vector6};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("covariance not invertible after regularization")]
    SingularCovariance,
    #[error("empty belief sequence")]
    EmptySequence,
    #[error("sensing error: {0}")]
    Sensing(#[from] crate::sensing::SensingError),
    #[error("dynamics error: {0}")]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

/// Ridge added to covariances before inversion in CI fusion; EAP covariances
/// can be near-singular after a resampling collapse.
const CI_RIDGE: f64 = 1e-9;

/// Gaussian mean/covariance pair over the 6-dim state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBelief {
    pub mean: State6,
    #[serde(with = "serde_matrix6")]
    pub cov: Matrix6<f64>,
}

mod serde_matrix6 {
    use nalgebra::Matrix6;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix6<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> =
            (0..6).map(|i| (0..6).map(|j| m[(i, j)]).collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix6<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let mut m = Matrix6::zeros();
        for (i, row) in rows.iter().enumerate().take(6) {
            for (j, &v) in row.iter().enumerate().take(6) {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }
}

impl GaussianBelief {
    pub fn new(mean: State6, cov: Matrix6<f64>) -> Self {
        Self { mean, cov }
    }

    /// Enforces symmetry in place (averages with the transpose).
    pub fn symmetrize(&mut self) {
        self.cov = (self.cov + self.cov.transpose()) * 0.5;
    }
}

/// Weighted particle approximation of the posterior.
#[derive(Debug, Clone)]
pub struct ParticleSet {
    pub states: Vec<State6>,
    pub weights: Vec<f64>,
}

/// Flags reported by a measurement update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateOutcome {
    /// Every particle was inconsistent with the gating model; weights were
    /// reset to uniform so the filter falls back to its prediction.
    pub degenerate: bool,
    /// Systematic resampling ran after the update.
    pub resampled: bool,
}

impl ParticleSet {
    /// Draws `n` particles i.i.d. from the initial belief.
    pub fn from_belief<R: Rng>(
        belief: &GaussianBelief,
        n: usize,
        rng: &mut R,
    ) -> Result<Self, EstimationError> {
        let sampler = MvnSampler::<6>::new(&belief.cov)?;
        let mean = belief.mean.to_vector();
        let states = (0..n)
            .map(|_| State6::from_vector(&(mean + sampler.draw(rng))))
            .collect();
        Ok(Self { states, weights: vec![1.0 / n as f64; n] })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Propagates every particle through the stochastic transition with the
    /// assumed control; weights are unchanged (transition-density proposal).
    pub fn predict<R: Rng>(
        &mut self,
        m: &TransitionMatrices,
        assumed_u: &ControlInput,
        q: &Matrix6<f64>,
        rng: &mut R,
    ) -> Result<(), EstimationError> {
        let sampler = MvnSampler::<6>::new(q)?;
        for s in &mut self.states {
            let next = step_deterministic(s, assumed_u, m).to_vector() + sampler.draw(rng);
            *s = State6::from_vector(&next);
        }
        Ok(())
    }

    /// Reweights by an arbitrary per-particle log-likelihood, renormalizes,
    /// and resamples when the effective sample size drops below half.
    pub fn reweight_log<R: Rng, F: Fn(&State6) -> f64>(
        &mut self,
        log_lik: F,
        rng: &mut R,
    ) -> UpdateOutcome {
        let n = self.len();
        let mut log_w: Vec<f64> = self
            .states
            .iter()
            .zip(self.weights.iter())
            .map(|(s, &w)| w.max(f64::MIN_POSITIVE).ln() + log_lik(s))
            .collect();
        let max_lw = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut outcome = UpdateOutcome::default();
        if !max_lw.is_finite() || max_lw <= LOG_IMPOSSIBLE * 0.1 {
            // every particle disagrees with the gating: reset to uniform
            self.weights = vec![1.0 / n as f64; n];
            outcome.degenerate = true;
            return outcome;
        }
        let mut total = 0.0;
        for lw in &mut log_w {
            *lw = (*lw - max_lw).exp();
            total += *lw;
        }
        if total <= 0.0 || !total.is_finite() {
            self.weights = vec![1.0 / n as f64; n];
            outcome.degenerate = true;
            return outcome;
        }
        for (w, lw) in self.weights.iter_mut().zip(log_w.iter()) {
            *w = lw / total;
        }
        self.renormalize();
        let n_eff = 1.0 / self.weights.iter().map(|w| w * w).sum::<f64>();
        if n_eff < n as f64 / 2.0 {
            self.systematic_resample(rng);
            outcome.resampled = true;
        }
        outcome
    }

    /// Measurement update against the gated radar likelihood.
    pub fn update<R: Rng>(
        &mut self,
        y: Option<&Measurement>,
        agent_pos: &Vector3<f64>,
        sensor: &SensorParams,
        rng: &mut R,
    ) -> Result<UpdateOutcome, EstimationError> {
        let model = LikelihoodModel::new(sensor, y.is_some())?;
        Ok(self.reweight_log(|s| model.log_likelihood(y, s, agent_pos), rng))
    }

    /// Expected a-posteriori point estimate: weighted mean and weighted
    /// scatter covariance, symmetrized.
    pub fn eap(&self) -> GaussianBelief {
        let mut mean = Vector6::zeros();
        for (s, &w) in self.states.iter().zip(self.weights.iter()) {
            mean += s.to_vector() * w;
        }
        let mut cov = Matrix6::zeros();
        for (s, &w) in self.states.iter().zip(self.weights.iter()) {
            let d = s.to_vector() - mean;
            cov += (d * d.transpose()) * w;
        }
        let mut b = GaussianBelief::new(State6::from_vector(&mean), cov);
        b.symmetrize();
        b
    }

    /// Exact weight renormalization; sums to 1 within 1e-12 afterwards.
    fn renormalize(&mut self) {
        let total: f64 = self.weights.iter().sum();
        if total > 0.0 {
            for w in &mut self.weights {
                *w /= total;
            }
        }
    }

    /// Systematic resampling; weights reset to uniform.
    pub fn systematic_resample<R: Rng>(&mut self, rng: &mut R) {
        let n = self.len();
        let step = 1.0 / n as f64;
        let start: f64 = rng.random::<f64>() * step;
        let mut new_states = Vec::with_capacity(n);
        let mut cum = self.weights[0];
        let mut idx = 0usize;
        for k in 0..n {
            let u = start + k as f64 * step;
            while u > cum && idx + 1 < n {
                idx += 1;
                cum += self.weights[idx];
            }
            new_states.push(self.states[idx]);
        }
        self.states = new_states;
        self.weights = vec![step; n];
    }
}

/// Per-step Gaussian predictions of the target over the planning horizon.
#[derive(Debug, Clone)]
pub struct HorizonPrediction {
    pub beliefs: Vec<GaussianBelief>,
}

impl HorizonPrediction {
    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    /// Predicted position at look-ahead step `tau` (0-based: time t+tau+1).
    pub fn position(&self, tau: usize) -> Vector3<f64> {
        self.beliefs[tau].mean.pos
    }
}

/// Closed-form horizon prediction:
///
/// ```text
/// mu_{t+tau+1|t} = Phi^{tau+1} mu_t + sum_{i=0}^{tau} Phi^i Gamma u_{tau-i}
/// P_{t+tau+1|t}  = sum_{i=0}^{tau} Phi^i Q Phi'^i + Phi^{tau+1} P_t Phi'^{tau+1}
/// ```
///
/// evaluated with running matrix-power accumulators.
pub fn predict_horizon(
    b: &GaussianBelief,
    m: &TransitionMatrices,
    q: &Matrix6<f64>,
    assumed_controls: &[ControlInput],
) -> HorizonPrediction {
    let horizon = assumed_controls.len();
    let mut beliefs = Vec::with_capacity(horizon);
    let mut phi_pow = m.phi; // Phi^{tau+1}
    let mut noise_sum = *q; // sum_i Phi^i Q Phi'^i
    let mut control_sum = m.gamma * assumed_controls.first().map(|u| u.force).unwrap_or_default();
    for tau in 0..horizon {
        if tau > 0 {
            phi_pow = m.phi * phi_pow;
            noise_sum = *q + m.phi * noise_sum * m.phi.transpose();
            control_sum = m.phi * control_sum + m.gamma * assumed_controls[tau].force;
        }
        let mean = phi_pow * b.mean.to_vector() + control_sum;
        let cov = noise_sum + phi_pow * b.cov * phi_pow.transpose();
        let mut belief = GaussianBelief::new(State6::from_vector(&mean), cov);
        belief.symmetrize();
        beliefs.push(belief);
    }
    HorizonPrediction { beliefs }
}

fn regularized_inverse(p: &Matrix6<f64>) -> Result<Matrix6<f64>, EstimationError> {
    let ridged = p + Matrix6::identity() * CI_RIDGE;
    ridged
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(EstimationError::SingularCovariance)
}

/// Covariance-intersection fusion of two Gaussian estimates.
///
/// The mixing weight minimizes the trace of the fused covariance over
/// [0, 1]; golden-section search to absolute tolerance 1e-6, with an
/// endpoint comparison fallback. Returns the fused belief and the weight.
pub fn ci_fuse_pair(
    a: &GaussianBelief,
    b: &GaussianBelief,
) -> Result<(GaussianBelief, f64), EstimationError> {
    let inv_a = regularized_inverse(&a.cov)?;
    let inv_b = regularized_inverse(&b.cov)?;

    let fused_cov = |omega: f64| -> Option<Matrix6<f64>> {
        let info = inv_a * omega + inv_b * (1.0 - omega);
        info.cholesky().map(|c| c.inverse())
    };
    let objective = |omega: f64| -> f64 {
        fused_cov(omega).map(|p| p.trace()).unwrap_or(f64::INFINITY)
    };

    // golden-section search on the unimodal trace objective
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = objective(c);
    let mut fd = objective(d);
    while hi - lo > 1e-6 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = objective(d);
        }
    }
    let mut omega = 0.5 * (lo + hi);
    let mut best = objective(omega);
    for cand in [0.0, 1.0] {
        let f = objective(cand);
        if f < best {
            best = f;
            omega = cand;
        }
    }
    if !best.is_finite() {
        return Err(EstimationError::SingularCovariance);
    }

    let info = inv_a * omega + inv_b * (1.0 - omega);
    let chol = info.cholesky().ok_or(EstimationError::SingularCovariance)?;
    let cov = chol.inverse();
    let rhs = inv_a * a.mean.to_vector() * omega + inv_b * b.mean.to_vector() * (1.0 - omega);
    let mean = chol.solve(&rhs);
    let mut fused = GaussianBelief::new(State6::from_vector(&mean), cov);
    fused.symmetrize();
    Ok((fused, omega))
}

/// Left fold of pairwise CI fusion in agent-index order; a single belief is
/// returned unchanged. Sequential CI is order-dependent by construction.
pub fn ci_fuse_sequence(beliefs: &[GaussianBelief]) -> Result<GaussianBelief, EstimationError> {
    let (first, rest) = beliefs.split_first().ok_or(EstimationError::EmptySequence)?;
    let mut acc = first.clone();
    for b in rest {
        acc = ci_fuse_pair(&acc, b)?.0;
    }
    Ok(acc)
}
