//! Coulomb-friction oscillator: the canonical 1-homogeneous scenario.
//!
//! `m q'' + k q in -mu sign(q')`, realized as a split system with an empty
//! non-dissipative block, `A = 1/m`, stored energy `k q^2 / 2`, and weighted
//! 1-norm dissipation. The piecewise closed-form stick-slip solution serves
//! as the oracle for the time stepper and the energy audit.

use crate::dissipation::DissipationSpec;
use crate::error::{Error, Result};
use crate::integrators::{QuadraticKinetic, SplitEnergy, SplitSystem};
use crate::symplectic::PhasePoint;

#[derive(Debug, Clone, Copy)]
pub struct CoulombOscillator {
    pub mass: f64,
    pub stiffness: f64,
    /// Magnitude of the friction force (the coefficient in `mu |qdot|`).
    pub friction: f64,
}

impl CoulombOscillator {
    pub fn new(mass: f64, stiffness: f64, friction: f64) -> Result<Self> {
        if mass <= 0.0 || stiffness <= 0.0 || friction < 0.0 {
            return Err(Error::DomainError(
                "oscillator requires m > 0, k > 0, mu >= 0".into(),
            ));
        }
        Ok(CoulombOscillator {
            mass,
            stiffness,
            friction,
        })
    }

    pub fn angular_frequency(&self) -> f64 {
        (self.stiffness / self.mass).sqrt()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.angular_frequency()
    }

    /// Amplitude lost over one full period during sustained slip: `4 mu / k`.
    pub fn amplitude_decrement_per_period(&self) -> f64 {
        4.0 * self.friction / self.stiffness
    }

    /// Half-width of the stick band: motion arrests once `|q| <= mu / k`.
    pub fn stick_band(&self) -> f64 {
        self.friction / self.stiffness
    }
}

/// Stored energy `k q^2 / 2` on the dissipative block (empty `q1`).
#[derive(Debug, Clone)]
pub struct SpringEnergy {
    pub stiffness: f64,
}

impl SplitEnergy for SpringEnergy {
    fn value(&self, _t: f64, _q1: &[f64], q2: &[f64]) -> f64 {
        0.5 * self.stiffness * q2.iter().map(|q| q * q).sum::<f64>()
    }
    fn grad_q1(&self, _t: f64, _q1: &[f64], _q2: &[f64]) -> Vec<f64> {
        vec![]
    }
    fn grad_q2(&self, _t: f64, _q1: &[f64], q2: &[f64]) -> Vec<f64> {
        q2.iter().map(|q| self.stiffness * q).collect()
    }
}

/// Build the split system for the oscillator.
pub fn split_system(osc: &CoulombOscillator) -> Result<SplitSystem<SpringEnergy, QuadraticKinetic>> {
    SplitSystem::new(
        SpringEnergy {
            stiffness: osc.stiffness,
        },
        QuadraticKinetic { mass: vec![] },
        0,
        vec![1.0 / osc.mass],
        DissipationSpec::weighted_norm(vec![osc.friction])?,
    )
}

/// Phase point for a release from rest at `q0`.
pub fn release_from_rest(q0: f64) -> PhasePoint {
    PhasePoint::new(vec![q0], vec![0.0]).expect("finite")
}

/// Piecewise closed-form stick-slip solution released from rest at `q0 >= 0`.
///
/// Each half cycle is a cosine arc about the shifted center `sign(q) mu / k`;
/// rest points step down by `2 mu / k` per half cycle until the spring force
/// falls inside the friction cone, after which the state is arrested forever.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    omega: f64,
    /// Rest point at the start of each half cycle, in order.
    rest_points: Vec<f64>,
    /// Center of the cosine arc for each half cycle.
    centers: Vec<f64>,
    half_period: f64,
    stick_q: f64,
    stick_time: f64,
}

impl ReferenceSolution {
    pub fn new(osc: &CoulombOscillator, q0: f64) -> Self {
        assert!(q0 >= 0.0, "reference solution assumes release at q0 >= 0");
        let omega = osc.angular_frequency();
        let half_period = std::f64::consts::PI / omega;
        let band = osc.stick_band();
        let mut rest_points = vec![q0];
        let mut centers = Vec::new();
        let mut q = q0;
        while q.abs() > band + 1e-14 {
            let center = q.signum() * band;
            centers.push(center);
            q = 2.0 * center - q;
            rest_points.push(q);
        }
        let stick_time = centers.len() as f64 * half_period;
        ReferenceSolution {
            omega,
            rest_points,
            centers,
            half_period,
            stick_q: q,
            stick_time,
        }
    }

    /// Signed rest points visited, starting with `q0` and ending at the
    /// arrest position.
    pub fn extrema(&self) -> &[f64] {
        &self.rest_points
    }

    pub fn stick_time(&self) -> f64 {
        self.stick_time
    }

    pub fn stick_position(&self) -> f64 {
        self.stick_q
    }

    pub fn position(&self, t: f64) -> f64 {
        if t >= self.stick_time || self.centers.is_empty() {
            return self.stick_q;
        }
        let phase = (t / self.half_period).floor() as usize;
        let phase = phase.min(self.centers.len() - 1);
        let tau = t - phase as f64 * self.half_period;
        let c = self.centers[phase];
        let r = self.rest_points[phase];
        c + (r - c) * (self.omega * tau).cos()
    }

    pub fn velocity(&self, t: f64) -> f64 {
        if t >= self.stick_time || self.centers.is_empty() {
            return 0.0;
        }
        let phase = (t / self.half_period).floor() as usize;
        let phase = phase.min(self.centers.len() - 1);
        let tau = t - phase as f64 * self.half_period;
        let c = self.centers[phase];
        let r = self.rest_points[phase];
        -(r - c) * self.omega * (self.omega * tau).sin()
    }
}

/// Rest points of a simulated trajectory of the oscillator: the initial
/// release plus every point where the velocity changes sign or first
/// vanishes. Mirrors [`ReferenceSolution::extrema`].
pub fn trajectory_extrema(times: &[f64], q: &[f64], v: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if q.is_empty() {
        return out;
    }
    out.push((times[0], q[0]));
    for k in 0..v.len().saturating_sub(1) {
        let crossed = (v[k] > 0.0 && v[k + 1] <= 0.0) || (v[k] < 0.0 && v[k + 1] >= 0.0);
        if crossed {
            out.push((times[k + 1], q[k + 1]));
        }
    }
    out
}
