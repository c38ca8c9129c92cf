//! Time stepping for the split dissipative-Hamiltonian system
//!
//! ```text
//!   -p1' = D_q1 E(t, q1, q2)         q1' = D_p K(p1)
//!   -p2' in D_q2 E(t, q1, q2) + d rho(q2')      q2' = A p2
//! ```
//!
//! with `A` diagonal positive. The non-dissipative block advances by
//! symplectic Euler (momentum first); the dissipative block by a backward
//! (proximal) Euler resolvent of the subdifferential inclusion, which under
//! the change of variables `v = A p2` reduces to the catalog prox with a
//! per-component step `dt * a_i`. Every run carries an energy ledger for the
//! discrete balance audit.

use crate::dissipation::DissipationSpec;
use crate::error::{Error, Result};
use crate::symplectic::{omega, symplectic_gradient, Hamiltonian, PhasePoint};
use crate::vecmath::all_finite;

/// Stored-energy oracle `E(t, q1, q2)` with partial gradients and explicit
/// time derivative.
pub trait SplitEnergy {
    fn value(&self, t: f64, q1: &[f64], q2: &[f64]) -> f64;
    fn grad_q1(&self, t: f64, q1: &[f64], q2: &[f64]) -> Vec<f64>;
    fn grad_q2(&self, t: f64, q1: &[f64], q2: &[f64]) -> Vec<f64>;
    fn partial_t(&self, _t: f64, _q1: &[f64], _q2: &[f64]) -> f64 {
        0.0
    }
}

/// Kinetic-energy oracle `K(p1)` for the non-dissipative momentum block.
pub trait KineticEnergy {
    fn value(&self, p1: &[f64]) -> f64;
    fn grad(&self, p1: &[f64]) -> Vec<f64>;
}

/// `K(p) = sum p_i^2 / (2 m_i)`.
#[derive(Debug, Clone)]
pub struct QuadraticKinetic {
    pub mass: Vec<f64>,
}

impl KineticEnergy for QuadraticKinetic {
    fn value(&self, p1: &[f64]) -> f64 {
        p1.iter()
            .zip(&self.mass)
            .map(|(p, m)| p * p / (2.0 * m))
            .sum()
    }
    fn grad(&self, p1: &[f64]) -> Vec<f64> {
        p1.iter().zip(&self.mass).map(|(p, m)| p / m).collect()
    }
}

/// The split system: energy, kinetic, diagonal coupling `A`, and the
/// dissipation acting on the `q2` rate. Phase points are laid out as
/// `x = [q1 | q2]`, `y = [p1 | p2]`.
#[derive(Debug, Clone)]
pub struct SplitSystem<E, K> {
    pub energy: E,
    pub kinetic: K,
    pub n1: usize,
    pub a_diag: Vec<f64>,
    pub dissipation: DissipationSpec,
}

impl<E: SplitEnergy, K: KineticEnergy> SplitSystem<E, K> {
    pub fn new(
        energy: E,
        kinetic: K,
        n1: usize,
        a_diag: Vec<f64>,
        dissipation: DissipationSpec,
    ) -> Result<Self> {
        if a_diag.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(Error::DomainError(
                "coupling diagonal must be strictly positive".into(),
            ));
        }
        if let Some(d) = dissipation.dim() {
            if d != a_diag.len() {
                return Err(Error::InvalidDimension {
                    context: "split system dissipation",
                    expected: a_diag.len(),
                    got: d,
                });
            }
        }
        Ok(SplitSystem {
            energy,
            kinetic,
            n1,
            a_diag,
            dissipation,
        })
    }

    pub fn n2(&self) -> usize {
        self.a_diag.len()
    }

    pub fn dim(&self) -> usize {
        self.n1 + self.n2()
    }

    fn split<'a>(&self, z: &'a PhasePoint) -> (&'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
        let n1 = self.n1;
        (&z.x[..n1], &z.x[n1..], &z.y[..n1], &z.y[n1..])
    }

    /// View the split system as a plain Hamiltonian
    /// `H = K(p1) + 1/2 <A p2, p2> + E(t, q1, q2)` on the full phase space.
    pub fn hamiltonian(&self) -> SplitHamiltonian<'_, E, K> {
        SplitHamiltonian { sys: self }
    }
}

/// [`Hamiltonian`] adapter for a [`SplitSystem`].
pub struct SplitHamiltonian<'a, E, K> {
    sys: &'a SplitSystem<E, K>,
}

impl<E: SplitEnergy, K: KineticEnergy> Hamiltonian for SplitHamiltonian<'_, E, K> {
    fn value(&self, t: f64, z: &PhasePoint) -> f64 {
        let (q1, q2, p1, p2) = self.sys.split(z);
        let coupling: f64 = 0.5
            * p2.iter()
                .zip(&self.sys.a_diag)
                .map(|(p, a)| a * p * p)
                .sum::<f64>();
        self.sys.kinetic.value(p1) + coupling + self.sys.energy.value(t, q1, q2)
    }

    fn grad_x(&self, t: f64, z: &PhasePoint) -> Vec<f64> {
        let (q1, q2, _, _) = self.sys.split(z);
        let mut g = self.sys.energy.grad_q1(t, q1, q2);
        g.extend(self.sys.energy.grad_q2(t, q1, q2));
        g
    }

    fn grad_y(&self, _t: f64, z: &PhasePoint) -> Vec<f64> {
        let (_, _, p1, p2) = self.sys.split(z);
        let mut g = self.sys.kinetic.grad(p1);
        g.extend(p2.iter().zip(&self.sys.a_diag).map(|(p, a)| a * p));
        g
    }

    fn partial_t(&self, t: f64, z: &PhasePoint) -> f64 {
        let (q1, q2, _, _) = self.sys.split(z);
        self.sys.energy.partial_t(t, q1, q2)
    }
}

/// One row of the discrete energy balance:
/// `residual = H(t) + dissipated - H(0) - integral of dH/dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLedger {
    pub hamiltonian: f64,
    pub external_power_integral: f64,
    pub dissipated: f64,
    pub residual: f64,
}

/// A completed run: time grid, states, per-step dissipation increments
/// (first entry zero), and the energy ledger, all of equal length.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub dissipation_increments: Vec<f64>,
    pub ledger: Vec<EnergyLedger>,
}

/// Result of one split step.
#[derive(Debug, Clone)]
pub struct SplitStep {
    pub state: PhasePoint,
    pub dissipation_increment: f64,
}

/// Semi-implicit split update over `[t, t + dt]`:
/// symplectic Euler on `(q1, p1)`, then the proximal resolvent on `(q2, p2)`
/// with the energy gradient evaluated at the updated `q1`. Domain indicators
/// of the damage dissipation are enforced by clamping `q2` and zeroing `p2`
/// at active upper bounds. Records the increment `dt * R(q2, (q2+ - q2)/dt)`.
pub fn step_split<E: SplitEnergy, K: KineticEnergy>(
    sys: &SplitSystem<E, K>,
    t: f64,
    state: &PhasePoint,
    dt: f64,
) -> Result<SplitStep> {
    if dt <= 0.0 {
        return Err(Error::DomainError("step requires dt > 0".into()));
    }
    let (q1, q2, p1, p2) = sys.split(state);
    let n2 = sys.n2();

    // Non-dissipative block: momentum first, then coordinate.
    let g1 = sys.energy.grad_q1(t, q1, q2);
    let p1_new: Vec<f64> = p1.iter().zip(&g1).map(|(p, g)| p - dt * g).collect();
    let v1 = sys.kinetic.grad(&p1_new);
    let q1_new: Vec<f64> = q1.iter().zip(&v1).map(|(q, v)| q + dt * v).collect();

    // Dissipative block: p2+ in p2 - dt D_q2 E - dt d rho(A p2+), solved in
    // the rate variable v = A p2+ by the catalog prox with step dt * a_i.
    let g2 = sys.energy.grad_q2(t, &q1_new, q2);
    let w: Vec<f64> = p2.iter().zip(&g2).map(|(p, g)| p - dt * g).collect();
    let aw: Vec<f64> = w.iter().zip(&sys.a_diag).map(|(wi, a)| a * wi).collect();
    let taus: Vec<f64> = sys.a_diag.iter().map(|a| dt * a).collect();
    let v2 = sys.dissipation.prox_scaled(&aw, &taus)?;
    let mut p2_new: Vec<f64> = v2.iter().zip(&sys.a_diag).map(|(v, a)| v / a).collect();
    let mut q2_new: Vec<f64> = q2.iter().zip(&v2).map(|(q, v)| q + dt * v).collect();

    if let DissipationSpec::DamageDissipation { .. } = sys.dissipation {
        for i in 0..n2 {
            if q2_new[i] >= 1.0 {
                q2_new[i] = 1.0;
                p2_new[i] = 0.0;
            }
            if q2_new[i] < 0.0 {
                q2_new[i] = 0.0;
            }
        }
    }

    let rate: Vec<f64> = q2_new
        .iter()
        .zip(q2)
        .map(|(n, o)| (n - o) / dt)
        .collect();
    let increment = dt * sys.dissipation.eval(q2, &rate)?;

    let mut x = q1_new;
    x.extend(q2_new);
    let mut y = p1_new;
    y.extend(p2_new);
    if !all_finite(&x) || !all_finite(&y) || !increment.is_finite() {
        return Err(Error::NumericalBlowup { step: 0, time: t });
    }
    Ok(SplitStep {
        state: PhasePoint { x, y },
        dissipation_increment: increment,
    })
}

/// Iterate [`step_split`] on a uniform grid from `t0` to `t1`, shortening the
/// final step to land exactly on `t1`, and fill the energy ledger at every
/// step.
pub fn run<E: SplitEnergy, K: KineticEnergy>(
    sys: &SplitSystem<E, K>,
    z0: &PhasePoint,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory> {
    if t1 <= t0 {
        return Err(Error::DomainError("run requires t1 > t0".into()));
    }
    if dt <= 0.0 {
        return Err(Error::DomainError("run requires dt > 0".into()));
    }
    if z0.dim() != sys.dim() {
        return Err(Error::InvalidDimension {
            context: "initial state",
            expected: sys.dim(),
            got: z0.dim(),
        });
    }
    let span = t1 - t0;
    let n_full = (span / dt).floor() as usize;
    let remainder = span - n_full as f64 * dt;
    let mut steps: Vec<f64> = vec![dt; n_full];
    if remainder > 1e-12 * dt {
        steps.push(remainder);
    } else if n_full == 0 {
        steps.push(span);
    }

    let h = sys.hamiltonian();
    let h0 = h.value(t0, z0);
    let mut times = vec![t0];
    let mut states = vec![z0.clone()];
    let mut increments = vec![0.0];
    let mut ledger = vec![EnergyLedger {
        hamiltonian: h0,
        external_power_integral: 0.0,
        dissipated: 0.0,
        residual: 0.0,
    }];

    let mut t = t0;
    let mut power = 0.0;
    let mut dissipated = 0.0;
    for (k, step_dt) in steps.iter().enumerate() {
        let current = states.last().expect("nonempty");
        power += step_dt * h.partial_t(t, current);
        let step = step_split(sys, t, current, *step_dt).map_err(|e| match e {
            Error::NumericalBlowup { .. } => Error::NumericalBlowup { step: k, time: t },
            other => other,
        })?;
        // Non-dissipative block exactness: the discrete q1 rate equals
        // D_p K(p1+) by construction.
        debug_assert!({
            let (q1_old, ..) = sys.split(current);
            let (q1_new, _, p1_new, _) = sys.split(&step.state);
            let v = sys.kinetic.grad(p1_new);
            q1_old
                .iter()
                .zip(q1_new)
                .zip(&v)
                .all(|((qo, qn), vi)| ((qn - qo) / step_dt - vi).abs() <= 1e-9 * (1.0 + vi.abs()))
        });
        t += step_dt;
        dissipated += step.dissipation_increment;
        let ham = h.value(t, &step.state);
        times.push(t);
        states.push(step.state);
        increments.push(step.dissipation_increment);
        ledger.push(EnergyLedger {
            hamiltonian: ham,
            external_power_integral: power,
            dissipated,
            residual: ham + dissipated - h0 - power,
        });
    }
    Ok(Trajectory {
        times,
        states,
        dissipation_increments: increments,
        ledger,
    })
}

/// Cumulative dissipation functional `eta(t) = int omega(zdot, X_H) dtau`
/// along a trajectory: trapezoidal in time, rates by forward differences
/// (last one repeated).
pub fn accumulate_eta<E: SplitEnergy, K: KineticEnergy>(
    sys: &SplitSystem<E, K>,
    traj: &Trajectory,
) -> Result<Vec<f64>> {
    let h = sys.hamiltonian();
    let n = traj.times.len();
    let mut rates: Vec<PhasePoint> = Vec::with_capacity(n);
    for k in 0..n.saturating_sub(1) {
        let dt = traj.times[k + 1] - traj.times[k];
        let x = traj.states[k + 1]
            .x
            .iter()
            .zip(&traj.states[k].x)
            .map(|(b, a)| (b - a) / dt)
            .collect();
        let y = traj.states[k + 1]
            .y
            .iter()
            .zip(&traj.states[k].y)
            .map(|(b, a)| (b - a) / dt)
            .collect();
        rates.push(PhasePoint { x, y });
    }
    if let Some(last) = rates.last().cloned() {
        rates.push(last);
    } else {
        rates.push(PhasePoint::zeros(sys.dim()));
    }
    let mut integrand = Vec::with_capacity(n);
    for k in 0..n {
        let xh = symplectic_gradient(&h, traj.times[k], &traj.states[k])?;
        integrand.push(omega(&rates[k], &xh)?);
    }
    let mut eta = vec![0.0; n];
    for k in 1..n {
        let dt = traj.times[k] - traj.times[k - 1];
        eta[k] = eta[k - 1] + 0.5 * dt * (integrand[k - 1] + integrand[k]);
    }
    Ok(eta)
}

/// Per-step energy-balance residuals
/// `H(0) + sum dt dH/dt - H(t_k) - Diss_k`, recomputed from the states.
pub fn energy_residuals<E: SplitEnergy, K: KineticEnergy>(
    sys: &SplitSystem<E, K>,
    traj: &Trajectory,
) -> Vec<f64> {
    let h = sys.hamiltonian();
    let h0 = h.value(traj.times[0], &traj.states[0]);
    let mut power = 0.0;
    let mut diss = 0.0;
    let mut out = Vec::with_capacity(traj.times.len());
    out.push(0.0);
    for k in 1..traj.times.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        power += dt * h.partial_t(traj.times[k - 1], &traj.states[k - 1]);
        diss += traj.dissipation_increments[k];
        let ham = h.value(traj.times[k], &traj.states[k]);
        out.push(h0 + power - ham - diss);
    }
    out
}

/// Maximum absolute energy-balance residual over a run.
pub fn energy_audit<E: SplitEnergy, K: KineticEnergy>(
    sys: &SplitSystem<E, K>,
    traj: &Trajectory,
) -> f64 {
    energy_residuals(sys, traj)
        .iter()
        .fold(0.0, |m, r| m.max(r.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coulomb::{self, CoulombOscillator};
    use crate::vecmath::norm_inf;
    use approx::assert_relative_eq;

    /// E(t, q1, q2) = 1/2 k1 |q1|^2 + 1/2 k2 |q2|^2, optionally time-ramped.
    struct SeparableEnergy {
        k1: f64,
        k2: f64,
    }

    impl SplitEnergy for SeparableEnergy {
        fn value(&self, _t: f64, q1: &[f64], q2: &[f64]) -> f64 {
            0.5 * self.k1 * q1.iter().map(|q| q * q).sum::<f64>()
                + 0.5 * self.k2 * q2.iter().map(|q| q * q).sum::<f64>()
        }
        fn grad_q1(&self, _t: f64, q1: &[f64], _q2: &[f64]) -> Vec<f64> {
            q1.iter().map(|q| self.k1 * q).collect()
        }
        fn grad_q2(&self, _t: f64, _q1: &[f64], q2: &[f64]) -> Vec<f64> {
            q2.iter().map(|q| self.k2 * q).collect()
        }
    }

    fn oscillator_in_q1() -> SplitSystem<SeparableEnergy, QuadraticKinetic> {
        SplitSystem::new(
            SeparableEnergy { k1: 1.0, k2: 1.0 },
            QuadraticKinetic { mass: vec![1.0] },
            1,
            vec![1.0],
            DissipationSpec::zero(),
        )
        .unwrap()
    }

    #[test]
    fn zero_dissipation_step_is_symplectic_euler() {
        // Oscillator placed in the dissipative block with rho = 0.
        let sys = SplitSystem::new(
            SeparableEnergy { k1: 1.0, k2: 1.0 },
            QuadraticKinetic { mass: vec![] },
            0,
            vec![1.0],
            DissipationSpec::zero(),
        )
        .unwrap();
        let dt = 0.01;
        let z = PhasePoint::new(vec![0.7], vec![-0.4]).unwrap();
        let step = step_split(&sys, 0.0, &z, dt).unwrap();
        let p_expect = -0.4 - dt * 0.7;
        let q_expect = 0.7 + dt * p_expect;
        assert_relative_eq!(step.state.y[0], p_expect, epsilon = 1e-15);
        assert_relative_eq!(step.state.x[0], q_expect, epsilon = 1e-15);
        assert_eq!(step.dissipation_increment, 0.0);

        // Same update when the oscillator sits in the non-dissipative block.
        let sys = oscillator_in_q1();
        let z = PhasePoint::new(vec![0.7, 0.0], vec![-0.4, 0.0]).unwrap();
        let step = step_split(&sys, 0.0, &z, dt).unwrap();
        assert_relative_eq!(step.state.y[0], p_expect, epsilon = 1e-15);
        assert_relative_eq!(step.state.x[0], q_expect, epsilon = 1e-15);
    }

    #[test]
    fn zero_dissipation_energy_oscillates_without_drift() {
        let sys = oscillator_in_q1();
        let z0 = PhasePoint::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let dt = 1e-3;
        let traj = run(&sys, &z0, 0.0, 10.0, dt).unwrap();
        assert_eq!(traj.times.len(), 10_001);
        let h = sys.hamiltonian();
        let h0 = h.value(0.0, &z0);
        let max_dev = traj
            .ledger
            .iter()
            .fold(0.0_f64, |m, l| m.max((l.hamiltonian - h0).abs()));
        assert!(max_dev <= 5.0 * dt * h0, "drift {max_dev}");
        // eta stays O(dt) for the exact flow relation.
        let eta = accumulate_eta(&sys, &traj).unwrap();
        assert!(eta.iter().all(|e| e.abs() <= 10.0 * dt));
    }

    #[test]
    fn coulomb_stick_state_unchanged() {
        let osc = CoulombOscillator::new(1.0, 1.0, 0.3).unwrap();
        let sys = coulomb::split_system(&osc).unwrap();
        for q in [0.29, -0.3, 0.1, 0.0] {
            let z = PhasePoint::new(vec![q], vec![0.0]).unwrap();
            let step = step_split(&sys, 0.0, &z, 1e-2).unwrap();
            assert_eq!(step.state.x[0], q);
            assert_eq!(step.state.y[0], 0.0);
            assert_eq!(step.dissipation_increment, 0.0);
        }
    }

    #[test]
    fn coulomb_slip_matches_shrinkage_prox() {
        let mu = 0.3;
        let osc = CoulombOscillator::new(1.0, 1.0, mu).unwrap();
        let sys = coulomb::split_system(&osc).unwrap();
        let (q, v) = (0.9, -0.5);
        let dt = 1e-2;
        let z = PhasePoint::new(vec![q], vec![v]).unwrap();
        let step = step_split(&sys, 0.0, &z, dt).unwrap();
        let expected = crate::dissipation::shrink(v - dt * q, dt * mu);
        assert_relative_eq!(step.state.y[0], expected, epsilon = 1e-15);
    }

    #[test]
    fn coulomb_run_tracks_reference_solution() {
        let osc = CoulombOscillator::new(1.0, 1.0, 0.1).unwrap();
        let sys = coulomb::split_system(&osc).unwrap();
        let z0 = PhasePoint::new(vec![1.0], vec![0.0]).unwrap();
        let dt = 1e-3;
        let t_end = 6.0 * std::f64::consts::PI;
        let traj = run(&sys, &z0, 0.0, t_end, dt).unwrap();
        let reference = coulomb::ReferenceSolution::new(&osc, 1.0);

        let mut worst = 0.0_f64;
        for (t, z) in traj.times.iter().zip(&traj.states) {
            worst = worst.max((z.x[0] - reference.position(*t)).abs());
        }
        assert!(worst <= 20.0 * dt, "max deviation {worst}");

        // Terminal stick near the reference arrest point.
        let q_final = traj.states.last().unwrap().x[0];
        assert!(q_final.abs() <= 0.1 + 1e-2, "terminal q {q_final}");
        let p_final = traj.states.last().unwrap().y[0];
        assert_eq!(p_final, 0.0);
    }

    #[test]
    fn coulomb_eta_dominates_dissipation_increments() {
        let osc = CoulombOscillator::new(1.0, 1.0, 0.1).unwrap();
        let sys = coulomb::split_system(&osc).unwrap();
        let z0 = PhasePoint::new(vec![1.0], vec![0.0]).unwrap();
        let dt = 1e-3;
        let traj = run(&sys, &z0, 0.0, 10.0, dt).unwrap();
        let eta = accumulate_eta(&sys, &traj).unwrap();
        let sup: f64 = traj
            .states
            .iter()
            .map(|z| norm_inf(&z.x).max(norm_inf(&z.y)))
            .fold(0.0, f64::max);
        let tol = 10.0 * dt * (1.0 + sup);
        let mut cumulative = 0.0;
        for k in 0..traj.times.len() {
            cumulative += traj.dissipation_increments[k];
            assert!(
                eta[k] >= cumulative - tol,
                "step {k}: eta {} < increments {}",
                eta[k],
                cumulative
            );
        }
    }

    #[test]
    fn energy_audit_static_critical_point_is_exact() {
        let sys = oscillator_in_q1();
        let z0 = PhasePoint::zeros(2);
        let traj = run(&sys, &z0, 0.0, 1.0, 1e-2).unwrap();
        assert_eq!(energy_audit(&sys, &traj), 0.0);
    }

    #[test]
    fn energy_audit_first_order_in_dt() {
        let sys = oscillator_in_q1();
        let z0 = PhasePoint::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let mut residuals = Vec::new();
        let mut dt = 4e-3;
        for _ in 0..3 {
            let traj = run(&sys, &z0, 0.0, 5.0, dt).unwrap();
            residuals.push(energy_audit(&sys, &traj));
            dt *= 0.5;
        }
        for pair in residuals.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!(
                (1.7..=2.3).contains(&ratio),
                "halving ratio {ratio} out of range: {residuals:?}"
            );
        }
    }

    #[test]
    fn damage_block_stays_monotone_and_bounded() {
        // Stored energy pulling q2 upward through the one-sided dissipation:
        // E = 1/2 k (q2 - 2)^2 so the driving force exceeds beta initially.
        struct Pull;
        impl SplitEnergy for Pull {
            fn value(&self, _t: f64, _q1: &[f64], q2: &[f64]) -> f64 {
                0.5 * (q2[0] - 2.0).powi(2)
            }
            fn grad_q1(&self, _t: f64, _q1: &[f64], _q2: &[f64]) -> Vec<f64> {
                vec![]
            }
            fn grad_q2(&self, _t: f64, _q1: &[f64], q2: &[f64]) -> Vec<f64> {
                vec![q2[0] - 2.0]
            }
        }
        let sys = SplitSystem::new(
            Pull,
            QuadraticKinetic { mass: vec![] },
            0,
            vec![1.0],
            DissipationSpec::damage(0.1, vec![1.0]).unwrap(),
        )
        .unwrap();
        let z0 = PhasePoint::new(vec![0.0], vec![0.0]).unwrap();
        let traj = run(&sys, &z0, 0.0, 20.0, 1e-2).unwrap();
        let mut prev = 0.0;
        for (z, inc) in traj.states.iter().zip(&traj.dissipation_increments) {
            let d = z.x[0];
            assert!((0.0..=1.0).contains(&d));
            assert!(d >= prev - 1e-15);
            assert!(*inc >= 0.0);
            prev = d;
        }
        // The pull is strong enough to saturate; momentum is zeroed there.
        let last = traj.states.last().unwrap();
        assert_eq!(last.x[0], 1.0);
        assert_eq!(last.y[0], 0.0);
    }
}
