//! Rate-independent (energetic) evolution machinery: incremental
//! minimization, the stability surrogate, and the energy-balance test, plus
//! the alternate-minimization inner solver for the 1D damage energy.

use crate::damage1d::{self, Grid1D, LoadingProgram, MaterialParams, PhiTag};
use crate::dissipation::{dissipation_distance, DissipationSpec};
use crate::error::{Error, Result};

/// Energy oracle `E(t, q)` for the quasistatic problem, with gradient,
/// explicit time derivative (the loading power), and a projector onto the
/// admissible set at time `t`.
pub trait QuasistaticEnergy {
    fn value(&self, t: f64, q: &[f64]) -> f64;
    fn grad(&self, t: f64, q: &[f64]) -> Vec<f64>;
    fn partial_t(&self, t: f64, q: &[f64]) -> f64;
    fn project_admissible(&self, _t: f64, q: &[f64]) -> Vec<f64> {
        q.to_vec()
    }
}

/// An energy paired with the dissipation metric that prices increments.
pub struct EnergeticProblem<E: QuasistaticEnergy> {
    pub energy: E,
    pub metric: DissipationSpec,
}

impl<E: QuasistaticEnergy> EnergeticProblem<E> {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        dissipation_distance(&self.metric, a, b)
    }
}

/// Configuration for [`incremental_step`].
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub max_outer: usize,
    /// Relative fixed-point move threshold for convergence.
    pub move_tol: f64,
    /// Initial proximal-gradient step.
    pub step0: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_outer: 2000,
            move_tol: 1e-12,
            step0: 1.0,
        }
    }
}

/// Result of one incremental minimization.
#[derive(Debug, Clone)]
pub struct IncrementalOutcome {
    pub state: Vec<f64>,
    /// Achieved value of `E(t_k, q) + D(q_prev, q)`.
    pub objective: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit; the best iterate is still
    /// returned.
    pub converged: bool,
}

/// Approximate `argmin_q E(t_k, q) + D(q_prev, q)` by monotone proximal
/// gradient with backtracking; the returned objective never exceeds the
/// objective at `q_prev`.
pub fn incremental_step<E: QuasistaticEnergy>(
    prob: &EnergeticProblem<E>,
    q_prev: &[f64],
    t_k: f64,
    cfg: &SolverConfig,
) -> Result<IncrementalOutcome> {
    let mut q = prob.energy.project_admissible(t_k, q_prev);
    let mut obj = prob.energy.value(t_k, &q) + prob.distance(q_prev, &q)?;
    if !obj.is_finite() {
        return Err(Error::DomainError(
            "objective not finite at the projected previous state".into(),
        ));
    }
    let mut step = cfg.step0;
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..cfg.max_outer {
        iterations = iter + 1;
        let grad = prob.energy.grad(t_k, &q);
        let mut improved = false;
        // Backtracking on the composite objective.
        for _ in 0..60 {
            let gradient_point: Vec<f64> =
                q.iter().zip(&grad).map(|(qi, g)| qi - step * g).collect();
            let trial = prob
                .metric
                .prox_distance(q_prev, &gradient_point, step)?;
            let trial = prob.energy.project_admissible(t_k, &trial);
            let trial_obj = prob.energy.value(t_k, &trial) + prob.distance(q_prev, &trial)?;
            if trial_obj <= obj {
                let move_norm = trial
                    .iter()
                    .zip(&q)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                let scale = q.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                q = trial;
                obj = trial_obj;
                improved = true;
                if move_norm <= cfg.move_tol * scale {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
            if step < 1e-16 {
                break;
            }
        }
        if !improved {
            converged = true;
            break;
        }
        if converged {
            break;
        }
        step *= 1.5;
    }
    Ok(IncrementalOutcome {
        state: q,
        objective: obj,
        iterations,
        converged,
    })
}

/// Max over competitors of the stability violation
/// `E(t, q) - E(t, q_hat) - D(q, q_hat)`; at most `tol` means stable against
/// the sampled set. Competitors at infinite distance impose no constraint.
pub fn check_stability<E: QuasistaticEnergy>(
    prob: &EnergeticProblem<E>,
    q: &[f64],
    t: f64,
    competitors: &[Vec<f64>],
) -> Result<f64> {
    let base = prob.energy.value(t, q);
    let mut worst = f64::NEG_INFINITY;
    for candidate in competitors {
        let d = prob.distance(q, candidate)?;
        if !d.is_finite() {
            continue;
        }
        let violation = base - prob.energy.value(t, candidate) - d;
        worst = worst.max(violation);
    }
    Ok(worst)
}

/// A time-discrete quasistatic trajectory.
#[derive(Debug, Clone)]
pub struct QuasistaticTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Achieved incremental objective per step.
    pub incremental_values: Vec<f64>,
    pub diss_cumulative: Vec<f64>,
}

/// Max absolute energy-balance residual
/// `E(t_k, q_k) + Diss_k - E(0, q_0) - sum dt dE/dt` along a trajectory, with
/// the loading power integrated by the left rectangle rule.
pub fn check_energy_balance<E: QuasistaticEnergy>(
    prob: &EnergeticProblem<E>,
    traj: &QuasistaticTrajectory,
) -> f64 {
    let e0 = prob.energy.value(traj.times[0], &traj.states[0]);
    let mut power = 0.0;
    let mut worst = 0.0_f64;
    for k in 1..traj.times.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        power += dt * prob.energy.partial_t(traj.times[k - 1], &traj.states[k - 1]);
        let residual = prob.energy.value(traj.times[k], &traj.states[k])
            + traj.diss_cumulative[k]
            - e0
            - power;
        worst = worst.max(residual.abs());
    }
    worst
}

/// Configuration for [`at_alternate_minimization`].
#[derive(Debug, Clone, Copy)]
pub struct AltMinConfig {
    /// Stop once an alternation decreases the objective by less than this.
    pub tol_objective: f64,
    pub max_outer: usize,
    /// Projected successive-over-relaxation sweeps per damage solve.
    pub max_sweeps: usize,
    /// Nodal-change threshold ending the sweeps.
    pub sweep_tol: f64,
    /// Over-relaxation factor in (0, 2); accelerates the smooth error modes
    /// of the box-constrained quadratic solve.
    pub relaxation: f64,
}

impl Default for AltMinConfig {
    fn default() -> Self {
        AltMinConfig {
            tol_objective: 1e-10,
            max_outer: 500,
            max_sweeps: 5000,
            sweep_tol: 1e-14,
            relaxation: 1.8,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AltMinReport {
    pub iterations: usize,
    pub converged: bool,
    /// Final incremental objective `Psi(u, d) + beta sum w (d - d_prev)`.
    pub objective: f64,
}

/// One incremental step of the damage bar by alternate minimization:
///
/// (i) a tridiagonal solve for the equilibrium displacement under the
/// current damage and the Dirichlet data at `t_k`; (ii) a box-constrained
/// convex quadratic solve for the damage (lower bound `d_prev`, upper bound
/// one) by projected Gauss-Seidel. Alternation stops when the objective
/// decrease falls below `tol_objective`.
#[allow(clippy::too_many_arguments)]
pub fn at_alternate_minimization(
    u: &mut Vec<f64>,
    d: &mut Vec<f64>,
    grid: &Grid1D,
    params: &MaterialParams,
    phi: PhiTag,
    t_k: f64,
    loading: &LoadingProgram,
    d_prev: &[f64],
    cfg: &AltMinConfig,
) -> AltMinReport {
    let u_end = loading.end_displacement.value(t_k);
    let n = grid.n_nodes();
    let h = grid.h();
    let k_grad = params.grad_coeff();
    let l_local = params.local_coeff();

    // Clamp the start above the irreversibility bound.
    for (di, dp) in d.iter_mut().zip(d_prev) {
        *di = di.clamp(dp.max(0.0), 1.0);
    }

    let objective = |u: &[f64], d: &[f64]| -> f64 {
        let diss: f64 = d
            .iter()
            .zip(d_prev)
            .enumerate()
            .map(|(i, (di, dp))| params.beta * grid.node_weight(i) * (di - dp))
            .sum();
        let potential: f64 = u
            .iter()
            .enumerate()
            .map(|(i, ui)| grid.node_weight(i) * loading.body_force.at(t_k, grid.node_x(i)) * ui)
            .sum();
        damage1d::free_energy(u, d, grid, params, phi).total() - potential + diss
    };

    *u = damage1d::u_solve(d, grid, params, phi, u_end, &loading.body_force, t_k);
    let mut obj = objective(u, d);
    let mut converged = false;
    let mut iterations = 0;

    for outer in 0..cfg.max_outer {
        iterations = outer + 1;

        // Damage solve: projected SOR on the convex quadratic.
        let w_hat = damage1d::nodal_strain_energy(u, grid, params);
        for _ in 0..cfg.max_sweeps {
            let mut max_change = 0.0_f64;
            for i in 0..n {
                let weight = grid.node_weight(i);
                let a_i = weight * w_hat[i];
                // Objective restricted to d_i: 1/2 Q d^2 + B d + const.
                let mut quad = weight * l_local;
                let mut lin = params.beta * weight;
                if i > 0 {
                    quad += k_grad / h;
                    lin -= (k_grad / h) * d[i - 1];
                }
                if i < n - 1 {
                    quad += k_grad / h;
                    lin -= (k_grad / h) * d[i + 1];
                }
                match phi {
                    PhiTag::Quadratic => {
                        quad += 2.0 * a_i;
                        lin -= 2.0 * a_i;
                    }
                    PhiTag::Linear => {
                        lin -= a_i;
                    }
                }
                let lo = d_prev[i].max(0.0);
                let target = -lin / quad;
                let candidate = (d[i] + cfg.relaxation * (target - d[i])).clamp(lo, 1.0);
                max_change = max_change.max((candidate - d[i]).abs());
                d[i] = candidate;
            }
            if max_change < cfg.sweep_tol {
                break;
            }
        }

        // Displacement solve for the updated damage.
        *u = damage1d::u_solve(d, grid, params, phi, u_end, &loading.body_force, t_k);

        let new_obj = objective(u, d);
        let decrease = obj - new_obj;
        obj = new_obj;
        if decrease.abs() < cfg.tol_objective {
            converged = true;
            break;
        }
    }

    AltMinReport {
        iterations,
        converged,
        objective: obj,
    }
}
