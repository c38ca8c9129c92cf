//! Bundled invariant suite behind `dhamsim selftest`.
//!
//! Each check reduces to a scalar deviation compared against a fixed
//! tolerance and renders one deterministic report line, so two runs with the
//! same seed produce bit-identical output. Setting the environment variable
//! `DHAMSIM_SELFTEST_PERTURB=<check name>` forces that check to fail, to
//! exercise the failure reporting path.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coulomb::{self, CoulombOscillator};
use crate::damage1d::{
    self, homogeneous_damage, BodyForce, DamageScenario, DamageState, EndProgram, Grid1D,
    LoadingProgram, MaterialParams, PhiTag,
};
use crate::dissipation::DissipationSpec;
use crate::integrators;
use crate::symplectic::{
    omega, poisson_bracket, validate_gradients, Block, Coordinate, PhasePoint, Quadratic, TOL_FD,
};
use crate::vecmath::norm_inf;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone)]
pub struct SelftestEntry {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SelftestReport {
    pub seed: u64,
    pub entries: Vec<SelftestEntry>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn render(&self) -> String {
        let mut out = format!("dhamsim selftest (seed {})\n", self.seed);
        for e in &self.entries {
            let tag = if e.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag} {:<32} {}\n", e.name, e.detail));
        }
        let passed = self.entries.iter().filter(|e| e.passed).count();
        out.push_str(&format!("{passed}/{} checks passed\n", self.entries.len()));
        out
    }
}

struct Suite {
    entries: Vec<SelftestEntry>,
    perturb: Option<String>,
}

impl Suite {
    fn check(&mut self, name: &'static str, deviation: f64, tol: f64) {
        let injected = self.perturb.as_deref() == Some(name);
        let tol = if injected { -1.0 } else { tol };
        let passed = deviation <= tol;
        let detail = if injected {
            format!("deviation {deviation:.3e} (injected tolerance perturbation)")
        } else {
            format!("deviation {deviation:.3e} (tol {tol:.1e})")
        };
        self.entries.push(SelftestEntry {
            name,
            passed,
            detail,
        });
    }
}

fn random_point(n: usize, rng: &mut ChaCha8Rng) -> PhasePoint {
    PhasePoint::new(
        (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
        (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
    )
    .expect("finite")
}

fn grid_search_prox(spec: &DissipationSpec, component: usize, w: f64, tau: f64) -> f64 {
    let radius = 2.0 * (w.abs() + tau + 1.0);
    let lower_cap = match spec {
        DissipationSpec::DamageDissipation { .. } => 0.0,
        _ => f64::NEG_INFINITY,
    };
    let (mut lo, mut hi) = (lower_cap.max(w - radius), w + radius);
    let rho = |v: f64| -> f64 {
        match spec {
            DissipationSpec::Zero => 0.0,
            DissipationSpec::Rayleigh { weights } => 0.5 * weights[component] * v * v,
            DissipationSpec::WeightedNorm { beta } => beta[component] * v.abs(),
            DissipationSpec::DamageDissipation { beta, cell_weights } => {
                beta * cell_weights[component] * v
            }
        }
    };
    let mut best = lo;
    for _ in 0..6 {
        let mut best_val = f64::INFINITY;
        for i in 0..=200 {
            let v = lo + (hi - lo) * (i as f64) / 200.0;
            let val = 0.5 * (v - w) * (v - w) + tau * rho(v);
            if val < best_val {
                best_val = val;
                best = v;
            }
        }
        let step = (hi - lo) / 200.0;
        lo = (best - 2.0 * step).max(lower_cap);
        hi = best + 2.0 * step;
    }
    best
}

fn catalog() -> Vec<DissipationSpec> {
    vec![
        DissipationSpec::zero(),
        DissipationSpec::rayleigh(vec![0.7, 2.0, 1.3]).expect("positive"),
        DissipationSpec::weighted_norm(vec![1.0, 0.4, 2.5]).expect("positive"),
        DissipationSpec::damage(1.5, vec![0.5, 1.0, 0.25]).expect("positive"),
    ]
}

/// Run the invariant suite with the given RNG seed.
pub fn selftest(seed: u64) -> SelftestReport {
    let mut suite = Suite {
        entries: Vec::new(),
        perturb: std::env::var("DHAMSIM_SELFTEST_PERTURB").ok(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Symplectic identities.
    let mut worst_omega = 0.0_f64;
    let mut worst_anti = 0.0_f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let z1 = random_point(n, &mut rng);
        let z2 = random_point(n, &mut rng);
        let w12 = omega(&z1, &z2).expect("dims");
        let w21 = omega(&z2, &z1).expect("dims");
        worst_anti = worst_anti.max((w12 + w21).abs());
        let nz = z1.norm();
        worst_omega = worst_omega.max(omega(&z1, &z1).expect("dims").abs() / (nz * nz).max(1e-30));
    }
    suite.check("omega_antisymmetry", worst_omega.max(worst_anti), 1e-10);

    let n = 6;
    let z = random_point(n, &mut rng);
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let f = Coordinate {
                block: Block::X,
                index: i,
                dim: n,
            };
            let g = Coordinate {
                block: Block::Y,
                index: j,
                dim: n,
            };
            let expected = if i == j { 1.0 } else { 0.0 };
            let b = poisson_bracket(&f, &g, 0.0, &z).expect("dims");
            worst = worst.max((b - expected).abs());
        }
    }
    suite.check("canonical_relations", worst, 1e-10);

    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let f = Quadratic::random(n, &mut rng);
        let g = Quadratic::random(n, &mut rng);
        let z = random_point(n, &mut rng);
        let fg = poisson_bracket(&f, &g, 0.0, &z).expect("dims");
        let gf = poisson_bracket(&g, &f, 0.0, &z).expect("dims");
        worst = worst.max((fg + gf).abs() / fg.abs().max(1.0));
    }
    suite.check("bracket_antisymmetry", worst, 1e-10);

    let mut worst = 0.0_f64;
    for _ in 0..30 {
        let n = rng.random_range(1..=6);
        let f = Quadratic::random(n, &mut rng);
        let z = random_point(n, &mut rng);
        worst = worst.max(validate_gradients(&f, 0.0, &z, 1.0).expect("finite"));
    }
    suite.check("gradient_fd_consistency", worst, TOL_FD);

    // Prox properties.
    let mut worst_grid = 0.0_f64;
    let mut worst_fixed = 0.0_f64;
    let mut worst_expansion = 0.0_f64;
    for spec in catalog() {
        for _ in 0..100 {
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let tau = rng.random_range(0.01..2.0);
            let v = spec.prox(&w, tau).expect("prox");
            for i in 0..3 {
                worst_grid = worst_grid.max((v[i] - grid_search_prox(&spec, i, w[i], tau)).abs());
            }
            let xi: Vec<f64> = w.iter().zip(&v).map(|(wi, vi)| (wi - vi) / tau).collect();
            worst_fixed = worst_fixed.max(spec.subdiff_distance(&v, &xi).expect("domain"));

            let b: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let pb = spec.prox(&b, tau).expect("prox");
            let num: f64 = v
                .iter()
                .zip(&pb)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            let den: f64 = w
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            worst_expansion = worst_expansion.max(num - den);
        }
    }
    suite.check("prox_grid_search", worst_grid, 1e-6);
    suite.check("prox_fixed_point", worst_fixed, 1e-10);
    suite.check("prox_nonexpansive", worst_expansion, 1e-12);

    // Coulomb oracle.
    let osc = CoulombOscillator::new(1.0, 1.0, 0.1).expect("positive");
    let sys = coulomb::split_system(&osc).expect("system");
    let dt = 1e-4;
    let traj = integrators::run(
        &sys,
        &coulomb::release_from_rest(1.0),
        0.0,
        6.0 * std::f64::consts::PI,
        dt,
    )
    .expect("run");
    let q: Vec<f64> = traj.states.iter().map(|z| z.x[0]).collect();
    let v: Vec<f64> = traj.states.iter().map(|z| z.y[0] / osc.mass).collect();
    let extrema = coulomb::trajectory_extrema(&traj.times, &q, &v);
    let amplitudes: Vec<f64> = extrema.iter().map(|(_, q)| q.abs()).collect();
    let target = osc.amplitude_decrement_per_period();
    let mut worst = f64::INFINITY;
    let mut worst_rel = 0.0_f64;
    for k in 0..amplitudes.len().saturating_sub(2) {
        let dec = amplitudes[k] - amplitudes[k + 2];
        worst = worst.min(dec);
        worst_rel = worst_rel.max((dec - target).abs() / target);
    }
    suite.check("coulomb_amplitude_decrement", worst_rel, 0.02);
    let q_final = q.last().copied().unwrap_or(0.0).abs();
    suite.check(
        "coulomb_terminal_stick",
        (q_final - osc.stick_band()).max(0.0),
        1e-3,
    );

    let eta = integrators::accumulate_eta(&sys, &traj).expect("eta");
    let sup: f64 = traj
        .states
        .iter()
        .map(|z| norm_inf(&z.x).max(norm_inf(&z.y)))
        .fold(0.0, f64::max);
    let tol = 10.0 * dt * (1.0 + sup);
    let mut cumulative = 0.0;
    let mut worst = 0.0_f64;
    for k in 0..traj.times.len() {
        cumulative += traj.dissipation_increments[k];
        worst = worst.max(cumulative - eta[k]);
    }
    suite.check("coulomb_eta_lower_bound", worst, tol);

    // Energy-balance order on the Coulomb scenario.
    let mut residuals = Vec::new();
    let mut dt = 1e-3;
    for _ in 0..3 {
        let traj = integrators::run(
            &sys,
            &coulomb::release_from_rest(1.0),
            0.0,
            2.0 * std::f64::consts::PI,
            dt,
        )
        .expect("run");
        residuals.push(integrators::energy_audit(&sys, &traj));
        dt *= 0.5;
    }
    let mut worst = 0.0_f64;
    for pair in residuals.windows(2) {
        let ratio = pair[0] / pair[1];
        worst = worst.max((ratio - 2.0).abs());
    }
    suite.check("energy_balance_order", worst, 0.4);

    // Damage invariants on a short dynamic run.
    let grid = Grid1D::new(41, 1.0).expect("grid");
    let params = MaterialParams::new(1.0, 0.5, 0.4, 0.05, 1.0).expect("params");
    let scenario = DamageScenario {
        grid,
        params,
        phi: PhiTag::Quadratic,
        loading: LoadingProgram {
            end_displacement: EndProgram::Ramp {
                amplitude: 0.8,
                rate: 0.2,
            },
            body_force: BodyForce::Zero,
        },
        t_end: 4.0,
        dt: None,
        cfl_factor: 0.5,
        snapshot_every: 50,
    };
    let run = damage1d::run_dynamic(&scenario).expect("run");
    let mut worst = 0.0_f64;
    let mut prev: Option<DamageState> = None;
    for snap in &run.snapshots {
        for (i, d) in snap.state.d.iter().enumerate() {
            worst = worst.max((-d).max(d - 1.0).max(-snap.state.y[i]));
            if let Some(p) = &prev {
                worst = worst.max(p.d[i] - d);
            }
        }
        prev = Some(snap.state.clone());
    }
    assert!(run.final_state.d.iter().any(|d| *d > 0.0));
    suite.check("damage_invariants", worst, 0.0);

    // Exact staggered balance for frozen damage.
    let scenario = DamageScenario {
        grid,
        params: MaterialParams::new(1.0, 0.5, 0.4, 1.0, 1.0).expect("params"),
        phi: PhiTag::Quadratic,
        loading: LoadingProgram {
            end_displacement: EndProgram::Sine {
                amplitude: 0.02,
                rate: 2.3,
            },
            body_force: BodyForce::Zero,
        },
        t_end: 4.0,
        dt: None,
        cfl_factor: 0.5,
        snapshot_every: 100,
    };
    let run = damage1d::run_dynamic(&scenario).expect("run");
    let scale = run
        .ledger
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.internal_energy().abs()))
        .max(1e-30);
    let worst = run
        .ledger
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.residual.abs()))
        / scale;
    suite.check("elastodynamics_energy_balance", worst, 1e-8);

    // Quasistatic homogeneous closed form.
    let scenario = DamageScenario {
        grid,
        params,
        phi: PhiTag::Quadratic,
        loading: LoadingProgram {
            end_displacement: EndProgram::Ramp {
                amplitude: 2.0,
                rate: 1.0,
            },
            body_force: BodyForce::Zero,
        },
        t_end: 1.0,
        dt: Some(0.1),
        cfl_factor: 0.5,
        snapshot_every: 1,
    };
    let run = damage1d::run_quasistatic_at(&scenario).expect("run");
    let mut worst = 0.0_f64;
    for (t, d) in run.trajectory.times.iter().zip(&run.trajectory.states) {
        let eps = scenario.loading.end_displacement.value(*t) / scenario.grid.length();
        let expected = homogeneous_damage(&params, eps);
        for v in d {
            worst = worst.max((v - expected).abs());
        }
    }
    suite.check("quasistatic_closed_form", worst, 1e-4);

    SelftestReport {
        seed,
        entries: suite.entries,
    }
}
