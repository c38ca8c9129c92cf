// scratch: probe the stability surrogate on the homogeneous quasistatic oracle
fn main() {
    use dhamsim::damage1d::*;
    use dhamsim::quasistatic::{check_stability, EnergeticProblem};
    let grid = Grid1D::new(100, 1.0).unwrap();
    let params = MaterialParams::new(1.0, 0.5, 0.4, 0.2, 1.0).unwrap();
    let loading = LoadingProgram {
        end_displacement: EndProgram::Ramp { amplitude: 2.0, rate: 1.0 },
        body_force: BodyForce::Zero,
    };
    let scenario = DamageScenario {
        grid, params, phi: PhiTag::Quadratic, loading,
        t_end: 1.0, dt: Some(0.05), cfl_factor: 0.5, snapshot_every: 1,
    };
    let run = run_quasistatic_at(&scenario).unwrap();
    let energy = CondensedAtEnergy { grid: &grid, params: &params, phi: PhiTag::Quadratic, loading: &loading };
    let metric = damage_metric(&grid, &params);
    let prob = EnergeticProblem { energy, metric };
    let mut worst_overall = f64::NEG_INFINITY;
    let mut worst_d_err = 0.0_f64;
    for (t, d) in run.trajectory.times.iter().zip(&run.trajectory.states) {
        let eps = scenario.loading.end_displacement.value(*t) / grid.length();
        let expected = homogeneous_damage(&params, eps);
        for v in d { worst_d_err = worst_d_err.max((v - expected).abs()); }
        let competitors = standard_competitors(d);
        let v = check_stability(&prob, d, *t, &competitors).unwrap();
        worst_overall = worst_overall.max(v);
    }
    println!("worst closed-form error: {worst_d_err:.3e}");
    println!("worst stability violation: {worst_overall:.3e}");
}
