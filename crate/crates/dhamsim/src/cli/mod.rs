//! Batch interface: scenario configuration, dispatch, and serialization.
//!
//! All experiments run through [`run_scenario`] / [`run_sweep`], which write
//! a ledger CSV, snapshot CSVs, and a `summary.json` into the output
//! directory. Output location precedence: explicit override, config
//! `output.dir`, the `DHAMSIM_OUT` environment variable, then `./out`.

pub mod config;
pub mod output;
pub mod selftest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{parse_config, serialize_config, Kind, ScenarioConfig};
pub use selftest::{selftest, SelftestReport, DEFAULT_SEED};

use crate::coulomb::{self, CoulombOscillator};
use crate::damage1d::{self, DamageScenario, DamageState, Snapshot};
use crate::error::{Error, Result};
use crate::integrators;

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub dt_override: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupInfo {
    pub step: usize,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub index: usize,
    pub time: f64,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub kind: String,
    pub final_energies: BTreeMap<String, f64>,
    pub max_residual: f64,
    pub total_dissipated: f64,
    pub front_speed: Option<f64>,
    pub speed_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub front_speed_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub localization_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub snapshots: Option<Vec<SnapshotMeta>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub amplitude_extrema: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub amplitude_decrements_per_period: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub convergence_warnings: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub blowup: Option<BlowupInfo>,
}

impl Summary {
    fn base(kind: Kind) -> Self {
        Summary {
            kind: kind.as_str().to_string(),
            final_energies: BTreeMap::new(),
            max_residual: 0.0,
            total_dissipated: 0.0,
            front_speed: None,
            speed_estimate: None,
            front_speed_ratio: None,
            localization_width: None,
            dt: None,
            snapshots: None,
            amplitude_extrema: None,
            amplitude_decrements_per_period: None,
            convergence_warnings: None,
            blowup: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub out_dir: PathBuf,
    pub summary: Summary,
}

/// One sweep entry in `sweep.csv` / the sweep `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub localization_width: f64,
    pub front_speed: Option<f64>,
    pub dir: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub kind: String,
    pub param: String,
    pub rows: Vec<SweepRow>,
    /// Reported trend, not an assertion: localization width does not
    /// increase along the listed values.
    pub width_nonincreasing: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub out_dir: PathBuf,
    pub summary: SweepSummary,
}

pub fn resolve_out_dir(cfg: &ScenarioConfig, opts: &RunOptions) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os("DHAMSIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write_summary(dir: &Path, summary: &Summary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).expect("summary serialization");
    text.push('\n');
    output::write_text(&dir.join("summary.json"), &text)
}

/// Run a non-sweep scenario and write `ledger.csv`, `snap_<i>.csv`, and
/// `summary.json` into the output directory. A numerical blowup still
/// returns an error, but partial outputs are written first.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<ScenarioOutcome> {
    let out_dir = resolve_out_dir(cfg, opts);
    output::create_dir_all(&out_dir)?;
    match cfg.kind {
        Kind::Oscillator => run_oscillator(cfg, opts, &out_dir),
        Kind::DamageDynamic => run_damage_dynamic(cfg, opts, &out_dir),
        Kind::DamageQuasistatic => run_damage_quasistatic(cfg, opts, &out_dir),
        Kind::Sweep => Err(Error::SchemaError(
            "kind \"sweep\" runs through the sweep subcommand".into(),
        )),
    }
}

fn run_oscillator(cfg: &ScenarioConfig, opts: &RunOptions, out_dir: &Path) -> Result<ScenarioOutcome> {
    let m = cfg.params["m"];
    let k = cfg.params["k"];
    let mu = cfg.params["mu"];
    let q0 = cfg.params.get("q0").copied().unwrap_or(1.0);
    let osc = CoulombOscillator::new(m, k, mu)?;
    let dt = opts
        .dt_override
        .or_else(|| cfg.time.dt.resolve())
        .unwrap_or(osc.period() / 10_000.0);
    let sys = coulomb::split_system(&osc)?;
    let traj = integrators::run(&sys, &coulomb::release_from_rest(q0), 0.0, cfg.time.t_end, dt)?;

    output::write_text(
        &out_dir.join("ledger.csv"),
        &output::integrator_ledger_csv(&traj),
    )?;

    let q: Vec<f64> = traj.states.iter().map(|z| z.x[0]).collect();
    let v: Vec<f64> = traj.states.iter().map(|z| z.y[0] / m).collect();
    let extrema = coulomb::trajectory_extrema(&traj.times, &q, &v);
    let decrements: Vec<f64> = (0..extrema.len().saturating_sub(2))
        .map(|i| extrema[i].1.abs() - extrema[i + 2].1.abs())
        .collect();

    let last = traj.ledger.last().expect("nonempty run");
    let mut summary = Summary::base(Kind::Oscillator);
    summary
        .final_energies
        .insert("hamiltonian".into(), last.hamiltonian);
    summary.max_residual = traj
        .ledger
        .iter()
        .fold(0.0_f64, |mx, l| mx.max(l.residual.abs()));
    summary.total_dissipated = last.dissipated;
    summary.dt = Some(dt);
    summary.amplitude_extrema = Some(extrema);
    summary.amplitude_decrements_per_period = Some(decrements);
    write_summary(out_dir, &summary)?;
    Ok(ScenarioOutcome {
        out_dir: out_dir.to_path_buf(),
        summary,
    })
}

fn damage_summary_common(
    summary: &mut Summary,
    scenario: &DamageScenario,
    ledger: &[damage1d::DamageLedgerRow],
    snapshots: &[Snapshot],
    final_state: &DamageState,
    dissipated: f64,
) {
    let last = ledger.last().expect("nonempty ledger");
    for (name, v) in [
        ("elastic", last.elastic),
        ("kinetic_u", last.kinetic_u),
        ("kinetic_d", last.kinetic_d),
        ("grad_d", last.grad_d),
        ("local_d", last.local_d),
    ] {
        summary.final_energies.insert(name.into(), v);
    }
    summary.max_residual = ledger.iter().fold(0.0_f64, |m, r| m.max(r.residual.abs()));
    summary.total_dissipated = dissipated;
    let estimate = scenario.params.damage_speed();
    summary.speed_estimate = Some(estimate);
    if let Some(front) = damage1d::front_speed(snapshots, &scenario.grid, 0.5) {
        summary.front_speed = Some(front.speed);
        summary.front_speed_ratio = Some(front.speed / estimate);
    }
    summary.localization_width = Some(damage1d::damage_band_width(
        &final_state.d,
        &scenario.grid,
        0.5,
    ));
    summary.snapshots = Some(
        snapshots
            .iter()
            .map(|s| SnapshotMeta {
                index: s.index,
                time: s.time,
            })
            .collect(),
    );
}

fn write_snapshots(out_dir: &Path, grid: &damage1d::Grid1D, snapshots: &[Snapshot]) -> Result<()> {
    for snap in snapshots {
        output::write_text(
            &out_dir.join(format!("snap_{}.csv", snap.index)),
            &output::snapshot_csv(grid, snap),
        )?;
    }
    Ok(())
}

fn run_damage_dynamic(
    cfg: &ScenarioConfig,
    opts: &RunOptions,
    out_dir: &Path,
) -> Result<ScenarioOutcome> {
    let scenario = config::damage_scenario(cfg, opts.dt_override)?;
    let (run, blowup) = damage1d::run_dynamic_partial(&scenario)?;
    if run.dt > run.stable.dt {
        eprintln!(
            "warning: dt {} exceeds the CFL-stable step {}",
            run.dt, run.stable.dt
        );
    }

    output::write_text(
        &out_dir.join("ledger.csv"),
        &output::damage_ledger_csv(&run.ledger),
    )?;
    write_snapshots(out_dir, &scenario.grid, &run.snapshots)?;

    let mut summary = Summary::base(Kind::DamageDynamic);
    summary.dt = Some(run.dt);
    damage_summary_common(
        &mut summary,
        &scenario,
        &run.ledger,
        &run.snapshots,
        &run.final_state,
        run.dissipated,
    );
    summary.blowup = blowup.map(|(step, time)| BlowupInfo { step, time });
    write_summary(out_dir, &summary)?;
    if let Some((step, time)) = blowup {
        return Err(Error::NumericalBlowup { step, time });
    }
    Ok(ScenarioOutcome {
        out_dir: out_dir.to_path_buf(),
        summary,
    })
}

fn run_damage_quasistatic(
    cfg: &ScenarioConfig,
    opts: &RunOptions,
    out_dir: &Path,
) -> Result<ScenarioOutcome> {
    let scenario = config::damage_scenario(cfg, opts.dt_override)?;
    let run = damage1d::run_quasistatic_at(&scenario)?;

    output::write_text(
        &out_dir.join("ledger.csv"),
        &output::damage_ledger_csv(&run.ledger),
    )?;

    // Load-step snapshots (quasistatic: momenta are zero).
    let n = scenario.grid.n_nodes();
    let step_count = run.trajectory.times.len();
    let mut snapshots = Vec::new();
    for (k, (d, u)) in run
        .trajectory
        .states
        .iter()
        .zip(&run.u_fields)
        .enumerate()
    {
        if k % scenario.snapshot_every == 0 || k + 1 == step_count {
            snapshots.push(Snapshot {
                index: snapshots.len(),
                time: run.trajectory.times[k],
                state: DamageState {
                    u: u.clone(),
                    p: vec![0.0; n],
                    d: d.clone(),
                    y: vec![0.0; n],
                },
            });
        }
    }
    write_snapshots(out_dir, &scenario.grid, &snapshots)?;

    let final_state = &snapshots.last().expect("at least one snapshot").state;
    let mut summary = Summary::base(Kind::DamageQuasistatic);
    summary.dt = scenario.dt;
    damage_summary_common(
        &mut summary,
        &scenario,
        &run.ledger,
        &snapshots,
        final_state,
        *run.trajectory
            .diss_cumulative
            .last()
            .expect("nonempty trajectory"),
    );
    summary.convergence_warnings = Some(run.convergence_warnings);
    write_summary(out_dir, &summary)?;
    Ok(ScenarioOutcome {
        out_dir: out_dir.to_path_buf(),
        summary,
    })
}

/// Format a sweep value for a directory name: shortest round-trip float
/// formatting, with `.` kept (deterministic and filesystem-safe).
fn value_dir_name(param: &str, value: f64) -> String {
    format!("{param}_{value}")
}

/// Run one scenario per sweep value in parallel worker threads, each writing
/// to a private subdirectory, then collect `sweep.csv` and a sweep-level
/// `summary.json`.
pub fn run_sweep(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<SweepOutcome> {
    if cfg.kind != Kind::Sweep {
        return Err(Error::SchemaError(
            "the sweep subcommand requires kind = \"sweep\"".into(),
        ));
    }
    let sweep = cfg.sweep.as_ref().expect("validated sweep section");
    let out_dir = resolve_out_dir(cfg, opts);
    output::create_dir_all(&out_dir)?;

    let entries: Vec<(usize, f64, PathBuf, ScenarioConfig)> = sweep
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut sub = cfg.clone();
            sub.kind = Kind::DamageDynamic;
            sub.sweep = None;
            sub.params.insert(sweep.param.clone(), *v);
            sub.output.dir = None;
            (i, *v, out_dir.join(value_dir_name(&sweep.param, *v)), sub)
        })
        .collect();

    let mut results: Vec<Option<Result<SweepRow>>> = Vec::new();
    results.resize_with(entries.len(), || None);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (i, value, dir, sub_cfg) in &entries {
            let dt_override = opts.dt_override;
            handles.push((
                *i,
                scope.spawn(move || -> Result<SweepRow> {
                    let sub_opts = RunOptions {
                        out_dir: Some(dir.clone()),
                        dt_override,
                    };
                    let outcome = run_scenario(sub_cfg, &sub_opts)?;
                    Ok(SweepRow {
                        value: *value,
                        localization_width: outcome.summary.localization_width.unwrap_or(0.0),
                        front_speed: outcome.summary.front_speed,
                        dir: dir
                            .file_name()
                            .map(|s| s.to_string_lossy().into_owned())
                            .unwrap_or_default(),
                    })
                }),
            ));
        }
        for (i, handle) in handles {
            results[i] = Some(handle.join().expect("sweep worker panicked"));
        }
    });

    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r.expect("worker result recorded")?);
    }

    let mut csv = format!("{},localization_width,front_speed\n", sweep.param);
    for row in &rows {
        let front = row
            .front_speed
            .map(output::fmt_f64)
            .unwrap_or_else(|| "nan".into());
        csv.push_str(&format!(
            "{},{},{}\n",
            output::fmt_f64(row.value),
            output::fmt_f64(row.localization_width),
            front
        ));
    }
    output::write_text(&out_dir.join("sweep.csv"), &csv)?;

    let width_nonincreasing = rows
        .windows(2)
        .all(|w| w[1].localization_width <= w[0].localization_width + 1e-12);
    let summary = SweepSummary {
        kind: Kind::Sweep.as_str().to_string(),
        param: sweep.param.clone(),
        rows,
        width_nonincreasing,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("sweep summary serialization");
    text.push('\n');
    output::write_text(&out_dir.join("summary.json"), &text)?;
    Ok(SweepOutcome { out_dir, summary })
}
