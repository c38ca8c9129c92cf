//! Deterministic CSV and JSON writers.
//!
//! Numeric CSV fields are printed with 17 significant digits in scientific
//! notation (`.` decimal separator, `\n` line endings), so identical runs
//! produce bit-identical files and every f64 round-trips exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::damage1d::{DamageLedgerRow, Grid1D, Snapshot};
use crate::error::{Error, Result};
use crate::integrators::Trajectory;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn create_dir_all(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Ledger of a damage run: `t,elastic,kinetic_u,kinetic_d,grad_d,local_d,dissipated,work,residual`.
pub fn damage_ledger_csv(rows: &[DamageLedgerRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 160 + 80);
    out.push_str("t,elastic,kinetic_u,kinetic_d,grad_d,local_d,dissipated,work,residual\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.elastic),
            fmt_f64(r.kinetic_u),
            fmt_f64(r.kinetic_d),
            fmt_f64(r.grad_d),
            fmt_f64(r.local_d),
            fmt_f64(r.dissipated),
            fmt_f64(r.work),
            fmt_f64(r.residual),
        );
    }
    out
}

/// Ledger of a split-integrator run:
/// `t,hamiltonian,power_integral,dissipated,residual`.
pub fn integrator_ledger_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.times.len() * 100 + 60);
    out.push_str("t,hamiltonian,power_integral,dissipated,residual\n");
    for (t, l) in traj.times.iter().zip(&traj.ledger) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(*t),
            fmt_f64(l.hamiltonian),
            fmt_f64(l.external_power_integral),
            fmt_f64(l.dissipated),
            fmt_f64(l.residual),
        );
    }
    out
}

/// One field snapshot: `x,u,p,d,y`, one row per node.
pub fn snapshot_csv(grid: &Grid1D, snapshot: &Snapshot) -> String {
    let s = &snapshot.state;
    let mut out = String::with_capacity(grid.n_nodes() * 110 + 20);
    out.push_str("x,u,p,d,y\n");
    for i in 0..grid.n_nodes() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(grid.node_x(i)),
            fmt_f64(s.u[i]),
            fmt_f64(s.p[i]),
            fmt_f64(s.d[i]),
            fmt_f64(s.y[i]),
        );
    }
    out
}
