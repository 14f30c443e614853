//! Error tables, snapshot CSV emission, and run manifests.
//!
//! CSV output is deterministic: '.' decimal separator, ',' field separator,
//! one header row, LF line endings, shortest round-trip float formatting.
//! Wall-clock timings go to the JSON manifest only.

use hje_core::{GridFunction, Trajectory};
use serde::Serialize;
use std::fmt::Write as _;

/// One resolution row of a convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorRow {
    pub n: u32,
    pub h: f64,
    pub tau: f64,
    pub linf_error: f64,
    pub l1_error: f64,
    pub linf_order: Option<f64>,
    pub l1_order: Option<f64>,
    pub runtime_seconds: f64,
}

/// Per-resolution errors against a reference, with observed orders between
/// consecutive rows.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    /// Recomputes the order columns as `log2(e_N / e_2N)` between consecutive
    /// rows; the first row carries no order.
    pub fn compute_orders(&mut self) {
        for i in 0..self.rows.len() {
            let (linf, l1) = if i == 0 {
                (None, None)
            } else {
                let prev = &self.rows[i - 1];
                let cur = &self.rows[i];
                (
                    Some((prev.linf_error / cur.linf_error).log2()),
                    Some((prev.l1_error / cur.l1_error).log2()),
                )
            };
            self.rows[i].linf_order = linf;
            self.rows[i].l1_order = l1;
        }
    }

    /// Table-layout CSV: resolution, sizes, errors and orders (no timings).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,h,tau,linf_error,l1_error,linf_order,l1_order\n");
        for row in &self.rows {
            let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.n,
                row.h,
                row.tau,
                row.linf_error,
                row.l1_error,
                fmt_opt(row.linf_order),
                fmt_opt(row.l1_order),
            );
        }
        out
    }
}

/// Snapshot CSV: index columns, simplex coordinates, planar plot coordinates
/// for three-vertex graphs, and the value.
pub fn snapshot_csv(grid: &GridFunction) -> String {
    let mesh = grid.mesh();
    let d = mesh.dim();
    let mut out = String::new();
    for l in 1..d {
        let _ = write!(out, "i{l},");
    }
    for l in 1..=d {
        let _ = write!(out, "xi{l},");
    }
    if d == 3 {
        out.push_str("bary_x,bary_y,");
    }
    out.push_str("U\n");
    for rank in 0..mesh.node_count() {
        for &lv in mesh.levels(rank) {
            let _ = write!(out, "{lv},");
        }
        let xi = mesh.point(rank);
        for &c in xi {
            let _ = write!(out, "{c},");
        }
        if d == 3 {
            let bx = xi[1] + 0.5 * xi[2];
            let by = 3f64.sqrt() / 2.0 * xi[2];
            let _ = write!(out, "{bx},{by},");
        }
        let _ = writeln!(out, "{}", grid.values()[rank]);
    }
    out
}

/// Per-run audit data for the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub n_steps: usize,
    pub tau_effective: f64,
    pub ratio: f64,
    pub interior_max_trace: Vec<f64>,
    pub full_max_trace: Vec<f64>,
    pub implicit_residuals: Vec<f64>,
    pub implicit_iterations: Vec<u32>,
    pub uniform_bound_excess: f64,
    pub runtime_seconds: f64,
}

impl RunRecord {
    pub fn from_trajectory(traj: &Trajectory, h: f64, runtime_seconds: f64) -> Self {
        Self {
            n_steps: traj.interior_max.len().saturating_sub(1),
            tau_effective: traj.tau,
            ratio: traj.tau / h,
            interior_max_trace: traj.interior_max.clone(),
            full_max_trace: traj.full_max.clone(),
            implicit_residuals: traj.residuals.clone(),
            implicit_iterations: traj.iterations.clone(),
            uniform_bound_excess: traj.uniform_bound_excess(),
            runtime_seconds,
        }
    }
}

/// Summary of a CFL ratio validation, mirrored into manifests.
#[derive(Debug, Clone, Serialize)]
pub struct CflRecord {
    pub lipschitz_estimate: f64,
    pub ratio_bound: f64,
    pub ratio: f64,
    pub pass: bool,
}
