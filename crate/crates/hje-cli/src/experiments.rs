//! Experiment drivers: solve runs, grid-refinement error tables, comparison
//! against the exact pure-noise semigroup solution, and the boundary
//! treatment study.

use crate::config::ExperimentConfig;
use crate::report::{snapshot_csv, CflRecord, ErrorReport, ErrorRow, RunRecord};
use crate::CliError;
use hje_core::{
    cfl_validate, generator, GridFunction, MeshIndex, OffsetVector, SchemeKind, ShiftOutcome,
    Solver, Trajectory,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

fn write_file(out_dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join(name), content)?;
    Ok(())
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Builds the solver for the configured mesh, running the strict CFL gate
/// when requested. Returns the solver, the mesh spacing, and the CFL record.
fn build_solver(
    cfg: &ExperimentConfig,
    n_override: Option<u32>,
) -> Result<(Solver, f64, Option<CflRecord>), CliError> {
    let mesh = match n_override {
        Some(n) => cfg.mesh_at(n)?,
        None => cfg.mesh()?,
    };
    let h = mesh.h();
    let ham = cfg.discrete_hamiltonian()?;
    let mut scheme_cfg = cfg.scheme_config(h)?;
    let mut cfl = None;
    if cfg.strict_cfl {
        let ratio = scheme_cfg.tau / h;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xcf1);
        let report = cfl_validate(&ham, ratio, cfg.eps, cfg.cfl_r, &mut rng);
        cfl = Some(CflRecord {
            lipschitz_estimate: report.lipschitz,
            ratio_bound: report.bound,
            ratio: report.ratio,
            pass: report.pass,
        });
        if matches!(scheme_cfg.kind, SchemeKind::Explicit) {
            if !report.pass {
                return Err(CliError::Numerical(format!(
                    "strict CFL check failed: ratio {} exceeds bound {}",
                    report.ratio, report.bound
                )));
            }
            scheme_cfg.cfl_ratio_check = Some(report.bound);
        }
    }
    let potential = cfg.potential_fn()?;
    let solver = Solver::new(Arc::new(mesh), ham, potential, scheme_cfg).map_err(numerical)?;
    Ok((solver, h, cfl))
}

fn run_solver(
    cfg: &ExperimentConfig,
    solver: &Solver,
    probes: &[f64],
) -> Result<(Trajectory, f64), CliError> {
    let initial = cfg.initial_fn()?;
    let start = Instant::now();
    let traj = solver.run(initial, probes).map_err(numerical)?;
    Ok((traj, start.elapsed().as_secs_f64()))
}

/// Result of a solve command: snapshot files plus the run audit.
#[derive(Debug, Serialize)]
pub struct SolveOutcome {
    pub snapshot_files: Vec<(f64, String)>,
    pub run: RunRecord,
}

pub fn cmd_solve(
    cfg: &ExperimentConfig,
    probes_override: Option<&[f64]>,
    out_dir: &Path,
) -> Result<SolveOutcome, CliError> {
    let (solver, h, cfl) = build_solver(cfg, None)?;
    let probes: Vec<f64> = match probes_override {
        Some(p) => p.to_vec(),
        None => cfg
            .snapshot_times
            .clone()
            .unwrap_or_else(|| vec![cfg.t_end]),
    };
    let (traj, runtime) = run_solver(cfg, &solver, &probes)?;
    let mut snapshot_files = Vec::new();
    for (idx, (t, grid)) in traj.snapshots.iter().enumerate() {
        let name = format!("snapshot_{idx:03}.csv");
        write_file(out_dir, &name, &snapshot_csv(grid))?;
        snapshot_files.push((*t, name));
    }
    let run = RunRecord::from_trajectory(&traj, h, runtime);
    let manifest = json!({
        "command": "solve",
        "config": cfg,
        "run": run,
        "cfl": cfl,
        "snapshots": snapshot_files
            .iter()
            .map(|(t, f)| json!({"time": t, "file": f}))
            .collect::<Vec<_>>(),
    });
    write_file(
        out_dir,
        "manifest.json",
        &format!("{}\n", serde_json::to_string_pretty(&manifest)?),
    )?;
    Ok(SolveOutcome {
        snapshot_files,
        run,
    })
}

fn validate_resolutions(resolutions: &[u32], reference_n: u32) -> Result<(), CliError> {
    if resolutions.is_empty() {
        return Err(CliError::Config("no resolutions given".into()));
    }
    if !resolutions.windows(2).all(|w| w[0] < w[1]) {
        return Err(CliError::Config(
            "resolutions must be strictly increasing".into(),
        ));
    }
    for &n in resolutions {
        if reference_n <= n || reference_n % n != 0 {
            return Err(CliError::Config(format!(
                "reference N = {reference_n} must be a strict multiple of every resolution (got {n})"
            )));
        }
    }
    Ok(())
}

/// Grid-refinement study against a reference run of the same scheme on a
/// nested finer mesh. Errors are taken at exactly coinciding nodes; no
/// interpolation.
pub fn cmd_convergence(
    cfg: &ExperimentConfig,
    resolutions: &[u32],
    out_dir: &Path,
) -> Result<ErrorReport, CliError> {
    validate_resolutions(resolutions, cfg.reference_n)?;
    let (ref_solver, ref_h, _) = build_solver(cfg, Some(cfg.reference_n))?;
    let (ref_traj, ref_runtime) = run_solver(cfg, &ref_solver, &[cfg.t_end])?;
    let ref_grid = &ref_traj.snapshots.last().expect("final snapshot").1;
    let ref_mesh = ref_grid.mesh().clone();

    let mut report = ErrorReport::default();
    let mut runs = Vec::new();
    for &n in resolutions {
        let (solver, h, _) = build_solver(cfg, Some(n))?;
        let (traj, runtime) = run_solver(cfg, &solver, &[cfg.t_end])?;
        let grid = &traj.snapshots.last().expect("final snapshot").1;
        let mesh = grid.mesh();
        let scale = cfg.reference_n / n;
        let mut linf = 0.0f64;
        let mut l1 = 0.0f64;
        for rank in 0..mesh.node_count() {
            let fine_levels: Vec<u32> =
                mesh.levels(rank).iter().map(|&v| v * scale).collect();
            let fine_rank = ref_mesh
                .rank(&MeshIndex::new(fine_levels))
                .expect("nested meshes share nodes");
            let err = (grid.values()[rank] - ref_grid.values()[fine_rank]).abs();
            linf = linf.max(err);
            l1 += err;
        }
        l1 /= mesh.node_count() as f64;
        report.rows.push(ErrorRow {
            n,
            h,
            tau: traj.tau,
            linf_error: linf,
            l1_error: l1,
            linf_order: None,
            l1_order: None,
            runtime_seconds: runtime,
        });
        runs.push((n, RunRecord::from_trajectory(&traj, h, runtime)));
    }
    report.compute_orders();
    write_file(out_dir, "convergence.csv", &report.to_csv())?;
    let manifest = json!({
        "command": "convergence",
        "config": cfg,
        "resolutions": resolutions,
        "reference": {
            "n": cfg.reference_n,
            "run": RunRecord::from_trajectory(&ref_traj, ref_h, ref_runtime),
        },
        "rows": report.rows,
        "runs": runs.iter().map(|(n, r)| json!({"n": n, "run": r})).collect::<Vec<_>>(),
    });
    write_file(
        out_dir,
        "manifest.json",
        &format!("{}\n", serde_json::to_string_pretty(&manifest)?),
    )?;
    Ok(report)
}

/// Convergence against the exact semigroup solution of the pure-noise
/// equation, evaluated at every mesh node at the final time.
pub fn cmd_oracle_compare(
    cfg: &ExperimentConfig,
    resolutions: &[u32],
    out_dir: &Path,
) -> Result<ErrorReport, CliError> {
    if cfg.hamiltonian != "zero"
        || cfg.potential != "zero"
        || cfg.tensor != "logarithmic"
        || cfg.lambda1 != 1.0
    {
        return Err(CliError::Config(
            "oracle comparison requires hamiltonian = zero, potential = zero, \
             tensor = logarithmic, lambda1 = 1"
                .into(),
        ));
    }
    if resolutions.is_empty() {
        return Err(CliError::Config("no resolutions given".into()));
    }
    if !resolutions.windows(2).all(|w| w[0] < w[1]) {
        return Err(CliError::Config(
            "resolutions must be strictly increasing".into(),
        ));
    }
    let graph = cfg.graph()?;
    let gen = generator(&graph);
    let d = graph.vertex_count();
    let trans = gen.transition(cfg.t_end);
    let initial = cfg.initial_fn()?;

    let mut report = ErrorReport::default();
    let mut runs = Vec::new();
    for &n in resolutions {
        let (solver, h, _) = build_solver(cfg, Some(n))?;
        let (traj, runtime) = run_solver(cfg, &solver, &[cfg.t_end])?;
        let grid = &traj.snapshots.last().expect("final snapshot").1;
        let mesh = grid.mesh();
        let mut linf = 0.0f64;
        let mut l1 = 0.0f64;
        let mut evolved = vec![0.0; d];
        for rank in 0..mesh.node_count() {
            let xi = mesh.point(rank);
            for i in 0..d {
                evolved[i] = (0..d).map(|j| trans[i * d + j] * xi[j]).sum();
            }
            let err = (grid.values()[rank] - initial(&evolved)).abs();
            linf = linf.max(err);
            l1 += err;
        }
        l1 /= mesh.node_count() as f64;
        report.rows.push(ErrorRow {
            n,
            h,
            tau: traj.tau,
            linf_error: linf,
            l1_error: l1,
            linf_order: None,
            l1_order: None,
            runtime_seconds: runtime,
        });
        runs.push((n, RunRecord::from_trajectory(&traj, h, runtime)));
    }
    report.compute_orders();
    write_file(out_dir, "oracle_compare.csv", &report.to_csv())?;
    let manifest = json!({
        "command": "oracle-compare",
        "config": cfg,
        "resolutions": resolutions,
        "rows": report.rows,
        "runs": runs.iter().map(|(n, r)| json!({"n": n, "run": r})).collect::<Vec<_>>(),
    });
    write_file(
        out_dir,
        "manifest.json",
        &format!("{}\n", serde_json::to_string_pretty(&manifest)?),
    )?;
    Ok(report)
}

/// Comparison of prescribed boundary values against linear extrapolation.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryDemoOutcome {
    /// Largest one-cell difference quotient next to the boundary, Dirichlet run.
    pub dirichlet_quotient: f64,
    /// Same quantity for the extrapolation run.
    pub extrapolation_quotient: f64,
    /// Dirichlet over extrapolation.
    pub quotient_ratio: f64,
}

/// Largest `|U(target) - U(node)| / h` over interior nodes with at least one
/// stencil target on the boundary.
pub fn boundary_layer_quotient(grid: &GridFunction) -> f64 {
    let mesh = grid.mesh();
    let h = mesh.h();
    let pairs = OffsetVector::all_pairs(mesh.dim());
    let mut max = 0.0f64;
    for &rank in mesh.interior_ranks() {
        let mut adjacent = false;
        let mut local = 0.0f64;
        for off in &pairs {
            for dir in [1, -1] {
                let target = match mesh.shift(rank, off, dir) {
                    ShiftOutcome::Interior(r) => r,
                    ShiftOutcome::BoundaryExit(be) => {
                        adjacent = true;
                        be.rank.expect("one-cell move from interior is admissible")
                    }
                };
                local = local.max((grid.values()[target] - grid.values()[rank]).abs() / h);
            }
        }
        if adjacent {
            max = max.max(local);
        }
    }
    max
}

pub fn cmd_boundary_demo(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<BoundaryDemoOutcome, CliError> {
    let mut quotients = Vec::new();
    let mut runs = Vec::new();
    for (label, boundary) in [
        ("dirichlet", "dirichlet".to_string()),
        ("extrapolation", "linear".to_string()),
    ] {
        let mut variant = cfg.clone();
        variant.boundary = boundary;
        let (solver, h, _) = build_solver(&variant, None)?;
        let (traj, runtime) = run_solver(&variant, &solver, &[cfg.t_end])?;
        let grid = &traj.snapshots.last().expect("final snapshot").1;
        quotients.push(boundary_layer_quotient(grid));
        write_file(
            out_dir,
            &format!("boundary_{label}.csv"),
            &snapshot_csv(grid),
        )?;
        runs.push((label, RunRecord::from_trajectory(&traj, h, runtime)));
    }
    let outcome = BoundaryDemoOutcome {
        dirichlet_quotient: quotients[0],
        extrapolation_quotient: quotients[1],
        quotient_ratio: quotients[0] / quotients[1],
    };
    let manifest = json!({
        "command": "boundary-demo",
        "config": cfg,
        "outcome": outcome,
        "runs": runs
            .iter()
            .map(|(l, r)| json!({"variant": l, "run": r}))
            .collect::<Vec<_>>(),
    });
    write_file(
        out_dir,
        "manifest.json",
        &format!("{}\n", serde_json::to_string_pretty(&manifest)?),
    )?;
    write_file(
        out_dir,
        "boundary_demo.json",
        &format!("{}\n", serde_json::to_string_pretty(&outcome)?),
    )?;
    Ok(outcome)
}
