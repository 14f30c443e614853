use hje_core::*;
use std::sync::Arc;
use std::time::Instant;

fn sq_norm(xi: &[f64]) -> f64 {
    xi.iter().map(|c| c * c).sum()
}

fn table1_ham(lambda1: f64) -> DiscreteHamiltonian {
    DiscreteHamiltonian::new(
        Graph::complete(3),
        MetricTensor::Average,
        Hamiltonian::inverse_information(2.0),
        DiscreteKind::OsherSethian,
        lambda1,
    )
}

fn main() {
    let n: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(32);
    let mode = std::env::args().nth(2).unwrap_or_else(|| "ratio1".into());
    let eps = 0.01;
    let h = (1.0 - 3.0 * eps) / f64::from(n);
    let g = Graph::complete(3);
    let mesh = Arc::new(build_mesh(&g, h, eps).unwrap());
    println!("N={n} h={h} nodes={} interior={}", mesh.node_count(), mesh.interior_ranks().len());
    let t_end = 0.4;

    match mode.as_str() {
        "ratio1" => {
            // criterion 7 probe: tau/h = 1
            let tau0 = h;
            let n_steps = (t_end / tau0).round().max(1.0);
            let tau = t_end / n_steps;
            println!("tau={tau} ratio={} steps={n_steps}", tau / h);
            for damped in [false, true] {
                let solver = Solver::new(
                    mesh.clone(),
                    table1_ham(0.5),
                    |_| 0.0,
                    SchemeConfig {
                        tau,
                        t_end,
                        boundary: BoundaryMode::Linear,
                        kind: SchemeKind::implicit_default(),
                        cfl_ratio_check: None,
                    },
                )
                .unwrap()
                .with_damped_sweeps(damped);
                match solver.run(sq_norm, &[t_end]) {
                    Ok(traj) => println!(
                        "implicit damped={damped}: bound_excess={:.3e} max_residual={:.3e} iters_max={} full_max_end={:.6}",
                        traj.uniform_bound_excess(),
                        traj.residuals.iter().cloned().fold(0.0f64, f64::max),
                        traj.iterations.iter().max().unwrap(),
                        traj.full_max.last().unwrap()
                    ),
                    Err(e) => println!("implicit damped={damped}: ERROR {e}"),
                }
            }
            let explicit = Solver::new(
                mesh.clone(),
                table1_ham(0.5),
                |_| 0.0,
                SchemeConfig {
                    tau,
                    t_end,
                    boundary: BoundaryMode::Linear,
                    kind: SchemeKind::Explicit,
                    cfl_ratio_check: None,
                },
            )
            .unwrap();
            match explicit.run(sq_norm, &[t_end]) {
                Ok(traj) => {
                    let full_excess = traj
                        .full_max
                        .iter()
                        .enumerate()
                        .map(|(n, &m)| m - (traj.u0_sup_norm + n as f64 * tau * 0.0))
                        .fold(f64::NEG_INFINITY, f64::max);
                    println!(
                        "explicit: interior_excess={:.3e} full_excess={:.3e} full_max_end={:.3e}",
                        traj.uniform_bound_excess(),
                        full_excess,
                        traj.full_max.last().unwrap()
                    );
                }
                Err(e) => println!("explicit: ERROR {e}"),
            }
        }
        "time" => {
            // criterion 6 cost probe at ratio 0.05
            let tau0 = 0.05 * h;
            let n_steps = (t_end / tau0).round().max(1.0);
            let tau = t_end / n_steps;
            println!("steps={n_steps} ratio={}", tau / h);
            for (label, kind) in [
                ("explicit", SchemeKind::Explicit),
                ("implicit", SchemeKind::implicit_default()),
            ] {
                let solver = Solver::new(
                    mesh.clone(),
                    table1_ham(0.5),
                    |_| 0.0,
                    SchemeConfig {
                        tau,
                        t_end,
                        boundary: BoundaryMode::Linear,
                        kind,
                        cfl_ratio_check: None,
                    },
                )
                .unwrap();
                let t0 = Instant::now();
                let traj = solver.run(sq_norm, &[t_end]).unwrap();
                println!(
                    "{label}: {:.2}s bound_excess={:.3e} max_res={:.3e} iters_max={:?}",
                    t0.elapsed().as_secs_f64(),
                    traj.uniform_bound_excess(),
                    traj.residuals.iter().cloned().fold(0.0f64, f64::max),
                    traj.iterations.iter().max()
                );
            }
        }
        "trunc" => {
            // one-step truncation from exact data near the zero boundary
            let g = Graph::complete(3);
            let gen = generator(&g);
            let n = 64u32;
            let h = 1.0 / f64::from(n);
            let mesh = Arc::new(build_mesh(&g, h, 0.0).unwrap());
            let tau = 0.05 * h;
            let t0 = 0.2;
            let ham = DiscreteHamiltonian::new(
                g.clone(),
                MetricTensor::Logarithmic,
                Hamiltonian::Zero,
                DiscreteKind::OsherSethian,
                1.0,
            );
            let solver = Solver::new(
                mesh.clone(),
                ham,
                |_| 0.0,
                SchemeConfig {
                    tau,
                    t_end: tau,
                    boundary: BoundaryMode::Linear,
                    kind: SchemeKind::Explicit,
                    cfl_ratio_check: None,
                },
            )
            .unwrap();
            let u_exact_t0 = GridFunction::sample(mesh.clone(), |xi| {
                gen.exact_noise_solution(sq_norm, t0, &SimplexPoint::new(xi.to_vec()).unwrap())
            });
            let stepped = solver.explicit_step(&u_exact_t0).unwrap();
            for lv in [[1u32, 32], [2, 32], [5, 32], [20, 40], [0, 32]] {
                let rank = mesh.rank(&MeshIndex::new(lv.to_vec())).unwrap();
                let exact = gen.exact_noise_solution(
                    sq_norm,
                    t0 + tau,
                    &mesh.simplex_point(rank),
                );
                println!(
                    "node {lv:?}: step={:.8} exact={:.8} err={:.3e} (err/tau={:.3e})",
                    stepped.values()[rank],
                    exact,
                    (stepped.values()[rank] - exact).abs(),
                    (stepped.values()[rank] - exact).abs() / tau,
                );
            }
        }
        "oracle" => {
            // pure-noise convergence against the exact semigroup solution
            let g = Graph::complete(3);
            let gen = generator(&g);
            let mut prev: Option<f64> = None;
            for n in [16u32, 32, 64, 128] {
                let h = 1.0 / f64::from(n);
                let mesh = Arc::new(build_mesh(&g, h, 0.0).unwrap());
                let tau0 = 0.05 * h;
                let n_steps = (t_end / tau0).round().max(1.0);
                let tau = t_end / n_steps;
                let ham = DiscreteHamiltonian::new(
                    g.clone(),
                    MetricTensor::Logarithmic,
                    Hamiltonian::Zero,
                    DiscreteKind::OsherSethian,
                    1.0,
                );
                let solver = Solver::new(
                    mesh.clone(),
                    ham,
                    |_| 0.0,
                    SchemeConfig {
                        tau,
                        t_end,
                        boundary: BoundaryMode::Linear,
                        kind: SchemeKind::Explicit,
                        cfl_ratio_check: None,
                    },
                )
                .unwrap();
                let traj = solver.run(sq_norm, &[t_end]).unwrap();
                let u_t = &traj.snapshots.last().unwrap().1;
                let mut linf = 0.0f64;
                let mut argmax = 0;
                let mut linf_deep = 0.0f64; // nodes with all coords >= 0.2
                for r in 0..mesh.node_count() {
                    let exact =
                        gen.exact_noise_solution(sq_norm, t_end, &mesh.simplex_point(r));
                    let e = (u_t.values()[r] - exact).abs();
                    if e > linf {
                        linf = e;
                        argmax = r;
                    }
                    if mesh.point(r).iter().all(|&c| c >= 0.2) {
                        linf_deep = linf_deep.max(e);
                    }
                }
                let order = prev.map(|p: f64| (p / linf).log2());
                println!(
                    "N={n}: Linf={linf:.6e} deep={linf_deep:.3e} argmax@{:?} xi={:?} order={order:?}",
                    mesh.levels(argmax),
                    mesh.point(argmax),
                );
                prev = Some(linf);
            }
        }
        "sweep" => {
            // where does the explicit run actually violate the bound?
            for ratio in [1.0f64, 1.5, 2.0, 3.0, 5.0, 8.0] {
                for (label, mode) in [
                    ("constant", BoundaryMode::Constant),
                    ("linear", BoundaryMode::Linear),
                ] {
                    let tau0 = ratio * h;
                    let n_steps = (t_end / tau0).round().max(1.0);
                    let tau = t_end / n_steps;
                    let solver = Solver::new(
                        mesh.clone(),
                        table1_ham(0.5),
                        |_| 0.0,
                        SchemeConfig {
                            tau,
                            t_end,
                            boundary: mode,
                            kind: SchemeKind::Explicit,
                            cfl_ratio_check: None,
                        },
                    )
                    .unwrap();
                    match solver.run(sq_norm, &[t_end]) {
                        Ok(traj) => println!(
                            "ratio={ratio} {label}: excess={:.3e} steps={n_steps}",
                            traj.uniform_bound_excess()
                        ),
                        Err(e) => println!("ratio={ratio} {label}: ERROR {e}"),
                    }
                }
            }
        }
        "spectral" => {
            // per-step amplification of a perturbation along the explicit
            // ratio-1 trajectory, by power iteration on the linearization
            let ratio: f64 = std::env::args()
                .nth(3)
                .and_then(|s| s.parse().ok())
                .unwrap_or(1.0);
            let tau0 = ratio * h;
            let n_steps = (t_end / tau0).round().max(1.0);
            let tau = t_end / n_steps;
            println!("ratio={} steps={n_steps}", tau / h);
            let solver = Solver::new(
                mesh.clone(),
                table1_ham(0.5),
                |_| 0.0,
                SchemeConfig {
                    tau,
                    t_end,
                    boundary: BoundaryMode::Linear,
                    kind: SchemeKind::Explicit,
                    cfl_ratio_check: None,
                },
            )
            .unwrap();
            let mut u = GridFunction::sample(mesh.clone(), sq_norm);
            let mut pert: Vec<f64> = (0..mesh.node_count())
                .map(|r| ((r * 2654435761) % 1000) as f64 / 1000.0 - 0.5)
                .collect();
            let scale = 1e-7;
            for step in 0..(n_steps as usize) {
                let base = solver.explicit_step(&u).unwrap();
                let mut up = u.clone();
                let norm0: f64 = pert.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for (v, p) in up.values_mut().iter_mut().zip(&pert) {
                    *v += scale * p / norm0;
                }
                let stepped = solver.explicit_step(&up).unwrap();
                let mut growth = 0.0f64;
                for ((a, b), slot) in base
                    .values()
                    .iter()
                    .zip(stepped.values())
                    .zip(pert.iter_mut())
                {
                    *slot = (b - a) / scale;
                    growth = growth.max(slot.abs());
                }
                println!("step {step}: amplification {growth:.4}");
                u = base;
            }
        }
        other => panic!("unknown mode {other}"),
    }
}
