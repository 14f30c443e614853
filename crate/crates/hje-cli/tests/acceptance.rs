//! Acceptance suite: one test per criterion, printing a pass/fail line each.
//!
//! Criteria 5, 6 and 8 drive the full experiment pipeline through the same
//! commands the binary exposes, using the configuration files shipped under
//! `configs/`.

use hje_cli::{cmd_boundary_demo, cmd_convergence, cmd_oracle_compare, ExperimentConfig};
use hje_core::{
    build_mesh, divergence, graph_gradient, information_functional, inner_product, noise_term,
    pi_forward, pi_inverse, random_truncated_point, BoundaryMode, ConvexWeights,
    DiscreteHamiltonian, DiscreteKind, Graph, GridFunction, Mesh, MetricTensor, OffsetVector,
    SchemeConfig, SchemeError, SchemeKind, ShiftOutcome, SimplexPoint, SkewField, Solver,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn sq_norm(xi: &[f64]) -> f64 {
    xi.iter().map(|c| c * c).sum()
}

fn random_skew(rng: &mut impl Rng, d: usize, lim: f64) -> SkewField {
    SkewField::from_fn(d, |_, _| rng.gen_range(-lim..lim))
}

fn table1_hamiltonian(lambda1: f64, tensor: MetricTensor) -> DiscreteHamiltonian {
    DiscreteHamiltonian::new(
        Graph::complete(3),
        tensor,
        hje_core::Hamiltonian::inverse_information(2.0),
        DiscreteKind::OsherSethian,
        lambda1,
    )
}

/// Largest one-cell difference magnitude over interior stencils.
fn max_one_cell_difference(mesh: &Arc<Mesh>, u: &GridFunction) -> f64 {
    let pairs = OffsetVector::all_pairs(mesh.dim());
    let mut max = 0.0f64;
    for &rank in mesh.interior_ranks() {
        for off in &pairs {
            for dir in [1, -1] {
                let t = match mesh.shift(rank, off, dir) {
                    ShiftOutcome::Interior(r) => r,
                    ShiftOutcome::BoundaryExit(be) => be.rank.unwrap(),
                };
                max = max.max((u.values()[t] - u.values()[rank]).abs());
            }
        }
    }
    max
}

/// Random grid function with one-cell differences at most `r_bound * h`.
fn random_in_m0(mesh: &Arc<Mesh>, r_bound: f64, rng: &mut impl Rng) -> GridFunction {
    let mut u = GridFunction::constant(mesh.clone(), 0.0);
    for v in u.values_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    let max_diff = max_one_cell_difference(mesh, &u);
    if max_diff > 0.0 {
        let scale = r_bound * mesh.h() / max_diff;
        for v in u.values_mut() {
            *v *= scale;
        }
    }
    u
}

/// Criterion-2/3 engine: complete triangle, 20 levels (h = 0.0485),
/// eps = 0.01, ratio 0.05, Osher-Sethian discrete Hamiltonian, constant
/// extrapolation (the monotone boundary treatment).
fn probe_solver() -> (Arc<Mesh>, Solver) {
    let eps = 0.01;
    let h = (1.0 - 3.0 * eps) / 20.0;
    let mesh = Arc::new(build_mesh(&Graph::complete(3), h, eps).unwrap());
    let tau = 0.05 * h;
    let solver = Solver::new(
        mesh.clone(),
        table1_hamiltonian(0.5, MetricTensor::Average),
        |_| 0.0,
        SchemeConfig {
            tau,
            t_end: tau,
            boundary: BoundaryMode::Constant,
            kind: SchemeKind::Explicit,
            cfl_ratio_check: None,
        },
    )
    .unwrap();
    (mesh, solver)
}

#[test]
fn c1_consistency_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc_1);
    let g = Graph::complete(3);
    let mut max_gap = 0.0f64;
    for tensor in [MetricTensor::Average, MetricTensor::Logarithmic] {
        let base = hje_core::Hamiltonian::inverse_information(2.0);
        let samples: Vec<SimplexPoint> = (0..16)
            .map(|_| random_truncated_point(3, 0.01, &mut rng))
            .collect();
        let gamma = hje_core::lf_gamma_default(&g, &tensor, &base, &samples, 3.0, &mut rng);
        let hams = [
            DiscreteHamiltonian::new(
                g.clone(),
                tensor,
                base.clone(),
                DiscreteKind::OsherSethian,
                0.5,
            ),
            DiscreteHamiltonian::new(
                g.clone(),
                tensor,
                base.clone(),
                DiscreteKind::LaxFriedrichs { gamma },
                0.5,
            ),
        ];
        for ham in &hams {
            for _ in 0..500 {
                let xi = random_truncated_point(3, 0.002, &mut rng);
                let p = random_skew(&mut rng, 3, 3.0);
                let gap = ham.consistency_gap(&xi, &p).unwrap().abs();
                max_gap = max_gap.max(gap);
                assert!(
                    gap <= 1e-12,
                    "consistency gap {gap} at xi = {:?}",
                    xi.coords()
                );
            }
        }
    }
    println!(
        "[acceptance] criterion 1 PASS: max |G(xi,P,P) - (H - lambda1 O)| = {max_gap:.3e} \
         over 500 samples x 2 kinds x 2 tensors ({:.2}s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn c2_monotonicity_probes() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc_2);
    let (mesh, solver) = probe_solver();
    let r_bound = 1.0 + 2.0 * 2.0f64.sqrt(); // 1 + sqrt(2) Lip(|xi|^2)
    let delta = 1e-4;
    let interior = mesh.interior_ranks();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let u = random_in_m0(&mesh, r_bound, &mut rng);
        let base = solver.explicit_step(&u).unwrap();
        for &probe in interior {
            let mut raised = u.clone();
            raised.values_mut()[probe] += delta;
            let out = solver.explicit_step(&raised).unwrap();
            for (&a, &b) in base.values().iter().zip(out.values()) {
                worst = worst.max(a - b);
                assert!(
                    b >= a - 1e-14,
                    "output decreased by {} after raising node {probe}",
                    a - b
                );
            }
        }
    }
    println!(
        "[acceptance] criterion 2 PASS: 200 grid functions x {} single-node raises, \
         worst decrease {worst:.3e} <= 1e-14 ({:.2}s)",
        interior.len(),
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn c3_contractivity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc_3);
    let (mesh, solver) = probe_solver();
    let r_bound = 1.0 + 2.0 * 2.0f64.sqrt();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let u = random_in_m0(&mesh, r_bound, &mut rng);
        let v = random_in_m0(&mesh, r_bound, &mut rng);
        let d0 = u
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let su = solver.explicit_step(&u).unwrap();
        let sv = solver.explicit_step(&v).unwrap();
        let d1 = su
            .values()
            .iter()
            .zip(sv.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        worst = worst.max(d1 - d0);
        assert!(d1 <= d0 + 1e-12, "expansion by {}", d1 - d0);
    }
    println!(
        "[acceptance] criterion 3 PASS: 200 random pairs, worst sup-norm expansion \
         {worst:.3e} <= 1e-12 ({:.2}s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn c4_uniform_bound() {
    let start = Instant::now();
    // the same bound is asserted along every criterion-5/6/8 run through the
    // manifests those tests inspect; here both schemes run the convergence
    // configuration directly and the trace is checked step by step
    let eps = 0.01;
    let h = (1.0 - 3.0 * eps) / 32.0;
    let mesh = Arc::new(build_mesh(&Graph::complete(3), h, eps).unwrap());
    let tau0 = 0.05 * h;
    let steps = (0.4f64 / tau0).round();
    let tau = 0.4 / steps;
    let mut excesses = Vec::new();
    for kind in [SchemeKind::Explicit, SchemeKind::implicit_default()] {
        let solver = Solver::new(
            mesh.clone(),
            table1_hamiltonian(0.5, MetricTensor::Average),
            |_| 0.0,
            SchemeConfig {
                tau,
                t_end: 0.4,
                boundary: BoundaryMode::Linear,
                kind,
                cfl_ratio_check: None,
            },
        )
        .unwrap();
        let traj = solver.run(sq_norm, &[0.4]).unwrap();
        for (n, &m) in traj.interior_max.iter().enumerate() {
            let bound = traj.u0_sup_norm + n as f64 * tau * traj.potential_sup_norm + 1e-10;
            assert!(m <= bound, "step {n}: interior max {m} exceeds bound {bound}");
        }
        excesses.push(traj.uniform_bound_excess());
    }
    println!(
        "[acceptance] criterion 4 PASS: sup|U^n| within |U0|+t|F| along both schemes, \
         worst excess {:.3e} (explicit) / {:.3e} (implicit) ({:.2}s)",
        excesses[0],
        excesses[1],
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn c5_oracle_convergence() {
    let start = Instant::now();
    let cfg = ExperimentConfig::from_file(&config_path("oracle_compare.conf")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_oracle_compare(&cfg, &[16, 32, 64, 128], dir.path()).unwrap();
    for pair in report.rows.windows(2) {
        assert!(
            pair[1].linf_error < pair[0].linf_error,
            "Linf error did not strictly decrease: {} -> {}",
            pair[0].linf_error,
            pair[1].linf_error
        );
    }
    let finest = report.rows.last().unwrap().linf_order.unwrap();
    assert!(finest >= 0.8, "finest-pair order {finest} < 0.8");
    // uniform bound along every run of this criterion
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
    )
    .unwrap();
    for run in manifest["runs"].as_array().unwrap() {
        let excess = run["run"]["uniform_bound_excess"].as_f64().unwrap();
        assert!(excess <= 1e-10, "bound excess {excess}");
    }
    println!(
        "[acceptance] criterion 5 PASS: Linf {} strictly decreasing, finest order {finest:.3} \
         >= 0.8 ({:.2}s)",
        report
            .rows
            .iter()
            .map(|r| format!("{:.3e}", r.linf_error))
            .collect::<Vec<_>>()
            .join(" > "),
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn c6_table1_reproduction() {
    let start = Instant::now();
    let mut summaries = Vec::new();
    for conf in ["table1_explicit.conf", "table1_implicit.conf"] {
        let cfg = ExperimentConfig::from_file(&config_path(conf)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = cmd_convergence(&cfg, &[16, 32, 64, 128], dir.path()).unwrap();
        for pair in report.rows.windows(2) {
            assert!(
                pair[1].linf_error < pair[0].linf_error
                    && pair[1].l1_error < pair[0].l1_error,
                "{conf}: errors did not strictly decrease"
            );
        }
        let mut orders = Vec::new();
        for row in report.rows.iter().skip(1) {
            for order in [row.linf_order.unwrap(), row.l1_order.unwrap()] {
                assert!(
                    (0.9..=1.7).contains(&order),
                    "{conf}: order {order} outside [0.9, 1.7]"
                );
                orders.push(order);
            }
        }
        // uniform bound and the implicit iteration budget along every run
        let manifest: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
        )
        .unwrap();
        let mut all_runs: Vec<serde_json::Value> = manifest["runs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["run"].clone())
            .collect();
        all_runs.push(manifest["reference"]["run"].clone());
        for run in &all_runs {
            let excess = run["uniform_bound_excess"].as_f64().unwrap();
            assert!(excess <= 1e-10, "{conf}: bound excess {excess}");
            for r in run["implicit_residuals"].as_array().unwrap() {
                assert!(r.as_f64().unwrap() <= 1e-6, "{conf}: residual above budget");
            }
            for k in run["implicit_iterations"].as_array().unwrap() {
                assert!(k.as_u64().unwrap() <= 10, "{conf}: iteration budget exceeded");
            }
        }
        summaries.push(format!(
            "{}: orders {}",
            if conf.contains("explicit") {
                "explicit"
            } else {
                "implicit"
            },
            orders
                .iter()
                .map(|o| format!("{o:.2}"))
                .collect::<Vec<_>>()
                .join("/")
        ));
    }
    println!(
        "[acceptance] criterion 6 PASS: errors strictly decreasing, {} ({:.1}s)",
        summaries.join("; "),
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn c7_implicit_unconditional_stability() {
    let start = Instant::now();
    let eps = 0.01;
    let h = (1.0 - 3.0 * eps) / 32.0;
    let mesh = Arc::new(build_mesh(&Graph::complete(3), h, eps).unwrap());
    // ratio tau/h = 1, rounded to a whole number of steps
    let steps = (0.4f64 / h).round();
    let tau = 0.4 / steps;

    let implicit = Solver::new(
        mesh.clone(),
        table1_hamiltonian(0.5, MetricTensor::Average),
        |_| 0.0,
        SchemeConfig {
            tau,
            t_end: 0.4,
            boundary: BoundaryMode::Linear,
            kind: SchemeKind::implicit_default(),
            cfl_ratio_check: None,
        },
    )
    .unwrap();
    let traj = implicit.run(sq_norm, &[0.4]).unwrap();
    let implicit_excess = traj.uniform_bound_excess();
    assert!(
        implicit_excess <= 1e-10,
        "implicit run exceeded the uniform bound by {implicit_excess}"
    );

    let explicit = Solver::new(
        mesh.clone(),
        table1_hamiltonian(0.5, MetricTensor::Average),
        |_| 0.0,
        SchemeConfig {
            tau,
            t_end: 0.4,
            boundary: BoundaryMode::Linear,
            kind: SchemeKind::Explicit,
            cfl_ratio_check: None,
        },
    )
    .unwrap();
    let explicit_failed = match explicit.run(sq_norm, &[0.4]) {
        Err(SchemeError::NonFiniteValue { .. }) => true,
        Err(e) => panic!("unexpected error: {e}"),
        Ok(traj) => traj.uniform_bound_excess() > 1e-10,
    };
    println!(
        "[acceptance] criterion 7: implicit within bound (excess {implicit_excess:.3e}) — PASS; \
         explicit destabilization at ratio {:.3}: {} ({:.2}s)",
        tau / h,
        if explicit_failed {
            "observed — PASS"
        } else {
            "NOT observed — FAIL (measured per-step amplification 0.975 < 1; \
             the scheme is stable here, see the decisions ledger)"
        },
        start.elapsed().as_secs_f64()
    );
    assert!(
        explicit_failed,
        "explicit run at ratio 1 neither triggered the blow-up detector nor violated \
         the uniform bound"
    );
}

#[test]
fn c8_boundary_layer_demo() {
    let start = Instant::now();
    let cfg = ExperimentConfig::from_file(&config_path("boundary_demo.conf")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let outcome = cmd_boundary_demo(&cfg, &dir.path().join("bd")).unwrap();
    assert!(
        outcome.dirichlet_quotient > outcome.extrapolation_quotient,
        "no boundary layer: dirichlet {} vs extrapolation {}",
        outcome.dirichlet_quotient,
        outcome.extrapolation_quotient
    );
    assert!(outcome.quotient_ratio > 1.0);
    println!(
        "[acceptance] criterion 8 PASS: boundary-adjacent quotient {:.3} (prescribed values) \
         > {:.5} (linear extrapolation), ratio {:.0} ({:.2}s)",
        outcome.dirichlet_quotient,
        outcome.extrapolation_quotient,
        outcome.quotient_ratio,
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn c9_calculus_property_suites() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc_9);
    let tensors = [
        MetricTensor::Average,
        MetricTensor::Logarithmic,
        MetricTensor::Harmonic,
        MetricTensor::Convex(ConvexWeights::new(0.25, 0.5, 0.25).unwrap()),
    ];
    // metric tensor properties at 1000 samples per tensor
    for tensor in &tensors {
        for _ in 0..1000 {
            let (t, r) = (rng.gen_range(1e-9..1.0), rng.gen_range(1e-9..1.0));
            let g = tensor.eval(t, r).unwrap();
            assert!(t.min(r) - 1e-12 <= g && g <= t.max(r) + 1e-12);
            assert!((g - tensor.eval(r, t).unwrap()).abs() <= 1e-12);
            let lam = rng.gen_range(0.0..2.0);
            assert!((tensor.eval(lam * t, lam * r).unwrap() - lam * g).abs() <= 1e-12);
            let (t2, r2) = (rng.gen_range(1e-9..1.0), rng.gen_range(1e-9..1.0));
            let mid = tensor.eval(0.5 * (t + t2), 0.5 * (r + r2)).unwrap();
            assert!(mid >= 0.5 * (g + tensor.eval(t2, r2).unwrap()) - 1e-12);
            // continuity toward the axes: values shrink with the argument
            let r3 = rng.gen_range(0.1..1.0);
            assert!(tensor.eval(1e-12, r3).unwrap() <= tensor.eval(1e-4, r3).unwrap() + 1e-12);
        }
    }
    // exact logarithmic identity
    for _ in 0..1000 {
        let (t, r) = (rng.gen_range(1e-6..1.0), rng.gen_range(1e-6..1.0));
        if t != r {
            let lhs = MetricTensor::Logarithmic.eval(t, r).unwrap() * (t.ln() - r.ln());
            assert!((lhs - (t - r)).abs() <= 1e-12);
        }
    }
    // adjointness of gradient and divergence on 200 random instances
    let graphs = [
        Graph::complete(3),
        Graph::new(4, {
            let mut w = vec![0.0; 16];
            for (i, j, v) in [(0, 1, 0.5), (1, 2, 2.0), (2, 3, 1.0), (0, 3, 0.25)] {
                w[i * 4 + j] = v;
                w[j * 4 + i] = v;
            }
            w
        })
        .unwrap(),
    ];
    for _ in 0..200 {
        let graph = &graphs[rng.gen_range(0..graphs.len())];
        let d = graph.vertex_count();
        let tensor = tensors[rng.gen_range(0..tensors.len())];
        let xi = random_truncated_point(d, 0.0, &mut rng);
        let v = random_skew(&mut rng, d, 1.0);
        let phi: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs = inner_product(graph, &tensor, &xi, &graph_gradient(graph, &phi), &v);
        let dot: f64 = phi
            .iter()
            .zip(divergence(graph, &tensor, &xi, &v))
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs + dot).abs() <= 1e-12);
    }
    // transform round trip on 1000 points
    for _ in 0..1000 {
        let d = rng.gen_range(2..=5);
        let eps = if rng.gen_bool(0.5) { 0.0 } else { 0.01 };
        let xi = random_truncated_point(d, eps, &mut rng);
        let back = pi_inverse(&pi_forward(&xi, eps).unwrap(), eps).unwrap();
        for (a, b) in xi.coords().iter().zip(back.coords()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
    // semigroup property and mass conservation of the noise oracle
    for graph in &graphs {
        let gen = hje_core::generator(graph);
        let d = graph.vertex_count();
        for _ in 0..20 {
            let (t, s) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let ts = gen.transition(t + s);
            let a = gen.transition(t);
            let b = gen.transition(s);
            for i in 0..d {
                for j in 0..d {
                    let prod: f64 = (0..d).map(|l| a[i * d + l] * b[l * d + j]).sum();
                    assert!((ts[i * d + j] - prod).abs() <= 1e-10);
                }
            }
            let xi = random_truncated_point(d, 0.0, &mut rng);
            let evolved = gen.evolve(t, xi.coords());
            assert!((evolved.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
    // noise bound for the logarithmic tensor
    let tri = Graph::complete(3);
    let cap = tri.max_sqrt_weight() * 3.0;
    for _ in 0..1000 {
        let xi = random_truncated_point(3, 0.0, &mut rng);
        let p = random_skew(&mut rng, 3, 1.0);
        let val = noise_term(&tri, &MetricTensor::Logarithmic, &xi, &p).unwrap();
        assert!(val.abs() <= cap * p.l2_norm() + 1e-12);
    }
    // information functional floor
    for _ in 0..200 {
        let d = rng.gen_range(2..=5);
        let xi = random_truncated_point(d, 0.001, &mut rng);
        assert!(information_functional(&xi).unwrap() >= (d * d) as f64 - 1e-9);
    }
    println!(
        "[acceptance] criterion 9 PASS: tensor properties, logarithmic identity, adjointness, \
         transform round trip, semigroup and mass conservation all within tolerance ({:.2}s)",
        start.elapsed().as_secs_f64()
    );
}
