//! Time steppers for the discretized equation.
//!
//! One explicit monotone step updates every interior node from a frozen copy
//! of the previous values, `U_i - tau F(xi_i) - tau G(xi_i, D+ U_i, D- U_i)`,
//! then refills the boundary slots by extrapolation from the interior. The
//! fully implicit step solves the same relation with the differences taken at
//! the new time level, by fixed-point sweeps with a bounded iteration budget.
//! Boundary values are derived data: they are recomputed from interior values
//! after every step (and every sweep), never carried as state.

use crate::calculus::SkewField;
use crate::hamiltonian::{DiscreteHamiltonian, DiscreteKind, HamError, Hamiltonian};
use crate::mesh::{Mesh, MeshError, MeshIndex, OffsetVector, ShiftOutcome};
use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("index is not interior")]
    NotInterior,
    #[error("CFL check failed: ratio {ratio} exceeds bound {bound}")]
    CflViolation { ratio: f64, bound: f64 },
    #[error("non-finite or exploding value detected at step {step}")]
    NonFiniteValue { step: usize },
    #[error("no defined neighbor available for boundary extrapolation")]
    NoDefinedNeighbor,
    #[error("invalid scheme configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Ham(#[from] HamError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Real values attached to every mesh node, boundary slots included.
#[derive(Debug, Clone)]
pub struct GridFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn constant(mesh: Arc<Mesh>, c: f64) -> Self {
        let values = vec![c; mesh.node_count()];
        Self { mesh, values }
    }

    /// Samples a function of the simplex coordinates at every node.
    pub fn sample(mesh: Arc<Mesh>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..mesh.node_count()).map(|r| f(mesh.point(r))).collect();
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn interior_sup_norm(&self) -> f64 {
        self.mesh
            .interior_ranks()
            .iter()
            .fold(0.0, |m, &r| m.max(self.values[r].abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// How boundary slots are populated after a step.
#[derive(Clone)]
pub enum BoundaryMode {
    /// Copy the nearest defined value (ties broken by smallest rank).
    Constant,
    /// Two-point reflection through the nearest defined node; falls back to
    /// the constant rule where the reflected node is undefined (corners).
    Linear,
    /// Prescribed boundary values (diagnostic use only).
    Dirichlet(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl BoundaryMode {
    pub fn dirichlet_constant(value: f64) -> Self {
        Self::Dirichlet(Arc::new(move |_| value))
    }
}

impl fmt::Debug for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant => write!(f, "Constant"),
            Self::Linear => write!(f, "Linear"),
            Self::Dirichlet(_) => write!(f, "Dirichlet(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum FillStep {
    Copy { dst: usize, src: usize },
    Reflect { dst: usize, near: usize, far: usize },
    Fixed { dst: usize, value: f64 },
}

/// Precomputed boundary fill: one step per boundary node, ordered by rank.
/// Within a pass, later nodes may draw on boundary values defined earlier in
/// the same pass (relevant near corners).
#[derive(Debug, Clone)]
pub struct BoundaryPlan {
    steps: Vec<FillStep>,
    boundary_ranks: Vec<usize>,
}

impl BoundaryPlan {
    pub fn build(mesh: &Mesh, mode: &BoundaryMode) -> Result<Self, SchemeError> {
        let boundary_ranks = mesh.boundary_ranks().to_vec();
        if let BoundaryMode::Dirichlet(f) = mode {
            let steps = boundary_ranks
                .iter()
                .map(|&dst| FillStep::Fixed {
                    dst,
                    value: f(mesh.point(dst)),
                })
                .collect();
            return Ok(Self {
                steps,
                boundary_ranks,
            });
        }
        if mesh.interior_ranks().is_empty() {
            return Err(SchemeError::NoDefinedNeighbor);
        }
        // the anchor is always the nearest interior node; chaining boundary
        // values into the anchor search would let extrapolation errors
        // cascade along the boundary edges. Already-filled boundary slots may
        // only serve as the reflection partner (needed near corners).
        let mut interior_mask = vec![false; mesh.node_count()];
        let mut defined = vec![false; mesh.node_count()];
        for &r in mesh.interior_ranks() {
            interior_mask[r] = true;
            defined[r] = true;
        }
        let mut steps = Vec::with_capacity(boundary_ranks.len());
        for &dst in &boundary_ranks {
            let near = nearest_defined(mesh, dst, &interior_mask)?;
            let step = match mode {
                BoundaryMode::Constant => FillStep::Copy { dst, src: near },
                BoundaryMode::Linear => {
                    // reflect the boundary node through its interior anchor
                    let far: Vec<i64> = mesh
                        .levels(near)
                        .iter()
                        .zip(mesh.levels(dst))
                        .map(|(&a, &b)| 2 * i64::from(a) - i64::from(b))
                        .collect();
                    match mesh.rank_of_signed_levels(&far) {
                        Some(fr) if defined[fr] => FillStep::Reflect {
                            dst,
                            near,
                            far: fr,
                        },
                        _ => FillStep::Copy { dst, src: near },
                    }
                }
                BoundaryMode::Dirichlet(_) => unreachable!(),
            };
            steps.push(step);
            defined[dst] = true;
        }
        Ok(Self {
            steps,
            boundary_ranks,
        })
    }

    /// Recomputes every boundary slot in plan order.
    pub fn fill(&self, values: &mut [f64]) {
        for step in &self.steps {
            match *step {
                FillStep::Copy { dst, src } => values[dst] = values[src],
                FillStep::Reflect { dst, near, far } => {
                    values[dst] = 2.0 * values[near] - values[far];
                }
                FillStep::Fixed { dst, value } => values[dst] = value,
            }
        }
    }

    /// Extrapolated value for one boundary node. Sources must already hold
    /// their values (run [`BoundaryPlan::fill`] for chained corner nodes).
    pub fn extrapolate(&self, values: &[f64], boundary_rank: usize) -> Result<f64, SchemeError> {
        let pos = self
            .boundary_ranks
            .binary_search(&boundary_rank)
            .map_err(|_| SchemeError::NotInterior)?;
        Ok(match self.steps[pos] {
            FillStep::Copy { src, .. } => values[src],
            FillStep::Reflect { near, far, .. } => 2.0 * values[near] - values[far],
            FillStep::Fixed { value, .. } => value,
        })
    }
}

/// Nearest defined node in simplex distance; ties broken by smallest rank.
/// Distances are compared with an exact integer quadratic form on index
/// displacements, so tie detection is exact.
fn nearest_defined(mesh: &Mesh, from: usize, defined: &[bool]) -> Result<usize, SchemeError> {
    let k = mesh.dim() - 1;
    let n = i64::from(mesh.n_levels());
    let center: Vec<i64> = mesh.levels(from).iter().map(|&v| i64::from(v)).collect();
    let mut best: Option<(i64, usize)> = None;
    let mut radius = 1i64;
    loop {
        // enumerate admissible tuples in the L-inf box, in lexicographic
        // (= rank) order, so the first minimum found has the smallest rank
        let lo: Vec<i64> = center.iter().map(|c| (c - radius).max(0)).collect();
        let hi: Vec<i64> = center.iter().map(|c| (c + radius).min(n)).collect();
        let mut cur = lo.clone();
        'outer: loop {
            let admissible = cur.windows(2).all(|w| w[0] <= w[1]);
            if admissible {
                if let Some(rank) = mesh.rank_of_signed_levels(&cur) {
                    if defined[rank] && rank != from {
                        let q = displacement_sq(&cur, &center);
                        if best.map_or(true, |(bq, _)| q < bq) {
                            best = Some((q, rank));
                        }
                    }
                }
            }
            // next tuple in the box
            let mut l = k;
            loop {
                if l == 0 {
                    break 'outer;
                }
                if cur[l - 1] < hi[l - 1] {
                    cur[l - 1] += 1;
                    for p in l..k {
                        cur[p] = lo[p];
                    }
                    break;
                }
                cur[l - 1] = lo[l - 1];
                l -= 1;
            }
        }
        // any point outside the box has squared distance > radius^2 / (d-1)
        if let Some((bq, rank)) = best {
            let outside_min = (radius + 1) * (radius + 1) / k as i64;
            if bq <= outside_min {
                return Ok(rank);
            }
        }
        if center.iter().all(|&c| c - radius <= 0 && c + radius >= n) {
            // the box already covers the whole mesh
            return best
                .map(|(_, rank)| rank)
                .ok_or(SchemeError::NoDefinedNeighbor);
        }
        radius += 1;
    }
}

/// Squared simplex distance between two level tuples, in units of h^2.
fn displacement_sq(a: &[i64], b: &[i64]) -> i64 {
    let k = a.len();
    let mut q = 0;
    let mut prev = 0;
    for l in 0..k {
        let delta = a[l] - b[l];
        let v = delta - prev;
        q += v * v;
        prev = delta;
    }
    q + prev * prev
}

/// Skew difference matrices `(D+, D-)` at an interior node: entry `(j,k)` is
/// `sqrt(w_jk)/h` times the forward (backward) difference along the pair
/// direction. Boundary slots of `u` are read as stored; refresh them with a
/// [`BoundaryPlan`] first when they may be stale.
pub fn difference_matrices(
    u: &GridFunction,
    index: &MeshIndex,
) -> Result<(SkewField, SkewField), SchemeError> {
    let mesh = u.mesh();
    let rank = mesh.rank(index).ok_or(SchemeError::NotInterior)?;
    if !mesh.is_interior(rank) {
        return Err(SchemeError::NotInterior);
    }
    let d = mesh.dim();
    let h = mesh.h();
    let graph = mesh.graph();
    let u_i = u.values()[rank];
    let mut fwd = SkewField::zero(d);
    let mut bwd = SkewField::zero(d);
    for off in OffsetVector::all_pairs(d) {
        let (j, k) = off.pair();
        let sw = graph.sqrt_weight(j, k);
        let uf = match mesh.shift(rank, &off, 1) {
            ShiftOutcome::Interior(r) => u.values()[r],
            ShiftOutcome::BoundaryExit(be) => {
                u.values()[be.rank.expect("one-cell move from interior is admissible")]
            }
        };
        let ub = match mesh.shift(rank, &off, -1) {
            ShiftOutcome::Interior(r) => u.values()[r],
            ShiftOutcome::BoundaryExit(be) => {
                u.values()[be.rank.expect("one-cell move from interior is admissible")]
            }
        };
        fwd.set(j, k, sw * (uf - u_i) / h);
        bwd.set(j, k, sw * (u_i - ub) / h);
    }
    Ok((fwd, bwd))
}

/// Time discretization kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    Explicit,
    Implicit { max_iters: u32, tol: f64 },
}

impl SchemeKind {
    /// Implicit stepping with the conventional budget: at most 10 sweeps to a
    /// sup-norm tolerance of 1e-6.
    pub fn implicit_default() -> Self {
        Self::Implicit {
            max_iters: 10,
            tol: 1e-6,
        }
    }
}

/// Time-stepping configuration. The horizon must be an integer number of
/// steps (within 1e-9).
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub tau: f64,
    pub t_end: f64,
    pub boundary: BoundaryMode,
    pub kind: SchemeKind,
    /// When set, explicit stepping refuses ratios `tau/h` above this bound.
    pub cfl_ratio_check: Option<f64>,
}

impl SchemeConfig {
    pub fn n_steps(&self) -> Result<usize, SchemeError> {
        if !(self.tau > 0.0) {
            return Err(SchemeError::BadConfig(format!(
                "time step must be positive, got {}",
                self.tau
            )));
        }
        if self.t_end < 0.0 {
            return Err(SchemeError::BadConfig(format!(
                "horizon must be nonnegative, got {}",
                self.t_end
            )));
        }
        let steps = self.t_end / self.tau;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(SchemeError::BadConfig(format!(
                "horizon / time step = {steps} is not an integer"
            )));
        }
        Ok(steps.round() as usize)
    }
}

/// Snapshots and per-step audit data from a run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `(time, state)` at the requested probe times.
    pub snapshots: Vec<(f64, GridFunction)>,
    /// Sup-norm over interior nodes after each step, `interior_max[n]` at `t_n`.
    pub interior_max: Vec<f64>,
    /// Sup-norm over all nodes after each step.
    pub full_max: Vec<f64>,
    /// Fixed-point residual per implicit step.
    pub residuals: Vec<f64>,
    /// Sweep count per implicit step.
    pub iterations: Vec<u32>,
    pub u0_sup_norm: f64,
    pub potential_sup_norm: f64,
    pub tau: f64,
}

impl Trajectory {
    /// Worst signed excess of the interior sup-norm over
    /// `|U0|_inf + t_n |F|_inf`; nonpositive means the bound held.
    pub fn uniform_bound_excess(&self) -> f64 {
        self.interior_max
            .iter()
            .enumerate()
            .map(|(n, &m)| m - (self.u0_sup_norm + n as f64 * self.tau * self.potential_sup_norm))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Precomputed engine for one mesh / discrete Hamiltonian / potential triple.
///
/// Per-node metric weights, upwind prefactors and stencil targets are frozen
/// at construction; each step is pure arithmetic over the value array, with
/// node updates running in parallel off a frozen copy of the previous iterate.
pub struct Solver {
    mesh: Arc<Mesh>,
    ham: DiscreteHamiltonian,
    cfg: SchemeConfig,
    plan: BoundaryPlan,
    n_pairs: usize,
    kappa_half: f64,
    /// sqrt(w)/h per pair
    swh: Vec<f64>,
    /// LF dissipation per pair (empty for the Osher-Sethian kind)
    gamma: Vec<f64>,
    lax_friedrichs: bool,
    /// per interior node: coefficient a(xi), or 0 for the zero Hamiltonian
    coeff: Vec<f64>,
    /// per interior node x pair: metric weight, zeroed on non-edges
    g_edge: Vec<f64>,
    /// per interior node x pair: lambda1 * sqrt(w) * g * (log xi_j - log xi_k)
    noise_c: Vec<f64>,
    /// per interior node x pair: true when the forward argument is upwind
    upwind_fwd: Vec<bool>,
    /// per interior node x pair: stencil target ranks
    fwd: Vec<u32>,
    bwd: Vec<u32>,
    /// potential at interior nodes
    f_int: Vec<f64>,
    potential_sup: f64,
    /// damped fixed-point sweeps for the implicit solve (see implicit_step)
    damped: bool,
}

impl Solver {
    pub fn new(
        mesh: Arc<Mesh>,
        ham: DiscreteHamiltonian,
        potential: impl Fn(&[f64]) -> f64,
        cfg: SchemeConfig,
    ) -> Result<Self, SchemeError> {
        if ham.graph().weights() != mesh.graph().weights() {
            return Err(SchemeError::BadConfig(
                "discrete Hamiltonian and mesh use different graphs".into(),
            ));
        }
        if mesh.interior_ranks().is_empty() {
            return Err(SchemeError::BadConfig(
                "mesh has no interior nodes".into(),
            ));
        }
        cfg.n_steps()?;
        let plan = BoundaryPlan::build(&mesh, &cfg.boundary)?;
        let d = mesh.dim();
        let n_pairs = d * (d - 1) / 2;
        let graph = mesh.graph();
        let pairs = OffsetVector::all_pairs(d);
        let swh: Vec<f64> = pairs
            .iter()
            .map(|o| {
                let (j, k) = o.pair();
                graph.sqrt_weight(j, k) / mesh.h()
            })
            .collect();
        let (lax_friedrichs, gamma) = match ham.kind() {
            DiscreteKind::OsherSethian => (false, Vec::new()),
            DiscreteKind::LaxFriedrichs { gamma } => (true, gamma.clone()),
        };
        let kappa_half = match ham.base() {
            Hamiltonian::Zero => 1.0,
            Hamiltonian::PowerNorm { kappa, .. } => kappa / 2.0,
        };

        let n_int = mesh.interior_ranks().len();
        let mut coeff = Vec::with_capacity(n_int);
        let mut g_edge = Vec::with_capacity(n_int * n_pairs);
        let mut noise_c = Vec::with_capacity(n_int * n_pairs);
        let mut upwind_fwd = Vec::with_capacity(n_int * n_pairs);
        let mut fwd = Vec::with_capacity(n_int * n_pairs);
        let mut bwd = Vec::with_capacity(n_int * n_pairs);
        let mut f_int = Vec::with_capacity(n_int);
        let lambda1 = ham.lambda1();
        let tensor = ham.tensor();
        for &rank in mesh.interior_ranks() {
            let xi = mesh.point(rank);
            coeff.push(match ham.base() {
                Hamiltonian::Zero => 0.0,
                Hamiltonian::PowerNorm { coeff, .. } => coeff.eval(xi),
            });
            f_int.push(potential(xi));
            for off in &pairs {
                let (j, k) = off.pair();
                let (a, b) = (xi[j - 1], xi[k - 1]);
                let edge = graph.weight(j, k) > 0.0;
                g_edge.push(if edge { tensor.eval_nonneg(a, b) } else { 0.0 });
                let flux = if edge && lambda1 != 0.0 {
                    tensor
                        .log_flux(a, b)
                        .map_err(HamError::Calculus)?
                } else {
                    0.0
                };
                noise_c.push(lambda1 * graph.sqrt_weight(j, k) * flux);
                upwind_fwd.push(a <= b);
                let f_rank = match mesh.shift(rank, off, 1) {
                    ShiftOutcome::Interior(r) => r,
                    ShiftOutcome::BoundaryExit(be) => {
                        be.rank.expect("one-cell move from interior is admissible")
                    }
                };
                let b_rank = match mesh.shift(rank, off, -1) {
                    ShiftOutcome::Interior(r) => r,
                    ShiftOutcome::BoundaryExit(be) => {
                        be.rank.expect("one-cell move from interior is admissible")
                    }
                };
                fwd.push(f_rank as u32);
                bwd.push(b_rank as u32);
            }
        }
        let potential_sup = (0..mesh.node_count())
            .map(|r| potential(mesh.point(r)).abs())
            .fold(0.0, f64::max);
        Ok(Self {
            mesh,
            ham,
            cfg,
            plan,
            n_pairs,
            kappa_half,
            swh,
            gamma,
            lax_friedrichs,
            coeff,
            g_edge,
            noise_c,
            upwind_fwd,
            fwd,
            bwd,
            f_int,
            potential_sup,
            damped: true,
        })
    }

    /// Toggles locally damped fixed-point sweeps for the implicit solve.
    /// Damping (the default) makes every sweep a sup-norm contraction toward
    /// the same fixed point at any time-step ratio; plain sweeps converge
    /// under small ratios but diverge far beyond the CFL regime.
    pub fn with_damped_sweeps(mut self, damped: bool) -> Self {
        self.damped = damped;
        self
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn hamiltonian(&self) -> &DiscreteHamiltonian {
        &self.ham
    }

    pub fn boundary_plan(&self) -> &BoundaryPlan {
        &self.plan
    }

    /// One pass over the interior: writes `base_i - tau (F_i + G_i(Dv))` into
    /// `rhs` (indexed like the interior list) and the per-node sweep Lipschitz
    /// bound `tau * l_i` into `lip`.
    fn compute_rhs(&self, base: &[f64], v: &[f64], rhs: &mut [f64], lip: &mut [f64]) {
        let np = self.n_pairs;
        let tau = self.cfg.tau;
        let interior = self.mesh.interior_ranks();
        let kh = self.kappa_half;
        rhs.par_iter_mut()
            .zip(lip.par_iter_mut())
            .enumerate()
            .for_each(|(pos, (rhs_i, lip_i))| {
                let rank = interior[pos];
                let v_i = v[rank];
                let off = pos * np;
                let a = self.coeff[pos];
                let mut s = 0.0;
                let mut noise = 0.0;
                let mut lip_noise = 0.0;
                let mut hterm = 0.0;
                let mut diss = 0.0;
                if self.lax_friedrichs {
                    for e in 0..np {
                        let p = self.swh[e] * (v[self.fwd[off + e] as usize] - v_i);
                        let q = self.swh[e] * (v_i - v[self.bwd[off + e] as usize]);
                        let m = 0.5 * (p + q);
                        s += self.g_edge[off + e] * m * m;
                        diss += self.gamma[e] * (p - q);
                        let nc = self.noise_c[off + e];
                        noise += nc * if self.upwind_fwd[off + e] { p } else { q };
                        lip_noise +=
                            self.swh[e] * (nc.abs() + 2.0 * self.gamma[e]);
                        hterm += self.swh[e] * self.g_edge[off + e] * m.abs();
                    }
                } else {
                    for e in 0..np {
                        let p = self.swh[e] * (v[self.fwd[off + e] as usize] - v_i);
                        let q = self.swh[e] * (v_i - v[self.bwd[off + e] as usize]);
                        let pm = (-p).max(0.0);
                        let qp = q.max(0.0);
                        s += self.g_edge[off + e] * (pm * pm + qp * qp);
                        let nc = self.noise_c[off + e];
                        noise += nc * if self.upwind_fwd[off + e] { p } else { q };
                        lip_noise += self.swh[e] * nc.abs();
                        hterm += self.swh[e] * self.g_edge[off + e] * (pm + qp);
                    }
                }
                let (h_val, h_lip) = if a != 0.0 && s > 0.0 {
                    if kh == 1.0 {
                        (a * s, 2.0 * a * hterm)
                    } else {
                        (
                            a * s.powf(kh),
                            2.0 * kh * a * s.powf(kh - 1.0) * hterm,
                        )
                    }
                } else {
                    (0.0, 0.0)
                };
                let g_val = h_val - diss + noise;
                *rhs_i = base[rank] - tau * (self.f_int[pos] + g_val);
                *lip_i = tau * (lip_noise + h_lip);
            });
    }

    fn scatter_interior(&self, rhs: &[f64], out: &mut [f64]) {
        for (pos, &rank) in self.mesh.interior_ranks().iter().enumerate() {
            out[rank] = rhs[pos];
        }
    }

    fn check_finite(&self, values: &[f64], limit: f64, step: usize) -> Result<(), SchemeError> {
        let ok = values.iter().all(|v| v.is_finite() && v.abs() <= limit);
        if ok {
            Ok(())
        } else {
            Err(SchemeError::NonFiniteValue { step })
        }
    }

    fn blowup_limit(u0_sup: f64) -> f64 {
        1e6 * (u0_sup + 1.0)
    }

    /// One explicit monotone step.
    pub fn explicit_step(&self, u: &GridFunction) -> Result<GridFunction, SchemeError> {
        self.explicit_step_inner(u, Self::blowup_limit(u.sup_norm()), 0)
    }

    fn explicit_step_inner(
        &self,
        u: &GridFunction,
        limit: f64,
        step: usize,
    ) -> Result<GridFunction, SchemeError> {
        if let Some(bound) = self.cfg.cfl_ratio_check {
            let ratio = self.cfg.tau / self.mesh.h();
            if ratio > bound {
                return Err(SchemeError::CflViolation { ratio, bound });
            }
        }
        let n_int = self.mesh.interior_ranks().len();
        let mut rhs = vec![0.0; n_int];
        let mut lip = vec![0.0; n_int];
        self.compute_rhs(u.values(), u.values(), &mut rhs, &mut lip);
        let mut out = u.values().to_vec();
        self.scatter_interior(&rhs, &mut out);
        self.plan.fill(&mut out);
        self.check_finite(&out, limit, step)?;
        Ok(GridFunction {
            mesh: self.mesh.clone(),
            values: out,
        })
    }

    /// One implicit step: fixed-point sweeps on
    /// `V = U - tau F - tau G(xi, D+ V, D- V)` starting from `U`, stopping at
    /// the sup-norm tolerance or the iteration budget. Hitting the budget is
    /// not an error; the attained residual is reported.
    pub fn implicit_step(&self, u: &GridFunction) -> Result<(GridFunction, f64, u32), SchemeError> {
        self.implicit_step_inner(u, Self::blowup_limit(u.sup_norm()), 0)
    }

    fn implicit_step_inner(
        &self,
        u: &GridFunction,
        limit: f64,
        step: usize,
    ) -> Result<(GridFunction, f64, u32), SchemeError> {
        let SchemeKind::Implicit { max_iters, tol } = self.cfg.kind else {
            return Err(SchemeError::BadConfig(
                "implicit_step requires an implicit scheme configuration".into(),
            ));
        };
        let n_int = self.mesh.interior_ranks().len();
        let interior = self.mesh.interior_ranks();
        let mut v = u.values().to_vec();
        let mut rhs = vec![0.0; n_int];
        let mut lip = vec![0.0; n_int];
        let mut residual = 0.0f64;
        let mut iters = 0;
        for it in 1..=max_iters {
            iters = it;
            self.compute_rhs(u.values(), &v, &mut rhs, &mut lip);
            if self.damped {
                // per-node under-relaxation 1/(1 + tau l_i) keeps each sweep a
                // sup-norm contraction toward the same fixed point
                residual = 0.0;
                for (pos, &rank) in interior.iter().enumerate() {
                    let alpha = 1.0 / (1.0 + lip[pos]);
                    let next = (1.0 - alpha) * v[rank] + alpha * rhs[pos];
                    residual = residual.max((next - v[rank]).abs());
                    v[rank] = next;
                }
            } else {
                residual = 0.0;
                for (pos, &rank) in interior.iter().enumerate() {
                    residual = residual.max((rhs[pos] - v[rank]).abs());
                    v[rank] = rhs[pos];
                }
            }
            self.plan.fill(&mut v);
            self.check_finite(&v, limit, step)?;
            if residual <= tol {
                break;
            }
        }
        Ok((
            GridFunction {
                mesh: self.mesh.clone(),
                values: v,
            },
            residual,
            iters,
        ))
    }

    /// Advances the sampled initial condition over the configured horizon and
    /// returns the requested snapshots plus per-step audit data. Probe times
    /// are matched to the nearest step.
    pub fn run(
        &self,
        u0: impl Fn(&[f64]) -> f64,
        probes: &[f64],
    ) -> Result<Trajectory, SchemeError> {
        let n_steps = self.cfg.n_steps()?;
        let tau = self.cfg.tau;
        let mut u = GridFunction::sample(self.mesh.clone(), u0);
        let u0_sup = u.sup_norm();
        let limit = Self::blowup_limit(u0_sup);
        self.check_finite(u.values(), limit, 0)?;

        let mut probe_steps: Vec<usize> = probes
            .iter()
            .map(|&t| (t / tau).round().clamp(0.0, n_steps as f64) as usize)
            .collect();
        probe_steps.sort_unstable();
        probe_steps.dedup();
        if probes.is_empty() {
            probe_steps.push(n_steps);
        }

        let mut traj = Trajectory {
            snapshots: Vec::new(),
            interior_max: vec![u.interior_sup_norm()],
            full_max: vec![u.sup_norm()],
            residuals: Vec::new(),
            iterations: Vec::new(),
            u0_sup_norm: u0_sup,
            potential_sup_norm: self.potential_sup,
            tau,
        };
        if probe_steps.contains(&0) {
            traj.snapshots.push((0.0, u.clone()));
        }
        for n in 1..=n_steps {
            u = match self.cfg.kind {
                SchemeKind::Explicit => self.explicit_step_inner(&u, limit, n)?,
                SchemeKind::Implicit { .. } => {
                    let (next, residual, iters) = self.implicit_step_inner(&u, limit, n)?;
                    traj.residuals.push(residual);
                    traj.iterations.push(iters);
                    next
                }
            };
            traj.interior_max.push(u.interior_sup_norm());
            traj.full_max.push(u.sup_norm());
            if probe_steps.contains(&n) {
                traj.snapshots.push((n as f64 * tau, u.clone()));
            }
        }
        Ok(traj)
    }
}
