//! Continuous Hamiltonians and monotone discrete Hamiltonians.
//!
//! The continuous family is `H(xi, p) = a(xi) * |p|_xi^kappa` with a pluggable
//! coefficient. Two discrete Hamiltonians are provided: an Osher-Sethian type
//! built from one-sided clamps of the forward/backward arguments, and a
//! Lax-Friedrichs type with per-edge dissipation. Both carry the upwinded
//! discrete noise term, selected by comparing endpoint masses, so that the
//! two-argument form collapses exactly to `H - lambda1 * O_xi` on the
//! diagonal.

use crate::calculus::{inner_product, noise_term, CalculusError, MetricTensor, SkewField};
use crate::graph::Graph;
use crate::mesh::SimplexPoint;
use rand::Rng;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HamError {
    #[error("evaluation at a boundary point (coordinate {0} is zero)")]
    BoundaryPoint(usize),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

/// Coefficient `a(xi)` multiplying the norm power.
#[derive(Clone)]
pub enum CoefficientFn {
    /// `(sum 1/xi_i)^(-kappa)`
    InverseInformationPower { kappa: f64 },
    /// `(sum xi_i^(-theta))^(-2)`
    InverseThetaPower { theta: f64 },
    /// `(sum log xi_i)^(-2)`
    LogPower,
    /// User-supplied evaluator over simplex coordinates.
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl fmt::Debug for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InverseInformationPower { kappa } => {
                write!(f, "InverseInformationPower {{ kappa: {kappa} }}")
            }
            Self::InverseThetaPower { theta } => {
                write!(f, "InverseThetaPower {{ theta: {theta} }}")
            }
            Self::LogPower => write!(f, "LogPower"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl CoefficientFn {
    /// Evaluates the coefficient; coordinates must be strictly positive for
    /// the built-in kinds.
    pub fn eval(&self, xi: &[f64]) -> f64 {
        match self {
            Self::InverseInformationPower { kappa } => {
                let info: f64 = xi.iter().map(|c| 1.0 / c).sum();
                info.powf(-kappa)
            }
            Self::InverseThetaPower { theta } => {
                let s: f64 = xi.iter().map(|c| c.powf(-theta)).sum();
                s.powi(-2)
            }
            Self::LogPower => {
                let s: f64 = xi.iter().map(|c| c.ln()).sum();
                s.powi(-2)
            }
            Self::Custom(f) => f(xi),
        }
    }
}

/// Continuous Hamiltonian acting on a state and a skew field.
#[derive(Debug, Clone)]
pub enum Hamiltonian {
    Zero,
    /// `a(xi) * |p|_xi^kappa`, `kappa > 1`.
    PowerNorm { kappa: f64, coeff: CoefficientFn },
}

impl Hamiltonian {
    /// Power-norm Hamiltonian with the inverse-information coefficient tied
    /// to the same exponent.
    pub fn inverse_information(kappa: f64) -> Self {
        Self::PowerNorm {
            kappa,
            coeff: CoefficientFn::InverseInformationPower { kappa },
        }
    }

    /// Evaluates `H(xi, p)`. Power-norm kinds require all coordinates
    /// strictly positive.
    pub fn eval(
        &self,
        graph: &Graph,
        tensor: &MetricTensor,
        xi: &SimplexPoint,
        p: &SkewField,
    ) -> Result<f64, HamError> {
        match self {
            Self::Zero => Ok(0.0),
            Self::PowerNorm { kappa, coeff } => {
                if let Some(i) = xi.coords().iter().position(|&c| c <= 0.0) {
                    return Err(HamError::BoundaryPoint(i + 1));
                }
                let s = inner_product(graph, tensor, xi, p, p).max(0.0);
                Ok(coeff.eval(xi.coords()) * s.powf(kappa / 2.0))
            }
        }
    }
}

/// Flavor of the discrete Hamiltonian.
#[derive(Debug, Clone)]
pub enum DiscreteKind {
    /// One-sided clamp form: squares of negative-part forward and
    /// positive-part backward arguments, edge-weighted, raised to kappa/2.
    OsherSethian,
    /// Central evaluation minus per-pair dissipation `gamma_jk (p_jk - q_jk)`.
    LaxFriedrichs { gamma: Vec<f64> },
}

/// Discrete Hamiltonian `G(xi, P, Q)` with the upwinded noise term.
#[derive(Debug, Clone)]
pub struct DiscreteHamiltonian {
    graph: Graph,
    tensor: MetricTensor,
    base: Hamiltonian,
    kind: DiscreteKind,
    /// Noise intensity multiplying the upwinded noise part.
    lambda1: f64,
}

impl DiscreteHamiltonian {
    pub fn new(
        graph: Graph,
        tensor: MetricTensor,
        base: Hamiltonian,
        kind: DiscreteKind,
        lambda1: f64,
    ) -> Self {
        if let DiscreteKind::LaxFriedrichs { gamma } = &kind {
            assert_eq!(gamma.len(), graph.vertex_count() * (graph.vertex_count() - 1) / 2);
            assert!(gamma.iter().all(|&g| g >= 0.0));
        }
        Self {
            graph,
            tensor,
            base,
            kind,
            lambda1,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn tensor(&self) -> &MetricTensor {
        &self.tensor
    }

    pub fn base(&self) -> &Hamiltonian {
        &self.base
    }

    pub fn kind(&self) -> &DiscreteKind {
        &self.kind
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Evaluates `G(xi, P, Q)` where `P` and `Q` hold the forward and
    /// backward difference arguments.
    pub fn eval(&self, xi: &SimplexPoint, p: &SkewField, q: &SkewField) -> Result<f64, HamError> {
        let h_part = match &self.kind {
            DiscreteKind::OsherSethian => self.osher_sethian(xi, p, q)?,
            DiscreteKind::LaxFriedrichs { gamma } => {
                let mid = p.add(q).scale(0.5);
                let mut val = self.base.eval(&self.graph, &self.tensor, xi, &mid)?;
                for (pos, _) in self.graph.pairs().enumerate() {
                    val -= gamma[pos] * (p.upper()[pos] - q.upper()[pos]);
                }
                val
            }
        };
        Ok(h_part + self.lambda1 * self.noise_part(xi, p, q)?)
    }

    fn osher_sethian(
        &self,
        xi: &SimplexPoint,
        p: &SkewField,
        q: &SkewField,
    ) -> Result<f64, HamError> {
        let Hamiltonian::PowerNorm { kappa, coeff } = &self.base else {
            return Ok(0.0);
        };
        let c = xi.coords();
        if let Some(i) = c.iter().position(|&v| v <= 0.0) {
            return Err(HamError::BoundaryPoint(i + 1));
        }
        let mut s = 0.0;
        for (pos, (j, k)) in self.graph.pairs().enumerate() {
            if self.graph.weight(j, k) > 0.0 {
                let pm = (-p.upper()[pos]).max(0.0);
                let qp = q.upper()[pos].max(0.0);
                s += self.tensor.eval_nonneg(c[j - 1], c[k - 1]) * (pm * pm + qp * qp);
            }
        }
        Ok(coeff.eval(c) * s.powf(kappa / 2.0))
    }

    /// Upwinded noise part: per edge, `sqrt(w) g (log xi_j - log xi_k)` times
    /// the forward argument when `xi_j <= xi_k` and the backward one
    /// otherwise. At a tie the prefactor vanishes, so the selection is
    /// value-irrelevant.
    fn noise_part(&self, xi: &SimplexPoint, p: &SkewField, q: &SkewField) -> Result<f64, HamError> {
        if self.lambda1 == 0.0 {
            return Ok(0.0);
        }
        let c = xi.coords();
        let mut acc = 0.0;
        for (pos, (j, k)) in self.graph.pairs().enumerate() {
            let w = self.graph.sqrt_weight(j, k);
            if w > 0.0 {
                let flux = self.tensor.log_flux(c[j - 1], c[k - 1]).map_err(|e| match e {
                    CalculusError::SingularLogAtBoundary(which) => {
                        HamError::BoundaryPoint(if which == 0 { j } else { k })
                    }
                    other => HamError::Calculus(other),
                })?;
                let arg = if c[j - 1] <= c[k - 1] {
                    p.upper()[pos]
                } else {
                    q.upper()[pos]
                };
                acc += w * flux * arg;
            }
        }
        Ok(acc)
    }

    /// `G(xi, P, P)`, which equals `H(xi, P) - lambda1 * O_xi(P)`.
    pub fn consistency_gap(&self, xi: &SimplexPoint, p: &SkewField) -> Result<f64, HamError> {
        let diag = self.eval(xi, p, p)?;
        let h = self.base.eval(&self.graph, &self.tensor, xi, p)?;
        let noise = noise_term(&self.graph, &self.tensor, xi, p)?;
        Ok(diag - (h - self.lambda1 * noise))
    }
}

/// Default Lax-Friedrichs dissipation: half the largest sampled magnitude of
/// the partial derivative of `H` in each pair entry, estimated by central
/// finite differences over states in `xi_samples` and fields with sup-norm at
/// most `r`.
pub fn lf_gamma_default(
    graph: &Graph,
    tensor: &MetricTensor,
    base: &Hamiltonian,
    xi_samples: &[SimplexPoint],
    r: f64,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let d = graph.vertex_count();
    let n_pairs = d * (d - 1) / 2;
    if matches!(base, Hamiltonian::Zero) || r <= 0.0 {
        return vec![0.0; n_pairs];
    }
    let delta = (1e-6 * r.max(1.0)).min(0.5 * r);
    let lim = r - delta;
    let mut fields: Vec<SkewField> = vec![
        SkewField::zero(d),
        SkewField::from_fn(d, |_, _| lim),
        SkewField::from_fn(d, |_, _| -lim),
    ];
    for _ in 0..16 {
        fields.push(SkewField::from_fn(d, |_, _| rng.gen_range(-lim..lim)));
    }
    let mut gamma = vec![0.0; n_pairs];
    for xi in xi_samples {
        for field in &fields {
            for pos in 0..n_pairs {
                let mut hi = field.clone();
                hi.upper_mut()[pos] += delta;
                let mut lo = field.clone();
                lo.upper_mut()[pos] -= delta;
                let dh = (base.eval(graph, tensor, xi, &hi).unwrap_or(0.0)
                    - base.eval(graph, tensor, xi, &lo).unwrap_or(0.0))
                    / (2.0 * delta);
                let cand = 0.5 * dh.abs();
                if cand > gamma[pos] {
                    gamma[pos] = cand;
                }
            }
        }
    }
    gamma
}

/// Outcome of the time-step ratio check against the sampled Lipschitz bound.
#[derive(Debug, Clone, Copy)]
pub struct CflReport {
    /// Sampled Lipschitz constant of the discrete Hamiltonian.
    pub lipschitz: f64,
    /// Admissible ratio bound `1 / (2 C (d^2 - d) max sqrt(w))`.
    pub bound: f64,
    /// Configured ratio `tau / h`.
    pub ratio: f64,
    pub pass: bool,
}

/// Estimates the Lipschitz constant of `G` in its field arguments over the
/// ball of Frobenius radius `d * r`, with states sampled from the
/// eps-truncated simplex, and compares the time-step ratio against
/// `1 / (2 C (d^2 - d) max sqrt(w))`.
pub fn cfl_validate(
    ham: &DiscreteHamiltonian,
    ratio: f64,
    eps: f64,
    r: f64,
    rng: &mut impl Rng,
) -> CflReport {
    let d = ham.graph().vertex_count();
    let radius = d as f64 * r;
    let mut lipschitz = 0.0f64;
    let n_xi = 60;
    for _ in 0..n_xi {
        let xi = random_truncated_point(d, eps, rng);
        for _ in 0..20 {
            let p = random_ball_field(d, radius, rng);
            let q = random_ball_field(d, radius, rng);
            // a far pair and a near pair of perturbed arguments
            for scale in [0.3, 1e-4] {
                let dp = random_ball_field(d, radius * scale, rng);
                let dq = random_ball_field(d, radius * scale, rng);
                let p2 = clamp_ball(p.add(&dp), radius);
                let q2 = clamp_ball(q.add(&dq), radius);
                let denom = p.sub(&p2).l2_norm() + q.sub(&q2).l2_norm();
                if denom < 1e-14 {
                    continue;
                }
                let a = ham.eval(&xi, &p, &q);
                let b = ham.eval(&xi, &p2, &q2);
                if let (Ok(a), Ok(b)) = (a, b) {
                    lipschitz = lipschitz.max((a - b).abs() / denom);
                }
            }
        }
    }
    let denom = 2.0 * lipschitz * (d * d - d) as f64 * ham.graph().max_sqrt_weight();
    let bound = if denom == 0.0 {
        f64::INFINITY
    } else {
        1.0 / denom
    };
    CflReport {
        lipschitz,
        bound,
        ratio,
        pass: ratio <= bound,
    }
}

/// Uniformly-weighted random point of the eps-truncated simplex.
pub fn random_truncated_point(d: usize, eps: f64, rng: &mut impl Rng) -> SimplexPoint {
    let raw: Vec<f64> = (0..d).map(|_| -rng.gen_range(1e-12..1.0f64).ln()).collect();
    let sum: f64 = raw.iter().sum();
    let coords = raw
        .iter()
        .map(|&x| eps + (1.0 - d as f64 * eps) * x / sum)
        .collect();
    SimplexPoint::new(coords).expect("truncated point is valid")
}

fn random_ball_field(d: usize, radius: f64, rng: &mut impl Rng) -> SkewField {
    let f = SkewField::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
    let norm = f.l2_norm();
    if norm == 0.0 {
        return f;
    }
    let target = rng.gen_range(0.0..radius);
    f.scale(target / norm)
}

fn clamp_ball(f: SkewField, radius: f64) -> SkewField {
    let norm = f.l2_norm();
    if norm > radius {
        f.scale(radius / norm)
    } else {
        f
    }
}
