//! Metric tensors and first-order calculus on skew-symmetric edge fields.
//!
//! The inner product weights each edge contribution by a symmetric two-variable
//! function of the endpoint masses. Three built-in weights (average,
//! logarithmic, harmonic means) and their convex combinations are provided.
//! The individual-noise operator pairs a field against the graph gradient of
//! the coordinatewise logarithm; for the logarithmic weight the product
//! `g(t,r) * (log t - log r)` simplifies exactly to `t - r`, which removes the
//! boundary singularity and is used verbatim here.

use crate::graph::Graph;
use crate::mesh::SimplexPoint;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CalculusError {
    #[error("metric tensor argument is negative: {0}")]
    NegativeArgument(f64),
    #[error("logarithm is singular at a zero coordinate (vertex {0}) for this tensor")]
    SingularLogAtBoundary(usize),
    #[error("coordinate {0} is zero")]
    ZeroCoordinate(usize),
    #[error("convex-combination weights must be nonnegative and sum to 1")]
    BadConvexWeights,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Nonnegative weights over the three built-in tensors, summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexWeights {
    pub average: f64,
    pub logarithmic: f64,
    pub harmonic: f64,
}

impl ConvexWeights {
    pub fn new(average: f64, logarithmic: f64, harmonic: f64) -> Result<Self, CalculusError> {
        let ok = average >= 0.0
            && logarithmic >= 0.0
            && harmonic >= 0.0
            && (average + logarithmic + harmonic - 1.0).abs() <= 1e-12;
        if !ok {
            return Err(CalculusError::BadConvexWeights);
        }
        Ok(Self {
            average,
            logarithmic,
            harmonic,
        })
    }
}

/// Symmetric edge weight `g(t, r)` on the nonnegative quadrant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricTensor {
    /// `(t + r) / 2`
    Average,
    /// `(t - r) / (log t - log r)`, continuously extended by 0 at the axes
    Logarithmic,
    /// `2 / (1/t + 1/r)`, 0 at the axes
    Harmonic,
    Convex(ConvexWeights),
}

impl MetricTensor {
    /// Evaluates `g(t, r)`; arguments must be nonnegative.
    pub fn eval(&self, t: f64, r: f64) -> Result<f64, CalculusError> {
        if t < 0.0 {
            return Err(CalculusError::NegativeArgument(t));
        }
        if r < 0.0 {
            return Err(CalculusError::NegativeArgument(r));
        }
        Ok(self.eval_nonneg(t, r))
    }

    /// `g(t, r)` assuming `t, r >= 0`.
    pub(crate) fn eval_nonneg(&self, t: f64, r: f64) -> f64 {
        match self {
            MetricTensor::Average => 0.5 * (t + r),
            MetricTensor::Logarithmic => {
                if t == 0.0 || r == 0.0 {
                    0.0
                } else if t == r {
                    t
                } else {
                    (t - r) / (t.ln() - r.ln())
                }
            }
            MetricTensor::Harmonic => {
                if t == 0.0 || r == 0.0 {
                    0.0
                } else {
                    2.0 / (1.0 / t + 1.0 / r)
                }
            }
            MetricTensor::Convex(w) => {
                w.average * MetricTensor::Average.eval_nonneg(t, r)
                    + w.logarithmic * MetricTensor::Logarithmic.eval_nonneg(t, r)
                    + w.harmonic * MetricTensor::Harmonic.eval_nonneg(t, r)
            }
        }
    }

    /// The product `g(t, r) * (log t - log r)`, simplified where an exact
    /// continuous extension exists: `t - r` for the logarithmic weight,
    /// `2 t r (log t - log r) / (t + r)` (0 at the axes) for the harmonic
    /// weight. The average weight has no extension, so zero arguments are an
    /// error there.
    pub(crate) fn log_flux(&self, t: f64, r: f64) -> Result<f64, CalculusError> {
        match self {
            MetricTensor::Logarithmic => Ok(t - r),
            MetricTensor::Harmonic => {
                if t == 0.0 || r == 0.0 || t == r {
                    Ok(0.0)
                } else {
                    Ok(2.0 * t * r * (t.ln() - r.ln()) / (t + r))
                }
            }
            MetricTensor::Average => {
                if t == 0.0 {
                    Err(CalculusError::SingularLogAtBoundary(0))
                } else if r == 0.0 {
                    Err(CalculusError::SingularLogAtBoundary(1))
                } else if t == r {
                    Ok(0.0)
                } else {
                    Ok(0.5 * (t + r) * (t.ln() - r.ln()))
                }
            }
            MetricTensor::Convex(w) => {
                let mut out = w.logarithmic * (t - r);
                if w.harmonic > 0.0 {
                    out += w.harmonic * MetricTensor::Harmonic.log_flux(t, r)?;
                }
                if w.average > 0.0 {
                    out += w.average * MetricTensor::Average.log_flux(t, r)?;
                }
                Ok(out)
            }
        }
    }
}

/// Skew-symmetric `d x d` field stored as its upper triangle, pair-major in
/// lexicographic order of `(j, k)`, `1 <= j < k <= d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewField {
    d: usize,
    upper: Vec<f64>,
}

/// Position of the pair `(j, k)`, `1 <= j < k <= d`, in lexicographic order.
pub fn pair_position(d: usize, j: usize, k: usize) -> usize {
    debug_assert!(j >= 1 && j < k && k <= d);
    (j - 1) * d - (j - 1) * j / 2 + (k - j - 1)
}

impl SkewField {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            upper: vec![0.0; d * (d - 1) / 2],
        }
    }

    pub fn from_upper(d: usize, upper: Vec<f64>) -> Self {
        assert_eq!(upper.len(), d * (d - 1) / 2);
        Self { d, upper }
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut upper = Vec::with_capacity(d * (d - 1) / 2);
        for j in 1..=d {
            for k in j + 1..=d {
                upper.push(f(j, k));
            }
        }
        Self { d, upper }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Entry `(j, k)` for any `j != k` (1-based), using antisymmetry.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        if j == k {
            0.0
        } else if j < k {
            self.upper[pair_position(self.d, j, k)]
        } else {
            -self.upper[pair_position(self.d, k, j)]
        }
    }

    pub fn set(&mut self, j: usize, k: usize, value: f64) {
        assert!(j != k);
        if j < k {
            self.upper[pair_position(self.d, j, k)] = value;
        } else {
            self.upper[pair_position(self.d, k, j)] = -value;
        }
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn upper_mut(&mut self) -> &mut [f64] {
        &mut self.upper
    }

    /// Frobenius norm of the full matrix, `sqrt(2 sum_{j<k} p_{jk}^2)`.
    pub fn l2_norm(&self) -> f64 {
        (2.0 * self.upper.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Largest entry magnitude.
    pub fn linf_norm(&self) -> f64 {
        self.upper.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            d: self.d,
            upper: self.upper.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d);
        Self {
            d: self.d,
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }
}

/// Graph gradient of a vertex function: entry `(j,k)` is
/// `sqrt(w_jk) * (phi_j - phi_k)`.
pub fn graph_gradient(graph: &Graph, phi: &[f64]) -> SkewField {
    assert_eq!(phi.len(), graph.vertex_count());
    SkewField::from_fn(graph.vertex_count(), |j, k| {
        graph.sqrt_weight(j, k) * (phi[j - 1] - phi[k - 1])
    })
}

/// Weighted inner product `(v, w)_xi` over the edge set.
pub fn inner_product(
    graph: &Graph,
    tensor: &MetricTensor,
    xi: &SimplexPoint,
    v: &SkewField,
    w: &SkewField,
) -> f64 {
    let c = xi.coords();
    let mut acc = 0.0;
    for (pos, (j, k)) in graph.pairs().enumerate() {
        if graph.weight(j, k) > 0.0 {
            acc += v.upper()[pos] * w.upper()[pos] * tensor.eval_nonneg(c[j - 1], c[k - 1]);
        }
    }
    acc
}

/// Weighted norm `sqrt((v, v)_xi)`.
pub fn norm_xi(graph: &Graph, tensor: &MetricTensor, xi: &SimplexPoint, v: &SkewField) -> f64 {
    inner_product(graph, tensor, xi, v, v).max(0.0).sqrt()
}

/// Divergence: i-th entry is `sum_j sqrt(w_ij) v_{j,i} g_ij(xi)`. Adjoint of
/// the graph gradient: `(grad phi, v)_xi = -<phi, div_xi(v)>`.
pub fn divergence(
    graph: &Graph,
    tensor: &MetricTensor,
    xi: &SimplexPoint,
    v: &SkewField,
) -> Vec<f64> {
    let d = graph.vertex_count();
    let c = xi.coords();
    (1..=d)
        .map(|i| {
            (1..=d)
                .filter(|&j| j != i && graph.weight(i, j) > 0.0)
                .map(|j| graph.sqrt_weight(i, j) * v.get(j, i) * tensor.eval_nonneg(c[i - 1], c[j - 1]))
                .sum()
        })
        .collect()
}

/// Individual-noise operator `-(p, grad log xi)_xi`. Uses the exact
/// simplification of `g * (log t - log r)` where the tensor admits one;
/// otherwise all coordinates touching an edge must be positive.
pub fn noise_term(
    graph: &Graph,
    tensor: &MetricTensor,
    xi: &SimplexPoint,
    p: &SkewField,
) -> Result<f64, CalculusError> {
    let c = xi.coords();
    let mut acc = 0.0;
    for (pos, (j, k)) in graph.pairs().enumerate() {
        let w = graph.sqrt_weight(j, k);
        if w > 0.0 {
            let flux = tensor.log_flux(c[j - 1], c[k - 1]).map_err(|e| match e {
                CalculusError::SingularLogAtBoundary(which) => {
                    CalculusError::SingularLogAtBoundary(if which == 0 { j } else { k })
                }
                other => other,
            })?;
            acc += p.upper()[pos] * w * flux;
        }
    }
    Ok(-acc)
}

/// Sum of reciprocal coordinates; at least `d^2`, with equality at uniform.
pub fn information_functional(xi: &SimplexPoint) -> Result<f64, CalculusError> {
    let mut acc = 0.0;
    for (i, &c) in xi.coords().iter().enumerate() {
        if c == 0.0 {
            return Err(CalculusError::ZeroCoordinate(i + 1));
        }
        acc += 1.0 / c;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sp(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    fn random_interior(rng: &mut impl Rng, d: usize) -> SimplexPoint {
        let raw: Vec<f64> = (0..d).map(|_| -rng.gen_range(1e-3..1.0f64).ln()).collect();
        let sum: f64 = raw.iter().sum();
        sp(&raw.iter().map(|x| x / sum).collect::<Vec<_>>())
    }

    fn random_skew(rng: &mut impl Rng, d: usize) -> SkewField {
        SkewField::from_fn(d, |_, _| rng.gen_range(-1.0..1.0))
    }

    const TENSORS: [MetricTensor; 3] = [
        MetricTensor::Average,
        MetricTensor::Logarithmic,
        MetricTensor::Harmonic,
    ];

    #[test]
    fn metric_eval_examples() {
        assert_eq!(MetricTensor::Average.eval(0.2, 0.3).unwrap(), 0.25);
        let g2 = MetricTensor::Logarithmic.eval(0.2, 0.3).unwrap();
        assert!((g2 - 0.1 / 1.5f64.ln()).abs() < 1e-15);
        assert_eq!(MetricTensor::Harmonic.eval(0.7, 0.0).unwrap(), 0.0);
        assert_eq!(MetricTensor::Logarithmic.eval(0.4, 0.4).unwrap(), 0.4);
        assert!(matches!(
            MetricTensor::Average.eval(-0.1, 0.3).unwrap_err(),
            CalculusError::NegativeArgument(_)
        ));
    }

    #[test]
    fn metric_bounds_symmetry_homogeneity_concavity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9_5eed);
        let convex = MetricTensor::Convex(ConvexWeights::new(0.3, 0.5, 0.2).unwrap());
        let all = [TENSORS[0], TENSORS[1], TENSORS[2], convex];
        for tensor in &all {
            for _ in 0..1000 {
                let (t, r) = (rng.gen_range(1e-9..1.0), rng.gen_range(1e-9..1.0));
                let g = tensor.eval(t, r).unwrap();
                // (g-ii) between min and max
                assert!(t.min(r) - 1e-12 <= g && g <= t.max(r) + 1e-12);
                // symmetry
                assert!((g - tensor.eval(r, t).unwrap()).abs() < 1e-12);
                // (g-iii) positive homogeneity
                let lam = rng.gen_range(0.0..3.0);
                assert!((tensor.eval(lam * t, lam * r).unwrap() - lam * g).abs() < 1e-12);
                // (g-iv) midpoint concavity
                let (t2, r2) = (rng.gen_range(1e-9..1.0), rng.gen_range(1e-9..1.0));
                let mid = tensor
                    .eval(0.5 * (t + t2), 0.5 * (r + r2))
                    .unwrap();
                let avg = 0.5 * (g + tensor.eval(t2, r2).unwrap());
                assert!(mid >= avg - 1e-12);
            }
        }
    }

    #[test]
    fn logarithmic_identity_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x10_9);
        for _ in 0..1000 {
            let (t, r) = (rng.gen_range(1e-6..1.0), rng.gen_range(1e-6..1.0));
            if t == r {
                continue;
            }
            let lhs = MetricTensor::Logarithmic.eval(t, r).unwrap() * (t.ln() - r.ln());
            assert!((lhs - (t - r)).abs() < 1e-12);
        }
    }

    #[test]
    fn graph_gradient_examples() {
        let tri = Graph::complete(3);
        let p = graph_gradient(&tri, &[1.0, 0.0, 0.0]);
        assert_eq!(p.get(1, 2), 1.0);
        assert_eq!(p.get(1, 3), 1.0);
        assert_eq!(p.get(2, 3), 0.0);
        assert_eq!(p.get(2, 1), -1.0);

        let p = graph_gradient(&tri, &[0.7, 0.7, 0.7]);
        assert_eq!(p.l2_norm(), 0.0);

        let path = Graph::new(3, vec![0., 1., 0., 1., 0., 1., 0., 1., 0.]).unwrap();
        let p = graph_gradient(&path, &[0.0, 1.0, 3.0]);
        assert_eq!(p.get(1, 2), -1.0);
        assert_eq!(p.get(2, 3), -2.0);
        assert_eq!(p.get(1, 3), 0.0);
    }

    #[test]
    fn inner_product_examples() {
        let tri = Graph::complete(3);
        let uni = SimplexPoint::uniform(3);
        let mut v = SkewField::zero(3);
        v.set(1, 2, 1.0);
        let ip = inner_product(&tri, &MetricTensor::Average, &uni, &v, &v);
        assert!((ip - 1.0 / 3.0).abs() < 1e-15);

        let w = SkewField::zero(3);
        assert_eq!(inner_product(&tri, &MetricTensor::Average, &uni, &v, &w), 0.0);

        // degenerate norm: mass vanishes on the only edge carrying v
        let xi = sp(&[0.0, 0.4, 0.6]);
        assert_eq!(norm_xi(&tri, &MetricTensor::Harmonic, &xi, &v), 0.0);
        assert!(v.l2_norm() > 0.0);
    }

    #[test]
    fn inner_product_is_bilinear_and_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xb1);
        let g = Graph::complete(4);
        for tensor in &TENSORS {
            for _ in 0..50 {
                let xi = random_interior(&mut rng, 4);
                let (u, v, w) = (
                    random_skew(&mut rng, 4),
                    random_skew(&mut rng, 4),
                    random_skew(&mut rng, 4),
                );
                let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let lhs = inner_product(&g, tensor, &xi, &u.scale(a).add(&v.scale(b)), &w);
                let rhs = a * inner_product(&g, tensor, &xi, &u, &w)
                    + b * inner_product(&g, tensor, &xi, &v, &w);
                assert!((lhs - rhs).abs() < 1e-12);
                let sym = inner_product(&g, tensor, &xi, &w, &u)
                    - inner_product(&g, tensor, &xi, &u, &w);
                assert!(sym.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn divergence_examples_and_adjointness() {
        let tri = Graph::complete(3);
        let uni = SimplexPoint::uniform(3);
        let z = SkewField::zero(3);
        assert_eq!(divergence(&tri, &MetricTensor::Average, &uni, &z), vec![0.0; 3]);

        let mut v = SkewField::zero(3);
        v.set(1, 2, 1.0);
        let div = divergence(&tri, &MetricTensor::Average, &uni, &v);
        assert!((div[0] + 1.0 / 3.0).abs() < 1e-15);
        assert!((div[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(div[2], 0.0);

        // (grad phi, v)_xi + <phi, div_xi(v)> = 0
        let mut rng = ChaCha8Rng::seed_from_u64(0xad_01);
        let path = Graph::new(3, vec![0., 2., 0., 2., 0., 0.5, 0., 0.5, 0.]).unwrap();
        for graph in [&tri, &path] {
            for tensor in &TENSORS {
                for _ in 0..200 {
                    let xi = random_interior(&mut rng, 3);
                    let v = random_skew(&mut rng, 3);
                    let phi: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let grad = graph_gradient(graph, &phi);
                    let lhs = inner_product(graph, tensor, &xi, &grad, &v);
                    let div = divergence(graph, tensor, &xi, &v);
                    let dot: f64 = phi.iter().zip(&div).map(|(a, b)| a * b).sum();
                    assert!((lhs + dot).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn noise_term_examples() {
        let tri = Graph::complete(3);
        let mut p = SkewField::zero(3);
        p.set(1, 2, 1.0);

        // uniform state: log gradient vanishes
        let uni = SimplexPoint::uniform(3);
        for tensor in &TENSORS {
            assert_eq!(noise_term(&tri, tensor, &uni, &p).unwrap(), 0.0);
        }

        // logarithmic tensor closed form: -sum p_jk sqrt(w) (xi_j - xi_k)
        let xi = sp(&[0.2, 0.3, 0.5]);
        let val = noise_term(&tri, &MetricTensor::Logarithmic, &xi, &p).unwrap();
        assert!((val - 0.1).abs() < 1e-15);

        let z = SkewField::zero(3);
        assert_eq!(noise_term(&tri, &MetricTensor::Logarithmic, &xi, &z).unwrap(), 0.0);

        // average tensor has no continuous extension at the boundary
        let bd = sp(&[0.0, 0.4, 0.6]);
        assert!(matches!(
            noise_term(&tri, &MetricTensor::Average, &bd, &p).unwrap_err(),
            CalculusError::SingularLogAtBoundary(1)
        ));
        // harmonic tensor extends by zero
        assert!(noise_term(&tri, &MetricTensor::Harmonic, &bd, &p).is_ok());
    }

    #[test]
    fn noise_term_agrees_with_inner_product_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0_e1);
        let g = Graph::complete(3);
        for tensor in &TENSORS {
            for _ in 0..200 {
                let xi = random_interior(&mut rng, 3);
                let p = random_skew(&mut rng, 3);
                let logs: Vec<f64> = xi.coords().iter().map(|c| c.ln()).collect();
                let grad_log = graph_gradient(&g, &logs);
                let direct = -inner_product(&g, tensor, &xi, &p, &grad_log);
                let shortcut = noise_term(&g, tensor, &xi, &p).unwrap();
                assert!((direct - shortcut).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn noise_bound_by_frobenius_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0_b0);
        let g = Graph::complete(3);
        let c = g.max_sqrt_weight() * 3.0;
        for _ in 0..1000 {
            let xi = random_interior(&mut rng, 3);
            let p = random_skew(&mut rng, 3);
            let val = noise_term(&g, &MetricTensor::Logarithmic, &xi, &p).unwrap();
            assert!(val.abs() <= c * p.l2_norm() + 1e-12);
        }
    }

    #[test]
    fn information_functional_examples() {
        let v = information_functional(&sp(&[0.2, 0.3, 0.5])).unwrap();
        assert!((v - (5.0 + 10.0 / 3.0 + 2.0)).abs() < 1e-12);
        assert!((information_functional(&SimplexPoint::uniform(3)).unwrap() - 9.0).abs() < 1e-12);
        assert!((information_functional(&sp(&[0.5, 0.5])).unwrap() - 4.0).abs() < 1e-12);
        assert!(matches!(
            information_functional(&sp(&[0.0, 1.0])).unwrap_err(),
            CalculusError::ZeroCoordinate(1)
        ));
    }

    #[test]
    fn convex_weights_validation() {
        assert!(ConvexWeights::new(0.5, 0.5, 0.0).is_ok());
        assert!(ConvexWeights::new(0.5, 0.6, 0.0).is_err());
        assert!(ConvexWeights::new(-0.1, 1.1, 0.0).is_err());
    }
}
