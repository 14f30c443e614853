//! Simplex meshes under the cumulative-coordinate transform.
//!
//! A probability vector with entries bounded below by `eps` maps to a
//! nondecreasing `(d-1)`-tuple via cumulative sums; the uniform mesh lives on
//! the integer lattice of those tuples. Node coordinates are always
//! reconstructed from the integer multi-index and the exact mesh size, never
//! accumulated, so node positions are bit-stable across the mesh.

use crate::graph::Graph;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("coordinates sum to {0}, not 1")]
    BadSum(f64),
    #[error("coordinate {idx} is negative: {value}")]
    NegativeCoordinate { idx: usize, value: f64 },
    #[error("coordinate {idx} = {value} lies below eps = {eps}")]
    NotInSimplexEps { idx: usize, value: f64, eps: f64 },
    #[error("tuple is not nondecreasing at position {0}")]
    NotNondecreasing(usize),
    #[error("tuple entry {idx} = {value} outside [0, {max}]")]
    OutOfRange { idx: usize, value: f64, max: f64 },
    #[error("(1 - d*eps)/h = {0} is not an integer")]
    NonIntegerLevels(f64),
    #[error("mesh size h = {0} outside (0, 1/3)")]
    BadMeshSize(f64),
    #[error("eps = {0} outside [0, 1/d)")]
    BadEps(f64),
    #[error("multi-index has {got} entries, expected {expected}")]
    BadIndexLength { got: usize, expected: usize },
}

/// A probability vector: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    /// Validates the simplex constraints (sum within 1e-12 of one, entries
    /// nonnegative up to roundoff; tiny negatives are clamped to zero).
    pub fn new(coords: Vec<f64>) -> Result<Self, MeshError> {
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(MeshError::BadSum(sum));
        }
        let mut coords = coords;
        for (i, c) in coords.iter_mut().enumerate() {
            if *c < 0.0 {
                if *c < -1e-12 {
                    return Err(MeshError::NegativeCoordinate { idx: i, value: *c });
                }
                *c = 0.0;
            }
        }
        Ok(Self { coords })
    }

    /// The uniform distribution on `d` vertices.
    pub fn uniform(d: usize) -> Self {
        Self {
            coords: vec![1.0 / d as f64; d],
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// True when every coordinate is at least `eps` (up to 1e-12 slack).
    pub fn in_simplex_eps(&self, eps: f64) -> bool {
        self.coords.iter().all(|&c| c >= eps - 1e-12)
    }
}

impl std::ops::Index<usize> for SimplexPoint {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

/// Cumulative-sum transform: maps a point of the eps-truncated simplex to a
/// nondecreasing `(d-1)`-tuple in `[0, 1 - d*eps]`.
pub fn pi_forward(xi: &SimplexPoint, eps: f64) -> Result<Vec<f64>, MeshError> {
    for (i, &c) in xi.coords().iter().enumerate() {
        if c < eps - 1e-12 {
            return Err(MeshError::NotInSimplexEps {
                idx: i,
                value: c,
                eps,
            });
        }
    }
    let d = xi.dim();
    let mut out = Vec::with_capacity(d - 1);
    let mut acc = 0.0;
    for (i, &c) in xi.coords().iter().take(d - 1).enumerate() {
        acc += c;
        out.push(acc - (i + 1) as f64 * eps);
    }
    Ok(out)
}

/// Inverse transform: recovers the simplex point from a nondecreasing tuple.
pub fn pi_inverse(s: &[f64], eps: f64) -> Result<SimplexPoint, MeshError> {
    let d = s.len() + 1;
    let max = 1.0 - d as f64 * eps;
    if s[0] < -1e-12 {
        return Err(MeshError::OutOfRange {
            idx: 0,
            value: s[0],
            max,
        });
    }
    if s[d - 2] > max + 1e-12 {
        return Err(MeshError::OutOfRange {
            idx: d - 2,
            value: s[d - 2],
            max,
        });
    }
    for i in 1..d - 1 {
        if s[i] < s[i - 1] - 1e-12 {
            return Err(MeshError::NotNondecreasing(i));
        }
    }
    let mut coords = Vec::with_capacity(d);
    coords.push(s[0] + eps);
    for i in 1..d - 1 {
        coords.push(s[i] - s[i - 1] + eps);
    }
    coords.push(1.0 - s[d - 2] - (d - 1) as f64 * eps);
    SimplexPoint::new(coords)
}

/// Integer multi-index of a mesh node: a nondecreasing `(d-1)`-tuple of levels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MeshIndex {
    idx: Vec<u32>,
}

impl MeshIndex {
    pub fn new(idx: Vec<u32>) -> Self {
        Self { idx }
    }

    pub fn levels(&self) -> &[u32] {
        &self.idx
    }
}

/// Direction of a one-cell move: the vertex pair `j < k` together with its
/// index-space offset (ones in slots `j..k-1`) and simplex-space offset
/// (`+1` at `j`, `-1` at `k`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OffsetVector {
    j: usize,
    k: usize,
    d: usize,
}

impl OffsetVector {
    /// Offset for the pair `(j, k)` with `1 <= j < k <= d` (1-based labels).
    pub fn new(d: usize, j: usize, k: usize) -> Self {
        assert!(j >= 1 && j < k && k <= d, "need 1 <= j < k <= d");
        Self { j, k, d }
    }

    /// All `(d^2 - d)/2` pairs in lexicographic order.
    pub fn all_pairs(d: usize) -> Vec<Self> {
        let mut out = Vec::with_capacity(d * (d - 1) / 2);
        for j in 1..=d {
            for k in j + 1..=d {
                out.push(Self::new(d, j, k));
            }
        }
        out
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.j, self.k)
    }

    /// Multi-index offset: ones in (1-based) slots `j..=k-1`.
    pub fn index_offset(&self) -> Vec<i64> {
        (1..self.d)
            .map(|l| i64::from(l >= self.j && l <= self.k - 1))
            .collect()
    }

    /// Simplex offset: `+1` at vertex `j`, `-1` at vertex `k`.
    pub fn simplex_offset(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.d];
        e[self.j - 1] = 1.0;
        e[self.k - 1] = -1.0;
        e
    }
}

/// Node classification on the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
}

/// Result of moving one cell from an admissible index.
#[derive(Debug, Clone, PartialEq)]
pub enum ShiftOutcome {
    /// Target is admissible and interior.
    Interior(usize),
    /// Target left the interior; carries the target point for extrapolation.
    BoundaryExit(BoundaryExit),
}

/// Where a stencil move landed when it did not stay interior.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryExit {
    /// Simplex coordinates of the target (may lie outside the admissible set).
    pub target: Vec<f64>,
    /// Rank of the target when it is an admissible boundary index.
    pub rank: Option<usize>,
}

/// Uniform mesh on the eps-truncated simplex of a graph.
///
/// Nodes are all nondecreasing `(d-1)`-tuples over `{0..=n_levels}`, ranked
/// densely in lexicographic order by a stars-and-bars formula, so grid
/// functions are flat arrays with O(1) access.
#[derive(Debug, Clone)]
pub struct Mesh {
    graph: Graph,
    h: f64,
    eps: f64,
    n_levels: u32,
    /// flattened tuples, `d-1` entries per node, rank-major
    tuples: Vec<u32>,
    /// simplex coordinates, `d` entries per node, rank-major
    points: Vec<f64>,
    kind: Vec<NodeKind>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    /// binomial table for ranking, `binom[n][r]`, n <= n_levels + d - 1
    binom: Vec<Vec<usize>>,
}

/// Enumerates the mesh for the given mesh size and truncation level.
pub fn build_mesh(graph: &Graph, h: f64, eps: f64) -> Result<Mesh, MeshError> {
    let d = graph.vertex_count();
    if !(h > 0.0 && h < 1.0) {
        return Err(MeshError::BadMeshSize(h));
    }
    if !(0.0..1.0 / d as f64).contains(&eps) {
        return Err(MeshError::BadEps(eps));
    }
    let levels = (1.0 - d as f64 * eps) / h;
    if (levels - levels.round()).abs() > 1e-9 || levels.round() < 1.0 {
        return Err(MeshError::NonIntegerLevels(levels));
    }
    let n = levels.round() as u32;
    let k = d - 1;

    // binomials up to C(n + d - 1, d - 1)
    let m = n as usize + d - 1;
    let mut binom = vec![vec![0usize; k + 1]; m + 1];
    for row in 0..=m {
        binom[row][0] = 1;
        for r in 1..=k.min(row) {
            binom[row][r] = binom[row - 1][r - 1] + binom[row - 1][r];
        }
    }

    let count = binom[m][k];
    let mut tuples = Vec::with_capacity(count * k);
    let mut points = Vec::with_capacity(count * d);
    let mut kind = Vec::with_capacity(count);
    let mut interior = Vec::new();
    let mut boundary = Vec::new();

    // lexicographic enumeration of nondecreasing tuples
    let mut cur = vec![0u32; k];
    loop {
        let is_boundary = cur[0] == 0
            || cur[k - 1] == n
            || cur.windows(2).any(|w| w[0] == w[1]);
        let rank = kind.len();
        if is_boundary {
            kind.push(NodeKind::Boundary);
            boundary.push(rank);
        } else {
            kind.push(NodeKind::Interior);
            interior.push(rank);
        }
        tuples.extend_from_slice(&cur);
        points.extend_from_slice(&point_from_levels(&cur, d, h, eps));

        // next nondecreasing tuple
        let mut l = k;
        loop {
            if l == 0 {
                break;
            }
            if cur[l - 1] < n {
                cur[l - 1] += 1;
                for p in l..k {
                    cur[p] = cur[l - 1];
                }
                break;
            }
            l -= 1;
        }
        if l == 0 {
            break;
        }
    }
    debug_assert_eq!(kind.len(), count);

    Ok(Mesh {
        graph: graph.clone(),
        h,
        eps,
        n_levels: n,
        tuples,
        points,
        kind,
        interior,
        boundary,
        binom,
    })
}

fn point_from_levels(levels: &[u32], d: usize, h: f64, eps: f64) -> Vec<f64> {
    let mut xi = Vec::with_capacity(d);
    xi.push(levels[0] as f64 * h + eps);
    for l in 1..d - 1 {
        xi.push((levels[l] - levels[l - 1]) as f64 * h + eps);
    }
    xi.push(1.0 - levels[d - 2] as f64 * h - (d - 1) as f64 * eps);
    xi
}

impl Mesh {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Number of levels per coordinate, `(1 - d*eps)/h`.
    pub fn n_levels(&self) -> u32 {
        self.n_levels
    }

    pub fn node_count(&self) -> usize {
        self.kind.len()
    }

    pub fn dim(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn interior_ranks(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary_ranks(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_interior(&self, rank: usize) -> bool {
        self.kind[rank] == NodeKind::Interior
    }

    /// Levels of the node at `rank`.
    pub fn levels(&self, rank: usize) -> &[u32] {
        let k = self.dim() - 1;
        &self.tuples[rank * k..(rank + 1) * k]
    }

    pub fn index(&self, rank: usize) -> MeshIndex {
        MeshIndex::new(self.levels(rank).to_vec())
    }

    /// Simplex coordinates of the node at `rank`.
    pub fn point(&self, rank: usize) -> &[f64] {
        let d = self.dim();
        &self.points[rank * d..(rank + 1) * d]
    }

    pub fn simplex_point(&self, rank: usize) -> SimplexPoint {
        SimplexPoint {
            coords: self.point(rank).to_vec(),
        }
    }

    /// Dense rank of an admissible multi-index; `None` when inadmissible.
    pub fn rank(&self, index: &MeshIndex) -> Option<usize> {
        self.rank_of_signed_levels(
            &index
                .levels()
                .iter()
                .map(|&v| v as i64)
                .collect::<Vec<_>>(),
        )
    }

    pub(crate) fn rank_of_signed_levels(&self, levels: &[i64]) -> Option<usize> {
        let k = self.dim() - 1;
        if levels.len() != k {
            return None;
        }
        let n = self.n_levels as i64;
        let mut prev = 0i64;
        for &v in levels {
            if v < prev || v > n {
                return None;
            }
            prev = v;
        }
        // lexicographic rank via the strictly-increasing representation
        // c_l = i_l + l over {0..m-1}
        let m = self.n_levels as usize + k;
        let mut rank = 0usize;
        let mut start = 0usize;
        for (l, &v) in levels.iter().enumerate() {
            let c = v as usize + l;
            for u in start..c {
                rank += self.binom[m - 1 - u][k - 1 - l];
            }
            start = c + 1;
        }
        Some(rank)
    }

    /// Moves one cell from the node at `rank` along `off` with `dir = +1/-1`.
    pub fn shift(&self, rank: usize, off: &OffsetVector, dir: i32) -> ShiftOutcome {
        debug_assert!(dir == 1 || dir == -1);
        let k = self.dim() - 1;
        let cur = self.levels(rank);
        let m = off.index_offset();
        let mut target = Vec::with_capacity(k);
        for l in 0..k {
            target.push(cur[l] as i64 + dir as i64 * m[l]);
        }
        match self.rank_of_signed_levels(&target) {
            Some(r) if self.kind[r] == NodeKind::Interior => ShiftOutcome::Interior(r),
            other => ShiftOutcome::BoundaryExit(BoundaryExit {
                target: self.point_from_levels_i64(&target),
                rank: other,
            }),
        }
    }

    fn point_from_levels_i64(&self, levels: &[i64]) -> Vec<f64> {
        let d = self.dim();
        let mut xi = Vec::with_capacity(d);
        xi.push(levels[0] as f64 * self.h + self.eps);
        for l in 1..d - 1 {
            xi.push((levels[l] - levels[l - 1]) as f64 * self.h + self.eps);
        }
        xi.push(1.0 - levels[d - 2] as f64 * self.h - (d - 1) as f64 * self.eps);
        xi
    }
}
