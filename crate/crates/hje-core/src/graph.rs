//! Finite weighted undirected graphs.
//!
//! Vertices are labelled `1..=d` in the public interface. The weight matrix is
//! validated once at construction (symmetry, zero diagonal, nonnegativity,
//! connectivity); everything downstream may assume a valid graph.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("vertex count must be at least 2, got {0}")]
    BadVertexCount(usize),
    #[error("weight matrix has {got} entries, expected {expected}")]
    BadDimension { got: usize, expected: usize },
    #[error("weights are not symmetric at ({i},{j}): {a} vs {b}")]
    AsymmetricWeights { i: usize, j: usize, a: f64, b: f64 },
    #[error("negative weight {w} at ({i},{j})")]
    NegativeWeight { i: usize, j: usize, w: f64 },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("graph is not connected: vertex {0} unreachable from vertex 1")]
    Disconnected(usize),
    #[error("vertex index {0} out of range 1..={1}")]
    IndexOutOfRange(usize, usize),
}

/// Undirected connected graph with a symmetric nonnegative weight matrix.
/// The edge set is `{(i,j): w[i][j] > 0}`.
#[derive(Debug, Clone)]
pub struct Graph {
    d: usize,
    weights: Vec<f64>,
    sqrt_weights: Vec<f64>,
}

impl Graph {
    /// Validates and builds a graph from a row-major `d x d` weight matrix.
    pub fn new(d: usize, weights: Vec<f64>) -> Result<Self, GraphError> {
        if d < 2 {
            return Err(GraphError::BadVertexCount(d));
        }
        if weights.len() != d * d {
            return Err(GraphError::BadDimension {
                got: weights.len(),
                expected: d * d,
            });
        }
        for i in 0..d {
            if weights[i * d + i] != 0.0 {
                return Err(GraphError::SelfLoop(i + 1));
            }
            for j in 0..d {
                let w = weights[i * d + j];
                if !(w >= 0.0) {
                    return Err(GraphError::NegativeWeight {
                        i: i + 1,
                        j: j + 1,
                        w,
                    });
                }
                if w != weights[j * d + i] {
                    return Err(GraphError::AsymmetricWeights {
                        i: i + 1,
                        j: j + 1,
                        a: w,
                        b: weights[j * d + i],
                    });
                }
            }
        }
        // breadth-first reachability from vertex 1
        let mut seen = vec![false; d];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..d {
                if !seen[j] && weights[i * d + j] > 0.0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(GraphError::Disconnected(i + 1));
        }
        let sqrt_weights = weights.iter().map(|w| w.sqrt()).collect();
        Ok(Self {
            d,
            weights,
            sqrt_weights,
        })
    }

    /// Complete graph on `d` vertices with unit weights.
    pub fn complete(d: usize) -> Self {
        let weights = (0..d * d)
            .map(|n| if n / d == n % d { 0.0 } else { 1.0 })
            .collect();
        Self::new(d, weights).expect("complete graph is valid")
    }

    pub fn vertex_count(&self) -> usize {
        self.d
    }

    /// Weight between vertices `i` and `j` (1-based labels).
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i - 1) * self.d + (j - 1)]
    }

    /// Square root of the weight, precomputed.
    pub fn sqrt_weight(&self, i: usize, j: usize) -> f64 {
        self.sqrt_weights[(i - 1) * self.d + (j - 1)]
    }

    /// Largest entry of the elementwise square root of the weight matrix.
    pub fn max_sqrt_weight(&self) -> f64 {
        self.sqrt_weights.iter().cloned().fold(0.0, f64::max)
    }

    /// Neighbors of vertex `i` in increasing order (1-based labels).
    pub fn neighbors(&self, i: usize) -> Result<Vec<usize>, GraphError> {
        if i == 0 || i > self.d {
            return Err(GraphError::IndexOutOfRange(i, self.d));
        }
        Ok((1..=self.d).filter(|&j| self.weight(i, j) > 0.0).collect())
    }

    /// All vertex pairs `j < k` (1-based), whether or not they carry an edge.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.d;
        (1..=d).flat_map(move |j| (j + 1..=d).map(move |k| (j, k)))
    }

    /// Row-major copy of the weight matrix.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}
