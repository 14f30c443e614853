//! Exact reference solution for the pure-noise linear equation.
//!
//! The graph weights define a symmetric generator matrix with zero row sums;
//! its matrix exponential is a transition semigroup, and transporting the
//! initial state through it solves the noise-only equation exactly. The
//! exponential is computed by symmetric eigendecomposition; tests cross-check
//! it against an independent scaling-and-squaring evaluation.

use crate::graph::Graph;
use crate::mesh::SimplexPoint;
use nalgebra::{DMatrix, SymmetricEigen};

/// Generator matrix of the vertex-jump Markov chain.
#[derive(Debug, Clone)]
pub struct MarkovGenerator {
    d: usize,
    a: Vec<f64>,
}

/// Builds the generator: off-diagonal entries are the edge weights, diagonal
/// entries negate the row sums exactly.
pub fn generator(graph: &Graph) -> MarkovGenerator {
    let d = graph.vertex_count();
    let mut a = vec![0.0; d * d];
    for i in 1..=d {
        let mut row_sum = 0.0;
        for j in 1..=d {
            if j != i {
                let w = graph.weight(i, j);
                a[(i - 1) * d + (j - 1)] = w;
                row_sum += w;
            }
        }
        a[(i - 1) * d + (i - 1)] = -row_sum;
    }
    MarkovGenerator { d, a }
}

impl MarkovGenerator {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Row-major generator entries.
    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    /// Transition matrix `exp(t A)`, row-major, via symmetric
    /// eigendecomposition.
    pub fn transition(&self, t: f64) -> Vec<f64> {
        assert!(t >= 0.0, "transition time must be nonnegative");
        let d = self.d;
        if t == 0.0 {
            let mut id = vec![0.0; d * d];
            for i in 0..d {
                id[i * d + i] = 1.0;
            }
            return id;
        }
        let m = DMatrix::from_row_slice(d, d, &self.a);
        let eig = SymmetricEigen::new(m);
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for l in 0..d {
                    acc += eig.eigenvectors[(i, l)]
                        * (t * eig.eigenvalues[l]).exp()
                        * eig.eigenvectors[(j, l)];
                }
                out[i * d + j] = acc;
            }
        }
        out
    }

    /// Pushes a state through the semigroup: `exp(t A) xi`.
    pub fn evolve(&self, t: f64, xi: &[f64]) -> Vec<f64> {
        let d = self.d;
        assert_eq!(xi.len(), d);
        let trans = self.transition(t);
        (0..d)
            .map(|i| (0..d).map(|j| trans[i * d + j] * xi[j]).sum())
            .collect()
    }

    /// Exact solution of the pure-noise equation at time `t` and state `xi`:
    /// the initial value evaluated at the evolved state. Valid for the
    /// logarithmic metric tensor.
    pub fn exact_noise_solution(
        &self,
        u0: impl Fn(&[f64]) -> f64,
        t: f64,
        xi: &SimplexPoint,
    ) -> f64 {
        u0(&self.evolve(t, xi.coords()))
    }
}
