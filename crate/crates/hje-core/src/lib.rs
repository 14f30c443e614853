//! Finite-difference schemes for initial-value Hamilton-Jacobi equations on the
//! probability simplex over a finite weighted graph.
//!
//! The state space is the simplex of probability vectors on the vertex set,
//! equipped with a metric-tensor-weighted calculus on skew-symmetric edge
//! fields. The crate provides:
//!
//! - [`graph`]: the weighted undirected graph and its validation;
//! - [`mesh`]: the coordinate transform onto nondecreasing tuples, uniform
//!   simplex meshes, and interior/boundary index classification;
//! - [`calculus`]: metric tensors, weighted inner products, graph gradient,
//!   divergence and the individual-noise operator;
//! - [`hamiltonian`]: continuous Hamiltonians and the monotone discrete
//!   Hamiltonians (Osher-Sethian and Lax-Friedrichs types);
//! - [`scheme`]: difference matrices, boundary extrapolation, the explicit
//!   monotone stepper and the fully implicit fixed-point stepper;
//! - [`markov`]: the exact semigroup solution of the pure-noise linear
//!   equation, used as a correctness oracle.

pub mod calculus;
pub mod graph;
pub mod hamiltonian;
pub mod markov;
pub mod mesh;
pub mod scheme;

pub use calculus::{
    divergence, graph_gradient, information_functional, inner_product, noise_term, norm_xi,
    CalculusError, ConvexWeights, MetricTensor, SkewField,
};
pub use graph::{Graph, GraphError};
pub use hamiltonian::{
    cfl_validate, lf_gamma_default, random_truncated_point, CflReport, CoefficientFn,
    DiscreteHamiltonian, DiscreteKind, HamError, Hamiltonian,
};
pub use markov::{generator, MarkovGenerator};
pub use mesh::{
    build_mesh, pi_forward, pi_inverse, BoundaryExit, Mesh, MeshError, MeshIndex, OffsetVector,
    ShiftOutcome, SimplexPoint,
};
pub use scheme::{
    difference_matrices, BoundaryMode, BoundaryPlan, GridFunction, SchemeConfig, SchemeError,
    SchemeKind, Solver, Trajectory,
};
