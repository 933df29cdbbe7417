//! Linear elliptic and parabolic equations on metric graphs: graph model,
//! finite element discretization, solvers, and numerical certificates for
//! the energy estimates behind uniqueness in weighted Lebesgue classes.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretization;
pub mod fields;
pub mod graph;
pub mod solvers;
pub mod sparse;
pub mod verification;

pub use discretization::{
    assemble_mass, assemble_potential_mass, assemble_stiffness, integrate, integrate_ball,
    per_edge_lp_sum, weighted_lp_norm, DiscretizationError, Grid, GraphFunction,
};
pub use fields::{
    eval_cutoff, eval_test_function, eval_weight, make_density, make_potential, make_weight,
    regularize_phi, regularize_pi, CutoffSpec, DensitySpec, FieldError, Jet, PotentialSpec,
    TestFnSpec, WeightSpec,
};
pub use graph::{
    generate, DegreeCondition, DegreeInfo, Edge, EdgeId, GraphError, GraphFamily, GraphFile,
    MetricGraph, Point, VertexId,
};
pub use solvers::{
    exact_ray_solution, kirchhoff_residual, solve_elliptic, solve_heat, BoundaryCondition,
    BoundaryMap, EllipticProblem, ParabolicProblem, SolverError, TimeScheme, Trajectory,
};
pub use sparse::{LdlFactor, LinalgError, SparseOperator};
pub use verification::{CheckReport, GrowthProfile, VerificationError};

/// Any error raised by this crate.
#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Verification(#[from] VerificationError),
}
