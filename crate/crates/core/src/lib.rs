//! Barrier-based frictional contact elastodynamics with a convergent
//! smooth-max discretization of the contact potential.
//!
//! The crate couples finite element elasticity with log-barrier contact,
//! mollified Coulomb friction, variational implicit time stepping, and a
//! projected-Newton solver whose line search is filtered by continuous
//! collision detection. A benchmark harness reproduces 1D/2D/3D convergence
//! studies against analytic references.

pub mod assembly;
pub mod autodiff;
pub mod barrier;
pub mod bench;
pub mod broadphase;
pub mod ccd;
pub mod distance;
pub mod elasticity;
pub mod friction;
pub mod integrator;
pub mod linsolve;
pub mod mesh;
pub mod solver;
pub mod system;





pub use mesh::{BoundaryComplex, HalfSpaceObstacle, SimplicialMesh, SystemState};



use thiserror::Error;

/// Errors surfaced by geometry, assembly, and the solver.
#[derive(Debug, Error)]
pub enum SimError {
    /// A distance query hit zero (or a half-space was penetrated). The CCD
    /// filter must prevent this in a valid run, so it aborts the step.
    #[error("degenerate distance: {0}")]
    DegenerateDistance(String),

    /// A primitive with zero measure (edge length, triangle area) was passed
    /// to a kernel that cannot handle it.
    #[error("degenerate primitive: {0}")]
    DegeneratePrimitive(String),

    /// Mesh boundary is not manifold.
    #[error("non-manifold boundary: {0}")]
    NonManifold(String),

    /// Mesh connectivity or geometry is invalid.
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// An element reached non-positive volume under a barrier-type material.
    #[error("element {0} inverted (det F <= 0)")]
    ElementInverted(usize),

    /// Newton iteration did not reach the termination criterion.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// Sparse factorization failed even after diagonal shifting.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// Configuration is inconsistent or violates a precondition.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
