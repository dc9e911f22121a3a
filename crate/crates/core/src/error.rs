use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("axis index {0} out of range (expected 0, 1 or 2)")]
    AxisOutOfRange(usize),

    #[error("orientation norm {norm} exceeds pi")]
    OrientationOutOfBall { norm: f64 },

    #[error("orientation norm {norm} too close to pi (limit {limit}); Killing frame is near-singular")]
    NearBoundary { norm: f64, limit: f64 },

    #[error("matrix is not a proper rotation (orthogonality error {orthogonality}, det {det})")]
    NotARotation { orthogonality: f64, det: f64 },

    #[error("molecule needs at least 3 nuclei, got {0}")]
    TooFewNuclei(usize),

    #[error("invalid {what}: {value}")]
    InvalidParameter { what: &'static str, value: f64 },

    #[error("nuclei {0} and {1} coincide")]
    CoincidentNuclei(usize, usize),

    #[error("geometry is collinear (smallest principal moment {smallest} vs largest {largest})")]
    Collinear { smallest: f64, largest: f64 },

    #[error("molecule is not prepared: {0}")]
    NotPrepared(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("hessian is not symmetric (max asymmetry {0})")]
    HessianNotSymmetric(f64),

    #[error("candidate modes are rank-deficient after projecting out the external subspace")]
    RankDeficient,

    #[error("eigen-solver did not converge: {0}")]
    NonConvergence(&'static str),

    #[error("Eckart residual {residual} exceeds tolerance {tolerance}")]
    EckartResidual { residual: f64, tolerance: f64 },

    #[error("inertia derivative for mode {mode} is asymmetric (residual {residual}); basis violates the angular Eckart condition")]
    AsymmetricInertia { mode: usize, residual: f64 },

    #[error("instantaneous inertia tensor is singular or not positive-definite (smallest eigenvalue {0})")]
    SingularInertia(f64),

    #[error("grid: {0}")]
    Grid(String),

    #[error("wavefunction does not decay at the grid ends (edge amplitude {0})")]
    NoBoundaryDecay(f64),

    #[error("orientation state has boundary mass {mass} (limit {limit})")]
    BoundaryMass { mass: f64, limit: f64 },

    #[error("negative variance {0} beyond quadrature tolerance")]
    NegativeVariance(f64),

    #[error("malformed state set: {0}")]
    MalformedStates(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
