use thiserror::Error;

/// Errors raised by the geometric and numerical routines of this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector is not a point of the hyperboloid: {0}")]
    NotAPoint(String),

    #[error("vector is not a boundary point: {0}")]
    NotABoundaryPoint(String),

    #[error("matrix is not an orthochronous Lorentz matrix: {0}")]
    NotLorentz(String),

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("SL(2,C) matrix has determinant {re}+{im}i, expected 1")]
    BadDeterminant { re: f64, im: f64 },

    #[error("group is not abelian: commutator residual {residual:e} between generators {first} and {second}")]
    NotAbelian {
        first: usize,
        second: usize,
        residual: f64,
    },

    #[error("abelian group has an empty fixed set in the closed ball (numerical failure)")]
    EmptyFixedSet,

    #[error("subspace dimension {k} exceeds ambient dimension {n}")]
    SubspaceTooLarge { k: usize, n: usize },

    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),

    #[error("orbit enumeration exceeded the cap of {cap} entries")]
    OrbitTooLarge { cap: usize },

    #[error("empty orbit")]
    EmptyOrbit,

    #[error("cusp subgroup is not parabolic with a unique fixed point: {0}")]
    BadCusp(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("barycenter solver did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NoConvergence {
        iterations: usize,
        gradient_norm: f64,
        last_iterate: Vec<f64>,
    },

    #[error("all weights underflowed")]
    WeightUnderflow,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid fundamental domain: {0}")]
    InvalidDomain(String),

    #[error("quadrature did not converge: orders {orders:?} gave {values:?}")]
    QuadratureNonConvergence {
        orders: Vec<usize>,
        values: Vec<f64>,
    },

    #[error("integrand failed at {count} quadrature nodes; first failure: {first}")]
    CallbackFailure { count: usize, first: String },

    #[error("dihedral angles sum to {0}, expected pi")]
    AngleSum(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
