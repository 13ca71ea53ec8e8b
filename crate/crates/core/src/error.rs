use crate::quad::QuadError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A model or configuration invariant does not hold.
    #[error("validation error: {0}")]
    Validation(String),
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A defining integral diverges or produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A quadrature or tail estimate missed its tolerance.
    #[error("accuracy error: {what}: achieved {achieved:.3e}, required {required:.3e}")]
    Accuracy { what: String, achieved: f64, required: f64 },
    #[error("degenerate spectrum: |E_{i} - E_{j}| = {gap:.3e} is below the threshold {threshold:.3e}")]
    DegenerateSpectrum { i: usize, j: usize, gap: f64, threshold: f64 },
    #[error("steady state is not unique: {count} eigenvalues within {threshold:.3e} of zero")]
    NonUniqueSteadyState { count: usize, threshold: f64 },
    #[error("Liouvillian is numerically defective (eigenvector condition number {condition:.3e}); a Schur-based analysis is required")]
    Defective { condition: f64 },
    #[error("Hilbert space dimension {dim} exceeds the dense cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}
