use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("Newton iteration failed after {iterations} iterations (residual {residual:e})")]
    NewtonFailed {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },
    #[error("amplitude pole at lambda = {0}")]
    Pole(f64),
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("size guard exceeded: {0}")]
    Size(String),
    #[error("roots are not pairwise distinct (min gap {0:e})")]
    DegenerateRoots(f64),
    #[error("continuation stalled at Delta = {delta}")]
    ContinuationStalled { delta: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of an iterative procedure rather than bad input.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::Convergence(_)
                | Error::NewtonFailed { .. }
                | Error::ContinuationStalled { .. }
                | Error::SingularSystem(_)
        )
    }
}
