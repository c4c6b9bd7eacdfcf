use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// A target value lies outside the open interval a solver can reach.
    #[error("target {value} outside the attainable interval ({lo}, {hi})")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("invalid timings: {0}")]
    InvalidTimings(String),

    /// No multi-start seed converged; carries the smallest residual seen.
    #[error("no timing solution found (best residual {best_residual:.3e})")]
    Infeasible { best_residual: f64 },

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("singular geometry: {0}")]
    Singular(String),

    #[error("degenerate effective frame: Larmor vector vanishes")]
    DegenerateFrame,

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid grid: {0}")]
    Grid(String),
}
