use thiserror::Error;

#[derive(Debug, Error)]
pub enum HotsError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid material data: {0}")]
    Material(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("linear solver failure: {0}")]
    Solver(String),
    #[error("fixed-point iteration did not converge in {0} iterations")]
    FixedPointDiverged(usize),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("artifact error: {0}")]
    Io(String),
    #[error("missing artifact {0}")]
    Missing(String),
    #[error("{stage} stage: {source}")]
    Stage { stage: &'static str, source: Box<HotsError> },
}

impl HotsError {
    /// Short category name, stable across releases.
    pub fn category(&self) -> &'static str {
        match self {
            HotsError::Geometry(_) | HotsError::Material(_) | HotsError::Config(_) => "config",
            HotsError::SolverDiverged { .. }
            | HotsError::Solver(_)
            | HotsError::FixedPointDiverged(_)
            | HotsError::NonFinite(_) => "solver",
            HotsError::Io(_) => "io",
            HotsError::Missing(_) => "missing",
            HotsError::Stage { source, .. } => source.category(),
        }
    }
}

impl From<std::io::Error> for HotsError {
    fn from(e: std::io::Error) -> Self {
        HotsError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HotsError {
    fn from(e: serde_json::Error) -> Self {
        HotsError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HotsError>;
