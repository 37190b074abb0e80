use thiserror::Error;

/// Errors raised anywhere in the discretisation pipeline.
#[derive(Debug, Error)]
pub enum VemError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("topology error in cell {cell}: {msg}")]
    Topology { cell: usize, msg: String },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("element error: {0}")]
    Element(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error(
        "fixed-point iteration did not converge after {iterations} iterations (last increment {last_increment:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        last_increment: f64,
        history: Vec<f64>,
    },
    #[error("refinement level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<VemError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl VemError {
    /// Short machine-parsable class name, used by the CLI on failure.
    pub fn class(&self) -> &'static str {
        match self {
            VemError::Parse { .. } => "parse",
            VemError::Topology { .. } => "topology",
            VemError::Geometry(_) => "geometry",
            VemError::Config(_) => "config",
            VemError::Element(_) => "element",
            VemError::Assembly(_) => "assembly",
            VemError::Solver(_) => "solver",
            VemError::NonConvergence { .. } => "nonconvergence",
            VemError::Level { source, .. } => source.class(),
            VemError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, VemError>;
