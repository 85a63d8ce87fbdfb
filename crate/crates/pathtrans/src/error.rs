use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("log undefined: ||g - I||_F = {norm:.6} is outside the injectivity radius {radius}")]
    SingularLog { norm: f64, radius: f64 },
    #[error("crossed-module mismatch: {0}")]
    ModuleMismatch(String),
    #[error("point {point:?} lies outside the chart domain")]
    OutOfChart { point: Vec<f64> },
    #[error("sitting-instant margin violated at node {node}: {detail}")]
    MarginViolation { node: usize, detail: String },
    #[error("paths are not composable: endpoint gap {gap:.3e}")]
    NonComposable { gap: f64 },
    #[error("morphisms are not composable: target/source gap {gap:.3e}")]
    NotComposable { gap: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("integrator diverged at step {step}")]
    IntegratorDiverged { step: usize },
    #[error("projection mismatch: {0}")]
    ProjectionMismatch(String),
    #[error("path is not a loop: endpoint gap {gap:.3e}")]
    NotALoop { gap: f64 },
    #[error("unknown {kind} id '{id}'")]
    UnknownId { kind: &'static str, id: String },
    #[error("invalid {kind} spec '{spec}': {reason}")]
    InvalidSpec {
        kind: &'static str,
        spec: String,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
