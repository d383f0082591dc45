use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate 6D rotation: {0}")]
    DegenerateRotation(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("invalid skeleton model: {0}")]
    InvalidModel(String),
    #[error("point behind camera at frame {frame}, joint {joint} (z = {depth})")]
    BehindCamera { frame: usize, joint: usize, depth: f64 },
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("layout error: {0}")]
    Layout(String),
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("degenerate bone at joint {0}")]
    DegenerateBone(String),
    #[error("degenerate hull: {0}")]
    DegenerateHull(String),
    #[error("biomechanical limits incomplete: no entry for {0}")]
    LimitsIncomplete(String),
    #[error("invalid limits: {0}")]
    InvalidLimits(String),
    #[error("direction is not a descent direction (g.d = {0})")]
    NotDescent(f64),
    #[error("shape trace is empty")]
    NoTrace,
    #[error("initialization mismatch: {0}")]
    InitMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{term}: {source}")]
    Term {
        term: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("stage {stage}, step {step}: {source}")]
    Fit {
        stage: usize,
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("codebook is empty")]
    EmptyCodebook,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("index {index} out of range (size {size})")]
    BadIndex { index: usize, size: usize },
    #[error("malformed index sequence: {0}")]
    BadSequence(String),
    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("item {0} has no prompt feature")]
    MissingPrompt(String),
    #[error("item {0} has no positive dataset item")]
    MissingPositive(String),
    #[error("item {0} has no group label")]
    MissingGroup(String),
    #[error("sequence is empty")]
    EmptySequence,
    #[error("joint subset is empty")]
    EmptySubset,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn in_term(self, term: &'static str) -> Error {
        Error::Term {
            term,
            source: Box::new(self),
        }
    }
}
