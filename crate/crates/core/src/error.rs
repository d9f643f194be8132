use std::path::PathBuf;

use thiserror::Error;

use crate::ir::{IrError, Span};

/// Failures while reading and binding rule, capability, and deployment files.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: Span, message: String },
    #[error("{span}: duplicate rule id `{id}`")]
    DuplicateRule { id: String, span: Span },
    #[error("{span}: negative duration `{text}`")]
    NegativeLatency { text: String, span: Span },
    #[error("{}unresolved name `{name}`", loc(.span))]
    Unresolved { name: String, span: Option<Span> },
    #[error("{}value `{value}` is outside the domain of `{attr}`", loc(.span))]
    OutOfDomain {
        attr: String,
        value: String,
        span: Option<Span>,
    },
    #[error("{}type mismatch: {message}", loc(.span))]
    TypeMismatch { message: String, span: Option<Span> },
    #[error("{}{message}", loc(.span))]
    Invalid { message: String, span: Option<Span> },
    #[error("capability catalog: {0}")]
    Catalog(String),
    #[error("deployment: {0}")]
    Deployment(String),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", .path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}{source}", loc(.span))]
    Ir { source: IrError, span: Option<Span> },
}

fn loc(span: &Option<Span>) -> String {
    span.map(|s| format!("{s}: ")).unwrap_or_default()
}

impl LoadError {
    pub fn span(&self) -> Option<Span> {
        match self {
            LoadError::Syntax { span, .. }
            | LoadError::DuplicateRule { span, .. }
            | LoadError::NegativeLatency { span, .. } => Some(*span),
            LoadError::Unresolved { span, .. }
            | LoadError::OutOfDomain { span, .. }
            | LoadError::TypeMismatch { span, .. }
            | LoadError::Invalid { span, .. }
            | LoadError::Ir { span, .. } => *span,
            _ => None,
        }
    }
}
