use thiserror::Error;

use crate::network::{EdgeId, NodeId};

/// Broad error classes; the CLI maps them to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Precondition,
    Resource,
    Contract,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Input => 2,
            ErrorClass::Precondition => 3,
            ErrorClass::Resource => 4,
            ErrorClass::Contract => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum ApdError {
    #[error("input error: {0}")]
    Input(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("unknown taxon `{0}`")]
    UnknownTaxon(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("node {0} has no leaf among its offspring")]
    NoLeafOffspring(NodeId),
    #[error("reticulation {0} is not visible")]
    InvisibleReticulation(NodeId),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Parse(#[from] crate::newick::ParseError),
}

impl ApdError {
    pub fn class(&self) -> ErrorClass {
        match self {
            ApdError::Input(_)
            | ApdError::UnknownNode(_)
            | ApdError::UnknownEdge(_)
            | ApdError::UnknownTaxon(_)
            | ApdError::Parse(_) => ErrorClass::Input,
            ApdError::Precondition(_)
            | ApdError::NoLeafOffspring(_)
            | ApdError::InvisibleReticulation(_) => ErrorClass::Precondition,
            ApdError::Resource(_) => ErrorClass::Resource,
            ApdError::Contract(_) => ErrorClass::Contract,
        }
    }
}

pub type Result<T, E = ApdError> = std::result::Result<T, E>;
