//! Model-based testing for PicklesDSL specifications: parsing, translation
//! into symbolic transition systems, composition into a master model, test
//! generation with switch coverage, rendering and conformance runs.

pub mod cli;
pub mod compose;
pub mod conformance;
pub mod json;
pub mod parser;
pub mod render;
pub mod sts;
pub mod symbolic;
pub mod testgen;
pub mod translate;
pub mod value;

use thiserror::Error;

/// Any failure of the toolchain, as reported by the command-line driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{source}")]
    Parse { path: String, source: parser::ParseError },
    #[error(transparent)]
    Translate(#[from] translate::TranslateError),
    #[error("{path}: {source}")]
    Json { path: String, source: json::JsonError },
    #[error(transparent)]
    Compose(#[from] compose::ComposeError),
    #[error(transparent)]
    Symbolic(#[from] symbolic::SymbolicError),
    #[error(transparent)]
    Testgen(#[from] testgen::TestgenError),
    #[error(transparent)]
    Render(#[from] render::RenderError),
    #[error(transparent)]
    Conformance(#[from] conformance::ConformanceError),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Process exit status: 1 for problems with the inputs, 2 for failures
    /// of the toolchain itself.
    pub fn exit_code(&self) -> i32 {
        use compose::ComposeError as C;
        use symbolic::SymbolicError as S;
        fn symbolic(e: &S) -> i32 {
            match e {
                S::UnknownSwitch(_) | S::NotInput(_) | S::Uncovered(_) | S::Domain(_) => 1,
                S::Disconnected { .. } | S::Eval(_) => 2,
            }
        }
        match self {
            Error::Compose(C::NoPrimary | C::ZeroDepth | C::Empty) => 1,
            Error::Compose(C::Symbolic(e))
            | Error::Symbolic(e)
            | Error::Testgen(testgen::TestgenError::Symbolic(e)) => symbolic(e),
            Error::Compose(_) => 2,
            _ => 1,
        }
    }
}
