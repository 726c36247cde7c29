//! Library side of the `dissipa` binary: configuration, commands and the
//! embedded oracle suites.

pub mod commands;
pub mod config;
pub mod selftest;

/// A command failure, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    /// Bad configuration or arguments; exit code 2.
    #[error("{0}")]
    Config(String),
    /// The analysis itself failed; exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl From<dissipa::Error> for Failure {
    fn from(e: dissipa::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}
