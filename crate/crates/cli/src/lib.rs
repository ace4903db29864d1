//! Configuration parsing and command implementations for the `stabsel`
//! binary. Configs are TOML with unknown keys rejected; all floating-point
//! output is serialized with 12 significant digits so golden files are
//! stable across IEEE-754 platforms.

pub mod commands;
pub mod config;

use thiserror::Error;

/// Errors carry the exit code contract: configuration/validation failures
/// exit with 2, runtime numeric failures with 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

/// Formats a float with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt12_is_stable_and_significant() {
        assert_eq!(fmt12(0.1), "1.00000000000e-1");
        assert_eq!(fmt12(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt12(-2.5e10), "-2.50000000000e10");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Runtime("x".into()).exit_code(), 3);
    }
}
