//! Library side of the `recbayes` command-line tool: configuration
//! parsing, CSV report writing, and the validation suites. The binary in
//! `main.rs` is a thin dispatcher over these modules.

pub mod config;
pub mod report;
pub mod validate;

use std::fmt;

/// Process exit codes: 0 success, 1 validation-suite failure,
/// 2 usage/config error, 3 runtime numerical failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    SuiteFailed = 1,
    ConfigError = 2,
    RuntimeError = 3,
}

/// A failure destined for stderr, with the exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: ExitCode::ConfigError, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: ExitCode::RuntimeError, message: message.into() }
    }

    /// One-line JSON rendering for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.message, "exit": self.code as i32 }).to_string()
    }
}

impl From<recbayes::Error> for CliError {
    fn from(e: recbayes::Error) -> Self {
        use recbayes::Error::*;
        let code = match &e {
            SingularMatrix { .. } | NonFinite { .. } | GridMassLeak { .. } | GridAllZero => {
                ExitCode::RuntimeError
            }
            DimensionMismatch { .. }
            | InvalidCovariance { .. }
            | DegenerateProduct
            | UnknownName { .. }
            | IncompatibleFilter { .. }
            | InvalidConfig { .. } => ExitCode::ConfigError,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::runtime(format!("io error: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_match_contract() {
        assert_eq!(ExitCode::Success as i32, 0);
        assert_eq!(ExitCode::SuiteFailed as i32, 1);
        assert_eq!(ExitCode::ConfigError as i32, 2);
        assert_eq!(ExitCode::RuntimeError as i32, 3);
    }

    #[test]
    fn core_errors_map_to_codes() {
        let config: CliError = recbayes::Error::InvalidConfig {
            field: "x".into(),
            detail: "bad".into(),
        }
        .into();
        assert_eq!(config.code, ExitCode::ConfigError);
        let runtime: CliError =
            recbayes::Error::SingularMatrix { what: "S".into(), condition: f64::INFINITY }.into();
        assert_eq!(runtime.code, ExitCode::RuntimeError);
        assert!(runtime.to_json().contains("\"exit\":3"));
    }
}
