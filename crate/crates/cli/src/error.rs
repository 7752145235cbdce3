use serde_json::json;
use thiserror::Error;

use crate::parse::ParseError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Analysis(String),
    #[error("{0}")]
    Budget(String),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    pub fn analysis(e: impl std::fmt::Display) -> Self {
        CliError::Analysis(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Parse(_) => 2,
            CliError::Analysis(_) | CliError::Output { .. } => 3,
            CliError::Budget(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Parse(_) => "parse",
            CliError::Analysis(_) => "analysis",
            CliError::Budget(_) => "budget",
            CliError::Output { .. } => "output",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() });
        if let CliError::Parse(p) = self {
            v["line"] = json!(p.line);
            v["column"] = json!(p.column);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_carry_positions() {
        let e = CliError::from(ParseError { line: 2, column: 5, message: "expected '}'".into() });
        let v = e.to_json();
        assert_eq!((v["line"].as_u64(), v["column"].as_u64(), v["exit_code"].as_u64()), (Some(2), Some(5), Some(2)));
        assert_eq!(CliError::Budget("x".into()).exit_code(), 4);
    }
}
