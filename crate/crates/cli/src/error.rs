use std::fmt;

use termnet::algebra::AlgebraError;
use termnet::dynamic::DynamicError;
use termnet::multiuser::{NetworkError, SolveError};
use termnet::routing::RoutingError;
use termnet::{InterpError, TermError};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> CliError {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> CliError {
        CliError::new(EXIT_USAGE, message)
    }

    pub fn parse(message: impl Into<String>) -> CliError {
        CliError::new(EXIT_PARSE, message)
    }

    pub fn precondition(message: impl Into<String>) -> CliError {
        CliError::new(EXIT_PRECONDITION, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::parse(e.to_string())
    }
}

impl From<TermError> for CliError {
    fn from(e: TermError) -> CliError {
        match e {
            TermError::UnknownVariable(_) | TermError::NotASubterm(_) => {
                CliError::precondition(e.to_string())
            }
            _ => CliError::parse(e.to_string()),
        }
    }
}

impl From<InterpError> for CliError {
    fn from(e: InterpError) -> CliError {
        let code = match e {
            InterpError::BudgetExceeded { .. } => EXIT_BUDGET,
            InterpError::Format(_)
            | InterpError::TableLength { .. }
            | InterpError::EntryOutOfRange { .. }
            | InterpError::AlphabetTooSmall(_) => EXIT_PARSE,
            InterpError::InvalidAlpha(_) => EXIT_USAGE,
            _ => EXIT_PRECONDITION,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<RoutingError> for CliError {
    fn from(e: RoutingError) -> CliError {
        match e {
            RoutingError::Interp(e) => e.into(),
            e => CliError::precondition(e.to_string()),
        }
    }
}

impl From<AlgebraError> for CliError {
    fn from(e: AlgebraError) -> CliError {
        match e {
            AlgebraError::Interp(e) => e.into(),
            AlgebraError::Routing(e) => e.into(),
            AlgebraError::Table(_) | AlgebraError::Axiom(_) => CliError::parse(e.to_string()),
            AlgebraError::Unknown(_) => CliError::usage(e.to_string()),
            _ => CliError::precondition(e.to_string()),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> CliError {
        CliError::parse(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> CliError {
        match e {
            SolveError::Network(e) => e.into(),
            SolveError::Algebra(e) => e.into(),
            SolveError::Term(e) => e.into(),
            SolveError::Interp(e) => e.into(),
        }
    }
}

impl From<DynamicError> for CliError {
    fn from(e: DynamicError) -> CliError {
        match e {
            DynamicError::Interp(e) => e.into(),
            DynamicError::MissingCell(..) => CliError::precondition(e.to_string()),
            e => CliError::parse(e.to_string()),
        }
    }
}
