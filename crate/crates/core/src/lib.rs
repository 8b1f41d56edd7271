//! Term-set model of relay networks.
//!
//! A channel is a list of terms over source variables and coding-function
//! symbols. This crate computes min-cuts of the subterm graph, evaluates
//! concrete coding functions exhaustively (dispersion, one-to-one dispersion,
//! Rényi entropy), builds routing and header-based dynamic routing schemes,
//! searches structured function classes, and reduces multi-user and
//! possible-worlds problems to single term sets.

pub mod algebra;
pub mod catalog;
pub mod dynamic;
pub mod interp;
pub mod mincut;
pub mod multiuser;
pub mod routing;
pub mod term;

pub use interp::{
    Alpha, CodingTable, DispersionValue, EvaluationReport, Evaluator, InterpError, Interpretation, Semantics,
    DEFAULT_BUDGET,
};
pub use mincut::{build_dag, min_cut, min_cut_wrt, verify_certificate, CutCertificate, TermDag};
pub use term::{
    diversify, is_term_cut, parse_term, parse_term_set, restrict_to_variables, subterm_closure, SubtermIndex,
    Term, TermError, TermSet,
};
