//! Multi-user networks: conversion of a source/relay/user graph into one
//! term set per user, the disjoint-union term set of all users, and
//! solvability of the many-to-many cast.
//!
//! Network files are line based:
//!
//! ```text
//! source x
//! source y
//! node f <- x y
//! user r1 <- x f
//! require r1 y
//! ```
//!
//! The order of names after `<-` is the argument order of the node's
//! coding function. Without a `require` line a user requests every source.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{exhaustive_search, Algebra, AlgebraError, FunctionClass, Objective, SearchOptions};
use crate::interp::{checked_pow, DispersionValue, Evaluator, InterpError, Interpretation, Semantics};
use crate::term::{Term, TermError, TermSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("`{0}` is defined twice")]
    Duplicate(String),
    #[error("`{0}` is not defined")]
    Undefined(String),
    #[error("`{0}` is a user and cannot feed other nodes")]
    UserAsInput(String),
    #[error("cycle through `{0}`")]
    Cycle(String),
    #[error("user `{0}` has an empty in-neighborhood")]
    EmptyUser(String),
    #[error("user `{user}` requires `{var}`, which does not reach it")]
    Unreachable { user: String, var: String },
    #[error(transparent)]
    Term(#[from] TermError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Source,
    Inner,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    /// Ordered in-neighborhood.
    pub inputs: Vec<String>,
}

/// Acyclic network with nodes stored in a topological order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkInstance {
    pub nodes: Vec<Node>,
    /// Per-user requested sources; absent users request all sources.
    pub requirements: BTreeMap<String, Vec<String>>,
}

fn syntax(line: usize, message: impl Into<String>) -> NetworkError {
    NetworkError::Syntax {
        line,
        message: message.into(),
    }
}

fn is_identifier(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_alphabetic() || ch == '_')
        && c.all(|ch| ch.is_alphanumeric() || ch == '_' || ch == '\'')
}

impl NetworkInstance {
    pub fn parse(text: &str) -> Result<NetworkInstance, NetworkError> {
        let mut nodes: Vec<Node> = Vec::new();
        let mut requirements = BTreeMap::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut words = content.split_whitespace();
            let keyword = words.next().unwrap();
            let name = words
                .next()
                .ok_or_else(|| syntax(line, format!("`{keyword}` needs a name")))?
                .to_string();
            if !is_identifier(&name) {
                return Err(syntax(line, format!("invalid name `{name}`")));
            }
            let rest: Vec<String> = words.map(str::to_string).collect();
            let kind = match keyword {
                "source" => NodeKind::Source,
                "node" => NodeKind::Inner,
                "user" => NodeKind::User,
                "require" => {
                    requirements.insert(name, rest);
                    continue;
                }
                other => return Err(syntax(line, format!("unknown keyword `{other}`"))),
            };
            let inputs = match kind {
                NodeKind::Source if rest.is_empty() => Vec::new(),
                NodeKind::Source => return Err(syntax(line, "sources take no inputs")),
                _ => match rest.split_first() {
                    Some((arrow, ins)) if arrow == "<-" => ins.to_vec(),
                    Some(_) => return Err(syntax(line, "expected `<-` before the inputs")),
                    None if kind == NodeKind::User => return Err(NetworkError::EmptyUser(name)),
                    None => return Err(syntax(line, "inner nodes need at least one input")),
                },
            };
            if kind == NodeKind::User && inputs.is_empty() {
                return Err(NetworkError::EmptyUser(name));
            }
            if kind == NodeKind::Inner && inputs.is_empty() {
                return Err(syntax(line, "inner nodes need at least one input"));
            }
            if !seen.insert(name.clone()) {
                return Err(NetworkError::Duplicate(name));
            }
            nodes.push(Node { name, kind, inputs });
        }
        NetworkInstance::new(nodes, requirements)
    }

    /// Validate and sort topologically (stable with respect to the given
    /// order).
    pub fn new(
        nodes: Vec<Node>,
        requirements: BTreeMap<String, Vec<String>>,
    ) -> Result<NetworkInstance, NetworkError> {
        let by_name: HashMap<&str, &Node> = nodes.iter().map(|n| (n.name.as_str(), n)).collect();
        if by_name.len() != nodes.len() {
            let mut seen = HashSet::new();
            let dup = nodes.iter().find(|n| !seen.insert(&n.name)).unwrap();
            return Err(NetworkError::Duplicate(dup.name.clone()));
        }
        for n in &nodes {
            for input in &n.inputs {
                match by_name.get(input.as_str()) {
                    None => return Err(NetworkError::Undefined(input.clone())),
                    Some(m) if m.kind == NodeKind::User => {
                        return Err(NetworkError::UserAsInput(input.clone()))
                    }
                    _ => {}
                }
            }
        }
        for (user, vars) in &requirements {
            match by_name.get(user.as_str()) {
                Some(n) if n.kind == NodeKind::User => {}
                _ => return Err(NetworkError::Undefined(user.clone())),
            }
            for v in vars {
                match by_name.get(v.as_str()) {
                    Some(n) if n.kind == NodeKind::Source => {}
                    _ => return Err(NetworkError::Undefined(v.clone())),
                }
            }
        }
        // Depth-first topological sort, visiting nodes in file order.
        let mut state: HashMap<&str, u8> = HashMap::new();
        let mut order: Vec<Node> = Vec::with_capacity(nodes.len());
        fn visit<'a>(
            name: &'a str,
            by_name: &HashMap<&'a str, &'a Node>,
            state: &mut HashMap<&'a str, u8>,
            order: &mut Vec<Node>,
        ) -> Result<(), NetworkError> {
            match state.get(name) {
                Some(2) => return Ok(()),
                Some(1) => return Err(NetworkError::Cycle(name.to_string())),
                _ => {}
            }
            state.insert(name, 1);
            let node = by_name[name];
            for input in &node.inputs {
                visit(input, by_name, state, order)?;
            }
            state.insert(name, 2);
            order.push(node.clone());
            Ok(())
        }
        for n in &nodes {
            visit(&n.name, &by_name, &mut state, &mut order)?;
        }
        Ok(NetworkInstance {
            nodes: order,
            requirements,
        })
    }

    pub fn sources(&self) -> Vec<&str> {
        self.of_kind(NodeKind::Source)
    }

    pub fn users(&self) -> Vec<&str> {
        self.of_kind(NodeKind::User)
    }

    fn of_kind(&self, kind: NodeKind) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|n| n.kind == kind)
            .map(|n| n.name.as_str())
            .collect()
    }
}

/// The channel seen by one user.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserChannel {
    pub user: String,
    #[serde(serialize_with = "display")]
    pub terms: TermSet,
    /// Every requested variable arrives unencoded.
    pub trivial: bool,
}

fn display<S: serde::Serializer>(ts: &TermSet, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(ts)
}

/// Assign each node its term and collect every user's in-neighborhood.
pub fn network_to_user_channels(net: &NetworkInstance) -> Result<Vec<UserChannel>, NetworkError> {
    let mut terms: HashMap<&str, Term> = HashMap::new();
    let sources: Vec<String> = net.sources().iter().map(|s| s.to_string()).collect();
    let mut channels = Vec::new();
    for node in &net.nodes {
        let args: Vec<Term> = node.inputs.iter().map(|i| terms[i.as_str()].clone()).collect();
        match node.kind {
            NodeKind::Source => {
                terms.insert(&node.name, Term::var(node.name.clone()));
            }
            NodeKind::Inner => {
                terms.insert(&node.name, Term::app(node.name.clone(), args));
            }
            NodeKind::User => {
                let required = net
                    .requirements
                    .get(&node.name)
                    .cloned()
                    .unwrap_or_else(|| sources.clone());
                let present: HashSet<String> = args.iter().flat_map(crate::term::variables_of).collect();
                if let Some(var) = required.iter().find(|v| !present.contains(*v)) {
                    return Err(NetworkError::Unreachable {
                        user: node.name.clone(),
                        var: var.clone(),
                    });
                }
                let trivial = required
                    .iter()
                    .all(|v| args.iter().any(|t| matches!(t, Term::Var(x) if x == v)));
                channels.push(UserChannel {
                    user: node.name.clone(),
                    terms: TermSet::new(args, Some(required))?,
                    trivial,
                });
            }
        }
    }
    Ok(channels)
}

/// Disjoint union of the channels with variable `v` of the `j`-th channel
/// (1-based) renamed to `v_j`. Function symbols stay shared.
pub fn combine_channels(channels: &[&TermSet]) -> Result<TermSet, TermError> {
    let taken: HashSet<String> = channels.iter().flat_map(|c| c.identifiers()).collect();
    let mut terms = Vec::new();
    let mut required = Vec::new();
    for (j, ts) in channels.iter().enumerate() {
        let mut rename = HashMap::new();
        for v in ts.variables() {
            let mut fresh = format!("{v}_{}", j + 1);
            while taken.contains(&fresh) {
                fresh.push('\'');
            }
            rename.insert(v.clone(), fresh);
        }
        let renamed = ts.rename(&rename, &HashMap::new())?;
        terms.extend(renamed.terms().iter().cloned());
        required.extend(ts.required().iter().map(|v| rename[v].clone()));
    }
    TermSet::new(terms, Some(required))
}

/// Combined term set of the channels that need coding.
pub fn combined_term_set(channels: &[UserChannel]) -> Result<TermSet, TermError> {
    let parts: Vec<&TermSet> = channels.iter().filter(|c| !c.trivial).map(|c| &c.terms).collect();
    combine_channels(&parts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Solvable,
    Unsolvable,
    /// The bounded search could not decide.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserCheck {
    pub user: String,
    pub decodable: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Solvability {
    pub verdict: Verdict,
    pub reason: String,
    pub q: u32,
    /// Image and one-to-one image of the combined term set under the witness.
    pub combined_dispersion: Option<DispersionValue>,
    pub combined_one_to_one: Option<DispersionValue>,
    pub users: Vec<UserCheck>,
    #[serde(skip)]
    pub witness: Option<Interpretation>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Check one interpretation: per-user decodability of the requested
/// sources, plus the combined image statistics.
pub fn check_witness<S: Semantics + ?Sized>(
    channels: &[UserChannel],
    witness: &S,
    budget: u64,
) -> Result<(Vec<UserCheck>, Option<(DispersionValue, DispersionValue)>), SolveError> {
    let mut users = Vec::new();
    for c in channels.iter() {
        let eval = Evaluator::new(&c.terms, witness)?.with_budget(budget);
        let mut decodable = BTreeMap::new();
        for v in c.terms.required() {
            let pos = c
                .terms
                .signature()
                .variable_index(v)
                .expect("required variables occur");
            decodable.insert(v.clone(), eval.decodable(pos)?);
        }
        users.push(UserCheck {
            user: c.user.clone(),
            decodable,
        });
    }
    let combined = combined_term_set(channels)?;
    let stats = if combined.r() == 0 {
        None
    } else {
        match Evaluator::new(&combined, witness)?
            .with_budget(budget)
            .histogram()
        {
            Ok(rep) => Some((rep.dispersion(), rep.one_to_one_dispersion())),
            Err(InterpError::BudgetExceeded { .. }) => None,
            Err(e) => return Err(e.into()),
        }
    };
    Ok((users, stats))
}

/// Decide whether every user can recover its requested sources with one
/// choice of coding functions over an alphabet of size `q`.
///
/// A witness that passes settles the question. Otherwise every assignment
/// of tables is searched when the budget allows; this is only conclusive
/// when each user requests all of its channel's variables.
pub fn solvable(
    net: &NetworkInstance,
    q: u32,
    witness: Option<&Interpretation>,
    opts: &SearchOptions,
) -> Result<Solvability, SolveError> {
    let channels = network_to_user_channels(net)?;
    let mut last_check = None;
    if let Some(w) = witness {
        let (users, stats) = check_witness(&channels, w, opts.budget)?;
        let ok = users.iter().all(|u| u.decodable.values().all(|&d| d));
        if ok {
            return Ok(Solvability {
                verdict: Verdict::Solvable,
                reason: "witness decodes every request".into(),
                q,
                combined_dispersion: stats.map(|s| s.0),
                combined_one_to_one: stats.map(|s| s.1),
                users,
                witness: Some(w.clone()),
            });
        }
        last_check = Some((users, stats));
    }
    let combined = combined_term_set(&channels)?;
    let unknown =
        |reason: String, last: Option<(Vec<UserCheck>, Option<(DispersionValue, DispersionValue)>)>| {
            let (users, stats) = last.unwrap_or_default();
            Solvability {
                verdict: Verdict::Unknown,
                reason,
                q,
                combined_dispersion: stats.map(|s| s.0),
                combined_one_to_one: stats.map(|s| s.1),
                users,
                witness: None,
            }
        };
    if combined.r() == 0 {
        return Ok(Solvability {
            verdict: Verdict::Solvable,
            reason: "every user receives its requests unencoded".into(),
            q,
            combined_dispersion: None,
            combined_one_to_one: None,
            users: Vec::new(),
            witness: Some(Interpretation::empty(q)?),
        });
    }
    if !combined.requires_all() {
        return Ok(unknown(
            "exhaustive search only decides users that request every variable they see".into(),
            last_check,
        ));
    }
    let alg = Algebra::modular_ring(q)?;
    let result = match exhaustive_search(
        &combined,
        &alg,
        &FunctionClass::AllFunctions,
        Objective::Dispersion,
        opts,
    ) {
        Ok(r) => r,
        Err(AlgebraError::Interp(InterpError::BudgetExceeded { .. }))
        | Err(AlgebraError::ClassTooLarge { .. }) => {
            return Ok(unknown(
                format!("search space exceeds the budget of {}", opts.budget),
                last_check,
            ));
        }
        Err(e) => return Err(e.into()),
    };
    let full = checked_pow(q, combined.k()).unwrap_or(u128::MAX);
    let best = result.report.image_size() as u128;
    if best == full {
        let (users, stats) = check_witness(&channels, &result.best_tables, opts.budget)?;
        Ok(Solvability {
            verdict: Verdict::Solvable,
            reason: format!("exhaustive search over {} assignments", result.explored),
            q,
            combined_dispersion: stats.map(|s| s.0),
            combined_one_to_one: stats.map(|s| s.1),
            users,
            witness: Some(result.best_tables),
        })
    } else {
        let (users, _) = last_check.unwrap_or_default();
        Ok(Solvability {
            verdict: Verdict::Unsolvable,
            reason: format!(
                "exhaustive search over {} assignments: best combined image {best} < {full}",
                result.explored
            ),
            q,
            combined_dispersion: Some(result.report.dispersion()),
            combined_one_to_one: Some(result.report.one_to_one_dispersion()),
            users,
            witness: None,
        })
    }
}
