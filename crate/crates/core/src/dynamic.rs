//! Possible-worlds networks: term sets indexed by (user, world, time slot),
//! utility and message demands, and clairvoyant diversification.
//!
//! File format:
//!
//! ```text
//! world 1 0.5
//! world 2 1/2
//! slot t 1
//! cell u1 1 t
//!   term f(x, y)
//!   require x
//! end
//! utility u1 > 0.5
//! utility u2 >= 1 1/t=0.25 2/t=0.75
//! message u1 1 t x
//! ```
//!
//! A utility line without coefficients weights cell `(w, t)` by the world
//! probability times the slot weight. Noise is written as a fresh variable
//! that no demand asks for.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::interp::{
    checked_pow, CodingTable, ConditionMode, Evaluator, InterpError, Interpretation, Semantics,
};
use crate::mincut::{min_cut_value, min_cut_wrt};
use crate::multiuser::combine_channels;
use crate::term::{parse_term_set, Term, TermError, TermSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("world probabilities sum to {0}, not 1")]
    Probabilities(f64),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("cell ({0}, {1}, {2}) is defined twice")]
    DuplicateCell(String, String, String),
    #[error("no cell for user {0}, world {1}, slot {2}")]
    MissingCell(String, String, String),
    #[error("negative utility coefficient {0}")]
    NegativeCoefficient(f64),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Interp(#[from] InterpError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct World {
    pub name: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slot {
    pub name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub user: String,
    pub world: String,
    pub slot: String,
    #[serde(serialize_with = "display")]
    pub terms: TermSet,
}

fn display<S: serde::Serializer>(ts: &TermSet, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(ts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityDemand {
    pub user: String,
    pub threshold: f64,
    /// `>` when true, `>=` otherwise.
    pub strict: bool,
    /// Explicit coefficient per (world, slot); `None` means probability
    /// times slot weight.
    pub coefficients: Option<BTreeMap<(String, String), f64>>,
}

impl UtilityDemand {
    pub fn is_met(&self, value: f64) -> bool {
        if self.strict {
            value > self.threshold
        } else {
            value >= self.threshold
        }
    }
}

/// Term equation `d(channel of cell) = variable`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageDemand {
    pub user: String,
    pub world: String,
    pub slot: String,
    pub variable: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicNetwork {
    pub worlds: Vec<World>,
    pub slots: Vec<Slot>,
    pub cells: Vec<Cell>,
    pub utilities: Vec<UtilityDemand>,
    pub messages: Vec<MessageDemand>,
}

fn syntax(line: usize, message: impl Into<String>) -> DynamicError {
    DynamicError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_number(s: &str, line: usize) -> Result<f64, DynamicError> {
    let value = match s.split_once('/') {
        Some((n, d)) => {
            let (n, d): (f64, f64) = (
                n.parse().map_err(|_| syntax(line, format!("bad number `{s}`")))?,
                d.parse().map_err(|_| syntax(line, format!("bad number `{s}`")))?,
            );
            n / d
        }
        None => s.parse().map_err(|_| syntax(line, format!("bad number `{s}`")))?,
    };
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(syntax(line, format!("`{s}` is not a non-negative number")))
    }
}

impl DynamicNetwork {
    pub fn parse(text: &str) -> Result<DynamicNetwork, DynamicError> {
        let mut worlds = Vec::new();
        let mut slots = Vec::new();
        let mut cells = Vec::new();
        let mut utilities = Vec::new();
        let mut messages = Vec::new();
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        while let Some((line, raw)) = lines.next() {
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let words: Vec<&str> = content.split_whitespace().collect();
            match words[0] {
                "world" | "slot" => {
                    let [_, name, value] = words[..] else {
                        return Err(syntax(line, format!("expected `{} <name> <value>`", words[0])));
                    };
                    let value = parse_number(value, line)?;
                    if words[0] == "world" {
                        worlds.push(World {
                            name: name.to_string(),
                            probability: value,
                        });
                    } else {
                        slots.push(Slot {
                            name: name.to_string(),
                            weight: value,
                        });
                    }
                }
                "cell" => {
                    let [_, user, world, slot] = words[..] else {
                        return Err(syntax(line, "expected `cell <user> <world> <slot>`"));
                    };
                    let mut body = String::new();
                    let mut closed = false;
                    for (_, l) in lines.by_ref() {
                        if l.split('#').next().unwrap_or("").trim() == "end" {
                            closed = true;
                            break;
                        }
                        body.push_str(l);
                        body.push('\n');
                    }
                    if !closed {
                        return Err(syntax(line, "cell block has no `end`"));
                    }
                    let terms = parse_term_set(&body).map_err(|e| match e {
                        TermError::Syntax {
                            line: l,
                            column,
                            message,
                        } => TermError::Syntax {
                            line: line + l,
                            column,
                            message,
                        },
                        other => other,
                    })?;
                    cells.push(Cell {
                        user: user.to_string(),
                        world: world.to_string(),
                        slot: slot.to_string(),
                        terms,
                    });
                }
                "utility" => {
                    if words.len() < 4 {
                        return Err(syntax(
                            line,
                            "expected `utility <user> >|>= <threshold> [w/t=c ...]`",
                        ));
                    }
                    let strict = match words[2] {
                        ">" => true,
                        ">=" => false,
                        other => return Err(syntax(line, format!("expected `>` or `>=`, got `{other}`"))),
                    };
                    let threshold: f64 = words[3]
                        .parse()
                        .map_err(|_| syntax(line, format!("bad threshold `{}`", words[3])))?;
                    let coefficients = if words.len() > 4 {
                        let mut map = BTreeMap::new();
                        for spec in &words[4..] {
                            let (cell, c) = spec.split_once('=').ok_or_else(|| {
                                syntax(line, format!("expected `world/slot=c`, got `{spec}`"))
                            })?;
                            let (w, t) = cell.split_once('/').ok_or_else(|| {
                                syntax(line, format!("expected `world/slot`, got `{cell}`"))
                            })?;
                            let c: f64 = c
                                .parse()
                                .map_err(|_| syntax(line, format!("bad coefficient `{c}`")))?;
                            if c < 0.0 {
                                return Err(DynamicError::NegativeCoefficient(c));
                            }
                            map.insert((w.to_string(), t.to_string()), c);
                        }
                        Some(map)
                    } else {
                        None
                    };
                    utilities.push(UtilityDemand {
                        user: words[1].to_string(),
                        threshold,
                        strict,
                        coefficients,
                    });
                }
                "message" => {
                    let [_, user, world, slot, variable] = words[..] else {
                        return Err(syntax(
                            line,
                            "expected `message <user> <world> <slot> <variable>`",
                        ));
                    };
                    messages.push(MessageDemand {
                        user: user.to_string(),
                        world: world.to_string(),
                        slot: slot.to_string(),
                        variable: variable.to_string(),
                    });
                }
                other => return Err(syntax(line, format!("unknown keyword `{other}`"))),
            }
        }
        DynamicNetwork::new(worlds, slots, cells, utilities, messages)
    }

    pub fn new(
        worlds: Vec<World>,
        slots: Vec<Slot>,
        cells: Vec<Cell>,
        utilities: Vec<UtilityDemand>,
        messages: Vec<MessageDemand>,
    ) -> Result<DynamicNetwork, DynamicError> {
        let total: f64 = worlds.iter().map(|w| w.probability).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DynamicError::Probabilities(total));
        }
        let dn = DynamicNetwork {
            worlds,
            slots,
            cells,
            utilities,
            messages,
        };
        let mut seen = HashSet::new();
        for c in &dn.cells {
            dn.world(&c.world)?;
            dn.slot(&c.slot)?;
            if !seen.insert((&c.user, &c.world, &c.slot)) {
                return Err(DynamicError::DuplicateCell(
                    c.user.clone(),
                    c.world.clone(),
                    c.slot.clone(),
                ));
            }
        }
        // One signature across all cells.
        let all = dn.shared_signature()?;
        let users: HashSet<&str> = dn.cells.iter().map(|c| c.user.as_str()).collect();
        for u in &dn.utilities {
            if !users.contains(u.user.as_str()) {
                return Err(DynamicError::Unknown {
                    kind: "user",
                    name: u.user.clone(),
                });
            }
            if let Some(coef) = &u.coefficients {
                for (w, t) in coef.keys() {
                    dn.world(w)?;
                    dn.slot(t)?;
                }
            }
        }
        for m in &dn.messages {
            dn.cell(&m.user, &m.world, &m.slot)?;
            if all.signature().variable_index(&m.variable).is_none() {
                return Err(DynamicError::Unknown {
                    kind: "variable",
                    name: m.variable.clone(),
                });
            }
        }
        Ok(dn)
    }

    /// All cell terms in one term set; fails on arity or role conflicts.
    pub fn shared_signature(&self) -> Result<TermSet, TermError> {
        let terms: Vec<Term> = self
            .cells
            .iter()
            .flat_map(|c| c.terms.terms().iter().cloned())
            .collect();
        TermSet::new(terms, None)
    }

    fn world(&self, name: &str) -> Result<&World, DynamicError> {
        self.worlds
            .iter()
            .find(|w| w.name == name)
            .ok_or_else(|| DynamicError::Unknown {
                kind: "world",
                name: name.to_string(),
            })
    }

    fn slot(&self, name: &str) -> Result<&Slot, DynamicError> {
        self.slots
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| DynamicError::Unknown {
                kind: "slot",
                name: name.to_string(),
            })
    }

    pub fn cell(&self, user: &str, world: &str, slot: &str) -> Result<&Cell, DynamicError> {
        self.cells
            .iter()
            .find(|c| c.user == user && c.world == world && c.slot == slot)
            .ok_or_else(|| DynamicError::MissingCell(user.into(), world.into(), slot.into()))
    }

    /// Users in order of first appearance.
    pub fn users(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.user.as_str()) {
                out.push(&c.user);
            }
        }
        out
    }

    /// Name of symbol `f` in world `w` after clairvoyant diversification.
    pub fn clairvoyant_names(&self) -> BTreeMap<(String, String), String> {
        let sig = self.shared_signature().expect("validated at construction");
        let mut taken: HashSet<String> = sig.identifiers();
        let mut names = BTreeMap::new();
        for c in &self.cells {
            for f in &c.terms.signature().functions {
                let key = (f.name.clone(), c.world.clone());
                if names.contains_key(&key) {
                    continue;
                }
                let mut fresh = format!("{}_{}", f.name, c.world);
                while taken.contains(&fresh) {
                    fresh.push('\'');
                }
                taken.insert(fresh.clone());
                names.insert(key, fresh);
            }
        }
        names
    }
}

/// Give every function symbol a separate copy per world.
pub fn clairvoyant_diversify(dn: &DynamicNetwork) -> DynamicNetwork {
    let names = dn.clairvoyant_names();
    let cells = dn
        .cells
        .iter()
        .map(|c| {
            let syms: HashMap<String, String> = c
                .terms
                .signature()
                .functions
                .iter()
                .map(|f| (f.name.clone(), names[&(f.name.clone(), c.world.clone())].clone()))
                .collect();
            Cell {
                terms: c.terms.rename(&HashMap::new(), &syms).expect("fresh names"),
                ..c.clone()
            }
        })
        .collect();
    DynamicNetwork { cells, ..dn.clone() }
}

/// Copy each table of `interp` to every world-indexed symbol.
pub fn lift_to_clairvoyant(
    dn: &DynamicNetwork,
    interp: &Interpretation,
) -> Result<Interpretation, DynamicError> {
    let mut out = Interpretation::empty(interp.q())?;
    for ((f, _), name) in dn.clairvoyant_names() {
        let table = interp
            .table(&f)
            .ok_or_else(|| InterpError::MissingTable(f.clone()))?;
        out.insert(CodingTable {
            symbol: name,
            ..table.clone()
        })?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellDispersion {
    pub user: String,
    pub world: String,
    pub slot: String,
    /// Base-q value; `None` for −∞.
    pub value: Option<f64>,
    /// Worst-case dispersion of the required variables with the others
    /// fixed, rather than plain dispersion.
    pub conditioned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionMatrix {
    pub cells: Vec<CellDispersion>,
}

impl DispersionMatrix {
    pub fn get(&self, user: &str, world: &str, slot: &str) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.user == user && c.world == world && c.slot == slot)
            .map(|c| c.value.unwrap_or(f64::NEG_INFINITY))
    }
}

/// Dispersion of every cell under one interpretation.
pub fn dispersion_matrix<S: Semantics + ?Sized>(
    dn: &DynamicNetwork,
    sem: &S,
    budget: u64,
) -> Result<DispersionMatrix, DynamicError> {
    let cells = dn
        .cells
        .par_iter()
        .map(|c| {
            let eval = Evaluator::new(&c.terms, sem)?.with_budget(budget).sequential();
            let conditioned = !c.terms.requires_all();
            let value = if conditioned {
                let keep: Vec<usize> = c
                    .terms
                    .required()
                    .iter()
                    .map(|v| {
                        c.terms
                            .signature()
                            .variable_index(v)
                            .expect("required variables occur")
                    })
                    .collect();
                eval.conditional_dispersion(&keep)?.value(ConditionMode::Worst)
            } else {
                eval.histogram()?.dispersion().value()
            };
            Ok(CellDispersion {
                user: c.user.clone(),
                world: c.world.clone(),
                slot: c.slot.clone(),
                value: value.is_finite().then_some(value),
                conditioned,
            })
        })
        .collect::<Result<Vec<_>, DynamicError>>()?;
    Ok(DispersionMatrix { cells })
}

fn weighted_sum(
    dn: &DynamicNetwork,
    demand: &UtilityDemand,
    mut cell_value: impl FnMut(&Cell) -> Result<f64, DynamicError>,
) -> Result<f64, DynamicError> {
    let weights: Vec<((String, String), f64)> = match &demand.coefficients {
        Some(c) => c.iter().map(|(k, &v)| (k.clone(), v)).collect(),
        None => dn
            .worlds
            .iter()
            .flat_map(|w| {
                dn.slots
                    .iter()
                    .map(move |t| ((w.name.clone(), t.name.clone()), w.probability * t.weight))
            })
            .collect(),
    };
    let mut total = 0.0;
    for ((w, t), c) in weights {
        if c == 0.0 {
            continue;
        }
        let cell = dn.cell(&demand.user, &w, &t)?;
        total += c * cell_value(cell)?;
    }
    Ok(total)
}

/// The demand's utility function on a dispersion matrix.
pub fn utility_value(
    dn: &DynamicNetwork,
    demand: &UtilityDemand,
    matrix: &DispersionMatrix,
) -> Result<f64, DynamicError> {
    weighted_sum(dn, demand, |c| {
        matrix
            .get(&c.user, &c.world, &c.slot)
            .ok_or_else(|| DynamicError::MissingCell(c.user.clone(), c.world.clone(), c.slot.clone()))
    })
}

/// Min-cut of a cell, with respect to its requirement when it has one.
pub fn cell_min_cut(cell: &Cell) -> usize {
    if cell.terms.requires_all() {
        min_cut_value(&cell.terms)
    } else {
        min_cut_wrt(&cell.terms, cell.terms.required())
            .expect("required variables belong to the cell")
            .1
            .value
    }
}

/// Utility with every cell at its min-cut, the best value reachable over
/// large alphabets.
pub fn asymptotic_max_utility(dn: &DynamicNetwork, demand: &UtilityDemand) -> Result<f64, DynamicError> {
    weighted_sum(dn, demand, |c| Ok(cell_min_cut(c) as f64))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageCheck {
    #[serde(flatten)]
    pub demand: MessageDemand,
    pub satisfied: bool,
}

/// Evaluate each message demand by decodability of the requested variable
/// from the cell's channel. With `clairvoyant`, cells are read from the
/// clairvoyant network and `sem` must cover the world-indexed symbols.
pub fn message_demands_satisfiable<S: Semantics + ?Sized>(
    dn: &DynamicNetwork,
    sem: &S,
    clairvoyant: bool,
    budget: u64,
) -> Result<Vec<MessageCheck>, DynamicError> {
    let owned;
    let net = if clairvoyant {
        owned = clairvoyant_diversify(dn);
        &owned
    } else {
        dn
    };
    net.messages
        .iter()
        .map(|m| {
            let cell = net.cell(&m.user, &m.world, &m.slot)?;
            let satisfied = match cell.terms.signature().variable_index(&m.variable) {
                Some(pos) => Evaluator::new(&cell.terms, sem)?
                    .with_budget(budget)
                    .sequential()
                    .decodable(pos)?,
                None => false,
            };
            Ok(MessageCheck {
                demand: m.clone(),
                satisfied,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct MessageSearch {
    pub best_satisfied: usize,
    pub demands: usize,
    pub explored: u64,
    #[serde(skip)]
    pub witness: Interpretation,
}

/// Maximum number of message demands met simultaneously by any choice of
/// tables over an alphabet of size `q`, by exhaustive enumeration.
pub fn max_satisfied_message_demands(
    dn: &DynamicNetwork,
    q: u32,
    clairvoyant: bool,
    budget: u64,
) -> Result<MessageSearch, DynamicError> {
    let owned;
    let net = if clairvoyant {
        owned = clairvoyant_diversify(dn);
        &owned
    } else {
        dn
    };
    let sig = net.shared_signature()?;
    let symbols: Vec<(String, usize)> = sig
        .signature()
        .functions
        .iter()
        .map(|f| (f.name.clone(), f.arity))
        .collect();
    let sizes: Vec<usize> = symbols
        .iter()
        .map(|(_, d)| checked_pow(q, *d).map(|s| s as usize))
        .collect::<Option<_>>()
        .ok_or(InterpError::OutputTooWide { q, r: 0 })?;
    let counts: Vec<u128> = sizes
        .iter()
        .map(|&s| checked_pow(q, s).unwrap_or(u128::MAX))
        .collect();
    let total = counts
        .iter()
        .try_fold(1u128, |a, &c| a.checked_mul(c))
        .unwrap_or(u128::MAX);
    let per = net
        .messages
        .iter()
        .map(|m| {
            net.cell(&m.user, &m.world, &m.slot)
                .map(|c| checked_pow(q, c.terms.k()).unwrap_or(u128::MAX))
        })
        .try_fold(0u128, |a, c| c.map(|c| a.saturating_add(c)))?;
    let needed = total.saturating_mul(per.max(1));
    if needed > budget as u128 {
        return Err(InterpError::BudgetExceeded { needed, budget }.into());
    }
    let mut best: Option<(usize, Interpretation)> = None;
    let mut explored = 0;
    for index in 0..total as u64 {
        let mut rest = index;
        let mut tables = Vec::with_capacity(symbols.len());
        for ((name, arity), (&size, &count)) in symbols.iter().zip(sizes.iter().zip(&counts)).rev() {
            let mut n = rest % count as u64;
            rest /= count as u64;
            let mut outputs = vec![0u32; size];
            for o in outputs.iter_mut().rev() {
                *o = (n % q as u64) as u32;
                n /= q as u64;
            }
            tables.push(CodingTable {
                symbol: name.clone(),
                arity: *arity,
                outputs,
            });
        }
        let interp = Interpretation::new(q, tables)?;
        let met = message_demands_satisfiable(net, &interp, false, budget)?
            .iter()
            .filter(|c| c.satisfied)
            .count();
        explored += 1;
        if best.as_ref().is_none_or(|(b, _)| met > *b) {
            best = Some((met, interp));
        }
        if met == net.messages.len() {
            break;
        }
    }
    let (best_satisfied, witness) = best.expect("at least one candidate");
    Ok(MessageSearch {
        best_satisfied,
        demands: net.messages.len(),
        explored,
        witness,
    })
}

/// All cells as one term set, variables renamed apart per cell.
pub fn global_reduction(dn: &DynamicNetwork) -> Result<TermSet, TermError> {
    let parts: Vec<&TermSet> = dn.cells.iter().map(|c| &c.terms).collect();
    combine_channels(&parts)
}
