//! Interpretations of function symbols and exhaustive evaluation of the
//! induced mapping `A^k -> A^r`.
//!
//! Alphabet elements are `0..q`. Element 0 plays the role of the marker
//! symbol used by routing and, unless overridden, interprets the constant
//! `0`. Every measure computed here (dispersion, one-to-one dispersion,
//! Rényi entropies) is a function of the pre-image histogram, which maps a
//! multiplicity `m` to the number of outputs with exactly `m` pre-images.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::term::{subterm_closure, Term, TermSet};

/// Default enumeration budget, in evaluated inputs of the induced mapping.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

const DENSE_OUTPUT_LIMIT: u128 = 1 << 20;
const PARALLEL_THRESHOLD: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(u32),
    #[error("no coding table for function symbol `{0}`")]
    MissingTable(String),
    #[error("symbol `{symbol}` has arity {expected} in the term set but the table has arity {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("table for `{symbol}` has {found} entries, expected {expected}")]
    TableLength {
        symbol: String,
        expected: u128,
        found: usize,
    },
    #[error("table for `{symbol}` contains {value}, outside the alphabet of size {q}")]
    EntryOutOfRange { symbol: String, value: u32, q: u32 },
    #[error("input has {found} coordinates, expected {expected}")]
    InputLength { expected: usize, found: usize },
    #[error("input value {value} outside the alphabet of size {q}")]
    InputOutOfRange { value: u32, q: u32 },
    #[error("enumeration needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("output space of size {q}^{r} is too large to index")]
    OutputTooWide { q: u32, r: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid alpha `{0}`: expected a non-negative rational or `inf`")]
    InvalidAlpha(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("malformed interpretation file: {0}")]
    Format(String),
}

/// Anything that can give meaning to the function symbols of a term set.
pub trait Semantics: Sync {
    fn alphabet_size(&self) -> u32;

    /// Element interpreting the constant `0`.
    fn zero_value(&self) -> u32 {
        0
    }

    /// Map a symbol of the given arity to an id accepted by [`Semantics::apply`].
    fn resolve(&self, symbol: &str, arity: usize) -> Result<usize, InterpError>;

    fn apply(&self, id: usize, args: &[u32]) -> u32;
}

/// Row-major index of an argument tuple, first argument most significant.
#[inline]
pub fn table_index(q: u32, args: &[u32]) -> usize {
    args.iter().fold(0usize, |acc, &a| acc * q as usize + a as usize)
}

/// `q^e` if it fits in a `u128`.
pub fn checked_pow(q: u32, e: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..e {
        acc = acc.checked_mul(q as u128)?;
    }
    Some(acc)
}

/// Explicit lookup table for one function symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingTable {
    pub symbol: String,
    pub arity: usize,
    pub outputs: Vec<u32>,
}

impl CodingTable {
    /// Tabulate `f` over all of `A^arity`.
    pub fn from_fn(symbol: &str, arity: usize, q: u32, f: impl Fn(&[u32]) -> u32) -> CodingTable {
        let size = checked_pow(q, arity).expect("table size overflows") as usize;
        let mut args = vec![0u32; arity];
        let mut outputs = Vec::with_capacity(size);
        for _ in 0..size {
            outputs.push(f(&args));
            for a in args.iter_mut().rev() {
                *a += 1;
                if *a < q {
                    break;
                }
                *a = 0;
            }
        }
        CodingTable {
            symbol: symbol.to_string(),
            arity,
            outputs,
        }
    }

    pub fn lookup(&self, q: u32, args: &[u32]) -> u32 {
        self.outputs[table_index(q, args)]
    }
}

/// An assignment of lookup tables to function symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpretation {
    q: u32,
    zero_value: u32,
    /// Sorted by symbol name.
    tables: Vec<CodingTable>,
}

impl Interpretation {
    pub fn new(q: u32, tables: Vec<CodingTable>) -> Result<Interpretation, InterpError> {
        if q < 2 {
            return Err(InterpError::AlphabetTooSmall(q));
        }
        let mut interp = Interpretation {
            q,
            zero_value: 0,
            tables: Vec::new(),
        };
        for t in tables {
            interp.insert(t)?;
        }
        Ok(interp)
    }

    pub fn empty(q: u32) -> Result<Interpretation, InterpError> {
        Interpretation::new(q, Vec::new())
    }

    /// Add or replace a table, checking its shape.
    pub fn insert(&mut self, table: CodingTable) -> Result<(), InterpError> {
        let expected = checked_pow(self.q, table.arity).unwrap_or(u128::MAX);
        if table.outputs.len() as u128 != expected {
            return Err(InterpError::TableLength {
                symbol: table.symbol.clone(),
                expected,
                found: table.outputs.len(),
            });
        }
        if let Some(&value) = table.outputs.iter().find(|&&v| v >= self.q) {
            return Err(InterpError::EntryOutOfRange {
                symbol: table.symbol.clone(),
                value,
                q: self.q,
            });
        }
        match self
            .tables
            .binary_search_by(|t| t.symbol.as_str().cmp(&table.symbol))
        {
            Ok(i) => self.tables[i] = table,
            Err(i) => self.tables.insert(i, table),
        }
        Ok(())
    }

    /// Tabulate `f` and add it under `symbol`.
    pub fn define(
        &mut self,
        symbol: &str,
        arity: usize,
        f: impl Fn(&[u32]) -> u32,
    ) -> Result<(), InterpError> {
        let q = self.q;
        self.insert(CodingTable::from_fn(symbol, arity, q, f))
    }

    pub fn with_zero_value(mut self, z: u32) -> Interpretation {
        assert!(z < self.q, "zero value outside the alphabet");
        self.zero_value = z;
        self
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn tables(&self) -> &[CodingTable] {
        &self.tables
    }

    pub fn table(&self, symbol: &str) -> Option<&CodingTable> {
        self.tables
            .binary_search_by(|t| t.symbol.as_str().cmp(symbol))
            .ok()
            .map(|i| &self.tables[i])
    }

    /// Copy with every symbol renamed by `rename`. Later duplicates win.
    pub fn renamed(&self, rename: impl Fn(&str) -> String) -> Interpretation {
        let mut out = Interpretation {
            q: self.q,
            zero_value: self.zero_value,
            tables: Vec::new(),
        };
        for t in &self.tables {
            let mut t = t.clone();
            t.symbol = rename(&t.symbol);
            out.insert(t).expect("shape already checked");
        }
        out
    }

    /// Check that every function symbol of `ts` has a table of matching arity.
    pub fn covers(&self, ts: &TermSet) -> Result<(), InterpError> {
        for f in &ts.signature().functions {
            self.resolve(&f.name, f.arity)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = InterpretationFile {
            alphabet: self.q,
            zero: (self.zero_value != 0).then_some(self.zero_value),
            functions: self
                .tables
                .iter()
                .map(|t| {
                    (
                        t.symbol.clone(),
                        TableFile {
                            arity: t.arity,
                            table: t.outputs.clone(),
                        },
                    )
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Interpretation, InterpError> {
        let file: InterpretationFile =
            serde_json::from_str(text).map_err(|e| InterpError::Format(e.to_string()))?;
        let tables = file
            .functions
            .into_iter()
            .map(|(symbol, t)| CodingTable {
                symbol,
                arity: t.arity,
                outputs: t.table,
            })
            .collect();
        let interp = Interpretation::new(file.alphabet, tables)?;
        match file.zero {
            Some(z) if z >= file.alphabet => Err(InterpError::Format(format!(
                "zero value {z} outside the alphabet"
            ))),
            Some(z) => Ok(interp.with_zero_value(z)),
            None => Ok(interp),
        }
    }
}

impl Semantics for Interpretation {
    fn alphabet_size(&self) -> u32 {
        self.q
    }

    fn zero_value(&self) -> u32 {
        self.zero_value
    }

    fn resolve(&self, symbol: &str, arity: usize) -> Result<usize, InterpError> {
        let i = self
            .tables
            .binary_search_by(|t| t.symbol.as_str().cmp(symbol))
            .map_err(|_| InterpError::MissingTable(symbol.to_string()))?;
        let found = self.tables[i].arity;
        if found != arity {
            return Err(InterpError::ArityMismatch {
                symbol: symbol.to_string(),
                expected: arity,
                found,
            });
        }
        Ok(i)
    }

    #[inline]
    fn apply(&self, id: usize, args: &[u32]) -> u32 {
        self.tables[id].outputs[table_index(self.q, args)]
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterpretationFile {
    alphabet: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    zero: Option<u32>,
    functions: BTreeMap<String, TableFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    arity: usize,
    table: Vec<u32>,
}

/// Borrowed tables indexed by position, used by search loops to avoid
/// building an [`Interpretation`] per candidate.
pub struct TableView<'a> {
    pub q: u32,
    pub zero_value: u32,
    pub symbols: &'a [(String, usize)],
    pub tables: Vec<&'a [u32]>,
}

impl Semantics for TableView<'_> {
    fn alphabet_size(&self) -> u32 {
        self.q
    }

    fn zero_value(&self) -> u32 {
        self.zero_value
    }

    fn resolve(&self, symbol: &str, arity: usize) -> Result<usize, InterpError> {
        let i = self
            .symbols
            .iter()
            .position(|(s, _)| s == symbol)
            .ok_or_else(|| InterpError::MissingTable(symbol.to_string()))?;
        if self.symbols[i].1 != arity {
            return Err(InterpError::ArityMismatch {
                symbol: symbol.to_string(),
                expected: arity,
                found: self.symbols[i].1,
            });
        }
        Ok(i)
    }

    #[inline]
    fn apply(&self, id: usize, args: &[u32]) -> u32 {
        self.tables[id][table_index(self.q, args)]
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Var(u32),
    Zero,
    App { id: u32, start: u32, len: u32 },
}

/// A term set compiled against a [`Semantics`]: one operation per distinct
/// subterm, in subterm order, so shared subterms are evaluated once.
#[derive(Debug, Clone)]
pub struct Program {
    q: u32,
    k: usize,
    zero: u32,
    ops: Vec<Op>,
    args: Vec<u32>,
    outputs: Vec<u32>,
    max_arity: usize,
}

impl Program {
    pub fn compile<S: Semantics + ?Sized>(ts: &TermSet, sem: &S) -> Result<Program, InterpError> {
        let q = sem.alphabet_size();
        if q < 2 {
            return Err(InterpError::AlphabetTooSmall(q));
        }
        let idx = subterm_closure(ts);
        let mut ops = Vec::with_capacity(idx.len());
        let mut args = Vec::new();
        let mut max_arity = 0;
        for (i, t) in idx.subterms().iter().enumerate() {
            let op = match t {
                Term::Var(v) => Op::Var(
                    ts.signature()
                        .variable_index(v)
                        .expect("closure variables belong to the signature") as u32,
                ),
                Term::Zero => Op::Zero,
                Term::App(f, a) => {
                    let id = sem.resolve(f, a.len())?;
                    let start = args.len() as u32;
                    args.extend(idx.direct_subterms(i).iter().map(|&c| c as u32));
                    max_arity = max_arity.max(a.len());
                    Op::App {
                        id: id as u32,
                        start,
                        len: a.len() as u32,
                    }
                }
            };
            ops.push(op);
        }
        Ok(Program {
            q,
            k: ts.k(),
            zero: sem.zero_value(),
            ops,
            args,
            outputs: idx.term_vertices().iter().map(|&v| v as u32).collect(),
            max_arity,
        })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.outputs.len()
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            vals: vec![0; self.ops.len()],
            buf: vec![0; self.max_arity],
        }
    }

    #[inline]
    fn run<S: Semantics + ?Sized>(&self, sem: &S, input: &[u32], s: &mut Scratch) {
        for (i, op) in self.ops.iter().enumerate() {
            let v = match *op {
                Op::Var(j) => input[j as usize],
                Op::Zero => self.zero,
                Op::App { id, start, len } => {
                    let (start, len) = (start as usize, len as usize);
                    for (b, &a) in s.buf[..len].iter_mut().zip(&self.args[start..start + len]) {
                        *b = s.vals[a as usize];
                    }
                    sem.apply(id as usize, &s.buf[..len])
                }
            };
            s.vals[i] = v;
        }
    }

    #[inline]
    fn key(&self, vals: &[u32]) -> u128 {
        self.outputs
            .iter()
            .fold(0u128, |acc, &o| acc * self.q as u128 + vals[o as usize] as u128)
    }

    fn output(&self, vals: &[u32]) -> Vec<u32> {
        self.outputs.iter().map(|&o| vals[o as usize]).collect()
    }

    /// Decode an output key back into a tuple.
    pub fn decode_key(&self, mut key: u128) -> Vec<u32> {
        let mut out = vec![0; self.r()];
        for o in out.iter_mut().rev() {
            *o = (key % self.q as u128) as u32;
            key /= self.q as u128;
        }
        out
    }

    pub fn encode_output(&self, output: &[u32]) -> u128 {
        output
            .iter()
            .fold(0u128, |acc, &o| acc * self.q as u128 + o as u128)
    }
}

struct Scratch {
    vals: Vec<u32>,
    buf: Vec<u32>,
}

/// Reusable single-threaded evaluation state for one [`Program`], for
/// loops that evaluate many candidate semantics.
pub struct Runner<'p> {
    program: &'p Program,
    scratch: Scratch,
    input: Vec<u32>,
    out: Vec<u32>,
    dense: Option<Vec<u32>>,
    touched: Vec<u32>,
    sparse: FxHashMap<u128, u64>,
}

impl<'p> Runner<'p> {
    pub fn new(program: &'p Program) -> Runner<'p> {
        let space = checked_pow(program.q, program.r()).unwrap_or(u128::MAX);
        Runner {
            program,
            scratch: program.scratch(),
            input: vec![0; program.k],
            out: vec![0; program.r()],
            dense: (space <= DENSE_OUTPUT_LIMIT).then(|| vec![0; space as usize]),
            touched: Vec::new(),
            sparse: FxHashMap::default(),
        }
    }

    /// Output tuple at `input` (no range checks).
    pub fn eval<S: Semantics + ?Sized>(&mut self, sem: &S, input: &[u32]) -> &[u32] {
        self.program.run(sem, input, &mut self.scratch);
        for (o, &p) in self.out.iter_mut().zip(&self.program.outputs) {
            *o = self.scratch.vals[p as usize];
        }
        &self.out
    }

    /// Pre-image histogram by full enumeration. The caller is responsible
    /// for the budget and for `q^r` fitting in a `u128`.
    pub fn histogram<S: Semantics + ?Sized>(&mut self, sem: &S) -> BTreeMap<u64, u64> {
        let prog = self.program;
        let q = prog.q;
        let total = checked_pow(q, prog.k).expect("caller checked the budget") as u64;
        self.input.iter_mut().for_each(|a| *a = 0);
        let free: Vec<usize> = (0..prog.k).collect();
        let mut hist = BTreeMap::new();
        match self.dense.as_mut() {
            Some(counts) => {
                for _ in 0..total {
                    prog.run(sem, &self.input, &mut self.scratch);
                    let key = prog.key(&self.scratch.vals) as usize;
                    if counts[key] == 0 {
                        self.touched.push(key as u32);
                    }
                    counts[key] += 1;
                    advance(q, &free, &mut self.input);
                }
                for &key in &self.touched {
                    *hist.entry(counts[key as usize] as u64).or_default() += 1;
                    counts[key as usize] = 0;
                }
                self.touched.clear();
            }
            None => {
                for _ in 0..total {
                    prog.run(sem, &self.input, &mut self.scratch);
                    *self.sparse.entry(prog.key(&self.scratch.vals)).or_default() += 1;
                    advance(q, &free, &mut self.input);
                }
                for (_, c) in self.sparse.drain() {
                    *hist.entry(c).or_default() += 1;
                }
            }
        }
        hist
    }
}

/// Write input number `n` of the enumeration over `free` into `input`
/// (first free position most significant).
fn set_digits(q: u32, free: &[usize], mut n: u64, input: &mut [u32]) {
    for &p in free.iter().rev() {
        input[p] = (n % q as u64) as u32;
        n /= q as u64;
    }
}

#[inline]
fn advance(q: u32, free: &[usize], input: &mut [u32]) {
    for &p in free.iter().rev() {
        input[p] += 1;
        if input[p] < q {
            return;
        }
        input[p] = 0;
    }
}

/// Exact multiplicity of every output in the image.
#[derive(Debug, Clone)]
pub enum OutputCounts {
    Dense(Vec<u64>),
    Sparse(FxHashMap<u128, u64>),
}

impl OutputCounts {
    fn new(space: u128) -> OutputCounts {
        if space <= DENSE_OUTPUT_LIMIT {
            OutputCounts::Dense(vec![0; space as usize])
        } else {
            OutputCounts::Sparse(FxHashMap::default())
        }
    }

    #[inline]
    fn add(&mut self, key: u128) {
        match self {
            OutputCounts::Dense(v) => v[key as usize] += 1,
            OutputCounts::Sparse(m) => *m.entry(key).or_default() += 1,
        }
    }

    fn merge(mut self, other: OutputCounts) -> OutputCounts {
        match (&mut self, other) {
            (OutputCounts::Dense(a), OutputCounts::Dense(b)) => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            }
            (OutputCounts::Sparse(a), OutputCounts::Sparse(mut b)) => {
                if b.len() > a.len() {
                    std::mem::swap(a, &mut b);
                }
                for (k, c) in b {
                    *a.entry(k).or_default() += c;
                }
            }
            _ => unreachable!("partial counts share a representation"),
        }
        self
    }

    /// Number of pre-images of the output with the given key.
    pub fn get(&self, key: u128) -> u64 {
        match self {
            OutputCounts::Dense(v) => v.get(key as usize).copied().unwrap_or(0),
            OutputCounts::Sparse(m) => m.get(&key).copied().unwrap_or(0),
        }
    }

    /// `(key, multiplicity)` for every output in the image.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (u128, u64)> + '_> {
        match self {
            OutputCounts::Dense(v) => Box::new(
                v.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(k, &c)| (k as u128, c)),
            ),
            OutputCounts::Sparse(m) => Box::new(m.iter().map(|(&k, &c)| (k, c))),
        }
    }

    pub fn histogram(&self) -> BTreeMap<u64, u64> {
        let mut h = BTreeMap::new();
        for (_, c) in self.iter() {
            *h.entry(c).or_default() += 1;
        }
        h
    }
}

/// Compiled term set plus semantics, with an enumeration budget.
pub struct Evaluator<'a, S: Semantics + ?Sized> {
    program: Program,
    sem: &'a S,
    budget: u64,
    parallel: bool,
}

impl<'a, S: Semantics + ?Sized> Evaluator<'a, S> {
    pub fn new(ts: &TermSet, sem: &'a S) -> Result<Self, InterpError> {
        Ok(Evaluator {
            program: Program::compile(ts, sem)?,
            sem,
            budget: DEFAULT_BUDGET,
            parallel: true,
        })
    }

    pub fn from_program(program: Program, sem: &'a S) -> Self {
        Evaluator {
            program,
            sem,
            budget: DEFAULT_BUDGET,
            parallel: true,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Disable internal parallelism (useful when the caller is itself
    /// parallel over many evaluators).
    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    fn q(&self) -> u32 {
        self.program.q
    }

    fn check_budget(&self, free: usize) -> Result<u64, InterpError> {
        let needed = checked_pow(self.q(), free).unwrap_or(u128::MAX);
        if needed > self.budget as u128 {
            return Err(InterpError::BudgetExceeded {
                needed,
                budget: self.budget,
            });
        }
        Ok(needed as u64)
    }

    fn output_space(&self) -> Result<u128, InterpError> {
        checked_pow(self.q(), self.program.r()).ok_or(InterpError::OutputTooWide {
            q: self.q(),
            r: self.program.r(),
        })
    }

    /// Evaluate the induced mapping at one input.
    pub fn evaluate(&self, input: &[u32]) -> Result<Vec<u32>, InterpError> {
        if input.len() != self.program.k {
            return Err(InterpError::InputLength {
                expected: self.program.k,
                found: input.len(),
            });
        }
        if let Some(&value) = input.iter().find(|&&a| a >= self.q()) {
            return Err(InterpError::InputOutOfRange { value, q: self.q() });
        }
        let mut s = self.program.scratch();
        self.program.run(self.sem, input, &mut s);
        Ok(self.program.output(&s.vals))
    }

    /// Call `f(input, output)` for every input, in enumeration order.
    pub fn for_each(&self, mut f: impl FnMut(&[u32], &[u32])) -> Result<(), InterpError> {
        let total = self.check_budget(self.program.k)?;
        let free: Vec<usize> = (0..self.program.k).collect();
        let mut input = vec![0; self.program.k];
        let mut s = self.program.scratch();
        let mut out = vec![0; self.program.r()];
        for _ in 0..total {
            self.program.run(self.sem, &input, &mut s);
            for (o, &p) in out.iter_mut().zip(&self.program.outputs) {
                *o = s.vals[p as usize];
            }
            f(&input, &out);
            advance(self.q(), &free, &mut input);
        }
        Ok(())
    }

    /// Counts for the inputs agreeing with `base` outside `free`.
    fn counts_over(&self, free: &[usize], base: &[u32], total: u64, space: u128) -> OutputCounts {
        let q = self.q();
        let chunk = |start: u64, end: u64| {
            let mut counts = OutputCounts::new(space);
            let mut input = base.to_vec();
            set_digits(q, free, start, &mut input);
            let mut s = self.program.scratch();
            for _ in start..end {
                self.program.run(self.sem, &input, &mut s);
                counts.add(self.program.key(&s.vals));
                advance(q, free, &mut input);
            }
            counts
        };
        if !self.parallel || total < PARALLEL_THRESHOLD {
            return chunk(0, total);
        }
        let pieces = (rayon::current_num_threads() as u64 * 4).clamp(1, total);
        let size = total.div_ceil(pieces);
        (0..pieces)
            .into_par_iter()
            .map(|i| chunk(i * size, ((i + 1) * size).min(total)))
            .reduce_with(OutputCounts::merge)
            .unwrap_or_else(|| OutputCounts::new(space))
    }

    /// Multiplicity of every image point, by full enumeration of `A^k`.
    pub fn output_counts(&self) -> Result<OutputCounts, InterpError> {
        let total = self.check_budget(self.program.k)?;
        let space = self.output_space()?;
        let free: Vec<usize> = (0..self.program.k).collect();
        let base = vec![0; self.program.k];
        Ok(self.counts_over(&free, &base, total, space))
    }

    pub fn histogram(&self) -> Result<EvaluationReport, InterpError> {
        let counts = self.output_counts()?;
        Ok(EvaluationReport::new(
            self.program.k,
            self.program.r(),
            self.q(),
            counts.histogram(),
        ))
    }

    /// Image size of every slice obtained by fixing the variables outside
    /// `keep`; slices are listed in enumeration order of the fixed values.
    pub fn slice_images(&self, keep: &[usize]) -> Result<Vec<u64>, InterpError> {
        let k = self.program.k;
        if let Some(&bad) = keep.iter().find(|&&v| v >= k) {
            return Err(InterpError::UnknownVariable(format!("#{bad}")));
        }
        self.check_budget(k)?;
        let mut free: Vec<usize> = keep.to_vec();
        free.sort_unstable();
        free.dedup();
        let fixed: Vec<usize> = (0..k).filter(|v| !free.contains(v)).collect();
        let q = self.q();
        let per_slice = checked_pow(q, free.len()).expect("within budget") as u64;
        let slices = checked_pow(q, fixed.len()).expect("within budget") as u64;
        let space = self.output_space()?;

        let slice_image = |c: u64| {
            let mut input = vec![0; k];
            set_digits(q, &fixed, c, &mut input);
            let mut s = self.program.scratch();
            let mut seen: FxHashSet<u128> = FxHashSet::default();
            let mut dense = (space <= DENSE_OUTPUT_LIMIT && per_slice * 8 >= space as u64)
                .then(|| vec![false; space as usize]);
            let mut distinct = 0u64;
            for _ in 0..per_slice {
                self.program.run(self.sem, &input, &mut s);
                let key = self.program.key(&s.vals);
                let fresh = match dense.as_mut() {
                    Some(d) => !std::mem::replace(&mut d[key as usize], true),
                    None => seen.insert(key),
                };
                distinct += fresh as u64;
                advance(q, &free, &mut input);
            }
            distinct
        };
        if self.parallel && slices > 1 && slices * per_slice >= PARALLEL_THRESHOLD {
            Ok((0..slices).into_par_iter().map(slice_image).collect())
        } else {
            Ok((0..slices).map(slice_image).collect())
        }
    }

    /// Worst-case and average log-q image size over the slices fixing the
    /// variables outside `keep`.
    pub fn conditional_dispersion(&self, keep: &[usize]) -> Result<ConditionalDispersion, InterpError> {
        let images = self.slice_images(keep)?;
        let q = self.q() as f64;
        let logs: Vec<f64> = images.iter().map(|&m| (m as f64).ln() / q.ln()).collect();
        let worst = logs.iter().copied().fold(f64::INFINITY, f64::min);
        let average = logs.iter().sum::<f64>() / logs.len() as f64;
        Ok(ConditionalDispersion {
            worst,
            average,
            slices: images.len() as u64,
            min_image: images.iter().copied().min().unwrap_or(0),
            max_image: images.iter().copied().max().unwrap_or(0),
        })
    }

    /// Whether variable `var` is a function of the output tuple.
    pub fn decodable(&self, var: usize) -> Result<bool, InterpError> {
        if var >= self.program.k {
            return Err(InterpError::UnknownVariable(format!("#{var}")));
        }
        let mut seen: FxHashMap<u128, u32> = FxHashMap::default();
        let mut ok = true;
        self.for_each_key(|input, key| {
            let v = input[var];
            match seen.insert(key, v) {
                Some(prev) if prev != v => {
                    ok = false;
                    false
                }
                _ => true,
            }
        })?;
        Ok(ok)
    }

    /// Enumerate `(input, output key)` until `f` returns false.
    pub fn for_each_key(&self, mut f: impl FnMut(&[u32], u128) -> bool) -> Result<(), InterpError> {
        let total = self.check_budget(self.program.k)?;
        self.output_space()?;
        let free: Vec<usize> = (0..self.program.k).collect();
        let mut input = vec![0; self.program.k];
        let mut s = self.program.scratch();
        for _ in 0..total {
            self.program.run(self.sem, &input, &mut s);
            if !f(&input, self.program.key(&s.vals)) {
                break;
            }
            advance(self.q(), &free, &mut input);
        }
        Ok(())
    }
}

/// Evaluate the induced mapping of `interp` on `ts` at one input.
pub fn evaluate<S: Semantics + ?Sized>(
    sem: &S,
    ts: &TermSet,
    input: &[u32],
) -> Result<Vec<u32>, InterpError> {
    Evaluator::new(ts, sem)?.evaluate(input)
}

pub fn preimage_histogram<S: Semantics + ?Sized>(
    sem: &S,
    ts: &TermSet,
    budget: u64,
) -> Result<EvaluationReport, InterpError> {
    Evaluator::new(ts, sem)?.with_budget(budget).histogram()
}

fn variable_positions(ts: &TermSet, vars: &[String]) -> Result<Vec<usize>, InterpError> {
    vars.iter()
        .map(|v| {
            ts.signature()
                .variable_index(v)
                .ok_or_else(|| InterpError::UnknownVariable(v.clone()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionMode {
    Worst,
    Average,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalDispersion {
    pub worst: f64,
    pub average: f64,
    pub slices: u64,
    pub min_image: u64,
    pub max_image: u64,
}

impl ConditionalDispersion {
    pub fn value(&self, mode: ConditionMode) -> f64 {
        match mode {
            ConditionMode::Worst => self.worst,
            ConditionMode::Average => self.average,
        }
    }
}

pub fn conditional_dispersion<S: Semantics + ?Sized>(
    sem: &S,
    ts: &TermSet,
    keep: &[String],
    mode: ConditionMode,
    budget: u64,
) -> Result<f64, InterpError> {
    let pos = variable_positions(ts, keep)?;
    Ok(Evaluator::new(ts, sem)?
        .with_budget(budget)
        .conditional_dispersion(&pos)?
        .value(mode))
}

pub fn decodable<S: Semantics + ?Sized>(
    sem: &S,
    ts: &TermSet,
    var: &str,
    budget: u64,
) -> Result<bool, InterpError> {
    let pos = variable_positions(ts, &[var.to_string()])?;
    Evaluator::new(ts, sem)?.with_budget(budget).decodable(pos[0])
}

/// A count together with its base-q logarithm; `log_value` is `None` for
/// a zero count (logarithm −∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionValue {
    pub exact_count: u64,
    pub log_value: Option<f64>,
    pub is_neg_infinity: bool,
}

impl DispersionValue {
    pub fn new(count: u64, q: u32) -> DispersionValue {
        DispersionValue {
            exact_count: count,
            log_value: (count > 0).then(|| log_base(count as f64, q)),
            is_neg_infinity: count == 0,
        }
    }

    /// The logarithm with −∞ made explicit.
    pub fn value(&self) -> f64 {
        self.log_value.unwrap_or(f64::NEG_INFINITY)
    }
}

#[inline]
pub fn log_base(x: f64, base: u32) -> f64 {
    x.ln() / (base as f64).ln()
}

/// Pre-image histogram of an induced mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvaluationReport {
    pub k: usize,
    pub r: usize,
    pub q: u32,
    pub histogram: BTreeMap<u64, u64>,
}

impl EvaluationReport {
    pub fn new(k: usize, r: usize, q: u32, histogram: BTreeMap<u64, u64>) -> EvaluationReport {
        EvaluationReport { k, r, q, histogram }
    }

    /// Σ m·count over the histogram; equals `q^k` for a full enumeration.
    pub fn total_inputs(&self) -> u128 {
        self.histogram.iter().map(|(&m, &c)| m as u128 * c as u128).sum()
    }

    pub fn image_size(&self) -> u64 {
        self.histogram.values().sum()
    }

    pub fn one_image_size(&self) -> u64 {
        self.histogram.get(&1).copied().unwrap_or(0)
    }

    pub fn max_multiplicity(&self) -> u64 {
        self.histogram.keys().next_back().copied().unwrap_or(0)
    }

    pub fn dispersion(&self) -> DispersionValue {
        DispersionValue::new(self.image_size(), self.q)
    }

    pub fn one_to_one_dispersion(&self) -> DispersionValue {
        DispersionValue::new(self.one_image_size(), self.q)
    }

    /// Normalized Rényi entropy of the output under uniform inputs.
    pub fn renyi(&self, alpha: Alpha) -> f64 {
        renyi_from_histogram(&self.histogram, self.q as f64, alpha)
    }

    pub fn is_flat(&self) -> bool {
        self.histogram.len() == 1
    }
}

/// Rényi entropy (base `base`) of the distribution in which each of
/// `count` outcomes has weight proportional to `m`.
pub fn renyi_from_histogram(hist: &BTreeMap<u64, u64>, base: f64, alpha: Alpha) -> f64 {
    let total: f64 = hist.iter().map(|(&m, &c)| m as f64 * c as f64).sum();
    let ln_total = total.ln();
    let ln_base = base.ln();
    match alpha.kind() {
        AlphaKind::Zero => (hist.values().sum::<u64>() as f64).ln() / ln_base,
        AlphaKind::One => {
            // Σ p ln(1/p) with p = m/total
            let s: f64 = hist
                .iter()
                .map(|(&m, &c)| c as f64 * (m as f64 / total) * (ln_total - (m as f64).ln()))
                .sum();
            s / ln_base
        }
        AlphaKind::Infinity => {
            let m = *hist.keys().next_back().expect("non-empty histogram") as f64;
            (ln_total - m.ln()) / ln_base
        }
        AlphaKind::Other(a) => {
            // ln Σ c m^a by log-sum-exp
            let terms: Vec<f64> = hist
                .iter()
                .map(|(&m, &c)| (c as f64).ln() + a * (m as f64).ln())
                .collect();
            let mx = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + terms.iter().map(|t| (t - mx).exp()).sum::<f64>().ln();
            (lse - a * ln_total) / ((1.0 - a) * ln_base)
        }
    }
}

/// Rényi entropy of an explicit probability vector, in base `base`.
pub fn distribution_entropy(probs: &[f64], alpha: Alpha, base: u32) -> Result<f64, InterpError> {
    if base < 2 {
        return Err(InterpError::InvalidDistribution(format!(
            "base must be at least 2, got {base}"
        )));
    }
    if probs.is_empty() {
        return Err(InterpError::InvalidDistribution("empty".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(InterpError::InvalidDistribution(format!(
            "negative or non-finite probability {p}"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(InterpError::InvalidDistribution(format!(
            "probabilities sum to {sum}"
        )));
    }
    let ln_base = (base as f64).ln();
    let support = probs.iter().filter(|&&p| p > 0.0);
    Ok(match alpha.kind() {
        AlphaKind::Zero => (support.count() as f64).ln() / ln_base,
        AlphaKind::One => -support.map(|&p| p * p.ln()).sum::<f64>() / ln_base,
        AlphaKind::Infinity => -probs.iter().copied().fold(0.0, f64::max).ln() / ln_base,
        AlphaKind::Other(a) => {
            let terms: Vec<f64> = support.map(|&p| a * p.ln()).collect();
            let mx = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + terms.iter().map(|t| (t - mx).exp()).sum::<f64>().ln();
            lse / ((1.0 - a) * ln_base)
        }
    })
}

/// Rényi order: an exact non-negative rational or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Alpha {
    Finite { num: u64, den: u64 },
    Infinity,
}

enum AlphaKind {
    Zero,
    One,
    Infinity,
    Other(f64),
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Alpha {
    pub const ZERO: Alpha = Alpha::Finite { num: 0, den: 1 };
    pub const ONE: Alpha = Alpha::Finite { num: 1, den: 1 };
    pub const INF: Alpha = Alpha::Infinity;

    pub fn ratio(num: u64, den: u64) -> Alpha {
        assert!(den > 0, "zero denominator");
        let g = gcd(num, den).max(1);
        Alpha::Finite {
            num: num / g,
            den: den / g,
        }
    }

    pub fn integer(n: u64) -> Alpha {
        Alpha::ratio(n, 1)
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Alpha::Finite { num, den } => num as f64 / den as f64,
            Alpha::Infinity => f64::INFINITY,
        }
    }

    fn kind(self) -> AlphaKind {
        match self {
            Alpha::Infinity => AlphaKind::Infinity,
            Alpha::Finite { num: 0, .. } => AlphaKind::Zero,
            Alpha::Finite { num, den } if num == den => AlphaKind::One,
            a => AlphaKind::Other(a.to_f64()),
        }
    }
}

impl PartialOrd for Alpha {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Alpha {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (Alpha::Infinity, Alpha::Infinity) => std::cmp::Ordering::Equal,
            (Alpha::Infinity, _) => std::cmp::Ordering::Greater,
            (_, Alpha::Infinity) => std::cmp::Ordering::Less,
            (Alpha::Finite { num: a, den: b }, Alpha::Finite { num: c, den: d }) => {
                (*a as u128 * *d as u128).cmp(&(*c as u128 * *b as u128))
            }
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Infinity => f.write_str("inf"),
            Alpha::Finite { num, den: 1 } => write!(f, "{num}"),
            Alpha::Finite { num, den } => write!(f, "{num}/{den}"),
        }
    }
}

impl FromStr for Alpha {
    type Err = InterpError;

    /// Accepts `inf`, integers, `a/b` and finite decimals such as `0.25`.
    fn from_str(s: &str) -> Result<Alpha, InterpError> {
        let bad = || InterpError::InvalidAlpha(s.to_string());
        let t = s.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞") {
            return Ok(Alpha::Infinity);
        }
        if let Some((a, b)) = t.split_once('/') {
            let num: u64 = a.trim().parse().map_err(|_| bad())?;
            let den: u64 = b.trim().parse().map_err(|_| bad())?;
            if den == 0 {
                return Err(bad());
            }
            return Ok(Alpha::ratio(num, den));
        }
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        if frac.len() > 18 {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac_v: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|x| x.checked_add(frac_v))
            .ok_or_else(bad)?;
        Ok(Alpha::ratio(num, den))
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term_set;

    const CASE: &str = "term f(x,y)\nterm f(x,z)\nterm f(w,y)\nterm f(w,z)";
    const SHARED_RELAY: &str = "term h(f(x, y), g(z, w), f(y, x))\nterm m(g(z, w), f(y, x))\n\
                          term g(f(x, y), g(z, w))\nterm f(g(z, w), f(y, x))";

    fn ts(s: &str) -> TermSet {
        parse_term_set(s).unwrap()
    }

    fn single(q: u32, name: &str, arity: usize, f: impl Fn(&[u32]) -> u32) -> Interpretation {
        let mut i = Interpretation::empty(q).unwrap();
        i.define(name, arity, f).unwrap();
        i
    }

    fn relay_binary() -> Interpretation {
        let mut i = Interpretation::empty(2).unwrap();
        i.define("f", 2, |a| a[0]).unwrap();
        i.define("g", 2, |a| (a[0] + a[1]) % 2).unwrap();
        i.define("h", 3, |a| (a[1] * a[2] + 1) % 2).unwrap();
        i.define("m", 2, |a| a[0] * a[1]).unwrap();
        i
    }

    // direct oracle from the closed-form induced mapping
    fn relay_binary_formula(a: [u32; 4]) -> Vec<u32> {
        let s = (a[2] + a[3]) % 2;
        vec![(s * a[1] + 1) % 2, s * a[1], (a[0] + s) % 2, s]
    }

    #[test]
    fn relay_binary_evaluation() {
        let interp = relay_binary();
        let g = ts(SHARED_RELAY);
        assert_eq!(evaluate(&interp, &g, &[1, 1, 0, 1]).unwrap(), vec![0, 1, 0, 1]);
        for n in 0..16u32 {
            let a = [n >> 3 & 1, n >> 2 & 1, n >> 1 & 1, n & 1];
            assert_eq!(evaluate(&interp, &g, &a).unwrap(), relay_binary_formula(a));
        }
        let rep = preimage_histogram(&interp, &g, DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.image_size(), 6);
        assert!(rep.one_to_one_dispersion().is_neg_infinity);
        assert_eq!(rep.one_to_one_dispersion().log_value, None);
    }

    #[test]
    fn relay_binary_conditional_matches_slice_oracle() {
        let interp = relay_binary();
        let g = ts(SHARED_RELAY);
        let mut images = Vec::new();
        for xy in 0..4u32 {
            let mut seen = std::collections::HashSet::new();
            for zw in 0..4u32 {
                seen.insert(relay_binary_formula([xy >> 1, xy & 1, zw >> 1, zw & 1]));
            }
            images.push(seen.len() as f64);
        }
        let worst = images.iter().map(|m| m.log2()).fold(f64::INFINITY, f64::min);
        let avg = images.iter().map(|m| m.log2()).sum::<f64>() / 4.0;
        let keep = ["w".to_string(), "z".to_string()];
        let w = conditional_dispersion(&interp, &g, &keep, ConditionMode::Worst, DEFAULT_BUDGET).unwrap();
        let a = conditional_dispersion(&interp, &g, &keep, ConditionMode::Average, DEFAULT_BUDGET).unwrap();
        assert!((w - worst).abs() < 1e-12);
        assert!((a - avg).abs() < 1e-12);
    }

    #[test]
    fn product_function_on_case_study() {
        let interp = single(2, "f", 2, |a| a[0] * a[1]);
        let rep = preimage_histogram(&interp, &ts(CASE), DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.histogram, BTreeMap::from([(1, 9), (7, 1)]));
        assert_eq!(rep.total_inputs(), 16);
        assert!((rep.dispersion().value() - 10f64.log2()).abs() < 1e-12);
        assert!((rep.one_to_one_dispersion().value() - 9f64.log2()).abs() < 1e-12);
        let h1 = 4.0 - 7.0 / 16.0 * 7f64.log2();
        assert!((rep.renyi(Alpha::ONE) - h1).abs() < 1e-12);
        assert!((rep.renyi(Alpha::INF) - (4.0 - 7f64.log2())).abs() < 1e-12);
        assert!((rep.renyi(Alpha::ZERO) - rep.dispersion().value()).abs() < 1e-12);
    }

    #[test]
    fn quadratic3_counts() {
        let interp = single(3, "f", 2, |a| {
            let d = (a[0] + 3 - a[1]) % 3;
            (d * d + a[0] + a[1]) % 3
        });
        let rep = preimage_histogram(&interp, &ts(CASE), DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.image_size(), 51);
        assert_eq!(rep.one_image_size(), 36);
        assert!((rep.renyi(Alpha::INF) - (4.0 - 7f64.ln() / 3f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn identity_and_constant() {
        let vars = ts("term x\nterm y\nterm z");
        let rep = preimage_histogram(&Interpretation::empty(3).unwrap(), &vars, 1000).unwrap();
        assert_eq!(rep.histogram, BTreeMap::from([(1, 27)]));
        for a in ["0", "1/2", "1", "2", "inf"] {
            assert!((rep.renyi(a.parse().unwrap()) - 3.0).abs() < 1e-12);
        }
        let constant = single(2, "f", 2, |_| 1);
        let rep = preimage_histogram(&constant, &ts(CASE), 1000).unwrap();
        assert_eq!(rep.image_size(), 1);
        assert_eq!(rep.dispersion().value(), 0.0);
        assert_eq!(evaluate(&constant, &ts(CASE), &[0, 1, 0, 1]).unwrap(), vec![1; 4]);
    }

    #[test]
    fn budget_is_enforced() {
        let interp = single(3, "f", 2, |a| a[0]);
        let err = preimage_histogram(&interp, &ts(CASE), 80).unwrap_err();
        assert!(matches!(err, InterpError::BudgetExceeded { needed: 81, .. }));
    }

    #[test]
    fn missing_table_and_bad_input() {
        let interp = single(2, "g", 2, |a| a[0]);
        assert!(matches!(
            evaluate(&interp, &ts(CASE), &[0, 0, 0, 0]),
            Err(InterpError::MissingTable(_))
        ));
        let interp = single(2, "f", 3, |a| a[0]);
        assert!(matches!(
            evaluate(&interp, &ts(CASE), &[0, 0, 0, 0]),
            Err(InterpError::ArityMismatch { .. })
        ));
        let interp = single(2, "f", 2, |a| a[0]);
        assert!(matches!(
            evaluate(&interp, &ts(CASE), &[0, 0, 0]),
            Err(InterpError::InputLength { .. })
        ));
    }

    #[test]
    fn decodability() {
        let add2 = single(2, "f", 2, |a| (a[0] + a[1]) % 2);
        let butterfly = ts("term x1\nterm f(x1, x2)");
        assert!(decodable(&add2, &butterfly, "x2", 100).unwrap());
        let proj = single(2, "f", 2, |a| a[0]);
        assert!(!decodable(&proj, &ts("term f(x, y)"), "y", 100).unwrap());
        assert!(decodable(&proj, &ts("term f(x, y)"), "x", 100).unwrap());

        let mut storage = Interpretation::empty(3).unwrap();
        storage.define("f", 2, |a| (a[0] + a[1]) % 3).unwrap();
        storage.define("g", 2, |a| (a[0] + 2 * a[1]) % 3).unwrap();
        let st = ts("term f(x, y)\nterm g(x, y)");
        assert!(decodable(&storage, &st, "x", 100).unwrap());
        assert!(decodable(&storage, &st, "y", 100).unwrap());
        assert!(matches!(
            decodable(&storage, &st, "q", 100),
            Err(InterpError::UnknownVariable(_))
        ));
    }

    #[test]
    fn conditional_dispersion_degenerate_cases() {
        let proj = single(2, "f", 2, |a| a[0]);
        let t = ts("term f(x, y)");
        for mode in [ConditionMode::Worst, ConditionMode::Average] {
            let v = conditional_dispersion(&proj, &t, &["x".into()], mode, 100).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
        let add2 = single(2, "f", 2, |a| (a[0] + a[1]) % 2);
        let b = ts("term x1\nterm f(x1, x2)\nterm f(x3, x4)\nterm x4");
        let all: Vec<String> = b.variables().to_vec();
        let v = conditional_dispersion(&add2, &b, &all, ConditionMode::Worst, 100).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_constant_uses_zero_value() {
        let t = ts("term f(x, 0)");
        let interp = single(3, "f", 2, |a| a[1]);
        assert_eq!(evaluate(&interp, &t, &[2]).unwrap(), vec![0]);
        let interp = interp.with_zero_value(2);
        assert_eq!(evaluate(&interp, &t, &[1]).unwrap(), vec![2]);
    }

    #[test]
    fn json_round_trip() {
        let interp = relay_binary().with_zero_value(1);
        let back = Interpretation::from_json(&interp.to_json()).unwrap();
        assert_eq!(back, interp);
        assert!(
            Interpretation::from_json(r#"{"alphabet":2,"functions":{"f":{"arity":1,"table":[0]}}}"#).is_err()
        );
        assert!(
            Interpretation::from_json(r#"{"alphabet":2,"functions":{"f":{"arity":1,"table":[0,2]}}}"#)
                .is_err()
        );
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!("inf".parse::<Alpha>().unwrap(), Alpha::INF);
        assert_eq!("0.5".parse::<Alpha>().unwrap(), Alpha::ratio(1, 2));
        assert_eq!("2/4".parse::<Alpha>().unwrap(), Alpha::ratio(1, 2));
        assert_eq!("3".parse::<Alpha>().unwrap(), Alpha::integer(3));
        assert_eq!("1.0".parse::<Alpha>().unwrap(), Alpha::ONE);
        assert_eq!(".25".parse::<Alpha>().unwrap(), Alpha::ratio(1, 4));
        for bad in ["-1", "abc", "1/0", "", "1e3", "."] {
            assert!(bad.parse::<Alpha>().is_err(), "{bad}");
        }
        assert!(Alpha::ratio(1, 2) < Alpha::ONE && Alpha::ONE < Alpha::INF);
        assert_eq!(Alpha::ratio(3, 2).to_string(), "3/2");
    }

    #[test]
    fn explicit_distributions() {
        let uniform = vec![0.125; 8];
        for a in ["0", "1/2", "1", "3", "inf"] {
            let h = distribution_entropy(&uniform, a.parse().unwrap(), 8).unwrap();
            assert!((h - 1.0).abs() < 1e-12);
        }
        let point = [0.0, 1.0, 0.0];
        for a in ["0", "1/2", "1", "3", "inf"] {
            let h = distribution_entropy(&point, a.parse().unwrap(), 3).unwrap();
            assert!(h.abs() < 1e-12);
        }
        assert!(distribution_entropy(&[0.5, 0.6], Alpha::ONE, 2).is_err());
        assert!(distribution_entropy(&[1.5, -0.5], Alpha::ONE, 2).is_err());
        assert!(distribution_entropy(&[1.0], Alpha::ONE, 1).is_err());
    }

    #[test]
    fn histogram_renyi_matches_distribution_renyi() {
        let hist = BTreeMap::from([(1u64, 9u64), (7, 1)]);
        let probs: Vec<f64> = std::iter::repeat(1.0 / 16.0)
            .take(9)
            .chain([7.0 / 16.0])
            .collect();
        for a in ["0", "1/3", "1", "2", "7/2", "inf"] {
            let alpha: Alpha = a.parse().unwrap();
            let x = renyi_from_histogram(&hist, 2.0, alpha);
            let y = distribution_entropy(&probs, alpha, 2).unwrap();
            assert!((x - y).abs() < 1e-12, "{a}: {x} vs {y}");
        }
    }

    #[test]
    fn large_enumeration_is_chunked_consistently() {
        // 4^8 = 65536 inputs crosses the parallel threshold
        let t = ts("term f(a, b)\nterm f(c, d)\nterm f(e, g)\nterm f(h, i)");
        let interp = single(4, "f", 2, |a| (a[0] * a[1] + a[0]) % 4);
        let par = Evaluator::new(&t, &interp).unwrap().histogram().unwrap();
        let seq = Evaluator::new(&t, &interp)
            .unwrap()
            .sequential()
            .histogram()
            .unwrap();
        assert_eq!(par, seq);
        assert_eq!(par.total_inputs(), 65536);
    }
}
