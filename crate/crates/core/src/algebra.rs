//! Finite algebraic structures, structured coding-function classes and
//! exhaustive (or seeded sampled) search over them.
//!
//! A candidate is an assignment of one class member to every function
//! symbol. Candidates are numbered in mixed radix, the first symbol of the
//! signature being the most significant digit, and the search returns the
//! lowest-numbered candidate among those with the best objective value.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::{
    checked_pow, log_base, renyi_from_histogram, Alpha, CodingTable, DispersionValue, EvaluationReport,
    Evaluator, InterpError, Interpretation, Program, Runner, Semantics, TableView, DEFAULT_BUDGET,
};
use crate::routing::{DynamicRouting, RoutingError};
use crate::term::{Term, TermSet};

/// Upper bound on the total number of table entries materialized for the
/// members of one function class.
const MAX_MEMBER_ENTRIES: u128 = 1 << 25;
/// Number of index ranges the candidate space is split into.
const SEARCH_CHUNKS: u64 = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("malformed operation table: {0}")]
    Table(String),
    #[error("axiom violated: {0}")]
    Axiom(String),
    #[error("unknown algebra `{0}`")]
    Unknown(String),
    #[error("{class} is not available over {algebra}")]
    Unsupported { class: String, algebra: String },
    #[error("class {class} has {members} members of arity {arity}, too many to tabulate")]
    ClassTooLarge {
        class: String,
        arity: usize,
        members: String,
    },
    #[error("explicit class has no tables for `{0}`")]
    MissingCandidates(String),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraKind {
    PrimeField,
    Field,
    ModularRing,
    Ring,
    VectorSpace,
    Group,
}

/// A finite structure on `0..q`. For groups `add` holds the group
/// operation; for vector spaces over F₂ it is bitwise XOR and there is no
/// multiplication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Algebra {
    name: String,
    kind: AlgebraKind,
    q: u32,
    add: Vec<u32>,
    mul: Option<Vec<u32>>,
    /// `(p, m)` when `(A, add)` is the group `F_p^m` with elements written
    /// as base-p digit vectors (digit j is the coefficient of `p^j`).
    digits: Option<(u32, u32)>,
}

pub fn is_prime(n: u32) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn square_table(q: u32, f: impl Fn(u32, u32) -> u32) -> Vec<u32> {
    (0..q)
        .flat_map(|a| (0..q).map(move |b| (a, b)))
        .map(|(a, b)| f(a, b))
        .collect()
}

/// The `(p, m)` with `q = p^m` for which `add` is digit-wise addition mod p.
fn detect_digits(q: u32, add: &[u32]) -> Option<(u32, u32)> {
    let p = (2..=q).find(|d| q % d == 0)?;
    let mut m = 0;
    let mut rest = q;
    while rest % p == 0 {
        rest /= p;
        m += 1;
    }
    if rest != 1 {
        return None;
    }
    let digitwise = |mut a: u32, mut b: u32| {
        let (mut out, mut place) = (0, 1);
        for _ in 0..m {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place *= p;
        }
        out
    };
    (0..q)
        .all(|a| (0..q).all(|b| add[(a * q + b) as usize] == digitwise(a, b)))
        .then_some((p, m))
}

fn check_square(q: u32, t: &[u32], what: &str) -> Result<(), AlgebraError> {
    if t.len() != (q * q) as usize {
        return Err(AlgebraError::Table(format!("{what} table must be {q}x{q}")));
    }
    if let Some(v) = t.iter().find(|&&v| v >= q) {
        return Err(AlgebraError::Table(format!(
            "{what} table contains {v} outside 0..{q}"
        )));
    }
    Ok(())
}

fn flatten(rows: &[Vec<u32>], what: &str) -> Result<(u32, Vec<u32>), AlgebraError> {
    let q = rows.len() as u32;
    if q < 2 {
        return Err(AlgebraError::Table(format!("{what} table needs at least 2 rows")));
    }
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(AlgebraError::Table(format!("{what} table is not square")));
    }
    Ok((q, rows.concat()))
}

fn op(t: &[u32], q: u32, a: u32, b: u32) -> u32 {
    t[(a * q + b) as usize]
}

fn check_associative(q: u32, t: &[u32], what: &str) -> Result<(), AlgebraError> {
    for a in 0..q {
        for b in 0..q {
            let ab = op(t, q, a, b);
            for c in 0..q {
                if op(t, q, ab, c) != op(t, q, a, op(t, q, b, c)) {
                    return Err(AlgebraError::Axiom(format!(
                        "{what} is not associative at ({a}, {b}, {c})"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn identity_of(q: u32, t: &[u32]) -> Option<u32> {
    (0..q).find(|&e| (0..q).all(|a| op(t, q, e, a) == a && op(t, q, a, e) == a))
}

fn check_group(q: u32, t: &[u32], what: &str) -> Result<u32, AlgebraError> {
    check_associative(q, t, what)?;
    let e =
        identity_of(q, t).ok_or_else(|| AlgebraError::Axiom(format!("{what} has no identity element")))?;
    for a in 0..q {
        if !(0..q).any(|b| op(t, q, a, b) == e && op(t, q, b, a) == e) {
            return Err(AlgebraError::Axiom(format!("{a} has no inverse under {what}")));
        }
    }
    Ok(e)
}

fn check_commutative(q: u32, t: &[u32], what: &str) -> Result<(), AlgebraError> {
    for a in 0..q {
        for b in a + 1..q {
            if op(t, q, a, b) != op(t, q, b, a) {
                return Err(AlgebraError::Axiom(format!(
                    "{what} does not commute at ({a}, {b})"
                )));
            }
        }
    }
    Ok(())
}

/// Ring axioms with additive identity 0; returns the multiplicative identity.
fn check_ring(q: u32, add: &[u32], mul: &[u32]) -> Result<Option<u32>, AlgebraError> {
    if check_group(q, add, "addition")? != 0 {
        return Err(AlgebraError::Axiom(
            "the additive identity must be element 0".into(),
        ));
    }
    check_commutative(q, add, "addition")?;
    check_associative(q, mul, "multiplication")?;
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                let bc = op(add, q, b, c);
                let left = op(mul, q, a, bc) == op(add, q, op(mul, q, a, b), op(mul, q, a, c));
                let right = op(mul, q, bc, a) == op(add, q, op(mul, q, b, a), op(mul, q, c, a));
                if !(left && right) {
                    return Err(AlgebraError::Axiom(format!(
                        "multiplication does not distribute at ({a}, {b}, {c})"
                    )));
                }
            }
        }
    }
    Ok(identity_of(q, mul))
}

/// Operation tables of F₄ with elements 0, 1, ω, ω² numbered 0..4.
const F4_ADD: [u32; 16] = [0, 1, 2, 3, 1, 0, 3, 2, 2, 3, 0, 1, 3, 2, 1, 0];
const F4_MUL: [u32; 16] = [0, 0, 0, 0, 0, 1, 2, 3, 0, 2, 3, 1, 0, 3, 1, 2];

/// On-disk form of an algebra.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum AlgebraFile {
    PrimeField { p: u32 },
    ModularRing { n: u32 },
    VectorSpace { dim: u32 },
    Field { add: Vec<Vec<u32>>, mul: Vec<Vec<u32>> },
    Ring { add: Vec<Vec<u32>>, mul: Vec<Vec<u32>> },
    Group { op: Vec<Vec<u32>> },
}

impl Algebra {
    fn build(name: String, kind: AlgebraKind, q: u32, add: Vec<u32>, mul: Option<Vec<u32>>) -> Algebra {
        let digits = detect_digits(q, &add);
        Algebra {
            name,
            kind,
            q,
            add,
            mul,
            digits,
        }
    }

    pub fn prime_field(p: u32) -> Result<Algebra, AlgebraError> {
        if !is_prime(p) {
            return Err(AlgebraError::NotPrime(p));
        }
        Ok(Algebra::build(
            format!("F{p}"),
            AlgebraKind::PrimeField,
            p,
            square_table(p, |a, b| (a + b) % p),
            Some(square_table(p, |a, b| (a * b) % p)),
        ))
    }

    pub fn modular_ring(n: u32) -> Result<Algebra, AlgebraError> {
        if n < 2 {
            return Err(AlgebraError::Table(format!("Z_{n} needs n >= 2")));
        }
        Ok(Algebra::build(
            format!("Z{n}"),
            AlgebraKind::ModularRing,
            n,
            square_table(n, |a, b| (a + b) % n),
            Some(square_table(n, |a, b| (a * b) % n)),
        ))
    }

    /// `F₂^dim` under XOR, elements as bit vectors.
    pub fn vector_space(dim: u32) -> Result<Algebra, AlgebraError> {
        if !(1..=8).contains(&dim) {
            return Err(AlgebraError::Table(format!("dimension {dim} outside 1..=8")));
        }
        let q = 1 << dim;
        Ok(Algebra::build(
            format!("V{dim}"),
            AlgebraKind::VectorSpace,
            q,
            square_table(q, |a, b| a ^ b),
            None,
        ))
    }

    pub fn f4() -> Algebra {
        Algebra::field_from_tables("F4", F4_ADD.to_vec(), F4_MUL.to_vec())
            .expect("built-in F4 tables are a field")
    }

    /// A field given by flattened `q×q` tables, additive identity 0.
    pub fn field_from_tables(name: &str, add: Vec<u32>, mul: Vec<u32>) -> Result<Algebra, AlgebraError> {
        let q = (add.len() as f64).sqrt().round() as u32;
        check_square(q, &add, "addition")?;
        check_square(q, &mul, "multiplication")?;
        let one = check_ring(q, &add, &mul)?
            .ok_or_else(|| AlgebraError::Axiom("multiplication has no identity".into()))?;
        if one == 0 {
            return Err(AlgebraError::Axiom("0 = 1".into()));
        }
        check_commutative(q, &mul, "multiplication")?;
        for a in 1..q {
            if !(1..q).any(|b| op(&mul, q, a, b) == one) {
                return Err(AlgebraError::Axiom(format!("{a} has no multiplicative inverse")));
            }
        }
        Ok(Algebra::build(
            name.to_string(),
            AlgebraKind::Field,
            q,
            add,
            Some(mul),
        ))
    }

    pub fn ring_from_tables(name: &str, add: Vec<u32>, mul: Vec<u32>) -> Result<Algebra, AlgebraError> {
        let q = (add.len() as f64).sqrt().round() as u32;
        check_square(q, &add, "addition")?;
        check_square(q, &mul, "multiplication")?;
        check_ring(q, &add, &mul)?;
        Ok(Algebra::build(
            name.to_string(),
            AlgebraKind::Ring,
            q,
            add,
            Some(mul),
        ))
    }

    pub fn group_from_table(name: &str, table: Vec<u32>) -> Result<Algebra, AlgebraError> {
        let q = (table.len() as f64).sqrt().round() as u32;
        check_square(q, &table, "group operation")?;
        check_group(q, &table, "the group operation")?;
        Ok(Algebra::build(
            name.to_string(),
            AlgebraKind::Group,
            q,
            table,
            None,
        ))
    }

    pub fn cyclic_group(n: u32) -> Result<Algebra, AlgebraError> {
        if n < 2 {
            return Err(AlgebraError::Table(format!("C_{n} needs n >= 2")));
        }
        Algebra::group_from_table(&format!("C{n}"), square_table(n, |a, b| (a + b) % n))
    }

    /// The symmetric group on three points; element `i` is the `i`-th
    /// permutation of `[0, 1, 2]` in lexicographic order and the product
    /// `ab` applies `b` first.
    pub fn symmetric3() -> Algebra {
        let perms: [[u32; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let table = square_table(6, |a, b| {
            let (pa, pb) = (perms[a as usize], perms[b as usize]);
            let composed = [pa[pb[0] as usize], pa[pb[1] as usize], pa[pb[2] as usize]];
            perms.iter().position(|p| *p == composed).unwrap() as u32
        });
        Algebra::group_from_table("S3", table).expect("S3 is a group")
    }

    /// Built-in names: `F<p>` (prime field), `F4`, `Z<n>`, `V<m>` (F₂^m),
    /// `C<n>` (cyclic group), `S3`.
    pub fn builtin(name: &str) -> Result<Algebra, AlgebraError> {
        let unknown = || AlgebraError::Unknown(name.to_string());
        if name == "F4" {
            return Ok(Algebra::f4());
        }
        if name == "S3" {
            return Ok(Algebra::symmetric3());
        }
        let (head, tail) = name.split_at(name.find(|c: char| c.is_ascii_digit()).ok_or_else(unknown)?);
        let n: u32 = tail.parse().map_err(|_| unknown())?;
        match head {
            "F" => Algebra::prime_field(n),
            "Z" => Algebra::modular_ring(n),
            "V" => Algebra::vector_space(n),
            "C" => Algebra::cyclic_group(n),
            _ => Err(unknown()),
        }
    }

    pub fn from_json(text: &str) -> Result<Algebra, AlgebraError> {
        let file: AlgebraFile = serde_json::from_str(text).map_err(|e| AlgebraError::Table(e.to_string()))?;
        match file {
            AlgebraFile::PrimeField { p } => Algebra::prime_field(p),
            AlgebraFile::ModularRing { n } => Algebra::modular_ring(n),
            AlgebraFile::VectorSpace { dim } => Algebra::vector_space(dim),
            AlgebraFile::Field { add, mul } => {
                let (_, add) = flatten(&add, "addition")?;
                let (_, mul) = flatten(&mul, "multiplication")?;
                Algebra::field_from_tables("field", add, mul)
            }
            AlgebraFile::Ring { add, mul } => {
                let (_, add) = flatten(&add, "addition")?;
                let (_, mul) = flatten(&mul, "multiplication")?;
                Algebra::ring_from_tables("ring", add, mul)
            }
            AlgebraFile::Group { op } => {
                let (_, op) = flatten(&op, "group operation")?;
                Algebra::group_from_table("group", op)
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn is_field(&self) -> bool {
        matches!(self.kind, AlgebraKind::PrimeField | AlgebraKind::Field)
    }

    /// `(p, m)` when the additive group is `F_p^m` in digit encoding.
    pub fn digit_structure(&self) -> Option<(u32, u32)> {
        self.digits
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        op(&self.add, self.q, a, b)
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> Option<u32> {
        self.mul.as_ref().map(|m| op(m, self.q, a, b))
    }

    pub fn pow(&self, a: u32, e: u64) -> Option<u32> {
        let one = identity_of(self.q, self.mul.as_ref()?)?;
        (0..e).try_fold(one, |acc, _| self.mul(acc, a))
    }
}

/// Coding-function families searched by [`exhaustive_search`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionClass {
    /// Every table `A^d -> A`.
    AllFunctions,
    /// `Σ b_i a_i` with coefficients in a field.
    ScalarLinear,
    /// `Σ F_i a_i` with `F_i` linear maps of the additive group `F_p^m`.
    MatrixLinear,
    /// `Σ r_i a_i` over a ring.
    RingLinear,
    /// The group product `a_1 a_2 ⋯ a_d`.
    GroupMult,
    /// Candidate tables listed per symbol.
    Explicit(BTreeMap<String, Vec<Vec<u32>>>),
}

impl FunctionClass {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionClass::AllFunctions => "all",
            FunctionClass::ScalarLinear => "scalar-linear",
            FunctionClass::MatrixLinear => "matrix-linear",
            FunctionClass::RingLinear => "ring-linear",
            FunctionClass::GroupMult => "group",
            FunctionClass::Explicit(_) => "explicit",
        }
    }

    /// Members induce additive maps, so the induced mapping is linear.
    fn is_additive(&self) -> bool {
        matches!(
            self,
            FunctionClass::ScalarLinear | FunctionClass::MatrixLinear | FunctionClass::RingLinear
        )
    }

    /// Tables of every member of arity `arity`, concatenated.
    fn members(&self, alg: &Algebra, symbol: &str, arity: usize) -> Result<Members, AlgebraError> {
        let q = alg.q;
        let len = checked_pow(q, arity).unwrap_or(u128::MAX);
        let unsupported = || AlgebraError::Unsupported {
            class: self.name().to_string(),
            algebra: alg.name.clone(),
        };
        let too_large = |members: String| AlgebraError::ClassTooLarge {
            class: self.name().to_string(),
            arity,
            members,
        };
        let count: u128 = match self {
            FunctionClass::AllFunctions => {
                if len > 64 {
                    return Err(too_large(format!("{q}^{len}")));
                }
                checked_pow(q, len as usize).ok_or_else(|| too_large(format!("{q}^{len}")))?
            }
            FunctionClass::ScalarLinear | FunctionClass::RingLinear => {
                let ok = match self {
                    FunctionClass::ScalarLinear => alg.is_field(),
                    _ => alg.mul.is_some(),
                };
                if !ok {
                    return Err(unsupported());
                }
                len
            }
            FunctionClass::MatrixLinear => {
                let (p, m) = alg.digits.ok_or_else(unsupported)?;
                checked_pow(p, (m * m) as usize * arity).ok_or_else(|| too_large("overflow".into()))?
            }
            FunctionClass::GroupMult => {
                if alg.kind != AlgebraKind::Group {
                    return Err(unsupported());
                }
                1
            }
            FunctionClass::Explicit(map) => {
                let list = map
                    .get(symbol)
                    .ok_or_else(|| AlgebraError::MissingCandidates(symbol.to_string()))?;
                if list.is_empty() {
                    return Err(AlgebraError::MissingCandidates(symbol.to_string()));
                }
                for t in list {
                    if t.len() as u128 != len || t.iter().any(|&v| v >= q) {
                        return Err(InterpError::TableLength {
                            symbol: symbol.to_string(),
                            expected: len,
                            found: t.len(),
                        }
                        .into());
                    }
                }
                return Ok(Members {
                    len: len as usize,
                    count: list.len() as u64,
                    data: list.concat(),
                });
            }
        };
        if count.saturating_mul(len) > MAX_MEMBER_ENTRIES {
            return Err(too_large(count.to_string()));
        }
        let (count, len) = (count as u64, len as usize);
        let mut data = Vec::with_capacity(count as usize * len);
        let mut args = vec![0u32; arity];
        for n in 0..count {
            let coeffs = digits_msb(n, q_for_coeffs(self, alg), coeff_len(self, alg, arity));
            args.iter_mut().for_each(|a| *a = 0);
            for i in 0..len {
                let v = match self {
                    FunctionClass::AllFunctions => coeffs[i],
                    FunctionClass::ScalarLinear | FunctionClass::RingLinear => coeffs
                        .iter()
                        .zip(&args)
                        .fold(0, |acc, (&c, &a)| alg.add(acc, alg.mul(c, a).unwrap())),
                    FunctionClass::MatrixLinear => {
                        let (p, m) = alg.digits.unwrap();
                        let block = (m * m) as usize;
                        (0..arity).fold(0, |acc, j| {
                            let image = apply_matrix(&coeffs[j * block..(j + 1) * block], p, m, args[j]);
                            alg.add(acc, image)
                        })
                    }
                    FunctionClass::GroupMult => args[1..].iter().fold(args[0], |acc, &a| alg.add(acc, a)),
                    FunctionClass::Explicit(_) => unreachable!(),
                };
                data.push(v);
                for a in args.iter_mut().rev() {
                    *a += 1;
                    if *a < q {
                        break;
                    }
                    *a = 0;
                }
            }
        }
        Ok(Members { len, count, data })
    }
}

fn q_for_coeffs(class: &FunctionClass, alg: &Algebra) -> u32 {
    match class {
        FunctionClass::MatrixLinear => alg.digits.map(|(p, _)| p).unwrap_or(2),
        _ => alg.q,
    }
}

fn coeff_len(class: &FunctionClass, alg: &Algebra, arity: usize) -> usize {
    match class {
        FunctionClass::AllFunctions => checked_pow(alg.q, arity).unwrap() as usize,
        FunctionClass::MatrixLinear => {
            let m = alg.digits.map(|(_, m)| m).unwrap_or(1) as usize;
            m * m * arity
        }
        FunctionClass::GroupMult => 0,
        _ => arity,
    }
}

/// Base-`b` digits of `n`, most significant first.
fn digits_msb(mut n: u64, b: u32, len: usize) -> Vec<u32> {
    let mut out = vec![0; len];
    for d in out.iter_mut().rev() {
        *d = (n % b as u64) as u32;
        n /= b as u64;
    }
    out
}

/// Apply an `m×m` matrix over F_p (row-major entries) to the digit vector
/// of `a`.
fn apply_matrix(entries: &[u32], p: u32, m: u32, a: u32) -> u32 {
    let m = m as usize;
    let mut v = vec![0u32; m];
    let mut rest = a;
    for d in v.iter_mut() {
        *d = rest % p;
        rest /= p;
    }
    let mut out = 0;
    let mut place = 1;
    for row in 0..m {
        let s: u32 = (0..m).map(|c| entries[row * m + c] * v[c]).sum::<u32>() % p;
        out += s * place;
        place *= p;
    }
    out
}

impl FromStr for FunctionClass {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<FunctionClass, AlgebraError> {
        match s {
            "all" => Ok(FunctionClass::AllFunctions),
            "scalar-linear" | "scalar" => Ok(FunctionClass::ScalarLinear),
            "matrix-linear" | "matrix" => Ok(FunctionClass::MatrixLinear),
            "ring-linear" | "ring" => Ok(FunctionClass::RingLinear),
            "group" | "group-mult" => Ok(FunctionClass::GroupMult),
            other => Err(AlgebraError::Unknown(format!("function class {other}"))),
        }
    }
}

struct Members {
    len: usize,
    count: u64,
    data: Vec<u32>,
}

impl Members {
    fn table(&self, i: u64) -> &[u32] {
        &self.data[i as usize * self.len..(i as usize + 1) * self.len]
    }
}

/// Quantity maximized by a search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Dispersion,
    OneToOne,
    Renyi(Alpha),
}

impl Objective {
    fn score(self, q: u32, hist: &BTreeMap<u64, u64>) -> f64 {
        match self {
            Objective::Dispersion => hist.values().sum::<u64>() as f64,
            Objective::OneToOne => hist.get(&1).copied().unwrap_or(0) as f64,
            Objective::Renyi(a) => renyi_from_histogram(hist, q as f64, a),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Dispersion => write!(f, "dispersion"),
            Objective::OneToOne => write!(f, "one-to-one"),
            Objective::Renyi(a) => write!(f, "renyi:{a}"),
        }
    }
}

impl FromStr for Objective {
    type Err = InterpError;

    /// `dispersion`, `one-to-one` (or `one2one`), `renyi:<alpha>`.
    fn from_str(s: &str) -> Result<Objective, InterpError> {
        match s {
            "dispersion" => Ok(Objective::Dispersion),
            "one-to-one" | "one2one" => Ok(Objective::OneToOne),
            _ => match s.strip_prefix("renyi:") {
                Some(a) => Ok(Objective::Renyi(a.parse()?)),
                None => Err(InterpError::Format(format!("unknown objective `{s}`"))),
            },
        }
    }
}

impl Serialize for Objective {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Bound on candidates × evaluations per candidate.
    pub budget: u64,
    /// Use rank computation instead of enumeration for linear classes.
    pub linear_shortcut: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: DEFAULT_BUDGET,
            linear_shortcut: true,
        }
    }
}

/// Best value found by a search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveValue {
    /// Image or one-to-one image size; absent for Rényi objectives.
    pub exact_count: Option<u64>,
    /// Base-q value, `None` for −∞.
    pub log_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub objective: Objective,
    pub algebra: String,
    pub class: String,
    pub best_value: ObjectiveValue,
    /// Mixed-radix number of the maximizing candidate.
    pub best_index: u128,
    #[serde(skip)]
    pub best_tables: Interpretation,
    pub report: EvaluationReport,
    /// Candidates evaluated.
    pub explored: u64,
    /// Size of the whole candidate space.
    pub space: u128,
    pub sampled: bool,
    pub linear_shortcut: bool,
}

struct Space {
    q: u32,
    symbols: Vec<(String, usize)>,
    members: Vec<Members>,
    total: u128,
}

impl Space {
    fn new(ts: &TermSet, alg: &Algebra, class: &FunctionClass) -> Result<Space, AlgebraError> {
        let symbols: Vec<(String, usize)> = ts
            .signature()
            .functions
            .iter()
            .map(|f| (f.name.clone(), f.arity))
            .collect();
        let mut cache: BTreeMap<usize, usize> = BTreeMap::new();
        let mut members: Vec<Members> = Vec::with_capacity(symbols.len());
        for (name, arity) in &symbols {
            let shared = !matches!(class, FunctionClass::Explicit(_));
            match cache.get(arity) {
                Some(&i) if shared => {
                    let m = &members[i];
                    let copy = Members {
                        len: m.len,
                        count: m.count,
                        data: m.data.clone(),
                    };
                    members.push(copy);
                }
                _ => {
                    cache.insert(*arity, members.len());
                    members.push(class.members(alg, name, *arity)?);
                }
            }
        }
        let total = members
            .iter()
            .try_fold(1u128, |acc, m| acc.checked_mul(m.count as u128))
            .ok_or_else(|| InterpError::BudgetExceeded {
                needed: u128::MAX,
                budget: 0,
            })?;
        Ok(Space {
            q: alg.q,
            symbols,
            members,
            total,
        })
    }

    fn digits(&self, mut n: u128) -> Vec<u64> {
        let mut d = vec![0; self.members.len()];
        for (i, m) in self.members.iter().enumerate().rev() {
            d[i] = (n % m.count as u128) as u64;
            n /= m.count as u128;
        }
        d
    }

    fn view(&self, digits: &[u64]) -> TableView<'_> {
        TableView {
            q: self.q,
            zero_value: 0,
            symbols: &self.symbols,
            tables: self
                .members
                .iter()
                .zip(digits)
                .map(|(m, &d)| m.table(d))
                .collect(),
        }
    }

    fn interpretation(&self, index: u128) -> Interpretation {
        let digits = self.digits(index);
        let tables = self
            .symbols
            .iter()
            .zip(&self.members)
            .zip(&digits)
            .map(|(((name, arity), m), &d)| CodingTable {
                symbol: name.clone(),
                arity: *arity,
                outputs: m.table(d).to_vec(),
            })
            .collect();
        Interpretation::new(self.q, tables).expect("members have the right shape")
    }
}

/// Rank over F_p of the rows, by Gaussian elimination.
fn rank_mod_p(mut rows: Vec<Vec<u32>>, p: u32) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = (1..p).find(|&x| rows[rank][c] * x % p == 1).unwrap();
        for v in rows[rank].iter_mut() {
            *v = *v * inv % p;
        }
        let pivot_row = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row[c] != 0 {
                let f = row[c];
                for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                    *v = (*v + p - f * pv % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Histogram of an additive induced mapping from its values on the basis
/// inputs `p^j e_i`.
fn linear_histogram<S: Semantics>(
    runner: &mut Runner<'_>,
    sem: &S,
    k: usize,
    q: u32,
    (p, m): (u32, u32),
) -> BTreeMap<u64, u64> {
    let mut rows = Vec::with_capacity(k * m as usize);
    let mut input = vec![0u32; k];
    for i in 0..k {
        let mut place = 1;
        for _ in 0..m {
            input[i] = place;
            let out = runner.eval(sem, &input);
            let mut row = Vec::with_capacity(out.len() * m as usize);
            for &o in out {
                let mut rest = o;
                for _ in 0..m {
                    row.push(rest % p);
                    rest /= p;
                }
            }
            rows.push(row);
            place *= p;
        }
        input[i] = 0;
    }
    let rank = rank_mod_p(rows, p) as u32;
    let kernel = checked_pow(p, (k as u32 * m - rank) as usize).unwrap() as u64;
    let image = checked_pow(p, rank as usize).unwrap() as u64;
    debug_assert_eq!(kernel as u128 * image as u128, checked_pow(q, k).unwrap());
    BTreeMap::from([(kernel, image)])
}

struct Candidate {
    score: f64,
    index: u128,
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(a), Some(b)) => {
            if b.score > a.score || (b.score == a.score && b.index < a.index) {
                Some(b)
            } else {
                Some(a)
            }
        }
        (a, None) => a,
        (None, b) => b,
    }
}

struct Engine<'a> {
    space: &'a Space,
    program: Program,
    class: &'a FunctionClass,
    objective: Objective,
    shortcut: Option<(u32, u32)>,
    k: usize,
}

impl Engine<'_> {
    fn histogram(&self, runner: &mut Runner<'_>, view: &TableView<'_>) -> BTreeMap<u64, u64> {
        match self.shortcut {
            Some(d) => linear_histogram(runner, view, self.k, self.space.q, d),
            None => {
                let hist = runner.histogram(view);
                if self.class.is_additive() {
                    assert_eq!(hist.len(), 1, "linear interpretation with a non-flat histogram");
                }
                if *self.class == FunctionClass::ScalarLinear {
                    let image: u64 = hist.values().sum();
                    assert!(
                        is_power_of(image, self.space.q as u64),
                        "scalar-linear image {image} is not a power of q"
                    );
                }
                hist
            }
        }
    }

    fn scan(&self, start: u128, end: u128) -> Option<Candidate> {
        let mut runner = Runner::new(&self.program);
        let mut digits = self.space.digits(start);
        let mut best: Option<Candidate> = None;
        for index in start..end {
            let view = self.space.view(&digits);
            let hist = self.histogram(&mut runner, &view);
            let score = self.objective.score(self.space.q, &hist);
            best = better(best, Some(Candidate { score, index }));
            for (d, m) in digits.iter_mut().zip(&self.space.members).rev() {
                *d += 1;
                if *d < m.count {
                    break;
                }
                *d = 0;
            }
        }
        best
    }

    fn score_index(&self, runner: &mut Runner<'_>, index: u128) -> f64 {
        let digits = self.space.digits(index);
        let view = self.space.view(&digits);
        let hist = self.histogram(runner, &view);
        self.objective.score(self.space.q, &hist)
    }
}

fn is_power_of(mut n: u64, q: u64) -> bool {
    while n > 1 && n % q == 0 {
        n /= q;
    }
    n == 1
}

fn prepare<'a>(
    ts: &TermSet,
    alg: &Algebra,
    class: &'a FunctionClass,
    objective: Objective,
    space: &'a Space,
    opts: &SearchOptions,
) -> Result<Engine<'a>, AlgebraError> {
    let view = space.view(&vec![0; space.members.len()]);
    let program = Program::compile(ts, &view)?;
    let shortcut = if opts.linear_shortcut && class.is_additive() {
        alg.digits
    } else {
        None
    };
    Ok(Engine {
        space,
        program,
        class,
        objective,
        shortcut,
        k: ts.k(),
    })
}

fn per_candidate_cost(engine: &Engine<'_>) -> u128 {
    match engine.shortcut {
        Some((_, m)) => (engine.k as u128 * m as u128).max(1),
        None => checked_pow(engine.space.q, engine.k).unwrap_or(u128::MAX),
    }
}

fn finish(
    ts: &TermSet,
    alg: &Algebra,
    class: &FunctionClass,
    engine: &Engine<'_>,
    best: Candidate,
    explored: u64,
    sampled: bool,
    budget: u64,
) -> Result<SearchResult, AlgebraError> {
    let space = engine.space;
    let best_tables = space.interpretation(best.index);
    let mut runner = Runner::new(&engine.program);
    let digits = space.digits(best.index);
    let hist = engine.histogram(&mut runner, &space.view(&digits));
    // Re-verify the winner with the general evaluator when affordable.
    let report = match Evaluator::new(ts, &best_tables)?.with_budget(budget).histogram() {
        Ok(rep) => {
            assert_eq!(
                rep.histogram, hist,
                "search histogram disagrees with re-evaluation"
            );
            rep
        }
        Err(InterpError::BudgetExceeded { .. }) => EvaluationReport::new(ts.k(), ts.r(), space.q, hist),
        Err(e) => return Err(e.into()),
    };
    let best_value = match engine.objective {
        Objective::Dispersion => {
            let d = DispersionValue::new(report.image_size(), space.q);
            ObjectiveValue {
                exact_count: Some(d.exact_count),
                log_value: d.log_value,
            }
        }
        Objective::OneToOne => {
            let d = DispersionValue::new(report.one_image_size(), space.q);
            ObjectiveValue {
                exact_count: Some(d.exact_count),
                log_value: d.log_value,
            }
        }
        Objective::Renyi(a) => ObjectiveValue {
            exact_count: None,
            log_value: Some(report.renyi(a)),
        },
    };
    Ok(SearchResult {
        objective: engine.objective,
        algebra: alg.name.clone(),
        class: class.name().to_string(),
        best_value,
        best_index: best.index,
        best_tables,
        report,
        explored,
        space: space.total,
        sampled,
        linear_shortcut: engine.shortcut.is_some(),
    })
}

/// Exact maximizer of `objective` over every assignment of class members
/// to the function symbols of `ts`.
pub fn exhaustive_search(
    ts: &TermSet,
    alg: &Algebra,
    class: &FunctionClass,
    objective: Objective,
    opts: &SearchOptions,
) -> Result<SearchResult, AlgebraError> {
    let space = Space::new(ts, alg, class)?;
    let engine = prepare(ts, alg, class, objective, &space, opts)?;
    let needed = space.total.saturating_mul(per_candidate_cost(&engine));
    if needed > opts.budget as u128 {
        return Err(InterpError::BudgetExceeded {
            needed,
            budget: opts.budget,
        }
        .into());
    }
    // within budget, so the space fits in u64
    let total = space.total as u64;
    let chunk = total.div_ceil(SEARCH_CHUNKS).max(1);
    let ranges: Vec<(u128, u128)> = (0..total)
        .step_by(chunk as usize)
        .map(|s| (s as u128, (s + chunk).min(total) as u128))
        .collect();
    let best = ranges
        .into_par_iter()
        .map(|(s, e)| engine.scan(s, e))
        .reduce(|| None, better)
        .expect("the candidate space is never empty");
    log::debug!(
        "search over {} candidates: best index {} score {}",
        space.total,
        best.index,
        best.score
    );
    finish(ts, alg, class, &engine, best, total, false, opts.budget)
}

/// Best of `samples` candidates drawn uniformly with a seeded generator.
pub fn sampled_search(
    ts: &TermSet,
    alg: &Algebra,
    class: &FunctionClass,
    objective: Objective,
    samples: u64,
    seed: u64,
    opts: &SearchOptions,
) -> Result<SearchResult, AlgebraError> {
    let space = Space::new(ts, alg, class)?;
    let engine = prepare(ts, alg, class, objective, &space, opts)?;
    let needed = (samples as u128).saturating_mul(per_candidate_cost(&engine));
    if needed > opts.budget as u128 {
        return Err(InterpError::BudgetExceeded {
            needed,
            budget: opts.budget,
        }
        .into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices: Vec<u128> = (0..samples.max(1))
        .map(|_| rng.random_range(0..space.total))
        .collect();
    let best = indices
        .par_chunks(256)
        .map(|chunk| {
            let mut runner = Runner::new(&engine.program);
            chunk.iter().fold(None, |acc, &index| {
                let score = engine.score_index(&mut runner, index);
                better(acc, Some(Candidate { score, index }))
            })
        })
        .reduce(|| None, better)
        .expect("at least one sample");
    finish(
        ts,
        alg,
        class,
        &engine,
        best,
        indices.len() as u64,
        true,
        opts.budget,
    )
}

/// Binary table of the group operation.
pub fn group_interp(alg: &Algebra, symbol: &str) -> Result<Interpretation, AlgebraError> {
    if alg.kind != AlgebraKind::Group {
        return Err(AlgebraError::Unsupported {
            class: "group".into(),
            algebra: alg.name.clone(),
        });
    }
    let mut interp = Interpretation::empty(alg.q)?;
    interp.define(symbol, 2, |a| alg.add(a[0], a[1]))?;
    Ok(interp)
}

/// `f(a₁, a₂) = (a₁ − a₂)² + a₁ + a₂` over `Z_p`.
pub fn case_study_interp(p: u32) -> Result<Interpretation, AlgebraError> {
    if p < 2 {
        return Err(AlgebraError::Table(format!("alphabet size {p} is below 2")));
    }
    if !is_prime(p) {
        log::warn!("case-study coding over composite Z_{p} behaves irregularly");
    }
    let mut interp = Interpretation::empty(p)?;
    interp.define("f", 2, |a| {
        let d = (a[0] + p - a[1]) % p;
        ((d as u64 * d as u64 + a[0] as u64 + a[1] as u64) % p as u64) as u32
    })?;
    Ok(interp)
}

/// Closed-form statistics of the case-study coding over `Z_p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticClosedForm {
    pub p: u32,
    /// Outputs with exactly one pre-image.
    pub s1: u128,
    /// Outputs with two pre-images.
    pub s2: u128,
    /// Outputs with `p − 1` pre-images.
    pub s_p_minus_1: u128,
    /// Outputs with `3p − 2` pre-images.
    pub s_3p_minus_2: u128,
    pub image: u128,
    pub gamma: f64,
    pub gamma_one: f64,
}

impl QuadraticClosedForm {
    pub fn new(p: u32) -> Result<QuadraticClosedForm, AlgebraError> {
        if !is_prime(p) || p == 2 {
            // At p = 2 the two-pre-image class count goes negative.
            return Err(AlgebraError::NotPrime(p));
        }
        let pp = p as u128;
        let s1 = 3 * pp * (pp - 1) * (pp - 1);
        let s2 = pp * (pp - 1) * (pp - 1) * (pp - 3) / 2;
        let s_p_minus_1 = 2 * pp * (pp - 1);
        let s_3p_minus_2 = pp;
        let pf = p as f64;
        Ok(QuadraticClosedForm {
            p,
            s1,
            s2,
            s_p_minus_1,
            s_3p_minus_2,
            image: pp * (pp * pp * pp + pp * pp - pp + 1) / 2,
            gamma: log_base(pf / 2.0 * (pf.powi(3) + pf * pf - pf + 1.0), p),
            gamma_one: 3.0 + log_base(3.0, p) + 2.0 * log_base(1.0 - 1.0 / pf, p),
        })
    }

    /// Histogram implied by the partition counts. At `p = 3` the classes of
    /// multiplicity 2 and `p − 1` coincide.
    pub fn histogram(&self) -> BTreeMap<u64, u64> {
        let p = self.p as u64;
        let mut h = BTreeMap::new();
        for (m, c) in [
            (1, self.s1),
            (2, self.s2),
            (p - 1, self.s_p_minus_1),
            (3 * p - 2, self.s_3p_minus_2),
        ] {
            if c > 0 {
                *h.entry(m).or_default() += c as u64;
            }
        }
        h
    }

    /// `H_α` from the closed-form display (finite α ≠ 1), the Shannon limit
    /// of the partition counts (α = 1), or `4 − log_p(3p − 2)` (α = ∞).
    pub fn renyi(&self, alpha: Alpha) -> f64 {
        let pf = self.p as f64;
        let ln_p = pf.ln();
        match alpha {
            Alpha::Infinity => 4.0 - (3.0 * pf - 2.0).ln() / ln_p,
            a if a == Alpha::ONE => {
                let total = pf.powi(4);
                let sum: f64 = [
                    (1.0, self.s1 as f64),
                    (2.0, self.s2 as f64),
                    (pf - 1.0, self.s_p_minus_1 as f64),
                    (3.0 * pf - 2.0, self.s_3p_minus_2 as f64),
                ]
                .iter()
                .map(|&(m, c)| c * m * m.ln())
                .sum();
                4.0 - sum / total / ln_p
            }
            a => {
                let a = a.to_f64();
                let q1 = pf - 1.0;
                let inner = 3.0 * q1 * q1
                    + q1 * q1 * (pf - 3.0) * 2f64.powf(a - 1.0)
                    + 2.0 * q1 * q1.powf(a)
                    + (3.0 * pf - 2.0).powf(a);
                inner.ln() / ln_p / (1.0 - a) + (1.0 - 4.0 * a) / (1.0 - a)
            }
        }
    }

    /// Large-p limit of `H_α`: 4 up to α = 2, `(3α − 2)/(α − 1)` beyond,
    /// 3 at infinity.
    pub fn limit(alpha: Alpha) -> f64 {
        match alpha {
            Alpha::Infinity => 3.0,
            a if a <= Alpha::integer(2) => 4.0,
            a => {
                let a = a.to_f64();
                (3.0 * a - 2.0) / (a - 1.0)
            }
        }
    }
}

/// Nonlinear solution `f(a₁, a₂) = a₁^√q + τ a₂^√q`, `g(a₁, a₂) = a₁` for
/// the term set `{f(f(x₁,x₂), f(x₂,x₁)), g(g(x₁,x₂), g(x₂,x₁))}` over a
/// field whose size is a power of 4.
pub fn mirror_pairs_solution(alg: &Algebra) -> Result<Interpretation, AlgebraError> {
    let unsupported = || AlgebraError::Unsupported {
        class: "the characteristic-2 solution".into(),
        algebra: alg.name.clone(),
    };
    if !alg.is_field() {
        return Err(unsupported());
    }
    let (p, m) = alg.digits.ok_or_else(unsupported)?;
    if p != 2 || m % 2 != 0 {
        return Err(unsupported());
    }
    let root = 1u64 << (m / 2);
    let frob = |a: u32| alg.pow(a, root).expect("fields have a unit");
    let tau = (0..alg.q)
        .find(|&t| alg.add(t, frob(t)) != 0)
        .expect("some element is outside the fixed field of the square-root Frobenius");
    let mut interp = Interpretation::empty(alg.q)?;
    interp.define("f", 2, |a| alg.add(frob(a[0]), alg.mul(tau, frob(a[1])).unwrap()))?;
    interp.define("g", 2, |a| a[0])?;
    Ok(interp)
}

/// Number of subterms of the variable-ized companion term set, `3(k + 1)`.
fn relay_skeleton_size(k: usize) -> usize {
    3 * (k + 1)
}

/// Smallest alphabet for which the injection `A^k -> B^{k+1}` used by
/// [`RelayFamilySolution`] exists.
pub fn relay_family_min_alphabet(k: usize) -> u32 {
    let s = relay_skeleton_size(k) as u32;
    (s + 2..)
        .find(|&q| {
            let b = (q - 1) / s;
            checked_pow(b, k + 1).unwrap_or(u128::MAX) >= checked_pow(q, k).unwrap_or(u128::MAX)
        })
        .expect("the search terminates")
}

/// Solution for the relay term set whose inner functions `h_i` feed both a
/// shared `f` and per-term `g_i`: the `h_i` jointly encode `A^k` into
/// correctly formatted inputs of dynamic one-to-one routing on the
/// companion term set where each `h_i` is a variable.
pub struct RelayFamilySolution {
    k: usize,
    q: u32,
    routing: DynamicRouting,
    /// Header subterm of each `h_i` in the companion term set.
    h_vertices: Vec<usize>,
}

impl RelayFamilySolution {
    pub fn new(k: usize, q: u32) -> Result<RelayFamilySolution, AlgebraError> {
        let companion = crate::catalog::relay_skeleton(k);
        let routing = DynamicRouting::new(&companion, q, true)?;
        let b = routing.alphabet().b_size;
        if checked_pow(b, k + 1).unwrap_or(u128::MAX) < checked_pow(q, k).unwrap_or(u128::MAX) {
            return Err(RoutingError::AlphabetTooSmall {
                q,
                s: relay_skeleton_size(k),
            }
            .into());
        }
        let h_vertices = (1..=k + 1)
            .map(|i| {
                routing
                    .index()
                    .position(&Term::var(format!("h{i}")))
                    .expect("companion variables are subterms")
            })
            .collect();
        Ok(RelayFamilySolution {
            k,
            q,
            routing,
            h_vertices,
        })
    }

    pub fn routing(&self) -> &DynamicRouting {
        &self.routing
    }

    /// Value of `h_i` (1-based) on `a ∈ A^k`: digit `i` of the base-|B|
    /// expansion of `a` read as a base-q number, under the header of `h_i`.
    fn h_value(&self, i: usize, a: &[u32]) -> u32 {
        let n = a.iter().fold(0u128, |acc, &v| acc * self.q as u128 + v as u128);
        let b = self.routing.alphabet().b_size as u128;
        let digit = (n / b.pow((self.k + 1 - i) as u32)) % b;
        self.routing
            .alphabet()
            .encode(self.h_vertices[i - 1], digit as u32)
    }
}

impl Semantics for RelayFamilySolution {
    fn alphabet_size(&self) -> u32 {
        self.q
    }

    fn zero_value(&self) -> u32 {
        self.routing.zero_value()
    }

    fn resolve(&self, symbol: &str, arity: usize) -> Result<usize, InterpError> {
        if let Some(i) = symbol
            .strip_prefix('h')
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|i| (1..=self.k + 1).contains(i))
        {
            if arity != self.k {
                return Err(InterpError::ArityMismatch {
                    symbol: symbol.to_string(),
                    expected: arity,
                    found: self.k,
                });
            }
            return Ok(i - 1);
        }
        Ok(self.k + 1 + self.routing.resolve(symbol, arity)?)
    }

    fn apply(&self, id: usize, args: &[u32]) -> u32 {
        if id <= self.k {
            self.h_value(id + 1, args)
        } else {
            self.routing.apply(id - self.k - 1, args)
        }
    }
}
