//! Routing schemes that reach the min-cut.
//!
//! On a diversified term set every subterm has its own coding function, so
//! values can simply be forwarded along a family of vertex-disjoint paths
//! ([`build_routing`], [`build_one_to_one_routing`]). When function symbols
//! are shared, [`DynamicRouting`] tags every value with a header naming the
//! subterm it sits on, so a shared function can tell its occurrences apart.

use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::interp::{checked_pow, Alpha, CodingTable, InterpError, Interpretation, Semantics};
use crate::mincut::{build_dag, min_cut, CutCertificate, TermDag};
use crate::term::{is_diversified, subterm_closure, SubtermIndex, Term, TermSet};

/// Marker element ("1" in the usual presentation); any fixed element works.
pub const MARKER: u32 = 0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("term set is not diversified: symbol `{0}` heads more than one subterm")]
    NotDiversified(String),
    #[error("dynamic routing needs an alphabet larger than the {s} subterms, got {q}")]
    AlphabetTooSmall { q: u32, s: usize },
    #[error("invalid threshold parameters: {0}")]
    Threshold(String),
    #[error("materialized tables would need {0} entries")]
    TooLarge(u128),
    #[error(transparent)]
    Interp(#[from] InterpError),
}

/// How a coding function on a subterm treats its arguments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Rule {
    /// Off every path: output the marker.
    Marker,
    /// Forward argument `arg`.
    Forward { arg: usize },
    /// Forward argument `arg` when every argument in `gates` carries the
    /// marker, else output the marker.
    Gated { arg: usize, gates: Vec<usize> },
}

impl Rule {
    #[inline]
    pub fn apply(&self, args: &[u32]) -> u32 {
        match self {
            Rule::Marker => MARKER,
            Rule::Forward { arg } => args[*arg],
            Rule::Gated { arg, gates } => {
                if gates.iter().all(|&g| args[g] == MARKER) {
                    args[*arg]
                } else {
                    MARKER
                }
            }
        }
    }
}

/// Vertex-disjoint paths from variables to terms, with the forwarding role
/// of every subterm on a path.
#[derive(Debug, Clone, Serialize)]
pub struct PathAssignment {
    pub paths: Vec<Vec<usize>>,
    /// Start variable of each path (variable index in signature order).
    pub source_of: Vec<usize>,
    /// Path through each subterm, if any.
    pub path_of: Vec<Option<usize>>,
    /// For subterms on a path (other than its variable), the argument
    /// position of the previous vertex on the same path.
    pub forward_arg: Vec<Option<usize>>,
}

impl PathAssignment {
    pub fn from_certificate(ts: &TermSet, dag: &TermDag, cert: &CutCertificate) -> PathAssignment {
        let idx = dag.index();
        let n = idx.len();
        let mut path_of = vec![None; n];
        let mut forward_arg = vec![None; n];
        let mut source_of = Vec::with_capacity(cert.paths.len());
        for (p, path) in cert.paths.iter().enumerate() {
            let Term::Var(v) = idx.get(path[0]) else {
                unreachable!("paths start at variables")
            };
            source_of.push(ts.signature().variable_index(v).expect("known variable"));
            for (i, &v) in path.iter().enumerate() {
                path_of[v] = Some(p);
                if i > 0 {
                    let prev = path[i - 1];
                    forward_arg[v] = idx.direct_subterms(v).iter().position(|&c| c == prev);
                }
            }
        }
        PathAssignment {
            paths: cert.paths.clone(),
            source_of,
            path_of,
            forward_arg,
        }
    }

    /// Paths from a fresh min-cut computation.
    pub fn compute(ts: &TermSet) -> PathAssignment {
        let dag = build_dag(ts);
        let cert = min_cut(&dag);
        PathAssignment::from_certificate(ts, &dag, &cert)
    }

    pub fn rho(&self) -> usize {
        self.paths.len()
    }

    /// Per-subterm rules for routing (`one_to_one = false`) or one-to-one
    /// routing.
    pub fn rules(&self, idx: &SubtermIndex, one_to_one: bool) -> Vec<Rule> {
        let on_path_var: Vec<bool> = (0..idx.len())
            .map(|v| idx.get(v).is_var() && self.path_of[v].is_some())
            .collect();
        (0..idx.len())
            .map(|v| match self.forward_arg[v] {
                None => Rule::Marker,
                Some(arg) if !one_to_one => Rule::Forward { arg },
                Some(arg) => {
                    let gates: Vec<usize> = idx
                        .direct_subterms(v)
                        .iter()
                        .enumerate()
                        .filter(|&(_, &c)| idx.get(c).is_var() && !on_path_var[c])
                        .map(|(i, _)| i)
                        .collect();
                    if gates.is_empty() {
                        Rule::Forward { arg }
                    } else {
                        Rule::Gated { arg, gates }
                    }
                }
            })
            .collect()
    }
}

fn routing_tables(
    ts_div: &TermSet,
    pa: &PathAssignment,
    q: u32,
    one_to_one: bool,
) -> Result<Interpretation, RoutingError> {
    if !is_diversified(ts_div) {
        let idx = subterm_closure(ts_div);
        let mut seen = std::collections::HashSet::new();
        let dup = idx
            .subterms()
            .iter()
            .filter_map(Term::principal)
            .find(|f| !seen.insert(*f))
            .unwrap_or_default();
        return Err(RoutingError::NotDiversified(dup.to_string()));
    }
    let idx = subterm_closure(ts_div);
    let rules = pa.rules(&idx, one_to_one);
    let mut interp = Interpretation::empty(q)?;
    for (v, t) in idx.subterms().iter().enumerate() {
        if let Term::App(f, args) = t {
            let rule = &rules[v];
            interp.insert(CodingTable::from_fn(f, args.len(), q, |a| rule.apply(a)))?;
        }
    }
    Ok(interp)
}

/// Forward each path value and output the marker off the paths.
pub fn build_routing(ts_div: &TermSet, pa: &PathAssignment, q: u32) -> Result<Interpretation, RoutingError> {
    routing_tables(ts_div, pa, q, false)
}

/// Routing that forwards only while every argument fed by a variable off
/// the paths carries the marker.
pub fn build_one_to_one_routing(
    ts_div: &TermSet,
    pa: &PathAssignment,
    q: u32,
) -> Result<Interpretation, RoutingError> {
    routing_tables(ts_div, pa, q, true)
}

/// The alphabet `(subterms × B) ∪ R` with `|B| = ⌊(q−1)/s⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DynamicAlphabet {
    pub q: u32,
    pub s: u32,
    pub b_size: u32,
    pub error_element: u32,
}

impl DynamicAlphabet {
    pub fn new(q: u32, s: usize) -> Result<DynamicAlphabet, RoutingError> {
        if (q as usize) <= s || s == 0 {
            return Err(RoutingError::AlphabetTooSmall { q, s });
        }
        let s = s as u32;
        let b_size = (q - 1) / s;
        Ok(DynamicAlphabet {
            q,
            s,
            b_size,
            error_element: s * b_size,
        })
    }

    /// Number of error elements `|R|`.
    pub fn r_size(&self) -> u32 {
        self.q - self.s * self.b_size
    }

    #[inline]
    pub fn encode(&self, subterm: usize, b: u32) -> u32 {
        debug_assert!(b < self.b_size);
        subterm as u32 * self.b_size + b
    }

    #[inline]
    pub fn decode(&self, a: u32) -> Option<(usize, u32)> {
        (a < self.error_element).then(|| ((a / self.b_size) as usize, a % self.b_size))
    }

    /// Alphabet range `[start, end)` of every subterm's header block.
    pub fn codebook(&self, idx: &SubtermIndex) -> Vec<CodebookEntry> {
        (0..idx.len())
            .map(|v| CodebookEntry {
                subterm: idx.get(v).to_string(),
                start: self.encode(v, 0),
                end: self.encode(v, 0) + self.b_size,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodebookEntry {
    pub subterm: String,
    pub start: u32,
    pub end: u32,
}

/// Header-based routing over `(subterms × B) ∪ R`, evaluated by rule rather
/// than by table so it also works when `q^d` tables would be too large.
#[derive(Debug, Clone)]
pub struct DynamicRouting {
    alphabet: DynamicAlphabet,
    index: SubtermIndex,
    symbols: Vec<(String, usize)>,
    /// (symbol id, argument headers) packed into one key -> subterm.
    lookup: FxHashMap<u128, u32>,
    rules: Vec<Rule>,
    zero: u32,
    one_to_one: bool,
}

impl DynamicRouting {
    pub fn new(ts: &TermSet, q: u32, one_to_one: bool) -> Result<DynamicRouting, RoutingError> {
        let pa = PathAssignment::compute(ts);
        DynamicRouting::with_paths(ts, &pa, q, one_to_one)
    }

    pub fn with_paths(
        ts: &TermSet,
        pa: &PathAssignment,
        q: u32,
        one_to_one: bool,
    ) -> Result<DynamicRouting, RoutingError> {
        let index = subterm_closure(ts);
        let s = index.len();
        let alphabet = DynamicAlphabet::new(q, s)?;
        let symbols: Vec<(String, usize)> = ts
            .signature()
            .functions
            .iter()
            .map(|f| (f.name.clone(), f.arity))
            .collect();
        let mut lookup = FxHashMap::default();
        for v in 0..s {
            if let Term::App(f, _) = index.get(v) {
                let id = symbols
                    .iter()
                    .position(|(n, _)| n == f)
                    .expect("symbol in signature");
                let key = lookup_key(id, symbols.len(), s, index.direct_subterms(v).iter().copied());
                lookup.insert(key, v as u32);
            }
        }
        let rules = pa.rules(&index, one_to_one);
        let zero = index
            .position(&Term::Zero)
            .map(|z| alphabet.encode(z, MARKER))
            .unwrap_or(0);
        Ok(DynamicRouting {
            alphabet,
            index,
            symbols,
            lookup,
            rules,
            zero,
            one_to_one,
        })
    }

    pub fn alphabet(&self) -> &DynamicAlphabet {
        &self.alphabet
    }

    pub fn index(&self) -> &SubtermIndex {
        &self.index
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn is_one_to_one(&self) -> bool {
        self.one_to_one
    }

    /// Materialize one lookup table per function symbol.
    pub fn to_interpretation(&self) -> Result<Interpretation, RoutingError> {
        let q = self.alphabet.q;
        let total: u128 = self
            .symbols
            .iter()
            .map(|(_, d)| checked_pow(q, *d).unwrap_or(u128::MAX))
            .fold(0u128, |a, b| a.saturating_add(b));
        if total > 1 << 28 {
            return Err(RoutingError::TooLarge(total));
        }
        let mut interp = Interpretation::empty(q)?.with_zero_value(self.zero);
        for (id, (name, d)) in self.symbols.iter().enumerate() {
            interp.insert(CodingTable::from_fn(name, *d, q, |a| self.apply(id, a)))?;
        }
        Ok(interp)
    }

    /// The correctly formatted input whose data part is `data`.
    pub fn format_input(&self, ts: &TermSet, data: &[u32]) -> Vec<u32> {
        ts.variables()
            .iter()
            .zip(data)
            .map(|(v, &b)| {
                let u = self
                    .index
                    .position(&Term::var(v.as_str()))
                    .expect("variable vertex");
                self.alphabet.encode(u, b)
            })
            .collect()
    }

    /// Whether an output tuple is correctly formatted (each coordinate
    /// carries the header of its own term).
    pub fn is_formatted_output(&self, output: &[u32]) -> bool {
        output
            .iter()
            .zip(self.index.term_vertices())
            .all(|(&o, &t)| matches!(self.alphabet.decode(o), Some((u, _)) if u == t))
    }
}

/// Symbol id in the low digit so that symbols of different arity never
/// share a key.
fn lookup_key(id: usize, symbols: usize, s: usize, headers: impl Iterator<Item = usize>) -> u128 {
    headers.fold(0u128, |acc, u| acc * s as u128 + u as u128) * symbols as u128 + id as u128
}

impl Semantics for DynamicRouting {
    fn alphabet_size(&self) -> u32 {
        self.alphabet.q
    }

    fn zero_value(&self) -> u32 {
        self.zero
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

    fn apply(&self, id: usize, args: &[u32]) -> u32 {
        let mut data = [0u32; 32];
        let mut headers = [0usize; 32];
        for ((slot, header), &a) in data.iter_mut().zip(headers.iter_mut()).zip(args) {
            match self.alphabet.decode(a) {
                Some((u, b)) => {
                    *header = u;
                    *slot = b;
                }
                None => return self.alphabet.error_element,
            }
        }
        let key = lookup_key(
            id,
            self.symbols.len(),
            self.alphabet.s as usize,
            headers[..args.len()].iter().copied(),
        );
        match self.lookup.get(&key) {
            Some(&v) => {
                let b = self.rules[v as usize].apply(&data[..args.len()]);
                self.alphabet.encode(v as usize, b)
            }
            None => self.alphabet.error_element,
        }
    }
}

/// Materialized dynamic routing (or its one-to-one variant) for `ts`.
pub fn build_dynamic_routing(
    ts: &TermSet,
    q: u32,
    one_to_one: bool,
) -> Result<(Interpretation, DynamicAlphabet), RoutingError> {
    let dr = DynamicRouting::new(ts, q, one_to_one)?;
    Ok((dr.to_interpretation()?, dr.alphabet))
}

/// Outcome of evaluating dynamic routing on correctly formatted inputs only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormattedImage {
    /// Inputs enumerated, `|B|^k`.
    pub inputs: u64,
    /// Distinct outputs of formatted inputs; a lower bound on the image.
    pub image: u64,
    /// Correctly formatted outputs with a single formatted pre-image. Only
    /// formatted inputs reach formatted outputs, so they are one-to-one image points.
    pub one_in_j: u64,
}

/// Enumerate the `|B|^k` correctly formatted inputs of dynamic routing.
pub fn formatted_image(
    ts: &TermSet,
    dr: &DynamicRouting,
    budget: u64,
) -> Result<FormattedImage, RoutingError> {
    let b = dr.alphabet.b_size;
    let k = ts.k();
    let total = checked_pow(b, k).unwrap_or(u128::MAX);
    if total > budget as u128 {
        return Err(InterpError::BudgetExceeded {
            needed: total,
            budget,
        }
        .into());
    }
    let program = crate::interp::Program::compile(ts, dr)?;
    let eval = crate::interp::Evaluator::from_program(program, dr);
    let mut counts: FxHashMap<Vec<u32>, u32> = FxHashMap::default();
    let mut data = vec![0u32; k];
    for _ in 0..total as u64 {
        let input = dr.format_input(ts, &data);
        let out = eval.evaluate(&input)?;
        *counts.entry(out).or_default() += 1;
        for d in data.iter_mut().rev() {
            *d += 1;
            if *d < b {
                break;
            }
            *d = 0;
        }
    }
    let one_in_j = counts
        .iter()
        .filter(|(o, &c)| c == 1 && dr.is_formatted_output(o))
        .count() as u64;
    Ok(FormattedImage {
        inputs: total as u64,
        image: counts.len() as u64,
        one_in_j,
    })
}

/// Alphabet-size thresholds above which dynamic routing is within ε of the
/// min-cut. A threshold is `None` when ε lies outside its domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdParams {
    pub rho: usize,
    pub k: usize,
    pub s: usize,
    pub epsilon: f64,
    pub alpha: Option<Alpha>,
    /// Dispersion (and one-to-one dispersion when ρ = k).
    pub n1: Option<f64>,
    /// One-to-one dispersion via one-to-one dynamic routing when ρ < k.
    pub n2: Option<f64>,
    /// Rényi entropy of order α ∈ (0, 1): `(2s)^{β/ε}`.
    pub n3: Option<f64>,
    pub beta: Option<f64>,
}

pub fn thresholds(
    rho: usize,
    k: usize,
    s: usize,
    epsilon: f64,
    alpha: Option<Alpha>,
) -> Result<ThresholdParams, RoutingError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(RoutingError::Threshold(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if s < 2 {
        return Err(RoutingError::Threshold(format!(
            "the subterm count must be at least 2, got {s}"
        )));
    }
    let (rf, sf) = (rho as f64, s as f64);
    let e = rf / epsilon;
    let n1 = (epsilon < rf).then(|| sf.powf(e) * (1.0 - sf.powf(1.0 - e)).powf(-e));
    let n2 = (epsilon < rf / (1.0 + 2f64.ln() / sf.ln()))
        .then(|| sf.powf(e) * (1.0 - 2.0 * sf.powf(1.0 - e)).powf(-e));
    let (beta, n3) = match alpha {
        Some(a) if a > Alpha::ZERO && a < Alpha::ONE => {
            let a = a.to_f64();
            let beta = rf + a / (1.0 - a) * k as f64;
            (Some(beta), Some((2.0 * sf).powf(beta / epsilon)))
        }
        Some(a) => {
            return Err(RoutingError::Threshold(format!(
                "alpha must lie strictly between 0 and 1, got {a}"
            )))
        }
        None => (None, None),
    };
    if n1.is_none() && n2.is_none() && n3.is_none() {
        return Err(RoutingError::Threshold(format!(
            "epsilon = {epsilon} is outside every threshold domain for rho = {rho}"
        )));
    }
    Ok(ThresholdParams {
        rho,
        k,
        s,
        epsilon,
        alpha,
        n1,
        n2,
        n3,
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{preimage_histogram, DEFAULT_BUDGET};
    use crate::term::{diversify, parse_term_set};

    const CASE: &str = "term f(x,y)\nterm f(x,z)\nterm f(w,y)\nterm f(w,z)";
    const SHARED_RELAY: &str = "term h(f(x, y), g(z, w), f(y, x))\nterm m(g(z, w), f(y, x))\n\
                          term g(f(x, y), g(z, w))\nterm f(g(z, w), f(y, x))";

    fn ts(s: &str) -> TermSet {
        parse_term_set(s).unwrap()
    }

    fn routed(src: &str, q: u32, one: bool) -> crate::interp::EvaluationReport {
        let div = diversify(&ts(src));
        let pa = PathAssignment::compute(&div);
        let interp = if one {
            build_one_to_one_routing(&div, &pa, q).unwrap()
        } else {
            build_routing(&div, &pa, q).unwrap()
        };
        preimage_histogram(&interp, &div, DEFAULT_BUDGET).unwrap()
    }

    #[test]
    fn routing_case_study_is_perfect() {
        let rep = routed(CASE, 2, false);
        assert_eq!(rep.image_size(), 16);
        assert_eq!(rep.one_image_size(), 16);
    }

    #[test]
    fn routing_shared_relay() {
        let rep = routed(SHARED_RELAY, 3, false);
        assert_eq!(rep.image_size(), 27);
        assert_eq!(rep.one_image_size(), 0);
        assert!(rep.is_flat());
    }

    #[test]
    fn one_to_one_routing_shared_relay() {
        for q in 2..6u32 {
            let rep = routed(SHARED_RELAY, q, true);
            // Only the path through g(z, w) is gated, so x and y stay free.
            assert_eq!(rep.one_image_size(), (q * q * (q - 1)) as u64);
            assert!(rep.one_image_size() >= ((q - 1).pow(3)) as u64);
            assert!(rep.image_size() < (q as u64).pow(3) + 1);
        }
    }

    #[test]
    fn one_to_one_designated_inputs_are_unique() {
        let div = diversify(&ts(SHARED_RELAY));
        let pa = PathAssignment::compute(&div);
        let q = 4;
        let interp = build_one_to_one_routing(&div, &pa, q).unwrap();
        let eval = crate::interp::Evaluator::new(&div, &interp).unwrap();
        let counts = eval.output_counts().unwrap();
        let on_path: Vec<bool> = (0..div.k()).map(|i| pa.source_of.contains(&i)).collect();
        let mut seen = std::collections::HashSet::new();
        eval.for_each(|input, output| {
            let designated = input
                .iter()
                .zip(&on_path)
                .all(|(&a, &p)| if p { a != MARKER } else { a == MARKER });
            if designated {
                let key = eval.program().encode_output(output);
                assert_eq!(counts.get(key), 1);
                assert!(seen.insert(key));
            }
        })
        .unwrap();
        assert_eq!(seen.len(), 27);
    }

    #[test]
    fn one_to_one_single_term() {
        for q in 2..6u32 {
            let rep = routed("term f(x, y)", q, true);
            assert_eq!(rep.one_image_size(), q as u64 - 1);
        }
    }

    #[test]
    fn routing_rejects_shared_symbols() {
        let t = ts(CASE);
        let pa = PathAssignment::compute(&t);
        assert!(matches!(
            build_routing(&t, &pa, 2),
            Err(RoutingError::NotDiversified(_))
        ));
    }

    #[test]
    fn dynamic_alphabet_layout() {
        let a = DynamicAlphabet::new(17, 8).unwrap();
        assert_eq!((a.b_size, a.r_size(), a.error_element), (2, 1, 16));
        let a = DynamicAlphabet::new(9, 8).unwrap();
        assert_eq!((a.b_size, a.r_size()), (1, 1));
        assert!(DynamicAlphabet::new(8, 8).is_err());
        let a = DynamicAlphabet::new(100, 11).unwrap();
        assert_eq!(a.decode(a.encode(5, 3)), Some((5, 3)));
        assert_eq!(a.decode(a.error_element), None);
    }

    #[test]
    fn dynamic_routing_case_study_q17() {
        let t = ts(CASE);
        let (interp, alpha) = build_dynamic_routing(&t, 17, false).unwrap();
        assert_eq!(alpha.b_size, 2);
        let rep = preimage_histogram(&interp, &t, DEFAULT_BUDGET).unwrap();
        assert!(rep.image_size() >= 16);
        assert!(rep.dispersion().value() <= 4.0);
        // rule-based and tabulated semantics agree
        let dr = DynamicRouting::new(&t, 17, false).unwrap();
        assert_eq!(preimage_histogram(&dr, &t, DEFAULT_BUDGET).unwrap(), rep);
    }

    #[test]
    fn dynamic_routing_degenerate_b() {
        let t = ts(CASE);
        let dr = DynamicRouting::new(&t, 9, false).unwrap();
        let f = formatted_image(&t, &dr, 1000).unwrap();
        assert_eq!((f.inputs, f.image, f.one_in_j), (1, 1, 1));
        assert!(matches!(
            build_dynamic_routing(&t, 8, false),
            Err(RoutingError::AlphabetTooSmall { .. })
        ));
    }

    #[test]
    fn formatted_outputs_match_routing_over_b() {
        let t = ts(SHARED_RELAY);
        let dr = DynamicRouting::new(&t, 34, true).unwrap();
        assert_eq!(dr.alphabet().b_size, 3);
        let f = formatted_image(&t, &dr, 1000).unwrap();
        // one-to-one routing over B with |B| = 3 and ρ = 3
        assert!(f.one_in_j >= 8);
    }

    #[test]
    fn threshold_values() {
        let p = thresholds(4, 4, 8, 2.0, None).unwrap();
        assert!((p.n1.unwrap() - 64.0 * (8.0f64 / 7.0).powi(2)).abs() < 1e-9);
        let p = thresholds(4, 4, 8, 1.0, Some(Alpha::ratio(1, 2))).unwrap();
        assert_eq!(p.beta, Some(8.0));
        assert!((p.n3.unwrap() - 16f64.powi(8)).abs() < 1e-3);
        let p = thresholds(3, 4, 11, 1.5, None).unwrap();
        assert!((p.n1.unwrap() - 146.41).abs() < 1e-9);
        assert!((p.n2.unwrap() - 121.0 * (11.0f64 / 9.0).powi(2)).abs() < 1e-9);
        assert!(thresholds(4, 4, 8, 4.0, None).is_err());
        assert!(thresholds(4, 4, 8, 0.0, None).is_err());
        assert!(thresholds(4, 4, 8, 1.0, Some(Alpha::ONE)).is_err());
    }
}
