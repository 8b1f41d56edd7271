//! Terms, term sets and the line-oriented term-set DSL.
//!
//! A term is built from variables, the constant `0` and applications of
//! function symbols. A [`TermSet`] is an ordered list of terms (the output
//! coordinates of a channel) together with the variables the receiver
//! requires. Identifier roles are inferred from syntax: an identifier that is
//! applied to arguments is a function symbol, a bare identifier is a
//! variable.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("function symbol `{symbol}` used with arity {first} and {second}")]
    ArityConflict {
        symbol: String,
        first: usize,
        second: usize,
    },
    #[error("identifier `{0}` used both as a variable and as a function symbol")]
    RoleConflict(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{0}` is not a subterm of the term set")]
    NotASubterm(String),
    #[error("function symbol `{0}` applied to no arguments")]
    NullaryApplication(String),
}

/// A symbolic term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Zero,
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn app(symbol: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App(symbol.into(), args)
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Principal function symbol, if any.
    pub fn principal(&self) -> Option<&str> {
        match self {
            Term::App(f, _) => Some(f),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::App(_, args) => args,
            _ => &[],
        }
    }

    /// True if `self` occurs in `other` (reflexive).
    pub fn is_subterm_of(&self, other: &Term) -> bool {
        self == other || other.args().iter().any(|a| self.is_subterm_of(a))
    }

    pub fn is_proper_subterm_of(&self, other: &Term) -> bool {
        self != other && self.is_subterm_of(other)
    }

    pub fn depth(&self) -> usize {
        1 + self.args().iter().map(Term::depth).max().unwrap_or(0)
    }

    /// Replace every variable outside `keep` by the constant `0`.
    fn zero_outside(&self, keep: &HashSet<&str>) -> Term {
        match self {
            Term::Var(v) if keep.contains(v.as_str()) => self.clone(),
            Term::Var(_) | Term::Zero => Term::Zero,
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.zero_outside(keep)).collect()),
        }
    }

    fn rename(&self, vars: &HashMap<String, String>, syms: &HashMap<String, String>) -> Term {
        match self {
            Term::Var(v) => Term::Var(vars.get(v).cloned().unwrap_or_else(|| v.clone())),
            Term::Zero => Term::Zero,
            Term::App(f, args) => Term::App(
                syms.get(f).cloned().unwrap_or_else(|| f.clone()),
                args.iter().map(|a| a.rename(vars, syms)).collect(),
            ),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Zero => f.write_str("0"),
            Term::App(g, args) => {
                write!(f, "{g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionSymbol {
    pub name: String,
    pub arity: usize,
}

/// Function symbols and variables of a term set, in post-order of first
/// occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub functions: Vec<FunctionSymbol>,
    pub variables: Vec<String>,
    pub has_zero: bool,
}

impl Signature {
    pub fn arity(&self, symbol: &str) -> Option<usize> {
        self.functions.iter().find(|f| f.name == symbol).map(|f| f.arity)
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    fn collect(terms: &[Term]) -> Result<Signature, TermError> {
        fn walk(
            t: &Term,
            sig: &mut Signature,
            arities: &mut HashMap<String, usize>,
            vars: &mut HashSet<String>,
        ) -> Result<(), TermError> {
            match t {
                Term::Var(v) => {
                    if arities.contains_key(v) {
                        return Err(TermError::RoleConflict(v.clone()));
                    }
                    if vars.insert(v.clone()) {
                        sig.variables.push(v.clone());
                    }
                }
                Term::Zero => sig.has_zero = true,
                Term::App(f, args) => {
                    if args.is_empty() {
                        return Err(TermError::NullaryApplication(f.clone()));
                    }
                    for a in args {
                        walk(a, sig, arities, vars)?;
                    }
                    if vars.contains(f) {
                        return Err(TermError::RoleConflict(f.clone()));
                    }
                    match arities.get(f) {
                        Some(&d) if d != args.len() => {
                            return Err(TermError::ArityConflict {
                                symbol: f.clone(),
                                first: d,
                                second: args.len(),
                            })
                        }
                        Some(_) => {}
                        None => {
                            arities.insert(f.clone(), args.len());
                            sig.functions.push(FunctionSymbol {
                                name: f.clone(),
                                arity: args.len(),
                            });
                        }
                    }
                }
            }
            Ok(())
        }

        let mut sig = Signature::default();
        let mut arities = HashMap::new();
        let mut vars = HashSet::new();
        for t in terms {
            walk(t, &mut sig, &mut arities, &mut vars)?;
        }
        // a symbol applied after the variable of the same name was seen
        for f in &sig.functions {
            if vars.contains(&f.name) {
                return Err(TermError::RoleConflict(f.name.clone()));
            }
        }
        Ok(sig)
    }
}

/// An ordered collection of terms with a requirement set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermSet {
    signature: Signature,
    terms: Vec<Term>,
    required: Vec<String>,
}

impl TermSet {
    /// Build a term set. `required = None` means every variable is required.
    pub fn new(terms: Vec<Term>, required: Option<Vec<String>>) -> Result<TermSet, TermError> {
        let signature = Signature::collect(&terms)?;
        let required = match required {
            None => signature.variables.clone(),
            Some(req) => {
                let wanted: HashSet<&str> = req.iter().map(String::as_str).collect();
                for r in &req {
                    if signature.variable_index(r).is_none() {
                        return Err(TermError::UnknownVariable(r.clone()));
                    }
                }
                signature
                    .variables
                    .iter()
                    .filter(|v| wanted.contains(v.as_str()))
                    .cloned()
                    .collect()
            }
        };
        Ok(TermSet {
            signature,
            terms,
            required,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn variables(&self) -> &[String] {
        &self.signature.variables
    }

    /// Required variables, in variable order.
    pub fn required(&self) -> &[String] {
        &self.required
    }

    pub fn requires_all(&self) -> bool {
        self.required.len() == self.signature.variables.len()
    }

    /// Number of variables `k`.
    pub fn k(&self) -> usize {
        self.signature.variables.len()
    }

    /// Number of terms `r`.
    pub fn r(&self) -> usize {
        self.terms.len()
    }

    pub fn with_required(&self, required: Option<Vec<String>>) -> Result<TermSet, TermError> {
        TermSet::new(self.terms.clone(), required)
    }

    /// Rename variables and function symbols. Names not in the maps are kept.
    pub fn rename(
        &self,
        vars: &HashMap<String, String>,
        syms: &HashMap<String, String>,
    ) -> Result<TermSet, TermError> {
        let terms = self.terms.iter().map(|t| t.rename(vars, syms)).collect();
        let req = self
            .required
            .iter()
            .map(|v| vars.get(v).cloned().unwrap_or_else(|| v.clone()))
            .collect();
        TermSet::new(terms, Some(req))
    }

    /// Copy with variables renamed `v0, v1, ...` and symbols `s0, s1, ...` in
    /// order of first occurrence. Two term sets are equal up to renaming iff
    /// their canonical forms are equal.
    pub fn canonical_form(&self) -> TermSet {
        let vars = self
            .signature
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), format!("v{i}")))
            .collect();
        let syms = self
            .signature
            .functions
            .iter()
            .enumerate()
            .map(|(i, f)| (f.name.clone(), format!("s{i}")))
            .collect();
        self.rename(&vars, &syms)
            .expect("renaming to fresh distinct names keeps the signature consistent")
    }

    pub fn is_isomorphic(&self, other: &TermSet) -> bool {
        self.canonical_form() == other.canonical_form()
    }

    /// Every identifier in use (variables and function symbols).
    pub fn identifiers(&self) -> HashSet<String> {
        self.signature
            .variables
            .iter()
            .cloned()
            .chain(self.signature.functions.iter().map(|f| f.name.clone()))
            .collect()
    }
}

impl fmt::Display for TermSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "term {t}")?;
        }
        if !self.requires_all() {
            write!(f, "require")?;
            for v in &self.required {
                write!(f, " {v}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum NodeKey {
    Var(String),
    Zero,
    App(String, Vec<usize>),
}

/// The deduplicated subterm closure of a term set.
///
/// Subterms are listed in post-order of first occurrence, so every direct
/// subterm precedes the terms it occurs in.
#[derive(Debug, Clone)]
pub struct SubtermIndex {
    subterms: Vec<Term>,
    children: Vec<Vec<usize>>,
    term_vertices: Vec<usize>,
    lookup: HashMap<NodeKey, usize>,
}

impl SubtermIndex {
    pub fn len(&self) -> usize {
        self.subterms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subterms.is_empty()
    }

    pub fn subterms(&self) -> &[Term] {
        &self.subterms
    }

    pub fn get(&self, i: usize) -> &Term {
        &self.subterms[i]
    }

    /// Ordered direct subterms of subterm `i` (empty for variables and `0`).
    pub fn direct_subterms(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Subterm index of every term, in term order (repeats allowed).
    pub fn term_vertices(&self) -> &[usize] {
        &self.term_vertices
    }

    pub fn position(&self, t: &Term) -> Option<usize> {
        let key = match t {
            Term::Var(v) => NodeKey::Var(v.clone()),
            Term::Zero => NodeKey::Zero,
            Term::App(f, args) => {
                let kids = args
                    .iter()
                    .map(|a| self.position(a))
                    .collect::<Option<Vec<_>>>()?;
                NodeKey::App(f.clone(), kids)
            }
        };
        self.lookup.get(&key).copied()
    }

    /// Index of the subterm with principal symbol `symbol` and the given
    /// direct subterms, if it exists.
    pub fn application(&self, symbol: &str, children: &[usize]) -> Option<usize> {
        self.lookup
            .get(&NodeKey::App(symbol.to_string(), children.to_vec()))
            .copied()
    }

    pub fn variable_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.subterms[i].is_var())
    }
}

/// Compute the subterm closure with direct-subterm edges.
pub fn subterm_closure(ts: &TermSet) -> SubtermIndex {
    fn visit(t: &Term, idx: &mut SubtermIndex) -> usize {
        let key = match t {
            Term::Var(v) => NodeKey::Var(v.clone()),
            Term::Zero => NodeKey::Zero,
            Term::App(f, args) => {
                let kids = args.iter().map(|a| visit(a, idx)).collect();
                NodeKey::App(f.clone(), kids)
            }
        };
        if let Some(&i) = idx.lookup.get(&key) {
            return i;
        }
        let i = idx.subterms.len();
        let kids = match &key {
            NodeKey::App(_, kids) => kids.clone(),
            _ => Vec::new(),
        };
        idx.subterms.push(t.clone());
        idx.children.push(kids);
        idx.lookup.insert(key, i);
        i
    }

    let mut idx = SubtermIndex {
        subterms: Vec::new(),
        children: Vec::new(),
        term_vertices: Vec::new(),
        lookup: HashMap::new(),
    };
    for t in ts.terms() {
        let v = visit(t, &mut idx);
        idx.term_vertices.push(v);
    }
    idx
}

/// Give every non-variable subterm its own principal symbol.
///
/// Symbols that head a single distinct subterm keep their name; a symbol
/// shared by several subterms becomes `f_1, f_2, ...` in subterm order.
/// The subterm order and the direct-subterm edges are unchanged.
pub fn diversify(ts: &TermSet) -> TermSet {
    let idx = subterm_closure(ts);
    let mut uses: HashMap<&str, usize> = HashMap::new();
    for t in idx.subterms() {
        if let Some(f) = t.principal() {
            *uses.entry(f).or_default() += 1;
        }
    }

    let mut taken = ts.identifiers();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut rebuilt: Vec<Term> = Vec::with_capacity(idx.len());
    for (i, t) in idx.subterms().iter().enumerate() {
        let new = match t {
            Term::App(f, _) => {
                let name = if uses[f.as_str()] == 1 {
                    f.clone()
                } else {
                    let n = seen.entry(f).or_default();
                    *n += 1;
                    let mut candidate = format!("{f}_{n}");
                    while taken.contains(&candidate) {
                        candidate.push('\'');
                    }
                    taken.insert(candidate.clone());
                    candidate
                };
                let args = idx
                    .direct_subterms(i)
                    .iter()
                    .map(|&c| rebuilt[c].clone())
                    .collect();
                Term::App(name, args)
            }
            other => other.clone(),
        };
        rebuilt.push(new);
    }
    let terms = idx.term_vertices().iter().map(|&v| rebuilt[v].clone()).collect();
    TermSet::new(terms, Some(ts.required().to_vec()))
        .expect("diversification keeps arities and variable names")
}

/// True if every non-variable subterm has a principal symbol of its own.
pub fn is_diversified(ts: &TermSet) -> bool {
    let idx = subterm_closure(ts);
    let mut seen = HashSet::new();
    idx.subterms()
        .iter()
        .filter_map(Term::principal)
        .all(|f| seen.insert(f))
}

/// Every variable outside `keep` replaced by the constant `0`.
pub fn restrict_to_variables(ts: &TermSet, keep: &[String]) -> Result<TermSet, TermError> {
    for v in keep {
        if ts.signature().variable_index(v).is_none() {
            return Err(TermError::UnknownVariable(v.clone()));
        }
    }
    let keep_set: HashSet<&str> = keep.iter().map(String::as_str).collect();
    if keep_set.len() == ts.k() {
        return Ok(ts.clone());
    }
    let terms = ts.terms().iter().map(|t| t.zero_outside(&keep_set)).collect();
    let required: Vec<String> = ts
        .required()
        .iter()
        .filter(|v| keep_set.contains(v.as_str()))
        .cloned()
        .collect();
    let probe = TermSet::new(terms, None)?;
    // required variables must still occur
    let required = required
        .into_iter()
        .filter(|v| probe.signature().variable_index(v).is_some())
        .collect();
    probe.with_required(Some(required))
}

/// Decide whether `candidate` is a term-cut: every term (or of the restricted set
/// when `restrict` is given) can be written by applying function symbols to
/// candidate subterms and the constant `0`.
pub fn is_term_cut(ts: &TermSet, candidate: &[Term], restrict: Option<&[String]>) -> Result<bool, TermError> {
    let restricted;
    let target = match restrict {
        Some(u) => {
            restricted = restrict_to_variables(ts, u)?;
            &restricted
        }
        None => ts,
    };
    let idx = subterm_closure(target);
    let mut in_cut = vec![false; idx.len()];
    for c in candidate {
        match idx.position(c) {
            Some(i) => in_cut[i] = true,
            None => return Err(TermError::NotASubterm(c.to_string())),
        }
    }
    Ok(expressible_all(&idx, &in_cut))
}

/// Index-level term-cut test over a subterm closure.
pub fn expressible_all(idx: &SubtermIndex, in_cut: &[bool]) -> bool {
    let mut ok = vec![false; idx.len()];
    for i in 0..idx.len() {
        ok[i] = in_cut[i]
            || match idx.get(i) {
                Term::Var(_) => false,
                Term::Zero => true,
                Term::App(..) => idx.direct_subterms(i).iter().all(|&c| ok[c]),
            };
    }
    idx.term_vertices().iter().all(|&t| ok[t])
}

// ---------------------------------------------------------------------------
// DSL

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
            src,
        }
    }

    fn err(&self, message: impl Into<String>) -> TermError {
        TermError::Syntax {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c == ' ' || c == '\t') {
            self.pos += 1;
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.pos += 1,
            _ => return None,
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '\'') {
            self.pos += 1;
        }
        Some(self.chars[start..self.pos].iter().collect())
    }

    fn term(&mut self) -> Result<Term, TermError> {
        self.skip_ws();
        if self.peek() == Some('0') {
            self.pos += 1;
            if matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                return Err(self.err("identifiers cannot start with a digit"));
            }
            return Ok(Term::Zero);
        }
        let name = self
            .ident()
            .ok_or_else(|| self.err(format!("expected a term in `{}`", self.src.trim())))?;
        self.skip_ws();
        if self.peek() != Some('(') {
            return Ok(Term::Var(name));
        }
        self.pos += 1;
        let mut args = Vec::new();
        loop {
            args.push(self.term()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(')') => {
                    self.pos += 1;
                    break;
                }
                Some(c) => return Err(self.err(format!("expected `,` or `)`, found `{c}`"))),
                None => return Err(self.err("unclosed `(`")),
            }
        }
        Ok(Term::App(name, args))
    }
}

/// Parse a single term.
pub fn parse_term(src: &str) -> Result<Term, TermError> {
    let mut cur = Cursor::new(src, 1);
    let t = cur.term()?;
    cur.skip_ws();
    if !cur.at_end() {
        return Err(cur.err("trailing characters after term"));
    }
    Ok(t)
}

/// Parse a term-set file.
///
/// ```text
/// # comment
/// term h(f(x, y), g(z, w))
/// require x z
/// ```
pub fn parse_term_set(text: &str) -> Result<TermSet, TermError> {
    let mut terms = Vec::new();
    let mut required: Option<Vec<String>> = None;
    let mut pending_arity: HashMap<String, (usize, usize)> = HashMap::new();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim_end_matches('\r');
        let mut cur = Cursor::new(line, line_no);
        cur.skip_ws();
        if cur.at_end() || cur.peek() == Some('#') {
            continue;
        }
        let kw = cur
            .ident()
            .ok_or_else(|| cur.err("expected `term` or `require`"))?;
        match kw.as_str() {
            "term" => {
                if !matches!(cur.peek(), Some(' ') | Some('\t')) {
                    return Err(cur.err("expected a space after `term`"));
                }
                let t = cur.term()?;
                cur.skip_ws();
                if !cur.at_end() && cur.peek() != Some('#') {
                    return Err(cur.err("trailing characters after term"));
                }
                check_arities(&t, line_no, &mut pending_arity)?;
                terms.push(t);
            }
            "require" => {
                let mut names = Vec::new();
                loop {
                    cur.skip_ws();
                    if cur.at_end() || cur.peek() == Some('#') {
                        break;
                    }
                    let name = cur.ident().ok_or_else(|| cur.err("expected a variable name"))?;
                    names.push(name);
                }
                if names.is_empty() {
                    return Err(cur.err("`require` needs at least one variable"));
                }
                required.get_or_insert_with(Vec::new).extend(names);
            }
            other => {
                cur.pos = 0;
                return Err(cur.err(format!("unknown statement `{other}`")));
            }
        }
    }
    TermSet::new(terms, required)
}

fn check_arities(t: &Term, line: usize, seen: &mut HashMap<String, (usize, usize)>) -> Result<(), TermError> {
    if let Term::App(f, args) = t {
        match seen.get(f) {
            Some(&(d, _)) if d != args.len() => {
                return Err(TermError::ArityConflict {
                    symbol: f.clone(),
                    first: d,
                    second: args.len(),
                })
            }
            Some(_) => {}
            None => {
                seen.insert(f.clone(), (args.len(), line));
            }
        }
        for a in args {
            check_arities(a, line, seen)?;
        }
    }
    Ok(())
}

/// Distinct variables occurring in `t`.
pub fn variables_of(t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fn walk(t: &Term, out: &mut BTreeSet<String>) {
        match t {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Zero => {}
            Term::App(_, args) => args.iter().for_each(|a| walk(a, out)),
        }
    }
    walk(t, &mut out);
    out
}
