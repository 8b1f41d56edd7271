//! Random term sets and interpretations for the property suites.
#![allow(dead_code)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use termnet::{subterm_closure, CodingTable, Interpretation, Term, TermSet};

/// Fixed arities so that random terms never conflict.
pub const SYMBOLS: &[(&str, usize)] = &[("g", 1), ("f", 2), ("h", 2), ("m", 3)];
pub const VARIABLES: &[&str] = &["x", "y", "z", "w"];

pub fn arb_term(depth: u32) -> impl Strategy<Value = Term> {
    let leaf = prop::sample::select(VARIABLES).prop_map(Term::var);
    leaf.prop_recursive(depth, 24, 3, |inner| {
        (prop::sample::select(SYMBOLS), prop::collection::vec(inner, 3))
            .prop_map(|((f, d), args)| Term::app(f, args[..d].to_vec()))
    })
}

/// Between one and `max_terms` terms of depth at most `depth`.
pub fn arb_term_set(max_terms: usize, depth: u32) -> impl Strategy<Value = TermSet> {
    prop::collection::vec(arb_term(depth), 1..=max_terms)
        .prop_map(|terms| TermSet::new(terms, None).expect("fixed arities"))
}

/// Term sets whose subterm closure has at most `max_sub` elements.
pub fn arb_small_term_set(max_sub: usize) -> impl Strategy<Value = TermSet> {
    arb_term_set(4, 2).prop_filter("closure too large", move |ts| {
        subterm_closure(ts).len() <= max_sub
    })
}

/// Uniformly random tables for every symbol of `ts`.
pub fn random_interp(ts: &TermSet, q: u32, seed: u64) -> Interpretation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tables = ts
        .signature()
        .functions
        .iter()
        .map(|f| CodingTable {
            symbol: f.name.clone(),
            arity: f.arity,
            outputs: (0..q.pow(f.arity as u32))
                .map(|_| rng.random_range(0..q))
                .collect(),
        })
        .collect();
    Interpretation::new(q, tables).expect("complete tables")
}

/// Random linear tables `Σ c_i a_i mod p`.
pub fn random_scalar_linear(ts: &TermSet, p: u32, seed: u64) -> Interpretation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interp = Interpretation::empty(p).expect("p >= 2");
    for f in &ts.signature().functions {
        let coef: Vec<u32> = (0..f.arity).map(|_| rng.random_range(0..p)).collect();
        interp
            .define(&f.name, f.arity, |a| {
                a.iter().zip(&coef).map(|(x, c)| x * c).sum::<u32>() % p
            })
            .expect("fresh symbol");
    }
    interp
}
