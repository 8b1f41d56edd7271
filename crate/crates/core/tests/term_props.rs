mod common;

use common::{arb_small_term_set, arb_term_set};
use proptest::prelude::*;
use termnet::mincut::is_vertex_cut;
use termnet::term::is_diversified;
use termnet::{build_dag, diversify, is_term_cut, parse_term_set, restrict_to_variables, subterm_closure};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn subterm_relation_is_a_partial_order(ts in arb_term_set(3, 3)) {
        let idx = subterm_closure(&ts);
        let sub = idx.subterms();
        for a in sub {
            prop_assert!(a.is_subterm_of(a));
            prop_assert!(!a.is_proper_subterm_of(a));
            for b in sub {
                for c in sub {
                    if a.is_subterm_of(b) && b.is_subterm_of(c) {
                        prop_assert!(a.is_subterm_of(c));
                    }
                    if a.is_proper_subterm_of(b) && b.is_proper_subterm_of(c) {
                        prop_assert!(a.is_proper_subterm_of(c));
                    }
                }
            }
        }
    }

    #[test]
    fn diversify_keeps_the_graph(ts in arb_term_set(4, 3)) {
        let div = diversify(&ts);
        prop_assert!(is_diversified(&div));
        let (a, b) = (subterm_closure(&ts), subterm_closure(&div));
        prop_assert_eq!(a.len(), b.len());
        prop_assert_eq!(a.term_vertices(), b.term_vertices());
        for i in 0..a.len() {
            prop_assert_eq!(a.direct_subterms(i), b.direct_subterms(i));
            prop_assert_eq!(a.get(i).args().len(), b.get(i).args().len());
            prop_assert_eq!(a.get(i).is_var(), b.get(i).is_var());
        }
        prop_assert_eq!(ts.variables(), div.variables());
    }

    #[test]
    fn restriction_to_all_variables_is_identity(ts in arb_term_set(4, 3)) {
        prop_assert_eq!(restrict_to_variables(&ts, ts.variables()).unwrap(), ts);
    }

    #[test]
    fn print_parse_round_trip(ts in arb_term_set(4, 3)) {
        let printed = ts.to_string();
        let back = parse_term_set(&printed).unwrap();
        prop_assert_eq!(back.to_string(), printed);
        prop_assert_eq!(back, ts);
    }

    #[test]
    fn term_cuts_are_vertex_cuts(ts in arb_small_term_set(10)) {
        let dag = build_dag(&ts);
        let sub = dag.index().subterms().to_vec();
        for mask in 0u32..1 << sub.len() {
            let removed: Vec<bool> = (0..sub.len()).map(|i| mask >> i & 1 == 1).collect();
            let cand: Vec<_> = sub.iter().zip(&removed).filter(|(_, &r)| r).map(|(t, _)| t.clone()).collect();
            prop_assert_eq!(is_term_cut(&ts, &cand, None).unwrap(), is_vertex_cut(&dag, &removed));
        }
    }
}
