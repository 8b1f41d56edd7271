//! Built-in term sets, networks and interpretations, addressable by name.

use crate::algebra::{case_study_interp, AlgebraError};
use crate::interp::Interpretation;
use crate::term::{parse_term_set, Term, TermSet};

pub const SHARED_RELAY: &str = "\
# relay channel with shared symbols f and g
term h(f(x, y), g(z, w), f(y, x))
term m(g(z, w), f(y, x))
term g(f(x, y), g(z, w))
term f(g(z, w), f(y, x))
";

pub const DIRECTED_CUT: &str = "\
# directed and undirected cuts differ
term h(g(f(z), y), x)
term l(f(z))
term l(z)
";

pub const CASE_STUDY: &str = "\
term f(x, y)
term f(x, z)
term f(w, y)
term f(w, z)
";

pub const MIRROR_PAIRS: &str = "\
term f(f(x1, x2), f(x2, x1))
term g(g(x1, x2), g(x2, x1))
";

pub const BUTTERFLY_NET: &str = "\
# two sources exchange messages through one relay
source x
source y
node f <- x y
user r1 <- x f
user r2 <- f y
";

pub const STORAGE_NET: &str = "\
# two messages stored at four locations, any two must suffice
source x
source y
node f <- x y
node g <- x y
user u1 <- x y
user u2 <- x f
user u3 <- y f
user u4 <- x g
user u5 <- y g
user u6 <- f g
";

pub const NOISY_LINK_DYN: &str = "\
# one of two links carries pure noise in each world
world 1 0.5
world 2 0.5
slot t 1
cell u1 1 t
  term noise1
  term f(x, y)
  require x
end
cell u2 1 t
  term y
  term f(x, y)
  require y
end
cell u1 2 t
  term x
  term f(x, y)
  require x
end
cell u2 2 t
  term noise2
  term f(x, y)
  require y
end
message u1 1 t x
message u2 1 t y
message u1 2 t x
message u2 2 t y
";

fn parsed(src: &str) -> TermSet {
    parse_term_set(src).expect("built-in term sets parse")
}

pub fn shared_relay() -> TermSet {
    parsed(SHARED_RELAY)
}

pub fn directed_cut() -> TermSet {
    parsed(DIRECTED_CUT)
}

pub fn case_study() -> TermSet {
    parsed(CASE_STUDY)
}

pub fn mirror_pairs() -> TermSet {
    parsed(MIRROR_PAIRS)
}

/// `k²` terms `f(x_i_0, x_j_1, …, x_j_{k−1})` for `1 ≤ i, j ≤ k`.
pub fn square_grid(k: usize) -> TermSet {
    assert!(k >= 2, "square_grid needs k >= 2");
    let mut terms = Vec::with_capacity(k * k);
    for i in 1..=k {
        for j in 1..=k {
            let mut args = vec![Term::var(format!("x{i}_0"))];
            args.extend((1..k).map(|l| Term::var(format!("x{j}_{l}"))));
            terms.push(Term::app("f", args));
        }
    }
    TermSet::new(terms, None).expect("well-formed")
}

/// `k + 1` terms `f(g_i(h1), h2, …, h_{k+1})` over variables `h1…h_{k+1}`.
pub fn relay_skeleton(k: usize) -> TermSet {
    assert!(k >= 1, "relay_skeleton needs k >= 1");
    let hs: Vec<Term> = (1..=k + 1).map(|i| Term::var(format!("h{i}"))).collect();
    build_relay_family(k, &hs)
}

/// The companion family with each `h_i` an arity-k function of `x1…xk`.
pub fn relay_family(k: usize) -> TermSet {
    assert!(k >= 1, "relay_family needs k >= 1");
    let xs: Vec<Term> = (1..=k).map(|i| Term::var(format!("x{i}"))).collect();
    let hs: Vec<Term> = (1..=k + 1)
        .map(|i| Term::app(format!("h{i}"), xs.clone()))
        .collect();
    build_relay_family(k, &hs)
}

fn build_relay_family(k: usize, hs: &[Term]) -> TermSet {
    let terms = (1..=k + 1)
        .map(|i| {
            let mut args = vec![Term::app(format!("g{i}"), vec![hs[0].clone()])];
            args.extend(hs[1..].iter().cloned());
            Term::app("f", args)
        })
        .collect();
    TermSet::new(terms, None).expect("well-formed")
}

/// Product function over F₂.
pub fn and_interp() -> Interpretation {
    let mut i = Interpretation::empty(2).expect("q = 2");
    i.define("f", 2, |a| a[0] * a[1]).expect("binary table");
    i
}

/// Binary interpretation of the relay channel `shared_relay`.
pub fn relay_binary_interp() -> Interpretation {
    let mut i = Interpretation::empty(2).expect("q = 2");
    i.define("f", 2, |a| a[0]).unwrap();
    i.define("g", 2, |a| (a[0] + a[1]) % 2).unwrap();
    i.define("h", 3, |a| (a[1] * a[2] + 1) % 2).unwrap();
    i.define("m", 2, |a| a[0] * a[1]).unwrap();
    i
}

/// Names accepted by [`term_set`] (parameterized families take a
/// `:<k>` suffix, e.g. `square_grid:3`).
pub const TERM_SETS: &[&str] = &[
    "shared_relay",
    "directed_cut",
    "case_study",
    "square_grid",
    "relay_skeleton",
    "relay_family",
    "mirror_pairs",
];

fn split_param(name: &str, default: usize) -> Option<(&str, usize)> {
    match name.split_once(':') {
        Some((base, k)) => Some((base, k.parse().ok()?)),
        None => Some((name, default)),
    }
}

pub fn term_set(name: &str) -> Option<TermSet> {
    let (base, k) = split_param(name, 2)?;
    match base {
        "shared_relay" => Some(shared_relay()),
        "directed_cut" => Some(directed_cut()),
        "case_study" => Some(case_study()),
        "square_grid" if k >= 2 => Some(square_grid(k)),
        "relay_skeleton" if k >= 1 => Some(relay_skeleton(k)),
        "relay_family" if k >= 1 => Some(relay_family(k)),
        "mirror_pairs" => Some(mirror_pairs()),
        _ => None,
    }
}

/// Names accepted by [`interpretation`]; `quadratic` takes the modulus, e.g.
/// `quadratic:5`.
pub const INTERPRETATIONS: &[&str] = &["and", "relay_binary", "quadratic"];

pub fn interpretation(name: &str) -> Option<Result<Interpretation, AlgebraError>> {
    let (base, p) = split_param(name, 3)?;
    match base {
        "and" => Some(Ok(and_interp())),
        "relay_binary" => Some(Ok(relay_binary_interp())),
        "quadratic" => Some(case_study_interp(p as u32)),
        _ => None,
    }
}

/// File name and contents of a built-in example.
pub fn example_file(name: &str) -> Option<(String, String)> {
    let stem = name.replace(':', "_");
    match name {
        "butterfly" => return Some(("butterfly.net".into(), BUTTERFLY_NET.into())),
        "storage" => return Some(("storage.net".into(), STORAGE_NET.into())),
        "noisy_link" => return Some(("noisy_link.dyn".into(), NOISY_LINK_DYN.into())),
        _ => {}
    }
    if let Some(ts) = term_set(name) {
        return Some((format!("{stem}.ts"), ts.to_string()));
    }
    match interpretation(name)? {
        Ok(i) => Some((format!("{stem}.json"), i.to_json())),
        Err(_) => None,
    }
}

/// Every name [`example_file`] understands, with default parameters.
pub fn example_names() -> Vec<&'static str> {
    let mut names: Vec<&str> = TERM_SETS.to_vec();
    names.extend(["butterfly", "storage", "noisy_link"]);
    names.extend(INTERPRETATIONS);
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mincut::min_cut_value;

    #[test]
    fn family_shapes() {
        let g3 = square_grid(3);
        assert_eq!((g3.k(), g3.r()), (9, 9));
        assert!(square_grid(2).is_isomorphic(&case_study()));
        let gp = relay_skeleton(2);
        assert_eq!((gp.k(), gp.r()), (3, 3));
        assert_eq!(gp.terms()[0].to_string(), "f(g1(h1), h2, h3)");
        let p8 = relay_family(2);
        assert_eq!(p8.k(), 2);
        assert_eq!(
            p8.terms()[1].to_string(),
            "f(g2(h1(x1, x2)), h2(x1, x2), h3(x1, x2))"
        );
    }

    #[test]
    fn family_min_cuts() {
        for k in 1..5 {
            assert_eq!(min_cut_value(&relay_skeleton(k)), k + 1);
            assert_eq!(min_cut_value(&relay_family(k)), k);
        }
        assert_eq!(min_cut_value(&square_grid(3)), 9);
    }

    #[test]
    fn registry_round_trips() {
        for name in example_names() {
            let (file, body) = example_file(name).unwrap();
            assert!(!body.is_empty(), "{file}");
            if file.ends_with(".ts") {
                assert!(parse_term_set(&body)
                    .unwrap()
                    .is_isomorphic(&term_set(name).unwrap()));
            }
        }
        assert!(term_set("square_grid:3").is_some());
        assert!(term_set("square_grid:1").is_none());
        assert!(term_set("nope").is_none());
        assert_eq!(example_file("quadratic:5").unwrap().0, "quadratic_5.json");
    }
}
