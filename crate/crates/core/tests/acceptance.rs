//! End-to-end acceptance run: one PASS/FAIL line per criterion, non-zero
//! exit if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use termnet::algebra::{
    case_study_interp, exhaustive_search, mirror_pairs_solution, Algebra, FunctionClass, Objective,
    QuadraticClosedForm, SearchOptions,
};
use termnet::catalog::{self, BUTTERFLY_NET, NOISY_LINK_DYN, STORAGE_NET};
use termnet::dynamic::{
    asymptotic_max_utility, cell_min_cut, clairvoyant_diversify, max_satisfied_message_demands,
    message_demands_satisfiable, DynamicNetwork, UtilityDemand,
};
use termnet::interp::{log_base, preimage_histogram};
use termnet::mincut::{is_vertex_cut, min_cut_value};
use termnet::multiuser::{
    combine_channels, combined_term_set, network_to_user_channels, solvable, NetworkInstance, Verdict,
};
use termnet::routing::{
    build_one_to_one_routing, build_routing, formatted_image, thresholds, DynamicRouting, PathAssignment,
};
use termnet::{
    build_dag, diversify, is_term_cut, subterm_closure, Alpha, Interpretation, TermSet, DEFAULT_BUDGET,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Deterministic samples from a proptest strategy.
fn samples<S: Strategy>(strategy: S, n: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::deterministic();
    (0..n)
        .map(|_| {
            strategy
                .new_tree(&mut runner)
                .expect("strategy yields values")
                .current()
        })
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn min_cuts() -> Outcome {
    let g1 = catalog::shared_relay();
    ensure!(
        min_cut_value(&g1) == 3,
        "shared_relay min-cut {}",
        min_cut_value(&g1)
    );
    let wz = termnet::min_cut_wrt(&g1, &["w".into(), "z".into()])
        .unwrap()
        .1
        .value;
    ensure!(wz == 1, "shared_relay w.r.t. {{w, z}}: {wz}");
    ensure!(
        min_cut_value(&catalog::directed_cut()) == 2,
        "directed cut of the three-term example"
    );
    ensure!(min_cut_value(&catalog::case_study()) == 4, "case study");
    let net = NetworkInstance::parse(BUTTERFLY_NET).unwrap();
    let combined = combined_term_set(&network_to_user_channels(&net).unwrap()).unwrap();
    ensure!(
        min_cut_value(&combined) == 4,
        "butterfly combined {}",
        min_cut_value(&combined)
    );
    for k in 2..=4 {
        let v = min_cut_value(&catalog::square_grid(k));
        ensure!(v == k * k, "square_grid({k}) = {v}");
    }
    Ok("3, 1, 2, 4, 4, k² for k = 2..4".into())
}

fn term_cut_equivalence() -> Outcome {
    let sets = samples(common::arb_small_term_set(12), 200);
    let mut subsets = 0u64;
    for ts in &sets {
        let dag = build_dag(ts);
        let sub = dag.index().subterms().to_vec();
        for mask in 0u32..1 << sub.len() {
            let removed: Vec<bool> = (0..sub.len()).map(|i| mask >> i & 1 == 1).collect();
            let cand: Vec<_> = sub
                .iter()
                .zip(&removed)
                .filter(|(_, &r)| r)
                .map(|(t, _)| t.clone())
                .collect();
            ensure!(
                is_term_cut(ts, &cand, None).unwrap() == is_vertex_cut(&dag, &removed),
                "disagreement on {ts} with mask {mask:b}"
            );
            subsets += 1;
        }
    }
    Ok(format!("200 term sets, {subsets} subsets agree"))
}

fn binary_case_study() -> Outcome {
    let ts = catalog::case_study();
    let res = exhaustive_search(
        &ts,
        &Algebra::prime_field(2).unwrap(),
        &FunctionClass::AllFunctions,
        Objective::Dispersion,
        &SearchOptions::default(),
    )
    .unwrap();
    ensure!(res.explored == 16, "explored {}", res.explored);
    ensure!(
        res.report.image_size() == 10,
        "max image {}",
        res.report.image_size()
    );
    let table = &res.best_tables.table("f").unwrap().outputs;
    ensure!(table == &[0, 0, 0, 1], "maximizer {table:?} is not the product");
    let rep = &res.report;
    let l7 = 7f64.log2();
    ensure!(
        close(rep.one_to_one_dispersion().value(), 9f64.log2(), 1e-12),
        "one-to-one"
    );
    ensure!(
        close(rep.renyi(Alpha::ONE), 4.0 - 7.0 / 16.0 * l7, 1e-12),
        "Shannon {}",
        rep.renyi(Alpha::ONE)
    );
    ensure!(
        close(rep.renyi(Alpha::INF), 4.0 - l7, 1e-12),
        "min-entropy {}",
        rep.renyi(Alpha::INF)
    );
    Ok("image 10 by the product, one-to-one log₂9, H₁ and H∞ exact".into())
}

fn ternary_case_study() -> Outcome {
    let ts = catalog::case_study();
    let res = exhaustive_search(
        &ts,
        &Algebra::modular_ring(3).unwrap(),
        &FunctionClass::AllFunctions,
        Objective::Dispersion,
        &SearchOptions::default(),
    )
    .unwrap();
    ensure!(res.explored == 19683, "explored {}", res.explored);
    ensure!(
        res.report.image_size() == 51,
        "max image {}",
        res.report.image_size()
    );
    let rep = preimage_histogram(&case_study_interp(3).unwrap(), &ts, DEFAULT_BUDGET).unwrap();
    ensure!(
        rep.image_size() == 51 && rep.one_image_size() == 36,
        "coding gives {} / {}",
        rep.image_size(),
        rep.one_image_size()
    );
    let q = 3u64;
    ensure!(q.pow(4) - 2 * q.pow(3) + 3 * q * q - q == 51, "image bound");
    let cf = QuadraticClosedForm::new(3).unwrap();
    ensure!(
        cf.image == 51 && cf.s1 == 36,
        "closed form {} / {}",
        cf.image,
        cf.s1
    );
    ensure!(3 * (27 + 9 - 3 + 1) / 2 == 51, "closed-form image");
    Ok("max image 51, coding image 51 and one-to-one 36".into())
}

fn partition_counts() -> Outcome {
    let ts = catalog::case_study();
    let alphas = [
        Alpha::ZERO,
        Alpha::ratio(1, 2),
        Alpha::integer(2),
        Alpha::integer(3),
        Alpha::INF,
    ];
    for p in [3u64, 5, 7, 11] {
        let cf = QuadraticClosedForm::new(p as u32).unwrap();
        let expect = [
            (3 * p * (p - 1).pow(2), cf.s1),
            (p * (p - 1).pow(2) * (p - 3) / 2, cf.s2),
            (2 * p * (p - 1), cf.s_p_minus_1),
            (p, cf.s_3p_minus_2),
        ];
        for (formula, closed) in expect {
            ensure!(
                formula as u128 == closed,
                "p = {p}: class count {closed} vs formula {formula}"
            );
        }
        let rep = preimage_histogram(&case_study_interp(p as u32).unwrap(), &ts, DEFAULT_BUDGET).unwrap();
        let h = |m: u64| rep.histogram.get(&m).copied().unwrap_or(0) as u128;
        ensure!(h(1) == cf.s1, "p = {p}: |S₁| {}", h(1));
        ensure!(
            h(3 * p - 2) == cf.s_3p_minus_2,
            "p = {p}: |S_3p−2| {}",
            h(3 * p - 2)
        );
        if p == 3 {
            // two pre-images and p − 1 pre-images coincide
            ensure!(h(2) == cf.s2 + cf.s_p_minus_1, "p = 3: merged class {}", h(2));
        } else {
            ensure!(h(2) == cf.s2, "p = {p}: |S₂| {}", h(2));
            ensure!(h(p - 1) == cf.s_p_minus_1, "p = {p}: |S_p−1| {}", h(p - 1));
        }
        for a in alphas {
            let (brute, closed) = (rep.renyi(a), cf.renyi(a));
            ensure!(
                close(brute, closed, 1e-9),
                "p = {p}, α = {a}: {brute} vs {closed}"
            );
        }
    }
    Ok("p ∈ {3, 5, 7, 11} counts and H_α agree".into())
}

fn limit_behavior() -> Outcome {
    let cf = QuadraticClosedForm::new(10007).unwrap();
    let grid = [
        Alpha::ratio(1, 2),
        Alpha::ONE,
        Alpha::integer(2),
        Alpha::integer(3),
        Alpha::integer(5),
        Alpha::INF,
    ];
    let expected = [4.0, 4.0, 4.0, 3.5, 13.0 / 4.0, 3.0];
    let mut misses = Vec::new();
    for (a, want) in grid.into_iter().zip(expected) {
        ensure!(
            close(QuadraticClosedForm::limit(a), want, 1e-12),
            "limit at α = {a}"
        );
        let got = cf.renyi(a);
        if !close(got, want, 0.05) {
            misses.push(format!("α = {a}: {got:.4} vs {want}"));
        }
    }
    ensure!(
        misses.is_empty(),
        "outside 0.05 at p = 10007: {}",
        misses.join(", ")
    );
    Ok("all orders within 0.05".into())
}

fn routing() -> Outcome {
    let alphas = [
        Alpha::ZERO,
        Alpha::ratio(1, 2),
        Alpha::ONE,
        Alpha::integer(2),
        Alpha::INF,
    ];
    for (name, ts) in [
        ("shared_relay", catalog::shared_relay()),
        ("case study", catalog::case_study()),
    ] {
        let div = diversify(&ts);
        let pa = PathAssignment::compute(&div);
        let rho = pa.rho();
        ensure!(rho == min_cut_value(&ts), "{name}: paths {rho}");
        for q in [2u32, 3, 5] {
            let rep =
                preimage_histogram(&build_routing(&div, &pa, q).unwrap(), &div, DEFAULT_BUDGET).unwrap();
            let mult = (q as u64).pow((div.k() - rho) as u32);
            ensure!(
                rep.histogram.len() == 1 && rep.histogram.get(&mult) == Some(&(q as u64).pow(rho as u32)),
                "{name}, q = {q}: histogram {:?}",
                rep.histogram
            );
            for a in alphas {
                ensure!(
                    close(rep.renyi(a), rho as f64, 1e-12),
                    "{name}, q = {q}: H_{a} = {}",
                    rep.renyi(a)
                );
            }
        }
    }
    let div = diversify(&catalog::shared_relay());
    let pa = PathAssignment::compute(&div);
    let mut misses = Vec::new();
    for q in [2u32, 3, 5] {
        let rep = preimage_histogram(
            &build_one_to_one_routing(&div, &pa, q).unwrap(),
            &div,
            DEFAULT_BUDGET,
        )
        .unwrap();
        let want = (q as u64 - 1).pow(3);
        if rep.one_image_size() != want {
            misses.push(format!("q = {q}: {} ≠ {want}", rep.one_image_size()));
        }
    }
    ensure!(
        misses.is_empty(),
        "routing flat at ρ, but one-to-one image: {}",
        misses.join(", ")
    );
    Ok("flat at ρ, one-to-one image (q−1)³".into())
}

fn dynamic_routing() -> Outcome {
    let ts = catalog::case_study();
    let s = subterm_closure(&ts).len();
    ensure!(s == 8, "case study closure {s}");
    let mut last = f64::NEG_INFINITY;
    let mut values = Vec::new();
    for q in [17u32, 33, 65] {
        let dr = DynamicRouting::new(&ts, q, false).unwrap();
        let rep = preimage_histogram(&dr, &ts, DEFAULT_BUDGET).unwrap();
        let gamma = rep.dispersion().value();
        let floor = 4.0 * log_base(((q - 1) / 8) as f64, q);
        ensure!(gamma >= floor - 1e-12, "q = {q}: γ {gamma} below {floor}");
        ensure!(gamma <= 4.0 + 1e-12, "q = {q}: γ {gamma} above the cap");
        ensure!(gamma > last, "q = {q}: γ {gamma} not increasing");
        last = gamma;
        values.push(format!("{gamma:.4}"));
    }
    // thresholds at ε = ρ/2 on the relay channel, met by formatted inputs
    let g1 = catalog::shared_relay();
    let (rho, k, s1) = (min_cut_value(&g1), g1.k(), subterm_closure(&g1).len());
    let eps = rho as f64 / 2.0;
    let th = thresholds(rho, k, s1, eps, None).unwrap();
    let n1 = th.n1.ok_or("n1 undefined")?.ceil() as u32;
    let n2 = th.n2.ok_or("n2 undefined")?.ceil() as u32;
    let img = formatted_image(&g1, &DynamicRouting::new(&g1, n1, false).unwrap(), DEFAULT_BUDGET).unwrap();
    ensure!(
        log_base(img.image as f64, n1) >= rho as f64 - eps,
        "q = {n1}: image {}",
        img.image
    );
    let one = formatted_image(&g1, &DynamicRouting::new(&g1, n2, true).unwrap(), DEFAULT_BUDGET).unwrap();
    ensure!(
        log_base(one.one_in_j as f64, n2) >= rho as f64 - eps,
        "q = {n2}: one-to-one {}",
        one.one_in_j
    );
    Ok(format!(
        "γ = {} at q = 17, 33, 65; thresholds {n1}, {n2} met",
        values.join(", ")
    ))
}

fn linear_insufficiency() -> Outcome {
    let gp = catalog::relay_skeleton(2);
    ensure!(min_cut_value(&gp) == 3, "min-cut {}", min_cut_value(&gp));
    let opts = SearchOptions::default();
    for p in [2u32, 3] {
        let res = exhaustive_search(
            &gp,
            &Algebra::prime_field(p).unwrap(),
            &FunctionClass::ScalarLinear,
            Objective::Dispersion,
            &opts,
        )
        .unwrap();
        let g = res.report.dispersion().value();
        ensure!(g <= 2.0 + 1e-12, "scalar-linear over F{p}: γ {g}");
    }
    let big = SearchOptions {
        budget: 1 << 28,
        ..opts
    };
    let res = exhaustive_search(
        &gp,
        &Algebra::vector_space(2).unwrap(),
        &FunctionClass::MatrixLinear,
        Objective::Dispersion,
        &big,
    )
    .unwrap();
    ensure!(res.space == 1 << 24, "matrix-linear space {}", res.space);
    ensure!(
        res.report.dispersion().value() <= 2.0 + 1e-12,
        "matrix-linear γ {}",
        res.report.dispersion().value()
    );
    let f4 = Algebra::f4();
    let ex12 = catalog::mirror_pairs();
    let rep = preimage_histogram(&mirror_pairs_solution(&f4).unwrap(), &ex12, DEFAULT_BUDGET).unwrap();
    ensure!(rep.image_size() == 16, "F4 witness image {}", rep.image_size());
    let res = exhaustive_search(
        &ex12,
        &f4,
        &FunctionClass::ScalarLinear,
        Objective::Dispersion,
        &opts,
    )
    .unwrap();
    ensure!(
        res.report.image_size() < 16,
        "scalar-linear over F4 reached {}",
        res.report.image_size()
    );
    Ok(format!(
        "linear γ ≤ 2 < 3 (matrix-linear over {} candidates); F4 witness γ = 2, linear max image {}",
        1 << 24,
        res.report.image_size()
    ))
}

fn multi_user() -> Outcome {
    let opts = SearchOptions::default();
    let butterfly = NetworkInstance::parse(BUTTERFLY_NET).unwrap();
    let mut xor = Interpretation::empty(2).unwrap();
    xor.define("f", 2, |a| (a[0] + a[1]) % 2).unwrap();
    let sol = solvable(&butterfly, 2, Some(&xor), &opts).unwrap();
    ensure!(
        sol.verdict == Verdict::Solvable,
        "butterfly: {:?} ({})",
        sol.verdict,
        sol.reason
    );
    ensure!(
        sol.users.iter().all(|u| u.decodable.values().all(|&d| d)),
        "butterfly decodability"
    );
    let d = sol.combined_dispersion.as_ref().ok_or("no combined dispersion")?;
    ensure!(d.log_value == Some(4.0), "butterfly combined {:?}", d);

    let storage = NetworkInstance::parse(STORAGE_NET).unwrap();
    let sol = solvable(&storage, 2, None, &opts).unwrap();
    ensure!(
        sol.verdict == Verdict::Unsolvable,
        "storage q = 2: {:?} ({})",
        sol.verdict,
        sol.reason
    );
    let mut lin = Interpretation::empty(3).unwrap();
    lin.define("f", 2, |a| (a[0] + a[1]) % 3).unwrap();
    lin.define("g", 2, |a| (a[0] + 2 * a[1]) % 3).unwrap();
    let sol = solvable(&storage, 3, Some(&lin), &opts).unwrap();
    ensure!(
        sol.verdict == Verdict::Solvable,
        "storage q = 3: {:?}",
        sol.verdict
    );
    let d = sol.combined_dispersion.as_ref().ok_or("no combined dispersion")?;
    ensure!(
        d.exact_count == 3u64.pow(10),
        "storage combined image {}",
        d.exact_count
    );
    Ok("butterfly solvable at 2, storage unsolvable at 2 and solvable at 3 with dispersion 10".into())
}

fn dynamic_networks() -> Outcome {
    let dn = DynamicNetwork::parse(NOISY_LINK_DYN).unwrap();
    let plain = max_satisfied_message_demands(&dn, 2, false, DEFAULT_BUDGET).unwrap();
    ensure!(plain.explored == 16, "explored {}", plain.explored);
    ensure!(
        plain.best_satisfied == 3,
        "non-clairvoyant best {}",
        plain.best_satisfied
    );
    let mut witness = Interpretation::empty(2).unwrap();
    witness.define("f_1", 2, |a| a[0]).unwrap();
    witness.define("f_2", 2, |a| a[1]).unwrap();
    let met = message_demands_satisfiable(&dn, &witness, true, DEFAULT_BUDGET).unwrap();
    ensure!(
        met.iter().all(|m| m.satisfied),
        "clairvoyant witness misses a demand"
    );
    let clair = clairvoyant_diversify(&dn);
    for (a, b) in dn.cells.iter().zip(&clair.cells) {
        ensure!(
            cell_min_cut(a) == cell_min_cut(b),
            "cell ({}, {}) min-cut changed",
            a.user,
            a.world
        );
    }
    for user in dn.users() {
        let demand = UtilityDemand {
            user: user.into(),
            threshold: 0.0,
            strict: false,
            coefficients: None,
        };
        let (u, v) = (
            asymptotic_max_utility(&dn, &demand).unwrap(),
            asymptotic_max_utility(&clair, &demand).unwrap(),
        );
        ensure!(u == v, "{user}: {u} vs {v}");
    }
    Ok("3 of 4 without clairvoyance, 4 of 4 with, min-cuts unchanged".into())
}

fn property_suites() -> Outcome {
    const N: usize = 128;
    let sets = samples(common::arb_term_set(4, 3), N);
    let mut checked = [0usize; 6];
    for (i, ts) in sets.iter().enumerate() {
        let q = 2 + (i % 2) as u32;
        let rep = preimage_histogram(&common::random_interp(ts, q, i as u64), ts, DEFAULT_BUDGET).unwrap();
        ensure!(
            rep.total_inputs() == (q as u128).pow(ts.k() as u32),
            "conservation on {ts}"
        );
        checked[0] += 1;
        let rho = min_cut_value(ts);
        ensure!(
            rep.one_image_size() <= rep.image_size() && rep.image_size() <= (q as u64).pow(rho as u32),
            "γ_one ≤ γ ≤ ρ on {ts}"
        );
        checked[1] += 1;
        let grid: Vec<f64> = (0..=12)
            .map(|j| rep.renyi(Alpha::ratio(j, 3)))
            .chain([rep.renyi(Alpha::INF)])
            .collect();
        ensure!(
            grid.windows(2).all(|w| w[1] <= w[0] + 1e-12),
            "H_α increases on {ts}"
        );
        checked[2] += 1;
        ensure!(
            rep.renyi(Alpha::ZERO) == rep.dispersion().value(),
            "H₀ ≠ γ on {ts}"
        );
        checked[3] += 1;
        let p = [2u32, 3, 5][i % 3];
        let lin =
            preimage_histogram(&common::random_scalar_linear(ts, p, i as u64), ts, DEFAULT_BUDGET).unwrap();
        let g = lin.dispersion().value();
        ensure!(
            lin.is_flat() && close(g, g.round(), 1e-9),
            "scalar-linear γ {g} on {ts}"
        );
        checked[4] += 1;
    }
    let pairs = samples((common::arb_term_set(3, 2), common::arb_term_set(3, 2)), N);
    for (i, (a, b)) in pairs.iter().enumerate() {
        let combined = combine_channels(&[a, b]).unwrap();
        let interp = common::random_interp(&combined, 2, i as u64);
        let image = |t: &TermSet| {
            preimage_histogram(&interp, t, DEFAULT_BUDGET)
                .unwrap()
                .image_size()
        };
        ensure!(
            image(&combined) == image(a) * image(b),
            "additivity fails on {a} and {b}"
        );
        checked[5] += 1;
    }
    ensure!(
        checked.iter().all(|&c| c >= 100),
        "too few instances: {checked:?}"
    );
    Ok(format!("instances per property {checked:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 12] = [
        ("min-cuts", min_cuts, Duration::from_secs(1)),
        (
            "term-cut / vertex-cut equivalence",
            term_cut_equivalence,
            Duration::from_secs(60),
        ),
        (
            "binary case study search",
            binary_case_study,
            Duration::from_secs(1),
        ),
        (
            "ternary case study search",
            ternary_case_study,
            Duration::from_secs(120),
        ),
        (
            "partition counts of the quadratic coding",
            partition_counts,
            Duration::from_secs(30),
        ),
        ("large-alphabet limits", limit_behavior, Duration::from_secs(1)),
        ("routing on diversified sets", routing, Duration::from_secs(10)),
        ("dynamic routing trend", dynamic_routing, Duration::from_secs(120)),
        (
            "linear insufficiency",
            linear_insufficiency,
            Duration::from_secs(60),
        ),
        ("multi-user solvability", multi_user, Duration::from_secs(120)),
        (
            "possible-worlds networks",
            dynamic_networks,
            Duration::from_secs(5),
        ),
        ("property suites", property_suites, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({elapsed:.2?}): {why}", i + 1);
            }
        }
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
