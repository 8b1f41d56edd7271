//! Subcommand implementations. Each builds a JSON report for stdout.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use termnet::algebra::{exhaustive_search, sampled_search, Algebra, FunctionClass, SearchOptions};
use termnet::catalog;
use termnet::dynamic::{
    asymptotic_max_utility, cell_min_cut, clairvoyant_diversify, dispersion_matrix, global_reduction,
    lift_to_clairvoyant, max_satisfied_message_demands, message_demands_satisfiable, utility_value,
};
use termnet::interp::{preimage_histogram, ConditionMode, InterpError};
use termnet::mincut::min_cut_value;
use termnet::multiuser::{combined_term_set, network_to_user_channels, solvable};
use termnet::routing::{
    build_one_to_one_routing, build_routing, formatted_image, DynamicRouting, PathAssignment,
};
use termnet::{
    build_dag, diversify, min_cut, min_cut_wrt, subterm_closure, verify_certificate, Alpha, EvaluationReport,
    Evaluator, Interpretation, Semantics, TermSet,
};

use crate::error::CliError;
use crate::input::{self, sha256_hex, InputDigest};
use crate::{
    AnalyzeArgs, Command, ConvertArgs, ExamplesArgs, MincutArgs, RouteArgs, RouteMode, SearchArgs, Settings,
    SolveArgs, SweepArgs, WorldsArgs,
};

#[derive(Serialize)]
struct Report<'a> {
    command: &'a [String],
    inputs: Vec<InputDigest>,
    result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_ms: Option<u64>,
}

pub fn run(cmd: &Command, settings: &Settings) -> Result<(), CliError> {
    let start = Instant::now();
    let mut inputs = Vec::new();
    let result = match cmd {
        Command::Mincut(a) => mincut(a, &mut inputs)?,
        Command::Analyze(a) => analyze(a, settings, &mut inputs)?,
        Command::Route(a) => route(a, settings, &mut inputs)?,
        Command::Search(a) => search(a, settings, &mut inputs)?,
        Command::Convert(a) => convert(a, &mut inputs)?,
        Command::Solve(a) => solve(a, settings, &mut inputs)?,
        Command::Worlds(a) => worlds(a, settings, &mut inputs)?,
        // CSV and listings go straight to their destination
        Command::Sweep(a) => return sweep(a, settings),
        Command::Examples(a) => match examples(a)? {
            Some(v) => v,
            None => return Ok(()),
        },
    };
    let report = Report {
        command: &settings.echo,
        inputs,
        result,
        timing_ms: settings.timing.then(|| start.elapsed().as_millis() as u64),
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::parse(e.to_string()))?;
    emit(&format!("{text}\n"))
}

/// Write to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn variable_positions(ts: &TermSet, names: &[String]) -> Result<Vec<usize>, CliError> {
    names
        .iter()
        .map(|v| {
            ts.signature()
                .variable_index(v)
                .ok_or_else(|| CliError::precondition(format!("unknown variable `{v}`")))
        })
        .collect()
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}

fn mincut(a: &MincutArgs, inputs: &mut Vec<InputDigest>) -> Result<Value, CliError> {
    let ts = input::term_set(&a.termset, inputs)?;
    let keep = a.require.clone().unwrap_or_else(|| ts.required().to_vec());
    let (dag, cert) = if keep.len() == ts.k() && !ts.variables().is_empty() {
        let dag = build_dag(&ts);
        let cert = min_cut(&dag);
        (dag, cert)
    } else {
        min_cut_wrt(&ts, &keep)?
    };
    let valid = verify_certificate(&dag, &cert).is_valid();
    let show = |v: &usize| dag.vertex(*v).to_string();
    Ok(json!({
        "k": ts.k(),
        "r": ts.r(),
        "subterms": dag.vertex_count(),
        "required": keep,
        "value": cert.value,
        "cut": cert.cut.iter().map(show).collect::<Vec<_>>(),
        "paths": cert.paths.iter().map(|p| p.iter().map(show).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "certificate_valid": valid,
    }))
}

fn report_value(rep: &EvaluationReport) -> Value {
    json!({
        "q": rep.q,
        "k": rep.k,
        "r": rep.r,
        "histogram": rep.histogram,
        "image_size": rep.image_size(),
        "one_image_size": rep.one_image_size(),
        "dispersion": rep.dispersion(),
        "one_to_one_dispersion": rep.one_to_one_dispersion(),
        "flat": rep.is_flat(),
    })
}

fn analyze(a: &AnalyzeArgs, s: &Settings, inputs: &mut Vec<InputDigest>) -> Result<Value, CliError> {
    let ts = input::term_set(&a.termset, inputs)?;
    let interp = input::interpretation(&a.interp, inputs)?;
    let eval = Evaluator::new(&ts, &interp)?.with_budget(s.budget);
    let rep = eval.histogram()?;
    let mut out = report_value(&rep);
    let alphas = if a.alpha.is_empty() {
        vec![Alpha::ZERO, Alpha::ONE, Alpha::integer(2), Alpha::INF]
    } else {
        a.alpha.clone()
    };
    out["renyi"] = alphas
        .iter()
        .map(|&al| json!({ "alpha": al, "value": rep.renyi(al) }))
        .collect();
    out["min_cut"] = json!(min_cut_value(&ts));
    if let Some(keep) = &a.condition {
        let pos = variable_positions(&ts, keep)?;
        let cd = eval.conditional_dispersion(&pos)?;
        out["conditional"] = json!({ "variables": keep, "dispersion": cd });
    }
    Ok(out)
}

fn route(a: &RouteArgs, s: &Settings, inputs: &mut Vec<InputDigest>) -> Result<Value, CliError> {
    let ts = input::term_set(&a.termset, inputs)?;
    let ts = if a.diversify { diversify(&ts) } else { ts };
    let mut out = json!({
        "mode": format!("{:?}", a.mode).to_lowercase(),
        "q": a.alphabet,
        "min_cut": min_cut_value(&ts),
        "subterms": subterm_closure(&ts).len(),
    });
    let tables = match a.mode {
        RouteMode::Routing | RouteMode::One2one => {
            let pa = PathAssignment::compute(&ts);
            let interp = if a.mode == RouteMode::Routing {
                build_routing(&ts, &pa, a.alphabet)?
            } else {
                build_one_to_one_routing(&ts, &pa, a.alphabet)?
            };
            out["report"] = report_value(&preimage_histogram(&interp, &ts, s.budget)?);
            Some(interp)
        }
        RouteMode::Dynamic | RouteMode::DynamicOne2one => {
            let dr = DynamicRouting::new(&ts, a.alphabet, a.mode == RouteMode::DynamicOne2one)?;
            out["alphabet"] = to_value(dr.alphabet());
            match preimage_histogram(&dr, &ts, s.budget) {
                Ok(rep) => out["report"] = report_value(&rep),
                Err(InterpError::BudgetExceeded { needed, .. }) => {
                    log::info!("{needed} inputs exceed the budget; enumerating formatted inputs only");
                    out["formatted"] = to_value(&formatted_image(&ts, &dr, s.budget)?);
                }
                Err(e) => return Err(e.into()),
            }
            match dr.to_interpretation() {
                Ok(i) => Some(i),
                Err(e) if a.out.is_none() => {
                    log::info!("tables not materialized: {e}");
                    None
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    if let Some(interp) = tables {
        let text = interp.to_json();
        out["tables_sha256"] = json!(sha256_hex(text.as_bytes()));
        if let Some(path) = &a.out {
            write_file(path, &text)?;
        }
    }
    Ok(out)
}

fn search_algebra(a: &SearchArgs, inputs: &mut Vec<InputDigest>) -> Result<Algebra, CliError> {
    if let Some(name) = &a.algebra {
        return input::algebra(name, inputs);
    }
    let q = a.alphabet.expect("clap requires one of the two");
    Ok(match a.class {
        FunctionClass::ScalarLinear => Algebra::prime_field(q)?,
        FunctionClass::MatrixLinear => {
            return Err(CliError::usage("matrix-linear search needs --algebra V<m>"));
        }
        FunctionClass::GroupMult => Algebra::cyclic_group(q)?,
        _ => Algebra::modular_ring(q)?,
    })
}

fn search(a: &SearchArgs, s: &Settings, inputs: &mut Vec<InputDigest>) -> Result<Value, CliError> {
    let ts = input::term_set(&a.termset, inputs)?;
    let alg = search_algebra(a, inputs)?;
    let opts = SearchOptions {
        budget: s.budget,
        linear_shortcut: !a.no_shortcut,
    };
    let res = match a.samples {
        Some(n) => sampled_search(&ts, &alg, &a.class, a.objective, n, s.seed, &opts)?,
        None => exhaustive_search(&ts, &alg, &a.class, a.objective, &opts)?,
    };
    let text = res.best_tables.to_json();
    let mut out = to_value(&res);
    out["min_cut"] = json!(min_cut_value(&ts));
    out["best_tables_sha256"] = json!(sha256_hex(text.as_bytes()));
    if a.samples.is_some() {
        out["seed"] = json!(s.seed);
    }
    if let Some(path) = &a.out {
        write_file(path, &text)?;
    }
    Ok(out)
}

fn convert(a: &ConvertArgs, inputs: &mut Vec<InputDigest>) -> Result<Value, CliError> {
    let net = input::network(&a.network, inputs)?;
    let channels = network_to_user_channels(&net)?;
    let combined = combined_term_set(&channels)?;
    let mut users = Vec::new();
    for c in &channels {
        let cut = min_cut_wrt(&c.terms, c.terms.required())?.1.value;
        users.push(json!({
            "user": c.user,
            "terms": c.terms.to_string(),
            "trivial": c.trivial,
            "min_cut": cut,
        }));
    }
    let mut written = Vec::new();
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir)?;
        for c in &channels {
            let path = dir.join(format!("{}.ts", c.user));
            write_file(&path, &c.terms.to_string())?;
            written.push(path.display().to_string());
        }
        let path = dir.join("combined.ts");
        write_file(&path, &combined.to_string())?;
        written.push(path.display().to_string());
    }
    Ok(json!({
        "users": users,
        "combined": combined.to_string(),
        "combined_min_cut": min_cut_value(&combined),
        "written": written,
    }))
}

fn solve(a: &SolveArgs, s: &Settings, inputs: &mut Vec<InputDigest>) -> Result<Value, CliError> {
    let net = input::network(&a.network, inputs)?;
    let witness = a
        .witness
        .as_deref()
        .map(|w| input::interpretation(w, inputs))
        .transpose()?;
    let opts = SearchOptions {
        budget: s.budget,
        linear_shortcut: true,
    };
    let res = solvable(&net, a.alphabet, witness.as_ref(), &opts)?;
    let mut out = to_value(&res);
    if let Some(w) = &res.witness {
        out["witness_sha256"] = json!(sha256_hex(w.to_json().as_bytes()));
    }
    Ok(out)
}

fn worlds(a: &WorldsArgs, s: &Settings, inputs: &mut Vec<InputDigest>) -> Result<Value, CliError> {
    let dn = input::dynamic_network(&a.network, inputs)?;
    let net = if a.clairvoyant {
        clairvoyant_diversify(&dn)
    } else {
        dn.clone()
    };
    let cells: Vec<Value> = net
        .cells
        .iter()
        .map(|c| json!({ "user": c.user, "world": c.world, "slot": c.slot, "min_cut": cell_min_cut(c) }))
        .collect();
    let mut utilities = Vec::new();
    for d in &net.utilities {
        utilities.push(json!({
            "user": d.user,
            "threshold": d.threshold,
            "strict": d.strict,
            "asymptotic_max": asymptotic_max_utility(&net, d)?,
        }));
    }
    let reduced = global_reduction(&net)?;
    let mut out = json!({
        "clairvoyant": a.clairvoyant,
        "cells": cells,
        "utilities": utilities,
        "global_reduction": { "terms": reduced.to_string(), "min_cut": min_cut_value(&reduced) },
    });
    if let Some(name) = &a.interp {
        let interp = input::interpretation(name, inputs)?;
        let interp = if a.clairvoyant {
            lift_to_clairvoyant(&dn, &interp)?
        } else {
            interp
        };
        let matrix = dispersion_matrix(&net, &interp, s.budget)?;
        for (i, d) in net.utilities.iter().enumerate() {
            let v = utility_value(&net, d, &matrix)?;
            out["utilities"][i]["value"] = json!(v);
            out["utilities"][i]["met"] = json!(d.is_met(v));
        }
        out["dispersion"] = to_value(&matrix.cells);
        out["messages"] = to_value(&message_demands_satisfiable(
            &dn,
            &interp,
            a.clairvoyant,
            s.budget,
        )?);
    }
    if let Some(q) = a.alphabet {
        out["message_search"] = to_value(&max_satisfied_message_demands(&dn, q, a.clairvoyant, s.budget)?);
    }
    Ok(out)
}

/// `start:stop:step` as exact rationals, inclusive of `stop`.
fn alpha_grid(spec: &str) -> Result<Vec<Alpha>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err(CliError::usage(format!(
            "alpha grid `{spec}` is not start:stop:step"
        )));
    };
    let rational = |t: &str| -> Result<(u128, u128), CliError> {
        match t.parse::<Alpha>().map_err(|e| CliError::usage(e.to_string()))? {
            Alpha::Finite { num, den } => Ok((num as u128, den as u128)),
            Alpha::Infinity => Err(CliError::usage("alpha grid bounds must be finite")),
        }
    };
    let (a, b, c) = (rational(start)?, rational(stop)?, rational(step)?);
    if c.0 == 0 {
        return Err(CliError::usage("alpha grid step must be positive"));
    }
    let den = a.1 * b.1 * c.1;
    let (lo, hi, dx) = (a.0 * den / a.1, b.0 * den / b.1, c.0 * den / c.1);
    let mut out = Vec::new();
    let mut x = lo;
    while x <= hi {
        let num = u64::try_from(x).map_err(|_| CliError::usage("alpha grid values too large"))?;
        let d = u64::try_from(den).map_err(|_| CliError::usage("alpha grid denominators too large"))?;
        out.push(Alpha::ratio(num, d));
        x += dx;
    }
    Ok(out)
}

fn dispersion_of<S: Semantics + ?Sized>(
    sem: &S,
    ts: &TermSet,
    one_to_one: bool,
    mode: ConditionMode,
    budget: u64,
) -> Result<f64, CliError> {
    let eval = Evaluator::new(ts, sem)?.with_budget(budget);
    if !ts.requires_all() {
        let pos = variable_positions(ts, ts.required())?;
        return Ok(eval.conditional_dispersion(&pos)?.value(mode));
    }
    let rep = eval.histogram()?;
    Ok(if one_to_one {
        rep.one_to_one_dispersion().value()
    } else {
        rep.dispersion().value()
    })
}

fn sweep(a: &SweepArgs, s: &Settings) -> Result<(), CliError> {
    let mut inputs = Vec::new();
    let ts = input::term_set(&a.termset, &mut inputs)?;
    let mut csv = String::new();
    if a.alphabets.is_empty() {
        let Some(name) = &a.interp else {
            return Err(CliError::usage("sweep needs --interp or --alphabets"));
        };
        let interp: Interpretation = input::interpretation(name, &mut inputs)?;
        let alphas = match &a.alpha_grid {
            Some(g) => alpha_grid(g)?,
            None if !a.alphas.is_empty() => a.alphas.clone(),
            None => return Err(CliError::usage("sweep needs --alphas or --alpha-grid")),
        };
        let rep = preimage_histogram(&interp, &ts, s.budget)?;
        csv.push_str("alpha,H_alpha\n");
        for al in alphas {
            csv.push_str(&format!("{},{}\n", al.to_f64(), rep.renyi(al)));
        }
    } else {
        let one_to_one = matches!(a.mode, RouteMode::One2one | RouteMode::DynamicOne2one);
        let mode = a.condition_mode.into();
        let div = diversify(&ts);
        let pa = PathAssignment::compute(&div);
        csv.push_str("q,gamma\n");
        for &q in &a.alphabets {
            let gamma = match a.mode {
                RouteMode::Routing => {
                    dispersion_of(&build_routing(&div, &pa, q)?, &div, false, mode, s.budget)?
                }
                RouteMode::One2one => dispersion_of(
                    &build_one_to_one_routing(&div, &pa, q)?,
                    &div,
                    true,
                    mode,
                    s.budget,
                )?,
                RouteMode::Dynamic | RouteMode::DynamicOne2one => {
                    let dr = DynamicRouting::new(&ts, q, one_to_one)?;
                    dispersion_of(&dr, &ts, one_to_one, mode, s.budget)?
                }
            };
            csv.push_str(&format!("{q},{gamma}\n"));
        }
    }
    for d in &inputs {
        log::info!("{} {} sha256 {}", d.role, d.source, d.sha256);
    }
    match &a.out {
        Some(path) => write_file(path, &csv),
        None => emit(&csv),
    }
}

fn examples(a: &ExamplesArgs) -> Result<Option<Value>, CliError> {
    let Some(name) = &a.name else {
        emit(
            &catalog::example_names()
                .iter()
                .map(|n| format!("{n}\n"))
                .collect::<String>(),
        )?;
        return Ok(None);
    };
    let (file, text) = catalog::example_file(name)
        .or_else(|| {
            // `quadratic5` for `quadratic:5`
            let split = name.trim_end_matches(|c: char| c.is_ascii_digit()).len();
            (split > 0 && split < name.len())
                .then(|| catalog::example_file(&format!("{}:{}", &name[..split], &name[split..])))
                .flatten()
        })
        .ok_or_else(|| CliError::usage(format!("unknown example `{name}`")))?;
    if a.stdout {
        emit(&text)?;
        return Ok(None);
    }
    std::fs::create_dir_all(&a.out_dir)?;
    let path = a.out_dir.join(&file);
    write_file(&path, &text)?;
    Ok(Some(
        json!({ "written": path.display().to_string(), "sha256": sha256_hex(text.as_bytes()) }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_exact_and_inclusive() {
        let g = alpha_grid("0:4:0.25").unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g[2], Alpha::ratio(1, 2));
        assert_eq!(*g.last().unwrap(), Alpha::integer(4));
        assert_eq!(alpha_grid("1/3:1:1/3").unwrap().len(), 3);
        assert!(alpha_grid("0:1:0").is_err());
        assert!(alpha_grid("0:1").is_err());
    }
}
