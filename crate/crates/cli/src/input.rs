//! Loading inputs from files or built-in examples, with content digests.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use termnet::algebra::Algebra;
use termnet::catalog;
use termnet::dynamic::DynamicNetwork;
use termnet::multiuser::NetworkInstance;
use termnet::{parse_term_set, Interpretation, TermSet};

use crate::error::CliError;

/// Where an input came from and the SHA-256 of its text.
#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub role: &'static str,
    pub source: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    hex::encode(&digest[..])
}

/// Read `arg` as a file if it exists, else look it up with `builtin`.
fn load(
    role: &'static str,
    arg: &str,
    builtin: impl Fn(&str) -> Option<String>,
    digests: &mut Vec<InputDigest>,
) -> Result<String, CliError> {
    let (source, text) = if Path::new(arg).exists() {
        let text = std::fs::read_to_string(arg).map_err(|e| CliError::parse(format!("{arg}: {e}")))?;
        (arg.to_string(), text)
    } else if let Some(text) = builtin(arg) {
        (format!("builtin:{arg}"), text)
    } else {
        return Err(CliError::parse(format!("{arg}: no such file or built-in {role}")));
    };
    digests.push(InputDigest {
        role,
        source,
        sha256: sha256_hex(text.as_bytes()),
    });
    Ok(text)
}

/// `quadratic3` is accepted for `quadratic:3`.
fn with_parameter(name: &str) -> String {
    if name.contains(':') {
        return name.to_string();
    }
    let split = name.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    if split == 0 || split == name.len() || name[..split].ends_with('_') {
        return name.to_string();
    }
    format!("{}:{}", &name[..split], &name[split..])
}

pub fn term_set(arg: &str, digests: &mut Vec<InputDigest>) -> Result<TermSet, CliError> {
    let text = load(
        "term set",
        arg,
        |n| {
            catalog::term_set(n)
                .or_else(|| catalog::term_set(&with_parameter(n)))
                .map(|t| t.to_string())
        },
        digests,
    )?;
    parse_term_set(&text).map_err(|e| CliError::parse(format!("{arg}: {e}")))
}

pub fn interpretation(arg: &str, digests: &mut Vec<InputDigest>) -> Result<Interpretation, CliError> {
    let text = load(
        "interpretation",
        arg,
        |n| {
            let lookup = |n: &str| catalog::interpretation(n).and_then(Result::ok);
            lookup(n)
                .or_else(|| lookup(&with_parameter(n)))
                .map(|i| i.to_json())
        },
        digests,
    )?;
    Interpretation::from_json(&text).map_err(|e| CliError::parse(format!("{arg}: {e}")))
}

pub fn network(arg: &str, digests: &mut Vec<InputDigest>) -> Result<NetworkInstance, CliError> {
    let text = load(
        "network",
        arg,
        |n| match n {
            "butterfly" => Some(catalog::BUTTERFLY_NET.to_string()),
            "storage" => Some(catalog::STORAGE_NET.to_string()),
            _ => None,
        },
        digests,
    )?;
    NetworkInstance::parse(&text).map_err(|e| CliError::parse(format!("{arg}: {e}")))
}

pub fn dynamic_network(arg: &str, digests: &mut Vec<InputDigest>) -> Result<DynamicNetwork, CliError> {
    let text = load(
        "dynamic network",
        arg,
        |n| (n == "noisy_link").then(|| catalog::NOISY_LINK_DYN.to_string()),
        digests,
    )?;
    DynamicNetwork::parse(&text).map_err(|e| CliError::parse(format!("{arg}: {e}")))
}

/// A JSON algebra file, or a built-in name such as `F5`, `F4`, `Z6`, `V2`.
pub fn algebra(arg: &str, digests: &mut Vec<InputDigest>) -> Result<Algebra, CliError> {
    if Path::new(arg).exists() {
        let text = load("algebra", arg, |_| None, digests)?;
        return Ok(Algebra::from_json(&text)?);
    }
    let alg = Algebra::builtin(arg)?;
    digests.push(InputDigest {
        role: "algebra",
        source: format!("builtin:{arg}"),
        sha256: sha256_hex(arg.as_bytes()),
    });
    Ok(alg)
}
