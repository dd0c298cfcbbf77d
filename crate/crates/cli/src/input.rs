use std::io::Read;
use std::path::{Path, PathBuf};

use cec_core::rational::{self, Rational};
use cec_core::Dist;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

/// A distribution written either as `{"weights": [...]}` or as a bare list
/// of `"num/den"` strings.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DistInput {
    List(#[serde(with = "rational::serde_rational_vec")] Vec<Rational>),
    Full(Dist),
}

impl DistInput {
    fn into_dist(self) -> cec_core::Result<Dist> {
        match self {
            DistInput::List(w) => Dist::new(w),
            DistInput::Full(d) => Ok(d),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairInput {
    p: DistInput,
    pprime: DistInput,
}

/// Reads a file, or stdin for `None` and `-`.
pub fn read_source(path: Option<&Path>) -> Result<(String, String), CliError> {
    match path {
        Some(p) if p != Path::new("-") => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
            Ok((text, p.display().to_string()))
        }
        _ => {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| CliError::usage(format!("stdin: {e}")))?;
            Ok((text, "stdin".into()))
        }
    }
}

/// Parses `text` as `T`, reporting line and column on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, source: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::usage(format!("{source}: malformed input: {e}")))
}

/// Parses `T` either bare or as the first value stored under `key` at any
/// depth of a larger report.
pub fn parse_wrapped<T: DeserializeOwned>(
    text: &str,
    source: &str,
    key: &str,
) -> Result<T, CliError> {
    let err = match serde_json::from_str::<T>(text) {
        Ok(v) => return Ok(v),
        Err(e) => e,
    };
    if let Ok(value) = serde_json::from_str::<Value>(text) {
        if let Some(inner) = find_key(&value, key) {
            return serde_json::from_value(inner.clone())
                .map_err(|e| CliError::usage(format!("{source}: malformed \"{key}\": {e}")));
        }
    }
    Err(CliError::usage(format!("{source}: malformed input: {err}")))
}

fn find_key<'a>(value: &'a Value, key: &str) -> Option<&'a Value> {
    let Value::Object(map) = value else {
        return None;
    };
    map.get(key)
        .or_else(|| map.values().find_map(|v| find_key(v, key)))
}

pub fn read_json<T: DeserializeOwned>(path: Option<&PathBuf>) -> Result<T, CliError> {
    let (text, source) = read_source(path.map(PathBuf::as_path))?;
    parse_json(&text, &source)
}

/// A single distribution from `--p` or from JSON input.
pub fn read_dist(inline: Option<&str>, path: Option<&PathBuf>) -> Result<Dist, CliError> {
    if let Some(list) = inline {
        return Ok(Dist::parse_list(list)?);
    }
    let input: DistInput = read_json(path)?;
    Ok(input.into_dist()?)
}

/// A pair `(p, p')` from `--p/--pprime` or from `{"p": .., "pprime": ..}`.
pub fn read_pair(
    p: Option<&str>,
    pprime: Option<&str>,
    path: Option<&PathBuf>,
) -> Result<(Dist, Dist), CliError> {
    match (p, pprime) {
        (Some(p), Some(q)) => Ok((Dist::parse_list(p)?, Dist::parse_list(q)?)),
        (None, None) => {
            let input: PairInput = read_json(path)?;
            Ok((input.p.into_dist()?, input.pprime.into_dist()?))
        }
        _ => Err(CliError::usage("--p and --pprime must be given together")),
    }
}
