//! Flat `key = value` documents.
//!
//! One entry per line, `#` starts a comment, keys may contain dots
//! (`scan.omega_si = 0.05:13:0.05`). Values are kept as raw strings and
//! parsed by the consumer so that error messages can name the field.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type KvDoc = BTreeMap<String, String>;

pub fn parse(text: &str) -> Result<KvDoc> {
    let mut doc = KvDoc::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(format!("line {}", lineno + 1), "expected `key = value`")
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::config(format!("line {}", lineno + 1), "empty key"));
        }
        let value = value.trim().trim_matches('"').to_string();
        if doc.insert(key.to_string(), value).is_some() {
            return Err(Error::config(key, "duplicate key"));
        }
    }
    Ok(doc)
}

pub fn render(doc: &KvDoc) -> String {
    let mut out = String::new();
    for (k, v) in doc {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

pub fn get_f64(doc: &KvDoc, key: &str) -> Result<Option<f64>> {
    doc.get(key)
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::config(key, format!("not a number: `{v}`")))
        })
        .transpose()
}

pub fn get_usize(doc: &KvDoc, key: &str) -> Result<Option<usize>> {
    doc.get(key)
        .map(|v| {
            v.parse::<usize>()
                .map_err(|_| Error::config(key, format!("not a non-negative integer: `{v}`")))
        })
        .transpose()
}

pub fn get_u64(doc: &KvDoc, key: &str) -> Result<Option<u64>> {
    doc.get(key)
        .map(|v| {
            v.parse::<u64>()
                .map_err(|_| Error::config(key, format!("not a non-negative integer: `{v}`")))
        })
        .transpose()
}

pub fn get_bool(doc: &KvDoc, key: &str) -> Result<Option<bool>> {
    doc.get(key)
        .map(|v| match v.as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(Error::config(key, format!("not a boolean: `{v}`"))),
        })
        .transpose()
}

/// Parses `start:stop:step` (inclusive of `stop` up to rounding) or a
/// comma-separated list. Returns an error for empty grids.
pub fn parse_grid(key: &str, spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::config(key, "range must be `start:stop:step`"));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(key, format!("not a number: `{s}`")))
        };
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) {
            return Err(Error::config(key, "step must be positive"));
        }
        if stop < start {
            return Err(Error::config(key, "empty grid: stop < start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + i as f64 * step).collect()
    } else {
        spec.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config(key, format!("not a number: `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() {
        return Err(Error::config(key, "empty grid"));
    }
    Ok(grid)
}
