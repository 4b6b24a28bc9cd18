//! Small helpers shared by the CSV writers and readers. All numeric output
//! uses 17 significant decimal digits so that every value round-trips
//! bit-exactly through its text form.

use crate::error::{Error, Result};

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn parse_f64(token: &str, line: usize) -> Result<f64> {
    token.trim().parse::<f64>().map_err(|_| Error::Config {
        line,
        message: format!("expected a number, got {token:?}"),
    })
}

/// Parse `key=value` pairs from a `# key=v key=v ...` metadata line.
pub(crate) fn parse_meta(line: &str) -> Vec<(String, String)> {
    line.trim_start_matches('#')
        .split_whitespace()
        .filter_map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
        })
        .collect()
}

pub(crate) fn meta_value(meta: &[(String, String)], key: &str, line: usize) -> Result<f64> {
    meta.iter()
        .find(|(k, _)| k == key)
        .ok_or_else(|| Error::Config {
            line,
            message: format!("metadata line is missing {key}"),
        })
        .and_then(|(_, v)| parse_f64(v, line))
}
