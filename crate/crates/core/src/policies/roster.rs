use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::StermanParams;
use crate::{Error, Result};

pub const DEFAULT_ROSTER_CSV: &str = include_str!("../../data/roster_general.csv");

const HEADER: [&str; 5] = ["name", "theta", "alpha", "beta", "s_prime"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub name: String,
    pub params: StermanParams,
}

pub fn load_roster(path: &Path) -> Result<Vec<RosterEntry>> {
    let text = std::fs::read_to_string(path)?;
    parse_roster(&text, path)
}

/// The shipped roster: the single general-team row.
pub fn default_roster() -> Vec<RosterEntry> {
    parse_roster(DEFAULT_ROSTER_CSV, Path::new("<default roster>"))
        .expect("bundled roster parses")
}

/// Parses roster CSV text; `origin` only labels error messages.
pub fn parse_roster(text: &str, origin: &Path) -> Result<Vec<RosterEntry>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyRoster);
    }
    let fail = |line: u64, field: &str, reason: String| Error::Roster {
        path: PathBuf::from(origin),
        line: line as usize,
        field: field.to_string(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(fail(
            1,
            "header",
            format!("expected `{}`, got `{}`", HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != HEADER.len() {
            return Err(fail(line, "row", format!("expected 5 fields, got {}", record.len())));
        }
        let mut values = [0.0; 4];
        for (k, field) in HEADER[1..].iter().enumerate() {
            let raw = &record[k + 1];
            values[k] = raw
                .parse::<f64>()
                .map_err(|_| fail(line, field, format!("`{raw}` is not a number")))?;
        }
        let params = StermanParams::from_array(values);
        if let Err(Error::InvalidParameter { name, reason }) = params.validate() {
            return Err(fail(line, name, reason));
        }
        out.push(RosterEntry {
            name: record[0].to_string(),
            params,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyRoster);
    }
    Ok(out)
}
