//! CSV output: header row, `,` separator, `\n` line endings, no quoting.
//! Floats use the shortest representation that parses back to the same
//! value, so `parse(write(r)) == r` and identical runs give identical bytes.

use std::path::Path;

use csv::{QuoteStyle, ReaderBuilder, Terminator, WriterBuilder};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use stcomb::combining::Scheme;
use stcomb::relaysim::{BitBudget, RelayScheme};
use stcomb::subnyquist::Receiver;

use crate::error::CliError;

/// A CSV row type with a fixed column list.
pub trait Record: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
}

pub fn to_csv_string<T: Record>(records: &[T]) -> Result<String, CliError> {
    let mut w = WriterBuilder::new()
        .has_headers(false)
        .quote_style(QuoteStyle::Never)
        .terminator(Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Csv(e.to_string());
    w.write_record(T::HEADER).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Csv(e.to_string()))?;
    let text = String::from_utf8(bytes).map_err(|e| CliError::Csv(e.to_string()))?;
    // Unquoted output is only well formed when no value contains a
    // separator, quote or line break.
    let want = T::HEADER.len() - 1;
    if let Some((i, line)) = text
        .lines()
        .enumerate()
        .find(|(_, l)| l.matches(',').count() != want || l.contains('"') || l.contains('\r'))
    {
        return Err(CliError::Csv(format!("row {i} would need quoting: {line}")));
    }
    Ok(text)
}

pub fn write_csv<T: Record>(records: &[T], path: &Path) -> Result<(), CliError> {
    let text = to_csv_string(records)?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Parses text written by [`to_csv_string`]; the header must match exactly.
pub fn parse_csv<T: Record>(text: &str) -> Result<Vec<T>, CliError> {
    let mut r = ReaderBuilder::new()
        .has_headers(true)
        .quoting(false)
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| CliError::Csv(e.to_string()))?;
    if header.iter().ne(T::HEADER.iter().copied()) {
        return Err(CliError::Csv(format!(
            "header {:?} does not match {:?}",
            header.iter().collect::<Vec<_>>(),
            T::HEADER
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| CliError::Csv(e.to_string())))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    Ok,
    /// Fewer than the minimum number of events behind the estimate.
    LowEvents,
}

impl Flag {
    pub fn from_low(low: bool) -> Self {
        if low {
            Flag::LowEvents
        } else {
            Flag::Ok
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageRow {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub outage: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: u64,
    pub flag: Flag,
}

impl Record for OutageRow {
    const HEADER: &'static [&'static str] = &["snr_db", "scheme", "outage", "ci_lo", "ci_hi", "trials", "flag"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub value: f64,
    pub cdf: f64,
}

impl Record for CdfRow {
    const HEADER: &'static [&'static str] = &["snr_db", "scheme", "value", "cdf"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerRow {
    pub snr_db: f64,
    pub scheme: RelayScheme,
    pub bits: BitBudget,
    pub ser: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub errors: u64,
    pub symbols: u64,
}

impl Record for SerRow {
    const HEADER: &'static [&'static str] = &["snr_db", "scheme", "bits", "ser", "ci_lo", "ci_hi", "errors", "symbols"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverRow {
    pub snr_db: f64,
    pub receiver: Receiver,
    pub ser: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub errors: u64,
    pub symbols: u64,
    pub samples_per_symbol: f64,
}

impl Record for ReceiverRow {
    const HEADER: &'static [&'static str] = &[
        "snr_db",
        "receiver",
        "ser",
        "ci_lo",
        "ci_hi",
        "errors",
        "symbols",
        "samples_per_symbol",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseRow {
    pub pulse: usize,
    pub tap: usize,
    pub re: f64,
    pub im: f64,
    pub magnitude: f64,
}

impl Record for PulseRow {
    const HEADER: &'static [&'static str] = &["pulse", "tap", "re", "im", "magnitude"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    /// `predicted-exp4`, `predicted-exp2`, `universal-vs-opt` or
    /// `half-power-vs-opt`.
    pub series: String,
    pub snr_db: f64,
    pub ratio: f64,
    pub lo: f64,
    pub hi: f64,
    pub flag: Flag,
}

impl Record for RatioRow {
    const HEADER: &'static [&'static str] = &["series", "snr_db", "ratio", "lo", "hi", "flag"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub suite: String,
    pub check: String,
    pub passed: bool,
    pub value: f64,
}

impl Record for CheckRow {
    const HEADER: &'static [&'static str] = &["suite", "check", "passed", "value"];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_for_empty_input() {
        assert_eq!(
            to_csv_string::<OutageRow>(&[]).unwrap(),
            "snr_db,scheme,outage,ci_lo,ci_hi,trials,flag\n"
        );
    }

    #[test]
    fn rejects_values_that_need_quoting() {
        let row = CheckRow {
            suite: "a,b".into(),
            check: "c".into(),
            passed: true,
            value: 1.0,
        };
        assert!(to_csv_string(&[row]).is_err());
    }

    #[test]
    fn header_mismatch_is_an_error() {
        assert!(parse_csv::<CdfRow>("snr_db,scheme,value\n").is_err());
    }
}
