//! Domain trust table: continuous [0, 1] quality ratings for web domains.
//!
//! Lookups normalize the host (lowercase, strip a leading `www.`) and fall
//! back to shorter suffixes of the host before returning the default score
//! of 0.0.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_TRUST: f64 = 0.0;

#[derive(Debug, Clone, Default)]
pub struct TrustTable {
    scores: BTreeMap<String, f64>,
}

pub fn normalize_domain(domain: &str) -> String {
    let lower = domain.trim().to_lowercase();
    lower.strip_prefix("www.").unwrap_or(&lower).to_string()
}

#[derive(Debug)]
pub struct TrustLoadReport {
    pub table: TrustTable,
    pub skipped: usize,
}

/// Load a `domain,score` CSV. Scores outside [0, 1] and malformed rows are
/// an error in strict mode and skipped (counted) in lenient mode.
pub fn load_trust_table(path: &Path, lenient: bool) -> Result<TrustLoadReport> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    {
        let headers = reader.headers()?;
        if headers.len() < 2 || &headers[0] != "domain" || &headers[1] != "score" {
            return Err(Error::TrustRow {
                line: 1,
                message: format!("expected header \"domain,score\", got {:?}", headers),
            });
        }
    }

    let mut table = TrustTable::default();
    let mut skipped = 0usize;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        match parse_row(record) {
            Ok((domain, score)) => {
                table.scores.insert(domain, score);
            }
            Err(message) => {
                if !lenient {
                    return Err(Error::TrustRow { line, message });
                }
                skipped += 1;
            }
        }
    }
    Ok(TrustLoadReport { table, skipped })
}

fn parse_row(
    record: std::result::Result<csv::StringRecord, csv::Error>,
) -> std::result::Result<(String, f64), String> {
    let record = record.map_err(|e| e.to_string())?;
    if record.len() < 2 {
        return Err("missing score column".into());
    }
    let domain = normalize_domain(&record[0]);
    if domain.is_empty() {
        return Err("empty domain".into());
    }
    let score: f64 = record[1]
        .trim()
        .parse()
        .map_err(|e| format!("bad score: {e}"))?;
    if !(0.0..=1.0).contains(&score) {
        return Err(format!("score {score} outside [0, 1]"));
    }
    Ok((domain, score))
}

impl TrustTable {
    pub fn insert(&mut self, domain: &str, score: f64) {
        self.scores.insert(normalize_domain(domain), score);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Trust score for a URL. Returns `(score, flagged)`; `flagged` is true
    /// when the URL could not be parsed to a host.
    pub fn trust_of(&self, url: &str) -> (f64, bool) {
        let host = match url::Url::parse(url) {
            Ok(u) => match u.host_str() {
                Some(h) => h.to_string(),
                None => return (DEFAULT_TRUST, true),
            },
            Err(_) => return (DEFAULT_TRUST, true),
        };
        let mut candidate = normalize_domain(&host);
        loop {
            if let Some(&score) = self.scores.get(&candidate) {
                return (score, false);
            }
            let labels = candidate.matches('.').count() + 1;
            if labels <= 2 {
                return (DEFAULT_TRUST, false);
            }
            candidate = candidate
                .split_once('.')
                .map(|(_, rest)| rest.to_string())
                .unwrap_or(candidate);
        }
    }
}
