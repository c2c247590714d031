//! Per-session result rows, their CSV form, and per-(scheme, SNR) summaries.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harq::{HarqScheme, SessionResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub combine_rule: String,
    pub snr_db: f64,
    pub sentence_id: usize,
    pub rounds_used: usize,
    pub outcome: String,
    pub bleu: f64,
    pub similarity: f64,
    /// Empty for schemes without feedback.
    pub p_hat_final: Option<f64>,
    /// Seed of the channel stream the session consumed.
    pub seed: u64,
}

impl ResultRow {
    pub fn new(
        scheme: HarqScheme,
        snr_db: f64,
        sentence_id: usize,
        session: &SessionResult,
        bleu: f64,
        similarity: f64,
        seed: u64,
    ) -> Self {
        Self {
            scheme: scheme.variant_name().to_string(),
            combine_rule: scheme.rule_name().to_string(),
            snr_db,
            sentence_id,
            rounds_used: session.rounds_used,
            outcome: session.outcome.as_str().to_string(),
            bleu,
            similarity,
            p_hat_final: session.p_hat_final,
            seed,
        }
    }

    /// `wc_fc:weighted`, or the bare name for schemes without a rule.
    pub fn scheme_label(&self) -> String {
        if self.combine_rule == "none" {
            self.scheme.clone()
        } else {
            format!("{}:{}", self.scheme, self.combine_rule)
        }
    }
}

/// Header then one line per row. Floats use the shortest representation
/// that parses back to the same value.
pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let header = [
        "scheme",
        "combine_rule",
        "snr_db",
        "sentence_id",
        "rounds_used",
        "outcome",
        "bleu",
        "similarity",
        "p_hat_final",
        "seed",
    ];
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Input(format!("cannot write rows: {e}")))
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(rows, std::io::BufWriter::new(file)).map_err(|e| match e {
        Error::Input(reason) => Error::format(path, reason),
        other => other,
    })
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(csv_error)
}

pub fn load_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file).map_err(|e| match e {
        Error::Input(reason) => Error::format(path, reason),
        other => other,
    })
}

fn csv_error(e: csv::Error) -> Error {
    Error::Input(format!("csv: {e}"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: String,
    pub combine_rule: String,
    pub snr_db: f64,
    pub sentences: usize,
    pub mean_bleu: f64,
    pub mean_similarity: f64,
    pub mean_rounds: f64,
    pub ack_rate: f64,
}

/// One row per (scheme, rule, SNR) in order of first appearance.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: Vec<(SummaryRow, usize)> = Vec::new();
    for r in rows {
        let pos = groups.iter().position(|(s, _)| {
            s.scheme == r.scheme && s.combine_rule == r.combine_rule && s.snr_db.to_bits() == r.snr_db.to_bits()
        });
        let i = pos.unwrap_or_else(|| {
            groups.push((
                SummaryRow {
                    scheme: r.scheme.clone(),
                    combine_rule: r.combine_rule.clone(),
                    snr_db: r.snr_db,
                    sentences: 0,
                    mean_bleu: 0.0,
                    mean_similarity: 0.0,
                    mean_rounds: 0.0,
                    ack_rate: 0.0,
                },
                0,
            ));
            groups.len() - 1
        });
        let (s, acks) = &mut groups[i];
        s.sentences += 1;
        s.mean_bleu += r.bleu;
        s.mean_similarity += r.similarity;
        s.mean_rounds += r.rounds_used as f64;
        *acks += usize::from(r.outcome == "ack");
    }
    groups
        .into_iter()
        .map(|(mut s, acks)| {
            let n = s.sentences as f64;
            s.mean_bleu /= n;
            s.mean_similarity /= n;
            s.mean_rounds /= n;
            s.ack_rate = acks as f64 / n;
            s
        })
        .collect()
}

pub fn emit_summary(summary: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    for s in summary {
        w.serialize(s).map_err(|e| Error::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<SummaryRow>, _>>()
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Per-sentence values of one metric for one scheme at one SNR, ordered by
/// sentence id so two schemes line up pairwise.
pub fn paired_column(rows: &[ResultRow], scheme: &str, snr_db: f64, metric: fn(&ResultRow) -> f64) -> Vec<f64> {
    let mut picked: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| r.scheme_label() == scheme && r.snr_db.to_bits() == snr_db.to_bits())
        .collect();
    picked.sort_by_key(|r| r.sentence_id);
    picked.into_iter().map(metric).collect()
}
