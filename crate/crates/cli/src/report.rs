//! Report assembly and serialization.
//!
//! Every run produces one JSON report (`report.json`) mirroring the library
//! result structs one-to-one, plus CSV tables for the per-`s` sweeps. The CSV
//! schema is fixed so plots need no bespoke parsing:
//! `s, one_minus_s, raw_p_power, scaled, reference, rel_error, verdict`.
//! Numbers are written with 17 significant digits, enough to round-trip an
//! `f64` exactly. Nothing in a report depends on the clock, the host, or the
//! thread count, so identical configurations produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use fracnorm::StudyRow;
use serde::Serialize;

use crate::config::OutputFormats;

/// The envelope written to `report.json`.
#[derive(Serialize)]
pub struct Report {
    pub command: &'static str,
    /// Fully resolved configuration (defaults filled in): rerunning with
    /// exactly these keys and the same seed reproduces the run byte for byte.
    pub config: BTreeMap<String, String>,
    /// Regime notes; empty when the run sits squarely inside the theory.
    pub warnings: Vec<String>,
    /// Interpretation caveat, set by commands whose verdict is evidence
    /// rather than proof.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<&'static str>,
    /// One-word outcome; `--assert` maps it onto the exit status.
    pub verdict: String,
    /// Command-specific payload.
    pub result: serde_json::Value,
}

/// 17 significant digits: exact `f64` round-trip.
pub fn csv_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(csv_num).unwrap_or_default()
}

/// Render sweep rows in the fixed table schema.
pub fn sweep_table(rows: &[StudyRow], reference: Option<f64>, verdict: &str) -> String {
    let mut out = String::from("s,one_minus_s,raw_p_power,scaled,reference,rel_error,verdict\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_num(row.s),
            csv_num(row.one_minus_s),
            csv_num(row.raw_p_power),
            csv_num(row.scaled),
            csv_opt(reference),
            csv_opt(row.rel_error),
            verdict,
        ));
    }
    out
}

/// Render `(s, value)` pairs in the fixed schema, for sweeps that carry no
/// separate raw power (the scaled column holds the swept quantity and the raw
/// column its unscaled counterpart).
pub fn pair_table(rows: &[(f64, f64)], scale_back: impl Fn(f64, f64) -> f64) -> String {
    let mut out = String::from("s,one_minus_s,raw_p_power,scaled,reference,rel_error,verdict\n");
    for &(s, value) in rows {
        out.push_str(&format!(
            "{},{},{},{},,,\n",
            csv_num(s),
            csv_num(1.0 - s),
            csv_num(scale_back(s, value)),
            csv_num(value),
        ));
    }
    out
}

/// A named CSV artifact.
pub struct Table {
    pub name: String,
    pub text: String,
}

impl Table {
    pub fn new(name: impl Into<String>, text: String) -> Self {
        Table {
            name: name.into(),
            text,
        }
    }
}

/// Write the report and tables under `dir`, honoring the format selection.
pub fn write_outputs(
    dir: &Path,
    report: &Report,
    tables: &[Table],
    formats: OutputFormats,
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    if formats.json() {
        let mut text = serde_json::to_string_pretty(report).expect("report serialization");
        text.push('\n');
        let mut file = fs::File::create(dir.join("report.json"))?;
        file.write_all(text.as_bytes())?;
    }
    if formats.csv() {
        for table in tables {
            let mut file = fs::File::create(dir.join(&table.name))?;
            file.write_all(table.text.as_bytes())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_numbers_round_trip() {
        for v in [0.1, std::f64::consts::PI, 1.0 / 3.0, 2.5e-17] {
            let text = csv_num(v);
            assert_eq!(text.parse::<f64>().unwrap(), v, "{text}");
        }
    }

    #[test]
    fn sweep_table_has_the_fixed_header() {
        let rows = vec![StudyRow {
            s: 0.5,
            one_minus_s: 0.5,
            raw_p_power: 2.0,
            scaled: 1.0,
            rel_error: None,
        }];
        let table = sweep_table(&rows, Some(1.5), "converged");
        let mut lines = table.lines();
        assert_eq!(
            lines.next().unwrap(),
            "s,one_minus_s,raw_p_power,scaled,reference,rel_error,verdict"
        );
        let row = lines.next().unwrap();
        assert!(row.ends_with(",converged"), "{row}");
        assert!(row.contains("1.5000000000000000e0"), "{row}");
    }
}
