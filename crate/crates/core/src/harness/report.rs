//! Result rows and their CSV / JSON-lines serialization.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// One aggregated grid point. Fields irrelevant to the experiment kind stay
/// `None` and print as empty cells. Field order is the column order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRow {
    pub experiment: String,
    pub grid_index: usize,
    pub master_seed: u64,
    pub config_hash: String,
    pub trial_count: usize,

    pub lambda: Option<u32>,
    pub error_floor: Option<f64>,
    pub block_length: Option<usize>,
    pub coded_length: Option<usize>,
    pub q: Option<usize>,
    pub snr_db: Option<f64>,
    pub an_power_fraction: Option<f64>,
    pub eve_snr_db: Option<f64>,
    pub key_bits: Option<usize>,
    pub measured_bits: Option<u64>,

    pub eve_ber_without_shaping: Option<f64>,
    pub eve_ber_without_shaping_se: Option<f64>,
    pub eve_ber_with_shaping: Option<f64>,
    pub eve_ber_with_shaping_se: Option<f64>,
    pub legit_ber: Option<f64>,
    pub legit_ber_se: Option<f64>,
    pub legit_message_ber: Option<f64>,
    pub legit_message_ber_se: Option<f64>,
    pub legit_ber_without_shaping: Option<f64>,
    pub legit_ber_without_shaping_se: Option<f64>,

    pub eve_ber: Option<f64>,
    pub eve_ber_se: Option<f64>,
    pub key_mismatch_rate: Option<f64>,
    pub key_mismatch_rate_se: Option<f64>,
    pub exchange_block_error_rate: Option<f64>,
    pub exchange_block_error_rate_se: Option<f64>,
    pub eve_key_distance: Option<f64>,
    pub eve_key_distance_se: Option<f64>,

    pub min_entropy_bound: Option<f64>,
    pub log2_eve_success: Option<f64>,
    pub doa: Option<f64>,
    pub achieved_dosa: Option<f64>,
    /// `achieved_dosa` to two decimals, as text.
    pub achieved_dosa_2dp: Option<String>,
    pub coded_dosa: Option<f64>,
    pub dosa_highsnr_approx: Option<f64>,
    pub dosa_estimate: Option<f64>,
    pub dosa_estimate_se: Option<f64>,

    pub error: Option<String>,
}

/// Column names in output order.
pub const COLUMNS: &[&str] = &[
    "experiment",
    "grid_index",
    "master_seed",
    "config_hash",
    "trial_count",
    "lambda",
    "error_floor",
    "block_length",
    "coded_length",
    "q",
    "snr_db",
    "an_power_fraction",
    "eve_snr_db",
    "key_bits",
    "measured_bits",
    "eve_ber_without_shaping",
    "eve_ber_without_shaping_se",
    "eve_ber_with_shaping",
    "eve_ber_with_shaping_se",
    "legit_ber",
    "legit_ber_se",
    "legit_message_ber",
    "legit_message_ber_se",
    "legit_ber_without_shaping",
    "legit_ber_without_shaping_se",
    "eve_ber",
    "eve_ber_se",
    "key_mismatch_rate",
    "key_mismatch_rate_se",
    "exchange_block_error_rate",
    "exchange_block_error_rate_se",
    "eve_key_distance",
    "eve_key_distance_se",
    "min_entropy_bound",
    "log2_eve_success",
    "doa",
    "achieved_dosa",
    "achieved_dosa_2dp",
    "coded_dosa",
    "dosa_highsnr_approx",
    "dosa_estimate",
    "dosa_estimate_se",
    "error",
];

/// Significant digits kept for every real-valued column.
pub const SIGNIFICANT_DIGITS: usize = 6;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Fixed-width rendering: six significant digits, plain notation for
/// magnitudes in [1e-4, 1e6), scientific otherwise.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let x = round_sig(x);
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
    }
}

/// Binomial standard error of a rate measured over `n` events.
pub fn binomial_se(rate: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (rate * (1.0 - rate) / n as f64).max(0.0).sqrt()
    }
}

impl ResultRow {
    /// Rounds every real field to [`SIGNIFICANT_DIGITS`].
    pub fn rounded(self) -> Self {
        let mut v = serde_json::to_value(&self).expect("row serializes");
        if let Value::Object(map) = &mut v {
            for value in map.values_mut() {
                if let Some(x) = value.as_f64().filter(|_| value.is_f64()) {
                    *value = serde_json::Number::from_f64(round_sig(x))
                        .map(Value::Number)
                        .unwrap_or(Value::Null);
                }
            }
        }
        serde_json::from_value(v).expect("row deserializes")
    }

    fn cells(&self) -> Vec<String> {
        let v = serde_json::to_value(self).expect("row serializes");
        COLUMNS
            .iter()
            .map(|c| match &v[*c] {
                Value::Null => String::new(),
                Value::String(s) => s.clone(),
                Value::Number(n) if n.is_f64() => format_sig(n.as_f64().unwrap_or(f64::NAN)),
                other => other.to_string(),
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReportFormat {
    #[default]
    Csv,
    JsonLines,
}

impl ReportFormat {
    /// `.jsonl` / `.json` select JSON lines, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => ReportFormat::JsonLines,
            _ => ReportFormat::Csv,
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "jsonl" | "json-lines" => Ok(ReportFormat::JsonLines),
            other => Err(Error::config(
                "format",
                format!("unknown format {other:?}, expected csv or jsonl"),
            )),
        }
    }
}

/// Writes rows to any sink. CSV always has a header; JSON lines has one
/// object per row. Output ends with exactly one newline unless it is empty
/// JSON lines.
pub fn write_report<W: Write>(
    rows: &[ResultRow],
    out: W,
    format: ReportFormat,
) -> std::io::Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(out);
            w.write_record(COLUMNS)?;
            for row in rows {
                w.write_record(row.cells())?;
            }
            w.flush()?;
        }
        ReportFormat::JsonLines => {
            let mut out = out;
            for row in rows {
                serde_json::to_writer(&mut out, row)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

/// Writes rows to `path`.
pub fn emit_report(rows: &[ResultRow], path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_report(rows, BufWriter::new(file), format).map_err(io)
}

/// Reads a JSON-lines report back.
pub fn load_report_jsonl(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_match_fields() {
        let v = serde_json::to_value(ResultRow::default()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        let mut expected: Vec<&str> = COLUMNS.to_vec();
        expected.sort();
        let mut keys = keys;
        keys.sort();
        assert_eq!(keys, expected);
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(0.5), "0.500000");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333");
        assert_eq!(format_sig(123.4567891), "123.457");
        assert_eq!(format_sig(1e-3), "0.00100000");
        assert_eq!(format_sig(2.5e-9), "2.50000e-9");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(round_sig(0.321608040201), 0.321608);
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        write_report(&[], &mut buf, ReportFormat::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("{}\n", COLUMNS.join(",")));
    }

    #[test]
    fn csv_quotes_and_single_newline() {
        let row = ResultRow {
            experiment: "keyless".into(),
            error: Some("bad, \"thing\"".into()),
            block_length: Some(398),
            error_floor: Some(0.2),
            ..Default::default()
        };
        let mut buf = Vec::new();
        write_report(&[row], &mut buf, ReportFormat::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with('\n') && !text.ends_with("\n\n"));
        assert_eq!(text.lines().count(), 2);
        let data = text.lines().nth(1).unwrap();
        assert!(
            data.contains(",398,") && data.contains(",0.200000,"),
            "{data}"
        );
        assert!(data.ends_with("\"bad, \"\"thing\"\"\""), "{data}");
    }

    #[test]
    fn emit_reports_path_on_failure() {
        let err = emit_report(&[], "/nonexistent-dir/x.csv", ReportFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"), "{err}");
    }

    #[test]
    fn format_selection() {
        assert_eq!(
            ReportFormat::from_path(Path::new("a.jsonl")),
            ReportFormat::JsonLines
        );
        assert_eq!(
            ReportFormat::from_path(Path::new("a.csv")),
            ReportFormat::Csv
        );
        assert_eq!(
            "jsonl".parse::<ReportFormat>().unwrap(),
            ReportFormat::JsonLines
        );
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
