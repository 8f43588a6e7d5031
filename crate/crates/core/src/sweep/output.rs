use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{Map, Value};

use super::config::{ConfigDocument, ConfigError, OutputFormat};
use super::run::{SweepResultFile, SweepRow};

pub const CSV_COLUMNS: [&str; 14] = [
    "distance_km",
    "eta",
    "kappa_raw",
    "kappa_clamped",
    "i_ab",
    "chi_be",
    "p_success",
    "p_ua",
    "p_qs",
    "plob",
    "mc_stderr",
    "best_r",
    "leakage",
    "status",
];

fn config_map(file: &SweepResultFile) -> Map<String, Value> {
    match serde_json::to_value(file.config.to_document()).expect("config serializes") {
        Value::Object(m) => m,
        _ => unreachable!("config document is a struct"),
    }
}

fn numbers(row: &SweepRow) -> [f64; 13] {
    [
        row.distance_km,
        row.eta,
        row.kappa_raw,
        row.kappa_clamped,
        row.i_ab,
        row.chi_be,
        row.p_success,
        row.p_ua,
        row.p_qs,
        row.plob,
        row.mc_stderr,
        row.best_r,
        row.leakage,
    ]
}

/// CSV with the resolved config as `# key=value` lines, values in JSON.
pub fn to_csv(file: &SweepResultFile) -> String {
    let mut out = String::new();
    for (k, v) in config_map(file) {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    for row in &file.rows {
        for x in numbers(row) {
            out.push_str(&format_number(x));
            out.push(',');
        }
        match &row.error {
            None => out.push_str("ok"),
            Some(e) => out.push_str(&format!("\"{}\"", e.replace('"', "'"))),
        }
        out.push('\n');
    }
    out
}

/// Shortest round-trip text, in exponent form for very small or large values.
fn format_number(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e9).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn json_number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Single JSON document `{"config": {...}, "rows": [...]}`. Non-finite
/// numbers become `null`.
pub fn to_json(file: &SweepResultFile) -> String {
    let rows: Vec<Value> = file
        .rows
        .iter()
        .map(|row| {
            let mut m = Map::new();
            for (name, x) in CSV_COLUMNS.iter().zip(numbers(row)) {
                m.insert(name.to_string(), json_number(x));
            }
            m.insert(
                "status".into(),
                Value::String(row.error.clone().unwrap_or_else(|| "ok".into())),
            );
            Value::Object(m)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("config".into(), Value::Object(config_map(file)));
    doc.insert("rows".into(), Value::Array(rows));
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json serializes");
    text.push('\n');
    text
}

pub fn render(file: &SweepResultFile, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => to_csv(file),
        OutputFormat::Json => to_json(file),
    }
}

/// Recovers the config document from the header of a CSV file.
pub fn csv_header_document(text: &str) -> Result<ConfigDocument, ConfigError> {
    let mut m = Map::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim();
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| ConfigError::new("header", format!("`{line}` is not key=value")))?;
        let value = serde_json::from_str(v).map_err(|e| ConfigError::new(k.to_string(), e.to_string()))?;
        m.insert(k.to_string(), value);
    }
    ConfigDocument::from_json(&Value::Object(m).to_string())
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
