use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::Context;
use clap::ValueEnum;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// What a command produced: the JSON document is canonical, text and CSV
/// are optional hand-written views of it.
pub struct Report {
    pub json: Value,
    pub text: Option<String>,
    pub csv: Option<String>,
    /// rows that disagree with the expected values, if the command checks any
    pub mismatches: Vec<String>,
}

impl Report {
    pub fn new(json: Value) -> Self {
        Report { json, text: None, csv: None, mismatches: Vec::new() }
    }

    pub fn text(mut self, t: impl Into<String>) -> Self {
        self.text = Some(t.into());
        self
    }

    pub fn csv(mut self, c: impl Into<String>) -> Self {
        self.csv = Some(c.into());
        self
    }

    pub fn render(&self, fmt: Format) -> String {
        let json = round_floats(self.json.clone());
        match fmt {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&json).expect("serializable");
                s.push('\n');
                s
            }
            Format::Csv => self.csv.clone().unwrap_or_else(|| flat_csv(&json)),
            Format::Text => self.text.clone().unwrap_or_else(|| flat_text(&json)),
        }
    }
}

/// Counts as JSON numbers while they fit, strings beyond.
pub fn count(n: u128) -> Value {
    u64::try_from(n).map_or_else(|_| Value::String(n.to_string()), Value::from)
}

/// 12 significant digits, so output does not depend on the last few ulps.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn fmt12(x: f64) -> String {
    let r = sig12(x);
    if r == r.trunc() && r.abs() < 1e15 {
        format!("{r:.1}")
    } else {
        format!("{r}")
    }
}

pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = sig12(n.as_f64().unwrap());
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some(String::new()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        // [num, den] pairs read better as fractions
        Value::Array(a) if a.len() == 2 && a.iter().all(|x| x.is_i64() || x.is_u64()) => {
            Some(if a[1] == 1 { a[0].to_string() } else { format!("{}/{}", a[0], a[1]) })
        }
        _ => None,
    }
}

fn flat_csv(v: &Value) -> String {
    let mut out = String::from("key,value\n");
    if let Value::Object(o) = v {
        for (k, x) in o {
            if let Some(s) = scalar(x) {
                let _ = writeln!(out, "{k},{}", csv_field(&s));
            }
        }
    }
    out
}

fn flat_text(v: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(o) = v {
        for (k, x) in o {
            match scalar(x) {
                Some(s) => {
                    let _ = writeln!(out, "{k}: {s}");
                }
                None => {
                    let _ = writeln!(out, "{k}: {}", serde_json::to_string(x).unwrap_or_default());
                }
            }
        }
    }
    out
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Write via a sibling temp file and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
