use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::Value;

use polarq::corpus::Interpretation;

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Non-empty JSON lines with their 1-based line numbers and raw text.
pub fn read_jsonl(path: &Path) -> Result<Vec<(usize, String, Value)>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(line).with_context(|| format!("{}:{}: malformed JSON", path.display(), i + 1))?;
        if !value.is_object() {
            bail!("{}:{}: expected a JSON object", path.display(), i + 1);
        }
        out.push((i + 1, line.to_string(), value));
    }
    Ok(out)
}

pub fn str_field<'a>(value: &'a Value, field: &str) -> Option<&'a str> {
    value.get(field).and_then(Value::as_str)
}

pub fn parse_label(path: &Path, line: usize, raw: &str) -> Result<Interpretation> {
    raw.parse().map_err(|e| anyhow!("{}:{line}: {e}", path.display()))
}

/// One label per line, either bare (`Yes`) or as a JSON object with a
/// `label` field.
pub fn read_labels(path: &Path) -> Result<Vec<Interpretation>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let raw = if line.starts_with('{') {
            let v: Value =
                serde_json::from_str(line).with_context(|| format!("{}:{}: malformed JSON", path.display(), i + 1))?;
            str_field(&v, "label")
                .ok_or_else(|| anyhow!("{}:{}: no `label` field", path.display(), i + 1))?
                .to_string()
        } else {
            line.to_string()
        };
        out.push(parse_label(path, i + 1, &raw)?);
    }
    Ok(out)
}

/// Labels of a labeled JSON-lines dataset.
pub fn read_dataset_labels(path: &Path) -> Result<Vec<Interpretation>> {
    read_jsonl(path)?
        .into_iter()
        .map(|(line, _, v)| {
            let raw = str_field(&v, "label").ok_or_else(|| anyhow!("{}:{line}: no `label` field", path.display()))?;
            parse_label(path, line, raw)
        })
        .collect()
}
