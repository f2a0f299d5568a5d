//! Artifact writing. JSON artifacts are a single object with the command,
//! a timestamp, the fully resolved config and the results. CSV artifacts
//! carry the same metadata as `#`-prefixed header lines followed by a table
//! derived from the results (one row per element for array results, one row
//! for object results).

use serde::Serialize;
use serde_json::Value;
use std::io::Write;
use std::path::Path;

#[derive(Serialize)]
pub struct Artifact<C: Serialize, R: Serialize> {
    pub command: String,
    pub timestamp: u64,
    pub config: C,
    pub results: R,
}

pub fn now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn write_artifact<C: Serialize, R: Serialize>(
    artifact: &Artifact<C, R>,
    format: &str,
    output: Option<&Path>,
) -> Result<(), String> {
    let text = match format {
        "json" => {
            let mut s =
                serde_json::to_string_pretty(artifact).map_err(|e| e.to_string())?;
            s.push('\n');
            s
        }
        "csv" => render_csv(artifact)?,
        other => return Err(format!("unknown format `{other}` (expected json or csv)")),
    };
    match output {
        None => {
            print!("{text}");
            std::io::stdout().flush().map_err(|e| e.to_string())
        }
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
    }
}

fn render_csv<C: Serialize, R: Serialize>(a: &Artifact<C, R>) -> Result<String, String> {
    let config = serde_json::to_string(&a.config).map_err(|e| e.to_string())?;
    let results = serde_json::to_value(&a.results).map_err(|e| e.to_string())?;
    let mut out = String::new();
    out.push_str(&format!("# command: {}\n", a.command));
    out.push_str(&format!("# timestamp: {}\n", a.timestamp));
    out.push_str(&format!("# config: {config}\n"));

    let rows: Vec<&Value> = match &results {
        Value::Array(items) => items.iter().collect(),
        other => vec![other],
    };
    let mut headers: Vec<String> = Vec::new();
    for row in &rows {
        if let Value::Object(map) = row {
            for k in map.keys() {
                if !headers.iter().any(|h| h == k) {
                    headers.push(k.clone());
                }
            }
        } else {
            headers = vec!["value".into()];
            break;
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&headers).map_err(|e| e.to_string())?;
    for row in &rows {
        let record: Vec<String> = match row {
            Value::Object(map) => headers
                .iter()
                .map(|h| map.get(h).map(scalar).unwrap_or_default())
                .collect(),
            other => vec![scalar(other)],
        };
        w.write_record(&record).map_err(|e| e.to_string())?;
    }
    let table = String::from_utf8(w.into_inner().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    out.push_str(&table);
    Ok(out)
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}
