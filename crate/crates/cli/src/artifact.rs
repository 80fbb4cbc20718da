//! Artifact assembly: metadata header, CSV or JSON body, file output.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Result of one subcommand: a CSV table and scalar notes.
pub struct Artifact {
    pub csv: String,
    pub notes: Vec<(String, String)>,
}

impl Artifact {
    pub fn new(csv: String) -> Self {
        Artifact { csv, notes: Vec::new() }
    }

    /// The table as {columns, rows}; numeric cells become JSON numbers
    /// parsed from their 12-digit text, so both formats carry the same values.
    pub fn data(&self) -> Value {
        let mut lines = self.csv.lines();
        let columns: Vec<&str> = lines.next().map(|h| h.split(',').collect()).unwrap_or_default();
        let rows: Vec<Value> = lines
            .map(|l| {
                Value::Array(
                    l.split(',')
                        .map(|cell| {
                            if let Ok(k) = cell.parse::<i64>() {
                                return json!(k);
                            }
                            match cell.parse::<f64>() {
                                Ok(x) if x.is_finite() => json!(x),
                                _ => Value::String(cell.to_string()),
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        json!({ "columns": columns, "rows": rows })
    }

    pub fn note(mut self, key: &str, value: impl ToString) -> Self {
        self.notes.push((key.to_string(), value.to_string()));
        self
    }
}

pub fn config_hash(config: &Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn render(artifact: &Artifact, command: &str, config: &Value, format: Format) -> String {
    let version = env!("CARGO_PKG_VERSION");
    let hash = config_hash(config);
    match format {
        Format::Csv => {
            let mut s =
                format!("# schwartz {version}\n# command: {command}\n# config-sha256: {hash}\n# config: {config}\n");
            for (k, v) in &artifact.notes {
                s.push_str(&format!("# {k}: {v}\n"));
            }
            s.push_str(&artifact.csv);
            s
        }
        Format::Json => {
            let notes: serde_json::Map<String, Value> = artifact
                .notes
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect();
            let doc = json!({
                "meta": {
                    "version": version,
                    "command": command,
                    "config_sha256": hash,
                    "config": config,
                    "notes": notes,
                },
                "data": artifact.data(),
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("json output");
            s.push('\n');
            s
        }
    }
}

pub fn write(dir: &Path, name: &str, body: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    Ok(path)
}
