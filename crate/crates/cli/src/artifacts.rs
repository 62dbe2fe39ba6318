//! Artifact emission with provenance stamping.
//!
//! Every JSON artifact carries the tool version, the config hash, and the
//! seed, so a report can always be traced back to the invocation that
//! produced it. All writers are deterministic byte-for-byte.

use std::fs;
use std::path::{Path, PathBuf};

use ditscale::Result;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
}

pub struct Emitter {
    pub out_dir: PathBuf,
    pub provenance: Provenance,
}

impl Emitter {
    /// Creates the output directory and drops a `provenance.json` into it,
    /// so directories of schema-fixed CSVs stay traceable too.
    pub fn new(out_dir: &Path, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(out_dir)?;
        let emitter = Emitter {
            out_dir: out_dir.to_path_buf(),
            provenance,
        };
        let mut text = serde_json::to_string_pretty(&emitter.provenance)?;
        text.push('\n');
        fs::write(out_dir.join("provenance.json"), text)?;
        Ok(emitter)
    }

    /// Writes `{ "provenance": ..., <payload fields> }` as pretty JSON.
    /// Payload keys sort alphabetically, which keeps reruns byte-identical.
    pub fn write_json(&self, name: &str, payload: serde_json::Value) -> Result<PathBuf> {
        let mut root = serde_json::Map::new();
        root.insert(
            "provenance".to_string(),
            serde_json::to_value(&self.provenance)?,
        );
        match payload {
            serde_json::Value::Object(map) => {
                for (k, v) in map {
                    root.insert(k, v);
                }
            }
            other => {
                root.insert("data".to_string(), other);
            }
        }
        let path = self.out_dir.join(name);
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(root))?;
        text.push('\n');
        fs::write(&path, text)?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_text(&self, name: &str, content: &str) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        fs::write(&path, content)?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    /// Writes an SVG with a provenance comment after the opening tag.
    pub fn write_svg(&self, name: &str, svg: &str) -> Result<PathBuf> {
        let stamp = format!(
            "<!-- {} {} config {} seed {} -->",
            self.provenance.tool,
            self.provenance.version,
            self.provenance.config_hash,
            self.provenance.seed
        );
        let stamped = match svg.find('>') {
            Some(i) => format!("{}{}{}", &svg[..=i], stamp, &svg[i + 1..]),
            None => svg.to_string(),
        };
        self.write_text(name, &stamped)
    }
}

/// Renders rows into a CSV string; the caller provides the header.
pub fn csv_table(header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
