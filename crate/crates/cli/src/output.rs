//! Deterministic artifact writing: CSV with 17 significant digits and a
//! manifest JSON echoing the resolved configuration.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Formats a real with 17 significant digits, bit-stable across runs.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct ArtifactWriter {
    dir: PathBuf,
    prefix: String,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, subcommand: &str, tag: &str) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            prefix: format!("{subcommand}-{tag}"),
            written: Vec::new(),
        })
    }

    pub fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{}", self.prefix, suffix))
    }

    /// Writes a CSV with a fixed header and row order.
    pub fn write_csv(
        &mut self,
        suffix: &str,
        header: &[&str],
        rows: impl Iterator<Item = Vec<String>>,
    ) -> std::io::Result<PathBuf> {
        let path = self.path(suffix);
        let file = fs::File::create(&path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json(
        &mut self,
        suffix: &str,
        value: &serde_json::Value,
    ) -> std::io::Result<PathBuf> {
        let path = self.path(suffix);
        let mut text = serde_json::to_string_pretty(value).expect("serializable value");
        text.push('\n');
        fs::write(&path, text)?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Manifest: subcommand plus every resolved key in sorted order.
    pub fn write_manifest(
        &mut self,
        subcommand: &str,
        resolved: &BTreeMap<String, String>,
    ) -> std::io::Result<PathBuf> {
        let mut map = serde_json::Map::new();
        map.insert(
            "subcommand".into(),
            serde_json::Value::String(subcommand.into()),
        );
        let mut cfg = serde_json::Map::new();
        for (k, v) in resolved {
            cfg.insert(k.clone(), serde_json::Value::String(v.clone()));
        }
        map.insert("config".into(), serde_json::Value::Object(cfg));
        let artifacts: Vec<serde_json::Value> = self
            .written
            .iter()
            .map(|p| serde_json::Value::String(p.file_name().unwrap().to_string_lossy().into()))
            .collect();
        map.insert("artifacts".into(), serde_json::Value::Array(artifacts));
        self.write_json(".manifest.json", &serde_json::Value::Object(map))
    }
}
