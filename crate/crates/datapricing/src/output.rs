//! Output directory handling: CSV and JSON writers and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Collects every file written during a run, for the manifest.
pub struct OutputSink {
    dir: PathBuf,
    files: Vec<String>,
}

/// Full-precision decimal: 17 significant digits.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

impl OutputSink {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Writes a CSV with one header row. Numeric rows should be formatted
    /// with [`fmt`].
    pub fn csv<I, R>(&mut self, name: &str, header: &[String], rows: I) -> io::Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.dir.join(name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.text(name, &text)
    }

    pub fn text(&mut self, name: &str, text: &str) -> io::Result<()> {
        fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub config_hash: String,
    pub subcommand: &'a str,
    pub seed: u64,
    pub tool_version: &'static str,
    pub timestamp: String,
    pub output_files: Vec<String>,
}

pub const MANIFEST: &str = "manifest.json";

impl RunManifest<'_> {
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(dir.join(MANIFEST), text)
    }
}

/// RFC 3339 UTC time; `SOURCE_DATE_EPOCH` pins it for reproducible builds.
pub fn timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok());
    let t = match secs.and_then(|s| chrono::DateTime::from_timestamp(s, 0)) {
        Some(t) => t,
        None => chrono::Utc::now(),
    };
    t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt(-2.0), "-2.0000000000000000e0");
        for v in [0.1, 1.0 / 3.0, -7.25e-12, 6.02e23] {
            assert_eq!(fmt(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn writes_and_records_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut sink = OutputSink::create(&dir.path().join("nested")).unwrap();
        sink.csv("a.csv", &["x".into(), "y".into()], vec![vec![fmt(1.0), fmt(2.0)]])
            .unwrap();
        sink.json("b.json", &serde_json::json!({"k": 1})).unwrap();
        assert_eq!(sink.files(), ["a.csv", "b.json"]);
        let text = fs::read_to_string(sink.dir().join("a.csv")).unwrap();
        assert_eq!(text, "x,y\n1.0000000000000000e0,2.0000000000000000e0\n");
    }
}
