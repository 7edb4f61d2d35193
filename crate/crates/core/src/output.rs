//! Result files of one run. Every file is named `{digest}_{subcommand}.*` and
//! holds only deterministic content, so identical inputs rewrite identical
//! bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub digest: String,
    pub seed: u64,
    pub files: Vec<String>,
    pub results: serde_json::Value,
}

/// A numeric table with one documented header comment.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub comment: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(comment: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            comment: comment.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<T: ToString>(&mut self, row: &[T]) {
        self.rows.push(row.iter().map(ToString::to_string).collect());
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::invalid(e.to_string());
        w.write_record(&self.columns).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let body = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(format!("# {}\n{}", self.comment, String::from_utf8_lossy(&body)))
    }
}

pub struct Emitter {
    dir: PathBuf,
    stem: String,
    written: Vec<PathBuf>,
}

impl Emitter {
    /// Prepare `dir`, creating it when `create` is set.
    pub fn new(dir: &Path, create: bool, digest: &str, subcommand: &str) -> Result<Self> {
        if !dir.is_dir() {
            if !create {
                return Err(Error::io(
                    dir,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
                ));
            }
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            stem: format!("{digest}_{subcommand}"),
            written: Vec::new(),
        })
    }

    pub fn path(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("{}.{ext}", self.stem))
    }

    pub fn write(&mut self, ext: &str, contents: &str) -> Result<PathBuf> {
        let path = self.path(ext);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Two whitespace-separated columns plus a gnuplot script that plots them.
    pub fn plot(&mut self, xlabel: &str, ylabel: &str, x: &[f64], y: &[f64]) -> Result<()> {
        let mut dat = format!("# {xlabel}\t{ylabel}\n");
        for (a, b) in x.iter().zip(y) {
            dat.push_str(&format!("{a}\t{b}\n"));
        }
        let dat_path = self.write("dat", &dat)?;
        let name = dat_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let script = format!(
            "set xlabel \"{xlabel}\"\nset ylabel \"{ylabel}\"\nset key off\nplot \"{name}\" using 1:2 with linespoints pt 7 ps 0.4\npause -1\n"
        );
        self.write("gp", &script)?;
        Ok(())
    }

    pub fn file_names(&self) -> Vec<String> {
        self.written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect()
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Write the JSON report last so it can list every other file.
    pub fn finish(mut self, mut report: RunReport) -> Result<(RunReport, Vec<PathBuf>)> {
        let json_name = self.path("json").file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        report.files = self.file_names();
        report.files.push(json_name);
        let text = serde_json::to_string_pretty(&report).map_err(|e| Error::invalid(e.to_string()))? + "\n";
        self.write("json", &text)?;
        Ok((report, self.written))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_comment_header() {
        let mut t = Table::new("x = thing", &["x", "y"]);
        t.push(&[1.5, 2.0]);
        assert_eq!(t.to_csv().unwrap(), "# x = thing\nx,y\n1.5,2\n");
    }

    #[test]
    fn missing_dir_created_or_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path().join("a/b");
        assert!(Emitter::new(&d, false, "abc", "peaks").is_err());
        assert!(Emitter::new(&d, true, "abc", "peaks").is_ok());
        assert!(d.is_dir());
    }
}
