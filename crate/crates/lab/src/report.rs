//! Experiment reports: named CSV artifacts plus a JSON summary carrying the
//! config hash. Keys are sorted, so identical runs give identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::LabError;

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub experiment: String,
    pub config_hash: String,
    pub config_toml: String,
    pub metrics: BTreeMap<String, Value>,
    /// Relative path and contents, in insertion order.
    pub artifacts: Vec<(String, String)>,
}

impl Report {
    pub fn new(experiment: &str, cfg: &ExperimentConfig) -> Self {
        Report { experiment: experiment.to_string(), config_hash: cfg.hash(), config_toml: cfg.to_toml(), metrics: BTreeMap::new(), artifacts: vec![] }
    }

    pub fn metric(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.to_string(), value.into());
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).and_then(Value::as_f64)
    }

    pub fn artifact(&mut self, path: impl Into<String>, contents: impl Into<String>) {
        self.artifacts.push((path.into(), contents.into()));
    }

    pub fn get_artifact(&self, path: &str) -> Option<&str> {
        self.artifacts.iter().find(|(p, _)| p == path).map(|(_, c)| c.as_str())
    }

    pub fn summary_json(&self) -> String {
        let files: Vec<&str> = self.artifacts.iter().map(|(p, _)| p.as_str()).collect();
        let v = json!({
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "metrics": self.metrics,
            "artifacts": files,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes every artifact under `dir`, then the config that produced
    /// them and `<experiment>_summary.json`.
    pub fn write(&self, dir: &Path) -> Result<(), LabError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| LabError::Io { path, source }
        };
        for (rel, contents) in &self.artifacts {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(io(parent))?;
            }
            fs::write(&path, contents).map_err(io(&path))?;
        }
        fs::create_dir_all(dir).map_err(io(dir))?;
        let config = dir.join(format!("{}_config.toml", self.experiment));
        fs::write(&config, &self.config_toml).map_err(io(&config))?;
        let summary = dir.join(format!("{}_summary.json", self.experiment));
        fs::write(&summary, self.summary_json()).map_err(io(&summary))?;
        Ok(())
    }
}

/// Writes CSV text into a string.
pub fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> String {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV writers emit UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_is_sorted_and_written() {
        let cfg = ExperimentConfig::default();
        let mut r = Report::new("demo", &cfg);
        r.metric("zeta", 1.5);
        r.metric("alpha", 2);
        r.artifact("sub/a.csv", "x\n1\n");
        let json = r.summary_json();
        assert!(json.find("alpha").unwrap() < json.find("zeta").unwrap());
        assert!(json.contains(&cfg.hash()));
        let dir = tempfile::tempdir().unwrap();
        r.write(dir.path()).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("sub/a.csv")).unwrap(), "x\n1\n");
        assert_eq!(fs::read_to_string(dir.path().join("demo_summary.json")).unwrap(), json);
    }
}
