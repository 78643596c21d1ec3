//! Result records and their JSON / CSV emission.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;

pub type Metrics = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config: ExperimentConfig,
    pub metrics: Metrics,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<Metrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
    pub version: String,
    pub timestamp_unix: u64,
}

impl ResultRecord {
    pub fn new(
        config: ExperimentConfig,
        metrics: Metrics,
        rows: Vec<Metrics>,
        details: Option<Value>,
    ) -> Self {
        let timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            config,
            metrics,
            rows,
            details,
            version: format!("polarguard {}", env!("CARGO_PKG_VERSION")),
            timestamp_unix,
        }
    }

    pub fn metric_f64(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).and_then(Value::as_f64)
    }

    pub fn metric_bool(&self, name: &str) -> Option<bool> {
        self.metrics.get(name).and_then(Value::as_bool)
    }

    /// Canonical serialization of the metrics alone; equal for equal seeds.
    pub fn metrics_json(&self) -> String {
        serde_json::to_string(&self.metrics).expect("metrics serialize")
    }

    pub fn write_json(&self, path: &Path) -> io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(path, text + "\n")
    }

    /// One CSV line per row, or a single line of metrics when there are no rows.
    pub fn write_csv(&self, path: &Path) -> Result<(), csv::Error> {
        let mut writer = csv::Writer::from_path(path)?;
        let single = [self.metrics.clone()];
        let rows = if self.rows.is_empty() {
            &single[..]
        } else {
            &self.rows[..]
        };
        let first = &rows[0];
        writer.write_record(first.keys())?;
        for row in rows {
            writer.write_record(first.keys().map(|k| cell(row.get(k))))?;
        }
        writer.flush()?;
        Ok(())
    }
}

fn cell(value: Option<&Value>) -> String {
    match value {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(v) => v.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use serde_json::json;

    fn record() -> ResultRecord {
        let cfg = ExperimentConfig::from_json_str(
            r#"{"kind":"polarize","channel":{"kind":"erasure","param":0.5},"n":3,"seed":1}"#,
            None,
            &[],
        )
        .unwrap();
        let mut row = Metrics::new();
        row.insert("n".into(), json!(3));
        row.insert("mean_z".into(), json!(0.1 + 0.2));
        row.insert("label".into(), json!("a,b"));
        ResultRecord::new(cfg, row.clone(), vec![row], None)
    }

    #[test]
    fn json_round_trips() {
        let r = record();
        let text = serde_json::to_string(&r).unwrap();
        let back: ResultRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(
            back.metric_f64("mean_z").unwrap().to_bits(),
            (0.1f64 + 0.2).to_bits()
        );
    }

    #[test]
    fn csv_matches_json_fields() {
        let r = record();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        r.write_csv(&path).unwrap();
        let mut reader = csv::Reader::from_path(&path).unwrap();
        let headers = reader.headers().unwrap().clone();
        let rec = reader.records().next().unwrap().unwrap();
        for (h, v) in headers.iter().zip(rec.iter()) {
            assert_eq!(cell(r.metrics.get(h)), v, "{h}");
        }
        let mean: f64 = rec
            .get(headers.iter().position(|h| h == "mean_z").unwrap())
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(mean, r.metric_f64("mean_z").unwrap());
    }
}
