use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// 1-based step count; the error of the `step`-th predicted frame.
    pub step: usize,
    pub pixel_error: f64,
    pub angvel_rmse: Option<f64>,
    pub log_perplexity: Option<f64>,
    pub mean_cov_det: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonMetrics {
    pub horizon: usize,
    pub pixel_error: f64,
    pub angvel_rmse: Option<f64>,
    pub log_perplexity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceMetrics {
    pub index: usize,
    pub pixel_error: Vec<f64>,
    /// Mean covariance determinant over objects, per step.
    pub cov_det: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedSequence {
    pub index: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub split: String,
    /// Pixel errors are in this image's pixel units.
    pub image_size: usize,
    pub t0: usize,
    pub max_horizon: usize,
    pub sequences: usize,
    pub skipped: Vec<SkippedSequence>,
    pub horizons: Vec<HorizonMetrics>,
    pub steps: Vec<StepMetrics>,
    /// Interpnet: error of the final-position head.
    pub final_position_error: Option<f64>,
    pub per_sequence: Vec<SequenceMetrics>,
    pub config: serde_json::Value,
}

impl MetricsReport {
    /// Metrics at horizon `h` (step index `h - 1`).
    pub fn at(&self, h: usize) -> Option<&StepMetrics> {
        h.checked_sub(1).and_then(|i| self.steps.get(i))
    }
}

/// `method -> split -> report`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Report(pub BTreeMap<String, BTreeMap<String, MetricsReport>>);

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

impl Report {
    pub fn insert(&mut self, r: MetricsReport) {
        self.0.entry(r.method.clone()).or_default().insert(r.split.clone(), r);
    }

    pub fn get(&self, method: &str, split: &str) -> Option<&MetricsReport> {
        self.0.get(method).and_then(|m| m.get(split))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        serde_json::from_str(text).map_err(|e| EvalError::Mismatch(format!("report json: {e}")))
    }

    /// Long format: `variant,split,step,metric,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,split,step,metric,value\n");
        for (method, splits) in &self.0 {
            for (split, r) in splits {
                for s in &r.steps {
                    let mut row = |metric: &str, v: f64| {
                        out.push_str(&format!("{method},{split},{},{metric},{v:e}\n", s.step));
                    };
                    row("pixel_error", s.pixel_error);
                    if let Some(v) = s.angvel_rmse {
                        row("angvel_rmse", v);
                    }
                    if let Some(v) = s.log_perplexity {
                        row("log_perplexity", v);
                    }
                    if let Some(v) = s.mean_cov_det {
                        row("mean_cov_det", v);
                    }
                }
            }
        }
        out
    }

    /// Writes `report.json` and `report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), EvalError> {
        let io = |p: &Path, e| EvalError::Io { path: p.to_path_buf(), source: e };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, text) in [(REPORT_JSON, self.to_json()), (REPORT_CSV, self.to_csv())] {
            let path = dir.join(name);
            let mut f = std::fs::File::create(&path).map_err(|e| io(&path, e))?;
            f.write_all(text.as_bytes()).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}
