//! Long-format result tables and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::scale::DeskScale;
use crate::error::{Error, Result};
use crate::stats::Moments;

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    /// Grid coordinates, aligned with [`ResultSet::param_names`].
    pub params: Vec<String>,
    pub metric: String,
    pub value: f64,
    /// Present for every Monte Carlo metric.
    pub std_err: Option<f64>,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultSet {
    pub experiment: String,
    pub param_names: Vec<String>,
    pub rows: Vec<ResultRow>,
    pub scale: Option<DeskScale>,
}

impl ResultSet {
    pub fn new(experiment: impl Into<String>, param_names: &[&str]) -> Self {
        ResultSet {
            experiment: experiment.into(),
            param_names: param_names.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            scale: None,
        }
    }

    pub fn push_exact(&mut self, params: &[String], metric: &str, value: f64) {
        self.push(params, metric, value, None, 0);
    }

    pub fn push_estimate(&mut self, params: &[String], metric: &str, m: &Moments) {
        self.push(
            params,
            metric,
            m.mean(),
            Some(m.std_err()),
            m.count() as usize,
        );
    }

    pub fn push(
        &mut self,
        params: &[String],
        metric: &str,
        value: f64,
        std_err: Option<f64>,
        trials: usize,
    ) {
        assert_eq!(params.len(), self.param_names.len(), "grid coordinates");
        self.rows.push(ResultRow {
            params: params.to_vec(),
            metric: metric.to_string(),
            value,
            std_err,
            trials,
        });
    }

    /// Rows whose grid coordinate `param` equals `value` and whose metric
    /// is `metric`.
    pub fn select<'a>(
        &'a self,
        metric: &'a str,
        filter: &'a [(&'a str, &'a str)],
    ) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| {
            r.metric == metric
                && filter.iter().all(|(name, want)| {
                    self.param_names
                        .iter()
                        .position(|p| p == name)
                        .is_some_and(|i| r.params[i] == *want)
                })
        })
    }

    /// The single value of `metric` at the given coordinates.
    pub fn value(&self, metric: &str, filter: &[(&str, &str)]) -> Option<f64> {
        let mut it = self.select(metric, filter);
        let v = it.next()?.value;
        it.next().is_none().then_some(v)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.param_names.clone();
        header.extend(["metric", "value", "std_err", "trials"].map(String::from));
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = r.params.clone();
            rec.push(r.metric.clone());
            rec.push(r.value.to_string());
            rec.push(r.std_err.map(|s| s.to_string()).unwrap_or_default());
            rec.push(r.trials.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Seed, config hash and versions of one run, as `key = value` lines.
pub fn manifest(cfg: &ExperimentConfig, results: &ResultSet) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    line("experiment", cfg.experiment.to_string());
    line("seed", cfg.seed.to_string());
    line("config_sha256", cfg.hash());
    line("coopkey_version", env!("CARGO_PKG_VERSION").to_string());
    line("rows", results.rows.len().to_string());
    if let Some(s) = &results.scale {
        line("desk_scale_factor", format!("{:e}", s.factor));
        line("desk_sample_rate_hz", s.sample_rate_hz.to_string());
        line("desk_carrier_freq_hz", s.carrier_freq_hz.to_string());
        line("desk_coherence_time_s", s.coherence_time_s.to_string());
        line("desk_guard_s", s.guard_s.to_string());
    }
    out.push_str("\n# config\n");
    out.push_str(&cfg.to_text());
    out
}

/// Writes `<experiment>.csv` and `<experiment>.manifest.txt` into `dir`,
/// creating it if needed.
pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    results: &ResultSet,
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", cfg.experiment));
    let manifest_path = dir.join(format!("{}.manifest.txt", cfg.experiment));
    fs::File::create(&csv_path)?.write_all(results.to_csv()?.as_bytes())?;
    fs::File::create(&manifest_path)?.write_all(manifest(cfg, results).as_bytes())?;
    Ok((csv_path, manifest_path))
}
