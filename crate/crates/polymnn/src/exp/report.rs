//! Run reports: one scored cell per (model, target, split), JSON persistence,
//! and the CSV projections the plotting scripts consume.
//!
//! The report body (config snapshot plus cells) is a pure function of the
//! config, so two runs with the same config and seed serialize to identical
//! bytes. Wall-clock timings live next to the body, not inside it.

use crate::error::{Error, Result};
use crate::exp::config::ConfigSnapshot;
use crate::metrics::MetricsReport;
use crate::mnn::MnnKind;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// One scored table cell. `target` names what was learned ("a^2 - a",
/// "currin", "T120_L2"); `split` is "val" for the held-out tail of the
/// training draw and "test" for the out-of-distribution set. A cell that
/// failed carries the error text instead of metrics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellReport {
    pub model: String,
    pub target: String,
    pub split: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CellReport {
    pub fn new(model: &str, target: &str, split: &str) -> CellReport {
        CellReport {
            model: model.to_string(),
            target: target.to_string(),
            split: split.to_string(),
            mu: None,
            sigma: None,
            duration: None,
            lag: None,
            steps: None,
            params: None,
            metrics: None,
            error: None,
        }
    }
}

/// Everything deterministic about a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportBody {
    pub config: ConfigSnapshot,
    pub cells: Vec<CellReport>,
}

/// Wall-clock seconds spent fitting one model on one target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimingEntry {
    pub model: String,
    pub target: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub body: ReportBody,
    pub timing: Vec<TimingEntry>,
}

impl RunReport {
    /// The deterministic part only. Byte-compare this across runs.
    pub fn body_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.body)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<RunReport> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunReport> {
        RunReport::from_json(&std::fs::read_to_string(path)?)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Full dump: every cell, errors included, one row each.
pub fn cells_csv(cells: &[CellReport]) -> String {
    let mut out = String::from(
        "model,target,split,mu,sigma,duration,lag,steps,params,n,nan_count,mse,rrse,r2,mae,error\n",
    );
    for c in cells {
        let (n, nan, mse, rrse, r2, mae) = match &c.metrics {
            Some(m) => (
                m.n.to_string(),
                m.nan_count.to_string(),
                m.mse.to_string(),
                m.rrse.to_string(),
                m.r2.to_string(),
                m.mae.to_string(),
            ),
            None => Default::default(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&c.model),
            csv_field(&c.target),
            csv_field(&c.split),
            opt_f64(c.mu),
            opt_f64(c.sigma),
            opt_usize(c.duration),
            opt_usize(c.lag),
            opt_usize(c.steps),
            opt_usize(c.params),
            n,
            nan,
            mse,
            rrse,
            r2,
            mae,
            csv_field(c.error.as_deref().unwrap_or(""))
        )
        .expect("string writes are infallible");
    }
    out
}

/// Box-plot rows for the Gaussian experiments: one row per scored held-out
/// distribution.
pub fn poly_box_csv(cells: &[CellReport]) -> String {
    let mut out = String::from("model,target,mu,sigma,rrse\n");
    for c in cells {
        if c.split != "test" {
            continue;
        }
        let Some(m) = &c.metrics else { continue };
        writeln!(
            out,
            "{},{},{},{},{}",
            csv_field(&c.model),
            csv_field(&c.target),
            opt_f64(c.mu),
            opt_f64(c.sigma),
            m.rrse
        )
        .expect("string writes are infallible");
    }
    out
}

/// Benchmark-suite rows, both splits.
pub fn synth_cells_csv(cells: &[CellReport]) -> String {
    let mut out = String::from("model,function,split,rrse,r2,mae,nan_count\n");
    for c in cells {
        let Some(m) = &c.metrics else { continue };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(&c.model),
            csv_field(&c.target),
            csv_field(&c.split),
            m.rrse,
            m.r2,
            m.mae,
            m.nan_count
        )
        .expect("string writes are infallible");
    }
    out
}

/// Epidemic-sweep rows keyed by duration and lag.
pub fn sir_cells_csv(cells: &[CellReport]) -> String {
    let mut out = String::from("model,T,L,steps,split,rrse,r2,mae,nan_count\n");
    for c in cells {
        let (Some(t), Some(l)) = (c.duration, c.lag) else { continue };
        let Some(m) = &c.metrics else { continue };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            csv_field(&c.model),
            t,
            l,
            opt_usize(c.steps),
            csv_field(&c.split),
            m.rrse,
            m.r2,
            m.mae,
            m.nan_count
        )
        .expect("string writes are infallible");
    }
    out
}

/// One joined row of the duration-vs-lag comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepsVsLagRow {
    /// Modeled transitions, the shared axis: duration/lag.
    pub steps: usize,
    /// Best multiplicative-net test RRSE with lag 1 and duration = steps.
    pub fixed_lag_rrse: f64,
    /// Best multiplicative-net test RRSE with duration 120 and lag = 120/steps.
    pub fixed_duration_rrse: f64,
}

/// Steps where the two epidemic sweeps describe the same number of modeled
/// transitions and can be compared directly.
pub const SHARED_STEPS: [usize; 5] = [24, 30, 40, 60, 120];

fn best_mnn_test_rrse(cells: &[CellReport], duration: usize, lag: usize) -> Option<f64> {
    let mut found = false;
    let mut best = f64::NAN;
    for c in cells {
        if c.duration != Some(duration) || c.lag != Some(lag) || c.split != "test" {
            continue;
        }
        if !MnnKind::ALL.iter().any(|k| k.name() == c.model) {
            continue;
        }
        let Some(m) = &c.metrics else { continue };
        found = true;
        if m.rrse.is_finite() && !(best.is_finite() && best <= m.rrse) {
            best = m.rrse;
        }
    }
    found.then_some(best)
}

/// Joins a duration sweep (lag 1) against a lag sweep (duration 120) on the
/// shared steps axis. Needs cells from both sweeps; a missing cell is an
/// error, a NaN score is not. At 120 steps the two columns select the same
/// cells, so they agree by construction.
pub fn compare_steps_vs_lag(cells: &[CellReport]) -> Result<Vec<StepsVsLagRow>> {
    let mut rows = Vec::with_capacity(SHARED_STEPS.len());
    for steps in SHARED_STEPS {
        let fixed_lag = best_mnn_test_rrse(cells, steps, 1).ok_or_else(|| {
            Error::contract(format!(
                "no multiplicative-net test cell with duration {steps} and lag 1"
            ))
        })?;
        let lag = 120 / steps;
        let fixed_duration = best_mnn_test_rrse(cells, 120, lag).ok_or_else(|| {
            Error::contract(format!(
                "no multiplicative-net test cell with duration 120 and lag {lag}"
            ))
        })?;
        rows.push(StepsVsLagRow {
            steps,
            fixed_lag_rrse: fixed_lag,
            fixed_duration_rrse: fixed_duration,
        });
    }
    Ok(rows)
}

pub fn steps_vs_lag_csv(rows: &[StepsVsLagRow]) -> String {
    let mut out = String::from("steps,fixed_lag_rrse,fixed_duration_rrse\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.steps, r.fixed_lag_rrse, r.fixed_duration_rrse)
            .expect("string writes are infallible");
    }
    out
}

fn plot_csv(body: &ReportBody) -> (String, String) {
    let name = format!("{}.csv", body.config.experiment);
    let content = match body.config.experiment.as_str() {
        "synth" => synth_cells_csv(&body.cells),
        "sir_duration" | "sir_lag" => sir_cells_csv(&body.cells),
        // fig1_demo and poly both score Gaussian distributions
        _ => poly_box_csv(&body.cells),
    };
    (name, content)
}

/// Writes `report.json`, the full `cells.csv`, and the experiment's plot CSV
/// into `dir` (created if needed). Returns the paths written.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let json_path = dir.join("report.json");
    report.save(&json_path)?;
    written.push(json_path);

    let cells_path = dir.join("cells.csv");
    std::fs::write(&cells_path, cells_csv(&report.body.cells))?;
    written.push(cells_path);

    let (plot_name, plot_content) = plot_csv(&report.body);
    let plot_path = dir.join(plot_name);
    std::fs::write(&plot_path, plot_content)?;
    written.push(plot_path);

    Ok(written)
}

/// Regenerates plot CSVs from saved reports. When the set spans both
/// epidemic sweeps, also joins them into `steps_vs_lag.csv`.
pub fn emit_plots(reports: &[RunReport], dir: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::contract("no reports to plot"));
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut used: Vec<String> = Vec::new();
    for report in reports {
        let (mut name, content) = plot_csv(&report.body);
        if used.contains(&name) {
            let stem = name.trim_end_matches(".csv").to_string();
            let mut i = 2;
            while used.contains(&name) {
                name = format!("{stem}-{i}.csv");
                i += 1;
            }
        }
        used.push(name.clone());
        let path = dir.join(name);
        std::fs::write(&path, content)?;
        written.push(path);
    }

    let has_duration = reports.iter().any(|r| r.body.config.experiment == "sir_duration");
    let has_lag = reports.iter().any(|r| r.body.config.experiment == "sir_lag");
    if has_duration && has_lag {
        let all_cells: Vec<CellReport> = reports
            .iter()
            .flat_map(|r| r.body.cells.iter().cloned())
            .collect();
        let rows = compare_steps_vs_lag(&all_cells)?;
        let path = dir.join("steps_vs_lag.csv");
        std::fs::write(&path, steps_vs_lag_csv(&rows))?;
        written.push(path);
    }
    Ok(written)
}
