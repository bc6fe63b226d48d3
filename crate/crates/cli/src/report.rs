//! Policy comparison table built from `summary.json` files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use messplus_core::metrics::MetricSummary;
use messplus_core::JOULES_PER_MJ;

pub const SUMMARY_FILE: &str = "summary.json";

/// What `simulate` and `replay` write next to each step CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub policy: String,
    pub seed: u64,
    pub alpha: f64,
    pub v: f64,
    pub c: f64,
    pub model_names: Vec<String>,
    pub summary: MetricSummary,
    /// Calibrated mixture, for the educated-guessing policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guessing_probs: Option<Vec<f64>>,
}

/// One policy, averaged over its seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub policy: String,
    pub seeds: usize,
    pub alpha: f64,
    pub cost_mj: f64,
    pub satisfaction: f64,
    /// Mean satisfaction below α.
    pub violation: bool,
    pub call_ratios: Vec<f64>,
    pub exploration_share: f64,
}

/// Finds every `summary.json` under `inputs` (files or directories).
pub fn collect(inputs: &[PathBuf]) -> Result<Vec<RunSummary>> {
    if inputs.is_empty() {
        bail!("report needs at least one input");
    }
    let mut files = Vec::new();
    for input in inputs {
        if !input.exists() {
            bail!("{} does not exist", input.display());
        }
        if input.is_file() {
            files.push(input.clone());
            continue;
        }
        for entry in walkdir::WalkDir::new(input).sort_by_file_name() {
            let entry = entry?;
            if entry.file_type().is_file() && entry.file_name() == SUMMARY_FILE {
                files.push(entry.into_path());
            }
        }
    }
    if files.is_empty() {
        bail!("no {SUMMARY_FILE} found under the given inputs");
    }
    files
        .iter()
        .map(|f| read_summary(f))
        .collect()
}

fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Averages runs per policy. Rows keep the order in which policies first
/// appear.
pub fn build(runs: &[RunSummary]) -> Result<Vec<ReportRow>> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&RunSummary>> = BTreeMap::new();
    for r in runs {
        if !groups.contains_key(r.policy.as_str()) {
            order.push(r.policy.as_str());
        }
        groups.entry(&r.policy).or_default().push(r);
    }
    let mut rows = Vec::new();
    for name in order {
        let group = &groups[name];
        let n = group.len() as f64;
        let alpha = group[0].alpha;
        if group.iter().any(|r| r.alpha != alpha) {
            bail!("policy {name} has runs with different alpha");
        }
        let models = group[0].summary.call_ratios.len();
        let mean = |f: &dyn Fn(&RunSummary) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
        let satisfaction = mean(&|r| r.summary.mean_satisfaction.unwrap_or(0.0));
        rows.push(ReportRow {
            policy: name.to_string(),
            seeds: group.len(),
            alpha,
            cost_mj: mean(&|r| r.summary.mean_cost_j.unwrap_or(0.0)) / JOULES_PER_MJ,
            satisfaction,
            violation: satisfaction < alpha,
            call_ratios: (0..models)
                .map(|m| mean(&|r| r.summary.call_ratios.get(m).copied().unwrap_or(0.0)))
                .collect(),
            exploration_share: mean(&|r| r.summary.exploration_energy_share),
        });
    }
    Ok(rows)
}

fn header(models: &[String]) -> Vec<String> {
    let mut h: Vec<String> = ["policy", "seeds", "alpha", "cost_mj", "satisfaction", "violation"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(models.iter().map(|m| format!("calls_{m}")));
    h.push("exploration_energy_share".into());
    h
}

pub fn write_csv<W: Write>(rows: &[ReportRow], models: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(models))?;
    for r in rows {
        let mut rec = vec![
            r.policy.clone(),
            r.seeds.to_string(),
            r.alpha.to_string(),
            format!("{:.4}", r.cost_mj),
            format!("{:.4}", r.satisfaction),
            r.violation.to_string(),
        ];
        rec.extend(r.call_ratios.iter().map(|c| format!("{c:.4}")));
        rec.push(format!("{:.4}", r.exploration_share));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width text rendering for the terminal.
pub fn render(rows: &[ReportRow], models: &[String]) -> String {
    let mut out = format!("{:<22} {:>9} {:>8} {:>9}", "policy", "cost (MJ)", "sat", "violated");
    for m in models {
        out.push_str(&format!(" {:>8}", m));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:<22} {:>9.3} {:>7.2}% {:>9}",
            r.policy,
            r.cost_mj,
            100.0 * r.satisfaction,
            if r.violation { "yes" } else { "no" }
        ));
        for c in &r.call_ratios {
            out.push_str(&format!(" {:>7.1}%", 100.0 * c));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use messplus_core::metrics::MetricStream;

    fn run(policy: &str, seed: u64, cost: f64, sat: f64) -> RunSummary {
        let mut summary = MetricStream::new(2).summary();
        summary.mean_cost_j = Some(cost);
        summary.mean_satisfaction = Some(sat);
        summary.call_ratios = vec![0.25, 0.75];
        RunSummary {
            schema_version: 1,
            policy: policy.into(),
            seed,
            alpha: 0.66,
            v: 0.001,
            c: 0.1,
            model_names: vec!["a".into(), "b".into()],
            summary,
            guessing_probs: None,
        }
    }

    #[test]
    fn averages_and_flags() {
        let rows = build(&[
            run("x", 1, 1.0e6, 0.70),
            run("y", 1, 3.0e6, 0.60),
            run("x", 2, 2.0e6, 0.64),
        ])
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].policy, "x");
        assert_eq!(rows[0].seeds, 2);
        assert!((rows[0].cost_mj - 1.5).abs() < 1e-12);
        assert!(!rows[0].violation, "0.67 meets 0.66");
        assert!(rows[1].violation);
        assert_eq!(rows[1].cost_mj, 3.0);

        let models = vec!["a".to_string(), "b".to_string()];
        let mut buf = Vec::new();
        write_csv(&rows, &models, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("policy,seeds,alpha,cost_mj,satisfaction,violation,calls_a,calls_b"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn missing_inputs_fail() {
        assert!(collect(&[]).is_err());
        assert!(collect(&[PathBuf::from("/nonexistent/dir")]).is_err());
        let empty = tempfile::tempdir().unwrap();
        assert!(collect(&[empty.path().to_path_buf()]).is_err());
    }
}
