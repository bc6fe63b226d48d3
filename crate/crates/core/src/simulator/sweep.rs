use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{time_to_sla, TIME_TO_SLA_TOLERANCE};
use crate::types::SlaParams;

use super::experiment::{run_experiment, PolicySpec};
use super::{generate_trace, ScenarioConfig};

/// Cross product of SLA parameters and trace seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub alphas: Vec<f64>,
    pub vs: Vec<f64>,
    pub cs: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.alphas.len() * self.vs.len() * self.cs.len() * self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub v: f64,
    pub c: f64,
    pub seed: u64,
    pub time_to_sla: Option<u64>,
    pub mean_cost_j: f64,
    pub final_satisfaction: f64,
    pub exploration_share: f64,
    pub exploration_count: u64,
    pub queue_over_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub horizon: u64,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "alpha",
            "v",
            "c",
            "seed",
            "time_to_sla",
            "mean_cost_j",
            "final_satisfaction",
            "exploration_share",
            "exploration_count",
            "queue_over_t",
        ])
        .map_err(csv_err)?;
        for c in &self.cells {
            w.write_record([
                c.alpha.to_string(),
                c.v.to_string(),
                c.c.to_string(),
                c.seed.to_string(),
                c.time_to_sla.map_or(String::new(), |t| t.to_string()),
                c.mean_cost_j.to_string(),
                c.final_satisfaction.to_string(),
                c.exploration_share.to_string(),
                c.exploration_count.to_string(),
                c.queue_over_t.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Cells averaged over seeds, keyed by `(alpha, v, c)` in grid order.
    pub fn seed_means(&self) -> Vec<SweepCell> {
        let mut out: Vec<(SweepCell, usize)> = Vec::new();
        for cell in &self.cells {
            match out
                .iter_mut()
                .find(|(c, _)| c.alpha == cell.alpha && c.v == cell.v && c.c == cell.c)
            {
                Some((acc, n)) => {
                    *n += 1;
                    acc.mean_cost_j += cell.mean_cost_j;
                    acc.final_satisfaction += cell.final_satisfaction;
                    acc.exploration_share += cell.exploration_share;
                    acc.exploration_count += cell.exploration_count;
                    acc.queue_over_t += cell.queue_over_t;
                    acc.time_to_sla = match (acc.time_to_sla, cell.time_to_sla) {
                        (Some(a), Some(b)) => Some(a + b),
                        _ => None,
                    };
                }
                None => out.push((cell.clone(), 1)),
            }
        }
        out.into_iter()
            .map(|(mut c, n)| {
                let k = n as f64;
                c.mean_cost_j /= k;
                c.final_satisfaction /= k;
                c.exploration_share /= k;
                c.exploration_count /= n as u64;
                c.queue_over_t /= k;
                c.time_to_sla = c.time_to_sla.map(|t| t / n as u64);
                c
            })
            .collect()
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Runs `policy` over every grid cell. One trace is generated per seed from
/// `base` and shared across that seed's cells. `jobs` caps the worker count;
/// zero means the rayon default.
pub fn sweep(base: &ScenarioConfig, grid: &SweepGrid, policy: &PolicySpec, jobs: usize) -> Result<SweepReport> {
    if grid.is_empty() {
        return Err(Error::param("sweep grid is empty"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::param(format!("thread pool: {e}")))?;

    pool.install(|| {
        let traces = grid
            .seeds
            .par_iter()
            .map(|&seed| {
                let mut cfg = base.clone();
                cfg.seed = seed;
                generate_trace(&cfg)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut jobs_list = Vec::with_capacity(grid.len());
        for &alpha in &grid.alphas {
            for &v in &grid.vs {
                for &c in &grid.cs {
                    for (i, &seed) in grid.seeds.iter().enumerate() {
                        jobs_list.push((alpha, v, c, seed, i));
                    }
                }
            }
        }
        let cells = jobs_list
            .par_iter()
            .map(|&(alpha, v, c, seed, i)| {
                let sla = SlaParams::new(alpha, v, c)?;
                let run = run_experiment(&traces[i], &base.zoo, policy, &sla, seed)?;
                let s = run.stream.summary();
                Ok(SweepCell {
                    alpha,
                    v,
                    c,
                    seed,
                    time_to_sla: time_to_sla(&run.stream.steps, alpha, TIME_TO_SLA_TOLERANCE),
                    mean_cost_j: s.mean_cost_j.unwrap_or(0.0),
                    final_satisfaction: s.mean_satisfaction.unwrap_or(0.0),
                    exploration_share: s.exploration_count as f64 / s.requests.max(1) as f64,
                    exploration_count: s.exploration_count,
                    queue_over_t: s.queue_over_t.unwrap_or(0.0),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepReport {
            schema_version: crate::metrics::REPORT_SCHEMA_VERSION,
            horizon: base.horizon,
            cells,
        })
    })
}
