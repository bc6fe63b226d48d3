//! Reference routing policies.
//!
//! None of these learn from the virtual queue. The threshold router is a
//! generic two-model stand-in for learned binary routers, not a
//! reimplementation of any particular one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::types::ModelId;

const FEASIBILITY_SLACK: f64 = 1e-6;
const MAX_ITERATIONS: usize = 5000;
const UP: f64 = 1.01;
const DOWN: f64 = 0.99;
const MIN_PROB: f64 = 1e-10;
const FALLBACK_WEIGHT: f64 = 0.8;

/// A priori model-mixing probabilities that meet the target rate in
/// expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessingPolicy {
    pub probs: Vec<f64>,
    pub source_accuracies: Vec<f64>,
}

impl GuessingPolicy {
    pub fn expected_accuracy(&self) -> f64 {
        dot(&self.probs, &self.source_accuracies)
    }

    /// Draws a model by inverse CDF.
    pub fn sample(&self, rng: &mut SeededRng) -> ModelId {
        let u = rng.uniform();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return ModelId(i);
            }
        }
        ModelId(self.probs.len() - 1)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(p: &mut [f64]) {
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
}

/// Multiplicative search for mixing probabilities whose expected accuracy
/// reaches `alpha`.
///
/// Starts uniform. Each round, models more accurate than the current mix are
/// scaled by 1.01 and the rest by 0.99, then renormalized, for at most 5000
/// rounds. If that never reaches `alpha − 1e-6`, falls back to a floor of
/// 1e-10 per model plus, best model first, 80% of the remaining mass times
/// the model's min-max normalized accuracy; the worst model takes whatever
/// is left.
pub fn calibrate_guessing(accuracies: &[f64], alpha: f64) -> Result<GuessingPolicy> {
    if accuracies.is_empty() {
        return Err(Error::EmptyZoo);
    }
    if accuracies.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::param("accuracies must lie in [0,1]"));
    }
    let max = accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if alpha > max {
        return Err(Error::Infeasible { alpha, max });
    }
    let n = accuracies.len();
    let mut p = vec![1.0 / n as f64; n];

    for _ in 0..MAX_ITERATIONS {
        let current = dot(&p, accuracies);
        if current >= alpha - FEASIBILITY_SLACK {
            return Ok(GuessingPolicy {
                probs: p,
                source_accuracies: accuracies.to_vec(),
            });
        }
        for (pi, &acc) in p.iter_mut().zip(accuracies) {
            *pi *= if acc > current { UP } else { DOWN };
        }
        normalize(&mut p);
    }

    // Descending by accuracy; stable so ties keep a deterministic order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| accuracies[a].total_cmp(&accuracies[b]));
    order.reverse();
    let best = accuracies[order[0]];
    let worst = accuracies[order[n - 1]];

    let mut p = vec![MIN_PROB; n];
    let mut remaining = 1.0 - n as f64 * MIN_PROB;
    for (rank, &idx) in order.iter().enumerate() {
        if rank == n - 1 {
            p[idx] += remaining;
        } else {
            let weight = if best > worst {
                (accuracies[idx] - worst) / (best - worst)
            } else {
                0.0
            };
            let allocation = remaining * weight * FALLBACK_WEIGHT;
            p[idx] += allocation;
            remaining -= allocation;
        }
    }
    normalize(&mut p);
    Ok(GuessingPolicy {
        probs: p,
        source_accuracies: accuracies.to_vec(),
    })
}

/// Always the same model.
pub fn route_single(model: ModelId) -> ModelId {
    model
}

/// Two-model router: stay on the small model when its predicted
/// satisfaction clears `threshold`.
pub fn route_threshold(s_hat_small: f64, threshold: f64, small: ModelId, large: ModelId) -> ModelId {
    if s_hat_small >= threshold {
        small
    } else {
        large
    }
}

/// Clairvoyant: cheapest model that satisfies the request, or the cheapest
/// model overall if none does. Lowest index wins cost ties.
pub fn route_oracle(labels: &[bool], costs: &[f64]) -> Result<ModelId> {
    if costs.is_empty() {
        return Err(Error::EmptyZoo);
    }
    if labels.len() != costs.len() {
        return Err(Error::Dimension {
            expected: costs.len(),
            got: labels.len(),
        });
    }
    let cheapest_of = |pred: &dyn Fn(usize) -> bool| {
        (0..costs.len())
            .filter(|&i| pred(i))
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if costs[b] <= costs[i] => Some(b),
                _ => Some(i),
            })
    };
    let idx = cheapest_of(&|i| labels[i])
        .or_else(|| cheapest_of(&|_| true))
        .expect("nonempty zoo");
    Ok(ModelId(idx))
}
