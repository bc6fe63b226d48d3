use crate::types::{ModelProfile, RequestEvent, ZooConfig};

/// Joules charged by `profile` for `event`: `base + per_token × tokens`.
pub fn request_cost(profile: &ModelProfile, event: &RequestEvent) -> f64 {
    cost_for_tokens(profile, event.token_count)
}

pub fn cost_for_tokens(profile: &ModelProfile, token_count: u64) -> f64 {
    profile.base_cost + profile.cost_per_token * token_count as f64
}

/// Per-model costs for an event, preferring costs carried by the event.
pub fn event_costs(zoo: &ZooConfig, event: &RequestEvent) -> Vec<f64> {
    match &event.costs {
        Some(costs) => costs.clone(),
        None => zoo.models.iter().map(|m| request_cost(m, event)).collect(),
    }
}

/// `(E_min, E_max)` over the zoo for this event.
pub fn zoo_cost_extremes(zoo: &ZooConfig, event: &RequestEvent) -> (f64, f64) {
    zoo.models
        .iter()
        .map(|m| request_cost(m, event))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c), hi.max(c))
        })
}
