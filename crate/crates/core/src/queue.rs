use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accumulated shortfall against the satisfaction target.
///
/// `q` only changes through [`queue_update`]; it never goes negative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VirtualQueue {
    pub q: f64,
    /// Number of updates applied.
    pub t: u64,
}

impl VirtualQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies one update in place.
    pub fn push(&mut self, alpha: f64, satisfied: bool) -> Result<()> {
        *self = queue_update(*self, alpha, satisfied)?;
        Ok(())
    }
}

/// `q' = max(0, q + α − s)`.
pub fn queue_update(queue: VirtualQueue, alpha: f64, satisfied: bool) -> Result<VirtualQueue> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let s = if satisfied { 1.0 } else { 0.0 };
    Ok(VirtualQueue {
        q: (queue.q + alpha - s).max(0.0),
        t: queue.t + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(q: f64) -> VirtualQueue {
        VirtualQueue { q, t: 0 }
    }

    #[test]
    fn clamps_at_zero() {
        let next = queue_update(q(0.0), 0.66, true).unwrap();
        assert_eq!(next.q, 0.0);
        assert_eq!(next.t, 1);
    }

    #[test]
    fn grows_by_alpha_on_failure() {
        assert!((queue_update(q(0.0), 0.66, false).unwrap().q - 0.66).abs() < 1e-15);
    }

    #[test]
    fn drains_on_success() {
        assert!((queue_update(q(0.5), 0.8, true).unwrap().q - 0.3).abs() < 1e-12);
    }

    #[test]
    fn rejects_alpha_outside_unit_interval() {
        for alpha in [0.0, 1.0, -0.2, 1.3, f64::NAN] {
            assert!(queue_update(q(0.0), alpha, true).is_err());
        }
    }

    proptest! {
        #[test]
        fn nonnegative_bounded_steps_and_shortfall(
            alpha in 0.01f64..0.99,
            bits in proptest::collection::vec(any::<bool>(), 1..400),
        ) {
            let mut queue = VirtualQueue::new();
            let mut shortfall = 0.0;
            let step_cap = alpha.max(1.0 - alpha) + 1e-12;
            for &s in &bits {
                let next = queue_update(queue, alpha, s).unwrap();
                prop_assert!(next.q >= 0.0);
                prop_assert!((next.q - queue.q).abs() <= step_cap);
                shortfall += alpha - if s { 1.0 } else { 0.0 };
                queue = next;
            }
            // q_{T+1} >= Σ(α − s_t), hence α − mean(s) <= q/T.
            prop_assert!(queue.q + 1e-9 >= shortfall);
            let t = bits.len() as f64;
            let mean_s = bits.iter().filter(|&&b| b).count() as f64 / t;
            prop_assert!(alpha - mean_s <= queue.q / t + 1e-9);
            prop_assert_eq!(queue.t, bits.len() as u64);
        }

        #[test]
        fn equals_shortfall_without_clamping(alpha in 0.5f64..0.99, n in 1usize..200) {
            // All failures never clamp.
            let mut queue = VirtualQueue::new();
            for _ in 0..n {
                queue.push(alpha, false).unwrap();
            }
            prop_assert!((queue.q - alpha * n as f64).abs() < 1e-9);
        }
    }
}
