use messplus_core::predictor::FeatureExtractor;
use messplus_core::router::{EventLabels, RouterConfig, RouterState};
use messplus_core::simulator::{generate_trace, ScenarioConfig};
use messplus_core::{RoutingDecision, SlaParams};

fn scenario(seed: u64) -> ScenarioConfig {
    ScenarioConfig::canonical(3_000, seed).unwrap()
}

fn router(cfg: &ScenarioConfig) -> RouterState {
    let extractor = FeatureExtractor::Passthrough { dim: cfg.dim };
    RouterState::new(RouterConfig::new(cfg.sla, cfg.zoo.clone(), extractor, cfg.seed)).unwrap()
}

#[test]
fn restored_snapshot_continues_identically() {
    let cfg = scenario(7);
    let trace = generate_trace(&cfg).unwrap();
    let mut full = router(&cfg);
    let mut decisions: Vec<RoutingDecision> = Vec::new();
    for r in &trace.records {
        decisions.push(full.step(&r.to_event(), &mut EventLabels).unwrap());
    }

    for cut in [0usize, 1, 500, 2_999] {
        let mut head = router(&cfg);
        for r in &trace.records[..cut] {
            head.step(&r.to_event(), &mut EventLabels).unwrap();
        }
        let json = serde_json::to_string(&head.snapshot()).unwrap();
        let mut resumed = RouterState::from_snapshot(serde_json::from_str(&json).unwrap()).unwrap();
        for (r, want) in trace.records[cut..].iter().zip(&decisions[cut..]) {
            let got = resumed.step(&r.to_event(), &mut EventLabels).unwrap();
            assert_eq!(&got, want, "diverged after resuming at {cut}");
        }
        assert_eq!(resumed.snapshot(), full.snapshot());
    }
}

#[test]
fn same_seed_same_decisions() {
    let a = generate_trace(&scenario(11)).unwrap();
    let b = generate_trace(&scenario(11)).unwrap();
    assert_eq!(a.records, b.records);
    let c = generate_trace(&scenario(12)).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn queue_stays_nonnegative_and_tracks_shortfall() {
    let cfg = scenario(3);
    let trace = generate_trace(&cfg).unwrap();
    let mut r = router(&cfg);
    let SlaParams { alpha, .. } = cfg.sla;
    for rec in &trace.records {
        let d = r.step(&rec.to_event(), &mut EventLabels).unwrap();
        assert!(d.queue_after >= 0.0);
        let s = d.realized_satisfaction.unwrap() as u8 as f64;
        let want = (d.queue_before + alpha - s).max(0.0);
        assert!((d.queue_after - want).abs() < 1e-12);
        if d.explored {
            assert!(d.y.iter().all(|&y| y));
        } else {
            assert_eq!(d.selected_count(), 1);
        }
    }
}
