//! Acceptance criteria 1 to 10. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; the process fails if any
//! criterion does.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use messplus_core::baselines::calibrate_guessing;
use messplus_core::metrics::{overhead_summary, time_to_sla, MetricStream, TIME_TO_SLA_TOLERANCE};
use messplus_core::predictor::{FeatureExtractor, PredictorState};
use messplus_core::router::{
    exploration_probability, solve_per_request, EventLabels, RouterConfig, RouterState,
};
use messplus_core::simulator::{
    generate_trace, run_experiment, ExperimentTrace, PolicySpec, ScenarioConfig, TraceGenerator,
};
use messplus_core::{Error as CoreError, RequestInput, SlaParams};
use messplus_service::{ServiceConfig, Tenant};

const SEEDS: [u64; 3] = [42, 43, 44];
const CANONICAL_T: u64 = 20_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// MESS+ and educated guessing over one canonical trace.
struct CanonicalRun {
    seed: u64,
    messplus: MetricStream,
    guessing: MetricStream,
    elapsed: Duration,
}

fn canonical_runs() -> Vec<CanonicalRun> {
    SEEDS
        .iter()
        .map(|&seed| {
            let start = Instant::now();
            let cfg = ScenarioConfig::canonical(CANONICAL_T, seed).unwrap();
            let trace = generate_trace(&cfg).unwrap();
            let messplus = run_experiment(&trace, &cfg.zoo, &PolicySpec::messplus(), &cfg.sla, seed)
                .unwrap()
                .stream;
            let elapsed = start.elapsed();
            let guessing = run_experiment(&trace, &cfg.zoo, &PolicySpec::Guessing, &cfg.sla, seed)
                .unwrap()
                .stream;
            CanonicalRun {
                seed,
                messplus,
                guessing,
                elapsed,
            }
        })
        .collect()
}

fn criterion_1(runs: &[CanonicalRun]) -> Outcome {
    let floor = 0.66 - 1.0 / (CANONICAL_T as f64).sqrt() - 0.003;
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let m = r.messplus.summary();
        let g = r.guessing.summary();
        let sat = m.mean_satisfaction.unwrap();
        let cost = m.mean_cost_j.unwrap();
        let guess_cost = g.mean_cost_j.unwrap();
        let ok = sat >= floor && cost < 2.91e6 && cost < guess_cost && r.elapsed.as_secs_f64() <= 60.0;
        pass &= ok;
        parts.push(format!(
            "seed {}: sat {:.4} (floor {:.4}), cost {:.3} MJ vs largest 2.910 / guessing {:.3}, {:.1}s",
            r.seed,
            sat,
            floor,
            cost / 1e6,
            guess_cost / 1e6,
            r.elapsed.as_secs_f64()
        ));
    }
    check(pass, parts.join("; "))
}

fn criterion_2(runs: &[CanonicalRun]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let s = r.messplus.summary();
        let excess = s.max_queue_excess.unwrap();
        let mean_q = s.mean_queue.unwrap();
        let q_over_t = s.queue_over_t.unwrap();
        pass &= excess <= 10.0 && mean_q <= 25.0 && q_over_t <= 0.02;
        parts.push(format!(
            "seed {}: max(Q-sqrt t) {:.2}, mean Q {:.2}, Q_T/T {:.5}",
            r.seed, excess, mean_q, q_over_t
        ));
    }
    check(pass, parts.join("; "))
}

/// V ∈ {1e-4, 1e-3, 1e-2} on seed 42. A run that never reaches the SLA
/// counts as reaching it at T + 1.
fn criterion_3() -> Outcome {
    let seed = 42;
    let vs = [1e-4, 1e-3, 1e-2];
    let mut times = Vec::new();
    let mut costs = Vec::new();
    for &v in &vs {
        let mut cfg = ScenarioConfig::canonical(CANONICAL_T, seed).unwrap();
        cfg.sla = SlaParams::new(0.66, v, 0.1).unwrap();
        let trace = generate_trace(&cfg).unwrap();
        let run = run_experiment(&trace, &cfg.zoo, &PolicySpec::messplus(), &cfg.sla, seed).unwrap();
        let t = time_to_sla(&run.stream.steps, cfg.sla.alpha, TIME_TO_SLA_TOLERANCE).unwrap_or(CANONICAL_T + 1);
        times.push(t as f64);
        costs.push(run.stream.summary().mean_cost_j.unwrap());
    }
    let band = 0.02;
    let time_ok = times.windows(2).all(|w| w[1] >= w[0] * (1.0 - band));
    let cost_ok = costs.windows(2).all(|w| w[1] <= w[0] * (1.0 + band));
    check(
        time_ok && cost_ok,
        format!(
            "V 1e-4/1e-3/1e-2: time-to-SLA {:?}, cost MJ {:?}",
            times,
            costs.iter().map(|c| (c / 1e4).round() / 100.0).collect::<Vec<_>>()
        ),
    )
}

fn criterion_4() -> Outcome {
    let horizon = 10_000;
    let c = 0.1;
    let mut expected = 1.0;
    let mut variance = 0.0;
    for t in 2..=horizon {
        let p = exploration_probability(c, t).unwrap();
        expected += p;
        variance += p * (1.0 - p);
    }
    let half_width = 3.0 * variance.sqrt();
    let mut pass = true;
    let mut counts = Vec::new();
    for seed in SEEDS {
        let mut cfg = ScenarioConfig::canonical(horizon, seed).unwrap();
        cfg.sla.c = c;
        let trace = generate_trace(&cfg).unwrap();
        let run = run_experiment(&trace, &cfg.zoo, &PolicySpec::messplus(), &cfg.sla, seed).unwrap();
        let n = run.stream.exploration_count() as f64;
        pass &= (n - expected).abs() <= half_width;
        counts.push(n);
    }
    check(
        pass,
        format!(
            "explorations {:?} vs {:.1} ± {:.1} (c·(4/3)·T^¾ = {:.1})",
            counts,
            expected,
            half_width,
            c * 4.0 / 3.0 * (horizon as f64).powf(0.75)
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let dim = rng.gen_range(1..6);
        let models = rng.gen_range(1..5);
        let mu = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.5) };
        let mut p = PredictorState::new(dim, models, mu, Default::default()).unwrap();
        p.z.iter_mut().for_each(|z| *z = rng.gen_range(-2.0..2.0));
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let labels: Vec<bool> = (0..models).map(|_| rng.gen_bool(0.5)).collect();
        let grad = p.gradient(&x, &labels).unwrap();
        let h = 1e-5;
        let mut num = Vec::with_capacity(grad.len());
        for i in 0..p.z.len() {
            let orig = p.z[i];
            p.z[i] = orig + h;
            let up = p.loss(&x, &labels).unwrap();
            p.z[i] = orig - h;
            let down = p.loss(&x, &labels).unwrap();
            p.z[i] = orig;
            num.push((up - down) / (2.0 * h));
        }
        let diff = grad.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = grad.iter().map(|a| a * a).sum::<f64>().sqrt().max(num.iter().map(|a| a * a).sum::<f64>().sqrt());
        worst = worst.max(if scale > 0.0 { diff / scale } else { diff });
    }

    let zero = PredictorState::new(4, 3, 0.0, Default::default()).unwrap();
    let x = [0.3, -1.2, 2.0, 0.1];
    let s_hat = zero.predict(&x).unwrap();
    let half = s_hat.iter().all(|&s| s == 0.5);
    let loss = zero.loss(&x, &[true, false, true]).unwrap();
    let ln2_err = (loss - std::f64::consts::LN_2).abs();
    check(
        worst <= 1e-5 && half && ln2_err <= 1e-12,
        format!("max relative gradient error {worst:.2e}; s_hat(z=0) = {s_hat:?}; |loss - ln 2| = {ln2_err:.1e}"),
    )
}

/// Rank-based AUC with average ranks for ties.
fn auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = avg;
        }
        i = j + 1;
    }
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = labels.len() as f64 - pos;
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg)
}

struct LearningRun {
    c: f64,
    requests: u64,
    loss_50: f64,
    loss_2000: f64,
    aucs: Vec<f64>,
    /// Exploration energy after the common horizon.
    energy_at_common: f64,
}

const LEARNING_STEPS: u64 = 2000;
const COMMON_HORIZON: u64 = 20_000;

fn held_out_loss(p: &PredictorState, held: &[(Vec<f64>, Vec<bool>)]) -> f64 {
    held.iter().map(|(x, l)| p.loss(x, l).unwrap()).sum::<f64>() / held.len() as f64
}

fn learning_run(c: f64) -> LearningRun {
    let seed = 42;
    let mut cfg = ScenarioConfig::canonical(1, seed).unwrap();
    cfg.sla.c = c;
    let router_cfg = RouterConfig::new(cfg.sla, cfg.zoo.clone(), FeatureExtractor::Passthrough { dim: cfg.dim }, seed);
    router_cfg.validate().unwrap();
    let mut router = RouterState::new(router_cfg).unwrap();
    let mut gen = TraceGenerator::new(&cfg).unwrap();
    let mut at_50 = None;
    let mut energy = 0.0;
    let mut energy_at_common = None;
    while router.predictor.k < LEARNING_STEPS || energy_at_common.is_none() {
        let rec = gen.next_record().unwrap();
        let d = router.step(&rec.to_event(), &mut EventLabels).unwrap();
        if d.explored {
            energy += d.cost_incurred;
        }
        if d.t == COMMON_HORIZON {
            energy_at_common = Some(energy);
        }
        if router.predictor.k == 50 && at_50.is_none() {
            at_50 = Some(router.predictor.clone());
        }
        if router.predictor.k == LEARNING_STEPS && d.explored {
            // Freeze the 2000-step predictor; keep stepping only for energy.
            let frozen = router.predictor.clone();
            let requests = d.t;
            // Held-out records come after everything the router has seen.
            let mut ahead = gen.clone();
            let held: Vec<(Vec<f64>, Vec<bool>)> = (0..5000)
                .map(|_| {
                    let r = ahead.next_record().unwrap();
                    let labels = r.label_bits();
                    (r.features, labels)
                })
                .collect();
            let s: Vec<Vec<f64>> = held.iter().map(|(x, _)| frozen.predict(x).unwrap()).collect();
            let aucs = (0..cfg.zoo.len())
                .map(|m| {
                    let scores: Vec<f64> = s.iter().map(|v| v[m]).collect();
                    let labels: Vec<bool> = held.iter().map(|(_, l)| l[m]).collect();
                    auc(&scores, &labels)
                })
                .collect();
            let loss_50 = held_out_loss(at_50.as_ref().unwrap(), &held);
            let loss_2000 = held_out_loss(&frozen, &held);
            while energy_at_common.is_none() {
                let rec = gen.next_record().unwrap();
                let d = router.step(&rec.to_event(), &mut EventLabels).unwrap();
                if d.explored {
                    energy += d.cost_incurred;
                }
                if d.t == COMMON_HORIZON {
                    energy_at_common = Some(energy);
                }
            }
            return LearningRun {
                c,
                requests,
                loss_50,
                loss_2000,
                aucs,
                energy_at_common: energy_at_common.unwrap(),
            };
        }
    }
    unreachable!("loop exits through the 2000-step branch")
}

fn criterion_6() -> Outcome {
    let runs: Vec<LearningRun> = std::thread::scope(|s| {
        let handles: Vec<_> = [0.01, 0.1, 1.0].map(|c| s.spawn(move || learning_run(c))).into_iter().collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &runs {
        pass &= r.aucs.iter().all(|&a| a >= 0.9) && r.loss_2000 < r.loss_50;
        parts.push(format!(
            "c={}: {} requests, loss {:.4} -> {:.4}, AUC {:?}, exploration energy by t={} {:.1} MJ",
            r.c,
            r.requests,
            r.loss_50,
            r.loss_2000,
            r.aucs.iter().map(|a| (a * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            COMMON_HORIZON,
            r.energy_at_common / 1e6
        ));
    }
    pass &= runs.windows(2).all(|w| w[1].energy_at_common > w[0].energy_at_common);
    check(pass, parts.join("; "))
}

/// Independent enumeration: every model's score, the minimum, then the
/// cheapest among minimizers, then the lowest index.
fn brute_force(v: f64, q: f64, alpha: f64, costs: &[f64], s_hat: &[f64]) -> usize {
    let scores: Vec<f64> = costs.iter().zip(s_hat).map(|(c, s)| v * c + q * (alpha - s)).collect();
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let mut best: Option<usize> = None;
    for m in 0..costs.len() {
        if scores[m] == min && best.is_none_or(|b| costs[m] < costs[b]) {
            best = Some(m);
        }
    }
    best.unwrap()
}

fn criterion_7() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut agree = 0;
    for i in 0..10_000 {
        let m = rng.gen_range(1..8);
        // Every fourth instance uses a coarse grid so ties actually occur.
        let coarse = i % 4 == 0;
        let draw = |rng: &mut StdRng, lo: f64, hi: f64| {
            if coarse {
                (rng.gen_range(lo..hi) * 4.0).round() / 4.0
            } else {
                rng.gen_range(lo..hi)
            }
        };
        let v = draw(&mut rng, 0.0, 2.0);
        let q = draw(&mut rng, 0.0, 50.0);
        let alpha = rng.gen_range(0.0..1.0);
        let costs: Vec<f64> = (0..m).map(|_| draw(&mut rng, 0.25, 10.0)).collect();
        let s_hat: Vec<f64> = (0..m).map(|_| draw(&mut rng, 0.0, 1.0)).collect();
        if solve_per_request(v, q, alpha, &costs, &s_hat).unwrap().0 == brute_force(v, q, alpha, &costs, &s_hat) {
            agree += 1;
        }
    }
    let mut cheapest = 0;
    for _ in 0..1000 {
        let m = rng.gen_range(1..8);
        let v = rng.gen_range(1e-6..1.0);
        let costs: Vec<f64> = (0..m).map(|_| rng.gen_range(0.01..10.0)).collect();
        let s_hat: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let min_cost = costs.iter().copied().fold(f64::INFINITY, f64::min);
        let chosen = solve_per_request(v, 0.0, rng.gen_range(0.0..1.0), &costs, &s_hat).unwrap();
        if costs[chosen.0] == min_cost {
            cheapest += 1;
        }
    }
    check(
        agree == 10_000 && cheapest == 1000,
        format!("enumeration agreement {agree}/10000; Q=0 picks the cheapest {cheapest}/1000"),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut ok = 0;
    let mut worst_gap = f64::INFINITY;
    for _ in 0..1000 {
        let n = rng.gen_range(1..8);
        let acc: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let max = acc.iter().copied().fold(0.0, f64::max);
        let alpha = rng.gen_range(0.0..=max);
        let g = calibrate_guessing(&acc, alpha).unwrap();
        let sum: f64 = g.probs.iter().sum();
        let expected: f64 = g.probs.iter().zip(&acc).map(|(p, a)| p * a).sum();
        let simplex = g.probs.iter().all(|&p| p >= 0.0) && (sum - 1.0).abs() <= 1e-9;
        worst_gap = worst_gap.min(expected - alpha);
        if simplex && expected >= alpha - 1e-6 {
            ok += 1;
        }
    }
    let mut rejected = 0;
    for _ in 0..100 {
        let acc: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..0.9)).collect();
        let max = acc.iter().copied().fold(0.0, f64::max);
        let alpha = rng.gen_range(max + 1e-6..1.0);
        if matches!(calibrate_guessing(&acc, alpha), Err(CoreError::Infeasible { .. })) {
            rejected += 1;
        }
    }
    check(
        ok == 1000 && rejected == 100,
        format!("feasible {ok}/1000 (worst E[acc] - alpha {worst_gap:.2e}); infeasible rejected {rejected}/100"),
    )
}

const TENANT_TOML: &str = r#"
segment_records = 32

[[tenants]]
id = "acceptance"
seed = 9
shadow_exploration = true
sla = { alpha = 0.66, v = 0.001, c = 0.3 }
extractor = { kind = "hashed_tokens", dim = 32, seed = 1 }
models = [
  { name = "L1B", base_cost = 120000.0 },
  { name = "L8B", base_cost = 540000.0 },
  { name = "L70B", base_cost = 2910000.0, cost_per_token = 1.5 },
]
"#;

fn service_config(dir: &Path) -> ServiceConfig {
    let mut cfg = ServiceConfig::from_toml(TENANT_TOML).unwrap();
    cfg.data_dir = dir.to_path_buf();
    cfg
}

fn open_tenant(cfg: &ServiceConfig) -> Tenant {
    Tenant::open(cfg.tenants[0].clone(), &cfg.data_dir, cfg.segment_records).unwrap()
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let target = to.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            copy_dir(&e.path(), &target);
        } else {
            fs::copy(e.path(), target).unwrap();
        }
    }
}

/// (segment, record start, record end) for every log record in order.
fn record_spans(log_dir: &Path) -> Vec<(PathBuf, usize, usize)> {
    let mut segments: Vec<PathBuf> = fs::read_dir(log_dir).unwrap().map(|e| e.unwrap().path()).collect();
    segments.sort();
    let mut spans = Vec::new();
    for path in segments {
        let bytes = fs::read(&path).unwrap();
        let mut start = 0;
        for (i, &b) in bytes.iter().enumerate() {
            if b == b'\n' {
                spans.push((path.clone(), start, i + 1));
                start = i + 1;
            }
        }
    }
    spans
}

fn criterion_9() -> Outcome {
    // Identical (trace, seed) gives byte-identical decision CSVs.
    let cfg = ScenarioConfig::canonical(5000, 43).unwrap();
    let csv = |trace: &ExperimentTrace| {
        let run = run_experiment(trace, &cfg.zoo, &PolicySpec::messplus(), &cfg.sla, 43).unwrap();
        let mut buf = Vec::new();
        run.stream.write_csv(&mut buf).unwrap();
        buf
    };
    let a = csv(&generate_trace(&cfg).unwrap());
    let b = csv(&generate_trace(&cfg).unwrap());
    let csv_identical = a == b && !a.is_empty();

    // Event-log replay after a crash at three random offsets.
    let source = tempfile::tempdir().unwrap();
    let scfg = service_config(source.path());
    let mut rng = StdRng::seed_from_u64(99);
    let words = ["sum", "the", "series", "prove", "that", "name", "a", "river", "in", "Peru"];
    let events = 300;
    let mut states = Vec::new();
    {
        let tenant = open_tenant(&scfg);
        states.push(tenant.view().router);
        while states.len() <= events {
            let pending = tenant.view().router.pending.first().cloned();
            match pending {
                Some(p) if rng.gen_bool(0.5) => {
                    if p.exploration_features.is_some() {
                        let labels = (0..3).map(|_| rng.gen_bool(0.65)).collect();
                        tenant.labels(p.t, labels).unwrap();
                    } else {
                        tenant.feedback(p.t, rng.gen_bool(0.65)).unwrap();
                    }
                }
                _ => {
                    let n = rng.gen_range(2..9);
                    let text: Vec<&str> = (0..n).map(|_| words[rng.gen_range(0..words.len())]).collect();
                    tenant
                        .route(RequestInput::Text(text.join(" ")), rng.gen_range(8..400), None)
                        .unwrap();
                }
            }
            states.push(tenant.view().router);
        }
    }
    let mut offsets: Vec<usize> = (0..3).map(|_| rng.gen_range(1..events)).collect();
    offsets.sort();
    let mut exact = 0;
    for &k in &offsets {
        let copy = tempfile::tempdir().unwrap();
        copy_dir(source.path(), copy.path());
        let log_dir = copy.path().join("tenants/acceptance/log");
        let spans = record_spans(&log_dir);
        let (path, start, end) = spans[k].clone();
        for (p, _, _) in &spans[k..] {
            if *p != path && p.exists() {
                fs::remove_file(p).unwrap();
            }
        }
        let torn = start + rng.gen_range(1..end - start);
        fs::OpenOptions::new().write(true).open(&path).unwrap().set_len(torn as u64).unwrap();

        let view = open_tenant(&service_config(copy.path())).view();
        let want = &states[k];
        let bits = |z: &[f64]| z.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        if view.log_offset == k as u64
            && view.router.queue.q.to_bits() == want.queue.q.to_bits()
            && bits(&view.router.predictor.z) == bits(&want.predictor.z)
            && view.router.t == want.t
        {
            exact += 1;
        }
    }
    let trained = states.last().unwrap().predictor.k;
    check(
        csv_identical && exact == 3 && trained > 0,
        format!(
            "decision CSV identical: {csv_identical} ({} bytes); crash offsets {offsets:?}: {exact}/3 exact (Q, z, t); {trained} SGD steps in log",
            a.len()
        ),
    )
}

fn criterion_10() -> Outcome {
    let avg = overhead_summary(&[(16.43, 414.69)]).unwrap();
    // Per-benchmark predictor and call costs whose means are 16.43 J and 414.69 J.
    let scenarios = [
        (5.75, 589.97),
        (5.69, 516.07),
        (16.80, 236.17),
        (41.13, 833.21),
        (15.38, 273.44),
        (15.12, 263.64),
        (26.67, 304.45),
        (4.89, 300.56),
    ];
    let per = overhead_summary(&scenarios).unwrap();
    let per_ok = per.per_scenario_pct.len() == scenarios.len()
        && per
            .per_scenario_pct
            .iter()
            .zip(&scenarios)
            .all(|(pct, (p, c))| (pct - 100.0 * p / c).abs() < 1e-9);
    check(
        (avg.ratio_of_averages_pct - 3.96).abs() <= 0.01 && (per.ratio_of_averages_pct - 3.96).abs() <= 0.01 && per_ok,
        format!(
            "ratio of averages {:.4}% (8 scenarios: {:.4}%); average of ratios {:.4}%",
            avg.ratio_of_averages_pct, per.ratio_of_averages_pct, per.average_of_ratios_pct
        ),
    )
}

fn main() {
    // `cargo test -- <filter>` passes libtest arguments; a filter that is not
    // "acceptance" skips the suite.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }

    let results: Vec<(u32, Outcome)> = std::thread::scope(|s| {
        let canonical = s.spawn(canonical_runs);
        let c3 = s.spawn(criterion_3);
        let c4 = s.spawn(criterion_4);
        let c6 = s.spawn(criterion_6);
        let c9 = s.spawn(criterion_9);
        let c5 = criterion_5();
        let c7 = criterion_7();
        let c8 = criterion_8();
        let c10 = criterion_10();
        let runs = canonical.join().unwrap();
        vec![
            (1, criterion_1(&runs)),
            (2, criterion_2(&runs)),
            (3, c3.join().unwrap()),
            (4, c4.join().unwrap()),
            (5, c5),
            (6, c6.join().unwrap()),
            (7, c7),
            (8, c8),
            (9, c9.join().unwrap()),
            (10, c10),
        ]
    });

    let mut failed = 0;
    for (n, o) in &results {
        println!("criterion {n:>2}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
