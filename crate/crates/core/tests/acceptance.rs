//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use clap::Parser;
use greenshield::cli::{execute, Cli};
use greenshield::dataset::Label;
use greenshield::edge::{
    run_scenario, AlertCause, AlertKind, RunningStats, ScenarioScript, SensorReading, ThresholdConfig,
    ThresholdState,
};
use greenshield::metrics::{auc, confusion, roc_curve, select_model, EvalReport};
use greenshield::models::forest::{self, bootstrap_indices};
use greenshield::models::logistic::loss_and_gradient;
use greenshield::models::tree::{build_tree, TreeParams};
use greenshield::models::{self, svm, to_json, ModelKind, TrainConfig};
use greenshield::service::{spawn, ServiceConfig};
use rand::Rng;

type Check = Result<(), String>;
type Criterion = (&'static str, Option<Duration>, Box<dyn Fn() -> Check>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn cli(args: &[&str]) -> Result<String, String> {
    let parsed = Cli::try_parse_from(std::iter::once("greenshield").chain(args.iter().copied()))
        .map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    execute(parsed, &mut out).map_err(|e| e.to_string())?;
    Ok(String::from_utf8(out).unwrap())
}

fn random_labels(n: usize, r: &mut impl Rng) -> Vec<Label> {
    (0..n).map(|_| Label::from_bool(r.random_bool(0.5))).collect()
}

fn metrics_oracle() -> Check {
    let mut r = common::rng(101);
    for _ in 0..500 {
        let n = r.random_range(1..=50);
        let (pred, truth) = (random_labels(n, &mut r), random_labels(n, &mut r));
        let (mut tp, mut tn, mut fp, mut fneg) = (0, 0, 0, 0);
        for (p, t) in pred.iter().zip(&truth) {
            match (p.is_fire(), t.is_fire()) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
            }
        }
        let div = |a: i32, b: i32| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let (prec, rec) = (div(tp, tp + fp), div(tp, tp + fneg));
        let f1 = if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
        let c = confusion(&pred, &truth).map_err(|e| e.to_string())?;
        let got = (c.accuracy(), c.precision(), c.recall(), c.f1());
        let want = (div(tp + tn, n as i32), prec, rec, f1);
        ensure!(got == want, "confusion {got:?} != recount {want:?}");
    }
    let mut done = 0;
    while done < 200 {
        let n = r.random_range(2..=60);
        let truth = random_labels(n, &mut r);
        if !truth.contains(&Label::Fire) || !truth.contains(&Label::NotFire) {
            continue;
        }
        let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..10) as f64 / 10.0).collect();
        let (mut wins, mut pairs) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                if truth[i].is_fire() && !truth[j].is_fire() {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
        }
        let a = auc(&roc_curve(&scores, &truth).map_err(|e| e.to_string())?);
        ensure!((a - wins / pairs).abs() < 1e-12, "auc {a} vs mann-whitney {}", wins / pairs);
        done += 1;
    }
    Ok(())
}

fn gradient_check() -> Check {
    let mut r = common::rng(102);
    let rows: Vec<Vec<f64>> = (0..40).map(|_| (0..3).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
    let labels = random_labels(40, &mut r);
    let h = 1e-5;
    for _ in 0..20 {
        let theta: Vec<f64> = (0..4).map(|_| r.random_range(-3.0..3.0)).collect();
        let (_, grad) = loss_and_gradient(&theta, &rows, &labels);
        let mut diff = 0.0;
        for k in 0..4 {
            let (mut up, mut dn) = (theta.clone(), theta.clone());
            up[k] += h;
            dn[k] -= h;
            let fd = (loss_and_gradient(&up, &rows, &labels).0 - loss_and_gradient(&dn, &rows, &labels).0) / (2.0 * h);
            diff += (grad[k] - fd).powi(2);
        }
        let scale = grad.iter().map(|g| g * g).sum::<f64>().sqrt().max(1e-8);
        ensure!(diff.sqrt() / scale < 1e-5, "relative error {}", diff.sqrt() / scale);
    }
    Ok(())
}

fn separable_convergence() -> Check {
    let (train, test) = common::holdout(&common::clusters(200, 11), 160);
    for kind in ModelKind::ALL {
        let m = models::train(kind, &train, &TrainConfig::default()).map_err(|e| e.to_string())?;
        let acc = common::accuracy(|x| m.predict_label(x).unwrap(), &test);
        ensure!(acc >= 0.95, "{kind} test accuracy {acc}");
    }
    let data = common::clusters(200, 12);
    let m = svm::train(&data, &common::linear_svm(10.0)).map_err(|e| e.to_string())?;
    let acc = common::accuracy(|x| m.predict_label(x).unwrap(), &data);
    ensure!(acc == 1.0, "linear svm training accuracy {acc}");
    Ok(())
}

fn forest_reductions() -> Check {
    let data = common::clusters(120, 15);
    let mut cfg = TrainConfig::default();
    cfg.forest.n_trees = 1;
    cfg.forest.bootstrap = false;
    cfg.forest.feature_subset_size = Some(3);
    let f = forest::train(&data, &cfg).map_err(|e| e.to_string())?;
    let params = TreeParams {
        max_depth: cfg.forest.max_depth,
        min_samples_split: cfg.forest.min_samples_split,
        feature_subset_size: 3,
    };
    let idx: Vec<usize> = (0..data.len()).collect();
    let tree = build_tree(data.rows(), data.labels(), &idx, &params, &mut common::rng(0));
    let mut r = common::rng(16);
    for _ in 0..100 {
        let x: Vec<f64> = (0..3).map(|_| r.random_range(-3.0..3.0)).collect();
        ensure!(f.predict(&x).unwrap().0 == tree.predict(&x), "forest and tree disagree at {x:?}");
    }
    let mut total = 0.0;
    for _ in 0..1000 {
        let mut seen = vec![false; 1000];
        bootstrap_indices(1000, &mut r).into_iter().for_each(|i| seen[i] = true);
        total += seen.iter().filter(|&&s| s).count() as f64 / 1000.0;
    }
    let mean = total / 1000.0;
    ensure!((0.61..=0.655).contains(&mean), "distinct fraction {mean}");
    Ok(())
}

fn golden_run(dir: &std::path::Path) -> Check {
    let data = dir.join("bench.csv");
    let models_dir = dir.join("models");
    cli(&["gen-data", "--out", data.to_str().unwrap(), "--n", "500", "--seed", "42"])?;
    let out = cli(&[
        "train", "--data", data.to_str().unwrap(), "--model-out", models_dir.to_str().unwrap(),
        "--seed", "42", "--format", "json",
    ])?;
    let reports: Vec<EvalReport> = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    ensure!(reports.len() == 3, "expected three reports");
    for r in &reports {
        ensure!(r.accuracy >= 0.85, "{} accuracy {}", r.model_kind, r.accuracy);
    }
    let table: Vec<EvalReport> = [
        (ModelKind::LogisticRegression, 0.89, 0.88),
        (ModelKind::RandomForest, 0.93, 0.89),
        (ModelKind::Svm, 0.93, 0.93),
    ]
    .into_iter()
    .map(|(k, acc, f1)| {
        let mut r = EvalReport::from_predictions(k, &[Label::Fire], &[1.0], &[Label::Fire]).unwrap();
        r.accuracy = acc;
        r.f1 = f1;
        r
    })
    .collect();
    let pick = select_model(&table).map_err(|e| e.to_string())?;
    ensure!(pick == ModelKind::Svm, "selected {pick} from the published table");
    Ok(())
}

fn reading(ts: u64, temp: f64, rh: f64, oxy: f64, flame: bool) -> SensorReading {
    SensorReading { node_id: "a".into(), timestamp: ts, temp, rh, oxy, flame }
}

fn edge_properties() -> Check {
    let mut r = common::rng(103);
    for stream in 0..1000 {
        let cfg = ThresholdConfig { warmup: r.random_range(1..=40), ..ThresholdConfig::default() };
        let mut s = ThresholdState::new(cfg);
        for i in 0..r.random_range(1..=80u64) {
            let flame = r.random_bool(0.1);
            let x = reading(i, r.random_range(-50.0..60.0), r.random_range(0.0..100.0), r.random_range(0.0..100.0), flame);
            let warm = s.in_warmup();
            let alerts = s.ingest(&x).map_err(|e| e.to_string())?;
            let flames: Vec<_> = alerts.iter().filter(|a| a.cause == AlertCause::Flame).collect();
            if flame {
                ensure!(
                    flames.len() == 2 && flames[0].kind == AlertKind::Buzzer && flames[1].kind == AlertKind::Sms,
                    "stream {stream}: flame did not give buzzer+sms"
                );
            } else {
                ensure!(flames.is_empty(), "stream {stream}: flame alert without flame");
            }
            ensure!(!warm || alerts.len() == flames.len(), "stream {stream}: anomaly during warmup");
        }
    }

    // +10 sigma on temperature right after warmup
    let cfg = ThresholdConfig::default();
    let mut s = ThresholdState::new(cfg);
    let mut stats = RunningStats::new();
    let mut ts = 0;
    while s.in_warmup() {
        let t = 25.0 + r.random_range(-1.0..1.0);
        stats.push(t);
        s.ingest(&reading(ts, t, 50.0, 21.0, false)).map_err(|e| e.to_string())?;
        ts += 1;
    }
    let step = stats.mean() + 10.0 * stats.variance().sqrt();
    let alerts = s.ingest(&reading(ts, step, 50.0, 21.0, false)).map_err(|e| e.to_string())?;
    ensure!(
        alerts.iter().any(|a| matches!(a.cause, AlertCause::Anomaly { .. })),
        "+10 sigma step did not alert on the first reading"
    );

    let script = ScenarioScript::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/demo_scenario.json"))
        .map_err(|e| e.to_string())?;
    let a = run_scenario(&script, &[]).map_err(|e| e.to_string())?.to_json_lines();
    let b = run_scenario(&script, &[]).map_err(|e| e.to_string())?.to_json_lines();
    ensure!(!a.is_empty() && a == b, "scenario replay differs between runs");
    Ok(())
}

fn serialization_round_trip() -> Check {
    let data = common::clusters(160, 20);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = TrainConfig::default();
    cfg.forest.n_trees = 20;
    for kind in ModelKind::ALL {
        let m = models::train(kind, &data, &cfg).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("{kind}.json"));
        models::save_model(&m, &path).map_err(|e| e.to_string())?;
        let back = models::load_model(&path).map_err(|e| e.to_string())?;
        ensure!(to_json(&back) == to_json(&m), "{kind}: document changed");
        for x in common::random_inputs(100, 21) {
            let x = [x[0] / 10.0 - 2.0, x[1] / 25.0 - 2.0, x[2] / 5.0 - 4.0];
            let (p, q) = (m.predict_probability(&x).unwrap(), back.predict_probability(&x).unwrap());
            ensure!(p.to_bits() == q.to_bits(), "{kind}: {p} != {q}");
        }
    }
    Ok(())
}

fn service_contract(dir: &std::path::Path) -> Check {
    let models_dir = dir.join("models");
    let mut config = ServiceConfig::new();
    config.port = 0;
    config.model = Some(models_dir.join("selected.json"));
    let s = spawn(config).map_err(|e| e.to_string())?;
    for v in common::random_inputs(20, 104) {
        let (t, h, o) = (v[0], v[1], v[2]);
        let reply = common::http(
            "POST",
            &s.url("/api/v1/predict"),
            Some(&format!(r#"{{"temp":{t},"rh":{h},"oxy":{o}}}"#)),
            &[],
        );
        let local = cli(&[
            "predict", "--model", models_dir.to_str().unwrap(),
            &format!("--temp={t}"), &format!("--rh={h}"), &format!("--oxy={o}"), "--format=json",
        ])?;
        ensure!(reply.status == 200 && reply.body == local, "predict mismatch: {} vs {local}", reply.body);
    }
    for (body, field) in [
        ("{", None),
        (r#"{"temp":30,"rh":140,"oxy":21}"#, Some("rh")),
        (r#"{"rh":40,"oxy":21}"#, Some("temp")),
    ] {
        let reply = common::http("POST", &s.url("/api/v1/predict"), Some(body), &[]);
        let v = reply.json();
        ensure!(
            reply.status == 400 && v["error"]["code"].is_string() && v["error"]["message"].is_string()
                && v["error"]["field"].as_str() == field,
            "bad envelope for {body}: {} {}", reply.status, reply.body
        );
    }
    let start = Instant::now();
    let reply = common::http(
        "POST",
        &s.url("/api/v1/telemetry"),
        Some(r#"{"node_id":"n1","ts_ms":1717200000000,"temp":31,"rh":30,"oxy":21,"flame":true}"#),
        &[],
    );
    ensure!(reply.status == 202, "telemetry status {}", reply.status);
    loop {
        let page = common::http("GET", &s.url("/api/v1/alerts"), None, &[]).json();
        let seen = page["events"]
            .as_array()
            .is_some_and(|e| e.iter().any(|a| a["cause"]["type"] == "flame"));
        if seen {
            break;
        }
        ensure!(start.elapsed() < Duration::from_secs(1), "flame alert not visible within 1 s");
        std::thread::sleep(Duration::from_millis(10));
    }
    Ok(())
}

fn main() {
    let dir = tempfile::tempdir().expect("tempdir");
    let golden_dir = dir.path().to_path_buf();
    let criteria: Vec<Criterion> = vec![
        ("metrics oracle equivalence", Some(Duration::from_secs(5)), Box::new(metrics_oracle)),
        ("logistic gradient check", Some(Duration::from_secs(1)), Box::new(gradient_check)),
        ("separable-data convergence", Some(Duration::from_secs(10)), Box::new(separable_convergence)),
        ("forest reductions", None, Box::new(forest_reductions)),
        ("benchmark golden run", Some(Duration::from_secs(60)), {
            let d = golden_dir.clone();
            Box::new(move || golden_run(&d))
        }),
        ("edge alert properties", Some(Duration::from_secs(10)), Box::new(edge_properties)),
        ("serialization round-trip", None, Box::new(serialization_round_trip)),
        ("service contract", None, {
            let d = golden_dir.clone();
            Box::new(move || service_contract(&d))
        }),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let mut result = check();
        let took = start.elapsed();
        if let (Ok(()), Some(b)) = (&result, budget) {
            if took > b {
                result = Err(format!("took {took:.2?}, budget {b:?}"));
            }
        }
        match result {
            Ok(()) => println!("PASS {name} ({took:.2?})"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({took:.2?}): {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
