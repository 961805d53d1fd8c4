//! The HTTP contract, exercised over real sockets.

mod common;

use std::time::{Duration, Instant};

use clap::Parser;
use common::{http, one_shot_receiver, trained_dir, Reply};
use greenshield::cli::{execute, Cli};
use greenshield::edge::WebhookSink;
use greenshield::service::{spawn, ServiceConfig, ServiceHandle};
use std::sync::Arc;

fn serve(model: Option<&std::path::Path>) -> ServiceHandle {
    let mut config = ServiceConfig::new();
    config.port = 0;
    config.model = model.map(|p| p.to_path_buf());
    spawn(config).unwrap()
}

fn post(s: &ServiceHandle, path: &str, body: &str) -> Reply {
    http("POST", &s.url(path), Some(body), &[])
}

fn get(s: &ServiceHandle, path: &str) -> Reply {
    http("GET", &s.url(path), None, &[])
}

fn telemetry(node: &str, ts: u64, temp: f64, flame: bool) -> String {
    format!(r#"{{"node_id":"{node}","ts_ms":{ts},"temp":{temp},"rh":40,"oxy":21,"flame":{flame}}}"#)
}

#[test]
fn predictions_match_the_cli_byte_for_byte() {
    let dir = trained_dir();
    let s = serve(Some(dir.path()));
    for (temp, rh, oxy) in common::random_inputs(20, 5).into_iter().map(|v| (v[0], v[1], v[2])) {
        let r = post(&s, "/api/v1/predict", &format!(r#"{{"temp":{temp},"rh":{rh},"oxy":{oxy}}}"#));
        assert_eq!(r.status, 200, "{}", r.body);
        let cli = Cli::try_parse_from([
            "greenshield".to_string(),
            "predict".into(),
            "--model".into(),
            dir.path().display().to_string(),
            format!("--temp={temp}"),
            format!("--rh={rh}"),
            format!("--oxy={oxy}"),
            "--format=json".into(),
        ])
        .unwrap();
        let mut out = Vec::new();
        execute(cli, &mut out).unwrap();
        assert_eq!(r.body.as_bytes(), out.as_slice());
        let p = r.json()["probability"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn bad_predict_bodies_name_the_field() {
    let dir = trained_dir();
    let s = serve(Some(dir.path()));
    for (body, code, field) in [
        (r#"{"temp":30,"rh":140,"oxy":21}"#, "out_of_range", Some("rh")),
        (r#"{"temp":30,"oxy":21}"#, "missing_field", Some("rh")),
        (r#"{"temp":"hot","rh":40,"oxy":21}"#, "invalid_type", Some("temp")),
        ("not json", "malformed_body", None),
    ] {
        let r = post(&s, "/api/v1/predict", body);
        assert_eq!(r.status, 400, "{body}");
        let e = &r.json()["error"];
        assert_eq!(e["code"], code);
        assert!(e["message"].is_string());
        assert_eq!(e["field"].as_str(), field);
    }
    assert_eq!(get(&s, "/api/v1/nope").status, 404);
}

#[test]
fn no_model_means_503() {
    let dir = tempfile::tempdir().unwrap();
    let s = serve(Some(&dir.path().join("absent.json")));
    let r = post(&s, "/api/v1/predict", r#"{"temp":30,"rh":40,"oxy":21}"#);
    assert_eq!(r.status, 503);
    assert_eq!(r.json()["error"]["code"], "no_model");
    assert_eq!(get(&s, "/api/v1/model").status, 503);
    // telemetry does not need a model
    assert_eq!(post(&s, "/api/v1/telemetry", &telemetry("n1", 1, 25.0, false)).status, 202);
}

#[test]
fn malformed_model_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"kind\": 3}").unwrap();
    let mut config = ServiceConfig::new();
    config.port = 0;
    config.model = Some(path);
    assert!(spawn(config).is_err());
}

#[test]
fn flame_telemetry_shows_up_in_alerts() {
    let s = serve(None);
    let start = Instant::now();
    let r = post(&s, "/api/v1/telemetry", &telemetry("fresh-node", 1_717_200_000_000, 31.5, true));
    assert_eq!(r.status, 202);
    assert_eq!(r.json(), serde_json::json!({"accepted": true, "alerts": 2}));
    let page = loop {
        let page = get(&s, "/api/v1/alerts").json();
        if page["events"].as_array().unwrap().len() == 2 || start.elapsed() > Duration::from_secs(1) {
            break page;
        }
        std::thread::sleep(Duration::from_millis(10));
    };
    assert!(start.elapsed() < Duration::from_secs(1));
    let events = page["events"].as_array().unwrap();
    assert_eq!(events.len(), 2);
    // newest first, so the later SMS leads
    assert_eq!(events[0]["kind"], "sms");
    assert_eq!(events[1]["kind"], "buzzer");
    assert_eq!(events[0]["cause"]["type"], "flame");
    assert!(events[0]["message"].as_str().unwrap().starts_with("GREENSHIELD ALERT node=fresh-node "));
    assert!(page["cursor"].is_null());
}

#[test]
fn stale_and_duplicate_timestamps_conflict() {
    let s = serve(None);
    assert_eq!(post(&s, "/api/v1/telemetry", &telemetry("n1", 2000, 25.0, false)).status, 202);
    for ts in [2000, 1000] {
        let r = post(&s, "/api/v1/telemetry", &telemetry("n1", ts, 25.0, false));
        assert_eq!(r.status, 409);
        assert_eq!(r.json()["error"]["code"], "stale_timestamp");
    }
    // another node keeps its own clock
    assert_eq!(post(&s, "/api/v1/telemetry", &telemetry("n2", 1000, 25.0, false)).status, 202);
    let r = post(&s, "/api/v1/telemetry", &telemetry("n1", 3000, 99.0, false));
    assert_eq!(r.status, 400);
    assert_eq!(r.json()["error"]["field"], "temp");
}

#[test]
fn alert_pages_walk_backwards_in_time() {
    let s = serve(None);
    // three flames on one node give six events
    for ts in [1000, 2000, 3000] {
        post(&s, "/api/v1/telemetry", &telemetry("n1", ts, 25.0, true));
    }
    let mut seen = Vec::new();
    let mut path = "/api/v1/alerts?limit=2".to_string();
    loop {
        let page = get(&s, &path).json();
        let events = page["events"].as_array().unwrap().clone();
        assert!(events.len() <= 2);
        seen.extend(events.iter().map(|e| (e["ts_ms"].as_u64().unwrap(), e["kind"].as_str().unwrap().to_string())));
        match page["cursor"].as_str() {
            Some(c) => path = format!("/api/v1/alerts?limit=2&after={c}"),
            None => break,
        }
    }
    assert_eq!(seen.len(), 6);
    let ts: Vec<u64> = seen.iter().map(|e| e.0).collect();
    assert_eq!(ts, [3000, 3000, 2000, 2000, 1000, 1000]);

    for bad in ["limit=0", "limit=501", "limit=two", "after=zzz"] {
        let r = get(&s, &format!("/api/v1/alerts?{bad}"));
        assert_eq!(r.status, 400, "{bad}");
    }
    assert_eq!(get(&s, "/api/v1/alerts?after=zzz").json()["error"]["code"], "invalid_cursor");
}

#[test]
fn model_metadata() {
    let dir = trained_dir();
    let s = serve(Some(dir.path()));
    let m = get(&s, "/api/v1/model").json();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("selected.json")).unwrap()).unwrap();
    assert_eq!(m["kind"], manifest["kind"]);
    assert_eq!(m["version"], manifest["version"]);
    assert!(m["trained_at"].is_null());
    assert!(m["metrics"]["accuracy"].as_f64().unwrap() > 0.8);
}

#[test]
fn alert_log_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("alerts.jsonl");
    let config = || {
        let mut c = ServiceConfig::new();
        c.port = 0;
        c.alert_log = Some(log.clone());
        c
    };
    let first = spawn(config()).unwrap();
    post(&first, "/api/v1/telemetry", &telemetry("n1", 5000, 25.0, true));
    let before = get(&first, "/api/v1/alerts").body;
    first.shutdown().unwrap();
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 2);

    let second = spawn(config()).unwrap();
    assert_eq!(get(&second, "/api/v1/alerts").body, before);
}

#[test]
fn cors_headers() {
    let s = serve(None);
    let r = http("GET", &s.url("/api/v1/alerts"), None, &[("Origin", "http://ui.example")]);
    assert_eq!(r.headers["access-control-allow-origin"], "*");

    let mut config = ServiceConfig::new();
    config.port = 0;
    config.cors_origin = Some("http://ui.example".into());
    let s = spawn(config).unwrap();
    let r = http("GET", &s.url("/api/v1/alerts"), None, &[("Origin", "http://ui.example")]);
    assert_eq!(r.headers["access-control-allow-origin"], "http://ui.example");
    let r = http("GET", &s.url("/api/v1/alerts"), None, &[("Origin", "http://evil.example")]);
    // the configured origin is echoed, never the caller's
    assert_eq!(r.headers["access-control-allow-origin"], "http://ui.example");
}

#[test]
fn webhook_receives_the_sms_text() {
    let (url, rx) = one_shot_receiver();
    let mut config = ServiceConfig::new();
    config.port = 0;
    config.sinks = vec![Arc::new(WebhookSink::new(url))];
    let s = spawn(config).unwrap();
    post(&s, "/api/v1/telemetry", &telemetry("n7", 1_717_200_000_000, 31.5, true));
    let body = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_eq!(
        body,
        "GREENSHIELD ALERT node=n7 time=2024-06-01T00:00:00Z cause=FLAME temp=31.5C rh=40.0% oxy=21.0%"
    );
}
