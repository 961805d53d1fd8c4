#![allow(dead_code)]

use greenshield::dataset::Label;
use greenshield::models::{KernelChoice, TrainConfig, TrainingData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point in the ball of `radius` around `center`.
fn in_ball(center: &[f64], radius: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let off: Vec<f64> = center.iter().map(|_| r.random_range(-radius..=radius)).collect();
        if off.iter().map(|x| x * x).sum::<f64>() <= radius * radius {
            return center.iter().zip(&off).map(|(c, o)| c + o).collect();
        }
    }
}

/// Two balls of radius 0.5 at +(2,2,2) (fire) and -(2,2,2), interleaved.
pub fn clusters(n: usize, seed: u64) -> TrainingData {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let fire = i % 2 == 0;
        let c = if fire { 2.0 } else { -2.0 };
        rows.push(in_ball(&[c, c, c], 0.5, &mut r));
        labels.push(Label::from_bool(fire));
    }
    TrainingData::new(rows, labels).unwrap()
}

/// Four 2-D blobs at (±1, ±1); fire where the signs agree.
pub fn xor(n: usize, seed: u64) -> TrainingData {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (sx, sy) = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)][i % 4];
        rows.push(in_ball(&[sx, sy], 0.4, &mut r));
        labels.push(Label::from_bool(sx * sy > 0.0));
    }
    TrainingData::new(rows, labels).unwrap()
}

/// First `n_train` rows for training, the rest for testing.
pub fn holdout(data: &TrainingData, n_train: usize) -> (TrainingData, TrainingData) {
    let (r, l) = (data.rows(), data.labels());
    (
        TrainingData::new(r[..n_train].to_vec(), l[..n_train].to_vec()).unwrap(),
        TrainingData::new(r[n_train..].to_vec(), l[n_train..].to_vec()).unwrap(),
    )
}

pub fn linear_svm(c: f64) -> TrainConfig {
    let mut cfg = TrainConfig::default();
    cfg.svm.kernel = KernelChoice::Linear;
    cfg.svm.c = c;
    cfg
}

/// Random rows inside the feature bounds.
pub fn random_inputs(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            [
                r.random_range(-10.0..50.0),
                r.random_range(0.0..100.0),
                r.random_range(15.0..30.0),
            ]
        })
        .collect()
}

pub fn accuracy(pred: impl Fn(&[f64]) -> Label, data: &TrainingData) -> f64 {
    let hits = data
        .rows()
        .iter()
        .zip(data.labels())
        .filter(|(x, &y)| pred(x) == y)
        .count();
    hits as f64 / data.len() as f64
}

/// Status, headers and body of one HTTP exchange. Error statuses are
/// returned, not raised.
pub struct Reply {
    pub status: u16,
    pub headers: ureq::http::HeaderMap,
    pub body: String,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }
}

pub fn http(method: &str, url: &str, body: Option<&str>, headers: &[(&str, &str)]) -> Reply {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();
    let mut resp = match method {
        "GET" => {
            let mut req = agent.get(url);
            for (k, v) in headers {
                req = req.header(*k, *v);
            }
            req.call()
        }
        _ => {
            let mut req = agent.post(url).content_type("application/json");
            for (k, v) in headers {
                req = req.header(*k, *v);
            }
            req.send(body.unwrap_or(""))
        }
    }
    .expect("transport error");
    Reply {
        status: resp.status().as_u16(),
        headers: resp.headers().clone(),
        body: resp.body_mut().read_to_string().unwrap(),
    }
}

/// Trains on 300 synthetic rows and writes artifacts into a fresh tempdir.
pub fn trained_dir() -> tempfile::TempDir {
    use greenshield::dataset::synth;
    use greenshield::pipeline::{train_all, write_artifacts};
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = TrainConfig::default();
    cfg.forest.n_trees = 15;
    let outcome = train_all(&synth::generate(300, 42).unwrap(), &cfg).unwrap();
    write_artifacts(&outcome, dir.path(), None).unwrap();
    dir
}

/// Accepts one HTTP request on a local port, answers 200 and hands back
/// the request body.
pub fn one_shot_receiver() -> (String, std::sync::mpsc::Receiver<String>) {
    use std::io::{BufRead, BufReader, Read, Write};
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/hook", listener.local_addr().unwrap());
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut len = 0usize;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line.trim().is_empty() {
                break;
            }
            if let Some((k, v)) = line.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    len = v.trim().parse().unwrap();
                }
            }
        }
        let mut body = vec![0; len];
        reader.read_exact(&mut body).unwrap();
        let mut stream = stream;
        stream
            .write_all(b"HTTP/1.1 200 OK\r\nContent-Length: 0\r\nConnection: close\r\n\r\n")
            .unwrap();
        let _ = tx.send(String::from_utf8(body).unwrap());
    });
    (url, rx)
}
