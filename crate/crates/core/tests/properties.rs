//! Invariants checked over generated inputs.

mod common;

use greenshield::dataset::{
    impute_missing, read_csv, remove_outliers, split, synth, write_csv, Column, FeatureVector, Label,
    LabeledSample, RawRecord, ScalingParams,
};
use greenshield::edge::{AlertCause, AlertKind, SensorReading, ThresholdConfig, ThresholdState};
use greenshield::metrics::{auc, confusion, roc_curve, select_model, EvalReport};
use greenshield::models::logistic::train_with_history;
use greenshield::models::{self, ModelKind, TrainConfig, TrainingData};
use proptest::prelude::*;

fn label() -> impl Strategy<Value = Label> {
    any::<bool>().prop_map(Label::from_bool)
}

/// Records with a recognizable `day` column so order can be traced.
fn tagged_records(vals: &[(f64, f64, f64, bool)], holes: &[bool]) -> Vec<RawRecord> {
    vals.iter()
        .enumerate()
        .map(|(i, &(t, h, o, fire))| {
            let mut v = [1.0, 6.0, 2012.0, t, h, 10.0, 0.0, o, 80.0, 5.0, 10.0, 2.0, 5.0, 1.0];
            v[0] = i as f64;
            let mut r = RawRecord::from_values(v, Label::from_bool(fire));
            if holes.get(i).copied().unwrap_or(false) && i % 3 == 0 {
                r.set(Column::Rh, None);
            }
            r
        })
        .collect()
}

fn reading_values() -> impl Strategy<Value = (f64, f64, f64, bool)> {
    (-10.0..50.0f64, 0.0..100.0f64, 15.0..30.0f64, any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(n in 50usize..120, seed in any::<u64>()) {
        let records = synth::generate(n, seed).unwrap();
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        let mut buf2 = Vec::new();
        write_csv(&back, &mut buf2).unwrap();
        prop_assert_eq!(&back, &read_csv(buf2.as_slice()).unwrap());
        prop_assert_eq!(buf, buf2);
    }

    #[test]
    fn cleaning_preserves_order(
        vals in prop::collection::vec(reading_values(), 4..60),
        holes in prop::collection::vec(any::<bool>(), 60),
    ) {
        let records = tagged_records(&vals, &holes);
        let imputed = impute_missing(&records).unwrap();
        let days: Vec<f64> = imputed.iter().map(|r| r.get(Column::Day).unwrap()).collect();
        prop_assert_eq!(days.len(), records.len());
        prop_assert!(days.windows(2).all(|w| w[0] < w[1]));
        if let Ok(kept) = remove_outliers(&imputed) {
            let days: Vec<f64> = kept.iter().map(|r| r.get(Column::Day).unwrap()).collect();
            prop_assert!(days.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn scaling_standardizes(rows in prop::collection::vec(prop::collection::vec(-1e3..1e3f64, 3), 2..80)) {
        let s = ScalingParams::fit(&rows).unwrap();
        let z: Vec<Vec<f64>> = rows.iter().map(|r| s.transform(r)).collect();
        let n = rows.len() as f64;
        for j in 0..3 {
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / n;
            let sd = (z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() < 1e-9);
            if s.stddev[j] > 0.0 {
                prop_assert!((sd - 1.0).abs() < 1e-9, "sd {}", sd);
            }
        }
    }

    #[test]
    fn split_partitions_indices(n in 5usize..300, seed in any::<u64>()) {
        let samples: Vec<LabeledSample> = (0..n)
            .map(|i| LabeledSample::new(FeatureVector { temp: i as f64, rh: 0.0, oxy: 0.0 }, Label::Fire))
            .collect();
        let s = split(&samples, seed).unwrap();
        let mut all: Vec<usize> = s.train_indices.iter().chain(&s.test_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(s.train.len(), n * 4 / 5);
    }

    #[test]
    fn metric_bounds(pairs in prop::collection::vec((label(), label()), 1..50)) {
        let (pred, truth): (Vec<Label>, Vec<Label>) = pairs.into_iter().unzip();
        let c = confusion(&pred, &truth).unwrap();
        prop_assert!(c.f1() <= 1.0);
        prop_assert!(c.f1() <= c.precision() + c.recall());
        prop_assert_eq!(c.accuracy(), (c.tp + c.tn) as f64 / c.total() as f64);
    }

    #[test]
    fn auc_ignores_monotone_transforms(
        pairs in prop::collection::vec((0.0..1.0f64, label()), 2..40)
            .prop_filter("both classes", |v| v.iter().any(|p| p.1.is_fire()) && v.iter().any(|p| !p.1.is_fire())),
    ) {
        let (scores, truth): (Vec<f64>, Vec<Label>) = pairs.into_iter().unzip();
        let base = auc(&roc_curve(&scores, &truth).unwrap());
        for f in [|x: f64| x * x * x, |x: f64| 2.0 * x + 7.0] {
            let t: Vec<f64> = scores.iter().map(|&x| f(x)).collect();
            prop_assert!((auc(&roc_curve(&t, &truth).unwrap()) - base).abs() < 1e-12);
        }
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn selection_ignores_report_order(accs in prop::collection::vec((0u8..5, 0u8..5), 3), rot in 0usize..3) {
        let reports: Vec<EvalReport> = ModelKind::ALL
            .iter()
            .zip(&accs)
            .map(|(&k, &(a, f))| {
                let mut r = EvalReport::from_predictions(k, &[Label::Fire], &[1.0], &[Label::Fire]).unwrap();
                r.accuracy = a as f64 / 4.0;
                r.f1 = f as f64 / 4.0;
                r
            })
            .collect();
        let mut rotated = reports.clone();
        rotated.rotate_left(rot);
        rotated.reverse();
        prop_assert_eq!(select_model(&reports).unwrap(), select_model(&rotated).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn logistic_loss_never_increases(seed in any::<u64>()) {
        let data = common::clusters(60, seed);
        let mut cfg = TrainConfig::default();
        cfg.logreg.max_iters = 300;
        let (_, history) = train_with_history(&data, &cfg).unwrap();
        prop_assert!(history.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn probabilities_stay_in_unit_interval(seed in 0u64..1000, inputs in prop::collection::vec(reading_values(), 20)) {
        let records = synth::generate(60, seed).unwrap();
        let samples: Vec<LabeledSample> = records
            .iter()
            .map(|r| LabeledSample::new(FeatureVector { temp: r.temp().unwrap(), rh: r.rh().unwrap(), oxy: r.oxy().unwrap() }, r.class))
            .collect();
        let data = TrainingData::from_samples(&samples).unwrap();
        let mut cfg = TrainConfig::default();
        cfg.forest.n_trees = 5;
        for kind in ModelKind::ALL {
            let m = models::train(kind, &data, &cfg).unwrap();
            for &(t, h, o, _) in &inputs {
                let p = m.predict_probability(&[t, h, o]).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
                // the label rule and the probability agree at 0.5
                prop_assert_eq!(m.predict_label(&[t, h, o]).unwrap().is_fire(), p >= 0.5, "{}", kind);
            }
        }
    }
}

fn stream() -> impl Strategy<Value = Vec<(f64, f64, f64, bool)>> {
    prop::collection::vec((-50.0..60.0f64, 0.0..100.0f64, 0.0..100.0f64, prop::bool::weighted(0.1)), 1..60)
}

fn reading(i: usize, (t, h, o, flame): (f64, f64, f64, bool)) -> SensorReading {
    SensorReading { node_id: "p".into(), timestamp: i as u64 * 1000, temp: t, rh: h, oxy: o, flame }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn no_anomaly_during_warmup(values in stream(), warmup in 1u64..40) {
        let mut s = ThresholdState::new(ThresholdConfig { warmup, ..ThresholdConfig::default() });
        for (i, v) in values.into_iter().enumerate() {
            let in_warmup = s.in_warmup();
            let alerts = s.ingest(&reading(i, v)).unwrap();
            if in_warmup {
                prop_assert!(alerts.iter().all(|a| a.cause == AlertCause::Flame));
            }
        }
    }

    #[test]
    fn flame_alerts_in_the_same_call(values in stream()) {
        let mut s = ThresholdState::new(ThresholdConfig::default());
        for (i, v) in values.into_iter().enumerate() {
            let alerts = s.ingest(&reading(i, v)).unwrap();
            let flame: Vec<_> = alerts.iter().filter(|a| a.cause == AlertCause::Flame).collect();
            if v.3 {
                prop_assert_eq!(flame.len(), 2);
                prop_assert_eq!(flame[0].kind, AlertKind::Buzzer);
                prop_assert_eq!(flame[1].kind, AlertKind::Sms);
            } else {
                prop_assert!(flame.is_empty());
            }
        }
    }

    #[test]
    fn constant_signal_never_alerts(t in -50.0..60.0f64, h in 0.0..100.0f64, o in 0.0..100.0f64, n in 31usize..120) {
        let mut s = ThresholdState::new(ThresholdConfig::default());
        for i in 0..n {
            prop_assert!(s.ingest(&reading(i, (t, h, o, false))).unwrap().is_empty());
        }
    }
}
