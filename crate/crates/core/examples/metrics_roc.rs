//! Confusion matrix, ROC curve and AUC for a handful of scores.
//!
//! cargo run --example metrics_roc

use greenshield::dataset::Label::{Fire, NotFire};
use greenshield::metrics::{auc, confusion, roc_curve, select_model, EvalReport};
use greenshield::models::ModelKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = [Fire, Fire, NotFire, Fire, NotFire, NotFire, Fire, NotFire];
    let scores = [0.92, 0.81, 0.77, 0.64, 0.40, 0.40, 0.35, 0.08];
    let pred: Vec<_> = scores.iter().map(|&s| if s >= 0.5 { Fire } else { NotFire }).collect();

    let c = confusion(&pred, &truth)?;
    println!("tp={} tn={} fp={} fn={}", c.tp, c.tn, c.fp, c.fn_);
    println!(
        "accuracy={:.3} precision={:.3} recall={:.3} f1={:.3}",
        c.accuracy(),
        c.precision(),
        c.recall(),
        c.f1()
    );

    let roc = roc_curve(&scores, &truth)?;
    for p in &roc.points {
        let t = p.threshold.map_or("-".to_string(), |t| format!("{t:.2}"));
        println!("  thr {t:>5}  fpr {:.2}  tpr {:.2}", p.fpr, p.tpr);
    }
    println!("auc={:.4}", auc(&roc));

    // Ties on accuracy fall through to F1, then to a fixed preference.
    let a = EvalReport::from_predictions(ModelKind::LogisticRegression, &pred, &scores, &truth)?;
    let mut b = a.clone();
    b.model_kind = ModelKind::Svm;
    println!("selected: {}", select_model(&[a, b])?);
    Ok(())
}
