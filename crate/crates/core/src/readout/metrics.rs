use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    Accuracy,
    F1Macro,
    Mcc,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Accuracy, Metric::F1Macro, Metric::Mcc];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::F1Macro => "f1_macro",
            Metric::Mcc => "mcc",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub f1_macro: f64,
    pub mcc: f64,
}

impl Scores {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Accuracy => self.accuracy,
            Metric::F1Macro => self.f1_macro,
            Metric::Mcc => self.mcc,
        }
    }
}

/// Accuracy, macro-averaged F1 and multiclass MCC (Gorodkin).
pub fn metrics(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Scores> {
    if y_true.len() != y_pred.len() {
        return Err(Error::invalid(
            "metrics",
            format!("{} true labels but {} predictions", y_true.len(), y_pred.len()),
        ));
    }
    if let Some(&l) = y_true.iter().chain(y_pred).find(|&&l| l >= n_classes) {
        return Err(Error::invalid("metrics", format!("label {l} out of range for {n_classes} classes")));
    }
    if y_true.is_empty() {
        return Err(Error::invalid("metrics", "empty label vectors"));
    }

    let mut tp = vec![0.0f64; n_classes];
    let mut pred = vec![0.0f64; n_classes];
    let mut truth = vec![0.0f64; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        truth[t] += 1.0;
        pred[p] += 1.0;
        if t == p {
            tp[t] += 1.0;
        }
    }
    let s = y_true.len() as f64;
    let c: f64 = tp.iter().sum();

    let f1_sum: f64 = (0..n_classes)
        .map(|k| {
            let denom = pred[k] + truth[k];
            if denom == 0.0 {
                0.0
            } else {
                2.0 * tp[k] / denom
            }
        })
        .sum();

    let cov_pt: f64 = pred.iter().zip(&truth).map(|(p, t)| p * t).sum();
    let pp: f64 = pred.iter().map(|p| p * p).sum();
    let tt: f64 = truth.iter().map(|t| t * t).sum();
    let a = s * s - pp;
    let b = s * s - tt;
    let mcc = if a == 0.0 || b == 0.0 { 0.0 } else { (c * s - cov_pt) / (a * b).sqrt() };

    Ok(Scores { accuracy: c / s, f1_macro: f1_sum / n_classes as f64, mcc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_cases() {
        let s = metrics(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!((s.accuracy, s.f1_macro, s.mcc), (1.0, 1.0, 1.0));
        let s = metrics(&[0, 0, 1, 1], &[0, 1, 1, 0], 2).unwrap();
        assert_eq!(s.mcc, 0.0);
        let s = metrics(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert!((s.accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.f1_macro - 2.0 / 3.0).abs() < 1e-15);
        assert!(metrics(&[0], &[0, 1], 2).is_err());
        assert!(metrics(&[0], &[3], 2).is_err());
    }

    #[test]
    fn constant_prediction_has_zero_mcc() {
        let s = metrics(&[0, 1, 2, 0], &[1, 1, 1, 1], 3).unwrap();
        assert_eq!(s.mcc, 0.0);
        assert!((s.f1_macro - (2.0 / 5.0) / 3.0).abs() < 1e-15);
    }

    fn labels() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>)> {
        (2usize..=7, 1usize..=50).prop_flat_map(|(k, n)| {
            (Just(k), proptest::collection::vec(0..k, n), proptest::collection::vec(0..k, n))
        })
    }

    proptest! {
        #[test]
        fn permuting_class_ids_is_invariant((k, t, p) in labels(), shift in 1usize..7) {
            let perm = |v: &[usize]| v.iter().map(|&l| (l + shift) % k).collect::<Vec<_>>();
            let a = metrics(&t, &p, k).unwrap();
            let b = metrics(&perm(&t), &perm(&p), k).unwrap();
            prop_assert!((a.accuracy - b.accuracy).abs() < 1e-12);
            prop_assert!((a.f1_macro - b.f1_macro).abs() < 1e-12);
            prop_assert!((a.mcc - b.mcc).abs() < 1e-12);
            prop_assert!((-1.0..=1.0 + 1e-12).contains(&a.mcc));
        }
    }
}
