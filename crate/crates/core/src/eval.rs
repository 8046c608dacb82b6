//! Evaluation protocol: per-class recall over a zero-shot split, recall
//! curves over a range of K, and the train/target recall intersection.
//!
//! Growing K shrinks the cluster radii, which trades train-class recall
//! away for target-class recall; the K where the two curves cross is the
//! balanced operating point the sweep is after.

use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;

use crate::clustering::KMeansConfig;
use crate::dataset::ZeroShotSplit;
use crate::error::{Error, Result};
use crate::seed::mix_seed;
use crate::zsl::{train_model_with, BoundaryRule, ClassPrediction, PredictedClass, ThresholdRule};
use crate::Float;

/// Counts of the four prediction/truth combinations.
///
/// `t_*` rows were classified correctly; `f_train` is a target-class row
/// predicted as train, `f_target` a train-class row predicted as target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub t_train: usize,
    pub f_target: usize,
    pub f_train: usize,
    pub t_target: usize,
}

impl ConfusionMatrix {
    /// Fraction of true train-class rows recognised as train.
    pub fn recall_train(&self) -> Result<f64> {
        let denom = self.t_train + self.f_target;
        if denom == 0 {
            return Err(Error::NoTrainClassSamples);
        }
        Ok(self.t_train as f64 / denom as f64)
    }

    /// Fraction of true target-class rows recognised as target.
    pub fn recall_target(&self) -> Result<f64> {
        let denom = self.t_target + self.f_train;
        if denom == 0 {
            return Err(Error::NoTargetClassSamples);
        }
        Ok(self.t_target as f64 / denom as f64)
    }

    pub fn total(&self) -> usize {
        self.t_train + self.f_target + self.f_train + self.t_target
    }
}

/// Tally predictions against truth (`true` = train class).
pub fn confusion<F: Float>(
    predictions: &[ClassPrediction<F>],
    truth: &[bool],
) -> Result<ConfusionMatrix> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (p, &is_train) in predictions.iter().zip(truth) {
        match (is_train, p.class) {
            (true, PredictedClass::Train) => cm.t_train += 1,
            (true, PredictedClass::Target) => cm.f_target += 1,
            (false, PredictedClass::Train) => cm.f_train += 1,
            (false, PredictedClass::Target) => cm.t_target += 1,
        }
    }
    Ok(cm)
}

/// Both recall curves over a set of K values, plus the split metadata
/// needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub k_values: Vec<usize>,
    pub recall_train: Vec<f64>,
    pub recall_target: Vec<f64>,
    pub dataset_name: String,
    pub train_label: String,
    pub target_label: String,
    pub seed: u64,
}

/// Where (and whether) the two recall curves cross.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionResult {
    pub found: bool,
    pub k: Option<usize>,
    pub recall_train: Option<f64>,
    pub recall_target: Option<f64>,
}

/// Fit and evaluate one model per K and record both recalls.
///
/// `base.k` is ignored; each K runs with its own sub-seed derived from
/// `base.seed`, so single K values can be reproduced without re-running
/// the whole sweep.
pub fn sweep_k<F: Float>(
    split: &ZeroShotSplit<F>,
    dataset_name: &str,
    k_values: &[usize],
    base: &KMeansConfig,
    boundary_rule: BoundaryRule,
) -> Result<SweepCurve> {
    sweep_k_with(
        split,
        dataset_name,
        k_values,
        base,
        boundary_rule,
        ThresholdRule::Max,
    )
}

/// [`sweep_k`] with a configurable radius rule.
pub fn sweep_k_with<F: Float>(
    split: &ZeroShotSplit<F>,
    dataset_name: &str,
    k_values: &[usize],
    base: &KMeansConfig,
    boundary_rule: BoundaryRule,
    threshold_rule: ThresholdRule,
) -> Result<SweepCurve> {
    if k_values.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one k".into()));
    }
    if k_values[0] == 0 {
        return Err(Error::InvalidConfig("k values start at 1".into()));
    }
    if k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "k values must be strictly increasing".into(),
        ));
    }
    let n_train = split.train_features.nrows();
    if let Some(&bad) = k_values.iter().find(|&&k| k > n_train) {
        return Err(Error::KTooLarge {
            k: bad,
            n: n_train,
        });
    }

    let recalls: Vec<(f64, f64)> = k_values
        .par_iter()
        .map(|&k| -> Result<(f64, f64)> {
            let cfg = KMeansConfig {
                k,
                max_iterations: base.max_iterations,
                tolerance: base.tolerance,
                seed: mix_seed(base.seed, k as u64),
            };
            let model =
                train_model_with(&split.train_features.view(), &cfg, boundary_rule, threshold_rule)?;
            let preds = model.predict_batch(&split.test_features.view())?;
            let cm = confusion(&preds, &split.test_truth)?;
            Ok((cm.recall_train()?, cm.recall_target()?))
        })
        .collect::<Result<_>>()?;

    Ok(SweepCurve {
        k_values: k_values.to_vec(),
        recall_train: recalls.iter().map(|r| r.0).collect(),
        recall_target: recalls.iter().map(|r| r.1).collect(),
        dataset_name: dataset_name.to_string(),
        train_label: split.train_label.clone(),
        target_label: split.target_label.clone(),
        seed: base.seed,
    })
}

/// Sweep a coarse high-K range: `start, start+step, ..., <= stop`.
pub fn extended_sweep<F: Float>(
    split: &ZeroShotSplit<F>,
    dataset_name: &str,
    start: usize,
    stop: usize,
    step: usize,
    base: &KMeansConfig,
    boundary_rule: BoundaryRule,
) -> Result<SweepCurve> {
    if step == 0 {
        return Err(Error::InvalidConfig("step must be at least 1".into()));
    }
    if start == 0 || start > stop {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= start <= stop, got {start}..{stop}"
        )));
    }
    let k_values: Vec<usize> = (start..=stop).step_by(step).collect();
    sweep_k(split, dataset_name, &k_values, base, boundary_rule)
}

/// Find where `recall_train` stops dominating `recall_target`.
///
/// Scanning K in curve order, the crossing is at the first index where
/// `recall_train - recall_target <= 0`. The reported K is whichever of
/// that index and its predecessor has the smaller |difference| (ties go
/// to the smaller K). If the difference stays positive throughout, no
/// intersection is reported.
pub fn find_intersection(curve: &SweepCurve) -> Result<IntersectionResult> {
    if curve.k_values.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let diff = |i: usize| curve.recall_train[i] - curve.recall_target[i];
    let crossing = (0..curve.k_values.len()).find(|&i| diff(i) <= 0.0);
    let Some(i) = crossing else {
        return Ok(IntersectionResult {
            found: false,
            k: None,
            recall_train: None,
            recall_target: None,
        });
    };
    let pick = if i == 0 || diff(i).abs() < diff(i - 1).abs() {
        i
    } else {
        // ties go to the earlier (smaller) K
        i - 1
    };
    Ok(IntersectionResult {
        found: true,
        k: Some(curve.k_values[pick]),
        recall_train: Some(curve.recall_train[pick]),
        recall_target: Some(curve.recall_target[pick]),
    })
}

/// Render a curve as TSV: `k  recall_train  recall_target`, recalls with
/// six decimals.
pub fn curve_tsv(curve: &SweepCurve) -> String {
    let mut out = String::from("k\trecall_train\trecall_target\n");
    for (i, &k) in curve.k_values.iter().enumerate() {
        let _ = writeln!(
            out,
            "{k}\t{:.6}\t{:.6}",
            curve.recall_train[i], curve.recall_target[i]
        );
    }
    out
}

/// Run parameters echoed into sweep reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub k_step: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub boundary_rule: BoundaryRule,
    pub scale_on_train: bool,
    pub radius_percentile: Option<f64>,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    dataset: &'a str,
    train_label: &'a str,
    target_label: &'a str,
    seed: u64,
    config: &'a ReportConfig,
    curve: CurveDoc<'a>,
    intersection: &'a IntersectionResult,
}

#[derive(Serialize)]
struct CurveDoc<'a> {
    k: &'a [usize],
    recall_train: &'a [f64],
    recall_target: &'a [f64],
}

/// Render a sweep plus its intersection as a pretty-printed JSON report.
pub fn report_json(
    curve: &SweepCurve,
    intersection: &IntersectionResult,
    config: &ReportConfig,
) -> Result<String> {
    let doc = ReportDoc {
        dataset: &curve.dataset_name,
        train_label: &curve.train_label,
        target_label: &curve.target_label,
        seed: curve.seed,
        config,
        curve: CurveDoc {
            k: &curve.k_values,
            recall_train: &curve.recall_train,
            recall_target: &curve.recall_target,
        },
        intersection,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::make_zero_shot_split;
    use crate::synth::{gen_two_blobs, TwoBlobSpec};
    use crate::zsl::PredictedClass;
    use approx::assert_abs_diff_eq;

    fn pred(class: PredictedClass) -> ClassPrediction<f64> {
        ClassPrediction {
            class,
            nearest_cluster: 0,
            distance: 0.0,
        }
    }

    #[test]
    fn confusion_counts_all_four_quadrants() {
        use PredictedClass::*;
        let preds = vec![pred(Train), pred(Target), pred(Train), pred(Target)];
        let truth = vec![true, true, false, false];
        let cm = confusion(&preds, &truth).unwrap();
        assert_eq!(
            cm,
            ConfusionMatrix {
                t_train: 1,
                f_target: 1,
                f_train: 1,
                t_target: 1
            }
        );
    }

    #[test]
    fn recalls_match_hand_computation() {
        let cm = ConfusionMatrix {
            t_train: 8,
            f_target: 2,
            f_train: 3,
            t_target: 7,
        };
        assert_abs_diff_eq!(cm.recall_train().unwrap(), 0.8);
        assert_abs_diff_eq!(cm.recall_target().unwrap(), 0.7);
    }

    #[test]
    fn empty_classes_are_errors_not_nans() {
        let no_train = ConfusionMatrix {
            t_target: 4,
            f_train: 1,
            ..Default::default()
        };
        assert!(matches!(
            no_train.recall_train(),
            Err(Error::NoTrainClassSamples)
        ));
        let no_target = ConfusionMatrix {
            t_train: 4,
            f_target: 1,
            ..Default::default()
        };
        assert!(matches!(
            no_target.recall_target(),
            Err(Error::NoTargetClassSamples)
        ));
    }

    #[test]
    fn confusion_rejects_length_mismatch() {
        let preds = vec![pred(PredictedClass::Train)];
        assert!(matches!(
            confusion(&preds, &[true, false]),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
    }

    fn curve(k: Vec<usize>, rt: Vec<f64>, rtar: Vec<f64>) -> SweepCurve {
        SweepCurve {
            k_values: k,
            recall_train: rt,
            recall_target: rtar,
            dataset_name: "toy".into(),
            train_label: "1".into(),
            target_label: "2".into(),
            seed: 0,
        }
    }

    #[test]
    fn intersection_picks_the_closer_bracket_end() {
        // diffs: 1.0, 0.3, -0.3 -> crossing at index 2, tie on |diff|
        // between indices 1 and 2 -> smaller K wins
        let c = curve(
            vec![1, 2, 3],
            vec![1.0, 0.8, 0.6],
            vec![0.0, 0.5, 0.9],
        );
        let r = find_intersection(&c).unwrap();
        assert!(r.found);
        assert_eq!(r.k, Some(2));
        assert_abs_diff_eq!(r.recall_train.unwrap(), 0.8);
        assert_abs_diff_eq!(r.recall_target.unwrap(), 0.5);
    }

    #[test]
    fn intersection_at_the_first_index_needs_no_bracket() {
        let c = curve(vec![5, 6], vec![0.4, 0.3], vec![0.6, 0.9]);
        let r = find_intersection(&c).unwrap();
        assert_eq!(r.k, Some(5));
    }

    #[test]
    fn intersection_prefers_strictly_smaller_distance() {
        // diffs: 0.5, -0.1 -> index 1 is closer than index 0
        let c = curve(vec![3, 4], vec![0.75, 0.45], vec![0.25, 0.55]);
        let r = find_intersection(&c).unwrap();
        assert_eq!(r.k, Some(4));
    }

    #[test]
    fn no_intersection_when_train_recall_stays_on_top() {
        let c = curve(vec![1, 2], vec![0.9, 0.8], vec![0.1, 0.2]);
        let r = find_intersection(&c).unwrap();
        assert!(!r.found);
        assert_eq!(r.k, None);
        assert_eq!(r.recall_train, None);
    }

    #[test]
    fn empty_curve_is_an_error() {
        let c = curve(vec![], vec![], vec![]);
        assert!(matches!(find_intersection(&c), Err(Error::EmptyCurve)));
    }

    #[test]
    fn tsv_uses_six_decimals() {
        let c = curve(vec![1, 10], vec![1.0, 0.5], vec![0.0, 2.0 / 3.0]);
        assert_eq!(
            curve_tsv(&c),
            "k\trecall_train\trecall_target\n1\t1.000000\t0.000000\n10\t0.500000\t0.666667\n"
        );
    }

    fn small_split() -> crate::ZeroShotSplit64 {
        let data = gen_two_blobs::<f64>(&TwoBlobSpec {
            n_per_class: 60,
            seed: 19,
            ..Default::default()
        })
        .unwrap();
        make_zero_shot_split(&data, "1", 7).unwrap()
    }

    #[test]
    fn sweep_runs_each_k_and_is_deterministic() {
        let split = small_split();
        let base = KMeansConfig::new(1, 42);
        let ks = [1, 2, 4, 8];
        let a = sweep_k(&split, "blobs", &ks, &base, BoundaryRule::Inclusive).unwrap();
        let b = sweep_k(&split, "blobs", &ks, &base, BoundaryRule::Inclusive).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.k_values, ks);
        assert_eq!(a.recall_train.len(), 4);
        assert!(a
            .recall_train
            .iter()
            .chain(&a.recall_target)
            .all(|r| (0.0..=1.0).contains(r)));
    }

    #[test]
    fn sweep_rejects_bad_k_lists() {
        let split = small_split();
        let base = KMeansConfig::new(1, 42);
        for ks in [vec![], vec![0, 1], vec![2, 2], vec![3, 1]] {
            assert!(matches!(
                sweep_k(&split, "blobs", &ks, &base, BoundaryRule::Inclusive),
                Err(Error::InvalidConfig(_))
            ));
        }
        // split has 30 training rows
        assert!(matches!(
            sweep_k(&split, "blobs", &[1, 31], &base, BoundaryRule::Inclusive),
            Err(Error::KTooLarge { k: 31, n: 30 })
        ));
    }

    #[test]
    fn extended_sweep_builds_the_coarse_grid() {
        let data = gen_two_blobs::<f64>(&TwoBlobSpec {
            n_per_class: 300,
            seed: 23,
            ..Default::default()
        })
        .unwrap();
        let split = make_zero_shot_split(&data, "1", 7).unwrap();
        let base = KMeansConfig::new(1, 42);
        let c = extended_sweep(&split, "blobs", 50, 150, 50, &base, BoundaryRule::Inclusive)
            .unwrap();
        assert_eq!(c.k_values, vec![50, 100, 150]);
        assert!(matches!(
            extended_sweep(&split, "blobs", 50, 150, 0, &base, BoundaryRule::Inclusive),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn report_json_has_the_documented_shape() {
        let c = curve(vec![1, 2], vec![1.0, 0.4], vec![0.0, 0.6]);
        let inter = find_intersection(&c).unwrap();
        let cfg = ReportConfig {
            k_min: 1,
            k_max: 2,
            k_step: 1,
            max_iterations: 300,
            tolerance: 1e-6,
            boundary_rule: BoundaryRule::Inclusive,
            scale_on_train: false,
            radius_percentile: None,
        };
        let text = report_json(&c, &inter, &cfg).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["dataset"], "toy");
        assert_eq!(doc["seed"], 0);
        assert_eq!(doc["config"]["boundary_rule"], "inclusive");
        assert_eq!(doc["curve"]["k"][1], 2);
        assert_eq!(doc["intersection"]["found"], true);
        assert_eq!(doc["intersection"]["k"], 2);
        assert!(text.ends_with('\n'));
    }
}
