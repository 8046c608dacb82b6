//! The zero-shot classifier: k-means clusters of the seen class plus a
//! radius per cluster.
//!
//! A point is predicted as the *train* (seen) class when its distance to
//! the nearest centroid is within that cluster's radius, otherwise as the
//! *target* (unseen) class. Radii default to the largest member distance,
//! so with the inclusive boundary every training point is inside its own
//! cluster.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::clustering::{euclidean_distance, kmeans_fit, KMeansConfig};
use crate::dataset::Scaler;
use crate::error::{Error, Result};
use crate::Float;

/// What happens exactly on a cluster radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryRule {
    /// Distance equal to the radius still counts as the train class.
    #[default]
    Inclusive,
    /// Only strictly smaller distances count as the train class.
    Strict,
}

impl BoundaryRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryRule::Inclusive => "inclusive",
            BoundaryRule::Strict => "strict",
        }
    }
}

/// How a cluster's radius is derived from its member distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// Largest member-to-centroid distance (the default).
    Max,
    /// Nearest-rank percentile of member distances, in (0, 100].
    /// `Percentile(100.0)` equals `Max`.
    Percentile(f64),
}

/// Which side of the cluster radii a point fell on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictedClass {
    /// Inside some cluster: the class the model was fitted on.
    Train,
    /// Outside every cluster: the class the model never saw.
    Target,
}

/// Prediction for one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrediction<F: Float> {
    pub class: PredictedClass,
    /// Index of the nearest centroid.
    pub nearest_cluster: usize,
    /// Distance to that centroid (in the model's feature space, i.e. after
    /// any stored scaler).
    pub distance: F,
}

/// Per-cluster radii: the distance from each centroid to its farthest
/// member (or a percentile of member distances, see [`ThresholdRule`]).
pub fn compute_thresholds<F: Float>(
    points: &ArrayView2<F>,
    centroids: &ArrayView2<F>,
    assignments: &[usize],
) -> Result<Array1<F>> {
    compute_thresholds_with(points, centroids, assignments, ThresholdRule::Max)
}

/// [`compute_thresholds`] with a configurable radius rule.
pub fn compute_thresholds_with<F: Float>(
    points: &ArrayView2<F>,
    centroids: &ArrayView2<F>,
    assignments: &[usize],
    rule: ThresholdRule,
) -> Result<Array1<F>> {
    if points.nrows() != assignments.len() {
        return Err(Error::LengthMismatch {
            left: points.nrows(),
            right: assignments.len(),
        });
    }
    if points.ncols() != centroids.ncols() {
        return Err(Error::DimMismatch {
            expected: centroids.ncols(),
            found: points.ncols(),
        });
    }
    let k = centroids.nrows();
    assert!(
        assignments.iter().all(|&a| a < k),
        "assignment out of range for {k} clusters"
    );
    if let ThresholdRule::Percentile(p) = rule {
        if !(p > 0.0 && p <= 100.0) {
            return Err(Error::InvalidConfig(format!(
                "radius percentile must be in (0, 100], got {p}"
            )));
        }
    }

    let mut member_dists: Vec<Vec<F>> = vec![Vec::new(); k];
    for (p, &a) in points.rows().into_iter().zip(assignments) {
        member_dists[a].push(euclidean_distance(p, centroids.row(a))?);
    }
    let mut thresholds = Array1::zeros(k);
    for (j, dists) in member_dists.iter_mut().enumerate() {
        if dists.is_empty() {
            return Err(Error::EmptyCluster { cluster: j });
        }
        thresholds[j] = match rule {
            ThresholdRule::Max => dists
                .iter()
                .copied()
                .fold(F::zero(), F::max),
            ThresholdRule::Percentile(p) => {
                dists.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
                // nearest-rank: smallest index covering p percent of members
                let m = dists.len();
                let rank = (p / 100.0 * m as f64).ceil() as usize;
                dists[rank.clamp(1, m) - 1]
            }
        };
    }
    Ok(thresholds)
}

/// The fitted zero-shot classifier.
///
/// Prediction depends only on `(centroids, thresholds, boundary_rule)` plus
/// the optional input scaler; two models with equal fields behave
/// identically regardless of how they were fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct ZslModel<F: Float> {
    centroids: Array2<F>,
    thresholds: Array1<F>,
    boundary_rule: BoundaryRule,
    scaler: Option<Scaler<F>>,
}

impl<F: Float> ZslModel<F> {
    /// Assemble a model from its parts, validating shapes and radii.
    pub fn new(
        centroids: Array2<F>,
        thresholds: Array1<F>,
        boundary_rule: BoundaryRule,
    ) -> Result<Self> {
        if centroids.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        if centroids.nrows() != thresholds.len() {
            return Err(Error::LengthMismatch {
                left: centroids.nrows(),
                right: thresholds.len(),
            });
        }
        if thresholds.iter().any(|t| !t.is_finite() || *t < F::zero()) {
            return Err(Error::InvalidConfig(
                "thresholds must be finite and non-negative".into(),
            ));
        }
        Ok(ZslModel {
            centroids,
            thresholds,
            boundary_rule,
            scaler: None,
        })
    }

    /// Attach a scaler that will be applied to every input before
    /// distance computation.
    pub fn with_scaler(mut self, scaler: Scaler<F>) -> Result<Self> {
        if scaler.dim() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: scaler.dim(),
            });
        }
        self.scaler = Some(scaler);
        Ok(self)
    }

    pub fn centroids(&self) -> &Array2<F> {
        &self.centroids
    }

    pub fn thresholds(&self) -> &Array1<F> {
        &self.thresholds
    }

    pub fn boundary_rule(&self) -> BoundaryRule {
        self.boundary_rule
    }

    pub fn scaler(&self) -> Option<&Scaler<F>> {
        self.scaler.as_ref()
    }

    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.ncols()
    }

    fn classify(&self, point: ArrayView1<F>) -> Result<ClassPrediction<F>> {
        let mut nearest = 0usize;
        let mut best = euclidean_distance(point, self.centroids.row(0))?;
        for (j, c) in self.centroids.rows().into_iter().enumerate().skip(1) {
            let d = euclidean_distance(point, c)?;
            if d < best {
                best = d;
                nearest = j;
            }
        }
        let inside = match self.boundary_rule {
            BoundaryRule::Inclusive => best <= self.thresholds[nearest],
            BoundaryRule::Strict => best < self.thresholds[nearest],
        };
        Ok(ClassPrediction {
            class: if inside {
                PredictedClass::Train
            } else {
                PredictedClass::Target
            },
            nearest_cluster: nearest,
            distance: best,
        })
    }

    /// Classify one point (applying the stored scaler, if any).
    pub fn predict_point(&self, point: ArrayView1<F>) -> Result<ClassPrediction<F>> {
        if point.len() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: point.len(),
            });
        }
        match &self.scaler {
            Some(s) => self.classify(s.apply_row(point)?.view()),
            None => self.classify(point),
        }
    }

    /// Classify each row of `points`; result `i` belongs to row `i`.
    pub fn predict_batch(&self, points: &ArrayView2<F>) -> Result<Vec<ClassPrediction<F>>> {
        if points.ncols() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: points.ncols(),
            });
        }
        let scaled;
        let rows = match &self.scaler {
            Some(s) => {
                scaled = s.apply(points)?;
                scaled.view()
            }
            None => points.view(),
        };
        rows.rows().into_iter().map(|p| self.classify(p)).collect()
    }

    /// Serialise to the versioned JSON model format.
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            k: self.k(),
            dim: self.dim(),
            boundary_rule: self.boundary_rule,
            centroids: self
                .centroids
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|v| v.to_f64().expect("finite")).collect())
                .collect(),
            thresholds: self
                .thresholds
                .iter()
                .map(|v| v.to_f64().expect("finite"))
                .collect(),
            scaler: self.scaler.as_ref().map(|s| ScalerFile {
                means: s.means().iter().map(|v| v.to_f64().expect("finite")).collect(),
                stds: s.stds().iter().map(|v| v.to_f64().expect("finite")).collect(),
            }),
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        Ok(text)
    }

    /// Load a model serialised by [`ZslModel::to_json`].
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!(
                "expected format {MODEL_FORMAT:?}, found {:?}",
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported version {} (this build reads {MODEL_VERSION})",
                file.version
            )));
        }
        if file.centroids.len() != file.k || file.thresholds.len() != file.k {
            return Err(Error::ModelFormat(format!(
                "k = {} but file holds {} centroids / {} thresholds",
                file.k,
                file.centroids.len(),
                file.thresholds.len()
            )));
        }
        if file.centroids.iter().any(|row| row.len() != file.dim) {
            return Err(Error::ModelFormat(format!(
                "centroid rows must all have dim = {}",
                file.dim
            )));
        }
        let conv = |v: f64, what: &str| -> Result<F> {
            F::from_f64(v)
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::ModelFormat(format!("{what} value {v} is not usable")))
        };
        let mut centroids = Array2::zeros((file.k, file.dim));
        for (i, row) in file.centroids.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                centroids[[i, j]] = conv(v, "centroid")?;
            }
        }
        let mut thresholds = Array1::zeros(file.k);
        for (j, &v) in file.thresholds.iter().enumerate() {
            thresholds[j] = conv(v, "threshold")?;
        }
        let model = ZslModel::new(centroids, thresholds, file.boundary_rule)?;
        match file.scaler {
            Some(s) => {
                let means = s
                    .means
                    .iter()
                    .map(|&v| conv(v, "scaler mean"))
                    .collect::<Result<Vec<F>>>()?;
                let stds = s
                    .stds
                    .iter()
                    .map(|&v| conv(v, "scaler std"))
                    .collect::<Result<Vec<F>>>()?;
                let scaler = Scaler::from_parts(Array1::from(means), Array1::from(stds))?;
                model.with_scaler(scaler)
            }
            None => Ok(model),
        }
    }
}

const MODEL_FORMAT: &str = "cluster-zsl-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    k: usize,
    dim: usize,
    boundary_rule: BoundaryRule,
    centroids: Vec<Vec<f64>>,
    thresholds: Vec<f64>,
    scaler: Option<ScalerFile>,
}

#[derive(Serialize, Deserialize)]
struct ScalerFile {
    means: Vec<f64>,
    stds: Vec<f64>,
}

/// Fit k-means to `train_points` and derive max-distance radii.
///
/// The returned model carries no scaler; attach one with
/// [`ZslModel::with_scaler`] if inputs arrive unnormalised.
pub fn train_model<F: Float>(
    train_points: &ArrayView2<F>,
    config: &KMeansConfig,
    boundary_rule: BoundaryRule,
) -> Result<ZslModel<F>> {
    train_model_with(train_points, config, boundary_rule, ThresholdRule::Max)
}

/// [`train_model`] with a configurable radius rule.
pub fn train_model_with<F: Float>(
    train_points: &ArrayView2<F>,
    config: &KMeansConfig,
    boundary_rule: BoundaryRule,
    threshold_rule: ThresholdRule,
) -> Result<ZslModel<F>> {
    let fit = kmeans_fit(train_points, config)?;
    let thresholds = compute_thresholds_with(
        train_points,
        &fit.centroids.view(),
        &fit.assignments,
        threshold_rule,
    )?;
    ZslModel::new(fit.centroids, thresholds, boundary_rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn thresholds_are_max_member_distances() {
        let points = array![[0.0], [2.0], [10.0]];
        let centroids = array![[1.0], [10.0]];
        let t = compute_thresholds(&points.view(), &centroids.view(), &[0, 0, 1]).unwrap();
        assert_eq!(t, array![1.0, 0.0]);
    }

    #[test]
    fn thresholds_report_the_empty_cluster() {
        let points = array![[0.0], [2.0]];
        let centroids = array![[1.0], [10.0]];
        let err = compute_thresholds(&points.view(), &centroids.view(), &[0, 0]).unwrap_err();
        assert!(matches!(err, Error::EmptyCluster { cluster: 1 }));
    }

    #[test]
    fn percentile_rule_uses_nearest_rank() {
        // distances from centroid 0.0: 1..=10
        let points = Array2::from_shape_vec((10, 1), (1..=10).map(f64::from).collect()).unwrap();
        let centroids = array![[0.0]];
        let assignments = vec![0; 10];
        let p50 = compute_thresholds_with(
            &points.view(),
            &centroids.view(),
            &assignments,
            ThresholdRule::Percentile(50.0),
        )
        .unwrap();
        assert_abs_diff_eq!(p50[0], 5.0);
        let p100 = compute_thresholds_with(
            &points.view(),
            &centroids.view(),
            &assignments,
            ThresholdRule::Percentile(100.0),
        )
        .unwrap();
        let max = compute_thresholds(&points.view(), &centroids.view(), &assignments).unwrap();
        assert_eq!(p100, max);
        assert!(matches!(
            compute_thresholds_with(
                &points.view(),
                &centroids.view(),
                &assignments,
                ThresholdRule::Percentile(0.0),
            ),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn boundary_rule_decides_points_exactly_on_the_radius() {
        let model = ZslModel::new(array![[0.0, 0.0]], array![5.0], BoundaryRule::Inclusive).unwrap();
        let on_radius = array![3.0, 4.0];
        let p = model.predict_point(on_radius.view()).unwrap();
        assert_eq!(p.class, PredictedClass::Train);
        assert_abs_diff_eq!(p.distance, 5.0);

        let strict = ZslModel::new(array![[0.0, 0.0]], array![5.0], BoundaryRule::Strict).unwrap();
        let p = strict.predict_point(on_radius.view()).unwrap();
        assert_eq!(p.class, PredictedClass::Target);
    }

    #[test]
    fn prediction_reports_the_nearest_cluster() {
        let model = ZslModel::new(
            array![[0.0], [10.0]],
            array![1.0, 1.0],
            BoundaryRule::Inclusive,
        )
        .unwrap();
        let p = model.predict_point(array![9.0].view()).unwrap();
        assert_eq!(p.nearest_cluster, 1);
        assert_eq!(p.class, PredictedClass::Train);
        let q = model.predict_point(array![4.0].view()).unwrap();
        assert_eq!(q.nearest_cluster, 0);
        assert_eq!(q.class, PredictedClass::Target);
        assert_abs_diff_eq!(q.distance, 4.0);
    }

    #[test]
    fn training_points_are_always_inside_with_max_rule() {
        let data = crate::synth::gen_two_blobs::<f64>(&crate::synth::TwoBlobSpec {
            n_per_class: 100,
            seed: 13,
            ..Default::default()
        })
        .unwrap();
        let model = train_model(
            &data.features().view(),
            &KMeansConfig::new(6, 31),
            BoundaryRule::Inclusive,
        )
        .unwrap();
        for p in model.predict_batch(&data.features().view()).unwrap() {
            assert_eq!(p.class, PredictedClass::Train);
        }
    }

    #[test]
    fn batch_equals_pointwise() {
        let data = crate::synth::gen_ring::<f64>(&crate::synth::RingSpec {
            n_inner: 40,
            n_outer: 40,
            seed: 2,
            ..Default::default()
        })
        .unwrap();
        let inner = data.features().slice(ndarray::s![..40, ..]).to_owned();
        let model = train_model(
            &inner.view(),
            &KMeansConfig::new(4, 8),
            BoundaryRule::Inclusive,
        )
        .unwrap();
        let batch = model.predict_batch(&data.features().view()).unwrap();
        for (i, row) in data.features().rows().into_iter().enumerate() {
            assert_eq!(batch[i], model.predict_point(row).unwrap());
        }
    }

    #[test]
    fn stored_scaler_is_applied_to_inputs() {
        let scaler = Scaler::from_parts(array![10.0], array![2.0]).unwrap();
        let model = ZslModel::new(array![[0.0]], array![1.0], BoundaryRule::Inclusive)
            .unwrap()
            .with_scaler(scaler)
            .unwrap();
        // raw 10 -> scaled 0 -> inside; raw 14 -> scaled 2 -> outside
        assert_eq!(
            model.predict_point(array![10.0].view()).unwrap().class,
            PredictedClass::Train
        );
        assert_eq!(
            model.predict_point(array![14.0].view()).unwrap().class,
            PredictedClass::Target
        );
    }

    #[test]
    fn model_json_round_trips() {
        let data = crate::synth::gen_two_blobs::<f64>(&crate::synth::TwoBlobSpec {
            n_per_class: 50,
            seed: 4,
            ..Default::default()
        })
        .unwrap();
        let scaler = Scaler::fit(&data.features().view()).unwrap();
        let scaled = scaler.apply(&data.features().view()).unwrap();
        let model = train_model(&scaled.view(), &KMeansConfig::new(3, 5), BoundaryRule::Strict)
            .unwrap()
            .with_scaler(scaler)
            .unwrap();
        let text = model.to_json().unwrap();
        let back = ZslModel::<f64>::from_json(&text).unwrap();
        assert_eq!(model, back);
        let raw: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(raw["format"], "cluster-zsl-model");
        assert_eq!(raw["version"], 1);
        assert_eq!(raw["boundary_rule"], "strict");
    }

    #[test]
    fn from_json_rejects_foreign_and_inconsistent_files() {
        let model = ZslModel::new(array![[0.0]], array![1.0], BoundaryRule::Inclusive).unwrap();
        let good = model.to_json().unwrap();

        let wrong_format = good.replace("cluster-zsl-model", "other-format");
        assert!(matches!(
            ZslModel::<f64>::from_json(&wrong_format),
            Err(Error::ModelFormat(_))
        ));

        let wrong_version = good.replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(
            ZslModel::<f64>::from_json(&wrong_version),
            Err(Error::ModelFormat(_))
        ));

        let ragged = good.replace("\"k\": 1", "\"k\": 2");
        assert!(matches!(
            ZslModel::<f64>::from_json(&ragged),
            Err(Error::ModelFormat(_))
        ));

        assert!(matches!(
            ZslModel::<f64>::from_json("not json"),
            Err(Error::Json(_))
        ));
    }

    #[test]
    fn predict_checks_dimensions() {
        let model = ZslModel::new(array![[0.0, 0.0]], array![1.0], BoundaryRule::Inclusive).unwrap();
        assert!(matches!(
            model.predict_point(array![1.0].view()),
            Err(Error::DimMismatch { expected: 2, found: 1 })
        ));
    }
}
