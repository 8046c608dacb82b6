//! Loading, normalising and splitting labelled numeric data.
//!
//! Two input formats are supported: KEEL `.dat` files (header of `@`
//! directives, then `@data`) and plain CSV with a header row. Parsed data
//! lands in [`Dataset`], which keeps the feature matrix and the string label
//! of every row.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::Float;

/// A labelled dataset: one feature row and one string label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F: Float> {
    features: Array2<F>,
    labels: Vec<String>,
    label_names: Vec<String>,
}

impl<F: Float> Dataset<F> {
    /// Build a dataset from a feature matrix and per-row labels.
    ///
    /// Rejects non-finite feature values and row/label length mismatches.
    pub fn new(features: Array2<F>, labels: Vec<String>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: features.nrows(),
                right: labels.len(),
            });
        }
        for ((row, col), v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
        let mut label_names = Vec::new();
        for label in &labels {
            if !label_names.contains(label) {
                label_names.push(label.clone());
            }
        }
        Ok(Dataset {
            features,
            labels,
            label_names,
        })
    }

    pub fn features(&self) -> &Array2<F> {
        &self.features
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Distinct labels in order of first occurrence.
    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Number of rows carrying `label`.
    pub fn class_count(&self, label: &str) -> usize {
        self.labels.iter().filter(|l| l.as_str() == label).count()
    }

    /// Render as CSV with header `f0,...,f{d-1},class`.
    ///
    /// Floats are printed with `Display`, which round-trips exactly, so
    /// `parse_csv(&ds.to_csv(), "class")` reproduces `ds`.
    pub fn to_csv(&self) -> String {
        let dim = self.dim();
        let mut out = String::new();
        for j in 0..dim {
            let _ = write!(out, "f{j},");
        }
        out.push_str("class\n");
        for (row, label) in self.features.rows().into_iter().zip(&self.labels) {
            for v in row.iter() {
                let _ = write!(out, "{v},");
            }
            out.push_str(label);
            out.push('\n');
        }
        out
    }
}

fn parse_feature_token<F: Float>(token: &str, line_no: usize) -> Result<F> {
    let bad = || Error::NonNumericFeature {
        line: line_no,
        token: token.to_string(),
    };
    let raw: f64 = token.parse().map_err(|_| bad())?;
    if !raw.is_finite() {
        return Err(bad());
    }
    let v = F::from_f64(raw).ok_or_else(bad)?;
    if !v.is_finite() {
        // finite f64 can still overflow f32
        return Err(bad());
    }
    Ok(v)
}

fn build_dataset<F: Float>(values: Vec<F>, labels: Vec<String>, dim: usize) -> Result<Dataset<F>> {
    let n = labels.len();
    let features = Array2::from_shape_vec((n, dim), values)
        .expect("row-major parse produced a rectangular matrix");
    Dataset::new(features, labels)
}

/// Parse the KEEL `.dat` format.
///
/// Header directives (`@relation`, `@attribute`, `@inputs`, `@outputs`)
/// come first, `@data` starts the rows. The class column is the one named
/// by `@outputs`, or the last attribute when `@outputs` is absent. Lines
/// starting with `%` and blank lines are skipped everywhere; error line
/// numbers refer to the original file, 1-based.
pub fn parse_keel<F: Float>(text: &str) -> Result<Dataset<F>> {
    let mut attributes: Vec<String> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();
    let mut in_data = false;
    let mut class_idx = 0usize;
    let mut values: Vec<F> = Vec::new();
    let mut labels: Vec<String> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_start_matches('\u{feff}').trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !in_data {
            let Some(rest) = line.strip_prefix('@') else {
                return Err(Error::MalformedHeader(format!(
                    "line {line_no}: expected a header directive before @data, found {line:?}"
                )));
            };
            let (word, tail) = match rest.find(char::is_whitespace) {
                Some(pos) => (&rest[..pos], rest[pos..].trim()),
                None => (rest, ""),
            };
            match word.to_ascii_lowercase().as_str() {
                "relation" | "inputs" => {}
                "attribute" => {
                    let name_end = tail
                        .find(|c: char| c.is_whitespace() || c == '{' || c == '[')
                        .unwrap_or(tail.len());
                    let name = tail[..name_end].trim();
                    if name.is_empty() {
                        return Err(Error::MalformedHeader(format!(
                            "line {line_no}: @attribute without a name"
                        )));
                    }
                    attributes.push(name.to_string());
                }
                "outputs" => {
                    outputs = tail
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect();
                }
                "data" => {
                    if attributes.len() < 2 {
                        return Err(Error::MalformedHeader(format!(
                            "need at least 2 attributes, found {}",
                            attributes.len()
                        )));
                    }
                    class_idx = match outputs.first() {
                        Some(name) => attributes
                            .iter()
                            .position(|a| a == name)
                            .ok_or_else(|| {
                                Error::MalformedHeader(format!(
                                    "@outputs names unknown attribute {name:?}"
                                ))
                            })?,
                        None => attributes.len() - 1,
                    };
                    in_data = true;
                }
                other => {
                    return Err(Error::MalformedHeader(format!(
                        "line {line_no}: unknown directive @{other}"
                    )));
                }
            }
            continue;
        }

        // data row
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != attributes.len() {
            return Err(Error::ArityMismatch {
                line: line_no,
                expected: attributes.len(),
                found: fields.len(),
            });
        }
        for (i, field) in fields.iter().enumerate() {
            if i == class_idx {
                labels.push((*field).to_string());
            } else {
                values.push(parse_feature_token(field, line_no)?);
            }
        }
    }

    if !in_data {
        return Err(Error::MalformedHeader("no @data line".into()));
    }
    build_dataset(values, labels, attributes.len() - 1)
}

/// Parse CSV with a header row; `label_column` names the class column.
///
/// Fields are trimmed, blank lines are skipped, error line numbers are
/// 1-based file lines.
pub fn parse_csv<F: Float>(text: &str, label_column: &str) -> Result<Dataset<F>> {
    let mut lines = text.lines().enumerate();
    let (header_no, header) = loop {
        match lines.next() {
            Some((idx, raw)) => {
                let line = raw.trim_start_matches('\u{feff}').trim();
                if !line.is_empty() {
                    break (idx + 1, line);
                }
            }
            None => return Err(Error::EmptyInput),
        }
    };
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.len() < 2 {
        return Err(Error::MalformedHeader(format!(
            "line {header_no}: need at least 2 columns, found {}",
            columns.len()
        )));
    }
    let class_idx = columns
        .iter()
        .position(|c| *c == label_column)
        .ok_or_else(|| Error::UnknownLabelColumn(label_column.to_string()))?;

    let mut values: Vec<F> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(Error::ArityMismatch {
                line: line_no,
                expected: columns.len(),
                found: fields.len(),
            });
        }
        for (i, field) in fields.iter().enumerate() {
            if i == class_idx {
                labels.push((*field).to_string());
            } else {
                values.push(parse_feature_token(field, line_no)?);
            }
        }
    }
    build_dataset(values, labels, columns.len() - 1)
}

/// Parse a label-free CSV (header row, then numeric rows) into a matrix.
///
/// Used for prediction inputs where no class column exists.
pub fn parse_feature_matrix<F: Float>(text: &str) -> Result<Array2<F>> {
    let mut lines = text.lines().enumerate();
    let columns = loop {
        match lines.next() {
            Some((_, raw)) => {
                let line = raw.trim_start_matches('\u{feff}').trim();
                if !line.is_empty() {
                    break line.split(',').count();
                }
            }
            None => return Err(Error::EmptyInput),
        }
    };
    let mut values: Vec<F> = Vec::new();
    let mut n = 0usize;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns {
            return Err(Error::ArityMismatch {
                line: line_no,
                expected: columns,
                found: fields.len(),
            });
        }
        for field in fields {
            values.push(parse_feature_token(field, line_no)?);
        }
        n += 1;
    }
    Ok(Array2::from_shape_vec((n, columns), values)
        .expect("row-major parse produced a rectangular matrix"))
}

/// Per-column z-score normalisation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler<F: Float> {
    means: Array1<F>,
    stds: Array1<F>,
}

impl<F: Float> Scaler<F> {
    /// Fit column means and population standard deviations (ddof = 0).
    pub fn fit(features: &ArrayView2<F>) -> Result<Self> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let n_f = F::from_usize(n).expect("row count fits in the scalar type");
        let means = features.sum_axis(Axis(0)) / n_f;
        let mut vars = Array1::zeros(features.ncols());
        for row in features.rows() {
            for (j, v) in row.iter().enumerate() {
                let d = *v - means[j];
                vars[j] += d * d;
            }
        }
        let stds = vars.mapv(|v: F| (v / n_f).sqrt());
        Ok(Scaler { means, stds })
    }

    /// Apply the transform: `(x - mean) / std`, with constant columns
    /// (std = 0) mapped to 0 instead of dividing by zero.
    pub fn apply(&self, features: &ArrayView2<F>) -> Result<Array2<F>> {
        if features.ncols() != self.means.len() {
            return Err(Error::DimMismatch {
                expected: self.means.len(),
                found: features.ncols(),
            });
        }
        let mut out = features.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if self.stds[j] == F::zero() {
                    F::zero()
                } else {
                    (*v - self.means[j]) / self.stds[j]
                };
            }
        }
        Ok(out)
    }

    /// [`Scaler::apply`] for a single row.
    pub fn apply_row(&self, row: ArrayView1<F>) -> Result<Array1<F>> {
        if row.len() != self.means.len() {
            return Err(Error::DimMismatch {
                expected: self.means.len(),
                found: row.len(),
            });
        }
        Ok(Array1::from_iter(row.iter().enumerate().map(|(j, &v)| {
            if self.stds[j] == F::zero() {
                F::zero()
            } else {
                (v - self.means[j]) / self.stds[j]
            }
        })))
    }

    pub fn means(&self) -> &Array1<F> {
        &self.means
    }

    pub fn stds(&self) -> &Array1<F> {
        &self.stds
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// Rebuild from raw parameter vectors (used when loading a model file).
    pub fn from_parts(means: Array1<F>, stds: Array1<F>) -> Result<Self> {
        if means.len() != stds.len() {
            return Err(Error::LengthMismatch {
                left: means.len(),
                right: stds.len(),
            });
        }
        Ok(Scaler { means, stds })
    }
}

/// The zero-shot evaluation split.
///
/// Half of the train-class rows (randomly chosen) form the training set;
/// the other half plus *every* target-class row form the test set.
/// `test_truth[i]` is `true` iff test row `i` really belongs to the train
/// class.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroShotSplit<F: Float> {
    pub train_features: Array2<F>,
    pub test_features: Array2<F>,
    pub test_truth: Vec<bool>,
    pub train_label: String,
    pub target_label: String,
    pub seed: u64,
}

impl<F: Float> ZeroShotSplit<F> {
    /// The same split with both feature matrices passed through `scaler`.
    pub fn scaled(&self, scaler: &Scaler<F>) -> Result<Self> {
        Ok(ZeroShotSplit {
            train_features: scaler.apply(&self.train_features.view())?,
            test_features: scaler.apply(&self.test_features.view())?,
            test_truth: self.test_truth.clone(),
            train_label: self.train_label.clone(),
            target_label: self.target_label.clone(),
            seed: self.seed,
        })
    }
}

/// Split a two-class dataset for zero-shot evaluation.
///
/// `floor(n/2)` of the rows labelled `train_label` (chosen by a seeded
/// shuffle) become the training set. The test set is the remaining
/// train-class rows followed by all target-class rows in file order.
pub fn make_zero_shot_split<F: Float>(
    dataset: &Dataset<F>,
    train_label: &str,
    seed: u64,
) -> Result<ZeroShotSplit<F>> {
    let names = dataset.label_names();
    if names.len() != 2 {
        return Err(Error::NotBinary { found: names.len() });
    }
    if !names.iter().any(|n| n == train_label) {
        return Err(Error::UnknownLabel(train_label.to_string()));
    }
    let target_label = names
        .iter()
        .find(|n| n.as_str() != train_label)
        .expect("binary dataset has a second label")
        .clone();

    let mut train_idx: Vec<usize> = (0..dataset.n_rows())
        .filter(|&i| dataset.labels()[i] == train_label)
        .collect();
    let target_idx: Vec<usize> = (0..dataset.n_rows())
        .filter(|&i| dataset.labels()[i] != train_label)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    train_idx.shuffle(&mut rng);
    let n_train = train_idx.len() / 2;

    let train_rows = &train_idx[..n_train];
    let mut test_rows: Vec<usize> = train_idx[n_train..].to_vec();
    let mut test_truth = vec![true; test_rows.len()];
    test_rows.extend_from_slice(&target_idx);
    test_truth.extend(std::iter::repeat(false).take(target_idx.len()));

    Ok(ZeroShotSplit {
        train_features: dataset.features.select(Axis(0), train_rows),
        test_features: dataset.features.select(Axis(0), &test_rows),
        test_truth,
        train_label: train_label.to_string(),
        target_label,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    const KEEL_BASIC: &str = "\
@relation toy
@attribute At1 real [0.0, 10.0]
@attribute At2 real [0.0, 10.0]
@attribute Class {1, 2}
@data
1.0, 2.0, 1
3.0, 4.0, 2
";

    #[test]
    fn keel_defaults_to_last_attribute_as_class() {
        let ds = parse_keel::<f64>(KEEL_BASIC).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.labels(), ["1", "2"]);
        assert_eq!(ds.features(), &array![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(ds.label_names(), ["1", "2"]);
    }

    #[test]
    fn keel_outputs_directive_picks_class_column() {
        let text = "\
@relation toy
@attribute Class {a, b}
@attribute At1 real
@attribute At2 real
@inputs At1, At2
@outputs Class
@data
a, 1.0, 2.0
b, 3.0, 4.0
";
        let ds = parse_keel::<f64>(text).unwrap();
        assert_eq!(ds.labels(), ["a", "b"]);
        assert_eq!(ds.features(), &array![[1.0, 2.0], [3.0, 4.0]]);
    }

    #[test]
    fn keel_skips_comments_and_blank_lines() {
        let text = "\
% a comment
@relation toy

@attribute At1 real
@attribute Class {1, 2}
@data
% another comment
1.0, 1

2.0, 2
";
        let ds = parse_keel::<f64>(text).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.dim(), 1);
    }

    #[test]
    fn keel_reports_arity_with_file_line_number() {
        let text = "\
@relation toy
@attribute At1 real
@attribute Class {1, 2}
@data
1.0, 1
2.0
";
        let err = parse_keel::<f64>(text).unwrap_err();
        match err {
            Error::ArityMismatch {
                line,
                expected,
                found,
            } => {
                assert_eq!(line, 6, "line numbers are 1-based file lines");
                assert_eq!(expected, 2);
                assert_eq!(found, 1);
            }
            other => panic!("expected ArityMismatch, got {other:?}"),
        }
    }

    #[test]
    fn keel_rejects_non_numeric_feature() {
        let text = "\
@relation toy
@attribute At1 real
@attribute Class {1, 2}
@data
oops, 1
";
        let err = parse_keel::<f64>(text).unwrap_err();
        match err {
            Error::NonNumericFeature { line, token } => {
                assert_eq!(line, 5);
                assert_eq!(token, "oops");
            }
            other => panic!("expected NonNumericFeature, got {other:?}"),
        }
    }

    #[test]
    fn keel_rejects_nan_and_infinity_tokens() {
        for bad in ["NaN", "inf", "-inf"] {
            let text = format!(
                "@relation t\n@attribute At1 real\n@attribute Class {{1,2}}\n@data\n{bad}, 1\n"
            );
            let err = parse_keel::<f64>(&text).unwrap_err();
            assert!(
                matches!(err, Error::NonNumericFeature { .. }),
                "token {bad:?} must be rejected, got {err:?}"
            );
        }
    }

    #[test]
    fn keel_without_data_line_is_malformed() {
        let text = "@relation toy\n@attribute At1 real\n@attribute Class {1,2}\n";
        assert!(matches!(
            parse_keel::<f64>(text),
            Err(Error::MalformedHeader(_))
        ));
    }

    #[test]
    fn keel_with_zero_data_rows_keeps_header_dim() {
        let text = "@relation toy\n@attribute A real\n@attribute B real\n@attribute Class {1,2}\n@data\n";
        let ds = parse_keel::<f64>(text).unwrap();
        assert_eq!(ds.n_rows(), 0);
        assert_eq!(ds.dim(), 2);
    }

    #[test]
    fn csv_parses_label_column_anywhere() {
        let text = "x,class,y\n1.0,a,2.0\n3.0,b,4.0\n";
        let ds = parse_csv::<f64>(text, "class").unwrap();
        assert_eq!(ds.labels(), ["a", "b"]);
        assert_eq!(ds.features(), &array![[1.0, 2.0], [3.0, 4.0]]);
    }

    #[test]
    fn csv_unknown_label_column_errors() {
        let err = parse_csv::<f64>("x,y\n1,2\n", "class").unwrap_err();
        assert!(matches!(err, Error::UnknownLabelColumn(c) if c == "class"));
    }

    #[test]
    fn csv_round_trips_through_to_csv() {
        let ds = parse_keel::<f64>(KEEL_BASIC).unwrap();
        let again = parse_csv::<f64>(&ds.to_csv(), "class").unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn feature_matrix_parses_headered_numeric_csv() {
        let m = parse_feature_matrix::<f64>("a,b\n1,2\n3,4\n").unwrap();
        assert_eq!(m, array![[1.0, 2.0], [3.0, 4.0]]);
    }

    #[test]
    fn dataset_rejects_non_finite_features() {
        let err = Dataset::new(array![[1.0, f64::NAN]], vec!["a".into()]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn scaler_matches_hand_computed_example() {
        // columns {1,3} and {2,4}: means (2,3), population stds (1,1)
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let s = Scaler::fit(&x.view()).unwrap();
        assert_abs_diff_eq!(s.means()[0], 2.0);
        assert_abs_diff_eq!(s.means()[1], 3.0);
        assert_abs_diff_eq!(s.stds()[0], 1.0);
        assert_abs_diff_eq!(s.stds()[1], 1.0);
        let z = s.apply(&x.view()).unwrap();
        assert_eq!(z, array![[-1.0, -1.0], [1.0, 1.0]]);
    }

    #[test]
    fn scaler_uses_population_std() {
        // {1,2,3}: population std = sqrt(2/3), not the sample std 1
        let x = array![[1.0], [2.0], [3.0]];
        let s = Scaler::fit(&x.view()).unwrap();
        assert_abs_diff_eq!(s.stds()[0], (2.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn scaler_maps_constant_column_to_zero() {
        let x = array![[5.0, 1.0], [5.0, 3.0]];
        let s = Scaler::fit(&x.view()).unwrap();
        let z = s.apply(&x.view()).unwrap();
        assert_eq!(z.column(0).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn scaler_fit_on_empty_errors() {
        let x = Array2::<f64>::zeros((0, 3));
        assert!(matches!(Scaler::fit(&x.view()), Err(Error::EmptyInput)));
    }

    fn toy_binary(n_a: usize, n_b: usize) -> Dataset<f64> {
        let n = n_a + n_b;
        let features =
            Array2::from_shape_fn((n, 2), |(i, j)| i as f64 + 10.0 * j as f64);
        let mut labels = vec!["a".to_string(); n_a];
        labels.extend(vec!["b".to_string(); n_b]);
        Dataset::new(features, labels).unwrap()
    }

    #[test]
    fn split_takes_floor_half_of_train_class() {
        let ds = toy_binary(7, 4);
        let split = make_zero_shot_split(&ds, "a", 1).unwrap();
        assert_eq!(split.train_features.nrows(), 3, "floor(7/2)");
        assert_eq!(split.test_features.nrows(), 4 + 4);
        assert_eq!(split.test_truth.iter().filter(|&&t| t).count(), 4);
        assert_eq!(split.target_label, "b");
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let ds = toy_binary(20, 10);
        let a = make_zero_shot_split(&ds, "a", 9).unwrap();
        let b = make_zero_shot_split(&ds, "a", 9).unwrap();
        assert_eq!(a, b);
        let c = make_zero_shot_split(&ds, "a", 10).unwrap();
        assert_ne!(
            a.train_features, c.train_features,
            "different seeds should pick different halves"
        );
    }

    #[test]
    fn split_test_set_ends_with_all_target_rows_in_order() {
        let ds = toy_binary(4, 3);
        let split = make_zero_shot_split(&ds, "a", 0).unwrap();
        // target rows are 4,5,6 with feature[0] = 4.0, 5.0, 6.0
        let tail: Vec<f64> = split
            .test_features
            .rows()
            .into_iter()
            .skip(2)
            .map(|r| r[0])
            .collect();
        assert_eq!(tail, vec![4.0, 5.0, 6.0]);
        assert_eq!(&split.test_truth[2..], &[false, false, false]);
    }

    #[test]
    fn split_rejects_non_binary_and_unknown_labels() {
        let ds = Dataset::new(
            array![[0.0], [1.0], [2.0]],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        assert!(matches!(
            make_zero_shot_split(&ds, "a", 0),
            Err(Error::NotBinary { found: 3 })
        ));
        let ds2 = toy_binary(3, 3);
        assert!(matches!(
            make_zero_shot_split(&ds2, "z", 0),
            Err(Error::UnknownLabel(l)) if l == "z"
        ));
    }
}
