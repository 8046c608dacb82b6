//! Synthetic two-class generators for experiments and tests.
//!
//! `gen_ring` produces the interesting case for this model family: class 1
//! is a compact Gaussian blob at the origin, class 2 is a thin spherical
//! shell around it, so clusters fitted to one class cover the other class
//! asymmetrically. `gen_two_blobs` is the easy case: two separated blobs.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::mix_seed;
use crate::Float;

/// Default dimensionality for [`RingSpec`].
///
/// Chosen together with the default annulus so the shell behaves
/// asymmetrically: clusters fitted to the blob exclude the shell, while
/// clusters fitted to the shell keep radii wide enough (thanks to the
/// radial spread within each cluster) to keep swallowing the blob even at
/// large K. In 2 dimensions the shell collapses onto thin arcs and that
/// asymmetry disappears.
pub const DEFAULT_RING_DIM: usize = 8;

/// Parameters for [`gen_ring`]: a Gaussian blob (class "1", `n_inner` rows)
/// inside a spherical shell (class "2", `n_outer` rows).
#[derive(Debug, Clone, PartialEq)]
pub struct RingSpec {
    pub n_inner: usize,
    pub n_outer: usize,
    /// Standard deviation of the inner blob, per coordinate.
    pub inner_sigma: f64,
    /// Shell radii: points are drawn with radius uniform in
    /// `[annulus_min, annulus_max]`. `annulus_min` must clear the inner
    /// blob by at least `3 * inner_sigma`.
    pub annulus_min: f64,
    pub annulus_max: f64,
    pub dim: usize,
    pub seed: u64,
}

impl Default for RingSpec {
    fn default() -> Self {
        RingSpec {
            n_inner: 1000,
            n_outer: 1000,
            inner_sigma: 1.0,
            annulus_min: 4.0,
            annulus_max: 16.0,
            dim: DEFAULT_RING_DIM,
            seed: 0,
        }
    }
}

/// Parameters for [`gen_two_blobs`]: two Gaussian blobs (classes "1" and
/// "2") with means `separation` apart along the first axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBlobSpec {
    pub n_per_class: usize,
    pub dim: usize,
    pub separation: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for TwoBlobSpec {
    fn default() -> Self {
        TwoBlobSpec {
            n_per_class: 1000,
            dim: 2,
            separation: 6.0,
            sigma: 1.0,
            seed: 0,
        }
    }
}

fn gaussian_row(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v = gaussian_row(rng, dim);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn to_dataset<F: Float>(rows: Vec<Vec<f64>>, labels: Vec<String>, dim: usize) -> Result<Dataset<F>> {
    let n = rows.len();
    let mut flat: Vec<F> = Vec::with_capacity(n * dim);
    for row in rows {
        for v in row {
            flat.push(F::from_f64(v).expect("generated value fits the scalar type"));
        }
    }
    let features = Array2::from_shape_vec((n, dim), flat).expect("rows are rectangular");
    Dataset::new(features, labels)
}

/// Generate the blob-in-shell dataset described by `spec`.
///
/// Class "1" rows come first. Both classes use their own RNG stream derived
/// from `spec.seed`, so changing `n_inner` does not disturb class 2.
pub fn gen_ring<F: Float>(spec: &RingSpec) -> Result<Dataset<F>> {
    if spec.dim < 2 {
        return Err(Error::InvalidSpec(format!(
            "ring needs dim >= 2, got {}",
            spec.dim
        )));
    }
    if !(spec.inner_sigma > 0.0 && spec.inner_sigma.is_finite()) {
        return Err(Error::InvalidSpec("inner_sigma must be positive".into()));
    }
    if !(spec.annulus_min > 0.0 && spec.annulus_max > spec.annulus_min) {
        return Err(Error::InvalidSpec(
            "need 0 < annulus_min < annulus_max".into(),
        ));
    }
    if spec.annulus_min <= 3.0 * spec.inner_sigma {
        return Err(Error::InvalidSpec(
            "annulus_min must exceed 3 * inner_sigma so the classes stay apart".into(),
        ));
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(spec.n_inner + spec.n_outer);
    let mut labels: Vec<String> = Vec::with_capacity(spec.n_inner + spec.n_outer);

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, 1));
    for _ in 0..spec.n_inner {
        let row = gaussian_row(&mut rng, spec.dim)
            .into_iter()
            .map(|z| z * spec.inner_sigma)
            .collect();
        rows.push(row);
        labels.push("1".to_string());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, 2));
    for _ in 0..spec.n_outer {
        let radius = rng.random_range(spec.annulus_min..spec.annulus_max);
        let dir = unit_direction(&mut rng, spec.dim);
        rows.push(dir.into_iter().map(|u| u * radius).collect());
        labels.push("2".to_string());
    }

    to_dataset(rows, labels, spec.dim)
}

/// Generate two Gaussian blobs with means `+-separation/2` on axis 0.
pub fn gen_two_blobs<F: Float>(spec: &TwoBlobSpec) -> Result<Dataset<F>> {
    if spec.dim == 0 {
        return Err(Error::InvalidSpec("blobs need dim >= 1".into()));
    }
    if !(spec.sigma > 0.0 && spec.sigma.is_finite()) {
        return Err(Error::InvalidSpec("sigma must be positive".into()));
    }
    if !(spec.separation >= 0.0 && spec.separation.is_finite()) {
        return Err(Error::InvalidSpec("separation must be non-negative".into()));
    }

    let n = spec.n_per_class;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(2 * n);
    let mut labels: Vec<String> = Vec::with_capacity(2 * n);
    for (class, label, offset) in [
        (1u64, "1", -spec.separation / 2.0),
        (2u64, "2", spec.separation / 2.0),
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, class));
        for _ in 0..n {
            let mut row: Vec<f64> = gaussian_row(&mut rng, spec.dim)
                .into_iter()
                .map(|z| z * spec.sigma)
                .collect();
            row[0] += offset;
            rows.push(row);
            labels.push(label.to_string());
        }
    }
    to_dataset(rows, labels, spec.dim)
}

/// A parsed `--synth` argument: `ring[:key=value,...]` or
/// `blobs[:key=value,...]`.
///
/// Recognised keys are the numeric fields of the matching spec struct;
/// the seed always comes from the caller via [`SynthSpec::with_seed`].
#[derive(Debug, Clone, PartialEq)]
pub enum SynthSpec {
    Ring(RingSpec),
    Blobs(TwoBlobSpec),
}

impl SynthSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, params) = match text.split_once(':') {
            Some((k, p)) => (k.trim(), p.trim()),
            None => (text.trim(), ""),
        };
        let mut spec = match kind {
            "ring" => SynthSpec::Ring(RingSpec::default()),
            "blobs" => SynthSpec::Blobs(TwoBlobSpec::default()),
            other => {
                return Err(Error::InvalidSpec(format!(
                    "unknown generator {other:?} (expected \"ring\" or \"blobs\")"
                )))
            }
        };
        if params.is_empty() {
            return Ok(spec);
        }
        for pair in params.split(',') {
            let Some((key, value)) = pair.split_once('=') else {
                return Err(Error::InvalidSpec(format!(
                    "expected key=value, got {pair:?}"
                )));
            };
            let key = key.trim();
            let value = value.trim();
            let unsigned = || -> Result<usize> {
                value
                    .parse()
                    .map_err(|_| Error::InvalidSpec(format!("{key}: bad count {value:?}")))
            };
            let float = || -> Result<f64> {
                let v: f64 = value
                    .parse()
                    .map_err(|_| Error::InvalidSpec(format!("{key}: bad number {value:?}")))?;
                if !v.is_finite() {
                    return Err(Error::InvalidSpec(format!("{key}: bad number {value:?}")));
                }
                Ok(v)
            };
            match (&mut spec, key) {
                (SynthSpec::Ring(r), "n_inner") => r.n_inner = unsigned()?,
                (SynthSpec::Ring(r), "n_outer") => r.n_outer = unsigned()?,
                (SynthSpec::Ring(r), "inner_sigma") => r.inner_sigma = float()?,
                (SynthSpec::Ring(r), "annulus_min") => r.annulus_min = float()?,
                (SynthSpec::Ring(r), "annulus_max") => r.annulus_max = float()?,
                (SynthSpec::Ring(r), "dim") => r.dim = unsigned()?,
                (SynthSpec::Blobs(b), "n_per_class") => b.n_per_class = unsigned()?,
                (SynthSpec::Blobs(b), "dim") => b.dim = unsigned()?,
                (SynthSpec::Blobs(b), "separation") => b.separation = float()?,
                (SynthSpec::Blobs(b), "sigma") => b.sigma = float()?,
                (_, "seed") => {
                    return Err(Error::InvalidSpec(
                        "seed is set by --seed, not in the generator spec".into(),
                    ))
                }
                (_, other) => {
                    return Err(Error::InvalidSpec(format!("unknown key {other:?}")));
                }
            }
        }
        Ok(spec)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            SynthSpec::Ring(r) => r.seed = seed,
            SynthSpec::Blobs(b) => b.seed = seed,
        }
        self
    }

    pub fn generate<F: Float>(&self) -> Result<Dataset<F>> {
        match self {
            SynthSpec::Ring(r) => gen_ring(r),
            SynthSpec::Blobs(b) => gen_two_blobs(b),
        }
    }
}
