//! Seeded k-means with k-means++ initialisation.
//!
//! All tie-breaks go to the lowest index and the RNG is a fixed portable
//! generator, so a given `(points, config)` pair always produces the same
//! result. Clusters are never left empty: an empty cluster is repaired by
//! relocating its centroid onto the point that sits farthest from its own
//! centroid (never the sole member of another cluster).

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::Float;

/// Parameters for [`kmeans_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl KMeansConfig {
    /// Config with the default iteration cap (300) and tolerance (1e-6).
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            max_iterations: 300,
            tolerance: 1e-6,
            seed,
        }
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

/// Output of [`kmeans_fit`].
///
/// Every cluster has at least one member, and unless the run hit the
/// degenerate duplicate-point corner, `assignments` is exactly what
/// [`assign_points`] returns for `centroids`.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<F: Float> {
    pub centroids: Array2<F>,
    pub assignments: Vec<usize>,
    pub sse: F,
    pub iterations: usize,
}

#[inline]
fn dist_sq<F: Float>(a: ArrayView1<F>, b: ArrayView1<F>) -> F {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Euclidean distance between two vectors of equal length.
pub fn euclidean_distance<F: Float>(a: ArrayView1<F>, b: ArrayView1<F>) -> Result<F> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(dist_sq(a, b).sqrt())
}

/// k-means++ seeding: first centroid uniform, each next one drawn with
/// probability proportional to the squared distance to the nearest centroid
/// chosen so far. If every remaining squared distance is zero (fewer than
/// `k` distinct points), the leftover centroids repeat already-chosen points.
pub fn kmeanspp_init<F: Float>(points: &ArrayView2<F>, k: usize, seed: u64) -> Result<Array2<F>> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));

    // d2[i] = squared distance from point i to its nearest chosen centroid
    let mut d2: Vec<F> = (0..n)
        .map(|i| dist_sq(points.row(i), points.row(chosen[0])))
        .collect();

    for round in 1..k {
        let total: F = d2.iter().copied().sum();
        if total <= F::zero() {
            // all remaining points coincide with a centroid
            chosen.push(chosen[round % chosen.len()]);
            continue;
        }
        let r = F::from_f64(rng.random::<f64>()).expect("unit float converts") * total;
        let mut acc = F::zero();
        let mut pick = None;
        let mut last_positive = 0usize;
        for (i, &w) in d2.iter().enumerate() {
            if w > F::zero() {
                last_positive = i;
            }
            acc += w;
            if acc > r {
                pick = Some(i);
                break;
            }
        }
        // acc can land exactly on total under rounding; fall back to the
        // last point that had any weight
        let idx = pick.unwrap_or(last_positive);
        chosen.push(idx);
        for i in 0..n {
            let d = dist_sq(points.row(i), points.row(idx));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }

    let dim = points.ncols();
    let mut centroids = Array2::zeros((k, dim));
    for (j, &idx) in chosen.iter().enumerate() {
        centroids.row_mut(j).assign(&points.row(idx));
    }
    Ok(centroids)
}

fn assign_unchecked<F: Float>(points: &ArrayView2<F>, centroids: &ArrayView2<F>) -> Vec<usize> {
    points
        .rows()
        .into_iter()
        .map(|p| {
            let mut best = 0usize;
            let mut best_d = dist_sq(p, centroids.row(0));
            for (j, c) in centroids.rows().into_iter().enumerate().skip(1) {
                let d = dist_sq(p, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Assign each point to its nearest centroid (ties to the lowest index).
pub fn assign_points<F: Float>(
    points: &ArrayView2<F>,
    centroids: &ArrayView2<F>,
) -> Result<Vec<usize>> {
    if centroids.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    if points.ncols() != centroids.ncols() {
        return Err(Error::DimMismatch {
            expected: centroids.ncols(),
            found: points.ncols(),
        });
    }
    Ok(assign_unchecked(points, centroids))
}

fn tally(assignments: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0usize; k];
    for &a in assignments {
        counts[a] += 1;
    }
    counts
}

fn means_of<F: Float>(points: &ArrayView2<F>, assignments: &[usize], k: usize) -> Array2<F> {
    let dim = points.ncols();
    let mut sums: Array2<F> = Array2::zeros((k, dim));
    let counts = tally(assignments, k);
    for (i, p) in points.rows().into_iter().enumerate() {
        let mut row = sums.row_mut(assignments[i]);
        for (s, &v) in row.iter_mut().zip(p.iter()) {
            *s += v;
        }
    }
    for (j, &c) in counts.iter().enumerate() {
        if c > 0 {
            let cf = F::from_usize(c).expect("cluster size fits in the scalar type");
            sums.row_mut(j).mapv_inplace(|v| v / cf);
        }
    }
    sums
}

/// Relocate every empty cluster's centroid onto the point farthest from its
/// currently assigned centroid, skipping points that are the only member of
/// their cluster. Mutates `centroids` and `assignments`; afterwards every
/// cluster has at least one member.
fn repair_empty<F: Float>(
    points: &ArrayView2<F>,
    centroids: &mut Array2<F>,
    assignments: &mut [usize],
    counts: &mut [usize],
) {
    let k = counts.len();
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let mut best: Option<(F, usize)> = None;
        for (i, p) in points.rows().into_iter().enumerate() {
            if counts[assignments[i]] <= 1 {
                continue;
            }
            let d = dist_sq(p, centroids.row(assignments[i]));
            if best.map_or(true, |(bd, _)| d > bd) {
                best = Some((d, i));
            }
        }
        let (_, p) = best.expect("with n >= k some cluster has more than one member");
        counts[assignments[p]] -= 1;
        assignments[p] = j;
        counts[j] = 1;
        centroids.row_mut(j).assign(&points.row(p));
    }
}

/// Assign points, repairing empty clusters until the assignment is stable
/// or a round cap is hit (only reachable when distinct points are scarcer
/// than k). Returns the assignments and whether any repair happened.
fn assign_with_repair<F: Float>(
    points: &ArrayView2<F>,
    centroids: &mut Array2<F>,
    k: usize,
) -> (Vec<usize>, bool) {
    let mut assignments = assign_unchecked(points, &centroids.view());
    let mut repaired = false;
    let mut rounds = 0usize;
    loop {
        let mut counts = tally(&assignments, k);
        if counts.iter().all(|&c| c > 0) {
            return (assignments, repaired);
        }
        repair_empty(points, centroids, &mut assignments, &mut counts);
        repaired = true;
        rounds += 1;
        if rounds > k {
            // duplicate-heavy data can cycle; keep the manually repaired
            // assignment, which is guaranteed non-empty
            return (assignments, repaired);
        }
        assignments = assign_unchecked(points, &centroids.view());
    }
}

/// Recompute centroids as member means, then repair empty clusters by
/// relocating their centroids onto far-out points (updating `assignments`
/// to match). Callers must pass assignments produced for these points.
pub fn update_centroids<F: Float>(
    points: &ArrayView2<F>,
    assignments: &mut [usize],
    k: usize,
) -> Array2<F> {
    assert_eq!(points.nrows(), assignments.len(), "one assignment per point");
    assert!(k >= 1 && k <= points.nrows(), "need 1 <= k <= n");
    assert!(assignments.iter().all(|&a| a < k), "assignment out of range");
    let mut centroids = means_of(points, assignments, k);
    let mut counts = tally(assignments, k);
    repair_empty(points, &mut centroids, assignments, &mut counts);
    centroids
}

fn sse_of<F: Float>(
    points: &ArrayView2<F>,
    centroids: &ArrayView2<F>,
    assignments: &[usize],
) -> F {
    points
        .rows()
        .into_iter()
        .zip(assignments)
        .map(|(p, &a)| dist_sq(p, centroids.row(a)))
        .sum()
}

/// Lloyd's algorithm from a k-means++ start.
///
/// Stops when the largest centroid movement in a round is at most
/// `tolerance` (and no empty-cluster repair fired that round) or after
/// `max_iterations` update rounds.
pub fn kmeans_fit<F: Float>(points: &ArrayView2<F>, config: &KMeansConfig) -> Result<KMeansResult<F>> {
    kmeans_fit_with(points, config, |_| {})
}

/// [`kmeans_fit`] with an observer that sees the SSE after the initial
/// assignment and after every update round (used to test monotonicity).
pub(crate) fn kmeans_fit_with<F: Float>(
    points: &ArrayView2<F>,
    config: &KMeansConfig,
    mut on_sse: impl FnMut(f64),
) -> Result<KMeansResult<F>> {
    let n = points.nrows();
    let k = config.k;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    if !config.tolerance.is_finite() || config.tolerance < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be finite and non-negative, got {}",
            config.tolerance
        )));
    }
    let tol = F::from_f64(config.tolerance).expect("tolerance converts to the scalar type");

    let mut centroids = kmeanspp_init(points, k, config.seed)?;
    let (mut assignments, _) = assign_with_repair(points, &mut centroids, k);
    let mut sse = sse_of(points, &centroids.view(), &assignments);
    on_sse(sse.to_f64().unwrap_or(f64::NAN));

    let mut iterations = 0usize;
    while iterations < config.max_iterations {
        let new_centroids = means_of(points, &assignments, k);
        let movement = centroids
            .rows()
            .into_iter()
            .zip(new_centroids.rows())
            .map(|(old, new)| dist_sq(old, new).sqrt())
            .fold(F::zero(), F::max);
        centroids = new_centroids;
        iterations += 1;

        let (next, repaired) = assign_with_repair(points, &mut centroids, k);
        assignments = next;
        sse = sse_of(points, &centroids.view(), &assignments);
        on_sse(sse.to_f64().unwrap_or(f64::NAN));

        // a repair teleports a centroid, which counts as movement
        if movement <= tol && !repaired {
            break;
        }
    }

    Ok(KMeansResult {
        centroids,
        assignments,
        sse,
        iterations,
    })
}
