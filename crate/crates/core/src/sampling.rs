//! Source-side instance selection ahead of transfer boosting.
//!
//! Two stages feed [`build_pool`]:
//!
//! * importance sampling keeps the `p` source rows closest to the target
//!   feature mean;
//! * k-center (variance) sampling clusters the source with k-means, maps each
//!   centroid to its nearest target row, then maps each of those back to its
//!   nearest source row. The resulting source rows are appended to the target
//!   side of the pool.
//!
//! Distances are computed on features z-scored with statistics fit on the
//! union of source and target, unless `standardize` is off.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Standardization};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
}

impl Metric {
    pub fn distance(self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b.iter())
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt(),
            Metric::Manhattan => a.iter().zip(b.iter()).map(|(u, v)| (u - v).abs()).sum(),
        }
    }
}

fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum()
}

fn check_dims(source: &Dataset, target: &Dataset) -> Result<()> {
    if source.n_features() != target.n_features() {
        return Err(Error::DimensionMismatch {
            expected: source.n_features(),
            actual: target.n_features(),
        });
    }
    Ok(())
}

/// Indices (ascending) of the `p` source rows nearest the target mean.
/// Equal distances favour the lower index.
pub fn importance_sample(source: &Dataset, target: &Dataset, p: usize, metric: Metric) -> Result<Vec<usize>> {
    check_dims(source, target)?;
    let n = source.n_rows();
    if p == 0 || p > n {
        return Err(Error::param(format!("p = {p} must lie in [1, {n}]")));
    }
    let mean: Array1<f64> = target.features().mean_axis(Axis(0)).expect("target has rows");
    let dist: Vec<f64> = source
        .features()
        .rows()
        .into_iter()
        .map(|r| metric.distance(r, mean.view()))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    let mut chosen = order[..p].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Array2<f64>,
    pub assignment: Vec<usize>,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

fn nearest(point: ArrayView1<'_, f64>, centroids: ArrayView2<'_, f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.rows().into_iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, then proportional to squared
/// distance from the nearest chosen centre.
fn seed_centroids(x: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = x.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|r| squared_distance(r, x.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &v) in d2.iter().enumerate() {
                if v <= 0.0 {
                    continue;
                }
                if u < v {
                    pick = i;
                    break;
                }
                u -= v;
            }
            if d2[pick] <= 0.0 {
                // Rounding walked off the end; take the last positive entry.
                pick = d2.iter().rposition(|&v| v > 0.0).expect("total > 0");
            }
            pick
        } else {
            // Every point coincides with a centre; fall back to unused rows.
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, r) in x.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(r, x.row(next)));
        }
    }
    x.select(Axis(0), &chosen)
}

/// Lloyd's algorithm from k-means++ seeds. An empty cluster takes the point
/// farthest from its current centroid.
pub fn kmeans(x: ArrayView2<'_, f64>, k: usize, seed: u64, config: KMeansConfig) -> Result<KMeansResult> {
    let (n, d) = x.dim();
    if k == 0 || k > n {
        return Err(Error::param(format!("k = {k} must lie in [1, {n}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(x, k, &mut rng);
    let mut assignment = vec![0; n];
    let mut dist = vec![0.0; n];
    let mut history = Vec::new();

    for _ in 0..config.max_iter.max(1) {
        for (i, row) in x.rows().into_iter().enumerate() {
            let (c, dd) = nearest(row, centroids.view());
            assignment[i] = c;
            dist[i] = dd;
        }
        repair_empty(&mut assignment, &mut dist, k, x, &mut centroids);
        history.push(dist.iter().sum());

        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, row) in x.rows().into_iter().enumerate() {
            let mut s = sums.row_mut(assignment[i]);
            s += &row;
            counts[assignment[i]] += 1;
        }
        let mut shift: f64 = 0.0;
        for (c, &count) in counts.iter().enumerate() {
            let mut new = sums.row(c).to_owned();
            new /= count as f64;
            shift = shift.max(squared_distance(new.view(), centroids.row(c)).sqrt());
            centroids.row_mut(c).assign(&new);
        }
        if shift < config.tol {
            break;
        }
    }

    for (i, row) in x.rows().into_iter().enumerate() {
        let (c, dd) = nearest(row, centroids.view());
        assignment[i] = c;
        dist[i] = dd;
    }
    repair_empty(&mut assignment, &mut dist, k, x, &mut centroids);
    let inertia = dist.iter().sum();
    Ok(KMeansResult {
        centroids,
        assignment,
        inertia,
        history,
    })
}

fn repair_empty(
    assignment: &mut [usize],
    dist: &mut [f64],
    k: usize,
    x: ArrayView2<'_, f64>,
    centroids: &mut Array2<f64>,
) {
    let mut counts = vec![0usize; k];
    for &c in assignment.iter() {
        counts[c] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        // Farthest point whose own cluster can spare it.
        let donor = (0..assignment.len())
            .filter(|&i| counts[assignment[i]] > 1)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
            .expect("k <= n leaves some cluster with two points");
        counts[assignment[donor]] -= 1;
        counts[empty] = 1;
        assignment[donor] = empty;
        dist[donor] = 0.0;
        centroids.row_mut(empty).assign(&x.row(donor));
    }
}

/// Index of the row of `candidates` nearest `point`; ties to the lower index.
fn nearest_row(point: ArrayView1<'_, f64>, candidates: ArrayView2<'_, f64>, metric: Metric) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, row) in candidates.rows().into_iter().enumerate() {
        let d = metric.distance(point, row);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Variance sampling: source rows nearest the target rows nearest each
/// k-means centroid of the source. Duplicates are collapsed; output is
/// ascending.
pub fn k_center_sample(
    source: &Dataset,
    target: &Dataset,
    k: usize,
    seed: u64,
    metric: Metric,
) -> Result<Vec<usize>> {
    check_dims(source, target)?;
    let n = source.n_rows();
    if k > n {
        return Err(Error::param(format!("k = {k} must lie in [0, {n}]")));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let clusters = kmeans(source.features(), k, seed, KMeansConfig::default())?;
    let representatives: Vec<usize> = clusters
        .centroids
        .rows()
        .into_iter()
        .map(|c| nearest_row(c, target.features(), metric))
        .collect();
    let mut chosen: Vec<usize> = representatives
        .iter()
        .map(|&t| nearest_row(target.features().row(t), source.features(), metric))
        .collect();
    chosen.sort_unstable();
    chosen.dedup();
    Ok(chosen)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Source,
    Target,
    SourceAsTarget,
}

/// Rows `0..p` are sampled source instances; rows `p..p+q` are the target
/// instances followed by any source rows promoted by variance sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPool {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub p: usize,
    pub q: usize,
    pub provenance: Vec<Provenance>,
    /// Row index within the originating dataset (source or target).
    pub origin: Vec<usize>,
}

impl TrainingPool {
    /// Unsampled pool: all of `source` then all of `target`.
    pub fn concat(source: &Dataset, target: &Dataset) -> Result<Self> {
        let all: Vec<usize> = (0..source.n_rows()).collect();
        TrainingPool::assemble(source, target, &all, &[])
    }

    /// A target-only pool (p = 0).
    pub fn target_only(target: &Dataset) -> Self {
        TrainingPool {
            x: target.features().to_owned(),
            y: target.targets().to_owned(),
            p: 0,
            q: target.n_rows(),
            provenance: vec![Provenance::Target; target.n_rows()],
            origin: (0..target.n_rows()).collect(),
        }
    }

    fn assemble(source: &Dataset, target: &Dataset, sampled: &[usize], promoted: &[usize]) -> Result<Self> {
        check_dims(source, target)?;
        let p = sampled.len();
        let q = target.n_rows() + promoted.len();
        let xs = source.features().select(Axis(0), sampled);
        let xp = source.features().select(Axis(0), promoted);
        let x =
            ndarray::concatenate(Axis(0), &[xs.view(), target.features(), xp.view()]).expect("dims checked");
        let ys = source.targets().select(Axis(0), sampled);
        let yp = source.targets().select(Axis(0), promoted);
        let y = ndarray::concatenate(Axis(0), &[ys.view(), target.targets(), yp.view()]).expect("1-d concat");
        let mut provenance = vec![Provenance::Source; p];
        provenance.extend(std::iter::repeat_n(Provenance::Target, target.n_rows()));
        provenance.extend(std::iter::repeat_n(Provenance::SourceAsTarget, promoted.len()));
        let mut origin = sampled.to_vec();
        origin.extend(0..target.n_rows());
        origin.extend_from_slice(promoted);
        Ok(TrainingPool {
            x,
            y,
            p,
            q,
            provenance,
            origin,
        })
    }

    pub fn len(&self) -> usize {
        self.p + self.q
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn count(&self, tag: Provenance) -> usize {
        self.provenance.iter().filter(|&&t| t == tag).count()
    }
}

/// Sampling parameters for [`build_pool`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Source rows kept by importance sampling.
    pub p: usize,
    /// Clusters for k-center sampling; 0 disables it.
    pub k: usize,
    pub seed: u64,
    pub standardize: bool,
    pub metric: Metric,
}

impl SamplingConfig {
    /// `p = ceil(n / 2)`, `k = min(10, floor(m / 2))`.
    pub fn defaults_for(n_source: usize, n_target: usize, seed: u64) -> Self {
        SamplingConfig {
            p: n_source.div_ceil(2),
            k: 10.min(n_target / 2),
            seed,
            standardize: true,
            metric: Metric::Euclidean,
        }
    }
}

/// Importance + variance sampling, returning the pool with original
/// (unscaled) features.
pub fn build_pool(source: &Dataset, target: &Dataset, config: &SamplingConfig) -> Result<TrainingPool> {
    check_dims(source, target)?;
    let (s, t) = if config.standardize {
        let stats = Standardization::fit(&source.concat(target)?);
        (
            source.with_features(stats.transform_matrix(source.features())?),
            target.with_features(stats.transform_matrix(target.features())?),
        )
    } else {
        (source.clone(), target.clone())
    };
    let sampled = if config.p == source.n_rows() {
        (0..source.n_rows()).collect()
    } else {
        importance_sample(&s, &t, config.p, config.metric)?
    };
    let promoted = k_center_sample(&s, &t, config.k, config.seed, config.metric)?;
    TrainingPool::assemble(source, target, &sampled, &promoted)
}
