//! k-means (Lloyd iterations, k-means++ seeding, best of several restarts),
//! the variation-explained curve used to choose k, and the three-way
//! satisfaction labelling of a k = 3 solution.
//!
//! Scores are treated as coordinates in R^p. Distances are squared
//! Euclidean on the raw codes.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::LikertMatrix;
use crate::linalg::RealMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("k = {k} is outside 1..={n}")]
    KTooLarge { k: usize, n: usize },
    #[error("labelling needs exactly 3 clusters, got {0}")]
    NotThreeClusters(usize),
    #[error("clusters {0} and {1} have identical center averages")]
    TieBetweenCenters(usize, usize),
    #[error("need at least one restart")]
    NoRestarts,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KMeansParams {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, restarts: 10, max_iter: 300, seed }
    }

    pub fn restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterModel<T> {
    pub k: usize,
    pub centers: Vec<Vec<T>>,
    pub assignments: Vec<usize>,
    pub wcss: T,
    pub between_ss: T,
    pub total_ss: T,
    pub pct_variation: T,
    pub sizes: Vec<usize>,
    /// Mean of each center's coordinates.
    pub center_averages: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// WCSS after each update step of the winning run.
    pub wcss_trace: Vec<T>,
    /// Index of the winning restart.
    pub best_restart: usize,
    /// WCSS traces of every restart, winner included.
    pub restart_traces: Vec<Vec<T>>,
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Nearest center, lowest index on ties.
fn nearest<T: Scalar>(x: &[T], centers: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, sq_dist(x, &centers[0]));
    for (c, center) in centers.iter().enumerate().skip(1) {
        let d = sq_dist(x, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn grand_mean<T: Scalar>(data: &RealMatrix<T>) -> Vec<T> {
    let n = T::of_usize(data.rows());
    (0..data.cols()).map(|j| (0..data.rows()).map(|i| data[(i, j)]).sum::<T>() / n).collect()
}

pub fn total_sum_of_squares<T: Scalar>(data: &RealMatrix<T>) -> T {
    let mean = grand_mean(data);
    (0..data.rows()).map(|i| sq_dist(data.row(i), &mean)).sum()
}

fn kmeans_pp_init<T: Scalar>(data: &RealMatrix<T>, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let n = data.rows();
    let mut centers = vec![data.row(rng.gen_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(data.row(i), &centers[0]).as_f64()).collect();
    while centers.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // every point coincides with a chosen center
            Err(_) => rng.gen_range(0..n),
        };
        let c = data.row(next).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(data.row(i), &c).as_f64());
        }
        centers.push(c);
    }
    centers
}

struct Run<T> {
    centers: Vec<Vec<T>>,
    assignments: Vec<usize>,
    wcss: T,
    iterations: usize,
    converged: bool,
    trace: Vec<T>,
}

fn update_centers<T: Scalar>(data: &RealMatrix<T>, assignments: &[usize], k: usize) -> (Vec<Vec<T>>, Vec<usize>) {
    let p = data.cols();
    let mut sums = vec![vec![T::zero(); p]; k];
    let mut sizes = vec![0usize; k];
    // fixed row order per cluster keeps the floating-point sums reproducible
    for (i, &c) in assignments.iter().enumerate() {
        sizes[c] += 1;
        for (s, &x) in sums[c].iter_mut().zip(data.row(i)) {
            *s = *s + x;
        }
    }
    for (c, s) in sums.iter_mut().enumerate() {
        if sizes[c] > 0 {
            let m = T::of_usize(sizes[c]);
            s.iter_mut().for_each(|v| *v = *v / m);
        }
    }
    (sums, sizes)
}

fn wcss_of<T: Scalar>(data: &RealMatrix<T>, centers: &[Vec<T>], assignments: &[usize]) -> T {
    assignments.iter().enumerate().map(|(i, &c)| sq_dist(data.row(i), &centers[c])).sum()
}

fn lloyd<T: Scalar>(data: &RealMatrix<T>, k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> Run<T> {
    let n = data.rows();
    let mut centers = kmeans_pp_init(data, k, rng);
    let mut assignments: Vec<usize> = (0..n).map(|i| nearest(data.row(i), &centers).0).collect();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let (mut new_centers, mut sizes) = update_centers(data, &assignments, k);
        // an empty cluster takes the point farthest from its current center
        while let Some(empty) = sizes.iter().position(|&s| s == 0) {
            let (far, _) = (0..n)
                .filter(|&i| sizes[assignments[i]] > 1)
                .map(|i| (i, sq_dist(data.row(i), &new_centers[assignments[i]])))
                .fold((usize::MAX, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if far == usize::MAX {
                break;
            }
            assignments[far] = empty;
            let recomputed = update_centers(data, &assignments, k);
            new_centers = recomputed.0;
            sizes = recomputed.1;
        }
        centers = new_centers;
        trace.push(wcss_of(data, &centers, &assignments));
        let next: Vec<usize> = (0..n).map(|i| nearest(data.row(i), &centers).0).collect();
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }
    if !converged {
        // centers must be the means of the final assignment
        centers = update_centers(data, &assignments, k).0;
    }
    let wcss = wcss_of(data, &centers, &assignments);
    Run { centers, assignments, wcss, iterations, converged, trace }
}

/// Best-of-`restarts` k-means on arbitrary real points (rows of `data`).
pub fn kmeans_points<T: Scalar>(data: &RealMatrix<T>, params: &KMeansParams) -> Result<ClusterModel<T>, ClusterError> {
    let (n, k) = (data.rows(), params.k);
    if k == 0 || k > n {
        return Err(ClusterError::KTooLarge { k, n });
    }
    if params.restarts == 0 {
        return Err(ClusterError::NoRestarts);
    }
    let runs: Vec<Run<T>> = (0..params.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(r as u64);
            lloyd(data, k, params.max_iter, &mut rng)
        })
        .collect();
    let restart_traces = runs.iter().map(|r| r.trace.clone()).collect();
    let (best_restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.wcss < a.1.wcss { b } else { a })
        .expect("at least one restart");

    let total_ss = total_sum_of_squares(data);
    let mean = grand_mean(data);
    let mut sizes = vec![0usize; k];
    for &c in &best.assignments {
        sizes[c] += 1;
    }
    let between_ss: T = best.centers.iter().zip(&sizes).map(|(c, &s)| T::of_usize(s) * sq_dist(c, &mean)).sum();
    let pct_variation =
        if total_ss > T::zero() { (T::one() - best.wcss / total_ss).max(T::zero()).min(T::one()) } else { T::zero() };
    let p = T::of_usize(data.cols());
    Ok(ClusterModel {
        k,
        center_averages: best.centers.iter().map(|c| c.iter().copied().sum::<T>() / p).collect(),
        centers: best.centers,
        assignments: best.assignments,
        wcss: best.wcss,
        between_ss,
        total_ss,
        pct_variation,
        sizes,
        iterations: best.iterations,
        converged: best.converged,
        wcss_trace: best.trace,
        best_restart,
        restart_traces,
    })
}

pub fn likert_points<T: Scalar>(m: &LikertMatrix) -> RealMatrix<T> {
    RealMatrix::from_row_major(m.n(), m.p(), m.rows().flatten().map(|s| T::lit(s.get() as f64)).collect())
}

/// k-means on the respondent score vectors.
pub fn kmeans<T: Scalar>(
    m: &LikertMatrix,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterModel<T>, ClusterError> {
    kmeans_points(&likert_points(m), &KMeansParams { k, restarts, max_iter: 300, seed })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint<T> {
    pub k: usize,
    pub pct_variation: T,
    pub wcss: T,
    pub restarts_used: usize,
    /// Set when the value had to be rerun because it fell below the previous k.
    pub flagged: bool,
}

const CURVE_RERUN_LIMIT: usize = 4;

/// Percentage of variation explained for each k; each k gets its own seed stream.
pub fn variation_explained_curve<T: Scalar>(
    data: &RealMatrix<T>,
    ks: impl IntoIterator<Item = usize>,
    seed: u64,
    restarts: usize,
) -> Result<Vec<CurvePoint<T>>, ClusterError> {
    let mut out: Vec<CurvePoint<T>> = Vec::new();
    for k in ks {
        let mut used = restarts;
        let mut params = KMeansParams { k, restarts: used, max_iter: 300, seed: seed.wrapping_add(k as u64) };
        let mut model = kmeans_points(data, &params)?;
        let mut flagged = false;
        if let Some(prev) = out.last() {
            let mut attempts = 0;
            while prev.k < k && model.pct_variation < prev.pct_variation && attempts < CURVE_RERUN_LIMIT {
                flagged = true;
                used *= 2;
                params.restarts = used;
                model = kmeans_points(data, &params)?;
                attempts += 1;
            }
        }
        out.push(CurvePoint { k, pct_variation: model.pct_variation, wcss: model.wcss, restarts_used: used, flagged });
    }
    Ok(out)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Opinion {
    Dissatisfied,
    Neutral,
    Satisfied,
}

impl Opinion {
    pub const ALL: [Opinion; 3] = [Opinion::Dissatisfied, Opinion::Neutral, Opinion::Satisfied];

    pub fn name(self) -> &'static str {
        match self {
            Opinion::Dissatisfied => "Dissatisfied",
            Opinion::Neutral => "Neutral",
            Opinion::Satisfied => "Satisfied",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClusterLabeling {
    /// Label of each cluster index.
    pub labels: Vec<Opinion>,
}

impl ClusterLabeling {
    /// Opinion label for every row of the clustered data.
    pub fn row_labels(&self, assignments: &[usize]) -> Vec<Opinion> {
        assignments.iter().map(|&c| self.labels[c]).collect()
    }
}

/// Lowest center average → Dissatisfied, highest → Satisfied, middle → Neutral.
pub fn label_clusters<T: Scalar>(model: &ClusterModel<T>) -> Result<ClusterLabeling, ClusterError> {
    if model.k != 3 {
        return Err(ClusterError::NotThreeClusters(model.k));
    }
    let avg = &model.center_averages;
    for i in 0..3 {
        for j in (i + 1)..3 {
            if avg[i] == avg[j] {
                return Err(ClusterError::TieBetweenCenters(i, j));
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| avg[a].partial_cmp(&avg[b]).expect("finite"));
    let mut labels = vec![Opinion::Neutral; 3];
    labels[order[0]] = Opinion::Dissatisfied;
    labels[order[2]] = Opinion::Satisfied;
    Ok(ClusterLabeling { labels })
}

/// JSON payload for reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub k: usize,
    pub centers: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub center_averages: Vec<f64>,
    pub wcss: f64,
    pub pct_variation: f64,
    pub labels: Option<Vec<Opinion>>,
}

impl ClusterSummary {
    pub fn new<T: Scalar>(model: &ClusterModel<T>, labeling: Option<&ClusterLabeling>) -> Self {
        Self {
            k: model.k,
            centers: model.centers.iter().map(|c| c.iter().map(|v| v.as_f64()).collect()).collect(),
            sizes: model.sizes.clone(),
            center_averages: model.center_averages.iter().map(|v| v.as_f64()).collect(),
            wcss: model.wcss.as_f64(),
            pct_variation: model.pct_variation.as_f64(),
            labels: labeling.map(|l| l.labels.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(rows: &[Vec<f64>]) -> RealMatrix<f64> {
        RealMatrix::from_rows(rows)
    }

    #[test]
    fn four_point_two_clusters() {
        let data = points(&[vec![1.0, 1.0], vec![1.0, 2.0], vec![9.0, 9.0], vec![9.0, 8.0]]);
        let m = kmeans_points(&data, &KMeansParams::new(2, 7)).unwrap();
        assert!((m.wcss - 1.0).abs() < 1e-12);
        let mut centers = m.centers.clone();
        centers.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(centers, vec![vec![1.0, 1.5], vec![9.0, 8.5]]);
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let data = points(&[vec![1.0, 2.0], vec![3.0, 2.0], vec![5.0, 5.0]]);
        let m = kmeans_points(&data, &KMeansParams::new(1, 1)).unwrap();
        assert_eq!(m.centers[0], vec![3.0, 3.0]);
        assert!((m.wcss - m.total_ss).abs() < 1e-12);
        assert_eq!(m.pct_variation, 0.0);
    }

    #[test]
    fn k_bounds() {
        let data = points(&[vec![1.0], vec![2.0]]);
        assert_eq!(kmeans_points(&data, &KMeansParams::new(3, 0)).unwrap_err(), ClusterError::KTooLarge { k: 3, n: 2 });
        assert!(kmeans_points(&data, &KMeansParams::new(0, 0)).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let m = LikertMatrix::from_codes_default_names(
            &(0..40)
                .map(|i| vec![(i % 5 + 1) as u8, ((i * 7) % 5 + 1) as u8, ((i / 8) % 5 + 1) as u8])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let a = kmeans::<f64>(&m, 3, 11, 10).unwrap();
        let b = kmeans::<f64>(&m, 3, 11, 10).unwrap();
        assert_eq!(a, b);
        let sum: usize = a.sizes.iter().sum();
        assert_eq!(sum, 40);
        assert!(((a.wcss + a.between_ss) - a.total_ss).abs() <= 1e-6 * a.total_ss);
    }

    #[test]
    fn ordered_labels() {
        let model = ClusterModel::<f64> {
            k: 3,
            centers: vec![vec![5.0], vec![1.0], vec![3.0]],
            assignments: vec![],
            wcss: 0.0,
            between_ss: 0.0,
            total_ss: 0.0,
            pct_variation: 0.0,
            sizes: vec![0; 3],
            center_averages: vec![4.80, 1.52, 3.37],
            iterations: 0,
            converged: true,
            wcss_trace: vec![],
            restart_traces: vec![],
            best_restart: 0,
        };
        let l = label_clusters(&model).unwrap();
        assert_eq!(l.labels, vec![Opinion::Satisfied, Opinion::Dissatisfied, Opinion::Neutral]);
        let mut tied = model.clone();
        tied.center_averages = vec![2.0, 2.0, 3.0];
        assert_eq!(label_clusters(&tied).unwrap_err(), ClusterError::TieBetweenCenters(0, 1));
        let mut two = model;
        two.k = 2;
        assert_eq!(label_clusters(&two).unwrap_err(), ClusterError::NotThreeClusters(2));
    }
}
