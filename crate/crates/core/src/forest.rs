//! Random forests: bootstrap plus a random feature subspace per tree,
//! majority-vote prediction and out-of-bag diagnostics.

use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::tree::{grow_tree_on, majority, DecisionTree, LabeledDataset, TreeError, TreeParams};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ForestError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("features per tree must satisfy 1 <= d <= p (d = {d}, p = {p})")]
    BadFeatureCount { d: usize, p: usize },
    #[error("forest needs at least one tree")]
    NoTrees,
    #[error("no tree has out-of-bag rows")]
    NoOobData,
    #[error("forest was trained on {expected} rows, got {found}")]
    RowMismatch { expected: usize, found: usize },
    #[error("cannot build worker pool: {0}")]
    WorkerPool(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Bootstrap {
    /// n draws with replacement.
    Sample,
    /// Every row exactly once (no out-of-bag rows).
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForestParams {
    pub trees: usize,
    /// `None` means ⌊√p⌋.
    pub features_per_tree: Option<usize>,
    pub seed: u64,
    pub tree: TreeParams,
    pub bootstrap: Bootstrap,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl ForestParams {
    pub fn new(seed: u64) -> Self {
        Self {
            trees: 500,
            features_per_tree: None,
            seed,
            tree: TreeParams::fully_grown(),
            bootstrap: Bootstrap::Sample,
            workers: 0,
        }
    }

    pub fn trees(mut self, trees: usize) -> Self {
        self.trees = trees;
        self
    }

    pub fn features_per_tree(mut self, d: usize) -> Self {
        self.features_per_tree = Some(d);
        self
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn resolved_features(&self, p: usize) -> usize {
        self.features_per_tree.unwrap_or_else(|| default_features_per_tree(p))
    }
}

/// ⌊√p⌋, at least 1.
pub fn default_features_per_tree(p: usize) -> usize {
    let mut d = (p as f64).sqrt() as usize;
    while (d + 1) * (d + 1) <= p {
        d += 1;
    }
    while d * d > p {
        d -= 1;
    }
    d.max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForestTree<T> {
    pub tree: DecisionTree,
    /// Sorted feature indices the tree may split on.
    pub features: Vec<usize>,
    /// Sorted bootstrap rows, with repeats.
    pub bag: Vec<usize>,
    /// Sorted rows absent from the bag.
    pub oob: Vec<usize>,
    /// Misclassification rate on `oob`; `None` when every row was in the bag.
    pub oob_error: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Forest<T> {
    pub trees: Vec<ForestTree<T>>,
    pub classes: Vec<String>,
    pub feature_names: Vec<String>,
    pub n_train: usize,
    pub params: ForestParams,
}

fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn train_one<T: Scalar>(
    d: &LabeledDataset,
    params: &ForestParams,
    n_feat: usize,
    b: usize,
) -> Result<ForestTree<T>, TreeError> {
    let (n, p) = (d.n(), d.features.p());
    let mut rng = tree_rng(params.seed, b);
    let mut features = sample(&mut rng, p, n_feat).into_vec();
    features.sort_unstable();
    let mut bag: Vec<usize> = match params.bootstrap {
        Bootstrap::Sample => (0..n).map(|_| rng.gen_range(0..n)).collect(),
        Bootstrap::Identity => (0..n).collect(),
    };
    bag.sort_unstable();
    let mut in_bag = vec![false; n];
    for &i in &bag {
        in_bag[i] = true;
    }
    let oob: Vec<usize> = (0..n).filter(|&i| !in_bag[i]).collect();
    let tree = grow_tree_on(d, &bag, &features, &params.tree)?;
    let oob_error = (!oob.is_empty()).then(|| {
        let wrong = oob.iter().filter(|&&i| tree.predict_unchecked(d.features.row(i)) != d.labels[i]).count();
        T::of_usize(wrong) / T::of_usize(oob.len())
    });
    Ok(ForestTree { tree, features, bag, oob, oob_error })
}

/// Trains `params.trees` trees. Tree b draws from its own random stream, so
/// the result does not depend on the number of workers.
pub fn train_forest<T: Scalar>(d: &LabeledDataset, params: &ForestParams) -> Result<Forest<T>, ForestError> {
    let p = d.features.p();
    let n_feat = params.resolved_features(p);
    if n_feat == 0 || n_feat > p {
        return Err(ForestError::BadFeatureCount { d: n_feat, p });
    }
    if params.trees == 0 {
        return Err(ForestError::NoTrees);
    }
    if d.n() == 0 {
        return Err(TreeError::NoRows.into());
    }
    let build =
        || (0..params.trees).into_par_iter().map(|b| train_one(d, params, n_feat, b)).collect::<Result<Vec<_>, _>>();
    let trees = if params.workers == 0 {
        build()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(params.workers)
            .build()
            .map_err(|e| ForestError::WorkerPool(e.to_string()))?
            .install(build)?
    };
    Ok(Forest {
        trees,
        classes: d.classes.clone(),
        feature_names: d.features.names().to_vec(),
        n_train: d.n(),
        params: params.clone(),
    })
}

impl<T: Scalar> Forest<T> {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn votes(&self, x: &[u8]) -> Result<Vec<u64>, ForestError> {
        if x.len() != self.n_features() {
            return Err(TreeError::FeatureMismatch { expected: self.n_features(), found: x.len() }.into());
        }
        let mut votes = vec![0u64; self.classes.len()];
        for t in &self.trees {
            votes[t.tree.predict_unchecked(x)] += 1;
        }
        Ok(votes)
    }

    pub fn oob_errors(&self) -> Vec<Option<T>> {
        self.trees.iter().map(|t| t.oob_error).collect()
    }
}

/// Majority vote; ties go to the class listed first.
pub fn predict_forest<T: Scalar>(f: &Forest<T>, x: &[u8]) -> Result<usize, ForestError> {
    Ok(majority(&f.votes(x)?))
}

/// Mean per-tree out-of-bag error over trees that have out-of-bag rows.
pub fn avoob<T: Scalar>(f: &Forest<T>) -> Result<T, ForestError> {
    let errs: Vec<T> = f.trees.iter().filter_map(|t| t.oob_error).collect();
    if errs.is_empty() {
        return Err(ForestError::NoOobData);
    }
    Ok(errs.iter().copied().sum::<T>() / T::of_usize(errs.len()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfusionMatrix<T> {
    pub classes: Vec<String>,
    /// true class × predicted class
    pub counts: Vec<Vec<u64>>,
    /// 1 − diagonal / row sum; `None` for classes with no covered rows.
    pub class_error: Vec<Option<T>>,
    /// Rows with at least one out-of-bag vote.
    pub covered: usize,
    /// Rows that were in every bag.
    pub excluded: usize,
}

impl<T: Scalar> ConfusionMatrix<T> {
    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>, excluded: usize) -> Self {
        let class_error = counts
            .iter()
            .enumerate()
            .map(|(g, row)| {
                let total: u64 = row.iter().sum();
                (total > 0).then(|| T::one() - T::of_usize(row[g] as usize) / T::of_usize(total as usize))
            })
            .collect();
        let covered = counts.iter().flatten().sum::<u64>() as usize;
        Self { classes, counts, class_error, covered, excluded }
    }

    pub fn error_rate(&self) -> Option<T> {
        (self.covered > 0).then(|| {
            let right: u64 = (0..self.classes.len()).map(|g| self.counts[g][g]).sum();
            T::one() - T::of_usize(right as usize) / T::of_usize(self.covered)
        })
    }

    pub fn coverage(&self) -> T {
        let total = self.covered + self.excluded;
        if total == 0 {
            T::zero()
        } else {
            T::of_usize(self.covered) / T::of_usize(total)
        }
    }

    /// Header `true\predicted,<classes…>,class_error`, one row per true class.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.classes.iter().cloned());
        header.push("class_error".into());
        w.write_record(&header)?;
        for (g, row) in self.counts.iter().enumerate() {
            let mut rec = vec![self.classes[g].clone()];
            rec.extend(row.iter().map(u64::to_string));
            rec.push(self.class_error[g].map(|e| e.to_string()).unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Each training row is predicted by the trees for which it was out of bag.
pub fn oob_confusion<T: Scalar>(f: &Forest<T>, d: &LabeledDataset) -> Result<ConfusionMatrix<T>, ForestError> {
    if d.n() != f.n_train {
        return Err(ForestError::RowMismatch { expected: f.n_train, found: d.n() });
    }
    if d.features.p() != f.n_features() {
        return Err(TreeError::FeatureMismatch { expected: f.n_features(), found: d.features.p() }.into());
    }
    let g = f.classes.len();
    let mut votes = vec![0u64; d.n() * g];
    for t in &f.trees {
        for &i in &t.oob {
            votes[i * g + t.tree.predict_unchecked(d.features.row(i))] += 1;
        }
    }
    let mut counts = vec![vec![0u64; g]; g];
    let mut excluded = 0;
    for i in 0..d.n() {
        let v = &votes[i * g..(i + 1) * g];
        if v.iter().all(|&c| c == 0) {
            excluded += 1;
        } else {
            counts[d.labels[i]][majority(v)] += 1;
        }
    }
    Ok(ConfusionMatrix::from_counts(f.classes.clone(), counts, excluded))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImportanceReport<T> {
    pub features: Vec<String>,
    /// Mean over trees of the summed decrease in n·Gini.
    pub scores: Vec<T>,
    /// Feature indices, most important first; ties by index.
    pub ranking: Vec<usize>,
}

impl<T: Scalar> ImportanceReport<T> {
    pub fn top(&self) -> Option<&str> {
        self.ranking.first().map(|&j| self.features[j].as_str())
    }

    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.ranking.iter().position(|&j| self.features[j] == feature).map(|r| r + 1)
    }

    /// `feature,importance,rank` in rank order.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature", "importance", "rank"])?;
        for (r, &j) in self.ranking.iter().enumerate() {
            w.write_record([self.features[j].clone(), self.scores[j].to_string(), (r + 1).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn variable_importance<T: Scalar>(f: &Forest<T>) -> ImportanceReport<T> {
    let p = f.n_features();
    let mut sums = vec![0.0f64; p];
    for t in &f.trees {
        for (s, v) in sums.iter_mut().zip(t.tree.impurity_decrease_by_feature()) {
            *s += v;
        }
    }
    let b = f.trees.len().max(1) as f64;
    let scores: Vec<T> = sums.iter().map(|&s| T::lit(s / b)).collect();
    let mut ranking: Vec<usize> = (0..p).collect();
    ranking.sort_by(|&a, &c| scores[c].partial_cmp(&scores[a]).expect("finite").then(a.cmp(&c)));
    ImportanceReport { features: f.feature_names.clone(), scores, ranking }
}
