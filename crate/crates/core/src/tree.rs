//! CART-style classification trees over small-integer ordinal predictors,
//! grown greedily with Gini impurity.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::LikertMatrix;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("node has no observations")]
    EmptyNode,
    #[error("expected {expected} features, found {found}")]
    FeatureMismatch { expected: usize, found: usize },
    #[error("{labels} labels for {rows} rows")]
    LabelLengthMismatch { rows: usize, labels: usize },
    #[error("label {label} at row {row} is outside the {classes} classes")]
    ClassOutOfRange { row: usize, label: usize, classes: usize },
    #[error("at least one class is required")]
    NoClasses,
    #[error("no training rows")]
    NoRows,
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature columns have unequal lengths")]
    RaggedColumns,
}

/// Row-major matrix of small ordinal codes with column names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FeatureMatrix {
    names: Vec<String>,
    n: usize,
    data: Vec<u8>,
}

impl FeatureMatrix {
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<u8>>) -> Result<Self, TreeError> {
        let n = columns.first().map(Vec::len).unwrap_or(0);
        if columns.len() != names.len() || columns.iter().any(|c| c.len() != n) {
            return Err(TreeError::RaggedColumns);
        }
        let p = names.len();
        let mut data = vec![0u8; n * p];
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                data[i * p + j] = v;
            }
        }
        Ok(Self { names, n, data })
    }

    pub fn from_rows(names: Vec<String>, rows: &[Vec<u8>]) -> Result<Self, TreeError> {
        let p = names.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(TreeError::RaggedColumns);
        }
        Ok(Self { names, n: rows.len(), data: rows.concat() })
    }

    pub fn from_likert(m: &LikertMatrix) -> Self {
        let data = m.rows().flat_map(|r| r.iter().map(|s| s.get())).collect();
        Self { names: m.item_names().to_vec(), n: m.n(), data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.p() + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        let p = self.p();
        &self.data[i * p..(i + 1) * p]
    }

    pub fn column(&self, j: usize) -> Vec<u8> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    /// Keeps the named columns in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Self, TreeError> {
        let cols = names
            .iter()
            .map(|&name| {
                self.index_of(name).map(|j| self.column(j)).ok_or_else(|| TreeError::UnknownFeature(name.into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let names = names.iter().map(|s| s.to_string()).collect();
        let mut out = Self::from_columns(names, cols)?;
        out.n = self.n;
        Ok(out)
    }

    /// Drops the named column.
    pub fn without(&self, name: &str) -> Result<Self, TreeError> {
        let j = self.index_of(name).ok_or_else(|| TreeError::UnknownFeature(name.into()))?;
        let keep: Vec<&str> = self.names.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, s)| s.as_str()).collect();
        self.select(&keep)
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: &[u8]) -> Result<(), TreeError> {
        if values.len() != self.n {
            return Err(TreeError::RaggedColumns);
        }
        let p = self.p();
        let mut data = Vec::with_capacity(self.n * (p + 1));
        for (i, &v) in values.iter().enumerate() {
            data.extend_from_slice(&self.data[i * p..(i + 1) * p]);
            data.push(v);
        }
        self.data = data;
        self.names.push(name.into());
        Ok(())
    }
}

/// Features with class labels `0..classes.len()`, ordered for tie-breaking.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LabeledDataset {
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, labels: Vec<usize>, classes: Vec<String>) -> Result<Self, TreeError> {
        if classes.is_empty() {
            return Err(TreeError::NoClasses);
        }
        if labels.len() != features.n() {
            return Err(TreeError::LabelLengthMismatch { rows: features.n(), labels: labels.len() });
        }
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes.len()) {
            return Err(TreeError::ClassOutOfRange { row, label, classes: classes.len() });
        }
        Ok(Self { features, labels, classes })
    }

    /// Uses the distinct values of a code column as ordered classes.
    pub fn from_codes(features: FeatureMatrix, response: &[u8]) -> Result<Self, TreeError> {
        let mut levels: Vec<u8> = response.to_vec();
        levels.sort_unstable();
        levels.dedup();
        let labels = response.iter().map(|v| levels.binary_search(v).expect("present")).collect();
        Self::new(features, labels, levels.iter().map(u8::to_string).collect())
    }

    pub fn n(&self) -> usize {
        self.features.n()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_counts(&self) -> Vec<u64> {
        let mut c = vec![0; self.n_classes()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeParams {
    pub min_split: usize,
    pub min_leaf: usize,
    pub max_depth: usize,
    /// Minimum split improvement relative to the root's n·Gini.
    pub cp: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { min_split: 20, min_leaf: 7, max_depth: 30, cp: 0.01 }
    }
}

impl TreeParams {
    /// Grow until nodes are pure or a single row.
    pub fn fully_grown() -> Self {
        Self { min_split: 2, min_leaf: 1, max_depth: usize::MAX, cp: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: u8,
        class_counts: Vec<u64>,
        /// n·Gini(parent) − n_l·Gini(left) − n_r·Gini(right)
        impurity_decrease: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        class_counts: Vec<u64>,
        predicted_class: usize,
    },
}

impl TreeNode {
    pub fn class_counts(&self) -> &[u64] {
        match self {
            TreeNode::Split { class_counts, .. } | TreeNode::Leaf { class_counts, .. } => class_counts,
        }
    }

    pub fn n(&self) -> u64 {
        self.class_counts().iter().sum()
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TreeNode)) {
        f(self);
        if let TreeNode::Split { left, right, .. } = self {
            left.visit(f);
            right.visit(f);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub feature_names: Vec<String>,
    pub classes: Vec<String>,
    pub params: TreeParams,
    /// All training labels were identical.
    pub single_class: bool,
}

impl DecisionTree {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Number of regions the tree partitions the input space into.
    pub fn regions(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn root_split(&self) -> Option<(&str, u8)> {
        match &self.root {
            TreeNode::Split { feature, threshold, .. } => Some((self.feature_names[*feature].as_str(), *threshold)),
            TreeNode::Leaf { .. } => None,
        }
    }

    pub fn predict(&self, x: &[u8]) -> Result<usize, TreeError> {
        if x.len() != self.n_features() {
            return Err(TreeError::FeatureMismatch { expected: self.n_features(), found: x.len() });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[u8]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { predicted_class, .. } => return *predicted_class,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Summed impurity decrease per feature.
    pub fn impurity_decrease_by_feature(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features()];
        self.root.visit(&mut |node| {
            if let TreeNode::Split { feature, impurity_decrease, .. } = node {
                out[*feature] += impurity_decrease;
            }
        });
        out
    }

    /// Indented rendering, one node per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.render(&self.root, "root", 0, &mut s);
        s
    }

    fn render(&self, node: &TreeNode, condition: &str, depth: usize, out: &mut String) {
        let counts = node.class_counts();
        let predicted = majority(counts);
        let _ = write!(out, "{}{} n={} [", "  ".repeat(depth), condition, node.n());
        for (k, c) in counts.iter().enumerate() {
            let sep = if k == 0 { "" } else { " " };
            let _ = write!(out, "{sep}{c}");
        }
        let _ = write!(out, "] -> {}", self.classes[predicted]);
        match node {
            TreeNode::Leaf { .. } => out.push_str(" *\n"),
            TreeNode::Split { feature, threshold, left, right, .. } => {
                out.push('\n');
                let name = &self.feature_names[*feature];
                self.render(left, &format!("{name} <= {threshold}"), depth + 1, out);
                self.render(right, &format!("{name} > {threshold}"), depth + 1, out);
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("tree serializes")
    }
}

/// 1 − Σ (c_j / n)².
pub fn gini(counts: &[u64]) -> Result<f64, TreeError> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(TreeError::EmptyNode);
    }
    let sq: u64 = counts.iter().map(|c| c * c).sum();
    Ok(1.0 - sq as f64 / (n as f64 * n as f64))
}

/// Lowest class index among the largest counts.
pub fn majority(counts: &[u64]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

/// Σc²/n for one node as an exact fraction.
#[derive(Copy, Clone, Debug)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of(counts: &[u64]) -> Self {
        Self { num: counts.iter().map(|&c| c as u128 * c as u128).sum(), den: counts.iter().sum::<u64>() as u128 }
    }

    /// Σc_l²/n_l + Σc_r²/n_r
    fn pair(l: Purity, r: Purity) -> Self {
        Self { num: l.num * r.den + r.num * l.den, den: l.den * r.den }
    }

    fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Purity {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Purity {}
impl PartialOrd for Purity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Purity {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

#[derive(Clone, Debug)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: u8,
    pub left_counts: Vec<u64>,
    pub right_counts: Vec<u64>,
    /// Decrease in n·Gini.
    pub impurity_decrease: f64,
    score: Purity,
}

/// Best admissible split of `rows` (a multiset) over `features`; ties go to
/// the lowest feature index, then the lowest threshold.
pub fn best_split(d: &LabeledDataset, rows: &[usize], features: &[usize], min_leaf: usize) -> Option<SplitCandidate> {
    let g = d.n_classes();
    let parent_counts = counts_of(d, rows);
    let parent = Purity::of(&parent_counts);
    let mut sorted = features.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut best: Option<SplitCandidate> = None;
    let mut table: Vec<u64> = Vec::new();
    for &j in &sorted {
        let max_v = rows.iter().map(|&i| d.features.get(i, j)).max()? as usize;
        table.clear();
        table.resize((max_v + 1) * g, 0);
        for &i in rows {
            table[d.features.get(i, j) as usize * g + d.labels[i]] += 1;
        }
        let mut left = vec![0u64; g];
        let mut n_left = 0usize;
        for v in 0..max_v {
            let slice = &table[v * g..(v + 1) * g];
            let here: u64 = slice.iter().sum();
            if here == 0 {
                continue;
            }
            for (l, s) in left.iter_mut().zip(slice) {
                *l += s;
            }
            n_left += here as usize;
            let n_right = rows.len() - n_left;
            if n_right == 0 {
                break;
            }
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let right: Vec<u64> = parent_counts.iter().zip(&left).map(|(p, l)| p - l).collect();
            let score = Purity::pair(Purity::of(&left), Purity::of(&right));
            if best.as_ref().is_none_or(|b| score > b.score) {
                best = Some(SplitCandidate {
                    feature: j,
                    threshold: v as u8,
                    impurity_decrease: score.value() - parent.value(),
                    left_counts: left.clone(),
                    right_counts: right,
                    score,
                });
            }
        }
    }
    best.filter(|b| b.score > parent)
}

fn counts_of(d: &LabeledDataset, rows: &[usize]) -> Vec<u64> {
    let mut c = vec![0; d.n_classes()];
    for &i in rows {
        c[d.labels[i]] += 1;
    }
    c
}

/// Grows a tree on every row using every feature.
pub fn grow_tree(d: &LabeledDataset, params: &TreeParams) -> Result<DecisionTree, TreeError> {
    let rows: Vec<usize> = (0..d.n()).collect();
    let features: Vec<usize> = (0..d.features.p()).collect();
    grow_tree_on(d, &rows, &features, params)
}

/// Grows a tree on a row multiset, splitting only on `features`. Split
/// indices refer to the full feature matrix.
pub fn grow_tree_on(
    d: &LabeledDataset,
    rows: &[usize],
    features: &[usize],
    params: &TreeParams,
) -> Result<DecisionTree, TreeError> {
    if rows.is_empty() {
        return Err(TreeError::NoRows);
    }
    if let Some(&bad) = features.iter().find(|&&j| j >= d.features.p()) {
        return Err(TreeError::FeatureMismatch { expected: d.features.p(), found: bad + 1 });
    }
    let root_counts = counts_of(d, rows);
    let single_class = root_counts.iter().filter(|&&c| c > 0).count() <= 1;
    let root_risk = rows.len() as f64 * gini(&root_counts)?;
    let mut grower = Grower { d, features, params, min_gain: params.cp * root_risk };
    let mut rows = rows.to_vec();
    let root = grower.grow(&mut rows, 0);
    Ok(DecisionTree {
        root,
        feature_names: d.features.names().to_vec(),
        classes: d.classes.clone(),
        params: params.clone(),
        single_class,
    })
}

struct Grower<'a> {
    d: &'a LabeledDataset,
    features: &'a [usize],
    params: &'a TreeParams,
    min_gain: f64,
}

impl Grower<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> TreeNode {
        let counts = counts_of(self.d, rows);
        let leaf = |counts: Vec<u64>| TreeNode::Leaf { predicted_class: majority(&counts), class_counts: counts };
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < self.params.min_split || depth >= self.params.max_depth {
            return leaf(counts);
        }
        let Some(split) = best_split(self.d, rows, self.features, self.params.min_leaf) else {
            return leaf(counts);
        };
        if split.impurity_decrease < self.min_gain || split.impurity_decrease <= 0.0 {
            return leaf(counts);
        }
        let (j, t) = (split.feature, split.threshold);
        let mut k = 0;
        for i in 0..rows.len() {
            if self.d.features.get(rows[i], j) <= t {
                rows.swap(i, k);
                k += 1;
            }
        }
        let (l, r) = rows.split_at_mut(k);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        TreeNode::Split {
            feature: j,
            threshold: t,
            class_counts: counts,
            impurity_decrease: split.impurity_decrease,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}
