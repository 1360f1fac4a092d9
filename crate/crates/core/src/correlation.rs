//! Pearson and Kendall τ-B correlation, pairwise and as p × p matrices.
//!
//! τ-B is computed from the joint contingency table of the two variables'
//! distinct levels, so a Likert pair costs O(n + 25²) and every pair count
//! is an exact integer.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::LikertMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorrelationError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("zero variance in {0}")]
    ZeroVariance(String),
    #[error("all values tied in {0}; tau-B undefined")]
    DegenerateTies(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CorrelationMethod {
    Pearson,
    KendallTauB,
}

impl std::str::FromStr for CorrelationMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(Self::Pearson),
            "kendall" | "kendall_tau_b" | "taub" | "tau-b" | "kendalltaub" => Ok(Self::KendallTauB),
            other => Err(format!("unknown correlation method `{other}`")),
        }
    }
}

/// Pair counts behind a τ-B value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TauBComponents {
    pub concordant: u64,
    pub discordant: u64,
    /// n(n−1)/2
    pub n0: u64,
    /// Σ t(t−1)/2 over tie groups of x.
    pub n1: u64,
    /// Σ u(u−1)/2 over tie groups of y.
    pub n2: u64,
    /// Sizes of x's tie groups (distinct levels, ascending).
    pub x_tie_groups: Vec<u64>,
    pub y_tie_groups: Vec<u64>,
}

fn check_pair(nx: usize, ny: usize) -> Result<(), CorrelationError> {
    if nx != ny {
        return Err(CorrelationError::LengthMismatch(nx, ny));
    }
    if nx < 2 {
        return Err(CorrelationError::TooShort(nx));
    }
    Ok(())
}

/// Sample Pearson correlation (n − 1 denominators).
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T, CorrelationError> {
    check_pair(x.len(), y.len())?;
    let n = T::of_usize(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
        sxy = sxy + dx * dy;
    }
    if sxx == T::zero() {
        return Err(CorrelationError::ZeroVariance("x".into()));
    }
    if syy == T::zero() {
        return Err(CorrelationError::ZeroVariance("y".into()));
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.max(-T::one()).min(T::one()))
}

fn dense_codes<K: Ord + Copy>(v: &[K]) -> (Vec<usize>, usize) {
    let mut levels: Vec<K> = v.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let codes = v.iter().map(|k| levels.binary_search(k).expect("present")).collect();
    (codes, levels.len())
}

/// Exact τ-B pair counts for any ordered values.
pub fn tau_b_components<K: Ord + Copy>(x: &[K], y: &[K]) -> Result<TauBComponents, CorrelationError> {
    check_pair(x.len(), y.len())?;
    let n = x.len();
    let (cx, a) = dense_codes(x);
    let (cy, b) = dense_codes(y);
    let mut joint = vec![0u64; a * b];
    for (&i, &j) in cx.iter().zip(&cy) {
        joint[i * b + j] += 1;
    }
    // above[i][j] = #{(i', j') : i' > i, j' > j}; below[i][j] = #{i' > i, j' < j}
    // built from a suffix-sum table S[i][j] = Σ_{i' ≥ i, j' ≥ j} joint
    let w = b + 1;
    let mut suffix = vec![0u64; (a + 1) * w];
    for i in (0..a).rev() {
        for j in (0..b).rev() {
            suffix[i * w + j] =
                joint[i * b + j] + suffix[(i + 1) * w + j] + suffix[i * w + j + 1] - suffix[(i + 1) * w + j + 1];
        }
    }
    let mut concordant = 0u64;
    let mut discordant = 0u64;
    for i in 0..a {
        for j in 0..b {
            let c = joint[i * b + j];
            if c == 0 {
                continue;
            }
            let greater_both = suffix[(i + 1) * w + j + 1];
            let greater_x_any_y = suffix[(i + 1) * w];
            let greater_x_y_geq = suffix[(i + 1) * w + j];
            concordant += c * greater_both;
            discordant += c * (greater_x_any_y - greater_x_y_geq);
        }
    }
    let x_groups: Vec<u64> = (0..a).map(|i| (0..b).map(|j| joint[i * b + j]).sum()).collect();
    let y_groups: Vec<u64> = (0..b).map(|j| (0..a).map(|i| joint[i * b + j]).sum()).collect();
    let pairs = |t: &u64| t * t.saturating_sub(1) / 2;
    Ok(TauBComponents {
        concordant,
        discordant,
        n0: (n as u64) * (n as u64 - 1) / 2,
        n1: x_groups.iter().map(pairs).sum(),
        n2: y_groups.iter().map(pairs).sum(),
        x_tie_groups: x_groups,
        y_tie_groups: y_groups,
    })
}

impl TauBComponents {
    pub fn tau_b<T: Scalar>(&self) -> Result<T, CorrelationError> {
        if self.n0 == self.n1 {
            return Err(CorrelationError::DegenerateTies("x".into()));
        }
        if self.n0 == self.n2 {
            return Err(CorrelationError::DegenerateTies("y".into()));
        }
        let num = T::of_i128(self.concordant as i128 - self.discordant as i128);
        let den = (T::lit((self.n0 - self.n1) as f64) * T::lit((self.n0 - self.n2) as f64)).sqrt();
        Ok((num / den).max(-T::one()).min(T::one()))
    }
}

/// Kendall τ-B = (n_c − n_d) / √((n0 − n1)(n0 − n2)).
pub fn kendall_tau_b<T: Scalar, K: Ord + Copy>(x: &[K], y: &[K]) -> Result<(T, TauBComponents), CorrelationError> {
    let comps = tau_b_components(x, y)?;
    Ok((comps.tau_b()?, comps))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationMatrix<T> {
    pub method: CorrelationMethod,
    pub item_names: Vec<String>,
    /// Row-major p × p.
    pub values: Vec<T>,
}

impl<T: Scalar> CorrelationMatrix<T> {
    pub fn p(&self) -> usize {
        self.item_names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.p() + j]
    }

    /// Upper-triangle entries (i < j), row by row.
    pub fn off_diagonal(&self) -> Vec<T> {
        let p = self.p();
        (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).map(|(i, j)| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.values.chunks(self.p()).map(<[T]>::to_vec).collect()
    }

    /// CSV with item names as header row and first column.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.item_names.iter().cloned());
        w.write_record(&header)?;
        for (i, name) in self.item_names.iter().enumerate() {
            let mut rec = vec![name.clone()];
            rec.extend((0..self.p()).map(|j| self.get(i, j).to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// All pairwise correlations of the item columns. Cells are computed in
/// parallel but each is a pure function of its two columns.
pub fn correlation_matrix<T: Scalar>(
    m: &LikertMatrix,
    method: CorrelationMethod,
) -> Result<CorrelationMatrix<T>, CorrelationError> {
    let p = m.p();
    if m.n() < 2 {
        return Err(CorrelationError::TooShort(m.n()));
    }
    let columns: Vec<Vec<u8>> = (0..p).map(|j| m.column(j).into_iter().map(u8::from).collect()).collect();
    let names = m.item_names();
    for (j, col) in columns.iter().enumerate() {
        if col.iter().all(|&v| v == col[0]) {
            return Err(CorrelationError::ZeroVariance(names[j].clone()));
        }
    }
    let real_cols: Vec<Vec<T>> = match method {
        CorrelationMethod::Pearson => columns.iter().map(|c| c.iter().map(|&v| T::lit(v as f64)).collect()).collect(),
        CorrelationMethod::KendallTauB => Vec::new(),
    };
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).collect();
    let cells: Vec<T> = pairs
        .par_iter()
        .map(|&(i, j)| match method {
            CorrelationMethod::Pearson => pearson(&real_cols[i], &real_cols[j]),
            CorrelationMethod::KendallTauB => kendall_tau_b::<T, u8>(&columns[i], &columns[j]).map(|r| r.0),
        })
        .collect::<Result<_, _>>()?;
    let mut values = vec![T::zero(); p * p];
    for i in 0..p {
        values[i * p + i] = T::one();
    }
    for (&(i, j), &v) in pairs.iter().zip(&cells) {
        values[i * p + j] = v;
        values[j * p + i] = v;
    }
    Ok(CorrelationMatrix { method, item_names: names.to_vec(), values })
}

/// Ranks 1..=n with tied values sharing their average rank.
pub fn average_ranks<T: Scalar>(x: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite"));
    let mut ranks = vec![T::zero(); x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = T::of_usize(start + 1 + end) / T::lit(2.0);
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman<T: Scalar>(x: &[T], y: &[T]) -> Result<T, CorrelationError> {
    check_pair(x.len(), y.len())?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// How far a Pearson matrix sits from a τ-B matrix over the same items.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixComparison<T> {
    /// Mean of R_ij − K_ij over i < j.
    pub mean_offset: T,
    pub max_abs_offset: T,
    /// Spearman correlation of the two vectors of off-diagonal entries.
    pub rank_agreement: T,
}

pub fn compare_matrices<T: Scalar>(
    r: &CorrelationMatrix<T>,
    k: &CorrelationMatrix<T>,
) -> Result<MatrixComparison<T>, CorrelationError> {
    let (a, b) = (r.off_diagonal(), k.off_diagonal());
    check_pair(a.len(), b.len())?;
    let diffs: Vec<T> = a.iter().zip(&b).map(|(x, y)| *x - *y).collect();
    Ok(MatrixComparison {
        mean_offset: diffs.iter().copied().sum::<T>() / T::of_usize(diffs.len()),
        max_abs_offset: diffs.iter().fold(T::zero(), |m, d| m.max(d.abs())),
        rank_agreement: spearman(&a, &b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_with_ties() {
        assert_eq!(average_ranks(&[10.0f64, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
        let r = spearman(&[1.0f64, 2.0, 3.0, 4.0], &[1.0, 4.0, 9.0, 16.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_hand_values() {
        let x = [1.0f64, 2.0, 3.0];
        assert_eq!(pearson(&x, &x).unwrap(), 1.0);
        assert_eq!(pearson(&x, &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        let r = pearson(&[1.0f64, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-15);
        assert!(matches!(pearson(&[1.0f64, 1.0], &[1.0, 2.0]), Err(CorrelationError::ZeroVariance(_))));
        assert!(matches!(pearson(&[1.0f64], &[1.0]), Err(CorrelationError::TooShort(1))));
    }

    #[test]
    fn tau_b_small_enumeration() {
        let (tau, c) = kendall_tau_b::<f64, u8>(&[1, 1, 2], &[1, 2, 2]).unwrap();
        assert_eq!((c.concordant, c.discordant, c.n0, c.n1, c.n2), (1, 0, 3, 1, 1));
        assert_eq!(tau, 0.5);
    }

    #[test]
    fn tau_b_self_and_reverse() {
        let x = [1u8, 3, 3, 2, 5, 4, 1];
        let (tau, c) = kendall_tau_b::<f64, u8>(&x, &x).unwrap();
        assert_eq!(tau, 1.0);
        assert_eq!(c.discordant, 0);
        assert_eq!(c.concordant, c.n0 - c.n1);
        let y = [2u8, 4, 1, 5, 3, 6, 7];
        let rev: Vec<i8> = y.iter().map(|&v| -(v as i8)).collect();
        let xi: Vec<i8> = x.iter().map(|&v| v as i8).collect();
        let yi: Vec<i8> = y.iter().map(|&v| v as i8).collect();
        let t1 = kendall_tau_b::<f64, i8>(&xi, &yi).unwrap().0;
        let t2 = kendall_tau_b::<f64, i8>(&xi, &rev).unwrap().0;
        assert_eq!(t1, -t2);
    }

    #[test]
    fn tau_b_degenerate() {
        assert!(matches!(kendall_tau_b::<f64, u8>(&[2, 2, 2], &[1, 2, 3]), Err(CorrelationError::DegenerateTies(_))));
    }

    #[test]
    fn matrix_of_duplicate_columns() {
        let m = LikertMatrix::from_codes_default_names(&[vec![1, 1], vec![3, 3], vec![2, 2], vec![5, 5]]).unwrap();
        for method in [CorrelationMethod::Pearson, CorrelationMethod::KendallTauB] {
            let c = correlation_matrix::<f64>(&m, method).unwrap();
            assert!((c.get(0, 1) - 1.0).abs() < 1e-15);
            assert_eq!(c.get(0, 0), 1.0);
        }
    }

    #[test]
    fn matrix_zero_variance_column_named() {
        let m = LikertMatrix::from_codes_default_names(&[vec![1, 4], vec![3, 4]]).unwrap();
        assert_eq!(
            correlation_matrix::<f64>(&m, CorrelationMethod::KendallTauB),
            Err(CorrelationError::ZeroVariance("Q2".into()))
        );
    }

    #[test]
    fn matrix_csv_header() {
        let m = LikertMatrix::from_codes_default_names(&[vec![1, 2], vec![3, 1], vec![2, 2]]).unwrap();
        let c = correlation_matrix::<f64>(&m, CorrelationMethod::Pearson).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some(",Q1,Q2"));
        assert_eq!("kendall".parse::<CorrelationMethod>(), Ok(CorrelationMethod::KendallTauB));
    }
}
