//! Item reliability (Cronbach's alpha), respondent reliability, and the
//! zero-variation partition of respondents.
//!
//! Variances use the unbiased n − 1 denominator. The alpha ratio itself is
//! formed from exact integer sums of squares so that analytically forced
//! values (alpha = 1 for identical columns) come out exact.

use serde::Serialize;
use thiserror::Error;

use crate::dataset::LikertMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReliabilityError {
    #[error("need at least 2 respondents, got {0}")]
    TooFewRows(usize),
    #[error("need at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("variance of the item sum is zero; alpha is undefined")]
    DegenerateVariance,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReliabilityReport<T> {
    pub alpha: T,
    pub n: usize,
    pub p: usize,
    pub item_variances: Vec<T>,
    pub total_variance: T,
    /// Per-item score sums Z_j.
    pub item_sums: Vec<u64>,
}

/// n·Σx² − (Σx)², which is n(n−1)·var.
fn scaled_ss(sum: i128, sum_sq: i128, n: i128) -> i128 {
    n * sum_sq - sum * sum
}

pub fn cronbach_alpha<T: Scalar>(m: &LikertMatrix) -> Result<ReliabilityReport<T>, ReliabilityError> {
    let (n, p) = (m.n(), m.p());
    if p < 2 {
        return Err(ReliabilityError::TooFewItems(p));
    }
    if n < 2 {
        return Err(ReliabilityError::TooFewRows(n));
    }
    let mut col_sum = vec![0i128; p];
    let mut col_sq = vec![0i128; p];
    let (mut tot_sum, mut tot_sq) = (0i128, 0i128);
    for row in m.rows() {
        let mut row_sum = 0i128;
        for (j, s) in row.iter().enumerate() {
            let v = s.get() as i128;
            col_sum[j] += v;
            col_sq[j] += v * v;
            row_sum += v;
        }
        tot_sum += row_sum;
        tot_sq += row_sum * row_sum;
    }
    let nn = n as i128;
    let item_ss: Vec<i128> = (0..p).map(|j| scaled_ss(col_sum[j], col_sq[j], nn)).collect();
    let sum_item_ss: i128 = item_ss.iter().sum();
    let total_ss = scaled_ss(tot_sum, tot_sq, nn);
    if total_ss == 0 {
        return Err(ReliabilityError::DegenerateVariance);
    }
    let denom = T::of_i128(nn * (nn - 1));
    let pp = p as i128;
    // alpha = p (B − A) / ((p − 1) B) with A = Σ item SS, B = total SS, both scaled alike
    let alpha = T::of_i128(pp * (total_ss - sum_item_ss)) / T::of_i128((pp - 1) * total_ss);
    Ok(ReliabilityReport {
        alpha,
        n,
        p,
        item_variances: item_ss.iter().map(|&s| T::of_i128(s) / denom).collect(),
        total_variance: T::of_i128(total_ss) / denom,
        item_sums: col_sum.iter().map(|&s| s as u64).collect(),
    })
}

/// Cronbach's alpha of the transposed matrix: respondents play the role of items.
pub fn respondent_reliability<T: Scalar>(m: &LikertMatrix) -> Result<ReliabilityReport<T>, ReliabilityError> {
    cronbach_alpha(&m.transpose())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationPartition<T> {
    /// Zero-based indices of constant rows.
    pub zero_rows: Vec<usize>,
    pub nonzero_rows: Vec<usize>,
    pub zero_fraction: T,
    /// Within-respondent sample variance across items (p − 1 denominator).
    pub per_row_variance: Vec<T>,
}

impl<T: Scalar> VariationPartition<T> {
    pub fn zero_count(&self) -> usize {
        self.zero_rows.len()
    }

    pub fn n(&self) -> usize {
        self.per_row_variance.len()
    }
}

pub fn partition_by_variation<T: Scalar>(m: &LikertMatrix) -> VariationPartition<T> {
    let p = m.p() as i128;
    let mut zero_rows = Vec::new();
    let mut nonzero_rows = Vec::new();
    let mut per_row_variance = Vec::with_capacity(m.n());
    for (i, row) in m.rows().enumerate() {
        let (s, sq) = row.iter().fold((0i128, 0i128), |(s, sq), x| {
            let v = x.get() as i128;
            (s + v, sq + v * v)
        });
        let ss = scaled_ss(s, sq, p);
        let var = if p > 1 { T::of_i128(ss) / T::of_i128(p * (p - 1)) } else { T::zero() };
        per_row_variance.push(var);
        if ss == 0 {
            zero_rows.push(i);
        } else {
            nonzero_rows.push(i);
        }
    }
    let zero_fraction = if m.n() == 0 { T::zero() } else { T::of_usize(zero_rows.len()) / T::of_usize(m.n()) };
    VariationPartition { zero_rows, nonzero_rows, zero_fraction, per_row_variance }
}

/// JSON payload for reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReliabilitySummary {
    pub alpha: f64,
    pub n: usize,
    pub p: usize,
    pub zero_count: usize,
    pub zero_fraction: f64,
}

impl ReliabilitySummary {
    pub fn new<T: Scalar>(report: &ReliabilityReport<T>, partition: &VariationPartition<T>) -> Self {
        Self {
            alpha: report.alpha.as_f64(),
            n: report.n,
            p: report.p,
            zero_count: partition.zero_count(),
            zero_fraction: partition.zero_fraction.as_f64(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[Vec<u8>]) -> LikertMatrix {
        LikertMatrix::from_codes_default_names(rows).unwrap()
    }

    #[test]
    fn identical_columns_hand_value() {
        let r = cronbach_alpha::<f64>(&mat(&[vec![1, 1], vec![2, 2], vec![3, 3]])).unwrap();
        assert_eq!(r.item_variances, vec![1.0, 1.0]);
        assert_eq!(r.total_variance, 4.0);
        assert_eq!(r.alpha, 1.0);
        assert_eq!(r.item_sums, vec![6, 6]);
    }

    #[test]
    fn constant_rows_give_exactly_one() {
        let m = mat(&[vec![1; 28], vec![5; 28], vec![3; 28], vec![3; 28], vec![2; 28]]);
        assert_eq!(cronbach_alpha::<f64>(&m).unwrap().alpha, 1.0);
        assert_eq!(cronbach_alpha::<f32>(&m).unwrap().alpha, 1.0);
    }

    #[test]
    fn respondent_reliability_of_two_constant_rows() {
        let m = mat(&[vec![1, 1, 1], vec![5, 5, 5]]);
        // the transpose has constant columns (1,1,1) and (5,5,5)
        assert_eq!(respondent_reliability::<f64>(&m).unwrap_err(), ReliabilityError::DegenerateVariance);
        // three identical columns (1,5)
        assert_eq!(cronbach_alpha::<f64>(&m).unwrap().alpha, 1.0);
        let t = mat(&[vec![1, 5], vec![1, 5], vec![1, 5]]);
        assert_eq!(respondent_reliability::<f64>(&t).unwrap().alpha, 1.0);
    }

    #[test]
    fn hand_computed_mixed_matrix() {
        // columns (1,2,3,4) and (2,1,4,3): var = 5/3 each, sums (3,3,7,7) var = 16/3
        let m = mat(&[vec![1, 2], vec![2, 1], vec![3, 4], vec![4, 3]]);
        let r = cronbach_alpha::<f64>(&m).unwrap();
        let expected = 2.0 * (1.0 - (10.0 / 3.0) / (16.0 / 3.0));
        assert!((r.alpha - expected).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_too_small() {
        assert_eq!(cronbach_alpha::<f64>(&mat(&[vec![1, 5], vec![5, 1]])), Err(ReliabilityError::DegenerateVariance));
        assert_eq!(cronbach_alpha::<f64>(&mat(&[vec![1, 5]])), Err(ReliabilityError::TooFewRows(1)));
        assert_eq!(cronbach_alpha::<f64>(&mat(&[vec![1], vec![2]])), Err(ReliabilityError::TooFewItems(1)));
    }

    #[test]
    fn variation_partition_by_definition() {
        let part = partition_by_variation::<f64>(&mat(&[vec![3, 3, 3], vec![1, 2, 3]]));
        assert_eq!(part.zero_rows, vec![0]);
        assert_eq!(part.nonzero_rows, vec![1]);
        assert_eq!(part.zero_fraction, 0.5);
        assert_eq!(part.per_row_variance, vec![0.0, 1.0]);
    }

    #[test]
    fn summary_json_fields() {
        let m = mat(&[vec![1, 1], vec![2, 3], vec![3, 3]]);
        let s = ReliabilitySummary::new(&cronbach_alpha::<f64>(&m).unwrap(), &partition_by_variation(&m));
        let v = serde_json::to_value(&s).unwrap();
        for key in ["alpha", "n", "p", "zero_count", "zero_fraction"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["zero_count"], 2);
    }
}
