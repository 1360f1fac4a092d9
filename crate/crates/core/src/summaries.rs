//! Univariate and whole-matrix summaries that respect the ordinal scale:
//! level frequencies, column modes, grand mode and grand median. The grand
//! mean is provided for comparison with conventional practice.
//!
//! Mode ties resolve to the lowest tied level; the full tie set is always
//! reported. Even-count medians take the midpoint of the two central values
//! and are flagged when the result falls between Likert levels.

use std::io::Write;

use serde::Serialize;

use crate::dataset::{LikertMatrix, LikertScore};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItemDistribution<T> {
    pub item_name: String,
    /// Frequencies of levels 1..=5.
    pub counts: [u64; 5],
    /// `None` when the column is empty.
    pub proportions: Option<[T; 5]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ColumnModes {
    pub modes: Vec<u8>,
    /// Tied levels for each column with more than one maximizing level.
    pub ties: Vec<Vec<u8>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct Median<T> {
    pub value: T,
    /// False when the median is a half-integer between two levels.
    pub on_likert_scale: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrandSummary<T> {
    pub grand_mean: T,
    pub column_modes: Vec<u8>,
    pub mode_ties: Vec<Vec<u8>>,
    pub grand_mode: u8,
    pub grand_mode_ties: Vec<u8>,
    pub grand_median: Median<T>,
}

fn tally(values: impl Iterator<Item = u8>) -> [u64; 5] {
    let mut counts = [0u64; 5];
    for v in values {
        counts[(v - 1) as usize] += 1;
    }
    counts
}

/// Lowest maximizing level and the whole set of maximizers (empty tally → level 1, no ties).
fn mode_of(counts: &[u64; 5]) -> (u8, Vec<u8>) {
    let max = *counts.iter().max().unwrap_or(&0);
    let tied: Vec<u8> = (0..5).filter(|&k| counts[k] == max).map(|k| k as u8 + 1).collect();
    (tied[0], tied)
}

fn median_of<T: Scalar>(mut values: Vec<T>) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let k = values.len();
    Some(if k % 2 == 1 { values[k / 2] } else { (values[k / 2 - 1] + values[k / 2]) / T::lit(2.0) })
}

fn is_integral<T: Scalar>(x: T) -> bool {
    x.fract() == T::zero()
}

/// Mean of all np scores.
pub fn grand_mean<T: Scalar>(m: &LikertMatrix) -> Option<T> {
    if m.n() == 0 {
        return None;
    }
    let total: u64 = m.rows().flatten().map(|s| s.get() as u64).sum();
    Some(T::lit(total as f64) / T::of_usize(m.n() * m.p()))
}

pub fn column_modes(m: &LikertMatrix) -> ColumnModes {
    let mut modes = Vec::with_capacity(m.p());
    let mut ties = Vec::with_capacity(m.p());
    for j in 0..m.p() {
        let counts = tally((0..m.n()).map(|i| m.get(i, j).get()));
        let (mode, tied) = mode_of(&counts);
        modes.push(mode);
        ties.push(if tied.len() > 1 { tied } else { Vec::new() });
    }
    ColumnModes { modes, ties }
}

/// Mode of the column modes, with its own tie set.
pub fn grand_mode(m: &LikertMatrix) -> (u8, Vec<u8>) {
    let modes = column_modes(m).modes;
    let (mode, tied) = mode_of(&tally(modes.into_iter()));
    (mode, if tied.len() > 1 { tied } else { Vec::new() })
}

pub fn column_medians<T: Scalar>(m: &LikertMatrix) -> Vec<Option<T>> {
    (0..m.p()).map(|j| median_of((0..m.n()).map(|i| T::lit(m.get(i, j).get() as f64)).collect())).collect()
}

/// Median of the column medians.
pub fn grand_median<T: Scalar>(m: &LikertMatrix) -> Option<Median<T>> {
    let meds: Option<Vec<T>> = column_medians(m).into_iter().collect();
    let value = median_of(meds?)?;
    Some(Median { value, on_likert_scale: is_integral(value) })
}

pub fn item_distributions<T: Scalar>(m: &LikertMatrix) -> Vec<ItemDistribution<T>> {
    (0..m.p())
        .map(|j| {
            let counts = tally((0..m.n()).map(|i| m.get(i, j).get()));
            let n = m.n();
            let proportions = (n > 0).then(|| counts.map(|c| T::lit(c as f64) / T::of_usize(n)));
            ItemDistribution { item_name: m.item_names()[j].clone(), counts, proportions }
        })
        .collect()
}

/// All grand summaries of a non-empty matrix.
pub fn grand_summary<T: Scalar>(m: &LikertMatrix) -> Option<GrandSummary<T>> {
    let grand_mean = grand_mean(m)?;
    let ColumnModes { modes, ties } = column_modes(m);
    let (grand_mode, grand_mode_ties) = grand_mode(m);
    Some(GrandSummary {
        grand_mean,
        column_modes: modes,
        mode_ties: ties,
        grand_mode,
        grand_mode_ties,
        grand_median: grand_median(m)?,
    })
}

/// Bar-plot data: `item,level,count,proportion` rows for each distribution.
pub fn write_distribution_csv<T: Scalar, W: Write>(dists: &[ItemDistribution<T>], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["item", "level", "count", "proportion"])?;
    for d in dists {
        for level in LikertScore::all() {
            let k = level.slot();
            let prop = d.proportions.map(|p| p[k].to_string()).unwrap_or_default();
            w.write_record([d.item_name.clone(), level.to_string(), d.counts[k].to_string(), prop])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_column(values: &[u8]) -> LikertMatrix {
        LikertMatrix::from_codes_default_names(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn grand_mean_cases() {
        let fives = LikertMatrix::from_codes_default_names(&[vec![5, 5], vec![5, 5]]).unwrap();
        assert_eq!(grand_mean::<f64>(&fives), Some(5.0));
        let m = LikertMatrix::from_codes_default_names(&[vec![1, 2], vec![3, 4]]).unwrap();
        assert_eq!(grand_mean::<f64>(&m), Some(2.5));
    }

    #[test]
    fn modes_and_ties() {
        assert_eq!(column_modes(&single_column(&[2, 2, 2, 5])).modes, vec![2]);
        let cm = column_modes(&single_column(&[1, 1, 2, 2, 3]));
        assert_eq!(cm.modes, vec![1]);
        assert_eq!(cm.ties, vec![vec![1, 2]]);
    }

    #[test]
    fn grand_mode_of_constant_modes() {
        let m = LikertMatrix::from_codes_default_names(&[vec![2, 2, 2], vec![2, 2, 1], vec![3, 2, 2]]).unwrap();
        assert_eq!(grand_mode(&m).0, 2);
    }

    #[test]
    fn grand_median_cases() {
        let threes = LikertMatrix::from_codes_default_names(&[vec![3, 3], vec![3, 3]]).unwrap();
        assert_eq!(grand_median::<f64>(&threes).unwrap().value, 3.0);
        // column medians (2, 4, 4)
        let m = LikertMatrix::from_codes_default_names(&[vec![2, 4, 4], vec![2, 4, 4], vec![1, 5, 3]]).unwrap();
        assert_eq!(column_medians::<f64>(&m), vec![Some(2.0), Some(4.0), Some(4.0)]);
        assert_eq!(grand_median::<f64>(&m).unwrap(), Median { value: 4.0, on_likert_scale: true });
        // column medians (2, 4) → midpoint 3
        let m = LikertMatrix::from_codes_default_names(&[vec![2, 4], vec![2, 4], vec![2, 4]]).unwrap();
        assert_eq!(grand_median::<f64>(&m).unwrap().value, 3.0);
        // even-n column median of (2,3) is 2.5, flagged
        let m = single_column(&[2, 3]);
        assert_eq!(grand_median::<f64>(&m).unwrap(), Median { value: 2.5, on_likert_scale: false });
    }

    #[test]
    fn distributions() {
        let d = item_distributions::<f64>(&single_column(&[1, 1, 5]));
        assert_eq!(d[0].counts, [2, 0, 0, 0, 1]);
        let p = d[0].proportions.unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[4] - 1.0 / 3.0).abs() < 1e-15);
        let empty = LikertMatrix::empty(vec!["Q1".into()]).unwrap();
        let d = item_distributions::<f64>(&empty);
        assert_eq!(d[0].counts, [0; 5]);
        assert!(d[0].proportions.is_none());
        assert!(grand_summary::<f64>(&empty).is_none());
    }

    #[test]
    fn distribution_csv_layout() {
        let d = item_distributions::<f64>(&single_column(&[1, 1, 5]));
        let mut buf = Vec::new();
        write_distribution_csv(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "item,level,count,proportion");
        assert_eq!(lines.len(), 6);
        assert!(lines[5].starts_with("Q1,5,1,"));
    }
}
