//! Cross-tabulation of categorical attributes and Pearson's chi-squared test
//! of association (no continuity correction).

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{attendance_label, difficulty_label, EvaluationDataset, VariationClass};
use crate::scalar::Scalar;
use crate::special::gamma_q;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssociationError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("row or column total is zero (expected count 0 at {row}, {col})")]
    ZeroExpectedCell { row: usize, col: usize },
    #[error("a test needs at least a 2 × 2 table, got {rows} × {cols}")]
    TableTooSmall { rows: usize, cols: usize },
}

/// A categorical column of the dataset, including the derived variation class.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Attribute {
    Instructor,
    Course,
    Repetitions,
    Attendance,
    Difficulty,
    Variation,
    Item(String),
}

impl Attribute {
    pub fn name(&self) -> String {
        match self {
            Attribute::Instructor => "instructor".into(),
            Attribute::Course => "course".into(),
            Attribute::Repetitions => "repetitions".into(),
            Attribute::Attendance => "attendance".into(),
            Attribute::Difficulty => "difficulty".into(),
            Attribute::Variation => "variation".into(),
            Attribute::Item(name) => name.clone(),
        }
    }

    /// Integer code of this attribute for every respondent.
    pub fn codes(&self, ds: &EvaluationDataset) -> Result<Vec<u32>, AssociationError> {
        let meta = ds.meta();
        Ok(match self {
            Attribute::Instructor => meta.instructor.clone(),
            Attribute::Course => meta.course.clone(),
            Attribute::Repetitions => meta.repetitions.clone(),
            Attribute::Attendance => meta.attendance.iter().map(|&v| v as u32).collect(),
            Attribute::Difficulty => meta.difficulty.iter().map(|&v| v as u32).collect(),
            Attribute::Variation => ds
                .respondents()
                .map(|r| match r.variation_class() {
                    VariationClass::Zero => 0,
                    VariationClass::Nonzero => 1,
                })
                .collect(),
            Attribute::Item(name) => ds
                .column(name)
                .map_err(|_| AssociationError::UnknownAttribute(name.clone()))?
                .into_iter()
                .map(|s| s.get() as u32)
                .collect(),
        })
    }

    /// Human-readable label for a code.
    pub fn label(&self, code: u32) -> String {
        let named = match self {
            Attribute::Attendance => u8::try_from(code).ok().and_then(attendance_label),
            Attribute::Difficulty => u8::try_from(code).ok().and_then(difficulty_label),
            Attribute::Variation => match code {
                0 => Some(VariationClass::Zero.label()),
                1 => Some(VariationClass::Nonzero.label()),
                _ => None,
            },
            _ => None,
        };
        named.map(str::to_owned).unwrap_or_else(|| code.to_string())
    }

    /// Resolves a user-supplied name; anything else must be an item of `ds`.
    pub fn parse_for(name: &str, ds: &EvaluationDataset) -> Result<Self, AssociationError> {
        match name.parse::<Attribute>() {
            Ok(Attribute::Item(item)) if ds.matrix().item_index(&item).is_none() => {
                Err(AssociationError::UnknownAttribute(item))
            }
            other => other,
        }
    }
}

impl FromStr for Attribute {
    type Err = AssociationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "instructor" | "instr" => Attribute::Instructor,
            "course" | "class" => Attribute::Course,
            "repetitions" | "nb.repeat" => Attribute::Repetitions,
            "attendance" => Attribute::Attendance,
            "difficulty" => Attribute::Difficulty,
            "variation" => Attribute::Variation,
            "" => return Err(AssociationError::UnknownAttribute(String::new())),
            _ => Attribute::Item(s.to_owned()),
        })
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// Category codes in row/column order.
    pub row_codes: Vec<u32>,
    pub col_codes: Vec<u32>,
    pub observed: Vec<Vec<u64>>,
    pub total: u64,
}

impl ContingencyTable {
    /// Table from raw counts; codes are the row/column positions.
    pub fn from_counts(observed: Vec<Vec<u64>>) -> Self {
        let r = observed.len();
        let c = observed.first().map(Vec::len).unwrap_or(0);
        assert!(observed.iter().all(|row| row.len() == c), "ragged contingency table");
        let total = observed.iter().flatten().sum();
        Self {
            row_labels: (0..r).map(|i| i.to_string()).collect(),
            col_labels: (0..c).map(|j| j.to_string()).collect(),
            row_codes: (0..r as u32).collect(),
            col_codes: (0..c as u32).collect(),
            observed,
            total,
        }
    }

    pub fn rows(&self) -> usize {
        self.observed.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.observed.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.cols()).map(|j| self.observed.iter().map(|r| r[j]).sum()).collect()
    }

    /// Cell counts divided by the grand total.
    pub fn proportions<T: Scalar>(&self) -> Vec<Vec<T>> {
        let total = T::lit(self.total as f64);
        self.observed
            .iter()
            .map(|r| r.iter().map(|&o| if self.total == 0 { T::zero() } else { T::lit(o as f64) / total }).collect())
            .collect()
    }
}

/// Co-occurrence counts of two attributes; categories are the observed codes in ascending order.
pub fn crosstab(
    ds: &EvaluationDataset,
    row_attr: &Attribute,
    col_attr: &Attribute,
) -> Result<ContingencyTable, AssociationError> {
    let rows = row_attr.codes(ds)?;
    let cols = col_attr.codes(ds)?;
    let row_codes: Vec<u32> = rows.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let col_codes: Vec<u32> = cols.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut observed = vec![vec![0u64; col_codes.len()]; row_codes.len()];
    for (r, c) in rows.iter().zip(&cols) {
        let i = row_codes.binary_search(r).expect("code collected above");
        let j = col_codes.binary_search(c).expect("code collected above");
        observed[i][j] += 1;
    }
    Ok(ContingencyTable {
        row_labels: row_codes.iter().map(|&c| row_attr.label(c)).collect(),
        col_labels: col_codes.iter().map(|&c| col_attr.label(c)).collect(),
        row_codes,
        col_codes,
        observed,
        total: rows.len() as u64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquaredResult<T> {
    pub statistic: T,
    pub df: usize,
    pub p_value: T,
    pub expected: Vec<Vec<T>>,
}

pub fn chi_squared_test<T: Scalar>(t: &ContingencyTable) -> Result<ChiSquaredResult<T>, AssociationError> {
    let (r, c) = (t.rows(), t.cols());
    if r < 2 || c < 2 {
        return Err(AssociationError::TableTooSmall { rows: r, cols: c });
    }
    let row_tot = t.row_totals();
    let col_tot = t.col_totals();
    if let Some(i) = row_tot.iter().position(|&v| v == 0) {
        return Err(AssociationError::ZeroExpectedCell { row: i, col: 0 });
    }
    if let Some(j) = col_tot.iter().position(|&v| v == 0) {
        return Err(AssociationError::ZeroExpectedCell { row: 0, col: j });
    }
    let total = T::lit(t.total as f64);
    let mut expected = vec![vec![T::zero(); c]; r];
    let mut statistic = T::zero();
    for i in 0..r {
        for j in 0..c {
            let e = T::lit(row_tot[i] as f64) * T::lit(col_tot[j] as f64) / total;
            let d = T::lit(t.observed[i][j] as f64) - e;
            statistic = statistic + d * d / e;
            expected[i][j] = e;
        }
    }
    let df = (r - 1) * (c - 1);
    Ok(ChiSquaredResult { statistic, df, p_value: chi_squared_sf(statistic, df), expected })
}

/// Upper tail P(χ²_df > x) = Q(df/2, x/2).
pub fn chi_squared_sf<T: Scalar>(x: T, df: usize) -> T {
    assert!(df >= 1, "degrees of freedom must be positive");
    if x <= T::zero() {
        return T::one();
    }
    let half = T::lit(0.5);
    gamma_q(T::of_usize(df) * half, x * half)
}

/// Renders a p-value the way R prints it, with the 2.2e-16 floor.
pub fn format_p_value(p: f64) -> String {
    if p < 2.2e-16 {
        "< 2.2e-16".to_owned()
    } else if p < 1e-4 {
        format!("{p:.3e}")
    } else {
        format!("{p:.4}")
    }
}

/// JSON payload for one test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquaredReport {
    pub row_attr: String,
    pub col_attr: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub observed: Vec<Vec<u64>>,
    pub expected: Vec<Vec<f64>>,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl ChiSquaredReport {
    pub fn new<T: Scalar>(
        row_attr: &Attribute,
        col_attr: &Attribute,
        t: &ContingencyTable,
        r: &ChiSquaredResult<T>,
    ) -> Self {
        Self {
            row_attr: row_attr.name(),
            col_attr: col_attr.name(),
            row_labels: t.row_labels.clone(),
            col_labels: t.col_labels.clone(),
            observed: t.observed.clone(),
            expected: r.expected.iter().map(|row| row.iter().map(|e| e.as_f64()).collect()).collect(),
            statistic: r.statistic.as_f64(),
            df: r.df,
            p_value: r.p_value.as_f64(),
        }
    }
}

/// Long-form counts `<row attr>,<col attr>,count`, e.g. `course,variation_class,count`.
pub fn write_long_csv<W: Write>(t: &ContingencyTable, row_header: &str, col_header: &str, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([row_header, col_header, "count"])?;
    for (i, row) in t.observed.iter().enumerate() {
        for (j, count) in row.iter().enumerate() {
            w.write_record([t.row_labels[i].as_str(), t.col_labels[j].as_str(), &count.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
