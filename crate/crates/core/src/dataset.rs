//! Survey data model: Likert scores, the respondent × item matrix, the
//! metadata columns that travel with it, and CSV ingestion.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("Likert score must be in 1..=5, got {0}")]
    InvalidScore(i64),
    #[error("file is empty or has no data rows")]
    EmptyFile,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("row {row}, column `{column}`: score `{value}` is not an integer in 1..=5")]
    OutOfRangeScore { row: usize, column: String, value: String },
    #[error("row {row}, column `{column}`: invalid value `{value}`")]
    InvalidMetadata { row: usize, column: String, value: String },
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("duplicate item name `{0}`")]
    DuplicateItem(String),
    #[error("matrix needs at least one item column")]
    NoItems,
    #[error("row {row} has {found} scores, expected {expected}")]
    ShapeMismatch { row: usize, expected: usize, found: usize },
    #[error("metadata column `{column}` has {found} entries, expected {expected}")]
    MisalignedMetadata { column: &'static str, expected: usize, found: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// One ordinal response level, 1 (strongly disagree) to 5 (strongly agree).
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct LikertScore(u8);

impl LikertScore {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 5;
    pub const LEVELS: usize = 5;

    pub fn new(value: i64) -> Result<Self> {
        if (Self::MIN as i64..=Self::MAX as i64).contains(&value) {
            Ok(Self(value as u8))
        } else {
            Err(DatasetError::InvalidScore(value))
        }
    }

    #[inline]
    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based slot of this level in a 5-element tally.
    #[inline]
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn all() -> impl Iterator<Item = LikertScore> {
        (Self::MIN..=Self::MAX).map(LikertScore)
    }
}

impl TryFrom<i64> for LikertScore {
    type Error = DatasetError;
    fn try_from(v: i64) -> Result<Self> {
        Self::new(v)
    }
}

impl TryFrom<u8> for LikertScore {
    type Error = DatasetError;
    fn try_from(v: u8) -> Result<Self> {
        Self::new(v as i64)
    }
}

impl From<LikertScore> for u8 {
    fn from(s: LikertScore) -> u8 {
        s.0
    }
}

impl fmt::Display for LikertScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Row-major n × p grid of Likert scores with named item columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LikertMatrix {
    n: usize,
    p: usize,
    scores: Vec<LikertScore>,
    item_names: Vec<String>,
}

impl LikertMatrix {
    pub fn new(item_names: Vec<String>, rows: Vec<Vec<LikertScore>>) -> Result<Self> {
        let p = item_names.len();
        if p == 0 {
            return Err(DatasetError::NoItems);
        }
        let mut seen = HashSet::with_capacity(p);
        for name in &item_names {
            if !seen.insert(name.as_str()) {
                return Err(DatasetError::DuplicateItem(name.clone()));
            }
        }
        let n = rows.len();
        let mut scores = Vec::with_capacity(n * p);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(DatasetError::ShapeMismatch { row: i, expected: p, found: row.len() });
            }
            scores.extend(row);
        }
        Ok(Self { n, p, scores, item_names })
    }

    /// Builds a matrix from raw integer codes, validating each one.
    pub fn from_codes(item_names: Vec<String>, rows: &[Vec<u8>]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&v| LikertScore::try_from(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(item_names, rows)
    }

    /// Like [`from_codes`](Self::from_codes) with items named `Q1..Qp`.
    pub fn from_codes_default_names(rows: &[Vec<u8>]) -> Result<Self> {
        let p = rows.first().map(Vec::len).unwrap_or(0);
        Self::from_codes(default_item_names("Q", p), rows)
    }

    /// An n = 0 matrix over the given items.
    pub fn empty(item_names: Vec<String>) -> Result<Self> {
        Self::new(item_names, Vec::new())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> LikertScore {
        self.scores[i * self.p + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[LikertScore] {
        &self.scores[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[LikertScore]> + '_ {
        // chunks_exact on an empty slice with p > 0 yields nothing, as required for n = 0
        self.scores.chunks_exact(self.p)
    }

    pub fn column(&self, j: usize) -> Vec<LikertScore> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn item_names(&self) -> &[String] {
        &self.item_names
    }

    pub fn item_index(&self, name: &str) -> Option<usize> {
        self.item_names.iter().position(|n| n == name)
    }

    pub fn column_by_name(&self, name: &str) -> Result<Vec<LikertScore>> {
        self.item_index(name).map(|j| self.column(j)).ok_or_else(|| DatasetError::UnknownItem(name.to_owned()))
    }

    /// Respondents become items: the result is p × n, with items named `R1..Rn`.
    pub fn transpose(&self) -> LikertMatrix {
        let mut scores = Vec::with_capacity(self.scores.len());
        for j in 0..self.p {
            for i in 0..self.n {
                scores.push(self.get(i, j));
            }
        }
        LikertMatrix { n: self.p, p: self.n, scores, item_names: default_item_names("R", self.n) }
    }

    pub fn select_rows(&self, rows: &[usize]) -> LikertMatrix {
        let mut scores = Vec::with_capacity(rows.len() * self.p);
        for &i in rows {
            scores.extend_from_slice(self.row(i));
        }
        LikertMatrix { n: rows.len(), p: self.p, scores, item_names: self.item_names.clone() }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<LikertMatrix> {
        if cols.is_empty() {
            return Err(DatasetError::NoItems);
        }
        let mut scores = Vec::with_capacity(self.n * cols.len());
        for i in 0..self.n {
            scores.extend(cols.iter().map(|&j| self.get(i, j)));
        }
        Ok(LikertMatrix {
            n: self.n,
            p: cols.len(),
            scores,
            item_names: cols.iter().map(|&j| self.item_names[j].clone()).collect(),
        })
    }

    /// True when every score in row `i` is the same level.
    pub fn is_constant_row(&self, i: usize) -> bool {
        let row = self.row(i);
        row.iter().all(|&s| s == row[0])
    }
}

pub fn default_item_names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|j| format!("{prefix}{j}")).collect()
}

/// Whether a respondent's answers vary across items.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariationClass {
    Zero,
    Nonzero,
}

impl VariationClass {
    pub fn label(self) -> &'static str {
        match self {
            VariationClass::Zero => "zero",
            VariationClass::Nonzero => "nonzero",
        }
    }
}

pub const ATTENDANCE_LABELS: [&str; 5] = ["Poor", "Minimal", "Reasonable", "Good", "Excellent"];
pub const DIFFICULTY_LABELS: [&str; 5] = ["Too Easy", "Easy", "Normal", "Difficult", "Too Difficult"];

/// Display label for a raw attendance code 0..=4.
pub fn attendance_label(code: u8) -> Option<&'static str> {
    ATTENDANCE_LABELS.get(code as usize).copied()
}

/// Display label for a raw difficulty code 1..=5.
pub fn difficulty_label(code: u8) -> Option<&'static str> {
    code.checked_sub(1).and_then(|c| DIFFICULTY_LABELS.get(c as usize)).copied()
}

/// Per-respondent categorical columns, aligned with the matrix rows.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metadata {
    pub instructor: Vec<u32>,
    pub course: Vec<u32>,
    pub repetitions: Vec<u32>,
    /// Raw codes 0..=4.
    pub attendance: Vec<u8>,
    /// Raw codes 1..=5.
    pub difficulty: Vec<u8>,
}

impl Metadata {
    fn select(&self, rows: &[usize]) -> Metadata {
        fn pick<T: Copy>(v: &[T], rows: &[usize]) -> Vec<T> {
            rows.iter().map(|&i| v[i]).collect()
        }
        Metadata {
            instructor: pick(&self.instructor, rows),
            course: pick(&self.course, rows),
            repetitions: pick(&self.repetitions, rows),
            attendance: pick(&self.attendance, rows),
            difficulty: pick(&self.difficulty, rows),
        }
    }
}

/// A Likert matrix plus its aligned metadata. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvaluationDataset {
    matrix: LikertMatrix,
    meta: Metadata,
}

impl EvaluationDataset {
    pub fn new(matrix: LikertMatrix, meta: Metadata) -> Result<Self> {
        let n = matrix.n();
        let check = |column: &'static str, found: usize| {
            if found == n {
                Ok(())
            } else {
                Err(DatasetError::MisalignedMetadata { column, expected: n, found })
            }
        };
        check("instructor", meta.instructor.len())?;
        check("course", meta.course.len())?;
        check("repetitions", meta.repetitions.len())?;
        check("attendance", meta.attendance.len())?;
        check("difficulty", meta.difficulty.len())?;
        for (i, &a) in meta.attendance.iter().enumerate() {
            if a > 4 {
                return Err(DatasetError::InvalidMetadata {
                    row: i + 1,
                    column: "attendance".into(),
                    value: a.to_string(),
                });
            }
        }
        for (i, &d) in meta.difficulty.iter().enumerate() {
            if !(1..=5).contains(&d) {
                return Err(DatasetError::InvalidMetadata {
                    row: i + 1,
                    column: "difficulty".into(),
                    value: d.to_string(),
                });
            }
        }
        Ok(Self { matrix, meta })
    }

    /// Dataset with placeholder metadata (instructor/course/repetitions 1,
    /// attendance 0, difficulty 1). Handy when only the scores matter.
    pub fn from_matrix(matrix: LikertMatrix) -> Self {
        let n = matrix.n();
        let meta = Metadata {
            instructor: vec![1; n],
            course: vec![1; n],
            repetitions: vec![1; n],
            attendance: vec![0; n],
            difficulty: vec![1; n],
        };
        Self { matrix, meta }
    }

    pub fn matrix(&self) -> &LikertMatrix {
        &self.matrix
    }

    pub fn meta(&self) -> &Metadata {
        &self.meta
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn p(&self) -> usize {
        self.matrix.p()
    }

    pub fn respondent(&self, i: usize) -> Respondent<'_> {
        Respondent {
            index: i,
            scores: self.matrix.row(i),
            instructor: self.meta.instructor[i],
            course: self.meta.course[i],
            repetitions: self.meta.repetitions[i],
            attendance: self.meta.attendance[i],
            difficulty: self.meta.difficulty[i],
        }
    }

    pub fn respondents(&self) -> impl Iterator<Item = Respondent<'_>> + '_ {
        (0..self.n()).map(move |i| self.respondent(i))
    }

    pub fn select_rows(&self, rows: &[usize]) -> EvaluationDataset {
        EvaluationDataset { matrix: self.matrix.select_rows(rows), meta: self.meta.select(rows) }
    }

    pub fn column(&self, item_name: &str) -> Result<Vec<LikertScore>> {
        self.matrix.column_by_name(item_name)
    }
}

/// Borrowed view of one respondent's scores and metadata.
#[derive(Copy, Clone, Debug)]
pub struct Respondent<'a> {
    pub index: usize,
    pub scores: &'a [LikertScore],
    pub instructor: u32,
    pub course: u32,
    pub repetitions: u32,
    pub attendance: u8,
    pub difficulty: u8,
}

impl Respondent<'_> {
    pub fn variation_class(&self) -> VariationClass {
        match self.scores.first() {
            Some(first) if self.scores.iter().any(|s| s != first) => VariationClass::Nonzero,
            _ => VariationClass::Zero,
        }
    }
}

type Predicate = Arc<dyn Fn(&Respondent<'_>) -> bool + Send + Sync>;

/// Row selection predicate over respondent metadata and scores.
#[derive(Clone)]
pub enum RowFilter {
    All,
    Nothing,
    Instructor(u32),
    Course(u32),
    Repetitions(u32),
    Attendance(u8),
    Difficulty(u8),
    Variation(VariationClass),
    And(Box<RowFilter>, Box<RowFilter>),
    Not(Box<RowFilter>),
    Custom(Predicate),
}

impl RowFilter {
    pub fn custom(f: impl Fn(&Respondent<'_>) -> bool + Send + Sync + 'static) -> Self {
        RowFilter::Custom(Arc::new(f))
    }

    pub fn and(self, other: RowFilter) -> Self {
        RowFilter::And(Box::new(self), Box::new(other))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        RowFilter::Not(Box::new(self))
    }

    pub fn matches(&self, r: &Respondent<'_>) -> bool {
        match self {
            RowFilter::All => true,
            RowFilter::Nothing => false,
            RowFilter::Instructor(v) => r.instructor == *v,
            RowFilter::Course(v) => r.course == *v,
            RowFilter::Repetitions(v) => r.repetitions == *v,
            RowFilter::Attendance(v) => r.attendance == *v,
            RowFilter::Difficulty(v) => r.difficulty == *v,
            RowFilter::Variation(c) => r.variation_class() == *c,
            RowFilter::And(a, b) => a.matches(r) && b.matches(r),
            RowFilter::Not(a) => !a.matches(r),
            RowFilter::Custom(f) => f(r),
        }
    }
}

impl fmt::Debug for RowFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowFilter::All => write!(f, "All"),
            RowFilter::Nothing => write!(f, "Nothing"),
            RowFilter::Instructor(v) => write!(f, "Instructor({v})"),
            RowFilter::Course(v) => write!(f, "Course({v})"),
            RowFilter::Repetitions(v) => write!(f, "Repetitions({v})"),
            RowFilter::Attendance(v) => write!(f, "Attendance({v})"),
            RowFilter::Difficulty(v) => write!(f, "Difficulty({v})"),
            RowFilter::Variation(c) => write!(f, "Variation({c:?})"),
            RowFilter::And(a, b) => write!(f, "And({a:?}, {b:?})"),
            RowFilter::Not(a) => write!(f, "Not({a:?})"),
            RowFilter::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Rows satisfying `filter`, in original order.
pub fn filter_rows(ds: &EvaluationDataset, filter: &RowFilter) -> EvaluationDataset {
    let rows: Vec<usize> = ds.respondents().filter(|r| filter.matches(r)).map(|r| r.index).collect();
    ds.select_rows(&rows)
}

/// Scores of one named item in row order.
pub fn column(ds: &EvaluationDataset, item_name: &str) -> Result<Vec<LikertScore>> {
    ds.column(item_name)
}

/// Column-name mapping for CSV input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub instructor: String,
    pub course: String,
    pub repetitions: String,
    pub attendance: String,
    pub difficulty: String,
    /// Item columns are those named `<prefix><digits>`, taken in header order.
    pub item_prefix: String,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            instructor: "instr".into(),
            course: "class".into(),
            repetitions: "nb.repeat".into(),
            attendance: "attendance".into(),
            difficulty: "difficulty".into(),
            item_prefix: "Q".into(),
        }
    }
}

impl Schema {
    fn is_item(&self, header: &str) -> bool {
        header
            .strip_prefix(self.item_prefix.as_str())
            .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<EvaluationDataset> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), schema)
}

/// Parses comma-separated survey data. Data rows are numbered from 1 in errors.
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<EvaluationDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(rec) => rec?,
        None => return Err(DatasetError::EmptyFile),
    };
    let header: Vec<String> = header.iter().map(str::to_owned).collect();
    if header.iter().all(String::is_empty) {
        return Err(DatasetError::EmptyFile);
    }
    let find =
        |name: &str| header.iter().position(|h| h == name).ok_or_else(|| DatasetError::MissingColumn(name.to_owned()));
    let idx_instr = find(&schema.instructor)?;
    let idx_course = find(&schema.course)?;
    let idx_rep = find(&schema.repetitions)?;
    let idx_att = find(&schema.attendance)?;
    let idx_diff = find(&schema.difficulty)?;
    let item_cols: Vec<usize> = (0..header.len()).filter(|&c| schema.is_item(&header[c])).collect();
    if item_cols.is_empty() {
        return Err(DatasetError::MissingColumn(format!("{}<n>", schema.item_prefix)));
    }
    let item_names: Vec<String> = item_cols.iter().map(|&c| header[c].clone()).collect();

    let mut rows = Vec::new();
    let mut meta = Metadata::default();
    for (k, rec) in records.enumerate() {
        let rec = rec?;
        let row_no = k + 1;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue; // blank line
        }
        if rec.len() != header.len() {
            return Err(DatasetError::RaggedRow { row: row_no, expected: header.len(), found: rec.len() });
        }
        let meta_field = |c: usize| -> Result<i64> {
            rec[c].parse::<i64>().map_err(|_| DatasetError::InvalidMetadata {
                row: row_no,
                column: header[c].clone(),
                value: rec[c].to_owned(),
            })
        };
        let in_range = |c: usize, v: i64, lo: i64, hi: i64| -> Result<i64> {
            if (lo..=hi).contains(&v) {
                Ok(v)
            } else {
                Err(DatasetError::InvalidMetadata { row: row_no, column: header[c].clone(), value: rec[c].to_owned() })
            }
        };
        meta.instructor.push(in_range(idx_instr, meta_field(idx_instr)?, 0, u32::MAX as i64)? as u32);
        meta.course.push(in_range(idx_course, meta_field(idx_course)?, 0, u32::MAX as i64)? as u32);
        meta.repetitions.push(in_range(idx_rep, meta_field(idx_rep)?, 0, u32::MAX as i64)? as u32);
        meta.attendance.push(in_range(idx_att, meta_field(idx_att)?, 0, 4)? as u8);
        meta.difficulty.push(in_range(idx_diff, meta_field(idx_diff)?, 1, 5)? as u8);

        let mut row = Vec::with_capacity(item_cols.len());
        for &c in &item_cols {
            let raw = &rec[c];
            let score = raw.parse::<i64>().ok().and_then(|v| LikertScore::new(v).ok()).ok_or_else(|| {
                DatasetError::OutOfRangeScore { row: row_no, column: header[c].clone(), value: raw.to_owned() }
            })?;
            row.push(score);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DatasetError::EmptyFile);
    }
    let matrix = LikertMatrix::new(item_names, rows)?;
    EvaluationDataset::new(matrix, meta)
}

/// Writes the dataset in the layout `read_csv` accepts: metadata columns, then items.
pub fn write_csv<W: Write>(ds: &EvaluationDataset, writer: W, schema: &Schema) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![
        schema.instructor.clone(),
        schema.course.clone(),
        schema.repetitions.clone(),
        schema.attendance.clone(),
        schema.difficulty.clone(),
    ];
    header.extend(ds.matrix().item_names().iter().cloned());
    w.write_record(&header)?;
    for r in ds.respondents() {
        let mut rec = vec![
            r.instructor.to_string(),
            r.course.to_string(),
            r.repetitions.to_string(),
            r.attendance.to_string(),
            r.difficulty.to_string(),
        ];
        rec.extend(r.scores.iter().map(|s| s.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_with_items(p: usize, rows: &[Vec<i64>]) -> String {
        let mut s = String::from("instr,class,nb.repeat,attendance,difficulty");
        for j in 1..=p {
            s.push_str(&format!(",Q{j}"));
        }
        s.push('\n');
        for r in rows {
            s.push_str("1,2,1,0,3");
            for v in r {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn score_range_is_enforced() {
        assert!(LikertScore::new(0).is_err());
        assert!(LikertScore::new(6).is_err());
        assert_eq!(LikertScore::new(3).unwrap().get(), 3);
        assert_eq!(LikertScore::all().count(), 5);
    }

    #[test]
    fn single_row_of_threes() {
        let text = csv_with_items(28, &[vec![3; 28]]);
        let ds = read_csv(text.as_bytes(), &Schema::default()).unwrap();
        assert_eq!((ds.n(), ds.p()), (1, 28));
        assert!(ds.matrix().row(0).iter().all(|s| s.get() == 3));
    }

    #[test]
    fn out_of_range_reports_row_and_column() {
        let mut rows = vec![vec![2i64; 5]; 8];
        rows[6][3] = 6;
        let text = csv_with_items(5, &rows);
        match read_csv(text.as_bytes(), &Schema::default()) {
            Err(DatasetError::OutOfRangeScore { row, column, .. }) => {
                assert_eq!(row, 7);
                assert_eq!(column, "Q4");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_integer_score_rejected() {
        let text = "instr,class,nb.repeat,attendance,difficulty,Q1,Q2\n1,1,1,1,1,2.5,3\n";
        assert!(matches!(
            read_csv(text.as_bytes(), &Schema::default()),
            Err(DatasetError::OutOfRangeScore { row: 1, .. })
        ));
    }

    #[test]
    fn missing_ragged_and_empty() {
        let text = "instr,class,attendance,difficulty,Q1,Q2\n1,1,1,1,2,3\n";
        assert!(matches!(
            read_csv(text.as_bytes(), &Schema::default()),
            Err(DatasetError::MissingColumn(c)) if c == "nb.repeat"
        ));
        let text = "instr,class,nb.repeat,attendance,difficulty,Q1,Q2\n1,1,1,1,1,2\n";
        assert!(matches!(read_csv(text.as_bytes(), &Schema::default()), Err(DatasetError::RaggedRow { row: 1, .. })));
        assert!(matches!(read_csv("".as_bytes(), &Schema::default()), Err(DatasetError::EmptyFile)));
        let text = "instr,class,nb.repeat,attendance,difficulty,Q1,Q2\n";
        assert!(matches!(read_csv(text.as_bytes(), &Schema::default()), Err(DatasetError::EmptyFile)));
    }

    #[test]
    fn custom_schema_and_prefix() {
        let text = "teacher,course,rep,att,diff,item1,item2,Quality\n2,3,1,4,5,1,5,9\n";
        let schema = Schema {
            instructor: "teacher".into(),
            course: "course".into(),
            repetitions: "rep".into(),
            attendance: "att".into(),
            difficulty: "diff".into(),
            item_prefix: "item".into(),
        };
        let ds = read_csv(text.as_bytes(), &schema).unwrap();
        assert_eq!(ds.matrix().item_names(), &["item1".to_string(), "item2".to_string()]);
        assert_eq!(ds.meta().attendance, vec![4]);
    }

    #[test]
    fn column_reads_and_unknown() {
        let m = LikertMatrix::from_codes_default_names(&[vec![1, 3], vec![2, 3], vec![5, 3]]).unwrap();
        let ds = EvaluationDataset::from_matrix(m);
        let q1: Vec<u8> = column(&ds, "Q1").unwrap().into_iter().map(u8::from).collect();
        assert_eq!(q1, vec![1, 2, 5]);
        assert!(matches!(column(&ds, "Q99"), Err(DatasetError::UnknownItem(_))));
        let empty = filter_rows(&ds, &RowFilter::Nothing);
        assert_eq!(empty.n(), 0);
        assert!(column(&empty, "Q1").unwrap().is_empty());
    }

    #[test]
    fn filters() {
        let m = LikertMatrix::from_codes_default_names(&[vec![1, 1], vec![2, 3], vec![4, 4]]).unwrap();
        let meta = Metadata {
            instructor: vec![1, 2, 1],
            course: vec![1, 1, 2],
            repetitions: vec![1, 1, 1],
            attendance: vec![0, 1, 2],
            difficulty: vec![1, 2, 3],
        };
        let ds = EvaluationDataset::new(m, meta).unwrap();
        assert_eq!(filter_rows(&ds, &RowFilter::All), ds);
        let one = filter_rows(&ds, &RowFilter::Instructor(1));
        assert_eq!(one.n(), 2);
        assert_eq!(one.meta().difficulty, vec![1, 3]);
        let zero = filter_rows(&ds, &RowFilter::Variation(VariationClass::Zero));
        assert_eq!(zero.meta().attendance, vec![0, 2]);
        let both = filter_rows(&ds, &RowFilter::Instructor(1).and(RowFilter::Course(2)));
        assert_eq!(both.n(), 1);
        assert_eq!(filter_rows(&ds, &RowFilter::Instructor(1).not()).n(), 1);
    }

    #[test]
    fn metadata_must_align() {
        let m = LikertMatrix::from_codes_default_names(&[vec![1, 1]]).unwrap();
        let meta = Metadata { instructor: vec![1, 2], ..Default::default() };
        assert!(matches!(EvaluationDataset::new(m, meta), Err(DatasetError::MisalignedMetadata { .. })));
    }

    #[test]
    fn duplicate_names_rejected() {
        let r = LikertMatrix::from_codes(vec!["A".into(), "A".into()], &[vec![1, 2]]);
        assert!(matches!(r, Err(DatasetError::DuplicateItem(_))));
    }

    #[test]
    fn transpose_swaps_shape() {
        let m = LikertMatrix::from_codes_default_names(&[vec![1, 2, 3], vec![4, 5, 1]]).unwrap();
        let t = m.transpose();
        assert_eq!((t.n(), t.p()), (3, 2));
        assert_eq!(t.get(2, 1).get(), 1);
        assert_eq!(t.transpose().row(1), m.row(1));
    }

    #[test]
    fn labels() {
        assert_eq!(attendance_label(2), Some("Reasonable"));
        assert_eq!(attendance_label(5), None);
        assert_eq!(difficulty_label(1), Some("Too Easy"));
        assert_eq!(difficulty_label(0), None);
    }
}
