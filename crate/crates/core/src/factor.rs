//! Exploratory factor analysis on a correlation matrix: principal-axis
//! extraction, varimax rotation, and regression (Thomson) factor scores.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::correlation::CorrelationMatrix;
use crate::dataset::LikertMatrix;
use crate::linalg::{solve, symmetric_eigen, LinalgError, RealMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FactorError {
    #[error("number of factors must satisfy 1 <= q < p (q = {q}, p = {p})")]
    BadFactorCount { q: usize, p: usize },
    #[error("correlation matrix diagonal entry {0} is not 1")]
    NonUnitDiagonal(usize),
    #[error("correlation matrix is not invertible")]
    SingularCorrelation,
    #[error("item set of the data does not match the model")]
    ItemMismatch,
    #[error("item `{0}` has zero variance; cannot standardize")]
    ZeroVarianceItem(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorOptions {
    /// Stop when the largest communality change falls below this.
    pub tolerance: f64,
    pub max_iter: usize,
    pub varimax: bool,
}

impl Default for FactorOptions {
    fn default() -> Self {
        Self { tolerance: 1e-4, max_iter: 200, varimax: true }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Rotation {
    None,
    Varimax,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorModel<T> {
    pub q: usize,
    pub item_names: Vec<String>,
    /// p × q, factors ordered by sum of squared loadings (descending).
    pub loadings: RealMatrix<T>,
    pub communalities: Vec<T>,
    pub uniquenesses: Vec<T>,
    /// Σ communalities / p.
    pub pct_variance: T,
    /// Per-factor share of total variance (SS loadings / p).
    pub factor_variance: Vec<T>,
    pub rotation: Rotation,
    pub iterations: usize,
    pub converged: bool,
    /// Some communality exceeded 1 and was clamped.
    pub heywood: bool,
    /// No common variance was found (all loadings zero).
    pub degenerate: bool,
    /// Off-diagonal residual ‖C − ΛΛᵀ‖_F after each extraction iteration.
    pub residual_trace: Vec<T>,
    /// Varimax criterion after each rotation sweep (index 0 = before rotating).
    pub varimax_trace: Vec<T>,
}

impl<T: Scalar> FactorModel<T> {
    pub fn p(&self) -> usize {
        self.item_names.len()
    }

    pub fn loading(&self, item: usize, factor: usize) -> T {
        self.loadings[(item, factor)]
    }

    /// `item,factor1..factorq,communality`
    pub fn write_loadings_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["item".to_string()];
        header.extend((1..=self.q).map(|f| format!("factor{f}")));
        header.push("communality".into());
        w.write_record(&header)?;
        for (i, name) in self.item_names.iter().enumerate() {
            let mut rec = vec![name.clone()];
            rec.extend((0..self.q).map(|f| self.loading(i, f).to_string()));
            rec.push(self.communalities[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn off_diagonal_residual<T: Scalar>(c: &RealMatrix<T>, loadings: &RealMatrix<T>) -> T {
    let fit = loadings.matmul(&loadings.transpose());
    let p = c.rows();
    let mut s = T::zero();
    for i in 0..p {
        for j in 0..p {
            if i != j {
                let d = c[(i, j)] - fit[(i, j)];
                s = s + d * d;
            }
        }
    }
    s.sqrt()
}

/// Varimax objective Σ_f [p Σ_i λ⁴ − (Σ_i λ²)²] / p².
pub fn varimax_criterion<T: Scalar>(loadings: &RealMatrix<T>) -> T {
    let (p, q) = (loadings.rows(), loadings.cols());
    let pf = T::of_usize(p);
    let mut total = T::zero();
    for f in 0..q {
        let (mut s2, mut s4) = (T::zero(), T::zero());
        for i in 0..p {
            let l2 = loadings[(i, f)] * loadings[(i, f)];
            s2 = s2 + l2;
            s4 = s4 + l2 * l2;
        }
        total = total + (pf * s4 - s2 * s2) / (pf * pf);
    }
    total
}

const VARIMAX_MAX_SWEEPS: usize = 200;

/// Kaiser-normalized varimax by successive planar rotations. Each planar
/// rotation maximizes the criterion for its factor pair, so the criterion
/// never decreases from sweep to sweep.
pub fn varimax<T: Scalar>(loadings: &RealMatrix<T>) -> (RealMatrix<T>, Vec<T>) {
    let (p, q) = (loadings.rows(), loadings.cols());
    let norms: Vec<T> = (0..p).map(|i| loadings.row(i).iter().map(|&v| v * v).sum::<T>().sqrt()).collect();
    let mut x = loadings.clone();
    for (i, &h) in norms.iter().enumerate() {
        if h > T::zero() {
            for f in 0..q {
                x[(i, f)] = x[(i, f)] / h;
            }
        }
    }
    let mut trace = vec![varimax_criterion(&x)];
    let pf = T::of_usize(p);
    let two = T::lit(2.0);
    let quarter = T::lit(0.25);
    for _ in 0..VARIMAX_MAX_SWEEPS {
        let mut max_angle = T::zero();
        for a in 0..q {
            for b in (a + 1)..q {
                let (mut sa, mut sb, mut sc, mut sd) = (T::zero(), T::zero(), T::zero(), T::zero());
                for i in 0..p {
                    let (xa, xb) = (x[(i, a)], x[(i, b)]);
                    let u = xa * xa - xb * xb;
                    let v = two * xa * xb;
                    sa = sa + u;
                    sb = sb + v;
                    sc = sc + u * u - v * v;
                    sd = sd + two * u * v;
                }
                let num = sd - two * sa * sb / pf;
                let den = sc - (sa * sa - sb * sb) / pf;
                let phi = quarter * num.atan2(den);
                max_angle = max_angle.max(phi.abs());
                let (s, c) = phi.sin_cos();
                for i in 0..p {
                    let (xa, xb) = (x[(i, a)], x[(i, b)]);
                    x[(i, a)] = xa * c + xb * s;
                    x[(i, b)] = -xa * s + xb * c;
                }
            }
        }
        trace.push(varimax_criterion(&x));
        if max_angle < T::lit(1e-12) {
            break;
        }
    }
    for (i, &h) in norms.iter().enumerate() {
        for f in 0..q {
            x[(i, f)] = x[(i, f)] * h;
        }
    }
    (x, trace)
}

/// Principal-axis factoring of a correlation matrix.
pub fn extract_factors<T: Scalar>(
    c: &CorrelationMatrix<T>,
    q: usize,
    opts: &FactorOptions,
) -> Result<FactorModel<T>, FactorError> {
    let p = c.p();
    let cm = RealMatrix::from_row_major(p, p, c.values.clone());
    let mut model = extract_from_matrix(&cm, q, opts)?;
    model.item_names = c.item_names.clone();
    Ok(model)
}

/// Principal-axis factoring on a bare symmetric matrix with unit diagonal.
pub fn extract_from_matrix<T: Scalar>(
    c: &RealMatrix<T>,
    q: usize,
    opts: &FactorOptions,
) -> Result<FactorModel<T>, FactorError> {
    let p = c.rows();
    if c.cols() != p {
        return Err(LinalgError::NotSquare(c.rows(), c.cols()).into());
    }
    if q == 0 || q >= p {
        return Err(FactorError::BadFactorCount { q, p });
    }
    for i in 0..p {
        if (c[(i, i)] - T::one()).abs() > T::lit(1e-8) {
            return Err(FactorError::NonUnitDiagonal(i));
        }
    }
    // starting communalities: largest absolute correlation in each row
    let mut h: Vec<T> =
        (0..p).map(|i| (0..p).filter(|&j| j != i).map(|j| c[(i, j)].abs()).fold(T::zero(), T::max)).collect();
    let tol = T::lit(opts.tolerance);
    let mut loadings = RealMatrix::zeros(p, q);
    let mut residual_trace = Vec::new();
    let mut converged = false;
    let mut heywood = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut reduced = c.clone();
        for i in 0..p {
            reduced[(i, i)] = h[i];
        }
        let eig = symmetric_eigen(&reduced)?;
        for f in 0..q {
            let root = eig.values[f].max(T::zero()).sqrt();
            for i in 0..p {
                loadings[(i, f)] = eig.vectors[(i, f)] * root;
            }
        }
        let mut new_h: Vec<T> = (0..p).map(|i| loadings.row(i).iter().map(|&v| v * v).sum()).collect();
        for v in new_h.iter_mut() {
            if *v > T::one() {
                heywood = true;
                *v = T::one();
            }
        }
        let change = h.iter().zip(&new_h).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
        h = new_h;
        residual_trace.push(off_diagonal_residual(c, &loadings));
        if change < tol {
            converged = true;
            break;
        }
    }
    // keep Λ consistent with clamped communalities
    for i in 0..p {
        let ss: T = loadings.row(i).iter().map(|&v| v * v).sum();
        if ss > T::one() {
            let s = ss.sqrt();
            for f in 0..q {
                loadings[(i, f)] = loadings[(i, f)] / s;
            }
        }
    }
    let degenerate = loadings.as_slice().iter().all(|v| v.abs() < T::lit(1e-8));
    let (rotated, varimax_trace, rotation) = if opts.varimax && q > 1 && !degenerate {
        let (r, t) = varimax(&loadings);
        (r, t, Rotation::Varimax)
    } else {
        (loadings, Vec::new(), Rotation::None)
    };
    let loadings = order_and_orient(&rotated);
    let communalities: Vec<T> = (0..p).map(|i| loadings.row(i).iter().map(|&v| v * v).sum()).collect();
    let pf = T::of_usize(p);
    let factor_variance = (0..q).map(|f| (0..p).map(|i| loadings[(i, f)] * loadings[(i, f)]).sum::<T>() / pf).collect();
    Ok(FactorModel {
        q,
        item_names: (1..=p).map(|i| format!("V{i}")).collect(),
        uniquenesses: communalities.iter().map(|&h| T::one() - h).collect(),
        pct_variance: communalities.iter().copied().sum::<T>() / pf,
        communalities,
        factor_variance,
        loadings,
        rotation,
        iterations,
        converged,
        heywood,
        degenerate,
        residual_trace,
        varimax_trace,
    })
}

/// Columns sorted by sum of squares (descending), each flipped to a non-negative sum.
fn order_and_orient<T: Scalar>(l: &RealMatrix<T>) -> RealMatrix<T> {
    let (p, q) = (l.rows(), l.cols());
    let ss: Vec<T> = (0..q).map(|f| (0..p).map(|i| l[(i, f)] * l[(i, f)]).sum()).collect();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| ss[b].partial_cmp(&ss[a]).expect("finite").then(a.cmp(&b)));
    let mut out = RealMatrix::zeros(p, q);
    for (dst, &src) in order.iter().enumerate() {
        let sum: T = (0..p).map(|i| l[(i, src)]).sum();
        let sign = if sum < T::zero() { -T::one() } else { T::one() };
        for i in 0..p {
            out[(i, dst)] = l[(i, src)] * sign;
        }
    }
    out
}

const SCORE_RIDGE: f64 = 1e-6;

/// Linear map from a raw item vector to regression factor scores.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorScorer<T> {
    pub means: Vec<T>,
    pub sds: Vec<T>,
    /// p × q coefficients (C + ridge·I)⁻¹ Λ.
    pub weights: RealMatrix<T>,
}

impl<T: Scalar> FactorScorer<T> {
    /// Standardizes with the mean and sample SD of each item of `m`.
    pub fn new(model: &FactorModel<T>, m: &LikertMatrix, c: &CorrelationMatrix<T>) -> Result<Self, FactorError> {
        let p = model.p();
        if m.p() != p || c.p() != p || m.item_names() != model.item_names.as_slice() {
            return Err(FactorError::ItemMismatch);
        }
        let n = m.n();
        let nf = T::of_usize(n);
        let mut means = Vec::with_capacity(p);
        let mut sds = Vec::with_capacity(p);
        for j in 0..p {
            let col: Vec<T> = (0..n).map(|i| T::lit(m.get(i, j).get() as f64)).collect();
            let mean = col.iter().copied().sum::<T>() / nf;
            let ss: T = col.iter().map(|&v| (v - mean) * (v - mean)).sum();
            let sd = if n > 1 { (ss / T::of_usize(n - 1)).sqrt() } else { T::zero() };
            if sd <= T::zero() {
                return Err(FactorError::ZeroVarianceItem(m.item_names()[j].clone()));
            }
            means.push(mean);
            sds.push(sd);
        }
        let mut a = RealMatrix::from_row_major(p, p, c.values.clone());
        for i in 0..p {
            a[(i, i)] = a[(i, i)] + T::lit(SCORE_RIDGE);
        }
        let weights = solve(&a, &model.loadings).map_err(|e| match e {
            LinalgError::Singular => FactorError::SingularCorrelation,
            other => other.into(),
        })?;
        Ok(Self { means, sds, weights })
    }

    pub fn score(&self, x: &[T]) -> Vec<T> {
        let q = self.weights.cols();
        let mut z = vec![T::zero(); q];
        for (j, &v) in x.iter().enumerate() {
            let s = (v - self.means[j]) / self.sds[j];
            for (f, zf) in z.iter_mut().enumerate() {
                *zf = *zf + s * self.weights[(j, f)];
            }
        }
        z
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorScores<T> {
    /// n × q
    pub scores: Vec<Vec<T>>,
    pub method: &'static str,
}

impl<T: Scalar> FactorScores<T> {
    /// `row_id,z1..zq` with 1-based row ids.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let q = self.scores.first().map(Vec::len).unwrap_or(0);
        let mut header = vec!["row_id".to_string()];
        header.extend((1..=q).map(|f| format!("z{f}")));
        w.write_record(&header)?;
        for (i, row) in self.scores.iter().enumerate() {
            let mut rec = vec![(i + 1).to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Regression scores ẑ = Λᵀ C⁻¹ x_std for every respondent of `m`.
pub fn factor_scores<T: Scalar>(
    model: &FactorModel<T>,
    m: &LikertMatrix,
    c: &CorrelationMatrix<T>,
) -> Result<FactorScores<T>, FactorError> {
    let scorer = FactorScorer::new(model, m, c)?;
    let scores = m
        .rows()
        .map(|row| {
            let x: Vec<T> = row.iter().map(|s| T::lit(s.get() as f64)).collect();
            scorer.score(&x)
        })
        .collect();
    Ok(FactorScores { scores, method: "regression" })
}
