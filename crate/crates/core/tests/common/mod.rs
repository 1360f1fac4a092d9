//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use likert_miner::linalg::RealMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pair counts by enumerating all i < j: (concordant, discordant, n0, x-tied, y-tied).
pub fn brute_tau_counts(x: &[u8], y: &[u8]) -> (u64, u64, u64, u64, u64) {
    let n = x.len();
    let (mut c, mut d, mut tx, mut ty) = (0, 0, 0, 0);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] as i32 - x[j] as i32;
            let dy = y[i] as i32 - y[j] as i32;
            if dx == 0 {
                tx += 1;
            }
            if dy == 0 {
                ty += 1;
            }
            match (dx * dy).signum() {
                1 => c += 1,
                -1 => d += 1,
                _ => {}
            }
        }
    }
    (c, d, (n * n.saturating_sub(1) / 2) as u64, tx, ty)
}

pub fn brute_tau_b(x: &[u8], y: &[u8]) -> Option<f64> {
    let (c, d, n0, n1, n2) = brute_tau_counts(x, y);
    if n0 == n1 || n0 == n2 {
        return None;
    }
    let num = c as f64 - d as f64;
    Some(num / ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt())
}

/// ln Γ(k/2) from Γ(1) = 1, Γ(1/2) = √π and Γ(z + 1) = zΓ(z).
pub fn ln_gamma_half_integer(k: usize) -> f64 {
    let (mut z, mut acc) = if k.is_multiple_of(2) { (1.0, 0.0) } else { (0.5, 0.5 * std::f64::consts::PI.ln()) };
    while z < k as f64 / 2.0 {
        acc += z.ln();
        z += 1.0;
    }
    acc
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    // (x, f(x)) at the left end, midpoint and right end
    type Panel = [(f64, f64); 3];
    fn step(f: &dyn Fn(f64) -> f64, [(a, fa), (m, fm), (b, fb)]: Panel, whole: f64, eps: f64, depth: u32) -> f64 {
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            left + right + delta / 15.0
        } else {
            step(f, [(a, fa), (lm, flm), (m, fm)], left, eps / 2.0, depth - 1)
                + step(f, [(m, fm), (rm, frm), (b, fb)], right, eps / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, [(a, fa), (m, fm), (b, fb)], whole, eps, 60)
}

/// P(χ²_df > x) as 1 − ∫₀^√x of the density of √χ²_df; the substitution
/// t = u² removes the singularity at 0 for df = 1.
pub fn chi2_sf_by_quadrature(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let k = df as f64;
    let log_norm = std::f64::consts::LN_2 - 0.5 * k * std::f64::consts::LN_2 - ln_gamma_half_integer(df);
    let density = move |u: f64| {
        if u == 0.0 {
            return if df == 1 { log_norm.exp() } else { 0.0 };
        }
        (log_norm + (k - 1.0) * u.ln() - 0.5 * u * u).exp()
    };
    // split at the mode so both halves are smooth and unimodal
    let top = x.sqrt();
    let mode = (k - 1.0).max(0.0).sqrt().min(top);
    let cdf = adaptive_simpson(&density, 0.0, mode, 1e-14) + adaptive_simpson(&density, mode, top, 1e-14);
    1.0 - cdf
}

/// Minimum WCSS over every assignment of the points to k labels.
pub fn exhaustive_kmeans_wcss(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let p = points[0].len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut wcss = 0.0;
        for c in 0..k {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(x, _)| x).collect();
            if members.is_empty() {
                continue;
            }
            for j in 0..p {
                let mean = members.iter().map(|x| x[j]).sum::<f64>() / members.len() as f64;
                wcss += members.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>();
            }
        }
        best = best.min(wcss);
        // next assignment in base k
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

fn n_gini(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let sq: u64 = counts.iter().map(|c| c * c).sum();
    n as f64 - sq as f64 / n as f64
}

/// Best `x <= t` split over t ∈ {1,2,3,4}: lowest threshold among the
/// largest impurity decreases, or `None` when no split decreases impurity.
pub fn exhaustive_root_split(x: &[u8], y: &[usize], classes: usize) -> Option<(u8, f64)> {
    let mut parent = vec![0u64; classes];
    for &l in y {
        parent[l] += 1;
    }
    let mut best: Option<(u8, f64)> = None;
    for t in 1..=4u8 {
        let mut left = vec![0u64; classes];
        for (&xi, &yi) in x.iter().zip(y) {
            if xi <= t {
                left[yi] += 1;
            }
        }
        let right: Vec<u64> = parent.iter().zip(&left).map(|(a, b)| a - b).collect();
        if left.iter().sum::<u64>() == 0 || right.iter().sum::<u64>() == 0 {
            continue;
        }
        let dec = n_gini(&parent) - n_gini(&left) - n_gini(&right);
        if dec > 1e-12 && best.is_none_or(|(_, b)| dec > b + 1e-12) {
            best = Some((t, dec));
        }
    }
    best
}

/// C = ΛΛᵀ + Ψ with unit diagonal for one factor.
pub fn planted_one_factor(loadings: &[f64]) -> RealMatrix<f64> {
    let p = loadings.len();
    let mut c = RealMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            c[(i, j)] = if i == j { 1.0 } else { loadings[i] * loadings[j] };
        }
    }
    c
}

pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> RealMatrix<f64> {
    let mut m = RealMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = rng.gen_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The student-evaluation CSV, if present.
pub fn dataset_path() -> Option<PathBuf> {
    let from_env = std::env::var_os("LIKERT_MINER_DATASET").map(PathBuf::from);
    let in_repo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/turkiye-student-evaluation_generic.csv");
    from_env.into_iter().chain([in_repo]).find(|p| p.is_file())
}
