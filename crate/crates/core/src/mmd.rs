//! Maximum Mean Discrepancy two-sample test: unbiased MMD² with an RBF
//! kernel and pooled-relabeling permutation p-values.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    cols: usize,
}

impl SampleMatrix {
    pub fn new(data: Vec<f64>, cols: usize) -> Result<Self> {
        if cols == 0 || !data.len().is_multiple_of(cols) {
            return Err(Error::Schema(format!(
                "{} values do not form rows of {cols} columns",
                data.len()
            )));
        }
        Ok(Self { data, cols })
    }

    pub fn from_column(col: &[f64]) -> Self {
        Self {
            data: col.to_vec(),
            cols: 1,
        }
    }

    /// Interleaves equally long columns into rows.
    pub fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        let cols = columns.len();
        let n = columns.first().map_or(0, |c| c.len());
        if cols == 0 || columns.iter().any(|c| c.len() != n) {
            return Err(Error::Schema("columns must be non-empty and equally long".into()));
        }
        let mut data = Vec::with_capacity(n * cols);
        for r in 0..n {
            data.extend(columns.iter().map(|c| c[r]));
        }
        Ok(Self { data, cols })
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.cols
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn select(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self { data, cols: self.cols }
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.rows().cmp(&other.rows()).then_with(|| {
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    MedianHeuristic,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmdConfig {
    pub bandwidth: Bandwidth,
    pub permutations: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Samples larger than this are reduced to a seeded random subset of
    /// this many rows before testing; `None` disables the cap.
    pub max_samples: Option<usize>,
}

impl Default for MmdConfig {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::MedianHeuristic,
            permutations: 200,
            alpha: 0.05,
            seed: 0,
            max_samples: Some(300),
        }
    }
}

impl MmdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.permutations < 50 {
            return Err(Error::Config(format!(
                "permutations must be at least 50, got {}",
                self.permutations
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("kernel bandwidth must be positive, got {h}")));
            }
        }
        if self.max_samples.is_some_and(|m| m < 2) {
            return Err(Error::Config("max_samples must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub rejected: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_pair(x: &SampleMatrix, y: &SampleMatrix) -> Result<()> {
    if x.cols() != y.cols() {
        return Err(Error::Schema(format!(
            "samples have {} and {} columns",
            x.cols(),
            y.cols()
        )));
    }
    if x.rows() < 2 || y.rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "MMD needs at least 2 rows per sample, got {} and {}",
            x.rows(),
            y.rows()
        )));
    }
    Ok(())
}

/// Unbiased MMD² with kernel `exp(-‖a-b‖² / (2 h²))`.
///
/// Symmetric in its arguments bit for bit: the cross term is always summed
/// with the canonically smaller sample on the outside.
pub fn mmd_statistic(x: &SampleMatrix, y: &SampleMatrix, bandwidth: f64) -> Result<f64> {
    check_pair(x, y)?;
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::Domain(format!("kernel bandwidth must be positive, got {bandwidth}")));
    }
    let (x, y) = if x.canonical_cmp(y) == Ordering::Greater { (y, x) } else { (x, y) };
    let g = 1.0 / (2.0 * bandwidth * bandwidth);
    let k = |a: &[f64], b: &[f64]| (-g * sq_dist(a, b)).exp();
    let within = |s: &SampleMatrix| {
        let n = s.rows();
        let mut sum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                sum += k(s.row(i), s.row(j));
            }
        }
        2.0 * sum / (n * (n - 1)) as f64
    };
    let mut cross = 0.0;
    for i in 0..x.rows() {
        for j in 0..y.rows() {
            cross += k(x.row(i), y.row(j));
        }
    }
    let cross = cross / (x.rows() * y.rows()) as f64;
    Ok(within(x) + within(y) - 2.0 * cross)
}

/// Most rows used by [`median_heuristic`]; larger pools are strided.
pub const MEDIAN_HEURISTIC_MAX_POINTS: usize = 1000;

/// Median pairwise Euclidean distance of the pooled sample, or 1.0 if it is 0.
pub fn median_heuristic(x: &SampleMatrix, y: &SampleMatrix) -> f64 {
    let total = x.rows() + y.rows();
    let stride = total.div_ceil(MEDIAN_HEURISTIC_MAX_POINTS).max(1);
    let points: Vec<&[f64]> = (0..total)
        .step_by(stride)
        .map(|i| if i < x.rows() { x.row(i) } else { y.row(i - x.rows()) })
        .collect();
    let mut d = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d.push(sq_dist(points[i], points[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    let m = d.len();
    let med = if m % 2 == 1 {
        *d.select_nth_unstable_by(m / 2, f64::total_cmp).1
    } else {
        let (lower, hi, _) = d.select_nth_unstable_by(m / 2, f64::total_cmp);
        let hi = *hi;
        let lo = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    };
    if med > 0.0 && med.is_finite() {
        med
    } else {
        1.0
    }
}

fn subsample(s: &SampleMatrix, cap: Option<usize>, rng: &mut ChaCha8Rng) -> SampleMatrix {
    match cap {
        Some(m) if s.rows() > m => {
            let mut idx = rand::seq::index::sample(rng, s.rows(), m).into_vec();
            idx.sort_unstable();
            s.select(&idx)
        }
        _ => s.clone(),
    }
}

/// Sum of `k[i][j]` over ordered pairs `i != j` drawn from `idx`.
fn block_sum(k: &[f64], n: usize, idx: &[usize]) -> f64 {
    let mut s = 0.0;
    for (a, &i) in idx.iter().enumerate() {
        let row = &k[i * n..(i + 1) * n];
        for &j in &idx[a + 1..] {
            s += row[j];
        }
    }
    2.0 * s
}

/// Permutation test of `H0: X and Y share a distribution`.
pub fn permutation_test(x: &SampleMatrix, y: &SampleMatrix, config: &MmdConfig) -> Result<TestResult> {
    config.validate()?;
    check_pair(x, y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x = subsample(x, config.max_samples, &mut rng);
    let y = subsample(y, config.max_samples, &mut rng);
    let h = match config.bandwidth {
        Bandwidth::Fixed(h) => h,
        Bandwidth::MedianHeuristic => median_heuristic(&x, &y),
    };
    let statistic = mmd_statistic(&x, &y, h)?;

    let (nx, ny) = (x.rows(), y.rows());
    let n = nx + ny;
    let pooled: Vec<&[f64]> = (0..nx).map(|i| x.row(i)).chain((0..ny).map(|i| y.row(i))).collect();
    let g = 1.0 / (2.0 * h * h);
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = (-g * sq_dist(pooled[i], pooled[j])).exp();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let total = block_sum(&k, n, &(0..n).collect::<Vec<_>>());
    let stat_of = |perm: &[usize]| {
        let sxx = block_sum(&k, n, &perm[..nx]);
        let syy = block_sum(&k, n, &perm[nx..]);
        let sxy = 0.5 * (total - sxx - syy);
        sxx / (nx * (nx - 1)) as f64 + syy / (ny * (ny - 1)) as f64
            - 2.0 * sxy / (nx * ny) as f64
    };
    let identity: Vec<usize> = (0..n).collect();
    let observed = stat_of(&identity);

    let perms: Vec<Vec<usize>> = (0..config.permutations)
        .map(|_| {
            let mut p = identity.clone();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    let exceed = perms
        .par_iter()
        .filter(|p| stat_of(p) >= observed)
        .count();
    let p_value = (1 + exceed) as f64 / (1 + config.permutations) as f64;
    Ok(TestResult {
        statistic,
        p_value,
        rejected: p_value < config.alpha,
    })
}
