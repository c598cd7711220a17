//! Regression with a vine: the conditional density of the target given the
//! features, normalized on a grid, plus point predictions and metrics.

use rayon::prelude::*;

use crate::bicopula::{clamp_unit, PairCopula, DEFAULT_CLAMP_EPS};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rvine::VineModel;
use crate::stats::{probit, GaussianKernel1D};

pub const DEFAULT_GRID_POINTS: usize = 257;
pub const MIN_GRID_POINTS: usize = 33;
/// The grid spans the 0.1% to 99.9% quantiles of the target marginal,
/// widened by this fraction of the span on each side.
const GRID_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct YGrid {
    points: Vec<f64>,
}

impl YGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < MIN_GRID_POINTS {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {}",
                points.len()
            )));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("grid points must be finite and strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn uniform(low: f64, high: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config("grid needs at least 2 points".into()));
        }
        let step = (high - low) / (n - 1) as f64;
        Self::new((0..n).map(|i| low + step * i as f64).collect())
    }

    /// `n` points over the expanded central quantile range of `marginal`.
    pub fn for_marginal(marginal: &GaussianKernel1D, n: usize) -> Result<Self> {
        let lo = marginal.quantile(0.001)?;
        let hi = marginal.quantile(0.999)?;
        let pad = GRID_MARGIN * (hi - lo);
        Self::uniform(lo - pad, hi + pad, n)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn low(&self) -> f64 {
        self.points[0]
    }

    pub fn high(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Trapezoidal integral of `values` sampled on the grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.points
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PointEstimate {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionMetrics {
    pub nmse: f64,
    pub tll: f64,
}

fn target_of(vine: &VineModel) -> Result<usize> {
    vine.target()
        .ok_or_else(|| Error::Config("the model has no target variable".into()))
}

/// Default grid for the model's target.
pub fn default_grid(vine: &VineModel, n: usize) -> Result<YGrid> {
    let t = target_of(vine)?;
    YGrid::for_marginal(vine.marginal(t), n)
}

/// `p(y | x)` on the grid, normalized to integrate to 1. `features` holds the
/// non-target variables in model order.
pub fn conditional_density(vine: &VineModel, features: &[f64], grid: &YGrid) -> Result<Vec<f64>> {
    let t = target_of(vine)?;
    if features.len() + 1 != vine.dim() {
        return Err(Error::Schema(format!(
            "expected {} features, got {}",
            vine.dim() - 1,
            features.len()
        )));
    }
    if features.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("features must be finite".into()));
    }
    let g = grid.points().len();
    let mut feats = features.iter();
    let columns: Vec<Vec<f64>> = (0..vine.dim())
        .map(|j| {
            if j == t {
                grid.points().to_vec()
            } else {
                vec![*feats.next().expect("length checked"); g]
            }
        })
        .collect();
    let log = vine.log_density_involving(&columns, t);
    normalize(&log, grid)
}

/// Mean or median of a normalized density sampled on the grid.
pub fn point_estimate(grid: &YGrid, density: &[f64], how: PointEstimate) -> f64 {
    let y = grid.points();
    match how {
        PointEstimate::Mean => {
            let m: Vec<f64> = y.iter().zip(density).map(|(a, b)| a * b).collect();
            grid.integrate(&m).clamp(grid.low(), grid.high())
        }
        PointEstimate::Median => {
            let mut acc = 0.0;
            for i in 1..y.len() {
                let step = 0.5 * (y[i] - y[i - 1]) * (density[i] + density[i - 1]);
                if acc + step >= 0.5 && step > 0.0 {
                    return y[i - 1] + (y[i] - y[i - 1]) * (0.5 - acc) / step;
                }
                acc += step;
            }
            grid.high()
        }
    }
}

fn normalize(log: &[f64], grid: &YGrid) -> Result<Vec<f64>> {
    let max = log.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut dens: Vec<f64> = log.iter().map(|l| (l - max).exp()).collect();
    let z = grid.integrate(&dens);
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain("conditional density vanishes on the grid".into()));
    }
    dens.iter_mut().for_each(|d| *d /= z);
    Ok(dens)
}

enum TargetEdge<'a> {
    /// Kernel copula with a diagonal bandwidth matrix: its density is a sum
    /// of products of one kernel in `y` and one in the other variable, so the
    /// `y` kernels on the grid are computed once (row-major, grid × centers).
    Separable {
        other: usize,
        x_centers: &'a [f64],
        sigma_x: f64,
        y_kernels: Vec<f64>,
        log_const: f64,
    },
    General {
        other: usize,
        y_first: bool,
        copula: &'a PairCopula,
    },
}

/// Evaluates `p(y | x)` on a fixed grid for many feature vectors. Models with
/// more than one tree go through the general vine evaluation.
pub struct ConditionalEvaluator<'a> {
    vine: &'a VineModel,
    target: usize,
    grid: &'a YGrid,
    /// `log p(y)` and the Gaussian-space target score on the grid.
    log_py: Vec<f64>,
    w: Vec<f64>,
    u: Vec<f64>,
    edges: Option<Vec<TargetEdge<'a>>>,
}

impl<'a> ConditionalEvaluator<'a> {
    pub fn new(vine: &'a VineModel, grid: &'a YGrid) -> Result<Self> {
        let t = target_of(vine)?;
        let m = vine.marginal(t);
        let log_py: Vec<f64> = grid.points().iter().map(|&y| m.log_pdf(y)).collect();
        let u = m.cdf_many(grid.points());
        let w: Vec<f64> = u.iter().map(|&v| probit(clamp_unit(v, DEFAULT_CLAMP_EPS))).collect();
        let edges = (vine.truncation() <= 1).then(|| {
            vine.trees()
                .first()
                .map(|tree| tree.edges.as_slice())
                .unwrap_or(&[])
                .iter()
                .filter(|e| e.involves(t))
                .map(|e| {
                    let (a, b) = e.conditioned;
                    let y_first = a == t;
                    let other = if y_first { b } else { a };
                    match &e.copula {
                        PairCopula::Kernel(k) if k.gamma() == 0.0 => {
                            let (y_centers, sigma_y, x_centers, sigma_x) = if y_first {
                                (k.z_centers(), k.sigma_z(), k.w_centers(), k.sigma_w())
                            } else {
                                (k.w_centers(), k.sigma_w(), k.z_centers(), k.sigma_z())
                            };
                            let g = 0.5 / (sigma_y * sigma_y);
                            let mut y_kernels = Vec::with_capacity(w.len() * y_centers.len());
                            for &wg in &w {
                                y_kernels.extend(y_centers.iter().map(|c| (-g * (wg - c) * (wg - c)).exp()));
                            }
                            TargetEdge::Separable {
                                other,
                                x_centers,
                                sigma_x,
                                y_kernels,
                                log_const: -(k.len() as f64).ln() - (sigma_x * sigma_y).ln(),
                            }
                        }
                        copula => TargetEdge::General { other, y_first, copula },
                    }
                })
                .collect()
        });
        Ok(Self {
            vine,
            target: t,
            grid,
            log_py,
            w,
            u,
            edges,
        })
    }

    /// Full-model feature vector (target entry ignored) to normalized density.
    fn density_full(&self, x: &[f64]) -> Result<Vec<f64>> {
        let Some(edges) = &self.edges else {
            let features: Vec<f64> = x
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != self.target)
                .map(|(_, v)| *v)
                .collect();
            return conditional_density(self.vine, &features, self.grid);
        };
        let mut log = self.log_py.clone();
        for edge in edges {
            match edge {
                TargetEdge::Separable {
                    other,
                    x_centers,
                    sigma_x,
                    y_kernels,
                    log_const,
                } => {
                    let ux = self.vine.marginal(*other).cdf(x[*other]);
                    let zx = probit(clamp_unit(ux, DEFAULT_CLAMP_EPS));
                    let g = 0.5 / (sigma_x * sigma_x);
                    let e: Vec<f64> = x_centers.iter().map(|c| -g * (zx - c) * (zx - c)).collect();
                    let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let a: Vec<f64> = e.iter().map(|v| (v - max).exp()).collect();
                    let n = a.len();
                    for (gi, l) in log.iter_mut().enumerate() {
                        let row = &y_kernels[gi * n..(gi + 1) * n];
                        let s: f64 = row.iter().zip(&a).map(|(b, a)| a * b).sum();
                        let wg = self.w[gi];
                        *l += max + s.ln() + log_const + 0.5 * (zx * zx + wg * wg);
                    }
                }
                TargetEdge::General { other, y_first, copula } => {
                    let ux = self.vine.marginal(*other).cdf(x[*other]);
                    for (l, &uy) in log.iter_mut().zip(&self.u) {
                        *l += if *y_first {
                            copula.log_density(uy, ux)
                        } else {
                            copula.log_density(ux, uy)
                        };
                    }
                }
            }
        }
        normalize(&log, self.grid)
    }

    /// `p(y | x)` for the non-target features in model order.
    pub fn density(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() + 1 != self.vine.dim() {
            return Err(Error::Schema(format!(
                "expected {} features, got {}",
                self.vine.dim() - 1,
                features.len()
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("features must be finite".into()));
        }
        let mut full = features.to_vec();
        full.insert(self.target, 0.0);
        self.density_full(&full)
    }
}

pub fn predict_mean(vine: &VineModel, features: &[f64], grid: &YGrid) -> Result<f64> {
    let d = conditional_density(vine, features, grid)?;
    Ok(point_estimate(grid, &d, PointEstimate::Mean))
}

/// Point predictions for every row of `data`, whose columns are matched to
/// the model's non-target variables by name (a target column is ignored).
pub fn predict(vine: &VineModel, data: &Dataset, grid: &YGrid, how: PointEstimate) -> Result<Vec<f64>> {
    let t = target_of(vine)?;
    let names: Vec<String> = vine
        .names()
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != t)
        .map(|(_, n)| n.clone())
        .collect();
    let x = data.select_columns(&names)?;
    let eval = ConditionalEvaluator::new(vine, grid)?;
    (0..x.n_rows())
        .into_par_iter()
        .map(|r| {
            let d = eval.density(&x.row(r))?;
            Ok(point_estimate(grid, &d, how))
        })
        .collect()
}

/// Mean squared error over the population variance of `truth`.
pub fn nmse(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::Schema(format!(
            "{} predictions for {} targets",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.len() < 2 {
        return Err(Error::InsufficientData("NMSE needs at least 2 targets".into()));
    }
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let var = truth.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::DegenerateMetric("test targets have zero variance".into()));
    }
    let mse = predictions.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n;
    Ok(mse / var)
}

/// Mean per-row log density of `test` under `vine`.
pub fn test_log_likelihood(vine: &VineModel, test: &Dataset) -> Result<f64> {
    let ll = vine.log_density_dataset(test)?;
    if ll.is_empty() {
        return Err(Error::InsufficientData("empty test set".into()));
    }
    Ok(ll.iter().sum::<f64>() / ll.len() as f64)
}

/// NMSE of grid-mean predictions and the TLL on a labeled test set.
pub fn evaluate(vine: &VineModel, test: &Dataset, grid: &YGrid) -> Result<RegressionMetrics> {
    let t = target_of(vine)?;
    let truth = test
        .column_by_name(&vine.names()[t])
        .ok_or_else(|| Error::Schema(format!("missing target column `{}`", vine.names()[t])))?;
    let pred = predict(vine, test, grid, PointEstimate::Mean)?;
    Ok(RegressionMetrics {
        nmse: nmse(&pred, truth)?,
        tll: test_log_likelihood(vine, test)?,
    })
}
