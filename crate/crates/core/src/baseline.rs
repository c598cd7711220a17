//! Plain multivariate Gaussian kernel density estimator used as a baseline.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats::{silverman_bandwidth, LN_SQRT_2PI};

/// Product-kernel KDE with a diagonal Silverman bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateKde {
    names: Vec<String>,
    /// Row-major copy of the training sample.
    centers: Vec<f64>,
    bandwidths: Vec<f64>,
}

impl MultivariateKde {
    pub fn fit(data: &Dataset) -> Result<Self> {
        let d = data.n_cols();
        if d == 0 || data.n_rows() < 2 {
            return Err(Error::InsufficientData("KDE needs at least 2 rows and 1 column".into()));
        }
        let bandwidths = data
            .names()
            .iter()
            .zip(data.columns())
            .map(|(name, c)| {
                silverman_bandwidth(c, d).map_err(|e| match e {
                    Error::DegenerateSample { .. } => Error::DegenerateSample { column: name.clone() },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let centers = data.rows().flatten().collect();
        Ok(Self {
            names: data.names().to_vec(),
            centers,
            bandwidths,
        })
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.bandwidths.len();
        let n = self.centers.len() / d;
        let norm: f64 = self.bandwidths.iter().map(|h| h.ln() + LN_SQRT_2PI).sum::<f64>() + (n as f64).ln();
        let exps: Vec<f64> = self
            .centers
            .chunks_exact(d)
            .map(|c| {
                -0.5 * c
                    .iter()
                    .zip(x)
                    .zip(&self.bandwidths)
                    .map(|((ci, xi), h)| {
                        let t = (xi - ci) / h;
                        t * t
                    })
                    .sum::<f64>()
            })
            .collect();
        let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max + exps.iter().map(|e| (e - max).exp()).sum::<f64>().ln() - norm
    }

    /// Mean log density over the rows of `test` (columns matched by name).
    pub fn test_log_likelihood(&self, test: &Dataset) -> Result<f64> {
        let t = test.select_columns(&self.names)?;
        if t.n_rows() == 0 {
            return Err(Error::InsufficientData("empty test set".into()));
        }
        Ok(t.rows().map(|r| self.log_density(&r)).sum::<f64>() / t.n_rows() as f64)
    }
}
