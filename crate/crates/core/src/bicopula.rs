//! Bivariate copula estimators.
//!
//! The kernel copula estimates the copula density in Gaussian space: pseudo
//! observations `(u_i, v_i)` are mapped to `(z_i, w_i) = (Φ⁻¹(u_i), Φ⁻¹(v_i))`,
//! a bivariate Gaussian mixture with bandwidth matrix
//! `Σ = [[σ_z², γ], [γ, σ_w²]]` is placed on them, and the result is divided
//! by the standard normal marginal densities. Conditional cdfs (h-functions)
//! have a closed form as a weighted sum of normal cdfs.
//!
//! Argument order convention: `h_given_second(u, v) = P(U ≤ u | V = v)` and
//! `h_given_first(u, v) = P(V ≤ v | U = u)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{kendall_tau, probit, silverman_bandwidth, std_normal_cdf};

/// Evaluation-time clamp applied to copula arguments.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-10;
const GAUSSIAN_RHO_LIMIT: f64 = 0.999;

pub(crate) fn clamp_unit(x: f64, eps: f64) -> f64 {
    x.clamp(eps, 1.0 - eps)
}

fn check_unit_interval(name: &str, xs: &[f64]) -> Result<()> {
    if let Some(bad) = xs.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(Error::Domain(format!(
            "{name} must lie strictly inside (0,1), found {bad}"
        )));
    }
    Ok(())
}

fn check_pair(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::Schema(format!(
            "copula sample lengths differ: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    if u.len() < 2 {
        return Err(Error::InsufficientData(
            "copula fit needs at least 2 observations".into(),
        ));
    }
    Ok(())
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Gaussian-transform kernel copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCopula {
    z_centers: Vec<f64>,
    w_centers: Vec<f64>,
    sigma_z: f64,
    sigma_w: f64,
    /// Off-diagonal entry of the bandwidth matrix (a covariance).
    gamma: f64,
}

impl KernelCopula {
    pub fn new(
        z_centers: Vec<f64>,
        w_centers: Vec<f64>,
        sigma_z: f64,
        sigma_w: f64,
        gamma: f64,
    ) -> Result<Self> {
        if z_centers.len() != w_centers.len() || z_centers.is_empty() {
            return Err(Error::Domain(
                "kernel copula needs equally many (>= 1) z and w centers".into(),
            ));
        }
        if !(sigma_z > 0.0 && sigma_w > 0.0) || !sigma_z.is_finite() || !sigma_w.is_finite() {
            return Err(Error::Domain("kernel copula bandwidths must be positive".into()));
        }
        if !gamma.is_finite() || gamma * gamma >= sigma_z * sigma_z * sigma_w * sigma_w {
            return Err(Error::Domain(format!(
                "bandwidth matrix is not positive definite (gamma = {gamma})"
            )));
        }
        if z_centers.iter().chain(&w_centers).any(|c| !c.is_finite()) {
            return Err(Error::Domain("kernel copula centers must be finite".into()));
        }
        Ok(Self {
            z_centers,
            w_centers,
            sigma_z,
            sigma_w,
            gamma,
        })
    }

    /// Fits to pseudo-observations with Silverman bandwidths (dim 2) on each
    /// Gaussian-space coordinate and a diagonal bandwidth matrix.
    pub fn fit(u: &[f64], v: &[f64]) -> Result<Self> {
        check_pair(u, v)?;
        check_unit_interval("u", u)?;
        check_unit_interval("v", v)?;
        let z: Vec<f64> = u.iter().map(|&p| probit(p)).collect();
        let w: Vec<f64> = v.iter().map(|&p| probit(p)).collect();
        let sigma_z = silverman_bandwidth(&z, 2)?;
        let sigma_w = silverman_bandwidth(&w, 2)?;
        Self::new(z, w, sigma_z, sigma_w, 0.0)
    }

    pub fn z_centers(&self) -> &[f64] {
        &self.z_centers
    }

    pub fn w_centers(&self) -> &[f64] {
        &self.w_centers
    }

    pub fn sigma_z(&self) -> f64 {
        self.sigma_z
    }

    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.z_centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_centers.is_empty()
    }

    /// Copula density; the arguments must lie strictly inside (0,1).
    pub fn density(&self, u: f64, v: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
            return Err(Error::Domain(format!(
                "copula density needs (u,v) in (0,1)^2, got ({u}, {v})"
            )));
        }
        Ok(self.log_density_gaussian_space(probit(u), probit(v)).exp())
    }

    /// Log density with arguments clamped to `[ε, 1-ε]`.
    pub fn log_density(&self, u: f64, v: f64) -> f64 {
        let z = probit(clamp_unit(u, DEFAULT_CLAMP_EPS));
        let w = probit(clamp_unit(v, DEFAULT_CLAMP_EPS));
        self.log_density_gaussian_space(z, w)
    }

    pub(crate) fn log_density_gaussian_space(&self, z: f64, w: f64) -> f64 {
        let (sz2, sw2, g) = (self.sigma_z * self.sigma_z, self.sigma_w * self.sigma_w, self.gamma);
        let det = sz2 * sw2 - g * g;
        let terms = self.z_centers.iter().zip(&self.w_centers).map(move |(zi, wi)| {
            let dz = z - zi;
            let dw = w - wi;
            -0.5 * (sw2 * dz * dz - 2.0 * g * dz * dw + sz2 * dw * dw) / det
        });
        log_sum_exp(terms) - (self.len() as f64).ln() - 0.5 * det.ln() + 0.5 * (z * z + w * w)
    }

    /// `P(U ≤ u | V = v)`, normalized so that it reaches 1 as `u → 1`.
    pub fn h_given_second(&self, u: f64, v: f64) -> f64 {
        self.h_given_second_eps(u, v, DEFAULT_CLAMP_EPS)
    }

    pub fn h_given_second_eps(&self, u: f64, v: f64, eps: f64) -> f64 {
        if u >= 1.0 {
            return 1.0;
        }
        if u <= 0.0 {
            return 0.0;
        }
        let z = probit(clamp_unit(u, eps));
        let w = probit(clamp_unit(v, eps));
        conditional_cdf(
            z,
            w,
            &self.z_centers,
            &self.w_centers,
            self.sigma_z,
            self.sigma_w,
            self.gamma,
        )
    }

    /// `P(V ≤ v | U = u)`.
    pub fn h_given_first(&self, u: f64, v: f64) -> f64 {
        self.h_given_first_eps(u, v, DEFAULT_CLAMP_EPS)
    }

    pub fn h_given_first_eps(&self, u: f64, v: f64, eps: f64) -> f64 {
        if v >= 1.0 {
            return 1.0;
        }
        if v <= 0.0 {
            return 0.0;
        }
        let z = probit(clamp_unit(u, eps));
        let w = probit(clamp_unit(v, eps));
        conditional_cdf(
            w,
            z,
            &self.w_centers,
            &self.z_centers,
            self.sigma_w,
            self.sigma_z,
            self.gamma,
        )
    }

    /// Solves `h_given_second(u, v) = p` for `u` by bisection.
    pub fn h_inverse_given_second(&self, p: f64, v: f64) -> f64 {
        bisect_unit(p, |u| self.h_given_second(u, v))
    }
}

// P(A ≤ a | B = b) for the Gaussian-space mixture with centers (a_i, b_i):
// sum_i N(b | b_i, σ_b²) Φ((a - μ_i) / s) / sum_i N(b | b_i, σ_b²), with the
// conditional mean μ_i = a_i + (γ / σ_b²)(b - b_i) and s² = σ_a² - γ² / σ_b².
fn conditional_cdf(
    a: f64,
    b: f64,
    a_centers: &[f64],
    b_centers: &[f64],
    sigma_a: f64,
    sigma_b: f64,
    gamma: f64,
) -> f64 {
    let sb2 = sigma_b * sigma_b;
    let slope = gamma / sb2;
    let s = (sigma_a * sigma_a - gamma * gamma / sb2).sqrt();
    let exponents = b_centers.iter().map(|bi| -0.5 * (b - bi) * (b - bi) / sb2);
    let max = exponents.clone().fold(f64::NEG_INFINITY, f64::max);
    let mut num = 0.0;
    let mut den = 0.0;
    for ((ai, bi), e) in a_centers.iter().zip(b_centers).zip(exponents) {
        let weight = (e - max).exp();
        let mu = ai + slope * (b - bi);
        num += weight * std_normal_cdf((a - mu) / s);
        den += weight;
    }
    (num / den).clamp(0.0, 1.0)
}

fn bisect_unit(p: f64, h: impl Fn(f64) -> f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Bivariate Gaussian copula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianCopula {
    rho: f64,
}

impl GaussianCopula {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::Domain(format!("Gaussian copula needs |rho| < 1, got {rho}")));
        }
        Ok(Self { rho })
    }

    /// Inverts Kendall's tau: `ρ = sin(π τ / 2)`, clamped to ±0.999.
    pub fn fit(u: &[f64], v: &[f64]) -> Result<Self> {
        check_pair(u, v)?;
        let tau = kendall_tau(u, v)?;
        let rho = (0.5 * PI * tau).sin().clamp(-GAUSSIAN_RHO_LIMIT, GAUSSIAN_RHO_LIMIT);
        Self::new(rho)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn density(&self, u: f64, v: f64) -> f64 {
        self.log_density(u, v).exp()
    }

    pub fn log_density(&self, u: f64, v: f64) -> f64 {
        let z = probit(clamp_unit(u, DEFAULT_CLAMP_EPS));
        let w = probit(clamp_unit(v, DEFAULT_CLAMP_EPS));
        let r = self.rho;
        let one_minus = 1.0 - r * r;
        -0.5 * one_minus.ln() - (r * r * (z * z + w * w) - 2.0 * r * z * w) / (2.0 * one_minus)
    }

    pub fn h_given_second(&self, u: f64, v: f64) -> f64 {
        if u >= 1.0 {
            return 1.0;
        }
        if u <= 0.0 {
            return 0.0;
        }
        let z = probit(clamp_unit(u, DEFAULT_CLAMP_EPS));
        let w = probit(clamp_unit(v, DEFAULT_CLAMP_EPS));
        std_normal_cdf((z - self.rho * w) / (1.0 - self.rho * self.rho).sqrt())
    }

    pub fn h_given_first(&self, u: f64, v: f64) -> f64 {
        self.h_given_second(v, u)
    }

    pub fn h_inverse_given_second(&self, p: f64, v: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            return p.clamp(0.0, 1.0);
        }
        let w = probit(clamp_unit(v, DEFAULT_CLAMP_EPS));
        std_normal_cdf(probit(p) * (1.0 - self.rho * self.rho).sqrt() + self.rho * w)
    }
}

/// Copula attached to a vine edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairCopula {
    Kernel(KernelCopula),
    Gaussian(GaussianCopula),
    Independence,
}

impl PairCopula {
    pub fn log_density(&self, u: f64, v: f64) -> f64 {
        match self {
            PairCopula::Kernel(c) => c.log_density(u, v),
            PairCopula::Gaussian(c) => c.log_density(u, v),
            PairCopula::Independence => 0.0,
        }
    }

    pub fn density(&self, u: f64, v: f64) -> f64 {
        self.log_density(u, v).exp()
    }

    pub fn h_given_second(&self, u: f64, v: f64) -> f64 {
        match self {
            PairCopula::Kernel(c) => c.h_given_second(u, v),
            PairCopula::Gaussian(c) => c.h_given_second(u, v),
            PairCopula::Independence => u.clamp(0.0, 1.0),
        }
    }

    pub fn h_given_first(&self, u: f64, v: f64) -> f64 {
        match self {
            PairCopula::Kernel(c) => c.h_given_first(u, v),
            PairCopula::Gaussian(c) => c.h_given_first(u, v),
            PairCopula::Independence => v.clamp(0.0, 1.0),
        }
    }

    pub fn h_inverse_given_second(&self, p: f64, v: f64) -> f64 {
        match self {
            PairCopula::Kernel(c) => c.h_inverse_given_second(p, v),
            PairCopula::Gaussian(c) => c.h_inverse_given_second(p, v),
            PairCopula::Independence => p.clamp(0.0, 1.0),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PairCopula::Kernel(_) => "kernel",
            PairCopula::Gaussian(_) => "gaussian",
            PairCopula::Independence => "independence",
        }
    }
}

/// Which estimator to attach to fitted vine edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopulaFamily {
    #[default]
    Kernel,
    Gaussian,
}

impl CopulaFamily {
    pub fn fit(self, u: &[f64], v: &[f64]) -> Result<PairCopula> {
        Ok(match self {
            CopulaFamily::Kernel => PairCopula::Kernel(KernelCopula::fit(u, v)?),
            CopulaFamily::Gaussian => PairCopula::Gaussian(GaussianCopula::fit(u, v)?),
        })
    }
}
