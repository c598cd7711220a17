//! Synthetic data generators. Every generator draws from the caller's RNG so
//! a seeded `ChaCha8Rng` gives reproducible tables.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats::std_normal_cdf;

/// Marginal distribution applied to a standard normal latent variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    Uniform { low: f64, high: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl Marginal {
    pub const STANDARD_NORMAL: Marginal = Marginal::Normal { mean: 0.0, sd: 1.0 };

    /// `F⁻¹(Φ(z))`.
    pub fn from_latent(self, z: f64) -> f64 {
        match self {
            Marginal::Normal { mean, sd } => mean + sd * z,
            // -ln(1 - Φ(z)) computed through Φ(-z) to keep the upper tail.
            Marginal::Exponential { rate } => -std_normal_cdf(-z).ln() / rate,
            Marginal::Uniform { low, high } => low + (high - low) * std_normal_cdf(z),
            Marginal::LogNormal { mu, sigma } => (mu + sigma * z).exp(),
        }
    }

    /// Parses `normal`, `normal(m,s)`, `exponential(rate)`, `uniform(a,b)`,
    /// `lognormal(mu,sigma)`; parameters default to the standard forms.
    pub fn parse(text: &str) -> Result<Marginal> {
        let text = text.trim();
        let (name, args) = match text.find('(') {
            Some(i) if text.ends_with(')') => (&text[..i], &text[i + 1..text.len() - 1]),
            Some(_) => return Err(Error::Parse(format!("malformed marginal `{text}`"))),
            None => (text, ""),
        };
        let nums: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number in `{text}`"))))
                .collect::<Result<_>>()?
        };
        let get = |i: usize, default: f64| nums.get(i).copied().unwrap_or(default);
        let m = match name.trim().to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Marginal::Normal { mean: get(0, 0.0), sd: get(1, 1.0) },
            "exponential" | "exp" => Marginal::Exponential { rate: get(0, 1.0) },
            "uniform" => Marginal::Uniform { low: get(0, 0.0), high: get(1, 1.0) },
            "lognormal" => Marginal::LogNormal { mu: get(0, 0.0), sigma: get(1, 1.0) },
            other => return Err(Error::Parse(format!("unknown marginal `{other}`"))),
        };
        let ok = match m {
            Marginal::Normal { sd, .. } => sd > 0.0,
            Marginal::Exponential { rate } => rate > 0.0,
            Marginal::Uniform { low, high } => low < high,
            Marginal::LogNormal { sigma, .. } => sigma > 0.0,
        };
        if !ok || nums.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("invalid parameters in `{text}`")));
        }
        Ok(m)
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Latent AR(1) chain `z_k = ρ z_{k-1} + √(1-ρ²) ε_k`: a Gaussian copula
/// whose first vine tree is the path 1–2–…–d.
fn latent_chain<R: Rng + ?Sized>(n: usize, d: usize, rho: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let s = (1.0 - rho * rho).sqrt();
    let mut cols = vec![Vec::with_capacity(n); d];
    for _ in 0..n {
        let mut z = normal(rng);
        for (k, col) in cols.iter_mut().enumerate() {
            if k > 0 {
                z = rho * z + s * normal(rng);
            }
            col.push(z);
        }
    }
    cols
}

/// Gaussian-copula chain with correlation `rho` between neighbours. A single
/// marginal is used for every column; otherwise one per column.
pub fn gaussian_copula_chain<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    rho: f64,
    marginals: &[Marginal],
    rng: &mut R,
) -> Result<Dataset> {
    if d == 0 {
        return Err(Error::Config("dimension must be positive".into()));
    }
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::Config(format!("rho must lie in (-1, 1), got {rho}")));
    }
    if !(marginals.len() == 1 || marginals.len() == d) {
        return Err(Error::Config(format!("{} marginals for {d} columns", marginals.len())));
    }
    let cols = latent_chain(n, d, rho, rng)
        .into_iter()
        .enumerate()
        .map(|(k, z)| {
            let m = marginals[if marginals.len() == 1 { 0 } else { k }];
            z.into_iter().map(|v| m.from_latent(v)).collect()
        })
        .collect();
    Dataset::with_default_names(cols)
}

/// Chain with two-band (bimodal) neighbour dependence:
/// `x_k = a x_{k-1} + b B_k + σ ε_k` with a random sign `B_k = ±1`. Each
/// conditional `x_k | x_{k-1}` is bimodal, which a Gaussian copula cannot
/// represent, while the rank correlation stays clearly positive.
pub fn bimodal_chain<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Dataset> {
    const A: f64 = 0.5;
    const B: f64 = 0.8;
    let sigma = (1.0 - A * A - B * B).sqrt();
    const BURN_IN: usize = 20;
    if d == 0 {
        return Err(Error::Config("dimension must be positive".into()));
    }
    let mut cols = vec![Vec::with_capacity(n); d];
    for _ in 0..n {
        let step = |x: f64, rng: &mut R| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            A * x + B * sign + sigma * normal(rng)
        };
        let mut x = normal(rng);
        for _ in 0..BURN_IN {
            x = step(x, rng);
        }
        for (k, col) in cols.iter_mut().enumerate() {
            if k > 0 {
                x = step(x, rng);
            }
            col.push(x);
        }
    }
    Dataset::with_default_names(cols)
}

/// Regression task: features `x1..x{d-1}` follow a latent Gaussian AR(1)
/// chain with correlation `rho`, and the target `y` is the latent
/// `√(1-noise²) z_{d-1} + noise·ε`. Listed features may be shifted by the
/// monotone map `loc + scale·z`, which changes their marginals but not the
/// copula.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSpec {
    /// Total number of columns including the target.
    pub d: usize,
    pub noise: f64,
    pub rho: f64,
    /// 0-based feature indices whose marginal is shifted.
    pub shifted: Vec<usize>,
    pub shift_loc: f64,
    pub shift_scale: f64,
}

impl RegressionSpec {
    pub fn new(d: usize, noise: f64) -> Self {
        Self {
            d,
            noise,
            rho: 0.7,
            shifted: Vec::new(),
            shift_loc: 2.0,
            shift_scale: 1.5,
        }
    }

    /// The default shifted variant: the feature adjacent to `y` and one
    /// further up the chain.
    pub fn default_shift(mut self) -> Self {
        let last = self.d.saturating_sub(2);
        self.shifted = vec![last / 3, last];
        self.shifted.dedup();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Config("regression data needs at least 2 columns".into()));
        }
        if !(self.noise > 0.0 && self.noise < 1.0) {
            return Err(Error::Config(format!("noise must lie in (0, 1), got {}", self.noise)));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::Config(format!("rho must lie in (-1, 1), got {}", self.rho)));
        }
        if self.shifted.iter().any(|&j| j + 1 >= self.d) {
            return Err(Error::Config("shifted indices must refer to features".into()));
        }
        if !(self.shift_scale > 0.0) {
            return Err(Error::Config("shift scale must be positive".into()));
        }
        Ok(())
    }

    /// Samples `n` rows; `shifted_domain` applies the marginal shift.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, shifted_domain: bool, rng: &mut R) -> Result<Dataset> {
        self.validate()?;
        let p = self.d - 1;
        let mut cols = latent_chain(n, p, self.rho, rng);
        let s = (1.0 - self.noise * self.noise).sqrt();
        let y: Vec<f64> = cols[p - 1].iter().map(|z| s * z + self.noise * normal(rng)).collect();
        if shifted_domain {
            for &j in &self.shifted {
                for v in &mut cols[j] {
                    *v = self.shift_loc + self.shift_scale * *v;
                }
            }
        }
        cols.push(y);
        let mut names: Vec<String> = (1..=p).map(|i| format!("x{i}")).collect();
        names.push("y".into());
        Dataset::new(names, cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::kendall_tau;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chain_tau_matches_rho() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = gaussian_copula_chain(2000, 2, 0.8, &[Marginal::Exponential { rate: 2.0 }], &mut rng).unwrap();
        let t = kendall_tau(d.column(0), d.column(1)).unwrap();
        let expected = 2.0 / std::f64::consts::PI * 0.8f64.asin();
        assert!((t - expected).abs() < 0.04, "{t}");
        assert!(d.column(0).iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn marginal_parsing() {
        assert_eq!(Marginal::parse("normal").unwrap(), Marginal::STANDARD_NORMAL);
        assert_eq!(Marginal::parse("uniform(1, 3)").unwrap(), Marginal::Uniform { low: 1.0, high: 3.0 });
        assert!(Marginal::parse("exponential(-1)").is_err());
        assert!(Marginal::parse("cauchy").is_err());
    }

    #[test]
    fn regression_shift_only_moves_listed_columns() {
        let spec = RegressionSpec::new(5, 0.3).default_shift();
        let a = spec.sample(10, false, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = spec.sample(10, true, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        for j in 0..5 {
            let same = a.column(j) == b.column(j);
            assert_eq!(same, !spec.shifted.contains(&j), "column {j}");
        }
        assert_eq!(a.names().last().unwrap(), "y");
    }
}
