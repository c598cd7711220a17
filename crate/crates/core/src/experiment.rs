//! Experiment harnesses: density-estimation benchmarks (kernel vine vs
//! Gaussian-copula vine vs multivariate KDE) and regression adaptation runs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::adapt::{adapt_vine, AdaptMode, AdaptationInput, AdaptationReport};
use crate::baseline::MultivariateKde;
use crate::bicopula::CopulaFamily;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mmd::MmdConfig;
use crate::regress::{default_grid, evaluate, DEFAULT_GRID_POINTS};
use crate::rvine::{fit_vine, VineConfig};
use crate::synth::RegressionSpec;

/// Seed of repetition `rep`, independent of scheduling order.
pub fn repetition_seed(master: u64, rep: u64) -> u64 {
    let mut z = master ^ rep.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub train_fraction: f64,
    pub target_labeled_fraction: f64,
    pub repetitions: usize,
    pub truncation: usize,
    pub mmd: MmdConfig,
    pub grid_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_samples: 1000,
            train_fraction: 0.3,
            target_labeled_fraction: 0.05,
            repetitions: 50,
            truncation: 1,
            mmd: MmdConfig::default(),
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("train fraction", self.train_fraction),
            ("labeled fraction", self.target_labeled_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {f}")));
            }
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.truncation == 0 {
            return Err(Error::Config("truncation must be at least 1".into()));
        }
        self.mmd.validate()
    }
}

/// Random train/test split with `round(fraction · n)` training rows.
pub fn train_test_split(data: &Dataset, fraction: f64, rng: &mut ChaCha8Rng) -> (Dataset, Dataset) {
    let n = data.n_rows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let k = ((fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let (train, test) = idx.split_at(k);
    (data.select_rows(train), data.select_rows(test))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityScores {
    pub nprv: f64,
    pub grv: f64,
    pub kde: f64,
}

/// One density-benchmark repetition on a train/test split.
pub fn density_scores(train: &Dataset, test: &Dataset, truncation: usize) -> Result<DensityScores> {
    let tll = |family| -> Result<f64> {
        let vine = fit_vine(train, &VineConfig { truncation, family })?;
        crate::regress::test_log_likelihood(&vine, test)
    };
    Ok(DensityScores {
        nprv: tll(CopulaFamily::Kernel)?,
        grv: tll(CopulaFamily::Gaussian)?,
        kde: MultivariateKde::fit(train)?.test_log_likelihood(test)?,
    })
}

/// Density benchmark over repeated random splits of `data`.
pub fn density_bench(data: &Dataset, config: &ExperimentConfig) -> Result<Vec<DensityScores>> {
    config.validate()?;
    (0..config.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(repetition_seed(config.seed, rep as u64));
            let (train, test) = train_test_split(data, config.train_fraction, &mut rng);
            density_scores(&train, &test, config.truncation)
        })
        .collect()
}

/// Density benchmark where every repetition draws a fresh sample.
pub fn density_bench_generated(
    generate: impl Fn(&mut ChaCha8Rng) -> Result<Dataset> + Sync,
    config: &ExperimentConfig,
) -> Result<Vec<DensityScores>> {
    config.validate()?;
    (0..config.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(repetition_seed(config.seed, rep as u64));
            let data = generate(&mut rng)?;
            let (train, test) = train_test_split(&data, config.train_fraction, &mut rng);
            density_scores(&train, &test, config.truncation)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AdaptationRun {
    pub nmse_source: f64,
    pub nmse_adapted: f64,
    pub nmse_unsupervised: f64,
    pub report: AdaptationReport,
    pub report_unsupervised: AdaptationReport,
}

/// Shifted-regression task: fit on a source sample, adapt with a partly
/// labeled target sample, and score on a fresh target test set.
pub fn regression_adaptation_run(
    spec: &RegressionSpec,
    n_test: usize,
    config: &ExperimentConfig,
    rep: u64,
) -> Result<AdaptationRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(repetition_seed(config.seed, rep));
    let n = config.n_samples;
    let source = spec.sample(n, false, &mut rng)?;
    let target = spec.sample(n, true, &mut rng)?;
    let test = spec.sample(n_test, true, &mut rng)?;
    let n_lab = ((config.target_labeled_fraction * n as f64).round() as usize).max(1);
    let labeled = target.select_rows(&(0..n_lab).collect::<Vec<_>>());
    let y_name = source.names().last().expect("regression data has columns").clone();
    let unlabeled = target
        .select_rows(&(n_lab..n).collect::<Vec<_>>())
        .drop_column(&y_name);
    let y = source.n_cols() - 1;

    let mut vine = fit_vine(
        &source,
        &VineConfig {
            truncation: config.truncation,
            ..Default::default()
        },
    )?;
    vine.set_target(Some(y))?;
    let mmd = MmdConfig {
        seed: repetition_seed(config.seed, rep) ^ 0x5eed,
        ..config.mmd
    };
    let input = |mode| AdaptationInput {
        source: source.clone(),
        target_labeled: labeled.clone(),
        target_unlabeled: unlabeled.clone(),
        target_index: y,
        mode,
        mmd,
    };
    let (semi, report) = adapt_vine(&vine, &input(AdaptMode::SemiSupervised))?;
    let (unsup, report_unsupervised) = adapt_vine(&vine, &input(AdaptMode::Unsupervised))?;
    let score = |m: &crate::rvine::VineModel| -> Result<f64> {
        let grid = default_grid(m, config.grid_points)?;
        Ok(evaluate(m, &test, &grid)?.nmse)
    };
    Ok(AdaptationRun {
        nmse_source: score(&vine)?,
        nmse_adapted: score(&semi)?,
        nmse_unsupervised: score(&unsup)?,
        report,
        report_unsupervised,
    })
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, sd)
}
