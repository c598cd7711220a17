//! Domain adaptation of a fitted vine: test every factor for a change between
//! source and target samples, re-estimate changed factors on target data and
//! pool source and target data for the rest. The tree structure is kept.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bicopula::PairCopula;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mmd::{permutation_test, MmdConfig, SampleMatrix, TestResult};
use crate::rvine::{VineModel, MIN_FIT_ROWS};
use crate::stats::GaussianKernel1D;

/// Fewest rows per sample for a factor to be tested at all.
pub const MIN_TEST_ROWS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptMode {
    /// Labeled target rows only.
    #[default]
    Supervised,
    /// Labeled rows for factors involving the target, labeled and unlabeled
    /// rows for the rest.
    SemiSupervised,
    /// Target labels are never read; factors involving the target are kept.
    Unsupervised,
}

#[derive(Debug, Clone)]
pub struct AdaptationInput {
    pub source: Dataset,
    /// May have zero rows (and columns) in unsupervised mode.
    pub target_labeled: Dataset,
    /// Feature columns; a target column, if present, is ignored.
    pub target_unlabeled: Dataset,
    pub target_index: usize,
    pub mode: AdaptMode,
    pub mmd: MmdConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FactorId {
    Marginal {
        index: usize,
    },
    Edge {
        /// 1-based tree level.
        level: usize,
        conditioned: (usize, usize),
        conditioning: Vec<usize>,
    },
}

impl FactorId {
    pub fn is_marginal(&self) -> bool {
        matches!(self, FactorId::Marginal { .. })
    }

    fn involves(&self, var: usize) -> bool {
        match self {
            FactorId::Marginal { index } => *index == var,
            FactorId::Edge { conditioned, conditioning, .. } => {
                conditioned.0 == var || conditioned.1 == var || conditioning.contains(&var)
            }
        }
    }

    pub fn label(&self, names: &[String]) -> String {
        match self {
            FactorId::Marginal { index } => names[*index].clone(),
            FactorId::Edge { conditioned, conditioning, .. } => {
                let mut s = format!("{},{}", names[conditioned.0], names[conditioned.1]);
                if !conditioning.is_empty() {
                    let d: Vec<&str> = conditioning.iter().map(|&i| names[i].as_str()).collect();
                    s.push('|');
                    s.push_str(&d.join(","));
                }
                s
            }
        }
    }

    /// Seed for this factor's test, derived from the master seed by a fixed
    /// hash of the factor id so it does not depend on evaluation order.
    pub fn seed(&self, master: u64) -> u64 {
        // FNV-1a over a fixed word encoding, finished with splitmix64.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |w: u64| {
            for b in w.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        match self {
            FactorId::Marginal { index } => {
                eat(0);
                eat(*index as u64);
            }
            FactorId::Edge { level, conditioned, conditioning } => {
                eat(1);
                eat(*level as u64);
                eat(conditioned.0 as u64);
                eat(conditioned.1 as u64);
                for &c in conditioning {
                    eat(c as u64);
                }
            }
        }
        let mut z = master ^ h;
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefitFrom {
    TargetOnly,
    Pooled,
    /// Kept from the source model (untested factors in unsupervised mode).
    SourceOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDecision {
    pub factor: FactorId,
    pub label: String,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub changed: bool,
    pub refit_from: RefitFrom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationReport {
    pub decisions: Vec<FactorDecision>,
    pub n_changed_marginals: usize,
    pub n_changed_copulas: usize,
    pub warnings: Vec<String>,
}

impl AdaptationReport {
    pub fn changed(&self) -> impl Iterator<Item = &FactorDecision> {
        self.decisions.iter().filter(|d| d.changed)
    }
}

/// Per-factor comparison sample: the raw column for a marginal, the pair of
/// copula arguments for an edge.
pub fn factor_samples(vine: &VineModel, data: &Dataset, factor: &FactorId) -> Result<SampleMatrix> {
    match factor {
        FactorId::Marginal { index } => {
            let name = vine
                .names()
                .get(*index)
                .ok_or_else(|| Error::Structural(format!("no marginal {index}")))?;
            let col = data
                .column_by_name(name)
                .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))?;
            Ok(SampleMatrix::from_column(col))
        }
        FactorId::Edge { level, conditioned, conditioning } => {
            let e = find_edge(vine, *level, *conditioned, conditioning)?;
            let u = domain_pseudo(vine, data, None)?;
            let (a, b) = vine
                .level_arguments(level - 1, &u)
                .into_iter()
                .nth(e)
                .expect("edge index from find_edge");
            SampleMatrix::from_columns(&[&a, &b])
        }
    }
}

fn find_edge(vine: &VineModel, level: usize, conditioned: (usize, usize), conditioning: &[usize]) -> Result<usize> {
    let mut d = conditioning.to_vec();
    d.sort_unstable();
    level
        .checked_sub(1)
        .and_then(|l| vine.trees().get(l))
        .and_then(|t| {
            t.edges
                .iter()
                .position(|e| e.conditioned == conditioned && e.conditioning == d)
        })
        .ok_or_else(|| Error::Structural(format!("no edge {conditioned:?}|{conditioning:?} in tree {level}")))
}

/// Marginal pseudo-observations of `data` under `vine`. The column `skip`
/// may be absent and is then filled with 0.5; it must not be needed by the
/// factors evaluated on the result.
fn domain_pseudo(vine: &VineModel, data: &Dataset, skip: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let n = data.n_rows();
    vine.names()
        .iter()
        .enumerate()
        .map(|(j, name)| match data.column_by_name(name) {
            Some(col) => Ok(vine.marginal(j).cdf_many(col)),
            None if skip == Some(j) => Ok(vec![0.5; n]),
            None => Err(Error::Schema(format!("missing column `{name}`"))),
        })
        .collect()
}

fn empty_like(names: &[String]) -> Dataset {
    Dataset::new(names.to_vec(), vec![Vec::new(); names.len()]).expect("valid empty dataset")
}

fn check_schema(vine: &VineModel, input: &AdaptationInput) -> Result<()> {
    let names = vine.names();
    if input.target_index >= names.len() {
        return Err(Error::Config(format!("target index {} out of range", input.target_index)));
    }
    for n in names {
        if input.source.index_of(n).is_none() {
            return Err(Error::Schema(format!("source data lacks column `{n}`")));
        }
    }
    let y = &names[input.target_index];
    if input.mode != AdaptMode::Unsupervised && input.target_labeled.n_rows() == 0 {
        return Err(Error::Config("labeled target rows are required unless the mode is unsupervised".into()));
    }
    for (j, n) in names.iter().enumerate() {
        let needed_labeled = input.target_labeled.n_rows() > 0
            && (j != input.target_index || input.mode != AdaptMode::Unsupervised);
        if needed_labeled && input.target_labeled.index_of(n).is_none() {
            return Err(Error::Schema(format!("labeled target data lacks column `{n}`")));
        }
        if n != y && input.target_unlabeled.n_rows() > 0 && input.target_unlabeled.index_of(n).is_none() {
            return Err(Error::Schema(format!("unlabeled target data lacks column `{n}`")));
        }
    }
    Ok(())
}

struct Domains {
    /// Target rows used for factors without the target variable.
    features: Dataset,
    /// Target rows used for factors with the target variable.
    labeled: Dataset,
}

fn target_domains(vine: &VineModel, input: &AdaptationInput) -> Result<Domains> {
    let names = vine.names();
    let y = input.target_index;
    let feature_names: Vec<String> = names
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != y)
        .map(|(_, n)| n.clone())
        .collect();
    let lab_x = if input.target_labeled.n_rows() > 0 {
        input.target_labeled.select_columns(&feature_names)?
    } else {
        empty_like(&feature_names)
    };
    let features = match input.mode {
        AdaptMode::Supervised => lab_x,
        _ if input.target_unlabeled.n_rows() > 0 => {
            lab_x.vstack(&input.target_unlabeled.select_columns(&feature_names)?)?
        }
        _ => lab_x,
    };
    let labeled = match input.mode {
        AdaptMode::Unsupervised => empty_like(names),
        _ => input.target_labeled.select_columns(names)?,
    };
    Ok(Domains { features, labeled })
}

fn run_test(x: &SampleMatrix, y: &SampleMatrix, cfg: &MmdConfig, factor: &FactorId) -> Result<TestResult> {
    let cfg = MmdConfig {
        seed: factor.seed(cfg.seed),
        ..*cfg
    };
    permutation_test(x, y, &cfg)
}

/// Adapts `source_vine` (fitted on `input.source`) to the target domain.
pub fn adapt_vine(source_vine: &VineModel, input: &AdaptationInput) -> Result<(VineModel, AdaptationReport)> {
    input.mmd.validate()?;
    check_schema(source_vine, input)?;
    let names = source_vine.names().to_vec();
    let d = names.len();
    let y = input.target_index;
    let source = input.source.select_columns(&names)?;
    let domains = target_domains(source_vine, input)?;
    let unsupervised = input.mode == AdaptMode::Unsupervised;

    let mut warnings = Vec::new();
    let mut decisions = Vec::new();
    // Model of the source domain after adaptation: changed factors keep their
    // source estimate, unchanged ones are shared with the adapted model.
    let mut source_side = source_vine.clone();
    let mut adapted = source_vine.clone();

    // Marginals.
    let marginal_target = |j: usize| -> &[f64] {
        if j == y {
            domains.labeled.column_by_name(&names[j]).unwrap_or(&[])
        } else {
            domains.features.column_by_name(&names[j]).unwrap_or(&[])
        }
    };
    let tests: Vec<Option<TestResult>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let factor = FactorId::Marginal { index: j };
            let t = marginal_target(j);
            if (unsupervised && j == y) || t.len() < MIN_TEST_ROWS {
                return Ok(None);
            }
            let s = SampleMatrix::from_column(source.column(j));
            run_test(&s, &SampleMatrix::from_column(t), &input.mmd, &factor).map(Some)
        })
        .collect::<Result<_>>()?;
    for (j, test) in tests.into_iter().enumerate() {
        let factor = FactorId::Marginal { index: j };
        let label = factor.label(&names);
        let t = marginal_target(j);
        let s = source.column(j);
        let Some(test) = test else {
            if unsupervised && j == y {
                decisions.push(untested(factor, label, RefitFrom::SourceOnly));
                continue;
            }
            let pooled: Vec<f64> = s.iter().chain(t).copied().collect();
            let m = fit_named(&pooled, &names[j])?;
            if !t.is_empty() {
                warnings.push(format!("{label}: {} target rows are too few to test; pooled", t.len()));
            }
            source_side.set_marginal(j, m.clone());
            adapted.set_marginal(j, m);
            decisions.push(untested(factor, label, RefitFrom::Pooled));
            continue;
        };
        let mut refit_from = RefitFrom::Pooled;
        if test.rejected && t.len() >= MIN_FIT_ROWS {
            adapted.set_marginal(j, fit_named(t, &names[j])?);
            refit_from = RefitFrom::TargetOnly;
        } else {
            if test.rejected {
                warnings.push(format!(
                    "{label}: changed but only {} target rows; refit from pooled data",
                    t.len()
                ));
            }
            let pooled: Vec<f64> = s.iter().chain(t).copied().collect();
            let m = fit_named(&pooled, &names[j])?;
            if !test.rejected {
                source_side.set_marginal(j, m.clone());
            }
            adapted.set_marginal(j, m);
        }
        decisions.push(FactorDecision {
            factor,
            label,
            statistic: Some(test.statistic),
            p_value: Some(test.p_value),
            changed: test.rejected,
            refit_from,
        });
    }

    // Copulas, tree by tree, so each level sees the adapted lower levels.
    let src_u = domain_pseudo(&source_side, &source, None)?;
    for level in 0..source_vine.trees().len() {
        let src_args = source_side.level_arguments(level, &src_u);
        let feat_u = domain_pseudo(&adapted, &domains.features, Some(y))?;
        let feat_args = adapted.level_arguments(level, &feat_u);
        let lab_args = if domains.labeled.n_rows() > 0 {
            let lab_u = domain_pseudo(&adapted, &domains.labeled, None)?;
            adapted.level_arguments(level, &lab_u)
        } else {
            vec![(Vec::new(), Vec::new()); src_args.len()]
        };
        let edges = &source_vine.trees()[level].edges;
        let factors: Vec<FactorId> = edges
            .iter()
            .map(|e| FactorId::Edge {
                level: level + 1,
                conditioned: e.conditioned,
                conditioning: e.conditioning.clone(),
            })
            .collect();
        let target_args = |e: usize| {
            if factors[e].involves(y) {
                &lab_args[e]
            } else {
                &feat_args[e]
            }
        };
        let tests: Vec<Option<TestResult>> = (0..edges.len())
            .into_par_iter()
            .map(|e| {
                let (ta, tb) = target_args(e);
                if (unsupervised && factors[e].involves(y)) || ta.len() < MIN_TEST_ROWS {
                    return Ok(None);
                }
                let (sa, sb) = &src_args[e];
                let s = SampleMatrix::from_columns(&[sa, sb])?;
                let t = SampleMatrix::from_columns(&[ta, tb])?;
                run_test(&s, &t, &input.mmd, &factors[e]).map(Some)
            })
            .collect::<Result<_>>()?;
        for (e, test) in tests.into_iter().enumerate() {
            let factor = factors[e].clone();
            let label = factor.label(&names);
            let like = &edges[e].copula;
            let (ta, tb) = target_args(e);
            let (sa, sb) = &src_args[e];
            let pooled = || -> Result<PairCopula> {
                let a: Vec<f64> = sa.iter().chain(ta).copied().collect();
                let b: Vec<f64> = sb.iter().chain(tb).copied().collect();
                crate::rvine::refit_like(like, &a, &b)
            };
            let Some(test) = test else {
                if unsupervised && factor.involves(y) {
                    decisions.push(untested(factor, label, RefitFrom::SourceOnly));
                    continue;
                }
                if !ta.is_empty() {
                    warnings.push(format!("{label}: {} target rows are too few to test; pooled", ta.len()));
                }
                let c = pooled()?;
                source_side.set_copula(level, e, c.clone());
                adapted.set_copula(level, e, c);
                decisions.push(untested(factor, label, RefitFrom::Pooled));
                continue;
            };
            let mut refit_from = RefitFrom::Pooled;
            if test.rejected && ta.len() >= MIN_FIT_ROWS {
                adapted.set_copula(level, e, crate::rvine::refit_like(like, ta, tb)?);
                refit_from = RefitFrom::TargetOnly;
            } else {
                if test.rejected {
                    warnings.push(format!(
                        "{label}: changed but only {} target rows; refit from pooled data",
                        ta.len()
                    ));
                }
                let c = pooled()?;
                if !test.rejected {
                    source_side.set_copula(level, e, c.clone());
                }
                adapted.set_copula(level, e, c);
            }
            decisions.push(FactorDecision {
                factor,
                label,
                statistic: Some(test.statistic),
                p_value: Some(test.p_value),
                changed: test.rejected,
                refit_from,
            });
        }
    }

    let n_changed_marginals = decisions.iter().filter(|d| d.changed && d.factor.is_marginal()).count();
    let n_changed_copulas = decisions.iter().filter(|d| d.changed && !d.factor.is_marginal()).count();
    for w in &warnings {
        log::warn!("{w}");
    }
    adapted.set_target(Some(y))?;
    Ok((
        adapted,
        AdaptationReport {
            decisions,
            n_changed_marginals,
            n_changed_copulas,
            warnings,
        },
    ))
}

fn untested(factor: FactorId, label: String, refit_from: RefitFrom) -> FactorDecision {
    FactorDecision {
        factor,
        label,
        statistic: None,
        p_value: None,
        changed: false,
        refit_from,
    }
}

fn fit_named(sample: &[f64], name: &str) -> Result<GaussianKernel1D> {
    GaussianKernel1D::fit(sample).map_err(|e| match e {
        Error::DegenerateSample { .. } => Error::degenerate(name.to_string()),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_seeds_are_stable_and_distinct() {
        let a = FactorId::Marginal { index: 2 };
        let b = FactorId::Edge {
            level: 1,
            conditioned: (0, 2),
            conditioning: vec![],
        };
        assert_eq!(a.seed(7), a.clone().seed(7));
        assert_ne!(a.seed(7), b.seed(7));
        assert_ne!(a.seed(7), a.seed(8));
    }

    #[test]
    fn labels() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let e = FactorId::Edge {
            level: 2,
            conditioned: (0, 2),
            conditioning: vec![1],
        };
        assert_eq!(e.label(&names), "a,c|b");
        assert_eq!(FactorId::Marginal { index: 1 }.label(&names), "b");
    }
}
