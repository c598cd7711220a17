//! Regular vines: structure selection by maximum spanning trees on |Kendall's
//! tau|, simplified pair-copula fitting, density evaluation and recursive
//! conditional cdfs.
//!
//! Variables are indexed from 0. An edge of tree `k` (1-based) carries the
//! conditioned pair `C(e) = {a, b}` with `a < b`, the conditioning set `D(e)`
//! of size `k - 1`, and a copula fitted to `(F(a | D), F(b | D))`. Its two
//! outputs are `F(a | D ∪ {b})` and `F(b | D ∪ {a})`, which feed tree `k + 1`.

mod mst;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use mst::{maximum_spanning_tree, maximum_spanning_tree_dense};

use crate::bicopula::{CopulaFamily, KernelCopula, PairCopula};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats::{kendall_tau, GaussianKernel1D};

/// Smallest training sample accepted by [`fit_vine`].
pub const MIN_FIT_ROWS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VineEdge {
    pub conditioned: (usize, usize),
    pub conditioning: Vec<usize>,
    /// Indices of the two joined edges of the previous tree (none in tree 1).
    pub children: Option<(usize, usize)>,
    /// |tau| at selection time.
    pub weight: f64,
    pub copula: PairCopula,
}

impl VineEdge {
    /// `N(e) = C(e) ∪ D(e)`, sorted.
    pub fn constraint(&self) -> Vec<usize> {
        let mut n = self.conditioning.clone();
        n.push(self.conditioned.0);
        n.push(self.conditioned.1);
        n.sort_unstable();
        n
    }

    pub fn involves(&self, var: usize) -> bool {
        self.conditioned.0 == var || self.conditioned.1 == var || self.conditioning.contains(&var)
    }

    fn output_slot(&self, var: usize) -> Option<usize> {
        if self.conditioned.0 == var {
            Some(0)
        } else if self.conditioned.1 == var {
            Some(1)
        } else {
            None
        }
    }

    /// `a,b|c,d` using the given variable names.
    pub fn label(&self, names: &[String]) -> String {
        let (a, b) = self.conditioned;
        let mut s = format!("{},{}", names[a], names[b]);
        if !self.conditioning.is_empty() {
            s.push('|');
            let d: Vec<&str> = self.conditioning.iter().map(|&i| names[i].as_str()).collect();
            s.push_str(&d.join(","));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VineTree {
    /// 1-based tree level.
    pub level: usize,
    pub edges: Vec<VineEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VineConfig {
    /// Number of fitted trees; deeper trees are independence copulas.
    pub truncation: usize,
    pub family: CopulaFamily,
}

impl Default for VineConfig {
    fn default() -> Self {
        Self {
            truncation: 1,
            family: CopulaFamily::Kernel,
        }
    }
}

/// Conditional cdf samples produced by one edge: `[F(a | N∖a), F(b | N∖b)]`.
pub type EdgeOutputs = [Vec<f64>; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct VineModel {
    names: Vec<String>,
    marginals: Vec<GaussianKernel1D>,
    trees: Vec<VineTree>,
    target: Option<usize>,
}

fn set_ops(a: &[usize], b: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let sym: Vec<usize> = a
        .iter()
        .filter(|x| !b.contains(x))
        .chain(b.iter().filter(|x| !a.contains(x)))
        .copied()
        .collect();
    let mut inter: Vec<usize> = a.iter().filter(|x| b.contains(x)).copied().collect();
    inter.sort_unstable();
    let mut sym = sym;
    sym.sort_unstable();
    (sym, inter)
}

/// Conditioned and conditioning sets of the edge joining `e1` and `e2`:
/// `C = N(e1) Δ N(e2)`, `D = N(e1) ∩ N(e2)`.
pub fn join_sets(e1: &VineEdge, e2: &VineEdge) -> (Vec<usize>, Vec<usize>) {
    set_ops(&e1.constraint(), &e2.constraint())
}

fn endpoints(tree_index: usize, e: &VineEdge) -> (usize, usize) {
    if tree_index == 0 {
        e.conditioned
    } else {
        e.children.expect("edges beyond tree 1 join two child edges")
    }
}

/// Where an edge's copula arguments come from: for `var`, the child edge and
/// output slot providing `F(var | D(e))`.
fn input_source(prev: &VineTree, e: &VineEdge, var: usize) -> (usize, usize) {
    let (c1, c2) = e.children.expect("edges beyond tree 1 join two child edges");
    let (p1, p2) = (&prev.edges[c1], &prev.edges[c2]);
    match (p1.output_slot(var), p2.output_slot(var)) {
        (Some(s), _) if !p2.involves(var) => (c1, s),
        (_, Some(s)) if !p1.involves(var) => (c2, s),
        _ => panic!("variable {var} is not in exactly one child's conditioned set"),
    }
}

fn edge_inputs<'a>(
    trees: &[VineTree],
    level: usize,
    e: usize,
    u: &'a [Vec<f64>],
    outputs: &'a [Vec<EdgeOutputs>],
) -> (&'a [f64], &'a [f64]) {
    let edge = &trees[level].edges[e];
    let (a, b) = edge.conditioned;
    if level == 0 {
        return (&u[a], &u[b]);
    }
    let prev = &trees[level - 1];
    let (ca, sa) = input_source(prev, edge, a);
    let (cb, sb) = input_source(prev, edge, b);
    (&outputs[level - 1][ca][sa], &outputs[level - 1][cb][sb])
}

fn copula_outputs(copula: &PairCopula, ua: &[f64], ub: &[f64]) -> EdgeOutputs {
    let first = ua.iter().zip(ub).map(|(&x, &y)| copula.h_given_second(x, y)).collect();
    let second = ua.iter().zip(ub).map(|(&x, &y)| copula.h_given_first(x, y)).collect();
    [first, second]
}

fn abs_tau(x: &[f64], y: &[f64]) -> f64 {
    kendall_tau(x, y).map(f64::abs).unwrap_or(0.0)
}

/// Tree 1: maximum spanning tree of the complete graph weighted by |tau|
/// of the pseudo-observation columns, with a copula fitted on every edge.
pub fn build_first_tree(pseudo: &[Vec<f64>], family: CopulaFamily) -> Result<VineTree> {
    let d = pseudo.len();
    if d < 2 {
        return Err(Error::InsufficientData("tree 1 needs at least 2 variables".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let taus: Vec<f64> = pairs.par_iter().map(|&(i, j)| abs_tau(&pseudo[i], &pseudo[j])).collect();
    let mut weights = vec![vec![0.0; d]; d];
    for (&(i, j), &t) in pairs.iter().zip(&taus) {
        weights[i][j] = t;
        weights[j][i] = t;
    }
    let selected = maximum_spanning_tree_dense(&weights)?;
    let edges = selected
        .into_par_iter()
        .map(|(a, b)| {
            Ok(VineEdge {
                conditioned: (a, b),
                conditioning: Vec::new(),
                children: None,
                weight: weights[a][b],
                copula: family.fit(&pseudo[a], &pseudo[b])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VineTree { level: 1, edges })
}

/// Tree `k + 1` from tree `k` (`tree_index = k - 1` in `trees`) and the
/// conditional samples produced by the edges of tree `k`.
pub fn build_next_tree(
    trees: &[VineTree],
    u: &[Vec<f64>],
    outputs: &[Vec<EdgeOutputs>],
    family: CopulaFamily,
) -> Result<VineTree> {
    let prev_index = trees.len() - 1;
    let prev = &trees[prev_index];
    let m = prev.edges.len();
    if m < 2 {
        return Err(Error::Structural("next tree needs at least 2 edges".into()));
    }
    let ends: Vec<(usize, usize)> = prev.edges.iter().map(|e| endpoints(prev_index, e)).collect();
    struct Candidate {
        conditioned: (usize, usize),
        conditioning: Vec<usize>,
        weight: f64,
    }
    let mut candidates: Vec<Vec<Option<Candidate>>> = (0..m).map(|_| (0..m).map(|_| None).collect()).collect();
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let (a, b) = (ends[i], ends[j]);
            if a.0 == b.0 || a.0 == b.1 || a.1 == b.0 || a.1 == b.1 {
                pairs.push((i, j));
            }
        }
    }
    let level = prev_index + 1;
    let built: Vec<Candidate> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (c, d) = join_sets(&prev.edges[i], &prev.edges[j]);
            debug_assert_eq!(c.len(), 2);
            let probe = VineEdge {
                conditioned: (c[0], c[1]),
                conditioning: d.clone(),
                children: Some((i, j)),
                weight: 0.0,
                copula: PairCopula::Independence,
            };
            let weight = {
                let scratch = [trees, std::slice::from_ref(&VineTree { level: level + 1, edges: vec![probe] })].concat();
                let (x, y) = edge_inputs(&scratch, level, 0, u, outputs);
                abs_tau(x, y)
            };
            Candidate {
                conditioned: (c[0], c[1]),
                conditioning: d,
                weight,
            }
        })
        .collect();
    for (&(i, j), cand) in pairs.iter().zip(built) {
        candidates[i][j] = Some(cand);
    }
    let selected = maximum_spanning_tree(
        m,
        |i, j| candidates[i][j].as_ref().map(|c| c.weight),
        |i, j| candidates[i][j].as_ref().map(|c| c.conditioned),
    )?;
    let mut tree = VineTree {
        level: level + 1,
        edges: selected
            .iter()
            .map(|&(i, j)| {
                let c = candidates[i][j].as_ref().expect("selected edge is a candidate");
                VineEdge {
                    conditioned: c.conditioned,
                    conditioning: c.conditioning.clone(),
                    children: Some((i, j)),
                    weight: c.weight,
                    copula: PairCopula::Independence,
                }
            })
            .collect(),
    };
    let scratch = [trees, std::slice::from_ref(&tree)].concat();
    let copulas = (0..tree.edges.len())
        .into_par_iter()
        .map(|e| {
            let (x, y) = edge_inputs(&scratch, level, e, u, outputs);
            family.fit(x, y)
        })
        .collect::<Result<Vec<_>>>()?;
    for (edge, c) in tree.edges.iter_mut().zip(copulas) {
        edge.copula = c;
    }
    Ok(tree)
}

fn fit_marginals(data: &Dataset) -> Result<Vec<GaussianKernel1D>> {
    data.names()
        .iter()
        .zip(data.columns())
        .map(|(name, col)| {
            GaussianKernel1D::fit(col).map_err(|e| match e {
                Error::DegenerateSample { .. } => Error::DegenerateSample { column: name.clone() },
                other => other,
            })
        })
        .collect()
}

fn pseudo_columns(marginals: &[GaussianKernel1D], columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
    marginals
        .par_iter()
        .zip(columns.par_iter())
        .map(|(m, c)| m.cdf_many(c))
        .collect()
}

/// Fits marginals, pseudo-observations and trees `1..=truncation`.
pub fn fit_vine(data: &Dataset, config: &VineConfig) -> Result<VineModel> {
    let n = data.n_rows();
    let d = data.n_cols();
    if d == 0 {
        return Err(Error::InsufficientData("dataset has no columns".into()));
    }
    if n < MIN_FIT_ROWS {
        return Err(Error::InsufficientData(format!(
            "vine fit needs at least {MIN_FIT_ROWS} rows, got {n}"
        )));
    }
    if config.truncation == 0 {
        return Err(Error::Config("truncation must be at least 1".into()));
    }
    let marginals = fit_marginals(data)?;
    let u = pseudo_columns(&marginals, data.columns());
    let levels = config.truncation.min(d - 1);
    let mut trees: Vec<VineTree> = Vec::with_capacity(levels);
    let mut outputs: Vec<Vec<EdgeOutputs>> = Vec::new();
    for level in 0..levels {
        let tree = if level == 0 {
            build_first_tree(&u, config.family)?
        } else {
            build_next_tree(&trees, &u, &outputs, config.family)?
        };
        trees.push(tree);
        if level + 1 < levels {
            let out = level_outputs(&trees, level, &u, &outputs);
            outputs.push(out);
        }
    }
    Ok(VineModel {
        names: data.names().to_vec(),
        marginals,
        trees,
        target: None,
    })
}

fn level_outputs(
    trees: &[VineTree],
    level: usize,
    u: &[Vec<f64>],
    outputs: &[Vec<EdgeOutputs>],
) -> Vec<EdgeOutputs> {
    (0..trees[level].edges.len())
        .into_par_iter()
        .map(|e| {
            let (x, y) = edge_inputs(trees, level, e, u, outputs);
            copula_outputs(&trees[level].edges[e].copula, x, y)
        })
        .collect()
}

impl VineModel {
    /// Assembles a model from parts and checks its structural invariants.
    pub fn from_parts(
        names: Vec<String>,
        marginals: Vec<GaussianKernel1D>,
        trees: Vec<VineTree>,
        target: Option<usize>,
    ) -> Result<Self> {
        let model = Self {
            names,
            marginals,
            trees,
            target,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks structural invariants: one marginal per variable, tree `k` has
    /// `d - k` edges with `|D(e)| = k - 1`, and the constraint-set algebra
    /// holds for every joined edge.
    pub fn validate(&self) -> Result<()> {
        let d = self.names.len();
        let bad = |msg: String| Err(Error::Structural(msg));
        if self.marginals.len() != d {
            return bad(format!("{} marginals for {d} variables", self.marginals.len()));
        }
        for m in &self.marginals {
            GaussianKernel1D::new(m.centers().to_vec(), m.bandwidth())?;
            if m.centers().windows(2).any(|w| w[0] > w[1]) {
                return bad("marginal centers must be sorted".into());
            }
        }
        if d > 0 && self.trees.len() > d - 1 {
            return bad(format!("{} trees for {d} variables", self.trees.len()));
        }
        if let Some(t) = self.target {
            if t >= d {
                return bad(format!("target index {t} out of range"));
            }
        }
        for (k, tree) in self.trees.iter().enumerate() {
            if tree.level != k + 1 {
                return bad(format!("tree {k} has level {}", tree.level));
            }
            if tree.edges.len() != d - 1 - k {
                return bad(format!("tree {} has {} edges, expected {}", k + 1, tree.edges.len(), d - 1 - k));
            }
            for e in &tree.edges {
                let (a, b) = e.conditioned;
                if a >= b || b >= d || e.conditioning.len() != k || e.conditioning.iter().any(|&x| x >= d || x == a || x == b) {
                    return bad(format!("malformed edge {:?}|{:?} in tree {}", e.conditioned, e.conditioning, k + 1));
                }
                match (k, e.children) {
                    (0, None) => {}
                    (0, Some(_)) | (_, None) => return bad(format!("edge children do not match tree {}", k + 1)),
                    (_, Some((i, j))) => {
                        let prev = &self.trees[k - 1].edges;
                        if i >= prev.len() || j >= prev.len() || i == j {
                            return bad("edge child index out of range".into());
                        }
                        let (c, dd) = join_sets(&prev[i], &prev[j]);
                        if c != vec![a, b] || dd != e.conditioning {
                            return bad(format!("edge {:?} violates the constraint-set algebra", e.conditioned));
                        }
                    }
                }
                match &e.copula {
                    PairCopula::Kernel(c) => {
                        KernelCopula::new(c.z_centers().to_vec(), c.w_centers().to_vec(), c.sigma_z(), c.sigma_w(), c.gamma())?;
                    }
                    PairCopula::Gaussian(g) => {
                        crate::bicopula::GaussianCopula::new(g.rho())?;
                    }
                    PairCopula::Independence => {}
                }
            }
        }
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn marginals(&self) -> &[GaussianKernel1D] {
        &self.marginals
    }

    pub fn marginal(&self, i: usize) -> &GaussianKernel1D {
        &self.marginals[i]
    }

    pub fn trees(&self) -> &[VineTree] {
        &self.trees
    }

    pub fn truncation(&self) -> usize {
        self.trees.len()
    }

    pub fn n_copulas(&self) -> usize {
        self.trees.iter().map(|t| t.edges.len()).sum()
    }

    pub fn target(&self) -> Option<usize> {
        self.target
    }

    pub fn set_target(&mut self, target: Option<usize>) -> Result<()> {
        if let Some(t) = target {
            if t >= self.dim() {
                return Err(Error::Config(format!("target index {t} out of range")));
            }
        }
        self.target = target;
        Ok(())
    }

    pub fn with_target_name(mut self, name: &str) -> Result<Self> {
        let idx = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Schema(format!("no variable named `{name}`")))?;
        self.target = Some(idx);
        Ok(self)
    }

    pub(crate) fn set_marginal(&mut self, i: usize, m: GaussianKernel1D) {
        self.marginals[i] = m;
    }

    pub(crate) fn set_copula(&mut self, level: usize, e: usize, c: PairCopula) {
        self.trees[level].edges[e].copula = c;
    }

    /// Marginal cdf values of `columns` (one vector per variable).
    pub fn pseudo_observations(&self, columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
        pseudo_columns(&self.marginals, columns)
    }

    /// Conditional samples of every edge in trees `0..levels` (0-based),
    /// computed level by level from the marginal pseudo-observations `u`.
    pub fn edge_outputs(&self, u: &[Vec<f64>], levels: usize) -> Vec<Vec<EdgeOutputs>> {
        let mut outputs = Vec::new();
        for level in 0..levels.min(self.trees.len()) {
            let out = level_outputs(&self.trees, level, u, &outputs);
            outputs.push(out);
        }
        outputs
    }

    /// Copula arguments of every edge in tree `level` (0-based).
    pub fn level_arguments(&self, level: usize, u: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
        let outputs = self.edge_outputs(u, level);
        (0..self.trees[level].edges.len())
            .map(|e| {
                let (x, y) = edge_inputs(&self.trees, level, e, u, &outputs);
                (x.to_vec(), y.to_vec())
            })
            .collect()
    }

    /// The copula arguments `(F(a|D), F(b|D))` of edge `e` in tree `level`
    /// (0-based) for every row of `u`.
    pub fn edge_arguments(&self, level: usize, e: usize, u: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let outputs = self.edge_outputs(u, level);
        let (x, y) = edge_inputs(&self.trees, level, e, u, &outputs);
        (x.to_vec(), y.to_vec())
    }

    /// Log density of many points given as columns (one vector per variable).
    pub fn log_density_columns(&self, columns: &[Vec<f64>]) -> Vec<f64> {
        assert_eq!(columns.len(), self.dim(), "column count must equal the vine dimension");
        let n = columns.first().map_or(0, Vec::len);
        let mut total = vec![0.0; n];
        for (m, col) in self.marginals.iter().zip(columns) {
            for (t, &x) in total.iter_mut().zip(col) {
                *t += m.log_pdf(x);
            }
        }
        let u = self.pseudo_observations(columns);
        let mut outputs: Vec<Vec<EdgeOutputs>> = Vec::new();
        for level in 0..self.trees.len() {
            for (e, edge) in self.trees[level].edges.iter().enumerate() {
                let (x, y) = edge_inputs(&self.trees, level, e, &u, &outputs);
                for ((t, &a), &b) in total.iter_mut().zip(x).zip(y) {
                    *t += edge.copula.log_density(a, b);
                }
            }
            if level + 1 < self.trees.len() {
                let out = level_outputs(&self.trees, level, &u, &outputs);
                outputs.push(out);
            }
        }
        total
    }

    /// The part of the log density that depends on `var`: its marginal plus
    /// every edge whose constraint set contains it. Other factors are
    /// constant in `var`.
    pub fn log_density_involving(&self, columns: &[Vec<f64>], var: usize) -> Vec<f64> {
        assert_eq!(columns.len(), self.dim(), "column count must equal the vine dimension");
        let m = &self.marginals[var];
        let mut total: Vec<f64> = columns[var].iter().map(|&x| m.log_pdf(x)).collect();
        let u = self.pseudo_observations(columns);
        let mut outputs: Vec<Vec<EdgeOutputs>> = Vec::new();
        for level in 0..self.trees.len() {
            for (e, edge) in self.trees[level].edges.iter().enumerate() {
                if !edge.involves(var) {
                    continue;
                }
                let (x, y) = edge_inputs(&self.trees, level, e, &u, &outputs);
                for ((t, &a), &b) in total.iter_mut().zip(x).zip(y) {
                    *t += edge.copula.log_density(a, b);
                }
            }
            if level + 1 < self.trees.len() {
                let out = level_outputs(&self.trees, level, &u, &outputs);
                outputs.push(out);
            }
        }
        total
    }

    /// Log density of a single point.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let columns: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
        self.log_density_columns(&columns)[0]
    }

    /// Log density of every row of `data`; columns are matched by name.
    pub fn log_density_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        let aligned = data.select_columns(&self.names)?;
        Ok(self.log_density_columns(aligned.columns()))
    }

    /// `F(var | x_i : i ∈ conditioning)` at the point `x` (entries outside
    /// the conditioning set and `var` are ignored). The conditional must be
    /// an output of some edge in the fitted trees.
    pub fn conditional_cdf(&self, var: usize, conditioning: &[usize], x: &[f64]) -> Result<f64> {
        if var >= self.dim() || conditioning.iter().any(|&c| c >= self.dim() || c == var) {
            return Err(Error::Structural("conditional cdf indices out of range".into()));
        }
        if conditioning.is_empty() {
            return Ok(self.marginals[var].cdf(x[var]));
        }
        let mut wanted: Vec<usize> = conditioning.to_vec();
        wanted.sort_unstable();
        wanted.dedup();
        let level = wanted.len() - 1;
        let tree = self.trees.get(level).ok_or_else(|| {
            Error::Structural(format!("no tree with {} conditioning variables", wanted.len()))
        })?;
        let mut full = wanted.clone();
        full.push(var);
        full.sort_unstable();
        for (e, edge) in tree.edges.iter().enumerate() {
            if let Some(slot) = edge.output_slot(var) {
                if edge.constraint() == full {
                    return Ok(self.edge_output_at(level, e, slot, x));
                }
            }
        }
        Err(Error::Structural(format!(
            "F({var} | {wanted:?}) is not an output of the fitted trees"
        )))
    }

    fn edge_input_at(&self, level: usize, e: usize, var: usize, x: &[f64]) -> f64 {
        if level == 0 {
            return self.marginals[var].cdf(x[var]);
        }
        let (child, slot) = input_source(&self.trees[level - 1], &self.trees[level].edges[e], var);
        self.edge_output_at(level - 1, child, slot, x)
    }

    fn edge_output_at(&self, level: usize, e: usize, slot: usize, x: &[f64]) -> f64 {
        let edge = &self.trees[level].edges[e];
        let (a, b) = edge.conditioned;
        let ua = self.edge_input_at(level, e, a, x);
        let ub = self.edge_input_at(level, e, b, x);
        if slot == 0 {
            edge.copula.h_given_second(ua, ub)
        } else {
            edge.copula.h_given_first(ua, ub)
        }
    }

    /// Refits every factor on `data` keeping the tree structure and the
    /// copula kind of every edge.
    pub fn refit_with_structure(&self, data: &Dataset) -> Result<VineModel> {
        let data = data.select_columns(&self.names)?;
        if data.n_rows() < MIN_FIT_ROWS {
            return Err(Error::InsufficientData(format!(
                "refit needs at least {MIN_FIT_ROWS} rows, got {}",
                data.n_rows()
            )));
        }
        let marginals = fit_marginals(&data)?;
        let u = pseudo_columns(&marginals, data.columns());
        let mut model = VineModel {
            names: self.names.clone(),
            marginals,
            trees: self.trees.clone(),
            target: self.target,
        };
        let mut outputs: Vec<Vec<EdgeOutputs>> = Vec::new();
        for level in 0..model.trees.len() {
            let fitted = (0..model.trees[level].edges.len())
                .into_par_iter()
                .map(|e| {
                    let (x, y) = edge_inputs(&model.trees, level, e, &u, &outputs);
                    refit_like(&model.trees[level].edges[e].copula, x, y)
                })
                .collect::<Result<Vec<_>>>()?;
            for (edge, c) in model.trees[level].edges.iter_mut().zip(fitted) {
                edge.copula = c;
            }
            if level + 1 < model.trees.len() {
                let out = level_outputs(&model.trees, level, &u, &outputs);
                outputs.push(out);
            }
        }
        Ok(model)
    }
}

/// Fits a copula of the same kind as `like` to `(x, y)`.
pub(crate) fn refit_like(like: &PairCopula, x: &[f64], y: &[f64]) -> Result<PairCopula> {
    match like {
        PairCopula::Kernel(_) => CopulaFamily::Kernel.fit(x, y),
        PairCopula::Gaussian(_) => CopulaFamily::Gaussian.fit(x, y),
        PairCopula::Independence => Ok(PairCopula::Independence),
    }
}
