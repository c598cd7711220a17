//! Python bindings. Data goes in and out as lists of rows.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use ::npvine::adapt::{adapt_vine, AdaptMode, AdaptationInput};
use ::npvine::bicopula::CopulaFamily;
use ::npvine::dataset::Dataset;
use ::npvine::mmd::{permutation_test, Bandwidth, MmdConfig, SampleMatrix};
use ::npvine::model::{FitMetadata, ModelFile};
use ::npvine::regress::{default_grid, predict, PointEstimate};
use ::npvine::rvine::{fit_vine, VineConfig, VineModel};
use ::npvine::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn dataset(rows: &[Vec<f64>], names: Option<Vec<String>>) -> PyResult<Dataset> {
    let d = rows.first().map_or(0, Vec::len);
    let names = names.unwrap_or_else(|| (1..=d).map(|i| format!("x{i}")).collect());
    Dataset::from_rows(names, rows).map_err(py_err)
}

fn mmd_config(alpha: f64, permutations: usize, seed: u64, bandwidth: Option<f64>) -> MmdConfig {
    MmdConfig {
        bandwidth: bandwidth.map_or(Bandwidth::MedianHeuristic, Bandwidth::Fixed),
        permutations,
        alpha,
        seed,
        ..Default::default()
    }
}

/// A fitted vine copula model.
#[pyclass(name = "VineModel", module = "npvine", frozen)]
struct PyVineModel {
    inner: VineModel,
    n: usize,
}

#[pymethods]
impl PyVineModel {
    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn truncation(&self) -> usize {
        self.inner.truncation()
    }

    #[getter]
    fn target(&self) -> Option<String> {
        self.inner.target().map(|t| self.inner.names()[t].clone())
    }

    /// `(level, label, |tau|, family)` for every edge.
    fn edges(&self) -> Vec<(usize, String, f64, &'static str)> {
        self.inner
            .trees()
            .iter()
            .flat_map(|t| {
                t.edges
                    .iter()
                    .map(move |e| (t.level, e.label(self.inner.names()), e.weight, e.copula.kind()))
            })
            .collect()
    }

    /// Joint log-density of each row (columns in model order).
    fn log_density(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let data = dataset(&rows, Some(self.inner.names().to_vec()))?;
        self.inner.log_density_dataset(&data).map_err(py_err)
    }

    /// Conditional mean (or median) of the target for each row of features,
    /// given in model order without the target column.
    #[pyo3(signature = (rows, grid_points = 257, median = false))]
    fn predict(&self, rows: Vec<Vec<f64>>, grid_points: usize, median: bool) -> PyResult<Vec<f64>> {
        let t = self
            .inner
            .target()
            .ok_or_else(|| PyValueError::new_err("model has no target column"))?;
        let names: Vec<String> = self
            .inner
            .names()
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != t)
            .map(|(_, n)| n.clone())
            .collect();
        let data = dataset(&rows, Some(names))?;
        let grid = default_grid(&self.inner, grid_points).map_err(py_err)?;
        let how = if median { PointEstimate::Median } else { PointEstimate::Mean };
        predict(&self.inner, &data, &grid, how).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        model_file(self).to_json().map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file = ModelFile::from_json(text).map_err(py_err)?;
        Ok(Self {
            inner: file.to_model().map_err(py_err)?,
            n: file.fit_metadata.n,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        model_file(self).save(path).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = ModelFile::load(path).map_err(py_err)?;
        Ok(Self {
            inner: file.to_model().map_err(py_err)?,
            n: file.fit_metadata.n,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "VineModel(dim={}, truncation={}, target={})",
            self.inner.dim(),
            self.inner.truncation(),
            self.target().map_or("None".to_string(), |t| format!("'{t}'"))
        )
    }
}

fn model_file(m: &PyVineModel) -> ModelFile {
    ModelFile::from_model(
        &m.inner,
        FitMetadata {
            n: m.n,
            seed: None,
            truncation: m.inner.truncation(),
            timestamp: None,
        },
    )
}

/// Fits a vine to `rows` (n × d). The target defaults to the last column.
#[pyfunction]
#[pyo3(signature = (rows, names = None, truncation = 1, family = "kernel", target = None))]
fn fit(
    rows: Vec<Vec<f64>>,
    names: Option<Vec<String>>,
    truncation: usize,
    family: &str,
    target: Option<String>,
) -> PyResult<PyVineModel> {
    let family = match family {
        "kernel" => CopulaFamily::Kernel,
        "gaussian" => CopulaFamily::Gaussian,
        other => return Err(PyValueError::new_err(format!("unknown family `{other}`"))),
    };
    let data = dataset(&rows, names)?;
    let mut model = fit_vine(&data, &VineConfig { truncation, family }).map_err(py_err)?;
    let t = match target {
        Some(name) => data
            .index_of(&name)
            .ok_or_else(|| PyValueError::new_err(format!("no column named `{name}`")))?,
        None => data.n_cols() - 1,
    };
    model.set_target(Some(t)).map_err(py_err)?;
    Ok(PyVineModel {
        inner: model,
        n: data.n_rows(),
    })
}

#[pyfunction]
fn kendall_tau(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    ::npvine::stats::kendall_tau(&x, &y).map_err(py_err)
}

/// Two-sample MMD permutation test; returns `(statistic, p_value, rejected)`.
#[pyfunction]
#[pyo3(signature = (x, y, alpha = 0.05, permutations = 200, seed = 0, bandwidth = None))]
fn mmd_test(
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    alpha: f64,
    permutations: usize,
    seed: u64,
    bandwidth: Option<f64>,
) -> PyResult<(f64, f64, bool)> {
    let to_matrix = |rows: &[Vec<f64>]| {
        let cols = rows.first().map_or(0, Vec::len);
        SampleMatrix::new(rows.iter().flatten().copied().collect(), cols).map_err(py_err)
    };
    let r = permutation_test(&to_matrix(&x)?, &to_matrix(&y)?, &mmd_config(alpha, permutations, seed, bandwidth))
        .map_err(py_err)?;
    Ok((r.statistic, r.p_value, r.rejected))
}

/// `(factor, p_value, changed, refit_from)`.
type Decision = (String, Option<f64>, bool, String);

/// Adapts `model` to the target domain. Rows use the model's column order;
/// unlabeled rows omit the target column. Returns the adapted model and
/// `(factor, p_value, changed, refit_from)` per tested factor.
#[allow(clippy::too_many_arguments)]
#[pyfunction]
#[pyo3(signature = (model, source, target, unlabeled = None, mode = "supervised", alpha = 0.05, permutations = 200, seed = 0))]
fn adapt(
    model: &PyVineModel,
    source: Vec<Vec<f64>>,
    target: Vec<Vec<f64>>,
    unlabeled: Option<Vec<Vec<f64>>>,
    mode: &str,
    alpha: f64,
    permutations: usize,
    seed: u64,
) -> PyResult<(PyVineModel, Vec<Decision>)> {
    let vine = &model.inner;
    let t = vine
        .target()
        .ok_or_else(|| PyValueError::new_err("model has no target column"))?;
    let mode = match mode {
        "supervised" => AdaptMode::Supervised,
        "semi" => AdaptMode::SemiSupervised,
        "unsupervised" => AdaptMode::Unsupervised,
        other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    };
    let names = vine.names().to_vec();
    let features: Vec<String> = names.iter().enumerate().filter(|&(j, _)| j != t).map(|(_, n)| n.clone()).collect();
    let source_rows = dataset(&source, Some(names.clone()))?;
    let labeled = if target.is_empty() {
        Dataset::new(vec![], vec![]).map_err(py_err)?
    } else {
        dataset(&target, Some(names))?
    };
    let unlabeled = match unlabeled {
        Some(rows) if !rows.is_empty() => dataset(&rows, Some(features))?,
        _ => Dataset::new(vec![], vec![]).map_err(py_err)?,
    };
    let input = AdaptationInput {
        source: source_rows,
        target_labeled: labeled,
        target_unlabeled: unlabeled,
        target_index: t,
        mode,
        mmd: mmd_config(alpha, permutations, seed, None),
    };
    let (adapted, report) = adapt_vine(vine, &input).map_err(py_err)?;
    let decisions = report
        .decisions
        .into_iter()
        .map(|d| {
            let from = serde_json::to_value(d.refit_from)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default();
            (d.label, d.p_value, d.changed, from)
        })
        .collect();
    Ok((
        PyVineModel {
            inner: adapted,
            n: model.n,
        },
        decisions,
    ))
}

#[pymodule]
#[pyo3(name = "npvine")]
fn npvine_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVineModel>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(mmd_test, m)?)?;
    m.add_function(wrap_pyfunction!(adapt, m)?)?;
    Ok(())
}
