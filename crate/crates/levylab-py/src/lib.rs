//! Python bindings: model construction, exponent/variogram evaluation,
//! Gaussian-field sampling and probes, path simulation, and the named
//! verification suites.

use levylab::exponent::ExponentTable;
use levylab::gaussian::{self, GaussianField};
use levylab::measure::{LevyModel as CoreModel, Sidedness};
use levylab::pathlab;
use levylab::suites::{self, SuiteOpts};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: levylab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "LevyModel")]
#[derive(Clone)]
struct PyLevyModel {
    inner: CoreModel,
}

#[pymethods]
impl PyLevyModel {
    /// Pure power jump model: density |x|^{-alpha-1} on (0, ∞).
    #[staticmethod]
    fn stable(alpha: f64) -> PyResult<Self> {
        Ok(PyLevyModel {
            inner: CoreModel::stable(alpha).map_err(err)?,
        })
    }

    /// Pure Gaussian model: psi(λ) = a²λ².
    #[staticmethod]
    fn brownian(a: f64) -> PyResult<Self> {
        Ok(PyLevyModel {
            inner: CoreModel::brownian(a).map_err(err)?,
        })
    }

    /// Alternating-coefficient octave model (the first worked example).
    #[staticmethod]
    #[pyo3(signature = (c1=1.0, c2=1.2, alpha=1.5, ratio=0.5, depth=40))]
    fn octave_alternating(c1: f64, c2: f64, alpha: f64, ratio: f64, depth: usize) -> PyResult<Self> {
        Ok(PyLevyModel {
            inner: CoreModel::octave_alternating(c1, c2, alpha, ratio, depth).map_err(err)?,
        })
    }

    /// Sparse heavy-band model (the ratio-index-breaking example).
    #[staticmethod]
    #[pyo3(signature = (alpha1=1.3, alpha2=1.7, pairs=14, slack=0.01))]
    fn sparse_heavy_bands(alpha1: f64, alpha2: f64, pairs: usize, slack: f64) -> PyResult<Self> {
        Ok(PyLevyModel {
            inner: CoreModel::sparse_heavy_bands(alpha1, alpha2, pairs, slack).map_err(err)?,
        })
    }

    /// Parse the key = value config format (same schema as the CLI).
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        Ok(PyLevyModel {
            inner: levylab::config::parse_model_str(text).map_err(err)?,
        })
    }

    /// Resolve a builtin name (stable15, example51, example52, brownian).
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        Ok(PyLevyModel {
            inner: levylab::config::resolve_model(name).map_err(err)?,
        })
    }

    fn with_two_sided_tails(&self) -> Self {
        PyLevyModel {
            inner: self.inner.clone().with_sidedness(Sidedness::TwoSided),
        }
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    fn density(&self, x: f64) -> f64 {
        self.inner.density(x)
    }

    fn tail_mass(&self, x: f64) -> PyResult<f64> {
        self.inner.tail_mass(x).map_err(err)
    }

    fn condition_ratio(&self, x: f64) -> PyResult<f64> {
        self.inner.condition_ratio(x).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("LevyModel({})", self.inner.label)
    }
}

/// Cached exponent plus variogram tables for one model.
#[pyclass(name = "ExponentTable")]
struct PyExponentTable {
    table: ExponentTable,
    vario: levylab::exponent::VariogramTable,
}

#[pymethods]
impl PyExponentTable {
    #[new]
    #[pyo3(signature = (model, lambda_decades=6, x_decades=6, per_decade=16, tol=1e-8))]
    fn new(
        model: &PyLevyModel,
        lambda_decades: u32,
        x_decades: u32,
        per_decade: usize,
        tol: f64,
    ) -> PyResult<Self> {
        let ld = 10f64.powi(lambda_decades as i32);
        let xd = 10f64.powi(x_decades as i32);
        let table = ExponentTable::build(&model.inner, 1.0 / ld, ld, per_decade, tol).map_err(err)?;
        let vario = table.build_variogram(1.0 / xd, xd, per_decade).map_err(err)?;
        Ok(PyExponentTable { table, vario })
    }

    fn psi(&self, lam: f64) -> f64 {
        self.table.psi_at(lam)
    }

    fn pi(&self, lam: f64) -> PyResult<f64> {
        self.table.pi_at(lam).map_err(err)
    }

    fn sigma0_sq(&self, x: f64) -> PyResult<f64> {
        self.table.sigma0_sq(x).map_err(err)
    }

    fn sigma0_hat_sq(&self, h: f64) -> PyResult<f64> {
        self.vario.sigma0_hat_sq(h).map_err(err)
    }

    fn phi(&self, x: f64) -> PyResult<f64> {
        self.table.phi(x).map_err(err)
    }

    fn phi_inv(&self, y: f64) -> PyResult<f64> {
        self.vario.phi_inv(y).map_err(err)
    }

    fn h_fn(&self, x: f64) -> PyResult<f64> {
        self.table.h_fn(x).map_err(err)
    }

    fn covariance(&self, x: f64, y: f64) -> PyResult<f64> {
        gaussian::covariance(&self.table, x, y).map_err(err)
    }

    fn recurrent(&self) -> bool {
        self.table.recurrent()
    }

    fn local_times_exist(&self) -> bool {
        self.table.local_times_exist()
    }
}

/// Exact Gaussian field on a uniform symmetric grid.
#[pyclass(name = "GaussianField")]
struct PyGaussianField {
    field: GaussianField,
}

#[pymethods]
impl PyGaussianField {
    #[new]
    #[pyo3(signature = (table, half_width=1.0, per_side=128))]
    fn new(table: &PyExponentTable, half_width: f64, per_side: usize) -> PyResult<Self> {
        Ok(PyGaussianField {
            field: GaussianField::uniform(&table.table, half_width, per_side).map_err(err)?,
        })
    }

    #[getter]
    fn sites(&self) -> Vec<f64> {
        self.field.sites.clone()
    }

    fn sample(&self, n_paths: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = levylab::stream_rng(seed, "py-field", 0);
        let mut out = Vec::with_capacity(n_paths);
        let mut path = vec![0.0; self.field.len()];
        for _ in 0..n_paths {
            self.field.sample(&mut rng, &mut path);
            out.push(path.clone());
        }
        out
    }

    /// (estimate, ci_lo, ci_hi) per h of P(η < √(h·σ̂₀²(δ)) on [−δ, δ]),
    /// plus the fitted decay exponent.
    fn lower_tail(
        &self,
        delta: f64,
        hs: Vec<f64>,
        n_paths: u64,
        seed: u64,
    ) -> (Vec<(f64, f64, f64, f64)>, f64) {
        let mut rng = levylab::stream_rng(seed, "py-lower", 0);
        let rep = gaussian::lower_tail_probe(&self.field, delta, &hs, n_paths, &mut rng);
        (rep.per_h, rep.gamma_hat)
    }

    fn leftmost_max_samples(&self, a: f64, b: f64, n_paths: usize, seed: u64) -> Vec<f64> {
        let mut rng = levylab::stream_rng(seed, "py-maxloc", 0);
        let mut path = vec![0.0; self.field.len()];
        let mut out = Vec::with_capacity(n_paths);
        for _ in 0..n_paths {
            self.field.sample(&mut rng, &mut path);
            out.push(gaussian::leftmost_max(&path, &self.field.sites, a, b).tau);
        }
        out
    }
}

/// Simulate one path; returns (times, values, jumps as (t, size)).
#[pyfunction]
#[pyo3(signature = (model, horizon, dt, seed, eps_jump=None))]
fn simulate_path(
    model: &PyLevyModel,
    horizon: f64,
    dt: f64,
    seed: u64,
    eps_jump: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<(f64, f64)>)> {
    let rec = pathlab::simulate_path(&model.inner, horizon, eps_jump, dt, seed).map_err(err)?;
    Ok((rec.times, rec.values, rec.jumps))
}

/// Occupation-binned local time of a recorded path at one checkpoint:
/// returns (bin_center, local_time) pairs.
#[pyfunction]
fn local_time_profile(
    model: &PyLevyModel,
    horizon: f64,
    dt: f64,
    seed: u64,
    bin_width: f64,
) -> PyResult<Vec<(f64, f64)>> {
    let rec = pathlab::simulate_path(&model.inner, horizon, None, dt, seed).map_err(err)?;
    let field = pathlab::local_time(&rec, bin_width, &[horizon]);
    let mut out: Vec<(f64, f64)> = field.occ[0]
        .iter()
        .map(|(&k, &occ)| (k as f64 * bin_width, occ / bin_width))
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(out)
}

/// Run a named suite; returns (passed, summary_text).
#[pyfunction]
#[pyo3(signature = (suite, model, seed=12345, paths_factor=1.0))]
fn run_suite(
    suite: &str,
    model: &PyLevyModel,
    seed: u64,
    paths_factor: f64,
) -> PyResult<(bool, String)> {
    let opts = SuiteOpts {
        paths_factor,
        ..Default::default()
    };
    let rep = suites::run_suite(suite, &model.inner, seed, &opts).map_err(err)?;
    Ok((rep.all_passed(), rep.to_summary()))
}

#[pyfunction]
fn list_suites() -> Vec<(String, String)> {
    suites::list_suites()
        .iter()
        .map(|s| (s.id.to_string(), s.description.to_string()))
        .collect()
}

#[pymodule]
fn levylab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLevyModel>()?;
    m.add_class::<PyExponentTable>()?;
    m.add_class::<PyGaussianField>()?;
    m.add_function(wrap_pyfunction!(simulate_path, m)?)?;
    m.add_function(wrap_pyfunction!(local_time_profile, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(list_suites, m)?)?;
    Ok(())
}
