//! Python bindings for the `hmocma` optimizer and benchmarking tools.

use std::path::PathBuf;

use ::hmocma as core;
use core::bench::{self, RunRecord};
use core::hybrid::{self, Algo, HybridConfig};
use core::pareto::{self, ObjectiveVector, ParetoArchive, SearchPoint, Solution};
use core::problems::ProblemKey;
use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn py_err(e: core::Error) -> PyErr {
    match e {
        core::Error::Io(e) => PyIOError::new_err(e.to_string()),
        core::Error::IndexOutOfRange { .. } => PyIndexError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn ov(p: (f64, f64)) -> ObjectiveVector {
    ObjectiveVector::new(p.0, p.1)
}

fn ovs(ps: Vec<(f64, f64)>) -> Vec<ObjectiveVector> {
    ps.into_iter().map(ov).collect()
}

/// True when `a` Pareto-dominates `b` (minimization).
#[pyfunction]
fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    pareto::dominates(&ov(a), &ov(b))
}

/// Front index (0 = non-dominated) of every point.
#[pyfunction]
fn nondominated_sort(points: Vec<(f64, f64)>) -> Vec<usize> {
    pareto::nondominated_sort(&ovs(points))
}

/// Hypervolume dominated by `front` and bounded by `reference`.
#[pyfunction]
fn hv2d(front: Vec<(f64, f64)>, reference: (f64, f64)) -> f64 {
    pareto::hv2d(&ovs(front), &ov(reference))
}

#[pyfunction]
fn hv_contribution(i: usize, front: Vec<(f64, f64)>, reference: (f64, f64)) -> PyResult<f64> {
    pareto::hv_contribution(i, &ovs(front), &ov(reference)).map_err(py_err)
}

/// The 58 target factors, hardest first.
#[pyfunction]
fn target_factors() -> Vec<f64> {
    bench::target_factors()
}

/// Hypervolume-difference thresholds `factor * ref_hv`.
#[pyfunction]
fn make_targets(ref_hv: f64) -> PyResult<Vec<f64>> {
    Ok(bench::make_targets(ref_hv).map_err(py_err)?.targets)
}

/// `(alpha, refined)` of warm-start leg `i`.
#[pyfunction]
fn alpha_schedule(i: usize) -> (f64, bool) {
    core::warmstart::alpha_schedule(i)
}

/// `"P1"` .. `"P4"` after `evals` evaluations in dimension `n`.
#[pyfunction]
fn phase_of(evals: u64, n: usize) -> String {
    format!("{:?}", hybrid::phase_of(evals, n))
}

/// Population sizes drawn for restart `i`.
#[pyfunction]
#[pyo3(signature = (i, count, seed=0))]
fn sample_lambda(i: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| core::cma::sample_lambda(i, &mut rng)).collect()
}

#[pyclass(name = "Problem", module = "hmocma", frozen)]
struct PyProblem {
    inner: core::BiObjectiveProblem,
}

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (k, n, instance=1))]
    fn new(k: usize, n: usize, instance: usize) -> PyResult<Self> {
        Ok(PyProblem {
            inner: core::make_problem(k, n, instance).map_err(py_err)?,
        })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn instance(&self) -> usize {
        self.inner.instance()
    }

    #[getter]
    fn ref_point(&self) -> (f64, f64) {
        let r = self.inner.ref_point();
        (r.f1, r.f2)
    }

    #[getter]
    fn group(&self) -> String {
        self.inner.group()
    }

    fn evaluate(&self, x: Vec<f64>) -> PyResult<(f64, f64)> {
        let v = self.inner.evaluate(&x).map_err(py_err)?;
        Ok((v.f1, v.f2))
    }

    /// Reference hypervolume: closed form for the bi-sphere, otherwise read
    /// from `ref_dir`.
    #[pyo3(signature = (ref_dir=None))]
    fn reference_hv(&self, ref_dir: Option<PathBuf>) -> PyResult<f64> {
        Ok(core::reference_data(&self.inner, ref_dir.as_deref()).map_err(py_err)?.ref_hv)
    }

    fn __repr__(&self) -> String {
        format!("Problem(k={}, n={}, instance={})", self.inner.k(), self.inner.dim(), self.inner.instance())
    }
}

#[pyclass(name = "Archive", module = "hmocma")]
struct PyArchive {
    inner: ParetoArchive,
    counter: u64,
}

#[pymethods]
impl PyArchive {
    #[new]
    fn new(reference: (f64, f64)) -> Self {
        PyArchive {
            inner: ParetoArchive::new(ov(reference)),
            counter: 0,
        }
    }

    /// Offers a point; returns whether it entered the archive.
    #[pyo3(signature = (value, x=None))]
    fn insert(&mut self, value: (f64, f64), x: Option<Vec<f64>>) -> PyResult<bool> {
        self.counter += 1;
        let point = match x {
            Some(x) => SearchPoint::new(x).map_err(py_err)?,
            None => SearchPoint::zeros(0),
        };
        Ok(self.inner.insert(Solution {
            point,
            value: ov(value),
            eval_index: self.counter,
        }))
    }

    #[getter]
    fn hv(&self) -> f64 {
        self.inner.hv()
    }

    fn values(&self) -> Vec<(f64, f64)> {
        self.inner.values().into_iter().map(|v| (v.f1, v.f2)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "RunRecord", module = "hmocma", frozen)]
struct PyRunRecord {
    inner: RunRecord,
}

#[pymethods]
impl PyRunRecord {
    #[getter]
    fn total_evals(&self) -> u64 {
        self.inner.total_evals
    }

    /// Evaluations per component.
    #[getter]
    fn ledger(&self) -> (u64, u64, u64, u64) {
        let l = &self.inner.ledger;
        (l.warmstart, l.ss, l.restart_cma, l.ipop)
    }

    #[getter]
    fn final_hv(&self) -> f64 {
        self.inner.final_hv()
    }

    /// `(evals, hv_diff)` pairs; empty without reference data.
    fn anytime_trace(&self) -> Vec<(u64, f64)> {
        self.inner.anytime_trace()
    }

    fn fraction_reached(&self, at_evals: u64) -> f64 {
        bench::fraction_reached(&self.inner, at_evals)
    }

    fn to_jsonl(&self) -> String {
        self.inner.to_jsonl()
    }

    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        Ok(PyRunRecord {
            inner: RunRecord::from_jsonl(text).map_err(py_err)?,
        })
    }
}

/// Runs `algo` on problem `(k, n, instance)` for `budget` evaluations.
#[pyfunction]
#[pyo3(signature = (k, n, budget, seed=0, instance=1, algo="hybrid", ref_dir=None))]
fn run(py: Python<'_>, k: usize, n: usize, budget: u64, seed: u64, instance: usize, algo: &str, ref_dir: Option<PathBuf>) -> PyResult<PyRunRecord> {
    let algo: Algo = algo.parse().map_err(py_err)?;
    let key = ProblemKey { k, n, instance };
    let rec = py
        .detach(|| core::cli::run_record(key, algo, budget, seed, HybridConfig::default(), ref_dir.as_deref()))
        .map_err(py_err)?;
    Ok(PyRunRecord { inner: rec })
}

#[pymodule]
fn hmocma(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(dominates, m)?)?;
    m.add_function(wrap_pyfunction!(nondominated_sort, m)?)?;
    m.add_function(wrap_pyfunction!(hv2d, m)?)?;
    m.add_function(wrap_pyfunction!(hv_contribution, m)?)?;
    m.add_function(wrap_pyfunction!(target_factors, m)?)?;
    m.add_function(wrap_pyfunction!(make_targets, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(phase_of, m)?)?;
    m.add_function(wrap_pyfunction!(sample_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyArchive>()?;
    m.add_class::<PyRunRecord>()?;
    Ok(())
}
