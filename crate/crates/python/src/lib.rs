//! Python module `phisub`.

use std::path::PathBuf;

use phisub::simulator::SimulationReport;
use phisub::{CgfModel, Distribution, Error, NFunctionSpec, Normalization, PIndex, SolverParams, TailQuery};
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numeric(_) | Error::Divergence { .. } | Error::NotSubgaussian { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn pindex(p: f64) -> PyResult<PIndex> {
    PIndex::new(p).map_err(to_py)
}

/// φ_p(x).
#[pyfunction]
fn phi_p(p: f64, x: f64) -> PyResult<f64> {
    phisub::phi_p_eval(&pindex(p)?, x).map_err(to_py)
}

/// φ_p⁻¹(y) for y ≥ 0.
#[pyfunction]
fn phi_p_inverse(p: f64, y: f64) -> PyResult<f64> {
    phisub::phi_p_inverse(&pindex(p)?, y).map_err(to_py)
}

/// Hölder conjugate q of p > 1.
#[pyfunction]
fn conjugate_index(p: f64) -> PyResult<f64> {
    Ok(phisub::conjugate_index(&pindex(p)?).map_err(to_py)?.p())
}

/// Numeric Young–Fenchel transform of φ_p at y, as `(value, argmax)`.
#[pyfunction]
fn legendre_transform(p: f64, y: f64) -> PyResult<(f64, Option<f64>)> {
    let spec = NFunctionSpec::PhiP(pindex(p)?);
    let r = phisub::legendre_transform(&spec, y, &SolverParams::default()).map_err(to_py)?;
    Ok((r.value, r.argmax))
}

#[pyclass(frozen, get_all, module = "phisub")]
#[derive(Debug)]
struct NormEstimate {
    tau: f64,
    method: String,
    sup_location: Option<f64>,
    window_limited: bool,
}

#[pymethods]
impl NormEstimate {
    fn __repr__(&self) -> String {
        format!("NormEstimate(tau={}, method={})", self.tau, self.method)
    }
}

/// τ_φp norm of a catalog model: `gaussian`, `rademacher`, `uniform`,
/// `bounded`, `absgauss` or `empirical` (with `samples`).
#[pyfunction]
#[pyo3(signature = (model, p, sigma=1.0, h=1.0, d=1.0, a=None, samples=None, samples_file=None))]
#[allow(clippy::too_many_arguments)]
fn tau_norm(
    model: &str,
    p: f64,
    sigma: f64,
    h: f64,
    d: f64,
    a: Option<f64>,
    samples: Option<Vec<f64>>,
    samples_file: Option<PathBuf>,
) -> PyResult<NormEstimate> {
    let p = pindex(p)?;
    let m = match model.to_ascii_lowercase().as_str() {
        "gaussian" => CgfModel::gaussian(sigma),
        "rademacher" => Ok(CgfModel::Rademacher),
        "uniform" => CgfModel::centered_uniform(h),
        "bounded" => CgfModel::bounded_centered(d),
        "absgauss" => match a {
            Some(a) => CgfModel::abs_gaussian_power(a),
            None => CgfModel::abs_gaussian_power_for(&p),
        },
        "empirical" => match (samples, samples_file) {
            (Some(xs), _) => CgfModel::empirical(&xs),
            (None, Some(path)) => phisub::read_samples(path).and_then(|xs| CgfModel::empirical(&xs)),
            (None, None) => Err(Error::Config("empirical model needs samples or samples_file".into())),
        },
        other => Err(Error::Config(format!("unknown model {other:?}"))),
    }
    .map_err(to_py)?;
    let est = phisub::tau_norm(&m, &p, &SolverParams::default()).map_err(to_py)?;
    Ok(NormEstimate {
        tau: est.tau,
        method: format!("{:?}", est.method),
        sup_location: est.sup_location,
        window_limited: est.diagnostics.window_limited,
    })
}

/// `min(1, 2 exp(−φ_q(ε/C)))`.
#[pyfunction]
fn tail_bound(p: f64, c: f64, epsilon: f64) -> PyResult<f64> {
    phisub::tail_bound(&pindex(p)?, c, epsilon).map_err(to_py)
}

/// Bound on `P(|S_n|/n ≥ ε)` under `τ(S_n) ≤ c·n^{1−α}`, as
/// `(probability, valid)`.
#[pyfunction]
fn partial_sum_tail_bound(p: f64, c: f64, alpha: f64, epsilon: f64, n: u64) -> PyResult<(f64, bool)> {
    let params = phisub::SllnBoundParams::new(c, alpha, pindex(p)?).map_err(to_py)?;
    let q = TailQuery::new(epsilon, n, Normalization::MeanScale).map_err(to_py)?;
    let b = phisub::partial_sum_tail_bound(&params, &q).map_err(to_py)?;
    Ok((b.probability, b.valid))
}

/// Bound on `P(|S_n| ≥ n^{1/s} ε)` for summands with norms at most `b`.
#[pyfunction]
fn mz_tail_bound(p: f64, b: f64, s: f64, epsilon: f64, n: u64) -> PyResult<(f64, bool)> {
    let params = phisub::MzParams::new(b, s, pindex(p)?).map_err(to_py)?;
    let q = TailQuery::new(epsilon, n, Normalization::MzScale { s }).map_err(to_py)?;
    let v = phisub::mz_tail_bound(&params, &q).map_err(to_py)?;
    Ok((v.probability, v.valid))
}

#[pyclass(frozen, get_all, module = "phisub")]
#[derive(Debug)]
struct SeriesReport {
    finite: bool,
    upper_bound: f64,
    n0: u64,
    last_explicit: u64,
    explicit_sum: f64,
    remainder: f64,
}

/// Upper bound on the sum over n of the partial-sum tail bounds.
#[pyfunction]
fn series_sum_bound(p: f64, c: f64, alpha: f64, epsilon: f64) -> PyResult<SeriesReport> {
    let params = phisub::SllnBoundParams::new(c, alpha, pindex(p)?).map_err(to_py)?;
    let r = phisub::series_sum_bound(&params, epsilon).map_err(to_py)?;
    Ok(SeriesReport {
        finite: r.finite,
        upper_bound: r.upper_bound,
        n0: r.n0,
        last_explicit: r.last_explicit,
        explicit_sum: r.explicit_sum,
        remainder: r.remainder,
    })
}

/// Fits `τ ≈ c·n^{1−α}` to `(n, τ)` pairs; returns
/// `(c, alpha, residual, hypothesis_satisfied)`.
#[pyfunction]
fn slln_condition_fit(pairs: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64, bool)> {
    let f = phisub::slln_condition_fit(&pairs).map_err(to_py)?;
    Ok((f.c, f.alpha, f.residual, f.hypothesis_satisfied))
}

fn distribution(spec: &str) -> PyResult<Distribution> {
    spec.parse().map_err(to_py)
}

/// The first `n` draws of a catalog sequence.
#[pyfunction]
fn generate_sequence(dist: &str, n: u64, seed: u64) -> PyResult<Vec<f64>> {
    let spec = phisub::SequenceSpec::new(distribution(dist)?, n, seed).map_err(to_py)?;
    phisub::generate_sequence(&spec).map_err(to_py)
}

#[pyclass(frozen, module = "phisub")]
struct Report {
    inner: SimulationReport,
}

#[pymethods]
impl Report {
    #[getter]
    fn violations(&self) -> usize {
        self.inner.violations
    }

    #[getter]
    fn mean_scale_decreasing(&self) -> bool {
        self.inner.mean_scale_decreasing
    }

    #[getter]
    fn non_convergence(&self) -> bool {
        self.inner.non_convergence
    }

    /// `(n, mean |S_n|/n)` per checkpoint.
    #[getter]
    fn mean_abs_path(&self) -> Vec<(u64, f64)> {
        self.inner.checkpoints.iter().map(|c| (c.n, c.mean_abs_mean_scale)).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Report> {
        Ok(Report { inner: SimulationReport::from_json(text).map_err(to_py)? })
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(to_py)?;
        String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __eq__(&self, other: &Report) -> bool {
        self.inner == other.inner
    }
}

/// Monte-Carlo convergence report; releases the GIL while simulating.
#[pyfunction]
#[pyo3(signature = (dist, n_grid, epsilon_grid, replications, seed=0, s=1.5))]
fn convergence_report(
    py: Python<'_>,
    dist: &str,
    n_grid: Vec<u64>,
    epsilon_grid: Vec<f64>,
    replications: u64,
    seed: u64,
    s: f64,
) -> PyResult<Report> {
    let dist = distribution(dist)?;
    let n_max = n_grid.iter().copied().max().unwrap_or(0);
    let spec = phisub::SequenceSpec::new(dist, n_max, seed).map_err(to_py)?;
    let inner = py
        .detach(|| phisub::convergence_report(&spec, s, &n_grid, &epsilon_grid, replications, seed))
        .map_err(to_py)?;
    Ok(Report { inner })
}

#[pymodule]
#[pyo3(name = "phisub")]
fn phisub_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(phi_p, m)?)?;
    m.add_function(wrap_pyfunction!(phi_p_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(conjugate_index, m)?)?;
    m.add_function(wrap_pyfunction!(legendre_transform, m)?)?;
    m.add_function(wrap_pyfunction!(tau_norm, m)?)?;
    m.add_function(wrap_pyfunction!(tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(partial_sum_tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(mz_tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(series_sum_bound, m)?)?;
    m.add_function(wrap_pyfunction!(slln_condition_fit, m)?)?;
    m.add_function(wrap_pyfunction!(generate_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_report, m)?)?;
    m.add_class::<NormEstimate>()?;
    m.add_class::<SeriesReport>()?;
    m.add_class::<Report>()?;
    Ok(())
}
