//! Python bindings: states, quasiprobability evaluation, test functionals,
//! bounds and the optimisers. Structured results come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde::Serialize;

use phasebell::bounds::{self, CurveOptions};
use phasebell::nonlocality::{bridge_point, optimal_bridge, BridgeFamily};
use phasebell::optimize::{self, MaximizeOptions, Objective};
use phasebell::spec::{load_state, parse_geometry};
use phasebell::states::apply_loss;
use phasebell::{
    functionals, quasiprob, BaseRectangle, Error, FockDensityMatrix, GaussianState, LossChannel, OrderParameter, PhaseSpacePoint,
    PointGeometry, Shape, SqueezeMap, C64,
};

fn err(e: Error) -> PyErr {
    match e {
        Error::PositiveOrder(_) | Error::InvalidParameter { .. } | Error::InvalidGeometry(_) | Error::Spec(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn order(s: f64) -> PyResult<OrderParameter> {
    OrderParameter::new(s).map_err(err)
}

fn shape(name: &str) -> PyResult<Shape> {
    name.parse().map_err(err)
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// JSON text, or any object `json.dumps` accepts.
fn spec_text(obj: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(s) = obj.cast::<PyString>() {
        return Ok(s.to_str()?.to_owned());
    }
    obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()
}

/// A single-mode state, held either as a Gaussian or as a Fock density matrix.
#[pyclass(name = "State", module = "phasebell", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyState {
    inner: phasebell::State,
}

#[pymethods]
impl PyState {
    /// Builds a state from a JSON spec (string or dict).
    #[staticmethod]
    #[pyo3(signature = (spec, dim = 100))]
    fn from_spec(spec: &Bound<'_, PyAny>, dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: load_state(&spec_text(spec)?, dim).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (alpha = C64::new(0.0, 0.0), r = 0.0, phi = 0.0, nbar = 0.0))]
    fn gaussian(alpha: C64, r: f64, phi: f64, nbar: f64) -> PyResult<Self> {
        Ok(Self {
            inner: phasebell::State::Gaussian(GaussianState::new(alpha, r, phi, nbar).map_err(err)?),
        })
    }

    #[staticmethod]
    fn from_purity_kappa(purity: f64, kappa0: f64) -> PyResult<Self> {
        Ok(Self {
            inner: phasebell::State::Gaussian(GaussianState::from_purity_kappa(purity, kappa0).map_err(err)?),
        })
    }

    /// Number state `|n⟩`.
    #[staticmethod]
    fn number(n: usize) -> Self {
        Self {
            inner: phasebell::State::Fock(FockDensityMatrix::number_state(n, n + 1)),
        }
    }

    /// Diagonal state with the given photon-number populations.
    #[staticmethod]
    fn fock(populations: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: phasebell::State::Fock(FockDensityMatrix::diagonal(&populations).map_err(err)?),
        })
    }

    /// Pure state `Σ c_n |n⟩`, normalised.
    #[staticmethod]
    fn pure(amplitudes: Vec<C64>) -> PyResult<Self> {
        Ok(Self {
            inner: phasebell::State::Fock(FockDensityMatrix::pure(&amplitudes).map_err(err)?),
        })
    }

    /// Density matrix given as rows of complex numbers.
    #[staticmethod]
    fn density(rows: Vec<Vec<C64>>) -> PyResult<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("density matrix must be square"));
        }
        let m = phasebell::linalg::CMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(Self {
            inner: phasebell::State::Fock(FockDensityMatrix::new(m).map_err(err)?),
        })
    }

    #[getter]
    fn is_gaussian(&self) -> bool {
        matches!(self.inner, phasebell::State::Gaussian(_))
    }

    /// Fock density matrix as rows of complex numbers.
    #[pyo3(signature = (dim = 40))]
    fn density_matrix(&self, dim: usize) -> PyResult<Vec<Vec<C64>>> {
        let rho = self.inner.as_fock(dim).map_err(err)?;
        let m = rho.matrix();
        Ok((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect())
    }

    /// Returns `(W_s, scaled)` at `α = q + ip`.
    #[pyo3(signature = (q, p, s = 0.0))]
    fn eval(&self, q: f64, p: f64, s: f64) -> PyResult<(f64, f64)> {
        let v = quasiprob::eval(&self.inner, PhaseSpacePoint::new(q, p), order(s)?);
        Ok((v.w, v.scaled))
    }

    /// Scaled values at each `(q, p)` pair.
    #[pyo3(signature = (points, s = 0.0))]
    fn eval_scaled(&self, points: Vec<(f64, f64)>, s: f64) -> PyResult<Vec<f64>> {
        let s = order(s)?;
        Ok(points
            .into_iter()
            .map(|(q, p)| quasiprob::eval(&self.inner, PhaseSpacePoint::new(q, p), s).scaled)
            .collect())
    }

    fn displaced(&self, beta: C64) -> Self {
        Self {
            inner: self.inner.displaced(beta),
        }
    }

    fn rotated(&self, phi: f64) -> Self {
        Self {
            inner: self.inner.rotated(phi),
        }
    }

    /// State after a pure-loss channel of transmittance `eta`.
    #[pyo3(signature = (eta, dim = 100))]
    fn with_loss(&self, eta: f64, dim: usize) -> PyResult<Self> {
        let ch = LossChannel::new(eta).map_err(err)?;
        let inner = match &self.inner {
            phasebell::State::Gaussian(g) => phasebell::State::Gaussian(g.after_loss(ch)),
            other => phasebell::State::Fock(apply_loss(&other.as_fock(dim).map_err(err)?, ch)),
        };
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        match &self.inner {
            phasebell::State::Gaussian(g) => format!("State.gaussian(purity={:.4}, kappa0={:.4})", g.purity(), g.kappa0()),
            phasebell::State::Fock(f) => format!("State(fock dim={}, mean photons={:.4})", f.dim(), f.mean_photon()),
        }
    }
}

/// Placement of the test points in phase space.
#[pyclass(name = "Geometry", module = "phasebell", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGeometry {
    inner: PointGeometry,
}

#[pymethods]
impl PyGeometry {
    #[new]
    #[pyo3(signature = (shape, base, theta = 0.0, squeeze = None))]
    fn new(shape: &str, base: (f64, f64, f64, f64), theta: f64, squeeze: Option<(f64, f64)>) -> PyResult<Self> {
        let sq = squeeze.map(|(r, phi)| SqueezeMap::new(r, phi)).transpose().map_err(err)?;
        let (x0, y0, x1, y1) = base;
        Ok(Self {
            inner: PointGeometry::new(BaseRectangle::new(x0, y0, x1, y1), theta, sq, self::shape(shape)?).map_err(err)?,
        })
    }

    /// Builds a geometry from a JSON spec; `optimal` specs need `state`.
    #[staticmethod]
    #[pyo3(signature = (spec, state = None, s = 0.0, seed = 0))]
    fn from_spec(spec: &Bound<'_, PyAny>, state: Option<&PyState>, s: f64, seed: u64) -> PyResult<Self> {
        let g = parse_geometry(&spec_text(spec)?).map_err(err)?;
        let opts = MaximizeOptions {
            seed,
            ..MaximizeOptions::default()
        };
        Ok(Self {
            inner: g.build_with(state.map(|st| &st.inner), order(s)?, &opts).map_err(err)?,
        })
    }

    #[getter]
    fn shape(&self) -> &'static str {
        self.inner.shape.name()
    }

    /// Signed test points as `(sign, q, p)`.
    fn vertices(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .points()
            .into_iter()
            .map(|(v, pt)| (v.sign(), pt.q, pt.p))
            .collect()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Geometry({}, theta={:.4})", self.inner.shape.name(), self.inner.theta)
    }
}

/// Value of the test functional only.
#[pyfunction]
#[pyo3(signature = (state, geometry, s = 0.0))]
fn test_value(state: &PyState, geometry: &PyGeometry, s: f64) -> PyResult<f64> {
    Ok(functionals::test_value(&state.inner, &geometry.inner, order(s)?))
}

/// Full verdict: value, bounds, margins and the labelled points.
#[pyfunction]
#[pyo3(signature = (state, geometry, s = 0.0))]
fn evaluate<'py>(py: Python<'py>, state: &PyState, geometry: &PyGeometry, s: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &functionals::evaluate(&state.inner, &geometry.inner, order(s)?))
}

/// `(lower, upper)` range any state can reach.
#[pyfunction]
#[pyo3(signature = (s, three_point = false))]
fn algebraic_range(s: f64, three_point: bool) -> PyResult<(f64, f64)> {
    Ok(functionals::algebraic_range(order(s)?, three_point))
}

/// Largest value over Gaussian states with its maximiser.
#[pyfunction]
#[pyo3(signature = (s = 0.0, shape = "rectangle"))]
fn gaussian_max<'py>(py: Python<'py>, s: f64, shape: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &bounds::gaussian_max(order(s)?, self::shape(shape)?))
}

#[pyfunction]
#[pyo3(signature = (s = 0.0, three_point = false))]
fn gaussian_mixture_bound(s: f64, three_point: bool) -> PyResult<f64> {
    Ok(bounds::gaussian_mixture_bound(order(s)?, three_point))
}

/// Extremal eigenvalues of the Fock-truncated test operator at fixed sides.
#[pyfunction]
#[pyo3(signature = (s, d_q, d_p, dim = 150, shape = "rectangle"))]
fn eigenbounds<'py>(py: Python<'py>, s: f64, d_q: f64, d_p: f64, dim: usize, shape: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &bounds::fock_eigenbounds(order(s)?, d_q, d_p, dim, self::shape(shape)?))
}

/// Quantum maximum over the side lengths.
#[pyfunction]
#[pyo3(signature = (s, shape = "rectangle", dim = 150, starts = 16, max_evals = 300, seed = 7))]
fn quantum_bound<'py>(
    py: Python<'py>,
    s: f64,
    shape: &str,
    dim: usize,
    starts: usize,
    max_evals: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = CurveOptions {
        dim,
        starts,
        max_evals,
        seed,
    };
    let (s, kind) = (order(s)?, self::shape(shape)?);
    let b = py.detach(|| bounds::optimise_eigenbound(s, kind, &opts, None));
    to_py(py, &b)
}

/// Smallest transmittance at which optimised `n_trunc`-photon superpositions
/// still exceed the Gaussian bound by `margin`.
#[pyfunction]
#[pyo3(signature = (objective, n_trunc, s = 0.0, margin = optimize::DEFAULT_ETA_MARGIN, tol = 1e-3, seed = 0))]
fn critical_eta<'py>(
    py: Python<'py>,
    objective: &str,
    n_trunc: usize,
    s: f64,
    margin: f64,
    tol: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let obj: Objective = objective.parse().map_err(err)?;
    let s = order(s)?;
    let opts = MaximizeOptions {
        seed,
        ..MaximizeOptions::default()
    };
    let r = py.detach(|| optimize::critical_eta(obj, n_trunc, s, margin, tol, &opts)).map_err(err)?;
    to_py(py, &r)
}

/// Bridge quantities for one state: at a given geometry, or optimised.
#[pyfunction]
#[pyo3(signature = (state, geometry = None, seed = 0))]
fn bridge<'py>(py: Python<'py>, state: &PyState, geometry: Option<&PyGeometry>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let r = match geometry {
        Some(g) => bridge_point(&state.inner, &g.inner, f64::NAN),
        None => {
            let opts = MaximizeOptions {
                seed,
                ..MaximizeOptions::default()
            };
            let st = state.inner.clone();
            py.detach(|| optimal_bridge(&st, f64::NAN, &opts)).map_err(err)?
        }
    };
    to_py(py, &r)
}

/// Member of a bridge family: `squeezed_vacuum` (parameter r) or
/// `vacuum_two_photon` (parameter f).
#[pyfunction]
fn bridge_state(family: &str, parameter: f64) -> PyResult<PyState> {
    let fam = match family {
        "squeezed_vacuum" => BridgeFamily::SqueezedVacuum,
        "vacuum_two_photon" => BridgeFamily::VacuumTwoPhoton,
        other => return Err(PyValueError::new_err(format!("unknown family {other:?}"))),
    };
    Ok(PyState {
        inner: fam.state(parameter).map_err(err)?,
    })
}

#[pymodule]
#[pyo3(name = "phasebell")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_class::<PyGeometry>()?;
    m.add_function(wrap_pyfunction!(test_value, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(algebraic_range, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_max, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_mixture_bound, m)?)?;
    m.add_function(wrap_pyfunction!(eigenbounds, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_bound, m)?)?;
    m.add_function(wrap_pyfunction!(critical_eta, m)?)?;
    m.add_function(wrap_pyfunction!(bridge, m)?)?;
    m.add_function(wrap_pyfunction!(bridge_state, m)?)?;
    m.add("FOUR_POINT_GAUSSIAN_BOUND", phasebell::four_point_gaussian_bound())?;
    m.add("THREE_POINT_GAUSSIAN_BOUND", phasebell::THREE_POINT_GAUSSIAN_BOUND)?;
    Ok(())
}
