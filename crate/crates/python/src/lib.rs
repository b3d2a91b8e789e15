//! Python bindings.
//!
//! Scalars cross the boundary as exact strings (`"-3/5"`); `int`,
//! `fractions.Fraction` and `str` are all accepted on input. Magnitudes come
//! back as `Exponent` objects, never floats.
//!
//! ```python
//! import padic_uncertainty as pu
//! x = pu.PVector(5, ["3/5", "4/5"])
//! a = pu.Operator.dense(5, [[1, 0], [0, 2]])
//! pu.delta(a, x)          # Exponent(3)
//! ```

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use padic_uncertainty as core;
use padic_uncertainty::{CheckId, Dim, Exponent, Instance, POperator, PVector, Prime, Rational, Sign};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn prime(p: u64) -> PyResult<Prime> {
    Prime::new(p).map_err(err)
}

fn rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    let s = obj.str()?;
    s.to_cow()?.parse().map_err(err)
}

#[pyclass(name = "Exponent", frozen, eq, ord, hash, from_py_object)]
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct PyExponent(Exponent);

#[pymethods]
impl PyExponent {
    /// `2e`, or `None` for the magnitude of zero.
    #[getter]
    fn twice(&self) -> Option<i64> {
        self.0.twice()
    }

    #[getter]
    fn is_zero(&self) -> bool {
        self.0.is_zero_magnitude()
    }

    fn __repr__(&self) -> String {
        format!("Exponent({})", self.0)
    }
}

#[pyclass(name = "PVector", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PyVector(PVector);

#[pymethods]
impl PyVector {
    /// A vector of `Q^d` from all `d` coordinates.
    #[new]
    fn new(p: u64, values: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let values = values.iter().map(rational).collect::<PyResult<Vec<_>>>()?;
        Ok(PyVector(PVector::from_dense(prime(p)?, values).map_err(err)?))
    }

    /// A finitely supported `c0` vector from `{index: value}`.
    #[staticmethod]
    fn c0(p: u64, coords: BTreeMap<usize, Bound<'_, PyAny>>) -> PyResult<Self> {
        let coords = coords.iter().map(|(i, v)| Ok((*i, rational(v)?))).collect::<PyResult<Vec<_>>>()?;
        Ok(PyVector(PVector::from_coords(prime(p)?, Dim::C0, coords).map_err(err)?))
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        serde_json::from_str(s).map(PyVector).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(err)
    }

    #[getter]
    fn p(&self) -> u64 {
        self.0.prime().get()
    }

    /// Nonzero coordinates as `(index, "num/den")` pairs.
    fn coords(&self) -> Vec<(usize, String)> {
        self.0.coords().iter().map(|(i, v)| (*i, v.to_string())).collect()
    }

    fn norm(&self) -> PyExponent {
        PyExponent(self.0.norm())
    }

    fn inner(&self, other: PyRef<'_, PyVector>) -> PyResult<String> {
        self.0.inner(&other.0).map(|r| r.to_string()).map_err(err)
    }

    fn __add__(&self, other: PyRef<'_, PyVector>) -> PyResult<Self> {
        self.0.add(&other.0).map(PyVector).map_err(err)
    }

    fn __sub__(&self, other: PyRef<'_, PyVector>) -> PyResult<Self> {
        self.0.sub(&other.0).map(PyVector).map_err(err)
    }

    fn scale(&self, alpha: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyVector(self.0.scale(&rational(alpha)?)))
    }

    fn __repr__(&self) -> String {
        let coords: Vec<String> = self.0.coords().iter().map(|(i, v)| format!("{i}: {v}")).collect();
        format!("PVector(p={}, dim={}, {{{}}})", self.0.prime(), self.0.dim(), coords.join(", "))
    }
}

#[pyclass(name = "Operator", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PyOperator(POperator);

#[pymethods]
impl PyOperator {
    #[staticmethod]
    fn dense(p: u64, rows: Vec<Vec<Bound<'_, PyAny>>>) -> PyResult<Self> {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(rational).collect::<PyResult<Vec<_>>>())
            .collect::<PyResult<Vec<_>>>()?;
        POperator::from_rows(prime(p)?, rows).map(PyOperator).map_err(err)
    }

    /// Diagonal operator on `c0`; `rule` uses the `pow_p:-n` grammar.
    #[staticmethod]
    #[pyo3(signature = (p, entries, rule = "zero"))]
    fn diagonal(p: u64, entries: BTreeMap<usize, Bound<'_, PyAny>>, rule: &str) -> PyResult<Self> {
        let entries =
            entries.iter().map(|(i, v)| Ok((*i, rational(v)?))).collect::<PyResult<BTreeMap<_, _>>>()?;
        let rule = rule.parse().map_err(err)?;
        Ok(PyOperator(POperator::diagonal(prime(p)?, entries, rule)))
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        serde_json::from_str(s).map(PyOperator).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(err)
    }

    fn apply(&self, x: PyRef<'_, PyVector>) -> PyResult<PyVector> {
        self.0.apply(&x.0).map(PyVector).map_err(err)
    }

    fn adjoint(&self) -> Self {
        PyOperator(self.0.adjoint())
    }

    fn compose(&self, other: PyRef<'_, PyOperator>) -> PyResult<Self> {
        self.0.compose(&other.0).map(PyOperator).map_err(err)
    }

    fn commutator(&self, other: PyRef<'_, PyOperator>) -> PyResult<Self> {
        self.0.commutator(&other.0).map(PyOperator).map_err(err)
    }

    fn anticommutator(&self, other: PyRef<'_, PyOperator>) -> PyResult<Self> {
        self.0.anticommutator(&other.0).map(PyOperator).map_err(err)
    }

    fn is_selfadjoint(&self) -> bool {
        self.0.is_selfadjoint()
    }

    fn __repr__(&self) -> PyResult<String> {
        Ok(format!("Operator({})", self.to_json()?))
    }
}

#[pyclass(name = "Verdict", frozen, get_all)]
struct PyVerdict {
    check: String,
    holds: bool,
    tight: bool,
    degenerate: bool,
    lhs: PyExponent,
    rhs: PyExponent,
}

#[pymethods]
impl PyVerdict {
    fn __repr__(&self) -> String {
        format!("Verdict({}, holds={}, lhs={}, rhs={})", self.check, self.holds, self.lhs.0, self.rhs.0)
    }
}

impl From<core::Verdict> for PyVerdict {
    fn from(v: core::Verdict) -> Self {
        PyVerdict {
            check: v.check.name().to_string(),
            holds: v.holds,
            tight: v.tight,
            degenerate: v.degenerate,
            lhs: PyExponent(v.lhs),
            rhs: PyExponent(v.rhs),
        }
    }
}

#[pyfunction]
fn valuation(x: &Bound<'_, PyAny>, p: u64) -> PyResult<Option<i64>> {
    Ok(rational(x)?.valuation(prime(p)?))
}

#[pyfunction]
fn abs_exp(x: &Bound<'_, PyAny>, p: u64) -> PyResult<PyExponent> {
    Ok(PyExponent(rational(x)?.abs_exp(prime(p)?)))
}

#[pyfunction]
fn delta(a: PyRef<'_, PyOperator>, x: PyRef<'_, PyVector>) -> PyResult<PyExponent> {
    core::delta(&a.0, &x.0).map(PyExponent).map_err(err)
}

/// Runs one named check (`"HRS_i"`, …, `"NOTE_anticomm_double"`); the MP
/// checks need the witness `y`.
#[pyfunction]
#[pyo3(signature = (name, a, b, x, y = None))]
fn check(
    name: &str,
    a: PyRef<'_, PyOperator>,
    b: PyRef<'_, PyOperator>,
    x: PyRef<'_, PyVector>,
    y: Option<PyRef<'_, PyVector>>,
) -> PyResult<PyVerdict> {
    let id: CheckId = name.parse().map_err(err)?;
    let (a, b, x) = (&a.0, &b.0, &x.0);
    let v = match id {
        CheckId::HrsI => core::check_hrs_i(a, b, x),
        CheckId::HrsII => core::check_hrs_ii(a, b, x),
        CheckId::HrsIII => core::check_hrs_iii(a, b, x),
        CheckId::HrsIV => core::check_hrs_iv(a, b, x),
        CheckId::HrsV => core::check_hrs_v(a, b, x),
        CheckId::HrsVI => core::check_hrs_vi(a, b, x),
        CheckId::IdentII => core::check_identity_ii(a, b, x),
        CheckId::NoteCommZero => core::check_notes(a, b, x).map(|n| n.0),
        CheckId::NoteAnticommDouble => core::check_notes(a, b, x).map(|n| n.1),
        CheckId::MpPlus | CheckId::MpMinus => {
            let y = y.ok_or_else(|| err(format!("{id} needs a witness y")))?;
            let sign = if id == CheckId::MpPlus { Sign::Plus } else { Sign::Minus };
            core::check_mp(a, b, x, &y.0, sign)
        }
    };
    v.map(PyVerdict::from).map_err(err)
}

/// A vector of `Q^d` with `⟨x, x⟩ = 1` drawn from a seeded generator.
#[pyfunction]
#[pyo3(signature = (p, d, seed, size_bound = 16))]
fn sample_normalized(p: u64, d: usize, seed: u64, size_bound: u64) -> PyResult<PyVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    core::sample_normalized(prime(p)?, d, &mut rng, size_bound).map(PyVector).map_err(err)
}

/// Random `y` with `⟨x, y⟩ = 0` and `‖y‖ ≤ 1`.
#[pyfunction]
#[pyo3(signature = (x, seed, size_bound = 16))]
fn orthogonal_witness(x: PyRef<'_, PyVector>, seed: u64, size_bound: u64) -> PyResult<PyVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    core::orthogonal_witness(&x.0, &mut rng, size_bound).map(PyVector).map_err(err)
}

/// Evaluates every applicable check on an instance given as JSON.
#[pyfunction]
fn evaluate_instance(json: &str) -> PyResult<Vec<PyVerdict>> {
    let instance: Instance = serde_json::from_str(json).map_err(err)?;
    let verdicts = instance.evaluate().map_err(err)?;
    Ok(verdicts.into_iter().map(PyVerdict::from).collect())
}

/// Runs a campaign from a JSON config (all fields required, as in the
/// report's `config` echo) and returns the report as JSON.
#[pyfunction]
fn run_campaign(config_json: &str) -> PyResult<String> {
    let config: core::CampaignConfig = serde_json::from_str(config_json).map_err(err)?;
    let report = core::run_campaign(&config).map_err(err)?;
    serde_json::to_string(&report).map_err(err)
}

/// The default campaign config as a dict.
#[pyfunction]
fn default_config(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let json = serde_json::to_string(&core::CampaignConfig::default()).map_err(err)?;
    let loads = py.import("json")?.getattr("loads")?;
    Ok(loads.call1((json,))?.cast_into::<PyDict>()?)
}

#[pymodule]
#[pyo3(name = "padic_uncertainty")]
fn padic_uncertainty_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExponent>()?;
    m.add_class::<PyVector>()?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PyVerdict>()?;
    m.add_function(wrap_pyfunction!(valuation, m)?)?;
    m.add_function(wrap_pyfunction!(abs_exp, m)?)?;
    m.add_function(wrap_pyfunction!(delta, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(sample_normalized, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonal_witness, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}
