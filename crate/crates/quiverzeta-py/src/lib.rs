//! Python bindings for the quiverzeta engine.
//!
//! Exposes the main types (`Algebra`, `Rep`) and operations (zeta series by
//! either route, the closed forms, and the verifiers) to Python. Zeta
//! coefficients come back as arbitrary-precision Python ints keyed by
//! exponent tuples; verification reports come back as plain dicts matching
//! the CLI's JSON schema.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyTuple};

use quiverzeta::cli::{parse_rep, render, ParsedInput};
use quiverzeta::dirichlet::{abelian_zeta, heisenberg_amalgam_zeta, DirichletPoly};
use quiverzeta::engine::{
    self, verify_amalgam, verify_measure, verify_pairsum, verify_sum_lattice, VerifyReport,
};
use quiverzeta::model::{
    algebra_to_rep, amalgamate_algebra, amalgamate_rep, validate_lie, AdmissibleRep,
    NilpotentAlgebra,
};
use quiverzeta::padic::{CapSpec, PAdicContext};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Caps argument: a single uniform cap or a per-vertex mapping.
#[derive(FromPyObject)]
enum CapsArg {
    Uniform(u32),
    PerVertex(BTreeMap<String, u32>),
}

impl From<CapsArg> for CapSpec {
    fn from(c: CapsArg) -> CapSpec {
        match c {
            CapsArg::Uniform(k) => CapSpec::Uniform(k),
            CapsArg::PerVertex(m) => CapSpec::PerVertex(m),
        }
    }
}

fn context(p: u64, caps: CapsArg, limit: u64, parallel: bool) -> PyResult<PAdicContext> {
    Ok(PAdicContext::new(p, CapSpec::from(caps))
        .map_err(value_err)?
        .with_limit(limit)
        .with_parallel(parallel))
}

fn poly_to_dict<'py>(py: Python<'py>, poly: &DirichletPoly) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    for (exp, coeff) in poly.iter() {
        let key = PyTuple::new(py, exp.0.iter())?;
        if coeff.is_integer() {
            dict.set_item(key, coeff.numer().clone())?;
        } else {
            dict.set_item(key, (coeff.numer().clone(), coeff.denom().clone()))?;
        }
    }
    Ok(dict)
}

fn report_to_dict<'py>(py: Python<'py>, report: &VerifyReport) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(report).map_err(runtime_err)?;
    let json = PyModule::import(py, "json")?;
    json.call_method1("loads", (text,))
}

/// A class-two nilpotent algebra given by ranks and bracket constants.
#[pyclass(frozen)]
struct Algebra {
    inner: NilpotentAlgebra,
}

#[pymethods]
impl Algebra {
    /// Build from ranks and a bracket table `{(i, j): [c_1, ..., c_d]}`
    /// (1-indexed pairs; missing pairs are zero).
    #[new]
    #[pyo3(signature = (n, d, brackets=None))]
    fn new(n: u32, d: u32, brackets: Option<BTreeMap<(u32, u32), Vec<i64>>>) -> PyResult<Self> {
        let mut alg = NilpotentAlgebra::zero_structure(n, d);
        for ((i, j), coeffs) in brackets.unwrap_or_default() {
            if i == 0 || i > n || j == 0 || j > n {
                return Err(value_err(format!("bracket index ({i}, {j}) out of range")));
            }
            if coeffs.len() != d as usize {
                return Err(value_err(format!(
                    "bracket ({i}, {j}) needs {d} coefficients, got {}",
                    coeffs.len()
                )));
            }
            for (k, &c) in coeffs.iter().enumerate() {
                alg.set_c(i - 1, j - 1, k as u32, c);
            }
        }
        Ok(Algebra { inner: alg })
    }

    /// The Heisenberg Lie algebra.
    #[staticmethod]
    fn heisenberg() -> Self {
        Algebra {
            inner: NilpotentAlgebra::heisenberg(),
        }
    }

    /// The abelian algebra of rank n.
    #[staticmethod]
    fn abelian(n: u32) -> Self {
        Algebra {
            inner: NilpotentAlgebra::abelian(n),
        }
    }

    /// Parse the JSON document schema used by the CLI.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        match parse_rep(text).map_err(value_err)? {
            ParsedInput::Algebra(inner) => Ok(Algebra { inner }),
            ParsedInput::Rep(_) => Err(value_err("document is a representation, not an algebra")),
        }
    }

    fn to_json(&self) -> String {
        render(&ParsedInput::Algebra(self.inner.clone()))
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> u32 {
        self.inner.d()
    }

    /// True iff the bracket is anti-symmetric (Jacobi holds automatically).
    fn is_lie(&self) -> bool {
        validate_lie(&self.inner)
    }

    /// Amalgamated m-th power, gluing the copies along the central span.
    fn amalgamate(&self, m: u32) -> PyResult<Self> {
        Ok(Algebra {
            inner: amalgamate_algebra(&self.inner, m).map_err(value_err)?,
        })
    }

    /// The one-vertex representation with 2n loops whose subrepresentations
    /// are the two-sided ideals of the algebra.
    fn to_rep(&self) -> Rep {
        Rep {
            inner: algebra_to_rep(&self.inner),
        }
    }

    fn __repr__(&self) -> String {
        format!("Algebra(n={}, d={})", self.inner.n(), self.inner.d())
    }
}

/// An admissible quiver representation.
#[pyclass(frozen)]
struct Rep {
    inner: AdmissibleRep,
}

#[pymethods]
impl Rep {
    /// Parse the JSON document schema used by the CLI; algebra documents are
    /// converted through the dictionary.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Rep {
            inner: parse_rep(text).map_err(value_err)?.to_rep(),
        })
    }

    fn to_json(&self) -> String {
        render(&ParsedInput::Rep(self.inner.clone()))
    }

    #[getter]
    fn vertex_ids(&self) -> Vec<String> {
        self.inner.quiver().vertex_ids().to_vec()
    }

    /// Rank vector as a list of `(n1, n2)` pairs, one per vertex.
    #[getter]
    fn ranks(&self) -> Vec<(u32, u32)> {
        self.inner.ranks().to_vec()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.quiver().edge_count()
    }

    /// Amalgamated m-th power.
    fn amalgamate(&self, m: u32) -> PyResult<Self> {
        Ok(Rep {
            inner: amalgamate_rep(&self.inner, m).map_err(value_err)?,
        })
    }

    /// Truncated zeta series as `{exponent_tuple: coefficient}`.
    ///
    /// `oracle` selects the route: "pairsum" (default) or "direct".
    #[pyo3(signature = (p, caps, oracle="pairsum", limit=10_000_000, parallel=false))]
    fn zeta_coeffs<'py>(
        &self,
        py: Python<'py>,
        p: u64,
        caps: CapsArg,
        oracle: &str,
        limit: u64,
        parallel: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let ctx = context(p, caps, limit, parallel)?;
        let poly = match oracle {
            "pairsum" => engine::zeta_pairsum(&self.inner, &ctx),
            "direct" => engine::zeta_direct(&self.inner, &ctx),
            other => return Err(value_err(format!("unknown oracle {other:?}"))),
        }
        .map_err(runtime_err)?;
        poly_to_dict(py, &poly)
    }

    /// Check the amalgam rewrite identity at power m; returns a report dict.
    #[pyo3(signature = (m, p, caps, limit=10_000_000, parallel=false))]
    fn verify_amalgam<'py>(
        &self,
        py: Python<'py>,
        m: u32,
        p: u64,
        caps: CapsArg,
        limit: u64,
        parallel: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let ctx = context(p, caps, limit, parallel)?;
        let report = verify_amalgam(&self.inner, m, &ctx).map_err(runtime_err)?;
        report_to_dict(py, &report)
    }

    /// Check that direct enumeration matches the pair-sum expansion.
    #[pyo3(signature = (p, caps, limit=10_000_000, parallel=false))]
    fn verify_pairsum<'py>(
        &self,
        py: Python<'py>,
        p: u64,
        caps: CapsArg,
        limit: u64,
        parallel: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let ctx = context(p, caps, limit, parallel)?;
        let report = verify_pairsum(&self.inner, &ctx).map_err(runtime_err)?;
        report_to_dict(py, &report)
    }

    fn __repr__(&self) -> String {
        format!(
            "Rep(vertices={}, edges={})",
            self.inner.quiver().vertex_count(),
            self.inner.quiver().edge_count()
        )
    }
}

/// Coefficients of the rank-n free-module zeta function up to `cap`.
#[pyfunction]
fn abelian_zeta_coeffs(py: Python<'_>, n: u32, p: u64, cap: u32) -> PyResult<Py<PyDict>> {
    let ctx = PAdicContext::new(p, cap).map_err(value_err)?;
    let poly = abelian_zeta(n, 0, &ctx, &[cap]);
    Ok(poly_to_dict(py, &poly)?.into())
}

/// Coefficients of the amalgamated-Heisenberg closed form up to `cap`.
#[pyfunction]
fn heisenberg_amalgam_coeffs(py: Python<'_>, m: u32, p: u64, cap: u32) -> PyResult<Py<PyDict>> {
    let ctx = PAdicContext::new(p, cap).map_err(value_err)?;
    let poly = heisenberg_amalgam_zeta(m, &ctx, cap);
    Ok(poly_to_dict(py, &poly)?.into())
}

/// Number of sublattices of `Z_p^rank` of index `p^k`.
#[pyfunction]
fn count_sublattices(rank: usize, k: u32, p: u64) -> PyResult<num_bigint::BigUint> {
    if !(2..=u64::MAX).contains(&p) {
        return Err(value_err("p must be at least 2"));
    }
    Ok(quiverzeta::padic::sublattice_count(rank, k, p))
}

/// Good-basis measure of a diagonal profile, as a `(numerator, denominator)`
/// pair.
#[pyfunction]
fn good_basis_measure(
    profile: Vec<u32>,
    p: u64,
) -> PyResult<(num_bigint::BigInt, num_bigint::BigInt)> {
    let cap = profile.iter().copied().max().unwrap_or(0) + 2;
    let ctx = PAdicContext::new(p, cap).map_err(value_err)?;
    let m = quiverzeta::padic::good_basis_measure(&profile, &ctx);
    Ok((m.numer().clone(), m.denom().clone()))
}

/// Check the sum-of-projections identity at `(m, n)`; returns a report dict.
#[pyfunction]
#[pyo3(name = "verify_sum_lattice", signature = (m, n, p, cap, limit=10_000_000, parallel=false))]
fn verify_sum_lattice_py<'py>(
    py: Python<'py>,
    m: u32,
    n: u32,
    p: u64,
    cap: u32,
    limit: u64,
    parallel: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let ctx = context(p, CapsArg::Uniform(cap), limit, parallel)?;
    let report = verify_sum_lattice(m, n, &ctx, cap).map_err(runtime_err)?;
    report_to_dict(py, &report)
}

/// Check the good-basis measure against residue counting; returns a report
/// dict.
#[pyfunction]
#[pyo3(name = "verify_measure", signature = (max_rank, nu_max, p, limit=10_000_000))]
fn verify_measure_py<'py>(
    py: Python<'py>,
    max_rank: usize,
    nu_max: u32,
    p: u64,
    limit: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let ctx = context(p, CapsArg::Uniform(nu_max + 2), limit, false)?;
    let report = verify_measure(max_rank, nu_max, &ctx).map_err(runtime_err)?;
    report_to_dict(py, &report)
}

#[pymodule]
fn quiverzeta_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Algebra>()?;
    m.add_class::<Rep>()?;
    m.add_function(wrap_pyfunction!(abelian_zeta_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(heisenberg_amalgam_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(count_sublattices, m)?)?;
    m.add_function(wrap_pyfunction!(good_basis_measure, m)?)?;
    m.add_function(wrap_pyfunction!(verify_sum_lattice_py, m)?)?;
    m.add_function(wrap_pyfunction!(verify_measure_py, m)?)?;
    Ok(())
}
