//! Python bindings: fiducial vectors, bases, parametrizations, observables,
//! quantization and the analysis reports.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use acsq::affine::{BuiltIn, Parametrization as CoreParam, PhasePoint};
use acsq::analysis;
use acsq::expr::{parse_expression, Expr as CoreExpr};
use acsq::fiducial::FiducialVector;
use acsq::hilbert::{make_basis, BasisSet};
use acsq::quantizer::{self, GaussianProfile, Observable as CoreObservable, ObservableKind, OperatorMatrix, QuantizeOptions};
use acsq::Error;

create_exception!(acsq_py, AcsqError, PyException);
create_exception!(acsq_py, DivergenceError, AcsqError);
create_exception!(acsq_py, ResolutionError, AcsqError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Syntax { .. } | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        Error::Divergence(_) => DivergenceError::new_err(e.to_string()),
        Error::Resolution { .. } => ResolutionError::new_err(e.to_string()),
        _ => AcsqError::new_err(e.to_string()),
    }
}

/// `Φ(x) = c x^α e^{-βx}`, normalized.
#[pyclass(frozen, name = "Fiducial")]
struct Fiducial(FiducialVector);

#[pymethods]
impl Fiducial {
    #[new]
    fn new(alpha: f64, beta: f64) -> PyResult<Self> {
        FiducialVector::family(alpha, beta, false).map(Self).map_err(to_py)
    }

    /// Tabulated profile from a two-column text file `x Φ(x)`.
    #[staticmethod]
    fn from_table_file(path: &str) -> PyResult<Self> {
        FiducialVector::from_table_file(Path::new(path)).map(Self).map_err(to_py)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a()
    }

    #[getter]
    fn b(&self) -> PyResult<f64> {
        self.0.b().map_err(to_py)
    }

    #[getter]
    fn tag(&self) -> String {
        self.0.tag().to_string()
    }

    fn __call__(&self, x: f64) -> Complex64 {
        self.0.eval(x)
    }
}

/// Orthonormal basis `e_n(x) = h_n(ln x)`, `n < size`.
#[pyclass(frozen, name = "Basis")]
struct Basis(Arc<BasisSet>);

#[pymethods]
impl Basis {
    #[new]
    #[pyo3(signature = (size, grid_order = 96))]
    fn new(size: usize, grid_order: usize) -> PyResult<Self> {
        make_basis(size, grid_order).map(Self).map_err(to_py)
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    fn gram_deviation(&self) -> f64 {
        self.0.gram_deviation()
    }

    fn eval(&self, n: usize, x: f64) -> f64 {
        self.0.eval(n, x)
    }
}

#[pyclass(frozen, name = "Parametrization")]
struct Parametrization(CoreParam);

#[pymethods]
impl Parametrization {
    /// `param1` or `param2`.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        CoreParam::by_name(name).map(Self).ok_or_else(|| PyValueError::new_err(format!("unknown built-in `{name}`")))
    }

    /// `ξ(p, q)` and `η(p, q)` given as expressions.
    #[staticmethod]
    fn custom(name: &str, xi: &str, eta: &str) -> PyResult<Self> {
        let xi = parse_expression(xi).map_err(to_py)?;
        let eta = parse_expression(eta).map_err(to_py)?;
        CoreParam::custom(name, move |p, q| xi.eval_or_nan(p, q), move |p, q| eta.eval_or_nan(p, q))
            .build()
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    fn sigma(&self, p: f64, q: f64) -> f64 {
        self.0.sigma(p, q)
    }

    fn compose(&self, a: (f64, f64), b: (f64, f64)) -> PyResult<(f64, f64)> {
        let pa = PhasePoint::new(a.0, a.1).map_err(to_py)?;
        let pb = PhasePoint::new(b.0, b.1).map_err(to_py)?;
        let c = self.0.compose(pa, pb).map_err(to_py)?;
        Ok((c.p, c.q))
    }
}

/// Phase-space function `f(p, q)` with a declared structure in `p`.
#[pyclass(frozen, name = "Observable")]
struct Observable(CoreObservable);

#[pymethods]
impl Observable {
    /// `kind` is `p-independent`, `linear-in-p`, `separable-gaussian-p` or `generic`;
    /// `profile` is `(amplitude, center, width)` for the Gaussian kind.
    #[new]
    #[pyo3(signature = (kind, label, exprs, profile = None))]
    fn new(kind: &str, label: &str, exprs: Vec<String>, profile: Option<(f64, f64, f64)>) -> PyResult<Self> {
        let kind = match kind {
            "p-independent" => ObservableKind::PIndependent,
            "linear-in-p" => ObservableKind::LinearInP,
            "separable-gaussian-p" => ObservableKind::SeparableGaussianP,
            "generic" => ObservableKind::Generic,
            other => return Err(PyValueError::new_err(format!("unknown observable kind `{other}`"))),
        };
        let exprs = exprs.iter().map(|s| parse_expression(s)).collect::<Result<Vec<_>, _>>().map_err(to_py)?;
        let profile = profile.map(|(amplitude, center, width)| GaussianProfile { amplitude, center, width });
        CoreObservable::from_exprs(kind, label, &exprs, profile).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn position() -> Self {
        Self(CoreObservable::position())
    }

    #[staticmethod]
    fn dilation() -> Self {
        Self(CoreObservable::dilation())
    }

    #[staticmethod]
    fn constant(c: f64) -> Self {
        Self(CoreObservable::constant(c))
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label().to_string()
    }

    /// `f(p, 1/q)`.
    fn q_inverted(&self) -> Self {
        Self(self.0.q_inverted())
    }

    fn __call__(&self, p: f64, q: f64) -> f64 {
        self.0.eval(p, q)
    }
}

/// Parsed arithmetic expression in `p` and `q`.
#[pyclass(frozen, name = "Expression")]
struct Expression(CoreExpr);

#[pymethods]
impl Expression {
    #[new]
    fn new(src: &str) -> PyResult<Self> {
        parse_expression(src).map(Self).map_err(to_py)
    }

    fn __call__(&self, p: f64, q: f64) -> PyResult<f64> {
        self.0.eval(p, q).map_err(to_py)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

#[pyclass(frozen, name = "Operator")]
struct Operator(OperatorMatrix);

#[pymethods]
impl Operator {
    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    /// `closed-form`, `reduced-quadrature` or `generic-quadrature`.
    #[getter]
    fn path(&self) -> &'static str {
        match self.0.path() {
            quantizer::QuantizationPath::ClosedForm => "closed-form",
            quantizer::QuantizationPath::ReducedQuadrature => "reduced-quadrature",
            quantizer::QuantizationPath::GenericQuadrature => "generic-quadrature",
        }
    }

    /// Rows of matrix entries.
    fn entries(&self) -> Vec<Vec<Complex64>> {
        self.0.entries().outer_iter().map(|r| r.to_vec()).collect()
    }

    fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    fn hermiticity_defect(&self) -> f64 {
        self.0.hermiticity_defect()
    }

    fn max_difference(&self, other: &Operator) -> PyResult<f64> {
        self.0.max_difference(&other.0).map_err(to_py)
    }
}

#[pyfunction]
#[pyo3(signature = (f, param, phi, basis, p_max = 40.0, generic_tolerance = 1e-7, force_generic = false))]
#[allow(clippy::too_many_arguments)]
fn quantize(
    py: Python<'_>,
    f: &Observable,
    param: &Parametrization,
    phi: &Fiducial,
    basis: &Basis,
    p_max: f64,
    generic_tolerance: f64,
    force_generic: bool,
) -> PyResult<Operator> {
    let opts = QuantizeOptions { p_max, generic_tolerance, force_generic };
    py.detach(|| quantizer::quantize_with(&f.0, &param.0, &phi.0, &basis.0, &opts)).map(Operator).map_err(to_py)
}

/// `∫ dμ |ξ,η⟩⟨ξ,η|` on the basis, which equals `2π A_Φ 𝟙`.
#[pyfunction]
fn resolution_of_identity(py: Python<'_>, param: &Parametrization, phi: &Fiducial, basis: &Basis) -> PyResult<Operator> {
    py.detach(|| quantizer::resolution_of_identity_matrix(&param.0, &phi.0, &basis.0)).map(Operator).map_err(to_py)
}

/// Analytic trace, or `None` when the trace integral is not stable.
#[pyfunction]
fn analytic_trace(py: Python<'_>, f: &Observable, param: &Parametrization, phi: &Fiducial) -> Option<f64> {
    py.detach(|| analysis::analytic_trace(&f.0, &param.0, &phi.0).value)
}

/// `(tr_param1, tr_param2, verdict)` with verdict `inequivalent`, `not-refuted` or `inconclusive`.
#[pyfunction]
fn trace_inequivalence(py: Python<'_>, f: &Observable, phi: &Fiducial) -> (Option<f64>, Option<f64>, &'static str) {
    let r = py.detach(|| analysis::trace_inequivalence_test(&f.0, &phi.0));
    let v = match r.verdict {
        analysis::InequivalenceVerdict::Inequivalent => "inequivalent",
        analysis::InequivalenceVerdict::NotRefuted => "not-refuted",
        analysis::InequivalenceVerdict::Inconclusive => "inconclusive",
    };
    (r.trace_param1, r.trace_param2, v)
}

/// `(verdict, value)` with verdict `bounded`, `divergent` or `inconclusive`.
#[pyfunction]
fn boundedness(py: Python<'_>, f: &Observable, param: &Parametrization, phi: &Fiducial) -> (&'static str, Option<f64>) {
    let c = py.detach(|| analysis::boundedness_certificate(&f.0, &param.0, &phi.0));
    let v = match c.verdict {
        analysis::BoundednessVerdict::Bounded => "bounded",
        analysis::BoundednessVerdict::Divergent => "divergent",
        analysis::BoundednessVerdict::Inconclusive => "inconclusive",
    };
    (v, c.integral_value)
}

/// `(interior_defect, opposite_sign_defect)` of the affine commutation relation.
#[pyfunction]
fn commutator_defect(py: Python<'_>, param: &str, phi: &Fiducial, basis: &Basis) -> PyResult<(f64, f64)> {
    let which = match param {
        "param1" => BuiltIn::Param1,
        "param2" => BuiltIn::Param2,
        other => return Err(PyValueError::new_err(format!("unknown built-in `{other}`"))),
    };
    let r = py.detach(|| analysis::commutator_check(which, &phi.0, &basis.0)).map_err(to_py)?;
    Ok((r.interior_defect, r.opposite_sign_defect))
}

/// Runs a configuration file; returns `(exit_code, summary)`.
#[pyfunction]
#[pyo3(signature = (config, command = None, out = "."))]
fn run(py: Python<'_>, config: &str, command: Option<&str>, out: &str) -> (i32, String) {
    py.detach(|| acsq::cli::run(Path::new(config), command, Path::new(out)))
}

#[pymodule]
pub fn acsq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AcsqError", m.py().get_type::<AcsqError>())?;
    m.add("DivergenceError", m.py().get_type::<DivergenceError>())?;
    m.add("ResolutionError", m.py().get_type::<ResolutionError>())?;
    m.add_class::<Fiducial>()?;
    m.add_class::<Basis>()?;
    m.add_class::<Parametrization>()?;
    m.add_class::<Observable>()?;
    m.add_class::<Expression>()?;
    m.add_class::<Operator>()?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(resolution_of_identity, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_trace, m)?)?;
    m.add_function(wrap_pyfunction!(trace_inequivalence, m)?)?;
    m.add_function(wrap_pyfunction!(boundedness, m)?)?;
    m.add_function(wrap_pyfunction!(commutator_defect, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
