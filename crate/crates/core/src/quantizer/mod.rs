//! Coherent states `⟨x|ξ,η⟩ = e^{iξx} Φ(ηx)` and the quantization map
//!
//! ```text
//! f ↦ f̂ = (2π A_Φ)⁻¹ ∫ dp dq σ(p,q) f(p,q) |ξ(p,q), η(p,q)⟩⟨ξ(p,q), η(p,q)|
//! ```
//!
//! represented as a matrix on a truncated log-Hermite basis.

mod closed;
mod gaussian;
mod generic;
mod observable;
mod reduced;

use std::sync::Arc;

use ndarray::{s, Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::affine::{Parametrization, PhasePoint};
use crate::error::{Error, Result};
use crate::fiducial::FiducialVector;
use crate::hilbert::{BasisSet, StateVector};
use crate::quadrature::PanelRule;

pub use observable::{GaussianProfile, Observable, ObservableKind, Special, PQFn, QFn};

type C64 = Complex64;

/// Relative magnitude below which basis functions and fiducial profiles are
/// treated as zero when integration windows are chosen.
pub(crate) const SUPPORT_THRESHOLD: f64 = 1e-12;

pub const CLOSED_FORM_HERMITICITY_TOLERANCE: f64 = 1e-12;
pub const QUADRATURE_HERMITICITY_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_P_MAX: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantizationPath {
    ClosedForm,
    ReducedQuadrature,
    GenericQuadrature,
}

impl QuantizationPath {
    pub fn hermiticity_tolerance(self) -> f64 {
        match self {
            QuantizationPath::ClosedForm => CLOSED_FORM_HERMITICITY_TOLERANCE,
            _ => QUADRATURE_HERMITICITY_TOLERANCE,
        }
    }
}

/// Knobs of the quadrature paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizeOptions {
    /// Largest oscillation frequency resolved by the generic path, measured
    /// in the fiducial frame as `|ξ| / η`.
    pub p_max: f64,
    /// Admissible estimate of the neglected `|ξ|/η > p_max` contribution to
    /// any matrix entry of the generic path.
    pub generic_tolerance: f64,
    /// Skip the closed-form and reduced paths.
    pub force_generic: bool,
}

impl Default for QuantizeOptions {
    fn default() -> Self {
        Self { p_max: DEFAULT_P_MAX, generic_tolerance: 1e-7, force_generic: false }
    }
}

/// Truncated matrix `⟨e_m| f̂ |e_n⟩` of a quantized observable.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    entries: Array2<C64>,
    basis: Arc<BasisSet>,
    observable: String,
    parametrization: String,
    fiducial: String,
    path: QuantizationPath,
    hermiticity_defect: f64,
}

pub fn hermiticity_defect(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut d: f64 = 0.0;
    for a in 0..n {
        for b in a..n {
            d = d.max((m[[a, b]] - m[[b, a]].conj()).norm());
        }
    }
    d
}

impl OperatorMatrix {
    /// Wraps `entries`, checking finiteness and the path's Hermiticity tolerance.
    pub fn new(
        entries: Array2<C64>,
        basis: Arc<BasisSet>,
        observable: impl Into<String>,
        parametrization: impl Into<String>,
        fiducial: impl Into<String>,
        path: QuantizationPath,
    ) -> Result<Self> {
        if entries.nrows() != basis.size() || entries.ncols() != basis.size() {
            return Err(Error::BasisMismatch { expected: basis.size(), found: entries.nrows() });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric("operator matrix has non-finite entries".into()));
        }
        let defect = hermiticity_defect(&entries);
        let tol = path.hermiticity_tolerance();
        if defect > tol {
            return Err(Error::Accuracy { what: "Hermiticity of operator matrix".into(), achieved: defect, required: tol });
        }
        Ok(Self {
            entries,
            basis,
            observable: observable.into(),
            parametrization: parametrization.into(),
            fiducial: fiducial.into(),
            path,
            hermiticity_defect: defect,
        })
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn observable(&self) -> &str {
        &self.observable
    }

    pub fn parametrization(&self) -> &str {
        &self.parametrization
    }

    pub fn fiducial(&self) -> &str {
        &self.fiducial
    }

    pub fn path(&self) -> QuantizationPath {
        self.path
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.hermiticity_defect
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum()
    }

    /// Trace of the leading `k × k` block.
    pub fn partial_trace(&self, k: usize) -> C64 {
        self.entries.slice(s![..k, ..k]).diag().sum()
    }

    /// `max |M_mn - other_mn|`.
    pub fn max_difference(&self, other: &OperatorMatrix) -> Result<f64> {
        if self.size() != other.size() {
            return Err(Error::BasisMismatch { expected: self.size(), found: other.size() });
        }
        Ok(max_abs_diff(&self.entries, &other.entries))
    }
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `|ξ(p,q), η(p,q)⟩` for a parametrization and fiducial vector.
#[derive(Debug, Clone)]
pub struct CoherentState {
    point: PhasePoint,
    parametrization: Parametrization,
    fiducial: FiducialVector,
}

impl CoherentState {
    pub fn new(point: PhasePoint, parametrization: &Parametrization, fiducial: &FiducialVector) -> Self {
        Self { point, parametrization: parametrization.clone(), fiducial: fiducial.clone() }
    }

    pub fn point(&self) -> PhasePoint {
        self.point
    }

    pub fn parametrization(&self) -> &Parametrization {
        &self.parametrization
    }

    pub fn fiducial(&self) -> &FiducialVector {
        &self.fiducial
    }

    /// `(ξ, η)`.
    pub fn group_element(&self) -> (f64, f64) {
        self.parametrization.group_element(self.point)
    }
}

/// `⟨x|ξ,η⟩ = e^{iξx} Φ(ηx)`.
pub fn coherent_eval(cs: &CoherentState, x: f64) -> Result<C64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("x = {x} is not a positive real")));
    }
    let (xi, eta) = cs.group_element();
    Ok(C64::from_polar(1.0, xi * x) * cs.fiducial.eval(eta * x))
}

/// `⟨ξ,η|ψ⟩` with the default `p_max`.
pub fn overlap(cs: &CoherentState, psi: &StateVector) -> Result<C64> {
    overlap_with(cs, psi, DEFAULT_P_MAX)
}

/// `⟨ξ,η|ψ⟩ = ∫ dν(x) e^{-iξx} Φ*(ηx) ψ(x)` on panels in `y = ln x` whose
/// widths follow the local oscillation rate `|ξ| e^y`, confirmed by a second
/// pass at doubled resolution.
pub fn overlap_with(cs: &CoherentState, psi: &StateVector, p_max: f64) -> Result<C64> {
    let (xi, eta) = cs.group_element();
    if xi.abs() > p_max {
        return Err(Error::Resolution { limit: p_max, detail: format!("|ξ| = {} requested", xi.abs()) });
    }
    let basis = psi.basis();
    let yb = basis.log_support(SUPPORT_THRESHOLD);
    let (lu, hu) = cs.fiducial.log_support(SUPPORT_THRESHOLD);
    let (a, b) = ((-yb).max(lu - eta.ln()), yb.min(hu - eta.ln()));
    if a >= b {
        return Ok(C64::new(0.0, 0.0));
    }
    let coeffs = psi.coefficients();
    let integrate = |scale: f64| {
        let rule = PanelRule::graded(a, b, 12, |y| scale * (0.25f64).min(1.5 / (xi.abs() * y.exp()).max(1e-300)));
        let mut acc = C64::new(0.0, 0.0);
        for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
            let x = y.exp();
            let e = crate::quadrature::hermite_functions(basis.size(), y);
            let psi_x: C64 = coeffs.iter().zip(&e).map(|(c, v)| c * v).sum();
            acc += C64::from_polar(1.0, -xi * x) * cs.fiducial.eval(eta * x).conj() * psi_x * w;
        }
        acc
    };
    let coarse = integrate(1.0);
    let fine = integrate(0.5);
    let tol = 1e-10 * fine.norm().max(1.0);
    let gap = (fine - coarse).norm();
    if !(gap <= tol) {
        return Err(Error::Accuracy { what: "overlap quadrature two-resolution agreement".into(), achieved: gap, required: tol });
    }
    Ok(fine)
}

/// `∫ σ dp dq ⟨e_m|ξ,η⟩⟨ξ,η|e_n⟩`, which equals `2π A_Φ δ_mn` for an admissible `Φ`.
pub fn resolution_of_identity_matrix(
    param: &Parametrization,
    phi: &FiducialVector,
    basis: &Arc<BasisSet>,
) -> Result<OperatorMatrix> {
    let one = Observable::constant(1.0);
    let op = quantize(&one, param, phi, basis)?;
    let scale = 2.0 * std::f64::consts::PI * phi.a();
    let path = op.path();
    OperatorMatrix::new(op.into_entries() * C64::new(scale, 0.0), basis.clone(), "resolution-of-identity", param.name(), phi.tag(), path)
}

/// Quantizes `f` with default options.
pub fn quantize(f: &Observable, param: &Parametrization, phi: &FiducialVector, basis: &Arc<BasisSet>) -> Result<OperatorMatrix> {
    quantize_with(f, param, phi, basis, &QuantizeOptions::default())
}

/// Quantizes `f`, choosing the closed-form path for the built-in position and
/// dilation observables, the reduced paths (analytic `dp` integral) for
/// fibered parametrizations, and the generic path otherwise.
pub fn quantize_with(
    f: &Observable,
    param: &Parametrization,
    phi: &FiducialVector,
    basis: &Arc<BasisSet>,
    opts: &QuantizeOptions,
) -> Result<OperatorMatrix> {
    let (entries, path) = build_entries(f, param, phi, basis, opts)?;
    OperatorMatrix::new(entries, basis.clone(), f.label(), param.name(), phi.tag(), path)
}

fn build_entries(
    f: &Observable,
    param: &Parametrization,
    phi: &FiducialVector,
    basis: &Arc<BasisSet>,
    opts: &QuantizeOptions,
) -> Result<(Array2<C64>, QuantizationPath)> {
    if !opts.force_generic {
        if let (Some(special), Some(builtin)) = (f.special(), param.builtin_kind()) {
            if phi.is_real() {
                return Ok((closed::matrix(special, builtin, phi, basis)?, QuantizationPath::ClosedForm));
            }
        }
        if let Some(fib) = param.fibration() {
            let reduced = match f.kind() {
                ObservableKind::PIndependent => Some(reduced::p_independent(f, fib, phi, basis)?),
                ObservableKind::LinearInP if phi.is_real() => Some(reduced::linear_in_p(f, fib, phi, basis)?),
                ObservableKind::SeparableGaussianP => Some(gaussian::matrix(f, fib, phi, basis)?),
                _ => None,
            };
            if let Some(m) = reduced {
                return Ok((m, QuantizationPath::ReducedQuadrature));
            }
        }
    }
    Ok((generic::matrix(f, param, phi, basis, opts)?, QuantizationPath::GenericQuadrature))
}

/// `op · ψ` in coefficient space.
pub fn apply(op: &OperatorMatrix, psi: &StateVector) -> Result<StateVector> {
    if !Arc::ptr_eq(op.basis(), psi.basis()) && **op.basis() != **psi.basis() {
        return Err(Error::BasisMismatch { expected: op.size(), found: psi.basis().size() });
    }
    let c: Array1<C64> = op.entries().dot(psi.coefficients());
    StateVector::new(psi.basis().clone(), c)
}
