//! Closed-form position and dilation operators of the built-in parametrizations:
//!
//! ```text
//! q̂₁ = 1/(A x),        d̂₁ψ = -(i/A) (ψ/x)',
//! q̂₂ = (B/A) x,        d̂₂ψ = -i (B/A) x ψ'.
//! ```

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use super::Special;
use crate::affine::BuiltIn;
use crate::error::Result;
use crate::fiducial::FiducialVector;
use crate::hilbert::BasisSet;
use crate::quadrature::hermite_function_derivatives;

type C64 = Complex64;

pub(super) fn matrix(special: Special, param: BuiltIn, phi: &FiducialVector, basis: &Arc<BasisSet>) -> Result<Array2<C64>> {
    let a = phi.a();
    Ok(match (special, param) {
        (Special::Position, BuiltIn::Param1) => basis.multiplication_matrix(|x| C64::new(1.0 / (a * x), 0.0)),
        (Special::Position, BuiltIn::Param2) => {
            let b = phi.b()?;
            basis.multiplication_matrix(|x| C64::new(b / a * x, 0.0))
        }
        (Special::Dilation, BuiltIn::Param1) => dilation_param1(a, basis),
        (Special::Dilation, BuiltIn::Param2) => log_derivative(basis) * C64::new(0.0, -phi.b()? / a),
    })
}

/// `⟨h_m|h_n'⟩` from `h_n' = √(n/2) h_{n-1} - √((n+1)/2) h_{n+1}`; this is
/// `⟨e_m| x d/dx |e_n⟩` in `L²(ℝ₊, dx/x)`.
pub(crate) fn log_derivative(basis: &BasisSet) -> Array2<C64> {
    let n = basis.size();
    let mut d = Array2::<C64>::zeros((n, n));
    for k in 1..n {
        let v = (k as f64 / 2.0).sqrt();
        d[[k - 1, k]] = C64::new(v, 0.0);
        d[[k, k - 1]] = C64::new(-v, 0.0);
    }
    d
}

/// `-(i/A) ⟨e_m| (·/x)' e_n⟩`, written in the manifestly Hermitian form
/// `-(i/2A) ∫ dy e^{-2y} (h_m h_n' - h_m' h_n)`.
fn dilation_param1(a: f64, basis: &BasisSet) -> Array2<C64> {
    let n = basis.size();
    let grid = basis.grid();
    let mut m = Array2::<f64>::zeros((n, n));
    for (i, (&y, &w)) in grid.log_nodes().iter().zip(grid.weights()).enumerate() {
        let h = basis.at_node(i);
        let dh = hermite_function_derivatives(n, y);
        let c = w * (-2.0 * y).exp();
        for r in 0..n {
            for k in 0..n {
                m[[r, k]] += c * (h[r] * dh[k] - dh[r] * h[k]);
            }
        }
    }
    m.mapv(|v| C64::new(0.0, -v / (2.0 * a)))
}
