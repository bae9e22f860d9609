//! Reduced quantization for fibered parametrizations `ξ = s(q) p + t(q)`,
//! `η = η(q)`, where the `dp` integral is done analytically.
//!
//! For `f = g(q)` the result is multiplication by
//! `F(x) = (A x)⁻¹ ∫ dq w(q) g(q) |Φ(η(q) x)|²` with `w = σ/|s|`.
//! For `f = g0(q) + p g1(q)` and real `Φ` it is
//!
//! ```text
//! ⟨e_m|f̂|e_n⟩ = ∫ dy F0 h_m h_n - (i/2A) ∫ dy W1 e^{-2y} (h_m h_n' - h_m' h_n),
//! ```
//!
//! with `F0` built from `g0 - t g1/s` as above and
//! `W1(x) = ∫ dq w (g1/s) |Φ(ηx)|²`.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{Observable, SUPPORT_THRESHOLD};
use crate::affine::Fibration;
use crate::error::{Error, Result};
use crate::fiducial::{FiducialVector, DIVERGENCE_GROWTH};
use crate::hilbert::BasisSet;
use crate::quadrature::{adaptive_gk, hermite_function_derivatives};

type C64 = Complex64;

/// `∫ dq w(q) h(q) |Φ(η(q) x)|²` over `ln q ∈ [-40, 40]`, compared against
/// `[-20, 20]` to detect divergence.
pub(crate) fn fiber_average(fib: &Fibration, phi: &FiducialVector, x: f64, h: &dyn Fn(f64) -> f64) -> Result<f64> {
    let integrand = |t: f64| {
        let q = t.exp();
        let d = phi.density(fib.eta(q) * x);
        if d == 0.0 {
            return 0.0;
        }
        q * fib.reduced_weight(q) * h(q) * d
    };
    let inner = adaptive_gk(integrand, -20.0, 20.0, 80, 1e-300, 1e-13, 4000);
    let outer_lo = adaptive_gk(integrand, -40.0, -20.0, 40, 1e-300, 1e-13, 2000);
    let outer_hi = adaptive_gk(integrand, 20.0, 40.0, 40, 1e-300, 1e-13, 2000);
    let total = inner.value + outer_lo.value + outer_hi.value;
    if !total.is_finite() {
        return Err(Error::Divergence(format!("fiber integral at x = {x:e} is not finite")));
    }
    let tail = outer_lo.value.abs() + outer_hi.value.abs();
    if tail > DIVERGENCE_GROWTH * total.abs() && tail > 1e-300 {
        return Err(Error::Divergence(format!(
            "fiber integral at x = {x:e} grows from {:e} to {total:e} when ln q widens from ±20 to ±40",
            inner.value
        )));
    }
    Ok(total)
}

/// Grid nodes carrying a non-negligible basis value.
fn active_nodes(basis: &BasisSet) -> Vec<usize> {
    let grid = basis.grid();
    (0..grid.len())
        .filter(|&i| {
            let w = grid.weights()[i].sqrt();
            basis.at_node(i).iter().any(|v| (v * w).abs() > SUPPORT_THRESHOLD * 1e-4)
        })
        .collect()
}

pub(super) fn p_independent(f: &Observable, fib: &Fibration, phi: &FiducialVector, basis: &Arc<BasisSet>) -> Result<Array2<C64>> {
    let g = |q: f64| f.g0(q).unwrap_or(f64::NAN);
    let a = phi.a();
    let n = basis.size();
    let grid = basis.grid();
    let nodes = active_nodes(basis);
    let fx = nodes
        .par_iter()
        .map(|&i| {
            let x = grid.nodes()[i];
            Ok(fiber_average(fib, phi, x, &g)? / (a * x))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut m = Array2::<f64>::zeros((n, n));
    for (&i, fx) in nodes.iter().zip(fx) {
        let c = grid.weights()[i] * fx;
        let e = basis.at_node(i);
        for r in 0..n {
            for k in 0..n {
                m[[r, k]] += c * e[r] * e[k];
            }
        }
    }
    Ok(m.mapv(|v| C64::new(v, 0.0)))
}

pub(super) fn linear_in_p(f: &Observable, fib: &Fibration, phi: &FiducialVector, basis: &Arc<BasisSet>) -> Result<Array2<C64>> {
    let g0 = |q: f64| f.g0(q).unwrap_or(f64::NAN);
    let g1 = |q: f64| f.g1(q).unwrap_or(f64::NAN);
    let mult = |q: f64| g0(q) - fib.shift(q) * g1(q) / fib.scale(q);
    let deriv = |q: f64| g1(q) / fib.scale(q);
    let a = phi.a();
    let n = basis.size();
    let grid = basis.grid();
    let nodes = active_nodes(basis);
    let fibers = nodes
        .par_iter()
        .map(|&i| {
            let x = grid.nodes()[i];
            Ok((fiber_average(fib, phi, x, &mult)? / (a * x), fiber_average(fib, phi, x, &deriv)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let mut re = Array2::<f64>::zeros((n, n));
    let mut im = Array2::<f64>::zeros((n, n));
    for (&i, (f0, w1)) in nodes.iter().zip(fibers) {
        let (y, w) = (grid.log_nodes()[i], grid.weights()[i]);
        let e = basis.at_node(i);
        let de = hermite_function_derivatives(n, y);
        let c0 = w * f0;
        let c1 = -w * w1 * (-2.0 * y).exp() / (2.0 * a);
        for r in 0..n {
            for k in 0..n {
                re[[r, k]] += c0 * e[r] * e[k];
                im[[r, k]] += c1 * (e[r] * de[k] - de[r] * e[k]);
            }
        }
    }
    Ok(Array2::from_shape_fn((n, n), |(r, k)| C64::new(re[[r, k]], im[[r, k]])))
}
