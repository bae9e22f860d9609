//! Fibered quantization of `f = a · exp(-((p - c)/w)²) · g(q)`.
//!
//! The `dp` integral gives `a w √π e^{iκ(x-x')} e^{-(s w (x-x'))²/4}` with
//! `κ = s c + t`, so
//!
//! ```text
//! ⟨e_m|f̂|e_n⟩ = (a w √π / 2πA) ∫ dq σ g ∬ dν dν' b_m(x) G(x - x') b_n*(x'),
//! b_n(x) = e_n(x) Φ(ηx) e^{iκx}.
//! ```
//!
//! The double integral runs on panels in `y = ln x` that resolve the kernel
//! width `2/(|s| w)` and the phase `κx`; the kernel is banded.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use super::{Observable, SUPPORT_THRESHOLD};
use crate::affine::Fibration;
use crate::error::{Error, Result};
use crate::fiducial::FiducialVector;
use crate::hilbert::BasisSet;
use crate::quadrature::{hermite_functions, PanelRule};

type C64 = Complex64;

/// Range scanned in `ln q`.
const T_RANGE: f64 = 40.0;
const T_STEP: f64 = 0.05;
/// Slices whose weight bound is below this fraction of the largest are skipped.
const SLICE_CUTOFF: f64 = 1e-15;

pub(super) fn matrix(f: &Observable, fib: &Fibration, phi: &FiducialVector, basis: &Arc<BasisSet>) -> Result<Array2<C64>> {
    let profile = f.profile().ok_or_else(|| Error::Domain("observable has no Gaussian p-profile".into()))?;
    let g = |q: f64| f.g0(q).unwrap_or(f64::NAN);
    let n = basis.size();
    let yb = basis.log_support(SUPPORT_THRESHOLD);
    let (lu, hu) = phi.log_support(SUPPORT_THRESHOLD);
    let prefactor = profile.amplitude * profile.width * PI.sqrt() / (2.0 * PI * phi.a());

    // y-window of the x integrals for a given η
    let window = |eta: f64| ((-yb).max(lu - eta.ln()), yb.min(hu - eta.ln()));

    // Slice weight bound |σ g q| · ∫ dy |Φ(η e^y)|² over the window.
    let steps = (2.0 * T_RANGE / T_STEP).round() as usize;
    let ts: Vec<f64> = (0..=steps).map(|i| -T_RANGE + i as f64 * T_STEP).collect();
    let bound: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let q = t.exp();
            let eta = fib.eta(q);
            let (a, b) = window(eta);
            if a >= b {
                return 0.0;
            }
            let sigma = fib.reduced_weight(q) * fib.scale(q).abs();
            let mass = PanelRule::uniform(a, b, ((b - a) / 0.25).ceil() as usize, 4)
                .integrate(|y| phi.density(eta * y.exp()));
            (q * sigma * g(q)).abs() * mass
        })
        .collect();
    if bound.iter().any(|b| !b.is_finite()) {
        return Err(Error::Divergence(format!("observable `{}` is not finite on the phase-space slices", f.label())));
    }
    let peak = bound.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(Array2::zeros((n, n)));
    }
    let edge = bound[0].max(bound[steps]);
    if edge > 1e-10 * peak {
        return Err(Error::Divergence(format!(
            "weight of `{}` does not decay within |ln q| ≤ {T_RANGE} (edge/peak = {:e})",
            f.label(),
            edge / peak
        )));
    }
    let first = bound.iter().position(|&b| b > SLICE_CUTOFF * peak).unwrap();
    let last = bound.iter().rposition(|&b| b > SLICE_CUTOFF * peak).unwrap();
    let (t0, t1) = (ts[first.saturating_sub(1)], ts[(last + 1).min(steps)]);
    let t_width = 0.5f64.min(1.2 / (2.0 * n as f64 + 1.0).sqrt());
    let t_rule = PanelRule::uniform(t0, t1, ((t1 - t0) / t_width).ceil().max(1.0) as usize, 8);

    let mut acc = Array2::<C64>::zeros((n, n));
    for (&t, &wt) in t_rule.nodes.iter().zip(&t_rule.weights) {
        let q = t.exp();
        let gq = g(q);
        let eta = fib.eta(q);
        let s = fib.scale(q);
        let sigma = fib.reduced_weight(q) * s.abs();
        let coeff = wt * q * sigma * gq * prefactor;
        if coeff == 0.0 {
            continue;
        }
        let (a, b) = window(eta);
        if a >= b {
            continue;
        }
        let kappa = s * profile.center + fib.shift(q);
        let kernel_rate = s.abs() * profile.width / 2.0;
        slice(&mut acc, coeff, a, b, eta, kappa, kernel_rate, phi, n)?;
    }
    Ok(acc)
}

/// Adds `coeff ∬ dy dy' b_m(x) exp(-(rate (x - x'))²) b_n*(x')` to `acc`.
#[allow(clippy::too_many_arguments)]
fn slice(
    acc: &mut Array2<C64>,
    coeff: f64,
    a: f64,
    b: f64,
    eta: f64,
    kappa: f64,
    rate: f64,
    phi: &FiducialVector,
    n: usize,
) -> Result<()> {
    // kernel e-folding length in x is 1/rate
    let rule = PanelRule::graded(a, b, 8, |y| {
        let x = y.exp();
        let mut h = 0.25f64.min(0.75 / (rate * x));
        if kappa != 0.0 {
            h = h.min(1.5 / (kappa.abs() * x));
        }
        h
    });
    let m = rule.len();
    let xs: Vec<f64> = rule.nodes.iter().map(|y| y.exp()).collect();
    let mut bvals = vec![C64::new(0.0, 0.0); m * n];
    for (j, (&y, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let x = xs[j];
        let amp = phi.eval(eta * x) * C64::from_polar(w, kappa * x);
        let e = hermite_functions(n, y);
        for k in 0..n {
            bvals[j * n + k] = amp * e[k];
        }
    }
    // z_i = Σ_j G_ij conj(b_j), accumulated over pairs i ≤ j
    let reach = 6.5 / rate;
    let mut z = vec![C64::new(0.0, 0.0); m * n];
    for i in 0..m {
        let xi = xs[i];
        for k in 0..n {
            z[i * n + k] += bvals[i * n + k].conj();
        }
        for j in (i + 1)..m {
            let d = xs[j] - xi;
            if d > reach {
                break;
            }
            let gk = (-(rate * d) * (rate * d)).exp();
            for k in 0..n {
                let bj = bvals[j * n + k].conj() * gk;
                let bi = bvals[i * n + k].conj() * gk;
                z[i * n + k] += bj;
                z[j * n + k] += bi;
            }
        }
    }
    for i in 0..m {
        let bi = &bvals[i * n..(i + 1) * n];
        let zi = &z[i * n..(i + 1) * n];
        for r in 0..n {
            let br = bi[r] * coeff;
            for k in 0..n {
                acc[[r, k]] += br * zi[k];
            }
        }
    }
    if acc.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numeric("non-finite value in Gaussian kernel quadrature".into()));
    }
    Ok(())
}
