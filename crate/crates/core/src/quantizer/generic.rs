//! Generic quantization by quadrature over the group.
//!
//! In group coordinates the invariant measure is `dξ dη / η²`. With
//! `ξ = k η` and `s = ln η` it becomes `dk ds`, and the overlaps become
//!
//! ```text
//! ⟨ξ,η|e_n⟩ = v_n(k; s) = ∫ du e^{-iku} a_n(u),   a_n(u) = Φ*(u) e_n(u/η) / u,
//! ```
//!
//! a Fourier transform in the fiducial frame whose oscillation count does not
//! depend on `η`. For each `s` the transform is evaluated for `|k| ≤ p_max`
//! from uniform samples of `a_n`, and the mass outside that band is measured
//! against Plancherel's `∫ |v_n|² dk = 2π ∫ |a_n|² du`. If that neglected
//! part could move a matrix entry by more than the tolerance, the path
//! refuses with a resolution error.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use super::{Observable, QuantizeOptions, SUPPORT_THRESHOLD};
use crate::affine::Parametrization;
use crate::error::{Error, Result};
use crate::fiducial::FiducialVector;
use crate::hilbert::BasisSet;
use crate::quadrature::{hermite_functions, hermite_functions_into, PanelRule};

type C64 = Complex64;

pub(super) fn matrix(
    f: &Observable,
    param: &Parametrization,
    phi: &FiducialVector,
    basis: &Arc<BasisSet>,
    opts: &QuantizeOptions,
) -> Result<Array2<C64>> {
    let kmax = opts.p_max;
    if !(kmax > 0.0) || !kmax.is_finite() {
        return Err(Error::Domain(format!("p_max must be positive, got {kmax}")));
    }
    let n = basis.size();
    let yb = basis.log_support(SUPPORT_THRESHOLD);
    let (lu, hu) = phi.log_support(SUPPORT_THRESHOLD);
    let norm = 1.0 / (2.0 * PI * phi.a());
    let s_width = 0.5f64.min(1.2 / (2.0 * n as f64 + 1.0).sqrt());
    let (s0, s1) = (lu - yb, hu + yb);
    let s_rule = PanelRule::uniform(s0, s1, ((s1 - s0) / s_width).ceil() as usize, 8);
    let real = phi.is_real();

    let observable = |xi: f64, eta: f64| -> Result<f64> {
        let pt = param.pull_back(xi, eta)?;
        Ok(f.eval(pt.p, pt.q))
    };

    let mut acc = Array2::<C64>::zeros((n, n));
    let mut neglected = 0.0;
    let mut masses = Vec::with_capacity(s_rule.len());
    let mut slices = Vec::with_capacity(s_rule.len());
    for (&s, &ws) in s_rule.nodes.iter().zip(&s_rule.weights) {
        let eta = s.exp();
        let ulo = lu.max(s - yb).exp();
        let uhi = hu.min(s + yb).exp();
        if ulo >= uhi {
            continue;
        }
        // 2π ∫ |a_n|² du, on panels in ln u
        let (la, lb) = (ulo.ln(), uhi.ln());
        let mass_rule = PanelRule::uniform(la, lb, ((lb - la) / 0.05).ceil().max(1.0) as usize, 8);
        let mut mass = vec![0.0; n];
        let mut h = vec![0.0; n];
        for (&y, &w) in mass_rule.nodes.iter().zip(&mass_rule.weights) {
            let d = phi.density(y.exp()) * (-y).exp() * w * 2.0 * PI;
            hermite_functions_into(y - s, &mut h);
            for k in 0..n {
                mass[k] += d * h[k] * h[k];
            }
        }
        let mmax = mass.iter().cloned().fold(0.0, f64::max);
        masses.push(mmax);
        slices.push((s, ws, eta, ulo, uhi, mass));
    }
    let peak_mass = masses.iter().cloned().fold(0.0, f64::max);
    // per-slice density bounds |F|·mass, for the divergence test in s
    let mut bounds = Vec::new();

    for (s, ws, eta, ulo, uhi, mass) in slices {
        let mmax = mass.iter().cloned().fold(0.0, f64::max);
        if mmax <= 1e-18 * peak_mass {
            continue;
        }
        let len = uhi - ulo;
        // k grid: Poisson aliasing of ∫ F |v|² dk sits at 2π/δk ≥ 3 len
        let dk0 = 2.0 * PI / (3.0 * len);
        let nk = (kmax / dk0).ceil() as usize;
        let dk = kmax / nk as f64;
        // u grid: aliases of v(k) sit at |k| ≥ 2π/δu - kmax ≥ 3 kmax
        let du0 = (PI / (2.0 * kmax)).min(len / 32.0);
        let nu = (len / du0).ceil() as usize;
        let du = len / nu as f64;

        let mut fvals = Vec::with_capacity(2 * nk + 1);
        let mut fmax: f64 = 0.0;
        for l in 0..=(2 * nk) {
            let k = (l as f64 - nk as f64) * dk;
            let v = observable(k * eta, eta)?;
            if !v.is_finite() {
                return Err(Error::Divergence(format!("observable `{}` is not finite at ξ = {}, η = {eta}", f.label(), k * eta)));
            }
            fmax = fmax.max(v.abs());
            fvals.push(v);
        }
        let weight = ws * norm;
        bounds.push(fmax * mmax * norm);
        if fmax * mmax * weight == 0.0 {
            continue;
        }

        // samples τ_j a_n(u_j)
        let mut a = vec![C64::new(0.0, 0.0); (nu + 1) * n];
        let mut base = Vec::with_capacity(nu + 1);
        for j in 0..=nu {
            let u = ulo + j as f64 * du;
            let tau = if j == 0 || j == nu { 0.5 * du } else { du };
            let pre = phi.eval(u).conj() * (tau / u);
            let e = hermite_functions(n, u.ln() - s);
            for k in 0..n {
                a[j * n + k] = pre * e[k];
            }
            base.push(C64::from_polar(1.0, -dk * u));
        }

        let mut phase = vec![C64::new(1.0, 0.0); nu + 1];
        let mut vp = vec![C64::new(0.0, 0.0); n];
        let mut vm = vec![C64::new(0.0, 0.0); n];
        let mut captured = vec![0.0; n];
        for l in 0..=nk {
            vp.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            vm.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            for j in 0..=nu {
                let ph = phase[j];
                let row = &a[j * n..(j + 1) * n];
                for k in 0..n {
                    vp[k] += ph * row[k];
                }
                if !real {
                    let phc = ph.conj();
                    for k in 0..n {
                        vm[k] += phc * row[k];
                    }
                }
                phase[j] = ph * base[j];
            }
            if real {
                for k in 0..n {
                    vm[k] = vp[k].conj();
                }
            }
            let wk = if l == nk { 0.5 * dk } else { dk };
            let fp = fvals[nk + l];
            add_outer(&mut acc, &vp, wk * fp * weight);
            for k in 0..n {
                captured[k] += wk * vp[k].norm_sqr();
            }
            if l > 0 {
                let fm = fvals[nk - l];
                add_outer(&mut acc, &vm, wk * fm * weight);
                for k in 0..n {
                    captured[k] += wk * vm[k].norm_sqr();
                }
            }
        }
        // largest |F| on the outer quarter of the band stands in for |F| beyond it
        let outer = nk - nk / 4;
        let edge_f = fvals[..=(nk - outer)]
            .iter()
            .chain(&fvals[(nk + outer)..])
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let missing = mass.iter().zip(&captured).map(|(m, c)| (m - c).max(0.0)).fold(0.0, f64::max);
        neglected += weight * edge_f * missing;
    }
    if let (Some(&first), Some(&last)) = (bounds.first(), bounds.last()) {
        let top = bounds.iter().cloned().fold(0.0, f64::max);
        if first.max(last) > 1e-8 * top {
            return Err(Error::Divergence(format!(
                "integrand of `{}` does not decay at the ends of the ln η range",
                f.label()
            )));
        }
    }
    if neglected > opts.generic_tolerance {
        return Err(Error::Resolution {
            limit: kmax,
            detail: format!(
                "oscillations beyond |ξ|/η = {kmax} carry an estimated {neglected:.3e} > {:.1e} of the operator",
                opts.generic_tolerance
            ),
        });
    }
    Ok(acc)
}

/// `acc += c · v* vᵀ`, i.e. `acc_mn += c conj(v_m) v_n`.
fn add_outer(acc: &mut Array2<C64>, v: &[C64], c: f64) {
    if c == 0.0 {
        return;
    }
    let n = v.len();
    for m in 0..n {
        let vm = v[m].conj() * c;
        for k in 0..n {
            acc[[m, k]] += vm * v[k];
        }
    }
}
