//! Traces of quantized observables, their dependence on the parametrization,
//! the boundedness certificate and the affine commutation relations.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{s, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::affine::{BuiltIn, Parametrization};
use crate::error::{Error, Result};
use crate::fiducial::{FiducialVector, DIVERGENCE_GROWTH};
use crate::hilbert::BasisSet;
use crate::quadrature::adaptive_gk;
use crate::quantizer::{quantize, Observable, OperatorMatrix};

type C64 = Complex64;

/// Half-widths `(P, U)` of the nested boxes `|p| ≤ P`, `|ln q| ≤ U`.
pub const NESTED_DOMAINS: [(f64, f64); 4] = [(5.0, 5.0), (10.0, 10.0), (20.0, 20.0), (40.0, 40.0)];

/// Rows and columns dropped from the end of the basis before commutators are compared.
pub const COMMUTATOR_MARGIN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub p_half_width: f64,
    pub log_q_half_width: f64,
}

/// `∬_{|p|≤P, |ln q|≤U} h(p, q) dp dq` by nested adaptive Gauss-Kronrod.
fn box_integral(h: &(dyn Fn(f64, f64) -> f64 + Sync), p_half: f64, u_half: f64) -> (f64, f64) {
    let inner = |u: f64| {
        let q = u.exp();
        let r = adaptive_gk(|p| h(p, q), -p_half, p_half, (2.0 * p_half).ceil() as usize, 1e-300, 1e-13, 4000);
        r.value * q
    };
    let r = adaptive_gk(inner, -u_half, u_half, (2.0 * u_half).ceil() as usize, 1e-300, 1e-12, 4000);
    (r.value, r.error)
}

/// Values on [`NESTED_DOMAINS`], stopping early on non-finite values.
fn nested(h: &(dyn Fn(f64, f64) -> f64 + Sync)) -> Vec<(Domain, f64, f64)> {
    let mut out = Vec::new();
    for &(p, u) in &NESTED_DOMAINS {
        let (v, e) = box_integral(h, p, u);
        out.push((Domain { p_half_width: p, log_q_half_width: u }, v, e));
        if !v.is_finite() {
            break;
        }
    }
    out
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b - a).abs() / b.abs().max(a.abs())
    }
}

/// `(2π A_Φ)⁻¹ ∬ σ f dp dq`, or a divergent flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTrace {
    pub value: Option<f64>,
    pub divergent: bool,
    /// Error estimate: quadrature error plus the change across the last nesting.
    pub tolerance: f64,
    pub nesting_trace: Vec<(Domain, f64)>,
}

pub fn analytic_trace(f: &Observable, param: &Parametrization, phi: &FiducialVector) -> AnalyticTrace {
    let norm = 1.0 / (2.0 * PI * phi.a());
    let h = |p: f64, q: f64| {
        let v = f.eval(p, q);
        if v == 0.0 {
            0.0
        } else {
            param.sigma(p, q) * v * norm
        }
    };
    let levels = nested(&h);
    let nesting_trace: Vec<(Domain, f64)> = levels.iter().map(|(d, v, _)| (*d, *v)).collect();
    let k = levels.len();
    let (last, err) = (levels[k - 1].1, levels[k - 1].2);
    let finite = last.is_finite() && k == NESTED_DOMAINS.len();
    let change = if finite { relative_change(levels[k - 2].1, last) } else { f64::INFINITY };
    let divergent = !finite || change > DIVERGENCE_GROWTH;
    let tolerance = if divergent { f64::INFINITY } else { err + (last - levels[k - 2].1).abs() + 1e-15 * last.abs() };
    AnalyticTrace { value: (!divergent).then_some(last), divergent, tolerance, nesting_trace }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub analytic_trace: Option<f64>,
    pub analytic_divergent: bool,
    pub numeric_trace: f64,
    pub truncation_n: usize,
    /// `|Tr_N - Tr_{N-2}|` from the leading `(N-2) × (N-2)` block.
    pub convergence_estimate: f64,
    pub parametrization: String,
}

impl TraceReport {
    /// `max(1e-3, 3 · convergence_estimate)`.
    pub fn allowed_gap(&self) -> f64 {
        (1e-3f64).max(3.0 * self.convergence_estimate)
    }

    pub fn gap(&self) -> Option<f64> {
        self.analytic_trace.map(|a| (a - self.numeric_trace).abs())
    }

    /// Numeric and analytic traces agree within [`Self::allowed_gap`].
    pub fn consistent(&self) -> Option<bool> {
        self.gap().map(|g| g <= self.allowed_gap())
    }
}

/// Diagonal sum of `op` with the `N - 2` convergence estimate; no analytic value.
pub fn numeric_trace(op: &OperatorMatrix) -> TraceReport {
    let n = op.size();
    let full = op.trace().re;
    let sub = op.partial_trace(n.saturating_sub(2)).re;
    TraceReport {
        analytic_trace: None,
        analytic_divergent: false,
        numeric_trace: full,
        truncation_n: n,
        convergence_estimate: (full - sub).abs(),
        parametrization: op.parametrization().to_string(),
    }
}

/// Quantizes `f` on `basis` and pairs its numeric trace with the analytic one.
pub fn trace_report(
    f: &Observable,
    param: &Parametrization,
    phi: &FiducialVector,
    basis: &Arc<BasisSet>,
) -> Result<TraceReport> {
    let op = quantize(f, param, phi, basis)?;
    let analytic = analytic_trace(f, param, phi);
    Ok(TraceReport { analytic_trace: analytic.value, analytic_divergent: analytic.divergent, ..numeric_trace(&op) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InequivalenceVerdict {
    /// The traces differ beyond tolerance: no unitary maps one quantization to the other.
    Inequivalent,
    /// The traces agree within tolerance.
    NotRefuted,
    /// The test does not apply (symmetric or non-trace-class observable).
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequivalenceReport {
    pub trace_param1: Option<f64>,
    pub trace_param2: Option<f64>,
    pub difference: Option<f64>,
    /// Ten times the combined quadrature tolerance of both traces.
    pub threshold: f64,
    pub verdict: InequivalenceVerdict,
    pub reason: String,
}

/// `max |f(p, q) - f(p, 1/q)|` relative to `max |f|` on a sample grid.
fn inversion_asymmetry(f: &Observable) -> f64 {
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..=24 {
        let p = -3.0 + 0.25 * i as f64;
        for j in 0..=24 {
            let q = (-3.0 + 0.25 * j as f64).exp();
            let (a, b) = (f.eval(p, q), f.eval(p, 1.0 / q));
            diff = diff.max((a - b).abs());
            scale = scale.max(a.abs()).max(b.abs());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Compares the traces of `f` under the two built-in parametrizations.
pub fn trace_inequivalence_test(f: &Observable, phi: &FiducialVector) -> InequivalenceReport {
    let t1 = analytic_trace(f, &Parametrization::param1(), phi);
    let t2 = analytic_trace(f, &Parametrization::param2(), phi);
    let threshold = 10.0 * (t1.tolerance + t2.tolerance);
    let difference = t1.value.zip(t2.value).map(|(a, b)| (a - b).abs());
    let (verdict, reason) = if inversion_asymmetry(f) <= 1e-12 {
        (InequivalenceVerdict::Inconclusive, "f(p, q) = f(p, 1/q): the trace comparison cannot separate the parametrizations".to_string())
    } else if t1.divergent || t2.divergent {
        (InequivalenceVerdict::Inconclusive, "f is not trace-class under both parametrizations".to_string())
    } else if difference.unwrap() > threshold {
        (InequivalenceVerdict::Inequivalent, "Tr₁ ≠ Tr₂ beyond quadrature tolerance".to_string())
    } else {
        (InequivalenceVerdict::NotRefuted, "Tr₁ = Tr₂ within quadrature tolerance".to_string())
    };
    InequivalenceReport { trace_param1: t1.value, trace_param2: t2.value, difference, threshold, verdict, reason }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundednessVerdict {
    Bounded,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessCertificate {
    /// `(2π A_Φ)⁻¹ ∬ |σ f| dp dq` on the largest domain, when stable.
    pub integral_value: Option<f64>,
    pub divergent: bool,
    pub verdict: BoundednessVerdict,
    pub nesting_trace: Vec<(Domain, f64)>,
}

/// Nested-domain test of `(2π A_Φ)⁻¹ ∬ |σ f| dp dq < ∞`, sufficient for `f̂` to be bounded.
pub fn boundedness_certificate(f: &Observable, param: &Parametrization, phi: &FiducialVector) -> BoundednessCertificate {
    let norm = 1.0 / (2.0 * PI * phi.a());
    let h = |p: f64, q: f64| {
        let v = f.eval(p, q);
        if v == 0.0 {
            0.0
        } else {
            (param.sigma(p, q) * v).abs() * norm
        }
    };
    let levels = nested(&h);
    let nesting_trace: Vec<(Domain, f64)> = levels.iter().map(|(d, v, _)| (*d, *v)).collect();
    let values: Vec<f64> = levels.iter().map(|l| l.1).collect();
    let k = values.len();
    let last = values[k - 1];
    let (verdict, value) = if !last.is_finite() || k < NESTED_DOMAINS.len() {
        (BoundednessVerdict::Divergent, None)
    } else if relative_change(values[k - 2], last) < DIVERGENCE_GROWTH {
        (BoundednessVerdict::Bounded, Some(last))
    } else if values.windows(2).all(|w| w[1] >= w[0]) {
        (BoundednessVerdict::Divergent, None)
    } else {
        (BoundednessVerdict::Inconclusive, None)
    };
    BoundednessCertificate {
        integral_value: value,
        divergent: verdict == BoundednessVerdict::Divergent,
        verdict,
        nesting_trace,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub parametrization: String,
    pub basis_size: usize,
    pub margin: usize,
    /// The relation tested, `[Q, D] = rhs`.
    pub relation: String,
    /// `max |([Q, D] - rhs)_{mn}|` over `m, n < N - margin`.
    pub interior_defect: f64,
    /// The same with the sign of `rhs` flipped.
    pub opposite_sign_defect: f64,
}

fn interior_max(m: &Array2<C64>, k: usize) -> f64 {
    m.slice(s![..k, ..k]).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Checks `[q̂₁, d̂₁] = i A_Φ q̂₁³` (param1) or `[q̂₂, d̂₂] = i (B_Φ/A_Φ) q̂₂`
/// (param2) on the closed-form operators, away from the truncation edge.
pub fn commutator_check(param: BuiltIn, phi: &FiducialVector, basis: &Arc<BasisSet>) -> Result<CommutatorReport> {
    if !phi.is_real() {
        return Err(Error::Domain("commutator check needs a real fiducial vector".into()));
    }
    let n = basis.size();
    if n <= COMMUTATOR_MARGIN {
        return Err(Error::Domain(format!("basis of size {n} has no interior block for margin {COMMUTATOR_MARGIN}")));
    }
    let p = Parametrization::builtin(param);
    let q = quantize(&Observable::position(), &p, phi, basis)?;
    let d = quantize(&Observable::dilation(), &p, phi, basis)?;
    let (q, d) = (q.entries(), d.entries());
    let c = q.dot(d) - d.dot(q);
    let a = phi.a();
    let (rhs, relation) = match param {
        BuiltIn::Param1 => (q.dot(q).dot(q) * C64::new(0.0, a), "[Q1, D1] = i A Q1^3"),
        BuiltIn::Param2 => (q * C64::new(0.0, phi.b()? / a), "[Q2, D2] = i (B/A) Q2"),
    };
    let k = n - COMMUTATOR_MARGIN;
    Ok(CommutatorReport {
        parametrization: p.name().to_string(),
        basis_size: n,
        margin: COMMUTATOR_MARGIN,
        relation: relation.to_string(),
        interior_defect: interior_max(&(&c - &rhs), k),
        opposite_sign_defect: interior_max(&(&c + &rhs), k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiducial::make_fiducial;
    use crate::hilbert::make_basis;
    use crate::quadrature::gauss_legendre;
    use crate::quantizer::GaussianProfile;

    fn bump(center: f64) -> Observable {
        Observable::separable_gaussian_p(
            format!("exp(-p^2)*exp(-(ln(q)-{center})^2)"),
            GaussianProfile { amplitude: 1.0, center: 0.0, width: 1.0 },
            move |q: f64| (-(q.ln() - center).powi(2)).exp(),
        )
        .unwrap()
    }

    /// Tensor Gauss-Legendre over `|p| ≤ 12`, `|ln q| ≤ 14` with 64-point panels of width 1.
    fn brute_force(h: impl Fn(f64, f64) -> f64) -> f64 {
        let (t, w) = gauss_legendre(64);
        let panels = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
            let n = (hi - lo).round() as usize;
            (0..n)
                .flat_map(|k| {
                    let a = lo + k as f64;
                    t.iter().zip(&w).map(move |(ti, wi)| (a + 0.5 + 0.5 * ti, 0.5 * wi))
                })
                .collect()
        };
        let ps = panels(-12.0, 12.0);
        let us = panels(-14.0, 14.0);
        let mut acc = 0.0;
        for &(u, wu) in &us {
            let q = u.exp();
            for &(p, wp) in &ps {
                acc += wu * wp * q * h(p, q);
            }
        }
        acc
    }

    #[test]
    fn analytic_traces_match_oracles() {
        let phi = make_fiducial(2.0, 1.0).unwrap();
        let f = bump(1.0);
        let a = phi.a();
        for (param, closed) in [
            (Parametrization::param1(), 0.75 * (-0.75f64).exp()),
            (Parametrization::param2(), 0.75 * (1.25f64).exp()),
        ] {
            let t = analytic_trace(&f, &param, &phi);
            let oracle = brute_force(|p, q| param.sigma(p, q) * f.eval(p, q)) / (2.0 * PI * a);
            let v = t.value.unwrap();
            assert!((v - oracle).abs() < 1e-8, "{}: {v} vs {oracle}", param.name());
            assert!((v - closed).abs() < 1e-8);
        }
    }

    #[test]
    fn divergent_traces_are_flagged() {
        let phi = make_fiducial(2.0, 1.0).unwrap();
        let f = Observable::generic("q*exp(-p^2)", |p, q| q * (-p * p).exp());
        assert!(analytic_trace(&f, &Parametrization::param2(), &phi).divergent);
        assert!(analytic_trace(&Observable::constant(1.0), &Parametrization::param1(), &phi).divergent);
    }

    #[test]
    fn numeric_trace_trivial_cases() {
        let phi = make_fiducial(2.0, 1.0).unwrap();
        let basis = make_basis(6, 80).unwrap();
        let p1 = Parametrization::param1();
        let zero = trace_report(&Observable::zero(), &p1, &phi, &basis).unwrap();
        assert_eq!(zero.numeric_trace, 0.0);
        let one = trace_report(&Observable::constant(1.0), &p1, &phi, &basis).unwrap();
        assert!((one.numeric_trace - 6.0).abs() < 1e-6);
        assert!(one.analytic_divergent && one.analytic_trace.is_none());
    }

    #[test]
    fn inequivalence_verdicts() {
        let phi = make_fiducial(2.0, 1.0).unwrap();
        let r = trace_inequivalence_test(&bump(1.0), &phi);
        assert_eq!(r.verdict, InequivalenceVerdict::Inequivalent);
        assert!(r.difference.unwrap() > 1e-3);
        assert_eq!(trace_inequivalence_test(&bump(0.0), &phi).verdict, InequivalenceVerdict::Inconclusive);
        assert_eq!(trace_inequivalence_test(&Observable::zero(), &phi).verdict, InequivalenceVerdict::Inconclusive);
    }

    #[test]
    fn substitution_consistency_of_traces() {
        let phi = make_fiducial(2.0, 1.0).unwrap();
        let f = bump(1.0);
        let a = analytic_trace(&f, &Parametrization::param1(), &phi).value.unwrap();
        let b = analytic_trace(&f.q_inverted(), &Parametrization::param2(), &phi).value.unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn boundedness_examples() {
        let phi = make_fiducial(2.0, 1.0).unwrap();
        let p1 = Parametrization::param1();
        let p2 = Parametrization::param2();
        let pos = Observable::position();
        assert_eq!(boundedness_certificate(&pos, &p1, &phi).verdict, BoundednessVerdict::Divergent);
        assert_eq!(boundedness_certificate(&pos, &p2, &phi).verdict, BoundednessVerdict::Divergent);
        let grow = Observable::generic("exp(-p^2)*q", |p, q| (-p * p).exp() * q);
        assert_eq!(boundedness_certificate(&grow, &p2, &phi).verdict, BoundednessVerdict::Divergent);
        let c = boundedness_certificate(&bump(0.0), &p1, &phi);
        assert_eq!(c.verdict, BoundednessVerdict::Bounded);
        // (2πA)⁻¹ √π ∫ du e^{-u} e^{-u²} = e^{1/4} / (2A)
        assert!((c.integral_value.unwrap() - 0.75 * 0.25f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn commutator_param2_is_exact_in_the_interior() {
        let phi = make_fiducial(2.0, 1.0).unwrap();
        let basis = make_basis(16, 128).unwrap();
        let r = commutator_check(BuiltIn::Param2, &phi, &basis).unwrap();
        assert!(r.interior_defect < 1e-4, "{r:?}");
        assert!(r.opposite_sign_defect > 1e-2);
    }

    #[test]
    fn commutator_param2_needs_b() {
        let phi = FiducialVector::family(0.9, 1.0, false).unwrap();
        let basis = make_basis(8, 96).unwrap();
        assert!(matches!(commutator_check(BuiltIn::Param2, &phi, &basis), Err(Error::Admissibility { .. })));
    }
}
