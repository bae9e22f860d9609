//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Oracles here are independent of the library: Hermite functions by their own
//! recurrence and trapezoid rules, which converge exponentially for the
//! smooth, decaying integrands involved.

use std::f64::consts::PI;
use std::time::Instant;

use acsq::affine::{BuiltIn, Parametrization, PhasePoint};
use acsq::analysis::{analytic_trace, boundedness_certificate, commutator_check, trace_report, BoundednessVerdict};
use acsq::fiducial::{make_fiducial, FiducialVector};
use acsq::hilbert::{inner_product, make_basis, QuadratureGrid};
use acsq::quantizer::{
    quantize, quantize_with, resolution_of_identity_matrix, GaussianProfile, Observable, OperatorMatrix, QuantizationPath,
    QuantizeOptions,
};
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type C64 = Complex64;

struct Suite {
    failures: usize,
    /// `(label, defect, tolerance)` for every matrix produced.
    hermiticity: Vec<(String, f64, f64)>,
}

impl Suite {
    fn report(&mut self, id: usize, title: &str, ok: bool, lines: &[String]) {
        println!("{} criterion {id}: {title}", if ok { "PASS" } else { "FAIL" });
        for l in lines {
            println!("    {l}");
        }
        if !ok {
            self.failures += 1;
        }
    }

    fn keep(&mut self, label: impl Into<String>, op: &OperatorMatrix) {
        self.hermiticity.push((label.into(), op.hermiticity_defect(), op.path().hermiticity_tolerance()));
    }
}

/// Orthonormal Hermite functions `h_0..h_{n-1}` at `y`.
fn hermite(n: usize, y: f64) -> Vec<f64> {
    let mut h = vec![0.0; n];
    h[0] = PI.powf(-0.25) * (-y * y / 2.0).exp();
    if n > 1 {
        h[1] = 2f64.sqrt() * y * h[0];
    }
    for k in 2..n {
        h[k] = ((2.0 / k as f64).sqrt()) * y * h[k - 1] - (((k - 1) as f64 / k as f64).sqrt()) * h[k - 2];
    }
    h
}

/// `∫ dy h_m h_n m(e^y)` by the trapezoid rule on `[-40, 40]`.
fn multiplication_oracle(n: usize, m: impl Fn(f64) -> f64) -> Array2<f64> {
    let h = 0.005;
    let steps = (80.0 / h) as usize;
    let mut out = Array2::zeros((n, n));
    for i in 0..=steps {
        let y = -40.0 + i as f64 * h;
        let w = if i == 0 || i == steps { 0.5 * h } else { h };
        let e = hermite(n, y);
        let c = w * m(y.exp());
        if c == 0.0 || !c.is_finite() {
            continue;
        }
        for a in 0..n {
            for b in 0..n {
                out[[a, b]] += c * e[a] * e[b];
            }
        }
    }
    out
}

/// `(2π A)⁻¹ ∬ σ f dp dq` by the trapezoid rule in `(p, ln q)` on `[-12, 12] × [-14, 14]`.
fn trace_oracle(sigma: impl Fn(f64, f64) -> f64, f: impl Fn(f64, f64) -> f64, a: f64) -> f64 {
    let h = 0.02;
    let (np, nu) = ((24.0 / h) as usize, (28.0 / h) as usize);
    let mut acc = 0.0;
    for i in 0..=nu {
        let u = -14.0 + i as f64 * h;
        let q = u.exp();
        let wu = if i == 0 || i == nu { 0.5 } else { 1.0 };
        for j in 0..=np {
            let p = -12.0 + j as f64 * h;
            let wp = if j == 0 || j == np { 0.5 } else { 1.0 };
            acc += wu * wp * q * sigma(p, q) * f(p, q);
        }
    }
    acc * h * h / (2.0 * PI * a)
}

fn max_diff(m: &Array2<C64>, oracle: &Array2<f64>) -> f64 {
    m.iter().zip(oracle).map(|(a, b)| (a - C64::new(*b, 0.0)).norm()).fold(0.0, f64::max)
}

/// `A_Φ` for `Φ = c x^α e^{-βx}` with integer `2α`: `c² Γ(2α-1) / (2β)^{2α-1}`.
fn a_oracle(alpha: f64, beta: f64) -> f64 {
    let gamma = |k: f64| (1..(k as u64)).map(|j| j as f64).product::<f64>();
    let c2 = (2.0 * beta).powf(2.0 * alpha) / gamma(2.0 * alpha);
    c2 * gamma(2.0 * alpha - 1.0) / (2.0 * beta).powf(2.0 * alpha - 1.0)
}

fn phi21() -> FiducialVector {
    make_fiducial(2.0, 1.0).unwrap()
}

fn criterion_1(s: &mut Suite) {
    let t0 = Instant::now();
    let phi = phi21();
    let basis = make_basis(8, 96).unwrap();
    let a = a_oracle(2.0, 1.0);
    let mut ok = (a - 2.0 / 3.0).abs() < 1e-15 && (phi.a() - a).abs() < 1e-12;
    let mut lines = vec![format!("A_Φ oracle {a:.15}, library {:.15}", phi.a())];
    for param in [Parametrization::param1(), Parametrization::param2()] {
        let m = resolution_of_identity_matrix(&param, &phi, &basis).unwrap();
        let target = Array2::from_shape_fn((8, 8), |(i, j)| if i == j { 2.0 * PI * a } else { 0.0 });
        let d = max_diff(m.entries(), &target);
        ok &= d < 1e-6;
        lines.push(format!("{}: max |M - 2πA δ| = {d:.3e} (< 1e-6)", param.name()));
        s.keep(format!("identity/{}", param.name()), &m);
    }
    let secs = t0.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    lines.push(format!("runtime {secs:.2} s (< 30 s)"));
    s.report(1, "resolution of identity, Φ_{2,1}, N = 8", ok, &lines);
}

fn criterion_2(s: &mut Suite) {
    let t0 = Instant::now();
    let phi = phi21();
    let (a, b) = (a_oracle(2.0, 1.0), 4.0 / 6.0);
    let basis = make_basis(8, 96).unwrap();
    let oracles = [
        (Parametrization::param1(), multiplication_oracle(8, |x| 1.0 / (a * x))),
        (Parametrization::param2(), multiplication_oracle(8, |x| b / a * x)),
    ];
    let plain = Observable::p_independent("q", |q| q);
    let generic = plain.as_generic();
    let opts = QuantizeOptions { force_generic: true, p_max: 80.0, generic_tolerance: 1e-5 };
    let mut ok = true;
    let mut lines = Vec::new();
    for (param, oracle) in &oracles {
        let name = param.name();
        let closed = quantize(&Observable::position(), param, &phi, &basis).unwrap();
        let dc = max_diff(closed.entries(), oracle);
        let reduced = quantize(&plain, param, &phi, &basis).unwrap();
        let dr = max_diff(reduced.entries(), oracle);
        ok &= closed.path() == QuantizationPath::ClosedForm && dc < 1e-10 && dr < 1e-6;
        lines.push(format!("{name}: closed form {dc:.3e} (< 1e-10), reduced quadrature {dr:.3e} (< 1e-6)"));
        s.keep(format!("position/{name}/closed"), &closed);
        s.keep(format!("position/{name}/reduced"), &reduced);
        match quantize_with(&generic, param, &phi, &basis, &opts) {
            Ok(g) => {
                let dg = max_diff(g.entries(), oracle);
                ok &= dg < 1e-5;
                lines.push(format!("{name}: generic quadrature {dg:.3e} (< 1e-5, p_max = {})", opts.p_max));
                s.keep(format!("position/{name}/generic"), &g);
            }
            Err(e) => {
                ok = false;
                lines.push(format!("{name}: generic quadrature refused: {e}"));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    lines.push(format!("runtime {secs:.2} s (< 60 s)"));
    s.report(2, "position operators against 1/(A x) and (B/A) x", ok, &lines);
}

fn criterion_3(s: &mut Suite) {
    let phi = phi21();
    let (b16, b24) = (make_basis(16, 128).unwrap(), make_basis(24, 128).unwrap());
    let mut ok = true;
    let mut lines = Vec::new();
    for which in [BuiltIn::Param1, BuiltIn::Param2] {
        let r16 = commutator_check(which, &phi, &b16).unwrap();
        let r24 = commutator_check(which, &phi, &b24).unwrap();
        let pass = r16.interior_defect < 1e-4 && r24.interior_defect < r16.interior_defect;
        ok &= pass;
        lines.push(format!(
            "{}: N=16 defect {:.3e} (< 1e-4), N=24 defect {:.3e} (must be smaller); opposite-sign defects {:.3e}, {:.3e}",
            r16.relation, r16.interior_defect, r24.interior_defect, r16.opposite_sign_defect, r24.opposite_sign_defect
        ));
    }
    s.report(3, "affine commutation relations on the interior block", ok, &lines);
}

fn criterion_4(s: &mut Suite) {
    let phi = phi21();
    let a = a_oracle(2.0, 1.0);
    let g = |q: f64| (-(q.ln() - 1.0).powi(2)).exp();
    let f = Observable::separable_gaussian_p("exp(-p^2)exp(-(ln q-1)^2)", GaussianProfile { amplitude: 1.0, center: 0.0, width: 1.0 }, g)
        .unwrap();
    let basis = make_basis(12, 96).unwrap();
    let mut ok = true;
    let mut lines = Vec::new();
    let mut traces = Vec::new();
    for param in [Parametrization::param1(), Parametrization::param2()] {
        let name = param.name().to_string();
        let t = analytic_trace(&f, &param, &phi);
        let oracle = trace_oracle(|p, q| param.sigma(p, q), |p, q| (-p * p).exp() * g(q), a);
        let v = t.value.unwrap_or(f64::NAN);
        let d = (v - oracle).abs();
        ok &= d < 1e-8;
        lines.push(format!("{name}: analytic {v:.12}, oracle {oracle:.12}, |Δ| = {d:.3e} (< 1e-8)"));
        let r = trace_report(&f, &param, &phi, &basis).unwrap();
        let gap = r.gap().unwrap_or(f64::INFINITY);
        ok &= r.consistent() == Some(true);
        lines.push(format!(
            "{name}: numeric trace N=12 {:.6}, gap {gap:.3e} (≤ {:.3e} = max(1e-3, 3·{:.3e}))",
            r.numeric_trace,
            r.allowed_gap(),
            r.convergence_estimate
        ));
        traces.push(v);
    }
    let diff = (traces[0] - traces[1]).abs();
    ok &= diff > 1e-3;
    lines.push(format!("|Tr₁ - Tr₂| = {diff:.6} (> 1e-3)"));
    s.report(4, "trace dependence on the parametrization", ok, &lines);
}

fn criterion_5(s: &mut Suite) {
    let phi = phi21();
    let basis = make_basis(8, 96).unwrap();
    let family: Vec<(String, Observable)> = [(0.0, 1.0), (0.7, 0.8), (-0.5, 1.3), (1.2, 1.0)]
        .into_iter()
        .map(|(c, w)| {
            let label = format!("exp(-((ln q - {c})/{w})^2)(1 + 0.3 sin ln q)");
            let f = Observable::p_independent(label.clone(), move |q: f64| {
                (-((q.ln() - c) / w).powi(2)).exp() * (1.0 + 0.3 * q.ln().sin())
            });
            (label, f)
        })
        .collect();
    let mut ok = true;
    let mut lines = Vec::new();
    for (label, f) in &family {
        let m1 = quantize(f, &Parametrization::param1(), &phi, &basis).unwrap();
        let m2 = quantize(&f.q_inverted(), &Parametrization::param2(), &phi, &basis).unwrap();
        let d = m1.max_difference(&m2).unwrap();
        ok &= d < 1e-6;
        lines.push(format!("{label}: {d:.3e} (< 1e-6)"));
        s.keep(format!("substitution/{label}/param1"), &m1);
        s.keep(format!("substitution/{label}/param2"), &m2);
    }
    s.report(5, "substitution identity q → 1/q", ok, &lines);
}

fn criterion_6(s: &mut Suite) {
    let phi = phi21();
    let a = a_oracle(2.0, 1.0);
    let mut ok = true;
    let mut lines = Vec::new();
    for param in [Parametrization::param1(), Parametrization::param2()] {
        let c = boundedness_certificate(&Observable::position(), &param, &phi);
        ok &= c.verdict == BoundednessVerdict::Divergent;
        lines.push(format!("f = q, {}: {:?}", param.name(), c.verdict));
    }
    let bump = Observable::generic("exp(-p^2)exp(-(ln q)^2)", |p, q| (-p * p - q.ln().powi(2)).exp());
    let c = boundedness_certificate(&bump, &Parametrization::param1(), &phi);
    // (2πA)⁻¹ ∫dp e^{-p²} ∫du e^{-u} e^{-u²} = (2πA)⁻¹ π e^{1/4}
    let oracle = 0.25f64.exp() / (2.0 * a);
    let v = c.integral_value.unwrap_or(f64::NAN);
    ok &= c.verdict == BoundednessVerdict::Bounded && (v - oracle).abs() < 1e-6;
    lines.push(format!("compact Gaussian, param1: {:?}, {v:.10} vs {oracle:.10} (< 1e-6)", c.verdict));
    s.report(6, "boundedness certificate", ok, &lines);
}

fn criterion_7(s: &mut Suite) {
    let t0 = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    let mut run = |name: &str, cases: u32, f: &mut dyn FnMut(&mut TestRunner) -> Result<(), String>| {
        let mut runner = TestRunner::new_with_rng(Config { cases, ..Config::default() }, proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha));
        let r = f(&mut runner);
        ok &= r.is_ok();
        lines.push(match r {
            Ok(()) => format!("{name}: {cases} cases green"),
            Err(e) => format!("{name}: {e}"),
        });
    };

    run("Gram identity (1e-10)", 24, &mut |r| {
        r.run(&(1usize..=16, 64usize..=128), |(n, order)| {
            let d = make_basis(n, order).unwrap().gram_deviation();
            prop_assert!(d <= 1e-10, "N = {n}, order {order}: {d:e}");
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    run("two-resolution quadrature stability (1e-9)", 24, &mut |r| {
        r.run(&(-0.5f64..0.5, 0.4f64..1.5, -1.0f64..1.0, 48usize..=96), |(a, b, c, order)| {
            let f = move |x: f64| C64::new((a * x.ln() - b * (x.ln() - c).powi(2)).exp(), 0.0);
            let g = move |x: f64| C64::from_polar((-b * (x.ln() + c).powi(2)).exp(), x.ln());
            let lo = inner_product(&QuadratureGrid::gauss_in_log(order).unwrap(), &f, &g).unwrap();
            let hi = inner_product(&QuadratureGrid::gauss_in_log(2 * order).unwrap(), &f, &g).unwrap();
            prop_assert!((lo - hi).norm() < 1e-9);
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    let point = || (-3.0f64..3.0, -1.5f64..1.5).prop_map(|(p, t)| PhasePoint::new(p, t.exp()).unwrap());
    run("group associativity (1e-10)", 64, &mut |r| {
        let custom = Parametrization::custom("scaled", |p, q| 2.0 * p + q, |_, q| q * q).build().unwrap();
        let params = [Parametrization::param1(), Parametrization::param2(), custom];
        r.run(&(point(), point(), point()), |(a, b, c)| {
            for p in &params {
                let l = p.compose(a, p.compose(b, c).unwrap()).unwrap();
                let rr = p.compose(p.compose(a, b).unwrap(), c).unwrap();
                prop_assert!(l.distance(&rr) < 1e-10, "{}", p.name());
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    run("left invariance of the built-in measures (1e-6)", 4, &mut |r| {
        r.run(&point(), |g| {
            let bump = |p: f64, q: f64| (-p * p - q.ln().powi(2)).exp();
            for p in [Parametrization::param1(), Parametrization::param2()] {
                let d = p.left_invariance_defect(g, bump).unwrap();
                prop_assert!(d < 1e-6, "{}: {d:e}", p.name());
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    let worst = s.hermiticity.iter().filter(|(_, d, t)| d > t).map(|(l, d, t)| format!("{l}: {d:e} > {t:e}")).collect::<Vec<_>>();
    ok &= worst.is_empty();
    lines.push(format!("Hermiticity of {} produced matrices: {}", s.hermiticity.len(), if worst.is_empty() { "all within path tolerance".into() } else { worst.join("; ") }));
    let secs = t0.elapsed().as_secs_f64();
    ok &= secs < 300.0;
    lines.push(format!("runtime {secs:.2} s (< 300 s)"));
    s.report(7, "property suites", ok, &lines);
}

fn main() {
    let mut s = Suite { failures: 0, hermiticity: Vec::new() };
    criterion_1(&mut s);
    criterion_2(&mut s);
    criterion_3(&mut s);
    criterion_4(&mut s);
    criterion_5(&mut s);
    criterion_6(&mut s);
    criterion_7(&mut s);
    println!("acceptance: {} of 7 criteria failed", s.failures);
    if s.failures > 0 {
        std::process::exit(1);
    }
}
