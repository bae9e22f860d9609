//! Quadrature primitives: Gauss-Legendre and Gauss-Hermite rules, composite
//! panel rules and an adaptive Gauss-Kronrod (7/15) integrator.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Orthonormal Hermite functions `h_0(y) .. h_{n-1}(y)` written into `out`.
///
/// `h_k(y) = (2^k k! sqrt(pi))^{-1/2} H_k(y) exp(-y^2/2)`, evaluated with the
/// stable three-term recursion on the normalized functions.
pub fn hermite_functions_into(y: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * y * y).exp();
    if n > 1 {
        out[1] = std::f64::consts::SQRT_2 * y * out[0];
    }
    for k in 2..n {
        let kf = k as f64;
        out[k] = (2.0 / kf).sqrt() * y * out[k - 1] - ((kf - 1.0) / kf).sqrt() * out[k - 2];
    }
}

pub fn hermite_functions(n: usize, y: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    hermite_functions_into(y, &mut out);
    out
}

/// Derivatives `h_k'(y)` for `k < n`, using `h_k' = sqrt(k/2) h_{k-1} - sqrt((k+1)/2) h_{k+1}`.
pub fn hermite_function_derivatives(n: usize, y: f64) -> Vec<f64> {
    let h = hermite_functions(n + 1, y);
    (0..n)
        .map(|k| {
            let kf = k as f64;
            let lower = if k > 0 { (kf / 2.0).sqrt() * h[k - 1] } else { 0.0 };
            lower - ((kf + 1.0) / 2.0).sqrt() * h[k + 1]
        })
        .collect()
}

/// Gauss-Hermite nodes with weights for the *unweighted* integral `∫ F(y) dy`.
///
/// The returned weights are `w_i exp(y_i^2)`, obtained as the reciprocal
/// Christoffel function `1 / Σ_k h_k(y_i)^2`, which keeps full relative
/// accuracy at the outermost nodes.
pub fn gauss_hermite_unweighted(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
    let mut roots = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    let mut buf = vec![0.0; n + 1];
    for i in 0..m {
        // Initial guesses following the classical asymptotic placement.
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * roots[n - 1],
            3 => 1.91 * z - 0.91 * roots[n - 2],
            _ => 2.0 * z - roots[n - i + 1],
        };
        for _ in 0..200 {
            hermite_functions_into(z, &mut buf);
            // Newton on h_n, whose zeros are those of H_n.
            let h = buf[n];
            let dh = (2.0 * nf).sqrt() * buf[n - 1] - z * h;
            let step = h / dh;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        roots[n - 1 - i] = z;
        roots[i] = -z;
    }
    if n % 2 == 1 {
        roots[n / 2] = 0.0;
    }
    let mut h = vec![0.0; n];
    let weights = roots
        .iter()
        .map(|&y| {
            hermite_functions_into(y, &mut h);
            1.0 / h.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    (roots, weights)
}

/// A composite rule assembled from Gauss-Legendre panels.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PanelRule {
    /// Panels delimited by the sorted `edges`, each carrying an `order`-point rule.
    pub fn from_edges(edges: &[f64], order: usize) -> Self {
        let (t, w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(edges.len().saturating_sub(1) * order);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for pair in edges.windows(2) {
            let half = 0.5 * (pair[1] - pair[0]);
            let mid = 0.5 * (pair[1] + pair[0]);
            for (ti, wi) in t.iter().zip(&w) {
                nodes.push(mid + half * ti);
                weights.push(half * wi);
            }
        }
        Self { nodes, weights }
    }

    /// `panels` equal panels on `[a, b]`.
    pub fn uniform(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let edges: Vec<f64> = (0..=panels)
            .map(|i| a + (b - a) * i as f64 / panels as f64)
            .collect();
        Self::from_edges(&edges, order)
    }

    /// Panels on `[a, b]` whose width at position `t` never exceeds `max_width(t)`.
    pub fn graded(a: f64, b: f64, order: usize, max_width: impl Fn(f64) -> f64) -> Self {
        let mut edges = vec![a];
        let mut t = a;
        while t < b {
            // Width evaluated at both ends so that rapidly shrinking limits are respected.
            let mut h = max_width(t).min(b - t);
            h = h.min(max_width((t + h).min(b)));
            let h = h.max((b - a) * 1e-9);
            t = (t + h).min(b);
            edges.push(t);
        }
        Self::from_edges(&edges, order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Values an adaptive integrator can accumulate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: QuadValue>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod = kronrod + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let k = kronrod * h;
    let g = gauss * h;
    (k, (k - g).magnitude())
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// The interval is first cut into `initial_panels` equal pieces so that
/// narrow features on wide domains are not missed, then the piece with the
/// largest error estimate is bisected until `error <= max(abs_tol, rel_tol*|I|)`.
pub fn adaptive_gk<T: QuadValue>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    initial_panels: usize,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> QuadResult<T> {
    let panels = initial_panels.max(1);
    let mut intervals: Vec<(f64, f64, T, f64)> = (0..panels)
        .map(|i| {
            let lo = a + (b - a) * i as f64 / panels as f64;
            let hi = a + (b - a) * (i + 1) as f64 / panels as f64;
            let (v, e) = gk15(&f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    let mut evaluations = 15 * panels;
    loop {
        let value = intervals.iter().fold(T::zero(), |acc, iv| acc + iv.2);
        let error: f64 = intervals.iter().map(|iv| iv.3).sum();
        if !value.is_finite_value() {
            return QuadResult { value, error: f64::INFINITY, evaluations, converged: false };
        }
        let target = abs_tol.max(rel_tol * value.magnitude());
        if error <= target || intervals.len() >= max_intervals {
            return QuadResult { value, error, evaluations, converged: error <= target };
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, iv)| if iv.3 > best.1 { (i, iv.3) } else { best });
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert_abs_diff_eq!(s, 2.0 / 13.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn hermite_rule_reproduces_gaussian_moments() {
        for n in [1, 2, 5, 20, 64, 150] {
            let (y, w) = gauss_hermite_unweighted(n);
            assert!(y.windows(2).all(|p| p[0] < p[1]), "order {n}");
            assert!(w.iter().all(|&v| v > 0.0));
            let s: f64 = y.iter().zip(&w).map(|(y, w)| w * (-y * y).exp()).sum();
            assert_abs_diff_eq!(s, PI.sqrt(), epsilon = 1e-12);
            if n >= 2 {
                let s2: f64 = y.iter().zip(&w).map(|(y, w)| w * y * y * (-y * y).exp()).sum();
                assert_abs_diff_eq!(s2, PI.sqrt() / 2.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let (y, w) = gauss_hermite_unweighted(40);
        for m in 0..15 {
            for n in 0..15 {
                let s: f64 = y
                    .iter()
                    .zip(&w)
                    .map(|(&y, &w)| {
                        let h = hermite_functions(15, y);
                        w * h[m] * h[n]
                    })
                    .sum();
                let expected = if m == n { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(s, expected, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn hermite_derivative_matches_finite_difference() {
        let y = 0.37;
        let d = hermite_function_derivatives(6, y);
        let h = 1e-6;
        let hp = hermite_functions(6, y + h);
        let hm = hermite_functions(6, y - h);
        for k in 0..6 {
            assert_abs_diff_eq!(d[k], (hp[k] - hm[k]) / (2.0 * h), epsilon = 1e-8);
        }
    }

    #[test]
    fn adaptive_handles_narrow_peak_and_complex_values() {
        let r = adaptive_gk(|x: f64| (-(x - 3.0).powi(2) * 50.0).exp(), -40.0, 40.0, 80, 1e-14, 1e-12, 2000);
        assert!(r.converged);
        assert_abs_diff_eq!(r.value, (PI / 50.0).sqrt(), epsilon = 1e-12);
        let r = adaptive_gk(|x: f64| Complex64::new(0.0, 5.0 * x).exp(), 0.0, 1.0, 1, 1e-14, 1e-13, 500);
        let exact = (Complex64::new(0.0, 5.0).exp() - 1.0) / Complex64::new(0.0, 5.0);
        assert_abs_diff_eq!((r.value - exact).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn graded_panels_respect_width_limit() {
        let rule = PanelRule::graded(0.0, 5.0, 4, |t| 0.1 + 0.2 * t);
        assert_abs_diff_eq!(rule.integrate(|t| t * t), 125.0 / 3.0, epsilon = 1e-10);
        assert!(rule.len() > 4 * 10);
    }
}
