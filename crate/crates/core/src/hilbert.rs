//! The carrier space `L²(ℝ₊, dx/x)`.
//!
//! Everything here is built through the logarithmic isomorphism `y = ln x`,
//! which maps `L²(ℝ₊, dx/x)` onto `L²(ℝ, dy)`. The orthonormal basis is the
//! family of Hermite functions in `y`, `e_n(x) = h_n(ln x)`.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{self, PanelRule, QuadValue};

pub const DEFAULT_GRAM_TOLERANCE: f64 = 1e-10;

/// `y = ln x`, defined for `x > 0`.
pub fn log_map(x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x.ln())
    } else {
        Err(Error::Domain(format!("log_map requires a finite x > 0, got {x}")))
    }
}

/// Inverse of [`log_map`].
pub fn exp_map(y: f64) -> f64 {
    y.exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    GaussInLog,
    AdaptivePanel,
}

/// Nodes and weights for `∫₀^∞ f(x) dν(x)`, `dν = dx/x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    log_nodes: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    order: usize,
    kind: GridKind,
}

impl QuadratureGrid {
    /// Gauss-Hermite nodes placed in `y = ln x`.
    pub fn gauss_in_log(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Domain("grid order must be positive".into()));
        }
        let (y, w) = quadrature::gauss_hermite_unweighted(order);
        Ok(Self::from_log_rule(y, w, order, GridKind::GaussInLog))
    }

    /// Composite Gauss-Legendre panels on `[y_min, y_max]` whose width near
    /// `y` is at most `max_width(y)`. Used for integrands that oscillate in `x`.
    pub fn adaptive_panel(
        y_min: f64,
        y_max: f64,
        order_per_panel: usize,
        max_width: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(y_min < y_max) || order_per_panel == 0 {
            return Err(Error::Domain(format!(
                "invalid panel grid [{y_min}, {y_max}] with order {order_per_panel}"
            )));
        }
        let rule = PanelRule::graded(y_min, y_max, order_per_panel, max_width);
        Ok(Self::from_log_rule(rule.nodes, rule.weights, order_per_panel, GridKind::AdaptivePanel))
    }

    fn from_log_rule(log_nodes: Vec<f64>, weights: Vec<f64>, order: usize, kind: GridKind) -> Self {
        let nodes = log_nodes.iter().map(|&y| exp_map(y)).collect();
        Self { log_nodes, nodes, weights, order, kind }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn log_nodes(&self) -> &[f64] {
        &self.log_nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ dν(x) f(x)` with `f` given as a function of `x`.
    pub fn integrate<T: QuadValue>(&self, f: impl Fn(f64) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + f(x) * w)
    }

    /// Deviation of the grid from the exact integral `∫ dν exp(-(ln x - c)²/(2s²)) = s√(2π)`
    /// on a few Gaussian test profiles in `y`.
    pub fn gaussian_profile_defect(&self) -> f64 {
        [(0.0, 1.0), (0.5, 0.8), (-1.0, 0.9)]
            .iter()
            .map(|&(c, s): &(f64, f64)| {
                let v = self.integrate(|x: f64| (-(x.ln() - c).powi(2) / (2.0 * s * s)).exp());
                (v - s * (2.0 * std::f64::consts::PI).sqrt()).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Anything that can be evaluated as a function on `ℝ₊`.
pub trait HalfLineFunction {
    fn value(&self, x: f64) -> Complex64;
}

impl<F: Fn(f64) -> Complex64> HalfLineFunction for F {
    fn value(&self, x: f64) -> Complex64 {
        self(x)
    }
}

/// Truncated log-Hermite basis `e_n(x) = h_n(ln x)`, `n < size`, together
/// with its quadrature grid and the basis values tabulated on that grid.
#[derive(Debug, Clone)]
pub struct BasisSet {
    size: usize,
    grid: QuadratureGrid,
    gram_tolerance: f64,
    gram_deviation: f64,
    // node-major: table[i * size + n] = e_n(x_i)
    table: Vec<f64>,
}

/// Basis of `n` functions on a Gauss-in-log grid of `grid_order` nodes with
/// the default Gram tolerance.
pub fn make_basis(n: usize, grid_order: usize) -> Result<Arc<BasisSet>> {
    BasisSet::with_grid(n, QuadratureGrid::gauss_in_log(grid_order)?, DEFAULT_GRAM_TOLERANCE).map(Arc::new)
}

impl BasisSet {
    pub fn with_grid(size: usize, grid: QuadratureGrid, gram_tolerance: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::Domain("basis size must be at least 1".into()));
        }
        if !(gram_tolerance > 0.0) {
            return Err(Error::Domain("gram tolerance must be positive".into()));
        }
        let mut table = vec![0.0; grid.len() * size];
        for (i, &y) in grid.log_nodes().iter().enumerate() {
            quadrature::hermite_functions_into(y, &mut table[i * size..(i + 1) * size]);
        }
        let mut basis = Self { size, grid, gram_tolerance, gram_deviation: 0.0, table };
        let gram = basis.gram_matrix();
        let deviation = gram
            .indexed_iter()
            .map(|((m, n), g)| (g - if m == n { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        if !(deviation <= gram_tolerance) {
            return Err(Error::Accuracy {
                what: format!("Gram matrix of {size} basis functions on a {}-node grid", basis.grid.len()),
                achieved: deviation,
                required: gram_tolerance,
            });
        }
        basis.gram_deviation = deviation;
        Ok(basis)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn gram_tolerance(&self) -> f64 {
        self.gram_tolerance
    }

    pub fn gram_deviation(&self) -> f64 {
        self.gram_deviation
    }

    /// Smallest `Y` with `|e_n(x)| < threshold` for all `n` whenever `|ln x| ≥ Y`.
    pub fn log_support(&self, threshold: f64) -> f64 {
        let mut y = (2.0 * self.size as f64 + 1.0).sqrt();
        let mut buf = vec![0.0; self.size];
        loop {
            quadrature::hermite_functions_into(y, &mut buf);
            if buf.iter().all(|v| v.abs() < threshold) || y > 60.0 {
                return y;
            }
            y += 0.05;
        }
    }

    /// `e_n(x)`.
    pub fn eval(&self, n: usize, x: f64) -> f64 {
        assert!(n < self.size, "basis index {n} out of range");
        if x <= 0.0 {
            return 0.0;
        }
        quadrature::hermite_functions(n + 1, x.ln())[n]
    }

    /// All basis functions at `x`.
    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        if x <= 0.0 {
            return vec![0.0; self.size];
        }
        quadrature::hermite_functions(self.size, x.ln())
    }

    /// Basis values at grid node `i`.
    pub fn at_node(&self, i: usize) -> &[f64] {
        &self.table[i * self.size..(i + 1) * self.size]
    }

    pub fn gram_matrix(&self) -> Array2<f64> {
        let n = self.size;
        let mut g = Array2::<f64>::zeros((n, n));
        for (i, &w) in self.grid.weights().iter().enumerate() {
            let e = self.at_node(i);
            for a in 0..n {
                let wa = w * e[a];
                for b in 0..n {
                    g[[a, b]] += wa * e[b];
                }
            }
        }
        g
    }

    /// Matrix of the multiplication operator by `f(x)`, `⟨e_m| f |e_n⟩`.
    pub fn multiplication_matrix(&self, f: impl Fn(f64) -> Complex64) -> Array2<Complex64> {
        let n = self.size;
        let mut m = Array2::<Complex64>::zeros((n, n));
        for (i, (&x, &w)) in self.grid.nodes().iter().zip(self.grid.weights()).enumerate() {
            let fx = f(x) * w;
            let e = self.at_node(i);
            for a in 0..n {
                let fa = fx * e[a];
                for b in 0..n {
                    m[[a, b]] += fa * e[b];
                }
            }
        }
        m
    }

    /// Coefficients `⟨e_n|f⟩` computed on the basis grid.
    pub fn project(self: &Arc<Self>, f: &dyn HalfLineFunction) -> Result<StateVector> {
        let mut c = Array1::<Complex64>::zeros(self.size);
        for (i, (&x, &w)) in self.grid.nodes().iter().zip(self.grid.weights()).enumerate() {
            let v = f.value(x);
            if !v.is_finite_value() {
                return Err(Error::Numeric(format!("non-finite sample {v} at x = {x}")));
            }
            let e = self.at_node(i);
            for n in 0..self.size {
                c[n] += v * (w * e[n]);
            }
        }
        StateVector::new(self.clone(), c)
    }

    /// The basis vector `e_k` as a state.
    pub fn basis_state(self: &Arc<Self>, k: usize) -> Result<StateVector> {
        if k >= self.size {
            return Err(Error::Domain(format!("basis index {k} out of range for size {}", self.size)));
        }
        let mut c = Array1::<Complex64>::zeros(self.size);
        c[k] = Complex64::new(1.0, 0.0);
        StateVector::new(self.clone(), c)
    }
}

impl PartialEq for BasisSet {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.grid == other.grid
    }
}

/// A vector in the span of a [`BasisSet`].
#[derive(Debug, Clone)]
pub struct StateVector {
    coefficients: Array1<Complex64>,
    basis: Arc<BasisSet>,
}

impl StateVector {
    pub fn new(basis: Arc<BasisSet>, coefficients: Array1<Complex64>) -> Result<Self> {
        if coefficients.len() != basis.size() {
            return Err(Error::BasisMismatch { expected: basis.size(), found: coefficients.len() });
        }
        if coefficients.iter().any(|c| !c.is_finite_value()) {
            return Err(Error::Numeric("state coefficients must be finite".into()));
        }
        Ok(Self { coefficients, basis })
    }

    pub fn coefficients(&self) -> &Array1<Complex64> {
        &self.coefficients
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn conj(&self) -> Self {
        Self { coefficients: self.coefficients.mapv(|c| c.conj()), basis: self.basis.clone() }
    }

    /// `⟨self|other⟩` in coefficient space.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if *self.basis != *other.basis {
            return Err(Error::BasisMismatch { expected: self.basis.size(), found: other.basis.size() });
        }
        Ok(self
            .coefficients
            .iter()
            .zip(other.coefficients.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

impl HalfLineFunction for StateVector {
    fn value(&self, x: f64) -> Complex64 {
        self.basis
            .eval_all(x)
            .iter()
            .zip(self.coefficients.iter())
            .map(|(e, c)| c * e)
            .sum()
    }
}

/// `∫ dν(x) a(x)* b(x)` on `grid`.
pub fn inner_product(grid: &QuadratureGrid, a: &dyn HalfLineFunction, b: &dyn HalfLineFunction) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (&x, &w) in grid.nodes().iter().zip(grid.weights()) {
        let va = a.value(x);
        let vb = b.value(x);
        if !va.is_finite_value() || !vb.is_finite_value() {
            return Err(Error::Numeric(format!("non-finite integrand sample at x = {x}")));
        }
        acc += va.conj() * vb * w;
    }
    Ok(acc)
}

/// High-accuracy `∫ dν a* b` by adaptive quadrature in `y` over `[-40, 40]`,
/// independent of any basis grid.
pub fn inner_product_adaptive(a: &dyn HalfLineFunction, b: &dyn HalfLineFunction) -> Result<Complex64> {
    let r = quadrature::adaptive_gk(
        |y: f64| {
            let x = exp_map(y);
            a.value(x).conj() * b.value(x)
        },
        -40.0,
        40.0,
        160,
        1e-15,
        1e-13,
        20_000,
    );
    if !r.value.is_finite_value() {
        return Err(Error::Numeric("non-finite inner product".into()));
    }
    Ok(r.value)
}

/// Largest gap between the direct inner product and the truncated Parseval
/// sum `Σ_n ⟨φ₂|e_n⟩⟨e_n|φ₁⟩` over the probe pairs `(φ₂, φ₁)`.
pub fn completeness_defect(basis: &Arc<BasisSet>, probes: &[(&dyn HalfLineFunction, &dyn HalfLineFunction)]) -> f64 {
    probes
        .iter()
        .map(|&(bra, ket)| {
            let direct = match inner_product_adaptive(bra, ket) {
                Ok(v) => v,
                Err(_) => return f64::INFINITY,
            };
            let parseval = match (basis.project(bra), basis.project(ket)) {
                (Ok(cb), Ok(ck)) => cb.inner(&ck).unwrap_or(Complex64::new(f64::NAN, 0.0)),
                _ => return f64::INFINITY,
            };
            let d = (direct - parseval).norm();
            if d.is_nan() {
                f64::INFINITY
            } else {
                d
            }
        })
        .fold(0.0, f64::max)
}
