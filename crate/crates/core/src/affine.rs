//! The affine group `Aff(ℝ)` and its parametrizations by the half-plane.
//!
//! A parametrization `χ(p, q) = (ξ, η)` identifies a phase-space point with
//! the group element acting as `x ↦ η x + ξ`. The group law is always taken
//! in those coordinates,
//!
//! ```text
//! (ξ₁, η₁) · (ξ₂, η₂) = (η₁ ξ₂ + ξ₁, η₁ η₂),
//! ```
//!
//! and pulled back to `(p, q)` through the inverse of `χ`. The left-invariant
//! measure `dξ dη / η²` pulls back to `σ(p, q) dp dq` with
//! `σ = η⁻² |∂(ξ, η)/∂(p, q)|`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gk;

pub type PhaseFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type InverseFn = Arc<dyn Fn(f64, f64) -> Option<(f64, f64)> + Send + Sync>;
pub type FiberFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const JACOBIAN_FLOOR: f64 = 1e-12;
const ROUNDTRIP_TOLERANCE: f64 = 1e-10;

/// A point `(p, q)` of the half-plane, `q > 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhasePoint {
    pub p: f64,
    pub q: f64,
}

impl PhasePoint {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if p.is_finite() && q.is_finite() && q > 0.0 {
            Ok(Self { p, q })
        } else {
            Err(Error::Domain(format!("({p}, {q}) is not a point of the half-plane")))
        }
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        (self.p - other.p).abs().max((self.q - other.q).abs())
    }
}

impl fmt::Display for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BuiltIn {
    /// `χ(p, q) = (p, q)`: `(p₁,q₁)·(p₂,q₂) = (q₁p₂ + p₁, q₁q₂)`.
    Param1,
    /// `χ(p, q) = (p, 1/q)`: `(p₁,q₁)·(p₂,q₂) = (p₂/q₁ + p₁, q₁q₂)`.
    Param2,
}

/// Structure of parametrizations with `ξ = s(q) p + t(q)` and `η = η(q)`.
///
/// For these the momentum integral of the quantization map can be carried
/// out analytically, which the reduced quantization paths rely on.
#[derive(Clone)]
pub struct Fibration {
    scale: FiberFn,
    shift: FiberFn,
    eta: FiberFn,
    weight: FiberFn,
    shift_free: bool,
}

impl Fibration {
    /// `s(q)`.
    pub fn scale(&self, q: f64) -> f64 {
        (self.scale)(q)
    }

    /// `t(q)`.
    pub fn shift(&self, q: f64) -> f64 {
        (self.shift)(q)
    }

    /// `η(q)`.
    pub fn eta(&self, q: f64) -> f64 {
        (self.eta)(q)
    }

    /// `σ(q) / |s(q)| = |η'(q)| / η(q)²`, the measure left after the `dp` integral.
    pub fn reduced_weight(&self, q: f64) -> f64 {
        (self.weight)(q)
    }

    pub fn is_shift_free(&self) -> bool {
        self.shift_free
    }
}

impl fmt::Debug for Fibration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fibration").field("shift_free", &self.shift_free).finish_non_exhaustive()
    }
}

/// A one-to-one map of the half-plane onto the affine group.
#[derive(Clone)]
pub struct Parametrization {
    name: String,
    xi: PhaseFn,
    eta: PhaseFn,
    jacobian: Option<PhaseFn>,
    inverse: Option<InverseFn>,
    builtin: Option<BuiltIn>,
    fibration: Option<Fibration>,
}

impl fmt::Debug for Parametrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Parametrization")
            .field("name", &self.name)
            .field("builtin", &self.builtin)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("analytic_inverse", &self.inverse.is_some())
            .field("fibration", &self.fibration)
            .finish()
    }
}

/// The fixed 10 × 10 validation sample: `p` uniform on `[-5, 5]`, `q`
/// geometric on `[0.1, 10]`.
pub fn validation_sample() -> Vec<PhasePoint> {
    let mut pts = Vec::with_capacity(100);
    for i in 0..10 {
        let p = -5.0 + 10.0 * i as f64 / 9.0;
        for j in 0..10 {
            let q = 0.1 * 100f64.powf(j as f64 / 9.0);
            pts.push(PhasePoint { p, q });
        }
    }
    pts
}

impl Parametrization {
    pub fn builtin(which: BuiltIn) -> Self {
        match which {
            BuiltIn::Param1 => Self {
                name: "param1".into(),
                xi: Arc::new(|p, _| p),
                eta: Arc::new(|_, q| q),
                jacobian: Some(Arc::new(|_, _| 1.0)),
                inverse: Some(Arc::new(|xi, eta| Some((xi, eta)))),
                builtin: Some(BuiltIn::Param1),
                fibration: Some(Fibration {
                    scale: Arc::new(|_| 1.0),
                    shift: Arc::new(|_| 0.0),
                    eta: Arc::new(|q| q),
                    weight: Arc::new(|q| 1.0 / (q * q)),
                    shift_free: true,
                }),
            },
            BuiltIn::Param2 => Self {
                name: "param2".into(),
                xi: Arc::new(|p, _| p),
                eta: Arc::new(|_, q| 1.0 / q),
                jacobian: Some(Arc::new(|_, q| -1.0 / (q * q))),
                inverse: Some(Arc::new(|xi, eta| Some((xi, 1.0 / eta)))),
                builtin: Some(BuiltIn::Param2),
                fibration: Some(Fibration {
                    scale: Arc::new(|_| 1.0),
                    shift: Arc::new(|_| 0.0),
                    eta: Arc::new(|q| 1.0 / q),
                    weight: Arc::new(|_| 1.0),
                    shift_free: true,
                }),
            },
        }
    }

    pub fn param1() -> Self {
        Self::builtin(BuiltIn::Param1)
    }

    pub fn param2() -> Self {
        Self::builtin(BuiltIn::Param2)
    }

    /// Looks up a built-in by name (`param1`, `param2`).
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "param1" => Some(Self::param1()),
            "param2" => Some(Self::param2()),
            _ => None,
        }
    }

    /// Starts a custom parametrization from closed-form `ξ(p, q)` and `η(p, q)`.
    pub fn custom(
        name: impl Into<String>,
        xi: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        eta: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> CustomBuilder {
        CustomBuilder {
            name: name.into(),
            xi: Arc::new(xi),
            eta: Arc::new(eta),
            jacobian: None,
            inverse: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn builtin_kind(&self) -> Option<BuiltIn> {
        self.builtin
    }

    pub fn fibration(&self) -> Option<&Fibration> {
        self.fibration.as_ref()
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn xi(&self, p: f64, q: f64) -> f64 {
        (self.xi)(p, q)
    }

    pub fn eta(&self, p: f64, q: f64) -> f64 {
        (self.eta)(p, q)
    }

    /// Group coordinates `(ξ, η)` of a phase-space point.
    pub fn group_element(&self, g: PhasePoint) -> (f64, f64) {
        (self.xi(g.p, g.q), self.eta(g.p, g.q))
    }

    /// `∂(ξ, η)/∂(p, q)`, analytic when supplied, central differences otherwise.
    pub fn jacobian(&self, p: f64, q: f64) -> f64 {
        match &self.jacobian {
            Some(j) => j(p, q),
            None => {
                let [[xp, xq], [ep, eq]] = self.partials(p, q);
                xp * eq - xq * ep
            }
        }
    }

    fn partials(&self, p: f64, q: f64) -> [[f64; 2]; 2] {
        let hp = 1e-6 * p.abs().max(1.0);
        // keep q - hq inside the half-plane
        let hq = (1e-6 * q.abs().max(1.0)).min(0.5 * q);
        let d = |f: &PhaseFn| {
            [
                (f(p + hp, q) - f(p - hp, q)) / (2.0 * hp),
                (f(p, q + hq) - f(p, q - hq)) / (2.0 * hq),
            ]
        };
        [d(&self.xi), d(&self.eta)]
    }

    /// `σ(p, q) = η⁻² |∂(ξ, η)/∂(p, q)|`.
    pub fn sigma(&self, p: f64, q: f64) -> f64 {
        let e = self.eta(p, q);
        self.jacobian(p, q).abs() / (e * e)
    }

    /// Pulls a group element `(ξ, η)` back to the half-plane.
    pub fn pull_back(&self, xi: f64, eta: f64) -> Result<PhasePoint> {
        if !(eta > 0.0) || !xi.is_finite() || !eta.is_finite() {
            return Err(Error::Domain(format!("({xi}, {eta}) is not an affine group element")));
        }
        let found = match &self.inverse {
            Some(inv) => inv(xi, eta),
            None => self.newton_inverse(xi, eta),
        };
        match found {
            Some((p, q)) => PhasePoint::new(p, q).map_err(|_| {
                Error::Domain(format!("`{}` has no preimage of ({xi}, {eta}) in the half-plane", self.name))
            }),
            None => Err(Error::Domain(format!(
                "`{}`: inverse undefined at group element ({xi}, {eta})",
                self.name
            ))),
        }
    }

    fn newton_inverse(&self, xi: f64, eta: f64) -> Option<(f64, f64)> {
        // Newton in (p, u = ln q) keeps iterates inside the half-plane.
        let starts = [(xi, eta.ln()), (xi, -eta.ln()), (xi, 0.5 * eta.ln()), (0.0, 0.0), (xi / eta, 0.0)];
        for &(p0, u0) in &starts {
            let (mut p, mut u) = (p0, u0);
            for _ in 0..100 {
                let q = u.exp();
                let rx = self.xi(p, q) - xi;
                let re = self.eta(p, q) - eta;
                if !rx.is_finite() || !re.is_finite() {
                    break;
                }
                let scale = 1.0 + xi.abs() + eta.abs();
                if rx.abs().max(re.abs()) <= 1e-14 * scale {
                    return Some((p, q));
                }
                let [[xp, xq], [ep, eq]] = self.partials(p, q);
                // chain rule for u = ln q
                let (xu, eu) = (xq * q, eq * q);
                let det = xp * eu - xu * ep;
                if det.abs() < 1e-300 || !det.is_finite() {
                    break;
                }
                let dp = (eu * rx - xu * re) / det;
                let du = (-ep * rx + xp * re) / det;
                let damp = if du.abs() > 2.0 { 2.0 / du.abs() } else { 1.0 };
                p -= damp * dp;
                u -= damp * du;
            }
            let q = u.exp();
            let scale = 1.0 + xi.abs() + eta.abs();
            if (self.xi(p, q) - xi).abs().max((self.eta(p, q) - eta).abs()) <= 1e-11 * scale {
                return Some((p, q));
            }
        }
        None
    }

    /// The group product pulled back to the half-plane.
    pub fn compose(&self, a: PhasePoint, b: PhasePoint) -> Result<PhasePoint> {
        let (xa, ea) = self.group_element(a);
        let (xb, eb) = self.group_element(b);
        self.pull_back(ea * xb + xa, ea * eb)
    }

    /// Preimage of the group identity `(0, 1)`.
    pub fn identity(&self) -> Result<PhasePoint> {
        self.pull_back(0.0, 1.0)
    }

    /// Preimage of `(-ξ/η, 1/η)`.
    pub fn inverse_element(&self, g: PhasePoint) -> Result<PhasePoint> {
        let (x, e) = self.group_element(g);
        self.pull_back(-x / e, 1.0 / e)
    }

    /// Action on the real line, `x ↦ η x + ξ`.
    pub fn act(&self, g: PhasePoint, x: f64) -> f64 {
        let (xi, eta) = self.group_element(g);
        eta * x + xi
    }

    /// Checks the parametrization on the validation sample.
    pub fn validate(&self) -> Result<()> {
        for g in validation_sample() {
            let (xi, eta) = self.group_element(g);
            if !(eta > 0.0) || !eta.is_finite() || !xi.is_finite() {
                return Err(self.degenerate(format!("η({}, {}) = {eta} is not a positive number", g.p, g.q)));
            }
            let j = self.jacobian(g.p, g.q);
            if !(j.abs() >= JACOBIAN_FLOOR) {
                return Err(self.degenerate(format!("Jacobian {j:.3e} vanishes at {g}")));
            }
            let back = self
                .pull_back(xi, eta)
                .map_err(|e| self.degenerate(format!("cannot invert at {g}: {e}")))?;
            let tol = ROUNDTRIP_TOLERANCE * (1.0 + g.p.abs().max(g.q));
            if back.distance(&g) > tol {
                return Err(self.degenerate(format!("inverse maps χ{g} to {back}")));
            }
        }
        Ok(())
    }

    fn degenerate(&self, detail: String) -> Error {
        Error::DegenerateParametrization { name: self.name.clone(), detail }
    }

    /// The pulled-back invariant measure density.
    pub fn measure_density(&self) -> Result<MeasureDensity> {
        for g in validation_sample() {
            let j = self.jacobian(g.p, g.q);
            if !(j.abs() >= JACOBIAN_FLOOR) {
                return Err(self.degenerate(format!("Jacobian {j:.3e} below {JACOBIAN_FLOOR:e} at {g}")));
            }
        }
        let param = self.clone();
        Ok(MeasureDensity { sigma: Arc::new(move |p, q| param.sigma(p, q)) })
    }

    /// `|∫ σ f(g₀·g) dp dq − ∫ σ f(g) dp dq|` by 2D adaptive quadrature in `(p, ln q)`.
    ///
    /// The integrals are evaluated on two nested domains; a relative change
    /// above `1e-3` between them is reported as a divergence.
    pub fn left_invariance_defect(&self, g0: PhasePoint, test_fn: impl Fn(f64, f64) -> f64 + Sync) -> Result<f64> {
        let shifted = |p: f64, q: f64| -> f64 {
            let g = PhasePoint { p, q };
            match self.compose(g0, g) {
                Ok(h) => test_fn(h.p, h.q),
                Err(_) => f64::NAN,
            }
        };
        let integrate = |half_width: f64, log_half_width: f64, f: &dyn Fn(f64, f64) -> f64| -> f64 {
            let inner = |u: f64| {
                let q = u.exp();
                let r = adaptive_gk(|p| self.sigma(p, q) * f(p, q), -half_width, half_width, (2.0 * half_width) as usize, 1e-16, 1e-12, 4000);
                r.value * q
            };
            adaptive_gk(inner, -log_half_width, log_half_width, (2.0 * log_half_width) as usize, 1e-15, 1e-11, 4000).value
        };
        let mut values = Vec::new();
        for scale in [1.0, 2.0] {
            let plain = integrate(20.0 * scale, 20.0 * scale, &|p, q| test_fn(p, q));
            let moved = integrate(20.0 * scale, 20.0 * scale, &shifted);
            if !plain.is_finite() || !moved.is_finite() {
                return Err(Error::Numeric("left-invariance integrand is not finite".into()));
            }
            values.push((plain, moved));
        }
        let (p1, m1) = values[0];
        let (p2, m2) = values[1];
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        if rel(p1, p2) > 1e-3 || rel(m1, m2) > 1e-3 {
            return Err(Error::Divergence(format!(
                "test function is not integrable against σ dp dq for `{}` (nested values {p1:.6e} → {p2:.6e}, shifted {m1:.6e} → {m2:.6e})",
                self.name
            )));
        }
        Ok((m2 - p2).abs())
    }

    fn detect_fibration(&mut self) {
        let sample = validation_sample();
        let mut ok = true;
        for g in &sample {
            let e0 = self.eta(0.0, g.q);
            let t = self.xi(0.0, g.q);
            let s = self.xi(1.0, g.q) - t;
            let tol = 1e-12 * (1.0 + e0.abs());
            if (self.eta(g.p, g.q) - e0).abs() > tol {
                ok = false;
                break;
            }
            let lin = t + s * g.p;
            if (self.xi(g.p, g.q) - lin).abs() > 1e-10 * (1.0 + lin.abs()) {
                ok = false;
                break;
            }
        }
        if !ok {
            self.fibration = None;
            return;
        }
        let (xi1, xi2, eta1) = (self.xi.clone(), self.xi.clone(), self.eta.clone());
        let param = self.clone();
        let shift_free = sample.iter().all(|g| self.xi(0.0, g.q).abs() < 1e-14);
        self.fibration = Some(Fibration {
            scale: Arc::new(move |q| xi1(1.0, q) - xi1(0.0, q)),
            shift: Arc::new(move |q| xi2(0.0, q)),
            eta: Arc::new(move |q| eta1(0.0, q)),
            weight: Arc::new(move |q| {
                let s = param.xi(1.0, q) - param.xi(0.0, q);
                param.sigma(0.0, q) / s.abs()
            }),
            shift_free,
        });
    }
}

/// Builder for custom parametrizations.
pub struct CustomBuilder {
    name: String,
    xi: PhaseFn,
    eta: PhaseFn,
    jacobian: Option<PhaseFn>,
    inverse: Option<InverseFn>,
}

impl CustomBuilder {
    pub fn with_jacobian(mut self, j: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn with_inverse(mut self, inv: impl Fn(f64, f64) -> Option<(f64, f64)> + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inv));
        self
    }

    /// Validates on the standard sample and detects the fibered structure.
    pub fn build(self) -> Result<Parametrization> {
        let mut param = Parametrization {
            name: self.name,
            xi: self.xi,
            eta: self.eta,
            jacobian: self.jacobian,
            inverse: self.inverse,
            builtin: None,
            fibration: None,
        };
        param.validate()?;
        param.detect_fibration();
        Ok(param)
    }
}

/// `σ(p, q)`, the invariant measure density in phase-space coordinates.
#[derive(Clone)]
pub struct MeasureDensity {
    sigma: PhaseFn,
}

impl MeasureDensity {
    pub fn sigma(&self, p: f64, q: f64) -> f64 {
        (self.sigma)(p, q)
    }
}

impl fmt::Debug for MeasureDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MeasureDensity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pt(p: f64, q: f64) -> PhasePoint {
        PhasePoint::new(p, q).unwrap()
    }

    fn squared() -> Parametrization {
        Parametrization::custom("squared", |p, _| p, |_, q| q * q).build().unwrap()
    }

    #[test]
    fn phase_point_rejects_lower_half_plane() {
        assert!(PhasePoint::new(1.0, 0.0).is_err());
        assert!(PhasePoint::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn builtin_composition_laws() {
        let c1 = Parametrization::param1().compose(pt(1.0, 2.0), pt(3.0, 4.0)).unwrap();
        assert_eq!(c1, pt(7.0, 8.0));
        let c2 = Parametrization::param2().compose(pt(1.0, 2.0), pt(3.0, 4.0)).unwrap();
        assert_abs_diff_eq!(c2.p, 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c2.q, 8.0, epsilon = 1e-14);
    }

    #[test]
    fn identities() {
        for param in [Parametrization::param1(), Parametrization::param2(), squared()] {
            let e = param.identity().unwrap();
            assert_abs_diff_eq!(e.p, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(e.q, 1.0, epsilon = 1e-12);
            let g = pt(-0.7, 3.2);
            assert!(param.compose(e, g).unwrap().distance(&g) < 1e-10);
            assert!(param.compose(g, e).unwrap().distance(&g) < 1e-10);
            assert!(param.inverse_element(e).unwrap().distance(&e) < 1e-12);
        }
    }

    #[test]
    fn inverse_elements() {
        let i1 = Parametrization::param1().inverse_element(pt(1.0, 2.0)).unwrap();
        assert_eq!(i1, pt(-0.5, 0.5));
        let i2 = Parametrization::param2().inverse_element(pt(1.0, 2.0)).unwrap();
        assert_abs_diff_eq!(i2.p, -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(i2.q, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn measure_densities() {
        let s1 = Parametrization::param1().measure_density().unwrap();
        let s2 = Parametrization::param2().measure_density().unwrap();
        let s3 = squared().measure_density().unwrap();
        for &(p, q) in &[(0.3, 0.5), (-2.0, 3.0), (4.0, 0.2)] {
            assert_abs_diff_eq!(s1.sigma(p, q), 1.0 / (q * q), epsilon = 1e-14);
            assert_abs_diff_eq!(s2.sigma(p, q), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(s3.sigma(p, q), 2.0 / q.powi(3), epsilon = 1e-8 * (2.0 / q.powi(3)));
        }
    }

    #[test]
    fn degenerate_parametrizations_are_rejected() {
        let flat = Parametrization::custom("flat", |p, q| p + q, |p, q| (p + q).exp()).build();
        assert!(matches!(flat, Err(Error::DegenerateParametrization { .. })));
        let negative = Parametrization::custom("neg", |p, _| p, |_, q| -q).build();
        assert!(matches!(negative, Err(Error::DegenerateParametrization { .. })));
    }

    #[test]
    fn fibration_detection() {
        assert!(squared().fibration().is_some());
        let f = squared().fibration().unwrap().clone();
        assert_abs_diff_eq!(f.reduced_weight(2.0), 2.0 * 2.0 / 16.0, epsilon = 1e-8);
        let twisted = Parametrization::custom("twisted", |p, _| p, |p, q| q * (0.2 * p).exp())
            .build()
            .unwrap();
        assert!(twisted.fibration().is_none());
    }

    #[test]
    fn group_action_is_compatible_with_composition() {
        for param in [Parametrization::param1(), Parametrization::param2()] {
            let (g1, g2) = (pt(0.4, 1.7), pt(-2.2, 0.3));
            let g12 = param.compose(g1, g2).unwrap();
            for x in [-1.0, 0.5, 3.0] {
                assert_abs_diff_eq!(param.act(g12, x), param.act(g1, param.act(g2, x)), epsilon = 1e-12);
            }
        }
        // the explicit actions x q + p and x / q̃ + p̃
        assert_abs_diff_eq!(Parametrization::param1().act(pt(1.0, 2.0), 3.0), 7.0);
        assert_abs_diff_eq!(Parametrization::param2().act(pt(1.0, 2.0), 3.0), 2.5);
    }

    #[test]
    fn left_invariance_of_builtin_measures() {
        let bump = |p: f64, q: f64| (-p * p - q.ln().powi(2)).exp();
        let d1 = Parametrization::param1().left_invariance_defect(pt(1.0, 2.0), bump).unwrap();
        assert!(d1 < 1e-6, "{d1}");
        let d2 = Parametrization::param2().left_invariance_defect(pt(0.0, 3.0), bump).unwrap();
        assert!(d2 < 1e-6, "{d2}");
        let d0 = Parametrization::param2().left_invariance_defect(pt(0.0, 1.0), bump).unwrap();
        assert!(d0 < 1e-12, "{d0}");
    }

    #[test]
    fn non_integrable_test_function_is_divergent() {
        let r = Parametrization::param2().left_invariance_defect(pt(1.0, 2.0), |_, q| q);
        assert!(matches!(r, Err(Error::Divergence(_))));
    }
}
