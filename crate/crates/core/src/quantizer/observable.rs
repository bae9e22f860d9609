use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

pub type QFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PQFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableKind {
    PIndependent,
    LinearInP,
    SeparableGaussianP,
    Generic,
}

/// `amplitude · exp(-((p - center) / width)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProfile {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl GaussianProfile {
    pub fn eval(&self, p: f64) -> f64 {
        let z = (p - self.center) / self.width;
        self.amplitude * (-z * z).exp()
    }
}

/// Observables with a known closed-form quantization under the built-in
/// parametrizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Special {
    /// `f(p, q) = q`.
    Position,
    /// `f(p, q) = p q`.
    Dilation,
}

/// A real phase-space function `f(p, q)` together with the structure of its
/// `p`-dependence, which selects the quantization path.
#[derive(Clone)]
pub struct Observable {
    kind: ObservableKind,
    label: String,
    g0: Option<QFn>,
    g1: Option<QFn>,
    profile: Option<GaussianProfile>,
    f: PQFn,
    special: Option<Special>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("kind", &self.kind)
            .field("label", &self.label)
            .field("profile", &self.profile)
            .field("special", &self.special)
            .finish_non_exhaustive()
    }
}

fn check_width(profile: &GaussianProfile) -> Result<()> {
    if profile.width > 0.0 && profile.width.is_finite() && profile.amplitude.is_finite() && profile.center.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("invalid Gaussian p-profile {profile:?}")))
    }
}

impl Observable {
    /// `f(p, q) = g(q)`.
    pub fn p_independent(label: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let g: QFn = Arc::new(g);
        let gf = g.clone();
        Self {
            kind: ObservableKind::PIndependent,
            label: label.into(),
            g0: Some(g),
            g1: None,
            profile: None,
            f: Arc::new(move |_, q| gf(q)),
            special: None,
        }
    }

    /// `f(p, q) = g0(q) + p g1(q)`.
    pub fn linear_in_p(
        label: impl Into<String>,
        g0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g1: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let (g0, g1): (QFn, QFn) = (Arc::new(g0), Arc::new(g1));
        let (a, b) = (g0.clone(), g1.clone());
        Self {
            kind: ObservableKind::LinearInP,
            label: label.into(),
            g0: Some(g0),
            g1: Some(g1),
            profile: None,
            f: Arc::new(move |p, q| a(q) + p * b(q)),
            special: None,
        }
    }

    /// `f(p, q) = amplitude · exp(-((p - center)/width)²) · g(q)`.
    pub fn separable_gaussian_p(
        label: impl Into<String>,
        profile: GaussianProfile,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_width(&profile)?;
        let g: QFn = Arc::new(g);
        let gf = g.clone();
        Ok(Self {
            kind: ObservableKind::SeparableGaussianP,
            label: label.into(),
            g0: Some(g),
            g1: None,
            profile: Some(profile),
            f: Arc::new(move |p, q| profile.eval(p) * gf(q)),
            special: None,
        })
    }

    /// Arbitrary `f(p, q)`; quantized by the generic quadrature path.
    pub fn generic(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            kind: ObservableKind::Generic,
            label: label.into(),
            g0: None,
            g1: None,
            profile: None,
            f: Arc::new(f),
            special: None,
        }
    }

    /// Builds an observable of the given kind from parsed expressions.
    ///
    /// `p-independent` takes `[g]`, `linear-in-p` takes `[g0, g1]`,
    /// `separable-gaussian-p` takes `[g]` plus the profile and `generic` takes `[f]`.
    pub fn from_exprs(
        kind: ObservableKind,
        label: impl Into<String>,
        exprs: &[Expr],
        profile: Option<GaussianProfile>,
    ) -> Result<Self> {
        let label = label.into();
        let expect = |n: usize| {
            if exprs.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!("observable `{label}`: {kind:?} needs {n} expression(s), got {}", exprs.len())))
            }
        };
        let q_only = |e: &Expr, what: &str| {
            if e.uses_p() {
                Err(Error::Config(format!("observable `{label}`: {what} must not depend on p")))
            } else {
                let e = e.clone();
                Ok(move |q: f64| e.eval_or_nan(0.0, q))
            }
        };
        match kind {
            ObservableKind::PIndependent => {
                expect(1)?;
                Ok(Self::p_independent(label.clone(), q_only(&exprs[0], "g")?))
            }
            ObservableKind::LinearInP => {
                expect(2)?;
                Ok(Self::linear_in_p(label.clone(), q_only(&exprs[0], "g0")?, q_only(&exprs[1], "g1")?))
            }
            ObservableKind::SeparableGaussianP => {
                expect(1)?;
                let profile = profile
                    .ok_or_else(|| Error::Config(format!("observable `{label}`: missing Gaussian p-profile")))?;
                Self::separable_gaussian_p(label.clone(), profile, q_only(&exprs[0], "g")?)
            }
            ObservableKind::Generic => {
                expect(1)?;
                let e = exprs[0].clone();
                Ok(Self::generic(label.clone(), move |p, q| e.eval_or_nan(p, q)))
            }
        }
    }

    /// `f(p, q) = q`.
    pub fn position() -> Self {
        Self { special: Some(Special::Position), ..Self::p_independent("q", |q| q) }
    }

    /// `f(p, q) = p q`.
    pub fn dilation() -> Self {
        Self { special: Some(Special::Dilation), ..Self::linear_in_p("p*q", |_| 0.0, |q| q) }
    }

    pub fn constant(c: f64) -> Self {
        Self::p_independent(format!("{c:?}"), move |_| c)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn kind(&self) -> ObservableKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn special(&self) -> Option<Special> {
        self.special
    }

    pub fn profile(&self) -> Option<GaussianProfile> {
        self.profile
    }

    /// `g(q)` (p-independent and Gaussian kinds) or `g0(q)` (linear kind).
    pub fn g0(&self, q: f64) -> Option<f64> {
        self.g0.as_ref().map(|g| g(q))
    }

    /// `g1(q)` of the linear kind.
    pub fn g1(&self, q: f64) -> Option<f64> {
        self.g1.as_ref().map(|g| g(q))
    }

    pub fn eval(&self, p: f64, q: f64) -> f64 {
        (self.f)(p, q)
    }

    /// Same observable, treated as generic so that the generic path is used.
    pub fn as_generic(&self) -> Self {
        Self { kind: ObservableKind::Generic, g0: None, g1: None, profile: None, special: None, ..self.clone() }
    }

    /// `(p, q) ↦ f(p, 1/q)`, keeping the kind.
    pub fn q_inverted(&self) -> Self {
        let inv = |g: &Option<QFn>| {
            g.as_ref().map(|g| {
                let g = g.clone();
                Arc::new(move |q: f64| g(1.0 / q)) as QFn
            })
        };
        let f = self.f.clone();
        Self {
            kind: self.kind,
            label: format!("({})[q -> 1/q]", self.label),
            g0: inv(&self.g0),
            g1: inv(&self.g1),
            profile: self.profile,
            f: Arc::new(move |p, q| f(p, 1.0 / q)),
            special: None,
        }
    }

    /// `a f + b g` for two observables of the same kind (and the same
    /// Gaussian profile shape for the separable kind).
    pub fn linear_combination(a: f64, f: &Observable, b: f64, g: &Observable) -> Result<Self> {
        if f.kind != g.kind {
            return Err(Error::Domain(format!("cannot combine {:?} with {:?}", f.kind, g.kind)));
        }
        let label = format!("{a:?}*({}) + {b:?}*({})", f.label, g.label);
        let mix = |x: &Option<QFn>, y: &Option<QFn>| match (x, y) {
            (Some(x), Some(y)) => {
                let (x, y) = (x.clone(), y.clone());
                Some(Arc::new(move |q: f64| a * x(q) + b * y(q)) as QFn)
            }
            _ => None,
        };
        let profile = match (f.profile, g.profile) {
            (Some(pf), Some(pg)) => {
                if pf.center != pg.center || pf.width != pg.width {
                    return Err(Error::Domain("Gaussian profiles differ in center or width".into()));
                }
                // amplitudes are folded into g
                let (af, ag) = (pf.amplitude, pg.amplitude);
                let (x, y) = (f.g0.clone().unwrap(), g.g0.clone().unwrap());
                let gsum = move |q: f64| a * af * x(q) + b * ag * y(q);
                return Self::separable_gaussian_p(label, GaussianProfile { amplitude: 1.0, ..pf }, gsum);
            }
            _ => None,
        };
        let (ff, gf) = (f.f.clone(), g.f.clone());
        Ok(Self {
            kind: f.kind,
            label,
            g0: mix(&f.g0, &g.g0),
            g1: mix(&f.g1, &g.g1),
            profile,
            f: Arc::new(move |p, q| a * ff(p, q) + b * gf(p, q)),
            special: None,
        })
    }
}
