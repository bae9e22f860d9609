//! Fiducial vectors and their admissibility constants
//! `A_Φ = ∫ dx x⁻² |Φ|²` and `B_Φ = ∫ dx x⁻³ |Φ|²`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::hilbert::HalfLineFunction;
use crate::quadrature::adaptive_gk;

pub type ProfileFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Relative growth across two domain nestings above which an integral is divergent.
pub const DIVERGENCE_GROWTH: f64 = 1e-3;

#[derive(Clone)]
enum Profile {
    /// `x^α e^{-βx}`, evaluated in log space.
    Family { alpha: f64, beta: f64 },
    /// Natural cubic spline through `(ln x_i, Φ_i)`, zero outside the table.
    Tabulated(Spline),
    Custom(ProfileFn),
}

/// Normalized fiducial vector `Φ ∈ L²(ℝ₊, dx/x)`.
#[derive(Clone)]
pub struct FiducialVector {
    profile: Profile,
    log_scale: f64,
    a: f64,
    b: Option<f64>,
    real: bool,
    tag: String,
}

impl fmt::Debug for FiducialVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiducialVector")
            .field("tag", &self.tag)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("real", &self.real)
            .finish()
    }
}

/// `Φ_{α,β}(x) = N x^α e^{-βx}` with `A_Φ` and `B_Φ` both finite (`α > 1`).
pub fn make_fiducial(alpha: f64, beta: f64) -> Result<FiducialVector> {
    let phi = FiducialVector::family(alpha, beta, true)?;
    Ok(phi)
}

impl FiducialVector {
    /// Family member; `require_b` demands a finite `B_Φ` (`α > 1`), otherwise
    /// `α > 1/2` suffices and `B_Φ` is left undefined.
    pub fn family(alpha: f64, beta: f64, require_b: bool) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() || !alpha.is_finite() {
            return Err(Error::Domain(format!("fiducial family needs finite α and β > 0, got ({alpha}, {beta})")));
        }
        if alpha <= 0.5 {
            return Err(Error::Admissibility {
                constant: "A_Φ",
                detail: format!("x^{{2α-2}} is not integrable at 0 for α = {alpha} ≤ 1/2"),
            });
        }
        if require_b && alpha <= 1.0 {
            return Err(Error::Admissibility {
                constant: "B_Φ",
                detail: format!("x^{{2α-3}} is not integrable at 0 for α = {alpha} ≤ 1"),
            });
        }
        let mut phi = Self::family_unchecked(alpha, beta);
        phi.a = 2.0 * beta / (2.0 * alpha - 1.0);
        phi.b = (alpha > 1.0).then(|| 4.0 * beta * beta / ((2.0 * alpha - 1.0) * (2.0 * alpha - 2.0)));
        Ok(phi)
    }

    /// Normalized family member without any admissibility check; the cached
    /// constants are NaN. Meant for exercising [`Self::admissibility_report`].
    pub fn family_unchecked(alpha: f64, beta: f64) -> Self {
        // N² = (2β)^{2α} / Γ(2α)
        let log_scale = 0.5 * (2.0 * alpha * (2.0 * beta).ln() - ln_gamma(2.0 * alpha));
        Self {
            profile: Profile::Family { alpha, beta },
            log_scale,
            a: f64::NAN,
            b: None,
            real: true,
            tag: format!("family(alpha={alpha}, beta={beta})"),
        }
    }

    /// Profile given by a closure; normalized and checked by quadrature.
    pub fn from_fn(
        tag: impl Into<String>,
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        real: bool,
    ) -> Result<Self> {
        Self::from_profile(Profile::Custom(Arc::new(f)), tag.into(), real)
    }

    /// Profile tabulated as `(x, Φ(x))` pairs, `x > 0` strictly increasing.
    pub fn from_table(tag: impl Into<String>, points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::Domain("tabulated profile needs at least 4 points".into()));
        }
        let mut ys = Vec::with_capacity(points.len());
        let mut vs = Vec::with_capacity(points.len());
        for &(x, v) in points {
            if !(x > 0.0) || !x.is_finite() || !v.is_finite() {
                return Err(Error::Domain(format!("invalid profile sample ({x}, {v})")));
            }
            ys.push(x.ln());
            vs.push(v);
        }
        if ys.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("profile abscissae must be strictly increasing".into()));
        }
        Self::from_profile(Profile::Tabulated(Spline::natural(ys, vs)), tag.into(), true)
    }

    /// Reads a two-column text file `x Φ(x)`; `#` starts a comment.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::Config(format!("{}:{}: expected two columns", path.display(), lineno + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("{}:{}: `{s}` is not a number", path.display(), lineno + 1)))
            };
            points.push((parse(cols[0])?, parse(cols[1])?));
        }
        Self::from_table(format!("table({})", path.display()), &points)
    }

    fn from_profile(profile: Profile, tag: String, real: bool) -> Result<Self> {
        let raw = Self { profile, log_scale: 0.0, a: f64::NAN, b: None, real, tag };
        let norm = raw.norm_squared_moment();
        if norm.divergent || !(norm.value > 0.0) {
            return Err(Error::Domain(format!("profile `{}` is not normalizable", raw.tag)));
        }
        let mut phi = Self { log_scale: -0.5 * norm.value.ln(), ..raw };
        let report = phi.admissibility_report();
        if report.a.divergent {
            return Err(Error::Admissibility { constant: "A_Φ", detail: format!("profile `{}`", phi.tag) });
        }
        phi.a = report.a.value;
        phi.b = (!report.b.divergent).then_some(report.b.value);
        Ok(phi)
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// `(α, β)` for family members.
    pub fn family_params(&self) -> Option<(f64, f64)> {
        match self.profile {
            Profile::Family { alpha, beta } => Some((alpha, beta)),
            _ => None,
        }
    }

    /// `A_Φ`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// `B_Φ`, or an admissibility error when it diverges.
    pub fn b(&self) -> Result<f64> {
        self.b.ok_or_else(|| Error::Admissibility { constant: "B_Φ", detail: format!("fiducial `{}`", self.tag) })
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        if !(x > 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        match &self.profile {
            Profile::Family { alpha, beta } => {
                let l = self.log_scale + alpha * x.ln() - beta * x;
                Complex64::new(l.exp(), 0.0)
            }
            Profile::Tabulated(s) => Complex64::new(s.eval(x.ln()) * self.log_scale.exp(), 0.0),
            Profile::Custom(f) => f(x) * self.log_scale.exp(),
        }
    }

    /// `|Φ(x)|²`.
    pub fn density(&self, x: f64) -> f64 {
        match &self.profile {
            Profile::Family { alpha, beta } if x > 0.0 => (2.0 * (self.log_scale + alpha * x.ln() - beta * x)).exp(),
            _ => self.eval(x).norm_sqr(),
        }
    }

    /// Interval `[a, b]` in `ln x` outside of which `|Φ(x)| < rel · max |Φ|`.
    pub fn log_support(&self, rel: f64) -> (f64, f64) {
        let (lo, hi) = match &self.profile {
            Profile::Tabulated(s) => (s.ys[0], s.ys[s.ys.len() - 1]),
            _ => (-120.0, 120.0),
        };
        let steps = ((hi - lo) / 0.02).ceil() as usize;
        let ys: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
        let mags: Vec<f64> = ys.iter().map(|&y| self.density(y.exp()).sqrt()).collect();
        let peak = mags.iter().cloned().fold(0.0, f64::max);
        let cut = rel * peak;
        let first = mags.iter().position(|&m| m >= cut).unwrap_or(0);
        let last = mags.iter().rposition(|&m| m >= cut).unwrap_or(steps);
        (ys[first.saturating_sub(1)], ys[(last + 1).min(steps)])
    }

    /// `∫ dx x^{-k} |Φ|²` on nested domains `y ∈ [-L, L]`, `L` growing by `ln 2`.
    fn moment(&self, k: i32) -> Moment {
        let (lo, hi) = match &self.profile {
            Profile::Tabulated(s) => (s.ys[0], s.ys[s.ys.len() - 1]),
            _ => (-40.0, 40.0),
        };
        let integral = |a: f64, b: f64| {
            let panels = ((b - a) * 2.0).ceil().max(1.0) as usize;
            adaptive_gk(
                |y: f64| {
                    let x = y.exp();
                    // dν = dy carries one factor x: x^{-k} dx = x^{1-k} dy
                    self.density(x) * ((1 - k) as f64 * y).exp()
                },
                a,
                b,
                panels,
                1e-300,
                1e-13,
                20_000,
            )
            .value
        };
        let l2 = std::f64::consts::LN_2;
        let nested: Vec<(f64, f64)> = (0..3)
            .map(|j| {
                let ext = j as f64 * l2;
                (ext, integral(lo - ext, hi + ext))
            })
            .collect();
        let (v0, v2) = (nested[0].1, nested[2].1);
        let value = v2;
        let divergent = !value.is_finite() || (v2 - v0).abs() > DIVERGENCE_GROWTH * value.abs();
        Moment { value, converged: !divergent, divergent }
    }

    fn norm_squared_moment(&self) -> Moment {
        self.moment(1)
    }

    /// Norm, `A_Φ` and `B_Φ` by nested-domain quadrature with convergence flags.
    pub fn admissibility_report(&self) -> AdmissibilityReport {
        AdmissibilityReport { norm: self.moment(1), a: self.moment(2), b: self.moment(3) }
    }
}

impl HalfLineFunction for FiducialVector {
    fn value(&self, x: f64) -> Complex64 {
        self.eval(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Moment {
    pub value: f64,
    pub converged: bool,
    pub divergent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AdmissibilityReport {
    pub norm: Moment,
    pub a: Moment,
    pub b: Moment,
}

#[derive(Clone, Debug)]
struct Spline {
    ys: Vec<f64>,
    vs: Vec<f64>,
    second: Vec<f64>,
}

impl Spline {
    fn natural(ys: Vec<f64>, vs: Vec<f64>) -> Self {
        let n = ys.len();
        let mut second = vec![0.0; n];
        let mut u = vec![0.0; n];
        for i in 1..n - 1 {
            let sig = (ys[i] - ys[i - 1]) / (ys[i + 1] - ys[i - 1]);
            let p = sig * second[i - 1] + 2.0;
            second[i] = (sig - 1.0) / p;
            let d = (vs[i + 1] - vs[i]) / (ys[i + 1] - ys[i]) - (vs[i] - vs[i - 1]) / (ys[i] - ys[i - 1]);
            u[i] = (6.0 * d / (ys[i + 1] - ys[i - 1]) - sig * u[i - 1]) / p;
        }
        second[n - 1] = 0.0;
        for k in (0..n - 1).rev() {
            second[k] = second[k] * second[k + 1] + u[k];
        }
        second[0] = 0.0;
        Self { ys, vs, second }
    }

    fn eval(&self, y: f64) -> f64 {
        let n = self.ys.len();
        if y < self.ys[0] || y > self.ys[n - 1] {
            return 0.0;
        }
        let hi = self.ys.partition_point(|&v| v < y).clamp(1, n - 1);
        let lo = hi - 1;
        let h = self.ys[hi] - self.ys[lo];
        let a = (self.ys[hi] - y) / h;
        let b = (y - self.ys[lo]) / h;
        a * self.vs[lo]
            + b * self.vs[hi]
            + ((a * a * a - a) * self.second[lo] + (b * b * b - b) * self.second[hi]) * h * h / 6.0
    }
}
