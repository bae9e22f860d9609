//! Experiment configuration: a versioned TOML document validated into a run plan.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::affine::Parametrization;
use crate::error::{Error, Result};
use crate::expr::parse_expression;
use crate::fiducial::FiducialVector;
use crate::hilbert::{make_basis, BasisSet};
use crate::quantizer::{GaussianProfile, Observable, ObservableKind, QuantizeOptions};

pub const SCHEMA_VERSION: u32 = 1;
pub const GRID_ORDER_CAP_ENV: &str = "ACSQ_GRID_ORDER_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckIdentity,
    Quantize,
    Trace,
    CompareParametrizations,
    Commutators,
    Boundedness,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::CheckIdentity,
        Command::Quantize,
        Command::Trace,
        Command::CompareParametrizations,
        Command::Commutators,
        Command::Boundedness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CheckIdentity => "check-identity",
            Command::Quantize => "quantize",
            Command::Trace => "trace",
            Command::CompareParametrizations => "compare-parametrizations",
            Command::Commutators => "commutators",
            Command::Boundedness => "boundedness",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name).ok_or_else(|| {
            let known: Vec<&str> = Self::ALL.iter().map(|c| c.name()).collect();
            Error::Config(format!("unknown command `{name}` (expected one of {})", known.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    /// Stem of the output files.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub basis: BasisSpec,
    pub fiducial: FiducialSpec,
    pub parametrizations: Vec<ParametrizationSpec>,
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub size: usize,
    pub grid_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiducialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Two-column text file `x Φ(x)`, relative to the configuration file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
}

/// A built-in name (`param1`, `param2`) or a named pair of expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametrizationSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableKindSpec {
    PIndependent,
    LinearInP,
    SeparableGaussianP,
    Generic,
    /// `f = q`, with closed forms under the built-ins.
    Position,
    /// `f = p q`, with closed forms under the built-ins.
    Dilation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    pub label: String,
    pub kind: ObservableKindSpec,
    #[serde(default)]
    pub exprs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<GaussianProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Largest allowed `|M - 2πA 𝟙|` entry for `check-identity`.
    pub identity: f64,
    /// Largest allowed interior commutator defect.
    pub commutator: f64,
    pub p_max: f64,
    pub generic_tolerance: f64,
    pub force_generic: bool,
    /// Extra basis functions for the commutator convergence comparison.
    pub commutator_step: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let q = QuantizeOptions::default();
        Self {
            identity: 1e-6,
            commutator: 1e-4,
            p_max: q.p_max,
            generic_tolerance: q.generic_tolerance,
            force_generic: q.force_generic,
            commutator_step: 8,
        }
    }
}

impl Tolerances {
    pub fn quantize_options(&self) -> QuantizeOptions {
        QuantizeOptions { p_max: self.p_max, generic_tolerance: self.generic_tolerance, force_generic: self.force_generic }
    }
}

impl ExperimentConfig {
    /// Parses and checks the structure; semantic validation happens in [`Self::plan`].
    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!("schema: unsupported version {} (expected {SCHEMA_VERSION})", cfg.schema)));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&src)
    }

    /// Canonical TOML text: defaults written out, expressions in canonical form.
    pub fn canonical(&self) -> Result<String> {
        let mut c = self.clone();
        for p in &mut c.parametrizations {
            for e in [&mut p.xi, &mut p.eta].into_iter().flatten() {
                *e = parse_expression(e)?.to_string();
            }
        }
        for o in &mut c.observables {
            for e in &mut o.exprs {
                *e = parse_expression(e)?.to_string();
            }
        }
        toml::to_string(&c).map_err(|e| Error::Config(e.to_string()))
    }

    /// Validates every field into ready-to-run objects.
    pub fn plan(&self, base_dir: &Path, grid_order_cap: Option<usize>) -> Result<RunPlan> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("name: `{}` is not a valid file stem", self.name)));
        }
        let grid_order = grid_order_cap.map_or(self.basis.grid_order, |cap| self.basis.grid_order.min(cap));
        let basis = make_basis(self.basis.size, grid_order).map_err(|e| Error::Config(format!("basis: {e}")))?;
        let fiducial = self.fiducial_vector(base_dir)?;
        if self.parametrizations.is_empty() {
            return Err(Error::Config("parametrizations: at least one entry is required".into()));
        }
        let parametrizations = self
            .parametrizations
            .iter()
            .enumerate()
            .map(|(i, p)| parametrization(p).map_err(|e| Error::Config(format!("parametrizations[{i}] (`{}`): {e}", p.name))))
            .collect::<Result<Vec<_>>>()?;
        let observables = self
            .observables
            .iter()
            .enumerate()
            .map(|(i, o)| observable(o).map_err(|e| Error::Config(format!("observables[{i}] (`{}`): {e}", o.label))))
            .collect::<Result<Vec<_>>>()?;
        let t = &self.tolerances;
        for (field, v) in [("identity", t.identity), ("commutator", t.commutator), ("p_max", t.p_max), ("generic_tolerance", t.generic_tolerance)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("tolerances.{field}: must be positive and finite, got {v}")));
            }
        }
        Ok(RunPlan { basis, grid_order, fiducial, parametrizations, observables })
    }

    fn fiducial_vector(&self, base_dir: &Path) -> Result<FiducialVector> {
        let f = &self.fiducial;
        match (f.alpha, f.beta, &f.profile) {
            (Some(a), Some(b), None) => FiducialVector::family(a, b, false).map_err(|e| Error::Config(format!("fiducial: {e}"))),
            (None, None, Some(path)) => {
                FiducialVector::from_table_file(&base_dir.join(path)).map_err(|e| Error::Config(format!("fiducial.profile: {e}")))
            }
            _ => Err(Error::Config("fiducial: give either `alpha` and `beta`, or `profile`".into())),
        }
    }
}

fn parametrization(spec: &ParametrizationSpec) -> Result<Parametrization> {
    match (&spec.xi, &spec.eta) {
        (None, None) => Parametrization::by_name(&spec.name)
            .ok_or_else(|| Error::Config(format!("`{}` is not a built-in; give `xi` and `eta` expressions", spec.name))),
        (Some(xi), Some(eta)) => {
            if Parametrization::by_name(&spec.name).is_some() {
                return Err(Error::Config(format!("`{}` is reserved for a built-in parametrization", spec.name)));
            }
            let xi = parse_expression(xi).map_err(|e| Error::Config(format!("xi: {e}")))?;
            let eta = parse_expression(eta).map_err(|e| Error::Config(format!("eta: {e}")))?;
            Parametrization::custom(spec.name.clone(), move |p, q| xi.eval_or_nan(p, q), move |p, q| eta.eval_or_nan(p, q)).build()
        }
        _ => Err(Error::Config("custom parametrizations need both `xi` and `eta`".into())),
    }
}

fn observable(spec: &ObservableSpec) -> Result<Observable> {
    let exprs = spec
        .exprs
        .iter()
        .enumerate()
        .map(|(i, s)| parse_expression(s).map_err(|e| Error::Config(format!("exprs[{i}]: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let kind = match spec.kind {
        ObservableKindSpec::Position | ObservableKindSpec::Dilation => {
            if !exprs.is_empty() || spec.profile.is_some() {
                return Err(Error::Config("built-in observables take no expressions or profile".into()));
            }
            let f = if spec.kind == ObservableKindSpec::Position { Observable::position() } else { Observable::dilation() };
            return Ok(f.with_label(spec.label.clone()));
        }
        ObservableKindSpec::PIndependent => ObservableKind::PIndependent,
        ObservableKindSpec::LinearInP => ObservableKind::LinearInP,
        ObservableKindSpec::SeparableGaussianP => ObservableKind::SeparableGaussianP,
        ObservableKindSpec::Generic => ObservableKind::Generic,
    };
    Observable::from_exprs(kind, spec.label.clone(), &exprs, spec.profile)
}

/// A validated configuration.
pub struct RunPlan {
    pub basis: Arc<BasisSet>,
    /// Grid order after applying the cap from the environment.
    pub grid_order: usize,
    pub fiducial: FiducialVector,
    pub parametrizations: Vec<Parametrization>,
    pub observables: Vec<Observable>,
}

/// The cap from [`GRID_ORDER_CAP_ENV`], if set.
pub fn grid_order_cap_from_env() -> Result<Option<usize>> {
    match std::env::var(GRID_ORDER_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Config(format!("{GRID_ORDER_CAP_ENV}: `{v}` is not a positive integer"))),
        Err(_) => Ok(None),
    }
}
