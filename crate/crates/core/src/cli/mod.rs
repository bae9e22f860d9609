//! Configuration-driven experiment runner behind the `acsq` binary.
//!
//! Exit codes: 0 when the command ran and its verdicts pass (a divergence
//! verdict counts as a result), 1 for numerical failures or failed checks,
//! 2 for configuration errors.

pub mod config;
pub mod record;

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64;

use crate::analysis::{
    analytic_trace, boundedness_certificate, commutator_check, numeric_trace, trace_inequivalence_test, BoundednessVerdict,
    InequivalenceVerdict,
};
use crate::error::{Error, Result};
use crate::hilbert::make_basis;
use crate::quantizer::{quantize_with, resolution_of_identity_matrix, QuantizationPath};

pub use config::{grid_order_cap_from_env, Command, ExperimentConfig, RunPlan, GRID_ORDER_CAP_ENV, SCHEMA_VERSION};
pub use record::{MatrixRecord, ResultRecord, SeriesRecord, VERSION_TAG};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Exit status for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Syntax { .. } => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

/// Outcome of a command: the record and whether its verdicts pass.
pub struct Execution {
    pub record: ResultRecord,
    pub exit_code: i32,
}

/// Runs `command` (or the configuration's own) on a parsed configuration.
///
/// Configuration errors are returned as `Err`; numerical errors are stored in
/// the record with exit code 1.
pub fn execute(cfg: &ExperimentConfig, command: Option<Command>, base_dir: &Path, grid_order_cap: Option<usize>) -> Result<Execution> {
    let command = command
        .or(cfg.command)
        .ok_or_else(|| Error::Config("command: none given in the configuration or on the command line".into()))?;
    let plan = cfg.plan(base_dir, grid_order_cap)?;
    let canonical = ExperimentConfig::from_toml(&cfg.canonical()?)?;
    let mut rec = ResultRecord::new(command.name(), ExperimentConfig { command: Some(command), ..canonical }, plan.grid_order);
    let t = &cfg.tolerances;
    rec.tolerances.insert("p_max".into(), t.p_max);
    rec.tolerances.insert("generic_tolerance".into(), t.generic_tolerance);
    let start = Instant::now();
    let outcome = match command {
        Command::CheckIdentity => check_identity(&plan, cfg, &mut rec),
        Command::Quantize => quantize_cmd(&plan, cfg, &mut rec),
        Command::Trace => trace_cmd(&plan, cfg, &mut rec),
        Command::CompareParametrizations => compare_cmd(&plan, cfg, &mut rec),
        Command::Commutators => commutators_cmd(&plan, cfg, &mut rec),
        Command::Boundedness => boundedness_cmd(&plan, &mut rec),
    };
    rec.wall_time_seconds = start.elapsed().as_secs_f64();
    let exit_code = match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILURE,
        Err(e @ (Error::Config(_) | Error::Syntax { .. })) => return Err(e),
        Err(Error::Divergence(msg)) => {
            rec.verdict("run", "divergent");
            rec.notes.push(msg);
            EXIT_OK
        }
        Err(e) => {
            rec.error = Some(e.to_string());
            EXIT_FAILURE
        }
    };
    Ok(Execution { record: rec, exit_code })
}

/// Loads the configuration, executes, writes the outputs and returns the exit code.
pub fn run(config_path: &Path, command: Option<&str>, out_dir: &Path) -> (i32, String) {
    let attempt = || -> Result<Execution> {
        let cfg = ExperimentConfig::load(config_path)?;
        let command = command.map(Command::parse).transpose()?;
        let base = config_path.parent().unwrap_or(Path::new("."));
        execute(&cfg, command, base, grid_order_cap_from_env()?)
    };
    match attempt() {
        Ok(ex) => {
            let mut text = ex.record.render();
            match ex.record.write(out_dir) {
                Ok((json, csv)) => text.push_str(&format!("  wrote {} and {}\n", json.display(), csv.display())),
                Err(e) => return (EXIT_FAILURE, format!("{text}error writing outputs: {e}\n")),
            }
            (ex.exit_code, text)
        }
        Err(e) => (exit_code(&e), format!("{e}\n")),
    }
}

fn require_observables(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.observables.is_empty() {
        Err(Error::Config("observables: this command needs at least one observable".into()))
    } else {
        Ok(())
    }
}

fn check_identity(plan: &RunPlan, cfg: &ExperimentConfig, rec: &mut ResultRecord) -> Result<bool> {
    let tol = cfg.tolerances.identity;
    rec.tolerances.insert("identity".into(), tol);
    let target = 2.0 * PI * plan.fiducial.a();
    rec.scalar("two_pi_a", target);
    let mut pass = true;
    for param in &plan.parametrizations {
        let m = resolution_of_identity_matrix(param, &plan.fiducial, &plan.basis)?;
        let defect = m
            .entries()
            .indexed_iter()
            .map(|((a, b), v)| (v - Complex64::new(if a == b { target } else { 0.0 }, 0.0)).norm())
            .fold(0.0, f64::max);
        let ok = defect < tol;
        pass &= ok;
        rec.scalar(format!("{}.identity_defect", param.name()), defect);
        rec.verdict(param.name(), if ok { "pass" } else { "fail" });
        rec.matrices.push(MatrixRecord::new(format!("{}.resolution_of_identity", param.name()), m.entries()));
    }
    Ok(pass)
}

fn path_name(p: QuantizationPath) -> &'static str {
    match p {
        QuantizationPath::ClosedForm => "closed-form",
        QuantizationPath::ReducedQuadrature => "reduced-quadrature",
        QuantizationPath::GenericQuadrature => "generic-quadrature",
    }
}

fn quantize_cmd(plan: &RunPlan, cfg: &ExperimentConfig, rec: &mut ResultRecord) -> Result<bool> {
    require_observables(cfg)?;
    let opts = cfg.tolerances.quantize_options();
    for param in &plan.parametrizations {
        for f in &plan.observables {
            let key = format!("{}/{}", param.name(), f.label());
            match quantize_with(f, param, &plan.fiducial, &plan.basis, &opts) {
                Ok(op) => {
                    rec.scalar(format!("{key}.hermiticity_defect"), op.hermiticity_defect());
                    rec.scalar(format!("{key}.trace"), op.trace().re);
                    rec.verdict(key.clone(), path_name(op.path()));
                    rec.matrices.push(MatrixRecord::new(key, op.entries()));
                }
                Err(Error::Divergence(msg)) => {
                    rec.verdict(key.clone(), "divergent");
                    rec.notes.push(format!("{key}: {msg}"));
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(true)
}

fn trace_cmd(plan: &RunPlan, cfg: &ExperimentConfig, rec: &mut ResultRecord) -> Result<bool> {
    require_observables(cfg)?;
    rec.notes.push("trace comparisons are restricted to observables whose trace integral is stable under domain nesting".into());
    let opts = cfg.tolerances.quantize_options();
    let mut pass = true;
    for param in &plan.parametrizations {
        for f in &plan.observables {
            let key = format!("{}/{}", param.name(), f.label());
            let analytic = analytic_trace(f, param, &plan.fiducial);
            if let Some(v) = analytic.value {
                rec.scalar(format!("{key}.analytic_trace"), v);
                rec.scalar(format!("{key}.analytic_tolerance"), analytic.tolerance);
            }
            rec.series.push(nesting_series(format!("{key}.analytic_nesting"), &analytic.nesting_trace));
            let op = match quantize_with(f, param, &plan.fiducial, &plan.basis, &opts) {
                Ok(op) => op,
                Err(Error::Divergence(msg)) => {
                    rec.verdict(key.clone(), "divergent");
                    rec.notes.push(format!("{key}: {msg}"));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let report = numeric_trace(&op);
            rec.scalar(format!("{key}.numeric_trace"), report.numeric_trace);
            rec.scalar(format!("{key}.convergence_estimate"), report.convergence_estimate);
            let n = op.size();
            rec.series.push(SeriesRecord {
                name: format!("{key}.partial_traces"),
                x: (1..=n).map(|k| k as f64).collect(),
                y: (1..=n).map(|k| op.partial_trace(k).re).collect(),
            });
            let verdict = match analytic.value {
                None => "not-trace-class",
                Some(a) => {
                    let gap = (a - report.numeric_trace).abs();
                    rec.scalar(format!("{key}.gap"), gap);
                    rec.scalar(format!("{key}.allowed_gap"), report.allowed_gap());
                    if gap <= report.allowed_gap() {
                        "consistent"
                    } else {
                        pass = false;
                        "inconsistent"
                    }
                }
            };
            rec.verdict(key, verdict);
        }
    }
    Ok(pass)
}

fn nesting_series(name: String, trace: &[(crate::analysis::Domain, f64)]) -> SeriesRecord {
    SeriesRecord { name, x: trace.iter().map(|(d, _)| d.p_half_width).collect(), y: trace.iter().map(|(_, v)| *v).collect() }
}

fn compare_cmd(plan: &RunPlan, cfg: &ExperimentConfig, rec: &mut ResultRecord) -> Result<bool> {
    require_observables(cfg)?;
    rec.notes.push("traces compare param1 against param2; the test needs f(p, q) ≠ f(p, 1/q) and trace-class f".into());
    let opts = cfg.tolerances.quantize_options();
    for f in &plan.observables {
        let label = f.label();
        let r = trace_inequivalence_test(f, &plan.fiducial);
        for (k, v) in [("trace_param1", r.trace_param1), ("trace_param2", r.trace_param2), ("difference", r.difference)] {
            if let Some(v) = v {
                rec.scalar(format!("{label}.{k}"), v);
            }
        }
        rec.scalar(format!("{label}.threshold"), r.threshold);
        let verdict = match r.verdict {
            InequivalenceVerdict::Inequivalent => "inequivalent",
            InequivalenceVerdict::NotRefuted => "not-refuted",
            InequivalenceVerdict::Inconclusive => "inconclusive",
        };
        rec.verdict(label, verdict);
        rec.notes.push(format!("{label}: {}", r.reason));
        // matrix differences between the configured parametrizations
        let mut ops = Vec::new();
        for param in &plan.parametrizations {
            match quantize_with(f, param, &plan.fiducial, &plan.basis, &opts) {
                Ok(op) => ops.push((param.name().to_string(), op)),
                Err(Error::Divergence(msg)) => rec.notes.push(format!("{}/{label}: {msg}", param.name())),
                Err(e) => return Err(e),
            }
        }
        for i in 0..ops.len() {
            for j in (i + 1)..ops.len() {
                let d = ops[i].1.max_difference(&ops[j].1)?;
                rec.scalar(format!("{label}.max_difference.{}-{}", ops[i].0, ops[j].0), d);
            }
        }
    }
    Ok(true)
}

fn commutators_cmd(plan: &RunPlan, cfg: &ExperimentConfig, rec: &mut ResultRecord) -> Result<bool> {
    let t = &cfg.tolerances;
    rec.tolerances.insert("commutator".into(), t.commutator);
    let n = plan.basis.size();
    let larger = make_basis(n + t.commutator_step, plan.grid_order).map_err(|e| Error::Config(format!("basis (enlarged): {e}")))?;
    let mut pass = true;
    for (i, param) in plan.parametrizations.iter().enumerate() {
        let which = param.builtin_kind().ok_or_else(|| {
            Error::Config(format!("parametrizations[{i}] (`{}`): commutators are defined for the built-ins only", param.name()))
        })?;
        let small = commutator_check(which, &plan.fiducial, &plan.basis)?;
        let big = commutator_check(which, &plan.fiducial, &larger)?;
        let name = param.name();
        rec.scalar(format!("{name}.defect_n{n}"), small.interior_defect);
        rec.scalar(format!("{name}.defect_n{}", big.basis_size), big.interior_defect);
        rec.scalar(format!("{name}.opposite_sign_defect_n{n}"), small.opposite_sign_defect);
        rec.scalar(format!("{name}.opposite_sign_defect_n{}", big.basis_size), big.opposite_sign_defect);
        rec.notes.push(format!("{name}: {} on the block m, n < N - {}", small.relation, small.margin));
        let ok = small.interior_defect < t.commutator && big.interior_defect < small.interior_defect;
        pass &= ok;
        rec.verdict(name, if ok { "pass" } else { "fail" });
    }
    Ok(pass)
}

fn boundedness_cmd(plan: &RunPlan, rec: &mut ResultRecord) -> Result<bool> {
    if plan.observables.is_empty() {
        return Err(Error::Config("observables: this command needs at least one observable".into()));
    }
    for param in &plan.parametrizations {
        for f in &plan.observables {
            let key = format!("{}/{}", param.name(), f.label());
            let c = boundedness_certificate(f, param, &plan.fiducial);
            if let Some(v) = c.integral_value {
                rec.scalar(format!("{key}.integral"), v);
            }
            rec.series.push(nesting_series(format!("{key}.nesting"), &c.nesting_trace));
            let verdict = match c.verdict {
                BoundednessVerdict::Bounded => "bounded",
                BoundednessVerdict::Divergent => "divergent",
                BoundednessVerdict::Inconclusive => "inconclusive",
            };
            rec.verdict(key, verdict);
        }
    }
    Ok(true)
}

/// Rebuilds a matrix stored in a record.
pub fn matrix_from_record(m: &MatrixRecord) -> Array2<Complex64> {
    Array2::from_shape_fn((m.n, m.n), |(r, c)| Complex64::new(m.re[r * m.n + c], m.im[r * m.n + c]))
}
