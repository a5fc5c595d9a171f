//! The five pipelines behind the command line. Each returns its artifacts
//! in memory; writing and the manifest are handled by [`crate::run`].

use serde_json::{json, Map, Value};
use vibdsde_core::noise::sample_noise_split;
use vibdsde_core::verify::oracle::Fd1dProblem;
use vibdsde_core::verify::{
    comparison_check, containment_check, divergence_witness, oracle_solve, yosida_properties, yosida_rate_fit,
    OracleKind,
};
use vibdsde_core::*;

use crate::config::{CheckCfg, Command, FdCfg, Format, Problem, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{jnum, jopt, json_bytes, num, Artifact, Csv};

/// Files and a JSON summary; `passed` is false when a check failed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: Value,
    pub passed: bool,
}

struct Emit<'a> {
    formats: &'a [Format],
    artifacts: Vec<Artifact>,
}

impl Emit<'_> {
    fn csv(&mut self, name: &str, csv: Csv) {
        if self.formats.contains(&Format::Csv) {
            self.artifacts.push(Artifact::new(name, csv.into_bytes()));
        }
    }

    fn json(&mut self, name: &str, v: &Value) {
        if self.formats.contains(&Format::Json) {
            self.artifacts.push(Artifact::new(name, json_bytes(v)));
        }
    }
}

pub fn execute(cfg: &RunConfig, config_hash: &str) -> Result<Outcome> {
    let command = cfg
        .command
        .ok_or_else(|| CliError::invalid("command", "no command given on the command line or in the config"))?;
    let p = cfg.resolve()?;
    let mut out = Emit { formats: &cfg.output.formats, artifacts: Vec::new() };
    let (summary, passed) = match command {
        Command::Forward => (forward(cfg, &p, &mut out)?, true),
        Command::Solve => (solve(cfg, &p, &mut out)?, true),
        Command::Field => (field(cfg, &p, &mut out)?, true),
        Command::Rate => rate(cfg, &p, &mut out)?,
        Command::Verify => verify(cfg, &p, config_hash, &mut out)?,
    };
    Ok(Outcome { artifacts: out.artifacts, summary, passed })
}

fn bundle(cfg: &RunConfig, p: &Problem) -> Result<PathBundle> {
    Ok(sample_noise_split(&p.grid, p.paths, p.dom.dim(), cfg.seed(), cfg.scenario_seed())?)
}

fn forward(cfg: &RunConfig, p: &Problem, out: &mut Emit) -> Result<Value> {
    let s = forward_summary(&p.dom, &p.coeffs, &p.x0, &p.grid, p.paths, cfg.seed())?;
    let mut csv = Csv::new(&["t", "mean_x1", "mean_a"]);
    for k in 0..=p.grid.steps() {
        csv.nums(&[p.grid.node(k), s.node_mean_x1[k], s.node_mean_a[k]]);
    }
    out.csv("forward.csv", csv);
    let summary = json!({
        "paths": s.paths,
        "mean_a_terminal": jnum(s.mean_a_terminal),
        "std_err_a_terminal": jnum(s.std_err_a_terminal),
        "mean_x1_terminal": jnum(s.mean_x1_terminal),
        "min_phi": jnum(s.min_phi),
        "containment_violations": s.containment_violations,
        "local_time_violations": s.local_time_violations,
    });
    out.json("forward.json", &summary);
    Ok(summary)
}

/// Solution with the Picard residuals when the mode iterates.
fn solve_problem(fwd: &ForwardBatch, bundle: &PathBundle, p: &Problem) -> Result<(BackwardSolution, Option<Vec<f64>>)> {
    if let SolveMode::Picard { .. } = p.solver.mode {
        let o = picard_solve(fwd, bundle, &p.coeffs, &p.phi, &p.psi, &p.solver)?;
        Ok((o.solution, Some(o.residuals)))
    } else {
        Ok((solve_backward(fwd, bundle, &p.coeffs, &p.phi, &p.psi, &p.solver)?, None))
    }
}

fn solve(cfg: &RunConfig, p: &Problem, out: &mut Emit) -> Result<Value> {
    let bundle = bundle(cfg, p)?;
    let fwd = simulate_forward(&p.dom, &p.coeffs, &p.x0, &bundle, 0)?;
    let (sol, residuals) = solve_problem(&fwd, &bundle, p)?;
    let d = p.dom.dim();
    let n = p.grid.steps();
    let mut header = vec!["t".to_string(), "mean_y".into(), "std_err".into(), "mc_std_err".into()];
    header.extend((1..=d).map(|j| format!("mean_z{j}")));
    header.extend(["mean_u".into(), "mean_v".into()]);
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&hdr);
    for k in 0..=n {
        let mut row = vec![p.grid.node(k), sol.mean_y(k), sol.std_err(k), sol.mc_std_err(k)];
        if k < n {
            row.extend((0..d).map(|j| sol.mean_z(k, j)));
            row.extend([sol.mean_u(k), sol.mean_v(k)]);
        } else {
            // no increments after the terminal node
            row.extend(std::iter::repeat(0.0).take(d + 2));
        }
        csv.nums(&row);
    }
    out.csv("solution.csv", csv);
    let summary = json!({
        "y0": jnum(sol.mean_y(0)),
        "mc_std_err_y0": jnum(sol.mc_std_err(0)),
        "paths": sol.paths(),
        "steps": n,
        "regression_fallbacks": sol.regression_fallbacks(),
        "order_sensitive_steps": sol.order_sensitive_steps(),
        "picard_residuals": residuals.map(|r| r.into_iter().map(jnum).collect::<Vec<_>>()),
    });
    out.json("solution.json", &summary);
    Ok(summary)
}

fn field(cfg: &RunConfig, p: &Problem, out: &mut Emit) -> Result<Value> {
    let fc =
        cfg.field.as_ref().ok_or_else(|| CliError::invalid("field", "the field command needs a `field` section"))?;
    let bundle = bundle(cfg, p)?;
    let grid = FieldGrid { times: fc.times.clone(), points: fc.points.clone() };
    let f = build_field(&grid, &p.dom, &p.coeffs, &p.phi, &p.psi, &p.solver, &bundle)?;
    let d = p.dom.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|j| format!("x{j}")));
    header.extend(["u".into(), "std_err".into()]);
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&hdr);
    for (i, t) in f.times.iter().enumerate() {
        for (j, x) in f.points.iter().enumerate() {
            let mut row = vec![*t];
            row.extend(x);
            row.extend([f.value(i, j), f.std_err_at(i, j)]);
            csv.nums(&row);
        }
    }
    out.csv("field.csv", csv);
    let diag = if f.times.len() >= 2 && f.points.len() >= 2 {
        let dg = field_diagnostics(&f, &p.dom, &p.phi, &p.coeffs, p.grid.t_end())?;
        json!({
            "max_jump_x": jnum(dg.max_jump_x),
            "max_jump_t": jnum(dg.max_jump_t),
            "x_exponent": jopt(dg.x_exponent),
            "t_exponent": jopt(dg.t_exponent),
            "membership_violations": dg.membership_violations,
            "terminal_mismatch": dg.terminal_mismatch,
        })
    } else {
        Value::Null
    };
    let summary = json!({
        "times": f.times.len(),
        "points": f.points.len(),
        "scenario_seed": f.scenario_seed,
        "forward_seed": f.forward_seed,
        "paths": f.paths,
        "regression_fallbacks": f.regression_fallbacks,
        "diagnostics": diag,
    });
    out.json("field.json", &summary);
    Ok(summary)
}

fn rate(cfg: &RunConfig, p: &Problem, out: &mut Emit) -> Result<(Value, bool)> {
    let rc = cfg.rate.as_ref().ok_or_else(|| CliError::invalid("rate", "the rate command needs a `rate` section"))?;
    let bundle = bundle(cfg, p)?;
    let fwd = simulate_forward(&p.dom, &p.coeffs, &p.x0, &bundle, 0)?;
    let r = yosida_rate_fit(&fwd, &bundle, &p.coeffs, &p.phi, &p.psi, &p.solver, &rc.eps)?;
    let mut csv = Csv::new(&["eps", "gap", "abs_gap"]);
    for i in 0..r.eps.len() {
        csv.nums(&[r.eps[i], r.gaps[i], r.abs_gaps[i]]);
    }
    out.csv("rate.csv", csv);
    let pass = r.slope.is_some_and(|s| s >= rc.band[0] && s <= rc.band[1]);
    let summary = json!({
        "slope": jopt(r.slope),
        "abs_slope": jopt(r.abs_slope),
        "nonincreasing": r.nonincreasing,
        "band": [rc.band[0], rc.band[1]],
        "pass": pass,
    });
    out.json("rate.json", &summary);
    Ok((summary, pass))
}

/// One verification result.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub pass: bool,
    pub metrics: Map<String, Value>,
}

fn metrics(pairs: Vec<(&str, Value)>) -> Map<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Forward paths and the solution, built on first use.
struct Lazy<'a> {
    cfg: &'a RunConfig,
    p: &'a Problem,
    state: Option<(PathBundle, ForwardBatch, BackwardSolution)>,
}

impl Lazy<'_> {
    fn get(&mut self) -> Result<&(PathBundle, ForwardBatch, BackwardSolution)> {
        if self.state.is_none() {
            let b = bundle(self.cfg, self.p)?;
            let fwd = simulate_forward(&self.p.dom, &self.p.coeffs, &self.p.x0, &b, 0)?;
            let (sol, _) = solve_problem(&fwd, &b, self.p)?;
            self.state = Some((b, fwd, sol));
        }
        Ok(self.state.as_ref().expect("state was just filled"))
    }
}

fn verify(cfg: &RunConfig, p: &Problem, config_hash: &str, out: &mut Emit) -> Result<(Value, bool)> {
    let vc = cfg
        .verify
        .as_ref()
        .ok_or_else(|| CliError::invalid("verify", "the verify command needs a `verify` section"))?;
    let mut lazy = Lazy { cfg, p, state: None };
    let mut reports = Vec::new();
    for (i, check) in vc.checks.iter().enumerate() {
        reports.push(run_check(check, cfg, p, &mut lazy, &format!("verify.checks[{i}]"))?);
    }
    let mut csv = Csv::new(&["check", "pass", "metric", "value"]);
    for r in &reports {
        for (k, v) in &r.metrics {
            let value = match v {
                Value::Number(n) => n.as_f64().map(num).unwrap_or_else(|| n.to_string()),
                Value::Bool(b) => (*b as u8).to_string(),
                Value::String(s) if !s.contains(',') => s.clone(),
                _ => continue,
            };
            csv.row(&[r.name.to_string(), r.pass.to_string(), k.clone(), value]);
        }
    }
    out.csv("verify.csv", csv);
    let all: Vec<Value> = reports
        .iter()
        .map(|r| json!({"name": r.name, "pass": r.pass, "metrics": r.metrics, "config_hash": config_hash, "seed": cfg.seed()}))
        .collect();
    let passed = reports.iter().all(|r| r.pass);
    let summary = json!({"pass": passed, "checks": all});
    out.json("verify.json", &summary);
    Ok((summary, passed))
}

fn run_check(check: &CheckCfg, cfg: &RunConfig, p: &Problem, lazy: &mut Lazy, key: &str) -> Result<CheckReport> {
    let name = check.name();
    let d = p.dom.dim();
    let report = |pass: bool, m: Vec<(&str, Value)>| CheckReport { name, pass, metrics: metrics(m) };
    Ok(match check {
        CheckCfg::MoreauYosida { draws } => {
            let r = yosida_properties(*draws, cfg.seed());
            report(
                r.violations() == 0,
                vec![
                    ("draws", json!(r.draws)),
                    ("convexity", json!(r.convexity)),
                    ("subgradient", json!(r.subgradient)),
                    ("lipschitz", json!(r.lipschitz)),
                    ("monotone", json!(r.monotone)),
                    ("cross", json!(r.cross)),
                ],
            )
        }
        CheckCfg::Assumptions { samples } => {
            let r = p.coeffs.check_assumptions(&p.phi, &p.psi, d, *samples, cfg.seed());
            report(
                r.ok(),
                vec![
                    ("samples", json!(r.samples)),
                    ("f_modulus_violations", json!(r.f_modulus_violations)),
                    ("h_modulus_violations", json!(r.h_modulus_violations)),
                    ("g_monotonicity_violations", json!(r.g_monotonicity_violations)),
                    ("f_growth_violations", json!(r.f_growth_violations)),
                    ("chi_growth_violations", json!(r.chi_growth_violations)),
                ],
            )
        }
        CheckCfg::Modulus { rho } => {
            let rho = rho.build();
            let shape = rho.check_shape(2001, 1.0);
            let w = divergence_witness(&rho)?;
            report(
                shape.ok() && w.diverges,
                vec![
                    ("zero_at_origin", json!(shape.zero_at_origin)),
                    ("positive", json!(shape.positive)),
                    ("nondecreasing", json!(shape.nondecreasing)),
                    ("concave", json!(shape.concave)),
                    ("knot_gap", jnum(shape.knot_gap)),
                    ("diverges", json!(w.diverges)),
                    ("integral_from_1e-12", jnum(w.partial_integrals[0])),
                    ("integral_smallest_lower", jnum(*w.partial_integrals.last().unwrap_or(&f64::NAN))),
                ],
            )
        }
        CheckCfg::LocalTime { tolerance } => {
            let s = match (&p.dom, &p.coeffs.b, p.x0[0]) {
                (DomainSpec::HalfSpace { .. }, Drift::Zero, 0.0) => p.coeffs.sigma.scale(),
                _ => {
                    return Err(CliError::invalid(
                        key,
                        "local-time reference needs a half-space, zero drift and x0 on the boundary",
                    ))
                }
            };
            let f = forward_summary(&p.dom, &p.coeffs, &p.x0, &p.grid, p.paths, cfg.seed())?;
            let horizon = p.grid.t_end() - p.grid.t0();
            let expected = s * (2.0 * horizon / std::f64::consts::PI).sqrt();
            let rel = (f.mean_a_terminal - expected) / expected;
            report(
                rel.abs() <= *tolerance && f.containment_violations == 0,
                vec![
                    ("mean_a_terminal", jnum(f.mean_a_terminal)),
                    ("expected", jnum(expected)),
                    ("relative_error", jnum(rel)),
                    ("std_err", jnum(f.std_err_a_terminal)),
                    ("containment_violations", json!(f.containment_violations)),
                    ("tolerance", jnum(*tolerance)),
                ],
            )
        }
        CheckCfg::Oracle { tolerance, fd } => oracle_check(p, lazy, *tolerance, fd.as_ref(), key)?,
        CheckCfg::Comparison { f, g, chi } => {
            let c2 = cfg.comparison_coeffs(f, g, chi, d)?;
            let (b, fwd, _) = lazy.get()?;
            match comparison_check(fwd, b, &p.coeffs, &c2, &p.phi, &p.psi, &p.solver) {
                Ok(r) => report(
                    r.pass,
                    vec![
                        ("violation_fraction", jnum(r.violation_fraction)),
                        ("max_violation_std_errs", jnum(r.max_violation)),
                        ("max_gap", jnum(r.max_gap)),
                        ("path_nodes", json!(r.path_nodes)),
                        ("hypothesis_samples", json!(r.hypothesis_samples)),
                    ],
                ),
                Err(Error::HypothesisViolation(msg)) => report(false, vec![("hypothesis_violation", json!(msg))]),
                Err(e) => return Err(e.into()),
            }
        }
        CheckCfg::Containment { samples_per_node } => {
            let (_, fwd, sol) = lazy.get()?;
            let r = containment_check(fwd, sol, &p.phi, &p.psi, *samples_per_node, cfg.seed())?;
            report(
                r.pass(),
                vec![
                    ("path_nodes", json!(r.path_nodes)),
                    ("membership_fraction", jnum(r.membership_fraction())),
                    ("phi_membership_violations", json!(r.phi_membership_violations)),
                    ("psi_membership_violations", json!(r.psi_membership_violations)),
                    ("sign_samples", json!(r.sign_samples)),
                    ("phi_sign_violations", json!(r.phi_sign_violations)),
                    ("psi_sign_violations", json!(r.psi_sign_violations)),
                ],
            )
        }
    })
}

/// Matches the problem to a reference: Doss closed form, linear or clamped
/// ODE, or the 1-D finite-difference solver.
fn oracle_check(p: &Problem, lazy: &mut Lazy, tol: f64, fd: Option<&FdCfg>, key: &str) -> Result<CheckReport> {
    let c = &p.coeffs;
    let grid = p.grid;
    let (t0, t_end) = (grid.t0(), grid.t_end());
    let no_boundary = matches!(c.g, BoundaryDriver::Zero) && p.psi.is_zero();
    let deterministic_x =
        matches!(c.chi, Terminal::Constant { .. }) && matches!(c.f, Driver::Zero | Driver::Linear { .. });
    let times = grid.nodes();
    let mut pairs = Vec::new();
    let pass;
    match (&c.h, &c.f, &c.chi) {
        (NoiseDriver::ExpBeta { beta }, Driver::Zero, Terminal::Constant { c: chi })
            if no_boundary && p.phi.is_zero() =>
        {
            let (b, _, sol) = lazy.get()?;
            let path = b.b();
            let delta_b: Vec<f64> = (0..=grid.steps()).map(|k| path[grid.steps()] - path[k]).collect();
            let o = oracle_solve(&OracleKind::DossClosedForm { beta: *beta, chi: *chi, t_end, delta_b }, &times, &[])?;
            let rel = (sol.mean_y(0) - o.values[0]) / o.values[0];
            pass = rel.abs() <= tol;
            pairs.extend([
                ("reference", json!("doss_closed_form")),
                ("y0", jnum(sol.mean_y(0))),
                ("oracle_y0", jnum(o.values[0])),
                ("relative_error", jnum(rel)),
            ]);
        }
        (NoiseDriver::Zero, _, Terminal::Constant { c: chi }) if no_boundary && deterministic_x => {
            let a = match c.f {
                Driver::Linear { a } => a,
                _ => 0.0,
            };
            let (_, _, sol) = lazy.get()?;
            let kind = match p.phi {
                ConvexSpec::Zero => OracleKind::LinearExp { a, chi: *chi, t_end },
                ConvexSpec::IndicatorInterval { lo, hi } => {
                    OracleKind::ClampedOde { a, chi: *chi, lo, hi, t_end, steps: 64 * grid.steps() }
                }
                _ => return Err(CliError::invalid(key, "no reference solution for this constraint kind")),
            };
            let o = oracle_solve(&kind, &times, &[])?;
            let mut worst: f64 = 0.0;
            for (k, v) in o.values.iter().enumerate() {
                worst = worst.max((sol.mean_y(k) - v).abs() / v.abs().max(1e-300));
            }
            pass = worst <= tol;
            pairs.extend([
                (
                    "reference",
                    json!(if matches!(kind, OracleKind::LinearExp { .. }) { "linear_exp" } else { "clamped_ode" }),
                ),
                ("y0", jnum(sol.mean_y(0))),
                ("oracle_y0", jnum(o.values[0])),
                ("sup_relative_error", jnum(worst)),
            ]);
        }
        (NoiseDriver::Zero, _, _)
            if matches!(p.dom, DomainSpec::HalfSpace { dim: 1 }) && matches!(c.b, Drift::Zero) =>
        {
            let fd = fd.ok_or_else(|| {
                CliError::invalid(format!("{key}.fd"), "the finite-difference reference needs an `fd` section")
            })?;
            let prob = Fd1dProblem {
                sigma: c.sigma.scale(),
                f: c.f,
                g: c.g,
                chi: c.chi.clone(),
                phi: p.phi,
                psi: p.psi,
                t_end,
                length: fd.length,
                nx: fd.nx,
                nt: fd.nt,
                levels: fd.levels,
            };
            let o = oracle_solve(&OracleKind::Fd1d(prob), &[t0], &[p.x0[0]])?;
            let (_, _, sol) = lazy.get()?;
            let rel = (sol.mean_y(0) - o.values[0]) / o.values[0].abs().max(1e-300);
            let factor = o.halving_factor.unwrap_or(0.0);
            pass = rel.abs() <= tol && factor >= 1.7;
            pairs.extend([
                ("reference", json!("fd1d")),
                ("y0", jnum(sol.mean_y(0))),
                ("oracle_y0", jnum(o.values[0])),
                ("relative_error", jnum(rel)),
                ("halving_factor", jnum(factor)),
            ]);
        }
        _ => return Err(CliError::invalid(key, "no reference solution matches this problem")),
    }
    pairs.push(("tolerance", jnum(tol)));
    Ok(CheckReport { name: "oracle", pass, metrics: metrics(pairs) })
}
