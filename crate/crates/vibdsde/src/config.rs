//! JSON run configuration and its translation into solver inputs.
//!
//! Every object rejects unknown keys. Infinite interval endpoints are
//! written as the strings `"inf"` and `"-inf"`.

use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use vibdsde_core::coeffs::YProfile;
use vibdsde_core::*;

use crate::error::{CliError, Result};

/// A float that may be infinite; serialized as a number or `"inf"`/`"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtF64(pub f64);

impl Serialize for ExtF64 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            v if v == f64::INFINITY => s.serialize_str("inf"),
            v if v == f64::NEG_INFINITY => s.serialize_str("-inf"),
            v => s.serialize_f64(v),
        }
    }
}

impl<'de> Deserialize<'de> for ExtF64 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = ExtF64;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"+inf\", \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtF64, E> {
                Ok(ExtF64(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtF64, E> {
                Ok(ExtF64(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtF64, E> {
                Ok(ExtF64(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtF64, E> {
                match v {
                    "inf" | "+inf" => Ok(ExtF64(f64::INFINITY)),
                    "-inf" => Ok(ExtF64(f64::NEG_INFINITY)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Forward,
    Solve,
    Field,
    Verify,
    Rate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::Solve => "solve",
            Command::Field => "field",
            Command::Verify => "verify",
            Command::Rate => "rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainCfg {
    HalfSpace { dim: usize },
    Ball { radius: f64, r_min: f64, dim: usize },
    WholeSpace { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriverCfg {
    Zero,
    Constant { c: f64 },
    Linear { a: f64 },
    Affine { a: f64, bz: f64, c: f64 },
    LogLipschitz { k: f64, delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryCfg {
    Zero,
    Constant { c: f64 },
    Linear { a: f64 },
    Affine { a: f64, c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileCfg {
    Linear { beta: f64 },
    Sine { amp: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseCfg {
    Zero,
    ExpBeta { beta: f64 },
    Sine { amp: f64 },
    Separable { amp: f64, freq: f64, profile: ProfileCfg },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalCfg {
    Constant { c: f64 },
    Linear { a: f64, c: f64 },
    Abs,
    Table { xs: Vec<f64>, ys: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftCfg {
    Zero,
    Constant { v: Vec<f64> },
    Linear { a: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionCfg {
    ScaledIdentity { s: f64 },
}

fn zero_driver() -> DriverCfg {
    DriverCfg::Zero
}
fn zero_boundary() -> BoundaryCfg {
    BoundaryCfg::Zero
}
fn zero_noise() -> NoiseCfg {
    NoiseCfg::Zero
}
fn zero_drift() -> DriftCfg {
    DriftCfg::Zero
}
fn unit_diffusion() -> DiffusionCfg {
    DiffusionCfg::ScaledIdentity { s: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsCfg {
    #[serde(default = "zero_driver")]
    pub f: DriverCfg,
    #[serde(default = "zero_boundary")]
    pub g: BoundaryCfg,
    #[serde(default = "zero_noise")]
    pub h: NoiseCfg,
    pub chi: TerminalCfg,
    #[serde(default = "zero_drift")]
    pub b: DriftCfg,
    #[serde(default = "unit_diffusion")]
    pub sigma: DiffusionCfg,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexCfg {
    #[default]
    Zero,
    IndicatorInterval {
        lo: ExtF64,
        hi: ExtF64,
    },
    Quadratic {
        c: f64,
    },
    AbsValue {
        scale: f64,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsCfg {
    #[serde(default)]
    pub phi: ConvexCfg,
    #[serde(default)]
    pub psi: ConvexCfg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    #[serde(default)]
    pub t0: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(rename = "N")]
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloCfg {
    #[serde(rename = "M")]
    pub paths: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Seed of the backward path; defaults to `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StepModeCfg {
    Resolvent,
    Yosida { eps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeCfg {
    Resolvent,
    Yosida { eps: f64 },
    Picard { inner: StepModeCfg, max_iter: usize, tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackwardNoiseCfg {
    Milstein,
    Euler,
}

fn default_degree() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverCfg {
    #[serde(default = "default_mode")]
    pub mode: ModeCfg,
    #[serde(default = "default_degree")]
    pub basis_degree: usize,
    #[serde(default)]
    pub z_clip: Option<f64>,
    #[serde(default = "default_noise")]
    pub backward_noise: BackwardNoiseCfg,
}

fn default_mode() -> ModeCfg {
    ModeCfg::Resolvent
}
fn default_noise() -> BackwardNoiseCfg {
    BackwardNoiseCfg::Milstein
}

impl Default for SolverCfg {
    fn default() -> Self {
        SolverCfg {
            mode: default_mode(),
            basis_degree: default_degree(),
            z_clip: None,
            backward_noise: default_noise(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldCfg {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

fn default_band() -> [f64; 2] {
    [0.7, 1.3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateCfg {
    pub eps: Vec<f64>,
    /// Accepted range of the fitted slope.
    #[serde(default = "default_band")]
    pub band: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoCfg {
    Lipschitz { k: f64 },
    Rho1 { delta: f64 },
    Rho2 { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdCfg {
    pub length: f64,
    pub nx: usize,
    pub nt: usize,
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_levels() -> usize {
    3
}

fn default_draws() -> usize {
    10_000
}
fn default_tol() -> f64 {
    0.01
}
fn default_lt_tol() -> f64 {
    0.02
}
fn default_w_samples() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckCfg {
    /// Randomized Moreau–Yosida identities.
    MoreauYosida {
        #[serde(default = "default_draws")]
        draws: usize,
    },
    /// Modulus and growth bounds of the configured coefficients.
    Assumptions {
        #[serde(default = "default_draws")]
        samples: usize,
    },
    /// Shape and divergence witness of a modulus.
    Modulus { rho: RhoCfg },
    /// Mean local time at `T` against `σ√(2T/π)` (half-line, no drift,
    /// start on the boundary).
    LocalTime {
        #[serde(default = "default_lt_tol")]
        tolerance: f64,
    },
    /// Solver `Y` at the start against the closed-form or finite-difference
    /// reference that matches the problem.
    Oracle {
        #[serde(default = "default_tol")]
        tolerance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fd: Option<FdCfg>,
    },
    /// Ordering of the solution against a second problem with replaced
    /// `f`, `g` or `χ`.
    Comparison {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<DriverCfg>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<BoundaryCfg>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        chi: Option<TerminalCfg>,
    },
    /// Membership in the constraint domains and the subgradient inequality.
    Containment {
        #[serde(default = "default_w_samples")]
        samples_per_node: usize,
    },
}

impl CheckCfg {
    pub fn name(&self) -> &'static str {
        match self {
            CheckCfg::MoreauYosida { .. } => "moreau_yosida",
            CheckCfg::Assumptions { .. } => "assumptions",
            CheckCfg::Modulus { .. } => "modulus",
            CheckCfg::LocalTime { .. } => "local_time",
            CheckCfg::Oracle { .. } => "oracle",
            CheckCfg::Comparison { .. } => "comparison",
            CheckCfg::Containment { .. } => "containment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyCfg {
    pub checks: Vec<CheckCfg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

fn default_dir() -> String {
    "out".into()
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputCfg {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputCfg {
    fn default() -> Self {
        OutputCfg { dir: default_dir(), formats: default_formats() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub domain: DomainCfg,
    /// Starting point of the forward process; the origin by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    pub coefficients: CoefficientsCfg,
    #[serde(default)]
    pub constraints: ConstraintsCfg,
    pub grid: GridCfg,
    pub monte_carlo: MonteCarloCfg,
    #[serde(default)]
    pub solver: SolverCfg,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyCfg>,
    #[serde(default)]
    pub output: OutputCfg,
}

/// Command-line and environment overrides, applied over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub env_seed: Option<String>,
    pub paths: Option<usize>,
    pub steps: Option<usize>,
    pub out: Option<String>,
}

pub fn parse(text: &str) -> Result<RunConfig> {
    serde_json::from_str(text).map_err(|e| CliError::ConfigParse(e.to_string()))
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text).map_err(|e| match e {
        CliError::ConfigParse(m) => CliError::ConfigParse(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl RunConfig {
    /// Folds the overrides in. Seed precedence, lowest first: config file,
    /// `VIBDSDE_SEED`, `--seed`.
    pub fn apply(mut self, o: &Overrides) -> Result<RunConfig> {
        if let Some(c) = o.command {
            self.command = Some(c);
        }
        if let Some(s) = &o.env_seed {
            let seed = s
                .trim()
                .parse::<u64>()
                .map_err(|_| CliError::invalid("VIBDSDE_SEED", format!("{s:?} is not an unsigned integer")))?;
            self.monte_carlo.seed = Some(seed);
        }
        if let Some(s) = o.seed {
            self.monte_carlo.seed = Some(s);
        }
        if self.monte_carlo.seed.is_none() {
            self.monte_carlo.seed = Some(0);
        }
        if self.monte_carlo.scenario_seed.is_none() {
            self.monte_carlo.scenario_seed = self.monte_carlo.seed;
        }
        if let Some(m) = o.paths {
            self.monte_carlo.paths = m;
        }
        if let Some(n) = o.steps {
            self.grid.steps = n;
        }
        if let Some(d) = &o.out {
            self.output.dir = d.clone();
        }
        if self.x0.is_none() {
            self.x0 = Some(vec![0.0; self.domain_spec().dim()]);
        }
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.monte_carlo.seed.unwrap_or(0)
    }

    pub fn scenario_seed(&self) -> u64 {
        self.monte_carlo.scenario_seed.unwrap_or(self.seed())
    }

    pub fn domain_spec(&self) -> DomainSpec {
        match self.domain {
            DomainCfg::HalfSpace { dim } => DomainSpec::HalfSpace { dim },
            DomainCfg::Ball { radius, r_min, dim } => DomainSpec::Ball { radius, r_min, dim },
            DomainCfg::WholeSpace { dim } => DomainSpec::WholeSpace { dim },
        }
    }

    /// Re-validates every section against the solver preconditions.
    pub fn resolve(&self) -> Result<Problem> {
        let dom = self.domain_spec();
        dom.validate().map_err(|e| CliError::invalid("domain", e))?;
        let d = dom.dim();
        let x0 = self.x0.clone().unwrap_or_else(|| vec![0.0; d]);
        if x0.len() != d {
            return Err(CliError::invalid("x0", format!("has {} coordinates, domain has dimension {d}", x0.len())));
        }
        if !dom.contains_closure(&x0) {
            return Err(CliError::invalid("x0", "lies outside the closed domain"));
        }
        let coeffs = self.coefficients.build(d, "coefficients")?;
        let phi = self.constraints.phi.build("constraints.phi")?;
        let psi = self.constraints.psi.build("constraints.psi")?;
        if self.grid.steps < 1 {
            return Err(CliError::invalid("grid.N", "must be >= 1"));
        }
        if !(self.grid.t_end > self.grid.t0) {
            return Err(CliError::invalid("grid.T", format!("must exceed t0 = {}", self.grid.t0)));
        }
        let grid =
            make_time_grid(self.grid.t0, self.grid.t_end, self.grid.steps).map_err(|e| CliError::invalid("grid", e))?;
        if self.monte_carlo.paths < 1 {
            return Err(CliError::invalid("monte_carlo.M", "must be >= 1"));
        }
        let solver = self.solver.build()?;
        if let Some(f) = &self.field {
            if f.times.is_empty() || f.points.is_empty() {
                return Err(CliError::invalid("field", "needs at least one time and one point"));
            }
            for (i, t) in f.times.iter().enumerate() {
                if grid.index_of(*t).is_none() {
                    return Err(CliError::invalid(
                        format!("field.times[{i}]"),
                        format!("{t} is not a node of the time grid"),
                    ));
                }
            }
            for (i, p) in f.points.iter().enumerate() {
                if p.len() != d || !dom.contains_closure(p) {
                    return Err(CliError::invalid(
                        format!("field.points[{i}]"),
                        "must be a point of the closed domain",
                    ));
                }
            }
        }
        if let Some(r) = &self.rate {
            if r.eps.len() < 3 || r.eps.windows(2).any(|w| !(w[1] < w[0])) || r.eps.iter().any(|e| !(*e > 0.0)) {
                return Err(CliError::invalid("rate.eps", "needs at least 3 positive, strictly decreasing values"));
            }
            if !(r.band[0] <= r.band[1]) {
                return Err(CliError::invalid("rate.band", "lower end exceeds upper end"));
            }
        }
        if let Some(v) = &self.verify {
            for (i, c) in v.checks.iter().enumerate() {
                let key = format!("verify.checks[{i}]");
                match c {
                    CheckCfg::Modulus { rho } => {
                        rho.build().validate().map_err(|e| CliError::invalid(format!("{key}.rho"), e))?;
                    }
                    CheckCfg::Comparison { f, g, chi } => {
                        self.comparison_coeffs(f, g, chi, d).map_err(|e| match e {
                            CliError::Validation { key: k, msg } => CliError::invalid(format!("{key}.{k}"), msg),
                            other => other,
                        })?;
                    }
                    CheckCfg::Oracle { fd: Some(fd), .. }
                        if fd.nx < 2 || fd.nt < 1 || fd.levels < 2 || !(fd.length > 0.0) =>
                    {
                        return Err(CliError::invalid(
                            format!("{key}.fd"),
                            "needs length > 0, nx >= 2, nt >= 1, levels >= 2",
                        ));
                    }
                    _ => {}
                }
            }
        }
        if self.output.formats.is_empty() {
            return Err(CliError::invalid("output.formats", "must name at least one of csv, json"));
        }
        Ok(Problem { dom, x0, coeffs, phi, psi, grid, paths: self.monte_carlo.paths, solver })
    }

    pub fn comparison_coeffs(
        &self,
        f: &Option<DriverCfg>,
        g: &Option<BoundaryCfg>,
        chi: &Option<TerminalCfg>,
        d: usize,
    ) -> Result<CoefficientSet> {
        let mut c = self.coefficients.clone();
        if let Some(f) = f {
            c.f = f.clone();
        }
        if let Some(g) = g {
            c.g = g.clone();
        }
        if let Some(chi) = chi {
            c.chi = chi.clone();
        }
        c.build(d, "")
    }
}

/// A validated problem in solver types.
#[derive(Debug, Clone)]
pub struct Problem {
    pub dom: DomainSpec,
    pub x0: Vec<f64>,
    pub coeffs: CoefficientSet,
    pub phi: ConvexSpec,
    pub psi: ConvexSpec,
    pub grid: TimeGrid,
    pub paths: usize,
    pub solver: SolverConfig,
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

impl CoefficientsCfg {
    fn build(&self, dim: usize, prefix: &str) -> Result<CoefficientSet> {
        let f = match self.f {
            DriverCfg::Zero => Driver::Zero,
            DriverCfg::Constant { c } => Driver::Constant { c },
            DriverCfg::Linear { a } => Driver::Linear { a },
            DriverCfg::Affine { a, bz, c } => Driver::Affine { a, bz, c },
            DriverCfg::LogLipschitz { k, delta } => Driver::LogLipschitz { k, delta },
        };
        let g = match self.g {
            BoundaryCfg::Zero => BoundaryDriver::Zero,
            BoundaryCfg::Constant { c } => BoundaryDriver::Constant { c },
            BoundaryCfg::Linear { a } => BoundaryDriver::Linear { a },
            BoundaryCfg::Affine { a, c } => BoundaryDriver::Affine { a, c },
        };
        let h = match &self.h {
            NoiseCfg::Zero => NoiseDriver::Zero,
            NoiseCfg::ExpBeta { beta } => NoiseDriver::ExpBeta { beta: *beta },
            NoiseCfg::Sine { amp } => NoiseDriver::Sine { amp: *amp },
            NoiseCfg::Separable { amp, freq, profile } => NoiseDriver::Separable {
                amp: *amp,
                freq: *freq,
                profile: match *profile {
                    ProfileCfg::Linear { beta } => YProfile::Linear { beta },
                    ProfileCfg::Sine { amp } => YProfile::Sine { amp },
                },
            },
        };
        let chi = match &self.chi {
            TerminalCfg::Constant { c } => Terminal::Constant { c: *c },
            TerminalCfg::Linear { a, c } => Terminal::Linear { a: *a, c: *c },
            TerminalCfg::Abs => Terminal::Abs,
            TerminalCfg::Table { xs, ys } => Terminal::Table { xs: xs.clone(), ys: ys.clone() },
        };
        chi.validate().map_err(|e| CliError::invalid(join(prefix, "chi"), e))?;
        let b = match &self.b {
            DriftCfg::Zero => Drift::Zero,
            DriftCfg::Constant { v } => Drift::Constant { v: v.clone() },
            DriftCfg::Linear { a } => Drift::Linear { a: *a },
        };
        let sigma = match self.sigma {
            DiffusionCfg::ScaledIdentity { s } => Diffusion::ScaledIdentity { s },
        };
        let set = CoefficientSet::new(f, g, h, chi, b, sigma, dim);
        set.validate(dim).map_err(|e| {
            let key = match e {
                Error::ShapeMismatch(_) => "b",
                _ => "f",
            };
            CliError::invalid(join(prefix, key), e)
        })?;
        Ok(set)
    }
}

impl ConvexCfg {
    pub fn build(&self, key: &str) -> Result<ConvexSpec> {
        let s = match *self {
            ConvexCfg::Zero => ConvexSpec::Zero,
            ConvexCfg::IndicatorInterval { lo, hi } => ConvexSpec::IndicatorInterval { lo: lo.0, hi: hi.0 },
            ConvexCfg::Quadratic { c } => ConvexSpec::Quadratic { c },
            ConvexCfg::AbsValue { scale } => ConvexSpec::AbsValue { scale },
        };
        s.validate().map_err(|e| CliError::invalid(key, e))?;
        Ok(s)
    }
}

impl StepModeCfg {
    fn build(&self) -> StepMode {
        match *self {
            StepModeCfg::Resolvent => StepMode::Resolvent,
            StepModeCfg::Yosida { eps } => StepMode::Yosida { eps },
        }
    }
}

impl SolverCfg {
    pub fn build(&self) -> Result<SolverConfig> {
        let mode = match self.mode {
            ModeCfg::Resolvent => SolveMode::Resolvent,
            ModeCfg::Yosida { eps } => SolveMode::Yosida { eps },
            ModeCfg::Picard { inner, max_iter, tol } => SolveMode::Picard { inner: inner.build(), max_iter, tol },
        };
        let cfg = SolverConfig {
            mode,
            basis_degree: self.basis_degree,
            z_clip: self.z_clip,
            backward_noise: match self.backward_noise {
                BackwardNoiseCfg::Milstein => BackwardNoise::Milstein,
                BackwardNoiseCfg::Euler => BackwardNoise::Euler,
            },
        };
        cfg.validate().map_err(|e| {
            let key = if self.z_clip.is_some_and(|c| !(c > 0.0)) { "solver.z_clip" } else { "solver.mode" };
            CliError::invalid(key, e)
        })?;
        Ok(cfg)
    }
}

impl RhoCfg {
    pub fn build(&self) -> ModulusRho {
        match *self {
            RhoCfg::Lipschitz { k } => ModulusRho::Lipschitz { k },
            RhoCfg::Rho1 { delta } => ModulusRho::Rho1 { delta },
            RhoCfg::Rho2 { delta } => ModulusRho::Rho2 { delta },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "domain": {"kind": "half_space", "dim": 1},
        "coefficients": {"chi": {"kind": "constant", "c": 1.0}},
        "grid": {"T": 1.0, "N": 10},
        "monte_carlo": {"M": 100, "seed": 3}
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse(MINIMAL).unwrap().apply(&Overrides::default()).unwrap();
        assert_eq!(c.seed(), 3);
        assert_eq!(c.scenario_seed(), 3);
        assert_eq!(c.x0, Some(vec![0.0]));
        assert_eq!(c.solver, SolverCfg::default());
        assert_eq!(c.output, OutputCfg::default());
        let p = c.resolve().unwrap();
        assert_eq!(p.grid.steps(), 10);
        assert_eq!(p.phi, ConvexSpec::Zero);
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = MINIMAL.replace("\"grid\"", "\"solver\": {\"modee\": \"resolvent\"}, \"grid\"");
        let e = parse(&text).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("modee"), "{e}");
        assert!(e.to_string().contains("line"), "{e}");
    }

    #[test]
    fn infinite_endpoints_and_modes() {
        let text = MINIMAL.replace(
            "\"grid\"",
            r#""constraints": {"phi": {"kind": "indicator_interval", "lo": "-inf", "hi": 2}},
               "solver": {"mode": {"picard": {"inner": {"yosida": {"eps": 0.1}}, "max_iter": 50, "tol": 1e-8}}},
               "grid""#,
        );
        let c = parse(&text).unwrap();
        let p = c.resolve().unwrap();
        assert_eq!(p.phi, ConvexSpec::IndicatorInterval { lo: f64::NEG_INFINITY, hi: 2.0 });
        assert_eq!(p.solver.mode, SolveMode::Picard { inner: StepMode::Yosida { eps: 0.1 }, max_iter: 50, tol: 1e-8 });
        let back = serde_json::to_string(&c).unwrap();
        assert!(back.contains("\"-inf\""));
        assert_eq!(parse(&back).unwrap(), c);
    }

    #[test]
    fn validation_names_the_key() {
        let text = MINIMAL
            .replace("\"grid\"", r#""constraints": {"psi": {"kind": "indicator_interval", "lo": 1, "hi": 2}}, "grid""#);
        match parse(&text).unwrap().resolve() {
            Err(CliError::Validation { key, .. }) => assert_eq!(key, "constraints.psi"),
            other => panic!("{other:?}"),
        }
        let text =
            MINIMAL.replace("\"seed\": 3", "\"seed\": 3, \"scenario_seed\": 4").replace("\"M\": 100", "\"M\": 0");
        match parse(&text).unwrap().resolve() {
            Err(CliError::Validation { key, .. }) => assert_eq!(key, "monte_carlo.M"),
            other => panic!("{other:?}"),
        }
        let text = MINIMAL.replace("\"grid\"", r#""solver": {"mode": {"yosida": {"eps": -1}}}, "grid""#);
        match parse(&text).unwrap().resolve() {
            Err(CliError::Validation { key, .. }) => assert_eq!(key, "solver.mode"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seed_precedence() {
        let c = parse(MINIMAL).unwrap();
        let env = Overrides { env_seed: Some("11".into()), ..Default::default() };
        assert_eq!(c.clone().apply(&env).unwrap().seed(), 11);
        let both = Overrides { env_seed: Some("11".into()), seed: Some(12), ..Default::default() };
        assert_eq!(c.clone().apply(&both).unwrap().seed(), 12);
        let bad = Overrides { env_seed: Some("x".into()), ..Default::default() };
        assert_eq!(c.apply(&bad).unwrap_err().exit_code(), 2);
    }
}
