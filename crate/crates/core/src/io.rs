//! Instance files, command dispatch and report rendering for the `qrisk` binary.
//!
//! Instances are TOML (or JSON, chosen by file extension). Reports are JSON
//! with lossless floats and `"inf"`/`"-inf"` tokens, or a plain-text table
//! rounded to 12 significant digits.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::aggregation::{clearing_fixed_point, clearing_lp, random_network, AggregatorSpec, Network};
use crate::convex::SearchBox;
use crate::dual::{dual_objective, dual_risk, sample_dual_variables, DualVariablesView, WEAK_DUALITY_SLACK};
use crate::duality::{composition_left_inverse, composition_penalty, primal_risk};
use crate::error::Error;
use crate::lp::certificate_stats;
use crate::minimax::{probe_risk_function, quasiconvexity_probe, verify_minimax, MinimaxBudget, ProbeOptions};
use crate::optimize::OptimizerConfig;
use crate::prob::{Density, FiniteProbabilitySpace, RandomVector};
use crate::risk::{penalty_closed_form, penalty_left_inverse_closed_form, LossSpec, RiskMeasureSpec};

/// An extended real that serializes `±∞` as `"inf"`/`"-inf"` and NaN as `"nan"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ext(pub f64);

impl Serialize for Ext {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Ext {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Ext;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Ext, E> {
                Ok(Ext(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Ext, E> {
                Ok(Ext(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Ext, E> {
                Ok(Ext(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Ext, E> {
                match v {
                    "inf" | "+inf" => Ok(Ext(f64::INFINITY)),
                    "-inf" => Ok(Ext(f64::NEG_INFINITY)),
                    "nan" => Ok(Ext(f64::NAN)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Instance-file failure, tagged with a stable code and the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceError {
    pub code: &'static str,
    pub field: String,
    pub message: String,
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "[{}] {}", self.code, self.message)
        } else {
            write!(f, "[{}] {}: {}", self.code, self.field, self.message)
        }
    }
}

impl std::error::Error for InstanceError {}

fn ierr(code: &'static str, field: &str, message: impl Into<String>) -> InstanceError {
    InstanceError { code, field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawRisk {
    kind: String,
    gamma: Option<f64>,
    c0: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawAggregator {
    kind: String,
    liabilities: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    starts: Option<usize>,
    seed: Option<u64>,
    iterations: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawQuery {
    xstar: Option<Vec<Vec<f64>>>,
    m: Option<f64>,
    s: Option<f64>,
    /// Half-width of the shock search box used by `verify`.
    radius: Option<f64>,
    trials: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    probs: Vec<f64>,
    shocks: Vec<Vec<f64>>,
    risk_measure: RawRisk,
    aggregator: RawAggregator,
    #[serde(default)]
    optimizer: RawOptimizer,
    #[serde(default)]
    query: RawQuery,
}

/// Optional query parameters for `penalty`, `left-inverse` and `verify`.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub xstar: Option<RandomVector>,
    pub m: Option<f64>,
    pub s: Option<f64>,
    pub radius: f64,
    pub trials: usize,
}

/// A validated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub space: Arc<FiniteProbabilitySpace>,
    pub shocks: RandomVector,
    pub rho: RiskMeasureSpec,
    pub agg: AggregatorSpec,
    pub optimizer: OptimizerConfig,
    pub query: Query,
}

fn parse_risk(r: &RawRisk) -> Result<RiskMeasureSpec, InstanceError> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| ierr("E_PARAM", &format!("risk_measure.{name}"), "missing parameter"));
    let loss_err = |e: Error| ierr("E_PARAM", "risk_measure", e.to_string());
    match r.kind.as_str() {
        "quadratic" => RiskMeasureSpec::certainty_equivalent(LossSpec::quadratic()).map_err(loss_err),
        "logarithmic" => RiskMeasureSpec::certainty_equivalent(LossSpec::logarithmic()).map_err(loss_err),
        "power" => {
            let loss = LossSpec::power(need(r.gamma, "gamma")?).map_err(loss_err)?;
            RiskMeasureSpec::certainty_equivalent(loss).map_err(loss_err)
        }
        "economic_index" => RiskMeasureSpec::economic_index(need(r.c0, "c0")?).map_err(loss_err),
        other => Err(ierr(
            "E_RISK_KIND",
            "risk_measure.kind",
            format!("unknown risk measure kind {other:?} (expected quadratic, logarithmic, power or economic_index)"),
        )),
    }
}

fn parse_aggregator(a: &RawAggregator) -> Result<AggregatorSpec, InstanceError> {
    match a.kind.as_str() {
        "sum" => Ok(AggregatorSpec::Sum),
        "total_loss" => Ok(AggregatorSpec::TotalLoss),
        "exponential" => Ok(AggregatorSpec::Exponential),
        "eisenberg_noe" => {
            let l = a.liabilities.clone().ok_or_else(|| ierr("E_NETWORK", "aggregator.liabilities", "missing liability matrix"))?;
            Network::new(l).map(AggregatorSpec::EisenbergNoe).map_err(|e| ierr("E_NETWORK", "aggregator.liabilities", e.to_string()))
        }
        other => Err(ierr(
            "E_AGG_KIND",
            "aggregator.kind",
            format!("unknown aggregator kind {other:?} (expected sum, total_loss, exponential or eisenberg_noe)"),
        )),
    }
}

fn validate(raw: RawInstance) -> Result<InstanceFile, InstanceError> {
    let space = FiniteProbabilitySpace::new(raw.probs).map_err(|e| ierr("E_PROB", "probs", e.to_string()))?;
    let shocks = RandomVector::from_rows(space.clone(), &raw.shocks).map_err(|e| ierr("E_SHAPE", "shocks", e.to_string()))?;
    let rho = parse_risk(&raw.risk_measure)?;
    let agg = parse_aggregator(&raw.aggregator)?;
    if let Some(n) = agg.fixed_dim() {
        if shocks.dim() != n {
            return Err(ierr("E_SHAPE", "shocks", format!("network has {n} banks but shock rows have {} entries", shocks.dim())));
        }
    }
    if agg.nonnegative_domain() && shocks.values().iter().any(|v| *v < 0.0) {
        return Err(ierr("E_DOMAIN", "shocks", "Eisenberg-Noe shocks must be nonnegative"));
    }
    let d = OptimizerConfig::default();
    let optimizer = OptimizerConfig {
        starts: raw.optimizer.starts.unwrap_or(d.starts),
        seed: raw.optimizer.seed.unwrap_or(0),
        iterations: raw.optimizer.iterations.unwrap_or(d.iterations),
        ..d
    };
    let xstar = match raw.query.xstar {
        None => None,
        Some(rows) => {
            let xs = RandomVector::from_rows(space.clone(), &rows).map_err(|e| ierr("E_SHAPE", "query.xstar", e.to_string()))?;
            if xs.dim() != shocks.dim() {
                return Err(ierr("E_SHAPE", "query.xstar", "x* rows must match the shock dimension"));
            }
            Some(xs)
        }
    };
    let query = Query {
        xstar,
        m: raw.query.m,
        s: raw.query.s,
        radius: raw.query.radius.unwrap_or(4.0),
        trials: raw.query.trials.unwrap_or(200),
    };
    Ok(InstanceFile { space, shocks, rho, agg, optimizer, query })
}

/// Parses instance text; `json` selects the JSON reader instead of TOML.
pub fn parse_instance_str(text: &str, json: bool) -> Result<InstanceFile, InstanceError> {
    let raw: RawInstance = if json {
        serde_json::from_str(text).map_err(|e| ierr("E_SYNTAX", "", e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| ierr("E_SYNTAX", "", e.to_string()))?
    };
    validate(raw)
}

/// Reads and validates an instance file.
pub fn parse_instance(path: &Path) -> Result<InstanceFile, InstanceError> {
    let text = std::fs::read_to_string(path).map_err(|e| ierr("E_IO", &path.display().to_string(), e.to_string()))?;
    let json = path.extension().is_some_and(|e| e == "json");
    parse_instance_str(&text, json)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Clear,
    Evaluate,
    Penalty,
    LeftInverse,
    Dual,
    Verify,
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Clear => "clear",
            Command::Evaluate => "evaluate",
            Command::Penalty => "penalty",
            Command::LeftInverse => "left-inverse",
            Command::Dual => "dual",
            Command::Verify => "verify",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioClearing {
    pub payments: Vec<f64>,
    pub lambda_value: Ext,
    pub lp_lambda_value: Ext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub primal: Option<Ext>,
    pub dual_bound: Option<Ext>,
    pub gap: Option<Ext>,
    pub best: Option<DualVariablesView>,
    /// Composition penalty or left-inverse value.
    pub value: Option<Ext>,
    pub density: Option<Vec<f64>>,
    pub clearing: Vec<ScenarioClearing>,
    pub checks: Vec<PropertyCheck>,
    /// Only filled with `--timing`; left out by default so reports are byte-identical across runs.
    pub wall_time_ms: Option<f64>,
}

impl RunReport {
    fn new(cmd: Command, seed: u64) -> Self {
        Self {
            command: cmd.name().into(),
            seed,
            primal: None,
            dual_bound: None,
            gap: None,
            best: None,
            value: None,
            density: None,
            clearing: Vec::new(),
            checks: Vec::new(),
            wall_time_ms: None,
        }
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(PropertyCheck { name: name.into(), passed, detail: detail.into() });
    }
}

/// Command failures, split by exit code.
#[derive(Debug)]
pub enum RunError {
    Validation(String),
    Computation(Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Validation(m) => write!(f, "{m}"),
            RunError::Computation(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Shape(_) | Error::Domain(_) | Error::Cone(_) | Error::Invalid(_) => RunError::Validation(e.to_string()),
            other => RunError::Computation(other),
        }
    }
}

fn need<T: Clone>(v: &Option<T>, what: &str, cmd: Command) -> Result<T, RunError> {
    v.clone().ok_or_else(|| RunError::Validation(format!("command {} needs query.{what} in the instance", cmd.name())))
}

/// Runs one command against a validated instance.
pub fn run_command(cmd: Command, inst: &InstanceFile) -> Result<RunReport, RunError> {
    let cfg = inst.optimizer;
    let mut rep = RunReport::new(cmd, cfg.seed);
    match cmd {
        Command::Clear => {
            let AggregatorSpec::EisenbergNoe(net) = &inst.agg else {
                return Err(RunError::Validation("clear needs an eisenberg_noe aggregator".into()));
            };
            for row in inst.shocks.rows() {
                let fp = clearing_fixed_point(net, row)?;
                let lp = clearing_lp(net, row)?;
                rep.clearing.push(ScenarioClearing {
                    payments: fp.payments,
                    lambda_value: Ext(fp.lambda_value),
                    lp_lambda_value: Ext(lp.lambda_value),
                });
            }
            let worst = rep.clearing.iter().map(|c| (c.lambda_value.0 - c.lp_lambda_value.0).abs()).fold(0.0, f64::max);
            rep.check("lp_fixed_point_agreement", worst <= 1e-8, format!("max |Λ_fp − Λ_lp| = {worst:e}"));
        }
        Command::Evaluate => rep.primal = Some(Ext(primal_risk(&inst.rho, &inst.agg, &inst.shocks)?)),
        Command::Penalty => {
            let xs = need(&inst.query.xstar, "xstar", cmd)?;
            let m = need(&inst.query.m, "m", cmd)?;
            let c = composition_penalty(&inst.rho, &inst.agg, &xs, m, &cfg)?;
            rep.value = Some(Ext(c.value));
            rep.density = c.density.map(|d| d.values().to_vec());
            rep.check("slater_spot_check", c.slater_ok, "α_ρ(d, m) > −Φ̃(0) at probe densities");
        }
        Command::LeftInverse => {
            let xs = need(&inst.query.xstar, "xstar", cmd)?;
            let s = need(&inst.query.s, "s", cmd)?;
            let c = composition_left_inverse(&inst.rho, &inst.agg, &xs, s, &cfg)?;
            rep.value = Some(Ext(c.value));
            rep.density = c.density.map(|d| d.values().to_vec());
        }
        Command::Dual => {
            let d = dual_risk(&inst.rho, &inst.agg, &inst.shocks, &cfg)?;
            rep.primal = Some(Ext(d.primal));
            rep.dual_bound = Some(Ext(d.dual_bound));
            rep.gap = Some(Ext(d.gap));
            rep.best = d.best.as_ref().map(DualVariablesView::from);
            rep.check("gap_ok", d.gap_ok, format!("gap {:e} after {} starts", d.gap, d.starts_used));
        }
        Command::Verify => verify(inst, &mut rep)?,
        Command::Selftest => selftest(inst, &mut rep)?,
    }
    Ok(rep)
}

fn verify(inst: &InstanceFile, rep: &mut RunReport) -> Result<(), RunError> {
    let n = inst.shocks.dim();
    let k = inst.space.len();
    if let (Some(xs), Some(m)) = (&inst.query.xstar, inst.query.m) {
        let r = inst.query.radius;
        let lo = if inst.agg.nonnegative_domain() { 0.0 } else { -r };
        let probe = verify_minimax(&inst.rho, &inst.agg, xs, m, &MinimaxBudget::new(SearchBox::cube(k * n, lo, r)))?;
        rep.check(
            "minimax",
            probe.minimax_ok,
            format!("sup-inf {} vs inf-sup {} on {} densities", fmt_sig(probe.lhs), fmt_sig(probe.rhs), probe.y_grid_size),
        );
    }
    let opts = ProbeOptions::for_aggregator(&inst.agg, inst.query.trials, inst.optimizer.seed);
    let pr = quasiconvexity_probe(&inst.rho, &inst.agg, inst.space.clone(), n, &opts)?;
    rep.check(
        "quasiconvexity_probe",
        pr.total() == 0,
        format!(
            "{} trials: {} mixture, {} monotone, {} scalarization violations",
            pr.trials, pr.mixture_violations, pr.monotone_violations, pr.scalarization_violations
        ),
    );
    Ok(())
}

fn selftest(inst: &InstanceFile, rep: &mut RunReport) -> Result<(), RunError> {
    let one = Density::one(FiniteProbabilitySpace::uniform(1));
    let quad = RiskMeasureSpec::certainty_equivalent(LossSpec::quadratic())?;
    let log = RiskMeasureSpec::certainty_equivalent(LossSpec::logarithmic())?;
    let pow = RiskMeasureSpec::certainty_equivalent(LossSpec::power(0.5)?)?;
    let idx = RiskMeasureSpec::economic_index(1.0)?;
    let hand = [
        ("closed_form_quadratic", penalty_closed_form(&quad, &one, -2.0)?.value, -2.0),
        ("closed_form_logarithmic", penalty_closed_form(&log, &one, -0.5)?.value, -0.5),
        ("closed_form_power_left_inverse", penalty_left_inverse_closed_form(&pow, &one, -1.0)?.value, -1.0),
        ("closed_form_index", penalty_closed_form(&idx, &one, -1.0)?.value, -(1.0 - (-1f64).exp())),
    ];
    for (name, got, want) in hand {
        rep.check(name, (got - want).abs() <= 1e-12, format!("{} vs {}", fmt_sig(got), fmt_sig(want)));
    }

    let net = Network::new(vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]])?;
    let fp = clearing_fixed_point(&net, &[1.0, 0.0])?;
    let ok = (fp.payments[0] - 4.0 / 3.0).abs() <= 1e-10 && (fp.payments[1] - 2.0 / 3.0).abs() <= 1e-10 && (fp.lambda_value - 1.0).abs() <= 1e-10;
    rep.check("two_bank_clearing", ok, format!("p = ({}, {})", fmt_sig(fp.payments[0]), fmt_sig(fp.payments[1])));

    let mut rng = ChaCha8Rng::seed_from_u64(inst.optimizer.seed);
    let mut worst: f64 = 0.0;
    for t in 0..20 {
        let net = random_network(&mut rng, 1 + t % 5);
        let x: Vec<f64> = (0..net.banks()).map(|_| rand::Rng::gen_range(&mut rng, 0.0..3.0)).collect();
        worst = worst.max((clearing_fixed_point(&net, &x)?.lambda_value - clearing_lp(&net, &x)?.lambda_value).abs());
    }
    rep.check("clearing_lp_agreement", worst <= 1e-8, format!("max difference {worst:e} over 20 networks"));

    let primal = primal_risk(&inst.rho, &inst.agg, &inst.shocks)?;
    let mut violations = 0;
    for _ in 0..200 {
        let v = sample_dual_variables(&mut rng, &inst.space, inst.shocks.dim());
        if dual_objective(&inst.rho, &inst.agg, &inst.shocks, &v)? > primal + WEAK_DUALITY_SLACK {
            violations += 1;
        }
    }
    rep.check("weak_duality", violations == 0, format!("{violations} of 200 samples above the primal {}", fmt_sig(primal)));

    verify(inst, rep)?;

    let probs = inst.space.probs().to_vec();
    let broken = |y: &[f64]| -probs.iter().zip(y).map(|(p, v)| p * v).sum::<f64>().abs();
    let opts = ProbeOptions { trials: 200, seed: inst.optimizer.seed, lo: -2.0, hi: 2.0 };
    let nc = probe_risk_function(broken, &AggregatorSpec::Sum, inst.space.clone(), 2, &opts)?;
    rep.check("negative_control_detected", nc.total() > 0, format!("{} violations for ρ(Y) = −|E[Y]|", nc.total()));

    let (solves, failures) = certificate_stats();
    rep.check("lp_certificates", failures == 0, format!("{failures} of {solves} optimal solves failed certification"));
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Structured,
    Table,
}

/// Formats with 12 significant digits; infinities become `inf`/`-inf`.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
        let a = r.abs();
        if a == 0.0 {
            "0".into()
        } else if !(1e-4..1e15).contains(&a) {
            format!("{r:e}")
        } else {
            format!("{r}")
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_sig(*x)).collect();
    format!("[{}]", parts.join(", "))
}

/// Renders a report; identical reports render to identical bytes.
pub fn emit_report(rep: &RunReport, format: Format) -> String {
    match format {
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(rep).expect("report values are serializable");
            s.push('\n');
            s
        }
        Format::Table => {
            let mut lines = vec![format!("{:<14}{}", "command", rep.command), format!("{:<14}{}", "seed", rep.seed)];
            let scalar = |name: &str, v: &Option<Ext>, lines: &mut Vec<String>| {
                if let Some(Ext(x)) = v {
                    lines.push(format!("{name:<14}{}", fmt_sig(*x)));
                }
            };
            scalar("primal", &rep.primal, &mut lines);
            scalar("dual_bound", &rep.dual_bound, &mut lines);
            scalar("gap", &rep.gap, &mut lines);
            scalar("value", &rep.value, &mut lines);
            if let Some(d) = &rep.density {
                lines.push(format!("{:<14}{}", "density", fmt_vec(d)));
            }
            if let Some(b) = &rep.best {
                lines.push(format!("{:<14}{}", "w", fmt_vec(&b.w)));
                lines.push(format!("{:<14}{}", "dQ/dP", fmt_vec(&b.q_density)));
                for (i, s) in b.s_densities.iter().enumerate() {
                    lines.push(format!("{:<14}{}", format!("dS{}/dP", i + 1), fmt_vec(s)));
                }
            }
            for (w, c) in rep.clearing.iter().enumerate() {
                lines.push(format!(
                    "scenario {w:<5}payments {}  Λ {}  Λ_lp {}",
                    fmt_vec(&c.payments),
                    fmt_sig(c.lambda_value.0),
                    fmt_sig(c.lp_lambda_value.0)
                ));
            }
            for c in &rep.checks {
                lines.push(format!("{} {:<32}{}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
            }
            if let Some(t) = rep.wall_time_ms {
                lines.push(format!("{:<14}{}", "wall_time_ms", fmt_sig(t)));
            }
            lines.join("\n") + "\n"
        }
    }
}
