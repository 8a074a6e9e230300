//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qrisk_core::aggregation::{clearing_fixed_point, clearing_lp, random_network, AggregatorSpec, Network};
use qrisk_core::convex::{left_inverse_bisect, penalty_bruteforce, BracketPolicy, GridOptions, SearchBox};
use qrisk_core::dual::{dual_objective, dual_risk, sample_dual_variables, WEAK_DUALITY_SLACK};
use qrisk_core::duality::{composition_left_inverse, composition_penalty, composition_penalty_bruteforce, primal_risk};
use qrisk_core::io::{parse_instance, InstanceFile};
use qrisk_core::lp::{certificate_stats, solve, LpStatus};
use qrisk_core::minimax::{probe_risk_function, quasiconvexity_probe, verify_minimax, MinimaxBudget, ProbeOptions};
use qrisk_core::optimize::OptimizerConfig;
use qrisk_core::prob::{Density, FiniteProbabilitySpace, RandomVector};
use qrisk_core::risk::{
    penalty, penalty_closed_form, penalty_left_inverse_closed_form, solve_beta, LossSpec, RiskMeasureSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    /// Diagnostic line that does not affect the verdict.
    fn info(&mut self, line: String) {
        self.lines.push(format!("info {line}"));
    }
}

/// Equal infinities, or finite values within `tol`.
fn agree(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol
}

fn g(x: f64) -> String {
    format!("{x:.10}")
}

fn instances_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances")
}

fn shipped() -> Vec<(String, InstanceFile)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(instances_dir())
        .expect("instances directory")
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("toml" | "json")))
        .collect();
    paths.sort();
    paths.into_iter().map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), parse_instance(&p).expect("shipped instance parses"))).collect()
}

fn quad() -> RiskMeasureSpec {
    RiskMeasureSpec::certainty_equivalent(LossSpec::quadratic()).unwrap()
}

fn log() -> RiskMeasureSpec {
    RiskMeasureSpec::certainty_equivalent(LossSpec::logarithmic()).unwrap()
}

fn power() -> RiskMeasureSpec {
    RiskMeasureSpec::certainty_equivalent(LossSpec::power(0.5).unwrap()).unwrap()
}

fn index() -> RiskMeasureSpec {
    RiskMeasureSpec::economic_index(1.0).unwrap()
}

/// `Q = P` on one scenario and a skewed density on two.
fn densities() -> Vec<(&'static str, Density)> {
    let two = FiniteProbabilitySpace::new(vec![0.5, 0.5]).unwrap();
    vec![
        ("Q = P", Density::one(FiniteProbabilitySpace::uniform(1))),
        ("d = (1.5, 0.5)", Density::new(two, vec![1.5, 0.5]).unwrap()),
    ]
}

/// (name, measure, level) at the hand-value levels.
fn closed_form_cases() -> Vec<(&'static str, RiskMeasureSpec, f64)> {
    vec![("quadratic", quad(), -2.0), ("logarithmic", log(), -0.5), ("power", power(), -1.0), ("index", index(), -1.0)]
}

const FINE_1D: GridOptions = GridOptions { points: 201, refinements: 4 };

fn rho_bruteforce(rho: &RiskMeasureSpec, d: &Density, m: f64) -> f64 {
    let f = rho.as_function(d.space().clone());
    let bx = SearchBox::cube(d.values().len(), -3.0, 6.0);
    penalty_bruteforce(&f, &d.as_random_vector(), m, &bx, FINE_1D).unwrap().value
}

fn c1() -> Outcome {
    let mut o = Outcome::new();
    let one = Density::one(FiniteProbabilitySpace::uniform(1));
    let e1 = -(1.0 - (-1f64).exp());
    let hand = [
        ("quadratic α(−2)", penalty_closed_form(&quad(), &one, -2.0).map(|c| c.value), -2.0),
        ("quadratic α^-l(−2)", penalty_left_inverse_closed_form(&quad(), &one, -2.0).map(|c| c.value), -2.0),
        ("logarithmic α(−0.5)", penalty_closed_form(&log(), &one, -0.5).map(|c| c.value), -0.5),
        ("logarithmic α^-l(−0.5)", penalty_left_inverse_closed_form(&log(), &one, -0.5).map(|c| c.value), -0.5),
        ("power α(−1)", penalty_closed_form(&power(), &one, -1.0).map(|c| c.value), -1.0),
        ("power α^-l(−1)", penalty_left_inverse_closed_form(&power(), &one, -1.0).map(|c| c.value), -1.0),
        ("index α(−1)", penalty_closed_form(&index(), &one, -1.0).map(|c| c.value), e1),
        ("index α^-l(−(1−e⁻¹))", penalty_left_inverse_closed_form(&index(), &one, e1).map(|c| c.value), -1.0),
    ];
    for (name, got, want) in hand {
        match got {
            Ok(v) => o.check((v - want).abs() <= 1e-12, format!("hand value {name}: {} vs {}", g(v), g(want))),
            Err(e) => o.check(false, format!("hand value {name}: {e}")),
        }
    }
    for (dname, d) in densities() {
        for (name, rho, m) in closed_form_cases() {
            let bf = rho_bruteforce(&rho, &d, m);
            match penalty_closed_form(&rho, &d, m) {
                Ok(c) => o.check(agree(c.value, bf, 1e-3), format!("{name} α({m}) at {dname}: closed form {} vs brute force {}", g(c.value), g(bf))),
                Err(e) => o.check(false, format!("{name} α({m}) at {dname}: {e}")),
            }
            let exact = penalty(&rho, &d, m).unwrap();
            o.info(format!("{name} α({m}) at {dname}: exact penalty {} vs brute force {}", g(exact), g(bf)));

            // Galois check of the left inverse against the brute-force penalty.
            let s = match penalty_closed_form(&rho, &d, m) {
                Ok(c) if c.value.is_finite() => c.value,
                _ => continue,
            };
            match penalty_left_inverse_closed_form(&rho, &d, s) {
                Ok(c) => {
                    let l = c.value;
                    let eps = 1e-3 * l.abs().max(1.0);
                    let above = rho_bruteforce(&rho, &d, l + eps);
                    let below = rho_bruteforce(&rho, &d, l - eps);
                    o.check(
                        above >= s - 1e-3 && below < s + 1e-3,
                        format!("{name} α^-l({}) at {dname}: closed form {}, brute force α(·±ε) = {}, {}", g(s), g(l), g(below), g(above)),
                    );
                }
                Err(e) => o.check(false, format!("{name} α^-l({}) at {dname}: {e}", g(s))),
            }
        }
    }
    o
}

fn c2() -> Outcome {
    let mut o = Outcome::new();
    for (dname, d) in densities() {
        for (name, rho, m) in closed_form_cases() {
            let cf = penalty_closed_form(&rho, &d, m).map(|c| c.value);
            match (solve_beta(&rho, &d, m), cf) {
                (Ok(b), Ok(c)) => o.check(agree(b.alpha, c, 1e-7), format!("{name} at {dname}, m = {m}: β-equation {} vs closed form {}", g(b.alpha), g(c))),
                (Err(e), _) | (_, Err(e)) => o.check(false, format!("{name} at {dname}, m = {m}: {e}")),
            }
        }
        // levels where the β-equation has a solution, against the exact penalty
        for (name, rho, m) in [("quadratic", quad(), -0.5), ("logarithmic", log(), -0.5), ("power", power(), -1.0), ("index", index(), 1.0)] {
            if let Ok(b) = solve_beta(&rho, &d, m) {
                o.info(format!("{name} at {dname}, m = {m}: β-equation {} vs exact penalty {}", g(b.alpha), g(penalty(&rho, &d, m).unwrap())));
            }
        }
    }
    o
}

fn c3() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for t in 0..100 {
        let net = random_network(&mut rng, 1 + t % 5);
        let top = net.total_liabilities().iter().cloned().fold(0.0, f64::max);
        let x: Vec<f64> = (0..net.banks()).map(|_| rng.gen_range(0.0..1.5 * top)).collect();
        let fp = clearing_fixed_point(&net, &x).unwrap().lambda_value;
        let lp = clearing_lp(&net, &x).unwrap().lambda_value;
        worst = worst.max((fp - lp).abs());
    }
    o.check(worst <= 1e-8, format!("100 random networks: max |Λ_fp − Λ_lp| = {worst:e}"));
    let net = Network::new(vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
    for r in [clearing_fixed_point(&net, &[1.0, 0.0]).unwrap(), clearing_lp(&net, &[1.0, 0.0]).unwrap()] {
        let ok = (r.payments[0] - 4.0 / 3.0).abs() <= 1e-10 && (r.payments[1] - 2.0 / 3.0).abs() <= 1e-10 && (r.lambda_value - 1.0).abs() <= 1e-10;
        o.check(ok, format!("two-bank cycle ({:?}): p = ({}, {}), Λ = {}", r.method, g(r.payments[0]), g(r.payments[1]), g(r.lambda_value)));
    }
    o
}

fn c4() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_cf: f64 = 0.0;
    let mut worst_grid: f64 = 0.0;
    for t in 0..50 {
        let n = 1 + t % 5;
        let net = common::decoupled_network(&mut rng, n);
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.5)).collect();
        let lp = AggregatorSpec::EisenbergNoe(net.clone()).conjugate_phi(&z).unwrap();
        let cf: f64 = (0..n).map(|i| net.total_liabilities()[i] * (net.relative(i + 1, 0) - z[i]).max(0.0)).sum();
        worst_cf = worst_cf.max((lp - cf).abs());

        let coupled = random_network(&mut rng, 2);
        let z2 = [rng.gen_range(0.0..1.5), rng.gen_range(0.0..1.5)];
        let lp2 = AggregatorSpec::EisenbergNoe(coupled.clone()).conjugate_phi(&z2).unwrap();
        let grid = common::en_conjugate_grid(&coupled, &z2, 201);
        worst_grid = worst_grid.max((lp2 - grid).abs());
    }
    o.check(worst_cf <= 1e-8, format!("50 decoupled networks: max |Φ̃_lp − Σ p̄_i(a_i0 − x*_i)⁺| = {worst_cf:e}"));
    o.check(worst_grid <= 1e-3, format!("50 two-bank networks: max |Φ̃_lp − grid| = {worst_grid:e}"));
    o
}

struct Case {
    name: &'static str,
    rho: RiskMeasureSpec,
    agg: AggregatorSpec,
    xstar: RandomVector,
    m: f64,
    radius: f64,
}

fn case(name: &'static str, rho: RiskMeasureSpec, agg: AggregatorSpec, probs: Vec<f64>, rows: Vec<Vec<f64>>, m: f64, radius: f64) -> Case {
    let sp = FiniteProbabilitySpace::new(probs).unwrap();
    Case { name, rho, agg, xstar: RandomVector::from_rows(sp, &rows).unwrap(), m, radius }
}

fn theorem_cases() -> Vec<Case> {
    use AggregatorSpec::{Sum, TotalLoss};
    vec![
        case("Sum × log, |Ω| = 1", log(), Sum, vec![1.0], vec![vec![1.0, 1.0]], -2.0, 4.0),
        case("Sum × log, |Ω| = 2", log(), Sum, vec![0.5, 0.5], vec![vec![1.0, 1.0], vec![0.5, 0.5]], -1.0, 4.0),
        case("Sum × log, |Ω| = 2, n = 1", log(), Sum, vec![0.4, 0.6], vec![vec![1.0], vec![2.0]], -1.5, 6.0),
        case("Sum × quadratic, |Ω| = 1", quad(), Sum, vec![1.0], vec![vec![0.5, 0.5]], -0.5, 4.0),
        case("Sum × quadratic, |Ω| = 2", quad(), Sum, vec![0.5, 0.5], vec![vec![1.0, 1.0], vec![2.0, 2.0]], 0.5, 4.0),
        case("TotalLoss × quadratic, |Ω| = 1", quad(), TotalLoss, vec![1.0], vec![vec![0.7, 0.3]], 0.2, 3.0),
        case("TotalLoss × quadratic, |Ω| = 2", quad(), TotalLoss, vec![0.5, 0.5], vec![vec![1.0, 0.5], vec![0.5, 1.0]], 0.5, 3.0),
        case("TotalLoss × quadratic, skewed P", quad(), TotalLoss, vec![0.3, 0.7], vec![vec![0.8, 0.2], vec![0.4, 0.6]], 1.0, 3.0),
    ]
}

fn cfg() -> OptimizerConfig {
    OptimizerConfig { seed: 0, ..OptimizerConfig::default() }
}

fn c5() -> Outcome {
    let mut o = Outcome::new();
    for c in theorem_cases() {
        let len = c.xstar.values().len();
        let bx = SearchBox::cube(len, -c.radius, c.radius);
        let cp = composition_penalty(&c.rho, &c.agg, &c.xstar, c.m, &cfg()).unwrap().value;
        let bf = composition_penalty_bruteforce(&c.rho, &c.agg, &c.xstar, c.m, &bx, GridOptions::default()).unwrap().value;
        let tol = 1e-2f64.max(1e-2 * bf.abs());
        o.check(agree(cp, bf, tol), format!("{}: composition penalty {} vs brute force {}", c.name, g(cp), g(bf)));
        let mm = verify_minimax(&c.rho, &c.agg, &c.xstar, c.m, &MinimaxBudget::new(bx)).unwrap();
        o.check(mm.minimax_ok && mm.difference <= 2e-2, format!("{}: sup-inf {} vs inf-sup {}", c.name, g(mm.lhs), g(mm.rhs)));
    }
    // total loss never exceeds 0, and the logarithmic CE is +∞ off Y > 0
    let tl_log = case("TotalLoss × log, |Ω| = 2", log(), AggregatorSpec::TotalLoss, vec![0.5, 0.5], vec![vec![1.0, 0.5], vec![0.5, 1.0]], 0.5, 3.0);
    let cp = composition_penalty(&tl_log.rho, &tl_log.agg, &tl_log.xstar, tl_log.m, &cfg()).unwrap().value;
    let bf = composition_penalty_bruteforce(&tl_log.rho, &tl_log.agg, &tl_log.xstar, tl_log.m, &SearchBox::cube(4, -3.0, 3.0), GridOptions::default())
        .unwrap()
        .value;
    o.info(format!("{}: composition penalty {} vs brute force {} (ρ∘Λ ≡ +∞)", tl_log.name, g(cp), g(bf)));
    o
}

fn c6() -> Outcome {
    let mut o = Outcome::new();
    for name in ["sum_log.toml", "total_loss_quadratic.toml", "two_bank.toml"] {
        let inst = parse_instance(&instances_dir().join(name)).unwrap();
        let cfg = OptimizerConfig { starts: 20, ..inst.optimizer };
        match dual_risk(&inst.rho, &inst.agg, &inst.shocks, &cfg) {
            Ok(r) => o.check(
                (-1e-6..=1e-3).contains(&r.gap),
                format!("{name}: primal {} dual {} gap {:e}", g(r.primal), g(r.dual_bound), r.gap),
            ),
            Err(e) => o.check(false, format!("{name}: {e}")),
        }
    }
    o
}

fn c7() -> Outcome {
    let mut o = Outcome::new();
    for (name, inst) in shipped() {
        let primal = primal_risk(&inst.rho, &inst.agg, &inst.shocks).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst = f64::NEG_INFINITY;
        let mut bad = 0;
        for _ in 0..1000 {
            let v = sample_dual_variables(&mut rng, &inst.space, inst.shocks.dim());
            let d = dual_objective(&inst.rho, &inst.agg, &inst.shocks, &v).unwrap();
            if d > primal + WEAK_DUALITY_SLACK {
                bad += 1;
            }
            worst = worst.max(d);
        }
        o.check(bad == 0, format!("{name}: {bad} of 1000 above primal {}; best sample {}", g(primal), g(worst)));
    }
    o
}

fn c8() -> Outcome {
    let mut o = Outcome::new();
    for (name, inst) in shipped() {
        let opts = ProbeOptions::for_aggregator(&inst.agg, 500, 8);
        let r = quasiconvexity_probe(&inst.rho, &inst.agg, inst.space.clone(), inst.shocks.dim(), &opts).unwrap();
        o.check(
            r.total() == 0,
            format!("{name}: {} mixture, {} monotone, {} scalarization violations in {} trials", r.mixture_violations, r.monotone_violations, r.scalarization_violations, r.trials),
        );
    }
    let space = FiniteProbabilitySpace::new(vec![0.3, 0.7]).unwrap();
    let probs = space.probs().to_vec();
    let broken = |y: &[f64]| -probs.iter().zip(y).map(|(p, v)| p * v).sum::<f64>().abs();
    let opts = ProbeOptions { trials: 500, seed: 8, lo: -2.0, hi: 2.0 };
    let r = probe_risk_function(broken, &AggregatorSpec::Sum, space, 2, &opts).unwrap();
    o.check(r.total() >= 1, format!("negative control ρ(Y) = −|E[Y]|: {} violations detected", r.total()));
    o
}

/// Random nondecreasing function with constant tails and its exact left
/// inverse. Step functions are right-continuous with `values[i]` on
/// `[knots[i-1], knots[i])`; piecewise-linear ones interpolate
/// `(knots[j], values[j])`.
struct Monotone {
    knots: Vec<f64>,
    values: Vec<f64>,
    step: bool,
}

impl Monotone {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let k = rng.gen_range(1..8);
        let mut knots: Vec<f64> = (0..k).map(|_| rng.gen_range(-50.0..50.0)).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let step = rng.gen_bool(0.5);
        let count = if step { knots.len() + 1 } else { knots.len() };
        let mut v = rng.gen_range(-5.0..5.0);
        let mut values = vec![v];
        while values.len() < count {
            // flat pieces on purpose
            if rng.gen_bool(0.7) {
                v += rng.gen_range(0.0..3.0);
            }
            values.push(v);
        }
        Self { knots, values, step }
    }

    fn eval(&self, m: f64) -> f64 {
        let i = self.knots.partition_point(|k| *k <= m);
        if self.step {
            return self.values[i];
        }
        if i == 0 {
            return self.values[0];
        }
        if i == self.knots.len() {
            return *self.values.last().unwrap();
        }
        let (a, b) = (self.knots[i - 1], self.knots[i]);
        self.values[i - 1] + (m - a) / (b - a) * (self.values[i] - self.values[i - 1])
    }

    fn left_inverse(&self, s: f64) -> f64 {
        if s <= self.values[0] {
            return f64::NEG_INFINITY;
        }
        if s > *self.values.last().unwrap() {
            return f64::INFINITY;
        }
        let j = self.values.iter().position(|v| *v >= s).unwrap();
        if self.step {
            return self.knots[j - 1];
        }
        let (a, b) = (self.knots[j - 1], self.knots[j]);
        let (va, vb) = (self.values[j - 1], self.values[j]);
        a + (s - va) / (vb - va) * (b - a)
    }
}

fn c9() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bad = Vec::new();
    for t in 0..200 {
        let f = Monotone::random(&mut rng);
        let lo = f.values[0] - 1.0;
        let hi = f.values.last().unwrap() + 1.0;
        let s = rng.gen_range(lo..hi);
        let want = f.left_inverse(s);
        match left_inverse_bisect(|m| f.eval(m), s, BracketPolicy::default()) {
            Ok(got) => {
                let eps = 1e-6 * got.abs().max(1.0);
                let galois = !got.is_finite() || (f.eval(got + eps) >= s && f.eval(got - eps) < s);
                if !(agree(got, want, 1e-6 * want.abs().max(1.0)) && galois) {
                    bad.push(format!("#{t}: s = {s}, bisect {got}, exact {want}"));
                }
            }
            Err(e) => bad.push(format!("#{t}: {e}")),
        }
    }
    o.check(bad.is_empty(), format!("200 monotone step/PL functions: {} mismatches {:?}", bad.len(), bad.iter().take(3).collect::<Vec<_>>()));

    for c in theorem_cases() {
        let base = composition_penalty(&c.rho, &c.agg, &c.xstar, c.m, &cfg()).unwrap().value;
        for s in [base, base - 0.25] {
            let direct = composition_left_inverse(&c.rho, &c.agg, &c.xstar, s, &cfg()).unwrap().value;
            let alpha = |m: f64| composition_penalty(&c.rho, &c.agg, &c.xstar, m, &cfg()).map(|v| v.value).unwrap_or(f64::NAN);
            match left_inverse_bisect(alpha, s, BracketPolicy { tol: 1e-10, ..BracketPolicy::default() }) {
                Ok(bis) => o.check(agree(direct, bis, 1e-5), format!("{} at s = {}: left inverse {} vs bisection {}", c.name, g(s), g(direct), g(bis))),
                Err(e) => o.check(false, format!("{} at s = {}: {e}", c.name, g(s))),
            }
        }
    }
    o
}

fn c10() -> Outcome {
    let mut o = Outcome::new();
    let fuzz: Vec<Option<String>> = (0..200u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(10_000 + t);
            let n = rng.gen_range(1..=8);
            let m = rng.gen_range(1..=8);
            let lp = common::random_lp(&mut rng, n, m);
            let sol = solve(&lp).ok()?;
            let oracle = common::vertex_enumeration(&lp);
            let ok = match oracle {
                None => sol.status == LpStatus::Infeasible,
                Some(v) => sol.status == LpStatus::Optimal && (sol.objective - v).abs() <= 1e-6 * v.abs().max(1.0),
            };
            (!ok).then(|| format!("#{t} ({n}×{m}): simplex {:?} {} vs vertices {oracle:?}", sol.status, sol.objective))
        })
        .collect();
    let bad: Vec<String> = fuzz.into_iter().flatten().collect();
    o.check(bad.is_empty(), format!("200 random LPs (n, m ≤ 8) vs vertex enumeration: {} mismatches {:?}", bad.len(), bad.iter().take(3).collect::<Vec<_>>()));
    let (solves, failures) = certificate_stats();
    o.check(solves > 0 && failures == 0, format!("certificates over the whole run: {failures} failures in {solves} optimal solves"));
    o
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        ("closed-form penalty fidelity", Duration::from_secs(1), c1),
        ("β-equation consistency", Duration::from_secs(1), c2),
        ("Eisenberg-Noe clearing", Duration::from_secs(5), c3),
        ("Eisenberg-Noe conjugate", Duration::from_secs(10), c4),
        ("composition penalty and minimax", Duration::from_secs(60), c5),
        ("strong duality", Duration::from_secs(120), c6),
        ("weak duality", Duration::from_secs(30), c7),
        ("quasiconvexity and monotonicity probes", Duration::from_secs(30), c8),
        ("left inverses", Duration::from_secs(30), c9),
        ("LP certification", Duration::from_secs(30), c10),
    ];
    let mut all = true;
    let mut summary = Vec::new();
    for (i, (name, budget, run)) in criteria.into_iter().enumerate() {
        let t0 = Instant::now();
        let mut out = run();
        let took = t0.elapsed();
        out.check(took <= budget, format!("runtime {:.2}s within {}s", took.as_secs_f64(), budget.as_secs()));
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        all &= out.pass;
        println!("C{} {verdict} {name}", i + 1);
        for l in &out.lines {
            println!("    {l}");
        }
        summary.push(format!("C{} {verdict}", i + 1));
    }
    println!("summary: {}", summary.join(", "));
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
