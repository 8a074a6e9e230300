//! Grid verification of the sup-inf / inf-sup exchange behind the
//! composition penalty, and randomized quasiconvexity probes of `ρ∘Λ`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::AggregatorSpec;
use crate::convex::{grid_argmax, GridOptions, SearchBox};
use crate::error::{check_not_nan, Error, Result};
use crate::prob::{pairing_unchecked, Density, FiniteProbabilitySpace, RandomVector};
use crate::risk::{penalty, RiskMeasureSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxBudget {
    /// Grid points per shock coordinate before zooming.
    pub x_points: usize,
    pub refinements: usize,
    /// Lattice step of the density grid, in scenario mass.
    pub y_step: f64,
    pub search: SearchBox,
}

impl MinimaxBudget {
    pub fn new(search: SearchBox) -> Self {
        Self { x_points: 21, refinements: 2, y_step: 0.05, search }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxProbe {
    pub xstar: Vec<Vec<f64>>,
    pub m: f64,
    /// `sup_x inf_y K(x, y)` on the grids.
    pub lhs: f64,
    /// `inf_y sup_x K(x, y)` on the grids.
    pub rhs: f64,
    pub difference: f64,
    pub minimax_ok: bool,
    pub lhs_witness: Option<Vec<f64>>,
    pub rhs_density: Option<Vec<f64>>,
    pub y_grid_size: usize,
}

/// Scenario-mass lattice `{q ∈ Δ_k : q = j/N}` with `N = round(1/step)`.
fn mass_lattice(k: usize, step: f64) -> Vec<Vec<f64>> {
    let big_n = (1.0 / step).round().max(1.0) as usize;
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, big_n: usize, out: &mut Vec<Vec<f64>>) {
        let k = cur.len();
        if i == k - 1 {
            cur[i] = left;
            out.push(cur.iter().map(|&c| c as f64 / big_n as f64).collect());
            return;
        }
        for c in 0..=left {
            cur[i] = c;
            rec(i + 1, left - c, cur, big_n, out);
        }
    }
    rec(0, big_n, &mut cur, big_n, &mut out);
    out
}

/// Checks `sup_x inf_y K = inf_y sup_x K` for
/// `K(x, y) = ⟨x*, −x⟩` on `A_y = {x : ⟨y, −Λ(x)⟩ ≤ α_ρ(y, m)}`, `−∞` off it.
///
/// `y` ranges over a density lattice plus the density proportional to the
/// row sums of `x*`; `x` over a zoomed grid in the search box. The left side
/// is the brute-force systemic penalty and the right side the composition
/// formula, both at grid resolution. Passes iff the two sides differ by at
/// most `max(2e-2, 1e-2·|rhs|)`.
pub fn verify_minimax(
    rho: &RiskMeasureSpec,
    agg: &AggregatorSpec,
    xstar: &RandomVector,
    m: f64,
    budget: &MinimaxBudget,
) -> Result<MinimaxProbe> {
    check_not_nan(m, "level m")?;
    let space = xstar.space().clone();
    let k = space.len();
    let n = xstar.dim();
    if k > 3 || n > 2 {
        return Err(Error::Precondition(format!("minimax grids need |Ω| ≤ 3 and n ≤ 2 (got {k}, {n})")));
    }
    if budget.search.lo.len() != k * n || budget.search.hi.len() != k * n {
        return Err(Error::Shape("search box must cover every scenario coordinate".into()));
    }
    let probs = space.probs().to_vec();
    let mut masses = mass_lattice(k, budget.y_step);
    let rs: Vec<f64> = xstar.rows().zip(&probs).map(|(r, p)| p * r.iter().sum::<f64>()).collect();
    let tot: f64 = rs.iter().sum();
    if tot > 0.0 {
        masses.push(rs.iter().map(|v| v / tot).collect());
    }
    masses.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() < 1e-15));
    let mut ys: Vec<(Vec<f64>, f64)> = Vec::new();
    for q in &masses {
        let d = Density::from_masses(space.clone(), q)?;
        ys.push((d.values().to_vec(), penalty(rho, &d, m)?));
    }
    let xs = xstar.values().to_vec();
    let lambda_of = |x: &[f64]| -> Option<Vec<f64>> { x.chunks(n).map(|r| agg.aggregate_point(r).ok()).collect() };
    let in_a = |lam: &[f64], y: &[f64], a: f64| -> bool {
        let s: f64 = probs.iter().zip(y).zip(lam).map(|((p, y), l)| if *y == 0.0 { 0.0 } else { -p * y * l }).sum();
        s <= a
    };
    let opts = GridOptions { points: budget.x_points, refinements: budget.refinements };
    let obj_all = |x: &[f64]| match lambda_of(x) {
        Some(lam) if ys.iter().all(|(y, a)| in_a(&lam, y, *a)) => -pairing_unchecked(&probs, n, &xs, x),
        _ => f64::NEG_INFINITY,
    };
    let lhs_best = grid_argmax(obj_all, &budget.search, opts);
    let lhs = lhs_best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1);
    let mut rhs = f64::INFINITY;
    let mut rhs_density = None;
    for (y, a) in &ys {
        let obj = |x: &[f64]| match lambda_of(x) {
            Some(lam) if in_a(&lam, y, *a) => -pairing_unchecked(&probs, n, &xs, x),
            _ => f64::NEG_INFINITY,
        };
        let mut v = grid_argmax(obj, &budget.search, opts).map_or(f64::NEG_INFINITY, |b| b.1);
        // the left witness lies in every A_y
        v = v.max(lhs);
        if v < rhs {
            rhs = v;
            rhs_density = Some(y.clone());
        }
    }
    let difference = if lhs == rhs { 0.0 } else { (lhs - rhs).abs() };
    let minimax_ok = difference <= 2e-2f64.max(1e-2 * rhs.abs());
    Ok(MinimaxProbe {
        xstar: xstar.to_rows(),
        m,
        lhs,
        rhs,
        difference,
        minimax_ok,
        lhs_witness: lhs_best.map(|b| b.0),
        rhs_density,
        y_grid_size: ys.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// `R(λx₁ + (1−λ)x₂) > max(R(x₁), R(x₂))`.
    Mixture,
    /// `x₁ ≤ x₂` but `R(x₁) < R(x₂)`.
    Monotone,
    /// `E[yΛ(λx₁ + (1−λ)x₂)] < min(E[yΛ(x₁)], E[yΛ(x₂)])`.
    Scalarization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub trial: usize,
    /// Value at the combined point and the bound it broke.
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub trials: usize,
    pub mixture_violations: usize,
    pub monotone_violations: usize,
    pub scalarization_violations: usize,
    /// The first few violations, for diagnostics.
    pub examples: Vec<Violation>,
}

impl ProbeReport {
    pub fn total(&self) -> usize {
        self.mixture_violations + self.monotone_violations + self.scalarization_violations
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    pub trials: usize,
    pub seed: u64,
    /// Shock coordinates are sampled uniformly from `[lo, hi]`.
    pub lo: f64,
    pub hi: f64,
}

impl ProbeOptions {
    /// Default sampling range for an aggregator: `[0, 2·max p̄]` for networks, `[−2, 2]` otherwise.
    pub fn for_aggregator(agg: &AggregatorSpec, trials: usize, seed: u64) -> Self {
        let (lo, hi) = match agg {
            AggregatorSpec::EisenbergNoe(net) => (0.0, 2.0 * net.total_liabilities().iter().cloned().fold(0.0, f64::max)),
            _ => (-2.0, 2.0),
        };
        Self { trials, seed, lo, hi }
    }
}

const PROBE_TOL: f64 = 1e-8;

fn tol(v: f64) -> f64 {
    PROBE_TOL * v.abs().max(1.0)
}

/// Randomized quasiconvexity, monotonicity and scalarization probes for
/// `X ↦ risk(Λ(X))` with an arbitrary scalar risk functional.
pub fn probe_risk_function<R>(
    risk: R,
    agg: &AggregatorSpec,
    space: Arc<FiniteProbabilitySpace>,
    n: usize,
    opts: &ProbeOptions,
) -> Result<ProbeReport>
where
    R: Fn(&[f64]) -> f64,
{
    let k = space.len();
    let probs = space.probs().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let lift = |x: &[f64]| -> Result<Vec<f64>> { x.chunks(n).map(|r| agg.aggregate_point(r)).collect() };
    let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..k * n).map(|_| rng.gen_range(opts.lo..=opts.hi)).collect() };
    let mut rep = ProbeReport { trials: opts.trials, mixture_violations: 0, monotone_violations: 0, scalarization_violations: 0, examples: Vec::new() };
    let record = |rep: &mut ProbeReport, kind, trial, value, bound| {
        match kind {
            ViolationKind::Mixture => rep.mixture_violations += 1,
            ViolationKind::Monotone => rep.monotone_violations += 1,
            ViolationKind::Scalarization => rep.scalarization_violations += 1,
        }
        if rep.examples.len() < 10 {
            rep.examples.push(Violation { kind, trial, value, bound });
        }
    };
    for t in 0..opts.trials {
        let x1 = sample(&mut rng);
        let x2 = sample(&mut rng);
        let lam: f64 = rng.gen();
        let mix: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
        let (l1, l2, lm) = (lift(&x1)?, lift(&x2)?, lift(&mix)?);
        let (r1, r2, rm) = (risk(&l1), risk(&l2), risk(&lm));
        let top = r1.max(r2);
        if rm > top + tol(top) || (rm.is_nan() && !top.is_nan()) {
            record(&mut rep, ViolationKind::Mixture, t, rm, top);
        }

        let span = 0.5 * (opts.hi - opts.lo);
        let up: Vec<f64> = x1.iter().map(|a| a + rng.gen_range(0.0..=span)).collect();
        let lu = lift(&up)?;
        let ru = risk(&lu);
        if r1 < ru - tol(ru) {
            record(&mut rep, ViolationKind::Monotone, t, r1, ru);
        }

        let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let et: f64 = e.iter().sum();
        let y: Vec<f64> = e.iter().zip(&probs).map(|(v, p)| v / et / p).collect();
        let h = |l: &[f64]| probs.iter().zip(&y).zip(l).map(|((p, y), l)| p * y * l).sum::<f64>();
        let (h1, h2, hm) = (h(&l1), h(&l2), h(&lm));
        let low = h1.min(h2);
        if hm < low - tol(low) {
            record(&mut rep, ViolationKind::Scalarization, t, hm, low);
        }
    }
    Ok(rep)
}

/// `probe_risk_function` with `ρ` from a risk-measure spec.
pub fn quasiconvexity_probe(
    rho: &RiskMeasureSpec,
    agg: &AggregatorSpec,
    space: Arc<FiniteProbabilitySpace>,
    n: usize,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    let probs = space.probs().to_vec();
    probe_risk_function(|y| rho.rho_values(&probs, y), agg, space, n, opts)
}
