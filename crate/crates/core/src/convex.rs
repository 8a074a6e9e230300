//! Support functions, conjugates, penalty functions and their left inverses
//! for a single extended-real function on a finite probability space.
//!
//! Each quantity has a brute-force grid path (the oracle) and, where the
//! function is convex, a one-dimensional dual path.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{check_not_nan, Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Sense};
use crate::numeric::golden_min_log;
use crate::prob::{pairing_unchecked, FiniteProbabilitySpace, RandomVector};

type FlatFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    Convex,
    Quasiconvex,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    None,
}

/// An extended-real function `f: L^p(R^n) → R̄`.
///
/// The evaluator receives scenario rows flattened row-major. Tags are caller
/// assertions; nothing here trusts them beyond choosing an algorithm.
#[derive(Clone)]
pub struct ScalarFunctionSpec {
    space: Arc<FiniteProbabilitySpace>,
    dim: usize,
    eval: FlatFn,
    conjugate: Option<FlatFn>,
    pub convexity: Convexity,
    pub monotonicity: Monotonicity,
}

impl std::fmt::Debug for ScalarFunctionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarFunctionSpec")
            .field("scenarios", &self.space.len())
            .field("dim", &self.dim)
            .field("convexity", &self.convexity)
            .field("monotonicity", &self.monotonicity)
            .field("analytic_conjugate", &self.conjugate.is_some())
            .finish()
    }
}

impl ScalarFunctionSpec {
    pub fn new<F>(space: Arc<FiniteProbabilitySpace>, dim: usize, eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            space,
            dim,
            eval: Arc::new(eval),
            conjugate: None,
            convexity: Convexity::Unknown,
            monotonicity: Monotonicity::None,
        }
    }

    pub fn convex(mut self) -> Self {
        self.convexity = Convexity::Convex;
        self
    }

    pub fn quasiconvex(mut self) -> Self {
        self.convexity = Convexity::Quasiconvex;
        self
    }

    pub fn with_monotonicity(mut self, m: Monotonicity) -> Self {
        self.monotonicity = m;
        self
    }

    /// Attaches an exact conjugate `f*`, used instead of the grid estimate.
    pub fn with_conjugate<F>(mut self, conj: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.conjugate = Some(Arc::new(conj));
        self
    }

    pub fn space(&self) -> &Arc<FiniteProbabilitySpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of flat coordinates `|Ω|·n`.
    pub fn flat_len(&self) -> usize {
        self.dim * self.space.len()
    }

    pub fn eval_flat(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn evaluate(&self, x: &RandomVector) -> Result<f64> {
        if x.dim() != self.dim || x.scenarios() != self.space.len() {
            return Err(Error::Shape("argument does not match the function's shape".into()));
        }
        check_not_nan((self.eval)(x.values()), "function value")
    }

    fn pair(&self, xstar: &[f64], x: &[f64]) -> f64 {
        pairing_unchecked(self.space.probs(), self.dim, xstar, x)
    }

    fn check_dual(&self, xstar: &RandomVector) -> Result<()> {
        if xstar.dim() != self.dim || xstar.scenarios() != self.space.len() {
            return Err(Error::Shape("dual element does not match the function's shape".into()));
        }
        Ok(())
    }
}

/// Axis-aligned search region over the flat coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SearchBox {
    pub fn cube(len: usize, lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo; len], hi: vec![hi; len] }
    }

    fn validate(&self, len: usize) -> Result<()> {
        if self.lo.len() != len || self.hi.len() != len {
            return Err(Error::Shape(format!("search box has wrong dimension (need {len})")));
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !a.is_finite() || !b.is_finite() || a > b) {
            return Err(Error::Invalid("search box must be finite and ordered".into()));
        }
        Ok(())
    }
}

/// Resolution of the grid oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub points: usize,
    pub refinements: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { points: 41, refinements: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyMethod {
    BruteForce,
    ConvexDual,
    ClosedForm,
}

/// A penalty value `α_f(x*, m)` with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyValue {
    pub value: f64,
    pub attained_at: Option<RandomVector>,
    pub method: PenaltyMethod,
    /// The grid maximizer sits on the search-box boundary, so the true value may be larger.
    pub hit_boundary: bool,
}

/// Grid maximum of `obj` over the box, with local zoom refinements.
///
/// `obj` returns `-∞` at infeasible points. Ties keep the first grid point in
/// odometer order, so the result is deterministic under parallel evaluation.
pub fn grid_argmax<F>(obj: F, bx: &SearchBox, opts: GridOptions) -> Option<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = bx.lo.len();
    let pts = opts.points.max(2);
    let mut lo = bx.lo.clone();
    let mut hi = bx.hi.clone();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for round in 0..=opts.refinements {
        let found = scan(&obj, &lo, &hi, pts);
        if let Some((x, v)) = found {
            if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                best = Some((x, v));
            }
        }
        let Some((ref xb, _)) = best else {
            return None;
        };
        if round == opts.refinements {
            break;
        }
        for k in 0..d {
            let h = (hi[k] - lo[k]) / (pts - 1) as f64;
            lo[k] = (xb[k] - h).max(bx.lo[k]);
            hi[k] = (xb[k] + h).min(bx.hi[k]);
        }
    }
    best
}

fn scan<F>(obj: &F, lo: &[f64], hi: &[f64], pts: usize) -> Option<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = lo.len();
    let coord = |k: usize, i: usize| -> f64 {
        if hi[k] == lo[k] {
            lo[k]
        } else {
            lo[k] + (hi[k] - lo[k]) * i as f64 / (pts - 1) as f64
        }
    };
    if d == 0 {
        let v = obj(&[]);
        return (v > f64::NEG_INFINITY).then(|| (Vec::new(), v));
    }
    let inner: usize = pts.pow((d - 1) as u32);
    (0..pts)
        .into_par_iter()
        .map(|i0| {
            let mut x = vec![0.0; d];
            let mut idx = vec![0usize; d];
            let mut best: Option<(Vec<f64>, f64)> = None;
            idx[0] = i0;
            x[0] = coord(0, i0);
            for _ in 0..inner {
                for k in 1..d {
                    x[k] = coord(k, idx[k]);
                }
                let v = obj(&x);
                if v > f64::NEG_INFINITY && best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                    best = Some((x.clone(), v));
                }
                for k in (1..d).rev() {
                    idx[k] += 1;
                    if idx[k] < pts {
                        break;
                    }
                    idx[k] = 0;
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<(Vec<f64>, f64)>, (x, v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((x, v)),
        })
}

/// A set described in one of the forms `support_function` can handle.
#[derive(Debug, Clone)]
pub enum SetDescription {
    /// Finite point list; the support function equals that of its convex hull.
    Vertices(Vec<RandomVector>),
    /// Coordinatewise box over the flat coordinates (infinite bounds allowed).
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{x : a_k · x (≤|≥|=) b_k}` over the flat coordinates.
    Polyhedron { rows: Vec<Vec<f64>>, senses: Vec<Sense>, rhs: Vec<f64> },
    /// Any description without a finite or LP representation.
    Opaque(String),
}

/// `I*_A(x*) = sup_{x ∈ A} ⟨x*, x⟩`.
pub fn support_function(set: &SetDescription, xstar: &RandomVector) -> Result<f64> {
    let probs = xstar.space().probs();
    let dim = xstar.dim();
    let len = xstar.values().len();
    match set {
        SetDescription::Vertices(pts) => {
            let mut best = f64::NEG_INFINITY;
            for p in pts {
                if p.values().len() != len {
                    return Err(Error::Shape("vertex shape differs from x*".into()));
                }
                best = best.max(pairing_unchecked(probs, dim, xstar.values(), p.values()));
            }
            Ok(best)
        }
        SetDescription::Box { lo, hi } => {
            if lo.len() != len || hi.len() != len {
                return Err(Error::Shape("box shape differs from x*".into()));
            }
            if lo.iter().zip(hi).any(|(a, b)| a > b) {
                return Ok(f64::NEG_INFINITY);
            }
            let mut total = 0.0;
            for (k, &c) in xstar.values().iter().enumerate() {
                let w = probs[k / dim] * c;
                if w > 0.0 {
                    total += w * hi[k];
                } else if w < 0.0 {
                    total += w * lo[k];
                }
            }
            Ok(total)
        }
        SetDescription::Polyhedron { rows, senses, rhs } => {
            let c: Vec<f64> = xstar.values().iter().enumerate().map(|(k, v)| probs[k / dim] * v).collect();
            let mut prog = LinearProgram::new(c).with_bounds(vec![f64::NEG_INFINITY; len], vec![f64::INFINITY; len]);
            for ((r, s), b) in rows.iter().zip(senses).zip(rhs) {
                prog = prog.with_row(r.clone(), *s, *b);
            }
            let sol = lp::solve(&prog)?;
            Ok(match sol.status {
                LpStatus::Optimal => sol.objective,
                LpStatus::Unbounded => f64::INFINITY,
                LpStatus::Infeasible => f64::NEG_INFINITY,
            })
        }
        SetDescription::Opaque(what) => Err(Error::Unsupported(format!("support function of {what}"))),
    }
}

/// A grid estimate of `f*(x*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateEstimate {
    /// Lower bound on the true conjugate (exact up to grid error when `exact`).
    pub value: f64,
    pub argmax: Option<Vec<f64>>,
    /// `f` is tagged convex, the maximizer is interior and first-order stationary.
    pub exact: bool,
}

/// `f*(x*) = sup_x (⟨x*, x⟩ − f(x))` over a box grid refined once around the incumbent.
pub fn conjugate_numeric(
    f: &ScalarFunctionSpec,
    xstar: &RandomVector,
    bx: &SearchBox,
    points: usize,
) -> Result<ConjugateEstimate> {
    f.check_dual(xstar)?;
    bx.validate(f.flat_len())?;
    let xs = xstar.values();
    let obj = |x: &[f64]| {
        let v = f.eval_flat(x);
        if v == f64::INFINITY {
            f64::NEG_INFINITY
        } else {
            f.pair(xs, x) - v
        }
    };
    let opts = GridOptions { points, refinements: 1 };
    let Some((x, v)) = grid_argmax(obj, bx, opts) else {
        return Ok(ConjugateEstimate { value: f64::NEG_INFINITY, argmax: None, exact: false });
    };
    let mut exact = false;
    if f.convexity == Convexity::Convex {
        let h: Vec<f64> =
            bx.lo.iter().zip(&bx.hi).map(|(a, b)| (b - a) / ((points - 1) * (points - 1)) as f64).collect();
        let interior = x.iter().enumerate().all(|(k, xk)| *xk - bx.lo[k] > h[k] && bx.hi[k] - *xk > h[k]);
        if interior {
            let mut grad2 = 0.0;
            let mut y = x.clone();
            for k in 0..x.len() {
                y[k] = x[k] + h[k];
                let up = obj(&y);
                y[k] = x[k] - h[k];
                let dn = obj(&y);
                y[k] = x[k];
                let g = (up - dn) / (2.0 * h[k]);
                grad2 += g * g;
            }
            exact = grad2.sqrt() <= 1e-3 * (1.0 + v.abs());
        }
    }
    Ok(ConjugateEstimate { value: v, argmax: Some(x), exact })
}

fn infinite_level(xstar: &RandomVector, m: f64) -> Result<Option<f64>> {
    if m.is_infinite() {
        if xstar.is_zero() {
            return Err(Error::Undefined(format!("penalty of the zero functional at level {m}")));
        }
        return Ok(Some(m));
    }
    Ok(None)
}

/// `α_f(x*, m) = sup{⟨x*, −x⟩ : f(x) ≤ m}` by grid search over the box.
///
/// Returns `-∞` when no grid point is feasible. At `m = ±∞` the value is
/// `±∞` for `x* ≠ 0` and undefined for `x* = 0`.
pub fn penalty_bruteforce(
    f: &ScalarFunctionSpec,
    xstar: &RandomVector,
    m: f64,
    bx: &SearchBox,
    opts: GridOptions,
) -> Result<PenaltyValue> {
    f.check_dual(xstar)?;
    check_not_nan(m, "level m")?;
    if let Some(v) = infinite_level(xstar, m)? {
        return Ok(PenaltyValue { value: v, attained_at: None, method: PenaltyMethod::BruteForce, hit_boundary: false });
    }
    bx.validate(f.flat_len())?;
    let xs = xstar.values();
    let obj = |x: &[f64]| if f.eval_flat(x) <= m { -f.pair(xs, x) } else { f64::NEG_INFINITY };
    match grid_argmax(obj, bx, opts) {
        None => Ok(PenaltyValue {
            value: f64::NEG_INFINITY,
            attained_at: None,
            method: PenaltyMethod::BruteForce,
            hit_boundary: false,
        }),
        Some((x, v)) => {
            let hit = x.iter().enumerate().any(|(k, xk)| *xk <= bx.lo[k] || *xk >= bx.hi[k]);
            Ok(PenaltyValue {
                value: v,
                attained_at: Some(RandomVector::new(f.space.clone(), f.dim, x)?),
                method: PenaltyMethod::BruteForce,
                hit_boundary: hit,
            })
        }
    }
}

const LAMBDA_LO: f64 = 1e-8;
const LAMBDA_HI: f64 = 1e8;

fn conjugate_at(f: &ScalarFunctionSpec, z: &[f64], bx: &SearchBox) -> Result<f64> {
    if let Some(c) = &f.conjugate {
        return Ok(c(z));
    }
    let zv = RandomVector::new(f.space.clone(), f.dim, z.to_vec())?;
    Ok(conjugate_numeric(f, &zv, bx, 41)?.value)
}

fn require_convex(f: &ScalarFunctionSpec) -> Result<()> {
    if f.convexity != Convexity::Convex {
        return Err(Error::Precondition("the dual path requires a function tagged convex".into()));
    }
    Ok(())
}

/// `inf f`, exact with an analytic conjugate (`-f*(0)`), otherwise the grid minimum.
fn infimum(f: &ScalarFunctionSpec, bx: &SearchBox) -> Result<f64> {
    if let Some(c) = &f.conjugate {
        return Ok(-c(&vec![0.0; f.flat_len()]));
    }
    let best = grid_argmax(|x| -f.eval_flat(x), bx, GridOptions { points: 41, refinements: 1 });
    Ok(best.map_or(f64::INFINITY, |(_, v)| -v))
}

/// `α_f(x*, m) = inf_{λ>0} (λm + λ f*(−x*/λ))` for convex lsc `f`.
///
/// Golden-section search over `ln λ` on `[1e-8, 1e8]`. Needs a point with
/// `f < m`; if none is found the value would only be an upper bound and the
/// call fails, except that `m < inf f` returns `-∞`.
pub fn penalty_convex(f: &ScalarFunctionSpec, xstar: &RandomVector, m: f64, bx: &SearchBox) -> Result<PenaltyValue> {
    require_convex(f)?;
    f.check_dual(xstar)?;
    check_not_nan(m, "level m")?;
    if let Some(v) = infinite_level(xstar, m)? {
        return Ok(PenaltyValue { value: v, attained_at: None, method: PenaltyMethod::ConvexDual, hit_boundary: false });
    }
    bx.validate(f.flat_len())?;
    let inf_f = infimum(f, bx)?;
    let done = |value| Ok(PenaltyValue { value, attained_at: None, method: PenaltyMethod::ConvexDual, hit_boundary: false });
    if m < inf_f {
        return done(f64::NEG_INFINITY);
    }
    if inf_f >= m {
        return Err(Error::Precondition(format!("no strict sublevel point found (inf f ≈ {inf_f}, m = {m})")));
    }
    if xstar.is_zero() {
        return done(0.0);
    }
    let xs = xstar.values().to_vec();
    let mut z = vec![0.0; xs.len()];
    let mut err = None;
    let (_, v) = golden_min_log(
        |lam| {
            for (zk, xk) in z.iter_mut().zip(&xs) {
                *zk = -xk / lam;
            }
            match conjugate_at(f, &z, bx) {
                Ok(c) => lam * m + lam * c,
                Err(e) => {
                    err = Some(e);
                    f64::INFINITY
                }
            }
        },
        LAMBDA_LO,
        LAMBDA_HI,
    );
    if let Some(e) = err {
        return Err(e);
    }
    done(v)
}

/// Bracket expansion policy for `left_inverse_bisect`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketPolicy {
    pub start: f64,
    pub limit: f64,
    pub tol: f64,
}

impl Default for BracketPolicy {
    fn default() -> Self {
        Self { start: 1.0, limit: 2f64.powi(60), tol: 1e-9 }
    }
}

const MONOTONE_SLACK: f64 = 1e-7;

/// `α^{-l}(s) = inf{m : α(m) ≥ s}` for nondecreasing `α` by bracket doubling and bisection.
///
/// The bracket starts at `[-start, start]` and doubles outward up to `limit`;
/// `+∞` means no level reaches `s`, `-∞` means every level down to `-limit`
/// does. Flat segments resolve to their left end. Any observed decrease
/// larger than `1e-7` is a contract violation.
pub fn left_inverse_bisect<F: FnMut(f64) -> f64>(mut alpha: F, s: f64, policy: BracketPolicy) -> Result<f64> {
    check_not_nan(s, "target s")?;
    let mut seen: Vec<(f64, f64)> = Vec::new();
    let mut eval = |m: f64, seen: &mut Vec<(f64, f64)>| -> Result<f64> {
        let a = check_not_nan(alpha(m), "penalty value")?;
        for &(m2, a2) in seen.iter() {
            let bad = (m2 < m && a2 > a + MONOTONE_SLACK) || (m < m2 && a > a2 + MONOTONE_SLACK);
            if bad {
                return Err(Error::Contract(format!(
                    "left inverse needs a nondecreasing map: α({m2}) = {a2}, α({m}) = {a}"
                )));
            }
        }
        seen.push((m, a));
        Ok(a)
    };
    let mut hi = policy.start;
    while eval(hi, &mut seen)? < s {
        if hi >= policy.limit {
            return Ok(f64::INFINITY);
        }
        hi *= 2.0;
    }
    let mut lo = -policy.start;
    while eval(lo, &mut seen)? >= s {
        if -lo >= policy.limit {
            return Ok(f64::NEG_INFINITY);
        }
        hi = lo;
        lo *= 2.0;
    }
    seen.retain(|(m, _)| *m == lo || *m == hi);
    for _ in 0..500 {
        if hi - lo <= policy.tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid, &mut seen)? >= s {
            hi = mid;
        } else {
            lo = mid;
        }
        seen.retain(|(m, _)| *m == lo || *m == hi);
    }
    Ok(hi)
}

/// `α_f^{-l}(x*, s) = sup_{γ≥0} (γs − f*(−γx*))` for convex lsc `f`.
///
/// The `γ = 0` term is `−f*(0) = inf f`; `s = −∞` reduces to it.
pub fn left_inverse_convex(f: &ScalarFunctionSpec, xstar: &RandomVector, s: f64, bx: &SearchBox) -> Result<f64> {
    require_convex(f)?;
    f.check_dual(xstar)?;
    check_not_nan(s, "target s")?;
    bx.validate(f.flat_len())?;
    let at_zero = infimum(f, bx)?;
    if s == f64::NEG_INFINITY || xstar.is_zero() {
        return Ok(if xstar.is_zero() && s > 0.0 { f64::INFINITY } else { at_zero });
    }
    if s == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let xs = xstar.values().to_vec();
    let mut z = vec![0.0; xs.len()];
    let mut err = None;
    let (_, v) = golden_min_log(
        |g| {
            for (zk, xk) in z.iter_mut().zip(&xs) {
                *zk = -g * xk;
            }
            match conjugate_at(f, &z, bx) {
                Ok(c) => c - g * s,
                Err(e) => {
                    err = Some(e);
                    f64::INFINITY
                }
            }
        },
        LAMBDA_LO,
        LAMBDA_HI,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(at_zero.max(-v))
}

/// Both sides of the inf/sup swap for a finite family of nondecreasing maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapCheck {
    /// `inf{m : r(a) ≤ α(a, m) for all a}`.
    pub lhs: f64,
    /// `sup_a α^{-l}(a, r(a))`.
    pub rhs: f64,
    pub ok: bool,
}

/// Checks `inf{m : ∀a, r(a) ≤ α(a,m)} = sup_a α^{-l}(a, r(a))` within `1e-7`.
pub fn monotone_swap_check(alphas: &[&dyn Fn(f64) -> f64], r: &[f64]) -> Result<SwapCheck> {
    if alphas.len() != r.len() || alphas.is_empty() {
        return Err(Error::Shape("need one target per map and at least one map".into()));
    }
    let policy = BracketPolicy::default();
    let joint = |m: f64| alphas.iter().zip(r).map(|(a, ra)| a(m) - ra).fold(f64::INFINITY, f64::min);
    let lhs = left_inverse_bisect(joint, 0.0, policy)?;
    let mut rhs = f64::NEG_INFINITY;
    for (a, ra) in alphas.iter().zip(r) {
        rhs = rhs.max(left_inverse_bisect(|m| a(m), *ra, policy)?);
    }
    let ok = lhs == rhs || (lhs - rhs).abs() <= 1e-7;
    Ok(SwapCheck { lhs, rhs, ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_point() -> Arc<FiniteProbabilitySpace> {
        FiniteProbabilitySpace::uniform(1)
    }

    fn scalar(v: f64) -> RandomVector {
        RandomVector::scalar(one_point(), vec![v]).unwrap()
    }

    fn shifted_square() -> ScalarFunctionSpec {
        ScalarFunctionSpec::new(one_point(), 1, |x| x[0] * x[0] / 2.0 - 1.0)
            .convex()
            .with_conjugate(|z| z[0] * z[0] / 2.0 + 1.0)
    }

    #[test]
    fn support_examples() {
        let sp = one_point();
        let origin = SetDescription::Vertices(vec![RandomVector::zeros(sp.clone(), 2)]);
        let xs = RandomVector::new(sp.clone(), 2, vec![0.3, 2.0]).unwrap();
        assert_eq!(support_function(&origin, &xs).unwrap(), 0.0);
        let unit = SetDescription::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
        assert!((support_function(&unit, &xs).unwrap() - 2.3).abs() < 1e-15);
        let half = SetDescription::Polyhedron { rows: vec![vec![1.0, 1.0]], senses: vec![Sense::Le], rhs: vec![0.0] };
        assert_eq!(support_function(&half, &xs).unwrap(), f64::INFINITY);
        let along = RandomVector::new(sp.clone(), 2, vec![2.0, 2.0]).unwrap();
        assert!(support_function(&half, &along).unwrap().abs() < 1e-12);
        let opaque = SetDescription::Opaque("a disk".into());
        assert!(matches!(support_function(&opaque, &xs), Err(Error::Unsupported(_))));
    }

    #[test]
    fn conjugate_of_half_square() {
        let f = ScalarFunctionSpec::new(one_point(), 1, |x| x[0] * x[0] / 2.0).convex();
        let est = conjugate_numeric(&f, &scalar(3.0), &SearchBox::cube(1, -10.0, 10.0), 41).unwrap();
        assert!((est.value - 4.5).abs() < 1e-3, "{}", est.value);
        assert!(est.exact);
        let zero = ScalarFunctionSpec::new(one_point(), 1, |_| 0.0).convex();
        let est = conjugate_numeric(&zero, &scalar(0.0), &SearchBox::cube(1, -1.0, 1.0), 41).unwrap();
        assert_eq!(est.value, 0.0);
        let ind = ScalarFunctionSpec::new(one_point(), 1, |x| if x[0] == 0.0 { 0.0 } else { f64::INFINITY });
        let est = conjugate_numeric(&ind, &scalar(5.0), &SearchBox::cube(1, -1.0, 1.0), 41).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn penalty_examples() {
        let f = shifted_square();
        let bx = SearchBox::cube(1, -5.0, 5.0);
        let bf = penalty_bruteforce(&f, &scalar(1.0), 0.0, &bx, GridOptions::default()).unwrap();
        assert!((bf.value - 2f64.sqrt()).abs() < 1e-4, "{}", bf.value);
        let cv = penalty_convex(&f, &scalar(1.0), 0.0, &bx).unwrap();
        assert!((cv.value - 2f64.sqrt()).abs() < 1e-9, "{}", cv.value);
        assert_eq!(penalty_convex(&f, &scalar(1.0), -2.0, &bx).unwrap().value, f64::NEG_INFINITY);
        assert_eq!(penalty_convex(&f, &scalar(0.0), 0.5, &bx).unwrap().value, 0.0);
        assert_eq!(penalty_bruteforce(&f, &scalar(1.0), f64::INFINITY, &bx, GridOptions::default()).unwrap().value, f64::INFINITY);
        assert!(matches!(
            penalty_bruteforce(&f, &scalar(0.0), f64::INFINITY, &bx, GridOptions::default()),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn bruteforce_flags_unbounded_ray() {
        let f = ScalarFunctionSpec::new(one_point(), 1, |x| x[0]);
        let pv = penalty_bruteforce(&f, &scalar(1.0), 0.0, &SearchBox::cube(1, -7.0, 7.0), GridOptions::default()).unwrap();
        assert_eq!(pv.value, 7.0);
        assert!(pv.hit_boundary);
    }

    #[test]
    fn bruteforce_norm_ball() {
        let sp = one_point();
        let f = ScalarFunctionSpec::new(sp.clone(), 2, |x| (x[0] * x[0] + x[1] * x[1]).sqrt());
        let dir = RandomVector::new(sp, 2, vec![0.6, 0.8]).unwrap();
        let pv = penalty_bruteforce(&f, &dir, 1.0, &SearchBox::cube(2, -2.0, 2.0), GridOptions::default()).unwrap();
        assert!((pv.value - 1.0).abs() < 1e-3, "{}", pv.value);
    }

    #[test]
    fn left_inverse_examples() {
        let p = BracketPolicy::default();
        assert!((left_inverse_bisect(|m| m, 3.0, p).unwrap() - 3.0).abs() < 1e-9);
        let quad = |m: f64| if m >= -1.0 { -1.0 } else { m };
        assert!((left_inverse_bisect(quad, -2.0, p).unwrap() + 2.0).abs() < 1e-9);
        let step = |m: f64| if m >= 5.0 { 1.0 } else { 0.0 };
        assert!((left_inverse_bisect(step, 0.5, p).unwrap() - 5.0).abs() < 1e-9);
        assert_eq!(left_inverse_bisect(|_| 0.0, 1.0, p).unwrap(), f64::INFINITY);
        assert_eq!(left_inverse_bisect(|_| 0.0, -1.0, p).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(left_inverse_bisect(|m| -m, 0.5, p), Err(Error::Contract(_))));
    }

    #[test]
    fn left_inverse_convex_examples() {
        let f = shifted_square();
        let bx = SearchBox::cube(1, -5.0, 5.0);
        let v = left_inverse_convex(&f, &scalar(1.0), 2f64.sqrt(), &bx).unwrap();
        assert!(v.abs() < 1e-9, "{v}");
        assert!((left_inverse_convex(&f, &scalar(1.0), -50.0, &bx).unwrap() + 1.0).abs() < 1e-12);
        assert!((left_inverse_convex(&f, &scalar(1.0), f64::NEG_INFINITY, &bx).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn swap_examples() {
        let id = |m: f64| m;
        let single: [&dyn Fn(f64) -> f64; 1] = [&id];
        assert!(monotone_swap_check(&single, &[0.7]).unwrap().ok);
        let fam: [&dyn Fn(f64) -> f64; 3] = [&id, &id, &id];
        let sc = monotone_swap_check(&fam, &[0.5, -2.0, 3.0]).unwrap();
        assert!(sc.ok && (sc.rhs - 3.0).abs() < 1e-9);
    }
}
