//! The systemic risk measure `R = ρ∘Λ`, its composition penalty and left
//! inverse.
//!
//! Dual elements `Y* = λ·dQ/dP` are normalized to densities; the scale drops
//! out because both the risk penalty and the scalarization penalty are
//! positively homogeneous in it. Densities are searched through their
//! scenario masses `q = p·d` on the simplex.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aggregation::AggregatorSpec;
use crate::convex::{penalty_bruteforce, GridOptions, PenaltyValue, ScalarFunctionSpec, SearchBox};
use crate::error::{check_not_nan, Error, Result};
use crate::numeric::{golden_min_log, mul0};
use crate::optimize::{maximize, minimize, Domain, OptimizerConfig};
use crate::prob::{Density, FiniteProbabilitySpace, RandomVector};
use crate::risk::{penalty, penalty_left_inverse, rho_eval, RiskMeasureSpec};

const RATIO_TOL: f64 = 1e-9;
const LAMBDA_LO: f64 = 1e-8;
const LAMBDA_HI: f64 = 1e8;

/// `R(X) = ρ(Λ(X))`.
pub fn primal_risk(rho: &RiskMeasureSpec, agg: &AggregatorSpec, x: &RandomVector) -> Result<f64> {
    rho_eval(rho, &agg.aggregate(x)?)
}

fn check_dual_vector(agg: &AggregatorSpec, xstar: &RandomVector) -> Result<()> {
    if let Some(n) = agg.fixed_dim() {
        if xstar.dim() != n {
            return Err(Error::Shape(format!("aggregator has {n} coordinates, x* has {}", xstar.dim())));
        }
    }
    for &v in xstar.values() {
        check_not_nan(v, "x*")?;
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Cone(format!("x* must be finite and nonnegative (found {v})")));
        }
    }
    Ok(())
}

/// Scenario data for one scalarization: only scenarios with `y > 0` carry terms.
struct Scalarized<'a> {
    agg: &'a AggregatorSpec,
    probs: &'a [f64],
    n: usize,
    y: &'a [f64],
    x: &'a [f64],
}

impl Scalarized<'_> {
    fn compatible(&self) -> bool {
        self.y.iter().enumerate().all(|(w, &yw)| yw > 0.0 || self.x[w * self.n..(w + 1) * self.n].iter().all(|&v| v == 0.0))
    }

    fn x_is_zero(&self) -> bool {
        self.x.iter().all(|&v| v == 0.0)
    }

    fn mean_y(&self) -> f64 {
        self.probs.iter().zip(self.y).map(|(p, y)| p * y).sum()
    }

    fn active(&self) -> impl Iterator<Item = (f64, f64, &[f64])> + '_ {
        (0..self.y.len()).filter(|&w| self.y[w] > 0.0).map(|w| (self.probs[w], self.y[w], &self.x[w * self.n..(w + 1) * self.n]))
    }

    /// Ratios `x_ωi / y_ω` over active scenarios.
    fn ratios(&self) -> impl Iterator<Item = f64> + '_ {
        self.active().flat_map(|(_, y, row)| row.iter().map(move |v| v / y))
    }

    /// The common ratio, if all ratios agree.
    fn common_ratio(&self) -> Option<f64> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in self.ratios() {
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo > 0.0 && hi - lo <= RATIO_TOL * hi).then_some(0.5 * (lo + hi))
    }

    fn max_ratio(&self) -> f64 {
        self.ratios().fold(0.0, f64::max)
    }

    /// `(S, C) = (Σ p Σ x, Σ p Σ x ln(x/y))` for the exponential conjugate.
    fn entropy_terms(&self) -> (f64, f64) {
        let (mut s, mut c) = (0.0, 0.0);
        for (p, y, row) in self.active() {
            for &v in row {
                s += p * v;
                if v > 0.0 {
                    c += p * v * (v / y).ln();
                }
            }
        }
        (s, c)
    }

    /// `G(λ) = Σ p λ y Φ̃(x / (λy))`.
    fn g(&self, lam: f64) -> Result<f64> {
        let mut total = 0.0;
        let mut z = vec![0.0; self.n];
        for (p, y, row) in self.active() {
            let sc = lam * y;
            for (zi, v) in z.iter_mut().zip(row) {
                *zi = v / sc;
            }
            total += p * sc * self.agg.conjugate_phi(&z)?;
        }
        Ok(total)
    }

    /// `inf_{λ>0} (λL + G(λ))`.
    fn penalty(&self, level: f64) -> Result<f64> {
        if !self.compatible() {
            return Ok(f64::INFINITY);
        }
        if self.x_is_zero() {
            // sublevel {x : −E[yΛ(x)] ≤ L} is nonempty iff L ≥ −E[y]·sup Λ̃
            let top = mul0(self.mean_y(), self.agg.phi_at_zero());
            return Ok(if level + top >= 0.0 { 0.0 } else { f64::NEG_INFINITY });
        }
        if level == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        match self.agg {
            AggregatorSpec::Sum => Ok(match self.common_ratio() {
                Some(lam) => lam * level,
                None => f64::INFINITY,
            }),
            AggregatorSpec::TotalLoss => Ok(if level >= 0.0 { self.max_ratio() * level } else { f64::NEG_INFINITY }),
            AggregatorSpec::Exponential => {
                let (s, c) = self.entropy_terms();
                Ok(if level > 0.0 { s + c - s * (s / level).ln() } else { f64::NEG_INFINITY })
            }
            AggregatorSpec::EisenbergNoe(_) => {
                if level + self.mean_y() * self.agg.phi_at_zero() < 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                let mut err = None;
                let (_, v) = golden_min_log(
                    |lam| match self.g(lam) {
                        Ok(g) => lam * level + g,
                        Err(e) => {
                            err = Some(e);
                            f64::INFINITY
                        }
                    },
                    LAMBDA_LO,
                    LAMBDA_HI,
                );
                match err {
                    Some(e) => Err(e),
                    None => Ok(v),
                }
            }
        }
    }

    /// `α^{-l}(s) = sup_{λ>0} (s − G(λ))/λ`, including the `λ → ∞` limit `−E[y]Φ̃(0)`.
    fn left_inverse(&self, s: f64) -> Result<f64> {
        if !self.compatible() {
            return Ok(f64::NEG_INFINITY);
        }
        if s == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let limit = -mul0(self.mean_y(), self.agg.phi_at_zero());
        if self.x_is_zero() {
            return Ok(if s > 0.0 { f64::INFINITY } else { limit });
        }
        if s == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        let t = match self.agg {
            AggregatorSpec::Sum => match self.common_ratio() {
                Some(lam) => s / lam,
                None => f64::NEG_INFINITY,
            },
            AggregatorSpec::TotalLoss => {
                if s > 0.0 {
                    s / self.max_ratio()
                } else {
                    f64::NEG_INFINITY
                }
            }
            AggregatorSpec::Exponential => {
                let (sm, c) = self.entropy_terms();
                sm * (-(sm - s + c) / sm).exp()
            }
            AggregatorSpec::EisenbergNoe(_) => {
                // concave in μ = 1/λ: sμ − G(1/μ)·μ
                let mut err = None;
                let (_, v) = golden_min_log(
                    |mu| match self.g(1.0 / mu) {
                        Ok(g) => g * mu - s * mu,
                        Err(e) => {
                            err = Some(e);
                            f64::INFINITY
                        }
                    },
                    LAMBDA_LO,
                    LAMBDA_HI,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                -v
            }
        };
        Ok(t.max(limit))
    }
}

/// `α_{−h_{y*}}(x*, L) = inf_{λ>0} (λL + E[λy*·Φ̃(x*/(λy*))])`.
///
/// `+∞` when `x*` charges a scenario where `y*` vanishes. Closed forms for
/// sum, total loss and exponential aggregators; golden-section search over
/// `ln λ` for Eisenberg-Noe.
pub fn scalarization_penalty(agg: &AggregatorSpec, ystar: &RandomVector, xstar: &RandomVector, level: f64) -> Result<f64> {
    check_dual_vector(agg, xstar)?;
    check_not_nan(level, "level")?;
    if ystar.dim() != 1 || ystar.scenarios() != xstar.scenarios() {
        return Err(Error::Shape("y* must be scalar on the same scenarios as x*".into()));
    }
    if ystar.values().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Cone("y* must be finite and nonnegative".into()));
    }
    let sc = Scalarized { agg, probs: xstar.space().probs(), n: xstar.dim(), y: ystar.values(), x: xstar.values() };
    sc.penalty(level)
}

/// Inverse-in-level of `scalarization_penalty`.
pub fn scalarization_left_inverse(agg: &AggregatorSpec, ystar: &RandomVector, xstar: &RandomVector, s: f64) -> Result<f64> {
    check_dual_vector(agg, xstar)?;
    check_not_nan(s, "target s")?;
    let sc = Scalarized { agg, probs: xstar.space().probs(), n: xstar.dim(), y: ystar.values(), x: xstar.values() };
    sc.left_inverse(s)
}

/// An optimized composition quantity with its minimizing (or maximizing) density.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionValue {
    pub value: f64,
    pub density: Option<Density>,
    /// Every probed density satisfied `α_ρ(d, m) > −Φ̃(0)`. This is a spot
    /// check of the strict-sublevel hypothesis, not a proof.
    pub slater_ok: bool,
    pub starts_used: usize,
    pub iterations: usize,
}

fn structural_seeds(space: &FiniteProbabilitySpace, xstar: &RandomVector) -> Vec<Vec<f64>> {
    let probs = space.probs();
    let mut seeds = vec![probs.to_vec()];
    for reduce in [|r: &[f64]| r.iter().sum::<f64>(), |r: &[f64]| r.iter().cloned().fold(0.0, f64::max)] {
        let q: Vec<f64> = xstar.rows().zip(probs).map(|(r, p)| p * reduce(r)).collect();
        let tot: f64 = q.iter().sum();
        if tot > 0.0 {
            seeds.push(q.iter().map(|v| v / tot).collect());
        }
    }
    seeds
}

fn density_of(space: &Arc<FiniteProbabilitySpace>, q: &[f64]) -> Vec<f64> {
    q.iter().zip(space.probs()).map(|(q, p)| q / p).collect()
}

fn slater_probe(rho: &RiskMeasureSpec, agg: &AggregatorSpec, space: &Arc<FiniteProbabilitySpace>, seeds: &[Vec<f64>], m: f64, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51a7e5);
    let mut probes = seeds.to_vec();
    for _ in 0..8 {
        let e: Vec<f64> = (0..space.len()).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let t: f64 = e.iter().sum();
        probes.push(e.iter().map(|v| v / t).collect());
    }
    let floor = -agg.phi_at_zero();
    probes.iter().all(|q| {
        Density::new(space.clone(), density_of(space, q))
            .and_then(|d| penalty(rho, &d, m))
            .map(|a| a > floor)
            .unwrap_or(false)
    })
}

fn require_nonzero(xstar: &RandomVector) -> Result<()> {
    if xstar.is_zero() {
        return Err(Error::Cone("x* must be a nonzero element of the dual cone".into()));
    }
    Ok(())
}

/// `α_{ρ∘Λ}(x*, m) = inf_d α_{−h_d}(x*, α_ρ(d, m))` over densities `d`.
///
/// Multi-start search over the density simplex, seeded with the uniform
/// density and densities proportional to the row sum and row maximum of
/// `x*`. Eisenberg-Noe caps the value at `0`.
pub fn composition_penalty(
    rho: &RiskMeasureSpec,
    agg: &AggregatorSpec,
    xstar: &RandomVector,
    m: f64,
    cfg: &OptimizerConfig,
) -> Result<CompositionValue> {
    check_dual_vector(agg, xstar)?;
    require_nonzero(xstar)?;
    check_not_nan(m, "level m")?;
    let space = xstar.space().clone();
    let probs = space.probs();
    let n = xstar.dim();
    let xs = xstar.values();
    let objective = |q: &[f64]| -> f64 {
        let dv = density_of(&space, q);
        let Ok(d) = Density::new(space.clone(), dv) else {
            return f64::NAN;
        };
        let sc = Scalarized { agg, probs, n, y: d.values(), x: xs };
        penalty(rho, &d, m).and_then(|level| sc.penalty(level)).unwrap_or(f64::NAN)
    };
    let seeds = structural_seeds(&space, xstar);
    let opt = minimize(objective, &Domain::simplex(space.len()), &seeds, cfg);
    let mut value = opt.value;
    if agg.nonnegative_domain() {
        value = value.min(0.0);
    }
    Ok(CompositionValue {
        value,
        density: Density::new(space.clone(), density_of(&space, &opt.x)).ok(),
        slater_ok: slater_probe(rho, agg, &space, &seeds, m, cfg.seed),
        starts_used: opt.starts_used,
        iterations: opt.iterations,
    })
}

/// `α^{-l}_{ρ∘Λ}(x*, s) = sup_d α_ρ^{-l}(d, α^{-l}_{−h_d}(x*, s))`.
///
/// The inner left inverse is the larger of the `Φ̃(0)` branch `−Φ̃(0)` and the
/// perspective branch `sup_λ (s − G_d(λ))/λ`. Eisenberg-Noe returns `+∞`
/// for `s > 0` because its penalty never exceeds `0`.
pub fn composition_left_inverse(
    rho: &RiskMeasureSpec,
    agg: &AggregatorSpec,
    xstar: &RandomVector,
    s: f64,
    cfg: &OptimizerConfig,
) -> Result<CompositionValue> {
    check_dual_vector(agg, xstar)?;
    require_nonzero(xstar)?;
    check_not_nan(s, "target s")?;
    let space = xstar.space().clone();
    if agg.nonnegative_domain() && s > 0.0 {
        return Ok(CompositionValue { value: f64::INFINITY, density: None, slater_ok: true, starts_used: 0, iterations: 0 });
    }
    let probs = space.probs();
    let n = xstar.dim();
    let xs = xstar.values();
    let objective = |q: &[f64]| -> f64 {
        let Ok(d) = Density::new(space.clone(), density_of(&space, q)) else {
            return f64::NAN;
        };
        let sc = Scalarized { agg, probs, n, y: d.values(), x: xs };
        sc.left_inverse(s).and_then(|u| penalty_left_inverse(rho, &d, u)).unwrap_or(f64::NAN)
    };
    let seeds = structural_seeds(&space, xstar);
    let opt = maximize(objective, &Domain::simplex(space.len()), &seeds, cfg);
    Ok(CompositionValue {
        value: opt.value,
        density: Density::new(space.clone(), density_of(&space, &opt.x)).ok(),
        slater_ok: true,
        starts_used: opt.starts_used,
        iterations: opt.iterations,
    })
}

/// `R = ρ∘Λ` as a scalar function of the flattened shock, for the grid oracles.
pub fn composition_function(rho: &RiskMeasureSpec, agg: &AggregatorSpec, space: Arc<FiniteProbabilitySpace>, n: usize) -> ScalarFunctionSpec {
    let rho = *rho;
    let agg = agg.clone();
    let probs = space.probs().to_vec();
    ScalarFunctionSpec::new(space, n, move |x| {
        let lam: std::result::Result<Vec<f64>, _> = x.chunks(n).map(|r| agg.aggregate_point(r)).collect();
        match lam {
            Ok(y) => rho.rho_values(&probs, &y),
            Err(_) => f64::INFINITY,
        }
    })
    .quasiconvex()
}

/// Grid-search oracle for `α_{ρ∘Λ}(x*, m) = sup{⟨x*, −X⟩ : ρ(Λ(X)) ≤ m}` over a box.
pub fn composition_penalty_bruteforce(
    rho: &RiskMeasureSpec,
    agg: &AggregatorSpec,
    xstar: &RandomVector,
    m: f64,
    bx: &SearchBox,
    opts: GridOptions,
) -> Result<PenaltyValue> {
    let f = composition_function(rho, agg, xstar.space().clone(), xstar.dim());
    penalty_bruteforce(&f, xstar, m, bx, opts)
}
