//! Probabilistic dual representation of `R = ρ∘Λ`:
//! `R(X) = sup α_ρ^{-l}(dQ/dP, −E_Q[Φ̃(Z)] − E_Q[Z·X])` with
//! `Z = w·dS/(λ dQ)`.
//!
//! The search parametrizes `Q` by its masses and `Z` directly as a boxed
//! nonnegative field on the scenarios, so `w_i S_i ≪ Q` holds by
//! construction. Any candidate is a valid lower bound on `R(X)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::AggregatorSpec;
use crate::duality::primal_risk;
use crate::error::{Error, Result};
use crate::optimize::{maximize, Domain, OptimizerConfig};
use crate::prob::{Density, RandomVector, POSITIVITY_TOL};
use crate::risk::{penalty_left_inverse, RiskMeasureSpec};

/// Bank weights `w`, bank measures `S_i`, society's measure `Q` and scale `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVariables {
    pub w: Vec<f64>,
    pub s_densities: Vec<Density>,
    pub q_density: Density,
    pub lambda: f64,
}

impl DualVariables {
    pub fn new(w: Vec<f64>, s_densities: Vec<Density>, q_density: Density, lambda: f64) -> Result<Self> {
        if w.len() != s_densities.len() {
            return Err(Error::Shape("one bank measure per weight".into()));
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || w.iter().all(|v| *v == 0.0) {
            return Err(Error::Domain("weights must be finite, nonnegative and not all zero".into()));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Domain(format!("scale λ must be positive (got {lambda})")));
        }
        let k = q_density.values().len();
        for (i, s) in s_densities.iter().enumerate() {
            if s.values().len() != k {
                return Err(Error::Shape(format!("bank measure {i} lives on another space")));
            }
            for (w_om, (sv, qv)) in s.values().iter().zip(q_density.values()).enumerate() {
                if w[i] * sv > 0.0 && *qv <= POSITIVITY_TOL {
                    return Err(Error::Domain(format!(
                        "w_{i}·S_{i} charges scenario {w_om} where Q vanishes (needs w_i S_i ≪ Q)"
                    )));
                }
            }
        }
        Ok(Self { w, s_densities, q_density, lambda })
    }

    /// `Z_ωi = w_i dS_i/(λ dQ)`, zero where `Q` vanishes.
    fn z_field(&self) -> Vec<f64> {
        let k = self.q_density.values().len();
        let n = self.w.len();
        let mut z = vec![0.0; k * n];
        for (om, &q) in self.q_density.values().iter().enumerate() {
            if q > POSITIVITY_TOL {
                for i in 0..n {
                    z[om * n + i] = self.w[i] * self.s_densities[i].values()[om] / (self.lambda * q);
                }
            }
        }
        z
    }
}

/// Dual objective at `(d = dQ/dP, Z)` with `Z` flattened scenario-major.
fn objective_at(rho: &RiskMeasureSpec, agg: &AggregatorSpec, x: &RandomVector, d: &Density, z: &[f64]) -> Result<f64> {
    let probs = x.space().probs();
    let n = x.dim();
    let mut inner = 0.0;
    for (om, (&p, &dv)) in probs.iter().zip(d.values()).enumerate() {
        if dv <= 0.0 {
            continue;
        }
        let zr = &z[om * n..(om + 1) * n];
        let phi = agg.conjugate_phi(zr)?;
        let lin: f64 = zr.iter().zip(x.row(om)).map(|(a, b)| a * b).sum();
        inner += p * dv * (phi + lin);
    }
    penalty_left_inverse(rho, d, -inner)
}

/// `α_ρ^{-l}(dQ/dP, −E_Q[Φ̃(w·dS/(λdQ))] − wᵀE_S[X]/λ)`.
pub fn dual_objective(rho: &RiskMeasureSpec, agg: &AggregatorSpec, x: &RandomVector, v: &DualVariables) -> Result<f64> {
    if v.w.len() != x.dim() || v.q_density.values().len() != x.scenarios() {
        return Err(Error::Shape("dual variables do not match the shock".into()));
    }
    objective_at(rho, agg, x, &v.q_density, &v.z_field())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualReport {
    pub primal: f64,
    /// Best dual objective found; a lower bound on `primal`.
    pub dual_bound: f64,
    /// `primal − dual_bound`, `0` when both are the same infinity.
    pub gap: f64,
    pub best: Option<DualVariables>,
    pub starts_used: usize,
    pub iterations: usize,
    pub gap_ok: bool,
    /// Filled in only when a minimax check was run alongside.
    pub minimax_ok: Option<bool>,
}

/// Slack allowed on weak duality before it counts as a bug.
pub const WEAK_DUALITY_SLACK: f64 = 1e-6;

/// Box for `Z` wide enough to hold every supergradient of `Λ̃` at the shock.
fn z_box(agg: &AggregatorSpec, x: &RandomVector) -> (f64, f64) {
    match agg {
        AggregatorSpec::Sum => (1.0, 1.0),
        AggregatorSpec::TotalLoss => (0.0, 1.0),
        AggregatorSpec::Exponential => {
            let top = x.values().iter().map(|v| (-v - 1.0).exp()).fold(1.0, f64::max);
            (0.0, 2.0 * top)
        }
        AggregatorSpec::EisenbergNoe(_) => (0.0, 4.0),
    }
}

fn gap_of(primal: f64, dual: f64) -> f64 {
    if primal == dual {
        0.0
    } else {
        primal - dual
    }
}

/// Maximizes the dual objective over `(Q, Z)` and compares with `R(X)`.
///
/// Starts: uniform `Q` with `Z ≡ 1` (clipped to the box), uniform `Q` with
/// `Z` at a finite-difference supergradient of `Λ̃` in each scenario, then
/// random points. `gap_ok` iff `gap ≤ max(1e-3, 1e-3·|primal|)`. A dual
/// value above the primal by more than `1e-6` is a contract violation.
pub fn dual_risk(rho: &RiskMeasureSpec, agg: &AggregatorSpec, x: &RandomVector, cfg: &OptimizerConfig) -> Result<DualReport> {
    let primal = primal_risk(rho, agg, x)?;
    let space = x.space().clone();
    let k = space.len();
    let n = x.dim();
    let (zlo, zhi) = z_box(agg, x);
    let dom = Domain { simplex: k, lo: vec![zlo; k * n], hi: vec![zhi; k * n] };
    let to_density = |q: &[f64]| Density::from_masses(space.clone(), q);
    let f = |v: &[f64]| -> f64 {
        match to_density(&v[..k]) {
            Ok(d) => objective_at(rho, agg, x, &d, &v[k..]).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    };
    let mut seeds = Vec::new();
    let mut s1 = space.probs().to_vec();
    s1.extend(std::iter::repeat_n(1.0f64.clamp(zlo, zhi), k * n));
    seeds.push(s1);
    let mut s2 = space.probs().to_vec();
    for row in x.rows() {
        s2.extend(supergradient(agg, row).into_iter().map(|g| g.clamp(zlo, zhi)));
    }
    seeds.push(s2);
    let opt = maximize(f, &dom, &seeds, cfg);
    let dual_bound = opt.value;
    if dual_bound > primal + WEAK_DUALITY_SLACK {
        return Err(Error::Contract(format!("dual bound {dual_bound} exceeds primal {primal}")));
    }
    let best = reconstruct(&space, n, &opt.x);
    let gap = gap_of(primal, dual_bound);
    let gap_ok = gap <= 1e-3f64.max(1e-3 * primal.abs());
    Ok(DualReport { primal, dual_bound, gap, best, starts_used: opt.starts_used, iterations: opt.iterations, gap_ok, minimax_ok: None })
}

/// One-sided finite-difference gradient of `Λ̃`, taken from the left so kinks resolve to the steeper side.
fn supergradient(agg: &AggregatorSpec, x: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    let base = agg.aggregate_point(x).unwrap_or(f64::NAN);
    (0..x.len())
        .map(|i| {
            let mut y = x.to_vec();
            let back = if agg.nonnegative_domain() && y[i] < h { 0.0 } else { h };
            if back == 0.0 {
                y[i] += h;
                let up = agg.aggregate_point(&y).unwrap_or(f64::NAN);
                return (up - base) / h;
            }
            y[i] -= back;
            let dn = agg.aggregate_point(&y).unwrap_or(f64::NAN);
            (base - dn) / back
        })
        .map(|g| if g.is_finite() { g.max(0.0) } else { 1.0 })
        .collect()
}

fn reconstruct(space: &std::sync::Arc<crate::prob::FiniteProbabilitySpace>, n: usize, v: &[f64]) -> Option<DualVariables> {
    let k = space.len();
    let q = &v[..k];
    let z = &v[k..];
    let qd = Density::from_masses(space.clone(), q).ok()?;
    let mut w = vec![0.0; n];
    for om in 0..k {
        for i in 0..n {
            w[i] += q[om] * z[om * n + i];
        }
    }
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let vals: Vec<f64> = if w[i] > 0.0 {
            (0..k).map(|om| q[om] * z[om * n + i] / (w[i] * space.probs()[om])).collect()
        } else {
            qd.values().to_vec()
        };
        s.push(Density::new(space.clone(), vals).ok()?);
    }
    if w.iter().all(|v| *v == 0.0) {
        return None;
    }
    DualVariables::new(w, s, qd, 1.0).ok()
}

fn random_masses<R: Rng>(rng: &mut R, support: &[bool]) -> Vec<f64> {
    let e: Vec<f64> = support.iter().map(|&s| if s { -(1.0 - rng.gen::<f64>()).ln() } else { 0.0 }).collect();
    let t: f64 = e.iter().sum();
    e.iter().map(|v| v / t).collect()
}

/// Samples dual variables satisfying `w_i S_i ≪ Q`. With probability 0.3 one
/// scenario is removed from the support of `Q` (and of every `S_i`).
pub fn sample_dual_variables<R: Rng>(rng: &mut R, space: &std::sync::Arc<crate::prob::FiniteProbabilitySpace>, n: usize) -> DualVariables {
    let k = space.len();
    let mut support = vec![true; k];
    if k > 1 && rng.gen_bool(0.3) {
        support[rng.gen_range(0..k)] = false;
    }
    let q = random_masses(rng, &support);
    let qd = Density::from_masses(space.clone(), &q).expect("masses form a density");
    let s = (0..n)
        .map(|_| Density::from_masses(space.clone(), &random_masses(rng, &support)).expect("masses form a density"))
        .collect();
    let w = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln() * 2.0).collect();
    let lambda = (rng.gen::<f64>() * 4.0 - 2.0).exp();
    DualVariables::new(w, s, qd, lambda).expect("sampled variables are compatible")
}

/// Serializable summary of a `DualVariables` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVariablesView {
    pub w: Vec<f64>,
    pub s_densities: Vec<Vec<f64>>,
    pub q_density: Vec<f64>,
    pub lambda: f64,
}

impl From<&DualVariables> for DualVariablesView {
    fn from(v: &DualVariables) -> Self {
        Self {
            w: v.w.clone(),
            s_densities: v.s_densities.iter().map(|d| d.values().to_vec()).collect(),
            q_density: v.q_density.values().to_vec(),
            lambda: v.lambda,
        }
    }
}
