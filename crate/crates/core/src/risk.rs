//! Univariate quasiconvex risk measures: certainty equivalents and the
//! economic index of riskiness, with their penalty functions.
//!
//! Two penalty families live here. `penalty_closed_form` and its left inverse
//! evaluate the published example formulas literally on their stated ranges.
//! `penalty` and `penalty_left_inverse` are the exact values, derived
//! independently and checked against grid search; the duality engine uses
//! those. The two disagree for the quadratic, power and index losses.

use std::sync::Arc;

use crate::convex::{Monotonicity, ScalarFunctionSpec};
use crate::error::{check_not_nan, Error, Result};
use crate::numeric::bisect_increasing;
use crate::prob::{Density, FiniteProbabilitySpace, RandomVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// `ℓ(s) = s²/2 + s` for `s ≥ −1`, `−1/2` below.
    Quadratic,
    /// `ℓ(s) = −ln(−s)` for `s < 0`.
    Logarithmic,
    /// `ℓ(s) = −(−s)^{1−γ}/(1−γ)` for `s ≤ 0`.
    Power { gamma: f64 },
    /// `ℓ(s) = −ln(1 − s)` for `s < 1`, paired with a threshold `c₀`.
    IndexLogarithmic { c0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    kind: LossKind,
}

impl LossSpec {
    pub fn new(kind: LossKind) -> Result<Self> {
        match kind {
            LossKind::Power { gamma } if !(gamma > 0.0 && gamma < 1.0) => {
                Err(Error::Invalid(format!("power loss needs γ in (0,1), got {gamma}")))
            }
            LossKind::IndexLogarithmic { c0 } if !(c0 > 0.0 && c0.is_finite()) => {
                Err(Error::Invalid(format!("index loss needs a finite c0 > 0, got {c0}")))
            }
            _ => Ok(Self { kind }),
        }
    }

    pub fn quadratic() -> Self {
        Self { kind: LossKind::Quadratic }
    }

    pub fn logarithmic() -> Self {
        Self { kind: LossKind::Logarithmic }
    }

    pub fn power(gamma: f64) -> Result<Self> {
        Self::new(LossKind::Power { gamma })
    }

    pub fn index(c0: f64) -> Result<Self> {
        Self::new(LossKind::IndexLogarithmic { c0 })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    /// Integrability exponent of the natural model space.
    pub fn p(&self) -> f64 {
        match self.kind {
            LossKind::Quadratic => 2.0,
            _ => 1.0,
        }
    }

    /// `ℓ(s)`, `+∞` off the domain.
    pub fn ell(&self, s: f64) -> f64 {
        match self.kind {
            LossKind::Quadratic => {
                if s >= -1.0 {
                    s * s / 2.0 + s
                } else {
                    -0.5
                }
            }
            LossKind::Logarithmic => {
                if s < 0.0 {
                    -(-s).ln()
                } else {
                    f64::INFINITY
                }
            }
            LossKind::Power { gamma } => {
                if s <= 0.0 {
                    -(-s).powf(1.0 - gamma) / (1.0 - gamma)
                } else {
                    f64::INFINITY
                }
            }
            LossKind::IndexLogarithmic { .. } => {
                if s < 1.0 {
                    -(1.0 - s).ln()
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Inverse of `ℓ` on its range. The quadratic loss is flat below `−1`, so
    /// its inverse takes the value `−1` at the floor `−1/2`.
    pub fn ell_inv(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return f64::INFINITY;
        }
        match self.kind {
            LossKind::Quadratic => -1.0 + (1.0 + 2.0 * t).max(0.0).sqrt(),
            LossKind::Logarithmic => -(-t).exp(),
            LossKind::Power { gamma } => -(-(1.0 - gamma) * t).max(0.0).powf(1.0 / (1.0 - gamma)),
            LossKind::IndexLogarithmic { .. } => 1.0 - (-t).exp(),
        }
    }

    /// Right inverse of `ℓ'` for `t > 0`.
    pub fn h(&self, t: f64) -> f64 {
        match self.kind {
            LossKind::Quadratic => t - 1.0,
            LossKind::Logarithmic => -1.0 / t,
            LossKind::Power { gamma } => -t.powf(-1.0 / gamma),
            LossKind::IndexLogarithmic { .. } => 1.0 - 1.0 / t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskForm {
    CertaintyEquivalent,
    EconomicIndex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskMeasureSpec {
    form: RiskForm,
    loss: LossSpec,
}

impl RiskMeasureSpec {
    /// Certainty equivalents accept the quadratic, logarithmic and power
    /// losses; the economic index accepts the logarithmic index loss only.
    pub fn new(form: RiskForm, loss: LossSpec) -> Result<Self> {
        let ok = match form {
            RiskForm::CertaintyEquivalent => !matches!(loss.kind, LossKind::IndexLogarithmic { .. }),
            RiskForm::EconomicIndex => matches!(loss.kind, LossKind::IndexLogarithmic { .. }),
        };
        if !ok {
            return Err(Error::Unsupported(format!("{form:?} with loss {:?}", loss.kind)));
        }
        Ok(Self { form, loss })
    }

    pub fn certainty_equivalent(loss: LossSpec) -> Result<Self> {
        Self::new(RiskForm::CertaintyEquivalent, loss)
    }

    pub fn economic_index(c0: f64) -> Result<Self> {
        Self::new(RiskForm::EconomicIndex, LossSpec::index(c0)?)
    }

    pub fn form(&self) -> RiskForm {
        self.form
    }

    pub fn loss(&self) -> LossSpec {
        self.loss
    }

    fn c0(&self) -> f64 {
        match self.loss.kind {
            LossKind::IndexLogarithmic { c0 } => c0,
            _ => unreachable!("index threshold requested for a non-index loss"),
        }
    }

    /// `ρ` on raw scenario values.
    pub fn rho_values(&self, probs: &[f64], y: &[f64]) -> f64 {
        match self.form {
            RiskForm::CertaintyEquivalent => {
                let mut t = 0.0;
                for (p, v) in probs.iter().zip(y) {
                    t += p * self.loss.ell(-v);
                }
                self.loss.ell_inv(t)
            }
            RiskForm::EconomicIndex => economic_index(probs, y, self.c0()),
        }
    }

    /// `ρ` as a decreasing scalar function for the grid oracles.
    pub fn as_function(&self, space: Arc<FiniteProbabilitySpace>) -> ScalarFunctionSpec {
        let spec = *self;
        let probs = space.probs().to_vec();
        ScalarFunctionSpec::new(space, 1, move |y| spec.rho_values(&probs, y))
            .quasiconvex()
            .with_monotonicity(Monotonicity::Decreasing)
    }
}

const LOG_LAMBDA_LO: f64 = -30.0;
const LOG_LAMBDA_HI: f64 = 30.0;

fn index_feasible(probs: &[f64], y: &[f64], c0: f64, lam: f64) -> bool {
    let mut t = 0.0;
    for (p, v) in probs.iter().zip(y) {
        let arg = 1.0 + lam * v;
        if arg <= 0.0 {
            return false;
        }
        t -= p * arg.ln();
    }
    t <= c0
}

/// `1/sup{λ > 0 : E[−ln(1 + λY)] ≤ c₀}` with `λ` searched on `[e^{−30}, e^{30}]`.
///
/// The feasible set is an interval containing small `λ`. Feasible at the top
/// of the range means `ρ = 0`; infeasible at the bottom means `ρ = +∞`.
fn economic_index(probs: &[f64], y: &[f64], c0: f64) -> f64 {
    let feas = |lt: f64| index_feasible(probs, y, c0, lt.exp());
    if feas(LOG_LAMBDA_HI) {
        return 0.0;
    }
    if !feas(LOG_LAMBDA_LO) {
        return f64::INFINITY;
    }
    let lt = bisect_increasing(|lt| if feas(lt) { -1.0 } else { 1.0 }, LOG_LAMBDA_LO, LOG_LAMBDA_HI, 1e-11);
    (-lt).exp()
}

/// `ρ(Y)` for a scalar random variable.
pub fn rho_eval(spec: &RiskMeasureSpec, y: &RandomVector) -> Result<f64> {
    if y.dim() != 1 {
        return Err(Error::Shape("risk measures act on scalar random variables".into()));
    }
    for v in y.values() {
        check_not_nan(*v, "scenario value")?;
    }
    Ok(spec.rho_values(y.space().probs(), y.values()))
}

/// A published closed-form value with the degenerate-density flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub value: f64,
    /// The density has a zero atom, so `E[ln dQ/dP] = −∞` entered the formula.
    pub degenerate: bool,
}

/// `‖d‖_a = E[d^a]^{1/a}` for `a = (γ−1)/γ < 0`; zero when `d` has a zero atom.
fn power_norm(d: &Density, gamma: f64) -> f64 {
    let a = (gamma - 1.0) / gamma;
    let probs = d.space().probs();
    let mut e = 0.0;
    for (p, v) in probs.iter().zip(d.values()) {
        e += p * v.powf(a);
    }
    e.powf(1.0 / a)
}

fn l2_norm(d: &Density) -> f64 {
    let probs = d.space().probs();
    probs.iter().zip(d.values()).map(|(p, v)| p * v * v).sum::<f64>().sqrt()
}

fn out_of_range(what: &str, x: f64) -> Error {
    Error::OutOfRange(format!("{what} = {x} is outside the formula's range"))
}

/// The published example penalty formulas, evaluated literally.
///
/// Quadratic: `(1+m)‖d‖₂ − 1` for `m < −1` and `−1` for `m ≥ −1`.
/// Logarithmic: `m e^{E ln d}`; power: `m / ‖d‖_{(γ−1)/γ}`; index:
/// `m(1 − e^{E ln d − c₀})`, all for `m < 0`. Other levels are out of range.
pub fn penalty_closed_form(spec: &RiskMeasureSpec, d: &Density, m: f64) -> Result<ClosedForm> {
    check_not_nan(m, "level m")?;
    let degenerate = d.is_degenerate();
    let value = match spec.loss.kind {
        LossKind::Quadratic => {
            if m < -1.0 {
                (1.0 + m) * l2_norm(d) - 1.0
            } else {
                -1.0
            }
        }
        _ if m >= 0.0 => return Err(out_of_range("m", m)),
        LossKind::Logarithmic => m * d.mean_log().exp(),
        LossKind::Power { gamma } => m / power_norm(d, gamma),
        LossKind::IndexLogarithmic { c0 } => m * (1.0 - (d.mean_log() - c0).exp()),
    };
    Ok(ClosedForm { value, degenerate })
}

/// The published left-inverse formulas, evaluated literally.
///
/// Quadratic: `(s+1)/‖d‖₂ − 1` for `s < −1`. Logarithmic: `s e^{−E ln d}`;
/// power: `s ‖d‖_{(γ−1)/γ}`; index: `s / (1 − e^{E ln d − c₀})`, all for `s < 0`.
pub fn penalty_left_inverse_closed_form(spec: &RiskMeasureSpec, d: &Density, s: f64) -> Result<ClosedForm> {
    check_not_nan(s, "target s")?;
    let degenerate = d.is_degenerate();
    let value = match spec.loss.kind {
        LossKind::Quadratic if s < -1.0 => (s + 1.0) / l2_norm(d) - 1.0,
        LossKind::Quadratic => return Err(out_of_range("s", s)),
        _ if s >= 0.0 => return Err(out_of_range("s", s)),
        LossKind::Logarithmic => s * (-d.mean_log()).exp(),
        LossKind::Power { gamma } => s * power_norm(d, gamma),
        LossKind::IndexLogarithmic { c0 } => s / (1.0 - (d.mean_log() - c0).exp()),
    };
    Ok(ClosedForm { value, degenerate })
}

/// Slope `k` with `α(d, m) = m·k` on the linear branch of the exact penalty.
fn slope(spec: &RiskMeasureSpec, d: &Density) -> f64 {
    match spec.loss.kind {
        LossKind::Quadratic => l2_norm(d),
        LossKind::Logarithmic => d.mean_log().exp(),
        LossKind::Power { gamma } => power_norm(d, gamma),
        LossKind::IndexLogarithmic { c0 } => 1.0 - (d.mean_log() - c0).exp(),
    }
}

/// Exact `α_ρ(d, m) = sup{E[d·(−Y)] : ρ(Y) ≤ m}`.
///
/// | loss        | below the kink            | above the kink          |
/// |-------------|---------------------------|-------------------------|
/// | quadratic   | `−∞` for `m < −1`         | `(1+m)‖d‖₂ − 1`         |
/// | logarithmic | `m e^{E ln d}` for `m < 0`| `0`                     |
/// | power       | `m ‖d‖_{(γ−1)/γ}`, `m < 0`| `0`                     |
/// | index       | `−∞` for `m < 0`          | `m(1 − e^{E ln d − c₀})`|
pub fn penalty(spec: &RiskMeasureSpec, d: &Density, m: f64) -> Result<f64> {
    check_not_nan(m, "level m")?;
    if m == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if m == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let k = slope(spec, d);
    Ok(match spec.loss.kind {
        LossKind::Quadratic => {
            if m < -1.0 {
                f64::NEG_INFINITY
            } else {
                (1.0 + m) * k - 1.0
            }
        }
        LossKind::Logarithmic | LossKind::Power { .. } => {
            if m < 0.0 {
                m * k
            } else {
                0.0
            }
        }
        LossKind::IndexLogarithmic { .. } => {
            if m < 0.0 {
                f64::NEG_INFINITY
            } else {
                m * k
            }
        }
    })
}

/// Exact `α_ρ^{-l}(d, s) = inf{m : α_ρ(d, m) ≥ s}`.
pub fn penalty_left_inverse(spec: &RiskMeasureSpec, d: &Density, s: f64) -> Result<f64> {
    check_not_nan(s, "target s")?;
    if s == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if s == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let k = slope(spec, d);
    Ok(match spec.loss.kind {
        LossKind::Quadratic => {
            if s <= -1.0 {
                -1.0
            } else {
                (s + 1.0) / k - 1.0
            }
        }
        LossKind::Logarithmic | LossKind::Power { .. } => {
            if s > 0.0 {
                f64::INFINITY
            } else if k == 0.0 {
                f64::NEG_INFINITY
            } else {
                s / k
            }
        }
        LossKind::IndexLogarithmic { .. } => {
            if s <= 0.0 {
                0.0
            } else {
                s / k
            }
        }
    })
}

/// Solution of the β-equation and the penalty it produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSolution {
    pub beta: f64,
    pub alpha: f64,
}

/// Solves `E[ℓ(h(β d))] = ℓ(m)` for `β > 0` and returns `α = E[d·h(β d)]`.
///
/// For the index loss the equation is `E[−ln(1 − h(u d))] = c₀` in the
/// product `u = mβ` with `m > 0`. Bisection on `ln β` to `1e-10`. Levels
/// where the loss is flat or infinite, and densities with a zero atom, have
/// no solution.
pub fn solve_beta(spec: &RiskMeasureSpec, d: &Density, m: f64) -> Result<BetaSolution> {
    check_not_nan(m, "level m")?;
    if !m.is_finite() {
        return Err(Error::NoSolution(format!("level m = {m}")));
    }
    if d.is_degenerate() {
        return Err(Error::NoSolution("density has a zero atom".into()));
    }
    let loss = spec.loss;
    let probs = d.space().probs();
    let dv = d.values();
    let expect = |f: &dyn Fn(f64) -> f64| probs.iter().zip(dv).map(|(p, v)| p * f(*v)).sum::<f64>();
    let (target, scale) = match (spec.form, loss.kind) {
        (RiskForm::EconomicIndex, LossKind::IndexLogarithmic { c0 }) => {
            if m <= 0.0 {
                return Err(Error::NoSolution(format!("index penalty has no β at m = {m}")));
            }
            (c0, m)
        }
        (_, LossKind::Quadratic) if m < -1.0 => {
            return Err(Error::NoSolution(format!("quadratic loss is flat at m = {m}")));
        }
        _ => {
            let t = loss.ell(m);
            if !t.is_finite() {
                return Err(Error::NoSolution(format!("ℓ(m) = {t} at m = {m}")));
            }
            (t, 1.0)
        }
    };
    // `ℓ∘h` is increasing on (0, ∞) for all four losses.
    let residual = |lb: f64| {
        let b = scale * lb.exp();
        expect(&|v| loss.ell(loss.h(b * v))) - target
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut k = 0;
    while residual(hi) < 0.0 {
        hi *= 2.0;
        k += 1;
        if k > 8 {
            return Err(Error::NoSolution("β-equation residual stays negative".into()));
        }
    }
    k = 0;
    while residual(lo) >= 0.0 {
        lo *= 2.0;
        k += 1;
        if k > 8 {
            return Err(Error::NoSolution("β-equation residual stays nonnegative".into()));
        }
    }
    let lb = bisect_increasing(residual, lo, hi, 1e-12);
    let beta = lb.exp();
    let b = scale * beta;
    let alpha = match loss.kind {
        LossKind::IndexLogarithmic { .. } => m * expect(&|v| v * loss.h(b * v)),
        _ => expect(&|v| v * loss.h(b * v)),
    };
    Ok(BetaSolution { beta, alpha })
}
