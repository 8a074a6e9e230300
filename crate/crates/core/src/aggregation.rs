//! Aggregation functions `Λ̃: R^n → R`, their scenario-wise lifts and the
//! conjugates `Φ̃(x*) = (−Λ̃)*(−x*)`, including Eisenberg-Noe clearing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_not_nan, Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Sense};
use crate::numeric::xlogx;
use crate::prob::RandomVector;

const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_CAP: usize = 1_000_000;

/// An interbank liability network. Node 0 is society, nodes `1..=n` are banks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    liabilities: Vec<Vec<f64>>,
    /// Total liabilities `p̄_i` of bank `i+1`.
    pbar: Vec<f64>,
    /// `a[i][j]`: share of bank `i+1`'s liabilities owed to node `j`.
    a: Vec<Vec<f64>>,
}

impl Network {
    /// Builds the network from the `(n+1)×(n+1)` nominal liability matrix.
    pub fn new(liabilities: Vec<Vec<f64>>) -> Result<Self> {
        let size = liabilities.len();
        if size < 2 {
            return Err(Error::Shape("liability matrix needs society plus at least one bank".into()));
        }
        if liabilities.iter().any(|r| r.len() != size) {
            return Err(Error::Shape(format!("liability matrix must be {size}×{size}")));
        }
        for (i, row) in liabilities.iter().enumerate() {
            for (j, &l) in row.iter().enumerate() {
                if !l.is_finite() || l < 0.0 {
                    return Err(Error::Invalid(format!("liability ℓ[{i}][{j}] = {l} must be finite and >= 0")));
                }
            }
            if row[i] != 0.0 {
                return Err(Error::Invalid(format!("node {i} cannot owe itself (ℓ[{i}][{i}] = {})", row[i])));
            }
        }
        if liabilities[0].iter().any(|&l| l != 0.0) {
            return Err(Error::Invalid("society (node 0) cannot have liabilities to banks".into()));
        }
        for (i, row) in liabilities.iter().enumerate().skip(1) {
            if row[0] <= 0.0 {
                return Err(Error::Invalid(format!("bank {i} must have a nonzero liability to society")));
            }
        }
        let pbar: Vec<f64> = liabilities[1..].iter().map(|r| r.iter().sum()).collect();
        let a = liabilities[1..].iter().zip(&pbar).map(|(r, t)| r.iter().map(|l| l / t).collect()).collect();
        Ok(Self { liabilities, pbar, a })
    }

    /// Number of banks.
    pub fn banks(&self) -> usize {
        self.pbar.len()
    }

    pub fn liabilities(&self) -> &[Vec<f64>] {
        &self.liabilities
    }

    pub fn total_liabilities(&self) -> &[f64] {
        &self.pbar
    }

    /// Relative liability `a_ij` with node 0 as society.
    pub fn relative(&self, i: usize, j: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.a[i - 1][j]
        }
    }

    /// `Σ a_{i0} p̄_i`, the largest possible payment to society.
    pub fn max_society_payment(&self) -> f64 {
        self.a.iter().zip(&self.pbar).map(|(r, p)| r[0] * p).sum()
    }

    fn society_payment(&self, p: &[f64]) -> f64 {
        self.a.iter().zip(p).map(|(r, p)| r[0] * p).sum()
    }

    /// Incoming interbank payments `Σ_j a_ji p_j` for bank `i`.
    fn inflow(&self, i: usize, p: &[f64]) -> f64 {
        (0..self.banks()).map(|j| self.a[j][i + 1] * p[j]).sum()
    }

    fn check_shock(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.banks() {
            return Err(Error::Shape(format!("shock has {} entries for {} banks", x.len(), self.banks())));
        }
        for &v in x {
            check_not_nan(v, "shock")?;
            if v < 0.0 {
                return Err(Error::Domain(format!("Eisenberg-Noe shocks must be nonnegative (got {v})")));
            }
        }
        Ok(())
    }
}

/// A random network with `n` banks: every bank owes society something in
/// `[0.2, 2]` and each interbank liability is present with probability 1/2.
pub fn random_network<R: Rng>(rng: &mut R, n: usize) -> Network {
    let mut l = vec![vec![0.0; n + 1]; n + 1];
    for i in 1..=n {
        l[i][0] = rng.gen_range(0.2..2.0);
        for j in 1..=n {
            if i != j && rng.gen_bool(0.5) {
                l[i][j] = rng.gen_range(0.0..2.0);
            }
        }
    }
    Network::new(l).expect("generated liabilities satisfy the network invariants")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClearingMethod {
    FixedPoint,
    Lp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingResult {
    pub payments: Vec<f64>,
    /// `Σ a_{i0} p_i`.
    pub lambda_value: f64,
    pub method: ClearingMethod,
    /// Picard iterations or simplex pivots.
    pub iterations: usize,
}

/// Greatest clearing vector by Picard iteration from `p̄`.
pub fn clearing_fixed_point(net: &Network, x: &[f64]) -> Result<ClearingResult> {
    net.check_shock(x)?;
    let n = net.banks();
    let mut p = net.pbar.clone();
    let mut next = vec![0.0; n];
    for it in 1..=FIXED_POINT_CAP {
        let mut change: f64 = 0.0;
        for i in 0..n {
            next[i] = net.pbar[i].min(x[i] + net.inflow(i, &p));
            change = change.max((next[i] - p[i]).abs());
        }
        std::mem::swap(&mut p, &mut next);
        if change <= FIXED_POINT_TOL {
            let lambda_value = net.society_payment(&p);
            return Ok(ClearingResult { payments: p, lambda_value, method: ClearingMethod::FixedPoint, iterations: it });
        }
    }
    Err(Error::Convergence(format!("clearing iteration did not settle in {FIXED_POINT_CAP} steps")))
}

/// Clearing payments from `max Σ a_{i0} p_i` s.t. `0 ≤ p ≤ p̄`, `p_i − Σ_j a_ji p_j ≤ x_i`.
pub fn clearing_lp(net: &Network, x: &[f64]) -> Result<ClearingResult> {
    net.check_shock(x)?;
    let n = net.banks();
    let c = net.a.iter().map(|r| r[0]).collect();
    let mut prog = LinearProgram::new(c).with_bounds(vec![0.0; n], net.pbar.clone());
    for i in 0..n {
        let row = (0..n).map(|j| if i == j { 1.0 } else { -net.a[j][i + 1] }).collect();
        prog = prog.with_row(row, Sense::Le, x[i]);
    }
    let sol = lp::solve(&prog)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!("clearing LP reported {:?}", sol.status)));
    }
    Ok(ClearingResult { lambda_value: sol.objective, payments: sol.x, method: ClearingMethod::Lp, iterations: sol.pivots })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AggregatorSpec {
    /// `Σ x_i`.
    Sum,
    /// `−Σ x_i⁻`.
    TotalLoss,
    /// `−Σ e^{−x_i−1}`.
    Exponential,
    /// Payments to society under Eisenberg-Noe clearing; shocks must be `≥ 0`.
    EisenbergNoe(Network),
}

impl AggregatorSpec {
    /// The fixed bank count for networks, `None` for the dimension-free kinds.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            AggregatorSpec::EisenbergNoe(net) => Some(net.banks()),
            _ => None,
        }
    }

    /// Shocks are restricted to the nonnegative orthant.
    pub fn nonnegative_domain(&self) -> bool {
        matches!(self, AggregatorSpec::EisenbergNoe(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            AggregatorSpec::Sum => "sum",
            AggregatorSpec::TotalLoss => "total_loss",
            AggregatorSpec::Exponential => "exponential",
            AggregatorSpec::EisenbergNoe(_) => "eisenberg_noe",
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        match self.fixed_dim() {
            Some(k) if k != n => Err(Error::Shape(format!("aggregator expects {k} coordinates, got {n}"))),
            _ => Ok(()),
        }
    }

    /// `Λ̃(x)` at a single point.
    pub fn aggregate_point(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        for &v in x {
            check_not_nan(v, "shock")?;
        }
        Ok(match self {
            AggregatorSpec::Sum => x.iter().sum(),
            AggregatorSpec::TotalLoss => x.iter().map(|v| v.min(0.0)).sum(),
            AggregatorSpec::Exponential => -x.iter().map(|v| (-v - 1.0).exp()).sum::<f64>(),
            AggregatorSpec::EisenbergNoe(net) => clearing_fixed_point(net, x)?.lambda_value,
        })
    }

    /// `Λ(X)(ω) = Λ̃(X(ω))`.
    pub fn aggregate(&self, x: &RandomVector) -> Result<RandomVector> {
        let vals = x.rows().map(|r| self.aggregate_point(r)).collect::<Result<Vec<_>>>()?;
        RandomVector::scalar(x.space().clone(), vals)
    }

    /// `Φ̃(0) = sup Λ̃`.
    pub fn phi_at_zero(&self) -> f64 {
        match self {
            AggregatorSpec::Sum => f64::INFINITY,
            AggregatorSpec::TotalLoss | AggregatorSpec::Exponential => 0.0,
            AggregatorSpec::EisenbergNoe(net) => net.max_society_payment(),
        }
    }

    /// `Φ̃(x*) = sup_x (Λ̃(x) − x*ᵀx)`.
    ///
    /// Closed forms for sum, total loss and exponential; an LP over payments
    /// and excess outflows for Eisenberg-Noe.
    pub fn conjugate_phi(&self, xstar: &[f64]) -> Result<f64> {
        self.check_dim(xstar.len())?;
        for &v in xstar {
            check_not_nan(v, "dual point")?;
        }
        Ok(match self {
            AggregatorSpec::Sum => {
                if xstar.iter().all(|&v| v == 1.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            AggregatorSpec::TotalLoss => {
                if xstar.iter().all(|&v| (0.0..=1.0).contains(&v)) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            AggregatorSpec::Exponential => {
                if xstar.iter().any(|&v| v < 0.0) {
                    f64::INFINITY
                } else {
                    xstar.iter().map(|&v| xlogx(v)).sum()
                }
            }
            AggregatorSpec::EisenbergNoe(net) => en_conjugate(net, xstar)?,
        })
    }

    /// `y*·Φ̃(x*/y*)` for `y* > 0`.
    pub fn phi_perspective(&self, xstar: &[f64], ystar: f64) -> Result<f64> {
        check_not_nan(ystar, "y*")?;
        if ystar <= 0.0 {
            return Err(Error::Domain(format!("perspective needs y* > 0 (got {ystar})")));
        }
        let scaled: Vec<f64> = xstar.iter().map(|v| v / ystar).collect();
        Ok(ystar * self.conjugate_phi(&scaled)?)
    }
}

fn en_conjugate(net: &Network, xstar: &[f64]) -> Result<f64> {
    if xstar.iter().any(|&v| v < 0.0) {
        return Ok(f64::INFINITY);
    }
    let n = net.banks();
    // variables: payments p (0..n), excess outflows t (n..2n)
    let mut c = vec![0.0; 2 * n];
    for i in 0..n {
        c[i] = net.a[i][0];
        c[n + i] = -xstar[i];
    }
    let mut hi = net.pbar.clone();
    hi.extend(std::iter::repeat_n(f64::INFINITY, n));
    let mut prog = LinearProgram::new(c).with_bounds(vec![0.0; 2 * n], hi);
    for i in 0..n {
        let mut row = vec![0.0; 2 * n];
        for j in 0..n {
            row[j] = if i == j { 1.0 } else { -net.a[j][i + 1] };
        }
        row[n + i] = -1.0;
        prog = prog.with_row(row, Sense::Le, 0.0);
    }
    let sol = lp::solve(&prog)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        LpStatus::Unbounded => Ok(f64::INFINITY),
        LpStatus::Infeasible => Err(Error::Solver("conjugate LP infeasible at p = 0".into())),
    }
}
