//! Dense bounded-variable primal simplex.
//!
//! Problems are stated as maximizations with row senses and per-variable
//! bounds. Phase one starts from a slack/artificial basis; nonbasic variables
//! sit at a bound (or at zero when free) and bound flips are explicit. Dantzig
//! pricing is used until `10·(m+n)` pivots have elapsed, after which Bland's
//! rule takes over. Ratio-test ties go to the lowest basic variable index.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;

pub const PRIMAL_FEAS_TOL: f64 = 1e-9;
pub const DUAL_FEAS_TOL: f64 = 1e-9;
pub const COMPLEMENTARITY_TOL: f64 = 1e-8;
pub const GAP_TOL: f64 = 1e-8;

static OPTIMAL_SOLVES: AtomicUsize = AtomicUsize::new(0);
static CERTIFICATE_FAILURES: AtomicUsize = AtomicUsize::new(0);

/// Process-wide `(optimal solves, optimal solves whose certificates failed)`.
pub fn certificate_stats() -> (usize, usize) {
    (OPTIMAL_SOLVES.load(Ordering::Relaxed), CERTIFICATE_FAILURES.load(Ordering::Relaxed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `maximize cᵀx` subject to `A x (≤|≥|=) b` and `lo ≤ x ≤ hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub b: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl LinearProgram {
    /// An LP with no rows and all variables in `[0, ∞)`.
    pub fn new(c: Vec<f64>) -> Self {
        let n = c.len();
        Self { c, a: Vec::new(), senses: Vec::new(), b: Vec::new(), lo: vec![0.0; n], hi: vec![f64::INFINITY; n] }
    }

    pub fn with_row(mut self, row: Vec<f64>, sense: Sense, rhs: f64) -> Self {
        self.a.push(row);
        self.senses.push(sense);
        self.b.push(rhs);
        self
    }

    pub fn with_bounds(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.lo = lo;
        self.hi = hi;
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.c.len();
        let m = self.a.len();
        if self.senses.len() != m || self.b.len() != m {
            return Err(Error::Shape("row senses/rhs do not match row count".into()));
        }
        if self.lo.len() != n || self.hi.len() != n {
            return Err(Error::Shape("bounds do not match variable count".into()));
        }
        if self.a.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("constraint row length differs from variable count".into()));
        }
        let finite = self.c.iter().chain(self.a.iter().flatten()).chain(&self.b).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Invalid("objective, matrix and rhs entries must be finite".into()));
        }
        for j in 0..n {
            if self.lo[j].is_nan() || self.hi[j].is_nan() || self.lo[j] > self.hi[j] {
                return Err(Error::Invalid(format!("variable {j} has bounds [{}, {}]", self.lo[j], self.hi[j])));
            }
            if self.lo[j] == f64::INFINITY || self.hi[j] == f64::NEG_INFINITY {
                return Err(Error::Invalid(format!("variable {j} has an empty bound interval")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

/// Optimality certificate residuals of an `Optimal` solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub complementarity: f64,
    pub duality_gap: f64,
}

impl Certificates {
    pub fn ok(&self) -> bool {
        self.primal_residual <= PRIMAL_FEAS_TOL
            && self.dual_residual <= DUAL_FEAS_TOL
            && self.complementarity <= COMPLEMENTARITY_TOL
            && self.duality_gap <= GAP_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// `+∞` when unbounded, `-∞` when infeasible.
    pub objective: f64,
    pub x: Vec<f64>,
    /// Row prices; nonnegative on `≤` rows and nonpositive on `≥` rows.
    pub duals: Vec<f64>,
    /// Dual objective `bᵀy + Σ hi_j max(r_j, 0) + Σ lo_j min(r_j, 0)`.
    pub dual_objective: f64,
    pub pivots: usize,
    pub certificates: Option<Certificates>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pos {
    Basic,
    Lower,
    Upper,
    Free,
}

struct Tableau {
    m: usize,
    ncol: usize,
    t: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    pos: Vec<Pos>,
    basis: Vec<usize>,
    pivots: usize,
    iterations: usize,
    bland_after: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn step(&mut self, cost: &[f64]) -> Step {
        let (m, ncol) = (self.m, self.ncol);
        let mut cb = vec![0.0; m];
        for i in 0..m {
            cb[i] = cost[self.basis[i]];
        }
        let bland = self.pivots >= self.bland_after;
        let mut enter: Option<(usize, f64, f64)> = None;
        for j in 0..ncol {
            let dir = match self.pos[j] {
                Pos::Basic => continue,
                _ if self.lo[j] == self.hi[j] => continue,
                p => {
                    let mut d = cost[j];
                    for i in 0..m {
                        d -= cb[i] * self.t[i * ncol + j];
                    }
                    match p {
                        Pos::Lower if d > OPT_TOL => (1.0, d),
                        Pos::Upper if d < -OPT_TOL => (-1.0, d),
                        Pos::Free if d.abs() > OPT_TOL => (d.signum(), d),
                        _ => continue,
                    }
                }
            };
            match enter {
                None => enter = Some((j, dir.0, dir.1)),
                Some((_, _, best)) if !bland && dir.1.abs() > best.abs() => enter = Some((j, dir.0, dir.1)),
                _ => {}
            }
            if bland && enter.is_some() {
                break;
            }
        }
        let Some((j, delta, _)) = enter else {
            return Step::Optimal;
        };

        let mut t_best = f64::INFINITY;
        let mut leave: Option<(usize, bool)> = None;
        for i in 0..m {
            let rate = -delta * self.t[i * ncol + j];
            let b = self.basis[i];
            let (lim, to_upper) = if rate < -PIVOT_TOL && self.lo[b].is_finite() {
                (((self.x[b] - self.lo[b]) / -rate).max(0.0), false)
            } else if rate > PIVOT_TOL && self.hi[b].is_finite() {
                (((self.hi[b] - self.x[b]) / rate).max(0.0), true)
            } else {
                continue;
            };
            let better = match leave {
                None => true,
                Some((r, _)) => lim < t_best || (lim == t_best && b < self.basis[r]),
            };
            if better {
                t_best = lim;
                leave = Some((i, to_upper));
            }
        }
        let t_flip = self.hi[j] - self.lo[j];
        self.iterations += 1;
        if t_flip <= t_best {
            if !t_flip.is_finite() {
                return Step::Unbounded;
            }
            for i in 0..m {
                let b = self.basis[i];
                self.x[b] -= delta * t_flip * self.t[i * ncol + j];
            }
            if delta > 0.0 {
                self.x[j] = self.hi[j];
                self.pos[j] = Pos::Upper;
            } else {
                self.x[j] = self.lo[j];
                self.pos[j] = Pos::Lower;
            }
            return Step::Moved;
        }
        let (r, to_upper) = leave.expect("finite ratio implies a leaving row");
        for i in 0..m {
            let b = self.basis[i];
            self.x[b] -= delta * t_best * self.t[i * ncol + j];
        }
        self.x[j] += delta * t_best;
        let out = self.basis[r];
        if to_upper {
            self.x[out] = self.hi[out];
            self.pos[out] = Pos::Upper;
        } else {
            self.x[out] = self.lo[out];
            self.pos[out] = Pos::Lower;
        }
        self.pivot(r, j);
        Step::Moved
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let ncol = self.ncol;
        let p = self.t[r * ncol + j];
        for k in 0..ncol {
            self.t[r * ncol + k] /= p;
        }
        let (head, tail) = self.t.split_at_mut(r * ncol);
        let (prow, rest) = tail.split_at_mut(ncol);
        for row in head.chunks_mut(ncol).chain(rest.chunks_mut(ncol)) {
            let f = row[j];
            if f != 0.0 {
                for k in 0..ncol {
                    row[k] -= f * prow[k];
                }
                row[j] = 0.0;
            }
        }
        self.pos[j] = Pos::Basic;
        self.basis[r] = j;
        self.pivots += 1;
    }

    fn run(&mut self, cost: &[f64], cap: usize) -> Result<Step> {
        loop {
            if self.iterations > cap {
                return Err(Error::Solver(format!("iteration cap {cap} reached")));
            }
            match self.step(cost) {
                Step::Moved => continue,
                s => return Ok(s),
            }
        }
    }
}

/// Solves the LP; `Optimal` results carry certificate residuals.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.c.len();
    let m = lp.a.len();
    let ncol = n + 2 * m;

    let mut lo = vec![0.0; ncol];
    let mut hi = vec![f64::INFINITY; ncol];
    lo[..n].copy_from_slice(&lp.lo);
    hi[..n].copy_from_slice(&lp.hi);
    for i in 0..m {
        let (l, h) = match lp.senses[i] {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        lo[n + i] = l;
        hi[n + i] = h;
    }
    let mut x = vec![0.0; ncol];
    let mut pos = vec![Pos::Lower; ncol];
    for j in 0..n {
        if lo[j].is_finite() {
            x[j] = lo[j];
            pos[j] = Pos::Lower;
        } else if hi[j].is_finite() {
            x[j] = hi[j];
            pos[j] = Pos::Upper;
        } else {
            pos[j] = Pos::Free;
        }
    }

    let mut t = vec![0.0; m * ncol];
    let mut basis = vec![0; m];
    for i in 0..m {
        let act: f64 = lp.a[i].iter().zip(&x[..n]).map(|(a, v)| a * v).sum();
        let want = lp.b[i] - act;
        let s = want.clamp(lo[n + i], hi[n + i]);
        let resid = want - s;
        let sigma = if resid < 0.0 { -1.0 } else { 1.0 };
        let row = &mut t[i * ncol..(i + 1) * ncol];
        row[..n].copy_from_slice(&lp.a[i]);
        row[n + i] = 1.0;
        row[n + m + i] = sigma;
        if resid == 0.0 && lo[n + i] != hi[n + i] {
            basis[i] = n + i;
            x[n + i] = s;
            pos[n + i] = Pos::Basic;
            pos[n + m + i] = Pos::Lower;
        } else {
            x[n + i] = s;
            pos[n + i] = if s == hi[n + i] && s != lo[n + i] { Pos::Upper } else { Pos::Lower };
            basis[i] = n + m + i;
            x[n + m + i] = resid.abs();
            pos[n + m + i] = Pos::Basic;
            if sigma < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
        }
    }

    let mut tab = Tableau { m, ncol, t, lo, hi, x, pos, basis, pivots: 0, iterations: 0, bland_after: 10 * (m + n) };
    let cap = 50 * (m + n) + 10_000;

    let mut cost1 = vec![0.0; ncol];
    for i in 0..m {
        cost1[n + m + i] = -1.0;
    }
    tab.run(&cost1, cap)?;
    let infeas: f64 = (0..m).map(|i| tab.x[n + m + i]).sum();
    let scale = 1.0 + lp.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if infeas > FEAS_TOL * scale {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            objective: f64::NEG_INFINITY,
            x: tab.x[..n].to_vec(),
            duals: vec![0.0; m],
            dual_objective: f64::NEG_INFINITY,
            pivots: tab.pivots,
            certificates: None,
        });
    }
    for i in 0..m {
        let a = n + m + i;
        tab.hi[a] = 0.0;
        tab.x[a] = 0.0;
        if tab.pos[a] != Pos::Basic {
            tab.pos[a] = Pos::Lower;
        }
    }

    let mut cost2 = vec![0.0; ncol];
    cost2[..n].copy_from_slice(&lp.c);
    if let Step::Unbounded = tab.run(&cost2, cap)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective: f64::INFINITY,
            x: tab.x[..n].to_vec(),
            duals: vec![0.0; m],
            dual_objective: f64::INFINITY,
            pivots: tab.pivots,
            certificates: None,
        });
    }

    let (xs, y) = polish(lp, &tab, &cost2);
    let sol = certify(lp, xs, y, tab.pivots);
    OPTIMAL_SOLVES.fetch_add(1, Ordering::Relaxed);
    if !sol.certificates.as_ref().is_some_and(Certificates::ok) {
        CERTIFICATE_FAILURES.fetch_add(1, Ordering::Relaxed);
    }
    Ok(sol)
}

/// Recomputes basic values and row prices from the final basis by LU solves.
fn polish(lp: &LinearProgram, tab: &Tableau, cost: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = lp.c.len();
    let m = lp.a.len();
    let mut x = tab.x.clone();
    if m == 0 {
        return (x[..n].to_vec(), Vec::new());
    }
    let column = |j: usize, i: usize| -> f64 {
        if j < n {
            lp.a[i][j]
        } else if j < n + m {
            if j - n == i { 1.0 } else { 0.0 }
        } else if j - n - m == i {
            1.0
        } else {
            0.0
        }
    };
    let bmat = DMatrix::from_fn(m, m, |i, k| column(tab.basis[k], i));
    let mut rhs = DVector::from_column_slice(&lp.b);
    for j in 0..tab.ncol {
        if tab.pos[j] != Pos::Basic && x[j] != 0.0 {
            for i in 0..m {
                rhs[i] -= column(j, i) * x[j];
            }
        }
    }
    let lu = bmat.clone().lu();
    if let Some(xb) = lu.solve(&rhs) {
        for (k, &b) in tab.basis.iter().enumerate() {
            x[b] = xb[k];
        }
    }
    let cb = DVector::from_iterator(m, tab.basis.iter().map(|&b| cost[b]));
    let y = bmat.transpose().lu().solve(&cb).map(|v| v.as_slice().to_vec()).unwrap_or_else(|| vec![0.0; m]);
    (x[..n].to_vec(), y)
}

fn certify(lp: &LinearProgram, x: Vec<f64>, y: Vec<f64>, pivots: usize) -> LpSolution {
    let n = lp.c.len();
    let m = lp.a.len();
    let objective: f64 = lp.c.iter().zip(&x).map(|(c, v)| c * v).sum();

    let mut primal: f64 = 0.0;
    for j in 0..n {
        primal = primal.max(lp.lo[j] - x[j]).max(x[j] - lp.hi[j]);
    }
    let mut slack = vec![0.0; m];
    for i in 0..m {
        let act: f64 = lp.a[i].iter().zip(&x).map(|(a, v)| a * v).sum();
        slack[i] = lp.b[i] - act;
        let viol = match lp.senses[i] {
            Sense::Le => -slack[i],
            Sense::Ge => slack[i],
            Sense::Eq => slack[i].abs(),
        };
        primal = primal.max(viol);
    }

    let mut dual: f64 = 0.0;
    let mut comp = 0.0;
    let mut dual_obj: f64 = lp.b.iter().zip(&y).map(|(b, v)| b * v).sum();
    for i in 0..m {
        let v = match lp.senses[i] {
            Sense::Le => -y[i],
            Sense::Ge => y[i],
            Sense::Eq => 0.0,
        };
        dual = dual.max(v);
        comp += (y[i] * slack[i]).abs();
    }
    for j in 0..n {
        let mut r = lp.c[j];
        for i in 0..m {
            r -= lp.a[i][j] * y[i];
        }
        if r > 0.0 {
            if lp.hi[j].is_finite() {
                dual_obj += r * lp.hi[j];
                comp += r * (lp.hi[j] - x[j]).abs();
            } else {
                dual = dual.max(r);
            }
        } else if r < 0.0 {
            if lp.lo[j].is_finite() {
                dual_obj += r * lp.lo[j];
                comp += -r * (x[j] - lp.lo[j]).abs();
            } else {
                dual = dual.max(-r);
            }
        }
    }
    let certificates = Certificates {
        primal_residual: primal.max(0.0),
        dual_residual: dual,
        complementarity: comp,
        duality_gap: (dual_obj - objective).abs(),
    };
    LpSolution {
        status: LpStatus::Optimal,
        objective,
        x,
        duals: y,
        dual_objective: dual_obj,
        pivots,
        certificates: Some(certificates),
    }
}
