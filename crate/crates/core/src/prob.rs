//! Finite probability spaces and the random vectors living on them.
//!
//! Every `L^p` space here is weighted `R^{|Ω|·n}`: on a finite scenario set
//! all `L^p` spaces coincide as sets and all reasonable topologies agree, so
//! no weak-* subtleties arise. Norms still depend on `p`.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Strict positivity cutoff used for cone interiors and support tests.
pub const POSITIVITY_TOL: f64 = 1e-14;

const PROB_SUM_TOL: f64 = 1e-12;
const DENSITY_MEAN_TOL: f64 = 1e-10;

/// Scenario probabilities `p_ω`, all strictly positive and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProbabilitySpace {
    probs: Vec<f64>,
}

impl FiniteProbabilitySpace {
    pub fn new(probs: Vec<f64>) -> Result<Arc<Self>> {
        if probs.is_empty() {
            return Err(Error::Domain("probability space needs at least one scenario".into()));
        }
        for (k, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::Domain(format!(
                    "scenario {k} has probability {p}; every scenario must have positive probability"
                )));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::Domain(format!("probabilities must sum to 1 (got {total})")));
        }
        Ok(Arc::new(Self { probs }))
    }

    pub fn uniform(k: usize) -> Arc<Self> {
        Arc::new(Self { probs: vec![1.0 / k as f64; k] })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `E_P[v]` for a scalar vector indexed by scenario.
    pub fn expect(&self, v: &[f64]) -> f64 {
        self.probs.iter().zip(v).map(|(p, x)| p * x).sum()
    }
}

/// A random vector `Ω → R^n`, stored row-major with one row per scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVector {
    space: Arc<FiniteProbabilitySpace>,
    dim: usize,
    values: Vec<f64>,
}

impl RandomVector {
    pub fn new(space: Arc<FiniteProbabilitySpace>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("random vector needs at least one coordinate".into()));
        }
        if values.len() != dim * space.len() {
            return Err(Error::Shape(format!(
                "expected {} x {} values, got {}",
                space.len(),
                dim,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("random vector entries must be finite (found {v})")));
        }
        Ok(Self { space, dim, values })
    }

    pub fn from_rows(space: Arc<FiniteProbabilitySpace>, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != space.len() {
            return Err(Error::Shape(format!(
                "expected {} scenario rows, got {}",
                space.len(),
                rows.len()
            )));
        }
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("ragged scenario rows".into()));
        }
        Self::new(space, dim, rows.concat())
    }

    /// Scalar random variable from per-scenario values.
    pub fn scalar(space: Arc<FiniteProbabilitySpace>, values: Vec<f64>) -> Result<Self> {
        Self::new(space, 1, values)
    }

    pub fn constant(space: Arc<FiniteProbabilitySpace>, dim: usize, c: f64) -> Self {
        let len = space.len() * dim;
        Self { space, dim, values: vec![c; len] }
    }

    pub fn zeros(space: Arc<FiniteProbabilitySpace>, dim: usize) -> Self {
        Self::constant(space, dim, 0.0)
    }

    pub fn space(&self) -> &Arc<FiniteProbabilitySpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scenarios(&self) -> usize {
        self.space.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, w: usize) -> &[f64] {
        &self.values[w * self.dim..(w + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            space: self.space.clone(),
            dim: self.dim,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        same_shape(self, other)?;
        Ok(Self {
            space: self.space.clone(),
            dim: self.dim,
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

fn same_shape(a: &RandomVector, b: &RandomVector) -> Result<()> {
    if a.space.probs != b.space.probs {
        return Err(Error::Shape("random vectors live on different probability spaces".into()));
    }
    if a.dim != b.dim {
        return Err(Error::Shape(format!("entity counts differ: {} vs {}", a.dim, b.dim)));
    }
    Ok(())
}

/// A Radon–Nikodym derivative `dQ/dP`: nonnegative with `E_P[d] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    space: Arc<FiniteProbabilitySpace>,
    values: Vec<f64>,
}

impl Density {
    pub fn new(space: Arc<FiniteProbabilitySpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Shape(format!(
                "density has {} entries for {} scenarios",
                values.len(),
                space.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Domain(format!("density entries must be finite and >= 0 (found {v})")));
        }
        let mean = space.expect(&values);
        if (mean - 1.0).abs() > DENSITY_MEAN_TOL {
            return Err(Error::Domain(format!("density must have P-mean 1 (got {mean})")));
        }
        Ok(Self { space, values })
    }

    /// The density of `P` itself.
    pub fn one(space: Arc<FiniteProbabilitySpace>) -> Self {
        let k = space.len();
        Self { space, values: vec![1.0; k] }
    }

    /// Density with scenario masses `q` (a point of the standard simplex).
    pub fn from_masses(space: Arc<FiniteProbabilitySpace>, q: &[f64]) -> Result<Self> {
        let values = q.iter().zip(space.probs()).map(|(q, p)| q / p).collect();
        Self::new(space, values)
    }

    pub fn space(&self) -> &Arc<FiniteProbabilitySpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Scenario masses `Q({ω}) = p_ω d(ω)`.
    pub fn masses(&self) -> Vec<f64> {
        self.values.iter().zip(self.space.probs()).map(|(d, p)| d * p).collect()
    }

    /// `E_P[ln d]`, equal to `-∞` when the density has a zero atom.
    pub fn mean_log(&self) -> f64 {
        self.space.expect(&self.values.iter().map(|d| d.ln()).collect::<Vec<_>>())
    }

    /// True when some scenario carries zero `Q`-mass.
    pub fn is_degenerate(&self) -> bool {
        self.values.iter().any(|d| *d <= POSITIVITY_TOL)
    }

    pub fn as_random_vector(&self) -> RandomVector {
        RandomVector { space: self.space.clone(), dim: 1, values: self.values.clone() }
    }
}

/// The nonnegative-orthant cone together with its normalizing element `π`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    pi: RandomVector,
}

impl ConeSpec {
    /// Orthant cone with `π ≡ 1`.
    pub fn orthant(space: Arc<FiniteProbabilitySpace>, dim: usize) -> Self {
        Self { pi: RandomVector::constant(space, dim, 1.0) }
    }

    pub fn with_pi(pi: RandomVector) -> Result<Self> {
        if pi.values().iter().any(|v| *v <= POSITIVITY_TOL) {
            return Err(Error::Cone("π must be strictly positive in every scenario and coordinate".into()));
        }
        Ok(Self { pi })
    }

    pub fn pi(&self) -> &RandomVector {
        &self.pi
    }

    pub fn dim(&self) -> usize {
        self.pi.dim()
    }
}

/// `⟨x*, x⟩ = Σ_ω p_ω Σ_i x*_i(ω) x_i(ω)`.
pub fn pairing(xstar: &RandomVector, x: &RandomVector) -> Result<f64> {
    same_shape(xstar, x)?;
    Ok(pairing_unchecked(xstar.space.probs(), xstar.dim, &xstar.values, &x.values))
}

pub(crate) fn pairing_unchecked(probs: &[f64], dim: usize, a: &[f64], b: &[f64]) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(w, p)| {
            let r = w * dim..(w + 1) * dim;
            p * a[r.clone()].iter().zip(&b[r]).map(|(u, v)| u * v).sum::<f64>()
        })
        .sum()
}

/// `(E[‖X‖^p])^{1/p}` with the Euclidean norm per scenario.
///
/// `p = ∞` gives the scenario maximum. Any `p > 0` is accepted, and negative
/// `p` is allowed for densities (the power-loss pseudo-norm), where a zero
/// entry sends the mean to `+∞` and the result to `0`.
pub fn norm_p(x: &RandomVector, p: f64) -> Result<f64> {
    if p.is_nan() || p == 0.0 {
        return Err(Error::Domain(format!("norm exponent must be nonzero (got {p})")));
    }
    let mags: Vec<f64> = x.rows().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    if p == f64::INFINITY {
        return Ok(mags.iter().cloned().fold(0.0, f64::max));
    }
    Ok(scalar_norm(x.space.probs(), &mags, p))
}

pub(crate) fn scalar_norm(probs: &[f64], mags: &[f64], p: f64) -> f64 {
    if p == f64::INFINITY {
        return mags.iter().map(|v| v.abs()).fold(0.0, f64::max);
    }
    let mean: f64 = probs.iter().zip(mags).map(|(pr, m)| pr * m.abs().powf(p)).sum();
    mean.powf(1.0 / p)
}

/// Splits `x* ∈ C⁺∖{0}` into `scale · unit` with `⟨unit, π⟩ = 1`.
pub fn normalize_dual(xstar: &RandomVector, cone: &ConeSpec) -> Result<(f64, RandomVector)> {
    if let Some(v) = xstar.values().iter().find(|v| **v < 0.0) {
        return Err(Error::Cone(format!("dual element has negative entry {v}")));
    }
    if xstar.is_zero() {
        return Err(Error::Domain("the zero functional cannot be normalized".into()));
    }
    let scale = pairing(xstar, cone.pi())?;
    Ok((scale, xstar.scale(1.0 / scale)))
}

/// True iff `y*` is strictly positive wherever some coordinate of `x*` is nonzero.
pub fn support_compatible(xstar: &RandomVector, ystar: &RandomVector) -> bool {
    xstar
        .rows()
        .zip(ystar.values())
        .all(|(row, y)| row.iter().all(|v| *v == 0.0) || *y > POSITIVITY_TOL)
}
