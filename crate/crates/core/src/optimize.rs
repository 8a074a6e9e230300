//! Multi-start projected-gradient minimization over a simplex times a box.
//!
//! Gradients are central finite differences, so the objective may be
//! nonsmooth; a pairwise mass-transfer and per-coordinate golden-section
//! sweep runs after the gradient phase to polish kinks and flat regions.
//! Starts run in parallel and merge by best value, ties to the lowest start
//! index, so results depend only on the master seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::numeric::{golden_min, project_simplex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub starts: usize,
    pub iterations: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub refine_sweeps: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { starts: 20, iterations: 500, seed: 0x5eed, fd_step: 1e-6, refine_sweeps: 12 }
    }
}

/// `Δ_k × [lo, hi]`: the first `k` variables are simplex masses, the rest are boxed.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub simplex: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn simplex(k: usize) -> Self {
        Self { simplex: k, lo: Vec::new(), hi: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.simplex + self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn project(&self, x: &mut [f64]) {
        let k = self.simplex;
        if k > 0 {
            let q = project_simplex(&x[..k]);
            x[..k].copy_from_slice(&q);
        }
        for (j, v) in x[k..].iter_mut().enumerate() {
            *v = v.clamp(self.lo[j], self.hi[j]);
        }
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.len());
        let e: Vec<f64> = (0..self.simplex).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let tot: f64 = e.iter().sum();
        x.extend(e.iter().map(|v| v / tot));
        for (l, h) in self.lo.iter().zip(&self.hi) {
            x.push(l + (h - l) * rng.gen::<f64>());
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub start: usize,
    pub starts_used: usize,
    pub iterations: usize,
}

fn clean(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` over the domain from the given seed points, padded with random starts up to `cfg.starts`.
pub fn minimize<F>(f: F, dom: &Domain, seeds: &[Vec<f64>], cfg: &OptimizerConfig) -> Optimum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let total = cfg.starts.max(seeds.len()).max(1);
    let runs: Vec<(Vec<f64>, f64, usize)> = (0..total)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add((s as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)));
            let mut x = if s < seeds.len() { seeds[s].clone() } else { dom.random_point(&mut rng) };
            dom.project(&mut x);
            local_search(&f, dom, x, cfg)
        })
        .collect();
    let mut best = 0;
    for (s, r) in runs.iter().enumerate() {
        if r.1 < runs[best].1 {
            best = s;
        }
    }
    let iterations = runs.iter().map(|r| r.2).sum();
    let (x, value, _) = runs[best].clone();
    Optimum { x, value, start: best, starts_used: total, iterations }
}

/// Maximizes `f`; a thin wrapper around `minimize`.
pub fn maximize<F>(f: F, dom: &Domain, seeds: &[Vec<f64>], cfg: &OptimizerConfig) -> Optimum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut o = minimize(|x| -clean_max(f(x)), dom, seeds, cfg);
    o.value = -o.value;
    o
}

fn clean_max(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn local_search<F>(f: &F, dom: &Domain, mut x: Vec<f64>, cfg: &OptimizerConfig) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64,
{
    let eval = |x: &[f64]| clean(f(x));
    let mut fx = eval(&x);
    let mut iters = 0;
    let mut step: f64 = 1.0;
    while iters < cfg.iterations && fx > f64::NEG_INFINITY && fx.is_finite() {
        iters += 1;
        let g = gradient(&eval, dom, &x, cfg.fd_step);
        let gn: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gn < 1e-12 {
            break;
        }
        let mut accepted = false;
        let mut t = (step * 2.0).min(1e3);
        for _ in 0..40 {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            dom.project(&mut y);
            let dec: f64 = g.iter().zip(x.iter().zip(&y)).map(|(gi, (a, b))| gi * (a - b)).sum();
            let fy = eval(&y);
            if dec > 0.0 && fy <= fx - 1e-4 * dec {
                let gain = fx - fy;
                x = y;
                fx = fy;
                step = t;
                accepted = true;
                if gain <= 1e-15 * (1.0 + fx.abs()) {
                    accepted = false;
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    for _ in 0..cfg.refine_sweeps {
        if fx == f64::NEG_INFINITY {
            break;
        }
        let before = fx;
        refine_sweep(&eval, dom, &mut x, &mut fx);
        iters += 1;
        if !(before - fx > 1e-14 * (1.0 + fx.abs())) {
            break;
        }
    }
    (x, fx, iters)
}

/// Central differences in the unnormalized coordinates, one-sided near a bound.
fn gradient<F: Fn(&[f64]) -> f64>(eval: &F, dom: &Domain, x: &[f64], h: f64) -> Vec<f64> {
    let k = dom.simplex;
    let mut g = vec![0.0; x.len()];
    let mut y = x.to_vec();
    let at = |y: &mut Vec<f64>| {
        // simplex coordinates are renormalized so every probe stays feasible
        if k > 0 {
            let s: f64 = y[..k].iter().sum();
            for v in &mut y[..k] {
                *v /= s;
            }
        }
        eval(y)
    };
    for j in 0..x.len() {
        let (lo, hi) = if j < k { (0.0, f64::INFINITY) } else { (dom.lo[j - k], dom.hi[j - k]) };
        let up = (x[j] + h).min(hi);
        let dn = (x[j] - h).max(lo);
        if up <= dn {
            continue;
        }
        y.copy_from_slice(x);
        y[j] = up;
        let fu = at(&mut y);
        y.copy_from_slice(x);
        y[j] = dn;
        let fd = at(&mut y);
        let d = (fu - fd) / (up - dn);
        g[j] = if d.is_finite() { d } else { 0.0 };
    }
    g
}

fn line_min<F: FnMut(f64) -> f64>(mut phi: F, a: f64, b: f64) -> (f64, f64) {
    const N: usize = 21;
    let ts: Vec<f64> = (0..N).map(|i| a + (b - a) * i as f64 / (N - 1) as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| clean(phi(t))).collect();
    let mut i = 0;
    for j in 1..N {
        if vals[j] < vals[i] {
            i = j;
        }
    }
    let zero = clean(phi(0.0));
    let (lo, hi, best) = if zero <= vals[i] {
        let j = ts.iter().position(|&t| t >= 0.0).unwrap_or(N - 1);
        (ts[j.saturating_sub(1)], ts[j], (0.0, zero))
    } else {
        (ts[i.saturating_sub(1)], ts[(i + 1).min(N - 1)], (ts[i], vals[i]))
    };
    let (t, v) = golden_min(|t| clean(phi(t)), lo, hi, 1e-13 * (1.0 + (b - a).abs()));
    if v < best.1 {
        (t, v)
    } else {
        best
    }
}

fn refine_sweep<F: Fn(&[f64]) -> f64>(eval: &F, dom: &Domain, x: &mut Vec<f64>, fx: &mut f64) {
    let k = dom.simplex;
    let mut y = x.clone();
    for a in 0..k {
        for b in (a + 1)..k {
            // move mass t from a to b
            let (lo, hi) = (-x[b], x[a]);
            if hi - lo <= 0.0 {
                continue;
            }
            let base = x.clone();
            let (t, v) = line_min(
                |t| {
                    y.copy_from_slice(&base);
                    y[a] = (base[a] - t).max(0.0);
                    y[b] = (base[b] + t).max(0.0);
                    eval(&y)
                },
                lo,
                hi,
            );
            if v < *fx {
                x[a] = (base[a] - t).max(0.0);
                x[b] = (base[b] + t).max(0.0);
                *fx = v;
            }
        }
    }
    for j in k..x.len() {
        let base = x.clone();
        let (l, h) = (dom.lo[j - k] - base[j], dom.hi[j - k] - base[j]);
        let (t, v) = line_min(
            |t| {
                y.copy_from_slice(&base);
                y[j] = base[j] + t;
                eval(&y)
            },
            l,
            h,
        );
        if v < *fx {
            x[j] = base[j] + t;
            *fx = v;
        }
    }
}
