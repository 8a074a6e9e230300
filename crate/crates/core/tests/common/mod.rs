//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qrisk_core::aggregation::{clearing_fixed_point, Network};
use qrisk_core::lp::{LinearProgram, Sense};
use rand::Rng;

/// Best objective over the vertices of `{Ax (≤|≥|=) b, lo ≤ x ≤ hi}` with
/// finite bounds, or `None` if the polytope is empty.
///
/// Tries every choice of `n` active constraints out of rows and bounds,
/// always including the equality rows.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.c.len();
    assert!(lp.lo.iter().chain(&lp.hi).all(|v| v.is_finite()), "oracle needs finite bounds");
    // candidate hyperplanes: (row coefficients, rhs)
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut forced = Vec::new();
    for (i, row) in lp.a.iter().enumerate() {
        if lp.senses[i] == Sense::Eq {
            forced.push(planes.len());
        }
        planes.push((row.clone(), lp.b[i]));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lo[j]));
        planes.push((e, lp.hi[j]));
    }
    if forced.len() > n {
        return None;
    }
    let free: Vec<usize> = (0..planes.len()).filter(|i| !forced.contains(i)).collect();
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    choose(&free, n - forced.len(), 0, &mut pick, &mut |extra| {
        let idx: Vec<usize> = forced.iter().chain(extra.iter()).copied().collect();
        let a = DMatrix::from_fn(n, n, |r, c| planes[idx[r]].0[c]);
        let b = DVector::from_fn(n, |r, _| planes[idx[r]].1);
        let Some(x) = a.lu().solve(&b) else { return };
        if x.iter().any(|v| !v.is_finite()) {
            return;
        }
        if feasible(lp, x.as_slice()) {
            let v: f64 = lp.c.iter().zip(x.iter()).map(|(c, x)| c * x).sum();
            best = Some(best.map_or(v, |b| b.max(v)));
        }
    });
    best
}

fn choose(items: &[usize], k: usize, from: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for i in from..items.len() {
        if items.len() - i < k - pick.len() {
            break;
        }
        pick.push(items[i]);
        choose(items, k, i + 1, pick, f);
        pick.pop();
    }
}

fn feasible(lp: &LinearProgram, x: &[f64]) -> bool {
    let tol = 1e-9;
    for j in 0..x.len() {
        let s = 1.0 + x[j].abs();
        if x[j] < lp.lo[j] - tol * s || x[j] > lp.hi[j] + tol * s {
            return false;
        }
    }
    lp.a.iter().zip(&lp.senses).zip(&lp.b).all(|((row, sense), b)| {
        let ax: f64 = row.iter().zip(x).map(|(a, x)| a * x).sum();
        let t = tol * (1.0 + b.abs() + row.iter().zip(x).map(|(a, x)| (a * x).abs()).sum::<f64>());
        match sense {
            Sense::Le => ax <= b + t,
            Sense::Ge => ax >= b - t,
            Sense::Eq => (ax - b).abs() <= t,
        }
    })
}

/// Random bounded LP with `n` variables and `m` rows, mostly `≤` rows with a
/// nonnegative right-hand side.
pub fn random_lp<R: Rng>(rng: &mut R, n: usize, m: usize) -> LinearProgram {
    let c = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let mut lp = LinearProgram::new(c);
    for _ in 0..m {
        let row: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(-2.0..2.0) }).collect();
        let roll: f64 = rng.gen();
        let (sense, rhs) = if roll < 0.7 {
            (Sense::Le, rng.gen_range(0.0..4.0))
        } else if roll < 0.9 {
            (Sense::Ge, rng.gen_range(-4.0..1.0))
        } else {
            (Sense::Eq, rng.gen_range(-1.0..1.0))
        };
        lp = lp.with_row(row, sense, rhs);
    }
    let lo = (0..n).map(|_| if rng.gen_bool(0.3) { -rng.gen_range(0.0..2.0) } else { 0.0 }).collect();
    let hi = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
    lp.with_bounds(lo, hi)
}

/// `Φ̃(x*) = sup_x (Λ̃(x) − x*ᵀx)` on a two-bank network by a dense grid over
/// `[0, p̄₁] × [0, p̄₂]` followed by local zooming around the best cell.
pub fn en_conjugate_grid(net: &Network, xstar: &[f64], points: usize) -> f64 {
    assert_eq!(net.banks(), 2);
    let pbar = net.total_liabilities().to_vec();
    let val = |x: &[f64]| clearing_fixed_point(net, x).unwrap().lambda_value - xstar[0] * x[0] - xstar[1] * x[1];
    let (mut lo, mut hi) = ([0.0, 0.0], [pbar[0], pbar[1]]);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..4 {
        let step = [(hi[0] - lo[0]) / (points - 1) as f64, (hi[1] - lo[1]) / (points - 1) as f64];
        let mut arg = [lo[0], lo[1]];
        for a in 0..points {
            for b in 0..points {
                let x = [lo[0] + a as f64 * step[0], lo[1] + b as f64 * step[1]];
                let v = val(&x);
                if v > best {
                    best = v;
                    arg = x;
                }
            }
        }
        for i in 0..2 {
            lo[i] = (arg[i] - 2.0 * step[i]).max(0.0);
            hi[i] = (arg[i] + 2.0 * step[i]).min(pbar[i]);
        }
    }
    best
}

/// Network without interbank claims: each bank owes only society.
pub fn decoupled_network<R: Rng>(rng: &mut R, n: usize) -> Network {
    let mut l = vec![vec![0.0; n + 1]; n + 1];
    for i in 1..=n {
        l[i][0] = rng.gen_range(0.2..3.0);
    }
    Network::new(l).unwrap()
}
