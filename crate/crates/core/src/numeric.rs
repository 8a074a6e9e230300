//! Small one-dimensional search routines shared by the other modules.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization of a unimodal function on `[a, b]`.
///
/// Infinite values are fine as long as the function stays unimodal in the
/// extended sense. Returns the best abscissa seen and its value.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let mut iters = 0;
    while hi - lo > tol && iters < 300 {
        iters += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    for x in [a, b] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Golden-section minimization over a positive scale `λ ∈ [lo, hi]`, searching in `ln λ`.
///
/// A coarse log-spaced scan picks the starting bracket so that functions that
/// are infinite on part of the range (perspectives with bounded domains) are
/// still handled.
pub fn golden_min_log<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> (f64, f64) {
    let (la, lb) = (lo.ln(), hi.ln());
    let n = 65;
    let step = (lb - la) / (n - 1) as f64;
    let mut vals = Vec::with_capacity(n);
    for k in 0..n {
        let t = la + step * k as f64;
        vals.push((t, f(t.exp())));
    }
    let mut k_best = 0;
    for k in 1..n {
        if vals[k].1 < vals[k_best].1 {
            k_best = k;
        }
    }
    let a = vals[k_best.saturating_sub(1)].0;
    let b = vals[(k_best + 1).min(n - 1)].0;
    let (t, v) = golden_min(|t| f(t.exp()), a, b, 1e-12);
    if v <= vals[k_best].1 {
        (t.exp(), v)
    } else {
        (vals[k_best].0.exp(), vals[k_best].1)
    }
}

/// Bisection for the sign change of an increasing function on `[lo, hi]`.
///
/// Requires `g(lo) < 0 <= g(hi)`; returns the right end of the final bracket.
pub fn bisect_increasing<F: FnMut(f64) -> f64>(mut g: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Euclidean projection onto the standard simplex `{q >= 0, Σ q = 1}`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        css += uk;
        let t = (css - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// `x ln x` with the convention `0 ln 0 = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Extended-real product with `0 · (±∞) = 0`.
pub fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}
