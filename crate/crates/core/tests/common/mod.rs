//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the solvers under test; only the matrix type and
//! the generators are shared.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saa_core::DenseMatrix;

pub type M = DenseMatrix<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> M {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>())
}

pub fn stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> M {
    let mut a = uniform(rng, rows, cols);
    for i in 0..rows {
        let s: f64 = a.row(i).iter().sum();
        for v in a.row_mut(i) {
            *v /= s;
        }
    }
    a
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

// ---------- objective and gradients ----------

/// `‖X − WH‖² + λ‖H − W̃X‖²` by explicit loops.
pub fn naive_objective(x: &M, h: &M, w: &M, wt: &M, lambda: f64) -> f64 {
    let (m, n) = x.shape();
    let k = h.rows();
    let mut fit = 0.0;
    for r in 0..m {
        for c in 0..n {
            let mut v = x[(r, c)];
            for i in 0..k {
                v -= w[(r, i)] * h[(i, c)];
            }
            fit += v * v;
        }
    }
    let mut reg = 0.0;
    for i in 0..k {
        for c in 0..n {
            let mut v = h[(i, c)];
            for r in 0..m {
                v -= wt[(i, r)] * x[(r, c)];
            }
            reg += v * v;
        }
    }
    fit + lambda * reg
}

/// Central differences of `f` at every entry of `a`.
pub fn fd_gradient(a: &M, step: f64, mut f: impl FnMut(&M) -> f64) -> M {
    let mut g = DenseMatrix::zeros(a.rows(), a.cols());
    let mut p = a.clone();
    for idx in 0..a.as_slice().len() {
        let v = a.as_slice()[idx];
        p.as_mut_slice()[idx] = v + step;
        let up = f(&p);
        p.as_mut_slice()[idx] = v - step;
        let down = f(&p);
        p.as_mut_slice()[idx] = v;
        g.as_mut_slice()[idx] = (up - down) / (2.0 * step);
    }
    g
}

/// Minimizer of a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_section(mut lo: f64, mut hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..iters {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

// ---------- small dense linear algebra ----------

/// Solves `A x = b` by Gaussian elimination with partial pivoting; `None`
/// when a pivot is negligible relative to the matrix scale.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |s, v| s.max(v.abs()))
        .max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-11 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Squared distance from `x` to the affine hull of `pts`, restricted to
/// nonnegative weights: `None` when the affine minimizer leaves the simplex
/// or the points are affinely dependent.
fn face_distance(x: &[f64], pts: &[&[f64]]) -> Option<f64> {
    let s = pts.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let mut a = vec![vec![0.0; s + 1]; s + 1];
    let mut rhs = vec![0.0; s + 1];
    for i in 0..s {
        for j in 0..s {
            a[i][j] = 2.0 * dot(pts[i], pts[j]);
        }
        a[i][s] = 1.0;
        a[s][i] = 1.0;
        rhs[i] = 2.0 * dot(pts[i], x);
    }
    rhs[s] = 1.0;
    let sol = solve_linear(a, rhs)?;
    if sol[..s].iter().any(|&w| w < -1e-12) {
        return None;
    }
    let mut p = vec![0.0; x.len()];
    for (w, q) in sol[..s].iter().zip(pts) {
        for (pi, qi) in p.iter_mut().zip(q.iter()) {
            *pi += w.max(0.0) * qi;
        }
    }
    Some(sq(&p, x))
}

/// Squared distance from `x` to `Conv(points)` by enumerating every subset
/// of at most `max_size` points and solving its equality-constrained QP.
pub fn hull_distance_enum(x: &[f64], points: &[Vec<f64>], max_size: usize) -> f64 {
    let r = points.len();
    let mut best = f64::INFINITY;
    let mut idx = Vec::new();
    fn rec(
        start: usize,
        r: usize,
        max_size: usize,
        idx: &mut Vec<usize>,
        x: &[f64],
        points: &[Vec<f64>],
        best: &mut f64,
    ) {
        if !idx.is_empty() {
            let pts: Vec<&[f64]> = idx.iter().map(|&i| points[i].as_slice()).collect();
            if let Some(d) = face_distance(x, &pts) {
                *best = best.min(d);
            }
        }
        if idx.len() == max_size {
            return;
        }
        for i in start..r {
            idx.push(i);
            rec(i + 1, r, max_size, idx, x, points, best);
            idx.pop();
        }
    }
    rec(0, r, max_size, &mut idx, x, points, &mut best);
    best
}

pub fn rows_of(a: &M) -> Vec<Vec<f64>> {
    a.row_iter().map(|r| r.to_vec()).collect()
}

/// `D(X, Y)` summed over rows with the enumeration oracle.
pub fn set_distance_enum(x: &M, y: &M) -> f64 {
    let pts = rows_of(y);
    x.row_iter()
        .map(|r| hull_distance_enum(r, &pts, pts.len()))
        .sum()
}

/// `𝓛(H₁, H₂)` by brute force.
pub fn archetype_loss(h1: &M, h2: &M) -> f64 {
    h1.row_iter()
        .map(|a| h2.row_iter().map(|b| sq(a, b)).fold(f64::INFINITY, f64::min))
        .sum()
}

/// Largest distance between two rows.
pub fn spread(h: &M) -> f64 {
    let mut best = 0.0f64;
    for a in h.row_iter() {
        for b in h.row_iter() {
            best = best.max(sq(a, b));
        }
    }
    best.sqrt()
}

/// Euclidean projection onto the simplex by trying every support: on a
/// support `S` the projection is `v_S − θ` with a common shift.
pub fn simplex_projection_enum(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut best = (f64::INFINITY, vec![0.0; n]);
    for mask in 1u32..(1 << n) {
        let s: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let theta = (s.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / s.len() as f64;
        let mut p = vec![0.0; n];
        let mut ok = true;
        for &i in &s {
            p[i] = v[i] - theta;
            if p[i] < -1e-15 {
                ok = false;
            }
        }
        if ok {
            let d = sq(&p, v);
            if d < best.0 {
                best = (d, p);
            }
        }
    }
    best.1
}

// ---------- pattern problem ----------

/// One row of `F`: squared distance between `Conv(X)` and the box
/// `[0, u]`, as the distance from the origin to the Minkowski difference
/// `Conv{x_r − v : v a box vertex}`.
pub fn f_row_enum(x: &M, upper: &[f64]) -> f64 {
    let n = x.cols();
    let free: Vec<usize> = (0..n).filter(|&j| upper[j] > 0.0).collect();
    let mut pts = Vec::new();
    for r in x.row_iter() {
        for mask in 0u32..(1 << free.len()) {
            let mut p = r.to_vec();
            for (b, &j) in free.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    p[j] -= upper[j];
                }
            }
            pts.push(p);
        }
    }
    hull_distance_enum(&vec![0.0; n], &pts, n + 1)
}

/// `F(Z)` for a binary pattern by [`f_row_enum`] on every row.
pub fn f_enum(z: &[bool], k: usize, x: &M, b: f64) -> f64 {
    let n = x.cols();
    (0..k)
        .map(|i| {
            let u: Vec<f64> = (0..n)
                .map(|j| if z[i * n + j] { b.sqrt() } else { 0.0 })
                .collect();
            f_row_enum(x, &u)
        })
        .sum()
}

/// Every binary pattern of length `len` with at most `ell` ones.
pub fn patterns(len: usize, ell: usize) -> Vec<Vec<bool>> {
    (0u32..(1 << len))
        .filter(|m| m.count_ones() as usize <= ell)
        .map(|m| (0..len).map(|v| m >> v & 1 == 1).collect())
        .collect()
}

/// `min_Z maxᵢ aᵢ + ⟨gᵢ, Z⟩` over patterns with at most `ell` ones.
pub fn milp_enum(intercepts: &[f64], slopes: &[Vec<f64>], ell: usize) -> f64 {
    patterns(slopes[0].len(), ell)
        .iter()
        .map(|z| {
            intercepts
                .iter()
                .zip(slopes)
                .map(|(a, g)| a + z.iter().zip(g).filter(|(o, _)| **o).map(|(_, s)| s).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

// ---------- clustering ----------

/// Purity and entropy from explicit per-cluster counting.
pub fn purity_entropy_by_hand(truth: &[usize], est: &[usize], k: usize) -> (f64, f64) {
    let m = truth.len() as f64;
    let mut purity = 0.0;
    let mut acc = 0.0;
    for r in 0..k {
        let members: Vec<usize> = (0..truth.len()).filter(|&p| est[p] == r).collect();
        if members.is_empty() {
            continue;
        }
        let mut counts = vec![0usize; k];
        for &p in &members {
            counts[truth[p]] += 1;
        }
        purity += *counts.iter().max().unwrap() as f64;
        for &c in counts.iter().filter(|&&c| c > 0) {
            let frac = c as f64 / members.len() as f64;
            acc += c as f64 * frac.ln() / 2f64.ln();
        }
    }
    let entropy = if k == 1 { 0.0 } else { -acc / (m * (k as f64).log2()) };
    (purity / m, entropy)
}
