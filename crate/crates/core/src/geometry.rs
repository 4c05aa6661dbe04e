//! Convex-hull and archetype distances.
//!
//! `D(x, X)` is the squared distance from `x` to the convex hull of the rows
//! of `X`, computed by accelerated projected gradient over the simplex of
//! convex weights. The Frank–Wolfe gap `⟨∇f(α), α⟩ − minᵢ ∇f(α)ᵢ` bounds the
//! suboptimality of every iterate and is used as the stopping test.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SaaError};
use crate::linalg::sigma_max_sq;
use crate::matrix::{dot, sq_dist, DenseMatrix};
use crate::projection::project_simplex_vec;
use crate::Real;

pub const DEFAULT_HULL_TOL: f64 = 1e-10;
pub const DEFAULT_HULL_MAX_ITER: usize = 5_000;
/// Hull distances below this are treated as zero by fixtures and reports.
pub const HULL_ZERO: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct HullDistanceResult<T> {
    pub sq_distance: T,
    /// Convex weights `α` of the nearest hull point `αᵀX`.
    pub weights: Vec<T>,
    pub iterations: usize,
}

/// Row-wise distances of a point set to a hull.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct SetDistance<T> {
    /// `D(X, Y) = Σᵢ D(Xᵢ, Y)`.
    pub total: T,
    pub per_row: Vec<T>,
}

impl<T: Real> SetDistance<T> {
    /// `D(X, Y)^{1/2}`.
    pub fn sqrt(&self) -> T {
        self.total.sqrt()
    }

    /// `maxᵢ D(Xᵢ, Y)`.
    pub fn row_max(&self) -> T {
        self.per_row.iter().copied().fold(T::zero(), T::max)
    }

    /// `D̃(X, Y) = Σᵢ D(Xᵢ, Y)^{1/2}`.
    pub fn sum_of_roots(&self) -> T {
        self.per_row.iter().map(|d| d.sqrt()).sum()
    }
}

/// Precomputed hull `Conv(rows of X)` for repeated distance queries.
pub struct Hull<'a, T> {
    points: &'a DenseMatrix<T>,
    gram: DenseMatrix<T>,
    lipschitz: T,
}

impl<'a, T: Real> Hull<'a, T> {
    pub fn new(points: &'a DenseMatrix<T>) -> Result<Self> {
        if points.rows() == 0 {
            return Err(SaaError::invalid("convex hull of an empty point set"));
        }
        let gram = points.matmul_t(points);
        let lipschitz = T::lit(2.0) * sigma_max_sq(points);
        Ok(Self {
            points,
            gram,
            lipschitz,
        })
    }

    pub fn distance(&self, x: &[T], tol: T, max_iter: usize) -> Result<HullDistanceResult<T>> {
        let r = self.points.rows();
        if x.len() != self.points.cols() {
            return Err(SaaError::shape(
                "hull_distance",
                format!("point of length {}", self.points.cols()),
                format!("length {}", x.len()),
            ));
        }
        let c: Vec<T> = self.points.row_iter().map(|p| dot(p, x)).collect();
        let xx = dot(x, x);

        // start from the nearest vertex
        let nearest = (0..r)
            .map(|i| (i, sq_dist(self.points.row(i), x)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .unwrap();
        let mut alpha = vec![T::zero(); r];
        alpha[nearest] = T::one();
        let mut iterations = 0;

        if r > 1 && self.lipschitz > T::zero() {
            let two = T::lit(2.0);
            let step = T::one() / self.lipschitz;
            let objective = |a: &[T], ga: &[T]| dot(a, ga) - two * dot(&c, a) + xx;
            let gram_times = |a: &[T], out: &mut [T]| {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = dot(self.gram.row(i), a);
                }
            };

            let mut ga = vec![T::zero(); r];
            gram_times(&alpha, &mut ga);
            let mut f = objective(&alpha, &ga);
            let mut y = alpha.clone();
            let mut gy = ga.clone();
            let mut t = T::one();
            let mut next = vec![T::zero(); r];
            let mut gnext = vec![T::zero(); r];

            for it in 1..=max_iter {
                iterations = it;
                // Frank–Wolfe gap at the current iterate
                let grad_min = ga
                    .iter()
                    .zip(&c)
                    .map(|(&g, &ci)| two * (g - ci))
                    .fold(T::infinity(), T::min);
                let grad_dot = two * (dot(&alpha, &ga) - dot(&alpha, &c));
                let gap = grad_dot - grad_min;
                if gap <= tol * (T::one() + f.max(T::zero())) {
                    break;
                }

                for i in 0..r {
                    next[i] = y[i] - step * two * (gy[i] - c[i]);
                }
                project_simplex_vec(&mut next);
                gram_times(&next, &mut gnext);
                let f_next = objective(&next, &gnext);
                if f_next > f {
                    // momentum restart
                    t = T::one();
                    y.copy_from_slice(&alpha);
                    gy.copy_from_slice(&ga);
                    continue;
                }
                let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / two;
                let beta = (t - T::one()) / t_next;
                for i in 0..r {
                    y[i] = next[i] + beta * (next[i] - alpha[i]);
                    gy[i] = gnext[i] + beta * (gnext[i] - ga[i]);
                }
                alpha.copy_from_slice(&next);
                ga.copy_from_slice(&gnext);
                f = f_next;
                t = t_next;
            }
        }

        let mut v = vec![T::zero(); x.len()];
        for (i, &a) in alpha.iter().enumerate() {
            if a != T::zero() {
                for (vj, &pj) in v.iter_mut().zip(self.points.row(i)) {
                    *vj = *vj + a * pj;
                }
            }
        }
        Ok(HullDistanceResult {
            sq_distance: sq_dist(x, &v),
            weights: alpha,
            iterations,
        })
    }
}

/// `D(x, X)`.
pub fn hull_distance<T: Real>(
    x: &[T],
    hull: &DenseMatrix<T>,
    tol: T,
    max_iter: usize,
) -> Result<HullDistanceResult<T>> {
    Hull::new(hull)?.distance(x, tol, max_iter)
}

/// `D(x, X)` with default tolerances.
pub fn hull_distance_default<T: Real>(x: &[T], hull: &DenseMatrix<T>) -> Result<T> {
    Ok(hull_distance(x, hull, T::lit(DEFAULT_HULL_TOL), DEFAULT_HULL_MAX_ITER)?.sq_distance)
}

/// Distances of every row of `x` to `Conv(y)`, summed in row order.
pub fn set_hull_distance<T: Real>(
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    tol: T,
    max_iter: usize,
) -> Result<SetDistance<T>> {
    if x.cols() != y.cols() {
        return Err(SaaError::shape(
            "set_hull_distance",
            format!("{} columns", y.cols()),
            format!("{} columns", x.cols()),
        ));
    }
    let hull = Hull::new(y)?;
    let per_row = x
        .row_iter()
        .map(|r| hull.distance(r, tol, max_iter).map(|d| d.sq_distance))
        .collect::<Result<Vec<T>>>()?;
    let total = per_row.iter().copied().sum();
    Ok(SetDistance { total, per_row })
}

/// `D(X, Y)` with default tolerances.
pub fn set_distance<T: Real>(x: &DenseMatrix<T>, y: &DenseMatrix<T>) -> Result<SetDistance<T>> {
    set_hull_distance(x, y, T::lit(DEFAULT_HULL_TOL), DEFAULT_HULL_MAX_ITER)
}

/// `D̃(X, Y) = Σᵢ D(Xᵢ, Y)^{1/2}`.
pub fn set_hull_distance_l1<T: Real>(
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    tol: T,
    max_iter: usize,
) -> Result<T> {
    Ok(set_hull_distance(x, y, tol, max_iter)?.sum_of_roots())
}

/// Value of `𝓛(H₁, H₂) = Σᵢ minⱼ ‖H¹ᵢ − H²ⱼ‖²` and the minimizing `j` per row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ArchetypeDistance<T> {
    pub value: T,
    pub assignment: Vec<usize>,
    /// `minⱼ ‖H¹ᵢ − H²ⱼ‖₂` per row (unsquared).
    pub row_distances: Vec<T>,
}

impl<T: Real> ArchetypeDistance<T> {
    /// `𝓛̃(H₁, H₂) = Σᵢ minⱼ ‖H¹ᵢ − H²ⱼ‖₂`.
    pub fn sum_of_roots(&self) -> T {
        self.row_distances.iter().copied().sum()
    }
}

/// Exact `𝓛(H₁, H₂)` by enumerating all row pairs; ties pick the lower `j`.
pub fn archetype_distance<T: Real>(h1: &DenseMatrix<T>, h2: &DenseMatrix<T>) -> Result<ArchetypeDistance<T>> {
    if h1.cols() != h2.cols() {
        return Err(SaaError::shape(
            "archetype_distance",
            format!("{} columns", h1.cols()),
            format!("{} columns", h2.cols()),
        ));
    }
    if h2.rows() == 0 {
        return Err(SaaError::invalid("archetype_distance to an empty set"));
    }
    let mut value = T::zero();
    let mut assignment = Vec::with_capacity(h1.rows());
    let mut row_distances = Vec::with_capacity(h1.rows());
    for r in h1.row_iter() {
        let (j, d) = h2
            .row_iter()
            .map(|s| sq_dist(r, s))
            .enumerate()
            .fold((0, T::infinity()), |best, (j, d)| if d < best.1 { (j, d) } else { best });
        value = value + d;
        assignment.push(j);
        row_distances.push(d.sqrt());
    }
    Ok(ArchetypeDistance {
        value,
        assignment,
        row_distances,
    })
}

/// `𝓛̃(H₁, H₂)`.
pub fn archetype_distance_l1<T: Real>(h1: &DenseMatrix<T>, h2: &DenseMatrix<T>) -> Result<T> {
    Ok(archetype_distance(h1, h2)?.sum_of_roots())
}

/// `b(H₀) = max_{i,j} ‖H⁰ᵢ − H⁰ⱼ‖₂`.
pub fn archetype_spread<T: Real>(h0: &DenseMatrix<T>) -> T {
    let mut best = T::zero();
    for i in 0..h0.rows() {
        for j in (i + 1)..h0.rows() {
            best = best.max(sq_dist(h0.row(i), h0.row(j)));
        }
    }
    best.sqrt()
}
