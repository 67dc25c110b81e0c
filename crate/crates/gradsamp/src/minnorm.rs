//! Minimum-norm point of the convex hull of a finite set of vectors.
//!
//! This is the quadratic subproblem behind every direction computation in
//! this crate: the steepest descent direction with respect to an approximate
//! ε-subdifferential `conv(W)` is the negated minimizer of `‖ξ‖²` over
//! `conv(W)`. The bundles are small and dense, so the solver is Wolfe's
//! min-norm-point algorithm: major cycles add the most violating vertex,
//! minor cycles project onto the affine hull of the active set and walk back
//! to the convex hull, dropping vertices until the affine minimizer is a
//! convex combination.

use thiserror::Error;

use crate::core::{dot, GradientBundle};

/// Default bound on the optimality residual.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_MAJOR_CYCLES: usize = 10_000;
/// Coefficients below this are treated as a boundary hit in minor cycles.
const COEFF_EPS: f64 = 1e-12;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MinNormError {
    #[error("bundle contains a non-finite coordinate")]
    NonFiniteInput,
    #[error("min-norm solver failed to converge within {cycles} major cycles")]
    DidNotConverge { cycles: usize },
}

/// Minimizer of `‖ξ‖²` over `conv(W)` together with its hull coefficients.
///
/// `lambdas` is indexed like the bundle, is componentwise nonnegative and
/// sums to one; `xi_star` is exactly the corresponding combination of bundle
/// elements. The tolerance bounds the optimality residual
/// `‖ξ*‖² − min_w ⟨w, ξ*⟩`, not the distance to the true minimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct MinNormSolution {
    pub xi_star: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub norm: f64,
}

/// Computes the min-norm point of `conv(W)`.
///
/// Deterministic for a fixed element order: ties in the vertex selection are
/// broken toward the lowest index. Exact duplicates are tolerated (the
/// bundle dedups upstream, but nothing here requires it).
pub fn min_norm_point(bundle: &GradientBundle, tol: f64) -> Result<MinNormSolution, MinNormError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let points = bundle.elements();
    if points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(MinNormError::NonFiniteInput);
    }

    // start from the shortest input vector, lowest index on ties
    let mut start = 0;
    let mut best = dot(&points[0], &points[0]);
    for (i, p) in points.iter().enumerate().skip(1) {
        let q = dot(p, p);
        if q < best {
            best = q;
            start = i;
        }
    }
    let mut active: Vec<usize> = vec![start];
    let mut lam: Vec<f64> = vec![1.0];
    let mut x = points[start].clone();

    for _ in 0..MAX_MAJOR_CYCLES {
        let xx = dot(&x, &x);
        // most violating vertex of the optimality criterion
        let mut j = 0;
        let mut inner = dot(&points[0], &x);
        for (i, p) in points.iter().enumerate().skip(1) {
            let v = dot(p, &x);
            if v < inner {
                inner = v;
                j = i;
            }
        }
        if inner >= xx - tol {
            return Ok(finish(points, &active, &lam, x));
        }
        if active.contains(&j) {
            // the criterion is violated by a vertex that is already active:
            // the affine solves have hit their numerical floor
            return Err(MinNormError::DidNotConverge {
                cycles: MAX_MAJOR_CYCLES,
            });
        }
        active.push(j);
        lam.push(0.0);

        // minor cycles: project onto aff(active), clip back to conv(active)
        loop {
            let mu = affine_min_norm(points, &active);
            if mu.iter().all(|&m| m > COEFF_EPS) {
                lam = mu;
                break;
            }
            let mut theta = 1.0;
            let mut leaving: Option<usize> = None;
            for i in 0..active.len() {
                if mu[i] <= COEFF_EPS {
                    let denom = lam[i] - mu[i];
                    if denom > 0.0 {
                        let th = lam[i] / denom;
                        if th < theta {
                            theta = th;
                            leaving = Some(i);
                        }
                    }
                }
            }
            if leaving.is_none() {
                // every small coefficient of mu is still nonnegative and the
                // walk toward mu crosses no boundary; mu is a valid hull point
                lam = mu;
                break;
            }
            for i in 0..active.len() {
                lam[i] = (1.0 - theta) * lam[i] + theta * mu[i];
            }
            if let Some(r) = leaving {
                lam[r] = 0.0;
            }
            let mut i = 0;
            while i < active.len() {
                if lam[i] <= 0.0 {
                    active.swap_remove(i);
                    lam.swap_remove(i);
                } else {
                    i += 1;
                }
            }
        }
        x = combine(points, &active, &lam);
    }
    Err(MinNormError::DidNotConverge {
        cycles: MAX_MAJOR_CYCLES,
    })
}

/// Steepest descent direction with respect to `conv(W)`: the negated
/// min-norm point. The zero vector signals ε-criticality of the bundle.
pub fn steepest_direction(bundle: &GradientBundle, tol: f64) -> Result<Vec<f64>, MinNormError> {
    let sol = min_norm_point(bundle, tol)?;
    Ok(sol.xi_star.iter().map(|v| -v).collect())
}

fn finish(points: &[Vec<f64>], active: &[usize], lam: &[f64], x: Vec<f64>) -> MinNormSolution {
    let mut lambdas = vec![0.0; points.len()];
    let total: f64 = lam.iter().sum();
    for (&i, &l) in active.iter().zip(lam) {
        // duplicates of the same point may both be active; accumulate
        lambdas[i] += l / total;
    }
    let norm = dot(&x, &x).sqrt();
    MinNormSolution {
        xi_star: x,
        lambdas,
        norm,
    }
}

fn combine(points: &[Vec<f64>], active: &[usize], lam: &[f64]) -> Vec<f64> {
    let n = points[0].len();
    let mut x = vec![0.0; n];
    for (&i, &l) in active.iter().zip(lam) {
        for (xk, pk) in x.iter_mut().zip(&points[i]) {
            *xk += l * pk;
        }
    }
    x
}

/// Minimizes `‖Σ μ_i p_i‖²` subject to `Σ μ_i = 1` over the affine hull of
/// the active points.
///
/// Solves the stationarity system `[G 1; 1ᵀ 0] [μ; ν] = [0; 1]` with `G` the
/// Gram matrix, by Gaussian elimination with full pivoting. The system is
/// always consistent; if the active points are affinely dependent the
/// trailing free variables are pinned to zero, which picks one valid
/// minimizer deterministically.
fn affine_min_norm(points: &[Vec<f64>], active: &[usize]) -> Vec<f64> {
    let k = active.len();
    let m = k + 1;
    let mut a = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = dot(&points[active[r]], &points[active[c]]);
        }
        a[r][k] = 1.0;
        a[k][r] = 1.0;
    }
    rhs[k] = 1.0;
    let sol = solve_full_pivot(a, rhs);
    sol[..k].to_vec()
}

fn solve_full_pivot(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    let mut col_of: Vec<usize> = (0..n).collect();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |s, &v| s.max(v.abs()))
        .max(1.0);
    let tiny = 1e-14 * scale;
    let mut rank = n;
    for k in 0..n {
        let mut pi = k;
        let mut pj = k;
        let mut pv = 0.0;
        for (i, row) in a.iter().enumerate().take(n).skip(k) {
            for (j, &v) in row.iter().enumerate().take(n).skip(k) {
                if v.abs() > pv {
                    pv = v.abs();
                    pi = i;
                    pj = j;
                }
            }
        }
        if pv <= tiny {
            rank = k;
            break;
        }
        a.swap(k, pi);
        rhs.swap(k, pi);
        if pj != k {
            for row in a.iter_mut() {
                row.swap(k, pj);
            }
            col_of.swap(k, pj);
        }
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                let (pivot_rows, rest) = a.split_at_mut(k + 1);
                let pivot = &pivot_rows[k];
                for (x, p) in rest[i - k - 1][k..].iter_mut().zip(&pivot[k..]) {
                    *x -= f * p;
                }
                rhs[i] -= f * rhs[k];
            }
        }
    }
    let mut xp = vec![0.0; n];
    for k in (0..rank).rev() {
        let mut s = rhs[k];
        for j in k + 1..n {
            s -= a[k][j] * xp[j];
        }
        xp[k] = s / a[k][k];
    }
    let mut x = vec![0.0; n];
    for (pos, &orig) in col_of.iter().enumerate() {
        x[orig] = xp[pos];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bundle(elems: &[&[f64]]) -> GradientBundle {
        let mut b = GradientBundle::new(elems[0].to_vec());
        for e in &elems[1..] {
            b.insert(e.to_vec()).unwrap();
        }
        b
    }

    fn check_solution(b: &GradientBundle, sol: &MinNormSolution, tol: f64) {
        // hull coefficients
        assert!(sol.lambdas.iter().all(|&l| l >= 0.0));
        let s: f64 = sol.lambdas.iter().sum();
        assert!((s - 1.0).abs() <= 1e-12, "sum lambda = {s}");
        // xi_star is the stated combination
        let n = b.dim();
        let mut comb = vec![0.0; n];
        for (l, w) in sol.lambdas.iter().zip(b.elements()) {
            for (c, v) in comb.iter_mut().zip(w) {
                *c += l * v;
            }
        }
        for (c, v) in comb.iter().zip(&sol.xi_star) {
            assert!((c - v).abs() <= 1e-9, "xi_star drifted from combination");
        }
        // optimality criterion
        let xx = dot(&sol.xi_star, &sol.xi_star);
        for w in b.elements() {
            assert!(dot(w, &sol.xi_star) >= xx - tol, "residual above tolerance");
        }
    }

    #[test]
    fn singleton_hull() {
        let b = bundle(&[&[3.0, -4.0]]);
        let sol = min_norm_point(&b, DEFAULT_TOL).unwrap();
        assert_eq!(sol.xi_star, vec![3.0, -4.0]);
        assert_eq!(sol.lambdas, vec![1.0]);
        assert_eq!(sol.norm, 5.0);
    }

    #[test]
    fn one_dimensional_singleton_negated() {
        let b = bundle(&[&[-1.0]]);
        assert_eq!(min_norm_point(&b, DEFAULT_TOL).unwrap().xi_star, vec![-1.0]);
        assert_eq!(steepest_direction(&b, DEFAULT_TOL).unwrap(), vec![1.0]);
    }

    #[test]
    fn two_axis_points_project_to_diagonal() {
        let b = bundle(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let sol = min_norm_point(&b, DEFAULT_TOL).unwrap();
        assert!((sol.xi_star[0] - 0.5).abs() <= 1e-12);
        assert!((sol.xi_star[1] - 0.5).abs() <= 1e-12);
        assert!((sol.lambdas[0] - 0.5).abs() <= 1e-12);
        assert!((sol.lambdas[1] - 0.5).abs() <= 1e-12);
        let v = steepest_direction(&b, DEFAULT_TOL).unwrap();
        assert!((v[0] + 0.5).abs() <= 1e-12 && (v[1] + 0.5).abs() <= 1e-12);
    }

    #[test]
    fn segment_straddling_zero() {
        let b = bundle(&[&[-1.0], &[11.0 / 8.0]]);
        let sol = min_norm_point(&b, DEFAULT_TOL).unwrap();
        assert!(sol.norm <= 1e-12, "norm = {}", sol.norm);
        check_solution(&b, &sol, DEFAULT_TOL);
    }

    #[test]
    fn zero_bundle_gives_zero_direction() {
        let b = bundle(&[&[0.0]]);
        assert_eq!(steepest_direction(&b, DEFAULT_TOL).unwrap(), vec![0.0]);
    }

    #[test]
    fn non_finite_input_rejected() {
        let b = bundle(&[&[f64::NAN]]);
        assert_eq!(
            min_norm_point(&b, DEFAULT_TOL),
            Err(MinNormError::NonFiniteInput)
        );
        let b = bundle(&[&[1.0, f64::INFINITY]]);
        assert!(min_norm_point(&b, DEFAULT_TOL).is_err());
    }

    #[test]
    fn duplicates_tolerated_by_solver() {
        // the solver itself must survive exact duplicates even though the
        // bundle dedups; build the points directly
        let mut b = GradientBundle::new(vec![2.0, 1.0]);
        b.insert(vec![2.0 + 0.0, 1.0]).unwrap(); // dedup eats this one
        b.insert(vec![-1.0, 1.0]).unwrap();
        let sol = min_norm_point(&b, DEFAULT_TOL).unwrap();
        check_solution(&b, &sol, DEFAULT_TOL);
    }

    fn arb_bundle() -> impl Strategy<Value = GradientBundle> {
        (1usize..=10, 1usize..=12).prop_flat_map(|(n, k)| {
            proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, n), 1..=k.max(1))
                .prop_map(|pts| {
                    let mut b = GradientBundle::new(pts[0].clone());
                    for p in &pts[1..] {
                        let _ = b.insert(p.clone());
                    }
                    b
                })
        })
    }

    proptest! {
        // descent inequality: every hull element has inner product with the
        // negated min-norm point at most -‖v‖², up to the solver tolerance
        #[test]
        fn descent_inequality_over_random_bundles(b in arb_bundle()) {
            let sol = min_norm_point(&b, DEFAULT_TOL).unwrap();
            check_solution(&b, &sol, DEFAULT_TOL);
            let v: Vec<f64> = sol.xi_star.iter().map(|t| -t).collect();
            let vv = dot(&v, &v);
            for w in b.elements() {
                prop_assert!(dot(w, &v) <= -vv + DEFAULT_TOL);
            }
        }

        // the minimizer itself is permutation invariant (its coefficients
        // need not be on degenerate faces)
        #[test]
        fn permutation_invariance(b in arb_bundle(), seed in 0u64..1000) {
            let sol = min_norm_point(&b, DEFAULT_TOL).unwrap();
            let mut elems: Vec<Vec<f64>> = b.elements().to_vec();
            // deterministic shuffle driven by the seed
            let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            for i in (1..elems.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (s >> 33) as usize % (i + 1);
                elems.swap(i, j);
            }
            let mut b2 = GradientBundle::new(elems[0].clone());
            for e in &elems[1..] {
                let _ = b2.insert(e.clone());
            }
            let sol2 = min_norm_point(&b2, DEFAULT_TOL).unwrap();
            for (a, c) in sol.xi_star.iter().zip(&sol2.xi_star) {
                prop_assert!((a - c).abs() <= 1e-10);
            }
        }
    }
}
