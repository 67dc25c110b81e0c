//! Bisection probes that extract a new ε-subgradient from a direction that
//! failed the sufficient-descent test.
//!
//! Both probes bisect the step interval `(0, ε/‖v‖)` while querying one
//! subgradient per midpoint and stop as soon as the queried subgradient
//! certifies novelty, i.e. `⟨ξ′, v⟩ > -c ‖v‖²`. They differ only in the
//! merit function steering the bisection:
//!
//! * [`bisect_legacy`] compares `h(t) = f(x₀ + t v) - f(x₀) + c t ‖v‖²`,
//!   the natural choice. It can stall: when the bisection converges to a
//!   point where the generalized derivative of `h` straddles zero, the
//!   midpoint subgradients may forever miss the stopping test.
//! * [`bisect_improved`] compares `h_c̃` for a second parameter
//!   `c̃ ∈ (c_min, c)` strictly between the descent quality the direction
//!   actually achieved and the requested one, while keeping the original
//!   stopping test. The slack `(c - c̃) ‖v‖²` makes subgradient sequences
//!   near the bisection limit eventually pass the test, which yields
//!   termination for weakly lower semismooth objectives.

use thiserror::Error;

use crate::core::{dot, step_point, FunctionOracle};

/// Stopping caps. Exhaustion is a diagnosable outcome, not an exception:
/// `width_min_rel` is relative to the initial interval length, and the
/// default pair stops a little past the point where double-precision
/// midpoints stop resolving.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BisectionCaps {
    pub width_min_rel: f64,
    pub max_iter: u32,
}

impl Default for BisectionCaps {
    fn default() -> Self {
        Self {
            width_min_rel: 1e-14,
            max_iter: 60,
        }
    }
}

/// One bisection iteration, for trace emission: interval, midpoint and the
/// inner product `⟨ξ′, v⟩` of the queried subgradient with the direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BisectionRecord {
    pub j: u32,
    pub a: f64,
    pub b: f64,
    pub t: f64,
    pub inner: f64,
}

/// Callback receiving one record per iteration.
pub type BisectionLog<'a> = &'a mut dyn FnMut(&BisectionRecord);

#[derive(Clone, Debug, PartialEq)]
pub enum BisectionOutcome {
    /// A subgradient satisfying `⟨ξ′, v⟩ > -c ‖v‖²`, hence outside the
    /// convex hull of any bundle that produced `v`.
    Found {
        xi_new: Vec<f64>,
        t: f64,
        iterations: u32,
    },
    /// The interval collapsed (or the iteration cap was hit) without the
    /// stopping test firing.
    IntervalExhausted { iterations: u32, last_t: f64 },
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum BisectionError {
    #[error("direction must be nonzero")]
    ZeroDirection,
    #[error("non-finite input")]
    NonFinite,
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error(
        "direction already yields sufficient descent (c_min = {c_min} >= c = {c}); \
         nothing to probe"
    )]
    SufficientDescent { c_min: f64, c: f64 },
    #[error("c_tilde = {c_tilde} outside the admissible interval ({c_min}, {c})")]
    CTildeOutOfRange { c_tilde: f64, c_min: f64, c: f64 },
}

/// The largest descent parameter the direction `v` actually achieves:
/// `c_min = -(f(x₀ + (ε/‖v‖) v) - f(x₀)) / (ε ‖v‖)`.
///
/// `v` violates the sufficient-descent test for a parameter `c` exactly when
/// `c_min < c`.
pub fn c_min(
    oracle: &dyn FunctionOracle,
    x0: &[f64],
    eps: f64,
    v: &[f64],
) -> Result<f64, BisectionError> {
    let vnorm = dot(v, v).sqrt();
    if vnorm == 0.0 {
        return Err(BisectionError::ZeroDirection);
    }
    if !vnorm.is_finite() || !eps.is_finite() {
        return Err(BisectionError::NonFinite);
    }
    if eps <= 0.0 {
        return Err(BisectionError::NonPositiveRadius(eps));
    }
    let fx0 = oracle.eval(x0);
    let fstep = oracle.eval(&step_point(x0, eps / vnorm, v));
    Ok(-(fstep - fx0) / (eps * vnorm))
}

/// The merit function `h_c̃(t) = f(x₀ + t v) - f(x₀) + c̃ t ‖v‖²`.
pub fn h_tilde(oracle: &dyn FunctionOracle, x0: &[f64], v: &[f64], c_tilde: f64, t: f64) -> f64 {
    let fx0 = oracle.eval(x0);
    let ft = oracle.eval(&step_point(x0, t, v));
    ft - fx0 + c_tilde * t * dot(v, v)
}

/// Bisection probe steered by the raw merit function (`c̃ = c`).
///
/// The caller must have verified that `v` violates the sufficient-descent
/// test; a direction with `c_min >= c` is rejected. May legitimately return
/// [`BisectionOutcome::IntervalExhausted`].
pub fn bisect_legacy(
    oracle: &dyn FunctionOracle,
    x0: &[f64],
    eps: f64,
    c: f64,
    v: &[f64],
    caps: &BisectionCaps,
    log: Option<BisectionLog>,
) -> Result<BisectionOutcome, BisectionError> {
    bisect_core(oracle, x0, eps, c, c, v, caps, log, false)
}

/// Bisection probe steered by `h_c̃` with the original stopping test.
///
/// Requires `c̃ ∈ (c_min, c)` strictly; [`default_c_tilde`] gives the
/// midpoint choice. Exhaustion can only occur through floating-point
/// saturation of the merit comparisons and is reported, never masked.
#[allow(clippy::too_many_arguments)]
pub fn bisect_improved(
    oracle: &dyn FunctionOracle,
    x0: &[f64],
    eps: f64,
    c: f64,
    c_tilde: f64,
    v: &[f64],
    caps: &BisectionCaps,
    log: Option<BisectionLog>,
) -> Result<BisectionOutcome, BisectionError> {
    bisect_core(oracle, x0, eps, c, c_tilde, v, caps, log, true)
}

/// Midpoint rule for the steering parameter: `(c_min + c) / 2`, recomputed
/// from the actual `c_min` of the direction at hand. Any value strictly
/// inside `(c_min, c)` is admissible; the midpoint maximizes the margin on
/// both sides and is scale-free.
pub fn default_c_tilde(c_min: f64, c: f64) -> f64 {
    0.5 * (c_min + c)
}

#[allow(clippy::too_many_arguments)]
fn bisect_core(
    oracle: &dyn FunctionOracle,
    x0: &[f64],
    eps: f64,
    c: f64,
    c_tilde: f64,
    v: &[f64],
    caps: &BisectionCaps,
    mut log: Option<BisectionLog>,
    strict_c_tilde: bool,
) -> Result<BisectionOutcome, BisectionError> {
    let vnorm2 = dot(v, v);
    let vnorm = vnorm2.sqrt();
    if vnorm == 0.0 {
        return Err(BisectionError::ZeroDirection);
    }
    if !vnorm.is_finite() || !eps.is_finite() || !c.is_finite() || !c_tilde.is_finite() {
        return Err(BisectionError::NonFinite);
    }
    if eps <= 0.0 {
        return Err(BisectionError::NonPositiveRadius(eps));
    }

    // f(x0) and the far endpoint are evaluated once and reused for the
    // precondition, the initial merit value and every h comparison.
    let fx0 = oracle.eval(x0);
    let b1 = eps / vnorm;
    let f_at_b1 = oracle.eval(&step_point(x0, b1, v));
    let cmin = -(f_at_b1 - fx0) / (eps * vnorm);
    if cmin.is_nan() || cmin >= c {
        return Err(BisectionError::SufficientDescent { c_min: cmin, c });
    }
    if strict_c_tilde && !(c_tilde > cmin && c_tilde < c) {
        return Err(BisectionError::CTildeOutOfRange {
            c_tilde,
            c_min: cmin,
            c,
        });
    }

    let h = |ft: f64, t: f64| ft - fx0 + c_tilde * t * vnorm2;
    let width_min = caps.width_min_rel * b1;
    let stop_threshold = -c * vnorm2;

    let mut a = 0.0f64;
    let mut b = b1;
    let mut ha = 0.0f64; // h(0) = 0 by construction
    let mut hb = h(f_at_b1, b1);
    assert!(
        ha < hb,
        "merit endpoints out of order at start: h(a)={ha} h(b)={hb}"
    );

    let mut j: u32 = 1;
    loop {
        let t = 0.5 * (a + b);
        let xt = step_point(x0, t, v);
        let xi = oracle.subgrad(&xt);
        let inner = dot(&xi, v);
        if let Some(cb) = log.as_mut() {
            cb(&BisectionRecord { j, a, b, t, inner });
        }
        if inner > stop_threshold {
            return Ok(BisectionOutcome::Found {
                xi_new: xi,
                t,
                iterations: j,
            });
        }
        if j >= caps.max_iter {
            return Ok(BisectionOutcome::IntervalExhausted {
                iterations: j,
                last_t: t,
            });
        }
        let ht = h(oracle.eval(&xt), t);
        let width_before = b - a;
        let hb_before = hb;
        if hb > ht {
            a = t;
            ha = ht;
        } else {
            b = t;
            hb = ht;
        }
        // invariants of the interval update; a violation indicates an
        // inconsistent (non-deterministic) oracle
        assert!(
            ha < hb,
            "merit ordering h(a) < h(b) violated at iteration {j}: h(a)={ha} h(b)={hb}"
        );
        assert!(
            hb >= hb_before,
            "merit value at b decreased at iteration {j}: {hb_before} -> {hb}"
        );
        assert!(
            b - a <= 0.5 * width_before + 1e-15,
            "interval failed to halve at iteration {j}"
        );
        if b - a < width_min {
            return Ok(BisectionOutcome::IntervalExhausted {
                iterations: j,
                last_t: t,
            });
        }
        j += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::GradientBundle;
    use crate::minnorm::{min_norm_point, DEFAULT_TOL};
    use crate::testfns::{ConeFn, CounterexampleFn};

    struct Linear {
        g: Vec<f64>,
    }
    impl FunctionOracle for Linear {
        fn eval(&self, x: &[f64]) -> f64 {
            dot(&self.g, x)
        }
        fn subgrad(&self, _x: &[f64]) -> Vec<f64> {
            self.g.clone()
        }
        fn dim(&self) -> usize {
            self.g.len()
        }
    }

    struct Constant;
    impl FunctionOracle for Constant {
        fn eval(&self, _x: &[f64]) -> f64 {
            7.25
        }
        fn subgrad(&self, _x: &[f64]) -> Vec<f64> {
            vec![0.0]
        }
        fn dim(&self) -> usize {
            1
        }
    }

    #[test]
    fn c_min_on_the_sawtooth() {
        let f = CounterexampleFn;
        assert_eq!(c_min(&f, &[0.0], 1.0, &[1.0]).unwrap(), -0.5);
    }

    #[test]
    fn c_min_of_linear_function_along_its_negative_gradient() {
        let f = Linear { g: vec![3.0, -4.0] };
        let v = vec![-3.0, 4.0];
        let cm = c_min(&f, &[1.0, 2.0], 2.5, &v).unwrap();
        assert!((cm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn c_min_of_constant_function_is_zero() {
        assert_eq!(c_min(&Constant, &[0.3], 1.0, &[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn c_min_rejects_zero_direction() {
        assert_eq!(
            c_min(&Constant, &[0.0], 1.0, &[0.0]),
            Err(BisectionError::ZeroDirection)
        );
    }

    #[test]
    fn h_tilde_at_zero_is_zero() {
        let f = CounterexampleFn;
        assert_eq!(h_tilde(&f, &[0.0], &[1.0], 0.25, 0.0), 0.0);
        assert_eq!(h_tilde(&Constant, &[0.3], &[2.0], 0.9, 0.0), 0.0);
    }

    #[test]
    fn h_tilde_with_matching_parameter_recovers_the_sawtooth() {
        // for the sawtooth objective and c̃ = 1/2 the tilt cancels and
        // h reduces to the base shape phi; dyadic points are exact
        let f = CounterexampleFn;
        for t in [0.25, 0.5, 0.625, 0.75, 0.875] {
            assert_eq!(
                h_tilde(&f, &[0.0], &[1.0], 0.5, t),
                CounterexampleFn::phi(t),
                "t={t}"
            );
        }
    }

    #[test]
    fn h_tilde_quarter_parameter_at_one() {
        let f = CounterexampleFn;
        assert_eq!(h_tilde(&f, &[0.0], &[1.0], 0.25, 1.0), 0.75);
    }

    #[test]
    fn improved_golden_run_low_descent_parameter() {
        // sawtooth start, c = 1/2, c̃ = 1/4: two bisection updates, then the
        // stop fires at the third midpoint
        let f = CounterexampleFn;
        let mut recs = Vec::new();
        let mut log = |r: &BisectionRecord| recs.push(*r);
        let out = bisect_improved(
            &f,
            &[0.0],
            1.0,
            0.5,
            0.25,
            &[1.0],
            &BisectionCaps::default(),
            Some(&mut log),
        )
        .unwrap();
        assert_eq!(
            out,
            BisectionOutcome::Found {
                xi_new: vec![11.0 / 8.0],
                t: 5.0 / 8.0,
                iterations: 3,
            }
        );
        let ts: Vec<f64> = recs.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0.5, 0.75, 0.625]);
    }

    #[test]
    fn improved_golden_run_high_descent_parameter() {
        // c = 3/4, c̃ = 1/2: same merit landscape as the raw probe, but the
        // weaker stopping test fires at t = 7/8
        let f = CounterexampleFn;
        let out = bisect_improved(
            &f,
            &[0.0],
            1.0,
            0.75,
            0.5,
            &[1.0],
            &BisectionCaps::default(),
            None,
        )
        .unwrap();
        assert_eq!(
            out,
            BisectionOutcome::Found {
                xi_new: vec![-5.0 / 8.0],
                t: 7.0 / 8.0,
                iterations: 3,
            }
        );
    }

    #[test]
    fn legacy_probe_is_defeated_by_the_sawtooth() {
        // the raw probe tracks midpoints t_j = 1 - 2^-j exactly while the
        // merit increments stay representable (j <= 27 in doubles); at
        // j = 28 the rounded merit tie flips the branch and the midpoint
        // lands on an ascending segment, where the stop test happens to
        // fire. Either way the probe never exhausts the interval here.
        let f = CounterexampleFn;
        let mut recs = Vec::new();
        let mut log = |r: &BisectionRecord| recs.push(*r);
        let out = bisect_legacy(
            &f,
            &[0.0],
            1.0,
            0.5,
            &[1.0],
            &BisectionCaps::default(),
            Some(&mut log),
        )
        .unwrap();
        for r in recs.iter().take(27) {
            let expect = 1.0 - (2.0f64).powi(-(r.j as i32));
            assert_eq!(r.t, expect, "midpoint drifted at j={}", r.j);
            assert_eq!(
                r.inner,
                -(2.0f64).powi(-(r.j as i32)) - 0.5,
                "subgradient mismatch at j={}",
                r.j
            );
        }
        match out {
            BisectionOutcome::Found {
                xi_new,
                t,
                iterations,
            } => {
                assert_eq!(iterations, 28);
                assert_eq!(t, 1.0 - 3.0 * (2.0f64).powi(-28));
                assert_eq!(xi_new, vec![15.0 * (2.0f64).powi(-28) - 0.5]);
                // the accidental find still certifies novelty
                assert!(xi_new[0] > -0.5);
            }
            other => panic!("expected Found, got {other:?}"),
        }
    }

    #[test]
    fn smooth_descent_direction_is_rejected() {
        let f = Linear { g: vec![1.0] };
        let err = bisect_legacy(
            &f,
            &[0.0],
            1.0,
            0.3,
            &[-1.0],
            &BisectionCaps::default(),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, BisectionError::SufficientDescent { .. }));
    }

    #[test]
    fn c_tilde_out_of_range_is_rejected() {
        let f = CounterexampleFn;
        // c_min = -1/2 here, so 0.6 >= c and -0.7 <= c_min are both out
        for bad in [0.5, 0.6, -0.5, -0.7] {
            let err = bisect_improved(
                &f,
                &[0.0],
                1.0,
                0.5,
                bad,
                &[1.0],
                &BisectionCaps::default(),
                None,
            )
            .unwrap_err();
            assert!(
                matches!(err, BisectionError::CTildeOutOfRange { .. }),
                "c_tilde={bad}"
            );
        }
    }

    #[test]
    fn immediate_stop_when_first_midpoint_already_qualifies() {
        // cone on the axis: the subgradient at the first midpoint already
        // satisfies the stop test
        let f = ConeFn::new(2).unwrap();
        let x0 = vec![0.0, -0.4];
        let v = vec![0.0, 0.5];
        let out = bisect_legacy(&f, &x0, 1.0, 0.5, &v, &BisectionCaps::default(), None).unwrap();
        assert_eq!(
            out,
            BisectionOutcome::Found {
                xi_new: vec![0.0, 1.5],
                t: 1.0,
                iterations: 1,
            }
        );
    }

    #[test]
    fn found_subgradient_lies_outside_the_originating_hull() {
        // enrichment novelty: inserting the found subgradient strictly
        // shrinks the min-norm value of the hull
        let f = CounterexampleFn;
        let mut w = GradientBundle::new(f.subgrad(&[0.0]));
        let before = min_norm_point(&w, DEFAULT_TOL).unwrap().norm;
        let out = bisect_improved(
            &f,
            &[0.0],
            1.0,
            0.5,
            0.25,
            &[1.0],
            &BisectionCaps::default(),
            None,
        )
        .unwrap();
        let BisectionOutcome::Found { xi_new, .. } = out else {
            panic!("expected Found");
        };
        assert!(w.insert(xi_new).unwrap());
        let after = min_norm_point(&w, DEFAULT_TOL).unwrap().norm;
        assert!(after < before - DEFAULT_TOL);
    }

    #[test]
    fn stop_test_agrees_with_merit_derivative_form() {
        // the stop test ⟨ξ′,v⟩ > -c‖v‖² is equivalent to the shifted form
        // g = ⟨ξ′,v⟩ + c̃‖v‖² > (c̃-c)‖v‖²; on dyadic data both sides are
        // exact, so the comparisons must agree
        let vnorm2 = 1.0;
        let (c, ct) = (0.5, 0.25);
        for j in 1..=40 {
            let inner = -(2.0f64).powi(-j) - 0.5;
            let lhs = inner > -c * vnorm2;
            let rhs = inner + ct * vnorm2 > (ct - c) * vnorm2;
            assert_eq!(lhs, rhs, "j={j}");
        }
        for inner in [1.375, -0.625, 0.75, -0.5, -1.0] {
            let lhs = inner > -c * vnorm2;
            let rhs = inner + ct * vnorm2 > (ct - c) * vnorm2;
            assert_eq!(lhs, rhs, "inner={inner}");
        }
    }

    #[test]
    fn cone_probe_off_axis_regression() {
        // frozen run: cone in the plane, starting below the apex
        let f = ConeFn::new(2).unwrap();
        let x0 = vec![0.0, -0.4];
        // direction from the singleton bundle at x0 (axis point below zero)
        let g = f.subgrad(&x0);
        assert_eq!(g, vec![0.0, -0.5]);
        let v: Vec<f64> = g.iter().map(|t| -t).collect();
        let cm = c_min(&f, &x0, 1.0, &v).unwrap();
        assert!((cm - (-1.4)).abs() <= 1e-12, "c_min = {cm}");
        let out = bisect_improved(
            &f,
            &x0,
            1.0,
            0.5,
            default_c_tilde(cm, 0.5),
            &v,
            &BisectionCaps::default(),
            None,
        )
        .unwrap();
        let BisectionOutcome::Found { xi_new, t, .. } = out else {
            panic!("expected Found");
        };
        assert_eq!(t, 1.0);
        assert_eq!(xi_new, vec![0.0, 1.5]);
        assert!(dot(&xi_new, &v) > -0.5 * dot(&v, &v));
    }
}
