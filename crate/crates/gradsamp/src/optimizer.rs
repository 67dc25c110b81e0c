//! Outer descent loops.
//!
//! [`minimize_deterministic`] pairs the enrichment loop with a halving
//! schedule for the radius: every direction it accepts already certifies its
//! decrease at the full step `ε/‖v‖ · v`, so there is no line search at all.
//! [`minimize_random_gs`] is a deliberately plain random-sampling baseline
//! for comparison: approximate the ε-subdifferential by gradients at
//! uniformly sampled ball points, take the negated min-norm point, and
//! backtrack. It omits the differentiability check of the classical method
//! (the bundled test functions are differentiable almost everywhere, so
//! samples hit the nonsmooth set with probability zero).

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::core::{
    norm, step_point, CountingOracle, DescentParams, DescentTrace, DirectionResult, FunctionOracle,
    GradientBundle, InvalidParams, TraceRow,
};
use crate::direction::{descent_direction, DirectionError};
use crate::minnorm::{steepest_direction, MinNormError, DEFAULT_TOL};

/// Backtracking factor of the baseline line search.
const BACKTRACK_BETA: f64 = 0.5;
/// Cap on backtracking steps; a failed search shrinks ε instead.
const BACKTRACK_CAP: u32 = 30;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum OptimizerError {
    #[error(transparent)]
    InvalidParams(#[from] InvalidParams),
    #[error(transparent)]
    Direction(#[from] DirectionError),
    #[error(transparent)]
    MinNorm(#[from] MinNormError),
}

/// Parameters of the random-sampling baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct GSParams {
    /// Gradients sampled per iteration; `None` means `2 n`.
    pub m: Option<usize>,
    pub eps: f64,
    pub c: f64,
    pub delta: f64,
    pub eps_min: f64,
    pub shrink: f64,
    pub max_outer: usize,
    /// Seed of the ChaCha8 stream driving the sampling.
    pub seed: u64,
}

impl Default for GSParams {
    fn default() -> Self {
        Self {
            m: None,
            eps: 1.0,
            c: 0.5,
            delta: 1e-6,
            eps_min: 1e-6,
            shrink: 0.5,
            max_outer: 1000,
            seed: 0,
        }
    }
}

impl GSParams {
    pub fn validate(&self) -> Result<(), InvalidParams> {
        if self.m == Some(0) {
            return Err(InvalidParams("sample count m must be >= 1".to_string()));
        }
        let as_descent = DescentParams {
            eps: self.eps,
            c: self.c,
            delta: self.delta,
            eps_min: self.eps_min,
            delta_min: 1.0, // unused by the baseline
            shrink: self.shrink,
            max_outer: self.max_outer,
            max_bundle: None,
        };
        as_descent.validate()
    }

    pub fn sample_count(&self, n: usize) -> usize {
        self.m.unwrap_or(2 * n)
    }

    /// RNG stream for a given trial index, independent per trial.
    pub fn rng_for_trial(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }
}

/// Uniform f64 in [0, 1) from the top 53 bits of a u64.
fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal pair via the Box-Muller transform. The logarithm argument
/// is in (0, 1], never zero.
fn normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = 1.0 - uniform01(rng);
    let u2 = uniform01(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    (r * th.cos(), r * th.sin())
}

/// Draws `m` points independently and uniformly from the closed Euclidean
/// ball of radius `eps` around `center`.
///
/// Each point is a normalized Gaussian direction scaled by `eps · u^(1/n)`,
/// which is the exact radial law of the uniform ball distribution. The
/// generator is an explicitly seeded ChaCha8 stream, so draws are
/// reproducible for a fixed seed.
pub fn sample_ball(rng: &mut ChaCha8Rng, center: &[f64], eps: f64, m: usize) -> Vec<Vec<f64>> {
    assert!(eps > 0.0, "radius must be positive");
    assert!(m >= 1, "need at least one sample");
    let n = center.len();
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let mut g = Vec::with_capacity(n);
        while g.len() < n {
            let (z0, z1) = normal_pair(rng);
            g.push(z0);
            if g.len() < n {
                g.push(z1);
            }
        }
        let gn = norm(&g);
        let radius = eps * uniform01(rng).powf(1.0 / n as f64);
        let scale = if gn == 0.0 { 0.0 } else { radius / gn };
        out.push(
            center
                .iter()
                .zip(&g)
                .map(|(ci, gi)| ci + scale * gi)
                .collect(),
        );
    }
    out
}

/// Sampling approximation of the ε-steepest descent direction: the negated
/// min-norm point of the hull of the subgradient at `x0` and the
/// subgradients at `m` sampled ball points.
pub fn gs_direction(
    oracle: &dyn FunctionOracle,
    x0: &[f64],
    params: &GSParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, OptimizerError> {
    params.validate()?;
    let m = params.sample_count(x0.len());
    let mut bundle = GradientBundle::new(oracle.subgrad(x0));
    for y in sample_ball(rng, x0, params.eps, m) {
        // bitwise duplicates (e.g. identical gradients of a smooth region)
        // collapse; the hull is unchanged either way
        let _ = bundle.insert(oracle.subgrad(&y));
    }
    Ok(steepest_direction(&bundle, DEFAULT_TOL)?)
}

/// Deterministic descent: enrichment directions with full certified steps,
/// halving ε (and δ) whenever the current point is ε-critical, until
/// ε < eps_min.
///
/// Contains no randomness, so two runs from the same input produce bitwise
/// identical traces.
pub fn minimize_deterministic(
    oracle: &dyn FunctionOracle,
    x_init: &[f64],
    params: &DescentParams,
) -> Result<DescentTrace, OptimizerError> {
    params.validate()?;
    let counting = CountingOracle::new(oracle);
    let mut x = x_init.to_vec();
    let mut eps = params.eps;
    let mut delta = params.delta;
    let mut rows = Vec::new();
    let mut complete = true;

    let mut iter = 0;
    while eps >= params.eps_min {
        if iter >= params.max_outer {
            complete = false;
            break;
        }
        let stage = DescentParams {
            eps,
            delta,
            ..params.clone()
        };
        let (result, stats) = descent_direction(&counting, &x, &stage, None)?;
        let (v_norm, step_taken) = match &result {
            DirectionResult::EpsCritical { v_norm } => (*v_norm, false),
            DirectionResult::Descent { v, .. } => (norm(v), true),
        };
        rows.push(TraceRow {
            iter,
            x: x.clone(),
            fx: stats.fx0,
            eps,
            v_norm,
            oracle_evals: counting.evals(),
            oracle_subgrads: counting.subgrads(),
            bundle_size: stats.bundle_size,
            bisection_iters: stats.bisection_iters,
            step_taken,
        });
        match result {
            DirectionResult::EpsCritical { .. } => {
                eps *= params.shrink;
                delta = (delta * params.shrink).max(params.delta_min);
            }
            DirectionResult::Descent { v, .. } => {
                x = step_point(&x, eps / v_norm, &v);
            }
        }
        iter += 1;
    }

    let final_f = counting.eval(&x);
    Ok(DescentTrace {
        rows,
        final_x: x,
        final_f,
        complete,
    })
}

/// Random-sampling baseline with Armijo backtracking.
///
/// Per iteration: take [`gs_direction`]; declare ε-criticality and shrink ε
/// if its norm is ≤ δ; otherwise search `t ∈ {ε/‖v‖, β ε/‖v‖, …}` until
/// `f(x + t v) ≤ f(x) - c t ‖v‖²` and step (a failed search also shrinks ε).
/// Bitwise reproducible for a fixed seed.
pub fn minimize_random_gs(
    oracle: &dyn FunctionOracle,
    x_init: &[f64],
    params: &GSParams,
) -> Result<DescentTrace, OptimizerError> {
    params.validate()?;
    let counting = CountingOracle::new(oracle);
    let mut rng = params.rng_for_trial(0);
    let mut x = x_init.to_vec();
    let mut eps = params.eps;
    let mut rows = Vec::new();
    let mut complete = true;

    let mut iter = 0;
    while eps >= params.eps_min {
        if iter >= params.max_outer {
            complete = false;
            break;
        }
        let stage = GSParams {
            eps,
            ..params.clone()
        };
        let v = gs_direction(&counting, &x, &stage, &mut rng)?;
        let v_norm = norm(&v);
        let fx = counting.eval(&x);
        let m = params.sample_count(x.len());

        let mut step_taken = false;
        let mut next_x = None;
        if v_norm > params.delta {
            let mut t = eps / v_norm;
            for _ in 0..BACKTRACK_CAP {
                let cand = step_point(&x, t, &v);
                if counting.eval(&cand) <= fx - params.c * t * v_norm * v_norm {
                    next_x = Some(cand);
                    step_taken = true;
                    break;
                }
                t *= BACKTRACK_BETA;
            }
        }
        rows.push(TraceRow {
            iter,
            x: x.clone(),
            fx,
            eps,
            v_norm,
            oracle_evals: counting.evals(),
            oracle_subgrads: counting.subgrads(),
            bundle_size: m + 1,
            bisection_iters: 0,
            step_taken,
        });
        match next_x {
            Some(nx) => x = nx,
            None => eps *= params.shrink,
        }
        iter += 1;
    }

    let final_f = counting.eval(&x);
    Ok(DescentTrace {
        rows,
        final_x: x,
        final_f,
        complete,
    })
}
