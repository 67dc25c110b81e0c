//! Deterministic enrichment loop: grow the gradient bundle at a fixed point
//! until the min-norm direction is either negligible (ε-criticality) or
//! certifies sufficient descent.

use thiserror::Error;

use crate::bisection::{
    bisect_improved, default_c_tilde, BisectionCaps, BisectionError, BisectionOutcome,
};
use crate::core::{
    norm, step_point, CountingOracle, DescentParams, DimensionMismatch, DirectionResult,
    FunctionOracle, GradientBundle, InvalidParams,
};
use crate::minnorm::{min_norm_point, MinNormError, DEFAULT_TOL};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum DirectionError {
    #[error(transparent)]
    InvalidParams(#[from] InvalidParams),
    #[error(transparent)]
    MinNorm(#[from] MinNormError),
    #[error(transparent)]
    Bisection(#[from] BisectionError),
    #[error(transparent)]
    Dimension(#[from] DimensionMismatch),
    #[error(
        "bisection exhausted its interval after {iterations} iterations at t = {last_t} \
         (bundle size {bundle_size}, ‖v‖ = {v_norm}); the objective may not be weakly \
         lower semismooth"
    )]
    BisectionStalled {
        iterations: u32,
        last_t: f64,
        bundle_size: usize,
        v_norm: f64,
    },
    #[error("bundle exceeded its cap of {cap} elements; enrichment failed to converge")]
    BundleOverflow { cap: usize },
}

/// Whether `v` satisfies `f(x₀ + (ε/‖v‖) v) ≤ f(x₀) - c ε ‖v‖`.
pub fn sufficient_descent(
    oracle: &dyn FunctionOracle,
    x0: &[f64],
    eps: f64,
    c: f64,
    v: &[f64],
) -> Result<bool, DirectionError> {
    let vnorm = norm(v);
    if vnorm == 0.0 {
        return Err(BisectionError::ZeroDirection.into());
    }
    let fx0 = oracle.eval(x0);
    let fstep = oracle.eval(&step_point(x0, eps / vnorm, v));
    Ok(fstep <= fx0 - c * eps * vnorm)
}

/// Per-call bookkeeping of the enrichment loop.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DirectionStats {
    pub oracle_evals: u64,
    pub oracle_subgrads: u64,
    pub bisection_iters: u64,
    pub enrichments: u32,
    pub bundle_size: usize,
    /// f(x₀), evaluated once at entry (callers record it in traces).
    pub fx0: f64,
}

/// One bundle-enrichment step, for trace emission.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnrichmentEvent {
    pub bundle_size: usize,
    pub min_norm: f64,
    pub bisection_iters: u32,
}

pub type EnrichmentLog<'a> = &'a mut dyn FnMut(&EnrichmentEvent);

/// Computes an ε-steepest descent direction at `x0` by deterministic bundle
/// enrichment.
///
/// Starts from the single oracle subgradient at `x0` (whatever the oracle
/// designates there) and loops: take the negated min-norm point of the hull;
/// declare ε-criticality if its norm is ≤ δ; accept it if it passes the
/// sufficient-descent test; otherwise run the improved bisection probe with
/// the midpoint `c̃` rule and insert the new subgradient. The loop is finite
/// for weakly lower semismooth objectives; the bundle cap is a safety valve
/// whose overflow is reported as an error rather than silently accepting a
/// poor direction.
pub fn descent_direction(
    oracle: &dyn FunctionOracle,
    x0: &[f64],
    params: &DescentParams,
    mut on_enrich: Option<EnrichmentLog>,
) -> Result<(DirectionResult, DirectionStats), DirectionError> {
    params.validate()?;
    let counting = CountingOracle::new(oracle);
    let cap = params.bundle_cap(x0.len());
    let caps = BisectionCaps::default();

    let fx0 = counting.eval(x0);
    let mut bundle = GradientBundle::new(counting.subgrad(x0));
    let mut bisection_total: u64 = 0;
    let mut enrichments: u32 = 0;

    loop {
        let sol = min_norm_point(&bundle, DEFAULT_TOL)?;
        let v: Vec<f64> = sol.xi_star.iter().map(|t| -t).collect();
        let v_norm = sol.norm;
        if v_norm <= params.delta {
            let stats = DirectionStats {
                oracle_evals: counting.evals(),
                oracle_subgrads: counting.subgrads(),
                bisection_iters: bisection_total,
                enrichments,
                bundle_size: bundle.len(),
                fx0,
            };
            return Ok((DirectionResult::EpsCritical { v_norm }, stats));
        }

        let fstep = counting.eval(&step_point(x0, params.eps / v_norm, &v));
        let certificate = fstep - fx0;
        if certificate <= -params.c * params.eps * v_norm {
            let stats = DirectionStats {
                oracle_evals: counting.evals(),
                oracle_subgrads: counting.subgrads(),
                bisection_iters: bisection_total,
                enrichments,
                bundle_size: bundle.len(),
                fx0,
            };
            return Ok((
                DirectionResult::Descent {
                    v,
                    bundle,
                    certificate,
                },
                stats,
            ));
        }

        let cmin = -certificate / (params.eps * v_norm);
        let c_tilde = default_c_tilde(cmin, params.c);
        let outcome = bisect_improved(
            &counting, x0, params.eps, params.c, c_tilde, &v, &caps, None,
        )?;
        match outcome {
            BisectionOutcome::Found {
                xi_new, iterations, ..
            } => {
                bisection_total += u64::from(iterations);
                enrichments += 1;
                bundle.insert(xi_new)?;
                if let Some(cb) = on_enrich.as_mut() {
                    cb(&EnrichmentEvent {
                        bundle_size: bundle.len(),
                        min_norm: v_norm,
                        bisection_iters: iterations,
                    });
                }
                if bundle.len() > cap {
                    return Err(DirectionError::BundleOverflow { cap });
                }
            }
            BisectionOutcome::IntervalExhausted { iterations, last_t } => {
                return Err(DirectionError::BisectionStalled {
                    iterations,
                    last_t,
                    bundle_size: bundle.len(),
                    v_norm,
                });
            }
        }
    }
}
