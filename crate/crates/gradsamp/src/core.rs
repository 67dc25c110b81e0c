//! Shared domain types: oracles, gradient bundles, parameters and traces.

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

/// Black-box view of a locally Lipschitz objective.
///
/// `eval` returns `f(x)`; `subgrad` returns exactly one element of the Clarke
/// subdifferential at `x`. Which element is returned at a kink is up to the
/// implementation, but it must be deterministic: repeated calls at the same
/// `x` return the same vector. Nothing here ever materializes the full
/// subdifferential.
pub trait FunctionOracle: Send + Sync {
    fn eval(&self, x: &[f64]) -> f64;
    fn subgrad(&self, x: &[f64]) -> Vec<f64>;
    fn dim(&self) -> usize;
}

impl<T: FunctionOracle + ?Sized> FunctionOracle for &T {
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn subgrad(&self, x: &[f64]) -> Vec<f64> {
        (**self).subgrad(x)
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
}

/// Wraps an oracle and counts calls. Oracle-call totals are a reported
/// metric, so every algorithm in this crate routes its queries through one
/// of these.
pub struct CountingOracle<'a> {
    inner: &'a dyn FunctionOracle,
    evals: AtomicU64,
    subgrads: AtomicU64,
}

impl<'a> CountingOracle<'a> {
    pub fn new(inner: &'a dyn FunctionOracle) -> Self {
        Self {
            inner,
            evals: AtomicU64::new(0),
            subgrads: AtomicU64::new(0),
        }
    }

    pub fn evals(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn subgrads(&self) -> u64 {
        self.subgrads.load(Ordering::Relaxed)
    }
}

impl FunctionOracle for CountingOracle<'_> {
    fn eval(&self, x: &[f64]) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(x)
    }
    fn subgrad(&self, x: &[f64]) -> Vec<f64> {
        self.subgrads.fetch_add(1, Ordering::Relaxed);
        self.inner.subgrad(x)
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
}

/// Inserted vector has the wrong dimension.
#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("dimension mismatch: expected {expected}, got {got}")]
pub struct DimensionMismatch {
    pub expected: usize,
    pub got: usize,
}

/// A finite set `W` of subgradients approximating the ε-subdifferential.
///
/// Elements are deduplicated on insertion by exact bitwise equality. The
/// theory guarantees that every subgradient produced by the bisection probe
/// lies strictly outside `conv(W)`, so a tolerance-based dedup could only
/// discard informative near-duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientBundle {
    dim: usize,
    elements: Vec<Vec<f64>>,
}

impl GradientBundle {
    /// A bundle is never empty; it starts from one subgradient.
    pub fn new(first: Vec<f64>) -> Self {
        assert!(
            !first.is_empty(),
            "bundle elements must have dimension >= 1"
        );
        Self {
            dim: first.len(),
            elements: vec![first],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn elements(&self) -> &[Vec<f64>] {
        &self.elements
    }

    /// True if `xi` is already present, comparing by bit pattern.
    pub fn contains_bitwise(&self, xi: &[f64]) -> bool {
        self.elements.iter().any(|w| bitwise_eq(w, xi))
    }

    /// Inserts `xi` unless it is a bitwise duplicate. Returns whether the
    /// bundle grew.
    pub fn insert(&mut self, xi: Vec<f64>) -> Result<bool, DimensionMismatch> {
        if xi.len() != self.dim {
            return Err(DimensionMismatch {
                expected: self.dim,
                got: xi.len(),
            });
        }
        if self.contains_bitwise(&xi) {
            return Ok(false);
        }
        self.elements.push(xi);
        Ok(true)
    }
}

fn bitwise_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Parameters are not well formed.
#[derive(Clone, Debug, Error, PartialEq)]
#[error("invalid parameters: {0}")]
pub struct InvalidParams(pub String);

/// Parameters for the deterministic descent machinery.
#[derive(Clone, Debug, PartialEq)]
pub struct DescentParams {
    /// Sampling radius ε > 0.
    pub eps: f64,
    /// Sufficient-descent parameter c ∈ (0, 1).
    pub c: f64,
    /// Criticality tolerance δ > 0: a direction with ‖v‖ ≤ δ is treated as
    /// zero.
    pub delta: f64,
    /// Outer loop stops once ε < eps_min.
    pub eps_min: f64,
    /// δ is never shrunk below this.
    pub delta_min: f64,
    /// Reduction factor in (0, 1) applied to ε (and δ) on criticality.
    pub shrink: f64,
    /// Cap on outer descent iterations.
    pub max_outer: usize,
    /// Cap on bundle size; `None` means `2 (n + 1)`. The enrichment loop is
    /// finite in theory, so overflowing the cap signals an oracle or
    /// implementation bug and is reported as an error.
    pub max_bundle: Option<usize>,
}

impl Default for DescentParams {
    fn default() -> Self {
        Self {
            eps: 1.0,
            c: 0.5,
            delta: 1e-6,
            eps_min: 1e-6,
            delta_min: 1e-12,
            shrink: 0.5,
            max_outer: 1000,
            max_bundle: None,
        }
    }
}

impl DescentParams {
    /// Default parameters with the criticality tolerance scaled to the
    /// objective value at the start point: δ = 1e-6 · max(1, |f(x₀)|).
    pub fn with_scale(f_x0: f64) -> Self {
        Self {
            delta: 1e-6 * f_x0.abs().max(1.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), InvalidParams> {
        let ok = |b: bool, msg: &str| {
            if b {
                Ok(())
            } else {
                Err(InvalidParams(msg.to_string()))
            }
        };
        ok(self.eps.is_finite() && self.eps > 0.0, "eps must be > 0")?;
        ok(self.c > 0.0 && self.c < 1.0, "c must be in (0, 1)")?;
        ok(self.delta > 0.0, "delta must be > 0")?;
        ok(self.eps_min > 0.0, "eps_min must be > 0")?;
        ok(self.delta_min > 0.0, "delta_min must be > 0")?;
        ok(
            self.shrink > 0.0 && self.shrink < 1.0,
            "shrink must be in (0, 1)",
        )?;
        ok(self.max_bundle != Some(0), "max_bundle must be >= 1")?;
        Ok(())
    }

    /// Effective bundle cap for dimension `n`.
    pub fn bundle_cap(&self, n: usize) -> usize {
        self.max_bundle.unwrap_or(2 * (n + 1))
    }
}

/// Outcome of the direction-finding loop at a fixed point and radius.
#[derive(Clone, Debug, PartialEq)]
pub enum DirectionResult {
    /// The min-norm point of `conv(W)` has norm ≤ δ: the point is ε-critical
    /// up to tolerance.
    EpsCritical { v_norm: f64 },
    /// A direction with a certified decrease: `certificate` is the evaluated
    /// difference `f(x₀ + (ε/‖v‖) v) − f(x₀)` and satisfies
    /// `certificate ≤ −c ε ‖v‖`.
    Descent {
        v: Vec<f64>,
        bundle: GradientBundle,
        certificate: f64,
    },
}

/// One outer iteration of a descent run.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub x: Vec<f64>,
    pub fx: f64,
    /// Radius in effect for this iteration.
    pub eps: f64,
    /// Norm of the direction produced at this iterate.
    pub v_norm: f64,
    /// Cumulative oracle value calls up to and including this iteration.
    pub oracle_evals: u64,
    /// Cumulative oracle subgradient calls.
    pub oracle_subgrads: u64,
    pub bundle_size: usize,
    /// Bisection iterations spent in this outer iteration.
    pub bisection_iters: u64,
    /// Whether a descent step was taken (false means ε was shrunk).
    pub step_taken: bool,
}

/// Full record of a descent run.
#[derive(Clone, Debug, PartialEq)]
pub struct DescentTrace {
    pub rows: Vec<TraceRow>,
    pub final_x: Vec<f64>,
    pub final_f: f64,
    /// False when the run stopped on the outer iteration cap instead of the
    /// ε schedule.
    pub complete: bool,
}

impl DescentTrace {
    /// Objective values over iterations where a step was accepted. These are
    /// strictly decreasing for a correct run.
    pub fn accepted_f_values(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.step_taken)
            .map(|r| r.fx)
            .collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `x0 + t v`.
pub fn step_point(x0: &[f64], t: f64, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x0.len(), v.len());
    x0.iter().zip(v).map(|(x, d)| x + t * d).collect()
}
