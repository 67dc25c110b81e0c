//! Nonsmooth minimization for locally Lipschitz functions via deterministic
//! approximation of the Goldstein ε-subdifferential.
//!
//! The central object is a gradient bundle `W`: a finite set of subgradients
//! sampled inside an ε-ball around the current iterate, whose convex hull
//! approximates the ε-subdifferential. The minimum-norm point of `conv(W)`
//! yields a candidate descent direction ([`minnorm`]). When that direction
//! fails the sufficient-descent test, a bisection line probe ([`bisection`])
//! produces a new ε-subgradient that strictly enlarges `conv(W)`, and the
//! enrichment loop ([`direction`]) repeats until the iterate is ε-critical or
//! a certified descent direction is found. Outer descent loops, including a
//! random-sampling baseline for comparison, live in [`optimizer`].
//!
//! [`testfns`] bundles piecewise linear and piecewise smooth test problems
//! with exact value/subgradient oracles, and [`geometry`] computes the
//! analytic probability that random sampling detects the criticality of the
//! cone test function.

pub mod bisection;
pub mod core;
pub mod direction;
pub mod geometry;
pub mod minnorm;
pub mod optimizer;
pub mod testfns;
