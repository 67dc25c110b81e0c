//! Built-in test problems with exact value and subgradient oracles.
//!
//! Every oracle returns a designated element of the analytically known Clarke
//! subdifferential, so runs are reproducible and tests can validate the
//! returned subgradients against the true subdifferential at kinks.

use crate::core::{norm, FunctionOracle, InvalidParams};

/// Largest breakpoint index of [`CounterexampleFn`] that double precision can
/// still separate from its neighbors.
pub const SEGMENT_INDEX_CAP: i32 = 52;

/// One-dimensional sawtooth whose kinks accumulate at `x = 1`.
///
/// The base shape `phi` is piecewise linear: `-x/2` for `x < 0`, constant `1`
/// for `x >= 1`, and on `[0, 1)` it oscillates through valleys at
/// `x = 1 - 7·2^(-i-3)` and peaks at `x = 1 - 5·2^(-i-3)`, with both the
/// oscillation amplitude and the segment slopes vanishing as `x -> 1`. The
/// oracle objective is `f(x) = phi(x) - x/2`, which makes every sawtooth
/// ascent just barely outweigh the tilt: a bisection probe that compares raw
/// function values is drawn into the accumulation point without ever seeing
/// an increasing segment.
///
/// All breakpoints and slopes are dyadic rationals, evaluated directly from
/// their closed forms, so values at dyadic query points are exact.
#[derive(Clone, Copy, Debug, Default)]
pub struct CounterexampleFn;

/// Closed-form segment data for `phi` on `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Segment {
    anchor_x: f64,
    anchor_val: f64,
    slope: f64,
}

impl CounterexampleFn {
    /// Valley abscissa `x_i = 1 - 7·2^(-i-3)`.
    pub fn valley_x(i: i32) -> f64 {
        1.0 - 7.0 * pow2(-i - 3)
    }

    /// Valley value `1 - 9·2^(-2i-3)`.
    pub fn valley_value(i: i32) -> f64 {
        1.0 - 9.0 * pow2(-2 * i - 3)
    }

    /// Peak abscissa `1 - 5·2^(-i-3)`.
    pub fn peak_x(i: i32) -> f64 {
        1.0 - 5.0 * pow2(-i - 3)
    }

    /// Peak value `1 - 3·2^(-2i-4)`.
    pub fn peak_value(i: i32) -> f64 {
        1.0 - 3.0 * pow2(-2 * i - 4)
    }

    /// Slope of the ascending segment from valley `i` to peak `i`.
    pub fn ascent_slope(i: i32) -> f64 {
        15.0 * pow2(-i - 2)
    }

    /// Slope of the descending segment from peak `i` to valley `i + 1`.
    pub fn descent_slope(i: i32) -> f64 {
        -pow2(-i - 1)
    }

    /// Locates the linear segment containing `x ∈ [0, 1)`.
    ///
    /// The candidate index comes from the floor of `-log2(1 - x)`; a short
    /// scan around it corrects for the window boundaries by direct
    /// comparison against the closed-form breakpoints. Beyond
    /// [`SEGMENT_INDEX_CAP`] the breakpoints collapse in double precision
    /// and the limit segment (value 1, slope 0) is returned.
    fn segment(x: f64) -> Segment {
        debug_assert!((0.0..1.0).contains(&x));
        if x < Self::valley_x(0) {
            return Segment {
                anchor_x: 0.0,
                anchor_val: 0.0,
                slope: -1.0,
            };
        }
        let u = 1.0 - x;
        let guess = (-u.log2()).floor() as i32;
        let lo = (guess - 3).max(0);
        let hi = (guess + 3).min(SEGMENT_INDEX_CAP);
        for i in lo..=hi {
            if Self::valley_x(i) <= x && x < Self::peak_x(i) {
                return Segment {
                    anchor_x: Self::valley_x(i),
                    anchor_val: Self::valley_value(i),
                    slope: Self::ascent_slope(i),
                };
            }
            let next_valley = if i < SEGMENT_INDEX_CAP {
                Self::valley_x(i + 1)
            } else {
                1.0
            };
            if Self::peak_x(i) <= x && x < next_valley {
                return Segment {
                    anchor_x: Self::peak_x(i),
                    anchor_val: Self::peak_value(i),
                    slope: Self::descent_slope(i),
                };
            }
        }
        // x closer to 1 than the cap resolves: phi is continuous with
        // slopes -> 0, so the limit value applies.
        Segment {
            anchor_x: 1.0,
            anchor_val: 1.0,
            slope: 0.0,
        }
    }

    /// The sawtooth base function.
    pub fn phi(x: f64) -> f64 {
        if x < 0.0 {
            return -0.5 * x;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let s = Self::segment(x);
        s.anchor_val + s.slope * (x - s.anchor_x)
    }

    /// Slope of `phi` at `x`, taking the right-hand segment at kinks.
    pub fn phi_slope_right(x: f64) -> f64 {
        if x < 0.0 {
            return -0.5;
        }
        if x >= 1.0 {
            return 0.0;
        }
        Self::segment(x).slope
    }
}

fn pow2(e: i32) -> f64 {
    (2.0f64).powi(e)
}

impl FunctionOracle for CounterexampleFn {
    fn eval(&self, x: &[f64]) -> f64 {
        Self::phi(x[0]) - 0.5 * x[0]
    }

    /// Designated subgradients: at `x = 0` the left-hand slope `-1` (the full
    /// subdifferential there is `[-3/2, -1]`); at every other kink the
    /// right-hand slope.
    fn subgrad(&self, x: &[f64]) -> Vec<f64> {
        let x = x[0];
        if x == 0.0 {
            return vec![-1.0];
        }
        vec![Self::phi_slope_right(x) - 0.5]
    }

    fn dim(&self) -> usize {
        1
    }
}

/// `f(x) = |x_n - ‖pr(x)‖| + x_n / 2`, where `pr` drops the last coordinate.
///
/// The graph is a tilted double cone. `f` is smooth away from the cone
/// surface `x_n = ‖pr(x)‖` and the axis `pr(x) = 0`, with
/// `∇f = (pr/‖pr‖, -1/2)` below the cone and `∇f = (-pr/‖pr‖, 3/2)` above
/// it. The origin is the global minimizer.
#[derive(Clone, Copy, Debug)]
pub struct ConeFn {
    n: usize,
}

impl ConeFn {
    pub fn new(n: usize) -> Result<Self, InvalidParams> {
        if n < 2 {
            return Err(InvalidParams(format!("cone requires n >= 2, got {n}")));
        }
        Ok(Self { n })
    }
}

impl FunctionOracle for ConeFn {
    fn eval(&self, x: &[f64]) -> f64 {
        let xn = x[self.n - 1];
        let pn = norm(&x[..self.n - 1]);
        (xn - pn).abs() + 0.5 * xn
    }

    /// Designated subgradients: the exact gradient on either smooth region;
    /// the above-cone limit `(-pr/‖pr‖, 3/2)` on the cone surface and
    /// `(0, …, 0, 3/2)` on the upper axis; `(0, …, 0, -1/2)` on the strictly
    /// lower axis, where no above-cone limit exists.
    fn subgrad(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let xn = x[n - 1];
        let pr = &x[..n - 1];
        let pn = norm(pr);
        let mut g = vec![0.0; n];
        if pn == 0.0 {
            g[n - 1] = if xn < 0.0 { -0.5 } else { 1.5 };
            return g;
        }
        if xn < pn {
            for (gi, pi) in g.iter_mut().zip(pr) {
                *gi = pi / pn;
            }
            g[n - 1] = -0.5;
        } else {
            for (gi, pi) in g.iter_mut().zip(pr) {
                *gi = -pi / pn;
            }
            g[n - 1] = 1.5;
        }
        g
    }

    fn dim(&self) -> usize {
        self.n
    }
}

/// `f(x) = |x|` with the subgradient at 0 designated as `+1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct AbsFn;

impl FunctionOracle for AbsFn {
    fn eval(&self, x: &[f64]) -> f64 {
        x[0].abs()
    }
    fn subgrad(&self, x: &[f64]) -> Vec<f64> {
        vec![if x[0] < 0.0 { -1.0 } else { 1.0 }]
    }
    fn dim(&self) -> usize {
        1
    }
}

/// `f(x) = ‖x‖_∞`. The designated subgradient is the signed unit vector of
/// the lowest-index coordinate attaining the max, with sign `+1` at zero.
#[derive(Clone, Copy, Debug)]
pub struct MaxNormFn {
    n: usize,
}

impl MaxNormFn {
    pub fn new(n: usize) -> Result<Self, InvalidParams> {
        if n < 1 {
            return Err(InvalidParams("maxnorm requires n >= 1".to_string()));
        }
        Ok(Self { n })
    }
}

impl FunctionOracle for MaxNormFn {
    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
    fn subgrad(&self, x: &[f64]) -> Vec<f64> {
        let fx = self.eval(x);
        let mut g = vec![0.0; self.n];
        let i = x
            .iter()
            .position(|v| v.abs() == fx)
            .expect("max is attained");
        g[i] = if x[i] < 0.0 { -1.0 } else { 1.0 };
        g
    }
    fn dim(&self) -> usize {
        self.n
    }
}

/// Pointwise maximum of three convex quadratics in the plane:
/// `x² + y²`, `(x-2)² + y²` and `x² + (y-2)²`.
///
/// The minimizer is `(1, 1)` with value `2`, where all three pieces are
/// active and the zero vector is a convex combination of their gradients.
/// Ties are resolved toward the lowest-index piece.
#[derive(Clone, Copy, Debug, Default)]
pub struct MaxQuadFn;

impl MaxQuadFn {
    /// Known global minimum.
    pub const MINIMUM: f64 = 2.0;

    fn pieces(x: &[f64]) -> [f64; 3] {
        let (a, b) = (x[0], x[1]);
        [
            a * a + b * b,
            (a - 2.0) * (a - 2.0) + b * b,
            a * a + (b - 2.0) * (b - 2.0),
        ]
    }
}

impl FunctionOracle for MaxQuadFn {
    fn eval(&self, x: &[f64]) -> f64 {
        Self::pieces(x)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }
    fn subgrad(&self, x: &[f64]) -> Vec<f64> {
        let vals = Self::pieces(x);
        let fx = vals.into_iter().fold(f64::NEG_INFINITY, f64::max);
        let k = vals.iter().position(|&v| v == fx).expect("max is attained");
        let (a, b) = (x[0], x[1]);
        match k {
            0 => vec![2.0 * a, 2.0 * b],
            1 => vec![2.0 * (a - 2.0), 2.0 * b],
            _ => vec![2.0 * a, 2.0 * (b - 2.0)],
        }
    }
    fn dim(&self) -> usize {
        2
    }
}

/// Looks up a bundled function by its CLI name: `counterexample`, `cone:<n>`,
/// `abs`, `maxnorm:<n>` or `maxquad`.
pub fn by_name(name: &str) -> Result<Box<dyn FunctionOracle>, InvalidParams> {
    let parse_dim = |s: &str| -> Result<usize, InvalidParams> {
        s.parse::<usize>()
            .map_err(|_| InvalidParams(format!("invalid dimension '{s}'")))
    };
    match name.split_once(':') {
        None => match name {
            "counterexample" => Ok(Box::new(CounterexampleFn)),
            "abs" => Ok(Box::new(AbsFn)),
            "maxquad" => Ok(Box::new(MaxQuadFn)),
            _ => Err(InvalidParams(format!("unknown function '{name}'"))),
        },
        Some(("cone", d)) => Ok(Box::new(ConeFn::new(parse_dim(d)?)?)),
        Some(("maxnorm", d)) => Ok(Box::new(MaxNormFn::new(parse_dim(d)?)?)),
        Some(_) => Err(InvalidParams(format!("unknown function '{name}'"))),
    }
}
