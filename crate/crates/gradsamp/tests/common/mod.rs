//! Shared helpers for the integration suites.

/// Minimum norm over the convex hull of up to three points, by brute-force
/// nested ternary search over the simplex coordinates.
///
/// Deliberately independent of the production solver: no Gram systems, no
/// active sets, just one-dimensional convex searches. Used as the oracle the
/// solver is checked against.
pub fn simplex_min_norm(points: &[Vec<f64>]) -> f64 {
    assert!(!points.is_empty() && points.len() <= 3);
    let norm_of = |lam: &[f64]| -> f64 {
        let n = points[0].len();
        let mut acc = vec![0.0; n];
        for (l, p) in lam.iter().zip(points) {
            for (a, v) in acc.iter_mut().zip(p) {
                *a += l * v;
            }
        }
        acc.iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    match points.len() {
        1 => norm_of(&[1.0]),
        2 => ternary(0.0, 1.0, |t| norm_of(&[1.0 - t, t])),
        _ => ternary(0.0, 1.0, |l0| {
            ternary(0.0, 1.0 - l0, |l1| norm_of(&[l0, l1, 1.0 - l0 - l1]))
        }),
    }
}

/// Minimizes a convex function on [lo, hi] by ternary search; returns the
/// minimum value.
fn ternary(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi))
}

/// Tiny deterministic generator for test-case construction (splitmix64).
pub struct TestRng(pub u64);

impl TestRng {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}
