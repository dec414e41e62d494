//! Weight-stream statistics in two representations.
//!
//! [`PowerSums`] keeps the raw sums `S1..S4` of weight powers. It is cheap and
//! exact for small integer data but loses everything to cancellation once the
//! weights carry a large common offset. [`CentralAccumulator`] keeps the running
//! mean `M` together with the combinations
//!
//! ```text
//! P = S2/N - S1²/N²
//! Q = S3/N - 3 S2 S1/N² + 2 S1³/N³
//! R = S4/N - 4 S3 S1/N² + 3 S2²/N² - 4 P²
//! ```
//!
//! updated one point at a time from the deviation `u = w - M(N-1)`, so every
//! quantity stays at its natural magnitude. `P` and `Q` are the second and
//! third central moments; `R` equals `m4 - m2²` and is therefore nonnegative.

use serde::Serialize;

/// Relative size below which a negative `p` or `r` is treated as rounding noise.
pub const CLAMP_REL: f64 = 1e-12;

/// Running simple sums of weight powers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PowerSums {
    pub n: u64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
}

impl PowerSums {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the sums with one more weight folded in.
    #[must_use]
    pub fn update(self, w: f64) -> Self {
        let w2 = w * w;
        PowerSums {
            n: self.n + 1,
            s1: self.s1 + w,
            s2: self.s2 + w2,
            s3: self.s3 + w2 * w,
            s4: self.s4 + w2 * w2,
        }
    }

    pub fn push(&mut self, w: f64) {
        *self = self.update(w);
    }

    /// Sums of a concatenated stream.
    #[must_use]
    pub fn merge(self, other: Self) -> Self {
        PowerSums {
            n: self.n + other.n,
            s1: self.s1 + other.s1,
            s2: self.s2 + other.s2,
            s3: self.s3 + other.s3,
            s4: self.s4 + other.s4,
        }
    }

    /// `(M, P, Q, R)` evaluated directly from their defining formulas.
    ///
    /// This is the cancellation-prone route; it exists to cross-check the
    /// accumulator. Returns `None` for an empty stream.
    pub fn central(&self) -> Option<(f64, f64, f64, f64)> {
        if self.n == 0 {
            return None;
        }
        let n = self.n as f64;
        let (s1, s2, s3, s4) = (self.s1, self.s2, self.s3, self.s4);
        let m = s1 / n;
        let p = s2 / n - s1 * s1 / (n * n);
        let q = s3 / n - 3.0 * s2 * s1 / (n * n) + 2.0 * s1 * s1 * s1 / (n * n * n);
        let r = s4 / n - 4.0 * s3 * s1 / (n * n) + 3.0 * s2 * s2 / (n * n) - 4.0 * p * p;
        Some((m, p, q, r))
    }

    pub fn is_finite(&self) -> bool {
        self.s1.is_finite() && self.s2.is_finite() && self.s3.is_finite() && self.s4.is_finite()
    }
}

impl FromIterator<f64> for PowerSums {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        iter.into_iter().fold(PowerSums::new(), PowerSums::update)
    }
}

impl Extend<f64> for PowerSums {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for w in iter {
            self.push(w);
        }
    }
}

/// Numerically stable one-pass state `(N, M, P, Q, R)`.
///
/// All arithmetic is native `f64`. The raw state is available through the
/// `raw_*` accessors; [`p`](Self::p) and [`r`](Self::r) clamp negatives that
/// are pure rounding noise to zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CentralAccumulator {
    n: u64,
    m: f64,
    p: f64,
    q: f64,
    r: f64,
}

impl CentralAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the state after one more weight.
    #[must_use]
    pub fn update(self, w: f64) -> Self {
        if self.n == 0 {
            return CentralAccumulator {
                n: 1,
                m: w,
                p: 0.0,
                q: 0.0,
                r: 0.0,
            };
        }
        let n = self.n + 1;
        let nf = n as f64;
        let shrink = (nf - 1.0) / nf;
        let CentralAccumulator { m, p, q, r, .. } = self;

        let u = w - m;
        let u2 = u * u;
        let spread = p - (nf - 2.0) / nf * u2;

        CentralAccumulator {
            n,
            m: m + u / nf,
            p: shrink * (p + u2 / nf),
            q: shrink * (q + (nf - 2.0) / (nf * nf) * u2 * u - 3.0 * p / nf * u),
            r: shrink * (r + spread * spread / nf - 4.0 * (q / nf * u - p / (nf * nf) * u2)),
        }
    }

    pub fn push(&mut self, w: f64) {
        *self = self.update(w);
    }

    /// State of the concatenation of the two underlying streams.
    ///
    /// Combines the central sums `N·m2`, `N·m3`, `N·m4` pairwise (with
    /// `m4 = R + P²`) and converts back.
    #[must_use]
    pub fn merge(self, other: Self) -> Self {
        if other.n == 0 {
            return self;
        }
        if self.n == 0 {
            return other;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = other.m - self.m;
        let d2 = delta * delta;

        let (m2a, m2b) = (na * self.p, nb * other.p);
        let (m3a, m3b) = (na * self.q, nb * other.q);
        let (m4a, m4b) = (
            na * (self.r + self.p * self.p),
            nb * (other.r + other.p * other.p),
        );

        let m2 = m2a + m2b + d2 * na * nb / n;
        let m3 = m3a
            + m3b
            + d2 * delta * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * m2b - nb * m2a) / n;
        let m4 = m4a
            + m4b
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * m2b + nb * nb * m2a) / (n * n)
            + 4.0 * delta * (na * m3b - nb * m3a) / n;

        let mean = if self.n >= other.n {
            self.m + delta * nb / n
        } else {
            other.m - delta * na / n
        };
        let p = m2 / n;
        CentralAccumulator {
            n: self.n + other.n,
            m: mean,
            p,
            q: m3 / n,
            r: m4 / n - p * p,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Running mean `M(N)`.
    pub fn mean(&self) -> f64 {
        self.m
    }

    /// `P(N)`, the second central moment, with rounding-level negatives clamped.
    pub fn p(&self) -> f64 {
        clamp_noise(self.p, self.m * self.m + self.p.abs())
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `R(N) = m4 - m2²`, with rounding-level negatives clamped.
    pub fn r(&self) -> f64 {
        let scale = self.m * self.m + self.p.abs();
        clamp_noise(self.r, scale * scale)
    }

    pub fn raw_p(&self) -> f64 {
        self.p
    }

    pub fn raw_r(&self) -> f64 {
        self.r
    }

    pub fn is_finite(&self) -> bool {
        self.m.is_finite() && self.p.is_finite() && self.q.is_finite() && self.r.is_finite()
    }
}

fn clamp_noise(value: f64, scale: f64) -> f64 {
    if value < 0.0 && value >= -CLAMP_REL * scale {
        0.0
    } else {
        value
    }
}

impl FromIterator<f64> for CentralAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        iter.into_iter()
            .fold(CentralAccumulator::new(), CentralAccumulator::update)
    }
}

impl Extend<f64> for CentralAccumulator {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for w in iter {
            self.push(w);
        }
    }
}
