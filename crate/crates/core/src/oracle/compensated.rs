use std::ops::{Add, Mul, Neg, Sub};

use crate::estimators::falling_power;
use crate::moment_core::PowerSums;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, about 106 bits.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    /// Exact product of two doubles.
    pub fn product(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        DoubleDouble { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn mul_f64(self, x: f64) -> Self {
        self * DoubleDouble::from_f64(x)
    }

    pub fn div_f64(self, x: f64) -> Self {
        let q1 = self.hi / x;
        let r = self - DoubleDouble::product(q1, x);
        let q2 = r.hi / x;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo }
    }
}

impl Add for DoubleDouble {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;

    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;

    fn sub(self, other: Self) -> Self {
        self + (-other)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + (self.hi * other.lo + self.lo * other.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

/// Power sums `S1..S4` held in double-double precision.
///
/// Each power `w^p` is formed with error-free products and accumulated with
/// compensated double-double additions, so the sums themselves are accurate
/// to roughly `1e-30` relative. Differences such as `Σ2` inherit that
/// precision, which covers a `1e8` offset for `Σ2` but not for `Σ4`; use
/// [`ExactSums`](super::ExactSums) when the quartic combination matters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSums {
    pub n: u64,
    pub s: [DoubleDouble; 4],
}

impl CompensatedSums {
    pub fn push(&mut self, w: f64) {
        let w2 = DoubleDouble::product(w, w);
        let w3 = w2.mul_f64(w);
        let w4 = w2 * w2;
        self.n += 1;
        for (acc, term) in self
            .s
            .iter_mut()
            .zip([DoubleDouble::from_f64(w), w2, w3, w4])
        {
            *acc = *acc + term;
        }
    }

    /// Rounds each sum to the nearest double.
    pub fn to_power_sums(&self) -> PowerSums {
        PowerSums {
            n: self.n,
            s1: self.s[0].to_f64(),
            s2: self.s[1].to_f64(),
            s3: self.s[2].to_f64(),
            s4: self.s[3].to_f64(),
        }
    }

    /// `N·S2 − S1²` in double-double.
    pub fn sigma2(&self) -> DoubleDouble {
        let n = self.n as f64;
        self.s[1].mul_f64(n) - self.s[0] * self.s[0]
    }

    /// `N·S4 − 4·S3·S1 + 3·S2²` in double-double.
    pub fn sigma4(&self) -> DoubleDouble {
        let n = self.n as f64;
        self.s[3].mul_f64(n) - (self.s[2] * self.s[0]).mul_f64(4.0)
            + (self.s[1] * self.s[1]).mul_f64(3.0)
    }

    pub fn e2(&self) -> Option<f64> {
        (self.n >= 2).then(|| {
            self.sigma2()
                .div_f64(falling_power(self.n, 2) * self.n as f64)
                .to_f64()
        })
    }

    pub fn e4_hat(&self) -> Option<f64> {
        (self.n >= 4).then(|| {
            let n = self.n as f64;
            let sig2 = self.sigma2();
            (self.sigma4().mul_f64(n * n) - (sig2 * sig2).mul_f64(4.0))
                .div_f64(falling_power(self.n, 4))
                .div_f64(n * n * n)
                .to_f64()
        })
    }
}

pub fn compensated_sums(weights: &[f64]) -> CompensatedSums {
    let mut sums = CompensatedSums::default();
    for &w in weights {
        sums.push(w);
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators;
    use crate::oracle::ExactSums;
    use num_traits::ToPrimitive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn integer_weights_are_exact() {
        let ws = [1.0, -2.0, 3.0, 7.0, 0.0, 11.0];
        let naive: PowerSums = ws.iter().copied().collect();
        assert_eq!(compensated_sums(&ws).to_power_sums(), naive);
    }

    #[test]
    fn double_double_recovers_lost_bits() {
        let big = DoubleDouble::from_f64(1e16);
        let sum = big + DoubleDouble::from_f64(1.0) - big;
        assert_eq!(sum.to_f64(), 1.0);
        let third = DoubleDouble::from_f64(1.0).div_f64(3.0);
        assert!((third.mul_f64(3.0).to_f64() - 1.0).abs() < 1e-30);
    }

    #[test]
    fn offset_e2_matches_rational() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ws: Vec<f64> = (0..10).map(|_| 1e8 + rng.gen::<f64>()).collect();
        let exact = ExactSums::from_f64(&ws)
            .unwrap()
            .e2()
            .unwrap()
            .to_f64()
            .unwrap();
        let comp = compensated_sums(&ws).e2().unwrap();
        assert!((comp - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn sums_match_rational_to_1e13() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ws: Vec<f64> = (0..1000).map(|_| rng.gen_range(-3.0..5.0)).collect();
        let exact = ExactSums::from_f64(&ws).unwrap();
        let comp = compensated_sums(&ws).to_power_sums();
        for (p, got) in [(1, comp.s1), (2, comp.s2), (3, comp.s3), (4, comp.s4)] {
            let want = exact.power_sum(p).to_f64().unwrap();
            assert!((got - want).abs() <= 1e-13 * want.abs(), "p = {p}");
        }
    }

    #[test]
    fn benign_uniform_agrees_with_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ws: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
        let comp = compensated_sums(&ws).to_power_sums();
        let naive: PowerSums = ws.iter().copied().collect();
        for (a, b) in [
            (comp.s1, naive.s1),
            (comp.s2, naive.s2),
            (comp.s3, naive.s3),
            (comp.s4, naive.s4),
        ] {
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
        let e2_naive = estimators::e2(&naive).unwrap();
        assert!((compensated_sums(&ws).e2().unwrap() - e2_naive).abs() < 1e-10 * e2_naive);
    }
}
