use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{require_n, Error, Result};

/// Power sums in exact arithmetic.
///
/// Every finite double is `mantissa · 2^exponent`. All weights are put on the
/// smallest exponent present, so `S_p = T_p · 2^(p·scale)` with integer `T_p`.
/// The estimators are then exact rationals; convert with
/// [`num_traits::ToPrimitive::to_f64`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSums {
    n: u64,
    scale: i64,
    t: [BigInt; 4],
}

fn decompose(w: f64) -> (BigInt, i64) {
    let bits = w.to_bits();
    let negative = bits >> 63 == 1;
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exponent) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    let m = BigInt::from(mantissa);
    (if negative { -m } else { m }, exponent)
}

fn pow2(e: i64) -> BigRational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

fn falling(n: u64, k: u64) -> BigInt {
    (0..k).map(|i| BigInt::from(n) - BigInt::from(i)).product()
}

impl ExactSums {
    pub fn from_f64(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Contract("exact sums need finite weights".into()));
        }
        let parts: Vec<(BigInt, i64)> = weights
            .iter()
            .filter(|w| **w != 0.0)
            .map(|&w| decompose(w))
            .collect();
        let scale = parts.iter().map(|(_, e)| *e).min().unwrap_or(0);
        let mut t: [BigInt; 4] = Default::default();
        for (m, e) in parts {
            let v = m << (e - scale) as usize;
            let v2 = &v * &v;
            let v3 = &v2 * &v;
            let v4 = &v2 * &v2;
            t[0] += v;
            t[1] += v2;
            t[2] += v3;
            t[3] += v4;
        }
        Ok(ExactSums {
            n: weights.len() as u64,
            scale,
            t,
        })
    }

    pub fn from_integers(weights: &[i64]) -> Self {
        let mut t: [BigInt; 4] = Default::default();
        for &w in weights {
            let v = BigInt::from(w);
            for (p, acc) in t.iter_mut().enumerate() {
                *acc += num_traits::pow(v.clone(), p + 1);
            }
        }
        ExactSums {
            n: weights.len() as u64,
            scale: 0,
            t,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `S_p` for `p` in `1..=4`.
    pub fn power_sum(&self, p: usize) -> BigRational {
        assert!((1..=4).contains(&p), "power sums are kept for p = 1..4");
        BigRational::from_integer(self.t[p - 1].clone()) * pow2(p as i64 * self.scale)
    }

    fn nq(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.n))
    }

    pub fn sigma2(&self) -> BigRational {
        let n = BigInt::from(self.n);
        let [t1, t2, ..] = &self.t;
        BigRational::from_integer(&n * t2 - t1 * t1) * pow2(2 * self.scale)
    }

    pub fn sigma4(&self) -> BigRational {
        let n = BigInt::from(self.n);
        let [t1, t2, t3, t4] = &self.t;
        let v = &n * t4 - BigInt::from(4) * t3 * t1 + BigInt::from(3) * t2 * t2;
        BigRational::from_integer(v) * pow2(4 * self.scale)
    }

    pub fn e1(&self) -> Result<BigRational> {
        require_n("E1", self.n, 1)?;
        Ok(self.power_sum(1) / self.nq())
    }

    pub fn e2(&self) -> Result<BigRational> {
        require_n("E2", self.n, 2)?;
        let denom = BigRational::from_integer(falling(self.n, 2)) * self.nq();
        Ok(self.sigma2() / denom)
    }

    pub fn e4_unbiased(&self) -> Result<BigRational> {
        require_n("E4", self.n, 4)?;
        let n = self.nq();
        let f2 = BigRational::from_integer(falling(self.n, 2));
        let f4 = BigRational::from_integer(falling(self.n, 4));
        let (sig2, sig4) = (self.sigma2(), self.sigma4());
        let sig2sq = &sig2 * &sig2;
        let four = BigRational::from_integer(BigInt::from(4));
        let two = BigRational::from_integer(BigInt::from(2));
        let first = (&f2 * sig4 - four * &sig2sq) / (&f4 * &n * &n * &n);
        let second = two * sig2sq / (f4 * f2 * &n * &n);
        Ok(first + second)
    }

    pub fn e4_hat(&self) -> Result<BigRational> {
        require_n("E4hat", self.n, 4)?;
        let n = self.nq();
        let f4 = BigRational::from_integer(falling(self.n, 4));
        let sig2 = self.sigma2();
        let four = BigRational::from_integer(BigInt::from(4));
        let num = &n * &n * self.sigma4() - four * &sig2 * &sig2;
        Ok(num / (f4 * &n * &n * &n))
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0 && self.t.iter().all(Zero::is_zero)
    }
}
