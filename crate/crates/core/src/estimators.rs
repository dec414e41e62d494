//! Integral, variance and variance-of-variance estimators.
//!
//! With `Σ2 = N·S2 − S1²` and `Σ4 = N·S4 − 4·S3·S1 + 3·S2²`:
//!
//! ```text
//! E1 = S1/N
//! E2 = Σ2 / (N(N-1)·N)
//! E4 = (N(N-1)·Σ4 − 4Σ2²)/(N⁽⁴⁾N³) + 2Σ2²/(N⁽⁴⁾·N(N-1)·N²)     unbiased, sign-indefinite
//! Ê4 = (N²Σ4 − 4Σ2²)/(N⁽⁴⁾N³)                                   O(1/N) bias, never negative
//! ```
//!
//! where `N⁽⁴⁾ = N(N-1)(N-2)(N-3)` is the falling power. The functions taking
//! [`PowerSums`] evaluate these literally; [`EstimateReport`] derives the same
//! values from a [`CentralAccumulator`].

use serde::{Serialize, Serializer};

use crate::error::{require_n, Error, Result};
use crate::moment_core::{CentralAccumulator, PowerSums};

/// `n (n-1) ... (n-k+1)` as a float; zero when `k > n`.
pub fn falling_power(n: u64, k: u32) -> f64 {
    (0..k as u64)
        .map(|i| n.checked_sub(i).map_or(0.0, |v| v as f64))
        .product()
}

pub fn e1(sums: &PowerSums) -> Result<f64> {
    require_n("E1", sums.n, 1)?;
    Ok(sums.s1 / sums.n as f64)
}

/// `N·S2 − S1²`.
pub fn sigma2(sums: &PowerSums) -> Result<f64> {
    require_n("Sigma2", sums.n, 1)?;
    let n = sums.n as f64;
    Ok(n * sums.s2 - sums.s1 * sums.s1)
}

/// `N·S4 − 4·S3·S1 + 3·S2²`.
pub fn sigma4(sums: &PowerSums) -> Result<f64> {
    require_n("Sigma4", sums.n, 1)?;
    let n = sums.n as f64;
    Ok(n * sums.s4 - 4.0 * sums.s3 * sums.s1 + 3.0 * sums.s2 * sums.s2)
}

pub fn e2(sums: &PowerSums) -> Result<f64> {
    require_n("E2", sums.n, 2)?;
    Ok(sigma2(sums)? / (falling_power(sums.n, 2) * sums.n as f64))
}

pub fn e4_unbiased(sums: &PowerSums) -> Result<f64> {
    require_n("E4", sums.n, 4)?;
    let n = sums.n as f64;
    let (sig2, sig4) = (sigma2(sums)?, sigma4(sums)?);
    let f2 = falling_power(sums.n, 2);
    let f4 = falling_power(sums.n, 4);
    Ok((f2 * sig4 - 4.0 * sig2 * sig2) / (f4 * n * n * n) + 2.0 * sig2 * sig2 / (f4 * f2 * n * n))
}

pub fn e4_hat(sums: &PowerSums) -> Result<f64> {
    require_n("E4hat", sums.n, 4)?;
    let n = sums.n as f64;
    let (sig2, sig4) = (sigma2(sums)?, sigma4(sums)?);
    Ok((n * n * sig4 - 4.0 * sig2 * sig2) / (falling_power(sums.n, 4) * n * n * n))
}

/// `(J2 − J1²)/n`, the exact variance of `E1`.
pub fn analytic_var_e1(j1: f64, j2: f64, n: u64) -> Result<f64> {
    require_n("Var(E1)", n, 1)?;
    Ok((j2 - j1 * j1) / n as f64)
}

/// The exact variance of `E2` for iid weights with moments `J1..J4`.
pub fn analytic_var_e2(j: [f64; 4], n: u64) -> Result<f64> {
    require_n("Var(E2)", n, 2)?;
    if j.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("Var(E2) needs four finite moments".into()));
    }
    let [j1, j2, j3, j4] = j;
    let nf = n as f64;
    let var = j2 - j1 * j1;
    let quartic = j4 - 4.0 * j3 * j1 + 3.0 * j2 * j2 - 4.0 * var * var;
    Ok(quartic / (nf * nf * nf) + 2.0 * var * var / (falling_power(n, 2) * nf * nf))
}

/// Definedness markers carried by a report instead of NaN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReportFlag {
    /// No weights at all.
    E1Undefined,
    /// Fewer than two weights.
    E2Undefined,
    /// Fewer than four weights.
    E4Undefined,
    /// The accumulated state overflowed or saw a non-finite weight.
    NonFinite,
}

impl ReportFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportFlag::E1Undefined => "e1_undefined",
            ReportFlag::E2Undefined => "e2_undefined",
            ReportFlag::E4Undefined => "e4_undefined",
            ReportFlag::NonFinite => "non_finite",
        }
    }
}

impl Serialize for ReportFlag {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

/// `result ± (first-order error ± second-order error)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub n: u64,
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub e4_unbiased: Option<f64>,
    pub e4_hat: Option<f64>,
    pub first_order_error: Option<f64>,
    pub second_order_error: Option<f64>,
    pub flags: Vec<ReportFlag>,
}

impl EstimateReport {
    /// Builds the report from the stable accumulator state.
    ///
    /// `E2 = P/(N-1)`, `Ê4 = R/((N-1)(N-2)(N-3))` and
    /// `E4 = ((N-1)R − 2(N-2)P²/(N-1)) / N⁽⁴⁾`, which are the power-sum
    /// formulas rewritten in terms of `P` and `R`.
    pub fn from_accumulator(acc: &CentralAccumulator) -> Self {
        let n = acc.n();
        let nf = n as f64;
        let mut flags = Vec::new();

        let e1 = if n >= 1 {
            Some(acc.mean())
        } else {
            flags.push(ReportFlag::E1Undefined);
            None
        };
        let e2 = if n >= 2 {
            Some(acc.p() / (nf - 1.0))
        } else {
            flags.push(ReportFlag::E2Undefined);
            None
        };
        let (e4_unbiased, e4_hat) = if n >= 4 {
            let (p, r) = (acc.p(), acc.r());
            let f4 = falling_power(n, 4);
            let unbiased = ((nf - 1.0) * r - 2.0 * (nf - 2.0) * p * p / (nf - 1.0)) / f4;
            let hat = r / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
            (Some(unbiased), Some(hat))
        } else {
            flags.push(ReportFlag::E4Undefined);
            (None, None)
        };
        if n > 0 && !acc.is_finite() {
            flags.push(ReportFlag::NonFinite);
        }

        EstimateReport {
            n,
            e1,
            e2,
            e4_unbiased,
            e4_hat,
            first_order_error: e2.map(f64::sqrt),
            second_order_error: e4_hat.map(|v| v.sqrt().sqrt()),
            flags,
        }
    }

    pub fn has_flag(&self, flag: ReportFlag) -> bool {
        self.flags.contains(&flag)
    }
}

/// A 0/1 weight stream for which the unbiased `E4` may come out negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub n: u64,
    /// Requested fraction of ones.
    pub b: f64,
    /// Number of ones after rounding `b·n` half to even.
    pub ones: u64,
    /// `a = b' − b'²` for the realised fraction `b' = ones/n`.
    pub a: f64,
    /// `(n−1)² / (n(4n−6))`; `E4 < 0` exactly when `a` exceeds it.
    pub threshold: f64,
    pub predicted_negative: bool,
    pub e4: f64,
    pub e4_hat: f64,
    pub negative: bool,
    #[serde(skip)]
    pub weights: Vec<f64>,
}

pub fn counterexample(n: u64, b: f64) -> Result<Counterexample> {
    require_n("counterexample", n, 4)?;
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::Config(format!("fraction b = {b} is outside [0, 1]")));
    }
    let ones = (b * n as f64).round_ties_even() as u64;
    let weights: Vec<f64> = (0..n).map(|i| if i < ones { 1.0 } else { 0.0 }).collect();

    // a > a*  <=>  k(n-k)(4n-6) > n(n-1)², compared in integers
    let (k, nn) = (ones as u128, n as u128);
    let predicted_negative = k * (nn - k) * (4 * nn - 6) > nn * (nn - 1) * (nn - 1);

    let nf = n as f64;
    let realised = ones as f64 / nf;
    let sums: PowerSums = weights.iter().copied().collect();
    let e4 = e4_unbiased(&sums)?;
    Ok(Counterexample {
        n,
        b,
        ones,
        a: realised - realised * realised,
        threshold: (nf - 1.0) * (nf - 1.0) / (nf * (4.0 * nf - 6.0)),
        predicted_negative,
        e4,
        e4_hat: e4_hat(&sums)?,
        negative: e4 < 0.0,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sums(ws: &[f64]) -> PowerSums {
        ws.iter().copied().collect()
    }

    fn acc(ws: &[f64]) -> CentralAccumulator {
        ws.iter().copied().collect()
    }

    #[test]
    fn falling_powers() {
        assert_eq!(falling_power(4, 4), 24.0);
        assert_eq!(falling_power(3, 4), 0.0);
        assert_eq!(falling_power(10, 2), 90.0);
        assert_eq!(falling_power(7, 0), 1.0);
    }

    #[test]
    fn e1_examples() {
        assert_eq!(e1(&sums(&[0.0, 1.0])).unwrap(), 0.5);
        assert_eq!(e1(&sums(&[2.5; 7])).unwrap(), 2.5);
        assert!(matches!(
            e1(&PowerSums::new()),
            Err(Error::Undefined { .. })
        ));
    }

    #[test]
    fn sigma_examples() {
        let s = sums(&[0.0, 1.0]);
        assert_eq!((sigma2(&s).unwrap(), sigma4(&s).unwrap()), (1.0, 1.0));
        let c = sums(&[3.0; 5]);
        assert_eq!((sigma2(&c).unwrap(), sigma4(&c).unwrap()), (0.0, 0.0));
        let z = sums(&[0.0, 0.0, 1.0, 1.0]);
        assert_eq!((sigma2(&z).unwrap(), sigma4(&z).unwrap()), (4.0, 4.0));
    }

    #[test]
    fn e2_examples() {
        assert_eq!(e2(&sums(&[0.0, 1.0])).unwrap(), 0.25);
        assert!((e2(&sums(&[1.0, 2.0, 3.0])).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!(matches!(
            e2(&sums(&[1.0])),
            Err(Error::Undefined { required: 2, .. })
        ));
    }

    #[test]
    fn e4_examples() {
        let z = sums(&[0.0, 0.0, 1.0, 1.0]);
        assert!((e4_unbiased(&z).unwrap() + 1.0 / 288.0).abs() < 1e-15);
        assert_eq!(e4_hat(&z).unwrap(), 0.0);

        let s = sums(&[1.0, 2.0, 3.0, 4.0]);
        assert!((e4_unbiased(&s).unwrap() - 11.0 / 288.0).abs() < 1e-15);
        assert!((e4_hat(&s).unwrap() - 1.0 / 6.0).abs() < 1e-15);

        let c = sums(&[1.25; 6]);
        assert_eq!(e4_unbiased(&c).unwrap(), 0.0);
        assert_eq!(e4_hat(&c).unwrap(), 0.0);

        assert!(e4_hat(&sums(&[1.0, 2.0, 3.0])).is_err());
        assert!(e4_unbiased(&sums(&[1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn report_on_zero_one_stream() {
        let r = EstimateReport::from_accumulator(&acc(&[0.0, 0.0, 1.0, 1.0]));
        assert_eq!(r.e1, Some(0.5));
        assert!((r.e2.unwrap() - 1.0 / 12.0).abs() < 1e-16);
        assert!((r.first_order_error.unwrap() - 0.288675134594813).abs() < 1e-12);
        assert_eq!(r.e4_hat, Some(0.0));
        assert_eq!(r.second_order_error, Some(0.0));
        assert!((r.e4_unbiased.unwrap() + 1.0 / 288.0).abs() < 1e-15);
        assert!(r.flags.is_empty());
    }

    #[test]
    fn report_flags_short_streams() {
        let r = EstimateReport::from_accumulator(&acc(&[1.0, 2.0, 3.0]));
        assert_eq!(r.e1, Some(2.0));
        assert!((r.e2.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.e4_hat, None);
        assert_eq!(r.second_order_error, None);
        assert_eq!(r.flags, vec![ReportFlag::E4Undefined]);

        let one = EstimateReport::from_accumulator(&acc(&[5.0]));
        assert_eq!(
            one.flags,
            vec![ReportFlag::E2Undefined, ReportFlag::E4Undefined]
        );
        let empty = EstimateReport::from_accumulator(&CentralAccumulator::new());
        assert!(empty.has_flag(ReportFlag::E1Undefined));
        assert_eq!(empty.e1, None);
    }

    #[test]
    fn report_constant_stream() {
        let r = EstimateReport::from_accumulator(&acc(&[4.0; 9]));
        assert_eq!(r.first_order_error, Some(0.0));
        assert_eq!(r.second_order_error, Some(0.0));
        assert!(r.flags.is_empty());
    }

    #[test]
    fn report_flags_overflow() {
        let r = EstimateReport::from_accumulator(&acc(&[1.0, f64::MAX, -f64::MAX, 2.0]));
        assert!(r.has_flag(ReportFlag::NonFinite));
        let r = EstimateReport::from_accumulator(&acc(&[1.0, f64::NAN]));
        assert!(r.has_flag(ReportFlag::NonFinite));
    }

    #[test]
    fn report_matches_power_sum_formulas() {
        let ws = [0.3, 1.7, 2.2, 0.9, 4.1, 3.3, 0.05];
        let r = EstimateReport::from_accumulator(&acc(&ws));
        let s = sums(&ws);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        assert!(rel(r.e2.unwrap(), e2(&s).unwrap()) < 1e-12);
        assert!(rel(r.e4_hat.unwrap(), e4_hat(&s).unwrap()) < 1e-10);
        assert!(rel(r.e4_unbiased.unwrap(), e4_unbiased(&s).unwrap()) < 1e-10);
    }

    #[test]
    fn analytic_variances() {
        let v1 = analytic_var_e1(0.5, 1.0 / 3.0, 100).unwrap();
        assert!((v1 - 1.0 / 1200.0).abs() < 1e-18);
        assert_eq!(analytic_var_e1(2.0, 4.0, 10).unwrap(), 0.0);
        let j2 = 0.81 / 0.8;
        assert!((analytic_var_e1(1.0, j2, 1000).unwrap() - 0.0125 / 1000.0).abs() < 1e-17);

        // (1/180)/1000 + 2/(90·100)·(1/144)
        let expected = 1.0 / 180.0 / 1000.0 + 2.0 / 9000.0 / 144.0;
        let v2 = analytic_var_e2([0.5, 1.0 / 3.0, 0.25, 0.2], 10).unwrap();
        assert!((v2 - expected).abs() < 1e-20);
        assert!((v2 - 7.0988e-6).abs() < 1e-9);

        let c: f64 = 1.7;
        let degenerate = analytic_var_e2([c, c.powi(2), c.powi(3), c.powi(4)], 50).unwrap();
        assert!(degenerate.abs() < 1e-15);

        assert!(analytic_var_e2([0.5, f64::INFINITY, 0.25, 0.2], 10).is_err());
    }

    #[test]
    fn analytic_var_e2_second_term_fades() {
        let j = [0.5, 1.0 / 3.0, 0.25, 0.2];
        let ratio = |n: u64| {
            let var = j[1] - j[0] * j[0];
            let nf = n as f64;
            let second = 2.0 * var * var / (falling_power(n, 2) * nf * nf);
            second / (analytic_var_e2(j, n).unwrap() - second)
        };
        assert!(ratio(1000) < ratio(100) / 9.0);
    }

    #[test]
    fn counterexample_small() {
        let c = counterexample(4, 0.5).unwrap();
        assert_eq!(c.weights, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(c.a, 0.25);
        assert!((c.threshold - 0.225).abs() < 1e-16);
        assert!(c.predicted_negative && c.negative);
        assert!((c.e4 + 1.0 / 288.0).abs() < 1e-15);
        assert_eq!(c.e4_hat, 0.0);
    }

    #[test]
    fn counterexample_ten() {
        let c = counterexample(10, 0.5).unwrap();
        assert!((c.threshold - 81.0 / 340.0).abs() < 1e-16);
        assert!(c.predicted_negative && c.negative);
    }

    #[test]
    fn counterexample_all_zero() {
        let c = counterexample(8, 0.0).unwrap();
        assert_eq!(c.a, 0.0);
        assert_eq!(c.e4, 0.0);
        assert!(!c.negative && !c.predicted_negative);
    }

    #[test]
    fn counterexample_rounds_half_to_even() {
        // 0.5 · 5 = 2.5 rounds to 2, 0.7 · 5 = 3.5 rounds to 4
        assert_eq!(counterexample(5, 0.5).unwrap().ones, 2);
        assert_eq!(counterexample(5, 0.7).unwrap().ones, 4);
    }

    #[test]
    fn counterexample_prediction_matches_sign() {
        for n in 4..40 {
            for k in 0..=n {
                let c = counterexample(n, k as f64 / n as f64).unwrap();
                assert_eq!(c.ones, k);
                assert_eq!(c.predicted_negative, c.negative, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn counterexample_rejects_bad_input() {
        assert!(counterexample(3, 0.5).is_err());
        assert!(counterexample(10, 1.5).is_err());
    }
}
