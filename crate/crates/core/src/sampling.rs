//! Seeded weight streams for the test distributions.
//!
//! Every stream is a `ChaCha8Rng` seeded with `seed_from_u64(seed)` and moved
//! to stream number `index` with `set_stream`, so replicas never overlap and
//! any `(seed, index)` pair reproduces its weights bit for bit.

use std::fmt;
use std::str::FromStr;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Recorded in output headers.
pub const GENERATOR: &str = "ChaCha8Rng(rand_chacha 0.3; seed_from_u64(seed), set_stream(index))";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    /// `w = x`, `x` uniform on `(0, 1]`.
    Uniform01,
    /// `w = (1+α) x^α`, `x` uniform on `(0, 1]`, `-1 < α <= 0`.
    PowerIntegrand { alpha: f64 },
    /// `w = x` with density `e^{-x}`.
    Exponential,
    /// `w = x` with density `E1(x) = ∫_x^∞ e^{-t}/t dt`.
    ExpIntegral,
}

/// A moment `J_p = <w^p>`, or a marker that the integral diverges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment {
    Finite(f64),
    Divergent,
}

impl Moment {
    pub fn value(self) -> Option<f64> {
        match self {
            Moment::Finite(v) => Some(v),
            Moment::Divergent => None,
        }
    }
}

impl DistributionSpec {
    pub fn power(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > -1.0 && alpha <= 0.0 {
            Ok(DistributionSpec::PowerIntegrand { alpha })
        } else {
            Err(Error::Config(format!(
                "power integrand exponent {alpha} is outside (-1, 0]"
            )))
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::PowerIntegrand { alpha } => Self::power(alpha).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Draws one weight.
    ///
    /// The power integrand consumes exactly one uniform per weight, so specs
    /// differing only in `α` see the same underlying `x` sequence.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DistributionSpec::Uniform01 => unit_half_open(rng),
            DistributionSpec::PowerIntegrand { alpha } => {
                let x = unit_half_open(rng);
                (1.0 + alpha) * x.powf(alpha)
            }
            DistributionSpec::Exponential => standard_exponential(rng),
            // U·T with U uniform and T exponential has density E1(x)
            DistributionSpec::ExpIntegral => {
                let u = unit_half_open(rng);
                u * standard_exponential(rng)
            }
        }
    }

    /// `J_p` for `p` in `1..=4`.
    pub fn analytic_moment(&self, p: u32) -> Result<Moment> {
        if !(1..=4).contains(&p) {
            return Err(Error::Config(format!("moment order {p} is outside 1..=4")));
        }
        let pf = p as f64;
        let factorial = (1..=p).product::<u32>() as f64;
        Ok(match *self {
            DistributionSpec::Uniform01 => Moment::Finite(1.0 / (pf + 1.0)),
            DistributionSpec::PowerIntegrand { alpha } => {
                if pf * alpha > -1.0 {
                    Moment::Finite((1.0 + alpha).powi(p as i32) / (pf * alpha + 1.0))
                } else {
                    Moment::Divergent
                }
            }
            DistributionSpec::Exponential => Moment::Finite(factorial),
            DistributionSpec::ExpIntegral => Moment::Finite(factorial / (pf + 1.0)),
        })
    }

    /// `[J1, J2, J3, J4]` if all four are finite.
    pub fn moments4(&self) -> Option<[f64; 4]> {
        let mut out = [0.0; 4];
        for (p, slot) in (1..=4).zip(out.iter_mut()) {
            *slot = self.analytic_moment(p).ok()?.value()?;
        }
        Some(out)
    }

    pub fn all() -> impl Iterator<Item = DistributionSpec> {
        [
            DistributionSpec::Uniform01,
            DistributionSpec::PowerIntegrand { alpha: -0.1 },
            DistributionSpec::PowerIntegrand { alpha: -0.3 },
            DistributionSpec::PowerIntegrand { alpha: -0.6 },
            DistributionSpec::PowerIntegrand { alpha: -0.9 },
            DistributionSpec::Exponential,
            DistributionSpec::ExpIntegral,
        ]
        .into_iter()
    }
}

fn unit_half_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // gen::<f64>() is in [0, 1)
    1.0 - rng.gen::<f64>()
}

fn standard_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    -u.ln()
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(DistributionSpec::Uniform01),
            "exp" => Ok(DistributionSpec::Exponential),
            "expint" => Ok(DistributionSpec::ExpIntegral),
            other => match other.strip_prefix("power:") {
                Some(alpha) => {
                    let alpha: f64 = alpha.trim().parse().map_err(|_| {
                        Error::Config(format!("cannot parse exponent in '{other}'"))
                    })?;
                    DistributionSpec::power(alpha)
                }
                None => Err(Error::Config(format!(
                    "unknown distribution '{other}' (expected uniform, power:<alpha>, exp, expint)"
                ))),
            },
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::Uniform01 => f.write_str("uniform"),
            DistributionSpec::PowerIntegrand { alpha } => write!(f, "power:{alpha}"),
            DistributionSpec::Exponential => f.write_str("exp"),
            DistributionSpec::ExpIntegral => f.write_str("expint"),
        }
    }
}

impl Serialize for DistributionSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SeededStream {
    pub seed: u64,
    pub index: u64,
}

impl SeededStream {
    pub fn new(seed: u64, index: u64) -> Self {
        SeededStream { seed, index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        rng
    }

    /// Endless iterator of weights drawn from `spec`.
    pub fn weights(&self, spec: DistributionSpec) -> Weights {
        Weights {
            spec,
            rng: self.rng(),
        }
    }
}

pub struct Weights {
    spec: DistributionSpec,
    rng: ChaCha8Rng,
}

impl Iterator for Weights {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.spec.sample(&mut self.rng))
    }
}
