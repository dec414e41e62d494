use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Upper bound on `n^k` for brute-force enumeration.
pub const MAX_TUPLES: u64 = 200_000;

/// Exponents `(p1, ..., pk)` of a multiple sum, `1 <= k <= 4`, each `p >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(powers: impl Into<Vec<u32>>) -> Result<Self> {
        let powers = powers.into();
        if powers.is_empty() || powers.len() > 4 {
            return Err(Error::Config(format!(
                "multi-index needs 1 to 4 entries, got {}",
                powers.len()
            )));
        }
        if powers.contains(&0) {
            return Err(Error::Config("multi-index powers must be >= 1".into()));
        }
        Ok(MultiIndex(powers))
    }

    pub fn powers(&self) -> &[u32] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    /// The `k` indices obtained by adding `q` to one position at a time.
    pub fn bumped(&self, q: u32) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.0.len()).map(move |i| {
            let mut p = self.0.clone();
            p[i] += q;
            MultiIndex(p)
        })
    }

    /// `(p1, ..., pk, q)`, or `None` if that would exceed four entries.
    pub fn appended(&self, q: u32) -> Option<MultiIndex> {
        (self.0.len() < 4).then(|| {
            let mut p = self.0.clone();
            p.push(q);
            MultiIndex(p)
        })
    }
}

fn check_cost(n: usize, k: usize) -> Result<()> {
    let tuples = (n as u64).checked_pow(k as u32).unwrap_or(u64::MAX);
    if tuples > MAX_TUPLES {
        Err(Error::TooExpensive {
            n,
            k,
            cap: MAX_TUPLES,
        })
    } else {
        Ok(())
    }
}

/// Visits every ordered tuple of pairwise distinct indices.
fn for_each_distinct(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(n: usize, k: usize, tuple: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if tuple.len() == k {
            visit(tuple);
            return;
        }
        for j in 0..n {
            if !tuple.contains(&j) {
                tuple.push(j);
                rec(n, k, tuple, visit);
                tuple.pop();
            }
        }
    }
    rec(n, k, &mut Vec::with_capacity(k), &mut visit);
}

/// `S_{p1..pk}` over real weights.
pub fn multiple_sum(weights: &[f64], idx: &MultiIndex) -> Result<f64> {
    check_cost(weights.len(), idx.k())?;
    let mut total = 0.0;
    for_each_distinct(weights.len(), idx.k(), |t| {
        total += t
            .iter()
            .zip(idx.powers())
            .map(|(&j, &p)| weights[j].powi(p as i32))
            .product::<f64>();
    });
    Ok(total)
}

/// `S_{p1..pk}` over integer weights, computed exactly.
pub fn multiple_sum_exact(weights: &[i64], idx: &MultiIndex) -> Result<BigInt> {
    check_cost(weights.len(), idx.k())?;
    let mut total = BigInt::zero();
    for_each_distinct(weights.len(), idx.k(), |t| {
        let mut term = BigInt::one();
        for (&j, &p) in t.iter().zip(idx.powers()) {
            term *= num_traits::pow(BigInt::from(weights[j]), p as usize);
        }
        total += term;
    });
    Ok(total)
}

/// Checks `S_{p1..pk} · S_q = Σ_i S_{..p_i+q..} + S_{p1..pk,q}` exactly.
///
/// For `k = 4` the appended term would need five indices; it is dropped
/// only when it vanishes identically (fewer than five points).
pub fn verify_product_rule_exact(weights: &[i64], idx: &MultiIndex, q: u32) -> Result<bool> {
    let single = MultiIndex::new(vec![q])?;
    let lhs = multiple_sum_exact(weights, idx)? * multiple_sum_exact(weights, &single)?;
    let mut rhs = BigInt::zero();
    for bumped in idx.bumped(q) {
        rhs += multiple_sum_exact(weights, &bumped)?;
    }
    match idx.appended(q) {
        Some(longer) => rhs += multiple_sum_exact(weights, &longer)?,
        None if weights.len() > 4 => {
            return Err(Error::Config(
                "product rule with k = 4 needs a five-index sum".into(),
            ))
        }
        None => {}
    }
    Ok(lhs == rhs)
}

/// Floating-point product rule check to relative `1e-12`.
pub fn verify_product_rule(weights: &[f64], idx: &MultiIndex, q: u32) -> Result<bool> {
    let single = MultiIndex::new(vec![q])?;
    let lhs = multiple_sum(weights, idx)? * multiple_sum(weights, &single)?;
    let mut rhs = 0.0;
    let mut magnitude = 0.0;
    for bumped in idx.bumped(q) {
        let v = multiple_sum(weights, &bumped)?;
        rhs += v;
        magnitude += v.abs();
    }
    match idx.appended(q) {
        Some(longer) => {
            let v = multiple_sum(weights, &longer)?;
            rhs += v;
            magnitude += v.abs();
        }
        None if weights.len() > 4 => {
            return Err(Error::Config(
                "product rule with k = 4 needs a five-index sum".into(),
            ))
        }
        None => {}
    }
    let scale = magnitude.max(lhs.abs());
    Ok((lhs - rhs).abs() <= 1e-12 * scale)
}
