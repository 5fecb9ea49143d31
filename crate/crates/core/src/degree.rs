//! Degree selection for coded symbols.
//!
//! When the sender knows that `y` of `x` candidate symbols are undelivered
//! but not which ones, a coded symbol of degree `d` drawn uniformly from the
//! candidates recovers exactly one symbol when exactly one of its `d` members
//! is undelivered. That probability is hypergeometric:
//!
//! ```text
//! P(x, y, d) = y * C(x - y, d - 1) / C(x, d)
//! ```
//!
//! [`degree_select`] returns the smallest maximizing `d`. The search space is
//! tiny (`x` never exceeds the delay tolerance), so the maximization is done
//! in exact integer arithmetic and cached in a [`DegreeTable`].

use rand::Rng;

use crate::error::{Error, Result};

/// Exact binomial coefficient. Callers keep `n` small (at most a few dozen).
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn check_domain(x: u64, y: u64) -> Result<()> {
    if !(x > y && y > 0) {
        return Err(Error::Domain(format!("degree selection needs x > y > 0, got x={x}, y={y}")));
    }
    Ok(())
}

/// Recovery probability as an exact fraction `(numerator, denominator)`.
pub fn recovery_ratio(x: u64, y: u64, d: u64) -> Result<(u128, u128)> {
    check_domain(x, y)?;
    if d == 0 || d > x {
        return Err(Error::Domain(format!("degree must lie in [1, {x}], got {d}")));
    }
    let num = y as u128 * binomial(x - y, d - 1);
    Ok((num, binomial(x, d)))
}

/// Probability that a uniformly drawn degree-`d` subset of `x` symbols holds
/// exactly one of the `y` undelivered ones.
pub fn recovery_probability(x: u64, y: u64, d: u64) -> Result<f64> {
    let (num, den) = recovery_ratio(x, y, d)?;
    Ok(num as f64 / den as f64)
}

/// Degree maximizing [`recovery_probability`]; ties go to the smallest degree.
pub fn degree_select(x: u64, y: u64) -> Result<u64> {
    check_domain(x, y)?;
    let mut best = 1;
    let (mut best_num, mut best_den) = recovery_ratio(x, y, 1)?;
    // Beyond x - y + 1 the numerator is zero.
    for d in 2..=(x - y + 1) {
        let (num, den) = recovery_ratio(x, y, d)?;
        if num * best_den > best_num * den {
            best = d;
            best_num = num;
            best_den = den;
        }
    }
    Ok(best)
}

/// Precomputed [`degree_select`] values for all `x > y > 0` with `x <= q_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeTable {
    q_max: u64,
    // Row x holds y = 1..x at offset (x-1)(x-2)/2.
    entries: Vec<u8>,
}

impl DegreeTable {
    pub fn build(q_max: u64) -> Result<DegreeTable> {
        if q_max < 2 {
            return Err(Error::Domain(format!("degree table needs q_max >= 2, got {q_max}")));
        }
        if q_max > 255 {
            return Err(Error::Domain(format!("degree table supports q_max <= 255, got {q_max}")));
        }
        let mut entries = Vec::with_capacity((q_max * (q_max - 1) / 2) as usize);
        for x in 2..=q_max {
            for y in 1..x {
                entries.push(degree_select(x, y)? as u8);
            }
        }
        Ok(DegreeTable { q_max, entries })
    }

    pub fn q_max(&self) -> u64 {
        self.q_max
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cached degree, or `None` outside the table's domain.
    pub fn lookup(&self, x: u64, y: u64) -> Option<u64> {
        if !(x > y && y > 0 && x <= self.q_max) {
            return None;
        }
        let idx = (x - 1) * (x - 2) / 2 + (y - 1);
        self.entries.get(idx as usize).map(|&d| d as u64)
    }

    /// Cached degree, falling back to direct evaluation beyond `q_max`.
    pub fn degree(&self, x: u64, y: u64) -> Result<u64> {
        match self.lookup(x, y) {
            Some(d) => Ok(d),
            None => degree_select(x, y),
        }
    }

    /// All `(x, y, d)` rows in ascending `x`, then `y`.
    pub fn rows(&self) -> impl Iterator<Item = (u64, u64, u64)> + '_ {
        (2..=self.q_max)
            .flat_map(|x| (1..x).map(move |y| (x, y)))
            .zip(self.entries.iter())
            .map(|((x, y), &d)| (x, y, d as u64))
    }
}

/// Degree drawn uniformly from `1..=z`, used when no feedback is available.
pub fn uniform_degree<R: Rng + ?Sized>(z: u64, rng: &mut R) -> Result<u64> {
    if z < 1 {
        return Err(Error::Domain("uniform degree range [1, z] needs z >= 1".into()));
    }
    Ok(rng.random_range(1..=z))
}
