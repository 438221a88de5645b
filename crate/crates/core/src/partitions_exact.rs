//! The partition expansion of `A(N)`.
//!
//! Expanding the exponential gives `A(N) = sum_{|lambda| = N} a(lambda)` with
//! `a(lambda) = prod_k (X(k)/sqrt(k))^{m_k} / m_k!`. Distinct partitions are
//! orthogonal and `E|a(lambda)|^2 = prod_k 1/(m_k! k^{m_k})`, which is the
//! proportion of permutations of cycle type `lambda`; summing gives
//! `E|A(N)|^2 = 1` exactly. This module is an oracle: enumeration is capped at
//! `N <= 40` and mass identities use exact rationals.

use crate::error::{ensure, Error, Result};
use crate::rng_gauss::{ComplexSource, GaussianStream, Seed};
use crate::stats::{map_replicates, ComplexEstimate};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Largest `N` accepted by [`enumerate_partitions`].
pub const MAX_ENUMERATION: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    /// Builds a partition from positive parts in any order.
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        ensure!(parts.iter().all(|&p| p > 0), "partition parts must be positive");
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { parts })
    }

    pub fn empty() -> Self {
        Self { parts: Vec::new() }
    }

    /// Parts in nonincreasing order.
    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// `k -> m_k`, the number of parts equal to `k`.
    pub fn multiplicities(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for &p in &self.parts {
            *m.entry(p).or_insert(0) += 1;
        }
        m
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Largest part, 0 for the empty partition.
    pub fn largest(&self) -> usize {
        self.parts.first().copied().unwrap_or(0)
    }
}

impl std::fmt::Display for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "()");
        }
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// All partitions of `n` with parts at most `max_part` (unbounded when `None`),
/// each exactly once, in colexicographic order of the parts.
pub fn enumerate_partitions(n: usize, max_part: Option<usize>) -> Result<Vec<Partition>> {
    ensure!(
        n <= MAX_ENUMERATION,
        "partition enumeration is capped at N <= {MAX_ENUMERATION}, got {n}"
    );
    let cap = max_part.unwrap_or(n).min(n);
    let mut out = Vec::new();
    let mut ascending = Vec::new();
    // build parts smallest-first; lexicographic order on the ascending sequence
    // is colexicographic order on the usual nonincreasing form
    fn rec(rest: usize, min: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition {
                parts: cur.iter().rev().copied().collect(),
            });
            return;
        }
        for p in min..=cap.min(rest) {
            cur.push(p);
            rec(rest - p, p, cap, cur, out);
            cur.pop();
        }
    }
    if n == 0 {
        out.push(Partition::empty());
    } else if cap >= 1 {
        rec(n, 1, cap, &mut ascending, &mut out);
    }
    Ok(out)
}

/// `p(0..=n)` by Euler's pentagonal-number recurrence.
pub fn partition_numbers(n: usize) -> Vec<u128> {
    let mut p = vec![0i128; n + 1];
    p[0] = 1;
    for i in 1..=n {
        let mut sum = 0i128;
        for k in 1.. {
            let g1 = k * (3 * k - 1) / 2;
            if g1 > i {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            sum += sign * p[i - g1];
            let g2 = k * (3 * k + 1) / 2;
            if g2 <= i {
                sum += sign * p[i - g2];
            }
        }
        p[i] = sum;
    }
    p.into_iter().map(|v| v as u128).collect()
}

/// `a(lambda) = prod_k (X(k)/sqrt(k))^{m_k} / m_k!` with `xs[k-1] = X(k)`.
pub fn a_of_partition(lambda: &Partition, xs: &[Complex64]) -> Result<Complex64> {
    let mut v = Complex64::new(1.0, 0.0);
    for (k, m) in lambda.multiplicities() {
        let x = *xs.get(k - 1).ok_or(Error::MissingValue(k))?;
        let base = x / (k as f64).sqrt();
        let mut fact = 1.0;
        for i in 1..=m {
            fact *= i as f64;
        }
        v *= base.powu(m as u32) / fact;
    }
    Ok(v)
}

/// `E|a(lambda)|^2 = prod_k 1/(m_k! k^{m_k})`, exactly.
pub fn diagonal_second_moment(lambda: &Partition) -> BigRational {
    let mut den = BigInt::one();
    for (k, m) in lambda.multiplicities() {
        for i in 1..=m {
            den *= BigInt::from(i);
        }
        den *= BigInt::from(k).pow(m as u32);
    }
    BigRational::new(BigInt::one(), den)
}

/// `sum_{|lambda| = N} E|a(lambda)|^2` in exact arithmetic; equals 1.
pub fn exact_total_mass(n: usize) -> Result<BigRational> {
    Ok(enumerate_partitions(n, None)?
        .iter()
        .map(diagonal_second_moment)
        .fold(BigRational::zero(), |acc, x| acc + x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassRow {
    pub n: usize,
    pub partitions: usize,
    pub total_mass: BigRational,
}

/// `(N, p(N), total mass)` for `1 <= N <= n_max`.
pub fn mass_table(n_max: usize) -> Result<Vec<MassRow>> {
    (1..=n_max)
        .map(|n| {
            let parts = enumerate_partitions(n, None)?;
            let total_mass = parts
                .iter()
                .map(diagonal_second_moment)
                .fold(BigRational::zero(), |acc, x| acc + x);
            Ok(MassRow {
                n,
                partitions: parts.len(),
                total_mass,
            })
        })
        .collect()
}

/// `A(N)` by summing `a(lambda)` over all partitions of `N`.
pub fn partition_sum_a(n: usize, xs: &[Complex64]) -> Result<Complex64> {
    enumerate_partitions(n, None)?
        .iter()
        .try_fold(Complex64::new(0.0, 0.0), |acc, l| Ok(acc + a_of_partition(l, xs)?))
}

/// `A(N)` grouped by the size of the largest part.
#[derive(Debug, Clone, PartialEq)]
pub struct LargestPartDecomposition {
    /// `components[j-1] = A_j(N)`: partitions with `N/2^j < lambda_1 <= N/2^{j-1}`.
    pub components: Vec<Complex64>,
    /// `A~_J(N)`: partitions with `lambda_1 <= N/2^J`.
    pub smooth: Complex64,
    pub total: Complex64,
}

pub fn reconstruct_a_by_largest_part(n: usize, j_max: usize, xs: &[Complex64]) -> Result<LargestPartDecomposition> {
    ensure!(j_max >= 1, "largest-part decomposition needs J >= 1");
    ensure!(j_max < 64, "J = {j_max} is too large");
    ensure!(xs.len() >= n, "need X(k) for k <= {n}, got {} values", xs.len());
    let mut components = vec![Complex64::new(0.0, 0.0); j_max];
    let mut smooth = Complex64::new(0.0, 0.0);
    for lambda in enumerate_partitions(n, None)? {
        let a = a_of_partition(&lambda, xs)?;
        let top = lambda.largest();
        // N/2^j < top <= N/2^{j-1}  <=>  N < top 2^j  and  top 2^{j-1} <= N
        match (1..=j_max).find(|&j| n < top << j && top << (j - 1) <= n) {
            Some(j) => components[j - 1] += a,
            None => smooth += a,
        }
    }
    let total = components.iter().sum::<Complex64>() + smooth;
    Ok(LargestPartDecomposition {
        components,
        smooth,
        total,
    })
}

/// Monte Carlo estimate of `E[a(lambda) conj(a(lambda'))]` for distinct partitions.
pub fn orthogonality_check(
    lambda: &Partition,
    lambda_prime: &Partition,
    samples: usize,
    seed: Seed,
) -> Result<ComplexEstimate> {
    ensure!(
        lambda != lambda_prime,
        "orthogonality_check needs distinct partitions; use diagonal_second_moment for {lambda}"
    );
    ensure!(samples >= 2, "orthogonality_check needs at least 2 samples");
    let depth = lambda.largest().max(lambda_prime.largest());
    let vals: Vec<Complex64> = map_replicates(seed, samples, |_, s| {
        let xs = GaussianStream::new(s).take_n(depth);
        let a = a_of_partition(lambda, &xs).expect("depth covers all parts");
        let b = a_of_partition(lambda_prime, &xs).expect("depth covers all parts");
        a * b.conj()
    });
    Ok(ComplexEstimate::from_values(&vals, seed))
}
