//! Random multiplicative functions over the integers and over `F_q[t]`.
//!
//! A Steinhaus function assigns independent uniform unit-circle values to the
//! primes and extends them completely multiplicatively, so
//! `E|sum_{n<=x} f(n)|^2 = floor(x)`.
//!
//! Over `F_q[t]` the same construction on monic irreducibles gives
//! `A(n) = q^{-n/2} sum_{F monic, deg F = n} f(F)`, the coefficients of
//! `exp(sum_k X(k) z^k / sqrt(k))` with
//! `X(k) = (sqrt(k) / q^{k/2}) sum_{deg P | k} f(P)^{k/deg P} / (k/deg P)`.
//! Field arithmetic is implemented for prime `q`; irreducible counts accept
//! any prime power.

use crate::error::{ensure, Error, Result};
use crate::rng_gauss::{GaussianStream, Seed};
use crate::series::{exp_series, multiply, ComplexSeries};
use crate::stats::{map_replicates, MomentEstimate};
use num_complex::Complex64;
use std::sync::Arc;

/// Largest `x` accepted by the Steinhaus model.
pub const STEINHAUS_MAX_X: f64 = 1e8;

/// Largest `q^N` accepted by the function-field model.
pub const FF_BUDGET: u128 = 10_000_000;

/// Smallest-prime-factor table for `1..=limit`.
#[derive(Debug, Clone)]
pub struct Sieve {
    spf: Vec<u32>,
}

impl Sieve {
    pub fn new(limit: usize) -> Self {
        let mut spf = vec![0u32; limit + 1];
        let mut primes: Vec<u32> = Vec::new();
        for i in 2..=limit {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            for &p in &primes {
                let m = i * p as usize;
                if p > spf[i] || m > limit {
                    break;
                }
                spf[m] = p;
            }
        }
        if limit >= 1 {
            spf[1] = 1;
        }
        Self { spf }
    }

    pub fn limit(&self) -> usize {
        self.spf.len() - 1
    }

    /// Smallest prime factor of `n >= 2`.
    pub fn smallest_factor(&self, n: usize) -> usize {
        self.spf[n] as usize
    }

    pub fn is_prime(&self, n: usize) -> bool {
        n >= 2 && self.spf[n] as usize == n
    }

    pub fn primes(&self) -> Vec<usize> {
        (2..=self.limit()).filter(|&n| self.is_prime(n)).collect()
    }

    /// `(p, exponent)` pairs in increasing order of `p`.
    pub fn factor(&self, mut n: usize) -> Vec<(usize, u32)> {
        let mut out: Vec<(usize, u32)> = Vec::new();
        while n > 1 {
            let p = self.smallest_factor(n);
            match out.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => out.push((p, 1)),
            }
            n /= p;
        }
        out
    }
}

/// One Steinhaus function on `1..=floor(x)`.
#[derive(Debug, Clone)]
pub struct SteinhausModel {
    pub x: f64,
    /// `values[n] = f(n)`; `values[0]` is unused.
    values: Vec<Complex64>,
    pub seed: Seed,
}

impl SteinhausModel {
    /// Draws `f(p)` for the primes `p <= x` in increasing order from the stream
    /// of `seed`, then fills `f(n) = f(spf(n)) f(n / spf(n))`.
    pub fn sample(sieve: &Sieve, x: f64, seed: Seed) -> Result<Self> {
        ensure!(x >= 1.0, "Steinhaus sums need x >= 1, got {x}");
        let n = x.floor() as usize;
        ensure!(n <= sieve.limit(), "sieve covers {} but x = {x}", sieve.limit());
        let mut stream = GaussianStream::new(seed);
        let mut values = vec![Complex64::new(0.0, 0.0); n + 1];
        values[1] = Complex64::new(1.0, 0.0);
        for m in 2..=n {
            let p = sieve.smallest_factor(m);
            values[m] = if p == m {
                stream.next_unit_phase()
            } else {
                values[p] * values[m / p]
            };
        }
        Ok(Self { x, values, seed })
    }

    pub fn value(&self, n: usize) -> Complex64 {
        self.values[n]
    }

    pub fn partial_sum(&self) -> Complex64 {
        self.values[1..].iter().sum()
    }
}

fn steinhaus_sieve(x: f64) -> Result<Sieve> {
    ensure!(x >= 1.0, "Steinhaus sums need x >= 1, got {x}");
    ensure!(x <= STEINHAUS_MAX_X, "x = {x} exceeds the limit {STEINHAUS_MAX_X}");
    Ok(Sieve::new(x.floor() as usize))
}

/// `sum_{n<=x} f(n)` for the Steinhaus function seeded by `seed`.
pub fn steinhaus_partial_sum(x: f64, seed: Seed) -> Result<Complex64> {
    Ok(SteinhausModel::sample(&steinhaus_sieve(x)?, x, seed)?.partial_sum())
}

/// Estimates of `E|S(x)|^2` and `E|S(x)|` from the same replicates.
pub fn steinhaus_moments(x: f64, samples: usize, seed: Seed) -> Result<(MomentEstimate, MomentEstimate)> {
    ensure!(samples >= 2, "need at least 2 samples");
    let sieve = steinhaus_sieve(x)?;
    let abs: Vec<f64> = map_replicates(seed, samples, |_, s| {
        SteinhausModel::sample(&sieve, x, s).expect("x checked").partial_sum().norm()
    });
    let sq: Vec<f64> = abs.iter().map(|a| a * a).collect();
    Ok((
        MomentEstimate::from_values(&sq, Some(1.0), seed),
        MomentEstimate::from_values(&abs, Some(0.5), seed),
    ))
}

/// `(log log x)^{1/4} / sqrt(x)`, which makes `E|S(x)|` order one. Needs `x > e`.
pub fn steinhaus_compensation(x: f64) -> f64 {
    x.ln().ln().powf(0.25) / x.sqrt()
}

/// `Some((p, e))` when `q = p^e` with `p` prime and `e >= 1`.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..).take_while(|d| d * d <= q).find(|d| q.is_multiple_of(*d)).unwrap_or(q);
    let mut rest = q;
    let mut e = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        e += 1;
    }
    (rest == 1).then_some((p, e))
}

fn mobius(mut n: u64) -> i32 {
    let mut sign = 1;
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            n /= d;
            if n.is_multiple_of(d) {
                return 0;
            }
            sign = -sign;
        }
        d += 1;
    }
    if n > 1 {
        -sign
    } else {
        sign
    }
}

/// `|P_n| = (1/n) sum_{d|n} mu(d) q^{n/d}`, the number of monic irreducibles
/// of degree `n` over `F_q`.
pub fn count_irreducibles(q: u64, n: u32) -> Result<u128> {
    prime_power(q).ok_or(Error::InvalidFieldSize(q))?;
    ensure!(n >= 1, "degree must be at least 1");
    let mut total: i128 = 0;
    for d in (1..=n).filter(|d| n.is_multiple_of(*d)) {
        let term = (q as i128)
            .checked_pow(n / d)
            .ok_or(Error::Overflow("q^(n/d) in count_irreducibles"))?;
        total = total
            .checked_add(mobius(d as u64) as i128 * term)
            .ok_or(Error::Overflow("Mobius sum in count_irreducibles"))?;
    }
    Ok((total / n as i128) as u128)
}

fn check_prime_field(q: u64) -> Result<()> {
    match prime_power(q) {
        Some((_, 1)) if q < 1 << 16 => Ok(()),
        Some(_) => Err(Error::Precondition(format!(
            "field arithmetic is implemented for prime q < 65536, got q = {q}"
        ))),
        None => Err(Error::InvalidFieldSize(q)),
    }
}

fn check_budget(q: u64, n: u32) -> Result<u128> {
    let terms = (q as u128).checked_pow(n).unwrap_or(u128::MAX);
    if terms > FF_BUDGET {
        return Err(Error::BudgetExceeded {
            terms,
            limit: FF_BUDGET,
        });
    }
    Ok(terms)
}

/// Coefficients `c_0..c_{d-1}` of the monic polynomial with base-`q` digits `local`.
fn digits(mut local: u64, d: usize, q: u64) -> Vec<u64> {
    let mut c = Vec::with_capacity(d + 1);
    for _ in 0..d {
        c.push(local % q);
        local /= q;
    }
    c.push(1);
    c
}

/// Remainder of `a` modulo the monic `b`.
fn rem_monic(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = *r.last().expect("nonempty");
        let shift = r.len() - 1 - db;
        if lead != 0 {
            for (i, &bi) in b.iter().enumerate() {
                r[shift + i] = (r[shift + i] + (q - lead) * bi) % q;
            }
        }
        r.pop();
    }
    r
}

/// Number of monic irreducibles of degree `n` over `F_q` (prime `q`) by trial
/// division of every monic of degree `n` by every monic of degree `1..=n/2`.
pub fn count_irreducibles_brute(q: u64, n: u32) -> Result<u128> {
    check_prime_field(q)?;
    ensure!(n >= 1, "degree must be at least 1");
    check_budget(q, n)?;
    let n = n as usize;
    let divisors: Vec<Vec<u64>> = (1..=n / 2)
        .flat_map(|d| (0..q.pow(d as u32)).map(move |l| digits(l, d, q)))
        .collect();
    let count = (0..q.pow(n as u32))
        .filter(|&l| {
            let f = digits(l, n, q);
            divisors.iter().all(|g| rem_monic(&f, g, q).iter().any(|&c| c != 0))
        })
        .count();
    Ok(count as u128)
}

/// Monic polynomials over `F_q` up to degree `N`, indexed by degree then by
/// base-`q` digits, with a smallest-irreducible-factor table.
#[derive(Debug, Clone)]
pub struct FieldTables {
    pub q: u64,
    pub n_max: u32,
    /// `offsets[d]` is the index of the first monic of degree `d`.
    offsets: Vec<usize>,
    /// Smallest irreducible factor of each monic (itself when irreducible).
    spf: Vec<u32>,
    /// `F / spf(F)`.
    quotient: Vec<u32>,
    /// Indices of irreducibles in canonical order.
    irreducibles: Vec<u32>,
}

impl FieldTables {
    /// Builds the tables by sieving: monics not reached as products of
    /// lower-degree irreducibles are irreducible.
    pub fn new(q: u64, n_max: u32) -> Result<Self> {
        check_prime_field(q)?;
        check_budget(q, n_max)?;
        let n = n_max as usize;
        let mut offsets = vec![0usize; n + 2];
        for d in 0..=n {
            offsets[d + 1] = offsets[d] + q.pow(d as u32) as usize;
        }
        let total = offsets[n + 1];
        let mut spf = vec![u32::MAX; total];
        let mut quotient = vec![0u32; total];
        spf[0] = 0;
        let mut irreducibles = Vec::new();
        for d in 1..=n {
            for idx in offsets[d]..offsets[d + 1] {
                if spf[idx] != u32::MAX {
                    continue;
                }
                spf[idx] = idx as u32;
                irreducibles.push(idx as u32);
                let p = digits((idx - offsets[d]) as u64, d, q);
                for e in 0..=n - d {
                    for local in 0..q.pow(e as u32) {
                        let g = digits(local, e, q);
                        let f = poly_mul(&p, &g, q);
                        let fi = offsets[d + e] + local_index(&f, q);
                        if spf[fi] == u32::MAX {
                            spf[fi] = idx as u32;
                            quotient[fi] = (offsets[e] + local as usize) as u32;
                        }
                    }
                }
                // P itself was marked with quotient 1 by e = 0
            }
        }
        Ok(Self {
            q,
            n_max,
            offsets,
            spf,
            quotient,
            irreducibles,
        })
    }

    pub fn len(&self) -> usize {
        self.spf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spf.is_empty()
    }

    pub fn degree(&self, index: usize) -> usize {
        self.offsets.partition_point(|&o| o <= index) - 1
    }

    pub fn index_range(&self, d: usize) -> std::ops::Range<usize> {
        self.offsets[d]..self.offsets[d + 1]
    }

    pub fn irreducibles(&self) -> &[u32] {
        &self.irreducibles
    }

    pub fn is_irreducible(&self, index: usize) -> bool {
        index > 0 && self.spf[index] as usize == index
    }

    /// Coefficients of the monic with this index, constant term first.
    pub fn poly(&self, index: usize) -> Vec<u64> {
        let d = self.degree(index);
        digits((index - self.offsets[d]) as u64, d, self.q)
    }

    /// Irreducible factors with multiplicity, smallest first.
    pub fn factor(&self, mut index: usize) -> Vec<usize> {
        let mut out = Vec::new();
        while index != 0 {
            out.push(self.spf[index] as usize);
            index = self.quotient[index] as usize;
        }
        out
    }

    pub fn irreducible_count(&self, d: usize) -> usize {
        self.irreducibles.iter().filter(|&&i| self.degree(i as usize) == d).count()
    }
}

fn poly_mul(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    let mut c = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            c[i + j] = (c[i + j] + x * y) % q;
        }
    }
    c
}

/// Base-`q` index of the non-leading coefficients of a monic polynomial.
fn local_index(f: &[u64], q: u64) -> usize {
    f[..f.len() - 1].iter().rev().fold(0usize, |acc, &c| acc * q as usize + c as usize)
}

/// One random completely multiplicative `f` on monics of degree `<= N`.
#[derive(Debug, Clone)]
pub struct FFModel {
    tables: Arc<FieldTables>,
    values: Vec<Complex64>,
    pub seed: Seed,
}

impl FFModel {
    /// Assigns unit phases to irreducibles in canonical order (degree, then
    /// index) from the stream of `seed`.
    pub fn sample(tables: Arc<FieldTables>, seed: Seed) -> Self {
        let mut stream = GaussianStream::new(seed);
        let mut values = vec![Complex64::new(0.0, 0.0); tables.len()];
        values[0] = Complex64::new(1.0, 0.0);
        for i in 1..tables.len() {
            values[i] = if tables.is_irreducible(i) {
                stream.next_unit_phase()
            } else {
                values[tables.spf[i] as usize] * values[tables.quotient[i] as usize]
            };
        }
        Self { tables, values, seed }
    }

    pub fn new(q: u64, n_max: u32, seed: Seed) -> Result<Self> {
        Ok(Self::sample(Arc::new(FieldTables::new(q, n_max)?), seed))
    }

    pub fn tables(&self) -> &FieldTables {
        &self.tables
    }

    /// `f(F)` for the monic with this index.
    pub fn value(&self, index: usize) -> Complex64 {
        self.values[index]
    }

    /// `A(0..=N)`.
    pub fn a_coefficients(&self) -> Vec<Complex64> {
        let q = self.tables.q as f64;
        (0..=self.tables.n_max as usize)
            .map(|d| {
                let s: Complex64 = self.values[self.tables.index_range(d)].iter().sum();
                s * q.powf(-(d as f64) / 2.0)
            })
            .collect()
    }

    /// `X(k)` for `1 <= k <= N`.
    pub fn x(&self, k: usize) -> Result<Complex64> {
        ensure!(
            k >= 1 && k <= self.tables.n_max as usize,
            "X(k) needs 1 <= k <= N = {}, got {k}",
            self.tables.n_max
        );
        let mut s = Complex64::new(0.0, 0.0);
        for &p in self.tables.irreducibles() {
            let d = self.tables.degree(p as usize);
            if k.is_multiple_of(d) {
                let r = k / d;
                s += self.values[p as usize].powu(r as u32) / r as f64;
            }
        }
        let kf = k as f64;
        Ok(s * kf.sqrt() / (self.tables.q as f64).powf(kf / 2.0))
    }

    /// Coefficients of `prod_P (1 - f(P) (z / sqrt(q))^{deg P})^{-1}` to degree `N`.
    pub fn euler_product(&self) -> Vec<Complex64> {
        let n = self.tables.n_max as usize;
        let scale = (self.tables.q as f64).sqrt().recip();
        let mut acc = ComplexSeries::one(n);
        for &p in self.tables.irreducibles() {
            let d = self.tables.degree(p as usize);
            let a = self.values[p as usize] * scale.powi(d as i32);
            let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
            let mut w = Complex64::new(1.0, 0.0);
            for j in (0..=n).step_by(d) {
                c[j] = w;
                w *= a;
            }
            acc = multiply(&acc, &ComplexSeries::new(c), n);
        }
        (0..=n).map(|i| acc.coeff(i)).collect()
    }

    /// Coefficients of `exp(sum_{k<=N} X(k) z^k / sqrt(k))` to degree `N`.
    pub fn exp_identity(&self) -> Result<Vec<Complex64>> {
        let n = self.tables.n_max as usize;
        let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
        for (k, ck) in c.iter_mut().enumerate().skip(1) {
            *ck = self.x(k)? / (k as f64).sqrt();
        }
        let e = exp_series(&ComplexSeries::new(c), n)?;
        Ok((0..=n).map(|i| e.coeff(i)).collect())
    }
}

/// `A(N) = q^{-N/2} sum_{F in M_N} f(F)` for the model seeded by `seed`.
pub fn ff_a(q: u64, n: u32, seed: Seed) -> Result<Complex64> {
    Ok(FFModel::new(q, n, seed)?.a_coefficients()[n as usize])
}

/// `X(k)` for the model seeded by `seed`.
pub fn ff_x(q: u64, k: u32, seed: Seed) -> Result<Complex64> {
    ensure!(k >= 1, "X(k) needs k >= 1");
    FFModel::new(q, k, seed)?.x(k as usize)
}

/// `|A(N)|` over `samples` independently seeded models sharing one table.
pub fn ff_abs_a_samples(q: u64, n: u32, samples: usize, seed: Seed) -> Result<Vec<f64>> {
    let tables = Arc::new(FieldTables::new(q, n)?);
    Ok(map_replicates(seed, samples, |_, s| {
        FFModel::sample(Arc::clone(&tables), s).a_coefficients()[n as usize].norm()
    }))
}

/// Estimate of `E|A(N)|^2` in the function-field model.
pub fn ff_second_moment(q: u64, n: u32, samples: usize, seed: Seed) -> Result<MomentEstimate> {
    ensure!(samples >= 2, "need at least 2 samples");
    let sq: Vec<f64> = ff_abs_a_samples(q, n, samples, seed)?.iter().map(|a| a * a).collect();
    Ok(MomentEstimate::from_values(&sq, Some(1.0), seed))
}

/// `X(k)` over `samples` independently seeded models sharing one table.
pub fn ff_x_samples(q: u64, k: u32, samples: usize, seed: Seed) -> Result<Vec<Complex64>> {
    ensure!(k >= 1, "X(k) needs k >= 1");
    let tables = Arc::new(FieldTables::new(q, k)?);
    Ok(map_replicates(seed, samples, |_, s| {
        FFModel::sample(Arc::clone(&tables), s).x(k as usize).expect("k within table")
    }))
}
