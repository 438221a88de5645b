//! Truncated complex power series.
//!
//! All operations are exact truncations: coefficient `n <= D` of a result agrees
//! with the coefficient of the untruncated formal operation.
//!
//! Exponentiation has two engines. [`ExpEngine::Recurrence`] evaluates
//! `n E_n = sum_{k=1}^n k s_k E_{n-k}` directly in `O(D^2)`. [`ExpEngine::Relaxed`]
//! evaluates the same recurrence by divide and conquer over the output index,
//! pushing the contribution of each finished left half into the right half with
//! one (FFT) convolution, for `O(D log^2 D)`.

use crate::error::{ensure, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

/// Below this operand length multiplication is schoolbook.
pub const FFT_THRESHOLD: usize = 64;

/// Blocks of the relaxed exponential at or below this size are solved directly.
const RELAXED_LEAF: usize = 32;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries {
    coeffs: Vec<Complex64>,
}

impl ComplexSeries {
    /// Series with the given coefficients `c_0..c_D`. An empty vector is the zero
    /// series of degree bound 0.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero(degree_bound: usize) -> Self {
        Self::new(vec![ZERO; degree_bound + 1])
    }

    pub fn one(degree_bound: usize) -> Self {
        let mut s = Self::zero(degree_bound);
        s.coeffs[0] = ONE;
        s
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient `n`, zero beyond the degree bound.
    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or(ZERO)
    }

    /// Copy truncated or zero-padded to degree bound `d`.
    pub fn truncated(&self, d: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(d + 1, ZERO);
        Self::new(c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.degree_bound().max(other.degree_bound());
        Self::new((0..=d).map(|n| self.coeff(n) + other.coeff(n)).collect())
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }
}

/// Product truncated to degree `d`.
pub fn multiply(a: &ComplexSeries, b: &ComplexSeries, d: usize) -> ComplexSeries {
    let la = a.coeffs.len().min(d + 1);
    let lb = b.coeffs.len().min(d + 1);
    let mut out = convolve(&a.coeffs[..la], &b.coeffs[..lb]);
    out.resize(d + 1, ZERO);
    ComplexSeries::new(out)
}

/// Full linear convolution, schoolbook or FFT depending on operand size.
pub fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len().min(b.len()) < FFT_THRESHOLD {
        convolve_schoolbook(a, b)
    } else {
        convolve_fft(a, b)
    }
}

fn convolve_schoolbook(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == ZERO {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn convolve_fft(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let len = a.len() + b.len() - 1;
    let size = len.next_power_of_two();
    let mut fa = vec![ZERO; size];
    let mut fb = vec![ZERO; size];
    fa[..a.len()].copy_from_slice(a);
    fb[..b.len()].copy_from_slice(b);
    let (fwd, inv) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(size), p.plan_fft_inverse(size))
    });
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa.truncate(len);
    for x in &mut fa {
        *x *= scale;
    }
    fa
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExpEngine {
    /// Direct `O(D^2)` coefficient recurrence; the reference engine.
    Recurrence,
    /// Divide-and-conquer evaluation of the same recurrence with FFT convolutions.
    #[default]
    Relaxed,
}

/// `exp(s)` to degree `d`, using the default (fast) engine.
pub fn exp_series(s: &ComplexSeries, d: usize) -> Result<ComplexSeries> {
    exp_series_with(s, d, ExpEngine::default())
}

pub fn exp_series_with(s: &ComplexSeries, d: usize, engine: ExpEngine) -> Result<ComplexSeries> {
    ensure!(
        s.coeff(0) == ZERO,
        "exp_series needs a zero constant term, got {}",
        s.coeff(0)
    );
    // b_k = k s_k, the coefficients of z s'(z)
    let b: Vec<Complex64> = (0..=d).map(|k| s.coeff(k) * k as f64).collect();
    let e = match engine {
        ExpEngine::Recurrence => exp_recurrence(&b),
        ExpEngine::Relaxed => exp_relaxed(&b),
    };
    Ok(ComplexSeries::new(e))
}

fn exp_recurrence(b: &[Complex64]) -> Vec<Complex64> {
    let d = b.len() - 1;
    let mut e = vec![ZERO; d + 1];
    e[0] = ONE;
    for n in 1..=d {
        let mut acc = ZERO;
        for k in 1..=n {
            acc += b[k] * e[n - k];
        }
        e[n] = acc / n as f64;
    }
    e
}

fn exp_relaxed(b: &[Complex64]) -> Vec<Complex64> {
    let len = b.len();
    let mut e = vec![ZERO; len];
    // acc[n] collects sum_{j < block start} e_j b_{n-j}
    let mut acc = vec![ZERO; len];
    relaxed_block(b, &mut e, &mut acc, 0, len);
    e
}

fn relaxed_block(b: &[Complex64], e: &mut [Complex64], acc: &mut [Complex64], lo: usize, hi: usize) {
    if hi - lo <= RELAXED_LEAF {
        for n in lo..hi {
            if n == 0 {
                e[0] = ONE;
                continue;
            }
            let mut s = acc[n];
            for j in lo..n {
                s += e[j] * b[n - j];
            }
            e[n] = s / n as f64;
        }
        return;
    }
    let mid = lo + (hi - lo) / 2;
    relaxed_block(b, e, acc, lo, mid);
    // contribution of e[lo..mid) to n in [mid, hi): offsets n - j in 1..hi-lo
    let conv = convolve(&e[lo..mid], &b[..hi - lo]);
    for n in mid..hi {
        acc[n] += conv[n - lo];
    }
    relaxed_block(b, e, acc, mid, hi);
}

/// `sum_n |c_n|^2 r^{2n}`: the mean of `|f(r e^{i theta})|^2` over the circle.
pub fn parseval_power_sum(f: &ComplexSeries, r: f64) -> f64 {
    let r2 = r * r;
    let mut w = 1.0;
    let mut total = 0.0;
    for c in f.coeffs() {
        total += c.norm_sqr() * w;
        w *= r2;
    }
    total
}

/// Coefficient of `z^N` in `exp(sum_{k<=m} z^k / k)`: the proportion of
/// permutations of `N` points whose cycles all have length at most `m`.
pub fn smooth_partition_weight(n: usize, m: usize) -> Result<f64> {
    ensure!(m >= 1, "smooth_partition_weight needs m >= 1");
    let s: Vec<f64> = (0..=n)
        .map(|k| if k >= 1 && k <= m { 1.0 / k as f64 } else { 0.0 })
        .collect();
    let e = exp_series_with(&ComplexSeries::from_real(&s), n, ExpEngine::Recurrence)?;
    Ok(e.coeff(n).re)
}

/// Rankin-type upper bound `r^{-N} exp(sum_{k<=m} r^k / k)` for
/// [`smooth_partition_weight`].
pub fn rankin_bound(n: usize, m: usize, r: f64) -> Result<f64> {
    ensure!(n >= 1 && m >= 1, "rankin_bound needs N >= 1 and m >= 1");
    ensure!(r > 0.0, "rankin_bound needs r > 0, got {r}");
    let mut log = -(n as f64) * r.ln();
    let mut rk = 1.0;
    for k in 1..=m {
        rk *= r;
        log += rk / k as f64;
    }
    Ok(log.exp())
}
