//! Monte Carlo reduction helpers shared by every estimator.
//!
//! Replicate `i` of an experiment is always driven by `split(seed, i)` and the
//! per-replicate values are collected in index order before any reduction, so
//! estimates do not depend on how rayon schedules the work.

use crate::rng_gauss::{split, Seed};
use num_complex::Complex64;
use rayon::prelude::*;

/// Monte Carlo estimate of an expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by `sqrt(samples)`.
    pub std_error: f64,
    pub samples: usize,
    /// Moment exponent for estimates of `E|A|^{2q}`; `None` for probabilities
    /// and other expectations.
    pub q: Option<f64>,
    pub seed: Seed,
}

impl MomentEstimate {
    /// Reduces per-replicate values. Requires at least two values.
    pub fn from_values(values: &[f64], q: Option<f64>, seed: Seed) -> Self {
        assert!(values.len() >= 2, "an estimate needs at least two samples");
        let n = values.len() as f64;
        let mean = pairwise_sum(values) / n;
        let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1.0);
        Self {
            mean,
            std_error: (var / n).sqrt(),
            samples: values.len(),
            q,
            seed,
        }
    }

    /// Scales mean and error by a deterministic constant.
    pub fn scaled(self, c: f64) -> Self {
        Self {
            mean: self.mean * c,
            std_error: self.std_error * c.abs(),
            ..self
        }
    }

    /// `|mean - target| <= k * std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }

    /// Number of combined standard errors separating two independent estimates.
    pub fn z_distance(&self, other: &MomentEstimate) -> f64 {
        let se = self.std_error.hypot(other.std_error);
        if se == 0.0 {
            if self.mean == other.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - other.mean).abs() / se
        }
    }
}

/// Estimate of a complex expectation, with separate errors per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub mean: Complex64,
    pub std_error_re: f64,
    pub std_error_im: f64,
    pub samples: usize,
    pub seed: Seed,
}

impl ComplexEstimate {
    pub fn from_values(values: &[Complex64], seed: Seed) -> Self {
        let re: Vec<f64> = values.iter().map(|z| z.re).collect();
        let im: Vec<f64> = values.iter().map(|z| z.im).collect();
        let r = MomentEstimate::from_values(&re, None, seed);
        let i = MomentEstimate::from_values(&im, None, seed);
        Self {
            mean: Complex64::new(r.mean, i.mean),
            std_error_re: r.std_error,
            std_error_im: i.std_error,
            samples: values.len(),
            seed,
        }
    }

    /// Both components within `k` standard errors of zero.
    pub fn consistent_with_zero(&self, k: f64) -> bool {
        self.mean.re.abs() <= k * self.std_error_re && self.mean.im.abs() <= k * self.std_error_im
    }
}

/// Pairwise (cascade) summation; error grows like `O(log n)` rather than `O(n)`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let (a, b) = values.split_at(values.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Evaluates `f(split(seed, i))` for `i in 0..samples` on the current rayon pool,
/// returning results in replicate order.
pub fn map_replicates<T, F>(seed: Seed, samples: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, Seed) -> T + Sync + Send,
{
    (0..samples as u64)
        .into_par_iter()
        .map(|i| f(i, split(seed, i)))
        .collect()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sample Kolmogorov–Smirnov statistic.
#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic: f64,
    pub n: usize,
    pub m: usize,
}

impl KsResult {
    /// Asymptotic critical value `c(alpha) sqrt((n+m)/(nm))`.
    pub fn critical_value(&self, alpha: f64) -> f64 {
        let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
        let (n, m) = (self.n as f64, self.m as f64);
        c * ((n + m) / (n * m)).sqrt()
    }
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    KsResult { statistic: d, n, m }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = MomentEstimate::from_values(&[1.0; 10], Some(0.0), Seed::new(0));
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn estimate_standard_error() {
        let e = MomentEstimate::from_values(&[1.0, 3.0], None, Seed::new(0));
        assert_eq!(e.mean, 2.0);
        // sd = sqrt(2), se = sqrt(2)/sqrt(2) = 1
        assert!((e.std_error - 1.0).abs() < 1e-15);
    }

    #[test]
    fn replicates_independent_of_pool_size() {
        let f = |_: u64, s: Seed| s.stream().next_complex_gaussian().re;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| map_replicates(Seed::new(5), 1000, f));
        let b = four.install(|| map_replicates(Seed::new(5), 1000, f));
        assert_eq!(a, b);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        let v = normal_cdf(std::f64::consts::SQRT_2);
        assert!((v - 0.921_350_396_474_857_5).abs() < 1e-12, "{v}");
    }

    #[test]
    fn ks_identical_samples_zero() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a).statistic, 0.0);
        let b = [10.0, 11.0, 12.0];
        assert_eq!(ks_two_sample(&a, &b).statistic, 1.0);
    }
}
