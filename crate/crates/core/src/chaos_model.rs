//! Samplers and Monte Carlo estimators for the chaos coefficients.
//!
//! `A(0), A(1), ...` are the Taylor coefficients of
//! `F_K(z) = exp(sum_{k<=K} X(k) z^k / sqrt(k))`. Because `A(n)` only involves
//! `X(1..n)`, taking `K >= N` gives the untruncated law of `A(0..N)`, and a
//! single sample to degree `D` yields valid samples of every `A(n)`, `n <= D`.

use crate::error::{ensure, Result};
use crate::rng_gauss::{ComplexSource, GaussianStream, Seed};
use crate::series::{exp_series_with, parseval_power_sum, ComplexSeries, ExpEngine};
use crate::stats::{map_replicates, MomentEstimate};
use num_complex::Complex64;

/// Coefficients `A(0..N)` of one draw of `F_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosSample {
    pub n: usize,
    pub k: f64,
    pub coeffs: ComplexSeries,
    /// `None` when the sample was built from forced values.
    pub seed: Option<Seed>,
}

impl ChaosSample {
    pub fn a(&self, n: usize) -> Complex64 {
        self.coeffs.coeff(n)
    }
}

/// Number of Gaussians `F_K` needs to be known to degree `n`.
fn active_terms(n: usize, k: f64) -> usize {
    if k < 1.0 {
        0
    } else {
        n.min(k.floor() as usize)
    }
}

/// The series `sum_{k<=len} x_k z^k / sqrt(k)` to degree `d`.
pub fn log_series(xs: &[Complex64], d: usize) -> ComplexSeries {
    let mut c = vec![Complex64::new(0.0, 0.0); d + 1];
    for (k, x) in xs.iter().enumerate().take(d) {
        c[k + 1] = x / ((k + 1) as f64).sqrt();
    }
    ComplexSeries::new(c)
}

/// Coefficients `A(0..N)` of `exp(sum_{k<=K} X(k) z^k / sqrt(k))`, drawing
/// `X(1), X(2), ...` from `source` in order.
pub fn sample_a<S: ComplexSource>(n: usize, k: f64, source: &mut S) -> Result<ChaosSample> {
    sample_a_with(n, k, source, ExpEngine::default())
}

pub fn sample_a_with<S: ComplexSource>(
    n: usize,
    k: f64,
    source: &mut S,
    engine: ExpEngine,
) -> Result<ChaosSample> {
    ensure!(k >= 1.0, "sample_a needs K >= 1, got {k}");
    let xs = source.take_n(active_terms(n, k));
    let coeffs = exp_series_with(&log_series(&xs, n), n, engine)?;
    Ok(ChaosSample {
        n,
        k,
        coeffs,
        seed: None,
    })
}

/// [`sample_a`] on the stream of `seed`.
pub fn sample_a_seeded(n: usize, k: f64, seed: Seed) -> Result<ChaosSample> {
    let mut s = GaussianStream::new(seed);
    let mut sample = sample_a(n, k, &mut s)?;
    sample.seed = Some(seed);
    Ok(sample)
}

/// Monte Carlo estimate of `E|A(N)|^{2q}` over `samples` replicates; replicate
/// `i` uses `split(seed, i)`.
pub fn estimate_moment(n: usize, q: f64, samples: usize, seed: Seed) -> Result<MomentEstimate> {
    Ok(estimate_moments(n, &[q], samples, seed)?.remove(0))
}

/// Several exponents estimated from the same replicates.
pub fn estimate_moments(n: usize, qs: &[f64], samples: usize, seed: Seed) -> Result<Vec<MomentEstimate>> {
    for &q in qs {
        ensure!((0.0..=1.0).contains(&q), "moment exponent q must lie in [0, 1], got {q}");
    }
    ensure!(samples >= 2, "estimate_moment needs at least 2 samples, got {samples}");
    let k = n.max(1) as f64;
    let abs: Vec<f64> = map_replicates(seed, samples, |_, s| {
        let mut st = GaussianStream::new(s);
        sample_a(n, k, &mut st).map(|a| a.a(n).norm())
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(qs
        .iter()
        .map(|&q| {
            let vals: Vec<f64> = abs.iter().map(|a| a.powf(2.0 * q)).collect();
            MomentEstimate::from_values(&vals, Some(q), seed)
        })
        .collect())
}

/// `((1-q) sqrt(log N) + 1)^q`, the factor that makes `E|A(N)|^{2q}` order one.
pub fn moment_compensation(n: usize, q: f64) -> f64 {
    ((1.0 - q) * (n as f64).ln().sqrt() + 1.0).powf(q)
}

/// `exp(sum_{k<=K} r^{2k} / k)`, the mean of `|F_K(r e^{i theta})|^2` for every theta.
pub fn circle_mean_closed_form(k: f64, r: f64) -> Result<f64> {
    ensure!(r > 0.0, "circle_mean_closed_form needs r > 0, got {r}");
    let terms = if k < 1.0 { 0 } else { k.floor() as usize };
    let r2 = r * r;
    let mut w = 1.0;
    let mut s = 0.0;
    for j in 1..=terms {
        w *= r2;
        s += w / j as f64;
    }
    Ok(s.exp())
}

/// Relative tail tolerance for automatic truncation of circle averages.
pub const CIRCLE_TAIL_TOLERANCE: f64 = 1e-9;

/// Smallest `D` with `E[sum_{n>D} |c_n|^2 r^{2n}] <= r^{2(D+1)} / (1 - r^2)`
/// below `CIRCLE_TAIL_TOLERANCE` times the exact mean.
///
/// Uses `E|c_n|^2 <= 1`, which holds for every truncation `K` since it is the
/// proportion of permutations of `n` points with cycles of length at most `K`.
pub fn circle_truncation_degree(k: f64, r: f64) -> Result<usize> {
    ensure!(r > 0.0 && r < 1.0, "automatic truncation needs 0 < r < 1, got {r}");
    let mean = circle_mean_closed_form(k, r)?;
    let r2 = r * r;
    let target = (CIRCLE_TAIL_TOLERANCE * mean * (1.0 - r2)).ln();
    // r^{2(D+1)} <= target  <=>  D + 1 >= target / ln r^2
    let d = (target / r2.ln()).ceil() - 1.0;
    Ok(d.max(0.0) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleAverage {
    pub value: f64,
    /// Degree at which the coefficient sum was cut.
    pub degree: usize,
    /// True when the value is the circle integral of the degree-`degree`
    /// truncation rather than of `F_K` itself (the `r = 1` path).
    pub truncated_polynomial: bool,
}

/// `(1/2pi) int |F_K(r e^{i theta})|^2 d theta` by Parseval, `sum_n |c_n|^2 r^{2n}`.
///
/// For `r < 1` the degree is chosen automatically when `degree` is `None`; an
/// explicit degree must be at least the automatic one. For `r = 1` the series
/// does not terminate, so a degree is required and the result is the integral
/// of that polynomial truncation.
pub fn circle_average_sample<S: ComplexSource>(
    k: f64,
    r: f64,
    source: &mut S,
    degree: Option<usize>,
) -> Result<CircleAverage> {
    ensure!(r > 0.0 && r <= 1.0, "circle_average_sample needs 0 < r <= 1, got {r}");
    if k < 1.0 {
        return Ok(CircleAverage {
            value: 1.0,
            degree: 0,
            truncated_polynomial: false,
        });
    }
    let (d, truncated_polynomial) = if r < 1.0 {
        let need = circle_truncation_degree(k, r)?;
        match degree {
            Some(d) => {
                ensure!(
                    d >= need,
                    "degree {d} leaves a tail above {CIRCLE_TAIL_TOLERANCE:e} at r = {r}; need at least {need}"
                );
                (d, false)
            }
            None => (need, false),
        }
    } else {
        match degree {
            Some(d) => (d, true),
            None => {
                return Err(crate::error::Error::Precondition(
                    "at r = 1 the coefficient tail is unbounded; supply an explicit degree".into(),
                ))
            }
        }
    };
    let xs = source.take_n(active_terms(d, k));
    let f = exp_series_with(&log_series(&xs, d), d, ExpEngine::default())?;
    Ok(CircleAverage {
        value: parseval_power_sum(&f, r),
        degree: d,
        truncated_polynomial,
    })
}

/// Direct Monte Carlo estimate of `E|F_K(r e^{i theta})|^2`, evaluating
/// `exp(2 Re sum_{k<=K} X(k) r^k e^{ik theta} / sqrt(k))` per replicate.
pub fn point_second_moment_mc(k: f64, r: f64, theta: f64, samples: usize, seed: Seed) -> Result<MomentEstimate> {
    ensure!(r > 0.0 && r.is_finite(), "point_second_moment_mc needs r > 0, got {r}");
    ensure!(samples >= 2, "point_second_moment_mc needs at least 2 samples, got {samples}");
    let terms = if k < 1.0 { 0 } else { k.floor() as usize };
    let vals = map_replicates(seed, samples, |_, s| {
        let xs = GaussianStream::new(s).take_n(terms);
        let mut w = 1.0;
        let mut re = 0.0;
        for (j, x) in xs.iter().enumerate() {
            w *= r;
            let kk = (j + 1) as f64;
            re += w * (x * Complex64::from_polar(1.0, kk * theta)).re / kk.sqrt();
        }
        (2.0 * re).exp()
    });
    Ok(MomentEstimate::from_values(&vals, Some(1.0), seed))
}

/// Monte Carlo mean of [`circle_average_sample`] over `samples` replicates.
pub fn circle_average_mc(k: f64, r: f64, degree: Option<usize>, samples: usize, seed: Seed) -> Result<MomentEstimate> {
    ensure!(samples >= 2, "circle_average_mc needs at least 2 samples, got {samples}");
    let vals: Vec<f64> = map_replicates(seed, samples, |_, s| {
        circle_average_sample(k, r, &mut GaussianStream::new(s), degree).map(|c| c.value)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(MomentEstimate::from_values(&vals, Some(1.0), seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub n: usize,
    /// Estimate of `E|A(N)|`.
    pub estimate: MomentEstimate,
    /// `E|A(N)| (log N)^{1/4}` and its standard error.
    pub compensated: f64,
    pub compensated_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
    pub seed: Seed,
}

impl DecayTable {
    /// max/min of the compensated column over rows with `N >= min_n`.
    pub fn band_ratio(&self, min_n: usize) -> f64 {
        let vals: Vec<f64> = self.rows.iter().filter(|r| r.n >= min_n).map(|r| r.compensated).collect();
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Largest violation of monotone decrease between neighbours, in combined
    /// standard errors: `max_i (est_{i+1} - est_i) / se`. Non-positive when the
    /// column is strictly decreasing.
    pub fn worst_increase(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| {
                let (a, b) = (&w[0].estimate, &w[1].estimate);
                (b.mean - a.mean) / a.std_error.hypot(b.std_error)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Least-squares slope of `log E|A(N)|` against `log log N` (informational;
    /// the asymptotic value is -1/4).
    pub fn loglog_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| ((r.n as f64).ln().ln(), r.estimate.mean.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }
}

/// First-moment estimates `E|A(N)|` along an increasing grid.
///
/// Replicate `i` is one draw of `X` to degree `max{N : samples_N > i}`, from
/// which every `A(N)` it contributes to is read; by the prefix property this is
/// the same as sampling each `N` separately with `K = N`.
pub fn fit_decay_band(n_grid: &[usize], samples_per_n: &[usize], seed: Seed) -> Result<DecayTable> {
    ensure!(!n_grid.is_empty(), "decay grid is empty");
    ensure!(
        n_grid.len() == samples_per_n.len(),
        "decay grid has {} points but {} sample counts",
        n_grid.len(),
        samples_per_n.len()
    );
    ensure!(n_grid.windows(2).all(|w| w[0] < w[1]), "decay grid must be strictly increasing");
    ensure!(n_grid[0] >= 2, "decay grid needs N >= 2");
    ensure!(samples_per_n.iter().all(|&s| s >= 2), "every grid point needs at least 2 samples");
    let total = *samples_per_n.iter().max().unwrap();
    let per_replicate: Vec<Vec<Option<f64>>> = map_replicates(seed, total, |i, s| {
        let i = i as usize;
        let depth = n_grid
            .iter()
            .zip(samples_per_n)
            .filter(|(_, &sn)| sn > i)
            .map(|(&n, _)| n)
            .max()
            .unwrap_or(0);
        let mut st = GaussianStream::new(s);
        let a = sample_a(depth, depth.max(1) as f64, &mut st)?;
        Ok(n_grid
            .iter()
            .zip(samples_per_n)
            .map(|(&n, &sn)| (sn > i).then(|| a.a(n).norm()))
            .collect())
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let rows = n_grid
        .iter()
        .zip(samples_per_n)
        .enumerate()
        .map(|(j, (&n, &sn))| {
            let vals: Vec<f64> = per_replicate[..sn].iter().map(|v| v[j].expect("replicate covers grid point")).collect();
            let estimate = MomentEstimate::from_values(&vals, Some(0.5), seed);
            let c = (n as f64).ln().powf(0.25);
            DecayRow {
                n,
                estimate,
                compensated: estimate.mean * c,
                compensated_se: estimate.std_error * c,
            }
        })
        .collect();
    Ok(DecayTable { rows, seed })
}
