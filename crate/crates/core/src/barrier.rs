//! Gaussian random walks below barriers.
//!
//! Partial sums of `Re(X(k) r^k e^{ik theta} / sqrt(k))` over the blocks
//! `e^{m-1} <= k < e^m` behave like a Gaussian random walk with steps of
//! variance about 1/2. This module covers:
//!
//! - ballot probabilities for independent Gaussian steps;
//! - the upper-bound barrier event (`A + 10 log n`) and the lower-bound
//!   event (`A - 5 log n`) on a sample of `X`;
//! - the change-of-measure identity
//!   `E[1_G |F_K(r)|^2] = exp(sum r^{2k}/k) P[B]`;
//! - block variances and covariances of the pair `(Z_0(m), Z_theta(m))`, the
//!   bivariate normal density with its independent dominating form, and the
//!   two-walk tilted expectation.
//!
//! Block `m` is the exact integer range `ceil(e^{m-1}) <= k <= ceil(e^m) - 1`,
//! and checkpoint `n` covers all `k < e^n`.

use crate::chaos_model::circle_mean_closed_form;
use crate::error::{ensure, Error, Result};
use crate::rng_gauss::{ComplexSource, GaussianStream, Seed};
use crate::stats::{map_replicates, CompensatedSum, MomentEstimate};
use num_complex::Complex64;
use std::f64::consts::{E, PI, SQRT_2, TAU};
use std::ops::RangeInclusive;

/// Slack applied when flooring logarithms, so that `K = e^6` computed in
/// floating point still has six checkpoints.
const LOG_SLACK: f64 = 1e-9;

/// Smallest ballot variance accepted, and the reciprocal of the largest.
pub const MIN_STEP_VARIANCE: f64 = 1.0 / 20.0;
pub const MAX_STEP_VARIANCE: f64 = 20.0;

fn floor_log(x: f64) -> usize {
    let l = x.ln();
    if l <= 0.0 {
        0
    } else {
        (l + LOG_SLACK).floor() as usize
    }
}

/// Largest `k` with `k < e^n`; zero for `n = 0`.
pub fn prefix_end(n: usize) -> usize {
    (n as f64).exp().ceil() as usize - 1
}

/// The indices `k` of block `m >= 1`.
pub fn block_range(m: usize) -> RangeInclusive<usize> {
    assert!(m >= 1, "blocks are numbered from 1");
    prefix_end(m - 1) + 1..=prefix_end(m)
}

/// The barrier schedule `h(j)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Offset {
    Zero,
    /// `c log j`.
    Log(f64),
    /// Explicit values `h(1), h(2), ...`.
    Table(Vec<f64>),
}

impl Offset {
    /// `+10 log n`, used by the upper-bound event.
    pub const UPPER: Offset = Offset::Log(10.0);
    /// `-5 log n`, used by the lower-bound event.
    pub const LOWER: Offset = Offset::Log(-5.0);

    pub fn at(&self, j: usize) -> f64 {
        match self {
            Offset::Zero => 0.0,
            Offset::Log(c) => c * (j as f64).ln(),
            Offset::Table(t) => t[j - 1],
        }
    }

    fn validate(&self, n_max: usize) -> Result<()> {
        match self {
            Offset::Zero => Ok(()),
            Offset::Log(c) => {
                ensure!(c.abs() <= 10.0, "offset c log j needs |c| <= 10, got {c}");
                Ok(())
            }
            Offset::Table(t) => {
                ensure!(t.len() >= n_max, "offset table has {} values, need {n_max}", t.len());
                for (i, h) in t.iter().take(n_max).enumerate() {
                    let j = i + 1;
                    let bound = 10.0 * (j as f64).ln();
                    ensure!(h.abs() <= bound + 1e-12, "offset h({j}) = {h} exceeds 10 log {j} = {bound}");
                }
                Ok(())
            }
        }
    }
}

/// A barrier `A + h(j)` imposed at steps `1..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSpec {
    pub a: f64,
    pub offset: Offset,
    pub n_max: usize,
}

impl BarrierSpec {
    pub fn new(a: f64, offset: Offset, n_max: usize) -> Result<Self> {
        ensure!(a >= 1.0, "barrier height must be at least 1, got {a}");
        ensure!(n_max >= 1, "barrier needs at least one step");
        offset.validate(n_max)?;
        Ok(Self { a, offset, n_max })
    }

    pub fn admits(&self, partial_sums: &[f64]) -> bool {
        threshold(partial_sums, &self.offset) <= self.a
    }
}

/// `max_j (s_j - h(j))`: a walk with partial sums `s` stays below `A + h`
/// exactly when `A` is at least this value.
fn threshold(partial_sums: &[f64], offset: &Offset) -> f64 {
    partial_sums
        .iter()
        .enumerate()
        .map(|(i, s)| s - offset.at(i + 1))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn fill_standard_normals(stream: &mut GaussianStream, out: &mut [f64]) {
    for pair in out.chunks_mut(2) {
        let z = stream.next_complex_gaussian() * SQRT_2;
        pair[0] = z.re;
        if let Some(v) = pair.get_mut(1) {
            *v = z.im;
        }
    }
}

fn indicator_estimates(thresholds: &[f64], levels: &[f64], seed: Seed) -> Vec<MomentEstimate> {
    levels
        .iter()
        .map(|&a| {
            let v: Vec<f64> = thresholds.iter().map(|&t| if t <= a { 1.0 } else { 0.0 }).collect();
            MomentEstimate::from_values(&v, None, seed)
        })
        .collect()
}

/// Monte Carlo probability that a walk of independent centred Gaussian steps
/// stays below `A + h(j)` for every `j <= n_max`.
///
/// `variances` lists the step variances, or holds a single value used for
/// every step.
pub fn ballot_probability_mc(spec: &BarrierSpec, variances: &[f64], samples: usize, seed: Seed) -> Result<MomentEstimate> {
    Ok(ballot_probabilities_mc(&spec.offset, spec.n_max, &[spec.a], variances, samples, seed)?.remove(0))
}

/// [`ballot_probability_mc`] for several heights on common walks, so the
/// estimates are exactly nondecreasing in `A`.
pub fn ballot_probabilities_mc(
    offset: &Offset,
    n_max: usize,
    heights: &[f64],
    variances: &[f64],
    samples: usize,
    seed: Seed,
) -> Result<Vec<MomentEstimate>> {
    for &a in heights {
        BarrierSpec::new(a, offset.clone(), n_max)?;
    }
    ensure!(samples >= 100, "ballot estimates need at least 100 walks, got {samples}");
    ensure!(
        variances.len() == 1 || variances.len() == n_max,
        "expected 1 or {n_max} step variances, got {}",
        variances.len()
    );
    for &v in variances {
        ensure!(
            (MIN_STEP_VARIANCE..=MAX_STEP_VARIANCE).contains(&v),
            "step variance {v} is outside [1/20, 20]"
        );
    }
    let sd: Vec<f64> = (0..n_max)
        .map(|j| variances[if variances.len() == 1 { 0 } else { j }].sqrt())
        .collect();
    let thresholds = map_replicates(seed, samples, |_, s| {
        let mut stream = GaussianStream::new(s);
        let mut g = vec![0.0; n_max];
        fill_standard_normals(&mut stream, &mut g);
        let mut acc = 0.0;
        let mut worst = f64::NEG_INFINITY;
        for (j, (gj, sj)) in g.iter().zip(&sd).enumerate() {
            acc += gj * sj;
            worst = worst.max(acc - offset.at(j + 1));
        }
        worst
    });
    Ok(indicator_estimates(&thresholds, heights, seed))
}

fn barrier_term(x: Complex64, r: f64, theta: f64, k: usize) -> f64 {
    let kf = k as f64;
    let rk = r.powi(k as i32);
    (x * Complex64::from_polar(rk, kf * theta)).re / kf.sqrt() - rk * rk / kf
}

/// `S_n = sum_{k < e^n} (Re(X(k) r^k e^{ik theta} / sqrt(k)) - r^{2k}/k)` for
/// `n = 1..=n_max`, with `xs[k-1] = X(k)`.
pub fn checkpoint_sums(xs: &[Complex64], r: f64, theta: f64, n_max: usize) -> Result<Vec<f64>> {
    let end = prefix_end(n_max);
    if xs.len() < end {
        return Err(Error::MissingValue(xs.len() + 1));
    }
    let mut acc = CompensatedSum::default();
    let mut out = Vec::with_capacity(n_max);
    let mut k = 1;
    for n in 1..=n_max {
        while k <= prefix_end(n) {
            acc.add(barrier_term(xs[k - 1], r, theta, k));
            k += 1;
        }
        out.push(acc.value());
    }
    Ok(out)
}

/// Number of checkpoints of the upper-bound event, `floor(log K)`, after
/// checking `K >= 3` and `1 <= r <= e^{1/K}`.
pub fn upper_horizon(k: f64, r: f64) -> Result<usize> {
    ensure!(k >= 3.0, "the upper-bound event needs K >= 3, got {k}");
    ensure!(
        r >= 1.0 && r <= (1.0 / k).exp(),
        "the upper-bound event needs 1 <= r <= e^(1/K) = {}, got {r}",
        (1.0 / k).exp()
    );
    Ok(floor_log(k))
}

/// `log K_r`: the largest integer `L` with `e^L <= min(-1/(4 log r), K)`.
pub fn log_k_r(r: f64, k: f64) -> Result<usize> {
    ensure!(r > 0.0 && r < 1.0, "K_r needs 0 < r < 1, got {r}");
    let cap = (-1.0 / (4.0 * r.ln())).min(k);
    ensure!(cap >= E * (1.0 - LOG_SLACK), "K_r needs min(-1/(4 log r), K) >= e, got {cap}");
    Ok(floor_log(cap).max(1))
}

fn lower_horizon(k: f64, r: f64) -> Result<usize> {
    ensure!(k >= 10.0, "the lower-bound event needs K >= 10, got {k}");
    let r_min = (-1.0f64 / 40.0).exp();
    ensure!(
        r >= r_min && r < 1.0,
        "the lower-bound event needs e^(-1/40) <= r < 1, got {r}"
    );
    log_k_r(r, k)
}

/// Smallest `A` for which the upper-bound event holds on `xs`.
pub fn g_threshold(xs: &[Complex64], r: f64, theta: f64, k: f64) -> Result<f64> {
    let n_max = upper_horizon(k, r)?;
    Ok(threshold(&checkpoint_sums(xs, r, theta, n_max)?, &Offset::UPPER))
}

/// Whether `S_n <= A + 10 log n` for every `1 <= n <= log K`.
///
/// Requires `K >= 3`, `1 <= r <= e^{1/K}` and `A >= 1`.
pub fn event_g_holds(xs: &[Complex64], r: f64, theta: f64, k: f64, a: f64) -> Result<bool> {
    ensure!(a >= 1.0, "barrier height must be at least 1, got {a}");
    Ok(g_threshold(xs, r, theta, k)? <= a)
}

/// Smallest `A` for which the lower-bound event holds on `xs`.
pub fn l_threshold(xs: &[Complex64], r: f64, theta: f64, k: f64) -> Result<f64> {
    let n_max = lower_horizon(k, r)?;
    Ok(threshold(&checkpoint_sums(xs, r, theta, n_max)?, &Offset::LOWER))
}

/// Whether `S_n <= A - 5 log n` for every `1 <= n <= log K_r`.
///
/// Requires `K >= 10`, `e^{-1/40} <= r < 1` and `A >= 1`.
pub fn event_l_holds(xs: &[Complex64], r: f64, theta: f64, k: f64, a: f64) -> Result<bool> {
    ensure!(a >= 1.0, "barrier height must be at least 1, got {a}");
    Ok(l_threshold(xs, r, theta, k)? <= a)
}

/// Angles checked at checkpoint `n` by the all-angle event: `ceil(n e^n)`.
pub fn grid_size(n: usize) -> usize {
    (n as f64 * (n as f64).exp()).ceil() as usize
}

/// Smallest `A` for which the upper-bound event holds simultaneously at every
/// angle `2 pi j / grid_size(n)` of every checkpoint `n`.
pub fn g_grid_threshold(xs: &[Complex64], r: f64, k: f64) -> Result<f64> {
    let n_max = upper_horizon(k, r)?;
    let end = prefix_end(n_max);
    if xs.len() < end {
        return Err(Error::MissingValue(xs.len() + 1));
    }
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let angles = grid_size(n);
        let h = Offset::UPPER.at(n);
        for j in 0..angles {
            let theta = TAU * j as f64 / angles as f64;
            let mut acc = CompensatedSum::default();
            for kk in 1..=prefix_end(n) {
                acc.add(barrier_term(xs[kk - 1], r, theta, kk));
            }
            worst = worst.max(acc.value() - h);
        }
    }
    Ok(worst)
}

/// The upper-bound event on the full angle grid.
pub fn event_g_grid_holds(xs: &[Complex64], r: f64, k: f64, a: f64) -> Result<bool> {
    ensure!(a >= 1.0, "barrier height must be at least 1, got {a}");
    Ok(g_grid_threshold(xs, r, k)? <= a)
}

fn threshold_samples<F>(samples: usize, seed: Seed, len: usize, f: F) -> Vec<f64>
where
    F: Fn(&[Complex64]) -> f64 + Sync + Send,
{
    map_replicates(seed, samples, |_, s| f(&GaussianStream::new(s).take_n(len)))
}

/// Monte Carlo probability that the upper-bound event fails at `theta = 0`,
/// for each height, on common samples.
pub fn g_failure_probabilities(k: f64, r: f64, heights: &[f64], samples: usize, seed: Seed) -> Result<Vec<MomentEstimate>> {
    let n_max = upper_horizon(k, r)?;
    ensure!(heights.iter().all(|&a| a >= 1.0), "barrier heights must be at least 1");
    ensure!(samples >= 2, "need at least 2 samples");
    let t = threshold_samples(samples, seed, prefix_end(n_max), |xs| {
        threshold(&checkpoint_sums(xs, r, 0.0, n_max).expect("enough values"), &Offset::UPPER)
    });
    Ok(indicator_estimates(&t, heights, seed)
        .into_iter()
        .map(|e| MomentEstimate {
            mean: 1.0 - e.mean,
            ..e
        })
        .collect())
}

/// Monte Carlo probability that the upper-bound event fails somewhere on the
/// angle grid of [`g_grid_threshold`], for each height, on common samples.
pub fn g_grid_failure_probabilities(k: f64, r: f64, heights: &[f64], samples: usize, seed: Seed) -> Result<Vec<MomentEstimate>> {
    let n_max = upper_horizon(k, r)?;
    ensure!(heights.iter().all(|&a| a >= 1.0), "barrier heights must be at least 1");
    ensure!(samples >= 2, "need at least 2 samples");
    let t = threshold_samples(samples, seed, prefix_end(n_max), |xs| {
        g_grid_threshold(xs, r, k).expect("enough values")
    });
    Ok(indicator_estimates(&t, heights, seed)
        .into_iter()
        .map(|e| MomentEstimate {
            mean: 1.0 - e.mean,
            ..e
        })
        .collect())
}

/// Monte Carlo probability of the lower-bound event at `theta = 0`, for each
/// height, on common samples.
pub fn l_event_probabilities(k: f64, r: f64, heights: &[f64], samples: usize, seed: Seed) -> Result<Vec<MomentEstimate>> {
    let n_max = lower_horizon(k, r)?;
    ensure!(heights.iter().all(|&a| a >= 1.0), "barrier heights must be at least 1");
    ensure!(samples >= 2, "need at least 2 samples");
    let t = threshold_samples(samples, seed, prefix_end(n_max), |xs| {
        threshold(&checkpoint_sums(xs, r, 0.0, n_max).expect("enough values"), &Offset::LOWER)
    });
    Ok(indicator_estimates(&t, heights, seed))
}

/// Both sides of `E[1_G |F_K(r)|^2] = exp(sum_{k<=K} r^{2k}/k) P[B]` at
/// `theta = 0`.
///
/// The left side samples `X` directly. The right side samples the shifted
/// walk `sum_{k<e^n} y_k r^k / sqrt(k)` with `y_k` real centred Gaussians of
/// variance 1/2 under the barrier `A + 10 log n`, and scales the estimate of
/// `P[B]` by the closed form. The two halves use `split(seed, 0)` and
/// `split(seed, 1)`. An infinite `A` removes the barrier.
pub fn change_of_measure_check(
    k: f64,
    r: f64,
    a: f64,
    samples_left: usize,
    samples_right: usize,
    seed: Seed,
) -> Result<(MomentEstimate, MomentEstimate)> {
    ensure!(a >= 1.0, "barrier height must be at least 1, got {a}");
    let n_max = upper_horizon(k, r)?;
    ensure!(samples_left >= 2 && samples_right >= 2, "need at least 2 samples per side");
    let terms = k.floor() as usize;
    let weights: Vec<f64> = (1..=terms).map(|j| r.powi(j as i32) / (j as f64).sqrt()).collect();

    let left_seed = seed.split(0);
    let left = map_replicates(left_seed, samples_left, |_, s| {
        let xs = GaussianStream::new(s).take_n(terms);
        let sums = checkpoint_sums(&xs, r, 0.0, n_max).expect("K covers every checkpoint");
        if threshold(&sums, &Offset::UPPER) <= a {
            let mut log_f = CompensatedSum::default();
            for (x, w) in xs.iter().zip(&weights) {
                log_f.add(x.re * w);
            }
            (2.0 * log_f.value()).exp()
        } else {
            0.0
        }
    });

    let right_seed = seed.split(1);
    let right = map_replicates(right_seed, samples_right, |_, s| {
        let mut stream = GaussianStream::new(s);
        let mut acc = CompensatedSum::default();
        let mut kk = 1;
        for n in 1..=n_max {
            while kk <= prefix_end(n) {
                acc.add(stream.next_complex_gaussian().re * weights[kk - 1]);
                kk += 1;
            }
            if acc.value() > a + Offset::UPPER.at(n) {
                return 0.0;
            }
        }
        1.0
    });

    let mean = circle_mean_closed_form(k, r)?;
    Ok((
        MomentEstimate::from_values(&left, None, left_seed),
        MomentEstimate::from_values(&right, None, right_seed).scaled(mean),
    ))
}

/// `sigma_m^2 = sum_{k in block m} r^{2k} / (2k)`.
pub fn block_sigma2(r: f64, m: usize) -> f64 {
    block_covariance(r, 0.0, m)
}

/// `rho_m(theta) sigma_m^2 = sum_{k in block m} r^{2k} cos(k theta) / (2k)`.
pub fn block_covariance(r: f64, theta: f64, m: usize) -> f64 {
    let mut acc = CompensatedSum::default();
    for k in block_range(m) {
        let kf = k as f64;
        acc.add(r.powi(2 * k as i32) * (kf * theta).cos() / (2.0 * kf));
    }
    acc.value()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockStat {
    pub m: usize,
    pub sigma2: f64,
    pub covariance: f64,
    pub rho: f64,
}

/// Block decomposition of the pair of walks at angles 0 and `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkBlocks {
    pub r: f64,
    pub theta: f64,
    pub k: f64,
    /// `log K_r`.
    pub log_k_r: usize,
    pub k_r: f64,
    /// `M`: the smallest integer with `e^M >= min(10^3/|theta|, K_r/e)`.
    pub head: usize,
    /// Statistics for blocks `1..=log K_r`.
    pub blocks: Vec<BlockStat>,
}

/// One sample of the head sums `A_0(M), A_theta(M)` and the increments
/// `Z_0(m), Z_theta(m)` for `M < m <= log K_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkSample {
    pub head_zero: f64,
    pub head_theta: f64,
    pub z_zero: Vec<f64>,
    pub z_theta: Vec<f64>,
}

impl WalkBlocks {
    /// Blocks `M + 1 ..= log K_r`.
    pub fn walk(&self) -> &[BlockStat] {
        &self.blocks[self.head.min(self.blocks.len())..]
    }

    pub fn sample_from_x(&self, xs: &[Complex64]) -> Result<WalkSample> {
        let end = prefix_end(self.log_k_r);
        if xs.len() < end {
            return Err(Error::MissingValue(xs.len() + 1));
        }
        let head = |theta: f64| -> f64 {
            if self.head == 0 {
                0.0
            } else {
                checkpoint_sums(xs, self.r, theta, self.head).expect("length checked")[self.head - 1]
            }
        };
        let increment = |m: usize, theta: f64| -> f64 {
            let mut acc = CompensatedSum::default();
            for k in block_range(m) {
                let kf = k as f64;
                acc.add((xs[k - 1] * Complex64::from_polar(self.r.powi(k as i32), kf * theta)).re / kf.sqrt());
            }
            acc.value()
        };
        let ms = self.head + 1..=self.log_k_r;
        Ok(WalkSample {
            head_zero: head(0.0),
            head_theta: head(self.theta),
            z_zero: ms.clone().map(|m| increment(m, 0.0)).collect(),
            z_theta: ms.map(|m| increment(m, self.theta)).collect(),
        })
    }
}

/// `theta` reduced to `(-pi, pi]`.
fn reduce_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

/// `M`, computed with `K_r / e = e^{log K_r - 1}` exactly.
pub fn head_index(theta: f64, log_k_r: usize) -> usize {
    let cap = log_k_r.saturating_sub(1);
    let th = reduce_angle(theta).abs();
    if th == 0.0 {
        return cap;
    }
    let t = 1e3 / th;
    if t >= (cap as f64).exp() {
        return cap;
    }
    let mut m = t.ln().ceil().max(0.0) as usize;
    while m > 0 && ((m - 1) as f64).exp() >= t {
        m -= 1;
    }
    while (m as f64).exp() < t {
        m += 1;
    }
    m
}

/// `K_r`, `M` and per-block `sigma_m^2`, `rho_m(theta)` for `0 < r < 1`.
///
/// At `theta = 0` only the `K_r / e` branch defines `M`.
pub fn block_stats(r: f64, theta: f64, k: f64) -> Result<WalkBlocks> {
    let l = log_k_r(r, k)?;
    let blocks = (1..=l)
        .map(|m| {
            let sigma2 = block_sigma2(r, m);
            let covariance = block_covariance(r, theta, m);
            BlockStat {
                m,
                sigma2,
                covariance,
                rho: covariance / sigma2,
            }
        })
        .collect();
    Ok(WalkBlocks {
        r,
        theta,
        k,
        log_k_r: l,
        k_r: (l as f64).exp(),
        head: head_index(theta, l),
        blocks,
    })
}

/// Parameters of a nondegenerate bivariate normal law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateParams {
    mu1: f64,
    mu2: f64,
    var1: f64,
    var2: f64,
    rho: f64,
}

impl BivariateParams {
    pub fn new(mu1: f64, mu2: f64, var1: f64, var2: f64, rho: f64) -> Result<Self> {
        ensure!(var1 > 0.0 && var2 > 0.0, "variances must be positive, got {var1}, {var2}");
        ensure!(rho.abs() < 1.0, "correlation must satisfy |rho| < 1, got {rho}");
        Ok(Self {
            mu1,
            mu2,
            var1,
            var2,
            rho,
        })
    }

    pub fn means(&self) -> (f64, f64) {
        (self.mu1, self.mu2)
    }

    pub fn variances(&self) -> (f64, f64) {
        (self.var1, self.var2)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn standardized(&self, x1: f64, x2: f64) -> (f64, f64) {
        ((x1 - self.mu1) / self.var1.sqrt(), (x2 - self.mu2) / self.var2.sqrt())
    }
}

pub fn bivariate_density(p: &BivariateParams, x1: f64, x2: f64) -> f64 {
    let (u, v) = p.standardized(x1, x2);
    let one_m = 1.0 - p.rho * p.rho;
    let q = (u * u - 2.0 * p.rho * u * v + v * v) / (2.0 * one_m);
    (-q).exp() / (TAU * (p.var1 * p.var2 * one_m).sqrt())
}

/// `sqrt((1+|rho|)/(1-|rho|))`.
pub fn domination_factor(rho: f64) -> f64 {
    ((1.0 + rho.abs()) / (1.0 - rho.abs())).sqrt()
}

/// The density of independent normals with variances `sigma_i^2 (1+|rho|)`,
/// times [`domination_factor`]. Bounds [`bivariate_density`] pointwise.
pub fn dominating_density(p: &BivariateParams, x1: f64, x2: f64) -> f64 {
    let (u, v) = p.standardized(x1, x2);
    let inflate = 1.0 + p.rho.abs();
    let indep = (-(u * u + v * v) / (2.0 * inflate)).exp() / (TAU * (p.var1 * p.var2).sqrt() * inflate);
    domination_factor(p.rho) * indep
}

/// One draw of the bivariate normal, consuming one complex Gaussian.
pub fn sample_bivariate(p: &BivariateParams, stream: &mut GaussianStream) -> (f64, f64) {
    let z = stream.next_complex_gaussian() * SQRT_2;
    let (s1, s2) = (p.var1.sqrt(), p.var2.sqrt());
    let y2 = p.rho * z.re + (1.0 - p.rho * p.rho).sqrt() * z.im;
    (p.mu1 + s1 * z.re, p.mu2 + s2 * y2)
}

/// Monte Carlo estimate of
/// `E[1_E prod_{M<m<=log K_r} exp(2 Z_0(m) + 2 Z_theta(m))]`, where `E`
/// asks both tilted walks `sum_{M<l<=m} (Z(l) - 2 sigma_l^2)` to stay at or
/// below `B`. Block pairs are drawn from their exact bivariate law.
pub fn two_walk_tilted_expectation(r: f64, theta: f64, k: f64, b: f64, samples: usize, seed: Seed) -> Result<MomentEstimate> {
    Ok(two_walk_tilted_expectations(r, theta, k, &[b], samples, seed)?.remove(0))
}

/// [`two_walk_tilted_expectation`] for several levels on common samples.
pub fn two_walk_tilted_expectations(
    r: f64,
    theta: f64,
    k: f64,
    levels: &[f64],
    samples: usize,
    seed: Seed,
) -> Result<Vec<MomentEstimate>> {
    ensure!(samples >= 2, "need at least 2 samples");
    ensure!(levels.iter().all(|b| !b.is_nan()), "barrier levels must not be NaN");
    let wb = block_stats(r, theta, k)?;
    let walk = wb.walk().to_vec();
    let draws = map_replicates(seed, samples, |_, s| {
        let mut stream = GaussianStream::new(s);
        let (mut s0, mut st, mut log_w) = (0.0, 0.0, 0.0);
        let mut worst = f64::NEG_INFINITY;
        for b in &walk {
            let z = stream.next_complex_gaussian() * SQRT_2;
            let sd = b.sigma2.sqrt();
            let z0 = sd * z.re;
            let zt = sd * (b.rho * z.re + (1.0 - b.rho * b.rho).max(0.0).sqrt() * z.im);
            s0 += z0 - 2.0 * b.sigma2;
            st += zt - 2.0 * b.sigma2;
            worst = worst.max(s0).max(st);
            log_w += 2.0 * (z0 + zt);
        }
        (worst, log_w.exp())
    });
    Ok(levels
        .iter()
        .map(|&b| {
            let v: Vec<f64> = draws.iter().map(|&(w, x)| if w <= b { x } else { 0.0 }).collect();
            MomentEstimate::from_values(&v, None, seed)
        })
        .collect())
}

/// The barrier-free value `prod_{M<m<=log K_r} exp(4 sigma_m^2 (1 + rho_m))`.
pub fn two_walk_untruncated_mean(blocks: &WalkBlocks) -> f64 {
    blocks
        .walk()
        .iter()
        .map(|b| 4.0 * b.sigma2 * (1.0 + b.rho))
        .sum::<f64>()
        .exp()
}

/// `(K_r^2 / e^{2M}) ((1 + max(0, B)) / sqrt(1 + log(K_r/e^M)))^2`.
pub fn two_walk_shape(blocks: &WalkBlocks, b: f64) -> f64 {
    let gap = blocks.log_k_r.saturating_sub(blocks.head) as f64;
    (2.0 * gap).exp() * (1.0 + b.max(0.0)).powi(2) / (1.0 + gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::normal_cdf;

    fn zeros(n: usize) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); n]
    }

    #[test]
    fn grid_failure_dominates_single_angle() {
        let (k, r) = (20.0, 1.0);
        let heights = [1.0, 3.0, 6.0];
        let one = g_failure_probabilities(k, r, &heights, 2000, Seed::new(4)).unwrap();
        let grid = g_grid_failure_probabilities(k, r, &heights, 2000, Seed::new(4)).unwrap();
        for (a, b) in one.iter().zip(&grid) {
            // same samples, and angle 0 is on every grid
            assert!(b.mean >= a.mean, "{} < {}", b.mean, a.mean);
        }
        assert!(grid.windows(2).all(|w| w[1].mean <= w[0].mean));
    }

    fn draws(seed: u64, n: usize) -> Vec<Complex64> {
        Seed::new(seed).stream().take_n(n)
    }

    #[test]
    fn block_ranges_are_contiguous() {
        assert_eq!(block_range(1), 1..=2);
        assert_eq!(block_range(2), 3..=7);
        assert_eq!(block_range(3), 8..=20);
        assert_eq!(block_range(4), 21..=54);
        for m in 1..12 {
            assert_eq!(*block_range(m).end() + 1, *block_range(m + 1).start());
            assert!((*block_range(m).end() as f64) < (m as f64).exp());
            assert!((*block_range(m).start() as f64) >= ((m - 1) as f64).exp());
        }
    }

    #[test]
    fn offset_validation() {
        assert!(BarrierSpec::new(1.0, Offset::Log(10.0), 5).is_ok());
        assert!(BarrierSpec::new(1.0, Offset::Log(-10.5), 5).is_err());
        assert!(BarrierSpec::new(0.5, Offset::Zero, 5).is_err());
        assert!(BarrierSpec::new(1.0, Offset::Table(vec![0.0, 6.9]), 2).is_ok());
        assert!(BarrierSpec::new(1.0, Offset::Table(vec![0.1, 0.0]), 2).is_err());
        assert!(BarrierSpec::new(1.0, Offset::Table(vec![0.0]), 2).is_err());
    }

    #[test]
    fn spec_admits_walks() {
        let spec = BarrierSpec::new(2.0, Offset::Zero, 3).unwrap();
        assert!(spec.admits(&[1.0, 2.0, -5.0]));
        assert!(!spec.admits(&[1.0, 2.5, -5.0]));
    }

    #[test]
    fn ballot_far_barrier_is_almost_sure() {
        let spec = BarrierSpec::new(10.0, Offset::Zero, 1).unwrap();
        let e = ballot_probability_mc(&spec, &[0.5], 10_000, Seed::new(1)).unwrap();
        let exact = normal_cdf(10.0 / 0.5f64.sqrt());
        assert!(e.within(exact, 4.0) || (e.mean - exact).abs() < 1e-12, "{e:?}");
    }

    #[test]
    fn ballot_single_step_normal_cdf() {
        let spec = BarrierSpec::new(1.0, Offset::Zero, 1).unwrap();
        let e = ballot_probability_mc(&spec, &[0.5], 100_000, Seed::new(2)).unwrap();
        assert!(e.within(normal_cdf(SQRT_2), 4.0), "{e:?}");
    }

    #[test]
    fn ballot_rejects_bad_arguments() {
        let spec = BarrierSpec::new(1.0, Offset::Zero, 2).unwrap();
        assert!(ballot_probability_mc(&spec, &[0.01], 1000, Seed::new(0)).is_err());
        assert!(ballot_probability_mc(&spec, &[25.0], 1000, Seed::new(0)).is_err());
        assert!(ballot_probability_mc(&spec, &[1.0], 50, Seed::new(0)).is_err());
        assert!(ballot_probability_mc(&spec, &[1.0, 1.0, 1.0], 1000, Seed::new(0)).is_err());
    }

    #[test]
    fn ballot_band_and_monotone() {
        let heights = [1.0, 2.0, 4.0];
        for n in [16, 64, 256] {
            let est = ballot_probabilities_mc(&Offset::Zero, n, &heights, &[1.0], 20_000, Seed::new(n as u64)).unwrap();
            for (a, e) in heights.iter().zip(&est) {
                let ratio = e.mean / (a / (n as f64).sqrt()).min(1.0);
                assert!((0.2..=5.0).contains(&ratio), "a={a} n={n} ratio={ratio}");
            }
            assert!(est.windows(2).all(|w| w[0].mean <= w[1].mean));
        }
    }

    #[test]
    fn checkpoint_sums_match_naive() {
        let xs = draws(4, 60);
        let (r, theta) = (1.01, 0.7);
        let sums = checkpoint_sums(&xs, r, theta, 4).unwrap();
        for n in 1..=4 {
            let naive: f64 = (1..=prefix_end(n))
                .map(|k| {
                    let kf = k as f64;
                    (xs[k - 1] * Complex64::from_polar(r.powf(kf), kf * theta)).re / kf.sqrt() - r.powf(2.0 * kf) / kf
                })
                .sum();
            assert!((sums[n - 1] - naive).abs() < 1e-12);
        }
        assert_eq!(checkpoint_sums(&xs[..10], r, theta, 4), Err(Error::MissingValue(11)));
    }

    #[test]
    fn g_event_deterministic_cases() {
        assert!(event_g_holds(&zeros(20), 1.0, 0.0, 20.0, 1.0).unwrap());
        // K = 3 has the single checkpoint n = 1 covering k = 1, 2
        let a = 2.0;
        let big = vec![Complex64::new(a + 10.0 + 1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        assert!(!event_g_holds(&big, 1.0, 0.0, 3.0, a).unwrap());
        assert!(event_g_holds(&big, 1.0, 0.0, 3.0, 20.0).unwrap());
    }

    #[test]
    fn g_event_preconditions() {
        let xs = zeros(30);
        assert!(event_g_holds(&xs, 1.0, 0.0, E, 1.0).is_err());
        assert!(event_g_holds(&xs, 0.99, 0.0, 20.0, 1.0).is_err());
        assert!(event_g_holds(&xs, 1.1, 0.0, 20.0, 1.0).is_err());
        assert!(event_g_holds(&xs, 1.0, 0.0, 20.0, 0.5).is_err());
        assert!(event_g_holds(&xs, (1.0f64 / 20.0).exp(), 0.0, 20.0, 1.0).is_ok());
    }

    #[test]
    fn g_event_monotone_in_height() {
        for seed in 0..200 {
            let xs = draws(seed, 403);
            let k = 6f64.exp();
            let holds: Vec<bool> = [1.0, 2.0, 4.0, 8.0]
                .iter()
                .map(|&a| event_g_holds(&xs, 1.0, 0.3, k, a).unwrap())
                .collect();
            assert!(holds.windows(2).all(|w| !w[0] || w[1]), "{holds:?}");
        }
    }

    #[test]
    fn g_failure_nonincreasing_in_height() {
        let est = g_failure_probabilities(6f64.exp(), 1.0, &[1.0, 2.0, 4.0], 100_000, Seed::new(9)).unwrap();
        assert!(est.windows(2).all(|w| w[0].mean >= w[1].mean), "{est:?}");
        assert!(est[0].mean > est[2].mean);
    }

    #[test]
    fn grid_event_refines_fixed_angle() {
        let k = 4f64.exp();
        let len = prefix_end(4);
        assert!(event_g_grid_holds(&zeros(len), 1.0, k, 1.0).unwrap());
        for seed in 0..20 {
            let xs = draws(100 + seed, len);
            let grid = g_grid_threshold(&xs, 1.0, k).unwrap();
            let fixed = g_threshold(&xs, 1.0, 0.0, k).unwrap();
            assert!(grid >= fixed);
        }
    }

    #[test]
    fn l_event_deterministic_cases() {
        let r = (-1.0f64 / 40.0).exp();
        // with X = 0 the sums are -sum r^{2k}/k, which at n = 2 sits above 1 - 5 log 2
        let expect = (1..=2)
            .map(|n| -(1..=prefix_end(n)).map(|k| r.powi(2 * k as i32) / k as f64).sum::<f64>() + 5.0 * (n as f64).ln())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((l_threshold(&zeros(10), r, 0.0, 1e4).unwrap() - expect).abs() < 1e-12);
        assert!(!event_l_holds(&zeros(10), r, 0.0, 1e4, 1.0).unwrap());
        assert!(event_l_holds(&zeros(10), r, 0.0, 1e4, 2.0).unwrap());
        assert!(event_l_holds(&zeros(10), 1.0, 0.0, 1e4, 1.0).is_err());
        assert!(event_l_holds(&zeros(10), 0.9, 0.0, 1e4, 1.0).is_err());
        assert!(event_l_holds(&zeros(10), 0.99, 0.0, 9.0, 1.0).is_err());
    }

    #[test]
    fn l_barrier_below_g_barrier() {
        let r = 0.999;
        let k = 1e4;
        let n_max = log_k_r(r, k).unwrap();
        for seed in 0..100 {
            let xs = draws(seed, prefix_end(n_max));
            let sums = checkpoint_sums(&xs, r, 1.1, n_max).unwrap();
            let l = l_threshold(&xs, r, 1.1, k).unwrap();
            assert_eq!(l, threshold(&sums, &Offset::LOWER));
            // -5 log n <= 10 log n, so L(A) implies the upper barrier at A
            assert!(threshold(&sums, &Offset::UPPER) <= l);
        }
    }

    #[test]
    fn l_event_probability_band() {
        let r = (-1.0f64 / 40.0).exp();
        let k = 1e4;
        assert_eq!(log_k_r(r, k).unwrap(), 2);
        let a = 2.0;
        let p = l_event_probabilities(k, r, &[a], 100_000, Seed::new(31)).unwrap()[0];
        let ratio = p.mean / (a / 2f64.sqrt());
        assert!((0.2..=5.0).contains(&ratio), "{p:?}");
    }

    #[test]
    fn change_of_measure_agrees() {
        let (left, right) = change_of_measure_check(20.0, 1.0, 2.0, 20_000, 200_000, Seed::new(5)).unwrap();
        assert!(left.z_distance(&right) <= 5.0, "{left:?} {right:?}");
    }

    #[test]
    fn change_of_measure_without_barrier_is_closed_form() {
        let closed = circle_mean_closed_form(20.0, 1.0).unwrap();
        let (left, right) = change_of_measure_check(20.0, 1.0, f64::INFINITY, 50_000, 100, Seed::new(6)).unwrap();
        assert_eq!(right.mean, closed);
        assert_eq!(right.std_error, 0.0);
        assert!(left.within(closed, 4.0), "{left:?} vs {closed}");
    }

    #[test]
    fn change_of_measure_nearly_sure_event() {
        let k: f64 = 3.0;
        let closed = circle_mean_closed_form(k, 1.0).unwrap();
        // under the tilt the walk is centred, so only a high barrier is nearly sure
        let (left, right) = change_of_measure_check(k, 1.0, 6.0, 50_000, 50_000, Seed::new(8)).unwrap();
        assert!(left.within(closed, 5.0), "{left:?} vs {closed}");
        assert!(left.z_distance(&right) <= 5.0);
        let a = k.ln().sqrt().max(1.0);
        let (left, right) = change_of_measure_check(k, 1.0, a, 50_000, 50_000, Seed::new(8)).unwrap();
        assert!(left.z_distance(&right) <= 5.0, "{left:?} {right:?}");
    }

    #[test]
    fn covariance_bound_at_pi() {
        for r in [0.5, 0.98, (-1.0f64 / 40.0).exp(), 0.9999, 1.0] {
            for m in 1..=8 {
                let c = block_covariance(r, PI, m);
                assert!(c.abs() <= (-((m - 1) as f64)).exp() + 1e-12, "r={r} m={m} c={c}");
            }
        }
    }

    #[test]
    fn covariance_bound_small_angles() {
        for r in [0.98, (-1.0f64 / 40.0).exp(), 0.9999] {
            for theta in [0.1, 0.5, PI / 2.0, -2.0] {
                for m in 1..=8 {
                    let c = block_covariance(r, theta, m);
                    assert!(c.abs() <= PI / (theta.abs() * ((m - 1) as f64).exp()) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn variance_bounds_inside_horizon() {
        for r in [0.98, (-1.0f64 / 40.0).exp(), 0.999, 0.9999, 0.99999] {
            let wb = block_stats(r, 0.5, 1e9).unwrap();
            assert!(wb.k_r <= -1.0 / (4.0 * r.ln()));
            for b in &wb.blocks {
                assert!((b.m as f64).exp() <= wb.k_r * (1.0 + 1e-12));
                assert!(b.sigma2 >= 0.25, "{b:?}");
                assert!(b.sigma2 <= 0.5 + 0.5 / ((b.m - 1) as f64).exp(), "{b:?}");
            }
        }
    }

    #[test]
    fn head_index_branches() {
        // theta = 0: M = log K_r - 1
        let wb = block_stats(0.99999, 0.0, 1e9).unwrap();
        assert_eq!(wb.log_k_r, 10);
        assert_eq!(wb.head, 9);
        assert_eq!(wb.walk().len(), 1);
        // theta = pi: e^6 >= 1000/pi > e^5
        let wb = block_stats(0.99999, PI, 1e9).unwrap();
        assert_eq!(wb.head, 6);
        assert_eq!(wb.walk().iter().map(|b| b.m).collect::<Vec<_>>(), [7, 8, 9, 10]);
        assert_eq!(head_index(-PI, 10), 6);
        assert_eq!(head_index(1e-6, 10), 9);
        // K caps K_r
        assert_eq!(block_stats(0.99999, PI, 100.0).unwrap().log_k_r, 4);
        assert!(block_stats(1.0, 0.5, 100.0).is_err());
        assert!(block_stats(0.5, 0.5, 100.0).is_err());
    }

    #[test]
    fn block_covariance_matches_monte_carlo() {
        let (r, theta, m) = (0.99f64, 0.5, 4);
        let coef: Vec<(usize, Complex64, Complex64)> = block_range(m)
            .map(|k| {
                let w = r.powi(k as i32) / (k as f64).sqrt();
                (k, Complex64::new(w, 0.0), Complex64::from_polar(w, k as f64 * theta))
            })
            .collect();
        let len = prefix_end(m);
        let root = Seed::new(44);
        let pairs: Vec<(f64, f64)> = map_replicates(root, 1_000_000, |_, s| {
            let xs = GaussianStream::new(s).take_n(len);
            coef.iter()
                .fold((0.0, 0.0), |(a, b), (k, c0, ct)| (a + (xs[k - 1] * c0).re, b + (xs[k - 1] * ct).re))
        });
        let prod: Vec<f64> = pairs.iter().map(|(a, b)| a * b).collect();
        let sq: Vec<f64> = pairs.iter().map(|(a, _)| a * a).collect();
        let cov = MomentEstimate::from_values(&prod, None, root);
        let var = MomentEstimate::from_values(&sq, None, root);
        let expect_cov = block_covariance(r, theta, m);
        let expect_var = block_sigma2(r, m);
        assert!(cov.within(expect_cov, 4.0), "{cov:?} vs {expect_cov}");
        assert!(var.within(expect_var, 4.0), "{var:?} vs {expect_var}");
    }

    #[test]
    fn walk_sample_heads_match_checkpoints() {
        let wb = block_stats(0.999, 0.5, 1e6).unwrap();
        let xs = draws(3, prefix_end(wb.log_k_r));
        let w = wb.sample_from_x(&xs).unwrap();
        let sums = checkpoint_sums(&xs, 0.999, 0.0, wb.log_k_r).unwrap();
        assert!((w.head_zero - sums[wb.head - 1]).abs() < 1e-12);
        // head plus tilted increments reaches the last checkpoint
        let tilt: f64 = wb.walk().iter().map(|b| 2.0 * b.sigma2).sum();
        let total = w.head_zero + w.z_zero.iter().sum::<f64>() - tilt;
        assert!((total - sums[wb.log_k_r - 1]).abs() < 1e-10);
    }

    fn params(rho: f64) -> BivariateParams {
        BivariateParams::new(0.3, -0.2, 0.7, 1.6, rho).unwrap()
    }

    #[test]
    fn density_at_mean() {
        let p = params(0.4);
        let v = bivariate_density(&p, 0.3, -0.2);
        let expect = 1.0 / (TAU * (0.7f64 * 1.6).sqrt() * (1.0 - 0.16f64).sqrt());
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn density_factorizes_without_correlation() {
        let p = params(0.0);
        let phi = |x: f64, mu: f64, var: f64| (-(x - mu).powi(2) / (2.0 * var)).exp() / (TAU * var).sqrt();
        for (x1, x2) in [(0.0, 0.0), (1.5, -2.0), (-3.0, 0.7)] {
            let v = bivariate_density(&p, x1, x2);
            assert!((v - phi(x1, 0.3, 0.7) * phi(x2, -0.2, 1.6)).abs() < 1e-14);
            assert!((dominating_density(&p, x1, x2) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_correlation_rejected() {
        assert!(BivariateParams::new(0.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(BivariateParams::new(0.0, 0.0, 1.0, 1.0, -1.0).is_err());
        assert!(BivariateParams::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn density_normalized() {
        for rho in [-0.3, 0.05, 0.6] {
            let p = params(rho);
            let n = 400;
            let (s1, s2) = (0.7f64.sqrt(), 1.6f64.sqrt());
            let (h1, h2) = (16.0 * s1 / n as f64, 16.0 * s2 / n as f64);
            let mut acc = CompensatedSum::default();
            for i in 0..n {
                for j in 0..n {
                    let x1 = 0.3 - 8.0 * s1 + (i as f64 + 0.5) * h1;
                    let x2 = -0.2 - 8.0 * s2 + (j as f64 + 0.5) * h2;
                    acc.add(bivariate_density(&p, x1, x2) * h1 * h2);
                }
            }
            assert!((acc.value() - 1.0).abs() < 1e-6, "rho={rho}: {}", acc.value());
        }
    }

    #[test]
    fn domination_pointwise() {
        for rho in [-0.3, -0.05, 0.05, 0.3] {
            let p = params(rho);
            for i in 0..100 {
                for j in 0..100 {
                    let x1 = -6.0 + 12.0 * i as f64 / 99.0;
                    let x2 = -6.0 + 12.0 * j as f64 / 99.0;
                    assert!(bivariate_density(&p, x1, x2) <= dominating_density(&p, x1, x2) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn domination_at_event_level() {
        let p = BivariateParams::new(0.0, 0.0, 1.0, 1.0, 0.3).unwrap();
        let root = Seed::new(12);
        let v: Vec<f64> = map_replicates(root, 200_000, |_, s| {
            let (a, b) = sample_bivariate(&p, &mut GaussianStream::new(s));
            if a <= 0.0 && b <= 0.0 {
                1.0
            } else {
                0.0
            }
        });
        let e = MomentEstimate::from_values(&v, None, root);
        let exact = 0.25 + 0.3f64.asin() / TAU;
        assert!(e.within(exact, 4.0), "{e:?} vs {exact}");
        let bound = domination_factor(0.3) * 0.25;
        assert!(e.mean <= bound + 4.0 * e.std_error);
    }

    #[test]
    fn two_walk_single_block_closed_form() {
        let (r, theta, k) = ((-1.0f64 / 40.0).exp(), 0.5, 1e4);
        let wb = block_stats(r, theta, k).unwrap();
        assert_eq!(wb.walk().len(), 1);
        let closed = two_walk_untruncated_mean(&wb);
        let e = two_walk_tilted_expectation(r, theta, k, f64::INFINITY, 200_000, Seed::new(17)).unwrap();
        assert!(e.within(closed, 5.0), "{e:?} vs {closed}");
    }

    #[test]
    fn two_walk_monotone_in_level() {
        let est = two_walk_tilted_expectations(0.99999, PI, 1e9, &[0.0, 1.0, 2.0], 20_000, Seed::new(3)).unwrap();
        for w in est.windows(2) {
            assert!(w[1].mean - w[0].mean >= -2.0 * w[0].std_error.hypot(w[1].std_error));
            assert!(w[0].mean <= w[1].mean);
        }
    }

    #[test]
    fn two_walk_ratio_to_shape_bounded() {
        let mut worst: f64 = 0.0;
        for r in [0.98, 0.9999, 0.99999] {
            for theta in [0.5, PI] {
                let wb = block_stats(r, theta, 1e9).unwrap();
                let levels = [0.0, 1.0, 2.0];
                let est = two_walk_tilted_expectations(r, theta, 1e9, &levels, 20_000, Seed::new(21)).unwrap();
                for (b, e) in levels.iter().zip(&est) {
                    worst = worst.max(e.mean / two_walk_shape(&wb, *b));
                }
            }
        }
        assert!(worst.is_finite() && worst < 10.0, "{worst}");
    }
}
