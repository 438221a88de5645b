//! One function per subcommand: resolve parameters, run, tabulate, check.

use std::f64::consts::{PI, TAU};

use holochaos::barrier::{
    ballot_probabilities_mc, block_covariance, block_sigma2, block_stats, bivariate_density, change_of_measure_check,
    domination_factor, dominating_density, g_failure_probabilities, g_grid_failure_probabilities, l_event_probabilities,
    log_k_r, sample_bivariate, two_walk_shape, two_walk_tilted_expectations, upper_horizon, BivariateParams, Offset,
};
use holochaos::chaos_model::{
    circle_average_mc, circle_mean_closed_form, estimate_moments, fit_decay_band, log_series, moment_compensation,
    point_second_moment_mc, sample_a_with,
};
use holochaos::number_models::{
    count_irreducibles, count_irreducibles_brute, ff_second_moment, steinhaus_compensation, steinhaus_moments, FFModel,
};
use holochaos::partitions_exact::{mass_table, partition_sum_a, reconstruct_a_by_largest_part};
use holochaos::series::{exp_series_with, ExpEngine};
use holochaos::stats::{map_replicates, CompensatedSum, MomentEstimate};
use holochaos::{ComplexSource, GaussianStream, Seed};
use serde_json::{json, Value as Json};

use crate::config::*;
use crate::error::CliError;
use crate::output::{json_float, Check, Table};
use crate::row;

/// Everything a subcommand produces.
#[derive(Debug)]
pub struct Report {
    pub table: Table,
    pub checks: Vec<Check>,
    /// Fully resolved parameters, recorded in the manifest.
    pub parameters: Json,
    /// Columns for the two-column plot file.
    pub plot: (&'static str, &'static str),
}

fn req<T>(v: Option<T>, command: &str, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::missing(command, name))
}

fn nonempty<T>(v: &[T], command: &str, name: &str) -> Result<(), CliError> {
    if v.is_empty() {
        Err(CliError::Config(format!("`{name}` for {command} is an empty list")))
    } else {
        Ok(())
    }
}

fn floats(v: &[f64]) -> Json {
    Json::Array(v.iter().map(|&f| json_float(f)).collect())
}

pub fn run(command: Command, s: &Settings) -> Result<Report, CliError> {
    match command {
        Command::Sample(p) => sample(p, s),
        Command::Moment(p) => moment(p, s),
        Command::Decay(p) => decay(p, s),
        Command::Mass(p) => mass(p),
        Command::Ballot(p) => ballot(p, s),
        Command::Event(p) => event(p, s),
        Command::ComCheck(p) => com_check(p, s),
        Command::Circle(p) => circle(p, s),
        Command::Blocks(p) => blocks(p),
        Command::Bivariate(p) => bivariate(p, s),
        Command::Steinhaus(p) => steinhaus(p, s),
        Command::Ff(p) => ff(p, s),
        Command::SeriesSelftest(p) => series_selftest(p, s),
    }
}

fn engine(e: Engine) -> ExpEngine {
    match e {
        Engine::Relaxed => ExpEngine::Relaxed,
        Engine::Recurrence => ExpEngine::Recurrence,
    }
}

fn sample(p: SampleParams, s: &Settings) -> Result<Report, CliError> {
    let n = p.n.unwrap_or(16);
    let k = p.k.unwrap_or(n.max(1) as f64);
    let eng = p.engine.unwrap_or(Engine::Relaxed);
    let a = sample_a_with(n, k, &mut GaussianStream::new(Seed::new(s.seed)), engine(eng))?;
    let mut table = Table::new(&["n", "a_re", "a_im", "a_abs", "seed"]);
    for i in 0..=n {
        let c = a.a(i);
        table.push(row![i, c.re, c.im, c.norm(), s.seed]);
    }
    let a0 = a.a(0);
    Ok(Report {
        table,
        checks: vec![Check::new("A(0) = 1", a0.re == 1.0 && a0.im == 0.0, format!("A(0) = {a0}"))],
        parameters: json!({ "N": n, "K": json_float(k), "engine": eng }),
        plot: ("n", "a_abs"),
    })
}

fn moment(p: MomentParams, s: &Settings) -> Result<Report, CliError> {
    let ns = req(p.n, "moment", "N")?;
    nonempty(&ns, "moment", "N")?;
    let qs = p.q.unwrap_or_else(|| vec![1.0]);
    nonempty(&qs, "moment", "q")?;
    let samples = s.samples.unwrap_or(1000);
    let seed = Seed::new(s.seed);
    let mut table = Table::new(&["N", "q", "samples", "mean", "std_error", "compensated", "seed"]);
    let mut checks = Vec::new();
    for &n in &ns {
        let est = estimate_moments(n, &qs, samples, seed)?;
        let mut comp = Vec::new();
        for (e, &q) in est.iter().zip(&qs) {
            let c = e.mean * moment_compensation(n, q);
            comp.push(c);
            table.push(row![n, q, samples, e.mean, e.std_error, c, s.seed]);
            if q == 1.0 {
                checks.push(Check::new(
                    format!("E|A({n})|^2 = 1"),
                    e.within(1.0, 4.0),
                    format!("mean {} +- {} ({:.2} se)", e.mean, e.std_error, (e.mean - 1.0).abs() / e.std_error),
                ));
            }
        }
        if qs.len() > 1 {
            let ratio = comp.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                / comp.iter().copied().fold(f64::INFINITY, f64::min);
            checks.push(Check::new(format!("q band at N={n}"), ratio <= 3.0, format!("max/min = {ratio}")));
        }
    }
    Ok(Report {
        table,
        checks,
        parameters: json!({ "N": ns, "q": floats(&qs), "samples": samples }),
        plot: ("N", "mean"),
    })
}

fn decay(p: DecayParams, s: &Settings) -> Result<Report, CliError> {
    let ns = p.n.unwrap_or_else(|| (4..=13).map(|e| 1usize << e).collect());
    nonempty(&ns, "decay", "N")?;
    let per_n = match p.samples_per_n {
        None => vec![s.samples.unwrap_or(1000); ns.len()],
        Some(v) if v.len() == 1 => vec![v[0]; ns.len()],
        Some(v) if v.len() == ns.len() => v,
        Some(v) => {
            return Err(CliError::Config(format!(
                "decay has {} grid points but {} entries in samples_per_n",
                ns.len(),
                v.len()
            )))
        }
    };
    let band_min = p.band_min_n.unwrap_or(64);
    let t = fit_decay_band(&ns, &per_n, Seed::new(s.seed))?;
    let mut table = Table::new(&["N", "q", "samples", "mean", "std_error", "compensated", "seed"]);
    for r in &t.rows {
        table.push(row![r.n, 0.5, r.estimate.samples, r.estimate.mean, r.estimate.std_error, r.compensated, s.seed]);
    }
    let worst = t.worst_increase();
    let band = t.band_ratio(band_min);
    Ok(Report {
        table,
        checks: vec![
            Check::new("monotone within 2 se", worst <= 2.0, format!("largest increase {worst:.3} se")),
            Check::new(
                format!("compensated band over N >= {band_min}"),
                band <= 3.0,
                format!("max/min = {band}, log-log slope {:.3}", t.loglog_slope()),
            ),
        ],
        parameters: json!({ "N": ns, "samples_per_n": per_n, "band_min_N": band_min }),
        plot: ("N", "compensated"),
    })
}

fn mass(p: MassParams) -> Result<Report, CliError> {
    let n_max = p.n_max.unwrap_or(25);
    let rows = mass_table(n_max)?;
    let mut table = Table::new(&["N", "partitions", "total_mass"]);
    let mut bad = Vec::new();
    for r in &rows {
        let m = r.total_mass.to_string();
        if m != "1" {
            bad.push(format!("N={}: {m}", r.n));
        }
        table.push(row![r.n, r.partitions, m]);
    }
    Ok(Report {
        table,
        checks: vec![Check::new("total mass is exactly 1", bad.is_empty(), bad.join("; "))],
        parameters: json!({ "N_max": n_max }),
        plot: ("N", "partitions"),
    })
}

fn ballot(p: BallotParams, s: &Settings) -> Result<Report, CliError> {
    let a = p.a.unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
    let ns = p.n.unwrap_or_else(|| vec![16, 64, 256]);
    nonempty(&a, "ballot", "a")?;
    nonempty(&ns, "ballot", "n")?;
    let kind = p.offset.unwrap_or(OffsetKind::Zero);
    let variance = p.variance.unwrap_or(1.0);
    let offset = match kind {
        OffsetKind::Zero => Offset::Zero,
        OffsetKind::Upper => Offset::UPPER,
        OffsetKind::Lower => Offset::LOWER,
    };
    let samples = s.samples.unwrap_or(10_000);
    let seed = Seed::new(s.seed);
    let mut table = Table::new(&[
        "a", "n", "offset", "variance", "samples", "estimate", "std_error", "scale", "ratio", "seed",
    ]);
    let mut outside = Vec::new();
    let mut unordered = Vec::new();
    for &n in &ns {
        let est = ballot_probabilities_mc(&offset, n, &a, &[variance], samples, seed)?;
        for (e, &ai) in est.iter().zip(&a) {
            let scale = (ai / (variance * n as f64).sqrt()).min(1.0);
            let ratio = e.mean / scale;
            if !(0.2..=5.0).contains(&ratio) {
                outside.push(format!("a={ai} n={n}: {ratio}"));
            }
            table.push(row![ai, n, format!("{kind:?}").to_lowercase(), variance, samples, e.mean, e.std_error, scale, ratio, s.seed]);
        }
        let mut by_a: Vec<(f64, f64)> = a.iter().copied().zip(est.iter().map(|e| e.mean)).collect();
        by_a.sort_by(|x, y| x.0.total_cmp(&y.0));
        if by_a.windows(2).any(|w| w[1].1 < w[0].1) {
            unordered.push(format!("n={n}"));
        }
    }
    Ok(Report {
        table,
        checks: vec![
            Check::new("ratio to min(1, a/sqrt(n)) in [0.2, 5]", outside.is_empty(), outside.join("; ")),
            Check::new("nondecreasing in a", unordered.is_empty(), unordered.join("; ")),
        ],
        parameters: json!({ "a": floats(&a), "n": ns, "offset": kind, "variance": variance, "samples": samples }),
        plot: ("n", "estimate"),
    })
}

fn event(p: EventParams, s: &Settings) -> Result<Report, CliError> {
    let kind = p.kind.unwrap_or(EventKind::G);
    let k = req(p.k, "event", "K")?;
    let r = req(p.r, "event", "r")?;
    let theta = p.theta.unwrap_or(0.0);
    let default_levels = if kind == EventKind::TwoWalk {
        vec![0.0, 1.0, 2.0]
    } else {
        vec![1.0, 2.0, 4.0, 8.0]
    };
    let a = p.a.unwrap_or(default_levels);
    nonempty(&a, "event", "A")?;
    let samples = s.samples.unwrap_or(10_000);
    let seed = Seed::new(s.seed);
    if kind != EventKind::TwoWalk && theta != 0.0 {
        return Err(CliError::Config("theta applies to kind two-walk only".into()));
    }

    let (horizon, est, reference): (usize, Vec<MomentEstimate>, Vec<Option<f64>>) = match kind {
        EventKind::G => (upper_horizon(k, r)?, g_failure_probabilities(k, r, &a, samples, seed)?, vec![None; a.len()]),
        EventKind::GGrid => (
            upper_horizon(k, r)?,
            g_grid_failure_probabilities(k, r, &a, samples, seed)?,
            vec![None; a.len()],
        ),
        EventKind::L => {
            let est = l_event_probabilities(k, r, &a, samples, seed)?;
            let l = log_k_r(r, k)?;
            (l, est, a.iter().map(|x| Some(x / (l as f64).sqrt())).collect())
        }
        EventKind::TwoWalk => {
            let wb = block_stats(r, theta, k)?;
            let est = two_walk_tilted_expectations(r, theta, k, &a, samples, seed)?;
            (wb.log_k_r, est, a.iter().map(|&b| Some(two_walk_shape(&wb, b))).collect())
        }
    };

    let mut table = Table::new(&[
        "kind", "K", "r", "theta", "A", "horizon", "samples", "estimate", "std_error", "reference", "ratio", "seed",
    ]);
    for ((e, &ai), rf) in est.iter().zip(&a).zip(&reference) {
        let ratio = rf.map(|v| e.mean / v);
        table.push(row![
            kind_name(kind), k, r, theta, ai, horizon, samples, e.mean, e.std_error, *rf, ratio, s.seed
        ]);
    }

    let mut checks = Vec::new();
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[i].total_cmp(&a[j]));
    let means: Vec<f64> = order.iter().map(|&i| est[i].mean).collect();
    match kind {
        EventKind::G | EventKind::GGrid => {
            let ok = means.windows(2).all(|w| w[1] <= w[0]);
            checks.push(Check::new("failure probability nonincreasing in A", ok, format!("{means:?}")));
        }
        EventKind::L => {
            let ok = means.windows(2).all(|w| w[1] >= w[0]);
            checks.push(Check::new("event probability nondecreasing in A", ok, format!("{means:?}")));
            let bad: Vec<String> = est
                .iter()
                .zip(&reference)
                .zip(&a)
                .filter_map(|((e, rf), ai)| {
                    let q = e.mean / rf.expect("reference set");
                    (!(0.2..=5.0).contains(&q)).then(|| format!("A={ai}: {q}"))
                })
                .collect();
            checks.push(Check::new("ratio to A/sqrt(log K_r) in [0.2, 5]", bad.is_empty(), bad.join("; ")));
        }
        EventKind::TwoWalk => {
            let ok = means.windows(2).all(|w| w[1] >= w[0]);
            checks.push(Check::new("nondecreasing in B", ok, format!("{means:?}")));
            let bad: Vec<String> = est
                .iter()
                .zip(&reference)
                .zip(&a)
                .filter_map(|((e, rf), b)| {
                    let q = e.mean / rf.expect("reference set");
                    (q > 10.0).then(|| format!("B={b}: {q}"))
                })
                .collect();
            checks.push(Check::new("ratio to shape at most 10", bad.is_empty(), bad.join("; ")));
        }
    }
    Ok(Report {
        table,
        checks,
        parameters: json!({
            "kind": kind, "K": json_float(k), "r": r, "theta": theta, "A": floats(&a), "samples": samples
        }),
        plot: ("A", "estimate"),
    })
}

fn kind_name(k: EventKind) -> &'static str {
    match k {
        EventKind::G => "g",
        EventKind::GGrid => "g-grid",
        EventKind::L => "l",
        EventKind::TwoWalk => "two-walk",
    }
}

fn com_check(p: ComCheckParams, s: &Settings) -> Result<Report, CliError> {
    let k = p.k.unwrap_or(20.0);
    let r = p.r.unwrap_or(1.0);
    let a = p.a.unwrap_or(2.0);
    let left_n = p.samples_left.or(s.samples).unwrap_or(100_000);
    let right_n = p.samples_right.unwrap_or(10 * left_n);
    let (left, right) = change_of_measure_check(k, r, a, left_n, right_n, Seed::new(s.seed))?;
    let closed = circle_mean_closed_form(k, r)?;
    let z = left.z_distance(&right);
    let mut table = Table::new(&[
        "K", "r", "A", "closed_form", "left_samples", "left_mean", "left_se", "right_samples", "right_mean", "right_se",
        "z", "seed",
    ]);
    table.push(row![
        k, r, a, closed, left_n, left.mean, left.std_error, right_n, right.mean, right.std_error, z, s.seed
    ]);
    Ok(Report {
        table,
        checks: vec![Check::new("sides agree within 5 se", z <= 5.0, format!("z = {z:.3}"))],
        parameters: json!({
            "K": json_float(k), "r": r, "A": json_float(a), "samples_left": left_n, "samples_right": right_n
        }),
        plot: ("A", "z"),
    })
}

fn circle(p: CircleParams, s: &Settings) -> Result<Report, CliError> {
    let k = p.k.unwrap_or(8.0);
    let r = p.r.unwrap_or(1.0);
    let theta = p.theta.unwrap_or(0.0);
    let method = p.method.unwrap_or(CircleMethod::Direct);
    let sigmas = p.sigmas.unwrap_or(4.0);
    let samples = s.samples.unwrap_or(10_000);
    let seed = Seed::new(s.seed);
    let est = match method {
        CircleMethod::Direct => point_second_moment_mc(k, r, theta, samples, seed)?,
        CircleMethod::Parseval => circle_average_mc(k, r, p.degree, samples, seed)?,
    };
    let closed = circle_mean_closed_form(k, r)?;
    let z = (est.mean - closed).abs() / est.std_error;
    let mut table = Table::new(&[
        "K", "r", "theta", "method", "degree", "samples", "mean", "std_error", "closed_form", "z", "seed",
    ]);
    let method_name = match method {
        CircleMethod::Direct => "direct",
        CircleMethod::Parseval => "parseval",
    };
    table.push(row![k, r, theta, method_name, p.degree, samples, est.mean, est.std_error, closed, z, s.seed]);
    let mut checks = Vec::new();
    // at r = 1 the Parseval route integrates a polynomial truncation, whose mean
    // is below the closed form
    if !(method == CircleMethod::Parseval && r >= 1.0) {
        checks.push(Check::new(
            format!("mean within {sigmas} se of exp(sum r^2k/k)"),
            z <= sigmas,
            format!("z = {z:.3}"),
        ));
    }
    Ok(Report {
        table,
        checks,
        parameters: json!({
            "K": json_float(k), "r": r, "theta": theta, "method": method, "degree": p.degree,
            "sigmas": sigmas, "samples": samples
        }),
        plot: ("K", "mean"),
    })
}

/// Representative of `theta` in `(-pi, pi]`.
fn reduce_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

const BOUND_TOLERANCE: f64 = 1e-12;

fn blocks(p: BlocksParams) -> Result<Report, CliError> {
    let rs = req(p.r, "blocks", "r")?;
    let thetas = req(p.theta, "blocks", "theta")?;
    nonempty(&rs, "blocks", "r")?;
    nonempty(&thetas, "blocks", "theta")?;
    let k = p.k.unwrap_or(f64::INFINITY);
    let mut table = Table::new(&[
        "r", "theta", "K", "log_K_r", "M", "m", "in_horizon", "sigma2", "covariance", "rho", "cov_bound", "cov_ok",
        "sigma2_ok",
    ]);
    let mut failures = Vec::new();
    for &r in &rs {
        for &theta in &thetas {
            let wb = block_stats(r, theta, k)?;
            let top = wb.log_k_r.max(p.m_max.unwrap_or(0));
            for m in 1..=top {
                let sigma2 = block_sigma2(r, m);
                let cov = block_covariance(r, theta, m);
                let decay = (-((m - 1) as f64)).exp();
                let bound = PI * decay / reduce_angle(theta).abs();
                let cov_ok = cov.abs() <= bound + BOUND_TOLERANCE;
                let in_horizon = m <= wb.log_k_r;
                let sigma2_ok = !in_horizon
                    || (sigma2 >= 0.25 - BOUND_TOLERANCE && sigma2 <= 0.5 + 0.5 * decay + BOUND_TOLERANCE);
                if !(cov_ok && sigma2_ok) {
                    failures.push(format!("r={r} theta={theta} m={m}"));
                }
                table.push(row![
                    r, theta, k, wb.log_k_r, wb.head, m, in_horizon, sigma2, cov, cov / sigma2, bound, cov_ok, sigma2_ok
                ]);
            }
        }
    }
    Ok(Report {
        table,
        checks: vec![Check::new("block variance and covariance bounds", failures.is_empty(), failures.join("; "))],
        parameters: json!({ "r": floats(&rs), "theta": floats(&thetas), "K": json_float(k), "m_max": p.m_max }),
        plot: ("m", "covariance"),
    })
}

fn bivariate(p: BivariateParamsArgs, s: &Settings) -> Result<Report, CliError> {
    let rhos = p.rho.unwrap_or_else(|| vec![-0.3, -0.05, 0.05, 0.3]);
    nonempty(&rhos, "bivariate", "rho")?;
    let grid = p.grid.unwrap_or(100);
    let norm_grid = p.norm_grid.unwrap_or(400);
    if grid < 2 || norm_grid < 2 {
        return Err(CliError::Config("grid and norm_grid need at least 2 points per axis".into()));
    }
    let (mu1, mu2) = (p.mu1.unwrap_or(0.0), p.mu2.unwrap_or(0.0));
    let (var1, var2) = (p.var1.unwrap_or(1.0), p.var2.unwrap_or(1.0));
    let samples = s.samples.unwrap_or(100_000);
    if samples < 2 {
        return Err(CliError::Config("bivariate needs at least 2 samples".into()));
    }
    let seed = Seed::new(s.seed);
    let (s1, s2) = (var1.sqrt(), var2.sqrt());
    let mut table = Table::new(&[
        "rho", "grid_points", "max_excess", "normalization", "quadrant_mc", "quadrant_se", "quadrant_exact",
        "quadrant_bound", "seed",
    ]);
    let mut checks = Vec::new();
    for &rho in &rhos {
        let bp = BivariateParams::new(mu1, mu2, var1, var2, rho)?;
        let mut excess = f64::NEG_INFINITY;
        for i in 0..grid {
            for j in 0..grid {
                let x1 = mu1 + s1 * (-6.0 + 12.0 * i as f64 / (grid - 1) as f64);
                let x2 = mu2 + s2 * (-6.0 + 12.0 * j as f64 / (grid - 1) as f64);
                excess = excess.max(bivariate_density(&bp, x1, x2) - dominating_density(&bp, x1, x2));
            }
        }
        let (h1, h2) = (16.0 * s1 / norm_grid as f64, 16.0 * s2 / norm_grid as f64);
        let mut acc = CompensatedSum::default();
        for i in 0..norm_grid {
            for j in 0..norm_grid {
                let x1 = mu1 - 8.0 * s1 + (i as f64 + 0.5) * h1;
                let x2 = mu2 - 8.0 * s2 + (j as f64 + 0.5) * h2;
                acc.add(bivariate_density(&bp, x1, x2) * h1 * h2);
            }
        }
        let norm = acc.value();
        let hits = map_replicates(seed, samples, |_, sd| {
            let (y1, y2) = sample_bivariate(&bp, &mut GaussianStream::new(sd));
            if y1 <= mu1 && y2 <= mu2 {
                1.0
            } else {
                0.0
            }
        });
        let q = MomentEstimate::from_values(&hits, None, seed);
        let exact = 0.25 + rho.asin() / TAU;
        let bound = 0.25 * domination_factor(rho);
        table.push(row![rho, grid * grid, excess, norm, q.mean, q.std_error, exact, bound, s.seed]);
        checks.push(Check::new(format!("dominated pointwise, rho={rho}"), excess <= BOUND_TOLERANCE, format!("max excess {excess:e}")));
        checks.push(Check::new(
            format!("normalized, rho={rho}"),
            (norm - 1.0).abs() <= 1e-6,
            format!("integral {norm}"),
        ));
        checks.push(Check::new(
            format!("quadrant below bound, rho={rho}"),
            q.mean <= bound + 4.0 * q.std_error,
            format!("{} vs {bound}", q.mean),
        ));
    }
    Ok(Report {
        table,
        checks,
        parameters: json!({
            "rho": floats(&rhos), "grid": grid, "norm_grid": norm_grid, "mu1": mu1, "mu2": mu2,
            "var1": var1, "var2": var2, "samples": samples
        }),
        plot: ("rho", "max_excess"),
    })
}

fn steinhaus(p: SteinhausParams, s: &Settings) -> Result<Report, CliError> {
    let xs = req(p.x, "steinhaus", "x")?;
    nonempty(&xs, "steinhaus", "x")?;
    let samples = s.samples.unwrap_or(10_000);
    let seed = Seed::new(s.seed);
    let mut table = Table::new(&["x", "samples", "mean_sq", "se_sq", "mean_abs", "se_abs", "compensated", "seed"]);
    let mut checks = Vec::new();
    for &x in &xs {
        let (sq, abs) = steinhaus_moments(x, samples, seed)?;
        let comp = (x > std::f64::consts::E).then(|| abs.mean * steinhaus_compensation(x));
        table.push(row![x, samples, sq.mean, sq.std_error, abs.mean, abs.std_error, comp, s.seed]);
        checks.push(Check::new(
            format!("E|S({x})|^2 = floor(x)"),
            sq.within(x.floor(), 4.0),
            format!("{} +- {}", sq.mean, sq.std_error),
        ));
    }
    Ok(Report {
        table,
        checks,
        parameters: json!({ "x": floats(&xs), "samples": samples }),
        plot: ("x", "mean_abs"),
    })
}

fn ff(p: FfParams, s: &Settings) -> Result<Report, CliError> {
    let q = req(p.q, "ff", "q")?;
    let n = req(p.n, "ff", "N")?;
    let mode = p.mode.unwrap_or(FfMode::Moment);
    let seed = Seed::new(s.seed);
    let mut checks = Vec::new();
    let (table, parameters, plot) = match mode {
        FfMode::Moment => {
            let samples = s.samples.unwrap_or(2000);
            let e = ff_second_moment(q, n, samples, seed)?;
            let mut t = Table::new(&["q", "N", "samples", "mean", "std_error", "seed"]);
            t.push(row![q, n, samples, e.mean, e.std_error, s.seed]);
            checks.push(Check::new(
                "E|A(N)|^2 = 1",
                e.within(1.0, 4.0),
                format!("{} +- {}", e.mean, e.std_error),
            ));
            (t, json!({ "q": q, "N": n, "mode": mode, "samples": samples }), ("N", "mean"))
        }
        FfMode::Counts => {
            let brute = p.brute.unwrap_or(true);
            let mut t = Table::new(&["q", "n", "irreducibles", "brute_force", "agree"]);
            let mut bad = Vec::new();
            for d in 1..=n {
                let c = count_irreducibles(q, d)?;
                let b = if brute { Some(count_irreducibles_brute(q, d)?) } else { None };
                let agree = b.map(|b| b == c);
                if agree == Some(false) {
                    bad.push(format!("n={d}"));
                }
                t.push(row![q, d, c, b, agree]);
            }
            checks.push(Check::new("Moebius count equals enumeration", bad.is_empty(), bad.join("; ")));
            (t, json!({ "q": q, "N": n, "mode": mode, "brute": brute }), ("n", "irreducibles"))
        }
        FfMode::Identity => {
            let model = FFModel::new(q, n, seed)?;
            let a = model.a_coefficients();
            let e = model.exp_identity()?;
            let eu = model.euler_product();
            let mut t = Table::new(&["q", "n", "a_re", "a_im", "exp_identity_error", "euler_error", "seed"]);
            let mut worst: f64 = 0.0;
            for d in 0..=n as usize {
                let (de, du) = ((a[d] - e[d]).norm(), (a[d] - eu[d]).norm());
                worst = worst.max(de).max(du);
                t.push(row![q, d, a[d].re, a[d].im, de, du, s.seed]);
            }
            checks.push(Check::new(
                "exp identity and Euler product reproduce A(n)",
                worst <= 1e-9,
                format!("max error {worst:e}"),
            ));
            (t, json!({ "q": q, "N": n, "mode": mode }), ("n", "exp_identity_error"))
        }
    };
    Ok(Report {
        table,
        checks,
        parameters,
        plot,
    })
}

fn series_selftest(p: SelftestParams, s: &Settings) -> Result<Report, CliError> {
    let n = p.n.unwrap_or(4096);
    let trials = p.trials.unwrap_or(3);
    let part_max = p.partition_n_max.unwrap_or(10);
    let lp_max = p.largest_part_n_max.unwrap_or(12);
    let j_max = p.j_max.unwrap_or(3);
    if trials == 0 {
        return Err(CliError::Config("series-selftest needs at least one trial".into()));
    }
    let seed = Seed::new(s.seed);
    let mut table = Table::new(&["check", "size", "trials", "max_error", "tolerance", "pass", "seed"]);
    let mut checks = Vec::new();
    let mut add = |name: &str, size: usize, err: f64, tol: f64, table: &mut Table| {
        let pass = err <= tol;
        table.push(row![name, size, trials, err, tol, pass, s.seed]);
        checks.push(Check::new(name, pass, format!("max error {err:e}, tolerance {tol:e}")));
    };

    let engines: Vec<f64> = map_replicates(seed, trials, |_, sd| {
        let xs = GaussianStream::new(sd).take_n(n);
        let l = log_series(&xs, n);
        let a = exp_series_with(&l, n, ExpEngine::Relaxed)?;
        let b = exp_series_with(&l, n, ExpEngine::Recurrence)?;
        Ok::<f64, holochaos::Error>((0..=n).map(|i| (a.coeff(i) - b.coeff(i)).norm()).fold(0.0, f64::max))
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    add("exp-engines", n, engines.iter().copied().fold(0.0, f64::max), 1e-9, &mut table);

    let sampler = |m: usize, xs: &[holochaos::Complex64]| -> Result<holochaos::Complex64, holochaos::Error> {
        let mut src = holochaos::FixedValues::new(xs.to_vec());
        Ok(sample_a_with(m, m.max(1) as f64, &mut src, ExpEngine::Recurrence)?.a(m))
    };
    let mut worst: f64 = 0.0;
    for t in 0..trials as u64 {
        let xs = GaussianStream::new(seed.split(t)).take_n(part_max.max(lp_max));
        for m in 1..=part_max {
            worst = worst.max((partition_sum_a(m, &xs)? - sampler(m, &xs[..m])?).norm());
        }
    }
    add("partition-sum", part_max, worst, 1e-10, &mut table);

    let mut worst: f64 = 0.0;
    for t in 0..trials as u64 {
        let xs = GaussianStream::new(seed.split(t)).take_n(part_max.max(lp_max));
        for m in 1..=lp_max {
            let a = sampler(m, &xs[..m])?;
            for j in 1..=j_max {
                let d = reconstruct_a_by_largest_part(m, j, &xs)?;
                let sum = d.components.iter().sum::<holochaos::Complex64>() + d.smooth;
                worst = worst.max((sum - a).norm()).max((d.total - a).norm());
            }
        }
    }
    add("largest-part", lp_max, worst, 1e-10, &mut table);

    Ok(Report {
        table,
        checks,
        parameters: json!({
            "N": n, "trials": trials, "partition_N_max": part_max, "largest_part_N_max": lp_max, "J_max": j_max
        }),
        plot: ("size", "max_error"),
    })
}
