//! Monte Carlo experiments: moments, scaling exponents, two-sample
//! Kolmogorov–Smirnov comparisons and convergence ladders.
//!
//! Replica `i` always draws from `rng::stream(seed, i)` and results are
//! reduced in replica order, so reports do not depend on the worker count.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{GoverningReport, MonteCarloComparison, Symbol};
use crate::error::{invalid, Error, Result};
use crate::limit::{
    default_chunk, default_truncation, expected_truncated_mass, sample_jump_series,
    sample_limit_pair_covering, stable_limit_marginal, Truncation,
};
use crate::paths::{fmt_f64, within_speed_bound};
use crate::rng::{derive_seed, stream, Stream};
use crate::stable::{sample_one_sided_stable, DirectionLaw, MovingTimeLaw};
use crate::walk::{simulate_skeleton, RescaleSpec, WalkConfig};

/// Which process a moment experiment samples.
#[derive(Debug, Clone)]
pub enum Process {
    /// The Lévy walk W(t), optionally rescaled at scale `scale`.
    Walk {
        config: WalkConfig,
        scale: Option<f64>,
    },
    /// The limit process L(t) built from the truncated jump series.
    Limit {
        beta: f64,
        directions: DirectionLaw,
        truncation: Option<Truncation>,
    },
}

impl Process {
    pub fn dim(&self) -> usize {
        match self {
            Self::Walk { config, .. } => config.dim(),
            Self::Limit { directions, .. } => directions.dim(),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Self::Walk { .. } => "walk",
            Self::Limit { .. } => "limit",
        }
    }

    /// One replica evaluated on `grid`, row-major, plus the number of
    /// speed-bound violations among the unscaled points.
    fn sample_grid(&self, grid: &[f64], rng: &mut Stream) -> Result<(Vec<f64>, usize)> {
        let t_max = grid.iter().copied().fold(0.0, f64::max);
        let dim = self.dim();
        let mut out = vec![0.0; grid.len() * dim];
        let mut violations = 0;
        match self {
            Self::Walk { config, scale } => {
                let spec = scale
                    .map(|c| RescaleSpec::for_law(&config.moving_time, c))
                    .transpose()?;
                let horizon = spec.map_or(t_max, |s| s.required_horizon(t_max));
                let sk = simulate_skeleton(config, horizon, rng)?;
                for (t, row) in grid.iter().zip(out.chunks_mut(dim)) {
                    let (time, factor) = spec.map_or((*t, 1.0), |s| s.map(*t));
                    sk.walk_at_into(time, row)?;
                    if !within_speed_bound(row, time) {
                        violations += 1;
                    }
                    if factor != 1.0 {
                        row.iter_mut().for_each(|v| *v *= factor);
                    }
                }
            }
            Self::Limit {
                beta,
                directions,
                truncation,
            } => {
                let tr = truncation.unwrap_or_else(|| default_truncation(t_max));
                let (pair, _) = sample_limit_pair_covering(
                    *beta,
                    directions,
                    t_max,
                    default_chunk(*beta, t_max.max(1e-12)),
                    tr,
                    rng,
                )?;
                let path = pair.limit_process_on_grid(grid)?;
                for (i, t) in grid.iter().enumerate() {
                    if !within_speed_bound(path.point(i), *t) {
                        violations += 1;
                    }
                }
                out.copy_from_slice(&path.w);
            }
        }
        Ok((out, violations))
    }
}

/// Moments at one time point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentRow {
    pub t: f64,
    pub mean: Vec<f64>,
    pub se_mean: Vec<f64>,
    /// Per-coordinate unbiased variance.
    pub variance: Vec<f64>,
    /// E‖X‖² and its standard error.
    pub second_moment: f64,
    pub se_second_moment: f64,
    /// Trace of the covariance, Σ variance.
    pub total_variance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentReport {
    pub process: String,
    pub seed: u64,
    pub replicas: usize,
    pub dim: usize,
    pub speed_violations: usize,
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    pub fn t_grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    /// `t, mean_i.., var_i.., se_i.., m2, se_m2`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let dim = self.dim;
        let cols = |p: &'static str| (1..=dim).map(move |i| format!("{p}_{i}"));
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain(cols("mean"))
            .chain(cols("var"))
            .chain(cols("se"))
            .chain(["second_moment".into(), "se_second_moment".into()])
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for r in &self.rows {
            let fields: Vec<String> = std::iter::once(r.t)
                .chain(r.mean.iter().copied())
                .chain(r.variance.iter().copied())
                .chain(r.se_mean.iter().copied())
                .chain([r.second_moment, r.se_second_moment])
                .map(fmt_f64)
                .collect();
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Runs `f(i, stream(seed, i))` for every replica in parallel and returns
/// the results in replica order.
pub fn replicate<T, F>(seed: u64, replicas: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut Stream) -> Result<T> + Sync,
{
    (0..replicas)
        .into_par_iter()
        .map(|i| f(i, &mut stream(seed, i as u64)))
        .collect()
}

pub fn estimate_moments(
    process: &Process,
    seed: u64,
    replicas: usize,
    t_grid: &[f64],
) -> Result<MomentReport> {
    if replicas < 100 {
        return Err(invalid("replicas", format!("{replicas} is below 100")));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[0] < w[1])) || !(t_grid[0] >= 0.0) {
        return Err(invalid("t_grid", "must be nonempty, nonnegative and increasing"));
    }
    let dim = process.dim();
    let samples = replicate(seed, replicas, |_, rng| process.sample_grid(t_grid, rng))?;
    let n = replicas as f64;
    let speed_violations = samples.iter().map(|(_, v)| v).sum();
    let rows = t_grid
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let point = |r: &(Vec<f64>, usize)| r.0[ti * dim..(ti + 1) * dim].to_vec();
            let mut mean = vec![0.0; dim];
            let mut m2 = 0.0;
            for r in &samples {
                let p = point(r);
                mean.iter_mut().zip(&p).for_each(|(m, v)| *m += v);
                m2 += p.iter().map(|v| v * v).sum::<f64>();
            }
            mean.iter_mut().for_each(|m| *m /= n);
            m2 /= n;
            let mut variance = vec![0.0; dim];
            let mut m2_var = 0.0;
            for r in &samples {
                let p = point(r);
                variance
                    .iter_mut()
                    .zip(p.iter().zip(&mean))
                    .for_each(|(v, (x, m))| *v += (x - m) * (x - m));
                let sq: f64 = p.iter().map(|v| v * v).sum();
                m2_var += (sq - m2) * (sq - m2);
            }
            variance.iter_mut().for_each(|v| *v /= n - 1.0);
            MomentRow {
                t,
                se_mean: variance.iter().map(|v| (v / n).sqrt()).collect(),
                total_variance: variance.iter().sum(),
                mean,
                variance,
                second_moment: m2,
                se_second_moment: (m2_var / (n - 1.0) / n).sqrt(),
            }
        })
        .collect();
    Ok(MomentReport {
        process: process.label().into(),
        seed,
        replicas,
        dim,
        speed_violations,
        rows,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log–log fit.
    pub residual: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

/// Least-squares slope of log(total variance) against log t.
pub fn fit_variance_exponent(report: &MomentReport) -> Result<ExponentFit> {
    let rows: Vec<&MomentRow> = report.rows.iter().collect();
    if rows.len() < 5 {
        return Err(Error::DegenerateFit(format!(
            "{} grid points, need at least 5",
            rows.len()
        )));
    }
    let (t_min, t_max) = (rows[0].t, rows[rows.len() - 1].t);
    if !(t_min > 0.0 && t_max / t_min >= 10.0 * (1.0 - 1e-12)) {
        return Err(Error::DegenerateFit(format!(
            "t-range [{t_min}, {t_max}] spans less than one decade"
        )));
    }
    if let Some(r) = rows.iter().find(|r| !(r.total_variance > 0.0)) {
        return Err(Error::DegenerateFit(format!(
            "variance {} at t = {} is not positive",
            r.total_variance, r.t
        )));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.total_variance.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(ExponentFit {
        exponent: slope,
        intercept,
        residual,
        t_min,
        t_max,
        points: rows.len(),
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Log-spaced grid of `n` points on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub n1: usize,
    pub n2: usize,
    pub p_value: f64,
    pub level: f64,
    pub critical_value: f64,
    pub reject: bool,
}

/// Kolmogorov survival function Q(λ) = 2 Σ (−1)^{j−1} e^{−2j²λ²}.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic critical value c(α)·√((n₁+n₂)/(n₁n₂)), c(α) = √(−ln(α/2)/2).
pub fn ks_critical_value(n1: usize, n2: usize, level: f64) -> f64 {
    let c = (-(level / 2.0).ln() / 2.0).sqrt();
    c * ((n1 + n2) as f64 / (n1 as f64 * n2 as f64)).sqrt()
}

/// Supremum distance between the two empirical distribution functions.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    d
}

pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<KsReport> {
    if a.len() < 100 || b.len() < 100 {
        return Err(invalid(
            "samples",
            format!("sizes {} and {} must both be at least 100", a.len(), b.len()),
        ));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(invalid("samples", "contain NaN"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid("level", format!("{level} is outside (0, 1)")));
    }
    let statistic = ks_statistic(a, b);
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let p_value = kolmogorov_survival((ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * statistic);
    Ok(KsReport {
        statistic,
        n1: a.len(),
        n2: b.len(),
        p_value,
        level,
        critical_value: ks_critical_value(a.len(), b.len(), level),
        reject: p_value < level,
    })
}

/// What the rescaled walk marginal is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Simulated L(t), β ∈ (0, 1).
    Limit,
    /// Exact β-stable marginal, β ∈ (1, 2).
    Stable,
    /// Gaussian with variance t·E[J²]/E[J]·E[θ₁²], finite-variance flights.
    Gaussian,
    /// A degenerate direction law: the limit is t·θ.
    Deterministic,
}

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub moving_time: MovingTimeLaw,
    pub directions: DirectionLaw,
    pub scales: Vec<f64>,
    pub samples: usize,
    pub macro_replicas: usize,
    pub level: f64,
    pub t: f64,
    pub seed: u64,
    pub truncation: Option<Truncation>,
    /// Projection vector for m ≥ 2; defaults to the first coordinate axis.
    pub projection: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LadderRung {
    pub c: f64,
    pub statistics: Vec<f64>,
    pub median: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub reference: Reference,
    pub t: f64,
    pub samples: usize,
    pub macro_replicas: usize,
    pub level: f64,
    pub critical_value: f64,
    pub rungs: Vec<LadderRung>,
    pub decreasing: bool,
    pub final_below_twice_critical: bool,
    pub speed_violations: usize,
}

impl ConvergenceConfig {
    pub fn reference(&self) -> Result<Reference> {
        if self.directions.atom_list().is_some_and(|a| a.len() == 1) {
            return Ok(Reference::Deterministic);
        }
        match self.moving_time {
            MovingTimeLaw::Exponential { .. } => Ok(Reference::Gaussian),
            MovingTimeLaw::Pareto { beta, .. } | MovingTimeLaw::ExactStable { beta } if beta < 1.0 => {
                Ok(Reference::Limit)
            }
            MovingTimeLaw::Pareto { beta, .. } if beta > 1.0 && beta < 2.0 => Ok(Reference::Stable),
            _ => Err(invalid(
                "moving_time",
                format!("no limit reference for {:?}", self.moving_time),
            )),
        }
    }

    fn projection(&self) -> Result<Vec<f64>> {
        let dim = self.directions.dim();
        match &self.projection {
            Some(p) if p.len() == dim => Ok(p.clone()),
            Some(p) => Err(invalid(
                "projection",
                format!("has dimension {}, expected {dim}", p.len()),
            )),
            None => {
                let mut e = vec![0.0; dim];
                e[0] = 1.0;
                Ok(e)
            }
        }
    }
}

fn project(x: &[f64], p: &[f64]) -> f64 {
    x.iter().zip(p).map(|(a, b)| a * b).sum()
}

/// Draws `n` projected samples of the reference marginal at time `t`.
pub fn reference_samples(
    cfg: &ConvergenceConfig,
    reference: Reference,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let p = cfg.projection()?;
    let t = cfg.t;
    match reference {
        Reference::Deterministic => {
            let th = cfg.directions.atom_list().expect("atomic law")[0].0.to_vec();
            Ok(vec![t * project(&th, &p); n])
        }
        Reference::Limit => {
            let beta = cfg.moving_time.beta().expect("heavy-tailed law");
            let tr = cfg.truncation.unwrap_or_else(|| default_truncation(t));
            replicate(seed, n, |_, rng| {
                let (pair, _) = sample_limit_pair_covering(
                    beta,
                    &cfg.directions,
                    t,
                    default_chunk(beta, t),
                    tr,
                    rng,
                )?;
                Ok(project(&pair.limit_process_at(t)?, &p))
            })
        }
        Reference::Stable => {
            let beta = cfg.moving_time.beta().expect("heavy-tailed law");
            replicate(seed, n, |_, rng| {
                Ok(project(&stable_limit_marginal(beta, &cfg.directions, t, rng)?, &p))
            })
        }
        Reference::Gaussian => {
            let MovingTimeLaw::Exponential { rate } = cfg.moving_time else {
                unreachable!("Gaussian reference requires exponential flights");
            };
            // E[J²]/E[J] = 2/rate; E⟨p,θ⟩² from the direction law.
            let proj_var = direction_projection_second_moment(&cfg.directions, &p);
            let sd = (t * 2.0 / rate * proj_var).sqrt();
            replicate(seed, n, |_, rng| {
                let g: f64 = rng.sample(rand_distr::StandardNormal);
                Ok(sd * g)
            })
        }
    }
}

fn direction_projection_second_moment(law: &DirectionLaw, p: &[f64]) -> f64 {
    match law.atom_list() {
        Some(atoms) => atoms.iter().map(|(th, w)| w * project(th, p).powi(2)).sum(),
        None => p.iter().map(|v| v * v).sum::<f64>() / law.dim() as f64,
    }
}

/// Runs the marginal KS ladder over `cfg.scales`.
pub fn convergence_suite(cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    if cfg.scales.is_empty() || cfg.macro_replicas == 0 {
        return Err(invalid("scales", "need at least one scale and one macro-replica"));
    }
    if !(cfg.t > 0.0) {
        return Err(invalid("t", format!("{} must be positive", cfg.t)));
    }
    let reference = cfg.reference()?;
    let p = cfg.projection()?;
    let walk = WalkConfig::new(cfg.moving_time, cfg.directions.clone())?;
    let mut rungs = Vec::with_capacity(cfg.scales.len());
    let mut speed_violations = 0;
    for (ci, &c) in cfg.scales.iter().enumerate() {
        let spec = RescaleSpec::for_law(&cfg.moving_time, c)?;
        let mut statistics = Vec::with_capacity(cfg.macro_replicas);
        for m in 0..cfg.macro_replicas {
            let walk_seed = derive_seed(cfg.seed, &format!("walk/{ci}/{m}"));
            let ref_seed = derive_seed(cfg.seed, &format!("reference/{ci}/{m}"));
            let draws = replicate(walk_seed, cfg.samples, |_, rng| {
                let (time, factor) = spec.map(cfg.t);
                let sk = simulate_skeleton(&walk, time, rng)?;
                let w = sk.walk_at(time)?;
                Ok((project(&w, &p) * factor, !within_speed_bound(&w, time)))
            })?;
            speed_violations += draws.iter().filter(|d| d.1).count();
            let xs: Vec<f64> = draws.into_iter().map(|d| d.0).collect();
            let ys = reference_samples(cfg, reference, cfg.samples, ref_seed)?;
            statistics.push(ks_statistic(&xs, &ys));
        }
        rungs.push(LadderRung {
            c,
            median: median(&statistics),
            statistics,
        });
    }
    let critical_value = ks_critical_value(cfg.samples, cfg.samples, cfg.level);
    let decreasing = rungs
        .windows(2)
        .all(|w| w[1].median < w[0].median || (w[0].median == 0.0 && w[1].median == 0.0));
    let last = rungs.last().expect("nonempty ladder").median;
    Ok(ConvergenceReport {
        reference,
        t: cfg.t,
        samples: cfg.samples,
        macro_replicas: cfg.macro_replicas,
        level: cfg.level,
        critical_value,
        decreasing,
        final_below_twice_critical: last < 2.0 * critical_value,
        rungs,
        speed_violations,
    })
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// D(1) drawn from the truncated series and from the Kanter sampler,
/// `n` each, compared by KS in each of `macro_replicas` rounds.
pub fn series_oracle_check(
    beta: f64,
    truncation: Truncation,
    n: usize,
    macro_replicas: usize,
    level: f64,
    seed: u64,
) -> Result<Vec<KsReport>> {
    let law = DirectionLaw::symmetric_1d();
    (0..macro_replicas)
        .map(|m| {
            let series = replicate(derive_seed(seed, &format!("series/{m}")), n, |_, rng| {
                Ok(sample_jump_series(beta, &law, 1.0, truncation, rng)?
                    .sizes
                    .iter()
                    .sum::<f64>())
            })?;
            let exact = replicate(derive_seed(seed, &format!("kanter/{m}")), n, |_, rng| {
                sample_one_sided_stable(beta, rng)
            })?;
            ks_two_sample(&series, &exact, level)
        })
        .collect()
}

/// Settings of the Monte Carlo side of the governing-equation check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GovernMonteCarlo {
    pub replicas: usize,
    /// Paths are integrated over [0, horizon].
    pub horizon: f64,
    pub seed: u64,
    pub truncation: Option<f64>,
}

/// Attaches a Monte Carlo estimate of ∫_0^T e^{−st} E[e^{i⟨k,L(t)⟩}] dt to
/// every row of `report`. Each path is integrated exactly over its linear
/// pieces, so the only deterministic error is the neglected tail, bounded
/// by e^{−sT}/s, and the truncated small jumps, budgeted to first order
/// as (|k| + s)/s times their expected total size.
pub fn govcheck_monte_carlo(
    symbol: &Symbol,
    directions: &DirectionLaw,
    report: &mut GoverningReport,
    mc: &GovernMonteCarlo,
) -> Result<()> {
    if mc.replicas < 2 || !(mc.horizon > 0.0) {
        return Err(invalid("monte_carlo", "needs ≥ 2 replicas and a positive horizon"));
    }
    if report.rows.iter().any(|r| r.s[1] != 0.0) {
        return Err(invalid("s_grid", "Monte Carlo comparison needs real s"));
    }
    let beta = symbol.beta();
    let eps = mc.truncation.unwrap_or(1e-6 * mc.horizon);
    let chunk = default_chunk(beta, mc.horizon);
    let per_path = replicate(mc.seed, mc.replicas, |_, rng| {
        let (pair, chunks) = sample_limit_pair_covering(
            beta,
            directions,
            mc.horizon,
            chunk,
            Truncation::MinJump(eps),
            rng,
        )?;
        let vals = report
            .rows
            .iter()
            .map(|r| pair.laplace_fourier(&r.k, r.s[0], mc.horizon))
            .collect::<Result<Vec<_>>>()?;
        Ok((vals, chunks.len()))
    })?;
    let n = mc.replicas as f64;
    let mean_window = per_path.iter().map(|p| p.1 as f64).sum::<f64>() / n * chunk;
    let missing = expected_truncated_mass(beta, mean_window, eps);
    for (i, row) in report.rows.iter_mut().enumerate() {
        let mut mean = Complex64::new(0.0, 0.0);
        for p in &per_path {
            mean += Complex64::new(p.0[i].0, p.0[i].1);
        }
        mean /= n;
        let (mut vr, mut vi) = (0.0, 0.0);
        for p in &per_path {
            vr += (p.0[i].0 - mean.re).powi(2);
            vi += (p.0[i].1 - mean.im).powi(2);
        }
        let se = [(vr / (n - 1.0) / n).sqrt(), (vi / (n - 1.0) / n).sqrt()];
        let s = row.s[0];
        let knorm = row.k.iter().map(|v| v * v).sum::<f64>().sqrt();
        let budget = (-s * mc.horizon).exp() / s + (knorm + s) / s * missing;
        let deviation = (mean - Complex64::new(row.flt[0], row.flt[1])).norm();
        let allowed = 4.0 * se[0].hypot(se[1]) + budget;
        row.monte_carlo = Some(MonteCarloComparison {
            estimate: [mean.re, mean.im],
            standard_error: se,
            quadrature_budget: budget,
            deviation,
            allowed,
            within: deviation <= allowed,
        });
    }
    Ok(())
}
