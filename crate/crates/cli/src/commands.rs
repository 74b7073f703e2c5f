use std::path::PathBuf;

use levywalk::analytics::{governing_equation_check, invert_flt_1d};
use levywalk::config::ExperimentConfig;
use levywalk::limit::{default_chunk, default_truncation, sample_limit_pair_covering};
use levywalk::stats::{
    convergence_suite, estimate_moments, fit_variance_exponent, govcheck_monte_carlo, replicate,
    ExponentFit, MomentReport,
};
use levywalk::walk::simulate_skeleton;
use levywalk::Result;
use serde::Serialize;

use crate::output::Artifacts;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(lead: &[&str], prefix: &str, dim: usize) -> String {
    let mut cols: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    cols.extend((1..=dim).map(|i| format!("{prefix}_{i}")));
    cols.join(",")
}

fn skeleton_limit(cfg: &ExperimentConfig) -> usize {
    cfg.output.skeleton_replicas.unwrap_or(usize::MAX)
}

/// A command that ran but whose numerical diagnostics failed.
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub diagnostic: Option<String>,
}

impl Outcome {
    fn ok(written: Vec<PathBuf>) -> Self {
        Self {
            written,
            diagnostic: None,
        }
    }
}

pub fn simulate_walk(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Outcome> {
    let walk = cfg.walk_config()?;
    let grid = cfg.t_values();
    let dim = walk.dim();
    let runs = replicate(cfg.seed, cfg.replicas, |_, rng| {
        let sk = simulate_skeleton(&walk, cfg.horizon, rng)?;
        let w = sk.walk_on_grid(&grid)?;
        Ok((sk, w))
    })?;
    let paths = art.csv("walk_paths.csv", |out| {
        writeln!(out, "{}", header(&["replica", "t"], "w", dim))?;
        for (r, (_, w)) in runs.iter().enumerate() {
            for (t, p) in grid.iter().zip(w.chunks(dim)) {
                let vals: Vec<String> = p.iter().map(|v| fmt(*v)).collect();
                writeln!(out, "{r},{},{}", fmt(*t), vals.join(","))?;
            }
        }
        Ok(())
    })?;
    let skeleton = art.csv("walk_skeleton.csv", |out| {
        let mut cols = header(&["replica", "n", "T"], "S", dim);
        cols.push_str(&(1..=dim).map(|i| format!(",theta_{i}")).collect::<String>());
        writeln!(out, "{cols}")?;
        for (r, (sk, _)) in runs.iter().enumerate().take(skeleton_limit(cfg)) {
            for (n, t) in sk.time_path().values().iter().enumerate().take(sk.steps()) {
                let s: Vec<String> = sk.space_path().value(n).iter().map(|v| fmt(*v)).collect();
                let th: Vec<String> = sk.direction(n).iter().map(|v| fmt(*v)).collect();
                writeln!(out, "{r},{},{},{},{}", n + 1, fmt(*t), s.join(","), th.join(","))?;
            }
        }
        Ok(())
    })?;
    Ok(Outcome::ok(vec![paths, skeleton]))
}

pub fn simulate_limit(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Outcome> {
    let law = cfg.direction_law()?;
    let grid = cfg.t_values();
    let dim = law.dim();
    let t_max = cfg.horizon;
    let truncation = cfg.truncation().unwrap_or_else(|| default_truncation(t_max));
    let chunk = default_chunk(cfg.beta, t_max);
    let runs = replicate(cfg.seed, cfg.replicas, |_, rng| {
        let (pair, chunks) = sample_limit_pair_covering(cfg.beta, &law, t_max, chunk, truncation, rng)?;
        let path = pair.limit_process_on_grid(&grid)?;
        Ok((path, chunks))
    })?;
    let paths = art.csv("limit_paths.csv", |out| {
        writeln!(out, "{}", header(&["replica", "t"], "l", dim))?;
        for (r, (path, _)) in runs.iter().enumerate() {
            for (i, t) in grid.iter().enumerate() {
                let vals: Vec<String> = path.point(i).iter().map(|v| fmt(*v)).collect();
                writeln!(out, "{r},{},{}", fmt(*t), vals.join(","))?;
            }
        }
        Ok(())
    })?;
    let series = art.csv("jump_series.csv", |out| {
        writeln!(out, "{}", header(&["replica", "chunk", "U", "r"], "theta", dim))?;
        for (r, (_, chunks)) in runs.iter().enumerate().take(skeleton_limit(cfg)) {
            for (c, s) in chunks.iter().enumerate() {
                for k in 0..s.len() {
                    let th: Vec<String> = s.direction(k).iter().map(|v| fmt(*v)).collect();
                    writeln!(
                        out,
                        "{r},{c},{},{},{}",
                        fmt(s.arrivals[k]),
                        fmt(s.sizes[k]),
                        th.join(",")
                    )?;
                }
            }
        }
        Ok(())
    })?;
    Ok(Outcome::ok(vec![paths, series]))
}

fn moments_report(cfg: &ExperimentConfig) -> Result<MomentReport> {
    estimate_moments(&cfg.process()?, cfg.seed, cfg.replicas, &cfg.t_values())
}

fn speed_diagnostic(violations: usize) -> Option<String> {
    (violations > 0).then(|| format!("{violations} sampled points violate the speed bound"))
}

pub fn moments(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Outcome> {
    let report = moments_report(cfg)?;
    let csv = art.csv("moments.csv", |out| report.write_csv(out))?;
    let json = art.json("moments.json", &report)?;
    Ok(Outcome {
        written: vec![csv, json],
        diagnostic: speed_diagnostic(report.speed_violations),
    })
}

#[derive(Serialize)]
struct ScalingFit<'a> {
    fit: &'a ExponentFit,
    moments: &'a MomentReport,
}

pub fn scaling_fit(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Outcome> {
    let report = moments_report(cfg)?;
    let fit = fit_variance_exponent(&report)?;
    let csv = art.csv("moments.csv", |out| report.write_csv(out))?;
    let json = art.json(
        "scaling_fit.json",
        &ScalingFit {
            fit: &fit,
            moments: &report,
        },
    )?;
    Ok(Outcome {
        written: vec![csv, json],
        diagnostic: speed_diagnostic(report.speed_violations),
    })
}

pub fn ks(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Outcome> {
    let report = convergence_suite(&cfg.convergence_config()?)?;
    let json = art.json("ks.json", &report)?;
    Ok(Outcome {
        written: vec![json],
        diagnostic: speed_diagnostic(report.speed_violations),
    })
}

pub fn density(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Outcome> {
    let (spec, grid) = cfg.density_grid()?;
    let d = invert_flt_1d(&cfg.symbol()?, spec.t, &grid, &spec.inversion)?;
    let csv = art.csv("density.csv", |out| d.write_csv(out))?;
    let json = art.json("density.json", &d)?;
    Ok(Outcome::ok(vec![csv, json]))
}

pub fn govcheck(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Outcome> {
    let (ks, ss, mc) = cfg.govcheck_grids()?;
    let symbol = cfg.symbol()?;
    let mut report = governing_equation_check(&symbol, &ks, &ss)?;
    if let Some(mc) = &mc {
        govcheck_monte_carlo(&symbol, &cfg.direction_law()?, &mut report, mc)?;
    }
    let json = art.json("govcheck.json", &report)?;
    let diagnostic = (report.monte_carlo_passed() == Some(false)).then(|| {
        "Monte Carlo transform deviates from the formula beyond 4 SE + budget".to_string()
    });
    Ok(Outcome {
        written: vec![json],
        diagnostic,
    })
}
