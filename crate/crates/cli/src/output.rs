//! CSV rows and plot scripts written by the commands.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use ris_smdp::simulator::{Estimate, SimReport};
use ris_smdp::{Metrics, Policy, ScenarioConfig};
use serde::Serialize;

pub const METRICS_HEADER: [&str; 13] = [
    "preset",
    "lambda_s",
    "mu_s",
    "lambda_m",
    "mu_m",
    "num_states",
    "acceptance_prob",
    "blocking_prob",
    "avg_reward_transition",
    "avg_reward_time",
    "vi_iterations",
    "residual",
    "runtime_ms",
];

#[derive(Debug, Clone, Serialize)]
pub struct MetricsRow {
    pub preset: String,
    pub lambda_s: f64,
    pub mu_s: f64,
    pub lambda_m: f64,
    pub mu_m: f64,
    pub num_states: usize,
    pub acceptance_prob: f64,
    pub blocking_prob: f64,
    pub avg_reward_transition: f64,
    pub avg_reward_time: f64,
    pub vi_iterations: Option<usize>,
    pub residual: Option<f64>,
    pub runtime_ms: u128,
}

impl MetricsRow {
    pub fn new(
        preset: &str,
        cfg: &ScenarioConfig,
        num_states: usize,
        metrics: &Metrics,
        policy: Option<&Policy>,
        runtime_ms: u128,
    ) -> MetricsRow {
        MetricsRow {
            preset: preset.to_string(),
            lambda_s: cfg.rates.lambda_s,
            mu_s: cfg.rates.mu_s,
            lambda_m: cfg.rates.lambda_m,
            mu_m: cfg.rates.mu_m,
            num_states,
            acceptance_prob: metrics.acceptance_prob,
            blocking_prob: metrics.blocking_prob,
            avg_reward_transition: metrics.avg_reward_per_transition,
            avg_reward_time: metrics.avg_reward_per_time,
            vi_iterations: policy.map(|p| p.meta.iterations),
            residual: policy.map(|p| p.meta.residual),
            runtime_ms,
        }
    }
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    if rows.is_empty() {
        w.write_record(METRICS_HEADER)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Simulation summary: the metrics columns, then CI half-widths and counts.
#[derive(Debug, Clone, Serialize)]
pub struct SimRow {
    pub preset: String,
    pub lambda_s: f64,
    pub mu_s: f64,
    pub lambda_m: f64,
    pub mu_m: f64,
    pub num_states: usize,
    pub acceptance_prob: f64,
    pub blocking_prob: f64,
    pub avg_reward_transition: f64,
    pub avg_reward_time: f64,
    pub vi_iterations: Option<usize>,
    pub residual: Option<f64>,
    pub runtime_ms: u128,
    pub ci_acceptance_prob: f64,
    pub ci_blocking_prob: f64,
    pub ci_avg_reward_transition: f64,
    pub ci_avg_reward_time: f64,
    pub arrivals: u64,
    pub accepts: u64,
    pub rejects: u64,
    pub failures: u64,
    pub transfers: u64,
    pub departures: u64,
}

impl SimRow {
    pub fn new(
        preset: &str,
        cfg: &ScenarioConfig,
        num_states: usize,
        report: &SimReport,
        runtime_ms: u128,
    ) -> SimRow {
        SimRow {
            preset: preset.to_string(),
            lambda_s: cfg.rates.lambda_s,
            mu_s: cfg.rates.mu_s,
            lambda_m: cfg.rates.lambda_m,
            mu_m: cfg.rates.mu_m,
            num_states,
            acceptance_prob: report.acceptance.mean,
            blocking_prob: report.blocking.mean,
            avg_reward_transition: report.avg_reward_transition.mean,
            avg_reward_time: report.avg_reward_time.mean,
            vi_iterations: None,
            residual: None,
            runtime_ms,
            ci_acceptance_prob: report.acceptance.half_width,
            ci_blocking_prob: report.blocking.half_width,
            ci_avg_reward_transition: report.avg_reward_transition.half_width,
            ci_avg_reward_time: report.avg_reward_time.half_width,
            arrivals: report.counts.arrivals,
            accepts: report.counts.accepts,
            rejects: report.counts.rejects,
            failures: report.counts.failures,
            transfers: report.counts.transfers,
            departures: report.counts.departures,
        }
    }
}

pub fn write_sim_report(path: &Path, row: &SimRow) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    w.serialize(row)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub metric: &'static str,
    pub analytic: f64,
    pub simulated: f64,
    pub ci_half_width: f64,
    pub pass: bool,
}

pub fn cross_checks(analytic: &Metrics, report: &SimReport) -> Vec<CrossCheck> {
    let check = |metric, analytic: f64, est: &Estimate| CrossCheck {
        metric,
        analytic,
        simulated: est.mean,
        ci_half_width: est.half_width,
        pass: est.contains(analytic),
    };
    vec![
        check(
            "acceptance_prob",
            analytic.acceptance_prob,
            &report.acceptance,
        ),
        check("blocking_prob", analytic.blocking_prob, &report.blocking),
        check(
            "avg_reward_transition",
            analytic.avg_reward_per_transition,
            &report.avg_reward_transition,
        ),
        check(
            "avg_reward_time",
            analytic.avg_reward_per_time,
            &report.avg_reward_time,
        ),
    ]
}

pub fn write_cross_checks(path: &Path, checks: &[CrossCheck]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    for c in checks {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

/// Gnuplot script drawing blocking probability and both reward averages
/// against column `x_column` of `metrics.csv`, one curve per preset.
pub fn write_gnuplot(
    path: &Path,
    x_column: usize,
    x_label: &str,
    presets: &[String],
) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let names = presets.join(" ");
    writeln!(f, "set datafile separator ','")?;
    writeln!(f, "set key autotitle columnhead")?;
    writeln!(f, "set xlabel '{x_label}'")?;
    writeln!(f, "set terminal pngcairo size 900,600")?;
    writeln!(f, "presets = \"{names}\"")?;
    for (col, name) in [
        (7, "acceptance_prob"),
        (8, "blocking_prob"),
        (9, "avg_reward_transition"),
        (10, "avg_reward_time"),
    ] {
        writeln!(f, "set output '{name}.png'")?;
        writeln!(f, "set ylabel '{name}'")?;
        writeln!(
            f,
            "plot for [p in presets] 'metrics.csv' using (strcol(1) eq p ? ${x_column} : NaN):{col} \
             with linespoints title p"
        )?;
    }
    Ok(())
}
