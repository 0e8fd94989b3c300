use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use ris_smdp::simulator::simulate;
use ris_smdp::solver::{read_policy, write_policy};
use ris_smdp::{
    link_report, ChannelParams, ConfigError, Model, Preset, ScenarioConfig, SimConfig, SolverError,
};

mod output;

use output::{MetricsRow, SimRow};

#[derive(Parser)]
#[command(
    name = "ris-smdp",
    version,
    about = "RIS admission control and failure recovery solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write metrics.csv and policy.tsv.
    Solve {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write a gnuplot script next to the CSV.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Solve a grid of scenarios along one rate axis.
    Sweep {
        /// Config file used as the single base scenario.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Comma-separated preset names, or `all`.
        #[arg(long, default_value = "all")]
        preset: String,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated, strictly increasing, positive values.
        #[arg(long)]
        values: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        gnuplot: bool,
    },
    /// Simulate a dumped policy and cross-check it against the analytic metrics.
    Simulate {
        #[command(flatten)]
        source: Source,
        /// Policy dump written by `solve`.
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Events per replication, warmup included.
        #[arg(long, default_value_t = 1_000_000)]
        events: u64,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Evaluate the THz link budget of a channel parameter file.
    Channel {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<(String, ScenarioConfig)> {
        match (&self.config, &self.preset) {
            (Some(path), _) => Ok((config_label(path), ScenarioConfig::load(path)?)),
            (None, Some(name)) => {
                let p: Preset = name.parse()?;
                Ok((p.name().to_string(), p.config()))
            }
            (None, None) => bail!("one of --config or --preset is required"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    #[value(name = "lambda_s")]
    LambdaS,
    #[value(name = "mu_m")]
    MuM,
}

impl Axis {
    fn apply(self, cfg: &ScenarioConfig, value: f64) -> ScenarioConfig {
        match self {
            Axis::LambdaS => cfg.clone().with_lambda_s(value),
            Axis::MuM => cfg.clone().with_lambda_s(1.0).with_mu_m(value),
        }
    }

    fn column(self) -> usize {
        match self {
            Axis::LambdaS => 2,
            Axis::MuM => 5,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Axis::LambdaS => "lambda_s",
            Axis::MuM => "mu_m",
        }
    }
}

fn config_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "config".to_string())
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn solve_point(
    label: &str,
    cfg: &ScenarioConfig,
) -> Result<(Model, ris_smdp::Solution, MetricsRow)> {
    let start = Instant::now();
    let model = Model::build(cfg)?;
    let solution = model.solve()?;
    let eval = model.evaluate(&solution.policy)?;
    let row = MetricsRow::new(
        label,
        &model.cfg,
        model.space.len(),
        &eval.metrics,
        Some(&solution.policy),
        start.elapsed().as_millis(),
    );
    Ok((model, solution, row))
}

fn cmd_solve(source: &Source, out: &Path, gnuplot: bool) -> Result<()> {
    let (label, cfg) = source.load()?;
    create_out(out)?;
    let (model, solution, row) = solve_point(&label, &cfg)?;
    output::write_metrics(&out.join("metrics.csv"), std::slice::from_ref(&row))?;
    let file = fs::File::create(out.join("policy.tsv"))?;
    write_policy(
        std::io::BufWriter::new(file),
        &model.space,
        &model.kernel,
        &solution.policy,
        &solution.values,
    )?;
    if gnuplot {
        output::write_gnuplot(&out.join("plot.gp"), 2, "lambda_s", &[label])?;
    }
    println!(
        "{}: {} states, blocking {:.6}, {} sweeps",
        row.preset,
        row.num_states,
        row.blocking_prob,
        row.vi_iterations.unwrap_or(0)
    );
    Ok(())
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad sweep value `{v}`"))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        bail!("--values is empty");
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        bail!("sweep values must be positive, got {v}");
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        bail!("sweep values must be strictly increasing");
    }
    Ok(values)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    config: Option<&Path>,
    presets: &str,
    axis: Axis,
    values: &str,
    out: &Path,
    jobs: usize,
    gnuplot: bool,
) -> Result<()> {
    let values = parse_values(values)?;
    let bases: Vec<(String, ScenarioConfig)> = match config {
        Some(path) => vec![(config_label(path), ScenarioConfig::load(path)?)],
        None if presets == "all" => Preset::ALL
            .iter()
            .map(|p| (p.name().to_string(), p.config()))
            .collect(),
        None => presets
            .split(',')
            .map(|n| {
                let p: Preset = n.trim().parse()?;
                Ok((p.name().to_string(), p.config()))
            })
            .collect::<Result<_>>()?,
    };
    create_out(out)?;
    let points: Vec<(String, ScenarioConfig, f64)> = bases
        .iter()
        .flat_map(|(label, cfg)| {
            values
                .iter()
                .map(move |&v| (label.clone(), axis.apply(cfg, v), v))
        })
        .collect();
    let results: Vec<(String, f64, Result<MetricsRow>)> = pool(jobs)?.install(|| {
        points
            .par_iter()
            .map(|(label, cfg, v)| {
                let row = solve_point(label, cfg).map(|r| r.2);
                (label.clone(), *v, row)
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut first_error = None;
    for (label, v, row) in results {
        match row {
            Ok(row) => rows.push(row),
            Err(e) if first_error.is_none() => {
                first_error = Some(e.context(format!("{label} at {}={v}", axis.name())))
            }
            Err(_) => {}
        }
    }
    let key = |r: &MetricsRow| match axis {
        Axis::LambdaS => r.lambda_s,
        Axis::MuM => r.mu_m,
    };
    rows.sort_by(|a, b| a.preset.cmp(&b.preset).then(key(a).total_cmp(&key(b))));
    output::write_metrics(&out.join("metrics.csv"), &rows)?;
    if gnuplot {
        let labels: Vec<String> = bases.iter().map(|b| b.0.clone()).collect();
        output::write_gnuplot(&out.join("plot.gp"), axis.column(), axis.name(), &labels)?;
    }
    match first_error {
        Some(e) => Err(e),
        None => {
            println!("{} points written", rows.len());
            Ok(())
        }
    }
}

fn cmd_simulate(
    source: &Source,
    policy_path: &Path,
    sim: SimConfig,
    jobs: usize,
    out: &Path,
) -> Result<()> {
    let (label, cfg) = source.load()?;
    let model = Model::build(&cfg)?;
    let file = fs::File::open(policy_path)
        .with_context(|| format!("cannot open policy {}", policy_path.display()))?;
    let policy = read_policy(BufReader::new(file), &model.space, &model.kernel)?;
    create_out(out)?;
    let start = Instant::now();
    let report =
        pool(jobs)?.install(|| simulate(&model.cfg, &model.space, &model.kernel, &policy, &sim))?;
    let runtime = start.elapsed().as_millis();
    let analytic = model.evaluate(&policy)?;
    let row = SimRow::new(&label, &model.cfg, model.space.len(), &report, runtime);
    output::write_sim_report(&out.join("sim_report.csv"), &row)?;
    let checks = output::cross_checks(&analytic.metrics, &report);
    output::write_cross_checks(&out.join("crosscheck.csv"), &checks)?;
    println!("metric,analytic,simulated,ci_half_width,result");
    for c in &checks {
        println!(
            "{},{},{},{},{}",
            c.metric,
            c.analytic,
            c.simulated,
            c.ci_half_width,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(())
}

fn cmd_channel(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read channel parameters {}", path.display()))?;
    let params = ChannelParams::from_json_str(&text)?;
    let report = link_report(&params)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.serialize(report)?;
    w.flush()?;
    Ok(())
}

/// 2 for unreadable inputs, 3 for a policy built for another state space.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(ris_smdp::Error::Solver(SolverError::HashMismatch { .. })) =
            cause.downcast_ref()
        {
            return 3;
        }
        if let Some(SolverError::HashMismatch { .. }) = cause.downcast_ref() {
            return 3;
        }
        if let Some(ConfigError::Io { .. }) = cause.downcast_ref() {
            return 2;
        }
        if let Some(ris_smdp::Error::Config(ConfigError::Io { .. })) = cause.downcast_ref() {
            return 2;
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            if io.kind() == std::io::ErrorKind::NotFound {
                return 2;
            }
        }
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve {
            source,
            out,
            gnuplot,
        } => cmd_solve(&source, &out, gnuplot)?,
        Command::Sweep {
            config,
            preset,
            axis,
            values,
            out,
            jobs,
            gnuplot,
        } => cmd_sweep(
            config.as_deref(),
            &preset,
            axis,
            &values,
            &out,
            jobs,
            gnuplot,
        )?,
        Command::Simulate {
            source,
            policy,
            seed,
            events,
            reps,
            jobs,
            out,
        } => cmd_simulate(
            &source,
            &policy,
            SimConfig::new(events, seed, reps),
            jobs,
            &out,
        )?,
        Command::Channel { config } => cmd_channel(&config)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
