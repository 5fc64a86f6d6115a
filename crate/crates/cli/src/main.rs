//! `sketchtw` command-line front end.
//!
//! Exit codes: 0 on success, 2 on configuration errors (bad flags, bad config
//! file, out-of-domain parameters), 3 on data errors (unreadable or malformed
//! input, numerical failures).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sketchtw::harness::{
    load_dataset, merge, parse_config_text, replay, run_experiment, synth_dataset, ColumnRef, ConfigMap,
    ExperimentConfig, Generator, Outputs, ResultRecord, RESULT_FILE,
};
use sketchtw::solver::GradientEvaluation;
use sketchtw::tracy_widom::tw_cdf_direct;
use sketchtw::{
    apply_sketch, build_sketch, convergence_prob_approx, embedding_prob_approx, leverage_summary, sketched_solve,
    thin_svd_factor, tw_cdf, tw_quantile, Error, SketchKind, SketchSpec, SolveOptions,
};

#[derive(Parser)]
#[command(name = "sketchtw", version, about = "Random sketches and Tracy-Widom approximations")]
struct Cli {
    /// Master seed; accepted by every subcommand, used by the random ones.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tracy-Widom F1 CDF at z, to 8 decimals.
    TwCdf {
        #[arg(allow_negative_numbers = true)]
        z: f64,
        /// Solve the ODE for this z instead of interpolating the table.
        #[arg(long)]
        direct: bool,
    },
    /// Tracy-Widom F1 quantile at p, to 8 decimals.
    TwQuantile { p: f64 },
    /// Approximate probability that a Gaussian k×n sketch is an ε-embedding of a d-dim subspace.
    EmbedProb {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, required_unless_present = "table")]
        eps: Option<f64>,
        /// Print an `eps,psi_hat` CSV sweep instead of one value.
        #[arg(long)]
        table: bool,
        #[arg(long, default_value_t = 0.01)]
        eps_from: f64,
        #[arg(long, default_value_t = 1.0)]
        eps_to: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Approximate probability that the sketch-preconditioned iteration converges.
    ConvProb {
        #[arg(long, required_unless_present = "table")]
        k: Option<usize>,
        #[arg(long)]
        d: usize,
        /// Print a `k,gamma_hat` CSV sweep over k instead of one value.
        #[arg(long)]
        table: bool,
        /// First k of the sweep (default d+1).
        #[arg(long)]
        k_from: Option<usize>,
        /// Last k of the sweep (default 20d).
        #[arg(long)]
        k_to: Option<usize>,
        #[arg(long, default_value_t = 1)]
        k_step: usize,
    },
    /// Embedding experiment; prints one summary row per condition.
    EmbedExperiment(ExperimentArgs),
    /// Convergence experiment; prints the rate table.
    ConvExperiment(ExperimentArgs),
    /// Sketch timing benchmark; prints the timing table.
    Timing(ExperimentArgs),
    /// Dump the Tracy-Widom table; prints `z,cdf`.
    TwTable(ExperimentArgs),
    /// Run whatever experiment a config file names.
    Run(ExperimentArgs),
    /// Re-run the config embedded in a result file.
    Replay {
        record: PathBuf,
        /// Write into this directory instead of the recorded one.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Apply a sketch to the rows of a CSV and write the sketched CSV.
    Sketch {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        kind: SketchKind,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        header: bool,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the leverage-score summary of a CSV or synthetic design as JSON.
    Leverage {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long, conflicts_with = "data")]
        generator: Option<Generator>,
        #[arg(long, requires = "generator")]
        n: Option<usize>,
        #[arg(long, requires = "generator")]
        d: Option<usize>,
    },
    /// Solve a least-squares problem with a sketched preconditioner; prints the report as JSON.
    Solve {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        kind: SketchKind,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = sketchtw::solver::DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[arg(long, default_value_t = sketchtw::solver::DEFAULT_GRAD_TOL)]
        grad_tol: f64,
        #[arg(long, value_enum, default_value_t = Gradient::Residual)]
        gradient: Gradient,
    },
}

#[derive(Args)]
struct DesignArgs {
    /// CSV file with one observation per row.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Response column, by header name or 1-based index.
    #[arg(long)]
    response: Option<ColumnRef>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    header: bool,
    /// Prepend a column of ones.
    #[arg(long)]
    intercept: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Gradient {
    Residual,
    Gram,
}

/// Flags shared by the experiment subcommands. Each maps onto the config key
/// of the same name and overrides the config file.
#[derive(Args, Default)]
struct ExperimentArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` override; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// wishart, synthetic or file.
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    response: Option<String>,
    #[arg(long)]
    header: Option<String>,
    #[arg(long)]
    intercept: Option<String>,
    /// Comma-separated sketch kinds.
    #[arg(long)]
    kinds: Option<String>,
    /// Comma-separated sketch sizes.
    #[arg(long)]
    k: Option<String>,
    /// Comma-separated k/d ratios.
    #[arg(long)]
    k_ratio: Option<String>,
    /// Trials, runs per condition or timing repetitions.
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    eps_grid: Option<String>,
    #[arg(long)]
    eps_points: Option<String>,
    #[arg(long)]
    max_steps: Option<String>,
    #[arg(long)]
    grad_tol: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    z_min: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    z_max: Option<String>,
}

impl ExperimentArgs {
    fn flag_map(&self, seed: Option<u64>) -> sketchtw::Result<ConfigMap> {
        let mut map = ConfigMap::new();
        let flags = [
            ("source", &self.source),
            ("d", &self.d),
            ("n", &self.n),
            ("generator", &self.generator),
            ("data", &self.data),
            ("response", &self.response),
            ("header", &self.header),
            ("intercept", &self.intercept),
            ("kinds", &self.kinds),
            ("k", &self.k),
            ("k_ratio", &self.k_ratio),
            ("b", &self.b),
            ("output", &self.output),
            ("eps_grid", &self.eps_grid),
            ("eps_points", &self.eps_points),
            ("max_steps", &self.max_steps),
            ("grad_tol", &self.grad_tol),
            ("z_min", &self.z_min),
            ("z_max", &self.z_max),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        for s in &self.sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{s}'")))?;
            map.extend(parse_config_text(&format!("{k} = {v}"))?);
        }
        if let Some(seed) = seed {
            map.insert("seed".into(), seed.to_string());
        }
        Ok(map)
    }

    /// Defaults < config file < flags. A subcommand that names its experiment wins over the file.
    fn resolve(&self, experiment: Option<&str>, seed: Option<u64>) -> sketchtw::Result<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
                parse_config_text(&text)?
            }
            None => ConfigMap::new(),
        };
        let mut flags = self.flag_map(seed)?;
        if let Some(name) = experiment {
            flags.insert("experiment".into(), name.into());
        }
        ExperimentConfig::from_map(&merge(&[&file, &flags]))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

fn run(cli: Cli) -> sketchtw::Result<()> {
    let seed = cli.seed;
    let mut out = io::stdout().lock();
    match cli.command {
        Command::TwCdf { z, direct } => {
            let f = if direct { tw_cdf_direct(z)? } else { tw_cdf(z)? };
            writeln!(out, "{f:.8}")?;
        }
        Command::TwQuantile { p } => writeln!(out, "{:.8}", tw_quantile(p)?)?,
        Command::EmbedProb { k, d, eps, table, eps_from, eps_to, points } => {
            if table {
                if points < 2 || !(eps_from < eps_to) {
                    return Err(Error::Config("need --points ≥ 2 and --eps-from < --eps-to".into()));
                }
                writeln!(out, "eps,psi_hat")?;
                for i in 0..points {
                    let e = eps_from + (eps_to - eps_from) * i as f64 / (points - 1) as f64;
                    writeln!(out, "{e},{}", embedding_prob_approx(k, d, e)?)?;
                }
            } else {
                let eps = eps.expect("clap enforces --eps without --table");
                writeln!(out, "{:.8}", embedding_prob_approx(k, d, eps)?)?;
            }
        }
        Command::ConvProb { k, d, table, k_from, k_to, k_step } => {
            if table {
                let from = k_from.unwrap_or(d + 1);
                let to = k_to.unwrap_or(20 * d);
                if k_step == 0 || from > to {
                    return Err(Error::Config("need --k-step ≥ 1 and --k-from ≤ --k-to".into()));
                }
                writeln!(out, "k,gamma_hat")?;
                for k in (from..=to).step_by(k_step) {
                    writeln!(out, "{k},{}", convergence_prob_approx(k, d)?)?;
                }
            } else {
                let k = k.expect("clap enforces --k without --table");
                writeln!(out, "{:.8}", convergence_prob_approx(k, d)?)?;
            }
        }
        Command::EmbedExperiment(args) => finish(&mut out, run_experiment(&args.resolve(Some("embed"), seed)?)?)?,
        Command::ConvExperiment(args) => finish(&mut out, run_experiment(&args.resolve(Some("conv"), seed)?)?)?,
        Command::Timing(args) => finish(&mut out, run_experiment(&args.resolve(Some("timing"), seed)?)?)?,
        Command::TwTable(args) => finish(&mut out, run_experiment(&args.resolve(Some("tw-table"), seed)?)?)?,
        Command::Run(args) => {
            if args.config.is_none() && !args.sets.iter().any(|s| s.trim_start().starts_with("experiment")) {
                return Err(Error::Config("run needs --config or --set experiment=...".into()));
            }
            finish(&mut out, run_experiment(&args.resolve(None, seed)?)?)?
        }
        Command::Replay { record, output } => finish(&mut out, replay(record, output)?)?,
        Command::Sketch { input, kind, k, header, output } => {
            let data = load_dataset(&input, None, header, false)?;
            let spec = SketchSpec::new(kind, k, seed.unwrap_or(0))?;
            let sketched = apply_sketch(&build_sketch(spec, data.x.n_rows())?, &data.x)?;
            let sink: Box<dyn Write> = match &output {
                Some(path) => Box::new(fs::File::create(path)?),
                None => Box::new(io::stdout()),
            };
            let mut w = csv::Writer::from_writer(sink);
            if let Some(names) = &data.names {
                w.write_record(names)?;
            }
            for row in sketched.to_rows() {
                w.write_record(row.iter().map(|v| v.to_string()))?;
            }
            w.flush()?;
        }
        Command::Leverage { design, generator, n, d } => {
            let x = match (generator, &design.data) {
                (Some(g), _) => {
                    let (Some(n), Some(d)) = (n, d) else {
                        return Err(Error::Config("--generator needs --n and --d".into()));
                    };
                    synth_dataset(g, n, d, seed.unwrap_or(0))?
                }
                (None, Some(path)) => load_dataset(path, design.response.as_ref(), design.header, design.intercept)?.x,
                (None, None) => return Err(Error::Config("give --data or --generator".into())),
            };
            let summary = leverage_summary(&thin_svd_factor(&x)?);
            writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
        }
        Command::Solve { design, kind, k, max_steps, grad_tol, gradient } => {
            let path = design.data.as_ref().ok_or_else(|| Error::Config("solve needs --data".into()))?;
            let response = design.response.as_ref().ok_or_else(|| Error::Config("solve needs --response".into()))?;
            let prob = load_dataset(path, Some(response), design.header, design.intercept)?.into_problem()?;
            let opts = SolveOptions {
                max_steps,
                grad_tol,
                gradient: match gradient {
                    Gradient::Residual => GradientEvaluation::Residual,
                    Gradient::Gram => GradientEvaluation::Gram,
                },
                ..SolveOptions::default()
            };
            let report = sketched_solve(&prob, SketchSpec::new(kind, k, seed.unwrap_or(0))?, &opts)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        }
    }
    Ok(())
}

/// Prints the main table of a finished run and says where the record went.
fn finish(out: &mut impl Write, record: ResultRecord) -> sketchtw::Result<()> {
    let dir = &record.config.output;
    match &record.outputs {
        Outputs::Embed { conditions } => {
            writeln!(out, "source,k,d,trials,sup_gap,trials_csv")?;
            for c in conditions {
                writeln!(out, "{},{},{},{},{},{}", c.source, c.k, c.d, c.trials, c.sup_gap, c.trials_csv)?;
            }
        }
        Outputs::Conv { rates_csv, .. } => copy_file(out, dir, rates_csv)?,
        Outputs::Timing { timing_csv, .. } => copy_file(out, dir, timing_csv)?,
        Outputs::TwTable { tw_csv, .. } => copy_file(out, dir, tw_csv)?,
    }
    eprintln!("wrote {}", dir.join(RESULT_FILE).display());
    Ok(())
}

fn copy_file(out: &mut impl Write, dir: &Path, name: &str) -> sketchtw::Result<()> {
    out.write_all(&fs::read(dir.join(name))?)?;
    Ok(())
}
