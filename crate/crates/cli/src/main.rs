use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use likert_miner::config::{Format, RunConfig, Stage};
use likert_miner::dataset::{write_csv, Schema};
use likert_miner::pipeline::{emit_plot_data, run_pipeline, write_outputs, PlotKind};
use likert_miner::synthetic::SurveyGenerator;

/// Likert survey analysis: reliability, summaries, association tests,
/// correlation, clustering, factor analysis, trees and forests.
///
/// Any configuration key can also be given as a flag, e.g. `--forest.trees 100`.
#[derive(Debug, Parser)]
#[command(name = "likert-miner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every enabled stage.
    Analyze(RunArgs),
    /// Cronbach's alpha and the zero-variation partition.
    Reliability(RunArgs),
    /// Grand mode, median and mean; per-item distributions.
    Summarize(RunArgs),
    /// Chi-squared tests of independence.
    Associate(RunArgs),
    /// Pearson and Kendall tau-B correlation matrices.
    Correlate(RunArgs),
    /// k-means clustering of respondents.
    Cluster(RunArgs),
    /// Factor analysis with varimax rotation.
    Factor(RunArgs),
    /// Classification tree for the response.
    Tree(RunArgs),
    /// Random forest with out-of-bag evaluation.
    Forest(RunArgs),
    /// Write a synthetic survey CSV.
    Synth {
        #[arg(long, default_value_t = 5820)]
        rows: usize,
        #[arg(long, default_value_t = likert_miner::DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory for report and plot-data files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Opinion, or an item name such as Q10.
    #[arg(long)]
    response: Option<String>,
    /// Comma-separated subset of text, json, csv.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Plot data to write (course_variation, item_bars, importance, ...).
    #[arg(long = "plot")]
    plots: Vec<String>,
}

type Overrides = Vec<(String, String)>;

/// Pulls `--section.key value` and `--section.key=value` out of the arguments.
fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides)> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--").filter(|f| f.contains('.')) else {
            rest.push(arg);
            continue;
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().with_context(|| format!("missing value for --{flag}"))?;
                (flag.to_string(), v)
            }
        };
        if !RunConfig::KEYS.contains(&key.as_str()) && !key.ends_with(".enabled") {
            bail!("unknown option --{key}");
        }
        overrides.push((key, value));
    }
    Ok((rest, overrides))
}

fn stages_for(command: &Command, cfg: &RunConfig) -> Option<Vec<Stage>> {
    let opinion = cfg.response == likert_miner::Response::Opinion;
    let supervised = |s: Stage| if opinion { vec![Stage::Cluster, s] } else { vec![s] };
    Some(match command {
        Command::Analyze(_) | Command::Synth { .. } => return None,
        Command::Reliability(_) => vec![Stage::Reliability],
        Command::Summarize(_) => vec![Stage::Summaries],
        Command::Associate(_) => vec![Stage::Associations],
        Command::Correlate(_) => vec![Stage::Correlation],
        Command::Cluster(_) => vec![Stage::Cluster],
        Command::Factor(_) => vec![Stage::Factor],
        Command::Tree(_) => supervised(Stage::Tree),
        Command::Forest(_) => supervised(Stage::Forest),
    })
}

fn build_config(args: &RunArgs, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Ok(v) = std::env::var("LIKERT_MINER_THREADS") {
        cfg.set("threads", &v).context("LIKERT_MINER_THREADS")?;
    }
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    if let Some(p) = &args.input {
        cfg.input = Some(p.clone());
    }
    if let Some(p) = &args.out {
        cfg.out = Some(p.clone());
    }
    if let Some(seed) = args.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    if let Some(r) = &args.response {
        cfg.set("response", r)?;
    }
    if let Some(f) = &args.format {
        cfg.set("format", f)?;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn run(cli: Cli, overrides: Vec<(String, String)>) -> Result<bool> {
    let args = match &cli.command {
        Command::Synth { rows, seed, out } => {
            let ds = SurveyGenerator::new(*rows, *seed).generate();
            let file = std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
            write_csv(&ds, file, &Schema::default())?;
            return Ok(true);
        }
        Command::Analyze(a)
        | Command::Reliability(a)
        | Command::Summarize(a)
        | Command::Associate(a)
        | Command::Correlate(a)
        | Command::Cluster(a)
        | Command::Factor(a)
        | Command::Tree(a)
        | Command::Forest(a) => a,
    };
    let mut cfg = build_config(args, &overrides)?;
    if let Some(stages) = stages_for(&cli.command, &cfg) {
        cfg.only(&stages);
    }
    let plots =
        args.plots.iter().map(|p| p.parse::<PlotKind>()).collect::<Result<Vec<_>, _>>().map_err(anyhow::Error::msg)?;
    let formats: Vec<Format> = cfg.formats.iter().copied().collect();
    if cfg.out.is_none() && (formats.contains(&Format::Csv) || !plots.is_empty()) {
        bail!("csv output and --plot need --out");
    }
    let run = run_pipeline(&cfg)?;
    if let Some(dir) = &cfg.out {
        write_outputs(&run, &formats, dir)?;
        for kind in plots {
            emit_plot_data(&run, kind, dir)?;
        }
    }
    if formats.contains(&Format::Json) && cfg.out.is_none() {
        println!("{}", run.report.to_json());
    } else if formats.contains(&Format::Text) {
        print!("{}", run.report.to_text());
    } else if let Some(dir) = &cfg.out {
        println!("wrote {}", dir.display());
    }
    if let Some(f) = &run.report.failure {
        eprintln!("error: stage {} failed: {}", f.stage, f.message);
    }
    Ok(run.report.succeeded())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let (rest, overrides) = match split_overrides(argv) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(rest);
    match run(cli, overrides) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
