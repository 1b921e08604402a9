use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mnolab::erm::{erm_train, generate_training_set, pou_template, SampleCounts, TrainingSet};
use mnolab::lab::{
    compare_aggregation, compare_to_csv, envelopes_to_csv, evaluate_bounds, fit_points, fit_scaling, rows_from_csv,
    run_sweep, BoundsRequest, ExperimentConfig, FitModel, Lab, TrainingConfig,
};

#[derive(Parser)]
#[command(name = "mnolab", version, about = "Separable multiple-operator learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output`, then `results`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "MNOLAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Powerlaw,
    LoglogIterated,
}

#[derive(Subcommand)]
enum Command {
    /// Run the budget and sample-size sweep, writing results.csv and results.json.
    Sweep(Common),
    /// Fit a scaling law to the (complexity, sup_error) columns of a results CSV.
    Fit {
        /// Results CSV produced by `sweep`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "powerlaw")]
        model: Model,
        /// Row kind to fit (`construct` or `train`); `all` uses every row.
        #[arg(long, default_value = "construct")]
        kind: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare parallel and nested aggregation over the config's `compare` section.
    CompareAgg(Common),
    /// Evaluate bound calculators from a JSON request.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a training set from the config's `training` section.
    GenData {
        #[command(flatten)]
        common: Common,
        /// Number of `alpha` samples; defaults to the first entry of `training.n_alpha`.
        #[arg(long)]
        n_alpha: Option<usize>,
    },
    /// Train the partition-of-unity template on a saved training set.
    Train {
        #[command(flatten)]
        common: Common,
        /// Path stem of the training set (`<stem>.csv` and `<stem>.json`).
        #[arg(long)]
        data: PathBuf,
    },
    /// Check a config and print its sweep points and hash.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok((cfg, out))
}

fn training(cfg: &ExperimentConfig) -> Result<&TrainingConfig> {
    cfg.training.as_ref().ok_or_else(|| mnolab::Error::Config("config has no training section".into()).into())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep(common) => {
            let (cfg, out) = load(&common)?;
            let outcome = run_sweep(&cfg, &out, common.threads)?;
            for r in &outcome.rows {
                let e = r.sup_error.map_or("-".to_string(), |v| format!("{v:.4e}"));
                let c = r.complexity.map_or("-".to_string(), |v| format!("{v:.4e}"));
                println!("{:<48} complexity {c:>11}  sup_error {e:>11}  {}", r.key, r.status);
            }
            if outcome.resumed > 0 {
                println!("resumed {} rows from an earlier run", outcome.resumed);
            }
            println!("wrote {} and {}", outcome.csv.display(), outcome.sidecar.display());
        }
        Command::Fit { input, model, kind, out } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let points = fit_points(&rows_from_csv(&text)?, (kind != "all").then_some(kind.as_str()));
            let model = match model {
                Model::Powerlaw => FitModel::Powerlaw,
                Model::LoglogIterated => FitModel::LoglogIterated,
            };
            let fit = fit_scaling(&points, model)?;
            println!(
                "exponent {:.6}  intercept {:.6}  rms residual {:.3e}  ({} points)",
                fit.exponent,
                fit.intercept,
                fit.residual,
                points.len()
            );
            let dir = out.unwrap_or_else(|| input.parent().map(Path::to_path_buf).unwrap_or_default());
            fs::create_dir_all(&dir)?;
            write(&dir.join("fit.json"), &serde_json::to_string_pretty(&fit)?)?;
        }
        Command::CompareAgg(common) => {
            let (cfg, out) = load(&common)?;
            let lab = Lab::new(cfg)?;
            let rows = pool(common.threads)?.install(|| compare_aggregation(&lab))?;
            for r in &rows {
                println!(
                    "P={:<3} parallel {:.4e} (complexity {:.3e})  nested {:.4e} (complexity {:.3e})  ratio {:.3e}",
                    r.p,
                    r.parallel_error,
                    r.parallel_complexity,
                    r.nested_error,
                    r.nested_complexity,
                    r.complexity_ratio
                );
            }
            write(&out.join("compare.csv"), &compare_to_csv(&rows)?)?;
        }
        Command::Bounds { config, out } => {
            let text =
                fs::read_to_string(&config).map_err(|e| mnolab::Error::Config(format!("{}: {e}", config.display())))?;
            let req: BoundsRequest = serde_json::from_str(&text).map_err(|e| mnolab::Error::Config(e.to_string()))?;
            let report = evaluate_bounds(&req)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("results"));
            fs::create_dir_all(&dir)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            write(&dir.join("bounds.json"), &serde_json::to_string_pretty(&report)?)?;
            if !report.envelopes.is_empty() {
                write(&dir.join("envelopes.csv"), &envelopes_to_csv(&report.envelopes)?)?;
            }
        }
        Command::GenData { common, n_alpha } => {
            let (cfg, out) = load(&common)?;
            let t = training(&cfg)?;
            let lab = Lab::new(cfg.clone())?;
            let template = pou_template(&lab.operator, t.budget, t.max_terms)?;
            let n_alpha = n_alpha.unwrap_or(t.n_alpha[0]);
            let set = pool(common.threads)?.install(|| {
                generate_training_set(
                    &lab.operator,
                    &lab.measures,
                    &template.w_sensors,
                    &template.u_sensors,
                    SampleCounts::new(n_alpha, t.n_u, t.n_x),
                    t.sigma,
                    cfg.seed,
                )
            })?;
            let (csv, json) = set.save(&out.join("train"))?;
            println!("{} labeled points", set.len());
            println!("wrote {} and {}", csv.display(), json.display());
        }
        Command::Train { common, data } => {
            let (cfg, out) = load(&common)?;
            let t = training(&cfg)?;
            let lab = Lab::new(cfg.clone())?;
            let set = TrainingSet::load(&data)?;
            let template = pou_template(&lab.operator, t.budget, t.max_terms)?;
            let report = pool(common.threads)?.install(|| erm_train(&template, &set, &t.optimizer))?;
            println!(
                "loss {:.6e} -> {:.6e} over {} steps",
                report.trace[0],
                report.final_loss(),
                report.trace.len() - 1
            );
            write(&out.join("model.json"), &report.net.to_json()?)?;
            let trace: String = std::iter::once("step,loss\n".to_string())
                .chain(report.trace.iter().enumerate().map(|(i, l)| format!("{i},{l}\n")))
                .collect();
            write(&out.join("trace.csv"), &trace)?;
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!("config ok, hash {}", cfg.hash());
            for p in cfg.points() {
                println!("  {}", p.key());
            }
        }
    }
    Ok(())
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<mnolab::Error>() {
        Some(mnolab::Error::Config(_)) | Some(mnolab::Error::Json(_)) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
