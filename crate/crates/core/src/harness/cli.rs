//! `handwash` command line. Every verb reads the same TOML configuration;
//! `--seed` overrides the data, training and search seeds together.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use super::config::HarnessConfig;
use super::eval::{
    lopo_folds, prepare, run_folds, test_on, train_on, user_dependent_folds, EvalReport,
    PreparedSession,
};
use super::latency::{event_from_series, measure_latency, paired_latency};
use super::report::{
    summary, write_confusion_csv, write_fold_csv, write_step_csv, write_sweep_csv,
};
use super::sweep::{alpha_sweep, compress_model, split_validation};
use super::synth::{generate, Dataset};
use crate::assess::{assess_event, HandwashEvent};
use crate::compress::write_trace_csv;
use crate::context::{read_script, run_script, write_jsonl};
use crate::model::{count_flops, load_model, save_model, LabeledSequence, ModelParams};
use crate::signal::read_sensor_csv;

#[derive(Debug, Parser)]
#[command(
    name = "handwash",
    version,
    about = "Handwashing step recognition, compression and feedback"
)]
struct Cli {
    /// TOML configuration; unset keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Lopo,
    Userdep,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic sessions as `pXX_sYY.csv`.
    Generate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on every session of a dataset.
    Train {
        /// Session directory; generated from the config when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Search per-layer sparsity under a FLOPs budget and prune.
    Compress {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
        /// Per-iteration search trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Cross-validated accuracy; writes steps.csv, folds.csv and confusion.csv.
    Eval {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "lopo")]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Accuracy and FLOPs across compression budgets.
    Sweep {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Assess one recorded wash and print the feedback.
    Assess {
        #[arg(long)]
        model: PathBuf,
        /// Sensor CSV of the wash.
        #[arg(long)]
        event: PathBuf,
        #[arg(long, default_value_t = 50.0)]
        rate: f64,
    },
    /// Replay a JSONL event script through the reminder engine.
    Simulate {
        #[arg(long)]
        script: PathBuf,
        /// Action trace; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// End-to-end assessment latency, optionally paired against a second model.
    Latency {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        repeats: Option<usize>,
    },
}

/// Parse `args` (program name first) and run the verb, printing to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let mut cfg = match &cli.config {
        Some(p) => HarnessConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => HarnessConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    match cli.command {
        Command::Generate { out: dir } => {
            let data = generate(&cfg.synth)?;
            std::fs::create_dir_all(&dir)?;
            let files = data.write_dir(&dir)?;
            writeln!(out, "wrote {} sessions to {}", files.len(), dir.display())?;
        }
        Command::Train {
            data,
            out: path,
            epochs,
        } => {
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            let sessions = prepare(&dataset(data.as_deref(), &cfg)?, &cfg)?;
            let refs: Vec<&PreparedSession> = sessions.iter().collect();
            let params = train_on(&refs, &cfg)?;
            let (acc, _) = test_on(&params, &refs)?;
            save(&params, &path)?;
            writeln!(out, "training window accuracy {:.4}", acc.window_accuracy())?;
            writeln!(out, "flops {}", count_flops(&params.spec).total)?;
        }
        Command::Compress {
            model,
            data,
            out: path,
            alpha,
            iters,
            trace,
        } => {
            if let Some(n) = iters {
                cfg.search.iters = n;
            }
            let alpha = alpha.unwrap_or(cfg.compress.alpha);
            let params = load(&model)?;
            let sessions = prepare(&dataset(data.as_deref(), &cfg)?, &cfg)?;
            let refs: Vec<&PreparedSession> = sessions.iter().collect();
            let (train, val) = split_validation(&refs);
            let (train, val) = (sequences(&train), sequences(&val));
            if val.is_empty() {
                bail!("compression needs at least two sessions per participant");
            }
            let (pruned, found) = compress_model(&params, &train, &val, alpha, &cfg)?;
            save(&pruned, &path)?;
            if let Some(t) = trace {
                write_trace_csv(&found.trace, File::create(&t)?)?;
            }
            writeln!(out, "sparsity {:?}", found.sparsity.s)?;
            writeln!(
                out,
                "flops {} of {} (budget {:.0})",
                found.flops,
                count_flops(&params.spec).total,
                alpha * count_flops(&params.spec).total as f64
            )?;
            writeln!(out, "best loss {:.6}", found.best_loss)?;
        }
        Command::Eval {
            data,
            mode,
            out: dir,
            epochs,
        } => {
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            let sessions = prepare(&dataset(data.as_deref(), &cfg)?, &cfg)?;
            let folds = match mode {
                Mode::Lopo => lopo_folds(&sessions)?,
                Mode::Userdep => user_dependent_folds(&sessions, cfg.train.seed)?,
            };
            let report = run_folds(&sessions, &folds, &cfg)?;
            write_eval(&report, &dir)?;
            write!(out, "{}", summary(&report))?;
        }
        Command::Sweep {
            data,
            alphas,
            out: path,
            epochs,
        } => {
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            let alphas = alphas.unwrap_or_else(|| cfg.sweep.alphas.clone());
            let report = alpha_sweep(&dataset(data.as_deref(), &cfg)?, &alphas, &cfg)?;
            write_sweep_csv(&report, File::create(&path)?)?;
            writeln!(
                out,
                "baseline accuracy {:.4} flops {}",
                report.baseline_accuracy, report.baseline_flops
            )?;
            for r in &report.rows {
                writeln!(
                    out,
                    "alpha {:.2} accuracy {:.4} mean flops {:.0}",
                    r.alpha, r.accuracy, r.mean_flops
                )?;
            }
        }
        Command::Assess { model, event, rate } => {
            let params = load(&model)?;
            let (series, _) = read_sensor_csv(File::open(&event)?, rate)?;
            let event: HandwashEvent = event_from_series(series)?;
            let (_, report) = assess_event(&params, &event, &cfg.signal, cfg.eval.min_windows)?;
            write!(out, "{report}")?;
        }
        Command::Simulate { script, out: path } => {
            let events = read_script(BufReader::new(File::open(&script)?))?;
            let trace = run_script(&cfg.reminder, &events)?;
            match path {
                Some(p) => write_jsonl(&trace, File::create(p)?)?,
                None => write_jsonl(&trace, &mut *out)?,
            }
        }
        Command::Latency {
            model,
            compare,
            data,
            repeats,
        } => {
            let repeats = repeats.unwrap_or(cfg.eval.latency_repeats);
            let a = load(&model)?;
            let events = events(&dataset(data.as_deref(), &cfg)?)?;
            match compare {
                Some(b) => {
                    let b = load(&b)?;
                    let (la, lb) = paired_latency(
                        &a,
                        &b,
                        &events,
                        &cfg.signal,
                        cfg.eval.min_windows,
                        repeats,
                    )?;
                    writeln!(
                        out,
                        "{}: median {:.6} s p95 {:.6} s",
                        model.display(),
                        la.median_s,
                        la.p95_s
                    )?;
                    writeln!(
                        out,
                        "compare: median {:.6} s p95 {:.6} s",
                        lb.median_s, lb.p95_s
                    )?;
                }
                None => {
                    let l =
                        measure_latency(&a, &events, &cfg.signal, cfg.eval.min_windows, repeats)?;
                    writeln!(
                        out,
                        "median {:.6} s p95 {:.6} s over {} samples",
                        l.median_s, l.p95_s, l.samples
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn dataset(dir: Option<&Path>, cfg: &HarnessConfig) -> Result<Dataset> {
    Ok(match dir {
        Some(d) => Dataset::read_dir(d, cfg.synth.rate_hz)?,
        None => generate(&cfg.synth)?,
    })
}

fn events(data: &Dataset) -> Result<Vec<HandwashEvent>> {
    data.sessions
        .iter()
        .map(|s| Ok(event_from_series(s.data.series.clone())?))
        .collect()
}

fn sequences(sessions: &[&PreparedSession]) -> Vec<LabeledSequence> {
    sessions.iter().map(|s| s.sequence.clone()).collect()
}

fn load(path: &Path) -> Result<ModelParams> {
    load_model(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
    .with_context(|| format!("reading model {}", path.display()))
}

fn save(params: &ModelParams, path: &Path) -> Result<()> {
    save_model(
        params,
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    )?;
    Ok(())
}

fn write_eval(report: &EvalReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_step_csv(report, File::create(dir.join("steps.csv"))?)?;
    write_fold_csv(report, File::create(dir.join("folds.csv"))?)?;
    write_confusion_csv(report, File::create(dir.join("confusion.csv"))?)?;
    Ok(())
}
