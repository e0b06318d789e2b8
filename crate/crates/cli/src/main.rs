use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use wsnmf::{
    build_model, cross_correlation, diagonality, evaluate, identify, load_ensemble, load_model,
    save_ensemble, save_matrix, save_model, whiten, Benchmark, BenchmarkSpec, Ensemble64,
    IdentificationModel64, SolverConfig64, WhiteningMethod, DEFAULT_EIG_FLOOR,
};

#[derive(Parser)]
#[command(
    name = "wsnmf",
    version,
    about = "Whitened sparse NMF identification of radar signatures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic benchmark as train.csv and test.csv.
    Synth(SynthArgs),
    /// Build an identification model from a labeled reference ensemble.
    Fit(FitArgs),
    /// Identify each signal in a query file.
    Identify(IdentifyArgs),
    /// Identify a labeled test set and write its confusion matrix.
    Eval(EvalArgs),
    /// Export covariance and cross-correlation matrices of a model's references.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 2020)]
    seed: u64,
    #[arg(long, default_value_t = 12, value_parser = at_least_two)]
    classes: usize,
    /// Traces per class; the first goes to train, the rest to test.
    #[arg(long, default_value_t = 2, value_parser = at_least_two)]
    instances: usize,
    /// Target mean correlation between class templates.
    #[arg(long, default_value_t = 0.95)]
    similarity: f64,
    #[arg(long, default_value_t = 0.005)]
    noise: f64,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Sparsity weight on the activations.
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Relative objective change that stops the solver.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig64 {
        SolverConfig64 {
            beta: self.beta,
            sparsity: self.lambda,
            max_iters: self.max_iters,
            rel_tol: self.tol,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Reference ensemble CSV.
    train: PathBuf,
    /// Model file to write.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = WhiteningMethod::Zca)]
    method: WhiteningMethod,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long, short)]
    model: PathBuf,
    /// Query ensemble CSV.
    queries: PathBuf,
    /// Match raw queries against the unwhitened dictionary.
    #[arg(long)]
    no_whiten: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, short)]
    model: PathBuf,
    /// Labeled test ensemble CSV.
    test: PathBuf,
    /// Confusion matrix CSV to write.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long)]
    no_whiten: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long, short)]
    model: PathBuf,
    /// Directory for cov_before.csv, cov_after.csv and crosscorr.csv.
    #[arg(long, short)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Fit(a) => fit(a),
        Command::Identify(a) => run_identify(a),
        Command::Eval(a) => eval(a),
        Command::Diagnose(a) => diagnose(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<io::Error>())
        .any(|io| io.kind() == io::ErrorKind::BrokenPipe)
}

fn at_least_two(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 2 => Ok(n),
        Ok(n) => Err(format!("{n} is less than 2")),
        Err(e) => Err(e.to_string()),
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut out = io::stdout().lock();
    let spec = BenchmarkSpec {
        n_classes: a.classes,
        traces_per_class: a.instances,
        similarity: a.similarity,
        noise_sigma: a.noise,
        seed: a.seed,
        ..Default::default()
    };
    let bench = Benchmark::new(spec)?;
    let (train, test) = bench.split::<f64>()?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let train_path = a.out.join("train.csv");
    let test_path = a.out.join("test.csv");
    save_ensemble(&train, &train_path)
        .with_context(|| format!("writing {}", train_path.display()))?;
    save_ensemble(&test, &test_path).with_context(|| format!("writing {}", test_path.display()))?;
    writeln!(out, "seed {}", a.seed)?;
    writeln!(
        out,
        "classes {}, traces per class {}",
        a.classes, a.instances
    )?;
    writeln!(
        out,
        "template correlation {:.6} (target {}, mixing weight {:.6})",
        bench.template_correlation(),
        a.similarity,
        bench.mixing_weight()
    )?;
    writeln!(
        out,
        "wrote {} and {}",
        train_path.display(),
        test_path.display()
    )?;
    Ok(())
}

fn read_ensemble(path: &Path) -> Result<Ensemble64> {
    load_ensemble(path).with_context(|| format!("reading {}", path.display()))
}

fn read_model(path: &Path) -> Result<IdentificationModel64> {
    load_model(path).with_context(|| format!("loading model {}", path.display()))
}

fn fit(a: FitArgs) -> Result<()> {
    let mut out = io::stdout().lock();
    let train = read_ensemble(&a.train)?;
    let model = build_model(train, a.method, a.solver.config(), DEFAULT_EIG_FLOOR)?;
    save_model(&model, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let w = model.whitening();
    writeln!(out, "method {}", model.method())?;
    writeln!(
        out,
        "atoms {} ({} labels)",
        model.dictionary().n_atoms(),
        model.labels().len()
    )?;
    writeln!(
        out,
        "diagonality before {:.6e}",
        diagonality(&w.moments.covariance)?
    )?;
    writeln!(
        out,
        "diagonality after {:.6e}",
        diagonality(&w.whitened_covariance())?
    )?;
    writeln!(out, "wrote {}", a.out.display())?;
    Ok(())
}

#[derive(Serialize)]
struct Score<'a> {
    label: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct QueryReport<'a> {
    id: &'a str,
    winner: String,
    margin: f64,
    top: Vec<Score<'a>>,
}

fn run_identify(a: IdentifyArgs) -> Result<()> {
    let mut out = io::stdout().lock();
    let model = read_model(&a.model)?;
    let queries = read_ensemble(&a.queries)?;
    let results = queries
        .signals()
        .iter()
        .map(|q| identify(q, &model, !a.no_whiten))
        .collect::<wsnmf::Result<Vec<_>>>()?;
    let reports: Vec<QueryReport> = queries
        .signals()
        .iter()
        .zip(&results)
        .map(|(q, r)| QueryReport {
            id: &q.id,
            winner: r.winner.clone(),
            margin: r.margin,
            top: r
                .ranked()
                .into_iter()
                .take(3)
                .map(|(label, score)| Score { label, score })
                .collect(),
        })
        .collect();
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&reports)?)?;
        return Ok(());
    }
    for r in &reports {
        let top: Vec<String> = r
            .top
            .iter()
            .map(|s| format!("{}={:.6e}", s.label, s.score))
            .collect();
        writeln!(
            out,
            "{}\t{}\tmargin={:.6}\t{}",
            r.id,
            r.winner,
            r.margin,
            top.join(" ")
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalReport<'a> {
    accuracy: f64,
    total: usize,
    whitened: bool,
    labels: &'a [String],
    confusion: Vec<Vec<usize>>,
    indeterminate: &'a [usize],
}

fn eval(a: EvalArgs) -> Result<()> {
    let mut out = io::stdout().lock();
    let model = read_model(&a.model)?;
    let test = read_ensemble(&a.test)?;
    let ev = evaluate(&test, &model, !a.no_whiten)?;

    let mut w =
        csv::Writer::from_path(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let mut header = vec!["true\\predicted".to_string()];
    header.extend(ev.labels.iter().cloned());
    header.push(wsnmf::INDETERMINATE.to_string());
    w.write_record(&header)?;
    for (i, label) in ev.labels.iter().enumerate() {
        let mut rec = vec![label.clone()];
        rec.extend(ev.confusion.row(i).iter().map(|c| c.to_string()));
        rec.push(ev.indeterminate[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;

    if a.json {
        let report = EvalReport {
            accuracy: ev.accuracy,
            total: ev.total,
            whitened: !a.no_whiten,
            labels: &ev.labels,
            confusion: ev
                .confusion
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            indeterminate: &ev.indeterminate,
        };
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        let correct: usize = ev.confusion.diag().sum();
        let arm = if a.no_whiten {
            "unwhitened"
        } else {
            "whitened"
        };
        writeln!(
            out,
            "accuracy {:.6} ({correct}/{}, {arm})",
            ev.accuracy, ev.total
        )?;
        writeln!(out, "wrote {}", a.out.display())?;
    }
    Ok(())
}

fn diagnose(a: DiagnoseArgs) -> Result<()> {
    let mut out = io::stdout().lock();
    let model = read_model(&a.model)?;
    if !a.out.is_dir() {
        bail!("output directory {} does not exist", a.out.display());
    }
    let w = model.whitening();
    let before = &w.moments.covariance;
    let after = w.whitened_covariance();
    let cross = cross_correlation(model.references(), &whiten(model.references(), w)?)?;
    for (name, m) in [
        ("cov_before.csv", before),
        ("cov_after.csv", &after),
        ("crosscorr.csv", &cross),
    ] {
        let path = a.out.join(name);
        save_matrix(m, &path).with_context(|| format!("writing {}", path.display()))?;
    }
    writeln!(out, "method {}", model.method())?;
    writeln!(out, "diagonality before {:.6e}", diagonality(before)?)?;
    writeln!(out, "diagonality after {:.6e}", diagonality(&after)?)?;
    writeln!(out, "cross-correlation trace {:.6}", cross.diag().sum())?;
    writeln!(
        out,
        "wrote cov_before.csv, cov_after.csv, crosscorr.csv to {}",
        a.out.display()
    )?;
    Ok(())
}
