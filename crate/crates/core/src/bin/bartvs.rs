use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bartvs::benchmark::{aggregate, expand_grid, run_grid, MetricsRow};
use bartvs::data::{FitConfig, PriorKind};
use bartvs::io::{
    append_partial_metrics, load_trace, read_dataset, read_grid, read_partial_metrics,
    save_trace, write_aggregate, write_metrics, ResultsDocument,
};
use bartvs::pipeline::{run_method, Method, RunConfig};
use bartvs::sampler::fit;
use bartvs::summaries::{metropolis_importance, mpvip, vc, vip};
use bartvs::{Error, Result};

#[derive(Parser)]
#[command(name = "bartvs", version, about = "Tree-ensemble variable selection")]
struct Cli {
    /// Worker threads for concurrent fits (default: all cores).
    #[arg(long, global = true, env = "BARTVS_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model and write its posterior trace.
    Fit(FitArgs),
    /// Run a selection method end to end.
    Select(SelectArgs),
    /// Run an experiment grid.
    Benchmark(BenchmarkArgs),
    /// Summarize a trace or results file.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Prior {
    Bart,
    Dart,
}

#[derive(Args)]
struct SamplerArgs {
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    response: String,
    #[arg(long, default_value_t = 20)]
    trees: usize,
    #[arg(long, default_value_t = 5000)]
    burnin: usize,
    #[arg(long, default_value_t = 5000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SamplerArgs {
    fn apply(&self, fit: &mut FitConfig) {
        fit.n_trees = self.trees;
        fit.burn_in = self.burnin;
        fit.n_draws = self.draws;
        fit.seed = self.seed;
    }
}

#[derive(Args)]
struct FitArgs {
    input: PathBuf,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[arg(long, value_enum, default_value = "bart")]
    prior: Prior,
    /// Record per-node acceptance probabilities for MI.
    #[arg(long)]
    mi: bool,
    #[arg(long, default_value = "trace.bvc")]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    input: PathBuf,
    #[arg(long)]
    method: String,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// Replicate fits (default depends on the method).
    #[arg(long)]
    lrep: Option<usize>,
    #[arg(long, default_value_t = 50)]
    lperm: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Known relevant features, 1-based, comma separated.
    #[arg(long, value_delimiter = ',')]
    truth: Vec<usize>,
    /// Output directory for results.json and importance.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    grid: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Skip grid points already recorded in the progress file.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// A trace file (.bvc) or results document (.json).
    input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Select(a) => cmd_select(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let data = with_path(&a.input, read_dataset(&a.input, &a.sampler.response))?;
    let mut config = match a.prior {
        Prior::Bart => FitConfig::default(),
        Prior::Dart => FitConfig::dart(),
    };
    a.sampler.apply(&mut config);
    config.record_mi = a.mi;
    let trace = fit(&data, &config)?;
    save_trace(&a.out, &trace)?;
    eprintln!(
        "wrote {} draws x {} features to {}",
        trace.n_draws(),
        trace.n_features(),
        a.out.display()
    );
    Ok(())
}

fn cmd_select(a: SelectArgs) -> Result<()> {
    let method: Method = a.method.parse()?;
    let mut run = RunConfig::new(method);
    a.sampler.apply(&mut run.fit);
    run.seed = a.sampler.seed;
    run.l_rep = a.lrep.unwrap_or(method.default_l_rep());
    run.l_perm = a.lperm;
    run.alpha = a.alpha;
    let run = run.close();
    // Reject bad flag combinations before reading data or fitting.
    if run.l_rep == 0 || (method.is_permutation() && run.l_perm == 0) {
        run.validate(usize::MAX)?;
    }
    let mut data = with_path(&a.input, read_dataset(&a.input, &a.sampler.response))?;
    if !a.truth.is_empty() {
        if let Some(&bad) = a.truth.iter().find(|&&j| j == 0 || j > data.p()) {
            return Err(Error::Usage(format!("--truth index {bad} outside 1..={}", data.p())));
        }
        data = data.with_truth(a.truth.iter().map(|j| j - 1))?;
    }
    run.validate(data.p())?;
    let start = Instant::now();
    let out = run_method(&data, &run)?;
    let doc = ResultsDocument::new(&data, &run, &out, start.elapsed().as_secs_f64());
    std::fs::create_dir_all(&a.out)?;
    doc.save(&a.out.join("results.json"))?;
    std::fs::write(a.out.join("importance.csv"), doc.importance_csv()?)?;
    let names: Vec<&str> = doc.selected.iter().map(|s| s.name.as_str()).collect();
    if names.is_empty() {
        println!("{method}: no features selected");
    } else {
        println!("{method}: selected {}", names.join(", "));
    }
    Ok(())
}

fn cmd_benchmark(a: BenchmarkArgs) -> Result<()> {
    let grid = with_path(&a.grid, read_grid(&a.grid))?;
    let units = expand_grid(&grid)?;
    std::fs::create_dir_all(&a.out)?;
    let partial = a.out.join("metrics.partial.csv");
    let completed: HashMap<String, MetricsRow> = if a.resume {
        read_partial_metrics(&partial)?
            .into_iter()
            .map(|r| (r.key(), r))
            .collect()
    } else {
        if partial.exists() {
            std::fs::remove_file(&partial)?;
        }
        HashMap::new()
    };
    let skipped = units
        .iter()
        .filter(|u| u.l_reps.iter().all(|&l| completed.contains_key(&u.row_key(l))))
        .count();
    eprintln!("{} grid units ({skipped} already complete)", units.len());
    let writer = Mutex::new(Ok::<(), Error>(()));
    let rows = run_grid(&units, &completed, |rows| {
        let mut state = writer.lock().expect("progress writer");
        if state.is_ok() {
            *state = append_partial_metrics(&partial, rows);
        }
    });
    writer.into_inner().expect("progress writer")?;
    write_metrics(&a.out.join("metrics.csv"), &rows)?;
    let agg = aggregate(&rows);
    write_aggregate(&a.out.join("aggregate.csv"), &agg)?;
    let errors = rows.iter().filter(|r| r.is_error()).count();
    eprintln!(
        "wrote {} metric rows ({errors} errors) and {} aggregate rows to {}",
        rows.len(),
        agg.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    if is_json(&a.input) {
        let doc = with_path(&a.input, ResultsDocument::load(&a.input))?;
        println!("method: {}", doc.config.method);
        println!("n = {}, p = {}, seconds = {:.3}", doc.n, doc.p, doc.seconds);
        if doc.no_selection {
            println!("selected: none");
        } else {
            let names: Vec<String> = doc
                .selected
                .iter()
                .map(|s| format!("{} ({})", s.name, s.index))
                .collect();
            println!("selected: {}", names.join(", "));
        }
        if let Some(m) = doc.metrics {
            println!("tpr = {}, fpr = {}, f1 = {}", m.tpr, m.fpr, m.f1);
        }
        return Ok(());
    }
    let trace = with_path(&a.input, load_trace(&a.input))?;
    let prior = match trace.config().prior {
        PriorKind::Bart => "bart",
        PriorKind::Dart => "dart",
    };
    eprintln!(
        "{} draws, {} features, prior {prior}, seed {}",
        trace.n_draws(),
        trace.n_features(),
        trace.seed()
    );
    let (q, c, m) = (vip(&trace).values, vc(&trace).values, mpvip(&trace).values);
    let mi = metropolis_importance(&trace).ok().map(|v| v.values);
    let mut out = csv::Writer::from_writer(std::io::stdout());
    let mut header = vec!["index", "vip", "vc", "mpvip"];
    if mi.is_some() {
        header.push("mi");
    }
    out.write_record(&header)?;
    for j in 0..trace.n_features() {
        let mut rec = vec![(j + 1).to_string(), q[j].to_string(), c[j].to_string(), m[j].to_string()];
        if let Some(mi) = &mi {
            rec.push(mi[j].to_string());
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Format(format!("{}: {io}", path.display())),
        e => e,
    })
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}
