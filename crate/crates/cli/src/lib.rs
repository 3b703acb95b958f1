//! `ice` command line: train, predict, bench, ablate, evidence, inspect
//! and sweep.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal
//! invariant violation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ice_core::evaluation::{cross_validate, EvalConfig, EvalReport, Method, Normalization};
use ice_core::framework::RunConfig;
use ice_core::{
    ablate_many, fit, inspect, load, predict_instance, read_records, save, subdomain_evidence,
    sweep, AblationFlags, BaseLearner, Dataset, FeatureSchema, IceError, IceParams, NominalMode,
    RawTable,
};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(IceError),
}

impl From<IceError> for CliError {
    fn from(e: IceError) -> Self {
        match e {
            IceError::InvalidParameter(msg) => CliError::Usage(msg),
            other => CliError::Core(other),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "ice", version, about = "Individualized classifier ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model on one CSV and write it to a directory.
    Train(TrainArgs),
    /// Score a CSV with a saved model.
    Predict(PredictArgs),
    /// Paired cross-validated AUC of several methods over one or more CSVs.
    Bench(BenchArgs),
    /// Randomized-component ablation over one or more CSVs.
    Ablate(AblateArgs),
    /// Cross-testing of models trained on k-means subdomains.
    Evidence(EvidenceArgs),
    /// Structural report of a saved model, as JSON.
    Inspect(InspectArgs),
    /// Cross-validated AUC over a grid of advantage scores.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct DataArgs {
    /// CSV file, or a directory of CSV files where accepted.
    #[arg(long)]
    data: PathBuf,
    /// Name of the binary label column.
    #[arg(long = "label-col", default_value = "label")]
    label_col: String,
    /// Handling of non-numeric columns: drop or onehot.
    #[arg(long, default_value = "onehot")]
    nominal: String,
}

#[derive(Args, Debug, Clone, Serialize)]
struct IceArgs {
    /// Cluster count L, including the whole-data cluster.
    #[arg(long, default_value_t = 100)]
    clusters: usize,
    /// Whole-model advantage score.
    #[arg(long, default_value_t = 0.4)]
    w: f64,
    /// Local-model advantage score.
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    /// Neighbors consulted per prediction (N).
    #[arg(long, default_value_t = 5)]
    neighbors: usize,
    /// Weight of the whole model per selected partial model.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Weight of the whole model per neighbor.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Restart probability of the random walk.
    #[arg(long = "restart-p", default_value_t = 0.3)]
    restart_p: f64,
    /// Average partial-cluster size [default: a third of the training set].
    #[arg(long = "avg-cluster-size")]
    avg_cluster_size: Option<f64>,
    /// Inner folds used to estimate the error table.
    #[arg(long = "cv-folds", default_value_t = 10)]
    cv_folds: usize,
    /// Smallest partial cluster.
    #[arg(long = "min-cluster-size", default_value_t = 8)]
    min_cluster_size: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl IceArgs {
    fn params(&self) -> IceParams {
        IceParams {
            clusters: self.clusters,
            restart_p: self.restart_p,
            avg_cluster_size: self.avg_cluster_size,
            w: self.w,
            s: self.s,
            neighbors: self.neighbors,
            alpha: self.alpha,
            beta: self.beta,
            cv_folds: self.cv_folds,
            seed: self.seed,
            min_cluster_size: self.min_cluster_size,
            ..IceParams::default()
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct EvalArgs {
    /// Outer cross-validation folds.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// z-score statistics: per-fold or global.
    #[arg(long, default_value = "per-fold")]
    normalize: String,
    /// Bootstrap bags of the bagging baseline.
    #[arg(long = "n-bags", default_value_t = 100)]
    n_bags: usize,
    /// Rounds of the boosting baseline.
    #[arg(long = "n-rounds", default_value_t = 100)]
    n_rounds: usize,
    /// Write wall-clock seconds into the report CSV (breaks byte-reproducibility).
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    ice: IceArgs,
    /// Output model directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Model directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// CSV to score; a label column, if present, is ignored.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV: index,probability,label,M,unique_models.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    ice: IceArgs,
    #[command(flatten)]
    eval: EvalArgs,
    /// Comma-separated methods among ice, bagging, adaboost, base.
    #[arg(long, default_value = "ice,bagging")]
    methods: String,
    /// Method that wins/ties/losses are counted against.
    #[arg(long, default_value = "bagging")]
    reference: String,
    /// Report CSV; `<stem>.summary.json` and `<stem>.meta.json` go next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    ice: IceArgs,
    #[command(flatten)]
    eval: EvalArgs,
    /// Comma-separated arms: none, c1, c2, c3 or combinations such as c1+c3.
    #[arg(long, default_value = "none,c1,c2,c3,c1+c2+c3")]
    variants: String,
    /// Report CSV; bagging rows are included as the gain reference.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvidenceArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InspectArgs {
    /// Model directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Output JSON [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    ice: IceArgs,
    #[command(flatten)]
    eval: EvalArgs,
    /// Comma-separated w values.
    #[arg(long = "w-grid", default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6")]
    w_grid: String,
    /// Comma-separated s values.
    #[arg(long = "s-grid", default_value = "0.5")]
    s_grid: String,
    /// Output CSV: dataset,fold,w,s,auc,mean_models.
    #[arg(long)]
    out: PathBuf,
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Bench(a) => bench(a),
        Command::Ablate(a) => ablate_cmd(a),
        Command::Evidence(a) => evidence(a),
        Command::Inspect(a) => inspect_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_INVARIANT
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| IceError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| IceError::io(path, e).into())
}

fn parse<T: std::str::FromStr<Err = IceError>>(s: &str) -> CliResult<T> {
    Ok(s.parse::<T>()?)
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad {what} value `{v}`")))
        })
        .collect()
}

/// CSV files to run on: the file itself, or every `*.csv` in a directory
/// sorted by name.
fn dataset_files(path: &Path) -> CliResult<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| IceError::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(
                IceError::InvalidData(format!("no csv files in {}", path.display())).into(),
            );
        }
        Ok(files)
    } else if path.exists() {
        Ok(vec![path.to_path_buf()])
    } else {
        Err(IceError::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)).into())
    }
}

fn dataset_id(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

fn load_raw(path: &Path, label: &str) -> CliResult<RawTable> {
    Ok(ice_core::load_csv(path, label, &BTreeMap::new())?)
}

fn load_dataset(path: &Path, data: &DataArgs) -> CliResult<(FeatureSchema, Dataset)> {
    let raw = load_raw(path, &data.label_col)?;
    let schema = FeatureSchema::fit(&raw, parse(&data.nominal)?)?;
    let ds = schema.encode_table(&raw)?;
    Ok((schema, ds))
}

fn run_config(
    files: &[PathBuf],
    data: &DataArgs,
    method: Option<Method>,
    params: IceParams,
    normalization: Normalization,
    out: &Path,
) -> CliResult<RunConfig> {
    let nominal: NominalMode = parse(&data.nominal)?;
    let seed = params.seed;
    Ok(RunConfig {
        data: files.to_vec(),
        label_column: data.label_col.clone(),
        method,
        params,
        normalization,
        nominal,
        out: Some(out.to_path_buf()),
        seed,
    })
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.{suffix}"))
}

#[derive(Serialize)]
struct Meta<'a, A: Serialize> {
    command: &'a str,
    config: A,
    run: RunConfig,
    /// Wall-clock timing; the only non-reproducible field.
    seconds: f64,
}

fn eval_config(ice: &IceArgs, eval: &EvalArgs) -> CliResult<EvalConfig> {
    let config = EvalConfig {
        ice: ice.params(),
        base: BaseLearner::logistic(),
        n_bags: eval.n_bags,
        n_rounds: eval.n_rounds,
        folds: eval.folds,
        normalization: parse(&eval.normalize)?,
    };
    config.ice.validate()?;
    if eval.folds < 2 {
        return Err(CliError::Usage("--folds must be at least 2".into()));
    }
    Ok(config)
}

fn train(a: TrainArgs) -> CliResult<()> {
    let started = Instant::now();
    let params = a.ice.params();
    params.validate()?;
    let (schema, ds) = load_dataset(&a.data.data, &a.data)?;
    let model = fit(&ds, &params, &BaseLearner::logistic())?;
    save(&model, &a.out)?;
    write_file(
        &a.out.join("schema.json"),
        &serde_json::to_string_pretty(&schema)?,
    )?;
    let run = run_config(
        std::slice::from_ref(&a.data.data),
        &a.data,
        Some(Method::Ice),
        params,
        Normalization::Global,
        &a.out,
    )?;
    let meta = Meta {
        command: "train",
        config: (&a.data, &a.ice),
        run,
        seconds: started.elapsed().as_secs_f64(),
    };
    write_file(
        &a.out.join("metadata.json"),
        &serde_json::to_string_pretty(&meta)?,
    )?;
    eprintln!(
        "trained {} models on {} instances x {} features -> {}",
        model.n_models(),
        ds.len(),
        ds.dim(),
        a.out.display()
    );
    Ok(())
}

fn predict(a: PredictArgs) -> CliResult<()> {
    let model = load(&a.model)?;
    let schema_path = a.model.join("schema.json");
    let schema_text =
        fs::read_to_string(&schema_path).map_err(|e| IceError::io(&schema_path, e))?;
    let schema: FeatureSchema = serde_json::from_str(&schema_text)?;
    let file = fs::File::open(&a.data).map_err(|e| IceError::io(&a.data, e))?;
    let (header, rows) = read_records(file)?;
    let x = schema.transform(&header, &rows)?;
    let mut out = String::from("index,probability,label,M,unique_models\n");
    for (i, row) in x.rows().into_iter().enumerate() {
        let (p, ctx) = predict_instance(row.as_slice().expect("row-major"), &model)?;
        let _ = writeln!(
            out,
            "{i},{p:.17},{},{},{}",
            ice_core::inference::label_of(p),
            ctx.m(),
            ctx.unique_models()
        );
    }
    write_file(&a.out, &out)?;
    eprintln!("scored {} rows -> {}", x.nrows(), a.out.display());
    Ok(())
}

fn parse_methods(s: &str) -> CliResult<Vec<Method>> {
    let mut out = Vec::new();
    for m in s.split(',').map(str::trim).filter(|m| !m.is_empty()) {
        let m: Method = parse(m)?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("--methods is empty".into()));
    }
    Ok(out)
}

fn bench(a: BenchArgs) -> CliResult<()> {
    let started = Instant::now();
    let methods = parse_methods(&a.methods)?;
    let config = eval_config(&a.ice, &a.eval)?;
    let files = dataset_files(&a.data.data)?;
    let mut report = EvalReport::default();
    for file in &files {
        let id = dataset_id(file);
        let (_, ds) = load_dataset(file, &a.data)?;
        for &m in &methods {
            let rows = cross_validate(&ds, &id, m, &config, a.ice.seed)?;
            let mean = rows.iter().map(|r| r.auc).sum::<f64>() / rows.len() as f64;
            eprintln!("{id:>24} {m:<9} mean AUC {mean:.4}");
            report.extend(rows);
        }
    }
    finish_report(report, &a.reference, &a.out, a.eval.timings)?;
    let run = run_config(
        &files,
        &a.data,
        None,
        config.ice.clone(),
        config.normalization,
        &a.out,
    )?;
    let meta = Meta {
        command: "bench",
        config: (&a.data, &a.ice, &a.eval, &a.methods, &a.reference),
        run,
        seconds: started.elapsed().as_secs_f64(),
    };
    write_file(
        &sibling(&a.out, "meta.json"),
        &serde_json::to_string_pretty(&meta)?,
    )
}

fn finish_report(
    mut report: EvalReport,
    reference: &str,
    out: &Path,
    timings: bool,
) -> CliResult<()> {
    report.sort();
    write_file(out, &report.to_csv(timings))?;
    let agg = report.aggregate(reference);
    write_file(
        &sibling(out, "summary.json"),
        &serde_json::to_string_pretty(&agg)?,
    )?;
    for (m, s) in &agg.methods {
        eprintln!(
            "{m:<16} mean AUC {:.4}  vs {reference}: {} wins / {} ties / {} losses  mean models {:.2}",
            s.mean_auc, s.wins, s.ties, s.losses, s.mean_models
        );
    }
    Ok(())
}

fn parse_variant(s: &str, seed: u64) -> CliResult<AblationFlags> {
    let mut f = AblationFlags {
        seed,
        ..AblationFlags::default()
    };
    if s == "none" {
        return Ok(f);
    }
    for part in s.split('+') {
        match part {
            "c1" => f.randomize_c1 = true,
            "c2" => f.randomize_c2 = true,
            "c3" => f.randomize_c3 = true,
            "all" => {
                f.randomize_c1 = true;
                f.randomize_c2 = true;
                f.randomize_c3 = true;
            }
            other => {
                return Err(CliError::Usage(format!(
                    "unknown ablation component `{other}`"
                )))
            }
        }
    }
    Ok(f)
}

fn ablate_cmd(a: AblateArgs) -> CliResult<()> {
    let started = Instant::now();
    let config = eval_config(&a.ice, &a.eval)?;
    let variants = a
        .variants
        .split(',')
        .map(|v| parse_variant(v.trim(), a.ice.seed))
        .collect::<CliResult<Vec<_>>>()?;
    let files = dataset_files(&a.data.data)?;
    let mut report = EvalReport::default();
    for file in &files {
        let id = dataset_id(file);
        let (_, ds) = load_dataset(file, &a.data)?;
        report.extend(cross_validate(
            &ds,
            &id,
            Method::Bagging,
            &config,
            a.ice.seed,
        )?);
        for rows in ablate_many(&ds, &id, &variants, &config, a.ice.seed)? {
            report.extend(rows);
        }
        eprintln!("{id}: done");
    }
    finish_report(report, "bagging", &a.out, a.eval.timings)?;
    let run = run_config(
        &files,
        &a.data,
        Some(Method::Ice),
        config.ice.clone(),
        config.normalization,
        &a.out,
    )?;
    let meta = Meta {
        command: "ablate",
        config: (&a.data, &a.ice, &a.eval, &a.variants),
        run,
        seconds: started.elapsed().as_secs_f64(),
    };
    write_file(
        &sibling(&a.out, "meta.json"),
        &serde_json::to_string_pretty(&meta)?,
    )
}

fn evidence(a: EvidenceArgs) -> CliResult<()> {
    let started = Instant::now();
    let (_, ds) = load_dataset(&a.data.data, &a.data)?;
    let report = subdomain_evidence(&ds, &BaseLearner::logistic(), a.seed)?;
    write_file(&a.out, &serde_json::to_string_pretty(&report)?)?;
    let params = IceParams {
        seed: a.seed,
        ..IceParams::default()
    };
    let run = run_config(
        std::slice::from_ref(&a.data.data),
        &a.data,
        None,
        params,
        Normalization::Global,
        &a.out,
    )?;
    let meta = Meta {
        command: "evidence",
        config: (&a.data, a.seed),
        run,
        seconds: started.elapsed().as_secs_f64(),
    };
    write_file(
        &sibling(&a.out, "meta.json"),
        &serde_json::to_string_pretty(&meta)?,
    )?;
    for (r, row) in report.gain.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .map(|g| g.map_or_else(|| "  n/a ".into(), |g| format!("{g:+.3}")))
            .collect();
        eprintln!(
            "test {} (n={:>4}): {}",
            report.sources[r],
            report.cluster_sizes[r],
            cells.join("  ")
        );
    }
    Ok(())
}

fn inspect_cmd(a: InspectArgs) -> CliResult<()> {
    let model = load(&a.model)?;
    let text = serde_json::to_string_pretty(&inspect(&model)?)?;
    match &a.out {
        Some(out) => write_file(out, &text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn sweep_cmd(a: SweepArgs) -> CliResult<()> {
    let started = Instant::now();
    let config = eval_config(&a.ice, &a.eval)?;
    let ws = parse_list(&a.w_grid, "w")?;
    let ss = parse_list(&a.s_grid, "s")?;
    let grid: Vec<(f64, f64)> = ws
        .iter()
        .flat_map(|&w| ss.iter().map(move |&s| (w, s)))
        .collect();
    let files = dataset_files(&a.data.data)?;
    let mut out = String::from("dataset,fold,w,s,auc,mean_models\n");
    for file in &files {
        let id = dataset_id(file);
        let (_, ds) = load_dataset(file, &a.data)?;
        for r in sweep(&ds, &id, &grid, &config, a.ice.seed)? {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.17},{:.17}",
                r.dataset, r.fold, r.w, r.s, r.auc, r.mean_models
            );
        }
    }
    write_file(&a.out, &out)?;
    let run = run_config(
        &files,
        &a.data,
        Some(Method::Ice),
        config.ice.clone(),
        config.normalization,
        &a.out,
    )?;
    let meta = Meta {
        command: "sweep",
        config: (&a.data, &a.ice, &a.eval, &a.w_grid, &a.s_grid),
        run,
        seconds: started.elapsed().as_secs_f64(),
    };
    write_file(
        &sibling(&a.out, "meta.json"),
        &serde_json::to_string_pretty(&meta)?,
    )
}
