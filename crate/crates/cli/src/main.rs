use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use npvine::adapt::{adapt_vine, AdaptMode, AdaptationInput};
use npvine::bicopula::CopulaFamily;
use npvine::dataset::{Dataset, Standardizer};
use npvine::experiment::{density_bench, density_bench_generated, mean_sd, DensityScores, ExperimentConfig};
use npvine::mmd::{permutation_test, Bandwidth, MmdConfig, SampleMatrix};
use npvine::model::{FitMetadata, ModelFile};
use npvine::regress::{default_grid, nmse, predict, test_log_likelihood, PointEstimate, DEFAULT_GRID_POINTS};
use npvine::rvine::{fit_vine, VineConfig, VineModel};
use npvine::synth::{bimodal_chain, gaussian_copula_chain, Marginal, RegressionSpec};
use npvine::Error;

/// Non-parametric vine copulas: fitting, sampling benchmarks, domain
/// adaptation and regression from CSV files.
#[derive(Parser)]
#[command(name = "npvine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a vine to a CSV file and write a model file.
    Fit(FitArgs),
    /// Generate a synthetic CSV.
    Gen(GenArgs),
    /// Compare kernel vine, Gaussian-copula vine and KDE test log-likelihoods.
    DensityBench(BenchArgs),
    /// Adapt a fitted model to target-domain data.
    Adapt(AdaptArgs),
    /// Predict the target column for every row of a CSV file.
    Predict(PredictArgs),
    /// Report NMSE and test log-likelihood on a labeled CSV file.
    Eval(EvalArgs),
    /// Two-sample MMD permutation test between two CSV files.
    MmdTest(MmdArgs),
}

#[derive(Args)]
struct FitArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1)]
    truncation: usize,
    #[arg(long, value_enum, default_value_t = Family::Kernel)]
    family: Family,
    /// Target column (default: last column).
    #[arg(long)]
    target: Option<String>,
    /// Recorded in the model file; fitting itself is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// z-score every column with the training statistics before fitting.
    #[arg(long)]
    normalize: bool,
    /// Store the fit time (seconds since the epoch) in the model file.
    #[arg(long)]
    timestamp: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Kernel,
    Gaussian,
}

impl From<Family> for CopulaFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Kernel => CopulaFamily::Kernel,
            Family::Gaussian => CopulaFamily::Gaussian,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    GaussianCopulaChain,
    BimodalChain,
    Regression,
    ShiftedRegression,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    generator: Generator,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(short, long, default_value_t = 1000)]
    n: usize,
    #[arg(short, long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Comma-separated marginals, e.g. `normal,exponential(2)`; one entry
    /// applies to every column.
    #[arg(long, default_value = "normal", value_delimiter = ';')]
    marginals: Vec<String>,
    #[arg(long, default_value_t = 0.4)]
    noise: f64,
    /// Draw the shifted target domain of the regression task.
    #[arg(long)]
    target_domain: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// CSV datasets; each is split repeatedly into train and test rows.
    inputs: Vec<PathBuf>,
    /// Also benchmark freshly generated data from these generators.
    #[arg(long, value_enum)]
    generated: Vec<BenchGenerator>,
    #[arg(short, long, default_value_t = 1000)]
    n: usize,
    #[arg(short, long, default_value_t = 8)]
    d: usize,
    #[arg(long, default_value_t = 50)]
    repetitions: usize,
    #[arg(long, default_value_t = 0.3)]
    train_fraction: f64,
    #[arg(long, default_value_t = 1)]
    truncation: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    normalize: bool,
    /// Write per-repetition scores here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchGenerator {
    GaussianChain,
    BimodalChain,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Supervised,
    Semi,
    Unsupervised,
}

#[derive(Args)]
struct MmdOptions {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 200)]
    permutations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Kernel bandwidth (default: median heuristic).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Largest sample size per side before seeded subsampling (0: no cap).
    #[arg(long, default_value_t = 300)]
    max_samples: usize,
}

impl MmdOptions {
    fn config(&self) -> MmdConfig {
        MmdConfig {
            bandwidth: self.bandwidth.map_or(Bandwidth::MedianHeuristic, Bandwidth::Fixed),
            permutations: self.permutations,
            alpha: self.alpha,
            seed: self.seed,
            max_samples: (self.max_samples > 0).then_some(self.max_samples),
        }
    }
}

#[derive(Args)]
struct AdaptArgs {
    /// Source model file.
    #[arg(long)]
    model: PathBuf,
    /// Source training CSV the model was fitted on.
    #[arg(long)]
    source: PathBuf,
    /// Labeled target rows.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Unlabeled target rows (the target column may be absent).
    #[arg(long)]
    unlabeled: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Semi)]
    mode: Mode,
    #[command(flatten)]
    mmd: MmdOptions,
    #[arg(short, long)]
    output: PathBuf,
    /// Write the adaptation report as JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    input: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    /// Predict the conditional median instead of the mean.
    #[arg(long)]
    median: bool,
    /// Add each row's joint log-density (needs the target column).
    #[arg(long)]
    log_density: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    input: PathBuf,
    /// Score these predictions (one column) instead of the model's.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
}

#[derive(Args)]
struct MmdArgs {
    a: PathBuf,
    b: PathBuf,
    #[command(flatten)]
    mmd: MmdOptions,
}

/// Failures mapped onto process exit codes.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) | Error::Io(_) | Error::ModelFile(_) | Error::Config(_) => 2,
            Error::DegenerateSample { .. } | Error::InsufficientData(_) | Error::DegenerateMetric(_) => 3,
            Error::Schema(_) => 4,
            Error::Domain(_) | Error::Structural(_) => 5,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn read_csv(path: &Path) -> Result<Dataset, Error> {
    Dataset::read_csv(path).map_err(|e| match e {
        Error::Io(io) => Error::Parse(format!("{}: {io}", path.display())),
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn load_model(path: &Path) -> Result<(ModelFile, VineModel), Error> {
    let file = ModelFile::load(path)?;
    let model = file.to_model()?;
    Ok((file, model))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn fit(args: FitArgs) -> CmdResult {
    let raw = read_csv(&args.input)?;
    let target = match &args.target {
        Some(name) => raw
            .index_of(name)
            .ok_or_else(|| Error::Schema(format!("no column named `{name}`")))?,
        None => raw.n_cols().saturating_sub(1),
    };
    let (data, normalization) = if args.normalize {
        let s = Standardizer::fit(&raw)?;
        (s.apply(&raw), Some(s))
    } else {
        (raw, None)
    };
    let start = Instant::now();
    let mut model = fit_vine(
        &data,
        &VineConfig {
            truncation: args.truncation,
            family: args.family.into(),
        },
    )?;
    let elapsed = start.elapsed();
    model.set_target(Some(target))?;
    let timestamp = args.timestamp.then(|| {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        secs.to_string()
    });
    let mut file = ModelFile::from_model(
        &model,
        FitMetadata {
            n: data.n_rows(),
            seed: args.seed,
            truncation: model.truncation(),
            timestamp,
        },
    );
    file.normalization = normalization;
    file.save(&args.output)?;

    println!("d = {}, n = {}, truncation = {}", model.dim(), data.n_rows(), model.truncation());
    for tree in model.trees() {
        for e in &tree.edges {
            println!(
                "tree {} edge {:<24} |tau| = {:.4} ({})",
                tree.level,
                e.label(model.names()),
                e.weight,
                e.copula.kind()
            );
        }
    }
    println!("fit time: {:.3} s", elapsed.as_secs_f64());
    Ok(0)
}

fn gen(args: GenArgs) -> CmdResult {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let data = match args.generator {
        Generator::GaussianCopulaChain => {
            let marginals = args
                .marginals
                .iter()
                .flat_map(|s| split_marginals(s))
                .map(|s| Marginal::parse(&s))
                .collect::<Result<Vec<_>, _>>()?;
            gaussian_copula_chain(args.n, args.d, args.rho, &marginals, &mut rng)?
        }
        Generator::BimodalChain => bimodal_chain(args.n, args.d, &mut rng)?,
        Generator::Regression => RegressionSpec::new(args.d, args.noise).sample(args.n, false, &mut rng)?,
        Generator::ShiftedRegression => RegressionSpec::new(args.d, args.noise)
            .default_shift()
            .sample(args.n, args.target_domain, &mut rng)?,
    };
    match &args.output {
        Some(p) => data.write_csv(p)?,
        None => data.write_csv_to(std::io::stdout().lock())?,
    }
    Ok(0)
}

/// Splits `a,b(1,2),c` on the commas outside parentheses.
fn split_marginals(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur);
    out.into_iter().filter(|s| !s.trim().is_empty()).collect()
}

fn density_bench_cmd(args: BenchArgs) -> CmdResult {
    if args.inputs.is_empty() && args.generated.is_empty() {
        return Err(Error::Config("give at least one CSV file or --generated".into()).into());
    }
    let config = ExperimentConfig {
        seed: args.seed,
        n_samples: args.n,
        train_fraction: args.train_fraction,
        repetitions: args.repetitions,
        truncation: args.truncation,
        ..Default::default()
    };
    let mut results: Vec<(String, Vec<DensityScores>)> = Vec::new();
    for path in &args.inputs {
        let mut data = read_csv(path)?;
        if args.normalize {
            data = Standardizer::fit(&data)?.apply(&data);
        }
        let name = path.file_stem().map_or("data".into(), |s| s.to_string_lossy().into_owned());
        results.push((name, density_bench(&data, &config)?));
    }
    for g in &args.generated {
        let (n, d) = (args.n, args.d);
        let (name, scores) = match g {
            BenchGenerator::GaussianChain => (
                "gaussian-chain",
                density_bench_generated(
                    |r| gaussian_copula_chain(n, d, 0.7, &[Marginal::STANDARD_NORMAL], r),
                    &config,
                )?,
            ),
            BenchGenerator::BimodalChain => ("bimodal-chain", density_bench_generated(|r| bimodal_chain(n, d, r), &config)?),
        };
        results.push((name.to_string(), scores));
    }

    let mut table = format!("{:<8}", "method");
    for (name, _) in &results {
        let _ = write!(table, " {name:>24}");
    }
    table.push('\n');
    type Pick = fn(&DensityScores) -> f64;
    let methods: [(&str, Pick); 3] = [("NPRV", |s| s.nprv), ("GRV", |s| s.grv), ("KDE", |s| s.kde)];
    for (method, pick) in methods {
        let _ = write!(table, "{method:<8}");
        for (_, scores) in &results {
            let v: Vec<f64> = scores.iter().map(pick).collect();
            let (m, sd) = mean_sd(&v);
            let _ = write!(table, " {:>24}", format!("{m:.4} ± {sd:.4}"));
        }
        table.push('\n');
    }
    print!("{table}");
    if let Some(path) = &args.csv {
        let mut out = String::from("dataset,repetition,nprv,grv,kde\n");
        for (name, scores) in &results {
            for (i, s) in scores.iter().enumerate() {
                let _ = writeln!(out, "{name},{i},{},{},{}", s.nprv, s.grv, s.kde);
            }
        }
        std::fs::write(path, out).map_err(Error::from)?;
    }
    Ok(0)
}

fn normalized(file: &ModelFile, data: Dataset) -> Dataset {
    match &file.normalization {
        Some(s) => s.apply(&data),
        None => data,
    }
}

fn adapt_cmd(args: AdaptArgs) -> CmdResult {
    let (file, model) = load_model(&args.model)?;
    let target = model
        .target()
        .ok_or_else(|| Error::Config("the model has no target column".into()))?;
    let source = normalized(&file, read_csv(&args.source)?);
    let empty = || Dataset::new(vec![], vec![]).expect("empty dataset");
    let mode = match args.mode {
        Mode::Supervised => AdaptMode::Supervised,
        Mode::Semi => AdaptMode::SemiSupervised,
        Mode::Unsupervised => AdaptMode::Unsupervised,
    };
    let mut labeled = match &args.target {
        Some(p) => normalized(&file, read_csv(p)?),
        None => empty(),
    };
    if mode == AdaptMode::Unsupervised {
        // Labels are never read in this mode.
        labeled = labeled.drop_column(&model.names()[target]);
    }
    let unlabeled = match &args.unlabeled {
        Some(p) => normalized(&file, read_csv(p)?),
        None => empty(),
    };
    if mode == AdaptMode::Unsupervised && labeled.n_rows() > 0 {
        // Fold labeled-row features into the unlabeled pool.
        let feats = labeled.clone();
        let merged = if unlabeled.n_rows() > 0 {
            let names = feats.names().to_vec();
            feats.vstack(&unlabeled.select_columns(&names)?)?
        } else {
            feats
        };
        return run_adapt(&args, &file, &model, source, empty(), merged, target, mode);
    }
    run_adapt(&args, &file, &model, source, labeled, unlabeled, target, mode)
}

#[allow(clippy::too_many_arguments)]
fn run_adapt(
    args: &AdaptArgs,
    file: &ModelFile,
    model: &VineModel,
    source: Dataset,
    labeled: Dataset,
    unlabeled: Dataset,
    target: usize,
    mode: AdaptMode,
) -> CmdResult {
    let input = AdaptationInput {
        source,
        target_labeled: labeled,
        target_unlabeled: unlabeled,
        target_index: target,
        mode,
        mmd: args.mmd.config(),
    };
    let (adapted, report) = adapt_vine(model, &input)?;
    let mut out = ModelFile::from_model(
        &adapted,
        FitMetadata {
            n: file.fit_metadata.n,
            seed: Some(args.mmd.seed),
            truncation: adapted.truncation(),
            timestamp: None,
        },
    );
    out.normalization = file.normalization.clone();
    out.save(&args.output)?;
    for d in &report.decisions {
        let p = d.p_value.map_or("-".to_string(), |p| format!("{p:.4}"));
        println!(
            "{:<24} p = {:>6}  {:<9} refit: {:?}",
            d.label,
            p,
            if d.changed { "changed" } else { "unchanged" },
            d.refit_from
        );
    }
    println!(
        "changed marginals: {}, changed copulas: {}",
        report.n_changed_marginals, report.n_changed_copulas
    );
    for w in &report.warnings {
        println!("warning: {w}");
    }
    if let Some(p) = &args.report {
        let json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
        std::fs::write(p, json + "\n").map_err(Error::from)?;
    }
    Ok(0)
}

fn unscale(file: &ModelFile, model: &VineModel, values: Vec<f64>) -> Vec<f64> {
    let t = model.target().expect("checked by the caller");
    match &file.normalization {
        Some(s) => s.invert_column(&model.names()[t], &values),
        None => values,
    }
}

fn predict_cmd(args: PredictArgs) -> CmdResult {
    let (file, model) = load_model(&args.model)?;
    let raw = read_csv(&args.input)?;
    let data = normalized(&file, raw);
    let grid = default_grid(&model, args.grid_points)?;
    let how = if args.median { PointEstimate::Median } else { PointEstimate::Mean };
    let pred = unscale(&file, &model, predict(&model, &data, &grid, how)?);
    let log_density = if args.log_density {
        Some(model.log_density_dataset(&data)?)
    } else {
        None
    };
    let mut out = String::from("prediction");
    if log_density.is_some() {
        out.push_str(",log_density");
    }
    out.push('\n');
    for (i, p) in pred.iter().enumerate() {
        match &log_density {
            Some(l) => writeln!(out, "{p},{}", l[i]),
            None => writeln!(out, "{p}"),
        }
        .expect("writing to a string");
    }
    emit(args.output.as_deref(), &out)?;
    Ok(0)
}

fn eval_cmd(args: EvalArgs) -> CmdResult {
    let (file, model) = load_model(&args.model)?;
    let t = model
        .target()
        .ok_or_else(|| Error::Config("the model has no target column".into()))?;
    let raw = read_csv(&args.input)?;
    let y_name = &model.names()[t];
    let truth = raw
        .column_by_name(y_name)
        .ok_or_else(|| Error::Schema(format!("missing target column `{y_name}`")))?
        .to_vec();
    let data = normalized(&file, raw);
    let pred = match &args.predictions {
        Some(p) => {
            let d = read_csv(p)?;
            if d.n_cols() < 1 {
                return Err(Error::Schema("predictions file has no columns".into()).into());
            }
            d.column(0).to_vec()
        }
        None => {
            let grid = default_grid(&model, args.grid_points)?;
            unscale(&file, &model, predict(&model, &data, &grid, PointEstimate::Mean)?)
        }
    };
    let score = nmse(&pred, &truth)?;
    let tll = test_log_likelihood(&model, &data)?;
    println!("NMSE: {score:.6}");
    println!("TLL: {tll:.6}");
    Ok(0)
}

fn mmd_cmd(args: MmdArgs) -> CmdResult {
    let a = read_csv(&args.a)?;
    let b = read_csv(&args.b)?;
    let b = b.select_columns(a.names())?;
    if a.n_cols() != b.n_cols() {
        return Err(Error::Schema("files have different columns".into()).into());
    }
    let to_matrix = |d: &Dataset| {
        let cols: Vec<&[f64]> = d.columns().iter().map(Vec::as_slice).collect();
        SampleMatrix::from_columns(&cols)
    };
    let r = permutation_test(&to_matrix(&a)?, &to_matrix(&b)?, &args.mmd.config())?;
    println!("statistic: {:.6e}", r.statistic);
    println!("p-value: {:.6}", r.p_value);
    println!("verdict: {}", if r.rejected { "reject" } else { "accept" });
    Ok(if r.rejected { 1 } else { 0 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => fit(a),
        Command::Gen(a) => gen(a),
        Command::DensityBench(a) => density_bench_cmd(a),
        Command::Adapt(a) => adapt_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::MmdTest(a) => mmd_cmd(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
