//! `cluster-zsl`: train, apply, and evaluate cluster-radius novelty models
//! from the command line.
//!
//! Exit codes: 0 on success, 1 on runtime failures (bad data, impossible
//! configs), 2 on usage errors.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use ndarray::Axis;

use cluster_zsl::clustering::KMeansConfig;
use cluster_zsl::dataset::{
    make_zero_shot_split, parse_csv, parse_feature_matrix, parse_keel, Scaler,
};
use cluster_zsl::eval::{
    curve_tsv, find_intersection, report_json, sweep_k_with, ReportConfig,
};
use cluster_zsl::synth::SynthSpec;
use cluster_zsl::zsl::{train_model_with, BoundaryRule, PredictedClass, ThresholdRule, ZslModel};
use cluster_zsl::{Dataset64, Error, Result, ZslModel64};

#[derive(Parser)]
#[command(
    name = "cluster-zsl",
    version,
    about = "Cluster-based zero-shot classification of binary-labelled numeric data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on every row of one class and save it as JSON
    Train(TrainArgs),
    /// Apply a saved model to new feature rows
    Predict(PredictArgs),
    /// Run the split/sweep/intersection evaluation and write a report
    Sweep(SweepArgs),
}

#[derive(Args)]
struct DataArgs {
    /// KEEL .dat file or CSV file with a header row
    #[arg(long, value_name = "FILE", required_unless_present = "synth", conflicts_with = "synth")]
    data: Option<PathBuf>,

    /// Synthetic dataset instead of a file, e.g. "ring",
    /// "ring:n_inner=500,dim=4" or "blobs:separation=8"
    #[arg(long, value_name = "SPEC")]
    synth: Option<String>,

    /// Name of the class column (CSV inputs only)
    #[arg(long, value_name = "NAME", default_value = "class")]
    label_column: String,

    /// Also write the parsed or generated dataset as CSV
    #[arg(long, value_name = "FILE")]
    dump_data: Option<PathBuf>,
}

impl DataArgs {
    /// Load or generate the dataset; synthetic data is seeded with `seed`.
    fn load(&self, seed: u64) -> Result<(Dataset64, String)> {
        let (data, name) = match (&self.data, &self.synth) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)?;
                let data = if has_extension(path, "dat") {
                    parse_keel(&text)?
                } else {
                    parse_csv(&text, &self.label_column)?
                };
                (data, file_stem(path))
            }
            (None, Some(spec)) => {
                let data = SynthSpec::parse(spec)?.with_seed(seed).generate()?;
                let kind = spec.split(':').next().unwrap_or(spec).trim().to_string();
                (data, kind)
            }
            // clap enforces exactly one source
            _ => unreachable!("--data and --synth are mutually exclusive and one is required"),
        };
        if let Some(path) = &self.dump_data {
            write_atomic(path, &data.to_csv())?;
        }
        Ok((data, name))
    }
}

#[derive(Args)]
struct TuneArgs {
    /// Seed for clustering (and for the split in `sweep`)
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Fit the z-score scaler on the training rows only instead of the
    /// whole dataset
    #[arg(long)]
    scale_on_train: bool,

    /// Whether a point exactly on a cluster radius counts as inside
    #[arg(long, value_enum, default_value_t = BoundaryArg::Inclusive)]
    boundary: BoundaryArg,

    /// Cap on k-means update rounds
    #[arg(long, value_name = "N", default_value_t = 300)]
    max_iter: usize,

    /// Convergence threshold on centroid movement
    #[arg(long, value_name = "EPS", default_value_t = 1e-6)]
    tol: f64,

    /// Use this percentile of member distances as each cluster radius
    /// instead of the maximum (0 < P <= 100)
    #[arg(long, value_name = "P")]
    radius_percentile: Option<f64>,
}

impl TuneArgs {
    fn config(&self, k: usize) -> KMeansConfig {
        KMeansConfig::new(k, self.seed)
            .with_max_iterations(self.max_iter)
            .with_tolerance(self.tol)
    }

    fn threshold_rule(&self) -> ThresholdRule {
        match self.radius_percentile {
            Some(p) => ThresholdRule::Percentile(p),
            None => ThresholdRule::Max,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Inclusive,
    Strict,
}

impl From<BoundaryArg> for BoundaryRule {
    fn from(arg: BoundaryArg) -> Self {
        match arg {
            BoundaryArg::Inclusive => BoundaryRule::Inclusive,
            BoundaryArg::Strict => BoundaryRule::Strict,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,

    #[command(flatten)]
    tune: TuneArgs,

    /// Label of the class to train on
    #[arg(long, value_name = "LABEL", default_value = "1")]
    train_class: String,

    /// Number of clusters
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,

    /// Where to write the model JSON
    #[arg(long, value_name = "FILE", default_value = "model.json")]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model JSON written by `train`
    #[arg(long, value_name = "FILE")]
    model: PathBuf,

    /// Feature rows: KEEL .dat (labels ignored) or CSV with a header row
    #[arg(long, value_name = "FILE")]
    data: PathBuf,

    /// Class column to drop when the CSV header contains one
    #[arg(long, value_name = "NAME", default_value = "class")]
    label_column: String,

    /// Where to write the predictions CSV
    #[arg(long, value_name = "FILE", default_value = "predictions.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,

    #[command(flatten)]
    tune: TuneArgs,

    /// Label of the class to train on
    #[arg(long, value_name = "LABEL", default_value = "1")]
    train_class: String,

    /// Smallest K in the sweep
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    k_min: u64,

    /// Largest K in the sweep
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k_max: u64,

    /// Stride between swept K values
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    k_step: u64,

    /// Where to write the JSON report
    #[arg(long, value_name = "FILE", default_value = "report.json")]
    out: PathBuf,

    /// Where to write the recall curves as TSV (default: --out with a
    /// .tsv extension)
    #[arg(long, value_name = "FILE")]
    curve_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => run_train(args),
        Command::Predict(args) => run_predict(args),
        Command::Sweep(args) => run_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}: {err}", err.name());
            ExitCode::FAILURE
        }
    }
}

fn run_train(args: TrainArgs) -> Result<()> {
    let (data, name) = args.data.load(args.tune.seed)?;
    let rows: Vec<usize> = data
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, l)| l.as_str() == args.train_class)
        .map(|(i, _)| i)
        .collect();
    if rows.is_empty() {
        return Err(Error::UnknownLabel(args.train_class.clone()));
    }
    let train = data.features().select(Axis(0), &rows);

    let scaler = if args.tune.scale_on_train {
        Scaler::fit(&train.view())?
    } else {
        Scaler::fit(&data.features().view())?
    };
    let scaled = scaler.apply(&train.view())?;

    let k = args.k as usize;
    let model = train_model_with(
        &scaled.view(),
        &args.tune.config(k),
        args.tune.boundary.into(),
        args.tune.threshold_rule(),
    )?
    .with_scaler(scaler)?;

    write_atomic(&args.out, &model.to_json()?)?;
    println!(
        "trained k={k} on {} rows of class {:?} from {name}; wrote {}",
        rows.len(),
        args.train_class,
        args.out.display()
    );
    Ok(())
}

fn run_predict(args: PredictArgs) -> Result<()> {
    let model: ZslModel64 = ZslModel::from_json(&std::fs::read_to_string(&args.model)?)?;

    let text = std::fs::read_to_string(&args.data)?;
    let features = if has_extension(&args.data, "dat") {
        parse_keel::<f64>(&text)?.features().to_owned()
    } else if csv_has_column(&text, &args.label_column) {
        parse_csv::<f64>(&text, &args.label_column)?.features().to_owned()
    } else {
        parse_feature_matrix(&text)?
    };

    let predictions = model.predict_batch(&features.view())?;
    let mut out = String::from("row_index,predicted_class,nearest_cluster,distance\n");
    let mut n_train = 0usize;
    for (i, p) in predictions.iter().enumerate() {
        let class = match p.class {
            PredictedClass::Train => {
                n_train += 1;
                "train"
            }
            PredictedClass::Target => "target",
        };
        out.push_str(&format!(
            "{i},{class},{},{:.6}\n",
            p.nearest_cluster, p.distance
        ));
    }
    write_atomic(&args.out, &out)?;
    println!(
        "predicted {} rows: {n_train} train / {} target; wrote {}",
        predictions.len(),
        predictions.len() - n_train,
        args.out.display()
    );
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    if args.k_min > args.k_max {
        // usage error, same exit code clap would give
        Cli::command()
            .error(
                clap::error::ErrorKind::ValueValidation,
                format!("--k-min ({}) must not exceed --k-max ({})", args.k_min, args.k_max),
            )
            .exit();
    }
    let (data, name) = args.data.load(args.tune.seed)?;
    let split = make_zero_shot_split(&data, &args.train_class, args.tune.seed)?;
    let scaler = if args.tune.scale_on_train {
        Scaler::fit(&split.train_features.view())?
    } else {
        Scaler::fit(&data.features().view())?
    };
    let split = split.scaled(&scaler)?;

    let k_values: Vec<usize> = (args.k_min..=args.k_max)
        .step_by(args.k_step as usize)
        .map(|k| k as usize)
        .collect();
    let curve = sweep_k_with(
        &split,
        &name,
        &k_values,
        &args.tune.config(1),
        args.tune.boundary.into(),
        args.tune.threshold_rule(),
    )?;
    let intersection = find_intersection(&curve)?;

    let config = ReportConfig {
        k_min: args.k_min as usize,
        k_max: args.k_max as usize,
        k_step: args.k_step as usize,
        max_iterations: args.tune.max_iter,
        tolerance: args.tune.tol,
        boundary_rule: args.tune.boundary.into(),
        scale_on_train: args.tune.scale_on_train,
        radius_percentile: args.tune.radius_percentile,
    };
    let curve_path = args
        .curve_out
        .clone()
        .unwrap_or_else(|| args.out.with_extension("tsv"));
    write_atomic(&args.out, &report_json(&curve, &intersection, &config)?)?;
    write_atomic(&curve_path, &curve_tsv(&curve))?;

    let where_ = match intersection.k {
        Some(k) => format!(
            "curves cross at K={k} (recall_train={:.3}, recall_target={:.3})",
            intersection.recall_train.unwrap_or(f64::NAN),
            intersection.recall_target.unwrap_or(f64::NAN)
        ),
        None => "curves do not cross".to_string(),
    };
    println!(
        "swept {name} K={}..{} step {}: {where_}; wrote {} and {}",
        args.k_min,
        args.k_max,
        args.k_step,
        args.out.display(),
        curve_path.display()
    );
    Ok(())
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case(ext))
        .unwrap_or(false)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Whether the first non-empty CSV line names `column`.
fn csv_has_column(text: &str, column: &str) -> bool {
    text.lines()
        .map(|l| l.trim_start_matches('\u{feff}').trim())
        .find(|l| !l.is_empty())
        .map(|header| header.split(',').any(|c| c.trim() == column))
        .unwrap_or(false)
}

/// Write via a temp file in the same directory so readers never observe a
/// half-written artifact.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
