//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 internal invariant
//! failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{self, DataError, Dataset, SchemaSource};
use crate::eval::{self, CvPlan, EvalError};
use crate::impurity::Criterion;
use crate::model::TreeModel;
use crate::tree::{self, InductionConfig, Pruning, TreeError};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "treegain",
    version,
    about = "Decision trees with gain-ratio style split criteria"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Infer a sidecar schema from a CSV file.
    InferSchema {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        target: String,
        /// Write the schema here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grow a tree on a whole dataset.
    Train {
        #[command(flatten)]
        input: DataArgs,
        #[arg(long, default_value = "gain-ratio")]
        gain: Criterion,
        #[command(flatten)]
        knobs: Knobs,
        /// Tree file; the text rendering goes next to it with a `.txt` extension.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
    /// Append predictions from a trained tree to a CSV file.
    Predict {
        /// Tree file written by `train`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate several criteria on shared folds.
    Compare {
        #[command(flatten)]
        input: DataArgs,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "gain-ratio,balanced-gain-ratio"
        )]
        gains: Vec<Criterion>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        knobs: Knobs,
        /// Output base path; writes `<out>.md` and `<out>.jsonl`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Sidecar schema file; kinds are inferred when absent.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Target column; required unless a schema file names it.
    #[arg(long, required_unless_present = "schema")]
    target: Option<String>,
}

#[derive(Debug, Args)]
struct Knobs {
    #[arg(long, default_value_t = 2)]
    min_samples_split: usize,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    no_prune: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Md,
    JsonLines,
}

/// Everything that determines a run; embedded in each output artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub dataset: String,
    pub schema: Option<String>,
    pub target: Option<String>,
    pub criteria: Vec<Criterion>,
    pub plan: Option<CvPlan>,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub pruning: Pruning,
    pub outputs: Vec<String>,
    pub version: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TreeFile {
    pub manifest: RunManifest,
    pub stats: tree::TreeStats,
    pub training_accuracy: f64,
    pub model: TreeModel,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TreeError> for CliError {
    fn from(e: TreeError) -> Self {
        match e {
            TreeError::Invariant(_) => CliError::Internal(e.to_string()),
            TreeError::Config(_) => CliError::Usage(e.to_string()),
            TreeError::Data(_) | TreeError::EmptyTrainingSet => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Fold { source, .. } => source.into(),
            EvalError::TooFewCriteria(_) => CliError::Usage(e.to_string()),
            EvalError::Plan(_) => CliError::Data(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

/// Writes via a sibling temporary file so a failed run never leaves a
/// truncated artifact behind.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| io_error(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

impl DataArgs {
    fn source(&self) -> SchemaSource {
        match (&self.schema, &self.target) {
            (Some(p), _) => SchemaSource::File(p.clone()),
            (None, Some(t)) => SchemaSource::Infer { target: t.clone() },
            (None, None) => unreachable!("clap requires --target without --schema"),
        }
    }

    fn load(&self) -> Result<Dataset, CliError> {
        let data = dataset::load_csv(&self.data, &self.source())?;
        if let Some(t) = &self.target {
            if data.schema().target_name() != t {
                return Err(CliError::Usage(format!(
                    "--target {t} disagrees with schema target {}",
                    data.schema().target_name()
                )));
            }
        }
        let dropped = data.dropped();
        if dropped.total() > 0 {
            eprintln!(
                "dropped {} rows ({} missing target, {} missing numeric)",
                dropped.total(),
                dropped.missing_target,
                dropped.missing_numeric
            );
        }
        Ok(data)
    }
}

impl Knobs {
    fn config(&self, criterion: Criterion) -> InductionConfig {
        InductionConfig {
            criterion,
            min_samples_split: self.min_samples_split,
            max_depth: self.max_depth,
            pruning: if self.no_prune {
                Pruning::None
            } else {
                Pruning::Pessimistic
            },
        }
    }
}

fn manifest(
    command: &str,
    input: &DataArgs,
    knobs: &Knobs,
    criteria: Vec<Criterion>,
) -> RunManifest {
    RunManifest {
        command: command.to_string(),
        dataset: input.data.display().to_string(),
        schema: input.schema.as_ref().map(|p| p.display().to_string()),
        target: input.target.clone(),
        criteria,
        plan: None,
        min_samples_split: knobs.min_samples_split,
        max_depth: knobs.max_depth,
        pruning: knobs.config(Criterion::GainRatio).pruning,
        outputs: Vec::new(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(ext);
    PathBuf::from(p)
}

fn cmd_train(
    input: &DataArgs,
    gain: Criterion,
    knobs: &Knobs,
    out: Option<PathBuf>,
    format: Format,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let data = input.load()?;
    let config = knobs.config(gain);
    let tree = tree::induce(&data, &config)?;
    let stats = tree::tree_stats(&tree);
    let all: Vec<usize> = (0..data.len()).collect();
    let training_accuracy = tree::accuracy(&tree, &data, &all);

    let tree_path = out.unwrap_or_else(|| {
        let stem = input.data.file_stem().unwrap_or_default().to_string_lossy();
        input.data.with_file_name(format!("{stem}.tree.json"))
    });
    let text_path = tree_path.with_extension("txt");
    let mut m = manifest("train", input, knobs, vec![gain]);
    m.outputs = vec![
        tree_path.display().to_string(),
        text_path.display().to_string(),
    ];
    let model = TreeModel::new(&data, tree);
    let text = model.render_text();
    let file = TreeFile {
        manifest: m,
        stats,
        training_accuracy,
        model,
    };
    let mut body =
        serde_json::to_string_pretty(&file).map_err(|e| CliError::Internal(e.to_string()))?;
    body.push('\n');
    write_atomic(&tree_path, body.as_bytes())?;
    write_atomic(&text_path, text.as_bytes())?;

    let summary = match format {
        Format::Md => format!(
            "criterion: {gain}\nrows: {}\ndepth: {}\nleaves: {}\nnodes: {}\ntraining accuracy: {:.2}\ntree: {}\n",
            data.len(),
            stats.depth,
            stats.leaf_count,
            stats.node_count,
            training_accuracy,
            tree_path.display()
        ),
        Format::JsonLines => format!(
            "{}\n",
            json!({
                "criterion": gain,
                "rows": data.len(),
                "depth": stats.depth,
                "leaves": stats.leaf_count,
                "nodes": stats.node_count,
                "training_accuracy": training_accuracy,
                "tree": tree_path.display().to_string(),
            })
        ),
    };
    stdout
        .write_all(summary.as_bytes())
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn cmd_predict(
    model: &Path,
    data: &Path,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let text = fs::read_to_string(model).map_err(|e| io_error(model, e))?;
    let file: TreeFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: not a tree file: {e}", model.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(data)
        .map_err(|e| CliError::Data(format!("{}: {e}", data.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let records: Vec<csv::StringRecord> = reader
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Data(e.to_string()))?;
    let rows: Vec<Vec<&str>> = records.iter().map(|r| r.iter().collect()).collect();
    let encoded = file.model.encode(&header, &rows)?;

    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    let target = file.model.schema.target_name();
    let mut out_header = header.clone();
    out_header.push(format!("predicted_{target}"));
    let werr = |e: csv::Error| CliError::Internal(e.to_string());
    writer.write_record(&out_header).map_err(werr)?;
    let mut fallbacks = 0;
    for ((record, cells), &unseen) in records.iter().zip(&encoded.rows).zip(&encoded.unseen) {
        let (label, fell_back) = tree::predict_traced(&file.model.tree, cells.as_slice());
        if unseen || fell_back {
            fallbacks += 1;
        }
        let mut row: Vec<&str> = record.iter().collect();
        row.push(&file.model.class_labels[label as usize]);
        writer.write_record(&row).map_err(werr)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    match out {
        Some(p) => write_atomic(p, &bytes)?,
        None => stdout
            .write_all(&bytes)
            .map_err(|e| CliError::Internal(e.to_string()))?,
    }
    if fallbacks > 0 {
        eprintln!("warning: {fallbacks} rows had categorical values unseen in training");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    input: &DataArgs,
    gains: Vec<Criterion>,
    plan: CvPlan,
    knobs: &Knobs,
    out: Option<PathBuf>,
    format: Format,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let data = input.load()?;
    let report = eval::compare(&data, &gains, &knobs.config(gains[0]), &plan)?;
    let mut m = manifest("compare", input, knobs, gains);
    m.plan = Some(plan);
    if let Some(base) = &out {
        m.outputs = vec![
            with_extension(base, ".md").display().to_string(),
            with_extension(base, ".jsonl").display().to_string(),
        ];
    }
    let manifest_value = serde_json::to_value(&m).map_err(|e| CliError::Internal(e.to_string()))?;
    let jsonl = report.to_json_lines(Some(&manifest_value));
    let md = report.to_markdown();
    if let Some(base) = &out {
        write_atomic(&with_extension(base, ".md"), md.as_bytes())?;
        write_atomic(&with_extension(base, ".jsonl"), jsonl.as_bytes())?;
    }
    let shown = match format {
        Format::Md => md,
        Format::JsonLines => jsonl,
    };
    stdout
        .write_all(shown.as_bytes())
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::InferSchema { data, target, out } => {
            let schema = dataset::infer_schema(&data, &target)?;
            let text = schema.to_sidecar();
            match out {
                Some(p) => write_atomic(&p, text.as_bytes()),
                None => stdout
                    .write_all(text.as_bytes())
                    .map_err(|e| CliError::Internal(e.to_string())),
            }
        }
        Command::Train {
            input,
            gain,
            knobs,
            out,
            format,
        } => cmd_train(&input, gain, &knobs, out, format, stdout),
        Command::Predict { model, data, out } => cmd_predict(&model, &data, out.as_deref(), stdout),
        Command::Compare {
            input,
            gains,
            folds,
            repeats,
            seed,
            knobs,
            out,
            format,
        } => cmd_compare(
            &input,
            gains,
            CvPlan::new(folds, repeats, seed),
            &knobs,
            out,
            format,
            stdout,
        ),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match dispatch(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
