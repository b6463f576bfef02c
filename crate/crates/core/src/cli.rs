//! Command-line interface. `main` only forwards to [`run`].

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::encoders::{
    fit_encoder, write_encoder, write_scaler, EncoderParams, MinMaxScaler, Provenance,
};
use crate::eval::cv::{
    cross_validate, folds_tsv, read_summary, summarize, summary_tsv, CvConfig, RepeatSummary,
};
use crate::eval::{confusion, metrics, pr_curve_auc, wilcoxon_signed_rank, EvalError};
use crate::forest::{FeaturesPerSplit, ForestConfig};
use crate::pipeline::{fit_pipeline, FeatureSelection, PipelineConfig, PipelineModel};
use crate::selectors::{
    kept_features_from_tsv, rank_features, scores_to_tsv, Selector, SelectorConfig,
};
use crate::synth::{generate, truth_path, truth_tsv, Informative, SynthConfig};
use crate::tabular::{load_csv, preprocess, write_csv, Dataset, LoadOptions, PreprocessConfig};
use crate::textio::fmt_f64;

#[derive(Debug, Parser)]
#[command(
    name = "eventsel",
    version,
    about = "Feature selection and event classification for sparse categorical data"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset and its ground-truth sidecar.
    Generate(GenerateArgs),
    /// Score and rank features, writing a score TSV.
    Select(SelectArgs),
    /// Fit an encoder and scaler, writing the encoded matrix as triplets.
    Encode(EncodeArgs),
    /// Fit the full pipeline and write the model file.
    Train(TrainArgs),
    /// Score a model on labelled data, or cross-validate a pipeline.
    Evaluate(EvaluateArgs),
    /// Pairwise Wilcoxon signed-rank p-values between per-repeat metric files.
    Compare(CompareArgs),
}

/// Shared `--config` flag; its key=value lines act as defaults for the
/// subcommand's long flags.
#[derive(Debug, Args)]
pub struct ConfigArg {
    /// key=value file of default flag values; explicit flags win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Label column name.
    #[arg(long, default_value = "label")]
    pub label: String,
    /// Write the cleaning report (action, column, count) here.
    #[arg(long, value_name = "FILE")]
    pub clean_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub rows: usize,
    #[arg(long, default_value_t = 0.005)]
    pub positive_rate: f64,
    /// Lifts of one informative feature, comma separated; repeatable.
    #[arg(long, value_name = "LIFTS")]
    pub informative: Vec<String>,
    /// Noise feature cardinalities, comma separated.
    #[arg(long, default_value = "2,10,100,10000,50000")]
    pub noise: String,
    /// Add a near-unique id column.
    #[arg(long)]
    pub id_feature: bool,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SelectorArgs {
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Equal-frequency bins for numeric features.
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
}

impl SelectorArgs {
    fn config(&self) -> SelectorConfig {
        SelectorConfig {
            alpha: self.alpha,
            k: self.k,
            numeric_bins: self.bins,
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_parser = parse_selector)]
    pub selector: Selector,
    #[command(flatten)]
    pub sel: SelectorArgs,
    /// Score TSV (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncoderArgs {
    /// Categoricals with more distinct values are indexed and hashed.
    #[arg(long, default_value_t = 256)]
    pub cardinality_threshold: usize,
    /// Hashed block width; a power of two.
    #[arg(long, default_value_t = 1 << 18)]
    pub hash_buckets: usize,
}

impl EncoderArgs {
    fn params(&self) -> EncoderParams {
        EncoderParams {
            cardinality_threshold: self.cardinality_threshold,
            hash_buckets: self.hash_buckets,
        }
    }
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub enc: EncoderArgs,
    /// Keep only the features marked keep in this score TSV.
    #[arg(long, value_name = "FILE")]
    pub scores: Option<PathBuf>,
    /// Matrix triplets `row<TAB>column<TAB>value`.
    #[arg(long)]
    pub output: PathBuf,
    /// Fitted encoder and scaler.
    #[arg(long, value_name = "FILE")]
    pub spec: PathBuf,
    /// Column provenance `column<TAB>kind<TAB>feature<TAB>level_or_bucket`.
    #[arg(long, value_name = "FILE")]
    pub columns: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// none, chi2, p_adj, p_adj_soft, mi or mi_adj.
    #[arg(long, default_value = "none", value_parser = parse_selection, conflicts_with = "scores")]
    pub selector: SelectionArg,
    /// Use the features kept in this score TSV instead of selecting.
    #[arg(long, value_name = "FILE")]
    pub scores: Option<PathBuf>,
    #[command(flatten)]
    pub sel: SelectorArgs,
    #[command(flatten)]
    pub enc: EncoderArgs,
    #[arg(long, default_value_t = 50)]
    pub trees: usize,
    #[arg(long, default_value_t = 1)]
    pub min_leaf: usize,
    /// Positive integer or `none`.
    #[arg(long, default_value = "20", value_parser = parse_depth)]
    pub max_depth: DepthArg,
    /// `sqrt` or a count.
    #[arg(long, default_value = "sqrt", value_parser = parse_fps)]
    pub features_per_split: FeaturesPerSplit,
    #[arg(long)]
    pub seed: u64,
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let selection = match (&self.scores, self.selector.0) {
            (Some(path), _) => {
                let text = read(path)?;
                FeatureSelection::Fixed(
                    kept_features_from_tsv(&text).with_context(|| path.display().to_string())?,
                )
            }
            (None, Some(selector)) => FeatureSelection::Ranked {
                selector,
                config: self.sel.config(),
            },
            (None, None) => FeatureSelection::All,
        };
        Ok(PipelineConfig {
            selection,
            encoder: self.enc.params(),
            forest: ForestConfig {
                n_trees: self.trees,
                min_samples_leaf: self.min_leaf,
                max_depth: self.max_depth.0,
                features_per_split: self.features_per_split,
                seed: self.seed,
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub pipe: PipelineArgs,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub data: DataArgs,
    /// Score this model on the input; otherwise cross-validate.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub pipe: PipelineArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Decision threshold on the event score.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Metric summary, one row per repeat.
    #[arg(long)]
    pub output: PathBuf,
    /// Per-fold detail (cross-validation only).
    #[arg(long, value_name = "FILE")]
    pub fold_report: Option<PathBuf>,
    /// PR curve points; pooled held-out scores of the first repeat under CV.
    #[arg(long, value_name = "FILE")]
    pub pr: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Per-repeat metric files written by `evaluate`.
    #[arg(required = true, num_args = 2..)]
    pub files: Vec<PathBuf>,
    #[arg(long, default_value = "AUC-PR")]
    pub metric: String,
    /// p-value matrix (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_selector(s: &str) -> Result<Selector, String> {
    Selector::from_str(s).map_err(|e| e.to_string())
}

/// A selector, or `none` for the unselected baseline.
#[derive(Debug, Clone, Copy)]
pub struct SelectionArg(pub Option<Selector>);

/// A depth limit, or `none`.
#[derive(Debug, Clone, Copy)]
pub struct DepthArg(pub Option<usize>);

fn parse_selection(s: &str) -> Result<SelectionArg, String> {
    if s == "none" {
        Ok(SelectionArg(None))
    } else {
        parse_selector(s).map(|v| SelectionArg(Some(v)))
    }
}

fn parse_depth(s: &str) -> Result<DepthArg, String> {
    if s == "none" {
        return Ok(DepthArg(None));
    }
    match s.parse::<usize>() {
        Ok(d) if d >= 1 => Ok(DepthArg(Some(d))),
        _ => Err(format!("expected a positive integer or `none`, got `{s}`")),
    }
}

fn parse_fps(s: &str) -> Result<FeaturesPerSplit, String> {
    if s == "sqrt" {
        return Ok(FeaturesPerSplit::Sqrt);
    }
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(FeaturesPerSplit::Fixed(k)),
        _ => Err(format!("expected `sqrt` or a positive count, got `{s}`")),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write(p, contents.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

/// Loads and cleans a dataset, writing the cleaning report if asked.
fn load_clean(a: &DataArgs) -> Result<Dataset> {
    let raw = load_csv(&a.input, &LoadOptions::with_label(a.label.clone()))?;
    let (d, report) = preprocess(&raw, &PreprocessConfig::default())?;
    if let Some(p) = &a.clean_report {
        write(p, report.to_tsv(&a.label).as_bytes())?;
    }
    Ok(d)
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let parse_list = |s: &str, what: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad {what} value `{v}`"))
            })
            .collect()
    };
    let informative = if a.informative.is_empty() {
        SynthConfig::default().informative
    } else {
        a.informative
            .iter()
            .map(|s| parse_list(s, "lift").map(|lifts| Informative { lifts }))
            .collect::<Result<_>>()?
    };
    let noise = if a.noise.trim().is_empty() {
        Vec::new()
    } else {
        a.noise
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<usize>()
                    .with_context(|| format!("bad cardinality `{v}`"))
            })
            .collect::<Result<_>>()?
    };
    let cfg = SynthConfig {
        n_rows: a.rows,
        positive_rate: a.positive_rate,
        informative,
        noise,
        id_feature: a.id_feature,
        seed: a.seed,
    };
    let syn = generate(&cfg)?;
    let mut buf = Vec::new();
    write_csv(&syn.data, &mut buf)?;
    write(&a.output, &buf)?;
    write(&truth_path(&a.output), truth_tsv(&syn.truth).as_bytes())
}

fn cmd_select(a: &SelectArgs) -> Result<()> {
    let d = load_clean(&a.data)?;
    let scores = rank_features(&d, a.selector, &a.sel.config())?;
    emit(a.output.as_deref(), &scores_to_tsv(&scores))
}

fn cmd_encode(a: &EncodeArgs) -> Result<()> {
    let mut d = load_clean(&a.data)?;
    if let Some(p) = &a.scores {
        let kept = kept_features_from_tsv(&read(p)?)?;
        let names: Vec<&str> = kept.iter().map(String::as_str).collect();
        d = d.retain_features(&names)?;
    }
    let spec = fit_encoder(&d, a.enc.params())?;
    let scaler = MinMaxScaler::fit(&d);
    let m = spec.transform_scaled(&d, Some(&scaler))?;

    let mut out = Vec::with_capacity(m.nnz() * 16);
    writeln!(out, "row\tcolumn\tvalue")?;
    for r in 0..m.n_rows() {
        let (cols, vals) = m.row(r);
        for (c, v) in cols.iter().zip(vals) {
            writeln!(out, "{r}\t{c}\t{}", fmt_f64(*v))?;
        }
    }
    write(&a.output, &out)?;

    let mut s = Vec::new();
    write_encoder(&spec, &mut s)?;
    write_scaler(&scaler, &mut s)?;
    write(&a.spec, &s)?;

    if let Some(p) = &a.columns {
        let mut c = String::from("column\tkind\tfeature\tlevel\n");
        for (i, prov) in m.provenance().iter().enumerate() {
            let line = match *prov {
                Provenance::OneHot { feature, level } => {
                    let f = &spec.features[feature as usize];
                    let level = match &f.encoding {
                        crate::encoders::FeatureEncoding::OneHot { levels } => {
                            levels[level as usize].as_str()
                        }
                        _ => "",
                    };
                    format!("{i}\tonehot\t{}\t{level}\n", f.name)
                }
                Provenance::Numeric { feature } => {
                    format!("{i}\tnumeric\t{}\t\n", spec.features[feature as usize].name)
                }
                Provenance::HashBucket { bucket } => format!("{i}\thash\t*\t{bucket}\n"),
            };
            c.push_str(&line);
        }
        write(p, c.as_bytes())?;
    }
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let d = load_clean(&a.data)?;
    let model = fit_pipeline(&d, &a.pipe.config()?)?;
    write(&a.output, model.to_text().as_bytes())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    if let Some(model_path) = &a.model {
        // Held-out data is scored as given: cleaning could drop rows or
        // columns the model expects.
        let model = PipelineModel::read(&read(model_path)?)
            .with_context(|| model_path.display().to_string())?;
        let d = load_csv(
            &a.data.input,
            &LoadOptions::with_label(a.data.label.clone()),
        )?;
        let y = d.labels()?;
        let scores = model.score(&d)?;
        let pred: Vec<u8> = scores.iter().map(|&s| u8::from(s >= a.threshold)).collect();
        let m = metrics(&confusion(&y, &pred)?);
        let (curve, auc_pr) = pr_curve_auc(&y, &scores)?;
        let summary = RepeatSummary {
            repeat: 0,
            acc: m.acc,
            tpr: m.tpr,
            ppv: m.ppv,
            f1: m.f1,
            auc_pr,
            failed_folds: 0,
        };
        write(&a.output, summary_tsv(&[summary]).as_bytes())?;
        if let Some(p) = &a.pr {
            write(p, curve.to_tsv().as_bytes())?;
        }
        return Ok(());
    }

    let d = load_clean(&a.data)?;
    let cv = CvConfig {
        folds: a.folds,
        repeats: a.repeats,
        seed: a.pipe.seed,
        threshold: a.threshold,
    };
    let reports = cross_validate(&d, &a.pipe.config()?, &cv)?;
    let summaries = summarize(&reports);
    write(&a.output, summary_tsv(&summaries).as_bytes())?;
    if let Some(p) = &a.fold_report {
        write(p, folds_tsv(&reports).as_bytes())?;
    }
    for r in reports.iter().filter(|r| r.result.is_err()) {
        eprintln!(
            "warning: repeat {} fold {} failed: {}",
            r.repeat,
            r.fold,
            r.result.as_ref().unwrap_err()
        );
    }
    if summaries.iter().any(|s| s.failed_folds == a.folds) {
        bail!("every fold of at least one repeat failed");
    }
    if let Some(p) = &a.pr {
        let labels = d.labels()?;
        let mut pooled: Vec<(usize, f64)> = reports
            .iter()
            .filter(|r| r.repeat == 0)
            .filter_map(|r| r.result.as_ref().ok())
            .flat_map(|m| m.scores.iter().copied())
            .collect();
        pooled.sort_by_key(|&(row, _)| row);
        let y: Vec<u8> = pooled.iter().map(|&(row, _)| labels[row]).collect();
        let s: Vec<f64> = pooled.iter().map(|&(_, s)| s).collect();
        let (curve, _) = pr_curve_auc(&y, &s)?;
        write(p, curve.to_tsv().as_bytes())?;
    }
    Ok(())
}

fn file_label(p: &Path) -> String {
    p.file_stem().map_or_else(
        || p.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let col = crate::eval::cv::METRIC_COLUMNS
        .iter()
        .position(|c| *c == a.metric)
        .with_context(|| {
            format!(
                "unknown metric `{}`; expected one of {}",
                a.metric,
                crate::eval::cv::METRIC_COLUMNS.join(", ")
            )
        })?;
    let mut samples = Vec::with_capacity(a.files.len());
    for f in &a.files {
        let rows = read_summary(&read(f)?).with_context(|| f.display().to_string())?;
        samples.push(rows.iter().map(|r| r[col]).collect::<Vec<f64>>());
    }
    for i in 1..samples.len() {
        if samples[i].len() != samples[0].len() {
            return Err(EvalError::RepeatMismatch(
                a.files[0].display().to_string(),
                samples[0].len(),
                a.files[i].display().to_string(),
                samples[i].len(),
            )
            .into());
        }
    }
    let names: Vec<String> = a.files.iter().map(|p| file_label(p)).collect();
    let mut out = format!("{}\t{}\n", a.metric, names.join("\t"));
    for (i, si) in samples.iter().enumerate() {
        out.push_str(&names[i]);
        for sj in &samples {
            out.push_str(&format!(
                "\t{}",
                fmt_f64(wilcoxon_signed_rank(si, sj).p_value)
            ));
        }
        out.push('\n');
    }
    emit(a.output.as_deref(), &out)
}

const SUBCOMMANDS: [&str; 6] = [
    "generate", "select", "encode", "train", "evaluate", "compare",
];

/// Splices `--config` file entries right after the subcommand name so that
/// explicit flags, which come later, override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(sub) = args.iter().position(|a| SUBCOMMANDS.iter().any(|s| a == s)) else {
        return Ok(args);
    };
    let Some(pos) = args[sub..]
        .iter()
        .position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="))
        .map(|p| p + sub)
    else {
        return Ok(args);
    };
    let flag = args[pos].to_string_lossy().into_owned();
    let (path, consumed) = match flag.strip_prefix("--config=") {
        Some(p) => (PathBuf::from(p), 1),
        None => match args.get(pos + 1) {
            Some(p) => (PathBuf::from(p), 2),
            // Let the parser report the missing value.
            None => return Ok(args),
        },
    };
    let mut injected = Vec::new();
    for (n, line) in read(&path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), n + 1);
        };
        let (k, v) = (k.trim(), v.trim());
        match v {
            "true" => injected.push(OsString::from(format!("--{k}"))),
            "false" => {}
            _ => {
                injected.push(OsString::from(format!("--{k}")));
                injected.push(OsString::from(v));
            }
        }
    }
    let mut out: Vec<OsString> = args[..=sub].to_vec();
    out.extend(injected);
    out.extend(
        args.into_iter()
            .enumerate()
            .skip(sub + 1)
            .filter(|(i, _)| *i < pos || *i >= pos + consumed)
            .map(|(_, a)| a),
    );
    Ok(out)
}

fn dispatch(cli: &Cli) -> Result<()> {
    crate::par::set_threads(cli.threads).map_err(anyhow::Error::msg)?;
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Select(a) => cmd_select(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 on
/// runtime or data errors, 2 on usage errors.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let args = match expand_config(args.into_iter().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
