//! Command-line interface: align, annotate, eval, convert.
//!
//! Every error path maps to a documented exit code (see the README):
//! 3 I/O, 4 parse, 5 no base pairs, 6 pseudoknot rejected, 7 annotation
//! mismatch, 8 conversion failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::align::{align_forests, machine_report, render_text_report, AlignError, AlignParams};
use crate::eval::{
    batch_pairwise, parse_manifest, render_batch_report, BatchAnnotations, BatchParams, EvalError,
};
use crate::pipeline::{
    apply_overrides, prepare_forest, prepare_structure, read_structure_file, resolve_scheme,
    AnnotationMode, InputFormat, PipelineError, PseudoknotPolicy,
};
use crate::score::Score;
use crate::structure::{emit_bpseq, emit_dotbracket, remove_pseudoknots, StructureError};
use crate::tree::{emit_annotation_file, predict_chs_baseline, PredictorPolicy, StructureForest};

#[derive(Parser, Debug)]
#[command(
    name = "chsalign",
    version,
    about = "Align RNA secondary structures with coaxial helical stacking annotations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print extra progress information to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Align two structures and report the optimal score and alignment.
    Align(AlignArgs),
    /// Emit a junction annotation sidecar file for one structure.
    Annotate(AnnotateArgs),
    /// Run all pairwise alignments of a grouped dataset and report
    /// scores and junction-alignment precision.
    Eval(EvalArgs),
    /// Convert between bpseq and dot-bracket.
    Convert(ConvertArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FormatArg {
    #[default]
    Auto,
    Bpseq,
    Dotbracket,
}

impl From<FormatArg> for InputFormat {
    fn from(v: FormatArg) -> InputFormat {
        match v {
            FormatArg::Auto => InputFormat::Auto,
            FormatArg::Bpseq => InputFormat::Bpseq,
            FormatArg::Dotbracket => InputFormat::Dotbracket,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KnotArg {
    #[default]
    Reject,
    Remove,
}

impl From<KnotArg> for PseudoknotPolicy {
    fn from(v: KnotArg) -> PseudoknotPolicy {
        match v {
            KnotArg::Reject => PseudoknotPolicy::Reject,
            KnotArg::Remove => PseudoknotPolicy::Remove,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PredictorArg {
    #[default]
    None,
    Flush,
}

impl From<PredictorArg> for PredictorPolicy {
    fn from(v: PredictorArg) -> PredictorPolicy {
        match v {
            PredictorArg::None => PredictorPolicy::None,
            PredictorArg::Flush => PredictorPolicy::Flush,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputArg {
    #[default]
    Text,
    Machine,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EvalAnnotArg {
    /// Sidecar `<file>.chs` next to each structure file.
    #[default]
    File,
    None,
    Flush,
}

fn parse_score_arg(s: &str) -> Result<Score, String> {
    Score::parse(s).map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
pub struct AlignArgs {
    pub input1: PathBuf,
    pub input2: PathBuf,
    /// Input format (auto-detected by default).
    #[arg(long, value_enum, default_value_t)]
    pub format: FormatArg,
    /// Annotation sidecar for input 1 (otherwise the predictor runs).
    #[arg(long)]
    pub annot1: Option<PathBuf>,
    /// Annotation sidecar for input 2.
    #[arg(long)]
    pub annot2: Option<PathBuf>,
    /// Baseline predictor used when no sidecar is given.
    #[arg(long, value_enum, default_value_t)]
    pub predictor: PredictorArg,
    /// Per-nucleotide gap penalty override (default: scheme value, -1).
    #[arg(long, value_parser = parse_score_arg, allow_hyphen_values = true)]
    pub gap: Option<Score>,
    /// Junction match weight override (default: scheme value, 100).
    #[arg(long, value_parser = parse_score_arg)]
    pub weight: Option<Score>,
    /// Scoring scheme: ribosum85-60, unit, or a scheme file path.
    #[arg(long, default_value = "ribosum85-60")]
    pub scheme: String,
    #[arg(long, value_enum, default_value_t)]
    pub pseudoknots: KnotArg,
    #[arg(long, value_enum, default_value_t)]
    pub output: OutputArg,
    /// Diagnostic sweep: align once per listed weight and print
    /// tab-separated `w score` lines instead of a report.
    #[arg(long, value_delimiter = ',', value_parser = parse_score_arg)]
    pub sweep_w: Option<Vec<Score>>,
}

#[derive(Args, Debug)]
pub struct AnnotateArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: FormatArg,
    #[arg(long, value_enum, default_value_t)]
    pub predictor: PredictorArg,
    #[arg(long, value_enum, default_value_t)]
    pub pseudoknots: KnotArg,
    /// Output path (stdout by default).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Group manifest: one `group <name>: file1 file2 ...` line per group,
    /// paths relative to the manifest file.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub annotations: EvalAnnotArg,
    #[arg(long, value_enum, default_value_t)]
    pub format: FormatArg,
    #[arg(long, value_parser = parse_score_arg, allow_hyphen_values = true)]
    pub gap: Option<Score>,
    #[arg(long, value_parser = parse_score_arg)]
    pub weight: Option<Score>,
    #[arg(long, default_value = "ribosum85-60")]
    pub scheme: String,
    #[arg(long, value_enum, default_value_t)]
    pub pseudoknots: KnotArg,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    pub input: PathBuf,
    /// Target format.
    #[arg(long, value_enum)]
    pub to: ConvertTarget,
    #[arg(long, value_enum, default_value_t)]
    pub format: FormatArg,
    /// Strip crossing pairs before emitting.
    #[arg(long)]
    pub remove_pseudoknots: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvertTarget {
    Bpseq,
    Dotbracket,
}

#[derive(Error, Debug)]
pub enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error("cannot convert: {0}")]
    Convert(StructureError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 3,
            CliError::Pipeline(p) => match p {
                PipelineError::Io { .. } => 3,
                PipelineError::Parse { .. } | PipelineError::Scheme { .. } => 4,
                PipelineError::NoPairs { .. } => 5,
                PipelineError::Pseudoknot { .. } => 6,
                PipelineError::Annotation { .. } => 7,
            },
            CliError::Eval(e) => match e {
                EvalError::ManifestSyntax { .. } => 4,
                EvalError::ResultMismatch { .. } => 7,
            },
            CliError::Align(_) => 7,
            CliError::Convert(_) => 8,
        }
    }
}

fn print_notes(notes: &[String]) {
    for note in notes {
        eprintln!("warning: {note}");
    }
}

fn write_output(path: &Option<PathBuf>, out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => out
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".to_string(),
                source,
            }),
    }
}

/// Dispatch a parsed command; everything written to `out` is the
/// command's stdout payload.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Align(args) => cmd_align(args, out),
        Command::Annotate(args) => cmd_annotate(args, out),
        Command::Eval(args) => cmd_eval(args, out),
        Command::Convert(args) => cmd_convert(args, out),
    }
}

fn annotation_mode(annot: &Option<PathBuf>, predictor: PredictorArg) -> AnnotationMode {
    match annot {
        Some(path) => AnnotationMode::File(path.clone()),
        None => AnnotationMode::Predictor(predictor.into()),
    }
}

pub fn cmd_align(args: AlignArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let scheme = apply_overrides(resolve_scheme(&args.scheme)?, args.gap, args.weight)?;
    let format: InputFormat = args.format.into();
    let knots: PseudoknotPolicy = args.pseudoknots.into();

    let (forest1, notes1) = prepare_forest(
        &args.input1,
        format,
        knots,
        &annotation_mode(&args.annot1, args.predictor),
    )?;
    let (forest2, notes2) = prepare_forest(
        &args.input2,
        format,
        knots,
        &annotation_mode(&args.annot2, args.predictor),
    )?;
    print_notes(&notes1);
    print_notes(&notes2);

    if let Some(weights) = &args.sweep_w {
        let mut text = String::new();
        for &w in weights {
            let swept = scheme
                .clone()
                .with_weight(w)
                .map_err(|source| PipelineError::Scheme {
                    path: "--sweep-w".into(),
                    source,
                })?;
            let result = align_forests(&forest1, &forest2, &AlignParams::new(swept))?;
            text.push_str(&format!("{w}\t{}\n", result.score));
        }
        return write_output(&None, out, &text);
    }

    let params = AlignParams::new(scheme.clone());
    let result = align_forests(&forest1, &forest2, &params)?;
    let text = match args.output {
        OutputArg::Text => render_text_report(
            &result,
            &forest1,
            &forest2,
            &args.input1.display().to_string(),
            &args.input2.display().to_string(),
            &scheme,
        ),
        OutputArg::Machine => {
            let report = machine_report(&result, &forest1, &forest2);
            let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
            json.push('\n');
            json
        }
    };
    write_output(&None, out, &text)
}

pub fn cmd_annotate(args: AnnotateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let display = args.input.display().to_string();
    let raw = read_structure_file(&args.input, args.format.into())?;
    let prepared = prepare_structure(raw, &display, args.pseudoknots.into())?;
    print_notes(&prepared.notes);
    let mut forest = StructureForest::build(&prepared.ss);
    print_notes(&forest.degree_warnings());
    predict_chs_baseline(&mut forest, args.predictor.into());
    write_output(&args.output, out, &emit_annotation_file(&forest))
}

pub fn cmd_eval(args: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let scheme = apply_overrides(resolve_scheme(&args.scheme)?, args.gap, args.weight)?;
    let manifest_text = fs::read_to_string(&args.manifest).map_err(|source| CliError::Io {
        path: args.manifest.display().to_string(),
        source,
    })?;
    let groups = parse_manifest(&manifest_text)?;
    let base_dir = args.manifest.parent().unwrap_or_else(|| Path::new("."));
    let params = BatchParams {
        align: AlignParams::new(scheme),
        annotations: match args.annotations {
            EvalAnnotArg::File => BatchAnnotations::Sidecar,
            EvalAnnotArg::None => BatchAnnotations::Predictor(PredictorPolicy::None),
            EvalAnnotArg::Flush => BatchAnnotations::Predictor(PredictorPolicy::Flush),
        },
        format: args.format.into(),
        pseudoknots: args.pseudoknots.into(),
    };
    let report = batch_pairwise(base_dir, &groups, &params);
    print_notes(&report.warnings);
    write_output(&args.output, out, &render_batch_report(&report))
}

pub fn cmd_convert(args: ConvertArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut ss = read_structure_file(&args.input, args.format.into())?;
    if args.remove_pseudoknots {
        let (kept, removed) = remove_pseudoknots(&ss);
        if !removed.is_empty() {
            eprintln!("warning: removed {} pseudoknot pair(s)", removed.len());
        }
        ss = kept;
    }
    let text = match args.to {
        ConvertTarget::Bpseq => emit_bpseq(&ss),
        ConvertTarget::Dotbracket => emit_dotbracket(&ss).map_err(CliError::Convert)?,
    };
    write_output(&args.output, out, &text)
}
