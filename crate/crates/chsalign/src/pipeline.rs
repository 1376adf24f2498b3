//! Shared input plumbing: read a structure file, apply the pseudoknot
//! policy, validate, build the forest and resolve annotations.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::score::Score;
use crate::scoring::{SchemeError, ScoringScheme};
use crate::structure::{
    parse_bpseq, parse_dotbracket_file, remove_pseudoknots, validate_for_alignment,
    SecondaryStructure, StructureError,
};
use crate::tree::{
    parse_annotations, predict_chs_baseline, AnnotationError, PredictorPolicy, StructureForest,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    #[default]
    Auto,
    Bpseq,
    Dotbracket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PseudoknotPolicy {
    #[default]
    Reject,
    Remove,
}

/// Where junction annotations come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotationMode {
    /// Explicit sidecar file.
    File(PathBuf),
    /// Baseline predictor.
    Predictor(PredictorPolicy),
}

#[derive(Error, Debug)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: StructureError,
    },
    #[error("{path}: structure has no base pairs")]
    NoPairs { path: String },
    #[error("{path}: pseudoknot present (pairs ({0}, {1}) and ({2}, {3}) cross); rerun with pseudoknot removal", .crossing.0.0, .crossing.0.1, .crossing.1.0, .crossing.1.1)]
    Pseudoknot {
        path: String,
        crossing: ((usize, usize), (usize, usize)),
    },
    #[error("{path}: {source}")]
    Annotation {
        path: String,
        source: AnnotationError,
    },
    #[error("scheme {path}: {source}")]
    Scheme { path: String, source: SchemeError },
}

/// Sniff bpseq versus dot-bracket from content: bpseq data lines start
/// with an integer index.
fn sniff_format(text: &str) -> InputFormat {
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('>') {
            continue;
        }
        let first = line.split_whitespace().next().unwrap_or("");
        return if first.chars().all(|c| c.is_ascii_digit()) {
            InputFormat::Bpseq
        } else {
            InputFormat::Dotbracket
        };
    }
    InputFormat::Dotbracket
}

fn format_for(path: &Path, format: InputFormat, text: &str) -> InputFormat {
    match format {
        InputFormat::Auto => match path.extension().and_then(|e| e.to_str()) {
            Some("bpseq") => InputFormat::Bpseq,
            Some("db" | "dbn" | "dot" | "dotbracket" | "fa" | "fasta") => InputFormat::Dotbracket,
            _ => sniff_format(text),
        },
        fixed => fixed,
    }
}

/// Read and parse a structure file.
pub fn read_structure_file(
    path: &Path,
    format: InputFormat,
) -> Result<SecondaryStructure, PipelineError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: display.clone(),
        source,
    })?;
    let parsed = match format_for(path, format, &text) {
        InputFormat::Bpseq => parse_bpseq(&text),
        _ => parse_dotbracket_file(&text),
    };
    parsed.map_err(|source| PipelineError::Parse {
        path: display,
        source,
    })
}

/// Structure after policy application, with the validation diagnostics
/// (including the removed pair set when removal ran) and printable notes.
pub struct PreparedStructure {
    pub ss: SecondaryStructure,
    pub diagnostics: crate::structure::Diagnostics,
    pub notes: Vec<String>,
}

/// Apply the pseudoknot policy and validate for alignment.
pub fn prepare_structure(
    ss: SecondaryStructure,
    path: &str,
    policy: PseudoknotPolicy,
) -> Result<PreparedStructure, PipelineError> {
    let mut notes = Vec::new();
    let mut removed_pairs = std::collections::BTreeSet::new();
    let ss = if ss.is_crossing() {
        match policy {
            PseudoknotPolicy::Reject => {
                let crossing = ss.crossing_pairs()[0];
                return Err(PipelineError::Pseudoknot {
                    path: path.to_string(),
                    crossing,
                });
            }
            PseudoknotPolicy::Remove => {
                let (kept, removed) = remove_pseudoknots(&ss);
                notes.push(format!(
                    "{path}: removed {} pseudoknot pair(s): {}",
                    removed.len(),
                    removed
                        .iter()
                        .map(|(i, j)| format!("({i},{j})"))
                        .collect::<Vec<_>>()
                        .join(" ")
                ));
                removed_pairs = removed;
                kept
            }
        }
    } else {
        ss
    };
    let mut diag = validate_for_alignment(&ss);
    diag.pseudoknot_pairs = removed_pairs;
    if !diag.passes() {
        if ss.pair_count() == 0 {
            return Err(PipelineError::NoPairs {
                path: path.to_string(),
            });
        }
        let crossing = ss.crossing_pairs()[0];
        return Err(PipelineError::Pseudoknot {
            path: path.to_string(),
            crossing,
        });
    }
    for w in diag.warnings() {
        notes.push(format!("{path}: {}", w.message));
    }
    Ok(PreparedStructure {
        ss,
        diagnostics: diag,
        notes,
    })
}

/// Full ingest: read, apply policy, build the forest, annotate.
pub fn prepare_forest(
    path: &Path,
    format: InputFormat,
    policy: PseudoknotPolicy,
    annotations: &AnnotationMode,
) -> Result<(StructureForest, Vec<String>), PipelineError> {
    let display = path.display().to_string();
    let raw = read_structure_file(path, format)?;
    let prepared = prepare_structure(raw, &display, policy)?;
    let mut notes = prepared.notes;
    let mut forest = StructureForest::build(&prepared.ss);
    for w in forest.degree_warnings() {
        notes.push(format!("{display}: {w}"));
    }
    match annotations {
        AnnotationMode::File(annot_path) => {
            let text = fs::read_to_string(annot_path).map_err(|source| PipelineError::Io {
                path: annot_path.display().to_string(),
                source,
            })?;
            let warnings = parse_annotations(&text, &mut forest).map_err(|source| {
                PipelineError::Annotation {
                    path: annot_path.display().to_string(),
                    source,
                }
            })?;
            notes.extend(warnings.into_iter().map(|w| format!("{display}: {w}")));
        }
        AnnotationMode::Predictor(policy) => predict_chs_baseline(&mut forest, *policy),
    }
    Ok((forest, notes))
}

/// Resolve a scheme argument: a known name checks `CHSALIGN_SCHEME_DIR`
/// first and falls back to the built-in; anything else is a file path.
pub fn resolve_scheme(arg: &str) -> Result<ScoringScheme, PipelineError> {
    let from_file = |p: &Path| -> Result<ScoringScheme, PipelineError> {
        let display = p.display().to_string();
        let text = fs::read_to_string(p).map_err(|source| PipelineError::Io {
            path: display.clone(),
            source,
        })?;
        ScoringScheme::from_file_text(&text).map_err(|source| PipelineError::Scheme {
            path: display,
            source,
        })
    };
    if let Ok(dir) = std::env::var("CHSALIGN_SCHEME_DIR") {
        let candidate = Path::new(&dir).join(format!("{arg}.mat"));
        if candidate.is_file() {
            return from_file(&candidate);
        }
    }
    match ScoringScheme::builtin(arg) {
        Ok(scheme) => Ok(scheme),
        Err(SchemeError::UnknownScheme(_)) => from_file(Path::new(arg)),
        Err(other) => Err(PipelineError::Scheme {
            path: arg.to_string(),
            source: other,
        }),
    }
}

/// Apply optional gap/weight overrides to a scheme.
pub fn apply_overrides(
    scheme: ScoringScheme,
    gap: Option<Score>,
    weight: Option<Score>,
) -> Result<ScoringScheme, PipelineError> {
    let mut scheme = scheme;
    if let Some(g) = gap {
        scheme = scheme.with_gap(g).map_err(|source| PipelineError::Scheme {
            path: "--gap".to_string(),
            source,
        })?;
    }
    if let Some(w) = weight {
        scheme = scheme
            .with_weight(w)
            .map_err(|source| PipelineError::Scheme {
                path: "--weight".to_string(),
                source,
            })?;
    }
    Ok(scheme)
}
