//! Junction-alignment precision and the batch pairwise harness.
//!
//! A junction J1 of structure 1 aligns with a junction J2 of structure 2
//! when some nucleotide on a loop region of J1 is aligned with a
//! nucleotide on a loop region of J2. Such a junction alignment is a true
//! positive when the junctions have the same branch count and the same
//! stacking status, a false positive otherwise; precision is
//! TP / (TP + FP), undefined when no junction alignment exists.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::align::{align_forests, AlignParams, AlignmentResult, FlatAlignment};
use crate::pipeline::{prepare_forest, AnnotationMode, InputFormat, PseudoknotPolicy};
use crate::score::Score;
use crate::tree::{PredictorPolicy, StructureForest};

#[derive(Error, Debug)]
pub enum EvalError {
    #[error("alignment references position {pos} beyond structure {which} (length {len})")]
    ResultMismatch { which: u8, pos: usize, len: usize },
    #[error("line {line}: malformed manifest line: {text:?}")]
    ManifestSyntax { line: usize, text: String },
}

/// One junction-to-junction alignment event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JunctionAlignment {
    /// Arena node ids of the aligned junctions.
    pub node1: usize,
    pub node2: usize,
    /// First base-to-base column witnessing the event.
    pub witness: (usize, usize),
    /// Equal branch count and equal stacking status.
    pub true_positive: bool,
}

/// Map position -> junction node id for loop-segment nucleotides.
fn junction_position_map(forest: &StructureForest) -> Vec<Option<usize>> {
    let mut map = vec![None; forest.structure().len() + 1];
    for (id, node) in forest.nodes().iter().enumerate() {
        if let Some(j) = node.junction() {
            for seg in &j.segments {
                for p in seg.clone() {
                    map[p] = Some(id);
                }
            }
        }
    }
    map
}

/// Scan any flattened alignment for junction alignment events.
pub fn extract_junction_alignments_flat(
    flat: &FlatAlignment,
    forest1: &StructureForest,
    forest2: &StructureForest,
) -> Vec<JunctionAlignment> {
    let map1 = junction_position_map(forest1);
    let map2 = junction_position_map(forest2);
    let mut seen: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    for col in &flat.columns {
        if let (Some(p1), Some(p2)) = (col.pos1, col.pos2) {
            if let (Some(j1), Some(j2)) = (map1[p1], map2[p2]) {
                seen.entry((j1, j2)).or_insert((p1, p2));
            }
        }
    }
    seen.into_iter()
        .map(|((node1, node2), witness)| {
            let psi1 = forest1.node(node1).psi();
            let psi2 = forest2.node(node2).psi();
            JunctionAlignment {
                node1,
                node2,
                witness,
                true_positive: psi1 == psi2,
            }
        })
        .collect()
}

/// Extract junction alignment events from an alignment result, checking
/// that the result belongs to these forests.
pub fn extract_junction_alignments(
    result: &AlignmentResult,
    forest1: &StructureForest,
    forest2: &StructureForest,
) -> Result<Vec<JunctionAlignment>, EvalError> {
    let len1 = forest1.structure().len();
    let len2 = forest2.structure().len();
    for col in &result.flattened.columns {
        if let Some(p) = col.pos1 {
            if p > len1 {
                return Err(EvalError::ResultMismatch {
                    which: 1,
                    pos: p,
                    len: len1,
                });
            }
        }
        if let Some(p) = col.pos2 {
            if p > len2 {
                return Err(EvalError::ResultMismatch {
                    which: 2,
                    pos: p,
                    len: len2,
                });
            }
        }
    }
    Ok(extract_junction_alignments_flat(
        &result.flattened,
        forest1,
        forest2,
    ))
}

/// Precision over a classified list of junction alignments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionReport {
    pub tp: usize,
    pub fp: usize,
}

impl PrecisionReport {
    /// TP / (TP + FP); `None` (reported N/A) when no events exist.
    pub fn pr(&self) -> Option<f64> {
        let total = self.tp + self.fp;
        (total > 0).then(|| self.tp as f64 / total as f64)
    }
}

pub fn precision(alignments: &[JunctionAlignment]) -> PrecisionReport {
    let tp = alignments.iter().filter(|a| a.true_positive).count();
    PrecisionReport {
        tp,
        fp: alignments.len() - tp,
    }
}

/// One manifest group: `group <name>: file1 file2 ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub name: String,
    pub files: Vec<String>,
}

pub fn parse_manifest(text: &str) -> Result<Vec<Group>, EvalError> {
    let mut groups = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = || EvalError::ManifestSyntax {
            line: lineno + 1,
            text: line.to_string(),
        };
        let rest = line.strip_prefix("group ").ok_or_else(syntax)?;
        let (name, files) = rest.split_once(':').ok_or_else(syntax)?;
        let name = name.trim();
        if name.is_empty() {
            return Err(syntax());
        }
        groups.push(Group {
            name: name.to_string(),
            files: files.split_whitespace().map(str::to_string).collect(),
        });
    }
    Ok(groups)
}

/// How batch entries resolve their annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BatchAnnotations {
    /// Sidecar `<file stem>.chs` next to each structure file.
    Sidecar,
    Predictor(PredictorPolicy),
}

#[derive(Debug, Clone)]
pub struct BatchParams {
    pub align: AlignParams,
    pub annotations: BatchAnnotations,
    pub format: InputFormat,
    pub pseudoknots: PseudoknotPolicy,
}

/// One output row of the batch report.
#[derive(Debug, Clone)]
pub struct PairRow {
    pub group: String,
    pub file1: String,
    pub file2: String,
    pub score: Score,
    pub tp: usize,
    pub fp: usize,
    pub pr: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct GroupSummary {
    pub group: String,
    pub pairs: usize,
    pub mean_score: f64,
    pub tp: usize,
    pub fp: usize,
    /// Mean over defined PR values only.
    pub mean_pr: Option<f64>,
}

#[derive(Debug, Default)]
pub struct BatchReport {
    pub rows: Vec<PairRow>,
    pub summaries: Vec<GroupSummary>,
    pub warnings: Vec<String>,
}

fn sidecar_path(structure: &Path) -> std::path::PathBuf {
    structure.with_extension("chs")
}

/// Align all unordered pairs within each group. Unreadable or invalid
/// files are skipped with a warning; pairs run in parallel and results
/// merge in pair-index order.
pub fn batch_pairwise(base_dir: &Path, groups: &[Group], params: &BatchParams) -> BatchReport {
    let mut report = BatchReport::default();

    // Load every file once, keeping per-group lists of successes.
    let mut loaded: Vec<Vec<(String, StructureForest)>> = Vec::with_capacity(groups.len());
    for group in groups {
        let mut entries = Vec::new();
        for file in &group.files {
            let path = base_dir.join(file);
            let annotations = match &params.annotations {
                BatchAnnotations::Sidecar => AnnotationMode::File(sidecar_path(&path)),
                BatchAnnotations::Predictor(p) => AnnotationMode::Predictor(*p),
            };
            match prepare_forest(&path, params.format, params.pseudoknots, &annotations) {
                Ok((forest, notes)) => {
                    report.warnings.extend(notes);
                    entries.push((file.clone(), forest));
                }
                Err(err) => {
                    report.warnings.push(format!("skipping {file}: {err}"));
                }
            }
        }
        loaded.push(entries);
    }

    // Task list in deterministic order: groups as declared, pairs (i, j)
    // with i < j in listed order.
    let mut tasks: Vec<(usize, usize, usize)> = Vec::new();
    for (g, entries) in loaded.iter().enumerate() {
        for i in 0..entries.len() {
            for j in i + 1..entries.len() {
                tasks.push((g, i, j));
            }
        }
    }

    let rows: Vec<PairRow> = tasks
        .par_iter()
        .map(|&(g, i, j)| {
            let (name1, forest1) = &loaded[g][i];
            let (name2, forest2) = &loaded[g][j];
            let result = align_forests(forest1, forest2, &params.align)
                .expect("prepared forests are annotated");
            let events = extract_junction_alignments_flat(&result.flattened, forest1, forest2);
            let p = precision(&events);
            PairRow {
                group: groups[g].name.clone(),
                file1: name1.clone(),
                file2: name2.clone(),
                score: result.score,
                tp: p.tp,
                fp: p.fp,
                pr: p.pr(),
            }
        })
        .collect();

    for (g, group) in groups.iter().enumerate() {
        let group_rows: Vec<&PairRow> = rows.iter().filter(|r| r.group == group.name).collect();
        let _ = g;
        if group_rows.is_empty() {
            continue;
        }
        let pairs = group_rows.len();
        let mean_score = group_rows
            .iter()
            .map(|r| r.score.raw() as f64 / crate::score::SCALE as f64)
            .sum::<f64>()
            / pairs as f64;
        let tp = group_rows.iter().map(|r| r.tp).sum();
        let fp = group_rows.iter().map(|r| r.fp).sum();
        let defined: Vec<f64> = group_rows.iter().filter_map(|r| r.pr).collect();
        let mean_pr =
            (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        report.summaries.push(GroupSummary {
            group: group.name.clone(),
            pairs,
            mean_score,
            tp,
            fp,
            mean_pr,
        });
    }
    report.rows = rows;
    report
}

fn pr_text(pr: Option<f64>) -> String {
    pr.map_or_else(|| "N/A".to_string(), |v| format!("{v:.4}"))
}

/// Tab-separated report: per-pair rows then per-group average rows.
pub fn render_batch_report(report: &BatchReport) -> String {
    let mut out = String::from("group\tfile1\tfile2\tscore\ttp\tfp\tpr\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            row.group,
            row.file1,
            row.file2,
            row.score,
            row.tp,
            row.fp,
            pr_text(row.pr)
        ));
    }
    for s in &report.summaries {
        out.push_str(&format!(
            "{}\tAVERAGE\t({} pairs)\t{:.4}\t{}\t{}\t{}\n",
            s.group,
            s.pairs,
            s.mean_score,
            s.tp,
            s.fp,
            pr_text(s.mean_pr)
        ));
    }
    out
}

/// True when both aligned junction loops belong to annotated junctions.
/// Convenience for tests asserting the strict-mode zero-FP property.
pub fn has_false_positive(
    result: &AlignmentResult,
    forest1: &StructureForest,
    forest2: &StructureForest,
) -> bool {
    extract_junction_alignments_flat(&result.flattened, forest1, forest2)
        .iter()
        .any(|a| !a.true_positive)
}
