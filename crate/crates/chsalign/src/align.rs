//! Constrained tree-matching dynamic program over two structure forests.
//!
//! A two-dimensional table holds, for every subtree pair, the best local
//! alignment score under the constraints: only same-kind nodes align,
//! junction pairs additionally require equal signatures (degree plus
//! stacked set), and a matched junction aligns its children positionally.
//! Every cell includes a zero alternative, so the reported optimum is the
//! best-scoring subtree region (local alignment). Backtracking from the
//! maximum cell reconstructs the node-level trace, which flattens to a
//! nucleotide-level alignment.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::score::Score;
use crate::scoring::{gamma, gamma_detail, gamma_gap, AlignedUnit, NodeAlignment, ScoringScheme};
use crate::structure::SecondaryStructure;
use crate::tree::{HelixColumn, NodeKind, NodePayload, StructureForest, TreeNode};

/// Alignment mode. Strict mode enforces the junction signature gate
/// exactly; it is the only mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlignMode {
    #[default]
    Strict,
}

/// Best-cell tie policy: the lexicographically smallest (i, j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BestCellPolicy {
    #[default]
    LexSmallest,
}

#[derive(Debug, Clone)]
pub struct AlignParams {
    pub scheme: ScoringScheme,
    pub report: BestCellPolicy,
    pub mode: AlignMode,
}

impl AlignParams {
    pub fn new(scheme: ScoringScheme) -> AlignParams {
        AlignParams {
            scheme,
            report: BestCellPolicy::default(),
            mode: AlignMode::default(),
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum AlignError {
    #[error("junction t{which}[{node}] has no stacking annotation")]
    UnannotatedJunction { which: u8, node: usize },
}

/// Case tag recorded per cell for backtracking. The textual order of the
/// recurrence alternatives decides ties; a zero-valued cell always tags
/// `Zero` because backtracking stops on zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellCase {
    Zero,
    MatchJunctions,
    MatchHelices {
        with_child: bool,
    },
    MatchHairpins,
    /// Node of forest 1 aligned to gaps; continue at (child, j).
    GapNode1 {
        child: usize,
    },
    /// Node of forest 2 aligned to gaps; continue at (i, child).
    GapNode2 {
        child: usize,
    },
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    score: Score,
    case: CellCase,
}

/// The filled subtree-score table.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
}

impl ScoreTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Score at a cell, indexed by arena node ids.
    pub fn score(&self, i: usize, j: usize) -> Score {
        self.cells[i * self.cols + j].score
    }

    pub fn case(&self, i: usize, j: usize) -> CellCase {
        self.cells[i * self.cols + j].case
    }
}

/// Fill the table bottom-up in post-order. Both forests must be fully
/// annotated.
pub fn fill_table(
    forest1: &StructureForest,
    forest2: &StructureForest,
    params: &AlignParams,
) -> Result<ScoreTable, AlignError> {
    for (which, forest) in [(1u8, forest1), (2u8, forest2)] {
        for (id, node) in forest.nodes().iter().enumerate() {
            if node.junction().is_some_and(|j| j.status.is_none()) {
                return Err(AlignError::UnannotatedJunction {
                    which,
                    node: id + 1,
                });
            }
        }
    }

    let scheme = &params.scheme;
    let ss1 = forest1.structure();
    let ss2 = forest2.structure();
    let rows = forest1.node_count();
    let cols = forest2.node_count();
    let mut cells = vec![
        Cell {
            score: Score::ZERO,
            case: CellCase::Zero
        };
        rows * cols
    ];

    for i in 0..rows {
        let n1 = forest1.node(i);
        for j in 0..cols {
            let n2 = forest2.node(j);
            let score_at = |a: usize, b: usize| cells[a * cols + b].score;

            // Candidates are considered in the textual order of each
            // recurrence; a strictly greater score replaces the current
            // choice, so the first optimal alternative wins ties and the
            // zero floor stands unless beaten.
            let mut best = Cell {
                score: Score::ZERO,
                case: CellCase::Zero,
            };
            let consider = |score: Score, case: CellCase, best: &mut Cell| {
                if score > best.score {
                    *best = Cell { score, case };
                }
            };

            // Best child of a gapped junction, smallest child first on ties.
            let best_junction_child = |children: &[usize], other: usize, from1: bool| {
                let mut out: Option<(Score, usize)> = None;
                for &c in children {
                    let s = if from1 {
                        score_at(c, other)
                    } else {
                        score_at(other, c)
                    };
                    if out.is_none_or(|(bs, _)| s > bs) {
                        out = Some((s, c));
                    }
                }
                out.expect("junction has children")
            };

            match (n1.kind(), n2.kind()) {
                (NodeKind::Junction, NodeKind::Junction) => {
                    let g = gamma(ss1, n1, ss2, n2, scheme);
                    let mut forest_score = Score::ZERO;
                    if g.is_finite() {
                        // Equal signatures imply equal child counts;
                        // children match positionally.
                        for (&a, &b) in n1.children.iter().zip(&n2.children) {
                            forest_score += score_at(a, b);
                        }
                    }
                    consider(g + forest_score, CellCase::MatchJunctions, &mut best);
                }
                (NodeKind::Helix, NodeKind::Helix) => {
                    let g = gamma(ss1, n1, ss2, n2, scheme);
                    let sub = score_at(n1.children[0], n2.children[0]);
                    consider(
                        g + sub,
                        CellCase::MatchHelices { with_child: true },
                        &mut best,
                    );
                    consider(g, CellCase::MatchHelices { with_child: false }, &mut best);
                }
                (NodeKind::Hairpin, NodeKind::Hairpin) => {
                    let g = gamma(ss1, n1, ss2, n2, scheme);
                    consider(g, CellCase::MatchHairpins, &mut best);
                }
                (NodeKind::Junction, NodeKind::Helix) => {
                    let c2 = n2.children[0];
                    consider(
                        gamma_gap(n2, scheme) + score_at(i, c2),
                        CellCase::GapNode2 { child: c2 },
                        &mut best,
                    );
                    let (s, k) = best_junction_child(&n1.children, j, true);
                    consider(
                        gamma_gap(n1, scheme) + s,
                        CellCase::GapNode1 { child: k },
                        &mut best,
                    );
                }
                (NodeKind::Junction, NodeKind::Hairpin) => {
                    let (s, k) = best_junction_child(&n1.children, j, true);
                    consider(
                        gamma_gap(n1, scheme) + s,
                        CellCase::GapNode1 { child: k },
                        &mut best,
                    );
                }
                (NodeKind::Helix, NodeKind::Junction) => {
                    let c1 = n1.children[0];
                    consider(
                        gamma_gap(n1, scheme) + score_at(c1, j),
                        CellCase::GapNode1 { child: c1 },
                        &mut best,
                    );
                    let (s, k) = best_junction_child(&n2.children, i, false);
                    consider(
                        gamma_gap(n2, scheme) + s,
                        CellCase::GapNode2 { child: k },
                        &mut best,
                    );
                }
                (NodeKind::Helix, NodeKind::Hairpin) => {
                    let c1 = n1.children[0];
                    consider(
                        gamma_gap(n1, scheme) + score_at(c1, j),
                        CellCase::GapNode1 { child: c1 },
                        &mut best,
                    );
                }
                (NodeKind::Hairpin, NodeKind::Junction) => {
                    let (s, k) = best_junction_child(&n2.children, i, false);
                    consider(
                        gamma_gap(n2, scheme) + s,
                        CellCase::GapNode2 { child: k },
                        &mut best,
                    );
                }
                (NodeKind::Hairpin, NodeKind::Helix) => {
                    let c2 = n2.children[0];
                    consider(
                        gamma_gap(n2, scheme) + score_at(i, c2),
                        CellCase::GapNode2 { child: c2 },
                        &mut best,
                    );
                }
            }
            cells[i * cols + j] = best;
        }
    }
    Ok(ScoreTable { rows, cols, cells })
}

/// Locate the cell with the maximum score; ties break to the smallest
/// (i, j). `None` when the table is empty or all zero.
pub fn best_cell(table: &ScoreTable) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), Score)> = None;
    for i in 0..table.rows {
        for j in 0..table.cols {
            let s = table.score(i, j);
            if s > Score::ZERO && best.is_none_or(|(_, bs)| s > bs) {
                best = Some(((i, j), s));
            }
        }
    }
    best.map(|(cell, _)| cell)
}

/// One step of a node-level alignment trace.
#[derive(Debug, Clone)]
pub enum TraceStep {
    /// Two same-kind nodes matched. `parts` holds one alignment per
    /// junction loop segment (a single part for helices and hairpins);
    /// `children` holds the positional child subtraces, absent where a
    /// child pair contributed zero.
    Match {
        node1: usize,
        node2: usize,
        gamma: Score,
        parts: Vec<NodeAlignment>,
        children: Vec<Option<TraceStep>>,
    },
    /// Node of forest 1 aligned to gaps; the alignment continues between
    /// the child at `slot` and the current forest-2 subtree.
    Gap1 {
        node1: usize,
        gamma: Score,
        slot: usize,
        next: Box<TraceStep>,
    },
    /// Node of forest 2 aligned to gaps.
    Gap2 {
        node2: usize,
        gamma: Score,
        slot: usize,
        next: Box<TraceStep>,
    },
}

impl TraceStep {
    /// Recompute the subtree score from stored parts and gap terms.
    pub fn recomputed_score(&self) -> Score {
        match self {
            TraceStep::Match {
                gamma, children, ..
            } => children
                .iter()
                .flatten()
                .fold(*gamma, |acc, c| acc + c.recomputed_score()),
            TraceStep::Gap1 { gamma, next, .. } | TraceStep::Gap2 { gamma, next, .. } => {
                *gamma + next.recomputed_score()
            }
        }
    }

    /// Pre-order visit of every step.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a TraceStep)) {
        visit(self);
        match self {
            TraceStep::Match { children, .. } => {
                for child in children.iter().flatten() {
                    child.walk(visit);
                }
            }
            TraceStep::Gap1 { next, .. } | TraceStep::Gap2 { next, .. } => next.walk(visit),
        }
    }

    /// All matched (node1, node2) pairs in the trace.
    pub fn matched_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        self.walk(&mut |step| {
            if let TraceStep::Match { node1, node2, .. } = step {
                out.push((*node1, *node2));
            }
        });
        out
    }
}

/// Reconstruct the trace rooted at `cell`. `None` when the cell is zero.
pub fn backtrack(
    table: &ScoreTable,
    forest1: &StructureForest,
    forest2: &StructureForest,
    scheme: &ScoringScheme,
    cell: (usize, usize),
) -> Option<TraceStep> {
    backtrack_cell(table, forest1, forest2, scheme, cell.0, cell.1)
}

fn backtrack_cell(
    table: &ScoreTable,
    forest1: &StructureForest,
    forest2: &StructureForest,
    scheme: &ScoringScheme,
    i: usize,
    j: usize,
) -> Option<TraceStep> {
    if table.score(i, j) == Score::ZERO {
        return None;
    }
    let n1 = forest1.node(i);
    let n2 = forest2.node(j);
    match table.case(i, j) {
        CellCase::Zero => None,
        CellCase::MatchJunctions => {
            let (g, parts) = gamma_detail(forest1.structure(), n1, forest2.structure(), n2, scheme);
            let children = n1
                .children
                .iter()
                .zip(&n2.children)
                .map(|(&a, &b)| backtrack_cell(table, forest1, forest2, scheme, a, b))
                .collect();
            Some(TraceStep::Match {
                node1: i,
                node2: j,
                gamma: g,
                parts,
                children,
            })
        }
        CellCase::MatchHelices { with_child } => {
            let (g, parts) = gamma_detail(forest1.structure(), n1, forest2.structure(), n2, scheme);
            let child = with_child
                .then(|| {
                    backtrack_cell(
                        table,
                        forest1,
                        forest2,
                        scheme,
                        n1.children[0],
                        n2.children[0],
                    )
                })
                .flatten();
            Some(TraceStep::Match {
                node1: i,
                node2: j,
                gamma: g,
                parts,
                children: vec![child],
            })
        }
        CellCase::MatchHairpins => {
            let (g, parts) = gamma_detail(forest1.structure(), n1, forest2.structure(), n2, scheme);
            Some(TraceStep::Match {
                node1: i,
                node2: j,
                gamma: g,
                parts,
                children: vec![],
            })
        }
        CellCase::GapNode1 { child } => {
            let next = backtrack_cell(table, forest1, forest2, scheme, child, j)
                .expect("gap continuation cell is positive");
            let slot = n1
                .children
                .iter()
                .position(|&c| c == child)
                .expect("child slot");
            Some(TraceStep::Gap1 {
                node1: i,
                gamma: gamma_gap(n1, scheme),
                slot,
                next: Box::new(next),
            })
        }
        CellCase::GapNode2 { child } => {
            let next = backtrack_cell(table, forest1, forest2, scheme, i, child)
                .expect("gap continuation cell is positive");
            let slot = n2
                .children
                .iter()
                .position(|&c| c == child)
                .expect("child slot");
            Some(TraceStep::Gap2 {
                node2: j,
                gamma: gamma_gap(n2, scheme),
                slot,
                next: Box::new(next),
            })
        }
    }
}

/// One column of the flattened nucleotide alignment: 1-based positions
/// into each structure, `None` for gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlatColumn {
    pub pos1: Option<usize>,
    pub pos2: Option<usize>,
}

/// Nucleotide-level alignment covering exactly the nodes of the trace.
#[derive(Debug, Clone, Default)]
pub struct FlatAlignment {
    pub columns: Vec<FlatColumn>,
}

#[derive(Clone, Copy)]
enum Side {
    Five,
    Three,
}

fn helix_side(columns: &[HelixColumn], pos: usize) -> Side {
    for col in columns {
        match *col {
            HelixColumn::Base5(p) if p == pos => return Side::Five,
            HelixColumn::Base3(p) if p == pos => return Side::Three,
            _ => {}
        }
    }
    unreachable!("position {pos} is not an unpaired helix column");
}

/// Flatten a trace into nucleotide columns. Every nucleotide of every
/// matched or gapped node appears exactly once, 5'-to-3' in structure 1
/// with structure 2 consistent; unaligned subtrees are omitted.
pub fn flatten(
    trace: Option<&TraceStep>,
    forest1: &StructureForest,
    forest2: &StructureForest,
) -> FlatAlignment {
    let mut columns = Vec::new();
    if let Some(step) = trace {
        emit_step(step, forest1, forest2, &mut columns);
    }
    FlatAlignment { columns }
}

fn emit_step(
    step: &TraceStep,
    forest1: &StructureForest,
    forest2: &StructureForest,
    out: &mut Vec<FlatColumn>,
) {
    match step {
        TraceStep::Match {
            node1,
            node2,
            parts,
            children,
            ..
        } => {
            let n1 = forest1.node(*node1);
            let n2 = forest2.node(*node2);
            match (&n1.payload, &n2.payload) {
                (NodePayload::Hairpin(_), NodePayload::Hairpin(_)) => {
                    emit_loop_units(&parts[0].units, out);
                }
                (NodePayload::Helix(h1), NodePayload::Helix(h2)) => {
                    let (five, three) = split_helix_units(&parts[0].units, h1, h2);
                    out.extend(five);
                    if let Some(child) = &children[0] {
                        emit_step(child, forest1, forest2, out);
                    }
                    out.extend(three.into_iter().rev());
                }
                (NodePayload::Junction(_), NodePayload::Junction(_)) => {
                    for (k, part) in parts.iter().enumerate() {
                        emit_loop_units(&part.units, out);
                        if let Some(Some(child)) = children.get(k) {
                            emit_step(child, forest1, forest2, out);
                        }
                    }
                }
                _ => unreachable!("matched nodes have equal kinds"),
            }
        }
        TraceStep::Gap1 {
            node1, slot, next, ..
        } => {
            emit_gapped_node(forest1.node(*node1), true, *slot, out, |out| {
                emit_step(next, forest1, forest2, out)
            });
        }
        TraceStep::Gap2 {
            node2, slot, next, ..
        } => {
            emit_gapped_node(forest2.node(*node2), false, *slot, out, |out| {
                emit_step(next, forest1, forest2, out)
            });
        }
    }
}

fn col1(pos: usize) -> FlatColumn {
    FlatColumn {
        pos1: Some(pos),
        pos2: None,
    }
}

fn col2(pos: usize) -> FlatColumn {
    FlatColumn {
        pos1: None,
        pos2: Some(pos),
    }
}

fn emit_loop_units(units: &[AlignedUnit], out: &mut Vec<FlatColumn>) {
    for unit in units {
        match *unit {
            AlignedUnit::Bases(p, q) => out.push(FlatColumn {
                pos1: Some(p),
                pos2: Some(q),
            }),
            AlignedUnit::BaseGap(p) => out.push(col1(p)),
            AlignedUnit::GapBase(q) => out.push(col2(q)),
            _ => unreachable!("loop regions contain no pair columns"),
        }
    }
}

/// Split helix alignment units into the 5'-side and 3'-side column lists,
/// both in unit order (the caller reverses the 3' side on emission).
fn split_helix_units(
    units: &[AlignedUnit],
    h1: &crate::tree::HelixData,
    h2: &crate::tree::HelixData,
) -> (Vec<FlatColumn>, Vec<FlatColumn>) {
    let mut five = Vec::new();
    let mut three = Vec::new();
    for unit in units {
        match *unit {
            AlignedUnit::Pairs((x, y), (u, v)) => {
                five.push(FlatColumn {
                    pos1: Some(x),
                    pos2: Some(u),
                });
                three.push(FlatColumn {
                    pos1: Some(y),
                    pos2: Some(v),
                });
            }
            AlignedUnit::PairGap((x, y)) => {
                five.push(col1(x));
                three.push(col1(y));
            }
            AlignedUnit::GapPair((u, v)) => {
                five.push(col2(u));
                three.push(col2(v));
            }
            AlignedUnit::Bases(p, q) => {
                let col = FlatColumn {
                    pos1: Some(p),
                    pos2: Some(q),
                };
                match helix_side(&h1.columns, p) {
                    Side::Five => five.push(col),
                    Side::Three => three.push(col),
                }
            }
            AlignedUnit::BaseGap(p) => match helix_side(&h1.columns, p) {
                Side::Five => five.push(col1(p)),
                Side::Three => three.push(col1(p)),
            },
            AlignedUnit::GapBase(q) => match helix_side(&h2.columns, q) {
                Side::Five => five.push(col2(q)),
                Side::Three => three.push(col2(q)),
            },
        }
    }
    (five, three)
}

/// Emit the content of a gapped node around its continuation.
fn emit_gapped_node(
    node: &TreeNode,
    from1: bool,
    slot: usize,
    out: &mut Vec<FlatColumn>,
    emit_next: impl FnOnce(&mut Vec<FlatColumn>),
) {
    let col = |pos: usize| if from1 { col1(pos) } else { col2(pos) };
    match &node.payload {
        NodePayload::Helix(h) => {
            let mut three = Vec::new();
            for c in &h.columns {
                match *c {
                    HelixColumn::Pair(i, j) => {
                        out.push(col(i));
                        three.push(col(j));
                    }
                    HelixColumn::Base5(p) => out.push(col(p)),
                    HelixColumn::Base3(p) => three.push(col(p)),
                }
            }
            emit_next(out);
            out.extend(three.into_iter().rev());
        }
        NodePayload::Junction(j) => {
            let mut emit_next = Some(emit_next);
            for (k, seg) in j.segments.iter().enumerate() {
                for p in seg.clone() {
                    out.push(col(p));
                }
                if k == slot {
                    emit_next.take().expect("slot emitted once")(out);
                }
            }
        }
        NodePayload::Hairpin(_) => unreachable!("hairpins are never gapped around a child"),
    }
}

/// Timing and size statistics of one alignment run.
#[derive(Debug, Clone)]
pub struct AlignStats {
    pub wall_time: Duration,
    pub table_rows: usize,
    pub table_cols: usize,
}

/// A complete alignment outcome.
#[derive(Debug, Clone)]
pub struct AlignmentResult {
    /// Best-cell score; zero for the designated empty result.
    pub score: Score,
    /// Arena ids of the best cell; `None` when the table is all zero.
    pub best_cell: Option<(usize, usize)>,
    pub trace: Option<TraceStep>,
    pub flattened: FlatAlignment,
    pub stats: AlignStats,
}

/// Run the whole pipeline: fill, locate the best cell, backtrack, flatten.
pub fn align_forests(
    forest1: &StructureForest,
    forest2: &StructureForest,
    params: &AlignParams,
) -> Result<AlignmentResult, AlignError> {
    let start = Instant::now();
    let table = fill_table(forest1, forest2, params)?;
    let cell = best_cell(&table);
    let trace = cell.and_then(|c| backtrack(&table, forest1, forest2, &params.scheme, c));
    let flattened = flatten(trace.as_ref(), forest1, forest2);
    let score = cell.map_or(Score::ZERO, |(i, j)| table.score(i, j));
    Ok(AlignmentResult {
        score,
        best_cell: cell,
        trace,
        flattened,
        stats: AlignStats {
            wall_time: start.elapsed(),
            table_rows: table.rows(),
            table_cols: table.cols(),
        },
    })
}

/// Machine-readable record of one trace element.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub step: &'static str,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node2: Option<usize>,
    pub gamma: String,
    pub pos1: Vec<usize>,
    pub pos2: Vec<usize>,
}

/// Positions of a node's own nucleotides, ascending.
pub fn node_positions(node: &TreeNode) -> Vec<usize> {
    let mut out = Vec::with_capacity(node.nt_count);
    match &node.payload {
        NodePayload::Helix(h) => {
            for c in &h.columns {
                match *c {
                    HelixColumn::Pair(i, j) => out.extend([i, j]),
                    HelixColumn::Base5(p) | HelixColumn::Base3(p) => out.push(p),
                }
            }
        }
        NodePayload::Junction(j) => {
            for seg in &j.segments {
                out.extend(seg.clone());
            }
        }
        NodePayload::Hairpin(p) => out.extend(p.loop_range.clone()),
    }
    out.sort_unstable();
    out
}

/// Flatten the trace into per-element records (pre-order).
pub fn trace_records(
    result: &AlignmentResult,
    forest1: &StructureForest,
    forest2: &StructureForest,
) -> Vec<TraceRecord> {
    let mut records = Vec::new();
    if let Some(trace) = &result.trace {
        trace.walk(&mut |step| match step {
            TraceStep::Match {
                node1,
                node2,
                gamma,
                ..
            } => records.push(TraceRecord {
                step: "match",
                kind: forest1.node(*node1).kind().to_string(),
                node1: Some(node1 + 1),
                node2: Some(node2 + 1),
                gamma: gamma.to_string(),
                pos1: node_positions(forest1.node(*node1)),
                pos2: node_positions(forest2.node(*node2)),
            }),
            TraceStep::Gap1 { node1, gamma, .. } => records.push(TraceRecord {
                step: "gap1",
                kind: forest1.node(*node1).kind().to_string(),
                node1: Some(node1 + 1),
                node2: None,
                gamma: gamma.to_string(),
                pos1: node_positions(forest1.node(*node1)),
                pos2: Vec::new(),
            }),
            TraceStep::Gap2 { node2, gamma, .. } => records.push(TraceRecord {
                step: "gap2",
                kind: forest2.node(*node2).kind().to_string(),
                node1: None,
                node2: Some(node2 + 1),
                gamma: gamma.to_string(),
                pos1: Vec::new(),
                pos2: node_positions(forest2.node(*node2)),
            }),
        });
    }
    records
}

fn bracket_char(partner_table: &[usize], pos: usize) -> char {
    match partner_table[pos] {
        0 => '.',
        p if p > pos => '(',
        _ => ')',
    }
}

/// Render the flattened alignment as five text rows wrapped in blocks:
/// structure-1 brackets, structure-1 bases, relation markers, structure-2
/// bases, structure-2 brackets.
pub fn render_alignment_text(
    flat: &FlatAlignment,
    ss1: &SecondaryStructure,
    ss2: &SecondaryStructure,
    width: usize,
) -> String {
    if flat.columns.is_empty() {
        return "(empty alignment)\n".to_string();
    }
    let t1 = ss1.partner_table();
    let t2 = ss2.partner_table();
    let mut out = String::new();
    for (block_idx, block) in flat.columns.chunks(width).enumerate() {
        if block_idx > 0 {
            out.push('\n');
        }
        let mut row_str1 = String::new();
        let mut row_seq1 = String::new();
        let mut row_mark = String::new();
        let mut row_seq2 = String::new();
        let mut row_str2 = String::new();
        let mut first1 = None;
        let mut last1 = None;
        let mut first2 = None;
        let mut last2 = None;
        for col in block {
            match col.pos1 {
                Some(p) => {
                    row_str1.push(bracket_char(&t1, p));
                    row_seq1.push(ss1.base(p).to_char());
                    first1.get_or_insert(p);
                    last1 = Some(p);
                }
                None => {
                    row_str1.push('-');
                    row_seq1.push('-');
                }
            }
            match col.pos2 {
                Some(p) => {
                    row_str2.push(bracket_char(&t2, p));
                    row_seq2.push(ss2.base(p).to_char());
                    first2.get_or_insert(p);
                    last2 = Some(p);
                }
                None => {
                    row_str2.push('-');
                    row_seq2.push('-');
                }
            }
            row_mark.push(match (col.pos1, col.pos2) {
                (Some(p), Some(q)) if ss1.base(p) == ss2.base(q) => '|',
                (Some(_), Some(_)) => ':',
                _ => ' ',
            });
        }
        let coord = |v: Option<usize>| v.map_or("-".to_string(), |p| p.to_string());
        out.push_str(&format!("s1 str        {row_str1}\n"));
        out.push_str(&format!(
            "s1 seq {:>6} {row_seq1} {}\n",
            coord(first1),
            coord(last1)
        ));
        out.push_str(&format!("              {row_mark}\n"));
        out.push_str(&format!(
            "s2 seq {:>6} {row_seq2} {}\n",
            coord(first2),
            coord(last2)
        ));
        out.push_str(&format!("s2 str        {row_str2}\n"));
    }
    out
}

/// Human-readable report: timing, score, node-level trace, nucleotide
/// alignment blocks.
pub fn render_text_report(
    result: &AlignmentResult,
    forest1: &StructureForest,
    forest2: &StructureForest,
    label1: &str,
    label2: &str,
    scheme: &ScoringScheme,
) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "input 1: {} ({} nt, {} nodes)\n",
        label1,
        forest1.structure().len(),
        forest1.node_count()
    ));
    out.push_str(&format!(
        "input 2: {} ({} nt, {} nodes)\n",
        label2,
        forest2.structure().len(),
        forest2.node_count()
    ));
    out.push_str(&format!(
        "scheme: {}  gap: {}  weight: {}\n",
        scheme.name(),
        scheme.gap,
        scheme.weight
    ));
    out.push_str(&format!(
        "CPU time: {:.6} seconds\n",
        result.stats.wall_time.as_secs_f64()
    ));
    out.push_str(&format!("alignment score: {}\n", result.score));
    match result.best_cell {
        Some((i, j)) => out.push_str(&format!("best cell: t1[{}] ~ t2[{}]\n", i + 1, j + 1)),
        None => out.push_str("best cell: none (all-zero table)\n"),
    }
    out.push_str("\nalignment details:\n");
    for record in trace_records(result, forest1, forest2) {
        match record.step {
            "match" => out.push_str(&format!(
                "  match {} t1[{}] ~ t2[{}]  gamma={}\n",
                record.kind,
                record.node1.unwrap(),
                record.node2.unwrap(),
                record.gamma
            )),
            "gap1" => out.push_str(&format!(
                "  gap   {} t1[{}] ~ -  gamma={}\n",
                record.kind,
                record.node1.unwrap(),
                record.gamma
            )),
            _ => out.push_str(&format!(
                "  gap   {} - ~ t2[{}]  gamma={}\n",
                record.kind,
                record.node2.unwrap(),
                record.gamma
            )),
        }
    }
    out.push('\n');
    out.push_str(&render_alignment_text(
        &result.flattened,
        forest1.structure(),
        forest2.structure(),
        60,
    ));
    out
}

/// Deterministic machine-readable report (no timing).
#[derive(Debug, Clone, Serialize)]
pub struct MachineReport {
    pub score: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_cell: Option<(usize, usize)>,
    pub table: (usize, usize),
    pub trace: Vec<TraceRecord>,
    pub alignment: Vec<FlatColumn>,
}

pub fn machine_report(
    result: &AlignmentResult,
    forest1: &StructureForest,
    forest2: &StructureForest,
) -> MachineReport {
    MachineReport {
        score: result.score.to_string(),
        best_cell: result.best_cell.map(|(i, j)| (i + 1, j + 1)),
        table: (result.stats.table_rows, result.stats.table_cols),
        trace: trace_records(result, forest1, forest2),
        alignment: result.flattened.columns.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::parse_dotbracket;
    use crate::tree::parse_annotations;

    pub const FX1_SEQ: &str = "GCAGCAAAGCAGCAAAGCAGC";
    pub const FX1_STRUCT: &str = "((.((...)).((...)).))";

    fn fx1(annot: &str) -> StructureForest {
        let ss = parse_dotbracket(FX1_SEQ, FX1_STRUCT).unwrap();
        let mut forest = StructureForest::build(&ss);
        parse_annotations(annot, &mut forest).unwrap();
        forest
    }

    fn unit_params() -> AlignParams {
        AlignParams::new(ScoringScheme::unit())
    }

    #[test]
    fn fx1_self_alignment_scores_121() {
        let f = fx1("junction 1 3-way H1H3\n");
        let result = align_forests(&f, &f, &unit_params()).unwrap();
        assert_eq!(result.score, Score::from_int(121));
        assert_eq!(result.best_cell, Some((5, 5)));
    }

    #[test]
    fn fx1_unstacked_self_alignment_scores_71() {
        let f = fx1("junction 1 3-way none\n");
        let result = align_forests(&f, &f, &unit_params()).unwrap();
        assert_eq!(result.score, Score::from_int(71));
    }

    #[test]
    fn fx1_mismatched_status_scores_7() {
        let a = fx1("junction 1 3-way H1H3\n");
        let b = fx1("junction 1 3-way H1H2\n");
        let result = align_forests(&a, &b, &unit_params()).unwrap();
        assert_eq!(result.score, Score::from_int(7));
        assert_eq!(result.best_cell, Some((1, 1)));
    }

    #[test]
    fn fx1_trace_matches_all_nodes() {
        let f = fx1("junction 1 3-way H1H3\n");
        let result = align_forests(&f, &f, &unit_params()).unwrap();
        let trace = result.trace.as_ref().unwrap();
        let pairs = trace.matched_pairs();
        assert_eq!(pairs.len(), 6);
        assert!(pairs.iter().all(|&(a, b)| a == b));
        assert_eq!(trace.recomputed_score(), result.score);
        // Identity alignment over all 21 nucleotides, no gap columns.
        assert_eq!(result.flattened.columns.len(), 21);
        assert!(result.flattened.columns.iter().all(|c| c.pos1 == c.pos2));
    }

    #[test]
    fn fx1_extra_hairpin_base_creates_one_gap_column() {
        let a = fx1("junction 1 3-way H1H3\n");
        let ss_b = parse_dotbracket("GCAGCAAAAGCAGCAAAGCAGC", "((.((....)).((...)).))").unwrap();
        let mut b = StructureForest::build(&ss_b);
        parse_annotations("junction 1 3-way H1H3\n", &mut b).unwrap();
        let result = align_forests(&a, &b, &unit_params()).unwrap();
        let gaps: Vec<_> = result
            .flattened
            .columns
            .iter()
            .filter(|c| c.pos1.is_none() || c.pos2.is_none())
            .collect();
        assert_eq!(gaps.len(), 1);
        assert_eq!(gaps[0].pos1, None);
        // The gap lands inside the enlarged hairpin loop (positions 6..9).
        assert!((6..=9).contains(&gaps[0].pos2.unwrap()));
    }

    #[test]
    fn all_mismatch_pair_yields_empty_result() {
        // Hairpin stems whose pairs and loops never match positively.
        let a_ss = parse_dotbracket("GCAAAGC", "((...))").unwrap();
        let b_ss = parse_dotbracket("AUCCCAU", "((...))").unwrap();
        let a = StructureForest::build(&a_ss);
        let b = StructureForest::build(&b_ss);
        let result = align_forests(&a, &b, &unit_params()).unwrap();
        assert_eq!(result.score, Score::ZERO);
        assert!(result.best_cell.is_none());
        assert!(result.trace.is_none());
        assert!(result.flattened.columns.is_empty());
    }

    #[test]
    fn zero_floor_everywhere() {
        let a = fx1("junction 1 3-way H1H3\n");
        let b = fx1("junction 1 3-way H1H2\n");
        let table = fill_table(&a, &b, &unit_params()).unwrap();
        for i in 0..table.rows() {
            for j in 0..table.cols() {
                assert!(table.score(i, j) >= Score::ZERO);
            }
        }
    }

    #[test]
    fn unannotated_junction_is_an_error() {
        let ss = parse_dotbracket(FX1_SEQ, FX1_STRUCT).unwrap();
        let f = StructureForest::build(&ss);
        assert!(matches!(
            fill_table(&f, &f, &unit_params()),
            Err(AlignError::UnannotatedJunction { .. })
        ));
    }

    /// Plain stem with a long loop; pairs all G-C.
    fn deep_stem() -> StructureForest {
        let ss = parse_dotbracket(
            "GGGGGGGGGGAAAAAAAAAAAACCCCCCCCCC",
            "((((((((((............))))))))))",
        )
        .unwrap();
        StructureForest::build(&ss)
    }

    /// Same outer stem, but a junction with two weak one-pair branches
    /// sits between the stem and the long loops.
    fn stem_over_junction() -> StructureForest {
        let ss = parse_dotbracket(
            "GGGGGGGGGGAAAAAAAAAAAAAAUAAAAAAAAAAAAAAUACCCCCCCCCC",
            "((((((((((.(............).(............).))))))))))",
        )
        .unwrap();
        let mut forest = StructureForest::build(&ss);
        parse_annotations("junction 1 3-way none\n", &mut forest).unwrap();
        forest
    }

    #[test]
    fn skip_chain_pays_under_a_matched_stem() {
        // Matching the strong outer stems (+20) makes it worth gapping
        // the junction (-3) and one branch helix (-2) to reach the long
        // loop match (+12): 20 - 3 - 2 + 12 = 27.
        let a = deep_stem();
        let b = stem_over_junction();
        let result = align_forests(&a, &b, &unit_params()).unwrap();
        assert_eq!(result.score, Score::from_int(27));
        let trace = result.trace.as_ref().unwrap();
        let mut skipped_junction = false;
        let mut skipped_helix = false;
        trace.walk(&mut |s| {
            if let TraceStep::Gap2 { node2, .. } = s {
                match b.node(*node2).kind() {
                    NodeKind::Junction => skipped_junction = true,
                    NodeKind::Helix => skipped_helix = true,
                    NodeKind::Hairpin => {}
                }
            }
        });
        assert!(skipped_junction && skipped_helix);
        assert_eq!(trace.recomputed_score(), result.score);

        // Mirrored inputs exercise the gap-node-1 forms of the same
        // recurrences and give the same score.
        let mirrored = align_forests(&b, &a, &unit_params()).unwrap();
        assert_eq!(mirrored.score, Score::from_int(27));
        let mut saw_gap1 = 0;
        mirrored.trace.as_ref().unwrap().walk(&mut |s| {
            if matches!(s, TraceStep::Gap1 { .. }) {
                saw_gap1 += 1;
            }
        });
        assert_eq!(saw_gap1, 2);
    }

    #[test]
    fn skipped_nodes_flatten_as_gap_columns() {
        let a = deep_stem();
        let b = stem_over_junction();
        let result = align_forests(&a, &b, &unit_params()).unwrap();
        let cols = &result.flattened.columns;
        // 10 stem columns either side, 12 loop matches, and 5 gapped
        // nucleotides (three segments plus one branch pair).
        assert_eq!(cols.len(), 37);
        let gapped2: Vec<usize> = cols
            .iter()
            .filter(|c| c.pos1.is_none())
            .map(|c| c.pos2.unwrap())
            .collect();
        assert_eq!(gapped2, vec![11, 12, 25, 26, 41]);
        // The unmatched second branch (positions 27..40) is omitted.
        assert!(cols
            .iter()
            .filter_map(|c| c.pos2)
            .all(|p| !(27..=40).contains(&p)));
    }

    #[test]
    fn junction_versus_helix_cell_follows_case_six() {
        // Cell (J1 of FX1, stem helix): skipping the helix strands the
        // junction (gated descendants), so skipping the junction and
        // aligning its best branch wins: -3 + (2 + 3) = 2.
        let a = fx1("junction 1 3-way H1H3\n");
        let b_ss = parse_dotbracket("GCGAAACGC", "(((...)))").unwrap();
        let b = StructureForest::build(&b_ss);
        let table = fill_table(&a, &b, &unit_params()).unwrap();
        assert_eq!(table.score(4, 1), Score::from_int(2));
        assert!(matches!(table.case(4, 1), CellCase::GapNode1 { child: 1 }));
        // Mirrored: helix versus junction takes the symmetric branch.
        let table2 = fill_table(&b, &a, &unit_params()).unwrap();
        assert_eq!(table2.score(1, 4), Score::from_int(2));
        assert!(matches!(table2.case(1, 4), CellCase::GapNode2 { child: 1 }));
    }

    #[test]
    fn flattened_positions_are_monotone() {
        let a = fx1("junction 1 3-way H1H3\n");
        let b = fx1("junction 1 3-way none\n");
        for (x, y) in [(&a, &a), (&a, &b)] {
            let result = align_forests(x, y, &unit_params()).unwrap();
            let mut prev1 = 0;
            let mut prev2 = 0;
            for col in &result.flattened.columns {
                if let Some(p) = col.pos1 {
                    assert!(p > prev1);
                    prev1 = p;
                }
                if let Some(p) = col.pos2 {
                    assert!(p > prev2);
                    prev2 = p;
                }
            }
        }
    }
}
