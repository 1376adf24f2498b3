//! Element-level scoring: substitution schemes and the per-kind dynamic
//! programs computing node-versus-node and node-versus-gap scores.
//!
//! Scores within a node come from a global alignment of the node contents:
//! hairpin loops and junction loop segments align base by base, helices
//! align column by column (pair columns use the 16x16 matrix, absorbed
//! loop/bulge bases use the 4x4 matrix and may only align across like
//! strand sides). Matching a node against the empty node costs the gap
//! penalty per nucleotide.

use std::ops::Range;

use thiserror::Error;

use crate::score::{Score, ScoreParseError};
use crate::structure::{Base, SecondaryStructure};
use crate::tree::{HelixColumn, HelixData, JunctionData, NodePayload, TreeNode};

/// Built-in RIBOSUM85-60 scheme data.
const RIBOSUM85_60_TEXT: &str = include_str!("../assets/ribosum85-60.mat");

/// Substitution scores plus gap penalty and junction match weight.
#[derive(Debug, Clone)]
pub struct ScoringScheme {
    name: String,
    single: [[Score; 4]; 4],
    pair16: [[Score; 16]; 16],
    /// Per-nucleotide gap penalty g (negative).
    pub gap: Score,
    /// Junction match weight w (non-negative, halvable).
    pub weight: Score,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("line {line}: {source}")]
    BadNumber {
        line: usize,
        source: ScoreParseError,
    },
    #[error("line {line}: expected {expected} scores, found {found}")]
    WrongColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unexpected content {text:?}")]
    Syntax { line: usize, text: String },
    #[error("missing section {0:?}")]
    MissingSection(&'static str),
    #[error("matrix declared symmetric but {matrix}[{i}][{j}] != {matrix}[{j}][{i}]")]
    Asymmetric {
        matrix: &'static str,
        i: usize,
        j: usize,
    },
    #[error("gap penalty must be negative, got {0}")]
    NonNegativeGap(Score),
    #[error("junction weight must be non-negative, got {0}")]
    NegativeWeight(Score),
    #[error("junction weight must be exactly halvable (an even count of 1/10000 units)")]
    UnhalvableWeight,
    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),
}

impl ScoringScheme {
    /// Test scheme: base match +1 / mismatch -1, pair match +2 /
    /// mismatch -2, gap -1, weight 100.
    pub fn unit() -> ScoringScheme {
        let one = Score::from_int(1);
        let two = Score::from_int(2);
        let mut single = [[-one; 4]; 4];
        let mut pair16 = [[-two; 16]; 16];
        for (i, row) in single.iter_mut().enumerate() {
            row[i] = one;
        }
        for (i, row) in pair16.iter_mut().enumerate() {
            row[i] = two;
        }
        ScoringScheme {
            name: "unit".to_string(),
            single,
            pair16,
            gap: -one,
            weight: Score::from_int(100),
        }
    }

    /// The bundled RIBOSUM85-60 scheme.
    pub fn ribosum85_60() -> ScoringScheme {
        ScoringScheme::from_file_text(RIBOSUM85_60_TEXT).expect("bundled ribosum85-60 asset parses")
    }

    /// Resolve a built-in scheme by name.
    pub fn builtin(name: &str) -> Result<ScoringScheme, SchemeError> {
        match name {
            "unit" => Ok(ScoringScheme::unit()),
            "ribosum85-60" => Ok(ScoringScheme::ribosum85_60()),
            other => Err(SchemeError::UnknownScheme(other.to_string())),
        }
    }

    /// Raw text of the bundled RIBOSUM85-60 asset.
    pub fn ribosum85_60_asset() -> &'static str {
        RIBOSUM85_60_TEXT
    }

    /// Parse the scheme file format: optional `name <id>` and `asymmetric`
    /// directives, a `single` section with 4 rows of 4 scores, a `pair`
    /// section with 16 rows of 16 scores (AA..UU order), then
    /// `gap <g>` and `weight <w>` lines. `#` starts a comment.
    pub fn from_file_text(text: &str) -> Result<ScoringScheme, SchemeError> {
        let mut name = "custom".to_string();
        let mut symmetric = true;
        let mut single: Option<[[Score; 4]; 4]> = None;
        let mut pair16: Option<[[Score; 16]; 16]> = None;
        let mut gap: Option<Score> = None;
        let mut weight: Option<Score> = None;

        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, raw)| (n + 1, raw.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        fn parse_row(line: usize, text: &str, expected: usize) -> Result<Vec<Score>, SchemeError> {
            let fields: Vec<&str> = text.split_whitespace().collect();
            if fields.len() != expected {
                return Err(SchemeError::WrongColumnCount {
                    line,
                    expected,
                    found: fields.len(),
                });
            }
            fields
                .iter()
                .map(|f| Score::parse(f).map_err(|source| SchemeError::BadNumber { line, source }))
                .collect()
        }

        while let Some((lineno, line)) = lines.next() {
            if let Some(rest) = line.strip_prefix("name ") {
                name = rest.trim().to_string();
            } else if line == "asymmetric" {
                symmetric = false;
            } else if line == "single" {
                let mut m = [[Score::ZERO; 4]; 4];
                for row in &mut m {
                    let (lineno, line) =
                        lines.next().ok_or(SchemeError::MissingSection("single"))?;
                    let values = parse_row(lineno, line, 4)?;
                    row.copy_from_slice(&values);
                }
                single = Some(m);
            } else if line == "pair" {
                let mut m = [[Score::ZERO; 16]; 16];
                for row in &mut m {
                    let (lineno, line) = lines.next().ok_or(SchemeError::MissingSection("pair"))?;
                    let values = parse_row(lineno, line, 16)?;
                    row.copy_from_slice(&values);
                }
                pair16 = Some(m);
            } else if let Some(rest) = line.strip_prefix("gap ") {
                gap = Some(Score::parse(rest).map_err(|source| SchemeError::BadNumber {
                    line: lineno,
                    source,
                })?);
            } else if let Some(rest) = line.strip_prefix("weight ") {
                weight = Some(Score::parse(rest).map_err(|source| SchemeError::BadNumber {
                    line: lineno,
                    source,
                })?);
            } else {
                return Err(SchemeError::Syntax {
                    line: lineno,
                    text: line.to_string(),
                });
            }
        }

        let single = single.ok_or(SchemeError::MissingSection("single"))?;
        let pair16 = pair16.ok_or(SchemeError::MissingSection("pair"))?;
        let gap = gap.ok_or(SchemeError::MissingSection("gap"))?;
        let weight = weight.ok_or(SchemeError::MissingSection("weight"))?;

        if symmetric {
            for (i, row) in single.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if v != single[j][i] {
                        return Err(SchemeError::Asymmetric {
                            matrix: "single",
                            i,
                            j,
                        });
                    }
                }
            }
            for (i, row) in pair16.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if v != pair16[j][i] {
                        return Err(SchemeError::Asymmetric {
                            matrix: "pair",
                            i,
                            j,
                        });
                    }
                }
            }
        }
        if gap >= Score::ZERO {
            return Err(SchemeError::NonNegativeGap(gap));
        }
        if weight < Score::ZERO {
            return Err(SchemeError::NegativeWeight(weight));
        }
        if weight.raw() % 2 != 0 {
            return Err(SchemeError::UnhalvableWeight);
        }

        Ok(ScoringScheme {
            name,
            single,
            pair16,
            gap,
            weight,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_gap(mut self, gap: Score) -> Result<ScoringScheme, SchemeError> {
        if gap >= Score::ZERO {
            return Err(SchemeError::NonNegativeGap(gap));
        }
        self.gap = gap;
        Ok(self)
    }

    pub fn with_weight(mut self, weight: Score) -> Result<ScoringScheme, SchemeError> {
        if weight < Score::ZERO {
            return Err(SchemeError::NegativeWeight(weight));
        }
        if weight.raw() % 2 != 0 {
            return Err(SchemeError::UnhalvableWeight);
        }
        self.weight = weight;
        Ok(self)
    }

    /// Single-base substitution score. `N` scores as the worst entry of
    /// the relevant row (globally worst when both bases are `N`).
    pub fn single_score(&self, a: Base, b: Base) -> Score {
        match (a.index(), b.index()) {
            (Some(i), Some(j)) => self.single[i][j],
            (Some(i), None) => row_min(&self.single[i]),
            (None, Some(j)) => (0..4).map(|i| self.single[i][j]).min().unwrap(),
            (None, None) => (0..4)
                .flat_map(|i| self.single[i].iter().copied())
                .min()
                .unwrap(),
        }
    }

    /// Base-pair substitution score in AA..UU indexing; any `N` falls back
    /// to the worst entry of the known side's row or column.
    pub fn pair_score(&self, p1: (Base, Base), p2: (Base, Base)) -> Score {
        match (pair_index(p1), pair_index(p2)) {
            (Some(i), Some(j)) => self.pair16[i][j],
            (Some(i), None) => row_min(&self.pair16[i]),
            (None, Some(j)) => (0..16).map(|i| self.pair16[i][j]).min().unwrap(),
            (None, None) => (0..16)
                .flat_map(|i| self.pair16[i].iter().copied())
                .min()
                .unwrap(),
        }
    }
}

fn row_min<const N: usize>(row: &[Score; N]) -> Score {
    row.iter().copied().min().unwrap()
}

fn pair_index((a, b): (Base, Base)) -> Option<usize> {
    Some(a.index()? * 4 + b.index()?)
}

/// One aligned unit of a node-level alignment, carrying 1-based positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignedUnit {
    /// Base of structure 1 aligned with base of structure 2.
    Bases(usize, usize),
    /// Base of structure 1 aligned to a gap.
    BaseGap(usize),
    /// Gap aligned to a base of structure 2.
    GapBase(usize),
    /// Pair column aligned with pair column.
    Pairs((usize, usize), (usize, usize)),
    /// Pair column of structure 1 aligned to gaps.
    PairGap((usize, usize)),
    /// Gaps aligned to a pair column of structure 2.
    GapPair((usize, usize)),
}

/// A node-versus-node alignment: total score plus the ordered unit list.
/// Units cover every nucleotide of both nodes exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeAlignment {
    pub score: Score,
    pub units: Vec<AlignedUnit>,
}

impl NodeAlignment {
    pub fn empty() -> NodeAlignment {
        NodeAlignment {
            score: Score::ZERO,
            units: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    Start,
    Diag,
    Up,
    Left,
}

/// Global alignment score with linear per-item gap costs. `sub` may return
/// the minus-infinity sentinel to forbid a substitution.
fn nw_score(
    n: usize,
    m: usize,
    sub: impl Fn(usize, usize) -> Score,
    gap_a: impl Fn(usize) -> Score,
    gap_b: impl Fn(usize) -> Score,
) -> Score {
    let mut prev: Vec<Score> = Vec::with_capacity(m + 1);
    prev.push(Score::ZERO);
    for j in 0..m {
        let v = prev[j] + gap_b(j);
        prev.push(v);
    }
    let mut cur = vec![Score::ZERO; m + 1];
    for i in 0..n {
        cur[0] = prev[0] + gap_a(i);
        for j in 0..m {
            let diag = prev[j] + sub(i, j);
            let up = prev[j + 1] + gap_a(i);
            let left = cur[j] + gap_b(j);
            cur[j + 1] = diag.max(up).max(left);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// One traceback step: indices consumed from each input, `None` on gaps.
type StepList = Vec<(Option<usize>, Option<usize>)>;

/// Global alignment with traceback. Ties resolve diagonal, then up
/// (item of `a` to gap), then left (gap to item of `b`).
fn nw_trace(
    n: usize,
    m: usize,
    sub: impl Fn(usize, usize) -> Score,
    gap_a: impl Fn(usize) -> Score,
    gap_b: impl Fn(usize) -> Score,
) -> (Score, StepList) {
    let width = m + 1;
    let mut score = vec![Score::ZERO; (n + 1) * width];
    let mut dir = vec![Dir::Start; (n + 1) * width];
    for j in 0..m {
        score[j + 1] = score[j] + gap_b(j);
        dir[j + 1] = Dir::Left;
    }
    for i in 0..n {
        score[(i + 1) * width] = score[i * width] + gap_a(i);
        dir[(i + 1) * width] = Dir::Up;
        for j in 0..m {
            let diag = score[i * width + j] + sub(i, j);
            let up = score[i * width + j + 1] + gap_a(i);
            let left = score[(i + 1) * width + j] + gap_b(j);
            let (best, d) = if diag >= up && diag >= left {
                (diag, Dir::Diag)
            } else if up >= left {
                (up, Dir::Up)
            } else {
                (left, Dir::Left)
            };
            score[(i + 1) * width + j + 1] = best;
            dir[(i + 1) * width + j + 1] = d;
        }
    }
    let mut steps = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match dir[i * width + j] {
            Dir::Diag => {
                i -= 1;
                j -= 1;
                steps.push((Some(i), Some(j)));
            }
            Dir::Up => {
                i -= 1;
                steps.push((Some(i), None));
            }
            Dir::Left => {
                j -= 1;
                steps.push((None, Some(j)));
            }
            Dir::Start => unreachable!("traceback escaped the table"),
        }
    }
    steps.reverse();
    (score[n * width + m], steps)
}

/// Positions and bases of a loop region.
fn segment_items(ss: &SecondaryStructure, range: &Range<usize>) -> Vec<(usize, Base)> {
    range.clone().map(|p| (p, ss.base(p))).collect()
}

/// Optimal global alignment of two base lists under the single-base matrix
/// and per-base gap penalty.
pub fn align_segment(
    a: &[(usize, Base)],
    b: &[(usize, Base)],
    scheme: &ScoringScheme,
) -> NodeAlignment {
    let (score, steps) = nw_trace(
        a.len(),
        b.len(),
        |i, j| scheme.single_score(a[i].1, b[j].1),
        |_| scheme.gap,
        |_| scheme.gap,
    );
    let units = steps
        .into_iter()
        .map(|step| match step {
            (Some(i), Some(j)) => AlignedUnit::Bases(a[i].0, b[j].0),
            (Some(i), None) => AlignedUnit::BaseGap(a[i].0),
            (None, Some(j)) => AlignedUnit::GapBase(b[j].0),
            (None, None) => unreachable!(),
        })
        .collect();
    NodeAlignment { score, units }
}

/// Score-only variant of [`align_segment`].
pub fn align_segment_score(
    a: &[(usize, Base)],
    b: &[(usize, Base)],
    scheme: &ScoringScheme,
) -> Score {
    nw_score(
        a.len(),
        b.len(),
        |i, j| scheme.single_score(a[i].1, b[j].1),
        |_| scheme.gap,
        |_| scheme.gap,
    )
}

fn helix_sub(
    ss1: &SecondaryStructure,
    ss2: &SecondaryStructure,
    scheme: &ScoringScheme,
    c1: HelixColumn,
    c2: HelixColumn,
) -> Score {
    match (c1, c2) {
        (HelixColumn::Pair(i1, j1), HelixColumn::Pair(i2, j2)) => {
            scheme.pair_score((ss1.base(i1), ss1.base(j1)), (ss2.base(i2), ss2.base(j2)))
        }
        (HelixColumn::Base5(p), HelixColumn::Base5(q))
        | (HelixColumn::Base3(p), HelixColumn::Base3(q)) => {
            scheme.single_score(ss1.base(p), ss2.base(q))
        }
        // Pair against base, or bases on opposite strand sides: forbidden.
        _ => Score::NEG_INF,
    }
}

/// Optimal global alignment of two helices over their column lists.
pub fn gamma_helix(
    ss1: &SecondaryStructure,
    h1: &HelixData,
    ss2: &SecondaryStructure,
    h2: &HelixData,
    scheme: &ScoringScheme,
) -> NodeAlignment {
    let a = &h1.columns;
    let b = &h2.columns;
    let (score, steps) = nw_trace(
        a.len(),
        b.len(),
        |i, j| helix_sub(ss1, ss2, scheme, a[i], b[j]),
        |i| scheme.gap.times(a[i].nt_count()),
        |j| scheme.gap.times(b[j].nt_count()),
    );
    let units = steps
        .into_iter()
        .map(|step| match step {
            (Some(i), Some(j)) => match (a[i], b[j]) {
                (HelixColumn::Pair(x, y), HelixColumn::Pair(u, v)) => {
                    AlignedUnit::Pairs((x, y), (u, v))
                }
                (
                    HelixColumn::Base5(p) | HelixColumn::Base3(p),
                    HelixColumn::Base5(q) | HelixColumn::Base3(q),
                ) => AlignedUnit::Bases(p, q),
                _ => unreachable!("forbidden column match in traceback"),
            },
            (Some(i), None) => match a[i] {
                HelixColumn::Pair(x, y) => AlignedUnit::PairGap((x, y)),
                HelixColumn::Base5(p) | HelixColumn::Base3(p) => AlignedUnit::BaseGap(p),
            },
            (None, Some(j)) => match b[j] {
                HelixColumn::Pair(u, v) => AlignedUnit::GapPair((u, v)),
                HelixColumn::Base5(q) | HelixColumn::Base3(q) => AlignedUnit::GapBase(q),
            },
            (None, None) => unreachable!(),
        })
        .collect();
    NodeAlignment { score, units }
}

pub fn gamma_helix_score(
    ss1: &SecondaryStructure,
    h1: &HelixData,
    ss2: &SecondaryStructure,
    h2: &HelixData,
    scheme: &ScoringScheme,
) -> Score {
    let a = &h1.columns;
    let b = &h2.columns;
    nw_score(
        a.len(),
        b.len(),
        |i, j| helix_sub(ss1, ss2, scheme, a[i], b[j]),
        |i| scheme.gap.times(a[i].nt_count()),
        |j| scheme.gap.times(b[j].nt_count()),
    )
}

/// Per-segment alignments of two junctions of equal degree. Segments
/// correspond positionally; the summed score is the value `s` that the
/// junction match score builds on.
pub fn gamma_junction_parts(
    ss1: &SecondaryStructure,
    j1: &JunctionData,
    ss2: &SecondaryStructure,
    j2: &JunctionData,
    scheme: &ScoringScheme,
) -> Vec<NodeAlignment> {
    assert_eq!(j1.degree(), j2.degree(), "junction degrees must match");
    j1.segments
        .iter()
        .zip(&j2.segments)
        .map(|(r1, r2)| align_segment(&segment_items(ss1, r1), &segment_items(ss2, r2), scheme))
        .collect()
}

/// Loop-region alignment score `s` of two junctions of equal degree.
pub fn gamma_junction(
    ss1: &SecondaryStructure,
    j1: &JunctionData,
    ss2: &SecondaryStructure,
    j2: &JunctionData,
    scheme: &ScoringScheme,
) -> NodeAlignment {
    let parts = gamma_junction_parts(ss1, j1, ss2, j2, scheme);
    let mut score = Score::ZERO;
    let mut units = Vec::new();
    for part in parts {
        score += part.score;
        units.extend(part.units);
    }
    NodeAlignment { score, units }
}

fn gamma_junction_score(
    ss1: &SecondaryStructure,
    j1: &JunctionData,
    ss2: &SecondaryStructure,
    j2: &JunctionData,
    scheme: &ScoringScheme,
) -> Score {
    j1.segments
        .iter()
        .zip(&j2.segments)
        .map(|(r1, r2)| {
            align_segment_score(&segment_items(ss1, r1), &segment_items(ss2, r2), scheme)
        })
        .fold(Score::ZERO, |acc, s| acc + s)
}

/// Junction match score including the weight term: `s + w` when both
/// junctions stack, `s + w/2` when neither does. Signatures must be equal.
fn junction_match_score(
    s: Score,
    j1: &JunctionData,
    j2: &JunctionData,
    scheme: &ScoringScheme,
) -> Score {
    let st1 = j1.status.as_ref().expect("junction 1 annotated");
    let st2 = j2.status.as_ref().expect("junction 2 annotated");
    debug_assert_eq!(
        st1.is_stacked(),
        st2.is_stacked(),
        "equal signatures agree on stacking"
    );
    if st1.is_stacked() && st2.is_stacked() {
        s + scheme.weight
    } else {
        s + scheme.weight.half()
    }
}

fn psi_equal(j1: &JunctionData, j2: &JunctionData) -> bool {
    let st1 = j1.status.as_ref().expect("junction 1 annotated");
    let st2 = j2.status.as_ref().expect("junction 2 annotated");
    j1.degree() == j2.degree() && st1.stacked() == st2.stacked()
}

/// Node-versus-node score dispatcher.
///
/// Same-kind nodes score by their per-kind alignment; junction pairs are
/// additionally gated on signature equality (minus infinity otherwise) and
/// weighted. Nodes of different kinds are prohibited from aligning and
/// score minus infinity.
pub fn gamma(
    ss1: &SecondaryStructure,
    n1: &TreeNode,
    ss2: &SecondaryStructure,
    n2: &TreeNode,
    scheme: &ScoringScheme,
) -> Score {
    match (&n1.payload, &n2.payload) {
        (NodePayload::Hairpin(p1), NodePayload::Hairpin(p2)) => align_segment_score(
            &segment_items(ss1, &p1.loop_range),
            &segment_items(ss2, &p2.loop_range),
            scheme,
        ),
        (NodePayload::Helix(h1), NodePayload::Helix(h2)) => {
            gamma_helix_score(ss1, h1, ss2, h2, scheme)
        }
        (NodePayload::Junction(j1), NodePayload::Junction(j2)) => {
            if !psi_equal(j1, j2) {
                return Score::NEG_INF;
            }
            let s = gamma_junction_score(ss1, j1, ss2, j2, scheme);
            junction_match_score(s, j1, j2, scheme)
        }
        _ => Score::NEG_INF,
    }
}

/// Detailed variant of [`gamma`] for traceback: the full score plus the
/// per-part alignments (one part per junction segment, otherwise one).
/// Must only be called on same-kind, gate-passing node pairs.
pub fn gamma_detail(
    ss1: &SecondaryStructure,
    n1: &TreeNode,
    ss2: &SecondaryStructure,
    n2: &TreeNode,
    scheme: &ScoringScheme,
) -> (Score, Vec<NodeAlignment>) {
    match (&n1.payload, &n2.payload) {
        (NodePayload::Hairpin(p1), NodePayload::Hairpin(p2)) => {
            let part = align_segment(
                &segment_items(ss1, &p1.loop_range),
                &segment_items(ss2, &p2.loop_range),
                scheme,
            );
            (part.score, vec![part])
        }
        (NodePayload::Helix(h1), NodePayload::Helix(h2)) => {
            let part = gamma_helix(ss1, h1, ss2, h2, scheme);
            (part.score, vec![part])
        }
        (NodePayload::Junction(j1), NodePayload::Junction(j2)) => {
            assert!(psi_equal(j1, j2), "gamma_detail on gated junction pair");
            let parts = gamma_junction_parts(ss1, j1, ss2, j2, scheme);
            let s = parts.iter().fold(Score::ZERO, |acc, p| acc + p.score);
            (junction_match_score(s, j1, j2, scheme), parts)
        }
        _ => panic!("gamma_detail on nodes of different kinds"),
    }
}

/// Node-versus-gap score: every nucleotide of the node aligned to a gap.
pub fn gamma_gap(node: &TreeNode, scheme: &ScoringScheme) -> Score {
    scheme.gap.times(node.nt_count)
}
