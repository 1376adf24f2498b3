//! Secondary structure ingest and emission.
//!
//! Supported formats are bpseq (`index base partner`, 1-based, partner 0 =
//! unpaired) and dot-bracket (sequence line plus structure line, with the
//! extended bracket families `[]`, `{}`, `<>` accepted for crossing pairs).
//! Crossing pairs can be stripped with [`remove_pseudoknots`], which keeps a
//! maximum-cardinality non-crossing subset.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// An RNA sequence together with its base pairs.
///
/// Positions are 1-based. Pairs are stored once as `(i, j)` with `i < j`,
/// and no position participates in more than one pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecondaryStructure {
    sequence: Vec<Base>,
    pairs: BTreeSet<(usize, usize)>,
}

/// A nucleotide. Anything outside `A`, `C`, `G`, `U` parses as `N`
/// (`T` is normalized to `U` first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Base {
    A,
    C,
    G,
    U,
    N,
}

impl Base {
    pub fn from_char(c: char) -> Base {
        match c.to_ascii_uppercase() {
            'A' => Base::A,
            'C' => Base::C,
            'G' => Base::G,
            'U' | 'T' => Base::U,
            _ => Base::N,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Base::A => 'A',
            Base::C => 'C',
            Base::G => 'G',
            Base::U => 'U',
            Base::N => 'N',
        }
    }

    /// Index into 4x4 score matrices; `None` for `N`.
    pub fn index(self) -> Option<usize> {
        match self {
            Base::A => Some(0),
            Base::C => Some(1),
            Base::G => Some(2),
            Base::U => Some(3),
            Base::N => None,
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("line {line}: expected `index base partner`, got {text:?}")]
    BpseqSyntax { line: usize, text: String },
    #[error("line {line}: index {found} out of order (expected {expected})")]
    NonConsecutiveIndex {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("position {pos}: partner {partner} out of range 0..={len}")]
    PartnerOutOfRange {
        pos: usize,
        partner: usize,
        len: usize,
    },
    #[error("position {pos} is paired to itself")]
    SelfPair { pos: usize },
    #[error("asymmetric pairing: {i} points to {j} but {j} points to {other}")]
    AsymmetricPair { i: usize, j: usize, other: usize },
    #[error("sequence length {seq} does not match structure length {strct}")]
    LengthMismatch { seq: usize, strct: usize },
    #[error("unmatched {bracket:?} at position {pos}")]
    UnbalancedBracket { pos: usize, bracket: char },
    #[error("invalid structure character {found:?} at position {pos}")]
    BadStructureChar { pos: usize, found: char },
    #[error("position {pos} paired more than once")]
    DuplicatePosition { pos: usize },
    #[error("cannot emit dot-bracket: pairs ({0}, {1}) and ({2}, {3}) cross")]
    CrossingPairs(usize, usize, usize, usize),
    #[error("empty input")]
    Empty,
}

impl SecondaryStructure {
    /// Build from parts, enforcing pair invariants.
    pub fn new(
        sequence: Vec<Base>,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<SecondaryStructure, StructureError> {
        let len = sequence.len();
        if len == 0 {
            return Err(StructureError::Empty);
        }
        let mut seen = vec![false; len + 1];
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            if a == b {
                return Err(StructureError::SelfPair { pos: a });
            }
            let (i, j) = (a.min(b), a.max(b));
            if i < 1 || j > len {
                return Err(StructureError::PartnerOutOfRange {
                    pos: i,
                    partner: j,
                    len,
                });
            }
            for p in [i, j] {
                if seen[p] {
                    return Err(StructureError::DuplicatePosition { pos: p });
                }
                seen[p] = true;
            }
            set.insert((i, j));
        }
        Ok(SecondaryStructure {
            sequence,
            pairs: set,
        })
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// Base at a 1-based position.
    pub fn base(&self, pos: usize) -> Base {
        self.sequence[pos - 1]
    }

    pub fn bases(&self) -> &[Base] {
        &self.sequence
    }

    pub fn sequence_string(&self) -> String {
        self.sequence.iter().map(|b| b.to_char()).collect()
    }

    /// Pairs in ascending order of 5' position.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// Partner of a position, if paired.
    pub fn partner(&self, pos: usize) -> Option<usize> {
        self.pairs.iter().find_map(|&(i, j)| match pos {
            p if p == i => Some(j),
            p if p == j => Some(i),
            _ => None,
        })
    }

    /// Partner lookup table: `table[pos]` is 0 when unpaired.
    pub fn partner_table(&self) -> Vec<usize> {
        let mut table = vec![0; self.len() + 1];
        for &(i, j) in &self.pairs {
            table[i] = j;
            table[j] = i;
        }
        table
    }

    /// All crossing pair pairs: `(i,j)` and `(k,l)` cross iff `i < k < j < l`.
    pub fn crossing_pairs(&self) -> Vec<((usize, usize), (usize, usize))> {
        let pairs: Vec<_> = self.pairs.iter().copied().collect();
        let mut out = Vec::new();
        for (a, &p) in pairs.iter().enumerate() {
            for &q in &pairs[a + 1..] {
                if crosses(p, q) {
                    out.push((p, q));
                }
            }
        }
        out
    }

    pub fn is_crossing(&self) -> bool {
        // Stack check is linear; enough for a yes/no answer.
        let mut stack: Vec<usize> = Vec::new();
        let table = self.partner_table();
        for (pos, &partner) in table.iter().enumerate().skip(1) {
            if partner > pos {
                stack.push(partner);
            } else if partner != 0 && stack.pop() != Some(pos) {
                return true;
            }
        }
        false
    }
}

pub fn crosses((i, j): (usize, usize), (k, l): (usize, usize)) -> bool {
    (i < k && k < j && j < l) || (k < i && i < l && l < j)
}

/// Parse bpseq text. `#` lines are comments; data lines are
/// `index base partner` with 1-based consecutive indices.
pub fn parse_bpseq(text: &str) -> Result<SecondaryStructure, StructureError> {
    let mut sequence = Vec::new();
    let mut partners = Vec::new();
    let mut expected = 1usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (idx, base, partner) = match (fields.next(), fields.next(), fields.next()) {
            (Some(i), Some(b), Some(p)) if fields.next().is_none() => (i, b, p),
            _ => {
                return Err(StructureError::BpseqSyntax {
                    line: lineno + 1,
                    text: line.to_string(),
                })
            }
        };
        let idx: usize = idx.parse().map_err(|_| StructureError::BpseqSyntax {
            line: lineno + 1,
            text: line.to_string(),
        })?;
        if idx != expected {
            return Err(StructureError::NonConsecutiveIndex {
                line: lineno + 1,
                expected,
                found: idx,
            });
        }
        let partner: usize = partner.parse().map_err(|_| StructureError::BpseqSyntax {
            line: lineno + 1,
            text: line.to_string(),
        })?;
        let mut chars = base.chars();
        let (c, extra) = (chars.next(), chars.next());
        let c = match (c, extra) {
            (Some(c), None) => c,
            _ => {
                return Err(StructureError::BpseqSyntax {
                    line: lineno + 1,
                    text: line.to_string(),
                })
            }
        };
        sequence.push(Base::from_char(c));
        partners.push(partner);
        expected += 1;
    }
    if sequence.is_empty() {
        return Err(StructureError::Empty);
    }
    let len = sequence.len();
    let mut pairs = Vec::new();
    for (pos0, &partner) in partners.iter().enumerate() {
        let pos = pos0 + 1;
        if partner == 0 {
            continue;
        }
        if partner > len {
            return Err(StructureError::PartnerOutOfRange { pos, partner, len });
        }
        if partner == pos {
            return Err(StructureError::SelfPair { pos });
        }
        let back = partners[partner - 1];
        if back != pos {
            return Err(StructureError::AsymmetricPair {
                i: pos,
                j: partner,
                other: back,
            });
        }
        if pos < partner {
            pairs.push((pos, partner));
        }
    }
    SecondaryStructure::new(sequence, pairs)
}

const BRACKET_FAMILIES: [(char, char); 4] = [('(', ')'), ('[', ']'), ('{', '}'), ('<', '>')];

/// Parse a sequence line and a dot-bracket line of equal length.
/// Each bracket family is matched independently with a stack.
pub fn parse_dotbracket(
    seq_text: &str,
    struct_text: &str,
) -> Result<SecondaryStructure, StructureError> {
    let seq: Vec<Base> = seq_text.trim().chars().map(Base::from_char).collect();
    let strct: Vec<char> = struct_text.trim().chars().collect();
    if seq.len() != strct.len() {
        return Err(StructureError::LengthMismatch {
            seq: seq.len(),
            strct: strct.len(),
        });
    }
    if seq.is_empty() {
        return Err(StructureError::Empty);
    }
    let mut stacks: [Vec<usize>; 4] = Default::default();
    let mut pairs = Vec::new();
    for (pos0, &c) in strct.iter().enumerate() {
        let pos = pos0 + 1;
        if c == '.' {
            continue;
        }
        if let Some(fam) = BRACKET_FAMILIES.iter().position(|&(open, _)| open == c) {
            stacks[fam].push(pos);
        } else if let Some(fam) = BRACKET_FAMILIES.iter().position(|&(_, close)| close == c) {
            let open = stacks[fam]
                .pop()
                .ok_or(StructureError::UnbalancedBracket { pos, bracket: c })?;
            pairs.push((open, pos));
        } else {
            return Err(StructureError::BadStructureChar { pos, found: c });
        }
    }
    for (fam, stack) in stacks.iter().enumerate() {
        if let Some(&pos) = stack.first() {
            return Err(StructureError::UnbalancedBracket {
                pos,
                bracket: BRACKET_FAMILIES[fam].0,
            });
        }
    }
    SecondaryStructure::new(seq, pairs)
}

/// Parse a dot-bracket file: optional `>` header, then sequence line,
/// then structure line.
pub fn parse_dotbracket_file(text: &str) -> Result<SecondaryStructure, StructureError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let mut first = lines.next().ok_or(StructureError::Empty)?;
    if first.starts_with('>') {
        first = lines.next().ok_or(StructureError::Empty)?;
    }
    let second = lines.next().ok_or(StructureError::Empty)?;
    parse_dotbracket(first, second)
}

/// Render as two-line dot-bracket. Fails on crossing pairs.
pub fn emit_dotbracket(ss: &SecondaryStructure) -> Result<String, StructureError> {
    if let Some((p, q)) = ss.crossing_pairs().first() {
        return Err(StructureError::CrossingPairs(p.0, p.1, q.0, q.1));
    }
    let mut strct = vec!['.'; ss.len()];
    for (i, j) in ss.pairs() {
        strct[i - 1] = '(';
        strct[j - 1] = ')';
    }
    Ok(format!(
        "{}\n{}\n",
        ss.sequence_string(),
        strct.into_iter().collect::<String>()
    ))
}

/// Render as bpseq text.
pub fn emit_bpseq(ss: &SecondaryStructure) -> String {
    let table = ss.partner_table();
    let mut out = String::new();
    for (pos0, base) in ss.bases().iter().enumerate() {
        out.push_str(&format!("{} {} {}\n", pos0 + 1, base, table[pos0 + 1]));
    }
    out
}

/// Remove a minimum set of pairs so that no crossing remains.
///
/// The retained set has maximum cardinality among all non-crossing subsets;
/// ties are broken by lexicographically preferring retention of pairs with
/// smaller 5' index. Identity on already non-crossing input.
pub fn remove_pseudoknots(
    ss: &SecondaryStructure,
) -> (SecondaryStructure, BTreeSet<(usize, usize)>) {
    let pairs: Vec<(usize, usize)> = ss.pairs().collect();
    if pairs.is_empty() || !ss.is_crossing() {
        return (ss.clone(), BTreeSet::new());
    }

    // Interval DP over compressed endpoint coordinates. best[a][b] is the
    // maximum number of mutually non-crossing pairs lying entirely within
    // points[a..=b]. Retaining the pair opening at a splits the span into
    // an inner and an outer part; anything crossing that pair is excluded
    // from the retain branch and picked up by the skip branch instead.
    let mut points: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
    points.sort_unstable();
    let n = points.len();
    let point_index = |pos: usize| points.binary_search(&pos).unwrap();
    // opens[a] = compressed index of the partner when points[a] is a 5' end.
    let mut opens: Vec<Option<usize>> = vec![None; n];
    for &(i, j) in &pairs {
        opens[point_index(i)] = Some(point_index(j));
    }

    let idx = |a: usize, b: usize| a * n + b;
    let mut best = vec![0u32; n * n];
    for a in (0..n).rev() {
        for b in a..n {
            let mut v = if a < b { best[idx(a + 1, b)] } else { 0 };
            if let Some(close) = opens[a] {
                if close <= b {
                    let inner = if a + 1 < close {
                        best[idx(a + 1, close - 1)]
                    } else {
                        0
                    };
                    let outer = if close < b {
                        best[idx(close + 1, b)]
                    } else {
                        0
                    };
                    v = v.max(1 + inner + outer);
                }
            }
            best[idx(a, b)] = v;
        }
    }

    // Greedy left-to-right traceback: retain the earliest-starting pair
    // whenever doing so still achieves the optimum. This yields the
    // lexicographically preferred optimal subset.
    let mut retained = BTreeSet::new();
    let mut spans = vec![(0usize, n - 1)];
    while let Some((mut a, mut b)) = spans.pop() {
        while a <= b && best[idx(a, b)] > 0 {
            if let Some(close) = opens[a] {
                if close <= b {
                    let inner = if a + 1 < close {
                        best[idx(a + 1, close - 1)]
                    } else {
                        0
                    };
                    let outer = if close < b {
                        best[idx(close + 1, b)]
                    } else {
                        0
                    };
                    if 1 + inner + outer == best[idx(a, b)] {
                        retained.insert((points[a], points[close]));
                        if close < b {
                            spans.push((close + 1, b));
                        }
                        // Continue inside the retained pair.
                        b = close - 1;
                    }
                }
            }
            a += 1;
        }
    }

    let removed: BTreeSet<(usize, usize)> = ss.pairs().filter(|p| !retained.contains(p)).collect();
    let kept = SecondaryStructure::new(ss.bases().to_vec(), retained)
        .expect("retained subset preserves invariants");
    (kept, removed)
}

/// Severity of a validation finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// One validation finding: severity, 1-based position span, message.
#[derive(Debug, Clone)]
pub struct Finding {
    pub severity: Severity,
    pub span: (usize, usize),
    pub message: String,
}

/// Result of [`validate_for_alignment`].
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub findings: Vec<Finding>,
    /// The minimal removed pair set, when removal ran.
    pub pseudoknot_pairs: BTreeSet<(usize, usize)>,
}

impl Diagnostics {
    pub fn passes(&self) -> bool {
        self.findings.iter().all(|f| f.severity != Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }
}

/// Check that a parsed structure is usable for tree construction:
/// at least one base pair and no crossing pairs. `N` bases warn.
pub fn validate_for_alignment(ss: &SecondaryStructure) -> Diagnostics {
    let mut diag = Diagnostics::default();
    if ss.pair_count() == 0 {
        diag.findings.push(Finding {
            severity: Severity::Error,
            span: (1, ss.len()),
            message: "no base pairs".to_string(),
        });
    }
    for (p, q) in ss.crossing_pairs() {
        diag.findings.push(Finding {
            severity: Severity::Error,
            span: (p.0, q.1),
            message: format!(
                "pseudoknot: pairs ({}, {}) and ({}, {}) cross",
                p.0, p.1, q.0, q.1
            ),
        });
    }
    for (pos0, &base) in ss.bases().iter().enumerate() {
        let pos = pos0 + 1;
        if base == Base::N {
            diag.findings.push(Finding {
                severity: Severity::Warning,
                span: (pos, pos),
                message: format!("unknown base at position {pos} treated as N"),
            });
        }
    }
    diag
}
