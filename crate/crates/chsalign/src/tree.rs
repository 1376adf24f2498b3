//! Ordered labeled tree model of a secondary structure.
//!
//! A validated structure decomposes into helix / junction / hairpin
//! elements: helices absorb internal loops and bulges as extra columns, a
//! junction is an enclosed region where n >= 3 helices meet, and a hairpin
//! is the unpaired region under an innermost pair. The elements form a
//! forest in which a helix has exactly one child (junction or hairpin), an
//! n-way junction has n-1 helix children in 5'-to-3' order, and hairpins
//! are leaves. Nodes are numbered by left-to-right post-order traversal.
//!
//! Every junction carries a coaxial-stacking status: the set of disjoint
//! branch pairs that stack, where branch 1 is the entry helix and branches
//! 2..n are the children in 5'-to-3' order.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use thiserror::Error;

use crate::structure::SecondaryStructure;

/// One column of a helix: a base pair or an absorbed unpaired base on the
/// 5' or 3' strand. Columns run outermost to innermost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HelixColumn {
    Pair(usize, usize),
    Base5(usize),
    Base3(usize),
}

impl HelixColumn {
    pub fn nt_count(self) -> usize {
        match self {
            HelixColumn::Pair(..) => 2,
            HelixColumn::Base5(_) | HelixColumn::Base3(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelixData {
    pub columns: Vec<HelixColumn>,
}

impl HelixData {
    pub fn outer_pair(&self) -> (usize, usize) {
        match self.columns.first() {
            Some(&HelixColumn::Pair(i, j)) => (i, j),
            _ => unreachable!("helix starts with a pair column"),
        }
    }

    pub fn pair_count(&self) -> usize {
        self.columns
            .iter()
            .filter(|c| matches!(c, HelixColumn::Pair(..)))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JunctionData {
    /// Pair closing the junction from outside; belongs to the parent helix.
    pub entry: (usize, usize),
    /// Entry pairs of the child helices, 5'-to-3'.
    pub branch_pairs: Vec<(usize, usize)>,
    /// The n loop segments (half-open 1-based position ranges, possibly
    /// empty). Segment k lies between branch k and branch k+1 (mod n).
    pub segments: Vec<Range<usize>>,
    pub status: Option<ChsStatus>,
}

impl JunctionData {
    /// Branch count n of the n-way junction.
    pub fn degree(&self) -> usize {
        self.branch_pairs.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HairpinData {
    pub closing: (usize, usize),
    /// Half-open range of loop positions; may be empty.
    pub loop_range: Range<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Helix,
    Junction,
    Hairpin,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NodeKind::Helix => "helix",
            NodeKind::Junction => "junction",
            NodeKind::Hairpin => "hairpin",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodePayload {
    Helix(HelixData),
    Junction(JunctionData),
    Hairpin(HairpinData),
}

impl NodePayload {
    pub fn kind(&self) -> NodeKind {
        match self {
            NodePayload::Helix(_) => NodeKind::Helix,
            NodePayload::Junction(_) => NodeKind::Junction,
            NodePayload::Hairpin(_) => NodeKind::Hairpin,
        }
    }

    pub fn nt_count(&self) -> usize {
        match self {
            NodePayload::Helix(h) => h.columns.iter().map(|c| c.nt_count()).sum(),
            NodePayload::Junction(j) => j.segments.iter().map(|s| s.len()).sum(),
            NodePayload::Hairpin(p) => p.loop_range.len(),
        }
    }

    /// 5' position used to order elements.
    fn anchor(&self) -> usize {
        match self {
            NodePayload::Helix(h) => h.outer_pair().0,
            NodePayload::Junction(j) => j.entry.0,
            NodePayload::Hairpin(p) => p.closing.0,
        }
    }
}

/// Coaxial-stacking status of an n-way junction: the set of disjoint
/// stacked branch pairs. Branch 1 is the entry helix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChsStatus {
    degree: usize,
    stacked: BTreeSet<(u8, u8)>,
}

/// Numeric/token encoding of a stacking status. Three-way junctions use
/// the codes 1 (H1H2), 2 (H2H3) and 3 (H1H3); 0 always means no stacking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PiCode {
    Zero,
    ThreeWay(u8),
    Tokens(String),
}

impl fmt::Display for PiCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PiCode::Zero => write!(f, "0"),
            PiCode::ThreeWay(c) => write!(f, "{c}"),
            PiCode::Tokens(s) => write!(f, "{s}"),
        }
    }
}

impl ChsStatus {
    pub fn none(degree: usize) -> ChsStatus {
        ChsStatus {
            degree,
            stacked: BTreeSet::new(),
        }
    }

    pub fn new(
        degree: usize,
        stacked: impl IntoIterator<Item = (u8, u8)>,
    ) -> Result<ChsStatus, AnnotationError> {
        let mut set = BTreeSet::new();
        let mut used = BTreeSet::new();
        for (x, y) in stacked {
            if x == 0 || y == 0 || x >= y {
                return Err(AnnotationError::BadBranchPair { x, y });
            }
            if y as usize > degree {
                return Err(AnnotationError::BranchOutOfRange { index: y, degree });
            }
            for b in [x, y] {
                if !used.insert(b) {
                    return Err(AnnotationError::OverlappingPairs { index: b });
                }
            }
            set.insert((x, y));
        }
        Ok(ChsStatus {
            degree,
            stacked: set,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn stacked(&self) -> &BTreeSet<(u8, u8)> {
        &self.stacked
    }

    pub fn is_stacked(&self) -> bool {
        !self.stacked.is_empty()
    }

    pub fn pi(&self) -> PiCode {
        if self.stacked.is_empty() {
            return PiCode::Zero;
        }
        if self.degree == 3 {
            if let Some(&pair) = self.stacked.iter().next() {
                if self.stacked.len() == 1 {
                    let code = match pair {
                        (1, 2) => 1,
                        (2, 3) => 2,
                        (1, 3) => 3,
                        _ => unreachable!("validated 3-way pair"),
                    };
                    return PiCode::ThreeWay(code);
                }
            }
        }
        PiCode::Tokens(self.token_string())
    }

    /// Canonical token form: `none` or comma-joined `H<x>H<y>` pairs.
    pub fn token_string(&self) -> String {
        if self.stacked.is_empty() {
            return "none".to_string();
        }
        self.stacked
            .iter()
            .map(|(x, y)| format!("H{x}H{y}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Junction signature gating junction-junction alignment: equal iff equal
/// degree and equal stacked set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Psi<'a> {
    pub degree: usize,
    pub stacked: &'a BTreeSet<(u8, u8)>,
}

/// One structural element plus its parent link within a decomposition.
#[derive(Debug, Clone)]
pub struct StructuralElement {
    pub payload: NodePayload,
    /// Index of the parent element in the decompose output, if any.
    pub parent: Option<usize>,
}

/// Split a validated structure into helix / junction / hairpin elements in
/// 5' pre-order. Every pair lands in exactly one helix column; a helix
/// ends where its innermost pair encloses two or more child helices
/// (junction) or none (hairpin). A single child helix separated only by
/// unpaired bases continues the same helix.
pub fn decompose(ss: &SecondaryStructure) -> Vec<StructuralElement> {
    assert!(
        !ss.is_crossing(),
        "decompose requires a non-crossing structure"
    );
    let mut elements: Vec<StructuralElement> = Vec::new();

    // Direct pair-enclosure forest via one stack sweep.
    let table = ss.partner_table();
    let mut top_pairs = Vec::new();
    let mut kids: Vec<Vec<(usize, usize)>> = vec![Vec::new(); ss.len() + 1];
    let mut stack: Vec<usize> = Vec::new();
    for (pos, &partner) in table.iter().enumerate().skip(1) {
        if partner > pos {
            match stack.last() {
                Some(&open) => kids[open].push((pos, partner)),
                None => top_pairs.push((pos, partner)),
            }
            stack.push(pos);
        } else if partner != 0 {
            stack.pop();
        }
    }

    let mut work: Vec<((usize, usize), Option<usize>)> =
        top_pairs.into_iter().rev().map(|p| (p, None)).collect();
    while let Some((start, parent)) = work.pop() {
        let mut columns = Vec::new();
        let mut cur = start;
        loop {
            columns.push(HelixColumn::Pair(cur.0, cur.1));
            let enclosed = &kids[cur.0];
            match enclosed.len() {
                1 => {
                    let kid = enclosed[0];
                    for p in cur.0 + 1..kid.0 {
                        columns.push(HelixColumn::Base5(p));
                    }
                    for p in (kid.1 + 1..cur.1).rev() {
                        columns.push(HelixColumn::Base3(p));
                    }
                    cur = kid;
                }
                0 => {
                    let helix_idx = elements.len();
                    elements.push(StructuralElement {
                        payload: NodePayload::Helix(HelixData { columns }),
                        parent,
                    });
                    elements.push(StructuralElement {
                        payload: NodePayload::Hairpin(HairpinData {
                            closing: cur,
                            loop_range: cur.0 + 1..cur.1,
                        }),
                        parent: Some(helix_idx),
                    });
                    break;
                }
                _ => {
                    let branch_pairs = enclosed.clone();
                    let mut segments = Vec::with_capacity(branch_pairs.len() + 1);
                    segments.push(cur.0 + 1..branch_pairs[0].0);
                    for w in branch_pairs.windows(2) {
                        segments.push(w[0].1 + 1..w[1].0);
                    }
                    segments.push(branch_pairs.last().unwrap().1 + 1..cur.1);
                    let helix_idx = elements.len();
                    elements.push(StructuralElement {
                        payload: NodePayload::Helix(HelixData { columns }),
                        parent,
                    });
                    let junction_idx = elements.len();
                    elements.push(StructuralElement {
                        payload: NodePayload::Junction(JunctionData {
                            entry: cur,
                            branch_pairs: branch_pairs.clone(),
                            segments,
                            status: None,
                        }),
                        parent: Some(helix_idx),
                    });
                    for &kid in branch_pairs.iter().rev() {
                        work.push((kid, Some(junction_idx)));
                    }
                    break;
                }
            }
        }
    }
    elements
}

/// A node of the ordered labeled forest. The arena index equals the
/// post-order position minus one, so children always precede parents.
#[derive(Debug, Clone)]
pub struct TreeNode {
    pub payload: NodePayload,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub nt_count: usize,
}

impl TreeNode {
    pub fn kind(&self) -> NodeKind {
        self.payload.kind()
    }

    pub fn junction(&self) -> Option<&JunctionData> {
        match &self.payload {
            NodePayload::Junction(j) => Some(j),
            _ => None,
        }
    }

    /// Junction signature. Panics on non-junction or unannotated nodes.
    pub fn psi(&self) -> Psi<'_> {
        let j = self.junction().expect("psi on a non-junction node");
        let status = j.status.as_ref().expect("psi on an unannotated junction");
        Psi {
            degree: j.degree(),
            stacked: status.stacked(),
        }
    }

    /// Stacking code. Panics on non-junction or unannotated nodes.
    pub fn pi(&self) -> PiCode {
        let j = self.junction().expect("pi on a non-junction node");
        j.status
            .as_ref()
            .expect("pi on an unannotated junction")
            .pi()
    }
}

/// An ordered forest over a structure, with post-order node numbering.
#[derive(Debug, Clone)]
pub struct StructureForest {
    nodes: Vec<TreeNode>,
    roots: Vec<usize>,
    ss: SecondaryStructure,
}

/// Largest junction degree seen in solved structures; larger degrees are
/// accepted with a warning.
pub const DEGREE_WARNING_THRESHOLD: usize = 12;

impl StructureForest {
    /// Decompose and wire a validated structure in one step.
    pub fn build(ss: &SecondaryStructure) -> StructureForest {
        build_forest(ss, decompose(ss))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn structure(&self) -> &SecondaryStructure {
        &self.ss
    }

    /// Post-order index (1-based) of a node, as reported to users.
    pub fn post_index(&self, id: usize) -> usize {
        id + 1
    }

    /// Junction node ids ordered by ascending 5' position of the entry
    /// pair; position in this list + 1 is the junction's ordinal.
    pub fn junctions_in_position_order(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.nodes.len())
            .filter(|&id| self.nodes[id].kind() == NodeKind::Junction)
            .collect();
        ids.sort_by_key(|&id| self.nodes[id].junction().unwrap().entry.0);
        ids
    }

    pub fn is_fully_annotated(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| n.junction().is_none_or(|j| j.status.is_some()))
    }

    /// Attach a status to a junction, checking the degree.
    pub fn set_junction_status(
        &mut self,
        id: usize,
        status: ChsStatus,
    ) -> Result<(), AnnotationError> {
        let node = &mut self.nodes[id];
        let degree = match &node.payload {
            NodePayload::Junction(j) => j.degree(),
            _ => return Err(AnnotationError::NotAJunction { node: id + 1 }),
        };
        if status.degree() != degree {
            return Err(AnnotationError::DegreeMismatch {
                ordinal: 0,
                file: status.degree(),
                actual: degree,
            });
        }
        if let NodePayload::Junction(j) = &mut node.payload {
            j.status = Some(status);
        }
        Ok(())
    }

    /// True when `a` is a proper ancestor of `b`.
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        let mut cur = self.nodes[b].parent;
        while let Some(p) = cur {
            if p == a {
                return true;
            }
            cur = self.nodes[p].parent;
        }
        false
    }

    /// Warnings over junction degrees beyond the crystal-structure range.
    pub fn degree_warnings(&self) -> Vec<String> {
        self.junctions_in_position_order()
            .iter()
            .enumerate()
            .filter_map(|(ord0, &id)| {
                let degree = self.nodes[id].junction().unwrap().degree();
                (degree > DEGREE_WARNING_THRESHOLD).then(|| {
                    format!(
                        "junction {} is {}-way (more than {} branches)",
                        ord0 + 1,
                        degree,
                        DEGREE_WARNING_THRESHOLD
                    )
                })
            })
            .collect()
    }
}

/// Wire decomposed elements into a forest and assign post-order indices.
/// Elements must come from [`decompose`]; the structural grammar
/// (helix -> one junction-or-hairpin child, n-way junction -> n-1 helix
/// children, hairpin leaf) is asserted.
pub fn build_forest(ss: &SecondaryStructure, elements: Vec<StructuralElement>) -> StructureForest {
    let count = elements.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); count];
    let mut roots: Vec<usize> = Vec::new();
    for (idx, el) in elements.iter().enumerate() {
        match el.parent {
            Some(p) => children[p].push(idx),
            None => roots.push(idx),
        }
    }
    roots.sort_by_key(|&idx| elements[idx].payload.anchor());
    for kids in &mut children {
        kids.sort_by_key(|&idx| elements[idx].payload.anchor());
    }

    // Left-to-right post-order numbering over the element indices.
    let mut order: Vec<usize> = Vec::with_capacity(count);
    let mut stack: Vec<(usize, bool)> = roots.iter().rev().map(|&r| (r, false)).collect();
    while let Some((idx, expanded)) = stack.pop() {
        if expanded {
            order.push(idx);
        } else {
            stack.push((idx, true));
            for &kid in children[idx].iter().rev() {
                stack.push((kid, false));
            }
        }
    }
    debug_assert_eq!(order.len(), count);
    let mut new_id = vec![0usize; count];
    for (post0, &idx) in order.iter().enumerate() {
        new_id[idx] = post0;
    }

    let mut nodes: Vec<Option<TreeNode>> = (0..count).map(|_| None).collect();
    for (idx, el) in elements.into_iter().enumerate() {
        let nt_count = el.payload.nt_count();
        nodes[new_id[idx]] = Some(TreeNode {
            payload: el.payload,
            parent: el.parent.map(|p| new_id[p]),
            children: children[idx].iter().map(|&c| new_id[c]).collect(),
            nt_count,
        });
    }
    let nodes: Vec<TreeNode> = nodes.into_iter().map(Option::unwrap).collect();
    let roots: Vec<usize> = roots.into_iter().map(|r| new_id[r]).collect();

    for (id, node) in nodes.iter().enumerate() {
        for &c in &node.children {
            assert!(c < id, "post-order: child precedes parent");
        }
        match node.kind() {
            NodeKind::Helix => {
                assert_eq!(node.children.len(), 1, "helix has exactly one child");
                assert_ne!(nodes[node.children[0]].kind(), NodeKind::Helix);
            }
            NodeKind::Junction => {
                let degree = node.junction().unwrap().degree();
                assert_eq!(node.children.len(), degree - 1, "junction has n-1 children");
                assert!(node
                    .children
                    .iter()
                    .all(|&c| nodes[c].kind() == NodeKind::Helix));
                assert!(node
                    .parent
                    .is_some_and(|p| nodes[p].kind() == NodeKind::Helix));
            }
            NodeKind::Hairpin => assert!(node.children.is_empty(), "hairpin is a leaf"),
        }
    }

    StructureForest {
        nodes,
        roots,
        ss: ss.clone(),
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum AnnotationError {
    #[error("line {line}: malformed annotation line: {text:?}")]
    Syntax { line: usize, text: String },
    #[error("junction ordinal {ordinal} out of range (structure has {count} junctions)")]
    OrdinalOutOfRange { ordinal: usize, count: usize },
    #[error("junction {ordinal}: annotated as {file}-way but the junction is {actual}-way")]
    DegreeMismatch {
        ordinal: usize,
        file: usize,
        actual: usize,
    },
    #[error("malformed stacking token {token:?}")]
    BadToken { token: String },
    #[error("invalid branch pair H{x}H{y} (need 1 <= x < y)")]
    BadBranchPair { x: u8, y: u8 },
    #[error("branch index {index} exceeds junction degree {degree}")]
    BranchOutOfRange { index: u8, degree: usize },
    #[error("branch {index} appears in more than one stacked pair")]
    OverlappingPairs { index: u8 },
    #[error("junction {ordinal} annotated more than once")]
    Duplicate { ordinal: usize },
    #[error("node t[{node}] is not a junction")]
    NotAJunction { node: usize },
}

/// Parse `none` or comma-separated `H<x>H<y>` tokens into a status.
pub fn parse_status(degree: usize, text: &str) -> Result<ChsStatus, AnnotationError> {
    if text == "none" {
        return Ok(ChsStatus::none(degree));
    }
    let mut pairs = Vec::new();
    for token in text.split(',') {
        let rest = token
            .strip_prefix('H')
            .ok_or_else(|| AnnotationError::BadToken {
                token: token.to_string(),
            })?;
        let split = rest.find('H').ok_or_else(|| AnnotationError::BadToken {
            token: token.to_string(),
        })?;
        let x: u8 = rest[..split]
            .parse()
            .map_err(|_| AnnotationError::BadToken {
                token: token.to_string(),
            })?;
        let y: u8 = rest[split + 1..]
            .parse()
            .map_err(|_| AnnotationError::BadToken {
                token: token.to_string(),
            })?;
        pairs.push((x, y));
    }
    if pairs.is_empty() {
        return Err(AnnotationError::BadToken {
            token: text.to_string(),
        });
    }
    ChsStatus::new(degree, pairs)
}

/// Read a sidecar annotation file and attach a status to every junction.
/// Lines are `junction <ordinal> <n>-way <status>`; `#` starts a comment.
/// Junctions not mentioned default to no stacking, with a warning.
pub fn parse_annotations(
    text: &str,
    forest: &mut StructureForest,
) -> Result<Vec<String>, AnnotationError> {
    let junctions = forest.junctions_in_position_order();
    let mut seen = vec![false; junctions.len()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = || AnnotationError::Syntax {
            line: lineno + 1,
            text: line.to_string(),
        };
        let mut fields = line.split_whitespace();
        let (kw, ordinal, way, status_text) =
            match (fields.next(), fields.next(), fields.next(), fields.next()) {
                (Some(k), Some(o), Some(w), Some(s)) if fields.next().is_none() => (k, o, w, s),
                _ => return Err(syntax()),
            };
        if kw != "junction" {
            return Err(syntax());
        }
        let ordinal: usize = ordinal.parse().map_err(|_| syntax())?;
        let file_degree: usize = way
            .strip_suffix("-way")
            .ok_or_else(syntax)?
            .parse()
            .map_err(|_| syntax())?;
        if ordinal == 0 || ordinal > junctions.len() {
            return Err(AnnotationError::OrdinalOutOfRange {
                ordinal,
                count: junctions.len(),
            });
        }
        if seen[ordinal - 1] {
            return Err(AnnotationError::Duplicate { ordinal });
        }
        seen[ordinal - 1] = true;
        let id = junctions[ordinal - 1];
        let actual = forest.node(id).junction().unwrap().degree();
        if file_degree != actual {
            return Err(AnnotationError::DegreeMismatch {
                ordinal,
                file: file_degree,
                actual,
            });
        }
        let status = parse_status(actual, status_text).map_err(|e| match e {
            AnnotationError::DegreeMismatch { file, actual, .. } => {
                AnnotationError::DegreeMismatch {
                    ordinal,
                    file,
                    actual,
                }
            }
            other => other,
        })?;
        forest.set_junction_status(id, status)?;
    }
    let mut warnings = Vec::new();
    for (ord0, &id) in junctions.iter().enumerate() {
        if !seen[ord0] {
            let degree = forest.node(id).junction().unwrap().degree();
            forest.set_junction_status(id, ChsStatus::none(degree))?;
            warnings.push(format!(
                "junction {} ({}-way) not mentioned in annotations; assuming no stacking",
                ord0 + 1,
                degree
            ));
        }
    }
    Ok(warnings)
}

/// Baseline stand-in for a real stacking predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorPolicy {
    /// No stacking anywhere.
    None,
    /// Stack the two sequence-adjacent branches separated by the shortest
    /// loop segment, provided that segment is at most 1 nt (ties go to the
    /// smallest branch index).
    Flush,
}

impl PredictorPolicy {
    pub fn name(self) -> &'static str {
        match self {
            PredictorPolicy::None => "none",
            PredictorPolicy::Flush => "flush",
        }
    }
}

/// Annotate every junction of the forest with the baseline heuristic.
/// Deterministic: identical forests yield identical annotations.
pub fn predict_chs_baseline(forest: &mut StructureForest, policy: PredictorPolicy) {
    for id in forest.junctions_in_position_order() {
        let j = forest.node(id).junction().unwrap();
        let degree = j.degree();
        let status = match policy {
            PredictorPolicy::None => ChsStatus::none(degree),
            PredictorPolicy::Flush => {
                let lens: Vec<usize> = j.segments.iter().map(|s| s.len()).collect();
                let (k0, &min_len) = lens
                    .iter()
                    .enumerate()
                    .min_by_key(|&(k, &l)| (l, k))
                    .unwrap();
                if min_len <= 1 {
                    let a = (k0 + 1) as u8;
                    let b = if k0 + 1 == degree { 1 } else { (k0 + 2) as u8 };
                    let (x, y) = (a.min(b), a.max(b));
                    ChsStatus::new(degree, [(x, y)]).unwrap()
                } else {
                    ChsStatus::none(degree)
                }
            }
        };
        forest.set_junction_status(id, status).unwrap();
    }
}

/// Render the sidecar annotation grammar for a fully annotated forest.
pub fn emit_annotation_file(forest: &StructureForest) -> String {
    let mut out = String::from("# junction annotations: junction <ordinal> <n>-way <status>\n");
    for (ord0, id) in forest.junctions_in_position_order().into_iter().enumerate() {
        let j = forest.node(id).junction().unwrap();
        let status = j
            .status
            .as_ref()
            .map_or_else(|| "none".to_string(), |s| s.token_string());
        out.push_str(&format!(
            "junction {} {}-way {}\n",
            ord0 + 1,
            j.degree(),
            status
        ));
    }
    out
}
