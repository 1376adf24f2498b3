//! Shared test support: an independent brute-force oracle for the tree
//! alignment recurrences, plus random structure generators.
//!
//! The oracle recomputes every subtree score by naive recursion straight
//! from the scoring rules, with node-level scores obtained by exhaustive
//! enumeration of all global alignments (no dynamic programming table, no
//! traceback machinery). It must agree exactly with the production path.

#![allow(dead_code)]

use chsalign::score::Score;
use chsalign::scoring::ScoringScheme;
use chsalign::structure::{crosses, parse_dotbracket, Base, SecondaryStructure};
use chsalign::tree::{ChsStatus, HelixColumn, NodeKind, NodePayload, StructureForest, TreeNode};

use rand::rngs::StdRng;
use rand::Rng;

// ---------------------------------------------------------------------
// Brute-force node-level scores
// ---------------------------------------------------------------------

/// Exhaustive global alignment: maximize over every way of consuming the
/// two item lists. `sub` may return the minus-infinity sentinel.
fn bf_align<T: Copy>(
    a: &[T],
    b: &[T],
    sub: &impl Fn(T, T) -> Score,
    gap: &impl Fn(T) -> Score,
) -> Score {
    if a.is_empty() && b.is_empty() {
        return Score::ZERO;
    }
    let mut best = Score::NEG_INF;
    if let (Some(&x), Some(&y)) = (a.first(), b.first()) {
        let s = sub(x, y);
        if s.is_finite() {
            best = best.max(s + bf_align(&a[1..], &b[1..], sub, gap));
        }
    }
    if let Some(&x) = a.first() {
        best = best.max(gap(x) + bf_align(&a[1..], b, sub, gap));
    }
    if let Some(&y) = b.first() {
        best = best.max(gap(y) + bf_align(a, &b[1..], sub, gap));
    }
    best
}

fn loop_bases(ss: &SecondaryStructure, range: std::ops::Range<usize>) -> Vec<Base> {
    range.map(|p| ss.base(p)).collect()
}

pub fn bf_segment_score(a: &[Base], b: &[Base], scheme: &ScoringScheme) -> Score {
    bf_align(a, b, &|x, y| scheme.single_score(x, y), &|_| scheme.gap)
}

#[derive(Clone, Copy)]
enum BfColumn {
    Pair(Base, Base),
    Side5(Base),
    Side3(Base),
}

fn bf_columns(ss: &SecondaryStructure, columns: &[HelixColumn]) -> Vec<BfColumn> {
    columns
        .iter()
        .map(|c| match *c {
            HelixColumn::Pair(i, j) => BfColumn::Pair(ss.base(i), ss.base(j)),
            HelixColumn::Base5(p) => BfColumn::Side5(ss.base(p)),
            HelixColumn::Base3(p) => BfColumn::Side3(ss.base(p)),
        })
        .collect()
}

pub fn bf_helix_score(
    ss1: &SecondaryStructure,
    c1: &[HelixColumn],
    ss2: &SecondaryStructure,
    c2: &[HelixColumn],
    scheme: &ScoringScheme,
) -> Score {
    let a = bf_columns(ss1, c1);
    let b = bf_columns(ss2, c2);
    let sub = |x: BfColumn, y: BfColumn| match (x, y) {
        (BfColumn::Pair(a1, a2), BfColumn::Pair(b1, b2)) => scheme.pair_score((a1, a2), (b1, b2)),
        (BfColumn::Side5(a), BfColumn::Side5(b)) | (BfColumn::Side3(a), BfColumn::Side3(b)) => {
            scheme.single_score(a, b)
        }
        _ => Score::NEG_INF,
    };
    let gap = |x: BfColumn| match x {
        BfColumn::Pair(..) => scheme.gap.times(2),
        _ => scheme.gap,
    };
    bf_align(&a, &b, &sub, &gap)
}

/// Node-versus-gap cost recomputed from the payload positions.
pub fn bf_gap(node: &TreeNode, scheme: &ScoringScheme) -> Score {
    let count = match &node.payload {
        NodePayload::Helix(h) => h.columns.iter().map(|c| c.nt_count()).sum::<usize>(),
        NodePayload::Junction(j) => j.segments.iter().map(|s| s.len()).sum(),
        NodePayload::Hairpin(p) => p.loop_range.len(),
    };
    scheme.gap.times(count)
}

/// Node match score: per-kind brute-force alignment, with the junction
/// weight rule applied on top of the summed segment scores.
pub fn bf_gamma(
    f1: &StructureForest,
    n1: &TreeNode,
    f2: &StructureForest,
    n2: &TreeNode,
    scheme: &ScoringScheme,
) -> Score {
    let ss1 = f1.structure();
    let ss2 = f2.structure();
    match (&n1.payload, &n2.payload) {
        (NodePayload::Hairpin(p1), NodePayload::Hairpin(p2)) => bf_segment_score(
            &loop_bases(ss1, p1.loop_range.clone()),
            &loop_bases(ss2, p2.loop_range.clone()),
            scheme,
        ),
        (NodePayload::Helix(h1), NodePayload::Helix(h2)) => {
            bf_helix_score(ss1, &h1.columns, ss2, &h2.columns, scheme)
        }
        (NodePayload::Junction(j1), NodePayload::Junction(j2)) => {
            let st1 = j1.status.as_ref().expect("annotated");
            let st2 = j2.status.as_ref().expect("annotated");
            if j1.degree() != j2.degree() || st1.stacked() != st2.stacked() {
                return Score::NEG_INF;
            }
            let mut s = Score::ZERO;
            for (r1, r2) in j1.segments.iter().zip(&j2.segments) {
                s += bf_segment_score(
                    &loop_bases(ss1, r1.clone()),
                    &loop_bases(ss2, r2.clone()),
                    scheme,
                );
            }
            if st1.is_stacked() && st2.is_stacked() {
                s + scheme.weight
            } else {
                s + scheme.weight.half()
            }
        }
        _ => Score::NEG_INF,
    }
}

// ---------------------------------------------------------------------
// Brute-force subtree scores (naive memoized recursion over the cases)
// ---------------------------------------------------------------------

/// Independent reference evaluator for one input pair. Subtree scores are
/// computed by top-down recursion (memoized per subtree pair, since the
/// same subproblem recurs along many paths); node scores come from
/// [`bf_gamma`]'s exhaustive alignment enumeration.
pub struct Oracle<'a> {
    f1: &'a StructureForest,
    f2: &'a StructureForest,
    scheme: &'a ScoringScheme,
    memo: std::cell::RefCell<std::collections::HashMap<(usize, usize), Score>>,
}

impl<'a> Oracle<'a> {
    pub fn new(
        f1: &'a StructureForest,
        f2: &'a StructureForest,
        scheme: &'a ScoringScheme,
    ) -> Oracle<'a> {
        Oracle {
            f1,
            f2,
            scheme,
            memo: Default::default(),
        }
    }

    /// Subtree-versus-subtree score.
    pub fn subtree(&self, i: usize, j: usize) -> Score {
        if let Some(&v) = self.memo.borrow().get(&(i, j)) {
            return v;
        }
        let v = self.compute(i, j);
        self.memo.borrow_mut().insert((i, j), v);
        v
    }

    fn compute(&self, i: usize, j: usize) -> Score {
        let (f1, f2, scheme) = (self.f1, self.f2, self.scheme);
        let n1 = f1.node(i);
        let n2 = f2.node(j);
        let mut best = Score::ZERO;

        // Matching the roots.
        match (n1.kind(), n2.kind()) {
            (NodeKind::Hairpin, NodeKind::Hairpin) => {
                best = best.max(bf_gamma(f1, n1, f2, n2, scheme));
            }
            (NodeKind::Helix, NodeKind::Helix) => {
                let g = bf_gamma(f1, n1, f2, n2, scheme);
                let sub = self.subtree(n1.children[0], n2.children[0]);
                best = best.max(g + sub).max(g);
            }
            (NodeKind::Junction, NodeKind::Junction) => {
                let g = bf_gamma(f1, n1, f2, n2, scheme);
                if g.is_finite() {
                    let mut total = g;
                    for (&a, &b) in n1.children.iter().zip(&n2.children) {
                        total += self.subtree(a, b);
                    }
                    best = best.max(total);
                }
            }
            // Mixed kinds: one side is aligned to gaps.
            (NodeKind::Junction, NodeKind::Helix) => {
                best = best.max(bf_gap(n2, scheme) + self.subtree(i, n2.children[0]));
                for &c in &n1.children {
                    best = best.max(bf_gap(n1, scheme) + self.subtree(c, j));
                }
            }
            (NodeKind::Junction, NodeKind::Hairpin) => {
                for &c in &n1.children {
                    best = best.max(bf_gap(n1, scheme) + self.subtree(c, j));
                }
            }
            (NodeKind::Helix, NodeKind::Junction) => {
                best = best.max(bf_gap(n1, scheme) + self.subtree(n1.children[0], j));
                for &c in &n2.children {
                    best = best.max(bf_gap(n2, scheme) + self.subtree(i, c));
                }
            }
            (NodeKind::Helix, NodeKind::Hairpin) => {
                best = best.max(bf_gap(n1, scheme) + self.subtree(n1.children[0], j));
            }
            (NodeKind::Hairpin, NodeKind::Junction) => {
                for &c in &n2.children {
                    best = best.max(bf_gap(n2, scheme) + self.subtree(i, c));
                }
            }
            (NodeKind::Hairpin, NodeKind::Helix) => {
                best = best.max(bf_gap(n2, scheme) + self.subtree(i, n2.children[0]));
            }
        }
        best
    }

    /// Best alignment score over every subtree pair, floored at zero.
    pub fn best(&self) -> Score {
        let mut best = Score::ZERO;
        for i in 0..self.f1.node_count() {
            for j in 0..self.f2.node_count() {
                best = best.max(self.subtree(i, j));
            }
        }
        best
    }
}

pub fn bf_subtree(
    f1: &StructureForest,
    i: usize,
    f2: &StructureForest,
    j: usize,
    scheme: &ScoringScheme,
) -> Score {
    Oracle::new(f1, f2, scheme).subtree(i, j)
}

pub fn bf_best_score(f1: &StructureForest, f2: &StructureForest, scheme: &ScoringScheme) -> Score {
    Oracle::new(f1, f2, scheme).best()
}

// ---------------------------------------------------------------------
// Fixtures and generators
// ---------------------------------------------------------------------

pub const FX1_SEQ: &str = "GCAGCAAAGCAGCAAAGCAGC";
pub const FX1_STRUCT: &str = "((.((...)).((...)).))";

pub fn forest_from(seq: &str, strct: &str, annotations: &str) -> StructureForest {
    let ss = parse_dotbracket(seq, strct).expect("fixture parses");
    let mut forest = StructureForest::build(&ss);
    chsalign::tree::parse_annotations(annotations, &mut forest).expect("fixture annotates");
    forest
}

const PAIR_CHOICES: [(char, char); 5] =
    [('G', 'C'), ('C', 'G'), ('A', 'U'), ('U', 'A'), ('G', 'U')];
const LOOP_CHOICES: [char; 4] = ['A', 'C', 'G', 'U'];

/// Build a random non-crossing structure of exactly `len` nucleotides
/// (len >= 10), starting with a stem so at least one pair exists.
pub fn random_structure(rng: &mut StdRng, len: usize) -> SecondaryStructure {
    assert!(len >= 10);
    let mut seq = Vec::with_capacity(len);
    let mut strct = Vec::with_capacity(len);
    gen_region(rng, len, true, &mut seq, &mut strct);
    assert_eq!(seq.len(), len);
    parse_dotbracket(
        &seq.iter().collect::<String>(),
        &strct.iter().collect::<String>(),
    )
    .expect("generator emits balanced structures")
}

fn dots(rng: &mut StdRng, n: usize, seq: &mut Vec<char>, strct: &mut Vec<char>) {
    for _ in 0..n {
        seq.push(LOOP_CHOICES[rng.gen_range(0..LOOP_CHOICES.len())]);
        strct.push('.');
    }
}

/// Exactly `n` positions of top-level content: stems with optional
/// exterior unpaired runs. `force_stem` guarantees at least one pair.
fn gen_region(
    rng: &mut StdRng,
    n: usize,
    force_stem: bool,
    seq: &mut Vec<char>,
    strct: &mut Vec<char>,
) {
    let mut remaining = n;
    let mut forced = force_stem;
    while remaining > 0 {
        if remaining < 10 {
            if forced && remaining >= 5 {
                gen_stem(rng, remaining, seq, strct);
                forced = false;
                remaining = 0;
            } else {
                dots(rng, remaining, seq, strct);
                remaining = 0;
            }
        } else if forced || rng.gen_bool(0.8) {
            let take = rng.gen_range(10..=remaining.min(120)).max(10);
            gen_stem(rng, take, seq, strct);
            forced = false;
            remaining -= take;
        } else {
            let take = rng.gen_range(1..=3.min(remaining));
            dots(rng, take, seq, strct);
            remaining -= take;
        }
    }
}

/// Exactly `n` positions (n >= 5): a stem of 2..=5 pairs around inner
/// content.
fn gen_stem(rng: &mut StdRng, n: usize, seq: &mut Vec<char>, strct: &mut Vec<char>) {
    let max_pairs = (n / 2).clamp(1, 5);
    let pairs = if max_pairs >= 2 {
        rng.gen_range(2..=max_pairs)
    } else {
        1
    };
    let inner = n - 2 * pairs;
    let mut closers = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let (a, b) = PAIR_CHOICES[rng.gen_range(0..PAIR_CHOICES.len())];
        seq.push(a);
        strct.push('(');
        closers.push(b);
    }
    gen_inner(rng, inner, seq, strct);
    for b in closers.into_iter().rev() {
        seq.push(b);
        strct.push(')');
    }
}

/// Exactly `n` positions under an innermost pair: hairpin loop, internal
/// loop around one child stem, or a junction of 2..=3 child stems.
fn gen_inner(rng: &mut StdRng, n: usize, seq: &mut Vec<char>, strct: &mut Vec<char>) {
    if n < 8 || rng.gen_bool(0.25) {
        dots(rng, n, seq, strct);
        return;
    }
    let junction_ok = n >= 2 * 5 + 2;
    if junction_ok && rng.gen_bool(0.45) {
        // Junction: k child stems with segments between them.
        let k = if n >= 3 * 5 + 3 && rng.gen_bool(0.4) {
            3
        } else {
            2
        };
        let mut seg = [0usize; 4];
        let mut budget = n - 5 * k;
        for s in seg.iter_mut().take(k + 1) {
            let take = rng.gen_range(0..=budget.min(3));
            *s = take;
            budget -= take;
        }
        // Leftover space goes to the first child stem.
        let mut stem_sizes = vec![5usize; k];
        stem_sizes[0] += budget;
        dots(rng, seg[0], seq, strct);
        for (idx, &size) in stem_sizes.iter().enumerate() {
            gen_stem(rng, size, seq, strct);
            dots(rng, seg[idx + 1], seq, strct);
        }
    } else {
        // Internal loop or bulge around one child stem.
        let left = rng.gen_range(0..=2.min(n - 5));
        let right = rng.gen_range(0..=2.min(n - 5 - left));
        dots(rng, left, seq, strct);
        gen_stem(rng, n - left - right, seq, strct);
        dots(rng, right, seq, strct);
    }
}

/// Attach a random valid stacking status to every junction.
pub fn random_annotations(rng: &mut StdRng, forest: &mut StructureForest) {
    for id in forest.junctions_in_position_order() {
        let degree = forest.node(id).junction().unwrap().degree();
        let status = if rng.gen_bool(0.4) {
            ChsStatus::none(degree)
        } else {
            let mut branches: Vec<u8> = (1..=degree as u8).collect();
            for x in (1..branches.len()).rev() {
                let y = rng.gen_range(0..=x);
                branches.swap(x, y);
            }
            let max_pairs = degree / 2;
            let count = rng.gen_range(1..=max_pairs);
            let mut pairs = Vec::new();
            for c in 0..count {
                let (a, b) = (branches[2 * c], branches[2 * c + 1]);
                pairs.push((a.min(b), a.max(b)));
            }
            ChsStatus::new(degree, pairs).unwrap()
        };
        forest.set_junction_status(id, status).unwrap();
    }
}

/// Random annotated forest of roughly `len` nucleotides.
pub fn random_forest(rng: &mut StdRng, len: usize) -> StructureForest {
    let ss = random_structure(rng, len);
    let mut forest = StructureForest::build(&ss);
    random_annotations(rng, &mut forest);
    forest
}

/// Copy of a forest with the same pairs and annotations but ~15% of the
/// bases substituted at random.
pub fn resequenced_copy(rng: &mut StdRng, forest: &StructureForest) -> StructureForest {
    let ss = forest.structure();
    let bases: Vec<Base> = ss
        .bases()
        .iter()
        .map(|&b| {
            if rng.gen_bool(0.15) {
                Base::from_char(LOOP_CHOICES[rng.gen_range(0..LOOP_CHOICES.len())])
            } else {
                b
            }
        })
        .collect();
    let mutated = SecondaryStructure::new(bases, ss.pairs()).unwrap();
    let mut copy = StructureForest::build(&mutated);
    for id in forest.junctions_in_position_order() {
        let status = forest.node(id).junction().unwrap().status.clone().unwrap();
        copy.set_junction_status(id, status).unwrap();
    }
    copy
}

/// Every annotated small shape: plain stems, two-stem forests, and
/// three-way junction trees in all four stacking states, with varied
/// helix lengths, loop lengths and base content.
pub fn battery_variants() -> Vec<StructureForest> {
    let mut variants = Vec::new();

    // Stems: 1 or 2 pair columns, loop 0/1/3 nt, two loop bases, two pair
    // alphabets.
    for pairs in [1usize, 2] {
        for loop_len in [0usize, 1, 3] {
            for loop_base in ['A', 'G'] {
                for (open, close) in [('G', 'C'), ('A', 'U')] {
                    let seq: String = std::iter::repeat_n(open, pairs)
                        .chain(std::iter::repeat_n(loop_base, loop_len))
                        .chain(std::iter::repeat_n(close, pairs))
                        .collect();
                    let strct: String = std::iter::repeat_n('(', pairs)
                        .chain(std::iter::repeat_n('.', loop_len))
                        .chain(std::iter::repeat_n(')', pairs))
                        .collect();
                    let ss = parse_dotbracket(&seq, &strct).unwrap();
                    variants.push(StructureForest::build(&ss));
                }
            }
        }
    }

    // Two-root forests.
    for (seq, strct) in [("GCAAACGAU", "((...))()"), ("GGAAACCAAU", "((...)).()")] {
        let ss = parse_dotbracket(seq, strct).unwrap();
        variants.push(StructureForest::build(&ss));
    }

    // Three-way junction trees: entry helix of one pair, a one-pair
    // branch with an A loop and a two-pair branch with a G loop.
    for status in ["none", "H1H2", "H2H3", "H1H3"] {
        for (s0, s1, s2) in [(0usize, 0, 0), (1, 1, 1), (0, 1, 2)] {
            for (open, close) in [('G', 'C'), ('A', 'U')] {
                let mut seq = String::new();
                let mut strct = String::new();
                let mut emit = |c: char, s: char, n: usize| {
                    for _ in 0..n {
                        seq.push(c);
                        strct.push(s);
                    }
                };
                emit(open, '(', 1);
                emit('A', '.', s0);
                emit(open, '(', 1);
                emit('A', '.', 1);
                emit(close, ')', 1);
                emit('A', '.', s1);
                emit(open, '(', 2);
                emit('G', '.', 1);
                emit(close, ')', 2);
                emit('A', '.', s2);
                emit(close, ')', 1);
                let annot = format!("junction 1 3-way {status}\n");
                variants.push(forest_from(&seq, &strct, &annot));
            }
        }
    }
    variants
}

/// Maximum non-crossing subset size by enumerating all subsets.
pub fn brute_force_max_noncrossing(ss: &SecondaryStructure) -> usize {
    let pairs: Vec<(usize, usize)> = ss.pairs().collect();
    assert!(pairs.len() <= 12, "exhaustive check caps at 12 pairs");
    let mut best = 0;
    for mask in 0u32..(1 << pairs.len()) {
        let chosen: Vec<_> = (0..pairs.len()).filter(|&k| mask & (1 << k) != 0).collect();
        let ok = chosen.iter().enumerate().all(|(a, &x)| {
            chosen[a + 1..]
                .iter()
                .all(|&y| !crosses(pairs[x], pairs[y]))
        });
        if ok {
            best = best.max(chosen.len());
        }
    }
    best
}

/// Random structure with deliberate crossings: scatter pairs at random.
pub fn random_crossing_structure(
    rng: &mut StdRng,
    len: usize,
    max_pairs: usize,
) -> SecondaryStructure {
    let mut free: Vec<usize> = (1..=len).collect();
    let mut pairs = Vec::new();
    let count = rng.gen_range(0..=max_pairs);
    for _ in 0..count {
        if free.len() < 2 {
            break;
        }
        let a = free.swap_remove(rng.gen_range(0..free.len()));
        let b = free.swap_remove(rng.gen_range(0..free.len()));
        pairs.push((a.min(b), a.max(b)));
    }
    SecondaryStructure::new(vec![Base::A; len], pairs).unwrap()
}

/// Random annotated forest small enough for the exhaustive oracle:
/// few nodes, short loops, one or two pair columns per helix.
pub fn random_tiny_forest(rng: &mut StdRng, allow_n: bool) -> StructureForest {
    let mut seq = String::new();
    let mut strct = String::new();
    let base = |rng: &mut StdRng| {
        if allow_n && rng.gen_bool(0.1) {
            'N'
        } else {
            LOOP_CHOICES[rng.gen_range(0..LOOP_CHOICES.len())]
        }
    };
    let tiny_loop = |rng: &mut StdRng, max: usize, seq: &mut String, strct: &mut String| {
        let n = rng.gen_range(0..=max);
        for _ in 0..n {
            seq.push(base(rng));
            strct.push('.');
        }
    };
    let tiny_stem =
        |rng: &mut StdRng,
         seq: &mut String,
         strct: &mut String,
         inner: &mut dyn FnMut(&mut StdRng, &mut String, &mut String)| {
            let pairs = rng.gen_range(1..=2);
            let mut closers = Vec::new();
            for _ in 0..pairs {
                let (a, b) = PAIR_CHOICES[rng.gen_range(0..PAIR_CHOICES.len())];
                seq.push(a);
                strct.push('(');
                closers.push(b);
            }
            inner(rng, seq, strct);
            for b in closers.into_iter().rev() {
                seq.push(b);
                strct.push(')');
            }
        };

    // Shape: stem over hairpin, stem over 3-way junction, or two stems.
    match rng.gen_range(0..4) {
        0 | 1 => {
            let mut hairpin = |rng: &mut StdRng, seq: &mut String, strct: &mut String| {
                let n = rng.gen_range(0..=3);
                for _ in 0..n {
                    seq.push(base(rng));
                    strct.push('.');
                }
            };
            tiny_stem(rng, &mut seq, &mut strct, &mut hairpin);
        }
        2 => {
            // 3-way junction under a one-pair entry helix.
            let (a, b) = PAIR_CHOICES[rng.gen_range(0..PAIR_CHOICES.len())];
            seq.push(a);
            strct.push('(');
            tiny_loop(rng, 2, &mut seq, &mut strct);
            for _ in 0..2 {
                let mut hairpin = |rng: &mut StdRng, seq: &mut String, strct: &mut String| {
                    let n = rng.gen_range(0..=2);
                    for _ in 0..n {
                        seq.push(base(rng));
                        strct.push('.');
                    }
                };
                tiny_stem(rng, &mut seq, &mut strct, &mut hairpin);
                tiny_loop(rng, 2, &mut seq, &mut strct);
            }
            seq.push(b);
            strct.push(')');
        }
        _ => {
            for _ in 0..2 {
                let mut hairpin = |rng: &mut StdRng, seq: &mut String, strct: &mut String| {
                    let n = rng.gen_range(0..=3);
                    for _ in 0..n {
                        seq.push(base(rng));
                        strct.push('.');
                    }
                };
                tiny_stem(rng, &mut seq, &mut strct, &mut hairpin);
            }
        }
    }
    let ss = parse_dotbracket(&seq, &strct).expect("tiny generator emits valid structures");
    let mut forest = StructureForest::build(&ss);
    random_annotations(rng, &mut forest);
    forest
}
