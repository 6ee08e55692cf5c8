//! Finite domains and the substitution multigraph.
//!
//! Vertices are the sentences of a finite [`Domain`]; every in-domain
//! substitution instance `(α(x, y0), α(x, y1))` of a pair is one undirected
//! [`Edge`]. Parallel edges between the same two sentences are kept: two
//! different pairs linking the same endpoints is exactly what makes a loop.
//!
//! [`components`] partitions the domain and fixes, for each state, a BFS
//! tree path from its component's reference state. [`fundamental_cycles`]
//! turns every non-tree edge into a signed pair-count vector.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::strings::{Context, Dictionary, PairFamily, Sentence, WordId};

/// Default cap on the number of enumerated sentences.
pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DomainKind {
    /// All sentences of length `1..=max_len`.
    LengthBounded(usize),
    /// All sentences of exactly this length.
    FixedLength(usize),
    Explicit(Vec<Sentence>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub dictionary: Dictionary,
}

impl DomainSpec {
    pub fn new(kind: DomainKind, dictionary: Dictionary) -> Result<Self> {
        match &kind {
            DomainKind::LengthBounded(0) | DomainKind::FixedLength(0) => {
                return Err(Error::InvalidDomain(
                    "length bound must be at least 1".into(),
                ))
            }
            DomainKind::Explicit(list) => {
                for s in list {
                    if s.is_empty() {
                        return Err(Error::EmptySentence("explicit domain member"));
                    }
                    dictionary.check(s)?;
                }
            }
            _ => {}
        }
        Ok(DomainSpec { kind, dictionary })
    }

    pub fn length_bounded(dictionary: Dictionary, max_len: usize) -> Result<Self> {
        Self::new(DomainKind::LengthBounded(max_len), dictionary)
    }

    pub fn fixed_length(dictionary: Dictionary, len: usize) -> Result<Self> {
        Self::new(DomainKind::FixedLength(len), dictionary)
    }

    pub fn explicit(dictionary: Dictionary, sentences: Vec<Sentence>) -> Result<Self> {
        Self::new(DomainKind::Explicit(sentences), dictionary)
    }

    /// Membership test that does not need the enumerated domain.
    pub fn contains(&self, s: &Sentence) -> bool {
        if s.is_empty() || self.dictionary.check(s).is_err() {
            return false;
        }
        match &self.kind {
            DomainKind::LengthBounded(max) => s.len() <= *max,
            DomainKind::FixedLength(len) => s.len() == *len,
            DomainKind::Explicit(list) => list.contains(s),
        }
    }

    /// Human-readable truncation bound, e.g. `length_bounded(4)`.
    pub fn describe(&self) -> String {
        match &self.kind {
            DomainKind::LengthBounded(n) => format!("length_bounded({n})"),
            DomainKind::FixedLength(n) => format!("fixed_length({n})"),
            DomainKind::Explicit(list) => format!("explicit({})", list.len()),
        }
    }

    fn size(&self) -> u128 {
        let d = self.dictionary.len() as u128;
        let pow = |l: usize| d.checked_pow(l as u32).unwrap_or(u128::MAX);
        match &self.kind {
            DomainKind::LengthBounded(max) => (1..=*max)
                .map(pow)
                .fold(0u128, |acc, x| acc.saturating_add(x)),
            DomainKind::FixedLength(len) => pow(*len),
            DomainKind::Explicit(list) => list.len() as u128,
        }
    }
}

/// A finite set of sentences in (length, lexicographic) order, with an index.
#[derive(Debug, Clone, Default)]
pub struct Domain {
    sentences: Vec<Sentence>,
    index: HashMap<Sentence, usize>,
}

impl Domain {
    /// Sorts and deduplicates; empty sentences are rejected.
    pub fn from_sentences(mut sentences: Vec<Sentence>) -> Result<Self> {
        if sentences.iter().any(Sentence::is_empty) {
            return Err(Error::EmptySentence("domain member"));
        }
        sentences.sort();
        sentences.dedup();
        let index = sentences
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Domain { sentences, index })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn sentence(&self, i: usize) -> &Sentence {
        &self.sentences[i]
    }

    pub fn index_of(&self, s: &Sentence) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn contains(&self, s: &Sentence) -> bool {
        self.index.contains_key(s)
    }
}

/// Enumerates the domain in (length, lexicographic) order.
pub fn enumerate_domain(spec: &DomainSpec, budget: usize) -> Result<Domain> {
    let requested = spec.size();
    if requested > budget as u128 {
        return Err(Error::DomainBudget { requested, budget });
    }
    let words = spec.dictionary.len() as WordId;
    let mut out = Vec::with_capacity(requested as usize);
    let lengths = match &spec.kind {
        DomainKind::LengthBounded(max) => 1..=*max,
        DomainKind::FixedLength(len) => *len..=*len,
        DomainKind::Explicit(list) => return Domain::from_sentences(list.clone()),
    };
    for len in lengths {
        let mut ids = vec![0 as WordId; len];
        'odometer: loop {
            out.push(Sentence::new(ids.clone()));
            for pos in (0..len).rev() {
                ids[pos] += 1;
                if ids[pos] < words {
                    continue 'odometer;
                }
                ids[pos] = 0;
            }
            break;
        }
    }
    Domain::from_sentences(out)
}

/// One substitution instance: `from = α(context, y0)`, `to = α(context, y1)`.
///
/// Traversing `from → to` is orientation σ = 0, `to → from` is σ = 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub pair: usize,
    pub context: Context,
}

/// Direction in which an [`Edge`] is traversed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// σ = 0: `y0` replaced by `y1`.
    Forward,
    /// σ = 1: `y1` replaced by `y0`.
    Backward,
}

impl Orientation {
    pub fn sigma(self) -> u8 {
        match self {
            Orientation::Forward => 0,
            Orientation::Backward => 1,
        }
    }

    /// The path-count contribution `2σ − 1`.
    pub fn sign(self) -> i64 {
        match self {
            Orientation::Forward => -1,
            Orientation::Backward => 1,
        }
    }
}

/// Every in-domain substitution instance, ordered by source state, then pair,
/// then occurrence position.
pub fn build_graph(domain: &Domain, pairs: &PairFamily) -> Vec<Edge> {
    let mut edges = Vec::new();
    for (from, s) in domain.sentences().iter().enumerate() {
        for (pair, p) in pairs.iter().enumerate() {
            for pos in s.positions(p.y0()) {
                let t = s.splice(pos, p.y0().len(), p.y1());
                if let Some(to) = domain.index_of(&t) {
                    let ids = s.ids();
                    edges.push(Edge {
                        from,
                        to,
                        pair,
                        context: Context::new(
                            Sentence::new(ids[..pos].to_vec()),
                            Sentence::new(ids[pos + p.y0().len()..].to_vec()),
                        ),
                    });
                }
            }
        }
    }
    edges
}

/// Edge from a BFS parent to its child.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeStep {
    pub parent: usize,
    pub edge: usize,
    pub orientation: Orientation,
}

/// Connected components of the substitution multigraph with a BFS spanning
/// forest rooted at each component's least state.
#[derive(Debug, Clone)]
pub struct ComponentPartition {
    components: Vec<Vec<usize>>,
    bfs_order: Vec<Vec<usize>>,
    component_of: Vec<usize>,
    tree: Vec<Option<TreeStep>>,
}

impl ComponentPartition {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Member state indices of component `c`, ascending.
    pub fn members(&self, c: usize) -> &[usize] {
        &self.components[c]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    /// Members of `c` in BFS discovery order (parents before children).
    pub fn bfs_order(&self, c: usize) -> &[usize] {
        &self.bfs_order[c]
    }

    pub fn reference(&self, c: usize) -> usize {
        self.components[c][0]
    }

    pub fn component_of(&self, state: usize) -> usize {
        self.component_of[state]
    }

    pub fn tree_step(&self, state: usize) -> Option<TreeStep> {
        self.tree[state]
    }

    pub fn is_tree_edge(&self, edge_index: usize, edge: &Edge) -> bool {
        let hit = |s: usize| matches!(self.tree[s], Some(t) if t.edge == edge_index);
        hit(edge.to) || hit(edge.from)
    }

    /// The path π_s from the reference state to `state`, as tree steps in
    /// traversal order.
    pub fn path_to(&self, state: usize) -> Vec<TreeStep> {
        let mut steps = Vec::new();
        let mut cur = state;
        while let Some(step) = self.tree[cur] {
            steps.push(step);
            cur = step.parent;
        }
        steps.reverse();
        steps
    }

    /// Signed pair counts `U_i(π_s)` for every member of the given
    /// components, indexed by state. States outside are `None`.
    pub fn path_counts(
        &self,
        edges: &[Edge],
        selection: &[usize],
        n_pairs: usize,
    ) -> Vec<Option<Vec<i64>>> {
        let mut out: Vec<Option<Vec<i64>>> = vec![None; self.component_of.len()];
        for &c in selection {
            for &s in &self.bfs_order[c] {
                let counts = match self.tree[s] {
                    None => vec![0; n_pairs],
                    Some(step) => {
                        let mut v = out[step.parent]
                            .clone()
                            .expect("BFS order visits parents first");
                        v[edges[step.edge].pair] += step.orientation.sign();
                        v
                    }
                };
                out[s] = Some(counts);
            }
        }
        out
    }
}

/// BFS partition of the domain; components are ordered by their reference
/// (least) state and the forest follows edge-list order.
pub fn components(domain: &Domain, edges: &[Edge]) -> ComponentPartition {
    let n = domain.len();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        adjacency[e.from].push(i);
        adjacency[e.to].push(i);
    }
    let mut component_of = vec![usize::MAX; n];
    let mut tree = vec![None; n];
    let mut components = Vec::new();
    let mut bfs_order = Vec::new();
    let mut queue = VecDeque::new();
    for root in 0..n {
        if component_of[root] != usize::MAX {
            continue;
        }
        let c = components.len();
        component_of[root] = c;
        queue.push_back(root);
        let mut order = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &ei in &adjacency[v] {
                let e = &edges[ei];
                let (next, orientation) = if e.from == v {
                    (e.to, Orientation::Forward)
                } else {
                    (e.from, Orientation::Backward)
                };
                if component_of[next] == usize::MAX {
                    component_of[next] = c;
                    tree[next] = Some(TreeStep {
                        parent: v,
                        edge: ei,
                        orientation,
                    });
                    queue.push_back(next);
                }
            }
        }
        let mut members = order.clone();
        members.sort_unstable();
        components.push(members);
        bfs_order.push(order);
    }
    ComponentPartition {
        components,
        bfs_order,
        component_of,
        tree,
    }
}

/// Signed pair counts of one fundamental cycle, indexed by position in the
/// active-pair list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopVector {
    pub counts: Vec<i64>,
    /// The non-tree edge that closes the cycle.
    pub edge: usize,
}

impl LoopVector {
    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FundamentalCycles {
    /// Pair indices with at least one edge inside the selected components.
    pub active_pairs: Vec<usize>,
    pub loops: Vec<LoopVector>,
}

/// Active pairs and one loop vector per non-tree edge of the selected
/// components.
///
/// The loop for non-tree edge `e` runs `π_to`, then `e` backwards (σ = 1),
/// then `π_from` reversed, so its vector is `U(π_to) + δ_pair − U(π_from)`.
pub fn fundamental_cycles(
    partition: &ComponentPartition,
    edges: &[Edge],
    selection: &[usize],
    n_pairs: usize,
) -> FundamentalCycles {
    let selected: HashSet<usize> = selection.iter().copied().collect();
    let inside = |e: &Edge| selected.contains(&partition.component_of(e.from));
    let mut is_active = vec![false; n_pairs];
    for e in edges.iter().filter(|e| inside(e)) {
        is_active[e.pair] = true;
    }
    let active_pairs: Vec<usize> = (0..n_pairs).filter(|&i| is_active[i]).collect();
    let mut position = vec![usize::MAX; n_pairs];
    for (k, &i) in active_pairs.iter().enumerate() {
        position[i] = k;
    }
    let counts = partition.path_counts(edges, selection, n_pairs);
    let mut loops = Vec::new();
    for (ei, e) in edges.iter().enumerate() {
        if !inside(e) || partition.is_tree_edge(ei, e) {
            continue;
        }
        let to = counts[e.to].as_ref().expect("selected state");
        let from = counts[e.from].as_ref().expect("selected state");
        let mut v = vec![0i64; active_pairs.len()];
        for (k, &i) in active_pairs.iter().enumerate() {
            v[k] = to[i] - from[i];
        }
        v[position[e.pair]] += 1;
        loops.push(LoopVector {
            counts: v,
            edge: ei,
        });
    }
    FundamentalCycles {
        active_pairs,
        loops,
    }
}

/// The component of `start` inside the domain described by `spec`, explored
/// by BFS over substitutions without enumerating the whole domain. The
/// result is closed under in-domain substitutions, so graph, partition and
/// model built on it coincide with the restriction of the full construction.
pub fn reachable_component(
    spec: &DomainSpec,
    pairs: &PairFamily,
    start: &Sentence,
    budget: usize,
) -> Result<Domain> {
    if !spec.contains(start) {
        return Err(Error::InvalidDomain(format!(
            "start sentence {} is outside {}",
            spec.dictionary.render(start),
            spec.describe()
        )));
    }
    let mut seen: HashSet<Sentence> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start.clone());
    while let Some(s) = queue.pop_front() {
        for p in pairs {
            for (from, to) in [(p.y0(), p.y1()), (p.y1(), p.y0())] {
                for pos in s.positions(from) {
                    let t = s.splice(pos, from.len(), to);
                    if spec.contains(&t) && !seen.contains(&t) {
                        if seen.len() >= budget {
                            return Err(Error::DomainBudget {
                                requested: seen.len() as u128 + 1,
                                budget,
                            });
                        }
                        seen.insert(t.clone());
                        queue.push_back(t);
                    }
                }
            }
        }
    }
    Domain::from_sentences(seen.into_iter().collect())
}
