//! Morse decompositions of box graphs, limit sets and orbit classification.
//!
//! Morse sets are indexed from 1. An edge `j → i` of the Morse graph means some
//! graph path leaves `M_j` and reaches `M_i` without touching another Morse set.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::boxdyn::{BoxError, BoxGrid, BoxSet, Digraph, Sample};
use crate::conley::{attractor_from_neighborhood, condense, maximal_attractor, AttractorRepeller, ConleyError};
use crate::noise::ShiftedPath;
use crate::systems::{evolve_pullback, Cocycle, State, SystemError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorseError {
    #[error("attractor chain is empty")]
    EmptyChain,
    #[error("attractor chain is not strictly increasing at positions {lower} and {upper}")]
    NotNested { lower: usize, upper: usize },
    #[error("last attractor of the chain is not the maximal attractor")]
    NotMaximal,
    #[error("Morse sets {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("cycle between Morse sets {sets:?} along boxes {boxes:?}")]
    Cycle { sets: Vec<usize>, boxes: Vec<usize> },
    #[error("Morse graph edge {from} -> {to} points up the index order")]
    OrderViolation { from: usize, to: usize },
    #[error("box {node} has no predecessor inside the given set (step {step})")]
    NotBackwardInvariant { node: usize, step: usize },
    #[error("classification contradicts the ordering of Morse sets: {0}")]
    TheoremViolation(String),
    #[error(transparent)]
    Conley(#[from] ConleyError),
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone)]
pub struct MorseDecomposition {
    universe: usize,
    sets: Vec<BoxSet>,
    chain: Vec<AttractorRepeller>,
    graph: Digraph,
    boxes: Digraph,
    /// Box path realizing each Morse graph edge, keyed by 0-based indices.
    paths: BTreeMap<(usize, usize), Vec<usize>>,
}

/// Morse sets `M_i = A_i ∩ R_{i−1}` of an attractor chain, with `R_0 = A_n`.
/// A leading empty attractor is accepted and skipped.
pub fn morse_decomposition(graph: &Digraph, chain: &[AttractorRepeller]) -> Result<MorseDecomposition, MorseError> {
    let skip = chain.iter().take_while(|p| p.attractor.is_empty()).count().min(1);
    let chain = &chain[skip..];
    let last = chain.last().ok_or(MorseError::EmptyChain)?;
    for (i, w) in chain.windows(2).enumerate() {
        if !(w[0].attractor.is_subset(&w[1].attractor) && w[0].attractor != w[1].attractor) {
            return Err(MorseError::NotNested { lower: i + skip, upper: i + skip + 1 });
        }
    }
    if last.attractor != maximal_attractor(graph) {
        return Err(MorseError::NotMaximal);
    }
    let mut sets = Vec::with_capacity(chain.len());
    let mut prev_repeller = last.attractor.clone();
    for p in chain {
        sets.push(p.attractor.intersection(&prev_repeller));
        prev_repeller = p.repeller.clone();
    }
    let mut dec = MorseDecomposition::from_sets(graph, sets)?;
    dec.chain = chain.to_vec();
    Ok(dec)
}

/// The chain generated by the recurrent components in sink-first order. Its Morse
/// sets are exactly the recurrent components.
pub fn finest_chain(graph: &Digraph) -> Vec<AttractorRepeller> {
    let cond = condense(graph);
    let mut seeds = BoxSet::empty(graph.len());
    let mut chain = Vec::new();
    for c in cond.recurrent_order() {
        for &v in cond.members(c) {
            seeds.insert(v);
        }
        let u = graph.forward_reach(&seeds);
        chain.push(attractor_from_neighborhood(graph, &u).expect("reachable sets are forward-closed"));
    }
    chain
}

pub fn finest_decomposition(graph: &Digraph) -> Result<MorseDecomposition, MorseError> {
    let chain = finest_chain(graph);
    if chain.is_empty() {
        return MorseDecomposition::from_sets(graph, Vec::new());
    }
    morse_decomposition(graph, &chain)
}

impl MorseDecomposition {
    /// Builds the Morse graph for arbitrary pairwise disjoint sets.
    pub fn from_sets(graph: &Digraph, sets: Vec<BoxSet>) -> Result<Self, MorseError> {
        let n = graph.len();
        for (i, s) in sets.iter().enumerate() {
            if s.universe() != n {
                return Err(ConleyError::Universe { expected: n, got: s.universe() }.into());
            }
            for (j, t) in sets.iter().enumerate().skip(i + 1) {
                if !s.is_disjoint(t) {
                    return Err(MorseError::Overlap(i + 1, j + 1));
                }
            }
        }
        let mut owner = vec![usize::MAX; n];
        for (i, s) in sets.iter().enumerate() {
            for b in s.iter() {
                owner[b] = i;
            }
        }
        let mut edges = Vec::new();
        let mut paths = BTreeMap::new();
        for (j, s) in sets.iter().enumerate() {
            let mut parent = vec![usize::MAX; n];
            let mut queue: VecDeque<usize> = s.iter().collect();
            for b in s.iter() {
                parent[b] = b;
            }
            while let Some(v) = queue.pop_front() {
                for &w in graph.successors(v) {
                    if parent[w] != usize::MAX {
                        continue;
                    }
                    parent[w] = v;
                    match owner[w] {
                        i if i == usize::MAX => queue.push_back(w),
                        i => {
                            edges.push((j, i));
                            paths.entry((j, i)).or_insert_with(|| {
                                let mut p = vec![w];
                                let mut at = w;
                                while parent[at] != at {
                                    at = parent[at];
                                    p.push(at);
                                }
                                p.reverse();
                                p
                            });
                        }
                    }
                }
            }
        }
        Ok(Self {
            universe: n,
            graph: Digraph::from_edges(sets.len(), edges),
            boxes: graph.clone(),
            sets,
            chain: Vec::new(),
            paths,
        })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    /// `M_i` for `1 ≤ i ≤ len()`.
    pub fn morse_set(&self, i: usize) -> &BoxSet {
        &self.sets[i - 1]
    }

    pub fn sets(&self) -> &[BoxSet] {
        &self.sets
    }

    pub fn chain(&self) -> &[AttractorRepeller] {
        &self.chain
    }

    /// Morse graph edges `(j, i)` with 1-based indices.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.graph.edges().map(|(a, b)| (a + 1, b + 1)).collect()
    }

    /// Union of all Morse sets.
    pub fn union(&self) -> BoxSet {
        let mut out = BoxSet::empty(self.universe);
        for s in &self.sets {
            out.union_with(s);
        }
        out
    }

    /// 1-based index of the Morse set containing box `b`.
    pub fn index_of(&self, b: usize) -> Option<usize> {
        self.sets.iter().position(|s| s.contains(b)).map(|i| i + 1)
    }

    /// 1-based indices of the Morse sets meeting `s`.
    pub fn indices_meeting(&self, s: &BoxSet) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.sets[i].is_disjoint(s)).map(|i| i + 1).collect()
    }

    pub fn is_pairwise_disjoint(&self) -> bool {
        self.sets.iter().enumerate().all(|(i, s)| self.sets[i + 1..].iter().all(|t| s.is_disjoint(t)))
    }

    pub fn to_json(&self, grid: Option<&BoxGrid>, config_hash: &str) -> serde_json::Value {
        let sets: Vec<serde_json::Value> = self
            .sets
            .iter()
            .enumerate()
            .map(|(i, s)| {
                serde_json::json!({
                    "index": i + 1,
                    "boxes": s.to_vec(),
                    "representative": grid.and_then(|g| representative(g, s)),
                })
            })
            .collect();
        serde_json::json!({
            "config_hash": config_hash,
            "universe": self.universe,
            "morse_sets": sets,
            "edges": self.edges(),
        })
    }

    /// DOT rendering of the Morse graph; nodes carry box counts and the mean
    /// center of their boxes.
    pub fn write_dot<W: Write>(&self, mut out: W, grid: Option<&BoxGrid>, config_hash: &str) -> std::io::Result<()> {
        writeln!(out, "// config_hash={config_hash}")?;
        writeln!(out, "digraph morse {{")?;
        for (i, s) in self.sets.iter().enumerate() {
            let rep = grid
                .and_then(|g| representative(g, s))
                .map(|c| format!("\\nat ({})", c.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")))
                .unwrap_or_default();
            writeln!(out, "  M{} [label=\"M{}\\n{} boxes{}\"];", i + 1, i + 1, s.len(), rep)?;
        }
        for (j, i) in self.edges() {
            writeln!(out, "  M{j} -> M{i};")?;
        }
        writeln!(out, "}}")
    }
}

fn representative(grid: &BoxGrid, s: &BoxSet) -> Option<State> {
    if s.is_empty() || s.universe() != grid.len() {
        return None;
    }
    let mut acc = vec![0.0; grid.dim()];
    for b in s.iter() {
        for (a, v) in grid.center(b).into_iter().enumerate() {
            acc[a] += v;
        }
    }
    Some(acc.into_iter().map(|v| v / s.len() as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AcyclicityReport {
    pub morse_sets: usize,
    pub edges: Vec<(usize, usize)>,
}

/// Checks that the Morse graph has no cycle and that every edge runs from a higher
/// to a lower index.
pub fn verify_no_cycles(dec: &MorseDecomposition) -> Result<AcyclicityReport, MorseError> {
    let n = dec.len();
    // iterative three-color search
    let mut color = vec![0u8; n];
    let mut parent = vec![usize::MAX; n];
    for root in 0..n {
        if color[root] != 0 {
            continue;
        }
        color[root] = 1;
        let mut stack = vec![(root, 0usize)];
        while let Some(&mut (v, ref mut k)) = stack.last_mut() {
            let succ = dec.graph.successors(v);
            if *k < succ.len() {
                let w = succ[*k];
                *k += 1;
                match color[w] {
                    0 => {
                        color[w] = 1;
                        parent[w] = v;
                        stack.push((w, 0));
                    }
                    1 => {
                        let mut cyc = vec![v];
                        let mut at = v;
                        while at != w {
                            at = parent[at];
                            cyc.push(at);
                        }
                        cyc.reverse();
                        let mut boxes: Vec<usize> = Vec::new();
                        for (idx, &a) in cyc.iter().enumerate() {
                            let b = cyc[(idx + 1) % cyc.len()];
                            let p = &dec.paths[&(a, b)];
                            if let Some(&end) = boxes.last() {
                                let link = path_within(&dec.boxes, end, p[0], &dec.sets[a]);
                                boxes.extend_from_slice(&link[1..]);
                            }
                            boxes.extend_from_slice(&p[usize::from(!boxes.is_empty())..]);
                        }
                        let (first, last) = (boxes[0], *boxes.last().expect("nonempty"));
                        let close = path_within(&dec.boxes, last, first, &dec.sets[cyc[0]]);
                        boxes.extend_from_slice(&close[1..]);
                        return Err(MorseError::Cycle { sets: cyc.iter().map(|c| c + 1).collect(), boxes });
                    }
                    _ => {}
                }
            } else {
                color[v] = 2;
                stack.pop();
            }
        }
    }
    let edges = dec.edges();
    if let Some(&(from, to)) = edges.iter().find(|(j, i)| i >= j) {
        return Err(MorseError::OrderViolation { from, to });
    }
    Ok(AcyclicityReport { morse_sets: n, edges })
}

/// Shortest path from `a` to `b`, preferring one inside `within`. Falls back to
/// `[a, b]` when no path exists.
fn path_within(graph: &Digraph, a: usize, b: usize, within: &BoxSet) -> Vec<usize> {
    if a == b {
        return vec![a];
    }
    let full = BoxSet::full(graph.len());
    for allowed in [within, &full] {
        let mut parent = vec![usize::MAX; graph.len()];
        parent[a] = a;
        let mut queue = VecDeque::from([a]);
        while let Some(v) = queue.pop_front() {
            for &w in graph.successors(v) {
                if parent[w] == usize::MAX && (allowed.contains(w) || w == b) {
                    parent[w] = v;
                    if w == b {
                        let mut p = vec![b];
                        let mut at = b;
                        while at != a {
                            at = parent[at];
                            p.push(at);
                        }
                        p.reverse();
                        return p;
                    }
                    queue.push_back(w);
                }
            }
        }
    }
    vec![a, b]
}

/// Every box of `s` has a successor and a predecessor in `s`.
pub fn is_graph_invariant(graph: &Digraph, s: &BoxSet) -> bool {
    s.iter().all(|b| {
        graph.successors(b).iter().any(|&c| s.contains(c)) && graph.predecessors(b).iter().any(|&c| s.contains(c))
    })
}

/// Graph omega-limit of `d`: everything reachable from the recurrent boxes that `d`
/// reaches, minus boxes whose paths all terminate.
pub fn omega_limit_graph(graph: &Digraph, d: &BoxSet) -> BoxSet {
    let reach = graph.forward_reach(d);
    let cr = crate::conley::chain_recurrent_scc(graph);
    let endless = crate::conley::infinite_paths_within(graph, &BoxSet::full(graph.len()));
    graph.forward_reach(&reach.intersection(&cr)).intersection(&endless)
}

/// Box cover of `φ(s, θ_{−s}ω)D` for `s ∈ {T₀, T₀ + step, …, T}`.
pub fn omega_limit<S: Cocycle + ?Sized>(
    system: &S,
    grid: &BoxGrid,
    d: &[State],
    omega: &ShiftedPath<'_>,
    horizon: f64,
    settle: f64,
    step: f64,
) -> Result<BoxSet, MorseError> {
    if !(settle >= 0.0 && settle < horizon && step > 0.0) {
        return Err(BoxError::InvalidParameter(format!(
            "need 0 <= settle < horizon and step > 0 (got {settle}, {horizon}, {step})"
        ))
        .into());
    }
    if !omega.covers(-horizon, 0.0) {
        let (lo, hi) = omega.window();
        return Err(SystemError::from(crate::noise::NoiseError::OutOfWindow { t: -horizon, lo, hi }).into());
    }
    let mut out = BoxSet::empty(grid.len());
    let count = ((horizon - settle) / step + 1e-9).floor() as usize;
    for k in 0..=count {
        let s = settle + k as f64 * step;
        for x in d {
            let y = evolve_pullback(system, s, omega, x)?;
            let boxes = grid.boxes_containing(&y);
            if boxes.is_empty() {
                return Err(BoxError::OutsideDomain { point: y }.into());
            }
            for b in boxes {
                out.insert(b);
            }
        }
    }
    Ok(out)
}

/// A finite piece of an entire orbit around an anchor box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitSegment {
    pub tau: f64,
    pub universe: usize,
    /// `backward[k]` is the box at time `−kτ`; `backward[0]` is the anchor.
    pub backward: Vec<usize>,
    /// Closed-box covers of the forward states at times `kτ`, `k ≥ 0`.
    pub forward: Vec<Vec<usize>>,
    pub forward_states: Vec<State>,
    pub sample: Option<Sample>,
}

impl OrbitSegment {
    pub fn anchor(&self) -> usize {
        self.backward[0]
    }

    /// Evolves `x` (a point of the anchor box) forward `steps` times by `τ` on `omega`.
    pub fn extend_forward<S: Cocycle + ?Sized>(
        mut self,
        system: &S,
        grid: &BoxGrid,
        omega: &ShiftedPath<'_>,
        x: &[f64],
        steps: usize,
    ) -> Result<Self, MorseError> {
        let mut state = x.to_vec();
        let mut view = *omega;
        self.forward = vec![grid.boxes_containing(&state)];
        self.forward_states = vec![state.clone()];
        for _ in 0..steps {
            state = system.evolve(self.tau, &view, &state)?;
            view = view.shift(self.tau).map_err(SystemError::from)?;
            let cover = grid.boxes_containing(&state);
            if cover.is_empty() {
                return Err(BoxError::OutsideDomain { point: state }.into());
            }
            self.forward.push(cover);
            self.forward_states.push(state.clone());
        }
        Ok(self)
    }

    /// Boxes visited by the segment, backward and forward.
    pub fn boxes(&self) -> BoxSet {
        let mut out = BoxSet::from_indices(self.universe, self.backward.iter().copied());
        for cover in &self.forward {
            for &b in cover {
                out.insert(b);
            }
        }
        out
    }
}

/// Predecessor walk of length `steps` from `x`, always taking the lowest box id
/// inside `within`.
pub fn backward_orbit(
    graph: &Digraph,
    x: usize,
    within: &BoxSet,
    steps: usize,
    tau: f64,
) -> Result<OrbitSegment, MorseError> {
    if !within.contains(x) {
        return Err(MorseError::NotBackwardInvariant { node: x, step: 0 });
    }
    let mut walk = vec![x];
    let mut at = x;
    for step in 1..=steps {
        at = *graph
            .predecessors(at)
            .iter()
            .find(|&&p| within.contains(p))
            .ok_or(MorseError::NotBackwardInvariant { node: at, step })?;
        walk.push(at);
    }
    Ok(OrbitSegment {
        tau,
        universe: graph.len(),
        backward: walk,
        forward: Vec::new(),
        forward_states: Vec::new(),
        sample: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCover {
    pub cover: BoxSet,
    /// The segment was shorter than the settle length; the whole segment was used.
    pub short: bool,
}

/// Cover of the backward tail `{σ_{−kτ} : k ≥ settle}`.
pub fn alpha_limit(segment: &OrbitSegment, settle: usize) -> LimitCover {
    let short = segment.backward.len() <= settle;
    let from = if short { 0 } else { settle };
    LimitCover { cover: BoxSet::from_indices(segment.universe, segment.backward[from..].iter().copied()), short }
}

/// Cover of the forward tail `{σ_{kτ} : k ≥ settle}`.
pub fn forward_limit(segment: &OrbitSegment, settle: usize) -> LimitCover {
    let short = segment.forward.len() <= settle;
    let from = if short { 0 } else { settle };
    let mut cover = BoxSet::empty(segment.universe);
    for c in &segment.forward[from..] {
        for &b in c {
            cover.insert(b);
        }
    }
    LimitCover { cover, short }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub anchor: usize,
    /// Index of the Morse set holding the forward limit.
    pub p: Option<usize>,
    /// Index of the Morse set holding the backward limit.
    pub q: Option<usize>,
    pub resolved: bool,
    /// The whole segment lies in `M_p`.
    pub inside: bool,
}

/// Classifies a segment by the Morse sets its limit covers meet. Limits meeting
/// zero or several Morse sets leave the segment unresolved.
pub fn classify_orbit(
    dec: &MorseDecomposition,
    segment: &OrbitSegment,
    settle_back: usize,
    settle_forward: usize,
) -> Result<Classification, MorseError> {
    let omega = forward_limit(segment, settle_forward);
    let alpha = alpha_limit(segment, settle_back);
    let unique = |v: Vec<usize>| if v.len() == 1 { Some(v[0]) } else { None };
    let p = unique(dec.indices_meeting(&omega.cover));
    let q = unique(dec.indices_meeting(&alpha.cover));
    let resolved = p.is_some() && q.is_some() && !omega.short && !alpha.short;
    let inside = p.map(|p| segment.boxes().is_subset(dec.morse_set(p))).unwrap_or(false);
    let c = Classification { anchor: segment.anchor(), p, q, resolved, inside };
    if resolved {
        let (p, q) = (p.unwrap(), q.unwrap());
        if p > q {
            return Err(MorseError::TheoremViolation(format!("anchor {}: p = {p} > q = {q}", c.anchor)));
        }
        if p == q && !inside {
            return Err(MorseError::TheoremViolation(format!(
                "anchor {}: both limits in M_{p} but the segment leaves it",
                c.anchor
            )));
        }
    }
    Ok(c)
}

/// For segments where the forward limit of each lies in the Morse set holding the
/// backward limit of the previous one, returns the first forward index `j₀` and the
/// last backward index `j_l` after checking `j₀ ≤ j_l`.
pub fn verify_chain(segments: &[Classification]) -> Result<(usize, usize), MorseError> {
    let first = segments.first().ok_or(MorseError::EmptyChain)?;
    let mut ends = Vec::with_capacity(segments.len());
    for c in segments {
        match (c.p, c.q, c.resolved) {
            (Some(p), Some(q), true) => ends.push((p, q)),
            _ => return Err(MorseError::TheoremViolation(format!("anchor {} is unresolved", c.anchor))),
        }
    }
    for (k, w) in ends.windows(2).enumerate() {
        if w[0].1 != w[1].0 {
            return Err(MorseError::TheoremViolation(format!(
                "segments {k} and {} do not chain: M_{} vs M_{}",
                k + 1,
                w[0].1,
                w[1].0
            )));
        }
    }
    let (j0, jl) = (ends[0].0, ends[ends.len() - 1].1);
    if j0 > jl {
        return Err(MorseError::TheoremViolation(format!(
            "chain starting at anchor {} runs up from M_{j0} to M_{jl}",
            first.anchor
        )));
    }
    let all_inside = segments.iter().all(|c| c.inside);
    if (j0 == jl) != all_inside {
        return Err(MorseError::TheoremViolation("chain endpoints equal but a segment leaves its Morse set".into()));
    }
    Ok((j0, jl))
}

/// Rows `anchor,p,q,resolved`; unresolved indices are left empty.
pub fn write_classification_csv<W: Write>(
    mut out: W,
    rows: &[Classification],
    config_hash: &str,
) -> std::io::Result<()> {
    writeln!(out, "# config_hash={config_hash}")?;
    writeln!(out, "anchor,p,q,resolved")?;
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in rows {
        writeln!(out, "{},{},{},{}", c.anchor, opt(c.p), opt(c.q), c.resolved)?;
    }
    Ok(())
}
