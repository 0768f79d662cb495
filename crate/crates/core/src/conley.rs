//! Graph-level Conley theory: condensation, attractor–repeller pairs and the
//! chain-recurrent set.
//!
//! On a finite graph an attractor is `A = ∩ₙ imageⁿ(U)` for a forward-closed `U`.
//! Its repeller `R` is the set of boxes admitting an infinite path that never
//! enters `U`, and the basin is the complement of `R`. With these definitions the
//! union of recurrent strongly connected components equals `∩(A ∪ R)` over all
//! attractors, which [`oracle`] checks by brute force on small graphs.

use std::collections::BTreeSet;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;
use thiserror::Error;

use crate::boxdyn::{BoxSet, Digraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConleyError {
    #[error("neighborhood is not forward-closed: edge {from} -> {to} leaves it")]
    NotForwardClosed { from: usize, to: usize },
    #[error("more than {cap} attractors; coarsen the grid or raise the cap")]
    CapExceeded { cap: usize },
    #[error("empty attractor list")]
    EmptyList,
    #[error("box set over {got} boxes used with a graph of {expected}")]
    Universe { expected: usize, got: usize },
}

/// Strongly connected components and the acyclic graph between them.
///
/// Components are numbered by their smallest box id.
#[derive(Debug, Clone)]
pub struct Condensation {
    component: Vec<usize>,
    members: Vec<Vec<usize>>,
    recurrent: Vec<bool>,
    dag: Digraph,
}

pub fn condense(graph: &Digraph) -> Condensation {
    let n = graph.len();
    let mut pg = DiGraph::<(), ()>::with_capacity(n, graph.edge_count());
    for _ in 0..n {
        pg.add_node(());
    }
    for (a, b) in graph.edges() {
        pg.add_edge(NodeIndex::new(a), NodeIndex::new(b), ());
    }
    let mut members: Vec<Vec<usize>> = tarjan_scc(&pg)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    members.sort_unstable_by_key(|m| m[0]);
    let mut component = vec![0; n];
    for (c, m) in members.iter().enumerate() {
        for &v in m {
            component[v] = c;
        }
    }
    let recurrent = members.iter().map(|m| m.len() > 1 || graph.has_edge(m[0], m[0])).collect();
    let dag = Digraph::from_edges(
        members.len(),
        graph.edges().map(|(a, b)| (component[a], component[b])).filter(|(a, b)| a != b),
    );
    Condensation { component, members, recurrent, dag }
}

impl Condensation {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.component[v]
    }

    pub fn members(&self, c: usize) -> &[usize] {
        &self.members[c]
    }

    pub fn is_recurrent(&self, c: usize) -> bool {
        self.recurrent[c]
    }

    pub fn dag(&self) -> &Digraph {
        &self.dag
    }

    pub fn member_set(&self, c: usize) -> BoxSet {
        BoxSet::from_indices(self.component.len(), self.members[c].iter().copied())
    }

    /// Recurrent components in a topological order of reachability with sinks
    /// first; ties go to the component with the smaller box id.
    pub fn recurrent_order(&self) -> Vec<usize> {
        let rec: Vec<usize> = (0..self.len()).filter(|&c| self.recurrent[c]).collect();
        let below = self.recurrent_reach();
        let mut placed = vec![false; self.len()];
        let mut order = Vec::with_capacity(rec.len());
        while order.len() < rec.len() {
            let next = rec
                .iter()
                .copied()
                .find(|&c| !placed[c] && below[c].iter().all(|&d| d == c || placed[d]))
                .expect("reachability between components is acyclic");
            placed[next] = true;
            order.push(next);
        }
        order
    }

    /// For each component, the recurrent components reachable from it (itself included
    /// when recurrent).
    fn recurrent_reach(&self) -> Vec<BTreeSet<usize>> {
        let mut out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.len()];
        // Components numbered by smallest box are not topologically sorted, so
        // compute a post-order first.
        for c in self.post_order() {
            let mut s = BTreeSet::new();
            if self.recurrent[c] {
                s.insert(c);
            }
            for &d in self.dag.successors(c) {
                s.extend(out[d].iter().copied());
            }
            out[c] = s;
        }
        out
    }

    fn post_order(&self) -> Vec<usize> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut stack = vec![(root, 0usize)];
            while let Some(&mut (v, ref mut i)) = stack.last_mut() {
                let succ = self.dag.successors(v);
                if *i < succ.len() {
                    let w = succ[*i];
                    *i += 1;
                    if !seen[w] {
                        seen[w] = true;
                        stack.push((w, 0));
                    }
                } else {
                    order.push(v);
                    stack.pop();
                }
            }
        }
        order
    }
}

/// Union of all recurrent components.
pub fn chain_recurrent_scc(graph: &Digraph) -> BoxSet {
    let cond = condense(graph);
    let mut out = BoxSet::empty(graph.len());
    for c in (0..cond.len()).filter(|&c| cond.is_recurrent(c)) {
        for &v in cond.members(c) {
            out.insert(v);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttractorRepeller {
    pub neighborhood: BoxSet,
    pub attractor: BoxSet,
    pub basin: BoxSet,
    pub repeller: BoxSet,
}

impl AttractorRepeller {
    /// Both `A` and `R` nonempty.
    pub fn is_nontrivial(&self) -> bool {
        !self.attractor.is_empty() && !self.repeller.is_empty()
    }
}

/// Boxes that admit an infinite path inside `allowed`.
pub(crate) fn infinite_paths_within(graph: &Digraph, allowed: &BoxSet) -> BoxSet {
    let mut keep = allowed.clone();
    let mut out_deg: Vec<usize> =
        (0..graph.len()).map(|v| graph.successors(v).iter().filter(|&&w| allowed.contains(w)).count()).collect();
    let mut stack: Vec<usize> = allowed.iter().filter(|&v| out_deg[v] == 0).collect();
    while let Some(v) = stack.pop() {
        if !keep.contains(v) {
            continue;
        }
        keep.remove(v);
        for &u in graph.predecessors(v) {
            if keep.contains(u) {
                out_deg[u] -= 1;
                if out_deg[u] == 0 {
                    stack.push(u);
                }
            }
        }
    }
    keep
}

fn check_universe(graph: &Digraph, s: &BoxSet) -> Result<(), ConleyError> {
    if s.universe() != graph.len() {
        return Err(ConleyError::Universe { expected: graph.len(), got: s.universe() });
    }
    Ok(())
}

/// Attractor, basin and repeller of a forward-closed neighborhood `U`.
///
/// Boxes with escaping images are left out of `A` and `R`, and so are boxes
/// without an infinite forward path.
pub fn attractor_from_neighborhood(graph: &Digraph, u: &BoxSet) -> Result<AttractorRepeller, ConleyError> {
    check_universe(graph, u)?;
    for a in u.iter() {
        if let Some(&b) = graph.successors(a).iter().find(|&&b| !u.contains(b)) {
            return Err(ConleyError::NotForwardClosed { from: a, to: b });
        }
    }
    let mut a = u.clone();
    loop {
        let next = graph.image(&a);
        if next == a {
            break;
        }
        a = next;
    }
    a.intersect_with(&infinite_paths_within(graph, &BoxSet::full(graph.len())));
    a.difference_with(graph.escaping());
    let allowed = u.complement().difference(graph.escaping());
    let repeller = infinite_paths_within(graph, &allowed);
    Ok(AttractorRepeller { neighborhood: u.clone(), basin: repeller.complement(), attractor: a, repeller })
}

/// Every attractor of the graph, one per set of recurrent components closed under
/// reachability, sorted by size and then lexicographically. Includes `∅` and the
/// maximal attractor.
pub fn enumerate_attractors(graph: &Digraph, cap: usize) -> Result<Vec<AttractorRepeller>, ConleyError> {
    let cond = condense(graph);
    let order = cond.recurrent_order();
    let below = cond.recurrent_reach();
    let mut chosen: Vec<Vec<usize>> = Vec::new();
    let mut current = Vec::new();
    let mut included = vec![false; cond.len()];
    enumerate_down_sets(&order, &below, 0, &mut included, &mut current, &mut chosen, cap)?;

    let mut out = Vec::with_capacity(chosen.len());
    for comps in chosen {
        let mut seeds = BoxSet::empty(graph.len());
        for c in comps {
            for &v in cond.members(c) {
                seeds.insert(v);
            }
        }
        let u = graph.forward_reach(&seeds);
        out.push(attractor_from_neighborhood(graph, &u)?);
    }
    out.sort_by(|x, y| {
        x.attractor.len().cmp(&y.attractor.len()).then_with(|| x.attractor.to_vec().cmp(&y.attractor.to_vec()))
    });
    out.dedup_by(|x, y| x.attractor == y.attractor);
    Ok(out)
}

fn enumerate_down_sets(
    order: &[usize],
    below: &[BTreeSet<usize>],
    i: usize,
    included: &mut [bool],
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    cap: usize,
) -> Result<(), ConleyError> {
    if i == order.len() {
        if out.len() == cap {
            return Err(ConleyError::CapExceeded { cap });
        }
        out.push(current.clone());
        return Ok(());
    }
    let c = order[i];
    enumerate_down_sets(order, below, i + 1, included, current, out, cap)?;
    if below[c].iter().all(|&d| d == c || included[d]) {
        included[c] = true;
        current.push(c);
        enumerate_down_sets(order, below, i + 1, included, current, out, cap)?;
        current.pop();
        included[c] = false;
    }
    Ok(())
}

/// The maximal attractor: everything reachable from a recurrent component.
pub fn maximal_attractor(graph: &Digraph) -> BoxSet {
    graph
        .forward_reach(&chain_recurrent_scc(graph))
        .intersection(&infinite_paths_within(graph, &BoxSet::full(graph.len())))
        .difference(graph.escaping())
}

/// `∩(A ∪ R)` over the given pairs.
pub fn chain_recurrent_lattice(pairs: &[AttractorRepeller]) -> Result<BoxSet, ConleyError> {
    let first = pairs.first().ok_or(ConleyError::EmptyList)?;
    let mut out = BoxSet::full(first.attractor.universe());
    for p in pairs {
        out.intersect_with(&p.attractor.union(&p.repeller));
    }
    Ok(out)
}

pub fn attractors_json(pairs: &[AttractorRepeller], config_hash: &str) -> serde_json::Value {
    let list: Vec<serde_json::Value> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            serde_json::json!({
                "index": i,
                "U": p.neighborhood.to_vec(),
                "A": p.attractor.to_vec(),
                "basin": p.basin.to_vec(),
                "R": p.repeller.to_vec(),
            })
        })
        .collect();
    serde_json::json!({
        "config_hash": config_hash,
        "boxes": pairs.first().map(|p| p.attractor.universe()).unwrap_or(0),
        "count": pairs.len(),
        "attractors": list,
    })
}

/// Independent brute-force checks for small graphs.
pub mod oracle {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Boxes lying on a cycle, found by a search from each box.
    pub fn recurrent_boxes(graph: &Digraph) -> BoxSet {
        let n = graph.len();
        let mut out = BoxSet::empty(n);
        for v in 0..n {
            let start = BoxSet::from_indices(n, graph.successors(v).iter().copied());
            if graph.forward_reach(&start).contains(v) {
                out.insert(v);
            }
        }
        out
    }

    /// Attractor–repeller pairs of every forward-closed subset. Exponential; `n ≤ 16`.
    pub fn all_pairs(graph: &Digraph) -> Vec<AttractorRepeller> {
        let n = graph.len();
        assert!(n <= 16, "brute force limited to 16 nodes");
        let mut out = Vec::new();
        for mask in 0u32..(1 << n) {
            let u = BoxSet::from_indices(n, (0..n).filter(|&i| mask >> i & 1 == 1));
            if let Ok(p) = attractor_from_neighborhood(graph, &u) {
                out.push(p);
            }
        }
        out
    }

    /// A seeded random digraph with `1..=max_nodes` nodes.
    pub fn random_digraph(seed: u64, max_nodes: usize) -> Digraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=max_nodes);
        let p = rng.gen_range(0.05..0.45);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if rng.gen_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        Digraph::from_edges(n, edges)
    }

    #[derive(Debug, Clone, PartialEq, Eq, Serialize)]
    pub struct LatticeCase {
        pub seed: u64,
        pub nodes: usize,
        pub edges: usize,
        pub forward_closed_sets: usize,
        pub lattice_equals_scc: bool,
        pub enumeration_matches: bool,
    }

    /// Compares the lattice intersection over all forward-closed sets with the
    /// recurrent boxes, and the enumerated attractors with the brute-force ones.
    pub fn check_lattice(seed: u64, max_nodes: usize) -> LatticeCase {
        let g = random_digraph(seed, max_nodes);
        let pairs = all_pairs(&g);
        let lattice = chain_recurrent_lattice(&pairs).expect("the full set is always forward-closed");
        let scc = chain_recurrent_scc(&g);
        let brute: BTreeSet<Vec<usize>> = pairs.iter().map(|p| p.attractor.to_vec()).collect();
        let enumerated: BTreeSet<Vec<usize>> = enumerate_attractors(&g, 1 << 16)
            .map(|v| v.iter().map(|p| p.attractor.to_vec()).collect())
            .unwrap_or_default();
        LatticeCase {
            seed,
            nodes: g.len(),
            edges: g.edge_count(),
            forward_closed_sets: pairs.len(),
            lattice_equals_scc: lattice == scc && scc == recurrent_boxes(&g),
            enumeration_matches: brute == enumerated,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cycle_tail() -> Digraph {
        Digraph::from_edges(4, [(0, 1), (1, 2), (2, 0), (3, 0)])
    }

    fn set(n: usize, ids: &[usize]) -> BoxSet {
        BoxSet::from_indices(n, ids.iter().copied())
    }

    #[test]
    fn condensation_examples() {
        let c = condense(&cycle_tail());
        assert_eq!(c.len(), 2);
        assert_eq!(c.members(0), &[0, 1, 2]);
        assert!(c.is_recurrent(0));
        assert!(!c.is_recurrent(1));
        assert!(c.dag().has_edge(1, 0));

        let s = condense(&Digraph::from_edges(2, [(0, 0), (0, 1)]));
        assert!(s.is_recurrent(0) && !s.is_recurrent(1));

        let dag = condense(&Digraph::from_edges(4, [(0, 1), (1, 2), (0, 3)]));
        assert!((0..dag.len()).all(|c| !dag.is_recurrent(c)));
        assert_eq!(chain_recurrent_scc(&cycle_tail()).to_vec(), vec![0, 1, 2]);
    }

    #[test]
    fn cycle_tail_attractors() {
        let ars = enumerate_attractors(&cycle_tail(), 100).unwrap();
        assert_eq!(ars.len(), 2);
        assert!(ars[0].attractor.is_empty());
        assert_eq!(ars[1].attractor.to_vec(), vec![0, 1, 2]);
        assert_eq!(ars[1].basin.len(), 4);
        assert!(ars[1].repeller.is_empty());
    }

    #[test]
    fn contracting_fixed_point() {
        let g = Digraph::from_edges(3, [(0, 1), (2, 1), (1, 1)]);
        let ars = enumerate_attractors(&g, 10).unwrap();
        assert_eq!(ars.len(), 2);
        assert_eq!(ars[1].attractor.to_vec(), vec![1]);
    }

    #[test]
    fn chain_neighborhood() {
        let g = Digraph::from_edges(4, [(3, 2), (2, 1), (1, 1)]);
        let ar = attractor_from_neighborhood(&g, &set(4, &[1, 2, 3])).unwrap();
        assert_eq!(ar.attractor.to_vec(), vec![1]);
        assert_eq!(ar.basin.to_vec(), vec![0, 1, 2, 3]);
        assert!(ar.repeller.is_empty());
        let err = attractor_from_neighborhood(&g, &set(4, &[2, 3])).unwrap_err();
        assert_eq!(err, ConleyError::NotForwardClosed { from: 2, to: 1 });
    }

    #[test]
    fn must_basin_keeps_the_lattice_identity() {
        // 0 can stay put or move to 1; {0} is in the repeller of A = {1}
        let g = Digraph::from_edges(2, [(0, 0), (0, 1), (1, 1)]);
        let ar = attractor_from_neighborhood(&g, &set(2, &[1])).unwrap();
        assert_eq!(ar.repeller.to_vec(), vec![0]);
        let all = enumerate_attractors(&g, 10).unwrap();
        assert_eq!(chain_recurrent_lattice(&all).unwrap(), chain_recurrent_scc(&g));
    }

    #[test]
    fn trivial_pairs_constrain_nothing() {
        let g = Digraph::from_edges(3, [(0, 1), (1, 0), (2, 2)]);
        let empty = attractor_from_neighborhood(&g, &BoxSet::empty(3)).unwrap();
        let full = attractor_from_neighborhood(&g, &BoxSet::full(3)).unwrap();
        assert_eq!((empty.repeller.len(), full.attractor.len()), (3, 3));
        let lat = chain_recurrent_lattice(&[empty, full]).unwrap();
        assert_eq!(lat.len(), 3);
        assert!(chain_recurrent_lattice(&[]).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        // k isolated self-loops give 2^k attractors
        let g = Digraph::from_edges(5, (0..5).map(|i| (i, i)));
        assert_eq!(enumerate_attractors(&g, 32).unwrap().len(), 32);
        assert_eq!(enumerate_attractors(&g, 31).unwrap_err(), ConleyError::CapExceeded { cap: 31 });
    }

    #[test]
    fn recurrent_order_puts_sinks_first() {
        // pitchfork skeleton: 1 is the source, 0 and 2 are sinks
        let g = Digraph::from_edges(3, [(0, 0), (1, 1), (2, 2), (1, 0), (1, 2)]);
        let c = condense(&g);
        let order: Vec<usize> = c.recurrent_order().iter().map(|&k| c.members(k)[0]).collect();
        assert_eq!(order, vec![0, 2, 1]);
    }

    #[test]
    fn json_has_index_arrays() {
        let ars = enumerate_attractors(&cycle_tail(), 10).unwrap();
        let j = attractors_json(&ars, "abc");
        assert_eq!(j["count"], 2);
        assert_eq!(j["attractors"][1]["A"], serde_json::json!([0, 1, 2]));
        assert_eq!(j["config_hash"], "abc");
    }

    #[test]
    fn lattice_oracle_small_sample() {
        for seed in 0..40 {
            let case = oracle::check_lattice(seed, 8);
            assert!(case.lattice_equals_scc && case.enumeration_matches, "{case:?}");
        }
    }

    fn digraph(n: usize) -> impl Strategy<Value = Digraph> {
        proptest::collection::vec(any::<bool>(), n * n)
            .prop_map(move |m| Digraph::from_edges(n, (0..n * n).filter(|&k| m[k]).map(|k| (k / n, k % n))))
    }

    proptest! {
        #[test]
        fn pair_invariants(g in (1usize..9).prop_flat_map(digraph)) {
            let ars = enumerate_attractors(&g, 1 << 12).unwrap();
            let dead = infinite_paths_within(&g, &BoxSet::full(g.len())).complement();
            for p in &ars {
                prop_assert!(g.image(&p.attractor).difference(&dead).is_subset(&p.attractor));
                for a in p.attractor.iter() {
                    prop_assert!(g.successors(a).iter().any(|&b| p.attractor.contains(b)));
                    prop_assert!(g.predecessors(a).iter().any(|&b| p.attractor.contains(b)));
                }
                prop_assert!(p.attractor.is_disjoint(&p.repeller));
                prop_assert!(p.attractor.is_subset(&p.neighborhood));
                prop_assert!(p.neighborhood.is_subset(&p.basin));
                prop_assert_eq!(p.repeller.complement(), p.basin.clone());
                // every repeller box keeps a successor in the repeller
                for r in p.repeller.iter() {
                    prop_assert!(g.successors(r).iter().any(|&s| p.repeller.contains(s)));
                }
            }
            for p in &ars {
                for q in &ars {
                    if p.attractor.is_subset(&q.attractor) {
                        prop_assert!(q.repeller.is_subset(&p.repeller));
                    }
                }
            }
            prop_assert_eq!(chain_recurrent_lattice(&ars).unwrap(), chain_recurrent_scc(&g));
        }

        #[test]
        fn basin_boxes_reach_the_neighborhood(g in (1usize..9).prop_flat_map(digraph)) {
            for p in enumerate_attractors(&g, 1 << 12).unwrap() {
                let n = g.len();
                // every path from a basin box enters U within n steps
                let mut frontier = p.basin.difference(&p.neighborhood);
                for _ in 0..n {
                    frontier = g.image(&frontier).difference(&p.neighborhood);
                }
                prop_assert!(frontier.is_empty());
            }
        }
    }
}
