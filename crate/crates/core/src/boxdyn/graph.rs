use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BoxError, BoxGrid, BoxSet};
use crate::noise::NoisePath;
use crate::systems::{Cocycle, State, SystemError};

/// Plain directed graph on `0..n` with sorted, duplicate-free adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    /// Nodes with at least one image outside the domain.
    escaping: BoxSet,
}

impl Digraph {
    /// Panics if an endpoint is out of range.
    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Self {
        let mut succ = vec![Vec::new(); n];
        for (a, b) in edges {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} nodes");
            succ[a].push(b);
        }
        Self::from_successors(succ)
    }

    pub fn from_successors(mut succ: Vec<Vec<usize>>) -> Self {
        let n = succ.len();
        let mut pred = vec![Vec::new(); n];
        for (a, list) in succ.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            for &b in list.iter() {
                pred[b].push(a);
            }
        }
        Self { succ, pred, escaping: BoxSet::empty(n) }
    }

    pub fn with_escaping(mut self, escaping: BoxSet) -> Self {
        assert_eq!(escaping.universe(), self.len());
        self.escaping = escaping;
        self
    }

    pub fn escaping(&self) -> &BoxSet {
        &self.escaping
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.pred[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.succ[a].binary_search(&b).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ.iter().enumerate().flat_map(|(a, l)| l.iter().map(move |&b| (a, b)))
    }

    pub fn image(&self, s: &BoxSet) -> BoxSet {
        let mut out = BoxSet::empty(self.len());
        for v in s.iter() {
            for &w in &self.succ[v] {
                out.insert(w);
            }
        }
        out
    }

    pub fn preimage(&self, s: &BoxSet) -> BoxSet {
        let mut out = BoxSet::empty(self.len());
        for v in s.iter() {
            for &w in &self.pred[v] {
                out.insert(w);
            }
        }
        out
    }

    /// All nodes reachable from `s` by paths of length ≥ 0.
    pub fn forward_reach(&self, s: &BoxSet) -> BoxSet {
        self.reach(s, &self.succ)
    }

    /// All nodes that reach `s` by paths of length ≥ 0.
    pub fn backward_reach(&self, s: &BoxSet) -> BoxSet {
        self.reach(s, &self.pred)
    }

    fn reach(&self, s: &BoxSet, adj: &[Vec<usize>]) -> BoxSet {
        let mut seen = s.clone();
        let mut stack: Vec<usize> = s.to_vec();
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }
}

/// One noise sample: the path seed and the fiber time it is shifted to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub seed: u64,
    pub fiber_time: f64,
}

/// The test point and sample that produced an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub point: usize,
    pub sample: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeInfo {
    pub count: u64,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeRecord {
    pub source: usize,
    pub point: usize,
    pub sample: usize,
    /// `None` when the integrator blew up.
    pub image: Option<State>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeReport {
    pub evaluations: u64,
    pub escaped: u64,
    pub boxes: BoxSet,
    /// The first few escapes in sample order.
    pub examples: Vec<EscapeRecord>,
}

impl EscapeReport {
    pub fn fraction(&self) -> f64 {
        if self.evaluations == 0 {
            0.0
        } else {
            self.escaped as f64 / self.evaluations as f64
        }
    }
}

const MAX_ESCAPE_EXAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphParams {
    pub tau: f64,
    pub fiber_times: Vec<f64>,
    pub points_per_box: usize,
    /// Largest tolerated fraction of escaping test-point images.
    pub escape_tolerance: f64,
}

/// Sampled box dynamics: the union over all samples of the box maps
/// `b → boxes meeting φ(τ, θ_f ω) p` for test points `p` of `b`.
#[derive(Debug, Clone)]
pub struct TransitionGraph {
    grid: BoxGrid,
    tau: f64,
    points_per_box: usize,
    samples: Vec<Sample>,
    graph: Digraph,
    /// Parallel to the successor lists of `graph`.
    info: Vec<Vec<EdgeInfo>>,
    escapes: EscapeReport,
}

/// Samples processed between merges; bounds the memory held by pending images.
const CHUNK: usize = 32;

type Hits = Vec<(usize, usize, usize)>;

impl TransitionGraph {
    pub fn build<S: Cocycle + ?Sized>(
        grid: &BoxGrid,
        system: &S,
        paths: &[NoisePath],
        params: &GraphParams,
    ) -> Result<Self, BoxError> {
        if !(params.tau > 0.0 && params.tau.is_finite()) {
            return Err(BoxError::InvalidParameter(format!("tau = {} must be positive", params.tau)));
        }
        if params.points_per_box == 0 {
            return Err(BoxError::InvalidParameter("points_per_box must be at least 1".into()));
        }
        if paths.is_empty() || params.fiber_times.is_empty() {
            return Err(BoxError::InvalidParameter("need at least one seed and one fiber time".into()));
        }
        if !(0.0..=1.0).contains(&params.escape_tolerance) {
            return Err(BoxError::InvalidParameter("escape tolerance must lie in [0, 1]".into()));
        }
        if system.state_dim() != grid.dim() {
            return Err(BoxError::Dimension { expected: grid.dim(), got: system.state_dim() });
        }
        let n = grid.len();
        let ppb = params.points_per_box;
        let points: Vec<State> = (0..n).flat_map(|b| grid.test_points(b, ppb)).collect();

        let mut samples = Vec::new();
        let mut views = Vec::new();
        for path in paths {
            for &f in &params.fiber_times {
                let view = path.shift(f).map_err(SystemError::from)?;
                if !view.covers(0.0, params.tau) {
                    let (lo, hi) = view.window();
                    return Err(
                        SystemError::from(crate::noise::NoiseError::OutOfWindow { t: params.tau, lo, hi }).into()
                    );
                }
                samples.push(Sample { seed: path.seed(), fiber_time: f });
                views.push(view);
            }
        }

        let mut edges: Vec<BTreeMap<usize, EdgeInfo>> = vec![BTreeMap::new(); n];
        let mut escapes = EscapeReport { evaluations: 0, escaped: 0, boxes: BoxSet::empty(n), examples: Vec::new() };

        for chunk_start in (0..views.len()).step_by(CHUNK) {
            let chunk_end = (chunk_start + CHUNK).min(views.len());
            let results: Vec<Result<(Hits, Vec<EscapeRecord>), BoxError>> = (chunk_start..chunk_end)
                .into_par_iter()
                .map(|k| {
                    let images = system.evolve_batch(params.tau, &views[k], &points);
                    let mut hits = Vec::with_capacity(points.len());
                    let mut lost = Vec::new();
                    for (idx, img) in images.into_iter().enumerate() {
                        let (src, pt) = (idx / ppb, idx % ppb);
                        let img = match img {
                            Ok(v) => Some(v),
                            Err(SystemError::BlowUp { .. }) => None,
                            Err(e) => return Err(e.into()),
                        };
                        let targets = img.as_deref().map(|x| grid.boxes_containing(x)).unwrap_or_default();
                        if targets.is_empty() {
                            lost.push(EscapeRecord { source: src, point: pt, sample: k, image: img });
                        }
                        hits.extend(targets.into_iter().map(|t| (src, t, pt)));
                    }
                    Ok((hits, lost))
                })
                .collect();
            for (offset, res) in results.into_iter().enumerate() {
                let k = chunk_start + offset;
                let (hits, lost) = res?;
                for (src, dst, pt) in hits {
                    edges[src]
                        .entry(dst)
                        .and_modify(|e| e.count += 1)
                        .or_insert(EdgeInfo { count: 1, witness: Witness { point: pt, sample: k } });
                }
                escapes.evaluations += points.len() as u64;
                escapes.escaped += lost.len() as u64;
                for rec in lost {
                    escapes.boxes.insert(rec.source);
                    if escapes.examples.len() < MAX_ESCAPE_EXAMPLES {
                        escapes.examples.push(rec);
                    }
                }
            }
        }

        if escapes.escaped > 0 && escapes.fraction() > params.escape_tolerance {
            return Err(BoxError::DomainNotAbsorbing {
                fraction: escapes.fraction(),
                tolerance: params.escape_tolerance,
                example: escapes.examples.first().map(|e| format!("{e:?}")).unwrap_or_default(),
            });
        }

        let succ = edges.iter().map(|m| m.keys().copied().collect()).collect();
        let info = edges.into_iter().map(|m| m.into_values().collect()).collect();
        Ok(Self {
            grid: grid.clone(),
            tau: params.tau,
            points_per_box: ppb,
            samples,
            graph: Digraph::from_successors(succ).with_escaping(escapes.boxes.clone()),
            info,
            escapes,
        })
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn points_per_box(&self) -> usize {
        self.points_per_box
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn digraph(&self) -> &Digraph {
        &self.graph
    }

    pub fn escapes(&self) -> &EscapeReport {
        &self.escapes
    }

    pub fn edge_info(&self, a: usize, b: usize) -> Option<EdgeInfo> {
        let i = self.graph.successors(a).binary_search(&b).ok()?;
        Some(self.info[a][i])
    }

    pub fn image(&self, s: &BoxSet) -> BoxSet {
        self.graph.image(s)
    }

    pub fn preimage(&self, s: &BoxSet) -> BoxSet {
        self.graph.preimage(s)
    }

    /// Re-evaluates the recorded witness of edge `a → b` and returns the image point.
    /// `paths` must be the ones the graph was built from.
    pub fn replay_witness<S: Cocycle + ?Sized>(
        &self,
        system: &S,
        paths: &[NoisePath],
        a: usize,
        b: usize,
    ) -> Result<Option<State>, BoxError> {
        let Some(info) = self.edge_info(a, b) else { return Ok(None) };
        let sample = self.samples[info.witness.sample];
        let path = paths
            .iter()
            .find(|p| p.seed() == sample.seed)
            .ok_or_else(|| BoxError::InvalidParameter(format!("no path with seed {}", sample.seed)))?;
        let view = path.shift(sample.fiber_time).map_err(SystemError::from)?;
        let x = &self.grid.test_points(a, self.points_per_box)[info.witness.point];
        Ok(Some(system.evolve(self.tau, &view, x)?))
    }

    pub fn to_json(&self, config_hash: &str) -> serde_json::Value {
        let edges: Vec<serde_json::Value> = self
            .graph
            .edges()
            .map(|(a, b)| {
                let e = self.edge_info(a, b).expect("edge present");
                serde_json::json!([a, b, e.count, e.witness.sample, e.witness.point])
            })
            .collect();
        serde_json::json!({
            "config_hash": config_hash,
            "grid": self.grid,
            "tau": self.tau,
            "points_per_box": self.points_per_box,
            "samples": self.samples,
            "edge_columns": ["src", "dst", "count", "witness_sample", "witness_point"],
            "edges": edges,
            "escapes": self.escapes,
        })
    }

    /// Edge list as `src,dst` rows.
    pub fn write_edges_csv<W: Write>(&self, mut out: W, config_hash: &str) -> std::io::Result<()> {
        writeln!(out, "# config_hash={config_hash}")?;
        writeln!(out, "src,dst")?;
        for (a, b) in self.graph.edges() {
            writeln!(out, "{a},{b}")?;
        }
        Ok(())
    }
}
