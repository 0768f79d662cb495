//! End-to-end analysis of one configuration and the artifacts it produces.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::boxdyn::{BoxError, BoxGrid, BoxSet, GraphParams, TransitionGraph};
use crate::config::{ChainSpec, ConfigError, RunConfig};
use crate::conley::{
    attractors_json, chain_recurrent_lattice, chain_recurrent_scc, condense, enumerate_attractors, maximal_attractor,
    AttractorRepeller, Condensation, ConleyError,
};
use crate::lyapunov::{
    complete_lyapunov, verify_decrease, CompleteLyapunov, DecreaseReport, LyapunovError, LyapunovField,
};
use crate::morse::{
    backward_orbit, classify_orbit, finest_decomposition, is_graph_invariant, morse_decomposition, verify_no_cycles,
    write_classification_csv, Classification, MorseDecomposition, MorseError,
};
use crate::noise::NoisePath;
use crate::systems::Cocycle;

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const ESCAPE: i32 = 3;
    pub const CAP: i32 = 4;
    pub const THEORY: i32 = 5;
    pub const ACCURACY: i32 = 6;
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error(transparent)]
    Conley(#[from] ConleyError),
    #[error(transparent)]
    Morse(#[from] MorseError),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error("{0}")]
    Usage(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(ConfigError::Io { .. }) | PipelineError::Io(_) | PipelineError::Usage(_) => {
                exit::USAGE
            }
            PipelineError::Config(_) => exit::VALIDATION,
            PipelineError::Box(BoxError::DomainNotAbsorbing { .. }) => exit::ESCAPE,
            PipelineError::Conley(ConleyError::CapExceeded { .. }) => exit::CAP,
            PipelineError::Box(BoxError::InvalidParameter(_) | BoxError::InvalidGrid(_)) => exit::VALIDATION,
            _ => exit::THEORY,
        }
    }
}

/// One verified property with its measured value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Hard checks are exact invariants; the others compare a measurement with a threshold.
    pub hard: bool,
    pub passed: bool,
    pub measured: Value,
    pub threshold: Value,
}

impl Check {
    pub fn hard(name: &str, passed: bool, measured: Value) -> Self {
        Self { name: name.into(), hard: true, passed, measured, threshold: Value::Null }
    }

    pub fn accuracy(name: &str, passed: bool, measured: Value, threshold: Value) -> Self {
        Self { name: name.into(), hard: false, passed, measured, threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub system: String,
    pub summary: Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn hard_ok(&self) -> bool {
        self.checks.iter().filter(|c| c.hard).all(|c| c.passed)
    }

    pub fn accuracy_ok(&self) -> bool {
        self.checks.iter().filter(|c| !c.hard).all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if !self.hard_ok() {
            exit::THEORY
        } else if !self.accuracy_ok() {
            exit::ACCURACY
        } else {
            exit::OK
        }
    }
}

/// A recurrent component with its coordinate extent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentInfo {
    pub id: usize,
    pub boxes: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

pub struct Analysis {
    pub config: RunConfig,
    pub hash: String,
    pub grid: BoxGrid,
    pub system: Box<dyn Cocycle>,
    pub paths: Vec<NoisePath>,
    pub graph: TransitionGraph,
    pub condensation: Condensation,
    pub components: Vec<ComponentInfo>,
    pub chain_recurrent: BoxSet,
    pub attractors: Vec<AttractorRepeller>,
    pub morse: MorseDecomposition,
    pub classifications: Vec<Classification>,
    pub lyapunov: CompleteLyapunov,
    pub field: LyapunovField,
    pub decrease: DecreaseReport,
    pub report: Report,
}

fn components(grid: &BoxGrid, cond: &Condensation) -> Vec<ComponentInfo> {
    cond.recurrent_order()
        .into_iter()
        .map(|c| {
            let boxes = cond.members(c).to_vec();
            let dim = grid.dim();
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for &b in &boxes {
                for (a, (l, h)) in grid.box_lo(b).into_iter().zip(grid.box_hi(b)).enumerate() {
                    lo[a] = lo[a].min(l);
                    hi[a] = hi[a].max(h);
                }
            }
            ComponentInfo { id: c, boxes, lo, hi }
        })
        .collect()
}

/// Evenly spaced boxes of `set`.
fn spread(set: &BoxSet, count: usize) -> Vec<usize> {
    let all = set.to_vec();
    if all.len() <= count {
        return all;
    }
    let mut out: Vec<usize> = (0..count).map(|k| all[k * all.len() / count]).collect();
    out.dedup();
    out
}

pub fn run_analyze(config: &RunConfig) -> Result<Analysis, PipelineError> {
    config.validate()?;
    let hash = config.hash();
    let grid = config.grid()?;
    let system = config.system()?;
    let paths = config.paths()?;
    let g = &config.graph;
    let graph = TransitionGraph::build(
        &grid,
        system.as_ref(),
        &paths,
        &GraphParams {
            tau: g.tau,
            fiber_times: g.fiber_times.clone(),
            points_per_box: g.points_per_box,
            escape_tolerance: g.escape_tolerance,
        },
    )?;
    let digraph = graph.digraph().clone();
    let condensation = condense(&digraph);
    let comps = components(&grid, &condensation);
    let cr = chain_recurrent_scc(&digraph);
    let attractors = enumerate_attractors(&digraph, config.analysis.attractor_cap)?;
    let mut checks = Vec::new();

    let lattice = chain_recurrent_lattice(&attractors)?;
    checks.push(Check::hard(
        "lattice_identity",
        lattice == cr,
        json!({ "cr_boxes": cr.len(), "lattice_boxes": lattice.len() }),
    ));

    let morse = match &config.analysis.morse_chain {
        ChainSpec::Named(_) => finest_decomposition(&digraph)?,
        ChainSpec::Explicit(idx) => {
            let chain: Vec<AttractorRepeller> = idx
                .iter()
                .map(|&i| {
                    attractors.get(i).cloned().ok_or_else(|| {
                        PipelineError::Config(ConfigError::Invalid {
                            field: "analysis.morse_chain",
                            reason: format!("position {i} exceeds the {} attractors", attractors.len()),
                        })
                    })
                })
                .collect::<Result<_, _>>()?;
            morse_decomposition(&digraph, &chain)?
        }
    };
    checks.push(Check::hard("morse_disjoint", morse.is_pairwise_disjoint(), json!(morse.len())));
    let invariant: Vec<usize> =
        (1..=morse.len()).filter(|&i| !is_graph_invariant(&digraph, morse.morse_set(i))).collect();
    checks.push(Check::hard("morse_graph_invariant", invariant.is_empty(), json!({ "not_invariant": invariant })));
    let acyclic = verify_no_cycles(&morse);
    checks.push(Check::hard(
        "morse_acyclic",
        acyclic.is_ok(),
        match &acyclic {
            Ok(r) => json!({ "edges": r.edges }),
            Err(e) => json!({ "error": e.to_string() }),
        },
    ));
    if matches!(config.analysis.morse_chain, ChainSpec::Named(_)) {
        let union = morse.union();
        checks.push(Check::hard(
            "morse_union_equals_cr",
            union == cr,
            json!({ "union_boxes": union.len(), "cr_boxes": cr.len() }),
        ));
    }

    let cls = &config.analysis.classification;
    let within = maximal_attractor(&digraph);
    let fiber = paths[0].view();
    let mut classifications = Vec::new();
    let mut violations = Vec::new();
    for b in spread(&within, cls.anchors) {
        let seg = backward_orbit(&digraph, b, &within, cls.backward_steps, g.tau)?.extend_forward(
            system.as_ref(),
            &grid,
            &fiber,
            &grid.center(b),
            cls.forward_steps,
        )?;
        match classify_orbit(&morse, &seg, cls.settle_back, cls.settle_forward) {
            Ok(c) => classifications.push(c),
            Err(MorseError::TheoremViolation(msg)) => violations.push(msg),
            Err(e) => return Err(e.into()),
        }
    }
    let resolved = classifications.iter().filter(|c| c.resolved).count();
    checks.push(Check::hard(
        "classification_order",
        violations.is_empty(),
        json!({ "anchors": classifications.len() + violations.len(), "resolved": resolved, "violations": violations }),
    ));

    let params = config.lyapunov_params(&grid);
    let lseeds = &paths[..config.analysis.lyapunov.seeds];
    let (lyapunov, field) = complete_lyapunov(&grid, &attractors, system.as_ref(), lseeds, params)?;
    checks.extend(field_checks(&digraph, &condensation, &comps, &lyapunov, &field));

    let anchors: Vec<Vec<f64>> = (0..grid.len()).map(|b| grid.center(b)).collect();
    let same_component = |x: &[f64], y: &[f64]| match (grid.point_to_box(x), grid.point_to_box(y)) {
        (Ok(a), Ok(b)) => {
            let (ca, cb) = (condensation.component_of(a), condensation.component_of(b));
            ca == cb && condensation.is_recurrent(ca)
        }
        _ => false,
    };
    let decrease = verify_decrease(&lyapunov, system.as_ref(), &anchors, lseeds, config.analysis.dt, same_component)?;
    let th = &config.analysis.thresholds;
    checks.push(Check::accuracy(
        "lyapunov_non_increase",
        decrease.non_increase_fraction >= th.non_increase,
        json!({ "fraction": decrease.non_increase_fraction, "max_increase": decrease.max_increase }),
        json!(th.non_increase),
    ));
    checks.push(Check::accuracy(
        "lyapunov_strict_decrease",
        decrease.strict_decrease_fraction >= th.strict_decrease,
        json!({ "fraction": decrease.strict_decrease_fraction, "pairs": decrease.non_cr_pairs }),
        json!(th.strict_decrease),
    ));
    checks.push(Check::accuracy(
        "lyapunov_cr_constancy",
        decrease.cr_max_deviation <= params.tol_const,
        json!({ "max_deviation": decrease.cr_max_deviation, "pairs": decrease.cr_pairs }),
        json!(params.tol_const),
    ));

    let component_levels: Vec<Value> = comps
        .iter()
        .map(|c| {
            let vals: Vec<f64> = field.values.iter().map(|row| row[c.boxes[0]].lhat).collect();
            json!({ "component": c.id, "lo": c.lo, "hi": c.hi, "boxes": c.boxes.len(), "L": vals })
        })
        .collect();
    let summary = json!({
        "boxes": grid.len(),
        "edges": digraph.edge_count(),
        "samples": graph.samples().len(),
        "escape_fraction": graph.escapes().fraction(),
        "recurrent_components": component_levels,
        "chain_recurrent_boxes": cr.len(),
        "attractors": attractors.len(),
        "morse_sets": morse.len(),
        "morse_edges": morse.edges(),
        "lyapunov_pairs": lyapunov.pairs().len(),
        "tol_const": params.tol_const,
        "decrease": decrease,
    });
    let report = Report { config_hash: hash.clone(), system: system.name().to_string(), summary, checks };
    Ok(Analysis {
        config: config.clone(),
        hash,
        grid,
        system,
        paths,
        graph,
        condensation,
        components: comps,
        chain_recurrent: cr,
        attractors,
        morse,
        classifications,
        lyapunov,
        field,
        decrease,
        report,
    })
}

/// Per-seed checks of the complete function on box centers.
fn field_checks(
    digraph: &crate::boxdyn::Digraph,
    cond: &Condensation,
    comps: &[ComponentInfo],
    func: &CompleteLyapunov,
    field: &LyapunovField,
) -> Vec<Check> {
    let tol = field.params.tol_const;
    let pairs = func.pairs();
    let mut out = Vec::new();

    let in_range = field.values.iter().flatten().all(|v| (0.0..=0.5).contains(&v.lhat));
    out.push(Check::hard("lyapunov_range", in_range, json!([0.0, 0.5])));

    let mut exact = true;
    let mut sandwich = 0usize;
    for row in &field.values {
        for (b, v) in row.iter().enumerate() {
            for (k, p) in pairs.iter().enumerate() {
                let (h, l) = (v.per_pair[k], v.per_pair_l[k]);
                if (p.attractor().contains(b) && h != 0.0) || (p.repeller().contains(b) && h != 1.0) {
                    exact = false;
                }
                if !(0.5 * l <= h && h <= l) {
                    sandwich += 1;
                }
            }
        }
    }
    out.push(Check::hard("lyapunov_exact_pair_values", exact, json!(exact)));
    out.push(Check::hard("lyapunov_sandwich", sandwich == 0, json!({ "violations": sandwich })));

    // Value intervals of every recurrent component, per seed.
    let intervals: Vec<Vec<(f64, f64)>> = field
        .values
        .iter()
        .map(|row| {
            comps
                .iter()
                .map(|c| {
                    c.boxes
                        .iter()
                        .map(|&b| row[b].lhat)
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
                })
                .collect()
        })
        .collect();
    let spread_max = intervals.iter().flatten().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    out.push(Check::accuracy("lyapunov_component_constancy", spread_max <= tol, json!(spread_max), json!(tol)));

    let mut overlaps = 0usize;
    let mut order_violations = 0usize;
    let reach: Vec<BoxSet> = comps.iter().map(|c| digraph.forward_reach(&cond.member_set(c.id))).collect();
    for row in &intervals {
        for i in 0..comps.len() {
            for j in 0..comps.len() {
                if i == j {
                    continue;
                }
                if i < j && row[i].0 <= row[j].1 && row[j].0 <= row[i].1 {
                    overlaps += 1;
                }
                let downstream = comps[j].boxes.iter().any(|&b| reach[i].contains(b));
                if downstream && row[i].0 <= row[j].1 {
                    order_violations += 1;
                }
            }
        }
    }
    out.push(Check::accuracy("lyapunov_separation", overlaps == 0, json!({ "overlapping_pairs": overlaps }), json!(0)));
    out.push(Check::accuracy(
        "lyapunov_ordering",
        order_violations == 0,
        json!({ "violations": order_violations }),
        json!(0),
    ));

    // A recurrent component lies in A_k or R_k for each pair, so L takes a base-3 level there.
    let mut level_error: f64 = 0.0;
    for c in comps {
        let in_r: Vec<bool> = pairs.iter().map(|p| p.repeller().contains(c.boxes[0])).collect();
        let level = func.level(&in_r);
        for row in &field.values {
            for &b in &c.boxes {
                level_error = level_error.max((row[b].lhat - level).abs());
            }
        }
    }
    out.push(Check::accuracy("lyapunov_cr_levels", level_error <= tol, json!(level_error), json!(tol)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitWhat {
    Morse,
    Lyapunov,
    Attractors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Dot,
    Csv,
    Json,
}

impl Analysis {
    pub fn chain_recurrent_json(&self) -> Value {
        json!({
            "config_hash": self.hash,
            "boxes": self.chain_recurrent.to_vec(),
            "count": self.chain_recurrent.len(),
            "components": self.components,
        })
    }

    pub fn report_json(&self, timestamp: u64) -> Value {
        json!({
            "config_hash": self.hash,
            "system": self.report.system,
            "passed": self.report.hard_ok() && self.report.accuracy_ok(),
            "hard_invariants_passed": self.report.hard_ok(),
            "exit_code": self.report.exit_code(),
            "summary": self.report.summary,
            "checks": self.report.checks,
            "config": self.config,
            "metadata": { "generated_unix": timestamp },
        })
    }

    /// Writes the artifact set into `dir` and returns the written paths.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: &str, f: &dyn Fn(&mut dyn Write) -> std::io::Result<()>| -> std::io::Result<()> {
            let path = dir.join(name);
            let mut w = BufWriter::new(File::create(&path)?);
            f(&mut w)?;
            w.flush()?;
            written.push(path);
            Ok(())
        };
        let json_file = |v: Value| {
            move |w: &mut dyn Write| -> std::io::Result<()> {
                serde_json::to_writer_pretty(&mut *w, &v)?;
                writeln!(w)
            }
        };
        put("graph.json", &json_file(self.graph.to_json(&self.hash)))?;
        put("graph_edges.csv", &|w| self.graph.write_edges_csv(w, &self.hash))?;
        put("attractors.json", &json_file(attractors_json(&self.attractors, &self.hash)))?;
        put("chain_recurrent.json", &json_file(self.chain_recurrent_json()))?;
        put("morse.dot", &|w| self.morse.write_dot(w, Some(&self.grid), &self.hash))?;
        put("morse_sets.json", &json_file(self.morse.to_json(Some(&self.grid), &self.hash)))?;
        put("classification.csv", &|w| write_classification_csv(w, &self.classifications, &self.hash))?;
        put("lyapunov.csv", &|w| self.field.write_csv(w, &self.hash))?;
        put("lyapunov_levels.json", &json_file(self.field.level_sets_json(1e-6, &self.hash)))?;
        let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        put("report.json", &json_file(self.report_json(now)))?;
        Ok(written)
    }

    pub fn emit<W: Write>(&self, what: EmitWhat, format: EmitFormat, mut out: W) -> Result<(), PipelineError> {
        let pretty = |out: &mut W, v: Value| -> std::io::Result<()> {
            serde_json::to_writer_pretty(&mut *out, &v)?;
            writeln!(out)
        };
        match (what, format) {
            (EmitWhat::Morse, EmitFormat::Dot) => self.morse.write_dot(out, Some(&self.grid), &self.hash)?,
            (EmitWhat::Morse, EmitFormat::Json) => pretty(&mut out, self.morse.to_json(Some(&self.grid), &self.hash))?,
            (EmitWhat::Morse, EmitFormat::Csv) => {
                writeln!(out, "# config_hash={}", self.hash)?;
                writeln!(out, "morse_set,box")?;
                for (i, s) in self.morse.sets().iter().enumerate() {
                    for b in s.iter() {
                        writeln!(out, "{},{b}", i + 1)?;
                    }
                }
            }
            (EmitWhat::Lyapunov, EmitFormat::Csv) => self.field.write_csv(out, &self.hash)?,
            (EmitWhat::Lyapunov, EmitFormat::Json) => pretty(&mut out, self.field.level_sets_json(1e-6, &self.hash))?,
            (EmitWhat::Attractors, EmitFormat::Json) => {
                pretty(&mut out, attractors_json(&self.attractors, &self.hash))?
            }
            (EmitWhat::Attractors, EmitFormat::Csv) => {
                writeln!(out, "# config_hash={}", self.hash)?;
                writeln!(out, "attractor,set,box")?;
                for (i, p) in self.attractors.iter().enumerate() {
                    for (name, s) in [("A", &p.attractor), ("R", &p.repeller)] {
                        for b in s.iter() {
                            writeln!(out, "{i},{name},{b}")?;
                        }
                    }
                }
            }
            (EmitWhat::Attractors, EmitFormat::Dot) => self.write_attractor_lattice(out)?,
            (EmitWhat::Lyapunov, EmitFormat::Dot) => {
                return Err(PipelineError::Usage("lyapunov fields are emitted as csv or json".into()))
            }
        }
        Ok(())
    }

    /// Hasse diagram of attractor inclusion.
    fn write_attractor_lattice<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "// config_hash={}", self.hash)?;
        writeln!(out, "digraph attractors {{")?;
        let a: Vec<&BoxSet> = self.attractors.iter().map(|p| &p.attractor).collect();
        let below = |i: usize, j: usize| i != j && a[i].is_subset(a[j]) && a[i] != a[j];
        for (i, s) in a.iter().enumerate() {
            writeln!(out, "  A{i} [label=\"A{i}\\n{} boxes\"];", s.len())?;
        }
        for i in 0..a.len() {
            for j in 0..a.len() {
                if below(i, j) && !(0..a.len()).any(|k| below(i, k) && below(k, j)) {
                    writeln!(out, "  A{i} -> A{j};")?;
                }
            }
        }
        writeln!(out, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::tests::pitchfork_config;

    #[test]
    fn pitchfork_analysis_passes() {
        let a = run_analyze(&pitchfork_config()).unwrap();
        for c in &a.report.checks {
            assert!(c.passed, "{c:?}");
        }
        assert_eq!(a.attractors.len(), 5);
        assert_eq!(a.morse.len(), 3);
        assert_eq!(a.morse.edges(), vec![(3, 1), (3, 2)]);
        assert_eq!(a.report.exit_code(), exit::OK);
    }

    #[test]
    fn artifacts_are_reproducible() {
        let cfg = pitchfork_config();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let files = run_analyze(&cfg).unwrap().write_artifacts(d1.path()).unwrap();
        run_analyze(&cfg).unwrap().write_artifacts(d2.path()).unwrap();
        assert_eq!(files.len(), 10);
        for f in files {
            let name = f.file_name().unwrap();
            let a = std::fs::read_to_string(d1.path().join(name)).unwrap();
            let b = std::fs::read_to_string(d2.path().join(name)).unwrap();
            assert!(a.contains(&cfg.hash()), "{name:?} lacks the config hash");
            if name == "report.json" {
                let mut va: Value = serde_json::from_str(&a).unwrap();
                let mut vb: Value = serde_json::from_str(&b).unwrap();
                va["metadata"].take();
                vb["metadata"].take();
                assert_eq!(va, vb);
            } else {
                assert_eq!(a, b, "{name:?} differs");
            }
        }
    }

    #[test]
    fn cap_and_escape_exit_codes() {
        let mut cfg = pitchfork_config();
        cfg.analysis.attractor_cap = 3;
        assert_eq!(run_analyze(&cfg).err().unwrap().exit_code(), exit::CAP);
        let mut cfg = pitchfork_config();
        cfg.system.beta = 5.0;
        assert_eq!(run_analyze(&cfg).err().unwrap().exit_code(), exit::ESCAPE);
        let mut cfg = pitchfork_config();
        cfg.domain.depth = vec![0];
        assert_eq!(run_analyze(&cfg).err().unwrap().exit_code(), exit::VALIDATION);
    }

    #[test]
    fn emit_formats() {
        let a = run_analyze(&pitchfork_config()).unwrap();
        let mut dot = Vec::new();
        a.emit(EmitWhat::Morse, EmitFormat::Dot, &mut dot).unwrap();
        let dot = String::from_utf8(dot).unwrap();
        assert!(dot.contains("M3 -> M1;") && dot.contains("M3 -> M2;"));
        let mut lattice = Vec::new();
        a.emit(EmitWhat::Attractors, EmitFormat::Dot, &mut lattice).unwrap();
        // 5 attractors ∅ < {−1}, {1} < {−1, 1} < [−1, 1]
        assert_eq!(String::from_utf8(lattice).unwrap().matches("->").count(), 5);
        assert!(matches!(a.emit(EmitWhat::Lyapunov, EmitFormat::Dot, Vec::new()), Err(PipelineError::Usage(_))));
    }
}
