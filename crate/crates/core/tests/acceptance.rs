//! Acceptance suite. Each test prints one `PASS`/`FAIL` line to stderr (bypassing
//! output capture) and then asserts.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::Rng;
use rds_conley::boxdyn::{hausdorff_semimetric, BoxGrid, BoxSet, Cover, GraphParams, TransitionGraph};
use rds_conley::config::RunConfig;
use rds_conley::conley::{enumerate_attractors, oracle::check_lattice};
use rds_conley::lyapunov::{verify_pair, CompleteLyapunov, PairFunction};
use rds_conley::morse::finest_decomposition;
use rds_conley::noise::NoisePath;
use rds_conley::pipeline::{run_analyze, Analysis};
use rds_conley::systems::{ChafeeInfanteGalerkin, PitchforkFlow, StochasticPitchfork};
use rds_conley::verify::{ball_point, galerkin_refinement, pullback_check, residual_trials};

/// Serializes the tests so that runtimes are measured without contention.
static SERIAL: Mutex<()> = Mutex::new(());

fn report(label: &str, ok: bool, detail: String) {
    let line = format!("[acceptance] {label}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    let _ = writeln!(std::io::stderr(), "\n{line}");
}

fn config(name: &str) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    RunConfig::load(&path).unwrap()
}

fn analysis(name: &str) -> Analysis {
    run_analyze(&config(name)).unwrap()
}

/// Hausdorff distance between the box centers of `set` and the sampled target.
fn box_distance(grid: &BoxGrid, set: &BoxSet, target: &[Vec<f64>]) -> f64 {
    match (set.is_empty(), target.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        _ => {
            let there = hausdorff_semimetric(Cover::Boxes(grid, set), Cover::Points(target)).unwrap().value;
            let back = hausdorff_semimetric(Cover::Points(target), Cover::Boxes(grid, set)).unwrap().value;
            there.max(back)
        }
    }
}

fn sampled(lo: f64, hi: f64, step: f64) -> Vec<Vec<f64>> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| vec![lo + k as f64 * step]).collect()
}

#[test]
fn pitchfork_attractor_lattice_and_morse_graph() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let grid = BoxGrid::interval(-2.0, 2.0, 1024).unwrap();
    let w = grid.max_width();
    let paths = vec![NoisePath::sample(0, -1.0, 1.0, 0.1).unwrap()];
    let params = GraphParams { tau: 0.2, fiber_times: vec![0.0], points_per_box: 5, escape_tolerance: 0.0 };
    let graph = TransitionGraph::build(&grid, &PitchforkFlow::default(), &paths, &params).unwrap();
    let d = graph.digraph();
    let attractors = enumerate_attractors(d, 1 << 14);
    let count = attractors.as_ref().map(|a| a.len()).unwrap_or(usize::MAX);
    let targets: Vec<Vec<Vec<f64>>> =
        vec![vec![], vec![vec![-1.0]], vec![vec![1.0]], vec![vec![-1.0], vec![1.0]], sampled(-1.0, 1.0, w / 4.0)];
    let covered = match &attractors {
        Ok(list) if list.len() == 5 => {
            targets.iter().all(|t| list.iter().any(|p| box_distance(&grid, &p.attractor, t) <= 2.0 * w))
        }
        _ => false,
    };
    let dec = finest_decomposition(d).unwrap();
    let at = |x: f64| (1..=dec.len()).find(|&i| box_distance(&grid, dec.morse_set(i), &[vec![x]]) <= 2.0 * w);
    let sets_ok = dec.len() == 3 && at(-1.0).is_some() && at(1.0).is_some() && at(0.0).is_some();
    let edges_ok = sets_ok && {
        let (m, l, r) = (at(0.0).unwrap(), at(-1.0).unwrap(), at(1.0).unwrap());
        let mut want = vec![(m, l), (m, r)];
        want.sort();
        dec.edges() == want
    };
    let elapsed = start.elapsed();
    let ok = count == 5 && covered && sets_ok && edges_ok && elapsed < Duration::from_secs(30);
    report(
        "pitchfork lattice, depth 1024, tau 0.2",
        ok,
        format!(
            "{count} attractors, {} Morse sets, edges {:?}, {:.1} s",
            dec.len(),
            dec.edges().len(),
            elapsed.as_secs_f64()
        ),
    );
    assert_eq!(count, 5, "attractor count");
    assert!(covered && sets_ok && edges_ok);
    assert!(elapsed < Duration::from_secs(30));
}

#[test]
fn lattice_identity_on_random_digraphs() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let passed = (0..200u64).filter(|&s| check_lattice(s, 10).lattice_equals_scc).count();
    let elapsed = start.elapsed();
    let ok = passed == 200 && elapsed < Duration::from_secs(5);
    report("lattice identity on random digraphs", ok, format!("{passed}/200, {:.2} s", elapsed.as_secs_f64()));
    assert!(ok);
}

#[test]
fn cocycle_law() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let paths: Vec<NoisePath> = (0..10).map(|s| NoisePath::sample(s, -1.0, 12.0, 0.01).unwrap()).collect();
    let sp = StochasticPitchfork::new(1.0, 0.3).unwrap();
    let closed = residual_trials(&sp, &paths, 100, 5.0, 11, |r| vec![r.gen_range(-2.0..=2.0)]).unwrap();
    let ci = ChafeeInfanteGalerkin::new(8, 2.0, 0.5, 1e-3).unwrap();
    let galerkin = residual_trials(&ci, &paths, 100, 5.0, 12, |r| ball_point(r, 8, 2.0)).unwrap();
    let refine = galerkin_refinement(&ci, &paths, 10, 1.0, 13).unwrap();
    let elapsed = start.elapsed();
    let ok = closed.max_residual <= 1e-9
        && galerkin.max_residual <= 5e-3
        && refine.ratio >= 3.5
        && elapsed < Duration::from_secs(60);
    report(
        "cocycle law",
        ok,
        format!(
            "closed form {:.1e}, Galerkin {:.1e}, error h {:.2e} / h/2 {:.2e} = {:.1}x, {:.1} s",
            closed.max_residual,
            galerkin.max_residual,
            refine.error_h,
            refine.error_half,
            refine.ratio,
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn random_fixed_point_pullback() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let sp = StochasticPitchfork::new(1.0, 0.3).unwrap();
    let paths: Vec<NoisePath> = (0..100).map(|s| NoisePath::sample(1000 + s, -45.0, 1.0, 0.01).unwrap()).collect();
    let width = BoxGrid::interval(-2.0, 2.0, 512).unwrap().max_width();
    let r = pullback_check(&sp, &paths, (-2.0, 2.0), 30.0, 5.0, 1.0, 40.0, 1e-2, width).unwrap();
    let elapsed = start.elapsed();
    let ok = r.accurate >= 95 && r.non_monotone == 0 && r.converged == 100 && elapsed < Duration::from_secs(60);
    report(
        "random fixed point by pull-back",
        ok,
        format!(
            "{}/100 within 1e-2 (max {:.1e}), {} non-monotone (max step increase {:.1e}), {} converged, {:.1} s",
            r.accurate,
            r.max_relative_error,
            r.non_monotone,
            r.max_increase,
            r.converged,
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn lyapunov_pair_properties() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["pitchfork.json", "stochastic_pitchfork.json"] {
        let a = analysis(name);
        let pair = a.attractors.iter().find(|p| p.is_nontrivial()).unwrap();
        let pf = PairFunction::new(&a.grid, pair).unwrap();
        let params = a.lyapunov.params();
        let paths = &a.paths[..a.config.analysis.lyapunov.seeds];
        let r = verify_pair(&pf, a.system.as_ref(), paths, params, a.config.analysis.dt).unwrap();
        let this = r.exact_values
            && r.sandwich_violations == 0
            && r.orbit_violations == 0
            && r.strict_decrease_fraction >= 0.95;
        ok &= this;
        lines.push(format!(
            "{name}: exact {}, sandwich violations {}, orbit increase {:.1e}, strict decrease {:.3}",
            r.exact_values, r.sandwich_violations, r.max_orbit_increase, r.strict_decrease_fraction
        ));
    }
    report("Lyapunov pair properties", ok, lines.join("; "));
    assert!(ok);
}

#[test]
fn complete_lyapunov_function() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let a = analysis("pitchfork.json");
    let names = ["lyapunov_component_constancy", "lyapunov_separation", "lyapunov_ordering", "lyapunov_cr_levels"];
    let failed: Vec<&str> = names.iter().copied().filter(|n| !a.report.check(n).unwrap().passed).collect();
    let tol = a.lyapunov.params().tol_const;
    let level_at = |x: f64| {
        let b = a.grid.point_to_box(&[x]).unwrap();
        a.field.values.iter().map(|row| row[b].lhat).collect::<Vec<f64>>()
    };
    let (left, right, origin) = (level_at(-1.0), level_at(1.0), level_at(0.0));
    let ordered = (0..left.len()).all(|s| origin[s] > left[s] && origin[s] > right[s]);
    // three nontrivial pairs: {−1}, {1}, {−1, 1}
    let expected = [1.0 / 9.0, 1.0 / 3.0, 13.0 / 27.0];
    let levels_ok = [&left, &right, &origin].iter().zip(expected).all(|(v, e)| v.iter().all(|x| (x - e).abs() <= tol));
    let ok = failed.is_empty() && ordered && levels_ok && a.lyapunov.pairs().len() == 3;
    report(
        "complete Lyapunov function",
        ok,
        format!("L(-1) {:.4}, L(1) {:.4}, L(0) {:.4}, failed checks {:?}", left[0], right[0], origin[0], failed),
    );
    assert_eq!(CompleteLyapunov::weight(0), 1.0 / 3.0);
    assert!(ok);
}

#[test]
fn morse_structure_checks() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let names =
        ["morse_disjoint", "morse_graph_invariant", "morse_acyclic", "classification_order", "morse_union_equals_cr"];
    let mut ok = true;
    let mut lines = Vec::new();
    for cfg in ["pitchfork.json", "stochastic_pitchfork.json"] {
        let a = analysis(cfg);
        let failed: Vec<&str> = names.iter().copied().filter(|n| !a.report.check(n).unwrap().passed).collect();
        let resolved: Vec<_> = a.classifications.iter().filter(|c| c.resolved).collect();
        let order = resolved.iter().all(|c| c.p <= c.q && (c.p != c.q || c.inside));
        let anchors = a.report.check("classification_order").unwrap().measured["anchors"].as_u64().unwrap_or(0);
        let this = failed.is_empty() && order && anchors == 50 && a.morse.union() == a.chain_recurrent;
        ok &= this;
        lines.push(format!(
            "{cfg}: {} sets, {anchors} anchors, {} resolved, failed {failed:?}",
            a.morse.len(),
            resolved.len()
        ));
    }
    report("Morse decomposition checks", ok, lines.join("; "));
    assert!(ok);
}

#[test]
fn chafee_infante_structure() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let a = analysis("chafee_infante.json");
    let grid = &a.grid;
    let w = grid.max_width();
    let dec = &a.morse;
    let origin = grid.point_to_box(&[0.0]).unwrap();
    let at_origin = (1..=dec.len()).find(|&i| dec.morse_set(i).contains(origin));
    let extent = |i: usize| {
        let s = dec.morse_set(i);
        let lo = s.iter().map(|b| grid.box_lo(b)[0]).fold(f64::INFINITY, f64::min);
        let hi = s.iter().map(|b| grid.box_hi(b)[0]).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let mut ok = dec.len() == 3 && a.chain_recurrent == dec.union();
    let mut detail = format!("{} Morse sets, edges {:?}", dec.len(), dec.edges());
    if let (true, Some(m0)) = (ok, at_origin) {
        let others: Vec<usize> = (1..=3).filter(|&i| i != m0).collect();
        let (e1, e2) = (extent(others[0]), extent(others[1]));
        let (neg, pos) = if e1.1 <= 0.0 { (e1, e2) } else { (e2, e1) };
        let symmetric = neg.1 < 0.0 && pos.0 > 0.0 && (neg.0 + pos.1).abs() <= w && (neg.1 + pos.0).abs() <= w;
        let mut want = vec![(m0, others[0]), (m0, others[1])];
        want.sort();
        ok &= symmetric && dec.edges() == want;
        detail += &format!(", negative {neg:?}, positive {pos:?}");
    } else {
        ok = false;
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(600);
    report("Chafee-Infante structure", ok, format!("{detail}, {:.1} s", elapsed.as_secs_f64()));
    assert!(ok);
}
