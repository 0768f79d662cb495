//! Named property suites run against a configuration.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::boxdyn::{hausdorff_semimetric, Cover};
use crate::config::{RunConfig, SystemKind};
use crate::conley::oracle::check_lattice;
use crate::lyapunov::{verify_pair, PairFunction};
use crate::noise::NoisePath;
use crate::pipeline::{run_analyze, Check, PipelineError, Report};
use crate::systems::{
    cocycle_residual, euclidean, evolve_pullback, ChafeeInfanteGalerkin, Cocycle, FixedPointSign, StochasticPitchfork,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Cocycle,
    LatticeOracle,
    Lyapunov,
    Morse,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cocycle" => Ok(Suite::Cocycle),
            "lattice-oracle" => Ok(Suite::LatticeOracle),
            "lyapunov" => Ok(Suite::Lyapunov),
            "morse" => Ok(Suite::Morse),
            other => Err(format!("unknown suite `{other}` (expected cocycle, lattice-oracle, lyapunov or morse)")),
        }
    }
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Cocycle => "cocycle",
            Suite::LatticeOracle => "lattice-oracle",
            Suite::Lyapunov => "lyapunov",
            Suite::Morse => "morse",
        }
    }

    /// File name of the suite report.
    pub fn file_name(self) -> String {
        format!("verify_{}.json", self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub trials: usize,
    pub max_residual: f64,
}

/// Maximum of `|φ(t+s, ω)x − φ(t, θ_sω)φ(s, ω)x|` over random grid-aligned `(t, s, x, seed)`.
///
/// `t` and `s` are multiples of the path step in `(0, t_max]`; `x` is drawn by `draw`.
pub fn residual_trials<S, D>(
    system: &S,
    paths: &[NoisePath],
    trials: usize,
    t_max: f64,
    rng_seed: u64,
    mut draw: D,
) -> Result<ResidualReport, PipelineError>
where
    S: Cocycle + ?Sized,
    D: FnMut(&mut ChaCha8Rng) -> Vec<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut max_residual: f64 = 0.0;
    for _ in 0..trials {
        let path = &paths[rng.gen_range(0..paths.len())];
        let h = path.step();
        let k_max = ((t_max / h).round() as usize).max(1);
        let t = rng.gen_range(1..=k_max) as f64 * h;
        let s = rng.gen_range(1..=k_max) as f64 * h;
        let x = draw(&mut rng);
        let r = cocycle_residual(system, t, s, &path.view(), &x).map_err(crate::boxdyn::BoxError::from)?;
        max_residual = max_residual.max(r);
    }
    Ok(ResidualReport { trials, max_residual })
}

/// Uniform point of the ball `‖x‖ ≤ radius` in `dim` dimensions.
pub fn ball_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect();
        if v.iter().map(|c| c * c).sum::<f64>() <= radius * radius {
            return v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRefinement {
    pub h_int: f64,
    pub error_h: f64,
    pub error_half: f64,
    /// `error_h / error_half`.
    pub ratio: f64,
    pub residual_h: f64,
    pub residual_half: f64,
}

/// Integration error at `h` and `h/2` against a `h/16` reference, plus the cocycle
/// residual at both steps.
pub fn galerkin_refinement(
    system: &ChafeeInfanteGalerkin,
    paths: &[NoisePath],
    trials: usize,
    horizon: f64,
    rng_seed: u64,
) -> Result<StepRefinement, PipelineError> {
    let sys_err = |e: crate::systems::SystemError| PipelineError::Box(e.into());
    let h = system.h_int();
    let half = system.with_step(h / 2.0).map_err(sys_err)?;
    let fine = system.with_step(h / 16.0).map_err(sys_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (mut e1, mut e2): (f64, f64) = (0.0, 0.0);
    for k in 0..trials {
        let x = ball_point(&mut rng, system.state_dim(), 2.0);
        let omega = paths[k % paths.len()].view();
        let reference = fine.evolve(horizon, &omega, &x).map_err(sys_err)?;
        e1 = e1.max(euclidean(&system.evolve(horizon, &omega, &x).map_err(sys_err)?, &reference));
        e2 = e2.max(euclidean(&half.evolve(horizon, &omega, &x).map_err(sys_err)?, &reference));
    }
    let draw = |r: &mut ChaCha8Rng| ball_point(r, system.state_dim(), 2.0);
    let residual_h = residual_trials(system, paths, trials, horizon / 2.0, rng_seed, draw)?.max_residual;
    let residual_half = residual_trials(&half, paths, trials, horizon / 2.0, rng_seed, draw)?.max_residual;
    Ok(StepRefinement { h_int: h, error_h: e1, error_half: e2, ratio: e1 / e2, residual_h, residual_half })
}

/// Distance increases at or below this are floating-point noise once the images meet `±a`.
pub const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullbackReport {
    pub seeds: usize,
    pub horizon: f64,
    /// Seeds with `|φ(T, θ_{−T}ω)2 − a(ω)| / a(ω) ≤ tolerance`.
    pub accurate: usize,
    pub max_relative_error: f64,
    /// Seeds whose distance `d(φ(t, θ_{−t}ω)[lo, hi] | [−a, a])` increased by more than
    /// [`ROUNDING_SLACK`] somewhere on `t ≥ settle`.
    pub non_monotone: usize,
    /// Largest one-step increase of the distance on `t ≥ settle`.
    pub max_increase: f64,
    /// Seeds whose distance at the horizon is below `2 · box_width`.
    pub converged: usize,
    pub max_final_distance: f64,
}

/// Pull-back convergence of the stochastic pitchfork towards `[−a(ω), a(ω)]`.
///
/// `a(ω)` comes from [`StochasticPitchfork::random_fixed_point`] with horizon `oracle_horizon`.
/// The image of `[lo, hi]` is an interval with endpoints the images of `lo` and `hi`.
#[allow(clippy::too_many_arguments)]
pub fn pullback_check(
    system: &StochasticPitchfork,
    paths: &[NoisePath],
    domain: (f64, f64),
    horizon: f64,
    settle: f64,
    sample_step: f64,
    oracle_horizon: f64,
    tolerance: f64,
    box_width: f64,
) -> Result<PullbackReport, PipelineError> {
    let sys_err = |e: crate::systems::SystemError| PipelineError::Box(e.into());
    let mut report = PullbackReport {
        seeds: paths.len(),
        horizon,
        accurate: 0,
        max_relative_error: 0.0,
        non_monotone: 0,
        max_increase: 0.0,
        converged: 0,
        max_final_distance: 0.0,
    };
    for path in paths {
        let omega = path.view();
        let a = system.random_fixed_point(FixedPointSign::Positive, &omega, oracle_horizon).map_err(sys_err)?.value;
        let top = evolve_pullback(system, horizon, &omega, &[domain.1]).map_err(sys_err)?[0];
        let rel = (top - a).abs() / a;
        report.max_relative_error = report.max_relative_error.max(rel);
        if rel <= tolerance {
            report.accurate += 1;
        }
        let target = [vec![-a], vec![a]];
        let distance = |t: f64| -> Result<f64, PipelineError> {
            let lo = evolve_pullback(system, t, &omega, &[domain.0]).map_err(sys_err)?;
            let hi = evolve_pullback(system, t, &omega, &[domain.1]).map_err(sys_err)?;
            Ok(hausdorff_semimetric(Cover::Region(&lo, &hi), Cover::Region(&target[0], &target[1]))?.value)
        };
        let steps = ((horizon - settle) / sample_step).round() as usize;
        let mut prev = distance(settle)?;
        let mut monotone = true;
        for k in 1..=steps {
            let d = distance(settle + k as f64 * sample_step)?;
            report.max_increase = report.max_increase.max(d - prev);
            if d > prev + ROUNDING_SLACK {
                monotone = false;
            }
            prev = d;
        }
        if !monotone {
            report.non_monotone += 1;
        }
        report.max_final_distance = report.max_final_distance.max(prev);
        if prev < 2.0 * box_width {
            report.converged += 1;
        }
    }
    Ok(report)
}

fn suite_report(config: &RunConfig, checks: Vec<Check>, summary: Value) -> Report {
    Report { config_hash: config.hash(), system: format!("{:?}", config.system.name), summary, checks }
}

pub fn run_verify(config: &RunConfig, suite: Suite) -> Result<Report, PipelineError> {
    config.validate()?;
    match suite {
        Suite::Cocycle => cocycle_suite(config),
        Suite::LatticeOracle => {
            let cases: Vec<_> = (0..200).map(|s| check_lattice(config.graph.master_seed.wrapping_add(s), 10)).collect();
            let passed = cases.iter().filter(|c| c.lattice_equals_scc).count();
            let enumerated = cases.iter().filter(|c| c.enumeration_matches).count();
            let checks = vec![
                Check::hard("lattice_identity_random_digraphs", passed == cases.len(), json!(passed)),
                Check::hard("enumeration_matches_brute_force", enumerated == cases.len(), json!(enumerated)),
            ];
            Ok(suite_report(config, checks, json!({ "digraphs": cases.len(), "max_nodes": 10 })))
        }
        Suite::Morse => {
            let a = run_analyze(config)?;
            let checks: Vec<Check> = a
                .report
                .checks
                .iter()
                .filter(|c| {
                    c.name.starts_with("morse") || c.name == "classification_order" || c.name == "lattice_identity"
                })
                .cloned()
                .collect();
            let summary =
                json!({ "morse_sets": a.morse.len(), "edges": a.morse.edges(), "classified": a.classifications });
            Ok(suite_report(config, checks, summary))
        }
        Suite::Lyapunov => {
            let a = run_analyze(config)?;
            let mut checks: Vec<Check> =
                a.report.checks.iter().filter(|c| c.name.starts_with("lyapunov")).cloned().collect();
            let pair =
                a.attractors.iter().find(|p| p.is_nontrivial()).ok_or(crate::lyapunov::LyapunovError::EmptyList)?;
            let pf = PairFunction::new(&a.grid, pair)?;
            let params = a.lyapunov.params();
            let lseeds = &a.paths[..config.analysis.lyapunov.seeds];
            let r = verify_pair(&pf, a.system.as_ref(), lseeds, params, config.analysis.dt)?;
            let th = &config.analysis.thresholds;
            checks.push(Check::hard("pair_exact_values", r.exact_values, json!(r.exact_values)));
            checks.push(Check::hard("pair_sandwich", r.sandwich_violations == 0, json!(r.sandwich_violations)));
            checks.push(Check::accuracy(
                "pair_orbit_non_increase",
                r.orbit_violations == 0,
                json!({ "violations": r.orbit_violations, "max_increase": r.max_orbit_increase }),
                json!(params.tol_const),
            ));
            checks.push(Check::accuracy(
                "pair_strict_decrease",
                r.strict_decrease_fraction >= th.strict_decrease,
                json!(r.strict_decrease_fraction),
                json!(th.strict_decrease),
            ));
            let summary =
                json!({ "pair": { "A": pair.attractor.to_vec(), "R_boxes": pair.repeller.len() }, "pair_report": r });
            Ok(suite_report(config, checks, summary))
        }
    }
}

fn cocycle_suite(config: &RunConfig) -> Result<Report, PipelineError> {
    let sc = &config.system;
    let paths = config.paths()?;
    let seed = config.graph.master_seed;
    let (lo, hi) = (config.domain.lo[0], config.domain.hi[0]);
    let mut checks = Vec::new();
    let mut summary = serde_json::Map::new();
    match sc.name {
        SystemKind::Pitchfork | SystemKind::StochasticPitchfork => {
            let system = config.system()?;
            let r = residual_trials(system.as_ref(), &paths, 100, 5.0, seed, |rng| vec![rng.gen_range(lo..=hi)])?;
            checks.push(Check::accuracy(
                "cocycle_residual",
                r.max_residual <= 1e-9,
                json!(r.max_residual),
                json!(1e-9),
            ));
            summary.insert("residual".into(), json!(r));
            if sc.name == SystemKind::StochasticPitchfork && sc.beta > 0.0 {
                let sp = StochasticPitchfork::new(sc.beta, sc.delta).map_err(|e| PipelineError::Box(e.into()))?;
                let ens: Vec<NoisePath> = (0..100)
                    .map(|i| NoisePath::sample(seed.wrapping_add(i), -45.0, 1.0, config.graph.path_step))
                    .collect::<Result<_, _>>()
                    .map_err(|e| PipelineError::Box(crate::systems::SystemError::from(e).into()))?;
                let width = config.grid()?.max_width();
                let p = pullback_check(&sp, &ens, (lo, hi), 30.0, 5.0, 1.0, 40.0, 1e-2, width)?;
                checks.push(Check::accuracy("pullback_fixed_point", p.accurate >= 95, json!(p.accurate), json!(95)));
                checks.push(Check::accuracy("pullback_monotone", p.non_monotone == 0, json!(p.non_monotone), json!(0)));
                checks.push(Check::accuracy(
                    "pullback_converged",
                    p.converged == p.seeds,
                    json!(p.converged),
                    json!(p.seeds),
                ));
                summary.insert("pullback".into(), json!(p));
            }
        }
        SystemKind::ChafeeInfante => {
            let full = ChafeeInfanteGalerkin::new(sc.n_modes, sc.beta, sc.delta, sc.h_int)
                .map_err(|e| PipelineError::Box(e.into()))?;
            let r = galerkin_refinement(&full, &paths, 20, 1.0, seed)?;
            checks.push(Check::accuracy("cocycle_residual", r.residual_h <= 5e-3, json!(r.residual_h), json!(5e-3)));
            checks.push(Check::accuracy("step_halving_ratio", r.ratio >= 3.5, json!(r.ratio), json!(3.5)));
            summary.insert("refinement".into(), json!(r));
        }
    }
    Ok(suite_report(config, checks, Value::Object(summary)))
}
