//! Run configuration: JSON schema, validation and content hash.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::boxdyn::BoxGrid;
use crate::lyapunov::LyapunovParams;
use crate::noise::NoisePath;
use crate::systems::{ChafeeInfanteGalerkin, Cocycle, ModeProjection, PitchforkFlow, StochasticPitchfork};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    /// Deterministic `ẋ = βx − x³`.
    Pitchfork,
    StochasticPitchfork,
    /// Galerkin Chafee–Infante observed on its first sine mode.
    ChafeeInfante,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: SystemKind,
    pub beta: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_modes")]
    pub n_modes: usize,
    #[serde(default = "default_h_int")]
    pub h_int: f64,
}

fn default_modes() -> usize {
    8
}

fn default_h_int() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub depth: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub tau: f64,
    pub seeds: usize,
    pub master_seed: u64,
    pub fiber_times: Vec<f64>,
    pub points_per_box: usize,
    pub escape_tolerance: f64,
    pub path_step: f64,
    /// `[t_min, t_max]` of every sampled path.
    pub path_window: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKeyword {
    Finest,
}

/// `"finest"` or positions in the sorted attractor enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainSpec {
    Named(ChainKeyword),
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    pub t_sup: f64,
    pub t_quad: f64,
    pub step: f64,
    /// Sampling step of the orbit supremum; defaults to `step`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Defaults to two box widths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_const: Option<f64>,
    /// Number of seeds (the first ones of the graph ensemble) the field is evaluated on.
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub strict_decrease: f64,
    pub non_increase: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { strict_decrease: 0.95, non_increase: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationConfig {
    pub anchors: usize,
    pub backward_steps: usize,
    pub forward_steps: usize,
    pub settle_back: usize,
    pub settle_forward: usize,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        Self { anchors: 50, backward_steps: 40, forward_steps: 40, settle_back: 20, settle_forward: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub attractor_cap: usize,
    pub morse_chain: ChainSpec,
    pub lyapunov: LyapunovConfig,
    pub dt: f64,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub classification: ClassificationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub domain: DomainConfig,
    pub graph: GraphConfig,
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and positive, got {v}")))
    }
}

fn fraction(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(field, format!("must lie in [0, 1], got {v}")))
    }
}

/// `t` is an integer multiple of `h` up to rounding.
fn aligned(t: f64, h: f64) -> bool {
    let k = (t / h).round();
    (t - k * h).abs() <= 1e-9 * h.max(t.abs())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact serialization of the parsed config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.system;
        if !s.beta.is_finite() {
            return Err(invalid("system.beta", "must be finite"));
        }
        if !(s.delta.is_finite() && s.delta >= 0.0) {
            return Err(invalid("system.delta", "must be finite and non-negative"));
        }
        if s.name == SystemKind::Pitchfork && s.delta != 0.0 {
            return Err(invalid("system.delta", "the deterministic pitchfork has no noise"));
        }
        if s.name == SystemKind::ChafeeInfante {
            if s.n_modes == 0 {
                return Err(invalid("system.n_modes", "must be at least 1"));
            }
            positive("system.h_int", s.h_int)?;
        }

        let d = &self.domain;
        if d.lo.is_empty() || d.lo.len() != d.hi.len() || d.lo.len() != d.depth.len() {
            return Err(invalid("domain", "lo, hi and depth must be nonempty and of equal length"));
        }
        if d.lo.len() != 1 {
            return Err(invalid("domain", "the bundled systems are analyzed on one axis"));
        }
        for (a, b) in d.lo.iter().zip(&d.hi) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(invalid("domain.lo", format!("need finite lo < hi, got [{a}, {b}]")));
            }
        }
        for &n in &d.depth {
            if n == 0 || !n.is_power_of_two() {
                return Err(invalid("domain.depth", format!("must be a power of two, got {n}")));
            }
        }

        let g = &self.graph;
        positive("graph.tau", g.tau)?;
        positive("graph.path_step", g.path_step)?;
        if g.seeds == 0 {
            return Err(invalid("graph.seeds", "must be at least 1"));
        }
        if g.fiber_times.is_empty() || g.fiber_times.iter().any(|f| !f.is_finite()) {
            return Err(invalid("graph.fiber_times", "need at least one finite fiber time"));
        }
        if g.points_per_box == 0 {
            return Err(invalid("graph.points_per_box", "must be at least 1"));
        }
        fraction("graph.escape_tolerance", g.escape_tolerance)?;
        let [t0, t1] = g.path_window;
        if !(t0.is_finite() && t1.is_finite() && t0 <= 0.0 && t1 > 0.0) {
            return Err(invalid("graph.path_window", "need t_min <= 0 < t_max"));
        }
        if !aligned(g.tau, g.path_step) || g.fiber_times.iter().any(|&f| !aligned(f, g.path_step)) {
            return Err(invalid("graph.tau", "tau and fiber times must be multiples of path_step"));
        }
        let latest = g.fiber_times.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + g.tau;
        let earliest = g.fiber_times.iter().cloned().fold(f64::INFINITY, f64::min);
        if latest > t1 || earliest < t0 {
            return Err(invalid("graph.path_window", format!("must cover fibers [{earliest}, {latest}]")));
        }

        let a = &self.analysis;
        if a.attractor_cap == 0 {
            return Err(invalid("analysis.attractor_cap", "must be at least 1"));
        }
        if let ChainSpec::Explicit(v) = &a.morse_chain {
            if v.is_empty() || v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid("analysis.morse_chain", "explicit chains are strictly increasing positions"));
            }
        }
        let l = &a.lyapunov;
        positive("analysis.lyapunov.t_quad", l.t_quad)?;
        positive("analysis.lyapunov.step", l.step)?;
        if !(l.t_sup.is_finite() && l.t_sup >= 0.0) {
            return Err(invalid("analysis.lyapunov.t_sup", "must be finite and non-negative"));
        }
        if let Some(t) = l.tol_const {
            if !(t.is_finite() && t >= 0.0) {
                return Err(invalid("analysis.lyapunov.tol_const", "must be finite and non-negative"));
            }
        }
        if l.seeds == 0 || l.seeds > g.seeds {
            return Err(invalid("analysis.lyapunov.seeds", "must lie in 1..=graph.seeds"));
        }
        if !aligned(l.step, g.path_step) {
            return Err(invalid("analysis.lyapunov.step", "must be a multiple of graph.path_step"));
        }
        let tau = l.tau.unwrap_or(l.step);
        positive("analysis.lyapunov.tau", tau)?;
        if tau < l.step || !aligned(tau, l.step) {
            return Err(invalid("analysis.lyapunov.tau", "must be a multiple of analysis.lyapunov.step"));
        }
        positive("analysis.dt", a.dt)?;
        if !aligned(a.dt, l.step) {
            return Err(invalid("analysis.dt", "must be a multiple of analysis.lyapunov.step"));
        }
        let needed = a.dt + l.t_sup + l.t_quad + 2.0 * l.step;
        if needed > t1 {
            return Err(invalid(
                "graph.path_window",
                format!("t_max must be at least {needed} for the Lyapunov horizons"),
            ));
        }
        fraction("analysis.thresholds.strict_decrease", a.thresholds.strict_decrease)?;
        fraction("analysis.thresholds.non_increase", a.thresholds.non_increase)?;
        let c = &a.classification;
        if c.anchors == 0 || c.settle_back >= c.backward_steps.max(1) || c.settle_forward >= c.forward_steps.max(1) {
            return Err(invalid("analysis.classification", "need anchors > 0 and settle counts below the step counts"));
        }
        if c.forward_steps as f64 * g.tau > t1 {
            return Err(invalid("analysis.classification", "forward_steps * tau exceeds the path window"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<BoxGrid, ConfigError> {
        BoxGrid::new(self.domain.lo.clone(), self.domain.hi.clone(), self.domain.depth.clone())
            .map_err(|e| invalid("domain", e.to_string()))
    }

    pub fn system(&self) -> Result<Box<dyn Cocycle>, ConfigError> {
        let s = &self.system;
        let err = |e: crate::systems::SystemError| invalid("system", e.to_string());
        Ok(match s.name {
            SystemKind::Pitchfork => Box::new(PitchforkFlow::new(s.beta)),
            SystemKind::StochasticPitchfork => Box::new(StochasticPitchfork::new(s.beta, s.delta).map_err(err)?),
            SystemKind::ChafeeInfante => {
                let full = ChafeeInfanteGalerkin::new(s.n_modes, s.beta, s.delta, s.h_int).map_err(err)?;
                Box::new(ModeProjection::new(full, 0).map_err(err)?)
            }
        })
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.graph.seeds as u64).map(|i| self.graph.master_seed.wrapping_add(i)).collect()
    }

    pub fn paths(&self) -> Result<Vec<NoisePath>, ConfigError> {
        let [t0, t1] = self.graph.path_window;
        self.seeds()
            .into_iter()
            .map(|s| {
                NoisePath::sample(s, t0, t1, self.graph.path_step)
                    .map_err(|e| invalid("graph.path_window", e.to_string()))
            })
            .collect()
    }

    pub fn lyapunov_params(&self, grid: &BoxGrid) -> LyapunovParams {
        let l = &self.analysis.lyapunov;
        LyapunovParams {
            t_sup: l.t_sup,
            t_quad: l.t_quad,
            step: l.step,
            tau: l.tau.unwrap_or(l.step),
            tol_const: l.tol_const.unwrap_or(2.0 * grid.max_width()),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn pitchfork_config() -> RunConfig {
        RunConfig::from_json(
            r#"{
                "system": {"name": "pitchfork", "beta": 1.0},
                "domain": {"lo": [-2.0], "hi": [2.0], "depth": [256]},
                "graph": {"tau": 1.0, "seeds": 1, "master_seed": 7, "fiber_times": [0.0],
                          "points_per_box": 5, "escape_tolerance": 0.0, "path_step": 0.1,
                          "path_window": [-1.0, 40.0]},
                "analysis": {"attractor_cap": 64, "morse_chain": "finest",
                             "lyapunov": {"t_sup": 10.0, "t_quad": 20.0, "step": 0.1, "seeds": 1},
                             "dt": 1.0}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_and_hash() {
        let cfg = pitchfork_config();
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
        let mut other = cfg.clone();
        other.graph.tau = 2.0;
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn explicit_chain_parses() {
        let mut cfg = pitchfork_config();
        cfg.analysis.morse_chain = ChainSpec::Explicit(vec![1, 3, 4]);
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back.analysis.morse_chain, ChainSpec::Explicit(vec![1, 3, 4]));
        cfg.analysis.morse_chain = ChainSpec::Explicit(vec![3, 1]);
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid { field: "analysis.morse_chain", .. })));
    }

    #[test]
    fn named_field_errors() {
        let base = pitchfork_config();
        let check = |f: &dyn Fn(&mut RunConfig), field: &str| {
            let mut c = base.clone();
            f(&mut c);
            match c.validate() {
                Err(ConfigError::Invalid { field: got, .. }) => assert_eq!(got, field),
                other => panic!("expected error on {field}, got {other:?}"),
            }
        };
        check(&|c| c.domain.depth = vec![0], "domain.depth");
        check(&|c| c.domain.depth = vec![100], "domain.depth");
        check(&|c| c.graph.tau = -1.0, "graph.tau");
        check(&|c| c.graph.tau = 0.25, "graph.tau");
        check(&|c| c.system.beta = f64::NAN, "system.beta");
        check(&|c| c.graph.escape_tolerance = 2.0, "graph.escape_tolerance");
        check(&|c| c.graph.path_window = [-1.0, 10.0], "graph.path_window");
        check(&|c| c.analysis.lyapunov.seeds = 2, "analysis.lyapunov.seeds");
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&pitchfork_config().to_json()).unwrap();
        v["graph"]["tua"] = 1.0.into();
        assert!(matches!(RunConfig::from_json(&v.to_string()), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn seeds_follow_master_seed() {
        let mut cfg = pitchfork_config();
        cfg.graph.seeds = 3;
        assert_eq!(cfg.seeds(), vec![7, 8, 9]);
    }
}
