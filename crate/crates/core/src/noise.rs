//! Driving noise: sampled two-sided Wiener paths and the shift flow acting on them.
//!
//! A [`NoisePath`] stores node values of one Brownian path on a uniform grid
//! covering `[t_min, t_max]`, anchored so that `W(0) = 0`. Shifting never
//! regenerates noise: a [`ShiftedPath`] is a view `t ↦ W(t + s) − W(s)` over the
//! same nodes, and evaluation outside the stored window is a [`NoiseError::OutOfWindow`].

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

/// Relative slack used when deciding whether a time sits on a grid node.
const GRID_SNAP: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("invalid path configuration: {0}")]
    Config(String),
    #[error("time {t} is outside the stored window [{lo}, {hi}]")]
    OutOfWindow { t: f64, lo: f64, hi: f64 },
    #[error("shift {0} is not aligned with the path grid")]
    Unaligned(f64),
}

/// One realization of two-sided Brownian motion on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    seed: u64,
    t_min: f64,
    h: f64,
    /// Node values `W(t_min + k h)`, `k = 0..=n`.
    nodes: Vec<f64>,
    /// Node index of `t = 0`.
    origin: usize,
}

fn steps_of(t: f64, h: f64) -> Option<i64> {
    let k = t / h;
    let r = k.round();
    ((k - r).abs() <= GRID_SNAP * k.abs().max(1.0)).then_some(r as i64)
}

impl NoisePath {
    /// Samples a path with i.i.d. `N(0, h)` increments drawn from a generator
    /// seeded with `seed`. Identical arguments give bit-identical paths.
    pub fn sample(seed: u64, t_min: f64, t_max: f64, h: f64) -> Result<Self, NoiseError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(NoiseError::Config(format!("step h_path = {h} must be positive")));
        }
        if !(t_min < 0.0 && t_max > 0.0) {
            return Err(NoiseError::Config(format!("window [{t_min}, {t_max}] must contain 0 in its interior")));
        }
        let back = steps_of(-t_min, h)
            .ok_or_else(|| NoiseError::Config(format!("h_path = {h} does not divide |t_min| = {}", -t_min)))?;
        let fwd = steps_of(t_max, h)
            .ok_or_else(|| NoiseError::Config(format!("h_path = {h} does not divide t_max = {t_max}")))?;
        let (back, fwd) = (back as usize, fwd as usize);
        let n = back + fwd;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, h.sqrt()).expect("positive standard deviation");
        let mut nodes = Vec::with_capacity(n + 1);
        let mut w = 0.0;
        nodes.push(w);
        for _ in 0..n {
            w += normal.sample(&mut rng);
            nodes.push(w);
        }
        let w0 = nodes[back];
        for v in &mut nodes {
            *v -= w0;
        }
        nodes[back] = 0.0;
        Ok(Self { seed, t_min: -(back as f64) * h, h, nodes, origin: back })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        (self.nodes.len() - 1 - self.origin) as f64 * self.h
    }

    /// Number of stored increments, `(t_max − t_min) / h`.
    pub fn increments(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Unshifted view of this path.
    pub fn view(&self) -> ShiftedPath<'_> {
        ShiftedPath { base: self, offset: 0 }
    }

    /// `θ_s ω` as a view on this path.
    pub fn shift(&self, s: f64) -> Result<ShiftedPath<'_>, NoiseError> {
        self.view().shift(s)
    }

    pub fn evaluate(&self, t: f64) -> Result<f64, NoiseError> {
        self.view().evaluate(t)
    }

    /// Writes `t,W` rows for every grid node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,W")?;
        for (k, w) in self.nodes.iter().enumerate() {
            let t = (k as i64 - self.origin as i64) as f64 * self.h;
            writeln!(out, "{t},{w}")?;
        }
        Ok(())
    }
}

/// The path `t ↦ W(t + s) − W(s)`; `s` is stored as a whole number of grid steps.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedPath<'a> {
    base: &'a NoisePath,
    offset: i64,
}

impl<'a> ShiftedPath<'a> {
    pub fn base(&self) -> &'a NoisePath {
        self.base
    }

    pub fn step(&self) -> f64 {
        self.base.h
    }

    /// Accumulated shift `s` in time units.
    pub fn shift_time(&self) -> f64 {
        self.offset as f64 * self.base.h
    }

    pub fn shift_steps(&self) -> i64 {
        self.offset
    }

    /// Evaluation window `[t_min − s, t_max − s]`.
    pub fn window(&self) -> (f64, f64) {
        let h = self.base.h;
        let lo = -((self.base.origin as i64 + self.offset) as f64) * h;
        let hi = (self.base.nodes.len() as i64 - 1 - self.base.origin as i64 - self.offset) as f64 * h;
        (lo, hi)
    }

    pub fn covers(&self, a: f64, b: f64) -> bool {
        let (lo, hi) = self.window();
        let slack = GRID_SNAP * self.base.h;
        a >= lo - slack && b <= hi + slack
    }

    pub fn shift(&self, s: f64) -> Result<ShiftedPath<'a>, NoiseError> {
        let k = steps_of(s, self.base.h).ok_or(NoiseError::Unaligned(s))?;
        Ok(ShiftedPath { base: self.base, offset: self.offset + k })
    }

    fn raw_node(&self, k: i64) -> Option<f64> {
        let idx = self.base.origin as i64 + self.offset + k;
        (0..self.base.nodes.len() as i64).contains(&idx).then(|| self.base.nodes[idx as usize])
    }

    fn anchor(&self) -> f64 {
        self.raw_node(0).unwrap_or(f64::NAN)
    }

    /// Value at grid node `k` (time `k h`) of the shifted path.
    pub fn node(&self, k: i64) -> Result<f64, NoiseError> {
        match (self.raw_node(k), self.raw_node(0)) {
            (Some(v), Some(a)) => Ok(v - a),
            _ => {
                let (lo, hi) = self.window();
                Err(NoiseError::OutOfWindow { t: k as f64 * self.base.h, lo, hi })
            }
        }
    }

    /// Piecewise-linear evaluation between grid nodes.
    pub fn evaluate(&self, t: f64) -> Result<f64, NoiseError> {
        let (lo, hi) = self.window();
        let out = || NoiseError::OutOfWindow { t, lo, hi };
        if !t.is_finite() || self.raw_node(0).is_none() {
            return Err(out());
        }
        let h = self.base.h;
        let x = t / h;
        let r = x.round();
        if (x - r).abs() <= GRID_SNAP * x.abs().max(1.0) {
            return self.node(r as i64).map_err(|_| out());
        }
        let k = x.floor();
        let frac = x - k;
        let k = k as i64;
        let a = self.raw_node(k).ok_or_else(out)?;
        let b = self.raw_node(k + 1).ok_or_else(out)?;
        Ok(a + frac * (b - a) - self.anchor())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_variance(v: &[f64]) -> f64 {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    }

    #[test]
    fn unit_variance_and_stationary_increments() {
        let paths: Vec<NoisePath> = (0..10_000).map(|s| NoisePath::sample(s, -2.0, 5.0, 0.1).unwrap()).collect();
        let at_one: Vec<f64> = paths.iter().map(|p| p.evaluate(1.0).unwrap()).collect();
        let at_minus_one: Vec<f64> = paths.iter().map(|p| p.evaluate(-1.0).unwrap()).collect();
        let shifted: Vec<f64> = paths.iter().map(|p| p.shift(3.7).unwrap().evaluate(1.0).unwrap()).collect();
        for (name, v) in [("W(1)", &at_one), ("W(-1)", &at_minus_one), ("θ_3.7 W(1)", &shifted)] {
            let var = sample_variance(v);
            assert!((0.94..=1.06).contains(&var), "{name}: variance {var}");
        }
    }

    #[test]
    fn same_seed_same_path() {
        let a = NoisePath::sample(7, -10.0, 10.0, 0.01).unwrap();
        let b = NoisePath::sample(7, -10.0, 10.0, 0.01).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.increments(), 2000);
        let c = NoisePath::sample(8, -10.0, 10.0, 0.01).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn anchored_at_zero() {
        let p = NoisePath::sample(3, -2.0, 1.0, 0.25).unwrap();
        assert_eq!(p.evaluate(0.0).unwrap(), 0.0);
        let q = p.shift(0.5).unwrap();
        assert_eq!(q.evaluate(0.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_non_divisible_window() {
        assert!(matches!(NoisePath::sample(1, -1.0, 1.05, 0.1), Err(NoiseError::Config(_))));
        assert!(matches!(NoisePath::sample(1, 0.0, 1.0, 0.1), Err(NoiseError::Config(_))));
        assert!(matches!(NoisePath::sample(1, -1.0, 1.0, 0.0), Err(NoiseError::Config(_))));
    }

    #[test]
    fn node_values_and_midpoints() {
        let p = NoisePath::sample(11, -1.0, 1.0, 0.1).unwrap();
        let v = p.view();
        let w3 = v.node(3).unwrap();
        let w4 = v.node(4).unwrap();
        assert_eq!(p.evaluate(0.3).unwrap(), w3);
        let mid = p.evaluate(0.35).unwrap();
        assert!((mid - 0.5 * (w3 + w4)).abs() < 1e-14);
    }

    #[test]
    fn shift_identity_and_group_law() {
        let p = NoisePath::sample(5, -10.0, 10.0, 0.01).unwrap();
        let z = p.shift(0.0).unwrap();
        let a = p.shift(1.0).unwrap().shift(2.0).unwrap();
        let b = p.shift(3.0).unwrap();
        for k in -500..500 {
            assert_eq!(z.node(k).unwrap(), p.view().node(k).unwrap());
            assert_eq!(a.node(k).unwrap(), b.node(k).unwrap());
        }
    }

    #[test]
    fn shifted_value_is_increment_of_base() {
        let p = NoisePath::sample(9, -5.0, 5.0, 0.01).unwrap();
        let q = p.shift(-1.5).unwrap();
        for &t in &[-2.0, -0.37, 0.0, 0.5, 3.2] {
            let expect = p.evaluate(t - 1.5).unwrap() - p.evaluate(-1.5).unwrap();
            assert!((q.evaluate(t).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_window_is_an_error() {
        let p = NoisePath::sample(2, -1.0, 1.0, 0.1).unwrap();
        assert!(matches!(p.evaluate(1.05), Err(NoiseError::OutOfWindow { .. })));
        let q = p.shift(0.5).unwrap();
        assert_eq!(q.window(), (-1.5, 0.5));
        assert!(q.evaluate(0.6).is_err());
        assert!(q.evaluate(-1.5).is_ok());
        assert!(matches!(p.shift(0.05), Err(NoiseError::Unaligned(_))));
    }

    #[test]
    fn csv_dump_has_all_nodes() {
        let p = NoisePath::sample(2, -1.0, 1.0, 0.5).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.contains("0,0"));
    }
}
