//! Lyapunov functions for attractor–repeller pairs and the complete Lyapunov
//! function of an attractor enumeration.
//!
//! For a pair `(A, R)`, `φ₀(x) = d(x, A) / (d(x, A) + d(x, R))` with distances to
//! the closed box covers, `l(x)` is the maximum of `φ₀` along the forward orbit and
//! `ĥ(x) = ½[l(x) + ∫₀^T e^{−t} l(x_t) dt]`. The complete function is
//! `L = Σₖ 3^{−k} ĥₖ` over the nontrivial pairs.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::boxdyn::{BoxError, BoxGrid, BoxSet, ClosedCover};
use crate::conley::AttractorRepeller;
use crate::noise::{NoisePath, ShiftedPath};
use crate::systems::{Cocycle, State, SystemError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LyapunovError {
    #[error("attractor or repeller is empty")]
    Degenerate,
    #[error("no nontrivial attractor-repeller pair")]
    EmptyList,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovParams {
    /// Horizon of the orbit supremum.
    pub t_sup: f64,
    /// Truncation of the exponentially weighted integral.
    pub t_quad: f64,
    /// Quadrature step of the orbit samples; a multiple of the path step.
    pub step: f64,
    /// Sampling step of the orbit supremum; a multiple of `step`.
    pub tau: f64,
    /// Allowance for resolution effects in the checks.
    pub tol_const: f64,
}

impl LyapunovParams {
    pub fn for_grid(grid: &BoxGrid) -> Self {
        Self { t_sup: 10.0, t_quad: 20.0, step: 0.1, tau: 0.1, tol_const: 2.0 * grid.max_width() }
    }

    fn validate(&self) -> Result<(), LyapunovError> {
        let ok =
            self.t_sup >= 0.0 && self.t_quad > 0.0 && self.step > 0.0 && self.tau >= self.step && self.tol_const >= 0.0;
        let finite = [self.t_sup, self.t_quad, self.step, self.tau, self.tol_const].iter().all(|v| v.is_finite());
        let ratio = self.tau / self.step;
        if !ok || !finite || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(LyapunovError::InvalidParameter(format!("{self:?}")));
        }
        Ok(())
    }

    /// Orbit steps per supremum sample.
    fn stride(&self) -> usize {
        (self.tau / self.step).round() as usize
    }

    /// Supremum samples after the starting point.
    fn sup_samples(&self) -> usize {
        (self.t_sup / self.tau + 1e-9).floor() as usize
    }

    /// Orbit steps spanned by the supremum.
    fn sup_steps(&self) -> usize {
        self.sup_samples() * self.stride()
    }

    fn quad_steps(&self) -> usize {
        (self.t_quad / self.step).ceil() as usize
    }

    /// Orbit samples needed to evaluate the field at the first `extra + 1` points.
    pub fn orbit_len(&self, extra: usize) -> usize {
        extra + self.sup_steps() + self.quad_steps() + 1
    }

    /// `e^{−T}` bound on the neglected integral tail.
    pub fn tail_bound(&self) -> f64 {
        (-(self.quad_steps() as f64) * self.step).exp()
    }
}

/// `φ₀` for one pair. Points in `A` boxes get 0 and points in `R` boxes get 1.
#[derive(Debug, Clone)]
pub struct PairFunction {
    grid: BoxGrid,
    attractor: BoxSet,
    repeller: BoxSet,
    a_cover: ClosedCover,
    r_cover: ClosedCover,
}

impl PairFunction {
    pub fn new(grid: &BoxGrid, pair: &AttractorRepeller) -> Result<Self, LyapunovError> {
        Self::from_sets(grid, &pair.attractor, &pair.repeller)
    }

    pub fn from_sets(grid: &BoxGrid, attractor: &BoxSet, repeller: &BoxSet) -> Result<Self, LyapunovError> {
        if attractor.is_empty() || repeller.is_empty() {
            return Err(LyapunovError::Degenerate);
        }
        if attractor.universe() != grid.len() || repeller.universe() != grid.len() {
            return Err(BoxError::InvalidParameter("box sets do not match the grid".into()).into());
        }
        Ok(Self {
            grid: grid.clone(),
            a_cover: ClosedCover::new(grid, attractor),
            r_cover: ClosedCover::new(grid, repeller),
            attractor: attractor.clone(),
            repeller: repeller.clone(),
        })
    }

    pub fn attractor(&self) -> &BoxSet {
        &self.attractor
    }

    pub fn repeller(&self) -> &BoxSet {
        &self.repeller
    }

    /// `Some(0.0)` / `Some(1.0)` when `x` sits in an `A` / `R` box.
    fn fixed_value(&self, x: &[f64]) -> Option<f64> {
        let b = self.grid.point_to_box(x).ok()?;
        if self.attractor.contains(b) {
            Some(0.0)
        } else if self.repeller.contains(b) {
            Some(1.0)
        } else {
            None
        }
    }

    pub fn phi0(&self, x: &[f64]) -> f64 {
        if let Some(v) = self.fixed_value(x) {
            return v;
        }
        let da = self.a_cover.distance(x);
        let dr = self.r_cover.distance(x);
        if da + dr == 0.0 {
            0.0
        } else {
            da / (da + dr)
        }
    }
}

/// States `x_k = φ(kh, ω)x` for `k = 0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub step: f64,
    pub states: Vec<State>,
}

pub fn sample_orbit<S: Cocycle + ?Sized>(
    system: &S,
    x: &[f64],
    omega: &ShiftedPath<'_>,
    step: f64,
    len: usize,
) -> Result<Orbit, LyapunovError> {
    let mut states = Vec::with_capacity(len);
    let mut view = *omega;
    let mut state = x.to_vec();
    states.push(state.clone());
    for _ in 1..len {
        state = system.evolve(step, &view, &state)?;
        view = view.shift(step).map_err(SystemError::from)?;
        states.push(state.clone());
    }
    Ok(Orbit { step, states })
}

/// Running maxima of `f[i..=i+w]` for every `i` with a full window.
fn window_max(f: &[f64], w: usize) -> Vec<f64> {
    if f.len() <= w {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(f.len() - w);
    let mut dq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for (i, &v) in f.iter().enumerate() {
        while dq.back().is_some_and(|&j| f[j] <= v) {
            dq.pop_back();
        }
        dq.push_back(i);
        if dq[0] + w < i {
            dq.pop_front();
        }
        if i >= w {
            out.push(f[dq[0]]);
        }
    }
    out
}

/// Maxima of `f[i], f[i + r], …, f[i + w·r]` for every `i` with a full window.
fn strided_max(f: &[f64], w: usize, r: usize) -> Vec<f64> {
    let span = w * r;
    if f.len() <= span {
        return Vec::new();
    }
    let mut out = vec![0.0; f.len() - span];
    for res in 0..r.min(out.len()) {
        let sub: Vec<f64> = f[res..].iter().step_by(r).cloned().collect();
        for (j, v) in window_max(&sub, w).into_iter().enumerate() {
            out[res + j * r] = v;
        }
    }
    out
}

/// Weights `(w₀, w₁)` with `∫₀ʰ e^{−s} g(s) ds = w₀ g(0) + w₁ g(h)` for linear `g`.
fn exp_weights(h: f64) -> (f64, f64) {
    let e = (-h).exp();
    let w1 = (1.0 - e * (1.0 + h)) / h;
    let w0 = (1.0 - e) - w1;
    (w0, w1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairValue {
    pub phi0: f64,
    pub l: f64,
    pub lhat: f64,
    /// The maximum was reached in the first half of the sup window.
    pub converged: bool,
}

/// Per-orbit evaluation of one pair function at every point with enough look-ahead.
#[derive(Debug, Clone)]
pub struct PairTrace {
    pub phi0: Vec<f64>,
    pub l: Vec<f64>,
    pub lhat: Vec<f64>,
    pub converged: Vec<bool>,
}

impl PairFunction {
    pub fn trace(&self, orbit: &Orbit, params: &LyapunovParams) -> PairTrace {
        let ks = params.sup_samples();
        let r = params.stride();
        let kq = params.quad_steps();
        let phi0: Vec<f64> = orbit.states.iter().map(|x| self.phi0(x)).collect();
        let fixed: Vec<Option<f64>> = orbit.states.iter().map(|x| self.fixed_value(x)).collect();
        let mut l = strided_max(&phi0, ks, r);
        let mut converged = Vec::with_capacity(l.len());
        for (i, v) in l.iter_mut().enumerate() {
            let arg = (0..=ks).find(|&k| phi0[i + k * r] == *v).unwrap_or(0);
            converged.push(arg <= ks / 2);
            if let Some(f) = fixed[i] {
                *v = f;
            }
        }
        let (w0, w1) = exp_weights(orbit.step);
        let decay = (-orbit.step).exp();
        let count = l.len().saturating_sub(kq);
        let mut lhat = Vec::with_capacity(count);
        for i in 0..count {
            let mut integral = 0.0;
            let mut scale = 1.0;
            for k in 0..kq {
                integral += scale * (w0 * l[i + k] + w1 * l[i + k + 1]);
                scale *= decay;
            }
            lhat.push(fixed[i].unwrap_or(0.5 * (l[i] + integral)));
        }
        PairTrace { phi0, l, lhat, converged }
    }

    pub fn value_at(&self, trace: &PairTrace, i: usize) -> PairValue {
        PairValue { phi0: trace.phi0[i], l: trace.l[i], lhat: trace.lhat[i], converged: trace.converged[i] }
    }
}

/// `l(x)` on the fiber `omega`.
pub fn l_sup<S: Cocycle + ?Sized>(
    pair: &PairFunction,
    system: &S,
    x: &[f64],
    omega: &ShiftedPath<'_>,
    params: &LyapunovParams,
) -> Result<PairValue, LyapunovError> {
    params.validate()?;
    let orbit = sample_orbit(system, x, omega, params.tau, params.sup_samples() + 1)?;
    let phi0: Vec<f64> = orbit.states.iter().map(|y| pair.phi0(y)).collect();
    let max = phi0.iter().cloned().fold(0.0, f64::max);
    let arg = phi0.iter().position(|&v| v == max).unwrap_or(0);
    let l = pair.fixed_value(x).unwrap_or(max);
    Ok(PairValue { phi0: phi0[0], l, lhat: f64::NAN, converged: arg <= params.sup_samples() / 2 })
}

/// `ĥ(x)` on the fiber `omega`; `l` and `converged` are filled in as well.
pub fn l_hat<S: Cocycle + ?Sized>(
    pair: &PairFunction,
    system: &S,
    x: &[f64],
    omega: &ShiftedPath<'_>,
    params: &LyapunovParams,
) -> Result<PairValue, LyapunovError> {
    params.validate()?;
    let orbit = sample_orbit(system, x, omega, params.step, params.orbit_len(0))?;
    let trace = pair.trace(&orbit, params);
    Ok(pair.value_at(&trace, 0))
}

/// `L = Σₖ 3^{−k} ĥₖ` over an ordered list of nontrivial pairs.
#[derive(Debug, Clone)]
pub struct CompleteLyapunov {
    pairs: Vec<PairFunction>,
    params: LyapunovParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldValue {
    /// `Σₖ 3^{−k} lₖ`.
    pub l: f64,
    /// `Σₖ 3^{−k} ĥₖ`, which is `L`.
    pub lhat: f64,
    /// `ĥₖ` for each pair.
    pub per_pair: Vec<f64>,
    /// `lₖ` for each pair.
    pub per_pair_l: Vec<f64>,
}

impl CompleteLyapunov {
    /// Keeps the pairs with nonempty `A` and `R`, in the given order.
    pub fn new(
        grid: &BoxGrid,
        attractors: &[AttractorRepeller],
        params: LyapunovParams,
    ) -> Result<Self, LyapunovError> {
        params.validate()?;
        let pairs: Vec<PairFunction> = attractors
            .iter()
            .filter(|p| p.is_nontrivial())
            .map(|p| PairFunction::new(grid, p))
            .collect::<Result<_, _>>()?;
        if pairs.is_empty() {
            return Err(LyapunovError::EmptyList);
        }
        Ok(Self { pairs, params })
    }

    pub fn pairs(&self) -> &[PairFunction] {
        &self.pairs
    }

    pub fn params(&self) -> &LyapunovParams {
        &self.params
    }

    pub fn weight(k: usize) -> f64 {
        3f64.powi(-(k as i32 + 1))
    }

    /// The value `L` takes on a box lying in `A_k` for `k ∉ in_repeller` and in `R_k`
    /// for `k ∈ in_repeller`.
    pub fn level(&self, in_repeller: &[bool]) -> f64 {
        in_repeller.iter().enumerate().filter(|p| *p.1).map(|(k, _)| Self::weight(k)).sum()
    }

    /// Field values at orbit indices `0..=extra`.
    pub fn evaluate_orbit(&self, orbit: &Orbit, extra: usize) -> Vec<FieldValue> {
        let traces: Vec<PairTrace> = self.pairs.iter().map(|p| p.trace(orbit, &self.params)).collect();
        (0..=extra)
            .map(|i| {
                let per_pair: Vec<f64> = traces.iter().map(|t| t.lhat[i]).collect();
                FieldValue {
                    l: traces.iter().enumerate().map(|(k, t)| Self::weight(k) * t.l[i]).sum(),
                    lhat: per_pair.iter().enumerate().map(|(k, v)| Self::weight(k) * v).sum(),
                    per_pair,
                    per_pair_l: traces.iter().map(|t| t.l[i]).collect(),
                }
            })
            .collect()
    }

    pub fn evaluate<S: Cocycle + ?Sized>(
        &self,
        system: &S,
        x: &[f64],
        omega: &ShiftedPath<'_>,
    ) -> Result<FieldValue, LyapunovError> {
        let orbit = sample_orbit(system, x, omega, self.params.step, self.params.orbit_len(0))?;
        Ok(self.evaluate_orbit(&orbit, 0).remove(0))
    }
}

/// Values of the complete function at box centers, per seed, on the fiber at time 0.
#[derive(Debug, Clone, Serialize)]
pub struct LyapunovField {
    pub seeds: Vec<u64>,
    /// `values[s][b]` for seed index `s` and box `b`.
    pub values: Vec<Vec<FieldValue>>,
    pub params: LyapunovParams,
    pub pairs: usize,
    #[serde(skip)]
    pub grid: Option<BoxGrid>,
}

pub fn complete_lyapunov<S: Cocycle + ?Sized>(
    grid: &BoxGrid,
    attractors: &[AttractorRepeller],
    system: &S,
    paths: &[NoisePath],
    params: LyapunovParams,
) -> Result<(CompleteLyapunov, LyapunovField), LyapunovError> {
    let func = CompleteLyapunov::new(grid, attractors, params)?;
    let mut values = Vec::with_capacity(paths.len());
    for path in paths {
        let row: Vec<FieldValue> = (0..grid.len())
            .into_par_iter()
            .map(|b| func.evaluate(system, &grid.center(b), &path.view()))
            .collect::<Result<_, _>>()?;
        values.push(row);
    }
    let field = LyapunovField {
        seeds: paths.iter().map(|p| p.seed()).collect(),
        values,
        params,
        pairs: func.pairs.len(),
        grid: Some(grid.clone()),
    };
    Ok((func, field))
}

impl LyapunovField {
    /// Rows `seed,box,l,lhat,L`.
    pub fn write_csv<W: Write>(&self, mut out: W, config_hash: &str) -> std::io::Result<()> {
        writeln!(out, "# config_hash={config_hash}")?;
        writeln!(out, "seed,box,l,lhat,L")?;
        for (s, row) in self.seeds.iter().zip(&self.values) {
            for (b, v) in row.iter().enumerate() {
                writeln!(out, "{s},{b},{:.12},{:.12},{:.12}", v.l, v.lhat, v.lhat)?;
            }
        }
        Ok(())
    }

    /// Per seed, boxes grouped by `L` rounded to `resolution`.
    pub fn level_sets_json(&self, resolution: f64, config_hash: &str) -> serde_json::Value {
        let seeds: Vec<serde_json::Value> = self
            .seeds
            .iter()
            .zip(&self.values)
            .map(|(s, row)| {
                let mut groups: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
                for (b, v) in row.iter().enumerate() {
                    groups.entry((v.lhat / resolution).round() as i64).or_default().push(b);
                }
                let levels: Vec<serde_json::Value> = groups
                    .into_iter()
                    .map(|(k, boxes)| serde_json::json!({ "value": k as f64 * resolution, "boxes": boxes }))
                    .collect();
                serde_json::json!({ "seed": s, "levels": levels })
            })
            .collect();
        serde_json::json!({ "config_hash": config_hash, "resolution": resolution, "seeds": seeds })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecreaseReport {
    pub dt: f64,
    pub pairs_checked: usize,
    /// Fraction of `(anchor, seed)` pairs with `ΔL ≤ tol_const`.
    pub non_increase_fraction: f64,
    pub max_increase: f64,
    pub non_cr_pairs: usize,
    /// Fraction of non-chain-recurrent pairs with `ΔL < 0`.
    pub strict_decrease_fraction: f64,
    pub cr_pairs: usize,
    /// Largest `|ΔL|` over chain-recurrent pairs.
    pub cr_max_deviation: f64,
}

fn shift_steps(dt: f64, step: f64) -> Result<usize, LyapunovError> {
    let shift = (dt / step).round() as usize;
    if shift == 0 || ((shift as f64) * step - dt).abs() > 1e-9 * dt {
        return Err(LyapunovError::InvalidParameter(format!("dt = {dt} must be a positive multiple of {step}")));
    }
    Ok(shift)
}

/// Compares `L(θ_Δt ω, φ(Δt, ω)x)` with `L(ω, x)` for every anchor and path.
///
/// `is_cr(x, y)` decides whether the pair `x ↦ y = φ(Δt, ω)x` counts as chain recurrent.
pub fn verify_decrease<S, F>(
    func: &CompleteLyapunov,
    system: &S,
    anchors: &[State],
    paths: &[NoisePath],
    dt: f64,
    is_cr: F,
) -> Result<DecreaseReport, LyapunovError>
where
    S: Cocycle + ?Sized,
    F: Fn(&[f64], &[f64]) -> bool + Sync,
{
    let p = func.params;
    let shift = shift_steps(dt, p.step)?;
    let jobs: Vec<(usize, usize)> = (0..paths.len()).flat_map(|s| (0..anchors.len()).map(move |a| (s, a))).collect();
    let deltas: Vec<(f64, bool)> = jobs
        .par_iter()
        .map(|&(s, a)| {
            let orbit = sample_orbit(system, &anchors[a], &paths[s].view(), p.step, p.orbit_len(shift))?;
            let v = func.evaluate_orbit(&orbit, shift);
            Ok((v[shift].lhat - v[0].lhat, is_cr(&orbit.states[0], &orbit.states[shift])))
        })
        .collect::<Result<_, LyapunovError>>()?;
    let n = deltas.len().max(1) as f64;
    let non_cr: Vec<f64> = deltas.iter().filter(|d| !d.1).map(|d| d.0).collect();
    let cr: Vec<f64> = deltas.iter().filter(|d| d.1).map(|d| d.0).collect();
    Ok(DecreaseReport {
        dt,
        pairs_checked: deltas.len(),
        non_increase_fraction: deltas.iter().filter(|d| d.0 <= p.tol_const).count() as f64 / n,
        max_increase: deltas.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max),
        non_cr_pairs: non_cr.len(),
        strict_decrease_fraction: if non_cr.is_empty() {
            1.0
        } else {
            non_cr.iter().filter(|&&d| d < 0.0).count() as f64 / non_cr.len() as f64
        },
        cr_pairs: cr.len(),
        cr_max_deviation: cr.iter().map(|d| d.abs()).fold(0.0, f64::max),
    })
}

/// Checks of a single pair function over all box centers and paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub evaluated_points: usize,
    /// Anchors in `A` boxes give exactly 0 and anchors in `R` boxes exactly 1.
    pub exact_values: bool,
    pub sandwich_violations: usize,
    /// Largest `l(x_t) − l(x)` for `t = kτ ≤ T_sup`.
    pub max_orbit_increase: f64,
    pub orbit_violations: usize,
    pub unconverged: usize,
    /// Anchors outside `A ∪ R` times paths.
    pub outside_pairs: usize,
    pub strict_decrease_fraction: f64,
}

pub fn verify_pair<S: Cocycle + ?Sized>(
    pair: &PairFunction,
    system: &S,
    paths: &[NoisePath],
    params: &LyapunovParams,
    dt: f64,
) -> Result<PairReport, LyapunovError> {
    params.validate()?;
    let shift = shift_steps(dt, params.step)?;
    let ks = params.sup_steps();
    let grid = &pair.grid;
    let len = params.orbit_len(shift.max(ks));
    struct One {
        exact: bool,
        sandwich: usize,
        evaluated: usize,
        increase: f64,
        converged: bool,
        outside: Option<bool>,
    }
    let jobs: Vec<(usize, usize)> = (0..paths.len()).flat_map(|s| (0..grid.len()).map(move |b| (s, b))).collect();
    let results: Vec<One> = jobs
        .par_iter()
        .map(|&(s, b)| {
            let orbit = sample_orbit(system, &grid.center(b), &paths[s].view(), params.step, len)?;
            let t = pair.trace(&orbit, params);
            let exact = if pair.attractor.contains(b) {
                t.l[0] == 0.0 && t.lhat[0] == 0.0
            } else if pair.repeller.contains(b) {
                t.l[0] == 1.0 && t.lhat[0] == 1.0
            } else {
                true
            };
            let sandwich = t.lhat.iter().zip(&t.l).filter(|(h, l)| !(0.5 * **l <= **h && **h <= **l)).count();
            let increase = t.l[..=ks].iter().step_by(params.stride()).map(|v| v - t.l[0]).fold(0.0, f64::max);
            let outside =
                (!pair.attractor.contains(b) && !pair.repeller.contains(b)).then(|| t.lhat[shift] < t.lhat[0]);
            Ok(One { exact, sandwich, evaluated: t.lhat.len(), increase, converged: t.converged[0], outside })
        })
        .collect::<Result<_, LyapunovError>>()?;
    let outside: Vec<bool> = results.iter().filter_map(|r| r.outside).collect();
    Ok(PairReport {
        evaluated_points: results.iter().map(|r| r.evaluated).sum(),
        exact_values: results.iter().all(|r| r.exact),
        sandwich_violations: results.iter().map(|r| r.sandwich).sum(),
        max_orbit_increase: results.iter().map(|r| r.increase).fold(0.0, f64::max),
        orbit_violations: results.iter().filter(|r| r.increase > params.tol_const).count(),
        unconverged: results.iter().filter(|r| !r.converged).count(),
        outside_pairs: outside.len(),
        strict_decrease_fraction: if outside.is_empty() {
            1.0
        } else {
            outside.iter().filter(|&&d| d).count() as f64 / outside.len() as f64
        },
    })
}
