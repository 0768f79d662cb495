use std::f64::consts::PI;

use super::{check_args, Cocycle, State, SystemError};
use crate::noise::ShiftedPath;

/// Galerkin truncation of `du = (Δu + βu − u³)dt + δu∘dW` on `[0, π]` with
/// Dirichlet boundary conditions.
///
/// The state holds coefficients of `e_k(x) = √(2/π) sin(kx)`, `k = 1..N`. Writing
/// `v = u e^{−δW(t)}` removes the Stratonovich term and leaves the random ODE
/// `v̇ = (β − k²)v − e^{2δW(t)} P_N[v³]`, integrated with classical RK4 on the frozen
/// path. The cubic is evaluated on `M = 2N` interior collocation nodes, which is
/// exact for the projection of a cubic in `N` sine modes.
#[derive(Debug, Clone)]
pub struct ChafeeInfanteGalerkin {
    n_modes: usize,
    beta: f64,
    delta: f64,
    h_int: f64,
    /// `basis[j * n + k] = e_{k+1}(x_j)`.
    basis: Vec<f64>,
    nodes: usize,
    weight: f64,
}

impl ChafeeInfanteGalerkin {
    pub fn new(n_modes: usize, beta: f64, delta: f64, h_int: f64) -> Result<Self, SystemError> {
        if n_modes == 0 {
            return Err(SystemError::InvalidArgument("n_modes must be positive".into()));
        }
        if !(h_int > 0.0 && h_int.is_finite()) {
            return Err(SystemError::InvalidArgument(format!("h_int = {h_int} must be positive")));
        }
        if !(beta.is_finite() && delta.is_finite() && delta >= 0.0) {
            return Err(SystemError::InvalidArgument("beta must be finite and delta >= 0".into()));
        }
        let nodes = 2 * n_modes;
        let scale = (2.0 / PI).sqrt();
        let mut basis = Vec::with_capacity(nodes * n_modes);
        for j in 1..=nodes {
            let x = j as f64 * PI / (nodes + 1) as f64;
            for k in 1..=n_modes {
                basis.push(scale * (k as f64 * x).sin());
            }
        }
        Ok(Self { n_modes, beta, delta, h_int, basis, nodes, weight: PI / (nodes + 1) as f64 })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn h_int(&self) -> f64 {
        self.h_int
    }

    /// Same system with a different integration step.
    pub fn with_step(&self, h_int: f64) -> Result<Self, SystemError> {
        Self::new(self.n_modes, self.beta, self.delta, h_int)
    }

    /// Coefficients of `P_N[u³]` for `u = Σ u_k e_k`.
    pub fn project_cube(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n_modes;
        out.iter_mut().for_each(|o| *o = 0.0);
        for j in 0..self.nodes {
            let row = &self.basis[j * n..(j + 1) * n];
            let val: f64 = row.iter().zip(u).map(|(b, c)| b * c).sum();
            let cube = val * val * val * self.weight;
            for (o, b) in out.iter_mut().zip(row) {
                *o += cube * b;
            }
        }
    }

    fn rhs(&self, v: &[f64], noise_factor: f64, cube: &mut [f64], out: &mut [f64]) {
        self.project_cube(v, cube);
        for (k, o) in out.iter_mut().enumerate() {
            let lambda = self.beta - ((k + 1) * (k + 1)) as f64;
            *o = lambda * v[k] - noise_factor * cube[k];
        }
    }

    fn rk4_step(
        &self,
        omega: &ShiftedPath<'_>,
        t: f64,
        h: f64,
        v: &mut [f64],
        scratch: &mut Scratch,
    ) -> Result<(), SystemError> {
        let n = self.n_modes;
        let g = |s: f64| -> Result<f64, SystemError> { Ok((2.0 * self.delta * omega.evaluate(s)?).exp()) };
        let (g0, gm, g1) = (g(t)?, g(t + 0.5 * h)?, g(t + h)?);
        let Scratch { cube, k1, k2, k3, k4, tmp } = scratch;
        let (cube, k1, k2, k3, k4, tmp) =
            (&mut cube[..], &mut k1[..], &mut k2[..], &mut k3[..], &mut k4[..], &mut tmp[..]);
        self.rhs(v, g0, cube, k1);
        for i in 0..n {
            tmp[i] = v[i] + 0.5 * h * k1[i];
        }
        self.rhs(tmp, gm, cube, k2);
        for i in 0..n {
            tmp[i] = v[i] + 0.5 * h * k2[i];
        }
        self.rhs(tmp, gm, cube, k3);
        for i in 0..n {
            tmp[i] = v[i] + h * k3[i];
        }
        self.rhs(tmp, g1, cube, k4);
        for i in 0..n {
            v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(())
    }
}

struct Scratch {
    cube: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        let z = || vec![0.0; n];
        Self { cube: z(), k1: z(), k2: z(), k3: z(), k4: z(), tmp: z() }
    }
}

impl Cocycle for ChafeeInfanteGalerkin {
    fn name(&self) -> &str {
        "chafee_infante"
    }

    fn state_dim(&self) -> usize {
        self.n_modes
    }

    fn evolve(&self, t: f64, omega: &ShiftedPath<'_>, x: &[f64]) -> Result<State, SystemError> {
        check_args(self.n_modes, t, omega, x)?;
        let mut v = x.to_vec();
        if t == 0.0 {
            return Ok(v);
        }
        let mut scratch = Scratch::new(self.n_modes);
        let full = (t / self.h_int + 1e-9).floor() as usize;
        let mut now = 0.0;
        for i in 0..full {
            let h = self.h_int;
            self.rk4_step(omega, now, h, &mut v, &mut scratch)?;
            now = (i + 1) as f64 * self.h_int;
            if v.iter().any(|c| !c.is_finite()) {
                return Err(SystemError::BlowUp { time: now });
            }
        }
        let rest = t - now;
        if rest > 1e-9 * self.h_int {
            self.rk4_step(omega, now, rest, &mut v, &mut scratch)?;
            if v.iter().any(|c| !c.is_finite()) {
                return Err(SystemError::BlowUp { time: t });
            }
        }
        let scale = (self.delta * omega.evaluate(t)?).exp();
        v.iter_mut().for_each(|c| *c *= scale);
        Ok(v)
    }
}

/// Reduced one-dimensional view of a system: a scalar `c` is lifted to `c·e_{mode}`,
/// evolved in the full state space, and projected back onto the same coordinate.
///
/// This is an analysis surrogate for box methods on a dominant mode; it is not
/// itself a cocycle because the lift discards the other coordinates.
#[derive(Debug, Clone)]
pub struct ModeProjection<S> {
    inner: S,
    mode: usize,
    label: String,
}

impl<S: Cocycle> ModeProjection<S> {
    pub fn new(inner: S, mode: usize) -> Result<Self, SystemError> {
        if mode >= inner.state_dim() {
            return Err(SystemError::InvalidArgument(format!(
                "mode {mode} out of range for a {}-dimensional system",
                inner.state_dim()
            )));
        }
        let label = format!("{}/mode{}", inner.name(), mode + 1);
        Ok(Self { inner, mode, label })
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    pub fn lift(&self, c: f64) -> State {
        let mut u = vec![0.0; self.inner.state_dim()];
        u[self.mode] = c;
        u
    }
}

impl<S: Cocycle> Cocycle for ModeProjection<S> {
    fn name(&self) -> &str {
        &self.label
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn evolve(&self, t: f64, omega: &ShiftedPath<'_>, x: &[f64]) -> Result<State, SystemError> {
        check_args(1, t, omega, x)?;
        let full = self.inner.evolve(t, omega, &self.lift(x[0]))?;
        Ok(vec![full[self.mode]])
    }
}
