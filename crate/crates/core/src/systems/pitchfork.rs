use super::{check_args, Cocycle, State, SystemError};
use crate::noise::ShiftedPath;

/// The deterministic flow of `ẋ = βx − x³`, solved in closed form. Ignores the noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchforkFlow {
    pub beta: f64,
}

impl Default for PitchforkFlow {
    fn default() -> Self {
        Self { beta: 1.0 }
    }
}

impl PitchforkFlow {
    pub fn new(beta: f64) -> Self {
        Self { beta }
    }

    /// `x(t)` for a scalar initial value. Bernoulli substitution `y = x⁻²` gives
    /// `y(t) = e^{−2βt} y₀ + (1 − e^{−2βt})/β`.
    pub fn solve(&self, t: f64, x0: f64) -> f64 {
        if x0 == 0.0 || t == 0.0 {
            return x0;
        }
        let decay = (-2.0 * self.beta * t).exp();
        let growth = if self.beta == 0.0 { 2.0 * t } else { -(-2.0 * self.beta * t).exp_m1() / self.beta };
        x0.signum() / (decay / (x0 * x0) + growth).sqrt()
    }
}

impl Cocycle for PitchforkFlow {
    fn name(&self) -> &str {
        "pitchfork"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn evolve(&self, t: f64, omega: &ShiftedPath<'_>, x: &[f64]) -> Result<State, SystemError> {
        check_args(1, t, omega, x)?;
        Ok(vec![self.solve(t, x[0])])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoisePath;

    /// Classical RK4 on `ẋ = βx − x³`, an oracle independent of the closed form.
    fn rk4(beta: f64, x0: f64, t: f64, n: usize) -> f64 {
        let f = |x: f64| beta * x - x * x * x;
        let h = t / n as f64;
        let mut x = x0;
        for _ in 0..n {
            let k1 = f(x);
            let k2 = f(x + 0.5 * h * k1);
            let k3 = f(x + 0.5 * h * k2);
            let k4 = f(x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        x
    }

    #[test]
    fn closed_form_matches_fine_integrator() {
        let flow = PitchforkFlow::default();
        let expect = 2.0 * 1f64.exp() / (1.0 + 4.0 * (2f64.exp() - 1.0)).sqrt();
        assert!((flow.solve(1.0, 2.0) - expect).abs() < 1e-14);
        assert!((flow.solve(1.0, 2.0) - rk4(1.0, 2.0, 1.0, 20_000)).abs() < 1e-12);
        for &(beta, x0) in &[(0.0, 0.7), (-1.0, 1.5), (2.0, -0.3)] {
            let f = PitchforkFlow::new(beta);
            assert!((f.solve(0.8, x0) - rk4(beta, x0, 0.8, 20_000)).abs() < 1e-11, "beta={beta}");
        }
    }

    #[test]
    fn fixed_points_stay_put() {
        let flow = PitchforkFlow::default();
        for x in [-1.0, 0.0, 1.0] {
            assert!((flow.solve(3.0, x) - x).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_at_zero_time() {
        let p = NoisePath::sample(0, -1.0, 1.0, 0.1).unwrap();
        let flow = PitchforkFlow::default();
        assert_eq!(flow.evolve(0.0, &p.view(), &[0.1234]).unwrap(), vec![0.1234]);
        assert!(flow.evolve(2.0, &p.view(), &[0.5]).is_err());
    }
}
