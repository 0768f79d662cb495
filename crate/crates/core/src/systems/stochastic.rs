use super::{check_args, Cocycle, State, SystemError};
use crate::noise::ShiftedPath;

/// The scalar Stratonovich SDE `du = (βu − u³)dt + δu∘dW`.
///
/// With `E(t) = βt + δW(t)` the solution is
/// `u(t) = u₀ e^{E(t)} / (1 + 2u₀² ∫₀ᵗ e^{2E(s)} ds)^{1/2}`,
/// evaluated as `sign(u₀) / (e^{−2E(t)}/u₀² + 2∫₀ᵗ e^{2(E(s)−E(t))} ds)^{1/2}` so that
/// long horizons do not overflow. The integral uses the trapezoid rule on the path grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticPitchfork {
    pub beta: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointSign {
    Positive,
    Negative,
    Zero,
}

/// `±a(ω)` together with the relative size of the neglected tail `∫_{−∞}^{−T}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointEstimate {
    pub value: f64,
    pub relative_tail: f64,
}

impl FixedPointEstimate {
    pub const DEFAULT_TOLERANCE: f64 = 1e-8;

    pub fn accurate(&self, tol: f64) -> bool {
        self.relative_tail <= tol
    }
}

/// State-independent part of the solution over one fiber: `E(t)` and `J(t)`.
#[derive(Debug, Clone, Copy)]
struct Propagator {
    exponent: f64,
    integral: f64,
}

impl Propagator {
    fn apply(&self, x0: f64) -> f64 {
        if x0 == 0.0 {
            return 0.0;
        }
        x0.signum() / ((-2.0 * self.exponent).exp() / (x0 * x0) + 2.0 * self.integral).sqrt()
    }
}

impl StochasticPitchfork {
    pub fn new(beta: f64, delta: f64) -> Result<Self, SystemError> {
        if !(beta.is_finite() && delta.is_finite() && delta >= 0.0) {
            return Err(SystemError::InvalidArgument(format!(
                "stochastic pitchfork needs finite beta and delta >= 0 (got {beta}, {delta})"
            )));
        }
        Ok(Self { beta, delta })
    }

    fn exponent_at(&self, omega: &ShiftedPath<'_>, t: f64) -> Result<f64, SystemError> {
        Ok(self.beta * t + self.delta * omega.evaluate(t)?)
    }

    fn propagator(&self, t: f64, omega: &ShiftedPath<'_>) -> Result<Propagator, SystemError> {
        let h = omega.step();
        let mut times = Vec::new();
        let full = ((t / h) + 1e-9).floor() as i64;
        for k in 0..=full {
            times.push((k as f64 * h, self.beta * k as f64 * h + self.delta * omega.node(k)?));
        }
        if t - full as f64 * h > 1e-9 * h {
            times.push((t, self.exponent_at(omega, t)?));
        }
        let end = times.last().map(|p| p.1).unwrap_or(0.0);
        let integral = times
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * ((2.0 * (w[0].1 - end)).exp() + (2.0 * (w[1].1 - end)).exp()))
            .sum();
        Ok(Propagator { exponent: end, integral })
    }

    /// `±a(ω) = ±(2∫_{−T}^0 e^{2βs + 2δW(s)} ds)^{−1/2}` by trapezoid quadrature on the path nodes.
    pub fn random_fixed_point(
        &self,
        sign: FixedPointSign,
        omega: &ShiftedPath<'_>,
        horizon: f64,
    ) -> Result<FixedPointEstimate, SystemError> {
        if sign == FixedPointSign::Zero {
            return Ok(FixedPointEstimate { value: 0.0, relative_tail: 0.0 });
        }
        if self.beta <= 0.0 {
            return Err(SystemError::InvalidArgument("random fixed points need beta > 0".into()));
        }
        if !omega.covers(-horizon, 0.0) {
            let (lo, hi) = omega.window();
            return Err(crate::noise::NoiseError::OutOfWindow { t: -horizon, lo, hi }.into());
        }
        let h = omega.step();
        let n = (horizon / h).round() as i64;
        let weight = |k: i64| -> Result<f64, SystemError> {
            let s = -(k as f64) * h;
            Ok((2.0 * self.beta * s + 2.0 * self.delta * omega.node(-k)?).exp())
        };
        let mut integral = 0.5 * (weight(0)? + weight(n)?);
        for k in 1..n {
            integral += weight(k)?;
        }
        integral *= h;
        let tail = (-2.0 * self.beta * horizon).exp() / (2.0 * self.beta);
        let magnitude = (2.0 * integral).powf(-0.5);
        let value = match sign {
            FixedPointSign::Positive => magnitude,
            FixedPointSign::Negative => -magnitude,
            FixedPointSign::Zero => unreachable!(),
        };
        Ok(FixedPointEstimate { value, relative_tail: tail / integral })
    }
}

impl Cocycle for StochasticPitchfork {
    fn name(&self) -> &str {
        "stochastic_pitchfork"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn evolve(&self, t: f64, omega: &ShiftedPath<'_>, x: &[f64]) -> Result<State, SystemError> {
        check_args(1, t, omega, x)?;
        if t == 0.0 {
            return Ok(x.to_vec());
        }
        let value = self.propagator(t, omega)?.apply(x[0]);
        if !value.is_finite() {
            return Err(SystemError::BlowUp { time: t });
        }
        Ok(vec![value])
    }

    fn evolve_batch(&self, t: f64, omega: &ShiftedPath<'_>, xs: &[State]) -> Vec<Result<State, SystemError>> {
        let prop = match xs.first() {
            Some(x) => check_args(1, t, omega, x).and_then(|_| self.propagator(t, omega)),
            None => return Vec::new(),
        };
        xs.iter()
            .map(|x| {
                check_args(1, t, omega, x)?;
                if t == 0.0 {
                    return Ok(x.clone());
                }
                let p = prop.clone()?;
                Ok(vec![p.apply(x[0])])
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoisePath;
    use crate::systems::{cocycle_residual, evolve_pullback};
    use proptest::prelude::*;

    #[test]
    fn reduces_to_deterministic_flow_without_noise() {
        let p = NoisePath::sample(1, -1.0, 2.0, 0.01).unwrap();
        let sys = StochasticPitchfork::new(1.0, 0.0).unwrap();
        let det = crate::systems::PitchforkFlow::default();
        let x = sys.evolve(1.0, &p.view(), &[2.0]).unwrap()[0];
        // trapezoid on e^{2s} with h = 0.01 has relative error ~ h²/3
        assert!((x - det.solve(1.0, 2.0)).abs() < 1e-4);
    }

    #[test]
    fn zero_is_fixed() {
        let p = NoisePath::sample(4, -1.0, 2.0, 0.01).unwrap();
        let sys = StochasticPitchfork::new(1.0, 0.5).unwrap();
        assert_eq!(sys.evolve(1.3, &p.view(), &[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn pullback_converges_to_fixed_point() {
        let p = NoisePath::sample(21, -40.0, 5.0, 0.01).unwrap();
        let sys = StochasticPitchfork::new(1.0, 0.3).unwrap();
        let a = sys.random_fixed_point(FixedPointSign::Positive, &p.view(), 35.0).unwrap();
        assert!(a.accurate(FixedPointEstimate::DEFAULT_TOLERANCE));
        let x = evolve_pullback(&sys, 30.0, &p.view(), &[2.0]).unwrap()[0];
        assert!((x - a.value).abs() / a.value < 1e-6);
        let neg = sys.random_fixed_point(FixedPointSign::Negative, &p.view(), 35.0).unwrap();
        assert_eq!(neg.value, -a.value);
    }

    #[test]
    fn fixed_point_is_equivariant() {
        let sys = StochasticPitchfork::new(1.0, 0.3).unwrap();
        let t = 2.0;
        for seed in 0..100 {
            let p = NoisePath::sample(500 + seed, -45.0, 3.0, 0.01).unwrap();
            let a = sys.random_fixed_point(FixedPointSign::Positive, &p.view(), 40.0).unwrap().value;
            let shifted = sys.random_fixed_point(FixedPointSign::Positive, &p.shift(t).unwrap(), 40.0).unwrap().value;
            let image = sys.evolve(t, &p.view(), &[a]).unwrap()[0];
            assert!((image - shifted).abs() / shifted <= 1e-2, "seed {seed}: {image} vs {shifted}");
        }
    }

    #[test]
    fn deterministic_fixed_point_integral() {
        let p = NoisePath::sample(0, -30.0, 1.0, 0.01).unwrap();
        let sys = StochasticPitchfork::new(1.0, 0.0).unwrap();
        let a = sys.random_fixed_point(FixedPointSign::Positive, &p.view(), 30.0).unwrap();
        let exact = (1.0 - (-60f64).exp()).powf(-0.5);
        assert!((a.value - exact).abs() < 1e-4);
        let short = sys.random_fixed_point(FixedPointSign::Positive, &p.view(), 2.0).unwrap();
        assert!(!short.accurate(FixedPointEstimate::DEFAULT_TOLERANCE));
        let zero = sys.random_fixed_point(FixedPointSign::Zero, &p.view(), 30.0).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn batch_matches_single() {
        let p = NoisePath::sample(2, -1.0, 3.0, 0.01).unwrap();
        let sys = StochasticPitchfork::new(1.0, 0.4).unwrap();
        let xs: Vec<State> = (0..9).map(|i| vec![-2.0 + 0.5 * i as f64]).collect();
        let batch = sys.evolve_batch(1.7, &p.view(), &xs);
        for (x, b) in xs.iter().zip(batch) {
            assert_eq!(sys.evolve(1.7, &p.view(), x).unwrap(), b.unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn cocycle_law_on_shared_grid(seed in 0u64..1000, ti in 0i64..300, si in 0i64..300, x in -2.0f64..2.0) {
            let p = NoisePath::sample(seed, -1.0, 7.0, 0.01).unwrap();
            let sys = StochasticPitchfork::new(1.0, 0.3).unwrap();
            let r = cocycle_residual(&sys, ti as f64 * 0.01, si as f64 * 0.01, &p.view(), &[x]).unwrap();
            prop_assert!(r <= 1e-9, "residual {r}");
        }

        #[test]
        fn order_and_sign_preserved(seed in 0u64..1000, x in -2.0f64..2.0, dy in 0.0f64..1.0, t in 0.0f64..3.0) {
            let p = NoisePath::sample(seed, -1.0, 4.0, 0.01).unwrap();
            let sys = StochasticPitchfork::new(1.0, 0.5).unwrap();
            let fx = sys.evolve(t, &p.view(), &[x]).unwrap()[0];
            let fy = sys.evolve(t, &p.view(), &[x + dy]).unwrap()[0];
            prop_assert!(fx <= fy);
            prop_assert!(fx * x >= 0.0);
        }
    }
}
