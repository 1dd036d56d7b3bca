//! Smooth ground-truth moisture: a base level plus Gaussian bumps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub cx: f64,
    pub cy: f64,
    /// Peak change in percentage points; negative bumps dry the soil.
    pub amplitude: f64,
    pub radius: f64,
}

impl Bump {
    pub fn new(cx: f64, cy: f64, amplitude: f64, radius: f64) -> Self {
        Self { cx, cy, amplitude, radius }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let d2 = (x - self.cx).powi(2) + (y - self.cy).powi(2);
        self.amplitude * (-d2 / (2.0 * self.radius * self.radius)).exp()
    }

    /// Largest slope of a Gaussian bump, reached at distance `radius`.
    pub fn max_slope(&self) -> f64 {
        self.amplitude.abs() / (self.radius * std::f64::consts::E.sqrt())
    }
}

/// `f(x, y) = clamp(base + sum of bumps, 0, 100)` over a `width x height` cm field.
#[derive(Debug, Clone, PartialEq)]
pub struct MoistureField {
    pub width: f64,
    pub height: f64,
    pub base: f64,
    pub bumps: Vec<Bump>,
}

impl MoistureField {
    pub fn constant(width: f64, height: f64, base: f64) -> Self {
        Self { width, height, base, bumps: Vec::new() }
    }

    pub fn with_bump(mut self, bump: Bump) -> Self {
        self.bumps.push(bump);
        self
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let raw = self.base + self.bumps.iter().map(|b| b.eval(x, y)).sum::<f64>();
        raw.clamp(0.0, 100.0)
    }

    /// Lipschitz constant of the unclamped sum (clamping can only lower it).
    pub fn lipschitz_bound(&self) -> f64 {
        self.bumps.iter().map(Bump::max_slope).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldParams {
    pub width: f64,
    pub height: f64,
    pub base: f64,
    pub bumps: Vec<Bump>,
    /// Extra bumps drawn from `seed`.
    pub random_bumps: usize,
    pub seed: u64,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self { width: 200.0, height: 160.0, base: 40.0, bumps: Vec::new(), random_bumps: 0, seed: 0 }
    }
}

/// Random bumps: centers anywhere in the field, amplitude in [-15, 15],
/// radius in [20, 60] cm.
pub fn synth_field(params: &FieldParams) -> MoistureField {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut bumps = params.bumps.clone();
    for _ in 0..params.random_bumps {
        bumps.push(Bump {
            cx: rng.random_range(0.0..=params.width),
            cy: rng.random_range(0.0..=params.height),
            amplitude: rng.random_range(-15.0..=15.0),
            radius: rng.random_range(20.0..=60.0),
        });
    }
    MoistureField { width: params.width, height: params.height, base: params.base, bumps }
}
