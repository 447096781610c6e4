//! Black-box simulator interface and the bundled reference simulators.

use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::qmc::BoundsSpec;

/// An expensive deterministic function `y = f(x)` with box-bounded inputs.
///
/// `evaluate` must be free of side effects apart from bumping the query
/// counter by exactly one per call (successful or not).
pub trait Simulator: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn bounds(&self) -> &BoundsSpec;
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn query_count(&self) -> usize;
    fn output_names(&self) -> Vec<&str> {
        Vec::new()
    }
    fn input_names(&self) -> Vec<&str> {
        Vec::new()
    }
}

/// Monotone, thread-safe query counter for simulator implementations.
#[derive(Debug, Default)]
pub struct QueryCounter(AtomicUsize);

impl QueryCounter {
    pub fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> usize {
        self.0.load(Ordering::Relaxed)
    }
}

impl Clone for QueryCounter {
    /// Clones start counting from zero.
    fn clone(&self) -> Self {
        QueryCounter::default()
    }
}

/// Aerodynamic scale factors applied to the flare simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Perturbation {
    pub drag_scale: f64,
    pub lift_scale: f64,
    pub pitch_scale: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation {
            drag_scale: 1.0,
            lift_scale: 1.0,
            pitch_scale: 1.0,
        }
    }
}

pub const FLARE_INPUTS: usize = 13;
pub const FLARE_OUTPUTS: usize = 3;

pub const FLARE_INPUT_NAMES: [&str; FLARE_INPUTS] = [
    "landing_velocity",
    "glide_angle_steep",
    "flare_radius",
    "glide_angle_shallow",
    "flare_height",
    "decel_coefficient",
    "ripple_7",
    "ripple_8",
    "ripple_9",
    "ripple_10",
    "ripple_11",
    "ripple_12",
    "ripple_13",
];

pub const FLARE_OUTPUT_NAMES: [&str; FLARE_OUTPUTS] = ["sink_rate", "horizontal_velocity", "downrange"];

/// Fixed-formula stand-in for an approach-and-landing trajectory simulator.
///
/// 13 inputs in the unit cube; outputs are touchdown sink rate (ft/s),
/// horizontal velocity (knots) and downrange position (ft). Inputs 7–13
/// only enter through 2%/1% ripple terms, so they matter far less than
/// inputs 1–6.
#[derive(Debug, Clone)]
pub struct ToyFlareSim {
    perturbation: Perturbation,
    bounds: BoundsSpec,
    counter: QueryCounter,
}

impl Default for ToyFlareSim {
    fn default() -> Self {
        Self::new()
    }
}

/// The flare formulas without bounds checking or counting.
pub fn flare_outputs(u: &[f64], p: &Perturbation) -> [f64; 3] {
    let deg = PI / 180.0;
    let v0 = 150.0 + 100.0 * u[0];
    let g1 = (10.0 + 10.0 * u[1]) * deg;
    let rf = 1000.0 + 4000.0 * u[2];
    let g2 = (0.5 + 2.5 * u[3]) * deg;
    let hf = 50.0 + 150.0 * u[4];
    let b = (0.1 + 0.8 * u[5]) / p.drag_scale;

    let mut ripple_sum = 0.0;
    let mut plain_sum = 0.0;
    for (offset, &uj) in u[6..13].iter().enumerate() {
        let j = (offset + 7) as f64;
        ripple_sum += libm::sin(2.0 * PI * uj + j);
        plain_sum += libm::sin(2.0 * PI * uj);
    }
    let ripple = 1.0 + 0.02 * ripple_sum;

    let decel = libm::exp(-b * (hf / 100.0 + rf / 2000.0) / 3.0);
    let v_td = v0 * decel * ripple;
    let geff = (g2 + (g1 - g2) * libm::exp(-rf / 1500.0)) / p.lift_scale;

    let sink_rate = v_td * libm::sin(geff);
    let horizontal_velocity = 0.592484 * v_td * libm::cos(geff);
    let downrange = p.pitch_scale * (0.03 * hf / libm::tan(g2) + 0.02 * rf * (1.0 + 0.01 * plain_sum));
    [sink_rate, horizontal_velocity, downrange]
}

impl ToyFlareSim {
    pub fn new() -> Self {
        Self::with_perturbation(Perturbation::default())
    }

    pub fn with_perturbation(perturbation: Perturbation) -> Self {
        ToyFlareSim {
            perturbation,
            bounds: BoundsSpec::unit(FLARE_INPUTS),
            counter: QueryCounter::default(),
        }
    }

    pub fn perturbation(&self) -> Perturbation {
        self.perturbation
    }

    /// New simulator with the scale factors multiplied in; `self` is untouched.
    pub fn perturb_vehicle(&self, drag: f64, lift: f64, pitch: f64) -> Result<ToyFlareSim> {
        for (name, v) in [("drag", drag), ("lift", lift), ("pitch", pitch)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "{name} factor must be positive, got {v}"
                )));
            }
        }
        let p = self.perturbation;
        Ok(ToyFlareSim::with_perturbation(Perturbation {
            drag_scale: p.drag_scale * drag,
            lift_scale: p.lift_scale * lift,
            pitch_scale: p.pitch_scale * pitch,
        }))
    }
}

impl Simulator for ToyFlareSim {
    fn input_dim(&self) -> usize {
        FLARE_INPUTS
    }

    fn output_dim(&self) -> usize {
        FLARE_OUTPUTS
    }

    fn bounds(&self) -> &BoundsSpec {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.counter.bump();
        self.bounds.check(x)?;
        Ok(flare_outputs(x, &self.perturbation).to_vec())
    }

    fn query_count(&self) -> usize {
        self.counter.get()
    }

    fn output_names(&self) -> Vec<&str> {
        FLARE_OUTPUT_NAMES.to_vec()
    }

    fn input_names(&self) -> Vec<&str> {
        FLARE_INPUT_NAMES.to_vec()
    }
}

/// Cheap analytic simulators for exercising the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    /// `y_k = Σ_i (x_i − c_{k,i})²` for three distinct centers.
    Sphere,
    /// Rosenbrock value, its curvature-term sum, and its `(1 − x_i)²` sum.
    Rosenbrock3,
}

impl FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(BenchmarkKind::Sphere),
            "rosenbrock-3out" => Ok(BenchmarkKind::Rosenbrock3),
            other => Err(Error::UnknownBenchmark(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    kind: BenchmarkKind,
    bounds: BoundsSpec,
    counter: QueryCounter,
}

/// Sphere centers: every coordinate of center `k` equals `SPHERE_CENTERS[k]`.
pub const SPHERE_CENTERS: [f64; 3] = [0.5, -0.5, 1.0];

impl Benchmark {
    pub fn new(kind: BenchmarkKind, dim: usize) -> Result<Self> {
        let min_dim = match kind {
            BenchmarkKind::Sphere => 1,
            BenchmarkKind::Rosenbrock3 => 2,
        };
        if dim < min_dim {
            return Err(Error::InvalidConfig(alloc::format!(
                "{kind:?} needs at least {min_dim} inputs"
            )));
        }
        Ok(Benchmark {
            kind,
            bounds: BoundsSpec::uniform(dim, -2.0, 2.0)?,
            counter: QueryCounter::default(),
        })
    }

    pub fn kind(&self) -> BenchmarkKind {
        self.kind
    }

    pub fn center(k: usize, dim: usize) -> Vec<f64> {
        vec![SPHERE_CENTERS[k]; dim]
    }
}

impl Simulator for Benchmark {
    fn input_dim(&self) -> usize {
        self.bounds.dim()
    }

    fn output_dim(&self) -> usize {
        3
    }

    fn bounds(&self) -> &BoundsSpec {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.counter.bump();
        self.bounds.check(x)?;
        Ok(match self.kind {
            BenchmarkKind::Sphere => SPHERE_CENTERS
                .iter()
                .map(|c| x.iter().map(|v| (v - c) * (v - c)).sum())
                .collect(),
            BenchmarkKind::Rosenbrock3 => {
                let (mut curvature, mut valley) = (0.0, 0.0);
                for w in x.windows(2) {
                    let a = w[1] - w[0] * w[0];
                    curvature += 100.0 * a * a;
                    valley += (1.0 - w[0]) * (1.0 - w[0]);
                }
                vec![curvature + valley, curvature, valley]
            }
        })
    }

    fn query_count(&self) -> usize {
        self.counter.get()
    }
}

/// Builds a named benchmark simulator (`sphere` or `rosenbrock-3out`).
pub fn benchmark_sim(name: &str, dim: usize) -> Result<Box<dyn Simulator>> {
    let kind = name.parse::<BenchmarkKind>()?;
    Ok(Box::new(Benchmark::new(kind, dim)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Golden output at the cube centre, frozen from the first evaluation of
    // the closed-form expressions (cross-checked against an independent
    // NumPy transcription to 1e-12).
    const MID_GOLDEN: [f64; 3] = [7.753582484, 74.19127137, 182.7384889];

    #[test]
    fn midpoint_golden_value() {
        let y = ToyFlareSim::new().evaluate(&[0.5; 13]).unwrap();
        for (a, b) in y.iter().zip(MID_GOLDEN) {
            assert!((a - b).abs() < 1e-6 * b.abs(), "{y:?}");
        }
    }

    #[test]
    fn lift_to_infinity_flattens_glide() {
        let p = Perturbation {
            lift_scale: 1e12,
            ..Default::default()
        };
        let u = [0.3; 13];
        let y = flare_outputs(&u, &p);
        assert!(y[0].abs() < 1e-9);
        // horizontal velocity tends to 0.592484 * v_td with v_td = y_h / (0.592484 cos geff)
        let base = flare_outputs(&u, &Perturbation::default());
        let geff = (base[0] / base[1] * 0.592484).atan();
        let v_td = base[1] / (0.592484 * geff.cos());
        assert!((y[1] - 0.592484 * v_td).abs() < 1e-9 * v_td);
    }

    #[test]
    fn ripple_inputs_are_periodic() {
        let mut u = [0.0; 13];
        for (i, v) in u.iter_mut().enumerate() {
            *v = (i as f64 * 0.37).fract();
        }
        let mut shifted = u;
        for v in &mut shifted[6..] {
            *v += 1.0;
        }
        let (a, b) = (
            flare_outputs(&u, &Perturbation::default()),
            flare_outputs(&shifted, &Perturbation::default()),
        );
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn out_of_bounds_rejected_and_counted() {
        let sim = ToyFlareSim::new();
        assert!(sim.evaluate(&[1.01; 13]).is_err());
        assert!(sim.evaluate(&[0.5; 12]).is_err());
        sim.evaluate(&[0.5; 13]).unwrap();
        assert_eq!(sim.query_count(), 3);
    }

    #[test]
    fn perturbation_identity_and_validation() {
        let sim = ToyFlareSim::new();
        let same = sim.perturb_vehicle(1.0, 1.0, 1.0).unwrap();
        let u = [0.42; 13];
        assert_eq!(sim.evaluate(&u).unwrap(), same.evaluate(&u).unwrap());
        assert!(sim.perturb_vehicle(0.0, 1.0, 1.0).is_err());
        assert!(sim.perturb_vehicle(1.0, -1.0, 1.0).is_err());
        let scenario = sim.perturb_vehicle(1.11, 0.99, 1.13).unwrap();
        assert_eq!(
            scenario.perturbation(),
            Perturbation {
                drag_scale: 1.11,
                lift_scale: 0.99,
                pitch_scale: 1.13
            }
        );
        assert_eq!(sim.perturbation(), Perturbation::default());
    }

    // b is divided by drag_scale, so a larger factor weakens the
    // exponential decay and raises touchdown speed.
    #[test]
    fn drag_scale_moves_touchdown_speed_monotonically() {
        let sim = ToyFlareSim::new();
        let draggy = sim.perturb_vehicle(2.0, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let u: Vec<f64> = (0..13).map(|_| rng.random::<f64>()).collect();
            let a = sim.evaluate(&u).unwrap();
            let b = draggy.evaluate(&u).unwrap();
            assert!(b[0] > a[0] && b[1] > a[1], "{u:?}");
            assert_eq!(b[2], a[2]);
        }
    }

    #[test]
    fn finite_difference_jacobian_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = Perturbation::default();
        let h = 1e-6;
        for _ in 0..1000 {
            let u: Vec<f64> = (0..13).map(|_| rng.random_range(0.01..0.99)).collect();
            for i in 0..13 {
                let (mut up, mut dn) = (u.clone(), u.clone());
                up[i] += h;
                dn[i] -= h;
                let (a, b) = (flare_outputs(&up, &p), flare_outputs(&dn, &p));
                for k in 0..3 {
                    let d = (a[k] - b[k]) / (2.0 * h);
                    assert!(d.is_finite() && d.abs() < 1e5, "{d}");
                }
            }
        }
    }

    #[test]
    fn sphere_properties() {
        let sim = benchmark_sim("sphere", 4).unwrap();
        let c = Benchmark::center(0, 4);
        assert_eq!(sim.evaluate(&c).unwrap()[0], 0.0);
        let delta = [0.1, -0.3, 0.25, 0.05];
        let plus: Vec<f64> = c.iter().zip(&delta).map(|(c, d)| c + d).collect();
        let minus: Vec<f64> = c.iter().zip(&delta).map(|(c, d)| c - d).collect();
        let (a, b) = (sim.evaluate(&plus).unwrap(), sim.evaluate(&minus).unwrap());
        assert!((a[0] - b[0]).abs() < 1e-15);
        assert_eq!(sim.query_count(), 3);
    }

    #[test]
    fn rosenbrock_minimum() {
        let sim = benchmark_sim("rosenbrock-3out", 5).unwrap();
        assert_eq!(sim.evaluate(&[1.0; 5]).unwrap(), vec![0.0, 0.0, 0.0]);
        let y = sim.evaluate(&[0.0, 0.5, -1.0, 1.5, 0.2]).unwrap();
        assert!((y[0] - (y[1] + y[2])).abs() < 1e-12);
    }

    #[test]
    fn unknown_benchmark() {
        assert!(matches!(benchmark_sim("ackley", 2), Err(Error::UnknownBenchmark(_))));
        assert!(benchmark_sim("rosenbrock-3out", 1).is_err());
    }
}
