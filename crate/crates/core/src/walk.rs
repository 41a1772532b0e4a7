//! Continuous-time random walks on the integer plane and on the torus.
//!
//! One engine covers the plain displacement walk (kernel `q`, any jump rate)
//! and the lazy colony walk (kernel `p`, stay-put mass `1 - ν`). Jumps are
//! generated from the embedded jump chain: endpoint queries draw a Poisson
//! jump count, hitting-time queries accumulate exponential holding times.

use crate::lattice::{DisplacementKernel, FullKernel, TorusPoint};
use crate::seeds;
use crate::stats::Estimate;
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Plane,
    Torus { l: i64 },
}

/// Which jump law drives the walk.
#[derive(Debug, Clone)]
pub enum WalkKernel {
    Displacement(DisplacementKernel),
    Full(FullKernel),
}

impl WalkKernel {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (i64, i64) {
        match self {
            WalkKernel::Displacement(k) => k.sample(rng),
            WalkKernel::Full(k) => k.sample(rng),
        }
    }

    /// The displacement part (`q`), used as the start law for hitting tails.
    pub fn displacement(&self) -> &DisplacementKernel {
        match self {
            WalkKernel::Displacement(k) => k,
            WalkKernel::Full(k) => k.base(),
        }
    }
}

impl From<DisplacementKernel> for WalkKernel {
    fn from(k: DisplacementKernel) -> Self {
        WalkKernel::Displacement(k)
    }
}

impl From<FullKernel> for WalkKernel {
    fn from(k: FullKernel) -> Self {
        WalkKernel::Full(k)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WalkError {
    #[error("jump rate must be positive, got {0}")]
    BadRate(f64),
    #[error("torus side {l} is smaller than twice the kernel range {range}")]
    TorusTooSmall { l: i64, range: i64 },
    #[error("duration must be non-negative, got {0}")]
    NegativeDuration(f64),
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error("hitting-tail estimation needs at least 100 replicates, got {0}")]
    TooFewReplicates(u64),
}

#[derive(Debug, Clone)]
pub struct WalkConfig {
    kernel: WalkKernel,
    jump_rate: f64,
    geometry: Geometry,
}

impl WalkConfig {
    pub fn new(
        kernel: impl Into<WalkKernel>,
        jump_rate: f64,
        geometry: Geometry,
    ) -> Result<Self, WalkError> {
        let kernel = kernel.into();
        if !jump_rate.is_finite() || jump_rate <= 0.0 {
            return Err(WalkError::BadRate(jump_rate));
        }
        if let Geometry::Torus { l } = geometry {
            let range = kernel.displacement().range();
            if l < 2 * range || l < 2 {
                return Err(WalkError::TorusTooSmall { l, range });
            }
        }
        Ok(WalkConfig {
            kernel,
            jump_rate,
            geometry,
        })
    }

    pub fn kernel(&self) -> &WalkKernel {
        &self.kernel
    }

    pub fn jump_rate(&self) -> f64 {
        self.jump_rate
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn reduce(&self, p: (i64, i64)) -> (i64, i64) {
        match self.geometry {
            Geometry::Plane => p,
            Geometry::Torus { l } => {
                let w = TorusPoint::wrap(p, l);
                (w.x, w.y)
            }
        }
    }
}

/// Outcome of a first-visit query against a time horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingRecord {
    pub hit: bool,
    /// Raw time of the first visit; present iff `hit`.
    pub time: Option<f64>,
    /// Jumps taken up to the hit, or up to the horizon if censored.
    pub jumps: u64,
}

/// Walk endpoint after `duration` time units.
///
/// The jump count is Poisson(rate x duration); displacements are summed and
/// reduced once at the end (wrapping commutes with addition).
pub fn simulate_walk<R: Rng + ?Sized>(
    config: &WalkConfig,
    start: (i64, i64),
    duration: f64,
    rng: &mut R,
) -> Result<(i64, i64), WalkError> {
    if duration < 0.0 || !duration.is_finite() {
        return Err(WalkError::NegativeDuration(duration));
    }
    let start = config.reduce(start);
    if duration == 0.0 {
        return Ok(start);
    }
    let mean = config.jump_rate * duration;
    let jumps = Poisson::new(mean).expect("positive mean").sample(rng) as u64;
    let (mut x, mut y) = start;
    for _ in 0..jumps {
        let (dx, dy) = config.kernel.sample(rng);
        x += dx;
        y += dy;
    }
    Ok(config.reduce((x, y)))
}

/// First visit to the origin before `horizon`.
///
/// The walk is piecewise constant, so visits can only occur at jump arrival
/// instants; starting at the origin counts as a hit at time zero.
pub fn hit_origin<R: Rng + ?Sized>(
    config: &WalkConfig,
    start: (i64, i64),
    horizon: f64,
    rng: &mut R,
) -> Result<HittingRecord, WalkError> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(WalkError::BadHorizon(horizon));
    }
    let (mut x, mut y) = config.reduce(start);
    if (x, y) == (0, 0) {
        return Ok(HittingRecord {
            hit: true,
            time: Some(0.0),
            jumps: 0,
        });
    }
    let hold = Exp::new(config.jump_rate).expect("positive rate");
    let mut t = 0.0;
    let mut jumps = 0u64;
    loop {
        t += hold.sample(rng);
        if t > horizon {
            return Ok(HittingRecord {
                hit: false,
                time: None,
                jumps,
            });
        }
        let (dx, dy) = config.kernel.sample(rng);
        (x, y) = config.reduce((x + dx, y + dy));
        jumps += 1;
        if (x, y) == (0, 0) {
            return Ok(HittingRecord {
                hit: true,
                time: Some(t),
                jumps,
            });
        }
    }
}

/// Monte Carlo estimate of the no-visit probability `P(T > t)` for a walk
/// started from a fresh kernel draw (never the origin, since q has no mass
/// there).
///
/// Only the indicator is needed, so each replicate draws its jump count in
/// `[0, t]` up front and runs the embedded chain with early exit.
pub fn hit_tail_estimate(
    config: &WalkConfig,
    t: f64,
    replicates: u64,
    seed: u64,
) -> Result<Estimate, WalkError> {
    if t < 0.0 || !t.is_finite() {
        return Err(WalkError::NegativeDuration(t));
    }
    if replicates < 100 {
        return Err(WalkError::TooFewReplicates(replicates));
    }
    let survived: u64 = seeds::map_replicates(seed, replicates, |_, rng| {
        let (mut x, mut y) = config.reduce(config.kernel.displacement().sample(rng));
        if (x, y) == (0, 0) {
            return 0u64; // only possible on tiny tori
        }
        if t == 0.0 {
            return 1;
        }
        let jumps = Poisson::new(config.jump_rate * t)
            .expect("positive mean")
            .sample(rng) as u64;
        for _ in 0..jumps {
            let (dx, dy) = config.kernel.sample(rng);
            (x, y) = config.reduce((x + dx, y + dy));
            if (x, y) == (0, 0) {
                return 0;
            }
        }
        1
    })
    .into_iter()
    .sum();
    Ok(Estimate::binomial(survived, replicates))
}
