//! Tiny forward-in-time Moran simulator, used as a duality oracle for the
//! backward engine: the probability that two sampled slots carry the same
//! label after running forward for time `t` equals the backward probability
//! that their lineages coalesce within `t`.
//!
//! Deliberately capped at small scale; it validates, it does not experiment.

use crate::coalescent::ModelParams;
use crate::lattice::TorusPoint;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

/// Largest total number of haploid slots the oracle will simulate.
pub const FORWARD_SCALE_CAP: u64 = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum ForwardError {
    #[error("forward oracle is capped at {FORWARD_SCALE_CAP} slots, model has {0}")]
    TooLarge(u64),
    #[error("duration must be non-negative and finite, got {0}")]
    BadDuration(f64),
    #[error("colony coordinates are outside the torus")]
    BadColony,
}

/// The full lattice of haploid slots with their ancestral labels.
///
/// Initially all `2N·L²` labels are distinct; replacement copies the donor's
/// label, so two slots share a label exactly when they have a common ancestor
/// within the elapsed time.
#[derive(Debug, Clone)]
pub struct ColonyLattice {
    l: i64,
    haploids: u32,
    labels: Vec<u32>,
}

impl ColonyLattice {
    fn slot_count(&self) -> usize {
        (self.l * self.l) as usize * self.haploids as usize
    }

    fn colony_base(&self, colony: &TorusPoint) -> usize {
        // canonical index: coordinates shifted from (-L/2, L/2] into [0, L)
        let cx = colony.x.rem_euclid(self.l) as usize;
        let cy = colony.y.rem_euclid(self.l) as usize;
        (cx * self.l as usize + cy) * self.haploids as usize
    }

    pub fn l(&self) -> i64 {
        self.l
    }

    pub fn haploids(&self) -> u32 {
        self.haploids
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn distinct_labels(&self) -> usize {
        let mut seen = vec![false; self.slot_count()];
        let mut count = 0;
        for &label in &self.labels {
            if !seen[label as usize] {
                seen[label as usize] = true;
                count += 1;
            }
        }
        count
    }

    /// Label of one uniformly drawn slot of `colony`.
    pub fn sample_label<R: Rng + ?Sized>(&self, colony: &TorusPoint, rng: &mut R) -> u32 {
        let base = self.colony_base(colony);
        self.labels[base + rng.random_range(0..self.haploids) as usize]
    }
}

/// Run the forward Moran dynamics for `duration` raw time units.
///
/// Every slot is replaced at rate 1: a global Poisson(`2NL²·duration`) event
/// count, each event picking a uniform dying slot, a donor colony by the
/// migration rule, and a uniform donor slot (self allowed).
pub fn run_forward<R: Rng + ?Sized>(
    params: &ModelParams,
    duration: f64,
    rng: &mut R,
) -> Result<ColonyLattice, ForwardError> {
    let slots = (params.l() * params.l()) as u64 * params.haploids() as u64;
    if slots > FORWARD_SCALE_CAP {
        return Err(ForwardError::TooLarge(slots));
    }
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(ForwardError::BadDuration(duration));
    }
    let l = params.l();
    let haploids = params.haploids();
    let mut lattice = ColonyLattice {
        l,
        haploids,
        labels: (0..slots as u32).collect(),
    };
    if duration == 0.0 {
        return Ok(lattice);
    }
    let events = Poisson::new(slots as f64 * duration)
        .expect("positive mean")
        .sample(rng) as u64;
    let colonies = (l * l) as usize;
    for _ in 0..events {
        let dead = rng.random_range(0..lattice.labels.len());
        let dead_colony = dead / haploids as usize;
        let donor_colony = if params.nu() < 1.0 && rng.random::<f64>() >= params.nu() {
            dead_colony
        } else {
            let (dx, dy) = params.kernel().sample(rng);
            let cx = (dead_colony / l as usize) as i64;
            let cy = (dead_colony % l as usize) as i64;
            let nx = (cx + dx).rem_euclid(l) as usize;
            let ny = (cy + dy).rem_euclid(l) as usize;
            nx * l as usize + ny
        };
        debug_assert!(donor_colony < colonies);
        let donor = donor_colony * haploids as usize + rng.random_range(0..haploids) as usize;
        lattice.labels[dead] = lattice.labels[donor];
    }
    Ok(lattice)
}

/// Sample one slot from each colony (independently; the same slot can be
/// drawn twice when the colonies coincide) and report label equality.
pub fn identity_probability<R: Rng + ?Sized>(
    lattice: &ColonyLattice,
    colony_a: &TorusPoint,
    colony_b: &TorusPoint,
    rng: &mut R,
) -> bool {
    lattice.sample_label(colony_a, rng) == lattice.sample_label(colony_b, rng)
}
