//! Simulation and analytics for the stepping stone model on a two-dimensional
//! torus of colonies.
//!
//! The library has two halves that check each other:
//!
//! * exact backward-in-time simulation of coalescing lineages under Moran
//!   dynamics ([`coalescent`], [`two_locus`], with a tiny forward-in-time
//!   duality oracle in [`forward`]), and
//! * closed-form limit predictions (time-changed Kingman coalescent,
//!   coalescence-time tails, no-recombination-before-coalescence, pairwise
//!   differences) in [`theory`] and [`mutation`].
//!
//! Geometry and migration kernels live in [`lattice`]; plain random walks
//! (used both as a building block and as a model diagnostic) in [`walk`].
//! Everything is deterministic given a master seed; see [`seeds`].

pub mod coalescent;
pub mod forward;
pub mod lattice;
pub mod mutation;
pub mod seeds;
pub mod stats;
pub mod theory;
pub mod two_locus;
pub mod walk;

pub use coalescent::{GenealogyTree, LineageState, ModelParams, SampleGeometry};
pub use lattice::{DisplacementKernel, FullKernel, KernelSpec, TorusPoint};
pub use stats::Estimate;
pub use theory::LimitParams;
