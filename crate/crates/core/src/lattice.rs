//! Torus geometry and migration displacement kernels.
//!
//! Colonies sit on the torus `Λ(L)`: integer points with both coordinates in
//! `(-L/2, L/2]`. Differences are taken componentwise modulo `L`. A
//! [`DisplacementKernel`] is the migration law `q` on the integer plane; a
//! [`FullKernel`] mixes it with the stay-put probability `1 - ν`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for a custom table's probability sum.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A colony coordinate on the torus, both components in `(-L/2, L/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: i64,
    pub y: i64,
}

impl TorusPoint {
    /// Wrap an arbitrary integer pair onto the torus of side `l`.
    pub fn wrap(p: (i64, i64), l: i64) -> Self {
        assert!(l >= 2, "torus side must be at least 2");
        TorusPoint {
            x: wrap_coord(p.0, l),
            y: wrap_coord(p.1, l),
        }
    }

    pub fn origin() -> Self {
        TorusPoint { x: 0, y: 0 }
    }

    /// Componentwise difference `self - other`, reduced modulo `l`.
    pub fn sub(&self, other: &TorusPoint, l: i64) -> TorusPoint {
        TorusPoint::wrap((self.x - other.x, self.y - other.y), l)
    }

    /// Translate by a displacement and wrap.
    pub fn offset(&self, d: (i64, i64), l: i64) -> TorusPoint {
        TorusPoint::wrap((self.x + d.0, self.y + d.1), l)
    }

    /// Euclidean distance between two colonies through the torus metric.
    pub fn distance(&self, other: &TorusPoint, l: i64) -> f64 {
        let d = self.sub(other, l);
        ((d.x * d.x + d.y * d.y) as f64).sqrt()
    }
}

/// Reduce one coordinate into `(-L/2, L/2]`.
fn wrap_coord(v: i64, l: i64) -> i64 {
    let r = v.rem_euclid(l);
    if 2 * r > l {
        r - l
    } else {
        r
    }
}

/// Wrap an integer pair onto the torus of side `l`. Idempotent.
pub fn wrap(p: (i64, i64), l: i64) -> TorusPoint {
    TorusPoint::wrap(p, l)
}

/// Kernel constructors, as they appear in experiment configs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// Probability 1/4 on each of the four nearest neighbors.
    Nearest4,
    /// Probability 1/8 on each of the eight surrounding sites.
    Kings8,
    /// Uniform on `{-k..k}² \ {0}`.
    UniformBox { k: u32 },
    /// Explicit table of `(dx, dy, probability)` rows.
    Custom { table: Vec<(i64, i64, f64)> },
}

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("kernel table is empty")]
    EmptyTable,
    #[error("kernel assigns probability {0} to the origin; q((0,0)) must be 0")]
    MassAtOrigin(f64),
    #[error("probability for displacement ({0}, {1}) is not a finite non-negative number")]
    BadProbability(i64, i64),
    #[error("duplicate table entry for displacement ({0}, {1})")]
    DuplicateEntry(i64, i64),
    #[error("kernel violates negation symmetry at ({0}, {1})")]
    NegationAsymmetry(i64, i64),
    #[error("kernel violates swap symmetry at ({0}, {1})")]
    SwapAsymmetry(i64, i64),
    #[error("kernel probabilities sum to {0}, not 1 within {SUM_TOLERANCE}")]
    SumNotOne(f64),
    #[error("kernel support does not generate the full integer plane")]
    Reducible,
    #[error("uniform_box requires k >= 1")]
    EmptyBox,
}

/// The displacement law `q` on the integer plane: symmetric, finite range,
/// no mass at the origin, support generating all of `Z²`.
#[derive(Debug, Clone)]
pub struct DisplacementKernel {
    support: Vec<(i64, i64)>,
    weights: Weights,
    range: i64,
    sigma2: f64,
}

#[derive(Debug, Clone)]
enum Weights {
    /// Equal mass on every support point (probabilities exact rationals 1/m).
    Uniform,
    /// Arbitrary table; `cdf[i]` is the cumulative mass through entry `i`.
    Table { probs: Vec<f64>, cdf: Vec<f64> },
}

impl DisplacementKernel {
    pub fn build(spec: &KernelSpec) -> Result<Self, KernelError> {
        match spec {
            KernelSpec::Nearest4 => {
                Self::uniform_support(vec![(1, 0), (-1, 0), (0, 1), (0, -1)])
            }
            KernelSpec::Kings8 => Self::uniform_support(vec![
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
            ]),
            KernelSpec::UniformBox { k } => {
                if *k == 0 {
                    return Err(KernelError::EmptyBox);
                }
                let k = *k as i64;
                let mut support = Vec::new();
                for x in -k..=k {
                    for y in -k..=k {
                        if (x, y) != (0, 0) {
                            support.push((x, y));
                        }
                    }
                }
                Self::uniform_support(support)
            }
            KernelSpec::Custom { table } => Self::from_table(table),
        }
    }

    fn uniform_support(mut support: Vec<(i64, i64)>) -> Result<Self, KernelError> {
        support.sort_unstable();
        let m = support.len() as i64;
        // integer moment sums keep sigma2 exact for the rational families
        let s1: i64 = support.iter().map(|&(x, _)| x * x).sum();
        let s2: i64 = support.iter().map(|&(_, y)| y * y).sum();
        debug_assert_eq!(s1, s2);
        let kernel = DisplacementKernel {
            range: support
                .iter()
                .map(|&(x, y)| x.abs().max(y.abs()))
                .max()
                .unwrap_or(0),
            sigma2: s1 as f64 / m as f64,
            support,
            weights: Weights::Uniform,
        };
        kernel.validate()?;
        Ok(kernel)
    }

    fn from_table(table: &[(i64, i64, f64)]) -> Result<Self, KernelError> {
        if table.is_empty() {
            return Err(KernelError::EmptyTable);
        }
        let mut entries: Vec<((i64, i64), f64)> = Vec::with_capacity(table.len());
        for &(x, y, p) in table {
            if !p.is_finite() || p < 0.0 {
                return Err(KernelError::BadProbability(x, y));
            }
            if (x, y) == (0, 0) && p > 0.0 {
                return Err(KernelError::MassAtOrigin(p));
            }
            if p > 0.0 {
                entries.push(((x, y), p));
            }
        }
        if entries.is_empty() {
            return Err(KernelError::EmptyTable);
        }
        entries.sort_unstable_by_key(|&(z, _)| z);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(KernelError::DuplicateEntry(w[0].0 .0, w[0].0 .1));
            }
        }

        let lookup = |z: (i64, i64)| -> Option<f64> {
            entries
                .binary_search_by_key(&z, |&(k, _)| k)
                .ok()
                .map(|i| entries[i].1)
        };
        for &((x, y), p) in &entries {
            if lookup((-x, -y)) != Some(p) {
                return Err(KernelError::NegationAsymmetry(x, y));
            }
            if lookup((y, x)) != Some(p) {
                return Err(KernelError::SwapAsymmetry(x, y));
            }
        }

        let sum: f64 = entries.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(KernelError::SumNotOne(sum));
        }

        // Both second moments summed in mirrored orders: swap symmetry makes
        // the two term sequences identical, so the results are bit-equal.
        let sigma2: f64 = entries.iter().map(|&((x, _), p)| (x * x) as f64 * p).sum();
        let mut by_swapped = entries.clone();
        by_swapped.sort_unstable_by_key(|&((x, y), _)| (y, x));
        let sigma2_other: f64 = by_swapped
            .iter()
            .map(|&((_, y), p)| (y * y) as f64 * p)
            .sum();
        debug_assert_eq!(sigma2.to_bits(), sigma2_other.to_bits());

        let support: Vec<(i64, i64)> = entries.iter().map(|&(z, _)| z).collect();
        let probs: Vec<f64> = entries.iter().map(|&(_, p)| p).collect();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cdf.push(acc);
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        let kernel = DisplacementKernel {
            range: support
                .iter()
                .map(|&(x, y)| x.abs().max(y.abs()))
                .max()
                .unwrap(),
            sigma2,
            support,
            weights: Weights::Table { probs, cdf },
        };
        kernel.validate()?;
        Ok(kernel)
    }

    fn validate(&self) -> Result<(), KernelError> {
        if self.support.is_empty() {
            return Err(KernelError::EmptyTable);
        }
        if self.support.contains(&(0, 0)) {
            return Err(KernelError::MassAtOrigin(self.prob((0, 0))));
        }
        for &(x, y) in &self.support {
            if self.prob((-x, -y)) != self.prob((x, y)) {
                return Err(KernelError::NegationAsymmetry(x, y));
            }
            if self.prob((y, x)) != self.prob((x, y)) {
                return Err(KernelError::SwapAsymmetry(x, y));
            }
        }
        if !self.generates_plane() {
            return Err(KernelError::Reducible);
        }
        Ok(())
    }

    /// The support generates `Z²` iff the gcd of all 2x2 minors of support
    /// vectors is 1 (Smith normal form: d1*d2 = gcd of the 2x2 minors).
    fn generates_plane(&self) -> bool {
        let mut g: i64 = 0;
        for (i, &(ax, ay)) in self.support.iter().enumerate() {
            for &(bx, by) in &self.support[i + 1..] {
                g = gcd(g, (ax * by - ay * bx).abs());
                if g == 1 {
                    return true;
                }
            }
        }
        false
    }

    /// Probability of displacement `z`.
    pub fn prob(&self, z: (i64, i64)) -> f64 {
        match self.support.binary_search(&z) {
            Err(_) => 0.0,
            Ok(i) => match &self.weights {
                Weights::Uniform => 1.0 / self.support.len() as f64,
                Weights::Table { probs, .. } => probs[i],
            },
        }
    }

    /// Maximum coordinate magnitude with positive mass.
    pub fn range(&self) -> i64 {
        self.range
    }

    /// Single-coordinate variance `σ² = Σ z_1² q(z)`.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn support(&self) -> &[(i64, i64)] {
        &self.support
    }

    /// Draw one displacement with the kernel's exact probabilities.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (i64, i64) {
        match &self.weights {
            Weights::Uniform => self.support[rng.random_range(0..self.support.len())],
            Weights::Table { cdf, .. } => {
                let u: f64 = rng.random();
                let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                self.support[i]
            }
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FullKernelError {
    #[error("migration probability must lie in [0, 1], got {0}")]
    BadNu(f64),
}

/// The per-replacement colony law `p(x, y) = (1 - ν) 1[x = y] + ν q(y - x)`.
///
/// `ν = 0` is accepted here (degenerate, never migrates) even though model
/// parameters require `ν > 0`.
#[derive(Debug, Clone)]
pub struct FullKernel {
    base: DisplacementKernel,
    nu: f64,
}

impl FullKernel {
    pub fn new(base: DisplacementKernel, nu: f64) -> Result<Self, FullKernelError> {
        if !nu.is_finite() || !(0.0..=1.0).contains(&nu) {
            return Err(FullKernelError::BadNu(nu));
        }
        Ok(FullKernel { base, nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn base(&self) -> &DisplacementKernel {
        &self.base
    }

    /// `(0,0)` with probability `1 - ν`, otherwise a `q` draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (i64, i64) {
        if self.nu < 1.0 && rng.random::<f64>() >= self.nu {
            (0, 0)
        } else {
            self.base.sample(rng)
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
