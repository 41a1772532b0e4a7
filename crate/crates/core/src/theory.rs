//! Closed-form predictions: pure-death (Kingman) transition probabilities,
//! limiting coalescence-time laws, the two-phase time change between raw
//! model time and coalescent time, and effective population size.
//!
//! All functions take `α`, `β`, `σ²` as direct numeric inputs so analytic
//! checks do not require a lattice kernel with a matching variance. Times
//! come in three currencies used throughout: raw model time, the
//! dimensionless time `t = 2ν·raw`, and coalescent time `u`.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("lineage count k = {k} is out of range for sample size n = {n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("time must be non-negative and finite, got {0}")]
    BadTime(f64),
    #[error("exponents must satisfy 0 < beta <= gamma <= 1, got beta = {beta}, gamma = {gamma}")]
    ExponentOrder { beta: f64, gamma: f64 },
    #[error("t = {t} lies below the formula's lower cutoff L^(2 beta) = {cutoff}")]
    BelowCutoff { t: f64, cutoff: f64 },
    #[error("coalescent time must be non-negative, got {0}")]
    NegativeU(f64),
    #[error("partition is empty")]
    EmptyPartition,
    #[error("partition must contain blocks of positive size summing to at least 2")]
    InvalidPartition,
    #[error("expected_time_to_k requires 1 <= k < n, got k = {k}, n = {n}")]
    BadReductionTarget { k: u64, n: u64 },
    #[error("invalid limit parameters: {0}")]
    BadParams(String),
}

/// Parameters of the limit laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitParams {
    pub alpha: f64,
    pub beta: f64,
    pub l: f64,
    pub nu: f64,
    pub sigma2: f64,
}

impl LimitParams {
    pub fn new(alpha: f64, beta: f64, l: f64, nu: f64, sigma2: f64) -> Result<Self, TheoryError> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(TheoryError::BadParams(format!("alpha = {alpha}")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(TheoryError::BadParams(format!("beta = {beta}")));
        }
        if !(l > 1.0) || !l.is_finite() {
            return Err(TheoryError::BadParams(format!("l = {l}")));
        }
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(TheoryError::BadParams(format!("nu = {nu}")));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(TheoryError::BadParams(format!("sigma2 = {sigma2}")));
        }
        Ok(LimitParams {
            alpha,
            beta,
            l,
            nu,
            sigma2,
        })
    }

    pub fn ln_l(&self) -> f64 {
        self.l.ln()
    }

    /// Lower cutoff `L^(2 beta)` of the dimensionless-time formulas.
    pub fn lower_cutoff(&self) -> f64 {
        self.l.powf(2.0 * self.beta)
    }

    /// Coalescent time at which the early phase ends: `u1 = log((α+1)/(α+β))`.
    pub fn u1(&self) -> f64 {
        ((self.alpha + 1.0) / (self.alpha + self.beta)).ln()
    }

    /// Dimensionless-time length of one coalescent unit in the late phase:
    /// `(1+α) L² log L / (π σ²)`.
    pub fn late_phase_scale(&self) -> f64 {
        (1.0 + self.alpha) * self.l * self.l * self.ln_l() / (std::f64::consts::PI * self.sigma2)
    }
}

/// `P_n(D_t = k)` for the pure death chain with rates `C(k,2)`.
pub fn kingman_pmf(n: usize, k: usize, t: f64) -> Result<f64, TheoryError> {
    if k < 1 || k > n {
        return Err(TheoryError::KOutOfRange { k, n });
    }
    Ok(kingman_distribution(n, t)?[k - 1])
}

/// The full law of `D_t` started from `n` lineages; index `k-1` holds
/// `P_n(D_t = k)`.
///
/// Computed by scaling-and-squaring on the bidiagonal generator. The
/// alternating-series closed form cancels catastrophically at small `t`,
/// so it is only used as a cross-check in tests.
pub fn kingman_distribution(n: usize, t: f64) -> Result<Vec<f64>, TheoryError> {
    if n == 0 {
        return Err(TheoryError::EmptySample);
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(TheoryError::BadTime(t));
    }
    if n == 1 || t == 0.0 {
        let mut v = vec![0.0; n];
        v[n - 1] = 1.0;
        return Ok(v);
    }
    // generator over states k = 1..n, index k-1
    let mut a = DMatrix::<f64>::zeros(n, n);
    for k in 2..=n {
        let rate = (k * (k - 1) / 2) as f64;
        a[(k - 1, k - 1)] = -rate * t;
        a[(k - 1, k - 2)] = rate * t;
    }
    let p = matrix_exp(&a);
    Ok((0..n).map(|j| p[(n - 1, j)].max(0.0)).collect())
}

/// exp(A) by scaling-and-squaring with a Taylor core.
///
/// The scaled norm is pushed below 1/2, where 18 Taylor terms are beyond
/// f64 resolution; the squaring chain is stable here because exp(Qt) of a
/// generator is a stochastic matrix.
fn matrix_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let b = a / 2f64.powi(s as i32);
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for j in 1..=18 {
        term = (&term * &b) / j as f64;
        result += &term;
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Limiting `P(t0 > L^(2 gamma) / (2 nu))` for a pair started at distance
/// `~ L^beta`: `(beta + alpha) / (gamma + alpha)`.
pub fn thm1_survival(beta: f64, gamma: f64, alpha: f64) -> Result<f64, TheoryError> {
    if !(beta > 0.0 && beta <= gamma && gamma <= 1.0) {
        return Err(TheoryError::ExponentOrder { beta, gamma });
    }
    if !(alpha >= 0.0) {
        return Err(TheoryError::BadParams(format!("alpha = {alpha}")));
    }
    Ok((beta + alpha) / (gamma + alpha))
}

/// Limiting `P(t0 > L²/(2 nu) + h_L t)`: `((beta + alpha)/(1 + alpha)) e^{-t}`.
pub fn late_tail(beta: f64, alpha: f64, t: f64) -> Result<f64, TheoryError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(TheoryError::BadTime(t));
    }
    if !(beta > 0.0 && beta <= 1.0) || !(alpha >= 0.0) {
        return Err(TheoryError::BadParams(format!(
            "beta = {beta}, alpha = {alpha}"
        )));
    }
    Ok((beta + alpha) / (1.0 + alpha) * (-t).exp())
}

/// Coalescence-time tail in dimensionless time (`raw = t / (2 nu)`):
/// two branches meeting continuously at `t = L²`.
pub fn tail_unscaled(params: &LimitParams, t: f64) -> Result<f64, TheoryError> {
    let cutoff = params.lower_cutoff();
    if !(t.is_finite()) {
        return Err(TheoryError::BadTime(t));
    }
    if t < cutoff * (1.0 - 1e-12) {
        return Err(TheoryError::BelowCutoff { t, cutoff });
    }
    let l2 = params.l * params.l;
    let a = params.alpha;
    let b = params.beta;
    if t <= l2 {
        Ok((a + b) / (a + t.ln() / (2.0 * params.ln_l())))
    } else {
        Ok((a + b) / (a + 1.0) * (-(t - l2) / params.late_phase_scale()).exp())
    }
}

/// Map dimensionless time to coalescent time `u`.
pub fn time_change(params: &LimitParams, t: f64) -> Result<f64, TheoryError> {
    let cutoff = params.lower_cutoff();
    if !t.is_finite() {
        return Err(TheoryError::BadTime(t));
    }
    if t < cutoff * (1.0 - 1e-12) {
        return Err(TheoryError::BelowCutoff { t, cutoff });
    }
    let l2 = params.l * params.l;
    let a = params.alpha;
    let b = params.beta;
    if t <= l2 {
        Ok(((a + t.ln() / (2.0 * params.ln_l())) / (a + b)).ln())
    } else {
        Ok(params.u1() + (t - l2) / params.late_phase_scale())
    }
}

/// Inverse of [`time_change`]; round-trips within 1e-9 relative.
pub fn time_change_inv(params: &LimitParams, u: f64) -> Result<f64, TheoryError> {
    if !(u >= 0.0) || !u.is_finite() {
        return Err(TheoryError::NegativeU(u));
    }
    let a = params.alpha;
    let b = params.beta;
    let u1 = params.u1();
    if u <= u1 {
        Ok((((a + b) * u.exp() - a) * 2.0 * params.ln_l()).exp())
    } else {
        Ok(params.l * params.l + (u - u1) * params.late_phase_scale())
    }
}

/// Limiting lineage-count law of Theorem 3:
/// `P_n(D_{log((gamma+alpha)/(beta+alpha))} = k)`.
pub fn thm3_pmf(n: usize, k: usize, beta: f64, gamma: f64, alpha: f64) -> Result<f64, TheoryError> {
    if !(beta > 0.0 && beta <= gamma && gamma <= 1.0) {
        return Err(TheoryError::ExponentOrder { beta, gamma });
    }
    kingman_pmf(n, k, ((gamma + alpha) / (beta + alpha)).ln())
}

/// Effective population size `(1 + alpha) L² log L / (4 pi sigma² nu)`.
pub fn effective_size(params: &LimitParams) -> f64 {
    (1.0 + params.alpha) * params.l * params.l * params.ln_l()
        / (4.0 * std::f64::consts::PI * params.sigma2 * params.nu)
}

/// The approximation `N L² (1 + alpha) / (2 alpha)`; undefined at `alpha = 0`.
pub fn effective_size_approx(colony_n: u32, l: f64, alpha: f64) -> Option<f64> {
    if alpha <= 0.0 {
        return None;
    }
    Some(colony_n as f64 * l * l * (1.0 + alpha) / (2.0 * alpha))
}

/// Fraction of sampled pairs lying in the same block of an allelic partition.
pub fn partition_pair_fraction(blocks: &[u64]) -> Result<f64, TheoryError> {
    if blocks.is_empty() {
        return Err(TheoryError::EmptyPartition);
    }
    if blocks.iter().any(|&b| b == 0) {
        return Err(TheoryError::InvalidPartition);
    }
    let n: u64 = blocks.iter().sum();
    if n < 2 {
        return Err(TheoryError::InvalidPartition);
    }
    let same: u64 = blocks.iter().map(|&b| b * (b - 1)).sum();
    Ok(same as f64 / (n * (n - 1)) as f64)
}

/// Expected coalescent time for `n` lineages to be reduced to `k`:
/// `sum_{j=k+1}^{n} 1 / C(j,2) = 2/k - 2/n`.
pub fn expected_time_to_k(n: u64, k: u64) -> Result<f64, TheoryError> {
    if k < 1 || k >= n {
        return Err(TheoryError::BadReductionTarget { k, n });
    }
    Ok(2.0 / k as f64 - 2.0 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_params() -> LimitParams {
        // L = 100, N = 5, nu = 0.2, sigma2 = 2: alpha = 4 pi / ln(100)
        let alpha = 2.0 * 5.0 * 0.2 * std::f64::consts::PI * 2.0 / 100f64.ln();
        LimitParams::new(alpha, 0.4, 100.0, 0.2, 2.0).unwrap()
    }

    #[test]
    fn pair_survival_is_exponential() {
        let p = kingman_pmf(2, 2, 1.0).unwrap();
        assert!((p - (-1.0f64).exp()).abs() < 1e-12);
        assert!((p - 0.367879).abs() < 1e-6);
    }

    // Independent oracle: integrate the two-stage death chain directly.
    // From 3 lineages, rate 3 to reach 2, then rate 1 to reach 1:
    // P(D_t = 2) = 3 ∫_0^t e^{-3s} e^{-(t-s)} ds = (3/2)(e^{-t} - e^{-3t}).
    #[test]
    fn three_lineage_middle_state_matches_direct_integration() {
        let direct = |t: f64| 1.5 * ((-t).exp() - (-3.0 * t).exp());
        for t in [0.05, 0.3, 1.0, 2.5] {
            let p = kingman_pmf(3, 2, t).unwrap();
            assert!((p - direct(t)).abs() < 1e-12, "t = {t}");
        }
        assert!((kingman_pmf(3, 2, 1.0).unwrap() - 0.4771386).abs() < 1e-6);
    }

    #[test]
    fn no_time_elapsed_concentrates_at_n() {
        for n in [1usize, 2, 5, 40] {
            assert_eq!(kingman_pmf(n, n, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn k_out_of_range_rejected() {
        assert!(kingman_pmf(4, 0, 1.0).is_err());
        assert!(kingman_pmf(4, 5, 1.0).is_err());
    }

    #[test]
    fn distribution_normalizes_for_large_samples() {
        for n in [2usize, 10, 60, 100] {
            for t in [0.0, 1e-6, 0.01, 0.25, 1.0, 4.0, 10.0] {
                let d = kingman_distribution(n, t).unwrap();
                let sum: f64 = d.iter().sum();
                assert!(
                    (sum - 1.0).abs() < 1e-10,
                    "n = {n}, t = {t}, sum = {sum:e}"
                );
                assert!(d.iter().all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));
            }
        }
    }

    // Independent oracle for n = 4: the top two states solve by integrating
    // factors (rates 6, 3, 1 down the chain); the k = 2 state is integrated
    // numerically from its forward equation.
    #[test]
    fn four_lineage_chain_matches_direct_solution() {
        for t in [0.1, 0.5, 1.5] {
            let d = kingman_distribution(4, t).unwrap();
            assert!((d[3] - (-6.0 * t).exp()).abs() < 1e-12);
            let p3 = 2.0 * ((-3.0f64 * t).exp() - (-6.0 * t).exp());
            assert!((d[2] - p3).abs() < 1e-12);
            // p2' = 3 p3 - p2, p2(0) = 0
            let quad = {
                let mut p2 = 0.0;
                let steps = 20000;
                let h = t / steps as f64;
                let f = |s: f64, p: f64| 3.0 * 2.0 * ((-3.0f64 * s).exp() - (-6.0 * s).exp()) - p;
                let mut s = 0.0;
                for _ in 0..steps {
                    let k1 = f(s, p2);
                    let k2 = f(s + h / 2.0, p2 + h / 2.0 * k1);
                    let k3 = f(s + h / 2.0, p2 + h / 2.0 * k2);
                    let k4 = f(s + h, p2 + h * k3);
                    p2 += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                    s += h;
                }
                p2
            };
            assert!((d[1] - quad).abs() < 1e-9, "t = {t}: {} vs {}", d[1], quad);
        }
    }

    #[test]
    fn thm1_survival_paper_example() {
        let s = thm1_survival(0.4, 1.0, 2.7288).unwrap();
        assert!((s - 0.83909).abs() < 1e-4);
        assert_eq!(thm1_survival(0.7, 0.7, 3.0).unwrap(), 1.0);
        assert!((thm1_survival(0.5, 1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(thm1_survival(0.9, 0.4, 1.0).is_err());
    }

    #[test]
    fn late_tail_values() {
        assert!((late_tail(0.4, 2.7288, 0.0).unwrap() - 0.83909).abs() < 1e-4);
        assert!(late_tail(0.4, 2.7288, 700.0).unwrap() < 1e-300);
        assert!((late_tail(1.0, 5.0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!(late_tail(0.4, 2.7288, -0.1).is_err());
    }

    #[test]
    fn tail_unscaled_branches() {
        let p = example_params();
        let cutoff = p.lower_cutoff();
        assert!((tail_unscaled(&p, cutoff).unwrap() - 1.0).abs() < 1e-12);
        let at_l2 = tail_unscaled(&p, p.l * p.l).unwrap();
        assert!((at_l2 - 0.83909).abs() < 1e-4);
        // one mean of the exponential branch
        let t = p.l * p.l + p.late_phase_scale();
        let expect = at_l2 * (-1.0f64).exp();
        assert!((tail_unscaled(&p, t).unwrap() - expect).abs() < 1e-12);
        assert!(tail_unscaled(&p, cutoff * 0.5).is_err());
    }

    #[test]
    fn tail_continuous_at_l_squared() {
        let p = example_params();
        let l2 = p.l * p.l;
        let below = tail_unscaled(&p, l2 * (1.0 - 1e-9)).unwrap();
        let above = tail_unscaled(&p, l2 * (1.0 + 1e-9)).unwrap();
        assert!((below - above).abs() < 1e-6);
        assert_eq!(
            tail_unscaled(&p, l2).unwrap(),
            late_tail(p.beta, p.alpha, 0.0).unwrap()
        );
    }

    #[test]
    fn time_change_paper_anchor() {
        let p = example_params();
        let u1 = time_change(&p, p.l * p.l).unwrap();
        assert!((u1 - 0.17544).abs() < 1e-4);
        assert!((time_change(&p, p.lower_cutoff()).unwrap()).abs() < 1e-12);
        // inverse continuous at u1 from both branches
        let from_below = time_change_inv(&p, p.u1() - 1e-14).unwrap();
        let from_above = time_change_inv(&p, p.u1() + 1e-14).unwrap();
        assert!((from_below - p.l * p.l).abs() / (p.l * p.l) < 1e-9);
        assert!((from_above - p.l * p.l).abs() / (p.l * p.l) < 1e-9);
    }

    #[test]
    fn time_change_round_trip() {
        let p = example_params();
        let cutoff = p.lower_cutoff();
        for frac in 0..=60 {
            // span both branches geometrically up to far past L^2
            let t = cutoff * (1e6f64).powf(frac as f64 / 60.0);
            let u = time_change(&p, t).unwrap();
            let back = time_change_inv(&p, u).unwrap();
            assert!(
                (back - t).abs() / t < 1e-9,
                "t = {t}, round-trip = {back}"
            );
        }
        for u in [0.0, 0.05, 0.17, 0.1754, 0.2, 1.0, 4.0] {
            let t = time_change_inv(&p, u).unwrap();
            let back = time_change(&p, t).unwrap();
            assert!((back - u).abs() < 1e-9 * u.max(1.0), "u = {u}");
        }
    }

    #[test]
    fn time_change_strictly_increasing() {
        let p = example_params();
        let cutoff = p.lower_cutoff();
        let mut last = -1.0;
        for i in 0..200 {
            let t = cutoff * (3e5f64).powf(i as f64 / 199.0);
            let u = time_change(&p, t).unwrap();
            assert!(u > last);
            last = u;
        }
    }

    #[test]
    fn thm3_pmf_consistency() {
        // n = 2, k = 2 equals the pair survival probability
        let (b, g, a) = (0.4, 1.0, 2.7288);
        let p = thm3_pmf(2, 2, b, g, a).unwrap();
        assert!((p - thm1_survival(b, g, a).unwrap()).abs() < 1e-12);
        // gamma = beta: no coalescent time has elapsed
        assert_eq!(thm3_pmf(5, 5, 0.4, 0.4, 1.0).unwrap(), 1.0);
        // n = 4, k = 2 via the distribution at the mapped time
        let u = ((g + a) / (b + a)).ln();
        let d = kingman_distribution(4, u).unwrap();
        assert!((thm3_pmf(4, 2, b, g, a).unwrap() - d[1]).abs() < 1e-15);
    }

    #[test]
    fn effective_size_paper_example() {
        let p = example_params();
        let ne = effective_size(&p);
        assert!((ne - 34162.0).abs() < 2.0, "ne = {ne}");
        let approx = effective_size_approx(5, 100.0, p.alpha).unwrap();
        assert!((approx / (5.0 * 1e4) - 0.68323).abs() < 1e-4);
        assert_eq!(effective_size_approx(5, 100.0, 0.0), None);
        // sigma2 doubled, nu halved: product unchanged, alpha unchanged
        let p2 = LimitParams::new(p.alpha, p.beta, p.l, p.nu / 2.0, p.sigma2 * 2.0).unwrap();
        assert!((effective_size(&p2) - ne).abs() < 1e-9);
    }

    #[test]
    fn partition_fraction_values() {
        let f = partition_pair_fraction(&[14, 13, 10, 10, 9, 3, 1]).unwrap();
        assert!((f - 596.0 / 3540.0).abs() < 1e-15);
        assert!((f - 0.168).abs() < 5e-4);
        assert_eq!(partition_pair_fraction(&[1, 1, 1, 1]).unwrap(), 0.0);
        assert!(partition_pair_fraction(&[]).is_err());
        assert!(partition_pair_fraction(&[1]).is_err());
    }

    #[test]
    fn reduction_time_values() {
        let t = expected_time_to_k(60, 7).unwrap();
        assert!((t - (2.0 / 7.0 - 2.0 / 60.0)).abs() < 1e-15);
        assert!((t - 0.25238).abs() < 1e-4);
        assert!(expected_time_to_k(60, 60).is_err());
        assert!(expected_time_to_k(60, 0).is_err());
    }
}
