//! Basic reproduction number R0, its bounds, limits, and the epidemic
//! threshold in the infected-dispersal rate.
//!
//! R0 = rho(F V^{-1}) with F = diag(beta), V = diag(gamma) - d_I L. The
//! primary algorithm avoids forming F V^{-1}: it bisects a on
//! a -> s(d_I L + a diag(beta) - diag(gamma)), which vanishes exactly at
//! a = 1/R0. That only ever takes spectral bounds of quasi-positive
//! irreducible matrices, so it tolerates beta_j = 0 patches where the direct
//! power iteration on F V^{-1} becomes fragile.

use crate::numerics::{
    bisect_monotone, linear_solve, spectral_bound, DenseMatrix, Direction, NumericsError,
};
use crate::patch_graph::{perron_vector, ConnectivityMatrix, GraphError};

#[derive(Debug, thiserror::Error)]
pub enum ReproductionError {
    #[error("transmission/recovery vectors have different lengths ({beta} vs {gamma})")]
    LengthMismatch { beta: usize, gamma: usize },
    #[error("parameter dimension {found} does not match the {expected}-patch network")]
    WrongDimension { expected: usize, found: usize },
    #[error("{which}[{index}] = {value} violates nonnegativity")]
    NegativeRate {
        which: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{which}[{index}] is not finite")]
    NonFiniteRate { which: &'static str, index: usize },
    #[error("dispersal rate {which} = {value} must be positive and finite")]
    BadDispersal { which: &'static str, value: f64 },
    #[error("total population {0} must be positive and finite")]
    BadPopulation(f64),
    #[error("recovery rates are all zero; R0 is undefined")]
    AllGammaZero,
    #[error("patches {0:?} have beta_j = gamma_j; a strict risk partition is required here")]
    TiePatch(Vec<usize>),
    #[error("no patch has beta_j > gamma_j; the epidemic threshold in d_I does not arise")]
    NoHighRiskPatch,
    #[error("no sign change found while expanding the d_I bracket up to {tried_up_to:.3e}")]
    NoSignChange { tried_up_to: f64 },
    #[error("direct F V^-1 power iteration requires strictly positive beta")]
    BetaNotStrictlyPositive,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Per-patch epidemic rates plus the two dispersal rates and the conserved
/// total population.
#[derive(Debug, Clone)]
pub struct EpidemicParameters {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub d_s: f64,
    pub d_i: f64,
    pub population: f64,
}

impl EpidemicParameters {
    pub fn new(
        beta: Vec<f64>,
        gamma: Vec<f64>,
        d_s: f64,
        d_i: f64,
        population: f64,
    ) -> Result<Self, ReproductionError> {
        if beta.len() != gamma.len() {
            return Err(ReproductionError::LengthMismatch {
                beta: beta.len(),
                gamma: gamma.len(),
            });
        }
        for (which, v) in [("beta", &beta), ("gamma", &gamma)] {
            for (index, &x) in v.iter().enumerate() {
                if !x.is_finite() {
                    return Err(ReproductionError::NonFiniteRate { which, index });
                }
                if x < 0.0 {
                    return Err(ReproductionError::NegativeRate {
                        which,
                        index,
                        value: x,
                    });
                }
            }
        }
        for (which, v) in [("d_S", d_s), ("d_I", d_i)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ReproductionError::BadDispersal { which, value: v });
            }
        }
        if !(population > 0.0) || !population.is_finite() {
            return Err(ReproductionError::BadPopulation(population));
        }
        Ok(Self {
            beta,
            gamma,
            d_s,
            d_i,
            population,
        })
    }

    pub fn n(&self) -> usize {
        self.beta.len()
    }

    pub fn with_d_i(&self, d_i: f64) -> Self {
        Self {
            d_i,
            ..self.clone()
        }
    }

    pub fn with_d_s(&self, d_s: f64) -> Self {
        Self {
            d_s,
            ..self.clone()
        }
    }

    /// beta_j - gamma_j for all j.
    pub fn net_rates(&self) -> Vec<f64> {
        self.beta
            .iter()
            .zip(&self.gamma)
            .map(|(&b, &g)| b - g)
            .collect()
    }

    pub fn gamma_all_zero(&self) -> bool {
        self.gamma.iter().all(|&g| g == 0.0)
    }

    fn check_dim(&self, l: &ConnectivityMatrix) -> Result<(), ReproductionError> {
        if self.n() != l.n() {
            return Err(ReproductionError::WrongDimension {
                expected: l.n(),
                found: self.n(),
            });
        }
        Ok(())
    }
}

/// Low-risk / high-risk split of the patches by exact comparison of beta_j
/// against gamma_j; ties are reported separately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RiskPartition {
    pub h_plus: Vec<usize>,
    pub h_minus: Vec<usize>,
    pub ties: Vec<usize>,
}

impl RiskPartition {
    /// Both risk classes nonempty and no ties: the strict partition needed
    /// by the equilibrium-profile results.
    pub fn is_strict(&self) -> bool {
        self.ties.is_empty() && !self.h_plus.is_empty() && !self.h_minus.is_empty()
    }

    pub fn require_strict(&self) -> Result<(), ReproductionError> {
        if !self.ties.is_empty() {
            return Err(ReproductionError::TiePatch(self.ties.clone()));
        }
        if self.h_plus.is_empty() || self.h_minus.is_empty() {
            return Err(ReproductionError::TiePatch(vec![]));
        }
        Ok(())
    }
}

pub fn risk_partition(params: &EpidemicParameters) -> RiskPartition {
    let mut h_plus = Vec::new();
    let mut h_minus = Vec::new();
    let mut ties = Vec::new();
    for j in 0..params.n() {
        if params.beta[j] > params.gamma[j] {
            h_plus.push(j);
        } else if params.beta[j] < params.gamma[j] {
            h_minus.push(j);
        } else {
            ties.push(j);
        }
    }
    RiskPartition {
        h_plus,
        h_minus,
        ties,
    }
}

/// s(d_I L + diag f): the spectral bound that controls every threshold in
/// this model family.
pub fn dispersal_spectral_bound(
    l: &ConnectivityMatrix,
    d_i: f64,
    f: &[f64],
) -> Result<f64, NumericsError> {
    let a = l.matrix().scaled(d_i).with_added_diagonal(f);
    Ok(spectral_bound(&a)?.value)
}

/// s(d_I L + a diag(beta) - diag(gamma)); vanishes at a = 1/R0.
pub fn lambda1(
    l: &ConnectivityMatrix,
    params: &EpidemicParameters,
    a: f64,
) -> Result<f64, ReproductionError> {
    params.check_dim(l)?;
    let diag: Vec<f64> = params
        .beta
        .iter()
        .zip(&params.gamma)
        .map(|(&b, &g)| a * b - g)
        .collect();
    Ok(dispersal_spectral_bound(l, params.d_i, &diag)?)
}

/// beta_j / gamma_j with the 0/0 -> 0 and x/0 -> infinity conventions.
fn risk_ratio(beta: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        if beta > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        beta / gamma
    }
}

/// Basic reproduction number, by bisection on a -> lambda1(a).
///
/// The bracket comes from min_j beta_j/gamma_j <= R0 <= max_j beta_j/gamma_j,
/// with infinite ends replaced by geometric expansion. Returns 0 when beta
/// is identically zero.
pub fn r0(l: &ConnectivityMatrix, params: &EpidemicParameters) -> Result<f64, ReproductionError> {
    params.check_dim(l)?;
    if params.gamma_all_zero() {
        return Err(ReproductionError::AllGammaZero);
    }
    if params.beta.iter().all(|&b| b == 0.0) {
        return Ok(0.0);
    }
    let ratios: Vec<f64> = params
        .beta
        .iter()
        .zip(&params.gamma)
        .map(|(&b, &g)| risk_ratio(b, g))
        .collect();
    let r_hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let r_lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    if r_lo == r_hi {
        // beta proportional to gamma: R0 is the common ratio at every d_I
        return Ok(r_lo);
    }

    // mu = 1/R0 bracket, then bisection on the strictly increasing lambda1
    let mut mu_lo = if r_hi.is_finite() { 1.0 / r_hi } else { 0.0 };
    let mut mu_hi = if r_lo > 0.0 { 1.0 / r_lo } else { 1.0 };

    let mut expansions = 0;
    while lambda1(l, params, mu_hi)? < 0.0 {
        mu_hi *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(ReproductionError::NoSignChange {
                tried_up_to: mu_hi,
            });
        }
    }
    if mu_lo == 0.0 {
        mu_lo = mu_hi * 1e-6;
    }
    while lambda1(l, params, mu_lo)? > 0.0 {
        mu_lo *= 0.5;
        expansions += 1;
        if expansions > 400 {
            return Err(ReproductionError::NoSignChange {
                tried_up_to: mu_lo,
            });
        }
    }

    // bisect in log(mu) so the width tolerance is relative
    let err_cell = std::cell::RefCell::new(None);
    let g = |x: f64| match lambda1(l, params, x.exp()) {
        Ok(v) => v,
        Err(e) => {
            *err_cell.borrow_mut() = Some(e);
            f64::NAN
        }
    };
    let root = bisect_monotone(g, mu_lo.ln(), mu_hi.ln(), 1e-13, Direction::Increasing);
    if let Some(e) = err_cell.into_inner() {
        return Err(e);
    }
    Ok(1.0 / root?.exp())
}

/// Cross-check route: power iteration on the nonnegative matrix F V^{-1}.
///
/// Requires strictly positive beta, in which case F V^{-1} is strictly
/// positive (V is an irreducible nonsingular M-matrix) and the iteration is
/// safe.
pub fn r0_power(
    l: &ConnectivityMatrix,
    params: &EpidemicParameters,
) -> Result<f64, ReproductionError> {
    params.check_dim(l)?;
    if params.gamma_all_zero() {
        return Err(ReproductionError::AllGammaZero);
    }
    if params.beta.iter().any(|&b| !(b > 0.0)) {
        return Err(ReproductionError::BetaNotStrictlyPositive);
    }
    let n = l.n();
    // V = diag(gamma) - d_I L
    let v = l
        .matrix()
        .scaled(-params.d_i)
        .with_added_diagonal(&params.gamma);
    // columns of V^{-1}
    let mut v_inv_cols = Vec::with_capacity(n);
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        v_inv_cols.push(linear_solve(&v, &e)?);
    }
    let m = DenseMatrix::from_fn(n, |j, k| params.beta[j] * v_inv_cols[k][j])?;
    Ok(spectral_bound(&m)?.value)
}

/// The two R0 limits in the infected-dispersal rate.
#[derive(Debug, Clone, Copy)]
pub struct R0Limits {
    /// lim_{d_I -> 0} R0 = max_j beta_j/gamma_j (may be infinite).
    pub at_zero: f64,
    /// lim_{d_I -> inf} R0 = sum(alpha beta) / sum(alpha gamma).
    pub at_infinity: f64,
    /// True when some patch has beta_j = gamma_j = 0, in which case the
    /// max-ratio formula is guaranteed only as an upper bound.
    pub at_zero_is_upper_bound: bool,
}

pub fn r0_limits(
    l: &ConnectivityMatrix,
    params: &EpidemicParameters,
) -> Result<R0Limits, ReproductionError> {
    params.check_dim(l)?;
    if params.gamma_all_zero() {
        return Err(ReproductionError::AllGammaZero);
    }
    let at_zero = params
        .beta
        .iter()
        .zip(&params.gamma)
        .map(|(&b, &g)| risk_ratio(b, g))
        .fold(f64::NEG_INFINITY, f64::max);
    let degenerate = params
        .beta
        .iter()
        .zip(&params.gamma)
        .any(|(&b, &g)| b == 0.0 && g == 0.0);
    let alpha = perron_vector(l)?.alpha;
    let num: f64 = alpha.iter().zip(&params.beta).map(|(&a, &b)| a * b).sum();
    let den: f64 = alpha.iter().zip(&params.gamma).map(|(&a, &g)| a * g).sum();
    Ok(R0Limits {
        at_zero,
        at_infinity: num / den,
        at_zero_is_upper_bound: degenerate,
    })
}

/// The dispersal rate at which R0 crosses 1, when it exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DispersalThreshold {
    Finite(f64),
    /// R0 > 1 for every d_I.
    Infinite,
}

impl DispersalThreshold {
    pub fn finite(&self) -> Option<f64> {
        match self {
            DispersalThreshold::Finite(v) => Some(*v),
            DispersalThreshold::Infinite => None,
        }
    }
}

/// Finds d_I* where s(d_I L + diag(beta - gamma)) crosses zero.
///
/// When sum_j alpha_j (beta_j - gamma_j) >= 0 the bound stays positive for
/// every d_I and the threshold is infinite. Otherwise the bracket expands
/// geometrically from `di_hint` until the sign change is caught and the root
/// is bisected to relative width 1e-6.
pub fn find_di_star(
    l: &ConnectivityMatrix,
    params: &EpidemicParameters,
    di_hint: f64,
) -> Result<DispersalThreshold, ReproductionError> {
    params.check_dim(l)?;
    let f = params.net_rates();
    if !f.iter().any(|&x| x > 0.0) {
        return Err(ReproductionError::NoHighRiskPatch);
    }
    let alpha = perron_vector(l)?.alpha;
    let weighted: f64 = alpha.iter().zip(&f).map(|(&a, &x)| a * x).sum();
    if weighted >= 0.0 {
        return Ok(DispersalThreshold::Infinite);
    }

    let mut hi = if di_hint > 0.0 && di_hint.is_finite() {
        di_hint
    } else {
        1.0
    };
    let mut expansions = 0;
    while dispersal_spectral_bound(l, hi, &f)? > 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(ReproductionError::NoSignChange { tried_up_to: hi });
        }
    }
    let mut lo = hi;
    while dispersal_spectral_bound(l, lo, &f)? <= 0.0 {
        lo *= 0.25;
        expansions += 1;
        if expansions > 400 {
            return Err(ReproductionError::NoSignChange { tried_up_to: lo });
        }
    }

    let err_cell = std::cell::RefCell::new(None);
    let g = |x: f64| match dispersal_spectral_bound(l, x.exp(), &f) {
        Ok(v) => v,
        Err(e) => {
            *err_cell.borrow_mut() = Some(e);
            f64::NAN
        }
    };
    let root = bisect_monotone(g, lo.ln(), hi.ln(), 1e-6, Direction::Decreasing);
    if let Some(e) = err_cell.into_inner() {
        return Err(e.into());
    }
    Ok(DispersalThreshold::Finite(root?.exp()))
}

/// s(F - V) = s(d_I L + diag(beta - gamma)); shares the sign of R0 - 1.
pub fn sign_indicator(
    l: &ConnectivityMatrix,
    params: &EpidemicParameters,
) -> Result<f64, ReproductionError> {
    params.check_dim(l)?;
    Ok(dispersal_spectral_bound(l, params.d_i, &params.net_rates())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch_graph::{build_connectivity, star_graph};
    use approx::assert_abs_diff_eq;

    fn two_patch_symmetric() -> ConnectivityMatrix {
        build_connectivity(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn partition_star_fixture() {
        let params =
            EpidemicParameters::new(vec![3.0, 4.0, 1.0, 1.0], vec![1.0, 1.0, 2.0, 7.0], 1.0, 1.0, 100.0)
                .unwrap();
        let p = risk_partition(&params);
        assert_eq!(p.h_plus, vec![0, 1]);
        assert_eq!(p.h_minus, vec![2, 3]);
        assert!(p.ties.is_empty());
        assert!(p.is_strict());
    }

    #[test]
    fn partition_all_ties() {
        let params =
            EpidemicParameters::new(vec![1.0, 1.0], vec![1.0, 1.0], 1.0, 1.0, 10.0).unwrap();
        let p = risk_partition(&params);
        assert!(p.h_plus.is_empty());
        assert!(p.h_minus.is_empty());
        assert_eq!(p.ties, vec![0, 1]);
        assert!(p.require_strict().is_err());
    }

    #[test]
    fn partition_with_zero_beta() {
        let params =
            EpidemicParameters::new(vec![2.0, 0.0], vec![1.0, 2.0], 1.0, 1.0, 10.0).unwrap();
        let p = risk_partition(&params);
        assert_eq!(p.h_plus, vec![0]);
        assert_eq!(p.h_minus, vec![1]);
    }

    #[test]
    fn r0_proportional_rates_is_constant() {
        let l = star_graph(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        for d_i in [0.01, 1.0, 50.0] {
            let params = EpidemicParameters::new(
                vec![2.0, 4.0, 6.0, 2.0],
                vec![1.0, 2.0, 3.0, 1.0],
                1.0,
                d_i,
                100.0,
            )
            .unwrap();
            assert_abs_diff_eq!(r0(&l, &params).unwrap(), 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn r0_two_patch_closed_form() {
        // V = [[2,-1],[-1,3]], F = diag(4,0): F V^{-1} = [[2.4, 0.8],[0,0]],
        // spectral radius 2.4
        let l = two_patch_symmetric();
        let params =
            EpidemicParameters::new(vec![4.0, 0.0], vec![1.0, 2.0], 1.0, 1.0, 10.0).unwrap();
        assert_abs_diff_eq!(r0(&l, &params).unwrap(), 2.4, epsilon = 1e-10);
    }

    #[test]
    fn r0_power_agrees_when_beta_positive() {
        let l = star_graph(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        let params = EpidemicParameters::new(
            vec![3.0, 4.0, 1.0, 1.0],
            vec![1.0, 1.0, 2.0, 3.0],
            1.0,
            2.5,
            100.0,
        )
        .unwrap();
        let a = r0(&l, &params).unwrap();
        let b = r0_power(&l, &params).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-8);
    }

    #[test]
    fn r0_zero_beta_is_zero() {
        let l = two_patch_symmetric();
        let params =
            EpidemicParameters::new(vec![0.0, 0.0], vec![1.0, 1.0], 1.0, 1.0, 10.0).unwrap();
        assert_eq!(r0(&l, &params).unwrap(), 0.0);
        let lim = r0_limits(&l, &params).unwrap();
        assert_eq!(lim.at_zero, 0.0);
        assert_eq!(lim.at_infinity, 0.0);
    }

    #[test]
    fn all_gamma_zero_rejected() {
        let l = two_patch_symmetric();
        let params =
            EpidemicParameters::new(vec![1.0, 2.0], vec![0.0, 0.0], 1.0, 1.0, 10.0).unwrap();
        assert!(matches!(
            r0(&l, &params),
            Err(ReproductionError::AllGammaZero)
        ));
    }

    #[test]
    fn lambda1_at_zero_is_minus_gamma() {
        // a = 0, gamma = 1: s(d_I L - I) = -1
        let l = two_patch_symmetric();
        let params =
            EpidemicParameters::new(vec![5.0, 3.0], vec![1.0, 1.0], 1.0, 0.7, 10.0).unwrap();
        assert_abs_diff_eq!(lambda1(&l, &params, 0.0).unwrap(), -1.0, epsilon = 1e-11);
    }

    #[test]
    fn lambda1_vanishes_at_inverse_r0() {
        let l = two_patch_symmetric();
        let params =
            EpidemicParameters::new(vec![4.0, 0.0], vec![1.0, 2.0], 1.0, 1.0, 10.0).unwrap();
        let mu0 = 1.0 / r0(&l, &params).unwrap();
        assert_abs_diff_eq!(lambda1(&l, &params, mu0).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn limits_symmetric_graph() {
        let l = two_patch_symmetric();
        let params =
            EpidemicParameters::new(vec![3.0, 1.0], vec![1.0, 2.0], 1.0, 1.0, 10.0).unwrap();
        let lim = r0_limits(&l, &params).unwrap();
        assert_abs_diff_eq!(lim.at_zero, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lim.at_infinity, 4.0 / 3.0, epsilon = 1e-12);
        assert!(!lim.at_zero_is_upper_bound);
    }

    #[test]
    fn threshold_infinite_when_proportional() {
        let l = two_patch_symmetric();
        let params =
            EpidemicParameters::new(vec![2.0, 2.0], vec![1.0, 1.0], 1.0, 1.0, 10.0).unwrap();
        assert_eq!(
            find_di_star(&l, &params, 1.0).unwrap(),
            DispersalThreshold::Infinite
        );
    }

    /// Dense geometric sign scan of s(d_I L + diag f); the oracle route.
    fn scan_for_crossing(l: &ConnectivityMatrix, f: &[f64], points: usize) -> Option<(f64, f64)> {
        let mut prev = (1e-4, dispersal_spectral_bound(l, 1e-4, f).unwrap());
        for i in 1..=points {
            let x = 1e-4 * (10f64).powf(6.0 * i as f64 / points as f64);
            let s = dispersal_spectral_bound(l, x, f).unwrap();
            if prev.1 > 0.0 && s <= 0.0 {
                return Some((prev.0, x));
            }
            prev = (x, s);
        }
        None
    }

    #[test]
    fn threshold_absent_when_large_dispersal_limit_stays_supercritical() {
        // beta = (4,0), gamma = (1,2): sum alpha (beta-gamma) = +1/2, so R0
        // falls from 4 only to 4/3 and never crosses 1; the dense scan
        // agrees that there is no sign change
        let l = two_patch_symmetric();
        let params =
            EpidemicParameters::new(vec![4.0, 0.0], vec![1.0, 2.0], 1.0, 1.0, 10.0).unwrap();
        assert_eq!(
            find_di_star(&l, &params, 1.0).unwrap(),
            DispersalThreshold::Infinite
        );
        assert!(scan_for_crossing(&l, &params.net_rates(), 2000).is_none());
    }

    #[test]
    fn threshold_two_patch_matches_dense_scan() {
        // beta = (4,0), gamma = (2,3): det(d L + diag(2,-3)) = -d(f0+f1)+f0 f1
        // vanishes at d = f0 f1/(f0+f1) = 6 exactly
        let l = two_patch_symmetric();
        let params =
            EpidemicParameters::new(vec![4.0, 0.0], vec![2.0, 3.0], 1.0, 1.0, 10.0).unwrap();
        let root = find_di_star(&l, &params, 1.0)
            .unwrap()
            .finite()
            .expect("finite threshold");
        assert_abs_diff_eq!(root, 6.0, epsilon = 1e-4);
        let (lo, hi) = scan_for_crossing(&l, &params.net_rates(), 4000).expect("crossing");
        assert!(root >= lo * (1.0 - 1e-4) && root <= hi * (1.0 + 1e-4));
    }
}
