//! Limiting objects of the endemic equilibrium for small dispersal:
//! the alpha* weights on low-risk patches, the h_j switch functions on
//! high-risk patches, the J+/J- classification as d_S -> 0, the limiting
//! susceptible profile, and the three d_I -> 0 regimes.

use crate::equilibrium::{solve_auxiliary, EquilibriumError};
use crate::numerics::{
    bisect_monotone, linear_solve, DenseMatrix, Direction, NumericsError,
};
use crate::patch_graph::ConnectivityMatrix;
use crate::reproduction::{dispersal_spectral_bound, DispersalThreshold, RiskPartition};

#[derive(Debug, thiserror::Error)]
pub enum AsymptoticsError {
    #[error("strict risk partition required: ties or an empty risk class present")]
    StrictPartitionRequired,
    #[error("alpha*_{patch} = {value:.6e} escaped (0, alpha_{patch} = {alpha:.6e})")]
    BoxViolation {
        patch: usize,
        value: f64,
        alpha: f64,
    },
    #[error("h_{patch} = {value:.3e} sits inside the +-1e-10 dead band; classification undecidable")]
    DegenerateH { patch: usize, value: f64 },
    #[error("below threshold at this d_I: s = {spectral_bound:.6e} <= 0")]
    SubThreshold { spectral_bound: f64 },
    #[error("numeric classification must keep low-risk patch {patch} in J-")]
    HMinusEscaped { patch: usize },
    #[error("classification produced an empty J-; the limit theorem forbids this")]
    EmptyJMinus,
    #[error("classification produced an empty J+; the limit theorem forbids this")]
    EmptyJPlus,
    #[error("connectivity matrix is not symmetric (max asymmetry {max_asymmetry:.3e})")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("gamma_{0} = 0; the small-d_I regime formulas require positive recovery everywhere")]
    ZeroGamma(usize),
    #[error("ratio limit {0} must be positive")]
    BadRatioLimit(f64),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

fn require_strict(partition: &RiskPartition) -> Result<(), AsymptoticsError> {
    if partition.is_strict() {
        Ok(())
    } else {
        Err(AsymptoticsError::StrictPartitionRequired)
    }
}

/// Solves the low-risk linear system for the alpha* weights: for j in H-,
///   -d_I sum_{k in H-} L_jk I_k - (beta_j - gamma_j) I_j
///     = d_I sum_{k in H+} L_jk alpha_k.
/// The system matrix is a nonsingular M-matrix, so the solution is unique
/// and sits strictly inside (0, alpha_j).
pub fn alpha_star(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    d_i: f64,
    partition: &RiskPartition,
) -> Result<Vec<f64>, AsymptoticsError> {
    require_strict(partition)?;
    let hm = &partition.h_minus;
    let hp = &partition.h_plus;
    let p = hm.len();
    let lm = l.matrix();
    let m = DenseMatrix::from_fn(p, |r, c| {
        let (j, k) = (hm[r], hm[c]);
        if r == c {
            -d_i * lm[(j, j)] - (beta[j] - gamma[j])
        } else {
            -d_i * lm[(j, k)]
        }
    })?;
    let rhs: Vec<f64> = hm
        .iter()
        .map(|&j| d_i * hp.iter().map(|&k| lm[(j, k)] * alpha[k]).sum::<f64>())
        .collect();
    let sol = linear_solve(&m, &rhs)?;
    for (r, &j) in hm.iter().enumerate() {
        if !(sol[r] > 0.0 && sol[r] < alpha[j]) {
            return Err(AsymptoticsError::BoxViolation {
                patch: j,
                value: sol[r],
                alpha: alpha[j],
            });
        }
    }
    Ok(sol)
}

/// The limiting auxiliary vector: alpha* on H-, alpha on H+.
pub fn i_check_zero(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    d_i: f64,
    partition: &RiskPartition,
) -> Result<Vec<f64>, AsymptoticsError> {
    let astar = alpha_star(l, beta, gamma, alpha, d_i, partition)?;
    let mut v = alpha.to_vec();
    for (r, &j) in partition.h_minus.iter().enumerate() {
        v[j] = astar[r];
    }
    Ok(v)
}

/// h_j(d_I) = d_I (L I0)_j + (beta_j - gamma_j) alpha_j for j in H+,
/// evaluated exactly as written with I0 from [`i_check_zero`].
pub fn h_functions(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    d_i: f64,
    partition: &RiskPartition,
) -> Result<Vec<(usize, f64)>, AsymptoticsError> {
    let i0 = i_check_zero(l, beta, gamma, alpha, d_i, partition)?;
    let coupled = l.apply(&i0);
    Ok(partition
        .h_plus
        .iter()
        .map(|&j| (j, d_i * coupled[j] + (beta[j] - gamma[j]) * alpha[j]))
        .collect())
}

/// The two limits of each h_j: at d_I -> 0 it is (beta_j - gamma_j) alpha_j;
/// at d_I -> infinity it is the block-matrix expression
/// -N M^{-1} ((gamma-beta) alpha)|_{H-} + ((beta-gamma) alpha)|_{H+}
/// with M = -L restricted to H- and N the H+ x H- block of L.
#[derive(Debug, Clone)]
pub struct HLimits {
    pub at_zero: Vec<(usize, f64)>,
    pub at_infinity: Vec<(usize, f64)>,
}

pub fn h_limits(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    partition: &RiskPartition,
) -> Result<HLimits, AsymptoticsError> {
    require_strict(partition)?;
    let hm = &partition.h_minus;
    let hp = &partition.h_plus;
    let lm = l.matrix();
    let p = hm.len();
    let at_zero: Vec<(usize, f64)> = hp
        .iter()
        .map(|&j| (j, (beta[j] - gamma[j]) * alpha[j]))
        .collect();
    let m_tilde = DenseMatrix::from_fn(p, |r, c| -lm[(hm[r], hm[c])])?;
    let rhs: Vec<f64> = hm
        .iter()
        .map(|&k| (gamma[k] - beta[k]) * alpha[k])
        .collect();
    let u = linear_solve(&m_tilde, &rhs)?;
    let at_infinity: Vec<(usize, f64)> = hp
        .iter()
        .map(|&j| {
            let coupled: f64 = hm
                .iter()
                .enumerate()
                .map(|(c, &k)| lm[(j, k)] * u[c])
                .sum();
            (j, -coupled + (beta[j] - gamma[j]) * alpha[j])
        })
        .collect();
    Ok(HLimits {
        at_zero,
        at_infinity,
    })
}

/// Smallest root of the h_j over H+, when one exists at or below d_I*.
///
/// Each h_j is either constant or strictly decreasing, so a root exists for
/// exactly those j whose limit at infinity is negative; it is bisected to
/// |h_j(root)| ~ 1e-12. Returns None when every h_j stays positive up to
/// d_I* (including the case where no h_j ever crosses).
pub fn find_di_star_star(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    partition: &RiskPartition,
    di_star: DispersalThreshold,
) -> Result<Option<f64>, AsymptoticsError> {
    require_strict(partition)?;
    let limits = h_limits(l, beta, gamma, alpha, partition)?;
    let h_at = |j: usize, d_i: f64| -> Result<f64, AsymptoticsError> {
        let hs = h_functions(l, beta, gamma, alpha, d_i, partition)?;
        Ok(hs
            .iter()
            .find(|(p, _)| *p == j)
            .expect("patch is in H+")
            .1)
    };

    let mut best: Option<f64> = None;
    for (idx, &(j, linf)) in limits.at_infinity.iter().enumerate() {
        let l0 = limits.at_zero[idx].1;
        if !(linf < 0.0 && l0 > 0.0) {
            continue;
        }
        // bracket the sign change of the decreasing h_j
        let mut lo = 1.0;
        let mut hi = 1.0;
        let mut tries = 0;
        while h_at(j, lo)? <= 0.0 {
            lo *= 0.25;
            tries += 1;
            if tries > 200 {
                break;
            }
        }
        if h_at(j, lo)? <= 0.0 {
            continue;
        }
        tries = 0;
        let mut bracketed = true;
        while h_at(j, hi)? >= 0.0 {
            hi *= 2.0;
            tries += 1;
            if tries > 200 {
                bracketed = false;
                break;
            }
        }
        if !bracketed {
            continue;
        }
        let err_cell = std::cell::RefCell::new(None);
        let g = |x: f64| match h_at(j, x.exp()) {
            Ok(v) => v,
            Err(e) => {
                *err_cell.borrow_mut() = Some(e);
                f64::NAN
            }
        };
        let root = bisect_monotone(g, lo.ln(), hi.ln(), 1e-13, Direction::Decreasing);
        if let Some(e) = err_cell.into_inner() {
            return Err(e);
        }
        let root = root.map_err(AsymptoticsError::Numerics)?.exp();
        best = Some(match best {
            Some(b) => b.min(root),
            None => root,
        });
    }

    Ok(match (best, di_star) {
        (None, _) => None,
        (Some(r), DispersalThreshold::Infinite) => Some(r),
        (Some(r), DispersalThreshold::Finite(star)) => {
            // d_I* carries a 1e-6 relative tolerance of its own; a root at
            // the threshold itself (possible, the corollary allows
            // d_I** = d_I*) must not be lost to that noise
            if r <= star * (1.0 + 1e-5) {
                Some(r.min(star))
            } else {
                None
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassificationMethod {
    /// Every h_j > 0: J+ = H+ and J- = H- by the limit theorem.
    AnalyticCaseII,
    /// Some h_j < 0: J's read off from the d_S -> 0 extrapolation of the
    /// auxiliary solution.
    NumericExtrapolation,
}

/// J+/J- split of the patches as d_S -> 0, with the limiting gaps
/// alpha_j - I*_j (exactly 0 on J+) that feed the susceptible profile.
#[derive(Debug, Clone)]
pub struct Classification {
    pub j_plus: Vec<usize>,
    pub j_minus: Vec<usize>,
    pub method: ClassificationMethod,
    pub limit_gaps: Vec<f64>,
}

const H_DEAD_BAND: f64 = 1e-10;
const EXTRAPOLATION_DS: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
const JPLUS_GAP_FRACTION: f64 = 1e-4;

pub fn classify_j(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    d_i: f64,
    partition: &RiskPartition,
) -> Result<Classification, AsymptoticsError> {
    require_strict(partition)?;
    let net: Vec<f64> = beta.iter().zip(gamma).map(|(&b, &g)| b - g).collect();
    let bound = dispersal_spectral_bound(l, d_i, &net)?;
    if bound <= 0.0 {
        return Err(AsymptoticsError::SubThreshold {
            spectral_bound: bound,
        });
    }

    let hs = h_functions(l, beta, gamma, alpha, d_i, partition)?;
    if let Some(&(patch, value)) = hs.iter().find(|(_, v)| v.abs() <= H_DEAD_BAND) {
        return Err(AsymptoticsError::DegenerateH { patch, value });
    }

    let n = l.n();
    if hs.iter().all(|&(_, v)| v > H_DEAD_BAND) {
        // analytic case: gaps are alpha - alpha* on H-, zero on H+
        let astar = alpha_star(l, beta, gamma, alpha, d_i, partition)?;
        let mut gaps = vec![0.0; n];
        for (r, &j) in partition.h_minus.iter().enumerate() {
            gaps[j] = alpha[j] - astar[r];
        }
        return Ok(Classification {
            j_plus: partition.h_plus.clone(),
            j_minus: partition.h_minus.clone(),
            method: ClassificationMethod::AnalyticCaseII,
            limit_gaps: gaps,
        });
    }

    classify_j_numeric(l, beta, gamma, alpha, d_i, partition)
}

/// The extrapolation route alone: solve the auxiliary system down the d_S
/// schedule and read each patch's limit off the gap alpha_j - I_j. Reached
/// from [`classify_j`] when some h_j < 0; public so that the analytic and
/// numeric routes can be cross-checked against each other.
pub fn classify_j_numeric(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    d_i: f64,
    partition: &RiskPartition,
) -> Result<Classification, AsymptoticsError> {
    require_strict(partition)?;
    let n = l.n();
    let mut gaps_by_ds = Vec::with_capacity(EXTRAPOLATION_DS.len());
    for &d_s in &EXTRAPOLATION_DS {
        let aux = solve_auxiliary(l, beta, gamma, alpha, d_i, d_i / d_s)?;
        gaps_by_ds.push(aux.susceptible_share);
    }
    let last = gaps_by_ds.len() - 1;
    let mut j_plus = Vec::new();
    let mut j_minus = Vec::new();
    let mut gaps = vec![0.0; n];
    for j in 0..n {
        let final_gap = gaps_by_ds[last][j];
        let shrinking = gaps_by_ds[last][j] <= 0.5 * gaps_by_ds[last - 1][j]
            && gaps_by_ds[last - 1][j] <= 0.5 * gaps_by_ds[last - 2][j];
        if final_gap < JPLUS_GAP_FRACTION * alpha[j] && shrinking {
            j_plus.push(j);
        } else {
            j_minus.push(j);
            gaps[j] = final_gap;
        }
    }

    for &j in &partition.h_minus {
        if j_plus.contains(&j) {
            return Err(AsymptoticsError::HMinusEscaped { patch: j });
        }
    }
    if j_minus.is_empty() {
        return Err(AsymptoticsError::EmptyJMinus);
    }
    if j_plus.is_empty() {
        return Err(AsymptoticsError::EmptyJPlus);
    }
    Ok(Classification {
        j_plus,
        j_minus,
        method: ClassificationMethod::NumericExtrapolation,
        limit_gaps: gaps,
    })
}

/// Limiting susceptible distribution as d_S -> 0: proportional to the gaps
/// alpha_j - I*_j on J-, zero on J+, normalized to the total population.
pub fn limiting_s_profile(
    classification: &Classification,
    population: f64,
) -> Result<Vec<f64>, AsymptoticsError> {
    if classification.j_minus.is_empty() {
        return Err(AsymptoticsError::EmptyJMinus);
    }
    let denom: f64 = classification
        .j_minus
        .iter()
        .map(|&j| classification.limit_gaps[j])
        .sum();
    if !(denom > 0.0) {
        return Err(AsymptoticsError::EmptyJMinus);
    }
    Ok(classification
        .limit_gaps
        .iter()
        .map(|&g| population * g / denom)
        .collect())
}

/// Target of d = d_I / d_S in the joint small-d_I limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioLimit {
    Zero,
    Finite(f64),
    Infinite,
}

/// The three d_I -> 0 regimes of (S, I), by formula arithmetic alone.
/// Requires positive recovery on every patch; the infinite-ratio regime
/// additionally needs a nonempty low-risk class.
pub fn di_to_zero_profiles(
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    population: f64,
    d0: RatioLimit,
    partition: &RiskPartition,
) -> Result<(Vec<f64>, Vec<f64>), AsymptoticsError> {
    if let Some(j) = gamma.iter().position(|&g| !(g > 0.0)) {
        return Err(AsymptoticsError::ZeroGamma(j));
    }
    let n = alpha.len();
    let plus = |x: f64| x.max(0.0);
    match d0 {
        RatioLimit::Zero => {
            let w: Vec<f64> = (0..n)
                .map(|j| alpha[j] * plus(beta[j] - gamma[j]) / gamma[j])
                .collect();
            let denom: f64 = (0..n).map(|j| alpha[j] + w[j]).sum();
            let s = alpha
                .iter()
                .map(|&a| population * a / denom)
                .collect();
            let i = w.iter().map(|&x| population * x / denom).collect();
            Ok((s, i))
        }
        RatioLimit::Finite(d0) => {
            if !(d0 > 0.0) || !d0.is_finite() {
                return Err(AsymptoticsError::BadRatioLimit(d0));
            }
            let w: Vec<f64> = (0..n)
                .map(|j| {
                    alpha[j] * plus(beta[j] - gamma[j])
                        / (d0 * plus(beta[j] - gamma[j]) + gamma[j])
                })
                .collect();
            let denom: f64 = (0..n).map(|j| alpha[j] + (1.0 - d0) * w[j]).sum();
            let s = (0..n)
                .map(|j| population * (alpha[j] - d0 * w[j]) / denom)
                .collect();
            let i = w.iter().map(|&x| population * x / denom).collect();
            Ok((s, i))
        }
        RatioLimit::Infinite => {
            if partition.h_minus.is_empty() {
                return Err(AsymptoticsError::StrictPartitionRequired);
            }
            let denom: f64 = partition.h_minus.iter().map(|&j| alpha[j]).sum();
            let mut s = vec![0.0; n];
            for &j in &partition.h_minus {
                s[j] = population * alpha[j] / denom;
            }
            Ok((s, vec![0.0; n]))
        }
    }
}

/// The symmetric-connectivity lower bound on d_I**, evaluated verbatim:
/// [max_{k in H+} Lk-/(beta_k-gamma_k) + max_{k in H-} Lk+/(beta_k-gamma_k)]^{-1}.
/// The H- term is nonpositive; a nonpositive sum makes the bound vacuous
/// (negative) or certifies h_j > 0 for every d_I (+infinity on a zero sum).
pub fn symmetric_lower_bound(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    partition: &RiskPartition,
) -> Result<f64, AsymptoticsError> {
    require_strict(partition)?;
    let n = l.n();
    let lm = l.matrix();
    let mut max_asym = 0.0f64;
    for j in 0..n {
        for k in j + 1..n {
            max_asym = max_asym.max((lm[(j, k)] - lm[(k, j)]).abs());
        }
    }
    if max_asym > 1e-12 {
        return Err(AsymptoticsError::NotSymmetric {
            max_asymmetry: max_asym,
        });
    }
    let class_sum = |k: usize, class: &[usize]| -> f64 {
        class
            .iter()
            .filter(|&&j| j != k)
            .map(|&j| lm[(k, j)])
            .sum()
    };
    let term_plus = partition
        .h_plus
        .iter()
        .map(|&k| class_sum(k, &partition.h_minus) / (beta[k] - gamma[k]))
        .fold(f64::NEG_INFINITY, f64::max);
    let term_minus = partition
        .h_minus
        .iter()
        .map(|&k| class_sum(k, &partition.h_plus) / (beta[k] - gamma[k]))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(1.0 / (term_plus + term_minus))
}

/// Everything the d_S -> 0 profile of one d_I needs, in one bundle.
#[derive(Debug, Clone)]
pub struct AsymptoticProfile {
    pub alpha_star: Vec<(usize, f64)>,
    pub i_check_zero: Vec<f64>,
    pub h_values: Vec<(usize, f64)>,
    pub j_plus: Vec<usize>,
    pub j_minus: Vec<usize>,
    pub s_star: Vec<f64>,
    pub di_used: f64,
    pub method: ClassificationMethod,
}

pub fn asymptotic_profile(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    d_i: f64,
    partition: &RiskPartition,
    population: f64,
) -> Result<AsymptoticProfile, AsymptoticsError> {
    let astar = alpha_star(l, beta, gamma, alpha, d_i, partition)?;
    let i0 = i_check_zero(l, beta, gamma, alpha, d_i, partition)?;
    let h_values = h_functions(l, beta, gamma, alpha, d_i, partition)?;
    let class = classify_j(l, beta, gamma, alpha, d_i, partition)?;
    let s_star = limiting_s_profile(&class, population)?;
    Ok(AsymptoticProfile {
        alpha_star: partition
            .h_minus
            .iter()
            .cloned()
            .zip(astar)
            .collect(),
        i_check_zero: i0,
        h_values,
        j_plus: class.j_plus,
        j_minus: class.j_minus,
        s_star,
        di_used: d_i,
        method: class.method,
    })
}

/// The two dispersal thresholds plus the symmetric lower bound when the
/// connectivity is symmetric.
#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub di_star: DispersalThreshold,
    pub di_star_star: Option<f64>,
    pub symmetric_lower_bound: Option<f64>,
}

pub fn threshold_report(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    partition: &RiskPartition,
    di_star: DispersalThreshold,
) -> Result<ThresholdReport, AsymptoticsError> {
    let di_star_star = find_di_star_star(l, beta, gamma, alpha, partition, di_star)?;
    let symmetric_lower_bound = if l.is_symmetric(1e-12) {
        Some(symmetric_lower_bound(l, beta, gamma, partition)?)
    } else {
        None
    };
    Ok(ThresholdReport {
        di_star,
        di_star_star,
        symmetric_lower_bound,
    })
}
