//! The auxiliary fixed-point system behind the endemic equilibrium, the
//! recovery of (S, I, kappa) from its solution, and the rescaled U-system
//! used for the small-d_I analysis.
//!
//! Both nonlinear systems are solved by the same two-phase scheme: monotone
//! relaxation (the induced cooperative flow converges to the unique positive
//! fixed point from any nonzero box point) down to field max-norm 1e-6,
//! followed by damped Newton polish. Newton alone is not safe here: started
//! outside the basin it falls into the trivial zero solution.
//!
//! Internally the auxiliary system is solved in the complement coordinates
//! e_j = alpha_j - I_j. At large d = d_I/d_S the solution pins I_j within
//! ~alpha_j/d of alpha_j, and forming alpha_j - I_j from stored I_j loses
//! exactly the digits the incidence denominator d(alpha_j - I_j) + I_j
//! needs; storing the complement keeps the evaluation cancellation-free.

use crate::numerics::{
    integrate_ode_guarded, linear_solve, max_norm, DenseMatrix, NumericsError, OdeControls,
};
use crate::patch_graph::ConnectivityMatrix;
use crate::reproduction::{dispersal_spectral_bound, EpidemicParameters};
use crate::simulator;

#[derive(Debug, thiserror::Error)]
pub enum EquilibriumError {
    #[error("input dimension {found} does not match the {expected}-patch network")]
    WrongDimension { expected: usize, found: usize },
    #[error("dispersal ratio d = {0} is outside the admissible range")]
    BadRatio(f64),
    #[error("recovery rates are all zero; the invariant box has no a-priori bound")]
    AllGammaZero,
    #[error(
        "below threshold: s(d_I L + diag(beta - gamma)) = {spectral_bound:.6e} <= 0, \
         no nontrivial solution exists"
    )]
    SubThreshold { spectral_bound: f64 },
    #[error("solver did not converge (residual {residual:.3e})")]
    NoConvergence { residual: f64 },
    #[error("iterate left the box 0 < I_j < alpha_j at patch {patch} (value {value:.6e}, alpha {alpha:.6e})")]
    LeftBox {
        patch: usize,
        value: f64,
        alpha: f64,
    },
    #[error("auxiliary solution is not converged")]
    NotConverged,
    #[error("auxiliary ratio {actual} does not match d_I/d_S = {expected}")]
    InconsistentRatio { expected: f64, actual: f64 },
    #[error("steady-state residual {residual:.3e} exceeds tolerance")]
    ResidualTooLarge { residual: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Nontrivial solution of the auxiliary system at ratio d = d_I/d_S.
///
/// `i_check` are dimensionless weights with 0 < i_check_j < alpha_j;
/// `susceptible_share` is alpha - i_check (that is d_S * S_check), kept
/// separately so equilibrium recovery at extreme ratios keeps full
/// precision. `residual` is the max-norm of the auxiliary field.
#[derive(Debug, Clone)]
pub struct AuxiliarySolution {
    pub i_check: Vec<f64>,
    pub susceptible_share: Vec<f64>,
    pub d: f64,
    pub residual: f64,
    pub converged: bool,
}

/// Endemic equilibrium in individuals, plus the scaling constant kappa and
/// the steady-state residual of the full patch system.
#[derive(Debug, Clone)]
pub struct EndemicEquilibrium {
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub kappa: f64,
    pub residual: f64,
}

/// Strongly positive solution of the rescaled U-system for d in [0, 1).
#[derive(Debug, Clone)]
pub struct USystemSolution {
    pub u_check: Vec<f64>,
    pub d: f64,
    pub residual: f64,
    pub converged: bool,
}

const RELAX_EXIT: f64 = 1e-6;
const NEWTON_TARGET: f64 = 1e-12;
const NEWTON_STEPS: usize = 50;
const ACCEPT_RESIDUAL: f64 = 1e-10;
const DENOMINATOR_FLOOR: f64 = 1e-14;

struct TwoPhaseProblem<'a> {
    /// Field g(x) of the relaxation flow dx/dt = g(x).
    field: &'a dyn Fn(&[f64], &mut [f64]),
    /// Jacobian of g at x.
    jacobian: &'a dyn Fn(&[f64]) -> DenseMatrix,
    /// Admissible region for accepted iterates.
    in_box: &'a dyn Fn(&[f64]) -> bool,
    /// Denominator floor violation on an accepted state.
    denominator_ok: &'a dyn Fn(&[f64]) -> bool,
}

/// Damped Newton on g(x) = 0 from `x`; trials must stay in the box and
/// strictly decrease the residual. Returns the best point reached and its
/// residual (which may be far from zero if the iteration stalled).
fn newton_polish(
    problem: &TwoPhaseProblem,
    mut x: Vec<f64>,
    mut res: f64,
) -> Result<(Vec<f64>, f64), EquilibriumError> {
    let n = x.len();
    let mut scratch = vec![0.0; n];
    for _ in 0..NEWTON_STEPS {
        if res <= NEWTON_TARGET {
            break;
        }
        if !(problem.denominator_ok)(&x) {
            return Err(EquilibriumError::NoConvergence { residual: res });
        }
        let jac = (problem.jacobian)(&x);
        (problem.field)(&x, &mut scratch);
        let delta = match linear_solve(&jac, &scratch) {
            Ok(d) => d,
            Err(NumericsError::Singular { .. }) => break,
            Err(e) => return Err(e.into()),
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = (0..n).map(|j| x[j] - lambda * delta[j]).collect();
            if (problem.in_box)(&trial) {
                let mut g = vec![0.0; n];
                (problem.field)(&trial, &mut g);
                let r = max_norm(&g);
                if r < res {
                    x = trial;
                    res = r;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break; // stalled at the evaluation noise floor
        }
    }
    Ok((x, res))
}

/// A candidate fixed point is accepted only if its residual is at target
/// and the relaxation flow is linearly stable there: the Jacobian of the
/// flow has negative spectral bound at the unique interior equilibrium,
/// while at the trivial boundary root it equals the (positive) threshold
/// quantity, so this check cannot confuse the two.
fn stably_converged(problem: &TwoPhaseProblem, x: &[f64], res: f64) -> bool {
    if res > ACCEPT_RESIDUAL || !(problem.in_box)(x) {
        return false;
    }
    match crate::numerics::spectral_bound(&(problem.jacobian)(x)) {
        Ok(r) => r.value < 0.0,
        Err(_) => false,
    }
}

/// Monotone relaxation toward the unique interior fixed point, then damped
/// Newton. The relaxation runs in accepted-step chunks; after each chunk a
/// Newton attempt is made and kept only if it verifiably lands on the
/// stable interior root. At moderate stiffness the field norm reaches
/// `RELAX_EXIT` inside the first chunks and the plain relax-then-polish
/// path is taken; at extreme d = d_I/d_S the fast component is slaved
/// within a thin layer and pins the explicit step, and the verified Newton
/// attempts supply the tail convergence the flow would take ~d steps to
/// deliver.
fn two_phase_solve(
    problem: &TwoPhaseProblem,
    start: Vec<f64>,
    base_step: f64,
) -> Result<(Vec<f64>, f64), EquilibriumError> {
    let n = start.len();
    let mut scratch = vec![0.0; n];
    let mut x = start;
    (problem.field)(&x, &mut scratch);
    let mut res = max_norm(&scratch);

    let mut total_steps: u64 = 0;
    let mut chunk: u64 = 1024;
    const TOTAL_STEP_BUDGET: u64 = 4_000_000;

    while res > RELAX_EXIT {
        if total_steps > 0 {
            let (cand, cand_res) = newton_polish(problem, x.clone(), res)?;
            if stably_converged(problem, &cand, cand_res) {
                return Ok((cand, cand_res));
            }
        }
        if total_steps >= TOTAL_STEP_BUDGET {
            return Err(EquilibriumError::NoConvergence { residual: res });
        }

        let controls = OdeControls {
            step: base_step,
            error_tol: 1e-8,
            min_step: 1e-12,
            max_steps: chunk,
        };
        let mut floor_hit = false;
        let mut predicate = |_t: f64, y: &[f64]| {
            if !(problem.denominator_ok)(y) {
                floor_hit = true;
                return true;
            }
            let mut g = vec![0.0; y.len()];
            (problem.field)(y, &mut g);
            max_norm(&g) <= RELAX_EXIT
        };
        // the box is an invariant region of the flow; guarded steps cannot
        // jump across the boundary layer at extreme ratios
        let mut guard = |y: &[f64]| (problem.in_box)(y);
        let relaxed = integrate_ode_guarded(
            |_t, y, dy| (problem.field)(y, dy),
            &x,
            0.0,
            1e5,
            &controls,
            Some(&mut guard),
            Some(&mut predicate),
        )
        .map_err(|e| match e {
            NumericsError::NoConvergence { residual, .. } => {
                EquilibriumError::NoConvergence { residual }
            }
            other => EquilibriumError::Numerics(other),
        })?;
        if floor_hit {
            return Err(EquilibriumError::NoConvergence { residual: res });
        }
        total_steps += relaxed.steps.max(1);
        x = relaxed.y;
        (problem.field)(&x, &mut scratch);
        res = max_norm(&scratch);
        if !relaxed.early_exit && !relaxed.reached_step_cap {
            // the time horizon ran out before the field settled
            if res > RELAX_EXIT {
                return Err(EquilibriumError::NoConvergence { residual: res });
            }
        }
        chunk = (chunk * 2).min(262_144);
    }

    newton_polish(problem, x, res)
}

fn check_lengths(
    l: &ConnectivityMatrix,
    slices: &[&[f64]],
) -> Result<usize, EquilibriumError> {
    let n = l.n();
    for s in slices {
        if s.len() != n {
            return Err(EquilibriumError::WrongDimension {
                expected: n,
                found: s.len(),
            });
        }
    }
    Ok(n)
}

/// A conservative initial step for the relaxation flow, sized against the
/// fastest local rate so the error controller starts near the stable range.
fn relaxation_step(l: &ConnectivityMatrix, d_i: f64, beta: &[f64], gamma: &[f64]) -> f64 {
    let coupling = d_i * l.matrix().max_abs_diagonal();
    let local = beta
        .iter()
        .zip(gamma)
        .map(|(&b, &g)| b.abs() + g.abs())
        .fold(0.0f64, f64::max);
    (0.2 / (1.0 + coupling + local)).min(0.1)
}

/// Solves the auxiliary system for I_check at ratio d = d_I/d_S, starting
/// the relaxation from 1e-3 * alpha.
pub fn solve_auxiliary(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    d_i: f64,
    d: f64,
) -> Result<AuxiliarySolution, EquilibriumError> {
    let start: Vec<f64> = alpha.iter().map(|&a| 1e-3 * a).collect();
    solve_auxiliary_from(l, beta, gamma, alpha, d_i, d, &start)
}

/// Same as [`solve_auxiliary`] with a caller-chosen starting point in the
/// open box (used to exercise uniqueness).
pub fn solve_auxiliary_from(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    d_i: f64,
    d: f64,
    start_i: &[f64],
) -> Result<AuxiliarySolution, EquilibriumError> {
    let n = check_lengths(l, &[beta, gamma, alpha, start_i])?;
    if !(d > 0.0) || !d.is_finite() {
        return Err(EquilibriumError::BadRatio(d));
    }
    let net: Vec<f64> = beta.iter().zip(gamma).map(|(&b, &g)| b - g).collect();
    let bound = dispersal_spectral_bound(l, d_i, &net)?;
    if bound <= 0.0 {
        return Err(EquilibriumError::SubThreshold {
            spectral_bound: bound,
        });
    }
    for j in 0..n {
        if !(start_i[j] > 0.0 && start_i[j] < alpha[j]) {
            return Err(EquilibriumError::LeftBox {
                patch: j,
                value: start_i[j],
                alpha: alpha[j],
            });
        }
    }

    // complement coordinates: e = alpha - I, relaxation flow de/dt = -g
    let lm = l.matrix();
    let eval = move |e: &[f64], out: &mut [f64]| {
        for j in 0..n {
            let mut coupling = 0.0;
            for k in 0..n {
                coupling += lm[(j, k)] * (alpha[k] - e[k]);
            }
            let i = alpha[j] - e[j];
            let den = d * e[j] + i;
            out[j] = -(d_i * coupling + i * (beta[j] - gamma[j]) - beta[j] * i * i / den);
        }
    };
    let fprime = move |e: &[f64], j: usize| {
        let i = alpha[j] - e[j];
        let den = d * e[j] + i;
        (beta[j] - gamma[j]) - beta[j] * (2.0 * i * den - i * i * (1.0 - d)) / (den * den)
    };
    let jacobian = move |e: &[f64]| {
        // d(-g)/de = d_I L + diag(f')
        let mut m = lm.scaled(d_i);
        for j in 0..n {
            m[(j, j)] += fprime(e, j);
        }
        m
    };
    let in_box = move |e: &[f64]| (0..n).all(|j| e[j] > 0.0 && e[j] < alpha[j]);
    let den_ok = move |e: &[f64]| {
        (0..n).all(|j| d * e[j] + (alpha[j] - e[j]) >= DENOMINATOR_FLOOR)
    };
    let problem = TwoPhaseProblem {
        field: &eval,
        jacobian: &jacobian,
        in_box: &in_box,
        denominator_ok: &den_ok,
    };
    let start_e: Vec<f64> = alpha.iter().zip(start_i).map(|(&a, &i)| a - i).collect();
    let step = relaxation_step(l, d_i, beta, gamma);
    let (e, residual) = two_phase_solve(&problem, start_e, step)?;

    if residual > ACCEPT_RESIDUAL {
        return Err(EquilibriumError::NoConvergence { residual });
    }
    // the invariant is asserted, never enforced by clamping
    for j in 0..n {
        let i = alpha[j] - e[j];
        if i <= -1e-12 || e[j] <= -1e-12 {
            return Err(EquilibriumError::LeftBox {
                patch: j,
                value: i,
                alpha: alpha[j],
            });
        }
    }
    let i_check: Vec<f64> = alpha.iter().zip(&e).map(|(&a, &ej)| a - ej).collect();
    Ok(AuxiliarySolution {
        i_check,
        susceptible_share: e,
        d,
        residual,
        converged: true,
    })
}

/// Convenience wrapper taking the ratio from the parameter set.
pub fn solve_auxiliary_for(
    l: &ConnectivityMatrix,
    params: &EpidemicParameters,
    alpha: &[f64],
) -> Result<AuxiliarySolution, EquilibriumError> {
    solve_auxiliary(
        l,
        &params.beta,
        &params.gamma,
        alpha,
        params.d_i,
        params.d_i / params.d_s,
    )
}

/// Recovers the endemic equilibrium (S, I, kappa) from an auxiliary
/// solution: S_check = (alpha - I_check)/d_S, kappa normalizes the total to
/// the conserved population, S = kappa S_check, I = kappa I_check / d_I.
pub fn recover_equilibrium(
    aux: &AuxiliarySolution,
    l: &ConnectivityMatrix,
    params: &EpidemicParameters,
    alpha: &[f64],
) -> Result<EndemicEquilibrium, EquilibriumError> {
    let n = check_lengths(l, &[&params.beta, &params.gamma, alpha, &aux.i_check])?;
    if !aux.converged {
        return Err(EquilibriumError::NotConverged);
    }
    let expected = params.d_i / params.d_s;
    if (aux.d - expected).abs() > 1e-12 * expected.max(aux.d) {
        return Err(EquilibriumError::InconsistentRatio {
            expected,
            actual: aux.d,
        });
    }
    let s_check: Vec<f64> = aux
        .susceptible_share
        .iter()
        .map(|&e| e / params.d_s)
        .collect();
    let denom: f64 = (0..n)
        .map(|j| params.d_i * s_check[j] + aux.i_check[j])
        .sum();
    let kappa = params.d_i * params.population / denom;
    let s: Vec<f64> = s_check.iter().map(|&v| kappa * v).collect();
    let i: Vec<f64> = aux.i_check.iter().map(|&v| kappa * v / params.d_i).collect();

    // verify the claimed invariants before returning
    let total: f64 = s.iter().chain(&i).sum();
    if (total - params.population).abs() > 1e-9 * params.population {
        return Err(EquilibriumError::ResidualTooLarge {
            residual: (total - params.population).abs(),
        });
    }
    let residual = simulator::steady_state_residual(l, params, &s, &i);
    if residual > 1e-9 {
        return Err(EquilibriumError::ResidualTooLarge { residual });
    }
    for j in 0..n {
        let lhs = params.d_s * s[j] + params.d_i * i[j];
        let rhs = kappa * alpha[j];
        if (lhs - rhs).abs() > 1e-9 * rhs.abs().max(1.0) {
            return Err(EquilibriumError::ResidualTooLarge {
                residual: (lhs - rhs).abs(),
            });
        }
    }
    Ok(EndemicEquilibrium {
        s,
        i,
        kappa,
        residual,
    })
}

/// One-call endemic equilibrium for a parameter set.
pub fn endemic_equilibrium(
    l: &ConnectivityMatrix,
    params: &EpidemicParameters,
    alpha: &[f64],
) -> Result<EndemicEquilibrium, EquilibriumError> {
    let aux = solve_auxiliary_for(l, params, alpha)?;
    recover_equilibrium(&aux, l, params, alpha)
}

/// Solves the U-system for d in [0, 1) on the invariant region
/// 0 <= U_j <= M alpha_j, with M grown from the a-priori bound until the
/// region is invariant.
pub fn solve_u_system(
    l: &ConnectivityMatrix,
    beta: &[f64],
    gamma: &[f64],
    alpha: &[f64],
    d_i: f64,
    d: f64,
) -> Result<USystemSolution, EquilibriumError> {
    let n = check_lengths(l, &[beta, gamma, alpha])?;
    if !(0.0..1.0).contains(&d) {
        return Err(EquilibriumError::BadRatio(d));
    }
    let net: Vec<f64> = beta.iter().zip(gamma).map(|(&b, &g)| b - g).collect();
    let bound = dispersal_spectral_bound(l, d_i, &net)?;
    if bound <= 0.0 {
        return Err(EquilibriumError::SubThreshold {
            spectral_bound: bound,
        });
    }
    let min_pos_gamma = gamma
        .iter()
        .filter(|&&g| g > 0.0)
        .fold(f64::INFINITY, |a, &g| a.min(g));
    if !min_pos_gamma.is_finite() {
        return Err(EquilibriumError::AllGammaZero);
    }
    let excess = net.iter().fold(0.0f64, |a, &x| a.max(x));
    let mut m_bound = 1.0 + excess.max(0.0) / min_pos_gamma;
    // grow M until the box face points inward: beta - gamma < beta*M/(1+(1-d)M)
    for _ in 0..64 {
        let invariant = (0..n).all(|j| {
            let face = beta[j] * m_bound / (1.0 + (1.0 - d) * m_bound);
            net[j] < face || (beta[j] == 0.0 && gamma[j] == 0.0)
        });
        if invariant {
            break;
        }
        m_bound *= 2.0;
    }

    let lm = l.matrix();
    let eval = move |u: &[f64], out: &mut [f64]| {
        for j in 0..n {
            let mut coupling = 0.0;
            for k in 0..n {
                coupling += lm[(j, k)] * u[k];
            }
            let den = alpha[j] + (1.0 - d) * u[j];
            out[j] = d_i * coupling + u[j] * (beta[j] - gamma[j] - beta[j] * u[j] / den);
        }
    };
    let jacobian = move |u: &[f64]| {
        let mut m = lm.scaled(d_i);
        for j in 0..n {
            let den = alpha[j] + (1.0 - d) * u[j];
            let fp = (beta[j] - gamma[j])
                - beta[j] * (2.0 * u[j] * den - u[j] * u[j] * (1.0 - d)) / (den * den);
            m[(j, j)] += fp;
        }
        m
    };
    let in_box = move |u: &[f64]| (0..n).all(|j| u[j] > 0.0 && u[j] <= m_bound * alpha[j]);
    let den_ok = move |u: &[f64]| {
        (0..n).all(|j| alpha[j] + (1.0 - d) * u[j] >= DENOMINATOR_FLOOR)
    };
    let problem = TwoPhaseProblem {
        field: &eval,
        jacobian: &jacobian,
        in_box: &in_box,
        denominator_ok: &den_ok,
    };
    let start: Vec<f64> = alpha.iter().map(|&a| 1e-3 * a).collect();
    let step = relaxation_step(l, d_i, beta, gamma);
    let (u, residual) = two_phase_solve(&problem, start, step)?;
    if residual > ACCEPT_RESIDUAL {
        return Err(EquilibriumError::NoConvergence { residual });
    }
    for j in 0..n {
        if u[j] <= 0.0 {
            return Err(EquilibriumError::LeftBox {
                patch: j,
                value: u[j],
                alpha: alpha[j],
            });
        }
    }
    Ok(USystemSolution {
        u_check: u,
        d,
        residual,
        converged: true,
    })
}
