//! Time integration of the full 2n-dimensional SIS patch system.
//!
//! State layout is [S_1..S_n, I_1..I_n]. The standard-incidence term
//! beta S I / (S + I) is extended by 0 at an empty patch (the unique
//! continuous extension; it is bounded by beta * min(S, I)).

use crate::numerics::{integrate_ode, max_norm, NumericsError, OdeControls};
use crate::patch_graph::ConnectivityMatrix;
use crate::reproduction::EpidemicParameters;

#[derive(Debug, thiserror::Error)]
pub enum SimulationError {
    #[error("state dimension {found} does not match the {expected}-patch network")]
    WrongDimension { expected: usize, found: usize },
    #[error("initial state component {index} is negative ({value})")]
    NegativeInitial { index: usize, value: f64 },
    #[error("initial total population must be positive")]
    ZeroPopulation,
    #[error("component {index} dropped to {value:.3e} at t = {t:.6}; integrator positivity failure")]
    NegativeState { t: f64, index: usize, value: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone)]
pub struct SimulationState {
    pub t: f64,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
}

impl SimulationState {
    pub fn total(&self) -> f64 {
        self.s.iter().chain(&self.i).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// States sampled at the configured stride, starting at t = 0.
    pub samples: Vec<SimulationState>,
    pub converged: bool,
    /// Field max-norm at the terminal state.
    pub final_field_norm: f64,
}

impl Trajectory {
    pub fn terminal(&self) -> &SimulationState {
        self.samples.last().expect("trajectory has samples")
    }
}

/// Right-hand side of the patch system, written into `dy`.
pub fn sis_field(
    l: &ConnectivityMatrix,
    params: &EpidemicParameters,
    y: &[f64],
    dy: &mut [f64],
) {
    let n = l.n();
    let (s, i) = y.split_at(n);
    let m = l.matrix();
    for j in 0..n {
        let row = m.row(j);
        let mut disp_s = 0.0;
        let mut disp_i = 0.0;
        for k in 0..n {
            disp_s += row[k] * s[k];
            disp_i += row[k] * i[k];
        }
        let pool = s[j] + i[j];
        let incidence = if pool <= 1e-300 {
            0.0
        } else {
            params.beta[j] * s[j] * i[j] / pool
        };
        let recovery = params.gamma[j] * i[j];
        dy[j] = params.d_s * disp_s - incidence + recovery;
        dy[n + j] = params.d_i * disp_i + incidence - recovery;
    }
}

/// Max-norm of the steady-state equations at (s, i).
pub fn steady_state_residual(
    l: &ConnectivityMatrix,
    params: &EpidemicParameters,
    s: &[f64],
    i: &[f64],
) -> f64 {
    let n = l.n();
    let mut y = Vec::with_capacity(2 * n);
    y.extend_from_slice(s);
    y.extend_from_slice(i);
    let mut dy = vec![0.0; 2 * n];
    sis_field(l, params, &y, &mut dy);
    max_norm(&dy)
}

/// The disease-free state (alpha N, 0).
pub fn disease_free_state(alpha: &[f64], population: f64) -> (Vec<f64>, Vec<f64>) {
    (
        alpha.iter().map(|&a| a * population).collect(),
        vec![0.0; alpha.len()],
    )
}

/// Integrates the patch system from (s0, i0), sampling every `stride` time
/// units. Reports convergence when the field max-norm at a sample falls
/// below 1e-8 and stops early in that case.
pub fn simulate(
    l: &ConnectivityMatrix,
    params: &EpidemicParameters,
    s0: &[f64],
    i0: &[f64],
    t_end: f64,
    stride: f64,
) -> Result<Trajectory, SimulationError> {
    let n = l.n();
    if s0.len() != n || i0.len() != n || params.n() != n {
        return Err(SimulationError::WrongDimension {
            expected: n,
            found: s0.len().max(i0.len()).max(params.n()),
        });
    }
    for (index, &v) in s0.iter().chain(i0).enumerate() {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(SimulationError::NegativeInitial { index, value: v });
        }
    }
    let total0: f64 = s0.iter().chain(i0).sum();
    if !(total0 > 0.0) {
        return Err(SimulationError::ZeroPopulation);
    }
    let stride = if stride > 0.0 { stride } else { t_end };

    let mut y: Vec<f64> = s0.iter().chain(i0).cloned().collect();
    let mut dy = vec![0.0; 2 * n];
    let controls = OdeControls {
        step: 1e-2,
        error_tol: 1e-8,
        min_step: 1e-12,
        max_steps: 50_000_000,
    };

    let state_at = |t: f64, y: &[f64]| SimulationState {
        t,
        s: y[..n].to_vec(),
        i: y[n..].to_vec(),
    };
    let mut samples = vec![state_at(0.0, &y)];
    let mut t = 0.0;
    let mut converged = false;
    sis_field(l, params, &y, &mut dy);
    let mut field_norm = max_norm(&dy);
    if field_norm <= 1e-8 {
        converged = true;
    }

    while !converged && t < t_end {
        let t_next = (t + stride).min(t_end);
        let out = integrate_ode(
            |_t, y, dy| sis_field(l, params, y, dy),
            &y,
            t,
            t_next,
            &controls,
            None,
        )?;
        if out.reached_step_cap {
            return Err(SimulationError::Numerics(NumericsError::NoConvergence {
                iterations: out.steps as usize,
                residual: field_norm,
            }));
        }
        y = out.y;
        t = out.t;
        for (index, &v) in y.iter().enumerate() {
            if v < -1e-12 {
                return Err(SimulationError::NegativeState { t, index, value: v });
            }
        }
        samples.push(state_at(t, &y));
        sis_field(l, params, &y, &mut dy);
        field_norm = max_norm(&dy);
        if field_norm <= 1e-8 {
            converged = true;
        }
    }

    Ok(Trajectory {
        samples,
        converged,
        final_field_norm: field_norm,
    })
}
