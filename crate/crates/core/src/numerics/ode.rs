use super::matrix::max_norm;
use super::NumericsError;

/// Step-size and error controls for `integrate_ode`.
#[derive(Debug, Clone)]
pub struct OdeControls {
    /// Base step; the integrator halves below it on error and recovers back
    /// up to it, never beyond.
    pub step: f64,
    /// Per-step local error budget (max-norm of the step-doubling estimate).
    pub error_tol: f64,
    /// Steps below this abort with `StepUnderflow`.
    pub min_step: f64,
    /// Accepted-step cap; exceeding it reports `NoConvergence`.
    pub max_steps: u64,
}

impl Default for OdeControls {
    fn default() -> Self {
        Self {
            step: 1e-2,
            error_tol: 1e-8,
            min_step: 1e-12,
            max_steps: u64::MAX,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OdeOutcome {
    pub t: f64,
    pub y: Vec<f64>,
    pub steps: u64,
    /// True when the convergence predicate fired before t_end.
    pub early_exit: bool,
    /// True when the accepted-step budget ran out before t_end.
    pub reached_step_cap: bool,
}

fn rk4_step(
    field: &mut impl FnMut(f64, &[f64], &mut [f64]),
    t: f64,
    y: &[f64],
    h: f64,
    k: &mut [Vec<f64>; 4],
    tmp: &mut Vec<f64>,
    out: &mut Vec<f64>,
) {
    let n = y.len();
    field(t, y, &mut k[0]);
    for j in 0..n {
        tmp[j] = y[j] + 0.5 * h * k[0][j];
    }
    field(t + 0.5 * h, tmp, &mut k[1]);
    for j in 0..n {
        tmp[j] = y[j] + 0.5 * h * k[1][j];
    }
    field(t + 0.5 * h, tmp, &mut k[2]);
    for j in 0..n {
        tmp[j] = y[j] + h * k[2][j];
    }
    field(t + h, tmp, &mut k[3]);
    for j in 0..n {
        out[j] = y[j] + h / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]);
    }
}

/// Explicit RK4 with step-doubling error control.
///
/// Each trial compares one full step against two half steps; the step halves
/// while the estimate exceeds `error_tol` and is allowed to grow back toward
/// the base step after a streak of comfortable accepts. The accepted state is
/// the two-half-step result. `converged` is checked after every accepted
/// step and stops the integration early when it returns true.
pub fn integrate_ode(
    field: impl FnMut(f64, &[f64], &mut [f64]),
    y0: &[f64],
    t0: f64,
    t_end: f64,
    controls: &OdeControls,
    converged: Option<&mut dyn FnMut(f64, &[f64]) -> bool>,
) -> Result<OdeOutcome, NumericsError> {
    integrate_ode_guarded(field, y0, t0, t_end, controls, None, converged)
}

/// [`integrate_ode`] with an invariant-region guard: a trial step whose
/// result fails `guard` is rejected and the step halved. For flows with an
/// invariant region this keeps iterates inside it even where the region
/// boundary hides a layer thinner than the smoothness-sized step (the
/// doubling estimate cannot see a layer none of its stages sample).
pub fn integrate_ode_guarded(
    mut field: impl FnMut(f64, &[f64], &mut [f64]),
    y0: &[f64],
    t0: f64,
    t_end: f64,
    controls: &OdeControls,
    mut guard: Option<&mut dyn FnMut(&[f64]) -> bool>,
    mut converged: Option<&mut dyn FnMut(f64, &[f64]) -> bool>,
) -> Result<OdeOutcome, NumericsError> {
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut steps: u64 = 0;

    if let Some(p) = converged.as_deref_mut() {
        if p(t, &y) {
            return Ok(OdeOutcome {
                t,
                y,
                steps,
                early_exit: true,
                reached_step_cap: false,
            });
        }
    }

    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut tmp = vec![0.0; n];
    let mut y_full = vec![0.0; n];
    let mut y_half = vec![0.0; n];
    let mut y_two = vec![0.0; n];
    let mut h = controls.step;
    let mut calm_streak = 0u32;

    while t < t_end {
        h = h.min(t_end - t);
        rk4_step(&mut field, t, &y, h, &mut k, &mut tmp, &mut y_full);
        rk4_step(&mut field, t, &y, 0.5 * h, &mut k, &mut tmp, &mut y_half);
        rk4_step(
            &mut field,
            t + 0.5 * h,
            &y_half,
            0.5 * h,
            &mut k,
            &mut tmp,
            &mut y_two,
        );
        let mut err = 0.0f64;
        let mut finite = true;
        for j in 0..n {
            let d = y_full[j] - y_two[j];
            if !y_two[j].is_finite() || !d.is_finite() {
                finite = false;
                break;
            }
            err = err.max(d.abs() / 15.0);
        }
        let admissible = finite
            && match guard.as_deref_mut() {
                Some(g) => g(&y_two),
                None => true,
            };
        if !admissible || err > controls.error_tol {
            let next = 0.5 * h;
            if next < controls.min_step {
                if !finite {
                    return Err(NumericsError::NonFiniteState { t });
                }
                return Err(NumericsError::StepUnderflow { t, step: next });
            }
            h = next;
            calm_streak = 0;
            continue;
        }
        std::mem::swap(&mut y, &mut y_two);
        t += h;
        steps += 1;
        if max_norm(&y).is_infinite() {
            return Err(NumericsError::NonFiniteState { t });
        }
        if let Some(p) = converged.as_deref_mut() {
            if p(t, &y) {
                return Ok(OdeOutcome {
                    t,
                    y,
                    steps,
                    early_exit: true,
                    reached_step_cap: false,
                });
            }
        }
        if steps >= controls.max_steps {
            return Ok(OdeOutcome {
                t,
                y,
                steps,
                early_exit: false,
                reached_step_cap: true,
            });
        }
        if err < controls.error_tol / 64.0 {
            calm_streak += 1;
            if calm_streak >= 4 && h < controls.step {
                h = (2.0 * h).min(controls.step);
                calm_streak = 0;
            }
        } else {
            calm_streak = 0;
        }
    }
    Ok(OdeOutcome {
        t,
        y,
        steps,
        early_exit: false,
        reached_step_cap: false,
    })
}
