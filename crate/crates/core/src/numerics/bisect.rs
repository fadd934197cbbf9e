use super::NumericsError;

/// Declared monotonicity of the function handed to `bisect_monotone`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Midpoint bisection for a monotone function with a bracketed root.
///
/// The bracket must be sign-consistent with `direction`: an increasing f
/// needs f(lo) <= 0 <= f(hi), a decreasing one the reverse. Terminates when
/// the bracket width drops to `tol` (or to machine resolution).
pub fn bisect_monotone(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    direction: Direction,
) -> Result<f64, NumericsError> {
    if !(lo < hi) || !tol.is_finite() || tol <= 0.0 {
        return Err(NumericsError::BadBracket {
            f_lo: f64::NAN,
            f_hi: f64::NAN,
        });
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    let ok = match direction {
        Direction::Increasing => f_lo <= 0.0 && f_hi >= 0.0,
        Direction::Decreasing => f_lo >= 0.0 && f_hi <= 0.0,
    };
    if !ok {
        return Err(NumericsError::BadBracket { f_lo, f_hi });
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }

    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating-point resolution
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        let root_above = match direction {
            Direction::Increasing => fm < 0.0,
            Direction::Decreasing => fm > 0.0,
        };
        if root_above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
