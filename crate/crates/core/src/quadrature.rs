//! Adaptive Simpson quadrature on bounded intervals.

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("integrand is not finite at x = {x} (value {value})")]
    NonFinite { x: f64, value: f64 },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
}

/// Target absolute error used by the Gibbs computations.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

const MIN_DEPTH: u32 = 4;
const MAX_DEPTH: u32 = 50;
const ROUNDING_SLACK: f64 = 64.0;

/// Integrates `f` over `[a, b]` to roughly `tol` absolute error.
///
/// Intervals are refined until the two-halves Simpson estimate agrees with
/// the whole-interval estimate to `15 * tol`, then Richardson-corrected.
/// Refinement also stops once the disagreement is at rounding level, so a
/// `tol` below machine precision of the integral costs time but cannot
/// recurse without bound.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(0.0);
    }
    let eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite { x, value: v })
        }
    };
    let fa = eval(a)?;
    let fb = eval(b)?;
    let m = 0.5 * (a + b);
    let fm = eval(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(&eval, a, b, fa, fm, fb, whole, tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn step<E>(
    eval: &E,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, QuadratureError>
where
    E: Fn(f64) -> Result<f64, QuadratureError>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // below this, delta is rounding noise and halving cannot shrink it
    let noise = ROUNDING_SLACK * f64::EPSILON * (left.abs() + right.abs());
    if depth >= MAX_DEPTH || (depth >= MIN_DEPTH && delta.abs() <= (15.0 * tol).max(noise)) {
        return Ok(left + right + delta / 15.0);
    }
    Ok(step(eval, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
        + step(eval, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
}

/// Integrates over `[a, b]` split at the given interior points, which is
/// where kinks or peaks of the integrand sit. The tolerance is shared out
/// in proportion to piece length.
pub fn integrate_pieces<F>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    let mut points = vec![a];
    points.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    points.push(b);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let span = b - a;
    let mut total = 0.0;
    for w in points.windows(2) {
        let share = if span > 0.0 {
            (w[1] - w[0]) / span
        } else {
            1.0
        };
        total += integrate(&f, w[0], w[1], tol * share)?;
    }
    Ok(total)
}
