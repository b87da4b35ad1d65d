//! Root finding for monotone scalar functions.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RootError<E> {
    #[error("no sign change in [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },
    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),
    #[error(transparent)]
    Eval(E),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Stop when `|f(x)| <= f_tol`.
    pub f_tol: f64,
    /// Stop when the bracket is narrower than `x_rel_tol * |x|`.
    pub x_rel_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-12,
            x_rel_tol: 1e-14,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Finds a root of `f` inside `[lo, hi]`, where `f(lo)` and `f(hi)` have
/// opposite signs.
///
/// Each iteration tries a secant step (Illinois-weighted, so a stale
/// endpoint cannot stall progress) and falls back to bisection whenever
/// the secant point would leave the middle of the bracket.
pub fn bracketed_root<F, E>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: RootOptions,
) -> Result<Root, RootError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a).map_err(RootError::Eval)?;
    let mut fb = f(b).map_err(RootError::Eval)?;
    if fa == 0.0 {
        return Ok(Root {
            x: a,
            fx: fa,
            iterations: 0,
        });
    }
    if fb == 0.0 {
        return Ok(Root {
            x: b,
            fx: fb,
            iterations: 0,
        });
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NotBracketed { lo, hi });
    }
    // which end was retained on the previous step: -1 = a, 1 = b
    let mut side = 0i8;
    for iter in 1..=opts.max_iter {
        let width = b - a;
        let mut x = b - fb * width / (fb - fa);
        let guard = 0.05 * width.abs();
        if !x.is_finite() || (x - a).abs() < guard || (b - x).abs() < guard {
            x = 0.5 * (a + b);
        }
        let fx = f(x).map_err(RootError::Eval)?;
        if fx.abs() <= opts.f_tol {
            return Ok(Root {
                x,
                fx,
                iterations: iter,
            });
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= opts.x_rel_tol * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(Root {
                x,
                fx,
                iterations: iter,
            });
        }
    }
    Err(RootError::NonConvergence(opts.max_iter))
}
