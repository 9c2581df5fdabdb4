//! Bracketed scalar root finding.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Outcome of a bracketed solve.
#[derive(Debug, Clone, Copy)]
pub struct Root<T> {
    pub x: T,
    pub fx: T,
    pub iterations: usize,
}

/// Brent's method (inverse quadratic interpolation, secant and bisection) on a
/// sign-changing bracket `[a, b]` with known end values.
///
/// Stops when `|f(x)| <= ftol` or the bracket shrinks below
/// `xtol + 4 eps |x|`.
#[allow(clippy::too_many_arguments)]
pub fn brent<T, F>(
    mut f: F,
    a: T,
    b: T,
    fa: T,
    fb: T,
    xtol: T,
    ftol: T,
    max_iter: usize,
) -> Result<Root<T>>
where
    T: Scalar,
    F: FnMut(T) -> Result<T>,
{
    if fa == T::zero() {
        return Ok(Root { x: a, fx: fa, iterations: 0 });
    }
    if fb == T::zero() {
        return Ok(Root { x: b, fx: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket {
            lo: a.as_f64(),
            hi: b.as_f64(),
            f_lo: fa.as_f64(),
            f_hi: fb.as_f64(),
        });
    }

    let two = lit::<T>(2.0);
    let half = lit::<T>(0.5);
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;

    for iter in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * T::epsilon() * b.abs() + half * xtol;
        let m = half * (c - b);
        if fb.abs() <= ftol || m.abs() <= tol {
            return Ok(Root { x: b, fx: fb, iterations: iter });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (lit::<T>(3.0) * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol {
            b + d
        } else if m > T::zero() {
            b + tol
        } else {
            b - tol
        };
        fb = f(b)?;
        if !fb.is_finite() {
            return Err(Error::non_finite("brent", format!("f({:e}) = {:e}", b.as_f64(), fb.as_f64())));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        detail: format!("bracket around {:e}", b.as_f64()),
    })
}

/// Scans `points` in order and returns the first adjacent pair with finite
/// values of opposite sign, as `(a, fa, b, fb)`.
pub fn first_sign_change<T: Scalar>(points: &[(T, Option<T>)]) -> Option<(T, T, T, T)> {
    let finite: Vec<(T, T)> = points
        .iter()
        .filter_map(|&(x, fx)| fx.filter(|v| v.is_finite()).map(|v| (x, v)))
        .collect();
    finite.windows(2).find_map(|w| {
        let (a, fa) = w[0];
        let (b, fb) = w[1];
        (fa == T::zero() || fa.signum() != fb.signum()).then_some((a, fa, b, fb))
    })
}
