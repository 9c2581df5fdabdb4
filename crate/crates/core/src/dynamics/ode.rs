//! Dormand–Prince 5(4) integrator with cubic Hermite dense output.
//!
//! State vectors are fixed-size arrays. The right-hand side may fail (for
//! example when a trial stage leaves the strain domain); such failures and
//! non-finite stages are treated as step rejections.

use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth minus fourth order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const UNDERFLOW: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Initial step magnitude; estimated from the problem when `None`.
    pub h_init: Option<T>,
    pub h_max: Option<T>,
    pub max_steps: usize,
    /// Disables error control and takes steps of this magnitude.
    pub fixed_step: Option<T>,
}

impl<T: Scalar> Default for OdeOptions<T> {
    fn default() -> Self {
        Self {
            rtol: lit(1e-10),
            atol: lit(1e-12),
            h_init: None,
            h_max: None,
            max_steps: 2_000_000,
            fixed_step: None,
        }
    }
}

impl<T: Scalar> OdeOptions<T> {
    pub fn tolerances(rtol: T, atol: T) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    pub fn fixed(h: T) -> Self {
        Self { fixed_step: Some(h), ..Self::default() }
    }
}

/// Accepted steps of an integration with their derivatives.
#[derive(Debug, Clone)]
pub struct Trajectory<T, const N: usize> {
    t: Vec<T>,
    y: Vec<[T; N]>,
    dy: Vec<[T; N]>,
    event: Option<T>,
    pub rejected: usize,
    pub evaluations: usize,
}

impl<T: Scalar, const N: usize> Trajectory<T, N> {
    pub fn times(&self) -> &[T] {
        &self.t
    }

    pub fn states(&self) -> &[[T; N]] {
        &self.y
    }

    pub fn derivatives(&self) -> &[[T; N]] {
        &self.dy
    }

    pub fn steps(&self) -> usize {
        self.t.len() - 1
    }

    pub fn last_time(&self) -> T {
        self.t[self.t.len() - 1]
    }

    pub fn last_state(&self) -> [T; N] {
        self.y[self.y.len() - 1]
    }

    /// Location of the terminal event, if one fired.
    pub fn event_time(&self) -> Option<T> {
        self.event
    }

    /// Index `i` with `t` between `t[i]` and `t[i+1]`.
    fn segment(&self, t: T) -> Result<usize> {
        let (first, last) = (self.t[0], self.last_time());
        let forward = last >= first;
        let inside = if forward { t >= first && t <= last } else { t <= first && t >= last };
        if !inside {
            return Err(Error::InvalidParameter(format!(
                "dense output requested at {t}, outside [{first}, {last}]"
            )));
        }
        let k = self.t.len();
        if k == 1 {
            return Ok(0);
        }
        let pos = self.t.partition_point(|&s| if forward { s <= t } else { s >= t });
        Ok(pos.clamp(1, k - 1) - 1)
    }

    /// Cubic Hermite interpolant at `t`.
    pub fn eval(&self, t: T) -> Result<[T; N]> {
        let i = self.segment(t)?;
        if self.t.len() == 1 {
            return Ok(self.y[0]);
        }
        Ok(hermite(self.t[i], self.t[i + 1], &self.y[i], &self.y[i + 1], &self.dy[i], &self.dy[i + 1], t))
    }

    /// Writes `x,y1,...,yN`, one row per accepted step.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["x".to_string()];
        header.extend((1..=N).map(|i| format!("y{i}")));
        w.write_record(&header)?;
        for (t, y) in self.t.iter().zip(&self.y) {
            let mut row = vec![format!("{:.16e}", t)];
            row.extend(y.iter().map(|v| format!("{:.16e}", v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn hermite<T: Scalar, const N: usize>(
    t0: T,
    t1: T,
    y0: &[T; N],
    y1: &[T; N],
    f0: &[T; N],
    f1: &[T; N],
    t: T,
) -> [T; N] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = three * s2 - two * s3;
    let h11 = s3 - s2;
    std::array::from_fn(|k| h00 * y0[k] + h10 * h * f0[k] + h01 * y1[k] + h11 * h * f1[k])
}

fn all_finite<T: Scalar, const N: usize>(y: &[T; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

fn scaled_norm<T: Scalar, const N: usize>(e: &[T; N], y: &[T; N], z: &[T; N], rtol: T, atol: T) -> T {
    (0..N).fold(T::zero(), |acc, i| {
        let sc = atol + rtol * y[i].abs().max(z[i].abs());
        acc.max(e[i].abs() / sc)
    })
}

pub type Rhs<'a, T, const N: usize> = dyn FnMut(T, &[T; N]) -> Result<[T; N]> + 'a;
pub type EventFn<'a, T, const N: usize> = dyn FnMut(T, &[T; N]) -> Result<T> + 'a;

/// Integrates `y' = f(t, y)` from `t0` to `t1` with default stops and no event.
pub fn solve<T: Scalar, const N: usize>(
    f: &mut Rhs<'_, T, N>,
    t0: T,
    y0: [T; N],
    t1: T,
    opts: &OdeOptions<T>,
) -> Result<Trajectory<T, N>> {
    integrate(f, t0, y0, t1, opts, &[], None)
}

/// Integrates `y' = f(t, y)` from `t0` toward `t1` (either direction).
///
/// Steps land exactly on every point of `stops` strictly between `t0` and `t1`.
/// A terminal `event` stops the integration at its first sign change, located by
/// bisection on the dense output.
pub fn integrate<T: Scalar, const N: usize>(
    f: &mut Rhs<'_, T, N>,
    t0: T,
    y0: [T; N],
    t1: T,
    opts: &OdeOptions<T>,
    stops: &[T],
    mut event: Option<&mut EventFn<'_, T, N>>,
) -> Result<Trajectory<T, N>> {
    if !(opts.rtol >= T::zero() && opts.atol >= T::zero()) || opts.rtol + opts.atol == T::zero() {
        return Err(Error::InvalidParameter("integrator tolerances must be nonnegative and not both zero".into()));
    }
    if !all_finite(&y0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::non_finite("integrate", "initial data"));
    }
    let f0 = f(t0, &y0)?;
    if !all_finite(&f0) {
        return Err(Error::non_finite("integrate", format!("rhs at t = {:e}", t0.as_f64())));
    }
    let mut traj = Trajectory { t: vec![t0], y: vec![y0], dy: vec![f0], event: None, rejected: 0, evaluations: 1 };
    let span = t1 - t0;
    if span == T::zero() {
        return Ok(traj);
    }
    let dir = span.signum();
    let ahead = |a: T, b: T| (b - a) * dir > T::zero();
    let mut stops: Vec<T> = stops.iter().copied().filter(|&s| ahead(t0, s) && ahead(s, t1)).collect();
    stops.sort_by(|a, b| ((*a - *b) * dir).partial_cmp(&T::zero()).expect("finite stops"));
    stops.push(t1);
    let mut next_stop = 0;

    let h_min = lit::<T>(UNDERFLOW) * span.abs();
    let h_max = opts.h_max.unwrap_or(span.abs());
    let mut h = match (opts.fixed_step, opts.h_init) {
        (Some(h), _) | (None, Some(h)) => h.abs(),
        (None, None) => initial_step(f, t0, &y0, &f0, dir, opts, &mut traj.evaluations),
    }
    .min(h_max)
    .max(h_min);

    let mut g_prev = match event.as_mut() {
        Some(ev) => Some(ev(t0, &y0)?),
        None => None,
    };

    let (mut t, mut y, mut k1) = (t0, y0, f0);
    let mut just_rejected = false;
    let mut steps = 0usize;
    loop {
        if steps >= opts.max_steps {
            return Err(Error::TooManySteps(opts.max_steps));
        }
        let target = stops[next_stop];
        let remaining = (target - t).abs();
        let mut lands = false;
        let mut step = h.min(h_max);
        if step >= remaining * lit::<T>(1.0 - 1e-12) {
            step = remaining;
            lands = true;
        }
        let hs = step * dir;
        let trial = dopri_step(f, t, &y, &k1, hs, &mut traj.evaluations);
        let (y_new, k7, err) = match trial {
            Ok((y_new, k7, e)) if all_finite(&y_new) && all_finite(&k7) => {
                let err = if opts.fixed_step.is_some() {
                    T::zero()
                } else {
                    scaled_norm(&e, &y, &y_new, opts.rtol, opts.atol)
                };
                (y_new, k7, err)
            }
            Ok(_) => (y, k1, T::infinity()),
            Err(e) if opts.fixed_step.is_none() && e.is_numerical() => (y, k1, T::infinity()),
            Err(e) => return Err(e),
        };
        if opts.fixed_step.is_some() && !err.is_finite() {
            return Err(Error::non_finite("integrate", format!("fixed step at t = {:e}", t.as_f64())));
        }

        if err <= T::one() {
            steps += 1;
            let t_new = if lands { target } else { t + hs };
            if let (Some(ev), Some(gp)) = (event.as_mut(), g_prev) {
                let g_new = ev(t_new, &y_new)?;
                let crossed = (gp < T::zero() && g_new >= T::zero()) || (gp > T::zero() && g_new <= T::zero());
                if crossed {
                    let te = locate_event(&mut **ev, t, t_new, &y, &y_new, &k1, &k7, gp)?;
                    let ye = hermite(t, t_new, &y, &y_new, &k1, &k7, te);
                    let fe = match f(te, &ye) {
                        Ok(fe) if all_finite(&fe) => fe,
                        _ => hermite_slope(t, t_new, &y, &y_new, &k1, &k7, te),
                    };
                    traj.evaluations += 1;
                    if te != t {
                        traj.t.push(te);
                        traj.y.push(ye);
                        traj.dy.push(fe);
                    }
                    traj.event = Some(te);
                    return Ok(traj);
                }
                if g_new != T::zero() {
                    g_prev = Some(g_new);
                }
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            traj.t.push(t);
            traj.y.push(y);
            traj.dy.push(k1);
            if lands {
                next_stop += 1;
                if next_stop == stops.len() {
                    return Ok(traj);
                }
            }
            if opts.fixed_step.is_none() {
                let mut factor = if err == T::zero() {
                    lit(MAX_FACTOR)
                } else {
                    (lit::<T>(SAFETY) * err.powf(lit(-0.2))).min(lit(MAX_FACTOR)).max(lit(MIN_FACTOR))
                };
                if just_rejected {
                    factor = factor.min(T::one());
                }
                // keep the proposal based on the full step when a stop truncated it
                h = if lands && step < h { h } else { step * factor };
                just_rejected = false;
            }
        } else {
            traj.rejected += 1;
            let factor = if err.is_finite() {
                (lit::<T>(SAFETY) * err.powf(lit(-0.2))).max(lit(MIN_FACTOR)).min(T::one())
            } else {
                lit(0.25)
            };
            h = step * factor;
            just_rejected = true;
            if h < h_min {
                return Err(Error::StepUnderflow { t: t.as_f64(), h: h.as_f64() });
            }
        }
    }
}

fn dopri_step<T: Scalar, const N: usize>(
    f: &mut Rhs<'_, T, N>,
    t: T,
    y: &[T; N],
    k1: &[T; N],
    h: T,
    evals: &mut usize,
) -> Result<([T; N], [T; N], [T; N])> {
    let mut k = [[T::zero(); N]; 7];
    k[0] = *k1;
    for s in 1..7 {
        let ys: [T; N] = std::array::from_fn(|i| {
            let mut acc = T::zero();
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    acc = acc + lit::<T>(a) * kj[i];
                }
            }
            y[i] + h * acc
        });
        k[s] = f(t + lit::<T>(C[s]) * h, &ys)?;
        *evals += 1;
        if s == 6 {
            // stage 7 is evaluated at the fifth-order solution (FSAL)
            let err: [T; N] = std::array::from_fn(|i| {
                h * (0..7).fold(T::zero(), |acc, j| acc + lit::<T>(E[j]) * k[j][i])
            });
            return Ok((ys, k[6], err));
        }
    }
    unreachable!("seven stages")
}

fn hermite_slope<T: Scalar, const N: usize>(
    t0: T,
    t1: T,
    y0: &[T; N],
    y1: &[T; N],
    f0: &[T; N],
    f1: &[T; N],
    t: T,
) -> [T; N] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let six = lit::<T>(6.0);
    let d00 = (six * s * s - six * s) / h;
    let d10 = lit::<T>(3.0) * s * s - lit::<T>(4.0) * s + T::one();
    let d01 = -d00;
    let d11 = lit::<T>(3.0) * s * s - lit::<T>(2.0) * s;
    std::array::from_fn(|k| d00 * y0[k] + d10 * f0[k] + d01 * y1[k] + d11 * f1[k])
}

#[allow(clippy::too_many_arguments)]
fn locate_event<T: Scalar, const N: usize>(
    ev: &mut EventFn<'_, T, N>,
    t0: T,
    t1: T,
    y0: &[T; N],
    y1: &[T; N],
    f0: &[T; N],
    f1: &[T; N],
    g0: T,
) -> Result<T> {
    let (mut a, mut b) = (t0, t1);
    let mut ga = g0;
    for _ in 0..200 {
        let mid = lit::<T>(0.5) * (a + b);
        if mid == a || mid == b {
            break;
        }
        let gm = ev(mid, &hermite(t0, t1, y0, y1, f0, f1, mid))?;
        if gm == T::zero() {
            return Ok(mid);
        }
        if (gm < T::zero()) == (ga < T::zero()) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    Ok(b)
}

fn initial_step<T: Scalar, const N: usize>(
    f: &mut Rhs<'_, T, N>,
    t0: T,
    y0: &[T; N],
    f0: &[T; N],
    dir: T,
    opts: &OdeOptions<T>,
    evals: &mut usize,
) -> T {
    let zero = [T::zero(); N];
    let d0 = scaled_norm(y0, y0, &zero, opts.rtol, opts.atol);
    let d1 = scaled_norm(f0, y0, &zero, opts.rtol, opts.atol);
    let tiny = lit::<T>(1e-5);
    let h0 = if d0 < tiny || d1 < tiny { lit(1e-6) } else { lit::<T>(0.01) * d0 / d1 };
    let y1: [T; N] = std::array::from_fn(|i| y0[i] + dir * h0 * f0[i]);
    *evals += 1;
    let d2 = match f(t0 + dir * h0, &y1) {
        Ok(f1) if all_finite(&f1) => {
            let diff: [T; N] = std::array::from_fn(|i| f1[i] - f0[i]);
            scaled_norm(&diff, y0, &zero, opts.rtol, opts.atol) / h0
        }
        _ => return h0 * lit(0.01),
    };
    let m = d1.max(d2);
    let h1 = if m <= lit(1e-15) {
        (h0 * lit(1e-3)).max(lit(1e-6))
    } else {
        (lit::<T>(0.01) / m).powf(lit(0.2))
    };
    (h0 * lit(100.0)).min(h1)
}
