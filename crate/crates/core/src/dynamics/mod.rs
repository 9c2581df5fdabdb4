//! Right-hand sides of the radial equilibrium problem and its reformulations.

pub mod ode;

use crate::error::{Error, Result};
use crate::material::MaterialLaw;
use crate::scalar::Scalar;

pub use ode::{integrate, solve, OdeOptions, Trajectory};

/// Point `(v, dv/ds)` of the autonomous system in `s = ln R`, with `v = r/R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState<T> {
    pub v: T,
    pub vdot: T,
}

impl<T: Scalar> PhaseState<T> {
    /// Radial stretch `nu = r' = v + vdot`.
    pub fn nu(&self) -> T {
        self.v + self.vdot
    }

    pub fn from_profile(x: T, r: T, rp: T) -> Self {
        let v = r / x;
        Self { v, vdot: rp - v }
    }
}

/// Point `(omega, That)` of the stress initial value problem, `omega = R/r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaState<T> {
    pub omega: T,
    pub that: T,
}

fn check_radius<T: Scalar>(x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what: "reference radius", value: x.as_f64() })
    }
}

/// `R r''`, which depends on the strains only.
pub fn scaled_acceleration<T: Scalar>(m: &MaterialLaw<T>, nu: T, v: T) -> Result<T> {
    let nm1 = T::from_usize_lossy(m.dim() - 1);
    let num = m.phi_2(nu, v)? - m.phi_1(nu, v)? - m.phi_12(nu, v)? * (nu - v);
    Ok(nm1 * num / m.phi_11(nu, v)?)
}

/// `r''` from the expanded equilibrium equation `(R^(n-1) Phi_1)' = (n-1) R^(n-2) Phi_2`.
pub fn equilibrium_rhs<T: Scalar>(m: &MaterialLaw<T>, x: T, r: T, rp: T) -> Result<T> {
    check_radius(x)?;
    Ok(scaled_acceleration(m, rp, r / x)? / x)
}

/// `r''` from the same equation written with the modified partials.
pub fn equilibrium_rhs_modified<T: Scalar>(m: &MaterialLaw<T>, x: T, r: T, rp: T) -> Result<T> {
    check_radius(x)?;
    let (nu, v) = (rp, r / x);
    let nm1 = T::from_usize_lossy(m.dim() - 1);
    let num = m.phi_hat_2(nu, v)? - m.phi_hat_1(nu, v)? - m.phi_hat_12(nu, v)? * (nu - v);
    Ok(nm1 * num / (x * m.phi_hat_11(nu, v)?))
}

/// `(dv/ds, d vdot/ds)` with `d vdot/ds = R r'' - vdot`.
pub fn autonomous_rhs<T: Scalar>(m: &MaterialLaw<T>, state: PhaseState<T>) -> Result<PhaseState<T>> {
    let acc = scaled_acceleration(m, state.nu(), state.v)?;
    Ok(PhaseState { v: state.vdot, vdot: acc - state.vdot })
}

/// `dThat/dR = (n-1) kappa (r'/r) (1 - (r' R / r)^(n-1))` along a solution.
pub fn stress_rhs<T: Scalar>(m: &MaterialLaw<T>, x: T, r: T, rp: T) -> Result<T> {
    check_radius(x)?;
    if !(r > T::zero()) {
        return Err(Error::Domain { what: "deformed radius", value: r.as_f64() });
    }
    let nm1 = T::from_usize_lossy(m.dim() - 1);
    let ratio = rp * x / r;
    Ok(nm1 * m.kappa() * (rp / r) * (T::one() - ratio.powi(m.dim() as i32 - 1)))
}

/// `dThat/domega = (n-1) kappa sum_{k=0}^{n-2} omega^k nuhat^(k+1)`, with `nuhat = nuhat(That, 1/omega)`.
///
/// At `omega = 0` the extension by continuity is used. As `v = 1/omega` grows
/// the determinant must shrink to balance the `ln v` growth of the modified
/// stress, so `nuhat -> 0` and the extended value is zero.
pub fn ivp_t_rhs<T: Scalar>(m: &MaterialLaw<T>, state: OmegaState<T>) -> Result<T> {
    let w = state.omega;
    if !(w >= T::zero()) || !w.is_finite() {
        return Err(Error::Domain { what: "inverse stretch", value: w.as_f64() });
    }
    if w == T::zero() {
        return Ok(T::zero());
    }
    let nu = m.invert_nu_hat(state.that, w.recip())?;
    let nm1 = T::from_usize_lossy(m.dim() - 1);
    let mut sum = T::zero();
    let mut wk = T::one();
    let mut nuk = nu;
    for _ in 0..m.dim() - 1 {
        sum = sum + wk * nuk;
        wk = wk * w;
        nuk = nuk * nu;
    }
    Ok(nm1 * m.kappa() * sum)
}

/// `d jac/dv` for the determinant of a cavitating solution viewed as a function of `v = r/R`.
pub fn det_vs_v_rhs<T: Scalar>(m: &MaterialLaw<T>, v: T, jac: T) -> Result<T> {
    let floor = T::strain_floor();
    if !(v >= floor) || !v.is_finite() {
        return Err(Error::Domain { what: "circumferential stretch", value: v.as_f64() });
    }
    if !(jac >= floor) || !jac.is_finite() {
        return Err(Error::Domain { what: "determinant", value: jac.as_f64() });
    }
    let n = m.dim() as i32;
    let nm1 = T::from_usize_lossy(m.dim() - 1);
    let q = jac / v.powi(n - 1);
    let mut sum = T::zero();
    for j in 1..=(n - 2) {
        sum = sum + v.powi(-j) * q.powi(j);
    }
    let bracket = -v.powi(n - 1) - v.powi(n - 1) * sum + nm1 * jac.powi(n - 1) / v.powi((n - 1) * (n - 1));
    let rhs = v.powi(n * (n - 2)) / jac.powi(n - 2) * bracket;
    let lhs = T::one()
        + v.powi(n * (n - 1)) * m.volumetric().h_second(jac)? / (nm1 * m.kappa() * jac.powi(n - 2));
    let out = rhs / lhs;
    if !out.is_finite() {
        return Err(Error::non_finite("det_vs_v_rhs", format!("v = {:e}, jac = {:e}", v.as_f64(), jac.as_f64())));
    }
    Ok(out)
}

/// State `[r, r']` in `R` for the equilibrium equation.
pub fn equilibrium_system<T: Scalar>(
    m: &MaterialLaw<T>,
) -> impl FnMut(T, &[T; 2]) -> Result<[T; 2]> + '_ {
    move |x, y| Ok([y[1], equilibrium_rhs(m, x, y[0], y[1])?])
}

/// As [`equilibrium_system`] with the modified partials.
pub fn equilibrium_system_modified<T: Scalar>(
    m: &MaterialLaw<T>,
) -> impl FnMut(T, &[T; 2]) -> Result<[T; 2]> + '_ {
    move |x, y| Ok([y[1], equilibrium_rhs_modified(m, x, y[0], y[1])?])
}

/// State `[v, vdot]` in `s = ln R`.
pub fn autonomous_system<T: Scalar>(m: &MaterialLaw<T>) -> impl FnMut(T, &[T; 2]) -> Result<[T; 2]> + '_ {
    move |_s, y| {
        let d = autonomous_rhs(m, PhaseState { v: y[0], vdot: y[1] })?;
        Ok([d.v, d.vdot])
    }
}

/// State `[v, nu]` in `s = ln R`: `dv/ds = nu - v`, `dnu/ds = R r''`.
///
/// Unlike `[v, vdot]` this keeps full relative precision in `nu` when `nu << v`.
pub fn log_system<T: Scalar>(m: &MaterialLaw<T>) -> impl FnMut(T, &[T; 2]) -> Result<[T; 2]> + '_ {
    move |_s, y| Ok([y[1] - y[0], scaled_acceleration(m, y[1], y[0])?])
}

/// State `[ln v, ln nu]` in `s = ln R`, which keeps relative accuracy in both
/// strains across the many decades they span near a cavity.
pub fn log_strain_system<T: Scalar>(m: &MaterialLaw<T>) -> impl FnMut(T, &[T; 2]) -> Result<[T; 2]> + '_ {
    move |_s, y| {
        let (v, nu) = (y[0].exp(), y[1].exp());
        Ok([nu / v - T::one(), scaled_acceleration(m, nu, v)? / nu])
    }
}
