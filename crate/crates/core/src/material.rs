//! Stored-energy laws for radial deformations.
//!
//! A radial deformation `r(R)` has principal stretches `nu = r'` and
//! `v = r/R` (the latter with multiplicity `n - 1`). The isotropic law is
//!
//! ```text
//! Phi(nu, v) = (kappa/n) (nu^n + (n-1) v^n) + h(nu v^(n-1))
//! ```
//!
//! and the modified (non-isotropic) law that renders cavitating states finite
//! energy replaces the circumferential Dirichlet part with a determinant
//! weighted logarithm:
//!
//! ```text
//! PhiHat(nu, v) = (kappa/n) nu^n + h(d) + kappa d ((n-1)/n + (n-1) ln v),  d = nu v^(n-1)
//! ```
//!
//! Partial derivatives follow the convention that index 1 is the radial
//! stretch and index 2 a *single* transverse stretch, all transverse
//! stretches being equal at the evaluation point.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Default absolute tolerance on the modified stress residual in [`MaterialLaw::invert_nu_hat`].
pub const DEFAULT_TOL_INV: f64 = 1e-12;

const MAX_BRACKET_DOUBLINGS: usize = 200;
const MAX_INVERSION_ITERS: usize = 200;

/// Shape of the volumetric term without its `D d^(-delta)` barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumetricKind<T> {
    /// `C d^gamma`
    PowerLaw { c: T, gamma: T },
    /// `C (d - 1 - 1/C)^2`, which formally enforces `d = 1` as `C` grows.
    IncompressiblePenalty { c: T },
}

/// Volumetric law `h(d) = core(d) + D d^(-delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumetricLaw<T> {
    kind: VolumetricKind<T>,
    delta: T,
    d: T,
}

impl<T: Scalar> VolumetricLaw<T> {
    pub fn new(kind: VolumetricKind<T>, delta: T, d: T) -> Result<Self> {
        match kind {
            VolumetricKind::PowerLaw { c, gamma } => {
                if !(c >= T::zero()) || !c.is_finite() {
                    return Err(Error::InvalidParameter(format!("power law C must be >= 0, got {c}")));
                }
                if !(gamma > T::zero()) || !gamma.is_finite() {
                    return Err(Error::InvalidParameter(format!("power law gamma must be > 0, got {gamma}")));
                }
            }
            VolumetricKind::IncompressiblePenalty { c } => {
                if !(c > T::zero()) || !c.is_finite() {
                    return Err(Error::InvalidParameter(format!("penalty C must be > 0, got {c}")));
                }
            }
        }
        if !(delta > T::zero()) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("barrier exponent must be > 0, got {delta}")));
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::InvalidParameter(format!("barrier coefficient D must be > 0, got {d}")));
        }
        let law = Self { kind, delta, d };
        law.validate_convexity()?;
        Ok(law)
    }

    pub fn power_law(c: T, gamma: T, delta: T, d: T) -> Result<Self> {
        Self::new(VolumetricKind::PowerLaw { c, gamma }, delta, d)
    }

    pub fn penalty(c: T, delta: T, d: T) -> Result<Self> {
        Self::new(VolumetricKind::IncompressiblePenalty { c }, delta, d)
    }

    /// Builds the law with the barrier coefficient that leaves the reference
    /// configuration stress free for a material of dimension `n` and shear
    /// modulus `kappa` (see [`stress_free_d`]).
    pub fn stress_free(kind: VolumetricKind<T>, delta: T, n: usize, kappa: T) -> Result<Self> {
        let d = stress_free_d(n, kappa, kind, delta)?;
        Self::new(kind, delta, d)
    }

    pub fn kind(&self) -> VolumetricKind<T> {
        self.kind
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn barrier_coefficient(&self) -> T {
        self.d
    }

    fn check(d: T) -> Result<()> {
        if d > T::zero() && d.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain { what: "determinant", value: d.as_f64() })
        }
    }

    pub fn h(&self, d: T) -> Result<T> {
        Self::check(d)?;
        Ok(self.h_raw(d))
    }

    pub fn h_prime(&self, d: T) -> Result<T> {
        Self::check(d)?;
        Ok(self.h_prime_raw(d))
    }

    pub fn h_second(&self, d: T) -> Result<T> {
        Self::check(d)?;
        Ok(self.h_second_raw(d))
    }

    #[inline]
    fn h_raw(&self, d: T) -> T {
        let barrier = self.d * d.powf(-self.delta);
        match self.kind {
            VolumetricKind::PowerLaw { c, gamma } => c * d.powf(gamma) + barrier,
            VolumetricKind::IncompressiblePenalty { c } => {
                let s = d - T::one() - c.recip();
                c * s * s + barrier
            }
        }
    }

    #[inline]
    fn h_prime_raw(&self, d: T) -> T {
        let barrier = -self.delta * self.d * d.powf(-self.delta - T::one());
        match self.kind {
            VolumetricKind::PowerLaw { c, gamma } => c * gamma * d.powf(gamma - T::one()) + barrier,
            VolumetricKind::IncompressiblePenalty { c } => {
                lit::<T>(2.0) * c * (d - T::one() - c.recip()) + barrier
            }
        }
    }

    #[inline]
    fn h_second_raw(&self, d: T) -> T {
        let barrier = self.delta * (self.delta + T::one()) * self.d * d.powf(-self.delta - lit(2.0));
        match self.kind {
            VolumetricKind::PowerLaw { c, gamma } => {
                c * gamma * (gamma - T::one()) * d.powf(gamma - lit(2.0)) + barrier
            }
            VolumetricKind::IncompressiblePenalty { c } => lit::<T>(2.0) * c + barrier,
        }
    }

    /// Rejects parameter sets whose `h''` is not positive on `[1e-6, 1e6]`.
    fn validate_convexity(&self) -> Result<()> {
        const SAMPLES: usize = 241;
        for k in 0..SAMPLES {
            let e = -6.0 + 12.0 * k as f64 / (SAMPLES - 1) as f64;
            let d = lit::<T>(10f64.powf(e));
            let h2 = self.h_second_raw(d);
            if !(h2 > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "volumetric law is not convex: h''({:e}) = {:e}",
                    d.as_f64(),
                    h2.as_f64()
                )));
            }
        }
        Ok(())
    }
}

/// Barrier coefficient `D` for which `PhiHat_1(1,..,1) = PhiHat_2(1,..,1) = 0`.
///
/// For the power law this is `((1 + (n-1)/n) kappa + C gamma) / delta`.
pub fn stress_free_d<T: Scalar>(n: usize, kappa: T, kind: VolumetricKind<T>, delta: T) -> Result<T> {
    check_dimension(n)?;
    if !(kappa > T::zero()) {
        return Err(Error::InvalidParameter(format!("kappa must be > 0, got {kappa}")));
    }
    if !(delta > T::zero()) {
        return Err(Error::InvalidParameter(format!("barrier exponent must be > 0, got {delta}")));
    }
    let nf = T::from_usize_lossy(n);
    // slope of the non-barrier part of h at d = 1
    let core_slope = match kind {
        VolumetricKind::PowerLaw { c, gamma } => c * gamma,
        VolumetricKind::IncompressiblePenalty { .. } => lit(-2.0),
    };
    let d = ((T::one() + (nf - T::one()) / nf) * kappa + core_slope) / delta;
    if !(d > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "no positive stress-free barrier coefficient (D = {d})"
        )));
    }
    Ok(d)
}

fn check_dimension(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("dimension must be 2 or 3, got {n}")))
    }
}

/// Radial reduction of `W(F) = (kappa/n) sum v_i^n + h(det F)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialLaw<T> {
    n: usize,
    kappa: T,
    vol: VolumetricLaw<T>,
}

/// Shared sub-expressions at a strain state.
struct Strain<T> {
    nu: T,
    v: T,
    d: T,
    /// `v^(n-2)`
    v_nm2: T,
    /// `v^(n-1)`
    v_nm1: T,
}

impl<T: Scalar> MaterialLaw<T> {
    pub fn new(n: usize, kappa: T, vol: VolumetricLaw<T>) -> Result<Self> {
        check_dimension(n)?;
        if !(kappa > T::zero()) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be > 0, got {kappa}")));
        }
        Ok(Self { n, kappa, vol })
    }

    /// Power law `C=1, gamma=2, delta=2` with `n=3`, `kappa=1` and the stress-free `D = 11/6`.
    pub fn example_one() -> Result<Self> {
        let kind = VolumetricKind::PowerLaw { c: T::one(), gamma: lit(2.0) };
        Self::new(3, T::one(), VolumetricLaw::stress_free(kind, lit(2.0), 3, T::one())?)
    }

    /// Penalty law with the given `C`, `n=3`, `kappa=3`, `delta=2` and the stress-free `D = 1.5`.
    pub fn penalty_example(c: T) -> Result<Self> {
        let kappa = lit::<T>(3.0);
        let kind = VolumetricKind::IncompressiblePenalty { c };
        Self::new(3, kappa, VolumetricLaw::stress_free(kind, lit(2.0), 3, kappa)?)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn volumetric(&self) -> &VolumetricLaw<T> {
        &self.vol
    }

    #[inline]
    fn nf(&self) -> T {
        T::from_usize_lossy(self.n)
    }

    #[inline]
    fn strain(&self, nu: T, v: T) -> Result<Strain<T>> {
        let floor = T::strain_floor();
        if !(nu >= floor) || !nu.is_finite() {
            return Err(Error::Domain { what: "radial stretch", value: nu.as_f64() });
        }
        if !(v >= floor) || !v.is_finite() {
            return Err(Error::Domain { what: "circumferential stretch", value: v.as_f64() });
        }
        let v_nm2 = v.powi(self.n as i32 - 2);
        let v_nm1 = v_nm2 * v;
        let d = nu * v_nm1;
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::Domain { what: "determinant", value: d.as_f64() });
        }
        Ok(Strain { nu, v, d, v_nm2, v_nm1 })
    }

    /// `(n-1) kappa (1/n + ln v)`: the shift between modified and true stress.
    #[inline]
    pub fn stress_shift(&self, v: T) -> T {
        let nf = self.nf();
        (nf - T::one()) * self.kappa * (nf.recip() + v.ln())
    }

    pub fn phi(&self, nu: T, v: T) -> Result<T> {
        let s = self.strain(nu, v)?;
        let nf = self.nf();
        let n = self.n as i32;
        Ok(self.kappa / nf * (nu.powi(n) + (nf - T::one()) * v.powi(n)) + self.vol.h_raw(s.d))
    }

    pub fn phi_1(&self, nu: T, v: T) -> Result<T> {
        let s = self.strain(nu, v)?;
        Ok(self.kappa * nu.powi(self.n as i32 - 1) + s.v_nm1 * self.vol.h_prime_raw(s.d))
    }

    pub fn phi_2(&self, nu: T, v: T) -> Result<T> {
        let s = self.strain(nu, v)?;
        Ok(self.kappa * s.v_nm1 + s.nu * s.v_nm2 * self.vol.h_prime_raw(s.d))
    }

    pub fn phi_11(&self, nu: T, v: T) -> Result<T> {
        let s = self.strain(nu, v)?;
        Ok(self.radial_stiffness(&s))
    }

    pub fn phi_12(&self, nu: T, v: T) -> Result<T> {
        let s = self.strain(nu, v)?;
        Ok(s.v_nm2 * (self.vol.h_prime_raw(s.d) + s.d * self.vol.h_second_raw(s.d)))
    }

    #[inline]
    fn radial_stiffness(&self, s: &Strain<T>) -> T {
        let nf = self.nf();
        self.kappa * (nf - T::one()) * s.nu.powi(self.n as i32 - 2)
            + s.v_nm1 * s.v_nm1 * self.vol.h_second_raw(s.d)
    }

    pub fn phi_hat(&self, nu: T, v: T) -> Result<T> {
        let s = self.strain(nu, v)?;
        let nf = self.nf();
        let log_term = (nf - T::one()) / nf + (nf - T::one()) * v.ln();
        Ok(self.kappa / nf * nu.powi(self.n as i32) + self.vol.h_raw(s.d) + self.kappa * s.d * log_term)
    }

    pub fn phi_hat_1(&self, nu: T, v: T) -> Result<T> {
        let s = self.strain(nu, v)?;
        Ok(self.kappa * nu.powi(self.n as i32 - 1)
            + s.v_nm1 * (self.vol.h_prime_raw(s.d) + self.stress_shift(s.v)))
    }

    pub fn phi_hat_2(&self, nu: T, v: T) -> Result<T> {
        let s = self.strain(nu, v)?;
        Ok(s.nu * s.v_nm2 * (self.vol.h_prime_raw(s.d) + self.kappa + self.stress_shift(s.v)))
    }

    pub fn phi_hat_11(&self, nu: T, v: T) -> Result<T> {
        self.phi_11(nu, v)
    }

    pub fn phi_hat_12(&self, nu: T, v: T) -> Result<T> {
        let s = self.strain(nu, v)?;
        Ok(s.v_nm2
            * (self.vol.h_prime_raw(s.d)
                + s.d * self.vol.h_second_raw(s.d)
                + self.kappa
                + self.stress_shift(s.v)))
    }

    /// Radial Cauchy stress `T = v^(1-n) Phi_1 = kappa (nu/v)^(n-1) + h'(d)`.
    pub fn cauchy_stress(&self, nu: T, v: T) -> Result<T> {
        let s = self.strain(nu, v)?;
        Ok(self.kappa * (nu / v).powi(self.n as i32 - 1) + self.vol.h_prime_raw(s.d))
    }

    /// Modified radial Cauchy stress `T + (n-1) kappa (1/n + ln v)`.
    pub fn modified_stress(&self, nu: T, v: T) -> Result<T> {
        let s = self.strain(nu, v)?;
        Ok(self.kappa * (nu / v).powi(self.n as i32 - 1) + self.vol.h_prime_raw(s.d) + self.stress_shift(v))
    }

    /// `d That / d nu` at fixed `v`; strictly positive.
    pub fn modified_stress_dnu(&self, nu: T, v: T) -> Result<T> {
        let s = self.strain(nu, v)?;
        Ok(self.radial_stiffness(&s) / s.v_nm1)
    }

    pub fn invert_nu_hat(&self, target: T, v: T) -> Result<T> {
        self.invert_nu_hat_with(target, v, lit(DEFAULT_TOL_INV))
    }

    /// Unique `nu > 0` with `modified_stress(nu, v) = target`.
    ///
    /// Brackets geometrically from `nu = v`, then runs Newton in `ln nu`
    /// safeguarded by bisection. Where the stress is so steep that `tol` lies
    /// below the floating-point resolution of `nu`, the best representable
    /// `nu` is returned.
    pub fn invert_nu_hat_with(&self, target: T, v: T, tol: T) -> Result<T> {
        if !target.is_finite() {
            return Err(Error::non_finite("invert_nu_hat", format!("target stress {target}")));
        }
        let f = |nu: T| -> Result<T> { Ok(self.modified_stress(nu, v)? - target) };

        let two = lit::<T>(2.0);
        let start = v;
        let f0 = f(start)?;
        if f0.abs() <= tol {
            return Ok(start);
        }
        let (mut lo, mut hi, mut f_lo, mut f_hi);
        if f0 > T::zero() {
            hi = start;
            f_hi = f0;
            lo = start;
            f_lo = f0;
            let mut k = 0;
            while f_lo > T::zero() {
                if k == MAX_BRACKET_DOUBLINGS {
                    return Err(self.bracket_failure(target, v, lo, f_lo));
                }
                hi = lo;
                f_hi = f_lo;
                lo = lo / two;
                f_lo = match f(lo) {
                    Ok(x) => x,
                    Err(_) => return Err(self.bracket_failure(target, v, lo, f_lo)),
                };
                k += 1;
            }
        } else {
            lo = start;
            f_lo = f0;
            hi = start;
            f_hi = f0;
            let mut k = 0;
            while f_hi < T::zero() {
                if k == MAX_BRACKET_DOUBLINGS {
                    return Err(self.bracket_failure(target, v, hi, f_hi));
                }
                lo = hi;
                f_lo = f_hi;
                hi = hi * two;
                f_hi = match f(hi) {
                    Ok(x) => x,
                    Err(_) => return Err(self.bracket_failure(target, v, hi, f_hi)),
                };
                k += 1;
            }
        }
        if f_lo.abs() <= tol {
            return Ok(lo);
        }
        if f_hi.abs() <= tol {
            return Ok(hi);
        }

        // Newton on x = ln(nu), kept inside [ln lo, ln hi].
        let (mut xlo, mut xhi) = (lo.ln(), hi.ln());
        let mut x = if f_lo.abs() < f_hi.abs() { xlo } else { xhi };
        let mut best = (x, if f_lo.abs() < f_hi.abs() { f_lo } else { f_hi });
        for _ in 0..MAX_INVERSION_ITERS {
            let nu = x.exp();
            let fx = f(nu)?;
            if fx.abs() < best.1.abs() {
                best = (x, fx);
            }
            if fx.abs() <= tol {
                return Ok(nu);
            }
            if fx < T::zero() {
                xlo = x;
            } else {
                xhi = x;
            }
            if (xhi - xlo) <= lit::<T>(4.0) * T::epsilon() * xlo.abs().max(xhi.abs()).max(T::one()) {
                // bracket at machine resolution: accept the best iterate
                return Ok(best.0.exp());
            }
            let slope = nu * self.modified_stress_dnu(nu, v)?;
            let newton = x - fx / slope;
            x = if slope > T::zero() && newton > xlo && newton < xhi {
                newton
            } else {
                lit::<T>(0.5) * (xlo + xhi)
            };
        }
        Err(Error::NoConvergence {
            iterations: MAX_INVERSION_ITERS,
            detail: format!(
                "modified stress inversion for target {:e} at v = {:e} (residual {:e})",
                target.as_f64(),
                v.as_f64(),
                best.1.as_f64()
            ),
        })
    }

    fn bracket_failure(&self, target: T, v: T, nu: T, f: T) -> Error {
        Error::NoConvergence {
            iterations: MAX_BRACKET_DOUBLINGS,
            detail: format!(
                "could not bracket modified stress {:e} at v = {:e}; last nu = {:e}, residual {:e}",
                target.as_f64(),
                v.as_f64(),
                nu.as_f64(),
                f.as_f64()
            ),
        }
    }

    /// Modified stress of the homogeneous state, `g(v) = That(v, v)`.
    pub fn homogeneous_stress(&self, v: T) -> Result<T> {
        self.modified_stress(v, v)
    }

    /// Unique `v` with `g(v) = 0`: below this stretch minimizers are affine.
    pub fn bar_lambda(&self) -> Result<T> {
        self.homogeneous_stretch_for(T::zero())
    }

    /// Unique `v` with `g(v) = target` (`g` is strictly increasing).
    pub fn homogeneous_stretch_for(&self, target: T) -> Result<T> {
        let g = |v: T| -> Result<T> { Ok(self.homogeneous_stress(v)? - target) };
        let two = lit::<T>(2.0);
        let (mut lo, mut hi) = (T::one(), T::one());
        let (mut g_lo, mut g_hi) = (g(lo)?, g(hi)?);
        let mut k = 0;
        while g_lo > T::zero() {
            if k == MAX_BRACKET_DOUBLINGS {
                return Err(self.bracket_failure(target, lo, lo, g_lo));
            }
            hi = lo;
            g_hi = g_lo;
            lo = lo / two;
            g_lo = g(lo)?;
            k += 1;
        }
        while g_hi < T::zero() {
            if k == MAX_BRACKET_DOUBLINGS {
                return Err(self.bracket_failure(target, hi, hi, g_hi));
            }
            lo = hi;
            g_lo = g_hi;
            hi = hi * two;
            g_hi = g(hi)?;
            k += 1;
        }
        let root = crate::roots::brent(g, lo, hi, g_lo, g_hi, T::epsilon(), T::zero(), 200)?;
        Ok(root.x)
    }
}
