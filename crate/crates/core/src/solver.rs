//! Punctured-ball equilibria, gradient-flow predictor and critical displacement.

use std::io::Write as _;
use std::path::Path;

use crate::dynamics::{self, ode, OdeOptions, Trajectory};
use crate::energy::{self, sci, EnergyReport, Mesh, RadialField, DEFAULT_NODES};
use crate::error::{Error, Result};
use crate::material::MaterialLaw;
use crate::roots::{brent, first_sign_change};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Bound on `|That(r(eps))|` for an accepted solution.
    pub tol_bc: T,
    /// Residual tolerance of the stress inversion.
    pub tol_inv: T,
    pub nodes: usize,
    /// Number of log-spaced cavity values scanned for a sign change.
    pub scan_points: usize,
    pub max_iter: usize,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            rtol: lit(1e-10),
            atol: lit(1e-12),
            tol_bc: lit(1e-9),
            tol_inv: lit(crate::material::DEFAULT_TOL_INV),
            nodes: DEFAULT_NODES,
            scan_points: 32,
            max_iter: 200,
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    fn ode(&self) -> OdeOptions<T> {
        OdeOptions::tolerances(self.rtol, self.atol)
    }

    /// Tighter tolerances for the pass that samples the accepted trajectory, so
    /// that finite differences of the nodal data are not dominated by step noise.
    fn sampling_ode(&self) -> OdeOptions<T> {
        let tighten = lit::<T>(1e-2);
        let floor = lit::<T>(100.0) * T::epsilon();
        OdeOptions::tolerances((self.rtol * tighten).max(floor), self.atol * tighten)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// No cavity value satisfied the outer condition; the affine field is reported.
    AffineFallback,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::AffineFallback => "affine_fallback",
        }
    }
}

/// Equilibrium on `[eps, 1]` with diagnostics.
#[derive(Debug, Clone)]
pub struct SolutionBundle<T> {
    pub lambda: T,
    pub eps: T,
    pub field: RadialField<T>,
    pub cavity: T,
    pub slope_at_outer: T,
    pub energy: EnergyReport<T>,
    /// Modified radial stress at the nodes.
    pub that_profile: Vec<T>,
    /// Radial Cauchy stress at the nodes.
    pub t_profile: Vec<T>,
    /// Residual evaluations spent by the shooting root finder.
    pub iterations: usize,
    /// `|r(1) - lambda|` of the accepted shot.
    pub residual: T,
    /// `|That(r(eps))|`.
    pub bc_residual: T,
    pub status: SolveStatus,
}

impl<T: Scalar> SolutionBundle<T> {
    fn assemble(
        m: &MaterialLaw<T>,
        lambda: T,
        field: RadialField<T>,
        iterations: usize,
        residual: T,
        status: SolveStatus,
    ) -> Result<Self> {
        let slopes = field.nodal_slopes();
        let mut that_profile = Vec::with_capacity(slopes.len());
        let mut t_profile = Vec::with_capacity(slopes.len());
        for ((&x, &r), &p) in field.nodes().iter().zip(field.values()).zip(&slopes) {
            that_profile.push(m.modified_stress(p, r / x)?);
            t_profile.push(m.cauchy_stress(p, r / x)?);
        }
        let energy = energy::energy_report(m, &field)?;
        Ok(Self {
            lambda,
            eps: field.eps(),
            cavity: field.cavity(),
            slope_at_outer: slopes[slopes.len() - 1],
            bc_residual: that_profile[0].abs(),
            energy,
            that_profile,
            t_profile,
            iterations,
            residual,
            status,
            field,
        })
    }

    pub fn is_converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Largest decrease `That_i - That_{i+1}` between consecutive nodes (zero if nondecreasing).
    pub fn that_max_drop(&self) -> T {
        self.that_profile
            .windows(2)
            .fold(T::zero(), |acc, w| acc.max(w[0] - w[1]))
    }

    /// Writes `R,r,dr,v,That,T,jac`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["R", "r", "dr", "v", "That", "T", "jac"])?;
        let (dr, v, jac) = (self.field.dr_column(), self.field.stretches(), self.field.jacobians());
        for i in 0..v.len() {
            w.write_record([
                sci(self.field.nodes()[i]),
                sci(self.field.values()[i]),
                sci(dr[i]),
                sci(v[i]),
                sci(self.that_profile[i]),
                sci(self.t_profile[i]),
                sci(jac[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Key=value sidecar with the run metadata.
    pub fn write_metadata(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        for (k, v) in self.metadata() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }

    pub fn metadata(&self) -> Vec<(&'static str, String)> {
        vec![
            ("lambda", sci(self.lambda)),
            ("eps", sci(self.eps)),
            ("cavity", sci(self.cavity)),
            ("energy", sci(self.energy.modified)),
            ("iterations", self.iterations.to_string()),
            ("residual", sci(self.residual)),
            ("bc_residual", sci(self.bc_residual)),
            ("slope_at_outer", sci(self.slope_at_outer)),
            ("original_annulus", sci(self.energy.original_annulus)),
            ("boundary_formula", sci(self.energy.boundary_formula)),
            ("status", self.status.as_str().to_string()),
        ]
    }
}

struct Shooter<'a, T> {
    m: &'a MaterialLaw<T>,
    lambda: T,
    eps: T,
    opts: SolverOptions<T>,
    /// Integrator settings for residual evaluations; tightened for the final root refinement.
    ode: OdeOptions<T>,
    evaluations: usize,
}

impl<'a, T: Scalar> Shooter<'a, T> {
    fn initial_slope(&self, c: T) -> Result<T> {
        self.m.invert_nu_hat_with(T::zero(), c / self.eps, self.opts.tol_inv)
    }

    /// Trajectory in `s = ln R` with state `[ln v, ln r']`.
    fn trajectory(&mut self, c: T, stops: &[T], ode_opts: &OdeOptions<T>) -> Result<Trajectory<T, 2>> {
        self.evaluations += 1;
        let slope = self.initial_slope(c)?;
        let mut rhs = dynamics::log_strain_system(self.m);
        let y0 = [(c / self.eps).ln(), slope.ln()];
        ode::integrate(&mut rhs, self.eps.ln(), y0, T::zero(), ode_opts, stops, None)
            .map_err(|e| Error::Shooting { cavity: c.as_f64(), source: Box::new(e) })
    }

    /// `r(1) - lambda` for the trajectory leaving `R = eps` with `r = c` and `That = 0`.
    fn residual(&mut self, c: T) -> Result<T> {
        let opts = self.ode;
        Ok(self.trajectory(c, &[], &opts)?.last_state()[0].exp() - self.lambda)
    }

    fn scan(&mut self) -> Option<(T, T, T, T)> {
        let k = self.opts.scan_points.max(2);
        let lo = lit::<T>(1e-3) * self.eps * self.lambda;
        let hi = self.lambda * lit::<T>(1.0 - 1e-9);
        let (llo, lhi) = (lo.ln(), hi.ln());
        let pts: Vec<(T, Option<T>)> = (0..k)
            .map(|i| {
                let c = (llo + (lhi - llo) * T::from_usize_lossy(i) / T::from_usize_lossy(k - 1)).exp();
                (c, self.residual(c).ok())
            })
            .collect();
        first_sign_change(&pts)
    }

    fn expand_around(&mut self, guess: T) -> Option<(T, T, T, T)> {
        let c_max = self.lambda * lit::<T>(1.0 - 1e-9);
        if !(guess > T::zero() && guess < c_max) {
            return None;
        }
        let f0 = self.residual(guess).ok()?;
        if f0 == T::zero() {
            return Some((guess, f0, guess, f0));
        }
        let mut width = lit::<T>(0.01);
        for _ in 0..12 {
            let factor = width.exp();
            let (a, b) = (guess / factor, (guess * factor).min(c_max));
            if let Ok(fa) = self.residual(a) {
                if fa.signum() != f0.signum() {
                    return Some((a, fa, guess, f0));
                }
            }
            if let Ok(fb) = self.residual(b) {
                if fb.signum() != f0.signum() {
                    return Some((guess, f0, b, fb));
                }
            }
            width = width * lit(2.0);
        }
        None
    }
}

fn check_problem<T: Scalar>(lambda: T, eps: T) -> Result<()> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
    }
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0,1), got {eps}")));
    }
    Ok(())
}

/// Minimizer of the modified energy on `[eps, 1]` with `r(1) = lambda`.
pub fn shoot_punctured<T: Scalar>(
    m: &MaterialLaw<T>,
    lambda: T,
    eps: T,
    opts: &SolverOptions<T>,
) -> Result<SolutionBundle<T>> {
    shoot_punctured_from(m, lambda, eps, opts, None)
}

/// Shooting outward from `R = eps` on the cavity radius `c = r(eps)`.
///
/// Each trial starts from `r(eps) = c` and `r'(eps) = nuhat(0, c/eps)`, so the
/// cavity condition `That(r(eps)) = 0` holds by construction; the root finder
/// drives `r(1) - lambda` to zero. A `guess` is tried first by geometric bracket
/// expansion; otherwise `scan_points` log-spaced cavities are scanned.
pub fn shoot_punctured_from<T: Scalar>(
    m: &MaterialLaw<T>,
    lambda: T,
    eps: T,
    opts: &SolverOptions<T>,
    guess: Option<T>,
) -> Result<SolutionBundle<T>> {
    check_problem(lambda, eps)?;
    let mesh = Mesh::graded(eps, opts.nodes)?;
    let mut sh = Shooter { m, lambda, eps, opts: *opts, ode: opts.ode(), evaluations: 0 };
    let bracket = guess.and_then(|g| sh.expand_around(g)).or_else(|| sh.scan());
    let Some((a, fa, b, fb)) = bracket else {
        let field = RadialField::affine(mesh, lambda, m.dim())?;
        let evals = sh.evaluations;
        return SolutionBundle::assemble(m, lambda, field, evals, T::zero(), SolveStatus::AffineFallback);
    };
    let root = if a == b {
        crate::roots::Root { x: a, fx: fa, iterations: 0 }
    } else {
        let xtol = lit::<T>(1e-14) * a.abs().max(b.abs());
        let ftol = (lit::<T>(10.0) * T::epsilon() * lambda).max(lit(1e-14));
        sh.ode = opts.sampling_ode();
        brent(|c| sh.residual(c), a, b, fa, fb, xtol, ftol, opts.max_iter)?
    };
    let c = root.x;
    let log_nodes: Vec<T> = mesh.nodes().iter().map(|x| x.ln()).collect();
    let traj = sh.trajectory(c, &log_nodes[1..log_nodes.len() - 1], &opts.sampling_ode())?;
    let residual = (traj.last_state()[0].exp() - lambda).abs();
    let accept = (lit::<T>(1e3) * opts.rtol * lambda).max(lit(1e-8));
    if !(residual <= accept) {
        return Err(Error::NoConvergence {
            iterations: sh.evaluations,
            detail: format!("shooting residual {:e} at cavity {:e}", residual.as_f64(), c.as_f64()),
        });
    }
    let (values, slopes) = sample_at_nodes(&traj, mesh.nodes())?;
    let mut values = values;
    let last = values.len() - 1;
    values[last] = lambda;
    let field = RadialField::new(mesh, values, m.dim())
        .and_then(|f| f.with_slopes(slopes))
        .map_err(|e| match e {
            Error::InvalidParameter(s) => Error::Resolution(s),
            e => e,
        })?;
    let bundle = SolutionBundle::assemble(m, lambda, field, sh.evaluations, residual, SolveStatus::Converged)?;
    let (p0, v0) = (bundle.field.nodal_slopes()[0], c / eps);
    let resolution = lit::<T>(8.0) * T::epsilon() * p0 * m.modified_stress_dnu(p0, v0)?;
    if !(bundle.bc_residual <= opts.tol_bc.max(resolution)) {
        return Err(Error::NoConvergence {
            iterations: sh.evaluations,
            detail: format!("cavity stress residual {:e} exceeds tolerance", bundle.bc_residual.as_f64()),
        });
    }
    Ok(bundle)
}

/// Reads `(r, r')` at the mesh nodes, which the integrator was forced to step onto.
fn sample_at_nodes<T: Scalar>(traj: &Trajectory<T, 2>, nodes: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let mut values = Vec::with_capacity(nodes.len());
    let mut slopes = Vec::with_capacity(nodes.len());
    let mut j = 0;
    let (ts, ys) = (traj.times(), traj.states());
    for &x in nodes {
        let s = x.ln();
        while j < ts.len() && ts[j] < s {
            j += 1;
        }
        let y = if j < ts.len() && ts[j] == s { ys[j] } else { traj.eval(s)? };
        values.push(x * y[0].exp());
        slopes.push(y[1].exp());
    }
    Ok((values, slopes))
}

/// One row of an `eps` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub eps: T,
    pub cavity: T,
    pub energy: T,
    pub sup_dist_affine: T,
    /// Sup distance to the previous (larger `eps`) solution on its domain.
    pub sup_dist_prev: T,
    /// Sup distance to the smallest-`eps` solution.
    pub sup_dist_final: T,
    pub status: String,
}

#[derive(Debug)]
pub struct SweepResult<T> {
    pub lambda: T,
    pub bundles: Vec<(T, Result<SolutionBundle<T>>)>,
    pub rows: Vec<SweepRow<T>>,
}

/// Checks that `eps_list` is nonempty, strictly decreasing and inside `(0, 1)`.
pub fn validate_eps_list<T: Scalar>(eps_list: &[T]) -> Result<()> {
    if eps_list.is_empty() {
        return Err(Error::InvalidParameter("eps list is empty".into()));
    }
    if let Some(e) = eps_list.iter().find(|e| !(**e > T::zero() && **e < T::one())) {
        return Err(Error::InvalidParameter(format!("eps {e} outside (0,1)")));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("eps list must be strictly decreasing".into()));
    }
    Ok(())
}

/// Solves for each `eps` in turn, warm-starting from the previous cavity radius.
pub fn eps_sweep<T: Scalar>(
    m: &MaterialLaw<T>,
    lambda: T,
    eps_list: &[T],
    opts: &SolverOptions<T>,
) -> Result<SweepResult<T>> {
    validate_eps_list(eps_list)?;
    let mut bundles = Vec::with_capacity(eps_list.len());
    let mut guess = None;
    for &eps in eps_list {
        let b = shoot_punctured_from(m, lambda, eps, opts, guess);
        if let Ok(ok) = &b {
            if ok.is_converged() {
                guess = Some(ok.cavity);
            }
        }
        bundles.push((eps, b));
    }
    let last_ok = bundles.iter().rev().find_map(|(_, b)| b.as_ref().ok());
    let nan = T::nan();
    let mut rows = Vec::with_capacity(bundles.len());
    let mut prev: Option<&SolutionBundle<T>> = None;
    for (eps, b) in &bundles {
        match b {
            Ok(b) => {
                let sup_dist_prev = match prev {
                    Some(p) => b.field.sup_distance(&p.field)?,
                    None => nan,
                };
                let sup_dist_final = match last_ok {
                    Some(f) => b.field.sup_distance(&f.field)?,
                    None => nan,
                };
                rows.push(SweepRow {
                    eps: *eps,
                    cavity: b.cavity,
                    energy: b.energy.modified,
                    sup_dist_affine: b.field.sup_distance_to_affine(lambda, *eps),
                    sup_dist_prev,
                    sup_dist_final,
                    status: b.status.as_str().to_string(),
                });
                prev = Some(b);
            }
            Err(e) => rows.push(SweepRow {
                eps: *eps,
                cavity: nan,
                energy: nan,
                sup_dist_affine: nan,
                sup_dist_prev: nan,
                sup_dist_final: nan,
                status: format!("failed: {e}"),
            }),
        }
    }
    Ok(SweepResult { lambda, bundles, rows })
}

/// Writes `eps,cavity,energy,sup_dist_affine,sup_dist_prev`; failed rows hold `NaN`.
pub fn write_sweep_csv<T: Scalar>(rows: &[SweepRow<T>], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["eps", "cavity", "energy", "sup_dist_affine", "sup_dist_prev"])?;
    for r in rows {
        w.write_record([sci(r.eps), sci(r.cavity), sci(r.energy), sci(r.sup_dist_affine), sci(r.sup_dist_prev)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStatus {
    Converged,
    MaxSteps,
    /// The line search failed; the best iterate is returned.
    Stagnated,
}

#[derive(Debug, Clone)]
pub struct FlowOptions<T> {
    pub max_steps: usize,
    /// Stop once the preconditioned gradient norm falls by this factor.
    pub grad_reduction: T,
    pub armijo: T,
    pub max_halvings: usize,
    /// Starting field; the affine field on the mesh when `None`.
    pub initial: Option<RadialField<T>>,
}

impl<T: Scalar> Default for FlowOptions<T> {
    fn default() -> Self {
        Self { max_steps: 3000, grad_reduction: lit(1e-6), armijo: lit(1e-4), max_halvings: 60, initial: None }
    }
}

#[derive(Debug, Clone)]
pub struct FlowOutcome<T> {
    pub field: RadialField<T>,
    pub status: FlowStatus,
    pub steps: usize,
    pub initial_energy: T,
    pub energy: T,
    pub initial_gradient: T,
    pub gradient: T,
}

/// Discrete modified energy of nodal values `r` (no admissibility check beyond the strain guard).
fn discrete_energy<T: Scalar>(m: &MaterialLaw<T>, nodes: &[T], weights: &[T], r: &[T]) -> Result<T> {
    let mut sum = T::zero();
    for i in 0..weights.len() {
        let nu = (r[i + 1] - r[i]) / (nodes[i + 1] - nodes[i]);
        let v = (r[i] + r[i + 1]) / (nodes[i] + nodes[i + 1]);
        sum = sum + weights[i] * m.phi_hat(nu, v)?;
    }
    Ok(sum - energy::modified_energy_constant(m, r[r.len() - 1]))
}

fn raw_gradient<T: Scalar>(m: &MaterialLaw<T>, nodes: &[T], weights: &[T], r: &[T]) -> Result<Vec<T>> {
    let nm1 = T::from_usize_lossy(m.dim() - 1);
    let mut g = vec![T::zero(); r.len()];
    for i in 0..weights.len() {
        let dx = nodes[i + 1] - nodes[i];
        let sx = nodes[i] + nodes[i + 1];
        let nu = (r[i + 1] - r[i]) / dx;
        let v = (r[i] + r[i + 1]) / sx;
        let p1 = m.phi_hat_1(nu, v)? / dx;
        let pv = nm1 * m.phi_hat_2(nu, v)? / sx;
        g[i] = g[i] + weights[i] * (pv - p1);
        g[i + 1] = g[i + 1] + weights[i] * (pv + p1);
    }
    Ok(g)
}

/// Gradient of the discrete modified energy with respect to every nodal value
/// (the last entry excludes the `lambda^n ln lambda` constant).
pub fn discrete_gradient<T: Scalar>(m: &MaterialLaw<T>, f: &RadialField<T>) -> Result<Vec<T>> {
    let w = f.mesh().cell_weights(m.dim());
    raw_gradient(m, f.nodes(), &w, f.values())
}

/// Weighted `H^1` metric on the free nodes `0..N-1` as a tridiagonal `(lower, diag, upper)`.
fn sobolev_metric<T: Scalar>(nodes: &[T], weights: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
    let k = nodes.len() - 1;
    let quarter = lit::<T>(0.25);
    let mut diag = vec![T::zero(); k];
    let mut off = vec![T::zero(); k.saturating_sub(1)];
    for i in 0..weights.len() {
        let dx = nodes[i + 1] - nodes[i];
        let rm = lit::<T>(0.5) * (nodes[i] + nodes[i + 1]);
        let a = weights[i] / (dx * dx);
        let b = weights[i] * quarter / (rm * rm);
        diag[i] = diag[i] + a + b;
        if i + 1 < k {
            diag[i + 1] = diag[i + 1] + a + b;
            off[i] = off[i] + b - a;
        }
    }
    (off.clone(), diag, off)
}

/// Thomas algorithm for a symmetric positive definite tridiagonal system.
fn solve_tridiagonal<T: Scalar>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    c[0] = if n > 1 { upper[0] / diag[0] } else { T::zero() };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - lower[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = upper[i] / den;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / den;
    }
    for i in (0..n - 1).rev() {
        d[i] = d[i] - c[i] * d[i + 1];
    }
    d
}

fn admissible<T: Scalar>(r: &[T]) -> bool {
    r[0] >= T::zero() && r.iter().all(|x| x.is_finite()) && r.windows(2).all(|w| w[1] > w[0])
}

/// Preconditioned gradient descent on the discrete modified energy.
///
/// `r(1) = lambda` is held fixed and `r(R_0) >= 0` is enforced by projection.
/// Directions are Sobolev gradients (the Euclidean gradient mapped through a
/// weighted `H^1` metric); steps come from Armijo backtracking with trial
/// points that lose strict monotonicity rejected.
pub fn gradient_flow_minimize<T: Scalar>(
    m: &MaterialLaw<T>,
    lambda: T,
    mesh: &Mesh<T>,
    opts: &FlowOptions<T>,
) -> Result<FlowOutcome<T>> {
    let start = match &opts.initial {
        Some(f) => {
            if f.mesh() != mesh || f.lambda() != lambda || f.dim() != m.dim() {
                return Err(Error::InvalidParameter("initial field does not match mesh, lambda or dimension".into()));
            }
            f.clone()
        }
        None => RadialField::affine(mesh.clone(), lambda, m.dim())?,
    };
    let nodes = mesh.nodes();
    let weights = mesh.cell_weights(m.dim());
    let (lo, di, up) = sobolev_metric(nodes, &weights);
    let free = nodes.len() - 1;

    let mut r = start.values().to_vec();
    let mut e = discrete_energy(m, nodes, &weights, &r)?;
    let initial_energy = e;
    let direction = |r: &[T]| -> Result<(Vec<T>, T)> {
        let g = raw_gradient(m, nodes, &weights, r)?;
        let d = solve_tridiagonal(&lo, &di, &up, &g[..free]);
        let gd = g[..free].iter().zip(&d).fold(T::zero(), |acc, (a, b)| acc + *a * *b);
        Ok((d, gd.max(T::zero()).sqrt()))
    };
    let (mut d, mut gnorm) = direction(&r)?;
    let initial_gradient = gnorm;
    let mut alpha = T::one();
    let mut status = FlowStatus::MaxSteps;
    let mut steps = 0;
    let mut trial = r.clone();
    while steps < opts.max_steps {
        if gnorm <= opts.grad_reduction * initial_gradient || gnorm == T::zero() {
            status = FlowStatus::Converged;
            break;
        }
        let slope = gnorm * gnorm;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            for i in 0..free {
                trial[i] = r[i] - alpha * d[i];
            }
            trial[0] = trial[0].max(T::zero());
            if admissible(&trial) {
                if let Ok(et) = discrete_energy(m, nodes, &weights, &trial) {
                    if et <= e - opts.armijo * alpha * slope {
                        accepted = true;
                        e = et;
                        break;
                    }
                }
            }
            alpha = alpha * lit(0.5);
        }
        if !accepted {
            status = FlowStatus::Stagnated;
            break;
        }
        std::mem::swap(&mut r, &mut trial);
        steps += 1;
        alpha = (alpha * lit(2.0)).min(lit(1e6));
        (d, gnorm) = direction(&r)?;
    }
    let field = RadialField::new(mesh.clone(), r, m.dim())?;
    Ok(FlowOutcome { field, status, steps, initial_energy, energy: e, initial_gradient, gradient: gnorm })
}

/// Gradient-flow predictor on a coarse mesh followed by the shooting corrector
/// warm-started at the predicted cavity.
pub fn solve_with_predictor<T: Scalar>(
    m: &MaterialLaw<T>,
    lambda: T,
    eps: T,
    opts: &SolverOptions<T>,
    flow: &FlowOptions<T>,
    predictor_nodes: usize,
) -> Result<(FlowOutcome<T>, SolutionBundle<T>)> {
    check_problem(lambda, eps)?;
    let mesh = Mesh::graded(eps, predictor_nodes)?;
    let pred = gradient_flow_minimize(m, lambda, &mesh, flow)?;
    let guess = pred.field.cavity();
    let guess = (guess > T::zero()).then_some(guess);
    let bundle = shoot_punctured_from(m, lambda, eps, opts, guess)?;
    Ok((pred, bundle))
}

/// Critical displacement and the reconstructed critical profile.
#[derive(Debug, Clone)]
pub struct CriticalResult<T> {
    pub lambda_c: T,
    pub omega_star: T,
    /// Relative mismatch between `That(infinity) = g(lambda_c)` and the integral of `dThat/dR`
    /// along the reconstructed profile.
    pub integral_check: T,
    pub bar_lambda: T,
    /// Limit of `r_c(R)/R` along the reconstructed profile.
    pub lambda_c_profile: T,
    /// `(omega, That)` trajectory of the stress initial value problem.
    pub ivp: Trajectory<T, 1>,
    /// `(ln R, [v, nu, int dThat])` of the critical profile, normalized by `r_c(R_0) = 1`.
    pub profile: Trajectory<T, 3>,
}

impl<T: Scalar> CriticalResult<T> {
    /// Smallest reference radius covered by the reconstructed profile.
    pub fn profile_start(&self) -> T {
        self.profile.times()[0].exp()
    }

    /// `r_c(R)` for `R` in the reconstructed range.
    pub fn rc(&self, x: T) -> Result<T> {
        Ok(x * self.profile.eval(x.ln())?[0])
    }

    /// `alpha` with `r_c(alpha)/alpha = lambda`, for `lambda` above `lambda_c`.
    pub fn alpha_for(&self, lambda: T) -> Result<T> {
        let ts = self.profile.times();
        let ys = self.profile.states();
        let i = ys
            .windows(2)
            .position(|w| (w[0][0] - lambda) * (w[1][0] - lambda) <= T::zero())
            .ok_or_else(|| Error::InvalidParameter(format!("lambda {lambda} not attained by r_c(R)/R")))?;
        let f = |s: T| -> Result<T> { Ok(self.profile.eval(s)?[0] - lambda) };
        let root = brent(f, ts[i], ts[i + 1], ys[i][0] - lambda, ys[i + 1][0] - lambda, T::epsilon(), T::zero(), 200)?;
        Ok(root.x.exp())
    }

    /// Writes the `(omega, That)` trajectory as `x,y1`.
    pub fn write_ivp_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.ivp.write_csv(path)
    }
}

const FROZEN_STEP: f64 = 1e-8;
const ANCHOR: f64 = 1e-6;

/// Critical displacement from the stress initial value problem in `omega = R/r`.
///
/// The first step of size `1e-8` freezes the right-hand side at `omega = 0`;
/// adaptive integration then runs until `That(omega) = g(1/omega)`, where the
/// trajectory meets the homogeneous states, and `lambda_c = 1/omega*`.
pub fn critical_lambda<T: Scalar>(m: &MaterialLaw<T>, opts: &SolverOptions<T>) -> Result<CriticalResult<T>> {
    let bar_lambda = m.bar_lambda()?;
    let h0 = lit::<T>(FROZEN_STEP);
    let t1 = h0 * dynamics::ivp_t_rhs(m, dynamics::OmegaState { omega: T::zero(), that: T::zero() })?;
    let mut rhs = |w: T, y: &[T; 1]| Ok([dynamics::ivp_t_rhs(m, dynamics::OmegaState { omega: w, that: y[0] })?]);
    let mut event = |w: T, y: &[T; 1]| Ok(y[0] - m.homogeneous_stress(w.recip())?);
    let ivp = ode::integrate(&mut rhs, h0, [t1], T::one(), &opts.ode(), &[], Some(&mut event))?;
    let Some(omega_star) = ivp.event_time() else {
        return Err(Error::Config(format!(
            "stress trajectory never meets the homogeneous states on (0, 1] (bar lambda = {:e}); \
             the material is not stress free",
            bar_lambda.as_f64()
        )));
    };
    let lambda_c = omega_star.recip();

    // reconstruct r_c in s = ln R from the anchor omega_0, with r_c(R_0) = 1
    let w0 = lit::<T>(ANCHOR);
    let that0 = ivp.eval(w0)?[0];
    let v0 = w0.recip();
    let nu0 = m.invert_nu_hat_with(that0, v0, opts.tol_inv)?;
    let nm1 = T::from_usize_lossy(m.dim() - 1);
    let kappa = m.kappa();
    let k = m.dim() as i32 - 1;
    let mut auto = |_s: T, y: &[T; 3]| -> Result<[T; 3]> {
        let (v, nu) = (y[0], y[1]);
        let ratio = nu / v;
        Ok([nu - v, dynamics::scaled_acceleration(m, nu, v)?, nm1 * kappa * ratio * (T::one() - ratio.powi(k))])
    };
    let s0 = w0.ln();
    let profile = ode::integrate(&mut auto, s0, [v0, nu0, T::zero()], s0 + lit(60.0), &opts.ode(), &[], None)?;
    let end = profile.last_state();
    let g_c = m.homogeneous_stress(lambda_c)?;
    let total = that0 + end[2];
    let integral_check = ((g_c - total) / g_c).abs();
    Ok(CriticalResult {
        lambda_c,
        omega_star,
        integral_check,
        bar_lambda,
        lambda_c_profile: end[0],
        ivp,
        profile,
    })
}
