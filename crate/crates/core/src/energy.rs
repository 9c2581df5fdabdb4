//! Radial profiles on graded meshes and the quadratures and identities built on them.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::material::MaterialLaw;
use crate::scalar::{lit, Scalar};

/// Default number of mesh nodes.
pub const DEFAULT_NODES: usize = 4096;

const GAUSS_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Strictly increasing nodes `R_0 < ... < R_N = 1` with `R_0 >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    nodes: Vec<T>,
}

impl<T: Scalar> Mesh<T> {
    pub fn from_nodes(nodes: Vec<T>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidParameter(format!("mesh needs at least 2 nodes, got {}", nodes.len())));
        }
        if !(nodes[0] >= T::zero()) {
            return Err(Error::InvalidParameter(format!("mesh starts at {} < 0", nodes[0])));
        }
        if nodes[nodes.len() - 1] != T::one() {
            return Err(Error::InvalidParameter(format!(
                "mesh must end at R = 1, ends at {}",
                nodes[nodes.len() - 1]
            )));
        }
        if let Some(i) = (1..nodes.len()).find(|&i| !(nodes[i] > nodes[i - 1]) || !nodes[i].is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mesh nodes not strictly increasing at index {i}"
            )));
        }
        Ok(Self { nodes })
    }

    /// Log-uniform nodes `R_i = eps q^i` on `[eps, 1]`.
    ///
    /// The node count is raised if needed so that the first cell is at most `eps / 10`.
    pub fn graded(eps: T, nodes: usize) -> Result<Self> {
        if !(eps > T::zero() && eps < T::one()) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0,1), got {eps}")));
        }
        let span = -eps.ln();
        let min_cells = (span / lit::<T>(1.1).ln()).ceil().to_usize().unwrap_or(usize::MAX);
        let cells = nodes.max(2).saturating_sub(1).max(min_cells).max(1);
        let step = span / T::from_usize_lossy(cells);
        let mut r: Vec<T> = (0..=cells)
            .map(|i| (eps.ln() + step * T::from_usize_lossy(i)).exp())
            .collect();
        r[0] = eps;
        r[cells] = T::one();
        Self::from_nodes(r)
    }

    pub fn uniform(start: T, nodes: usize) -> Result<Self> {
        if !(start >= T::zero() && start < T::one()) {
            return Err(Error::InvalidParameter(format!("mesh start must lie in [0,1), got {start}")));
        }
        let cells = nodes.max(2) - 1;
        let h = (T::one() - start) / T::from_usize_lossy(cells);
        let mut r: Vec<T> = (0..=cells).map(|i| start + h * T::from_usize_lossy(i)).collect();
        r[cells] = T::one();
        Self::from_nodes(r)
    }

    /// Mesh with every cell split at its geometric (or arithmetic, if `R_0 = 0`) midpoint.
    pub fn refined(&self) -> Self {
        let mut out = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            out.push(w[0]);
            let mid = if w[0] > T::zero() { (w[0] * w[1]).sqrt() } else { lit::<T>(0.5) * w[1] };
            out.push(mid);
        }
        out.push(T::one());
        Self { nodes: out }
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn start(&self) -> T {
        self.nodes[0]
    }

    /// Exact `int_{R_i}^{R_{i+1}} R^(n-1) dR` per cell.
    pub fn cell_weights(&self, n: usize) -> Vec<T> {
        let nf = T::from_usize_lossy(n);
        self.nodes
            .windows(2)
            .map(|w| (w[1].powi(n as i32) - w[0].powi(n as i32)) / nf)
            .collect()
    }
}

/// Strictly increasing profile `r(R)` sampled on a mesh, with `r(1) = lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField<T> {
    mesh: Mesh<T>,
    values: Vec<T>,
    slopes: Option<Vec<T>>,
    dim: usize,
}

impl<T: Scalar> RadialField<T> {
    pub fn new(mesh: Mesh<T>, values: Vec<T>, dim: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidParameter(format!("dimension must be 2 or 3, got {dim}")));
        }
        if values.len() != mesh.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for {} mesh nodes",
                values.len(),
                mesh.len()
            )));
        }
        if !(values[0] >= T::zero()) || !values[0].is_finite() {
            return Err(Error::InvalidParameter(format!("r(R_0) = {} must be >= 0", values[0])));
        }
        if let Some(i) = (1..values.len()).find(|&i| !(values[i] > values[i - 1]) || !values[i].is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "profile not strictly increasing at node {i} (r = {}, previous {})",
                values[i],
                values[i - 1]
            )));
        }
        Ok(Self { mesh, values, slopes: None, dim })
    }

    /// Attaches exact nodal derivatives `r'(R_i)`, e.g. from an ODE solve.
    pub fn with_slopes(mut self, slopes: Vec<T>) -> Result<Self> {
        if slopes.len() != self.values.len() {
            return Err(Error::InvalidParameter("slope count does not match node count".into()));
        }
        if let Some(i) = slopes.iter().position(|s| !(*s > T::zero()) || !s.is_finite()) {
            return Err(Error::InvalidParameter(format!("nodal slope {} at node {i} is not positive", slopes[i])));
        }
        self.slopes = Some(slopes);
        Ok(self)
    }

    pub fn affine(mesh: Mesh<T>, lambda: T, dim: usize) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
        }
        let n = mesh.len();
        let values = mesh.nodes().iter().map(|&r| lambda * r).collect();
        Self::new(mesh, values, dim)?.with_slopes(vec![lambda; n])
    }

    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    pub fn nodes(&self) -> &[T] {
        self.mesh.nodes()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> T {
        self.values[self.values.len() - 1]
    }

    pub fn eps(&self) -> T {
        self.mesh.start()
    }

    /// `r(R_0)`, the cavity radius on a punctured domain.
    pub fn cavity(&self) -> T {
        self.values[0]
    }

    pub fn has_exact_slopes(&self) -> bool {
        self.slopes.is_some()
    }

    /// `(r_{i+1} - r_i) / (R_{i+1} - R_i)` per cell.
    pub fn cell_slopes(&self) -> Vec<T> {
        self.nodes()
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    /// Nodal `r'`: the attached exact slopes, else five-point finite differences.
    pub fn nodal_slopes(&self) -> Vec<T> {
        match &self.slopes {
            Some(s) => s.clone(),
            None => derivative(self.nodes(), &self.values),
        }
    }

    /// Nodal `v = r/R` (infinite at `R = 0`).
    pub fn stretches(&self) -> Vec<T> {
        self.nodes().iter().zip(&self.values).map(|(&x, &r)| r / x).collect()
    }

    /// Per node: the derivative of the cell to its right (the last cell for the last node).
    pub fn dr_column(&self) -> Vec<T> {
        let mut dr = self.cell_slopes();
        dr.push(dr[dr.len() - 1]);
        dr
    }

    pub fn jacobians(&self) -> Vec<T> {
        let k = self.dim as i32 - 1;
        self.dr_column()
            .iter()
            .zip(self.stretches())
            .map(|(&d, v)| d * v.powi(k))
            .collect()
    }

    /// Value at `R` in `[R_0, 1]`: cubic Hermite with exact slopes, linear otherwise.
    pub fn eval(&self, x: T) -> Result<T> {
        let nodes = self.nodes();
        let (a, b) = (nodes[0], nodes[nodes.len() - 1]);
        if !(x >= a && x <= b) {
            return Err(Error::InvalidParameter(format!("R = {x} outside field domain [{a}, {b}]")));
        }
        let i = match nodes.binary_search_by(|p| p.partial_cmp(&x).expect("finite nodes")) {
            Ok(i) => return Ok(self.values[i]),
            Err(i) => i - 1,
        };
        let (x0, x1) = (nodes[i], nodes[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        match &self.slopes {
            Some(s) => Ok(hermite(t, h, y0, y1, s[i], s[i + 1])),
            None => Ok(y0 + t * (y1 - y0)),
        }
    }

    /// `max_i |r_i - lambda R_i|` over nodes with `R_i >= from`.
    pub fn sup_distance_to_affine(&self, lambda: T, from: T) -> T {
        self.nodes()
            .iter()
            .zip(&self.values)
            .filter(|(&x, _)| x >= from)
            .fold(T::zero(), |acc, (&x, &r)| acc.max((r - lambda * x).abs()))
    }

    /// `max |self - other|` over the nodes of `self` that lie in the domain of `other`.
    pub fn sup_distance(&self, other: &RadialField<T>) -> Result<T> {
        let lo = other.eps();
        let mut d = T::zero();
        for (&x, &r) in self.nodes().iter().zip(&self.values) {
            if x >= lo {
                d = d.max((r - other.eval(x)?).abs());
            }
        }
        Ok(d)
    }

    /// Writes the `R,r,dr,v,jac` table.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["R", "r", "dr", "v", "jac"])?;
        let (dr, v, jac) = (self.dr_column(), self.stretches(), self.jacobians());
        for i in 0..self.values.len() {
            w.write_record([
                sci(self.nodes()[i]),
                sci(self.values[i]),
                sci(dr[i]),
                sci(v[i]),
                sci(jac[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `R` and `r` columns of a field or bundle table.
    pub fn read_csv(path: impl AsRef<Path>, dim: usize) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("missing column '{name}'")))
        };
        let (ci, cr) = (col("R")?, col("r")?);
        let mut xs = Vec::new();
        let mut rs = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |c: usize| -> Result<T> {
                let s = rec.get(c).unwrap_or("").trim();
                s.parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::Config(format!("row {}: cannot parse '{s}'", line + 2)))
            };
            xs.push(parse(ci)?);
            rs.push(parse(cr)?);
        }
        Self::new(Mesh::from_nodes(xs)?, rs, dim)
    }
}

#[inline]
fn hermite<T: Scalar>(t: T, h: T, y0: T, y1: T, d0: T, d1: T) -> T {
    let one = T::one();
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = two * t3 - three * t2 + one;
    let h10 = t3 - two * t2 + t;
    let h01 = -two * t3 + three * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

pub(crate) fn sci<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x)
}

/// Finite-difference weights for derivatives `0..=m` at `z` on arbitrary `x` (Fornberg's recursion).
pub fn fd_weights<T: Scalar>(z: T, x: &[T], m: usize) -> Vec<Vec<T>> {
    let np = x.len();
    let mut c = vec![vec![T::zero(); np]; m + 1];
    if np == 0 {
        return c;
    }
    let mut c1 = T::one();
    let mut c4 = x[0] - z;
    c[0][0] = T::one();
    for i in 1..np {
        let mn = i.min(m);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    let kf = T::from_usize_lossy(k);
                    c[k][i] = c1 * (kf * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                let kf = T::from_usize_lossy(k);
                c[k][j] = (c4 * c[k][j] - kf * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First derivative of nodal data by five-point (fewer on short meshes) Fornberg stencils.
pub fn derivative<T: Scalar>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let width = n.min(5);
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(width / 2).min(n - width);
            let xs = &x[start..start + width];
            let w = fd_weights(x[i], xs, 1);
            w[1].iter().zip(&y[start..start + width]).fold(T::zero(), |acc, (&c, &v)| acc + c * v)
        })
        .collect()
}

/// Logarithmic derivative `R d/dR` of nodal data; differences are taken in `ln R`.
fn log_derivative<T: Scalar>(x: &[T], y: &[T]) -> Result<Vec<T>> {
    if !(x[0] > T::zero()) {
        return Err(Error::InvalidParameter("logarithmic derivative needs R_0 > 0".into()));
    }
    let s: Vec<T> = x.iter().map(|v| v.ln()).collect();
    Ok(derivative(&s, y))
}

/// Energies and identity residuals of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport<T> {
    pub modified: T,
    pub original_annulus: T,
    pub boundary_formula: T,
    pub identity_residuals: BTreeMap<String, T>,
}

impl<T: Scalar> EnergyReport<T> {
    pub fn is_finite(&self) -> bool {
        self.modified.is_finite()
            && self.original_annulus.is_finite()
            && self.boundary_formula.is_finite()
            && self.identity_residuals.values().all(|v| v.is_finite())
    }
}

fn check_dims<T: Scalar>(m: &MaterialLaw<T>, f: &RadialField<T>) -> Result<()> {
    if m.dim() != f.dim() {
        return Err(Error::InvalidParameter(format!(
            "material dimension {} differs from field dimension {}",
            m.dim(),
            f.dim()
        )));
    }
    Ok(())
}

/// Cell-midpoint strains `(nu, v)`: `nu = dr/dR`, `v = (r_a + r_b)/(R_a + R_b)`.
pub fn cell_strains<T: Scalar>(f: &RadialField<T>) -> Vec<(T, T)> {
    f.nodes()
        .windows(2)
        .zip(f.values().windows(2))
        .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0]), (y[0] + y[1]) / (x[0] + x[1])))
        .collect()
}

fn quadrature<T: Scalar>(
    f: &RadialField<T>,
    mut density: impl FnMut(T, T) -> Result<T>,
) -> Result<T> {
    let w = f.mesh().cell_weights(f.dim());
    let mut sum = T::zero();
    for (i, ((nu, v), wi)) in cell_strains(f).into_iter().zip(w).enumerate() {
        let e = density(nu, v).map_err(|e| cell_error(f, i, e))?;
        if !e.is_finite() {
            return Err(cell_error(f, i, Error::non_finite("energy density", format!("{e}"))));
        }
        sum = sum + wi * e;
    }
    Ok(sum)
}

fn cell_error<T: Scalar>(f: &RadialField<T>, i: usize, e: Error) -> Error {
    Error::non_finite(
        format!("cell {i} (R = {:e})", f.nodes()[i].as_f64()),
        e.to_string(),
    )
}

/// `kappa (n-1)/n lambda^n ln lambda`.
pub fn modified_energy_constant<T: Scalar>(m: &MaterialLaw<T>, lambda: T) -> T {
    let nf = T::from_usize_lossy(m.dim());
    m.kappa() * (nf - T::one()) / nf * lambda.powi(m.dim() as i32) * lambda.ln()
}

/// Closed form of the modified energy of `r = lambda R` on the full ball.
pub fn affine_energy<T: Scalar>(m: &MaterialLaw<T>, lambda: T) -> Result<T> {
    let ln = lambda.powi(m.dim() as i32);
    Ok((m.kappa() * ln + m.volumetric().h(ln)?) / T::from_usize_lossy(m.dim()))
}

/// Midpoint quadrature of `R^(n-1) PhiHat` over the mesh minus the `lambda^n ln lambda` constant.
pub fn modified_energy<T: Scalar>(m: &MaterialLaw<T>, f: &RadialField<T>) -> Result<T> {
    check_dims(m, f)?;
    let integral = quadrature(f, |nu, v| m.phi_hat(nu, v))?;
    Ok(integral - modified_energy_constant(m, f.lambda()))
}

/// Midpoint quadrature of `R^(n-1) Phi` over the mesh.
pub fn original_energy_annulus<T: Scalar>(m: &MaterialLaw<T>, f: &RadialField<T>) -> Result<T> {
    check_dims(m, f)?;
    quadrature(f, |nu, v| m.phi(nu, v))
}

/// Energy from boundary values only, with the cavity radius taken as `r(R_0)`
/// and the limit term evaluated at `R_0`.
pub fn boundary_energy_formula<T: Scalar>(m: &MaterialLaw<T>, f: &RadialField<T>) -> Result<T> {
    check_dims(m, f)?;
    let n = m.dim() as i32;
    let nf = T::from_usize_lossy(m.dim());
    let k1 = m.kappa() * (nf - T::one());
    let slopes = f.nodal_slopes();
    let last = slopes.len() - 1;
    let (p, lambda) = (slopes[last], f.lambda());
    let outer = (m.phi(p, lambda)? - p * m.phi_1(p, lambda)? + lambda.powi(n) * m.cauchy_stress(p, lambda)?) / nf;
    let eps = f.eps();
    let c = f.cavity();
    if !(eps > T::zero()) || !(c > T::zero()) {
        return Ok(outer);
    }
    let t_eps = m.cauchy_stress(slopes[0], c / eps)?;
    let cn = c.powi(n);
    Ok(outer - k1 / (nf * nf) * cn - (t_eps + k1 * (c / eps).ln()) * cn / nf)
}

/// `|int R^(n-1) jac ln(r/R) - int_{r(R_0)}^{lambda} u^(n-1) ln u du + int R^(n-1) jac ln R|`
/// on the piecewise-linear interpolant, by four-point Gauss rules per cell.
pub fn identity_bddbe_residual<T: Scalar>(m: &MaterialLaw<T>, f: &RadialField<T>) -> Result<T> {
    check_dims(m, f)?;
    let n = m.dim() as i32;
    let half = lit::<T>(0.5);
    let (mut a, mut c) = (T::zero(), T::zero());
    for (x, y) in f.nodes().windows(2).zip(f.values().windows(2)) {
        let h = x[1] - x[0];
        let slope = (y[1] - y[0]) / h;
        for (&g, &gw) in GAUSS_NODES.iter().zip(&GAUSS_WEIGHTS) {
            let t = half * (T::one() + lit::<T>(g));
            let xr = x[0] + h * t;
            let r = y[0] + (y[1] - y[0]) * t;
            let w = lit::<T>(gw) * half * h;
            let jac_w = w * xr.powi(n - 1) * slope * (r / xr).powi(n - 1);
            a = a + jac_w * (r / xr).ln();
            c = c + jac_w * xr.ln();
        }
    }
    let b = log_moment(f.lambda(), n) - log_moment(f.cavity(), n);
    let res = (a - b + c).abs();
    if !res.is_finite() {
        return Err(Error::non_finite("identity_bddbe_residual", format!("{res}")));
    }
    Ok(res)
}

/// Antiderivative `u^n (ln u / n - 1/n^2)` of `u^(n-1) ln u`, zero at `u = 0`.
fn log_moment<T: Scalar>(u: T, n: i32) -> T {
    if u == T::zero() {
        return T::zero();
    }
    let nf = T::from_i32(n).expect("small integer");
    u.powi(n) * (u.ln() / nf - T::one() / (nf * nf))
}

/// Nodal terms of the radial divergence identity: `(R^(n-1) Phi, (R^n/n)(Phi - r' Phi_1) + (r^n/n) T)`.
fn divergence_terms<T: Scalar>(m: &MaterialLaw<T>, f: &RadialField<T>) -> Result<(Vec<T>, Vec<T>)> {
    let n = m.dim() as i32;
    let nf = T::from_usize_lossy(m.dim());
    let slopes = f.nodal_slopes();
    let mut lhs = Vec::with_capacity(slopes.len());
    let mut bracket = Vec::with_capacity(slopes.len());
    for ((&x, &r), &p) in f.nodes().iter().zip(f.values()).zip(&slopes) {
        let v = r / x;
        let phi = m.phi(p, v)?;
        lhs.push(x.powi(n - 1) * phi);
        bracket.push(x.powi(n) / nf * (phi - p * m.phi_1(p, v)?) + r.powi(n) / nf * m.cauchy_stress(p, v)?);
    }
    Ok((lhs, bracket))
}

/// `max_i |R^(n-1) Phi - d/dR[(R^n/n)(Phi - r' Phi_1) + (r^n/n) T]|` over interior nodes.
pub fn identity_divergence_residual<T: Scalar>(m: &MaterialLaw<T>, f: &RadialField<T>) -> Result<T> {
    check_dims(m, f)?;
    let (lhs, bracket) = divergence_terms(m, f)?;
    let d = log_derivative(f.nodes(), &bracket)?;
    let k = lhs.len();
    Ok((1..k - 1).fold(T::zero(), |acc, i| acc.max((lhs[i] - d[i] / f.nodes()[i]).abs())))
}

/// `max_i |R^(n-1) Phi|`, the natural scale of the divergence residual.
pub fn divergence_scale<T: Scalar>(m: &MaterialLaw<T>, f: &RadialField<T>) -> Result<T> {
    check_dims(m, f)?;
    let (lhs, _) = divergence_terms(m, f)?;
    Ok(lhs.iter().fold(T::zero(), |acc, v| acc.max(v.abs())))
}

/// Residual of the flux-form equilibrium equation `(R^(n-1) Phi_1)' = (n-1) R^(n-2) Phi_2`,
/// multiplied by `R` and maximized over interior nodes.
pub fn equilibrium_residual<T: Scalar>(m: &MaterialLaw<T>, f: &RadialField<T>) -> Result<T> {
    check_dims(m, f)?;
    let n = m.dim() as i32;
    let nm1 = T::from_usize_lossy(m.dim() - 1);
    let slopes = f.nodal_slopes();
    let mut flux = Vec::with_capacity(slopes.len());
    let mut source = Vec::with_capacity(slopes.len());
    for ((&x, &r), &p) in f.nodes().iter().zip(f.values()).zip(&slopes) {
        let v = r / x;
        flux.push(x.powi(n - 1) * m.phi_1(p, v)?);
        source.push(nm1 * x.powi(n - 1) * m.phi_2(p, v)?);
    }
    let d = log_derivative(f.nodes(), &flux)?;
    let k = flux.len();
    Ok((1..k - 1).fold(T::zero(), |acc, i| acc.max((d[i] - source[i]).abs())))
}

/// All energies plus the identity residuals (`bddbe`, `divergence`, `equilibrium`).
pub fn energy_report<T: Scalar>(m: &MaterialLaw<T>, f: &RadialField<T>) -> Result<EnergyReport<T>> {
    let mut identity_residuals = BTreeMap::new();
    identity_residuals.insert("bddbe".to_string(), identity_bddbe_residual(m, f)?);
    if f.eps() > T::zero() && f.cavity() > T::zero() {
        identity_residuals.insert("divergence".to_string(), identity_divergence_residual(m, f)?);
        identity_residuals.insert("divergence_scale".to_string(), divergence_scale(m, f)?);
        identity_residuals.insert("equilibrium".to_string(), equilibrium_residual(m, f)?);
    }
    Ok(EnergyReport {
        modified: modified_energy(m, f)?,
        original_annulus: original_energy_annulus(m, f)?,
        boundary_formula: boundary_energy_formula(m, f)?,
        identity_residuals,
    })
}
