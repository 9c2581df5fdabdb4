//! Reproduction harness: configuration, the `solve`, `sweep-eps`, `critical`,
//! `incompressible` and `check` commands, and the run manifest.
//!
//! Each command writes into `output.directory` and finishes with a
//! `manifest.json` listing every file it produced.

pub mod config;
pub mod plot;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{self, sci, Mesh, RadialField};
use crate::error::{Error, Result};
use crate::material::MaterialLaw;
use crate::scalar::Scalar;
use crate::solver::{self, SolutionBundle};

pub use config::{ExperimentConfig, LawKind, MaterialConfig, OutputConfig, RunConfig};
use plot::Series;

pub const EXIT_OK: i32 = 0;
/// Check failures and I/O errors.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => EXIT_CONFIG,
        e if e.is_numerical() => EXIT_NO_CONVERGENCE,
        _ => EXIT_FAILURE,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    /// Paths relative to the output directory.
    pub files: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RunManifest {
    fn new(command: &str, cfg: &ExperimentConfig, columns: &[&str]) -> Self {
        Self {
            command: command.to_string(),
            config_hash: cfg.hash(),
            files: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(dir.as_ref().join(MANIFEST))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Files listed in the manifest that are missing from `dir`.
    pub fn missing_files(&self, dir: impl AsRef<Path>) -> Vec<String> {
        self.files.iter().filter(|f| !dir.as_ref().join(f).is_file()).cloned().collect()
    }
}

pub const MANIFEST: &str = "manifest.json";

/// What a command produced; `failures` counts rows that did not succeed.
#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub manifest: RunManifest,
    pub directory: PathBuf,
    pub failures: usize,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
    /// Exit code if `failures > 0`.
    pub failure_code: i32,
}

impl CommandOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures == 0 {
            EXIT_OK
        } else {
            self.failure_code
        }
    }
}

struct Output {
    dir: PathBuf,
    manifest: RunManifest,
    plots: bool,
}

impl Output {
    fn create(cfg: &ExperimentConfig, command: &str, columns: &[&str]) -> Result<Self> {
        let dir = cfg.output.directory.clone();
        fs::create_dir_all(&dir)?;
        let mut out = Self { dir, manifest: RunManifest::new(command, cfg, columns), plots: cfg.output.emit_plots };
        let path = out.path("config.txt");
        fs::write(path, cfg.to_text())?;
        Ok(out)
    }

    /// Path for `name`, registered in the manifest.
    fn path(&mut self, name: &str) -> PathBuf {
        if !self.manifest.files.iter().any(|f| f == name) {
            self.manifest.files.push(name.to_string());
        }
        self.dir.join(name)
    }

    fn svg(&mut self, name: &str, title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> Result<()> {
        if self.plots {
            let p = self.path(name);
            plot::write_svg(p, title, xlabel, ylabel, series)?;
        }
        Ok(())
    }

    fn finish(mut self, failures: usize, summary: Vec<String>, failure_code: i32) -> Result<CommandOutcome> {
        let path = self.dir.join(MANIFEST);
        self.manifest.files.push(MANIFEST.to_string());
        fs::write(path, serde_json::to_string_pretty(&self.manifest)? + "\n")?;
        Ok(CommandOutcome { manifest: self.manifest, directory: self.dir, failures, summary, failure_code })
    }
}

fn tag(lambda: f64, eps: f64) -> String {
    format!("lambda{lambda}_eps{eps}")
}

fn xs(b: &SolutionBundle<f64>) -> &[f64] {
    b.field.nodes()
}

/// Profile, full bundle table and metadata for one solution.
fn write_bundle(out: &mut Output, b: &SolutionBundle<f64>, name: &str) -> Result<()> {
    b.field.write_csv(out.path(&format!("profile_{name}.csv")))?;
    b.write_csv(out.path(&format!("bundle_{name}.csv")))?;
    b.write_metadata(out.path(&format!("meta_{name}.txt")))?;
    Ok(())
}

fn material(cfg: &ExperimentConfig) -> Result<MaterialLaw<f64>> {
    cfg.material.build().map_err(|e| Error::Config(e.to_string()))
}

/// Solves at the configured `lambda` and the smallest `eps` of the list.
pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let m = material(cfg)?;
    let (lambda, eps) = (cfg.run.lambda, cfg.run.eps());
    let bundle = solver::shoot_punctured(&m, lambda, eps, &cfg.solver_options())?;
    let mut out = Output::create(cfg, "solve", &["lambda", "eps", "cavity", "energy", "status"])?;
    let name = tag(lambda, eps);
    write_bundle(&mut out, &bundle, &name)?;
    out.svg(
        &format!("profile_{name}.svg"),
        &format!("r(R), lambda = {lambda}, eps = {eps}"),
        "R",
        "r",
        &[Series::new("r", xs(&bundle), bundle.field.values())],
    )?;
    out.svg(
        &format!("stress_{name}.svg"),
        &format!("modified radial stress, lambda = {lambda}, eps = {eps}"),
        "R",
        "That",
        &[Series::new("That", xs(&bundle), &bundle.that_profile)],
    )?;
    out.manifest.rows.push(vec![
        sci(lambda),
        sci(eps),
        sci(bundle.cavity),
        sci(bundle.energy.modified),
        bundle.status.as_str().to_string(),
    ]);
    let summary = bundle.metadata().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
    out.finish(0, summary, EXIT_NO_CONVERGENCE)
}

/// Solves along the `eps` list with warm starts and writes the convergence table.
pub fn cmd_sweep_eps(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let m = material(cfg)?;
    let lambda = cfg.run.lambda;
    let sweep = solver::eps_sweep(&m, lambda, &cfg.run.eps_list, &cfg.solver_options())?;
    let mut out = Output::create(cfg, "sweep-eps", &["eps", "cavity", "energy", "sup_dist_affine", "sup_dist_prev", "status"])?;
    solver::write_sweep_csv(&sweep.rows, out.path(&format!("sweep_lambda{lambda}.csv")))?;
    let mut profiles = Vec::new();
    let mut stresses = Vec::new();
    let mut summary = Vec::new();
    let mut failures = 0;
    for ((eps, b), row) in sweep.bundles.iter().zip(&sweep.rows) {
        match b {
            Ok(b) => {
                write_bundle(&mut out, b, &tag(lambda, *eps))?;
                profiles.push(Series::new(format!("eps = {eps}"), xs(b), b.field.values()));
                stresses.push(Series::new(format!("eps = {eps}"), xs(b), &b.that_profile));
            }
            Err(_) => failures += 1,
        }
        summary.push(format!(
            "eps={} cavity={} energy={} sup_dist_affine={} sup_dist_prev={} status={}",
            sci(row.eps),
            sci(row.cavity),
            sci(row.energy),
            sci(row.sup_dist_affine),
            sci(row.sup_dist_prev),
            row.status
        ));
        out.manifest.rows.push(vec![
            sci(row.eps),
            sci(row.cavity),
            sci(row.energy),
            sci(row.sup_dist_affine),
            sci(row.sup_dist_prev),
            row.status.clone(),
        ]);
    }
    out.svg(&format!("sweep_profiles_lambda{lambda}.svg"), &format!("r_eps, lambda = {lambda}"), "R", "r", &profiles)?;
    out.svg(
        &format!("sweep_stress_lambda{lambda}.svg"),
        &format!("modified radial stress, lambda = {lambda}"),
        "R",
        "That",
        &stresses,
    )?;
    out.finish(failures, summary, EXIT_NO_CONVERGENCE)
}

/// Critical displacement, the stress trajectory and the reconstructed critical profile.
pub fn cmd_critical(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let m = material(cfg)?;
    let res = solver::critical_lambda(&m, &cfg.solver_options())?;
    let mut out = Output::create(cfg, "critical", &["lambda_c", "omega_star", "integral_check", "bar_lambda"])?;
    let lines = vec![
        format!("lambda_c={}", sci(res.lambda_c)),
        format!("omega_star={}", sci(res.omega_star)),
        format!("integral_check={}", sci(res.integral_check)),
        format!("bar_lambda={}", sci(res.bar_lambda)),
        format!("lambda_c_profile={}", sci(res.lambda_c_profile)),
    ];
    fs::write(out.path("critical.txt"), lines.join("\n") + "\n")?;
    res.write_ivp_csv(out.path("critical_ivp.csv"))?;
    let rs: Vec<f64> = res.profile.times().iter().map(|s| s.exp()).collect();
    let v: Vec<f64> = res.profile.states().iter().map(|y| y[0]).collect();
    {
        let mut w = csv::Writer::from_path(out.path("critical_profile.csv"))?;
        w.write_record(["R", "rc", "v", "nu"])?;
        for ((x, y), vi) in rs.iter().zip(res.profile.states()).zip(&v) {
            w.write_record([sci(*x), sci(x * vi), sci(*vi), sci(y[1])])?;
        }
        w.flush()?;
    }
    let omega: Vec<f64> = res.ivp.times().to_vec();
    let that: Vec<f64> = res.ivp.states().iter().map(|y| y[0]).collect();
    let g: Vec<f64> = omega.iter().map(|w| m.homogeneous_stress(w.recip()).unwrap_or(f64::NAN)).collect();
    out.svg(
        "critical_ivp.svg",
        "modified radial stress along the critical trajectory",
        "omega = R/r",
        "That",
        &[Series::new("That(omega)", &omega, &that), Series::new("g(1/omega)", &omega, &g)],
    )?;
    out.svg("critical_profile.svg", "critical profile r_c(R)/R", "R", "r_c/R", &[Series::new("r_c/R", &rs, &v)])?;
    out.manifest.rows.push(vec![sci(res.lambda_c), sci(res.omega_star), sci(res.integral_check), sci(res.bar_lambda)]);
    out.finish(0, lines, EXIT_NO_CONVERGENCE)
}

/// `(R^n + lambda^n - 1)^(1/n)`.
pub fn incompressible_radius<T: Scalar>(n: usize, lambda: T, x: T) -> T {
    (x.powi(n as i32) + lambda.powi(n as i32) - T::one()).powf(T::from_usize_lossy(n).recip())
}

/// Modified energy of the incompressible map `r = (R^n + lambda^n - 1)^(1/n)` for
/// `Phihat_inc(v) = (kappa/n) v^(-n(n-1)) + D + kappa((n-1)/n + (n-1) ln v)`.
///
/// The quadrature is the one of [`energy::modified_energy`] on `mesh`, which may start at `R = 0`.
pub fn incompressible_energy<T: Scalar>(n: usize, kappa: T, d: T, lambda: T, mesh: &Mesh<T>) -> Result<T> {
    if !(lambda >= T::one()) {
        return Err(Error::InvalidParameter(format!("incompressible map needs lambda >= 1, got {lambda}")));
    }
    let nf = T::from_usize_lossy(n);
    let nm1 = T::from_usize_lossy(n - 1);
    let ni = n as i32;
    let x = mesh.nodes();
    let r: Vec<T> = x.iter().map(|&x| incompressible_radius(n, lambda, x)).collect();
    let weights = mesh.cell_weights(n);
    let mut sum = T::zero();
    for (i, w) in weights.iter().enumerate() {
        let v = (r[i] + r[i + 1]) / (x[i] + x[i + 1]);
        let phi = kappa / nf * v.powi(-ni * (ni - 1)) + d + kappa * (nm1 / nf + nm1 * v.ln());
        sum = sum + *w * phi;
    }
    Ok(sum - kappa * nm1 / nf * lambda.powi(ni) * lambda.ln())
}

/// Mesh `[0] + graded(1e-9, nodes)` for the incompressible reference energy.
pub fn incompressible_mesh(nodes: usize) -> Result<Mesh<f64>> {
    let g = Mesh::graded(1e-9, nodes)?;
    let mut xs = vec![0.0];
    xs.extend_from_slice(g.nodes());
    Mesh::from_nodes(xs)
}

#[derive(Debug, Clone)]
pub struct IncompressibleRow {
    pub c: f64,
    pub energy: f64,
    pub cavity: f64,
    pub sup_dist_inc: f64,
    pub status: String,
}

/// Solves the penalty problem for every `C` of `c_list` and compares with the incompressible map.
pub fn cmd_incompressible(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    if cfg.material.kind != LawKind::Penalty {
        return Err(Error::Config("incompressible needs material.h.kind = penalty".into()));
    }
    material(cfg)?;
    let (lambda, eps) = (cfg.run.lambda, cfg.run.eps());
    if !(lambda > 1.0) {
        return Err(Error::Config(format!("incompressible needs lambda > 1, got {lambda}")));
    }
    let n = cfg.material.n;
    let opts = cfg.solver_options();
    let solves: Vec<(f64, Result<SolutionBundle<f64>>)> = cfg
        .run
        .c_list
        .par_iter()
        .map(|&c| {
            let b = cfg.material.build_with_c(c).and_then(|m| solver::shoot_punctured(&m, lambda, eps, &opts));
            (c, b)
        })
        .collect();
    let reference = material(cfg)?;
    let d_inc = reference.volumetric().barrier_coefficient();
    let energy_inc = incompressible_energy(n, cfg.material.kappa, d_inc, lambda, &incompressible_mesh(cfg.run.nodes)?)?;
    let r_inc0 = incompressible_radius(n, lambda, 0.0);

    let mut out = Output::create(cfg, "incompressible", &["C", "energy", "cavity", "sup_dist_inc", "status"])?;
    let mut rows = Vec::new();
    let mut profiles = Vec::new();
    for (c, b) in &solves {
        match b {
            Ok(b) => {
                write_bundle(&mut out, b, &format!("C{c}_{}", tag(lambda, eps)))?;
                let sup = xs(b)
                    .iter()
                    .zip(b.field.values())
                    .fold(0.0f64, |acc, (&x, &r)| acc.max((r - incompressible_radius(n, lambda, x)).abs()));
                profiles.push(Series::new(format!("C = {c}"), xs(b), b.field.values()));
                rows.push(IncompressibleRow {
                    c: *c,
                    energy: b.energy.modified,
                    cavity: b.cavity,
                    sup_dist_inc: sup,
                    status: b.status.as_str().to_string(),
                });
            }
            Err(e) => rows.push(IncompressibleRow {
                c: *c,
                energy: f64::NAN,
                cavity: f64::NAN,
                sup_dist_inc: f64::NAN,
                status: format!("failed: {e}"),
            }),
        }
    }
    {
        let mut w = csv::Writer::from_path(out.path("incompressible.csv"))?;
        w.write_record(["C", "energy", "cavity", "sup_dist_inc", "status"])?;
        for r in &rows {
            w.write_record([sci(r.c), sci(r.energy), sci(r.cavity), sci(r.sup_dist_inc), r.status.clone()])?;
        }
        w.flush()?;
    }
    let mut lines = vec![
        format!("lambda={}", sci(lambda)),
        format!("eps={}", sci(eps)),
        format!("energy_inc={}", sci(energy_inc)),
        format!("cavity_inc={}", sci(r_inc0)),
    ];
    fs::write(out.path("incompressible.txt"), lines.join("\n") + "\n")?;
    if let Some(first) = solves.iter().find_map(|(_, b)| b.as_ref().ok()) {
        let r_inc: Vec<f64> = xs(first).iter().map(|&x| incompressible_radius(n, lambda, x)).collect();
        profiles.insert(0, Series::new("incompressible", xs(first), &r_inc));
    }
    out.svg("incompressible_profiles.svg", &format!("penalty solutions, lambda = {lambda}, eps = {eps}"), "R", "r", &profiles)?;
    let failures = rows.iter().filter(|r| !r.energy.is_finite()).count();
    for r in &rows {
        lines.push(format!(
            "C={} energy={} cavity={} sup_dist_inc={} status={}",
            r.c,
            sci(r.energy),
            sci(r.cavity),
            sci(r.sup_dist_inc),
            r.status
        ));
        out.manifest.rows.push(vec![sci(r.c), sci(r.energy), sci(r.cavity), sci(r.sup_dist_inc), r.status.clone()]);
    }
    out.finish(failures, lines, EXIT_NO_CONVERGENCE)
}

/// Outcome of one invariant of the `check` suite.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckLine {
    CheckLine { name: name.to_string(), passed, detail }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Largest relative mismatch between analytic partials and central differences on a log grid.
fn partials_vs_differences(m: &MaterialLaw<f64>) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..9 {
        for j in 0..9 {
            let nu = 10f64.powf(-1.0 + 0.25 * i as f64);
            let v = 10f64.powf(-1.0 + 0.25 * j as f64);
            let (hn, hv) = (1e-6 * nu, 1e-6 * v);
            let cd = |f: &dyn Fn(f64, f64) -> Result<f64>, dn: f64, dv: f64| -> Result<f64> {
                Ok((f(nu + dn, v + dv)? - f(nu - dn, v - dv)?) / (2.0 * (dn + dv)))
            };
            let pairs: [(f64, f64); 10] = [
                (m.phi_1(nu, v)?, cd(&|a, b| m.phi(a, b), hn, 0.0)?),
                (m.phi_2(nu, v)?, cd(&|a, b| m.phi(a, b), 0.0, hv)? / (m.dim() - 1) as f64),
                (m.phi_11(nu, v)?, cd(&|a, b| m.phi_1(a, b), hn, 0.0)?),
                (m.phi_12(nu, v)?, cd(&|a, b| m.phi_2(a, b), hn, 0.0)?),
                (m.phi_hat_1(nu, v)?, cd(&|a, b| m.phi_hat(a, b), hn, 0.0)?),
                (m.phi_hat_2(nu, v)?, cd(&|a, b| m.phi_hat(a, b), 0.0, hv)? / (m.dim() - 1) as f64),
                (m.phi_hat_11(nu, v)?, cd(&|a, b| m.phi_hat_1(a, b), hn, 0.0)?),
                (m.phi_hat_12(nu, v)?, cd(&|a, b| m.phi_hat_2(a, b), hn, 0.0)?),
                (m.modified_stress_dnu(nu, v)?, cd(&|a, b| m.modified_stress(a, b), hn, 0.0)?),
                (m.phi_12(nu, v)?, cd(&|a, b| m.phi_1(a, b), 0.0, hv)? / (m.dim() - 1) as f64),
            ];
            for (a, b) in pairs {
                worst = worst.max(rel_err(a, b));
            }
        }
    }
    Ok(worst)
}

/// Runs the invariant suite on the configured material and one solve at `(lambda, eps)`.
pub fn cmd_check(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let m = material(cfg)?;
    let opts = cfg.solver_options();
    let (lambda, eps) = (cfg.run.lambda, cfg.run.eps());
    let mut lines = Vec::new();

    if cfg.material.d.is_none() {
        let g1 = m.homogeneous_stress(1.0)?;
        lines.push(check("stress_free_reference", g1.abs() <= 1e-10, format!("g(1) = {g1:e}")));
    }
    let fd = partials_vs_differences(&m)?;
    lines.push(check("partials_vs_differences", fd <= 1e-6, format!("max relative mismatch {fd:e}")));

    let mut monotone = true;
    let mut inversion = 0.0f64;
    for j in 0..13 {
        let v = 10f64.powf(-1.0 + 0.25 * j as f64);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..41 {
            let nu = 10f64.powf(-3.0 + 0.1 * i as f64);
            let p = m.phi_hat_1(nu, v)?;
            monotone &= p > prev;
            prev = p;
            let t = m.modified_stress(nu, v)?;
            let back = m.invert_nu_hat_with(t, v, opts.tol_inv)?;
            inversion = inversion.max((back - nu).abs() / nu);
        }
    }
    lines.push(check("phihat_1_increasing", monotone, "sampled on a log grid".into()));
    lines.push(check("stress_inversion_round_trip", inversion <= 1e-8, format!("max relative error {inversion:e}")));

    let affine = energy::affine_energy(&m, lambda)?;
    let field = RadialField::affine(Mesh::graded(eps, cfg.run.nodes)?, lambda, m.dim())?;
    let quad = energy::modified_energy(&m, &field)?;
    lines.push(check(
        "affine_energy_closed_form",
        (affine - quad).abs() <= 1e-10,
        format!("closed form {affine:.12} vs quadrature {quad:.12}"),
    ));

    let bar = m.bar_lambda()?;
    match solver::shoot_punctured(&m, lambda, eps, &opts) {
        Ok(b) => {
            let res = &b.energy.identity_residuals;
            lines.push(check(
                "cavity_condition",
                b.bc_residual <= opts.tol_bc.max(1e-6),
                format!("|That(r(eps))| = {:e}", b.bc_residual),
            ));
            let bd = res["bddbe"];
            lines.push(check("bddbe_identity", bd <= 1e-6, format!("residual {bd:e}")));
            if let (Some(div), Some(scale)) = (res.get("divergence"), res.get("divergence_scale")) {
                lines.push(check(
                    "divergence_identity",
                    *div <= 1e-4 * scale,
                    format!("residual {div:e}, scale {scale:e}"),
                ));
            }
            if let Some(eq) = res.get("equilibrium") {
                lines.push(check("flux_form_equilibrium", *eq <= 1e-6, format!("max interior residual {eq:e}")));
            }
            if b.is_converged() && b.cavity > 10.0 * eps * lambda {
                let gap = (b.energy.boundary_formula - b.energy.modified).abs();
                lines.push(check(
                    "boundary_energy_formula",
                    gap <= 1e-2,
                    format!("boundary {:.8} vs quadrature {:.8}", b.energy.boundary_formula, b.energy.modified),
                ));
            }
            if lambda > bar {
                let drop = b.that_max_drop();
                lines.push(check("that_nondecreasing", drop <= 1e-8, format!("largest decrease {drop:e}")));
            }
            let dir = tempdir_in(&cfg.output.directory)?;
            let path = dir.join("profile.csv");
            b.field.write_csv(&path)?;
            let back = RadialField::<f64>::read_csv(&path, m.dim())?;
            let same = back.values() == b.field.values() && back.nodes() == b.field.nodes();
            fs::remove_dir_all(&dir)?;
            lines.push(check("profile_csv_round_trip", same, "bit-identical nodes and values".into()));
        }
        Err(e) => lines.push(check("solve", false, e.to_string())),
    }

    if cfg.material.d.is_none() {
        match solver::critical_lambda(&m, &opts) {
            Ok(c) => lines.push(check(
                "critical_integral_check",
                c.integral_check <= 1e-3,
                format!("lambda_c = {:.7}, integral_check = {:e}", c.lambda_c, c.integral_check),
            )),
            Err(e) => lines.push(check("critical_integral_check", false, e.to_string())),
        }
    }

    let mut out = Output::create(cfg, "check", &["check", "result", "detail"])?;
    let text: Vec<String> = lines
        .iter()
        .map(|l| format!("{} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail))
        .collect();
    fs::write(out.path("check.txt"), text.join("\n") + "\n")?;
    for l in &lines {
        out.manifest
            .rows
            .push(vec![l.name.clone(), if l.passed { "pass" } else { "fail" }.to_string(), l.detail.clone()]);
    }
    let failures = lines.iter().filter(|l| !l.passed).count();
    out.finish(failures, text, EXIT_FAILURE)
}

fn tempdir_in(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let p = dir.join(format!(".check-{}", std::process::id()));
    fs::create_dir_all(&p)?;
    Ok(p)
}
