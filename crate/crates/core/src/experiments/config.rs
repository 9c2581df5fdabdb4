//! Flat `key = value` run configuration with dotted sections.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::material::{MaterialLaw, VolumetricKind, VolumetricLaw};
use crate::solver::{validate_eps_list, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawKind {
    Power,
    Penalty,
}

impl LawKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LawKind::Power => "power",
            LawKind::Penalty => "penalty",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialConfig {
    pub n: usize,
    pub kappa: f64,
    pub kind: LawKind,
    pub c: f64,
    /// Exponent of the power law; unused by the penalty law.
    pub gamma: f64,
    pub delta_exp: f64,
    /// Barrier coefficient; the stress-free value when `None`.
    pub d: Option<f64>,
}

impl MaterialConfig {
    pub fn kind_with_c(&self, c: f64) -> VolumetricKind<f64> {
        match self.kind {
            LawKind::Power => VolumetricKind::PowerLaw { c, gamma: self.gamma },
            LawKind::Penalty => VolumetricKind::IncompressiblePenalty { c },
        }
    }

    /// Material with the volumetric coefficient replaced by `c`.
    pub fn build_with_c(&self, c: f64) -> Result<MaterialLaw<f64>> {
        let kind = self.kind_with_c(c);
        let vol = match self.d {
            Some(d) => VolumetricLaw::new(kind, self.delta_exp, d)?,
            None => VolumetricLaw::stress_free(kind, self.delta_exp, self.n, self.kappa)?,
        };
        MaterialLaw::new(self.n, self.kappa, vol)
    }

    pub fn build(&self) -> Result<MaterialLaw<f64>> {
        self.build_with_c(self.c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub lambda: f64,
    pub eps_list: Vec<f64>,
    pub nodes: usize,
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub tol_bc: f64,
    pub tol_inv: f64,
    /// Volumetric coefficients for the incompressible-limit study.
    pub c_list: Vec<f64>,
}

impl RunConfig {
    /// Smallest `eps` of the list.
    pub fn eps(&self) -> f64 {
        *self.eps_list.last().expect("eps list validated nonempty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub emit_plots: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub material: MaterialConfig,
    pub run: RunConfig,
    pub output: OutputConfig,
}

const KEYS: &[&str] = &[
    "material.n",
    "material.kappa",
    "material.h.kind",
    "material.h.C",
    "material.h.gamma",
    "material.h.delta_exp",
    "material.h.D",
    "run.lambda",
    "run.eps_list",
    "run.mesh.nodes",
    "run.tol.rel",
    "run.tol.abs",
    "run.tol.bc",
    "run.tol.inv",
    "run.c_list",
    "output.directory",
    "output.emit_plots",
];

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Config(format!("{key}: expected a finite number, got '{s}'")))
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| parse_f64(key, t.trim())).collect()
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// `key -> (line, value)` from the raw text; rejects unknown and repeated keys.
fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Config(format!("line {}: unknown key '{k}'", i + 1)));
        }
        if v.is_empty() {
            return Err(Error::Config(format!("line {}: empty value for '{k}'", i + 1)));
        }
        if out.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key '{k}'", i + 1)));
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    /// `n=3`, `kappa=1`, power law `C=1`, `gamma=2`, `delta=2`, stress free; `lambda=1.05`, `eps=1e-4`.
    pub fn example_one() -> Self {
        Self {
            material: MaterialConfig {
                n: 3,
                kappa: 1.0,
                kind: LawKind::Power,
                c: 1.0,
                gamma: 2.0,
                delta_exp: 2.0,
                d: None,
            },
            run: RunConfig {
                lambda: 1.05,
                eps_list: vec![1e-4],
                nodes: crate::energy::DEFAULT_NODES,
                tol_rel: 1e-10,
                tol_abs: 1e-12,
                tol_bc: 1e-9,
                tol_inv: crate::material::DEFAULT_TOL_INV,
                c_list: vec![20.0, 40.0, 80.0, 160.0, 320.0, 640.0],
            },
            output: OutputConfig { directory: PathBuf::from("out"), emit_plots: false },
        }
    }

    /// Penalty law with `n=3`, `kappa=3`, `delta=2`, `D` stress free; `lambda=1.05`, `eps=0.005`.
    pub fn example_two() -> Self {
        let mut cfg = Self::example_one();
        cfg.material.kappa = 3.0;
        cfg.material.kind = LawKind::Penalty;
        cfg.material.c = 20.0;
        cfg.run.eps_list = vec![0.005];
        cfg
    }

    /// Parses `text` over the defaults in `base`.
    pub fn parse_with_base(text: &str, base: Self) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        let mut cfg = base;
        let get = |k: &str| pairs.get(k).map(|(_, v)| v.as_str());
        if let Some(v) = get("material.n") {
            cfg.material.n = v.parse().map_err(|_| Error::Config(format!("material.n: expected an integer, got '{v}'")))?;
        }
        if let Some(v) = get("material.kappa") {
            cfg.material.kappa = parse_f64("material.kappa", v)?;
        }
        if let Some(v) = get("material.h.kind") {
            cfg.material.kind = match v {
                "power" => LawKind::Power,
                "penalty" => LawKind::Penalty,
                _ => return Err(Error::Config(format!("material.h.kind: expected power or penalty, got '{v}'"))),
            };
        }
        if let Some(v) = get("material.h.C") {
            cfg.material.c = parse_f64("material.h.C", v)?;
        }
        if let Some(v) = get("material.h.gamma") {
            if cfg.material.kind == LawKind::Penalty {
                return Err(Error::Config("material.h.gamma is only used by the power law".into()));
            }
            cfg.material.gamma = parse_f64("material.h.gamma", v)?;
        }
        if let Some(v) = get("material.h.delta_exp") {
            cfg.material.delta_exp = parse_f64("material.h.delta_exp", v)?;
        }
        if let Some(v) = get("material.h.D") {
            cfg.material.d = Some(parse_f64("material.h.D", v)?);
        }
        if let Some(v) = get("run.lambda") {
            cfg.run.lambda = parse_f64("run.lambda", v)?;
        }
        if let Some(v) = get("run.eps_list") {
            cfg.run.eps_list = parse_list("run.eps_list", v)?;
        }
        if let Some(v) = get("run.mesh.nodes") {
            cfg.run.nodes = v.parse().map_err(|_| Error::Config(format!("run.mesh.nodes: expected an integer, got '{v}'")))?;
        }
        for (key, slot) in [
            ("run.tol.rel", &mut cfg.run.tol_rel),
            ("run.tol.abs", &mut cfg.run.tol_abs),
            ("run.tol.bc", &mut cfg.run.tol_bc),
            ("run.tol.inv", &mut cfg.run.tol_inv),
        ] {
            if let Some(v) = get(key) {
                *slot = parse_f64(key, v)?;
            }
        }
        if let Some(v) = get("run.c_list") {
            cfg.run.c_list = parse_list("run.c_list", v)?;
        }
        if let Some(v) = get("output.directory") {
            cfg.output.directory = PathBuf::from(v);
        }
        if let Some(v) = get("output.emit_plots") {
            cfg.output.emit_plots = match v {
                "true" | "1" | "yes" => true,
                "false" | "0" | "no" => false,
                _ => return Err(Error::Config(format!("output.emit_plots: expected true or false, got '{v}'"))),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_base(text, Self::example_one())
    }

    pub fn from_path_with_base(path: impl AsRef<Path>, base: Self) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_with_base(&text, base)
    }

    /// Replaces `lambda`, the `eps` list, the output directory or the plot flag.
    pub fn apply_overrides(
        &mut self,
        lambda: Option<f64>,
        eps: Option<f64>,
        out: Option<PathBuf>,
        emit_plots: bool,
    ) -> Result<()> {
        if let Some(l) = lambda {
            self.run.lambda = l;
        }
        if let Some(e) = eps {
            self.run.eps_list = vec![e];
        }
        if let Some(o) = out {
            self.output.directory = o;
        }
        self.output.emit_plots |= emit_plots;
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| match e {
            Error::Config(s) | Error::InvalidParameter(s) => Error::Config(s),
            other => Error::Config(other.to_string()),
        };
        self.material.build().map_err(cfg_err)?;
        if !(self.run.lambda > 0.0 && self.run.lambda.is_finite()) {
            return Err(Error::Config(format!("run.lambda must be positive, got {}", self.run.lambda)));
        }
        validate_eps_list(&self.run.eps_list).map_err(cfg_err)?;
        if self.run.nodes < 3 {
            return Err(Error::Config(format!("run.mesh.nodes must be at least 3, got {}", self.run.nodes)));
        }
        for (k, t) in [
            ("run.tol.rel", self.run.tol_rel),
            ("run.tol.abs", self.run.tol_abs),
            ("run.tol.bc", self.run.tol_bc),
            ("run.tol.inv", self.run.tol_inv),
        ] {
            if !(t > 0.0) {
                return Err(Error::Config(format!("{k} must be positive, got {t}")));
            }
        }
        if self.run.c_list.is_empty() || self.run.c_list.iter().any(|c| !(*c > 0.0)) {
            return Err(Error::Config("run.c_list must hold positive values".into()));
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions<f64> {
        SolverOptions {
            rtol: self.run.tol_rel,
            atol: self.run.tol_abs,
            tol_bc: self.run.tol_bc,
            tol_inv: self.run.tol_inv,
            nodes: self.run.nodes,
            ..SolverOptions::default()
        }
    }

    /// Every key with its resolved value, in a fixed order. Parses back to `self`.
    pub fn to_text(&self) -> String {
        let m = &self.material;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("material.n", m.n.to_string());
        put("material.kappa", m.kappa.to_string());
        put("material.h.kind", m.kind.as_str().to_string());
        put("material.h.C", m.c.to_string());
        if m.kind == LawKind::Power {
            put("material.h.gamma", m.gamma.to_string());
        }
        put("material.h.delta_exp", m.delta_exp.to_string());
        if let Some(d) = m.d {
            put("material.h.D", d.to_string());
        }
        put("run.lambda", self.run.lambda.to_string());
        put("run.eps_list", join(&self.run.eps_list));
        put("run.mesh.nodes", self.run.nodes.to_string());
        put("run.tol.rel", self.run.tol_rel.to_string());
        put("run.tol.abs", self.run.tol_abs.to_string());
        put("run.tol.bc", self.run.tol_bc.to_string());
        put("run.tol.inv", self.run.tol_inv.to_string());
        put("run.c_list", join(&self.run.c_list));
        put("output.directory", self.output.directory.display().to_string());
        put("output.emit_plots", self.output.emit_plots.to_string());
        s
    }

    /// SHA-256 of [`to_text`](Self::to_text), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}
