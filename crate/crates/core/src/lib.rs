//! Radial cavitation in compressible hyperelastic balls through a renormalized energy.
//!
//! A cavitating radial equilibrium `r(R)` of the energy
//! `int R^(n-1) Phi(r', r/R) dR` has infinite energy for the critical growth
//! exponent `p = n`. Subtracting a null-Lagrangian term gives a modified
//! functional with the same equilibrium equation, finite values on cavitating
//! states, and the natural cavity condition `That(r(0)) = 0`.
//!
//! The crate computes minimizers on punctured balls `eps < R < 1` by shooting
//! (with a gradient-flow predictor), the critical displacement above which
//! minimizers cavitate, and the energy identities used as diagnostics.
//!
//! ```
//! use cavitation::{Material, Mesh, Field, energy};
//!
//! let m = Material::example_one().unwrap();
//! let f = Field::affine(Mesh::graded(1e-6, 512).unwrap(), 1.05, 3).unwrap();
//! let e = energy::modified_energy(&m, &f).unwrap();
//! assert!((e - 1.2888).abs() < 2e-3);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod material;
pub mod roots;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Material = material::MaterialLaw<f64>;
pub type Volumetric = material::VolumetricLaw<f64>;
pub type Mesh = energy::Mesh<f64>;
pub type Field = energy::RadialField<f64>;
pub type Report = energy::EnergyReport<f64>;
pub type Bundle = solver::SolutionBundle<f64>;
pub type Critical = solver::CriticalResult<f64>;
pub type Options = solver::SolverOptions<f64>;
