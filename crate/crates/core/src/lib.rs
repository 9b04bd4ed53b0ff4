//! Surrogate-gap guided sharpness-aware minimization (GSAM) on desk-scale
//! objectives.
//!
//! - [`objective`]: quadratics, a 2D multi-well surface and a small MLP
//!   classifier, with gradients and Hessian-vector products.
//! - [`perturbation`]: the adversarial point `w + rho g/|g|` and the
//!   surrogate gap `h = f_p - f`.
//! - [`optimizer`]: the GSAM step, its SAM / vanilla / ablation variants,
//!   schedules and base optimizers.
//! - [`sharpness`]: power iteration, dataset-level gap and step traces.
//! - [`harness`]: configs, seeded runs, sweeps and output files.

pub mod error;
pub mod harness;
pub mod objective;
pub mod optimizer;
pub mod perturbation;
pub mod rng;
pub mod sharpness;
pub mod vector;

pub use error::{GsamError, Result};
pub use objective::{Batch, ObjectiveSpec};
pub use optimizer::{GsamConfig, Variant};
pub use vector::ParamVector;
