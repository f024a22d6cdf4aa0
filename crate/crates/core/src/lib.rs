//! Equilibrium reduced density matrix of the spin-boson model.
//!
//! The crate computes `ρ_S` for a two-level system coupled through `σ_z` to a
//! super-ohmic harmonic bath in three ways:
//!
//! * second-order imaginary-time perturbation theory in the original, full
//!   polaron and variational polaron frames ([`perturbation`]),
//! * a stochastic unraveling of the imaginary-time influence functional
//!   ([`pimc`]), which is numerically exact up to statistical error,
//! * two closed or near-closed references: the adiabatic-bath partition
//!   function ([`adiabatic`]) and exact diagonalization of a few-mode
//!   discretized bath ([`discrete`]).
//!
//! Units have `ħ = k_B = 1`; energies, frequencies and inverse times share a
//! single scale.
//!
//! ```
//! use sbeq::{BathParams, Method, ModelParams, PimcSettings};
//!
//! let model = ModelParams::new(1.0, 3.0, 1.0)?; // ε, Δ, β
//! let bath = BathParams::new(10.0, 5.0)?.into(); // γ, ω_c
//! let var2 = sbeq::perturbation::solve_method(Method::Var2, &model, &bath)?;
//! let settings = PimcSettings { steps: 64, n_samples: 20_000, ..Default::default() };
//! let pi = sbeq::pimc::estimate(&model, &bath, &settings)?;
//! assert!((var2.rho.sigma_z() - pi.sigma_z).abs() < 0.02);
//! # Ok::<(), sbeq::Error>(())
//! ```

pub mod adiabatic;
pub mod bath;
pub mod correlation;
pub mod discrete;
mod error;
pub mod operator;
pub mod parallel;
pub mod perturbation;
pub mod pimc;
pub mod quadrature;
pub mod stats;
pub mod variational;

pub use bath::{BathMode, BathParams, Frame, FrameSolution, ModelParams, SpectralDensity};
pub use correlation::{BathCorrelations, Channel, CorrelationTable};
pub use error::{Error, Result};
pub use operator::{ReducedDensityMatrix, TwoLevelOperator};
pub use parallel::Execution;
pub use perturbation::{Method, Order};
pub use pimc::{McEstimate, PimcSettings};
pub use variational::VariationalSolution;
