//! Numerical solver and verification toolkit for the fully non-local
//! diffusion problem
//!
//! ```text
//! ∂t(k ∗ (u − u0)) + (−Δ)^s u = f   in Ω × (0, T),
//! u = 0                              outside Ω,
//! ```
//!
//! with a memory kernel `k` admitting a Sonine partner `l` (`k ∗ l ≡ 1`).
//!
//! The crate is organised bottom-up:
//!
//! * [`kernels`]: kernel pairs, exact cell integrals, Sonine residuals, kernel splitting.
//! * [`volterra`]: resolvent families `s_λ`, Yosida kernels `k_λ`, time regularization,
//!   and the Mittag-Leffler function.
//! * [`fraclap`]: M-matrix discretization of the 1D fractional Laplacian.
//! * [`timestepper`]: the implicit L1-type convolution scheme and the truncated-data driver.
//! * [`entropy_verify`]: scalar toolbox and residual checks for entropy, weak form,
//!   comparison and kernel identities.
//! * [`cli`]: configuration-driven commands used by the `fracdiff` binary.

pub mod cli;
pub mod config;
pub mod entropy_verify;
mod error;
pub mod fraclap;
pub mod io;
pub mod kernels;
pub mod special;
pub mod timestepper;
pub mod volterra;

pub use error::{Error, Result};

pub use fraclap::{NonlocalOperator, SpaceGrid1D};
pub use kernels::{CellIntegrals, KernelPairHandle, KernelSpec, TimeGrid};
pub use timestepper::{DiscreteSolution, ProblemData, SchemeWeights};

pub use volterra::YosidaFamily;
