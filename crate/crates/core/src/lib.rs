//! Gaussian-state toolkit for the ideal noiseless linear amplifier (NLA).
//!
//! The NLA is the non-deterministic operator `g^(a†a)`. Acting on a Gaussian
//! state it produces another Gaussian state, but the covariance-matrix map is
//! deliberately *not* symplectic: purity is not preserved and the output is
//! physical only below a state-dependent gain bound. This crate implements
//! that map on N-mode Gaussian states together with the surrounding
//! machinery needed to study it:
//!
//! - [`symplectic`]: the symplectic form, beamsplitter and squeezer
//!   symplectics, Williamson spectra and physicality tests;
//! - [`state`]: Gaussian states (mean vector + covariance matrix, hbar = 2
//!   convention), constructors, the thermal-loss channel, purity,
//!   logarithmic negativity and two-mode fidelity;
//! - [`nla`]: the amplifier map itself in two independent algebraic forms,
//!   gain bounds and convergence diagnostics;
//! - [`effective`]: effective-channel parameterizations of an amplified
//!   EPR link, the four-mode entangling-cloner state, and the equivalent
//!   two-beamsplitter circuit solver;
//! - [`fock`]: a truncated Fock-space oracle that re-derives every Gaussian
//!   prediction by brute force from state vectors and density matrices;
//! - [`sweep`]: deterministic parameter sweeps (data-parallel when the
//!   `parallel` feature is enabled, sequential otherwise);
//! - [`optimize`]: derivative-free fidelity optimization over the input EPR
//!   strength and the amplifier gain.
//!
//! Conventions used throughout: hbar = 2 (vacuum variance 1), quadrature
//! ordering r = (x1, p1, ..., xN, pN), symplectic form a direct sum of
//! [[0, 1], [-1, 0]] blocks.

pub mod effective;
pub mod error;
pub mod fock;
pub mod nla;
pub mod optimize;
pub mod state;
pub mod sweep;
pub mod symplectic;

pub use error::NlaError;
pub use nla::{GainProfile, NlaResult};
pub use state::{ChannelSpec, GaussianState, TwoModeStandardForm};

/// Default numerical tolerance for physicality and convergence checks.
pub const DEFAULT_TOL: f64 = 1e-9;
