//! Mixed fractional Cox–Ingersoll–Ross short-rate simulation.
//!
//! The rate follows `dr = k(θ − r)dt + σ√r dM` with `M = B + B^H`, a
//! Brownian motion plus an independent fractional Brownian motion of Hurst
//! index `H > 1/2`. Trajectories are produced by a drift-implicit Euler
//! scheme on `z = (2/σ)√r`, which stays strictly positive on every path.
//!
//! Modules:
//!
//! * [`noise`]: Brownian and fBm increments (Cholesky and Davies–Harte).
//! * [`mixed`]: mixed drivers and exact fine-to-coarse coupling.
//! * [`scheme`]: the implicit step, trajectories and interpolation.
//! * [`roughpath`]: quadratic variation, bracket and Itô-formula checks.
//! * [`experiments`]: convergence, positivity and Monte Carlo harnesses.
//! * [`config`], [`output`], [`cli`]: the `mfcir` command-line tool.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod mixed;
pub mod noise;
pub mod output;
pub mod rng;
pub mod roughpath;
pub mod scheme;
pub mod stats;

pub use error::{Error, Result};
pub use mixed::{build_mixed, derive_coupled, CoupledNoise, MixedSampler, MixedSpec};
pub use noise::{GridSpec, HurstParam, NoiseKind, NoisePath};
pub use scheme::{implicit_step, simulate_z, CirParams, Trajectory};
