//! Exact fixed-budget analysis of elitist (1+1) evolutionary algorithms with
//! and without binomial crossover on problems of the form `f(|x|)`.
//!
//! The crate is organised bottom-up:
//!
//! - [`level`]: level-decomposable problems (OneMax, Deceptive, custom level
//!   maps), error vectors and exact initial level distributions.
//! - [`kernel`]: closed-form probabilities of flipping an exact `l`-bit
//!   pattern under bitwise mutation and under mutation followed by binomial
//!   crossover.
//! - [`transition`]: level-transition matrices built from a flip kernel, the
//!   brute-force enumeration oracle, artificial counterexample chains, matrix
//!   dominance and the sufficient ordering conditions.
//! - [`analysis`]: distribution trajectories, expected approximation error
//!   (EAE) and tail probability (TP) series, spectral radius, average
//!   convergence rate and outperformance reports.
//! - [`optima`]: direct-to-optimum escape probabilities on Deceptive and the
//!   rates that maximise them.
//! - [`sim`]: bitstring-level simulation of both algorithms, including the
//!   Hamming-distance adaptive parameter strategy, and deterministic Monte
//!   Carlo aggregation.
//! - [`experiments`]: the built-in figure recipes shared by the CLI and the
//!   acceptance suite.
//! - [`io`]: the CSV formats used for matrices and series.

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod io;
pub mod kernel;
pub mod level;
pub mod optima;
pub mod sim;
pub mod transition;

pub use error::{Error, Result};
pub use kernel::FlipKernel;
pub use level::{LevelDistribution, LevelProblem, ProblemKind};
pub use transition::TransitionMatrix;
