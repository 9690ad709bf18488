//! Majorizing-measure chaining toolkit for finite metric spaces.
//!
//! Everything here operates on a finite metric space `(T, d)` carrying a
//! full-support probability measure `m`. The central quantity is the
//! majorizing-measure functional
//!
//! ```text
//! sigma(x) = integral over [0, D(T)] of phi_inv(1 / m(B(x, eps))) d eps
//! ```
//!
//! together with its supremum `S = sup_x sigma(x)` and its mean
//! `S_bar = sum_x m(x) sigma(x)`. From these the toolkit builds an explicit
//! chaining structure: a base level `k0`, per-level radii `r_k(x)`, ball
//! averaging operators `S_k`, and a probability measure `nu` on `T x T`
//! against which increment energies are integrated.
//!
//! The payoff is a family of certified inequalities:
//!
//! * deterministic Sobolev-type bounds relating `|f(t) - mean(f)|` and
//!   `max f - min f` to `sigma`, `S`, `S_bar` and the increment energy of `f`
//!   under `nu`;
//! * Monte Carlo certificates that a stochastic process with Orlicz-bounded
//!   increments has `E sup |X(s) - X(t)|` below the corresponding constants,
//!   down to the headline factor `32 S`.
//!
//! Module map:
//!
//! * [`metric`] — validated metric spaces, probability measures, generated
//!   test families and the randomized fleet.
//! * [`orlicz`] — Orlicz-type functions, growth classes, and the closed-form
//!   constants of the chaining bound.
//! * [`majorant`] — `sigma`, `S`, `S_bar`, the base level and the radii.
//! * [`chaining`] — averaging operators, operator lemmas, the measure `nu`.
//! * [`sobolev`] — certificates for the deterministic function inequalities.
//! * [`process`] — Gaussian process models and Monte Carlo certificates.
//! * [`cli`] — the `chainkit` command-line entry point.

#![forbid(unsafe_code)]

pub mod cert;
pub mod chaining;
pub mod cli;
pub mod majorant;
pub mod metric;
pub mod orlicz;
pub mod process;
pub mod seeds;
pub mod sobolev;
pub mod tol;
