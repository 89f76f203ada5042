//! Projected Euler simulation of reflected diffusions in a moving convex
//! body, and convex-hull estimation of that body from independent copies.
//!
//! Modules, bottom-up:
//! - [`geometry`]: convex bodies, projections, support functions, hulls.
//! - [`dynamics`]: the projected Euler scheme and ensembles of copies.
//! - [`estimation`]: hull estimators and their error functionals.
//! - [`oracle`]: brute-force references and proof-constant calculators.
//! - [`harness`]: convergence experiments, config files and reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod estimation;
pub mod geometry;
pub mod harness;
pub mod oracle;
