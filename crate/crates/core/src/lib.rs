//! Symbolic-numeric toolkit for Gindikin structures, heavenly equations,
//! and self-dual vacuum Einstein (SDVE) metrics.
//!
//! The crate builds λ-polynomial differential 2-forms from key functions of
//! the dispersionless Hirota / heavenly hierarchy, verifies their defining
//! identities (closedness, decomposability, nondegeneracy, symmetry), lifts
//! them to 4D neutral-signature SDVE metrics via twisting, and computes the
//! Petrov scalar invariants I, J, and S = I³ − 6J² of the self-dual Weyl
//! curvature.
//!
//! Layering, bottom up:
//! - [`symexpr`]: exact symbolic expressions (rational constants, exact
//!   differentiation, opaque function symbols, f64 and exact evaluation).
//! - [`forms`]: exterior algebra of λ-polynomial forms and vector fields on
//!   coordinate charts.
//! - [`sample`]: seeded sampling of chart points with domain guards.
//! - [`report`]: residual reports with pass/fail verdicts, JSON-serializable.
//! - [`equations`]: residual evaluators for the heavenly/Hirota PDE systems
//!   and the Mason–Newman field checks.
//! - [`gindikin`]: verification and construction of Gindikin structures,
//!   symmetries, potentials, and twists.
//! - [`metrics`]: SDVE metric constructions (framework metrics, twisted
//!   inverses, frame metrics, Gindikin reconstruction).
//! - [`curvature`]: Christoffel/Riemann/Ricci, the self-dual Weyl operator,
//!   and the Petrov invariants.
//! - [`catalog`]: registry of the concrete solutions and twists used as the
//!   acceptance corpus.

pub mod symexpr;
pub mod forms;
pub mod sample;
pub mod report;
pub mod equations;
pub mod gindikin;
pub mod metrics;
pub mod curvature;
pub mod catalog;
