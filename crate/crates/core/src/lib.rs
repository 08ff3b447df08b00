//! Exact and numerical machinery for critical multi-type Galton-Watson trees
//! conditioned on their total progeny by types.
//!
//! The crate is organized around a small set of exactly-computable objects:
//!
//! * [`marked_tree`] — finite typed plane trees, the local (ultrametric)
//!   topology, grafting and graft classes;
//! * [`offspring`] — offspring distributions with exact rational weights,
//!   Perron-Frobenius data, criticality/aperiodicity classification and the
//!   size-biased laws behind Kesten's tree;
//! * [`sampler`] — Galton-Watson, truncated-Kesten and rejection-conditioned
//!   samplers;
//! * [`progeny`] — exact total-progeny laws by two independent routes
//!   (tree enumeration and the random-walk determinant representation),
//!   plus the elementary-forest determinant expansions;
//! * [`laplace`] — log-Laplace transform, Legendre conjugate, exponential
//!   tilting and convex-hull predicates for finite lattice distributions;
//! * [`walk`] — exact n-step walk laws, the uniform local CLT discrepancy,
//!   strong-ratio-limit and lower-bound experiments, and the embedding of a
//!   multi-type walk system into a single lattice walk;
//! * [`convergence`] — graft-class probabilities for GW, Kesten and
//!   conditioned trees, the desk-scale convergence experiment, and the
//!   partition embedding of a mono-type law with its tilted offspring
//!   distribution.
//!
//! Everything probabilistic that can be kept exact is kept exact
//! (`num_rational::BigRational`); spectral data and the tilting toolbox use
//! `f64` with explicit tolerances.

pub mod convergence;
pub mod laplace;
pub mod lattice;
pub mod linalg;
pub mod marked_tree;
pub mod offspring;
pub mod presets;
pub mod progeny;
pub mod ratio;
pub mod sampler;
pub mod walk;

pub use num_bigint::BigInt;
pub use num_rational::BigRational;
