//! Exact-arithmetic invariants of posets, subdivisions, and lattice polytopes.
//!
//! The crate is organized in layers, each usable on its own:
//!
//! * [`laurent`] — multivariate Laurent polynomials in `t, u, v, w` with
//!   half-integer exponents and arbitrary-precision integer coefficients.
//! * [`poset`] — finite ranked posets: intervals, duals, Möbius values,
//!   Eulerian checks, Boolean algebras, barycentric subdivision.
//! * [`kls`] — the kernel/acceptability calculus on locally Eulerian posets:
//!   incidence-algebra convolution, g- and h-polynomials, γ and its inverse.
//! * [`subdivision`] — strong formal subdivisions: validation, pushforwards,
//!   local h-polynomials, mixed h-polynomials, and simplicial fast paths.
//! * [`polytope`] — exact lattice-polytope geometry: face lattices, cell
//!   complexes, carriers, links, regular subdivisions from heights.
//! * [`ehrhart`] — the h* family: h*, local h*, mixed h*, limit mixed h*,
//!   refined limit mixed h*, the box-point oracle, and diamond tables.
//!
//! All arithmetic is exact; there are no floating-point values anywhere.

// Poset elements and matrix entries are addressed by semantic indices
// shared across several parallel structures; iterator rewrites of those
// loops obscure which object the index ranges over.
#![allow(clippy::needless_range_loop)]

pub mod ehrhart;
pub mod kls;
pub mod laurent;
pub mod linalg;
pub mod polytope;
pub mod poset;
pub mod subdivision;
