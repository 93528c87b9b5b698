//! Entire convex solutions of `f(∇φ) det D²φ = g` for data invariant under an
//! irreducible orthogonal group action.
//!
//! The solver exhausts ℝⁿ by balls `B_k`. On each ball the perturbed problem
//! `f_k = f + 1/k`, `g_k = g + 1/k` is solved as a semi-discrete transport problem
//! whose Brenier potential is a finite max of affine functions; the potentials are
//! normalized at the origin and compared on a fixed compact set until they settle.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`group`] | finite subgroups of O(n), orbits, orbit-hull inradius, irreducibility |
//! | [`density`] | radial densities, perturbations, ball masses, the `R_k` mass balance |
//! | [`quadrature`] | adaptive Gauss–Kronrod on an interval |
//! | [`ball_grid`] | element quadrature over balls with boundary refinement |
//! | [`plc`] | piecewise-linear convex functions and their Legendre transforms |
//! | [`sdot`] | semi-discrete transport: targets, cell masses, dual ascent |
//! | [`measure`] | Monge–Ampère measure, weak residual, weak-convergence check |
//! | [`radial`] | exact one-dimensional solver for rotation-invariant data |
//! | [`exhaustion`] | the `k`-indexed driver and its bound monitors |
//! | [`diagnostics`] | properness, gradient-image bounds, convexity, Hölder fit, equivariance |
//! | [`config`] | run configuration and the command implementations behind the CLI |
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled (the
//! default) and fall back to plain iterators otherwise. Reductions are chunked in a
//! fixed order, so results are bit-identical either way.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ball_grid;
pub mod config;
pub mod density;
pub mod diagnostics;
pub mod exhaustion;
pub mod group;
pub mod measure;
pub mod plc;
pub mod quadrature;
pub mod radial;
pub mod sdot;

mod lp;
mod par;
mod vecmath;

pub use density::{DensityForm, DensitySpec, PerturbedDensity, RadialDensity};
pub use group::OrthogonalGroupSpec;
pub use plc::PLConvexFunction;
