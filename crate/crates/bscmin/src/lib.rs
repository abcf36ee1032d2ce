//! Minimization of gradient energies `∫ F(∇u) + f·u` over planar convex
//! domains with boundary data satisfying the bounded slope condition,
//! together with the quantitative certificates that make the computed
//! minimizer trustworthy: explicit barrier sandwiches, uniform-convexity
//! inequality audits, domain/datum/integrand approximation checks and a
//! brute-force radial oracle for disc problems.
//!
//! The crate is organized around the pipeline
//!
//! 1. [`geometry`] — convex bodies, gauge functions, Hausdorff distance and
//!    the outer smooth-convex domain approximation;
//! 2. [`boundary`] — bounded-slope-condition certification and the
//!    convex/concave extensions `φ⁻`/`φ⁺` of the boundary datum;
//! 3. [`lagrangian`] — convex integrands that are uniformly convex outside
//!    a ball, their truncation `F_Q` and smooth regularization `F_k`;
//! 4. [`barrier`] — explicit Lipschitz barriers pinning every minimizer;
//! 5. [`solver`] — piecewise-linear finite elements plus an accelerated
//!    first-order method with continuation in the regularization index;
//! 6. [`verify`] — experiment runner, lemma suites, radial oracle and the
//!    regularity certificate emitted for each run.

pub mod barrier;
pub mod boundary;
pub mod geometry;
pub mod lagrangian;
pub mod mesh;
pub mod mollify;
pub mod regularize;
pub mod solver;
pub mod vec2;
pub mod verify;

pub use vec2::Vec2;
