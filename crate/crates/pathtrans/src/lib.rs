//! Parallel transport on path-space bundles decorated by a crossed module.
//!
//! The crate is organized bottom-up:
//!
//! * [`lie`]: SO(2), SO(3) and ℝᵐ with exp, log, Ad and brackets.
//! * [`module`]: crossed modules (G, H, α, τ) and the semidirect product H⋊G.
//! * [`geometry`]: chart domains, Lie-algebra valued forms, finite-difference
//!   exterior calculus and equivariant lifts to P = M×G.
//! * [`integrate`]: Lie-group ODE integrators and quadrature.
//! * [`path`]: sampled paths, path families and presets.
//! * [`pathspace`]: horizontal lifts, tangent lifts, the connection ω and its
//!   transport.
//! * [`decorated`]: the decorated bundle, Ω, Ω̂, decorations h* and k*, the
//!   non-abelian Stokes check and the reduction experiment.
//! * [`categorical`]: source/target maps and compositions of the categorical
//!   group and of decorated paths.
//! * [`convergence`]: least-squares order estimates over grid refinements.

pub mod categorical;
pub mod convergence;
pub mod decorated;
pub mod error;
pub mod formset;
pub mod geometry;
pub mod integrate;
pub mod lie;
pub mod module;
pub mod path;
pub mod pathspace;

pub use error::{Error, Result};
pub use lie::{AlgebraElement, GroupElement, LieGroup};
pub use module::{CrossedModule, SemidirectAlgebraElement, SemidirectElement};
