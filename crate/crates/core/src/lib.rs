//! Area-minimizing symmetrization of domains along transvection orbits in
//! symmetric spaces of noncompact type.
//!
//! A domain is described over a chart `Ω` of the orbit space by a center
//! function `u` and a half-thickness `h`: along the orbit through `σ(x)` it
//! covers the parameter interval `[u(x) − h(x), u(x) + h(x)]`. Symmetrization
//! keeps `h` (and therefore the volume) and replaces `u` by the minimizer of
//! the boundary area.
//!
//! - [`geometry`]: closed-form fields `g`, `k`, `w` for the supported spaces.
//! - [`chart`]: simplicial discretization, quadrature and holonomy.
//! - [`functional`]: the area functional and its first two variations.
//! - [`solver`]: Newton minimization with `ε`-continuation and diagnostics.
//! - [`symmetrize`]: the symmetrization map and the winding scan.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod chart;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod levelset;
pub mod linalg;
pub mod solver;
pub mod symmetrize;

pub use analytic::{OneForm, ScalarField, SyntheticField};
pub use chart::{Chart, Grid, NodalFunction, Region, Winding};
pub use error::{Error, Result};
pub use functional::{AreaFunctional, Integrand};
pub use geometry::{EuclideanChart, FieldProvider, RadialCoord, SpaceBackend};
pub use solver::{continuation_solve, minimize_eps, SolveConfig, SolveReport, Solver};
pub use symmetrize::{build_helix, domain_volume, symmetrize, HelixScan, HelixSpec, SymmetrizedDomain};
