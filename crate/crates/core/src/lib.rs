//! Singular and near-singular double-layer quadrature over planar and
//! quadratic triangles.
//!
//! The integrals handled here have the form
//!
//! ```text
//! I(x0) = ∫_T (x - x0)·n(x) / |x - x0|^3 · φ(F⁻¹(x)) dS(x)
//! ```
//!
//! where `T` is the image of the reference triangle under a polynomial map
//! `F` of degree 1 or 2 and `φ` is a polynomial density on the reference
//! triangle. The pipeline maps the integral back to the reference element,
//! locates the preimage of the closest point to `x0`, subtracts the two
//! leading homogeneous terms of the integrand, and integrates those terms
//! exactly through one-dimensional integrals over the edges of the shifted
//! reference triangle.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
mod math;

pub mod continuation;
pub mod geometry;
pub mod integrator;
pub mod projection;
pub mod quadrature;
pub mod solid_angle;
pub mod subtraction;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use geometry::{CurvedTriangle, Degree, DensityPolynomial, Jacobian, Point2, Vec3};
pub use integrator::{
    bem_pair_entry, convergence_sweep, integrate_double_layer, integrate_pair,
    ConvergenceReport, DoubleLayerIntegrator, IntegralResult, PairIntegrator, PairKernel,
    RegularizationLevel,
};
pub use projection::{project, Classification, ProjectionOptions, SingularityFrame};
pub use quadrature::{gauss_segment, graded_segment, triangle_rule, SegmentRule, TriangleRule};
pub use subtraction::LocalExpansion;
