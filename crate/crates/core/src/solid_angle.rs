//! Closed-form solid angle of a planar triangle and its limiting values.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{Jacobian, Vec3};
use crate::math;
use crate::projection::{vertex_angle, Classification};

fn clamped_acos(x: f64) -> f64 {
    math::acos(x.clamp(-1.0, 1.0))
}

/// Signed solid angle subtended by the triangle `(a1, a2, a3)` at `x0`.
///
/// The sign follows `(x0 - a1)·n` with `n ∝ (a2 - a1) × (a3 - a2)`. Points in
/// the plane of the triangle get 0.
pub fn solid_angle_planar(a1: &Vec3, a2: &Vec3, a3: &Vec3, x0: &Vec3) -> Result<f64> {
    let n = (a2 - a1).cross(&(a3 - a2));
    let rho = (a2 - a1).norm().max((a3 - a2).norm()).max((a1 - a3).norm());
    if n.norm() <= 1e-14 * rho * rho {
        return Err(Error::DegenerateTriangle);
    }
    let r1 = a1 - x0;
    let r2 = a2 - x0;
    let r3 = a3 - x0;
    let (l1, l2, l3) = (r1.norm(), r2.norm(), r3.norm());
    if l1 == 0.0 || l2 == 0.0 || l3 == 0.0 {
        return Err(Error::VertexCoincidence);
    }
    let side = (x0 - a1).dot(&n);
    if side.abs() <= 1e-14 * rho * n.norm() {
        return Ok(0.0);
    }
    let c1 = r2.dot(&r3) / (l2 * l3);
    let c2 = r1.dot(&r3) / (l1 * l3);
    let c3 = r1.dot(&r2) / (l1 * l2);
    let s1 = math::sqrt((1.0 - c1 * c1).max(0.0));
    let s2 = math::sqrt((1.0 - c2 * c2).max(0.0));
    let s3 = math::sqrt((1.0 - c3 * c3).max(0.0));
    if s1 * s2 * s3 < 1e-14 {
        // x0 on the line through an edge, off the triangle plane is impossible
        // here, so this only happens in-plane; kept as a guard
        return Ok(0.0);
    }
    let phi1 = clamped_acos((c1 - c2 * c3) / (s2 * s3));
    let phi2 = clamped_acos((c2 - c1 * c3) / (s1 * s3));
    let phi3 = clamped_acos((c3 - c1 * c2) / (s1 * s2));
    Ok(side.signum() * (phi1 + phi2 + phi3 - PI))
}

/// Side of the surface from which a limit is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// Limit of the solid angle as `x0` tends to the patch from `side`.
///
/// Vertex angles are measured between the images under `jac0` of the two
/// reference edges leaving that vertex.
pub fn limit_value(classification: Classification, side: Side, jac0: &Jacobian) -> f64 {
    let magnitude = match classification {
        Classification::Interior => 2.0 * PI,
        Classification::Edge(_) => PI,
        Classification::Vertex(i) => vertex_angle(jac0, i),
        Classification::Exterior => 0.0,
    };
    match side {
        Side::Plus => magnitude,
        Side::Minus => -magnitude,
    }
}
