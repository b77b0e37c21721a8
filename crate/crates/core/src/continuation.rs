//! Edge reductions of the integrals of `T₋₂` and `T₋₁` over the shifted
//! reference triangle.
//!
//! Every term is integrated in polar form around the origin of the shifted
//! triangle `T̂ - x̂0`: for any integrand `f`,
//!
//! ```text
//! ∫ f(x̂, h) dx̂ = Σ_j ŝ_j ∫_{edge j} K(ŷ, h) ds,   K(ŷ, h) = ∫₀¹ f(tŷ, h) t dt
//! ```
//!
//! with signed edge distances `ŝ_j`. For the homogeneous terms the radial
//! integral `K` has a closed form in `g = |J0 ŷ|` and `h`, collected below.

use core::f64::consts::PI;

use crate::geometry::{Point2, Vec3};
use crate::math;
use crate::projection::{vertex_angle, Classification, SingularityFrame};
use crate::quadrature::{gauss_segment, graded_segment_from, SegmentRule};
use crate::subtraction::LocalExpansion;

/// Below `H_ZERO · ρ` the height is treated as exactly zero.
pub const H_ZERO: f64 = 1e-14;

/// Switch from closed forms to series in `z = g/|h|`.
const SERIES_SWITCH: f64 = 0.5;

/// `∫₀¹ t^m (1 + t² z²)^{-k/2} dt` by its binomial series, `z < 1`.
fn radial_series(m: u32, k: u32, z: f64) -> f64 {
    let z2 = z * z;
    let mut coeff = 1.0;
    let mut zp = 1.0;
    let mut sum = 0.0;
    for j in 0..80 {
        let term = coeff * zp / (m as f64 + 2.0 * j as f64 + 1.0);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        coeff *= (-0.5 * k as f64 - j as f64) / (j as f64 + 1.0);
        zp *= z2;
    }
    sum
}

fn powi(x: f64, n: i32) -> f64 {
    let mut r = 1.0;
    for _ in 0..n {
        r *= x;
    }
    r
}

/// Radial kernels `∫₀¹ t^m / (t²g² + h²)^{k/2} dt` for the families in use.
pub mod kernels {
    use super::*;

    /// `(m, k) = (1, 3)`, times `|h|`: `1 / (a (a + |h|))`.
    pub fn solid(g: f64, h: f64) -> f64 {
        let ah = math::abs(h);
        let a = math::sqrt(g * g + h * h);
        1.0 / (a * (a + ah))
    }

    /// `(m, k) = (3, 3)`: `1 / (a (a + |h|)²)`.
    pub fn p(g: f64, h: f64) -> f64 {
        let ah = math::abs(h);
        let a = math::sqrt(g * g + h * h);
        1.0 / (a * (a + ah) * (a + ah))
    }

    /// `(m, k) = (2, 3)`: `(asinh(g/|h|) - g/a) / g³`. Diverges as `h → 0`.
    pub fn q(g: f64, h: f64) -> f64 {
        let ah = math::abs(h);
        if g < SERIES_SWITCH * ah {
            return radial_series(2, 3, g / ah) / (ah * ah * ah);
        }
        q_closed(g, ah)
    }

    pub(super) fn q_closed(g: f64, ah: f64) -> f64 {
        let a = math::sqrt(g * g + ah * ah);
        (math::asinh(g / ah) - g / a) / (g * g * g)
    }

    /// `h · q(g, h)`, continuous with value 0 at `h = 0`.
    pub fn hq(g: f64, h: f64) -> f64 {
        if h == 0.0 {
            0.0
        } else {
            h * q(g, h)
        }
    }

    /// `h² · ∫ t³/(t²g²+h²)^{5/2}`, i.e. `|h|(2a + |h|) / (3a³(a + |h|)²)`.
    pub fn h2a(g: f64, h: f64) -> f64 {
        let ah = math::abs(h);
        let a = math::sqrt(g * g + h * h);
        ah * (2.0 * a + ah) / (3.0 * a * a * a * (a + ah) * (a + ah))
    }

    /// `(m, k) = (4, 5)`: `(asinh(g/|h|) - g(4g² + 3h²)/(3a³)) / g⁵`.
    pub fn c(g: f64, h: f64) -> f64 {
        let ah = math::abs(h);
        if g < SERIES_SWITCH * ah {
            return radial_series(4, 5, g / ah) / powi(ah, 5);
        }
        c_closed(g, ah)
    }

    pub(super) fn c_closed(g: f64, ah: f64) -> f64 {
        let a = math::sqrt(g * g + ah * ah);
        (math::asinh(g / ah) - g * (4.0 * g * g + 3.0 * ah * ah) / (3.0 * a * a * a)) / powi(g, 5)
    }

    /// `h · c(g, h)`, 0 at `h = 0`.
    pub fn hc(g: f64, h: f64) -> f64 {
        if h == 0.0 {
            0.0
        } else {
            h * c(g, h)
        }
    }
}

/// One edge of the shifted triangle, `ŷ(t) = start + t·dir`, `t ∈ [0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub start: Point2,
    pub dir: Point2,
    /// Signed distance from the origin to the edge line.
    pub s: f64,
}

impl Edge {
    pub fn at(&self, t: f64) -> Point2 {
        self.start + self.dir * t
    }
}

pub fn shifted_edges(frame: &SingularityFrame) -> [Edge; 3] {
    let x = frame.xhat0;
    let v1 = Point2::new(-x[0], -x[1]);
    let v2 = Point2::new(1.0 - x[0], -x[1]);
    let v3 = Point2::new(-x[0], 1.0 - x[1]);
    [
        Edge { start: v1, dir: v2 - v1, s: frame.s[0] },
        Edge { start: v2, dir: v3 - v2, s: frame.s[1] },
        Edge { start: v3, dir: v1 - v3, s: frame.s[2] },
    ]
}

/// Rule on `[0, 1]` for an edge, graded around the parameter closest to the
/// origin in the `J0` metric.
pub fn edge_rule(frame: &SingularityFrame, edge: &Edge, base: &SegmentRule) -> SegmentRule {
    let jp = frame.jac0 * edge.start;
    let jd = frame.jac0 * edge.dir;
    let jd2 = jd.norm_squared();
    let foot = (-(jp.dot(&jd)) / jd2).clamp(0.0, 1.0);
    let g = (jp + jd * foot).norm();
    let d = math::sqrt(g * g + frame.h * frame.h) / math::sqrt(jd2);
    graded_segment_from(base, foot, d)
}

/// `Σ_j ŝ_j ∫_{edge j} f(ŷ) ds` with graded rules built on `base`.
pub fn edge_sum<F: FnMut(&Point2) -> f64>(frame: &SingularityFrame, base: &SegmentRule, mut f: F) -> f64 {
    let mut total = 0.0;
    for edge in shifted_edges(frame).iter() {
        if edge.s == 0.0 {
            continue;
        }
        let rule = edge_rule(frame, edge, base);
        let len = edge.dir.norm();
        total += edge.s * len * rule.integrate(|t| f(&edge.at(t)));
    }
    total
}

fn g_of(frame: &SingularityFrame, y: &Point2) -> f64 {
    (frame.jac0 * y).norm()
}

/// `I₋₂(h) = ∫_T̂ T₋₂`, returning 0 when `|h| < H_ZERO · ρ`.
pub fn i_minus2(exp: &LocalExpansion, frame: &SingularityFrame, n: usize) -> f64 {
    i_minus2_with(exp, frame, &gauss_segment(n))
}

pub fn i_minus2_with(exp: &LocalExpansion, frame: &SingularityFrame, base: &SegmentRule) -> f64 {
    let h = frame.h;
    if math::abs(h) < H_ZERO * frame.rho {
        return 0.0;
    }
    let sum = edge_sum(frame, base, |y| kernels::solid(g_of(frame, y), h));
    -math::signum0(h) * exp.strength() * sum
}

/// One-sided limits `(I₋₂(0⁺), I₋₂(0⁻))`.
pub fn i_minus2_limits(frame: &SingularityFrame, exp: &LocalExpansion) -> (f64, f64) {
    let omega = match frame.classification {
        Classification::Interior => 2.0 * PI,
        Classification::Edge(_) => PI,
        Classification::Vertex(i) => vertex_angle(&frame.jac0, i),
        Classification::Exterior => 0.0,
    };
    (-exp.phi0 * omega, exp.phi0 * omega)
}

/// `I₋₁ = ∫_T̂ T₋₁`.
pub fn i_minus1(exp: &LocalExpansion, frame: &SingularityFrame, n: usize) -> f64 {
    i_minus1_with(exp, frame, &gauss_segment(n))
}

pub fn i_minus1_with(exp: &LocalExpansion, frame: &SingularityFrame, base: &SegmentRule) -> f64 {
    let h = frame.h;
    let c = exp.strength();
    let curved = exp.a.iter().chain(exp.c.iter()).any(|&v| v != 0.0);
    edge_sum(frame, base, |y| {
        let g = g_of(frame, y);
        let mut v = exp.n2(y) * kernels::p(g, h) - exp.l1(y) * kernels::hq(g, h);
        if curved && h != 0.0 {
            v += 1.5 * c * (exp.a2(y) * kernels::h2a(g, h) + exp.c3(y) * kernels::hc(g, h));
        }
        v
    })
}

/// `Ĩ₋₂`, the integral of `φ0 |n̂0| (J0δ - h u)·e / R₁³` over `T̂`.
///
/// At `h = 0` the tangential family is taken as its principal value and the
/// normal family is 0.
pub fn elasticity_i_minus2(exp: &LocalExpansion, frame: &SingularityFrame, e: &Vec3, n: usize) -> f64 {
    let base = gauss_segment(n);
    let h = frame.h;
    let c = exp.strength();
    let tangential = if h == 0.0 {
        edge_sum(frame, &base, |y| {
            let jy = frame.jac0 * y;
            let g = jy.norm();
            jy.dot(e) * math::ln(g) / (g * g * g)
        })
    } else {
        edge_sum(frame, &base, |y| {
            let jy = frame.jac0 * y;
            jy.dot(e) * kernels::q(jy.norm(), h)
        })
    };
    let normal = if math::abs(h) < H_ZERO * frame.rho {
        0.0
    } else {
        -math::signum0(h) * exp.phi0 * exp.n0.dot(e) * edge_sum(frame, &base, |y| kernels::solid(g_of(frame, y), h))
    };
    c * tangential + normal
}
