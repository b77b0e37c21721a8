//! Brute-force 2D integration used as an oracle by the unit tests.
//!
//! The reference triangle is split into the fan of (signed) triangles with
//! apex at the singular point, each mapped to the unit square by the Duffy
//! collapse. Panels are refined geometrically towards the apex and towards
//! the closest point of the opposite edge.

use std::vec::Vec;

use crate::geometry::{Jacobian, Point2};
use crate::quadrature::gauss_segment;

const VERTS: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

fn breakpoints(foot: f64, d: f64) -> Vec<f64> {
    let foot = foot.clamp(0.0, 1.0);
    let d = d.max(1e-15);
    let mut pts = std::vec![0.0, foot, 1.0];
    let mut s = d;
    while s < 1.0 {
        for p in [foot - s, foot + s] {
            if p > 0.0 && p < 1.0 {
                pts.push(p);
            }
        }
        s *= 2.0;
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-300);
    pts
}

fn composite<F: FnMut(f64) -> f64>(pts: &[f64], order: usize, mut f: F) -> f64 {
    let rule = gauss_segment(order);
    pts.windows(2)
        .map(|w| (w[1] - w[0]) * rule.integrate(|t| f(w[0] + (w[1] - w[0]) * t)))
        .sum()
}

fn fan<F, C>(f: &F, apex: Point2, scale: f64, order: usize, cut: C) -> f64
where
    F: Fn(&Point2) -> f64,
    C: Fn(&Point2) -> f64,
{
    let mut total = 0.0;
    for i in 0..3 {
        let b = Point2::new(VERTS[i][0], VERTS[i][1]);
        let c = Point2::new(VERTS[(i + 1) % 3][0], VERTS[(i + 1) % 3][1]);
        let eb = b - apex;
        let bc = c - b;
        let area2 = eb[0] * bc[1] - eb[1] * bc[0];
        if area2.abs() < 1e-15 {
            continue;
        }
        let vfoot = -(eb.dot(&bc)) / bc.norm_squared();
        let vd = (area2.abs() / bc.norm()) / bc.norm();
        let vpts = breakpoints(vfoot, vd.min(1.0) * 0.5);
        total += area2
            * composite(&vpts, order, |v| {
                let w = eb + bc * v;
                let lo = cut(&w).max(0.0);
                if lo >= 1.0 {
                    return 0.0;
                }
                let upts = if lo > 0.0 {
                    let mut p = std::vec![lo];
                    let mut s = lo * 2.0;
                    while s < 1.0 {
                        p.push(s);
                        s *= 2.0;
                    }
                    p.push(1.0);
                    p
                } else {
                    breakpoints(0.0, (scale / w.norm()).clamp(1e-14, 1.0))
                };
                composite(&upts, order, |u| u * f(&(apex + w * u)))
            });
    }
    total
}

/// `∫_T̂ f` for an integrand singular or near-singular at `apex` on the scale
/// of `|h|`-like offsets. Two orders are compared against `tol`.
pub fn adaptive_triangle<F: Fn(&Point2) -> f64>(f: &F, apex: Point2, tol: f64) -> f64 {
    let scale = 1e-4_f64;
    let coarse = fan(f, apex, scale * 1e-4, 20, |_| 0.0);
    let fine = fan(f, apex, scale * 1e-5, 30, |_| 0.0);
    assert!(
        (coarse - fine).abs() <= tol.max(1e-12 * fine.abs()) * 10.0,
        "oracle not converged: {coarse} vs {fine}"
    );
    fine
}

/// `∫_{T̂ minus {|J(x̂ - apex)| < eps}} f`.
pub fn excluded_disk<F: Fn(&Point2) -> f64>(f: &F, apex: Point2, jac: &Jacobian, eps: f64, _tol: f64) -> f64 {
    fan(f, apex, 1e-14, 30, |w| eps / (jac * w).norm())
}
