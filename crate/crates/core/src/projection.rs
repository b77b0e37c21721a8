//! Closest-point projection onto a patch and the singularity frame built
//! around its preimage.

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::geometry::{CurvedTriangle, Jacobian, Point2, Vec3};
use crate::math;

/// Where the preimage `x̂0` lies relative to the reference triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Interior,
    /// On edge `j` (1-based): 1 = `â1â2`, 2 = `â2â3`, 3 = `â3â1`.
    Edge(u8),
    /// At vertex `i` (1-based).
    Vertex(u8),
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    /// Stationarity tolerance on `|Jᵀ(F - x0)|`, relative to `ρ`.
    pub tol: f64,
    pub max_iter: usize,
    /// Band around the edges used by [`classify`].
    pub tol_geo: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            tol: 1e-13,
            max_iter: 50,
            tol_geo: 1e-10,
        }
    }
}

/// Local frame around the preimage of the closest point.
///
/// `x0 = foot + offset` with `offset = h n̂0/|n̂0|` up to the projection
/// tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityFrame {
    pub xhat0: Point2,
    pub foot: Vec3,
    pub x0: Vec3,
    /// `x0 - foot`, kept explicitly so integrands never difference `F(x̂)`
    /// against `x0`.
    pub offset: Vec3,
    pub h: f64,
    /// Unnormalized normal `n̂0 = n̂(x̂0)`.
    pub n0: Vec3,
    pub jac0: Jacobian,
    /// Signed distances from `x̂0` to the three edges.
    pub s: [f64; 3],
    pub classification: Classification,
    pub rho: f64,
}

impl SingularityFrame {
    /// Frame at a known preimage, with `x0 = F(x̂0) + h n̂0/|n̂0|`.
    pub fn at_preimage(tri: &CurvedTriangle, xhat0: Point2, h: f64) -> Result<Self> {
        let foot = tri.map_point(&xhat0);
        let n0 = tri.checked_normal(&xhat0)?;
        let offset = n0 * (h / n0.norm());
        Ok(Self::assemble(tri, xhat0, foot, foot + offset, offset, h, n0, 1e-10))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        tri: &CurvedTriangle,
        xhat0: Point2,
        foot: Vec3,
        x0: Vec3,
        offset: Vec3,
        h: f64,
        n0: Vec3,
        tol_geo: f64,
    ) -> Self {
        let s = signed_edge_distances(&xhat0);
        SingularityFrame {
            xhat0,
            foot,
            x0,
            offset,
            h,
            n0,
            jac0: tri.jacobian(&xhat0),
            s,
            classification: classify_distances(&s, tol_geo),
            rho: tri.diameter(),
        }
    }

    pub fn unit_normal(&self) -> Vec3 {
        self.n0 / self.n0.norm()
    }

    pub fn n0_norm(&self) -> f64 {
        self.n0.norm()
    }
}

/// `(ŝ1, ŝ2, ŝ3) = (ŷ0, (1 - x̂0 - ŷ0)/√2, x̂0)`.
pub fn signed_edge_distances(x: &Point2) -> [f64; 3] {
    [x[1], FRAC_1_SQRT_2 * (1.0 - x[0] - x[1]), x[0]]
}

pub fn classify(frame: &SingularityFrame, tol_geo: f64) -> Classification {
    classify_distances(&frame.s, tol_geo)
}

fn classify_distances(s: &[f64; 3], tol: f64) -> Classification {
    if s.iter().any(|&v| v < -tol) {
        return Classification::Exterior;
    }
    let on: Vec<usize> = (0..3).filter(|&j| s[j] <= tol).collect();
    match on.as_slice() {
        [] => Classification::Interior,
        [j] => Classification::Edge(*j as u8 + 1),
        [0, 2] => Classification::Vertex(1),
        [0, 1] => Classification::Vertex(2),
        [1, 2] => Classification::Vertex(3),
        // all three edges within the band: only possible for huge tol
        _ => Classification::Exterior,
    }
}

/// Finds the preimage `x̂0` of the point of the (polynomially extended)
/// patch closest to `x0` and builds the frame around it.
///
/// Newton iteration on `g(x̂) = ½|F(x̂) - x0|²` with the exact Hessian
/// `JᵀJ + (F - x0)·F''`, falling back to the Gauss–Newton matrix when the
/// Hessian is indefinite, plus step halving. Starts are the three best
/// points of a barycentric lattice; distinct minimizers at equal distance are
/// reported as [`Error::AmbiguousProjection`].
pub fn project(tri: &CurvedTriangle, x0: &Vec3, opts: &ProjectionOptions) -> Result<SingularityFrame> {
    let rho = tri.diameter();
    let mut starts: Vec<(f64, Point2)> = Vec::with_capacity(10);
    for i in 0..=3 {
        for j in 0..=(3 - i) {
            let p = Point2::new(i as f64 / 3.0, j as f64 / 3.0);
            starts.push(((tri.map_point(&p) - x0).norm_squared(), p));
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut found: Vec<(Point2, f64)> = Vec::new();
    let mut last_err = None;
    for (_, start) in starts.iter().take(3) {
        match newton(tri, x0, *start, opts) {
            Ok(x) => {
                let dist = (tri.map_point(&x) - x0).norm();
                if !found.iter().any(|(y, _)| (y - x).norm() < 1e-7) {
                    found.push((x, dist));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    if found.is_empty() {
        return Err(last_err.unwrap_or(Error::NoConvergence {
            iterations: opts.max_iter,
            residual: f64::NAN,
        }));
    }
    found.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best, best_dist) = found[0];
    for &(other, dist) in &found[1..] {
        if (other - best).norm() > 1e-6 && dist - best_dist <= 1e-10 * rho {
            return Err(Error::AmbiguousProjection {
                first: [best[0], best[1]],
                second: [other[0], other[1]],
            });
        }
    }

    let foot = tri.map_point(&best);
    let n0 = tri.checked_normal(&best)?;
    let offset = x0 - foot;
    let h = offset.dot(&n0) / n0.norm();
    Ok(SingularityFrame::assemble(
        tri, best, foot, *x0, offset, h, n0, opts.tol_geo,
    ))
}

fn newton(tri: &CurvedTriangle, x0: &Vec3, start: Point2, opts: &ProjectionOptions) -> Result<Point2> {
    let rho = tri.diameter();
    let tol = opts.tol * rho;
    let [f11, f12, f22] = tri.second_derivatives();
    let mut x = start;
    let objective = |x: &Point2| 0.5 * (tri.map_point(x) - x0).norm_squared();
    let gradient = |x: &Point2| (tri.jacobian(x).transpose() * (tri.map_point(x) - x0)).norm();
    let mut g = objective(&x);
    let mut grad_norm = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let r = tri.map_point(&x) - x0;
        let j = tri.jacobian(&x);
        let grad = j.transpose() * r;
        grad_norm = grad.norm();
        if grad_norm <= tol {
            return Ok(x);
        }
        let gn = j.transpose() * j;
        let curv = Matrix2::new(r.dot(&f11), r.dot(&f12), r.dot(&f12), r.dot(&f22));
        let hess = gn + curv;
        let step = if hess[(0, 0)] > 0.0 && hess.determinant() > 0.0 {
            hess.lu().solve(&(-grad))
        } else {
            gn.lu().solve(&(-grad))
        };
        let Some(mut step) = step else {
            break;
        };
        let mut accepted = false;
        for _ in 0..40 {
            let trial = x + step;
            let gt = objective(&trial);
            // near the minimum the decrease in g drops below its rounding, so
            // a smaller gradient also counts as progress
            if gt <= g || gradient(&trial) < grad_norm {
                x = trial;
                g = gt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step.norm() <= 1e-16 * (1.0 + x.norm()) {
            // no further decrease possible at double precision
            let r = tri.map_point(&x) - x0;
            grad_norm = (tri.jacobian(&x).transpose() * r).norm();
            if grad_norm <= 1e3 * tol {
                return Ok(x);
            }
            break;
        }
        if x.norm() > 1e3 {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: grad_norm,
    })
}

/// Angle at vertex `i` (1-based) between the images under `jac` of the two
/// reference edges leaving that vertex.
pub fn vertex_angle(jac: &Jacobian, vertex: u8) -> f64 {
    let (e1, e2) = match vertex {
        1 => (Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)),
        2 => (Point2::new(-1.0, 0.0), Point2::new(-1.0, 1.0)),
        _ => (Point2::new(0.0, -1.0), Point2::new(1.0, -1.0)),
    };
    let a = jac * e1;
    let b = jac * e2;
    math::atan2(a.cross(&b).norm(), a.dot(&b))
}
