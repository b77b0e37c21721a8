//! Reference triangle, Lagrange shape functions, planar and quadratic maps.
//!
//! The reference triangle is `{(x1, x2) : x1 >= 0, x2 >= 0, x1 + x2 <= 1}`
//! with vertices `â1 = (0,0)`, `â2 = (1,0)`, `â3 = (0,1)` and edge midpoints
//! `â4 = (1/2,0)`, `â5 = (1/2,1/2)`, `â6 = (0,1/2)`. Control points follow the
//! same order, which is also the node order of Gmsh 6-node triangles.

use alloc::vec::Vec;

use nalgebra::{Matrix3x2, Vector2, Vector3};

use crate::error::{Error, Result};

/// Point (or displacement) in reference coordinates.
pub type Point2 = Vector2<f64>;
/// Point (or vector) in physical space.
pub type Vec3 = Vector3<f64>;
/// 3×2 Jacobian `[F_x1 | F_x2]`.
pub type Jacobian = Matrix3x2<f64>;

/// Degree `q` of the geometric map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Degree {
    Linear,
    Quadratic,
}

impl Degree {
    pub fn from_order(q: usize) -> Result<Self> {
        match q {
            1 => Ok(Degree::Linear),
            2 => Ok(Degree::Quadratic),
            other => Err(Error::UnsupportedDegree(other)),
        }
    }

    pub fn order(self) -> usize {
        match self {
            Degree::Linear => 1,
            Degree::Quadratic => 2,
        }
    }

    pub fn node_count(self) -> usize {
        match self {
            Degree::Linear => 3,
            Degree::Quadratic => 6,
        }
    }
}

/// Reference nodes `â1..â6`.
pub const REFERENCE_NODES: [[f64; 2]; 6] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [0.5, 0.0],
    [0.5, 0.5],
    [0.0, 0.5],
];

#[inline]
fn barycentric(x: &Point2) -> [f64; 3] {
    [1.0 - x[0] - x[1], x[0], x[1]]
}

const BARY_GRAD: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Values of the degree-`q` Lagrange basis at `x` (3 values for `q = 1`,
/// 6 for `q = 2`). `x` may lie outside the reference triangle.
pub fn shape_values(degree: Degree, x: &Point2) -> Vec<f64> {
    let l = barycentric(x);
    match degree {
        Degree::Linear => l.to_vec(),
        Degree::Quadratic => alloc::vec![
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[0] * l[2],
        ],
    }
}

/// Gradients of the degree-`q` Lagrange basis at `x`.
pub fn shape_gradients(degree: Degree, x: &Point2) -> Vec<Point2> {
    let l = barycentric(x);
    let g = |i: usize| Point2::new(BARY_GRAD[i][0], BARY_GRAD[i][1]);
    match degree {
        Degree::Linear => (0..3).map(g).collect(),
        Degree::Quadratic => alloc::vec![
            g(0) * (4.0 * l[0] - 1.0),
            g(1) * (4.0 * l[1] - 1.0),
            g(2) * (4.0 * l[2] - 1.0),
            (g(0) * l[1] + g(1) * l[0]) * 4.0,
            (g(1) * l[2] + g(2) * l[1]) * 4.0,
            (g(0) * l[2] + g(2) * l[0]) * 4.0,
        ],
    }
}

/// A planar (`q = 1`) or quadratic (`q = 2`) triangular patch.
///
/// The map is stored in monomial form
/// `F(x) = c0 + c1 x1 + c2 x2 + c11 x1² + c12 x1 x2 + c22 x2²`,
/// which equals `Σ φj(x) aj` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvedTriangle {
    degree: Degree,
    nodes: Vec<Vec3>,
    coeffs: [Vec3; 6],
    diameter: f64,
}

impl CurvedTriangle {
    /// Planar triangle through three vertices.
    pub fn linear(vertices: [Vec3; 3]) -> Result<Self> {
        Self::new(Degree::Linear, vertices.to_vec())
    }

    /// Quadratic triangle from vertices followed by the edge midpoints
    /// (edges 12, 23, 31).
    pub fn quadratic(nodes: [Vec3; 6]) -> Result<Self> {
        Self::new(Degree::Quadratic, nodes.to_vec())
    }

    /// Builds the patch from 3 or 6 control points.
    pub fn from_points(points: &[Vec3]) -> Result<Self> {
        match points.len() {
            3 => Self::new(Degree::Linear, points.to_vec()),
            6 => Self::new(Degree::Quadratic, points.to_vec()),
            n => Err(Error::ControlPointCount(n)),
        }
    }

    /// The quadratic test patch with `a5 = (a, b, c)`, all other nodes on
    /// the unit right triangle in the `z = 0` plane.
    pub fn paper_triangle(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::quadratic([
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.5, 0.0, 0.0),
            Vec3::new(a, b, c),
            Vec3::new(0.0, 0.5, 0.0),
        ])
    }

    fn new(degree: Degree, nodes: Vec<Vec3>) -> Result<Self> {
        if nodes.len() != degree.node_count() {
            return Err(Error::ControlPointCount(nodes.len()));
        }
        if nodes.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidParameter("control points must be finite"));
        }
        let a = &nodes;
        let coeffs = match degree {
            Degree::Linear => [
                a[0],
                a[1] - a[0],
                a[2] - a[0],
                Vec3::zeros(),
                Vec3::zeros(),
                Vec3::zeros(),
            ],
            Degree::Quadratic => [
                a[0],
                -3.0 * a[0] - a[1] + 4.0 * a[3],
                -3.0 * a[0] - a[2] + 4.0 * a[5],
                2.0 * a[0] + 2.0 * a[1] - 4.0 * a[3],
                4.0 * (a[0] - a[3] + a[4] - a[5]),
                2.0 * a[0] + 2.0 * a[2] - 4.0 * a[5],
            ],
        };
        let mut tri = CurvedTriangle {
            degree,
            nodes,
            coeffs,
            diameter: 0.0,
        };
        tri.diameter = tri.lattice_diameter();
        tri.check_nondegenerate()?;
        Ok(tri)
    }

    fn lattice_diameter(&self) -> f64 {
        const M: usize = 14;
        let mut pts = Vec::with_capacity((M + 1) * (M + 2) / 2);
        for i in 0..=M {
            for j in 0..=(M - i) {
                pts.push(self.map_point(&Point2::new(i as f64 / M as f64, j as f64 / M as f64)));
            }
        }
        let mut best = 0.0f64;
        for (k, p) in pts.iter().enumerate() {
            for q in &pts[k + 1..] {
                best = best.max((p - q).norm());
            }
        }
        best
    }

    fn check_nondegenerate(&self) -> Result<()> {
        if self.diameter <= 0.0 {
            return Err(Error::DegenerateTriangle);
        }
        let floor = 1e-14 * self.diameter * self.diameter;
        const M: usize = 6;
        for i in 0..=M {
            for j in 0..=(M - i) {
                let x = Point2::new(i as f64 / M as f64, j as f64 / M as f64);
                let norm = self.normal(&x).norm();
                if norm.is_nan() || norm < floor {
                    return Err(Error::DegenerateJacobian {
                        x1: x[0],
                        x2: x[1],
                        norm,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> Degree {
        self.degree
    }

    pub fn control_points(&self) -> &[Vec3] {
        &self.nodes
    }

    /// Diameter `ρ`: largest pairwise distance over a 15×15 barycentric
    /// lattice of mapped points.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn map_point(&self, x: &Point2) -> Vec3 {
        let c = &self.coeffs;
        let (u, v) = (x[0], x[1]);
        c[0] + c[1] * u + c[2] * v + c[3] * (u * u) + c[4] * (u * v) + c[5] * (v * v)
    }

    pub fn jacobian(&self, x: &Point2) -> Jacobian {
        let c = &self.coeffs;
        let (u, v) = (x[0], x[1]);
        let fx = c[1] + c[3] * (2.0 * u) + c[4] * v;
        let fy = c[2] + c[4] * u + c[5] * (2.0 * v);
        Jacobian::from_columns(&[fx, fy])
    }

    /// Unnormalized normal `F_x1 × F_x2`; its length is the area element.
    pub fn normal(&self, x: &Point2) -> Vec3 {
        let j = self.jacobian(x);
        j.column(0).cross(&j.column(1))
    }

    /// Like [`normal`](Self::normal) but fails when the Jacobian is rank
    /// deficient relative to the patch size.
    pub fn checked_normal(&self, x: &Point2) -> Result<Vec3> {
        let n = self.normal(x);
        let norm = n.norm();
        if norm < 1e-14 * self.diameter * self.diameter {
            return Err(Error::DegenerateJacobian {
                x1: x[0],
                x2: x[1],
                norm,
            });
        }
        Ok(n)
    }

    /// Constant second derivatives `(F_x1x1, F_x1x2, F_x2x2)`.
    pub fn second_derivatives(&self) -> [Vec3; 3] {
        let c = &self.coeffs;
        [c[3] * 2.0, c[4], c[5] * 2.0]
    }

    /// Quadratic Taylor term `P2(δ) = ½F11 δ1² + F12 δ1δ2 + ½F22 δ2²`.
    pub fn quadratic_term(&self, d: &Point2) -> Vec3 {
        let c = &self.coeffs;
        c[3] * (d[0] * d[0]) + c[4] * (d[0] * d[1]) + c[5] * (d[1] * d[1])
    }

    /// Translated copy of the patch.
    pub fn translated(&self, shift: &Vec3) -> Self {
        let nodes = self.nodes.iter().map(|p| p + shift).collect();
        let mut coeffs = self.coeffs;
        coeffs[0] += shift;
        CurvedTriangle {
            degree: self.degree,
            nodes,
            coeffs,
            diameter: self.diameter,
        }
    }
}

/// Polynomial density on the reference triangle, given by its nodal values.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityPolynomial {
    Constant(f64),
    /// Coefficients of `λ1, λ2, λ3`.
    Linear([f64; 3]),
    /// Coefficients of `φ1..φ6`.
    Quadratic([f64; 6]),
}

impl DensityPolynomial {
    pub fn one() -> Self {
        DensityPolynomial::Constant(1.0)
    }

    /// The `index`-th Lagrange basis function of degree `p` (0-based).
    pub fn basis(p: usize, index: usize) -> Result<Self> {
        match p {
            0 if index == 0 => Ok(Self::one()),
            1 if index < 3 => {
                let mut c = [0.0; 3];
                c[index] = 1.0;
                Ok(DensityPolynomial::Linear(c))
            }
            2 if index < 6 => {
                let mut c = [0.0; 6];
                c[index] = 1.0;
                Ok(DensityPolynomial::Quadratic(c))
            }
            0..=2 => Err(Error::InvalidParameter("basis index out of range")),
            other => Err(Error::UnsupportedDegree(other)),
        }
    }

    pub fn from_coefficients(values: &[f64]) -> Result<Self> {
        match values.len() {
            1 => Ok(DensityPolynomial::Constant(values[0])),
            3 => Ok(DensityPolynomial::Linear([values[0], values[1], values[2]])),
            6 => {
                let mut c = [0.0; 6];
                c.copy_from_slice(values);
                Ok(DensityPolynomial::Quadratic(c))
            }
            n => Err(Error::ControlPointCount(n)),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            DensityPolynomial::Constant(_) => 0,
            DensityPolynomial::Linear(_) => 1,
            DensityPolynomial::Quadratic(_) => 2,
        }
    }

    pub fn eval(&self, x: &Point2) -> f64 {
        match self {
            DensityPolynomial::Constant(c) => *c,
            DensityPolynomial::Linear(c) => dot(c, &shape_values(Degree::Linear, x)),
            DensityPolynomial::Quadratic(c) => dot(c, &shape_values(Degree::Quadratic, x)),
        }
    }

    pub fn grad(&self, x: &Point2) -> Point2 {
        let combine = |c: &[f64], g: Vec<Point2>| {
            c.iter()
                .zip(g.iter())
                .fold(Point2::zeros(), |acc, (ci, gi)| acc + gi * *ci)
        };
        match self {
            DensityPolynomial::Constant(_) => Point2::zeros(),
            DensityPolynomial::Linear(c) => combine(c, shape_gradients(Degree::Linear, x)),
            DensityPolynomial::Quadratic(c) => combine(c, shape_gradients(Degree::Quadratic, x)),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn linear_vertex_lagrange() {
        assert_eq!(shape_values(Degree::Linear, &p(0.0, 0.0)), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn quadratic_node_lagrange() {
        for (j, node) in REFERENCE_NODES.iter().enumerate() {
            let v = shape_values(Degree::Quadratic, &p(node[0], node[1]));
            for (i, vi) in v.iter().enumerate() {
                assert_eq!(*vi, if i == j { 1.0 } else { 0.0 }, "φ{} at â{}", i + 1, j + 1);
            }
        }
    }

    #[test]
    fn quadratic_at_centroid() {
        let v = shape_values(Degree::Quadratic, &p(1.0 / 3.0, 1.0 / 3.0));
        for vi in &v[..3] {
            assert_relative_eq!(*vi, -1.0 / 9.0, epsilon = 1e-15);
        }
        for vi in &v[3..] {
            assert_relative_eq!(*vi, 4.0 / 9.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn test_patch_map() {
        let t = CurvedTriangle::paper_triangle(0.6, 0.7, 0.5).unwrap();
        assert_relative_eq!(t.map_point(&p(0.5, 0.5)), Vec3::new(0.6, 0.7, 0.5), epsilon = 1e-15);
        assert_eq!(t.map_point(&p(0.0, 0.0)), Vec3::zeros());
        assert_relative_eq!(
            t.map_point(&p(0.2, 0.4)),
            Vec3::new(0.232, 0.464, 0.16),
            epsilon = 1e-15
        );
    }

    #[test]
    fn test_patch_derivatives() {
        let t = CurvedTriangle::paper_triangle(0.6, 0.7, 0.5).unwrap();
        let j = t.jacobian(&p(0.0, 0.0));
        assert_relative_eq!(j, Jacobian::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(t.normal(&p(0.0, 0.0)), Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
        let [f11, f12, f22] = t.second_derivatives();
        assert_relative_eq!(f11, Vec3::zeros(), epsilon = 1e-15);
        assert_relative_eq!(f22, Vec3::zeros(), epsilon = 1e-15);
        assert_relative_eq!(f12, Vec3::new(0.4, 0.8, 2.0), epsilon = 1e-14);
    }

    #[test]
    fn linear_patch_is_flat() {
        let t = CurvedTriangle::linear([
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ])
        .unwrap();
        assert_eq!(t.jacobian(&p(0.1, 0.2)), t.jacobian(&p(0.7, 0.05)));
        let n = t.normal(&p(0.3, 0.3));
        assert_eq!(n, Vec3::new(0.0, 0.0, 2.0));
        for d in t.second_derivatives() {
            assert_eq!(d, Vec3::zeros());
        }
    }

    #[test]
    fn diameters() {
        let unit = CurvedTriangle::linear([
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ])
        .unwrap();
        assert_relative_eq!(unit.diameter(), 2f64.sqrt(), epsilon = 1e-15);

        let t = CurvedTriangle::paper_triangle(0.6, 0.7, 0.5).unwrap();
        assert!(t.diameter() >= 2f64.sqrt());
        // brute-force maximization on a much finer lattice
        let m = 80;
        let mut pts = Vec::new();
        for i in 0..=m {
            for j in 0..=(m - i) {
                pts.push(t.map_point(&p(i as f64 / m as f64, j as f64 / m as f64)));
            }
        }
        let mut best = 0.0f64;
        for a in &pts {
            for b in &pts {
                best = best.max((a - b).norm());
            }
        }
        assert!((t.diameter() - best).abs() <= 0.01 * best);
    }

    #[test]
    fn densities() {
        let one = DensityPolynomial::one();
        assert_eq!(one.eval(&p(0.3, 0.1)), 1.0);
        assert_eq!(one.grad(&p(0.3, 0.1)), Point2::zeros());

        let l2 = DensityPolynomial::basis(1, 1).unwrap();
        assert_relative_eq!(l2.eval(&p(0.2, 0.4)), 0.2);
        assert_relative_eq!(l2.grad(&p(0.2, 0.4)), Point2::new(1.0, 0.0));

        let phi5 = DensityPolynomial::basis(2, 4).unwrap();
        assert_relative_eq!(phi5.eval(&p(0.5, 0.5)), 1.0);
        // ∇(4 λ2 λ3) = 4 (λ3, λ2) = (2, 2) at (1/2, 1/2)
        assert_relative_eq!(phi5.grad(&p(0.5, 0.5)), Point2::new(2.0, 2.0));
    }

    #[test]
    fn density_gradient_matches_finite_differences() {
        let d = DensityPolynomial::Quadratic([0.3, -1.2, 0.7, 2.0, 0.1, -0.4]);
        let x = p(0.27, 0.31);
        let e = 1e-6;
        let fd = Point2::new(
            (d.eval(&p(x[0] + e, x[1])) - d.eval(&p(x[0] - e, x[1]))) / (2.0 * e),
            (d.eval(&p(x[0], x[1] + e)) - d.eval(&p(x[0], x[1] - e))) / (2.0 * e),
        );
        assert_relative_eq!(d.grad(&x), fd, epsilon = 1e-8);
    }

    #[test]
    fn errors() {
        assert_eq!(Degree::from_order(3), Err(Error::UnsupportedDegree(3)));
        assert_eq!(
            CurvedTriangle::from_points(&[Vec3::zeros(); 4]).unwrap_err(),
            Error::ControlPointCount(4)
        );
        let collinear = CurvedTriangle::linear([
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ]);
        assert!(matches!(collinear, Err(Error::DegenerateJacobian { .. })));
    }

    #[test]
    fn node_interpolation() {
        let t = CurvedTriangle::paper_triangle(0.6, 0.7, 0.5).unwrap();
        for (node, a) in REFERENCE_NODES.iter().zip(t.control_points()) {
            assert_relative_eq!(t.map_point(&p(node[0], node[1])), *a, epsilon = 1e-15);
        }
    }
}
