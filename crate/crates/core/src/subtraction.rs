//! Local Taylor data at the preimage `x̂0` and the two leading homogeneous
//! terms `T₋₂`, `T₋₁` of the double-layer integrand.

use num_complex::Complex64;

use crate::geometry::{CurvedTriangle, DensityPolynomial, Jacobian, Point2, Vec3};
use crate::math;
use crate::projection::SingularityFrame;

/// Everything the subtraction terms need at `x̂0`.
///
/// All vectors are in physical space; `δ` arguments are reference-space
/// offsets `x̂ - x̂0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalExpansion {
    pub phi0: f64,
    pub dphi: Point2,
    pub n0: Vec3,
    pub n0_norm: f64,
    /// `n̂0/|n̂0|`.
    pub unit_normal: Vec3,
    pub jac0: Jacobian,
    pub f11: Vec3,
    pub f12: Vec3,
    pub f22: Vec3,
    pub dn1: Vec3,
    pub dn2: Vec3,
    /// Coefficients of `A₂ = a1 δ1² + a2 δ1δ2 + a3 δ2²`.
    pub a: [f64; 3],
    /// Coefficients of `C₃ = c1 δ1³ + c2 δ1²δ2 + c3 δ1δ2² + c4 δ2³`.
    pub c: [f64; 4],
}

pub fn build_expansion(
    tri: &CurvedTriangle,
    density: &DensityPolynomial,
    frame: &SingularityFrame,
) -> LocalExpansion {
    let x0 = frame.xhat0;
    let [f11, f12, f22] = tri.second_derivatives();
    let jac0 = frame.jac0;
    let f1: Vec3 = jac0.column(0).into();
    let f2: Vec3 = jac0.column(1).into();
    let n0 = frame.n0;
    let n0_norm = n0.norm();
    let u = n0 / n0_norm;
    LocalExpansion {
        phi0: density.eval(&x0),
        dphi: density.grad(&x0),
        n0,
        n0_norm,
        unit_normal: u,
        jac0,
        f11,
        f12,
        f22,
        dn1: f11.cross(&f2) + f1.cross(&f12),
        dn2: f12.cross(&f2) + f1.cross(&f22),
        a: [-u.dot(&f11), -2.0 * u.dot(&f12), -u.dot(&f22)],
        c: [
            f1.dot(&f11),
            2.0 * f1.dot(&f12) + f2.dot(&f11),
            f1.dot(&f22) + 2.0 * f2.dot(&f12),
            f2.dot(&f22),
        ],
    }
}

impl LocalExpansion {
    /// `φ0 |n̂0|`.
    pub fn strength(&self) -> f64 {
        self.phi0 * self.n0_norm
    }

    pub fn j0(&self, d: &Point2) -> Vec3 {
        self.jac0 * d
    }

    pub fn p2(&self, d: &Point2) -> Vec3 {
        self.f11 * (0.5 * d[0] * d[0]) + self.f12 * (d[0] * d[1]) + self.f22 * (0.5 * d[1] * d[1])
    }

    pub fn q1(&self, d: &Point2) -> Vec3 {
        self.n0 * self.dphi.dot(d) + (self.dn1 * d[0] + self.dn2 * d[1]) * self.phi0
    }

    pub fn a2(&self, d: &Point2) -> f64 {
        let [a1, a2, a3] = self.a;
        a1 * d[0] * d[0] + a2 * d[0] * d[1] + a3 * d[1] * d[1]
    }

    pub fn c3(&self, d: &Point2) -> f64 {
        let [c1, c2, c3, c4] = self.c;
        let (x, y) = (d[0], d[1]);
        c1 * x * x * x + c2 * x * x * y + c3 * x * y * y + c4 * y * y * y
    }

    /// `n̂_{x̂1} δ1 + n̂_{x̂2} δ2`.
    pub fn dn(&self, d: &Point2) -> Vec3 {
        self.dn1 * d[0] + self.dn2 * d[1]
    }

    /// Quadratic numerator of the `R₁⁻³` part of `T₋₁` at `h = 0`:
    /// `P₂·φ0 n̂0 + J0δ·Q₁`. The `J0δ·n̂0` factor of `Q₁` is exactly zero and
    /// is left out rather than computed as roundoff.
    pub fn n2(&self, d: &Point2) -> f64 {
        self.phi0 * (self.p2(d).dot(&self.n0) + self.j0(d).dot(&self.dn(d)))
    }

    /// `u·Q₁`, linear in `δ`.
    pub fn l1(&self, d: &Point2) -> f64 {
        self.n0_norm * self.dphi.dot(d) + self.phi0 * self.unit_normal.dot(&self.dn(d))
    }

    fn r1_squared(&self, d: &Point2, h: f64) -> f64 {
        self.j0(d).norm_squared() + h * h
    }
}

/// `T₋₂ = -h φ0 |n̂0| / R₁³`; exactly 0 when `h = 0`.
pub fn t_minus2(exp: &LocalExpansion, d: &Point2, h: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    let r1 = math::sqrt(exp.r1_squared(d, h));
    -h * exp.strength() / (r1 * r1 * r1)
}

pub fn t_minus1(exp: &LocalExpansion, d: &Point2, h: f64) -> f64 {
    let r1s = exp.r1_squared(d, h);
    let r1 = math::sqrt(r1s);
    let r3 = r1s * r1;
    let r5 = r3 * r1s;
    let first = (exp.n2(d) - h * exp.l1(d)) / r3;
    let c = exp.strength();
    first + 1.5 * exp.a2(d) * h * h * c / r5 + 1.5 * exp.c3(d) * h * c / r5
}

/// Unregularized mapped integrand `(F(x̂) - x0)·n̂(x̂) φ(x̂) / |F(x̂) - x0|³`.
///
/// `F(x̂) - x0` is assembled as `J0δ + P₂(δ) - (x0 - F(x̂0))`, which is exact
/// for quadratic maps and avoids differencing two nearby physical points.
/// Likewise `n̂(x̂) = n̂0 + Δn` is expanded around `x̂0` so that the vanishing
/// product `J0δ·n̂0` is never formed.
pub fn double_layer_integrand(
    tri: &CurvedTriangle,
    density: &DensityPolynomial,
    frame: &SingularityFrame,
    x: &Point2,
) -> f64 {
    let d = x - frame.xhat0;
    let [f11, f12, f22] = tri.second_derivatives();
    let f1: Vec3 = frame.jac0.column(0).into();
    let f2: Vec3 = frame.jac0.column(1).into();
    let g1 = f11 * d[0] + f12 * d[1];
    let g2 = f12 * d[0] + f22 * d[1];
    let dn = g1.cross(&f2) + f1.cross(&g2) + g1.cross(&g2);
    let n = frame.n0 + dn;
    let jd = frame.jac0 * d;
    let p2 = tri.quadratic_term(&d);
    let r = jd + p2 - frame.offset;
    let rn = r.norm();
    let num = jd.dot(&dn) + (p2 - frame.offset).dot(&n);
    num * density.eval(x) / (rn * rn * rn)
}

/// Double-layer integrand minus `T₋₂` and `T₋₁`.
pub fn regularized_integrand(
    tri: &CurvedTriangle,
    density: &DensityPolynomial,
    frame: &SingularityFrame,
    exp: &LocalExpansion,
    x: &Point2,
) -> f64 {
    let d = x - frame.xhat0;
    double_layer_integrand(tri, density, frame, x) - t_minus2(exp, &d, frame.h) - t_minus1(exp, &d, frame.h)
}

/// The three parts of `(1 - ikr) e^{ikr} / r³`: `(r⁻³, k²/(2r), S(r))`.
pub fn helmholtz_split(r: f64, k: f64) -> (f64, f64, Complex64) {
    (1.0 / (r * r * r), 0.5 * k * k / r, helmholtz_s(r, k))
}

/// `S(r) = (-1 - k²r²/2 + e^{ikr}(1 - ikr)) / r³`.
pub fn helmholtz_s(r: f64, k: f64) -> Complex64 {
    if k == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if (k * r).abs() < 0.5 {
        helmholtz_s_series(r, k)
    } else {
        helmholtz_s_direct(r, k)
    }
}

pub(crate) fn helmholtz_s_direct(r: f64, k: f64) -> Complex64 {
    let z = Complex64::new(0.0, k * r);
    let num = -1.0 - 0.5 * k * k * r * r + z.exp() * (1.0 - z);
    num / (r * r * r)
}

/// Maclaurin series `Σ_{m≥3} (1 - m) (ik)^m r^{m-3} / m!`.
pub(crate) fn helmholtz_s_series(r: f64, k: f64) -> Complex64 {
    let ik = Complex64::new(0.0, k);
    let ikr = ik * r;
    let mut term = ik * ik * ik / 6.0;
    let mut sum = Complex64::new(0.0, 0.0);
    for m in 3..33 {
        let contrib = term * (1.0 - m as f64);
        sum += contrib;
        if contrib.norm() <= 1e-18 * sum.norm() {
            break;
        }
        term = term * ikr / (m as f64 + 1.0);
    }
    sum
}

/// `(1 - ikr) e^{ikr}`, the factor turning the static kernel into the
/// Helmholtz one.
pub fn helmholtz_factor(r: f64, k: f64) -> Complex64 {
    let z = Complex64::new(0.0, k * r);
    z.exp() * (1.0 - z)
}
