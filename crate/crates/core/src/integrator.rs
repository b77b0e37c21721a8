//! Single-triangle and two-triangle double-layer integrals.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::continuation::{i_minus1_with, i_minus2_with};
use crate::error::{Error, Result};
use crate::geometry::{CurvedTriangle, DensityPolynomial, Point2, Vec3};
use crate::math;
use crate::projection::{project, ProjectionOptions, SingularityFrame};
use crate::quadrature::{gauss_segment, triangle_rule, SegmentRule, TriangleRule};
use crate::subtraction::{
    build_expansion, double_layer_integrand, helmholtz_factor, helmholtz_s, t_minus1, t_minus2,
};

/// Smallest 1D order used for the edge integrals, whatever `n` is.
pub const MIN_EDGE_ORDER: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegularizationLevel {
    /// Plain Gauss on the mapped integrand.
    Off,
    /// Subtract `T₋₂`, add back `I₋₂`.
    T2,
    /// Subtract `T₋₂` and `T₋₁`, add back `I₋₂ + I₋₁`.
    T2T1,
}

impl RegularizationLevel {
    pub const ALL: [RegularizationLevel; 3] = [Self::Off, Self::T2, Self::T2T1];

    pub fn name(self) -> &'static str {
        match self {
            Self::Off => "none",
            Self::T2 => "t2",
            Self::T2T1 => "t2t1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" | "off" => Some(Self::Off),
            "t2" => Some(Self::T2),
            "t2t1" => Some(Self::T2T1),
            _ => None,
        }
    }

    /// Level picked when the caller does not ask for one: full subtraction
    /// when the point is closer than `ρ` and its preimage is not far outside
    /// the reference triangle.
    pub fn auto(frame: &SingularityFrame) -> Self {
        if math::abs(frame.h) < frame.rho && frame.s.iter().all(|&s| s > -0.5) {
            Self::T2T1
        } else {
            Self::Off
        }
    }

    fn subtracts_t2(self) -> bool {
        !matches!(self, Self::Off)
    }

    fn subtracts_t1(self) -> bool {
        matches!(self, Self::T2T1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairKernel {
    /// `(x - y)·n(x) / |x - y|³`.
    DoubleLayer,
    /// `(1 - ikr) e^{ikr} (x - y)·n(x) / r³`.
    Helmholtz { k: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralResult {
    pub value: Complex64,
    /// Quadrature order per dimension.
    pub n: usize,
    /// Total number of 2D (or 4D) points.
    pub points: usize,
    pub regularization: RegularizationLevel,
    pub frame: Option<SingularityFrame>,
    pub warnings: Vec<String>,
}

impl IntegralResult {
    pub fn re(&self) -> f64 {
        self.value.re
    }
}

fn check_order(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::QuadratureOrder { min: 2, got: n });
    }
    Ok(())
}

/// Compensated (Neumaier) sum in slice order.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if math::abs(sum) >= math::abs(v) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn complex_sum<I: IntoIterator<Item = Complex64>>(values: I) -> Complex64 {
    let v: Vec<Complex64> = values.into_iter().collect();
    Complex64::new(neumaier_sum(v.iter().map(|z| z.re)), neumaier_sum(v.iter().map(|z| z.im)))
}

/// Double-layer integrator with its rules built once for a given `n`.
#[derive(Debug, Clone)]
pub struct DoubleLayerIntegrator {
    n: usize,
    rule: TriangleRule,
    edge: SegmentRule,
    projection: ProjectionOptions,
}

impl DoubleLayerIntegrator {
    pub fn new(n: usize) -> Result<Self> {
        check_order(n)?;
        Ok(DoubleLayerIntegrator {
            n,
            rule: triangle_rule(n),
            edge: gauss_segment(n.max(MIN_EDGE_ORDER)),
            projection: ProjectionOptions::default(),
        })
    }

    pub fn with_projection(mut self, opts: ProjectionOptions) -> Self {
        self.projection = opts;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rule(&self) -> &TriangleRule {
        &self.rule
    }

    /// `∫_T (x - x0)·n(x) φ / |x - x0|³ dS`. `level = None` picks
    /// [`RegularizationLevel::auto`].
    pub fn integrate(
        &self,
        tri: &CurvedTriangle,
        density: &DensityPolynomial,
        x0: &Vec3,
        level: Option<RegularizationLevel>,
    ) -> Result<IntegralResult> {
        let mut warnings = Vec::new();
        let frame = match project(tri, x0, &self.projection) {
            Ok(f) => Some(f),
            Err(e) => match level {
                Some(RegularizationLevel::T2) | Some(RegularizationLevel::T2T1) => return Err(e),
                _ => {
                    warnings.push(format!("projection failed ({e}); using plain quadrature"));
                    None
                }
            },
        };
        let (value, used) = match &frame {
            Some(f) => {
                let lvl = level.unwrap_or_else(|| RegularizationLevel::auto(f));
                (self.integrate_in_frame(tri, density, f, lvl), lvl)
            }
            None => (self.plain(tri, density, x0), RegularizationLevel::Off),
        };
        Ok(IntegralResult {
            value: Complex64::new(value, 0.0),
            n: self.n,
            points: self.rule.len(),
            regularization: used,
            frame,
            warnings,
        })
    }

    fn plain(&self, tri: &CurvedTriangle, density: &DensityPolynomial, x0: &Vec3) -> f64 {
        neumaier_sum(self.rule.nodes.iter().zip(&self.rule.weights).map(|(x, &w)| {
            let r = tri.map_point(x) - x0;
            let rn = r.norm();
            w * r.dot(&tri.normal(x)) * density.eval(x) / (rn * rn * rn)
        }))
    }

    /// Core evaluation once the singularity frame is known. Nodes that
    /// coincide with an on-surface singular point are skipped; the
    /// regularized integrand is bounded there.
    pub fn integrate_in_frame(
        &self,
        tri: &CurvedTriangle,
        density: &DensityPolynomial,
        frame: &SingularityFrame,
        level: RegularizationLevel,
    ) -> f64 {
        let h = frame.h;
        let exp = build_expansion(tri, density, frame);
        let on_surface = math::abs(h) < 1e-14 * frame.rho;
        let area = neumaier_sum(self.rule.nodes.iter().zip(&self.rule.weights).map(|(x, &w)| {
            let d = x - frame.xhat0;
            if on_surface && d.norm() < 1e-14 {
                return 0.0;
            }
            let mut v = double_layer_integrand(tri, density, frame, x);
            if level.subtracts_t2() {
                v -= t_minus2(&exp, &d, h);
            }
            if level.subtracts_t1() {
                v -= t_minus1(&exp, &d, h);
            }
            w * v
        }));
        let mut value = area;
        if level.subtracts_t2() {
            value += i_minus2_with(&exp, frame, &self.edge);
        }
        if level.subtracts_t1() {
            value += i_minus1_with(&exp, frame, &self.edge);
        }
        value
    }

    /// `∫_T [k²/(2r) + S(r)] (x - x0)·n(x) φ dS` by plain quadrature: the
    /// bounded part of the Helmholtz kernel.
    pub fn helmholtz_remainder(
        &self,
        tri: &CurvedTriangle,
        density: &DensityPolynomial,
        frame: &SingularityFrame,
        k: f64,
    ) -> Complex64 {
        if k == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        complex_sum(self.rule.nodes.iter().zip(&self.rule.weights).map(|(x, &w)| {
            let d = x - frame.xhat0;
            let r = frame.jac0 * d + tri.quadratic_term(&d) - frame.offset;
            let rn = r.norm();
            if rn < 1e-14 * frame.rho {
                return Complex64::new(0.0, 0.0);
            }
            let kernel = helmholtz_s(rn, k) + 0.5 * k * k / rn;
            kernel * (w * r.dot(&tri.normal(x)) * density.eval(x))
        }))
    }
}

/// One-shot wrapper around [`DoubleLayerIntegrator`].
pub fn integrate_double_layer(
    tri: &CurvedTriangle,
    density: &DensityPolynomial,
    x0: &Vec3,
    n: usize,
    level: Option<RegularizationLevel>,
) -> Result<IntegralResult> {
    DoubleLayerIntegrator::new(n)?.integrate(tri, density, x0, level)
}

/// Two-triangle integral
/// `∫_Y ∫_X K(x, y) φ_X(x) φ_Y(y) dS(x) dS(y)` with the outer integral over
/// `Y` by the `n²`-point triangle rule and the inner one by
/// [`DoubleLayerIntegrator`] at each outer node.
#[derive(Debug, Clone)]
pub struct PairIntegrator {
    inner: DoubleLayerIntegrator,
    outer: TriangleRule,
}

/// Contribution of one outer node.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterTerm {
    pub value: Complex64,
    pub warning: Option<String>,
}

impl PairIntegrator {
    pub fn new(n: usize) -> Result<Self> {
        let inner = DoubleLayerIntegrator::new(n)?;
        Ok(PairIntegrator {
            outer: inner.rule.clone(),
            inner,
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn outer_nodes(&self) -> &[Point2] {
        &self.outer.nodes
    }

    pub fn points(&self) -> usize {
        self.outer.len() * self.inner.rule.len()
    }

    /// Weighted inner integral at outer node `index`.
    #[allow(clippy::too_many_arguments)]
    pub fn outer_term(
        &self,
        tri_x: &CurvedTriangle,
        tri_y: &CurvedTriangle,
        dens_x: &DensityPolynomial,
        dens_y: &DensityPolynomial,
        level: Option<RegularizationLevel>,
        kernel: PairKernel,
        index: usize,
    ) -> Result<OuterTerm> {
        let yhat = self.outer.nodes[index];
        let weight = self.outer.weights[index] * tri_y.normal(&yhat).norm() * dens_y.eval(&yhat);
        let y = tri_y.map_point(&yhat);
        let mut warning = None;
        let frame = if tri_x == tri_y {
            Some(SingularityFrame::at_preimage(tri_x, yhat, 0.0)?)
        } else {
            match project(tri_x, &y, &self.inner.projection) {
                Ok(f) => Some(f),
                Err(e) => match level {
                    Some(RegularizationLevel::T2) | Some(RegularizationLevel::T2T1) => return Err(e),
                    _ => {
                        warning = Some(format!("outer node {index}: projection failed ({e})"));
                        None
                    }
                },
            }
        };
        let value = match &frame {
            Some(f) => {
                let lvl = level.unwrap_or_else(|| RegularizationLevel::auto(f));
                let stat = Complex64::new(self.inner.integrate_in_frame(tri_x, dens_x, f, lvl), 0.0);
                match kernel {
                    PairKernel::DoubleLayer => stat,
                    PairKernel::Helmholtz { k } => stat + self.inner.helmholtz_remainder(tri_x, dens_x, f, k),
                }
            }
            None => self.plain_inner(tri_x, dens_x, &y, kernel),
        };
        Ok(OuterTerm {
            value: value * weight,
            warning,
        })
    }

    fn plain_inner(&self, tri: &CurvedTriangle, dens: &DensityPolynomial, y: &Vec3, kernel: PairKernel) -> Complex64 {
        let rule = &self.inner.rule;
        complex_sum(rule.nodes.iter().zip(&rule.weights).map(|(x, &w)| {
            let r = tri.map_point(x) - y;
            let rn = r.norm();
            let base = w * r.dot(&tri.normal(x)) * dens.eval(x) / (rn * rn * rn);
            match kernel {
                PairKernel::DoubleLayer => Complex64::new(base, 0.0),
                PairKernel::Helmholtz { k } => helmholtz_factor(rn, k) * base,
            }
        }))
    }

    /// Sums precomputed outer terms in node order.
    pub fn assemble(&self, terms: Vec<OuterTerm>, level: Option<RegularizationLevel>) -> IntegralResult {
        let value = complex_sum(terms.iter().map(|t| t.value));
        let warnings = terms.into_iter().filter_map(|t| t.warning).collect();
        IntegralResult {
            value,
            n: self.inner.n,
            points: self.points(),
            regularization: level.unwrap_or(RegularizationLevel::T2T1),
            frame: None,
            warnings,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn integrate(
        &self,
        tri_x: &CurvedTriangle,
        tri_y: &CurvedTriangle,
        dens_x: &DensityPolynomial,
        dens_y: &DensityPolynomial,
        level: Option<RegularizationLevel>,
        kernel: PairKernel,
    ) -> Result<IntegralResult> {
        let terms = (0..self.outer.len())
            .map(|i| self.outer_term(tri_x, tri_y, dens_x, dens_y, level, kernel, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.assemble(terms, level))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn integrate_pair(
    tri_x: &CurvedTriangle,
    tri_y: &CurvedTriangle,
    dens_x: &DensityPolynomial,
    dens_y: &DensityPolynomial,
    n: usize,
    level: Option<RegularizationLevel>,
    kernel: PairKernel,
) -> Result<IntegralResult> {
    PairIntegrator::new(n)?.integrate(tri_x, tri_y, dens_x, dens_y, level, kernel)
}

/// `∫_T ∫_T ∂G/∂n(y) φ(x) φ(y) dS(x) dS(y)` for the Helmholtz Green's
/// function `G = e^{ik|x-y|} / (4π|x-y|)`.
pub fn bem_pair_entry(tri: &CurvedTriangle, density: &DensityPolynomial, k: f64, n: usize) -> Result<Complex64> {
    if k.is_nan() || k < 0.0 {
        return Err(Error::InvalidParameter("wavenumber must be non-negative"));
    }
    let r = integrate_pair(
        tri,
        tri,
        density,
        density,
        n,
        Some(RegularizationLevel::T2T1),
        PairKernel::Helmholtz { k },
    )?;
    // the conormal derivative carries (y_n - y)·n(y) = -(x - x0)·n(x)
    Ok(-r.value / (4.0 * PI))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub points: usize,
    pub level: RegularizationLevel,
    pub value: Complex64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub reference: Complex64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log(error)` against `log(points)` over the
    /// largest decade of `points`, per level.
    pub slopes: Vec<(RegularizationLevel, f64)>,
}

impl ConvergenceReport {
    pub fn slope(&self, level: RegularizationLevel) -> Option<f64> {
        self.slopes.iter().find(|(l, _)| *l == level).map(|(_, s)| *s)
    }

    pub fn rows_for(&self, level: RegularizationLevel) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(move |r| r.level == level)
    }
}

/// Least-squares slope of `log y` against `log x`, skipping zero errors.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (math::ln(x), math::ln(y)))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Runs `eval(n, level) -> (value, points)` over the grid and fits slopes.
pub fn convergence_sweep<F>(
    reference: Option<Complex64>,
    n_list: &[usize],
    levels: &[RegularizationLevel],
    mut eval: F,
) -> Result<ConvergenceReport>
where
    F: FnMut(usize, RegularizationLevel) -> Result<(Complex64, usize)>,
{
    let reference = reference.ok_or(Error::ReferenceMissing)?;
    let mut rows = Vec::new();
    for &level in levels {
        for &n in n_list {
            let (value, points) = eval(n, level)?;
            rows.push(ConvergenceRow {
                n,
                points,
                level,
                value,
                abs_error: (value - reference).norm(),
            });
        }
    }
    let slopes = levels
        .iter()
        .map(|&level| {
            let sel: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.level == level).collect();
            let top = sel.iter().map(|r| r.points).max().unwrap_or(0) as f64;
            let tail: Vec<(f64, f64)> = sel
                .iter()
                .filter(|r| r.points as f64 >= top / 10.0)
                .map(|r| (r.points as f64, r.abs_error))
                .collect();
            (level, loglog_slope(&tail))
        })
        .collect();
    Ok(ConvergenceReport {
        reference,
        rows,
        slopes,
    })
}
