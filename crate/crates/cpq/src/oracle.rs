//! Brute-force reference values for the double-layer integrals.
//!
//! Nothing here uses the subtraction machinery of `cpq-core`. Integrals over
//! the reference triangle are computed by fans of Duffy-collapsed triangles
//! with apex at the (clamped) preimage of the evaluation point, with panels
//! refined geometrically towards the apex and towards the foot of the apex
//! on the opposite edge. Two strategies are available:
//!
//! - `Graded`: one fan over the whole reference triangle.
//! - `Quadtree`: uniform 4-way subdivision, adaptive away from the apex, with
//!   fans only in the small cells that contain the apex.

use std::collections::HashMap;

use cpq_core::projection::{project, ProjectionOptions};
use cpq_core::quadrature::gauss_segment;
use cpq_core::{CurvedTriangle, DensityPolynomial, Jacobian, Point2, SegmentRule, Vec3};
use rayon::prelude::*;

use crate::error::{Error, Result};

const REFERENCE: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Graded,
    Quadtree,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Graded => "graded-fan",
            Strategy::Quadtree => "quadtree",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Gauss order per panel; the error estimate compares it with `order + 8`.
    pub order: usize,
    /// Depth at which quadtree cells holding the apex switch to a fan.
    pub apex_depth: usize,
    pub max_depth: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            order: 16,
            apex_depth: 3,
            max_depth: 40,
        }
    }
}

/// A value with its estimated absolute error.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub est_error: f64,
    pub method: String,
}

/// The mapped double-layer integrand around a base point `b` of `T̂`.
///
/// `F(x) - x0` is formed as `J(b)δ + P2(δ) - (x0 - F(b))`, which is exact for
/// `q ≤ 2` and never subtracts two nearby physical points.
pub struct DoubleLayer<'a> {
    tri: &'a CurvedTriangle,
    density: &'a DensityPolynomial,
    base: Point2,
    jac: Jacobian,
    gap: Vec3,
}

impl<'a> DoubleLayer<'a> {
    pub fn new(tri: &'a CurvedTriangle, density: &'a DensityPolynomial, base: Point2, x0: &Vec3) -> Self {
        DoubleLayer {
            tri,
            density,
            base,
            jac: tri.jacobian(&base),
            gap: x0 - tri.map_point(&base),
        }
    }

    pub fn eval(&self, x: &Point2) -> f64 {
        let d = x - self.base;
        let r = self.jac * d + self.tri.quadratic_term(&d) - self.gap;
        let rn = r.norm();
        if rn == 0.0 {
            return 0.0;
        }
        r.dot(&self.tri.normal(x)) * self.density.eval(x) / (rn * rn * rn)
    }

    /// Distance from `x0` to the image of the base point, in reference units.
    pub fn scale(&self) -> f64 {
        self.gap.norm() / self.jac.norm()
    }
}

/// Closest point of the reference triangle to `x`.
pub fn clamp_to_reference(x: &Point2) -> Point2 {
    if x[0] >= 0.0 && x[1] >= 0.0 && x[0] + x[1] <= 1.0 {
        return *x;
    }
    let mut best = Point2::zeros();
    let mut dist = f64::INFINITY;
    for i in 0..3 {
        let a = Point2::from(REFERENCE[i]);
        let b = Point2::from(REFERENCE[(i + 1) % 3]);
        let t = ((x - a).dot(&(b - a)) / (b - a).norm_squared()).clamp(0.0, 1.0);
        let p = a + (b - a) * t;
        let d = (x - p).norm();
        if d < dist {
            dist = d;
            best = p;
        }
    }
    best
}

/// Breakpoints in `[0, 1]` at `foot ± d 2^k`.
fn graded_points(foot: f64, d: f64) -> Vec<f64> {
    let foot = foot.clamp(0.0, 1.0);
    let mut pts = vec![0.0, foot, 1.0];
    if d > 0.0 {
        let mut s = d;
        while s < 1.0 {
            for p in [foot - s, foot + s] {
                if p > 0.0 && p < 1.0 {
                    pts.push(p);
                }
            }
            s *= 2.0;
        }
    } else {
        pts.push(0.5);
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-300);
    pts
}

/// Geometric points `lo, 2lo, 4lo, …, 1`.
fn doubling_points(lo: f64) -> Vec<f64> {
    let mut p = vec![lo];
    let mut s = lo * 2.0;
    while s < 1.0 {
        p.push(s);
        s *= 2.0;
    }
    p.push(1.0);
    p
}

fn composite<F: FnMut(f64) -> f64>(pts: &[f64], rule: &SegmentRule, mut f: F) -> f64 {
    pts.windows(2)
        .map(|w| (w[1] - w[0]) * rule.integrate(|t| f(w[0] + (w[1] - w[0]) * t)))
        .sum()
}

fn cross2(a: &Point2, b: &Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// `∫_cell f` by the fan of triangles with apex `apex` (inside or on the
/// cell). Points with `|J w| < cut(w)` along each ray are excluded.
fn fan<F, C>(f: &F, cell: &[Point2; 3], apex: &Point2, scale: f64, rule: &SegmentRule, cut: C) -> f64
where
    F: Fn(&Point2) -> f64,
    C: Fn(&Point2) -> f64,
{
    let area = cross2(&(cell[1] - cell[0]), &(cell[2] - cell[0])).abs();
    let mut total = 0.0;
    for i in 0..3 {
        let b = cell[i];
        let c = cell[(i + 1) % 3];
        let eb = b - apex;
        let bc = c - b;
        let area2 = cross2(&eb, &bc);
        if area2.abs() <= 1e-14 * area {
            continue;
        }
        let len2 = bc.norm_squared();
        let vfoot = -eb.dot(&bc) / len2;
        let vd = area2.abs() / len2;
        let vpts = graded_points(vfoot, if vd < 0.5 { vd } else { 0.0 });
        total += area2
            * composite(&vpts, rule, |v| {
                let w = eb + bc * v;
                let lo = cut(&w);
                let upts = if lo > 0.0 {
                    if lo >= 1.0 {
                        return 0.0;
                    }
                    doubling_points(lo)
                } else {
                    let su = scale / w.norm();
                    if su > 0.0 && su < 0.5 {
                        graded_points(0.0, su)
                    } else {
                        vec![0.0, 0.5, 1.0]
                    }
                };
                composite(&upts, rule, |u| u * f(&(apex + w * u)))
            });
    }
    total
}

fn contains(cell: &[Point2; 3], p: &Point2) -> bool {
    let area = cross2(&(cell[1] - cell[0]), &(cell[2] - cell[0]));
    let tol = 1e-12 * area.abs();
    (0..3).all(|i| {
        let a = cell[i];
        let b = cell[(i + 1) % 3];
        cross2(&(b - a), &(p - a)) * area.signum() >= -tol
    })
}

fn children(cell: &[Point2; 3]) -> [[Point2; 3]; 4] {
    let m01 = (cell[0] + cell[1]) * 0.5;
    let m12 = (cell[1] + cell[2]) * 0.5;
    let m20 = (cell[2] + cell[0]) * 0.5;
    [
        [cell[0], m01, m20],
        [m01, cell[1], m12],
        [m20, m12, cell[2]],
        [m12, m20, m01],
    ]
}

struct CellRule {
    nodes: Vec<Point2>,
    weights: Vec<f64>,
}

impl CellRule {
    fn new(order: usize) -> Self {
        let t = cpq_core::triangle_rule(order);
        CellRule {
            nodes: t.nodes,
            weights: t.weights,
        }
    }

    fn apply<F: Fn(&Point2) -> f64>(&self, f: &F, cell: &[Point2; 3]) -> f64 {
        let e1 = cell[1] - cell[0];
        let e2 = cell[2] - cell[0];
        let det = cross2(&e1, &e2).abs();
        det * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, &w)| w * f(&(cell[0] + e1 * x[0] + e2 * x[1])))
            .sum::<f64>()
    }
}

struct Quadtree<'a, F> {
    f: &'a F,
    apex: Point2,
    scale: f64,
    tol: f64,
    opts: OracleOptions,
    cell_rule: CellRule,
    fan_rules: [SegmentRule; 2],
}

impl<F: Fn(&Point2) -> f64 + Sync> Quadtree<'_, F> {
    fn apex_cell(&self, cell: &[Point2; 3], depth: usize) -> (f64, f64) {
        if depth < self.opts.apex_depth {
            return children(cell)
                .iter()
                .map(|c| self.cell(c, depth + 1, None))
                .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        }
        let lo = fan(self.f, cell, &self.apex, self.scale, &self.fan_rules[0], |_| 0.0);
        let hi = fan(self.f, cell, &self.apex, self.scale, &self.fan_rules[1], |_| 0.0);
        (hi, (hi - lo).abs())
    }

    /// `(value, error estimate)` over `cell`; `coarse` is its own one-rule
    /// value when the parent already computed it.
    fn cell(&self, cell: &[Point2; 3], depth: usize, coarse: Option<f64>) -> (f64, f64) {
        if contains(cell, &self.apex) {
            return self.apex_cell(cell, depth);
        }
        let coarse = coarse.unwrap_or_else(|| self.cell_rule.apply(self.f, cell));
        let kids = children(cell);
        if kids.iter().any(|c| contains(c, &self.apex)) {
            return kids
                .iter()
                .map(|c| self.cell(c, depth + 1, None))
                .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        }
        let vals: Vec<f64> = kids.iter().map(|c| self.cell_rule.apply(self.f, c)).collect();
        let fine: f64 = vals.iter().sum();
        let err = (fine - coarse).abs();
        let area = cross2(&(cell[1] - cell[0]), &(cell[2] - cell[0])).abs() * 0.5;
        if err <= self.tol * area || depth >= self.opts.max_depth {
            return (fine, err);
        }
        kids.iter()
            .zip(vals)
            .map(|(c, v)| self.cell(c, depth + 1, Some(v)))
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
    }
}

fn reference_cell() -> [Point2; 3] {
    REFERENCE.map(Point2::from)
}

/// `∫_T̂ f` for `f` singular or near-singular at `apex`, at distance about
/// `scale` (reference units) off the surface. Returns `(value, estimate)`.
pub fn integrate_reference<F: Fn(&Point2) -> f64 + Sync>(
    f: &F,
    apex: &Point2,
    scale: f64,
    tol: f64,
    strategy: Strategy,
    opts: &OracleOptions,
) -> (f64, f64) {
    let rules = [gauss_segment(opts.order), gauss_segment(opts.order + 8)];
    match strategy {
        Strategy::Graded => {
            let cell = reference_cell();
            let apex = clamp_to_reference(apex);
            let lo = fan(f, &cell, &apex, scale, &rules[0], |_| 0.0);
            let hi = fan(f, &cell, &apex, scale, &rules[1], |_| 0.0);
            (hi, (hi - lo).abs())
        }
        Strategy::Quadtree => {
            let q = Quadtree {
                f,
                apex: *apex,
                scale,
                // budget per unit area, the reference triangle has area 1/2
                tol: 2.0 * tol,
                opts: *opts,
                cell_rule: CellRule::new(opts.order / 2 + 2),
                fan_rules: rules,
            };
            let top = children(&reference_cell());
            let parts: Vec<(f64, f64)> = top.par_iter().map(|c| q.cell(c, 1, None)).collect();
            parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
        }
    }
}

fn single(
    tri: &CurvedTriangle,
    density: &DensityPolynomial,
    x0: &Vec3,
    base: Option<Point2>,
    tol: f64,
    strategy: Strategy,
    opts: &OracleOptions,
) -> Result<(f64, f64)> {
    let base = match base {
        Some(b) => b,
        None => clamp_to_reference(&project(tri, x0, &ProjectionOptions::default())?.xhat0),
    };
    let k = DoubleLayer::new(tri, density, base, x0);
    let scale = k.scale();
    Ok(integrate_reference(&|x: &Point2| k.eval(x), &base, scale, tol, strategy, opts))
}

/// Reference value of `∫_T̂ (F(x̂) - x0)·n̂(x̂) φ(x̂) / |F(x̂) - x0|³ dx̂`.
///
/// Fails with [`Error::ToleranceNotReached`] when the two-order estimate
/// stays above `tol`.
pub fn reference_single(tri: &CurvedTriangle, density: &DensityPolynomial, x0: &Vec3, tol: f64) -> Result<Estimate> {
    reference_single_with(tri, density, x0, tol, Strategy::Graded, &OracleOptions::default())
}

pub fn reference_single_with(
    tri: &CurvedTriangle,
    density: &DensityPolynomial,
    x0: &Vec3,
    tol: f64,
    strategy: Strategy,
    opts: &OracleOptions,
) -> Result<Estimate> {
    let (value, est_error) = single(tri, density, x0, None, tol, strategy, opts)?;
    if est_error.is_nan() || est_error > tol {
        return Err(Error::ToleranceNotReached { estimate: est_error, tol });
    }
    Ok(Estimate {
        value,
        est_error,
        method: strategy.name().to_string(),
    })
}

/// Principal value of `∫_T̂ f` over the complement of `{|J(x̂ - apex)| < ε}`
/// as `ε → 0`, by Richardson extrapolation over `ε ∈ {1e-3, 1e-4, 1e-5}`.
pub fn principal_value<F: Fn(&Point2) -> f64>(f: &F, apex: &Point2, jac: &Jacobian, order: usize) -> (f64, f64) {
    let rule = gauss_segment(order);
    let cell = reference_cell();
    let p: Vec<f64> = [1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&eps| fan(f, &cell, apex, 0.0, &rule, |w: &Point2| eps / (jac * w).norm()))
        .collect();
    let r12 = (10.0 * p[1] - p[0]) / 9.0;
    let r23 = (10.0 * p[2] - p[1]) / 9.0;
    let r = (100.0 * r23 - r12) / 99.0;
    (r, (r - r23).abs())
}

/// Outer rules over `T̂` for the pair oracle, both in the collapsed
/// coordinates `ŷ = (u, (1 - u) v)` so that endpoint singularities sit on
/// the edges of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterStrategy {
    /// Tanh-sinh, step halved per level; nodes are nested.
    TanhSinh,
    /// Gauss–Legendre after the sigmoidal map `s³ / (s³ + (1 - s)³)`,
    /// order increased per level.
    Sigmoidal,
}

impl OuterStrategy {
    pub fn name(self) -> &'static str {
        match self {
            OuterStrategy::TanhSinh => "tanh-sinh",
            OuterStrategy::Sigmoidal => "sigmoidal-gauss",
        }
    }
}

const TS_FINEST: i32 = 16;

/// Tanh-sinh nodes on `[0, 1]` with step `2^-level`, as (key, node, weight)
/// where `key` indexes the node on the finest grid.
fn tanh_sinh(level: i32) -> Vec<(i64, f64, f64)> {
    let h = 0.5f64.powi(level);
    let stride = 1i64 << (TS_FINEST - level);
    let mut out = Vec::new();
    let mut k = 0i64;
    loop {
        let t = k as f64 * h;
        let s = std::f64::consts::FRAC_PI_2 * t.sinh();
        let w = h * std::f64::consts::FRAC_PI_4 * t.cosh() / (s.cosh() * s.cosh());
        // distance to the nearer endpoint
        let gap = 1.0 / (1.0 + (2.0 * s).exp());
        if gap < 1e-15 {
            break;
        }
        out.push((k * stride, 1.0 - gap, w));
        if k > 0 {
            out.push((-k * stride, gap, w));
        }
        k += 1;
    }
    out
}

fn sigmoidal(order: usize) -> Vec<(f64, f64)> {
    let g = gauss_segment(order);
    g.nodes
        .iter()
        .zip(&g.weights)
        .map(|(&s, &w)| {
            let a = s * s * s;
            let b = (1.0 - s) * (1.0 - s) * (1.0 - s);
            let t = a / (a + b);
            let dt = 3.0 * s * s * (1.0 - s) * (1.0 - s) / ((a + b) * (a + b));
            (t, w * dt)
        })
        .collect()
}

/// Inner problem at an outer point: base point of the fan and target.
fn inner_at(tri_x: &CurvedTriangle, tri_y: &CurvedTriangle, yhat: &Point2) -> Result<(Point2, Vec3)> {
    let y = tri_y.map_point(yhat);
    if tri_x == tri_y {
        return Ok((*yhat, y));
    }
    let frame = project(tri_x, &y, &ProjectionOptions::default())?;
    Ok((clamp_to_reference(&frame.xhat0), y))
}

/// Reference value of the static pair integral with unit densities,
/// `∫_Y ∫_X (x - y)·n(x) / |x - y|³ dS(x) dS(y)`.
///
/// Outer levels are refined until two successive values agree to `tol`;
/// the reported estimate adds the accumulated inner estimates.
pub fn reference_pair(tri_x: &CurvedTriangle, tri_y: &CurvedTriangle, tol: f64) -> Result<Estimate> {
    reference_pair_with(tri_x, tri_y, tol, OuterStrategy::TanhSinh, &OracleOptions::default())
}

pub fn reference_pair_with(
    tri_x: &CurvedTriangle,
    tri_y: &CurvedTriangle,
    tol: f64,
    strategy: OuterStrategy,
    opts: &OracleOptions,
) -> Result<Estimate> {
    let one = DensityPolynomial::one();
    let inner_tol = tol * 1e-2;
    let inner = |yhat: &Point2| -> Result<(f64, f64)> {
        let (base, y) = inner_at(tri_x, tri_y, yhat)?;
        let (v, e) = single(tri_x, &one, &y, Some(base), inner_tol, Strategy::Graded, opts)?;
        let area = tri_y.normal(yhat).norm();
        Ok((v * area, e * area))
    };
    let mut previous: Option<f64> = None;
    let mut last = (f64::NAN, f64::INFINITY, 0.0);
    match strategy {
        OuterStrategy::TanhSinh => {
            let mut cache: HashMap<(i64, i64), (f64, f64)> = HashMap::new();
            for level in 2..=7 {
                let nodes = tanh_sinh(level);
                let todo: Vec<(i64, i64, Point2)> = nodes
                    .iter()
                    .flat_map(|&(ku, u, _)| nodes.iter().map(move |&(kv, v, _)| (ku, kv, Point2::new(u, (1.0 - u) * v))))
                    .filter(|(ku, kv, _)| !cache.contains_key(&(*ku, *kv)))
                    .collect();
                let fresh: Vec<((i64, i64), (f64, f64))> = todo
                    .par_iter()
                    .map(|(ku, kv, p)| inner(p).map(|r| ((*ku, *kv), r)))
                    .collect::<Result<_>>()?;
                cache.extend(fresh);
                let mut value = 0.0;
                let mut inner_err = 0.0;
                for &(ku, u, wu) in &nodes {
                    for &(kv, _, wv) in &nodes {
                        let (v, e) = cache[&(ku, kv)];
                        let w = wu * wv * (1.0 - u);
                        value += w * v;
                        inner_err += w * e;
                    }
                }
                let step = previous.map_or(f64::INFINITY, |p| (value - p).abs());
                last = (value, step, inner_err);
                if step <= tol {
                    break;
                }
                previous = Some(value);
            }
        }
        OuterStrategy::Sigmoidal => {
            for order in [16, 24, 32, 48, 64, 96] {
                let nodes = sigmoidal(order);
                let pts: Vec<(f64, Point2)> = nodes
                    .iter()
                    .flat_map(|&(u, wu)| {
                        nodes
                            .iter()
                            .map(move |&(v, wv)| (wu * wv * (1.0 - u), Point2::new(u, (1.0 - u) * v)))
                    })
                    .collect();
                let vals: Vec<(f64, f64)> = pts.par_iter().map(|(_, p)| inner(p)).collect::<Result<_>>()?;
                let value: f64 = pts.iter().zip(&vals).map(|((w, _), (v, _))| w * v).sum();
                let inner_err: f64 = pts.iter().zip(&vals).map(|((w, _), (_, e))| w * e).sum();
                let step = previous.map_or(f64::INFINITY, |p| (value - p).abs());
                last = (value, step, inner_err);
                if step <= tol {
                    break;
                }
                previous = Some(value);
            }
        }
    }
    let (value, step, inner_err) = last;
    let est_error = step + inner_err;
    if est_error.is_nan() || est_error > tol {
        return Err(Error::ToleranceNotReached { estimate: est_error, tol });
    }
    Ok(Estimate {
        value,
        est_error,
        method: format!("{}/{}", strategy.name(), Strategy::Graded.name()),
    })
}
