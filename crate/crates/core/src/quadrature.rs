//! Gauss–Legendre rules on `[0, 1]`, collapsed (Duffy) rules on the
//! reference triangle, and graded rules for integrands with a complex
//! near-singularity close to the interval.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::geometry::Point2;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Segment,
    Triangle,
    GradedSegment,
}

/// Quadrature rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
}

impl SegmentRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Quadrature rule on the reference triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub nodes: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kind(&self) -> RuleKind {
        RuleKind::Triangle
    }

    pub fn integrate<F: FnMut(&Point2) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
///
/// Newton iteration on the three-term recurrence, started from the
/// Tricomi-type estimate `cos(π(i - 1/4)/(n + 1/2))`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut z = math::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if math::abs(dz) <= 1e-15 {
                dp = legendre_with_derivative(n, z).1;
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// `n`-point Gauss–Legendre rule on `[0, 1]`; exact for degree `2n - 1`.
pub fn gauss_segment(n: usize) -> SegmentRule {
    let n = n.max(1);
    let (x, w) = gauss_legendre(n);
    SegmentRule {
        nodes: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        weights: w.iter().map(|wi| 0.5 * wi).collect(),
        kind: RuleKind::Segment,
    }
}

/// Collapsed tensor-product rule with `n²` nodes on the reference triangle:
/// `x1 = u`, `x2 = (1 - u) v` with Gauss–Legendre in `u` and `v`.
pub fn triangle_rule(n: usize) -> TriangleRule {
    let g = gauss_segment(n);
    let mut nodes = Vec::with_capacity(g.len() * g.len());
    let mut weights = Vec::with_capacity(g.len() * g.len());
    for (&u, &wu) in g.nodes.iter().zip(&g.weights) {
        for (&v, &wv) in g.nodes.iter().zip(&g.weights) {
            nodes.push(Point2::new(u, (1.0 - u) * v));
            weights.push(wu * wv * (1.0 - u));
        }
    }
    TriangleRule { nodes, weights }
}

/// Distance (relative to the unit interval) below which [`graded_segment`]
/// switches to the sinh map.
pub const GRADING_THRESHOLD: f64 = 0.1;

/// Rule on `[0, 1]` for integrands with a near-singularity at complex
/// distance `d` from the real point `foot`.
///
/// The interval is split at `foot`; on each side `t = foot ± d sinh(u)` with
/// `n` Gauss points in `u`. Kernels of the form `((t - foot)² + d²)^(-1/2)`
/// become constant under this map. When `d >= 0.1` the sides get plain Gauss
/// rules instead.
pub fn graded_segment(n: usize, foot: f64, d: f64) -> SegmentRule {
    graded_segment_from(&gauss_segment(n), foot, d)
}

/// [`graded_segment`] built from a precomputed Gauss rule on `[0, 1]`, so
/// callers building many graded rules of one order skip the Newton solve.
pub fn graded_segment_from(g: &SegmentRule, foot: f64, d: f64) -> SegmentRule {
    let n = g.len();
    let foot = foot.clamp(0.0, 1.0);
    let mut nodes = Vec::with_capacity(2 * n);
    let mut weights = Vec::with_capacity(2 * n);
    let graded = d > 0.0 && d < GRADING_THRESHOLD;
    // (side sign, side length)
    for (sign, len) in [(-1.0, foot), (1.0, 1.0 - foot)] {
        if len <= 0.0 {
            continue;
        }
        if graded {
            let umax = math::asinh(len / d);
            for (&s, &w) in g.nodes.iter().zip(&g.weights) {
                let u = s * umax;
                let t = foot + sign * d * math::sinh(u);
                nodes.push(t);
                weights.push(w * umax * d * math::cosh(u));
            }
        } else {
            for (&s, &w) in g.nodes.iter().zip(&g.weights) {
                nodes.push(foot + sign * s * len);
                weights.push(w * len);
            }
        }
    }
    if !graded {
        sort_rule(&mut nodes, &mut weights);
    }
    SegmentRule {
        nodes,
        weights,
        kind: if graded {
            RuleKind::GradedSegment
        } else {
            RuleKind::Segment
        },
    }
}

fn sort_rule(nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
    let mut pairs: Vec<(f64, f64)> = nodes.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    nodes.clear();
    weights.clear();
    for (x, w) in pairs {
        nodes.push(x);
        weights.push(w);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn small_rules() {
        let g1 = gauss_segment(1);
        assert_relative_eq!(g1.nodes[0], 0.5, epsilon = 1e-16);
        assert_relative_eq!(g1.weights[0], 1.0, epsilon = 1e-16);

        let g2 = gauss_segment(2);
        let off = 0.5 / 3f64.sqrt();
        assert_relative_eq!(g2.nodes[0], 0.5 - off, epsilon = 1e-15);
        assert_relative_eq!(g2.nodes[1], 0.5 + off, epsilon = 1e-15);
        assert_relative_eq!(g2.weights[0], 0.5, epsilon = 1e-15);

        let x5 = gauss_segment(3).integrate(|t| t.powi(5));
        assert_relative_eq!(x5, 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn degree_exactness_up_to_30() {
        for n in 1..=30 {
            let g = gauss_segment(n);
            for (i, x) in g.nodes.iter().enumerate() {
                assert!(g.weights[i] > 0.0);
                assert_relative_eq!(*x, 1.0 - g.nodes[n - 1 - i], epsilon = 1e-15);
            }
            for deg in 0..2 * n {
                let q = g.integrate(|t| t.powi(deg as i32));
                assert_relative_eq!(q, 1.0 / (deg as f64 + 1.0), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn large_rule_weights_sum() {
        for n in [100, 200, 256] {
            let g = gauss_segment(n);
            let s: f64 = g.weights.iter().sum();
            assert_relative_eq!(s, 1.0, epsilon = 1e-13);
            assert_relative_eq!(g.integrate(|t| (3.0 * t).cos()), (3.0f64).sin() / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn triangle_moments() {
        for n in 1..8 {
            let r = triangle_rule(n);
            assert_eq!(r.len(), n * n);
            assert_relative_eq!(r.integrate(|_| 1.0), 0.5, epsilon = 1e-15);
            for x in &r.nodes {
                assert!(x[0] > 0.0 && x[1] > 0.0 && x[0] + x[1] < 1.0);
            }
            assert!(r.weights.iter().all(|w| *w > 0.0));
        }
        let r = triangle_rule(3);
        assert_relative_eq!(r.integrate(|x| x[0] * x[1]), 1.0 / 24.0, epsilon = 1e-15);
        // ∫ x1^a x2^b = a! b! / (a + b + 2)!
        let r = triangle_rule(4);
        assert_relative_eq!(r.integrate(|x| x[0].powi(2) * x[1].powi(2)), 1.0 / 180.0, epsilon = 1e-15);
    }

    #[test]
    fn graded_inverse_distance() {
        // ∫_0^1 dt / sqrt((t - a)² + d²) = asinh((1 - a)/d) + asinh(a/d)
        for &d in &[1e-3_f64, 1e-6, 1e-8] {
            let a = 0.3_f64;
            let exact = ((1.0 - a) / d).asinh() + (a / d).asinh();
            let r = graded_segment(16, a, d);
            let q = r.integrate(|t| 1.0 / ((t - a).powi(2) + d * d).sqrt());
            assert_relative_eq!(q, exact, max_relative = 1e-10);
        }
        let d = 1e-6;
        let r = graded_segment(128, 0.3, d);
        let exact = (0.7f64 / d).asinh() + (0.3f64 / d).asinh();
        let q = r.integrate(|t| 1.0 / ((t - 0.3).powi(2) + d * d).sqrt());
        assert!(((q - exact) / exact).abs() < 1e-10);
    }

    #[test]
    fn graded_inverse_cube() {
        // ∫ d² dt / ((t-a)² + d²)^{3/2} = [(t-a)/sqrt((t-a)²+d²)]
        let a = 0.3;
        for &d in &[1e-2, 1e-4, 1e-6] {
            let anti = |t: f64| (t - a) / ((t - a).powi(2) + d * d).sqrt();
            let exact = anti(1.0) - anti(0.0);
            let r = graded_segment(128, a, d);
            let q = r.integrate(|t| d * d / ((t - a).powi(2) + d * d).powf(1.5));
            assert!(((q - exact) / exact).abs() < 1e-8, "d = {d}: {q} vs {exact}");
        }
    }

    #[test]
    fn far_singularity_matches_plain_gauss() {
        let f = |t: f64| 1.0 / (1.0 + (t - 0.5).powi(2));
        let exact = 2.0 * (0.5f64).atan();
        let plain = gauss_segment(10).integrate(f);
        let graded = graded_segment(10, 0.5, 1.0);
        assert_eq!(graded.kind, RuleKind::Segment);
        let g = graded.integrate(f);
        assert!((g - exact).abs() <= (plain - exact).abs() + 1e-15);
    }

    #[test]
    fn graded_at_endpoint() {
        let d = 1e-5;
        let r = graded_segment(64, 0.0, d);
        assert_eq!(r.len(), 64);
        let exact = (1.0 / d).asinh();
        let q = r.integrate(|t| 1.0 / (t * t + d * d).sqrt());
        assert_relative_eq!(q, exact, max_relative = 1e-13);
    }
}
