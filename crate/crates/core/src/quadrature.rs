//! Quadrature on segments, triangles and convex polygons.

use crate::geometry::{polygon_area, vertex_centroid, Vec2};
use crate::scalar::Real;

/// Points and weights in physical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    pub points: Vec<Vec2<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Vec2<T>) -> T) -> T {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one Gauss point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Legendre rule on `[0, 1]` converted to `T`.
fn unit_interval<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|&xi| T::lit(0.5 * (xi + 1.0))).collect(),
        w.iter().map(|&wi| T::lit(0.5 * wi)).collect(),
    )
}

/// Number of face points used for polynomial degree `r`: exact through degree `2r + 3`.
pub fn face_points_for_degree(r: usize) -> usize {
    (2 * r + 2).div_ceil(2) + 1
}

/// Gauss–Legendre rule with `n` points on the segment `p → q`.
pub fn segment_rule<T: Real>(p: Vec2<T>, q: Vec2<T>, n: usize) -> QuadratureRule<T> {
    let (s, w) = unit_interval::<T>(n);
    let len = p.dist(q);
    QuadratureRule {
        points: s.iter().map(|&t| p.lerp(q, t)).collect(),
        weights: w.iter().map(|&wi| wi * len).collect(),
    }
}

/// Collapsed-coordinate rule on triangle `(a, b, c)`, exact for total degree `degree`.
pub fn triangle_rule<T: Real>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>, degree: usize) -> QuadratureRule<T> {
    let n = (degree + 2).div_ceil(2);
    let (s, w) = unit_interval::<T>(n);
    let jac = (b - a).cross(c - a).abs();
    let mut rule = QuadratureRule {
        points: Vec::with_capacity(n * n),
        weights: Vec::with_capacity(n * n),
    };
    for (iu, &u) in s.iter().enumerate() {
        for (iv, &v) in s.iter().enumerate() {
            let xi = u;
            let eta = v * (T::one() - u);
            rule.points.push(a + (b - a) * xi + (c - a) * eta);
            rule.weights.push(w[iu] * w[iv] * (T::one() - u) * jac);
        }
    }
    rule
}

/// Tensor Gauss rule on an axis-aligned rectangle `[lo, hi]`.
pub fn rectangle_rule<T: Real>(lo: Vec2<T>, hi: Vec2<T>, degree: usize) -> QuadratureRule<T> {
    let n = (degree + 1).div_ceil(2).max(1);
    let (s, w) = unit_interval::<T>(n);
    let (dx, dy) = (hi.x - lo.x, hi.y - lo.y);
    let mut rule = QuadratureRule {
        points: Vec::with_capacity(n * n),
        weights: Vec::with_capacity(n * n),
    };
    for (j, &sy) in s.iter().enumerate() {
        for (i, &sx) in s.iter().enumerate() {
            rule.points.push(Vec2::new(lo.x + sx * dx, lo.y + sy * dy));
            rule.weights.push(w[i] * w[j] * dx * dy);
        }
    }
    rule
}

/// Rule on a convex counterclockwise polygon, exact for total degree `degree`:
/// fan triangulation from the vertex centroid.
pub fn polygon_rule<T: Real>(poly: &[Vec2<T>], degree: usize) -> QuadratureRule<T> {
    let c = vertex_centroid(poly);
    let n = poly.len();
    let mut rule = QuadratureRule { points: Vec::new(), weights: Vec::new() };
    for k in 0..n {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        if (a - c).cross(b - c) <= T::zero() {
            continue;
        }
        let t = triangle_rule(c, a, b, degree);
        rule.points.extend(t.points);
        rule.weights.extend(t.weights);
    }
    rule
}

/// Cell rule: tensor Gauss on axis-aligned rectangles, centroid fan otherwise.
pub fn cell_rule<T: Real>(poly: &[Vec2<T>], degree: usize, axis_aligned_rect: bool) -> QuadratureRule<T> {
    if axis_aligned_rect && poly.len() == 4 {
        let lo = Vec2::new(
            poly.iter().map(|p| p.x).fold(T::infinity(), T::min),
            poly.iter().map(|p| p.y).fold(T::infinity(), T::min),
        );
        let hi = Vec2::new(
            poly.iter().map(|p| p.x).fold(T::neg_infinity(), T::max),
            poly.iter().map(|p| p.y).fold(T::neg_infinity(), T::max),
        );
        let rule = rectangle_rule(lo, hi, degree);
        debug_assert!((rule.total_weight() - polygon_area(poly)).abs() <= T::tol(1e-12) * polygon_area(poly));
        return rule;
    }
    polygon_rule(poly, degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Exact ∫ over the reference triangle of ξ^a η^b = a! b! / (a + b + 2)!.
    fn ref_triangle_monomial(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn legendre_weights_sum_to_two() {
        for n in 1..=10 {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
            for k in 0..(2 * n) {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
                assert_relative_eq!(q, exact, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn triangle_rule_is_exact() {
        let (o, e1, e2) = (Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0));
        for degree in 0..=9u32 {
            let rule: QuadratureRule<f64> = triangle_rule(o, e1, e2, degree as usize);
            for a in 0..=degree {
                let b = degree - a;
                let q = rule.integrate(|p| p.x.powi(a as i32) * p.y.powi(b as i32));
                assert_relative_eq!(q, ref_triangle_monomial(a, b), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn x2y_over_reference_triangle() {
        let rule = triangle_rule(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), 3);
        assert_relative_eq!(rule.integrate(|p| p.x * p.x * p.y), 1.0 / 60.0, epsilon = 1e-16);
    }

    #[test]
    fn polygon_rule_constant_and_linear() {
        let sq = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        for aligned in [false, true] {
            let rule = cell_rule(&sq, 4, aligned);
            assert_relative_eq!(rule.total_weight(), 1.0, epsilon = 1e-15);
            assert_relative_eq!(rule.integrate(|p| p.x), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn segment_rule_exactness() {
        let n = face_points_for_degree(2);
        assert_eq!(n, 4);
        let rule: QuadratureRule<f64> = segment_rule(Vec2::new(0.0, 0.0), Vec2::new(3.0, 4.0), n);
        assert_relative_eq!(rule.total_weight(), 5.0, epsilon = 1e-14);
        // ∫ s^7 ds along the segment, s = arc length: 5^8 / 8
        let q = rule.integrate(|p| p.norm().powi(7));
        assert_relative_eq!(q, 5f64.powi(8) / 8.0, max_relative = 1e-13);
    }
}
