//! Planar primitives: points, half-planes and convex polygon clipping.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    #[inline]
    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Kept region `{ a·x + b·y >= c }` with `(a, b)` of unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Real> HalfPlane<T> {
    /// Normalizes `(a, b)` to unit length (scaling `c` along with it).
    pub fn new(a: T, b: T, c: T) -> Result<Self> {
        let len = a.hypot(b);
        if !(len > T::zero()) || !len.is_finite() || !c.is_finite() {
            return Err(Error::Config(format!(
                "half-plane normal ({a}, {b}) must be finite and nonzero"
            )));
        }
        Ok(Self { a: a / len, b: b / len, c: c / len })
    }

    /// Kept region above the line `y = intercept + slope·x`.
    pub fn above_line(intercept: T, slope: T) -> Self {
        Self::new(-slope, T::one(), intercept).expect("unit y-coefficient")
    }

    #[inline]
    pub fn signed_distance(&self, p: Vec2<T>) -> T {
        self.a * p.x + self.b * p.y - self.c
    }

    /// Unit normal pointing out of the kept region.
    #[inline]
    pub fn outward_normal(&self) -> Vec2<T> {
        Vec2::new(-self.a, -self.b)
    }
}

/// Structured Cartesian background mesh with square cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundMesh<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
    pub nx: usize,
    pub ny: usize,
}

impl<T: Real> BackgroundMesh<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T, nx: usize, ny: usize) -> Result<Self> {
        let bg = Self { x0, y0, x1, y1, nx, ny };
        bg.validate()?;
        Ok(bg)
    }

    pub fn unit_square(n: usize) -> Self {
        Self::new(T::zero(), T::zero(), T::one(), T::one(), n, n).expect("valid unit square")
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Config("background mesh needs nx, ny >= 1".into()));
        }
        let h = self.h();
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::Config("background mesh size must be positive".into()));
        }
        let hy = (self.y1 - self.y0) / T::from_usize_lossy(self.ny);
        if (hy - h).abs() > T::tol(1e-14) * h {
            return Err(Error::Config(format!(
                "background cells must be square: hx = {h}, hy = {hy}"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn h(&self) -> T {
        (self.x1 - self.x0) / T::from_usize_lossy(self.nx)
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec2<T> {
        let h = self.h();
        Vec2::new(
            self.x0 + (T::from_usize_lossy(i) + T::half()) * h,
            self.y0 + (T::from_usize_lossy(j) + T::half()) * h,
        )
    }

    /// Counterclockwise corners of background cell `(i, j)`, starting bottom-left.
    pub fn cell_square(&self, i: usize, j: usize) -> [Vec2<T>; 4] {
        let h = self.h();
        let xl = self.x0 + T::from_usize_lossy(i) * h;
        let yb = self.y0 + T::from_usize_lossy(j) * h;
        let xr = if i + 1 == self.nx { self.x1 } else { xl + h };
        let yt = if j + 1 == self.ny { self.y1 } else { yb + h };
        [
            Vec2::new(xl, yb),
            Vec2::new(xr, yb),
            Vec2::new(xr, yt),
            Vec2::new(xl, yt),
        ]
    }

    pub fn area(&self) -> T {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Physical domain: the background box intersected with a list of half-planes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Geometry<T> {
    pub constraints: Vec<HalfPlane<T>>,
}

impl<T: Real> Geometry<T> {
    pub fn new(constraints: Vec<HalfPlane<T>>) -> Self {
        Self { constraints }
    }

    pub fn unbounded() -> Self {
        Self { constraints: Vec::new() }
    }

    /// Ramp: kept region above `y = intercept + slope·x`.
    pub fn ramp(intercept: T, slope: T) -> Self {
        Self::new(vec![HalfPlane::above_line(intercept, slope)])
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        self.constraints.iter().all(|hp| hp.signed_distance(p) >= T::zero())
    }
}

/// Side of a background square an edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    South,
    East,
    North,
    West,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::South, Side::East, Side::North, Side::West];
}

/// Which line carries a polygon edge: a background side or a geometry constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeLabel {
    Side(Side),
    Cut(usize),
}

/// Polygon whose edge `k` runs from `vertices[k]` to `vertices[k + 1]` and carries `labels[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPolygon<T> {
    pub vertices: Vec<Vec2<T>>,
    pub labels: Vec<EdgeLabel>,
}

impl<T: Real> LabeledPolygon<T> {
    pub fn from_square(sq: [Vec2<T>; 4]) -> Self {
        Self { vertices: sq.to_vec(), labels: Side::ALL.iter().map(|&s| EdgeLabel::Side(s)).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    /// Clips against `hp` (with constraint index `tag`), labeling new edges `Cut(tag)`.
    pub fn clip(&self, hp: &HalfPlane<T>, tag: usize, snap: T) -> Self {
        let (vertices, labels) = clip_labeled(&self.vertices, &self.labels, hp, tag, snap);
        Self { vertices, labels }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Location {
    In,
    On,
    Out,
}

fn locate<T: Real>(d: T, snap: T) -> Location {
    if d > snap {
        Location::In
    } else if d < -snap {
        Location::Out
    } else {
        Location::On
    }
}

fn clip_labeled<T: Real>(
    verts: &[Vec2<T>],
    labels: &[EdgeLabel],
    hp: &HalfPlane<T>,
    tag: usize,
    snap: T,
) -> (Vec<Vec2<T>>, Vec<EdgeLabel>) {
    let n = verts.len();
    let mut out_v = Vec::with_capacity(n + 2);
    let mut out_l = Vec::with_capacity(n + 2);
    if n < 3 {
        return (out_v, out_l);
    }
    let cut = EdgeLabel::Cut(tag);
    let dist: Vec<T> = verts.iter().map(|&p| hp.signed_distance(p)).collect();
    for k in 0..n {
        let e = (k + 1) % n;
        let (s_loc, e_loc) = (locate(dist[k], snap), locate(dist[e], snap));
        let crossing = || {
            let t = dist[k] / (dist[k] - dist[e]);
            verts[k].lerp(verts[e], t)
        };
        match (s_loc, e_loc) {
            (Location::In, Location::Out) => {
                out_v.push(verts[k]);
                out_l.push(labels[k]);
                out_v.push(crossing());
                out_l.push(cut);
            }
            (Location::Out, Location::In) => {
                out_v.push(crossing());
                out_l.push(labels[k]);
            }
            (Location::Out, _) => {}
            (Location::On, Location::Out) | (Location::On, Location::On) => {
                out_v.push(verts[k]);
                out_l.push(cut);
            }
            _ => {
                out_v.push(verts[k]);
                out_l.push(labels[k]);
            }
        }
    }
    dedup_closed(&mut out_v, &mut out_l, snap);
    if out_v.len() < 3 || polygon_area(&out_v) <= T::zero() {
        out_v.clear();
        out_l.clear();
    }
    (out_v, out_l)
}

/// Removes consecutive (cyclic) vertices closer than `snap`, keeping the later edge label.
fn dedup_closed<T: Real>(v: &mut Vec<Vec2<T>>, l: &mut Vec<EdgeLabel>, snap: T) {
    let mut k = 0;
    while v.len() > 1 && k < v.len() {
        let next = (k + 1) % v.len();
        if v[k].dist(v[next]) <= snap {
            // edge k is degenerate: drop vertex k, its predecessor's edge now ends at `next`
            v.remove(k);
            l.remove(k);
        } else {
            k += 1;
        }
    }
}

/// Sutherland–Hodgman clip of a convex counterclockwise polygon against `{a·x + b·y >= c}`.
///
/// Vertices within `1e-12` of the polygon's extent from the line count as on it
/// and are kept once. An empty intersection yields an empty polygon.
pub fn clip_polygon<T: Real>(poly: &[Vec2<T>], hp: &HalfPlane<T>) -> Vec<Vec2<T>> {
    if poly.len() < 3 {
        return Vec::new();
    }
    let snap = T::tol(1e-12) * polygon_extent(poly);
    let labels = vec![EdgeLabel::Cut(usize::MAX); poly.len()];
    clip_labeled(poly, &labels, hp, usize::MAX, snap).0
}

fn polygon_extent<T: Real>(poly: &[Vec2<T>]) -> T {
    let (mut lo, mut hi) = (poly[0], poly[0]);
    for p in poly {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (hi.x - lo.x).max(hi.y - lo.y)
}

/// Shoelace signed area (positive for counterclockwise polygons).
pub fn polygon_area<T: Real>(poly: &[Vec2<T>]) -> T {
    let n = poly.len();
    if n < 3 {
        return T::zero();
    }
    let mut acc = T::zero();
    for k in 0..n {
        acc += poly[k].cross(poly[(k + 1) % n]);
    }
    acc * T::half()
}

/// Vertex average; interior for convex polygons.
pub fn vertex_centroid<T: Real>(poly: &[Vec2<T>]) -> Vec2<T> {
    let mut c = Vec2::zero();
    for &p in poly {
        c = c + p;
    }
    c * (T::one() / T::from_usize_lossy(poly.len()))
}

/// Point-in-convex-polygon test (boundary counts as inside).
pub fn polygon_contains<T: Real>(poly: &[Vec2<T>], x: Vec2<T>) -> bool {
    let n = poly.len();
    n >= 3 && (0..n).all(|k| (poly[(k + 1) % n] - poly[k]).cross(x - poly[k]) >= T::zero())
}

/// Foot of the perpendicular from `x` onto the infinite line through `p` with unit normal `n`.
#[inline]
pub fn project_onto_line<T: Real>(x: Vec2<T>, p: Vec2<T>, n: Vec2<T>) -> Vec2<T> {
    let d = (x - p).dot(n);
    x - n * d
}
