//! Extension of cell polynomials to the whole plane, mirroring at straight walls,
//! and the pairwise extension selector used by the wave stabilization.
//!
//! Extensions are never materialized as coefficient blocks. An [`Extension`] names a
//! source block (and possibly a wall); evaluation and the adjoint [`TestSink`] act on
//! the source block directly.

use crate::basis::{evaluate_block_grad, DgFunction};
use crate::error::{Error, Result};
use crate::geometry::{project_onto_line, Vec2};
use crate::mesh::Face;
use crate::polynomial::GlobalPolynomial;
use crate::scalar::Real;
use crate::space::Space;
use crate::state::State;

/// A vector field that can be evaluated with first derivatives anywhere in the plane.
pub trait Field<T: Real> {
    fn value(&self, x: Vec2<T>) -> State<T>;

    /// `(value, ∂x, ∂y)`.
    fn value_grad(&self, x: Vec2<T>) -> (State<T>, State<T>, State<T>);
}

impl<T: Real> Field<T> for GlobalPolynomial<T> {
    fn value(&self, x: Vec2<T>) -> State<T> {
        GlobalPolynomial::value(self, x)
    }

    fn value_grad(&self, x: Vec2<T>) -> (State<T>, State<T>, State<T>) {
        let (gx, gy) = self.gradient(x);
        (GlobalPolynomial::value(self, x), gx, gy)
    }
}

impl<T: Real, F: Field<T> + ?Sized> Field<T> for &F {
    fn value(&self, x: Vec2<T>) -> State<T> {
        (**self).value(x)
    }

    fn value_grad(&self, x: Vec2<T>) -> (State<T>, State<T>, State<T>) {
        (**self).value_grad(x)
    }
}

/// `a·f + b·g`.
#[derive(Debug, Clone, Copy)]
pub struct Combination<F, G, T> {
    pub a: T,
    pub f: F,
    pub b: T,
    pub g: G,
}

impl<T: Real, F: Field<T>, G: Field<T>> Field<T> for Combination<F, G, T> {
    fn value(&self, x: Vec2<T>) -> State<T> {
        self.f.value(x) * self.a + self.g.value(x) * self.b
    }

    fn value_grad(&self, x: Vec2<T>) -> (State<T>, State<T>, State<T>) {
        let (fv, fx, fy) = self.f.value_grad(x);
        let (gv, gx, gy) = self.g.value_grad(x);
        (fv * self.a + gv * self.b, fx * self.a + gx * self.b, fy * self.a + gy * self.b)
    }
}

/// Generalized mirror of an acoustic field at the line through `anchor` with unit
/// normal `n`: `x ↦ (p(x), v(x) − 2 (v(x⊥)·n) n)`, `x⊥` the foot point on the line.
#[derive(Debug, Clone, Copy)]
pub struct Mirrored<F, T> {
    pub inner: F,
    pub anchor: Vec2<T>,
    pub n: Vec2<T>,
}

/// Mirrors `field` at the line carrying `face`.
pub fn mirror_polynomial<T: Real, F: Field<T>>(field: F, face: &Face<T>) -> Mirrored<F, T> {
    Mirrored { inner: field, anchor: face.p, n: face.normal }
}

impl<T: Real, F: Field<T>> Field<T> for Mirrored<F, T> {
    fn value(&self, x: Vec2<T>) -> State<T> {
        let u = self.inner.value(x);
        let foot = self.inner.value(project_onto_line(x, self.anchor, self.n));
        let vn = foot[1] * self.n.x + foot[2] * self.n.y;
        let two = T::two();
        State::acoustic(u[0], u[1] - two * vn * self.n.x, u[2] - two * vn * self.n.y)
    }

    fn value_grad(&self, x: Vec2<T>) -> (State<T>, State<T>, State<T>) {
        let n = self.n;
        let two = T::two();
        let (u, ux, uy) = self.inner.value_grad(x);
        let (f, fx, fy) = self.inner.value_grad(project_onto_line(x, self.anchor, n));
        let vn = f[1] * n.x + f[2] * n.y;
        // tangential part of ∇(v·n) at the foot point
        let g = Vec2::new(fx[1] * n.x + fx[2] * n.y, fy[1] * n.x + fy[2] * n.y);
        let pg = g - n * g.dot(n);
        let val = State::acoustic(u[0], u[1] - two * vn * n.x, u[2] - two * vn * n.y);
        let dx = State::acoustic(ux[0], ux[1] - two * pg.x * n.x, ux[2] - two * pg.x * n.y);
        let dy = State::acoustic(uy[0], uy[1] - two * pg.y * n.x, uy[2] - two * pg.y * n.y);
        (val, dx, dy)
    }
}

/// Source of an extended polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// Block of `cell` evaluated anywhere.
    Plain { cell: usize },
    /// Block of `cell`, mirrored at boundary face `face`.
    Reflected { cell: usize, face: usize },
}

impl Extension {
    pub fn cell(self) -> usize {
        match self {
            Extension::Plain { cell } | Extension::Reflected { cell, .. } => cell,
        }
    }
}

/// An extension bound to a discrete function.
#[derive(Debug, Clone, Copy)]
pub struct Extended<'a, T> {
    pub space: &'a Space<T>,
    pub u: &'a DgFunction<T>,
    pub ext: Extension,
}

impl<T: Real> Extended<'_, T> {
    fn plain_value_grad(&self, cell: usize, x: Vec2<T>) -> (State<T>, State<T>, State<T>) {
        let s = self.space;
        evaluate_block_grad(&s.basis, self.u.block(cell), self.u.m, s.mesh.cells[cell].center, s.h(), x)
    }
}

impl<T: Real> Field<T> for Extended<'_, T> {
    fn value(&self, x: Vec2<T>) -> State<T> {
        match self.ext {
            Extension::Plain { cell } => self.space.eval_unchecked(self.u, cell, x),
            Extension::Reflected { cell, face } => {
                let f = &self.space.mesh.faces[face];
                let u = self.space.eval_unchecked(self.u, cell, x);
                let foot = self.space.eval_unchecked(self.u, cell, f.project(x));
                let vn = foot[1] * f.normal.x + foot[2] * f.normal.y;
                let two = T::two();
                State::acoustic(u[0], u[1] - two * vn * f.normal.x, u[2] - two * vn * f.normal.y)
            }
        }
    }

    fn value_grad(&self, x: Vec2<T>) -> (State<T>, State<T>, State<T>) {
        match self.ext {
            Extension::Plain { cell } => self.plain_value_grad(cell, x),
            Extension::Reflected { cell, face } => {
                let f = &self.space.mesh.faces[face];
                let plain = Extended { ext: Extension::Plain { cell }, ..*self };
                Mirrored { inner: plain, anchor: f.p, n: f.normal }.value_grad(x)
            }
        }
    }
}

/// `L_E(u)`: the block of `cell` as a polynomial on the whole plane.
pub fn extend<'a, T: Real>(space: &'a Space<T>, u: &'a DgFunction<T>, cell: usize) -> Result<Extended<'a, T>> {
    space.check(u)?;
    space.mesh.cell(cell)?;
    Ok(Extended { space, u, ext: Extension::Plain { cell } })
}

/// `M_{n_γ}(L_E(u))`: the block of `cell` mirrored at boundary face `face`.
pub fn reflected_extend<'a, T: Real>(
    space: &'a Space<T>,
    u: &'a DgFunction<T>,
    cell: usize,
    face: usize,
) -> Result<Extended<'a, T>> {
    space.check(u)?;
    space.mesh.cell(cell)?;
    let f = space.mesh.faces.get(face).ok_or(Error::NotBoundary(face))?;
    if !f.is_boundary() {
        return Err(Error::NotBoundary(face));
    }
    if u.m != 3 {
        return Err(Error::Unsupported("mirroring requires the acoustic system"));
    }
    Ok(Extended { space, u, ext: Extension::Reflected { cell, face } })
}

/// Which polynomial of the pair `(γ_i, γ_j)` of a stabilized cell is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// The stabilized cell itself.
    Cell,
    /// The neighbour across `γ_i` (virtual if `γ_i` is a wall).
    First,
    /// The neighbour across `γ_j` (virtual if `γ_j` is a wall).
    Second,
}

/// Selects the extension between local faces `i` and `j` of `cell`.
///
/// Internal faces give their neighbour. A wall face gives the neighbour across the other
/// face mirrored at the wall. Two walls are rejected.
pub fn unified_extension<T: Real>(space: &Space<T>, cell: usize, i: usize, j: usize, source: Source) -> Result<Extension> {
    let c = space.mesh.cell(cell)?;
    let k = c.face_ids.len();
    if i >= k || j >= k || i == j {
        return Err(Error::Config(format!("invalid face pair ({i}, {j}) for cell {cell} with {k} faces")));
    }
    let (fi, fj) = (c.face_ids[i], c.face_ids[j]);
    let (ni, nj) = (space.mesh.neighbor(cell, fi), space.mesh.neighbor(cell, fj));
    if ni.is_none() && nj.is_none() {
        return Err(Error::BoundaryPair { cell, first: fi, second: fj });
    }
    Ok(match source {
        Source::Cell => Extension::Plain { cell },
        Source::First => match ni {
            Some(n) => Extension::Plain { cell: n },
            None => Extension::Reflected { cell: nj.expect("checked"), face: fi },
        },
        Source::Second => match nj {
            Some(n) => Extension::Plain { cell: n },
            None => Extension::Reflected { cell: ni.expect("checked"), face: fj },
        },
    })
}

/// `L^{ij}_𝓔(u)` bound to `u`.
pub fn unified_extend<'a, T: Real>(
    space: &'a Space<T>,
    u: &'a DgFunction<T>,
    cell: usize,
    i: usize,
    j: usize,
    source: Source,
) -> Result<Extended<'a, T>> {
    space.check(u)?;
    let ext = unified_extension(space, cell, i, j, source)?;
    if matches!(ext, Extension::Reflected { .. }) && u.m != 3 {
        return Err(Error::Unsupported("mirroring requires the acoustic system"));
    }
    Ok(Extended { space, u, ext })
}

/// Sparse per-cell accumulation of residual blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Contribution<T> {
    block_len: usize,
    /// `(cell, block)` in order of first touch.
    pub entries: Vec<(usize, Vec<T>)>,
}

impl<T: Real> Contribution<T> {
    pub fn new(block_len: usize) -> Self {
        Self { block_len, entries: Vec::new() }
    }

    pub fn block_mut(&mut self, cell: usize) -> &mut [T] {
        let pos = match self.entries.iter().position(|(c, _)| *c == cell) {
            Some(p) => p,
            None => {
                self.entries.push((cell, vec![T::zero(); self.block_len]));
                self.entries.len() - 1
            }
        };
        &mut self.entries[pos].1
    }

    pub fn block(&self, cell: usize) -> Option<&[T]> {
        self.entries.iter().find(|(c, _)| *c == cell).map(|(_, b)| b.as_slice())
    }

    /// Adds the blocks into `r` in ascending cell order.
    pub fn add_into(&self, r: &mut DgFunction<T>) {
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by_key(|&k| self.entries[k].0);
        for k in order {
            let (cell, b) = &self.entries[k];
            for (y, &x) in r.block_mut(*cell).iter_mut().zip(b) {
                *y += x;
            }
        }
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().flat_map(|(_, b)| b.iter()).fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Accumulates linear functionals of an extended test function into residual blocks.
///
/// `add_value(ext, x, g)` adds `⟨g, L(φ)(x)⟩` and `add_grad(ext, x, gx, gy)` adds
/// `⟨gx, ∂x L(φ)(x)⟩ + ⟨gy, ∂y L(φ)(x)⟩` for every mode `φ` of the source block.
pub struct TestSink<'a, T> {
    space: &'a Space<T>,
    m: usize,
    pub contribution: Contribution<T>,
}

impl<'a, T: Real> TestSink<'a, T> {
    pub fn new(space: &'a Space<T>, m: usize) -> Self {
        Self { space, m, contribution: Contribution::new(space.n_loc() * m) }
    }

    fn plain_value(&mut self, cell: usize, x: Vec2<T>, g: State<T>) {
        let s = self.space;
        let n = s.n_loc();
        let mut phi = [T::zero(); 64];
        s.basis.eval(s.mesh.cells[cell].center, s.h(), x, &mut phi[..n]);
        let m = self.m;
        let b = self.contribution.block_mut(cell);
        for k in 0..n {
            for c in 0..m {
                b[k * m + c] += g[c] * phi[k];
            }
        }
    }

    fn plain_grad(&mut self, cell: usize, x: Vec2<T>, gx: State<T>, gy: State<T>) {
        let s = self.space;
        let n = s.n_loc();
        let (mut v, mut dx, mut dy) = ([T::zero(); 64], [T::zero(); 64], [T::zero(); 64]);
        s.basis.eval_grad(s.mesh.cells[cell].center, s.h(), x, &mut v[..n], &mut dx[..n], &mut dy[..n]);
        let m = self.m;
        let b = self.contribution.block_mut(cell);
        for k in 0..n {
            for c in 0..m {
                b[k * m + c] += gx[c] * dx[k] + gy[c] * dy[k];
            }
        }
    }

    pub fn add_value(&mut self, ext: Extension, x: Vec2<T>, g: State<T>) {
        match ext {
            Extension::Plain { cell } => self.plain_value(cell, x, g),
            Extension::Reflected { cell, face } => {
                let f = &self.space.mesh.faces[face];
                let n = f.normal;
                self.plain_value(cell, x, g);
                let s = -T::two() * (g[1] * n.x + g[2] * n.y);
                self.plain_value(cell, f.project(x), State::acoustic(T::zero(), s * n.x, s * n.y));
            }
        }
    }

    pub fn add_grad(&mut self, ext: Extension, x: Vec2<T>, gx: State<T>, gy: State<T>) {
        match ext {
            Extension::Plain { cell } => self.plain_grad(cell, x, gx, gy),
            Extension::Reflected { cell, face } => {
                let f = &self.space.mesh.faces[face];
                let n = f.normal;
                self.plain_grad(cell, x, gx, gy);
                let sv = Vec2::new(gx[1] * n.x + gx[2] * n.y, gy[1] * n.x + gy[2] * n.y);
                let t = (sv - n * sv.dot(n)) * (-T::two());
                let z = T::zero();
                self.plain_grad(
                    cell,
                    f.project(x),
                    State::acoustic(z, t.x * n.x, t.x * n.y),
                    State::acoustic(z, t.y * n.x, t.y * n.y),
                );
            }
        }
    }

    pub fn finish(self) -> Contribution<T> {
        self.contribution
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BackgroundMesh, Geometry};
    use crate::mesh::build_mesh;
    use crate::system::mirror;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(r: usize) -> Space<f64> {
        let mesh = build_mesh(BackgroundMesh::unit_square(4), Geometry::ramp(0.3, 0.2)).unwrap();
        Space::new(mesh, r)
    }

    fn random_function(s: &Space<f64>, m: usize, seed: u64) -> DgFunction<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = s.zeros(m);
        for c in u.coeffs.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
        u
    }

    fn cut_face(s: &Space<f64>) -> usize {
        s.mesh.faces.iter().position(|f| f.cut.is_some()).unwrap()
    }

    #[test]
    fn extension_of_global_polynomial_is_the_polynomial() {
        let s = space(2);
        let p = GlobalPolynomial::new(1, Vec2::zero(), 1.0, vec![vec![0.0, 1.0, 2.0]]);
        let u = p.to_dg(&s.mesh, &s.basis);
        for cell in 0..s.mesh.n_cells() {
            let e = extend(&s, &u, cell).unwrap();
            for x in [Vec2::new(0.1, 0.2), Vec2::new(3.0, -1.0), Vec2::new(0.95, 0.99)] {
                assert_relative_eq!(e.value(x)[0], x.x + 2.0 * x.y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn extension_distinguishes_cells() {
        let s = space(0);
        let mut u = s.zeros(1);
        u.coeffs[0] = 1.0;
        u.coeffs[1] = 2.0;
        let x = Vec2::new(0.5, 0.5);
        assert_eq!(extend(&s, &u, 0).unwrap().value(x)[0], 1.0);
        assert_eq!(extend(&s, &u, 1).unwrap().value(x)[0], 2.0);
        assert!(matches!(extend(&s, &u, 1000), Err(Error::UnknownCell(1000))));
    }

    #[test]
    fn mirror_polynomial_examples() {
        let face = Face {
            id: 0,
            kind: crate::mesh::FaceKind::Boundary,
            p: Vec2::new(1.0, 0.0),
            q: Vec2::new(1.0, 1.0),
            length: 1.0,
            normal: Vec2::new(1.0, 0.0),
            left: 0,
            right: None,
            cut: None,
        };
        // v = (x, 0): v(x⊥)·n = 1, so the mirrored velocity is (x − 2, 0)
        let p = GlobalPolynomial::new(1, Vec2::zero(), 1.0, vec![vec![0.3, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0; 3]]);
        let mp = mirror_polynomial(&p, &face);
        for x in [Vec2::new(0.2, 0.4), Vec2::new(-3.0, 2.0)] {
            let v = mp.value(x);
            assert_relative_eq!(v[1], x.x - 2.0, epsilon = 1e-14);
            assert_eq!(v[2], 0.0);
            assert_eq!(v[0], 0.3);
        }
        // v ≡ 0 leaves the field unchanged
        let q = GlobalPolynomial::new(1, Vec2::zero(), 1.0, vec![vec![1.0, 2.0, 3.0], vec![0.0; 3], vec![0.0; 3]]);
        let x = Vec2::new(0.7, 0.1);
        assert_eq!(mirror_polynomial(&q, &face).value(x), q.value(x));
    }

    #[test]
    fn mirror_polynomial_matches_mirror_state_on_the_face() {
        let s = space(3);
        let f = &s.mesh.faces[cut_face(&s)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = GlobalPolynomial::random(&mut rng, 3, 3, &[0, 1, 2], Vec2::new(0.5, 0.5), 1.0);
        let mp = mirror_polynomial(&p, f);
        for k in 0..5 {
            let x = f.p.lerp(f.q, k as f64 / 4.0);
            let a = mp.value(x);
            let b = mirror(&p.value(x), f.normal);
            for c in 0..3 {
                assert_relative_eq!(a[c], b[c], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mirrored_polynomial_stays_in_the_space() {
        let s = space(2);
        let f = &s.mesh.faces[cut_face(&s)];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = GlobalPolynomial::random(&mut rng, 2, 3, &[0, 1, 2], Vec2::new(0.5, 0.5), 1.0);
        let mp = mirror_polynomial(&p, f);
        let proj = s.l2_project(3, |x| mp.value(x)).unwrap();
        for (cell, c) in s.mesh.cells.iter().enumerate() {
            if c.volume_fraction < 0.5 {
                continue;
            }
            for x in [c.center, c.polygon[0]] {
                let a = s.evaluate(&proj, cell, x).unwrap();
                let b = mp.value(x);
                for k in 0..3 {
                    assert_relative_eq!(a[k], b[k], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn reflected_extension_traces() {
        let s = space(2);
        let fid = cut_face(&s);
        let f = &s.mesh.faces[fid];
        let cell = f.left;
        // zero velocity: reflection changes nothing
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = GlobalPolynomial::random(&mut rng, 2, 3, &[0], Vec2::new(0.5, 0.5), 1.0);
        let u = p.to_dg(&s.mesh, &s.basis);
        let r = reflected_extend(&s, &u, cell, fid).unwrap();
        let e = extend(&s, &u, cell).unwrap();
        let x = Vec2::new(0.3, 0.9);
        assert_eq!(r.value(x), e.value(x));

        // random field: on the face v·n flips, p and tangential v are kept
        let u = random_function(&s, 3, 4);
        let r = reflected_extend(&s, &u, cell, fid).unwrap();
        let e = extend(&s, &u, cell).unwrap();
        let n = f.normal;
        for &x in &s.faces[fid].rule.points {
            let (a, b) = (r.value(x), e.value(x));
            assert_relative_eq!(a[0], b[0], epsilon = 1e-14);
            let vn = |st: State<f64>| st[1] * n.x + st[2] * n.y;
            let vt = |st: State<f64>| -st[1] * n.y + st[2] * n.x;
            assert_relative_eq!(vn(a), -vn(b), epsilon = 1e-12);
            assert_relative_eq!(vt(a), vt(b), epsilon = 1e-12);
        }
    }

    #[test]
    fn reflected_extension_fixes_wall_compatible_fields() {
        let s = space(2);
        let fid = cut_face(&s);
        let f = &s.mesh.faces[fid];
        // v = φ(x) t with t tangential to the wall: v·n = 0 on the whole line
        let t = Vec2::new(-f.normal.y, f.normal.x);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = GlobalPolynomial::random(&mut rng, 2, 1, &[0], Vec2::new(0.5, 0.5), 1.0);
        let pr = GlobalPolynomial::random(&mut rng, 2, 1, &[0], Vec2::new(0.5, 0.5), 1.0);
        let p = GlobalPolynomial::new(
            2,
            Vec2::new(0.5, 0.5),
            1.0,
            vec![pr.coeffs[0].clone(), a.coeffs[0].iter().map(|c| c * t.x).collect(), a.coeffs[0].iter().map(|c| c * t.y).collect()],
        );
        let u = p.to_dg(&s.mesh, &s.basis);
        let r = reflected_extend(&s, &u, f.left, fid).unwrap();
        for &x in &s.faces[fid].rule.points {
            let (a, b) = (r.value(x), p.value(x));
            for c in 0..3 {
                assert_relative_eq!(a[c], b[c], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn reflected_extension_requires_a_wall() {
        let s = space(1);
        let u = s.zeros(3);
        let internal = s.mesh.faces.iter().position(|f| !f.is_boundary()).unwrap();
        assert_eq!(reflected_extend(&s, &u, 0, internal).unwrap_err(), Error::NotBoundary(internal));
        let wall = cut_face(&s);
        assert!(matches!(reflected_extend(&s, &s.zeros(1), 0, wall), Err(Error::Unsupported(_))));
    }

    #[test]
    fn reflected_gradient_matches_finite_differences() {
        let s = space(3);
        let fid = cut_face(&s);
        let u = random_function(&s, 3, 8);
        let r = reflected_extend(&s, &u, s.mesh.faces[fid].left, fid).unwrap();
        let x = Vec2::new(0.41, 0.37);
        let (_, dx, dy) = r.value_grad(x);
        let eps = 1e-6;
        let ddx = (r.value(Vec2::new(x.x + eps, x.y)) - r.value(Vec2::new(x.x - eps, x.y))) * (0.5 / eps);
        let ddy = (r.value(Vec2::new(x.x, x.y + eps)) - r.value(Vec2::new(x.x, x.y - eps))) * (0.5 / eps);
        for c in 0..3 {
            assert_relative_eq!(dx[c], ddx[c], epsilon = 1e-6);
            assert_relative_eq!(dy[c], ddy[c], epsilon = 1e-6);
        }
    }

    #[test]
    fn unified_extension_cases() {
        let s = space(1);
        // find a cell with a wall face and an internal face
        let (cell, wall, inner) = s
            .mesh
            .cells
            .iter()
            .find_map(|c| {
                let w = c.face_ids.iter().position(|&f| s.mesh.faces[f].is_boundary())?;
                let i = c.face_ids.iter().position(|&f| !s.mesh.faces[f].is_boundary())?;
                Some((c.id, w, i))
            })
            .unwrap();
        let nb = s.mesh.neighbor(cell, s.mesh.cells[cell].face_ids[inner]).unwrap();
        assert_eq!(unified_extension(&s, cell, wall, inner, Source::Cell).unwrap(), Extension::Plain { cell });
        assert_eq!(unified_extension(&s, cell, wall, inner, Source::Second).unwrap(), Extension::Plain { cell: nb });
        assert_eq!(
            unified_extension(&s, cell, wall, inner, Source::First).unwrap(),
            Extension::Reflected { cell: nb, face: s.mesh.cells[cell].face_ids[wall] }
        );
        assert_eq!(
            unified_extension(&s, cell, inner, wall, Source::Second).unwrap(),
            Extension::Reflected { cell: nb, face: s.mesh.cells[cell].face_ids[wall] }
        );
        // corner cell 0 touches two walls
        let c0 = &s.mesh.cells[0];
        let walls: Vec<usize> = (0..c0.face_ids.len()).filter(|&k| s.mesh.faces[c0.face_ids[k]].is_boundary()).collect();
        assert!(matches!(
            unified_extension(&s, 0, walls[0], walls[1], Source::First),
            Err(Error::BoundaryPair { cell: 0, .. })
        ));
    }

    #[test]
    fn sink_is_adjoint_to_evaluation() {
        let s = space(2);
        let fid = cut_face(&s);
        let cell = s.mesh.faces[fid].left;
        let w = random_function(&s, 3, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for ext in [Extension::Plain { cell }, Extension::Reflected { cell, face: fid }] {
            let x = Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.4..1.0));
            let g = State::acoustic(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let gy = State::acoustic(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let mut sink = TestSink::new(&s, 3);
            sink.add_value(ext, x, g);
            sink.add_grad(ext, x, gy, g);
            let contrib = sink.finish();
            let via_sink: f64 = contrib
                .entries
                .iter()
                .map(|(c, b)| b.iter().zip(w.block(*c)).map(|(a, b)| a * b).sum::<f64>())
                .sum();
            let (v, dx, dy) = Extended { space: &s, u: &w, ext }.value_grad(x);
            let direct = g.dot(&v) + gy.dot(&dx) + g.dot(&dy);
            assert_relative_eq!(via_sink, direct, epsilon = 1e-12);
        }
    }
}
