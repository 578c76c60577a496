//! Scaled monomial bases and discrete functions.
//!
//! Every cell uses `((x - x_c)/h)^p ((y - y_c)/h)^q`, `p + q <= r`, centred at its
//! background cell. The modes are global polynomials, so a cell's block can be
//! evaluated anywhere in the plane.

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scalar::Real;
use crate::state::{State, MAX_COMPONENTS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub degree: usize,
    /// Exponents `(p, q)` ordered by total degree, then by increasing `q`.
    pub modes: Vec<(usize, usize)>,
}

/// Largest supported polynomial degree (fixed-size scratch buffers in the kernels).
pub const MAX_DEGREE: usize = 9;

impl Basis {
    pub fn new(degree: usize) -> Self {
        assert!(degree <= MAX_DEGREE, "polynomial degree {degree} exceeds {MAX_DEGREE}");
        let mut modes = Vec::with_capacity((degree + 1) * (degree + 2) / 2);
        for total in 0..=degree {
            for q in 0..=total {
                modes.push((total - q, q));
            }
        }
        Self { degree, modes }
    }

    #[inline]
    pub fn n_loc(&self) -> usize {
        self.modes.len()
    }

    fn powers<T: Real>(&self, s: T) -> [T; 16] {
        let mut pw = [T::one(); 16];
        for k in 1..=self.degree {
            pw[k] = pw[k - 1] * s;
        }
        pw
    }

    /// Values of all modes at `x` for a cell centred at `center`.
    pub fn eval<T: Real>(&self, center: Vec2<T>, h: T, x: Vec2<T>, out: &mut [T]) {
        let inv = T::one() / h;
        let px = self.powers((x.x - center.x) * inv);
        let py = self.powers((x.y - center.y) * inv);
        for (o, &(p, q)) in out.iter_mut().zip(&self.modes) {
            *o = px[p] * py[q];
        }
    }

    /// Values and Cartesian derivatives of all modes at `x`.
    pub fn eval_grad<T: Real>(
        &self,
        center: Vec2<T>,
        h: T,
        x: Vec2<T>,
        val: &mut [T],
        dx: &mut [T],
        dy: &mut [T],
    ) {
        let inv = T::one() / h;
        let px = self.powers((x.x - center.x) * inv);
        let py = self.powers((x.y - center.y) * inv);
        for (k, &(p, q)) in self.modes.iter().enumerate() {
            val[k] = px[p] * py[q];
            dx[k] = if p == 0 { T::zero() } else { T::from_usize_lossy(p) * px[p - 1] * py[q] * inv };
            dy[k] = if q == 0 { T::zero() } else { T::from_usize_lossy(q) * px[p] * py[q - 1] * inv };
        }
    }
}

/// Piecewise polynomial: one `n_loc × m` coefficient block per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DgFunction<T> {
    pub degree: usize,
    pub n_loc: usize,
    pub m: usize,
    pub n_cells: usize,
    /// Layout `[(cell · n_loc + mode) · m + component]`.
    pub coeffs: Vec<T>,
}

impl<T: Real> DgFunction<T> {
    pub fn zeros(basis: &Basis, m: usize, n_cells: usize) -> Self {
        assert!((1..=MAX_COMPONENTS).contains(&m));
        Self {
            degree: basis.degree,
            n_loc: basis.n_loc(),
            m,
            n_cells,
            coeffs: vec![T::zero(); n_cells * basis.n_loc() * m],
        }
    }

    #[inline]
    pub fn block_len(&self) -> usize {
        self.n_loc * self.m
    }

    #[inline]
    pub fn block(&self, cell: usize) -> &[T] {
        let b = self.block_len();
        &self.coeffs[cell * b..(cell + 1) * b]
    }

    #[inline]
    pub fn block_mut(&mut self, cell: usize) -> &mut [T] {
        let b = self.block_len();
        &mut self.coeffs[cell * b..(cell + 1) * b]
    }

    #[inline]
    pub fn coeff(&self, cell: usize, mode: usize, comp: usize) -> T {
        self.coeffs[(cell * self.n_loc + mode) * self.m + comp]
    }

    #[inline]
    pub fn coeff_mut(&mut self, cell: usize, mode: usize, comp: usize) -> &mut T {
        &mut self.coeffs[(cell * self.n_loc + mode) * self.m + comp]
    }

    pub fn same_shape(&self, o: &Self) -> bool {
        self.n_loc == o.n_loc && self.m == o.m && self.n_cells == o.n_cells
    }

    pub fn axpy(&mut self, a: T, x: &Self) {
        for (y, &xi) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *y += a * xi;
        }
    }

    pub fn scale(&mut self, a: T) {
        for y in self.coeffs.iter_mut() {
            *y *= a;
        }
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|v| v.is_finite())
    }
}

/// Combines a coefficient block with precomputed mode values.
#[inline]
pub fn combine<T: Real>(block: &[T], phi: &[T], m: usize) -> State<T> {
    let mut s = State::zero();
    for (k, &pk) in phi.iter().enumerate() {
        let row = &block[k * m..(k + 1) * m];
        for c in 0..m {
            s[c] += row[c] * pk;
        }
    }
    s
}

/// Evaluates the block of `cell` (centred at `center`) at `x`, inside the cell or not.
pub fn evaluate_block<T: Real>(
    basis: &Basis,
    block: &[T],
    m: usize,
    center: Vec2<T>,
    h: T,
    x: Vec2<T>,
) -> State<T> {
    let mut phi = [T::zero(); 64];
    let n = basis.n_loc();
    basis.eval(center, h, x, &mut phi[..n]);
    combine(block, &phi[..n], m)
}

/// Value and gradient `(∂x, ∂y)` of a block at `x`.
pub fn evaluate_block_grad<T: Real>(
    basis: &Basis,
    block: &[T],
    m: usize,
    center: Vec2<T>,
    h: T,
    x: Vec2<T>,
) -> (State<T>, State<T>, State<T>) {
    let (mut v, mut dx, mut dy) = ([T::zero(); 64], [T::zero(); 64], [T::zero(); 64]);
    let n = basis.n_loc();
    basis.eval_grad(center, h, x, &mut v[..n], &mut dx[..n], &mut dy[..n]);
    (combine(block, &v[..n], m), combine(block, &dx[..n], m), combine(block, &dy[..n], m))
}

pub(crate) fn check_cell<T>(u: &DgFunction<T>, cell: usize) -> Result<()> {
    if cell >= u.n_cells {
        return Err(Error::UnknownCell(cell));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mode_counts_and_order() {
        assert_eq!(Basis::new(0).n_loc(), 1);
        assert_eq!(Basis::new(3).n_loc(), 10);
        assert_eq!(Basis::new(2).modes, vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
    }

    #[test]
    fn linear_mode_vanishes_at_center() {
        let b = Basis::new(1);
        let mut out = [0.0; 3];
        b.eval(Vec2::new(0.5, 0.5), 1.0, Vec2::new(0.5, 0.5), &mut out);
        assert_eq!(out, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let b = Basis::new(3);
        let (c, h) = (Vec2::new(0.3, -0.2), 0.25);
        let x = Vec2::new(0.41, 0.07);
        let n = b.n_loc();
        let (mut v, mut dx, mut dy) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        b.eval_grad(c, h, x, &mut v, &mut dx, &mut dy);
        let eps = 1e-6;
        let (mut vp, mut vm) = (vec![0.0; n], vec![0.0; n]);
        b.eval(c, h, Vec2::new(x.x + eps, x.y), &mut vp);
        b.eval(c, h, Vec2::new(x.x - eps, x.y), &mut vm);
        for k in 0..n {
            assert_relative_eq!(dx[k], (vp[k] - vm[k]) / (2.0 * eps), epsilon = 1e-7);
        }
        b.eval(c, h, Vec2::new(x.x, x.y + eps), &mut vp);
        b.eval(c, h, Vec2::new(x.x, x.y - eps), &mut vm);
        for k in 0..n {
            assert_relative_eq!(dy[k], (vp[k] - vm[k]) / (2.0 * eps), epsilon = 1e-7);
        }
    }

    #[test]
    fn block_evaluation_matches_monomial_sum() {
        let b = Basis::new(2);
        let (c, h) = (Vec2::new(1.5, 0.5), 1.0);
        let block: Vec<f64> = (0..6).map(|k| 0.3 * k as f64 - 0.7).collect();
        let x = Vec2::new(2.0, 1.0);
        let (xs, ys) = (x.x - c.x, x.y - c.y);
        let direct = block[0] + block[1] * xs + block[2] * ys + block[3] * xs * xs
            + block[4] * xs * ys + block[5] * ys * ys;
        let s = evaluate_block(&b, &block, 1, c, h, x);
        assert_relative_eq!(s[0], direct, epsilon = 1e-14);
    }
}
