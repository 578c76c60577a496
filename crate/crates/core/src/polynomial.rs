//! Global polynomial fields, used as exact-solution surrogates and for
//! coefficient-exact projection onto the discrete space.

use rand::Rng;

use crate::basis::{Basis, DgFunction};
use crate::geometry::Vec2;
use crate::mesh::CutCellMesh;
use crate::scalar::Real;
use crate::state::State;

/// `u_c(x) = Σ a_{c,k} ((x - origin)/scale)^{p_k} ((y - origin)/scale)^{q_k}` per component.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPolynomial<T> {
    pub degree: usize,
    pub m: usize,
    pub origin: Vec2<T>,
    pub scale: T,
    /// `coeffs[c][k]` in the mode order of [`Basis`].
    pub coeffs: Vec<Vec<T>>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl<T: Real> GlobalPolynomial<T> {
    pub fn new(degree: usize, origin: Vec2<T>, scale: T, coeffs: Vec<Vec<T>>) -> Self {
        let n = Basis::new(degree).n_loc();
        assert!(coeffs.iter().all(|c| c.len() == n), "need {n} coefficients per component");
        Self { degree, m: coeffs.len(), origin, scale, coeffs }
    }

    pub fn constant(m: usize, value: State<T>) -> Self {
        Self::new(0, Vec2::zero(), T::one(), (0..m).map(|c| vec![value[c]]).collect())
    }

    /// Uniform coefficients in `[-1, 1]` for the selected components, zeros elsewhere.
    pub fn random<R: Rng>(
        rng: &mut R,
        degree: usize,
        m: usize,
        active: &[usize],
        origin: Vec2<T>,
        scale: T,
    ) -> Self {
        let n = Basis::new(degree).n_loc();
        let coeffs = (0..m)
            .map(|c| {
                (0..n)
                    .map(|_| {
                        let v: f64 = rng.gen_range(-1.0..=1.0);
                        if active.contains(&c) {
                            T::lit(v)
                        } else {
                            T::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(degree, origin, scale, coeffs)
    }

    pub fn value(&self, x: Vec2<T>) -> State<T> {
        let basis = Basis::new(self.degree);
        let mut phi = vec![T::zero(); basis.n_loc()];
        basis.eval(self.origin, self.scale, x, &mut phi);
        let mut s = State::zero();
        for c in 0..self.m {
            s[c] = self.coeffs[c].iter().zip(&phi).map(|(&a, &p)| a * p).sum();
        }
        s
    }

    pub fn gradient(&self, x: Vec2<T>) -> (State<T>, State<T>) {
        let basis = Basis::new(self.degree);
        let n = basis.n_loc();
        let (mut v, mut dx, mut dy) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
        basis.eval_grad(self.origin, self.scale, x, &mut v, &mut dx, &mut dy);
        let (mut gx, mut gy) = (State::zero(), State::zero());
        for c in 0..self.m {
            gx[c] = self.coeffs[c].iter().zip(&dx).map(|(&a, &p)| a * p).sum();
            gy[c] = self.coeffs[c].iter().zip(&dy).map(|(&a, &p)| a * p).sum();
        }
        (gx, gy)
    }

    /// Re-expands the polynomial in the scaled monomials of a cell centred at `center`.
    ///
    /// Returns `n_loc(target) × m` coefficients; requires `target.degree >= self.degree`.
    pub fn cell_coefficients(&self, target: &Basis, center: Vec2<T>, h: T) -> Vec<T> {
        assert!(target.degree >= self.degree);
        let src = Basis::new(self.degree);
        let a = h / self.scale;
        let bx = (center.x - self.origin.x) / self.scale;
        let by = (center.y - self.origin.y) / self.scale;
        let index = |p: usize, q: usize| {
            target.modes.iter().position(|&m| m == (p, q)).expect("mode present")
        };
        let pow = |b: T, e: usize| (0..e).fold(T::one(), |acc, _| acc * b);
        let mut out = vec![T::zero(); target.n_loc() * self.m];
        for (k, &(p, q)) in src.modes.iter().enumerate() {
            // (a X + bx)^p (a Y + by)^q
            for i in 0..=p {
                let cx = T::lit(binomial(p, i)) * pow(a, i) * pow(bx, p - i);
                for j in 0..=q {
                    let cy = T::lit(binomial(q, j)) * pow(a, j) * pow(by, q - j);
                    let t = index(i, j);
                    for c in 0..self.m {
                        out[t * self.m + c] += self.coeffs[c][k] * cx * cy;
                    }
                }
            }
        }
        out
    }

    /// Exact representation in the discrete space (the L2 projection of a polynomial
    /// of degree `<= r` is the polynomial itself).
    pub fn to_dg(&self, mesh: &CutCellMesh<T>, basis: &Basis) -> DgFunction<T> {
        let mut u = DgFunction::zeros(basis, self.m, mesh.n_cells());
        let h = mesh.h();
        for cell in &mesh.cells {
            let block = self.cell_coefficients(basis, cell.center, h);
            u.block_mut(cell.id).copy_from_slice(&block);
        }
        u
    }
}
