//! The discrete space on a cut-cell mesh: cached quadrature, basis tabulations
//! and factored mass matrices.

use crate::basis::{check_cell, combine, evaluate_block, Basis, DgFunction};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::linalg::Cholesky;
use crate::mesh::CutCellMesh;
use crate::quadrature::{cell_rule, face_points_for_degree, segment_rule, QuadratureRule};
use crate::scalar::Real;
use crate::state::State;

#[derive(Debug, Clone)]
pub struct CellCache<T> {
    pub rule: QuadratureRule<T>,
    /// `phi[q · n_loc + k]` at quadrature point `q`.
    pub phi: Vec<T>,
    pub dphi_x: Vec<T>,
    pub dphi_y: Vec<T>,
    /// Row-major `n_loc × n_loc` Gram matrix.
    pub mass: Vec<T>,
    /// `None` when the Gram matrix is not numerically positive definite.
    pub factor: Option<Cholesky<T>>,
    /// `∫_E φ_k`.
    pub moments: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct FaceCache<T> {
    pub rule: QuadratureRule<T>,
    /// Left-cell mode values, `[q · n_loc + k]`.
    pub phi_left: Vec<T>,
    pub phi_right: Option<Vec<T>>,
}

#[derive(Debug, Clone)]
pub struct Space<T> {
    pub mesh: CutCellMesh<T>,
    pub basis: Basis,
    pub cells: Vec<CellCache<T>>,
    pub faces: Vec<FaceCache<T>>,
    /// Enables the rayon assembly path (deterministic reduction).
    pub parallel: bool,
}

/// Total degree integrated exactly by the cell rules.
pub fn cell_quadrature_degree(r: usize) -> usize {
    2 * r + 2
}

/// Quadrature rule of a cut cell, exact for total degree `degree`.
pub fn cell_quadrature<T: Real>(mesh: &CutCellMesh<T>, cell: usize, degree: usize) -> Result<QuadratureRule<T>> {
    let c = mesh.cell(cell)?;
    Ok(cell_rule(&c.polygon, degree, c.uncut))
}

impl<T: Real> Space<T> {
    pub fn new(mesh: CutCellMesh<T>, degree: usize) -> Self {
        let basis = Basis::new(degree);
        let n = basis.n_loc();
        let h = mesh.h();
        let qdeg = cell_quadrature_degree(degree);
        let cells = mesh
            .cells
            .iter()
            .map(|cell| {
                let rule = cell_rule(&cell.polygon, qdeg, cell.uncut);
                let nq = rule.len();
                let (mut phi, mut dx, mut dy) = (vec![T::zero(); nq * n], vec![T::zero(); nq * n], vec![T::zero(); nq * n]);
                for (q, &x) in rule.points.iter().enumerate() {
                    let s = q * n..(q + 1) * n;
                    basis.eval_grad(cell.center, h, x, &mut phi[s.clone()], &mut dx[s.clone()], &mut dy[s]);
                }
                let mut mass = vec![T::zero(); n * n];
                let mut moments = vec![T::zero(); n];
                for (q, &w) in rule.weights.iter().enumerate() {
                    let p = &phi[q * n..(q + 1) * n];
                    for i in 0..n {
                        moments[i] += w * p[i];
                        for j in 0..n {
                            mass[i * n + j] += w * p[i] * p[j];
                        }
                    }
                }
                let factor = Cholesky::factor(&mass, n);
                CellCache { rule, phi, dphi_x: dx, dphi_y: dy, mass, factor, moments }
            })
            .collect();
        let np = face_points_for_degree(degree);
        let faces = mesh
            .faces
            .iter()
            .map(|f| {
                let rule = segment_rule(f.p, f.q, np);
                let tab = |cell: usize| {
                    let center = mesh.cells[cell].center;
                    let mut v = vec![T::zero(); rule.len() * n];
                    for (q, &x) in rule.points.iter().enumerate() {
                        basis.eval(center, h, x, &mut v[q * n..(q + 1) * n]);
                    }
                    v
                };
                let phi_left = tab(f.left);
                let phi_right = f.right.map(tab);
                FaceCache { rule, phi_left, phi_right }
            })
            .collect();
        Self { mesh, basis, cells, faces, parallel: false }
    }

    #[inline]
    pub fn n_loc(&self) -> usize {
        self.basis.n_loc()
    }

    #[inline]
    pub fn h(&self) -> T {
        self.mesh.h()
    }

    pub fn zeros(&self, m: usize) -> DgFunction<T> {
        DgFunction::zeros(&self.basis, m, self.mesh.n_cells())
    }

    pub fn check(&self, u: &DgFunction<T>) -> Result<()> {
        if u.n_cells != self.mesh.n_cells() || u.n_loc != self.n_loc() {
            return Err(Error::Mismatch(format!(
                "function has {} cells × {} modes, space has {} × {}",
                u.n_cells,
                u.n_loc,
                self.mesh.n_cells(),
                self.n_loc()
            )));
        }
        Ok(())
    }

    /// Gram matrix of the cell's modes (row-major).
    pub fn mass_matrix(&self, cell: usize) -> Result<&[T]> {
        self.mesh.cell(cell)?;
        Ok(&self.cells[cell].mass)
    }

    /// Value of `u`'s block for `cell` at any point of the plane.
    pub fn evaluate(&self, u: &DgFunction<T>, cell: usize, x: Vec2<T>) -> Result<State<T>> {
        check_cell(u, cell)?;
        self.check(u)?;
        Ok(self.eval_unchecked(u, cell, x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, u: &DgFunction<T>, cell: usize, x: Vec2<T>) -> State<T> {
        evaluate_block(&self.basis, u.block(cell), u.m, self.mesh.cells[cell].center, self.h(), x)
    }

    /// `u` at cell quadrature point `q` of `cell`.
    #[inline]
    pub fn cell_value(&self, u: &DgFunction<T>, cell: usize, q: usize) -> State<T> {
        let n = self.n_loc();
        combine(u.block(cell), &self.cells[cell].phi[q * n..(q + 1) * n], u.m)
    }

    /// Applies the inverse of the block-diagonal mass matrix in place.
    pub fn apply_mass_inverse(&self, r: &mut DgFunction<T>) -> Result<()> {
        self.check(r)?;
        let m = r.m;
        for (cell, cache) in self.cells.iter().enumerate() {
            let f = cache.factor.as_ref().ok_or(Error::SingularMass { cell })?;
            f.solve_interleaved(r.block_mut(cell), m);
        }
        Ok(())
    }

    /// Per-cell L2 projection of a pointwise field with `m` components.
    pub fn l2_project(&self, m: usize, f: impl Fn(Vec2<T>) -> State<T>) -> Result<DgFunction<T>> {
        let mut u = self.zeros(m);
        let n = self.n_loc();
        for (cell, cache) in self.cells.iter().enumerate() {
            let block = u.block_mut(cell);
            for (q, (&x, &w)) in cache.rule.points.iter().zip(&cache.rule.weights).enumerate() {
                let v = f(x);
                for k in 0..n {
                    let pk = w * cache.phi[q * n + k];
                    for c in 0..m {
                        block[k * m + c] += pk * v[c];
                    }
                }
            }
            cache.factor.as_ref().ok_or(Error::SingularMass { cell })?.solve_interleaved(block, m);
        }
        Ok(u)
    }

    /// `Σ_E ∫_E u` per component.
    pub fn total_mass(&self, u: &DgFunction<T>) -> State<T> {
        let mut s = State::zero();
        for (cell, cache) in self.cells.iter().enumerate() {
            let b = u.block(cell);
            for (k, &mk) in cache.moments.iter().enumerate() {
                for c in 0..u.m {
                    s[c] += mk * b[k * u.m + c];
                }
            }
        }
        s
    }

    /// `‖u‖_{L²(Ω)}` over all components.
    pub fn l2_norm(&self, u: &DgFunction<T>) -> T {
        let mut s = T::zero();
        for (cell, cache) in self.cells.iter().enumerate() {
            for (q, &w) in cache.rule.weights.iter().enumerate() {
                let v = self.cell_value(u, cell, q);
                s += w * v.dot(&v);
            }
        }
        s.sqrt()
    }

    /// `‖u − g‖_{L²(Ω)}` for a pointwise reference field.
    pub fn l2_error(&self, u: &DgFunction<T>, g: impl Fn(Vec2<T>) -> State<T>) -> T {
        let mut s = T::zero();
        for (cell, cache) in self.cells.iter().enumerate() {
            for (q, (&x, &w)) in cache.rule.points.iter().zip(&cache.rule.weights).enumerate() {
                let d = self.cell_value(u, cell, q) - g(x);
                s += w * d.dot(&d);
            }
        }
        s.sqrt()
    }

    /// Largest component magnitude of `u` over all cell and face quadrature points.
    pub fn sup_norm(&self, u: &DgFunction<T>) -> T {
        let mut s = T::zero();
        for cell in 0..self.cells.len() {
            for q in 0..self.cells[cell].rule.len() {
                s = s.max(self.cell_value(u, cell, q).max_abs());
            }
        }
        let n = self.n_loc();
        for (f, fc) in self.mesh.faces.iter().zip(&self.faces) {
            for q in 0..fc.rule.len() {
                let v = combine(u.block(f.left), &fc.phi_left[q * n..(q + 1) * n], u.m);
                s = s.max(v.max_abs());
            }
        }
        s
    }
}
