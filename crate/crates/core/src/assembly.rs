//! Unstabilized semi-discrete residual `a_h(u, φ)` and the shared face kernels.

use rayon::prelude::*;

use crate::basis::{combine, DgFunction};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::space::Space;
use crate::state::State;
use crate::system::SystemSpec;

/// Values `a_h(u, φ)` (plus stabilization) for every test mode, laid out like [`DgFunction`].
pub type Residual<T> = DgFunction<T>;

/// Which half of the numerical flux a face kernel integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxPart {
    /// `½ (f_n(uL) + f_n(uR))`.
    Central,
    /// `S_n(uL, uR)`.
    Dissipation,
}

/// Output of a face kernel: left and right test blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceTerm<T> {
    pub face: usize,
    pub left: Vec<T>,
    pub right: Option<Vec<T>>,
}

pub(crate) fn check_system<T: Real>(space: &Space<T>, sys: &SystemSpec<T>, u: &DgFunction<T>) -> Result<()> {
    space.check(u)?;
    if u.m != sys.m {
        return Err(Error::Mismatch(format!("function has {} components, system has {}", u.m, sys.m)));
    }
    Ok(())
}

/// `∫_γ ⟨F(uL, uR), ⟦φ⟧⟩` for one flux part, with `⟦φ⟧ = φL − φR` and `n` pointing left
/// to right. On walls the exterior state is [`SystemSpec::ghost_state`] and `⟦φ⟧ = φL`.
///
/// Both the base residual and the stabilization's subtraction terms call this kernel.
pub fn face_term<T: Real>(space: &Space<T>, sys: &SystemSpec<T>, u: &DgFunction<T>, face: usize, part: FluxPart) -> FaceTerm<T> {
    let f = &space.mesh.faces[face];
    let fc = &space.faces[face];
    let n_loc = space.n_loc();
    let m = u.m;
    let n = f.normal;
    let mut left = vec![T::zero(); n_loc * m];
    let mut right = f.right.map(|_| vec![T::zero(); n_loc * m]);
    for (q, &w) in fc.rule.weights.iter().enumerate() {
        let pl = &fc.phi_left[q * n_loc..(q + 1) * n_loc];
        let ul = combine(u.block(f.left), pl, m);
        let ur = match (f.right, &fc.phi_right) {
            (Some(r), Some(pr)) => combine(u.block(r), &pr[q * n_loc..(q + 1) * n_loc], m),
            _ => sys.ghost_state(&ul, n),
        };
        let flux = match part {
            FluxPart::Central => sys.central_flux(&ul, &ur, n),
            FluxPart::Dissipation => sys.dissipation(&ul, &ur, n),
        } * w;
        for k in 0..n_loc {
            for c in 0..m {
                left[k * m + c] += flux[c] * pl[k];
            }
        }
        if let (Some(rb), Some(pr)) = (right.as_mut(), &fc.phi_right) {
            let pr = &pr[q * n_loc..(q + 1) * n_loc];
            for k in 0..n_loc {
                for c in 0..m {
                    rb[k * m + c] -= flux[c] * pr[k];
                }
            }
        }
    }
    FaceTerm { face, left, right }
}

/// `−∫_E f(u)·∇φ` for one cell, added into `out`.
fn volume_term<T: Real>(space: &Space<T>, sys: &SystemSpec<T>, u: &DgFunction<T>, cell: usize, out: &mut [T]) {
    let cc = &space.cells[cell];
    let n_loc = space.n_loc();
    let m = u.m;
    for (q, &w) in cc.rule.weights.iter().enumerate() {
        let s = q * n_loc..(q + 1) * n_loc;
        let v = combine(u.block(cell), &cc.phi[s.clone()], m);
        let fx = sys.flux_x(&v) * w;
        let fy = sys.flux_y(&v) * w;
        let (dx, dy) = (&cc.dphi_x[s.clone()], &cc.dphi_y[s]);
        for k in 0..n_loc {
            for c in 0..m {
                out[k * m + c] -= fx[c] * dx[k] + fy[c] * dy[k];
            }
        }
    }
}

/// Assembles `a_h(u, φ)` for every test mode.
///
/// Volume terms are added cell by cell, then face terms face by face (central part
/// before dissipation). The parallel path computes the same per-cell and per-face
/// values concurrently and reduces them in that fixed order, so both paths agree bit
/// for bit.
pub fn assemble_base<T: Real>(space: &Space<T>, sys: &SystemSpec<T>, u: &DgFunction<T>) -> Result<Residual<T>> {
    check_system(space, sys, u)?;
    let mut r = space.zeros(u.m);
    let bl = r.block_len();
    let parts = [FluxPart::Central, FluxPart::Dissipation];
    let nf = space.mesh.faces.len();
    if space.parallel {
        r.coeffs.par_chunks_mut(bl).enumerate().for_each(|(cell, out)| volume_term(space, sys, u, cell, out));
        let terms: Vec<[FaceTerm<T>; 2]> = (0..nf)
            .into_par_iter()
            .map(|f| parts.map(|p| face_term(space, sys, u, f, p)))
            .collect();
        for (f, pair) in terms.iter().enumerate() {
            let face = &space.mesh.faces[f];
            for t in pair {
                add_face(&mut r, t, face.left, face.right);
            }
        }
    } else {
        for (cell, out) in r.coeffs.chunks_mut(bl).enumerate() {
            volume_term(space, sys, u, cell, out);
        }
        for f in 0..nf {
            let face = &space.mesh.faces[f];
            for p in parts {
                let t = face_term(space, sys, u, f, p);
                add_face(&mut r, &t, face.left, face.right);
            }
        }
    }
    Ok(r)
}

fn add_face<T: Real>(r: &mut Residual<T>, t: &FaceTerm<T>, left: usize, right: Option<usize>) {
    for (y, &x) in r.block_mut(left).iter_mut().zip(&t.left) {
        *y += x;
    }
    if let (Some(rc), Some(rb)) = (right, &t.right) {
        for (y, &x) in r.block_mut(rc).iter_mut().zip(rb) {
            *y += x;
        }
    }
}

/// `M⁻¹ r`, cell by cell.
pub fn apply_mass_inverse<T: Real>(space: &Space<T>, mut r: Residual<T>) -> Result<DgFunction<T>> {
    space.apply_mass_inverse(&mut r)?;
    Ok(r)
}

/// `Σ_{walls} ∫_γ boundary_flux(u, n)` per component.
pub fn boundary_flux_integral<T: Real>(space: &Space<T>, sys: &SystemSpec<T>, u: &DgFunction<T>) -> State<T> {
    let n_loc = space.n_loc();
    let mut s = State::zero();
    for (f, fc) in space.mesh.faces.iter().zip(&space.faces) {
        if !f.is_boundary() {
            continue;
        }
        for (q, &w) in fc.rule.weights.iter().enumerate() {
            let ul = combine(u.block(f.left), &fc.phi_left[q * n_loc..(q + 1) * n_loc], u.m);
            s += sys.boundary_flux(&ul, f.normal) * w;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BackgroundMesh, Geometry, Vec2};
    use crate::mesh::build_mesh;
    use crate::polynomial::GlobalPolynomial;
    use crate::quadrature::segment_rule;
    use crate::system::Dissipation;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ramp(n: usize, r: usize) -> Space<f64> {
        let mesh = build_mesh(BackgroundMesh::unit_square(n), Geometry::ramp(0.3, 0.2)).unwrap();
        Space::new(mesh, r)
    }

    fn advection() -> SystemSpec<f64> {
        SystemSpec::advection(Vec2::new(1.0, 0.6), Dissipation::Upwind).unwrap()
    }

    fn acoustics() -> SystemSpec<f64> {
        SystemSpec::acoustics(1.0, Dissipation::Rusanov).unwrap()
    }

    #[test]
    fn single_cell_outflow() {
        let mesh = build_mesh(BackgroundMesh::unit_square(1), Geometry::unbounded()).unwrap();
        let s = Space::new(mesh, 0);
        let sys = SystemSpec::advection(Vec2::new(1.0, 0.0), Dissipation::Upwind).unwrap();
        let mut u = s.zeros(1);
        u.coeffs[0] = 2.5;
        let r = assemble_base(&s, &sys, &u).unwrap();
        // only the east face (length 1) carries outflow
        assert_relative_eq!(r.coeffs[0], 2.5, epsilon = 1e-15);
    }

    #[test]
    fn constant_state_has_no_internal_face_contribution() {
        let s = ramp(4, 1);
        let sys = advection();
        let u = GlobalPolynomial::constant(1, State::scalar(1.7)).to_dg(&s.mesh, &s.basis);
        for (f, face) in s.mesh.faces.iter().enumerate() {
            if face.is_boundary() {
                continue;
            }
            for p in [FluxPart::Central, FluxPart::Dissipation] {
                let t = face_term(&s, &sys, &u, f, p);
                // jump of a continuous constant vanishes: left + right constant-mode terms cancel
                assert_relative_eq!(t.left[0] + t.right.as_ref().unwrap()[0], 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn steady_polynomial_leaves_only_boundary_terms() {
        // u = g(β⊥·x) is transported unchanged: volume and internal faces cancel
        let s = ramp(4, 2);
        let sys = advection();
        let beta = Vec2::new(1.0, 0.6);
        let xi = |x: Vec2<f64>| -beta.y * x.x + beta.x * x.y;
        let g = |t: f64| 0.3 + t - 0.8 * t * t;
        // expand g(−0.6x + y) = 0.3 − 0.6x + y − 0.8(0.36x² − 1.2xy + y²)
        let p = GlobalPolynomial::new(2, Vec2::zero(), 1.0, vec![vec![0.3, -0.6, 1.0, -0.288, 0.96, -0.8]]);
        for x in [Vec2::new(0.2, 0.9), Vec2::new(0.7, 0.4)] {
            assert_relative_eq!(p.value(x)[0], g(xi(x)), epsilon = 1e-14);
        }
        let u = p.to_dg(&s.mesh, &s.basis);
        let r = assemble_base(&s, &sys, &u).unwrap();
        // oracle: Σ_E a_h(u, φ) for φ ≡ 1 on every cell is the outflow integral, computed with
        // an independent Gauss rule
        let total: f64 = (0..r.n_cells).map(|c| r.coeff(c, 0, 0)).sum();
        let mut outflow = 0.0;
        for f in s.mesh.faces.iter().filter(|f| f.is_boundary()) {
            let rule = segment_rule(f.p, f.q, 7);
            outflow += rule.integrate(|x| beta.dot(f.normal).max(0.0) * p.value(x)[0]);
        }
        assert_relative_eq!(total, outflow, epsilon = 1e-13);
        // cell-wise: with β·∇u = 0 and no interior jumps, integration by parts leaves
        // ∫_{∂E ∩ walls} (β·n)^- u φ
        for (cell, c) in s.mesh.cells.iter().enumerate() {
            let mut expect = vec![0.0; s.n_loc()];
            for &fid in &c.face_ids {
                let f = &s.mesh.faces[fid];
                if !f.is_boundary() {
                    continue;
                }
                let rule = segment_rule(f.p, f.q, 7);
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    let mut phi = vec![0.0; s.n_loc()];
                    s.basis.eval(c.center, s.h(), x, &mut phi);
                    for k in 0..s.n_loc() {
                        expect[k] += w * (-beta.dot(f.normal)).max(0.0) * p.value(x)[0] * phi[k];
                    }
                }
            }
            for k in 0..s.n_loc() {
                assert_relative_eq!(r.coeff(cell, k, 0), expect[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn conservation_of_constant_mode() {
        let s = ramp(6, 2);
        let sys = advection();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut u = s.zeros(1);
        for c in u.coeffs.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
        let r = assemble_base(&s, &sys, &u).unwrap();
        let total: f64 = (0..r.n_cells).map(|c| r.coeff(c, 0, 0)).sum();
        let flux = boundary_flux_integral(&s, &sys, &u)[0];
        assert!((total - flux).abs() <= 1e-12 * flux.abs().max(1.0));
    }

    #[test]
    fn central_acoustics_energy_is_boundary_flux() {
        // Σ ⟨a_h^central(u, ·), u⟩ = ½ Σ_walls ∫ ⟨f_n(u), u⟩ + ∫ ⟨central(u, Mu) − f_n(u)/2... ⟩
        let s = ramp(5, 2);
        let sys = SystemSpec::acoustics(1.3, Dissipation::None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut u = s.zeros(3);
        for c in u.coeffs.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
        let r = assemble_base(&s, &sys, &u).unwrap();
        let energy: f64 = r.coeffs.iter().zip(&u.coeffs).map(|(a, b)| a * b).sum();
        // integration by parts: interior faces cancel; each wall leaves
        // ∫ ⟨central(u, Mu), u⟩ − ½⟨f_n(u), u⟩, which vanishes for the mirrored state
        let mut wall = 0.0;
        for (f, fc) in s.mesh.faces.iter().zip(&s.faces) {
            if !f.is_boundary() {
                continue;
            }
            for (&x, &w) in fc.rule.points.iter().zip(&fc.rule.weights) {
                let v = s.evaluate(&u, f.left, x).unwrap();
                let g = sys.ghost_state(&v, f.normal);
                wall += w * (sys.central_flux(&v, &g, f.normal).dot(&v) - 0.5 * sys.flux_normal(&v, f.normal).dot(&v));
            }
        }
        assert!(wall.abs() < 1e-12);
        assert!((energy - wall).abs() <= 1e-10, "{energy} vs {wall}");
    }

    #[test]
    fn parallel_path_is_bit_identical() {
        let mut s = ramp(8, 2);
        let sys = acoustics();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut u = s.zeros(3);
        for c in u.coeffs.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
        let a = assemble_base(&s, &sys, &u).unwrap();
        s.parallel = true;
        let b = assemble_base(&s, &sys, &u).unwrap();
        assert_eq!(a.coeffs, b.coeffs);
    }

    #[test]
    fn mass_inverse_examples() {
        let s = ramp(4, 0);
        let z = apply_mass_inverse(&s, s.zeros(1)).unwrap();
        assert!(z.coeffs.iter().all(|&v| v == 0.0));
        let mut r = s.zeros(1);
        for (i, v) in r.coeffs.iter_mut().enumerate() {
            *v = i as f64 + 1.0;
        }
        let d = apply_mass_inverse(&s, r.clone()).unwrap();
        for (cell, c) in s.mesh.cells.iter().enumerate() {
            assert_relative_eq!(d.coeffs[cell], r.coeffs[cell] / c.area, max_relative = 1e-13);
        }
    }

    #[test]
    fn mismatched_function_is_rejected() {
        let s = ramp(2, 1);
        assert!(matches!(assemble_base(&s, &acoustics(), &s.zeros(1)), Err(Error::Mismatch(_))));
        let other = ramp(3, 1);
        assert!(matches!(assemble_base(&s, &advection(), &other.zeros(1)), Err(Error::Mismatch(_))));
    }
}
