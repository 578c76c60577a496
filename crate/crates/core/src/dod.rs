//! Domain-of-dependence stabilization `J_h = Σ_{E ∈ I} J^E_h` on small cut cells.

use rayon::prelude::*;

use crate::assembly::{check_system, face_term, FaceTerm, FluxPart, Residual};
use crate::basis::DgFunction;
use crate::error::{Error, Result};
use crate::extension::{unified_extension, Contribution, Extended, Extension, Field, Source, TestSink};
use crate::mesh::{advection_inflow, classify_small_cells, Inflow, SmallCellSet};
use crate::quadrature::QuadratureRule;
use crate::scalar::Real;
use crate::space::Space;
use crate::state::State;
use crate::system::{Dissipation, SystemKind, SystemSpec};

/// `2 / (K (K − 1))`.
pub fn pair_weight<T: Real>(k: usize) -> T {
    T::two() / T::from_usize_lossy(k * (k - 1))
}

/// Coefficient of the face functional `A_k` in `p_ab = Σ_k c_k A_k`.
pub fn surface_coefficient<T: Real>(n_faces: usize, a: usize, b: usize, k: usize) -> T {
    let kk = T::from_usize_lossy(n_faces);
    let mut c = T::one() / (kk * (kk - T::one()));
    if k == b {
        c += T::one() / kk;
    }
    if k == a {
        c -= T::one() / kk;
    }
    c
}

/// Surface and volume propagation forms of one stabilized cell, evaluated on arbitrary fields.
///
/// With `A_k(μ, ν, w) = ∫_{γ_k} ⟨½(f_n(μ) + f_n(ν)), w⟩` (outward `n`) and `S = Σ_k A_k`:
/// `p_ij = A_j/K − A_i/K + S/(K(K−1))`,
/// `p_V = c_K ∫_E ½(f(μ) + f(ν))·∇w` and `p_V* = c_K ∫_E ⟨A1 ∂x ū + A2 ∂y ū, w⟩`,
/// where `c_K = 2/(K(K−1))` and `ū = ½(μ + ν)`.
pub struct PropagationForms<'a, T> {
    pub space: &'a Space<T>,
    pub system: &'a SystemSpec<T>,
    pub cell: usize,
}

impl<'a, T: Real> PropagationForms<'a, T> {
    pub fn new(space: &'a Space<T>, system: &'a SystemSpec<T>, cell: usize) -> Result<Self> {
        let k = space.mesh.cell(cell)?.face_ids.len();
        if k < 2 {
            return Err(Error::Topology(format!("cell {cell} has {k} faces")));
        }
        Ok(Self { space, system, cell })
    }

    pub fn n_faces(&self) -> usize {
        self.space.mesh.cells[self.cell].face_ids.len()
    }

    /// `A_k(μ, ν, w)`.
    pub fn face_integral(&self, k: usize, mu: &impl Field<T>, nu: &impl Field<T>, w: &impl Field<T>) -> T {
        let fid = self.space.mesh.cells[self.cell].face_ids[k];
        let n = self.space.mesh.outward_normal(self.cell, fid);
        let rule = &self.space.faces[fid].rule;
        let mut s = T::zero();
        for (&x, &wt) in rule.points.iter().zip(&rule.weights) {
            s += wt * self.system.central_flux(&mu.value(x), &nu.value(x), n).dot(&w.value(x));
        }
        s
    }

    pub fn face_integrals(&self, mu: &impl Field<T>, nu: &impl Field<T>, w: &impl Field<T>) -> Vec<T> {
        (0..self.n_faces()).map(|k| self.face_integral(k, mu, nu, w)).collect()
    }

    /// `p_ij(μ, ν, w)`.
    pub fn surface(&self, i: usize, j: usize, mu: &impl Field<T>, nu: &impl Field<T>, w: &impl Field<T>) -> Result<T> {
        let k = self.n_faces();
        if i == j || i >= k || j >= k {
            return Err(Error::Config(format!("surface propagation form needs distinct faces, got ({i}, {j}) of {k}")));
        }
        let a = self.face_integrals(mu, nu, w);
        Ok(a.iter().enumerate().map(|(f, &v)| surface_coefficient::<T>(k, i, j, f) * v).sum())
    }

    /// `(p_V, p_V*)`.
    pub fn volume(&self, mu: &impl Field<T>, nu: &impl Field<T>, w: &impl Field<T>) -> (T, T) {
        let ck = pair_weight::<T>(self.n_faces());
        let rule: &QuadratureRule<T> = &self.space.cells[self.cell].rule;
        let half = T::half();
        let (mut pv, mut pvs) = (T::zero(), T::zero());
        for (&x, &wt) in rule.points.iter().zip(&rule.weights) {
            let (a, ax, ay) = mu.value_grad(x);
            let (b, bx, by) = nu.value_grad(x);
            let (wv, wx, wy) = w.value_grad(x);
            let fx = (self.system.flux_x(&a) + self.system.flux_x(&b)) * half;
            let fy = (self.system.flux_y(&a) + self.system.flux_y(&b)) * half;
            pv += wt * (fx.dot(&wx) + fy.dot(&wy));
            let div = (self.system.flux_x(&(ax + bx)) + self.system.flux_y(&(ay + by))) * half;
            pvs += wt * div.dot(&wv);
        }
        (ck * pv, ck * pvs)
    }
}

/// Rule for the per-cell strength `η_E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaPolicy<T> {
    /// `η_E = 1 − min(1, α_E/α0)`.
    Linear,
    /// The same `η` on every stabilized cell.
    Constant(T),
}

/// `η_E` for every cell of `small`, in the same order.
pub fn eta_values<T: Real>(space: &Space<T>, small: &SmallCellSet<T>, policy: EtaPolicy<T>) -> Result<Vec<T>> {
    match policy {
        EtaPolicy::Linear => Ok(small
            .cells
            .iter()
            .map(|&c| T::one() - (space.mesh.cells[c].volume_fraction / small.threshold).min(T::one()))
            .collect()),
        EtaPolicy::Constant(eta) => {
            if !(eta >= T::zero() && eta <= T::one()) {
                return Err(Error::Config(format!("eta must lie in [0, 1], got {eta}")));
            }
            Ok(vec![eta; small.len()])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StabilizationKind {
    /// One upstream neighbour per stabilized cell.
    Advection(Vec<Inflow>),
    /// Pairwise face redistribution for the acoustic system.
    Wave,
}

/// Stabilized cells, their strengths and the system-specific data.
#[derive(Debug, Clone, PartialEq)]
pub struct Stabilization<T> {
    pub small: SmallCellSet<T>,
    pub eta: Vec<T>,
    pub kind: StabilizationKind,
}

impl<T: Real> Stabilization<T> {
    /// Selects cells with `α_E < alpha0` and validates them for `sys`.
    pub fn new(space: &Space<T>, sys: &SystemSpec<T>, alpha0: T, policy: EtaPolicy<T>) -> Result<Self> {
        let small = classify_small_cells(&space.mesh, alpha0)?;
        Self::with_cells(space, sys, small, policy)
    }

    pub fn with_cells(space: &Space<T>, sys: &SystemSpec<T>, small: SmallCellSet<T>, policy: EtaPolicy<T>) -> Result<Self> {
        let eta = eta_values(space, &small, policy)?;
        let kind = match sys.kind {
            SystemKind::Advection { beta } => StabilizationKind::Advection(advection_inflow(&space.mesh, &small, beta)?),
            SystemKind::Acoustics { .. } => {
                for &cell in &small.cells {
                    let faces = &space.mesh.cells[cell].face_ids;
                    for i in 0..faces.len() {
                        for j in i + 1..faces.len() {
                            unified_extension(space, cell, i, j, Source::Cell)?;
                        }
                    }
                }
                StabilizationKind::Wave
            }
        };
        Ok(Self { small, eta, kind })
    }

    /// No stabilized cells.
    pub fn none(sys: &SystemSpec<T>) -> Self {
        let kind = match sys.kind {
            SystemKind::Advection { .. } => StabilizationKind::Advection(Vec::new()),
            SystemKind::Acoustics { .. } => StabilizationKind::Wave,
        };
        Self { small: SmallCellSet::empty(T::one()), eta: Vec::new(), kind }
    }

    pub fn len(&self) -> usize {
        self.small.len()
    }

    pub fn is_empty(&self) -> bool {
        self.small.is_empty()
    }

    fn check_kind(&self, sys: &SystemSpec<T>) -> Result<()> {
        match (&self.kind, sys.kind) {
            (StabilizationKind::Advection(_), SystemKind::Advection { .. }) | (StabilizationKind::Wave, SystemKind::Acoustics { .. }) => Ok(()),
            _ => Err(Error::Mismatch("stabilization was built for a different system".into())),
        }
    }

    /// `J^E(u, φ)` for the `index`-th stabilized cell and every test mode it touches.
    pub fn cell_contribution(&self, space: &Space<T>, sys: &SystemSpec<T>, u: &DgFunction<T>, index: usize) -> Result<Contribution<T>> {
        check_system(space, sys, u)?;
        self.check_kind(sys)?;
        let cell = *self
            .small
            .cells
            .get(index)
            .ok_or_else(|| Error::Config(format!("no stabilized cell with index {index}")))?;
        let eta = self.eta[index];
        let mut sink = TestSink::new(space, u.m);
        if eta == T::zero() {
            return Ok(sink.finish());
        }
        match &self.kind {
            StabilizationKind::Advection(inflow) => advection_cell(space, sys, u, &inflow[index], eta, &mut sink),
            StabilizationKind::Wave => {
                wave_cell(space, sys, u, cell, eta, &mut sink)?;
                let mut c = sink.finish();
                for t in subtraction_terms(space, sys, u, cell, eta) {
                    add_face_term(&mut c, space, &t);
                }
                return Ok(c);
            }
        }
        Ok(sink.finish())
    }

    /// Adds `J_h(u, φ)` into `r`, cell by cell in ascending order.
    pub fn assemble_into(&self, space: &Space<T>, sys: &SystemSpec<T>, u: &DgFunction<T>, r: &mut Residual<T>) -> Result<()> {
        check_system(space, sys, u)?;
        if !r.same_shape(u) {
            return Err(Error::Mismatch("residual and state differ in shape".into()));
        }
        if space.parallel {
            let parts: Vec<Contribution<T>> = (0..self.len())
                .into_par_iter()
                .map(|k| self.cell_contribution(space, sys, u, k))
                .collect::<Result<_>>()?;
            for c in &parts {
                c.add_into(r);
            }
        } else {
            for k in 0..self.len() {
                self.cell_contribution(space, sys, u, k)?.add_into(r);
            }
        }
        Ok(())
    }

    /// `J_h(u, φ)` alone.
    pub fn assemble(&self, space: &Space<T>, sys: &SystemSpec<T>, u: &DgFunction<T>) -> Result<Residual<T>> {
        let mut r = space.zeros(u.m);
        self.assemble_into(space, sys, u, &mut r)?;
        Ok(r)
    }
}

fn add_face_term<T: Real>(c: &mut Contribution<T>, space: &Space<T>, t: &FaceTerm<T>) {
    let f = &space.mesh.faces[t.face];
    for (y, &x) in c.block_mut(f.left).iter_mut().zip(&t.left) {
        *y += x;
    }
    if let (Some(rc), Some(rb)) = (f.right, &t.right) {
        for (y, &x) in c.block_mut(rc).iter_mut().zip(rb) {
            *y += x;
        }
    }
}

/// The subtraction lines of the wave stabilization: `−η` times the base central and
/// dissipative face kernels on every face of `cell`, face by face.
pub fn subtraction_terms<T: Real>(space: &Space<T>, sys: &SystemSpec<T>, u: &DgFunction<T>, cell: usize, eta: T) -> Vec<FaceTerm<T>> {
    let mut parts = vec![FluxPart::Central];
    if sys.dissipation != Dissipation::None {
        parts.push(FluxPart::Dissipation);
    }
    let scale = |v: &[T]| v.iter().map(|&x| -(eta * x)).collect::<Vec<T>>();
    let mut out = Vec::new();
    for &fid in &space.mesh.cells[cell].face_ids {
        for &p in &parts {
            let t = face_term(space, sys, u, fid, p);
            out.push(FaceTerm { face: fid, left: scale(&t.left), right: t.right.as_deref().map(scale) });
        }
    }
    out
}

fn advection_cell<T: Real>(space: &Space<T>, sys: &SystemSpec<T>, u: &DgFunction<T>, inflow: &Inflow, eta: T, sink: &mut TestSink<'_, T>) {
    let beta = match sys.kind {
        SystemKind::Advection { beta } => beta,
        SystemKind::Acoustics { .. } => unreachable!("checked by check_kind"),
    };
    let cell = inflow.cell;
    let own = Extension::Plain { cell };
    let up = Extension::Plain { cell: inflow.neighbor };
    let ue = Extended { space, u, ext: own };
    let un = Extended { space, u, ext: up };
    // η ∫_{∂E} (β·n)^+ (L_in u − L_E u) ⟦w⟧ with n outward, ⟦w⟧ = w_E − w_outside
    for &fid in &space.mesh.cells[cell].face_ids {
        let n = space.mesh.outward_normal(cell, fid);
        let bn = beta.dot(n).max(T::zero());
        if bn == T::zero() {
            continue;
        }
        let outside = space.mesh.neighbor(cell, fid);
        let rule = &space.faces[fid].rule;
        for (&x, &w) in rule.points.iter().zip(&rule.weights) {
            let g = (un.value(x) - ue.value(x)) * (eta * w * bn);
            sink.add_value(own, x, g);
            if let Some(o) = outside {
                sink.add_value(Extension::Plain { cell: o }, x, -g);
            }
        }
    }
    // η ∫_E (L_in u − u) β·∇(L_in w − w)
    let rule = &space.cells[cell].rule;
    for (&x, &w) in rule.points.iter().zip(&rule.weights) {
        let d = (un.value(x) - ue.value(x)) * (eta * w);
        sink.add_grad(up, x, d * beta.x, d * beta.y);
        sink.add_grad(own, x, -(d * beta.x), -(d * beta.y));
    }
}

fn wave_cell<T: Real>(space: &Space<T>, sys: &SystemSpec<T>, u: &DgFunction<T>, cell: usize, eta: T, sink: &mut TestSink<'_, T>) -> Result<()> {
    let c = &space.mesh.cells[cell];
    let k = c.face_ids.len();
    let ck = pair_weight::<T>(k);
    let half = T::half();
    let own = Extension::Plain { cell };
    let ue = Extended { space, u, ext: own };
    let sixth = eta / T::lit(6.0);
    for i in 0..k {
        for j in i + 1..k {
            let ei = unified_extension(space, cell, i, j, Source::First)?;
            let ej = unified_extension(space, cell, i, j, Source::Second)?;
            let ui = Extended { space, u, ext: ei };
            let uj = Extended { space, u, ext: ej };
            let ni = space.mesh.neighbor(cell, c.face_ids[i]);
            let nj = space.mesh.neighbor(cell, c.face_ids[j]);
            // J^0_ij: p_ij(Ui, Uj, L_E w − [γ_j internal] L_{E_j} w) + p_ji(Ui, Uj, L_E w − [γ_i internal] L_{E_i} w)
            for (f, &fid) in c.face_ids.iter().enumerate() {
                let n = space.mesh.outward_normal(cell, fid);
                let cij = surface_coefficient::<T>(k, i, j, f);
                let cji = surface_coefficient::<T>(k, j, i, f);
                let rule = &space.faces[fid].rule;
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    let (a, b) = (ui.value(x), uj.value(x));
                    let flux = sys.central_flux(&a, &b, n) * (eta * w);
                    sink.add_value(own, x, flux * (cij + cji));
                    if let Some(nb) = nj {
                        sink.add_value(Extension::Plain { cell: nb }, x, -(flux * cij));
                    }
                    if let Some(nb) = ni {
                        sink.add_value(Extension::Plain { cell: nb }, x, -(flux * cji));
                    }
                    if sys.dissipation != Dissipation::None {
                        let s = (sys.dissipation(&a, &b, n) - sys.dissipation(&b, &a, n)) * (sixth * w);
                        sink.add_value(ei, x, s);
                        sink.add_value(ej, x, -s);
                    }
                }
            }
            // J^1_ij
            let rule = &space.cells[cell].rule;
            let tests = [(own, -T::one()), (ei, half), (ej, half)];
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                let ubar = (ui.value(x) + uj.value(x)) * half;
                let mut zsum = State::zero();
                for &(ext, omega) in &tests {
                    let z = if ext == own { ue.value(x) } else { Extended { space, u, ext }.value(x) };
                    zsum += z * omega;
                    let d = (ubar - z) * (eta * omega * ck * w);
                    sink.add_grad(ext, x, sys.flux_x(&d), sys.flux_y(&d));
                }
                let g = zsum * (eta * ck * w * half);
                let (gx, gy) = (sys.flux_x(&g), sys.flux_y(&g));
                sink.add_grad(ei, x, gx, gy);
                sink.add_grad(ej, x, gx, gy);
            }
        }
    }
    Ok(())
}

/// Extra outflow through walls carried by the advection stabilization:
/// `Σ_E η_E ∫_{∂E ∩ walls} (β·n)^+ (L_in u − u_E)`.
pub fn stabilized_boundary_outflow<T: Real>(space: &Space<T>, sys: &SystemSpec<T>, stab: &Stabilization<T>, u: &DgFunction<T>) -> T {
    let (StabilizationKind::Advection(inflow), SystemKind::Advection { beta }) = (&stab.kind, sys.kind) else {
        return T::zero();
    };
    let mut total = T::zero();
    for (inf, &eta) in inflow.iter().zip(&stab.eta) {
        let ue = Extended { space, u, ext: Extension::Plain { cell: inf.cell } };
        let un = Extended { space, u, ext: Extension::Plain { cell: inf.neighbor } };
        for &fid in &space.mesh.cells[inf.cell].face_ids {
            if !space.mesh.faces[fid].is_boundary() {
                continue;
            }
            let bn = beta.dot(space.mesh.outward_normal(inf.cell, fid)).max(T::zero());
            let rule = &space.faces[fid].rule;
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                total += eta * w * bn * (un.value(x)[0] - ue.value(x)[0]);
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BackgroundMesh, Geometry, Vec2};
    use crate::mesh::build_mesh;
    use crate::polynomial::GlobalPolynomial;
    use crate::quadrature::segment_rule;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sliver_space(r: usize) -> Space<f64> {
        // cells along the ramp with the kept part a small triangle in the top-left corner
        let mesh = build_mesh(BackgroundMesh::unit_square(8), Geometry::ramp(0.27, 0.6)).unwrap();
        Space::new(mesh, r)
    }

    fn advection() -> SystemSpec<f64> {
        SystemSpec::advection(Vec2::new(1.0, 0.6), Dissipation::Upwind).unwrap()
    }

    fn acoustics() -> SystemSpec<f64> {
        SystemSpec::acoustics(1.0, Dissipation::Rusanov).unwrap()
    }

    fn random_function(s: &Space<f64>, m: usize, seed: u64) -> DgFunction<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = s.zeros(m);
        for c in u.coeffs.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
        u
    }

    #[test]
    fn closed_form_coefficients() {
        let a = [1.0, 2.0, 3.0];
        let p = |i: usize, j: usize| -> f64 { (0..3).map(|k| surface_coefficient::<f64>(3, i, j, k) * a[k]).sum() };
        assert_relative_eq!(p(0, 1), 4.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(p(1, 0), 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(p(0, 1) + p(1, 0), pair_weight::<f64>(3) * 6.0, epsilon = 1e-15);
        assert_relative_eq!(p(0, 1) + p(2, 1), a[1], epsilon = 1e-15);
    }

    #[test]
    fn surface_form_rejects_equal_faces() {
        let s = sliver_space(1);
        let sys = acoustics();
        let pf = PropagationForms::new(&s, &sys, 0).unwrap();
        let z = GlobalPolynomial::constant(3, State::acoustic(1.0, 0.0, 0.0));
        assert!(matches!(pf.surface(1, 1, &z, &z, &z), Err(Error::Config(_))));
    }

    #[test]
    fn volume_form_examples() {
        let s = sliver_space(2);
        let sys = acoustics();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cell = s.mesh.cells.iter().position(|c| !c.uncut).unwrap();
        let pf = PropagationForms::new(&s, &sys, cell).unwrap();
        let c = s.mesh.cells[cell].center;
        let u = GlobalPolynomial::random(&mut rng, 2, 3, &[0, 1, 2], c, 0.125);
        let w = GlobalPolynomial::constant(3, State::acoustic(0.3, -1.0, 2.0));
        assert_eq!(pf.volume(&u, &u, &w).0, 0.0);
        // divergence identity: p_V + p_V* = c_K Σ_k A_k
        let v = GlobalPolynomial::random(&mut rng, 2, 3, &[0, 1, 2], c, 0.125);
        let w = GlobalPolynomial::random(&mut rng, 2, 3, &[0, 1, 2], c, 0.125);
        let (pv, pvs) = pf.volume(&u, &v, &w);
        let a = pf.face_integrals(&u, &v, &w);
        let rhs = pair_weight::<f64>(pf.n_faces()) * a.iter().sum::<f64>();
        let scale = pv.abs() + pvs.abs() + a.iter().map(|x| x.abs()).sum::<f64>();
        assert!((pv + pvs - rhs).abs() <= 1e-13 * scale);
    }

    #[test]
    fn face_consistency_against_independent_rule() {
        let s = sliver_space(2);
        let sys = acoustics();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for cell in s.mesh.cells.iter().filter(|c| !c.uncut).map(|c| c.id).take(4) {
            let pf = PropagationForms::new(&s, &sys, cell).unwrap();
            let c = s.mesh.cells[cell].center;
            let u = GlobalPolynomial::random(&mut rng, 2, 3, &[0, 1, 2], c, 0.125);
            let v = GlobalPolynomial::random(&mut rng, 2, 3, &[0, 1, 2], c, 0.125);
            let w = GlobalPolynomial::random(&mut rng, 2, 3, &[0, 1, 2], c, 0.125);
            let k = pf.n_faces();
            for j in 0..k {
                let lhs: f64 = (0..k).filter(|&i| i != j).map(|i| pf.surface(i, j, &u, &v, &w).unwrap()).sum();
                let f = &s.mesh.faces[s.mesh.cells[cell].face_ids[j]];
                let n = s.mesh.outward_normal(cell, f.id);
                let rule = segment_rule(f.p, f.q, 6);
                let rhs = rule.integrate(|x| {
                    let (a, b, t) = (u.value(x), v.value(x), w.value(x));
                    // f_n(p, v) = c (v·n, n1 p, n2 p)
                    let fa = [a[1] * n.x + a[2] * n.y, n.x * a[0], n.y * a[0]];
                    let fb = [b[1] * n.x + b[2] * n.y, n.x * b[0], n.y * b[0]];
                    (0..3).map(|q| 0.5 * (fa[q] + fb[q]) * t[q]).sum()
                });
                let scale: f64 = pf.face_integrals(&u, &v, &w).iter().map(|x| x.abs()).sum();
                assert!((lhs - rhs).abs() <= 1e-13 * scale, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn eta_policy() {
        let s = sliver_space(0);
        let small = classify_small_cells(&s.mesh, 0.3).unwrap();
        assert!(!small.is_empty());
        let eta = eta_values(&s, &small, EtaPolicy::Linear).unwrap();
        for (&c, &e) in small.cells.iter().zip(&eta) {
            let a = s.mesh.cells[c].volume_fraction;
            assert_relative_eq!(e, 1.0 - a / 0.3, epsilon = 1e-15);
            assert!((0.0..=1.0).contains(&e));
        }
        let half = SmallCellSet { cells: small.cells.clone(), threshold: 2.0 * s.mesh.cells[small.cells[0]].volume_fraction };
        assert_relative_eq!(eta_values(&s, &half, EtaPolicy::Linear).unwrap()[0], 0.5, epsilon = 1e-15);
        assert!(eta_values(&s, &small, EtaPolicy::Constant(1.5)).is_err());
    }

    #[test]
    fn zero_eta_gives_zero_residual() {
        for (sys, m) in [(advection(), 1), (acoustics(), 3)] {
            let s = sliver_space(2);
            let stab = Stabilization::new(&s, &sys, 0.3, EtaPolicy::Constant(0.0)).unwrap();
            assert!(!stab.is_empty());
            let u = random_function(&s, m, 7);
            let r = stab.assemble(&s, &sys, &u).unwrap();
            assert!(r.coeffs.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn global_polynomials_are_not_stabilized() {
        let s = sliver_space(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (sys, m, active) in [(advection(), 1, vec![0]), (acoustics(), 3, vec![0])] {
            let stab = Stabilization::new(&s, &sys, 0.3, EtaPolicy::Linear).unwrap();
            let p = GlobalPolynomial::random(&mut rng, 2, m, &active, Vec2::new(0.5, 0.5), 1.0);
            let u = p.to_dg(&s.mesh, &s.basis);
            let r = stab.assemble(&s, &sys, &u).unwrap();
            assert!(r.max_abs() < 1e-13, "{}", r.max_abs());
            // a generic state is stabilized
            let r = stab.assemble(&s, &sys, &random_function(&s, m, 1)).unwrap();
            assert!(r.max_abs() > 1e-6);
        }
    }

    #[test]
    fn advection_r0_matches_hand_quadrature() {
        let s = sliver_space(0);
        let sys = advection();
        let beta = Vec2::new(1.0, 0.6);
        let stab = Stabilization::new(&s, &sys, 0.3, EtaPolicy::Linear).unwrap();
        let u = random_function(&s, 1, 11);
        let StabilizationKind::Advection(inflow) = &stab.kind else { panic!() };
        let inf = inflow[0];
        let c = stab.cell_contribution(&s, &sys, &u, 0).unwrap();
        let eta = stab.eta[0];
        let d = u.coeffs[inf.neighbor] - u.coeffs[inf.cell];
        // piecewise constants: volume term vanishes, faces carry (β·n)^+ · length
        let mut own = 0.0;
        let mut expect = std::collections::BTreeMap::new();
        for &fid in &s.mesh.cells[inf.cell].face_ids {
            let f = &s.mesh.faces[fid];
            let bn = beta.dot(s.mesh.outward_normal(inf.cell, fid)).max(0.0);
            let v = eta * bn * f.length * d;
            own += v;
            if let Some(o) = s.mesh.neighbor(inf.cell, fid) {
                *expect.entry(o).or_insert(0.0) -= v;
            }
        }
        assert_relative_eq!(c.block(inf.cell).unwrap()[0], own, max_relative = 1e-12);
        for (o, v) in expect {
            assert_relative_eq!(c.block(o).unwrap()[0], v, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn subtraction_terms_negate_base_kernels() {
        let s = sliver_space(2);
        let sys = acoustics();
        let stab = Stabilization::new(&s, &sys, 0.3, EtaPolicy::Constant(1.0)).unwrap();
        let u = random_function(&s, 3, 4);
        for &cell in &stab.small.cells {
            let terms = subtraction_terms(&s, &sys, &u, cell, 1.0);
            assert_eq!(terms.len(), 2 * s.mesh.cells[cell].face_ids.len());
            for (t, (fid, p)) in terms.iter().zip(
                s.mesh.cells[cell].face_ids.iter().flat_map(|&f| [(f, FluxPart::Central), (f, FluxPart::Dissipation)]),
            ) {
                let base = face_term(&s, &sys, &u, fid, p);
                assert!(t.left.iter().zip(&base.left).all(|(a, b)| a.to_bits() == (-b).to_bits()));
            }
        }
    }

    #[test]
    fn parallel_assembly_is_bit_identical() {
        let mut s = sliver_space(2);
        let sys = acoustics();
        let stab = Stabilization::new(&s, &sys, 0.3, EtaPolicy::Linear).unwrap();
        let u = random_function(&s, 3, 5);
        let a = stab.assemble(&s, &sys, &u).unwrap();
        s.parallel = true;
        let b = stab.assemble(&s, &sys, &u).unwrap();
        assert_eq!(a.coeffs, b.coeffs);
    }

    #[test]
    fn system_mismatch_is_rejected() {
        let s = sliver_space(1);
        let stab = Stabilization::new(&s, &advection(), 0.3, EtaPolicy::Linear).unwrap();
        assert!(matches!(stab.assemble(&s, &acoustics(), &s.zeros(3)), Err(Error::Mismatch(_))));
    }
}
