//! Experiment drivers behind the command line: consistency, propagation-form axioms,
//! convergence, time evolution, stability and mesh inspection.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Equation, RunConfig};
use crate::dod::{pair_weight, EtaPolicy, PropagationForms, Stabilization};
use crate::error::{Error, Result};
use crate::extension::{Combination, Field};
use crate::geometry::{BackgroundMesh, Vec2};
use crate::mesh::{build_mesh, classify_small_cells};
use crate::polynomial::GlobalPolynomial;
use crate::quadrature::{polygon_rule, segment_rule};
use crate::registry::{default_initial, lookup, NamedField};
use crate::space::Space;
use crate::system::SystemSpec;
use crate::timestep::{evolve, Scheme, TimeControls, Trajectory};

/// Largest admissible normalized stabilization residual for polynomial states.
pub const CONSISTENCY_TOL: f64 = 1e-10;
/// Largest admissible relative residual of a propagation-form identity.
pub const AXIOM_TOL: f64 = 1e-12;
/// Largest admissible relative L² growth in the stability run.
pub const STABILITY_GROWTH_TOL: f64 = 1e-3;

/// Intercept `y0` of a ramp `y ≥ y0 + slope·x` that leaves a triangle of volume fraction
/// `min_alpha` in the top-left corner of a background cell three eighths across the box.
pub fn ramp_intercept(bg: &BackgroundMesh<f64>, slope: f64, min_alpha: f64) -> Result<f64> {
    if !(slope > 0.0 && slope <= 1.0) {
        return Err(Error::Config(format!("geometry.ramp slope must lie in (0, 1], got {slope}")));
    }
    if !(min_alpha > 0.0 && min_alpha < 1.0) {
        return Err(Error::Config(format!("geometry.ramp min_alpha must lie in (0, 1), got {min_alpha}")));
    }
    let h = bg.h();
    let k = (3 * bg.nx) / 8;
    let xk = bg.x0 + k as f64 * h;
    let base = bg.y0 + 0.3 * (bg.y1 - bg.y0);
    let l = ((base + slope * (xk - bg.x0) - bg.y0) / h).round();
    if l < 1.0 || l >= bg.ny as f64 {
        return Err(Error::Config("geometry.ramp does not fit in the box".into()));
    }
    let t = h * (2.0 * min_alpha / slope).sqrt();
    Ok(bg.y0 + l * h - slope * (xk + t))
}

/// Discrete space of `cfg` on an `nx × ny` background mesh.
pub fn build_space(cfg: &RunConfig, nx: usize, ny: usize, parallel: bool) -> Result<Space<f64>> {
    let bg = cfg.background_with(nx, ny)?;
    let geo = cfg.geometry_for(&bg)?;
    let mut space = Space::new(build_mesh(bg, geo)?, cfg.degree);
    space.parallel = parallel;
    Ok(space)
}

fn stabilization_for(cfg: &RunConfig, space: &Space<f64>, sys: &SystemSpec<f64>) -> Result<Stabilization<f64>> {
    if cfg.stabilization {
        Stabilization::new(space, sys, cfg.alpha0, cfg.eta)
    } else {
        Ok(Stabilization::none(sys))
    }
}

fn initial_field(cfg: &RunConfig) -> Result<NamedField> {
    lookup(cfg.initial.as_deref().unwrap_or(default_initial(cfg.equation)), cfg)
}

/// `max_{x ∈ quadrature(E)} |φ_k(x)|` for every mode of `cell`.
fn mode_sup(space: &Space<f64>, cell: usize) -> Vec<f64> {
    let n = space.n_loc();
    let cc = &space.cells[cell];
    (0..n)
        .map(|k| (0..cc.rule.len()).fold(0.0f64, |m, q| m.max(cc.phi[q * n + k].abs())))
        .collect()
}

/// `17` significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub seed: u64,
    pub samples: usize,
    pub stabilized_cells: usize,
    pub min_alpha: f64,
    /// `max |J^E(u, φ)| / (‖u‖∞ h ‖φ‖)` over samples, stabilized cells and touched modes.
    pub max_residual: f64,
    /// The same with `η ≡ 0`.
    pub control_residual: f64,
    pub pass: bool,
}

impl ConsistencyReport {
    pub fn render(&self) -> String {
        format!(
            "# seed = {}\ncommand = consistency\nsamples = {}\nstabilized_cells = {}\nmin_alpha = {}\nmax_residual = {}\ncontrol_residual = {}\ntolerance = {}\nresult = {}\n",
            self.seed,
            self.samples,
            self.stabilized_cells,
            fmt17(self.min_alpha),
            fmt17(self.max_residual),
            fmt17(self.control_residual),
            CONSISTENCY_TOL,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

/// Random global polynomial of degree `r` admissible for `cfg`: scalar for advection,
/// `(p, 0, 0)` for acoustics.
pub fn admissible_polynomial<R: Rng>(rng: &mut R, cfg: &RunConfig, degree: usize) -> GlobalPolynomial<f64> {
    let [x0, y0, x1, y1] = cfg.bbox;
    let origin = Vec2::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let scale = 0.5 * (x1 - x0).max(y1 - y0);
    GlobalPolynomial::random(rng, degree, cfg.equation.components(), &[0], origin, scale)
}

/// Stabilization residual of projected global polynomials.
pub fn consistency(cfg: &RunConfig, parallel: bool) -> Result<ConsistencyReport> {
    let space = build_space(cfg, cfg.nx, cfg.ny, parallel)?;
    let sys = cfg.system()?;
    let stab = Stabilization::new(&space, &sys, cfg.alpha0, cfg.eta)?;
    let control = Stabilization::new(&space, &sys, cfg.alpha0, EtaPolicy::Constant(0.0))?;
    let sups: Vec<Vec<f64>> = (0..space.mesh.n_cells()).map(|c| mode_sup(&space, c)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let h = space.h();
    let m = sys.m;
    let (mut worst, mut control_worst) = (0.0f64, 0.0f64);
    for _ in 0..cfg.samples {
        let p = admissible_polynomial(&mut rng, cfg, cfg.degree);
        let u = p.to_dg(&space.mesh, &space.basis);
        let norm = space.sup_norm(&u).max(f64::MIN_POSITIVE);
        for k in 0..stab.len() {
            let c = stab.cell_contribution(&space, &sys, &u, k)?;
            for (cell, block) in &c.entries {
                for (i, v) in block.iter().enumerate() {
                    let phi = sups[*cell][i / m].max(f64::MIN_POSITIVE);
                    worst = worst.max(v.abs() / (norm * h * phi));
                }
            }
        }
        control_worst = control_worst.max(control.assemble(&space, &sys, &u)?.max_abs());
    }
    Ok(ConsistencyReport {
        seed: cfg.seed,
        samples: cfg.samples,
        stabilized_cells: stab.len(),
        min_alpha: space.mesh.alpha_range().0,
        max_residual: worst,
        control_residual: control_worst,
        pass: worst <= CONSISTENCY_TOL && control_worst == 0.0,
    })
}

/// Worst relative residual of each propagation-form identity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxiomResiduals {
    pub symmetry: f64,
    pub linearity: f64,
    pub balance: f64,
    pub face_consistency: f64,
    pub volume_consistency: f64,
}

impl AxiomResiduals {
    pub fn max(self, o: Self) -> Self {
        Self {
            symmetry: self.symmetry.max(o.symmetry),
            linearity: self.linearity.max(o.linearity),
            balance: self.balance.max(o.balance),
            face_consistency: self.face_consistency.max(o.face_consistency),
            volume_consistency: self.volume_consistency.max(o.volume_consistency),
        }
    }

    pub fn worst(&self) -> f64 {
        [self.symmetry, self.linearity, self.balance, self.face_consistency, self.volume_consistency]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn apply(a: &[[f64; 3]; 3], u: &[f64; 3], m: usize) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..m {
        out[i] = (0..m).map(|j| a[i][j] * u[j]).sum();
    }
    out
}

fn comps(s: crate::state::State<f64>) -> [f64; 3] {
    [s[0], s[1], s[2]]
}

/// `∫_{γ_j} ½⟨f_n(μ) + f_n(ν), w⟩` with a finer segment rule and explicit flux matrices.
fn face_flux_reference(space: &Space<f64>, sys: &SystemSpec<f64>, cell: usize, j: usize, mu: &impl Field<f64>, nu: &impl Field<f64>, w: &impl Field<f64>) -> f64 {
    let fid = space.mesh.cells[cell].face_ids[j];
    let f = &space.mesh.faces[fid];
    let n = space.mesh.outward_normal(cell, fid);
    let m = sys.m;
    let mut an = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            an[r][c] = n.x * sys.a1[r][c] + n.y * sys.a2[r][c];
        }
    }
    segment_rule(f.p, f.q, space.basis.degree + 3).integrate(|x| {
        let a = apply(&an, &comps(mu.value(x)), m);
        let b = apply(&an, &comps(nu.value(x)), m);
        let t = comps(w.value(x));
        (0..m).map(|c| 0.5 * (a[c] + b[c]) * t[c]).sum()
    })
}

/// `(∫_E f(u)·∇w, ∫_E |f(u)·∇w|)` with a higher-order polygon rule and explicit matrices.
fn volume_flux_reference(space: &Space<f64>, sys: &SystemSpec<f64>, cell: usize, u: &impl Field<f64>, w: &impl Field<f64>) -> (f64, f64) {
    let rule = polygon_rule(&space.mesh.cells[cell].polygon, 2 * space.basis.degree + 3);
    let m = sys.m;
    let (mut s, mut a) = (0.0, 0.0);
    for (&x, &wt) in rule.points.iter().zip(&rule.weights) {
        let uv = comps(u.value(x));
        let (_, wx, wy) = w.value_grad(x);
        let (fx, fy) = (apply(&sys.a1, &uv, m), apply(&sys.a2, &uv, m));
        let v: f64 = (0..m).map(|c| fx[c] * wx[c] + fy[c] * wy[c]).sum();
        s += wt * v;
        a += wt * v.abs();
    }
    (s, a)
}

/// Checks every propagation-form identity on `cell` with `samples` random triples.
pub fn axiom_residuals<R: Rng>(space: &Space<f64>, sys: &SystemSpec<f64>, cell: usize, rng: &mut R, samples: usize) -> Result<AxiomResiduals> {
    let pf = PropagationForms::new(space, sys, cell)?;
    let k = pf.n_faces();
    let ck = pair_weight::<f64>(k);
    let center = space.mesh.cells[cell].center;
    let all: Vec<usize> = (0..sys.m).collect();
    let tiny = f64::MIN_POSITIVE;
    let mut res = AxiomResiduals::default();
    for _ in 0..samples {
        let mut poly = || GlobalPolynomial::random(rng, space.basis.degree, sys.m, &all, center, space.h());
        let (u, v, w, w2) = (poly(), poly(), poly(), poly());
        let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let comb = Combination { a, f: &w, b, g: &w2 };
        let s_abs = |x: &dyn Fn() -> Vec<f64>| x().iter().map(|v| v.abs()).sum::<f64>().max(tiny);
        let scale_w = s_abs(&|| pf.face_integrals(&u, &v, &w));
        let scale_w2 = s_abs(&|| pf.face_integrals(&u, &v, &w2));
        let (pv, pvs) = pf.volume(&u, &v, &w);
        let (qv, qvs) = pf.volume(&v, &u, &w);
        let vol_scale = pv.abs() + pvs.abs() + ck * scale_w;
        res.symmetry = res.symmetry.max(((pv - qv).abs() + (pvs - qvs).abs()) / vol_scale);
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let pij = pf.surface(i, j, &u, &v, &w)?;
                res.symmetry = res.symmetry.max((pij - pf.surface(i, j, &v, &u, &w)?).abs() / scale_w);
                let lin = pf.surface(i, j, &u, &v, &comb)? - a * pij - b * pf.surface(i, j, &u, &v, &w2)?;
                res.linearity = res.linearity.max(lin.abs() / (a.abs() * scale_w + b.abs() * scale_w2));
                if i < j {
                    let bal = pij + pf.surface(j, i, &u, &v, &w)? - pv - pvs;
                    res.balance = res.balance.max(bal.abs() / vol_scale);
                }
            }
        }
        let (lv, lvs) = pf.volume(&u, &v, &comb);
        let lin = (lv - a * pv - b * pf.volume(&u, &v, &w2).0).abs() + (lvs - a * pvs - b * pf.volume(&u, &v, &w2).1).abs();
        res.linearity = res.linearity.max(lin / (a.abs() * vol_scale + b.abs() * (ck * scale_w2)).max(tiny));
        for j in 0..k {
            let lhs: f64 = (0..k).filter(|&i| i != j).map(|i| pf.surface(i, j, &u, &v, &w)).sum::<Result<f64>>()?;
            let rhs = face_flux_reference(space, sys, cell, j, &u, &v, &w);
            res.face_consistency = res.face_consistency.max((lhs - rhs).abs() / scale_w);
        }
        let (pvu, _) = pf.volume(&u, &u, &w);
        let (reference, abs) = volume_flux_reference(space, sys, cell, &u, &w);
        res.volume_consistency = res.volume_consistency.max((pvu - ck * reference).abs() / (ck * abs).max(tiny));
    }
    Ok(res)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub seed: u64,
    pub samples: usize,
    /// Stabilized cells plus one uncut cell.
    pub cells: Vec<usize>,
    pub residuals: AxiomResiduals,
    pub pass: bool,
}

impl AxiomReport {
    pub fn render(&self) -> String {
        let r = &self.residuals;
        format!(
            "# seed = {}\ncommand = check-axioms\nsamples = {}\ncells = {}\nsymmetry = {}\nlinearity = {}\nbalance = {}\nface_consistency = {}\nvolume_consistency = {}\ntolerance = {}\nresult = {}\n",
            self.seed,
            self.samples,
            self.cells.len(),
            fmt17(r.symmetry),
            fmt17(r.linearity),
            fmt17(r.balance),
            fmt17(r.face_consistency),
            fmt17(r.volume_consistency),
            AXIOM_TOL,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

/// Propagation-form identities on every cell with `α < alpha0` and on one uncut cell.
pub fn check_axioms(cfg: &RunConfig) -> Result<AxiomReport> {
    let space = build_space(cfg, cfg.nx, cfg.ny, false)?;
    let sys = cfg.system()?;
    let mut cells = classify_small_cells(&space.mesh, cfg.alpha0)?.cells;
    if let Some(c) = space.mesh.cells.iter().find(|c| c.uncut) {
        cells.push(c.id);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut residuals = AxiomResiduals::default();
    for &cell in &cells {
        residuals = residuals.max(axiom_residuals(&space, &sys, cell, &mut rng, cfg.samples)?);
    }
    Ok(AxiomReport { seed: cfg.seed, samples: cfg.samples, pass: residuals.worst() <= AXIOM_TOL, cells, residuals })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub run_id: usize,
    pub nx: usize,
    pub h: f64,
    pub dofs: usize,
    /// `None` if the run diverged.
    pub l2_error: Option<f64>,
    /// Against the previous row.
    pub observed_order: Option<f64>,
}

/// L² error at `t_final` on each resolution of `cfg.refinements`, or of the initial
/// projection when `projection_only` is set.
pub fn convergence(cfg: &RunConfig, parallel: bool) -> Result<Vec<ConvergenceRow>> {
    let field = initial_field(cfg)?;
    let sys = cfg.system()?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for (run_id, &n) in cfg.refinements.iter().enumerate() {
        let ny = (n * cfg.ny).div_ceil(cfg.nx);
        let space = build_space(cfg, n, ny, parallel)?;
        let (h, dofs) = (space.h(), space.mesh.n_cells() * space.n_loc() * sys.m);
        let u0 = space.l2_project(sys.m, |x| field.value(x, 0.0))?;
        let l2_error = if cfg.projection_only {
            Some(space.l2_error(&u0, |x| field.value(x, 0.0)))
        } else {
            let stab = stabilization_for(cfg, &space, &sys)?;
            let scheme = Scheme::new(space, sys, stab);
            match evolve(&scheme, u0, &controls(cfg)) {
                Ok(tr) => Some(scheme.space.l2_error(&tr.final_state, |x| field.value(x, cfg.t_final))),
                Err(Error::IntegrationFailure { .. }) => None,
                Err(e) => return Err(e),
            }
        };
        let observed_order = match (rows.last(), l2_error) {
            (Some(prev), Some(e)) => prev.l2_error.map(|p| (p / e).ln() / (prev.h / h).ln()),
            _ => None,
        };
        rows.push(ConvergenceRow { run_id, nx: n, h, dofs, l2_error, observed_order });
    }
    Ok(rows)
}

/// `run_id,nx,h,dofs,l2_error,observed_order`; missing values are empty, divergence is `diverged`.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["run_id", "nx", "h", "dofs", "l2_error", "observed_order"]).map_err(io)?;
    for r in rows {
        w.write_record([
            r.run_id.to_string(),
            r.nx.to_string(),
            fmt17(r.h),
            r.dofs.to_string(),
            r.l2_error.map_or_else(|| "diverged".into(), fmt17),
            r.observed_order.map_or_else(String::new, fmt17),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn controls(cfg: &RunConfig) -> TimeControls<f64> {
    TimeControls { t_final: cfg.t_final, cfl: cfg.cfl, rk_order: cfg.rk_order, steps: cfg.steps }
}

#[derive(Debug, Clone)]
pub struct EvolveReport {
    pub seed: u64,
    pub trajectory: Trajectory<f64>,
    /// Against the named field at the final time when it is an exact solution.
    pub l2_error: Option<f64>,
}

impl EvolveReport {
    pub fn render(&self) -> String {
        let tr = &self.trajectory;
        let mut s = format!(
            "# seed = {}\ncommand = evolve\nsteps = {}\ndt = {}\nfinal_time = {}\nmax_growth = {}\nmass_defect = {}\n",
            self.seed,
            tr.times.len() - 1,
            fmt17(tr.dt),
            fmt17(*tr.times.last().expect("non-empty")),
            fmt17(tr.max_growth()),
            fmt17(tr.mass_defect()),
        );
        if let Some(e) = self.l2_error {
            let _ = writeln!(s, "l2_error = {}", fmt17(e));
        }
        s
    }

    /// `step,t,l2,mass,outflow`.
    pub fn trace_csv(&self) -> Result<String> {
        let tr = &self.trajectory;
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["step", "t", "l2", "mass", "outflow"]).map_err(io)?;
        for k in 0..tr.times.len() {
            w.write_record([k.to_string(), fmt17(tr.times[k]), fmt17(tr.l2[k]), fmt17(tr.mass[k]), fmt17(tr.outflow[k])])
                .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Integrates the configured problem from its initial field.
pub fn run_evolve(cfg: &RunConfig, parallel: bool) -> Result<EvolveReport> {
    let field = initial_field(cfg)?;
    let space = build_space(cfg, cfg.nx, cfg.ny, parallel)?;
    let sys = cfg.system()?;
    let stab = stabilization_for(cfg, &space, &sys)?;
    let u0 = space.l2_project(sys.m, |x| field.value(x, 0.0))?;
    let scheme = Scheme::new(space, sys, stab);
    let trajectory = evolve(&scheme, u0, &controls(cfg))?;
    let t = *trajectory.times.last().expect("non-empty");
    let l2_error = field
        .is_exact_solution()
        .then(|| scheme.space.l2_error(&trajectory.final_state, |x| field.value(x, t)));
    Ok(EvolveReport { seed: cfg.seed, trajectory, l2_error })
}

/// Outcome of one stability run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    /// `max_t ‖u(t)‖ / ‖u(0)‖`.
    Bounded(f64),
    /// Non-finite state at the given step.
    Unstable { step: usize },
}

impl Growth {
    fn render(self) -> String {
        match self {
            Growth::Bounded(g) => fmt17(g),
            Growth::Unstable { step } => format!("unstable (step {step})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub seed: u64,
    pub min_alpha: f64,
    pub stabilized_cells: usize,
    pub dt: f64,
    pub steps: usize,
    pub growth: Growth,
    /// Same run without stabilization.
    pub contrast: Option<Growth>,
    pub pass: bool,
}

impl StabilityReport {
    pub fn render(&self) -> String {
        let mut s = format!(
            "# seed = {}\ncommand = stability\nmin_alpha = {}\nstabilized_cells = {}\ndt = {}\nsteps = {}\ngrowth = {}\n",
            self.seed,
            fmt17(self.min_alpha),
            self.stabilized_cells,
            fmt17(self.dt),
            self.steps,
            self.growth.render()
        );
        if let Some(c) = self.contrast {
            let _ = writeln!(s, "growth_without_stabilization = {}", c.render());
        }
        let _ = writeln!(s, "tolerance = {}\nresult = {}", STABILITY_GROWTH_TOL, if self.pass { "pass" } else { "fail" });
        s
    }
}

fn growth_of(scheme: &Scheme<f64>, u0: crate::basis::DgFunction<f64>, c: &TimeControls<f64>) -> Result<(Growth, f64, usize)> {
    let (n, dt) = c.plan(scheme.time_step(c.cfl)?)?;
    match evolve(scheme, u0, c) {
        Ok(tr) => Ok((Growth::Bounded(tr.max_growth()), dt, n)),
        Err(Error::IntegrationFailure { step }) => Ok((Growth::Unstable { step }, dt, n)),
        Err(e) => Err(e),
    }
}

/// Evolves on the configured (sliver) mesh with the background time step and reports
/// the largest L² growth factor, optionally contrasted with the unstabilized scheme.
pub fn stability(cfg: &RunConfig, contrast: bool, parallel: bool) -> Result<StabilityReport> {
    let field = initial_field(cfg)?;
    let space = build_space(cfg, cfg.nx, cfg.ny, parallel)?;
    let sys = cfg.system()?;
    let stab = stabilization_for(cfg, &space, &sys)?;
    let stabilized_cells = stab.len();
    let min_alpha = space.mesh.alpha_range().0;
    let u0 = space.l2_project(sys.m, |x| field.value(x, 0.0))?;
    let c = controls(cfg);
    let scheme = Scheme::new(space, sys, stab);
    let (growth, dt, steps) = growth_of(&scheme, u0.clone(), &c)?;
    let contrast = if contrast {
        let plain = Scheme::unstabilized(scheme.space, sys);
        Some(growth_of(&plain, u0, &c)?.0)
    } else {
        None
    };
    let pass = matches!(growth, Growth::Bounded(g) if g - 1.0 <= STABILITY_GROWTH_TOL);
    Ok(StabilityReport { seed: cfg.seed, min_alpha, stabilized_cells, dt, steps, growth, contrast, pass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshInfo {
    pub cells: usize,
    pub faces: usize,
    pub boundary_faces: usize,
    pub min_alpha: f64,
    pub max_alpha: f64,
    pub stabilized_cells: usize,
    pub dump: String,
}

impl MeshInfo {
    pub fn render(&self) -> String {
        format!(
            "cells = {}\nfaces = {}\nboundary_faces = {}\nmin_alpha = {}\nmax_alpha = {}\nstabilized_cells = {}\n",
            self.cells,
            self.faces,
            self.boundary_faces,
            fmt17(self.min_alpha),
            fmt17(self.max_alpha),
            self.stabilized_cells
        )
    }
}

pub fn mesh_info(cfg: &RunConfig) -> Result<MeshInfo> {
    let bg = cfg.background()?;
    let mesh = build_mesh(bg, cfg.geometry_for(&bg)?)?;
    let (min_alpha, max_alpha) = mesh.alpha_range();
    Ok(MeshInfo {
        cells: mesh.n_cells(),
        faces: mesh.faces.len(),
        boundary_faces: mesh.faces.iter().filter(|f| f.is_boundary()).count(),
        min_alpha,
        max_alpha,
        stabilized_cells: classify_small_cells(&mesh, cfg.alpha0)?.len(),
        dump: mesh.dump(),
    })
}

/// Writes `contents` to `dir/name`, creating `dir`.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Configuration of the ramp experiments: `nx × nx` unit square above a ramp of slope
/// `0.6` whose smallest cut cell has volume fraction `min_alpha`.
pub fn ramp_config(equation: Equation, degree: usize, nx: usize, min_alpha: f64) -> RunConfig {
    RunConfig {
        equation,
        degree,
        nx,
        ny: nx,
        ramp: Some(crate::config::RampSpec { slope: 0.6, min_alpha }),
        ..RunConfig::default()
    }
}
