//! Method-of-lines integration of `M u' = −(a_h(u, ·) + J_h(u, ·))` with SSP Runge–Kutta.

use crate::assembly::{assemble_base, boundary_flux_integral, Residual};
use crate::basis::DgFunction;
use crate::dod::{stabilized_boundary_outflow, Stabilization};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::space::Space;
use crate::system::SystemSpec;

/// Space, system and stabilization of one semi-discrete problem.
pub struct Scheme<T> {
    pub space: Space<T>,
    pub system: SystemSpec<T>,
    pub stabilization: Stabilization<T>,
}

impl<T: Real> Scheme<T> {
    pub fn new(space: Space<T>, system: SystemSpec<T>, stabilization: Stabilization<T>) -> Self {
        Self { space, system, stabilization }
    }

    /// Base scheme only.
    pub fn unstabilized(space: Space<T>, system: SystemSpec<T>) -> Self {
        let stabilization = Stabilization::none(&system);
        Self { space, system, stabilization }
    }

    /// `a_h(u, φ) + J_h(u, φ)`.
    pub fn residual(&self, u: &DgFunction<T>) -> Result<Residual<T>> {
        let mut r = assemble_base(&self.space, &self.system, u)?;
        self.stabilization.assemble_into(&self.space, &self.system, u, &mut r)?;
        Ok(r)
    }

    /// `−M⁻¹ (a_h + J_h)(u)`.
    pub fn rhs(&self, u: &DgFunction<T>) -> Result<DgFunction<T>> {
        let mut r = self.residual(u)?;
        self.space.apply_mass_inverse(&mut r)?;
        r.scale(-T::one());
        Ok(r)
    }

    /// Rate at which the first component leaves the domain: wall fluxes plus the
    /// stabilization's correction on walls of stabilized cells.
    pub fn outflow_rate(&self, u: &DgFunction<T>) -> T {
        boundary_flux_integral(&self.space, &self.system, u)[0]
            + stabilized_boundary_outflow(&self.space, &self.system, &self.stabilization, u)
    }

    /// `Δt = C h / (λ_max (2r + 1))`.
    pub fn time_step(&self, cfl: T) -> Result<T> {
        background_time_step(self.space.h(), self.system.lambda_max, self.space.basis.degree, cfl)
    }
}

/// `Δt = C h / (λ (2r + 1))`; depends on the background mesh only.
pub fn background_time_step<T: Real>(h: T, lambda: T, degree: usize, cfl: T) -> Result<T> {
    if !(cfl > T::zero() && cfl <= T::one()) {
        return Err(Error::Config(format!("cfl must lie in (0, 1], got {cfl}")));
    }
    if !(lambda > T::zero()) || !(h > T::zero()) {
        return Err(Error::Config("time step needs positive h and wave speed".into()));
    }
    Ok(cfl * h / (lambda * T::from_usize_lossy(2 * degree + 1)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeControls<T> {
    pub t_final: T,
    pub cfl: T,
    /// 2 or 3.
    pub rk_order: usize,
    /// Fixed step count at the background step size; overrides `t_final`.
    pub steps: Option<usize>,
}

impl<T: Real> TimeControls<T> {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.rk_order, 2 | 3) {
            return Err(Error::Config(format!("rk_order must be 2 or 3, got {}", self.rk_order)));
        }
        if self.steps.is_none() && !(self.t_final > T::zero() && self.t_final.is_finite()) {
            return Err(Error::Config(format!("t_final must be positive, got {}", self.t_final)));
        }
        if self.steps == Some(0) {
            return Err(Error::Config("steps must be positive".into()));
        }
        Ok(())
    }

    /// `(number of steps, Δt)`. Without a fixed count the background step is shortened
    /// uniformly so that the steps land on `t_final`.
    pub fn plan(&self, dt_max: T) -> Result<(usize, T)> {
        self.validate()?;
        match self.steps {
            Some(n) => Ok((n, dt_max)),
            None => {
                let n = (self.t_final / dt_max).ceil().to_usize().unwrap_or(usize::MAX).max(1);
                Ok((n, self.t_final / T::from_usize_lossy(n)))
            }
        }
    }
}

/// One SSP-RK step. Returns the new state and `Σ_s b_s · outflow(u_s)`, the quadrature of
/// the outflow rate consistent with the update of the mass.
pub fn step<T: Real>(scheme: &Scheme<T>, u: &DgFunction<T>, dt: T, rk_order: usize, index: usize) -> Result<(DgFunction<T>, T)> {
    if !u.is_finite() {
        return Err(Error::IntegrationFailure { step: index });
    }
    let euler = |v: &DgFunction<T>| -> Result<DgFunction<T>> {
        let mut w = v.clone();
        w.axpy(dt, &scheme.rhs(v)?);
        Ok(w)
    };
    let (next, rate) = match rk_order {
        2 => {
            let u1 = euler(u)?;
            let mut u2 = euler(&u1)?;
            u2.axpy(T::one(), u);
            u2.scale(T::half());
            let rate = (scheme.outflow_rate(u) + scheme.outflow_rate(&u1)) * T::half();
            (u2, rate)
        }
        3 => {
            let u1 = euler(u)?;
            let mut u2 = euler(&u1)?;
            u2.scale(T::lit(0.25));
            u2.axpy(T::lit(0.75), u);
            let mut u3 = euler(&u2)?;
            u3.scale(T::two() / T::lit(3.0));
            u3.axpy(T::one() / T::lit(3.0), u);
            let sixth = T::one() / T::lit(6.0);
            let rate = sixth * scheme.outflow_rate(u)
                + sixth * scheme.outflow_rate(&u1)
                + (T::two() / T::lit(3.0)) * scheme.outflow_rate(&u2);
            (u3, rate)
        }
        k => return Err(Error::Config(format!("rk_order must be 2 or 3, got {k}"))),
    };
    if !next.is_finite() {
        return Err(Error::IntegrationFailure { step: index });
    }
    Ok((next, rate))
}

/// Per-step record of a run; entry 0 is the initial state.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub final_state: DgFunction<T>,
    pub dt: T,
    pub times: Vec<T>,
    pub l2: Vec<T>,
    /// Total of the first component.
    pub mass: Vec<T>,
    /// Time-integrated outflow of the first component since `t = 0`.
    pub outflow: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    /// `max_t ‖u(t)‖ / ‖u(0)‖`.
    pub fn max_growth(&self) -> T {
        let l0 = self.l2[0];
        self.l2.iter().fold(T::one(), |g, &l| g.max(l / l0))
    }

    /// `|Δ mass + ∫ outflow dt|` divided by `max(|mass(0)|, ∫ |outflow| dt)`.
    pub fn mass_defect(&self) -> T {
        let n = self.mass.len() - 1;
        let change = self.mass[n] - self.mass[0];
        let out = self.outflow[n];
        let scale = self.mass[0].abs().max(out.abs()).max(T::min_positive_value());
        (change + out).abs() / scale
    }
}

/// Integrates from `u0` according to `controls`.
pub fn evolve<T: Real>(scheme: &Scheme<T>, u0: DgFunction<T>, controls: &TimeControls<T>) -> Result<Trajectory<T>> {
    scheme.space.check(&u0)?;
    let (n, dt) = controls.plan(scheme.time_step(controls.cfl)?)?;
    let mut u = u0;
    let mut tr = Trajectory {
        final_state: DgFunction::zeros(&scheme.space.basis, u.m, 0),
        dt,
        times: vec![T::zero()],
        l2: vec![scheme.space.l2_norm(&u)],
        mass: vec![scheme.space.total_mass(&u)[0]],
        outflow: vec![T::zero()],
    };
    for k in 0..n {
        let (next, rate) = step(scheme, &u, dt, controls.rk_order, k)?;
        u = next;
        tr.times.push(T::from_usize_lossy(k + 1) * dt);
        tr.l2.push(scheme.space.l2_norm(&u));
        tr.mass.push(scheme.space.total_mass(&u)[0]);
        let last = *tr.outflow.last().expect("non-empty");
        tr.outflow.push(last + dt * rate);
    }
    tr.final_state = u;
    Ok(tr)
}
