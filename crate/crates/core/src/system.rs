//! Linear hyperbolic systems `u_t + A1 u_x + A2 u_y = 0`, their numerical fluxes and
//! boundary operators.

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scalar::Real;
use crate::state::State;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SystemKind<T> {
    /// Scalar transport with constant velocity; zero inflow on the boundary.
    Advection { beta: Vec2<T> },
    /// Pressure/velocity acoustics `(p, v1, v2)` with reflecting walls.
    Acoustics { c: T },
}

/// Dissipative part `S_n` of the face flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dissipation {
    /// `|β·n| / 2 (a − b)`.
    Upwind,
    /// `c / 2 (a − b)`.
    Rusanov,
    /// Central flux only.
    None,
}

impl Dissipation {
    pub fn as_str(self) -> &'static str {
        match self {
            Dissipation::Upwind => "upwind",
            Dissipation::Rusanov => "rusanov",
            Dissipation::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec<T> {
    pub kind: SystemKind<T>,
    pub m: usize,
    pub a1: [[T; 3]; 3],
    pub a2: [[T; 3]; 3],
    pub lambda_max: T,
    pub dissipation: Dissipation,
}

impl<T: Real> SystemSpec<T> {
    pub fn advection(beta: Vec2<T>, dissipation: Dissipation) -> Result<Self> {
        let speed = beta.norm();
        if !(speed > T::zero()) || !speed.is_finite() {
            return Err(Error::Config("advection velocity must be nonzero and finite".into()));
        }
        if dissipation == Dissipation::Rusanov {
            return Err(Error::Config("advection supports upwind or none dissipation".into()));
        }
        let z = T::zero();
        let mut a1 = [[z; 3]; 3];
        let mut a2 = [[z; 3]; 3];
        a1[0][0] = beta.x;
        a2[0][0] = beta.y;
        Ok(Self { kind: SystemKind::Advection { beta }, m: 1, a1, a2, lambda_max: speed, dissipation })
    }

    pub fn acoustics(c: T, dissipation: Dissipation) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::Config("sound speed must be positive and finite".into()));
        }
        if dissipation == Dissipation::Upwind {
            return Err(Error::Config("acoustics supports rusanov or none dissipation".into()));
        }
        let z = T::zero();
        let a1 = [[z, c, z], [c, z, z], [z, z, z]];
        let a2 = [[z, z, c], [z, z, z], [c, z, z]];
        Ok(Self { kind: SystemKind::Acoustics { c }, m: 3, a1, a2, lambda_max: c, dissipation })
    }

    pub fn is_acoustics(&self) -> bool {
        matches!(self.kind, SystemKind::Acoustics { .. })
    }

    #[inline]
    fn apply(a: &[[T; 3]; 3], u: &State<T>, m: usize) -> State<T> {
        let mut out = State::zero();
        for i in 0..m {
            let mut s = T::zero();
            for j in 0..m {
                s += a[i][j] * u[j];
            }
            out[i] = s;
        }
        out
    }

    /// `A1 u`.
    #[inline]
    pub fn flux_x(&self, u: &State<T>) -> State<T> {
        Self::apply(&self.a1, u, self.m)
    }

    /// `A2 u`.
    #[inline]
    pub fn flux_y(&self, u: &State<T>) -> State<T> {
        Self::apply(&self.a2, u, self.m)
    }

    /// `f_n(u) = (n1 A1 + n2 A2) u`.
    #[inline]
    pub fn flux_normal(&self, u: &State<T>, n: Vec2<T>) -> State<T> {
        match self.kind {
            SystemKind::Advection { beta } => State::scalar(beta.dot(n) * u[0]),
            SystemKind::Acoustics { c } => {
                let vn = u[1] * n.x + u[2] * n.y;
                State::acoustic(c * vn, c * n.x * u[0], c * n.y * u[0])
            }
        }
    }

    /// `½ (f_n(a) + f_n(b))`.
    #[inline]
    pub fn central_flux(&self, a: &State<T>, b: &State<T>, n: Vec2<T>) -> State<T> {
        (self.flux_normal(a, n) + self.flux_normal(b, n)) * T::half()
    }

    /// `S_n(a, b)`.
    #[inline]
    pub fn dissipation(&self, a: &State<T>, b: &State<T>, n: Vec2<T>) -> State<T> {
        let coeff = match (self.dissipation, self.kind) {
            (Dissipation::None, _) => return State::zero(),
            (Dissipation::Upwind, SystemKind::Advection { beta }) => beta.dot(n).abs(),
            (_, SystemKind::Acoustics { c }) => c,
            (Dissipation::Rusanov, SystemKind::Advection { .. }) => self.lambda_max,
        };
        (*a - *b) * (coeff * T::half())
    }

    /// Exterior state used by the face kernels on boundary faces: zero inflow for
    /// advection, the mirrored state for acoustics.
    #[inline]
    pub fn ghost_state(&self, u: &State<T>, n: Vec2<T>) -> State<T> {
        match self.kind {
            SystemKind::Advection { .. } => State::zero(),
            SystemKind::Acoustics { .. } => mirror(u, n),
        }
    }

    /// Boundary flux: `max(β·n, 0) u` for advection, central plus dissipation against the
    /// mirrored state for acoustics.
    pub fn boundary_flux(&self, u: &State<T>, n: Vec2<T>) -> State<T> {
        match self.kind {
            SystemKind::Advection { beta } => State::scalar(beta.dot(n).max(T::zero()) * u[0]),
            SystemKind::Acoustics { .. } => {
                let g = mirror(u, n);
                self.central_flux(u, &g, n) + self.dissipation(u, &g, n)
            }
        }
    }

    /// `(p, v − 2 (v·n) n)`; only defined for acoustics.
    pub fn mirror_state(&self, u: &State<T>, n: Vec2<T>) -> Result<State<T>> {
        if !self.is_acoustics() {
            return Err(Error::Unsupported("mirroring requires the acoustic system"));
        }
        Ok(mirror(u, n))
    }
}

#[inline]
pub(crate) fn mirror<T: Real>(u: &State<T>, n: Vec2<T>) -> State<T> {
    let vn = u[1] * n.x + u[2] * n.y;
    let two = T::two();
    State::acoustic(u[0], u[1] - two * vn * n.x, u[2] - two * vn * n.y)
}
