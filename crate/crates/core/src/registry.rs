//! Named initial and exact fields.
//!
//! | name | components | field |
//! |---|---|---|
//! | `poly:<c>;<c>;…` | 1 or 3 | global polynomial, one comma list of monomial coefficients per component |
//! | `sine-advect` | 1 | `sin(2π(x − β1 t)) sin(2π(y − β2 t))` |
//! | `cosine-bump` | 1 | `cos⁸(πρ/(2R))` for `ρ < R`, transported with `β` |
//! | `pressure-poly` | 3 | `(1 + x − y/2 + xy/4, 0, 0)` |
//! | `pressure-pulse` | 3 | `(exp(−|x − x_c|²/0.01), 0, 0)` |

use std::f64::consts::PI;

use crate::basis::{Basis, MAX_DEGREE};
use crate::config::{Equation, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::polynomial::GlobalPolynomial;
use crate::state::State;

/// Center and radius of the `cosine-bump` and `pressure-pulse` fields.
pub const BUMP_CENTER: [f64; 2] = [0.4, 0.6];
pub const BUMP_RADIUS: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub enum NamedField {
    Poly(GlobalPolynomial<f64>),
    SineAdvect { beta: Vec2<f64> },
    CosineBump { center: Vec2<f64>, radius: f64, beta: Vec2<f64> },
    PressurePoly,
    PressurePulse { center: Vec2<f64> },
}

impl NamedField {
    pub fn components(&self) -> usize {
        match self {
            NamedField::Poly(p) => p.m,
            NamedField::SineAdvect { .. } | NamedField::CosineBump { .. } => 1,
            NamedField::PressurePoly | NamedField::PressurePulse { .. } => 3,
        }
    }

    /// Whether `value(·, t)` solves the configured problem, including its boundary conditions.
    pub fn is_exact_solution(&self) -> bool {
        matches!(self, NamedField::CosineBump { .. })
    }

    pub fn value(&self, x: Vec2<f64>, t: f64) -> State<f64> {
        match self {
            NamedField::Poly(p) => p.value(x),
            NamedField::SineAdvect { beta } => {
                State::scalar((2.0 * PI * (x.x - beta.x * t)).sin() * (2.0 * PI * (x.y - beta.y * t)).sin())
            }
            NamedField::CosineBump { center, radius, beta } => {
                let rho = x.dist(*center + *beta * t);
                State::scalar(if rho < *radius { (PI * rho / (2.0 * radius)).cos().powi(8) } else { 0.0 })
            }
            NamedField::PressurePoly => State::acoustic(1.0 + x.x - 0.5 * x.y + 0.25 * x.x * x.y, 0.0, 0.0),
            NamedField::PressurePulse { center } => State::acoustic((-(x.dist(*center).powi(2)) / 0.01).exp(), 0.0, 0.0),
        }
    }
}

fn parse_poly(spec: &str) -> Result<GlobalPolynomial<f64>> {
    let comps: Vec<Vec<f64>> = spec
        .split(';')
        .map(|c| {
            c.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad polynomial coefficient `{v}`"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = comps[0].len();
    let degree = (0..=MAX_DEGREE)
        .find(|&d| Basis::new(d).n_loc() == n)
        .ok_or_else(|| Error::Config(format!("{n} coefficients do not form a complete polynomial")))?;
    if comps.iter().any(|c| c.len() != n) {
        return Err(Error::Config("all polynomial components need the same number of coefficients".into()));
    }
    Ok(GlobalPolynomial::new(degree, Vec2::zero(), 1.0, comps))
}

/// Resolves `name` for the equation and velocity of `cfg`.
pub fn lookup(name: &str, cfg: &RunConfig) -> Result<NamedField> {
    let beta = Vec2::new(cfg.beta[0], cfg.beta[1]);
    let center = Vec2::new(BUMP_CENTER[0], BUMP_CENTER[1]);
    let field = if let Some(spec) = name.strip_prefix("poly:") {
        NamedField::Poly(parse_poly(spec)?)
    } else {
        match name {
            "sine-advect" => NamedField::SineAdvect { beta },
            "cosine-bump" => NamedField::CosineBump { center, radius: BUMP_RADIUS, beta },
            "pressure-poly" => NamedField::PressurePoly,
            "pressure-pulse" => NamedField::PressurePulse { center },
            _ => return Err(Error::Config(format!("unknown field `{name}`"))),
        }
    };
    if field.components() != cfg.equation.components() {
        return Err(Error::Config(format!(
            "field `{name}` has {} components, {} needs {}",
            field.components(),
            cfg.equation.as_str(),
            cfg.equation.components()
        )));
    }
    Ok(field)
}

/// Field used when the configuration names none.
pub fn default_initial(equation: Equation) -> &'static str {
    match equation {
        Equation::Advection => "cosine-bump",
        Equation::Acoustics => "pressure-pulse",
    }
}
