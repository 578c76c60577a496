//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. `geometry.constraint` may repeat;
//! every other key may appear at most once. Unknown keys are rejected by name.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::basis::MAX_DEGREE;
use crate::dod::EtaPolicy;
use crate::error::{Error, Result};
use crate::geometry::{BackgroundMesh, Geometry, HalfPlane, Vec2};
use crate::system::{Dissipation, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    Advection,
    Acoustics,
}

impl Equation {
    pub fn as_str(self) -> &'static str {
        match self {
            Equation::Advection => "advection",
            Equation::Acoustics => "acoustics",
        }
    }

    pub fn components(self) -> usize {
        match self {
            Equation::Advection => 1,
            Equation::Acoustics => 3,
        }
    }
}

/// Ramp `y ≥ y0 + slope·x` whose smallest cut cell has volume fraction `min_alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSpec {
    pub slope: f64,
    pub min_alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub equation: Equation,
    pub degree: usize,
    pub nx: usize,
    pub ny: usize,
    /// `x0, y0, x1, y1`.
    pub bbox: [f64; 4],
    /// `(a, b, c)` keeping `a·x + b·y ≥ c`.
    pub constraints: Vec<[f64; 3]>,
    pub ramp: Option<RampSpec>,
    pub beta: [f64; 2],
    pub sound_speed: f64,
    pub dissipation: Option<Dissipation>,
    pub alpha0: f64,
    pub eta: EtaPolicy<f64>,
    pub cfl: f64,
    pub t_final: f64,
    pub steps: Option<usize>,
    pub rk_order: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub initial: Option<String>,
    pub samples: usize,
    pub refinements: Vec<usize>,
    pub stabilization: bool,
    pub projection_only: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            equation: Equation::Advection,
            degree: 1,
            nx: 16,
            ny: 16,
            bbox: [0.0, 0.0, 1.0, 1.0],
            constraints: Vec::new(),
            ramp: None,
            beta: [1.0, 0.6],
            sound_speed: 1.0,
            dissipation: None,
            alpha0: 0.3,
            eta: EtaPolicy::Linear,
            cfl: 0.3,
            t_final: 0.1,
            steps: None,
            rk_order: 3,
            seed: 42,
            output: None,
            initial: None,
            samples: 20,
            refinements: vec![16, 32, 64],
            stabilization: true,
            projection_only: false,
        }
    }
}

const KEYS: &[&str] = &[
    "equation",
    "degree",
    "nx",
    "ny",
    "box",
    "geometry.constraint",
    "geometry.ramp",
    "beta",
    "sound_speed",
    "dissipation",
    "alpha0",
    "eta",
    "cfl",
    "t_final",
    "steps",
    "rk_order",
    "seed",
    "output",
    "initial",
    "samples",
    "refinements",
    "stabilization",
    "projection_only",
];

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("key `{key}`: cannot parse `{value}` as {what}"))
}

fn floats<const N: usize>(key: &str, value: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(bad(key, value, &format!("{N} comma-separated numbers")));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| bad(key, value, "a number"))?;
    }
    Ok(out)
}

fn float(key: &str, value: &str) -> Result<f64> {
    Ok(floats::<1>(key, value)?[0])
}

fn integer<I: std::str::FromStr>(key: &str, value: &str) -> Result<I> {
    value.parse().map_err(|_| bad(key, value, "a non-negative integer"))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, value, "`true` or `false`")),
    }
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = *KEYS
                .iter()
                .find(|&&k| k == key)
                .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
            if key != "geometry.constraint" {
                if seen.contains(&key) {
                    return Err(Error::Config(format!("key `{key}` given twice")));
                }
                seen.push(key);
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "equation" => {
                self.equation = match value {
                    "advection" => Equation::Advection,
                    "acoustics" => Equation::Acoustics,
                    _ => return Err(bad(key, value, "`advection` or `acoustics`")),
                }
            }
            "degree" => self.degree = integer(key, value)?,
            "nx" => self.nx = integer(key, value)?,
            "ny" => self.ny = integer(key, value)?,
            "box" => self.bbox = floats(key, value)?,
            "geometry.constraint" => self.constraints.push(floats(key, value)?),
            "geometry.ramp" => {
                let [slope, min_alpha] = floats(key, value)?;
                self.ramp = Some(RampSpec { slope, min_alpha });
            }
            "beta" => self.beta = floats(key, value)?,
            "sound_speed" => self.sound_speed = float(key, value)?,
            "dissipation" => {
                self.dissipation = Some(match value {
                    "upwind" => Dissipation::Upwind,
                    "rusanov" => Dissipation::Rusanov,
                    "none" => Dissipation::None,
                    _ => return Err(bad(key, value, "`upwind`, `rusanov` or `none`")),
                })
            }
            "alpha0" => self.alpha0 = float(key, value)?,
            "eta" => {
                self.eta = match value {
                    "linear" => EtaPolicy::Linear,
                    v => EtaPolicy::Constant(float(key, v).map_err(|_| bad(key, value, "`linear` or a number"))?),
                }
            }
            "cfl" => self.cfl = float(key, value)?,
            "t_final" => self.t_final = float(key, value)?,
            "steps" => self.steps = Some(integer(key, value)?),
            "rk_order" => self.rk_order = integer(key, value)?,
            "seed" => self.seed = integer(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            "initial" => self.initial = Some(value.to_string()),
            "samples" => self.samples = integer(key, value)?,
            "refinements" => {
                self.refinements = value
                    .split(',')
                    .map(|p| integer(key, p.trim()))
                    .collect::<Result<_>>()?
            }
            "stabilization" => self.stabilization = boolean(key, value)?,
            "projection_only" => self.projection_only = boolean(key, value)?,
            _ => unreachable!("key list and setter agree"),
        }
        Ok(())
    }

    /// Checks every field; called by [`RunConfig::parse`].
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.degree > MAX_DEGREE {
            return err(format!("degree must be at most {}, got {}", MAX_DEGREE, self.degree));
        }
        if self.nx == 0 || self.ny == 0 {
            return err("nx and ny must be positive".into());
        }
        self.geometry_for(&self.background()?)?;
        if let Some(r) = self.ramp {
            if !(r.min_alpha > 0.0 && r.min_alpha < 1.0) || !r.slope.is_finite() {
                return err(format!("geometry.ramp needs a finite slope and min_alpha in (0, 1), got {},{}", r.slope, r.min_alpha));
            }
            if self.nx < 8 || self.ny < 8 {
                return err("geometry.ramp needs nx, ny >= 8".into());
            }
        }
        if !(self.alpha0 > 0.0 && self.alpha0 < 1.0) {
            return err(format!("alpha0 must lie in (0, 1), got {}", self.alpha0));
        }
        if let EtaPolicy::Constant(e) = self.eta {
            if !(0.0..=1.0).contains(&e) {
                return err(format!("eta must lie in [0, 1], got {e}"));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return err(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return err(format!("t_final must be positive, got {}", self.t_final));
        }
        if self.steps == Some(0) {
            return err("steps must be positive".into());
        }
        if !matches!(self.rk_order, 2 | 3) {
            return err(format!("rk_order must be 2 or 3, got {}", self.rk_order));
        }
        if self.samples == 0 {
            return err("samples must be positive".into());
        }
        if self.refinements.len() < 2 || self.refinements.contains(&0) {
            return err("refinements needs at least two positive resolutions".into());
        }
        self.system()?;
        if let Some(name) = &self.initial {
            crate::registry::lookup(name, self)?;
        }
        Ok(())
    }

    pub fn dissipation(&self) -> Dissipation {
        self.dissipation.unwrap_or(match self.equation {
            Equation::Advection => Dissipation::Upwind,
            Equation::Acoustics => Dissipation::Rusanov,
        })
    }

    pub fn system(&self) -> Result<SystemSpec<f64>> {
        match self.equation {
            Equation::Advection => SystemSpec::advection(Vec2::new(self.beta[0], self.beta[1]), self.dissipation()),
            Equation::Acoustics => SystemSpec::acoustics(self.sound_speed, self.dissipation()),
        }
    }

    pub fn background(&self) -> Result<BackgroundMesh<f64>> {
        self.background_with(self.nx, self.ny)
    }

    pub fn background_with(&self, nx: usize, ny: usize) -> Result<BackgroundMesh<f64>> {
        let [x0, y0, x1, y1] = self.bbox;
        BackgroundMesh::new(x0, y0, x1, y1, nx, ny)
    }

    /// Explicit constraints plus the ramp, if any.
    pub fn geometry_for(&self, bg: &BackgroundMesh<f64>) -> Result<Geometry<f64>> {
        let mut hp = self
            .constraints
            .iter()
            .map(|c| HalfPlane::new(c[0], c[1], c[2]))
            .collect::<Result<Vec<_>>>()?;
        if let Some(r) = self.ramp {
            hp.push(HalfPlane::above_line(crate::harness::ramp_intercept(bg, r.slope, r.min_alpha)?, r.slope));
        }
        Ok(Geometry::new(hp))
    }

    /// One `key = value` line per set field in a fixed key order.
    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("equation", self.equation.as_str().into());
        put("degree", self.degree.to_string());
        put("nx", self.nx.to_string());
        put("ny", self.ny.to_string());
        put("box", list(&self.bbox));
        for c in &self.constraints {
            put("geometry.constraint", list(c));
        }
        if let Some(r) = self.ramp {
            put("geometry.ramp", list(&[r.slope, r.min_alpha]));
        }
        put("beta", list(&self.beta));
        put("sound_speed", self.sound_speed.to_string());
        if let Some(d) = self.dissipation {
            put("dissipation", d.as_str().into());
        }
        put("alpha0", self.alpha0.to_string());
        put(
            "eta",
            match self.eta {
                EtaPolicy::Linear => "linear".into(),
                EtaPolicy::Constant(e) => e.to_string(),
            },
        );
        put("cfl", self.cfl.to_string());
        put("t_final", self.t_final.to_string());
        if let Some(n) = self.steps {
            put("steps", n.to_string());
        }
        put("rk_order", self.rk_order.to_string());
        put("seed", self.seed.to_string());
        if let Some(o) = &self.output {
            put("output", o.display().to_string());
        }
        if let Some(i) = &self.initial {
            put("initial", i.clone());
        }
        put("samples", self.samples.to_string());
        put("refinements", self.refinements.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
        put("stabilization", self.stabilization.to_string());
        put("projection_only", self.projection_only.to_string());
        s
    }
}
