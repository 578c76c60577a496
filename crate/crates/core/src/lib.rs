//! Cut-cell discontinuous Galerkin discretizations of linear advection and acoustics
//! on Cartesian background meshes with straight embedded boundaries, with
//! Domain-of-Dependence stabilization of small cut cells.
//!
//! The numerical core is generic over the floating point type (see [`Real`]); the
//! `f64` aliases at the crate root are what the drivers use.

pub mod assembly;
pub mod basis;
pub mod config;
pub mod dod;
pub mod error;
pub mod extension;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod polynomial;
pub mod quadrature;
pub mod registry;
pub mod scalar;
pub mod space;
pub mod state;
pub mod system;
pub mod timestep;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Point = geometry::Vec2<f64>;
pub type StateVec = state::State<f64>;
pub type Mesh = mesh::CutCellMesh<f64>;
pub type Function = basis::DgFunction<f64>;
pub type DiscreteSpace = space::Space<f64>;
pub type System = system::SystemSpec<f64>;
pub type Polynomial = polynomial::GlobalPolynomial<f64>;
