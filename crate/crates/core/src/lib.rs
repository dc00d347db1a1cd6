//! Galerkin boundary elements for the fractional Laplacian in the plane.
//!
//! For `1/2 < s < 1` and a bounded polygonal domain `Ω`, the single layer
//! potential `u = 𝒮_s φ` with Riesz kernel `Γ_{2s}` solves `Δ^s u = 0` off
//! `∂Ω`. Given Dirichlet data `f`, the density `φ` comes from the boundary
//! integral equation `S_s φ = f`, discretized here with piecewise constants.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod quadrature;
pub mod solve;
pub mod validation;

pub use assembly::{assemble, eval_potential, GalerkinMatrix};
pub use error::{Error, Result};
pub use geometry::{BoundaryMesh, Panel, Point};
pub use kernel::FracParams;
pub use quadrature::QuadratureConfig;
pub use solve::{solve_dirichlet, BoundaryData, DensityVector, FieldSample};
