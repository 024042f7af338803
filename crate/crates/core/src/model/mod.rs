//! Coefficients, problem data and manufactured solutions.

mod cases;
pub mod jet;
mod params;

use crate::mesh::{Point, Vec2};

pub use cases::{
    CaseKind, ExactFields, ManufacturedCase, SeparableFields, TimeProfile, DEFAULT_LAYER_WIDTH,
};
pub use jet::{ScalarJet, VectorJet};
pub use params::PhysicalParams;

/// Inhomogeneous interface data, evaluated with the fluid outward normal
/// `n_f` (porous normal `n_p = -n_f`, tangent `tau = rot(n_f)`):
///
/// * `g1 = u_f.n_f + (d_t eta + u_p).n_p`
/// * `g2 = p_p + (sigma_f n_f).n_f`
/// * `g3 = sigma_f n_f + sigma_p n_p`
/// * `g4 = (sigma_f n_f).tau + mu alpha_bjs / sqrt(K_tau) (u_f - d_t eta).tau`
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InterfaceData {
    pub g1: f64,
    pub g2: f64,
    pub g3: Vec2,
    pub g4: f64,
}

/// Interface tangent for a fluid outward normal.
pub fn interface_tangent(n_f: &Vec2) -> Vec2 {
    Vec2::new(-n_f.y, n_f.x)
}

/// Sources, boundary, interface and initial data of a problem.
pub trait SourceData: Send + Sync {
    fn params(&self) -> &PhysicalParams;
    fn fluid_force(&self, x: &Point, t: f64) -> Vec2;
    fn fluid_source(&self, x: &Point, t: f64) -> f64;
    fn porous_force(&self, x: &Point, t: f64) -> Vec2;
    fn porous_source(&self, x: &Point, t: f64) -> f64;
    /// Stokes velocity on `gamma_f`.
    fn fluid_velocity_bc(&self, x: &Point, t: f64) -> Vec2;
    /// Displacement on the porous boundary.
    fn displacement_bc(&self, x: &Point, t: f64) -> Vec2;
    /// Darcy velocity whose normal component is imposed on `gamma_pn`.
    fn darcy_velocity_bc(&self, x: &Point, t: f64) -> Vec2;
    /// Pressure on `gamma_pd`.
    fn pressure_bc(&self, x: &Point, t: f64) -> f64;
    fn interface_data(&self, x: &Point, t: f64, n_f: &Vec2) -> InterfaceData;
    fn initial_pressure(&self, x: &Point) -> f64;
    fn initial_displacement(&self, x: &Point) -> Vec2;
    /// Closed-form solution, when known.
    fn exact(&self) -> Option<&ManufacturedCase> {
        None
    }
}
