//! Adaptive finite elements for the coupled Stokes/Biot problem.
//!
//! A free fluid (Stokes) region and a poroelastic (Biot) region share an
//! interface on which mass conservation, the normal stress balance and the
//! Beavers-Joseph-Saffman slip law hold. Normal flux continuity is enforced
//! by a piecewise-constant Lagrange multiplier. Time is discretized by
//! backward Euler; a residual a posteriori estimator drives newest-vertex
//! bisection with Dörfler marking.

pub mod adapt;
pub mod assembly;
pub mod error;
pub mod estimator;
pub mod mesh;
pub mod model;
pub mod output;
pub mod quadrature;
pub mod simulation;
pub mod solver;
pub mod spaces;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
