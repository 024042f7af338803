//! Interpolation of closed-form fields and initial states.

use serde::{Deserialize, Serialize};

use super::{assemble_load, assemble_operators, boundary_values, stationary_system, SystemState};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point, Subdomain};
use crate::model::{ManufacturedCase, SourceData};
use crate::quadrature::{EdgeRule, QuadratureRule};
use crate::spaces::{edge_normal, interface_sides, DofMap, Field};

/// How the fields without a time derivative are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialFields {
    /// Canonical interpolants of the closed-form solution.
    Interpolate,
    /// One stationary solve with the displacement and Darcy pressure fixed.
    Stationary,
}

/// Cell mean of `f` (the P0 L2 projection).
fn cell_mean(mesh: &Mesh, k: usize, f: impl Fn(&Point) -> f64) -> f64 {
    let rule = QuadratureRule::degree7();
    let geom = mesh.geometry(k);
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(b, w)| w * f(&geom.point(*b)))
        .sum()
}

fn edge_mean(mesh: &Mesh, e: usize, f: impl Fn(&Point) -> f64) -> f64 {
    let rule = EdgeRule::gauss3();
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(&s, w)| w * f(&mesh.edge_point(e, s)))
        .sum()
}

fn set_projections(mesh: &Mesh, dofs: &DofMap, data: &dyn SourceData, values: &mut [f64]) {
    let pp = dofs.range(Field::DarcyPressure).start;
    let eta = dofs.range(Field::Displacement).start;
    for (i, k) in mesh.cells_in(Subdomain::Porous).enumerate() {
        values[pp + i] = cell_mean(mesh, k, |x| data.initial_pressure(x));
    }
    for v in 0..mesh.num_vertices() {
        if let Some(n) = dofs.porous_vertex_index(v) {
            let d = data.initial_displacement(&mesh.vertex(v));
            values[eta + 2 * n] = d.x;
            values[eta + 2 * n + 1] = d.y;
        }
    }
}

/// Canonical interpolant of a closed-form solution at time `t`: nodal for
/// the continuous fields, edge fluxes for RT0, cell and edge means for the
/// piecewise constants.
pub fn interpolate_exact(
    mesh: &Mesh,
    dofs: &DofMap,
    case: &ManufacturedCase,
    t: f64,
) -> SystemState {
    let mut values = vec![0.0; dofs.num_dofs()];
    let uf = dofs.range(Field::StokesVelocity).start;
    let pf = dofs.range(Field::StokesPressure).start;
    let eta = dofs.range(Field::Displacement).start;
    let pp = dofs.range(Field::DarcyPressure).start;
    for v in 0..mesh.num_vertices() {
        let x = mesh.vertex(v);
        if let Some(n) = dofs.fluid_vertex_node(v) {
            let u = case.fluid_velocity(&x, t).value;
            values[uf + 2 * n] = u.x;
            values[uf + 2 * n + 1] = u.y;
            values[pf + n] = case.fluid_pressure(&x, t).value;
        }
        if let Some(n) = dofs.porous_vertex_index(v) {
            let d = case.displacement(&x, t).value;
            values[eta + 2 * n] = d.x;
            values[eta + 2 * n + 1] = d.y;
        }
    }
    for e in 0..mesh.num_edges() {
        if let Some(n) = dofs.fluid_edge_node(e) {
            let u = case.fluid_velocity(&mesh.edge_point(e, 0.5), t).value;
            values[uf + 2 * n] = u.x;
            values[uf + 2 * n + 1] = u.y;
        }
        if let Some(d) = dofs.darcy_edge_dof(e) {
            let n = edge_normal(mesh, e);
            let len = mesh.edge_length(e);
            values[d] = len * edge_mean(mesh, e, |x| case.darcy_velocity(x, t).0.dot(&n));
        }
        if let (Some(d), Some((_, _, n_f))) = (dofs.multiplier_dof(e), interface_sides(mesh, e)) {
            values[d] = edge_mean(mesh, e, |x| case.multiplier(x, t, &n_f));
        }
    }
    for (i, k) in mesh.cells_in(Subdomain::Porous).enumerate() {
        values[pp + i] = cell_mean(mesh, k, |x| case.porous_pressure(x, t).value);
    }
    SystemState { t, values }
}

/// Initial state at `t = 0`. The Darcy pressure is the cell mean and the
/// displacement the nodal interpolant of the initial data; the remaining
/// fields follow `mode`.
pub fn initial_state(
    mesh: &Mesh,
    dofs: &DofMap,
    data: &dyn SourceData,
    mode: InitialFields,
) -> Result<SystemState> {
    let mut state = match mode {
        InitialFields::Interpolate => {
            let case = data.exact().ok_or_else(|| {
                Error::InvalidParameter(
                    "interpolated initial fields need a closed-form solution".into(),
                )
            })?;
            interpolate_exact(mesh, dofs, case, 0.0)
        }
        InitialFields::Stationary => {
            let operators = assemble_operators(mesh, dofs, data.params())?;
            let load = assemble_load(mesh, dofs, data, 0.0)?;
            let mut fixed = boundary_values(mesh, dofs, data, 0.0)?;
            set_projections(mesh, dofs, data, &mut fixed);
            let (matrix, rhs, expand) = stationary_system(dofs, &operators, &load, &fixed);
            let x = if rhs.is_empty() {
                Vec::new()
            } else {
                crate::solver::solve(&matrix, &rhs)?.0
            };
            SystemState {
                t: 0.0,
                values: expand(&x),
            }
        }
    };
    set_projections(mesh, dofs, data, &mut state.values);
    Ok(state)
}

/// Initial state using interpolation when a closed-form solution is known
/// and a stationary solve otherwise.
pub fn apply_initial_conditions(
    mesh: &Mesh,
    dofs: &DofMap,
    data: &dyn SourceData,
) -> Result<SystemState> {
    let mode = if data.exact().is_some() {
        InitialFields::Interpolate
    } else {
        InitialFields::Stationary
    };
    initial_state(mesh, dofs, data, mode)
}
