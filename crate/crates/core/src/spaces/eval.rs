use nalgebra::Matrix2;

use super::basis::{p2_gradients, p2_hessians, p2_values, rt0_divergence, rt0_values};
use super::{edge_signs, DofMap};
use crate::error::{Error, Result};
use crate::mesh::{CellGeometry, Mesh, Subdomain, Vec2};
use crate::quadrature::EdgeRule;

/// Read access to the discrete fields of a full-numbering coefficient
/// vector.
#[derive(Debug, Clone, Copy)]
pub struct FieldView<'a> {
    pub mesh: &'a Mesh,
    pub dofs: &'a DofMap,
    pub values: &'a [f64],
}

/// Local coefficients of the fluid fields on one cell.
#[derive(Debug, Clone)]
pub struct FluidCell {
    pub geom: CellGeometry,
    /// Velocity coefficients per component and quadratic node.
    pub u: [[f64; 6]; 2],
    pub p: [f64; 3],
}

/// Local coefficients of the porous fields on one cell.
#[derive(Debug, Clone)]
pub struct PorousCell {
    pub geom: CellGeometry,
    /// RT0 coefficients with respect to the local outward-oriented basis.
    pub flux: [f64; 3],
    pub pressure: f64,
    /// Displacement coefficients per component and vertex.
    pub eta: [[f64; 3]; 2],
}

impl<'a> FieldView<'a> {
    pub fn new(mesh: &'a Mesh, dofs: &'a DofMap, values: &'a [f64]) -> Result<Self> {
        if values.len() != dofs.num_dofs() {
            return Err(Error::DimensionMismatch {
                expected: dofs.num_dofs(),
                got: values.len(),
            });
        }
        Ok(FieldView { mesh, dofs, values })
    }

    fn require(&self, k: usize, sub: Subdomain) -> Result<()> {
        if k >= self.mesh.num_cells() {
            return Err(Error::Domain(format!("cell {k} out of range")));
        }
        if self.mesh.subdomain(k) != sub {
            return Err(Error::Domain(format!(
                "cell {k} is not a {} cell",
                sub.name()
            )));
        }
        Ok(())
    }

    pub fn fluid_cell(&self, k: usize) -> Result<FluidCell> {
        self.require(k, Subdomain::Fluid)?;
        let vd = self.dofs.fluid_velocity_dofs(self.mesh, k);
        let pd = self.dofs.fluid_pressure_dofs(self.mesh, k);
        let mut u = [[0.0; 6]; 2];
        for c in 0..2 {
            for i in 0..6 {
                u[c][i] = self.values[vd[c * 6 + i]];
            }
        }
        Ok(FluidCell {
            geom: self.mesh.geometry(k),
            u,
            p: pd.map(|d| self.values[d]),
        })
    }

    pub fn porous_cell(&self, k: usize) -> Result<PorousCell> {
        self.require(k, Subdomain::Porous)?;
        let fd = self.dofs.darcy_velocity_dofs(self.mesh, k);
        let signs = edge_signs(self.mesh, k);
        let ed = self.dofs.displacement_dofs(self.mesh, k);
        let mut eta = [[0.0; 3]; 2];
        for c in 0..2 {
            for i in 0..3 {
                eta[c][i] = self.values[ed[c * 3 + i]];
            }
        }
        Ok(PorousCell {
            geom: self.mesh.geometry(k),
            flux: [0, 1, 2].map(|i| signs[i] * self.values[fd[i]]),
            pressure: self.values[self.dofs.darcy_pressure_dof(k)],
            eta,
        })
    }

    pub fn multiplier(&self, e: usize) -> Result<f64> {
        self.dofs
            .multiplier_dof(e)
            .map(|d| self.values[d])
            .ok_or_else(|| Error::Domain(format!("edge {e} is not an interface edge")))
    }
}

impl FluidCell {
    /// Velocity and its gradient (`grad[(i, j)] = d u_i / d x_j`).
    pub fn velocity(&self, bary: &[f64; 3]) -> (Vec2, Matrix2<f64>) {
        let phi = p2_values(bary);
        let grad = p2_gradients(&self.geom, bary);
        let mut value = Vec2::zeros();
        let mut g = Matrix2::zeros();
        for c in 0..2 {
            for i in 0..6 {
                value[c] += self.u[c][i] * phi[i];
                g[(c, 0)] += self.u[c][i] * grad[i].x;
                g[(c, 1)] += self.u[c][i] * grad[i].y;
            }
        }
        (value, g)
    }

    /// Hessian of each velocity component (constant on the cell).
    pub fn velocity_hessians(&self) -> [Matrix2<f64>; 2] {
        let h = p2_hessians(&self.geom);
        [0, 1].map(|c| (0..6).map(|i| h[i] * self.u[c][i]).sum())
    }

    pub fn pressure(&self, bary: &[f64; 3]) -> (f64, Vec2) {
        let value = (0..3).map(|i| self.p[i] * bary[i]).sum();
        let grad = (0..3).map(|i| self.geom.grad_bary[i] * self.p[i]).sum();
        (value, grad)
    }
}

impl PorousCell {
    /// Darcy velocity and its divergence.
    pub fn darcy(&self, bary: &[f64; 3]) -> (Vec2, f64) {
        let x = self.geom.point(*bary);
        let phi = rt0_values(&self.geom, &x);
        let value = (0..3).map(|i| phi[i] * self.flux[i]).sum();
        (
            value,
            self.flux.iter().sum::<f64>() * rt0_divergence(&self.geom),
        )
    }

    /// Displacement and its gradient.
    pub fn displacement(&self, bary: &[f64; 3]) -> (Vec2, Matrix2<f64>) {
        let mut value = Vec2::zeros();
        let mut g = Matrix2::zeros();
        for c in 0..2 {
            for i in 0..3 {
                value[c] += self.eta[c][i] * bary[i];
                g[(c, 0)] += self.eta[c][i] * self.geom.grad_bary[i].x;
                g[(c, 1)] += self.eta[c][i] * self.geom.grad_bary[i].y;
            }
        }
        (value, g)
    }
}

/// Evaluates `f` at the edge quadrature points of edge `e`, seen from cell
/// `k`. Points follow the global edge direction, so traces from the two
/// incident cells line up pointwise.
pub fn trace_on_edge<T>(
    mesh: &Mesh,
    e: usize,
    k: usize,
    rule: &EdgeRule,
    mut f: impl FnMut(&[f64; 3]) -> T,
) -> Result<Vec<T>> {
    if e >= mesh.num_edges() || k >= mesh.num_cells() {
        return Err(Error::Domain(format!("edge {e} or cell {k} out of range")));
    }
    let edge = mesh.edge(e);
    if edge.cells.0 != k && edge.cells.1 != Some(k) {
        return Err(Error::Domain(format!(
            "cell {k} is not incident to edge {e}"
        )));
    }
    rule.points
        .iter()
        .map(|&s| mesh.edge_barycentric(k, e, s).map(|b| f(&b)))
        .collect()
}
