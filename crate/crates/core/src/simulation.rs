//! Time stepping on a fixed mesh.

use crate::assembly::{assemble_load, boundary_values, StepOperator, SystemState, TimeGrid};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::model::SourceData;
use crate::solver::{Factorization, SolveReport};
use crate::spaces::DofMap;

/// One completed time step.
#[derive(Debug, Clone, Copy)]
pub struct Step<'s> {
    /// Step number, starting at 1.
    pub index: usize,
    pub previous: &'s SystemState,
    pub current: &'s SystemState,
    pub report: &'s SolveReport,
}

/// Backward-Euler integrator holding the factored step matrix.
pub struct Integrator<'a> {
    mesh: &'a Mesh,
    dofs: &'a DofMap,
    data: &'a dyn SourceData,
    operator: StepOperator,
    factorization: Option<Factorization>,
}

impl<'a> Integrator<'a> {
    pub fn new(
        mesh: &'a Mesh,
        dofs: &'a DofMap,
        data: &'a dyn SourceData,
        dt: f64,
    ) -> Result<Self> {
        let operator = StepOperator::new(mesh, dofs, data.params(), dt)?;
        let factorization = if operator.matrix.n_rows == 0 {
            None
        } else {
            Some(Factorization::new(&operator.matrix)?)
        };
        Ok(Integrator {
            mesh,
            dofs,
            data,
            operator,
            factorization,
        })
    }

    pub fn operator(&self) -> &StepOperator {
        &self.operator
    }

    /// Advances `previous` by one step, to time `t` (nominally
    /// `previous.t + dt`).
    pub fn advance(&self, previous: &SystemState, t: f64) -> Result<(SystemState, SolveReport)> {
        if previous.values.len() != self.dofs.num_dofs() {
            return Err(Error::DimensionMismatch {
                expected: self.dofs.num_dofs(),
                got: previous.values.len(),
            });
        }
        let load = assemble_load(self.mesh, self.dofs, self.data, t)?;
        let boundary = boundary_values(self.mesh, self.dofs, self.data, t)?;
        let rhs = self.operator.rhs(&load, &boundary, previous);
        let (x, report) = match &self.factorization {
            Some(f) => f.solve(&rhs)?,
            None => (
                Vec::new(),
                SolveReport {
                    relative_residual: 0.0,
                    dimension: 0,
                    nnz: 0,
                    refinement_steps: 0,
                    wall_ms: 0.0,
                },
            ),
        };
        Ok((self.operator.expand(&x, &boundary, t), report))
    }
}

/// Integrates from `initial` over `grid`, calling `on_step` after each step,
/// and returns the final state.
pub fn simulate(
    mesh: &Mesh,
    dofs: &DofMap,
    data: &dyn SourceData,
    grid: &TimeGrid,
    initial: SystemState,
    mut on_step: impl FnMut(Step<'_>) -> Result<()>,
) -> Result<SystemState> {
    let integrator = Integrator::new(mesh, dofs, data, grid.dt)?;
    let mut state = initial;
    for n in 1..=grid.steps {
        let (next, report) = integrator.advance(&state, grid.time(n))?;
        on_step(Step {
            index: n,
            previous: &state,
            current: &next,
            report: &report,
        })?;
        state = next;
    }
    Ok(state)
}
