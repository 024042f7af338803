//! Backward-Euler discretization of the coupled system.
//!
//! Rows are ordered momentum-f, mass-f, Darcy, mass-p, elasticity,
//! multiplier, matching the field blocks of [`DofMap`]. The operator splits
//! into a steady part `A_s` and a rate part `A_d` acting on the
//! time-differentiated unknowns (displacement and Darcy pressure), so that a
//! step solves `(A_s + A_d / dt) x^n = F(t_n) + (A_d / dt) x^{n-1}`.

pub mod forms;
mod init;
mod load;

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::model::{PhysicalParams, SourceData};
use crate::spaces::{DofMap, Field};
use crate::sparse::{CscMatrix, Triplets};

pub use forms::{
    assemble_a_bjs, assemble_a_f, assemble_a_p_d, assemble_a_p_e, assemble_b_f, assemble_b_gamma,
    assemble_b_p, assemble_pressure_mass,
};
pub use init::{apply_initial_conditions, initial_state, interpolate_exact, InitialFields};
pub use load::{assemble_load, boundary_values};

/// Coefficient vectors of all six fields at one time, in full numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub values: Vec<f64>,
}

impl SystemState {
    pub fn zeros(dofs: &DofMap, t: f64) -> Self {
        SystemState {
            t,
            values: vec![0.0; dofs.num_dofs()],
        }
    }

    pub fn field<'a>(&'a self, dofs: &DofMap, field: Field) -> &'a [f64] {
        &self.values[dofs.range(field)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Reduced linear system over the free dofs.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub matrix: CscMatrix,
    pub rhs: Vec<f64>,
    pub blocks: [Range<usize>; 6],
}

impl BlockSystem {
    pub fn dimension(&self) -> usize {
        self.rhs.len()
    }
}

/// Uniform time partition of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t_final: f64,
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Grid with step `dt`; `T / dt` must be an integer up to rounding.
    pub fn new(t_final: f64, dt: f64) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need T > 0 and dt > 0, got T = {t_final}, dt = {dt}"
            )));
        }
        let ratio = t_final / dt;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-8 * ratio.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "T / dt = {ratio} is not a positive integer"
            )));
        }
        Ok(TimeGrid {
            t_final,
            dt: t_final / steps,
            steps: steps as usize,
        })
    }

    pub fn with_steps(t_final: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need T > 0 and at least one step, got T = {t_final}, N = {steps}"
            )));
        }
        Ok(TimeGrid {
            t_final,
            dt: t_final / steps as f64,
            steps,
        })
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.t_final
        } else {
            self.t_final * n as f64 / self.steps as f64
        }
    }
}

/// Steady and rate parts of the discrete operator, in full numbering.
#[derive(Debug, Clone)]
pub struct Operators {
    pub steady: CscMatrix,
    pub rate: CscMatrix,
}

pub fn assemble_operators(
    mesh: &Mesh,
    dofs: &DofMap,
    params: &PhysicalParams,
) -> Result<Operators> {
    params.validate()?;
    let n = dofs.num_dofs();
    let mut steady = Triplets::new(n, n);
    let mut rate = Triplets::new(n, n);
    let is = |d: usize, f: Field| dofs.field_of(d) == f;

    steady.extend_scaled(&assemble_a_f(mesh, dofs, params), 1.0);
    steady.extend_scaled(&assemble_a_p_d(mesh, dofs, params)?, 1.0);
    steady.extend_scaled(&assemble_a_p_e(mesh, dofs, params), 1.0);

    for &(w, v, b) in &assemble_b_f(mesh, dofs).entries {
        steady.push(v, w, b);
        steady.push(w, v, -b);
    }
    let (b_d, b_e) = assemble_b_p(mesh, dofs);
    for &(w, v, b) in &b_d.entries {
        steady.push(v, w, b);
        steady.push(w, v, -b);
    }
    if params.alpha != 0.0 {
        for &(w, xi, b) in &b_e.entries {
            steady.push(xi, w, params.alpha * b);
            rate.push(w, xi, -params.alpha * b);
        }
    }
    if params.s0 != 0.0 {
        rate.extend_scaled(&assemble_pressure_mass(mesh, dofs), params.s0);
    }
    for &(r, c, v) in &assemble_a_bjs(mesh, dofs, params)?.entries {
        if is(c, Field::Displacement) {
            rate.push(r, c, v);
        } else {
            steady.push(r, c, v);
        }
    }
    for &(m, c, v) in &assemble_b_gamma(mesh, dofs)?.entries {
        steady.push(c, m, v);
        if is(c, Field::Displacement) {
            rate.push(m, c, v);
        } else {
            steady.push(m, c, v);
        }
    }
    Ok(Operators {
        steady: steady.to_csc(),
        rate: rate.to_csc(),
    })
}

/// Row and column selection of a subset of the full dofs.
#[derive(Debug, Clone)]
struct Restriction {
    keep: Vec<Option<usize>>,
    dropped: Vec<Option<usize>>,
    kept: Vec<usize>,
}

impl Restriction {
    fn new(mask: &[bool]) -> Self {
        let mut keep = vec![None; mask.len()];
        let mut dropped = vec![None; mask.len()];
        let mut kept = Vec::new();
        for (i, &m) in mask.iter().enumerate() {
            if m {
                dropped[i] = Some(i);
            } else {
                keep[i] = Some(kept.len());
                kept.push(i);
            }
        }
        Restriction {
            keep,
            dropped,
            kept,
        }
    }

    /// Kept block of `m` and its coupling to the dropped columns.
    fn split(&self, m: &CscMatrix) -> (CscMatrix, CscMatrix) {
        let n = self.kept.len();
        (
            m.select(&self.keep, n, &self.keep, n),
            m.select(&self.keep, n, &self.dropped, m.n_cols),
        )
    }

    /// `rhs[kept] - coupling * fixed`.
    fn reduce_rhs(&self, rhs: &[f64], coupling: &CscMatrix, fixed: &[f64]) -> Vec<f64> {
        let lift = coupling.mul_vec(fixed);
        self.kept
            .iter()
            .enumerate()
            .map(|(i, &d)| rhs[d] - lift[i])
            .collect()
    }

    fn expand(&self, x: &[f64], fixed: &[f64]) -> Vec<f64> {
        let mut out = fixed.to_vec();
        for (i, &d) in self.kept.iter().enumerate() {
            out[d] = x[i];
        }
        out
    }
}

/// Backward-Euler step matrix for a fixed mesh and step size, reduced to the
/// free dofs.
#[derive(Debug, Clone)]
pub struct StepOperator {
    pub dt: f64,
    pub operators: Operators,
    pub matrix: CscMatrix,
    coupling: CscMatrix,
    restriction: Restriction,
    blocks: [Range<usize>; 6],
}

impl StepOperator {
    pub fn new(mesh: &Mesh, dofs: &DofMap, params: &PhysicalParams, dt: f64) -> Result<Self> {
        let operators = assemble_operators(mesh, dofs, params)?;
        Self::from_operators(dofs, operators, dt)
    }

    pub fn from_operators(dofs: &DofMap, operators: Operators, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let full = operators.steady.combine(1.0, &operators.rate, 1.0 / dt);
        let restriction = Restriction::new(dofs.constrained());
        let (matrix, coupling) = restriction.split(&full);
        let blocks = Field::ALL.map(|f| dofs.free_range(f));
        Ok(StepOperator {
            dt,
            operators,
            matrix,
            coupling,
            restriction,
            blocks,
        })
    }

    /// Right-hand side of the step from `previous` to `previous.t + dt`, given
    /// the load and boundary values at the new time.
    pub fn system(
        &self,
        load: &[f64],
        boundary: &[f64],
        previous: &SystemState,
    ) -> Result<BlockSystem> {
        let n = self.operators.steady.n_rows;
        for got in [load.len(), boundary.len(), previous.values.len()] {
            if got != n {
                return Err(Error::DimensionMismatch { expected: n, got });
            }
        }
        let rhs = self.rhs(load, boundary, previous);
        Ok(BlockSystem {
            matrix: self.matrix.clone(),
            rhs,
            blocks: self.blocks.clone(),
        })
    }

    /// Right-hand side only, for reuse with a stored factorization.
    pub fn rhs(&self, load: &[f64], boundary: &[f64], previous: &SystemState) -> Vec<f64> {
        let memory = self.operators.rate.mul_vec(&previous.values);
        let rhs_full: Vec<f64> = load
            .iter()
            .zip(&memory)
            .map(|(f, m)| f + m / self.dt)
            .collect();
        self.restriction
            .reduce_rhs(&rhs_full, &self.coupling, boundary)
    }

    /// Full state from a free solution and the boundary values.
    pub fn expand(&self, x: &[f64], boundary: &[f64], t: f64) -> SystemState {
        SystemState {
            t,
            values: self.restriction.expand(x, boundary),
        }
    }
}

/// Assembles the reduced backward-Euler system for one step.
pub fn assemble_step_system(
    mesh: &Mesh,
    dofs: &DofMap,
    data: &dyn SourceData,
    previous: &SystemState,
    t_new: f64,
    dt: f64,
) -> Result<BlockSystem> {
    if previous.values.len() != dofs.num_dofs() {
        return Err(Error::DimensionMismatch {
            expected: dofs.num_dofs(),
            got: previous.values.len(),
        });
    }
    let op = StepOperator::new(mesh, dofs, data.params(), dt)?;
    let load = assemble_load(mesh, dofs, data, t_new)?;
    let boundary = boundary_values(mesh, dofs, data, t_new)?;
    op.system(&load, &boundary, previous)
}

/// Steady subsystem with the time-differentiated fields held fixed: rows and
/// columns of the displacement, the Darcy pressure and the boundary dofs are
/// eliminated.
pub(crate) fn stationary_system(
    dofs: &DofMap,
    operators: &Operators,
    load: &[f64],
    fixed: &[f64],
) -> (CscMatrix, Vec<f64>, impl Fn(&[f64]) -> Vec<f64>) {
    let mask: Vec<bool> = (0..dofs.num_dofs())
        .map(|d| {
            dofs.is_constrained(d)
                || matches!(dofs.field_of(d), Field::Displacement | Field::DarcyPressure)
        })
        .collect();
    let restriction = Restriction::new(&mask);
    let (matrix, coupling) = restriction.split(&operators.steady);
    let rhs = restriction.reduce_rhs(load, &coupling, fixed);
    let fixed = fixed.to_vec();
    (matrix, rhs, move |x: &[f64]| restriction.expand(x, &fixed))
}
