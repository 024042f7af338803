//! Error norms against closed-form solutions, convergence rates and
//! effectivity indices.

use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{initial_state, InitialFields, SystemState, TimeGrid};
use crate::error::{Error, Result};
use crate::estimator::{estimate_step, EstimatorOptions, EstimatorReport};
use crate::mesh::{Mesh, Subdomain};
use crate::model::ManufacturedCase;
use crate::quadrature::{EdgeRule, QuadratureRule};
use crate::simulation::simulate;
use crate::spaces::{interface_sides, DofMap, FieldView};

/// Error components, in the order of [`ErrorNorms::components`].
pub const COMPONENTS: [&str; 6] = ["e_f", "e_p", "e_s", "e_pp", "e_fp", "e_lambda"];

/// Which components use the maximum over time instead of the L2 norm.
const SUP_IN_TIME: [bool; 6] = [false, false, true, true, false, false];

/// Space-time error norms:
///
/// * `e_f`: Stokes velocity, `L2(0,T; H1)`
/// * `e_p`: Darcy velocity, `L2(0,T; L2)`
/// * `e_s`: displacement, `Linf(0,T; H1)`
/// * `e_pp`: Darcy pressure, `Linf(0,T; L2)`
/// * `e_fp`: Stokes pressure, `L2(0,T; L2)`
/// * `e_lambda`: multiplier, `L2(0,T)` of `(sum_E h_E |lambda - lambda_h|^2_E)^(1/2)`
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ErrorNorms {
    pub e_f: f64,
    pub e_p: f64,
    pub e_s: f64,
    pub e_pp: f64,
    pub e_fp: f64,
    pub e_lambda: f64,
}

impl ErrorNorms {
    pub fn components(&self) -> [f64; 6] {
        [
            self.e_f,
            self.e_p,
            self.e_s,
            self.e_pp,
            self.e_fp,
            self.e_lambda,
        ]
    }

    fn from_components(c: [f64; 6]) -> Self {
        ErrorNorms {
            e_f: c[0],
            e_p: c[1],
            e_s: c[2],
            e_pp: c[3],
            e_fp: c[4],
            e_lambda: c[5],
        }
    }

    /// Root sum of squares of the components.
    pub fn combined(&self) -> f64 {
        self.components().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Squared spatial error norms of one state, per cell. Interface edge
/// terms are charged to both incident cells in the per-cell table and once
/// in the totals.
#[derive(Debug, Clone, PartialEq)]
pub struct StepErrors {
    pub cells: Vec<[f64; 6]>,
    pub totals: [f64; 6],
}

pub fn step_errors(
    mesh: &Mesh,
    dofs: &DofMap,
    case: &ManufacturedCase,
    state: &SystemState,
) -> Result<StepErrors> {
    let view = FieldView::new(mesh, dofs, &state.values)?;
    let t = state.t;
    let rule = QuadratureRule::degree7();
    let mut cells: Vec<[f64; 6]> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|k| -> Result<[f64; 6]> {
            let mut e = [0.0; 6];
            match mesh.subdomain(k) {
                Subdomain::Fluid => {
                    let cell = view.fluid_cell(k)?;
                    for (b, w) in rule.points.iter().zip(&rule.weights) {
                        let x = cell.geom.point(*b);
                        let s = w * cell.geom.area;
                        let u = case.fluid_velocity(&x, t);
                        let (uh, gh) = cell.velocity(b);
                        e[0] += s * ((u.value - uh).norm_squared() + (u.grad - gh).norm_squared());
                        e[4] += s * (case.fluid_pressure(&x, t).value - cell.pressure(b).0).powi(2);
                    }
                }
                Subdomain::Porous => {
                    let cell = view.porous_cell(k)?;
                    for (b, w) in rule.points.iter().zip(&rule.weights) {
                        let x = cell.geom.point(*b);
                        let s = w * cell.geom.area;
                        let (u, _) = case.darcy_velocity(&x, t);
                        e[1] += s * (u - cell.darcy(b).0).norm_squared();
                        let eta = case.displacement(&x, t);
                        let (eh, gh) = cell.displacement(b);
                        e[2] +=
                            s * ((eta.value - eh).norm_squared() + (eta.grad - gh).norm_squared());
                        e[3] += s * (case.porous_pressure(&x, t).value - cell.pressure).powi(2);
                    }
                }
            }
            Ok(e)
        })
        .collect::<Result<_>>()?;
    let mut totals = [0.0; 6];
    for c in &cells {
        for i in 0..5 {
            totals[i] += c[i];
        }
    }
    let edge_rule = EdgeRule::gauss3();
    for e in mesh.interface_edges() {
        let (kf, kp, n_f) = interface_sides(mesh, e).expect("interface edge");
        let lh = view.multiplier(e)?;
        let len = mesh.edge_length(e);
        let v: f64 = edge_rule
            .points
            .iter()
            .zip(&edge_rule.weights)
            .map(|(&s, w)| w * (case.multiplier(&mesh.edge_point(e, s), t, &n_f) - lh).powi(2))
            .sum::<f64>()
            * len
            * len;
        totals[5] += v;
        cells[kf][5] += v;
        cells[kp][5] += v;
    }
    Ok(StepErrors { cells, totals })
}

/// Time aggregation of [`StepErrors`] over the steps of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorAccumulator {
    squared: [f64; 6],
    cells: Vec<[f64; 6]>,
    steps: usize,
}

impl ErrorAccumulator {
    pub fn new(num_cells: usize) -> Self {
        ErrorAccumulator {
            squared: [0.0; 6],
            cells: vec![[0.0; 6]; num_cells],
            steps: 0,
        }
    }

    /// Adds a step of length `dt` (right-endpoint rule for the time
    /// integrals, maximum for the sup norms).
    pub fn add_step(&mut self, errors: &StepErrors, dt: f64) -> Result<()> {
        if errors.cells.len() != self.cells.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cells.len(),
                got: errors.cells.len(),
            });
        }
        let fold = |acc: &mut f64, v: f64, sup: bool| {
            if sup {
                *acc = acc.max(v);
            } else {
                *acc += dt * v;
            }
        };
        for i in 0..6 {
            fold(&mut self.squared[i], errors.totals[i], SUP_IN_TIME[i]);
        }
        for (acc, c) in self.cells.iter_mut().zip(&errors.cells) {
            for i in 0..6 {
                fold(&mut acc[i], c[i], SUP_IN_TIME[i]);
            }
        }
        self.steps += 1;
        Ok(())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn norms(&self) -> ErrorNorms {
        ErrorNorms::from_components(self.squared.map(f64::sqrt))
    }

    /// Combined error restricted to each cell.
    pub fn local_errors(&self) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| c.iter().sum::<f64>().sqrt())
            .collect()
    }
}

/// Error norms of a stored history; `history[n]` is the state at step `n`
/// (the initial state at index 0 is not used).
pub fn error_norms(
    history: &[SystemState],
    case: &ManufacturedCase,
    mesh: &Mesh,
    dofs: &DofMap,
    grid: &TimeGrid,
) -> Result<ErrorNorms> {
    if history.len() != grid.steps + 1 {
        return Err(Error::InvalidParameter(format!(
            "history has {} states, the time grid needs {}",
            history.len(),
            grid.steps + 1
        )));
    }
    let mut acc = ErrorAccumulator::new(mesh.num_cells());
    for state in &history[1..] {
        acc.add_step(&step_errors(mesh, dofs, case, state)?, grid.dt)?;
    }
    Ok(acc.norms())
}

/// Outcome of one run with a closed-form solution.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dofs: usize,
    pub free_dofs: usize,
    pub cells: usize,
    pub h: f64,
    pub errors: ErrorNorms,
    pub local_errors: Vec<f64>,
    pub estimator: EstimatorReport,
    pub final_state: SystemState,
    pub wall_ms: f64,
}

impl RunSummary {
    pub fn theta(&self) -> f64 {
        self.estimator.global().0
    }

    pub fn zeta(&self) -> f64 {
        self.estimator.global().1
    }

    /// `Theta / error`.
    pub fn effectivity(&self) -> Ratio {
        Ratio::of(self.theta(), self.errors.combined())
    }

    /// Smallest `C` with `error <= C (Theta + zeta)`.
    pub fn reliability_constant(&self) -> Ratio {
        let (theta, zeta) = self.estimator.global();
        Ratio::of(self.errors.combined(), theta + zeta)
    }

    /// `max_K Theta_K / (error on w_K + zeta on w_K)`, with `w_K` the cell
    /// and its edge neighbours.
    pub fn efficiency_ratio(&self, mesh: &Mesh) -> Ratio {
        let theta2 = self.estimator.theta2();
        let mut worst = Ratio::undefined();
        for k in 0..mesh.num_cells() {
            let patch = patch(mesh, k);
            let err: f64 = patch
                .iter()
                .map(|&j| self.local_errors[j].powi(2))
                .sum::<f64>()
                .sqrt();
            let zeta: f64 = patch
                .iter()
                .map(|&j| self.estimator.cells[j].zeta2)
                .sum::<f64>()
                .sqrt();
            let r = Ratio::of(theta2[k].sqrt(), err + zeta);
            if r.defined && (!worst.defined || r.value > worst.value) {
                worst = r;
            }
        }
        worst
    }
}

/// Cell and its edge neighbours.
pub fn patch(mesh: &Mesh, k: usize) -> Vec<usize> {
    let mut out = vec![k];
    for e in mesh.cell_edges(k) {
        let edge = mesh.edge(e);
        for j in std::iter::once(edge.cells.0).chain(edge.cells.1) {
            if j != k {
                out.push(j);
            }
        }
    }
    out
}

/// A quotient reported as NaN with a flag when the denominator vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratio {
    pub value: f64,
    pub defined: bool,
}

impl Ratio {
    pub fn of(num: f64, den: f64) -> Self {
        let value = num / den;
        if den > 0.0 && value.is_finite() {
            Ratio {
                value,
                defined: true,
            }
        } else {
            Ratio::undefined()
        }
    }

    pub fn undefined() -> Self {
        Ratio {
            value: f64::NAN,
            defined: false,
        }
    }
}

/// Integrates a manufactured case on `mesh`, accumulating errors and the
/// estimator.
pub fn run_case(
    mesh: &Mesh,
    case: &ManufacturedCase,
    grid: &TimeGrid,
    options: EstimatorOptions,
    mut on_step: impl FnMut(&crate::simulation::Step<'_>) -> Result<()>,
) -> Result<RunSummary> {
    let start = Instant::now();
    let dofs = DofMap::new(mesh);
    let init = initial_state(mesh, &dofs, case, InitialFields::Interpolate)?;
    let mut errors = ErrorAccumulator::new(mesh.num_cells());
    let mut estimator = EstimatorReport::new(mesh);
    let final_state = simulate(mesh, &dofs, case, grid, init, |step| {
        estimator.accumulate_step(&estimate_step(
            mesh,
            &dofs,
            case,
            step.previous,
            step.current,
            options,
        )?)?;
        errors.add_step(&step_errors(mesh, &dofs, case, step.current)?, grid.dt)?;
        on_step(&step)
    })?;
    Ok(RunSummary {
        dofs: dofs.num_dofs(),
        free_dofs: dofs.num_free(),
        cells: mesh.num_cells(),
        h: mesh.h_max(),
        errors: errors.norms(),
        local_errors: errors.local_errors(),
        estimator,
        final_state,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Observed rate `log(e_0 / e_1) / log(h_0 / h_1)`, undefined when either
/// error vanishes.
pub fn observed_rate(e0: f64, e1: f64, h0: f64, h1: f64) -> Ratio {
    if e0 > 0.0 && e1 > 0.0 && h0 > 0.0 && h1 > 0.0 && h0 != h1 {
        Ratio::of((e0 / e1).ln(), (h0 / h1).ln())
    } else {
        Ratio::undefined()
    }
}

/// One mesh of a study.
#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub level: usize,
    pub h: f64,
    pub cells: usize,
    pub dofs: usize,
    pub steps: usize,
    pub errors: ErrorNorms,
    pub combined: f64,
    pub theta: f64,
    pub zeta: f64,
    pub effectivity: Ratio,
    pub reliability: Ratio,
    pub efficiency: Ratio,
    /// Rates against the previous row, per component.
    pub rates: Option<[Ratio; 6]>,
    pub combined_rate: Option<Ratio>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

/// Results of a refinement sweep.
#[derive(Debug, Clone, Serialize)]
pub struct StudyTable {
    pub case: String,
    pub nested: bool,
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    /// Least-squares slope of `log(combined)` against `log(h)`.
    pub fn fitted_rate(&self) -> Ratio {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.combined > 0.0)
            .map(|r| (r.h.ln(), r.combined.ln()))
            .collect();
        if pts.len() < 2 {
            return Ratio::undefined();
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Ratio::of(sxy, sxx)
    }

    /// Rate of the combined norm between the last two rows.
    pub fn final_rate(&self) -> Ratio {
        self.rows
            .last()
            .and_then(|r| r.combined_rate)
            .unwrap_or_else(Ratio::undefined)
    }

    /// `max / min` of a defined per-row ratio.
    pub fn spread(&self, pick: impl Fn(&StudyRow) -> Ratio) -> Ratio {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .map(&pick)
            .filter(|r| r.defined)
            .map(|r| r.value)
            .collect();
        if vals.len() != self.rows.len() || vals.is_empty() {
            return Ratio::undefined();
        }
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        Ratio::of(max, min)
    }

    pub fn write_convergence_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "level".to_string(),
            "h".into(),
            "cells".into(),
            "dofs".into(),
            "steps".into(),
        ];
        for c in COMPONENTS {
            header.push(c.into());
            header.push(format!("rate_{c}"));
        }
        header.extend(["combined".into(), "rate_combined".into()]);
        w.write_record(&header).map_err(csv_error)?;
        for r in &self.rows {
            let mut rec = vec![
                r.level.to_string(),
                r.h.to_string(),
                r.cells.to_string(),
                r.dofs.to_string(),
                r.steps.to_string(),
            ];
            for (i, e) in r.errors.components().iter().enumerate() {
                rec.push(e.to_string());
                rec.push(r.rates.map(|x| x[i].value.to_string()).unwrap_or_default());
            }
            rec.push(r.combined.to_string());
            rec.push(
                r.combined_rate
                    .map(|x| x.value.to_string())
                    .unwrap_or_default(),
            );
            w.write_record(&rec).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_effectivity_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "level",
            "h",
            "theta",
            "zeta",
            "error",
            "effectivity",
            "reliability",
            "efficiency",
        ])
        .map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                r.level.to_string(),
                r.h.to_string(),
                r.theta.to_string(),
                r.zeta.to_string(),
                r.combined.to_string(),
                r.effectivity.value.to_string(),
                r.reliability.value.to_string(),
                r.efficiency.value.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// True when every vertex of each mesh is a vertex of the next one.
pub fn is_nested(meshes: &[Mesh]) -> bool {
    let key = |p: &crate::mesh::Point| ((p.x * 1e12).round() as i64, (p.y * 1e12).round() as i64);
    meshes.windows(2).all(|w| {
        let fine: HashSet<_> = w[1].vertices().iter().map(key).collect();
        w[0].vertices().iter().all(|p| fine.contains(&key(p)))
    })
}

/// Runs the case on every mesh with its time grid and tabulates errors,
/// estimator, effectivity and rates. Non-nested sequences are run and
/// flagged.
pub fn convergence_study(
    case: &ManufacturedCase,
    meshes: &[Mesh],
    grids: &[TimeGrid],
    options: EstimatorOptions,
) -> Result<StudyTable> {
    if meshes.len() != grids.len() || meshes.is_empty() {
        return Err(Error::InvalidParameter(
            "need one time grid per mesh".into(),
        ));
    }
    let mut rows: Vec<StudyRow> = Vec::with_capacity(meshes.len());
    for (level, (mesh, grid)) in meshes.iter().zip(grids).enumerate() {
        let run = run_case(mesh, case, grid, options, |_| Ok(()))?;
        let combined = run.errors.combined();
        let (rates, combined_rate) = match rows.last() {
            Some(prev) => {
                let mut r = [Ratio::undefined(); 6];
                for (i, ri) in r.iter_mut().enumerate() {
                    *ri = observed_rate(
                        prev.errors.components()[i],
                        run.errors.components()[i],
                        prev.h,
                        run.h,
                    );
                }
                (
                    Some(r),
                    Some(observed_rate(prev.combined, combined, prev.h, run.h)),
                )
            }
            None => (None, None),
        };
        rows.push(StudyRow {
            level,
            h: run.h,
            cells: run.cells,
            dofs: run.dofs,
            steps: grid.steps,
            errors: run.errors,
            combined,
            theta: run.theta(),
            zeta: run.zeta(),
            effectivity: run.effectivity(),
            reliability: run.reliability_constant(),
            efficiency: run.efficiency_ratio(mesh),
            rates,
            combined_rate,
            wall_ms: Some(run.wall_ms),
        });
    }
    Ok(StudyTable {
        case: case.name().to_string(),
        nested: is_nested(meshes),
        rows,
    })
}

/// Uniform study on the rectangle: `nx0 * 2^level` cells per side and
/// `steps0 * 4^level` time steps over `[0, T]`.
pub fn uniform_study(
    case: &ManufacturedCase,
    domain: &crate::mesh::RectangleDomain,
    nx0: usize,
    levels: usize,
    t_final: f64,
    steps0: usize,
    options: EstimatorOptions,
) -> Result<StudyTable> {
    let mut meshes = Vec::with_capacity(levels);
    let mut grids = Vec::with_capacity(levels);
    for l in 0..levels {
        let n = nx0 << l;
        meshes.push(crate::mesh::build_reference_geometry(domain, n, n)?);
        grids.push(TimeGrid::with_steps(
            t_final,
            steps0 * 4usize.pow(l as u32),
        )?);
    }
    convergence_study(case, &meshes, &grids, options)
}

/// Alias for [`convergence_study`]: the table carries the effectivity
/// columns.
pub fn effectivity_study(
    case: &ManufacturedCase,
    meshes: &[Mesh],
    grids: &[TimeGrid],
    options: EstimatorOptions,
) -> Result<StudyTable> {
    convergence_study(case, meshes, grids, options)
}
