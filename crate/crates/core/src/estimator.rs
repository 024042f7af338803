//! Residual a posteriori error indicators.
//!
//! Each cell carries a table of squared, weighted spatial norms (see
//! [`Term`]); over a time history every entry keeps its running maximum.
//! The indicator parts are sums of table entries:
//!
//! * fluid: `h^2 |r_f|^2 + |r_div|^2 + sum_E h_E |J_f|^2`
//! * porous: `h^2 (|r_1|^2 + |r_2|^2 + |curl r_2|^2) + |r_p|^2 + sum_E h_E |J_p|^2`
//! * interface: `sum_E h_E (|R_1|^2 + |R_2|^2 + |R_3|^2 + |R_4|^2)`
//! * oscillation: `h^2 |f - P f|^2` for both force and source data
//!
//! Edge terms are charged to every incident cell.

use std::io::Write;

use nalgebra::{Matrix2, Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::SystemState;
use crate::error::{Error, Result};
use crate::mesh::{EdgeTag, Mesh, Subdomain, Vec2};
use crate::model::{interface_tangent, PhysicalParams, SourceData};
use crate::quadrature::{EdgeRule, QuadratureRule};
use crate::spaces::{interface_sides, trace_on_edge, DofMap, FieldView};

/// Variants of the estimator definition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// Use `+ div u_p` in the porous mass residual instead of `- div u_p`.
    pub strict_printed_signs: bool,
    /// Use `mu_p` instead of `mu` in the porous stress jump.
    pub porous_jump_uses_mu_p: bool,
}

/// Entries of the per-cell table of squared norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    FluidMomentum,
    FluidDivergence,
    FluidJump,
    PorousForce,
    DarcyLaw,
    DarcyCurl,
    PorousMass,
    PorousJump,
    InterfaceMass,
    InterfacePressure,
    InterfaceTraction,
    InterfaceSlip,
    FluidForceOscillation,
    FluidSourceOscillation,
    PorousForceOscillation,
    PorousSourceOscillation,
}

pub const NUM_TERMS: usize = 16;

impl Term {
    pub const ALL: [Term; NUM_TERMS] = [
        Term::FluidMomentum,
        Term::FluidDivergence,
        Term::FluidJump,
        Term::PorousForce,
        Term::DarcyLaw,
        Term::DarcyCurl,
        Term::PorousMass,
        Term::PorousJump,
        Term::InterfaceMass,
        Term::InterfacePressure,
        Term::InterfaceTraction,
        Term::InterfaceSlip,
        Term::FluidForceOscillation,
        Term::FluidSourceOscillation,
        Term::PorousForceOscillation,
        Term::PorousSourceOscillation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

pub type TermTable = [f64; NUM_TERMS];

/// Projection of the sources onto P0 (fluid) or P1 (porous) on one cell.
/// P1 data are stored as values at the vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectedCell {
    Fluid { force: Vec2, source: f64 },
    Porous { force: [Vec2; 3], source: [f64; 3] },
}

impl ProjectedCell {
    pub fn force(&self, bary: &[f64; 3]) -> Vec2 {
        match self {
            ProjectedCell::Fluid { force, .. } => *force,
            ProjectedCell::Porous { force, .. } => (0..3).map(|i| force[i] * bary[i]).sum(),
        }
    }

    pub fn source(&self, bary: &[f64; 3]) -> f64 {
        match self {
            ProjectedCell::Fluid { source, .. } => *source,
            ProjectedCell::Porous { source, .. } => (0..3).map(|i| source[i] * bary[i]).sum(),
        }
    }
}

/// Local L2 projection of the source data at time `t` for one cell.
pub fn project_cell(mesh: &Mesh, data: &dyn SourceData, k: usize, t: f64) -> ProjectedCell {
    let rule = QuadratureRule::degree7();
    let geom = mesh.geometry(k);
    match mesh.subdomain(k) {
        Subdomain::Fluid => {
            let mut force = Vec2::zeros();
            let mut source = 0.0;
            for (b, w) in rule.points.iter().zip(&rule.weights) {
                let x = geom.point(*b);
                force += data.fluid_force(&x, t) * *w;
                source += w * data.fluid_source(&x, t);
            }
            ProjectedCell::Fluid { force, source }
        }
        Subdomain::Porous => {
            // moments against the barycentric basis, divided by |K|
            let mut fx = Vector3::zeros();
            let mut fy = Vector3::zeros();
            let mut q = Vector3::zeros();
            for (b, w) in rule.points.iter().zip(&rule.weights) {
                let x = geom.point(*b);
                let f = data.porous_force(&x, t);
                let s = data.porous_source(&x, t);
                for i in 0..3 {
                    fx[i] += w * f.x * b[i];
                    fy[i] += w * f.y * b[i];
                    q[i] += w * s * b[i];
                }
            }
            let mass = (Matrix3::identity() + Matrix3::repeat(1.0)) / 12.0;
            let inv = mass.try_inverse().expect("P1 mass matrix");
            let (cx, cy, cq) = (inv * fx, inv * fy, inv * q);
            ProjectedCell::Porous {
                force: [0, 1, 2].map(|i| Vec2::new(cx[i], cy[i])),
                source: [cq[0], cq[1], cq[2]],
            }
        }
    }
}

/// Projected sources on every cell.
pub fn project_data(mesh: &Mesh, data: &dyn SourceData, t: f64) -> Vec<ProjectedCell> {
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|k| project_cell(mesh, data, k, t))
        .collect()
}

/// Fluid residuals at the degree-7 points of a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidResiduals {
    /// `f_K + div sigma_f(u_h, p_h)`.
    pub momentum: Vec<Vec2>,
    /// `q_K - div u_h`.
    pub divergence: Vec<f64>,
}

/// Porous residuals at the degree-7 points of a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PorousResiduals {
    /// `f_K + div sigma_p`, which reduces to `f_K` for P1/P0 fields.
    pub force: Vec<Vec2>,
    /// `mu K^-1 u_h + grad p_h`, with `grad p_h = 0` for P0.
    pub darcy: Vec<Vec2>,
    /// Scalar curl of the Darcy residual (constant on the cell).
    pub curl: f64,
    /// `q_K - d_t(s0 p_h + alpha div eta_h) - div u_h`.
    pub mass: Vec<f64>,
}

/// Interface residuals at the edge quadrature points.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceResiduals {
    pub mass: Vec<f64>,
    pub pressure: Vec<f64>,
    pub traction: Vec<Vec2>,
    pub slip: Vec<f64>,
}

/// Everything needed to evaluate the indicators of one time step.
pub struct StepContext<'a> {
    pub mesh: &'a Mesh,
    pub data: &'a dyn SourceData,
    pub current: FieldView<'a>,
    pub previous: FieldView<'a>,
    pub t: f64,
    pub dt: f64,
    pub options: EstimatorOptions,
    params: PhysicalParams,
    k_inv: Matrix2<f64>,
    projected: Vec<ProjectedCell>,
}

impl<'a> StepContext<'a> {
    pub fn new(
        mesh: &'a Mesh,
        dofs: &'a DofMap,
        data: &'a dyn SourceData,
        previous: &'a SystemState,
        current: &'a SystemState,
        options: EstimatorOptions,
    ) -> Result<Self> {
        let dt = current.t - previous.t;
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "states must advance in time, got dt = {dt}"
            )));
        }
        let params = data.params().clone();
        let k_inv = params.k_inverse()?;
        Ok(StepContext {
            mesh,
            data,
            current: FieldView::new(mesh, dofs, &current.values)?,
            previous: FieldView::new(mesh, dofs, &previous.values)?,
            t: current.t,
            dt,
            options,
            params,
            k_inv,
            projected: project_data(mesh, data, current.t),
        })
    }

    pub fn projected(&self, k: usize) -> &ProjectedCell {
        &self.projected[k]
    }

    pub fn fluid_residuals(&self, k: usize) -> Result<FluidResiduals> {
        let cell = self.current.fluid_cell(k)?;
        let rule = QuadratureRule::degree7();
        let [h0, h1] = cell.velocity_hessians();
        let laplacian = Vec2::new(h0.trace(), h1.trace());
        let grad_div = Vec2::new(h0[(0, 0)] + h1[(1, 0)], h0[(0, 1)] + h1[(1, 1)]);
        let proj = &self.projected[k];
        let mut momentum = Vec::with_capacity(rule.len());
        let mut divergence = Vec::with_capacity(rule.len());
        for b in &rule.points {
            let (_, grad) = cell.velocity(b);
            let (_, grad_p) = cell.pressure(b);
            let div_sigma = (laplacian + grad_div) * self.params.mu - grad_p;
            momentum.push(proj.force(b) + div_sigma);
            divergence.push(proj.source(b) - grad.trace());
        }
        Ok(FluidResiduals {
            momentum,
            divergence,
        })
    }

    pub fn porous_residuals(&self, k: usize) -> Result<PorousResiduals> {
        let cell = self.current.porous_cell(k)?;
        let old = self.previous.porous_cell(k)?;
        let rule = QuadratureRule::degree7();
        let proj = &self.projected[k];
        let (_, div_u) = cell.darcy(&[1.0 / 3.0; 3]);
        let (_, grad_eta) = cell.displacement(&[1.0 / 3.0; 3]);
        let (_, grad_eta_old) = old.displacement(&[1.0 / 3.0; 3]);
        let rate = (self.params.s0 * (cell.pressure - old.pressure)
            + self.params.alpha * (grad_eta.trace() - grad_eta_old.trace()))
            / self.dt;
        let flux_term = if self.options.strict_printed_signs {
            div_u
        } else {
            -div_u
        };
        // an RT0 field has gradient (div / 2) I
        let m = self.k_inv * (self.params.mu * div_u / 2.0);
        let curl = m[(1, 0)] - m[(0, 1)];
        let mut force = Vec::with_capacity(rule.len());
        let mut darcy = Vec::with_capacity(rule.len());
        let mut mass = Vec::with_capacity(rule.len());
        for b in &rule.points {
            let (u, _) = cell.darcy(b);
            force.push(proj.force(b));
            darcy.push(self.k_inv * u * self.params.mu);
            mass.push(proj.source(b) - rate + flux_term);
        }
        Ok(PorousResiduals {
            force,
            darcy,
            curl,
            mass,
        })
    }

    /// Normal stress jump across an interior edge at the edge Gauss points,
    /// `sigma|_lo n - sigma|_hi n` with `n` the outward normal of the
    /// lower-numbered cell.
    pub fn edge_jump(&self, e: usize) -> Result<Vec<Vec2>> {
        let mesh = self.mesh;
        if e >= mesh.num_edges() {
            return Err(Error::Domain(format!("edge {e} out of range")));
        }
        let edge = mesh.edge(e);
        let (lo, hi) = match (edge.tag, edge.cells.1) {
            (EdgeTag::Interior(_), Some(hi)) => (edge.cells.0, hi),
            _ => {
                return Err(Error::Domain(format!(
                    "edge {e} is not an interior subdomain edge"
                )))
            }
        };
        let i = mesh.local_edge_index(lo, e).expect("incident edge");
        let n = mesh.geometry(lo).normals[i];
        let rule = EdgeRule::gauss3();
        let traction = |k: usize| -> Result<Vec<Vec2>> {
            match mesh.subdomain(k) {
                Subdomain::Fluid => {
                    let cell = self.current.fluid_cell(k)?;
                    trace_on_edge(mesh, e, k, &rule, |b| {
                        let (_, g) = cell.velocity(b);
                        self.params.stress_stokes(&g, cell.pressure(b).0) * n
                    })
                }
                Subdomain::Porous => {
                    let cell = self.current.porous_cell(k)?;
                    let mu = if self.options.porous_jump_uses_mu_p {
                        self.params.mu_p
                    } else {
                        self.params.mu
                    };
                    trace_on_edge(mesh, e, k, &rule, |b| {
                        let (_, g) = cell.displacement(b);
                        ((g + g.transpose()) * mu - Matrix2::identity() * cell.pressure) * n
                    })
                }
            }
        };
        let (a, b) = (traction(lo)?, traction(hi)?);
        Ok(a.iter().zip(&b).map(|(x, y)| x - y).collect())
    }

    /// Interface residuals at the edge Gauss points, with the interface data
    /// subtracted.
    pub fn interface_residuals(&self, e: usize) -> Result<InterfaceResiduals> {
        let mesh = self.mesh;
        if e >= mesh.num_edges() {
            return Err(Error::Domain(format!("edge {e} out of range")));
        }
        let (kf, kp, n_f) = interface_sides(mesh, e)
            .ok_or_else(|| Error::Domain(format!("edge {e} is not an interface edge")))?;
        let n_p = -n_f;
        let tau = interface_tangent(&n_f);
        let c = self.params.bjs_coefficient(&tau)?;
        let rule = EdgeRule::gauss3();
        let fluid = self.current.fluid_cell(kf)?;
        let porous = self.current.porous_cell(kp)?;
        let old = self.previous.porous_cell(kp)?;
        let f = trace_on_edge(mesh, e, kf, &rule, |b| {
            let (u, g) = fluid.velocity(b);
            (u, self.params.stress_stokes(&g, fluid.pressure(b).0) * n_f)
        })?;
        let p = trace_on_edge(mesh, e, kp, &rule, |b| {
            let (u, _) = porous.darcy(b);
            let (eta, g) = porous.displacement(b);
            let (eta_old, _) = old.displacement(b);
            (
                u,
                (eta - eta_old) / self.dt,
                self.params.stress_poroelastic(&g, porous.pressure) * n_p,
            )
        })?;
        let mut out = InterfaceResiduals {
            mass: Vec::with_capacity(rule.len()),
            pressure: Vec::with_capacity(rule.len()),
            traction: Vec::with_capacity(rule.len()),
            slip: Vec::with_capacity(rule.len()),
        };
        for (q, &s) in rule.points.iter().enumerate() {
            let g = self
                .data
                .interface_data(&mesh.edge_point(e, s), self.t, &n_f);
            let (u_f, t_f) = f[q];
            let (u_p, eta_rate, t_p) = p[q];
            out.mass
                .push(u_f.dot(&n_f) + (eta_rate + u_p).dot(&n_p) - g.g1);
            out.pressure.push(porous.pressure + t_f.dot(&n_f) - g.g2);
            out.traction.push(t_f + t_p - g.g3);
            out.slip
                .push(t_f.dot(&tau) + c * (u_f - eta_rate).dot(&tau) - g.g4);
        }
        Ok(out)
    }

    /// Oscillation norms `h^2 |f - P f|^2` for the force and the source.
    pub fn oscillation(&self, k: usize) -> (f64, f64) {
        let rule = QuadratureRule::degree7();
        let geom = self.mesh.geometry(k);
        let proj = &self.projected[k];
        let (mut force, mut source) = (0.0, 0.0);
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let x = geom.point(*b);
            let (f, q) = match self.mesh.subdomain(k) {
                Subdomain::Fluid => (
                    self.data.fluid_force(&x, self.t),
                    self.data.fluid_source(&x, self.t),
                ),
                Subdomain::Porous => (
                    self.data.porous_force(&x, self.t),
                    self.data.porous_source(&x, self.t),
                ),
            };
            force += w * (f - proj.force(b)).norm_squared();
            source += w * (q - proj.source(b)).powi(2);
        }
        let s = geom.diameter.powi(2) * geom.area;
        (s * force, s * source)
    }

    /// Weighted squared norms of one cell at this step.
    pub fn cell_terms(&self, k: usize) -> Result<TermTable> {
        let mesh = self.mesh;
        let geom = mesh.geometry(k);
        let h2 = geom.diameter.powi(2);
        let rule = QuadratureRule::degree7();
        let edge_rule = EdgeRule::gauss3();
        let norm2 = |vals: &mut dyn Iterator<Item = f64>| -> f64 {
            vals.zip(&rule.weights).map(|(v, w)| w * v).sum::<f64>() * geom.area
        };
        let edge_norm2 = |e: usize, vals: &mut dyn Iterator<Item = f64>| -> f64 {
            let len = mesh.edge_length(e);
            len * len
                * vals
                    .zip(&edge_rule.weights)
                    .map(|(v, w)| w * v)
                    .sum::<f64>()
        };
        let mut t = [0.0; NUM_TERMS];
        let (osc_f, osc_q) = self.oscillation(k);
        let sub = mesh.subdomain(k);
        match sub {
            Subdomain::Fluid => {
                let r = self.fluid_residuals(k)?;
                t[Term::FluidMomentum.index()] =
                    h2 * norm2(&mut r.momentum.iter().map(|v| v.norm_squared()));
                t[Term::FluidDivergence.index()] = norm2(&mut r.divergence.iter().map(|v| v * v));
                t[Term::FluidForceOscillation.index()] = osc_f;
                t[Term::FluidSourceOscillation.index()] = osc_q;
            }
            Subdomain::Porous => {
                let r = self.porous_residuals(k)?;
                t[Term::PorousForce.index()] =
                    h2 * norm2(&mut r.force.iter().map(|v| v.norm_squared()));
                t[Term::DarcyLaw.index()] =
                    h2 * norm2(&mut r.darcy.iter().map(|v| v.norm_squared()));
                t[Term::DarcyCurl.index()] = h2 * geom.area * r.curl * r.curl;
                t[Term::PorousMass.index()] = norm2(&mut r.mass.iter().map(|v| v * v));
                t[Term::PorousForceOscillation.index()] = osc_f;
                t[Term::PorousSourceOscillation.index()] = osc_q;
            }
        }
        for e in mesh.cell_edges(k) {
            match mesh.edge(e).tag {
                EdgeTag::Interior(s) => {
                    let jump = self.edge_jump(e)?;
                    let v = edge_norm2(e, &mut jump.iter().map(|j| j.norm_squared()));
                    let term = if s == Subdomain::Fluid {
                        Term::FluidJump
                    } else {
                        Term::PorousJump
                    };
                    t[term.index()] += v;
                }
                EdgeTag::GammaFP => {
                    let r = self.interface_residuals(e)?;
                    t[Term::InterfaceMass.index()] +=
                        edge_norm2(e, &mut r.mass.iter().map(|v| v * v));
                    t[Term::InterfacePressure.index()] +=
                        edge_norm2(e, &mut r.pressure.iter().map(|v| v * v));
                    t[Term::InterfaceTraction.index()] +=
                        edge_norm2(e, &mut r.traction.iter().map(|v| v.norm_squared()));
                    t[Term::InterfaceSlip.index()] +=
                        edge_norm2(e, &mut r.slip.iter().map(|v| v * v));
                }
                EdgeTag::Boundary(_) => {}
            }
        }
        Ok(t)
    }

    /// Term tables of all cells at this step.
    pub fn step_terms(&self) -> Result<Vec<TermTable>> {
        (0..self.mesh.num_cells())
            .into_par_iter()
            .map(|k| self.cell_terms(k))
            .collect()
    }
}

/// Indicator of one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementIndicator {
    pub cell: usize,
    pub subdomain: Subdomain,
    pub h: f64,
    pub theta_f2: f64,
    pub theta_p2: f64,
    pub theta_pf2: f64,
    pub zeta2: f64,
    /// Running maxima of the weighted squared norms.
    pub terms: TermTable,
}

impl ElementIndicator {
    fn sum(&self, terms: &[Term]) -> f64 {
        terms.iter().map(|t| self.terms[t.index()]).sum()
    }

    fn refresh(&mut self) {
        use Term::*;
        self.theta_f2 = self.sum(&[FluidMomentum, FluidDivergence, FluidJump]);
        self.theta_p2 = self.sum(&[PorousForce, DarcyLaw, DarcyCurl, PorousMass, PorousJump]);
        self.theta_pf2 = self.sum(&[
            InterfaceMass,
            InterfacePressure,
            InterfaceTraction,
            InterfaceSlip,
        ]);
        self.zeta2 = self.sum(&[
            FluidForceOscillation,
            FluidSourceOscillation,
            PorousForceOscillation,
            PorousSourceOscillation,
        ]);
    }

    /// `Theta_K^2`.
    pub fn theta2(&self) -> f64 {
        self.theta_f2 + self.theta_p2 + self.theta_pf2
    }
}

#[derive(Serialize)]
struct CsvRow {
    cell_id: usize,
    subdomain: &'static str,
    #[serde(rename = "h_K")]
    h: f64,
    theta_f2: f64,
    theta_p2: f64,
    theta_pf2: f64,
    zeta2: f64,
}

/// Indicators accumulated over the time steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorReport {
    pub cells: Vec<ElementIndicator>,
    pub steps: usize,
}

impl EstimatorReport {
    pub fn new(mesh: &Mesh) -> Self {
        let cells = (0..mesh.num_cells())
            .map(|k| ElementIndicator {
                cell: k,
                subdomain: mesh.subdomain(k),
                h: mesh.geometry(k).diameter,
                theta_f2: 0.0,
                theta_p2: 0.0,
                theta_pf2: 0.0,
                zeta2: 0.0,
                terms: [0.0; NUM_TERMS],
            })
            .collect();
        EstimatorReport { cells, steps: 0 }
    }

    /// Folds one step into the running maxima.
    pub fn accumulate_step(&mut self, terms: &[TermTable]) -> Result<()> {
        if terms.len() != self.cells.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cells.len(),
                got: terms.len(),
            });
        }
        for (cell, t) in self.cells.iter_mut().zip(terms) {
            for (m, v) in cell.terms.iter_mut().zip(t) {
                *m = m.max(*v);
            }
            cell.refresh();
        }
        self.steps += 1;
        Ok(())
    }

    /// Global `(Theta, zeta)`.
    pub fn global(&self) -> (f64, f64) {
        let theta: f64 = self.cells.iter().map(ElementIndicator::theta2).sum();
        let zeta: f64 = self.cells.iter().map(|c| c.zeta2).sum();
        (theta.sqrt(), zeta.sqrt())
    }

    pub fn theta(&self) -> f64 {
        self.global().0
    }

    /// Per-cell `Theta_K^2`.
    pub fn theta2(&self) -> Vec<f64> {
        self.cells.iter().map(ElementIndicator::theta2).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cells {
            w.serialize(CsvRow {
                cell_id: c.cell,
                subdomain: c.subdomain.name(),
                h: c.h,
                theta_f2: c.theta_f2,
                theta_p2: c.theta_p2,
                theta_pf2: c.theta_pf2,
                zeta2: c.zeta2,
            })
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        w.flush().map_err(|e| Error::Io(std::io::Error::other(e)))?;
        Ok(())
    }
}

/// Estimator for one step from `previous` to `current`.
pub fn estimate_step(
    mesh: &Mesh,
    dofs: &DofMap,
    data: &dyn SourceData,
    previous: &SystemState,
    current: &SystemState,
    options: EstimatorOptions,
) -> Result<Vec<TermTable>> {
    StepContext::new(mesh, dofs, data, previous, current, options)?.step_terms()
}
