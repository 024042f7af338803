//! Load vectors and Dirichlet values.

use rayon::prelude::*;

use crate::error::Result;
use crate::mesh::{BoundaryTag, EdgeTag, Mesh, Subdomain};
use crate::model::{interface_tangent, SourceData};
use crate::quadrature::{EdgeRule, QuadratureRule};
use crate::spaces::basis::p2_values;
use crate::spaces::{edge_normal, edge_signs, interface_sides, trace_on_edge, DofMap};

/// Right-hand side `F(t)` in full numbering.
pub fn assemble_load(
    mesh: &Mesh,
    dofs: &DofMap,
    data: &dyn SourceData,
    t: f64,
) -> Result<Vec<f64>> {
    let rule = QuadratureRule::degree7();
    let mut f = vec![0.0; dofs.num_dofs()];

    let cells: Vec<usize> = (0..mesh.num_cells()).collect();
    let parts: Vec<Vec<(usize, f64)>> = cells
        .par_iter()
        .map(|&k| {
            let geom = mesh.geometry(k);
            let mut out = Vec::new();
            match mesh.subdomain(k) {
                Subdomain::Fluid => {
                    let vids = dofs.fluid_velocity_dofs(mesh, k);
                    let pids = dofs.fluid_pressure_dofs(mesh, k);
                    let mut lv = [0.0; 12];
                    let mut lp = [0.0; 3];
                    for (b, w) in rule.points.iter().zip(&rule.weights) {
                        let x = geom.point(*b);
                        let s = w * geom.area;
                        let ff = data.fluid_force(&x, t);
                        let qf = data.fluid_source(&x, t);
                        let phi = p2_values(b);
                        for i in 0..6 {
                            lv[i] += s * ff.x * phi[i];
                            lv[6 + i] += s * ff.y * phi[i];
                        }
                        for j in 0..3 {
                            lp[j] += s * qf * b[j];
                        }
                    }
                    out.extend(vids.iter().copied().zip(lv));
                    out.extend(pids.iter().copied().zip(lp));
                }
                Subdomain::Porous => {
                    let eids = dofs.displacement_dofs(mesh, k);
                    let mut le = [0.0; 6];
                    let mut lq = 0.0;
                    for (b, w) in rule.points.iter().zip(&rule.weights) {
                        let x = geom.point(*b);
                        let s = w * geom.area;
                        let fp = data.porous_force(&x, t);
                        lq += s * data.porous_source(&x, t);
                        for i in 0..3 {
                            le[i] += s * fp.x * b[i];
                            le[3 + i] += s * fp.y * b[i];
                        }
                    }
                    out.extend(eids.iter().copied().zip(le));
                    out.push((dofs.darcy_pressure_dof(k), lq));
                }
            }
            out
        })
        .collect();
    for part in parts {
        for (d, v) in part {
            f[d] += v;
        }
    }

    let edge_rule = EdgeRule::gauss3();
    for e in mesh.interface_edges() {
        let (kf, kp, n_f) = interface_sides(mesh, e).expect("interface edge");
        let tau = interface_tangent(&n_f);
        let len = mesh.edge_length(e);
        let vids = dofs.fluid_velocity_dofs(mesh, kf);
        let eids = dofs.displacement_dofs(mesh, kp);
        let fluid = trace_on_edge(mesh, e, kf, &edge_rule, p2_values)?;
        let solid = trace_on_edge(mesh, e, kp, &edge_rule, |b| *b)?;
        let i = mesh.local_edge_index(kp, e).expect("incident edge");
        let flux_sign = edge_signs(mesh, kp)[i];
        let flux = dofs.darcy_edge_dof(e).expect("porous edge");
        let m = dofs.multiplier_dof(e).expect("interface edge");
        for (q, &s) in edge_rule.points.iter().enumerate() {
            let x = mesh.edge_point(e, s);
            let g = data.interface_data(&x, t, &n_f);
            let w = edge_rule.weights[q] * len;
            for i in 0..6 {
                f[vids[i]] += w * g.g4 * tau.x * fluid[q][i];
                f[vids[6 + i]] += w * g.g4 * tau.y * fluid[q][i];
            }
            let traction = g.g3 - tau * g.g4;
            for i in 0..3 {
                f[eids[i]] += w * traction.x * solid[q][i];
                f[eids[3 + i]] += w * traction.y * solid[q][i];
            }
            // the global RT0 function has normal component sign / |E|
            f[flux] -= edge_rule.weights[q] * g.g2 * flux_sign;
            f[m] += w * g.g1;
        }
    }

    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge.tag != EdgeTag::Boundary(BoundaryTag::GammaPD) {
            continue;
        }
        let k = edge.cells.0;
        let i = mesh.local_edge_index(k, e).expect("incident edge");
        let sign = edge_signs(mesh, k)[i];
        let flux = dofs.darcy_edge_dof(e).expect("porous edge");
        for (q, &s) in edge_rule.points.iter().enumerate() {
            let x = mesh.edge_point(e, s);
            f[flux] -= edge_rule.weights[q] * data.pressure_bc(&x, t) * sign;
        }
    }
    Ok(f)
}

/// Full vector holding the Dirichlet values at constrained dofs and zero
/// elsewhere.
pub fn boundary_values(
    mesh: &Mesh,
    dofs: &DofMap,
    data: &dyn SourceData,
    t: f64,
) -> Result<Vec<f64>> {
    let mut g = vec![0.0; dofs.num_dofs()];
    let u0 = dofs.range(crate::spaces::Field::StokesVelocity).start;
    let e0 = dofs.range(crate::spaces::Field::Displacement).start;
    let rule = EdgeRule::gauss3();
    for (e, edge) in mesh.edges().iter().enumerate() {
        let EdgeTag::Boundary(tag) = edge.tag else {
            continue;
        };
        let [a, b] = edge.vertices;
        match tag {
            BoundaryTag::GammaF => {
                let nodes = [
                    (dofs.fluid_vertex_node(a), mesh.vertex(a)),
                    (dofs.fluid_vertex_node(b), mesh.vertex(b)),
                    (dofs.fluid_edge_node(e), mesh.edge_point(e, 0.5)),
                ];
                for (node, x) in nodes {
                    let node = node.expect("fluid node");
                    let v = data.fluid_velocity_bc(&x, t);
                    g[u0 + 2 * node] = v.x;
                    g[u0 + 2 * node + 1] = v.y;
                }
            }
            BoundaryTag::GammaPD | BoundaryTag::GammaPN => {
                for v in [a, b] {
                    let n = dofs.porous_vertex_index(v).expect("porous vertex");
                    let d = data.displacement_bc(&mesh.vertex(v), t);
                    g[e0 + 2 * n] = d.x;
                    g[e0 + 2 * n + 1] = d.y;
                }
                if tag == BoundaryTag::GammaPN {
                    let normal = edge_normal(mesh, e);
                    let len = mesh.edge_length(e);
                    let flux: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(&s, w)| {
                            w * len
                                * data
                                    .darcy_velocity_bc(&mesh.edge_point(e, s), t)
                                    .dot(&normal)
                        })
                        .sum();
                    g[dofs.darcy_edge_dof(e).expect("porous edge")] = flux;
                }
            }
        }
    }
    Ok(g)
}
