//! Bilinear forms as triplet lists in the full dof numbering, rows indexing
//! test functions and columns trial functions.

use rayon::prelude::*;

use crate::error::Result;
use crate::mesh::{Mesh, Subdomain, Vec2};
use crate::model::{interface_tangent, PhysicalParams};
use crate::quadrature::{EdgeRule, QuadratureRule};
use crate::spaces::basis::{p2_gradients, p2_values, rt0_values};
use crate::spaces::{edge_signs, interface_sides, trace_on_edge, DofMap};
use crate::sparse::Triplets;

type Entries = Vec<(usize, usize, f64)>;

/// Per-cell contributions computed in parallel and concatenated in cell
/// order, so the result does not depend on the thread count.
fn per_cell(
    mesh: &Mesh,
    dofs: &DofMap,
    sub: Subdomain,
    f: impl Fn(usize) -> Entries + Sync,
) -> Triplets {
    let cells: Vec<usize> = mesh.cells_in(sub).collect();
    let blocks: Vec<Entries> = cells.par_iter().map(|&k| f(k)).collect();
    let n = dofs.num_dofs();
    let mut t = Triplets::new(n, n);
    for b in blocks {
        t.entries.extend(b);
    }
    t
}

/// `a_f(u, v) = (2 mu D(u), D(v))` on the fluid cells.
pub fn assemble_a_f(mesh: &Mesh, dofs: &DofMap, params: &PhysicalParams) -> Triplets {
    let rule = QuadratureRule::degree4();
    per_cell(mesh, dofs, Subdomain::Fluid, |k| {
        let geom = mesh.geometry(k);
        let ids = dofs.fluid_velocity_dofs(mesh, k);
        let mut local = [[0.0; 12]; 12];
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let g = p2_gradients(&geom, b);
            let s = params.mu * w * geom.area;
            for a in 0..2 {
                for i in 0..6 {
                    for c in 0..2 {
                        for j in 0..6 {
                            // D(phi_i e_a) : D(phi_j e_c) * 2
                            let mut v = g[i][c] * g[j][a];
                            if a == c {
                                v += g[i].dot(&g[j]);
                            }
                            local[c * 6 + j][a * 6 + i] += s * v;
                        }
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(144);
        for r in 0..12 {
            for c in 0..12 {
                out.push((ids[r], ids[c], local[r][c]));
            }
        }
        out
    })
}

/// `a_p^d(u, v) = (mu K^-1 u, v)` on the porous cells.
pub fn assemble_a_p_d(mesh: &Mesh, dofs: &DofMap, params: &PhysicalParams) -> Result<Triplets> {
    let k_inv = params.k_inverse()? * params.mu;
    let rule = QuadratureRule::degree4();
    Ok(per_cell(mesh, dofs, Subdomain::Porous, |k| {
        let geom = mesh.geometry(k);
        let ids = dofs.darcy_velocity_dofs(mesh, k);
        let s = edge_signs(mesh, k);
        let mut local = [[0.0; 3]; 3];
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let phi = rt0_values(&geom, &geom.point(*b));
            for i in 0..3 {
                let kphi = k_inv * phi[i] * s[i];
                for j in 0..3 {
                    local[j][i] += w * geom.area * kphi.dot(&(phi[j] * s[j]));
                }
            }
        }
        let mut out = Vec::with_capacity(9);
        for r in 0..3 {
            for c in 0..3 {
                out.push((ids[r], ids[c], local[r][c]));
            }
        }
        out
    }))
}

/// `a_p^e(eta, xi) = (2 mu_p D(eta), D(xi)) + (lambda_p div eta, div xi)`.
pub fn assemble_a_p_e(mesh: &Mesh, dofs: &DofMap, params: &PhysicalParams) -> Triplets {
    per_cell(mesh, dofs, Subdomain::Porous, |k| {
        let geom = mesh.geometry(k);
        let ids = dofs.displacement_dofs(mesh, k);
        let g = geom.grad_bary;
        let mut out = Vec::with_capacity(36);
        for c in 0..2 {
            for j in 0..3 {
                for a in 0..2 {
                    for i in 0..3 {
                        let mut d = g[i][c] * g[j][a];
                        if a == c {
                            d += g[i].dot(&g[j]);
                        }
                        let v = params.mu_p * d + params.lambda_p * g[i][a] * g[j][c];
                        out.push((ids[c * 3 + j], ids[a * 3 + i], v * geom.area));
                    }
                }
            }
        }
        out
    })
}

/// `b_f(v, w) = -(div v, w)`: rows are Stokes pressure dofs, columns Stokes
/// velocity dofs.
pub fn assemble_b_f(mesh: &Mesh, dofs: &DofMap) -> Triplets {
    let rule = QuadratureRule::degree4();
    per_cell(mesh, dofs, Subdomain::Fluid, |k| {
        let geom = mesh.geometry(k);
        let vids = dofs.fluid_velocity_dofs(mesh, k);
        let pids = dofs.fluid_pressure_dofs(mesh, k);
        let mut local = [[0.0; 12]; 3];
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let g = p2_gradients(&geom, b);
            for j in 0..3 {
                for a in 0..2 {
                    for i in 0..6 {
                        local[j][a * 6 + i] -= w * geom.area * b[j] * g[i][a];
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(36);
        for j in 0..3 {
            for c in 0..12 {
                out.push((pids[j], vids[c], local[j][c]));
            }
        }
        out
    })
}

/// The two porous divergence pairings `-(div v, w)`: RT0 against P0 and
/// displacement against P0 (rows: Darcy pressure dofs).
pub fn assemble_b_p(mesh: &Mesh, dofs: &DofMap) -> (Triplets, Triplets) {
    let darcy = per_cell(mesh, dofs, Subdomain::Porous, |k| {
        let s = edge_signs(mesh, k);
        let ids = dofs.darcy_velocity_dofs(mesh, k);
        let row = dofs.darcy_pressure_dof(k);
        (0..3).map(|i| (row, ids[i], -s[i])).collect()
    });
    let elastic = per_cell(mesh, dofs, Subdomain::Porous, |k| {
        let geom = mesh.geometry(k);
        let ids = dofs.displacement_dofs(mesh, k);
        let row = dofs.darcy_pressure_dof(k);
        let mut out = Vec::with_capacity(6);
        for a in 0..2 {
            for i in 0..3 {
                out.push((row, ids[a * 3 + i], -geom.area * geom.grad_bary[i][a]));
            }
        }
        out
    });
    (darcy, elastic)
}

/// Porous pressure mass matrix.
pub fn assemble_pressure_mass(mesh: &Mesh, dofs: &DofMap) -> Triplets {
    per_cell(mesh, dofs, Subdomain::Porous, |k| {
        let d = dofs.darcy_pressure_dof(k);
        vec![(d, d, mesh.geometry(k).area)]
    })
}

/// Traces on an interface edge at one quadrature point: fluid velocity
/// basis and displacement basis values, with their dofs.
struct InterfacePoint {
    fluid: Vec<(usize, Vec2)>,
    solid: Vec<(usize, Vec2)>,
}

fn interface_points(
    mesh: &Mesh,
    dofs: &DofMap,
    e: usize,
    rule: &EdgeRule,
) -> Result<Vec<InterfacePoint>> {
    let (kf, kp, _) = interface_sides(mesh, e).expect("interface edge");
    let fids = dofs.fluid_velocity_dofs(mesh, kf);
    let sids = dofs.displacement_dofs(mesh, kp);
    let fluid = trace_on_edge(mesh, e, kf, rule, |b| {
        let phi = p2_values(b);
        let mut out = Vec::new();
        for a in 0..2 {
            for i in 0..6 {
                if phi[i] != 0.0 {
                    let mut v = Vec2::zeros();
                    v[a] = phi[i];
                    out.push((fids[a * 6 + i], v));
                }
            }
        }
        out
    })?;
    let solid = trace_on_edge(mesh, e, kp, rule, |b| {
        let mut out = Vec::new();
        for a in 0..2 {
            for i in 0..3 {
                if b[i] != 0.0 {
                    let mut v = Vec2::zeros();
                    v[a] = b[i];
                    out.push((sids[a * 3 + i], v));
                }
            }
        }
        out
    })?;
    Ok(fluid
        .into_iter()
        .zip(solid)
        .map(|(fluid, solid)| InterfacePoint { fluid, solid })
        .collect())
}

/// `a_BJS(u, eta; v, xi) = <c (u - eta).tau, (v - xi).tau>` with
/// `c = mu alpha_bjs / sqrt(tau^T K tau)`, over Stokes velocity and
/// displacement dofs.
pub fn assemble_a_bjs(mesh: &Mesh, dofs: &DofMap, params: &PhysicalParams) -> Result<Triplets> {
    let rule = EdgeRule::gauss3();
    let n = dofs.num_dofs();
    let mut t = Triplets::new(n, n);
    if params.alpha_bjs == 0.0 {
        return Ok(t);
    }
    for e in mesh.interface_edges() {
        let (_, _, n_f) = interface_sides(mesh, e).expect("interface edge");
        let tau = interface_tangent(&n_f);
        let c = params.bjs_coefficient(&tau)?;
        let len = mesh.edge_length(e);
        for (q, pt) in interface_points(mesh, dofs, e, &rule)?.iter().enumerate() {
            let traces: Vec<(usize, f64)> = pt
                .fluid
                .iter()
                .map(|(d, v)| (*d, v.dot(&tau)))
                .chain(pt.solid.iter().map(|(d, v)| (*d, -v.dot(&tau))))
                .collect();
            let s = c * rule.weights[q] * len;
            for &(r, tr) in &traces {
                for &(col, tc) in &traces {
                    t.push(r, col, s * tr * tc);
                }
            }
        }
    }
    Ok(t)
}

/// `b_Gamma(v_f, v_p, xi; mu) = <v_f.n_f + (xi + v_p).n_p, mu>`: rows are
/// multiplier dofs.
pub fn assemble_b_gamma(mesh: &Mesh, dofs: &DofMap) -> Result<Triplets> {
    let rule = EdgeRule::gauss3();
    let n = dofs.num_dofs();
    let mut t = Triplets::new(n, n);
    for e in mesh.interface_edges() {
        let (_, kp, n_f) = interface_sides(mesh, e).expect("interface edge");
        let n_p = -n_f;
        let row = dofs.multiplier_dof(e).expect("interface edge");
        let len = mesh.edge_length(e);
        for (q, pt) in interface_points(mesh, dofs, e, &rule)?.iter().enumerate() {
            let s = rule.weights[q] * len;
            for (d, v) in &pt.fluid {
                t.push(row, *d, s * v.dot(&n_f));
            }
            for (d, v) in &pt.solid {
                t.push(row, *d, s * v.dot(&n_p));
            }
        }
        let i = mesh.local_edge_index(kp, e).expect("incident edge");
        let flux = dofs.darcy_edge_dof(e).expect("porous edge");
        // the global RT0 function of this edge has unit flux along the
        // global normal
        t.push(row, flux, edge_signs(mesh, kp)[i]);
    }
    Ok(t)
}
