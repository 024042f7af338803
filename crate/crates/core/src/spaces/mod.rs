//! Discrete spaces and degree-of-freedom numbering.
//!
//! | field           | element            | support   | constrained on   |
//! |-----------------|--------------------|-----------|------------------|
//! | Stokes velocity | vector P2          | fluid     | gamma_f          |
//! | Stokes pressure | P1                 | fluid     |                  |
//! | Darcy velocity  | RT0                | porous    | gamma_pn         |
//! | Darcy pressure  | P0                 | porous    |                  |
//! | displacement    | vector P1          | porous    | gamma_pd, gamma_pn |
//! | multiplier      | P0 per edge        | interface |                  |
//!
//! The full numbering stores the fields in the order above, each in a
//! contiguous block. Constrained dofs are removed in the free numbering,
//! which keeps the same block order.

pub mod basis;
mod eval;

use std::ops::Range;

use serde::Serialize;

use crate::mesh::{BoundaryTag, EdgeTag, Mesh, Subdomain, Vec2};

pub use eval::{trace_on_edge, FieldView, FluidCell, PorousCell};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Field {
    StokesVelocity,
    StokesPressure,
    DarcyVelocity,
    DarcyPressure,
    Displacement,
    Multiplier,
}

impl Field {
    pub const ALL: [Field; 6] = [
        Field::StokesVelocity,
        Field::StokesPressure,
        Field::DarcyVelocity,
        Field::DarcyPressure,
        Field::Displacement,
        Field::Multiplier,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::StokesVelocity => "u_f",
            Field::StokesPressure => "p_f",
            Field::DarcyVelocity => "u_p",
            Field::DarcyPressure => "p_p",
            Field::Displacement => "eta_p",
            Field::Multiplier => "lambda",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceDescriptor {
    pub field: Field,
    pub family: &'static str,
    pub degree: usize,
    pub components: usize,
    /// `None` for the interface multiplier.
    pub subdomain: Option<Subdomain>,
    pub constrained_on: Vec<BoundaryTag>,
}

impl SpaceDescriptor {
    pub fn of(field: Field) -> Self {
        use BoundaryTag::*;
        let (family, degree, components, subdomain, constrained_on) = match field {
            Field::StokesVelocity => ("Lagrange", 2, 2, Some(Subdomain::Fluid), vec![GammaF]),
            Field::StokesPressure => ("Lagrange", 1, 1, Some(Subdomain::Fluid), vec![]),
            Field::DarcyVelocity => (
                "Raviart-Thomas",
                0,
                2,
                Some(Subdomain::Porous),
                vec![GammaPN],
            ),
            Field::DarcyPressure => (
                "discontinuous Lagrange",
                0,
                1,
                Some(Subdomain::Porous),
                vec![],
            ),
            Field::Displacement => (
                "Lagrange",
                1,
                2,
                Some(Subdomain::Porous),
                vec![GammaPD, GammaPN],
            ),
            Field::Multiplier => ("discontinuous Lagrange", 0, 1, None, vec![]),
        };
        SpaceDescriptor {
            field,
            family,
            degree,
            components,
            subdomain,
            constrained_on,
        }
    }

    /// Local dof count per cell (per interface edge for the multiplier).
    pub fn local_dofs(&self) -> usize {
        match self.field {
            Field::StokesVelocity => 12,
            Field::StokesPressure | Field::DarcyVelocity => 3,
            Field::DarcyPressure | Field::Multiplier => 1,
            Field::Displacement => 6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DofMap {
    fluid_vertex: Vec<Option<usize>>,
    fluid_edge: Vec<Option<usize>>,
    n_fluid_vertices: usize,
    porous_vertex: Vec<Option<usize>>,
    porous_edge: Vec<Option<usize>>,
    porous_cell: Vec<Option<usize>>,
    interface_edge: Vec<Option<usize>>,
    counts: [usize; 6],
    offsets: [usize; 7],
    constrained: Vec<bool>,
    full_to_free: Vec<Option<usize>>,
    free_to_full: Vec<usize>,
    free_offsets: [usize; 7],
}

fn number(flags: impl Iterator<Item = bool>) -> (Vec<Option<usize>>, usize) {
    let mut n = 0;
    let map = flags
        .map(|f| {
            f.then(|| {
                n += 1;
                n - 1
            })
        })
        .collect();
    (map, n)
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let nv = mesh.num_vertices();
        let mut in_fluid = vec![false; nv];
        let mut in_porous = vec![false; nv];
        for k in 0..mesh.num_cells() {
            let flags = match mesh.subdomain(k) {
                Subdomain::Fluid => &mut in_fluid,
                Subdomain::Porous => &mut in_porous,
            };
            for v in mesh.cell(k) {
                flags[v] = true;
            }
        }
        let touches = |e: &crate::mesh::Edge, s: Subdomain| {
            mesh.subdomain(e.cells.0) == s || e.cells.1.is_some_and(|c| mesh.subdomain(c) == s)
        };
        let (fluid_vertex, n_fluid_vertices) = number(in_fluid.iter().copied());
        let (fluid_edge_local, n_fluid_edges) =
            number(mesh.edges().iter().map(|e| touches(e, Subdomain::Fluid)));
        let fluid_edge = fluid_edge_local
            .into_iter()
            .map(|o| o.map(|i| i + n_fluid_vertices))
            .collect();
        let (porous_vertex, n_porous_vertices) = number(in_porous.iter().copied());
        let (porous_edge, n_porous_edges) =
            number(mesh.edges().iter().map(|e| touches(e, Subdomain::Porous)));
        let (porous_cell, n_porous_cells) =
            number((0..mesh.num_cells()).map(|k| mesh.subdomain(k) == Subdomain::Porous));
        let (interface_edge, n_interface) =
            number(mesh.edges().iter().map(|e| e.tag == EdgeTag::GammaFP));

        let counts = [
            2 * (n_fluid_vertices + n_fluid_edges),
            n_fluid_vertices,
            n_porous_edges,
            n_porous_cells,
            2 * n_porous_vertices,
            n_interface,
        ];
        let mut offsets = [0; 7];
        for i in 0..6 {
            offsets[i + 1] = offsets[i] + counts[i];
        }

        let mut map = DofMap {
            fluid_vertex,
            fluid_edge,
            n_fluid_vertices,
            porous_vertex,
            porous_edge,
            porous_cell,
            interface_edge,
            counts,
            offsets,
            constrained: vec![false; offsets[6]],
            full_to_free: Vec::new(),
            free_to_full: Vec::new(),
            free_offsets: [0; 7],
        };

        for (id, e) in mesh.edges().iter().enumerate() {
            match e.tag {
                EdgeTag::Boundary(BoundaryTag::GammaF) => {
                    let mut nodes = vec![map.fluid_edge[id].unwrap()];
                    nodes.extend(e.vertices.iter().map(|&v| map.fluid_vertex[v].unwrap()));
                    for node in nodes {
                        for c in 0..2 {
                            let dof = map.offsets[0] + 2 * node + c;
                            map.constrained[dof] = true;
                        }
                    }
                }
                EdgeTag::Boundary(tag) => {
                    if tag == BoundaryTag::GammaPN {
                        let dof = map.offsets[2] + map.porous_edge[id].unwrap();
                        map.constrained[dof] = true;
                    }
                    for &v in &e.vertices {
                        let node = map.porous_vertex[v].unwrap();
                        for c in 0..2 {
                            let dof = map.offsets[4] + 2 * node + c;
                            map.constrained[dof] = true;
                        }
                    }
                }
                _ => {}
            }
        }

        let mut free = 0;
        map.full_to_free = map
            .constrained
            .iter()
            .map(|&c| {
                (!c).then(|| {
                    free += 1;
                    free - 1
                })
            })
            .collect();
        map.free_to_full = (0..map.constrained.len())
            .filter(|&i| !map.constrained[i])
            .collect();
        for f in 0..6 {
            let constrained_before = map.constrained[..map.offsets[f + 1]]
                .iter()
                .filter(|&&c| c)
                .count();
            map.free_offsets[f + 1] = map.offsets[f + 1] - constrained_before;
        }
        map
    }

    /// Number of dofs of `field` in the full numbering.
    pub fn count(&self, field: Field) -> usize {
        self.counts[field.index()]
    }

    pub fn range(&self, field: Field) -> Range<usize> {
        self.offsets[field.index()]..self.offsets[field.index() + 1]
    }

    pub fn free_range(&self, field: Field) -> Range<usize> {
        self.free_offsets[field.index()]..self.free_offsets[field.index() + 1]
    }

    pub fn free_count(&self, field: Field) -> usize {
        self.free_range(field).len()
    }

    pub fn num_dofs(&self) -> usize {
        self.offsets[6]
    }

    pub fn num_free(&self) -> usize {
        self.free_to_full.len()
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.full_to_free[dof]
    }

    pub fn free_to_full(&self) -> &[usize] {
        &self.free_to_full
    }

    /// Field owning a full-numbering dof.
    pub fn field_of(&self, dof: usize) -> Field {
        let i = (0..6)
            .find(|&f| dof < self.offsets[f + 1])
            .expect("dof out of range");
        Field::ALL[i]
    }

    /// Quadratic velocity node of a fluid vertex.
    pub fn fluid_vertex_node(&self, v: usize) -> Option<usize> {
        self.fluid_vertex[v]
    }

    /// Quadratic velocity node of a fluid edge midpoint.
    pub fn fluid_edge_node(&self, e: usize) -> Option<usize> {
        self.fluid_edge[e]
    }

    pub fn num_fluid_nodes(&self) -> usize {
        self.counts[0] / 2
    }

    pub fn num_fluid_vertices(&self) -> usize {
        self.n_fluid_vertices
    }

    pub fn porous_vertex_index(&self, v: usize) -> Option<usize> {
        self.porous_vertex[v]
    }

    pub fn darcy_edge_dof(&self, e: usize) -> Option<usize> {
        self.porous_edge[e].map(|i| self.offsets[2] + i)
    }

    pub fn multiplier_dof(&self, e: usize) -> Option<usize> {
        self.interface_edge[e].map(|i| self.offsets[5] + i)
    }

    /// Velocity dofs of a fluid cell; local index `comp * 6 + node`.
    ///
    /// # Panics
    /// If `k` is not a fluid cell.
    pub fn fluid_velocity_dofs(&self, mesh: &Mesh, k: usize) -> [usize; 12] {
        let cell = mesh.cell(k);
        let edges = mesh.cell_edges(k);
        let mut nodes = [0; 6];
        for i in 0..3 {
            nodes[i] = self.fluid_vertex[cell[i]].expect("not a fluid cell");
            nodes[3 + i] = self.fluid_edge[edges[i]].expect("not a fluid cell");
        }
        let mut dofs = [0; 12];
        for c in 0..2 {
            for (i, &n) in nodes.iter().enumerate() {
                dofs[c * 6 + i] = self.offsets[0] + 2 * n + c;
            }
        }
        dofs
    }

    /// # Panics
    /// If `k` is not a fluid cell.
    pub fn fluid_pressure_dofs(&self, mesh: &Mesh, k: usize) -> [usize; 3] {
        mesh.cell(k)
            .map(|v| self.offsets[1] + self.fluid_vertex[v].expect("not a fluid cell"))
    }

    /// RT0 dofs of a porous cell by local edge.
    ///
    /// # Panics
    /// If `k` is not a porous cell.
    pub fn darcy_velocity_dofs(&self, mesh: &Mesh, k: usize) -> [usize; 3] {
        mesh.cell_edges(k)
            .map(|e| self.offsets[2] + self.porous_edge[e].expect("not a porous cell"))
    }

    /// # Panics
    /// If `k` is not a porous cell.
    pub fn darcy_pressure_dof(&self, k: usize) -> usize {
        self.offsets[3] + self.porous_cell[k].expect("not a porous cell")
    }

    /// Displacement dofs of a porous cell; local index `comp * 3 + vertex`.
    ///
    /// # Panics
    /// If `k` is not a porous cell.
    pub fn displacement_dofs(&self, mesh: &Mesh, k: usize) -> [usize; 6] {
        let cell = mesh.cell(k);
        let mut dofs = [0; 6];
        for c in 0..2 {
            for i in 0..3 {
                let n = self.porous_vertex[cell[i]].expect("not a porous cell");
                dofs[c * 3 + i] = self.offsets[4] + 2 * n + c;
            }
        }
        dofs
    }
}

/// Orientation of local edge `i` of cell `k` relative to the global edge
/// normal (the lower-to-higher vertex direction rotated clockwise).
pub fn edge_signs(mesh: &Mesh, k: usize) -> [f64; 3] {
    let c = mesh.cell(k);
    [0, 1, 2].map(|i| {
        if c[(i + 1) % 3] < c[(i + 2) % 3] {
            1.0
        } else {
            -1.0
        }
    })
}

/// Global unit normal of an edge.
pub fn edge_normal(mesh: &Mesh, e: usize) -> Vec2 {
    let [a, b] = mesh.edge(e).vertices;
    let d = mesh.vertex(b) - mesh.vertex(a);
    Vec2::new(d.y, -d.x) / d.norm()
}

/// Fluid and porous cell of an interface edge, with the fluid outward
/// normal.
pub fn interface_sides(mesh: &Mesh, e: usize) -> Option<(usize, usize, Vec2)> {
    let edge = mesh.edge(e);
    if edge.tag != EdgeTag::GammaFP {
        return None;
    }
    let (a, b) = (edge.cells.0, edge.cells.1?);
    let (kf, kp) = if mesh.subdomain(a) == Subdomain::Fluid {
        (a, b)
    } else {
        (b, a)
    };
    let i = mesh.local_edge_index(kf, e)?;
    Some((kf, kp, mesh.geometry(kf).normals[i]))
}
