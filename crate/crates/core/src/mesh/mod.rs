//! Conforming triangulations of a two-subdomain (fluid / porous) geometry.
//!
//! Cells are stored counterclockwise with local vertex 0 as the newest
//! vertex; local edge `i` is the edge opposite local vertex `i`, so local
//! edge 0 is the refinement edge used by newest-vertex bisection.

mod geometry;
pub mod io;
mod refine;

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};

pub use geometry::CellGeometry;
pub use refine::{bisected_cells, refine, refine_uniform, Refinement};

pub type Point = nalgebra::Point2<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Subdomain {
    Fluid,
    Porous,
}

impl Subdomain {
    pub fn name(self) -> &'static str {
        match self {
            Subdomain::Fluid => "fluid",
            Subdomain::Porous => "porous",
        }
    }
}

/// Tag of an external boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BoundaryTag {
    /// Fluid boundary (velocity Dirichlet).
    GammaF,
    /// Porous boundary with prescribed pressure.
    GammaPD,
    /// Porous boundary with prescribed normal flux.
    GammaPN,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::GammaF => "gamma_f",
            BoundaryTag::GammaPD => "gamma_pd",
            BoundaryTag::GammaPN => "gamma_pn",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "gamma_f" => Some(BoundaryTag::GammaF),
            "gamma_pd" => Some(BoundaryTag::GammaPD),
            "gamma_pn" => Some(BoundaryTag::GammaPN),
            _ => None,
        }
    }

    fn subdomain(self) -> Subdomain {
        match self {
            BoundaryTag::GammaF => Subdomain::Fluid,
            BoundaryTag::GammaPD | BoundaryTag::GammaPN => Subdomain::Porous,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EdgeTag {
    Interior(Subdomain),
    Boundary(BoundaryTag),
    /// Fluid/porous interface.
    GammaFP,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints in ascending index order.
    pub vertices: [usize; 2],
    /// Incident cells in ascending index order; the second is `None` on the
    /// external boundary.
    pub cells: (usize, Option<usize>),
    pub tag: EdgeTag,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells.1.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    subdomains: Vec<Subdomain>,
    edges: Vec<Edge>,
    cell_edges: Vec<[usize; 3]>,
    edge_lookup: HashMap<[usize; 2], usize>,
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn signed_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * ((b - a).perp(&(c - a)))
}

impl Mesh {
    /// Builds a mesh, reordering each cell counterclockwise with its longest
    /// edge as refinement edge.
    pub fn new(
        vertices: Vec<Point>,
        cells: Vec<[usize; 3]>,
        subdomains: Vec<Subdomain>,
        boundary: &[([usize; 2], BoundaryTag)],
    ) -> Result<Self> {
        let mut cells = cells;
        for cell in &mut cells {
            for &v in cell.iter() {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!("vertex index {v} out of range")));
                }
            }
            let [a, b, c] = *cell;
            let mut ordered = if signed_area(&vertices[a], &vertices[b], &vertices[c]) < 0.0 {
                [a, c, b]
            } else {
                [a, b, c]
            };
            let len =
                |i: usize| (vertices[ordered[(i + 1) % 3]] - vertices[ordered[(i + 2) % 3]]).norm();
            let longest = (0..3).fold(0, |best, i| if len(i) > len(best) { i } else { best });
            ordered.rotate_left(longest);
            *cell = ordered;
        }
        Self::with_refinement_edges(vertices, cells, subdomains, boundary)
    }

    /// Builds a mesh keeping local vertex 0 of every cell as its newest
    /// vertex. Clockwise cells are flipped without moving vertex 0.
    pub fn with_refinement_edges(
        vertices: Vec<Point>,
        mut cells: Vec<[usize; 3]>,
        subdomains: Vec<Subdomain>,
        boundary: &[([usize; 2], BoundaryTag)],
    ) -> Result<Self> {
        if subdomains.len() != cells.len() {
            return Err(Error::DimensionMismatch {
                expected: cells.len(),
                got: subdomains.len(),
            });
        }
        for (k, cell) in cells.iter_mut().enumerate() {
            if cell.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "cell {k} references a missing vertex"
                )));
            }
            let [a, b, c] = *cell;
            let area = signed_area(&vertices[a], &vertices[b], &vertices[c]);
            let scale = [(a, b), (b, c), (c, a)]
                .iter()
                .map(|&(i, j)| (vertices[i] - vertices[j]).norm_squared())
                .fold(0.0, f64::max);
            if area.abs() <= 1e-14 * scale || !area.is_finite() {
                return Err(Error::InvalidGeometry(format!("cell {k} has zero area")));
            }
            if area < 0.0 {
                *cell = [a, c, b];
            }
        }

        let mut edge_lookup: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edge_cells: Vec<Vec<usize>> = Vec::new();
        let mut edge_vertices: Vec<[usize; 2]> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (k, cell) in cells.iter().enumerate() {
            let mut local = [0usize; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let key = edge_key(cell[(i + 1) % 3], cell[(i + 2) % 3]);
                let id = *edge_lookup.entry(key).or_insert_with(|| {
                    edge_vertices.push(key);
                    edge_cells.push(Vec::new());
                    edge_vertices.len() - 1
                });
                edge_cells[id].push(k);
                *slot = id;
            }
            cell_edges.push(local);
        }

        let mut tags: HashMap<[usize; 2], BoundaryTag> = HashMap::new();
        for &([a, b], tag) in boundary {
            if tags.insert(edge_key(a, b), tag).is_some() {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge ({a}, {b}) tagged twice"
                )));
            }
        }

        let mut edges = Vec::with_capacity(edge_vertices.len());
        for (id, key) in edge_vertices.iter().enumerate() {
            let incident = &edge_cells[id];
            let edge = match incident.as_slice() {
                &[c] => {
                    let tag = tags.remove(key).ok_or_else(|| {
                        Error::InvalidMesh(format!(
                            "boundary edge ({}, {}) has no tag (hanging node or missing tag)",
                            key[0], key[1]
                        ))
                    })?;
                    if tag.subdomain() != subdomains[c] {
                        return Err(Error::InvalidMesh(format!(
                            "edge ({}, {}) tagged {} borders a {} cell",
                            key[0],
                            key[1],
                            tag.name(),
                            subdomains[c].name()
                        )));
                    }
                    Edge {
                        vertices: *key,
                        cells: (c, None),
                        tag: EdgeTag::Boundary(tag),
                    }
                }
                &[c0, c1] => {
                    if tags.contains_key(key) {
                        return Err(Error::InvalidMesh(format!(
                            "interior edge ({}, {}) carries a boundary tag",
                            key[0], key[1]
                        )));
                    }
                    let (lo, hi) = (c0.min(c1), c0.max(c1));
                    let tag = if subdomains[lo] == subdomains[hi] {
                        EdgeTag::Interior(subdomains[lo])
                    } else {
                        EdgeTag::GammaFP
                    };
                    Edge {
                        vertices: *key,
                        cells: (lo, Some(hi)),
                        tag,
                    }
                }
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) has {} incident cells",
                        key[0],
                        key[1],
                        incident.len()
                    )))
                }
            };
            edges.push(edge);
        }
        if let Some((key, _)) = tags.iter().next() {
            return Err(Error::InvalidMesh(format!(
                "tagged edge ({}, {}) is not a boundary edge of the mesh",
                key[0], key[1]
            )));
        }

        let mesh = Mesh {
            vertices,
            cells,
            subdomains,
            edges,
            cell_edges,
            edge_lookup,
        };
        mesh.check_dirichlet_pressure_separation()?;
        Ok(mesh)
    }

    /// The prescribed-pressure boundary must not touch the interface.
    fn check_dirichlet_pressure_separation(&self) -> Result<()> {
        let mut on_interface = vec![false; self.vertices.len()];
        for e in self.edges.iter().filter(|e| e.tag == EdgeTag::GammaFP) {
            on_interface[e.vertices[0]] = true;
            on_interface[e.vertices[1]] = true;
        }
        for e in &self.edges {
            if e.tag == EdgeTag::Boundary(BoundaryTag::GammaPD)
                && (on_interface[e.vertices[0]] || on_interface[e.vertices[1]])
            {
                return Err(Error::InvalidMesh(
                    "gamma_pd boundary touches the fluid/porous interface".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn cell(&self, k: usize) -> [usize; 3] {
        self.cells[k]
    }

    pub fn subdomain(&self, k: usize) -> Subdomain {
        self.subdomains[k]
    }

    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    /// Edge ids of a cell; entry `i` is opposite local vertex `i`.
    pub fn cell_edges(&self, k: usize) -> [usize; 3] {
        self.cell_edges[k]
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&edge_key(a, b)).copied()
    }

    /// Local index (0..3) of edge `e` within cell `k`.
    pub fn local_edge_index(&self, k: usize, e: usize) -> Option<usize> {
        self.cell_edges[k].iter().position(|&x| x == e)
    }

    pub fn cells_in(&self, subdomain: Subdomain) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells.len()).filter(move |&k| self.subdomains[k] == subdomain)
    }

    pub fn interface_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(move |&e| self.edges[e].tag == EdgeTag::GammaFP)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        (self.vertices[b] - self.vertices[a]).norm()
    }

    /// Point on edge `e` at parameter `s` in [0, 1], measured from the
    /// lower-index endpoint.
    pub fn edge_point(&self, e: usize, s: f64) -> Point {
        let [a, b] = self.edges[e].vertices;
        self.vertices[a] + (self.vertices[b] - self.vertices[a]) * s
    }

    /// Barycentric coordinates in cell `k` of the point at parameter `s`
    /// along edge `e` (see [`Mesh::edge_point`]).
    pub fn edge_barycentric(&self, k: usize, e: usize, s: f64) -> Result<[f64; 3]> {
        let [a, b] = self.edges[e].vertices;
        let cell = self.cells[k];
        let ia = cell.iter().position(|&v| v == a);
        let ib = cell.iter().position(|&v| v == b);
        match (ia, ib) {
            (Some(ia), Some(ib)) => {
                let mut bary = [0.0; 3];
                bary[ia] = 1.0 - s;
                bary[ib] = s;
                Ok(bary)
            }
            _ => Err(Error::Domain(format!(
                "edge {e} is not an edge of cell {k}"
            ))),
        }
    }

    pub fn geometry(&self, k: usize) -> CellGeometry {
        let [a, b, c] = self.cells[k];
        CellGeometry::new([self.vertices[a], self.vertices[b], self.vertices[c]])
    }

    /// Maximum cell diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.num_cells())
            .map(|k| self.geometry(k).diameter)
            .fold(0.0, f64::max)
    }

    /// Maximum of `h_K / rho_K` over all cells.
    pub fn shape_regularity(&self) -> f64 {
        (0..self.num_cells())
            .map(|k| self.geometry(k).shape_ratio())
            .fold(0.0, f64::max)
    }

    /// Boundary edges with their tags, in edge order.
    pub fn boundary_edges(&self) -> Vec<([usize; 2], BoundaryTag)> {
        self.edges
            .iter()
            .filter_map(|e| match e.tag {
                EdgeTag::Boundary(t) => Some((e.vertices, t)),
                _ => None,
            })
            .collect()
    }

    /// Number of edges per tag.
    pub fn tag_census(&self) -> BTreeMap<String, usize> {
        let mut census = BTreeMap::new();
        for e in &self.edges {
            let name = match e.tag {
                EdgeTag::Interior(s) => format!("interior_{}", s.name()),
                EdgeTag::Boundary(t) => t.name().to_string(),
                EdgeTag::GammaFP => "gamma_fp".to_string(),
            };
            *census.entry(name).or_insert(0) += 1;
        }
        census
    }

    /// Total length of the edges carrying `tag`.
    pub fn tagged_length(&self, tag: EdgeTag) -> f64 {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].tag == tag)
            .map(|e| self.edge_length(e))
            .sum()
    }

    /// Edge-incidence audit: every edge has one or two incident cells,
    /// interface edges separate a fluid and a porous cell, cells are
    /// positively oriented and no vertex hangs on a boundary edge.
    pub fn audit(&self) -> std::result::Result<(), String> {
        for (k, cell) in self.cells.iter().enumerate() {
            let [a, b, c] = *cell;
            if signed_area(&self.vertices[a], &self.vertices[b], &self.vertices[c]) <= 0.0 {
                return Err(format!("cell {k} is not positively oriented"));
            }
        }
        let mut count = vec![0usize; self.edges.len()];
        for local in &self.cell_edges {
            for &e in local {
                count[e] += 1;
            }
        }
        for (id, e) in self.edges.iter().enumerate() {
            let expected = if e.is_boundary() { 1 } else { 2 };
            if count[id] != expected {
                return Err(format!("edge {id} has {} incident cells", count[id]));
            }
            if e.tag == EdgeTag::GammaFP {
                let (c0, c1) = (e.cells.0, e.cells.1.unwrap());
                if self.subdomains[c0] == self.subdomains[c1] {
                    return Err(format!("interface edge {id} does not separate subdomains"));
                }
            }
        }
        // a simply connected domain has Euler characteristic 1; a hanging
        // node leaves a degenerate hole behind
        let euler = self.vertices.len() as i64 - self.edges.len() as i64 + self.cells.len() as i64;
        if euler != 1 {
            return Err(format!("Euler characteristic {euler} != 1"));
        }
        let boundary: Vec<&Edge> = self.edges.iter().filter(|e| e.is_boundary()).collect();
        for e in &boundary {
            let p = self.vertices[e.vertices[0]];
            let q = self.vertices[e.vertices[1]];
            let d = q - p;
            for other in &boundary {
                for &v in &other.vertices {
                    if e.vertices.contains(&v) {
                        continue;
                    }
                    let r = self.vertices[v] - p;
                    let s = r.dot(&d) / d.norm_squared();
                    if s > 1e-12 && s < 1.0 - 1e-12 && d.perp(&r).abs() <= 1e-12 * d.norm_squared()
                    {
                        return Err(format!(
                            "vertex {v} hangs on boundary edge {:?}",
                            e.vertices
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Axis-aligned rectangle split horizontally into a porous lower part and a
/// fluid upper part.
#[derive(Debug, Clone, PartialEq)]
pub struct RectangleDomain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub y_interface: f64,
    /// Tag of the porous vertical sides.
    pub porous_sides: BoundaryTag,
    /// Tag of the porous bottom side.
    pub porous_bottom: BoundaryTag,
}

impl Default for RectangleDomain {
    fn default() -> Self {
        RectangleDomain {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
            y_interface: 0.5,
            porous_sides: BoundaryTag::GammaPN,
            porous_bottom: BoundaryTag::GammaPD,
        }
    }
}

/// Structured triangulation of a split rectangle.
///
/// The vertical grid is the uniform `ny`-row partition with the interface
/// line inserted when it is not already a grid line, so every cell lies in
/// exactly one subdomain. Each grid rectangle is cut along its
/// lower-left/upper-right diagonal, which becomes the refinement edge.
pub fn build_reference_geometry(domain: &RectangleDomain, nx: usize, ny: usize) -> Result<Mesh> {
    let RectangleDomain {
        x_min,
        x_max,
        y_min,
        y_max,
        y_interface,
        ..
    } = *domain;
    if !(x_max > x_min && y_max > y_min)
        || ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite())
    {
        return Err(Error::InvalidGeometry("degenerate rectangle".into()));
    }
    if !(y_interface > y_min && y_interface < y_max) {
        return Err(Error::InvalidGeometry(
            "interface must lie strictly inside the rectangle".into(),
        ));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter(
            "nx and ny must be at least 1".into(),
        ));
    }
    let dy = (y_max - y_min) / ny as f64;
    let tol = 1e-12 * (y_max - y_min);
    let mut ys: Vec<f64> = (0..=ny).map(|j| y_min + dy * j as f64).collect();
    if let Some(j) = ys.iter().position(|&y| (y - y_interface).abs() <= tol) {
        ys[j] = y_interface;
    } else {
        ys.push(y_interface);
        ys.sort_by(f64::total_cmp);
    }
    let xs: Vec<f64> = (0..=nx)
        .map(|i| x_min + (x_max - x_min) * i as f64 / nx as f64)
        .collect();
    let rows = ys.len() - 1;
    let id = |i: usize, j: usize| j * (nx + 1) + i;

    let mut vertices = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            vertices.push(Point::new(x, y));
        }
    }
    let mut cells = Vec::with_capacity(2 * nx * rows);
    let mut subdomains = Vec::with_capacity(2 * nx * rows);
    for j in 0..rows {
        let sub = if 0.5 * (ys[j] + ys[j + 1]) > y_interface {
            Subdomain::Fluid
        } else {
            Subdomain::Porous
        };
        for i in 0..nx {
            cells.push([id(i + 1, j), id(i + 1, j + 1), id(i, j)]);
            cells.push([id(i, j + 1), id(i, j), id(i + 1, j + 1)]);
            subdomains.push(sub);
            subdomains.push(sub);
        }
    }

    let side_tag = |y0: f64, y1: f64| {
        if 0.5 * (y0 + y1) > y_interface {
            BoundaryTag::GammaF
        } else {
            domain.porous_sides
        }
    };
    let mut boundary = Vec::new();
    for i in 0..nx {
        boundary.push(([id(i, 0), id(i + 1, 0)], domain.porous_bottom));
        boundary.push(([id(i, rows), id(i + 1, rows)], BoundaryTag::GammaF));
    }
    for j in 0..rows {
        let tag = side_tag(ys[j], ys[j + 1]);
        boundary.push(([id(0, j), id(0, j + 1)], tag));
        boundary.push(([id(nx, j), id(nx, j + 1)], tag));
    }
    Mesh::with_refinement_edges(vertices, cells, subdomains, &boundary)
}
