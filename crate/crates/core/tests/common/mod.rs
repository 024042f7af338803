//! Independent oracles shared by the integration tests: Gauss-Legendre
//! quadrature on collapsed triangles, global basis functions built from
//! barycentric coordinates, dense bilinear forms and estimator terms.

#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix2, Matrix3, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stokes_biot::estimator::{EstimatorOptions, Term, TermTable, NUM_TERMS};
use stokes_biot::mesh::{
    build_reference_geometry, EdgeTag, Mesh, Point, RectangleDomain, Subdomain, Vec2,
};
use stokes_biot::model::{InterfaceData, PhysicalParams, SourceData};
use stokes_biot::spaces::{DofMap, Field};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- quadrature

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out
}

/// Points and weights on a triangle from a collapsed tensor Gauss rule,
/// exact for polynomials of degree `2n - 2`.
pub fn triangle_rule(p: &[Point; 3], n: usize) -> Vec<(Point, f64)> {
    let g = gauss_legendre(n);
    let det = ((p[1] - p[0]).perp(&(p[2] - p[0]))).abs();
    let mut out = Vec::with_capacity(n * n);
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            let (s, t) = (u, v * (1.0 - u));
            out.push((
                p[0] + (p[1] - p[0]) * s + (p[2] - p[0]) * t,
                wu * wv * (1.0 - u) * det,
            ));
        }
    }
    out
}

/// Points and weights on a segment.
pub fn segment_rule(a: &Point, b: &Point, n: usize) -> Vec<(Point, f64)> {
    let len = (b - a).norm();
    gauss_legendre(n)
        .into_iter()
        .map(|(s, w)| (a + (b - a) * s, w * len))
        .collect()
}

// ------------------------------------------------------------------ geometry

/// Barycentric coordinates of a triangle as affine functions.
#[derive(Debug, Clone)]
pub struct Bary {
    pub p: [Point; 3],
    inv: Matrix3<f64>,
}

impl Bary {
    pub fn new(p: [Point; 3]) -> Self {
        let m = Matrix3::new(
            p[0].x, p[1].x, p[2].x, p[0].y, p[1].y, p[2].y, 1.0, 1.0, 1.0,
        );
        Bary {
            p,
            inv: m.try_inverse().expect("degenerate triangle"),
        }
    }

    pub fn of_cell(mesh: &Mesh, k: usize) -> Self {
        Self::new(mesh.cell(k).map(|v| mesh.vertex(v)))
    }

    pub fn lambda(&self, x: &Point) -> [f64; 3] {
        let l = self.inv * Vector3::new(x.x, x.y, 1.0);
        [l[0], l[1], l[2]]
    }

    pub fn grad(&self, i: usize) -> Vec2 {
        Vec2::new(self.inv[(i, 0)], self.inv[(i, 1)])
    }

    pub fn area(&self) -> f64 {
        0.5 * ((self.p[1] - self.p[0]).perp(&(self.p[2] - self.p[0]))).abs()
    }

    pub fn diameter(&self) -> f64 {
        (0..3)
            .map(|i| (self.p[(i + 1) % 3] - self.p[i]).norm())
            .fold(0.0, f64::max)
    }

    pub fn centroid(&self) -> Point {
        Point::from((self.p[0].coords + self.p[1].coords + self.p[2].coords) / 3.0)
    }
}

/// Unit normal of edge `e` pointing out of cell `k`.
pub fn outward_normal(mesh: &Mesh, e: usize, k: usize) -> Vec2 {
    let [a, b] = mesh.edge(e).vertices;
    let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
    let d = pb - pa;
    let n = Vec2::new(d.y, -d.x) / d.norm();
    let c = Bary::of_cell(mesh, k).centroid();
    if n.dot(&(pa - c)) > 0.0 {
        n
    } else {
        -n
    }
}

/// Global normal carrying the RT0 flux dof: the lower-to-higher vertex
/// direction rotated clockwise.
pub fn global_normal(mesh: &Mesh, e: usize) -> Vec2 {
    let [a, b] = mesh.edge(e).vertices;
    let d = mesh.vertex(b) - mesh.vertex(a);
    Vec2::new(d.y, -d.x) / d.norm()
}

/// Fluid cell, porous cell and fluid outward normal of an interface edge.
pub fn interface_cells(mesh: &Mesh, e: usize) -> (usize, usize, Vec2) {
    let edge = mesh.edge(e);
    let (a, b) = (
        edge.cells.0,
        edge.cells.1.expect("interface edge has two cells"),
    );
    let (kf, kp) = if mesh.subdomain(a) == Subdomain::Fluid {
        (a, b)
    } else {
        (b, a)
    };
    (kf, kp, outward_normal(mesh, e, kf))
}

// --------------------------------------------------------------------- basis

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Entity {
    /// Quadratic velocity node at a vertex, component.
    VelocityVertex(usize, usize),
    /// Quadratic velocity node at an edge midpoint, component.
    VelocityEdge(usize, usize),
    PressureVertex(usize),
    FluxEdge(usize),
    PressureCell(usize),
    DisplacementVertex(usize, usize),
    MultiplierEdge(usize),
}

/// Value, gradient and (for quadratics) component Hessians of a basis
/// function on one cell. Scalars use the first component.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub value: Vec2,
    pub grad: Matrix2<f64>,
    pub hessian: [Matrix2<f64>; 2],
}

impl Shape {
    fn zero() -> Self {
        Shape {
            value: Vec2::zeros(),
            grad: Matrix2::zeros(),
            hessian: [Matrix2::zeros(); 2],
        }
    }

    pub fn div(&self) -> f64 {
        self.grad.trace()
    }

    pub fn sym_grad(&self) -> Matrix2<f64> {
        (self.grad + self.grad.transpose()) * 0.5
    }
}

/// Global basis functions evaluated from first principles.
pub struct Basis<'a> {
    pub mesh: &'a Mesh,
    pub dofs: &'a DofMap,
    pub entity: Vec<Entity>,
    pub cell_dofs: Vec<Vec<usize>>,
}

impl<'a> Basis<'a> {
    pub fn new(mesh: &'a Mesh, dofs: &'a DofMap) -> Self {
        let mut map: HashMap<usize, Entity> = HashMap::new();
        let uf = dofs.range(Field::StokesVelocity).start;
        let pf = dofs.range(Field::StokesPressure).start;
        let eta = dofs.range(Field::Displacement).start;
        for v in 0..mesh.num_vertices() {
            if let Some(n) = dofs.fluid_vertex_node(v) {
                for c in 0..2 {
                    map.insert(uf + 2 * n + c, Entity::VelocityVertex(v, c));
                }
                map.insert(pf + n, Entity::PressureVertex(v));
            }
            if let Some(n) = dofs.porous_vertex_index(v) {
                for c in 0..2 {
                    map.insert(eta + 2 * n + c, Entity::DisplacementVertex(v, c));
                }
            }
        }
        for e in 0..mesh.num_edges() {
            if let Some(n) = dofs.fluid_edge_node(e) {
                for c in 0..2 {
                    map.insert(uf + 2 * n + c, Entity::VelocityEdge(e, c));
                }
            }
            if let Some(d) = dofs.darcy_edge_dof(e) {
                map.insert(d, Entity::FluxEdge(e));
            }
            if let Some(d) = dofs.multiplier_dof(e) {
                map.insert(d, Entity::MultiplierEdge(e));
            }
        }
        for k in mesh.cells_in(Subdomain::Porous) {
            map.insert(dofs.darcy_pressure_dof(k), Entity::PressureCell(k));
        }
        assert_eq!(
            map.len(),
            dofs.num_dofs(),
            "every dof is attached to one entity"
        );
        let entity: Vec<Entity> = (0..dofs.num_dofs()).map(|d| map[&d]).collect();

        let mut cell_dofs = vec![Vec::new(); mesh.num_cells()];
        for (d, ent) in entity.iter().enumerate() {
            for (k, list) in cell_dofs.iter_mut().enumerate() {
                let verts = mesh.cell(k);
                let edges = mesh.cell_edges(k);
                let fluid = mesh.subdomain(k) == Subdomain::Fluid;
                let hit = match *ent {
                    Entity::VelocityVertex(v, _) | Entity::PressureVertex(v) => {
                        fluid && verts.contains(&v)
                    }
                    Entity::VelocityEdge(e, _) => fluid && edges.contains(&e),
                    Entity::FluxEdge(e) => !fluid && edges.contains(&e),
                    Entity::PressureCell(c) => c == k,
                    Entity::DisplacementVertex(v, _) => !fluid && verts.contains(&v),
                    Entity::MultiplierEdge(_) => false,
                };
                if hit {
                    list.push(d);
                }
            }
        }
        Basis {
            mesh,
            dofs,
            entity,
            cell_dofs,
        }
    }

    fn local_vertex(&self, k: usize, v: usize) -> usize {
        self.mesh
            .cell(k)
            .iter()
            .position(|&w| w == v)
            .expect("vertex of cell")
    }

    /// Basis function `d` restricted to cell `k`, at `x`.
    pub fn shape(&self, d: usize, k: usize, x: &Point) -> Shape {
        if !self.cell_dofs[k].contains(&d) {
            return Shape::zero();
        }
        let b = Bary::of_cell(self.mesh, k);
        let l = b.lambda(x);
        let mut s = Shape::zero();
        let outer = |a: Vec2, c: Vec2| a * c.transpose();
        let set_component =
            |s: &mut Shape, c: usize, value: f64, grad: Vec2, hess: Matrix2<f64>| {
                s.value[c] = value;
                s.grad[(c, 0)] = grad.x;
                s.grad[(c, 1)] = grad.y;
                s.hessian[c] = hess;
            };
        match self.entity[d] {
            Entity::VelocityVertex(v, c) => {
                let i = self.local_vertex(k, v);
                let g = b.grad(i);
                set_component(
                    &mut s,
                    c,
                    l[i] * (2.0 * l[i] - 1.0),
                    g * (4.0 * l[i] - 1.0),
                    outer(g, g) * 4.0,
                );
            }
            Entity::VelocityEdge(e, c) => {
                let [va, vb] = self.mesh.edge(e).vertices;
                let (i, j) = (self.local_vertex(k, va), self.local_vertex(k, vb));
                let (gi, gj) = (b.grad(i), b.grad(j));
                let hess = (outer(gi, gj) + outer(gj, gi)) * 4.0;
                set_component(
                    &mut s,
                    c,
                    4.0 * l[i] * l[j],
                    (gi * l[j] + gj * l[i]) * 4.0,
                    hess,
                );
            }
            Entity::PressureVertex(v) => {
                let i = self.local_vertex(k, v);
                set_component(&mut s, 0, l[i], b.grad(i), Matrix2::zeros());
            }
            Entity::DisplacementVertex(v, c) => {
                let i = self.local_vertex(k, v);
                set_component(&mut s, c, l[i], b.grad(i), Matrix2::zeros());
            }
            Entity::PressureCell(_) => s.value.x = 1.0,
            Entity::FluxEdge(e) => {
                let [va, vb] = self.mesh.edge(e).vertices;
                let opposite = *self
                    .mesh
                    .cell(k)
                    .iter()
                    .find(|&&w| w != va && w != vb)
                    .unwrap();
                let p = self.mesh.vertex(opposite);
                let sign =
                    if outward_normal(self.mesh, e, k).dot(&global_normal(self.mesh, e)) > 0.0 {
                        1.0
                    } else {
                        -1.0
                    };
                let c = sign / (2.0 * b.area());
                s.value = (x - p) * c;
                s.grad = Matrix2::identity() * c;
            }
            Entity::MultiplierEdge(_) => {}
        }
        s
    }

    /// Sum of `coeffs[d] * shape(d)` over the dofs of `field` on cell `k`.
    pub fn field(&self, coeffs: &[f64], field: Field, k: usize, x: &Point) -> Shape {
        let range = self.dofs.range(field);
        let mut out = Shape::zero();
        for &d in &self.cell_dofs[k] {
            if range.contains(&d) && coeffs[d] != 0.0 {
                let s = self.shape(d, k, x);
                out.value += s.value * coeffs[d];
                out.grad += s.grad * coeffs[d];
                for c in 0..2 {
                    out.hessian[c] += s.hessian[c] * coeffs[d];
                }
            }
        }
        out
    }

    pub fn dofs_of(&self, k: usize, field: Field) -> Vec<usize> {
        let range = self.dofs.range(field);
        self.cell_dofs[k]
            .iter()
            .copied()
            .filter(|d| range.contains(d))
            .collect()
    }
}

// ---------------------------------------------------------------- fixtures

/// Structured `nx` by `ny` mesh of the unit square mapped by a random affine
/// map, with interior vertices jittered.
pub fn random_fixture(nx: usize, ny: usize, seed: u64) -> Mesh {
    let base = build_reference_geometry(&RectangleDomain::default(), nx, ny).unwrap();
    let mut r = rng(seed);
    let a = Matrix2::new(
        1.0 + r.gen_range(-0.3..0.3),
        r.gen_range(-0.3..0.3),
        r.gen_range(-0.3..0.3),
        1.0 + r.gen_range(-0.3..0.3),
    );
    let shift = Vec2::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
    let boundary = base.boundary_edges();
    let on_boundary: Vec<bool> = {
        let mut b = vec![false; base.num_vertices()];
        for ([p, q], _) in &boundary {
            b[*p] = true;
            b[*q] = true;
        }
        b
    };
    let h = 1.0 / nx.max(ny) as f64;
    let vertices: Vec<Point> = base
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut q = *p;
            if !on_boundary[i] {
                q.x += r.gen_range(-0.2..0.2) * h;
                q.y += r.gen_range(-0.2..0.2) * h;
            }
            Point::from(a * q.coords + shift)
        })
        .collect();
    Mesh::with_refinement_edges(
        vertices,
        base.cells().to_vec(),
        base.subdomains().to_vec(),
        &boundary,
    )
    .unwrap()
}

/// The same mesh with vertices and cells renumbered.
pub fn relabel(mesh: &Mesh, seed: u64) -> (Mesh, Vec<usize>, Vec<usize>) {
    let mut r = rng(seed);
    let mut vmap: Vec<usize> = (0..mesh.num_vertices()).collect();
    vmap.shuffle(&mut r);
    let mut cmap: Vec<usize> = (0..mesh.num_cells()).collect();
    cmap.shuffle(&mut r);
    let mut vertices = vec![mesh.vertex(0); mesh.num_vertices()];
    for (v, &w) in vmap.iter().enumerate() {
        vertices[w] = mesh.vertex(v);
    }
    let mut cells = vec![[0; 3]; mesh.num_cells()];
    let mut subdomains = mesh.subdomains().to_vec();
    for (k, &j) in cmap.iter().enumerate() {
        cells[j] = mesh.cell(k).map(|v| vmap[v]);
        subdomains[j] = mesh.subdomain(k);
    }
    let boundary: Vec<_> = mesh
        .boundary_edges()
        .into_iter()
        .map(|([a, b], t)| ([vmap[a], vmap[b]], t))
        .collect();
    (
        Mesh::with_refinement_edges(vertices, cells, subdomains, &boundary).unwrap(),
        vmap,
        cmap,
    )
}

/// Random admissible coefficients with an anisotropic permeability.
pub fn random_params(seed: u64) -> PhysicalParams {
    let mut r = rng(seed);
    let (k11, k22) = (r.gen_range(0.5..2.0), r.gen_range(0.5..2.0));
    let k12 = r.gen_range(-0.3..0.3);
    PhysicalParams {
        mu: r.gen_range(0.5..2.0),
        k: Matrix2::new(k11, k12, k12, k22),
        lambda_p: r.gen_range(0.5..3.0),
        mu_p: r.gen_range(0.5..2.0),
        alpha: r.gen_range(0.2..1.0),
        s0: r.gen_range(0.1..1.0),
        alpha_bjs: r.gen_range(0.2..1.5),
    }
}

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// Random polynomial data: cubic sources and forces, quadratic interface
/// data, linear boundary data. Every integrand of the estimator is then a
/// polynomial the library's rules integrate exactly.
#[derive(Debug, Clone)]
pub struct PolyData {
    pub params: PhysicalParams,
    coeffs: Vec<[f64; 10]>,
}

fn cubic(c: &[f64; 10], x: &Point, t: f64) -> f64 {
    let (a, b) = (x.x, x.y);
    let s = 1.0 + 0.5 * t;
    s * (c[0]
        + c[1] * a
        + c[2] * b
        + c[3] * a * a
        + c[4] * a * b
        + c[5] * b * b
        + c[6] * a * a * a
        + c[7] * a * a * b
        + c[8] * a * b * b
        + c[9] * b * b * b)
}

fn truncated(c: &[f64; 10], degree: usize) -> [f64; 10] {
    let keep = match degree {
        0 => 1,
        1 => 3,
        2 => 6,
        _ => 10,
    };
    let mut out = [0.0; 10];
    out[..keep].copy_from_slice(&c[..keep]);
    out
}

impl PolyData {
    pub fn new(params: PhysicalParams, seed: u64) -> Self {
        let mut r = rng(seed);
        let coeffs = (0..16)
            .map(|_| std::array::from_fn(|_| r.gen_range(-1.0..1.0)))
            .collect();
        PolyData { params, coeffs }
    }

    fn eval(&self, slot: usize, degree: usize, x: &Point, t: f64) -> f64 {
        cubic(&truncated(&self.coeffs[slot], degree), x, t)
    }

    fn vec(&self, slot: usize, degree: usize, x: &Point, t: f64) -> Vec2 {
        Vec2::new(
            self.eval(slot, degree, x, t),
            self.eval(slot + 1, degree, x, t),
        )
    }
}

impl SourceData for PolyData {
    fn params(&self) -> &PhysicalParams {
        &self.params
    }
    fn fluid_force(&self, x: &Point, t: f64) -> Vec2 {
        self.vec(0, 3, x, t)
    }
    fn fluid_source(&self, x: &Point, t: f64) -> f64 {
        self.eval(2, 3, x, t)
    }
    fn porous_force(&self, x: &Point, t: f64) -> Vec2 {
        self.vec(3, 3, x, t)
    }
    fn porous_source(&self, x: &Point, t: f64) -> f64 {
        self.eval(5, 3, x, t)
    }
    fn fluid_velocity_bc(&self, x: &Point, t: f64) -> Vec2 {
        self.vec(6, 1, x, t)
    }
    fn displacement_bc(&self, x: &Point, t: f64) -> Vec2 {
        self.vec(8, 1, x, t)
    }
    fn darcy_velocity_bc(&self, x: &Point, t: f64) -> Vec2 {
        self.vec(10, 1, x, t)
    }
    fn pressure_bc(&self, x: &Point, t: f64) -> f64 {
        self.eval(12, 1, x, t)
    }
    fn interface_data(&self, x: &Point, t: f64, n_f: &Vec2) -> InterfaceData {
        InterfaceData {
            g1: self.eval(13, 2, x, t),
            g2: self.eval(14, 2, x, t),
            g3: self.vec(0, 2, x, t) + n_f * self.eval(15, 1, x, t),
            g4: self.eval(15, 2, x, t),
        }
    }
    fn initial_pressure(&self, x: &Point) -> f64 {
        self.eval(12, 1, x, 0.0)
    }
    fn initial_displacement(&self, x: &Point) -> Vec2 {
        self.vec(8, 1, x, 0.0)
    }
}

// -------------------------------------------------------------- form oracles

pub const CELL_POINTS: usize = 8;
pub const EDGE_POINTS: usize = 8;

fn dense(dofs: &DofMap) -> DMatrix<f64> {
    DMatrix::zeros(dofs.num_dofs(), dofs.num_dofs())
}

/// `sum_K int_K integrand(phi_trial, phi_test)` over cells of `sub`.
fn cell_form(
    basis: &Basis,
    sub: Subdomain,
    rows: Field,
    cols: Field,
    integrand: impl Fn(&Shape, &Shape) -> f64,
) -> DMatrix<f64> {
    let mesh = basis.mesh;
    let mut m = dense(basis.dofs);
    for k in mesh.cells_in(sub) {
        let b = Bary::of_cell(mesh, k);
        let (ri, ci) = (basis.dofs_of(k, rows), basis.dofs_of(k, cols));
        for (x, w) in triangle_rule(&b.p, CELL_POINTS) {
            let rs: Vec<Shape> = ri.iter().map(|&d| basis.shape(d, k, &x)).collect();
            let cs: Vec<Shape> = ci.iter().map(|&d| basis.shape(d, k, &x)).collect();
            for (i, r) in ri.iter().zip(&rs) {
                for (j, c) in ci.iter().zip(&cs) {
                    m[(*i, *j)] += w * integrand(c, r);
                }
            }
        }
    }
    m
}

fn ddot(a: &Matrix2<f64>, b: &Matrix2<f64>) -> f64 {
    a.component_mul(b).sum()
}

pub fn oracle_a_f(basis: &Basis, params: &PhysicalParams) -> DMatrix<f64> {
    let f = Field::StokesVelocity;
    cell_form(basis, Subdomain::Fluid, f, f, |u, v| {
        2.0 * params.mu * ddot(&u.sym_grad(), &v.sym_grad())
    })
}

pub fn oracle_a_p_d(basis: &Basis, params: &PhysicalParams) -> DMatrix<f64> {
    let k_inv = params.k.try_inverse().unwrap();
    let f = Field::DarcyVelocity;
    cell_form(basis, Subdomain::Porous, f, f, |u, v| {
        params.mu * (k_inv * u.value).dot(&v.value)
    })
}

pub fn oracle_a_p_e(basis: &Basis, params: &PhysicalParams) -> DMatrix<f64> {
    let f = Field::Displacement;
    cell_form(basis, Subdomain::Porous, f, f, |u, v| {
        2.0 * params.mu_p * ddot(&u.sym_grad(), &v.sym_grad()) + params.lambda_p * u.div() * v.div()
    })
}

/// `b(v, w) = -(div v, w)`, rows indexing the pressure.
pub fn oracle_b_f(basis: &Basis) -> DMatrix<f64> {
    cell_form(
        basis,
        Subdomain::Fluid,
        Field::StokesPressure,
        Field::StokesVelocity,
        |v, w| -v.div() * w.value.x,
    )
}

pub fn oracle_b_p_darcy(basis: &Basis) -> DMatrix<f64> {
    cell_form(
        basis,
        Subdomain::Porous,
        Field::DarcyPressure,
        Field::DarcyVelocity,
        |v, w| -v.div() * w.value.x,
    )
}

pub fn oracle_b_p_elastic(basis: &Basis) -> DMatrix<f64> {
    cell_form(
        basis,
        Subdomain::Porous,
        Field::DarcyPressure,
        Field::Displacement,
        |v, w| -v.div() * w.value.x,
    )
}

pub fn oracle_pressure_mass(basis: &Basis) -> DMatrix<f64> {
    let f = Field::DarcyPressure;
    cell_form(basis, Subdomain::Porous, f, f, |p, q| p.value.x * q.value.x)
}

/// Interface traces of the basis functions of one field, seen from the
/// side owning that field.
fn interface_traces(basis: &Basis, e: usize, field: Field, x: &Point) -> Vec<(usize, Vec2)> {
    let (kf, kp, _) = interface_cells(basis.mesh, e);
    let k = match field {
        Field::StokesVelocity => kf,
        _ => kp,
    };
    basis
        .dofs_of(k, field)
        .into_iter()
        .map(|d| (d, basis.shape(d, k, x).value))
        .collect()
}

fn interface_points(mesh: &Mesh, e: usize) -> Vec<(Point, f64)> {
    let [a, b] = mesh.edge(e).vertices;
    segment_rule(&mesh.vertex(a), &mesh.vertex(b), EDGE_POINTS)
}

pub fn oracle_a_bjs(basis: &Basis, params: &PhysicalParams) -> DMatrix<f64> {
    let mesh = basis.mesh;
    let mut m = dense(basis.dofs);
    for e in mesh.interface_edges() {
        let (_, _, n_f) = interface_cells(mesh, e);
        let tau = Vec2::new(-n_f.y, n_f.x);
        let c = params.mu * params.alpha_bjs / tau.dot(&(params.k * tau)).sqrt();
        for (x, w) in interface_points(mesh, e) {
            let mut t: Vec<(usize, f64)> = interface_traces(basis, e, Field::StokesVelocity, &x)
                .into_iter()
                .map(|(d, v)| (d, v.dot(&tau)))
                .collect();
            t.extend(
                interface_traces(basis, e, Field::Displacement, &x)
                    .into_iter()
                    .map(|(d, v)| (d, -v.dot(&tau))),
            );
            for &(i, ti) in &t {
                for &(j, tj) in &t {
                    m[(i, j)] += w * c * ti * tj;
                }
            }
        }
    }
    m
}

/// `b_Gamma(v_f, v_p, xi; mu)`, rows indexing the multiplier.
pub fn oracle_b_gamma(basis: &Basis) -> DMatrix<f64> {
    let mesh = basis.mesh;
    let mut m = dense(basis.dofs);
    for e in mesh.interface_edges() {
        let (_, _, n_f) = interface_cells(mesh, e);
        let row = basis.dofs.multiplier_dof(e).unwrap();
        for (x, w) in interface_points(mesh, e) {
            for (field, n) in [
                (Field::StokesVelocity, n_f),
                (Field::DarcyVelocity, -n_f),
                (Field::Displacement, -n_f),
            ] {
                for (d, v) in interface_traces(basis, e, field, &x) {
                    m[(row, d)] += w * v.dot(&n);
                }
            }
        }
    }
    m
}

/// Dense steady and rate operators composed from the weak form: rows are
/// the momentum, mass, Darcy, storage, elasticity and multiplier equations
/// tested with the field of the same block.
pub fn oracle_operators(basis: &Basis, params: &PhysicalParams) -> (DMatrix<f64>, DMatrix<f64>) {
    let dofs = basis.dofs;
    let mut steady =
        oracle_a_f(basis, params) + oracle_a_p_d(basis, params) + oracle_a_p_e(basis, params);
    let mut rate = dense(dofs);
    let b_f = oracle_b_f(basis);
    let b_d = oracle_b_p_darcy(basis);
    let b_e = oracle_b_p_elastic(basis);
    steady += b_f.transpose() - &b_f;
    steady += b_d.transpose() - &b_d;
    steady += b_e.transpose() * params.alpha;
    rate -= &b_e * params.alpha;
    rate += oracle_pressure_mass(basis) * params.s0;
    let bjs = oracle_a_bjs(basis, params);
    let eta = dofs.range(Field::Displacement);
    for i in 0..dofs.num_dofs() {
        for j in 0..dofs.num_dofs() {
            if eta.contains(&j) {
                rate[(i, j)] += bjs[(i, j)];
            } else {
                steady[(i, j)] += bjs[(i, j)];
            }
        }
    }
    let b_g = oracle_b_gamma(basis);
    steady += b_g.transpose();
    for i in 0..dofs.num_dofs() {
        for j in 0..dofs.num_dofs() {
            if eta.contains(&j) {
                rate[(i, j)] += b_g[(i, j)];
            } else {
                steady[(i, j)] += b_g[(i, j)];
            }
        }
    }
    (steady, rate)
}

/// `max |a - b| / max(max |b|, 1)`.
pub fn relative_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let scale = b.amax().max(1.0);
    (a - b).amax() / scale
}

// --------------------------------------------------------- estimator oracle

struct Projection {
    force: [Vector3<f64>; 2],
    source: Vector3<f64>,
    fluid: bool,
}

impl Projection {
    /// Cell mean (fluid) or P1 L2 projection (porous), from a
    /// high-order rule and a local mass solve in barycentric coordinates.
    fn new(mesh: &Mesh, data: &dyn SourceData, k: usize, t: f64) -> Self {
        let b = Bary::of_cell(mesh, k);
        let fluid = mesh.subdomain(k) == Subdomain::Fluid;
        let pts = triangle_rule(&b.p, CELL_POINTS);
        let sample = |x: &Point| {
            if fluid {
                (data.fluid_force(x, t), data.fluid_source(x, t))
            } else {
                (data.porous_force(x, t), data.porous_source(x, t))
            }
        };
        if fluid {
            let area = b.area();
            let (mut f, mut q) = (Vec2::zeros(), 0.0);
            for (x, w) in &pts {
                let (fx, qx) = sample(x);
                f += fx * *w;
                q += w * qx;
            }
            let c = |v: f64| Vector3::new(v / area, 0.0, 0.0);
            return Projection {
                force: [c(f.x), c(f.y)],
                source: c(q),
                fluid,
            };
        }
        let mut mass = Matrix3::zeros();
        let mut rhs = [Vector3::zeros(); 3];
        for (x, w) in &pts {
            let l = b.lambda(x);
            let (f, q) = sample(x);
            for i in 0..3 {
                for j in 0..3 {
                    mass[(i, j)] += w * l[i] * l[j];
                }
                rhs[0][i] += w * f.x * l[i];
                rhs[1][i] += w * f.y * l[i];
                rhs[2][i] += w * q * l[i];
            }
        }
        let lu = mass.lu();
        Projection {
            force: [lu.solve(&rhs[0]).unwrap(), lu.solve(&rhs[1]).unwrap()],
            source: lu.solve(&rhs[2]).unwrap(),
            fluid,
        }
    }

    fn eval(&self, c: &Vector3<f64>, l: &[f64; 3]) -> f64 {
        if self.fluid {
            c[0]
        } else {
            c[0] * l[0] + c[1] * l[1] + c[2] * l[2]
        }
    }

    fn force(&self, l: &[f64; 3]) -> Vec2 {
        Vec2::new(self.eval(&self.force[0], l), self.eval(&self.force[1], l))
    }

    fn source(&self, l: &[f64; 3]) -> f64 {
        self.eval(&self.source, l)
    }
}

fn stokes_stress(params: &PhysicalParams, grad: &Matrix2<f64>, p: f64) -> Matrix2<f64> {
    (grad + grad.transpose()) * params.mu - Matrix2::identity() * p
}

fn biot_stress(params: &PhysicalParams, grad: &Matrix2<f64>, p: f64) -> Matrix2<f64> {
    Matrix2::identity() * (params.lambda_p * grad.trace() - params.alpha * p)
        + (grad + grad.transpose()) * params.mu_p
}

/// Weighted squared norms of one cell, evaluated from scratch.
pub fn oracle_cell_terms(
    basis: &Basis,
    data: &dyn SourceData,
    previous: &[f64],
    current: &[f64],
    dt: f64,
    t: f64,
    options: EstimatorOptions,
    k: usize,
) -> TermTable {
    let mesh = basis.mesh;
    let params = data.params();
    let k_inv = params.k.try_inverse().unwrap();
    let b = Bary::of_cell(mesh, k);
    let h2 = b.diameter().powi(2);
    let proj = Projection::new(mesh, data, k, t);
    let mut out = [0.0; NUM_TERMS];
    let mut add = |term: Term, v: f64| out[term.index()] += v;
    let fluid = mesh.subdomain(k) == Subdomain::Fluid;

    for (x, w) in triangle_rule(&b.p, CELL_POINTS) {
        let l = b.lambda(&x);
        if fluid {
            let u = basis.field(current, Field::StokesVelocity, k, &x);
            let p = basis.field(current, Field::StokesPressure, k, &x);
            let grad_p = Vec2::new(p.grad[(0, 0)], p.grad[(0, 1)]);
            let [h0, h1] = u.hessian;
            let div_sym = Vec2::new(
                2.0 * h0[(0, 0)] + h0[(1, 1)] + h1[(0, 1)],
                h1[(0, 0)] + 2.0 * h1[(1, 1)] + h0[(1, 0)],
            ) * params.mu;
            add(
                Term::FluidMomentum,
                w * h2 * (proj.force(&l) + div_sym - grad_p).norm_squared(),
            );
            add(
                Term::FluidDivergence,
                w * (proj.source(&l) - u.div()).powi(2),
            );
            add(
                Term::FluidForceOscillation,
                w * h2 * (data.fluid_force(&x, t) - proj.force(&l)).norm_squared(),
            );
            add(
                Term::FluidSourceOscillation,
                w * h2 * (data.fluid_source(&x, t) - proj.source(&l)).powi(2),
            );
        } else {
            let u = basis.field(current, Field::DarcyVelocity, k, &x);
            let p = basis.field(current, Field::DarcyPressure, k, &x).value.x;
            let p_old = basis.field(previous, Field::DarcyPressure, k, &x).value.x;
            let eta = basis.field(current, Field::Displacement, k, &x);
            let eta_old = basis.field(previous, Field::Displacement, k, &x);
            let r2 = k_inv * u.value * params.mu;
            let jac = k_inv * u.grad * params.mu;
            let curl = jac[(1, 0)] - jac[(0, 1)];
            let rate = (params.s0 * (p - p_old) + params.alpha * (eta.div() - eta_old.div())) / dt;
            let flux = if options.strict_printed_signs {
                u.div()
            } else {
                -u.div()
            };
            add(Term::PorousForce, w * h2 * proj.force(&l).norm_squared());
            add(Term::DarcyLaw, w * h2 * r2.norm_squared());
            add(Term::DarcyCurl, w * h2 * curl * curl);
            add(
                Term::PorousMass,
                w * (proj.source(&l) - rate + flux).powi(2),
            );
            add(
                Term::PorousForceOscillation,
                w * h2 * (data.porous_force(&x, t) - proj.force(&l)).norm_squared(),
            );
            add(
                Term::PorousSourceOscillation,
                w * h2 * (data.porous_source(&x, t) - proj.source(&l)).powi(2),
            );
        }
    }

    let traction = |j: usize, x: &Point, n: &Vec2| -> Vec2 {
        if mesh.subdomain(j) == Subdomain::Fluid {
            let u = basis.field(current, Field::StokesVelocity, j, x);
            let p = basis.field(current, Field::StokesPressure, j, x).value.x;
            stokes_stress(params, &u.grad, p) * n
        } else {
            let eta = basis.field(current, Field::Displacement, j, x);
            let p = basis.field(current, Field::DarcyPressure, j, x).value.x;
            let mu = if options.porous_jump_uses_mu_p {
                params.mu_p
            } else {
                params.mu
            };
            ((eta.grad + eta.grad.transpose()) * mu - Matrix2::identity() * p) * n
        }
    };

    for e in mesh.cell_edges(k) {
        let edge = mesh.edge(e);
        let h_e = mesh.edge_length(e);
        let pts = interface_points(mesh, e);
        match edge.tag {
            EdgeTag::Interior(sub) => {
                let other = if edge.cells.0 == k {
                    edge.cells.1.unwrap()
                } else {
                    edge.cells.0
                };
                let n = outward_normal(mesh, e, k);
                let v: f64 = pts
                    .iter()
                    .map(|(x, w)| w * (traction(k, x, &n) - traction(other, x, &n)).norm_squared())
                    .sum();
                add(
                    if sub == Subdomain::Fluid {
                        Term::FluidJump
                    } else {
                        Term::PorousJump
                    },
                    h_e * v,
                );
            }
            EdgeTag::GammaFP => {
                let (kf, kp, n_f) = interface_cells(mesh, e);
                let n_p = -n_f;
                let tau = Vec2::new(-n_f.y, n_f.x);
                let c = params.mu * params.alpha_bjs / tau.dot(&(params.k * tau)).sqrt();
                for (x, w) in &pts {
                    let g = data.interface_data(x, t, &n_f);
                    let u_f = basis.field(current, Field::StokesVelocity, kf, x);
                    let p_f = basis.field(current, Field::StokesPressure, kf, x).value.x;
                    let u_p = basis.field(current, Field::DarcyVelocity, kp, x).value;
                    let p_p = basis.field(current, Field::DarcyPressure, kp, x).value.x;
                    let eta = basis.field(current, Field::Displacement, kp, x);
                    let eta_old = basis.field(previous, Field::Displacement, kp, x);
                    let eta_rate = (eta.value - eta_old.value) / dt;
                    let t_f = stokes_stress(params, &u_f.grad, p_f) * n_f;
                    let t_p = biot_stress(params, &eta.grad, p_p) * n_p;
                    let r1 = u_f.value.dot(&n_f) + (eta_rate + u_p).dot(&n_p) - g.g1;
                    let r2 = p_p + t_f.dot(&n_f) - g.g2;
                    let r3 = t_f + t_p - g.g3;
                    let r4 = t_f.dot(&tau) + c * (u_f.value - eta_rate).dot(&tau) - g.g4;
                    add(Term::InterfaceMass, h_e * w * r1 * r1);
                    add(Term::InterfacePressure, h_e * w * r2 * r2);
                    add(Term::InterfaceTraction, h_e * w * r3.norm_squared());
                    add(Term::InterfaceSlip, h_e * w * r4 * r4);
                }
            }
            EdgeTag::Boundary(_) => {}
        }
    }
    out
}
