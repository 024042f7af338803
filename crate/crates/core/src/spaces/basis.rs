//! Shape functions on a physical triangle.
//!
//! Quadratic nodes are ordered vertices 0..3, then the midpoints of local
//! edges 0..3 (edge `i` is opposite vertex `i`). Raviart-Thomas functions
//! here are the local ones with unit outward flux through their own edge;
//! global orientation signs are applied by the caller.

use nalgebra::Matrix2;

use crate::mesh::{CellGeometry, Point, Vec2};

pub fn p1_values(bary: &[f64; 3]) -> [f64; 3] {
    *bary
}

pub fn p1_gradients(geom: &CellGeometry) -> [Vec2; 3] {
    geom.grad_bary
}

pub fn p2_values(bary: &[f64; 3]) -> [f64; 6] {
    let l = bary;
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
        4.0 * l[0] * l[1],
    ]
}

pub fn p2_gradients(geom: &CellGeometry, bary: &[f64; 3]) -> [Vec2; 6] {
    let l = bary;
    let g = &geom.grad_bary;
    [
        g[0] * (4.0 * l[0] - 1.0),
        g[1] * (4.0 * l[1] - 1.0),
        g[2] * (4.0 * l[2] - 1.0),
        (g[1] * l[2] + g[2] * l[1]) * 4.0,
        (g[2] * l[0] + g[0] * l[2]) * 4.0,
        (g[0] * l[1] + g[1] * l[0]) * 4.0,
    ]
}

/// Hessians of the quadratic shape functions (constant on the cell).
pub fn p2_hessians(geom: &CellGeometry) -> [Matrix2<f64>; 6] {
    let g = &geom.grad_bary;
    let outer = |a: &Vec2, b: &Vec2| a * b.transpose();
    let sym = |a: &Vec2, b: &Vec2| (outer(a, b) + outer(b, a)) * 4.0;
    [
        outer(&g[0], &g[0]) * 4.0,
        outer(&g[1], &g[1]) * 4.0,
        outer(&g[2], &g[2]) * 4.0,
        sym(&g[1], &g[2]),
        sym(&g[2], &g[0]),
        sym(&g[0], &g[1]),
    ]
}

/// Local RT0 functions at physical point `x`: `(x - a_i) / (2|K|)`.
pub fn rt0_values(geom: &CellGeometry, x: &Point) -> [Vec2; 3] {
    let s = 0.5 / geom.area;
    [
        (x - geom.vertices[0]) * s,
        (x - geom.vertices[1]) * s,
        (x - geom.vertices[2]) * s,
    ]
}

pub fn rt0_divergence(geom: &CellGeometry) -> f64 {
    1.0 / geom.area
}
