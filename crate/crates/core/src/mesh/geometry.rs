use nalgebra::Matrix2;

use super::{Point, Vec2};

/// Derived geometric quantities of a counterclockwise triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    /// Longest edge length `h_K`.
    pub diameter: f64,
    /// Diameter of the inscribed circle `rho_K`.
    pub inscribed_diameter: f64,
    /// Length of local edge `i` (opposite local vertex `i`).
    pub edge_lengths: [f64; 3],
    /// Outward unit normal of local edge `i`.
    pub normals: [Vec2; 3],
    /// Unit tangent of local edge `i`, running counterclockwise.
    pub tangents: [Vec2; 3],
    /// Gradients of the barycentric coordinates.
    pub grad_bary: [Vec2; 3],
    /// Jacobian of the affine map from the reference triangle, with columns
    /// `v1 - v0` and `v2 - v0`.
    pub jacobian: Matrix2<f64>,
}

impl CellGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [a, b, c] = vertices;
        let jacobian = Matrix2::from_columns(&[b - a, c - a]);
        let det = jacobian.determinant();
        let area = 0.5 * det;
        let mut edge_lengths = [0.0; 3];
        let mut normals = [Vec2::zeros(); 3];
        let mut tangents = [Vec2::zeros(); 3];
        let mut grad_bary = [Vec2::zeros(); 3];
        for i in 0..3 {
            let p = vertices[(i + 1) % 3];
            let q = vertices[(i + 2) % 3];
            let d = q - p;
            let len = d.norm();
            edge_lengths[i] = len;
            tangents[i] = d / len;
            normals[i] = Vec2::new(d.y, -d.x) / len;
            // grad lambda_i points inward across edge i
            grad_bary[i] = -normals[i] * len / (2.0 * area);
        }
        let perimeter: f64 = edge_lengths.iter().sum();
        let diameter = edge_lengths.iter().copied().fold(0.0, f64::max);
        CellGeometry {
            vertices,
            area,
            diameter,
            inscribed_diameter: 4.0 * area / perimeter,
            edge_lengths,
            normals,
            tangents,
            grad_bary,
            jacobian,
        }
    }

    /// `h_K / rho_K`.
    pub fn shape_ratio(&self) -> f64 {
        self.diameter / self.inscribed_diameter
    }

    pub fn point(&self, bary: [f64; 3]) -> Point {
        let [a, b, c] = self.vertices;
        Point::from(a.coords * bary[0] + b.coords * bary[1] + c.coords * bary[2])
    }

    pub fn barycentric(&self, p: &Point) -> [f64; 3] {
        let l1 = self.grad_bary[1].dot(&(p - self.vertices[0]));
        let l2 = self.grad_bary[2].dot(&(p - self.vertices[0]));
        [1.0 - l1 - l2, l1, l2]
    }

    pub fn centroid(&self) -> Point {
        self.point([1.0 / 3.0; 3])
    }
}
