//! Newest-vertex bisection with conforming closure.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{BoundaryTag, EdgeTag, Mesh, Point, Subdomain};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct Refinement {
    pub mesh: Mesh,
    /// New cell ids for each old cell; unrefined cells map to one child.
    pub children: Vec<Vec<usize>>,
}

/// Refines the marked cells by newest-vertex bisection and bisects further
/// cells until the result is conforming.
pub fn refine(mesh: &Mesh, marked: &[usize]) -> Result<Refinement> {
    let mut edge_marked = vec![false; mesh.num_edges()];
    let mut queue = VecDeque::new();
    for &k in marked {
        if k >= mesh.num_cells() {
            return Err(crate::error::Error::InvalidParameter(format!(
                "marked cell {k} out of range"
            )));
        }
        let e = mesh.cell_edges(k)[0];
        if !edge_marked[e] {
            edge_marked[e] = true;
            queue.push_back(e);
        }
    }
    // closure: a cell with any marked edge must bisect its refinement edge
    while let Some(e) = queue.pop_front() {
        let edge = mesh.edge(e);
        for k in std::iter::once(edge.cells.0).chain(edge.cells.1) {
            let r = mesh.cell_edges(k)[0];
            if !edge_marked[r] {
                edge_marked[r] = true;
                queue.push_back(r);
            }
        }
    }

    let mut vertices: Vec<Point> = mesh.vertices().to_vec();
    let mut midpoint: HashMap<usize, usize> = HashMap::new();
    for (e, &m) in edge_marked.iter().enumerate() {
        if m {
            let [a, b] = mesh.edge(e).vertices;
            midpoint.insert(e, vertices.len());
            vertices.push(nalgebra::center(&mesh.vertex(a), &mesh.vertex(b)));
        }
    }
    let split = |a: usize, b: usize| -> Option<usize> {
        mesh.find_edge(a, b).and_then(|e| midpoint.get(&e).copied())
    };

    let mut cells = Vec::with_capacity(mesh.num_cells() * 2);
    let mut subdomains: Vec<Subdomain> = Vec::with_capacity(mesh.num_cells() * 2);
    let mut children = Vec::with_capacity(mesh.num_cells());
    for k in 0..mesh.num_cells() {
        let first = cells.len();
        bisect(mesh.cell(k), &split, &mut cells);
        subdomains.resize(cells.len(), mesh.subdomain(k));
        children.push((first..cells.len()).collect());
    }

    let mut boundary: Vec<([usize; 2], BoundaryTag)> = Vec::new();
    for (e, edge) in mesh.edges().iter().enumerate() {
        if let EdgeTag::Boundary(tag) = edge.tag {
            let [a, b] = edge.vertices;
            match midpoint.get(&e) {
                Some(&m) => {
                    boundary.push(([a, m], tag));
                    boundary.push(([m, b], tag));
                }
                None => boundary.push(([a, b], tag)),
            }
        }
    }

    let mesh = Mesh::with_refinement_edges(vertices, cells, subdomains, &boundary)?;
    Ok(Refinement { mesh, children })
}

fn bisect(
    cell: [usize; 3],
    split: &impl Fn(usize, usize) -> Option<usize>,
    out: &mut Vec<[usize; 3]>,
) {
    let [v0, v1, v2] = cell;
    match split(v1, v2) {
        Some(m) => {
            bisect([m, v0, v1], split, out);
            bisect([m, v2, v0], split, out);
        }
        None => out.push(cell),
    }
}

/// Refines every cell once by newest-vertex bisection.
pub fn refine_uniform(mesh: &Mesh) -> Result<Refinement> {
    let all: Vec<usize> = (0..mesh.num_cells()).collect();
    refine(mesh, &all)
}

/// Set of cells whose refinement edge was bisected.
pub fn bisected_cells(refinement: &Refinement) -> BTreeSet<usize> {
    refinement
        .children
        .iter()
        .enumerate()
        .filter(|(_, c)| c.len() > 1)
        .map(|(k, _)| k)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_reference_geometry, RectangleDomain};

    fn unit(n: usize) -> Mesh {
        build_reference_geometry(&RectangleDomain::default(), n, n).unwrap()
    }

    fn sorted_vertices(mesh: &Mesh) -> Vec<(i64, i64)> {
        let mut v: Vec<(i64, i64)> = mesh
            .vertices()
            .iter()
            .map(|p| ((p.x * 1e9).round() as i64, (p.y * 1e9).round() as i64))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn two_uniform_sweeps_match_structured_doubling() {
        for n in [2, 4, 8] {
            let coarse = unit(n);
            let once = refine_uniform(&coarse).unwrap().mesh;
            let twice = refine_uniform(&once).unwrap().mesh;
            let fine = unit(2 * n);
            assert_eq!(twice.num_cells(), fine.num_cells());
            assert_eq!(sorted_vertices(&twice), sorted_vertices(&fine));
            assert!((twice.h_max() - fine.h_max()).abs() < 1e-14);
            assert_eq!(twice.tag_census(), fine.tag_census());
            twice.audit().unwrap();
        }
    }

    #[test]
    fn single_mark_closure_is_conforming() {
        let mesh = unit(4);
        let r = refine(&mesh, &[5]).unwrap();
        r.mesh.audit().unwrap();
        assert!(r.children[5].len() >= 2);
        let total: usize = r.children.iter().map(Vec::len).sum();
        assert_eq!(total, r.mesh.num_cells());
        // area is conserved per parent
        for (k, kids) in r.children.iter().enumerate() {
            let a: f64 = kids.iter().map(|&c| r.mesh.geometry(c).area).sum();
            assert!((a - mesh.geometry(k).area).abs() < 1e-15);
            for &c in kids {
                assert_eq!(r.mesh.subdomain(c), mesh.subdomain(k));
            }
        }
    }

    #[test]
    fn empty_marking_is_identity() {
        let mesh = unit(2);
        let r = refine(&mesh, &[]).unwrap();
        assert_eq!(r.mesh.num_cells(), mesh.num_cells());
        assert_eq!(r.mesh.cells(), mesh.cells());
        assert!(bisected_cells(&r).is_empty());
    }

    #[test]
    fn out_of_range_mark_rejected() {
        assert!(refine(&unit(1), &[99]).is_err());
    }
}
