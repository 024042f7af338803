//! VTK legacy and JSON-lines writers.

use std::io::Write;

use serde::Serialize;

use crate::assembly::SystemState;
use crate::error::Result;
use crate::estimator::EstimatorReport;
use crate::mesh::{Mesh, Subdomain};
use crate::spaces::{DofMap, Field};

const VTK_TRIANGLE: u8 = 5;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the mesh and fields as a VTK legacy ASCII unstructured grid.
/// Point data: `u_f`, `eta_p`, `p_f` (zero outside their subdomain); cell
/// data: `subdomain`, `p_p` and, when given, the indicator parts.
pub fn write_vtk<W: Write>(
    mut out: W,
    mesh: &Mesh,
    dofs: &DofMap,
    state: &SystemState,
    report: Option<&EstimatorReport>,
) -> Result<()> {
    let nv = mesh.num_vertices();
    let nc = mesh.num_cells();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "stokes-biot t={}", num(state.t))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {nv} double")?;
    for p in mesh.vertices() {
        writeln!(out, "{} {} {}", num(p.x), num(p.y), num(0.0))?;
    }
    writeln!(out, "CELLS {nc} {}", 4 * nc)?;
    for c in mesh.cells() {
        writeln!(out, "3 {} {} {}", c[0], c[1], c[2])?;
    }
    writeln!(out, "CELL_TYPES {nc}")?;
    for _ in 0..nc {
        writeln!(out, "{VTK_TRIANGLE}")?;
    }

    let uf = state.field(dofs, Field::StokesVelocity);
    let pf = state.field(dofs, Field::StokesPressure);
    let eta = state.field(dofs, Field::Displacement);
    writeln!(out, "POINT_DATA {nv}")?;
    writeln!(out, "VECTORS u_f double")?;
    for v in 0..nv {
        let (x, y) = dofs
            .fluid_vertex_node(v)
            .map_or((0.0, 0.0), |n| (uf[2 * n], uf[2 * n + 1]));
        writeln!(out, "{} {} {}", num(x), num(y), num(0.0))?;
    }
    writeln!(out, "VECTORS eta_p double")?;
    for v in 0..nv {
        let (x, y) = dofs
            .porous_vertex_index(v)
            .map_or((0.0, 0.0), |n| (eta[2 * n], eta[2 * n + 1]));
        writeln!(out, "{} {} {}", num(x), num(y), num(0.0))?;
    }
    writeln!(out, "SCALARS p_f double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in 0..nv {
        writeln!(
            out,
            "{}",
            num(dofs.fluid_vertex_node(v).map_or(0.0, |n| pf[n]))
        )?;
    }

    writeln!(out, "CELL_DATA {nc}")?;
    writeln!(out, "SCALARS subdomain int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for k in 0..nc {
        writeln!(
            out,
            "{}",
            if mesh.subdomain(k) == Subdomain::Fluid {
                0
            } else {
                1
            }
        )?;
    }
    let pp = state.field(dofs, Field::DarcyPressure);
    writeln!(out, "SCALARS p_p double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    let mut porous = 0;
    for k in 0..nc {
        let v = if mesh.subdomain(k) == Subdomain::Porous {
            porous += 1;
            pp[porous - 1]
        } else {
            0.0
        };
        writeln!(out, "{}", num(v))?;
    }
    if let Some(r) = report {
        let parts: [(&str, fn(&crate::estimator::ElementIndicator) -> f64); 4] = [
            ("theta_f2", |c| c.theta_f2),
            ("theta_p2", |c| c.theta_p2),
            ("theta_pf2", |c| c.theta_pf2),
            ("zeta2", |c| c.zeta2),
        ];
        for (name, get) in parts {
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for c in &r.cells {
                writeln!(out, "{}", num(get(c)))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Appends `record` as one JSON line.
pub fn write_json_line<W: Write, T: Serialize>(mut out: W, record: &T) -> Result<()> {
    let line = serde_json::to_string(record)
        .map_err(|e| crate::error::Error::Io(std::io::Error::other(e)))?;
    writeln!(out, "{line}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_reference_geometry, RectangleDomain};

    #[test]
    fn vtk_structure() {
        let mesh = build_reference_geometry(&RectangleDomain::default(), 2, 2).unwrap();
        let dofs = DofMap::new(&mesh);
        let state = SystemState {
            t: 0.5,
            values: (0..dofs.num_dofs()).map(|i| i as f64).collect(),
        };
        let report = EstimatorReport::new(&mesh);
        let mut buf = Vec::new();
        write_vtk(&mut buf, &mesh, &dofs, &state, Some(&report)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains(&format!("POINTS {} double", mesh.num_vertices())));
        assert!(text.contains(&format!(
            "CELLS {} {}",
            mesh.num_cells(),
            4 * mesh.num_cells()
        )));
        for name in ["u_f", "eta_p", "p_f", "p_p", "theta_f2", "zeta2"] {
            assert!(text.contains(name), "{name}");
        }
        assert!(text.contains("5.0000000000000000e-1"));
    }

    #[test]
    fn json_lines_are_single_lines() {
        #[derive(Serialize)]
        struct R {
            a: f64,
            b: &'static str,
        }
        let mut buf = Vec::new();
        write_json_line(&mut buf, &R { a: 0.1, b: "x" }).unwrap();
        write_json_line(&mut buf, &R { a: 2.0, b: "y" }).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"a\":0.1,\"b\":\"x\"}\n{\"a\":2.0,\"b\":\"y\"}\n"
        );
    }
}
