//! Mesh readers and writers: the native `sbmesh 1` text format and Gmsh
//! MSH 2.2 ASCII.
//!
//! ```text
//! sbmesh 1
//! vertices N
//! x y
//! cells M
//! v0 v1 v2 fluid|porous
//! boundary_edges P
//! v0 v1 gamma_f|gamma_pd|gamma_pn
//! ```
//!
//! Native files keep the vertex order of each cell (vertex 0 is the newest
//! vertex), so a written mesh refines identically after reading it back.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{BoundaryTag, Mesh, Point, Subdomain};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_subdomain(token: &str) -> Option<Subdomain> {
    match token {
        "fluid" | "0" => Some(Subdomain::Fluid),
        "porous" | "1" => Some(Subdomain::Porous),
        _ => None,
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-empty, non-comment line as (1-based line number, tokens).
    fn next_tokens(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                return Ok((i + 1, line.split_whitespace().collect()));
            }
        }
        Err(parse_err(self.last + 1, "unexpected end of file"))
    }

    fn header(&mut self, keyword: &str) -> Result<usize> {
        let (line, tokens) = self.next_tokens()?;
        match tokens.as_slice() {
            [k, n] if *k == keyword => n
                .parse()
                .map_err(|_| parse_err(line, format!("bad count '{n}'"))),
            _ => Err(parse_err(line, format!("expected '{keyword} <count>'"))),
        }
    }
}

fn num<T: std::str::FromStr>(line: usize, token: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| parse_err(line, format!("bad number '{token}'")))
}

pub fn read_sbmesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines::new(text);
    let (line, tokens) = lines.next_tokens()?;
    if tokens != ["sbmesh", "1"] {
        return Err(parse_err(line, "expected header 'sbmesh 1'"));
    }
    let nv = lines.header("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, t) = lines.next_tokens()?;
        if t.len() != 2 {
            return Err(parse_err(line, "expected 'x y'"));
        }
        vertices.push(Point::new(num(line, t[0])?, num(line, t[1])?));
    }
    let nc = lines.header("cells")?;
    let mut cells = Vec::with_capacity(nc);
    let mut subdomains = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (line, t) = lines.next_tokens()?;
        if t.len() != 4 {
            return Err(parse_err(line, "expected 'v0 v1 v2 subdomain'"));
        }
        cells.push([num(line, t[0])?, num(line, t[1])?, num(line, t[2])?]);
        subdomains.push(
            parse_subdomain(t[3])
                .ok_or_else(|| parse_err(line, format!("unknown subdomain '{}'", t[3])))?,
        );
    }
    let nb = lines.header("boundary_edges")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (line, t) = lines.next_tokens()?;
        if t.len() != 3 {
            return Err(parse_err(line, "expected 'v0 v1 tag'"));
        }
        let tag = BoundaryTag::from_name(t[2])
            .ok_or_else(|| parse_err(line, format!("unknown boundary tag '{}'", t[2])))?;
        boundary.push(([num(line, t[0])?, num(line, t[1])?], tag));
    }
    Mesh::with_refinement_edges(vertices, cells, subdomains, &boundary)
}

pub fn write_sbmesh(mesh: &Mesh) -> String {
    let mut out = String::from("sbmesh 1\n");
    let _ = writeln!(out, "vertices {}", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{} {}", p.x, p.y);
    }
    let _ = writeln!(out, "cells {}", mesh.num_cells());
    for (k, c) in mesh.cells().iter().enumerate() {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            c[0],
            c[1],
            c[2],
            mesh.subdomain(k).name()
        );
    }
    let boundary = mesh.boundary_edges();
    let _ = writeln!(out, "boundary_edges {}", boundary.len());
    for ([a, b], tag) in boundary {
        let _ = writeln!(out, "{a} {b} {}", tag.name());
    }
    out
}

/// Reads a Gmsh MSH 2.2 ASCII mesh. Triangles need a physical group named
/// `fluid` or `porous`; boundary lines need `gamma_f`, `gamma_pd` or
/// `gamma_pn`. Lines in `gamma_fp` are accepted and ignored since the
/// interface is recovered from the cell subdomains.
pub fn read_gmsh(text: &str) -> Result<Mesh> {
    let mut names: HashMap<i64, String> = HashMap::new();
    let mut node_index: HashMap<i64, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    let mut subdomains = Vec::new();
    let mut boundary = Vec::new();
    let mut raw_elements: Vec<(usize, i64, i64, Vec<i64>)> = Vec::new();

    let mut lines = Lines::new(text);
    let mut seen_format = false;
    loop {
        let (line, t) = match lines.next_tokens() {
            Ok(v) => v,
            Err(_) => break,
        };
        match t[0] {
            "$MeshFormat" => {
                let (line, f) = lines.next_tokens()?;
                if f.first().map(|v| !v.starts_with("2.")).unwrap_or(true) || f.get(1) != Some(&"0")
                {
                    return Err(parse_err(line, "only MSH 2.x ASCII is supported"));
                }
                seen_format = true;
                expect_end(&mut lines, "$EndMeshFormat")?;
            }
            "$PhysicalNames" => {
                let n: usize = {
                    let (line, c) = lines.next_tokens()?;
                    num(line, c[0])?
                };
                for _ in 0..n {
                    let (line, p) = lines.next_tokens()?;
                    if p.len() < 3 {
                        return Err(parse_err(line, "expected 'dim tag \"name\"'"));
                    }
                    let tag: i64 = num(line, p[1])?;
                    names.insert(tag, p[2..].join(" ").trim_matches('"').to_string());
                }
                expect_end(&mut lines, "$EndPhysicalNames")?;
            }
            "$Nodes" => {
                let n: usize = {
                    let (line, c) = lines.next_tokens()?;
                    num(line, c[0])?
                };
                for _ in 0..n {
                    let (line, p) = lines.next_tokens()?;
                    if p.len() < 3 {
                        return Err(parse_err(line, "expected 'id x y z'"));
                    }
                    node_index.insert(num(line, p[0])?, vertices.len());
                    vertices.push(Point::new(num(line, p[1])?, num(line, p[2])?));
                }
                expect_end(&mut lines, "$EndNodes")?;
            }
            "$Elements" => {
                let n: usize = {
                    let (line, c) = lines.next_tokens()?;
                    num(line, c[0])?
                };
                for _ in 0..n {
                    let (line, p) = lines.next_tokens()?;
                    if p.len() < 3 {
                        return Err(parse_err(line, "truncated element record"));
                    }
                    let kind: i64 = num(line, p[1])?;
                    let ntags: usize = num(line, p[2])?;
                    if p.len() < 3 + ntags {
                        return Err(parse_err(line, "truncated element tags"));
                    }
                    let physical: i64 = if ntags > 0 { num(line, p[3])? } else { -1 };
                    let nodes = p[3 + ntags..]
                        .iter()
                        .map(|s| num(line, s))
                        .collect::<Result<Vec<i64>>>()?;
                    raw_elements.push((line, kind, physical, nodes));
                }
                expect_end(&mut lines, "$EndElements")?;
            }
            _ if t[0].starts_with('$') => {
                // skip unknown section
                let end = format!("$End{}", &t[0][1..]);
                loop {
                    let (_, s) = lines.next_tokens()?;
                    if s[0] == end {
                        break;
                    }
                }
            }
            _ => return Err(parse_err(line, format!("unexpected '{}'", t[0]))),
        }
    }
    if !seen_format {
        return Err(parse_err(1, "missing $MeshFormat section"));
    }

    let node = |line: usize, id: i64| {
        node_index
            .get(&id)
            .copied()
            .ok_or_else(|| parse_err(line, format!("unknown node {id}")))
    };
    for (line, kind, physical, nodes) in raw_elements {
        let name = names.get(&physical).map(String::as_str).unwrap_or("");
        match kind {
            2 => {
                if nodes.len() != 3 {
                    return Err(parse_err(line, "triangle needs 3 nodes"));
                }
                let sub = match name {
                    "fluid" => Some(Subdomain::Fluid),
                    "porous" => Some(Subdomain::Porous),
                    _ => None,
                }
                .ok_or_else(|| {
                    parse_err(line, format!("triangle in unknown physical group '{name}'"))
                })?;
                cells.push([
                    node(line, nodes[0])?,
                    node(line, nodes[1])?,
                    node(line, nodes[2])?,
                ]);
                subdomains.push(sub);
            }
            1 => {
                if nodes.len() != 2 {
                    return Err(parse_err(line, "line needs 2 nodes"));
                }
                if name == "gamma_fp" {
                    continue;
                }
                let tag = BoundaryTag::from_name(name).ok_or_else(|| {
                    parse_err(line, format!("line in unknown physical group '{name}'"))
                })?;
                boundary.push(([node(line, nodes[0])?, node(line, nodes[1])?], tag));
            }
            15 => {}
            other => return Err(parse_err(line, format!("unsupported element type {other}"))),
        }
    }
    Mesh::new(vertices, cells, subdomains, &boundary)
}

fn expect_end(lines: &mut Lines<'_>, end: &str) -> Result<()> {
    let (line, t) = lines.next_tokens()?;
    if t[0] != end {
        return Err(parse_err(line, format!("expected {end}")));
    }
    Ok(())
}

pub fn read_mesh_file(path: &std::path::Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().and_then(|e| e.to_str()) == Some("msh") {
        read_gmsh(&text)
    } else {
        read_sbmesh(&text)
    }
}
