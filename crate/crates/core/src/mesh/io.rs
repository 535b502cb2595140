//! Mesh file formats: OFF and ASCII PLY for surfaces, Gmsh MSH v2 (ASCII) for
//! tagged tetrahedral meshes.
//!
//! Coordinates are written with 17 significant digits, so write → read →
//! write reproduces the file byte for byte.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{BoundaryTag, SurfaceMesh, TetMesh};
use crate::{Error, Result, Vec3};

/// What [`load_mesh`] should expect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Surface,
    Volume,
}

#[derive(Debug, Clone)]
pub enum LoadedMesh {
    Surface(SurfaceMesh),
    Volume(TetMesh),
}

pub fn load_mesh(path: impl AsRef<Path>, kind: MeshKind) -> Result<LoadedMesh> {
    let text = fs::read_to_string(path)?;
    Ok(match kind {
        MeshKind::Surface => LoadedMesh::Surface(parse_off(&text)?),
        MeshKind::Volume => LoadedMesh::Volume(parse_msh(&text)?),
    })
}

pub fn read_off(path: impl AsRef<Path>) -> Result<SurfaceMesh> {
    parse_off(&fs::read_to_string(path)?)
}

pub fn read_msh(path: impl AsRef<Path>) -> Result<TetMesh> {
    parse_msh(&fs::read_to_string(path)?)
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Tokens of the non-comment, non-empty lines, tagged with 1-based line numbers.
fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().flat_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("");
        line.split_whitespace().map(move |t| (i + 1, t))
    })
}

fn next_num<'a, T: std::str::FromStr>(it: &mut impl Iterator<Item = (usize, &'a str)>, what: &str) -> Result<T> {
    match it.next() {
        Some((line, tok)) => tok.parse().map_err(|_| parse_err(line, format!("bad {what}: {tok:?}"))),
        None => Err(parse_err(0, format!("unexpected end of file reading {what}"))),
    }
}

pub fn parse_off(text: &str) -> Result<SurfaceMesh> {
    let mut it = tokens(text).peekable();
    match it.next() {
        Some((_, "OFF")) => {}
        Some((line, tok)) => return Err(parse_err(line, format!("expected OFF header, found {tok:?}"))),
        None => return Err(parse_err(0, "empty file")),
    }
    let nv: usize = next_num(&mut it, "vertex count")?;
    let nf: usize = next_num(&mut it, "face count")?;
    let _ne: usize = next_num(&mut it, "edge count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = next_num(&mut it, "coordinate")?;
        let y = next_num(&mut it, "coordinate")?;
        let z = next_num(&mut it, "coordinate")?;
        vertices.push(Vec3::new(x, y, z));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let line = it.peek().map(|&(l, _)| l).unwrap_or(0);
        let k: usize = next_num(&mut it, "face size")?;
        if k != 3 {
            return Err(parse_err(line, format!("only triangles are supported, found a {k}-gon")));
        }
        triangles.push([next_num(&mut it, "index")?, next_num(&mut it, "index")?, next_num(&mut it, "index")?]);
        // optional per-face colour values
        while matches!(it.peek(), Some(&(l, _)) if l == line) {
            it.next();
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

pub fn format_off(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    writeln!(s, "OFF").unwrap();
    writeln!(s, "{} {} {}", mesh.vertex_count(), mesh.triangle_count(), mesh.edge_count()).unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{} {} {}", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z)).unwrap();
    }
    for [a, b, c] in mesh.triangles() {
        writeln!(s, "3 {a} {b} {c}").unwrap();
    }
    s
}

pub fn write_off(mesh: &SurfaceMesh, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, format_off(mesh))?)
}

pub fn format_ply(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    writeln!(s, "ply\nformat ascii 1.0").unwrap();
    writeln!(s, "element vertex {}", mesh.vertex_count()).unwrap();
    writeln!(s, "property double x\nproperty double y\nproperty double z").unwrap();
    writeln!(s, "element face {}", mesh.triangle_count()).unwrap();
    writeln!(s, "property list uchar int vertex_indices\nend_header").unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{} {} {}", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z)).unwrap();
    }
    for [a, b, c] in mesh.triangles() {
        writeln!(s, "3 {a} {b} {c}").unwrap();
    }
    s
}

pub fn write_ply(mesh: &SurfaceMesh, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, format_ply(mesh))?)
}

/// Reads a Gmsh 2.x ASCII file. Tetrahedra (element type 4) form the volume;
/// triangles (type 2) carry their physical group as boundary tag, 1 for Γ₁
/// and 2 for Γ₂. Other element types are skipped.
pub fn parse_msh(text: &str) -> Result<TetMesh> {
    let lines: Vec<&str> = text.lines().collect();
    let find = |name: &str| lines.iter().position(|l| l.trim() == name);

    let fmt = find("$MeshFormat").ok_or_else(|| parse_err(0, "missing $MeshFormat"))?;
    let version = lines.get(fmt + 1).and_then(|l| l.split_whitespace().next()).unwrap_or("");
    if !version.starts_with('2') {
        return Err(parse_err(fmt + 2, format!("unsupported MSH version {version:?}")));
    }
    let ascii = lines.get(fmt + 1).and_then(|l| l.split_whitespace().nth(1));
    if ascii != Some("0") {
        return Err(parse_err(fmt + 2, "binary MSH files are not supported"));
    }

    let nodes = find("$Nodes").ok_or_else(|| parse_err(0, "missing $Nodes"))?;
    let count: usize = lines
        .get(nodes + 1)
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| parse_err(nodes + 2, "bad node count"))?;
    let mut id_to_index: HashMap<u64, usize> = HashMap::with_capacity(count);
    let mut vertices = Vec::with_capacity(count);
    for i in 0..count {
        let ln = nodes + 2 + i;
        let mut f = lines.get(ln).ok_or_else(|| parse_err(ln + 1, "truncated $Nodes"))?.split_whitespace();
        let mut num = |what: &str| -> Result<f64> {
            f.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err(ln + 1, format!("bad {what}")))
        };
        let id = num("node id")? as u64;
        let p = Vec3::new(num("x")?, num("y")?, num("z")?);
        id_to_index.insert(id, vertices.len());
        vertices.push(p);
    }

    let elems = find("$Elements").ok_or_else(|| parse_err(0, "missing $Elements"))?;
    let count: usize = lines
        .get(elems + 1)
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| parse_err(elems + 2, "bad element count"))?;
    let mut tets = Vec::new();
    let mut tagged = Vec::new();
    for i in 0..count {
        let ln = elems + 2 + i;
        let fields: Vec<u64> = lines
            .get(ln)
            .ok_or_else(|| parse_err(ln + 1, "truncated $Elements"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(ln + 1, format!("bad integer {t:?}"))))
            .collect::<Result<_>>()?;
        if fields.len() < 3 {
            return Err(parse_err(ln + 1, "short element record"));
        }
        let (etype, ntags) = (fields[1], fields[2] as usize);
        let nodes = &fields[3 + ntags..];
        let node = |k: usize| -> Result<usize> {
            let id = nodes.get(k).ok_or_else(|| parse_err(ln + 1, "missing node"))?;
            id_to_index.get(id).copied().ok_or_else(|| parse_err(ln + 1, format!("unknown node {id}")))
        };
        match etype {
            4 => tets.push([node(0)?, node(1)?, node(2)?, node(3)?]),
            2 => {
                let physical = if ntags > 0 { fields[3] as u32 } else { 0 };
                let tag = BoundaryTag::from_physical(physical)
                    .ok_or_else(|| parse_err(ln + 1, format!("triangle with physical tag {physical}, expected 1 or 2")))?;
                tagged.push(([node(0)?, node(1)?, node(2)?], tag));
            }
            _ => {}
        }
    }
    TetMesh::new(vertices, tets, &tagged)
}

pub fn format_msh(mesh: &TetMesh) -> String {
    let mut s = String::new();
    writeln!(s, "$MeshFormat\n2.2 0 8\n$EndMeshFormat").unwrap();
    writeln!(s, "$PhysicalNames\n3\n2 1 \"interface\"\n2 2 \"outer\"\n3 3 \"domain\"\n$EndPhysicalNames").unwrap();
    writeln!(s, "$Nodes\n{}", mesh.vertex_count()).unwrap();
    for (i, v) in mesh.vertices().iter().enumerate() {
        writeln!(s, "{} {} {} {}", i + 1, fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z)).unwrap();
    }
    writeln!(s, "$EndNodes\n$Elements\n{}", mesh.boundary().len() + mesh.tet_count()).unwrap();
    let mut id = 1;
    for f in mesh.boundary() {
        let p = f.tag.physical();
        let [a, b, c] = f.vertices;
        writeln!(s, "{id} 2 2 {p} {p} {} {} {}", a + 1, b + 1, c + 1).unwrap();
        id += 1;
    }
    for [a, b, c, d] in mesh.tets() {
        writeln!(s, "{id} 4 2 3 3 {} {} {} {}", a + 1, b + 1, c + 1, d + 1).unwrap();
        id += 1;
    }
    writeln!(s, "$EndElements").unwrap();
    s
}

pub fn write_msh(mesh: &TetMesh, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, format_msh(mesh))?)
}
