//! Gmsh MSH 2.2 / 4.1 ASCII reader for 3-node and 6-node triangles, and
//! adjacency classification of triangle pairs.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use cpq_core::{CurvedTriangle, Vec3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Tri3,
    Tri6,
}

impl ElementKind {
    fn from_gmsh(code: u32) -> Option<Self> {
        match code {
            2 => Some(ElementKind::Tri3),
            9 => Some(ElementKind::Tri6),
            _ => None,
        }
    }

    pub fn node_count(self) -> usize {
        match self {
            ElementKind::Tri3 => 3,
            ElementKind::Tri6 => 6,
        }
    }
}

/// Gmsh node count per element type, for the types we skip.
fn gmsh_node_count(code: u32) -> Option<usize> {
    Some(match code {
        1 => 2,
        2 => 3,
        3 => 4,
        4 => 4,
        5 => 8,
        6 => 6,
        7 => 5,
        8 => 3,
        9 => 6,
        10 => 9,
        11 => 10,
        15 => 1,
        16 => 8,
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub tag: u64,
    pub kind: ElementKind,
    /// Indices into [`SurfaceMesh::nodes`], in Gmsh order (corners, then
    /// midpoints of edges 12, 23, 31).
    pub nodes: Vec<usize>,
}

impl Element {
    pub fn corners(&self) -> [usize; 3] {
        [self.nodes[0], self.nodes[1], self.nodes[2]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub nodes: Vec<Vec3>,
    pub node_tags: Vec<u64>,
    pub elements: Vec<Element>,
    pub path: PathBuf,
    pub version: String,
    pub warnings: Vec<String>,
}

impl SurfaceMesh {
    pub fn triangle(&self, index: usize) -> Result<CurvedTriangle> {
        let e = &self.elements[index];
        let pts: Vec<Vec3> = e.nodes.iter().map(|&i| self.nodes[i]).collect();
        Ok(CurvedTriangle::from_points(&pts)?)
    }

    /// Position of the element with Gmsh tag `tag`.
    pub fn element_index(&self, tag: u64) -> Option<usize> {
        self.elements.iter().position(|e| e.tag == tag)
    }
}

struct Lines<'a> {
    path: &'a Path,
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        loop {
            match self.iter.next() {
                Some((i, l)) => {
                    self.line = i + 1;
                    let l = l.trim();
                    if !l.is_empty() {
                        return Ok(l);
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn fields<T: std::str::FromStr>(&mut self) -> Result<Vec<T>> {
        let l = self.next_line()?;
        l.split_whitespace()
            .map(|t| t.parse::<T>().map_err(|_| self.err(format!("cannot parse '{t}'"))))
            .collect()
    }

    fn expect(&mut self, tag: &str) -> Result<()> {
        let l = self.next_line()?;
        if l != tag {
            return Err(self.err(format!("expected {tag}, found '{l}'")));
        }
        Ok(())
    }

    fn skip_section(&mut self, name: &str) -> Result<()> {
        let end = format!("$End{}", &name[1..]);
        loop {
            if self.next_line()? == end {
                return Ok(());
            }
        }
    }
}

fn need(v: &[u64], n: usize, lines: &Lines) -> Result<()> {
    if v.len() < n {
        return Err(lines.err(format!("expected at least {n} fields, found {}", v.len())));
    }
    Ok(())
}

#[derive(Default)]
struct Builder {
    nodes: Vec<Vec3>,
    tags: Vec<u64>,
    index: HashMap<u64, usize>,
    elements: Vec<Element>,
    skipped: HashMap<u32, usize>,
}

impl Builder {
    fn node(&mut self, tag: u64, p: Vec3, lines: &Lines) -> Result<()> {
        if self.index.insert(tag, self.nodes.len()).is_some() {
            return Err(lines.err(format!("duplicate node tag {tag}")));
        }
        self.nodes.push(p);
        self.tags.push(tag);
        Ok(())
    }

    fn element(&mut self, tag: u64, code: u32, node_tags: &[u64], lines: &Lines) -> Result<()> {
        let Some(kind) = ElementKind::from_gmsh(code) else {
            *self.skipped.entry(code).or_default() += 1;
            return Ok(());
        };
        if node_tags.len() != kind.node_count() {
            return Err(lines.err(format!("element {tag}: expected {} nodes", kind.node_count())));
        }
        let nodes = node_tags
            .iter()
            .map(|t| {
                self.index
                    .get(t)
                    .copied()
                    .ok_or_else(|| lines.err(format!("element {tag}: unknown node {t}")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.elements.push(Element { tag, kind, nodes });
        Ok(())
    }
}

fn read_nodes_v2(lines: &mut Lines, b: &mut Builder) -> Result<()> {
    let n = lines.fields::<usize>()?;
    let n = *n.first().ok_or_else(|| lines.err("missing node count"))?;
    for _ in 0..n {
        let f = lines.fields::<f64>()?;
        if f.len() < 4 {
            return Err(lines.err("expected: tag x y z"));
        }
        b.node(f[0] as u64, Vec3::new(f[1], f[2], f[3]), lines)?;
    }
    lines.expect("$EndNodes")
}

fn read_elements_v2(lines: &mut Lines, b: &mut Builder) -> Result<()> {
    let n = lines.fields::<usize>()?;
    let n = *n.first().ok_or_else(|| lines.err("missing element count"))?;
    for _ in 0..n {
        let f = lines.fields::<u64>()?;
        need(&f, 3, lines)?;
        let (tag, code, ntags) = (f[0], f[1] as u32, f[2] as usize);
        need(&f, 3 + ntags, lines)?;
        let nodes = &f[3 + ntags..];
        if let Some(expected) = gmsh_node_count(code) {
            if nodes.len() != expected {
                return Err(lines.err(format!("element {tag}: expected {expected} nodes, found {}", nodes.len())));
            }
        }
        b.element(tag, code, nodes, lines)?;
    }
    lines.expect("$EndElements")
}

fn read_nodes_v4(lines: &mut Lines, b: &mut Builder) -> Result<()> {
    let head = lines.fields::<u64>()?;
    need(&head, 2, lines)?;
    for _ in 0..head[0] {
        let blk = lines.fields::<u64>()?;
        need(&blk, 4, lines)?;
        let parametric = blk[2] != 0;
        let count = blk[3] as usize;
        let mut tags = Vec::with_capacity(count);
        for _ in 0..count {
            let t = lines.fields::<u64>()?;
            need(&t, 1, lines)?;
            tags.push(t[0]);
        }
        for tag in tags {
            let f = lines.fields::<f64>()?;
            if f.len() < 3 || (parametric && f.len() < 4) {
                return Err(lines.err("expected node coordinates"));
            }
            b.node(tag, Vec3::new(f[0], f[1], f[2]), lines)?;
        }
    }
    lines.expect("$EndNodes")
}

fn read_elements_v4(lines: &mut Lines, b: &mut Builder) -> Result<()> {
    let head = lines.fields::<u64>()?;
    need(&head, 2, lines)?;
    for _ in 0..head[0] {
        let blk = lines.fields::<u64>()?;
        need(&blk, 4, lines)?;
        let code = blk[2] as u32;
        for _ in 0..blk[3] {
            let f = lines.fields::<u64>()?;
            need(&f, 2, lines)?;
            b.element(f[0], code, &f[1..], lines)?;
        }
    }
    lines.expect("$EndElements")
}

/// Reads a Gmsh ASCII mesh. Element types other than 2 (tri3) and 9 (tri6)
/// are skipped with a warning.
pub fn read_msh(path: impl AsRef<Path>) -> Result<SurfaceMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_msh(&text, path)
}

/// [`read_msh`] on text already in memory; `path` is only used in messages.
pub fn parse_msh(text: &str, path: &Path) -> Result<SurfaceMesh> {
    let mut lines = Lines {
        path,
        iter: text.lines().enumerate(),
        line: 0,
    };
    let mut version = None;
    let mut b = Builder::default();
    loop {
        let l = match lines.next_line() {
            Ok(l) => l,
            Err(_) if version.is_some() => break,
            Err(e) => return Err(e),
        };
        match l {
            "$MeshFormat" => {
                let f: Vec<String> = lines.fields()?;
                let v = f.first().cloned().unwrap_or_default();
                if v != "2.2" && v != "4.1" {
                    return Err(lines.err(format!("unsupported MSH version {v}")));
                }
                if f.get(1).map(String::as_str) != Some("0") {
                    return Err(lines.err("binary MSH is not supported"));
                }
                version = Some(v);
                lines.expect("$EndMeshFormat")?;
            }
            "$Nodes" | "$Elements" => {
                let v4 = match version.as_deref() {
                    Some(v) => v == "4.1",
                    None => return Err(lines.err("missing $MeshFormat")),
                };
                match (l, v4) {
                    ("$Nodes", false) => read_nodes_v2(&mut lines, &mut b)?,
                    ("$Nodes", true) => read_nodes_v4(&mut lines, &mut b)?,
                    (_, false) => read_elements_v2(&mut lines, &mut b)?,
                    (_, true) => read_elements_v4(&mut lines, &mut b)?,
                }
            }
            s if s.starts_with('$') => lines.skip_section(s)?,
            other => return Err(lines.err(format!("unexpected line '{other}'"))),
        }
    }
    if b.elements.is_empty() {
        return Err(Error::NoSurfaceElements(path.to_path_buf()));
    }
    let mut warnings: Vec<String> = {
        let mut s: Vec<_> = b.skipped.iter().collect();
        s.sort();
        s.iter()
            .map(|(code, n)| format!("skipped {n} elements of unsupported type {code}"))
            .collect()
    };
    for e in &b.elements {
        if e.kind != ElementKind::Tri6 {
            continue;
        }
        for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            let (a, c) = (b.nodes[e.nodes[i]], b.nodes[e.nodes[j]]);
            if (b.nodes[e.nodes[3 + k]] - (a + c) * 0.5).norm() > 0.5 * (c - a).norm() {
                warnings.push(format!("element {}: midpoint node {} far from its edge", e.tag, 4 + k));
            }
        }
    }
    Ok(SurfaceMesh {
        nodes: b.nodes,
        node_tags: b.tags,
        elements: b.elements,
        path: path.to_path_buf(),
        version: version.unwrap_or_default(),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Adjacency {
    Identical,
    SharedEdge,
    SharedVertex,
    Disjoint,
}

pub fn adjacency(a: &Element, b: &Element) -> Adjacency {
    let ca = a.corners();
    let shared = b.corners().iter().filter(|n| ca.contains(n)).count();
    match shared {
        3 => Adjacency::Identical,
        2 => Adjacency::SharedEdge,
        1 => Adjacency::SharedVertex,
        _ => Adjacency::Disjoint,
    }
}

/// Ordered element pairs `(i, j)` split by the number of shared corner nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairClasses {
    pub identical: Vec<(usize, usize)>,
    pub shared_edge: Vec<(usize, usize)>,
    pub shared_vertex: Vec<(usize, usize)>,
    pub disjoint: Vec<(usize, usize)>,
}

pub fn classify_pairs(mesh: &SurfaceMesh) -> PairClasses {
    let mut out = PairClasses::default();
    for (i, a) in mesh.elements.iter().enumerate() {
        for (j, b) in mesh.elements.iter().enumerate() {
            let list = match adjacency(a, b) {
                Adjacency::Identical => &mut out.identical,
                Adjacency::SharedEdge => &mut out.shared_edge,
                Adjacency::SharedVertex => &mut out.shared_vertex,
                Adjacency::Disjoint => &mut out.disjoint,
            };
            list.push((i, j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const V22: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n6\n\
        1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0.5 0 0\n5 0.6 0.7 0.5\n6 0 0.5 0\n$EndNodes\n\
        $Elements\n2\n1 15 2 0 1 1\n2 9 2 0 1 1 2 3 4 5 6\n$EndElements\n";

    const V41: &str = "$MeshFormat\n4.1 0 8\n$EndMeshFormat\n\
        $Entities\n0 0 1 0\n1 0 0 0 1 1 0 0\n$EndEntities\n\
        $Nodes\n1 3 1 3\n2 1 0 3\n1\n2\n3\n0 0 0\n1 0 0\n0 1 0\n$EndNodes\n\
        $Elements\n1 1 1 1\n2 1 2 1\n1 1 2 3\n$EndElements\n";

    #[test]
    fn v22_tri6_round_trip() {
        let m = parse_msh(V22, Path::new("mem")).unwrap();
        assert_eq!(m.version, "2.2");
        assert_eq!(m.elements.len(), 1);
        assert_eq!(m.elements[0].kind, ElementKind::Tri6);
        assert_eq!(m.nodes[4], Vec3::new(0.6, 0.7, 0.5));
        assert_eq!(m.warnings, vec!["skipped 1 elements of unsupported type 15".to_string()]);
        let t = m.triangle(0).unwrap();
        let patch = CurvedTriangle::paper_triangle(0.6, 0.7, 0.5).unwrap();
        assert_eq!(t, patch);
    }

    #[test]
    fn v41_tri3() {
        let m = parse_msh(V41, Path::new("mem")).unwrap();
        assert_eq!(m.version, "4.1");
        assert_eq!(m.elements[0].kind, ElementKind::Tri3);
        assert_eq!(m.elements[0].nodes, vec![0, 1, 2]);
        assert_eq!(m.nodes[1], Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn parse_error_carries_line() {
        let bad = V22.replace("2 1 0 0", "2 1 x 0");
        match parse_msh(&bad, Path::new("bad.msh")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_node_is_rejected() {
        let bad = V22.replace("1 2 3 4 5 6\n", "1 2 3 4 5 9\n");
        assert!(matches!(parse_msh(&bad, Path::new("m")), Err(Error::Parse { .. })));
    }

    #[test]
    fn only_points_means_no_surface() {
        let pts = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n1\n1 0 0 0\n$EndNodes\n\
            $Elements\n1\n1 15 2 0 1 1\n$EndElements\n";
        assert!(matches!(parse_msh(pts, Path::new("m")), Err(Error::NoSurfaceElements(_))));
    }

    #[test]
    fn binary_rejected() {
        let b = V22.replace("2.2 0 8", "2.2 1 8");
        assert!(matches!(parse_msh(&b, Path::new("m")), Err(Error::Parse { .. })));
    }

    #[test]
    fn adjacency_by_corners() {
        let e = |n: [usize; 3]| Element {
            tag: 0,
            kind: ElementKind::Tri3,
            nodes: n.to_vec(),
        };
        assert_eq!(adjacency(&e([0, 1, 2]), &e([2, 0, 1])), Adjacency::Identical);
        assert_eq!(adjacency(&e([0, 1, 2]), &e([1, 0, 3])), Adjacency::SharedEdge);
        assert_eq!(adjacency(&e([0, 1, 2]), &e([2, 4, 3])), Adjacency::SharedVertex);
        assert_eq!(adjacency(&e([0, 1, 2]), &e([5, 4, 3])), Adjacency::Disjoint);
    }
}
