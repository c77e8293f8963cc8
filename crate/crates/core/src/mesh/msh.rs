//! Reader and writer for the ASCII MSH 4.1 subset used by the fixtures:
//! lines, triangles and tetrahedra grouped by the physical names `domain`,
//! `liner` and `electrode_<k>`.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::grid::{Point, SubdomainGrid};
use super::{attach_lower_dimensional, MixedDimMesh};
use crate::error::{Error, Result};

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate().peekable(), last: 0 }
    }

    fn next_line(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            let t = l.trim();
            if !t.is_empty() {
                return Some(t);
            }
        }
        None
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::MshParse { line: self.last, msg: msg.into() }
    }

    fn expect_line(&mut self) -> Result<&'a str> {
        self.next_line().ok_or_else(|| self.err("unexpected end of file"))
    }

    fn numbers<T: std::str::FromStr>(&mut self, min: usize) -> Result<Vec<T>> {
        let line = self.expect_line()?;
        let v: Option<Vec<T>> = line.split_whitespace().map(|t| t.parse().ok()).collect();
        match v {
            Some(v) if v.len() >= min => Ok(v),
            _ => Err(self.err(format!("expected at least {min} numbers, got {line:?}"))),
        }
    }

    fn end(&mut self, section: &str) -> Result<()> {
        let line = self.expect_line()?;
        if line != format!("$End{section}") {
            return Err(self.err(format!("expected $End{section}, got {line:?}")));
        }
        Ok(())
    }
}

#[derive(Default)]
struct Raw {
    names: HashMap<(i64, i64), String>,
    entity_phys: HashMap<(i64, i64), Vec<i64>>,
    node_index: HashMap<i64, usize>,
    nodes: Vec<Point>,
    elements: Vec<(i64, i64, i64, i64, Vec<i64>)>,
}

fn parse_format(lines: &mut Lines) -> Result<()> {
    let line = lines.expect_line()?;
    let tok: Vec<&str> = line.split_whitespace().collect();
    if tok.len() < 3 {
        return Err(lines.err("malformed $MeshFormat header"));
    }
    if tok[1] != "0" {
        return Err(Error::MshBinary);
    }
    if tok[0] != "4.1" || tok[2] != "8" {
        return Err(Error::MshVersion(line.to_string()));
    }
    lines.end("MeshFormat")
}

fn parse_names(lines: &mut Lines, raw: &mut Raw) -> Result<()> {
    let n: Vec<usize> = lines.numbers(1)?;
    for _ in 0..n[0] {
        let line = lines.expect_line()?;
        let mut it = line.splitn(3, char::is_whitespace);
        let dim = it.next().and_then(|t| t.parse().ok());
        let tag = it.next().and_then(|t| t.parse().ok());
        let name = it.next().map(|t| t.trim().trim_matches('"').to_string());
        match (dim, tag, name) {
            (Some(d), Some(t), Some(name)) => {
                raw.names.insert((d, t), name);
            }
            _ => return Err(lines.err(format!("malformed physical name {line:?}"))),
        }
    }
    lines.end("PhysicalNames")
}

fn parse_entities(lines: &mut Lines, raw: &mut Raw) -> Result<()> {
    let counts: Vec<usize> = lines.numbers(4)?;
    for dim in 0..4 {
        for _ in 0..counts[dim] {
            let line = lines.expect_line()?;
            let tok: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| lines.err(format!("malformed entity {line:?}")))?;
            let skip = if dim == 0 { 4 } else { 7 };
            let np = *tok.get(skip).ok_or_else(|| lines.err("truncated entity line"))? as usize;
            if tok.len() < skip + 1 + np {
                return Err(lines.err("truncated entity physical tags"));
            }
            let tags = tok[skip + 1..skip + 1 + np].iter().map(|&t| t as i64).collect();
            raw.entity_phys.insert((dim as i64, tok[0] as i64), tags);
        }
    }
    lines.end("Entities")
}

fn parse_nodes(lines: &mut Lines, raw: &mut Raw) -> Result<()> {
    let head: Vec<usize> = lines.numbers(4)?;
    for _ in 0..head[0] {
        let block: Vec<i64> = lines.numbers(4)?;
        if block[2] != 0 {
            return Err(lines.err("parametric node coordinates are not supported"));
        }
        let n = block[3] as usize;
        let mut tags = Vec::with_capacity(n);
        for _ in 0..n {
            tags.push(lines.numbers::<i64>(1)?[0]);
        }
        for t in tags {
            let x: Vec<f64> = lines.numbers(3)?;
            raw.node_index.insert(t, raw.nodes.len());
            raw.nodes.push([x[0], x[1], x[2]]);
        }
    }
    lines.end("Nodes")
}

fn parse_elements(lines: &mut Lines, raw: &mut Raw) -> Result<()> {
    let head: Vec<usize> = lines.numbers(4)?;
    for _ in 0..head[0] {
        let block: Vec<i64> = lines.numbers(4)?;
        let (edim, etag, kind, n) = (block[0], block[1], block[2], block[3] as usize);
        let nn = match kind {
            1 => 2,
            2 => 3,
            4 => 4,
            _ => {
                let first = lines.numbers::<i64>(1)?[0];
                return Err(Error::UnsupportedElement { kind, element: first });
            }
        };
        for _ in 0..n {
            let v: Vec<i64> = lines.numbers(nn + 1)?;
            raw.elements.push((edim, etag, kind, v[0], v[1..=nn].to_vec()));
        }
    }
    lines.end("Elements")
}

/// Reads an MSH 4.1 ASCII file and prepares geometry and mortars.
pub fn load_msh(path: impl AsRef<std::path::Path>) -> Result<MixedDimMesh> {
    let mut mesh = read_msh(&std::fs::read_to_string(path)?)?;
    mesh.compute_geometry()?;
    mesh.build_mortars()?;
    Ok(mesh)
}

/// Parses MSH 4.1 ASCII content. Geometry and mortars are not computed.
pub fn read_msh(text: &str) -> Result<MixedDimMesh> {
    let mut lines = Lines::new(text);
    let mut raw = Raw::default();
    let mut seen_format = false;
    while let Some(line) = lines.next_line() {
        match line {
            "$MeshFormat" => {
                parse_format(&mut lines)?;
                seen_format = true;
            }
            _ if !seen_format => return Err(lines.err("file must start with $MeshFormat")),
            "$PhysicalNames" => parse_names(&mut lines, &mut raw)?,
            "$Entities" => parse_entities(&mut lines, &mut raw)?,
            "$Nodes" => parse_nodes(&mut lines, &mut raw)?,
            "$Elements" => parse_elements(&mut lines, &mut raw)?,
            s if s.starts_with('$') && !s.starts_with("$End") => {
                let name = &s[1..];
                log::warn!("ignoring msh section {name}");
                let end = format!("$End{name}");
                loop {
                    match lines.next_line() {
                        Some(l) if l == end => break,
                        Some(_) => {}
                        None => return Err(lines.err(format!("unterminated section {name}"))),
                    }
                }
            }
            other => return Err(lines.err(format!("unexpected content {other:?}"))),
        }
    }
    if !seen_format {
        return Err(Error::MshParse { line: 0, msg: "missing $MeshFormat".into() });
    }
    assemble(raw)
}

enum Group {
    Domain,
    Liner,
    Electrode(usize),
}

fn group_of(raw: &Raw, edim: i64, etag: i64) -> Option<Group> {
    let phys = raw.entity_phys.get(&(edim, etag))?;
    for &p in phys {
        match raw.names.get(&(edim, p)).map(String::as_str) {
            Some("domain") => return Some(Group::Domain),
            Some("liner") => return Some(Group::Liner),
            Some(n) => {
                if let Some(k) = n.strip_prefix("electrode_").and_then(|k| k.parse().ok()) {
                    return Some(Group::Electrode(k));
                }
            }
            None => {}
        }
    }
    None
}

fn assemble(raw: Raw) -> Result<MixedDimMesh> {
    let node = |t: i64, el: i64| {
        raw.node_index.get(&t).copied().ok_or(Error::MshParse { line: 0, msg: format!("element {el} references unknown node {t}") })
    };
    let mut tets = Vec::new();
    let mut tris = Vec::new();
    let mut segs: Vec<Vec<(i64, [usize; 2])>> = Vec::new();
    for (edim, etag, kind, id, nodes) in &raw.elements {
        let group = group_of(&raw, *edim, *etag);
        match (kind, group) {
            (4, Some(Group::Domain)) => {
                for &n in nodes {
                    tets.push(node(n, *id)?);
                }
            }
            (2, Some(Group::Liner)) => tris.push((*id, [node(nodes[0], *id)?, node(nodes[1], *id)?, node(nodes[2], *id)?])),
            (1, Some(Group::Electrode(k))) => {
                if segs.len() <= k {
                    segs.resize(k + 1, Vec::new());
                }
                segs[k].push((*id, [node(nodes[0], *id)?, node(nodes[1], *id)?]));
            }
            _ => log::warn!("ignoring element {id} outside the recognised physical groups"),
        }
    }
    if tets.is_empty() {
        return Err(Error::MissingGroup("domain".into()));
    }
    if let Some(k) = segs.iter().position(|s| s.is_empty()) {
        return Err(Error::MissingGroup(format!("electrode_{k}")));
    }
    // Orient tetrahedra positively; keep node ids global.
    for t in tets.chunks_mut(4) {
        let p: Vec<Point> = t.iter().map(|&n| raw.nodes[n]).collect();
        if super::grid::signed_volume(&p) < 0.0 {
            t.swap(1, 2);
        }
    }
    let domain = SubdomainGrid::new(3, raw.nodes, tets);
    attach_lower_dimensional(domain, &tris, &segs)
}

fn bbox(points: impl Iterator<Item = Point>) -> [f64; 6] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in points {
        for k in 0..3 {
            b[k] = b[k].min(p[k]);
            b[k + 3] = b[k + 3].max(p[k]);
        }
    }
    b
}

/// Serializes the mesh topology (3D cells, liner, electrodes) as MSH 4.1 ASCII.
pub fn write_msh(mesh: &MixedDimMesh) -> String {
    let d = &mesh.domain;
    let ne = mesh.electrodes.len();
    let has_liner = mesh.liner.is_some();
    let mut s = String::new();
    s.push_str("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n$PhysicalNames\n");
    let _ = writeln!(s, "{}", 1 + usize::from(has_liner) + ne);
    s.push_str("3 1 \"domain\"\n");
    if has_liner {
        s.push_str("2 2 \"liner\"\n");
    }
    for e in 0..ne {
        let _ = writeln!(s, "1 {} \"electrode_{e}\"", 3 + e);
    }
    s.push_str("$EndPhysicalNames\n$Entities\n");
    let _ = writeln!(s, "0 {ne} {} 1", usize::from(has_liner));
    let fmt_box = |b: [f64; 6]| b.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    for (e, g) in mesh.electrodes.iter().enumerate() {
        let _ = writeln!(s, "{} {} 1 {} 0", e + 1, fmt_box(bbox(g.nodes.iter().copied())), 3 + e);
    }
    if let Some(l) = &mesh.liner {
        let _ = writeln!(s, "1 {} 1 2 0", fmt_box(bbox(l.nodes.iter().copied())));
    }
    let _ = writeln!(s, "1 {} 1 1 0", fmt_box(bbox(d.nodes.iter().copied())));
    s.push_str("$EndEntities\n$Nodes\n");
    let nn = d.nodes.len();
    let _ = writeln!(s, "1 {nn} 1 {nn}\n3 1 0 {nn}");
    for i in 0..nn {
        let _ = writeln!(s, "{}", i + 1);
    }
    for p in &d.nodes {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let nl = mesh.liner.as_ref().map_or(0, |l| l.num_cells());
    let nseg: usize = mesh.electrodes.iter().map(|g| g.num_cells()).sum();
    let total = d.num_cells() + nl + nseg;
    let _ = writeln!(s, "{} {total} 1 {total}", 1 + usize::from(has_liner) + ne);
    let mut tag = 1;
    for (e, g) in mesh.electrodes.iter().enumerate() {
        let parents = g.parent_nodes.as_ref().expect("electrode parent nodes");
        let _ = writeln!(s, "1 {} 1 {}", e + 1, g.num_cells());
        for c in 0..g.num_cells() {
            let n = g.cell(c);
            let _ = writeln!(s, "{tag} {} {}", parents[n[0]] + 1, parents[n[1]] + 1);
            tag += 1;
        }
    }
    if let Some(l) = &mesh.liner {
        let parents = l.parent_nodes.as_ref().expect("liner parent nodes");
        let _ = writeln!(s, "2 1 2 {}", l.num_cells());
        for c in 0..l.num_cells() {
            let n = l.cell(c);
            let _ = writeln!(s, "{tag} {} {} {}", parents[n[0]] + 1, parents[n[1]] + 1, parents[n[2]] + 1);
            tag += 1;
        }
    }
    let _ = writeln!(s, "3 1 4 {}", d.num_cells());
    for c in 0..d.num_cells() {
        let n = d.cell(c);
        let _ = writeln!(s, "{tag} {} {} {} {}", n[0] + 1, n[1] + 1, n[2] + 1, n[3] + 1);
        tag += 1;
    }
    s.push_str("$EndElements\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SINGLE_TET: &str = "$MeshFormat\n4.1 0 8\n$EndMeshFormat\n\
$PhysicalNames\n1\n3 1 \"domain\"\n$EndPhysicalNames\n\
$Entities\n0 0 0 1\n1 0 0 0 1 1 1 1 1 0\n$EndEntities\n\
$Nodes\n1 4 1 4\n3 1 0 4\n1\n2\n3\n4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n$EndNodes\n\
$Elements\n1 1 1 1\n3 1 4 1\n1 1 2 3 4\n$EndElements\n";

    #[test]
    fn single_tetrahedron() {
        let m = read_msh(SINGLE_TET).unwrap();
        assert_eq!(m.domain.num_cells(), 1);
        assert!(m.liner.is_none());
        assert!(m.electrodes.is_empty());
        assert!(m.domain.geometry.is_none());
    }

    #[test]
    fn binary_and_version_errors() {
        let bin = SINGLE_TET.replace("4.1 0 8", "4.1 1 8");
        assert!(matches!(read_msh(&bin), Err(Error::MshBinary)));
        let old = SINGLE_TET.replace("4.1 0 8", "2.2 0 8");
        assert!(matches!(read_msh(&old), Err(Error::MshVersion(_))));
        let bad = SINGLE_TET.replace("3 1 4 1\n", "3 1 11 1\n");
        assert!(matches!(read_msh(&bad), Err(Error::UnsupportedElement { kind: 11, element: 1 })));
    }

    #[test]
    fn unknown_sections_are_skipped() {
        let extra = SINGLE_TET.replace("$Nodes", "$Periodic\n0\n$EndPeriodic\n$Nodes");
        assert_eq!(read_msh(&extra).unwrap().domain.num_cells(), 1);
    }
}
