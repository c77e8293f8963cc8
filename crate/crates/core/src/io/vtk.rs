//! Legacy ASCII VTK 3.0 unstructured grids with double-precision cell scalars.

use std::fmt::Write;

use super::Num;
use crate::error::{Error, Result};
use crate::mesh::SubdomainGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct VtkField {
    pub name: String,
    pub values: Vec<f64>,
}

fn cell_type(dim: usize) -> u8 {
    match dim {
        1 => 3,
        2 => 5,
        _ => 10,
    }
}

/// Renders `grid` with one CELL_DATA scalar per field. Field names must not
/// contain whitespace.
pub fn write_vtk(grid: &SubdomainGrid, title: &str, fields: &[VtkField]) -> Result<String> {
    let nc = grid.num_cells();
    for f in fields {
        if f.values.len() != nc {
            return Err(Error::SizeMismatch { what: "vtk field", got: f.values.len(), expected: nc });
        }
        if f.name.is_empty() || f.name.contains(char::is_whitespace) {
            return Err(Error::FieldFile(format!("invalid field name {:?}", f.name)));
        }
    }
    let k = grid.dim + 1;
    let mut s = String::new();
    let title = title.lines().next().unwrap_or("");
    let _ = write!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", grid.nodes.len());
    for p in &grid.nodes {
        let _ = writeln!(s, "{} {} {}", Num(p[0]), Num(p[1]), Num(p[2]));
    }
    let _ = writeln!(s, "CELLS {} {}", nc, nc * (k + 1));
    for c in 0..nc {
        s.push_str(&k.to_string());
        for n in grid.cell(c) {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    let t = cell_type(grid.dim);
    for _ in 0..nc {
        let _ = writeln!(s, "{t}");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nc}");
        for f in fields {
            let _ = write!(s, "SCALARS {} double 1\nLOOKUP_TABLE default\n", f.name);
            for v in &f.values {
                let _ = writeln!(s, "{}", Num(*v));
            }
        }
    }
    Ok(s)
}

struct Tokens<'a> {
    it: std::iter::Peekable<std::str::SplitWhitespace<'a>>,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.it.next().ok_or(Error::FieldFile("unexpected end of VTK file".into()))
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let t = self.next()?;
        if t != word {
            return Err(Error::FieldFile(format!("expected {word}, found {t:?}")));
        }
        Ok(())
    }

    fn parse<T: std::str::FromStr>(&mut self) -> Result<T> {
        let t = self.next()?;
        t.parse().map_err(|_| Error::FieldFile(format!("cannot parse {t:?}")))
    }
}

/// Parses a file written by [`write_vtk`]: a single-type simplicial grid
/// and its cell scalars.
pub fn read_vtk(text: &str) -> Result<(SubdomainGrid, Vec<VtkField>)> {
    let mut lines = text.lines();
    if !lines.next().is_some_and(|l| l.starts_with("# vtk DataFile")) {
        return Err(Error::FieldFile("missing VTK header".into()));
    }
    lines.next();
    let rest: Vec<&str> = lines.collect();
    let body = rest.join("\n");
    let mut t = Tokens { it: body.split_whitespace().peekable() };
    t.expect("ASCII")?;
    t.expect("DATASET")?;
    t.expect("UNSTRUCTURED_GRID")?;
    t.expect("POINTS")?;
    let np: usize = t.parse()?;
    t.next()?;
    let mut nodes = Vec::with_capacity(np);
    for _ in 0..np {
        nodes.push([t.parse()?, t.parse()?, t.parse()?]);
    }
    t.expect("CELLS")?;
    let nc: usize = t.parse()?;
    t.next()?;
    let mut cells = Vec::new();
    let mut arity = None;
    for _ in 0..nc {
        let k: usize = t.parse()?;
        if !(2..=4).contains(&k) || arity.is_some_and(|a| a != k) {
            return Err(Error::FieldFile("grid must consist of simplices of one dimension".into()));
        }
        arity = Some(k);
        for _ in 0..k {
            let n: usize = t.parse()?;
            if n >= np {
                return Err(Error::FieldFile(format!("node index {n} out of range")));
            }
            cells.push(n);
        }
    }
    let dim = arity.unwrap_or(4) - 1;
    t.expect("CELL_TYPES")?;
    let n: usize = t.parse()?;
    for _ in 0..n {
        t.next()?;
    }
    let mut fields = Vec::new();
    if t.it.peek().is_some() {
        t.expect("CELL_DATA")?;
        let n: usize = t.parse()?;
        if n != nc {
            return Err(Error::FieldFile(format!("CELL_DATA {n} does not match {nc} cells")));
        }
        while t.it.peek().is_some() {
            t.expect("SCALARS")?;
            let name = t.next()?.to_string();
            t.next()?;
            if t.it.peek() == Some(&"1") {
                t.next()?;
            }
            t.expect("LOOKUP_TABLE")?;
            t.next()?;
            let values = (0..nc).map(|_| t.parse()).collect::<Result<_>>()?;
            fields.push(VtkField { name, values });
        }
    }
    Ok((SubdomainGrid::new(dim, nodes, cells), fields))
}
