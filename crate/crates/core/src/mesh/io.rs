//! Plain-text mesh and field formats.
//!
//! ```text
//! nodes N elements M dim 2
//! x y                      (N lines)
//! kind n0 n1 [n2 n3] region (M lines)
//! tag <name> <count>       (optional, ids on the next line)
//! <section> <count>        (optional integer sections, one value per line)
//! ```

use super::{Element, Mesh, MeshError};
use crate::fe::ElementKind;
use crate::{fmt_f64, Vec2};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

/// A mesh plus any named integer sections stored after it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFile {
    pub mesh: Mesh,
    pub sections: BTreeMap<String, Vec<i64>>,
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_tokens(&mut self) -> Result<Option<Vec<String>>, MeshError> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            let content = l.split('#').next().unwrap_or("").trim();
            if !content.is_empty() {
                return Ok(Some(content.split_whitespace().map(str::to_string).collect()));
            }
        }
        Ok(None)
    }

    fn require(&mut self, what: &str) -> Result<Vec<String>, MeshError> {
        self.next_tokens()?.ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, msg: impl Into<String>) -> MeshError {
        MeshError::Parse { line: self.line, msg: msg.into() }
    }

    fn num<T: std::str::FromStr>(&self, tok: &str) -> Result<T, MeshError> {
        tok.parse().map_err(|_| self.err(format!("cannot parse `{tok}`")))
    }
}

pub fn write_mesh<W: Write>(w: &mut W, file: &MeshFile) -> Result<(), MeshError> {
    let m = &file.mesh;
    writeln!(w, "nodes {} elements {} dim 2", m.nodes.len(), m.elements.len())?;
    for p in &m.nodes {
        writeln!(w, "{} {}", fmt_f64(p.x), fmt_f64(p.y))?;
    }
    for (el, r) in m.elements.iter().zip(&m.regions) {
        let ids: Vec<String> = el.nodes().iter().map(usize::to_string).collect();
        writeln!(w, "{} {} {}", el.kind.name(), ids.join(" "), r)?;
    }
    for (name, ids) in &m.boundary_tags {
        writeln!(w, "tag {} {}", name, ids.len())?;
        let ids: Vec<String> = ids.iter().map(usize::to_string).collect();
        writeln!(w, "{}", ids.join(" "))?;
    }
    for (name, vals) in &file.sections {
        writeln!(w, "{} {}", name, vals.len())?;
        for v in vals {
            writeln!(w, "{v}")?;
        }
    }
    Ok(())
}

pub fn read_mesh<R: BufRead>(r: R) -> Result<MeshFile, MeshError> {
    let mut lines = Lines { inner: r.lines(), line: 0 };
    let head = lines.require("header")?;
    if head.len() != 6 || head[0] != "nodes" || head[2] != "elements" || head[4] != "dim" {
        return Err(lines.err("header must read `nodes N elements M dim 2`"));
    }
    let n: usize = lines.num(&head[1])?;
    let m: usize = lines.num(&head[3])?;
    if head[5] != "2" {
        return Err(lines.err("only dim 2 is supported"));
    }
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let t = lines.require("node coordinates")?;
        if t.len() != 2 {
            return Err(lines.err("node line needs 2 coordinates"));
        }
        nodes.push(Vec2::new(lines.num(&t[0])?, lines.num(&t[1])?));
    }
    let mut elements = Vec::with_capacity(m);
    let mut regions = Vec::with_capacity(m);
    for _ in 0..m {
        let t = lines.require("element")?;
        let kind = ElementKind::from_name(&t[0]).ok_or_else(|| lines.err(format!("unknown element kind `{}`", t[0])))?;
        let k = kind.node_count();
        if t.len() != k + 2 {
            return Err(lines.err(format!("{} line needs {} node ids and a region id", t[0], k)));
        }
        let ids = t[1..=k].iter().map(|s| lines.num(s)).collect::<Result<Vec<usize>, _>>()?;
        elements.push(Element::from_nodes(kind, &ids));
        regions.push(lines.num(&t[k + 1])?);
    }
    let mut tags = BTreeMap::new();
    let mut sections = BTreeMap::new();
    while let Some(t) = lines.next_tokens()? {
        if t[0] == "tag" && t.len() == 3 {
            let count: usize = lines.num(&t[2])?;
            let ids = read_ints(&mut lines, count)?;
            tags.insert(t[1].clone(), ids.into_iter().map(|v| v as usize).collect());
        } else if t.len() == 2 {
            let count: usize = lines.num(&t[1])?;
            sections.insert(t[0].clone(), read_ints(&mut lines, count)?);
        } else {
            return Err(lines.err(format!("unexpected line `{}`", t.join(" "))));
        }
    }
    let mut mesh = Mesh::new(nodes, elements, regions, tags)?;
    if mesh.boundary_tags.is_empty() {
        mesh.tag_box_sides();
    }
    Ok(MeshFile { mesh, sections })
}

fn read_ints<R: BufRead>(lines: &mut Lines<R>, count: usize) -> Result<Vec<i64>, MeshError> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t = lines.require("integer values")?;
        for tok in &t {
            out.push(lines.num(tok)?);
        }
    }
    if out.len() != count {
        return Err(lines.err(format!("expected {count} values, found {}", out.len())));
    }
    Ok(out)
}

pub fn write_field<W: Write>(w: &mut W, field: &super::NodalField) -> Result<(), MeshError> {
    writeln!(w, "field {} components {}", field.name, field.components)?;
    for row in field.values.chunks(field.components.max(1)) {
        let vals: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(w, "{}", vals.join(" "))?;
    }
    Ok(())
}

pub fn read_field<R: BufRead>(r: R) -> Result<super::NodalField, MeshError> {
    let mut lines = Lines { inner: r.lines(), line: 0 };
    let head = lines.require("field header")?;
    if head.len() != 4 || head[0] != "field" || head[2] != "components" {
        return Err(lines.err("header must read `field name components C`"));
    }
    let c: usize = lines.num(&head[3])?;
    if c == 0 {
        return Err(lines.err("components must be positive"));
    }
    let mut values = Vec::new();
    while let Some(t) = lines.next_tokens()? {
        if t.len() != c {
            return Err(lines.err(format!("expected {c} values per line")));
        }
        for tok in &t {
            values.push(lines.num(tok)?);
        }
    }
    Ok(super::NodalField::new(head[1].clone(), c, values))
}
