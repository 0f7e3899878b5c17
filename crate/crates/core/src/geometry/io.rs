//! `boundary dim D vertices N facets M`, then N coordinate lines and M index lines.

use super::{BoundaryRep, GeometryError, Point};
use crate::fmt_f64;
use std::io::{BufRead, Write};

/// A boundary file of either dimension.
#[derive(Debug, Clone)]
pub enum AnyBoundary {
    Two(BoundaryRep<2>),
    Three(BoundaryRep<3>),
}

pub fn write_boundary<const D: usize, W: Write>(w: &mut W, b: &BoundaryRep<D>) -> Result<(), GeometryError> {
    writeln!(w, "boundary dim {} vertices {} facets {}", D, b.vertices().len(), b.facets().len())?;
    for v in b.vertices() {
        let s: Vec<String> = v.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(w, "{}", s.join(" "))?;
    }
    for f in b.facets() {
        let s: Vec<String> = f.iter().map(usize::to_string).collect();
        writeln!(w, "{}", s.join(" "))?;
    }
    Ok(())
}

pub fn read_boundary<R: BufRead>(r: R) -> Result<AnyBoundary, GeometryError> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim().to_string();
        if !content.is_empty() {
            rows.push((i + 1, content));
        }
    }
    let err = |line: usize, msg: String| GeometryError::Parse { line, msg };
    let (hl, head) = rows.first().cloned().ok_or_else(|| err(1, "empty file".into()))?;
    let t: Vec<&str> = head.split_whitespace().collect();
    if t.len() != 7 || t[0] != "boundary" || t[1] != "dim" || t[3] != "vertices" || t[5] != "facets" {
        return Err(err(hl, "header must read `boundary dim D vertices N facets M`".into()));
    }
    let parse_usize = |s: &str, line: usize| s.parse::<usize>().map_err(|_| err(line, format!("cannot parse `{s}`")));
    let dim = parse_usize(t[2], hl)?;
    let nv = parse_usize(t[4], hl)?;
    let nf = parse_usize(t[6], hl)?;
    if rows.len() != 1 + nv + nf {
        return Err(err(hl, format!("expected {} data lines, found {}", nv + nf, rows.len() - 1)));
    }
    let mut coords = Vec::with_capacity(nv);
    for (line, row) in &rows[1..=nv] {
        let vals = row
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|_| err(*line, format!("cannot parse `{s}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != dim {
            return Err(err(*line, format!("vertex needs {dim} coordinates")));
        }
        coords.push(vals);
    }
    let mut facets = Vec::with_capacity(nf);
    for (line, row) in &rows[1 + nv..] {
        let ids = row.split_whitespace().map(|s| parse_usize(s, *line)).collect::<Result<Vec<_>, _>>()?;
        if ids.len() != dim {
            return Err(err(*line, format!("facet needs {dim} vertex ids")));
        }
        facets.push(ids);
    }
    fn build<const D: usize>(coords: &[Vec<f64>], facets: &[Vec<usize>]) -> Result<BoundaryRep<D>, GeometryError> {
        let v = coords.iter().map(|c| Point::<D>::from_fn(|i, _| c[i])).collect();
        let f = facets.iter().map(|ids| std::array::from_fn(|i| ids[i])).collect();
        BoundaryRep::new(v, f)
    }
    match dim {
        2 => Ok(AnyBoundary::Two(build::<2>(&coords, &facets)?)),
        3 => Ok(AnyBoundary::Three(build::<3>(&coords, &facets)?)),
        _ => Err(err(hl, format!("unsupported dimension {dim}"))),
    }
}
