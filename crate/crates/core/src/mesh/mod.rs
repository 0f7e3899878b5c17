//! Meshes of linear triangles and quadrilaterals, facet topology and nodal fields.

mod io;
mod split;

pub use io::{read_field, read_mesh, write_field, write_mesh, MeshFile};
pub use split::{coincident_facets, connected_components, split_by_regions, split_fitted_interface};

use crate::fe::{self, ElementKind};
use crate::Vec2;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Vec2,
    pub max: Vec2,
}

impl Bounds {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { min: Vec2::new(x0, y0), max: Vec2::new(x1, y1) }
    }

    pub fn unit() -> Self {
        Self::new(0.0, 0.0, 1.0, 1.0)
    }

    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x) * (self.max.y - self.min.y)
    }

    pub fn diameter(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.max.x > self.min.x && self.max.y > self.min.y) || !self.area().is_finite()
    }

    pub fn of_points(pts: &[Vec2]) -> Self {
        let mut b = Self { min: Vec2::repeat(f64::INFINITY), max: Vec2::repeat(f64::NEG_INFINITY) };
        for p in pts {
            b.min = b.min.inf(p);
            b.max = b.max.sup(p);
        }
        b
    }
}

/// One element: kind plus counter-clockwise connectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Element {
    pub kind: ElementKind,
    nodes: [usize; 4],
}

impl Element {
    pub fn tri(a: usize, b: usize, c: usize) -> Self {
        Self { kind: ElementKind::Tri3, nodes: [a, b, c, usize::MAX] }
    }

    pub fn quad(a: usize, b: usize, c: usize, d: usize) -> Self {
        Self { kind: ElementKind::Quad4, nodes: [a, b, c, d] }
    }

    pub fn from_nodes(kind: ElementKind, nodes: &[usize]) -> Self {
        match kind {
            ElementKind::Tri3 => Self::tri(nodes[0], nodes[1], nodes[2]),
            ElementKind::Quad4 => Self::quad(nodes[0], nodes[1], nodes[2], nodes[3]),
        }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.kind.node_count()]
    }

    pub fn nodes_mut(&mut self) -> &mut [usize] {
        let n = self.kind.node_count();
        &mut self.nodes[..n]
    }

    /// Local edge `k`, from node `k` to node `k+1`.
    pub fn edge(&self, k: usize) -> (usize, usize) {
        let n = self.kind.node_count();
        (self.nodes[k], self.nodes[(k + 1) % n])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Vec2>,
    pub elements: Vec<Element>,
    pub regions: Vec<u32>,
    /// Named node sets.
    pub boundary_tags: BTreeMap<String, Vec<usize>>,
}

/// Interior facet between two elements. `nodes` follow the minus element's orientation,
/// so `normal` is the minus element's outward normal and points into the plus element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub nodes: [usize; 2],
    pub minus: usize,
    pub plus: usize,
    pub minus_edge: usize,
    pub plus_edge: usize,
    pub normal: Vec2,
}

impl Mesh {
    /// Build and validate a mesh.
    pub fn new(
        nodes: Vec<Vec2>,
        elements: Vec<Element>,
        regions: Vec<u32>,
        boundary_tags: BTreeMap<String, Vec<usize>>,
    ) -> Result<Self, MeshError> {
        let mesh = Self { nodes, elements, regions, boundary_tags };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if self.regions.len() != self.elements.len() {
            return Err(MeshError::InvalidInput(format!(
                "{} region ids for {} elements",
                self.regions.len(),
                self.elements.len()
            )));
        }
        if let Some(p) = self.nodes.iter().find(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(MeshError::InvalidInput(format!("non-finite node coordinate {p:?}")));
        }
        for (e, el) in self.elements.iter().enumerate() {
            if let Some(&n) = el.nodes().iter().find(|&&n| n >= self.nodes.len()) {
                return Err(MeshError::InvalidInput(format!("element {e} references missing node {n}")));
            }
            let coords = self.element_coords(e);
            for q in el.kind.bulk_rule() {
                if fe::eval(el.kind, &coords, q.xi).det_j <= 0.0 {
                    return Err(MeshError::InvalidInput(format!("element {e} has non-positive Jacobian")));
                }
            }
        }
        for (tag, ids) in &self.boundary_tags {
            if let Some(&n) = ids.iter().find(|&&n| n >= self.nodes.len()) {
                return Err(MeshError::InvalidInput(format!("tag {tag} references missing node {n}")));
            }
        }
        Ok(())
    }

    pub fn element_coords(&self, e: usize) -> Vec<Vec2> {
        self.elements[e].nodes().iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn element_area(&self, e: usize) -> f64 {
        fe::polygon_area(&self.element_coords(e))
    }

    pub fn element_centroid(&self, e: usize) -> Vec2 {
        let c = self.element_coords(e);
        c.iter().sum::<Vec2>() / c.len() as f64
    }

    pub fn total_area(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.element_area(e)).sum()
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::of_points(&self.nodes)
    }

    /// Nodes carrying `tag`; empty when the tag is unknown.
    pub fn tag(&self, tag: &str) -> &[usize] {
        self.boundary_tags.get(tag).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Region id of each node (that of its lowest-numbered adjacent element); `None` for orphans.
    pub fn node_regions(&self) -> Vec<Option<u32>> {
        let mut out = vec![None; self.nodes.len()];
        for (e, el) in self.elements.iter().enumerate() {
            for &n in el.nodes() {
                out[n].get_or_insert(self.regions[e]);
            }
        }
        out
    }

    /// Edges referenced by a single element, as `(element, local edge)`.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut count: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (e, el) in self.elements.iter().enumerate() {
            for k in 0..el.kind.node_count() {
                let (a, b) = el.edge(k);
                count.entry((a.min(b), a.max(b))).or_default().push((e, k));
            }
        }
        let mut out: Vec<_> = count.into_values().filter(|v| v.len() == 1).map(|v| v[0]).collect();
        out.sort_unstable();
        out
    }

    /// Replace the region ids.
    pub fn with_regions(mut self, regions: Vec<u32>) -> Result<Self, MeshError> {
        if regions.len() != self.elements.len() {
            return Err(MeshError::InvalidInput("region count does not match element count".into()));
        }
        self.regions = regions;
        Ok(self)
    }

    /// Tag nodes lying on the four sides of the bounding box as left/right/bottom/top.
    pub fn tag_box_sides(&mut self) {
        let b = self.bounds();
        let tol = 1e-12 * b.diameter().max(f64::MIN_POSITIVE);
        let mut tags: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, p) in self.nodes.iter().enumerate() {
            let sides = [
                ("left", (p.x - b.min.x).abs()),
                ("right", (p.x - b.max.x).abs()),
                ("bottom", (p.y - b.min.y).abs()),
                ("top", (p.y - b.max.y).abs()),
            ];
            for (name, dist) in sides {
                if dist <= tol {
                    tags.entry(name.to_string()).or_default().push(i);
                }
            }
        }
        for name in ["left", "right", "bottom", "top"] {
            self.boundary_tags.insert(name.to_string(), tags.remove(name).unwrap_or_default());
        }
    }
}

fn grid_coord(min: f64, max: f64, i: usize, n: usize) -> f64 {
    if i == n {
        max
    } else {
        min + (max - min) * (i as f64 / n as f64)
    }
}

fn check_grid(nx: usize, ny: usize, bounds: &Bounds) -> Result<(), MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidInput(format!("grid counts must be positive, got {nx}x{ny}")));
    }
    if bounds.is_degenerate() {
        return Err(MeshError::InvalidInput(format!("degenerate bounds {bounds:?}")));
    }
    Ok(())
}

fn grid_nodes(nx: usize, ny: usize, bounds: &Bounds) -> Vec<Vec2> {
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push(Vec2::new(
                grid_coord(bounds.min.x, bounds.max.x, i, nx),
                grid_coord(bounds.min.y, bounds.max.y, j, ny),
            ));
        }
    }
    nodes
}

/// `nx × ny` quadrilaterals; node `(i, j)` has index `j (nx+1) + i`.
pub fn build_structured_quad(nx: usize, ny: usize, bounds: Bounds) -> Result<Mesh, MeshError> {
    check_grid(nx, ny, &bounds)?;
    let nodes = grid_nodes(nx, ny, &bounds);
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push(Element::quad(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)));
        }
    }
    let mut mesh = Mesh { nodes, regions: vec![0; elements.len()], elements, boundary_tags: BTreeMap::new() };
    mesh.tag_box_sides();
    Ok(mesh)
}

/// Each grid cell split into four triangles about an added center node.
pub fn build_crossed_tri(nx: usize, ny: usize, bounds: Bounds) -> Result<Mesh, MeshError> {
    check_grid(nx, ny, &bounds)?;
    let mut nodes = grid_nodes(nx, ny, &bounds);
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(4 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let corners = [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)];
            let c = nodes.len();
            nodes.push(corners.iter().map(|&n| nodes[n]).sum::<Vec2>() * 0.25);
            for k in 0..4 {
                elements.push(Element::tri(corners[k], corners[(k + 1) % 4], c));
            }
        }
    }
    let mut mesh = Mesh { nodes, regions: vec![0; elements.len()], elements, boundary_tags: BTreeMap::new() };
    mesh.tag_box_sides();
    Ok(mesh)
}

/// `(|Ω| / N_e)^(1/2)`.
pub fn characteristic_size(mesh: &Mesh) -> Result<f64, MeshError> {
    if mesh.elements.is_empty() {
        return Err(MeshError::InvalidInput("empty mesh".into()));
    }
    Ok((mesh.total_area() / mesh.elements.len() as f64).sqrt())
}

/// Build the facet between two element edges, orienting it by region id then element id.
pub fn make_facet(mesh: &Mesh, first: (usize, usize), second: (usize, usize)) -> Facet {
    let key = |(e, _): (usize, usize)| (mesh.regions[e], e);
    let (minus, plus) = if key(first) <= key(second) { (first, second) } else { (second, first) };
    let (a, b) = mesh.elements[minus.0].edge(minus.1);
    let t = mesh.nodes[b] - mesh.nodes[a];
    let normal = Vec2::new(t.y, -t.x).normalize();
    Facet { nodes: [a, b], minus: minus.0, plus: plus.0, minus_edge: minus.1, plus_edge: plus.1, normal }
}

/// Every edge shared by two elements, ordered by sorted node pair.
pub fn interior_facets(mesh: &Mesh) -> Result<Vec<Facet>, MeshError> {
    let mut edges: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        for k in 0..el.kind.node_count() {
            let (a, b) = el.edge(k);
            edges.entry((a.min(b), a.max(b))).or_default().push((e, k));
        }
    }
    let mut out = Vec::new();
    for (key, adj) in edges {
        match adj.len() {
            1 => {}
            2 => out.push(make_facet(mesh, adj[0], adj[1])),
            n => {
                return Err(MeshError::Topology(format!("edge {key:?} shared by {n} elements")));
            }
        }
    }
    Ok(out)
}

/// Displacement-like field with two components per node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub name: String,
    pub components: usize,
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn new(name: impl Into<String>, components: usize, values: Vec<f64>) -> Self {
        Self { name: name.into(), components, values }
    }

    pub fn zeros(name: impl Into<String>, nodes: usize) -> Self {
        Self::new(name, 2, vec![0.0; 2 * nodes])
    }

    pub fn node_count(&self) -> usize {
        self.values.len() / self.components.max(1)
    }

    pub fn vector(&self, node: usize) -> Vec2 {
        Vec2::new(self.values[2 * node], self.values[2 * node + 1])
    }

    pub fn check(&self, mesh: &Mesh) -> Result<(), MeshError> {
        if self.values.len() != mesh.nodes.len() * self.components {
            return Err(MeshError::InvalidInput(format!(
                "field has {} values, mesh needs {}",
                self.values.len(),
                mesh.nodes.len() * self.components
            )));
        }
        Ok(())
    }
}
