//! Interface-fitted remeshing of a grain-labelled mesh and projection of nodal solutions onto it.
//!
//! Elements lying inside a single grain are copied; every other element is clipped against each
//! grain and the pieces are triangulated. Output nodes carry a marker describing where their
//! projected value comes from:
//!
//! - `0`: coincides with a source node of a compatible block, value copied
//! - `1`: new node inside a source element of the same block, value interpolated
//! - `2`: new node outside every source element of its block, value recovered by a Taylor step

use crate::fe::{eval, inverse_map, polygon_area, ElementKind};
use crate::mesh::{Bounds, Element, Mesh, MeshError, MeshFile, NodalField};
use crate::surrogate::{clip, GrainSet, SurrogateError};
use crate::Vec2;
use kiddo::{ImmutableKdTree, SquaredEuclidean};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConformalizeError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error("no source element of block {block} for node {node}")]
    Projection { node: usize, block: u32 },
    #[error("invalid IFM data: {0}")]
    Invalid(String),
}

pub const MARKER_INHERITED: u8 = 0;
pub const MARKER_SAME_BLOCK: u8 = 1;
pub const MARKER_CROSS_BLOCK: u8 = 2;

/// Interface-fitted mesh. Block ids are stored as the mesh region ids.
#[derive(Debug, Clone, PartialEq)]
pub struct IfmMesh {
    pub mesh: Mesh,
    pub node_markers: Vec<u8>,
    /// Source node per output node; `Some` exactly for marker 0.
    pub source_node_ids: Vec<Option<usize>>,
    /// Total area of clipped pieces dropped as slivers.
    pub dropped_area: f64,
}

impl IfmMesh {
    pub fn blocks(&self) -> &[u32] {
        &self.mesh.regions
    }

    pub fn to_file(&self) -> MeshFile {
        let mut sections = BTreeMap::new();
        sections.insert("node_markers".to_string(), self.node_markers.iter().map(|&m| m as i64).collect());
        sections.insert(
            "source_node_ids".to_string(),
            self.source_node_ids.iter().map(|s| s.map_or(-1, |v| v as i64)).collect(),
        );
        MeshFile { mesh: self.mesh.clone(), sections }
    }

    pub fn from_file(file: MeshFile) -> Result<Self, ConformalizeError> {
        let n = file.mesh.nodes.len();
        let section = |name: &str| -> Result<&Vec<i64>, ConformalizeError> {
            let s = file.sections.get(name).ok_or_else(|| ConformalizeError::Invalid(format!("missing section `{name}`")))?;
            if s.len() != n {
                return Err(ConformalizeError::Invalid(format!("section `{name}` has {} entries for {n} nodes", s.len())));
            }
            Ok(s)
        };
        let markers = section("node_markers")?;
        let sources = section("source_node_ids")?;
        let mut node_markers = Vec::with_capacity(n);
        let mut source_node_ids = Vec::with_capacity(n);
        for (i, (&m, &s)) in markers.iter().zip(sources).enumerate() {
            let m = u8::try_from(m).ok().filter(|m| *m <= 2).ok_or_else(|| ConformalizeError::Invalid(format!("node {i}: marker {m}")))?;
            let s = match (m, s) {
                (0, s) if s >= 0 => Some(s as usize),
                (0, _) => return Err(ConformalizeError::Invalid(format!("node {i}: marker 0 without source id"))),
                (_, -1) => None,
                (_, s) => return Err(ConformalizeError::Invalid(format!("node {i}: source id {s} on marker {m}"))),
            };
            node_markers.push(m);
            source_node_ids.push(s);
        }
        Ok(IfmMesh { mesh: file.mesh, node_markers, source_node_ids, dropped_area: 0.0 })
    }
}

/// Centroid tree over the source elements, plus a cell lookup for uniform quad grids.
#[derive(Debug)]
pub struct SearchStructure {
    tree: Option<ImmutableKdTree<f64, 2>>,
    radius: f64,
    lookup: Option<UniformLookup>,
}

#[derive(Debug)]
struct UniformLookup {
    origin: Vec2,
    dx: f64,
    dy: f64,
    nx: usize,
    ny: usize,
    cells: Vec<usize>,
}

impl SearchStructure {
    pub fn is_uniform(&self) -> bool {
        self.lookup.is_some()
    }

    /// Elements whose centroid lies close enough to `x` for the element to contain it.
    fn candidates(&self, x: &Vec2) -> Vec<usize> {
        let r2 = self.radius * self.radius * (1.0 + 1e-9);
        let Some(tree) = &self.tree else { return Vec::new() };
        let mut c: Vec<usize> = tree
            .query(&[x.x, x.y])
            .within::<SquaredEuclidean<f64>>(r2)
            .unsorted()
            .execute()
            .into_iter()
            .map(|n| n.item as usize)
            .collect();
        c.sort_unstable();
        c
    }
}

pub fn build_search_structure(mesh: &Mesh) -> SearchStructure {
    let centroids: Vec<[f64; 2]> = (0..mesh.elements.len())
        .map(|e| {
            let c = mesh.element_centroid(e);
            [c.x, c.y]
        })
        .collect();
    let radius = (0..mesh.elements.len())
        .map(|e| {
            let c = mesh.element_centroid(e);
            mesh.element_coords(e).iter().map(|p| (p - c).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    SearchStructure { tree: ImmutableKdTree::new_from_slice(&centroids).ok(), radius, lookup: uniform_lookup(mesh) }
}

fn uniform_lookup(mesh: &Mesh) -> Option<UniformLookup> {
    if mesh.elements.is_empty() || mesh.elements.iter().any(|el| el.kind != ElementKind::Quad4) {
        return None;
    }
    let b = mesh.bounds();
    let c0 = mesh.element_coords(0);
    let dx = c0[1].x - c0[0].x;
    let dy = c0[3].y - c0[0].y;
    if !(dx > 0.0 && dy > 0.0) {
        return None;
    }
    let nx = ((b.max.x - b.min.x) / dx).round() as usize;
    let ny = ((b.max.y - b.min.y) / dy).round() as usize;
    let tol = 1e-12 * b.diameter();
    if nx * ny != mesh.elements.len() || ((nx as f64) * dx - (b.max.x - b.min.x)).abs() > tol || ((ny as f64) * dy - (b.max.y - b.min.y)).abs() > tol {
        return None;
    }
    let mut cells = vec![usize::MAX; nx * ny];
    for e in 0..mesh.elements.len() {
        let p = mesh.element_coords(e);
        let o = p[0] - b.min;
        let i = (o.x / dx).round();
        let j = (o.y / dy).round();
        let expected = [Vec2::new(0.0, 0.0), Vec2::new(dx, 0.0), Vec2::new(dx, dy), Vec2::new(0.0, dy)];
        let corner = b.min + Vec2::new(i * dx, j * dy);
        if i < 0.0 || j < 0.0 || (i as usize) >= nx || (j as usize) >= ny {
            return None;
        }
        if p.iter().zip(&expected).any(|(q, d)| (q - (corner + d)).norm() > tol) {
            return None;
        }
        let k = j as usize * nx + i as usize;
        if cells[k] != usize::MAX {
            return None;
        }
        cells[k] = e;
    }
    Some(UniformLookup { origin: b.min, dx, dy, nx, ny, cells })
}

fn contains(mesh: &Mesh, e: usize, x: &Vec2) -> bool {
    let kind = mesh.elements[e].kind;
    inverse_map(kind, &mesh.element_coords(e), *x).is_some_and(|xi| kind.contains_ref(xi, 1e-10))
}

/// Lowest-numbered element containing `x`, any block.
pub fn find_containing_elem(x: &Vec2, structure: &SearchStructure, mesh: &Mesh) -> Option<usize> {
    structure.candidates(x).into_iter().find(|&e| contains(mesh, e, x))
}

/// Containing source element of block `block`, or `None`.
pub fn find_source_elem(x: &Vec2, block: u32, structure: &SearchStructure, mesh: &Mesh, regions: &[u32]) -> Option<usize> {
    if let Some(l) = &structure.lookup {
        let i = ((x.x - l.origin.x) / l.dx).floor().clamp(0.0, (l.nx - 1) as f64) as usize;
        let j = ((x.y - l.origin.y) / l.dy).floor().clamp(0.0, (l.ny - 1) as f64) as usize;
        let e = l.cells[j * l.nx + i];
        if regions[e] == block && contains(mesh, e, x) {
            return Some(e);
        }
    }
    structure.candidates(x).into_iter().find(|&e| regions[e] == block && contains(mesh, e, x))
}

/// Registry merging coincident nodes of one block.
struct NodeRegistry {
    tol: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl NodeRegistry {
    fn key(&self, p: &Vec2) -> (i64, i64) {
        ((p.x / self.tol).floor() as i64, (p.y / self.tol).floor() as i64)
    }

    fn find(&self, p: &Vec2, nodes: &[Vec2]) -> Option<usize> {
        let (i, j) = self.key(p);
        for di in -1..=1 {
            for dj in -1..=1 {
                if let Some(ids) = self.cells.get(&(i + di, j + dj)) {
                    if let Some(&n) = ids.iter().find(|&&n| (nodes[n] - p).norm() <= self.tol) {
                        return Some(n);
                    }
                }
            }
        }
        None
    }

    fn insert(&mut self, p: &Vec2, id: usize) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(id);
    }
}

struct Builder<'a> {
    source: &'a Mesh,
    structure: SearchStructure,
    node_blocks: Vec<BTreeSet<u32>>,
    source_registry: NodeRegistry,
    registries: BTreeMap<u32, NodeRegistry>,
    tol: f64,
    nodes: Vec<Vec2>,
    markers: Vec<u8>,
    sources: Vec<Option<usize>>,
}

impl Builder<'_> {
    /// Output node for `p` in `block`; `source` is the source node when known.
    fn node(&mut self, p: Vec2, block: u32, source: Option<usize>) -> usize {
        let tol = self.tol;
        let reg = self.registries.entry(block).or_insert_with(|| NodeRegistry { tol, cells: HashMap::new() });
        if let Some(n) = reg.find(&p, &self.nodes) {
            return n;
        }
        let id = self.nodes.len();
        reg.insert(&p, id);
        let source = source.or_else(|| self.source_node_at(&p, block));
        let compatible = source.filter(|&s| self.node_blocks[s].contains(&block));
        let (pos, marker) = match compatible {
            Some(s) => (self.source.nodes[s], MARKER_INHERITED),
            None => {
                let inside = find_source_elem(&p, block, &self.structure, self.source, &self.source.regions).is_some();
                (p, if inside { MARKER_SAME_BLOCK } else { MARKER_CROSS_BLOCK })
            }
        };
        self.nodes.push(pos);
        self.markers.push(marker);
        self.sources.push(compatible);
        id
    }

    /// A source node at `p`, preferring one adjacent to `block`.
    fn source_node_at(&self, p: &Vec2, block: u32) -> Option<usize> {
        let reg = &self.source_registry;
        let (i, j) = reg.key(p);
        let mut hits = Vec::new();
        for di in -1..=1 {
            for dj in -1..=1 {
                if let Some(ids) = reg.cells.get(&(i + di, j + dj)) {
                    hits.extend(ids.iter().copied().filter(|&n| (self.source.nodes[n] - p).norm() <= reg.tol));
                }
            }
        }
        hits.sort_unstable();
        hits.iter().copied().find(|&n| self.node_blocks[n].contains(&block)).or(hits.first().copied())
    }
}

/// Conformalize `mesh` (whose region ids are the source block ids) against `grains`.
pub fn conformalize(mesh: &Mesh, grains: &GrainSet) -> Result<IfmMesh, ConformalizeError> {
    mesh.validate()?;
    let h = crate::mesh::characteristic_size(mesh)?;
    let tol = 1e-10 * h;
    let sliver = 1e-14 * h * h;
    let mut node_blocks = vec![BTreeSet::new(); mesh.nodes.len()];
    for (e, el) in mesh.elements.iter().enumerate() {
        for &n in el.nodes() {
            node_blocks[n].insert(mesh.regions[e]);
        }
    }
    let mut source_registry = NodeRegistry { tol, cells: HashMap::new() };
    for (n, p) in mesh.nodes.iter().enumerate() {
        source_registry.insert(p, n);
    }
    let mut b = Builder {
        source: mesh,
        structure: build_search_structure(mesh),
        node_blocks,
        source_registry,
        registries: BTreeMap::new(),
        tol,
        nodes: Vec::new(),
        markers: Vec::new(),
        sources: Vec::new(),
    };
    let mut elements = Vec::new();
    let mut blocks = Vec::new();
    let mut dropped = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        let coords = mesh.element_coords(e);
        let area = polygon_area(&coords);
        let eb = Bounds::of_points(&coords);
        let mut pieces = Vec::new();
        for grain in grains.grains() {
            let gb = &grain.bounds;
            if eb.max.x < gb.min.x || eb.min.x > gb.max.x || eb.max.y < gb.min.y || eb.min.y > gb.max.y {
                continue;
            }
            let piece = clip::clean_polygon(&clip::clip_convex(&grain.polygon, &coords), tol);
            if piece.len() < 3 {
                continue;
            }
            let a = polygon_area(&piece);
            if a < sliver {
                if a > 0.0 {
                    log::warn!("element {e}: dropped sliver of area {a:e} in grain {}", grain.id);
                    dropped += a;
                }
                continue;
            }
            pieces.push((grain.id, piece, a));
        }
        match pieces.as_slice() {
            [] => log::warn!("element {e} lies outside every grain; discarded"),
            [(id, _, a)] if (a - area).abs() <= 1e-12 * area => {
                let nodes: Vec<usize> = el.nodes().iter().map(|&n| b.node(mesh.nodes[n], *id, Some(n))).collect();
                elements.push(Element::from_nodes(el.kind, &nodes));
                blocks.push(*id);
            }
            _ => {
                for (id, piece, _) in &pieces {
                    let ids: Vec<usize> = piece.iter().map(|p| b.node(*p, *id, None)).collect();
                    for t in clip::triangulate(piece) {
                        let tri = [ids[t[0]], ids[t[1]], ids[t[2]]];
                        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                            continue;
                        }
                        elements.push(Element::tri(tri[0], tri[1], tri[2]));
                        blocks.push(*id);
                    }
                }
            }
        }
    }
    // inherited nodes first, in source order, then new nodes in creation order
    let mut order: Vec<usize> = (0..b.nodes.len()).collect();
    order.sort_by_key(|&i| (b.sources[i].unwrap_or(usize::MAX), i));
    let mut rank = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    for el in &mut elements {
        for n in el.nodes_mut() {
            *n = rank[*n];
        }
    }
    let nodes = order.iter().map(|&i| b.nodes[i]).collect();
    let markers = order.iter().map(|&i| b.markers[i]).collect();
    let sources = order.iter().map(|&i| b.sources[i]).collect();
    let mut out = Mesh::new(nodes, elements, blocks, BTreeMap::new())?;
    out.tag_box_sides();
    Ok(IfmMesh { mesh: out, node_markers: markers, source_node_ids: sources, dropped_area: dropped })
}

fn interpolate(mesh: &Mesh, e: usize, u: &NodalField, x: &Vec2) -> Vec<f64> {
    let el = &mesh.elements[e];
    let xi = inverse_map(el.kind, &mesh.element_coords(e), *x).unwrap_or_else(Vec2::zeros);
    let n = el.kind.shape(xi);
    let c = u.components;
    let mut out = vec![0.0; c];
    for (a, &node) in el.nodes().iter().enumerate() {
        for (k, o) in out.iter_mut().enumerate() {
            *o += n[a] * u.values[c * node + k];
        }
    }
    out
}

/// `u(x*) + ∇u(x*)(x − x*)` with `x*` the node of `e` closest to `x`.
fn taylor(mesh: &Mesh, e: usize, u: &NodalField, x: &Vec2) -> Vec<f64> {
    let el = &mesh.elements[e];
    let coords = mesh.element_coords(e);
    let a_star = (0..coords.len())
        .min_by(|&i, &j| (coords[i] - x).norm().total_cmp(&(coords[j] - x).norm()))
        .expect("element has nodes");
    let xi = el.kind.reference_node(a_star);
    let s = eval(el.kind, &coords, xi);
    let c = u.components;
    let dx = x - coords[a_star];
    let mut out = vec![0.0; c];
    for (k, o) in out.iter_mut().enumerate() {
        let mut grad = Vec2::zeros();
        for (a, &node) in el.nodes().iter().enumerate() {
            grad += s.grad[a] * u.values[c * node + k];
        }
        *o = u.values[c * el.nodes()[a_star] + k] + grad.dot(&dx);
    }
    out
}

/// Closest source element of `block`, measured from `x` to the element polygon.
fn closest_block_element(mesh: &Mesh, block: u32, x: &Vec2) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for e in (0..mesh.elements.len()).filter(|&e| mesh.regions[e] == block) {
        let p = mesh.element_coords(e);
        let d = if contains(mesh, e, x) {
            0.0
        } else {
            (0..p.len())
                .map(|i| {
                    let (a, b) = (p[i], p[(i + 1) % p.len()]);
                    let t = ((x - a).dot(&(b - a)) / (b - a).norm_squared()).clamp(0.0, 1.0);
                    (a + (b - a) * t - x).norm()
                })
                .fold(f64::INFINITY, f64::min)
        };
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((e, d));
        }
    }
    best.map(|b| b.0)
}

/// Project a nodal field of `source` onto the IFM mesh.
pub fn project_solution(ifm: &IfmMesh, source: &Mesh, u: &NodalField) -> Result<NodalField, ConformalizeError> {
    u.check(source)?;
    let structure = build_search_structure(source);
    let mut node_block = vec![None; ifm.mesh.nodes.len()];
    for (e, el) in ifm.mesh.elements.iter().enumerate() {
        for &n in el.nodes() {
            node_block[n].get_or_insert(ifm.mesh.regions[e]);
        }
    }
    let mut source_blocks = vec![BTreeSet::new(); source.nodes.len()];
    for (e, el) in source.elements.iter().enumerate() {
        for &n in el.nodes() {
            source_blocks[n].insert(source.regions[e]);
        }
    }
    let c = u.components;
    let mut values = vec![0.0; c * ifm.mesh.nodes.len()];
    for (t, x) in ifm.mesh.nodes.iter().enumerate() {
        let Some(block) = node_block[t] else { continue };
        let out = &mut values[c * t..c * (t + 1)];
        if ifm.node_markers[t] == MARKER_INHERITED {
            let s = ifm.source_node_ids[t].ok_or_else(|| ConformalizeError::Invalid(format!("node {t}: marker 0 without source id")))?;
            if s >= source.nodes.len() {
                return Err(ConformalizeError::Invalid(format!("node {t}: source id {s} out of range")));
            }
            if source_blocks[s].contains(&block) {
                out.copy_from_slice(&u.values[c * s..c * (s + 1)]);
                continue;
            }
            log::warn!("node {t}: source node {s} is not adjacent to block {block}; recovering by Taylor expansion");
        }
        if ifm.node_markers[t] == MARKER_SAME_BLOCK {
            if let Some(e) = find_source_elem(x, block, &structure, source, &source.regions) {
                out.copy_from_slice(&interpolate(source, e, u, x));
                continue;
            }
        }
        let e = closest_block_element(source, block, x).ok_or(ConformalizeError::Projection { node: t, block })?;
        out.copy_from_slice(&taylor(source, e, u, x));
    }
    Ok(NodalField::new(u.name.clone(), c, values))
}
