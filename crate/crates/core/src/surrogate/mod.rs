//! Surrogate domain: dominant-volume grain assignment and the surrogate interface.

pub mod clip;

use crate::fe::polygon_area;
use crate::geometry::{
    build_classifier_index, classify_point, compute_boundary_pca, BoundaryRep, ClassifierIndex, GeometryError,
    Sideness,
};
use crate::mesh::{interior_facets, Bounds, Facet, Mesh, MeshError};
use crate::Vec2;
use kiddo::{ImmutableKdTree, SquaredEuclidean};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::num::NonZero;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("element {element} lies in no grain")]
    Coverage { element: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// One grain: a simple counter-clockwise polygon with its classifier.
#[derive(Debug)]
pub struct Grain {
    pub id: u32,
    pub polygon: Vec<Vec2>,
    pub boundary: BoundaryRep<2>,
    pub index: ClassifierIndex<2>,
    pub bounds: Bounds,
}

impl Grain {
    pub fn new(id: u32, polygon: Vec<Vec2>) -> Result<Self, SurrogateError> {
        let mut polygon = clip::clean_polygon(&polygon, 0.0);
        if polygon.len() < 3 || !clip::is_simple(&polygon) {
            return Err(GeometryError::Invalid(format!("grain {id} is not a simple polygon")).into());
        }
        if polygon_area(&polygon) < 0.0 {
            polygon.reverse();
        }
        let boundary = BoundaryRep::polygon(&polygon)?;
        let index = build_classifier_index(compute_boundary_pca(&boundary.used_vertices())?, &boundary)?;
        let bounds = Bounds::of_points(&polygon);
        Ok(Self { id, polygon, boundary, index, bounds })
    }

    pub fn classify(&self, p: &Vec2) -> Result<Sideness, GeometryError> {
        if p.x < self.bounds.min.x || p.x > self.bounds.max.x || p.y < self.bounds.min.y || p.y > self.bounds.max.y {
            return Ok(Sideness::Out);
        }
        classify_point(p, &self.boundary, &self.index)
    }
}

/// Grains tiling a 2D domain, sorted by id.
#[derive(Debug)]
pub struct GrainSet {
    grains: Vec<Grain>,
}

impl GrainSet {
    pub fn new(polygons: Vec<(u32, Vec<Vec2>)>) -> Result<Self, SurrogateError> {
        let mut grains = polygons.into_iter().map(|(id, p)| Grain::new(id, p)).collect::<Result<Vec<_>, _>>()?;
        grains.sort_by_key(|g| g.id);
        if grains.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(SurrogateError::Invalid("duplicate grain id".into()));
        }
        if grains.is_empty() {
            return Err(SurrogateError::Invalid("no grains".into()));
        }
        Ok(Self { grains })
    }

    /// Split a rectangle by the line through `a` along `dir`; the left side gets `left_id`.
    pub fn split_rect(bounds: Bounds, a: Vec2, dir: Vec2, left_id: u32, right_id: u32) -> Result<Self, SurrogateError> {
        let rect = vec![
            bounds.min,
            Vec2::new(bounds.max.x, bounds.min.y),
            bounds.max,
            Vec2::new(bounds.min.x, bounds.max.y),
        ];
        let left = clip::clip_half_plane(&rect, a, a + dir);
        let right = clip::clip_half_plane(&rect, a + dir, a);
        Self::new(vec![(left_id, clip::clean_polygon(&left, 0.0)), (right_id, clip::clean_polygon(&right, 0.0))])
    }

    pub fn grains(&self) -> &[Grain] {
        &self.grains
    }

    pub fn get(&self, id: u32) -> Option<&Grain> {
        self.grains.binary_search_by_key(&id, |g| g.id).ok().map(|i| &self.grains[i])
    }

    pub fn ids(&self) -> Vec<u32> {
        self.grains.iter().map(|g| g.id).collect()
    }
}

/// Write a grain file: `grains K`, then `grain <id> vertices N` and N vertex lines per grain.
pub fn write_grains<W: Write>(w: &mut W, grains: &GrainSet) -> std::io::Result<()> {
    writeln!(w, "grains {}", grains.grains.len())?;
    for g in &grains.grains {
        writeln!(w, "grain {} vertices {}", g.id, g.polygon.len())?;
        for p in &g.polygon {
            writeln!(w, "{} {}", crate::fmt_f64(p.x), crate::fmt_f64(p.y))?;
        }
    }
    Ok(())
}

pub fn read_grains<R: BufRead>(r: R) -> Result<GrainSet, SurrogateError> {
    let parse_err = |line: usize, msg: &str| GeometryError::Parse { line, msg: msg.to_string() };
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty() && !s.trim_start().starts_with('#')));
    let mut next = |what: &str| -> Result<(usize, Vec<String>), SurrogateError> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i, l.split_whitespace().map(str::to_string).collect())),
            Some((_, Err(e))) => Err(GeometryError::Io(e).into()),
            None => Err(parse_err(0, &format!("unexpected end of file, expected {what}")).into()),
        }
    };
    let (i, head) = next("header")?;
    let k: usize = match head.as_slice() {
        [g, k] if g == "grains" => k.parse().map_err(|_| parse_err(i, "bad grain count"))?,
        _ => return Err(parse_err(i, "expected `grains K`").into()),
    };
    let mut polys = Vec::with_capacity(k);
    for _ in 0..k {
        let (i, h) = next("grain header")?;
        let (id, n) = match h.as_slice() {
            [g, id, v, n] if g == "grain" && v == "vertices" => (
                id.parse::<u32>().map_err(|_| parse_err(i, "bad grain id"))?,
                n.parse::<usize>().map_err(|_| parse_err(i, "bad vertex count"))?,
            ),
            _ => return Err(parse_err(i, "expected `grain <id> vertices N`").into()),
        };
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            let (i, t) = next("vertex")?;
            let xy: Vec<f64> = t.iter().map(|s| s.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| parse_err(i, "bad coordinate"))?;
            if xy.len() != 2 || !xy.iter().all(|v| v.is_finite()) {
                return Err(parse_err(i, "expected two finite coordinates").into());
            }
            pts.push(Vec2::new(xy[0], xy[1]));
        }
        polys.push((id, pts));
    }
    GrainSet::new(polys)
}

/// Area fraction `|E ∩ Ω_g| / |E|` of a convex counter-clockwise element polygon.
pub fn clip_element_fraction(element: &[Vec2], grain: &Grain) -> Result<f64, SurrogateError> {
    if !clip::is_simple(element) || !clip::is_convex_ccw(element) {
        return Err(GeometryError::Invalid("element polygon is not convex and counter-clockwise".into()).into());
    }
    let eb = Bounds::of_points(element);
    let gb = &grain.bounds;
    if eb.max.x < gb.min.x || eb.min.x > gb.max.x || eb.max.y < gb.min.y || eb.min.y > gb.max.y {
        return Ok(0.0);
    }
    let inter = clip::clip_convex(&grain.polygon, element);
    let a = if inter.len() < 3 { 0.0 } else { polygon_area(&inter) };
    Ok((a / polygon_area(element)).clamp(0.0, 1.0))
}

/// Dominant-volume grain id for every element.
///
/// An element whose nodes all classify IN a single grain takes that grain without clipping.
/// Otherwise the grain with the largest clipped fraction wins; ties go to the lower id.
pub fn assign_grain_ids(mesh: &Mesh, grains: &GrainSet) -> Result<Vec<u32>, SurrogateError> {
    let g = grains.grains();
    let mut cache: Vec<Vec<Option<Sideness>>> = vec![vec![None; mesh.nodes.len()]; g.len()];
    let mut out = Vec::with_capacity(mesh.elements.len());
    for (e, el) in mesh.elements.iter().enumerate() {
        let mut found = None;
        for (k, grain) in g.iter().enumerate() {
            let mut all_in = true;
            for &n in el.nodes() {
                let side = match cache[k][n] {
                    Some(s) => s,
                    None => {
                        let s = grain.classify(&mesh.nodes[n])?;
                        cache[k][n] = Some(s);
                        s
                    }
                };
                if side != Sideness::In {
                    all_in = false;
                    break;
                }
            }
            if all_in {
                found = Some(grain.id);
                break;
            }
        }
        let id = match found {
            Some(id) => id,
            None => dominant_grain(&mesh.element_coords(e), grains)?.ok_or(SurrogateError::Coverage { element: e })?,
        };
        out.push(id);
    }
    Ok(out)
}

/// Arg-max of the clipped fraction over all grains, `None` when every fraction is zero.
pub fn dominant_grain(element: &[Vec2], grains: &GrainSet) -> Result<Option<u32>, SurrogateError> {
    let mut best: Option<(u32, f64)> = None;
    for grain in grains.grains() {
        let phi = clip_element_fraction(element, grain)?;
        if phi > 0.0 && best.is_none_or(|(_, b)| phi > b + 1e-12) {
            best = Some((grain.id, phi));
        }
    }
    Ok(best.map(|(id, _)| id))
}

/// Straight pieces of the true interface with a nearest-segment query.
#[derive(Debug)]
pub struct InterfaceLocator {
    segments: Vec<(Vec2, Vec2)>,
    tree: ImmutableKdTree<f64, 2>,
    max_half_length: f64,
}

impl InterfaceLocator {
    pub fn new(segments: Vec<(Vec2, Vec2)>) -> Result<Self, SurrogateError> {
        let segments: Vec<_> = segments.into_iter().filter(|(a, b)| a != b).collect();
        if segments.is_empty() {
            return Err(SurrogateError::Invalid("empty interface".into()));
        }
        let mids: Vec<[f64; 2]> = segments.iter().map(|(a, b)| [0.5 * (a.x + b.x), 0.5 * (a.y + b.y)]).collect();
        let max_half_length = segments.iter().map(|(a, b)| 0.5 * (b - a).norm()).fold(0.0, f64::max);
        let tree = ImmutableKdTree::new_from_slice(&mids)
            .map_err(|e| SurrogateError::Invalid(format!("kd-tree construction failed: {e:?}")))?;
        Ok(Self { segments, tree, max_half_length })
    }

    pub fn segments(&self) -> &[(Vec2, Vec2)] {
        &self.segments
    }

    /// Index and closest point of the nearest segment; ties go to the lower index.
    pub fn nearest(&self, q: &Vec2) -> (usize, Vec2) {
        let k = NonZero::new(8.min(self.segments.len())).unwrap();
        let mut best = (usize::MAX, Vec2::zeros(), f64::INFINITY);
        let consider = |i: usize, best: &mut (usize, Vec2, f64)| {
            let (a, b) = self.segments[i];
            let p = closest_on(q, &a, &b);
            let d = (q - p).norm();
            if d < best.2 || (d == best.2 && i < best.0) {
                *best = (i, p, d);
            }
        };
        for nn in self.tree.query(&[q.x, q.y]).nearest_n::<SquaredEuclidean<f64>>(k).execute() {
            consider(nn.item as usize, &mut best);
        }
        // any segment closer than `best` has its midpoint within best + half its length
        let r = best.2 + self.max_half_length;
        let mut hits: Vec<usize> = self
            .tree
            .query(&[q.x, q.y])
            .within::<SquaredEuclidean<f64>>(r * r * (1.0 + 1e-12) + 1e-300)
            .unsorted()
            .execute()
            .into_iter()
            .map(|nn| nn.item as usize)
            .collect();
        hits.sort_unstable();
        for i in hits {
            consider(i, &mut best);
        }
        (best.0, best.1)
    }

    /// Unit normal of segment `i`, rotated clockwise from its direction.
    pub fn normal(&self, i: usize) -> Vec2 {
        let (a, b) = self.segments[i];
        let t = b - a;
        Vec2::new(t.y, -t.x).normalize()
    }
}

fn closest_on(q: &Vec2, a: &Vec2, b: &Vec2) -> Vec2 {
    let ab = b - a;
    let t = ((q - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    a + ab * t
}

/// Vector from `q` to the closest point of the true interface, and that segment's unit normal.
pub fn closest_interface_point(q: &Vec2, locator: &InterfaceLocator) -> (Vec2, Vec2) {
    let (i, p) = locator.nearest(q);
    (p - q, locator.normal(i))
}

/// Geometric data at one surrogate-facet quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceQp {
    /// Edge parameter in `[0,1]` along the minus element's edge.
    pub s: f64,
    /// Line-quadrature weight times facet length.
    pub weight: f64,
    pub point: Vec2,
    /// True normal, oriented so that `n·n_h ≥ 0`.
    pub normal: Vec2,
    /// From the surrogate point to its closest true-interface point.
    pub distance: Vec2,
    pub area_factor: f64,
    /// `n_h − (n_h·n) n`.
    pub tangential: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceFacet {
    pub facet: Facet,
    pub length: f64,
    pub qps: Vec<InterfaceQp>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurrogateInterface {
    pub facets: Vec<InterfaceFacet>,
}

impl SurrogateInterface {
    /// Facets whose true interface coincides with the facet itself.
    pub fn fitted(mesh: &Mesh, facets: &[Facet]) -> Self {
        let facets = facets
            .iter()
            .map(|f| {
                let (a, b) = (mesh.nodes[f.nodes[0]], mesh.nodes[f.nodes[1]]);
                let length = (b - a).norm();
                let qps = crate::fe::line_rule()
                    .iter()
                    .map(|&(s, w)| InterfaceQp {
                        s,
                        weight: w * length,
                        point: a + (b - a) * s,
                        normal: f.normal,
                        distance: Vec2::zeros(),
                        area_factor: 1.0,
                        tangential: Vec2::zeros(),
                    })
                    .collect();
                InterfaceFacet { facet: *f, length, qps }
            })
            .collect();
        Self { facets }
    }

    pub fn qp_count(&self) -> usize {
        self.facets.iter().map(|f| f.qps.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }
}

/// Boundary segments of grain `a` whose outward side lies in grain `b` (any other grain when `b` is `None`).
fn shared_segments(grains: &GrainSet, a: &Grain, b: Option<u32>) -> Result<Vec<(Vec2, Vec2)>, SurrogateError> {
    let n = a.polygon.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (p, q) = (a.polygon[i], a.polygon[(i + 1) % n]);
        let t = q - p;
        let len = t.norm();
        let probe = 0.5 * (p + q) + Vec2::new(t.y, -t.x) / len * (1e-7 * len.max(1e-12));
        let hit = match b {
            Some(id) => grains.get(id).map(|g| g.classify(&probe)).transpose()? == Some(Sideness::In),
            None => {
                let mut any = false;
                for g in grains.grains() {
                    if g.id != a.id && g.classify(&probe)? == Sideness::In {
                        any = true;
                        break;
                    }
                }
                any
            }
        };
        if hit {
            out.push((p, q));
        }
    }
    Ok(out)
}

fn locator_for_pair(grains: &GrainSet, lo: u32, hi: u32) -> Result<InterfaceLocator, SurrogateError> {
    let ga = grains.get(lo).ok_or_else(|| SurrogateError::Invalid(format!("unknown grain {lo}")))?;
    let gb = grains.get(hi).ok_or_else(|| SurrogateError::Invalid(format!("unknown grain {hi}")))?;
    let mut segs = shared_segments(grains, ga, Some(hi))?;
    if segs.is_empty() {
        log::debug!("grains {lo} and {hi} share no boundary; using all interfaces of both");
        segs = shared_segments(grains, ga, None)?;
        segs.extend(shared_segments(grains, gb, None)?);
    }
    InterfaceLocator::new(segs)
}

/// Surrogate facets between elements of different regions, with shifted-interface data
/// at two Gauss points per facet.
pub fn build_surrogate_interface(mesh: &Mesh, grains: &GrainSet, regions: &[u32]) -> Result<SurrogateInterface, SurrogateError> {
    if regions.len() != mesh.elements.len() {
        return Err(SurrogateError::Invalid(format!(
            "{} region ids for {} elements",
            regions.len(),
            mesh.elements.len()
        )));
    }
    let mut tagged = mesh.clone();
    tagged.regions = regions.to_vec();
    let mut locators: BTreeMap<(u32, u32), InterfaceLocator> = BTreeMap::new();
    let mut facets = Vec::new();
    for f in interior_facets(&tagged)? {
        let (rm, rp) = (regions[f.minus], regions[f.plus]);
        if rm == rp {
            continue;
        }
        let key = (rm.min(rp), rm.max(rp));
        if !locators.contains_key(&key) {
            locators.insert(key, locator_for_pair(grains, key.0, key.1)?);
        }
        let loc = &locators[&key];
        let (a, b) = (tagged.nodes[f.nodes[0]], tagged.nodes[f.nodes[1]]);
        let length = (b - a).norm();
        let nh = f.normal;
        let qps = crate::fe::line_rule()
            .iter()
            .map(|&(s, w)| {
                let point = a + (b - a) * s;
                let (distance, mut n) = closest_interface_point(&point, loc);
                if n.dot(&nh) < 0.0 {
                    n = -n;
                }
                let c = n.dot(&nh);
                InterfaceQp {
                    s,
                    weight: w * length,
                    point,
                    normal: n,
                    distance,
                    area_factor: c.abs().min(1.0),
                    tangential: nh - n * c,
                }
            })
            .collect();
        facets.push(InterfaceFacet { facet: f, length, qps });
    }
    if facets.is_empty() && grains.grains().len() >= 2 {
        log::warn!("surrogate interface is empty although {} grains are present", grains.grains().len());
    }
    Ok(SurrogateInterface { facets })
}
