use super::{BoundaryRep, GeometryError, PcaBasis, Point, Sideness};
use kiddo::{ImmutableKdTree, SquaredEuclidean};

/// Oriented bounding box in the PCA frame: `mean + Σ [min_k, max_k] axis_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Obb<const D: usize> {
    pub origin: Point<D>,
    pub axes: [Point<D>; D],
    pub min: [f64; D],
    pub max: [f64; D],
}

impl<const D: usize> Obb<D> {
    pub fn local(&self, p: &Point<D>) -> [f64; D] {
        let d = p - self.origin;
        self.axes.map(|a| a.dot(&d))
    }

    pub fn contains(&self, p: &Point<D>) -> bool {
        let l = self.local(p);
        (0..D).all(|k| l[k] >= self.min[k] && l[k] <= self.max[k])
    }

    pub fn axis_length(&self, k: usize) -> f64 {
        self.max[k] - self.min[k]
    }

    pub fn diameter(&self) -> f64 {
        (0..D).map(|k| self.axis_length(k).powi(2)).sum::<f64>().sqrt()
    }

    fn corner(&self, maximal: bool) -> Point<D> {
        let c = if maximal { &self.max } else { &self.min };
        (0..D).fold(self.origin, |acc, k| acc + self.axes[k] * c[k])
    }
}

/// Acceleration data for [`classify_point`].
pub struct ClassifierIndex<const D: usize> {
    pub basis: PcaBasis<D>,
    pub obb: Obb<D>,
    pub l_max_projected: f64,
    pub on_tolerance: f64,
    tree: ImmutableKdTree<f64, D>,
    balls: Vec<(Point<D>, f64)>,
}

impl<const D: usize> std::fmt::Debug for ClassifierIndex<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassifierIndex")
            .field("basis", &self.basis)
            .field("obb", &self.obb)
            .field("l_max_projected", &self.l_max_projected)
            .field("facets", &self.balls.len())
            .finish()
    }
}

impl<const D: usize> ClassifierIndex<D> {
    pub fn ray_axis(&self) -> Point<D> {
        self.basis.axes[self.basis.ray_axis()]
    }

    fn project(&self, p: &Point<D>) -> Point<D> {
        let r = self.ray_axis();
        p - r * p.dot(&r)
    }
}

/// OBB, projected-centroid tree and maximum projected facet extent.
///
/// `l_max_projected` is the larger of the projected facet AABB diagonal and twice the
/// largest projected centroid-to-vertex distance; the AABB diagonal alone can miss facets
/// when the ray axis is oblique to the coordinate axes.
pub fn build_classifier_index<const D: usize>(
    basis: PcaBasis<D>,
    boundary: &BoundaryRep<D>,
) -> Result<ClassifierIndex<D>, GeometryError> {
    let r = basis.axes[basis.ray_axis()];
    let proj = |p: Point<D>| p - r * p.dot(&r);
    let mut min = [f64::INFINITY; D];
    let mut max = [f64::NEG_INFINITY; D];
    let mut l_max: f64 = 0.0;
    let mut centroids = Vec::with_capacity(boundary.facets().len());
    let mut balls = Vec::with_capacity(boundary.facets().len());
    for f in 0..boundary.facets().len() {
        let pts = boundary.facet_points(f);
        let c = boundary.facet_centroid(f);
        let mut lo = Point::<D>::repeat(f64::INFINITY);
        let mut hi = Point::<D>::repeat(f64::NEG_INFINITY);
        let mut radius: f64 = 0.0;
        let mut spread: f64 = 0.0;
        for x in &pts {
            let d = x - basis.mean;
            for k in 0..D {
                let l = d.dot(&basis.axes[k]);
                min[k] = min[k].min(l);
                max[k] = max[k].max(l);
            }
            lo = lo.inf(x);
            hi = hi.sup(x);
            radius = radius.max((x - c).norm());
            spread = spread.max(proj(x - c).norm());
        }
        l_max = l_max.max(proj(hi - lo).norm()).max(2.0 * spread);
        centroids.push(proj(c).into());
        balls.push((c, radius));
    }
    let raw = Obb { origin: basis.mean, axes: basis.axes, min, max };
    let pad = 1e-9 * raw.diameter();
    if !(raw.diameter() > 0.0) {
        return Err(GeometryError::Degenerate("boundary has zero extent".into()));
    }
    let obb = Obb { min: min.map(|m| m - pad), max: max.map(|m| m + pad), ..raw };
    let on_tolerance = 1e-10 * obb.diameter();
    let tree = ImmutableKdTree::new_from_slice(&centroids)
        .map_err(|e| GeometryError::Degenerate(format!("kd-tree construction failed: {e:?}")))?;
    Ok(ClassifierIndex { basis, obb, l_max_projected: l_max, on_tolerance, tree, balls })
}

/// Ray start outside the OBB so that the ray along `axis` ends at `p`.
pub fn generate_ray_start<const D: usize>(
    p: &Point<D>,
    inverted: bool,
    axis: usize,
    obb: &Obb<D>,
) -> Result<Point<D>, GeometryError> {
    const SAFE_FACTOR: f64 = 1.1;
    let length = obb.axis_length(axis);
    if !(length > 0.0) {
        return Err(GeometryError::Degenerate(format!("OBB axis {axis} has zero length")));
    }
    let dir = obb.axes[axis];
    let along = obb.local(p)[axis] - obb.min[axis];
    let (maximal, multiplier) = if along < 0.5 * length {
        (inverted, if inverted { -1.0 } else { 1.0 })
    } else {
        (!inverted, if inverted { 1.0 } else { -1.0 })
    };
    let corner = obb.corner(maximal);
    let proj = p - dir * (p - corner).dot(&dir);
    Ok(proj - dir * (SAFE_FACTOR * length * multiplier))
}

/// True when the segment `origin + [0,1] dir` provably misses the ball.
pub fn ray_region_fast_reject<const D: usize>(origin: &Point<D>, dir: &Point<D>, center: &Point<D>, radius: f64) -> bool {
    let end = origin + dir;
    for k in 0..D {
        let lo = origin[k].min(end[k]) - radius;
        let hi = origin[k].max(end[k]) + radius;
        if center[k] < lo || center[k] > hi {
            return true;
        }
    }
    let t = (center - origin).dot(dir) / dir.dot(dir);
    let foot = origin + dir * t;
    (foot - center).norm() > radius
}

/// Facets whose projected centroid lies within `l_max_projected` of the projection of `q`.
pub fn collect_candidates<const D: usize>(q: &Point<D>, index: &ClassifierIndex<D>) -> Vec<usize> {
    let qp: [f64; D] = index.project(q).into();
    let r = index.l_max_projected * (1.0 + 1e-12) + index.on_tolerance;
    let mut ids: Vec<usize> = index
        .tree
        .query(&qp)
        .within::<SquaredEuclidean<f64>>(r * r)
        .unsorted()
        .execute()
        .into_iter()
        .map(|n| n.item as usize)
        .collect();
    ids.sort_unstable();
    ids
}

/// Count facets crossed by the segment `start → end` and classify `end`.
///
/// With an index, only candidates from [`collect_candidates`] are tested. Crossings at
/// shared vertices and edges are resolved by symbolic perturbation of the ray, so each
/// crossing of the boundary is counted exactly once.
pub fn trace_ray<const D: usize>(
    start: &Point<D>,
    end: &Point<D>,
    boundary: &BoundaryRep<D>,
    index: Option<&ClassifierIndex<D>>,
) -> (Sideness, usize) {
    let tol = index.map(|i| i.on_tolerance).unwrap_or(1e-10 * boundary.diameter());
    let dir = end - start;
    let frame = RayFrame::new(start, &dir);
    let mut count = 0;
    let mut visit = |f: usize, ball: Option<(Point<D>, f64)>| -> bool {
        if let Some((c, r)) = ball {
            if ray_region_fast_reject(start, &dir, &c, r + tol) {
                return false;
            }
        }
        if boundary.distance_to_facet(end, f) <= tol {
            return true;
        }
        if frame.crosses(&boundary.facet_points(f)) {
            count += 1;
        }
        false
    };
    match index {
        Some(idx) => {
            for f in collect_candidates(start, idx) {
                if visit(f, Some(idx.balls[f])) {
                    return (Sideness::On, count);
                }
            }
        }
        None => {
            for f in 0..boundary.facets().len() {
                if visit(f, None) {
                    return (Sideness::On, count);
                }
            }
        }
    }
    (if count % 2 == 1 { Sideness::In } else { Sideness::Out }, count)
}

/// Orthonormal frame with the ray along the last axis and the start at the origin.
struct RayFrame<const D: usize> {
    origin: Point<D>,
    perp: Vec<Point<D>>,
    dir: Point<D>,
    length: f64,
}

impl<const D: usize> RayFrame<D> {
    fn new(origin: &Point<D>, dir: &Point<D>) -> Self {
        let length = dir.norm();
        let r = dir / length;
        let perp = if D == 2 {
            vec![Point::<D>::from_fn(|i, _| if i == 0 { -r[1] } else { r[0] })]
        } else {
            let k = (0..D).min_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs())).unwrap_or(0);
            let mut e = Point::<D>::zeros();
            e[k] = 1.0;
            let m1 = (e - r * e.dot(&r)).normalize();
            let m2 = Point::<D>::from_fn(|i, _| {
                let (j, l) = ((i + 1) % 3, (i + 2) % 3);
                r[j] * m1[l] - r[l] * m1[j]
            });
            vec![m1, m2]
        };
        Self { origin: *origin, perp, dir: r, length }
    }

    fn crosses(&self, pts: &[Point<D>; D]) -> bool {
        let local: Vec<(Vec<f64>, f64)> = pts
            .iter()
            .map(|p| {
                let d = p - self.origin;
                (self.perp.iter().map(|m| m.dot(&d)).collect(), self.dir.dot(&d))
            })
            .collect();
        let t_hit = if D == 2 {
            let (sa, ta) = (local[0].0[0], local[0].1);
            let (sb, tb) = (local[1].0[0], local[1].1);
            if (sa > 0.0) == (sb > 0.0) {
                return false;
            }
            ta + (tb - ta) * sa / (sa - sb)
        } else {
            let side = |k: usize| {
                let (a, b) = (&local[k].0, &local[(k + 1) % 3].0);
                edge_side(a[0], a[1], b[0], b[1])
            };
            let s0 = side(0);
            if side(1) != s0 || side(2) != s0 {
                return false;
            }
            let w: Vec<f64> = (0..3)
                .map(|k| {
                    let (a, b) = (&local[(k + 1) % 3].0, &local[(k + 2) % 3].0);
                    edge_value(a[0], a[1], b[0], b[1])
                })
                .collect();
            let sum: f64 = w.iter().sum();
            if sum == 0.0 {
                return false;
            }
            (0..3).map(|k| w[k] * local[k].1).sum::<f64>() / sum
        };
        t_hit >= 0.0 && t_hit <= self.length
    }
}

/// `cross(b - a, q - a)` at `q = 0`.
fn edge_value(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    a0 * b1 - a1 * b0
}

/// Side of the origin, perturbed to `(ε, ε²)`, relative to the directed edge `a → b`.
fn edge_side(a0: f64, a1: f64, b0: f64, b1: f64) -> bool {
    let e0 = edge_value(a0, a1, b0, b1);
    if e0 != 0.0 {
        return e0 > 0.0;
    }
    let (u0, u1) = (b0 - a0, b1 - a1);
    if u1 != 0.0 {
        return -u1 > 0.0;
    }
    u0 > 0.0
}

fn decide(c0: usize, c1: usize) -> Option<Sideness> {
    (c0 % 2 == c1 % 2).then_some(if c0 % 2 == 1 { Sideness::In } else { Sideness::Out })
}

/// Full multi-ray protocol: OBB reject, two opposed rays along the minimum-variance axis,
/// then opposed ray pairs along the remaining axes.
pub fn classify_point<const D: usize>(
    p: &Point<D>,
    boundary: &BoundaryRep<D>,
    index: &ClassifierIndex<D>,
) -> Result<Sideness, GeometryError> {
    if !index.obb.contains(p) {
        return Ok(Sideness::Out);
    }
    let mut counts = Vec::with_capacity(2 * D);
    let primary = index.basis.ray_axis();
    let axes = std::iter::once(primary).chain((0..D).filter(|&k| k != primary));
    for (round, axis) in axes.enumerate() {
        let mut c = [0usize; 2];
        for (i, slot) in c.iter_mut().enumerate() {
            let start = generate_ray_start(p, i == 1, axis, &index.obb)?;
            let idx = (round == 0).then_some(index);
            let (side, n) = trace_ray(&start, p, boundary, idx);
            if side == Sideness::On {
                return Ok(Sideness::On);
            }
            if n == 0 {
                return Ok(Sideness::Out);
            }
            *slot = n;
            counts.push(n);
        }
        if let Some(s) = decide(c[0], c[1]) {
            return Ok(s);
        }
    }
    Err(GeometryError::Inconsistent { counts })
}

/// Single ray along −x from beyond the bounding box, scanned against every facet.
pub fn classify_brute_force<const D: usize>(p: &Point<D>, boundary: &BoundaryRep<D>) -> Sideness {
    let mut hi = f64::NEG_INFINITY;
    for v in boundary.vertices() {
        hi = hi.max(v[0]);
    }
    let mut start = *p;
    start[0] = hi.max(p[0]) + boundary.diameter() + 1.0;
    trace_ray(&start, p, boundary, None).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    fn square() -> BoundaryRep<2> {
        BoundaryRep::polygon(&[
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 1.0),
            Vector2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    fn aligned_index(b: &BoundaryRep<2>) -> ClassifierIndex<2> {
        let basis = PcaBasis::with_axes(Vector2::new(0.5, 0.5), [Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)]);
        build_classifier_index(basis, b).unwrap()
    }

    #[test]
    fn square_index_extent() {
        let b = square();
        let idx = aligned_index(&b);
        assert!((idx.l_max_projected - 1.0).abs() < 1e-15);
        assert!(idx.obb.axis_length(0) >= 1.0 && idx.obb.axis_length(1) >= 1.0);
        let pca = build_classifier_index(super::super::compute_boundary_pca(&b.used_vertices()).unwrap(), &b).unwrap();
        assert!(pca.obb.axis_length(0) >= 1.0 && pca.obb.axis_length(1) >= 1.0);
    }

    #[test]
    fn ray_start_offsets() {
        let obb = Obb {
            origin: Vector2::zeros(),
            axes: [Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)],
            min: [-1.0, -1.0],
            max: [1.0, 1.0],
        };
        let p = Vector2::new(0.3, 0.0);
        let s = generate_ray_start(&p, false, 1, &obb).unwrap();
        assert!((s - Vector2::new(0.3, 1.0 + 2.2)).norm() < 1e-15);
        let s = generate_ray_start(&p, true, 1, &obb).unwrap();
        assert!((s - Vector2::new(0.3, -1.0 - 2.2)).norm() < 1e-15);
        let flat = Obb { max: [1.0, -1.0], ..obb };
        assert!(generate_ray_start(&p, false, 1, &flat).is_err());
    }

    #[test]
    fn fast_reject_cases() {
        let o = Vector2::new(0.0, 0.0);
        let d = Vector2::new(10.0, 0.0);
        assert!(!ray_region_fast_reject(&o, &d, &Vector2::new(5.0, 0.0), 0.5));
        assert!(ray_region_fast_reject(&o, &d, &Vector2::new(5.0, 1.0), 0.5));
        let oblique = Vector2::new(10.0, 10.0);
        assert!(ray_region_fast_reject(&o, &oblique, &Vector2::new(5.0, 5.0 + 2.0 * 0.5 * 2f64.sqrt()), 0.5));
    }

    #[test]
    fn trace_ray_parity() {
        let b = square();
        let (s, n) = trace_ray(&Vector2::new(-1.0, 0.5), &Vector2::new(0.5, 0.5), &b, None);
        assert_eq!((s, n), (Sideness::In, 1));
        let (s, n) = trace_ray(&Vector2::new(-1.0, 0.5), &Vector2::new(2.0, 0.5), &b, None);
        assert_eq!((s, n), (Sideness::Out, 2));
        let (s, _) = trace_ray(&Vector2::new(-1.0, 0.5), &Vector2::new(1.0, 0.5), &b, None);
        assert_eq!(s, Sideness::On);
    }

    #[test]
    fn ray_through_vertex_counts_once() {
        let b = square();
        // The ray y = 0 passes exactly through two corners; the point sits on the edge.
        let (_, n) = trace_ray(&Vector2::new(-1.0, 1.0), &Vector2::new(2.0, 1.0), &b, None);
        assert_eq!(n % 2, 0);
        let diamond = BoundaryRep::polygon(&[
            Vector2::new(0.0, -1.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(0.0, 1.0),
            Vector2::new(-1.0, 0.0),
        ])
        .unwrap();
        let (s, n) = trace_ray(&Vector2::new(-3.0, 0.0), &Vector2::new(0.2, 0.0), &diamond, None);
        assert_eq!((s, n), (Sideness::In, 1));
        let (s, _) = trace_ray(&Vector2::new(-3.0, 0.0), &Vector2::new(3.0, 0.0), &diamond, None);
        assert_eq!(s, Sideness::Out);
    }

    #[test]
    fn classify_square_points() {
        let b = square();
        let idx = aligned_index(&b);
        assert_eq!(classify_point(&Vector2::new(0.5, 0.5), &b, &idx).unwrap(), Sideness::In);
        assert_eq!(classify_point(&Vector2::new(5.0, 0.5), &b, &idx).unwrap(), Sideness::Out);
        assert_eq!(classify_point(&Vector2::new(1.0, 0.5), &b, &idx).unwrap(), Sideness::On);
        assert_eq!(classify_brute_force(&Vector2::new(0.5, 0.5), &b), Sideness::In);
        assert_eq!(classify_brute_force(&Vector2::new(0.5, 1.5), &b), Sideness::Out);
    }
}
