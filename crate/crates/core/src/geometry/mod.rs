//! IN/OUT/ON classification of points against watertight boundaries.
//!
//! The accelerated classifier projects facet centroids onto the plane orthogonal to the
//! minimum-variance PCA axis and shoots rays along that axis, so only facets near the
//! ray's footprint are tested. [`classify_brute_force`] scans every facet and is the oracle.

mod bench;
mod classify;
mod io;

pub use bench::{airfoil_query_bounds, benchmark_classification, query_grid, rotation_study, BenchRow, RotationRow};
pub use classify::{
    build_classifier_index, classify_brute_force, classify_point, collect_candidates, generate_ray_start,
    ray_region_fast_reject, trace_ray, ClassifierIndex, Obb,
};
pub use io::{read_boundary, write_boundary, AnyBoundary};

use nalgebra::{DMatrix, SVector};
use thiserror::Error;

pub type Point<const D: usize> = SVector<f64, D>;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("invalid boundary: {0}")]
    Invalid(String),
    #[error("inconsistent ray results, counts {counts:?}")]
    Inconsistent { counts: Vec<usize> },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Result of classifying a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sideness {
    In,
    Out,
    On,
}

impl Sideness {
    pub fn as_str(self) -> &'static str {
        match self {
            Sideness::In => "IN",
            Sideness::Out => "OUT",
            Sideness::On => "ON",
        }
    }
}

/// Closed boundary made of segments (`D = 2`) or triangles (`D = 3`).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRep<const D: usize> {
    vertices: Vec<Point<D>>,
    facets: Vec<[usize; D]>,
    diameter: f64,
}

impl<const D: usize> BoundaryRep<D> {
    /// Validate and build. Facets must be non-degenerate and the surface watertight.
    pub fn new(vertices: Vec<Point<D>>, facets: Vec<[usize; D]>) -> Result<Self, GeometryError> {
        if D != 2 && D != 3 {
            return Err(GeometryError::Invalid(format!("unsupported dimension {D}")));
        }
        if facets.is_empty() {
            return Err(GeometryError::Invalid("no facets".into()));
        }
        for (i, f) in facets.iter().enumerate() {
            if f.iter().any(|&v| v >= vertices.len()) {
                return Err(GeometryError::Invalid(format!("facet {i} references a missing vertex")));
            }
            let size = facet_measure(&vertices, f);
            if !(size > 0.0) {
                return Err(GeometryError::Invalid(format!("facet {i} has zero size")));
            }
        }
        check_watertight::<D>(vertices.len(), &facets)?;
        let mut lo = Point::<D>::repeat(f64::INFINITY);
        let mut hi = Point::<D>::repeat(f64::NEG_INFINITY);
        for f in &facets {
            for &v in f {
                lo = lo.inf(&vertices[v]);
                hi = hi.sup(&vertices[v]);
            }
        }
        let diameter = (hi - lo).norm();
        Ok(Self { vertices, facets, diameter })
    }

    pub fn vertices(&self) -> &[Point<D>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[[usize; D]] {
        &self.facets
    }

    /// Diagonal of the axis-aligned bounding box of the facets.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn facet_points(&self, f: usize) -> [Point<D>; D] {
        self.facets[f].map(|v| self.vertices[v])
    }

    pub fn facet_centroid(&self, f: usize) -> Point<D> {
        self.facet_points(f).iter().sum::<Point<D>>() / D as f64
    }

    /// Points used for PCA: the vertices referenced by at least one facet.
    pub fn used_vertices(&self) -> Vec<Point<D>> {
        let mut used = vec![false; self.vertices.len()];
        for f in &self.facets {
            for &v in f {
                used[v] = true;
            }
        }
        self.vertices.iter().zip(used).filter(|(_, u)| *u).map(|(p, _)| *p).collect()
    }

    /// Unsigned distance from `p` to facet `f`.
    pub fn distance_to_facet(&self, p: &Point<D>, f: usize) -> f64 {
        let pts = self.facet_points(f);
        if D == 2 {
            point_segment_distance(p, &pts[0], &pts[1])
        } else {
            point_triangle_distance(p, &pts[0], &pts[1], &pts[2])
        }
    }
}

impl BoundaryRep<2> {
    /// Closed polygon loops; each loop's last vertex connects back to its first.
    pub fn from_loops(loops: &[Vec<Point<2>>]) -> Result<Self, GeometryError> {
        let mut vertices = Vec::new();
        let mut facets = Vec::new();
        for lp in loops {
            if lp.len() < 3 {
                return Err(GeometryError::Invalid("polygon loop needs at least 3 vertices".into()));
            }
            let base = vertices.len();
            vertices.extend_from_slice(lp);
            for i in 0..lp.len() {
                facets.push([base + i, base + (i + 1) % lp.len()]);
            }
        }
        Self::new(vertices, facets)
    }

    pub fn polygon(pts: &[Point<2>]) -> Result<Self, GeometryError> {
        Self::from_loops(&[pts.to_vec()])
    }

    /// Outward normal of segment `f` for a counter-clockwise loop.
    pub fn segment_normal(&self, f: usize) -> Point<2> {
        let [a, b] = self.facet_points(f);
        let t = (b - a).normalize();
        Point::<2>::new(t.y, -t.x)
    }
}

fn facet_measure<const D: usize>(vertices: &[Point<D>], f: &[usize; D]) -> f64 {
    if D == 2 {
        (vertices[f[1]] - vertices[f[0]]).norm()
    } else {
        let a = vertices[f[1]] - vertices[f[0]];
        let b = vertices[f[2]] - vertices[f[0]];
        let c = nalgebra::Vector3::new(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]);
        0.5 * c.norm()
    }
}

fn check_watertight<const D: usize>(n: usize, facets: &[[usize; D]]) -> Result<(), GeometryError> {
    if D == 2 {
        let mut degree = vec![0usize; n];
        for f in facets {
            degree[f[0]] += 1;
            degree[f[1]] += 1;
        }
        if let Some(v) = degree.iter().position(|d| d % 2 == 1) {
            return Err(GeometryError::Invalid(format!("vertex {v} has odd segment degree; boundary not closed")));
        }
    } else {
        let mut edges = std::collections::HashMap::new();
        for f in facets {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0usize) += 1;
            }
        }
        if let Some((e, c)) = edges.iter().find(|(_, &c)| c != 2) {
            return Err(GeometryError::Invalid(format!("edge {e:?} shared by {c} triangles; surface not closed")));
        }
    }
    Ok(())
}

pub(crate) fn point_segment_distance<const D: usize>(p: &Point<D>, a: &Point<D>, b: &Point<D>) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn point_triangle_distance<const D: usize>(p: &Point<D>, a: &Point<D>, b: &Point<D>, c: &Point<D>) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let (d00, d01, d11) = (ab.dot(&ab), ab.dot(&ac), ac.dot(&ac));
    let (d20, d21) = (ap.dot(&ab), ap.dot(&ac));
    let denom = d00 * d11 - d01 * d01;
    let v = (d11 * d20 - d01 * d21) / denom;
    let w = (d00 * d21 - d01 * d20) / denom;
    if v >= 0.0 && w >= 0.0 && v + w <= 1.0 {
        return (p - (a + ab * v + ac * w)).norm();
    }
    point_segment_distance(p, a, b).min(point_segment_distance(p, b, c)).min(point_segment_distance(p, c, a))
}

/// Principal axes of a point cloud, ordered by descending variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis<const D: usize> {
    pub mean: Point<D>,
    pub axes: [Point<D>; D],
    pub singular_values: [f64; D],
}

impl<const D: usize> PcaBasis<D> {
    /// Basis with the given orthonormal axes, bypassing the decomposition.
    pub fn with_axes(mean: Point<D>, axes: [Point<D>; D]) -> Self {
        Self { mean, axes, singular_values: [0.0; D] }
    }

    /// Index of the minimum-variance axis, used for the primary rays.
    pub fn ray_axis(&self) -> usize {
        D - 1
    }
}

/// Mean-centered SVD of the point cloud.
pub fn compute_boundary_pca<const D: usize>(points: &[Point<D>]) -> Result<PcaBasis<D>, GeometryError> {
    if points.len() < D + 1 {
        return Err(GeometryError::Degenerate(format!("need at least {} points, got {}", D + 1, points.len())));
    }
    let mean = points.iter().sum::<Point<D>>() / points.len() as f64;
    let x = DMatrix::from_fn(points.len(), D, |i, j| points[i][j] - mean[j]);
    let scale = points.iter().map(|p| (p - mean).norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(GeometryError::Degenerate("all points coincide".into()));
    }
    let svd = x.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| GeometryError::Degenerate("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..D).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut axes = [Point::<D>::zeros(); D];
    let mut singular_values = [0.0; D];
    for (k, &i) in order.iter().enumerate() {
        let mut axis = Point::<D>::from_fn(|j, _| v_t[(i, j)]).normalize();
        let lead = (0..D).max_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs())).unwrap_or(0);
        if axis[lead] < 0.0 {
            axis = -axis;
        }
        axes[k] = axis;
        singular_values[k] = svd.singular_values[i];
    }
    Ok(PcaBasis { mean, axes, singular_values })
}
