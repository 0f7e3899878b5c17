//! Runtime comparison of the PCA classifier against the brute-force scan.

use super::{
    build_classifier_index, classify_brute_force, classify_point, collect_candidates, compute_boundary_pca,
    BoundaryRep, ClassifierIndex, GeometryError, PcaBasis, Sideness,
};
use crate::{shapes, Vec2};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n_t: usize,
    pub runtime_pca: f64,
    pub runtime_brute: f64,
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationRow {
    pub angle_deg: f64,
    pub runtime_pca: f64,
    pub runtime_fixed: f64,
    pub speedup: f64,
    /// Facet candidates visited by the primary rays, PCA axis vs fixed axis.
    pub candidates_pca: usize,
    pub candidates_fixed: usize,
}

const RUNS: usize = 5;

fn time_avg<F: FnMut() -> Result<(), GeometryError>>(mut f: F) -> Result<f64, GeometryError> {
    let mut total = 0.0;
    for _ in 0..RUNS {
        let t0 = Instant::now();
        f()?;
        total += t0.elapsed().as_secs_f64();
    }
    Ok(total / RUNS as f64)
}

fn classify_all(points: &[Vec2], boundary: &BoundaryRep<2>, index: &ClassifierIndex<2>) -> Result<usize, GeometryError> {
    let mut inside = 0;
    for p in points {
        if classify_point(p, boundary, index)? == Sideness::In {
            inside += 1;
        }
    }
    Ok(inside)
}

/// Cell centres of an `n × n` grid over `bounds`, row by row.
pub fn query_grid(bounds: &crate::mesh::Bounds, n: usize) -> Vec<Vec2> {
    let (w, h) = (bounds.max.x - bounds.min.x, bounds.max.y - bounds.min.y);
    (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| bounds.min + Vec2::new((i as f64 + 0.5) / n as f64 * w, (j as f64 + 0.5) / n as f64 * h))
        .collect()
}

/// Padded bounding box of the benchmark airfoil.
pub fn airfoil_query_bounds() -> crate::mesh::Bounds {
    let b = crate::mesh::Bounds::of_points(&shapes::naca0012(100));
    let pad = 0.1 * b.diameter();
    crate::mesh::Bounds::new(b.min.x - pad, b.min.y - pad, b.max.x + pad, b.max.y + pad)
}

/// Airfoil boundaries of each size in `sizes`, classified at every query point.
///
/// PCA runtimes include the PCA, OBB and tree construction. Each runtime is a 5-run mean.
pub fn benchmark_classification(sizes: &[usize], queries: &[Vec2]) -> Result<Vec<BenchRow>, GeometryError> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &n_t in sizes {
        let boundary = BoundaryRep::polygon(&shapes::naca0012(n_t))?;
        let mut inside_pca = 0;
        let runtime_pca = time_avg(|| {
            let basis = compute_boundary_pca(&boundary.used_vertices())?;
            let index = build_classifier_index(basis, &boundary)?;
            inside_pca = classify_all(queries, &boundary, &index)?;
            Ok(())
        })?;
        let mut inside_brute = 0;
        let runtime_brute = time_avg(|| {
            inside_brute = queries.iter().filter(|p| classify_brute_force(*p, &boundary) == Sideness::In).count();
            Ok(())
        })?;
        if inside_pca != inside_brute {
            log::warn!("N_T={n_t}: PCA found {inside_pca} inside points, brute force {inside_brute}");
        }
        rows.push(BenchRow { n_t, runtime_pca, runtime_brute, speedup: runtime_brute / runtime_pca });
    }
    Ok(rows)
}

/// Rotated airfoil: PCA-aligned rays vs rays fixed along the global y axis.
pub fn rotation_study(angles_deg: &[f64], n_t: usize, queries: &[Vec2]) -> Result<Vec<RotationRow>, GeometryError> {
    let base = shapes::naca0012(n_t);
    let mut rows = Vec::with_capacity(angles_deg.len());
    for &angle_deg in angles_deg {
        let pts = shapes::rotate(&base, Vec2::new(0.5, 0.0), angle_deg.to_radians());
        let boundary = BoundaryRep::polygon(&pts)?;
        let fixed_basis = |b: &BoundaryRep<2>| {
            let v = b.used_vertices();
            let mean = v.iter().sum::<Vec2>() / v.len() as f64;
            PcaBasis::with_axes(mean, [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)])
        };
        let runtime_pca = time_avg(|| {
            let index = build_classifier_index(compute_boundary_pca(&boundary.used_vertices())?, &boundary)?;
            classify_all(queries, &boundary, &index).map(|_| ())
        })?;
        let runtime_fixed = time_avg(|| {
            let index = build_classifier_index(fixed_basis(&boundary), &boundary)?;
            classify_all(queries, &boundary, &index).map(|_| ())
        })?;
        let count = |index: &ClassifierIndex<2>| {
            queries
                .iter()
                .filter(|p| index.obb.contains(p))
                .map(|p| collect_candidates(p, index).len())
                .sum::<usize>()
        };
        let candidates_pca = count(&build_classifier_index(compute_boundary_pca(&boundary.used_vertices())?, &boundary)?);
        let candidates_fixed = count(&build_classifier_index(fixed_basis(&boundary), &boundary)?);
        rows.push(RotationRow {
            angle_deg,
            runtime_pca,
            runtime_fixed,
            speedup: runtime_fixed / runtime_pca,
            candidates_pca,
            candidates_fixed,
        });
    }
    Ok(rows)
}
