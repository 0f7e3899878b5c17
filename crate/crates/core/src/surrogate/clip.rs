//! Polygon clipping and triangulation.

use crate::fe::polygon_area;
use crate::Vec2;

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Sutherland–Hodgman: clip `subject` against the convex counter-clockwise polygon `window`.
pub fn clip_convex(subject: &[Vec2], window: &[Vec2]) -> Vec<Vec2> {
    let mut out = subject.to_vec();
    for i in 0..window.len() {
        if out.is_empty() {
            break;
        }
        let a = window[i];
        let b = window[(i + 1) % window.len()];
        out = clip_half_plane(&out, a, b);
    }
    out
}

/// Keep the part of `poly` on the left of the directed line `a → b`.
pub fn clip_half_plane(poly: &[Vec2], a: Vec2, b: Vec2) -> Vec<Vec2> {
    let dir = b - a;
    let side = |p: Vec2| cross(dir, p - a);
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let s = poly[i];
        let e = poly[(i + 1) % poly.len()];
        let (fs, fe) = (side(s), side(e));
        if fs >= 0.0 {
            out.push(s);
        }
        if (fs >= 0.0) != (fe >= 0.0) {
            let t = fs / (fs - fe);
            out.push(s + (e - s) * t);
        }
    }
    out
}

/// Remove consecutive duplicates (within `tol`) and vertices collinear with their neighbours
/// only when `drop_collinear` is set.
pub fn clean_polygon(poly: &[Vec2], tol: f64) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = Vec::with_capacity(poly.len());
    for &p in poly {
        if out.last().is_none_or(|q| (p - q).norm() > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= tol {
        out.pop();
    }
    out
}

/// True when the closed polygon is convex and counter-clockwise with positive area.
pub fn is_convex_ccw(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 || !(polygon_area(poly) > 0.0) {
        return false;
    }
    (0..n).all(|i| cross(poly[(i + 1) % n] - poly[i], poly[(i + 2) % n] - poly[(i + 1) % n]) >= 0.0)
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// No two non-adjacent edges properly intersect and no vertex repeats.
pub fn is_simple(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            if poly[i] == poly[j] {
                return false;
            }
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn point_in_triangle(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> bool {
    cross(b - a, p - a) >= 0.0 && cross(c - b, p - b) >= 0.0 && cross(a - c, p - c) >= 0.0
}

/// Ear-clipping triangulation of a simple counter-clockwise polygon.
///
/// Ears are searched from the lowest remaining index, so a convex polygon without collinear
/// vertices is fanned from vertex 0. Zero-area ears are never cut, which keeps vertices that
/// lie on an edge of the polygon as triangle corners.
pub fn triangulate(poly: &[Vec2]) -> Vec<[usize; 3]> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut tris = Vec::with_capacity(poly.len().saturating_sub(2));
    let scale = poly.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1.0);
    let eps = 1e-14 * scale * scale;
    while idx.len() > 3 {
        let m = idx.len();
        let mut cut = None;
        for k in 1..=m {
            let (i0, i1, i2) = (idx[(k - 1) % m], idx[k % m], idx[(k + 1) % m]);
            let (a, b, c) = (poly[i0], poly[i1], poly[i2]);
            if cross(b - a, c - a) <= eps {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                j != i0 && j != i1 && j != i2 && point_in_triangle(poly[j], a, b, c) && poly[j] != a && poly[j] != c
            });
            if !blocked {
                cut = Some(k % m);
                break;
            }
        }
        match cut {
            Some(k) => {
                let m = idx.len();
                tris.push([idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]]);
                idx.remove(k);
            }
            None => break,
        }
    }
    if idx.len() == 3 {
        let (a, b, c) = (poly[idx[0]], poly[idx[1]], poly[idx[2]]);
        if cross(b - a, c - a) > eps {
            tris.push([idx[0], idx[1], idx[2]]);
        }
    }
    tris
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Vec<Vec2> {
        vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)]
    }

    #[test]
    fn half_plane_bisects_square() {
        let half = clip_half_plane(&unit(), Vec2::new(0.5, 1.0), Vec2::new(0.5, 0.0));
        assert!((polygon_area(&half) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn clip_against_itself_is_identity_area() {
        assert!((polygon_area(&clip_convex(&unit(), &unit())) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangulation_keeps_collinear_vertex() {
        let p = vec![Vec2::new(0.0, 0.0), Vec2::new(0.5, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)];
        let t = triangulate(&p);
        assert_eq!(t.len(), 3);
        let area: f64 = t.iter().map(|&[a, b, c]| polygon_area(&[p[a], p[b], p[c]])).sum();
        assert!((area - 1.0).abs() < 1e-15);
        assert!(t.iter().any(|tri| tri.contains(&1)));
    }

    #[test]
    fn convex_polygon_is_fanned_from_vertex_zero() {
        let t = triangulate(&unit());
        assert_eq!(t, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn nonconvex_polygon_triangulates() {
        let p = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(1.0, 0.5),
            Vec2::new(0.0, 2.0),
        ];
        let t = triangulate(&p);
        let area: f64 = t.iter().map(|&[a, b, c]| polygon_area(&[p[a], p[b], p[c]])).sum();
        assert!((area - polygon_area(&p)).abs() < 1e-14);
    }

    #[test]
    fn simplicity() {
        assert!(is_simple(&unit()));
        let bow = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        assert!(!is_simple(&bow));
    }
}
