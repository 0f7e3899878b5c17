//! Reference geometries: circle, NACA 0012 airfoil, a five-grain polygonal RVE, a cube.

use crate::Vec2;
use nalgebra::Vector3;

/// Regular `n`-gon inscribed in a circle of radius `r` about the origin, counter-clockwise.
pub fn circle(n: usize, r: f64) -> Vec<Vec2> {
    (0..n)
        .map(|i| {
            let t = i as f64 * std::f64::consts::TAU / n as f64;
            Vec2::new(r * t.cos(), r * t.sin())
        })
        .collect()
}

/// NACA 0012 section with unit chord and closed trailing edge, `n` segments, counter-clockwise.
///
/// `n` must be even; stations use cosine spacing.
pub fn naca0012(n: usize) -> Vec<Vec2> {
    let half = n / 2;
    let thickness = |x: f64| {
        0.6 * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x.powi(3) - 0.1036 * x.powi(4))
    };
    let station = |i: usize| 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / half as f64).cos());
    let mut pts = Vec::with_capacity(n);
    // trailing edge → leading edge along the upper surface, then back along the lower one
    for i in (0..=half).rev() {
        let x = station(i);
        pts.push(Vec2::new(x, thickness(x)));
    }
    for i in 1..half {
        let x = station(i);
        pts.push(Vec2::new(x, -thickness(x)));
    }
    pts
}

/// Rotate points about `center` by `angle` radians.
pub fn rotate(pts: &[Vec2], center: Vec2, angle: f64) -> Vec<Vec2> {
    let (s, c) = angle.sin_cos();
    pts.iter()
        .map(|p| {
            let d = p - center;
            center + Vec2::new(c * d.x - s * d.y, s * d.x + c * d.y)
        })
        .collect()
}

/// Five convex grains tiling the unit square, as `(id, counter-clockwise polygon)`.
///
/// Four outer grains surround a central quadrilateral; junction vertices are shared exactly.
pub fn five_grain_rve() -> Vec<(u32, Vec<Vec2>)> {
    let v = |x: f64, y: f64| Vec2::new(x, y);
    let j1 = v(0.37, 0.41);
    let j2 = v(0.62, 0.33);
    let j3 = v(0.71, 0.64);
    let j4 = v(0.40, 0.72);
    vec![
        (1, vec![v(0.0, 0.0), v(0.55, 0.0), j2, j1, v(0.0, 0.45)]),
        (2, vec![v(0.55, 0.0), v(1.0, 0.0), v(1.0, 0.58), j3, j2]),
        (3, vec![j3, v(1.0, 0.58), v(1.0, 1.0), v(0.45, 1.0), j4]),
        (4, vec![v(0.0, 0.45), j1, j4, v(0.45, 1.0), v(0.0, 1.0)]),
        (5, vec![j1, j2, j3, j4]),
    ]
}

/// Closed triangulated surface of the axis-aligned cube `[0,1]^3`, outward oriented.
pub fn unit_cube() -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let v: Vec<Vector3<f64>> = (0..8)
        .map(|i| Vector3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let quads = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let mut f = Vec::new();
    for q in quads {
        f.push([q[0], q[1], q[2]]);
        f.push([q[0], q[2], q[3]]);
    }
    (v, f)
}
