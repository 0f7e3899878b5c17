//! Linear triangle/quadrilateral kernels: shape functions, quadrature, inverse mapping.

use crate::Vec2;
use nalgebra::Matrix2;

/// Supported element kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Tri3,
    Quad4,
}

/// A quadrature point in reference coordinates with its reference weight.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub xi: Vec2,
    pub weight: f64,
}

const TRI3_RULE: [(f64, f64, f64); 3] = [
    (1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0),
    (2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0),
    (1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0),
];

/// Two-point Gauss rule on the unit interval `[0, 1]` as `(s, weight)`.
pub fn line_rule() -> [(f64, f64); 2] {
    let g = 0.5 / 3f64.sqrt();
    [(0.5 - g, 0.5), (0.5 + g, 0.5)]
}

impl ElementKind {
    pub fn node_count(self) -> usize {
        match self {
            ElementKind::Tri3 => 3,
            ElementKind::Quad4 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Tri3 => "tri3",
            ElementKind::Quad4 => "quad4",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tri3" => Some(ElementKind::Tri3),
            "quad4" => Some(ElementKind::Quad4),
            _ => None,
        }
    }

    /// Reference coordinates of the element nodes.
    pub fn reference_node(self, a: usize) -> Vec2 {
        match self {
            ElementKind::Tri3 => [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)][a],
            ElementKind::Quad4 => [
                Vec2::new(-1.0, -1.0),
                Vec2::new(1.0, -1.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(-1.0, 1.0),
            ][a],
        }
    }

    /// Shape function values; entries past `node_count` are zero.
    pub fn shape(self, xi: Vec2) -> [f64; 4] {
        match self {
            ElementKind::Tri3 => [1.0 - xi.x - xi.y, xi.x, xi.y, 0.0],
            ElementKind::Quad4 => {
                let (x, y) = (xi.x, xi.y);
                [
                    0.25 * (1.0 - x) * (1.0 - y),
                    0.25 * (1.0 + x) * (1.0 - y),
                    0.25 * (1.0 + x) * (1.0 + y),
                    0.25 * (1.0 - x) * (1.0 + y),
                ]
            }
        }
    }

    /// Shape function gradients with respect to reference coordinates.
    pub fn shape_grad_ref(self, xi: Vec2) -> [Vec2; 4] {
        match self {
            ElementKind::Tri3 => [Vec2::new(-1.0, -1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::zeros()],
            ElementKind::Quad4 => {
                let (x, y) = (xi.x, xi.y);
                [
                    Vec2::new(-0.25 * (1.0 - y), -0.25 * (1.0 - x)),
                    Vec2::new(0.25 * (1.0 - y), -0.25 * (1.0 + x)),
                    Vec2::new(0.25 * (1.0 + y), 0.25 * (1.0 + x)),
                    Vec2::new(-0.25 * (1.0 + y), 0.25 * (1.0 - x)),
                ]
            }
        }
    }

    /// Reference point on local edge `k` (from node `k` to node `k+1`) at parameter `s ∈ [0,1]`.
    pub fn edge_point(self, k: usize, s: f64) -> Vec2 {
        let n = self.node_count();
        let a = self.reference_node(k);
        let b = self.reference_node((k + 1) % n);
        a + (b - a) * s
    }

    /// Bulk rule used for assembly: 3-point for triangles, 2×2 Gauss for quads.
    pub fn bulk_rule(self) -> Vec<QuadPoint> {
        match self {
            ElementKind::Tri3 => TRI3_RULE
                .iter()
                .map(|&(x, y, w)| QuadPoint { xi: Vec2::new(x, y), weight: w })
                .collect(),
            ElementKind::Quad4 => gauss_tensor(&[(-1.0 / 3f64.sqrt(), 1.0), (1.0 / 3f64.sqrt(), 1.0)]),
        }
    }

    /// Higher-order rule used for error norms: 6-point triangle, 3×3 Gauss quad.
    pub fn error_rule(self) -> Vec<QuadPoint> {
        match self {
            ElementKind::Tri3 => {
                let (a, wa) = (0.445_948_490_915_965, 0.223_381_589_678_011 / 2.0);
                let (b, wb) = (0.091_576_213_509_771, 0.109_951_743_655_322 / 2.0);
                [
                    (a, a, wa),
                    (1.0 - 2.0 * a, a, wa),
                    (a, 1.0 - 2.0 * a, wa),
                    (b, b, wb),
                    (1.0 - 2.0 * b, b, wb),
                    (b, 1.0 - 2.0 * b, wb),
                ]
                .iter()
                .map(|&(x, y, w)| QuadPoint { xi: Vec2::new(x, y), weight: w })
                .collect()
            }
            ElementKind::Quad4 => {
                let g = (0.6f64).sqrt();
                gauss_tensor(&[(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)])
            }
        }
    }

    /// Whether reference point `xi` lies in the reference element, with slack `tol`.
    pub fn contains_ref(self, xi: Vec2, tol: f64) -> bool {
        match self {
            ElementKind::Tri3 => xi.x >= -tol && xi.y >= -tol && xi.x + xi.y <= 1.0 + tol,
            ElementKind::Quad4 => xi.x.abs() <= 1.0 + tol && xi.y.abs() <= 1.0 + tol,
        }
    }
}

fn gauss_tensor(rule: &[(f64, f64)]) -> Vec<QuadPoint> {
    let mut out = Vec::with_capacity(rule.len() * rule.len());
    for &(y, wy) in rule {
        for &(x, wx) in rule {
            out.push(QuadPoint { xi: Vec2::new(x, y), weight: wx * wy });
        }
    }
    out
}

/// Shape data of one element at one reference point.
#[derive(Debug, Clone, Copy)]
pub struct ShapeEval {
    pub n: [f64; 4],
    /// Physical gradients.
    pub grad: [Vec2; 4],
    pub det_j: f64,
    pub x: Vec2,
    pub count: usize,
}

/// Evaluate shape functions, physical gradients and the Jacobian determinant.
pub fn eval(kind: ElementKind, coords: &[Vec2], xi: Vec2) -> ShapeEval {
    let count = kind.node_count();
    let n = kind.shape(xi);
    let dref = kind.shape_grad_ref(xi);
    let mut jac = Matrix2::zeros();
    let mut x = Vec2::zeros();
    for a in 0..count {
        x += coords[a] * n[a];
        jac += coords[a] * dref[a].transpose();
    }
    let det_j = jac.determinant();
    let inv_t = jac.try_inverse().map(|m| m.transpose()).unwrap_or_else(Matrix2::zeros);
    let mut grad = [Vec2::zeros(); 4];
    for a in 0..count {
        grad[a] = inv_t * dref[a];
    }
    ShapeEval { n, grad, det_j, x, count }
}

/// Map reference coordinates to physical coordinates.
pub fn map_point(kind: ElementKind, coords: &[Vec2], xi: Vec2) -> Vec2 {
    let n = kind.shape(xi);
    (0..kind.node_count()).fold(Vec2::zeros(), |acc, a| acc + coords[a] * n[a])
}

/// Invert the isoparametric map. Triangles are solved directly; quads by Newton.
pub fn inverse_map(kind: ElementKind, coords: &[Vec2], x: Vec2) -> Option<Vec2> {
    match kind {
        ElementKind::Tri3 => {
            let m = Matrix2::from_columns(&[coords[1] - coords[0], coords[2] - coords[0]]);
            m.try_inverse().map(|inv| inv * (x - coords[0]))
        }
        ElementKind::Quad4 => {
            let mut xi = Vec2::zeros();
            for _ in 0..50 {
                let e = eval(kind, coords, xi);
                let r = e.x - x;
                let dref = kind.shape_grad_ref(xi);
                let mut jac = Matrix2::zeros();
                for a in 0..4 {
                    jac += coords[a] * dref[a].transpose();
                }
                let step = jac.try_inverse()? * r;
                xi -= step;
                if step.norm() < 1e-14 {
                    return Some(xi);
                }
            }
            xi.iter().all(|v| v.is_finite()).then_some(xi)
        }
    }
}

/// Signed area of a polygon (positive when counter-clockwise).
pub fn polygon_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        a += p.x * q.y - p.y * q.x;
    }
    0.5 * a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_quad() -> Vec<Vec2> {
        vec![Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(2.5, 1.5), Vec2::new(0.0, 1.0)]
    }

    #[test]
    fn partition_of_unity_and_gradients_sum_to_zero() {
        for kind in [ElementKind::Tri3, ElementKind::Quad4] {
            let xi = Vec2::new(0.2, 0.3);
            let n = kind.shape(xi);
            assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let g: Vec2 = kind.shape_grad_ref(xi).iter().sum();
            assert!(g.norm() < 1e-15);
        }
    }

    #[test]
    fn quadrature_integrates_area() {
        let q = unit_quad();
        let area: f64 = ElementKind::Quad4
            .bulk_rule()
            .iter()
            .map(|p| p.weight * eval(ElementKind::Quad4, &q, p.xi).det_j)
            .sum();
        assert!((area - polygon_area(&q)).abs() < 1e-13);
        let t = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        for rule in [ElementKind::Tri3.bulk_rule(), ElementKind::Tri3.error_rule()] {
            let a: f64 = rule.iter().map(|p| p.weight * eval(ElementKind::Tri3, &t, p.xi).det_j).sum();
            assert!((a - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn error_rule_is_exact_for_quartic_on_reference_triangle() {
        // ∫ x^4 (1 - x) dx over [0, 1]
        let s: f64 = ElementKind::Tri3.error_rule().iter().map(|p| p.weight * p.xi.x.powi(4)).sum();
        assert!((s - 1.0 / 30.0).abs() < 1e-10);
    }

    #[test]
    fn inverse_map_round_trips() {
        let q = unit_quad();
        let xi = Vec2::new(0.3, -0.7);
        let x = map_point(ElementKind::Quad4, &q, xi);
        let back = inverse_map(ElementKind::Quad4, &q, x).unwrap();
        assert!((back - xi).norm() < 1e-12);
    }

    #[test]
    fn edge_points_follow_node_order() {
        assert_eq!(ElementKind::Quad4.edge_point(1, 0.0), Vec2::new(1.0, -1.0));
        assert_eq!(ElementKind::Tri3.edge_point(2, 1.0), Vec2::new(0.0, 0.0));
    }
}
