//! Plane-strain elasticity and traction-separation laws.

mod tsl;

pub use tsl::{cohesive_traction, commit_state, rotate_jump_to_local, stored_energy, CohesiveResponse, CohesiveState, TslModel};

use crate::Vec2;
use nalgebra::{Matrix2, Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConstitutiveError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite input to {0}")]
    Numerical(&'static str),
}

/// Isotropic linear elastic material under plane strain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticMaterial {
    pub e: f64,
    pub nu: f64,
}

impl ElasticMaterial {
    pub fn new(e: f64, nu: f64) -> Result<Self, ConstitutiveError> {
        if !(e > 0.0) || !(nu > -1.0 && nu < 0.5) {
            return Err(ConstitutiveError::InvalidParameter(format!("E = {e}, nu = {nu}")));
        }
        Ok(Self { e, nu })
    }

    /// Voigt stiffness for `[εxx, εyy, γxy]`.
    pub fn d_matrix(&self) -> Matrix3<f64> {
        let (e, nu) = (self.e, self.nu);
        let c = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
        Matrix3::new(
            c * (1.0 - nu),
            c * nu,
            0.0,
            c * nu,
            c * (1.0 - nu),
            0.0,
            0.0,
            0.0,
            c * (1.0 - 2.0 * nu) / 2.0,
        )
    }

    /// Out-of-plane stress implied by the plane-strain constraint.
    pub fn sigma_zz(&self, stress: &Matrix2<f64>) -> f64 {
        self.nu * (stress[(0, 0)] + stress[(1, 1)])
    }

    pub fn von_mises(&self, stress: &Matrix2<f64>) -> f64 {
        let (sx, sy, txy) = (stress[(0, 0)], stress[(1, 1)], stress[(0, 1)]);
        let sz = self.sigma_zz(stress);
        (0.5 * ((sx - sy).powi(2) + (sy - sz).powi(2) + (sz - sx).powi(2)) + 3.0 * txy * txy).sqrt()
    }
}

/// Plane-strain Hooke's law; returns the stress tensor and the constant Voigt tangent.
pub fn bulk_stress(mat: &ElasticMaterial, strain: &Matrix2<f64>) -> (Matrix2<f64>, Matrix3<f64>) {
    let d = mat.d_matrix();
    let s = d * Vector3::new(strain[(0, 0)], strain[(1, 1)], strain[(0, 1)] + strain[(1, 0)]);
    (Matrix2::new(s[0], s[2], s[2], s[1]), d)
}

/// Small-strain tensor from a displacement gradient.
pub fn strain_from_gradient(grad_u: &Matrix2<f64>) -> Matrix2<f64> {
    0.5 * (grad_u + grad_u.transpose())
}

/// Traction `σ v` for a stress tensor.
pub fn traction(stress: &Matrix2<f64>, v: &Vec2) -> Vec2 {
    stress * v
}
