//! Shifted cohesive zone method on non-interface-fitted meshes.
//!
//! The crate is split along the pipeline:
//!
//! - [`mesh`]: structured tri/quad meshes, facet topology, text IO
//! - [`geometry`]: PCA-accelerated IN/OUT/ON ray classification (2D and 3D)
//! - [`surrogate`]: dominant-volume grain assignment and surrogate interface data
//! - [`constitutive`]: plane-strain elasticity and traction-separation laws
//! - [`solver`]: shifted cohesive assembly, Newton, load stepping
//! - [`mms`]: manufactured solutions and convergence studies
//! - [`conformalize`]: interface-fitted remeshing and solution projection
//! - [`benchmarks`]: the single-interface problems used by the test suite and CLI

pub mod benchmarks;
pub mod conformalize;
pub mod constitutive;
pub mod fe;
pub mod geometry;
pub mod mesh;
pub mod mms;
pub mod shapes;
pub mod solver;
pub mod surrogate;

/// 2D point or vector.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Format a float with 17 significant digits, the precision used by every text output.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
