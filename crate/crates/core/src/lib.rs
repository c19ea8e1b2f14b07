//! Mass-minimizing circle-valued sections of circle bundles over triangulated
//! surfaces.
//!
//! A bundle is a [`SurfaceMesh`] together with a discrete [`Connection`]; a
//! section assigns a fiber angle to every vertex. The crate evaluates the
//! volume of a section's graph and its horizontally stretched variants,
//! computes singularity indices, and searches for low-volume sections whose
//! singularities all have index ±2.

pub mod bundle;
pub mod distance;
pub mod energy;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod oracle;
pub mod refine;
pub mod section;
pub mod solver;

pub use bundle::{euler_number, levi_civita_connection, make_connection, Connection};
pub use energy::{EnergyModel, EnergyReport, Functional};
pub use error::{Error, Result};
pub use mesh::{load_mesh, make_disk, make_flat_torus, make_icosphere, DiskMesh, SurfaceMesh};
pub use section::{DiscreteSection, SingularityRecord};
pub use solver::{HConeReport, SolverParams, TopologyReport};

use std::f64::consts::{PI, TAU};

/// Folds an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut r = (x + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r += TAU;
    }
    r
}

/// Pairwise (tree) summation in index order; the result does not depend on
/// anything but the input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        n if n <= 16 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
