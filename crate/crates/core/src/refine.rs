//! Uniform sub-triangulation of a single face, used to integrate energies
//! across faces that carry a nonzero winding.
//!
//! Sub-vertex values on the face boundary interpolate the lifted corner values
//! linearly along each side. Interior values are the argument of the discrete
//! harmonic extension of `exp(i·u)` from the boundary, so the extension is
//! well defined for any winding.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::Vec2;

/// Geometry and harmonic-extension stencil of a face split into `n²` triangles.
#[derive(Debug, Clone)]
pub struct FaceRefinement {
    pub n: usize,
    pub points: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    pub sub_area: f64,
    pub gradients: Vec<[Vec2; 3]>,
    /// Boundary sub-vertices with the side they lie on (0: corner 0→1, 1: 1→2,
    /// 2: 2→0) and the parameter along that side.
    pub boundary: Vec<(usize, usize, f64)>,
    pub interior: Vec<usize>,
    /// `slot[p]` is the position of point `p` in `boundary` or `interior`.
    pub slot: Vec<Slot>,
    /// Harmonic extension: interior values `= h · boundary values`.
    pub extension: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Boundary(usize),
    Interior(usize),
}

pub(crate) fn hat_gradients(p: [Vec2; 3]) -> ([Vec2; 3], f64) {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let area2 = e1.x * e2.y - e1.y * e2.x;
    let rot = |v: Vec2| Vec2::new(-v.y, v.x);
    let g = [
        rot(p[2] - p[1]) / area2,
        rot(p[0] - p[2]) / area2,
        rot(p[1] - p[0]) / area2,
    ];
    (g, area2 / 2.0)
}

impl FaceRefinement {
    pub fn new(corners: [Vec2; 3], depth: u32) -> Result<Self> {
        if depth > 8 {
            return Err(Error::InvalidArgument(format!("refinement depth {depth} is too large")));
        }
        let n = 1usize << depth;
        let mut id = vec![vec![usize::MAX; n + 1]; n + 1];
        let mut points = Vec::new();
        let mut boundary = Vec::new();
        let mut interior = Vec::new();
        let mut slot = Vec::new();
        let nf = n as f64;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let p = corners[0] + (corners[1] - corners[0]) * (i as f64 / nf) + (corners[2] - corners[0]) * (j as f64 / nf);
                let pid = points.len();
                id[i][j] = pid;
                points.push(p);
                let side = if j == 0 && i < n {
                    Some((0, i as f64 / nf))
                } else if i + j == n && j < n {
                    Some((1, j as f64 / nf))
                } else if i == 0 {
                    Some((2, (n - j) as f64 / nf))
                } else {
                    None
                };
                match side {
                    Some((s, t)) => {
                        slot.push(Slot::Boundary(boundary.len()));
                        boundary.push((pid, s, t));
                    }
                    None => {
                        slot.push(Slot::Interior(interior.len()));
                        interior.push(pid);
                    }
                }
            }
        }
        let mut triangles = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..(n - i) {
                triangles.push([id[i][j], id[i + 1][j], id[i][j + 1]]);
                if i + j + 2 <= n {
                    triangles.push([id[i + 1][j], id[i + 1][j + 1], id[i][j + 1]]);
                }
            }
        }
        let mut gradients = Vec::with_capacity(triangles.len());
        let mut sub_area = 0.0;
        for t in &triangles {
            let (g, a) = hat_gradients([points[t[0]], points[t[1]], points[t[2]]]);
            if a <= 0.0 {
                return Err(Error::DegenerateFace(0));
            }
            sub_area = a;
            gradients.push(g);
        }

        let ni = interior.len();
        let nb = boundary.len();
        let mut kii = DMatrix::<f64>::zeros(ni, ni);
        let mut kib = DMatrix::<f64>::zeros(ni, nb);
        for (t, g) in triangles.iter().zip(&gradients) {
            for a in 0..3 {
                let Slot::Interior(ra) = slot[t[a]] else { continue };
                for b in 0..3 {
                    let w = sub_area * g[a].dot(&g[b]);
                    match slot[t[b]] {
                        Slot::Interior(rb) => kii[(ra, rb)] += w,
                        Slot::Boundary(rb) => kib[(ra, rb)] += w,
                    }
                }
            }
        }
        let extension = if ni == 0 {
            DMatrix::zeros(0, nb)
        } else {
            let chol = kii
                .cholesky()
                .ok_or_else(|| Error::Inconsistent("refinement stiffness matrix is not positive definite".into()))?;
            -chol.solve(&kib)
        };
        Ok(FaceRefinement { n, points, triangles, sub_area, gradients, boundary, interior, slot, extension })
    }

    /// Lifted value at each boundary sub-vertex and its weights on the corner values.
    ///
    /// `u` are the lifted corner values and `winding` the face index; walking
    /// once around the boundary increases the lift by `2π·winding`.
    pub fn boundary_values(&self, u: [f64; 3], winding: i64) -> Vec<(f64, [f64; 3])> {
        let jump = std::f64::consts::TAU * winding as f64;
        self.boundary
            .iter()
            .map(|&(_, side, t)| match side {
                0 => ((1.0 - t) * u[0] + t * u[1], [1.0 - t, t, 0.0]),
                1 => ((1.0 - t) * u[1] + t * u[2], [0.0, 1.0 - t, t]),
                _ => ((1.0 - t) * u[2] + t * (u[0] + jump), [t, 0.0, 1.0 - t]),
            })
            .collect()
    }
}
