//! Volume, twisting, and stretched-volume functionals of a section.
//!
//! On a face the covariant differences are shifted by a third of the face
//! curvature so that they sum to `2π·index`. Faces of index zero then carry a
//! single linear gradient `g`, and the face contributes `A·√(β² + c²|g|²)` with
//! `c = L/2π` and `β` set by the functional (1 for volume, `1/λ` for the
//! stretched volume, the smoothing `ε` for twisting). Faces with nonzero index
//! are integrated on a [`FaceRefinement`].

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bundle::Connection;
use crate::distance::{distance_field, SurfacePoint};
use crate::error::{Error, Result};
use crate::mesh::{SurfaceMesh, Vec2};
use crate::refine::{FaceRefinement, Slot};
use crate::section::{edge_differences, face_differences, DiscreteSection};
use crate::{pairwise_sum, wrap_angle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Functional {
    Volume,
    /// `∫ √(ε² + |∇u|²)`; `ε = 0` gives the twisting itself.
    Twisting { epsilon: f64 },
    Stretched { lambda: f64 },
}

impl Functional {
    fn beta(&self) -> Result<f64> {
        match *self {
            Functional::Volume => Ok(1.0),
            Functional::Twisting { epsilon } if epsilon >= 0.0 && epsilon.is_finite() => Ok(epsilon),
            Functional::Twisting { epsilon } => {
                Err(Error::InvalidArgument(format!("smoothing must be nonnegative, got {epsilon}")))
            }
            Functional::Stretched { lambda } if lambda >= 1.0 && lambda.is_finite() => Ok(1.0 / lambda),
            Functional::Stretched { lambda } => {
                Err(Error::InvalidArgument(format!("stretch factor must be at least 1, got {lambda}")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaValue {
    pub lambda: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub volume: f64,
    pub twisting: f64,
    pub lambda_table: Vec<LambdaValue>,
    pub singular_faces: usize,
    pub refinement_depth: u32,
    /// Per-face `‖∇u‖`; on faces with nonzero index, the area average over the refinement.
    #[serde(skip)]
    pub gradient_norms: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub t: f64,
    pub f: f64,
    pub ratio: f64,
}

/// Evaluates functionals with a fixed refinement depth on singular faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    depth: u32,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel { depth: 4 }
    }
}

/// Mass of the equal-area disk around a cone point of strength `k_abs` (already scaled by `c`).
fn cone_mass(beta: f64, k_abs: f64, area: f64) -> f64 {
    let rho = (area / PI).sqrt();
    if beta == 0.0 {
        return TAU * k_abs * rho;
    }
    PI * (rho * (beta * beta * rho * rho + k_abs * k_abs).sqrt() + k_abs * k_abs / beta * (beta * rho / k_abs).asinh())
}

fn linear_gradient(grads: &[Vec2; 3], d01: f64, d12: f64) -> Vec2 {
    grads[1] * d01 + grads[2] * (d01 + d12)
}

/// Energy of a refined face and its derivative with respect to the lifted corner values.
fn refined_energy(r: &FaceRefinement, u: [f64; 3], winding: i64, c: f64, beta: f64, want_grad: bool) -> (f64, [f64; 3], f64) {
    let bvals = r.boundary_values(u, winding);
    let nb = bvals.len();
    let cosb = DVector::from_iterator(nb, bvals.iter().map(|b| b.0.cos()));
    let sinb = DVector::from_iterator(nb, bvals.iter().map(|b| b.0.sin()));
    let xs = &r.extension * &cosb;
    let ys = &r.extension * &sinb;
    let values: Vec<f64> = (0..r.points.len())
        .map(|p| match r.slot[p] {
            Slot::Boundary(b) => bvals[b].0,
            Slot::Interior(i) => ys[i].atan2(xs[i]),
        })
        .collect();

    let c2 = c * c;
    let mut parts = Vec::with_capacity(r.triangles.len());
    let mut norm_parts = Vec::with_capacity(r.triangles.len());
    let mut dv = vec![0.0; if want_grad { r.points.len() } else { 0 }];
    for (t, g) in r.triangles.iter().zip(&r.gradients) {
        let (va, vb, vc) = (values[t[0]], values[t[1]], values[t[2]]);
        let d1 = wrap_angle(vb - va);
        let d2 = wrap_angle(vc - vb);
        let d3 = wrap_angle(va - vc);
        let ks = ((d1 + d2 + d3) / TAU).round() as i64;
        if ks == 0 {
            let grad = linear_gradient(g, d1, d2);
            let s = grad.norm_squared();
            let h = (beta * beta + c2 * s).sqrt();
            parts.push(r.sub_area * h);
            norm_parts.push(r.sub_area * s.sqrt());
            if want_grad && h > 0.0 {
                let coef = r.sub_area * c2 / h;
                for k in 0..3 {
                    dv[t[k]] += coef * grad.dot(&g[k]);
                }
            }
        } else {
            let k_abs = c * ks.unsigned_abs() as f64;
            parts.push(cone_mass(beta, k_abs, r.sub_area));
            norm_parts.push(cone_mass(0.0, ks.unsigned_abs() as f64, r.sub_area));
        }
    }
    let value = pairwise_sum(&parts);
    let mean_norm = pairwise_sum(&norm_parts) / (r.sub_area * r.triangles.len() as f64);
    if !want_grad {
        return (value, [0.0; 3], mean_norm);
    }

    let ni = r.interior.len();
    let mut ax = DVector::zeros(ni);
    let mut ay = DVector::zeros(ni);
    for (i, &p) in r.interior.iter().enumerate() {
        let r2 = xs[i] * xs[i] + ys[i] * ys[i];
        if r2 > 1e-300 {
            ax[i] = dv[p] * xs[i] / r2;
            ay[i] = dv[p] * ys[i] / r2;
        }
    }
    let hx = r.extension.tr_mul(&ax);
    let hy = r.extension.tr_mul(&ay);
    let mut du = [0.0; 3];
    for (b, &(p, _, _)) in r.boundary.iter().enumerate() {
        let dw = dv[p] + cosb[b] * hx[b] + sinb[b] * hy[b];
        for k in 0..3 {
            du[k] += dw * bvals[b].1[k];
        }
    }
    (value, du, mean_norm)
}

/// Curvature-corrected differences along the three sides of `f` and the face index.
fn corrected_differences(mesh: &SurfaceMesh, conn: &Connection, diffs: &[f64], f: usize) -> ([f64; 3], i64) {
    let d = face_differences(mesh, diffs, f);
    let om = conn.curvature(f) / 3.0;
    let d = [d[0] + om, d[1] + om, d[2] + om];
    let k = ((d[0] + d[1] + d[2]) / TAU).round() as i64;
    (d, k)
}

/// Covariant gradient of the section on an index-0 face, in the face frame.
pub fn covariant_gradient(section: &DiscreteSection, f: usize) -> Result<Vec2> {
    let mesh = section.mesh();
    if f >= mesh.face_count() {
        return Err(Error::InvalidArgument(format!("no face {f}")));
    }
    let diffs = section.edge_differences();
    let (d, k) = corrected_differences(mesh, section.connection(), &diffs, f);
    if k != 0 {
        return Err(Error::SingularFace(f));
    }
    Ok(linear_gradient(&mesh.face_basis_gradients(f), d[0], d[1]))
}

struct Pass {
    contributions: Vec<f64>,
    norms: Vec<f64>,
}

impl EnergyModel {
    pub fn new(depth: u32) -> Result<Self> {
        if depth > 6 {
            return Err(Error::InvalidArgument(format!("refinement depth {depth} exceeds 6")));
        }
        Ok(EnergyModel { depth })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    fn refinement(&self, mesh: &SurfaceMesh, f: usize) -> Result<Arc<FaceRefinement>> {
        let mut cache = mesh.refinements.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(r) = cache.get(&(f, self.depth)) {
            return Ok(r.clone());
        }
        let r = Arc::new(FaceRefinement::new(mesh.face_coords(f), self.depth)?);
        cache.insert((f, self.depth), r.clone());
        Ok(r)
    }

    fn pass(
        &self,
        mesh: &SurfaceMesh,
        conn: &Connection,
        theta: &[f64],
        functional: Functional,
        mut grad: Option<&mut [f64]>,
    ) -> Result<Pass> {
        let beta = functional.beta()?;
        let c = conn.fiber_length() / TAU;
        let c2 = c * c;
        let diffs = edge_differences(mesh, conn, theta);
        let nf = mesh.face_count();
        let mut contributions = vec![0.0; nf];
        let mut norms = vec![0.0; nf];
        for f in 0..nf {
            let (d, k) = corrected_differences(mesh, conn, &diffs, f);
            let t = mesh.face(f);
            let area = mesh.face_area(f);
            if k == 0 {
                let gs = mesh.face_basis_gradients(f);
                let g = linear_gradient(&gs, d[0], d[1]);
                let s = g.norm_squared();
                let h = (beta * beta + c2 * s).sqrt();
                contributions[f] = area * h;
                norms[f] = s.sqrt();
                if let Some(gr) = grad.as_deref_mut() {
                    if h > 0.0 {
                        let coef = area * c2 / h;
                        for i in 0..3 {
                            gr[t[i]] += coef * g.dot(&gs[i]);
                        }
                    }
                }
            } else {
                let r = self.refinement(mesh, f)?;
                let (v, du, n) = refined_energy(&r, [0.0, d[0], d[0] + d[1]], k, c, beta, grad.is_some());
                contributions[f] = v;
                norms[f] = n;
                if let Some(gr) = grad.as_deref_mut() {
                    for i in 0..3 {
                        gr[t[i]] += du[i];
                    }
                }
            }
        }
        Ok(Pass { contributions, norms })
    }

    /// Functional value for raw angles on a mesh and connection.
    pub fn evaluate_angles(&self, mesh: &SurfaceMesh, conn: &Connection, theta: &[f64], functional: Functional) -> Result<f64> {
        Ok(pairwise_sum(&self.pass(mesh, conn, theta, functional, None)?.contributions))
    }

    /// Functional value and its gradient with respect to every vertex angle.
    pub fn evaluate_angles_with_gradient(
        &self,
        mesh: &SurfaceMesh,
        conn: &Connection,
        theta: &[f64],
        functional: Functional,
    ) -> Result<(f64, Vec<f64>)> {
        if let Functional::Twisting { epsilon } = functional {
            if epsilon <= 0.0 {
                return Err(Error::InvalidArgument("twisting gradient needs a positive smoothing".into()));
            }
        }
        let mut grad = vec![0.0; mesh.vertex_count()];
        let pass = self.pass(mesh, conn, theta, functional, Some(&mut grad))?;
        Ok((pairwise_sum(&pass.contributions), grad))
    }

    pub fn evaluate(&self, section: &DiscreteSection, functional: Functional) -> Result<f64> {
        self.evaluate_angles(section.mesh(), section.connection(), section.theta(), functional)
    }

    pub fn energy_gradient(&self, section: &DiscreteSection, functional: Functional) -> Result<Vec<f64>> {
        Ok(self
            .evaluate_angles_with_gradient(section.mesh(), section.connection(), section.theta(), functional)?
            .1)
    }

    pub fn volume(&self, section: &DiscreteSection) -> Result<f64> {
        self.evaluate(section, Functional::Volume)
    }

    pub fn twisting(&self, section: &DiscreteSection) -> Result<f64> {
        self.evaluate(section, Functional::Twisting { epsilon: 0.0 })
    }

    pub fn stretched_volume(&self, section: &DiscreteSection, lambda: f64) -> Result<f64> {
        self.evaluate(section, Functional::Stretched { lambda })
    }

    pub fn face_contributions(&self, section: &DiscreteSection, functional: Functional) -> Result<Vec<f64>> {
        Ok(self.pass(section.mesh(), section.connection(), section.theta(), functional, None)?.contributions)
    }

    /// Per-face `‖∇u‖` (area average on faces with nonzero index).
    pub fn gradient_norms(&self, section: &DiscreteSection) -> Result<Vec<f64>> {
        Ok(self
            .pass(section.mesh(), section.connection(), section.theta(), Functional::Volume, None)?
            .norms)
    }

    pub fn report(&self, section: &DiscreteSection, lambdas: &[f64]) -> Result<EnergyReport> {
        let pass = self.pass(section.mesh(), section.connection(), section.theta(), Functional::Volume, None)?;
        let lambda_table = lambdas
            .iter()
            .map(|&lambda| Ok(LambdaValue { lambda, value: self.stretched_volume(section, lambda)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(EnergyReport {
            volume: pairwise_sum(&pass.contributions),
            twisting: self.twisting(section)?,
            lambda_table,
            singular_faces: section.face_indices().iter().filter(|&&k| k != 0).count(),
            refinement_depth: self.depth,
            gradient_norms: pass.norms,
        })
    }

    /// `f(t)`, the volume within intrinsic distance `t` of `center`, and `f(t)/t`.
    ///
    /// A face contributes the fraction of its area on which the linear
    /// interpolant of the vertex distances is at most `t`.
    pub fn mass_ratio_profile(&self, section: &DiscreteSection, center: SurfacePoint, radii: &[f64]) -> Result<Vec<ProfilePoint>> {
        let mesh = section.mesh();
        if center.face >= mesh.face_count() {
            return Err(Error::InvalidArgument(format!("no face {}", center.face)));
        }
        if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("radii must be positive and strictly increasing".into()));
        }
        let dist = distance_field(mesh, center);
        let reach = if mesh.is_closed() {
            dist.iter().cloned().fold(0.0, f64::max)
        } else {
            mesh.boundary_loops().iter().flatten().map(|&v| dist[v]).fold(f64::INFINITY, f64::min)
        };
        let last = *radii.last().unwrap();
        if last >= reach {
            return Err(Error::Region(format!("radius {last} reaches beyond the available region ({reach})")));
        }
        let contrib = self.face_contributions(section, Functional::Volume)?;
        let mut out = Vec::with_capacity(radii.len());
        for &t in radii {
            let parts: Vec<f64> = (0..mesh.face_count())
                .map(|f| {
                    let v = mesh.face(f);
                    let mut d = [dist[v[0]], dist[v[1]], dist[v[2]]];
                    d.sort_by(f64::total_cmp);
                    contrib[f] * area_fraction_below(d, t)
                })
                .collect();
            let f = pairwise_sum(&parts);
            out.push(ProfilePoint { t, f, ratio: f / t });
        }
        Ok(out)
    }
}

/// Fraction of a triangle where the linear interpolant of sorted corner values `d` is `≤ t`.
pub fn area_fraction_below(d: [f64; 3], t: f64) -> f64 {
    let [d0, d1, d2] = d;
    if t <= d0 {
        0.0
    } else if t >= d2 {
        1.0
    } else if t <= d1 {
        (t - d0) * (t - d0) / ((d1 - d0) * (d2 - d0))
    } else {
        1.0 - (d2 - t) * (d2 - t) / ((d2 - d0) * (d2 - d1))
    }
}

pub fn profile_csv(rows: &[(usize, ProfilePoint)]) -> String {
    let mut s = String::from("singularity,t,f,ratio\n");
    for (k, p) in rows {
        s.push_str(&format!("{k},{},{},{}\n", crate::fmt_f64(p.t), crate::fmt_f64(p.f), crate::fmt_f64(p.ratio)));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::make_connection;
    use crate::mesh::{make_disk, make_flat_torus, make_icosphere};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cone(rings: usize, k: f64) -> DiscreteSection {
        let d = make_disk(rings, 1.0).unwrap();
        let mesh = Arc::new(d.mesh);
        let conn = Arc::new(Connection::trivial(&mesh));
        let theta = mesh.positions().iter().map(|p| k * p.y.atan2(p.x)).collect();
        DiscreteSection::new(mesh, conn, theta).unwrap()
    }

    #[test]
    fn constant_section_on_unit_torus() {
        let m = Arc::new(make_flat_torus(5, 5, 1.0, 1.0).unwrap());
        let c = Arc::new(Connection::trivial(&m));
        let s = DiscreteSection::constant(m, c, 2.0).unwrap();
        let e = EnergyModel::default();
        assert!((e.volume(&s).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(e.twisting(&s).unwrap(), 0.0);
        assert!(e.energy_gradient(&s, Functional::Volume).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn linear_field_gradient() {
        let d = make_disk(4, 1.0).unwrap();
        let mesh = Arc::new(d.mesh);
        let conn = Arc::new(Connection::trivial(&mesh));
        let theta = mesh.positions().iter().map(|p| 0.7 * p.x).collect();
        let s = DiscreteSection::new(mesh.clone(), conn, theta).unwrap();
        for f in 0..mesh.face_count() {
            let g = covariant_gradient(&s, f).unwrap();
            assert!((g.norm() - 0.7).abs() < 1e-12);
            let (ex, _, _) = mesh.face_frame_3d(f);
            let gx = ex * g.x + mesh.face_frame_3d(f).1 * g.y;
            assert!((gx.x - 0.7).abs() < 1e-12 && gx.y.abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_reproduces_differences() {
        let m = Arc::new(make_icosphere(2, 1.0).unwrap());
        let conn = Arc::new(make_connection(&m, 2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let theta: Vec<f64> = (0..m.vertex_count()).map(|_| rng.gen_range(0.0..0.3)).collect();
        let s = DiscreteSection::new(m.clone(), conn.clone(), theta).unwrap();
        for f in 0..m.face_count() {
            let Ok(g) = covariant_gradient(&s, f) else { continue };
            let t = m.face(f);
            let p = m.face_coords(f);
            for c in 0..3 {
                let (a, b) = (t[c], t[(c + 1) % 3]);
                let expected = s.edge_difference(a, b).unwrap() + conn.curvature(f) / 3.0;
                assert!((g.dot(&(p[(c + 1) % 3] - p[c])) - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn singular_face_gradient_is_an_error() {
        let s = cone(4, 2.0);
        let f = s.singular_faces()[0].face;
        assert_eq!(covariant_gradient(&s, f), Err(Error::SingularFace(f)));
    }

    #[test]
    fn cone_volume_and_twisting() {
        let s = cone(64, 2.0);
        let e = EnergyModel::default();
        let v = e.volume(&s).unwrap();
        let exact = PI * (5f64.sqrt() + 4.0 * ((1.0 + 5f64.sqrt()) / 2.0).ln());
        assert!((v - exact).abs() / exact < 0.01, "{v} vs {exact}");
        let tw = e.twisting(&s).unwrap();
        assert!((tw - 4.0 * PI).abs() / (4.0 * PI) < 0.01, "{tw}");
        assert!(tw <= v);
    }

    #[test]
    fn stretched_limits() {
        let s = cone(8, 2.0);
        let e = EnergyModel::default();
        assert_eq!(e.stretched_volume(&s, 1.0).unwrap(), e.volume(&s).unwrap());
        assert!(e.stretched_volume(&s, 0.5).is_err());
        let flat = cone(8, 0.0);
        let area = flat.mesh().total_area();
        for lam in [1.0, 3.0, 10.0] {
            let v = e.stretched_volume(&flat, lam).unwrap();
            assert!((v - area / lam).abs() < 1e-12);
        }
        let tw = e.twisting(&s).unwrap();
        let mut prev = f64::INFINITY;
        for lam in [1.0, 2.0, 10.0, 100.0] {
            let v = e.stretched_volume(&s, lam).unwrap();
            assert!(v <= prev);
            assert!((v - tw).abs() <= s.mesh().total_area() / lam + 1e-12);
            prev = v;
        }
    }

    fn check_fd(s: &DiscreteSection, functional: Functional) {
        let e = EnergyModel::default();
        let g = e.energy_gradient(s, functional).unwrap();
        let h = 1e-6;
        let scale = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for v in (0..s.mesh().vertex_count()).step_by(7) {
            let mut p = s.theta().to_vec();
            p[v] += h;
            let up = e.evaluate_angles(s.mesh(), s.connection(), &p, functional).unwrap();
            p[v] -= 2.0 * h;
            let dn = e.evaluate_angles(s.mesh(), s.connection(), &p, functional).unwrap();
            let fd = (up - dn) / (2.0 * h);
            assert!((fd - g[v]).abs() <= 1e-5 * scale, "vertex {v}: {fd} vs {}", g[v]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = Arc::new(make_flat_torus(6, 6, 1.0, 1.0).unwrap());
        let conn = Arc::new(Connection::trivial(&m));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let theta: Vec<f64> = (0..m.vertex_count()).map(|_| rng.gen_range(0.0..TAU)).collect();
        let s = DiscreteSection::new(m, conn, theta).unwrap();
        assert!(!s.face_indices().iter().all(|&k| k == 0));
        check_fd(&s, Functional::Volume);
        check_fd(&s, Functional::Twisting { epsilon: 1e-3 });
        check_fd(&s, Functional::Stretched { lambda: 5.0 });
    }

    #[test]
    fn gauge_shift_keeps_gradient() {
        let m = Arc::new(make_icosphere(1, 1.0).unwrap());
        let conn = Arc::new(make_connection(&m, 2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let theta: Vec<f64> = (0..m.vertex_count()).map(|_| rng.gen_range(0.0..TAU)).collect();
        let phi: Vec<f64> = (0..m.vertex_count()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let s = DiscreteSection::new(m, conn, theta).unwrap();
        let t = s.gauge_transform(&phi).unwrap();
        let e = EnergyModel::default();
        let (a, b) = (e.energy_gradient(&s, Functional::Volume).unwrap(), e.energy_gradient(&t, Functional::Volume).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!((e.volume(&s).unwrap() - e.volume(&t).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn area_fraction_rule() {
        assert_eq!(area_fraction_below([0.0, 1.0, 2.0], 0.0), 0.0);
        assert_eq!(area_fraction_below([0.0, 1.0, 2.0], 2.0), 1.0);
        assert!((area_fraction_below([0.0, 1.0, 2.0], 1.0) - 0.5).abs() < 1e-15);
        assert!((area_fraction_below([0.0, 0.0, 1.0], 0.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn profiles_on_disk() {
        let e = EnergyModel::default();
        let flat = cone(32, 0.0);
        let center = SurfacePoint::at_vertex(flat.mesh(), 0);
        let radii: Vec<f64> = (1..=8).map(|k| 0.1 * k as f64).collect();
        let p = e.mass_ratio_profile(&flat, center, &radii).unwrap();
        for w in p.windows(2) {
            assert!(w[1].ratio > w[0].ratio);
        }
        assert!((p[7].ratio - PI * 0.8).abs() < 0.02);
        let c = cone(32, 2.0);
        let p = e.mass_ratio_profile(&c, center, &radii).unwrap();
        for w in p.windows(2) {
            assert!(w[1].ratio >= w[0].ratio * (1.0 - 1e-3));
        }
        assert!(e.mass_ratio_profile(&c, center, &[0.5, 1.5]).is_err());
        assert!(e.mass_ratio_profile(&c, center, &[0.5, 0.4]).is_err());
    }
}
