//! Circle bundles over a mesh, represented by a discrete connection.
//!
//! Transport along the edge `i -> j` rotates a fiber angle measured in the
//! frame at `i` by `ρ_ij` into the frame at `j`. Face curvature `Ω_f` is stored
//! explicitly and agrees with the counterclockwise holonomy `Σ_{∂f} ρ` modulo
//! `2π`; the Euler number is `Σ_f Ω_f / 2π`.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, CsrMatrix};
use crate::mesh::SurfaceMesh;
use crate::{fmt_f64, wrap_angle};

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    rho: Vec<f64>,
    curvature: Vec<f64>,
    euler_number: i64,
    fiber_length: f64,
}

impl Connection {
    /// Flat connection with zero transport on every edge.
    pub fn trivial(mesh: &SurfaceMesh) -> Self {
        Connection {
            rho: vec![0.0; mesh.edge_count()],
            curvature: vec![0.0; mesh.face_count()],
            euler_number: 0,
            fiber_length: TAU,
        }
    }

    /// Connection from per-edge transports (canonical orientation, lower id to higher id).
    ///
    /// Face curvature is the holonomy folded into `(−π, π]`.
    pub fn from_rho(mesh: &SurfaceMesh, rho: Vec<f64>) -> Result<Self> {
        if rho.len() != mesh.edge_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} edge transports, got {}",
                mesh.edge_count(),
                rho.len()
            )));
        }
        let curvature: Vec<f64> = (0..mesh.face_count()).map(|f| wrap_angle(holonomy(mesh, &rho, f))).collect();
        let e = integral_euler(&curvature)?;
        Ok(Connection { rho, curvature, euler_number: e, fiber_length: TAU })
    }

    pub fn with_fiber_length(mut self, length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidArgument("fiber length must be positive".into()));
        }
        self.fiber_length = length;
        Ok(self)
    }

    /// Transport on edge `e` in its canonical orientation.
    pub fn rho(&self, e: usize) -> f64 {
        self.rho[e]
    }

    pub fn rhos(&self) -> &[f64] {
        &self.rho
    }

    /// Transport from `i` to `j`; antisymmetric by construction.
    pub fn transport(&self, mesh: &SurfaceMesh, i: usize, j: usize) -> Option<f64> {
        let e = mesh.edge_between(i, j)?;
        Some(if i < j { self.rho[e] } else { -self.rho[e] })
    }

    pub fn curvature(&self, f: usize) -> f64 {
        self.curvature[f]
    }

    pub fn curvatures(&self) -> &[f64] {
        &self.curvature
    }

    pub fn stored_euler_number(&self) -> i64 {
        self.euler_number
    }

    pub fn fiber_length(&self) -> f64 {
        self.fiber_length
    }

    pub fn total_curvature(&self) -> f64 {
        crate::pairwise_sum(&self.curvature)
    }

    pub fn matches(&self, mesh: &SurfaceMesh) -> bool {
        self.rho.len() == mesh.edge_count() && self.curvature.len() == mesh.face_count()
    }

    /// Gauge change `ρ_ij += φ_j − φ_i`; curvature is unchanged.
    pub fn gauge_transform(&self, mesh: &SurfaceMesh, phi: &[f64]) -> Connection {
        let rho = mesh
            .edges()
            .iter()
            .zip(&self.rho)
            .map(|(&[lo, hi], r)| r + phi[hi] - phi[lo])
            .collect();
        Connection { rho, ..self.clone() }
    }

    /// CSV dump: a `# e=<int> L=<float>` comment, a header row, then one row per edge.
    pub fn to_csv(&self, mesh: &SurfaceMesh) -> String {
        let mut s = format!("# e={} L={}\nedge_i,edge_j,rho\n", self.euler_number, fmt_f64(self.fiber_length));
        for (e, &[lo, hi]) in mesh.edges().iter().enumerate() {
            s.push_str(&format!("{lo},{hi},{}\n", fmt_f64(self.rho[e])));
        }
        s
    }

    /// Reads the format written by [`Connection::to_csv`]. Rows may list either orientation.
    pub fn from_csv(mesh: &SurfaceMesh, text: &str) -> Result<Self> {
        let mut declared_e = None;
        let mut length = TAU;
        let mut rho = vec![f64::NAN; mesh.edge_count()];
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for kv in comment.split_whitespace() {
                    let parse_err = || Error::Parse { line: ln + 1, msg: format!("bad header field `{kv}`") };
                    if let Some(v) = kv.strip_prefix("e=") {
                        declared_e = Some(v.parse::<i64>().map_err(|_| parse_err())?);
                    } else if let Some(v) = kv.strip_prefix("L=") {
                        length = v.parse::<f64>().map_err(|_| parse_err())?;
                    }
                }
                continue;
            }
            if line.starts_with("edge_i") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Parse { line: ln + 1, msg: format!("expected `i,j,rho`, found `{line}`") };
            if cols.len() != 3 {
                return Err(bad());
            }
            let i: usize = cols[0].parse().map_err(|_| bad())?;
            let j: usize = cols[1].parse().map_err(|_| bad())?;
            let r: f64 = cols[2].parse().map_err(|_| bad())?;
            let e = mesh.edge_between(i, j).ok_or(Error::Parse {
                line: ln + 1,
                msg: format!("({i}, {j}) is not a mesh edge"),
            })?;
            rho[e] = if i < j { r } else { -r };
        }
        if let Some(e) = rho.iter().position(|r| r.is_nan()) {
            let [a, b] = mesh.edge(e);
            return Err(Error::Parse { line: 0, msg: format!("missing transport for edge ({a}, {b})") });
        }
        let conn = Connection::from_rho(mesh, rho)?.with_fiber_length(length)?;
        if let Some(e) = declared_e {
            if e != conn.euler_number {
                return Err(Error::Inconsistent(format!(
                    "header declares e={e} but the transports give e={}",
                    conn.euler_number
                )));
            }
        }
        Ok(conn)
    }
}

/// Counterclockwise sum of transports around face `f`.
pub fn holonomy(mesh: &SurfaceMesh, rho: &[f64], f: usize) -> f64 {
    let fe = mesh.face_edges(f);
    let fs = mesh.face_edge_signs(f);
    (0..3).map(|c| fs[c] * rho[fe[c]]).sum()
}

fn integral_euler(curvature: &[f64]) -> Result<i64> {
    let s = crate::pairwise_sum(curvature) / TAU;
    let r = s.round();
    if (s - r).abs() > 1e-6 {
        return Err(Error::Inconsistent(format!("total curvature / 2π = {s} is not an integer")));
    }
    Ok(r as i64)
}

/// Euler number `round(Σ Ω_f / 2π)`, checked against the stored value.
pub fn euler_number(conn: &Connection) -> Result<i64> {
    let e = integral_euler(&conn.curvature)?;
    if e != conn.euler_number {
        return Err(Error::Inconsistent(format!(
            "curvature gives e={e} but the connection records e={}",
            conn.euler_number
        )));
    }
    Ok(e)
}

/// Connection with Euler number `e`, curvature spread proportionally to face area.
///
/// Transports are the minimum-norm solution of the edge-to-face incidence
/// system. The `2π e` of integral curvature that cannot be expressed as a sum
/// of exact face holonomies is absorbed as a `2π` jump on face 0.
pub fn make_connection(mesh: &SurfaceMesh, e: i64) -> Result<Connection> {
    if e % 2 != 0 {
        return Err(Error::OddEulerNumber(e));
    }
    if !mesh.is_closed() {
        return Err(Error::InvalidMesh("a closed surface is required".into()));
    }
    if e == 0 {
        return Ok(Connection::trivial(mesh));
    }
    let area = mesh.total_area();
    let curvature: Vec<f64> = mesh.face_areas().iter().map(|a| TAU * e as f64 * a / area).collect();
    let mut target = curvature.clone();
    target[0] -= TAU * e as f64;

    let psi = solve_dual_laplacian(mesh, &target);
    let rho: Vec<f64> = (0..mesh.edge_count())
        .map(|ed| {
            let [plus, minus] = mesh.edge_faces(ed);
            wrap_angle(psi[plus.unwrap()] - psi[minus.unwrap()])
        })
        .collect();
    let conn = Connection { rho, curvature, euler_number: e, fiber_length: TAU };
    check_holonomy(mesh, &conn)?;
    Ok(conn)
}

/// Solves `D Dᵀ ψ = b` on a closed mesh, where `D` is the signed face-edge incidence.
pub(crate) fn solve_dual_laplacian(mesh: &SurfaceMesh, b: &[f64]) -> Vec<f64> {
    let nf = mesh.face_count();
    let mut t = Vec::with_capacity(4 * nf);
    for ed in 0..mesh.edge_count() {
        if let [Some(p), Some(m)] = mesh.edge_faces(ed) {
            t.push((p, p, 1.0));
            t.push((m, m, 1.0));
            t.push((p, m, -1.0));
            t.push((m, p, -1.0));
        }
    }
    let a = CsrMatrix::from_triplets(nf, t);
    conjugate_gradient(&a, b, 1e-13, 20 * nf + 100, true).0
}

fn check_holonomy(mesh: &SurfaceMesh, conn: &Connection) -> Result<()> {
    for f in 0..mesh.face_count() {
        let d = wrap_angle(holonomy(mesh, &conn.rho, f) - conn.curvature[f]);
        if d.abs() > 1e-8 {
            return Err(Error::Inconsistent(format!("holonomy of face {f} misses its curvature by {d}")));
        }
    }
    Ok(())
}

/// Angles of the outgoing edges at `v` in the vertex's tangent frame.
///
/// Interior angles are rescaled so they sum to `2π`; the first neighbor of the
/// star is the reference direction (angle 0).
pub fn vertex_frame_angles(mesh: &SurfaceMesh, v: usize) -> Vec<f64> {
    let star = mesh.star(v);
    let corner: Vec<f64> = star.faces.iter().map(|&f| mesh.face_angles(f)[mesh.corner_of(f, v)]).collect();
    let total: f64 = corner.iter().sum();
    let scale = if star.interior { TAU / total } else { 1.0 };
    let mut out = Vec::with_capacity(star.neighbors.len());
    let mut acc = 0.0;
    for k in 0..star.neighbors.len() {
        out.push(acc * scale);
        if k < corner.len() {
            acc += corner[k];
        }
    }
    out
}

/// Discrete Levi-Civita connection of a closed mesh.
///
/// Each vertex carries the rescaled polar frame of [`vertex_frame_angles`];
/// transport along an edge keeps the angle to the edge fixed. Face curvature is
/// the angle defect of each corner distributed in proportion to its angle, so
/// the Euler number equals `χ(Σ)`.
pub fn levi_civita_connection(mesh: &SurfaceMesh) -> Result<Connection> {
    if !mesh.is_closed() {
        return Err(Error::InvalidMesh("a closed surface is required".into()));
    }
    let nv = mesh.vertex_count();
    let frames: Vec<Vec<f64>> = (0..nv).map(|v| vertex_frame_angles(mesh, v)).collect();
    let direction = |from: usize, to: usize| -> f64 {
        let k = mesh.star(from).neighbors.iter().position(|&n| n == to).unwrap();
        frames[from][k]
    };
    let rho: Vec<f64> = mesh
        .edges()
        .iter()
        .map(|&[lo, hi]| wrap_angle(direction(hi, lo) + PI - direction(lo, hi)))
        .collect();
    let defect_share: Vec<f64> = (0..nv).map(|v| mesh.angle_defect(v) / mesh.angle_sum(v)).collect();
    let curvature: Vec<f64> = (0..mesh.face_count())
        .map(|f| {
            let t = mesh.face(f);
            let a = mesh.face_angles(f);
            (0..3).map(|c| defect_share[t[c]] * a[c]).sum()
        })
        .collect();
    let e = integral_euler(&curvature)?;
    let conn = Connection { rho, curvature, euler_number: e, fiber_length: TAU };
    check_holonomy(mesh, &conn)?;
    Ok(conn)
}
