//! Triangulated base surfaces.
//!
//! The metric is carried by edge lengths. Vertex positions are kept for
//! generation, export, and for locating points on embedded meshes; every
//! metric quantity (areas, angles, face frames) is derived from lengths.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex};

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};
use crate::refine::FaceRefinement;

pub type Point3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;

/// Cyclically ordered one-ring of a vertex.
///
/// Face `faces[k]` lies between `neighbors[k]` and `neighbors[k + 1]`
/// (indices taken cyclically for interior vertices). Boundary vertices have one
/// more neighbor than faces.
#[derive(Debug, Clone)]
pub struct VertexStar {
    pub neighbors: Vec<usize>,
    pub faces: Vec<usize>,
    pub interior: bool,
}

#[derive(Debug)]
pub struct SurfaceMesh {
    positions: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_lengths: Vec<f64>,
    // [face traversing lo->hi, face traversing hi->lo]
    edge_faces: Vec<[Option<usize>; 2]>,
    face_edges: Vec<[usize; 3]>,
    face_signs: Vec<[f64; 3]>,
    face_areas: Vec<f64>,
    face_angles: Vec<[f64; 3]>,
    face_coords: Vec<[Vec2; 3]>,
    face_gradients: Vec<[Vec2; 3]>,
    edge_index: HashMap<(usize, usize), usize>,
    stars: Vec<VertexStar>,
    boundary_loops: Vec<Vec<usize>>,
    genus: usize,
    embedded: bool,
    pub(crate) refinements: Mutex<HashMap<(usize, u32), Arc<FaceRefinement>>>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl SurfaceMesh {
    /// Closed mesh with edge lengths taken from the vertex positions.
    pub fn new(positions: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let p = positions.clone();
        Self::build(positions, faces, |a, b| (p[a] - p[b]).norm(), false, true)
    }

    /// Closed mesh with explicitly supplied intrinsic edge lengths.
    ///
    /// Positions are informational only (the mesh is flagged as not embedded).
    pub fn with_lengths(
        positions: Vec<Point3>,
        faces: Vec<[usize; 3]>,
        length: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        Self::build(positions, faces, length, false, false)
    }

    /// Mesh that may have boundary, lengths from positions.
    pub fn with_boundary(positions: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let p = positions.clone();
        Self::build(positions, faces, |a, b| (p[a] - p[b]).norm(), true, true)
    }

    fn build(
        positions: Vec<Point3>,
        faces: Vec<[usize; 3]>,
        length: impl Fn(usize, usize) -> f64,
        allow_boundary: bool,
        embedded: bool,
    ) -> Result<Self> {
        let nv = positions.len();
        if faces.is_empty() {
            return Err(Error::InvalidMesh("no faces".into()));
        }
        for (f, t) in faces.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("face {f} references a missing vertex")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvalidMesh(format!("face {f} repeats a vertex")));
            }
        }

        // Count undirected uses first so non-manifold edges are reported as such.
        let mut uses: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &faces {
            for c in 0..3 {
                *uses.entry(key(t[c], t[(c + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut bad: Vec<_> = uses.iter().filter(|(_, &n)| n > 2).collect();
        bad.sort();
        if let Some((&(a, b), &n)) = bad.first() {
            return Err(Error::NonManifoldEdge(a, b, n));
        }

        let mut edges = Vec::new();
        let mut edge_faces: Vec<[Option<usize>; 2]> = Vec::new();
        let mut edge_index = HashMap::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        let mut face_signs = Vec::with_capacity(faces.len());
        for (f, t) in faces.iter().enumerate() {
            let mut fe = [0; 3];
            let mut fs = [0.0; 3];
            for c in 0..3 {
                let (a, b) = (t[c], t[(c + 1) % 3]);
                let k = key(a, b);
                let e = *edge_index.entry(k).or_insert_with(|| {
                    edges.push([k.0, k.1]);
                    edge_faces.push([None, None]);
                    edges.len() - 1
                });
                let slot = if a < b { 0 } else { 1 };
                if edge_faces[e][slot].is_some() {
                    return Err(Error::InconsistentOrientation(k.0, k.1));
                }
                edge_faces[e][slot] = Some(f);
                fe[c] = e;
                fs[c] = if a < b { 1.0 } else { -1.0 };
            }
            face_edges.push(fe);
            face_signs.push(fs);
        }

        let mut boundary_edges = Vec::new();
        for (e, ef) in edge_faces.iter().enumerate() {
            if ef[0].is_none() || ef[1].is_none() {
                if !allow_boundary {
                    return Err(Error::Boundary(edges[e][0], edges[e][1]));
                }
                boundary_edges.push(e);
            }
        }

        let edge_lengths: Vec<f64> = edges.iter().map(|&[a, b]| length(a, b)).collect();
        if edge_lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidMesh("edge lengths must be positive and finite".into()));
        }

        let mut face_areas = Vec::with_capacity(faces.len());
        let mut face_angles = Vec::with_capacity(faces.len());
        let mut face_coords = Vec::with_capacity(faces.len());
        let mut face_gradients = Vec::with_capacity(faces.len());
        for (f, t) in faces.iter().enumerate() {
            let l = [
                edge_lengths[face_edges[f][0]],
                edge_lengths[face_edges[f][1]],
                edge_lengths[face_edges[f][2]],
            ];
            // l[c] is the length of the edge from corner c to corner c+1.
            for c in 0..3 {
                if l[c] >= l[(c + 1) % 3] + l[(c + 2) % 3] {
                    return Err(Error::DegenerateFace(f));
                }
            }
            // Frame: first axis along the face's lowest-id edge, from its lower to its higher vertex.
            let c = (0..3).min_by_key(|&c| face_edges[f][c]).unwrap();
            let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
            let len = l[c];
            let forward = t[c] < t[c1];
            let (origin, far) = if forward { (c, c1) } else { (c1, c) };
            let d_origin = if forward { l[c2] } else { l[c1] };
            let d_far = if forward { l[c1] } else { l[c2] };
            let x = (d_origin * d_origin - d_far * d_far + len * len) / (2.0 * len);
            let y2 = d_origin * d_origin - x * x;
            if y2 <= 0.0 {
                return Err(Error::DegenerateFace(f));
            }
            let y = if forward { y2.sqrt() } else { -y2.sqrt() };
            let mut coords = [Vec2::zeros(); 3];
            coords[origin] = Vec2::zeros();
            coords[far] = Vec2::new(len, 0.0);
            coords[c2] = Vec2::new(x, y);
            let area = 0.5 * len * y.abs();
            let mut angles = [0.0; 3];
            for k in 0..3 {
                // angle at corner k is opposite the edge (k+1, k+2)
                let a = l[(k + 1) % 3];
                let b = l[k];
                let cc = l[(k + 2) % 3];
                let cosv = ((b * b + cc * cc - a * a) / (2.0 * b * cc)).clamp(-1.0, 1.0);
                angles[k] = cosv.acos();
            }
            let mut grads = [Vec2::zeros(); 3];
            for k in 0..3 {
                let opp = coords[(k + 2) % 3] - coords[(k + 1) % 3];
                grads[k] = Vec2::new(-opp.y, opp.x) / (2.0 * area);
            }
            face_areas.push(area);
            face_angles.push(angles);
            face_coords.push(coords);
            face_gradients.push(grads);
        }

        let stars = build_stars(nv, &faces)?;
        let boundary_loops = trace_boundary_loops(&edges, &edge_faces, &boundary_edges);

        let mut mesh = SurfaceMesh {
            positions,
            faces,
            edges,
            edge_lengths,
            edge_faces,
            face_edges,
            face_signs,
            face_areas,
            face_angles,
            face_coords,
            face_gradients,
            edge_index,
            stars,
            boundary_loops,
            genus: 0,
            embedded,
            refinements: Mutex::new(HashMap::new()),
        };
        if !mesh.is_connected() {
            return Err(Error::InvalidMesh("mesh is not connected".into()));
        }
        let chi = mesh.euler_characteristic();
        let twice_genus = 2 - chi - mesh.boundary_loops.len() as i64;
        if twice_genus < 0 || twice_genus % 2 != 0 {
            return Err(Error::InvalidMesh(format!(
                "Euler characteristic {chi} is incompatible with an orientable surface"
            )));
        }
        mesh.genus = (twice_genus / 2) as usize;
        Ok(mesh)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.faces.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(f) = stack.pop() {
            for g in self.face_neighbors(f) {
                if !seen[g] {
                    seen[g] = true;
                    count += 1;
                    stack.push(g);
                }
            }
        }
        count == self.faces.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_loops.is_empty()
    }

    /// True when positions realize the edge lengths (generated spheres, disks, loaded files).
    pub fn is_embedded(&self) -> bool {
        self.embedded
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn position(&self, v: usize) -> Point3 {
        self.positions[v]
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.edge_lengths[e]
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&key(a, b)).copied()
    }

    /// Faces on either side: `[traversing lo->hi, traversing hi->lo]`.
    pub fn edge_faces(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_faces[e]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_faces[e][0].is_none() || self.edge_faces[e][1].is_none()
    }

    /// Edge ids of the face sides `(c0,c1)`, `(c1,c2)`, `(c2,c0)`.
    pub fn face_edges(&self, f: usize) -> [usize; 3] {
        self.face_edges[f]
    }

    /// `+1` where the face traverses its side from the lower to the higher vertex id.
    pub fn face_edge_signs(&self, f: usize) -> [f64; 3] {
        self.face_signs[f]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        self.face_areas[f]
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn total_area(&self) -> f64 {
        crate::pairwise_sum(&self.face_areas)
    }

    pub fn face_angles(&self, f: usize) -> [f64; 3] {
        self.face_angles[f]
    }

    /// Corner coordinates in the face's own orthonormal frame.
    pub fn face_coords(&self, f: usize) -> [Vec2; 3] {
        self.face_coords[f]
    }

    /// Gradients of the three linear hat functions of the face, in its frame.
    pub fn face_basis_gradients(&self, f: usize) -> [Vec2; 3] {
        self.face_gradients[f]
    }

    pub fn star(&self, v: usize) -> &VertexStar {
        &self.stars[v]
    }

    /// Faces sharing an edge with `f`.
    pub fn face_neighbors(&self, f: usize) -> impl Iterator<Item = usize> + '_ {
        self.face_edges[f].into_iter().filter_map(move |e| {
            let [a, b] = self.edge_faces[e];
            match (a, b) {
                (Some(x), Some(y)) => Some(if x == f { y } else { x }),
                _ => None,
            }
        })
    }

    pub fn face_barycenter(&self, f: usize) -> Point3 {
        let [a, b, c] = self.faces[f];
        (self.positions[a] + self.positions[b] + self.positions[c]) / 3.0
    }

    /// Sum of interior angles around `v`.
    pub fn angle_sum(&self, v: usize) -> f64 {
        self.stars[v]
            .faces
            .iter()
            .map(|&f| {
                let c = self.corner_of(f, v);
                self.face_angles[f][c]
            })
            .sum()
    }

    /// Angle defect `2π − Σ angles` for interior vertices, `π − Σ angles` on the boundary.
    pub fn angle_defect(&self, v: usize) -> f64 {
        let full = if self.stars[v].interior { TAU } else { PI };
        full - self.angle_sum(v)
    }

    /// Position (0..3) of vertex `v` in face `f`.
    pub fn corner_of(&self, f: usize, v: usize) -> usize {
        self.faces[f].iter().position(|&w| w == v).expect("vertex not in face")
    }

    /// Orthonormal 3D axes of the face frame (embedded meshes only).
    pub fn face_frame_3d(&self, f: usize) -> (Point3, Point3, Point3) {
        let t = self.faces[f];
        let coords = self.face_coords[f];
        // recover the axes from two corner offsets
        let d1 = self.positions[t[1]] - self.positions[t[0]];
        let d2 = self.positions[t[2]] - self.positions[t[0]];
        let q1 = coords[1] - coords[0];
        let q2 = coords[2] - coords[0];
        let det = q1.x * q2.y - q1.y * q2.x;
        let ex = (d1 * q2.y - d2 * q1.y) / det;
        let ey = (d2 * q1.x - d1 * q2.x) / det;
        let ex = ex.normalize();
        let normal = ex.cross(&ey).normalize();
        let ey = normal.cross(&ex);
        (ex, ey, normal)
    }

    pub fn face_normal(&self, f: usize) -> Point3 {
        let [a, b, c] = self.faces[f];
        (self.positions[b] - self.positions[a])
            .cross(&(self.positions[c] - self.positions[a]))
            .normalize()
    }

    /// Area-weighted vertex normal.
    pub fn vertex_normal(&self, v: usize) -> Point3 {
        let mut n = Point3::zeros();
        for &f in &self.stars[v].faces {
            let [a, b, c] = self.faces[f];
            n += (self.positions[b] - self.positions[a]).cross(&(self.positions[c] - self.positions[a]));
        }
        n.normalize()
    }

    /// Serializes to the OFF-like text format read by [`load_mesh`].
    pub fn to_off(&self) -> String {
        let mut s = format!("{} {} {}\n", self.vertex_count(), self.edge_count(), self.face_count());
        for p in &self.positions {
            s.push_str(&format!("{:.17e} {:.17e} {:.17e}\n", p.x, p.y, p.z));
        }
        for t in &self.faces {
            s.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
        }
        s
    }
}

fn build_stars(nv: usize, faces: &[[usize; 3]]) -> Result<Vec<VertexStar>> {
    // At corner a of face (a,b,c) the wedge runs counterclockwise from b to c.
    let mut wedges: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); nv];
    for (f, t) in faces.iter().enumerate() {
        for c in 0..3 {
            wedges[t[c]].push((t[(c + 1) % 3], t[(c + 2) % 3], f));
        }
    }
    let mut stars = Vec::with_capacity(nv);
    for (v, w) in wedges.iter().enumerate() {
        if w.is_empty() {
            return Err(Error::InvalidMesh(format!("vertex {v} belongs to no face")));
        }
        let next: HashMap<usize, (usize, usize)> = w.iter().map(|&(b, c, f)| (b, (c, f))).collect();
        let targets: std::collections::HashSet<usize> = w.iter().map(|&(_, c, _)| c).collect();
        // a boundary fan starts at the neighbor that is never a wedge target
        let mut starts: Vec<usize> = w.iter().map(|&(b, _, _)| b).filter(|b| !targets.contains(b)).collect();
        starts.sort_unstable();
        let interior = starts.is_empty();
        if starts.len() > 1 {
            return Err(Error::InvalidMesh(format!("vertex {v} is not manifold")));
        }
        let start = if interior {
            *w.iter().map(|(b, _, _)| b).min().unwrap()
        } else {
            starts[0]
        };
        let mut neighbors = vec![start];
        let mut sfaces = Vec::new();
        let mut cur = start;
        while let Some(&(c, f)) = next.get(&cur) {
            sfaces.push(f);
            if interior && c == start {
                break;
            }
            neighbors.push(c);
            cur = c;
            if sfaces.len() > w.len() {
                break;
            }
        }
        if sfaces.len() != w.len() {
            return Err(Error::InvalidMesh(format!("vertex {v} is not manifold")));
        }
        stars.push(VertexStar { neighbors, faces: sfaces, interior });
    }
    Ok(stars)
}

fn trace_boundary_loops(
    edges: &[[usize; 2]],
    edge_faces: &[[Option<usize>; 2]],
    boundary_edges: &[usize],
) -> Vec<Vec<usize>> {
    // Directed boundary edges, oriented so the surface lies to their left.
    let mut next: HashMap<usize, usize> = HashMap::new();
    for &e in boundary_edges {
        let [lo, hi] = edges[e];
        if edge_faces[e][0].is_some() {
            next.insert(lo, hi);
        } else {
            next.insert(hi, lo);
        }
    }
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut used = std::collections::HashSet::new();
    let mut loops = Vec::new();
    for s in starts {
        if used.contains(&s) {
            continue;
        }
        let mut lp = vec![s];
        used.insert(s);
        let mut cur = next[&s];
        while cur != s {
            lp.push(cur);
            used.insert(cur);
            cur = match next.get(&cur) {
                Some(&n) => n,
                None => break,
            };
        }
        loops.push(lp);
    }
    loops
}

/// A flat disk of radius `radius` triangulated by concentric rings.
#[derive(Debug)]
pub struct DiskMesh {
    pub mesh: SurfaceMesh,
    /// Boundary vertices in counterclockwise order.
    pub boundary: Vec<usize>,
    pub center: usize,
    pub radius: f64,
}

/// Icosahedron subdivided `subdivisions` times and projected to a sphere.
pub fn make_icosphere(subdivisions: usize, radius: f64) -> Result<SurfaceMesh> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pos: Vec<Point3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::new(x, y, z).normalize() * radius)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut out = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, pos: &mut Vec<Point3>| -> usize {
            *mid.entry(key(a, b)).or_insert_with(|| {
                pos.push(((pos[a] + pos[b]) * 0.5).normalize() * radius);
                pos.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut pos);
            let bc = midpoint(b, c, &mut pos);
            let ca = midpoint(c, a, &mut pos);
            out.push([a, ab, ca]);
            out.push([b, bc, ab]);
            out.push([c, ca, bc]);
            out.push([ab, bc, ca]);
        }
        faces = out;
    }
    SurfaceMesh::new(pos, faces)
}

/// Flat torus `[0,a]×[0,b]` with opposite sides identified, on an `n×m` grid.
pub fn make_flat_torus(n: usize, m: usize, a: f64, b: f64) -> Result<SurfaceMesh> {
    if n < 3 || m < 3 {
        return Err(Error::InvalidArgument(format!(
            "torus grid needs at least 3 cells per side, got {n}x{m}"
        )));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument("torus side lengths must be positive".into()));
    }
    let id = |i: usize, j: usize| (i % n) + n * (j % m);
    let (dx, dy) = (a / n as f64, b / m as f64);
    let mut pos = Vec::with_capacity(n * m);
    for j in 0..m {
        for i in 0..n {
            pos.push(Point3::new(i as f64 * dx, j as f64 * dy, 0.0));
        }
    }
    let mut faces = Vec::with_capacity(2 * n * m);
    for j in 0..m {
        for i in 0..n {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }
    let diag = (dx * dx + dy * dy).sqrt();
    SurfaceMesh::with_lengths(pos, faces, |p, q| {
        let (ip, jp) = (p % n, p / n);
        let (iq, jq) = (q % n, q / n);
        let di = ip.abs_diff(iq).min(n - ip.abs_diff(iq));
        let dj = jp.abs_diff(jq).min(m - jp.abs_diff(jq));
        match (di, dj) {
            (1, 0) => dx,
            (0, 1) => dy,
            _ => diag,
        }
    })
}

/// Flat disk of radius `radius`; ring `j` has `6j` vertices at radius `j·radius/rings`.
pub fn make_disk(rings: usize, radius: f64) -> Result<DiskMesh> {
    if rings < 1 {
        return Err(Error::InvalidArgument("disk needs at least one ring".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let mut pos = vec![Point3::zeros()];
    let mut ring_start = vec![0usize];
    for j in 1..=rings {
        ring_start.push(pos.len());
        let r = radius * j as f64 / rings as f64;
        let count = 6 * j;
        for k in 0..count {
            let phi = TAU * k as f64 / count as f64;
            pos.push(Point3::new(r * phi.cos(), r * phi.sin(), 0.0));
        }
    }
    let ring = |j: usize, k: usize| -> usize {
        if j == 0 {
            0
        } else {
            ring_start[j] + k % (6 * j)
        }
    };
    let mut faces = Vec::new();
    for k in 0..6 {
        faces.push([0, ring(1, k), ring(1, k + 1)]);
    }
    for j in 1..rings {
        let (n_in, n_out) = (6 * j, 6 * (j + 1));
        let (mut i, mut k) = (0usize, 0usize);
        while i < n_in || k < n_out {
            // compare the angles of the next inner and outer vertices exactly
            let advance_inner = k == n_out || (i < n_in && (i + 1) * n_out < (k + 1) * n_in);
            if advance_inner {
                faces.push([ring(j, i), ring(j + 1, k), ring(j, i + 1)]);
                i += 1;
            } else {
                faces.push([ring(j, i), ring(j + 1, k), ring(j + 1, k + 1)]);
                k += 1;
            }
        }
    }
    let boundary: Vec<usize> = (0..6 * rings).map(|k| ring(rings, k)).collect();
    let mesh = SurfaceMesh::with_boundary(pos, faces)?;
    Ok(DiskMesh { mesh, boundary, center: 0, radius })
}

/// Parses the OFF-like text format: `V E F`, then `V` lines `x y z`, then `F` lines `3 i j k`.
///
/// `#` starts a comment. An optional leading `OFF` keyword is accepted. `E` may be
/// zero; otherwise it must match the number of distinct edges.
pub fn load_mesh(text: &str) -> Result<SurfaceMesh> {
    let mut tokens: Vec<(usize, &str)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        tokens.extend(body.split_whitespace().map(|t| (ln + 1, t)));
    }
    let mut it = tokens.into_iter().peekable();
    if let Some(&(_, t)) = it.peek() {
        if t.eq_ignore_ascii_case("OFF") {
            it.next();
        }
    }
    let last_line = text.lines().count().max(1);
    let mut next_usize = |what: &str| -> Result<usize> {
        match it.next() {
            Some((ln, t)) => t.parse::<usize>().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("expected {what}, found `{t}`"),
            }),
            None => Err(Error::Parse { line: last_line, msg: format!("missing {what}") }),
        }
    };
    let nv = next_usize("vertex count")?;
    let ne = next_usize("edge count")?;
    let nf = next_usize("face count")?;
    if nv == 0 || nf == 0 {
        return Err(Error::Parse { line: 1, msg: "vertex and face counts must be positive".into() });
    }
    let mut rest: Vec<(usize, &str)> = Vec::new();
    // re-collect the remaining tokens (the closure above borrows `it`)
    drop(next_usize);
    rest.extend(it);
    let mut idx = 0;
    let mut take = |what: &str| -> Result<(usize, &str)> {
        let r = rest.get(idx).copied().ok_or(Error::Parse {
            line: last_line,
            msg: format!("unexpected end of input while reading {what}"),
        });
        idx += 1;
        r
    };
    let mut positions = Vec::with_capacity(nv);
    for v in 0..nv {
        let mut c = [0.0; 3];
        for x in c.iter_mut() {
            let (ln, t) = take("vertex coordinates")?;
            *x = t.parse::<f64>().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("bad coordinate `{t}` for vertex {v}"),
            })?;
        }
        positions.push(Point3::new(c[0], c[1], c[2]));
    }
    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let (ln, t) = take("face size")?;
        if t != "3" {
            return Err(Error::Parse { line: ln, msg: format!("face {f} is not a triangle") });
        }
        let mut tri = [0usize; 3];
        for x in tri.iter_mut() {
            let (ln, t) = take("face indices")?;
            *x = t.parse::<usize>().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("bad vertex index `{t}` in face {f}"),
            })?;
            if *x >= nv {
                return Err(Error::Parse { line: ln, msg: format!("vertex index {x} out of range") });
            }
        }
        faces.push(tri);
    }
    if let Some(&(ln, t)) = rest.get(idx) {
        return Err(Error::Parse { line: ln, msg: format!("trailing token `{t}`") });
    }
    let mesh = SurfaceMesh::new(positions, faces)?;
    if ne != 0 && ne != mesh.edge_count() {
        return Err(Error::Parse {
            line: 1,
            msg: format!("edge count {ne} does not match the {} edges present", mesh.edge_count()),
        });
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TETRA: &str = "# regular tetrahedron\n4 6 4\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";

    #[test]
    fn icosahedron_counts() {
        let m = make_icosphere(0, 1.0).unwrap();
        assert_eq!((m.vertex_count(), m.edge_count(), m.face_count()), (12, 30, 20));
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.genus(), 0);
        let m1 = make_icosphere(1, 1.0).unwrap();
        assert_eq!((m1.vertex_count(), m1.face_count()), (42, 80));
    }

    #[test]
    fn icosphere_is_outward_oriented_and_converges_in_area() {
        let m = make_icosphere(5, 2.0).unwrap();
        for f in 0..m.face_count() {
            assert!(m.face_normal(f).dot(&m.face_barycenter(f)) > 0.0);
        }
        let target = 16.0 * PI;
        assert!((m.total_area() - target).abs() / target < 0.01);
    }

    #[test]
    fn icosphere_gauss_bonnet() {
        let m = make_icosphere(3, 1.0).unwrap();
        let total: f64 = (0..m.vertex_count()).map(|v| m.angle_defect(v)).sum();
        assert!((total - 4.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn torus_combinatorics_and_lengths() {
        let m = make_flat_torus(3, 3, 1.0, 1.0).unwrap();
        assert_eq!((m.vertex_count(), m.face_count()), (9, 18));
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(m.genus(), 1);
        assert_relative_eq!(m.total_area(), 1.0, epsilon = 1e-12);

        let m = make_flat_torus(4, 4, 2.0, 1.0).unwrap();
        let allowed = [0.5, 0.25, 0.3125f64.sqrt()];
        for &l in m.edge_lengths() {
            assert!(allowed.iter().any(|a| (a - l).abs() < 1e-14), "unexpected length {l}");
        }
        for v in 0..m.vertex_count() {
            assert!((m.angle_sum(v) - TAU).abs() < 1e-9);
        }
        assert!(make_flat_torus(2, 3, 1.0, 1.0).is_err());
    }

    #[test]
    fn disk_geometry() {
        let d = make_disk(1, 1.0).unwrap();
        assert_eq!(d.mesh.face_count(), 6);
        let perim: f64 = (0..d.boundary.len())
            .map(|k| (d.mesh.position(d.boundary[k]) - d.mesh.position(d.boundary[(k + 1) % 6])).norm())
            .sum();
        assert!((perim - TAU).abs() / TAU < 0.05);

        let d = make_disk(8, 1.0).unwrap();
        assert!((d.mesh.total_area() - PI).abs() / PI < 0.01);
        assert_eq!(d.mesh.boundary_loops().len(), 1);
        assert_eq!(d.mesh.euler_characteristic(), 1);
        assert_eq!(d.mesh.boundary_loops()[0].len(), d.boundary.len());
        for &v in &d.boundary {
            assert!((d.mesh.position(v).norm() - 1.0).abs() < 1e-9);
        }
        for f in 0..d.mesh.face_count() {
            assert!(d.mesh.face_normal(f).z > 0.0, "disk face {f} is clockwise");
        }
        assert!(make_disk(0, 1.0).is_err());
    }

    #[test]
    fn face_geometry_matches_law_of_cosines() {
        let m = make_icosphere(2, 1.0).unwrap();
        for f in 0..m.face_count() {
            let c = m.face_coords(f);
            let [e0, e1, e2] = m.face_edges(f);
            assert_relative_eq!((c[1] - c[0]).norm(), m.edge_length(e0), max_relative = 1e-12);
            assert_relative_eq!((c[2] - c[1]).norm(), m.edge_length(e1), max_relative = 1e-12);
            assert_relative_eq!((c[0] - c[2]).norm(), m.edge_length(e2), max_relative = 1e-12);
            let cross = (c[1] - c[0]).perp(&(c[2] - c[0]));
            assert!(cross > 0.0);
            assert_relative_eq!(0.5 * cross, m.face_area(f), max_relative = 1e-12);
            let a = m.face_angles(f);
            assert_relative_eq!(a[0] + a[1] + a[2], PI, epsilon = 1e-12);
            // hat-function gradients reproduce a linear function
            let g = m.face_basis_gradients(f);
            let sum = g[0] + g[1] + g[2];
            assert!(sum.norm() < 1e-9);
            assert_relative_eq!(g[1].dot(&(c[1] - c[0])), 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn stars_are_cyclic() {
        let m = make_icosphere(1, 1.0).unwrap();
        for v in 0..m.vertex_count() {
            let s = m.star(v);
            assert!(s.interior);
            assert_eq!(s.neighbors.len(), s.faces.len());
            for (k, &f) in s.faces.iter().enumerate() {
                let t = m.face(f);
                let c = m.corner_of(f, v);
                assert_eq!(t[(c + 1) % 3], s.neighbors[k]);
                assert_eq!(t[(c + 2) % 3], s.neighbors[(k + 1) % s.neighbors.len()]);
            }
        }
    }

    #[test]
    fn load_tetrahedron() {
        let m = load_mesh(TETRA).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.genus(), 0);
        let round = load_mesh(&m.to_off()).unwrap();
        assert_eq!(round.faces(), m.faces());
    }

    #[test]
    fn load_errors_are_distinct() {
        assert!(matches!(load_mesh(""), Err(Error::Parse { .. })));
        assert!(matches!(load_mesh("4 6 x"), Err(Error::Parse { .. })));
        let three = "5 0 3\n0 0 0\n1 0 0\n0 1 0\n0 -1 0\n0 0 1\n3 0 1 2\n3 1 0 3\n3 0 1 4\n";
        assert!(matches!(load_mesh(three), Err(Error::NonManifoldEdge(0, 1, 3))));
        let flipped = TETRA.replace("3 1 3 2", "3 1 2 3");
        assert!(matches!(load_mesh(&flipped), Err(Error::InconsistentOrientation(..))));
        let open = "4 0 2\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n3 0 1 2\n3 1 3 2\n";
        assert!(matches!(load_mesh(open), Err(Error::Boundary(..))));
        let wrong_e = TETRA.replace("4 6 4", "4 7 4");
        assert!(matches!(load_mesh(&wrong_e), Err(Error::Parse { .. })));
    }
}
