//! Intrinsic distances on a mesh.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{Point3, SurfaceMesh, Vec2};

/// A point on the surface given by a face and barycentric coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub face: usize,
    pub bary: [f64; 3],
}

impl SurfacePoint {
    pub fn barycenter(face: usize) -> Self {
        SurfacePoint { face, bary: [1.0 / 3.0; 3] }
    }

    pub fn at_vertex(mesh: &SurfaceMesh, v: usize) -> Self {
        let face = mesh.star(v).faces[0];
        let mut bary = [0.0; 3];
        bary[mesh.corner_of(face, v)] = 1.0;
        SurfacePoint { face, bary }
    }

    /// Coordinates in the frame of `self.face`.
    pub fn local(&self, mesh: &SurfaceMesh) -> Vec2 {
        let c = mesh.face_coords(self.face);
        c[0] * self.bary[0] + c[1] * self.bary[1] + c[2] * self.bary[2]
    }

    pub fn position(&self, mesh: &SurfaceMesh) -> Point3 {
        let t = mesh.face(self.face);
        mesh.position(t[0]) * self.bary[0] + mesh.position(t[1]) * self.bary[1] + mesh.position(t[2]) * self.bary[2]
    }
}

/// Finds the face of an embedded mesh nearest to `p` and the barycentric
/// coordinates of the projection of `p` onto it (clamped to the face).
pub fn locate_point(mesh: &SurfaceMesh, p: Point3) -> Result<SurfacePoint> {
    if !mesh.is_embedded() {
        return Err(Error::InvalidMesh("point location needs vertex positions".into()));
    }
    let mut best: Option<(f64, SurfacePoint)> = None;
    for f in 0..mesh.face_count() {
        let t = mesh.face(f);
        let (a, b, c) = (mesh.position(t[0]), mesh.position(t[1]), mesh.position(t[2]));
        let bary = closest_barycentric(p, a, b, c);
        let q = a * bary[0] + b * bary[1] + c * bary[2];
        let d = (q - p).norm();
        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, SurfacePoint { face: f, bary }));
        }
    }
    Ok(best.unwrap().1)
}

fn closest_barycentric(p: Point3, a: Point3, b: Point3, c: Point3) -> [f64; 3] {
    let n = (b - a).cross(&(c - a));
    let area2 = n.norm_squared();
    let q = p - n * ((p - a).dot(&n) / area2);
    let l = [
        (c - b).cross(&(q - b)).dot(&n) / area2,
        (a - c).cross(&(q - c)).dot(&n) / area2,
        (b - a).cross(&(q - a)).dot(&n) / area2,
    ];
    if l.iter().all(|&x| x >= 0.0) {
        return l;
    }
    // outside: the nearest point lies on one of the sides
    let seg = |x: Point3, y: Point3| -> f64 { ((p - x).dot(&(y - x)) / (y - x).norm_squared()).clamp(0.0, 1.0) };
    let cands = [
        { let s = seg(a, b); [1.0 - s, s, 0.0] },
        { let s = seg(b, c); [0.0, 1.0 - s, s] },
        { let s = seg(c, a); [s, 0.0, 1.0 - s] },
    ];
    let dist = |w: &[f64; 3]| (a * w[0] + b * w[1] + c * w[2] - p).norm();
    *cands.iter().min_by(|x, y| dist(x).total_cmp(&dist(y))).unwrap()
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distance at `c` obtained by unfolding the wavefront through the known side `a b`.
fn triangle_update(pa: Vec2, pb: Vec2, pc: Vec2, da: f64, db: f64) -> f64 {
    let fallback = (da + (pc - pa).norm()).min(db + (pc - pb).norm());
    let e = pb - pa;
    let len = e.norm();
    let u = e / len;
    let x = (da * da - db * db + len * len) / (2.0 * len);
    let y2 = da * da - x * x;
    if y2 < 0.0 {
        return fallback;
    }
    let mut nrm = Vec2::new(-u.y, u.x);
    if (pc - pa).dot(&nrm) > 0.0 {
        nrm = -nrm;
    }
    let s = pa + u * x + nrm * y2.sqrt();
    let ss = (s - pa).dot(&nrm);
    let sc = (pc - pa).dot(&nrm);
    if ss - sc <= 0.0 {
        return fallback;
    }
    let lam = ss / (ss - sc);
    let crossing = s + (pc - s) * lam;
    let t = (crossing - pa).dot(&u) / len;
    if (0.0..=1.0).contains(&t) {
        (pc - s).norm().min(fallback)
    } else {
        fallback
    }
}

/// Approximate geodesic distance from `source` to every vertex.
///
/// Dijkstra ordering with triangle unfolding updates; exact on flat regions
/// whenever the straight segment to the source stays inside the mesh.
pub fn distance_field(mesh: &SurfaceMesh, source: SurfacePoint) -> Vec<f64> {
    let nv = mesh.vertex_count();
    let mut dist = vec![f64::INFINITY; nv];
    let mut done = vec![false; nv];
    let mut heap = BinaryHeap::new();
    let q = source.local(mesh);
    let coords = mesh.face_coords(source.face);
    for (c, &v) in mesh.face(source.face).iter().enumerate() {
        dist[v] = (coords[c] - q).norm();
        heap.push(Item(dist[v], v));
    }
    while let Some(Item(d, v)) = heap.pop() {
        if done[v] || d > dist[v] {
            continue;
        }
        done[v] = true;
        for &f in &mesh.star(v).faces {
            let t = mesh.face(f);
            let pc = mesh.face_coords(f);
            let cv = mesh.corner_of(f, v);
            for k in 1..3 {
                let cw = (cv + k) % 3;
                let w = t[cw];
                if done[w] {
                    continue;
                }
                let co = (cv + 3 - k) % 3;
                let o = t[co];
                let mut cand = dist[v] + (pc[cw] - pc[cv]).norm();
                if done[o] {
                    cand = cand.min(triangle_update(pc[cv], pc[co], pc[cw], dist[v], dist[o]));
                }
                if cand < dist[w] {
                    dist[w] = cand;
                    heap.push(Item(cand, w));
                }
            }
        }
    }
    dist
}

/// Number of edges on a shortest vertex path from any of `sources`.
pub fn vertex_hops(mesh: &SurfaceMesh, sources: &[usize]) -> Vec<usize> {
    let mut hops = vec![usize::MAX; mesh.vertex_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if hops[s] != 0 {
            hops[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &w in &mesh.star(v).neighbors {
            if hops[w] == usize::MAX {
                hops[w] = hops[v] + 1;
                queue.push_back(w);
            }
        }
    }
    hops
}

/// Number of edge crossings on a shortest dual path from any of `sources`.
pub fn face_hops(mesh: &SurfaceMesh, sources: &[usize]) -> Vec<usize> {
    let mut hops = vec![usize::MAX; mesh.face_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if hops[s] != 0 {
            hops[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(f) = queue.pop_front() {
        for g in mesh.face_neighbors(f) {
            if hops[g] == usize::MAX {
                hops[g] = hops[f] + 1;
                queue.push_back(g);
            }
        }
    }
    hops
}

/// Edge separation between two vertex sets: the fewest edges on a path joining them.
pub fn vertex_separation(mesh: &SurfaceMesh, a: &[usize], b: &[usize]) -> usize {
    let hops = vertex_hops(mesh, a);
    b.iter().map(|&v| hops[v]).min().unwrap_or(usize::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_disk, make_flat_torus, make_icosphere};

    #[test]
    fn exact_on_a_flat_disk() {
        let d = make_disk(10, 1.0).unwrap();
        let m = &d.mesh;
        let dist = distance_field(m, SurfacePoint::at_vertex(m, d.center));
        for v in 0..m.vertex_count() {
            assert!((dist[v] - m.position(v).norm()).abs() < 1e-12, "vertex {v}");
        }
    }

    #[test]
    fn off_center_source_on_flat_torus() {
        let m = make_flat_torus(20, 20, 1.0, 1.0).unwrap();
        let src = SurfacePoint { face: 0, bary: [0.2, 0.5, 0.3] };
        let dist = distance_field(&m, src);
        let q = src.local(&m);
        // vertices near the source are reached through an unfolded straight line
        let c = m.face_coords(0);
        for k in 0..3 {
            assert!((dist[m.face(0)[k]] - (c[k] - q).norm()).abs() < 1e-14);
        }
        let max = dist.iter().cloned().fold(0.0, f64::max);
        assert!(max <= 0.5f64.hypot(0.5) + 1e-9);
        assert!(max > 0.6);
    }

    #[test]
    fn sphere_distances_close_to_great_circle() {
        let m = make_icosphere(4, 1.0).unwrap();
        let src = SurfacePoint::at_vertex(&m, 0);
        let dist = distance_field(&m, src);
        let p0 = m.position(0);
        let mut worst: f64 = 0.0;
        for v in 0..m.vertex_count() {
            let exact = p0.dot(&m.position(v)).clamp(-1.0, 1.0).acos();
            if exact < 1.5 {
                worst = worst.max((dist[v] - exact).abs());
            }
        }
        assert!(worst < 0.02, "worst {worst}");
    }

    #[test]
    fn locate_round_trip() {
        let m = make_icosphere(2, 1.0).unwrap();
        let p = SurfacePoint { face: 17, bary: [0.1, 0.6, 0.3] };
        let q = locate_point(&m, p.position(&m)).unwrap();
        assert_eq!(q.face, 17);
        for k in 0..3 {
            assert!((q.bary[k] - p.bary[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn hops() {
        let d = make_disk(3, 1.0).unwrap();
        let h = vertex_hops(&d.mesh, &[0]);
        assert_eq!(h[0], 0);
        assert_eq!(h[d.boundary[0]], 3);
        let fh = face_hops(&d.mesh, &[0]);
        assert_eq!(fh[0], 0);
        assert!(fh.iter().all(|&x| x != usize::MAX));
    }
}
