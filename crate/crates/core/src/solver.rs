//! Search for low-volume sections.
//!
//! A singular point of index `±2m` is realized as `2m` faces of index `±1`
//! that share vertices pairwise (a single face cannot wind twice). The
//! initializer places these patterns, [`minimize_inner`] descends the volume
//! with all face indices frozen, and [`outer_search`] moves, merges, creates
//! and cancels singular points.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::{euler_number, Connection};
use crate::distance::{distance_field, face_hops, locate_point, vertex_hops, vertex_separation, SurfacePoint};
use crate::energy::{EnergyModel, Functional};
use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, CsrMatrix};
use crate::mesh::{Point3, SurfaceMesh};
use crate::section::{cluster_singularities, edge_differences, face_indices_from, DiscreteSection, SingularityRecord};
use crate::wrap_angle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub max_inner_iterations: usize,
    /// Relative energy decrease below which inner descent counts as stalled.
    pub inner_tolerance: f64,
    pub line_search_shrink: f64,
    pub outer_move_budget: usize,
    pub multistart: usize,
    pub seed: u64,
    pub epsilon_start: f64,
    pub epsilon_factor: f64,
    pub epsilon_min: f64,
    pub refinement_depth: u32,
    pub threads: usize,
    /// Tolerance and iteration budget of the final descent on the winning section.
    pub polish_tolerance: f64,
    pub polish_iterations: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            max_inner_iterations: 3000,
            inner_tolerance: 1e-9,
            line_search_shrink: 0.5,
            outer_move_budget: 12,
            multistart: 8,
            seed: 0,
            epsilon_start: 1e-3,
            epsilon_factor: 0.1,
            epsilon_min: 1e-6,
            refinement_depth: 4,
            threads: 1,
            polish_tolerance: 1e-13,
            polish_iterations: 20000,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.max_inner_iterations == 0 || self.multistart == 0 || self.threads == 0 {
            return bad("iteration, multistart and thread counts must be positive");
        }
        if !(self.inner_tolerance > 0.0 && self.inner_tolerance < 1.0) {
            return bad("inner tolerance must lie in (0, 1)");
        }
        if !(self.polish_tolerance > 0.0 && self.polish_tolerance < 1.0) {
            return bad("polish tolerance must lie in (0, 1)");
        }
        if !(self.line_search_shrink > 0.0 && self.line_search_shrink < 1.0) {
            return bad("line-search shrink factor must lie in (0, 1)");
        }
        if !(self.epsilon_start > 0.0 && self.epsilon_min > 0.0 && self.epsilon_min <= self.epsilon_start) {
            return bad("smoothing schedule must be positive and decreasing");
        }
        if !(self.epsilon_factor > 0.0 && self.epsilon_factor < 1.0) {
            return bad("smoothing factor must lie in (0, 1)");
        }
        if self.refinement_depth > 6 {
            return bad("refinement depth must be at most 6");
        }
        Ok(())
    }

    pub fn model(&self) -> Result<EnergyModel> {
        EnergyModel::new(self.refinement_depth)
    }
}

/// Global structure of the closed surface formed by the section's graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub genus: usize,
    pub euler_number: i64,
    pub singularity_count: usize,
    pub indices: Vec<i64>,
    /// `χ(S) = 2 − 2g − n`.
    pub euler_characteristic: i64,
    pub orientable: bool,
}

impl TopologyReport {
    pub fn from_section(section: &DiscreteSection) -> Result<Self> {
        let mesh = section.mesh();
        let e = euler_number(section.connection())?;
        let recs = section.singular_faces();
        let indices: Vec<i64> = recs.iter().map(|r| r.index).collect();
        if indices.iter().any(|k| k % 2 != 0) {
            return Err(Error::Inconsistent(format!("odd singularity index in {indices:?}")));
        }
        if indices.iter().sum::<i64>() != e {
            return Err(Error::Inconsistent(format!("indices {indices:?} do not sum to e = {e}")));
        }
        let n = indices.len();
        Ok(TopologyReport {
            genus: mesh.genus(),
            euler_number: e,
            singularity_count: n,
            indices,
            euler_characteristic: 2 - 2 * mesh.genus() as i64 - n as i64,
            orientable: n == 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HConeReport {
    pub singularity: usize,
    pub center: [f64; 3],
    pub lambdas: Vec<f64>,
    pub radii: Vec<f64>,
    /// Profile `g_λ` sampled at the angles `2πj/N`.
    pub profiles: Vec<Vec<f64>>,
    pub degrees: Vec<i64>,
    pub degree: i64,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub section: DiscreteSection,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub rejected_steps: usize,
}

/// Picks `count` faces of one sign around `anchor`, each sharing a vertex with
/// an earlier pick. Faces three dual steps apart from every earlier pick are
/// preferred, two steps are accepted when no such face exists.
fn pattern_faces(mesh: &SurfaceMesh, anchor: usize, count: usize, blocked: &[bool]) -> Option<Vec<usize>> {
    if blocked[anchor] {
        return None;
    }
    let mut chosen = vec![anchor];
    let mut hops = vec![face_hops(mesh, &[anchor])];
    while chosen.len() < count {
        let mut cands: Vec<usize> = chosen
            .iter()
            .flat_map(|&f| mesh.face(f))
            .flat_map(|v| mesh.star(v).faces.iter().copied())
            .filter(|&g| !blocked[g] && hops.iter().all(|h| h[g] >= 2))
            .collect();
        cands.sort_unstable();
        cands.dedup();
        let spread = |g: usize| hops.iter().map(|h| h[g]).sum::<usize>();
        let best = cands
            .into_iter()
            .min_by_key(|&g| (!hops.iter().all(|h| h[g] >= 3), std::cmp::Reverse(spread(g)), g))?;
        hops.push(face_hops(mesh, &[best]));
        chosen.push(best);
    }
    Some(chosen)
}

fn pattern_vertices(mesh: &SurfaceMesh, faces: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = faces.iter().flat_map(|&f| mesh.face(f)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Face index targets for singular points given as `(anchor face, index)`.
///
/// Patterns are built in order; faces touching a vertex within one edge of an
/// earlier pattern are unavailable, which keeps the points at least two edges apart.
pub fn singularity_pattern(mesh: &SurfaceMesh, points: &[(usize, i64)]) -> Result<Vec<i64>> {
    let mut seen = HashSet::new();
    for &(f, k) in points {
        if f >= mesh.face_count() {
            return Err(Error::InvalidArgument(format!("no face {f}")));
        }
        if !seen.insert(f) {
            return Err(Error::InvalidArgument(format!("face {f} is listed twice")));
        }
        if k == 0 || k % 2 != 0 {
            return Err(Error::InvalidArgument(format!("singular points need a nonzero even index, got {k}")));
        }
    }
    let mut target = vec![0i64; mesh.face_count()];
    let mut blocked = vec![false; mesh.face_count()];
    for &(f, k) in points {
        let faces = pattern_faces(mesh, f, k.unsigned_abs() as usize, &blocked).ok_or_else(|| {
            Error::InvalidArgument(format!("no room for a singular point of index {k} at face {f}"))
        })?;
        for &g in &faces {
            target[g] = k.signum();
        }
        let hops = vertex_hops(mesh, &pattern_vertices(mesh, &faces));
        for (g, b) in blocked.iter_mut().enumerate() {
            if mesh.face(g).iter().any(|&v| hops[v] <= 1) {
                *b = true;
            }
        }
    }
    Ok(target)
}

/// Section with singular points of index `2·sign` at the given faces.
pub fn initialize(mesh: Arc<SurfaceMesh>, conn: Arc<Connection>, points: &[(usize, i64)]) -> Result<DiscreteSection> {
    for &(_, s) in points {
        if s != 1 && s != -1 {
            return Err(Error::InvalidArgument(format!("point signs must be ±1, got {s}")));
        }
    }
    let pts: Vec<(usize, i64)> = points.iter().map(|&(f, s)| (f, 2 * s)).collect();
    initialize_with_indices(mesh, conn, &pts)
}

/// Like [`initialize`], with an arbitrary nonzero even index per point.
///
/// The covariant differences are the minimum-norm solution of the face
/// constraints `Σ_∂f δ = 2π k_f − Ω_f`; angles are integrated along a
/// breadth-first tree and then relaxed once in least squares against `δ`.
pub fn initialize_with_indices(mesh: Arc<SurfaceMesh>, conn: Arc<Connection>, points: &[(usize, i64)]) -> Result<DiscreteSection> {
    if !mesh.is_closed() {
        return Err(Error::InvalidMesh("the initializer needs a closed surface".into()));
    }
    let e = euler_number(&conn)?;
    let total: i64 = points.iter().map(|p| p.1).sum();
    if total != e {
        return Err(Error::InvalidArgument(format!("singularity indices sum to {total}, but the Euler number is {e}")));
    }
    let target = singularity_pattern(&mesh, points)?;
    let theta = integrate_pattern(&mesh, &conn, &target);
    let diffs = edge_differences(&mesh, &conn, &theta);
    if face_indices_from(&mesh, &conn, &diffs) != target {
        return Err(Error::Inconsistent("initial angles do not realize the requested singularities".into()));
    }
    DiscreteSection::new(mesh, conn, theta)
}

/// Covariant differences with the prescribed face circulations. Starting from
/// the minimum-norm solution, edge weights are raised where `|δ|` approaches
/// `π` (iteratively reweighted least squares), so that no difference wraps.
fn pattern_differences(mesh: &SurfaceMesh, conn: &Connection, target: &[i64]) -> Vec<f64> {
    let nf = mesh.face_count();
    let b: Vec<f64> = (0..nf).map(|f| TAU * target[f] as f64 - conn.curvature(f)).collect();
    let faces: Vec<(usize, usize)> = (0..mesh.edge_count())
        .map(|e| {
            let [p, m] = mesh.edge_faces(e);
            (p.unwrap(), m.unwrap())
        })
        .collect();
    let mut w = vec![1.0; mesh.edge_count()];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..15 {
        let mut t = Vec::with_capacity(4 * faces.len());
        for (e, &(p, m)) in faces.iter().enumerate() {
            let c = 1.0 / w[e];
            t.extend([(p, p, c), (m, m, c), (p, m, -c), (m, p, -c)]);
        }
        let a = CsrMatrix::from_triplets(nf, t);
        let (psi, _) = conjugate_gradient(&a, &b, 1e-13, 20 * nf + 100, true);
        let delta: Vec<f64> = faces.iter().enumerate().map(|(e, &(p, m))| (psi[p] - psi[m]) / w[e]).collect();
        let peak = max_abs(&delta);
        if best.as_ref().map_or(true, |(bp, _)| peak < *bp) {
            best = Some((peak, delta.clone()));
        }
        if peak < 0.75 * std::f64::consts::PI {
            break;
        }
        for (we, d) in w.iter_mut().zip(&delta) {
            *we = (*we * (d.abs() / 1.5).max(1.0).powi(2)).min(100.0);
        }
    }
    best.unwrap().1
}

fn integrate_pattern(mesh: &SurfaceMesh, conn: &Connection, target: &[i64]) -> Vec<f64> {
    let delta = pattern_differences(mesh, conn, target);
    let nv = mesh.vertex_count();
    let mut theta = vec![f64::NAN; nv];
    theta[0] = 0.0;
    let mut queue = std::collections::VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        for &w in &mesh.star(v).neighbors {
            if theta[w].is_nan() {
                let e = mesh.edge_between(v, w).unwrap();
                let s = if v < w { 1.0 } else { -1.0 };
                theta[w] = theta[v] + s * (conn.rho(e) + delta[e]);
                queue.push_back(w);
            }
        }
    }
    // least-squares relaxation of the residual against δ
    let actual = edge_differences(mesh, conn, &theta);
    let r: Vec<f64> = delta.iter().zip(&actual).map(|(d, a)| wrap_angle(d - a)).collect();
    if r.iter().any(|x| x.abs() > 1e-9) {
        let mut trip = Vec::with_capacity(4 * mesh.edge_count());
        let mut rhs = vec![0.0; nv];
        for (e, &[lo, hi]) in mesh.edges().iter().enumerate() {
            trip.extend([(lo, lo, 1.0), (hi, hi, 1.0), (lo, hi, -1.0), (hi, lo, -1.0)]);
            rhs[hi] += r[e];
            rhs[lo] -= r[e];
        }
        let lap = CsrMatrix::from_triplets(nv, trip);
        let (phi, _) = conjugate_gradient(&lap, &rhs, 1e-12, 20 * nv + 100, true);
        for (t, p) in theta.iter_mut().zip(&phi) {
            *t += p;
        }
    }
    theta
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Gradient descent on the vertex angles with every face index frozen.
///
/// Steps start from a Barzilai–Borwein estimate, are capped at half a radian
/// per vertex, and are halved until they keep all face indices and satisfy
/// the Armijo condition.
pub fn minimize_inner(section: &DiscreteSection, functional: Functional, params: &SolverParams) -> Result<InnerResult> {
    params.validate()?;
    let model = params.model()?;
    let mesh = section.mesh().clone();
    let conn = section.connection().clone();
    let frozen = section.face_indices();
    let mut theta = section.theta().to_vec();
    let (mut energy, mut grad) = model.evaluate_angles_with_gradient(&mesh, &conn, &theta, functional)?;
    let mut trace = vec![energy];
    let mut alpha = 0.0;
    let mut stalled = 0;
    let mut rejected = 0;
    let mut converged = false;
    let mut iterations = 0;
    let shrink = params.line_search_shrink;
    while iterations < params.max_inner_iterations {
        // vertices of faces that a step would push across an index change are held
        let mut dir = grad.clone();
        let mut gmax = max_abs(&dir);
        if gmax == 0.0 {
            converged = true;
            break;
        }
        if !(alpha > 0.0) {
            alpha = 0.1 / gmax;
        }
        alpha = alpha.min(0.5 / gmax);
        let mut accepted = None;
        let mut holds = 0;
        while alpha * gmax > 1e-14 {
            let trial: Vec<f64> = theta.iter().zip(&dir).map(|(t, g)| t - alpha * g).collect();
            let diffs = edge_differences(&mesh, &conn, &trial);
            let idx = face_indices_from(&mesh, &conn, &diffs);
            if idx != frozen {
                rejected += 1;
                if holds < 8 {
                    holds += 1;
                    for f in (0..idx.len()).filter(|&f| idx[f] != frozen[f]) {
                        for v in mesh.face(f) {
                            dir[v] = 0.0;
                        }
                    }
                    gmax = max_abs(&dir);
                    if gmax == 0.0 {
                        break;
                    }
                } else {
                    alpha *= shrink;
                }
                continue;
            }
            let gg: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
            let e_trial = model.evaluate_angles(&mesh, &conn, &trial, functional)?;
            if e_trial <= energy - 1e-4 * alpha * gg {
                accepted = Some((trial, e_trial));
                break;
            }
            alpha *= shrink;
        }
        iterations += 1;
        let Some((trial, _)) = accepted else {
            converged = true;
            break;
        };
        let (e_new, g_new) = model.evaluate_angles_with_gradient(&mesh, &conn, &trial, functional)?;
        let mut sy = 0.0;
        let mut ss = 0.0;
        for v in 0..trial.len() {
            let s = trial[v] - theta[v];
            sy += s * (g_new[v] - grad[v]);
            ss += s * s;
        }
        alpha = if sy > 0.0 { ss / sy } else { 2.0 * alpha };
        let rel = (energy - e_new) / energy.abs().max(f64::MIN_POSITIVE);
        theta = trial;
        energy = e_new;
        grad = g_new;
        trace.push(energy);
        if rel < params.inner_tolerance {
            stalled += 1;
            if stalled >= 3 {
                converged = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    Ok(InnerResult {
        section: section.with_theta(theta)?,
        trace,
        iterations,
        converged,
        rejected_steps: rejected,
    })
}

/// Minimizes the smoothed twisting, reducing the smoothing between stages.
pub fn minimize_twisting(section: &DiscreteSection, params: &SolverParams) -> Result<InnerResult> {
    params.validate()?;
    let mut eps = params.epsilon_start;
    let mut current = section.clone();
    let mut trace = Vec::new();
    let (mut iterations, mut rejected) = (0, 0);
    let mut converged;
    loop {
        let r = minimize_inner(&current, Functional::Twisting { epsilon: eps }, params)?;
        trace.extend(&r.trace);
        iterations += r.iterations;
        rejected += r.rejected_steps;
        converged = r.converged;
        current = r.section;
        if eps <= params.epsilon_min * (1.0 + 1e-12) {
            break;
        }
        eps = (eps * params.epsilon_factor).max(params.epsilon_min);
    }
    Ok(InnerResult { section: current, trace, iterations, converged, rejected_steps: rejected })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub start: usize,
    pub volume: f64,
    pub singularity_count: usize,
    pub indices: Vec<i64>,
    pub anchors: Vec<usize>,
    pub attempted_moves: usize,
    pub accepted_moves: usize,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub section: DiscreteSection,
    pub topology: TopologyReport,
    pub volume: f64,
    pub best_start: usize,
    pub starts: Vec<StartSummary>,
    /// Energies of the winning start: initial descent, then each accepted move.
    pub trace: Vec<f64>,
}

type Config = Vec<(usize, i64)>;

struct State {
    config: Config,
    init_theta: Vec<f64>,
    section: DiscreteSection,
    volume: f64,
}

struct Searcher<'a> {
    mesh: Arc<SurfaceMesh>,
    conn: Arc<Connection>,
    params: &'a SolverParams,
    model: EnergyModel,
}

impl Searcher<'_> {
    fn valid(&self, section: &DiscreteSection, config: &Config) -> bool {
        let recs = section.singular_faces();
        if recs.len() != config.len() || recs.iter().any(|r| r.index.abs() != 2) {
            return false;
        }
        let verts: Vec<Vec<usize>> = recs.iter().map(|r| pattern_vertices(&self.mesh, &r.faces)).collect();
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                if vertex_separation(&self.mesh, &verts[i], &verts[j]) < 2 {
                    return false;
                }
            }
        }
        true
    }

    fn fresh(&self, config: &Config) -> Result<(Vec<f64>, DiscreteSection)> {
        let s = initialize_with_indices(self.mesh.clone(), self.conn.clone(), config)?;
        Ok((s.theta().to_vec(), s))
    }

    /// Minimizes from a warm start derived from the current state, or from scratch.
    fn attempt(&self, cur: &State, config: Config, iters: &mut usize) -> Result<Option<(State, Vec<f64>)>> {
        let Ok((init_theta, init)) = self.fresh(&config) else { return Ok(None) };
        let target = init.face_indices();
        let warm: Vec<f64> = cur
            .section
            .theta()
            .iter()
            .zip(&init_theta)
            .zip(&cur.init_theta)
            .map(|((t, n), o)| t + n - o)
            .collect();
        let diffs = edge_differences(&self.mesh, &self.conn, &warm);
        let start = if face_indices_from(&self.mesh, &self.conn, &diffs) == target {
            init.with_theta(warm)?
        } else {
            init
        };
        let r = minimize_inner(&start, Functional::Volume, self.params)?;
        *iters += r.iterations;
        if !self.valid(&r.section, &config) {
            return Ok(None);
        }
        let volume = *r.trace.last().unwrap();
        Ok(Some((State { config, init_theta, section: r.section, volume }, r.trace)))
    }

    fn placement(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<usize> {
        let nf = self.mesh.face_count();
        let mut chosen = Vec::new();
        if count == 0 {
            return chosen;
        }
        chosen.push(rng.gen_range(0..nf));
        while chosen.len() < count {
            let hops = face_hops(&self.mesh, &chosen);
            let best = (0..nf).max_by_key(|&f| (hops[f], std::cmp::Reverse(f))).unwrap();
            chosen.push(best);
        }
        chosen
    }

    fn moves(&self, config: &Config) -> Vec<Config> {
        let mut out = Vec::new();
        for i in 0..config.len() {
            let mut nb: Vec<usize> = self.mesh.face_neighbors(config[i].0).collect();
            nb.sort_unstable();
            for g in nb {
                let mut c = config.clone();
                c[i].0 = g;
                out.push(c);
            }
        }
        // merge the first same-sign pair and split again along the best direction
        'merge: for i in 0..config.len() {
            for j in i + 1..config.len() {
                if config[i].1 == config[j].1 {
                    if let Some(c) = self.resplit(config, i, j) {
                        out.push(c);
                    }
                    break 'merge;
                }
            }
        }
        if let Some(c) = self.add_pair(config) {
            out.push(c);
        }
        if let Some(c) = self.delete_pair(config) {
            out.push(c);
        }
        out
    }

    fn resplit(&self, config: &Config, i: usize, j: usize) -> Option<Config> {
        let (f, k) = config[i];
        let rest: Config = config.iter().enumerate().filter(|&(x, _)| x != i && x != j).map(|(_, &p)| p).collect();
        let mut merged = rest.clone();
        merged.push((f, 2 * k));
        self.fresh(&merged).ok()?;
        let hops = face_hops(&self.mesh, &[f]);
        let mut best: Option<(f64, Config)> = None;
        for g in (0..self.mesh.face_count()).filter(|&g| hops[g] == 4) {
            let mut c = rest.clone();
            c.push((f, k));
            c.push((g, k));
            let Ok((_, s)) = self.fresh(&c) else { continue };
            let Ok(v) = self.model.volume(&s) else { continue };
            if best.as_ref().map_or(true, |(bv, _)| v < *bv) {
                best = Some((v, c));
            }
        }
        best.map(|b| b.1)
    }

    fn add_pair(&self, config: &Config) -> Option<Config> {
        let nf = self.mesh.face_count();
        let anchors: Vec<usize> = config.iter().map(|p| p.0).collect();
        let plus = if anchors.is_empty() {
            0
        } else {
            let hops = face_hops(&self.mesh, &anchors);
            (0..nf).max_by_key(|&f| (hops[f], std::cmp::Reverse(f))).unwrap()
        };
        let hops = face_hops(&self.mesh, &[plus]);
        let minus = (0..nf).find(|&f| hops[f] == 4)?;
        let mut c = config.clone();
        c.push((plus, 2));
        c.push((minus, -2));
        Some(c)
    }

    fn delete_pair(&self, config: &Config) -> Option<Config> {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 0..config.len() {
            let hops = face_hops(&self.mesh, &[config[i].0]);
            for j in 0..config.len() {
                if config[i].1 > 0 && config[j].1 < 0 {
                    let d = hops[config[j].0];
                    if best.map_or(true, |b| d < b.0) {
                        best = Some((d, i, j));
                    }
                }
            }
        }
        let (_, i, j) = best?;
        Some(config.iter().enumerate().filter(|&(x, _)| x != i && x != j).map(|(_, &p)| p).collect())
    }

    fn run_start(&self, start: usize, e: i64) -> Result<Option<(StartSummary, State, Vec<f64>)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(start as u64));
        let n = (e.unsigned_abs() / 2) as usize;
        let sign = if e >= 0 { 2 } else { -2 };
        let anchors = self.placement(&mut rng, n);
        let config: Config = anchors.iter().map(|&f| (f, sign)).collect();
        let Ok((init_theta, init)) = self.fresh(&config) else { return Ok(None) };
        let r = minimize_inner(&init, Functional::Volume, self.params)?;
        let mut iters = r.iterations;
        let mut trace = r.trace.clone();
        let mut cur = State { volume: *r.trace.last().unwrap(), config, init_theta, section: r.section };
        if !self.valid(&cur.section, &cur.config) {
            return Ok(None);
        }
        let (mut attempted, mut accepted) = (0, 0);
        let mut cursor = 0;
        let mut since_accept = 0;
        while attempted < self.params.outer_move_budget {
            let moves = self.moves(&cur.config);
            if moves.is_empty() || since_accept >= moves.len() {
                break;
            }
            let cand = moves[cursor % moves.len()].clone();
            cursor += 1;
            attempted += 1;
            since_accept += 1;
            if let Some((next, t)) = self.attempt(&cur, cand, &mut iters)? {
                if cur.volume - next.volume > self.params.inner_tolerance * cur.volume {
                    trace.extend(t);
                    cur = next;
                    accepted += 1;
                    since_accept = 0;
                }
            }
        }
        let topo = TopologyReport::from_section(&cur.section)?;
        let summary = StartSummary {
            start,
            volume: cur.volume,
            singularity_count: topo.singularity_count,
            indices: topo.indices,
            anchors: cur.config.iter().map(|p| p.0).collect(),
            attempted_moves: attempted,
            accepted_moves: accepted,
            inner_iterations: iters,
        };
        Ok(Some((summary, cur, trace)))
    }
}

/// Multistart search over singularity placements for the least volume.
pub fn outer_search(mesh: Arc<SurfaceMesh>, conn: Arc<Connection>, params: &SolverParams) -> Result<SearchResult> {
    params.validate()?;
    let e = euler_number(&conn)?;
    if e % 2 != 0 {
        return Err(Error::OddEulerNumber(e));
    }
    let searcher = Searcher { mesh, conn, params, model: params.model()? };
    let starts: Vec<usize> = (0..params.multistart).collect();
    let mut results: Vec<Option<(StartSummary, State, Vec<f64>)>> = Vec::new();
    if params.threads <= 1 {
        for &s in &starts {
            results.push(searcher.run_start(s, e)?);
        }
    } else {
        let chunks: Vec<Vec<usize>> = starts.chunks(starts.len().div_ceil(params.threads)).map(|c| c.to_vec()).collect();
        let outputs: Vec<Result<Vec<_>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| {
                    let searcher = &searcher;
                    scope.spawn(move || chunk.iter().map(|&s| searcher.run_start(s, e)).collect::<Result<Vec<_>>>())
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("search thread panicked")).collect()
        });
        for o in outputs {
            results.extend(o?);
        }
    }
    let mut best: Option<(StartSummary, State, Vec<f64>)> = None;
    let mut summaries = Vec::new();
    for r in results.into_iter().flatten() {
        summaries.push(r.0.clone());
        if best.as_ref().map_or(true, |b| r.1.volume < b.1.volume) {
            best = Some(r);
        }
    }
    let (summary, state, mut trace) =
        best.ok_or_else(|| Error::Inconsistent("no start produced a valid configuration".into()))?;
    let mut section = state.section;
    let mut volume = state.volume;
    if params.polish_iterations > 0 {
        let polish = SolverParams {
            inner_tolerance: params.polish_tolerance,
            max_inner_iterations: params.polish_iterations,
            ..params.clone()
        };
        let r = minimize_inner(&section, Functional::Volume, &polish)?;
        trace.extend(&r.trace[1..]);
        volume = *r.trace.last().unwrap();
        section = r.section;
    }
    let topology = TopologyReport::from_section(&section)?;
    Ok(SearchResult {
        section,
        topology,
        volume,
        best_start: summary.start,
        starts: summaries,
        trace,
    })
}

fn tangent_frame(normal: Point3) -> (Point3, Point3) {
    let helper = if normal.x.abs() < 0.9 { Point3::x() } else { Point3::y() };
    let e1 = (helper - normal * helper.dot(&normal)).normalize();
    (e1, normal.cross(&e1))
}

fn mean_normal(mesh: &SurfaceMesh, faces: &[usize]) -> Point3 {
    let mut n = Point3::zeros();
    for &f in faces {
        n += mesh.face_normal(f) * mesh.face_area(f);
    }
    n.normalize()
}

/// Refines a singular point's location: the point closest, in least squares,
/// to the lines through nearby face barycenters orthogonal to `∇u`.
pub fn refine_center(section: &DiscreteSection, record: &SingularityRecord) -> Result<Point3> {
    let mesh = section.mesh();
    let diffs = section.edge_differences();
    let indices = face_indices_from(mesh, section.connection(), &diffs);
    let verts = pattern_vertices(mesh, &record.faces);
    let hops = vertex_hops(mesh, &verts);
    let p0 = Point3::from(record.position);
    let normal = mean_normal(mesh, &record.faces);
    let (e1, e2) = tangent_frame(normal);
    let mut a = nalgebra::Matrix2::<f64>::zeros();
    let mut b = nalgebra::Vector2::<f64>::zeros();
    for f in 0..mesh.face_count() {
        if indices[f] != 0 || mesh.face(f).iter().any(|&v| hops[v] > 2) {
            continue;
        }
        let g = crate::energy::covariant_gradient(section, f)?;
        let (fx, fy, _) = mesh.face_frame_3d(f);
        let g3 = fx * g.x + fy * g.y;
        let gt = nalgebra::Vector2::new(g3.dot(&e1), g3.dot(&e2));
        let w = mesh.face_area(f);
        let n2 = gt.norm_squared();
        if n2 == 0.0 {
            continue;
        }
        let q = mesh.face_barycenter(f) - p0;
        let bq = nalgebra::Vector2::new(q.dot(&e1), q.dot(&e2));
        let m = gt * gt.transpose() * (w / n2.sqrt());
        a += m;
        b += m * bq;
    }
    match a.try_inverse() {
        Some(inv) => {
            let c = inv * b;
            Ok(p0 + e1 * c.x + e2 * c.y)
        }
        None => Ok(p0),
    }
}

const PROFILE_SAMPLES: usize = 64;

/// H-cone profiles of the section around a singular point.
///
/// For each `λ` the section is traced along the level set of the distance to
/// the refined center at radius `R/λ`, accumulating its covariant change face
/// by face, and resampled at `N = 64` equally spaced polar angles. The integer
/// degree `k` and offset `c` of `g(θ) ≈ kθ + c` are fitted by least squares.
pub fn extract_hcone(section: &DiscreteSection, record: &SingularityRecord, lambdas: &[f64], radius: f64) -> Result<HConeReport> {
    let center = refine_center(section, record)?;
    let point = locate_point(section.mesh(), center)?;
    let mut report = hcone_at(section, point, &record.faces, lambdas, radius)?;
    report.singularity = record.face;
    Ok(report)
}

/// H-cone profiles around an arbitrary surface point; `own` lists the singular
/// faces that belong to the point itself.
pub fn hcone_at(section: &DiscreteSection, point: SurfacePoint, own: &[usize], lambdas: &[f64], radius: f64) -> Result<HConeReport> {
    let mesh = section.mesh();
    if !mesh.is_embedded() {
        return Err(Error::InvalidMesh("h-cone extraction needs vertex positions".into()));
    }
    if lambdas.is_empty() || lambdas[0] < 1.0 || lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("λ values must be increasing and at least 1".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let conn = section.connection();
    let diffs = section.edge_differences();
    let indices = face_indices_from(mesh, conn, &diffs);
    let dist = distance_field(mesh, point);
    let own: HashSet<usize> = own.iter().copied().collect();
    for f in 0..mesh.face_count() {
        if indices[f] != 0 && !own.contains(&f) && mesh.face(f).iter().any(|&v| dist[v] < radius) {
            return Err(Error::Region(format!("face {f} is singular within distance {radius} of the center")));
        }
    }
    let reach = if mesh.is_closed() {
        dist.iter().cloned().fold(0.0, f64::max)
    } else {
        mesh.boundary_loops().iter().flatten().map(|&v| dist[v]).fold(f64::INFINITY, f64::min)
    };
    if radius >= reach {
        return Err(Error::Region(format!("radius {radius} leaves the available region")));
    }
    let c3 = point.position(mesh);
    let normal = mesh.face_normal(point.face);
    let (e1, e2) = tangent_frame(normal);
    let polar = |p: Point3| {
        let q = p - c3;
        q.dot(&e2).atan2(q.dot(&e1))
    };

    let mut radii = Vec::new();
    let mut profiles = Vec::new();
    let mut degrees = Vec::new();
    let mut residuals = Vec::new();
    for &lam in lambdas {
        let s = radius / lam;
        let (angles, values) = level_loop(section, &diffs, &indices, &dist, s, &polar)?;
        let g = resample(&angles, &values);
        let (k, res) = fit_degree(&g);
        radii.push(s);
        profiles.push(g);
        degrees.push(k);
        residuals.push(res);
    }
    let c = point.position(mesh);
    Ok(HConeReport {
        singularity: point.face,
        center: [c.x, c.y, c.z],
        lambdas: lambdas.to_vec(),
        radii,
        profiles,
        degree: *degrees.last().unwrap(),
        degrees,
        residuals,
    })
}

/// Walks the level set `dist = s`; returns unwrapped polar angles (increasing
/// by `2π` once around) and the accumulated section values at the crossings.
fn level_loop(
    section: &DiscreteSection,
    diffs: &[f64],
    indices: &[i64],
    dist: &[f64],
    s: f64,
    polar: &dyn Fn(Point3) -> f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mesh = section.mesh();
    let conn = section.connection();
    let inside = |v: usize| dist[v] < s;
    let crossing = |e: usize| {
        let [a, b] = mesh.edge(e);
        inside(a) != inside(b)
    };
    // faces cut by the level set, each with its two crossed sides
    let mut face_cuts: Vec<Option<[usize; 2]>> = vec![None; mesh.face_count()];
    for f in 0..mesh.face_count() {
        let fe = mesh.face_edges(f);
        let cut: Vec<usize> = fe.iter().copied().filter(|&e| crossing(e)).collect();
        if cut.len() == 2 {
            if indices[f] != 0 {
                return Err(Error::Region(format!("singular face {f} lies on the circle of radius {s}")));
            }
            face_cuts[f] = Some([cut[0], cut[1]]);
        }
    }
    // longest closed chain of cut faces
    let mut used = vec![false; mesh.face_count()];
    let mut best: Vec<(usize, usize, usize)> = Vec::new();
    for f0 in 0..mesh.face_count() {
        if used[f0] || face_cuts[f0].is_none() {
            continue;
        }
        let mut chain = Vec::new();
        let mut f = f0;
        let mut entry = face_cuts[f0].unwrap()[0];
        loop {
            used[f] = true;
            let [a, b] = face_cuts[f].unwrap();
            let exit = if a == entry { b } else { a };
            chain.push((f, entry, exit));
            let [p, m] = mesh.edge_faces(exit);
            let next = match (p, m) {
                (Some(x), Some(y)) => if x == f { y } else { x },
                _ => break,
            };
            if next == f0 {
                break;
            }
            if used[next] || face_cuts[next].is_none() {
                chain.clear();
                break;
            }
            entry = exit;
            f = next;
        }
        if chain.len() > best.len() {
            best = chain;
        }
    }
    if best.len() < 3 {
        return Err(Error::Region(format!("no closed level curve at radius {s}")));
    }
    let point_on = |e: usize| {
        let [a, b] = mesh.edge(e);
        let t = (s - dist[a]) / (dist[b] - dist[a]);
        (mesh.position(a) * (1.0 - t) + mesh.position(b) * t, a, b, t)
    };
    // lifted linear value at a crossing on side `e` of face `f`
    let local_value = |f: usize, e: usize| {
        let t = mesh.face(f);
        let fe = mesh.face_edges(f);
        let fs = mesh.face_edge_signs(f);
        let om = conn.curvature(f) / 3.0;
        let d: Vec<f64> = (0..3).map(|c| fs[c] * diffs[fe[c]] + om).collect();
        let u = [0.0, d[0], d[0] + d[1]];
        let c = fe.iter().position(|&x| x == e).unwrap();
        let (_, a, _, tt) = point_on(e);
        // parameter measured from corner c towards corner c+1
        let tc = if a == t[c] { tt } else { 1.0 - tt };
        u[c] + tc * d[c]
    };
    // orient the walk counterclockwise about the normal
    let mut turn = 0.0;
    for &(_, entry, exit) in &best {
        turn += wrap_angle(polar(point_on(exit).0) - polar(point_on(entry).0));
    }
    if (turn.abs() - TAU).abs() > 1e-6 {
        return Err(Error::Region(format!("level curve at radius {s} does not wind once around the center")));
    }
    if turn < 0.0 {
        best = best.into_iter().rev().map(|(f, entry, exit)| (f, exit, entry)).collect();
    }
    let mut angles = Vec::with_capacity(best.len() + 1);
    let mut values = Vec::with_capacity(best.len() + 1);
    let mut ang = polar(point_on(best[0].1).0);
    let mut acc = 0.0;
    angles.push(ang);
    values.push(acc);
    for &(f, entry, exit) in &best {
        acc += local_value(f, exit) - local_value(f, entry);
        ang += wrap_angle(polar(point_on(exit).0) - polar(point_on(entry).0));
        angles.push(ang);
        values.push(acc);
    }
    Ok((angles, values))
}

/// Samples the loop values at the angles `2πj/N`. The input runs once around,
/// its last entry closing the loop, and is extended by `(φ + 2π, g + G)`.
fn resample(angles: &[f64], values: &[f64]) -> Vec<f64> {
    let n = angles.len();
    let a0 = angles[0];
    let total = values[n - 1] - values[0];
    (0..PROFILE_SAMPLES)
        .map(|j| {
            let target = TAU * j as f64 / PROFILE_SAMPLES as f64;
            let k = ((target - a0) / TAU).floor();
            let x = target - k * TAU;
            let i = angles.partition_point(|&v| v <= x).clamp(1, n - 1);
            let (x0, x1, y0, y1) = (angles[i - 1], angles[i], values[i - 1], values[i]);
            let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
            y0 + t * (y1 - y0) + k * total
        })
        .collect()
}

/// Best integer `k` for `g(θ_j) ≈ kθ_j + c`, and the RMS residual.
fn fit_degree(g: &[f64]) -> (i64, f64) {
    let n = g.len();
    let theta: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
    let rough = ((g[n - 1] - g[0]) * n as f64 / (n - 1) as f64 / TAU).round() as i64;
    let mut best = (0, f64::INFINITY);
    for k in rough - 2..=rough + 2 {
        let c = (0..n).map(|j| g[j] - k as f64 * theta[j]).sum::<f64>() / n as f64;
        let rms = ((0..n).map(|j| (g[j] - k as f64 * theta[j] - c).powi(2)).sum::<f64>() / n as f64).sqrt();
        if rms < best.1 {
            best = (k, rms);
        }
    }
    best
}

/// Index-0 faces whose `‖∇u‖` exceeds `tolerance` times the 99th percentile
/// (nearest rank) of the index-0 gradient norms. Norms at rounding level are
/// never flagged.
pub fn regularity_check(section: &DiscreteSection, tolerance: f64, model: &EnergyModel) -> Result<Vec<usize>> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let norms = model.gradient_norms(section)?;
    let indices = section.face_indices();
    let regular: Vec<usize> = (0..norms.len()).filter(|&f| indices[f] == 0).collect();
    if regular.is_empty() {
        return Ok(Vec::new());
    }
    let mut sorted: Vec<f64> = regular.iter().map(|&f| norms[f]).collect();
    sorted.sort_by(f64::total_cmp);
    let rank = ((0.99 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let p99 = sorted[rank - 1];
    let floor = f64::EPSILON.sqrt();
    Ok(regular.into_iter().filter(|&f| norms[f] > tolerance * p99 && norms[f] > floor).collect())
}

/// Singular points of a section as used by the search: clusters of nonzero total index.
pub fn singular_points(section: &DiscreteSection) -> Vec<SingularityRecord> {
    cluster_singularities(section.mesh(), &section.face_indices()).into_iter().filter(|r| r.index != 0).collect()
}
