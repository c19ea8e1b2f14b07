//! Configuration-driven pipeline around the `circlebundle` library.
//!
//! A run reads a TOML file, builds the surface and connection, searches for a
//! low-volume section and writes reports into an output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use circlebundle::distance::{locate_point, SurfacePoint};
use circlebundle::energy::profile_csv;
use circlebundle::oracle::{run_oracles, OracleResult};
use circlebundle::section::singularities_csv;
use circlebundle::solver::{extract_hcone, outer_search, refine_center, SearchResult, StartSummary};
use circlebundle::{
    euler_number, fmt_f64, levi_civita_connection, load_mesh, make_connection, make_flat_torus, make_icosphere, Connection,
    EnergyReport, HConeReport, SingularityRecord, SolverParams, SurfaceMesh, TopologyReport,
};
use serde::{Deserialize, Serialize};

pub const ENV_OUTPUT_DIR: &str = "CIRCLEBUNDLE_OUTPUT_DIR";
pub const ENV_THREADS: &str = "CIRCLEBUNDLE_THREADS";
pub const ENV_ORACLE_TOL: &str = "CIRCLEBUNDLE_ORACLE_TOL";
pub const DEFAULT_ORACLE_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("inconsistency: {0}")]
    Inconsistent(String),
    #[error("oracle check failed: {0}")]
    Oracle(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Inconsistent(_) => 3,
            CliError::Oracle(_) => 1,
        }
    }
}

impl From<circlebundle::Error> for CliError {
    fn from(e: circlebundle::Error) -> Self {
        match e {
            circlebundle::Error::Inconsistent(_) => CliError::Inconsistent(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SurfaceSpec {
    Icosphere {
        #[serde(default = "default_subdivisions")]
        subdivisions: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    Torus {
        #[serde(default = "default_cells")]
        n: usize,
        #[serde(default = "default_cells")]
        m: usize,
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        b: f64,
    },
    File {
        path: PathBuf,
    },
}

fn default_subdivisions() -> usize {
    3
}
fn default_cells() -> usize {
    16
}
fn one() -> f64 {
    1.0
}
fn tau() -> f64 {
    std::f64::consts::TAU
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConnectionSpec {
    Constructed,
    LeviCivita,
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HConeSpec {
    pub lambdas: Vec<f64>,
    pub radius: f64,
}

impl Default for HConeSpec {
    fn default() -> Self {
        HConeSpec { lambdas: vec![2.0, 4.0, 8.0], radius: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub euler_number: i64,
    #[serde(default = "tau")]
    pub fiber_length: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub surface: SurfaceSpec,
    pub connection: ConnectionSpec,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub hcone: HConeSpec,
    /// Radii for the mass-ratio profile; by default eight radii up to `R/5`.
    #[serde(default)]
    pub profile_radii: Option<Vec<f64>>,
    /// Stretch factors tabulated in the energy report.
    #[serde(default = "default_report_lambdas")]
    pub report_lambdas: Vec<f64>,
}

fn default_report_lambdas() -> Vec<f64> {
    vec![10.0, 100.0, 1000.0]
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim().replace('\n', " ")))
    }

    /// Reads a config; relative paths inside it are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let SurfaceSpec::File { path } = &mut cfg.surface {
            fix(path);
        }
        if let ConnectionSpec::File { path } = &mut cfg.connection {
            fix(path);
        }
        if let Some(dir) = &mut cfg.output_dir {
            fix(dir);
        }
        Ok(cfg)
    }

    /// Applies the output-directory and thread-count environment overrides.
    pub fn apply_env(&mut self) -> Result<(), CliError> {
        if let Ok(dir) = std::env::var(ENV_OUTPUT_DIR) {
            self.output_dir = Some(PathBuf::from(dir));
        }
        if let Ok(t) = std::env::var(ENV_THREADS) {
            self.solver.threads = t
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{ENV_THREADS} must be a positive integer, got `{t}`")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.euler_number % 2 != 0 {
            return Err(CliError::Config(format!(
                "euler_number = {} is odd; the Euler number must be even for a section with index ±2 singularities to exist",
                self.euler_number
            )));
        }
        if !(self.fiber_length > 0.0 && self.fiber_length.is_finite()) {
            return Err(CliError::Config("fiber_length must be positive".into()));
        }
        if self.output_dir.is_none() {
            return Err(CliError::Config(format!("no output_dir given and {ENV_OUTPUT_DIR} is not set")));
        }
        self.solver.validate()?;
        let h = &self.hcone;
        if h.lambdas.is_empty() || h.lambdas[0] < 1.0 || h.lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("hcone.lambdas must be increasing and at least 1".into()));
        }
        if !(h.radius > 0.0) {
            return Err(CliError::Config("hcone.radius must be positive".into()));
        }
        if let Some(r) = &self.profile_radii {
            if r.is_empty() || r.iter().any(|&t| !(t > 0.0)) {
                return Err(CliError::Config("profile_radii must be positive".into()));
            }
        }
        for p in [self.surface_path(), self.connection_path()].into_iter().flatten() {
            if !p.is_file() {
                return Err(CliError::Config(format!("file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    fn surface_path(&self) -> Option<&Path> {
        match &self.surface {
            SurfaceSpec::File { path } => Some(path),
            _ => None,
        }
    }

    fn connection_path(&self) -> Option<&Path> {
        match &self.connection {
            ConnectionSpec::File { path } => Some(path),
            _ => None,
        }
    }

    pub fn profile_radii(&self) -> Vec<f64> {
        self.profile_radii
            .clone()
            .unwrap_or_else(|| (1..=8).map(|i| self.hcone.radius * i as f64 / 40.0).collect())
    }
}

pub fn build_mesh(spec: &SurfaceSpec) -> Result<SurfaceMesh, CliError> {
    Ok(match spec {
        SurfaceSpec::Icosphere { subdivisions, radius } => make_icosphere(*subdivisions, *radius)?,
        SurfaceSpec::Torus { n, m, a, b } => make_flat_torus(*n, *m, *a, *b)?,
        SurfaceSpec::File { path } => read_mesh(path)?,
    })
}

pub fn read_mesh(path: &Path) -> Result<SurfaceMesh, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(load_mesh(&text)?)
}

pub fn build_connection(cfg: &RunConfig, mesh: &SurfaceMesh) -> Result<Connection, CliError> {
    let conn = match &cfg.connection {
        ConnectionSpec::Constructed => make_connection(mesh, cfg.euler_number)?,
        ConnectionSpec::LeviCivita => levi_civita_connection(mesh)?,
        ConnectionSpec::File { path } => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Connection::from_csv(mesh, &text)?
        }
    };
    let e = euler_number(&conn)?;
    if e != cfg.euler_number {
        return Err(CliError::Config(format!(
            "the connection has Euler number {e} but the config asks for {}",
            cfg.euler_number
        )));
    }
    Ok(conn.with_fiber_length(cfg.fiber_length)?)
}

/// H-cone extraction outcome for one singular point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HConeEntry {
    pub singularity: usize,
    pub report: Option<HConeReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub timestamp: u64,
    pub euler_number: i64,
    pub fiber_length: f64,
    pub vertices: usize,
    pub faces: usize,
    pub topology: TopologyReport,
    pub energy: EnergyReport,
    pub best_start: usize,
    pub multistart: Vec<StartSummary>,
    pub singularities: Vec<SingularityRecord>,
    pub hcones: Vec<HConeEntry>,
}

/// Everything a run produces, before it is written out.
pub struct RunOutput {
    pub report: RunReport,
    pub search: SearchResult,
    pub profile: Vec<(usize, circlebundle::energy::ProfilePoint)>,
}

fn check_writable(dir: &Path) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Config(format!("output directory {} is not writable: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(".write-check");
    fs::write(&probe, b"").map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)
}

/// Center used for profiles: the refined singular point when the mesh has positions.
fn profile_center(search: &SearchResult, rec: &SingularityRecord) -> SurfacePoint {
    let mesh = search.section.mesh();
    if mesh.is_embedded() {
        if let Ok(p) = refine_center(&search.section, rec).and_then(|c| locate_point(mesh, c)) {
            return p;
        }
    }
    SurfacePoint::barycenter(rec.face)
}

/// Runs the pipeline for a validated config without writing anything.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let mesh = Arc::new(build_mesh(&cfg.surface)?);
    let conn = Arc::new(build_connection(cfg, &mesh)?);
    let search = outer_search(mesh.clone(), conn, &cfg.solver)?;
    let model = cfg.solver.model()?;
    let energy = model.report(&search.section, &cfg.report_lambdas)?;
    let singularities = search.section.singular_faces();
    if singularities.iter().map(|r| r.index).sum::<i64>() != cfg.euler_number {
        return Err(CliError::Inconsistent("singularity indices do not sum to the Euler number".into()));
    }
    let hcones = singularities
        .iter()
        .map(|rec| match extract_hcone(&search.section, rec, &cfg.hcone.lambdas, cfg.hcone.radius) {
            Ok(h) => HConeEntry { singularity: rec.face, report: Some(h), error: None },
            Err(e) => HConeEntry { singularity: rec.face, report: None, error: Some(e.to_string()) },
        })
        .collect();
    let radii = cfg.profile_radii();
    let mut profile = Vec::new();
    for rec in &singularities {
        let center = profile_center(&search, rec);
        for p in model.mass_ratio_profile(&search.section, center, &radii)? {
            profile.push((rec.face, p));
        }
    }
    let report = RunReport {
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        euler_number: cfg.euler_number,
        fiber_length: cfg.fiber_length,
        vertices: mesh.vertex_count(),
        faces: mesh.face_count(),
        topology: search.topology.clone(),
        energy,
        best_start: search.best_start,
        multistart: search.starts.clone(),
        singularities,
        hcones,
    };
    Ok(RunOutput { report, search, profile })
}

pub fn trace_csv(trace: &[f64]) -> String {
    let mut s = String::from("iteration,energy\n");
    for (i, e) in trace.iter().enumerate() {
        s.push_str(&format!("{i},{}\n", fmt_f64(*e)));
    }
    s
}

/// Writes the five output files.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<(), CliError> {
    let write = |name: &str, body: String| {
        fs::write(dir.join(name), body).map_err(|e| CliError::Config(format!("cannot write {name}: {e}")))
    };
    let json = serde_json::to_string_pretty(&out.report).map_err(|e| CliError::Inconsistent(e.to_string()))?;
    write("report.json", json + "\n")?;
    write("section.csv", out.search.section.to_csv())?;
    write("singularities.csv", singularities_csv(&out.report.singularities))?;
    write("energy_trace.csv", trace_csv(&out.search.trace))?;
    write("profile.csv", profile_csv(&out.profile))?;
    Ok(())
}

/// `run <config>`: returns the output directory on success.
pub fn run(config_path: &Path) -> Result<PathBuf, CliError> {
    let mut cfg = RunConfig::load(config_path)?;
    cfg.apply_env()?;
    cfg.validate()?;
    let dir = cfg.output_dir.clone().unwrap();
    check_writable(&dir)?;
    let out = execute(&cfg)?;
    write_outputs(&dir, &out)?;
    Ok(dir)
}

pub fn oracle_tolerance() -> Result<f64, CliError> {
    match std::env::var(ENV_ORACLE_TOL) {
        Ok(t) => t
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| *x > 0.0)
            .ok_or_else(|| CliError::Config(format!("{ENV_ORACLE_TOL} must be a positive number, got `{t}`"))),
        Err(_) => Ok(DEFAULT_ORACLE_TOL),
    }
}

pub fn oracle_table(results: &[OracleResult]) -> String {
    let cell = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.10}"));
    let mut s = format!("{:<22} {:>16} {:>16} {:>16} {:>8}  {}\n", "oracle", "analytic", "quadrature", "discrete", "order", "status");
    for r in results {
        s.push_str(&format!(
            "{:<22} {:>16} {:>16} {:>16} {:>8}  {}\n",
            r.name,
            cell(r.analytic),
            cell(r.quadrature),
            cell(r.discrete),
            r.order.map_or("-".to_string(), |o| format!("{o:.3}")),
            if r.passed { "PASS" } else { "FAIL" }
        ));
    }
    s
}

/// `verify-oracles`: the oracle results, also written to `oracles.json` when an
/// output directory is configured through the environment.
pub fn verify_oracles() -> Result<Vec<OracleResult>, CliError> {
    let tol = oracle_tolerance()?;
    let dir = std::env::var(ENV_OUTPUT_DIR).ok().map(PathBuf::from);
    if let Some(d) = &dir {
        check_writable(d)?;
    }
    let results = run_oracles(tol).map_err(|e| CliError::Oracle(e.to_string()))?;
    if let Some(d) = &dir {
        let json = serde_json::to_string_pretty(&results).map_err(|e| CliError::Inconsistent(e.to_string()))?;
        fs::write(d.join("oracles.json"), json + "\n").map_err(|e| CliError::Config(format!("cannot write oracles.json: {e}")))?;
    }
    Ok(results)
}

/// `mesh-info <meshfile>`: a short human-readable summary.
pub fn mesh_info(path: &Path) -> Result<String, CliError> {
    let mesh = read_mesh(path)?;
    let mut s = String::new();
    s.push_str(&format!("vertices: {}\n", mesh.vertex_count()));
    s.push_str(&format!("edges: {}\n", mesh.edge_count()));
    s.push_str(&format!("faces: {}\n", mesh.face_count()));
    s.push_str(&format!("euler characteristic: {}\n", mesh.euler_characteristic()));
    s.push_str(&format!("closed: {}\n", mesh.is_closed()));
    if mesh.is_closed() {
        s.push_str(&format!("genus: {}\n", mesh.genus()));
    } else {
        s.push_str(&format!("boundary loops: {}\n", mesh.boundary_loops().len()));
    }
    s.push_str(&format!("total area: {}\n", fmt_f64(mesh.total_area())));
    let lengths = mesh.edge_lengths();
    let (lo, hi) = lengths.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &l| (a.min(l), b.max(l)));
    s.push_str(&format!("edge length: min {} max {}\n", fmt_f64(lo), fmt_f64(hi)));
    Ok(s)
}

/// Reads `report.json` and blanks its timestamp, for reproducibility checks.
pub fn report_without_timestamp(path: &Path) -> Result<String, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(text.lines().filter(|l| !l.trim_start().starts_with("\"timestamp\"")).collect::<Vec<_>>().join("\n"))
}
