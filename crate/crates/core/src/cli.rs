//! Config-driven batch front end behind the `fraclap` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, GalerkinMatrix};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, Point};
use crate::kernel::FracParams;
use crate::quadrature::QuadratureConfig;
use crate::solve::{
    evaluate_field, galerkin_rhs, relative_trace_residual, solve_dirichlet, trace_error,
    trace_residual, BoundaryData, DensityVector, SOLVE_TOLERANCE,
};
use crate::validation::suite::{run_suite, SuiteConfig};
use crate::validation::ValidationRecord;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "FRACLAP_THREADS";

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Mesh,
    Assemble,
    Solve,
    Eval,
    Validate,
    Convergence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Assemble => "assemble",
            Command::Solve => "solve",
            Command::Eval => "eval",
            Command::Validate => "validate",
            Command::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Failure = 1,
    ConfigError = 2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub boundary_data: BoundaryDataConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default)]
    pub validate: SuiteConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometryConfig {
    Circle {
        #[serde(default = "one")]
        radius: f64,
        panels: usize,
        #[serde(default)]
        refine: u32,
    },
    Polygon {
        /// Vertex file, relative to the config file.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        vertices: Vec<[f64; 2]>,
        #[serde(default)]
        refine: u32,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub s: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self { s: 0.75 }
    }
}

/// Named analytic boundary traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BoundaryDataConfig {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// `cos(kθ)` with `θ` the polar angle about the origin.
    Cosine { k: i64 },
    /// `Σ c[i][j] x1^i x2^j`.
    Polynomial { coefficients: Vec<Vec<f64>> },
}

impl Default for BoundaryDataConfig {
    fn default() -> Self {
        BoundaryDataConfig::Constant { value: 1.0 }
    }
}

impl BoundaryDataConfig {
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            BoundaryDataConfig::Constant { value } => *value,
            BoundaryDataConfig::Cosine { k } => (*k as f64 * x.angle()).cos(),
            BoundaryDataConfig::Polynomial { coefficients } => {
                let mut sum = 0.0;
                for (i, row) in coefficients.iter().enumerate() {
                    for (j, c) in row.iter().enumerate() {
                        sum += c * x.x1.powi(i as i32) * x.x2.powi(j as i32);
                    }
                }
                sum
            }
        }
    }

    fn check(&self) -> Result<()> {
        let finite = match self {
            BoundaryDataConfig::Constant { value } => value.is_finite(),
            BoundaryDataConfig::Cosine { .. } => true,
            BoundaryDataConfig::Polynomial { coefficients } => {
                coefficients.iter().flatten().all(|c| c.is_finite())
            }
        };
        if finite {
            Ok(())
        } else {
            Err(config_error("boundary_data", "coefficients must be finite"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Artifact directory, relative to the config file.
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("fraclap-out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub points: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

/// Tensor grid of `counts[0] x counts[1]` points spanning `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub counts: [usize; 2],
}

impl EvalConfig {
    pub fn all_points(&self) -> Vec<Point> {
        let mut pts: Vec<Point> = self.points.iter().map(|p| Point::new(p[0], p[1])).collect();
        if let Some(g) = &self.grid {
            let coord = |k: usize, i: usize| {
                if g.counts[k] == 1 {
                    0.5 * (g.min[k] + g.max[k])
                } else {
                    g.min[k] + (g.max[k] - g.min[k]) * i as f64 / (g.counts[k] - 1) as f64
                }
            };
            for j in 0..g.counts[1] {
                for i in 0..g.counts[0] {
                    pts.push(Point::new(coord(0, i), coord(1, j)));
                }
            }
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Panel counts; for polygons each must be the base count times a
    /// power of two.
    pub panels: Vec<usize>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { panels: vec![32, 64, 128, 256] }
    }
}

fn config_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { location: location.into(), message: message.into() }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let (line, col) = line_col(text, span.start);
                    format!("line {line}, column {col}")
                }
                None => "config".into(),
            };
            config_error(location, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_error(path.display().to_string(), e.to_string()))?;
        Self::parse(&text)
    }

    /// The config with every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn params(&self) -> Result<FracParams> {
        FracParams::new(self.problem.s)
            .map_err(|e| config_error("problem.s", e.to_string()))
    }

    pub fn build_mesh(&self, base_dir: &Path) -> Result<BoundaryMesh> {
        let (mesh, refine) = match &self.geometry {
            GeometryConfig::Circle { radius, panels, refine } => (
                BoundaryMesh::circle(*radius, *panels)
                    .map_err(|e| config_error("geometry", e.to_string()))?,
                *refine,
            ),
            GeometryConfig::Polygon { file, vertices, refine } => {
                let mesh = match (file, vertices.is_empty()) {
                    (Some(f), true) => {
                        let path = base_dir.join(f);
                        BoundaryMesh::read(&path)
                            .map_err(|e| config_error(format!("geometry.file {}", path.display()), e.to_string()))?
                    }
                    (None, false) => {
                        let v: Vec<Point> = vertices.iter().map(|p| Point::new(p[0], p[1])).collect();
                        BoundaryMesh::polygon(&v)
                            .map_err(|e| config_error("geometry.vertices", e.to_string()))?
                    }
                    _ => {
                        return Err(config_error(
                            "geometry",
                            "a polygon needs exactly one of `file` or `vertices`",
                        ))
                    }
                };
                (mesh, *refine)
            }
        };
        Ok((0..refine).fold(mesh, |m, _| m.refine()))
    }

    /// The mesh with `n` panels for a convergence study.
    pub fn mesh_with_panels(&self, base_dir: &Path, n: usize) -> Result<BoundaryMesh> {
        let location = "convergence.panels";
        match &self.geometry {
            GeometryConfig::Circle { radius, .. } => {
                BoundaryMesh::circle(*radius, n).map_err(|e| config_error(location, e.to_string()))
            }
            GeometryConfig::Polygon { .. } => {
                let mut mesh = self.build_mesh(base_dir)?;
                while mesh.len() < n {
                    mesh = mesh.refine();
                }
                if mesh.len() != n {
                    return Err(config_error(
                        location,
                        format!("{n} panels is not reachable by bisecting the polygon mesh"),
                    ));
                }
                Ok(mesh)
            }
        }
    }

    /// Checks everything that can be checked without running the command.
    pub fn check(&self, command: Command, base_dir: &Path) -> Result<()> {
        self.params()?;
        self.quadrature
            .validate()
            .map_err(|e| config_error("quadrature", e.to_string()))?;
        self.boundary_data.check()?;
        self.build_mesh(base_dir)?;
        match command {
            Command::Eval if self.eval.all_points().is_empty() => {
                Err(config_error("eval", "no `points` and no `grid` given"))
            }
            Command::Convergence => {
                if self.convergence.panels.is_empty() {
                    return Err(config_error("convergence.panels", "is empty"));
                }
                for &n in &self.convergence.panels {
                    self.mesh_with_panels(base_dir, n)?;
                }
                Ok(())
            }
            Command::Validate => {
                FracParams::new(self.validate.s)
                    .map_err(|e| config_error("validate.s", e.to_string()))?;
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Result of a command: the artifacts it wrote and whether its checks held.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub artifacts: Vec<PathBuf>,
    pub passed: bool,
    pub summary: String,
}

/// Solution artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub mesh_hash: String,
    pub s: f64,
    pub panels: usize,
    pub coefficients: Vec<f64>,
    pub trace_residual: f64,
    pub relative_trace_residual: f64,
}

/// Loads the config at `path` and runs `command`, mapping failures to exit
/// statuses. Diagnostics go to the log.
pub fn run(command: Command, path: &Path) -> ExitStatus {
    let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let config = match RunConfig::load(path).and_then(|c| c.check(command, &base_dir).map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            log::error!("{e}");
            return ExitStatus::ConfigError;
        }
    };
    match execute(command, &config, &base_dir) {
        Ok(report) => {
            print!("{}", report.summary);
            if report.passed {
                ExitStatus::Success
            } else {
                ExitStatus::Failure
            }
        }
        Err(e @ Error::Config { .. }) => {
            log::error!("{e}");
            ExitStatus::ConfigError
        }
        Err(e) => {
            log::error!("{} failed: {e}", command.name());
            ExitStatus::Failure
        }
    }
}

/// Runs `command` with an already parsed config; relative paths resolve
/// against `base_dir`.
pub fn execute(command: Command, config: &RunConfig, base_dir: &Path) -> Result<Report> {
    let out_dir = base_dir.join(&config.output.dir);
    fs::create_dir_all(&out_dir)?;
    let resolved = out_dir.join(RESOLVED_CONFIG);
    fs::write(&resolved, config.to_toml())?;

    let mut report = match command {
        Command::Mesh => cmd_mesh(config, base_dir, &out_dir)?,
        Command::Assemble => cmd_assemble(config, base_dir, &out_dir)?,
        Command::Solve => cmd_solve(config, base_dir, &out_dir)?,
        Command::Eval => cmd_eval(config, base_dir, &out_dir)?,
        Command::Validate => cmd_validate(config, &out_dir)?,
        Command::Convergence => cmd_convergence(config, base_dir, &out_dir)?,
    };
    report.artifacts.push(resolved);
    Ok(report)
}

fn cmd_mesh(config: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<Report> {
    let mesh = config.build_mesh(base_dir)?;
    let path = out_dir.join("mesh.txt");
    fs::write(&path, mesh.to_text())?;
    Ok(Report {
        artifacts: vec![path],
        passed: true,
        summary: format!(
            "panels {}\nmesh_hash {}\nlength {}\nmax_panel_length {}\n",
            mesh.len(),
            mesh.hash(),
            fmt_f64(mesh.total_length()),
            fmt_f64(mesh.max_panel_length())
        ),
    })
}

fn assemble_for(config: &RunConfig, base_dir: &Path) -> Result<(BoundaryMesh, FracParams, GalerkinMatrix)> {
    let mesh = config.build_mesh(base_dir)?;
    let params = config.params()?;
    let a = assemble(&mesh, &params, &config.quadrature)?;
    Ok((mesh, params, a))
}

fn cmd_assemble(config: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<Report> {
    let (_, _, a) = assemble_for(config, base_dir)?;
    let bin = out_dir.join("matrix.bin");
    let json = out_dir.join("matrix.json");
    a.write_binary(&bin)?;
    fs::write(&json, serde_json::to_string_pretty(&a.sidecar())?)?;
    Ok(Report {
        artifacts: vec![bin, json],
        passed: true,
        summary: format!(
            "N {}\nmesh_hash {}\nmax_abs {}\nasymmetry {}\n",
            a.dim(),
            a.mesh_hash(),
            fmt_f64(a.max_abs()),
            fmt_f64(a.asymmetry())
        ),
    })
}

struct Solved {
    mesh: BoundaryMesh,
    params: FracParams,
    density: DensityVector,
    file: SolutionFile,
}

fn solve_for(config: &RunConfig, base_dir: &Path) -> Result<Solved> {
    let (mesh, params, a) = assemble_for(config, base_dir)?;
    let data = BoundaryData::from_fn(&mesh, |x| config.boundary_data.eval(x))?;
    let rhs = galerkin_rhs(&data, &mesh)?;
    let density = solve_dirichlet(&a, &rhs)?;
    let file = SolutionFile {
        mesh_hash: density.mesh_hash().to_string(),
        s: params.s(),
        panels: mesh.len(),
        coefficients: density.coeffs().to_vec(),
        trace_residual: trace_residual(&density, &a, &rhs, &mesh)?,
        relative_trace_residual: relative_trace_residual(&density, &a, &rhs, &mesh)?,
    };
    Ok(Solved { mesh, params, density, file })
}

fn cmd_solve(config: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<Report> {
    let solved = solve_for(config, base_dir)?;
    let path = out_dir.join("solution.json");
    fs::write(&path, serde_json::to_string_pretty(&solved.file)?)?;
    let passed = solved.file.relative_trace_residual <= SOLVE_TOLERANCE;
    Ok(Report {
        artifacts: vec![path],
        passed,
        summary: format!(
            "N {}\nmesh_hash {}\ntrace_residual {}\nrelative_trace_residual {}\n",
            solved.file.panels,
            solved.file.mesh_hash,
            fmt_f64(solved.file.trace_residual),
            fmt_f64(solved.file.relative_trace_residual)
        ),
    })
}

fn cmd_eval(config: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<Report> {
    let solved = solve_for(config, base_dir)?;
    let points = config.eval.all_points();
    let samples = evaluate_field(&solved.density, &solved.mesh, &solved.params, &points, &config.quadrature);
    let mut csv = String::from("x1,x2,dist,value\n");
    let mut skipped = 0;
    for (x, sample) in points.iter().zip(&samples) {
        let (dist, value) = match sample {
            Ok(s) => (s.dist, s.value),
            Err(e) => {
                log::warn!("{e}");
                skipped += 1;
                (solved.mesh.distance_to_boundary(*x), f64::NAN)
            }
        };
        writeln!(csv, "{},{},{},{}", fmt_f64(x.x1), fmt_f64(x.x2), fmt_f64(dist), fmt_f64(value))
            .expect("writing to a String");
    }
    let path = out_dir.join("field.csv");
    fs::write(&path, csv)?;
    Ok(Report {
        artifacts: vec![path],
        passed: true,
        summary: format!("points {}\non_boundary {}\n", points.len(), skipped),
    })
}

fn cmd_validate(config: &RunConfig, out_dir: &Path) -> Result<Report> {
    let records: Vec<ValidationRecord> = run_suite(&config.validate, &config.quadrature)?;
    let path = out_dir.join("validation.json");
    fs::write(&path, serde_json::to_string_pretty(&records)?)?;
    let mut summary = String::new();
    for r in &records {
        writeln!(
            summary,
            "{} {} value={} reference={} tolerance={} {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            fmt_f64(r.value),
            fmt_f64(r.reference),
            fmt_f64(r.tolerance),
            r.inputs
        )
        .expect("writing to a String");
    }
    let failed = records.iter().filter(|r| !r.pass).count();
    writeln!(summary, "{} checks, {} failed", records.len(), failed).expect("writing to a String");
    Ok(Report { artifacts: vec![path], passed: failed == 0, summary })
}

/// One row of the convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub panels: usize,
    pub l2_trace_error: f64,
    pub slobodeckij_error: f64,
    pub runtime: f64,
}

pub fn convergence_study(config: &RunConfig, base_dir: &Path) -> Result<Vec<ConvergenceRow>> {
    let params = config.params()?;
    let f = |x: Point| config.boundary_data.eval(x);
    config
        .convergence
        .panels
        .iter()
        .map(|&n| {
            let start = Instant::now();
            let mesh = config.mesh_with_panels(base_dir, n)?;
            let a = assemble(&mesh, &params, &config.quadrature)?;
            let rhs = galerkin_rhs(&BoundaryData::from_fn(&mesh, f)?, &mesh)?;
            let density = solve_dirichlet(&a, &rhs)?;
            let err = trace_error(&density, &mesh, &params, &f, &config.quadrature)?;
            log::info!("N = {n}: L2 {:.3e}, slobodeckij {:.3e}", err.l2, err.slobodeckij);
            Ok(ConvergenceRow {
                panels: n,
                l2_trace_error: err.l2,
                slobodeckij_error: err.slobodeckij,
                runtime: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

fn cmd_convergence(config: &RunConfig, base_dir: &Path, out_dir: &Path) -> Result<Report> {
    let rows = convergence_study(config, base_dir)?;
    let mut csv = String::from("N,L2_trace_error,slobodeckij_error,runtime\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{}",
            r.panels,
            fmt_f64(r.l2_trace_error),
            fmt_f64(r.slobodeckij_error),
            fmt_f64(r.runtime)
        )
        .expect("writing to a String");
    }
    let path = out_dir.join("convergence.csv");
    fs::write(&path, &csv)?;
    Ok(Report { artifacts: vec![path], passed: true, summary: csv })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::parse("[geometry]\nkind = \"circle\"\npanels = 16\n").unwrap();
        assert_eq!(c.problem.s, 0.75);
        assert_eq!(c.quadrature, QuadratureConfig::default());
        let again = RunConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = "[geometry]\nkind = \"circle\"\npanels = 16\n\n[problem]\norder = 0.7\n";
        let err = RunConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("line 6"), "{err}");
        assert!(err.contains("order"), "{err}");
    }

    #[test]
    fn unknown_geometry_field_is_rejected() {
        let text = "[geometry]\nkind = \"circle\"\npanels = 16\nsides = 3\n";
        assert!(RunConfig::parse(text).is_err());
    }

    #[test]
    fn polynomial_data() {
        let d = BoundaryDataConfig::Polynomial { coefficients: vec![vec![1.0, 2.0], vec![3.0]] };
        assert_eq!(d.eval(Point::new(2.0, 5.0)), 1.0 + 2.0 * 5.0 + 3.0 * 2.0);
    }

    #[test]
    fn grid_points_row_major() {
        let e = EvalConfig {
            points: vec![[9.0, 9.0]],
            grid: Some(GridConfig { min: [0.0, 0.0], max: [1.0, 2.0], counts: [2, 3] }),
        };
        let p = e.all_points();
        assert_eq!(p.len(), 7);
        assert_eq!(p[2], Point::new(1.0, 0.0));
        assert_eq!(p[6], Point::new(1.0, 2.0));
    }

    #[test]
    fn bad_order_is_a_config_error() {
        let c = RunConfig::parse("[geometry]\nkind = \"circle\"\npanels = 16\n[problem]\ns = 1.2\n").unwrap();
        assert!(matches!(c.check(Command::Solve, Path::new(".")), Err(Error::Config { .. })));
    }

    #[test]
    fn fmt_has_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }
}
