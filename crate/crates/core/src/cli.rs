//! Batch front end: `solve`, `surface`, `verify`, `holonomy`, `sweep` and `export`.
//!
//! Exit status: 0 when every residual is under its tolerance, 1 when some residual is
//! not, 2 for configuration errors and 3 for errors raised by a numerical stage.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, Tolerances};
use crate::error::Error;
use crate::frame::{flatness_residual, frame_sweep, integrate_frame, ConnectionForm};
use crate::gauss::{residual_sup, MetricData};
use crate::holonomy::{complex_landslide, holomorphy_scan, VerificationReport};
use crate::landslide::{
    associated_check, det_defect, flow_additivity_error, isometry_defect, self_adjoint_defect, LandslideState,
};
use crate::report::{write_json, Check, SuiteReport};
use crate::surface::{analytic_forms, compare_forms, congruence_check, numeric_forms, spectral_immersion, SurfaceMesh};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STAGE: i32 = 3;

/// Threshold a control experiment must exceed.
pub const CONTROL_THRESHOLD: f64 = 1e-2;

/// Error of a named pipeline stage.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage '{}': {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        match self.source {
            Error::Config(_) => EXIT_CONFIG,
            _ => EXIT_STAGE,
        }
    }
}

type StageResult<T> = std::result::Result<T, StageError>;

trait Staged<T> {
    fn stage(self, stage: &'static str) -> StageResult<T>;
}

impl<T, E: Into<Error>> Staged<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> StageResult<T> {
        self.map_err(|e| StageError { stage, source: e.into() })
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Overrides `output.dir` of the config.
    pub out: Option<PathBuf>,
    pub tolerance_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { out: None, tolerance_scale: 1.0 }
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_OK
        } else {
            EXIT_TOLERANCE
        }
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    tol: Tolerances,
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a RunConfig, opts: &RunOptions) -> StageResult<Self> {
        if !(opts.tolerance_scale > 0.0 && opts.tolerance_scale.is_finite()) {
            return Err(StageError { stage: "config", source: Error::Config("tolerance scale must be positive".into()) });
        }
        let dir = opts.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        std::fs::create_dir_all(&dir).stage("output")?;
        Ok(Ctx { cfg, tol: cfg.tolerances.scaled(opts.tolerance_scale), dir, files: Vec::new() })
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> StageResult<()> {
        let path = self.dir.join(name);
        write_json(&path, value).stage("output")?;
        self.files.push(path);
        Ok(())
    }

    fn create(&mut self, name: &str) -> StageResult<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).stage("output")?;
        self.files.push(path);
        Ok(BufWriter::new(f))
    }

    fn finish(self, suites: Vec<SuiteReport>) -> RunSummary {
        RunSummary { pass: suites.iter().all(|s| s.pass), suites, files: self.files }
    }

    fn connection(&self) -> StageResult<(Option<MetricData>, ConnectionForm)> {
        self.cfg.connection().stage("solve")
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// Eight values on the unit circle and eight in the punctured disk.
pub fn default_lambdas() -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..8).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 8.0 + 0.1)).collect();
    v.extend((0..8).map(|k| Complex64::from_polar(0.15 + 0.1 * k as f64, 0.7 * k as f64 - 2.0)));
    v
}

fn default_thetas() -> Vec<f64> {
    (0..16).map(|k| k as f64 * PI / 8.0).collect()
}

fn require_data(m: Option<MetricData>, what: &str) -> StageResult<MetricData> {
    m.ok_or_else(|| StageError { stage: "config", source: Error::Config(format!("{what} needs metric data")) })
}

/// Solves for the data and writes `data.csv` and `solve.json`.
pub fn run_solve(cfg: &RunConfig, opts: &RunOptions) -> StageResult<RunSummary> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let m = require_data(ctx.connection()?.0, "solve")?;
    m.write_csv(ctx.create("data.csv")?).stage("output")?;
    let suite = SuiteReport::new(
        "solve",
        vec![Check::below("gauss_residual", residual_sup(&m), ctx.tol.gauss)],
        Some(json!({ "header": m.header_json(), "degenerate_nodes": m.degenerate_nodes() })),
    );
    ctx.json("solve.json", &suite)?;
    Ok(ctx.finish(vec![suite]))
}

fn surface_at(conn: &ConnectionForm, lambda: Complex64) -> StageResult<SurfaceMesh> {
    let basepoint = (0, conn.grid.ny / 2);
    let frame = integrate_frame(conn, lambda, basepoint).stage("frame")?;
    spectral_immersion(&frame).stage("surface")
}

fn forms_suite(m: &MetricData, conn: &ConnectionForm, lambda0: Complex64, tol: &Tolerances) -> StageResult<SuiteReport> {
    let mesh = surface_at(conn, lambda0)?;
    let numeric = numeric_forms(&mesh).stage("forms")?;
    let analytic = analytic_forms(m, lambda0).stage("forms")?;
    let rep = compare_forms(&numeric, &analytic, m, 1);
    let (_, congruence) = congruence_check(&mesh, &surface_at(conn, -lambda0)?).stage("congruence")?;
    let checks = vec![
        Check::below("max_err_I", rep.max_err_i, tol.forms),
        Check::below("max_err_II", rep.max_err_ii, tol.forms),
        Check::below("max_err_III", rep.max_err_iii, tol.forms),
        Check::below("K_error", (rep.k_numeric - rep.k_formula).abs(), tol.curvature),
        Check::below("H_max_err", rep.h_max_err, tol.forms),
        Check::below("congruence_plus_minus", congruence, tol.congruence),
    ];
    Ok(SuiteReport::new(
        "forms",
        checks,
        Some(json!({ "lambda0": pair(lambda0), "report": serde_json::to_value(&rep).stage("output")? })),
    ))
}

/// Builds the surface at `λ₀` and writes `surface.obj` and `surface.json`.
pub fn run_surface(cfg: &RunConfig, opts: &RunOptions) -> StageResult<RunSummary> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let (m, conn) = ctx.connection()?;
    let m = require_data(m, "surface")?;
    let lambda0 = cfg.lambda0().expect("data present");
    surface_at(&conn, lambda0)?.write_obj(ctx.create("surface.obj")?).stage("output")?;
    let suite = forms_suite(&m, &conn, lambda0, &ctx.tol)?;
    ctx.json("surface.json", &suite)?;
    Ok(ctx.finish(vec![suite]))
}

fn flatness_suite(m: Option<&MetricData>, conn: &ConnectionForm, lambdas: &[Complex64], tol: &Tolerances) -> SuiteReport {
    let mut checks: Vec<Check> = lambdas
        .par_iter()
        .map(|&l| Check::below(format!("flatness at {:.6}{:+.6}i", l.re, l.im), flatness_residual(conn, l), tol.flatness))
        .collect();
    if let Some(m) = m {
        checks.insert(0, Check::below("gauss_residual", residual_sup(m), tol.gauss));
    }
    SuiteReport::new("flatness", checks, None)
}

fn landslide_suite(m: &MetricData, thetas: &[f64], tol: &Tolerances) -> StageResult<SuiteReport> {
    let src = LandslideState::from_data(m).stage("landslide")?;
    let mut checks = vec![
        Check::below("det_b_minus_one", det_defect(&src.b), tol.structure),
        Check::below("b_self_adjoint", self_adjoint_defect(&src.b, &src.h), tol.structure),
        Check::below("b_isometry", isometry_defect(&src.b, &src.h, &src.h_star), tol.structure),
    ];
    let reports = thetas
        .par_iter()
        .map(|&t| associated_check(m, m.s, t))
        .collect::<crate::Result<Vec<_>>>()
        .stage("landslide")?;
    for r in &reports {
        let worst = r.max_err_i.max(r.max_err_ii).max(r.max_err_iii);
        checks.push(Check::below(format!("associated theta={:.6}", r.theta), worst, tol.structure));
        checks.push(Check::below(format!("codazzi theta={:.6}", r.theta), r.codazzi_residual, tol.codazzi));
    }
    checks.push(Check::below("flow_additivity", flow_additivity_error(&src, 0.7, 1.9), tol.additivity));
    Ok(SuiteReport::new("landslide", checks, Some(serde_json::to_value(&reports).stage("output")?)))
}

fn holonomy_reports(
    m: &MetricData,
    conn: &ConnectionForm,
    qs: &[Complex64],
    tol: &Tolerances,
) -> StageResult<(SuiteReport, Vec<VerificationReport>)> {
    let runs = qs
        .par_iter()
        .map(|&q| {
            let st = complex_landslide(m, conn, q, None)?;
            let eq = match (&st.developing_map, &st.dev_record) {
                (Some(d), Some(r)) => Some(d.equivariance_residual(&r.moebius)?),
                _ => None,
            };
            Ok((st, eq))
        })
        .collect::<crate::Result<Vec<_>>>()
        .stage("holonomy")?;
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for (st, eq) in &runs {
        let label = format!("q={:.6}{:+.6}i", st.q.re, st.q.im);
        if let Some(c) = st.compare_residual {
            checks.push(Check::below(format!("compare {label}"), c, tol.holonomy));
        }
        if let Some(e) = eq {
            checks.push(Check::below(format!("equivariance {label}"), *e, tol.equivariance));
        }
        checks.push(Check::below(format!("frame det {label}"), st.frame_record.det_error(), tol.structure));
        reports.push(st.report());
    }
    let details = serde_json::to_value(&reports).stage("output")?;
    Ok((SuiteReport::new("holonomy", checks, Some(details)), reports))
}

fn cr_suite(conn: &ConnectionForm, cfg: &RunConfig, tol: &Tolerances) -> StageResult<Option<SuiteReport>> {
    let Some((center, scan)) = cfg.cr_scan() else { return Ok(None) };
    let rep = holomorphy_scan(conn, center, scan.delta, scan.points, conn.grid.ny / 2).stage("cr")?;
    let checks = vec![
        Check::below("cr_residual", rep.cr_residual, tol.cr),
        Check::above("anti_holomorphic_control", rep.control_residual, CONTROL_THRESHOLD),
    ];
    Ok(Some(SuiteReport::new("cr", checks, Some(serde_json::to_value(&rep).stage("output")?))))
}

/// Runs every applicable suite and writes `verify.json`. Suites after a failed flatness
/// suite are skipped since they presuppose a flat family.
pub fn run_verify(cfg: &RunConfig, opts: &RunOptions) -> StageResult<RunSummary> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let (m, conn) = ctx.connection()?;
    let tol = ctx.tol.clone();
    let lambdas = if cfg.spectral.lambdas.is_empty() { default_lambdas() } else { cfg.lambdas() };
    let mut suites = vec![flatness_suite(m.as_ref(), &conn, &lambdas, &tol)];
    let mut skipped = Vec::new();
    if let Some(m) = m.as_ref() {
        if suites[0].pass {
            let lambda0 = cfg.lambda0().expect("data present");
            if lambda0.norm() > 0.0 && lambda0.norm() < 1.0 {
                suites.push(forms_suite(m, &conn, lambda0, &tol)?);
            }
            let thetas = if cfg.spectral.thetas.is_empty() { default_thetas() } else { cfg.spectral.thetas.clone() };
            suites.push(landslide_suite(m, &thetas, &tol)?);
            if m.grid.is_periodic() && !cfg.spectral.q.is_empty() {
                suites.push(holonomy_reports(m, &conn, &cfg.qs(), &tol)?.0);
            }
            if m.grid.is_periodic() {
                suites.extend(cr_suite(&conn, cfg, &tol)?);
            }
        } else {
            skipped = vec!["forms", "landslide", "holonomy", "cr"];
        }
    }
    let pass = suites.iter().all(|s| s.pass);
    ctx.json("verify.json", &json!({ "pass": pass, "suites": suites, "skipped": skipped }))?;
    Ok(ctx.finish(suites))
}

#[derive(Debug, Clone, Serialize)]
struct ManifestEntry {
    file: String,
    #[serde(flatten)]
    info: serde_json::Value,
}

/// Runs the complex landslide per `q`, writing `holonomy_<k>.json` and a manifest.
pub fn run_holonomy(cfg: &RunConfig, opts: &RunOptions) -> StageResult<RunSummary> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let (m, conn) = ctx.connection()?;
    let m = require_data(m, "holonomy")?;
    if !m.grid.is_periodic() {
        return Err(StageError { stage: "config", source: Error::Config("holonomy needs a cylinder domain".into()) });
    }
    let (mut suite, reports) = holonomy_reports(&m, &conn, &cfg.qs(), &ctx.tol)?;
    let mut entries = Vec::new();
    for (k, r) in reports.iter().enumerate() {
        let name = format!("holonomy_{k:03}.json");
        ctx.json(&name, r)?;
        entries.push(ManifestEntry { file: name, info: json!({ "q": r.q }) });
    }
    let mut suites = Vec::new();
    if let Some(cr) = cr_suite(&conn, cfg, &ctx.tol)? {
        ctx.json("cr.json", &cr)?;
        suites.push(cr);
    }
    suite.details = None;
    suites.insert(0, suite);
    ctx.json("manifest.json", &json!({ "entries": entries, "suites": suites }))?;
    Ok(ctx.finish(suites))
}

/// Integrates frames at every configured `λ`, writing `frame_<k>.csv` and `sweep.json`.
pub fn run_sweep(cfg: &RunConfig, opts: &RunOptions) -> StageResult<RunSummary> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let (_, conn) = ctx.connection()?;
    let lambdas = if cfg.spectral.lambdas.is_empty() { default_lambdas() } else { cfg.lambdas() };
    let frames = frame_sweep(&conn, &lambdas, (0, conn.grid.ny / 2)).stage("frame")?;
    let mut entries = Vec::new();
    let mut checks = Vec::new();
    for (k, (frame, mut entry)) in frames.into_iter().enumerate() {
        let name = format!("frame_{k:03}.csv");
        frame.write_csv(ctx.create(&name)?).stage("output")?;
        entry.file = Some(name);
        checks.push(Check::below(format!("flatness {k}"), entry.flatness, ctx.tol.flatness));
        entries.push(entry);
    }
    let suite = SuiteReport::new("sweep", checks, Some(serde_json::to_value(&entries).stage("output")?));
    ctx.json("sweep.json", &suite)?;
    Ok(ctx.finish(vec![suite]))
}

/// Writes one OBJ per `λ = λ₀e^{iθ}`, the data CSV and `manifest.json`. Meshes at `θ` and
/// `θ + π` are checked for congruence.
pub fn run_export(cfg: &RunConfig, opts: &RunOptions) -> StageResult<RunSummary> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let (m, conn) = ctx.connection()?;
    let lambda0 = cfg.lambda0().ok_or_else(|| StageError {
        stage: "config",
        source: Error::Config("export needs spectral.lambda0".into()),
    })?;
    let thetas = if cfg.spectral.thetas.is_empty() { vec![0.0] } else { cfg.spectral.thetas.clone() };
    let meshes = thetas
        .par_iter()
        .map(|&t| surface_at(&conn, lambda0 * Complex64::from_polar(1.0, t)))
        .collect::<StageResult<Vec<_>>>()?;
    let mut entries = Vec::new();
    for (k, (mesh, t)) in meshes.iter().zip(&thetas).enumerate() {
        let name = format!("mesh_{k:03}.obj");
        mesh.write_obj(ctx.create(&name)?).stage("output")?;
        let lambda = lambda0 * Complex64::from_polar(1.0, *t);
        entries.push(ManifestEntry {
            file: name,
            info: json!({ "theta": t, "lambda": pair(lambda), "vertices": mesh.f.data.len() }),
        });
    }
    if let Some(m) = &m {
        m.write_csv(ctx.create("data.csv")?).stage("output")?;
    }
    let mut checks = Vec::new();
    for a in 0..thetas.len() {
        for b in a + 1..thetas.len() {
            let d = (thetas[b] - thetas[a] - PI).rem_euclid(2.0 * PI);
            if d.min(2.0 * PI - d) < 1e-9 {
                let (_, res) = congruence_check(&meshes[a], &meshes[b]).stage("congruence")?;
                checks.push(Check::below(format!("congruence mesh_{a:03} mesh_{b:03}"), res, ctx.tol.congruence));
            }
        }
    }
    let suite = SuiteReport::new("export", checks, None);
    let data = m.as_ref().map(|_| "data.csv");
    ctx.json("manifest.json", &json!({ "meshes": entries, "data": data, "suite": suite }))?;
    Ok(ctx.finish(vec![suite]))
}

#[derive(Debug, Parser)]
#[command(name = "landslide", version, about = "CGC surfaces in hyperbolic space, landslides and holonomy checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Multiplies every tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub tolerance_scale: f64,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Solve for the data and dump it.
    Solve,
    /// Build the surface at λ₀ and compare its forms.
    Surface,
    /// Run all verification suites.
    Verify,
    /// Complex landslide holonomy per q.
    Holonomy,
    /// Frames at every configured λ.
    Sweep,
    /// Meshes for a θ-sweep of λ₀.
    Export,
}

fn dispatch(command: Command, cfg: &RunConfig, opts: &RunOptions) -> StageResult<RunSummary> {
    match command {
        Command::Solve => run_solve(cfg, opts),
        Command::Surface => run_surface(cfg, opts),
        Command::Verify => run_verify(cfg, opts),
        Command::Holonomy => run_holonomy(cfg, opts),
        Command::Sweep => run_sweep(cfg, opts),
        Command::Export => run_export(cfg, opts),
    }
}

/// Runs a parsed command line and returns the exit status. Progress and failures go to
/// stderr.
pub fn run(cli: Cli) -> i32 {
    let Some(path) = cli.config.as_deref() else {
        eprintln!("error: --config is required");
        return EXIT_CONFIG;
    };
    let cfg = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let opts = RunOptions { out: cli.out, tolerance_scale: cli.tolerance_scale };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be positive");
            return EXIT_CONFIG;
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_STAGE;
        }
    };
    match pool.install(|| dispatch(cli.command, &cfg, &opts)) {
        Ok(summary) => {
            for suite in &summary.suites {
                for c in suite.failures() {
                    eprintln!("FAIL {}: {} = {:e} (tolerance {:e})", suite.suite, c.name, c.value, c.tolerance);
                }
            }
            eprintln!("{} file(s) written, {}", summary.files.len(), if summary.pass { "all checks pass" } else { "tolerance failure" });
            summary.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
