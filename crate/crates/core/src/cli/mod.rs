//! Configuration-driven front end: `holoq run <config.json>` and `holoq validate`.
//!
//! Each run writes `<name>.json` (keys `config`, `result`, `diagnostics`, `version`),
//! `<name>.csv` for tabular tasks and `<name>.dat` when a plot is requested. Exit codes:
//! 0 success, 1 I/O failure, 2 invalid configuration, 3 numerical failure.

mod config;
mod table;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

pub use config::{
    parse_config, validate, Geometry, GridSpec, JobConfig, LoopSpec, Numerics, OutputSpec, PathSpec, PlotKindName,
    PlotSpec, SurfaceSpec, Task,
};
pub use table::{emit_plotdata, Cell, PlotKind, ResultTable, RowBuilder, TableError};

use crate::biorth::{build_frame, FrameOptions};
use crate::dynamics::{
    adiabaticity_margin, evolve_path_with, extract_geometric_phase_with, EvolutionMode, EvolveOptions, ParameterPath,
    DEFAULT_LEAKAGE_THRESHOLD,
};
use crate::error::Error;
use crate::geometry::{
    curvature_plaquette, find_constant_y, flux_surface_with, holonomy_discrete_with, real_phase_condition, FluxOptions,
    HolonomyOptions, ParameterLoop, TriangulatedSurface,
};
use crate::linalg::{eigendecompose, multiplicity_report, sort_eigenvalues, C64, DEFAULT_CLUSTER_TOL, DEFAULT_RANK_TOL};
use crate::models::ModelHandle;
use crate::Point3;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum RunError {
    Io(String),
    Validation(String),
    Numerical(Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Io(_) => 1,
            RunError::Validation(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }

    /// Structured diagnostic for standard error.
    pub fn diagnostic(&self) -> Value {
        match self {
            RunError::Io(m) => json!({ "level": "error", "kind": "Io", "message": m }),
            RunError::Validation(m) => json!({ "level": "error", "kind": "Validation", "message": m }),
            RunError::Numerical(e) => json!({
                "level": "error",
                "kind": e.root().kind(),
                "message": e.to_string(),
                "R": e.point(),
            }),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Numerical(e)
    }
}

/// Everything a job produces before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct JobOutput {
    pub table: Option<ResultTable>,
    pub result: Value,
    pub diagnostics: Vec<Value>,
}

pub fn load_config(path: &Path) -> Result<JobConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(RunError::Validation)
}

/// Runs a job file and writes its artifacts into `out_dir`; returns the written paths.
pub fn run(config_path: &Path, out_dir: &Path, jobs: usize) -> Result<Vec<PathBuf>, RunError> {
    let cfg = load_config(config_path)?;
    let started = Instant::now();
    let output = execute(&cfg, jobs)?;
    let written = write_outputs(&cfg, &output, out_dir)?;
    eprintln!("{}", json!({ "level": "info", "task": cfg.task.name(), "wall_time_s": started.elapsed().as_secs_f64() }));
    Ok(written)
}

pub fn write_outputs(cfg: &JobConfig, output: &JobOutput, out_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let io = |e: std::io::Error| RunError::Io(e.to_string());
    fs::create_dir_all(out_dir).map_err(io)?;
    let name = cfg.output.name.clone().unwrap_or_else(|| cfg.task.name().to_string());
    let mut written = Vec::new();
    if let Some(table) = &output.table {
        let path = out_dir.join(format!("{name}.csv"));
        let file = fs::File::create(&path).map_err(io)?;
        table.write_csv(file).map_err(|e| RunError::Io(e.to_string()))?;
        written.push(path);
        if let Some(plot) = &cfg.output.plot {
            let c = &plot.columns;
            let kind = match plot.kind {
                PlotKindName::Heatmap => PlotKind::Heatmap { x: c[0].clone(), y: c[1].clone(), value: c[2].clone() },
                PlotKindName::Line => PlotKind::Line { x: c[0].clone(), y: c[1].clone() },
                PlotKindName::Field => {
                    PlotKind::Field { x: c[0].clone(), y: c[1].clone(), u: c[2].clone(), v: c[3].clone() }
                }
            };
            let path = out_dir.join(format!("{name}.dat"));
            let mut buf = Vec::new();
            emit_plotdata(table, &kind, &mut buf).map_err(|e| match e {
                TableError::ColumnMismatch(m) => RunError::Validation(format!("output.plot: {m}")),
                TableError::Io(m) => RunError::Io(m),
            })?;
            fs::write(&path, buf).map_err(io)?;
            written.push(path);
        }
    }
    let doc = json!({
        "config": cfg,
        "result": output.result,
        "diagnostics": output.diagnostics,
        "version": VERSION,
    });
    let path = out_dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&doc).map_err(|e| RunError::Io(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(io)?;
    written.push(path);
    Ok(written)
}

fn frame_options(n: &Numerics) -> FrameOptions {
    let d = FrameOptions::default();
    FrameOptions {
        cluster_tol: n.cluster_tol.unwrap_or(d.cluster_tol),
        rank_tol: n.rank_tol.unwrap_or(d.rank_tol),
        gap_floor: n.gap_floor.unwrap_or(d.gap_floor),
        ..d
    }
}

fn complex_json(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// Sample locations of a grid or point-list task, with their index columns.
enum Sites {
    Grid(Vec<(usize, usize, Point3)>),
    Points(Vec<Point3>),
}

impl Sites {
    fn from(g: &Geometry) -> Sites {
        match (&g.grid, &g.points) {
            (Some(grid), _) => Sites::Grid(grid.points()),
            (None, Some(p)) => Sites::Points(p.clone()),
            (None, None) => Sites::Points(Vec::new()),
        }
    }

    fn rows(&self) -> Vec<(RowBuilder, Point3)> {
        match self {
            Sites::Grid(g) => {
                g.iter().map(|(i, j, r)| (RowBuilder::default().int("i", *i as i64).int("j", *j as i64).point(r), *r)).collect()
            }
            Sites::Points(p) => {
                p.iter().enumerate().map(|(k, r)| (RowBuilder::default().int("index", k as i64).point(r), *r)).collect()
            }
        }
    }
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| RunError::Io(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn grid_table<F>(sites: &Sites, jobs: usize, f: F) -> Result<(ResultTable, usize), RunError>
where
    F: Fn(RowBuilder, &Point3) -> (RowBuilder, bool) + Sync,
{
    let rows = sites.rows();
    let built: Vec<(RowBuilder, bool)> = in_pool(jobs, || rows.into_par_iter().map(|(row, r)| f(row, &r)).collect())?;
    let mut table = ResultTable::new();
    let mut failures = 0;
    for (row, ok) in built {
        failures += usize::from(!ok);
        table.push(row).map_err(|e| RunError::Io(e.to_string()))?;
    }
    Ok((table, failures))
}

/// Runs a validated job without touching the file system.
pub fn execute(cfg: &JobConfig, jobs: usize) -> Result<JobOutput, RunError> {
    validate(cfg).map_err(RunError::Validation)?;
    let model = cfg.model.build().map_err(|e| RunError::Validation(format!("model: {e}")))?;
    let n = &cfg.numerics;
    let band = n.band.unwrap_or(0);
    if band >= model.dim() {
        return Err(RunError::Validation(format!("numerics.band: {band} out of range for dimension {}", model.dim())));
    }
    match cfg.task {
        Task::Spectrum => spectrum(cfg, &model, jobs),
        Task::EpScan => ep_scan(cfg, &model, jobs),
        Task::Evolve => evolve(cfg, &model, band),
        Task::Holonomy => holonomy(cfg, &model, band),
        Task::Curvature => curvature(cfg, &model, band, jobs),
        Task::Flux => flux(cfg, &model, band, jobs),
        Task::YFind => y_find(cfg, &model),
        Task::CheckRealPhase => real_phase(cfg, &model, band, jobs),
    }
}

fn failure_diagnostic(count: usize, what: &str) -> Vec<Value> {
    if count == 0 {
        Vec::new()
    } else {
        vec![json!({ "level": "warning", "message": format!("{count} {what} failed; see the `error` column") })]
    }
}

fn spectrum(cfg: &JobConfig, model: &ModelHandle, jobs: usize) -> Result<JobOutput, RunError> {
    let sites = Sites::from(&cfg.geometry);
    let dim = model.dim();
    let opts = frame_options(&cfg.numerics);
    let (table, failures) = grid_table(&sites, jobs, |mut row, r| {
        let h = model.hamiltonian(r);
        let scale = h.frobenius_norm();
        match eigendecompose(&h) {
            Ok(e) => {
                let values = sort_eigenvalues(e.values, scale);
                let real = values.iter().all(|v| v.im.abs() <= opts.reality_tol * (1.0 + v.norm()));
                for (k, v) in values.iter().enumerate() {
                    row = row.complex(&format!("E{k}"), *v);
                }
                let diag = multiplicity_report(&h, opts.cluster_tol, opts.rank_tol).map(|rep| rep.diagonalizable);
                (row.boolean("real_spectrum", real).boolean("diagonalizable", diag.unwrap_or(false)).text("error", ""), true)
            }
            Err(err) => {
                for k in 0..dim {
                    row = row.complex(&format!("E{k}"), C64::new(f64::NAN, f64::NAN));
                }
                (row.boolean("real_spectrum", false).boolean("diagonalizable", false).text("error", err.kind()), false)
            }
        }
    })?;
    let result = json!({ "points": table.rows().len(), "failures": failures });
    Ok(JobOutput { table: Some(table), result, diagnostics: failure_diagnostic(failures, "eigensolves") })
}

fn ep_scan(cfg: &JobConfig, model: &ModelHandle, jobs: usize) -> Result<JobOutput, RunError> {
    let sites = Sites::from(&cfg.geometry);
    let cluster_tol = cfg.numerics.cluster_tol.unwrap_or(DEFAULT_CLUSTER_TOL);
    let rank_tol = cfg.numerics.rank_tol.unwrap_or(DEFAULT_RANK_TOL);
    let reference = model.reference();
    let (table, failures) = grid_table(&sites, jobs, |row, r| {
        let h = model.hamiltonian(r);
        let (mut row, ok) = match multiplicity_report(&h, cluster_tol, rank_tol) {
            Ok(rep) => {
                let max_eta = rep.clusters.iter().map(|c| c.eta).max().unwrap_or(0);
                let defect = rep.clusters.iter().map(|c| c.eta - c.zeta).sum::<usize>();
                let row = row
                    .boolean("diagonalizable", rep.diagonalizable)
                    .int("clusters", rep.clusters.len() as i64)
                    .int("max_eta", max_eta as i64)
                    .int("defect", defect as i64)
                    .text("error", "");
                (row, true)
            }
            Err(e) => {
                let row = row
                    .boolean("diagonalizable", false)
                    .int("clusters", 0)
                    .int("max_eta", 0)
                    .int("defect", 0)
                    .text("error", e.kind());
                (row, false)
            }
        };
        if let Some(rf) = &reference {
            row = row.boolean("exceptional_reference", rf.is_exceptional(r));
        }
        (row, ok)
    })?;
    let col = table.column_index("diagonalizable").map_err(|e| RunError::Io(e.to_string()))?;
    let defective = table.rows().iter().filter(|r| r[col] == Cell::Bool(false)).count();
    let result = json!({
        "points": table.rows().len(),
        "non_diagonalizable": defective,
        "cluster_tol": cluster_tol,
        "rank_tol": rank_tol,
        "failures": failures,
    });
    Ok(JobOutput { table: Some(table), result, diagnostics: failure_diagnostic(failures, "eigensolves") })
}

fn build_path(spec: &PathSpec, total_time: f64, steps: usize) -> Result<ParameterPath, Error> {
    match spec {
        PathSpec::Circle { center, radius, plane } => {
            ParameterPath::circle(*center, *radius, (plane[0], plane[1]), total_time, steps)
        }
        PathSpec::Linear { from, to } => ParameterPath::linear(*from, *to, total_time, steps),
        PathSpec::BackAndForth { from, to } => ParameterPath::back_and_forth(*from, *to, total_time, steps),
        PathSpec::Constant { point } => ParameterPath::constant(*point, total_time, steps),
        PathSpec::Points(p) => ParameterPath::from_points(p, total_time),
    }
}

fn evolve(cfg: &JobConfig, model: &ModelHandle, band: usize) -> Result<JobOutput, RunError> {
    let n = &cfg.numerics;
    let spec = cfg.geometry.path.as_ref().expect("validated");
    let total_time = n.total_time.unwrap_or(100.0);
    let steps = n.steps.unwrap_or(1000);
    let path = build_path(spec, total_time, steps).map_err(|e| RunError::Validation(format!("geometry.path: {e}")))?;
    let mode = n.mode.unwrap_or(EvolutionMode::Adiabatic);
    let opts = EvolveOptions { frame: frame_options(n), ..EvolveOptions::new(mode) };
    let r0 = path.point(0);
    let start = build_frame(&model.hamiltonian(&r0), &opts.frame).map_err(|e| e.at(r0))?;
    let rec = evolve_path_with(model, &path, &start.psi(band), &opts)?;

    let mut table = ResultTable::new();
    for k in 0..rec.times.len() {
        let mut row = RowBuilder::default().int("k", k as i64).real("t", rec.times[k]).point(&rec.points[k]);
        for (j, c) in rec.coefficients[k].iter().enumerate() {
            row = row.complex(&format!("c{j}"), *c);
        }
        for (i, p) in rec.states[k].iter().enumerate() {
            row = row.complex(&format!("psi{i}"), *p);
        }
        row = row.real("pseudo_norm", rec.pseudo_norm_trace[k]);
        table.push(row).map_err(|e| RunError::Io(e.to_string()))?;
    }
    let mut diagnostics = Vec::new();
    let threshold = n.leakage_threshold.unwrap_or(DEFAULT_LEAKAGE_THRESHOLD);
    let beta = if rec.closed {
        match extract_geometric_phase_with(&rec, band, threshold) {
            Ok(b) => complex_json(b),
            Err(e) => {
                diagnostics.push(json!({ "level": "warning", "kind": e.kind(), "message": e.to_string() }));
                Value::Null
            }
        }
    } else {
        Value::Null
    };
    let margin = if mode == EvolutionMode::Adiabatic {
        match adiabaticity_margin(model, &path, band) {
            Ok(m) => json!(m),
            Err(e) => {
                diagnostics.push(json!({ "level": "warning", "kind": e.root().kind(), "message": e.to_string() }));
                Value::Null
            }
        }
    } else {
        Value::Null
    };
    let result = json!({
        "band": band,
        "samples": rec.times.len(),
        "leakage": rec.leakage_from(band),
        "dynamical_phase": complex_json(rec.dynamical_phases[band]),
        "geometric_phase": beta,
        "adiabaticity_margin": margin,
        "pseudo_norm_initial": rec.pseudo_norm_trace[0],
        "pseudo_norm_final": rec.pseudo_norm_trace[rec.pseudo_norm_trace.len() - 1],
    });
    Ok(JobOutput { table: Some(table), result, diagnostics })
}

fn build_loop(spec: &LoopSpec) -> Result<ParameterLoop, Error> {
    match spec {
        LoopSpec::Circle { center, radius, plane, vertices } => {
            ParameterLoop::circle(*center, *radius, (plane[0], plane[1]), *vertices)
        }
        LoopSpec::Polygon(p) => ParameterLoop::polygon(p),
    }
}

fn holonomy(cfg: &JobConfig, model: &ModelHandle, band: usize) -> Result<JobOutput, RunError> {
    let n = &cfg.numerics;
    let lp = build_loop(cfg.geometry.loop_.as_ref().expect("validated"))
        .map_err(|e| RunError::Validation(format!("geometry.loop: {e}")))?;
    let opts = HolonomyOptions {
        frame: frame_options(n),
        gauge_trials: n.gauge_trials.unwrap_or(1),
        seed: cfg.seed,
        ..Default::default()
    };
    let res = holonomy_discrete_with(model, &lp, band, &opts)?;
    let mut table = ResultTable::new();
    for (k, (r, inc)) in res.refined_vertices.iter().zip(&res.per_step_increments).enumerate() {
        table.push(RowBuilder::default().int("k", k as i64).point(r).complex("increment", *inc)).map_err(|e| RunError::Io(e.to_string()))?;
    }
    let result = json!({
        "band": band,
        "beta_re": res.beta.re,
        "beta_im": res.beta.im,
        "gauge_checksum": res.gauge_checksum,
        "edges": res.per_step_increments.len(),
    });
    Ok(JobOutput { table: Some(table), result, diagnostics: Vec::new() })
}

fn curvature(cfg: &JobConfig, model: &ModelHandle, band: usize, jobs: usize) -> Result<JobOutput, RunError> {
    let n = &cfg.numerics;
    let plane = n.plane.unwrap_or([0, 1]);
    let h = n.step.unwrap_or(1e-3);
    let normal = 3 - plane[0] - plane[1];
    let orientation = if (plane[1] + 3 - plane[0]) % 3 == 1 { 1.0 } else { -1.0 };
    let reference = model.reference();
    let sites = Sites::from(&cfg.geometry);
    let nan = C64::new(f64::NAN, f64::NAN);
    let (table, failures) = grid_table(&sites, jobs, |row, r| {
        let reference_value = reference
            .as_ref()
            .and_then(|rf| rf.curvature(r, band).ok())
            .map_or(nan, |b| b[normal] * orientation);
        match curvature_plaquette(model, r, (plane[0], plane[1]), h, band) {
            Ok(b) => (row.complex("B", b).complex("B_ref", reference_value).text("error", ""), true),
            Err(e) => (row.complex("B", nan).complex("B_ref", reference_value).text("error", e.root().kind()), false),
        }
    })?;
    let result = json!({ "band": band, "plane": plane, "step": h, "points": table.rows().len(), "failures": failures });
    Ok(JobOutput { table: Some(table), result, diagnostics: failure_diagnostic(failures, "plaquettes") })
}

fn build_surface(spec: &SurfaceSpec) -> Result<TriangulatedSurface, Error> {
    match spec {
        SurfaceSpec::Cube { center, side, subdivisions } => TriangulatedSurface::cube(*center, *side, *subdivisions),
        SurfaceSpec::SphereCap { center, radius, theta_max, n_theta, n_phi } => {
            TriangulatedSurface::sphere_cap(*center, *radius, *theta_max, *n_theta, *n_phi)
        }
        SurfaceSpec::Sphere { center, radius, n_theta, n_phi } => {
            TriangulatedSurface::sphere(*center, *radius, *n_theta, *n_phi)
        }
        SurfaceSpec::Disk { center, radius, plane, n_r, n_phi } => {
            TriangulatedSurface::disk(*center, *radius, (plane[0], plane[1]), *n_r, *n_phi)
        }
    }
}

fn flux(cfg: &JobConfig, model: &ModelHandle, band: usize, jobs: usize) -> Result<JobOutput, RunError> {
    let surface = build_surface(cfg.geometry.surface.as_ref().expect("validated"))
        .map_err(|e| RunError::Validation(format!("geometry.surface: {e}")))?;
    let opts = FluxOptions { frame: frame_options(&cfg.numerics) };
    let f = in_pool(jobs, || flux_surface_with(model, &surface, band, &opts))??;
    let result = json!({
        "band": band,
        "flux_re": f.re,
        "flux_im": f.im,
        "triangles": surface.triangles().len(),
        "closed": surface.closed(),
    });
    Ok(JobOutput { table: None, result, diagnostics: Vec::new() })
}

fn y_find(cfg: &JobConfig, model: &ModelHandle) -> Result<JobOutput, RunError> {
    let points = cfg.geometry.points.as_ref().expect("validated");
    let tol = cfg.numerics.tol.unwrap_or(1e-6);
    let found = find_constant_y(model, points, tol)?;
    let result = match found {
        Some(y) => {
            let n = y.y.dim();
            let rows: Vec<Vec<[f64; 2]>> =
                (0..n).map(|i| (0..n).map(|j| [y.y[(i, j)].re, y.y[(i, j)].im]).collect()).collect();
            json!({ "found": true, "y": rows, "alphas": y.alphas, "residual": y.residual, "tol": tol })
        }
        None => json!({ "found": false, "tol": tol }),
    };
    Ok(JobOutput { table: None, result, diagnostics: Vec::new() })
}

fn real_phase(cfg: &JobConfig, model: &ModelHandle, band: usize, jobs: usize) -> Result<JobOutput, RunError> {
    let h = cfg.numerics.step.unwrap_or(1e-5);
    let sites = Sites::from(&cfg.geometry);
    let (table, failures) = grid_table(&sites, jobs, |row, r| match real_phase_condition(model, r, band, h) {
        Ok(v) => (row.complex("value", v).real("magnitude", v.norm()).text("error", ""), true),
        Err(e) => {
            (row.complex("value", C64::new(f64::NAN, f64::NAN)).real("magnitude", f64::NAN).text("error", e.root().kind()), false)
        }
    })?;
    let col = table.column_index("magnitude").map_err(|e| RunError::Io(e.to_string()))?;
    let max = table
        .rows()
        .iter()
        .filter_map(|r| match r[col] {
            Cell::Real(x) if x.is_finite() => Some(x),
            _ => None,
        })
        .fold(0.0, f64::max);
    let result = json!({ "band": band, "step": h, "max_magnitude": max, "failures": failures });
    Ok(JobOutput { table: Some(table), result, diagnostics: failure_diagnostic(failures, "points") })
}
