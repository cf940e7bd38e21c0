use serde::{Deserialize, Serialize};

use crate::dynamics::EvolutionMode;
use crate::models::ModelSpec;
use crate::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Spectrum,
    EpScan,
    Evolve,
    Holonomy,
    Curvature,
    Flux,
    YFind,
    CheckRealPhase,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::EpScan => "ep-scan",
            Task::Evolve => "evolve",
            Task::Holonomy => "holonomy",
            Task::Curvature => "curvature",
            Task::Flux => "flux",
            Task::YFind => "y-find",
            Task::CheckRealPhase => "check-real-phase",
        }
    }
}

/// One job read from a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: ModelSpec,
    pub task: Task,
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputSpec,
    /// Seed for gauge randomization.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Point3>>,
    #[serde(default, rename = "loop", skip_serializing_if = "Option::is_none")]
    pub loop_: Option<LoopSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSpec>,
}

/// Rectangular grid over two parameter axes; the remaining coordinate comes from `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: [usize; 2],
    pub ranges: [[f64; 2]; 2],
    pub counts: [usize; 2],
    #[serde(default)]
    pub base: Point3,
}

impl GridSpec {
    /// Points in row-major order (first axis outer).
    pub fn points(&self) -> Vec<(usize, usize, Point3)> {
        let coord = |k: usize, i: usize| {
            let [lo, hi] = self.ranges[k];
            if self.counts[k] <= 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (self.counts[k] - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.counts[0] * self.counts[1]);
        for i in 0..self.counts[0] {
            for j in 0..self.counts[1] {
                let mut r = self.base;
                r[self.axes[0]] = coord(0, i);
                r[self.axes[1]] = coord(1, j);
                out.push((i, j, r));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LoopSpec {
    Circle { center: Point3, radius: f64, #[serde(default = "default_plane")] plane: [usize; 2], vertices: usize },
    /// Open vertex list; the loop is closed automatically.
    Polygon(Vec<Point3>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    Circle { center: Point3, radius: f64, #[serde(default = "default_plane")] plane: [usize; 2] },
    Linear { from: Point3, to: Point3 },
    BackAndForth { from: Point3, to: Point3 },
    Constant { point: Point3 },
    /// Visited at uniform time spacing.
    Points(Vec<Point3>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    Cube { center: Point3, side: f64, #[serde(default = "default_subdivisions")] subdivisions: usize },
    SphereCap { center: Point3, radius: f64, theta_max: f64, n_theta: usize, n_phi: usize },
    Sphere { center: Point3, radius: f64, n_theta: usize, n_phi: usize },
    Disk { center: Point3, radius: f64, #[serde(default = "default_plane")] plane: [usize; 2], n_r: usize, n_phi: usize },
}

fn default_plane() -> [usize; 2] {
    [0, 1]
}

fn default_subdivisions() -> usize {
    4
}

/// Numerical settings; absent fields take library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<usize>,
    /// Finite-difference or plaquette step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<EvolutionMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leakage_threshold: Option<f64>,
    /// Residual tolerance for `y-find`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge_trials: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKindName {
    Heatmap,
    Line,
    Field,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSpec {
    pub kind: PlotKindName,
    /// Column names: `[x, y, value]` (heatmap), `[x, y]` (line), `[x, y, u, v]` (field).
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Base file name; defaults to the task name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotSpec>,
}

/// Parses a config, reporting the JSON path of the first offending field.
pub fn parse_config(text: &str) -> Result<JobConfig, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: JobConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        format!("{path}: {}", e.into_inner())
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

fn positive(name: &str, v: Option<f64>) -> Result<(), String> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(format!("numerics.{name}: must be positive and finite")),
        _ => Ok(()),
    }
}

fn axis_pair(name: &str, p: [usize; 2]) -> Result<(), String> {
    if p[0] > 2 || p[1] > 2 || p[0] == p[1] {
        return Err(format!("{name}: axes must be two distinct values in 0..=2"));
    }
    Ok(())
}

pub fn validate(cfg: &JobConfig) -> Result<(), String> {
    let n = &cfg.numerics;
    positive("step", n.step)?;
    positive("cluster_tol", n.cluster_tol)?;
    positive("rank_tol", n.rank_tol)?;
    positive("total_time", n.total_time)?;
    positive("leakage_threshold", n.leakage_threshold)?;
    positive("tol", n.tol)?;
    if let Some(g) = n.gap_floor {
        if !(g >= 0.0 && g.is_finite()) {
            return Err("numerics.gap_floor: must be nonnegative and finite".into());
        }
    }
    if n.steps == Some(0) {
        return Err("numerics.steps: must be positive".into());
    }
    if let Some(p) = n.plane {
        axis_pair("numerics.plane", p)?;
    }
    if let Some(name) = &cfg.output.name {
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err("output.name: must be a plain file name".into());
        }
    }
    if let Some(plot) = &cfg.output.plot {
        let want = match plot.kind {
            PlotKindName::Heatmap => 3,
            PlotKindName::Line => 2,
            PlotKindName::Field => 4,
        };
        if plot.columns.len() != want {
            return Err(format!("output.plot.columns: {:?} plots take {want} columns", plot.kind));
        }
    }
    let g = &cfg.geometry;
    if let Some(grid) = &g.grid {
        axis_pair("geometry.grid.axes", grid.axes)?;
        if grid.counts.contains(&0) {
            return Err("geometry.grid.counts: must be positive".into());
        }
        if grid.ranges.iter().flatten().chain(grid.base.iter()).any(|x| !x.is_finite()) {
            return Err("geometry.grid: values must be finite".into());
        }
    }
    if let Some(LoopSpec::Circle { plane, radius, vertices, .. }) = &g.loop_ {
        axis_pair("geometry.loop.circle.plane", *plane)?;
        if *vertices < 3 || !(*radius >= 0.0) {
            return Err("geometry.loop.circle: needs vertices >= 3 and radius >= 0".into());
        }
    }
    let need = |ok: bool, what: &str| -> Result<(), String> {
        if ok {
            Ok(())
        } else {
            Err(format!("geometry: task `{}` requires {what}", cfg.task.name()))
        }
    };
    match cfg.task {
        Task::Spectrum | Task::EpScan | Task::Curvature | Task::CheckRealPhase => {
            need(g.grid.is_some() || g.points.is_some(), "`grid` or `points`")
        }
        Task::YFind => need(g.points.as_ref().is_some_and(|p| !p.is_empty()), "`points`"),
        Task::Evolve => need(g.path.is_some(), "`path`"),
        Task::Holonomy => need(g.loop_.is_some(), "`loop`"),
        Task::Flux => need(g.surface.is_some(), "`surface`"),
    }
}
