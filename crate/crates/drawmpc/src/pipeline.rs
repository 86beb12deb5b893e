//! Drawing input to waypoints, waypoints to a closed-loop run, and the output files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use drawmpc_core::discretize::lqr_closed_loop;
use drawmpc_core::qp::problem_for;
use drawmpc_core::trajgen::{
    circle, figure8, glyph_path, lift_to_reference, median_spacing, polyline_path, velocity_profile_curvature,
    velocity_profile_finite_diff, BinaryImage, Board, WaypointPath, DEFAULT_STRAIGHT_BOOST, DEFAULT_V_CAP,
    DEFAULT_Z_UP,
};
use drawmpc_core::{
    condense, equilibrium_residual, hover_equilibrium, linearize, run_simulation, spectral_radius, LinearModel,
    MagnetMode, SimResult, StateVector,
};
use nalgebra::{DMatrix, Vector3};

use crate::config::{hash_pairs, RawConfig, Settings};
use crate::csvio::{format_fullstate, format_waypoints, parse_points_csv, parse_trajectory, parse_waypoints};
use crate::error::{write, AppError, AppResult};
use crate::formats::{format_linear_model, format_qp};
use crate::metrics::{parameter_value, Metrics, Provenance, DEFAULT_TRANSIENT_STEPS};
use crate::pbm::parse_pbm;

/// Largest allowed `‖rk4_step(X̄, Ū) − X̄‖` for the hover pair.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;
/// Waypoint count for glyph inputs when none is given.
pub const DEFAULT_GLYPH_POINTS: usize = 1001;
/// Waypoint count for analytic shapes when none is given.
pub const DEFAULT_SHAPE_POINTS: usize = 1000;
/// CSV neighbours farther apart than this multiple of the median spacing start a new stroke.
pub const CSV_JUMP_FACTOR: f64 = 5.0;

pub const WAYPOINTS_FILE: &str = "waypoints.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Fig8,
    Circle,
    /// Stationary reference at the board center.
    Hover,
}

impl Shape {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fig8" | "figure8" => Some(Shape::Fig8),
            "circle" => Some(Shape::Circle),
            "hover" => Some(Shape::Hover),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Shape::Fig8 => "fig8",
            Shape::Circle => "circle",
            Shape::Hover => "hover",
        }
    }
}

/// Where the drawing comes from. File inputs are read up front so presets can embed theirs.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Shape(Shape),
    Points { name: String, text: String },
    Glyph { name: String, bytes: Vec<u8> },
    Waypoints { name: String, text: String },
}

impl Input {
    pub fn points_file(path: &Path) -> AppResult<Self> {
        Ok(Input::Points {
            name: path.display().to_string(),
            text: crate::error::read_to_string(path)?,
        })
    }

    pub fn glyph_file(path: &Path) -> AppResult<Self> {
        Ok(Input::Glyph {
            name: path.display().to_string(),
            bytes: std::fs::read(path).map_err(|e| AppError::io(path, e))?,
        })
    }

    pub fn waypoints_file(path: &Path) -> AppResult<Self> {
        Ok(Input::Waypoints {
            name: path.display().to_string(),
            text: crate::error::read_to_string(path)?,
        })
    }

    fn describe(&self) -> Vec<(&'static str, String)> {
        let digest = |bytes: &[u8]| hash_pairs([("content", String::from_utf8_lossy(bytes).as_ref())]);
        match self {
            Input::Shape(s) => vec![("input_kind", "shape".into()), ("input", s.name().into())],
            Input::Points { text, .. } => vec![("input_kind", "points_csv".into()), ("input_sha256", digest(text.as_bytes()))],
            Input::Glyph { bytes, .. } => vec![("input_kind", "glyph_pbm".into()), ("input_sha256", digest(bytes))],
            Input::Waypoints { text, .. } => {
                vec![("input_kind", "waypoints_csv".into()), ("input_sha256", digest(text.as_bytes()))]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    FiniteDiff,
    Curvature,
}

impl Profile {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fd" | "finite-diff" => Some(Profile::FiniteDiff),
            "curvature" => Some(Profile::Curvature),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Profile::FiniteDiff => "fd",
            Profile::Curvature => "curvature",
        }
    }
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub input: Input,
    pub points: Option<usize>,
    pub board: Board,
    pub profile: Profile,
    pub settings: Settings,
    pub transient: usize,
}

impl RunSpec {
    pub fn new(input: Input) -> Self {
        Self {
            input,
            points: None,
            board: Board::default(),
            profile: Profile::FiniteDiff,
            settings: Settings::default(),
            transient: DEFAULT_TRANSIENT_STEPS,
        }
    }

    /// Parameter listing covered by the provenance hash.
    pub fn provenance(&self) -> Provenance {
        let mut pairs: Vec<(&str, String)> = self.settings.canonical();
        pairs.extend(self.input.describe());
        let f = |v: f64| format!("{v:?}");
        pairs.extend([
            ("points", self.points.map_or("default".into(), |n| n.to_string())),
            ("board_w", f(self.board.width)),
            ("board_h", f(self.board.height)),
            ("center_x", f(self.board.center.x)),
            ("center_y", f(self.board.center.y)),
            ("center_z", f(self.board.center.z)),
            ("profile", self.profile.name().into()),
            ("transient_steps", self.transient.to_string()),
        ]);
        Provenance {
            config_sha256: hash_pairs(pairs.iter().map(|(k, v)| (*k, v.as_str()))),
            parameters: pairs.iter().map(|(k, v)| (k.to_string(), parameter_value(v))).collect(),
        }
    }
}

fn apply_profile(path: WaypointPath, profile: Profile) -> AppResult<WaypointPath> {
    Ok(match profile {
        Profile::FiniteDiff => velocity_profile_finite_diff(&path, DEFAULT_V_CAP)?,
        Profile::Curvature => velocity_profile_curvature(&path, DEFAULT_V_CAP, DEFAULT_STRAIGHT_BOOST)?,
    })
}

/// Waypoints with velocities for the spec's input.
pub fn generate(spec: &RunSpec) -> AppResult<WaypointPath> {
    let board = &spec.board;
    let half = 0.5 * board.width.min(board.height);
    if !(half > 0.0) {
        return Err(AppError::Input("board dimensions must be positive".into()));
    }
    let mut path = match &spec.input {
        Input::Shape(shape) => {
            let n = spec.points.unwrap_or(DEFAULT_SHAPE_POINTS);
            match shape {
                Shape::Fig8 => apply_profile(figure8(n, half, board.center)?, spec.profile)?,
                Shape::Circle => apply_profile(circle(n, half, board.center)?, spec.profile)?,
                Shape::Hover => {
                    let mut p = WaypointPath::new(vec![board.center; n], spec.settings.dt)?;
                    p.velocities = Some(vec![Vector3::zeros(); n]);
                    p
                }
            }
        }
        Input::Points { name, text } => {
            let pts = parse_points_csv(text, name)?;
            let n = spec.points.unwrap_or(pts.len());
            let spacing = median_spacing(&pts);
            let jump = if spacing > 0.0 { CSV_JUMP_FACTOR * spacing } else { f64::INFINITY };
            apply_profile(polyline_path(&pts, jump, n, board, DEFAULT_Z_UP)?, spec.profile)?
        }
        Input::Glyph { name, bytes } => {
            let img: BinaryImage = parse_pbm(bytes, name)?;
            let n = spec.points.unwrap_or(DEFAULT_GLYPH_POINTS);
            apply_profile(glyph_path(&img, n, board, DEFAULT_Z_UP)?, spec.profile)?
        }
        Input::Waypoints { name, text } => {
            let p = parse_waypoints(text, name, spec.settings.dt)?;
            if p.velocities.is_some() {
                p
            } else {
                apply_profile(p, spec.profile)?
            }
        }
    };
    path.dt = spec.settings.dt;
    Ok(path)
}

/// Hover equilibrium residual, open- and closed-loop spectral radii and hover command.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub residual: f64,
    pub rho_open: f64,
    pub rho_closed: f64,
    pub u_hover: f64,
    pub model: LinearModel,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.residual < EQUILIBRIUM_TOL && self.rho_closed < 1.0
    }

    pub fn summary(&self) -> String {
        format!(
            "equilibrium residual {:e} (limit {:e})\nspectral radius A {:.9}\nspectral radius A-BK {:.9}\nhover command {:.6}\n",
            self.residual, EQUILIBRIUM_TOL, self.rho_open, self.rho_closed, self.u_hover
        )
    }

    /// Stability error describing the first failed check.
    pub fn require(&self) -> AppResult<()> {
        if !(self.residual < EQUILIBRIUM_TOL) {
            return Err(AppError::Stability(format!(
                "equilibrium residual {:e} is not below {:e}",
                self.residual, EQUILIBRIUM_TOL
            )));
        }
        if !(self.rho_closed < 1.0) {
            return Err(AppError::Stability(format!(
                "closed-loop spectral radius {} is not below 1",
                self.rho_closed
            )));
        }
        Ok(())
    }
}

pub fn check(settings: &Settings) -> AppResult<CheckReport> {
    let p = &settings.model;
    let (x, u) = hover_equilibrium(p);
    let residual = equilibrium_residual(&x, &u, settings.dt, p)?;
    let model = linearize(&x, &u, settings.dt, p)?;
    let (_, rho_closed) = lqr_closed_loop(&model, &settings.mpc.q(), &settings.mpc.r())?;
    let rho_open = spectral_radius(&DMatrix::from_iterator(13, 13, model.a.iter().copied()));
    Ok(CheckReport {
        residual,
        rho_open,
        rho_closed,
        u_hover: u.0[0],
        model,
    })
}

/// Files and figures from one closed-loop run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub waypoints_csv: String,
    pub trajectory_csv: String,
    pub metrics: Metrics,
    pub sim: SimResult,
    pub check: CheckReport,
    pub wall_time_s: f64,
}

/// Checks, linearization and the closed-loop run for already generated waypoints.
pub fn simulate(spec: &RunSpec, path: &WaypointPath) -> AppResult<(SimResult, CheckReport)> {
    let report = check(&spec.settings)?;
    report.require()?;
    let reference = lift_to_reference(path, spec.settings.mpc.horizon)?;
    let x0 = reference.states[0];
    let sim = run_simulation(&reference, &report.model, &spec.settings.mpc, &spec.settings.model, &x0)?;
    Ok((sim, report))
}

/// Full optimize pipeline in memory. Metrics are computed from the serialized files, so
/// re-reading them reproduces the same numbers.
pub fn optimize(spec: &RunSpec) -> AppResult<RunOutput> {
    let path = generate(spec)?;
    let started = Instant::now();
    let (mut sim, check) = simulate(spec, &path)?;
    let wall_time_s = started.elapsed().as_secs_f64();
    sim.wall_time_s = Some(wall_time_s);
    let waypoints_csv = format_waypoints(&path);
    let trajectory_csv = format_fullstate(&sim.states, spec.settings.dt);
    let mut metrics = metrics_from_text(
        (&waypoints_csv, WAYPOINTS_FILE),
        (&trajectory_csv, TRAJECTORY_FILE),
        spec.transient,
        spec.provenance(),
    )?;
    metrics.solver_iters_total = Some(sim.solver_iterations());
    Ok(RunOutput {
        waypoints_csv,
        trajectory_csv,
        metrics,
        sim,
        check,
        wall_time_s,
    })
}

/// Metrics of an actual trajectory file against a reference file, both either waypoint or
/// full-state CSVs.
pub fn metrics_from_text(
    reference: (&str, &str),
    actual: (&str, &str),
    transient: usize,
    provenance: Provenance,
) -> AppResult<Metrics> {
    let r = parse_trajectory(reference.0, reference.1)?;
    let a = parse_trajectory(actual.0, actual.1)?;
    Metrics::compute(&r, &a, transient, provenance)
}

/// Provenance for a standalone metrics comparison.
pub fn file_provenance(reference: &str, actual: &str, transient: usize) -> Provenance {
    let pairs = [
        ("reference_sha256", hash_pairs([("content", reference)])),
        ("actual_sha256", hash_pairs([("content", actual)])),
        ("transient_steps", transient.to_string()),
    ];
    Provenance {
        config_sha256: hash_pairs(pairs.iter().map(|(k, v)| (*k, v.as_str()))),
        parameters: pairs.iter().map(|(k, v)| (k.to_string(), parameter_value(v))).collect(),
    }
}

/// The condensed QP of the first receding-horizon step, for external cross-checks.
pub fn first_qp_dump(spec: &RunSpec, path: &WaypointPath, lm: &LinearModel) -> AppResult<String> {
    let reference = lift_to_reference(path, spec.settings.mpc.horizon)?;
    let n = spec.settings.mpc.horizon;
    let x_des: Vec<StateVector> = reference.states[..=n].iter().map(|s| lm.delta_state(s)).collect();
    let x_ic = lm.delta_state(&reference.states[0]);
    Ok(format_qp(&condense(&problem_for(lm, &spec.settings.mpc, x_ic, x_des))?))
}

pub fn write_outputs(out: &RunOutput, dir: &Path) -> AppResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let files = [
        (WAYPOINTS_FILE, out.waypoints_csv.as_str()),
        (TRAJECTORY_FILE, out.trajectory_csv.as_str()),
    ];
    let mut written = Vec::new();
    for (name, contents) in files {
        let p = dir.join(name);
        write(&p, contents)?;
        written.push(p);
    }
    let p = dir.join(METRICS_FILE);
    write(&p, out.metrics.to_json())?;
    written.push(p);
    Ok(written)
}

pub fn write_model(lm: &LinearModel, path: &Path) -> AppResult<()> {
    write(path, format_linear_model(lm))
}

/// Named scenario with its own input, waypoint count, horizon and magnet handling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub points: usize,
    pub horizon: usize,
    pub magnet: MagnetMode,
}

pub const PRESETS: [Preset; 5] = [
    Preset { name: "fig8-1000-N75", points: 1000, horizon: 75, magnet: MagnetMode::AlwaysOn },
    Preset { name: "circle-1000-N75", points: 1000, horizon: 75, magnet: MagnetMode::AlwaysOn },
    Preset { name: "cloud-1000-N20", points: 1000, horizon: 20, magnet: MagnetMode::AlwaysOn },
    Preset { name: "hi-1001-N20", points: 1001, horizon: 20, magnet: MagnetMode::AlwaysOn },
    Preset { name: "human-1582-N20", points: 1582, horizon: 20, magnet: MagnetMode::AlwaysOn },
];

const CLOUD_CSV: &str = include_str!("../assets/cloud.csv");
const HUMAN_CSV: &str = include_str!("../assets/human.csv");
const HI_PBM: &[u8] = include_bytes!("../assets/hi.pbm");

impl Preset {
    pub fn find(name: &str) -> Option<Self> {
        PRESETS.iter().copied().find(|p| p.name == name)
    }

    pub fn input(&self) -> Input {
        match self.name {
            "fig8-1000-N75" => Input::Shape(Shape::Fig8),
            "circle-1000-N75" => Input::Shape(Shape::Circle),
            "cloud-1000-N20" => Input::Points { name: "cloud.csv".into(), text: CLOUD_CSV.into() },
            "hi-1001-N20" => Input::Glyph { name: "hi.pbm".into(), bytes: HI_PBM.to_vec() },
            _ => Input::Points { name: "human.csv".into(), text: HUMAN_CSV.into() },
        }
    }

    /// Settings the preset imposes on top of the defaults; later sources may override them.
    pub fn config(&self) -> RawConfig {
        let mut raw = RawConfig::default();
        raw.insert("horizon", &self.horizon.to_string(), self.name, 0);
        let mode = match self.magnet {
            MagnetMode::AlwaysOn => "always_on",
            MagnetMode::ContactGated => "contact_gated",
        };
        raw.insert("magnet_mode", mode, self.name, 0);
        raw
    }

    /// Run specification with default board and settings.
    pub fn spec(&self) -> AppResult<RunSpec> {
        let mut spec = RunSpec::new(self.input());
        spec.points = Some(self.points);
        spec.settings = self.config().resolve()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(input: Input, points: usize) -> RunSpec {
        let mut s = RunSpec::new(input);
        s.points = Some(points);
        s
    }

    #[test]
    fn shapes_fill_the_board() {
        let p = generate(&spec(Input::Shape(Shape::Circle), 40)).unwrap();
        assert_eq!(p.len(), 40);
        assert!((p.points[0].x - 0.1).abs() < 1e-15);
        assert!((p.max_speed() - DEFAULT_V_CAP).abs() < 1e-15);
        let small = generate(&spec(Input::Shape(Shape::Circle), 4)).unwrap();
        assert_eq!(small.len(), 4);
    }

    #[test]
    fn hover_shape_is_stationary() {
        let p = generate(&spec(Input::Shape(Shape::Hover), 30)).unwrap();
        assert!(p.points.iter().all(|q| *q == Vector3::zeros()));
        assert_eq!(p.max_speed(), 0.0);
    }

    #[test]
    fn points_csv_default_count_is_row_count() {
        let text = "x,y\n0,0\n1,0\n2,1\n3,3\n4,2\n";
        let mut s = spec(Input::Points { name: "p".into(), text: text.into() }, 0);
        s.points = None;
        let p = generate(&s).unwrap();
        assert_eq!(p.len(), 5);
        assert!(p.pen.iter().all(|&b| b));
    }

    #[test]
    fn glyph_parse_errors_are_input_errors() {
        let e = generate(&spec(Input::Glyph { name: "g".into(), bytes: b"P7".to_vec() }, 10)).unwrap_err();
        assert_eq!(e.exit_code(), crate::error::exit::INPUT);
    }

    #[test]
    fn default_check_passes() {
        let r = check(&Settings::default()).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert!(r.rho_closed < 1.0);
        assert!((r.u_hover - 3.9662).abs() < 1e-4);
    }

    #[test]
    fn failed_checks_are_stability_errors() {
        let good = check(&Settings::default()).unwrap();
        let unstable = CheckReport { rho_closed: 1.0, ..good.clone() };
        let off_equilibrium = CheckReport { residual: 1e-6, ..good };
        for r in [unstable, off_equilibrium] {
            assert!(!r.passed());
            assert_eq!(r.require().unwrap_err().exit_code(), crate::error::exit::STABILITY);
        }
    }

    #[test]
    fn provenance_hash_tracks_settings() {
        let a = spec(Input::Shape(Shape::Fig8), 100);
        let mut b = a.clone();
        assert_eq!(a.provenance(), b.provenance());
        b.settings.mpc.horizon = 20;
        assert_ne!(a.provenance().config_sha256, b.provenance().config_sha256);
        assert_eq!(a.provenance().parameters["horizon"], 75);
        assert_eq!(a.provenance().parameters["input"], "fig8");
    }

    #[test]
    fn presets_resolve() {
        for p in PRESETS {
            let s = p.spec().unwrap();
            assert_eq!(s.settings.mpc.horizon, p.horizon);
            assert!(!matches!(s.input, Input::Waypoints { .. }));
        }
        assert!(Preset::find("nope").is_none());
    }
}
