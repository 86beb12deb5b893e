use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;

use crate::config::RawConfig;
use crate::error::{exit, read_to_string, write, AppError, AppResult};
use crate::metrics::DEFAULT_TRANSIENT_STEPS;
use crate::pipeline::{
    self, file_provenance, metrics_from_text, Input, Preset, Profile, RunSpec, Shape, WAYPOINTS_FILE,
};

#[derive(Debug, Parser)]
#[command(name = "drawmpc", version, about = "Drawing trajectories for a magnet-carrying quadrotor via MPC")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the waypoint CSV for a drawing.
    Generate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the closed-loop MPC simulation and write waypoints, full states and metrics.
    Optimize {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write the condensed QP of the first step to this file.
        #[arg(long)]
        dump_qp: Option<PathBuf>,
    },
    /// Compare an actual trajectory CSV against a reference CSV.
    Metrics {
        /// Reference waypoint or full-state CSV.
        #[arg(long)]
        reference: PathBuf,
        /// Actual waypoint or full-state CSV.
        #[arg(long)]
        actual: PathBuf,
        /// Steps excluded from the post-transient figures.
        #[arg(long, default_value_t = DEFAULT_TRANSIENT_STEPS)]
        transient: usize,
        /// Write the JSON here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the hover equilibrium residual and spectral radii.
    Check {
        #[command(flatten)]
        params: ParamArgs,
        /// Write the linearized model to this file.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Fig8,
    Circle,
    Hover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Fd,
    Curvature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MagnetArg {
    On,
    Off,
    Gated,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct InputSource {
    /// Analytic shape.
    #[arg(long, value_enum)]
    shape: Option<ShapeArg>,
    /// Two-column x,y point CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Binary PBM glyph (P1 or P4).
    #[arg(long)]
    glyph: Option<PathBuf>,
    /// Existing waypoint CSV.
    #[arg(long)]
    waypoints: Option<PathBuf>,
    /// Named scenario.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(pipeline::PRESETS.map(|p| p.name)))]
    preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[command(flatten)]
    source: InputSource,
    /// Number of waypoints.
    #[arg(long)]
    points: Option<usize>,
    /// Board width, m.
    #[arg(long)]
    board_w: Option<f64>,
    /// Board height, m.
    #[arg(long)]
    board_h: Option<f64>,
    /// Board center as x,y or x,y,z, m.
    #[arg(long, value_parser = parse_center)]
    center: Option<Vector3<f64>>,
    /// Velocity profile.
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    /// Steps excluded from the post-transient metrics.
    #[arg(long)]
    transient: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Flat key = value parameter file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// MPC horizon length.
    #[arg(long)]
    horizon: Option<usize>,
    /// Time step, s.
    #[arg(long)]
    dt: Option<f64>,
    /// Magnet force always on, removed, or only in contact with the board.
    #[arg(long, value_enum)]
    magnet: Option<MagnetArg>,
}

fn parse_center(s: &str) -> Result<Vector3<f64>, String> {
    let parts: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match parts.map_err(|e| e.to_string())?.as_slice() {
        [x, y] => Ok(Vector3::new(*x, *y, 0.0)),
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err("expected x,y or x,y,z".into()),
    }
}

impl ParamArgs {
    fn raw(&self, base: RawConfig) -> AppResult<RawConfig> {
        let mut raw = base;
        if let Some(path) = &self.config {
            raw.merge(RawConfig::parse(&read_to_string(path)?, &path.display().to_string())?);
        }
        if let Some(h) = self.horizon {
            raw.set("horizon", h);
        }
        if let Some(dt) = self.dt {
            raw.set("dt", dt);
        }
        match self.magnet {
            Some(MagnetArg::On) => raw.set("magnet_mode", "always_on"),
            Some(MagnetArg::Gated) => raw.set("magnet_mode", "contact_gated"),
            Some(MagnetArg::Off) => raw.set("magnet_force", 0),
            None => {}
        }
        Ok(raw)
    }
}

fn build_spec(input: &InputArgs, params: &ParamArgs) -> AppResult<RunSpec> {
    let src = &input.source;
    let preset = src.preset.as_deref().map(|name| Preset::find(name).expect("validated by clap"));
    let source = if let Some(p) = &preset {
        p.input()
    } else if let Some(shape) = src.shape {
        Input::Shape(match shape {
            ShapeArg::Fig8 => Shape::Fig8,
            ShapeArg::Circle => Shape::Circle,
            ShapeArg::Hover => Shape::Hover,
        })
    } else if let Some(p) = &src.csv {
        Input::points_file(p)?
    } else if let Some(p) = &src.glyph {
        Input::glyph_file(p)?
    } else if let Some(p) = &src.waypoints {
        Input::waypoints_file(p)?
    } else {
        return Err(AppError::Input("no input given".into()));
    };
    let base = preset.map_or_else(RawConfig::default, |p| p.config());
    let mut spec = RunSpec::new(source);
    spec.settings = params.raw(base)?.resolve()?;
    spec.points = input.points.or(preset.map(|p| p.points));
    if let Some(w) = input.board_w {
        spec.board.width = w;
    }
    if let Some(h) = input.board_h {
        spec.board.height = h;
    }
    if let Some(c) = input.center {
        spec.board.center = c;
    }
    if let Some(p) = input.profile {
        spec.profile = match p {
            ProfileArg::Fd => Profile::FiniteDiff,
            ProfileArg::Curvature => Profile::Curvature,
        };
    }
    if let Some(t) = input.transient {
        spec.transient = t;
    }
    Ok(spec)
}

// println! that ignores a closed standard output.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn execute(cmd: &Command) -> AppResult<()> {
    match cmd {
        Command::Generate { input, params, out } => {
            let spec = build_spec(input, params)?;
            let path = pipeline::generate(&spec)?;
            std::fs::create_dir_all(out).map_err(|e| AppError::io(out, e))?;
            let file = out.join(WAYPOINTS_FILE);
            write(&file, crate::csvio::format_waypoints(&path))?;
            say!("points {}", path.len());
            say!("max speed {:e} m/s", path.max_speed());
            say!("wrote {}", file.display());
        }
        Command::Optimize {
            input,
            params,
            out,
            dump_qp,
        } => {
            let spec = build_spec(input, params)?;
            if let Some(qp_path) = dump_qp {
                let path = pipeline::generate(&spec)?;
                let report = pipeline::check(&spec.settings)?;
                write(qp_path, pipeline::first_qp_dump(&spec, &path, &report.model)?)?;
            }
            let run = pipeline::optimize(&spec)?;
            for f in pipeline::write_outputs(&run, out)? {
                say!("wrote {}", f.display());
            }
            let m = &run.metrics;
            say!(
                "steps {} mean abs error x {:.3e} y {:.3e} z {:.3e} m, max after {} steps {:.3e} m",
                m.steps,
                m.mean_abs_error_m.x,
                m.mean_abs_error_m.y,
                m.mean_abs_error_m.z,
                m.transient_steps,
                m.max_error_post_transient_m
            );
            eprintln!("simulation wall time {:.3} s", run.wall_time_s);
        }
        Command::Metrics {
            reference,
            actual,
            transient,
            out,
        } => {
            let r = read_to_string(reference)?;
            let a = read_to_string(actual)?;
            let m = metrics_from_text(
                (&r, &reference.display().to_string()),
                (&a, &actual.display().to_string()),
                *transient,
                file_provenance(&r, &a, *transient),
            )?;
            match out {
                Some(p) => write(p, m.to_json())?,
                None => {
                    let _ = std::io::stdout().lock().write_all(m.to_json().as_bytes());
                }
            }
        }
        Command::Check { params, model_out } => {
            let settings = params.raw(RawConfig::default())?.resolve()?;
            let report = pipeline::check(&settings)?;
            let _ = std::io::stdout().lock().write_all(report.summary().as_bytes());
            if let Some(p) = model_out {
                pipeline::write_model(&report.model, p)?;
            }
            report.require()?;
            say!("ok");
        }
    }
    Ok(())
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::INPUT } else { exit::OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
