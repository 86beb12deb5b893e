use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use drawmpc::csvio::parse_trajectory;
use drawmpc::formats::{parse_linear_model, parse_qp};
use drawmpc::metrics::Metrics;
use drawmpc_core::{hover_equilibrium, linearize, ModelParams};
use tempfile::TempDir;

fn drawmpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drawmpc")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().skip(1).count()
}

#[test]
fn generate_circle_with_four_points() {
    let dir = TempDir::new().unwrap();
    let out = drawmpc(&["generate", "--shape", "circle", "--points", "4", "--out", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(data_rows(&dir.path().join("waypoints.csv")), 4);
}

#[test]
fn generate_figure8_thousand_points() {
    let dir = TempDir::new().unwrap();
    let out = drawmpc(&["generate", "--shape", "fig8", "--points", "1000", "--out", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("waypoints.csv")).unwrap();
    let states = parse_trajectory(&text, "waypoints.csv").unwrap();
    assert_eq!(states.len(), 1000);
    let max_speed = states.iter().map(|s| s.v.norm()).fold(0.0, f64::max);
    assert!((max_speed - 0.01).abs() < 1e-12, "{max_speed}");
}

#[test]
fn generate_from_glyph_file() {
    let dir = TempDir::new().unwrap();
    let glyph = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/glyphs/two_parts.pbm");
    let out = drawmpc(&["generate", "--glyph", p(&glyph), "--out", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("waypoints.csv")).unwrap();
    assert_eq!(text.lines().count() - 1, 1001);
    assert!(text.lines().skip(1).any(|l| l.ends_with(",0")), "expected a pen-up segment");
}

#[test]
fn exactly_one_input_source_is_required() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&drawmpc(&["generate", "--out", p(dir.path())])), 2);
    let both = drawmpc(&["generate", "--shape", "fig8", "--preset", "hi-1001-N20", "--out", p(dir.path())]);
    assert_eq!(code(&both), 2);
}

#[test]
fn missing_and_malformed_inputs_exit_with_input_code() {
    let dir = TempDir::new().unwrap();
    let missing = drawmpc(&["generate", "--csv", "/nonexistent/points.csv", "--out", p(dir.path())]);
    assert_eq!(code(&missing), 2);

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x,y\n0,0\n1,oops\n2,2\n").unwrap();
    let out = drawmpc(&["generate", "--csv", p(&bad), "--out", p(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains(":3"), "{}", stderr(&out));

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "horizon = 20\nwidgets = 3\n").unwrap();
    let out = drawmpc(&["check", "--config", p(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("widgets"), "{}", stderr(&out));
}

#[test]
fn check_passes_by_default_and_fails_on_unstabilizable_model() {
    assert_eq!(code(&drawmpc(&["check"])), 0);
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("stiff.cfg");
    fs::write(&cfg, "v_eps = 1e-4\n").unwrap();
    let out = drawmpc(&["check", "--config", p(&cfg)]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn starved_solver_exits_with_solver_code() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("starved.cfg");
    fs::write(&cfg, "solver_max_iter = 1\nsolver_tol = 1e-14\n").unwrap();
    let out = drawmpc(&[
        "optimize", "--shape", "circle", "--points", "200", "--horizon", "20", "--config", p(&cfg), "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(stderr(&out).contains("step"), "{}", stderr(&out));
}

fn optimize_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["optimize", "--shape", "circle", "--points", "300", "--horizon", "20", "--out", p(dir)];
    args.extend_from_slice(extra);
    drawmpc(&args)
}

#[test]
fn optimize_is_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(code(&optimize_into(a.path(), &[])), 0);
    assert_eq!(code(&optimize_into(b.path(), &[])), 0);
    for name in ["waypoints.csv", "trajectory.csv", "metrics.json"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn metrics_command_reproduces_optimize_metrics() {
    let dir = TempDir::new().unwrap();
    let run = drawmpc(&["optimize", "--preset", "fig8-1000-N75", "--out", p(dir.path())]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let stored = Metrics::from_json(&fs::read_to_string(dir.path().join("metrics.json")).unwrap(), "metrics").unwrap();
    assert!(stored.max_error_post_transient_m <= 5e-3);

    let recomputed = dir.path().join("again.json");
    let out = drawmpc(&[
        "metrics",
        "--reference",
        p(&dir.path().join("waypoints.csv")),
        "--actual",
        p(&dir.path().join("trajectory.csv")),
        "--out",
        p(&recomputed),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let again = Metrics::from_json(&fs::read_to_string(&recomputed).unwrap(), "metrics").unwrap();
    assert_eq!(stored.errors_only(), again.errors_only());
}

#[test]
fn metrics_of_a_file_against_itself_are_zero() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&optimize_into(dir.path(), &[])), 0);
    let traj = dir.path().join("trajectory.csv");
    let out = drawmpc(&["metrics", "--reference", p(&traj), "--actual", p(&traj)]);
    assert_eq!(code(&out), 0);
    let m = Metrics::from_json(&String::from_utf8(out.stdout).unwrap(), "metrics").unwrap();
    assert_eq!(m.max_error_m, 0.0);
    assert_eq!([m.mean_abs_error_m.x, m.mean_abs_error_m.y, m.mean_abs_error_m.z], [0.0; 3]);
}

#[test]
fn metrics_recover_a_known_offset() {
    let dir = TempDir::new().unwrap();
    let mut reference = String::from("x,y,z\n");
    let mut actual = String::from("x,y,z\n");
    for i in 0..200 {
        let x = i as f64 * 1e-3;
        reference.push_str(&format!("{x},0,0\n"));
        actual.push_str(&format!("{x},0.003,0\n"));
    }
    let (r, a) = (dir.path().join("r.csv"), dir.path().join("a.csv"));
    fs::write(&r, reference).unwrap();
    fs::write(&a, actual).unwrap();
    let out = drawmpc(&["metrics", "--reference", p(&r), "--actual", p(&a), "--transient", "50"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let m = Metrics::from_json(&String::from_utf8(out.stdout).unwrap(), "metrics").unwrap();
    assert_eq!([m.mean_abs_error_m.x, m.mean_abs_error_m.z], [0.0; 2]);
    for e in [m.max_error_m, m.mean_abs_error_m.y, m.max_error_post_transient_m] {
        assert!((e - 0.003).abs() < 1e-15, "{e}");
    }
    assert_eq!(m.transient_steps, 50);
}

#[test]
fn metrics_reject_length_mismatch() {
    let dir = TempDir::new().unwrap();
    let (r, a) = (dir.path().join("r.csv"), dir.path().join("a.csv"));
    fs::write(&r, "x,y,z\n0,0,0\n1,0,0\n2,0,0\n").unwrap();
    fs::write(&a, "x,y,z\n0,0,0\n1,0,0\n").unwrap();
    assert_eq!(code(&drawmpc(&["metrics", "--reference", p(&r), "--actual", p(&a)])), 2);
}

#[test]
fn dumped_model_matches_library_linearization() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("model.txt");
    assert_eq!(code(&drawmpc(&["check", "--model-out", p(&path)])), 0);
    let parsed = parse_linear_model(&fs::read_to_string(&path).unwrap(), "model.txt").unwrap();
    let params = ModelParams::default();
    let (x, u) = hover_equilibrium(&params);
    let lm = linearize(&x, &u, 0.01, &params).unwrap();
    assert_eq!(parsed.a, lm.a);
    assert_eq!(parsed.b, lm.b);
}

#[test]
fn dumped_qp_has_consistent_dimensions() {
    let dir = TempDir::new().unwrap();
    let qp = dir.path().join("qp.txt");
    assert_eq!(code(&optimize_into(dir.path(), &["--dump-qp", p(&qp)])), 0);
    let (h, g, lo, hi) = parse_qp(&fs::read_to_string(&qp).unwrap(), "qp.txt").unwrap();
    let n = 4 * 20;
    assert_eq!(h.shape(), (n, n));
    assert_eq!(g.len(), n);
    assert!((0..n).all(|i| lo[i] <= hi[i]));
    assert!((&h - h.transpose()).amax() <= 1e-12 * h.amax());
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "horizon = 30\n").unwrap();
    let out = drawmpc(&[
        "optimize", "--shape", "circle", "--points", "150", "--config", p(&cfg), "--horizon", "12", "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let m = Metrics::from_json(&fs::read_to_string(dir.path().join("metrics.json")).unwrap(), "metrics").unwrap();
    assert_eq!(m.provenance.parameters["horizon"], 12);
}
