//! Acceptance criteria, one line of output per criterion.
//!
//! Run with `cargo test -p drawmpc --test acceptance -- --nocapture`.

use std::path::PathBuf;
use std::time::Instant;

use drawmpc::pbm::load_pbm;
use drawmpc::pipeline::{self, Input, Preset, RunSpec, Shape};
use drawmpc_core::discretize::lqr_closed_loop;
use drawmpc_core::trajgen::{
    circle, figure8, path_length, skeletonize, tsp_order, velocity_profile_curvature, velocity_profile_finite_diff,
    BinaryImage, DEFAULT_STRAIGHT_BOOST, DEFAULT_V_CAP,
};
use drawmpc_core::{
    equilibrium_residual, hover_equilibrium, linearize, rk4_step, solve_box_qp, ControlInput, InputVector,
    ModelParams, MpcConfig, State, StateVector,
};
use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, pass, detail }
}

fn c1_equilibrium() -> Outcome {
    let p = ModelParams::default();
    let (x, u) = hover_equilibrium(&p);
    let r = equilibrium_residual(&x, &u, 0.01, &p).unwrap();
    outcome("1 equilibrium residual < 1e-8", r < 1e-8, format!("residual {r:e}"))
}

fn c2_stability() -> Outcome {
    let p = ModelParams::default();
    let (x, u) = hover_equilibrium(&p);
    let lm = linearize(&x, &u, 0.01, &p).unwrap();
    let cfg = MpcConfig::for_model(&p, 75);
    let (_, rho) = lqr_closed_loop(&lm, &cfg.q(), &cfg.r()).unwrap();
    outcome("2 spectral radius of A-BK < 1", rho < 1.0, format!("rho {rho:.9}"))
}

fn run_preset(name: &str) -> Result<(f64, f64), String> {
    let spec = Preset::find(name).unwrap().spec().map_err(|e| e.to_string())?;
    let t = Instant::now();
    let out = pipeline::optimize(&spec).map_err(|e| e.to_string())?;
    Ok((out.sim.errors.max_after(100), t.elapsed().as_secs_f64()))
}

fn c3_figure8() -> Outcome {
    match run_preset("fig8-1000-N75") {
        Ok((e, t)) => outcome(
            "3 figure-8 error after step 100 <= 5 mm",
            e <= 5e-3,
            format!("max {:.3} mm, {t:.2} s", e * 1e3),
        ),
        Err(e) => outcome("3 figure-8 error after step 100 <= 5 mm", false, e),
    }
}

fn c4_scenarios() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, limit) in [
        ("hi-1001-N20", 4e-3),
        ("circle-1000-N75", 5e-3),
        ("cloud-1000-N20", 5e-3),
        ("human-1582-N20", 5e-3),
    ] {
        match run_preset(name) {
            Ok((e, _)) => {
                pass &= e <= limit;
                parts.push(format!("{name} {:.3} mm (<= {})", e * 1e3, limit * 1e3));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name} failed: {e}"));
            }
        }
    }
    outcome("4 hi <= 4 mm; circle, cloud, human <= 5 mm", pass, parts.join(", "))
}

fn c5_magnet_effort() -> Outcome {
    let expected = 2.0 / (4.0 * 0.147);
    let mean_control = |magnet_force: &str| {
        let mut raw = Preset::find("fig8-1000-N75").unwrap().config();
        raw.set("magnet_force", magnet_force);
        let mut spec = RunSpec::new(Input::Shape(Shape::Fig8));
        spec.points = Some(1000);
        spec.settings = raw.resolve().unwrap();
        pipeline::optimize(&spec).unwrap().sim.mean_control(100..900)
    };
    let diff = mean_control("2") - mean_control("0");
    let worst = diff.iter().map(|d| (d - expected).abs() / expected).fold(0.0, f64::max);
    outcome(
        "5 magnet on minus off = 2/(4*0.147) +- 5%",
        worst <= 0.05,
        format!(
            "per-motor difference [{:.4}, {:.4}, {:.4}, {:.4}], expected {expected:.4}, worst {:.2}%",
            diff[0],
            diff[1],
            diff[2],
            diff[3],
            worst * 100.0
        ),
    )
}

// Minimum of ½xᵀHx + gᵀx over the box by trying every assignment of each coordinate to
// free, lower or upper and keeping the best point satisfying the KKT sign conditions.
fn enumerate_box_qp(h: &DMatrix<f64>, g: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> (DVector<f64>, f64) {
    let n = g.len();
    let objective = |x: &DVector<f64>| 0.5 * x.dot(&(h * x)) + g.dot(x);
    let mut best: Option<(DVector<f64>, f64)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let mut x = DVector::zeros(n);
        for i in 0..n {
            match state[i] {
                1 => x[i] = lo[i],
                2 => x[i] = hi[i],
                _ => {}
            }
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        if !free.is_empty() {
            let hff = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
            let rhs = DVector::from_fn(free.len(), |a, _| {
                -g[free[a]] - (0..n).filter(|j| state[*j] != 0).map(|j| h[(free[a], j)] * x[j]).sum::<f64>()
            });
            let Some(sol) = hff.lu().solve(&rhs) else { continue };
            for (a, &i) in free.iter().enumerate() {
                x[i] = sol[a];
            }
        }
        let grad = h * &x + g;
        let tol = 1e-9;
        let ok = (0..n).all(|i| match state[i] {
            0 => x[i] >= lo[i] - tol && x[i] <= hi[i] + tol,
            1 => grad[i] >= -tol,
            _ => grad[i] <= tol,
        });
        if ok {
            let f = objective(&x);
            if best.as_ref().is_none_or(|(_, b)| f < *b) {
                best = Some((x, f));
            }
        }
    }
    best.expect("a strictly convex box QP has a KKT point")
}

fn c6_qp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_obj = 0.0f64;
    let mut worst_x = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let h = &m * m.transpose() + DMatrix::identity(n, n) * 0.1;
        let g = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let lo = DVector::from_fn(n, |_, _| rng.random_range(-2.0..0.0));
        let hi = DVector::from_fn(n, |i, _| lo[i] + rng.random_range(0.1..2.5));
        let got = solve_box_qp(&h, &g, &lo, &hi, 1e-10, 1000).unwrap();
        let (want, f_want) = enumerate_box_qp(&h, &g, &lo, &hi);
        let f_got = 0.5 * got.x.dot(&(&h * &got.x)) + g.dot(&got.x);
        worst_obj = worst_obj.max((f_got - f_want).abs());
        worst_x = worst_x.max((&got.x - &want).norm());
    }
    outcome(
        "6 box QP vs enumeration, 200 instances",
        worst_obj <= 1e-6 && worst_x <= 1e-5,
        format!("worst objective gap {worst_obj:.2e}, worst solution distance {worst_x:.2e}"),
    )
}

fn c7_linearization() -> Outcome {
    let p = ModelParams::default();
    let (x, u) = hover_equilibrium(&p);
    let lm = linearize(&x, &u, 0.01, &p).unwrap();
    let remainder = |dx: &StateVector, du: &InputVector| {
        let next = rk4_step(&State::from_vector(&(x.to_vector() + dx)), &ControlInput(u.0 + du), 0.01, &p)
            .unwrap()
            .to_vector();
        (next - x.to_vector() - lm.a * dx - lm.b * du).norm()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..100 {
        let dx = StateVector::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let du = InputVector::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let s = (dx.norm_squared() + du.norm_squared()).sqrt();
        let (dx, du) = (dx / s, du / s);
        let ratio = remainder(&(dx * 1e-3), &(du * 1e-3)) / remainder(&(dx * 5e-4), &(du * 5e-4));
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    outcome(
        "7 remainder ratio in [3.5, 4.5], 100 directions",
        lo >= 3.5 && hi <= 4.5,
        format!("ratios in [{lo:.4}, {hi:.4}]"),
    )
}

fn rectangle_fixture() -> BinaryImage {
    let mut img = BinaryImage::new(15, 7);
    for y in 2..5 {
        for x in 2..13 {
            img.set(x, y, true);
        }
    }
    img
}

fn c8_skeleton() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/glyphs");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "pbm"))
        .collect();
    files.sort();
    let mut bad = Vec::new();
    for f in &files {
        let img = load_pbm(f).unwrap();
        let once = skeletonize(&img);
        if !once.is_subset_of(&img) || skeletonize(&once) != once {
            bad.push(f.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    let rect = skeletonize(&rectangle_fixture());
    let rows: Vec<usize> = (0..rect.height())
        .filter(|&y| (0..rect.width()).any(|x| rect.get(x, y)))
        .collect();
    let thin = rows.len() == 1 && rect.count() > 0 && rect.component_count() == 1;
    outcome(
        "8 skeleton idempotent and subset on corpus; 11x3 rectangle thins to 1 px",
        files.len() == 10 && bad.is_empty() && thin,
        format!(
            "{} glyphs, failures {:?}, rectangle rows {:?} with {} px",
            files.len(),
            bad,
            rows,
            rect.count()
        ),
    )
}

fn brute_force(points: &[[f64; 2]]) -> f64 {
    fn permute(idx: &mut Vec<usize>, k: usize, pts: &[[f64; 2]], best: &mut f64) {
        if k == idx.len() {
            *best = best.min(path_length(pts, idx));
            return;
        }
        for i in k..idx.len() {
            idx.swap(k, i);
            permute(idx, k + 1, pts, best);
            idx.swap(k, i);
        }
    }
    let mut idx: Vec<usize> = (0..points.len()).collect();
    let mut best = f64::INFINITY;
    permute(&mut idx, 0, points, &mut best);
    best
}

fn c9_tsp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 1.0f64;
    for _ in 0..50 {
        let n = rng.random_range(3..=8);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
        worst = worst.max(path_length(&pts, &tsp_order(&pts)) / brute_force(&pts));
    }
    outcome(
        "9 TSP <= 1.05 x brute force, 50 instances",
        worst <= 1.05,
        format!("worst ratio {worst:.4}"),
    )
}

fn c10_profiles() -> Outcome {
    let f8 = figure8(1000, 0.1, Vector3::zeros()).unwrap();
    let ring = circle(1000, 0.1, Vector3::zeros()).unwrap();
    let fd = velocity_profile_finite_diff(&f8, DEFAULT_V_CAP).unwrap().max_speed();
    let curv = velocity_profile_curvature(&f8, DEFAULT_V_CAP, DEFAULT_STRAIGHT_BOOST)
        .unwrap()
        .max_speed();
    let speeds: Vec<f64> = velocity_profile_curvature(&ring, DEFAULT_V_CAP, DEFAULT_STRAIGHT_BOOST)
        .unwrap()
        .velocities
        .unwrap()
        .iter()
        .map(|v| v.norm())
        .collect();
    let spread = speeds.iter().copied().fold(0.0, f64::max) - speeds.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        "10 profiles capped at 0.01 m/s; circle uniform within 1e-9",
        fd == 0.01 && curv == 0.01 && spread <= 1e-9,
        format!("fd max {fd:e}, curvature max {curv:e}, circle spread {spread:.2e}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [fn() -> Outcome; 10] = [
        c1_equilibrium,
        c2_stability,
        c3_figure8,
        c4_scenarios,
        c5_magnet_effort,
        c6_qp_oracle,
        c7_linearization,
        c8_skeleton,
        c9_tsp,
        c10_profiles,
    ];
    let mut failed = Vec::new();
    for c in criteria {
        let o = c();
        println!("[{}] {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.detail);
        if !o.pass {
            failed.push(o.id);
        }
    }
    println!("[N/A ] 11 hardware error tables: not reproducible in simulation");
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
