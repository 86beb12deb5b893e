use alloc::vec::Vec;

use nalgebra::Vector3;

use super::WaypointPath;
use crate::error::{Error, Result};

/// Curvature added to every estimate before inversion, 1/m.
pub const KAPPA_FLOOR: f64 = 1e-2;
/// Sections with curvature below this count as straight, 1/m.
pub const KAPPA_STRAIGHT: f64 = 0.5;

/// Reciprocal circumradius of three points, `4·area / (|ab|·|bc|·|ca|)`.
///
/// Collinear triples give 0. A triple with repeated points has no circumcircle and
/// yields [`KAPPA_FLOOR`].
pub fn menger_curvature(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let (ab, bc, ca) = (b - a, c - b, a - c);
    let denom = ab.norm() * bc.norm() * ca.norm();
    if denom == 0.0 {
        return KAPPA_FLOOR;
    }
    2.0 * ab.cross(&(c - a)).norm() / denom
}

fn scale_to_cap(v: &mut [Vector3<f64>], v_cap: f64) -> Result<()> {
    let max = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::Degenerate("path does not move"));
    }
    let s = v_cap / max;
    for x in v.iter_mut() {
        *x *= s;
    }
    Ok(())
}

fn check_cap(v_cap: f64) -> Result<()> {
    if v_cap > 0.0 && v_cap.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("speed cap must be positive"))
    }
}

/// Speeds inversely proportional to local curvature, boosted on straight sections, along
/// the central chord direction, scaled so the fastest waypoint moves at `v_cap`.
pub fn velocity_profile_curvature(path: &WaypointPath, v_cap: f64, v_straight_boost: f64) -> Result<WaypointPath> {
    path.validate()?;
    check_cap(v_cap)?;
    if !(v_straight_boost > 0.0) {
        return Err(Error::InvalidArgument("straight boost must be positive"));
    }
    let p = &path.points;
    let n = p.len();
    if n < 3 {
        return Err(Error::InvalidArgument("curvature profile needs at least three points"));
    }
    let mut v: Vec<Vector3<f64>> = Vec::with_capacity(n);
    v.push(Vector3::zeros());
    for i in 1..n - 1 {
        let kappa = menger_curvature(&p[i - 1], &p[i], &p[i + 1]);
        let mut speed = 1.0 / (kappa + KAPPA_FLOOR);
        if kappa < KAPPA_STRAIGHT {
            speed *= v_straight_boost;
        }
        let chord = p[i + 1] - p[i - 1];
        let len = chord.norm();
        v.push(if len > 0.0 { chord * (speed / len) } else { Vector3::zeros() });
    }
    v.push(v[n - 2]);
    v[0] = v[1];
    scale_to_cap(&mut v, v_cap)?;
    Ok(WaypointPath {
        velocities: Some(v),
        ..path.clone()
    })
}

/// Central differences in the interior, one-sided at the ends, scaled so the fastest
/// waypoint moves at `v_cap`.
pub fn velocity_profile_finite_diff(path: &WaypointPath, v_cap: f64) -> Result<WaypointPath> {
    path.validate()?;
    check_cap(v_cap)?;
    let p = &path.points;
    let n = p.len();
    let dt = path.dt;
    let mut v: Vec<Vector3<f64>> = Vec::with_capacity(n);
    v.push((p[1] - p[0]) / dt);
    for i in 1..n - 1 {
        v.push((p[i + 1] - p[i - 1]) / (2.0 * dt));
    }
    v.push((p[n - 1] - p[n - 2]) / dt);
    scale_to_cap(&mut v, v_cap)?;
    Ok(WaypointPath {
        velocities: Some(v),
        ..path.clone()
    })
}
