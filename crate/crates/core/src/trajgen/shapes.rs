use alloc::vec::Vec;

use nalgebra::Vector3;

use super::{WaypointPath, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::math;

fn sample(n: usize, f: impl Fn(f64) -> (f64, f64), center: &Vector3<f64>) -> Vec<Vector3<f64>> {
    let tau = 2.0 * core::f64::consts::PI;
    (0..n)
        .map(|i| {
            let t = tau * i as f64 / n as f64;
            let (x, y) = f(t);
            Vector3::new(center.x + x, center.y + y, center.z)
        })
        .collect()
}

/// Lemniscate of Gerono, `(a sin t, a sin t cos t)` for `t ∈ [0, 2π)`, starting at the center.
pub fn figure8(n_points: usize, half_width: f64, center: Vector3<f64>) -> Result<WaypointPath> {
    if n_points < 8 {
        return Err(Error::InvalidArgument("figure-8 needs at least 8 points"));
    }
    if !(half_width > 0.0) {
        return Err(Error::InvalidArgument("half width must be positive"));
    }
    let pts = sample(
        n_points,
        |t| (half_width * math::sin(t), half_width * math::sin(t) * math::cos(t)),
        &center,
    );
    WaypointPath::new(pts, DEFAULT_DT)
}

/// Counter-clockwise circle starting at angle 0.
pub fn circle(n_points: usize, radius: f64, center: Vector3<f64>) -> Result<WaypointPath> {
    if n_points < 3 {
        return Err(Error::InvalidArgument("circle needs at least 3 points"));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive"));
    }
    let pts = sample(
        n_points,
        |t| (radius * math::cos(t), radius * math::sin(t)),
        &center,
    );
    WaypointPath::new(pts, DEFAULT_DT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajgen::menger_curvature;

    #[test]
    fn figure8_starts_at_center() {
        let c = Vector3::new(0.3, -0.2, 0.0);
        let p = figure8(1000, 0.1, c).unwrap();
        assert_eq!(p.len(), 1000);
        assert!((p.points[0] - c).norm() < 1e-15);
        assert!(p.pen.iter().all(|&b| b));
    }

    #[test]
    fn figure8_extent() {
        let p = figure8(1000, 0.1, Vector3::zeros()).unwrap();
        let max_x = p.points.iter().map(|q| q.x.abs()).fold(0.0, f64::max);
        let spacing = p.points.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max);
        assert!(max_x <= 0.1 && 0.1 - max_x <= spacing);
    }

    #[test]
    fn figure8_point_symmetry() {
        // t -> -t maps (x, y) to (-x, -y), which is index i -> n - i.
        let n = 1000;
        let p = figure8(n, 0.1, Vector3::zeros()).unwrap();
        for i in 0..n {
            let a = p.points[i];
            let b = p.points[(n - i) % n];
            assert!((a + b).norm() < 1e-12);
        }
    }

    #[test]
    fn small_counts_rejected() {
        assert!(figure8(7, 0.1, Vector3::zeros()).is_err());
        assert!(circle(2, 0.1, Vector3::zeros()).is_err());
        assert_eq!(circle(4, 0.1, Vector3::zeros()).unwrap().len(), 4);
    }

    #[test]
    fn circle_radius_perimeter_curvature() {
        let c = Vector3::new(0.05, 0.05, 0.0);
        let r = 0.08;
        let p = circle(1000, r, c).unwrap();
        for q in &p.points {
            assert!(((q - c).norm() - r).abs() < 1e-12);
        }
        let n = p.len();
        let chord_sum: f64 = (0..n).map(|i| (p.points[(i + 1) % n] - p.points[i]).norm()).sum();
        let perimeter = 2.0 * core::f64::consts::PI * r;
        assert!((chord_sum - perimeter).abs() / perimeter < 1e-3);
        for i in 1..n - 1 {
            let k = menger_curvature(&p.points[i - 1], &p.points[i], &p.points[i + 1]);
            assert!((k - 1.0 / r).abs() < 1e-6, "{k}");
        }
    }
}
