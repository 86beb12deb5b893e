//! Desired waypoint trajectories: analytic shapes, board normalization, glyph
//! skeletonization and ordering, velocity profiles, lift-off transits and the final
//! lift to full 13-component reference states.

mod liftoff;
mod normalize;
mod reference;
mod shapes;
mod skeleton;
mod tsp;
mod velocity;

use alloc::vec::Vec;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use liftoff::{insert_liftoff, resample_strokes, split_strokes, StrokeSet};
pub use normalize::{normalize_to_board, Board, BoardFit};
pub use reference::{lift_to_reference, ReferenceTrajectory};
pub use shapes::{circle, figure8};
pub use skeleton::{skeletonize, BinaryImage};
pub use tsp::{path_length, tsp_order};
pub use velocity::{
    menger_curvature, velocity_profile_curvature, velocity_profile_finite_diff, KAPPA_FLOOR,
    KAPPA_STRAIGHT,
};

/// Waypoint spacing in time, s (100 Hz).
pub const DEFAULT_DT: f64 = 0.01;
/// Speed every velocity profile is scaled to, m/s.
pub const DEFAULT_V_CAP: f64 = 0.01;
/// Extra speed factor on nearly straight sections of the curvature profile.
pub const DEFAULT_STRAIGHT_BOOST: f64 = 2.0;
/// Height of lift-off transits above the board, m.
pub const DEFAULT_Z_UP: f64 = 0.02;
/// Skeleton neighbours farther apart than this many pixels start a new stroke.
pub const GLYPH_JUMP_PIXELS: f64 = 5.0;

/// Ordered drawing waypoints in the board frame (z = 0 on the board).
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPath {
    pub points: Vec<Vector3<f64>>,
    pub velocities: Option<Vec<Vector3<f64>>>,
    pub dt: f64,
    /// `true` while the magnet is meant to touch the board.
    pub pen: Vec<bool>,
}

impl WaypointPath {
    /// Pen-down path with no velocities.
    pub fn new(points: Vec<Vector3<f64>>, dt: f64) -> Result<Self> {
        let pen = alloc::vec![true; points.len()];
        let path = Self {
            points,
            velocities: None,
            dt,
            pen,
        };
        path.validate()?;
        Ok(path)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::InvalidArgument("a path needs at least two points"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument("dt must be positive"));
        }
        if self.pen.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                left: self.points.len(),
                right: self.pen.len(),
            });
        }
        if let Some(v) = &self.velocities {
            if v.len() != self.points.len() {
                return Err(Error::LengthMismatch {
                    left: self.points.len(),
                    right: v.len(),
                });
            }
        }
        if self.points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidArgument("path points must be finite"));
        }
        Ok(())
    }

    /// Largest waypoint speed, 0 without velocities.
    pub fn max_speed(&self) -> f64 {
        self.velocities
            .as_ref()
            .map(|v| v.iter().map(|v| v.norm()).fold(0.0, f64::max))
            .unwrap_or(0.0)
    }
}

/// Ordered glyph pixels turned into a board path with `n_points` waypoints.
///
/// Foreground pixels of the skeleton are read row-major, ordered by [`tsp_order`], split
/// into strokes wherever consecutive pixels are more than [`GLYPH_JUMP_PIXELS`] apart, fitted
/// to the board, resampled, and joined with lift-off transits.
pub fn glyph_path(img: &BinaryImage, n_points: usize, board: &Board, z_up: f64) -> Result<WaypointPath> {
    let skel = skeletonize(img);
    // Image rows grow downwards; flip so the drawing is upright on the board.
    let pixels: Vec<[f64; 2]> = skel
        .foreground()
        .map(|(x, y)| [x as f64, -(y as f64)])
        .collect();
    if pixels.len() < 2 {
        return Err(Error::Degenerate("glyph skeleton has fewer than two pixels"));
    }
    let order = tsp_order(&pixels);
    let ordered: Vec<[f64; 2]> = order.iter().map(|&i| pixels[i]).collect();
    polyline_path(&ordered, GLYPH_JUMP_PIXELS, n_points, board, z_up)
}

/// Ordered 2D points turned into a board path with `n_points` waypoints; jumps longer than
/// `jump` (input units) become lift-off transits.
pub fn polyline_path(
    ordered: &[[f64; 2]],
    jump: f64,
    n_points: usize,
    board: &Board,
    z_up: f64,
) -> Result<WaypointPath> {
    let fit = board.fit(ordered)?;
    let fitted: Vec<Vector3<f64>> = ordered.iter().map(|p| fit.apply(p)).collect();
    let strokes = split_strokes(&fitted, jump * fit.scale);
    let set = resample_strokes(&strokes, n_points, z_up, DEFAULT_DT)?;
    insert_liftoff(&set.path, &set.breaks, z_up)
}

/// Median distance between consecutive points.
pub fn median_spacing(points: &[[f64; 2]]) -> f64 {
    let mut d: Vec<f64> = points
        .windows(2)
        .map(|w| crate::math::hypot(w[1][0] - w[0][0], w[1][1] - w[0][1]))
        .collect();
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(|a, b| a.total_cmp(b));
    d[d.len() / 2]
}

pub(crate) fn bounding_box(points: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}
