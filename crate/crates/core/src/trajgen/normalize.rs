use alloc::vec::Vec;

use nalgebra::Vector3;

use super::bounding_box;
use crate::error::{Error, Result};

/// Drawing area on the board: width along x, height along y, both in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Board {
    pub width: f64,
    pub height: f64,
    pub center: Vector3<f64>,
}

impl Default for Board {
    fn default() -> Self {
        Self {
            width: 0.2,
            height: 0.2,
            center: Vector3::zeros(),
        }
    }
}

/// Uniform scale plus translation taking input coordinates onto the board.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoardFit {
    pub scale: f64,
    source_center: [f64; 2],
    target_center: Vector3<f64>,
}

impl BoardFit {
    pub fn apply(&self, p: &[f64; 2]) -> Vector3<f64> {
        Vector3::new(
            self.target_center.x + self.scale * (p[0] - self.source_center[0]),
            self.target_center.y + self.scale * (p[1] - self.source_center[1]),
            self.target_center.z,
        )
    }
}

impl Board {
    /// Largest aspect-preserving fit of the points' bounding box inside the board.
    pub fn fit(&self, points: &[[f64; 2]]) -> Result<BoardFit> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::InvalidArgument("board dimensions must be positive"));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidArgument("points must be finite"));
        }
        if points.is_empty() {
            return Err(Error::Degenerate("no points"));
        }
        let (lo, hi) = bounding_box(points);
        let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
        let scale = match (w > 0.0, h > 0.0) {
            (true, true) => (self.width / w).min(self.height / h),
            (true, false) => self.width / w,
            (false, true) => self.height / h,
            (false, false) => return Err(Error::Degenerate("all points coincide")),
        };
        Ok(BoardFit {
            scale,
            source_center: [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0],
            target_center: self.center,
        })
    }
}

/// Fit raw 2D points onto the board, preserving aspect ratio; z is the board center's z.
pub fn normalize_to_board(points: &[[f64; 2]], board: &Board) -> Result<Vec<Vector3<f64>>> {
    let fit = board.fit(points)?;
    Ok(points.iter().map(|p| fit.apply(p)).collect())
}
