use alloc::vec::Vec;

use nalgebra::Vector3;

use super::WaypointPath;
use crate::error::{Error, Result};

const MIN_TRANSIT_POINTS: usize = 3;
const MIN_STROKE_POINTS: usize = 2;

/// A resampled drawing with placeholder points reserved for each pen-up transit.
///
/// Each `(a, b)` in `breaks` is the last index of one stroke and the first index of the
/// next; the points strictly between them are to be replaced by [`insert_liftoff`].
#[derive(Debug, Clone, PartialEq)]
pub struct StrokeSet {
    pub path: WaypointPath,
    pub breaks: Vec<(usize, usize)>,
}

/// Cut an ordered point list wherever consecutive points are more than `jump` apart.
pub fn split_strokes(points: &[Vector3<f64>], jump: f64) -> Vec<Vec<Vector3<f64>>> {
    let mut strokes: Vec<Vec<Vector3<f64>>> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if i == 0 || (p - points[i - 1]).norm() > jump {
            strokes.push(Vec::new());
        }
        strokes.last_mut().unwrap().push(*p);
    }
    strokes
}

fn polyline_length(pts: &[Vector3<f64>]) -> f64 {
    pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

// Point at arc length `s` along the polyline.
fn point_at(pts: &[Vector3<f64>], s: f64) -> Vector3<f64> {
    let mut remaining = s;
    for w in pts.windows(2) {
        let seg = (w[1] - w[0]).norm();
        if remaining <= seg && seg > 0.0 {
            return w[0] + (w[1] - w[0]) * (remaining / seg);
        }
        remaining -= seg;
    }
    *pts.last().unwrap()
}

// `count` points spread evenly by arc length, endpoints included when `closed_ends`,
// otherwise strictly interior.
fn resample(pts: &[Vector3<f64>], count: usize, closed_ends: bool) -> Vec<Vector3<f64>> {
    let total = polyline_length(pts);
    (0..count)
        .map(|j| {
            let t = if closed_ends {
                if count == 1 {
                    0.0
                } else {
                    j as f64 / (count - 1) as f64
                }
            } else {
                (j + 1) as f64 / (count + 1) as f64
            };
            point_at(pts, t * total)
        })
        .collect()
}

fn transit_arc(from: &Vector3<f64>, to: &Vector3<f64>, z_up: f64) -> [Vector3<f64>; 4] {
    [
        *from,
        Vector3::new(from.x, from.y, z_up),
        Vector3::new(to.x, to.y, z_up),
        *to,
    ]
}

/// Resample strokes to exactly `n_points` waypoints in total, reserving at least three
/// placeholder points for each transit between strokes.
///
/// Points are shared out in proportion to arc length, with transits measured along their
/// rise-translate-descend arc. Every stroke keeps at least two points.
pub fn resample_strokes(strokes: &[Vec<Vector3<f64>>], n_points: usize, z_up: f64, dt: f64) -> Result<StrokeSet> {
    if strokes.is_empty() || strokes.iter().any(|s| s.is_empty()) {
        return Err(Error::InvalidArgument("strokes must be non-empty"));
    }
    if !(z_up > 0.0) {
        return Err(Error::InvalidArgument("lift-off height must be positive"));
    }
    // Segments alternate stroke, transit, stroke, ...
    let mut lengths = Vec::new();
    let mut minima = Vec::new();
    for (k, s) in strokes.iter().enumerate() {
        if k > 0 {
            let prev = strokes[k - 1].last().unwrap();
            lengths.push(polyline_length(&transit_arc(prev, &s[0], z_up)));
            minima.push(MIN_TRANSIT_POINTS);
        }
        lengths.push(polyline_length(s));
        minima.push(MIN_STROKE_POINTS);
    }
    let needed: usize = minima.iter().sum();
    if n_points < needed {
        return Err(Error::InvalidArgument("too few points for the strokes and transits"));
    }
    let counts = apportion(&lengths, &minima, n_points);

    let mut points = Vec::with_capacity(n_points);
    let mut pen = Vec::with_capacity(n_points);
    let mut breaks = Vec::new();
    for (k, s) in strokes.iter().enumerate() {
        let seg = 2 * k;
        if k > 0 {
            let a = points.len() - 1;
            let prev = *points.last().unwrap();
            let arc = transit_arc(&prev, &s[0], z_up);
            for p in resample(&arc, counts[seg - 1], false) {
                points.push(p);
                pen.push(false);
            }
            breaks.push((a, points.len()));
        }
        for p in resample(s, counts[seg], true) {
            points.push(p);
            pen.push(true);
        }
    }
    let path = WaypointPath {
        points,
        velocities: None,
        dt,
        pen,
    };
    path.validate()?;
    Ok(StrokeSet { path, breaks })
}

// Integer shares of `total` proportional to `weights`, each at least its minimum.
fn apportion(weights: &[f64], minima: &[usize], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let ideal: Vec<f64> = if sum > 0.0 {
        weights.iter().map(|w| total as f64 * w / sum).collect()
    } else {
        minima.iter().map(|&m| m as f64).collect()
    };
    let mut counts: Vec<usize> = ideal
        .iter()
        .zip(minima)
        .map(|(&x, &m)| (crate::math::floor(x) as usize).max(m))
        .collect();
    let mut assigned: usize = counts.iter().sum();
    while assigned > total {
        let k = (0..counts.len())
            .filter(|&k| counts[k] > minima[k])
            .max_by(|&a, &b| (counts[a] as f64 - ideal[a]).total_cmp(&(counts[b] as f64 - ideal[b])))
            .unwrap();
        counts[k] -= 1;
        assigned -= 1;
    }
    while assigned < total {
        let k = (0..counts.len())
            .max_by(|&a, &b| (ideal[a] - counts[a] as f64).total_cmp(&(ideal[b] - counts[b] as f64)))
            .unwrap();
        counts[k] += 1;
        assigned += 1;
    }
    counts
}

/// Replace the points strictly between each break pair with a pen-up transit: straight up
/// to `z_up`, across, and straight down, sampled evenly by arc length.
///
/// A break pair keeps its interior point count, with a minimum of three. Velocities are
/// dropped whenever anything is inserted, since they no longer match the points.
pub fn insert_liftoff(path: &WaypointPath, breaks: &[(usize, usize)], z_up: f64) -> Result<WaypointPath> {
    path.validate()?;
    if breaks.is_empty() {
        return Ok(path.clone());
    }
    if !(z_up > 0.0) {
        return Err(Error::InvalidArgument("lift-off height must be positive"));
    }
    let n = path.len();
    let mut prev_end = 0;
    for (k, &(a, b)) in breaks.iter().enumerate() {
        if a >= b || b >= n {
            return Err(Error::InvalidArgument("break pair out of range"));
        }
        if k > 0 && a < prev_end {
            return Err(Error::OverlappingBreaks);
        }
        prev_end = b;
    }
    let mut points = Vec::with_capacity(n);
    let mut pen = Vec::with_capacity(n);
    let mut cursor = 0;
    for &(a, b) in breaks {
        points.extend_from_slice(&path.points[cursor..=a]);
        pen.extend_from_slice(&path.pen[cursor..=a]);
        let count = (b - a - 1).max(MIN_TRANSIT_POINTS);
        let arc = transit_arc(&path.points[a], &path.points[b], z_up);
        for p in resample(&arc, count, false) {
            points.push(p);
            pen.push(false);
        }
        cursor = b;
    }
    points.extend_from_slice(&path.points[cursor..]);
    pen.extend_from_slice(&path.pen[cursor..]);
    Ok(WaypointPath {
        points,
        velocities: None,
        dt: path.dt,
        pen,
    })
}
