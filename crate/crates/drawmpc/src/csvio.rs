//! CSV formats: raw 2D drawing points, waypoint paths and full-state trajectories.

use std::fmt::Write as _;
use std::path::Path;

use drawmpc_core::trajgen::{normalize_to_board, Board, WaypointPath};
use drawmpc_core::State;
use nalgebra::{Vector3, Vector4};

use crate::error::{read_to_string, AppError, AppResult};

pub const WAYPOINT_HEADER: &str = "x,y,z,vx,vy,vz,pen";
pub const FULLSTATE_HEADER: &str = "t,x,y,z,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,ax,ay,az";

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn records(text: &str, name: &str) -> AppResult<Vec<(u64, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in reader(text).into_records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            AppError::parse(name, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn number(field: &str, name: &str, line: u64) -> AppResult<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| AppError::parse(name, line, format!("not a number: {field:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(AppError::parse(name, line, format!("non-finite value {field:?}")))
    }
}

/// Two-column `x,y` points; a non-numeric first row is taken as a header.
pub fn parse_points_csv(text: &str, name: &str) -> AppResult<Vec<[f64; 2]>> {
    let mut pts = Vec::new();
    for (k, (line, rec)) in records(text, name)?.into_iter().enumerate() {
        if rec.len() < 2 {
            return Err(AppError::parse(name, line, "expected two columns"));
        }
        let parsed = (number(&rec[0], name, line), number(&rec[1], name, line));
        match parsed {
            (Ok(x), Ok(y)) => pts.push([x, y]),
            _ if k == 0 => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    if pts.len() < 2 {
        return Err(AppError::parse(name, 0, "need at least two points"));
    }
    Ok(pts)
}

/// Points from a CSV file fitted to the board as a pen-down path.
pub fn load_points_csv(path: &Path, board: &Board, dt: f64) -> AppResult<WaypointPath> {
    let name = path.display().to_string();
    let pts = parse_points_csv(&read_to_string(path)?, &name)?;
    let fitted = normalize_to_board(&pts, board)?;
    Ok(WaypointPath::new(fitted, dt)?)
}

/// Waypoints with velocities (zero when absent) and a 0/1 pen column.
pub fn format_waypoints(path: &WaypointPath) -> String {
    let mut out = String::with_capacity(64 * path.len());
    out.push_str(WAYPOINT_HEADER);
    out.push('\n');
    for (i, p) in path.points.iter().enumerate() {
        let v = path.velocities.as_ref().map_or(Vector3::zeros(), |v| v[i]);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.x,
            p.y,
            p.z,
            v.x,
            v.y,
            v.z,
            u8::from(path.pen[i])
        );
    }
    out
}

fn header_index(header: &csv::StringRecord, name: &str) -> Option<usize> {
    header.iter().position(|h| h.eq_ignore_ascii_case(name))
}

/// Named numeric columns of a CSV with a header row.
struct Table {
    header: csv::StringRecord,
    rows: Vec<(u64, csv::StringRecord)>,
    name: String,
}

impl Table {
    fn parse(text: &str, name: &str) -> AppResult<Self> {
        let mut rows = records(text, name)?.into_iter();
        let (_, header) = rows
            .next()
            .ok_or_else(|| AppError::parse(name, 1, "empty file"))?;
        Ok(Self {
            header,
            rows: rows.collect(),
            name: name.to_string(),
        })
    }

    fn has(&self, col: &str) -> bool {
        header_index(&self.header, col).is_some()
    }

    fn column(&self, col: &str) -> AppResult<Vec<f64>> {
        let idx = header_index(&self.header, col)
            .ok_or_else(|| AppError::parse(&self.name, 1, format!("missing column {col:?}")))?;
        self.rows
            .iter()
            .map(|(line, rec)| {
                let field = rec
                    .get(idx)
                    .ok_or_else(|| AppError::parse(&self.name, *line, format!("missing field {col:?}")))?;
                number(field, &self.name, *line)
            })
            .collect()
    }

    fn vectors(&self, cols: [&str; 3]) -> AppResult<Vec<Vector3<f64>>> {
        let [a, b, c] = cols.map(|col| self.column(col));
        let (a, b, c) = (a?, b?, c?);
        Ok((0..a.len()).map(|i| Vector3::new(a[i], b[i], c[i])).collect())
    }
}

/// Inverse of [`format_waypoints`]; velocity and pen columns are optional.
pub fn parse_waypoints(text: &str, name: &str, dt: f64) -> AppResult<WaypointPath> {
    let table = Table::parse(text, name)?;
    let points = table.vectors(["x", "y", "z"])?;
    let velocities = if table.has("vx") {
        Some(table.vectors(["vx", "vy", "vz"])?)
    } else {
        None
    };
    let pen = if table.has("pen") {
        table.column("pen")?.into_iter().map(|v| v != 0.0).collect()
    } else {
        vec![true; points.len()]
    };
    let path = WaypointPath {
        points,
        velocities,
        dt,
        pen,
    };
    path.validate()?;
    Ok(path)
}

/// Full-state rows with forward-difference accelerations; the last row repeats the
/// previous acceleration. Values carry nine significant digits.
pub fn format_fullstate(states: &[State], dt: f64) -> String {
    let n = states.len();
    let accel: Vec<Vector3<f64>> = (0..n)
        .map(|k| match n {
            0 | 1 => Vector3::zeros(),
            _ => {
                let k = k.min(n - 2);
                (states[k + 1].v - states[k].v) / dt
            }
        })
        .collect();
    let mut out = String::with_capacity(220 * n);
    out.push_str(FULLSTATE_HEADER);
    out.push('\n');
    for (k, s) in states.iter().enumerate() {
        let t = k as f64 * dt;
        let a = accel[k];
        let fields = [
            t, s.r.x, s.r.y, s.r.z, s.q[0], s.q[1], s.q[2], s.q[3], s.v.x, s.v.y, s.v.z, s.w.x, s.w.y,
            s.w.z, a.x, a.y, a.z,
        ];
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{f:.8e}");
        }
        out.push('\n');
    }
    out
}

/// Times and states from a full-state CSV.
pub fn parse_fullstate(text: &str, name: &str) -> AppResult<(Vec<f64>, Vec<State>)> {
    let table = Table::parse(text, name)?;
    let t = table.column("t")?;
    let r = table.vectors(["x", "y", "z"])?;
    let v = table.vectors(["vx", "vy", "vz"])?;
    let w = table.vectors(["wx", "wy", "wz"])?;
    let [qw, qx, qy, qz] = ["qw", "qx", "qy", "qz"].map(|c| table.column(c));
    let (qw, qx, qy, qz) = (qw?, qx?, qy?, qz?);
    let states = (0..t.len())
        .map(|i| State {
            r: r[i],
            q: Vector4::new(qw[i], qx[i], qy[i], qz[i]),
            v: v[i],
            w: w[i],
        })
        .collect();
    Ok((t, states))
}

/// Positions and velocities from either a waypoint CSV or a full-state CSV, as level
/// states. Missing velocity columns read as zero.
pub fn parse_trajectory(text: &str, name: &str) -> AppResult<Vec<State>> {
    let table = Table::parse(text, name)?;
    let r = table.vectors(["x", "y", "z"])?;
    let v = if table.has("vx") {
        table.vectors(["vx", "vy", "vz"])?
    } else {
        vec![Vector3::zeros(); r.len()]
    };
    Ok(r.into_iter()
        .zip(v)
        .map(|(r, v)| State { v, ..State::at_rest(r) })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use drawmpc_core::trajgen::{circle, velocity_profile_finite_diff};

    #[test]
    fn points_with_and_without_header() {
        let a = parse_points_csv("x,y\n0,0\n1,2\n", "a").unwrap();
        let b = parse_points_csv("0,0\n1,2\n\n", "b").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, vec![[0.0, 0.0], [1.0, 2.0]]);
    }

    #[test]
    fn point_errors_carry_line_numbers() {
        let e = parse_points_csv("x,y\n0,0\n1,oops\n", "f.csv").unwrap_err();
        assert_eq!(e.to_string(), "f.csv:3: not a number: \"oops\"");
        let e = parse_points_csv("0,0\n5\n", "g.csv").unwrap_err();
        assert!(e.to_string().starts_with("g.csv:2:"), "{e}");
        assert!(parse_points_csv("x,y\n1,1\n", "h.csv").is_err());
    }

    #[test]
    fn waypoint_round_trip_is_exact() {
        let path = velocity_profile_finite_diff(&circle(37, 0.1, Vector3::new(0.01, 0.02, 0.0)).unwrap(), 0.01).unwrap();
        let mut path = path;
        path.pen[3] = false;
        let text = format_waypoints(&path);
        assert!(text.starts_with("x,y,z,vx,vy,vz,pen\n"));
        assert_eq!(text.lines().count(), 38);
        let back = parse_waypoints(&text, "w", path.dt).unwrap();
        assert_eq!(back, path);
    }

    #[test]
    fn fullstate_hover_and_round_trip() {
        let mut states = vec![State::hover(); 5];
        for (k, s) in states.iter_mut().enumerate() {
            s.r.x = 0.001 * k as f64 + 1.0 / 3.0;
        }
        let text = format_fullstate(&states, 0.01);
        assert_eq!(text.lines().count(), 6);
        assert_eq!(text.lines().next().unwrap(), FULLSTATE_HEADER);
        let (t, back) = parse_fullstate(&text, "fs").unwrap();
        assert_eq!(t.len(), 5);
        for (a, b) in states.iter().zip(&back) {
            // Nine significant digits.
            assert!((a.r.x - b.r.x).abs() <= 5e-9 * a.r.x.abs());
            let reprinted: f64 = format!("{:.8e}", b.r.x).parse().unwrap();
            assert_eq!(reprinted, b.r.x);
        }
        for line in text.lines().skip(1) {
            let acc: Vec<f64> = line.split(',').skip(14).map(|f| f.parse().unwrap()).collect();
            assert!(acc.iter().all(|a| a.abs() < 1e-9));
        }
    }

    #[test]
    fn fullstate_accelerations_forward_difference() {
        let mut states = vec![State::hover(); 4];
        for (k, s) in states.iter_mut().enumerate() {
            s.v.y = 0.5 * (k * k) as f64;
        }
        let text = format_fullstate(&states, 0.1);
        let ay: Vec<f64> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(15).unwrap().parse().unwrap())
            .collect();
        assert_eq!(ay, vec![5.0, 15.0, 25.0, 25.0]);
    }

    #[test]
    fn trajectory_reader_accepts_both_formats() {
        let path = velocity_profile_finite_diff(&circle(10, 0.1, Vector3::zeros()).unwrap(), 0.01).unwrap();
        let from_wp = parse_trajectory(&format_waypoints(&path), "w").unwrap();
        assert_eq!(from_wp.len(), 10);
        assert_eq!(from_wp[4].r, path.points[4]);
        let from_fs = parse_trajectory(&format_fullstate(&from_wp, 0.01), "f").unwrap();
        assert_eq!(from_fs.len(), 10);
        assert!((from_fs[4].r - path.points[4]).norm() < 1e-9);
    }
}
