//! Labeled plain-text matrix files for inspecting a linear model or a QP instance.
//!
//! Each block starts with `NAME rows cols` followed by `rows` lines of `cols`
//! whitespace-separated numbers, written in shortest round-trip form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use drawmpc_core::qp::CondensedQp;
use drawmpc_core::{ControlInput, LinearModel, State, StateVector};
use nalgebra::{DMatrix, DVector};

use crate::error::{AppError, AppResult};

fn push_block<'a>(out: &mut String, name: &str, rows: usize, cols: usize, values: impl Iterator<Item = &'a f64>) {
    let _ = writeln!(out, "{name} {rows} {cols}");
    let values: Vec<f64> = values.copied().collect();
    for row in values.chunks(cols) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

fn push_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let row_major: Vec<f64> = m.transpose().iter().copied().collect();
    push_block(out, name, m.nrows(), m.ncols(), row_major.iter());
}

pub fn format_linear_model(lm: &LinearModel) -> String {
    let mut out = String::new();
    push_matrix(&mut out, "A", &DMatrix::from_iterator(13, 13, lm.a.iter().copied()));
    push_matrix(&mut out, "B", &DMatrix::from_iterator(13, 4, lm.b.iter().copied()));
    push_block(&mut out, "XBAR", 1, 13, lm.x_eq.to_vector().iter());
    push_block(&mut out, "UBAR", 1, 4, lm.u_eq.0.iter());
    push_block(&mut out, "DT", 1, 1, [lm.dt].iter());
    out
}

pub fn format_qp(qp: &CondensedQp) -> String {
    let mut out = String::new();
    push_matrix(&mut out, "H", &qp.h);
    let n = qp.g.len();
    push_block(&mut out, "g", n, 1, qp.g.iter());
    push_block(&mut out, "lo", n, 1, qp.lo.iter());
    push_block(&mut out, "hi", n, 1, qp.hi.iter());
    out
}

/// Blocks of a labeled matrix file, keyed by name.
pub fn parse_blocks(text: &str, name: &str) -> AppResult<BTreeMap<String, DMatrix<f64>>> {
    let mut blocks = BTreeMap::new();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    while let Some((line, header)) = lines.next() {
        let parts: Vec<&str> = header.split_whitespace().collect();
        let dims = match parts.as_slice() {
            [label, r, c] => r.parse::<usize>().ok().zip(c.parse::<usize>().ok()).map(|d| (*label, d)),
            _ => None,
        };
        let (label, (rows, cols)) =
            dims.ok_or_else(|| AppError::parse(name, line, format!("expected `NAME rows cols`, got {header:?}")))?;
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (line, row) = lines
                .next()
                .ok_or_else(|| AppError::parse(name, line, format!("block {label} is truncated")))?;
            let before = values.len();
            for tok in row.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| AppError::parse(name, line, format!("not a number: {tok:?}")))?;
                values.push(v);
            }
            if values.len() - before != cols {
                return Err(AppError::parse(name, line, format!("expected {cols} values")));
            }
        }
        blocks.insert(label.to_string(), DMatrix::from_row_slice(rows, cols, &values));
    }
    Ok(blocks)
}

fn take(blocks: &BTreeMap<String, DMatrix<f64>>, label: &str, rows: usize, cols: usize, name: &str) -> AppResult<DMatrix<f64>> {
    let m = blocks
        .get(label)
        .ok_or_else(|| AppError::parse(name, 0, format!("missing block {label}")))?;
    if m.shape() != (rows, cols) {
        return Err(AppError::parse(
            name,
            0,
            format!("block {label} is {}x{}, expected {rows}x{cols}", m.nrows(), m.ncols()),
        ));
    }
    Ok(m.clone())
}

pub fn parse_linear_model(text: &str, name: &str) -> AppResult<LinearModel> {
    let blocks = parse_blocks(text, name)?;
    let a = take(&blocks, "A", 13, 13, name)?;
    let b = take(&blocks, "B", 13, 4, name)?;
    let x = take(&blocks, "XBAR", 1, 13, name)?;
    let u = take(&blocks, "UBAR", 1, 4, name)?;
    let dt = take(&blocks, "DT", 1, 1, name)?;
    Ok(LinearModel {
        a: nalgebra::SMatrix::from_iterator(a.iter().copied()),
        b: nalgebra::SMatrix::from_iterator(b.iter().copied()),
        x_eq: State::from_vector(&StateVector::from_iterator(x.iter().copied())),
        u_eq: ControlInput(nalgebra::Vector4::from_iterator(u.iter().copied())),
        dt: dt[0],
    })
}

/// `(H, g, lo, hi)` from a QP dump.
pub fn parse_qp(text: &str, name: &str) -> AppResult<(DMatrix<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
    let blocks = parse_blocks(text, name)?;
    let n = blocks.get("g").map_or(0, |g| g.nrows());
    let h = take(&blocks, "H", n, n, name)?;
    let col = |label| take(&blocks, label, n, 1, name).map(|m| DVector::from_column_slice(m.as_slice()));
    Ok((h, col("g")?, col("lo")?, col("hi")?))
}
