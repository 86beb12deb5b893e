//! Netpbm bitmap reading and writing, plain (`P1`) and raw (`P4`). A set bit is ink.

use std::path::Path;

use drawmpc_core::trajgen::BinaryImage;

use crate::error::{AppError, AppResult};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    name: &'a str,
}

impl<'a> Cursor<'a> {
    fn line(&self) -> u64 {
        1 + self.bytes[..self.pos.min(self.bytes.len())]
            .iter()
            .filter(|&&b| b == b'\n')
            .count() as u64
    }

    fn err(&self, msg: impl Into<String>) -> AppError {
        AppError::parse(self.name, self.line(), msg)
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> AppResult<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("unexpected end of file"));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn dimension(&mut self) -> AppResult<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&v| v > 0)
            .ok_or_else(|| self.err(format!("bad dimension {:?}", String::from_utf8_lossy(tok))))
    }
}

pub fn parse_pbm(bytes: &[u8], name: &str) -> AppResult<BinaryImage> {
    let mut cur = Cursor { bytes, pos: 0, name };
    let magic = cur.token()?;
    let raw = match magic {
        b"P1" => false,
        b"P4" => true,
        _ => return Err(cur.err("not a PBM file (expected P1 or P4)")),
    };
    let width = cur.dimension()?;
    let height = cur.dimension()?;
    let count = width
        .checked_mul(height)
        .filter(|&c| c <= 1 << 28)
        .ok_or_else(|| cur.err("image too large"))?;
    let mut bits = Vec::with_capacity(count);
    if raw {
        // Exactly one whitespace byte separates the header from the raster.
        cur.pos += 1;
        let row_bytes = width.div_ceil(8);
        let data = bytes
            .get(cur.pos..cur.pos + row_bytes * height)
            .ok_or_else(|| cur.err("raster data truncated"))?;
        for row in data.chunks(row_bytes) {
            bits.extend((0..width).map(|x| row[x / 8] & (0x80 >> (x % 8)) != 0));
        }
    } else {
        while bits.len() < count {
            cur.skip_space_and_comments();
            match cur.bytes.get(cur.pos) {
                Some(b'0') => bits.push(false),
                Some(b'1') => bits.push(true),
                Some(&b) => return Err(cur.err(format!("unexpected byte {:?} in raster", b as char))),
                None => return Err(cur.err("raster data truncated")),
            }
            cur.pos += 1;
        }
    }
    BinaryImage::from_bits(width, height, bits).ok_or_else(|| cur.err("raster size mismatch"))
}

pub fn load_pbm(path: &Path) -> AppResult<BinaryImage> {
    let bytes = std::fs::read(path).map_err(|e| AppError::io(path, e))?;
    parse_pbm(&bytes, &path.display().to_string())
}

pub fn write_p1(img: &BinaryImage) -> Vec<u8> {
    let mut out = format!("P1\n{} {}\n", img.width(), img.height());
    for row in img.bits().chunks(img.width()) {
        let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn write_p4(img: &BinaryImage) -> Vec<u8> {
    let mut out = format!("P4\n{} {}\n", img.width(), img.height()).into_bytes();
    for row in img.bits().chunks(img.width()) {
        for chunk in row.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)));
            out.push(byte);
        }
    }
    out
}
