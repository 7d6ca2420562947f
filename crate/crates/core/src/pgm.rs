//! Netpbm greymap I/O. Reads `P5` and `P2`, writes `P5` with maxval 255.
//!
//! Pixel value 0 (black) is inside the set, 255 outside. Rows run top to
//! bottom and map to increasing `y`.

use crate::error::{Error, Result};
use crate::grid::{BinarySet, Grid2D, ScalarField};
use std::path::Path;

/// A decoded greymap with samples scaled to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Greymap {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<f64>,
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Pgm(format!("expected {what} at byte {start}")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Greymap> {
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'5' || bytes[1] == b'2') {
        return Err(Error::Pgm("not a P5 or P2 greymap".into()));
    }
    let binary = bytes[1] == b'5';
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Pgm(format!("empty image {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Pgm(format!("maxval {maxval} out of range")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Pgm("image too large".into()))?;
    let scale = maxval as f64;
    let mut samples = Vec::with_capacity(n);
    if binary {
        if h.pos >= bytes.len() || !bytes[h.pos].is_ascii_whitespace() {
            return Err(Error::Pgm("missing whitespace after maxval".into()));
        }
        let data = &bytes[h.pos + 1..];
        let wide = maxval > 255;
        let need = if wide { 2 * n } else { n };
        if data.len() < need {
            return Err(Error::Pgm(format!(
                "truncated raster: {} of {need} bytes",
                data.len()
            )));
        }
        for i in 0..n {
            let v = if wide {
                u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as usize
            } else {
                data[i] as usize
            };
            if v > maxval {
                return Err(Error::Pgm(format!("sample {v} above maxval {maxval}")));
            }
            samples.push(v as f64 / scale);
        }
    } else {
        for _ in 0..n {
            let v = h.number("sample")?;
            if v > maxval {
                return Err(Error::Pgm(format!("sample {v} above maxval {maxval}")));
            }
            samples.push(v as f64 / scale);
        }
    }
    Ok(Greymap {
        width,
        height,
        samples,
    })
}

pub fn read(path: &Path) -> Result<Greymap> {
    decode(&std::fs::read(path)?)
}

/// `P5`, maxval 255.
pub fn encode(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    if pixels.len() != width * height {
        return Err(Error::ShapeMismatch {
            expected: width * height,
            got: pixels.len(),
        });
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    Ok(out)
}

impl Greymap {
    /// Dark pixels (below one half) form the set.
    pub fn to_set(&self, grid: Grid2D) -> Result<BinarySet> {
        self.check_grid(&grid)?;
        BinarySet::new(grid, self.samples.iter().map(|&v| v < 0.5).collect())
    }

    pub fn to_field(&self, grid: Grid2D) -> Result<ScalarField> {
        self.check_grid(&grid)?;
        ScalarField::new(grid, self.samples.clone())
    }

    fn check_grid(&self, grid: &Grid2D) -> Result<()> {
        if grid.width() != self.width || grid.height() != self.height {
            return Err(Error::InvalidGrid(format!(
                "image is {}x{}, grid is {}x{}",
                self.width,
                self.height,
                grid.width(),
                grid.height()
            )));
        }
        Ok(())
    }
}

pub fn set_pixels(set: &BinarySet) -> Vec<u8> {
    set.mask()
        .iter()
        .map(|&m| if m { 0 } else { 255 })
        .collect()
}

pub fn encode_set(set: &BinarySet) -> Vec<u8> {
    let g = set.grid();
    encode(g.width(), g.height(), &set_pixels(set)).expect("mask matches its grid")
}

pub fn write_set(path: &Path, set: &BinarySet) -> Result<()> {
    std::fs::write(path, encode_set(set))?;
    Ok(())
}
