//! Middlebury `.flo` flow files.
//!
//! Layout, all little-endian: float32 magic `202021.25`, int32 width, int32
//! height, then `width*height` row-major interleaved float32 `(u, v)` pairs.
//! Components with magnitude above 1e9 mark invalid pixels.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Scalar;

use super::FlowField;

const MAGIC: f32 = 202021.25;
const INVALID_SENTINEL: f32 = 1e10;
const INVALID_THRESHOLD: f32 = 1e9;

pub fn write_flo(field: &FlowField, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(&MAGIC.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(field.width as i32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(field.height as i32).to_le_bytes()).map_err(io_err)?;
    for idx in 0..field.width * field.height {
        let (u, v) = if field.valid[idx] {
            (field.u[idx].val as f32, field.v[idx].val as f32)
        } else {
            (INVALID_SENTINEL, INVALID_SENTINEL)
        };
        w.write_all(&u.to_le_bytes()).map_err(io_err)?;
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let display = path.display().to_string();
    let fmt_err = |message: String| Error::FloFormat { path: display.clone(), message };

    if bytes.len() < 12 {
        return Err(fmt_err(format!("file too short ({} bytes)", bytes.len())));
    }
    let f32_at = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let i32_at = |off: usize| i32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());

    let magic = f32_at(0);
    if magic != MAGIC {
        return Err(fmt_err(format!("bad magic {magic}")));
    }
    let width = i32_at(4);
    let height = i32_at(8);
    if width <= 0 || height <= 0 {
        return Err(fmt_err(format!("nonpositive dimensions {width}x{height}")));
    }
    let (width, height) = (width as usize, height as usize);
    let expected = 12 + width * height * 8;
    if bytes.len() != expected {
        return Err(fmt_err(format!(
            "truncated: expected {expected} bytes for {width}x{height}, found {}",
            bytes.len()
        )));
    }

    let mut field = FlowField::new(width, height);
    for idx in 0..width * height {
        let u = f32_at(12 + idx * 8);
        let v = f32_at(12 + idx * 8 + 4);
        if u.abs() > INVALID_THRESHOLD || v.abs() > INVALID_THRESHOLD || !u.is_finite() || !v.is_finite() {
            // Invalid pixel: leave (0,0), valid = false.
            continue;
        }
        field.u[idx] = Scalar::new(u as f64);
        field.v[idx] = Scalar::new(v as f64);
        field.valid[idx] = true;
    }
    Ok(field)
}
