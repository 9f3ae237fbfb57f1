//! Particle sampling: jittered-lattice fill of primitive shapes and
//! point-cloud file parsing.

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::engine::GridSpec;
use crate::error::{Error, Result};

use super::ShapeSpec;

#[derive(Clone, Copy, Debug)]
pub struct PointSample {
    pub pos: [f64; 3],
    pub volume: f64,
}

/// Fill a shape with jittered-lattice samples: every grid cell overlapping
/// the shape receives `ppc` stratified sub-cell points, each jittered inside
/// its sub-cell; points falling outside the shape are dropped. Per-sample
/// volume is dx³/ppc. Deterministic for a given generator state.
pub fn sample_body(
    shape: &ShapeSpec,
    ppc: usize,
    grid: &GridSpec,
    rng: &mut impl Rng,
) -> Result<Vec<PointSample>> {
    if ppc < 1 {
        return Err(Error::validation("body.ppc", "must be at least 1"));
    }
    let (bb_min, bb_max) = match shape {
        ShapeSpec::Box { min, max } => {
            if (0..3).any(|a| min[a] >= max[a]) {
                return Err(Error::validation("body.shape", "empty box"));
            }
            (*min, *max)
        }
        ShapeSpec::Sphere { center, radius } => {
            if !(*radius > 0.0) {
                return Err(Error::validation("body.shape", "nonpositive sphere radius"));
            }
            (
                [center[0] - radius, center[1] - radius, center[2] - radius],
                [center[0] + radius, center[1] + radius, center[2] + radius],
            )
        }
        ShapeSpec::PointCloud { .. } => {
            return Err(Error::validation("body.shape", "point clouds are loaded, not sampled"))
        }
    };

    let inside = |p: [f64; 3]| -> bool {
        match shape {
            ShapeSpec::Box { min, max } => (0..3).all(|a| p[a] >= min[a] && p[a] < max[a]),
            ShapeSpec::Sphere { center, radius } => {
                let d2: f64 = (0..3).map(|a| (p[a] - center[a]).powi(2)).sum();
                d2 <= radius * radius
            }
            ShapeSpec::PointCloud { .. } => false,
        }
    };

    // Sub-lattice resolution: smallest k with k³ ≥ ppc; the first `ppc`
    // sub-cells in scan order are used.
    let k = (1..=ppc).find(|k| k * k * k >= ppc).unwrap_or(1);
    let sub = grid.dx / k as f64;

    let cell_range = |lo: f64, hi: f64, origin: f64, n: usize| -> (i64, i64) {
        let c0 = ((lo - origin) / grid.dx).floor() as i64;
        let c1 = ((hi - origin) / grid.dx).ceil() as i64;
        (c0.max(0), c1.min(n as i64 - 1))
    };
    let (x0, x1) = cell_range(bb_min[0], bb_max[0], grid.origin[0], grid.resolution[0]);
    let (y0, y1) = cell_range(bb_min[1], bb_max[1], grid.origin[1], grid.resolution[1]);
    let (z0, z1) = cell_range(bb_min[2], bb_max[2], grid.origin[2], grid.resolution[2]);

    let volume = grid.dx.powi(3) / ppc as f64;
    let mut samples = Vec::new();
    for ci in x0..=x1 {
        for cj in y0..=y1 {
            for ck in z0..=z1 {
                let cell_min = [
                    grid.origin[0] + ci as f64 * grid.dx,
                    grid.origin[1] + cj as f64 * grid.dx,
                    grid.origin[2] + ck as f64 * grid.dx,
                ];
                let mut placed = 0;
                'sub: for si in 0..k {
                    for sj in 0..k {
                        for sk in 0..k {
                            if placed >= ppc {
                                break 'sub;
                            }
                            placed += 1;
                            let jitter: [f64; 3] =
                                [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
                            let pos = [
                                cell_min[0] + (si as f64 + jitter[0]) * sub,
                                cell_min[1] + (sj as f64 + jitter[1]) * sub,
                                cell_min[2] + (sk as f64 + jitter[2]) * sub,
                            ];
                            if inside(pos) {
                                samples.push(PointSample { pos, volume });
                            }
                        }
                    }
                }
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::validation("body.shape", "shape produced no samples inside the grid"));
    }
    Ok(samples)
}

/// Read positions from a text file: one `x y z` triple per line, optional
/// fourth column overriding the per-point volume, `#` starts a comment.
/// Points without a volume column share the bounding-box volume evenly.
pub fn load_point_cloud(path: &Path) -> Result<Vec<PointSample>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let display = path.display().to_string();
    let mut points: Vec<([f64; 3], Option<f64>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(Error::ParseLine {
                path: display,
                line: lineno + 1,
                message: format!("expected `x y z [volume]`, found {} fields", fields.len()),
            });
        }
        let mut vals = [0.0; 3];
        for (a, f) in fields.iter().take(3).enumerate() {
            vals[a] = f.parse().map_err(|_| Error::ParseLine {
                path: display.clone(),
                line: lineno + 1,
                message: format!("bad number `{f}`"),
            })?;
        }
        let vol = if fields.len() == 4 {
            Some(fields[3].parse().map_err(|_| Error::ParseLine {
                path: display.clone(),
                line: lineno + 1,
                message: format!("bad volume `{}`", fields[3]),
            })?)
        } else {
            None
        };
        points.push((vals, vol));
    }
    if points.is_empty() {
        return Err(Error::validation(display, "point cloud is empty"));
    }

    // Bounding-box heuristic for points without explicit volumes.
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (p, _) in &points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let bbox: f64 = (0..3).map(|a| (hi[a] - lo[a]).max(1e-9)).product();
    let default_vol = bbox / points.len() as f64;

    Ok(points
        .into_iter()
        .map(|(pos, vol)| PointSample { pos, volume: vol.unwrap_or(default_vol) })
        .collect())
}
