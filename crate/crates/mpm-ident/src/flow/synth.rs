//! Flow synthesis: splat projected particle displacements into a dense field.

use crate::engine::Snapshot;
use crate::error::{Error, Result};
use crate::math::Scalar;

use super::{project, Camera, FlowField};

#[derive(Clone, Copy, Debug)]
pub struct SynthParams {
    /// Splat radius in pixels; pixels whose center lies within this distance
    /// of the projected particle receive a contribution.
    pub splat_radius: f64,
    /// Depth tolerance band as a fraction of the scene depth range; splats
    /// within the band of the front-most depth at a pixel all contribute.
    pub depth_band_frac: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams { splat_radius: 1.5, depth_band_frac: 0.02 }
    }
}

struct Splat {
    /// Projected position in frame A (value part drives rasterization).
    cx: Scalar,
    cy: Scalar,
    depth: f64,
    du: Scalar,
    dv: Scalar,
}

/// Synthesize the dense flow between two particle snapshots as seen by `cam`.
///
/// Each particle adds its image-plane displacement to the pixels within the
/// splat radius of its frame-A projection, Gaussian-weighted (σ = radius/2),
/// with nearest-depth preference: only splats within the depth band of the
/// front-most splat covering a pixel contribute there. Touched pixels are
/// valid; untouched pixels invalid. Particle index order resolves ties, so
/// the result is deterministic.
pub fn synth_flow(
    frame_a: &Snapshot,
    frame_b: &Snapshot,
    cam: &Camera,
    params: &SynthParams,
) -> Result<FlowField> {
    if frame_a.len() != frame_b.len() {
        return Err(Error::IdMismatch(format!(
            "frame A has {} particles, frame B has {}",
            frame_a.len(),
            frame_b.len()
        )));
    }
    let (w, h) = cam.image;
    let mut field = FlowField::new(w, h);

    let mut splats: Vec<Splat> = Vec::with_capacity(frame_a.len());
    for i in 0..frame_a.len() {
        let (Some((pa, da)), Some((pb, _))) =
            (project(frame_a.positions[i], cam), project(frame_b.positions[i], cam))
        else {
            continue;
        };
        splats.push(Splat { cx: pa.x, cy: pa.y, depth: da.val, du: pb.x - pa.x, dv: pb.y - pa.y });
    }
    if splats.is_empty() {
        return Ok(field);
    }

    let d_min = splats.iter().map(|s| s.depth).fold(f64::INFINITY, f64::min);
    let d_max = splats.iter().map(|s| s.depth).fold(f64::NEG_INFINITY, f64::max);
    let band = params.depth_band_frac * (d_max - d_min);

    let radius = params.splat_radius;
    let sigma = radius / 2.0;
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);

    // Pass 1: nearest depth per pixel.
    let mut depth_min = vec![f64::INFINITY; w * h];
    let cover = |s: &Splat, mut f: Box<dyn FnMut(usize, usize) + '_>| {
        let (cx, cy) = (s.cx.val, s.cy.val);
        let x0 = ((cx - radius - 0.5).ceil().max(0.0)) as usize;
        let x1 = ((cx + radius - 0.5).floor().min((w - 1) as f64)).max(0.0) as usize;
        let y0 = ((cy - radius - 0.5).ceil().max(0.0)) as usize;
        let y1 = ((cy + radius - 0.5).floor().min((h - 1) as f64)).max(0.0) as usize;
        if cx + radius < 0.5 || cy + radius < 0.5 {
            return;
        }
        for py in y0..=y1 {
            for px in x0..=x1 {
                let dx = px as f64 + 0.5 - cx;
                let dy = py as f64 + 0.5 - cy;
                if dx * dx + dy * dy <= radius * radius {
                    f(px, py);
                }
            }
        }
    };
    for s in &splats {
        cover(
            s,
            Box::new(|px, py| {
                let idx = py * w + px;
                if s.depth < depth_min[idx] {
                    depth_min[idx] = s.depth;
                }
            }),
        );
    }

    // Pass 2: Gaussian-weighted accumulation among front-band splats,
    // in particle order.
    let mut wsum = vec![Scalar::zero(); w * h];
    let mut usum = vec![Scalar::zero(); w * h];
    let mut vsum = vec![Scalar::zero(); w * h];
    for s in &splats {
        cover(
            s,
            Box::new(|px, py| {
                let idx = py * w + px;
                if s.depth <= depth_min[idx] + band {
                    let dx = Scalar::new(px as f64 + 0.5) - s.cx;
                    let dy = Scalar::new(py as f64 + 0.5) - s.cy;
                    let weight = (-(dx * dx + dy * dy) * inv_two_sigma_sq).exp();
                    wsum[idx] += weight;
                    usum[idx] += weight * s.du;
                    vsum[idx] += weight * s.dv;
                }
            }),
        );
    }

    for idx in 0..w * h {
        if wsum[idx].val > 0.0 {
            let inv = wsum[idx].recip();
            field.u[idx] = usum[idx] * inv;
            field.v[idx] = vsum[idx] * inv;
            field.valid[idx] = true;
        }
    }
    Ok(field)
}
