//! Camera projection, dense optical-flow synthesis from particle motion,
//! Middlebury `.flo` file I/O, and the flow discrepancy loss.

mod flo;
mod loss;
mod synth;

pub use flo::{read_flo, write_flo};
pub use loss::{flow_loss, FlowLossStats};
pub use synth::{synth_flow, SynthParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Scalar, Vec2, Vec3};

/// Pinhole camera. Image origin top-left, +x right, +y down.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Camera {
    pub position: [f64; 3],
    /// Viewing direction; normalized on use.
    pub forward: [f64; 3],
    /// Approximate up; re-orthogonalized against `forward`.
    pub up: [f64; 3],
    /// Focal length in pixels.
    pub focal_px: f64,
    /// Image size (width, height) in pixels.
    pub image: (usize, usize),
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        if !(self.focal_px > 0.0) {
            return Err(Error::validation("camera.focal_px", "must be positive"));
        }
        if self.image.0 < 16 || self.image.1 < 16 {
            return Err(Error::validation("camera.image", "each side needs at least 16 px"));
        }
        let f: f64 = self.forward.iter().map(|x| x * x).sum();
        let u: f64 = self.up.iter().map(|x| x * x).sum();
        if f == 0.0 || u == 0.0 {
            return Err(Error::validation("camera", "forward and up must be nonzero"));
        }
        Ok(())
    }

    /// Orthonormal basis (forward, right, down) in world space.
    pub fn basis(&self) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let norm = |v: [f64; 3]| {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / n, v[1] / n, v[2] / n]
        };
        let fwd = norm(self.forward);
        let dot = self.up[0] * fwd[0] + self.up[1] * fwd[1] + self.up[2] * fwd[2];
        let up = norm([
            self.up[0] - dot * fwd[0],
            self.up[1] - dot * fwd[1],
            self.up[2] - dot * fwd[2],
        ]);
        // Right-handed view frame (right, down, forward), as in the usual
        // x-right / y-down image convention.
        let right = [
            fwd[1] * up[2] - fwd[2] * up[1],
            fwd[2] * up[0] - fwd[0] * up[2],
            fwd[0] * up[1] - fwd[1] * up[0],
        ];
        let down = [-up[0], -up[1], -up[2]];
        (fwd, right, down)
    }
}

/// Pinhole projection of a world point: pixel coordinates and depth along
/// the view axis. `None` when the point is not in front of the camera.
pub fn project(x: Vec3, cam: &Camera) -> Option<(Vec2, Scalar)> {
    let (fwd, right, down) = cam.basis();
    let rel = x - Vec3::from_array(cam.position);
    let depth = rel.dot(Vec3::from_array(fwd));
    if depth.val <= 1e-6 {
        return None;
    }
    let inv = depth.recip();
    let px = rel.dot(Vec3::from_array(right)) * inv * cam.focal_px
        + Scalar::new(cam.image.0 as f64 / 2.0);
    let py = rel.dot(Vec3::from_array(down)) * inv * cam.focal_px
        + Scalar::new(cam.image.1 as f64 / 2.0);
    Some((Vec2::new(px, py), depth))
}

/// Dense per-pixel 2D displacement field with a validity mask.
/// Invalid pixels carry (0, 0) and are excluded from every loss.
#[derive(Clone, Debug)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub u: Vec<Scalar>,
    pub v: Vec<Scalar>,
    pub valid: Vec<bool>,
}

impl FlowField {
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        FlowField {
            width,
            height,
            u: vec![Scalar::zero(); n],
            v: vec![Scalar::zero(); n],
            valid: vec![false; n],
        }
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}
