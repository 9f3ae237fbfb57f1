//! MLS-MPM time stepper: particle-to-grid transfer with fused stress forces,
//! grid momentum update, grid-to-particle transfer and advection.
//!
//! Reference mode (`threads = 0`) is strictly single-threaded and is the
//! correctness baseline: reruns are bit-identical. Parallel mode partitions
//! particles into fixed-size chunks whose scatter buffers are reduced in
//! chunk order, so results are deterministic for any thread count and agree
//! with reference mode up to summation-order rounding.

mod snapshot;
mod step;

pub use snapshot::{
    list_frame_files, read_snapshot_csv, write_snapshot_csv, CsvDirSink, MemorySink, Snapshot,
    SnapshotSink,
};
pub use step::{bspline_weights, Stencil, Stepper};

use serde::{Deserialize, Serialize};

use crate::constitutive::MaterialModel;
use crate::error::{Error, Result};
use crate::math::{Mat3, Scalar, Vec3};

/// One Lagrangian material sample.
#[derive(Clone, Copy, Debug)]
pub struct Particle {
    /// Position [m].
    pub pos: Vec3,
    /// Velocity [m/s].
    pub vel: Vec3,
    /// Elastic deformation gradient.
    pub def_grad: Mat3,
    /// Affine velocity matrix C [1/s].
    pub affine: Mat3,
    /// Mass [kg]; constant for the particle's lifetime.
    pub mass: f64,
    /// Initial volume [m³].
    pub volume0: f64,
    /// Index into the scene's material table.
    pub material_id: usize,
}

impl Particle {
    pub fn at_rest(pos: Vec3, mass: f64, volume0: f64, material_id: usize) -> Self {
        Particle {
            pos,
            vel: Vec3::zero(),
            def_grad: Mat3::identity(),
            affine: Mat3::zero(),
            mass,
            volume0,
            material_id,
        }
    }
}

/// Background Eulerian grid extents.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    /// Node counts per axis; at least 8 each.
    pub resolution: [usize; 3],
    /// Cell size [m].
    pub dx: f64,
    /// World position of node (0,0,0).
    pub origin: [f64; 3],
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.resolution.iter().any(|&n| n < 8) {
            return Err(Error::validation(
                "grid.resolution",
                format!("{:?}: every axis needs at least 8 nodes", self.resolution),
            ));
        }
        if !(self.dx > 0.0) {
            return Err(Error::validation("grid.dx", format!("{} must be positive", self.dx)));
        }
        Ok(())
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.resolution[0] * self.resolution[1] * self.resolution[2]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.resolution[1] + j) * self.resolution[0] + i
    }

    #[inline]
    pub fn node_pos(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.dx,
            self.origin[1] + j as f64 * self.dx,
            self.origin[2] + k as f64 * self.dx,
        ]
    }

    /// Highest world coordinate covered by the grid per axis.
    pub fn extent_max(&self) -> [f64; 3] {
        [
            self.origin[0] + (self.resolution[0] - 1) as f64 * self.dx,
            self.origin[1] + (self.resolution[1] - 1) as f64 * self.dx,
            self.origin[2] + (self.resolution[2] - 1) as f64 * self.dx,
        ]
    }
}

/// Grid node storage: mass and momentum after P2G, velocity after the update.
#[derive(Clone, Debug)]
pub struct SimGrid {
    pub spec: GridSpec,
    pub mass: Vec<Scalar>,
    pub momentum: Vec<Vec3>,
    pub velocity: Vec<Vec3>,
}

impl SimGrid {
    pub fn new(spec: GridSpec) -> Self {
        let n = spec.node_count();
        SimGrid {
            spec,
            mass: vec![Scalar::zero(); n],
            momentum: vec![Vec3::zero(); n],
            velocity: vec![Vec3::zero(); n],
        }
    }

    pub fn clear(&mut self) {
        self.mass.fill(Scalar::zero());
        self.momentum.fill(Vec3::zero());
        self.velocity.fill(Vec3::zero());
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().map(|m| m.val).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceKind {
    /// Extra acceleration [m/s²] on nodes in the region over the window.
    Gravity,
    /// Total impulse [N·s] split evenly across the window's steps and applied
    /// as a uniform velocity increment to the massy nodes in the region.
    Impulse,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ExternalForce {
    pub kind: ForceKind,
    pub vector: [f64; 3],
    pub region_min: [f64; 3],
    pub region_max: [f64; 3],
    /// Active time window [s], inclusive start, exclusive end.
    pub window: (f64, f64),
}

impl ExternalForce {
    pub fn validate(&self) -> Result<()> {
        if self.window.0 > self.window.1 {
            return Err(Error::validation(
                "force.window",
                format!("start {} exceeds end {}", self.window.0, self.window.1),
            ));
        }
        if self.region_min.iter().zip(&self.region_max).any(|(lo, hi)| lo >= hi) {
            return Err(Error::validation(
                "force.region",
                format!("empty region {:?}..{:?}", self.region_min, self.region_max),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.region_min[a] && p[a] <= self.region_max[a])
    }

    /// First step index inside the window and the window's step count.
    pub fn step_window(&self, dt: f64) -> (i64, i64) {
        let k_start = (self.window.0 / dt - 1e-9).ceil() as i64;
        let k_end = (self.window.1 / dt - 1e-9).ceil() as i64;
        (k_start, (k_end - k_start).max(1))
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Velocity zeroed on the wrong side of the plane.
    StickyPlane,
    /// Incoming normal velocity removed; Coulomb friction on the tangent.
    SlipPlane,
    /// Slip (or sticky) treatment at all six grid faces, inset by a margin.
    BoxWalls,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub kind: BoundaryKind,
    /// A point on the plane (unused for box walls).
    #[serde(default)]
    pub point: [f64; 3],
    /// Outward-from-wall (into the domain) normal; need not be unit length.
    #[serde(default)]
    pub normal: [f64; 3],
    /// Cells inset from each face for box walls.
    #[serde(default = "default_margin")]
    pub margin_cells: usize,
    /// Coulomb friction coefficient for slip contacts.
    #[serde(default)]
    pub friction: f64,
    /// Box walls only: zero velocity instead of slip.
    #[serde(default)]
    pub sticky: bool,
}

fn default_margin() -> usize {
    2
}

impl BoundaryCondition {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        match self.kind {
            BoundaryKind::StickyPlane | BoundaryKind::SlipPlane => {
                let n2: f64 = self.normal.iter().map(|x| x * x).sum();
                if n2 == 0.0 {
                    return Err(Error::validation("boundary.normal", "zero normal"));
                }
                let lo = grid.origin;
                let hi = grid.extent_max();
                if (0..3).any(|a| self.point[a] < lo[a] || self.point[a] > hi[a]) {
                    return Err(Error::validation(
                        "boundary.point",
                        format!("{:?} lies outside the grid domain", self.point),
                    ));
                }
            }
            BoundaryKind::BoxWalls => {
                let max_margin = grid.resolution.iter().min().unwrap() / 2;
                if self.margin_cells >= max_margin {
                    return Err(Error::validation(
                        "boundary.margin_cells",
                        format!("{} leaves no interior", self.margin_cells),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Full stepping configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    /// Time step [s].
    pub dt: f64,
    pub n_steps: usize,
    /// Global gravity [m/s²].
    pub gravity: [f64; 3],
    pub grid: GridSpec,
    #[serde(default)]
    pub boundaries: Vec<BoundaryCondition>,
    #[serde(default)]
    pub forces: Vec<ExternalForce>,
    /// Steps between emitted snapshots.
    pub output_stride: usize,
    /// 0 = reference (single-threaded) mode.
    #[serde(default)]
    pub threads: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::validation("dt", format!("{} must be positive", self.dt)));
        }
        if self.output_stride == 0 {
            return Err(Error::validation("output_stride", "must be at least 1"));
        }
        self.grid.validate()?;
        for f in &self.forces {
            f.validate()?;
        }
        for b in &self.boundaries {
            b.validate(&self.grid)?;
        }
        Ok(())
    }

    pub fn frames_emitted(&self) -> usize {
        1 + self.n_steps / self.output_stride
    }
}

/// Simulation state: particles plus the material table they index into.
#[derive(Clone, Debug)]
pub struct SimState {
    pub particles: Vec<Particle>,
    pub materials: Vec<MaterialModel>,
    pub step_index: usize,
    pub time: f64,
}

impl SimState {
    pub fn new(particles: Vec<Particle>, materials: Vec<MaterialModel>) -> Self {
        SimState { particles, materials, step_index: 0, time: 0.0 }
    }

    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|p| p.mass).sum()
    }

    pub fn total_momentum(&self) -> [f64; 3] {
        let mut acc = [0.0; 3];
        for p in &self.particles {
            let v = p.vel.values();
            for a in 0..3 {
                acc[a] += p.mass * v[a];
            }
        }
        acc
    }

    pub fn snapshot(&self, frame: usize) -> Snapshot {
        Snapshot {
            frame,
            step: self.step_index,
            time: self.time,
            positions: self.particles.iter().map(|p| p.pos).collect(),
            velocities: self.particles.iter().map(|p| p.vel).collect(),
            masses: self.particles.iter().map(|p| p.mass).collect(),
        }
    }
}
