//! Scene construction: the scene file schema, particle sampling of primitive
//! shapes, point-cloud ingestion, and material binding.
//!
//! A scene file is JSON with these sections (units in brackets):
//!
//! ```json
//! {
//!   "grid":     { "resolution": [32,32,32], "dx": 0.033, "origin": [0,0,0] },
//!   "dt":       3e-4,                      // [s]
//!   "n_steps":  240,
//!   "output_stride": 8,
//!   "gravity":  [0.0, -9.8, 0.0],          // [m/s²]
//!   "seed":     42,
//!   "camera":   { "position": [0.5,0.5,2.2], "forward": [0,0,-1],
//!                 "up": [0,1,0], "focal_px": 110.0, "image": [96,96] },
//!   "materials": { "<name>": { "type": "elastic", "density": 1000.0,
//!                              "params": { "E": 1e5, "nu": 0.3 } } },
//!   "bodies":   [ { "shape": { "box": { "min": [..], "max": [..] } },
//!                   "material": "<name>", "ppc": 8,
//!                   "velocity": [0,-1,0] } ],
//!   "forces":   [],
//!   "boundaries": []
//! }
//! ```
//!
//! Shapes: `box {min,max}` [m], `sphere {center,radius}` [m], and
//! `point_cloud {path}` (text lines `x y z [volume]`, `#` comments).

mod sample;

pub use sample::{load_point_cloud, sample_body, PointSample};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constitutive::MaterialModel;
use crate::engine::{BoundaryCondition, ExternalForce, GridSpec, Particle, SimConfig, SimState};
use crate::error::{Error, Result};
use crate::flow::Camera;
use crate::identify::prior::{MaterialEntry, MaterialPrior};
use crate::math::Vec3;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeSpec {
    Box { min: [f64; 3], max: [f64; 3] },
    Sphere { center: [f64; 3], radius: f64 },
    PointCloud { path: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BodySpec {
    pub shape: ShapeSpec,
    /// Name into the material table.
    pub material: String,
    /// Particles per cell target for sampled shapes.
    #[serde(default = "default_ppc")]
    pub ppc: usize,
    /// Initial velocity [m/s].
    #[serde(default)]
    pub velocity: [f64; 3],
}

fn default_ppc() -> usize {
    8
}

/// The full scene file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneSpec {
    pub grid: GridSpec,
    pub dt: f64,
    pub n_steps: usize,
    pub output_stride: usize,
    pub gravity: [f64; 3],
    #[serde(default)]
    pub seed: u64,
    pub camera: Camera,
    pub materials: BTreeMap<String, MaterialEntry>,
    pub bodies: Vec<BodySpec>,
    #[serde(default)]
    pub forces: Vec<ExternalForce>,
    #[serde(default)]
    pub boundaries: Vec<BoundaryCondition>,
}

impl SceneSpec {
    pub fn load(path: &Path) -> Result<SceneSpec> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("scene serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn sim_config(&self, threads: usize) -> SimConfig {
        SimConfig {
            dt: self.dt,
            n_steps: self.n_steps,
            gravity: self.gravity,
            grid: self.grid,
            boundaries: self.boundaries.clone(),
            forces: self.forces.clone(),
            output_stride: self.output_stride,
            threads,
        }
    }
}

#[derive(Debug)]
/// A simulation-ready scene: initial state, config, camera, and the name →
/// material-index mapping.
pub struct BuiltScene {
    pub state: SimState,
    pub config: SimConfig,
    pub camera: Camera,
    pub material_index: BTreeMap<String, usize>,
    pub seed: u64,
}

/// Sample bodies, bind materials, assemble the config. Entries in `prior`
/// override the scene's material table by name.
pub fn build_scene(
    spec: &SceneSpec,
    prior: Option<&MaterialPrior>,
    base_dir: Option<&Path>,
    threads: usize,
) -> Result<BuiltScene> {
    let config = spec.sim_config(threads);
    config.validate()?;
    spec.camera.validate()?;

    // Resolve the material table: scene entries, then prior overrides.
    let mut entries: BTreeMap<String, MaterialEntry> = spec.materials.clone();
    if let Some(p) = prior {
        for (name, entry) in p {
            entries.insert(name.clone(), entry.clone());
        }
    }

    let mut materials: Vec<MaterialModel> = Vec::new();
    let mut material_index: BTreeMap<String, usize> = BTreeMap::new();
    for (name, entry) in &entries {
        material_index.insert(name.clone(), materials.len());
        materials.push(entry.to_model(name)?);
    }

    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(spec.seed);
    let mut particles: Vec<Particle> = Vec::new();
    for (bi, body) in spec.bodies.iter().enumerate() {
        let mat_id = *material_index.get(&body.material).ok_or_else(|| {
            Error::validation(
                format!("bodies[{bi}].material"),
                format!("unknown material `{}`", body.material),
            )
        })?;
        let density = materials[mat_id].density;
        let samples = match &body.shape {
            ShapeSpec::PointCloud { path } => {
                let resolved = resolve(base_dir, path);
                load_point_cloud(&resolved)?
            }
            shape => sample_body(shape, body.ppc, &spec.grid, &mut rng)?,
        };
        if samples.is_empty() {
            return Err(Error::validation(
                format!("bodies[{bi}]"),
                "no particles sampled inside the grid".to_string(),
            ));
        }
        for s in &samples {
            check_interior(&spec.grid, s.pos, bi)?;
            let mut p = Particle::at_rest(
                Vec3::from_array(s.pos),
                density * s.volume,
                s.volume,
                mat_id,
            );
            p.vel = Vec3::from_array(body.velocity);
            particles.push(p);
        }
    }
    if particles.is_empty() {
        return Err(Error::validation("bodies", "scene has no particles"));
    }

    Ok(BuiltScene {
        state: SimState::new(particles, materials),
        config,
        camera: spec.camera,
        material_index,
        seed: spec.seed,
    })
}

fn resolve(base: Option<&Path>, path: &str) -> PathBuf {
    let p = Path::new(path);
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

fn check_interior(grid: &GridSpec, pos: [f64; 3], body: usize) -> Result<()> {
    for a in 0..3 {
        let g = (pos[a] - grid.origin[a]) / grid.dx;
        if !(g >= 0.5 && g <= grid.resolution[a] as f64 - 2.5) {
            return Err(Error::validation(
                format!("bodies[{body}]"),
                format!("particle at {pos:?} violates the one-cell grid margin"),
            ));
        }
    }
    Ok(())
}
