//! Build a scene body from a point-cloud text file instead of a primitive
//! shape — the ingestion path for externally reconstructed geometry.
//!
//! ```bash
//! cargo run --example point_cloud_body
//! ```

use std::io::Write;

use mpm_ident::engine::Stepper;
use mpm_ident::scene::{build_scene, BodySpec, SceneSpec, ShapeSpec};

fn main() -> mpm_ident::Result<()> {
    let dir = std::env::temp_dir().join("mpm_ident_pointcloud");
    std::fs::create_dir_all(&dir).expect("create dir");

    // A small ring of points around (0.5, 0.45, 0.5), one per line.
    let cloud_path = dir.join("ring.xyz");
    {
        let mut f = std::fs::File::create(&cloud_path).expect("create cloud");
        writeln!(f, "# x y z  (volumes default to bbox/count)").unwrap();
        for i in 0..120 {
            let a = i as f64 / 120.0 * std::f64::consts::TAU;
            let r = 0.08 + 0.01 * (5.0 * a).sin();
            writeln!(
                f,
                "{} {} {}",
                0.5 + r * a.cos(),
                0.45 + 0.02 * (3.0 * a).cos(),
                0.5 + r * a.sin()
            )
            .unwrap();
        }
    }

    // Start from a stock scene, swap the body for the point cloud.
    let scene_path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenes/gradcheck/elastic.json");
    let mut spec = SceneSpec::load(&scene_path)?;
    spec.bodies = vec![BodySpec {
        shape: ShapeSpec::PointCloud { path: cloud_path.display().to_string() },
        material: "body".to_string(),
        ppc: 8,
        velocity: [0.0, -1.0, 0.0],
    }];
    spec.n_steps = 40;

    let built = build_scene(&spec, None, None, 0)?;
    println!(
        "loaded {} particles from {} (total mass {:.4} kg)",
        built.state.particles.len(),
        cloud_path.display(),
        built.state.total_mass()
    );

    let mut state = built.state;
    Stepper::new(built.config)?.step(&mut state)?;
    println!("stepped once; first particle now at {:?}", state.particles[0].pos.values());
    Ok(())
}
