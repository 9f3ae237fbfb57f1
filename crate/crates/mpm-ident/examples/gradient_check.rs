//! Verify that forward-mode flow-loss tangents match central finite
//! differences for every parameter of one material.
//!
//! ```bash
//! cargo run --release --example gradient_check [material]
//! ```
//!
//! `material` is one of the seven type names (default `sand`).

use std::path::Path;

use mpm_ident::flow::SynthParams;
use mpm_ident::identify::{
    generate_observations, gradient_check, IdentificationProblem, OptimizerSettings,
};
use mpm_ident::math::Scalar;
use mpm_ident::scene::{build_scene, SceneSpec};

fn main() -> mpm_ident::Result<()> {
    let material = std::env::args().nth(1).unwrap_or_else(|| "sand".to_string());
    let scene_path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join(format!("scenes/gradcheck/{material}.json"));
    let spec = SceneSpec::load(&scene_path)?;

    let built = build_scene(&spec, None, scene_path.parent(), 0)?;
    let observed = generate_observations(
        &built.state,
        &built.config,
        &built.camera,
        &SynthParams::default(),
    )?;
    let mut problem = IdentificationProblem::new(
        built,
        None,
        observed,
        OptimizerSettings::default(),
        SynthParams::default(),
    )?;

    // Move the evaluation point off the observation-generating parameters
    // so the gradient has something to say.
    let keys = problem.active_params();
    let params = &mut problem.materials[problem.target].params;
    for &key in keys {
        let v = params.get(key).val;
        let moved = match key.file_key() {
            "nu" => v + 0.05,
            "theta_fric" => v + 5.0,
            _ => v * 1.5,
        };
        params.set(key, Scalar::new(moved));
    }

    println!("{material}: tangent vs central finite difference");
    for row in gradient_check(&problem, 1e-5, false)? {
        println!(
            "  {:<10} tangent {: >14.6e}   fd {: >14.6e}   rel err {:.2e}   mask {}",
            row.param,
            row.tangent,
            row.fd,
            row.rel_err,
            if row.mask_stable { "stable" } else { "moved" }
        );
    }
    Ok(())
}
