//! Full self-recovery loop: generate observations at known parameters,
//! start the optimizer from a perturbed prior, and watch it walk back.
//!
//! ```bash
//! cargo run --release --example identify_material
//! ```

use std::path::Path;

use mpm_ident::constitutive::ParamKey;
use mpm_ident::flow::SynthParams;
use mpm_ident::identify::{
    generate_observations, optimize, IdentificationProblem, OptimizerSettings,
};
use mpm_ident::math::Scalar;
use mpm_ident::scene::{build_scene, SceneSpec};

fn main() -> mpm_ident::Result<()> {
    let scene_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes/gradcheck/elastic.json");
    let spec = SceneSpec::load(&scene_path)?;
    let built = build_scene(&spec, None, scene_path.parent(), 0)?;

    println!("generating observations at the scene's true parameters ...");
    let observed = generate_observations(
        &built.state,
        &built.config,
        &built.camera,
        &SynthParams::default(),
    )?;

    let settings = OptimizerSettings { step_size: 0.1, max_iterations: 40, ..Default::default() };
    let problem =
        IdentificationProblem::new(built, None, observed, settings, SynthParams::default())?;

    let truth = problem.materials[problem.target].params;
    let mut start = truth;
    start.set(ParamKey::Young, Scalar::new(truth.young.val * 3.0));
    start.set(ParamKey::Poisson, Scalar::new(truth.poisson.val + 0.1));
    println!(
        "truth:  E = {:.3e}, nu = {:.3}",
        truth.young.val, truth.poisson.val
    );
    println!(
        "prior:  E = {:.3e}, nu = {:.3}",
        start.young.val, start.poisson.val
    );

    let report = optimize(&problem, &start)?;
    println!(
        "result: E = {:.3e}, nu = {:.3}  (loss {:.3e} after {} iterations, {:?})",
        report.params["E"],
        report.params["nu"],
        report.best_loss,
        report.iterations,
        report.stop_reason
    );
    let e_err = (report.params["E"] - truth.young.val).abs() / truth.young.val;
    println!("relative error in E: {:.1}%", 100.0 * e_err);
    Ok(())
}
