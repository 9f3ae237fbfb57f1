//! Command implementations behind the `mpm-ident` binary.
//!
//! Verbs: `simulate`, `synth-flow`, `identify`, `gradcheck`, `bench`.
//! Exit codes: 0 success, 1 usage (bad flags, missing files), 2 validation
//! or format errors (including failed gradient checks and failed bench
//! bounds), 3 simulation blow-up.
//!
//! When `--out` is omitted, outputs land under the directory named by the
//! `MPM_IDENT_OUT` environment variable.

mod bench;

pub use bench::{cmd_bench, run_case, run_suite_file, BenchCase, BenchSuite, CaseResult};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::constitutive::ParamKey;
use crate::engine::{list_frame_files, read_snapshot_csv, CsvDirSink, Stepper};
use crate::error::{Error, Result};
use crate::flow::{read_flo, synth_flow, write_flo, FlowField, SynthParams};
use crate::identify::{
    self, generate_observations, gradient_check, load_prior, parameter_deltas,
    IdentificationProblem, MaterialPrior, OptimizerSettings,
};
use crate::math::Scalar;
use crate::scene::{build_scene, SceneSpec};

pub const OUT_ENV: &str = "MPM_IDENT_OUT";

#[derive(Parser, Debug)]
#[command(
    name = "mpm-ident",
    about = "Differentiable MLS-MPM simulation and material identification from optical flow",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Scene file (JSON).
    #[arg(long)]
    pub scene: PathBuf,
    /// Material prior table (JSON); overrides scene materials by name.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Output directory; defaults under $MPM_IDENT_OUT.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the scene's sampling seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 runs the single-threaded reference mode.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a scene and write one CSV snapshot per emitted frame.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Synthesize .flo flow files from a directory of frame CSVs.
    SynthFlow {
        /// Directory containing frame_%05d.csv files.
        #[arg(long)]
        frames: PathBuf,
        /// Scene file providing the camera.
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Splat radius in pixels.
        #[arg(long, default_value_t = 1.5)]
        radius: f64,
    },
    /// Recover material parameters from observed flow fields.
    Identify {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory of observed flow_%05d.flo files.
        #[arg(long)]
        observed: PathBuf,
        /// Truth table (JSON) enabling per-parameter absolute-error lines.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Iteration budget.
        #[arg(long, default_value_t = 100)]
        iters: usize,
        /// Adam step size in unconstrained space.
        #[arg(long, default_value_t = 0.05)]
        step_size: f64,
        /// Guidance loss; only `flow` is implemented.
        #[arg(long, default_value = "flow")]
        loss: String,
        /// Material to identify (defaults to the scene's only material).
        #[arg(long)]
        material: Option<String>,
    },
    /// Compare loss tangents against central finite differences.
    Gradcheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Relative finite-difference step.
        #[arg(long, default_value_t = 1e-5)]
        fd_step: f64,
        #[arg(long)]
        material: Option<String>,
    },
    /// Run a self-recovery benchmark suite.
    Bench {
        /// Suite file (JSON).
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate { common } => cmd_simulate(&common),
        Command::SynthFlow { frames, scene, out, radius } => {
            cmd_synth_flow(&frames, &scene, out.as_deref(), radius)
        }
        Command::Identify { common, observed, truth, iters, step_size, loss, material } => {
            cmd_identify(
                &common,
                &observed,
                truth.as_deref(),
                iters,
                step_size,
                &loss,
                material.as_deref(),
            )
        }
        Command::Gradcheck { common, fd_step, material } => {
            cmd_gradcheck(&common, fd_step, material.as_deref())
        }
        Command::Bench { suite, out, threads } => {
            let out = resolve_out(out.as_deref(), "bench")?;
            cmd_bench(&suite, &out, threads)
        }
    }
}

fn resolve_out(explicit: Option<&Path>, command: &str) -> Result<PathBuf> {
    match explicit {
        Some(p) => Ok(p.to_path_buf()),
        None => match std::env::var_os(OUT_ENV) {
            Some(root) => Ok(PathBuf::from(root).join(command)),
            None => Err(Error::Usage(format!(
                "no --out given and {OUT_ENV} is unset"
            ))),
        },
    }
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    }
    Ok(())
}

fn load_scene_with_seed(common: &CommonArgs) -> Result<(SceneSpec, Option<MaterialPrior>)> {
    require_file(&common.scene)?;
    let mut spec = SceneSpec::load(&common.scene)?;
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    let prior = match &common.prior {
        Some(p) => {
            require_file(p)?;
            Some(load_prior(p)?)
        }
        None => None,
    };
    Ok((spec, prior))
}

fn scene_dir(path: &Path) -> Option<PathBuf> {
    path.parent().map(|p| p.to_path_buf())
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    version: &'a str,
    scene: String,
    seed: u64,
    particles: usize,
    frames: usize,
    config: &'a crate::engine::SimConfig,
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<()> {
    let path = out.join("run_manifest.json");
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn cmd_simulate(common: &CommonArgs) -> Result<()> {
    let start = Instant::now();
    let (spec, prior) = load_scene_with_seed(common)?;
    let built = build_scene(
        &spec,
        prior.as_ref(),
        scene_dir(&common.scene).as_deref(),
        common.threads,
    )?;
    let out = resolve_out(common.out.as_deref(), "simulate")?;
    let mut sink = CsvDirSink::new(&out)?;
    let mut state = built.state;
    let mut stepper = Stepper::new(built.config.clone())?;
    stepper.run(&mut state, &mut sink)?;
    write_manifest(
        &out,
        &RunManifest {
            command: "simulate",
            version: env!("CARGO_PKG_VERSION"),
            scene: common.scene.display().to_string(),
            seed: built.seed,
            particles: state.particles.len(),
            frames: sink.frames_written,
            config: &built.config,
        },
    )?;
    eprintln!(
        "simulate: {} particles, {} frames -> {} ({:.2}s)",
        state.particles.len(),
        sink.frames_written,
        out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn cmd_synth_flow(
    frames: &PathBuf,
    scene: &Path,
    out: Option<&Path>,
    radius: f64,
) -> Result<()> {
    require_file(scene)?;
    let spec = SceneSpec::load(scene)?;
    spec.camera.validate()?;
    let frame_files = list_frame_files(frames)?;
    if frame_files.len() < 2 {
        return Err(Error::validation(
            "frames",
            format!("need at least 2 frames, found {}", frame_files.len()),
        ));
    }
    let out = resolve_out(out, "synth-flow")?;
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let params = SynthParams { splat_radius: radius, ..SynthParams::default() };
    let mut prev = read_snapshot_csv(&frame_files[0])?;
    for (pair, file) in frame_files[1..].iter().enumerate() {
        let next = read_snapshot_csv(file)?;
        let field = synth_flow(&prev, &next, &spec.camera, &params)?;
        let path = out.join(format!("flow_{pair:05}.flo"));
        write_flo(&field, &path)?;
        prev = next;
    }
    eprintln!("synth-flow: {} pairs -> {}", frame_files.len() - 1, out.display());
    Ok(())
}

fn read_observed_flows(dir: &Path) -> Result<Vec<FlowField>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("flow_") && n.ends_with(".flo"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    paths.iter().map(|p| read_flo(p)).collect()
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_identify(
    common: &CommonArgs,
    observed_dir: &Path,
    truth: Option<&Path>,
    iters: usize,
    step_size: f64,
    loss: &str,
    material: Option<&str>,
) -> Result<()> {
    let start = Instant::now();
    if loss != "flow" {
        return Err(Error::LossNotImplemented(loss.to_string()));
    }
    let (spec, prior) = load_scene_with_seed(common)?;
    let prior = prior.ok_or_else(|| Error::Usage("identify requires --prior".into()))?;
    let observed = read_observed_flows(observed_dir)?;

    let built = build_scene(&spec, None, scene_dir(&common.scene).as_deref(), common.threads)?;
    let settings = OptimizerSettings {
        step_size,
        max_iterations: iters,
        ..OptimizerSettings::default()
    };
    let problem =
        IdentificationProblem::new(built, material, observed, settings, SynthParams::default())?;

    let prior_entry = prior.get(&problem.target_name).ok_or_else(|| {
        Error::validation(
            "prior",
            format!("no entry for material `{}`", problem.target_name),
        )
    })?;
    let prior_model = prior_entry.to_model(&problem.target_name)?;
    if prior_model.kind != problem.materials[problem.target].kind {
        return Err(Error::validation(
            "prior",
            format!(
                "prior type `{}` does not match scene type `{}`",
                prior_model.kind.name(),
                problem.materials[problem.target].kind.name()
            ),
        ));
    }

    let mut report = identify::compare_losses(&problem, &prior_model.params, loss)?;

    if let Some(truth_path) = truth {
        require_file(truth_path)?;
        let truth_table = load_prior(truth_path)?;
        if let Some(entry) = truth_table.get(&problem.target_name) {
            let model = entry.to_model(&problem.target_name)?;
            report.deltas =
                Some(parameter_deltas(&report.params, &model.params, problem.active_params()));
        }
    }

    let out = resolve_out(common.out.as_deref(), "identify")?;
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let report_path = out.join("report.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&report_path, text).map_err(|e| Error::io(&report_path, e))?;

    println!("material: {}", report.material);
    println!("best loss: {:.6e} after {} iterations", report.best_loss, report.iterations);
    for (key, value) in &report.params {
        println!("  {key} = {value:.6e}");
    }
    if let Some(deltas) = &report.deltas {
        for (key, value) in deltas {
            println!("  Δ_{key}={value:.3e}");
        }
    }
    eprintln!(
        "identify: report -> {} ({:.2}s)",
        report_path.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Offsets applied to the evaluation point when gradcheck runs without a
/// prior, so residuals against the self-generated observations are nonzero.
fn gradcheck_offset(params: &mut crate::constitutive::MaterialParams, keys: &[ParamKey]) {
    for &key in keys {
        let v = params.get(key).val;
        let moved = match key {
            ParamKey::Poisson => (v + 0.05).min(0.49),
            ParamKey::FrictionAngle => (v + 5.0).min(89.0),
            _ => v * 1.5,
        };
        params.set(key, Scalar::new(moved));
    }
}

pub fn cmd_gradcheck(common: &CommonArgs, fd_step: f64, material: Option<&str>) -> Result<()> {
    let start = Instant::now();
    let (spec, prior) = load_scene_with_seed(common)?;

    // Observations at the scene's own parameters.
    let gt = build_scene(&spec, None, scene_dir(&common.scene).as_deref(), common.threads)?;
    let observed = generate_observations(&gt.state, &gt.config, &gt.camera, &SynthParams::default())?;

    let mut problem = IdentificationProblem::new(
        gt,
        material,
        observed,
        OptimizerSettings::default(),
        SynthParams::default(),
    )?;
    // Evaluation point: the prior entry when given, a fixed offset otherwise.
    match prior.as_ref().and_then(|p| p.get(&problem.target_name)) {
        Some(entry) => {
            let model = entry.to_model(&problem.target_name)?;
            problem.materials[problem.target].params = model.params;
        }
        None => {
            let keys = problem.active_params();
            let params = &mut problem.materials[problem.target].params;
            gradcheck_offset(params, keys);
        }
    }

    let rows = gradient_check(&problem, fd_step, false)?;
    println!(
        "{:<12} {:>16} {:>16} {:>12} {:>10} {:>6}",
        "param", "tangent", "fd", "rel_err", "fd_step", "mask"
    );
    let mut all_ok = true;
    for row in &rows {
        let ok = row.mask_stable && row.rel_err <= 1e-3;
        all_ok &= ok;
        println!(
            "{:<12} {:>16.8e} {:>16.8e} {:>12.3e} {:>10.1e} {:>6}",
            row.param,
            row.tangent,
            row.fd,
            row.rel_err,
            row.fd_step,
            if row.mask_stable { "ok" } else { "moved" }
        );
    }
    eprintln!("gradcheck: {:.2}s", start.elapsed().as_secs_f64());
    if all_ok {
        Ok(())
    } else {
        Err(Error::validation("gradcheck", "tangent/finite-difference mismatch"))
    }
}

/// Shared by bench and tests: absolute error bounds per parameter.
#[derive(Clone, Copy, Debug, serde::Deserialize, Serialize)]
pub struct Bound {
    #[serde(default)]
    pub rel: Option<f64>,
    #[serde(default)]
    pub abs: Option<f64>,
}

impl Bound {
    pub fn validate(&self, context: &str) -> Result<()> {
        match (self.rel, self.abs) {
            (Some(r), None) if r > 0.0 => Ok(()),
            (None, Some(a)) if a > 0.0 => Ok(()),
            _ => Err(Error::validation(
                context,
                "bound needs exactly one of positive `rel` or `abs`",
            )),
        }
    }

    pub fn allowed(&self, truth: f64) -> f64 {
        match (self.rel, self.abs) {
            (Some(r), _) => r * truth.abs(),
            (_, Some(a)) => a,
            _ => f64::NAN,
        }
    }
}

pub type Bounds = BTreeMap<String, Bound>;
