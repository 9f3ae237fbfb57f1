//! The self-recovery benchmark harness: generate ground-truth observations,
//! perturb the prior, identify, and judge the recovered parameters against
//! per-parameter bounds.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constitutive::ParamKey;
use crate::error::{Error, Result};
use crate::flow::SynthParams;
use crate::identify::{
    generate_observations, optimize, parameter_deltas, IdentificationProblem, OptimizerSettings,
};
use crate::math::Scalar;
use crate::scene::{build_scene, SceneSpec};

use super::Bounds;

/// Multiplicative/additive offsets turning the truth into the starting prior.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PerturbRule {
    /// Factor applied to log-space parameters (E, τ_Y, η, μ, κ).
    #[serde(default = "default_log_factor")]
    pub log_factor: f64,
    /// Added to Poisson's ratio.
    #[serde(default = "default_nu_delta")]
    pub nu_delta: f64,
    /// Added to the friction angle, in degrees.
    #[serde(default = "default_theta_delta")]
    pub theta_delta: f64,
}

fn default_log_factor() -> f64 {
    3.0
}
fn default_nu_delta() -> f64 {
    0.1
}
fn default_theta_delta() -> f64 {
    15.0
}

impl Default for PerturbRule {
    fn default() -> Self {
        PerturbRule {
            log_factor: default_log_factor(),
            nu_delta: default_nu_delta(),
            theta_delta: default_theta_delta(),
        }
    }
}

impl PerturbRule {
    pub fn apply(
        &self,
        params: &crate::constitutive::MaterialParams,
        keys: &[ParamKey],
    ) -> crate::constitutive::MaterialParams {
        let mut out = *params;
        for &key in keys {
            let v = params.get(key).val;
            let moved = match key {
                ParamKey::Poisson => (v + self.nu_delta).min(0.499),
                ParamKey::FrictionAngle => (v + self.theta_delta).min(89.0),
                _ => v * self.log_factor,
            };
            out.set(key, Scalar::new(moved));
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchCase {
    pub name: String,
    /// Scene path, relative to the suite file.
    pub scene: String,
    /// Material to identify; defaults to the scene's only material.
    #[serde(default)]
    pub material: Option<String>,
    /// Truth table override; the scene's own materials otherwise.
    #[serde(default)]
    pub truth: Option<String>,
    #[serde(default)]
    pub perturb: PerturbRule,
    pub bounds: Bounds,
    /// The parameter this case is most sensitive to.
    pub dominant: String,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
}

fn default_iters() -> usize {
    100
}
fn default_step_size() -> f64 {
    0.05
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchSuite {
    pub cases: Vec<BenchCase>,
}

impl BenchSuite {
    pub fn load(path: &Path) -> Result<BenchSuite> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let suite: BenchSuite = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        for case in &suite.cases {
            for (key, bound) in &case.bounds {
                if ParamKey::from_file_key(key).is_none() {
                    return Err(Error::validation(
                        format!("{}.bounds.{key}", case.name),
                        "unknown parameter",
                    ));
                }
                bound.validate(&format!("{}.bounds.{key}", case.name))?;
            }
            if ParamKey::from_file_key(&case.dominant).is_none() {
                return Err(Error::validation(
                    format!("{}.dominant", case.name),
                    "unknown parameter",
                ));
            }
        }
        Ok(suite)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamOutcome {
    pub truth: f64,
    pub estimate: f64,
    pub delta: f64,
    pub allowed: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub pass: bool,
    pub iterations: usize,
    pub best_loss: f64,
    pub params: std::collections::BTreeMap<String, ParamOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

#[derive(Serialize)]
pub struct BenchSummary {
    pub cases: Vec<CaseResult>,
    pub passed: usize,
    pub failed: usize,
}

/// Run one case end to end. Truth comes from the scene (or the override
/// table); observations are self-generated at the truth.
pub fn run_case(case: &BenchCase, suite_dir: &Path, threads: usize) -> Result<CaseResult> {
    let start = Instant::now();
    let scene_path = suite_dir.join(&case.scene);
    let spec = SceneSpec::load(&scene_path)?;

    let truth_prior = match &case.truth {
        Some(rel) => Some(crate::identify::load_prior(&suite_dir.join(rel))?),
        None => None,
    };
    let built = build_scene(&spec, truth_prior.as_ref(), Some(suite_dir), threads)?;
    let observed =
        generate_observations(&built.state, &built.config, &built.camera, &SynthParams::default())?;

    let settings = OptimizerSettings {
        step_size: case.step_size,
        max_iterations: case.iters,
        ..OptimizerSettings::default()
    };
    let problem = IdentificationProblem::new(
        built,
        case.material.as_deref(),
        observed,
        settings,
        SynthParams::default(),
    )?;
    let truth = problem.materials[problem.target].params;
    let active = problem.active_params();
    let start_params = case.perturb.apply(&truth, active);

    let report = optimize(&problem, &start_params)?;
    let deltas = parameter_deltas(&report.params, &truth, active);

    let mut params = std::collections::BTreeMap::new();
    let mut pass = true;
    for &key in active {
        let name = key.file_key().to_string();
        let truth_v = truth.get(key).val;
        let delta = deltas.get(&name).copied().unwrap_or(f64::NAN);
        let allowed = case
            .bounds
            .get(&name)
            .map(|b| b.allowed(truth_v))
            .unwrap_or(f64::INFINITY);
        let ok = delta <= allowed;
        pass &= ok;
        params.insert(
            name,
            ParamOutcome {
                truth: truth_v,
                estimate: report.params.get(key.file_key()).copied().unwrap_or(f64::NAN),
                delta,
                allowed,
                pass: ok,
            },
        );
    }

    Ok(CaseResult {
        name: case.name.clone(),
        pass,
        iterations: report.iterations,
        best_loss: report.best_loss,
        params,
        error: None,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Run the whole suite; a crashing case becomes a FAIL row and the suite
/// continues. Exit is nonzero when any case fails.
pub fn cmd_bench(suite_path: &Path, out: &Path, threads: usize) -> Result<()> {
    super::require_file(suite_path)?;
    let summary = run_suite_file(suite_path, out, threads)?;

    let json_path = out.join("bench_summary.json");
    fs::write(
        &json_path,
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )
    .map_err(|e| Error::io(&json_path, e))?;

    println!("{}", render_table(&summary));
    println!("passed {} / {}", summary.passed, summary.cases.len());

    if summary.failed == 0 {
        Ok(())
    } else {
        Err(Error::validation(
            "bench",
            format!("{} case(s) outside their bounds", summary.failed),
        ))
    }
}

fn render_table(summary: &BenchSummary) -> String {
    let mut rows: Vec<(String, String, String)> = Vec::new();
    for case in &summary.cases {
        let details = match &case.error {
            Some(e) => format!("error: {e}"),
            None => case
                .params
                .iter()
                .map(|(k, p)| {
                    format!(
                        "Δ_{k}={:.3e}{}(≤{:.3e})",
                        p.delta,
                        if p.pass { " " } else { "! " },
                        p.allowed
                    )
                })
                .collect::<Vec<_>>()
                .join(", "),
        };
        rows.push((
            case.name.clone(),
            if case.pass { "PASS".into() } else { "FAIL".into() },
            details,
        ));
    }
    let name_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(4).max(4);
    let mut out = format!("{:<name_w$}  {:<6}  details\n", "case", "result");
    for (name, result, details) in rows {
        out.push_str(&format!("{name:<name_w$}  {result:<6}  {details}\n"));
    }
    out
}

/// Load and run a suite. Cases run concurrently (each one is internally
/// still the deterministic reference pipeline) with results kept in suite
/// order; a crashing case becomes its FAIL row.
pub fn run_suite_file(suite_path: &Path, out: &Path, threads: usize) -> Result<BenchSummary> {
    use rayon::prelude::*;
    let suite = BenchSuite::load(suite_path)?;
    let suite_dir = suite_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let results: Vec<CaseResult> = suite
        .cases
        .par_iter()
        .map(|case| {
            eprintln!("bench: running {}", case.name);
            let result = match run_case(case, &suite_dir, threads) {
                Ok(r) => r,
                Err(e) => CaseResult {
                    name: case.name.clone(),
                    pass: false,
                    iterations: 0,
                    best_loss: f64::NAN,
                    params: Default::default(),
                    error: Some(e.to_string()),
                    wall_seconds: 0.0,
                },
            };
            eprintln!(
                "bench: {} {} ({:.1}s)",
                result.name,
                if result.pass { "PASS" } else { "FAIL" },
                result.wall_seconds
            );
            result
        })
        .collect();
    let passed = results.iter().filter(|r| r.pass).count();
    let failed = results.len() - passed;
    Ok(BenchSummary { cases: results, passed, failed })
}
