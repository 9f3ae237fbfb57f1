//! System identification: the material-prior table, parameter transforms,
//! the simulate → synthesize → compare evaluation, and the optimization loop.

mod optimize;
pub mod prior;
pub mod transform;

pub use optimize::{optimize, Adam, IdentificationReport, StopReason};
pub use prior::{load_prior, save_prior, MaterialEntry, MaterialPrior};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::constitutive::{MaterialModel, MaterialParams, ParamKey};
use crate::engine::{SimConfig, Snapshot, SnapshotSink, Stepper};
use crate::error::{Error, Result};
use crate::flow::{flow_loss, synth_flow, Camera, FlowField, SynthParams};
use crate::math::Scalar;
use crate::scene::BuiltScene;

#[derive(Clone, Copy, Debug)]
pub struct OptimizerSettings {
    /// Adam step size in unconstrained space.
    pub step_size: f64,
    pub max_iterations: usize,
    /// Relative loss-change tolerance; five consecutive iterations below it
    /// stop the run.
    pub tolerance: f64,
    /// Consecutive blow-up step halvings before giving up.
    pub max_halvings: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            step_size: 0.05,
            max_iterations: 100,
            tolerance: 1e-5,
            max_halvings: 5,
        }
    }
}

/// Everything an identification run needs: the scene template, the target
/// material, the observations, and the optimizer knobs.
#[derive(Debug)]
pub struct IdentificationProblem {
    pub initial_particles: Vec<crate::engine::Particle>,
    pub materials: Vec<MaterialModel>,
    pub target: usize,
    pub target_name: String,
    pub config: SimConfig,
    pub camera: Camera,
    pub synth: SynthParams,
    pub observed: Vec<FlowField>,
    pub settings: OptimizerSettings,
}

impl IdentificationProblem {
    /// Wire a built scene to its observations. `material` defaults to the
    /// scene's only material; scenes with several require an explicit name.
    pub fn new(
        built: BuiltScene,
        material: Option<&str>,
        observed: Vec<FlowField>,
        settings: OptimizerSettings,
        synth: SynthParams,
    ) -> Result<Self> {
        let expected_pairs = built.config.frames_emitted() - 1;
        if observed.len() != expected_pairs {
            return Err(Error::DimensionMismatch(format!(
                "{} observed flow fields but the run emits {} frame pairs",
                observed.len(),
                expected_pairs
            )));
        }
        let (target_name, target) = match material {
            Some(name) => {
                let idx = *built.material_index.get(name).ok_or_else(|| {
                    Error::validation("material", format!("unknown material `{name}`"))
                })?;
                (name.to_string(), idx)
            }
            None if built.material_index.len() == 1 => {
                let (name, idx) = built.material_index.iter().next().unwrap();
                (name.clone(), *idx)
            }
            None => {
                return Err(Error::validation(
                    "material",
                    "scene has several materials; name the one to identify",
                ))
            }
        };
        let active = built.state.materials[target].kind.active_params();
        if active.is_empty() {
            return Err(Error::validation("material", "target material has no active parameters"));
        }
        Ok(IdentificationProblem {
            initial_particles: built.state.particles,
            materials: built.state.materials,
            target,
            target_name,
            config: built.config,
            camera: built.camera,
            synth,
            observed,
            settings,
        })
    }

    pub fn active_params(&self) -> &'static [ParamKey] {
        self.materials[self.target].kind.active_params()
    }

    /// Physical parameter values from an unconstrained vector, seeded so the
    /// loss tangents come out as gradients with respect to that vector.
    pub fn seeded_params(&self, y: &[f64]) -> MaterialParams {
        let mut params = self.materials[self.target].params;
        for (slot, (&key, &yk)) in self.active_params().iter().zip(y).enumerate() {
            let value = transform::from_unconstrained(key, yk);
            let seed = transform::derivative(key, yk);
            params.set(key, Scalar::seeded(value, slot, seed));
        }
        params
    }

    /// Unconstrained coordinates of a parameter block.
    pub fn to_unconstrained(&self, params: &MaterialParams) -> Vec<f64> {
        self.active_params()
            .iter()
            .map(|&k| transform::to_unconstrained(k, params.get(k).val))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EvalStatus {
    Ok,
    BlowUp(String),
}

/// One pipeline evaluation: loss with tangents, the per-frame validity
/// masks (for mask-stability checks), and a joint-validity count.
pub struct Evaluation {
    pub loss: Scalar,
    pub status: EvalStatus,
    pub masks: Vec<Vec<bool>>,
    pub valid_pixels: usize,
}

/// Accumulates the flow loss frame pair by frame pair, so only the previous
/// snapshot is retained.
struct LossSink<'a> {
    camera: &'a Camera,
    synth: &'a SynthParams,
    observed: &'a [FlowField],
    prev: Option<Snapshot>,
    pair: usize,
    loss: Scalar,
    masks: Vec<Vec<bool>>,
    valid_pixels: usize,
}

impl SnapshotSink for LossSink<'_> {
    fn emit(&mut self, snap: &Snapshot) -> Result<()> {
        if let Some(prev) = &self.prev {
            let sim = synth_flow(prev, snap, self.camera, self.synth)?;
            let obs = std::slice::from_ref(&self.observed[self.pair]);
            let (l, stats) = flow_loss(obs, std::slice::from_ref(&sim))?;
            self.loss += l;
            self.valid_pixels += stats.valid_count;
            self.masks.push(sim.valid);
            self.pair += 1;
        }
        self.prev = Some(snap.clone());
        Ok(())
    }
}

/// Run the full simulate → synthesize → compare pipeline for the parameter
/// block `params` bound to the problem's target material. Simulation
/// blow-ups come back as a status, not an error, so the optimizer can back
/// off; everything else stays a hard error.
pub fn evaluate_params(
    problem: &IdentificationProblem,
    params: MaterialParams,
) -> Result<Evaluation> {
    let mut materials = problem.materials.clone();
    materials[problem.target].params = params;
    let mut state =
        crate::engine::SimState::new(problem.initial_particles.clone(), materials);

    let mut sink = LossSink {
        camera: &problem.camera,
        synth: &problem.synth,
        observed: &problem.observed,
        prev: None,
        pair: 0,
        loss: Scalar::zero(),
        masks: Vec::new(),
        valid_pixels: 0,
    };
    let mut stepper = Stepper::new(problem.config.clone())?;
    match stepper.run(&mut state, &mut sink) {
        Ok(()) => Ok(Evaluation {
            loss: sink.loss,
            status: EvalStatus::Ok,
            masks: sink.masks,
            valid_pixels: sink.valid_pixels,
        }),
        Err(e @ Error::BlowUp { .. }) => Ok(Evaluation {
            loss: Scalar::new(f64::INFINITY),
            status: EvalStatus::BlowUp(e.to_string()),
            masks: sink.masks,
            valid_pixels: sink.valid_pixels,
        }),
        Err(other) => Err(other),
    }
}

/// Evaluate at an unconstrained coordinate vector; tangents are gradients
/// with respect to that vector.
pub fn evaluate(problem: &IdentificationProblem, y: &[f64]) -> Result<Evaluation> {
    if y.len() != problem.active_params().len() {
        return Err(Error::validation(
            "params",
            format!("{} coordinates for {} active parameters", y.len(), problem.active_params().len()),
        ));
    }
    evaluate_params(problem, problem.seeded_params(y))
}

/// Loss guidance selector; only the flow variant exists.
pub fn compare_losses(
    problem: &IdentificationProblem,
    initial: &MaterialParams,
    loss_kind: &str,
) -> Result<IdentificationReport> {
    match loss_kind {
        "flow" => optimize(problem, initial),
        other => Err(Error::LossNotImplemented(other.to_string())),
    }
}

/// One row of a gradient check.
#[derive(Clone, Debug, Serialize)]
pub struct GradCheckRow {
    pub param: String,
    pub tangent: f64,
    pub fd: f64,
    pub rel_err: f64,
    pub fd_step: f64,
    pub mask_stable: bool,
}

/// Compare each active-parameter tangent of the loss against a central
/// finite difference in physical space. The probe step shrinks (up to three
/// times) until the rasterization validity masks at θ±h match the base run,
/// so the comparison never straddles a mask change.
pub fn gradient_check(
    problem: &IdentificationProblem,
    fd_rel: f64,
    verify_optimum: bool,
) -> Result<Vec<GradCheckRow>> {
    if !(fd_rel > 0.0) {
        return Err(Error::Usage(format!("fd step {fd_rel} must be positive")));
    }
    let base_params = problem.materials[problem.target].params;
    let active = problem.active_params();

    // Single tangent evaluation with physical-space seeds.
    let mut seeded = base_params;
    for (slot, &key) in active.iter().enumerate() {
        seeded.set(key, Scalar::seeded(base_params.get(key).val, slot, 1.0));
    }
    let base = evaluate_params(problem, seeded)?;
    if let EvalStatus::BlowUp(msg) = &base.status {
        return Err(Error::BadInitialization(msg.clone()));
    }

    let mut rows = Vec::new();
    for (slot, &key) in active.iter().enumerate() {
        let theta = base_params.get(key).val;
        let mut h = fd_rel * theta.abs().max(1.0);
        let mut row = None;
        for _attempt in 0..3 {
            let eval_at = |t: f64| -> Result<Evaluation> {
                let mut p = base_params;
                p.set(key, Scalar::new(t));
                evaluate_params(problem, p)
            };
            let plus = eval_at(theta + h)?;
            let minus = eval_at(theta - h)?;
            if plus.status != EvalStatus::Ok || minus.status != EvalStatus::Ok {
                h /= 10.0;
                continue;
            }
            let stable = plus.masks == base.masks && minus.masks == base.masks;
            let fd = (plus.loss.val - minus.loss.val) / (2.0 * h);
            let tangent = base.loss.dot[slot];
            let denom = if verify_optimum { 1.0 } else { fd.abs().max(1e-12) };
            let rel_err = (tangent - fd).abs() / denom;
            row = Some(GradCheckRow {
                param: key.file_key().to_string(),
                tangent,
                fd,
                rel_err,
                fd_step: h,
                mask_stable: stable,
            });
            if stable {
                break;
            }
            h /= 10.0;
        }
        rows.push(row.unwrap_or(GradCheckRow {
            param: key.file_key().to_string(),
            tangent: base.loss.dot[slot],
            fd: f64::NAN,
            rel_err: f64::NAN,
            fd_step: h,
            mask_stable: false,
        }));
    }
    Ok(rows)
}

/// Simulate a scene as-is and synthesize the flow between each emitted
/// frame pair; the self-generated observation path.
pub fn generate_observations(
    state: &crate::engine::SimState,
    config: &SimConfig,
    camera: &Camera,
    synth: &SynthParams,
) -> Result<Vec<FlowField>> {
    struct FlowSink<'a> {
        camera: &'a Camera,
        synth: &'a SynthParams,
        prev: Option<Snapshot>,
        fields: Vec<FlowField>,
    }
    impl SnapshotSink for FlowSink<'_> {
        fn emit(&mut self, snap: &Snapshot) -> Result<()> {
            if let Some(prev) = &self.prev {
                self.fields.push(synth_flow(prev, snap, self.camera, self.synth)?);
            }
            self.prev = Some(snap.clone());
            Ok(())
        }
    }
    let mut sink = FlowSink { camera, synth, prev: None, fields: Vec::new() };
    let mut run_state = state.clone();
    Stepper::new(config.clone())?.run(&mut run_state, &mut sink)?;
    Ok(sink.fields)
}

/// Absolute errors against a truth table, in physical units.
pub fn parameter_deltas(
    estimate: &BTreeMap<String, f64>,
    truth: &MaterialParams,
    active: &[ParamKey],
) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for &key in active {
        if let Some(est) = estimate.get(key.file_key()) {
            out.insert(key.file_key().to_string(), (est - truth.get(key).val).abs());
        }
    }
    out
}

#[cfg(test)]
mod tests;
