//! Adam-driven minimization of the flow loss in unconstrained space.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::constitutive::MaterialParams;
use crate::error::{Error, Result};

use super::{evaluate, transform, EvalStatus, IdentificationProblem};

/// First-order moment estimation with bias correction.
pub struct Adam {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: usize,
}

impl Adam {
    pub fn new(step_size: f64, dim: usize) -> Self {
        Adam {
            step_size,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    /// Absorb a gradient; the proposed step is `current - direction`.
    pub fn direction(&mut self, grad: &[f64]) -> Vec<f64> {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        grad.iter()
            .enumerate()
            .map(|(i, &g)| {
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = self.m[i] / bc1;
                let v_hat = self.v[i] / bc2;
                self.step_size * m_hat / (v_hat.sqrt() + self.epsilon)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ZeroLoss,
    Converged,
    IterationBudget,
    BlowUpLimit,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentificationReport {
    pub material: String,
    /// Every successfully evaluated loss, in order.
    pub loss_trace: Vec<f64>,
    pub best_loss: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Best-so-far physical parameters.
    pub params: BTreeMap<String, f64>,
    /// |estimate − truth| per parameter, present when a truth is supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<BTreeMap<String, f64>>,
    /// Jointly valid pixels of the final evaluation, as a diagnostic.
    pub valid_pixels: usize,
    /// Not serialized: wall time is reported on stderr to keep the report
    /// file deterministic across reruns.
    #[serde(skip)]
    pub wall_seconds: f64,
}

fn physical(problem: &IdentificationProblem, y: &[f64]) -> BTreeMap<String, f64> {
    problem
        .active_params()
        .iter()
        .zip(y)
        .map(|(&k, &yk)| (k.file_key().to_string(), transform::from_unconstrained(k, yk)))
        .collect()
}

/// Minimize the flow loss starting from `initial`. Blow-ups halve the step
/// and retry from the last good iterate; the report carries the best
/// parameters seen, by loss.
pub fn optimize(
    problem: &IdentificationProblem,
    initial: &MaterialParams,
) -> Result<IdentificationReport> {
    let start = Instant::now();
    let settings = problem.settings;
    let n = problem.active_params().len();

    let mut y = problem.to_unconstrained(initial);
    let first = evaluate(problem, &y)?;
    if let EvalStatus::BlowUp(msg) = &first.status {
        return Err(Error::BadInitialization(msg.clone()));
    }

    let mut trace = vec![first.loss.val];
    let mut best_loss = first.loss.val;
    let mut best_y = y.clone();
    let mut grad = first.loss.dot[..n].to_vec();
    let mut valid_pixels = first.valid_pixels;

    let mut adam = Adam::new(settings.step_size, n);
    let mut consecutive_small = 0usize;
    let mut stop = StopReason::IterationBudget;
    let mut iterations = 0usize;

    if best_loss <= 1e-12 {
        stop = StopReason::ZeroLoss;
    } else {
        'outer: for iter in 1..=settings.max_iterations {
            iterations = iter;
            let direction = adam.direction(&grad);
            let mut halvings = 0usize;
            let mut scale = 1.0f64;
            let evaluation = loop {
                let candidate: Vec<f64> =
                    y.iter().zip(&direction).map(|(yi, d)| yi - scale * d).collect();
                let eval = evaluate(problem, &candidate)?;
                match eval.status {
                    EvalStatus::Ok => {
                        y = candidate;
                        break eval;
                    }
                    EvalStatus::BlowUp(ref msg) => {
                        halvings += 1;
                        if halvings > settings.max_halvings {
                            log::warn!(
                                "stopping after {halvings} step halvings; last blow-up: {msg}"
                            );
                            stop = StopReason::BlowUpLimit;
                            break 'outer;
                        }
                        scale *= 0.5;
                        // The back-off persists across iterations.
                        adam.step_size *= 0.5;
                    }
                }
            };

            // Transforms keep iterates physical by construction; hold them
            // to it every iteration.
            problem
                .seeded_params(&y)
                .validate(problem.materials[problem.target].kind, "optimizer iterate")?;

            let prev_loss = *trace.last().unwrap();
            let loss = evaluation.loss.val;
            trace.push(loss);
            grad.copy_from_slice(&evaluation.loss.dot[..n]);
            valid_pixels = evaluation.valid_pixels;
            if loss < best_loss {
                best_loss = loss;
                best_y = y.clone();
            }
            if loss <= 1e-12 {
                stop = StopReason::ZeroLoss;
                break;
            }
            if (loss - prev_loss).abs() < settings.tolerance * loss.max(1e-300) {
                consecutive_small += 1;
                if consecutive_small >= 5 {
                    stop = StopReason::Converged;
                    break;
                }
            } else {
                consecutive_small = 0;
            }
        }
    }

    Ok(IdentificationReport {
        material: problem.target_name.clone(),
        loss_trace: trace,
        best_loss,
        iterations,
        stop_reason: stop,
        params: physical(problem, &best_y),
        deltas: None,
        valid_pixels,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
