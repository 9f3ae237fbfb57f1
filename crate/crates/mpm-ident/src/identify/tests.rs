use super::*;
use crate::constitutive::MaterialType;
use crate::engine::{BoundaryCondition, BoundaryKind, GridSpec};
use crate::flow::Camera;
use crate::scene::{build_scene, BodySpec, SceneSpec, ShapeSpec};
use std::collections::BTreeMap;

/// A tiny elastic-drop scene: fast enough for unit tests, enough motion to
/// carry a parameter signal.
fn tiny_scene() -> SceneSpec {
    let entry: MaterialEntry = serde_json::from_str(
        r#"{ "type": "elastic", "density": 1000.0, "params": { "E": 1e5, "nu": 0.3 } }"#,
    )
    .unwrap();
    let mut materials = BTreeMap::new();
    materials.insert("block".to_string(), entry);
    SceneSpec {
        grid: GridSpec { resolution: [16, 16, 16], dx: 1.0 / 15.0, origin: [0.0; 3] },
        dt: 4e-4,
        n_steps: 60,
        output_stride: 10,
        gravity: [0.0, -9.8, 0.0],
        seed: 42,
        camera: Camera {
            position: [0.5, 0.45, 2.0],
            forward: [0.0, 0.0, -1.0],
            up: [0.0, 1.0, 0.0],
            focal_px: 60.0,
            image: (48, 48),
        },
        materials,
        bodies: vec![BodySpec {
            shape: ShapeSpec::Box { min: [0.38, 0.35, 0.38], max: [0.62, 0.55, 0.62] },
            material: "block".to_string(),
            ppc: 4,
            velocity: [0.0, -2.0, 0.0],
        }],
        forces: vec![],
        // Floor close enough that the block impacts within the run; contact
        // deformation is what carries the stiffness signal.
        boundaries: vec![BoundaryCondition {
            kind: BoundaryKind::SlipPlane,
            point: [0.5, 0.32, 0.5],
            normal: [0.0, 1.0, 0.0],
            margin_cells: 0,
            friction: 0.3,
            sticky: false,
        }],
    }
}

fn tiny_problem(settings: OptimizerSettings) -> IdentificationProblem {
    let spec = tiny_scene();
    let built = build_scene(&spec, None, None, 0).unwrap();
    let observed = generate_observations(
        &built.state,
        &built.config,
        &built.camera,
        &SynthParams::default(),
    )
    .unwrap();
    IdentificationProblem::new(built, None, observed, settings, SynthParams::default()).unwrap()
}

#[test]
fn loss_vanishes_at_the_generating_parameters() {
    let problem = tiny_problem(OptimizerSettings::default());
    let truth = problem.materials[problem.target].params;
    let y = problem.to_unconstrained(&truth);
    let eval = evaluate(&problem, &y).unwrap();
    assert_eq!(eval.status, EvalStatus::Ok);
    // The unconstrained round-trip perturbs parameters by an ulp, so the
    // loss is tiny rather than exactly zero.
    assert!(eval.loss.val <= 1e-9, "self-consistency loss {}", eval.loss.val);
    for slot in 0..problem.active_params().len() {
        assert!(
            eval.loss.dot[slot].abs() <= 1e-9,
            "gradient at optimum: {}",
            eval.loss.dot[slot]
        );
    }
    assert!(eval.valid_pixels > 0);
}

#[test]
fn absurd_stiffness_reports_blow_up_status() {
    let problem = tiny_problem(OptimizerSettings::default());
    let mut params = problem.materials[problem.target].params;
    params.set(crate::constitutive::ParamKey::Young, crate::math::Scalar::new(1e11));
    let eval = evaluate_params(&problem, params).unwrap();
    assert!(matches!(eval.status, EvalStatus::BlowUp(_)));
}

#[test]
fn coordinate_count_must_match_active_mask() {
    let problem = tiny_problem(OptimizerSettings::default());
    assert!(evaluate(&problem, &[]).is_err());
    assert!(evaluate(&problem, &[0.0, 0.0, 0.0]).is_err());
}

#[test]
fn optimizing_from_the_truth_stops_immediately() {
    let problem = tiny_problem(OptimizerSettings::default());
    let truth = problem.materials[problem.target].params;
    let report = optimize(&problem, &truth).unwrap();
    assert_eq!(report.stop_reason, StopReason::ZeroLoss);
    assert_eq!(report.iterations, 0);
    assert!(report.best_loss <= 1e-9);
}

#[test]
fn short_run_improves_a_perturbed_prior() {
    let mut settings = OptimizerSettings::default();
    settings.max_iterations = 12;
    settings.step_size = 0.15;
    let problem = tiny_problem(settings);
    let mut start = problem.materials[problem.target].params;
    start.set(crate::constitutive::ParamKey::Young, crate::math::Scalar::new(3e5));
    let report = optimize(&problem, &start).unwrap();
    assert!(report.loss_trace.len() >= 2);
    assert!(
        report.best_loss < report.loss_trace[0],
        "best {} must improve on start {}",
        report.best_loss,
        report.loss_trace[0]
    );
    // Best-so-far is the minimum of the trace by construction.
    let min = report.loss_trace.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(report.best_loss, min);
    // Every reported parameter satisfies its physical constraint.
    let nu = report.params["nu"];
    assert!(nu > 0.0 && nu < 0.5);
    assert!(report.params["E"] > 0.0);
}

#[test]
fn unsupported_loss_kinds_are_named_errors() {
    let problem = tiny_problem(OptimizerSettings::default());
    let start = problem.materials[problem.target].params;
    for kind in ["sds", "render"] {
        let err = compare_losses(&problem, &start, kind).unwrap_err();
        assert!(matches!(err, Error::LossNotImplemented(_)), "{kind}: {err}");
        assert!(err.to_string().contains(kind));
    }
    assert!(compare_losses(&problem, &start, "flow").is_ok());
}

#[test]
fn gradient_check_passes_on_the_tiny_scene() {
    let mut problem = tiny_problem(OptimizerSettings::default());
    // Evaluate away from the generating parameters so residuals (and the
    // gradient) are nonzero.
    let p = &mut problem.materials[problem.target].params;
    p.young = crate::math::Scalar::new(p.young.val * 1.6);
    p.poisson = crate::math::Scalar::new(p.poisson.val + 0.05);
    let rows = gradient_check(&problem, 1e-4, false).unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row.mask_stable, "{}: unstable mask at step {}", row.param, row.fd_step);
        assert!(
            row.rel_err <= 1e-3,
            "{}: tangent {} vs fd {} (rel {})",
            row.param,
            row.tangent,
            row.fd,
            row.rel_err
        );
    }
}

#[test]
fn gradient_check_rejects_zero_step() {
    let problem = tiny_problem(OptimizerSettings::default());
    assert!(matches!(gradient_check(&problem, 0.0, false), Err(Error::Usage(_))));
}

#[test]
fn observation_count_mismatch_is_rejected() {
    let spec = tiny_scene();
    let built = build_scene(&spec, None, None, 0).unwrap();
    let err = IdentificationProblem::new(
        built,
        None,
        vec![],
        OptimizerSettings::default(),
        SynthParams::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch(_)));
}

#[test]
fn deltas_are_absolute_errors() {
    let mut estimate = BTreeMap::new();
    estimate.insert("E".to_string(), 1.2e5);
    estimate.insert("nu".to_string(), 0.28);
    let truth = {
        let entry: MaterialEntry = serde_json::from_str(
            r#"{ "type": "elastic", "density": 1000.0, "params": { "E": 1e5, "nu": 0.3 } }"#,
        )
        .unwrap();
        entry.to_model("t").unwrap().params
    };
    let deltas = parameter_deltas(
        &estimate,
        &truth,
        MaterialType::Elastic.active_params(),
    );
    assert!((deltas["E"] - 2e4).abs() < 1e-9);
    assert!((deltas["nu"] - 0.02).abs() < 1e-12);
}
