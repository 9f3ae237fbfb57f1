//! Bijections between physical parameter space and the unconstrained space
//! the optimizer works in.
//!
//! Moduli and viscosities span several orders of magnitude, so they live in
//! log space. Poisson's ratio maps onto (0, 0.5) and the friction angle onto
//! (0°, 90°) through scaled sigmoids, which keeps every iterate physically
//! admissible by construction.

use crate::constitutive::ParamKey;

/// Upper bound of the sigmoid-mapped range for a key, if it uses one.
fn sigmoid_span(key: ParamKey) -> Option<f64> {
    match key {
        ParamKey::Poisson => Some(0.5),
        ParamKey::FrictionAngle => Some(90.0),
        _ => None,
    }
}

/// Logistic function, kept strictly inside (0, 1) so mapped parameters can
/// never touch their open-interval bounds, however extreme the coordinate.
fn sigmoid(y: f64) -> f64 {
    (1.0 / (1.0 + (-y).exp())).clamp(1e-12, 1.0 - 1e-12)
}

/// Physical value from its unconstrained coordinate.
pub fn from_unconstrained(key: ParamKey, y: f64) -> f64 {
    match sigmoid_span(key) {
        Some(span) => span * sigmoid(y),
        None => y.exp(),
    }
}

/// Unconstrained coordinate of a physical value. Saturates gracefully at the
/// open interval's ends instead of returning infinities.
pub fn to_unconstrained(key: ParamKey, x: f64) -> f64 {
    match sigmoid_span(key) {
        Some(span) => {
            let s = (x / span).clamp(1e-12, 1.0 - 1e-12);
            (s / (1.0 - s)).ln()
        }
        None => x.ln(),
    }
}

/// d(physical)/d(unconstrained) at coordinate `y`; the tangent seed.
pub fn derivative(key: ParamKey, y: f64) -> f64 {
    match sigmoid_span(key) {
        Some(span) => {
            let s = sigmoid(y);
            span * s * (1.0 - s)
        }
        None => y.exp(),
    }
}
