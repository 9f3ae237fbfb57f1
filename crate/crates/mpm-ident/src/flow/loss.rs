//! Flow discrepancy: summed squared endpoint difference over jointly valid
//! pixels across a frame sequence.

use crate::error::{Error, Result};
use crate::math::Scalar;

use super::FlowField;

#[derive(Clone, Copy, Debug, Default)]
pub struct FlowLossStats {
    /// Pixels valid in both fields, summed over the sequence.
    pub valid_count: usize,
    /// True when no pixel was jointly valid anywhere.
    pub degenerate_overlap: bool,
}

/// `Σ_t Σ_px ‖observed − simulated‖²` over pixels valid in both fields.
/// Tangents flow from the simulated side; observed fields are constants.
pub fn flow_loss(
    observed: &[FlowField],
    simulated: &[FlowField],
) -> Result<(Scalar, FlowLossStats)> {
    if observed.len() != simulated.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} observed fields vs {} simulated",
            observed.len(),
            simulated.len()
        )));
    }
    let mut loss = Scalar::zero();
    let mut stats = FlowLossStats::default();
    for (t, (obs, sim)) in observed.iter().zip(simulated).enumerate() {
        if obs.width != sim.width || obs.height != sim.height {
            return Err(Error::DimensionMismatch(format!(
                "frame {t}: observed {}x{} vs simulated {}x{}",
                obs.width, obs.height, sim.width, sim.height
            )));
        }
        for idx in 0..obs.width * obs.height {
            if obs.valid[idx] && sim.valid[idx] {
                let du = obs.u[idx] - sim.u[idx];
                let dv = obs.v[idx] - sim.v[idx];
                loss += du * du + dv * dv;
                stats.valid_count += 1;
            }
        }
    }
    if stats.valid_count == 0 {
        stats.degenerate_overlap = true;
        log::warn!("flow loss over empty joint validity mask");
    }
    Ok((loss, stats))
}
