//! Virtual experiments: conditional oscillations, parameter landscapes,
//! buffer sweeps, DC-offset sensitivity, history dependence, Ram-Z/Echo-Z,
//! error-model ablation, pulse optimization, and single-qubit phase
//! calibration.
//!
//! Single-qubit gates are ideal qutrit-embedded unitaries acting on the
//! 0-1 subspace and leaving |2> untouched.

mod ablation;
mod buffer;
mod calibrate;
mod cond_osc;
mod history;
mod landscape;
mod optimize;
mod ramz;
mod sensitivity;

pub use ablation::{ablation, TierPoint};
pub use buffer::{buffer_sweep, BufferPoint, BufferSweepResult};
pub use calibrate::{calibrate_single_qubit_phases, CalibratedGate, PhaseCorrections};
pub use cond_osc::{
    conditional_oscillation, conditional_oscillation_of, ConditionalOscillationResult,
};
pub use history::{history_dependence, HistoryResult, HistoryScenario};
pub use landscape::{landscape_scan, LandscapeGrid, LandscapePoint, LandscapeResult, LeakageEstimator};
pub use optimize::{optimize_pulse, OptimizeBounds, OptimizeResult};
pub use ramz::{fit_sigma, ramz_echoz, RamzCurve, RamzPoint, RamzVariant};
pub use sensitivity::{dc_offset_sensitivity, SensitivityResult};

use crate::device::DeviceParams;
use crate::dynamics::{propagate, NoiseModel};
use crate::error::Result;
use crate::linalg::{c, eye, CMat};
use crate::pulse::{build_waveform, PulseSpec};
use crate::superop::{embed_h, embed_m, Superoperator, QUTRIT_DIM};

/// Generation rate used when a waveform feeds the integrator rather than an
/// AWG-rate export: one sample per default integrator step, so the linear
/// interpolant is resolved exactly and gate figures do not depend on playback
/// staircase artifacts.
pub const SIM_SAMPLING_RATE: f64 = 1.0e10;

/// Which transmon a single-qubit gate addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Qubit {
    M,
    H,
}

/// Embed a qutrit operator on one transmon, identity on the other.
pub fn embed_on(qubit: Qubit, op: &CMat) -> CMat {
    match qubit {
        Qubit::M => embed_m(op),
        Qubit::H => embed_h(op),
    }
}

/// Rotation by `angle` about the equatorial axis at azimuth `phi` on the 0-1
/// subspace of a qutrit; |2> is untouched.
pub fn qutrit_rotation(phi: f64, angle: f64) -> CMat {
    let mut u = eye(QUTRIT_DIM);
    let half = 0.5 * angle;
    u[[0, 0]] = c(half.cos(), 0.0);
    u[[1, 1]] = c(half.cos(), 0.0);
    u[[0, 1]] = c(0.0, -half.sin()) * c(phi.cos(), -phi.sin());
    u[[1, 0]] = c(0.0, -half.sin()) * c(phi.cos(), phi.sin());
    u
}

/// Ideal pi/2 pulse about x.
pub fn x90(qubit: Qubit) -> CMat {
    embed_on(qubit, &qutrit_rotation(0.0, std::f64::consts::FRAC_PI_2))
}

/// Ideal pi pulse about x.
pub fn pi_pulse(qubit: Qubit) -> CMat {
    embed_on(qubit, &qutrit_rotation(0.0, std::f64::consts::PI))
}

/// Recovery pi/2 pulse about the equatorial axis at azimuth `phi`.
pub fn recovery(qubit: Qubit, phi: f64) -> CMat {
    embed_on(qubit, &qutrit_rotation(phi, std::f64::consts::FRAC_PI_2))
}

/// Build the pulse and propagate it (plus the trailing idle window) under the
/// noise model.
pub fn gate_propagator(
    params: &DeviceParams,
    spec: &PulseSpec,
    noise: &NoiseModel,
) -> Result<Superoperator> {
    let wf = build_waveform(spec, params)?;
    propagate(params, &wf, noise, spec.t_1q)
}
