//! History dependence: the single-qubit phase picked up by a flux pulse as a
//! function of the separation from an earlier pulse, under a settling kernel.
//!
//! The two-pulse sequence is built as one long timeline and convolved once
//! with the kernel; the second pulse's phase is read from the propagator of
//! the timeline tail, which carries the first pulse's settling transient.

use rayon::prelude::*;

use crate::device::DeviceParams;
use crate::distortion::{convolve_about, inverse_filter, ImpulseResponse};
use crate::dynamics::{propagate_timeline, NoiseModel};
use crate::error::{Error, Result};
use crate::metrics::acquired_phase;
use crate::pulse::{build_waveform, PulseShape, PulseSpec, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryScenario {
    UncorrectedUnipolar,
    PredistortedUnipolar,
    PredistortedNz,
}

impl HistoryScenario {
    fn shape(self) -> PulseShape {
        match self {
            HistoryScenario::UncorrectedUnipolar | HistoryScenario::PredistortedUnipolar => {
                PulseShape::Unipolar
            }
            HistoryScenario::PredistortedNz => PulseShape::NetZero,
        }
    }

    fn predistorted(self) -> bool {
        !matches!(self, HistoryScenario::UncorrectedUnipolar)
    }
}

#[derive(Debug, Clone)]
pub struct HistoryResult {
    pub scenario: HistoryScenario,
    /// (separation time, second-pulse phi_01) pairs (s, rad).
    pub points: Vec<(f64, f64)>,
    /// Max minus min of the phase across the separation scan (rad).
    pub spread: f64,
}

const INVERSE_FILTER_REGULARIZATION: f64 = 1e-4;
const INVERSE_FILTER_TAPS: usize = 4096;

/// Scan the pulse-pair separation. `line_kernel` is the settling response the
/// waveform passes through; predistorted scenarios first run the timeline
/// through the approximate inverse of `predistortion_reference` (the line
/// kernel itself when `None`).
pub fn history_dependence(
    params: &DeviceParams,
    spec: &PulseSpec,
    t_seps: &[f64],
    line_kernel: &ImpulseResponse,
    predistortion_reference: Option<&ImpulseResponse>,
    scenario: HistoryScenario,
    noise: &NoiseModel,
) -> Result<HistoryResult> {
    if t_seps.is_empty() {
        return Err(Error::Domain("empty separation range".into()));
    }
    let mut spec = *spec;
    spec.shape = scenario.shape();
    let wf = build_waveform(&spec, params)?;
    let park = params.operating_flux()?;
    let kernel = line_kernel.resampled(wf.dt)?;
    let inverse = if scenario.predistorted() {
        let reference = match predistortion_reference {
            Some(k) => k.resampled(wf.dt)?,
            None => kernel.clone(),
        };
        Some(inverse_filter(&reference, INVERSE_FILTER_REGULARIZATION, INVERSE_FILTER_TAPS)?.kernel)
    } else {
        None
    };
    let mut noise = noise.clone();
    noise.distortions = false;

    let points: Result<Vec<(f64, f64)>> = t_seps
        .par_iter()
        .map(|&t_sep| {
            if t_sep < 0.0 {
                return Err(Error::Domain("separation must be non-negative".into()));
            }
            let gap = Waveform::constant(park, t_sep, wf.dt);
            let total = wf.concat(&gap)?.concat(&wf)?;
            let prefix_len = wf.len() + gap.len();
            let shaped = match &inverse {
                Some(inv) => convolve_about(&total, inv, park)?,
                None => total,
            };
            let seen = convolve_about(&shaped, &kernel, park)?;
            let second = Waveform {
                samples: seen.samples[prefix_len..].to_vec(),
                dt: seen.dt,
                t0: 0.0,
            };
            let p = propagate_timeline(params, &second, None, &noise)?;
            Ok((t_sep, acquired_phase(&p, 0, 1)?))
        })
        .collect();
    let points = points?;
    let spread = phase_spread(&points);
    Ok(HistoryResult {
        scenario,
        points,
        spread,
    })
}

fn phase_spread(points: &[(f64, f64)]) -> f64 {
    // phases along the scan stay well within a wrap for sane kernels; unwrap
    // against the first point to be safe
    let reference = points[0].1;
    let mut lo = 0.0_f64;
    let mut hi = 0.0_f64;
    for &(_, phi) in points {
        let d = crate::units::wrap_angle(phi - reference);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    hi - lo
}
