//! Buffer sweep: insert an idle segment at zero flux between the two halves
//! of the bipolar pulse and watch the leakage interference fringe.

use rayon::prelude::*;

use crate::device::DeviceParams;
use crate::dynamics::{propagate, NoiseModel};
use crate::error::{Error, Result};
use crate::fit::linear_least_squares;
use crate::metrics::{conditional_phase, leakage_l1};
use crate::pulse::{build_waveform, PulseShape, PulseSpec, Waveform};

#[derive(Debug, Clone, Copy)]
pub struct BufferPoint {
    pub buffer: f64,
    pub l1: f64,
    pub phi_2q: f64,
}

#[derive(Debug, Clone)]
pub struct BufferSweepResult {
    pub points: Vec<BufferPoint>,
    /// Interpolated positions of the leakage minima (s).
    pub minima: Vec<f64>,
    /// Mean fringe spacing from a linear fit of minima positions, if at least
    /// two minima were found.
    pub fitted_period: Option<f64>,
}

/// The bipolar waveform with `buffer` seconds of zero flux spliced between
/// the halves.
pub fn buffered_waveform(
    params: &DeviceParams,
    spec: &PulseSpec,
    buffer: f64,
) -> Result<Waveform> {
    if buffer < 0.0 {
        return Err(Error::Domain("buffer must be non-negative".into()));
    }
    if spec.shape != PulseShape::NetZero {
        return Err(Error::Domain(
            "buffers are spliced into bipolar pulses only".into(),
        ));
    }
    let wf = build_waveform(spec, params)?;
    let half = wf.len() / 2;
    let n_buf = (buffer / wf.dt).round() as usize;
    let mut samples = Vec::with_capacity(wf.len() + n_buf);
    samples.extend_from_slice(&wf.samples[..half]);
    samples.extend(std::iter::repeat_n(0.0, n_buf));
    samples.extend_from_slice(&wf.samples[half..]);
    Ok(Waveform {
        samples,
        dt: wf.dt,
        t0: 0.0,
    })
}

/// Sweep the inter-half buffer and locate the leakage minima.
pub fn buffer_sweep(
    params: &DeviceParams,
    spec: &PulseSpec,
    buffers: &[f64],
    noise: &NoiseModel,
) -> Result<BufferSweepResult> {
    if buffers.is_empty() {
        return Err(Error::Domain("empty buffer range".into()));
    }
    let points: Result<Vec<BufferPoint>> = buffers
        .par_iter()
        .map(|&buffer| {
            let wf = buffered_waveform(params, spec, buffer)?;
            let p = propagate(params, &wf, noise, 0.0)?;
            Ok(BufferPoint {
                buffer,
                l1: leakage_l1(&p),
                phi_2q: conditional_phase(&p).unwrap_or(f64::NAN),
            })
        })
        .collect();
    let points = points?;

    let mut minima = Vec::new();
    for k in 1..points.len().saturating_sub(1) {
        let (a, b, c) = (points[k - 1].l1, points[k].l1, points[k + 1].l1);
        if b <= a && b < c {
            // quadratic refinement through the three samples
            let denom = a - 2.0 * b + c;
            let shift = if denom.abs() > 1e-30 {
                0.5 * (a - c) / denom
            } else {
                0.0
            };
            let dt = points[k + 1].buffer - points[k].buffer;
            minima.push(points[k].buffer + shift.clamp(-1.0, 1.0) * dt);
        }
    }
    let fitted_period = if minima.len() >= 2 {
        let design: Vec<Vec<f64>> = (0..minima.len()).map(|i| vec![1.0, i as f64]).collect();
        linear_least_squares(&design, &minima).ok().map(|beta| beta[1])
    } else {
        None
    };
    Ok(BufferSweepResult {
        points,
        minima,
        fitted_period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Tier;
    use crate::units::deg_to_rad;

    fn fast_spec() -> PulseSpec {
        let mut spec = PulseSpec::new(deg_to_rad(90.0), 0.1, 28e-9, 0.0, PulseShape::NetZero);
        spec.sampling_rate = 16e9;
        spec
    }

    #[test]
    fn zero_buffer_reproduces_base_pulse() {
        let params = DeviceParams::reference();
        let spec = fast_spec();
        let base = build_waveform(&spec, &params).unwrap();
        let buffered = buffered_waveform(&params, &spec, 0.0).unwrap();
        assert_eq!(base.len(), buffered.len());
        for (a, b) in base.samples.iter().zip(&buffered.samples) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn buffer_extends_duration() {
        let params = DeviceParams::reference();
        let spec = fast_spec();
        let buffered = buffered_waveform(&params, &spec, 2e-9).unwrap();
        let base = build_waveform(&spec, &params).unwrap();
        let added = buffered.duration() - base.duration();
        assert!((added - 2e-9).abs() < buffered.dt);
        // the spliced segment sits at zero flux
        let half = base.len() / 2;
        assert_eq!(buffered.samples[half], 0.0);
    }

    #[test]
    fn unipolar_pulse_rejects_buffers() {
        let params = DeviceParams::reference();
        let mut spec = fast_spec();
        spec.shape = PulseShape::Unipolar;
        assert!(buffered_waveform(&params, &spec, 1e-9).is_err());
    }

    #[test]
    fn fringe_period_tracks_sweetspot_detuning() {
        let params = DeviceParams::reference();
        let spec = fast_spec();
        let noise = NoiseModel::tier(Tier::A).with_time_step(2.5e-10);
        let buffers: Vec<f64> = (0..48).map(|k| k as f64 * 6.25e-11).collect();
        let sweep = buffer_sweep(&params, &spec, &buffers, &noise).unwrap();
        assert!(sweep.minima.len() >= 2, "minima: {:?}", sweep.minima);
        let period = sweep.fitted_period.expect("period fits");
        let expected = crate::interferometer::fringe_period_at_sweetspot(&params).unwrap();
        assert!(
            (period - expected).abs() / expected < 0.1,
            "period {period:.3e} vs 2 pi / eps {expected:.3e}"
        );
    }
}
