//! Conditional phase versus a static flux offset on q_H, with a quadratic
//! fit splitting the first- and second-order sensitivities.

use rayon::prelude::*;

use crate::device::DeviceParams;
use crate::dynamics::{propagate_timeline_at_offset, NoiseModel};
use crate::error::{Error, Result};
use crate::metrics::conditional_phase;
use crate::fit::fit_quadratic;
use crate::pulse::{build_waveform, PulseSpec, Waveform};

#[derive(Debug, Clone)]
pub struct SensitivityResult {
    /// (offset in Phi_0, unwrapped conditional phase in rad).
    pub points: Vec<(f64, f64)>,
    pub constant: f64,
    /// rad per Phi_0.
    pub linear: f64,
    /// rad per Phi_0^2.
    pub quadratic: f64,
}

fn check_symmetric(offsets: &[f64]) -> Result<()> {
    for &o in offsets {
        if !offsets.iter().any(|&p| (p + o).abs() < 1e-12) {
            return Err(Error::Domain(format!(
                "offset grid must be symmetric about zero; {o} has no negative partner"
            )));
        }
    }
    Ok(())
}

/// Scan conditional phase against an applied DC flux offset and fit a
/// quadratic.
pub fn dc_offset_sensitivity(
    params: &DeviceParams,
    spec: &PulseSpec,
    offsets: &[f64],
    noise: &NoiseModel,
) -> Result<SensitivityResult> {
    if offsets.len() < 3 {
        return Err(Error::Domain("need at least 3 offsets".into()));
    }
    check_symmetric(offsets)?;
    let mut sorted = offsets.to_vec();
    sorted.sort_by(f64::total_cmp);
    let wf = build_waveform(spec, params)?;
    dc_offset_sensitivity_of(params, &wf, &sorted, noise, spec.t_1q)
}

/// Same scan over an explicit q_H waveform.
pub fn dc_offset_sensitivity_of(
    params: &DeviceParams,
    wf: &Waveform,
    sorted_offsets: &[f64],
    noise: &NoiseModel,
    t_1q: f64,
) -> Result<SensitivityResult> {
    let park = params.operating_flux()?;
    let idle = Waveform::constant(park, t_1q, wf.dt);
    let timeline = wf.concat(&idle)?;
    let raw: Result<Vec<f64>> = sorted_offsets
        .par_iter()
        .map(|&offset| {
            let p = propagate_timeline_at_offset(params, &timeline, None, noise, offset)?;
            conditional_phase(&p)
        })
        .collect();
    let raw = raw?;

    // unwrap along the scan so the fit sees a continuous curve
    let mut phases = vec![raw[0]];
    for w in raw.windows(2) {
        let mut step = w[1] - w[0];
        while step > std::f64::consts::PI {
            step -= 2.0 * std::f64::consts::PI;
        }
        while step < -std::f64::consts::PI {
            step += 2.0 * std::f64::consts::PI;
        }
        phases.push(phases.last().unwrap() + step);
    }
    let (constant, linear, quadratic) = fit_quadratic(sorted_offsets, &phases)?;
    Ok(SensitivityResult {
        points: sorted_offsets.iter().cloned().zip(phases).collect(),
        constant,
        linear,
        quadratic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Tier;
    use crate::pulse::PulseShape;
    use crate::units::deg_to_rad;

    fn offsets(n_side: usize, step: f64) -> Vec<f64> {
        (-(n_side as isize)..=n_side as isize)
            .map(|k| k as f64 * step)
            .collect()
    }

    #[test]
    fn asymmetric_offsets_are_rejected() {
        let params = DeviceParams::reference();
        let spec = PulseSpec::new(deg_to_rad(90.0), 0.1, 28e-9, 0.0, PulseShape::NetZero);
        let noise = NoiseModel::tier(Tier::A);
        assert!(dc_offset_sensitivity(&params, &spec, &[0.0, 1e-4, 2e-4], &noise).is_err());
    }

    #[test]
    fn bipolar_pulse_is_first_order_insensitive() {
        let params = DeviceParams::reference();
        let noise = NoiseModel::tier(Tier::A).with_time_step(5e-10);
        let grid = offsets(3, 2.0e-4);

        let mut nz = PulseSpec::new(deg_to_rad(90.0), 0.1, 28e-9, 0.0, PulseShape::NetZero);
        nz.sampling_rate = 1e10;
        let mut uni = PulseSpec::new(deg_to_rad(62.0), 0.1, 14e-9, 0.0, PulseShape::Unipolar);
        uni.sampling_rate = 1e10;
        let r_nz = dc_offset_sensitivity(&params, &nz, &grid, &noise).unwrap();
        let r_uni = dc_offset_sensitivity(&params, &uni, &grid, &noise).unwrap();
        assert!(
            r_nz.linear.abs() < 0.05 * r_uni.linear.abs(),
            "nz linear {:.3e} vs unipolar {:.3e}",
            r_nz.linear,
            r_uni.linear
        );
    }

    #[test]
    fn unipolar_linear_coefficient_flips_with_pulse_sign() {
        let params = DeviceParams::reference();
        let noise = NoiseModel::tier(Tier::A).with_time_step(5e-10);
        let grid = offsets(2, 2.0e-4);
        let mut uni = PulseSpec::new(deg_to_rad(62.0), 0.1, 14e-9, 0.0, PulseShape::Unipolar);
        uni.sampling_rate = 2e9;
        let wf = build_waveform(&uni, &params).unwrap();
        let mut flipped = wf.clone();
        for s in &mut flipped.samples {
            *s = -*s;
        }
        let plus = dc_offset_sensitivity_of(&params, &wf, &grid, &noise, 0.0).unwrap();
        let minus = dc_offset_sensitivity_of(&params, &flipped, &grid, &noise, 0.0).unwrap();
        assert!(plus.linear * minus.linear < 0.0);
        assert!(
            (plus.linear + minus.linear).abs() < 0.1 * plus.linear.abs(),
            "magnitudes should roughly match: {} vs {}",
            plus.linear,
            minus.linear
        );
    }
}
