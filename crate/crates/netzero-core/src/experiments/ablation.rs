//! Noise-tier ablation: the same gate evaluated under each cumulative noise
//! tier, so the error budget can be read off as successive differences.

use rayon::prelude::*;

use crate::device::DeviceParams;
use crate::distortion::ImpulseResponse;
use crate::dynamics::{NoiseModel, Tier};
use crate::error::Result;
use crate::experiments::gate_propagator;
use crate::metrics::{conditional_phase, leakage_l1, phase_corrected_cz_fidelity};
use crate::pulse::PulseSpec;

#[derive(Debug, Clone)]
pub struct TierPoint {
    pub tier: Tier,
    /// Infidelity after ideal single-qubit phase corrections.
    pub eps: f64,
    pub l1: f64,
    pub phi_2q: f64,
}

/// Runs the gate once per tier. A measured line kernel, when provided,
/// replaces the synthetic residual model at tiers that include distortions.
/// Numeric knobs (time step, averaging scheme and node count, sigma
/// override) are copied from `template`; the tier decides what is switched
/// on.
pub fn ablation(
    params: &DeviceParams,
    spec: &PulseSpec,
    tiers: &[Tier],
    kernel: Option<&ImpulseResponse>,
    template: &NoiseModel,
) -> Result<Vec<TierPoint>> {
    tiers
        .par_iter()
        .map(|&tier| {
            let mut noise = NoiseModel::tier(tier);
            noise.time_step = template.time_step;
            noise.quadrature_points = template.quadrature_points;
            noise.scheme = template.scheme;
            noise.sigma_override = template.sigma_override;
            noise.first_order_offsets = template.first_order_offsets;
            if noise.distortions {
                noise.kernel = kernel.cloned();
            }
            let p = gate_propagator(params, spec, &noise)?;
            Ok(TierPoint {
                tier,
                eps: 1.0 - phase_corrected_cz_fidelity(&p)?,
                l1: leakage_l1(&p),
                phi_2q: conditional_phase(&p)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::{line_components, settling_kernel};
    use crate::pulse::PulseShape;
    use crate::units::deg_to_rad;

    #[test]
    fn error_grows_with_tier() {
        let params = DeviceParams::reference();
        let mut spec = PulseSpec::new(deg_to_rad(85.0), 0.85, 28e-9, 0.0, PulseShape::NetZero);
        spec.sampling_rate = 5e9;
        let kernel =
            settling_kernel(1.0, &line_components(), 1.0 / spec.sampling_rate, 20e-6).unwrap();
        let mut template = NoiseModel::tier(Tier::A).with_time_step(2e-10);
        template.quadrature_points = 3;
        let points = ablation(&params, &spec, &Tier::ALL, Some(&kernel), &template).unwrap();
        assert_eq!(points.len(), 5);
        for pair in points.windows(2) {
            assert!(
                pair[1].eps >= pair[0].eps - 1e-6,
                "tier {} eps {:.3e} fell below tier {} eps {:.3e}",
                pair[1].tier.name(),
                pair[1].eps,
                pair[0].tier.name(),
                pair[0].eps
            );
        }
        let unitary = &points[0];
        assert!(unitary.eps < 0.2, "tier A eps {:.3e}", unitary.eps);
        let decohered = &points[2];
        assert!(
            decohered.eps > unitary.eps + 1e-3,
            "decoherence should dominate: {:.3e} vs {:.3e}",
            decohered.eps,
            unitary.eps
        );
    }
}
