//! Pulse-parameter optimization: coarse (θ_f, λ₂) grid scan followed by a
//! local downhill-simplex refinement of the phase-corrected infidelity, with
//! the conditional phase held at 180° by a dead-zone penalty.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::device::DeviceParams;
use crate::dynamics::NoiseModel;
use crate::error::{Error, Result};
use crate::fit::nelder_mead;
use crate::metrics::{acquired_phase, cz_with_phases, gate_metrics, GateMetrics};
use crate::pulse::{PulseShape, PulseSpec};
use crate::units::rad_to_deg;

/// Search region and grid resolution. Angles in radians.
#[derive(Debug, Clone, Copy)]
pub struct OptimizeBounds {
    pub theta_f: (f64, f64),
    pub lambda_2: (f64, f64),
    pub theta_step: f64,
    pub lambda_step: f64,
}

impl OptimizeBounds {
    pub fn new(theta_f: (f64, f64), lambda_2: (f64, f64)) -> Self {
        OptimizeBounds {
            theta_f,
            lambda_2,
            theta_step: 0.5_f64.to_radians(),
            lambda_step: 0.01,
        }
    }

    fn contains(&self, theta_f: f64, lambda_2: f64) -> bool {
        theta_f >= self.theta_f.0
            && theta_f <= self.theta_f.1
            && lambda_2 >= self.lambda_2.0
            && lambda_2 <= self.lambda_2.1
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub theta_f: f64,
    pub lambda_2: f64,
    pub objective: f64,
    pub metrics: GateMetrics,
    pub grid_evaluations: usize,
}

/// Allow |φ_2Q - 180°| up to one degree for free, then charge quadratically.
/// The scale makes a 2° violation cost more than any plausible infidelity.
fn phase_penalty(phi_2q: f64) -> f64 {
    let miss_deg = rad_to_deg((phi_2q.abs() - PI).abs());
    let excess = (miss_deg - 1.0).max(0.0);
    10.0 * excess * excess
}

/// Metrics against the virtual-Z-corrected CZ target, so ε already assumes
/// ideal single-qubit phase calibration.
fn objective_at(
    params: &DeviceParams,
    spec: &PulseSpec,
    noise: &NoiseModel,
) -> Result<(f64, GateMetrics)> {
    let p = crate::experiments::gate_propagator(params, spec, noise)?;
    let phi_01 = acquired_phase(&p, 0, 1)?;
    let phi_10 = acquired_phase(&p, 1, 0)?;
    let target = cz_with_phases(phi_01, phi_10, phi_01 + phi_10 + PI);
    let m = gate_metrics(&p, &target)?;
    Ok((m.infidelity_eps + phase_penalty(m.phi_2q), m))
}

/// Minimizes ε + phase penalty over (θ_f, λ₂) at fixed durations and shape.
/// Deterministic: the grid is fixed by the bounds and the refinement is
/// seeded by the best grid point.
pub fn optimize_pulse(
    params: &DeviceParams,
    t_2q: f64,
    t_1q: f64,
    shape: PulseShape,
    bounds: &OptimizeBounds,
    noise: &NoiseModel,
) -> Result<OptimizeResult> {
    if bounds.theta_f.0 >= bounds.theta_f.1 || bounds.lambda_2.0 >= bounds.lambda_2.1 {
        return Err(Error::Domain("optimization bounds must be nonempty".into()));
    }
    if bounds.theta_step <= 0.0 || bounds.lambda_step <= 0.0 {
        return Err(Error::Domain("grid steps must be positive".into()));
    }
    let spec_at = |theta_f: f64, lambda_2: f64| {
        let mut s = PulseSpec::new(theta_f, lambda_2, t_2q, t_1q, shape);
        s.sampling_rate = crate::experiments::SIM_SAMPLING_RATE;
        s
    };

    let n_theta = ((bounds.theta_f.1 - bounds.theta_f.0) / bounds.theta_step).round() as usize + 1;
    let n_lambda =
        ((bounds.lambda_2.1 - bounds.lambda_2.0) / bounds.lambda_step).round() as usize + 1;
    let grid: Vec<(f64, f64)> = (0..n_theta)
        .flat_map(|i| {
            let theta = (bounds.theta_f.0 + i as f64 * bounds.theta_step).min(bounds.theta_f.1);
            (0..n_lambda).map(move |j| {
                let lambda =
                    (bounds.lambda_2.0 + j as f64 * bounds.lambda_step).min(bounds.lambda_2.1);
                (theta, lambda)
            })
        })
        .collect();

    let evaluated: Vec<(f64, f64, f64)> = grid
        .par_iter()
        .filter_map(|&(theta, lambda)| {
            let spec = spec_at(theta, lambda);
            objective_at(params, &spec, noise)
                .ok()
                .map(|(obj, _)| (theta, lambda, obj))
        })
        .collect();
    let &(theta0, lambda0, _) = evaluated
        .iter()
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .ok_or_else(|| Error::Fit("no feasible grid point in the optimization bounds".into()))?;

    let f = |x: &[f64]| -> f64 {
        let (theta, lambda) = (x[0], x[1]);
        if !bounds.contains(theta, lambda) {
            return f64::INFINITY;
        }
        match objective_at(params, &spec_at(theta, lambda), noise) {
            Ok((obj, _)) => obj,
            Err(_) => f64::INFINITY,
        }
    };
    let (best, _) = nelder_mead(
        f,
        &[theta0, lambda0],
        &[0.5 * bounds.theta_step, 0.5 * bounds.lambda_step],
        1e-10,
        120,
    );

    let spec = spec_at(best[0], best[1]);
    let (objective, metrics) = objective_at(params, &spec, noise)?;
    Ok(OptimizeResult {
        theta_f: best[0],
        lambda_2: best[1],
        objective,
        metrics,
        grid_evaluations: evaluated.len(),
    })
}
