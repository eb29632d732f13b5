//! Pulse-parameter landscape: conditional phase, leakage, and infidelity over
//! a (theta_f, lambda_2) grid.

use rayon::prelude::*;

use crate::device::DeviceParams;
use crate::dynamics::NoiseModel;
use crate::error::{Error, Result};
use crate::metrics::{conditional_phase, leakage_l1, phase_corrected_cz_fidelity};
use crate::pulse::{PulseSpec, PulseShape};

use super::cond_osc::conditional_oscillation_of;
use super::gate_propagator;

/// How per-point leakage (and phase) are extracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeakageEstimator {
    /// Directly from the propagator.
    Exact,
    /// Through the conditional-oscillation missing fraction (`L1_tilde`).
    CondOsc,
}

#[derive(Debug, Clone)]
pub struct LandscapeGrid {
    /// Midpoint mixing angles (rad).
    pub theta_f: Vec<f64>,
    pub lambda_2: Vec<f64>,
}

impl LandscapeGrid {
    /// Evenly spaced rectangular grid.
    pub fn linspace(
        theta_range: (f64, f64),
        n_theta: usize,
        lambda_range: (f64, f64),
        n_lambda: usize,
    ) -> Result<Self> {
        if n_theta < 1 || n_lambda < 1 {
            return Err(Error::Domain("landscape grid must be non-empty".into()));
        }
        let lerp = |range: (f64, f64), n: usize, k: usize| {
            if n == 1 {
                0.5 * (range.0 + range.1)
            } else {
                range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64
            }
        };
        Ok(Self {
            theta_f: (0..n_theta).map(|k| lerp(theta_range, n_theta, k)).collect(),
            lambda_2: (0..n_lambda).map(|k| lerp(lambda_range, n_lambda, k)).collect(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct LandscapePoint {
    pub theta_f: f64,
    pub lambda_2: f64,
    pub phi_2q: f64,
    pub l1: f64,
    pub eps: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct LandscapeResult {
    /// Row-major over (theta_f outer, lambda_2 inner).
    pub points: Vec<LandscapePoint>,
    pub grid: LandscapeGrid,
    pub t_2q: f64,
    pub t_1q: f64,
    pub shape: PulseShape,
    pub tier_name: String,
    pub estimator: LeakageEstimator,
}

impl LandscapeResult {
    pub fn point(&self, i_theta: usize, i_lambda: usize) -> &LandscapePoint {
        &self.points[i_theta * self.grid.lambda_2.len() + i_lambda]
    }
}

fn evaluate_point(
    params: &DeviceParams,
    theta_f: f64,
    lambda_2: f64,
    t_2q: f64,
    t_1q: f64,
    shape: PulseShape,
    noise: &NoiseModel,
    estimator: LeakageEstimator,
) -> Result<(f64, f64, f64)> {
    let spec = PulseSpec::new(theta_f, lambda_2, t_2q, t_1q, shape);
    let p = gate_propagator(params, &spec, noise)?;
    let eps = 1.0 - phase_corrected_cz_fidelity(&p)?;
    match estimator {
        LeakageEstimator::Exact => Ok((conditional_phase(&p)?, leakage_l1(&p), eps)),
        LeakageEstimator::CondOsc => {
            let osc = conditional_oscillation_of(&p, 16)?;
            Ok((osc.phi_2q, osc.leakage_estimate, eps))
        }
    }
}

/// Scan the grid; failures are recorded per point and the scan continues.
pub fn landscape_scan(
    params: &DeviceParams,
    grid: LandscapeGrid,
    t_2q: f64,
    t_1q: f64,
    shape: PulseShape,
    noise: &NoiseModel,
    estimator: LeakageEstimator,
) -> LandscapeResult {
    let tasks: Vec<(f64, f64)> = grid
        .theta_f
        .iter()
        .flat_map(|&th| grid.lambda_2.iter().map(move |&l2| (th, l2)))
        .collect();
    let points: Vec<LandscapePoint> = tasks
        .into_par_iter()
        .map(|(theta_f, lambda_2)| {
            match evaluate_point(params, theta_f, lambda_2, t_2q, t_1q, shape, noise, estimator)
            {
                Ok((phi_2q, l1, eps)) => LandscapePoint {
                    theta_f,
                    lambda_2,
                    phi_2q,
                    l1,
                    eps,
                    error: None,
                },
                Err(e) => LandscapePoint {
                    theta_f,
                    lambda_2,
                    phi_2q: f64::NAN,
                    l1: f64::NAN,
                    eps: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    LandscapeResult {
        points,
        grid,
        t_2q,
        t_1q,
        shape,
        tier_name: tier_label(noise),
        estimator,
    }
}

fn tier_label(noise: &NoiseModel) -> String {
    match (
        noise.relaxation,
        noise.dephasing,
        noise.quasi_static,
        noise.distortions,
    ) {
        (false, false, false, false) => "A".into(),
        (true, false, false, false) => "B".into(),
        (true, true, false, false) => "C".into(),
        (true, true, true, false) => "D".into(),
        (true, true, true, true) => "E".into(),
        _ => "custom".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Tier;
    use crate::units::deg_to_rad;

    #[test]
    fn smoke_grid_is_fully_populated() {
        let params = DeviceParams::reference();
        let grid = LandscapeGrid::linspace(
            (deg_to_rad(80.0), deg_to_rad(100.0)),
            2,
            (0.0, 0.1),
            2,
        )
        .unwrap();
        let noise = NoiseModel::tier(Tier::A).with_time_step(5e-10);
        let result = landscape_scan(
            &params,
            grid,
            28e-9,
            0.0,
            PulseShape::NetZero,
            &noise,
            LeakageEstimator::Exact,
        );
        assert_eq!(result.points.len(), 4);
        for p in &result.points {
            assert!(p.error.is_none(), "point failed: {:?}", p.error);
            assert!(p.phi_2q.is_finite() && p.l1.is_finite() && p.eps.is_finite());
            assert!(p.l1 >= 0.0 && p.l1 <= 1.0);
        }
    }

    #[test]
    fn conditional_phase_increases_with_theta_f() {
        let params = DeviceParams::reference();
        let grid = LandscapeGrid::linspace(
            (deg_to_rad(60.0), deg_to_rad(110.0)),
            3,
            (0.05, 0.05),
            1,
        )
        .unwrap();
        let noise = NoiseModel::tier(Tier::A).with_time_step(5e-10);
        let result = landscape_scan(
            &params,
            grid,
            28e-9,
            0.0,
            PulseShape::NetZero,
            &noise,
            LeakageEstimator::Exact,
        );
        // unwrapped phases grow with theta_f along the scanned stretch
        let phases: Vec<f64> = result.points.iter().map(|p| p.phi_2q).collect();
        let mut unwrapped = vec![phases[0]];
        for w in phases.windows(2) {
            let mut step = w[1] - w[0];
            while step < -std::f64::consts::PI {
                step += 2.0 * std::f64::consts::PI;
            }
            unwrapped.push(unwrapped.last().unwrap() + step);
        }
        assert!(unwrapped[1] > unwrapped[0] && unwrapped[2] > unwrapped[1]);
    }
}
