//! Ram-Z and Echo-Z: single-qutrit coherence decay of q_H under square
//! detuning pulses, with the quasi-static flux offset either exposed (Ram-Z)
//! or echoed out by the opposite-sign second half (Echo-Z).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::device::DeviceParams;
use crate::dynamics::{dephasing_jumps, liouvillian, relaxation_jump, NoiseModel};
use crate::error::{Error, Result};
use crate::fit::{fit_decay_time, golden_section_min};
use crate::linalg::{c, expm, matvec, CMat, CVec};
use crate::quadrature::GaussianQuadrature;
use crate::superop::QUTRIT_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RamzVariant {
    Ramsey,
    Echo,
}

#[derive(Debug, Clone, Copy)]
pub struct RamzPoint {
    pub duration: f64,
    /// Ramsey contrast `2 |<0| rho |1>|` of the ensemble-averaged state.
    pub coherence: f64,
}

#[derive(Debug, Clone)]
pub struct RamzCurve {
    pub flux: f64,
    pub variant: RamzVariant,
    pub points: Vec<RamzPoint>,
    pub fitted_t2: f64,
}

fn vec3(rho: &CMat) -> CVec {
    CVec::from_shape_fn(QUTRIT_DIM * QUTRIT_DIM, |k| {
        rho[[k % QUTRIT_DIM, k / QUTRIT_DIM]]
    })
}

/// Liouville propagator of one square segment at `flux + offset`, in the
/// frame rotating at the nominal `omega_ref`.
fn segment_propagator(
    params: &DeviceParams,
    flux: f64,
    offset: f64,
    omega_ref: f64,
    duration: f64,
    noise: &NoiseModel,
) -> Result<CMat> {
    let seen = flux + offset;
    let omega = params.qubit_frequency(seen)?;
    let eta = params.eta_h;
    let mut h = CMat::zeros((QUTRIT_DIM, QUTRIT_DIM));
    h[[1, 1]] = c(omega - omega_ref, 0.0);
    h[[2, 2]] = c(2.0 * (omega - omega_ref) + eta, 0.0);
    let mut jumps = Vec::new();
    if noise.relaxation {
        jumps.push(relaxation_jump(params.t1_h));
    }
    if noise.dephasing {
        let gamma = params.gamma_phi_echo_h(seen)?;
        if gamma > 0.0 {
            jumps.extend(dephasing_jumps(1.0 / gamma));
        }
    }
    let l = liouvillian(&h, &jumps);
    expm(&l.mapv(|z| z * duration))
}

/// Averaged coherence after one Ram-Z / Echo-Z pulse of the given duration.
pub fn coherence_at(
    params: &DeviceParams,
    flux: f64,
    variant: RamzVariant,
    duration: f64,
    noise: &NoiseModel,
) -> Result<f64> {
    let omega_ref = params.qubit_frequency(flux)?;
    let mut rho0 = CMat::zeros((QUTRIT_DIM, QUTRIT_DIM));
    for i in 0..2 {
        for j in 0..2 {
            rho0[[i, j]] = c(0.5, 0.0);
        }
    }
    let state0 = vec3(&rho0);

    let run = |offset: f64| -> Result<Complex64> {
        let state = match variant {
            RamzVariant::Ramsey => {
                let u = segment_propagator(params, flux, offset, omega_ref, duration, noise)?;
                matvec(&u, &state0)
            }
            RamzVariant::Echo => {
                let first =
                    segment_propagator(params, flux, offset, omega_ref, 0.5 * duration, noise)?;
                let second =
                    segment_propagator(params, -flux, offset, omega_ref, 0.5 * duration, noise)?;
                matvec(&second, &matvec(&first, &state0))
            }
        };
        // vec index of rho[0][1] under column stacking
        Ok(state[QUTRIT_DIM])
    };

    let averaged = if noise.quasi_static {
        let sigma = noise.sigma_override.unwrap_or(params.sigma_flux);
        if sigma > 0.0 {
            let quad = GaussianQuadrature::for_sigma(sigma, noise.quadrature_points)?;
            let mut acc = Complex64::new(0.0, 0.0);
            for (&node, &weight) in quad.nodes.iter().zip(&quad.weights) {
                acc += run(node)? * weight;
            }
            acc
        } else {
            run(0.0)?
        }
    } else {
        run(0.0)?
    };
    Ok(2.0 * averaged.norm())
}

/// Decay curves and fitted times for both variants at each flux point.
pub fn ramz_echoz(
    params: &DeviceParams,
    fluxes: &[f64],
    durations: &[f64],
    noise: &NoiseModel,
) -> Result<Vec<RamzCurve>> {
    if durations.len() < 3 {
        return Err(Error::Domain("need at least 3 durations".into()));
    }
    let tasks: Vec<(f64, RamzVariant)> = fluxes
        .iter()
        .flat_map(|&f| [(f, RamzVariant::Ramsey), (f, RamzVariant::Echo)])
        .collect();
    tasks
        .into_par_iter()
        .map(|(flux, variant)| {
            let points: Result<Vec<RamzPoint>> = durations
                .iter()
                .map(|&duration| {
                    Ok(RamzPoint {
                        duration,
                        coherence: coherence_at(params, flux, variant, duration, noise)?,
                    })
                })
                .collect();
            let points = points?;
            let t: Vec<f64> = points.iter().map(|p| p.duration).collect();
            let y: Vec<f64> = points.iter().map(|p| p.coherence).collect();
            let (fitted_t2, _) = fit_decay_time(&t, &y)
                .map_err(|e| Error::Fit(format!("decay fit at flux {flux}: {e}")))?;
            Ok(RamzCurve {
                flux,
                variant,
                points,
                fitted_t2,
            })
        })
        .collect()
}

/// Least-squares estimate of the quasi-static flux-noise width from Ram-Z
/// data: scan sigma, simulating the same protocol, and pick the minimum of
/// the summed squared mismatch.
pub fn fit_sigma(
    params: &DeviceParams,
    flux: f64,
    durations: &[f64],
    coherences: &[f64],
    noise: &NoiseModel,
) -> Result<f64> {
    if durations.len() != coherences.len() || durations.len() < 3 {
        return Err(Error::Fit("need matched durations and data, 3 or more".into()));
    }
    let spread = coherences.iter().cloned().fold(f64::MIN, f64::max)
        - coherences.iter().cloned().fold(f64::MAX, f64::min);
    if spread < 1e-6 {
        return Err(Error::Fit(
            "flat Ram-Z data; sigma is not identifiable".into(),
        ));
    }
    let sse = |sigma: f64| -> f64 {
        let mut noise = noise.clone();
        noise.quasi_static = true;
        noise.sigma_override = Some(sigma);
        let mut total = 0.0;
        for (&t, &y) in durations.iter().zip(coherences) {
            match coherence_at(params, flux, RamzVariant::Ramsey, t, &noise) {
                Ok(model) => total += (model - y) * (model - y),
                Err(_) => return f64::INFINITY,
            }
        }
        total
    };
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=40 {
        let sigma = 200e-6 * k as f64 / 40.0;
        let s = sse(sigma);
        if s < best.0 {
            best = (s, sigma);
        }
    }
    let lo = (best.1 - 10e-6).max(0.0);
    let hi = best.1 + 10e-6;
    let (sigma, _) = golden_section_min(sse, lo, hi, 1e-8, 80);
    Ok(sigma)
}
