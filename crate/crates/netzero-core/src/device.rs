//! Static device description for a bus-coupled pair of flux-tunable transmons:
//! the flux arc w(Phi) and its inverse, flux sensitivity, exchange couplings
//! J1(Phi) and J2(Phi), and coherence models.
//!
//! The fluxed qutrit is called q_H (high frequency), the static one q_M. All
//! frequencies are angular (rad/s), flux is in units of the flux quantum, and
//! times are in seconds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{ghz_to_rad, mhz_to_rad, us_to_s, TWO_PI};

/// Which of the two symmetric solutions of the flux arc to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

/// Linear model of a pure-dephasing rate versus flux sensitivity:
/// `Gamma(Phi) = intercept + slope * |dw/dPhi|`.
///
/// `intercept` is the residual rate at the sweetspot (1/s); `slope` has units
/// of flux quanta and plays the role of an effective noise amplitude.
#[derive(Debug, Clone, Copy)]
pub struct DephasingLaw {
    pub intercept: f64,
    pub slope: f64,
}

impl DephasingLaw {
    pub fn rate(&self, sensitivity: f64) -> f64 {
        self.intercept + self.slope * sensitivity.abs()
    }
}

/// Immutable device parameters. Constructed through [`DeviceParams::new`],
/// which derives the qubit-bus couplings and validates the inputs; all methods
/// are pure and safe to call concurrently.
#[derive(Debug, Clone)]
pub struct DeviceParams {
    /// Sweetspot frequency of the fluxed qutrit (rad/s).
    pub omega_sweetspot_h: f64,
    /// Operating-point frequency of the fluxed qutrit (rad/s).
    pub omega_operating_h: f64,
    /// Frequency of the static qutrit, parked at its sweetspot (rad/s).
    pub omega_m: f64,
    /// Anharmonicities (rad/s, negative).
    pub eta_h: f64,
    pub eta_m: f64,
    /// Exchange coupling J1/2pi at the |11> <-> |02> avoided crossing (Hz).
    pub j1_at_crossing: f64,
    /// Bus resonator frequency (rad/s).
    pub omega_bus: f64,
    /// Qubit-bus couplings (rad/s), derived from `j1_at_crossing`.
    pub g_h: f64,
    pub g_m: f64,
    /// Relaxation times (s).
    pub t1_h: f64,
    pub t1_m: f64,
    /// Ramsey and echo dephasing times of q_H at the operating point (s).
    pub t2_star_h_op: f64,
    pub t2_echo_h_op: f64,
    /// Sweetspot dephasing times of q_M (s).
    pub t2_star_m: f64,
    pub t2_echo_m: f64,
    /// Pure-dephasing laws for q_H versus flux sensitivity (echo and Ramsey).
    pub dephasing_echo_h: DephasingLaw,
    pub dephasing_star_h: DephasingLaw,
    /// Quasi-static flux-noise standard deviation (units of the flux quantum).
    pub sigma_flux: f64,
}

/// Plain-number inputs for [`DeviceParams::new`], in the units used by
/// configuration files: GHz, MHz and us. Missing fields fall back to the
/// reference device; unknown fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceInput {
    pub omega_sweetspot_h_ghz: f64,
    pub omega_operating_h_ghz: f64,
    pub omega_m_ghz: f64,
    pub eta_h_mhz: f64,
    pub eta_m_mhz: f64,
    pub j1_at_crossing_mhz: f64,
    pub omega_bus_ghz: f64,
    pub t1_h_us: f64,
    pub t1_m_us: f64,
    pub t2_star_h_us: f64,
    pub t2_echo_h_us: f64,
    pub t2_star_m_us: f64,
    pub t2_echo_m_us: f64,
    /// Residual pure-dephasing rates of q_H at its sweetspot (1/s). The slope
    /// of each dephasing law is derived so the law reproduces the measured
    /// operating-point time.
    pub gamma_phi_echo_sweetspot: f64,
    pub gamma_phi_star_sweetspot: f64,
    pub sigma_flux: f64,
}

impl Default for DeviceInput {
    /// Reference two-transmon device used throughout the crate.
    fn default() -> Self {
        DeviceInput {
            omega_sweetspot_h_ghz: 6.91,
            omega_operating_h_ghz: 6.87,
            omega_m_ghz: 5.79,
            eta_h_mhz: -331.0,
            eta_m_mhz: -300.0,
            j1_at_crossing_mhz: 14.3,
            omega_bus_ghz: 8.5,
            t1_h_us: 19.2,
            t1_m_us: 15.2,
            t2_star_h_us: 3.2,
            t2_echo_h_us: 14.7,
            t2_star_m_us: 14.8,
            t2_echo_m_us: 19.4,
            gamma_phi_echo_sweetspot: 1.0e4,
            gamma_phi_star_sweetspot: 3.0e4,
            sigma_flux: 55e-6,
        }
    }
}

/// Pure-dephasing time from T1 and a total coherence time:
/// `1/T_phi = 1/T2 - 1/(2 T1)`. Errors when T2 >= 2 T1 (no dephasing budget).
pub fn pure_dephasing_time(t1: f64, t2: f64) -> Result<f64> {
    if t1 <= 0.0 || t2 <= 0.0 {
        return Err(Error::Domain("coherence times must be positive".into()));
    }
    let rate = 1.0 / t2 - 1.0 / (2.0 * t1);
    if rate <= 0.0 {
        return Err(Error::Domain(format!(
            "T2 = {t2:.3e} s is not below the 2*T1 = {:.3e} s limit",
            2.0 * t1
        )));
    }
    Ok(1.0 / rate)
}

impl DeviceParams {
    pub fn new(input: DeviceInput) -> Result<Self> {
        let omega_sweetspot_h = ghz_to_rad(input.omega_sweetspot_h_ghz);
        let omega_operating_h = ghz_to_rad(input.omega_operating_h_ghz);
        let omega_m = ghz_to_rad(input.omega_m_ghz);
        let eta_h = mhz_to_rad(input.eta_h_mhz);
        let eta_m = mhz_to_rad(input.eta_m_mhz);
        let omega_bus = ghz_to_rad(input.omega_bus_ghz);

        if eta_h >= 0.0 || eta_m >= 0.0 {
            return Err(Error::Config("anharmonicities must be negative".into()));
        }
        if omega_operating_h > omega_sweetspot_h {
            return Err(Error::Config(
                "operating frequency must not exceed the sweetspot frequency".into(),
            ));
        }
        for (name, t) in [
            ("t1_h", input.t1_h_us),
            ("t1_m", input.t1_m_us),
            ("t2_star_h", input.t2_star_h_us),
            ("t2_echo_h", input.t2_echo_h_us),
            ("t2_star_m", input.t2_star_m_us),
            ("t2_echo_m", input.t2_echo_m_us),
        ] {
            if t <= 0.0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if input.t2_echo_h_us < input.t2_star_h_us || input.t2_echo_m_us < input.t2_star_m_us {
            return Err(Error::Config("echo time below Ramsey time".into()));
        }
        if input.sigma_flux < 0.0 {
            return Err(Error::Config("sigma_flux must be non-negative".into()));
        }

        let mut dev = DeviceParams {
            omega_sweetspot_h,
            omega_operating_h,
            omega_m,
            eta_h,
            eta_m,
            j1_at_crossing: input.j1_at_crossing_mhz * 1e6,
            omega_bus,
            g_h: 0.0,
            g_m: 0.0,
            t1_h: us_to_s(input.t1_h_us),
            t1_m: us_to_s(input.t1_m_us),
            t2_star_h_op: us_to_s(input.t2_star_h_us),
            t2_echo_h_op: us_to_s(input.t2_echo_h_us),
            t2_star_m: us_to_s(input.t2_star_m_us),
            t2_echo_m: us_to_s(input.t2_echo_m_us),
            dephasing_echo_h: DephasingLaw { intercept: 0.0, slope: 0.0 },
            dephasing_star_h: DephasingLaw { intercept: 0.0, slope: 0.0 },
            sigma_flux: input.sigma_flux,
        };

        // Derive the qubit-bus couplings by matching J1 at the crossing flux,
        // split symmetrically between the two qubits.
        let crossing = dev.crossing_flux(Branch::Positive)?;
        let delta_m = dev.omega_bus - dev.omega_m;
        let delta_h = dev.omega_bus - dev.qubit_frequency(crossing)?;
        if delta_m <= 0.0 || delta_h <= 0.0 {
            return Err(Error::Config("bus must lie above both qubits".into()));
        }
        let inv_sum = 1.0 / delta_m + 1.0 / delta_h;
        let g_sq = 2.0 * TWO_PI * dev.j1_at_crossing / inv_sum;
        let g = g_sq.sqrt();
        dev.g_h = g;
        dev.g_m = g;

        // Calibrate the dephasing laws against the operating point.
        let sens_op = dev.flux_sensitivity(dev.operating_flux()?)?.abs();
        let gamma_echo_op = 1.0 / pure_dephasing_time(dev.t1_h, dev.t2_echo_h_op)?;
        let gamma_star_op = 1.0 / pure_dephasing_time(dev.t1_h, dev.t2_star_h_op)?;
        for (law, gamma_op, gamma_ss) in [
            (&mut dev.dephasing_echo_h, gamma_echo_op, input.gamma_phi_echo_sweetspot),
            (&mut dev.dephasing_star_h, gamma_star_op, input.gamma_phi_star_sweetspot),
        ] {
            if gamma_ss < 0.0 {
                return Err(Error::Config("sweetspot dephasing rate negative".into()));
            }
            let slope = if sens_op > 0.0 {
                ((gamma_op - gamma_ss) / sens_op).max(0.0)
            } else {
                0.0
            };
            *law = DephasingLaw { intercept: gamma_ss, slope };
        }
        Ok(dev)
    }

    /// Reference device shipped with the crate.
    pub fn reference() -> Self {
        DeviceParams::new(DeviceInput::default()).expect("reference device is valid")
    }

    /// Reference device re-parked at the q_H sweetspot, where the idle flux is
    /// exactly zero and waveform samples coincide with offsets from idle.
    /// Operating-point coherence collapses onto the sweetspot residual rates.
    pub fn reference_sweetspot_parked() -> Self {
        let mut input = DeviceInput::default();
        input.omega_operating_h_ghz = input.omega_sweetspot_h_ghz;
        let half_t1 = 0.5 / us_to_s(input.t1_h_us);
        input.t2_echo_h_us = 1e6 / (half_t1 + input.gamma_phi_echo_sweetspot);
        input.t2_star_h_us = 1e6 / (half_t1 + input.gamma_phi_star_sweetspot);
        DeviceParams::new(input).expect("sweetspot-parked reference device is valid")
    }

    fn check_flux(&self, flux: f64) -> Result<()> {
        if !flux.is_finite() || flux.abs() >= 0.5 {
            return Err(Error::Domain(format!(
                "flux {flux} outside the single-well range |Phi| < 0.5"
            )));
        }
        Ok(())
    }

    /// Flux arc of q_H: `w(Phi) = (w0 - eta) sqrt(|cos(pi Phi)|) + eta`.
    pub fn qubit_frequency(&self, flux: f64) -> Result<f64> {
        self.check_flux(flux)?;
        let c = (PI * flux).cos();
        Ok((self.omega_sweetspot_h - self.eta_h) * c.abs().sqrt() + self.eta_h)
    }

    /// Flux arc of the static qutrit q_M, parked at its sweetspot. Used only
    /// for weak phase-correction excursions.
    pub fn qubit_frequency_m(&self, flux: f64) -> Result<f64> {
        self.check_flux(flux)?;
        let c = (PI * flux).cos();
        Ok((self.omega_m - self.eta_m) * c.abs().sqrt() + self.eta_m)
    }

    /// Closed-form inverse of the flux arc on the requested branch.
    pub fn flux_from_frequency(&self, target_omega: f64, branch: Branch) -> Result<f64> {
        let span = self.omega_sweetspot_h - self.eta_h;
        if target_omega > self.omega_sweetspot_h {
            return Err(Error::Domain(format!(
                "target frequency {:.6e} rad/s above the sweetspot",
                target_omega
            )));
        }
        let r = (target_omega - self.eta_h) / span;
        if r <= 0.0 {
            return Err(Error::Domain(
                "target frequency at or below the anharmonicity asymptote".into(),
            ));
        }
        let flux = (r * r).clamp(-1.0, 1.0).acos() / PI;
        Ok(branch.sign() * flux)
    }

    /// Analytic flux sensitivity dw/dPhi of q_H (rad/s per flux quantum), odd
    /// in flux and zero at the sweetspot.
    pub fn flux_sensitivity(&self, flux: f64) -> Result<f64> {
        self.check_flux(flux)?;
        let x = PI * flux;
        let span = self.omega_sweetspot_h - self.eta_h;
        Ok(-span * PI * x.sin() / (2.0 * x.cos().abs().sqrt()) * x.cos().signum())
    }

    /// Exchange coupling between the single-excitation states,
    /// `J1(Phi) = (g_M g_H / 2)(1/Delta_M + 1/Delta_H(Phi))`.
    pub fn coupling_j1(&self, flux: f64) -> Result<f64> {
        self.coupling_j1_biased(flux, 0.0)
    }

    /// J1 with both qutrits displaced from their parking fluxes; the static
    /// qutrit enters through its own arc.
    pub fn coupling_j1_biased(&self, flux_h: f64, flux_m: f64) -> Result<f64> {
        let delta_m = self.omega_bus - self.qubit_frequency_m(flux_m)?;
        let delta_h = self.omega_bus - self.qubit_frequency(flux_h)?;
        if delta_m <= 0.0 || delta_h <= 0.0 {
            return Err(Error::Domain(
                "dispersive model invalid: qubit at or above the bus".into(),
            ));
        }
        Ok(self.g_m * self.g_h / 2.0 * (1.0 / delta_m + 1.0 / delta_h))
    }

    /// Coupling between |11> and |02>: `J2 = sqrt(2) J1`.
    pub fn coupling_j2(&self, flux: f64) -> Result<f64> {
        Ok(std::f64::consts::SQRT_2 * self.coupling_j1(flux)?)
    }

    /// J2 at the avoided crossing (rad/s).
    pub fn j2_at_crossing(&self) -> f64 {
        std::f64::consts::SQRT_2 * TWO_PI * self.j1_at_crossing
    }

    /// Bare detuning between |02> and |11>: `eps(Phi) = w_H(Phi) + eta_H - w_M`.
    pub fn bare_detuning(&self, flux: f64) -> Result<f64> {
        Ok(self.qubit_frequency(flux)? + self.eta_h - self.omega_m)
    }

    /// Flux where the bare detuning vanishes (the |11> <-> |02> crossing).
    pub fn crossing_flux(&self, branch: Branch) -> Result<f64> {
        self.flux_from_frequency(self.omega_m - self.eta_h, branch)
    }

    /// Parking flux of q_H, the positive-branch solution of the operating
    /// frequency.
    pub fn operating_flux(&self) -> Result<f64> {
        self.flux_from_frequency(self.omega_operating_h, Branch::Positive)
    }

    /// Bare detuning at the operating point.
    pub fn epsilon_operating(&self) -> Result<f64> {
        self.bare_detuning(self.operating_flux()?)
    }

    /// Shortest two-qubit pulse duration able to accumulate a pi conditional
    /// phase, `pi / J2` (s).
    pub fn speed_limit(&self) -> f64 {
        PI / self.j2_at_crossing()
    }

    /// Echo pure-dephasing rate of q_H at the given flux (1/s).
    pub fn gamma_phi_echo_h(&self, flux: f64) -> Result<f64> {
        Ok(self.dephasing_echo_h.rate(self.flux_sensitivity(flux)?))
    }

    /// Echo coherence time of q_H at the given flux (s).
    pub fn t2_echo_h(&self, flux: f64) -> Result<f64> {
        Ok(1.0 / (0.5 / self.t1_h + self.gamma_phi_echo_h(flux)?))
    }

    /// Ramsey coherence time of q_H at the given flux (s), from the fitted
    /// dephasing law. Used as a reference curve, not as a simulation input.
    pub fn t2_star_h(&self, flux: f64) -> Result<f64> {
        let gamma = self.dephasing_star_h.rate(self.flux_sensitivity(flux)?);
        Ok(1.0 / (0.5 / self.t1_h + gamma))
    }

    /// Echo pure-dephasing rate of q_M (1/s).
    pub fn gamma_phi_echo_m(&self) -> Result<f64> {
        Ok(1.0 / pure_dephasing_time(self.t1_m, self.t2_echo_m)?)
    }
}
