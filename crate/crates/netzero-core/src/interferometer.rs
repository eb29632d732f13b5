//! Mach-Zehnder model of the bipolar pulse: each half acts on the
//! {|11>, |02>} pair as a beamsplitter with a conditional phase, and the sweep
//! across the sweetspot between the halves acts as a phase shifter. Leakage
//! and conditional phase of the composite follow in closed form.

use std::sync::OnceLock;

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::linalg::{c, matmul, CMat};
use crate::units::{wrap_angle, TWO_PI};

/// Sign convention for the second beamsplitter.
///
/// Composing the printed beamsplitter form literally puts the destructive
/// interference at even multiples of pi in phi_tilde, which contradicts the
/// stated interference condition. Flipping the sign of alpha in the second
/// beamsplitter restores the odd-pi condition. The default is decided once at
/// startup by a numeric two-level oracle, see [`default_convention`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// B2 = B1 verbatim.
    Literal,
    /// B2 = B1 with alpha -> -alpha.
    FlippedAlpha,
}

/// What one unipolar half does to the {|11>, |02>} pair.
#[derive(Debug, Clone, Copy)]
pub struct HalfPulseAction {
    /// Leakage amplitude of one half; alpha^2 = 4 L1_half.
    pub alpha: f64,
    /// Conditional phase of one half (rad).
    pub phi_half: f64,
    /// Relative phase between |11> and |02> acquired across the sweetspot
    /// sweep (rad).
    pub phi_arm: f64,
}

impl HalfPulseAction {
    pub fn new(alpha: f64, phi_half: f64, phi_arm: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!(
                "leakage amplitude must be in [0, 1], got {alpha}"
            )));
        }
        Ok(Self {
            alpha,
            phi_half,
            phi_arm,
        })
    }

    /// The interference phase `phi_tilde = phi_arm - 2 phi_half`.
    pub fn phi_tilde(&self) -> f64 {
        self.phi_arm - 2.0 * self.phi_half
    }
}

/// One half pulse on the {|11>, |02>} pair:
/// `[[e^{i phi} sqrt(1-a^2), a], [a, -e^{-i phi} sqrt(1-a^2)]]`.
pub fn beamsplitter(alpha: f64, phi_half: f64) -> Result<CMat> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!(
            "leakage amplitude must be in [0, 1], got {alpha}"
        )));
    }
    let beta = (1.0 - alpha * alpha).sqrt();
    let mut b = CMat::zeros((2, 2));
    b[[0, 0]] = c(phi_half.cos(), phi_half.sin()) * beta;
    b[[0, 1]] = c(alpha, 0.0);
    b[[1, 0]] = c(alpha, 0.0);
    b[[1, 1]] = -c(phi_half.cos(), -phi_half.sin()) * beta;
    Ok(b)
}

/// The inter-half arm: `diag(1, e^{i phi})`.
pub fn phase_shifter(phi: f64) -> CMat {
    let mut p = CMat::zeros((2, 2));
    p[[0, 0]] = c(1.0, 0.0);
    p[[1, 1]] = c(phi.cos(), phi.sin());
    p
}

/// Composite of a bipolar pulse.
#[derive(Debug, Clone)]
pub struct NzComposition {
    pub matrix: CMat,
    pub l1_nz: f64,
    pub phi_2q_nz: f64,
}

/// Compose second beamsplitter, phase shifter, first beamsplitter. Leakage is
/// the |11> -> |02> population divided by 4 (only one of the four
/// computational states leaks); the conditional phase is the argument of the
/// |11> -> |11> element.
pub fn nz_composition(action: &HalfPulseAction, convention: Convention) -> Result<NzComposition> {
    let b1 = beamsplitter(action.alpha, action.phi_half)?;
    let alpha_2 = match convention {
        Convention::Literal => action.alpha,
        Convention::FlippedAlpha => -action.alpha,
    };
    let beta = (1.0 - action.alpha * action.alpha).sqrt();
    let mut b2 = CMat::zeros((2, 2));
    b2[[0, 0]] = c(action.phi_half.cos(), action.phi_half.sin()) * beta;
    b2[[0, 1]] = c(alpha_2, 0.0);
    b2[[1, 0]] = c(alpha_2, 0.0);
    b2[[1, 1]] = -c(action.phi_half.cos(), -action.phi_half.sin()) * beta;
    let m = matmul(&b2, &matmul(&phase_shifter(action.phi_arm), &b1));
    let l1_nz = m[[1, 0]].norm_sqr() / 4.0;
    let phi_2q_nz = wrap_angle(m[[0, 0]].arg());
    Ok(NzComposition {
        matrix: m,
        l1_nz,
        phi_2q_nz,
    })
}

/// Spacing of leakage minima when a buffer is inserted between the halves:
/// `2 pi / epsilon` with epsilon the bare detuning where the buffer sits.
pub fn fringe_period(epsilon: f64) -> Result<f64> {
    if epsilon.abs() < f64::EPSILON {
        return Err(Error::Domain(
            "fringe period undefined at zero detuning".into(),
        ));
    }
    Ok(TWO_PI / epsilon.abs())
}

/// Fringe period of a buffer parked at the sweetspot.
pub fn fringe_period_at_sweetspot(params: &DeviceParams) -> Result<f64> {
    fringe_period(params.bare_detuning(0.0)?)
}

/// Piecewise-constant two-level propagator for `H(t) = [[0, j], [j, d(t)]]`,
/// stepping left to right.
fn two_level_propagator(detuning: impl Fn(f64) -> f64, j: f64, duration: f64, n: usize) -> CMat {
    let dt = duration / n as f64;
    let mut u = crate::linalg::eye(2);
    for k in 0..n {
        let d = detuning((k as f64 + 0.5) * dt);
        let mu = 0.5 * d;
        let omega = (j * j + mu * mu).sqrt();
        let (cos, sinc) = if omega * dt < 1e-12 {
            (1.0, dt)
        } else {
            ((omega * dt).cos(), (omega * dt).sin() / omega)
        };
        let phase = c((mu * dt).cos(), -(mu * dt).sin());
        let mut step = CMat::zeros((2, 2));
        step[[0, 0]] = phase * c(cos, sinc * mu);
        step[[0, 1]] = phase * c(0.0, -sinc * j);
        step[[1, 0]] = phase * c(0.0, -sinc * j);
        step[[1, 1]] = phase * c(cos, -sinc * mu);
        u = matmul(&step, &u);
    }
    u
}

/// Decide the beamsplitter sign convention by simulating a symmetric
/// two-level interferometer: two identical resonant kicks separated by a hold
/// at large detuning. The kick propagator has a real |11> -> |11> element, so
/// phi_half = 0 and the interference phase is just the hold phase. The
/// convention whose leakage vanishes where the numeric leakage vanishes wins.
pub fn default_convention() -> Convention {
    static CONVENTION: OnceLock<Convention> = OnceLock::new();
    *CONVENTION.get_or_init(|| {
        let j = TWO_PI * 20.0e6;
        let delta = TWO_PI * 750.0e6;
        let kick = two_level_propagator(|_| 0.0, j, 0.3 / j, 400);
        let phi_half = kick[[0, 0]].arg();
        let period = TWO_PI / delta;
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=2000 {
            let tau = 1.5 * period * k as f64 / 2000.0;
            let hold = two_level_propagator(|_| delta, j, tau, 200);
            let m = matmul(&kick, &matmul(&hold, &kick));
            let leak = m[[1, 0]].norm_sqr();
            if leak < best.0 {
                let phi_arm = wrap_angle(hold[[1, 1]].arg() - hold[[0, 0]].arg());
                best = (leak, phi_arm);
            }
        }
        let phi_tilde = wrap_angle(best.1 - 2.0 * phi_half);
        if phi_tilde.cos() < 0.0 {
            Convention::FlippedAlpha
        } else {
            Convention::Literal
        }
    })
}
