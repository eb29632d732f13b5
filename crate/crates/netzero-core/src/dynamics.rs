//! Two-qutrit Hamiltonian, Lindblad jump operators, the time-sliced
//! Liouville-space propagator, and quasi-static flux-noise averaging.
//!
//! Propagators are always referenced to the ideal idle evolution at the
//! parking point for the same duration, so a zero-amplitude pulse is the
//! identity channel and all single-qubit phases are reported in the calibrated
//! idle frame. Internally every slice Hamiltonian is shifted by a multiple of
//! the total excitation number (which commutes with the model exactly) to keep
//! matrix-exponential arguments small; the shift cancels in the idle
//! referencing.

use std::collections::HashMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::device::DeviceParams;
use crate::distortion::{convolve_about, residual_components, settling_kernel, ImpulseResponse};
use crate::error::{Error, Result};
use crate::linalg::{c, dagger, expm, eye, kron, matmul, CMat, C_I};
use crate::pulse::Waveform;
use crate::quadrature::GaussianQuadrature;
use crate::superop::{embed_h, embed_m, Superoperator, HILBERT_DIM, QUTRIT_DIM};

pub const DEFAULT_TIME_STEP: f64 = 1e-10;
pub const DEFAULT_QUADRATURE_POINTS: usize = 7;

/// Qutrit lowering operator with the bosonic sqrt(2) on the 1-2 rung.
pub fn lowering() -> CMat {
    let mut a = CMat::zeros((QUTRIT_DIM, QUTRIT_DIM));
    a[[0, 1]] = c(1.0, 0.0);
    a[[1, 2]] = c(2.0f64.sqrt(), 0.0);
    a
}

fn diag3(d0: f64, d1: f64, d2: f64) -> CMat {
    let mut m = CMat::zeros((QUTRIT_DIM, QUTRIT_DIM));
    m[[0, 0]] = c(d0, 0.0);
    m[[1, 1]] = c(d1, 0.0);
    m[[2, 2]] = c(d2, 0.0);
    m
}

/// Hamiltonian with q_H biased to `flux_h` and q_M parked at its sweetspot.
pub fn hamiltonian_at(params: &DeviceParams, flux_h: f64) -> Result<CMat> {
    hamiltonian_biased(params, flux_h, 0.0)
}

/// Full rotating-wave Hamiltonian (rad/s) with both transmons flux-biased:
/// on-site number and anharmonicity terms plus the exchange coupling
/// `J1 (a_M a_H^dag + a_M^dag a_H)`.
pub fn hamiltonian_biased(params: &DeviceParams, flux_h: f64, flux_m: f64) -> Result<CMat> {
    let omega_h = params.qubit_frequency(flux_h)?;
    let omega_m = params.qubit_frequency_m(flux_m)?;
    let j1 = params.coupling_j1_biased(flux_h, flux_m)?;
    Ok(hamiltonian_from_frequencies(params, omega_m, omega_h, j1))
}

/// Assemble the Hamiltonian from already-resolved frequencies; used by the
/// first-order offset expansion where `omega_h` is shifted directly.
pub fn hamiltonian_from_frequencies(
    params: &DeviceParams,
    omega_m: f64,
    omega_h: f64,
    j1: f64,
) -> CMat {
    let on_m = diag3(0.0, omega_m, 2.0 * omega_m + params.eta_m);
    let on_h = diag3(0.0, omega_h, 2.0 * omega_h + params.eta_h);
    let a = lowering();
    let hop = matmul(&embed_m(&a), &embed_h(&dagger(&a)));
    let exchange = &hop + &dagger(&hop);
    embed_m(&on_m) + embed_h(&on_h) + exchange.mapv(|z| z * j1)
}

/// Single-qutrit Hamiltonian of q_H alone at a given flux: diag(0, w, 2w+eta).
pub fn qutrit_hamiltonian_h(params: &DeviceParams, flux: f64) -> Result<CMat> {
    let w = params.qubit_frequency(flux)?;
    Ok(diag3(0.0, w, 2.0 * w + params.eta_h))
}

/// `sqrt(1/T1) a`; the zero operator (skipped by callers) when T1 is infinite.
pub fn relaxation_jump(t1: f64) -> CMat {
    let rate = if t1.is_finite() && t1 > 0.0 { (1.0 / t1).sqrt() } else { 0.0 };
    lowering().mapv(|z| z * rate)
}

/// The three diagonal dephasing jumps with weights (8, 2, 2)/(9 T_phi),
/// chosen so the (01, 02, 12) coherences decay at rates (1, 2, 1)/T_phi.
pub fn dephasing_jumps(t_phi: f64) -> Vec<CMat> {
    if !t_phi.is_finite() || t_phi <= 0.0 {
        return Vec::new();
    }
    let g = 1.0 / t_phi;
    vec![
        diag3(1.0, 0.0, -1.0).mapv(|z| z * (8.0 * g / 9.0).sqrt()),
        diag3(1.0, -1.0, 0.0).mapv(|z| z * (2.0 * g / 9.0).sqrt()),
        diag3(0.0, 1.0, -1.0).mapv(|z| z * (2.0 * g / 9.0).sqrt()),
    ]
}

/// All jump operators at a given q_H flux, embedded into the two-qutrit
/// space: relaxation on both transmons plus echo-calibrated dephasing, with
/// q_H's pure-dephasing rate following its flux-sensitivity law.
pub fn jump_operators(params: &DeviceParams, flux_h: f64) -> Result<Vec<CMat>> {
    let mut ops = embedded_jumps(params, flux_h, true, true)?;
    ops.retain(|op| op.iter().any(|z| z.norm_sqr() > 0.0));
    Ok(ops)
}

fn embedded_jumps(
    params: &DeviceParams,
    flux_h: f64,
    relaxation: bool,
    dephasing: bool,
) -> Result<Vec<CMat>> {
    let mut ops = Vec::new();
    if relaxation {
        ops.push(embed_m(&relaxation_jump(params.t1_m)));
        ops.push(embed_h(&relaxation_jump(params.t1_h)));
    }
    if dephasing {
        let t_phi_m = crate::device::pure_dephasing_time(params.t1_m, params.t2_echo_m)?;
        for op in dephasing_jumps(t_phi_m) {
            ops.push(embed_m(&op));
        }
        let gamma_h = params.gamma_phi_echo_h(flux_h)?;
        if gamma_h > 0.0 {
            for op in dephasing_jumps(1.0 / gamma_h) {
                ops.push(embed_h(&op));
            }
        }
    }
    Ok(ops)
}

/// Lindblad generator in column-stacking convention, for any Hilbert
/// dimension: `-i[H, .]` plus the dissipators of `jumps`.
pub fn liouvillian(h: &CMat, jumps: &[CMat]) -> CMat {
    let n = h.nrows();
    let id = eye(n);
    let ht = h.t().to_owned();
    let mut l = kron(&id, h).mapv(|z| z * (-C_I)) + kron(&ht, &id).mapv(|z| z * C_I);
    for op in jumps {
        let conj_op = op.mapv(|z| z.conj());
        let cdc = matmul(&dagger(op), op);
        let cdc_t = cdc.t().to_owned();
        l = l + kron(&conj_op, op)
            - kron(&id, &cdc).mapv(|z| z * 0.5)
            - kron(&cdc_t, &id).mapv(|z| z * 0.5);
    }
    l
}

/// Noise-model tiers; each one includes everything below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    /// No noise: pure unitary dynamics.
    A,
    /// Adds relaxation.
    B,
    /// Adds Markovian (echo-calibrated) dephasing.
    C,
    /// Adds quasi-static flux noise.
    D,
    /// Adds residual flux-line distortions.
    E,
}

impl Tier {
    pub fn parse(s: &str) -> Result<Tier> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Tier::A),
            "B" => Ok(Tier::B),
            "C" => Ok(Tier::C),
            "D" => Ok(Tier::D),
            "E" => Ok(Tier::E),
            other => Err(Error::Config(format!("unknown noise tier '{other}', expected A-E"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tier::A => "A",
            Tier::B => "B",
            Tier::C => "C",
            Tier::D => "D",
            Tier::E => "E",
        }
    }

    pub const ALL: [Tier; 5] = [Tier::A, Tier::B, Tier::C, Tier::D, Tier::E];
}

/// How quasi-static flux offsets are averaged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AveragingScheme {
    GaussHermite,
    MonteCarlo { seed: u64 },
}

/// Which noise ingredients a propagation includes, plus the numerical knobs
/// that go with them.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub relaxation: bool,
    pub dephasing: bool,
    pub quasi_static: bool,
    pub distortions: bool,
    /// Target slice length for the time-ordered product (s).
    pub time_step: f64,
    /// Number of quadrature nodes (or Monte Carlo samples) for the
    /// quasi-static average.
    pub quadrature_points: usize,
    pub scheme: AveragingScheme,
    /// Overrides the device's flux-noise width when set.
    pub sigma_override: Option<f64>,
    /// Distortion kernel; the synthetic residual model is used when absent.
    pub kernel: Option<ImpulseResponse>,
    /// Apply quasi-static offsets through the first-order frequency expansion
    /// instead of re-evaluating the flux arc.
    pub first_order_offsets: bool,
}

impl NoiseModel {
    pub fn tier(tier: Tier) -> Self {
        let rank = match tier {
            Tier::A => 0,
            Tier::B => 1,
            Tier::C => 2,
            Tier::D => 3,
            Tier::E => 4,
        };
        NoiseModel {
            relaxation: rank >= 1,
            dephasing: rank >= 2,
            quasi_static: rank >= 3,
            distortions: rank >= 4,
            time_step: DEFAULT_TIME_STEP,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
            scheme: AveragingScheme::GaussHermite,
            sigma_override: None,
            kernel: None,
            first_order_offsets: false,
        }
    }

    pub fn with_time_step(mut self, dt: f64) -> Self {
        self.time_step = dt;
        self
    }

    fn lindblad_active(&self) -> bool {
        self.relaxation || self.dephasing
    }
}

/// Propagate a strong-pulse waveform followed by an idle window of `t_1q` at
/// the parking flux, under the given noise model. The returned channel is
/// referenced to ideal idling for the full duration.
pub fn propagate(
    params: &DeviceParams,
    waveform: &Waveform,
    noise: &NoiseModel,
    t_1q: f64,
) -> Result<Superoperator> {
    if t_1q < 0.0 {
        return Err(Error::Domain("idle window must be non-negative".into()));
    }
    let park = params.operating_flux()?;
    let idle = Waveform::constant(park, t_1q, waveform.dt);
    let timeline = waveform.concat(&idle)?;
    propagate_timeline(params, &timeline, None, noise)
}

/// Propagate explicit flux timelines for q_H (and optionally q_M, for weak
/// phase-correction pulses). Distortions apply to the q_H line only.
pub fn propagate_timeline(
    params: &DeviceParams,
    h_timeline: &Waveform,
    m_timeline: Option<&Waveform>,
    noise: &NoiseModel,
) -> Result<Superoperator> {
    if h_timeline.is_empty() {
        return Err(Error::Domain("cannot propagate an empty timeline".into()));
    }
    let h_wf = distorted_line(params, h_timeline, noise)?;
    let h_wf = h_wf.as_ref().unwrap_or(h_timeline);
    if noise.quasi_static {
        let sigma = noise.sigma_override.unwrap_or(params.sigma_flux);
        quasi_static_average(
            |dphi| propagate_offset(params, h_wf, m_timeline, noise, dphi),
            sigma,
            noise.quadrature_points,
            noise.scheme,
        )
    } else {
        propagate_offset(params, h_wf, m_timeline, noise, 0.0)
    }
}

/// Propagate the timelines under one fixed quasi-static flux offset on q_H
/// instead of averaging over the offset distribution. Distortions still apply
/// when the noise model enables them.
pub fn propagate_timeline_at_offset(
    params: &DeviceParams,
    h_timeline: &Waveform,
    m_timeline: Option<&Waveform>,
    noise: &NoiseModel,
    offset: f64,
) -> Result<Superoperator> {
    if h_timeline.is_empty() {
        return Err(Error::Domain("cannot propagate an empty timeline".into()));
    }
    let h_wf = distorted_line(params, h_timeline, noise)?;
    let h_wf = h_wf.as_ref().unwrap_or(h_timeline);
    propagate_offset(params, h_wf, m_timeline, noise, offset)
}

/// The q_H line after the distortion kernel, or `None` when distortions are
/// off.
fn distorted_line(
    params: &DeviceParams,
    h_timeline: &Waveform,
    noise: &NoiseModel,
) -> Result<Option<Waveform>> {
    if !noise.distortions {
        return Ok(None);
    }
    let park = params.operating_flux()?;
    let kernel = match &noise.kernel {
        Some(k) => k.resampled(h_timeline.dt)?,
        None => settling_kernel(1.0, &residual_components(), h_timeline.dt, 60e-6)?,
    };
    Ok(Some(convolve_about(h_timeline, &kernel, park)?))
}

/// One fixed-offset trajectory of the sliced propagator.
fn propagate_offset(
    params: &DeviceParams,
    h_wf: &Waveform,
    m_wf: Option<&Waveform>,
    noise: &NoiseModel,
    dphi: f64,
) -> Result<Superoperator> {
    if let Some(m) = m_wf {
        if (m.dt - h_wf.dt).abs() > 1e-18 {
            return Err(Error::Domain("flux timelines must share one sample grid".into()));
        }
    }
    let duration = h_wf.duration();
    // Slice edges are pinned to the waveform grid so no slice straddles a kink
    // of the linear interpolant; a step coarser than the grid would silently
    // degrade the integrator to second order, so the grid period is the
    // coarsest step honoured.
    let per_sample = (h_wf.dt / noise.time_step).round().max(1.0) as usize;
    let n_slices = h_wf.len() * per_sample;
    let dt = duration / n_slices as f64;
    let park = params.operating_flux()?;
    let omega_ref = params.omega_m;

    let idle_h = shifted(&hamiltonian_biased(params, park, 0.0)?, omega_ref);
    let u_idle = expm(&idle_h.mapv(|z| z * (-C_I) * duration))?;

    // Fourth-order Magnus step on two Gauss-Legendre nodes per slice:
    // Omega = (dt/2)(A1 + A2) - (sqrt(3) dt^2 / 12) [A1, A2] for generator A.
    // The commutator term matters here: the warped pulses slew fast enough
    // near their edges that a midpoint rule leaves visible O(dt^2) phase
    // errors.
    let sqrt3 = 3.0f64.sqrt();
    let nodes = [0.5 - sqrt3 / 6.0, 0.5 + sqrt3 / 6.0];
    let fluxes_at = |k: usize, c: f64| -> (f64, f64) {
        let t = (k as f64 + c) * dt;
        (h_wf.value_at(t), m_wf.map(|w| w.value_at(t)).unwrap_or(0.0))
    };
    let magnus = |a1: &CMat, a2: &CMat| -> CMat {
        let mean = (a1 + a2).mapv(|z| z * 0.5 * dt);
        let comm = matmul(a1, a2) - matmul(a2, a1);
        mean - comm.mapv(|z| z * (sqrt3 * dt * dt / 12.0))
    };

    if !noise.lindblad_active() {
        let mut u = eye(HILBERT_DIM);
        let mut cache: HashMap<(u64, u64, u64, u64), CMat> = HashMap::new();
        for k in 0..n_slices {
            let (fh1, fm1) = fluxes_at(k, nodes[0]);
            let (fh2, fm2) = fluxes_at(k, nodes[1]);
            let key = (fh1.to_bits(), fm1.to_bits(), fh2.to_bits(), fm2.to_bits());
            if !cache.contains_key(&key) {
                let a1 = shifted(&slice_hamiltonian(params, fh1, fm1, dphi, noise)?, omega_ref)
                    .mapv(|z| z * (-C_I));
                let a2 = shifted(&slice_hamiltonian(params, fh2, fm2, dphi, noise)?, omega_ref)
                    .mapv(|z| z * (-C_I));
                let step = expm(&magnus(&a1, &a2))?;
                cache.insert(key, step);
            }
            u = matmul(cache.get(&key).unwrap(), &u);
        }
        let framed = matmul(&dagger(&u_idle), &u);
        return Ok(Superoperator::from_unitary(&framed));
    }

    let generator = |fh: f64, fm: f64| -> Result<CMat> {
        let flux_for_rates = if noise.first_order_offsets { fh } else { fh + dphi };
        let h = shifted(&slice_hamiltonian(params, fh, fm, dphi, noise)?, omega_ref);
        let jumps = embedded_jumps(params, flux_for_rates, noise.relaxation, noise.dephasing)?;
        Ok(liouvillian(&h, &jumps))
    };
    let mut p = Superoperator::identity();
    let mut cache: HashMap<(u64, u64, u64, u64), CMat> = HashMap::new();
    for k in 0..n_slices {
        let (fh1, fm1) = fluxes_at(k, nodes[0]);
        let (fh2, fm2) = fluxes_at(k, nodes[1]);
        let key = (fh1.to_bits(), fm1.to_bits(), fh2.to_bits(), fm2.to_bits());
        if !cache.contains_key(&key) {
            let step = expm(&magnus(&generator(fh1, fm1)?, &generator(fh2, fm2)?))?;
            cache.insert(key, step);
        }
        p = Superoperator { matrix: matmul(cache.get(&key).unwrap(), &p.matrix) };
    }
    let frame = Superoperator::from_unitary(&dagger(&u_idle));
    let framed = frame.compose(&p);
    let drift = framed.trace_defect();
    if drift > 1e-6 {
        return Err(Error::Numerical(format!(
            "propagator trace drift {drift:.2e} exceeds 1e-6; reduce time_step below {:.1e} s",
            noise.time_step
        )));
    }
    Ok(framed)
}

fn slice_hamiltonian(
    params: &DeviceParams,
    flux_h: f64,
    flux_m: f64,
    dphi: f64,
    noise: &NoiseModel,
) -> Result<CMat> {
    if dphi == 0.0 {
        return hamiltonian_biased(params, flux_h, flux_m);
    }
    if noise.first_order_offsets {
        let omega_h = params.qubit_frequency(flux_h)? + params.flux_sensitivity(flux_h)? * dphi;
        let omega_m = params.qubit_frequency_m(flux_m)?;
        let j1 = params.coupling_j1_biased(flux_h, flux_m)?;
        Ok(hamiltonian_from_frequencies(params, omega_m, omega_h, j1))
    } else {
        hamiltonian_biased(params, flux_h + dphi, flux_m)
    }
}

/// Subtract `omega_ref` times the total excitation number; this commutes with
/// the model Hamiltonian exactly, so it drops out of idle-referenced results
/// while keeping exponent norms small.
fn shifted(h: &CMat, omega_ref: f64) -> CMat {
    let mut out = h.clone();
    for i in 0..QUTRIT_DIM {
        for j in 0..QUTRIT_DIM {
            let idx = QUTRIT_DIM * i + j;
            let n_total = (i + j) as f64;
            out[[idx, idx]] -= c(omega_ref * n_total, 0.0);
        }
    }
    out
}

/// Average a fixed-offset propagation over a Gaussian flux-offset
/// distribution of width `sigma`, by Gauss-Hermite quadrature or seeded Monte
/// Carlo. Offset evaluations run in parallel.
pub fn quasi_static_average<F>(
    propagate_fn: F,
    sigma: f64,
    n_points: usize,
    scheme: AveragingScheme,
) -> Result<Superoperator>
where
    F: Fn(f64) -> Result<Superoperator> + Sync,
{
    if n_points == 0 {
        return Err(Error::Domain("quasi-static average needs at least one point".into()));
    }
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match scheme {
        AveragingScheme::GaussHermite => {
            if n_points % 2 == 0 {
                return Err(Error::Domain(
                    "Gauss-Hermite averaging wants an odd point count (one node at zero)".into(),
                ));
            }
            let q = GaussianQuadrature::for_sigma(sigma, n_points)?;
            (q.nodes, q.weights)
        }
        AveragingScheme::MonteCarlo { seed } => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let nodes = (0..n_points)
                .map(|_| {
                    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                    let u2: f64 = rng.random();
                    sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                })
                .collect();
            (nodes, vec![1.0 / n_points as f64; n_points])
        }
    };
    let terms: Result<Vec<Superoperator>> =
        nodes.par_iter().map(|&dphi| propagate_fn(dphi)).collect();
    let terms = terms?;
    let mut acc: CMat = Array2::zeros(terms[0].matrix.dim());
    for (p, &w) in terms.iter().zip(&weights) {
        acc = acc + p.matrix.mapv(|z| z * w);
    }
    Superoperator::new(acc)
}

/// Frequency trajectory of q_H under a first-order expansion of a static flux
/// offset: `w(Phi(t)) + dw/dPhi(Phi(t)) * delta_phi`, returned as rad/s
/// samples on the waveform's grid.
pub fn first_order_offset_trajectory(
    params: &DeviceParams,
    waveform: &Waveform,
    delta_phi: f64,
) -> Result<Waveform> {
    let mut samples = Vec::with_capacity(waveform.len());
    for &flux in &waveform.samples {
        let w = params.qubit_frequency(flux)? + params.flux_sensitivity(flux)? * delta_phi;
        samples.push(w);
    }
    Ok(Waveform { samples, dt: waveform.dt, t0: waveform.t0 })
}
