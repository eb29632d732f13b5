//! Gate metrics of a two-qutrit propagator: acquired single-qubit phases, the
//! conditional phase, leakage and seepage, and average gate fidelity in the
//! computational subspace.

use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{c, dagger, matmul, CMat, C_ZERO};
use crate::superop::{basis_index, Superoperator, HILBERT_DIM, X1_INDICES, X2_INDICES};
use crate::units::{rad_to_deg, wrap_angle};

const D1: f64 = 4.0;

/// Everything the experiments report about one gate.
#[derive(Debug, Clone, Copy)]
pub struct GateMetrics {
    pub phi_01: f64,
    pub phi_10: f64,
    pub phi_11: f64,
    pub phi_2q: f64,
    pub leakage_l1: f64,
    pub seepage_l2: f64,
    pub avg_fidelity_f: f64,
    pub infidelity_eps: f64,
}

impl GateMetrics {
    /// JSON with phases in degrees and probabilities as-is.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "phi_01_deg": rad_to_deg(self.phi_01),
            "phi_10_deg": rad_to_deg(self.phi_10),
            "phi_11_deg": rad_to_deg(self.phi_11),
            "phi_2q_deg": rad_to_deg(self.phi_2q),
            "leakage_l1": self.leakage_l1,
            "seepage_l2": self.seepage_l2,
            "avg_fidelity": self.avg_fidelity_f,
            "infidelity": self.infidelity_eps,
        })
    }
}

/// Phase acquired by `|i j>` relative to `|0 0>`: the argument of
/// `<ij| P(|ij><00|) |00>`. The (0, 0) phase is zero by definition.
pub fn acquired_phase(p: &Superoperator, i: usize, j: usize) -> Result<f64> {
    if i > 1 || j > 1 {
        return Err(Error::Domain(format!(
            "acquired phases are defined on the computational subspace, got |{i}{j}>"
        )));
    }
    if i == 0 && j == 0 {
        return Ok(0.0);
    }
    let idx = basis_index(i, j);
    let mut rho = CMat::zeros((HILBERT_DIM, HILBERT_DIM));
    rho[[idx, 0]] = c(1.0, 0.0);
    let out = p.apply(&rho);
    let elem = out[[idx, 0]];
    if elem.norm() < 1e-9 {
        return Err(Error::Numerical(format!(
            "coherence of |{i}{j}> fully decohered; acquired phase undefined"
        )));
    }
    Ok(wrap_angle(elem.arg()))
}

/// The conditional phase `phi_11 - phi_10 - phi_01`, wrapped to (-pi, pi].
pub fn conditional_phase(p: &Superoperator) -> Result<f64> {
    let phi_01 = acquired_phase(p, 0, 1)?;
    let phi_10 = acquired_phase(p, 1, 0)?;
    let phi_11 = acquired_phase(p, 1, 1)?;
    Ok(wrap_angle(phi_11 - phi_10 - phi_01))
}

fn subspace_retention(p: &Superoperator, states: &[usize]) -> f64 {
    let mut total = 0.0;
    for &s in states {
        let mut rho = CMat::zeros((HILBERT_DIM, HILBERT_DIM));
        rho[[s, s]] = c(1.0, 0.0);
        let out = p.apply(&rho);
        for &k in states {
            total += out[[k, k]].re;
        }
    }
    total / states.len() as f64
}

/// Average population leaving the computational subspace.
pub fn leakage_l1(p: &Superoperator) -> f64 {
    (1.0 - subspace_retention(p, &X1_INDICES)).max(0.0)
}

/// Average population leaving the leakage subspace (seepage).
pub fn seepage_l2(p: &Superoperator) -> f64 {
    (1.0 - subspace_retention(p, &X2_INDICES)).max(0.0)
}

/// Ideal CZ on the computational subspace, identity elsewhere.
pub fn ideal_cz() -> CMat {
    cz_with_phases(0.0, 0.0, std::f64::consts::PI)
}

/// Diagonal target with arbitrary single-qubit and conditional phases:
/// `diag(1, e^{i phi01}, e^{i phi10}, e^{i phi11})` on X1, identity on X2.
pub fn cz_with_phases(phi_01: f64, phi_10: f64, phi_11: f64) -> CMat {
    let mut u = crate::linalg::eye(HILBERT_DIM);
    u[[basis_index(0, 1), basis_index(0, 1)]] = c(phi_01.cos(), phi_01.sin());
    u[[basis_index(1, 0), basis_index(1, 0)]] = c(phi_10.cos(), phi_10.sin());
    u[[basis_index(1, 1), basis_index(1, 1)]] = c(phi_11.cos(), phi_11.sin());
    u
}

/// Average gate fidelity on the computational subspace:
/// `F = [d1 (1 - L1) + sum_k |Tr_X1(U^dag A_k)|^2] / [d1 (d1 + 1)]`
/// with the Kraus set from the Choi eigendecomposition.
pub fn average_gate_fidelity(p: &Superoperator, target: &CMat) -> Result<f64> {
    let l1 = leakage_l1(p);
    let kraus = p.kraus_operators(1e-6)?;
    let ud = dagger(target);
    let mut coherent = 0.0;
    for a in &kraus {
        let prod = matmul(&ud, a);
        let mut tr = C_ZERO;
        for &s in &X1_INDICES {
            tr += prod[[s, s]];
        }
        coherent += tr.norm_sqr();
    }
    Ok((D1 * (1.0 - l1) + coherent) / (D1 * (D1 + 1.0)))
}

/// Fidelity to the nearest member of the CZ family reachable with ideal
/// single-qubit Z corrections: the target's single-qubit phases are taken from
/// the propagator itself, leaving phi_11 = phi_01 + phi_10 + pi.
pub fn phase_corrected_cz_fidelity(p: &Superoperator) -> Result<f64> {
    let phi_01 = acquired_phase(p, 0, 1)?;
    let phi_10 = acquired_phase(p, 1, 0)?;
    let target = cz_with_phases(phi_01, phi_10, phi_01 + phi_10 + std::f64::consts::PI);
    average_gate_fidelity(p, &target)
}

/// The propagator followed by the ideal single-qubit Z corrections that zero
/// its acquired phases. The corrections act through the number operator, so
/// the leakage states pick up the doubled phase and the map stays unitary.
pub fn phase_corrected_propagator(p: &Superoperator) -> Result<Superoperator> {
    let phi_01 = acquired_phase(p, 0, 1)?;
    let phi_10 = acquired_phase(p, 1, 0)?;
    let mut z = CMat::zeros((HILBERT_DIM, HILBERT_DIM));
    for i in 0..3 {
        for j in 0..3 {
            let phase = -(i as f64) * phi_10 - (j as f64) * phi_01;
            let k = basis_index(i, j);
            z[[k, k]] = c(phase.cos(), phase.sin());
        }
    }
    Ok(Superoperator::from_unitary(&z).compose(p))
}

/// All metrics against an explicit target unitary.
pub fn gate_metrics(p: &Superoperator, target: &CMat) -> Result<GateMetrics> {
    let phi_01 = acquired_phase(p, 0, 1)?;
    let phi_10 = acquired_phase(p, 1, 0)?;
    let phi_11 = acquired_phase(p, 1, 1)?;
    let f = average_gate_fidelity(p, target)?;
    Ok(GateMetrics {
        phi_01,
        phi_10,
        phi_11,
        phi_2q: wrap_angle(phi_11 - phi_10 - phi_01),
        leakage_l1: leakage_l1(p),
        seepage_l2: seepage_l2(p),
        avg_fidelity_f: f,
        infidelity_eps: 1.0 - f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eye;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn z_rotation(alpha: f64, beta: f64) -> CMat {
        // phase alpha per excitation of q_M, beta per excitation of q_H
        let mut u = CMat::zeros((HILBERT_DIM, HILBERT_DIM));
        for i in 0..3 {
            for j in 0..3 {
                let phase = alpha * i as f64 + beta * j as f64;
                u[[basis_index(i, j), basis_index(i, j)]] = c(phase.cos(), phase.sin());
            }
        }
        u
    }

    fn leaky_unitary(chi: f64) -> CMat {
        // rotation in the (|11>, |02>) block
        let mut u = eye(HILBERT_DIM);
        let (i11, i02) = (basis_index(1, 1), basis_index(0, 2));
        u[[i11, i11]] = c(chi.cos(), 0.0);
        u[[i02, i02]] = c(chi.cos(), 0.0);
        u[[i11, i02]] = c(0.0, -chi.sin());
        u[[i02, i11]] = c(0.0, -chi.sin());
        u
    }

    #[test]
    fn identity_map_metrics() {
        let p = Superoperator::identity();
        let m = gate_metrics(&p, &eye(HILBERT_DIM)).unwrap();
        assert!(m.phi_01.abs() < 1e-12);
        assert!(m.phi_10.abs() < 1e-12);
        assert!(m.phi_11.abs() < 1e-12);
        assert!(m.leakage_l1 < 1e-12);
        assert!(m.seepage_l2 < 1e-12);
        assert_relative_eq!(m.avg_fidelity_f, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn ideal_cz_metrics() {
        let p = Superoperator::from_unitary(&ideal_cz());
        let m = gate_metrics(&p, &ideal_cz()).unwrap();
        assert_relative_eq!(m.phi_11, PI, epsilon = 1e-12);
        assert!(m.phi_01.abs() < 1e-12 && m.phi_10.abs() < 1e-12);
        assert_relative_eq!(m.phi_2q, PI, epsilon = 1e-12);
        assert_relative_eq!(m.avg_fidelity_f, 1.0, epsilon = 1e-9);
        assert_relative_eq!(m.infidelity_eps, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn diagonal_unitary_phases_match_eigenphases() {
        let u = cz_with_phases(0.4, -0.9, 2.2);
        let p = Superoperator::from_unitary(&u);
        assert_relative_eq!(acquired_phase(&p, 0, 1).unwrap(), 0.4, epsilon = 1e-12);
        assert_relative_eq!(acquired_phase(&p, 1, 0).unwrap(), -0.9, epsilon = 1e-12);
        assert_relative_eq!(acquired_phase(&p, 1, 1).unwrap(), 2.2, epsilon = 1e-12);
        assert_relative_eq!(
            conditional_phase(&p).unwrap(),
            wrap_angle(2.2 - 0.4 + 0.9),
            epsilon = 1e-12
        );
    }

    #[test]
    fn conditional_phase_is_z_rotation_invariant() {
        let base = Superoperator::from_unitary(&cz_with_phases(0.2, 1.3, 2.9));
        let reference = conditional_phase(&base).unwrap();
        for &alpha in &[0.3, 1.1, 2.9] {
            for &beta in &[0.3, 1.1, 2.9] {
                let rotated = Superoperator::from_unitary(&z_rotation(alpha, beta));
                let composed = rotated.compose(&base);
                let phi = conditional_phase(&composed).unwrap();
                assert!((wrap_angle(phi - reference)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn full_swap_to_leakage_gives_quarter_l1() {
        let p = Superoperator::from_unitary(&leaky_unitary(PI / 2.0));
        assert_relative_eq!(leakage_l1(&p), 0.25, epsilon = 1e-12);
        assert_relative_eq!(seepage_l2(&p), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn discrete_and_haar_leakage_averages_coincide_for_block_unitaries() {
        let chi = 0.37;
        let u = leaky_unitary(chi);
        let p = Superoperator::from_unitary(&u);
        let l1 = leakage_l1(&p);
        // brute force over the four basis states and the six equal-weight
        // superposition pairs
        let mut states: Vec<Vec<(usize, f64)>> =
            X1_INDICES.iter().map(|&s| vec![(s, 1.0)]).collect();
        for a in 0..4 {
            for b in (a + 1)..4 {
                states.push(vec![
                    (X1_INDICES[a], std::f64::consts::FRAC_1_SQRT_2),
                    (X1_INDICES[b], std::f64::consts::FRAC_1_SQRT_2),
                ]);
            }
        }
        let mut total = 0.0;
        for state in &states {
            let mut psi = ndarray::Array1::zeros(HILBERT_DIM);
            for &(idx, amp) in state {
                psi[idx] = c(amp, 0.0);
            }
            let rho = CMat::from_shape_fn((HILBERT_DIM, HILBERT_DIM), |(r, col)| {
                psi[r] * psi[col].conj()
            });
            let out = p.apply(&rho);
            let leaked: f64 = X2_INDICES.iter().map(|&k| out[[k, k]].re).sum();
            total += leaked;
        }
        let brute = total / states.len() as f64;
        // the pair states halve the |11> weight, so rescale onto the basis
        // average: 4 basis states contribute sin^2(chi) once, pairs carrying
        // |11> contribute half of it
        let expected_brute = (1.0 + 3.0 * 0.5) * chi.sin().powi(2) / 10.0;
        assert_relative_eq!(brute, expected_brute, epsilon = 1e-12);
        assert_relative_eq!(l1, chi.sin().powi(2) / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_error_fidelity_matches_haar_oracle() {
        let delta = 0.1;
        let p = Superoperator::from_unitary(&cz_with_phases(0.0, 0.0, PI + delta));
        let f = average_gate_fidelity(&p, &ideal_cz()).unwrap();
        let closed = (D1 + 10.0 + 6.0 * delta.cos()) / (D1 * (D1 + 1.0));
        assert_relative_eq!(f, closed, epsilon = 1e-10);

        // Monte Carlo Haar-state oracle on X1
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        let mut normal = move || {
            let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        };
        let n = 10_000;
        let target = ideal_cz();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let mut psi = ndarray::Array1::zeros(HILBERT_DIM);
            let mut norm = 0.0;
            for &s in &X1_INDICES {
                let z = c(normal(), normal());
                norm += z.norm_sqr();
                psi[s] = z;
            }
            let scale = 1.0 / norm.sqrt();
            for &s in &X1_INDICES {
                psi[s] *= scale;
            }
            let rho = CMat::from_shape_fn((HILBERT_DIM, HILBERT_DIM), |(r, col)| {
                psi[r] * psi[col].conj()
            });
            let out = p.apply(&rho);
            let tpsi = crate::linalg::matvec(&target, &psi);
            let mut overlap = C_ZERO;
            for r in 0..HILBERT_DIM {
                for col in 0..HILBERT_DIM {
                    overlap += tpsi[r].conj() * out[[r, col]] * tpsi[col];
                }
            }
            sum += overlap.re;
            sum_sq += overlap.re * overlap.re;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let sigma = (var / n as f64).sqrt();
        assert!(
            (f - mean).abs() < 3.0 * sigma.max(1e-6),
            "formula {f:.6} vs oracle {mean:.6} +- {sigma:.2e}"
        );
    }

    #[test]
    fn depolarizing_map_has_fidelity_one_over_d() {
        use crate::superop::{vec_index, LIOUVILLE_DIM};
        let mut m = CMat::zeros((LIOUVILLE_DIM, LIOUVILLE_DIM));
        for r in 0..HILBERT_DIM {
            for col in 0..HILBERT_DIM {
                let input = vec_index(r, col);
                let in_x1 = X1_INDICES.contains(&r) && X1_INDICES.contains(&col);
                let in_x2 = X2_INDICES.contains(&r) && X2_INDICES.contains(&col);
                if in_x1 {
                    if r == col {
                        for &s in &X1_INDICES {
                            m[[vec_index(s, s), input]] = c(0.25, 0.0);
                        }
                    }
                } else if in_x2 {
                    m[[vec_index(r, col), input]] = c(1.0, 0.0);
                }
            }
        }
        let p = Superoperator::new(m).unwrap();
        assert!(p.trace_defect() < 1e-12);
        assert!(p.choi_min_eigenvalue().unwrap() > -1e-9);
        assert!(leakage_l1(&p) < 1e-12);
        // The Kraus set of the depolarizer is {E_ij / 2}, so the coherence sum
        // is sum_ij |Tr(U^dag E_ij)|^2 / 4 = ||U||_F^2 / 4 = 1 (the
        // trace-preservation sum sum_k Tr(A_k^dag A_k) = 4 is a different
        // quantity). F = (4 + 1)/20 = 1/4, the usual 1/d of full
        // depolarization, and the Haar average is 1/4 state by state.
        let f = average_gate_fidelity(&p, &ideal_cz()).unwrap();
        assert_relative_eq!(f, 0.25, epsilon = 1e-9);

        let target = ideal_cz();
        let psi_raw = [c(0.6, 0.1), c(-0.3, 0.4), c(0.2, -0.5), c(0.1, 0.2)];
        let norm: f64 = psi_raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut psi = ndarray::Array1::zeros(HILBERT_DIM);
        for (k, &s) in X1_INDICES.iter().enumerate() {
            psi[s] = psi_raw[k] / norm;
        }
        let rho = CMat::from_shape_fn((HILBERT_DIM, HILBERT_DIM), |(r, col)| {
            psi[r] * psi[col].conj()
        });
        let out = p.apply(&rho);
        let tpsi = crate::linalg::matvec(&target, &psi);
        let mut overlap = C_ZERO;
        for r in 0..HILBERT_DIM {
            for col in 0..HILBERT_DIM {
                overlap += tpsi[r].conj() * out[[r, col]] * tpsi[col];
            }
        }
        assert_relative_eq!(overlap.re, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn leakage_caps_fidelity() {
        for &chi in &[0.2, 0.6, 1.1] {
            let p = Superoperator::from_unitary(&leaky_unitary(chi));
            let l1 = leakage_l1(&p);
            let f = average_gate_fidelity(&p, &ideal_cz()).unwrap();
            assert!(
                1.0 - f >= l1 * D1 / (D1 + 1.0) - 1e-9,
                "chi={chi}: 1-F = {:.4} vs bound {:.4}",
                1.0 - f,
                l1 * D1 / (D1 + 1.0)
            );
        }
    }

    #[test]
    fn decohered_phase_is_an_error() {
        use crate::superop::{vec_index, LIOUVILLE_DIM};
        // a channel that kills all coherences, keeps populations
        let mut m = CMat::zeros((LIOUVILLE_DIM, LIOUVILLE_DIM));
        for r in 0..HILBERT_DIM {
            m[[vec_index(r, r), vec_index(r, r)]] = c(1.0, 0.0);
        }
        let p = Superoperator::new(m).unwrap();
        assert!(acquired_phase(&p, 1, 1).is_err());
    }

    #[test]
    fn phase_corrected_fidelity_forgives_single_qubit_phases() {
        let u = cz_with_phases(0.7, -1.1, 0.7 - 1.1 + PI);
        let p = Superoperator::from_unitary(&u);
        let raw = average_gate_fidelity(&p, &ideal_cz()).unwrap();
        let corrected = phase_corrected_cz_fidelity(&p).unwrap();
        assert!(raw < 0.9);
        assert_relative_eq!(corrected, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn phase_corrected_propagator_zeroes_the_acquired_phases() {
        let u = cz_with_phases(0.7, -1.1, 0.7 - 1.1 + PI);
        let p = Superoperator::from_unitary(&u);
        let corrected = phase_corrected_propagator(&p).unwrap();
        assert!(acquired_phase(&corrected, 0, 1).unwrap().abs() < 1e-12);
        assert!(acquired_phase(&corrected, 1, 0).unwrap().abs() < 1e-12);
        assert!(corrected.trace_defect() < 1e-12);
        let f = average_gate_fidelity(&corrected, &ideal_cz()).unwrap();
        assert_relative_eq!(f, 1.0, epsilon = 1e-9);
        assert_relative_eq!(
            conditional_phase(&corrected).unwrap(),
            conditional_phase(&p).unwrap(),
            epsilon = 1e-12
        );
    }
}
