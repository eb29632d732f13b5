//! Leakage-modified (interleaved) randomized benchmarking: the two-qubit
//! Clifford group, sequence simulation against a noisy CZ propagator, readout
//! population extraction, and the decay fits and interleaved estimators.
//!
//! The decomposition model keeps single-qubit Clifford layers ideal and runs
//! every CZ occurrence (inside Cliffords, interleaved, and in the recovery)
//! through the supplied noisy propagator, so the interleaved difference
//! isolates the CZ contribution.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::{fit_double_exponential, fit_exponential};
use crate::linalg::{c, dagger, eye, kron, matmul, CMat};
use crate::superop::{Superoperator, HILBERT_DIM, QUTRIT_DIM, X1_INDICES};

pub const CLIFFORD_GROUP_ORDER: usize = 11520;
const SINGLE_QUBIT_ORDER: usize = 24;
const D1: f64 = 4.0;
/// Rounding grid for the global-phase-invariant unitary hash.
const HASH_GRID: f64 = 1e-8;

/// One step of a Clifford's generator word, in application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliffordGen {
    /// Single-qubit Clifford (by index into the 24-element group) on q_M.
    SqM(usize),
    /// Single-qubit Clifford on q_H.
    SqH(usize),
    Cz,
}

#[derive(Debug, Clone)]
pub struct CliffordElement {
    pub index: usize,
    /// 4x4 computational-subspace unitary, defined up to global phase.
    pub unitary: CMat,
    /// Minimal-length generator word found by the closure, application order.
    pub word: Vec<CliffordGen>,
    pub cz_count: usize,
}

/// The full two-qubit Clifford group with lookup and inverse tables.
pub struct CliffordGroup {
    pub elements: Vec<CliffordElement>,
    pub inverse: Vec<usize>,
    index_by_key: HashMap<Vec<i64>, usize>,
    single_qubit: Vec<CMat>,
}

/// Normalize away the global phase (first entry of magnitude over 1e-6 is
/// rotated to the positive real axis), then round onto a fixed grid.
fn phase_invariant_key(u: &CMat) -> Vec<i64> {
    let mut phase = None;
    'scan: for r in 0..u.nrows() {
        for col in 0..u.ncols() {
            let z = u[[r, col]];
            if z.norm() > 1e-6 {
                phase = Some(z.conj() / z.norm());
                break 'scan;
            }
        }
    }
    let ph = phase.expect("unitary cannot be all zeros");
    let mut key = Vec::with_capacity(2 * u.len());
    for z in u.iter() {
        let w = z * ph;
        key.push((w.re / HASH_GRID).round() as i64);
        key.push((w.im / HASH_GRID).round() as i64);
    }
    key
}

/// BFS closure of the 2x2 single-qubit Clifford group over {H, S}.
fn single_qubit_cliffords() -> Vec<CMat> {
    let s = 0.5f64.sqrt();
    let mut h = CMat::zeros((2, 2));
    h[[0, 0]] = c(s, 0.0);
    h[[0, 1]] = c(s, 0.0);
    h[[1, 0]] = c(s, 0.0);
    h[[1, 1]] = c(-s, 0.0);
    let mut sg = eye(2);
    sg[[1, 1]] = c(0.0, 1.0);
    let gens = [h, sg];

    let mut elements = vec![eye(2)];
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    seen.insert(phase_invariant_key(&elements[0]), 0);
    let mut cursor = 0;
    while cursor < elements.len() {
        for g in &gens {
            let candidate = matmul(g, &elements[cursor]);
            let key = phase_invariant_key(&candidate);
            if !seen.contains_key(&key) {
                seen.insert(key, elements.len());
                elements.push(candidate);
            }
        }
        cursor += 1;
    }
    assert_eq!(elements.len(), SINGLE_QUBIT_ORDER);
    elements
}

fn cz4() -> CMat {
    let mut u = eye(4);
    u[[3, 3]] = c(-1.0, 0.0);
    u
}

/// BFS closure over {24 single-qubit Cliffords on each qubit, CZ}, deduped by
/// the phase-invariant hash. Errors if the closure misses or exceeds the
/// known group order.
pub fn build_clifford_group() -> Result<CliffordGroup> {
    let single_qubit = single_qubit_cliffords();
    let eye2 = eye(2);
    let mut generators: Vec<(CliffordGen, CMat)> = Vec::with_capacity(2 * SINGLE_QUBIT_ORDER + 1);
    for (k, u) in single_qubit.iter().enumerate() {
        generators.push((CliffordGen::SqM(k), kron(u, &eye2)));
    }
    for (k, u) in single_qubit.iter().enumerate() {
        generators.push((CliffordGen::SqH(k), kron(&eye2, u)));
    }
    generators.push((CliffordGen::Cz, cz4()));

    let mut elements = vec![CliffordElement {
        index: 0,
        unitary: eye(4),
        word: Vec::new(),
        cz_count: 0,
    }];
    let mut index_by_key: HashMap<Vec<i64>, usize> = HashMap::new();
    index_by_key.insert(phase_invariant_key(&elements[0].unitary), 0);

    let mut cursor = 0;
    while cursor < elements.len() {
        for (gen, matrix) in &generators {
            let unitary = matmul(matrix, &elements[cursor].unitary);
            let key = phase_invariant_key(&unitary);
            if index_by_key.contains_key(&key) {
                continue;
            }
            let index = elements.len();
            if index >= CLIFFORD_GROUP_ORDER {
                return Err(Error::Numerical(
                    "Clifford closure exceeded the expected group order".into(),
                ));
            }
            let mut word = elements[cursor].word.clone();
            word.push(*gen);
            let cz_count =
                elements[cursor].cz_count + usize::from(matches!(gen, CliffordGen::Cz));
            index_by_key.insert(key, index);
            elements.push(CliffordElement { index, unitary, word, cz_count });
        }
        cursor += 1;
    }
    if elements.len() != CLIFFORD_GROUP_ORDER {
        return Err(Error::Numerical(format!(
            "Clifford closure stalled at {} elements",
            elements.len()
        )));
    }

    let mut inverse = vec![0usize; elements.len()];
    for e in &elements {
        let key = phase_invariant_key(&dagger(&e.unitary));
        inverse[e.index] = *index_by_key.get(&key).ok_or_else(|| {
            Error::Numerical("group not closed under inversion".into())
        })?;
    }

    Ok(CliffordGroup { elements, inverse, index_by_key, single_qubit })
}

/// A Clifford word collapsed into alternating ideal single-qubit layers and
/// CZ applications.
enum Segment {
    /// 2x2 factors on (q_M, q_H).
    Layer(CMat, CMat),
    Cz,
}

impl CliffordGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Index of the group element equal to `u` up to global phase.
    pub fn index_of(&self, u: &CMat) -> Option<usize> {
        self.index_by_key.get(&phase_invariant_key(u)).copied()
    }

    fn segments(&self, word: &[CliffordGen]) -> Vec<Segment> {
        let mut segments = Vec::new();
        let mut m_acc = eye(2);
        let mut h_acc = eye(2);
        let mut dirty = false;
        for gen in word {
            match gen {
                CliffordGen::SqM(k) => {
                    m_acc = matmul(&self.single_qubit[*k], &m_acc);
                    dirty = true;
                }
                CliffordGen::SqH(k) => {
                    h_acc = matmul(&self.single_qubit[*k], &h_acc);
                    dirty = true;
                }
                CliffordGen::Cz => {
                    if dirty {
                        segments.push(Segment::Layer(m_acc, h_acc));
                        m_acc = eye(2);
                        h_acc = eye(2);
                        dirty = false;
                    }
                    segments.push(Segment::Cz);
                }
            }
        }
        if dirty {
            segments.push(Segment::Layer(m_acc, h_acc));
        }
        segments
    }
}

/// Embed a computational-subspace (2x2) operator on a qutrit, leaving |2>
/// untouched.
fn qutrit_embed(u2: &CMat) -> CMat {
    let mut u = eye(QUTRIT_DIM);
    for r in 0..2 {
        for col in 0..2 {
            u[[r, col]] = u2[[r, col]];
        }
    }
    u
}

fn apply_unitary(rho: &CMat, u: &CMat) -> CMat {
    matmul(&matmul(u, rho), &dagger(u))
}

/// One RB data point: a single random sequence's final ground-state survival
/// and computational-subspace population.
#[derive(Debug, Clone, Copy)]
pub struct RbPoint {
    pub n_cliffords: usize,
    pub seed_index: usize,
    pub m0: f64,
    pub p_x1: f64,
}

/// Simulate randomized-benchmarking sequences. Every CZ occurrence uses
/// `noisy_cz`; single-qubit layers are ideal. The interleaved variant inserts
/// an extra noisy CZ after each random Clifford. Sequences are deterministic
/// given `master_seed`: job (length i, seed s) draws from an independent
/// ChaCha stream keyed by its index, so reference and interleaved runs with
/// the same master seed use the same random Cliffords.
pub fn run_rb(
    group: &CliffordGroup,
    noisy_cz: &Superoperator,
    lengths: &[usize],
    n_seeds: usize,
    master_seed: u64,
    interleaved: bool,
) -> Result<Vec<RbPoint>> {
    if lengths.is_empty() || n_seeds == 0 {
        return Err(Error::Domain("need at least one length and one seed".into()));
    }
    if lengths.iter().any(|&n| n == 0) {
        return Err(Error::Domain("sequence lengths must be at least 1".into()));
    }
    let jobs: Vec<(usize, usize)> = lengths
        .iter()
        .enumerate()
        .flat_map(|(li, &n)| (0..n_seeds).map(move |s| (n, li * n_seeds + s)))
        .collect();
    jobs.par_iter()
        .map(|&(n_cliffords, job)| {
            let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
            rng.set_stream(job as u64);
            let mut rho = CMat::zeros((HILBERT_DIM, HILBERT_DIM));
            rho[[0, 0]] = c(1.0, 0.0);
            let mut net = eye(4);
            let cz_ideal = cz4();
            for _ in 0..n_cliffords {
                let pick = rng.random_range(0..group.order());
                let element = &group.elements[pick];
                rho = apply_clifford(group, &element.word, &rho, noisy_cz);
                net = matmul(&element.unitary, &net);
                if interleaved {
                    rho = noisy_cz.apply(&rho);
                    net = matmul(&cz_ideal, &net);
                }
            }
            let recovery = group.index_of(&dagger(&net)).ok_or_else(|| {
                Error::Numerical("recovery Clifford not found in the group table".into())
            })?;
            rho = apply_clifford(group, &group.elements[recovery].word, &rho, noisy_cz);

            let m0 = rho[[0, 0]].re;
            let p_x1: f64 = X1_INDICES.iter().map(|&k| rho[[k, k]].re).sum();
            Ok(RbPoint {
                n_cliffords,
                seed_index: job % n_seeds,
                m0,
                p_x1,
            })
        })
        .collect()
}

fn apply_clifford(
    group: &CliffordGroup,
    word: &[CliffordGen],
    rho: &CMat,
    noisy_cz: &Superoperator,
) -> CMat {
    let mut rho = rho.clone();
    for segment in group.segments(word) {
        match segment {
            Segment::Layer(m2, h2) => {
                let u9 = kron(&qutrit_embed(&m2), &qutrit_embed(&h2));
                rho = apply_unitary(&rho, &u9);
            }
            Segment::Cz => rho = noisy_cz.apply(&rho),
        }
    }
    rho
}

/// Per-length means of (M0, P_X1), in the order the lengths first appear.
pub fn average_by_length(points: &[RbPoint]) -> Vec<(usize, f64, f64)> {
    let mut order: Vec<usize> = Vec::new();
    let mut sums: HashMap<usize, (f64, f64, usize)> = HashMap::new();
    for p in points {
        let entry = sums.entry(p.n_cliffords).or_insert_with(|| {
            order.push(p.n_cliffords);
            (0.0, 0.0, 0)
        });
        entry.0 += p.m0;
        entry.1 += p.p_x1;
        entry.2 += 1;
    }
    order
        .into_iter()
        .map(|n| {
            let (m0, p_x1, count) = sums[&n];
            (n, m0 / count as f64, p_x1 / count as f64)
        })
        .collect()
}

/// Solve the two-readout linear system for three-level populations: `s1` is
/// the mean signal of the sequence as-is, `sx` after a final pi pulse, with
/// `v0, v1, v2` the calibrated level voltages. Returns (P0, P1, P2).
pub fn extract_populations(s1: f64, sx: f64, v0: f64, v1: f64, v2: f64) -> Result<(f64, f64, f64)> {
    let (a, b) = (v0 - v2, v1 - v2);
    let det = a * a - b * b;
    let scale = a.abs().max(b.abs()).max(1e-300);
    if det.abs() < 1e-12 * scale * scale {
        return Err(Error::Domain(
            "readout calibration is degenerate (V0 and V1 indistinguishable)".into(),
        ));
    }
    let (y1, yx) = (s1 - v2, sx - v2);
    let p0 = (a * y1 - b * yx) / det;
    let p1 = (a * yx - b * y1) / det;
    Ok((p0, p1, 1.0 - p0 - p1))
}

/// Computational-subspace retention fit `P_X1 = A + B lambda_1^N` and the
/// per-Clifford leakage and seepage rates derived from it.
#[derive(Debug, Clone, Copy)]
pub struct LeakageRbFit {
    pub a: f64,
    pub b: f64,
    pub lambda_1: f64,
    pub l1: f64,
    pub l2: f64,
    pub residual_rms: f64,
}

/// Ground-state survival fit `M0 = A0 + B0 lambda_2^N + C0 lambda_1^N` (with
/// lambda_1 held fixed) and the average infidelity per Clifford.
#[derive(Debug, Clone, Copy)]
pub struct FidelityRbFit {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
    pub lambda_2: f64,
    pub eps: f64,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RbDecayFit {
    pub leakage: LeakageRbFit,
    pub fidelity: FidelityRbFit,
}

fn distinct_count(x: &[f64]) -> usize {
    let mut sorted: Vec<f64> = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.len()
}

pub fn fit_leakage_rb(n_cliffords: &[f64], p_x1: &[f64]) -> Result<LeakageRbFit> {
    if n_cliffords.len() != p_x1.len() || distinct_count(n_cliffords) < 4 {
        return Err(Error::Fit(
            "leakage fit needs at least 4 distinct sequence lengths".into(),
        ));
    }
    let mean = p_x1.iter().sum::<f64>() / p_x1.len() as f64;
    let spread = p_x1.iter().fold(0.0f64, |m, &v| m.max((v - mean).abs()));
    if spread < 1e-9 {
        // No measurable leakage decay: the retention is flat at its mean.
        return Ok(LeakageRbFit {
            a: mean,
            b: 0.0,
            lambda_1: 1.0,
            l1: 0.0,
            l2: 0.0,
            residual_rms: 0.0,
        });
    }
    let fit = fit_exponential(n_cliffords, p_x1)?;
    Ok(LeakageRbFit {
        a: fit.a,
        b: fit.b,
        lambda_1: fit.lambda,
        l1: (1.0 - fit.a) * (1.0 - fit.lambda),
        l2: fit.a * (1.0 - fit.lambda),
        residual_rms: fit.residual_rms,
    })
}

pub fn fit_fidelity_rb(
    n_cliffords: &[f64],
    m0: &[f64],
    leakage: &LeakageRbFit,
) -> Result<FidelityRbFit> {
    if n_cliffords.len() != m0.len() || distinct_count(n_cliffords) < 4 {
        return Err(Error::Fit(
            "fidelity fit needs at least 4 distinct sequence lengths".into(),
        ));
    }
    let (a0, b0, c0, lambda_2, residual_rms) = if leakage.lambda_1 > 1.0 - 1e-9 {
        // The leakage branch is constant and would be collinear with the
        // offset; fall back to the single-exponential model.
        let fit = fit_exponential(n_cliffords, m0)?;
        (fit.a, fit.b, 0.0, fit.lambda, fit.residual_rms)
    } else {
        let fit = fit_double_exponential(n_cliffords, m0, leakage.lambda_1)?;
        (fit.a, fit.b, fit.c, fit.lambda2, fit.residual_rms)
    };
    let eps = 1.0 - ((D1 - 1.0) * lambda_2 + 1.0 - leakage.l1) / D1;
    Ok(FidelityRbFit { a0, b0, c0, lambda_2, eps, residual_rms })
}

/// Both decay fits off one data set.
pub fn fit_rb_decays(n_cliffords: &[f64], p_x1: &[f64], m0: &[f64]) -> Result<RbDecayFit> {
    let leakage = fit_leakage_rb(n_cliffords, p_x1)?;
    let fidelity = fit_fidelity_rb(n_cliffords, m0, &leakage)?;
    Ok(RbDecayFit { leakage, fidelity })
}

/// Per-CZ estimates from a reference and an interleaved fit.
#[derive(Debug, Clone, Copy)]
pub struct InterleavedEstimates {
    pub eps_cz: f64,
    pub l1_cz: f64,
}

pub fn interleaved_estimates(
    reference: &RbDecayFit,
    interleaved: &RbDecayFit,
) -> Result<InterleavedEstimates> {
    if reference.fidelity.eps >= 1.0 {
        return Err(Error::Domain(
            "reference infidelity is 1 or larger; interleaved estimate undefined".into(),
        ));
    }
    if reference.leakage.l1 >= 1.0 {
        return Err(Error::Domain(
            "reference leakage is 1 or larger; interleaved estimate undefined".into(),
        ));
    }
    Ok(InterleavedEstimates {
        eps_cz: 1.0 - (1.0 - interleaved.fidelity.eps) / (1.0 - reference.fidelity.eps),
        l1_cz: 1.0 - (1.0 - interleaved.leakage.l1) / (1.0 - reference.leakage.l1),
    })
}
