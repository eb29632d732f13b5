//! Superoperators on the two-qutrit Hilbert space in Liouville
//! (column-stacking) representation.
//!
//! Basis bookkeeping lives here and is shared by every module: product states
//! `|i j>` carry qutrit index `i` for q_M and `j` for q_H and sit at Hilbert
//! index `3 i + j`; density matrices are vectorized column by column, so
//! matrix entry `(row, col)` lands at vector index `col * 9 + row`. A unitary
//! `U` acts on vectorized states as `conj(U) (x) U`, with the first Kronecker
//! factor indexing coarsely.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, dagger, eigh, eye, kron, matmul, matvec, CMat, CVec, C_ZERO};

pub const QUTRIT_DIM: usize = 3;
pub const HILBERT_DIM: usize = 9;
pub const LIOUVILLE_DIM: usize = 81;

/// Hilbert index of the product state `|i j>` = (q_M level i, q_H level j).
pub fn basis_index(i: usize, j: usize) -> usize {
    QUTRIT_DIM * i + j
}

/// The computational subspace X1: both transmons in {0, 1}.
pub const X1_INDICES: [usize; 4] = [0, 1, 3, 4];

/// The leakage subspace X2: at least one transmon in level 2.
pub const X2_INDICES: [usize; 5] = [2, 5, 6, 7, 8];

/// Column-stacking vector index of density-matrix entry `(row, col)`.
pub fn vec_index(row: usize, col: usize) -> usize {
    col * HILBERT_DIM + row
}

/// Flatten a 9x9 density matrix column by column.
pub fn vec_density(rho: &CMat) -> CVec {
    let mut v = CVec::zeros(LIOUVILLE_DIM);
    for col in 0..HILBERT_DIM {
        for row in 0..HILBERT_DIM {
            v[vec_index(row, col)] = rho[[row, col]];
        }
    }
    v
}

/// Inverse of [`vec_density`].
pub fn unvec_density(v: &CVec) -> CMat {
    let mut rho = CMat::zeros((HILBERT_DIM, HILBERT_DIM));
    for col in 0..HILBERT_DIM {
        for row in 0..HILBERT_DIM {
            rho[[row, col]] = v[vec_index(row, col)];
        }
    }
    rho
}

/// Act with a single-qutrit operator on q_M (identity on q_H).
pub fn embed_m(op: &CMat) -> CMat {
    kron(op, &eye(QUTRIT_DIM))
}

/// Act with a single-qutrit operator on q_H (identity on q_M).
pub fn embed_h(op: &CMat) -> CMat {
    kron(&eye(QUTRIT_DIM), op)
}

/// Quantum channel on the two-qutrit space, stored as an 81x81 matrix acting
/// on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub matrix: CMat,
}

impl Superoperator {
    pub fn identity() -> Self {
        Superoperator { matrix: eye(LIOUVILLE_DIM) }
    }

    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.dim() != (LIOUVILLE_DIM, LIOUVILLE_DIM) {
            return Err(Error::Domain(format!(
                "superoperator must be {LIOUVILLE_DIM}x{LIOUVILLE_DIM}, got {:?}",
                matrix.dim()
            )));
        }
        Ok(Superoperator { matrix })
    }

    /// Lift a Hilbert-space unitary: `rho -> U rho U^dag` becomes
    /// `conj(U) (x) U` on column-stacked states.
    pub fn from_unitary(u: &CMat) -> Self {
        let conj_u = u.mapv(|z| z.conj());
        Superoperator { matrix: kron(&conj_u, u) }
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        unvec_density(&matvec(&self.matrix, &vec_density(rho)))
    }

    pub fn apply_vec(&self, v: &CVec) -> CVec {
        matvec(&self.matrix, v)
    }

    /// `self` composed after `earlier`: the returned map applies `earlier`
    /// first.
    pub fn compose(&self, earlier: &Superoperator) -> Superoperator {
        Superoperator { matrix: matmul(&self.matrix, &earlier.matrix) }
    }

    /// Largest violation of trace preservation over all basis inputs: the
    /// trace functional must be a left fixed point of the matrix.
    pub fn trace_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for col in 0..LIOUVILLE_DIM {
            let mut acc = C_ZERO;
            for r in 0..HILBERT_DIM {
                acc += self.matrix[[vec_index(r, r), col]];
            }
            let expected = if col % (HILBERT_DIM + 1) == 0 { 1.0 } else { 0.0 };
            worst = worst.max((acc - c(expected, 0.0)).norm());
        }
        worst
    }

    /// Choi matrix with blocks indexed by the input basis:
    /// `Choi[i*9+r, j*9+c] = P(|i><j|)_{rc}`.
    pub fn choi(&self) -> CMat {
        let mut choi = CMat::zeros((LIOUVILLE_DIM, LIOUVILLE_DIM));
        for i in 0..HILBERT_DIM {
            for j in 0..HILBERT_DIM {
                let col_in = vec_index(i, j);
                for r in 0..HILBERT_DIM {
                    for col in 0..HILBERT_DIM {
                        choi[[i * HILBERT_DIM + r, j * HILBERT_DIM + col]] =
                            self.matrix[[vec_index(r, col), col_in]];
                    }
                }
            }
        }
        choi
    }

    /// Minimum eigenvalue of the Choi matrix; complete positivity up to
    /// numerical tolerance means this is bounded below by a tiny negative
    /// number.
    pub fn choi_min_eigenvalue(&self) -> Result<f64> {
        let choi = self.choi();
        let herm = hermitize(&choi);
        let (vals, _) = eigh(&herm)?;
        Ok(vals.iter().cloned().fold(f64::INFINITY, f64::min))
    }

    /// Kraus operators from the Choi eigendecomposition. Eigenvalues in
    /// `[-tol, 0)` are clipped to zero; anything more negative is an error.
    pub fn kraus_operators(&self, tol: f64) -> Result<Vec<CMat>> {
        let choi = hermitize(&self.choi());
        let (vals, vecs) = eigh(&choi)?;
        let mut ops = Vec::new();
        for (k, &lam) in vals.iter().enumerate() {
            if lam < -tol {
                return Err(Error::Numerical(format!(
                    "Choi eigenvalue {lam:.3e} below the positivity tolerance -{tol:.1e}"
                )));
            }
            if lam < tol {
                continue;
            }
            let scale = lam.sqrt();
            let mut op = CMat::zeros((HILBERT_DIM, HILBERT_DIM));
            for i in 0..HILBERT_DIM {
                for r in 0..HILBERT_DIM {
                    op[[r, i]] = vecs[[i * HILBERT_DIM + r, k]] * scale;
                }
            }
            ops.push(op);
        }
        Ok(ops)
    }
}

fn hermitize(m: &CMat) -> CMat {
    let md = dagger(m);
    Array2::from_shape_fn(m.dim(), |(i, j)| (m[[i, j]] + md[[i, j]]) * Complex64::new(0.5, 0.0))
}
