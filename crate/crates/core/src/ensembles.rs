//! Decompositions of a state parametrised by Stiefel-manifold points.
//!
//! Every decomposition `ϱ = Σ_i |ψ_i⟩⟨ψ_i|` of length `N ≥ r` arises from
//! the eigenensemble as `ψ_i = Σ_α z_{iα} e_α` with `z†z = 1_r`.

use alloc::vec::Vec;

use rand::Rng;

use crate::linalg::{ComplexMatrix, C64};
use crate::rng;
use crate::state::{EigenEnsemble, PureState};
use crate::{Error, Result};

pub const STIEFEL_TOL: f64 = 1e-12;

/// `N × r` complex matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    z: ComplexMatrix,
}

impl StiefelPoint {
    /// Checks `z†z = 1` within 1e-12.
    pub fn new(z: ComplexMatrix) -> Result<Self> {
        if z.rows() < z.cols() || z.cols() == 0 {
            return Err(Error::param("a Stiefel point needs N >= r >= 1"));
        }
        let dev = z.unitarity_deviation();
        if dev > STIEFEL_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
        Ok(Self { z })
    }

    /// `(1_r ; 0)`.
    pub fn identity_block(n: usize, r: usize) -> Self {
        assert!(n >= r && r >= 1);
        Self {
            z: ComplexMatrix::from_fn(n, r, |i, j| {
                if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    /// Ensemble length `N`.
    pub fn len(&self) -> usize {
        self.z.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.z.rows() == 0
    }

    pub fn rank(&self) -> usize {
        self.z.cols()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.z
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.z
    }

    /// Rows reordered as `out[k] = self[perm[k]]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.len());
        Self {
            z: ComplexMatrix::from_fn(self.len(), self.rank(), |i, j| self.z[(perm[i], j)]),
        }
    }
}

/// Subnormalized vectors summing (as projectors) to the source state.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoEnsemble {
    vectors: Vec<PureState>,
}

impl RhoEnsemble {
    pub fn vectors(&self) -> &[PureState] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `Σ_i |ψ_i⟩⟨ψ_i|`.
    pub fn density(&self) -> ComplexMatrix {
        let d = self.vectors.first().map_or(0, |v| v.amplitudes().len());
        self.vectors
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, v| &acc + &v.projector())
    }
}

/// `ψ_i = Σ_α z_{iα} e_α`. Zero rows give zero vectors, which are kept.
pub fn ensemble_from_stiefel(z: &StiefelPoint, ens: &EigenEnsemble) -> Result<RhoEnsemble> {
    ensemble_from_rows(z.matrix(), ens)
}

/// Same map without the orthonormality requirement (used off the
/// constraint surface).
pub fn ensemble_from_rows(z: &ComplexMatrix, ens: &EigenEnsemble) -> Result<RhoEnsemble> {
    if z.cols() != ens.rank() {
        return Err(Error::DimensionMismatch {
            expected: ens.rank(),
            found: z.cols(),
        });
    }
    let d = ens.dim_a() * ens.dim_b();
    let vectors = (0..z.rows())
        .map(|i| {
            let mut amps = alloc::vec![C64::new(0.0, 0.0); d];
            for (al, e) in ens.vectors().iter().enumerate() {
                let c = z[(i, al)];
                for (a, x) in amps.iter_mut().zip(e.amplitudes()) {
                    *a += c * x;
                }
            }
            PureState::new(ens.dim_a(), ens.dim_b(), amps)
                .expect("dimensions come from the ensemble")
        })
        .collect();
    Ok(RhoEnsemble { vectors })
}

/// `C(z) = z†z − 1_r`.
pub fn constraint_residual(z: &ComplexMatrix) -> ComplexMatrix {
    &z.adjoint().matmul(z) - &ComplexMatrix::identity(z.cols())
}

/// `GS(1_r ; v) · U`: Gram–Schmidt on the columns of the stacked matrix,
/// then a right rotation by `U ∈ U(r)`.
pub fn stiefel_from_gs(v: &ComplexMatrix, u: &ComplexMatrix) -> Result<StiefelPoint> {
    let r = v.cols();
    if u.rows() != r || u.cols() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: u.rows(),
        });
    }
    let dev = u.unitarity_deviation();
    if dev > 1e-10 {
        return Err(Error::NotUnitary { deviation: dev });
    }
    let n = r + v.rows();
    let stacked = ComplexMatrix::from_fn(n, r, |i, j| {
        if i < r {
            if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        } else {
            v[(i - r, j)]
        }
    });
    // the identity block makes the columns independent
    let (q, _) = stacked.qr_gram_schmidt()?;
    Ok(StiefelPoint { z: q.matmul(u) })
}

/// First `r` columns of an `N × N` Haar unitary.
pub fn haar_stiefel<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<StiefelPoint> {
    if r == 0 || n < r {
        return Err(Error::param("haar_stiefel needs N >= r >= 1"));
    }
    Ok(StiefelPoint {
        z: rng::haar_columns(n, r, rng),
    })
}

/// Maximal length `m²n²` of a decomposition into linearly independent
/// product vectors.
pub fn caratheodory_length(m: usize, n: usize) -> usize {
    m * m * n * n
}
