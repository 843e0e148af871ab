//! Bipartite pure and mixed states on `C^m ⊗ C^n`.
//!
//! Basis ordering is the usual Kronecker one: `|i⟩_A ⊗ |j⟩_B` sits at index
//! `i * n + j`.

use alloc::format;
use alloc::vec::Vec;

// float methods come from here in no_std builds, from std otherwise
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{self, ComplexMatrix, C64, ZERO};
use crate::{Error, Result};

/// Tolerances used when validating a [`DensityMatrix`].
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

/// Default eigenvalue cutoff when extracting an eigenensemble.
pub const DEFAULT_RANK_CUTOFF: f64 = 1e-10;

/// Which tensor factor to keep in a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Possibly subnormalized vector in `C^m ⊗ C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dim_a: usize,
    dim_b: usize,
    amps: Vec<C64>,
}

impl PureState {
    pub fn new(dim_a: usize, dim_b: usize, amps: Vec<C64>) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::param("subsystem dimensions must be positive"));
        }
        if amps.len() != dim_a * dim_b {
            return Err(Error::DimensionMismatch {
                expected: dim_a * dim_b,
                found: amps.len(),
            });
        }
        Ok(Self { dim_a, dim_b, amps })
    }

    /// Product vector `a ⊗ b`.
    pub fn product(a: &[C64], b: &[C64]) -> Self {
        Self {
            dim_a: a.len(),
            dim_b: b.len(),
            amps: linalg::kron_vec(a, b),
        }
    }

    /// Computational basis vector `|i⟩ ⊗ |j⟩`.
    pub fn basis(dim_a: usize, dim_b: usize, i: usize, j: usize) -> Self {
        let mut amps = alloc::vec![ZERO; dim_a * dim_b];
        amps[i * dim_b + j] = linalg::ONE;
        Self { dim_a, dim_b, amps }
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.amps)
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr().sqrt() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            amps: self.amps.iter().map(|&x| x * s).collect(),
        }
    }

    /// Amplitudes arranged as the `m × n` coefficient matrix `C_{ij} = ψ_{ij}`.
    pub fn coefficient_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim_a, self.dim_b, |i, j| self.amps[i * self.dim_b + j])
    }

    /// `|ψ⟩⟨ψ|` as an `mn × mn` matrix.
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amps, &self.amps)
    }

    /// Reduced (unnormalized) operator on the kept factor.
    pub fn partial_trace(&self, keep: Subsystem) -> ComplexMatrix {
        let c = self.coefficient_matrix();
        match keep {
            // σ_A = C C†
            Subsystem::A => c.matmul(&c.adjoint()),
            // σ_B = Cᵀ C̄
            Subsystem::B => c.transpose().matmul(&c.conj()),
        }
    }

    /// Applies a linear map on the full space (e.g. `U_A ⊗ U_B`).
    pub fn apply(&self, op: &ComplexMatrix) -> Result<Self> {
        if op.cols() != self.amps.len() || op.rows() != self.amps.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amps.len(),
                found: op.cols(),
            });
        }
        Ok(Self {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            amps: op.mul_vec(&self.amps),
        })
    }
}

/// Validated mixed state on `C^m ⊗ C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim_a: usize,
    dim_b: usize,
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-12), unit trace (1e-12) and positivity
    /// (eigenvalues ≥ −1e-10).
    pub fn new(dim_a: usize, dim_b: usize, mat: ComplexMatrix) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::InvalidDensityMatrix(
                "subsystem dimensions must be positive".into(),
            ));
        }
        let d = dim_a * dim_b;
        if mat.rows() != d || mat.cols() != d {
            return Err(Error::InvalidDensityMatrix(format!(
                "expected {d}x{d} matrix, found {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        let herm = mat.hermitian_deviation();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = mat.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace is {} instead of 1",
                tr.re
            )));
        }
        let min_ev = mat.hermitian_eigen().values[0];
        if min_ev < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_ev:e}"
            )));
        }
        Ok(Self { dim_a, dim_b, mat })
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn from_pure(psi: &PureState) -> Result<Self> {
        let n = psi.normalized()?;
        Self::new(psi.dim_a, psi.dim_b, n.projector())
    }

    /// Maximally mixed state `I / mn`.
    pub fn maximally_mixed(dim_a: usize, dim_b: usize) -> Self {
        let d = dim_a * dim_b;
        Self {
            dim_a,
            dim_b,
            mat: ComplexMatrix::identity(d).scale_real(1.0 / d as f64),
        }
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.mat.hermitian_eigen().values
    }

    pub fn partial_trace(&self, keep: Subsystem) -> ComplexMatrix {
        let (m, n) = (self.dim_a, self.dim_b);
        match keep {
            Subsystem::A => ComplexMatrix::from_fn(m, m, |i, k| {
                (0..n).map(|j| self.mat[(i * n + j, k * n + j)]).sum()
            }),
            Subsystem::B => ComplexMatrix::from_fn(n, n, |j, l| {
                (0..m).map(|i| self.mat[(i * n + j, i * n + l)]).sum()
            }),
        }
    }

    /// Transpose on the B factor: `(ϱ^{T_B})_{(ij),(kl)} = ϱ_{(il),(kj)}`.
    pub fn partial_transpose_b(&self) -> ComplexMatrix {
        let n = self.dim_b;
        let d = self.dim_a * n;
        ComplexMatrix::from_fn(d, d, |r, c| {
            let (i, j) = (r / n, r % n);
            let (k, l) = (c / n, c % n);
            self.mat[(i * n + l, k * n + j)]
        })
    }

    /// `(U_A ⊗ U_B) ϱ (U_A ⊗ U_B)†`.
    pub fn local_unitary(&self, ua: &ComplexMatrix, ub: &ComplexMatrix) -> Result<Self> {
        if ua.rows() != self.dim_a || ub.rows() != self.dim_b {
            return Err(Error::DimensionMismatch {
                expected: self.dim_a,
                found: ua.rows(),
            });
        }
        let u = linalg::tensor_product(ua, ub);
        let mat = u.matmul(&self.mat).matmul(&u.adjoint());
        Ok(Self {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            mat,
        })
    }
}

/// Partial trace of either a pure or a mixed state.
pub trait PartialTrace {
    fn partial_trace(&self, keep: Subsystem) -> ComplexMatrix;
}

impl PartialTrace for PureState {
    fn partial_trace(&self, keep: Subsystem) -> ComplexMatrix {
        PureState::partial_trace(self, keep)
    }
}

impl PartialTrace for DensityMatrix {
    fn partial_trace(&self, keep: Subsystem) -> ComplexMatrix {
        DensityMatrix::partial_trace(self, keep)
    }
}

pub fn partial_trace<S: PartialTrace + ?Sized>(state: &S, keep: Subsystem) -> ComplexMatrix {
    state.partial_trace(keep)
}

/// Subnormalized eigenvectors `e_α = √λ_α u_α` of a state, one per
/// eigenvalue above the rank cutoff, in descending eigenvalue order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenEnsemble {
    dim_a: usize,
    dim_b: usize,
    eigenvalues: Vec<f64>,
    vectors: Vec<PureState>,
}

impl EigenEnsemble {
    /// Wraps explicitly chosen vectors, checking `⟨e_α|e_β⟩ = λ_α δ_{αβ}`
    /// within 1e-10. Zero vectors are allowed and carry `λ = 0`.
    pub fn from_vectors(dim_a: usize, dim_b: usize, vectors: Vec<PureState>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::param("an eigenensemble needs at least one vector"));
        }
        for v in &vectors {
            if v.dim_a != dim_a || v.dim_b != dim_b {
                return Err(Error::DimensionMismatch {
                    expected: dim_a * dim_b,
                    found: v.amps.len(),
                });
            }
        }
        for (a, va) in vectors.iter().enumerate() {
            for vb in &vectors[a + 1..] {
                let ov = linalg::inner(&va.amps, &vb.amps).norm();
                if ov > 1e-10 {
                    return Err(Error::param(format!(
                        "eigenensemble vectors are not orthogonal (overlap {ov:e})"
                    )));
                }
            }
        }
        let eigenvalues = vectors.iter().map(PureState::norm_sqr).collect();
        Ok(Self {
            dim_a,
            dim_b,
            eigenvalues,
            vectors,
        })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &[PureState] {
        &self.vectors
    }

    /// `Σ_α |e_α⟩⟨e_α|`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.dim_a * self.dim_b;
        self.vectors
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, v| &acc + &v.projector())
    }
}

/// Eigenensemble of `rho`; eigenvalues ≤ `cutoff` count as zero.
pub fn eigen_ensemble(rho: &DensityMatrix, cutoff: f64) -> Result<EigenEnsemble> {
    if !(cutoff > 0.0) {
        return Err(Error::param("rank cutoff must be positive"));
    }
    let eig = rho.mat.hermitian_eigen();
    if eig.values[0] < -PSD_TOL {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: eig.values[0],
        });
    }
    let mut eigenvalues = Vec::new();
    let mut vectors = Vec::new();
    for k in (0..eig.values.len()).rev() {
        let lam = eig.values[k];
        if lam <= cutoff {
            continue;
        }
        let s = lam.sqrt();
        let amps = eig.vectors.column(k).into_iter().map(|x| x * s).collect();
        vectors.push(PureState {
            dim_a: rho.dim_a,
            dim_b: rho.dim_b,
            amps,
        });
        eigenvalues.push(lam);
    }
    Ok(EigenEnsemble {
        dim_a: rho.dim_a,
        dim_b: rho.dim_b,
        eigenvalues,
        vectors,
    })
}

/// Outcome of the positive-partial-transpose test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PptReport {
    /// Smallest eigenvalue of `ϱ^{T_B}`.
    pub min_eigenvalue: f64,
    /// `min_eigenvalue < −1e-10`.
    pub entangled: bool,
    /// True when `mn ≤ 6`, where a PPT state is guaranteed separable.
    /// Elsewhere a negative answer is inconclusive.
    pub decisive: bool,
}

pub const PPT_TOL: f64 = 1e-10;

pub fn ppt_check(rho: &DensityMatrix) -> PptReport {
    let min_eigenvalue = rho.partial_transpose_b().hermitian_eigen().values[0];
    PptReport {
        min_eigenvalue,
        entangled: min_eigenvalue < -PPT_TOL,
        decisive: rho.dim_a * rho.dim_b <= 6,
    }
}

/// True iff the partial transpose has an eigenvalue below −1e-10.
pub fn ppt_is_entangled(rho: &DensityMatrix) -> bool {
    ppt_check(rho).entangled
}

/// Random full-rank state from a normalised Wishart (Ginibre) matrix.
pub fn random_density_matrix<R: rand::Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    rng: &mut R,
) -> DensityMatrix {
    let d = dim_a * dim_b;
    let g = crate::rng::ginibre(d, d, rng);
    let w = g.matmul(&g.adjoint());
    let tr = w.trace().re;
    let mut mat = w.scale_real(1.0 / tr);
    // exact Hermitian symmetry and unit trace up to rounding
    mat = ComplexMatrix::from_fn(d, d, |i, j| 0.5 * (mat[(i, j)] + mat[(j, i)].conj()));
    DensityMatrix { dim_a, dim_b, mat }
}
