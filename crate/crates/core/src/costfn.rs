//! The energy `E_ϱ(z) = Σ_i c²(ψ_i)` on decomposition space.
//!
//! Two equivalent representations are kept. The rank-4 cost tensor
//! `E_{αβμν} = κ ⟨e_α ⊗ e_β| Π_m ⊗ Π_n |e_μ ⊗ e_ν⟩` (with the factor
//! reordering of [`crate::concurrence`]) gives
//! `E(z) = Σ_i Σ z̄_{iα} z̄_{iβ} E_{αβμν} z_{iμ} z_{iν}`, and the factored
//! form `κ Σ_i Σ_{ab} |z_iᵀ h^{ab} z_i|²` is what the samplers use. The
//! constant `κ = 2` makes both agree with `c²` exactly.

use alloc::vec::Vec;

use crate::concurrence::{self, HMatrixSet, SKEW_PREFACTOR};
use crate::linalg::{self, ComplexMatrix, C64, ZERO};
use crate::state::EigenEnsemble;
use crate::{Error, Result};

/// Cost operator of a fixed eigenensemble.
#[derive(Debug, Clone)]
pub struct CostOperator {
    rank: usize,
    tensor: Vec<C64>,
    hset: HMatrixSet,
}

impl CostOperator {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn h_set(&self) -> &HMatrixSet {
        &self.hset
    }

    /// `E_{αβμν}`.
    #[inline]
    pub fn tensor(&self, al: usize, be: usize, mu: usize, nu: usize) -> C64 {
        let r = self.rank;
        self.tensor[((al * r + be) * r + mu) * r + nu]
    }

    /// One-particle energy `c²(Σ_α z_α e_α)` via the factored form.
    pub fn row_energy(&self, z: &[C64]) -> f64 {
        self.hset.row_energy(z)
    }

    /// One-particle energy from the tensor.
    pub fn row_energy_tensor(&self, z: &[C64]) -> f64 {
        let r = self.rank;
        let pairs: Vec<C64> = (0..r * r).map(|k| z[k / r] * z[k % r]).collect();
        let mut acc = ZERO;
        for (ab, u) in pairs.iter().enumerate() {
            if *u == ZERO {
                continue;
            }
            let row = &self.tensor[ab * r * r..(ab + 1) * r * r];
            let s: C64 = row.iter().zip(&pairs).map(|(e, v)| e * v).sum();
            acc += u.conj() * s;
        }
        acc.re
    }
}

/// Builds the cost tensor from the antisymmetric projectors directly and
/// the factored `h` matrices alongside.
pub fn cost_operator(ens: &EigenEnsemble) -> CostOperator {
    let (m, n) = (ens.dim_a(), ens.dim_b());
    let r = ens.rank();
    let vs = ens.vectors();

    // w_{αβ} = reorder(e_α ⊗ e_β) on AA' ⊗ BB'
    let w: Vec<Vec<C64>> = (0..r * r)
        .map(|k| {
            let e = linalg::kron_vec(vs[k / r].amplitudes(), vs[k % r].amplitudes());
            concurrence::reorder_to_aa_bb(&e, m, n)
        })
        .collect();
    let pw: Vec<Vec<C64>> = w.iter().map(|v| apply_skew_projectors(v, m, n)).collect();

    let mut raw = alloc::vec![ZERO; r * r * r * r];
    for ab in 0..r * r {
        for mn in 0..r * r {
            raw[ab * r * r + mn] = linalg::inner(&w[ab], &pw[mn]) * SKEW_PREFACTOR;
        }
    }
    // symmetrise in (α,β) and in (μ,ν)
    let idx = |a: usize, b: usize, c: usize, d: usize| ((a * r + b) * r + c) * r + d;
    let mut tensor = alloc::vec![ZERO; raw.len()];
    for a in 0..r {
        for b in 0..r {
            for c in 0..r {
                for d in 0..r {
                    tensor[idx(a, b, c, d)] = 0.25
                        * (raw[idx(a, b, c, d)]
                            + raw[idx(b, a, c, d)]
                            + raw[idx(a, b, d, c)]
                            + raw[idx(b, a, d, c)]);
                }
            }
        }
    }
    CostOperator {
        rank: r,
        tensor,
        hset: concurrence::h_matrices(ens),
    }
}

/// `(Π_m ⊗ Π_n) v` for `v` on `C^m⊗C^m ⊗ C^n⊗C^n`, `Π = (1 − SWAP)/2`.
fn apply_skew_projectors(v: &[C64], m: usize, n: usize) -> Vec<C64> {
    let at = |a: usize, a2: usize, b: usize, b2: usize| v[(a * m + a2) * n * n + b * n + b2];
    let mut out = alloc::vec![ZERO; v.len()];
    for a in 0..m {
        for a2 in 0..m {
            for b in 0..n {
                for b2 in 0..n {
                    out[(a * m + a2) * n * n + b * n + b2] = 0.25
                        * (at(a, a2, b, b2) - at(a2, a, b, b2) - at(a, a2, b2, b)
                            + at(a2, a, b2, b));
                }
            }
        }
    }
    out
}

fn check_cols(z: &ComplexMatrix, r: usize) -> Result<()> {
    if z.cols() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: z.cols(),
        });
    }
    Ok(())
}

/// `E_ϱ(z)` summed over the rows of `z`, evaluated with the rank-4 tensor.
pub fn energy(z: &ComplexMatrix, cop: &CostOperator) -> Result<f64> {
    check_cols(z, cop.rank)?;
    Ok((0..z.rows()).map(|i| cop.row_energy_tensor(z.row(i))).sum())
}

/// `κ Σ_i Σ_{ab} |z_iᵀ h^{ab} z_i|²`.
pub fn energy_via_h(z: &ComplexMatrix, hset: &HMatrixSet) -> Result<f64> {
    check_cols(z, hset.rank())?;
    Ok((0..z.rows()).map(|i| hset.row_energy(z.row(i))).sum())
}

/// Hermitian, invertible matrix of Lagrange multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeMultipliers {
    omega: ComplexMatrix,
}

impl LagrangeMultipliers {
    pub fn new(omega: ComplexMatrix) -> Result<Self> {
        let dev = omega.hermitian_deviation();
        if dev > 1e-12 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let eig = omega.hermitian_eigen();
        let smallest = eig.values.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        if smallest <= 1e-300
            || smallest <= eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs())) * 1e-15
        {
            return Err(Error::Singular);
        }
        Ok(Self { omega })
    }

    pub fn from_real_diag(d: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diag(d))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.omega
    }

    pub fn rank(&self) -> usize {
        self.omega.rows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.omega.hermitian_eigen().values[0]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue() > 0.0
    }
}

/// `E_ϱ(z) + Σ_{αβ} ω_{αβ} C_{αβ}(z)` with `C = z†z − 1`.
///
/// The constraint term equals `Σ_i ⟨z_i|ω z_i⟩ − tr ω`, the form that
/// enters the one-particle partition function.
pub fn full_hamiltonian(
    z: &ComplexMatrix,
    cop: &CostOperator,
    lm: &LagrangeMultipliers,
) -> Result<f64> {
    check_cols(z, cop.rank)?;
    if lm.rank() != cop.rank {
        return Err(Error::DimensionMismatch {
            expected: cop.rank,
            found: lm.rank(),
        });
    }
    let e = energy_via_h(z, &cop.hset)?;
    let w = &lm.omega;
    let mut quad = 0.0;
    for i in 0..z.rows() {
        let zi = z.row(i);
        let wz = w.mul_vec(zi);
        quad += linalg::inner(zi, &wz).re;
    }
    Ok(e + quad - w.trace().re)
}
