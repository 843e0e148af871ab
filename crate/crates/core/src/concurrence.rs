//! Generalized concurrence squared and its skew-symmetric form.
//!
//! For `ψ ∈ C^m ⊗ C^n` the concurrence squared is
//! `c²(ψ) = ‖ψ‖⁴ − tr σ_A²` with `σ_A = tr_B |ψ⟩⟨ψ|`. It is a degree-four
//! homogeneous polynomial that vanishes exactly on product vectors.
//!
//! Writing `Π = (1 − SWAP)/2` for the antisymmetriser on two copies of a
//! factor gives `c²(ψ) = 2 ⟨ψ⊗ψ| Π_m ⊗ Π_n |ψ⊗ψ⟩`, i.e.
//! `c²(ψ) = 2 Σ_{a,b} |⟨ζ_a ⊗ ζ̃_b | ψ ⊗ ψ⟩|²` for orthonormal bases `{ζ_a}`
//! of `C^m ∧ C^m` and `{ζ̃_b}` of `C^n ∧ C^n`. The factor 2 is
//! [`SKEW_PREFACTOR`].
//!
//! The inner product pairs the two A factors and the two B factors, so the
//! copy `ψ^{AB} ⊗ ψ^{A'B'}` is first permuted into `AA' ⊗ BB'` order
//! ([`reorder_to_aa_bb`]). For the singlet `Ψ₋ = (|01⟩ − |10⟩)/√2` the only
//! nonzero amplitudes of `Ψ₋ ⊗ Ψ₋` are at `|0101⟩, |1010⟩` (+1/2) and
//! `|0110⟩, |1001⟩` (−1/2); after reordering these become `|00⟩|11⟩`,
//! `|11⟩|00⟩` (+1/2) and `|01⟩|10⟩`, `|10⟩|01⟩` (−1/2), whose overlap with
//! `ζ ⊗ ζ` is `1/2`.

use alloc::vec::Vec;

use crate::linalg::{self, ComplexMatrix, C64, ZERO};
use crate::state::{EigenEnsemble, PureState, Subsystem};
use crate::{Error, Result};

/// Calibration constant `κ` in `c² = κ Σ |⟨ζ_a ⊗ ζ̃_b|ψ ⊗ ψ⟩|²`.
pub const SKEW_PREFACTOR: f64 = 2.0;

/// Default tolerance on `c²/‖ψ‖⁴` for [`is_product`].
pub const DEFAULT_PRODUCT_TOL: f64 = 1e-9;

/// `‖ψ‖⁴ − tr[(tr_B |ψ⟩⟨ψ|)²]`, clamped at zero.
pub fn concurrence_sq(psi: &PureState) -> f64 {
    let n2 = psi.norm_sqr();
    let sigma = psi.partial_trace(Subsystem::A);
    // σ is Hermitian, so tr σ² = Σ |σ_ij|²
    let purity: f64 = sigma.as_slice().iter().map(|z| z.norm_sqr()).sum();
    (n2 * n2 - purity).max(0.0)
}

/// Orthonormal basis of the antisymmetric subspace `C^m ∧ C^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewBasis {
    dim: usize,
    vectors: Vec<Vec<C64>>,
}

impl SkewBasis {
    /// `{(|ij⟩ − |ji⟩)/√2 : i < j}` in lexicographic `(i, j)` order.
    pub fn canonical(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::param(
                "antisymmetric subspace needs dimension at least 2",
            ));
        }
        Ok(Self::canonical_unchecked(m))
    }

    /// Empty for `m < 2`.
    pub(crate) fn canonical_unchecked(m: usize) -> Self {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let mut vectors = Vec::with_capacity(m * m.saturating_sub(1) / 2);
        for i in 0..m {
            for j in i + 1..m {
                let mut v = alloc::vec![ZERO; m * m];
                v[i * m + j] = C64::new(s, 0.0);
                v[j * m + i] = C64::new(-s, 0.0);
                vectors.push(v);
            }
        }
        Self { dim: m, vectors }
    }

    /// Custom basis; each vector must be antisymmetric under swapping the
    /// two factors, and the set orthonormal, within 1e-12.
    pub fn from_vectors(dim: usize, vectors: Vec<Vec<C64>>) -> Result<Self> {
        for v in &vectors {
            if v.len() != dim * dim {
                return Err(Error::DimensionMismatch {
                    expected: dim * dim,
                    found: v.len(),
                });
            }
            for i in 0..dim {
                for j in 0..dim {
                    if (v[i * dim + j] + v[j * dim + i]).norm() > 1e-12 {
                        return Err(Error::param("skew basis vector is not antisymmetric"));
                    }
                }
            }
        }
        for (a, va) in vectors.iter().enumerate() {
            for (b, vb) in vectors.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                if (linalg::inner(va, vb) - C64::new(want, 0.0)).norm() > 1e-12 {
                    return Err(Error::param("skew basis is not orthonormal"));
                }
            }
        }
        Ok(Self { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }
}

pub fn skew_basis(m: usize) -> Result<SkewBasis> {
    SkewBasis::canonical(m)
}

/// Permutes a vector on `(A B) ⊗ (A' B')` into `(A A') ⊗ (B B')` order.
pub fn reorder_to_aa_bb(v: &[C64], m: usize, n: usize) -> Vec<C64> {
    let d = m * n;
    assert_eq!(
        v.len(),
        d * d,
        "reorder: expected a vector on two copies of C^m ⊗ C^n"
    );
    let mut out = alloc::vec![ZERO; d * d];
    for a in 0..m {
        for b in 0..n {
            for a2 in 0..m {
                for b2 in 0..n {
                    let src = (a * n + b) * d + a2 * n + b2;
                    let dst = (a * m + a2) * (n * n) + b * n + b2;
                    out[dst] = v[src];
                }
            }
        }
    }
    out
}

/// `⟨ζ_a ⊗ ζ̃_b | reorder(u ⊗ v)⟩` for every `(a, b)`, row-major in `a`.
fn skew_overlaps(u: &PureState, v: &PureState, ba: &SkewBasis, bb: &SkewBasis) -> Vec<C64> {
    let (m, n) = (u.dim_a(), u.dim_b());
    let uv = reorder_to_aa_bb(&linalg::kron_vec(u.amplitudes(), v.amplitudes()), m, n);
    let mut out = Vec::with_capacity(ba.len() * bb.len());
    for za in ba.vectors() {
        for zb in bb.vectors() {
            let mut acc = ZERO;
            for (ia, &ca) in za.iter().enumerate() {
                if ca == ZERO {
                    continue;
                }
                let row = &uv[ia * n * n..(ia + 1) * n * n];
                let s: C64 = zb.iter().zip(row).map(|(cb, x)| cb.conj() * x).sum();
                acc += ca.conj() * s;
            }
            out.push(acc);
        }
    }
    out
}

/// `κ Σ_{a,b} |⟨ζ_a ⊗ ζ̃_b | ψ ⊗ ψ⟩|²`; equals [`concurrence_sq`].
pub fn concurrence_sq_skew(
    psi: &PureState,
    basis_a: &SkewBasis,
    basis_b: &SkewBasis,
) -> Result<f64> {
    if basis_a.dim() != psi.dim_a() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim_a(),
            found: basis_a.dim(),
        });
    }
    if basis_b.dim() != psi.dim_b() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim_b(),
            found: basis_b.dim(),
        });
    }
    let s: f64 = skew_overlaps(psi, psi, basis_a, basis_b)
        .iter()
        .map(|z| z.norm_sqr())
        .sum();
    Ok(SKEW_PREFACTOR * s)
}

/// Normalized concurrence test: `c²(ψ)/‖ψ‖⁴ < tol`.
pub fn is_product(psi: &PureState, tol: f64) -> Result<bool> {
    let n2 = psi.norm_sqr();
    if n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(concurrence_sq(psi) / (n2 * n2) < tol)
}

/// `det(σ_A − 1)` for a normalized `ψ`; zero exactly for product vectors.
pub fn det_product_test(psi: &PureState) -> Result<f64> {
    if !psi.is_normalized(1e-10) {
        return Err(Error::param("det_product_test needs a normalized state"));
    }
    let eig = psi.partial_trace(Subsystem::A).hermitian_eigen();
    Ok(eig.values.iter().map(|l| l - 1.0).product())
}

/// The `d₁·d₂` symmetric `r × r` matrices
/// `h^{ab}_{αβ} = ⟨ζ_a ⊗ ζ̃_b | e_α ⊗ e_β⟩` of an eigenensemble.
///
/// With them, `c²(Σ_α z_α e_α) = κ Σ_{ab} |zᵀ h^{ab} z|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct HMatrixSet {
    rank: usize,
    d1: usize,
    d2: usize,
    matrices: Vec<ComplexMatrix>,
}

impl HMatrixSet {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    /// Matrices in row-major `(a, b)` order.
    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }

    pub fn get(&self, a: usize, b: usize) -> &ComplexMatrix {
        &self.matrices[a * self.d2 + b]
    }

    /// `κ Σ_{ab} |zᵀ h^{ab} z|²` for one coefficient row `z`.
    pub fn row_energy(&self, z: &[C64]) -> f64 {
        let s: f64 = self
            .matrices
            .iter()
            .map(|h| {
                let mut q = ZERO;
                for (al, &za) in z.iter().enumerate() {
                    if za == ZERO {
                        continue;
                    }
                    let hrow = h.row(al);
                    let inner: C64 = hrow.iter().zip(z).map(|(x, y)| x * y).sum();
                    q += za * inner;
                }
                q.norm_sqr()
            })
            .sum();
        SKEW_PREFACTOR * s
    }
}

pub fn h_matrices(ens: &EigenEnsemble) -> HMatrixSet {
    let ba = SkewBasis::canonical_unchecked(ens.dim_a());
    let bb = SkewBasis::canonical_unchecked(ens.dim_b());
    h_matrices_in(ens, &ba, &bb).expect("canonical bases match the ensemble dimensions")
}

/// Same as [`h_matrices`] with caller-chosen skew bases.
pub fn h_matrices_in(
    ens: &EigenEnsemble,
    basis_a: &SkewBasis,
    basis_b: &SkewBasis,
) -> Result<HMatrixSet> {
    if basis_a.dim() != ens.dim_a() || basis_b.dim() != ens.dim_b() {
        return Err(Error::DimensionMismatch {
            expected: ens.dim_a(),
            found: basis_a.dim(),
        });
    }
    let r = ens.rank();
    let (d1, d2) = (basis_a.len(), basis_b.len());
    let mut matrices = alloc::vec![ComplexMatrix::zeros(r, r); d1 * d2];
    let vs = ens.vectors();
    for al in 0..r {
        for be in al..r {
            let ov = skew_overlaps(&vs[al], &vs[be], basis_a, basis_b);
            for (k, &x) in ov.iter().enumerate() {
                matrices[k][(al, be)] = x;
                matrices[k][(be, al)] = x;
            }
        }
    }
    Ok(HMatrixSet {
        rank: r,
        d1,
        d2,
        matrices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::werner::{singlet, werner_eigenensemble};
    use approx::assert_relative_eq;

    fn schmidt(theta: f64) -> PureState {
        let (s, c) = (theta.sin(), theta.cos());
        PureState::new(
            2,
            2,
            alloc::vec![C64::new(c, 0.0), ZERO, ZERO, C64::new(s, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn concurrence_examples() {
        assert_eq!(concurrence_sq(&PureState::basis(2, 2, 0, 0)), 0.0);
        assert_relative_eq!(concurrence_sq(&singlet()), 0.5, epsilon = 1e-15);
        let p: f64 = 0.37;
        let scaled = singlet().scaled(C64::new(p.sqrt(), 0.0));
        assert_relative_eq!(concurrence_sq(&scaled), p * p * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn skew_form_examples() {
        let b2 = skew_basis(2).unwrap();
        assert_eq!(
            concurrence_sq_skew(&PureState::basis(2, 2, 0, 0), &b2, &b2).unwrap(),
            0.0
        );
        let ov = skew_overlaps(&singlet(), &singlet(), &b2, &b2);
        assert_eq!(ov.len(), 1);
        assert_relative_eq!(ov[0].norm_sqr(), 0.25, epsilon = 1e-15);
        assert_relative_eq!(
            concurrence_sq_skew(&singlet(), &b2, &b2).unwrap(),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn skew_form_dimension_checks() {
        let b3 = skew_basis(3).unwrap();
        let b2 = skew_basis(2).unwrap();
        assert!(concurrence_sq_skew(&singlet(), &b3, &b2).is_err());
    }

    #[test]
    fn reorder_singlet_pair() {
        let s = singlet();
        let v = reorder_to_aa_bb(&linalg::kron_vec(s.amplitudes(), s.amplitudes()), 2, 2);
        // |00⟩_{AA'} |11⟩_{BB'} at index 0*4 + 3
        assert_relative_eq!(v[3].re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(v[12].re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(v[6].re, -0.5, epsilon = 1e-15);
        assert_relative_eq!(v[9].re, -0.5, epsilon = 1e-15);
        let nonzero = v.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn product_tests() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let plus_one = PureState::product(&[C64::new(s, 0.0), C64::new(s, 0.0)], &[ZERO, ONE]);
        assert!(is_product(&plus_one, DEFAULT_PRODUCT_TOL).unwrap());
        assert!(!is_product(&singlet(), DEFAULT_PRODUCT_TOL).unwrap());
        let near = schmidt(0.01);
        let want = (0.02f64).sin().powi(2) / 2.0;
        assert_relative_eq!(concurrence_sq(&near), want, max_relative = 1e-12);
        assert!(!is_product(&near, 1e-12).unwrap());
        let zero = PureState::new(2, 2, alloc::vec![ZERO; 4]).unwrap();
        assert_eq!(is_product(&zero, 1e-9), Err(Error::ZeroVector));
    }

    #[test]
    fn determinant_test() {
        assert_relative_eq!(
            det_product_test(&PureState::basis(2, 2, 0, 0)).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(det_product_test(&singlet()).unwrap(), 0.25, epsilon = 1e-15);
        assert!(det_product_test(&singlet().scaled(C64::new(2.0, 0.0))).is_err());
    }

    #[test]
    fn skew_basis_shapes() {
        let b2 = skew_basis(2).unwrap();
        assert_eq!(b2.len(), 1);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(
            b2.vectors()[0],
            alloc::vec![ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO]
        );
        assert_eq!(skew_basis(3).unwrap().len(), 3);
        let b4 = skew_basis(4).unwrap();
        assert_eq!(b4.len(), 6);
        assert!(SkewBasis::from_vectors(4, b4.vectors().to_vec()).is_ok());
        assert!(skew_basis(1).is_err());
        let sym = alloc::vec![alloc::vec![ZERO, ONE, ONE, ZERO]];
        assert!(SkewBasis::from_vectors(2, sym).is_err());
    }

    #[test]
    fn werner_h_matrix() {
        for p in [0.1, 0.5, 0.9, 1.0] {
            let h = h_matrices(&werner_eigenensemble(p).unwrap());
            assert_eq!((h.d1(), h.d2(), h.rank()), (1, 1, 4));
            let want =
                ComplexMatrix::from_real_diag(&[(4.0 - 3.0 * p) / 8.0, p / 8.0, p / 8.0, p / 8.0]);
            assert!(h.get(0, 0).max_abs_diff(&want) < 1e-15, "p = {p}");
        }
    }

    #[test]
    fn product_eigenvector_has_zero_h() {
        let ens =
            EigenEnsemble::from_vectors(2, 2, alloc::vec![PureState::basis(2, 2, 0, 0)]).unwrap();
        let h = h_matrices(&ens);
        assert_eq!(h.get(0, 0), &ComplexMatrix::zeros(1, 1));
    }
}
