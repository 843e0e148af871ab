//! Two-qubit Werner and Bell-diagonal states, and the one-particle
//! partition function of the Werner family reduced to a single quadrature.
//!
//! # Conventions
//!
//! `W(p) = (1−p)|Ψ₋⟩⟨Ψ₋| + (p/4)·1`. Its fixed eigenensemble is
//! `e₁ = √(1−3p/4) Ψ₋`, `e₂ = (√p/2) i Ψ₊`, `e₃ = (√p/2) i Φ₋`,
//! `e₄ = (√p/2) Φ₊`; the phases make `h(p) = ⅛ diag(4−3p, p, p, p)` real.
//!
//! The inverse temperature `β` used throughout this module multiplies
//! `|(4−3p)z₁² + p z₂² + p z₃² + p z₄²|²` directly. Since the energy of a
//! row is `|…|²/32`, this `β` is 1/32 of the canonical `β` used by
//! [`crate::statmech`]. After the Hubbard–Stratonovich reduction,
//!
//! ```text
//! Z₁ = π⁴ / (4s det h) · exp(tr ω′h) · ∫₀^∞ dx e^{−x/4s} / √det(x + ω′ω̄′),   s = 64β,
//! ```
//!
//! with `ω′ = h^{-1/2} ω h^{-1/2}`. The restricted multipliers
//! `ω′ = diag(γ, λ, λ, λ)` give `det(x + ω′²) = (x+γ²)(x+λ²)³`.

use alloc::vec::Vec;

// float methods come from here in no_std builds, from std otherwise
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::concurrence;
use crate::linalg::{ComplexMatrix, C64, I, ONE, ZERO};
use crate::optimize::{self, NelderMeadOptions, NewtonOptions};
use crate::quad::{self, QuadOptions};
use crate::rng::stream_rng;
use crate::state::{DensityMatrix, EigenEnsemble, PureState};
use crate::{Error, Result};

/// `K` in `E₁(z) = K |(4−3p)z₁² + p z₂² + p z₃² + p z₄²|²`.
pub const CLOSED_FORM_PREFACTOR: f64 = 1.0 / 32.0;
/// `s = 64β` in the quadrature.
pub const HS_SCALE: f64 = 64.0;
/// Canonical `β` per unit of this module's `β`.
pub const CANONICAL_BETA_PER_BETA: f64 = 1.0 / CLOSED_FORM_PREFACTOR;

pub const DEFAULT_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_RESTARTS: usize = 16;
pub const DEFAULT_SADDLE_TOL: f64 = 1e-12;
pub const INTERIOR_MARGIN: f64 = 1e-3;

// log-parameter box for the saddle search
const LN_MIN: f64 = -20.0;
const LN_MAX: f64 = 20.0;

fn r2() -> f64 {
    core::f64::consts::FRAC_1_SQRT_2
}

/// `[Ψ₋, Ψ₊, Φ₋, Φ₊]`.
pub fn bell_basis() -> [PureState; 4] {
    let h = C64::new(r2(), 0.0);
    let v = |a: [f64; 4]| {
        PureState::new(2, 2, a.iter().map(|&x| h * x).collect()).expect("four amplitudes")
    };
    [
        v([0.0, 1.0, -1.0, 0.0]),
        v([0.0, 1.0, 1.0, 0.0]),
        v([1.0, 0.0, 0.0, -1.0]),
        v([1.0, 0.0, 0.0, 1.0]),
    ]
}

/// `Ψ₋ = (|01⟩ − |10⟩)/√2`.
pub fn singlet() -> PureState {
    let [psi_m, ..] = bell_basis();
    psi_m
}

/// Werner parameter `p ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WernerParams {
    p: f64,
}

impl WernerParams {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(alloc::format!(
                "Werner parameter p = {p} is outside [0, 1]"
            )));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The reduced pipeline excludes the pure state `p = 0`.
    pub fn require_mixed(&self) -> Result<f64> {
        if self.p > 0.0 {
            Ok(self.p)
        } else {
            Err(Error::param(
                "p = 0 is a pure state; the reduced pipeline needs p > 0",
            ))
        }
    }
}

pub fn werner_state(p: f64) -> Result<DensityMatrix> {
    let p = WernerParams::new(p)?.p();
    let proj = singlet().projector().scale_real(1.0 - p);
    let mat = &proj + &ComplexMatrix::identity(4).scale_real(p / 4.0);
    DensityMatrix::new(2, 2, mat)
}

fn check_simplex(q: &[f64; 4]) -> Result<()> {
    if q.iter().any(|&x| !(x >= 0.0)) || (q.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::param(
            "Bell-diagonal weights must be non-negative and sum to 1",
        ));
    }
    Ok(())
}

/// `Σ_α q_α |B_α⟩⟨B_α|` over `[Ψ₋, Ψ₊, Φ₋, Φ₊]`.
pub fn bell_diagonal_state(q: [f64; 4]) -> Result<DensityMatrix> {
    check_simplex(&q)?;
    let mat = bell_basis()
        .iter()
        .zip(q)
        .fold(ComplexMatrix::zeros(4, 4), |acc, (b, w)| {
            &acc + &b.projector().scale_real(w)
        });
    DensityMatrix::new(2, 2, mat)
}

/// `√q_α · (1, i, i, 1)_α · B_α`; zero weights give zero vectors, kept in
/// place so the index of each Bell state is stable.
pub fn bell_diagonal_eigenensemble(q: [f64; 4]) -> Result<EigenEnsemble> {
    check_simplex(&q)?;
    let phases = [ONE, I, I, ONE];
    let vs = bell_basis()
        .iter()
        .zip(q)
        .zip(phases)
        .map(|((b, w), ph)| b.scaled(ph * w.sqrt()))
        .collect();
    EigenEnsemble::from_vectors(2, 2, vs)
}

/// The fixed eigenensemble of `W(p)`, `p ∈ (0, 1]`.
pub fn werner_eigenensemble(p: f64) -> Result<EigenEnsemble> {
    let p = WernerParams::new(p)?.require_mixed()?;
    bell_diagonal_eigenensemble(werner_weights(p))
}

fn werner_weights(p: f64) -> [f64; 4] {
    [1.0 - 0.75 * p, 0.25 * p, 0.25 * p, 0.25 * p]
}

/// `h(p) = ⅛ diag(4−3p, p, p, p)`.
pub fn h_matrix(p: f64) -> Result<ComplexMatrix> {
    let p = WernerParams::new(p)?.p();
    Ok(ComplexMatrix::from_real_diag(&h_diag(p)))
}

fn h_diag(p: f64) -> [f64; 4] {
    [(4.0 - 3.0 * p) / 8.0, p / 8.0, p / 8.0, p / 8.0]
}

/// `h` of a Bell-diagonal state, computed from its eigenensemble.
pub fn bell_diagonal_h(q: [f64; 4]) -> Result<ComplexMatrix> {
    let ens = bell_diagonal_eigenensemble(q)?;
    Ok(concurrence::h_matrices(&ens).matrices()[0].clone())
}

/// `|(4−3p)z₁² + p z₂² + p z₃² + p z₄²|² / 32`, the concurrence squared of
/// `Σ_α z_α e_α`.
pub fn energy_closed_form(z: &[C64; 4], p: f64) -> f64 {
    let poly = z[0] * z[0] * (4.0 - 3.0 * p) + (z[1] * z[1] + z[2] * z[2] + z[3] * z[3]) * p;
    CLOSED_FORM_PREFACTOR * poly.norm_sqr()
}

fn check_pipeline_p(p: f64) -> Result<f64> {
    WernerParams::new(p)?.require_mixed()
}

fn check_omega4(omega: &ComplexMatrix) -> Result<()> {
    if omega.rows() != 4 || omega.cols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: omega.rows(),
        });
    }
    Ok(())
}

/// Determinant of the `8 × 8` matrix `[[ω, −2is h], [−2is̄ h, ω̄]]`,
/// evaluated directly.
pub fn det_m(s: C64, omega: &ComplexMatrix, p: f64) -> Result<C64> {
    let p = check_pipeline_p(p)?;
    check_omega4(omega)?;
    let h = h_diag(p);
    let m = ComplexMatrix::from_fn(8, 8, |i, j| match (i < 4, j < 4) {
        (true, true) => omega[(i, j)],
        (false, false) => omega[(i - 4, j - 4)].conj(),
        (true, false) if i == j - 4 => -2.0 * I * s * h[i],
        (false, true) if i - 4 == j => -2.0 * I * s.conj() * h[j],
        _ => ZERO,
    });
    Ok(m.det())
}

/// `ω′ = h^{-1/2} ω h^{-1/2}`.
pub fn omega_prime_of(omega: &ComplexMatrix, p: f64) -> Result<ComplexMatrix> {
    let p = check_pipeline_p(p)?;
    check_omega4(omega)?;
    let h = h_diag(p);
    Ok(ComplexMatrix::from_fn(4, 4, |i, j| {
        omega[(i, j)] / (h[i] * h[j]).sqrt()
    }))
}

/// `ω = h^{1/2} ω′ h^{1/2}`.
pub fn omega_of_prime(omega_prime: &ComplexMatrix, p: f64) -> Result<ComplexMatrix> {
    let p = check_pipeline_p(p)?;
    check_omega4(omega_prime)?;
    let h = h_diag(p);
    Ok(ComplexMatrix::from_fn(4, 4, |i, j| {
        omega_prime[(i, j)] * (h[i] * h[j]).sqrt()
    }))
}

/// `det h² · det(4|s|² + ω′ω̄′)`.
pub fn det_m_factored(s: C64, omega: &ComplexMatrix, p: f64) -> Result<C64> {
    let wp = omega_prime_of(omega, p)?;
    let dh: f64 = h_diag(p).iter().product();
    let inner = &ComplexMatrix::identity(4).scale_real(4.0 * s.norm_sqr()) + &wp.matmul(&wp.conj());
    Ok(inner.det() * (dh * dh))
}

/// Restricted multipliers `ω′ = diag(γ, λ, λ, λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaPrime {
    pub gamma: f64,
    pub lambda: f64,
}

impl OmegaPrime {
    pub fn new(gamma: f64, lambda: f64) -> Result<Self> {
        if !(gamma > 0.0 && lambda > 0.0 && gamma.is_finite() && lambda.is_finite()) {
            return Err(Error::param("ω′ needs γ > 0 and λ > 0"));
        }
        Ok(Self { gamma, lambda })
    }

    pub fn matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_diag(&[self.gamma, self.lambda, self.lambda, self.lambda])
    }
}

fn check_beta(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param(alloc::format!(
            "β = {beta} must be positive and finite"
        )));
    }
    Ok(beta)
}

/// Weighted moments of `x` under `w(x) ∝ e^{−x/4s} Π_k (x + μ_k)^{−m_k/2}`.
struct WeightMoments<const K: usize> {
    /// `ln ∫₀^∞ e^{−x/4s} Π (x+μ_k)^{−m_k/2} dx`.
    log_integral: f64,
    /// `⟨1/(x+μ_k)⟩_w` for each distinct `μ_k`.
    inv: [f64; K],
    mean_x: f64,
}

/// Quadrature for `∫₀^∞ e^{−x/4s} Π_k (x+μ_k)^{−m_k/2} dx` and its moments.
///
/// With `c = min μ` the substitution `x = c·(eᵗ − 1)` resolves the scale
/// `x ~ c` near the origin and the logarithmic decay beyond it. The
/// integrand is normalised to 1 at `x = 0` and the cut-off `X` is doubled
/// until the exponential tail bound `4s·w(X)` is below 1e-14 of the
/// integral (and likewise for the first moment).
fn weight_moments<const K: usize>(
    s: f64,
    mu: [f64; K],
    mult: [f64; K],
) -> Result<WeightMoments<K>> {
    let c = mu.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(c > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: c });
    }
    let log_w = |x: f64| -> f64 {
        let mut acc = -x / (4.0 * s);
        for k in 0..K {
            acc -= 0.5 * mult[k] * (x / mu[k]).ln_1p();
        }
        acc
    };
    let log_f0: f64 = -(0..K).map(|k| 0.5 * mult[k] * mu[k].ln()).sum::<f64>();
    let opts = QuadOptions {
        rel_tol: 1e-13,
        abs_tol: 0.0,
        max_panels: 4000,
    };
    let mut x_max = 4.0 * s * (1e14f64).ln();
    for _ in 0..64 {
        let t_max = (x_max / c).ln_1p();
        let r = quad::integrate::<2>(
            |t| {
                let x = c * t.exp_m1();
                let g = log_w(x).exp() * c * t.exp();
                [g, g * x]
            },
            0.0,
            t_max,
            opts,
        )?;
        let tail = 4.0 * s * log_w(x_max).exp();
        let tail_x = tail * (x_max + 4.0 * s);
        if tail <= 1e-14 * r.value[0] && tail_x <= 1e-14 * r.value[1].max(f64::MIN_POSITIVE) {
            // second pass for the inverse moments on the settled interval
            let inv = inverse_moments(&log_w, c, t_max, mu, opts)?;
            let i0 = r.value[0];
            return Ok(WeightMoments {
                log_integral: i0.ln() + log_f0,
                inv: core::array::from_fn(|k| inv[k] / i0),
                mean_x: r.value[1] / i0,
            });
        }
        x_max *= 2.0;
    }
    Err(Error::QuadratureNonConvergence {
        achieved: f64::INFINITY,
        requested: 1e-14,
    })
}

fn inverse_moments<const K: usize>(
    log_w: &impl Fn(f64) -> f64,
    c: f64,
    t_max: f64,
    mu: [f64; K],
    opts: QuadOptions,
) -> Result<[f64; K]> {
    let r = quad::integrate::<K>(
        |t| {
            let x = c * t.exp_m1();
            let g = log_w(x).exp() * c * t.exp();
            core::array::from_fn(|k| g / (x + mu[k]))
        },
        0.0,
        t_max,
        opts,
    )?;
    Ok(r.value)
}

/// Quadrature summary at one `(β, ω′, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Z1Point {
    pub log_z1: f64,
    /// `∂ log Z₁/∂γ = h₁₁ − ⟨γ/(x+γ²)⟩_w`.
    pub res_gamma: f64,
    /// `h₂₂ − ⟨λ/(x+λ²)⟩_w`; `∂ log Z₁/∂λ = 3·res_lambda`.
    pub res_lambda: f64,
    /// `⟨x⟩_w`.
    pub mean_x: f64,
}

impl Z1Point {
    /// `√(res_γ² + 3 res_λ²)`, the Hilbert–Schmidt norm of the full
    /// 4×4 gradient at a restricted point.
    pub fn residual_norm(&self) -> f64 {
        (self.res_gamma * self.res_gamma + 3.0 * self.res_lambda * self.res_lambda).sqrt()
    }

    /// `⟨⟨E₁⟩⟩ = −∂ log Z₁/∂β = 1/β − ⟨x⟩_w/(4·64·β²)`.
    pub fn avg_energy(&self, beta: f64) -> f64 {
        let s = HS_SCALE * beta;
        HS_SCALE * (1.0 / s - self.mean_x / (4.0 * s * s))
    }
}

/// Evaluates `log Z₁`, its gradient in `(γ, λ)` and `⟨x⟩_w`.
pub fn z1_point(beta: f64, op: OmegaPrime, p: f64) -> Result<Z1Point> {
    let beta = check_beta(beta)?;
    let p = check_pipeline_p(p)?;
    let op = OmegaPrime::new(op.gamma, op.lambda)?;
    let s = HS_SCALE * beta;
    let (g, l) = (op.gamma, op.lambda);
    let wm = weight_moments(s, [g * g, l * l], [1.0, 3.0])?;
    let h = h_diag(p);
    let det_h = h[0] * h[1] * h[2] * h[3];
    let log_z1 = 4.0 * core::f64::consts::PI.ln() - (4.0 * s).ln() - det_h.ln()
        + g * h[0]
        + 3.0 * l * h[1]
        + wm.log_integral;
    Ok(Z1Point {
        log_z1,
        res_gamma: h[0] - g * wm.inv[0],
        res_lambda: h[1] - l * wm.inv[1],
        mean_x: wm.mean_x,
    })
}

pub fn log_z1_quadrature(beta: f64, op: OmegaPrime, p: f64) -> Result<f64> {
    Ok(z1_point(beta, op, p)?.log_z1)
}

/// `(res_gamma, res_lambda)`; see [`Z1Point`].
pub fn grad_log_z1(beta: f64, op: OmegaPrime, p: f64) -> Result<(f64, f64)> {
    let z = z1_point(beta, op, p)?;
    Ok((z.res_gamma, z.res_lambda))
}

struct GeneralSetup {
    sqrt_wp: ComplexMatrix,
    vectors: ComplexMatrix,
    mu: [f64; 4],
}

fn general_setup(wp: &ComplexMatrix) -> Result<GeneralSetup> {
    check_omega4(wp)?;
    let dev = wp.hermitian_deviation();
    if dev > 1e-12 {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let eig = wp.hermitian_eigen();
    if eig.values[0] <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: eig.values[0],
        });
    }
    // ω′ω̄′ = S B S⁻¹ with S = √ω′ and B = S ω̄′ S Hermitian positive
    let sqrt_wp = wp.hermitian_fn(f64::sqrt);
    let b = sqrt_wp.matmul(&wp.conj()).matmul(&sqrt_wp);
    let b = ComplexMatrix::from_fn(4, 4, |i, j| 0.5 * (b[(i, j)] + b[(j, i)].conj()));
    let be = b.hermitian_eigen();
    Ok(GeneralSetup {
        sqrt_wp,
        vectors: be.vectors,
        mu: [be.values[0], be.values[1], be.values[2], be.values[3]],
    })
}

/// `log Z₁` for a general Hermitian `ω′ > 0`.
pub fn log_z1_general(beta: f64, omega_prime: &ComplexMatrix, p: f64) -> Result<f64> {
    let beta = check_beta(beta)?;
    let p = check_pipeline_p(p)?;
    let gs = general_setup(omega_prime)?;
    let s = HS_SCALE * beta;
    let wm = weight_moments(s, gs.mu, [1.0; 4])?;
    let h = h_diag(p);
    let det_h: f64 = h.iter().product();
    let tr: f64 = (0..4).map(|k| omega_prime[(k, k)].re * h[k]).sum();
    Ok(4.0 * core::f64::consts::PI.ln() - (4.0 * s).ln() - det_h.ln() + tr + wm.log_integral)
}

/// `h − ⟨(x + ω′ω̄′)⁻¹ ω′⟩_w` for a general Hermitian `ω′ > 0`.
///
/// For real symmetric `ω′` and direction `D`, the directional derivative
/// of `log Z₁` is `tr(D G)`.
pub fn grad_log_z1_general(
    beta: f64,
    omega_prime: &ComplexMatrix,
    p: f64,
) -> Result<ComplexMatrix> {
    let beta = check_beta(beta)?;
    let p = check_pipeline_p(p)?;
    let gs = general_setup(omega_prime)?;
    let s = HS_SCALE * beta;
    let wm = weight_moments(s, gs.mu, [1.0; 4])?;
    // (x + S B S⁻¹)⁻¹ ω′ = S V diag(1/(x+μ)) V† S
    let d = ComplexMatrix::from_real_diag(&wm.inv);
    let v = &gs.vectors;
    let avg = gs
        .sqrt_wp
        .matmul(v)
        .matmul(&d)
        .matmul(&v.adjoint())
        .matmul(&gs.sqrt_wp);
    Ok(&ComplexMatrix::from_real_diag(&h_diag(p)) - &avg)
}

/// Outcome of the multi-start saddle search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleResult {
    pub gamma_star: f64,
    pub lambda_star: f64,
    /// `√(res_γ² + 3 res_λ²)` at the best point.
    pub residual_norm: f64,
    /// Both parameters exceed [`INTERIOR_MARGIN`].
    pub interior: bool,
    pub iterations: usize,
}

impl SaddleResult {
    pub fn omega_prime(&self) -> OmegaPrime {
        OmegaPrime {
            gamma: self.gamma_star,
            lambda: self.lambda_star,
        }
    }
}

fn residual_at(beta: f64, p: f64, t: &[f64; 2]) -> Option<[f64; 2]> {
    if !(LN_MIN..=LN_MAX).contains(&t[0]) || !(LN_MIN..=LN_MAX).contains(&t[1]) {
        return None;
    }
    let op = OmegaPrime {
        gamma: t[0].exp(),
        lambda: t[1].exp(),
    };
    z1_point(beta, op, p)
        .ok()
        .map(|z| [z.res_gamma, z.res_lambda])
}

/// Minimises `res_γ² + 3 res_λ²` over `(ln γ, ln λ) ∈ [−20, 20]²`.
///
/// Starts: the small-`β` solution `ω′ = h⁻¹` followed by `restarts`
/// log-uniform draws from `[1e-2, 1e2]²` (stream 0 of `seed`). Each start
/// runs Nelder–Mead (points outside the box are clamped onto it) and is
/// polished by damped Newton. The search stops early once the residual
/// norm is at most `tol`.
pub fn saddle_search(
    beta: f64,
    p: f64,
    tol: f64,
    restarts: usize,
    seed: u64,
) -> Result<SaddleResult> {
    let beta = check_beta(beta)?;
    let p = check_pipeline_p(p)?;
    let mut rng = stream_rng(seed, 0);
    let span = (1e2f64).ln();
    let mut starts: Vec<[f64; 2]> = Vec::with_capacity(restarts + 1);
    let h = h_diag(p);
    starts.push([(1.0 / h[0]).ln(), (1.0 / h[1]).ln()]);
    for _ in 0..restarts {
        starts.push([rng.random_range(-span..span), rng.random_range(-span..span)]);
    }

    let clamp = |t: &[f64; 2]| [t[0].clamp(LN_MIN, LN_MAX), t[1].clamp(LN_MIN, LN_MAX)];
    let merit = |r: [f64; 2]| r[0] * r[0] + 3.0 * r[1] * r[1];
    let nm_opts = NelderMeadOptions {
        max_iter: 600,
        f_tol: 0.0,
        x_tol: 1e-10,
        initial_step: 0.5,
    };
    let newton_opts = NewtonOptions {
        max_iter: 40,
        fd_step: 1e-7,
        tol: tol * 1e-2,
    };

    let mut best: Option<([f64; 2], f64)> = None;
    let mut iterations = 0;
    for x0 in starts {
        let nm = optimize::nelder_mead(
            |t: &[f64; 2]| residual_at(beta, p, &clamp(t)).map_or(f64::INFINITY, merit),
            x0,
            nm_opts,
        );
        let x1 = clamp(&nm.x);
        let nt =
            optimize::damped_newton_2(|t| residual_at(beta, p, t), x1, [1.0, 3.0], newton_opts);
        iterations += nm.iterations + nt.iterations;
        let (x, f) = if nt.f <= nm.f {
            (nt.x, nt.f)
        } else {
            (x1, nm.f)
        };
        if best.is_none_or(|(_, bf)| f < bf) {
            best = Some((x, f));
        }
        if f.sqrt() <= tol {
            break;
        }
    }
    let (x, f) = best.expect("at least one start");
    if !f.is_finite() {
        return Err(Error::QuadratureNonConvergence {
            achieved: f,
            requested: tol,
        });
    }
    let (gamma_star, lambda_star) = (x[0].exp(), x[1].exp());
    Ok(SaddleResult {
        gamma_star,
        lambda_star,
        residual_norm: f.sqrt(),
        interior: gamma_star > INTERIOR_MARGIN && lambda_star > INTERIOR_MARGIN,
        iterations,
    })
}

/// Residual curve over a `p` grid and the onset of the equipartition
/// region.
#[derive(Debug, Clone, PartialEq)]
pub struct EquipartitionScan {
    pub beta: f64,
    pub p_grid: Vec<f64>,
    pub residuals: Vec<f64>,
    pub saddles: Vec<SaddleResult>,
    pub threshold: f64,
    pub region_start: Option<f64>,
}

/// Smallest grid `p` from which every residual up to the end of the
/// (ascending) grid is below `threshold`.
pub fn region_start(p_grid: &[f64], residuals: &[f64], threshold: f64) -> Option<f64> {
    let mut start = None;
    for (p, r) in p_grid.iter().zip(residuals).rev() {
        if *r < threshold {
            start = Some(*p);
        } else {
            break;
        }
    }
    start
}

/// Validates a scan grid: non-empty, strictly ascending, inside `(0, 1]`.
pub fn check_p_grid(p_grid: &[f64]) -> Result<()> {
    if p_grid.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if p_grid.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::param("p grid must lie in (0, 1]"));
    }
    if p_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("p grid must be strictly ascending"));
    }
    Ok(())
}

/// Runs [`saddle_search`] (default tolerance and restarts, same `seed`)
/// at every grid point.
pub fn equipartition_scan(
    p_grid: &[f64],
    beta: f64,
    threshold: f64,
    seed: u64,
) -> Result<EquipartitionScan> {
    check_p_grid(p_grid)?;
    if !(threshold > 0.0) {
        return Err(Error::param("threshold must be positive"));
    }
    let saddles = p_grid
        .iter()
        .map(|&p| saddle_search(beta, p, DEFAULT_SADDLE_TOL, DEFAULT_RESTARTS, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(scan_from_saddles(p_grid, beta, threshold, saddles))
}

/// Assembles a scan from per-point saddles computed elsewhere.
pub fn scan_from_saddles(
    p_grid: &[f64],
    beta: f64,
    threshold: f64,
    saddles: Vec<SaddleResult>,
) -> EquipartitionScan {
    let residuals: Vec<f64> = saddles.iter().map(|s| s.residual_norm).collect();
    EquipartitionScan {
        beta,
        p_grid: p_grid.to_vec(),
        region_start: region_start(p_grid, &residuals, threshold),
        residuals,
        saddles,
        threshold,
    }
}

/// `⟨⟨E₁⟩⟩` at the saddle, or [`Error::ConstraintsUnsatisfiable`] when the
/// best residual is not below `threshold`.
pub fn avg_energy_werner_with(
    beta: f64,
    p: f64,
    threshold: f64,
    seed: u64,
) -> Result<(f64, SaddleResult)> {
    let sd = saddle_search(beta, p, DEFAULT_SADDLE_TOL, DEFAULT_RESTARTS, seed)?;
    if !(sd.residual_norm < threshold) {
        return Err(Error::ConstraintsUnsatisfiable {
            p,
            residual: sd.residual_norm,
        });
    }
    let z = z1_point(beta, sd.omega_prime(), p)?;
    Ok((z.avg_energy(beta), sd))
}

pub fn avg_energy_werner(beta: f64, p: f64, seed: u64) -> Result<f64> {
    Ok(avg_energy_werner_with(beta, p, DEFAULT_THRESHOLD, seed)?.0)
}
