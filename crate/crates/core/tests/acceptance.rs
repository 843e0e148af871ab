//! Acceptance gate: one PASS/FAIL line per criterion, then a summary.
//! Runs without the libtest harness so the lines are always printed; the
//! process exits non-zero when any criterion fails.
//!
//! Every stochastic input comes from a fixed seed.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use sepstat_core::concurrence::{
    concurrence_sq, concurrence_sq_skew, h_matrices, is_product, skew_basis, DEFAULT_PRODUCT_TOL,
};
use sepstat_core::costfn::{cost_operator, energy, energy_via_h, LagrangeMultipliers};
use sepstat_core::ensembles::{constraint_residual, ensemble_from_stiefel, haar_stiefel};
use sepstat_core::linalg::{tensor_product, I};
use sepstat_core::rng::{complex_normal, complex_normal_vec, ginibre, haar_unitary, stream_rng};
use sepstat_core::state::{
    eigen_ensemble, ppt_is_entangled, random_density_matrix, DEFAULT_RANK_CUTOFF,
};
use sepstat_core::statmech::{
    anneal_average_energy, fit_energy_scaling, z1_mc, AnnealOptions, EnergySample,
};
use sepstat_core::werner::{
    avg_energy_werner, det_m, det_m_factored, energy_closed_form, equipartition_scan, grad_log_z1,
    log_z1_quadrature, omega_of_prime, werner_eigenensemble, werner_state, z1_point, OmegaPrime,
    DEFAULT_THRESHOLD,
};
use sepstat_core::{ComplexMatrix, PureState, C64};

const SEED: u64 = 20_260_101;

// Fig. 1
const SCAN_BETA: f64 = 10.0;
const ONSET_TARGET: f64 = 0.89;
const ONSET_TOL: f64 = 0.02;
const LOW_P_MAX: f64 = 0.80;
const LOW_P_FACTOR: f64 = 10.0;
const GRID_STEP: f64 = 0.01;
// Fig. 2
const FIG2_P: f64 = 0.90;
const FIG2_POINTS: usize = 12;
const SLOPE_TARGET: f64 = -1.0;
const SLOPE_TOL: f64 = 0.05;
const DELTA_TARGET: f64 = 1.75;
const DELTA_TOL: f64 = 0.25;
// numerics
const CROSS_FORM_REL: f64 = 1e-10;
const DET_REL: f64 = 1e-10;
const FD_REL: f64 = 1e-6;
const GAUSS_ABS: f64 = 1e-4;
const GAUSS_OMEGA: (f64, f64) = (2.0, 20.0);
const SIGMAS: f64 = 3.0;
// conjecture suite
const CONJ_LENGTH: usize = 16;
const CONJ_HAAR_SAMPLES: usize = 100_000;
const FLAT_SLOPE_MIN: f64 = -0.3;
const SEP_SLOPE: (f64, f64) = (-1.3, -0.7);
// invariants
const STIEFEL_TOL: f64 = 1e-12;
const RECON_TOL: f64 = 1e-10;
const INVARIANCE_TOL: f64 = 1e-10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn p_grid() -> Vec<f64> {
    (0..=50)
        .map(|k| ((0.5 + k as f64 * GRID_STEP) * 1e12).round() / 1e12)
        .collect()
}

fn onset(beta: f64) -> (Option<f64>, Vec<f64>) {
    let grid = p_grid();
    let scan = equipartition_scan(&grid, beta, DEFAULT_THRESHOLD, SEED).expect("scan runs");
    (scan.region_start, scan.residuals)
}

fn fig1() -> Outcome {
    let (start, residuals) = onset(SCAN_BETA);
    let grid = p_grid();
    let low_ok = grid
        .iter()
        .zip(&residuals)
        .filter(|(p, _)| **p <= LOW_P_MAX + 1e-12)
        .all(|(_, r)| *r > LOW_P_FACTOR * DEFAULT_THRESHOLD);
    let low_min = grid
        .iter()
        .zip(&residuals)
        .filter(|(p, _)| **p <= LOW_P_MAX + 1e-12)
        .map(|(_, r)| *r)
        .fold(f64::INFINITY, f64::min);
    let on_ok = start.is_some_and(|s| (s - ONSET_TARGET).abs() <= ONSET_TOL + 1e-12);
    outcome(
        on_ok && low_ok,
        format!(
            "onset {start:?} (want {ONSET_TARGET} ± {ONSET_TOL}); min residual for p ≤ {LOW_P_MAX}: {low_min:.3e} (want > {:.0e})",
            LOW_P_FACTOR * DEFAULT_THRESHOLD
        ),
    )
}

fn fig2() -> Outcome {
    let pts: Vec<(f64, f64)> = (0..FIG2_POINTS)
        .map(|k| 10f64.powf(1.0 + 3.0 * k as f64 / (FIG2_POINTS - 1) as f64))
        .map(|b| {
            (
                b,
                avg_energy_werner(b, FIG2_P, SEED).expect("inside the region"),
            )
        })
        .collect();
    let f = fit_energy_scaling(&pts).expect("fit");
    let slope_ok = (f.slope - SLOPE_TARGET).abs() <= SLOPE_TOL;
    let delta_ok = (f.delta - DELTA_TARGET).abs() <= DELTA_TOL;
    outcome(
        slope_ok && delta_ok,
        format!(
            "slope {:.4} (want {SLOPE_TARGET} ± {SLOPE_TOL}: {}); δ {:.4} (want {DELTA_TARGET} ± {DELTA_TOL}: {})",
            f.slope,
            if slope_ok { "ok" } else { "no" },
            f.delta,
            if delta_ok { "ok" } else { "no" }
        ),
    )
}

fn beta_robustness() -> Outcome {
    let (s10, _) = onset(SCAN_BETA);
    let (s100, _) = onset(100.0);
    let (s1e6, _) = onset(1e6);
    let same = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= GRID_STEP + 1e-12,
        _ => false,
    };
    outcome(
        same(s10, s100) && same(s10, s1e6),
        format!("onsets β=10: {s10:?}, β=100: {s100:?}, β=1e6: {s1e6:?}"),
    )
}

fn ppt_exactness() -> Outcome {
    let mut wrong = Vec::new();
    for k in 0..=20 {
        let p = k as f64 * 0.05;
        let got = ppt_is_entangled(&werner_state(p).unwrap());
        if got != (p < 2.0 / 3.0) {
            wrong.push(p);
        }
    }
    outcome(
        wrong.is_empty(),
        format!("21 grid points, mismatches at {wrong:?}"),
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn cross_form() -> Outcome {
    let mut rng = stream_rng(SEED, 10);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let (ens, werner_p) = if case < 10 {
            let p = rng.random_range(0.01..=1.0);
            (werner_eigenensemble(p).unwrap(), Some(p))
        } else {
            let rho = random_density_matrix(2, 3, &mut rng);
            (eigen_ensemble(&rho, DEFAULT_RANK_CUTOFF).unwrap(), None)
        };
        let cop = cost_operator(&ens);
        let hs = h_matrices(&ens);
        let n = ens.rank() * ens.rank();
        for _ in 0..100 {
            let z = haar_stiefel(n, ens.rank(), &mut rng).unwrap();
            let e_tensor = energy(z.matrix(), &cop).unwrap();
            let e_h = energy_via_h(z.matrix(), &hs).unwrap();
            let direct: f64 = ensemble_from_stiefel(&z, &ens)
                .unwrap()
                .vectors()
                .iter()
                .map(concurrence_sq)
                .sum();
            worst = worst.max(rel(e_tensor, direct)).max(rel(e_h, direct));
            if let Some(p) = werner_p {
                let closed: f64 = (0..n)
                    .map(|i| {
                        let row = z.matrix().row(i);
                        energy_closed_form(&[row[0], row[1], row[2], row[3]], p)
                    })
                    .sum();
                worst = worst.max(rel(closed, direct));
            }
        }
    }
    outcome(
        worst <= CROSS_FORM_REL,
        format!("10 Werner + 10 2⊗3 states × 100 points: max relative deviation {worst:.2e} (want ≤ {CROSS_FORM_REL:.0e})"),
    )
}

fn random_pd4(rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(4, 4, rng);
    &g.matmul(&g.adjoint()) + &ComplexMatrix::identity(4).scale_real(0.1)
}

fn determinant() -> Outcome {
    let mut rng = stream_rng(SEED, 11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let s = complex_normal(&mut rng) * rng.random_range(0.01..3.0);
        let w = random_pd4(&mut rng);
        let p = rng.random_range(0.01..=1.0);
        let a = det_m(s, &w, p).unwrap();
        let b = det_m_factored(s, &w, p).unwrap();
        worst = worst.max((a - b).norm() / a.norm().max(b.norm()));
    }
    outcome(
        worst <= DET_REL,
        format!("100 random (s, ω, p): max relative deviation {worst:.2e} (want ≤ {DET_REL:.0e})"),
    )
}

fn gradients() -> Outcome {
    let mut rng = stream_rng(SEED, 12);
    let log_uniform = |rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64| {
        (rng.random_range(lo.ln()..hi.ln())).exp()
    };
    let mut worst_grad: f64 = 0.0;
    for _ in 0..50 {
        let beta = log_uniform(&mut rng, 0.1, 1e4);
        let p = rng.random_range(0.05..=1.0);
        let op = OmegaPrime::new(
            log_uniform(&mut rng, 0.1, 20.0),
            log_uniform(&mut rng, 0.1, 20.0),
        )
        .unwrap();
        let (rg, rl) = grad_log_z1(beta, op, p).unwrap();
        let f =
            |g: f64, l: f64| log_z1_quadrature(beta, OmegaPrime::new(g, l).unwrap(), p).unwrap();
        let (hg, hl) = (1e-5 * op.gamma, 1e-5 * op.lambda);
        let dg = (f(op.gamma + hg, op.lambda) - f(op.gamma - hg, op.lambda)) / (2.0 * hg);
        let dl = (f(op.gamma, op.lambda + hl) - f(op.gamma, op.lambda - hl)) / (2.0 * hl);
        // ∂/∂λ acts on the three degenerate entries
        worst_grad = worst_grad.max(rel(dg, rg)).max(rel(dl, 3.0 * rl));
    }
    let mut worst_e: f64 = 0.0;
    for _ in 0..20 {
        let beta = log_uniform(&mut rng, 0.1, 1e4);
        let p = rng.random_range(0.05..=1.0);
        let op = OmegaPrime::new(
            log_uniform(&mut rng, 0.1, 20.0),
            log_uniform(&mut rng, 0.1, 20.0),
        )
        .unwrap();
        let e = z1_point(beta, op, p).unwrap().avg_energy(beta);
        let h = 1e-4 * beta;
        let fd = -(log_z1_quadrature(beta + h, op, p).unwrap()
            - log_z1_quadrature(beta - h, op, p).unwrap())
            / (2.0 * h);
        worst_e = worst_e.max(rel(e, fd));
    }
    outcome(
        worst_grad <= FD_REL && worst_e <= FD_REL,
        format!(
            "gradient max rel. deviation {worst_grad:.2e} (50 points), ⟨⟨E₁⟩⟩ {worst_e:.2e} (20 points), want ≤ {FD_REL:.0e}"
        ),
    )
}

fn gaussian_limits() -> Outcome {
    let mut rng = stream_rng(SEED, 13);
    // quadrature at β = 1e-6. The exact value differs from the Gaussian
    // one by −32β⟨E₁⟩_Gauss + O(β²); multipliers are drawn around the
    // small-β saddle ω′ = h⁻¹ (γ ∈ [2, 8], λ ≥ 8), where that term is
    // below the tolerance.
    let mut worst_q: f64 = 0.0;
    for _ in 0..10 {
        let p = rng.random_range(0.05..=1.0);
        let op = OmegaPrime::new(
            rng.random_range(GAUSS_OMEGA.0..GAUSS_OMEGA.1),
            rng.random_range(GAUSS_OMEGA.0..GAUSS_OMEGA.1),
        )
        .unwrap();
        let w = omega_of_prime(&op.matrix(), p).unwrap();
        let closed = 4.0 * std::f64::consts::PI.ln() + w.trace().re - w.det().re.ln();
        worst_q = worst_q.max((log_z1_quadrature(1e-6, op, p).unwrap() - closed).abs());
    }
    // Monte Carlo at β = 0 on a 2⊗3 state with a generic Hermitian ω
    let rho = random_density_matrix(2, 3, &mut rng);
    let cop = cost_operator(&eigen_ensemble(&rho, DEFAULT_RANK_CUTOFF).unwrap());
    let r = cop.rank();
    let g = ginibre(r, r, &mut rng);
    let omega = &g.matmul(&g.adjoint()).scale_real(0.5) + &ComplexMatrix::identity(r);
    let lm = LagrangeMultipliers::new(omega.clone()).unwrap();
    let est = z1_mc(&cop, 0.0, &lm, 200_000, SEED).unwrap();
    let closed = r as f64 * std::f64::consts::PI.ln() + omega.trace().re - omega.det().re.ln();
    let z_closed = closed.exp();
    let z_dev = (est.z1 - z_closed).abs();
    let z_ok = z_dev <= SIGMAS * est.z1_std_error + 1e-12 * z_closed;
    let inv = omega.inverse().unwrap();
    let mut worst_sigma: f64 = 0.0;
    for i in 0..r {
        for j in 0..r {
            let d = est.constraint_avg[(i, j)] - inv[(i, j)];
            let se = est.constraint_std_error[(i, j)];
            let sig = |dev: f64, s: f64| {
                if s > 0.0 {
                    dev.abs() / s
                } else if dev.abs() < 1e-14 {
                    0.0
                } else {
                    f64::INFINITY
                }
            };
            worst_sigma = worst_sigma.max(sig(d.re, se.re)).max(sig(d.im, se.im));
        }
    }
    outcome(
        worst_q <= GAUSS_ABS && z_ok && worst_sigma <= SIGMAS,
        format!(
            "quadrature |Δ log Z₁| {worst_q:.2e} (want ≤ {GAUSS_ABS:.0e}); MC Z₁ off by {:.2} σ; ⟨z z†⟩ vs ω⁻¹ worst {worst_sigma:.2} σ (want ≤ {SIGMAS})",
            if est.z1_std_error > 0.0 { z_dev / est.z1_std_error } else { 0.0 }
        ),
    )
}

fn top_decade_slope(est: &[sepstat_core::statmech::McEstimate]) -> (f64, f64, f64) {
    let b_max = est.last().unwrap().beta;
    let top: Vec<(f64, f64)> = est
        .iter()
        .filter(|e| e.beta >= b_max / 10.0 * (1.0 - 1e-12))
        .map(|e| (e.beta, e.mean_energy))
        .collect();
    let f = fit_energy_scaling(&top).unwrap();
    (f.slope, top.first().unwrap().1, top.last().unwrap().1)
}

fn conjecture() -> Outcome {
    let betas: Vec<f64> = (0..=20).map(|k| 10f64.powf(k as f64 / 4.0)).collect();
    // entangled W(0.2): nothing reaches zero
    let cop = cost_operator(&werner_eigenensemble(0.2).unwrap());
    let haar = EnergySample::draw(&cop, CONJ_LENGTH, CONJ_HAAR_SAMPLES, SEED).unwrap();
    let ent =
        anneal_average_energy(&cop, CONJ_LENGTH, &betas, AnnealOptions::default(), SEED).unwrap();
    let (ent_slope, ent_lo, ent_hi) = top_decade_slope(&ent);
    let ent_ok = haar.min_energy() > 0.0 && ent_slope > FLAT_SLOPE_MIN;
    // separable W(1.0): ~1/β
    let cop = cost_operator(&werner_eigenensemble(1.0).unwrap());
    let sep =
        anneal_average_energy(&cop, CONJ_LENGTH, &betas, AnnealOptions::default(), SEED).unwrap();
    let (sep_slope, sep_lo, sep_hi) = top_decade_slope(&sep);
    let sep_ok = sep_hi < sep_lo && (SEP_SLOPE.0..=SEP_SLOPE.1).contains(&sep_slope);
    outcome(
        ent_ok && sep_ok,
        format!(
            "W(0.2): Haar min over {CONJ_HAAR_SAMPLES} = {:.3e}, top-decade slope {ent_slope:.3} ({ent_lo:.3e} → {ent_hi:.3e}, want > {FLAT_SLOPE_MIN}); \
             W(1.0): slope {sep_slope:.3} ({sep_lo:.3e} → {sep_hi:.3e}, want in [{}, {}])",
            haar.min_energy(),
            SEP_SLOPE.0,
            SEP_SLOPE.1
        ),
    )
}

fn invariants() -> Outcome {
    let mut rng = stream_rng(SEED, 14);
    let (mut stiefel, mut recon, mut lu, mut homog, mut skew): (f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut product_mismatch = 0;
    for case in 0..100 {
        let (m, n) = [(2, 2), (2, 3), (3, 3)][case % 3];
        let rho = random_density_matrix(m, n, &mut rng);
        let ens = eigen_ensemble(&rho, DEFAULT_RANK_CUTOFF).unwrap();
        let z = haar_stiefel(ens.rank() + case % 5, ens.rank(), &mut rng).unwrap();
        stiefel = stiefel.max(constraint_residual(z.matrix()).max_abs());
        recon = recon.max(ens.reconstruct().max_abs_diff(rho.matrix())).max(
            ensemble_from_stiefel(&z, &ens)
                .unwrap()
                .density()
                .max_abs_diff(rho.matrix()),
        );

        let psi = PureState::new(m, n, complex_normal_vec(m * n, &mut rng)).unwrap();
        let (ua, ub) = (haar_unitary(m, &mut rng), haar_unitary(n, &mut rng));
        let u = tensor_product(&ua, &ub);
        let c = concurrence_sq(&psi);
        lu = lu.max((concurrence_sq(&psi.apply(&u).unwrap()) - c).abs());
        let rotated: Vec<PureState> = ens.vectors().iter().map(|e| e.apply(&u).unwrap()).collect();
        let ens_u = sepstat_core::EigenEnsemble::from_vectors(m, n, rotated).unwrap();
        let e0 = energy_via_h(z.matrix(), &h_matrices(&ens)).unwrap();
        let e1 = energy_via_h(z.matrix(), &h_matrices(&ens_u)).unwrap();
        lu = lu.max((e0 - e1).abs());

        let t = C64::new(rng.random_range(-2.0..2.0), 0.0) + I * rng.random_range(-2.0..2.0);
        homog = homog.max(rel(
            concurrence_sq(&psi.scaled(t)),
            t.norm_sqr().powi(2) * c,
        ));
        let sk =
            concurrence_sq_skew(&psi, &skew_basis(m).unwrap(), &skew_basis(n).unwrap()).unwrap();
        skew = skew.max((sk - c).abs());

        let prod = PureState::product(
            &complex_normal_vec(m, &mut rng),
            &complex_normal_vec(n, &mut rng),
        );
        product_mismatch += usize::from(!is_product(&prod, DEFAULT_PRODUCT_TOL).unwrap());
        product_mismatch += usize::from(is_product(&psi, DEFAULT_PRODUCT_TOL).unwrap());
    }
    let pass = stiefel <= STIEFEL_TOL
        && recon <= RECON_TOL
        && lu <= INVARIANCE_TOL
        && homog <= INVARIANCE_TOL
        && skew <= INVARIANCE_TOL
        && product_mismatch == 0;
    outcome(
        pass,
        format!(
            "100 cases: Stiefel {stiefel:.1e}, reconstruction {recon:.1e}, local-unitary {lu:.1e}, homogeneity {homog:.1e} rel, skew form {skew:.1e}, product-test mismatches {product_mismatch} \
             (full property suites: tests/invariants.rs)"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("fig1-equipartition-onset", fig1),
        ("fig2-energy-scaling", fig2),
        ("beta-robustness", beta_robustness),
        ("ppt-exactness", ppt_exactness),
        ("cross-form-energy", cross_form),
        ("determinant-reduction", determinant),
        ("gradient-correctness", gradients),
        ("gaussian-limits", gaussian_limits),
        ("conjecture-properties", conjecture),
        ("invariant-suites", invariants),
    ];
    let mut passed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let o = run();
        passed += usize::from(o.pass);
        println!(
            "{} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
