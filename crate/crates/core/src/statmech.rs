//! Monte Carlo over decomposition space.
//!
//! The constrained partition function `Z(β) = ∫_{V_{N,r}} e^{−β E_ϱ(z)} dz`
//! is sampled with the Haar measure on the Stiefel manifold. One sample
//! set is reweighted to every requested `β` (common random numbers), so the
//! estimates at different `β` are strongly correlated and monotone.
//! Samples are organised in [`JACKKNIFE_BLOCKS`] blocks; block `k` is drawn
//! from RNG stream `k`, which fixes the numbers independently of how blocks
//! are scheduled.
//!
//! At large `β` the Haar sample carries almost no weight near the minimum
//! energy, so [`anneal_average_energy`] provides a Metropolis chain on
//! `V_{N,r}` for the low-temperature regime.
//!
//! `β` here is canonical: it multiplies `E_ϱ(z) = Σ_i c²(ψ_i)`.

use alloc::vec::Vec;

// float methods come from here in no_std builds, from std otherwise
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::costfn::{CostOperator, LagrangeMultipliers};
use crate::ensembles::{haar_stiefel, StiefelPoint};
use crate::fit;
use crate::linalg::{ComplexMatrix, C64, ZERO};
use crate::rng::{complex_normal_vec, stream_rng};
use crate::{Error, Result};

pub const JACKKNIFE_BLOCKS: usize = 32;

/// Reweighted mean energy at one `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub beta: f64,
    pub samples: usize,
    pub mean_energy: f64,
    /// Jackknife over blocks; infinite when the weight sits in one block.
    pub std_error: f64,
    pub min_energy_seen: f64,
    /// `(Σw)² / Σw²` for reweighting, `Var E / SE²` for Markov chains.
    pub effective_sample_size: f64,
}

fn check_beta(beta: f64) -> Result<f64> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::param(alloc::format!(
            "β = {beta} must be finite and non-negative"
        )));
    }
    Ok(beta)
}

fn check_length(cop: &CostOperator, n: usize) -> Result<()> {
    if n < cop.rank() {
        return Err(Error::param(alloc::format!(
            "ensemble length N = {n} is below the rank {}",
            cop.rank()
        )));
    }
    Ok(())
}

/// Sizes of the blocks a run of `samples` draws is split into.
pub fn block_sizes(samples: usize) -> Vec<usize> {
    let b = JACKKNIFE_BLOCKS.min(samples).max(1);
    (0..b)
        .map(|k| samples / b + usize::from(k < samples % b))
        .collect()
}

/// Energies of Haar-distributed Stiefel points, grouped in blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySample {
    blocks: Vec<Vec<f64>>,
    min: f64,
    max: f64,
}

impl EnergySample {
    /// Block `block` of a run: `len` draws from stream `block` of `seed`.
    pub fn draw_block(
        cop: &CostOperator,
        n: usize,
        len: usize,
        seed: u64,
        block: usize,
    ) -> Result<Vec<f64>> {
        check_length(cop, n)?;
        let mut rng = stream_rng(seed, block as u64);
        let hs = cop.h_set();
        (0..len)
            .map(|_| {
                let z = haar_stiefel(n, cop.rank(), &mut rng)?;
                crate::costfn::energy_via_h(z.matrix(), hs)
            })
            .collect()
    }

    /// Regenerates draw `index` of block `block`.
    pub fn replay_point(
        n: usize,
        r: usize,
        seed: u64,
        block: usize,
        index: usize,
    ) -> Result<StiefelPoint> {
        let mut rng = stream_rng(seed, block as u64);
        for _ in 0..index {
            haar_stiefel(n, r, &mut rng)?;
        }
        haar_stiefel(n, r, &mut rng)
    }

    pub fn draw(cop: &CostOperator, n: usize, samples: usize, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let blocks = block_sizes(samples)
            .into_iter()
            .enumerate()
            .map(|(k, len)| Self::draw_block(cop, n, len, seed, k))
            .collect::<Result<Vec<_>>>()?;
        Self::from_blocks(blocks)
    }

    /// `(block, index)` of the lowest energy.
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = (0, 0, f64::INFINITY);
        for (b, blk) in self.blocks.iter().enumerate() {
            for (i, &e) in blk.iter().enumerate() {
                if e < best.2 {
                    best = (b, i, e);
                }
            }
        }
        (best.0, best.1)
    }

    pub fn from_blocks(blocks: Vec<Vec<f64>>) -> Result<Self> {
        let all = blocks.iter().flatten();
        if all.clone().next().is_none() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if all.clone().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::param("energies must be finite and non-negative"));
        }
        let min = all.clone().cloned().fold(f64::INFINITY, f64::min);
        let max = all.cloned().fold(0.0, f64::max);
        Ok(Self { blocks, min, max })
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks.iter().flatten().cloned()
    }

    pub fn min_energy(&self) -> f64 {
        self.min
    }

    pub fn max_energy(&self) -> f64 {
        self.max
    }

    /// `Σ_k E_k e^{−βE_k} / Σ_k e^{−βE_k}` with a leave-one-block-out
    /// jackknife error.
    pub fn reweight(&self, beta: f64) -> McEstimate {
        let per_block: Vec<(f64, f64, f64)> = self
            .blocks
            .iter()
            .map(|b| {
                b.iter().fold((0.0, 0.0, 0.0), |(sw, swe, sw2), &e| {
                    let w = (-beta * (e - self.min)).exp();
                    (sw + w, swe + w * e, sw2 + w * w)
                })
            })
            .collect();
        let (sw, swe, sw2) = per_block
            .iter()
            .fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
        let mean = swe / sw;
        let nb = per_block
            .iter()
            .filter(|b| b.0 > 0.0 || b.1 > 0.0)
            .count()
            .max(self.blocks.len());
        let std_error = if nb < 2 {
            f64::INFINITY
        } else {
            let loo: Vec<f64> = per_block.iter().map(|b| (swe - b.1) / (sw - b.0)).collect();
            if loo.iter().any(|v| !v.is_finite()) {
                f64::INFINITY
            } else {
                let m = loo.iter().sum::<f64>() / nb as f64;
                let ss: f64 = loo.iter().map(|v| (v - m) * (v - m)).sum();
                ((nb as f64 - 1.0) / nb as f64 * ss).sqrt()
            }
        };
        McEstimate {
            beta,
            samples: self.len(),
            mean_energy: mean,
            std_error,
            min_energy_seen: self.min,
            effective_sample_size: sw * sw / sw2,
        }
    }
}

/// Haar-sampled estimate of `⟨⟨E_ϱ⟩⟩` at `β` with ensembles of length `n`.
pub fn mc_average_energy(
    cop: &CostOperator,
    n: usize,
    beta: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let beta = check_beta(beta)?;
    Ok(EnergySample::draw(cop, n, samples, seed)?.reweight(beta))
}

/// Normalised histogram of sampled energies.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDensityEstimate {
    pub bin_edges: Vec<f64>,
    /// Fraction of samples per bin; sums to 1.
    pub counts: Vec<f64>,
    pub total_samples: usize,
}

pub const DEFAULT_LOG_DECADES: f64 = 4.0;

impl StateDensityEstimate {
    /// Default layout for `bins ≥ 2` bins over `[0, E_max]`: a quarter of
    /// the bins (at least one) split `[E_max/4, E_max]` linearly; the rest
    /// cover `[0, E_max/4]` with logarithmic bins spanning four decades
    /// below `E_max/4` and one bin `[0, E_max/4·10⁻⁴]` at the origin.
    pub fn from_samples(energies: &[f64], bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::param("a state density needs at least 2 bins"));
        }
        let e_max = energies
            .iter()
            .cloned()
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let lin = (bins / 4).max(1);
        let log = bins - lin;
        let mid = e_max / 4.0;
        let lo = mid * 10f64.powf(-DEFAULT_LOG_DECADES);
        let mut edges = alloc::vec![0.0];
        if log >= 2 {
            let n = log - 1;
            for k in 0..n {
                edges.push(lo * (mid / lo).powf(k as f64 / n as f64));
            }
        }
        for k in 0..lin {
            edges.push(mid + (e_max - mid) * k as f64 / lin as f64);
        }
        edges.push(e_max);
        Self::with_edges(energies, edges)
    }

    /// Histogram on caller-supplied ascending edges starting at 0; samples
    /// above the last edge are an error.
    pub fn with_edges(energies: &[f64], edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 3 || edges[0] != 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param(
                "edges must start at 0, ascend strictly and define at least 2 bins",
            ));
        }
        if energies.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let top = *edges.last().expect("non-empty");
        let mut raw = alloc::vec![0usize; edges.len() - 1];
        for &e in energies {
            if !(e >= 0.0 && e <= top) {
                return Err(Error::param(alloc::format!(
                    "energy {e} outside the histogram range"
                )));
            }
            // bins are [a, b) except the last, which is closed
            let k = edges
                .partition_point(|&x| x <= e)
                .saturating_sub(1)
                .min(raw.len() - 1);
            raw[k] += 1;
        }
        let total = energies.len();
        Ok(Self {
            counts: raw.iter().map(|&c| c as f64 / total as f64).collect(),
            bin_edges: edges,
            total_samples: total,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Frequency divided by bin width.
    pub fn densities(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(c, w)| c / (w[1] - w[0]))
            .collect()
    }

    /// Geometric bin centres (arithmetic for the bin touching 0).
    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| {
                if w[0] > 0.0 {
                    (w[0] * w[1]).sqrt()
                } else {
                    0.5 * w[1]
                }
            })
            .collect()
    }
}

/// Result of a log-log straight-line fit.
///
/// For `⟨⟨E⟩⟩(β)` the abscissa is `ln β`, the ordinate `ln ⟨⟨E⟩⟩`, and
/// `delta = amplitude − 1` from `⟨⟨E⟩⟩ = (δ+1)/β`. For a state density the
/// abscissa is `ln ε`, the ordinate `ln ρ(ε)`, and `delta = slope` from
/// `ρ = A ε^δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub log_beta: Vec<f64>,
    pub log_energy: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub delta: f64,
    pub amplitude: f64,
    pub r_squared: f64,
}

/// Weighted (by bin count) log-log fit of the density over the bins lying
/// entirely inside `window`.
pub fn fit_power_law(hist: &StateDensityEstimate, window: (f64, f64)) -> Result<ScalingFit> {
    let dens = hist.densities();
    let centers = hist.centers();
    let (mut x, mut y, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for (k, e) in hist.bin_edges.windows(2).enumerate() {
        if e[0] >= window.0 && e[1] <= window.1 && e[0] > 0.0 && hist.counts[k] > 0.0 {
            x.push(centers[k].ln());
            y.push(dens[k].ln());
            w.push(hist.counts[k] * hist.total_samples as f64);
        }
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: x.len(),
        });
    }
    let f = fit::fit_line_weighted(&x, &y, &w)?;
    Ok(ScalingFit {
        log_beta: x,
        log_energy: y,
        slope: f.slope,
        intercept: f.intercept,
        delta: f.slope,
        amplitude: f.intercept.exp(),
        r_squared: f.r_squared,
    })
}

/// Log-log least squares of `(β, ⟨⟨E⟩⟩)`; `delta = e^{intercept} − 1`.
pub fn fit_energy_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    if points
        .iter()
        .any(|&(b, e)| !(b > 0.0 && e > 0.0 && b.is_finite() && e.is_finite()))
    {
        return Err(Error::param("scaling fit needs positive β and energies"));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let f = fit::fit_line(&x, &y)?;
    let amplitude = f.intercept.exp();
    Ok(ScalingFit {
        log_beta: x,
        log_energy: y,
        slope: f.slope,
        intercept: f.intercept,
        delta: amplitude - 1.0,
        amplitude,
        r_squared: f.r_squared,
    })
}

/// Monte Carlo estimate of the one-particle partition function.
#[derive(Debug, Clone, PartialEq)]
pub struct Z1Estimate {
    pub z1: f64,
    pub z1_std_error: f64,
    pub log_z1: f64,
    /// Entry `(α, β)` is `⟨⟨z_α z̄_β⟩⟩`, the second-moment matrix
    /// `⟨⟨z z†⟩⟩`; at `β = 0` it equals `ω⁻¹`.
    pub constraint_avg: ComplexMatrix,
    /// Jackknife errors of the real and imaginary parts, entrywise.
    pub constraint_std_error: ComplexMatrix,
    pub mean_energy: f64,
    pub mean_energy_std_error: f64,
    pub samples: usize,
}

/// `Z₁ = ∫ d²ʳz exp(−βE₁(z) − ⟨z|ωz⟩ + tr ω)`, sampled with
/// `z ~ CN(0, ω⁻¹)`: `Z₁ = πʳ e^{tr ω} / det ω · E[e^{−βE₁}]`.
pub fn z1_mc(
    cop: &CostOperator,
    beta: f64,
    lm: &LagrangeMultipliers,
    samples: usize,
    seed: u64,
) -> Result<Z1Estimate> {
    let beta = check_beta(beta)?;
    let r = cop.rank();
    if lm.rank() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: lm.rank(),
        });
    }
    if samples == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let omega = lm.matrix();
    let eig = omega.hermitian_eigen();
    if eig.values[0] <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: eig.values[0],
        });
    }
    let chol = omega.hermitian_fn(|v| 1.0 / v.sqrt());
    let log_det: f64 = eig.values.iter().map(|v| v.ln()).sum();
    let log_pref = r as f64 * core::f64::consts::PI.ln() + omega.trace().re - log_det;

    // per block: count, Σw, ΣwE, Σ w z z† (real and imaginary parts)
    let nq = 3 + 2 * r * r;
    let mut blocks: Vec<Vec<f64>> = Vec::new();
    for (k, len) in block_sizes(samples).into_iter().enumerate() {
        let mut rng = stream_rng(seed, k as u64);
        let mut acc = alloc::vec![0.0; nq];
        acc[0] = len as f64;
        for _ in 0..len {
            let xi = complex_normal_vec(r, &mut rng);
            let z = chol.mul_vec(&xi);
            let e = cop.row_energy(&z);
            let w = (-beta * e).exp();
            acc[1] += w;
            acc[2] += w * e;
            for a in 0..r {
                for b in 0..r {
                    let m = z[a] * z[b].conj() * w;
                    acc[3 + 2 * (a * r + b)] += m.re;
                    acc[4 + 2 * (a * r + b)] += m.im;
                }
            }
        }
        blocks.push(acc);
    }
    let total: Vec<f64> = (0..nq).map(|q| blocks.iter().map(|b| b[q]).sum()).collect();
    let nb = blocks.len();
    // ratio estimator num(sums) with leave-one-block-out jackknife
    let jack = |num: &dyn Fn(&[f64]) -> f64| -> (f64, f64) {
        let full = num(&total);
        if nb < 2 {
            return (full, f64::INFINITY);
        }
        let loo: Vec<f64> = blocks
            .iter()
            .map(|bj| num(&total.iter().zip(bj).map(|(t, b)| t - b).collect::<Vec<_>>()))
            .collect();
        let m = loo.iter().sum::<f64>() / nb as f64;
        let ss: f64 = loo.iter().map(|v| (v - m) * (v - m)).sum();
        (full, ((nb as f64 - 1.0) / nb as f64 * ss).sqrt())
    };
    let (mw, mw_se) = jack(&|t: &[f64]| t[1] / t[0]);
    let (me, me_se) = jack(&|t: &[f64]| t[2] / t[1]);
    let mut avg = ComplexMatrix::zeros(r, r);
    let mut avg_se = ComplexMatrix::zeros(r, r);
    for a in 0..r {
        for b in 0..r {
            let i = 3 + 2 * (a * r + b);
            let (re, re_se) = jack(&|t: &[f64]| t[i] / t[1]);
            let (im, im_se) = jack(&|t: &[f64]| t[i + 1] / t[1]);
            avg[(a, b)] = C64::new(re, im);
            avg_se[(a, b)] = C64::new(re_se, im_se);
        }
    }
    let pref = log_pref.exp();
    Ok(Z1Estimate {
        z1: pref * mw,
        z1_std_error: pref * mw_se,
        log_z1: log_pref + mw.ln(),
        constraint_avg: avg,
        constraint_std_error: avg_se,
        mean_energy: me,
        mean_energy_std_error: me_se,
        samples,
    })
}

/// Settings of the Metropolis annealer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealOptions {
    /// Sweeps per temperature spent adapting the step size.
    pub burn_in_sweeps: usize,
    /// Sweeps per temperature that are measured (step size frozen).
    pub measure_sweeps: usize,
    pub target_acceptance: f64,
    pub initial_step: f64,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        Self {
            burn_in_sweeps: 1000,
            measure_sweeps: 2000,
            target_acceptance: 0.4,
            initial_step: 0.5,
        }
    }
}

/// Random `U = exp(iεH)` on rows `i, j` with `H = a·σ`, `a ~ N(0, 1)³`:
/// `U = cos(ε|a|) 1 + i sin(ε|a|) â·σ`. The proposal distribution is
/// invariant under `a → −a`, i.e. `U → U⁻¹`, so Metropolis acceptance
/// with the energy ratio alone samples the Haar-induced measure.
fn random_su2<R: Rng + ?Sized>(eps: f64, rng: &mut R) -> [[C64; 2]; 2] {
    let a: [f64; 3] = core::array::from_fn(|_| rng.sample(rand_distr::StandardNormal));
    let norm = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let (s, c) = (eps * norm).sin_cos();
    let n = [a[0] / norm, a[1] / norm, a[2] / norm];
    let is = C64::new(0.0, s);
    // n·σ = [[n3, n1 − i n2], [n1 + i n2, −n3]]
    [
        [C64::new(c, 0.0) + is * n[2], is * C64::new(n[0], -n[1])],
        [is * C64::new(n[0], n[1]), C64::new(c, 0.0) - is * n[2]],
    ]
}

/// Metropolis chain on `V_{N,r}` annealed through ascending `betas`.
///
/// The chain starts from a Haar point (stream 0 of `seed`). Moves rotate
/// two random rows of `z` by a random `SU(2)` element near the identity,
/// which keeps `z†z = 1` exactly up to rounding; the point is
/// re-orthonormalised every 100 sweeps. A sweep is `N` proposals. During
/// burn-in the step size adapts towards the target acceptance rate; it is
/// then frozen and the total energy is recorded once per sweep. Errors are
/// batch means over [`JACKKNIFE_BLOCKS`] batches.
pub fn anneal_average_energy(
    cop: &CostOperator,
    n: usize,
    betas: &[f64],
    opts: AnnealOptions,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    Ok(anneal(cop, n, betas, opts, seed)?.estimates)
}

/// Outcome of an annealing run.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealRun {
    pub estimates: Vec<McEstimate>,
    /// Lowest-energy configuration among the measured sweeps.
    pub best_point: StiefelPoint,
    pub best_energy: f64,
}

/// [`anneal_average_energy`], also keeping the best measured point.
pub fn anneal(
    cop: &CostOperator,
    n: usize,
    betas: &[f64],
    opts: AnnealOptions,
    seed: u64,
) -> Result<AnnealRun> {
    check_length(cop, n)?;
    if n < 2 {
        return Err(Error::param("the annealer needs N >= 2"));
    }
    if betas.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    for &b in betas {
        check_beta(b)?;
    }
    if betas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("annealing schedule must be ascending"));
    }
    if opts.measure_sweeps < JACKKNIFE_BLOCKS {
        return Err(Error::InsufficientData {
            needed: JACKKNIFE_BLOCKS,
            got: opts.measure_sweeps,
        });
    }
    let mut rng = stream_rng(seed, 0);
    let mut z = haar_stiefel(n, cop.rank(), &mut rng)?.into_matrix();
    let mut rows: Vec<f64> = (0..n).map(|i| cop.row_energy(z.row(i))).collect();
    let mut eps = opts.initial_step;
    let r = cop.rank();
    let mut zi = alloc::vec![ZERO; r];
    let mut zj = alloc::vec![ZERO; r];
    let mut sweeps_done = 0usize;

    let mut sweep = |beta: f64,
                     eps: f64,
                     z: &mut ComplexMatrix,
                     rows: &mut Vec<f64>,
                     rng: &mut rand_chacha::ChaCha8Rng| {
        let mut accepted = 0usize;
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let u = random_su2(eps, rng);
            for k in 0..r {
                let (a, b) = (z[(i, k)], z[(j, k)]);
                zi[k] = u[0][0] * a + u[0][1] * b;
                zj[k] = u[1][0] * a + u[1][1] * b;
            }
            let (ei, ej) = (cop.row_energy(&zi), cop.row_energy(&zj));
            let de = ei + ej - rows[i] - rows[j];
            if de <= 0.0 || rng.random::<f64>() < (-beta * de).exp() {
                z.row_mut(i).copy_from_slice(&zi);
                z.row_mut(j).copy_from_slice(&zj);
                rows[i] = ei;
                rows[j] = ej;
                accepted += 1;
            }
        }
        accepted
    };

    let mut out = Vec::with_capacity(betas.len());
    let mut best = (z.clone(), f64::INFINITY);
    for &beta in betas {
        for _ in 0..opts.burn_in_sweeps {
            let acc = sweep(beta, eps, &mut z, &mut rows, &mut rng) as f64 / n as f64;
            eps = if acc > opts.target_acceptance {
                eps * 1.05
            } else {
                eps / 1.05
            };
            eps = eps.clamp(1e-9, core::f64::consts::PI);
            sweeps_done += 1;
            if sweeps_done % 100 == 0 {
                reorthonormalise(&mut z, &mut rows, cop)?;
            }
        }
        let mut trace = Vec::with_capacity(opts.measure_sweeps);
        for _ in 0..opts.measure_sweeps {
            sweep(beta, eps, &mut z, &mut rows, &mut rng);
            sweeps_done += 1;
            if sweeps_done % 100 == 0 {
                reorthonormalise(&mut z, &mut rows, cop)?;
            }
            let e = rows.iter().sum::<f64>();
            if e < best.1 {
                best = (z.clone(), e);
            }
            trace.push(e);
        }
        out.push(batch_estimate(beta, &trace));
    }
    // rotations drift off the manifold only at rounding level
    let mut fixed = best.0;
    if fixed.unitarity_deviation() > crate::ensembles::STIEFEL_TOL {
        fixed = fixed.qr_gram_schmidt()?.0;
    }
    let best_energy = crate::costfn::energy_via_h(&fixed, cop.h_set())?;
    Ok(AnnealRun {
        estimates: out,
        best_point: StiefelPoint::new(fixed)?,
        best_energy,
    })
}

fn reorthonormalise(z: &mut ComplexMatrix, rows: &mut [f64], cop: &CostOperator) -> Result<()> {
    let (q, rr) = z.qr_gram_schmidt()?;
    // keep the column frame: q·diag(phase(R_kk))
    let mut q = q;
    for k in 0..q.cols() {
        let d = rr[(k, k)];
        let ph = d / d.norm();
        for i in 0..q.rows() {
            q[(i, k)] *= ph;
        }
    }
    *z = q;
    for (i, e) in rows.iter_mut().enumerate() {
        *e = cop.row_energy(z.row(i));
    }
    Ok(())
}

fn batch_estimate(beta: f64, trace: &[f64]) -> McEstimate {
    let n = trace.len();
    let mean = trace.iter().sum::<f64>() / n as f64;
    let var =
        trace.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
    let sizes = block_sizes(n);
    let mut start = 0;
    let means: Vec<f64> = sizes
        .iter()
        .map(|&len| {
            let m = trace[start..start + len].iter().sum::<f64>() / len as f64;
            start += len;
            m
        })
        .collect();
    let nb = means.len() as f64;
    let mm = means.iter().sum::<f64>() / nb;
    let se = (means.iter().map(|m| (m - mm) * (m - mm)).sum::<f64>() / (nb - 1.0) / nb).sqrt();
    let ess = if se > 0.0 {
        (var / (se * se)).min(n as f64)
    } else {
        n as f64
    };
    McEstimate {
        beta,
        samples: n,
        mean_energy: mean,
        std_error: se,
        min_energy_seen: trace.iter().cloned().fold(f64::INFINITY, f64::min),
        effective_sample_size: ess,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costfn::cost_operator;
    use crate::linalg::ONE;
    use crate::werner::werner_eigenensemble;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn werner_cop(p: f64) -> CostOperator {
        cost_operator(&werner_eigenensemble(p).unwrap())
    }

    #[test]
    fn block_layout() {
        assert_eq!(block_sizes(5), alloc::vec![1; 5]);
        let b = block_sizes(100);
        assert_eq!(b.len(), 32);
        assert_eq!(b.iter().sum::<usize>(), 100);
        assert_eq!(b[0], 4);
        assert_eq!(b[31], 3);
    }

    #[test]
    fn beta_zero_is_plain_mean() {
        let cop = werner_cop(0.5);
        let s = EnergySample::draw(&cop, 16, 500, 3).unwrap();
        let est = s.reweight(0.0);
        let plain = s.energies().sum::<f64>() / 500.0;
        assert_relative_eq!(est.mean_energy, plain, max_relative = 1e-13);
        assert_relative_eq!(est.effective_sample_size, 500.0, max_relative = 1e-12);
        assert!(est.min_energy_seen <= est.mean_energy);
        assert!(est.std_error > 0.0 && est.std_error < est.mean_energy);
    }

    #[test]
    fn duplication_invariance_and_monotonicity() {
        let cop = werner_cop(0.8);
        let s = EnergySample::draw(&cop, 8, 640, 5).unwrap();
        let doubled: Vec<Vec<f64>> = s
            .blocks()
            .iter()
            .map(|b| [&b[..], &b[..]].concat())
            .collect();
        let d = EnergySample::from_blocks(doubled).unwrap();
        let mut last = f64::INFINITY;
        for beta in [0.0, 1.0, 10.0, 100.0, 1e3] {
            let a = s.reweight(beta);
            let b = d.reweight(beta);
            assert_relative_eq!(a.mean_energy, b.mean_energy, max_relative = 1e-12);
            assert!(a.mean_energy <= last + 1e-15);
            assert!(a.effective_sample_size <= a.samples as f64 * (1.0 + 1e-12));
            last = a.mean_energy;
        }
    }

    #[test]
    fn seeded_draws_are_identical() {
        let cop = werner_cop(0.3);
        let a = mc_average_energy(&cop, 16, 10.0, 200, 9).unwrap();
        let b = mc_average_energy(&cop, 16, 10.0, 200, 9).unwrap();
        assert_eq!(a, b);
        let c = mc_average_energy(&cop, 16, 10.0, 200, 10).unwrap();
        assert_ne!(a.mean_energy, c.mean_energy);
        assert!(mc_average_energy(&cop, 3, 1.0, 10, 0).is_err());
    }

    #[test]
    fn histogram_basics() {
        let e: Vec<f64> = (0..1000).map(|k| 0.2 + k as f64 / 1000.0).collect();
        let h = StateDensityEstimate::from_samples(&e, 40).unwrap();
        assert_eq!(h.bins(), 40);
        assert_relative_eq!(h.counts.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_eq!(h.bin_edges[0], 0.0);
        assert_relative_eq!(*h.bin_edges.last().unwrap(), 1.199, epsilon = 1e-12);
        for (c, w) in h.counts.iter().zip(h.bin_edges.windows(2)) {
            if w[1] <= 0.2 {
                assert_eq!(*c, 0.0);
            }
        }
        assert!(StateDensityEstimate::from_samples(&e, 1).is_err());
    }

    fn synthetic(delta: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| rng.random::<f64>().powf(1.0 / (delta + 1.0)))
            .collect()
    }

    #[test]
    fn power_law_self_tests() {
        let h = StateDensityEstimate::from_samples(&synthetic(2.0, 1_000_000, 1), 80).unwrap();
        let f = fit_power_law(&h, (0.02, 0.25)).unwrap();
        assert!((f.delta - 2.0).abs() < 0.05, "{}", f.delta);
        let h = StateDensityEstimate::from_samples(&synthetic(0.5, 1_000_000, 2), 80).unwrap();
        let f = fit_power_law(&h, (0.002, 0.25)).unwrap();
        assert!((f.delta - 0.5).abs() < 0.05, "{}", f.delta);
        assert!(matches!(
            fit_power_law(&h, (0.2, 0.21)),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn energy_scaling_self_tests() {
        let pts: Vec<(f64, f64)> = (0..12)
            .map(|k| 10f64.powf(1.0 + 3.0 * k as f64 / 11.0))
            .map(|b| (b, 2.75 / b))
            .collect();
        let f = fit_energy_scaling(&pts).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-6);
        assert!((f.delta - 1.75).abs() < 1e-6);
        let flat: Vec<(f64, f64)> = [1.0, 10.0, 100.0].iter().map(|&b| (b, 0.3)).collect();
        assert!(fit_energy_scaling(&flat).unwrap().slope.abs() < 1e-14);
        assert!(fit_energy_scaling(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_energy_scaling(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn z1_gaussian_limits() {
        let cop = werner_cop(0.9);
        let lm = LagrangeMultipliers::from_real_diag(&[1.0; 4]).unwrap();
        let est = z1_mc(&cop, 0.0, &lm, 20_000, 4).unwrap();
        let closed = core::f64::consts::PI.powi(4) * 4f64.exp();
        assert_relative_eq!(est.z1, closed, max_relative = 1e-12);
        for a in 0..4 {
            for b in 0..4 {
                let want = if a == b { ONE } else { ZERO };
                let se = est.constraint_std_error[(a, b)];
                let d = est.constraint_avg[(a, b)] - want;
                assert!(d.re.abs() <= 4.0 * se.re + 1e-15 && d.im.abs() <= 4.0 * se.im + 1e-15);
            }
        }
        let bad = LagrangeMultipliers::from_real_diag(&[1.0, -1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            z1_mc(&cop, 0.0, &bad, 10, 0),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn annealer_preserves_constraint_and_cools() {
        let cop = werner_cop(1.0);
        let opts = AnnealOptions {
            burn_in_sweeps: 200,
            measure_sweeps: 320,
            ..Default::default()
        };
        let est = anneal_average_energy(&cop, 16, &[1.0, 100.0, 1e4], opts, 7).unwrap();
        assert_eq!(est.len(), 3);
        assert!(est[2].mean_energy < est[0].mean_energy);
        let again = anneal_average_energy(&cop, 16, &[1.0, 100.0, 1e4], opts, 7).unwrap();
        assert_eq!(est, again);
        assert!(anneal_average_energy(&cop, 16, &[10.0, 1.0], opts, 7).is_err());

        let run = anneal(&cop, 16, &[1.0, 100.0, 1e4], opts, 7).unwrap();
        assert_eq!(run.estimates, est);
        let lowest = est
            .iter()
            .map(|e| e.min_energy_seen)
            .fold(f64::INFINITY, f64::min);
        assert!((run.best_energy - lowest).abs() <= 1e-12 * lowest.max(1e-3));
        assert!(run.best_point.matrix().unitarity_deviation() < 1e-12);
    }

    #[test]
    fn replay_recovers_the_minimum() {
        let cop = werner_cop(0.5);
        let s = EnergySample::draw(&cop, 6, 500, 11).unwrap();
        let (b, i) = s.argmin();
        let z = EnergySample::replay_point(6, 4, 11, b, i).unwrap();
        let e = crate::costfn::energy(z.matrix(), &cop).unwrap();
        assert!((e - s.min_energy()).abs() < 1e-14);
    }
}
