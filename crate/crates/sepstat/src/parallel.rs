//! Rayon drivers. Work items are independent and seeded by index, and
//! results are collected in input order, so every function here returns
//! exactly what its serial counterpart in `sepstat-core` returns.

use rayon::prelude::*;

use sepstat_core::costfn::CostOperator;
use sepstat_core::statmech::{block_sizes, EnergySample};
use sepstat_core::werner::{
    avg_energy_werner_with, check_p_grid, saddle_search, scan_from_saddles, EquipartitionScan,
    SaddleResult,
};
use sepstat_core::{Error, Result};

/// Parallel [`sepstat_core::werner::equipartition_scan`] with explicit
/// saddle tolerance and restart count.
pub fn equipartition_scan(
    p_grid: &[f64],
    beta: f64,
    threshold: f64,
    tol: f64,
    restarts: usize,
    seed: u64,
) -> Result<EquipartitionScan> {
    check_p_grid(p_grid)?;
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter("threshold must be positive".into()));
    }
    let saddles = p_grid
        .par_iter()
        .map(|&p| saddle_search(beta, p, tol, restarts, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(scan_from_saddles(p_grid, beta, threshold, saddles))
}

/// Parallel [`EnergySample::draw`].
pub fn energy_sample(
    cop: &CostOperator,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<EnergySample> {
    if samples == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let blocks = block_sizes(samples)
        .into_par_iter()
        .enumerate()
        .map(|(k, len)| EnergySample::draw_block(cop, n, len, seed, k))
        .collect::<Result<Vec<_>>>()?;
    EnergySample::from_blocks(blocks)
}

/// `⟨⟨E₁⟩⟩` along a β grid; per-point failures are returned in place.
pub fn werner_energy_curve(
    betas: &[f64],
    p: f64,
    threshold: f64,
    seed: u64,
) -> Vec<Result<(f64, SaddleResult)>> {
    betas
        .par_iter()
        .map(|&b| avg_energy_werner_with(b, p, threshold, seed))
        .collect()
}
