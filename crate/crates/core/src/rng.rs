//! Random matrices and reproducible stream splitting.
//!
//! Stochastic routines never touch global RNG state. They either take a
//! caller-owned `Rng` or derive independent ChaCha8 streams from a master
//! seed: stream `k` of seed `s` is `ChaCha8Rng::seed_from_u64(s)` with
//! `set_stream(k)`. Work split into numbered blocks therefore produces the
//! same numbers no matter which thread evaluates which block.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, C64};

/// Independent RNG stream `stream` derived from `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex normal `(x + iy)/√2` with `x, y ~ N(0, 1)`, so that
/// `E|z|² = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn complex_normal_vec<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<C64> {
    (0..len).map(|_| complex_normal(rng)).collect()
}

/// Haar-distributed `d × d` unitary.
///
/// A Ginibre matrix is orthonormalised column by column and each column is
/// rotated by the phase of the matching diagonal entry of `R`, which makes
/// the result invariant under left multiplication by any fixed unitary.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    haar_columns(d, d, rng)
}

/// First `cols` columns of a Haar unitary on `C^rows`.
pub(crate) fn haar_columns<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> ComplexMatrix {
    assert!(rows >= cols && cols >= 1);
    loop {
        let g = ginibre(rows, cols, rng);
        // rank deficiency has probability zero; redraw if it ever happens
        let Ok((mut q, r)) = g.qr_gram_schmidt() else {
            continue;
        };
        for j in 0..cols {
            let d = r[(j, j)];
            let phase = d / d.norm();
            for i in 0..rows {
                q[(i, j)] *= phase;
            }
        }
        return q;
    }
}
