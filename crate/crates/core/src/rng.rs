//! Seeded random streams.
//!
//! One root seed governs a run; every consumer derives an independent
//! substream from `(root, label, index)` so adding a stream never shifts the
//! draws of another. Streams are ChaCha12 keyed by a splitmix64 expansion of
//! the three inputs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{c64, CMat};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic substream for `(root, label, index)`.
pub fn substream(root: u64, label: &str, index: u64) -> ChaCha12Rng {
    let mut state = root
        ^ fnv1a(label.as_bytes()).rotate_left(17)
        ^ index.wrapping_mul(0xa076_1d64_78bd_642f);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Complex Gaussian with independent N(0,1) real and imaginary parts.
pub fn standard_complex<R: Rng>(rng: &mut R) -> c64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c64::new(re, im)
}

/// D×D matrix of independent standard complex Gaussians, filled row-major so
/// the draw order is part of the determinism contract.
pub fn ginibre<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = standard_complex(rng);
        }
    }
    m
}

/// Haar-random pure state as a unit vector.
pub fn haar_state<R: Rng>(dim: usize, rng: &mut R) -> Vec<c64> {
    let mut v: Vec<c64> = (0..dim).map(|_| standard_complex(rng)).collect();
    crate::mat::normalize(&mut v);
    v
}

/// Haar-random unitary: QR of a Ginibre matrix with the R diagonal's phases
/// absorbed into Q, which makes the distribution exactly Haar.
pub fn haar_unitary<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let g = ginibre(dim, rng);
    let qr = g.qr();
    let q = qr.compute_thin_q();
    let r = qr.compute_thin_r();
    let mut u = CMat::zeros(dim, dim);
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.abs() > 0.0 {
            d * (1.0 / d.abs())
        } else {
            c64::new(1.0, 0.0)
        };
        for i in 0..dim {
            u[(i, j)] = q[(i, j)] * phase;
        }
    }
    u
}
