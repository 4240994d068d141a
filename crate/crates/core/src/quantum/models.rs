//! Hamiltonian builders: open-chain Ising and XXZ spin models and dense
//! random Hermitian matrices, each capped at a sanity dimension.

use crate::quantum::HermitianOperator;
use crate::rng;
use crate::{c64, CMat, Error, Result};

/// Refuse to materialize matrices larger than this unless the caller raises
/// the cap explicitly.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// A model family together with the parameters needed to build it.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// Open transverse-field Ising chain:
    /// H = −J Σ_i σ^z_i σ^z_{i+1} − h Σ_i σ^x_i.
    Ising { sites: usize, coupling: f64, field: f64 },
    /// Open XXZ chain with longitudinal field:
    /// H = J Σ_i (σ^x σ^x + σ^y σ^y + Δ σ^z σ^z)_{i,i+1} − h Σ_i σ^z_i.
    Xxz {
        sites: usize,
        coupling: f64,
        anisotropy: f64,
        field: f64,
    },
    /// GUE-type dense matrix (A + A†)/2 with Ginibre A, reproducible from
    /// the seed.
    RandomHermitian { dim: usize, seed: u64 },
}

impl ModelSpec {
    pub fn dim(&self) -> Result<usize> {
        match self {
            Self::Ising { sites, .. } | Self::Xxz { sites, .. } => {
                if *sites == 0 {
                    return Err(Error::invalid("spin chain needs at least one site"));
                }
                if *sites > 24 {
                    return Err(Error::UnsupportedDimension {
                        dim: *sites,
                        reason: "more than 24 sites will not fit in memory".into(),
                    });
                }
                Ok(1usize << sites)
            }
            Self::RandomHermitian { dim, .. } => {
                if *dim == 0 {
                    return Err(Error::invalid("matrix dimension must be positive"));
                }
                Ok(*dim)
            }
        }
    }
}

pub fn build_hamiltonian(spec: &ModelSpec) -> Result<HermitianOperator> {
    build_hamiltonian_capped(spec, DEFAULT_MAX_DIM)
}

pub fn build_hamiltonian_capped(
    spec: &ModelSpec,
    max_dim: usize,
) -> Result<HermitianOperator> {
    let d = spec.dim()?;
    if d > max_dim {
        return Err(Error::ResourceLimit(format!(
            "model dimension {d} exceeds cap {max_dim}"
        )));
    }
    match spec {
        ModelSpec::Ising {
            sites,
            coupling,
            field,
        } => ising_chain(*sites, *coupling, *field),
        ModelSpec::Xxz {
            sites,
            coupling,
            anisotropy,
            field,
        } => xxz_chain(*sites, *coupling, *anisotropy, *field),
        ModelSpec::RandomHermitian { dim, seed } => random_hermitian(*dim, *seed),
    }
}

/// σ^z eigenvalue of site `i` in computational basis state `b`:
/// bit 0 ↦ +1, bit 1 ↦ −1.
#[inline]
fn z_sign(b: usize, i: usize) -> f64 {
    1.0 - 2.0 * ((b >> i) & 1) as f64
}

/// H = −J Σ σ^z_i σ^z_{i+1} − h Σ σ^x_i on an open chain of `sites` qubits.
pub fn ising_chain(sites: usize, coupling: f64, field: f64) -> Result<HermitianOperator> {
    if sites == 0 {
        return Err(Error::invalid("spin chain needs at least one site"));
    }
    let d = 1usize << sites;
    let mut m = CMat::zeros(d, d);
    for b in 0..d {
        let mut diag = 0.0;
        for i in 0..sites.saturating_sub(1) {
            diag -= coupling * z_sign(b, i) * z_sign(b, i + 1);
        }
        m[(b, b)] = c64::new(diag, 0.0);
        // σ^x_i flips bit i with amplitude 1.
        for i in 0..sites {
            let b2 = b ^ (1 << i);
            m[(b2, b)] += c64::new(-field, 0.0);
        }
    }
    HermitianOperator::new(m)
}

/// H = J Σ (σ^x σ^x + σ^y σ^y + Δ σ^z σ^z) − h Σ σ^z on an open chain.
pub fn xxz_chain(
    sites: usize,
    coupling: f64,
    anisotropy: f64,
    field: f64,
) -> Result<HermitianOperator> {
    if sites == 0 {
        return Err(Error::invalid("spin chain needs at least one site"));
    }
    let d = 1usize << sites;
    let mut m = CMat::zeros(d, d);
    for b in 0..d {
        let mut diag = 0.0;
        for i in 0..sites.saturating_sub(1) {
            diag += coupling * anisotropy * z_sign(b, i) * z_sign(b, i + 1);
        }
        for i in 0..sites {
            diag -= field * z_sign(b, i);
        }
        m[(b, b)] = c64::new(diag, 0.0);
        // σ^x σ^x + σ^y σ^y exchanges antiparallel neighbors with weight 2J.
        for i in 0..sites.saturating_sub(1) {
            let bi = (b >> i) & 1;
            let bj = (b >> (i + 1)) & 1;
            if bi != bj {
                let b2 = b ^ (1 << i) ^ (1 << (i + 1));
                m[(b2, b)] += c64::new(2.0 * coupling, 0.0);
            }
        }
    }
    HermitianOperator::new(m)
}

/// Dense (A + A†)/2 with A drawn entrywise from the standard complex normal
/// distribution; deterministic in the seed.
pub fn random_hermitian(dim: usize, seed: u64) -> Result<HermitianOperator> {
    if dim == 0 {
        return Err(Error::invalid("matrix dimension must be positive"));
    }
    let mut stream = rng::substream(seed, "model.gue", 0);
    let a = rng::ginibre(dim, &mut stream);
    HermitianOperator::symmetrize(&a)
}

/// 2×2 Pauli matrices for small constructions and tests.
pub fn pauli_x() -> CMat {
    let mut m = CMat::zeros(2, 2);
    m[(0, 1)] = c64::new(1.0, 0.0);
    m[(1, 0)] = c64::new(1.0, 0.0);
    m
}

pub fn pauli_y() -> CMat {
    let mut m = CMat::zeros(2, 2);
    m[(0, 1)] = c64::new(0.0, -1.0);
    m[(1, 0)] = c64::new(0.0, 1.0);
    m
}

pub fn pauli_z() -> CMat {
    let mut m = CMat::zeros(2, 2);
    m[(0, 0)] = c64::new(1.0, 0.0);
    m[(1, 1)] = c64::new(-1.0, 0.0);
    m
}

/// Single-site operator embedded in an `sites`-qubit chain: op acts on
/// qubit `site`, identity elsewhere. `op` must be 2×2.
pub fn embed_single_site(op: &CMat, sites: usize, site: usize) -> Result<CMat> {
    if op.nrows() != 2 || op.ncols() != 2 {
        return Err(Error::invalid("single-site operator must be 2x2"));
    }
    if site >= sites {
        return Err(Error::invalid(format!(
            "site {site} out of range for chain of {sites}"
        )));
    }
    let d = 1usize << sites;
    let mut m = CMat::zeros(d, d);
    for b in 0..d {
        let bit = (b >> site) & 1;
        for new_bit in 0..2 {
            let amp = op[(new_bit, bit)];
            if amp != c64::new(0.0, 0.0) {
                let b2 = (b & !(1 << site)) | (new_bit << site);
                m[(b2, b)] += amp;
            }
        }
    }
    Ok(m)
}
