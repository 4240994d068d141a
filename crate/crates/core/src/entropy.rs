//! Entropies in nats: Shannon entropy of outcome distributions, von Neumann
//! entropy, Gibbs states with their log-partition identity, the
//! minimum-over-bases property, and entropic uncertainty checks for unbiased
//! basis pairs.

use faer::Mat;
use rand_chacha::ChaCha12Rng;

use crate::hub::HubBasis;
use crate::mat;
use crate::mub::{unbiasedness_deviation, Basis};
use crate::quantum::{
    spectral_decompose, EigenvalueDistribution, HermitianOperator, QuantumState,
    SpectralDecomposition,
};
use crate::rng;
use crate::{c64, CMat, Error, Result};

/// Terms with probability at or below this floor contribute exactly zero,
/// the x·ln x → 0 limit; it also absorbs negative rounding dust.
pub const ENTROPY_PROB_FLOOR: f64 = 1e-12;

/// Slack allowed on the [0, ln D] range of any entropy value.
pub const ENTROPY_BOUND_TOL: f64 = 1e-12;

/// An entropy in nats together with the outcome count that bounds it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyValue {
    pub nats: f64,
    pub n_outcomes: usize,
}

impl EntropyValue {
    pub fn new(nats: f64, n_outcomes: usize) -> Result<Self> {
        if n_outcomes == 0 {
            return Err(Error::invalid("entropy needs at least one outcome"));
        }
        let hi = (n_outcomes as f64).ln() + ENTROPY_BOUND_TOL;
        if !(nats >= -ENTROPY_BOUND_TOL && nats <= hi) {
            return Err(Error::NumericCheck(format!(
                "entropy {nats:.15} outside [0, ln {n_outcomes}] tolerance band"
            )));
        }
        Ok(Self { nats, n_outcomes })
    }

    pub fn max_possible(&self) -> f64 {
        (self.n_outcomes as f64).ln()
    }

    /// Same value in bits.
    pub fn bits(&self) -> f64 {
        self.nats / std::f64::consts::LN_2
    }
}

/// −Σ p ln p over entries above the floor; no validation, no bounds check.
pub fn shannon_entropy_probs(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > ENTROPY_PROB_FLOOR)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Shannon entropy of an outcome distribution.
pub fn shannon_entropy(dist: &EigenvalueDistribution) -> Result<EntropyValue> {
    EntropyValue::new(shannon_entropy_probs(dist.probabilities()), dist.len())
}

/// −Σ q_n ln q_n over the state's spectral weights.
pub fn von_neumann_entropy(state: &QuantumState) -> Result<EntropyValue> {
    let weights: Vec<f64> = (0..state.n_components())
        .map(|n| state.weight(n))
        .collect();
    EntropyValue::new(shannon_entropy_probs(&weights), state.dim())
}

/// Outcome probabilities p_k = Σ_n q_n |⟨b_k|ψ_n⟩|², one per basis column.
pub fn basis_outcome_probs(state: &QuantumState, basis: &CMat) -> Result<Vec<f64>> {
    if basis.nrows() != state.dim() || basis.ncols() != state.dim() {
        return Err(Error::invalid("basis does not match the state dimension"));
    }
    let d = state.dim();
    let mut probs = vec![0.0f64; d];
    for n in 0..state.n_components() {
        let q = state.weight(n);
        if q == 0.0 {
            continue;
        }
        let w = mat::adjoint_matvec(basis, state.component(n));
        for (p, z) in probs.iter_mut().zip(&w) {
            *p += q * (z.re * z.re + z.im * z.im);
        }
    }
    Ok(probs)
}

/// Entropy of the state measured column-by-column in an orthonormal basis.
pub fn basis_entropy(state: &QuantumState, basis: &CMat) -> Result<EntropyValue> {
    let probs = basis_outcome_probs(state, basis)?;
    EntropyValue::new(shannon_entropy_probs(&probs), probs.len())
}

/// The entropy floor over measurement bases: equality with the von Neumann
/// entropy at the state's own eigenbasis, and no sampled basis below it.
#[derive(Debug, Clone)]
pub struct MinEntropyReport {
    pub von_neumann: f64,
    pub eigenbasis_entropy: f64,
    /// Smallest entropy over the sampled bases (the eigenbasis not included).
    pub sampled_min: f64,
    /// sampled_min − von_neumann; negative means a violation.
    pub margin: f64,
    pub n_trials: usize,
}

/// Compare the state's eigenbasis entropy with S_vN and scan Haar-random
/// bases, which can only do worse. Trial t draws from the (seed,
/// "entropy.minbasis", t) stream.
pub fn min_entropy_identity_check(
    state: &QuantumState,
    trials: usize,
    seed: u64,
) -> Result<MinEntropyReport> {
    if trials == 0 {
        return Err(Error::invalid("need at least one sampled basis"));
    }
    let d = state.dim();
    // A full eigenbasis is required; resolve the state spectrally if its
    // stored component list does not span the space.
    let resolved = if state.n_components() == d {
        state.clone()
    } else {
        QuantumState::from_density_matrix(&state.density_matrix())?
    };
    let vectors = match &resolved {
        QuantumState::Mixed { vectors, .. } => vectors.clone(),
        QuantumState::Pure(_) => unreachable!("resolved state spans the space"),
    };
    let s_vn = von_neumann_entropy(&resolved)?.nats;
    let eig = basis_entropy(&resolved, &vectors)?.nats;
    let mut sampled_min = f64::INFINITY;
    for t in 0..trials {
        let mut stream: ChaCha12Rng = rng::substream(seed, "entropy.minbasis", t as u64);
        let u = rng::haar_unitary(d, &mut stream);
        let h = basis_entropy(&resolved, &u)?.nats;
        sampled_min = sampled_min.min(h);
    }
    Ok(MinEntropyReport {
        von_neumann: s_vn,
        eigenbasis_entropy: eig,
        sampled_min,
        margin: sampled_min - s_vn,
        n_trials: trials,
    })
}

/// Thermal state e^{−βT}/Z resolved in the energy eigenbasis.
#[derive(Debug, Clone)]
pub struct GibbsState {
    pub beta: f64,
    pub log_z: f64,
    /// Tr(ρ T).
    pub energy: f64,
    pub entropy: f64,
    pub state: QuantumState,
}

impl GibbsState {
    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    /// |S − (ln Z + β E)|: zero analytically.
    pub fn identity_gap(&self) -> f64 {
        (self.entropy - (self.log_z + self.beta * self.energy)).abs()
    }
}

pub fn gibbs_state(t: &HermitianOperator, beta: f64) -> Result<GibbsState> {
    let sd = spectral_decompose(t)?;
    gibbs_state_from_spectral(&sd, beta)
}

/// Exponent shift by min_α βE_α keeps every summand ≤ 1 for either sign of β.
pub fn gibbs_state_from_spectral(
    sd: &SpectralDecomposition,
    beta: f64,
) -> Result<GibbsState> {
    if !beta.is_finite() {
        return Err(Error::invalid("inverse temperature must be finite"));
    }
    let exponents: Vec<f64> = sd.eigenvalues().iter().map(|&e| -beta * e).collect();
    let m = exponents.iter().fold(f64::NEG_INFINITY, |a, &x| a.max(x));
    let shifted: Vec<f64> = exponents.iter().map(|&x| (x - m).exp()).collect();
    let z_shifted: f64 = shifted.iter().sum();
    let log_z = m + z_shifted.ln();
    let weights: Vec<f64> = shifted.iter().map(|&w| w / z_shifted).collect();
    let energy: f64 = weights
        .iter()
        .zip(sd.eigenvalues())
        .map(|(&w, &e)| w * e)
        .sum();
    let entropy = shannon_entropy_probs(&weights);
    let state = QuantumState::mixed(weights, sd.eigenvectors().clone())?;
    Ok(GibbsState {
        beta,
        log_z,
        energy,
        entropy,
        state,
    })
}

/// Pair of basis entropies against the ln D floor for unbiased bases.
#[derive(Debug, Clone, Copy)]
pub struct UncertaintyReport {
    pub h_first: f64,
    pub h_second: f64,
    pub bound: f64,
    /// h_first + h_second − bound; the relation demands ≥ 0 up to rounding.
    pub slack: f64,
}

/// Pairwise unbiasedness required before the ln D lower bound applies.
pub const UNCERTAINTY_PAIR_TOL: f64 = 1e-8;

/// H_1(ψ) + H_2(ψ) ≥ ln D for a pure state and an unbiased basis pair.
pub fn entropic_uncertainty_check(
    state: &QuantumState,
    first: &Basis,
    second: &Basis,
) -> Result<UncertaintyReport> {
    if !state.is_pure() {
        return Err(Error::invalid(
            "the uncertainty check takes a pure state",
        ));
    }
    if first.dim() != state.dim() || second.dim() != state.dim() {
        return Err(Error::invalid("basis dimensions do not match the state"));
    }
    let dev = unbiasedness_deviation(first.matrix(), second.matrix());
    if dev > UNCERTAINTY_PAIR_TOL {
        return Err(Error::NotUnbiased(format!(
            "basis pair deviates from unbiasedness by {dev:.3e}; the ln D \
             bound only applies to unbiased pairs"
        )));
    }
    let h1 = basis_entropy(state, first.matrix())?.nats;
    let h2 = basis_entropy(state, second.matrix())?.nats;
    let bound = (state.dim() as f64).ln();
    Ok(UncertaintyReport {
        h_first: h1,
        h_second: h2,
        bound,
        slack: h1 + h2 - bound,
    })
}

/// States narrow in energy are near-maximal in any basis unbiased to the
/// energy eigenbasis.
#[derive(Debug, Clone, Copy)]
pub struct NarrowEnergyReport {
    pub h_energy: f64,
    pub h_unbiased: f64,
    pub log_dim: f64,
    /// h_unbiased − (ln D − h_energy); ≥ 0 up to rounding.
    pub bound_gap: f64,
    /// Set when h_energy ≤ 0.1 ln D, the narrow regime where h_unbiased
    /// is forced above 0.9 ln D.
    pub narrow_regime: bool,
}

pub fn narrow_energy_entropy_bound(
    state: &QuantumState,
    sd: &SpectralDecomposition,
    hub: &HubBasis,
) -> Result<NarrowEnergyReport> {
    if sd.dim() != state.dim() || hub.dim() != state.dim() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let h_energy = basis_entropy(state, sd.eigenvectors())?.nats;
    let h_unbiased = basis_entropy(state, hub.matrix())?.nats;
    let log_dim = (state.dim() as f64).ln();
    Ok(NarrowEnergyReport {
        h_energy,
        h_unbiased,
        log_dim,
        bound_gap: h_unbiased - (log_dim - h_energy),
        narrow_regime: h_energy <= 0.1 * log_dim,
    })
}

/// Identity basis as a plain matrix, for callers that measure in the
/// computational basis.
pub fn computational_matrix(dim: usize) -> Mat<c64> {
    mat::identity(dim)
}
