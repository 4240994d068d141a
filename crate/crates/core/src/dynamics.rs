//! Exact closed-system time evolution, narrow-energy initial states,
//! microcanonical and diagonal ensembles, and thermalization traces.

use crate::entropy::shannon_entropy_probs;
use crate::equilibrium::{
    energy_shell, shell_width_for_levels, EnergyShell, SHELL_MIN_LEVELS,
};
use crate::mat;
use crate::mub;
use crate::quantum::{
    eigenvalue_distribution, expectation, EigenvalueDistribution, Observable,
    QuantumState, SpectralDecomposition,
};
use crate::rng;
use crate::{c64, CMat, Error, Result};

use rand::Rng;

/// Fraction of the spectral range used as the shell width when the caller
/// does not pick one.
pub const DEFAULT_SHELL_FRACTION: f64 = 0.05;

/// Unbiasedness gate for ensemble comparisons that assume it.
pub const ENSEMBLE_UNBIASED_TOL: f64 = 1e-8;

/// Default trace grid: this many logarithmic points spanning
/// [`TIME_GRID_MIN`, `TIME_GRID_MAX`] in units of the inverse energy scale.
pub const TIME_GRID_POINTS: usize = 200;
pub const TIME_GRID_MIN: f64 = 1e-2;
pub const TIME_GRID_MAX: f64 = 1e4;

/// ψ(t) = Σ_α c_α e^{−iE_α t}|E_α⟩ applied to every component.
pub fn evolve(
    state: &QuantumState,
    sd: &SpectralDecomposition,
    t: f64,
) -> Result<QuantumState> {
    if state.dim() != sd.dim() {
        return Err(Error::invalid("state and decomposition dims differ"));
    }
    if !t.is_finite() {
        return Err(Error::invalid("time must be finite"));
    }
    let d = sd.dim();
    let phases: Vec<c64> = sd
        .eigenvalues()
        .iter()
        .map(|&e| {
            let (s, c) = (-e * t).sin_cos();
            c64::new(c, s)
        })
        .collect();
    let evolve_vec = |psi: &[c64]| -> Vec<c64> {
        let mut coeffs = sd.coefficients_of(psi);
        for (c, &ph) in coeffs.iter_mut().zip(&phases) {
            *c *= ph;
        }
        mat::matvec(sd.eigenvectors(), &coeffs)
    };
    if state.is_pure() {
        QuantumState::pure(evolve_vec(state.component(0)))
    } else {
        let n = state.n_components();
        let mut vectors = CMat::zeros(d, n);
        let mut weights = Vec::with_capacity(n);
        for c in 0..n {
            weights.push(state.weight(c));
            let v = evolve_vec(state.component(c));
            for i in 0..d {
                vectors[(i, c)] = v[i];
            }
        }
        QuantumState::mixed(weights, vectors)
    }
}

/// Uniform mixture over the eigenstates of an energy shell.
#[derive(Debug, Clone)]
pub struct MicrocanonicalState {
    pub shell: EnergyShell,
    pub state: QuantumState,
}

pub fn microcanonical_state(
    sd: &SpectralDecomposition,
    e0: f64,
    delta_e: f64,
) -> Result<MicrocanonicalState> {
    microcanonical_state_with_floor(sd, e0, delta_e, SHELL_MIN_LEVELS)
}

pub fn microcanonical_state_with_floor(
    sd: &SpectralDecomposition,
    e0: f64,
    delta_e: f64,
    min_levels: usize,
) -> Result<MicrocanonicalState> {
    let shell = energy_shell(sd, e0, delta_e, min_levels)?;
    let members: Vec<usize> = shell.member_indices().collect();
    let d = sd.dim();
    let k = members.len();
    let mut vectors = CMat::zeros(d, k);
    for (c, &alpha) in members.iter().enumerate() {
        let u = sd.eigenvector(alpha);
        for i in 0..d {
            vectors[(i, c)] = u[i];
        }
    }
    let state = QuantumState::mixed(vec![1.0 / k as f64; k], vectors)?;
    Ok(MicrocanonicalState { shell, state })
}

/// Width to use when none is requested: a fixed fraction of the spectral
/// range, widened to the smallest window holding the level floor when the
/// default is too narrow.
pub fn default_shell_width(
    sd: &SpectralDecomposition,
    e0: f64,
    min_levels: usize,
) -> Result<f64> {
    let base = DEFAULT_SHELL_FRACTION * sd.spectral_range();
    if base > 0.0 && energy_shell(sd, e0, base, min_levels).is_ok() {
        return Ok(base);
    }
    shell_width_for_levels(sd, e0, min_levels)
}

/// Mean energy of a state in the decomposed spectrum: Σ_n q_n Σ_α |c_α|²E_α.
pub fn mean_energy(state: &QuantumState, sd: &SpectralDecomposition) -> Result<f64> {
    if state.dim() != sd.dim() {
        return Err(Error::invalid("state and decomposition dims differ"));
    }
    let mut acc = 0.0f64;
    for n in 0..state.n_components() {
        let coeffs = sd.coefficients_of(state.component(n));
        let part: f64 = coeffs
            .iter()
            .zip(sd.eigenvalues())
            .map(|(c, &e)| (c.re * c.re + c.im * c.im) * e)
            .sum();
        acc += state.weight(n) * part;
    }
    Ok(acc)
}

/// Microcanonical reference for a pure state: a shell centered on its mean
/// energy with the default width.
pub fn microcanonical_reference(
    psi0: &QuantumState,
    sd: &SpectralDecomposition,
) -> Result<MicrocanonicalState> {
    let e0 = mean_energy(psi0, sd)?;
    let width = default_shell_width(sd, e0, SHELL_MIN_LEVELS)?;
    microcanonical_state(sd, e0, width)
}

/// Time-averaged (dephased) state of a pure initial condition: eigenvalue
/// groups keep their projections, cross-group coherences vanish.
#[derive(Debug, Clone)]
pub struct DiagonalEnsemble {
    /// |⟨E_α|ψ0⟩|² for every level α.
    weights: Vec<f64>,
    state: QuantumState,
}

/// Level weights must stay normalized after projection.
pub const DE_WEIGHT_SUM_TOL: f64 = 1e-10;

/// Eigenvalue groups carrying less weight than this are numerical zeros and
/// contribute no ensemble component.
pub const DE_COMPONENT_FLOOR: f64 = 1e-14;

pub fn diagonal_ensemble(
    psi0: &QuantumState,
    sd: &SpectralDecomposition,
) -> Result<DiagonalEnsemble> {
    if !psi0.is_pure() {
        return Err(Error::invalid("the diagonal ensemble takes a pure state"));
    }
    if psi0.dim() != sd.dim() {
        return Err(Error::invalid("state and decomposition dims differ"));
    }
    let d = sd.dim();
    let coeffs = sd.coefficients_of(psi0.component(0));
    let weights: Vec<f64> = coeffs.iter().map(|z| z.re * z.re + z.im * z.im).collect();
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > DE_WEIGHT_SUM_TOL {
        return Err(Error::NumericCheck(format!(
            "level weights sum to {total:.12}, expected 1"
        )));
    }
    // One component per eigenvalue group: the normalized group projection.
    let mut group_weights = Vec::new();
    let mut columns: Vec<Vec<c64>> = Vec::new();
    for group in sd.groups() {
        let w: f64 = group.clone().map(|alpha| weights[alpha]).sum();
        if w <= DE_COMPONENT_FLOOR {
            continue;
        }
        let mut v = vec![c64::new(0.0, 0.0); d];
        for alpha in group.clone() {
            let u = sd.eigenvector(alpha);
            let ca = coeffs[alpha];
            for i in 0..d {
                v[i] += u[i] * ca;
            }
        }
        let inv = 1.0 / w.sqrt();
        for z in &mut v {
            *z *= inv;
        }
        group_weights.push(w);
        columns.push(v);
    }
    // Dropped groups carry at most D · floor of weight; fold it back in.
    let kept: f64 = group_weights.iter().sum();
    for w in &mut group_weights {
        *w /= kept;
    }
    let mut vectors = CMat::zeros(d, columns.len());
    for (c, col) in columns.iter().enumerate() {
        for i in 0..d {
            vectors[(i, c)] = col[i];
        }
    }
    let state = QuantumState::mixed(group_weights, vectors)?;
    Ok(DiagonalEnsemble { weights, state })
}

impl DiagonalEnsemble {
    /// Per-level weights |c_α|².
    pub fn level_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }
}

/// Amplitude profile for a state built inside an energy shell.
#[derive(Debug, Clone, Copy)]
pub enum StateProfile {
    /// Equal magnitudes, independent uniform phases.
    UniformRandomPhase,
    /// Gaussian magnitude profile about the shell center, uniform phases.
    GaussianAmplitude { sigma: f64 },
}

/// A pure state supported on an energy shell, with its energy-basis entropy.
#[derive(Debug, Clone)]
pub struct NarrowEnergyState {
    pub state: QuantumState,
    /// Shannon entropy of the level weights |c_α|².
    pub energy_entropy: f64,
}

pub fn narrow_energy_state(
    sd: &SpectralDecomposition,
    shell: &EnergyShell,
    profile: StateProfile,
    seed: u64,
) -> Result<NarrowEnergyState> {
    let members: Vec<usize> = shell.member_indices().collect();
    if members.is_empty() {
        return Err(Error::invalid("shell has no members"));
    }
    if members[members.len() - 1] >= sd.dim() {
        return Err(Error::invalid("shell indexes past the spectrum"));
    }
    let mut stream = rng::substream(seed, "dynamics.narrow", 0);
    let mut weights: Vec<f64> = match profile {
        StateProfile::UniformRandomPhase => vec![1.0; members.len()],
        StateProfile::GaussianAmplitude { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::invalid("profile width must be positive"));
            }
            members
                .iter()
                .map(|&alpha| {
                    let x = (sd.eigenvalue(alpha) - shell.e0) / sigma;
                    (-0.5 * x * x).exp()
                })
                .collect()
        }
    };
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::NumericCheck(
            "profile vanished on the whole shell".into(),
        ));
    }
    for w in &mut weights {
        *w /= total;
    }
    let d = sd.dim();
    let mut psi = vec![c64::new(0.0, 0.0); d];
    for (&alpha, &w) in members.iter().zip(&weights) {
        let phi: f64 = stream.gen_range(0.0..std::f64::consts::TAU);
        let amp = c64::new(phi.cos(), phi.sin()) * w.sqrt();
        let u = sd.eigenvector(alpha);
        for i in 0..d {
            psi[i] += u[i] * amp;
        }
    }
    let energy_entropy = shannon_entropy_probs(&weights);
    Ok(NarrowEnergyState {
        state: QuantumState::pure_normalized(psi)?,
        energy_entropy,
    })
}

/// Agreement between the diagonal and microcanonical ensembles on an
/// observable unbiased to the energy eigenbasis.
#[derive(Debug, Clone)]
pub struct DeMcReport {
    pub de_expectation: f64,
    pub mc_expectation: f64,
    /// |Tr(O ρ_DE) − Tr(O ρ_mc)|.
    pub gap: f64,
    /// Tr O / D, which both sides reproduce for an unbiased observable.
    pub reference: f64,
    pub de_distribution: EigenvalueDistribution,
    pub mc_distribution: EigenvalueDistribution,
    /// Total variation between the two outcome distributions.
    pub distribution_distance: f64,
    pub shell: EnergyShell,
    pub unbiasedness: f64,
}

/// Compare Tr(O ρ_DE) with Tr(O ρ_mc) for an observable whose eigenbasis is
/// unbiased to the energy eigenbasis. The shell is centered on the initial
/// state's mean energy; `delta_e` None picks the default width.
pub fn de_equals_mc_for_huo(
    psi0: &QuantumState,
    sd: &SpectralDecomposition,
    o: &Observable,
    delta_e: Option<f64>,
) -> Result<DeMcReport> {
    if psi0.dim() != sd.dim() || o.dim() != sd.dim() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let unbiasedness = mub::unbiasedness_deviation(o.basis(), sd.eigenvectors());
    if unbiasedness > ENSEMBLE_UNBIASED_TOL {
        return Err(Error::NotUnbiased(format!(
            "observable eigenbasis deviates from unbiasedness by {unbiasedness:.3e} \
             (tolerance {ENSEMBLE_UNBIASED_TOL:.0e})"
        )));
    }
    let e0 = mean_energy(psi0, sd)?;
    let width = match delta_e {
        Some(w) => w,
        None => default_shell_width(sd, e0, SHELL_MIN_LEVELS)?,
    };
    let mc = microcanonical_state(sd, e0, width)?;
    let de = diagonal_ensemble(psi0, sd)?;
    let op = o.to_operator()?;
    let de_expectation = expectation(de.state(), &op)?;
    let mc_expectation = expectation(&mc.state, &op)?;
    let de_distribution = eigenvalue_distribution(de.state(), o)?;
    let mc_distribution = eigenvalue_distribution(&mc.state, o)?;
    let distribution_distance = de_distribution.total_variation(&mc_distribution)?;
    Ok(DeMcReport {
        gap: (de_expectation - mc_expectation).abs(),
        de_expectation,
        mc_expectation,
        reference: o.trace_over_dim(),
        de_distribution,
        mc_distribution,
        distribution_distance,
        shell: mc.shell,
        unbiasedness,
    })
}

/// Expectation, fine-grained basis entropy, and distance to the
/// microcanonical outcome distribution along a time grid.
#[derive(Debug, Clone)]
pub struct ThermalizationTrace {
    pub times: Vec<f64>,
    pub expectations: Vec<f64>,
    /// Entropy of the full basis-outcome distribution (D outcomes) at each
    /// time; bounded by ln D.
    pub entropies: Vec<f64>,
    /// Total variation between p(λ, t) and the microcanonical prediction.
    pub tv_distances: Vec<f64>,
    pub mc_expectation: f64,
    pub shell: EnergyShell,
}

pub fn default_time_grid(energy_scale: f64) -> Result<Vec<f64>> {
    if !(energy_scale > 0.0) {
        return Err(Error::invalid("energy scale must be positive"));
    }
    let n = TIME_GRID_POINTS;
    let log_min = TIME_GRID_MIN.ln();
    let log_max = TIME_GRID_MAX.ln();
    Ok((0..n)
        .map(|k| {
            let f = k as f64 / (n - 1) as f64;
            (log_min + f * (log_max - log_min)).exp() / energy_scale
        })
        .collect())
}

pub fn thermalization_trace(
    psi0: &QuantumState,
    sd: &SpectralDecomposition,
    o: &Observable,
    times: &[f64],
) -> Result<ThermalizationTrace> {
    if !psi0.is_pure() {
        return Err(Error::invalid("traces start from a pure state"));
    }
    if psi0.dim() != sd.dim() || o.dim() != sd.dim() {
        return Err(Error::invalid("dimension mismatch"));
    }
    if times.is_empty() {
        return Err(Error::invalid("time grid is empty"));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::invalid("time grid must be strictly increasing"));
        }
    }
    if !times[0].is_finite() || !times[times.len() - 1].is_finite() {
        return Err(Error::invalid("time grid must be finite"));
    }
    let d = sd.dim();
    let mc = microcanonical_reference(psi0, sd)?;
    let mc_dist = eigenvalue_distribution(&mc.state, o)?;
    let mc_expectation = expectation(&mc.state, &o.to_operator()?)?;
    // Cache c = U†ψ0 and W = B†U; then B†ψ(t) = W (c ∘ e^{−iEt}).
    let coeffs = sd.coefficients_of(psi0.component(0));
    let w_mat = o.basis().adjoint() * sd.eigenvectors();
    let evs = sd.eigenvalues();
    let values: Vec<f64> = (0..d).map(|k| o.value_of_column(k)).collect();
    let mut expectations = Vec::with_capacity(times.len());
    let mut entropies = Vec::with_capacity(times.len());
    let mut tv_distances = Vec::with_capacity(times.len());
    let mut rotated = vec![c64::new(0.0, 0.0); d];
    for &t in times {
        for (slot, (&c, &e)) in rotated.iter_mut().zip(coeffs.iter().zip(evs)) {
            let (s, co) = (-e * t).sin_cos();
            *slot = c * c64::new(co, s);
        }
        let w = mat::matvec(&w_mat, &rotated);
        let fine: Vec<f64> = w.iter().map(|z| z.re * z.re + z.im * z.im).collect();
        let mut expect = 0.0f64;
        let mut outcome = vec![0.0f64; o.n_outcomes()];
        for k in 0..d {
            expect += values[k] * fine[k];
            outcome[o.outcome_of_column(k)] += fine[k];
        }
        let tv = 0.5
            * outcome
                .iter()
                .zip(mc_dist.probabilities())
                .map(|(&a, &b)| (a - b).abs())
                .sum::<f64>();
        expectations.push(expect);
        entropies.push(shannon_entropy_probs(&fine));
        tv_distances.push(tv);
    }
    Ok(ThermalizationTrace {
        times: times.to_vec(),
        expectations,
        entropies,
        tv_distances,
        mc_expectation,
        shell: mc.shell,
    })
}

/// Mean of the values whose times fall in [lo, hi].
pub fn window_average(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::invalid("times and values differ in length"));
    }
    let mut sum = 0.0f64;
    let mut n = 0usize;
    for (&t, &v) in times.iter().zip(values) {
        if t >= lo && t <= hi {
            sum += v;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::invalid(format!(
            "no grid points inside [{lo:.3e}, {hi:.3e}]"
        )));
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hub::{hub_from_hamiltonian, make_huo, HubMethod, SpectrumAssignment};
    use crate::quantum::models::{ising_chain, pauli_x, random_hermitian};
    use crate::quantum::{spectral_decompose, HermitianOperator, Observable};

    #[test]
    fn zero_time_is_the_identity() {
        let t = ising_chain(3, 1.0, 0.5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let mut stream = rng::substream(2, "test.t0", 0);
        let psi0 = rng::haar_state(8, &mut stream);
        let evolved = evolve(&QuantumState::pure(psi0.clone()).unwrap(), &sd, 0.0).unwrap();
        for (a, b) in evolved.component(0).iter().zip(&psi0) {
            assert!((*a - *b).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenstates_only_pick_up_phase() {
        let t = ising_chain(3, 1.0, 0.5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let psi0 = QuantumState::pure(sd.eigenvector(2).to_vec()).unwrap();
        let evolved = evolve(&psi0, &sd, 1.7).unwrap();
        // Global phase e^{−iE t}.
        let e = sd.eigenvalue(2);
        let (s, c) = (-e * 1.7f64).sin_cos();
        let ph = c64::new(c, s);
        for (a, b) in evolved.component(0).iter().zip(psi0.component(0)) {
            assert!((*a - *b * ph).abs() < 1e-12);
        }
    }

    #[test]
    fn two_level_rabi_cosine() {
        // T = σ^z, ψ0 = |+⟩: ⟨σ^x⟩(t) = cos 2t.
        let t_op = HermitianOperator::new(crate::quantum::models::pauli_z()).unwrap();
        let sd = spectral_decompose(&t_op).unwrap();
        let x_op = HermitianOperator::new(pauli_x()).unwrap();
        let a = c64::new((0.5f64).sqrt(), 0.0);
        let psi0 = QuantumState::pure(vec![a, a]).unwrap();
        for t in [0.0, 0.4, 1.3, 2.9] {
            let psi_t = evolve(&psi0, &sd, t).unwrap();
            let got = expectation(&psi_t, &x_op).unwrap();
            assert!((got - (2.0 * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_is_preserved_along_the_grid() {
        let t = random_hermitian(12, 7).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let mut stream = rng::substream(4, "test.norm", 0);
        let psi0 = QuantumState::pure(rng::haar_state(12, &mut stream)).unwrap();
        for &t in default_time_grid(sd.spectral_range()).unwrap().iter().step_by(25) {
            let psi_t = evolve(&psi0, &sd, t).unwrap();
            assert!((mat::norm(psi_t.component(0)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn microcanonical_uniform_weights_and_energy_in_window() {
        let t = random_hermitian(16, 3).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let e0 = 0.5 * (sd.min_eigenvalue() + sd.max_eigenvalue());
        let width = shell_width_for_levels(&sd, e0, 5).unwrap();
        let mc = microcanonical_state(&sd, e0, width).unwrap();
        assert!(mc.shell.len() >= 5);
        let k = mc.shell.len();
        for c in 0..mc.state.n_components() {
            assert!((mc.state.weight(c) - 1.0 / k as f64).abs() < 1e-12);
        }
        let e = expectation(&mc.state, &t).unwrap();
        assert!((e - e0).abs() <= width / 2.0 + 1e-12);
    }

    #[test]
    fn whole_spectrum_shell_is_maximally_mixed() {
        let t = random_hermitian(6, 8).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let e0 = 0.5 * (sd.min_eigenvalue() + sd.max_eigenvalue());
        let width = 2.1 * sd.spectral_range();
        let mc = microcanonical_state(&sd, e0, width).unwrap();
        assert_eq!(mc.shell.len(), 6);
        let rho = mc.state.density_matrix();
        let expected = CMat::from_fn(6, 6, |i, j| {
            if i == j {
                c64::new(1.0 / 6.0, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        assert!(mat::max_abs_diff(&rho, &expected) < 1e-12);
    }

    #[test]
    fn too_narrow_shell_is_rejected() {
        let t = random_hermitian(8, 5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        assert!(matches!(
            microcanonical_state(&sd, sd.eigenvalue(3), 1e-14),
            Err(Error::InsufficientStatistics(_))
        ));
    }

    #[test]
    fn diagonal_ensemble_of_eigenstate_is_that_eigenstate() {
        let t = random_hermitian(7, 2).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let psi0 = QuantumState::pure(sd.eigenvector(4).to_vec()).unwrap();
        let de = diagonal_ensemble(&psi0, &sd).unwrap();
        assert_eq!(de.state().n_components(), 1);
        assert!((de.level_weights()[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_ensemble_weights_for_equal_superposition() {
        let t = random_hermitian(5, 6).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let a = c64::new((0.5f64).sqrt(), 0.0);
        let u0 = sd.eigenvector(0);
        let u3 = sd.eigenvector(3);
        let psi: Vec<c64> = (0..5).map(|i| (u0[i] + u3[i]) * a).collect();
        let de = diagonal_ensemble(&QuantumState::pure(psi).unwrap(), &sd).unwrap();
        assert!((de.level_weights()[0] - 0.5).abs() < 1e-12);
        assert!((de.level_weights()[3] - 0.5).abs() < 1e-12);
        assert_eq!(de.state().n_components(), 2);
    }

    #[test]
    fn long_time_average_matches_diagonal_ensemble() {
        // Nondegenerate spectrum: the time average of ⟨O(t)⟩ converges to
        // Tr(O ρ_DE). 10^4 uniform samples over [0, 10^4].
        let t = random_hermitian(8, 17).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        assert!(sd.is_nondegenerate());
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
        let o = make_huo(&hub, &SpectrumAssignment::degenerate(8, 4).unwrap()).unwrap();
        let op = o.to_operator().unwrap();
        let mut stream = rng::substream(9, "test.longtime", 0);
        let psi0 = QuantumState::pure(rng::haar_state(8, &mut stream)).unwrap();
        let de = diagonal_ensemble(&psi0, &sd).unwrap();
        let de_expect = expectation(de.state(), &op).unwrap();
        let n = 10_000usize;
        let mut acc = 0.0f64;
        for k in 0..n {
            let t_k = 1e4 * (k as f64 + 0.5) / n as f64;
            let psi_t = evolve(&psi0, &sd, t_k).unwrap();
            acc += expectation(&psi_t, &op).unwrap();
        }
        let avg = acc / n as f64;
        let spread = o.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(
            (avg - de_expect).abs() <= 0.02 * spread.max(1.0),
            "time average {avg} vs ensemble {de_expect}"
        );
    }

    #[test]
    fn narrow_state_profiles() {
        let t = random_hermitian(32, 12).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let e0 = 0.5 * (sd.min_eigenvalue() + sd.max_eigenvalue());
        let width = shell_width_for_levels(&sd, e0, 11).unwrap();
        let shell = energy_shell(&sd, e0, width, 11).unwrap();
        let k = shell.len();

        let flat = narrow_energy_state(&sd, &shell, StateProfile::UniformRandomPhase, 5)
            .unwrap();
        assert!((flat.energy_entropy - (k as f64).ln()).abs() < 1e-12);

        let gauss = narrow_energy_state(
            &sd,
            &shell,
            StateProfile::GaussianAmplitude { sigma: width / 4.0 },
            5,
        )
        .unwrap();
        assert!(gauss.energy_entropy < (k as f64).ln());

        // Support stays inside the shell.
        let coeffs = sd.coefficients_of(gauss.state.component(0));
        for (alpha, c) in coeffs.iter().enumerate() {
            if !shell.contains(alpha) {
                assert!(c.abs() < 1e-12);
            }
        }
        // Deterministic per seed.
        let again = narrow_energy_state(&sd, &shell, StateProfile::UniformRandomPhase, 5)
            .unwrap();
        for (a, b) in flat
            .state
            .component(0)
            .iter()
            .zip(again.state.component(0))
        {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_member_shell_returns_the_eigenstate() {
        let t = random_hermitian(9, 19).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let e0 = sd.eigenvalue(4);
        let width = shell_width_for_levels(&sd, e0, 1).unwrap();
        let shell = energy_shell(&sd, e0, width, 1).unwrap();
        assert_eq!(shell.len(), 1);
        let out = narrow_energy_state(&sd, &shell, StateProfile::UniformRandomPhase, 3)
            .unwrap();
        assert!(out.energy_entropy.abs() < 1e-12);
        let overlap = mat::inner(sd.eigenvector(4), out.state.component(0));
        assert!((overlap.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn de_and_mc_agree_for_unbiased_observables() {
        let t = ising_chain(3, 1.0, 0.5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
        let o = make_huo(&hub, &SpectrumAssignment::degenerate(8, 4).unwrap()).unwrap();
        let mut stream = rng::substream(13, "test.demc", 0);
        let psi0 = QuantumState::pure(rng::haar_state(8, &mut stream)).unwrap();
        let report = de_equals_mc_for_huo(&psi0, &sd, &o, None).unwrap();
        assert!(report.gap < 1e-10, "gap {}", report.gap);
        assert!((report.de_expectation - report.reference).abs() < 1e-10);
        // A second initial state gives the same ensemble expectation.
        let psi1 = QuantumState::pure(rng::haar_state(8, &mut stream)).unwrap();
        let other = de_equals_mc_for_huo(&psi1, &sd, &o, None).unwrap();
        assert!((report.de_expectation - other.de_expectation).abs() < 1e-10);
    }

    #[test]
    fn de_mc_comparison_rejects_biased_observables() {
        let t = ising_chain(3, 1.0, 0.5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        // O = T shares the eigenbasis: maximally biased.
        let o = Observable::from_spectral(&sd).unwrap();
        let psi0 = QuantumState::pure(sd.eigenvector(0).to_vec()).unwrap();
        assert!(matches!(
            de_equals_mc_for_huo(&psi0, &sd, &o, None),
            Err(Error::NotUnbiased(_))
        ));
    }

    #[test]
    fn eigenstate_trace_is_flat() {
        let t = ising_chain(3, 1.0, 0.5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
        let o = make_huo(&hub, &SpectrumAssignment::degenerate(8, 4).unwrap()).unwrap();
        let psi0 = QuantumState::pure(sd.eigenvector(3).to_vec()).unwrap();
        let times: Vec<f64> = (1..40).map(|k| 0.3 * k as f64).collect();
        let trace = thermalization_trace(&psi0, &sd, &o, &times).unwrap();
        for w in trace.expectations.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-12);
        }
        for w in trace.entropies.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn conserved_observable_trace_is_constant() {
        let t = ising_chain(3, 1.0, 0.5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let o = Observable::from_spectral(&sd).unwrap();
        let mut stream = rng::substream(21, "test.conserve", 0);
        let psi0 = QuantumState::pure(rng::haar_state(8, &mut stream)).unwrap();
        let times: Vec<f64> = (1..60).map(|k| 0.5 * k as f64).collect();
        let trace = thermalization_trace(&psi0, &sd, &o, &times).unwrap();
        let e0 = expectation(&psi0, &t).unwrap();
        for &e in &trace.expectations {
            assert!((e - e0).abs() < 1e-10);
        }
        for w in trace.tv_distances.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_entropy_stays_in_bounds_and_grid_is_validated() {
        let t = random_hermitian(16, 23).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
        let o = make_huo(&hub, &SpectrumAssignment::degenerate(16, 4).unwrap()).unwrap();
        let mut stream = rng::substream(30, "test.bounds", 0);
        let psi0 = QuantumState::pure(rng::haar_state(16, &mut stream)).unwrap();
        let times = default_time_grid(sd.spectral_range()).unwrap();
        let trace = thermalization_trace(&psi0, &sd, &o, &times).unwrap();
        let cap = 16f64.ln() + 1e-12;
        for &h in &trace.entropies {
            assert!(h >= 0.0 && h <= cap);
        }
        assert!(thermalization_trace(&psi0, &sd, &o, &[1.0, 1.0]).is_err());
        assert!(thermalization_trace(&psi0, &sd, &o, &[]).is_err());
    }

    #[test]
    fn energy_is_conserved_along_traces() {
        let t = random_hermitian(12, 29).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let mut stream = rng::substream(31, "test.energy", 0);
        let psi0 = QuantumState::pure(rng::haar_state(12, &mut stream)).unwrap();
        let e0 = expectation(&psi0, &t).unwrap();
        for &tp in default_time_grid(sd.spectral_range()).unwrap().iter().step_by(20) {
            let psi_t = evolve(&psi0, &sd, tp).unwrap();
            assert!((expectation(&psi_t, &t).unwrap() - e0).abs() < 1e-10);
        }
    }

    #[test]
    fn window_average_selects_the_right_points() {
        let times = vec![1.0, 2.0, 3.0, 4.0];
        let vals = vec![10.0, 20.0, 30.0, 40.0];
        assert_eq!(window_average(&times, &vals, 2.0, 3.0).unwrap(), 25.0);
        assert!(window_average(&times, &vals, 5.0, 6.0).is_err());
    }

    #[test]
    fn default_grid_shape() {
        let grid = default_time_grid(2.0).unwrap();
        assert_eq!(grid.len(), TIME_GRID_POINTS);
        assert!((grid[0] - TIME_GRID_MIN / 2.0).abs() < 1e-15);
        assert!((grid[grid.len() - 1] - TIME_GRID_MAX / 2.0).abs() < 1e-9);
        for w in grid.windows(2) {
            assert!(w[1] > w[0]);
        }
    }
}
