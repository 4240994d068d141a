//! Hamiltonian-unbiased bases and observables: rotate an unbiased partner
//! basis into a Hamiltonian's eigenframe, attach a spectrum with chosen
//! degeneracy structure, and extract the phase data of the overlaps.

use crate::mub::{self, Basis};
use crate::quantum::{Observable, SpectralDecomposition};
use crate::rng;
use crate::{c64, CMat, Error, RMat, Result};

/// Construction gate: every |⟨b_k|E_α⟩|² must sit within this distance of 1/D.
pub const HUB_CONSTRUCTION_TOL: f64 = 1e-10;

/// Rejection gate for phase extraction from a claimed-unbiased basis.
pub const PHASE_TABLE_UNBIASED_TOL: f64 = 1e-8;

/// How the unbiased partner basis is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HubMethod {
    /// Discrete Fourier basis rotated into the eigenframe; works for any D.
    Fourier,
    /// Basis `index` of the complete unbiased family for D (prime or 2^N).
    /// Index 0 is the computational basis and is rejected: rotated into the
    /// eigenframe it reproduces the eigenbasis itself.
    MubFamily { index: usize },
}

/// An orthonormal basis unbiased to a specific Hamiltonian eigenbasis.
#[derive(Debug, Clone)]
pub struct HubBasis {
    matrix: CMat,
    method: HubMethod,
}

impl HubBasis {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn column(&self, k: usize) -> &[c64] {
        self.matrix.col_as_slice(k)
    }

    pub fn method(&self) -> HubMethod {
        self.method
    }

    /// Wrap a basis without the unbiasedness gate. Exists so deliberately
    /// broken inputs can flow into the downstream checks that are supposed
    /// to reject them; never use it on a basis you believe is unbiased.
    pub fn from_parts_unchecked(matrix: CMat, method: HubMethod) -> Self {
        Self { matrix, method }
    }

    /// The same basis set with its columns in a seeded random order.
    ///
    /// Column order decides which basis vector lands in which eigenvalue
    /// sector downstream, and the structured order of the fourier and
    /// family constructions pairs values with vectors on a rigid lattice.
    /// A shuffle makes that pairing generic without touching unbiasedness;
    /// the statistical limit theorems for off-diagonal matrix elements
    /// assume a generic pairing and fail for the lattice one.
    pub fn shuffled(&self, seed: u64) -> HubBasis {
        use rand::seq::SliceRandom;
        let d = self.dim();
        let mut order: Vec<usize> = (0..d).collect();
        let mut stream = rng::substream(seed, "hub.shuffle", 0);
        order.shuffle(&mut stream);
        let matrix = CMat::from_fn(d, d, |i, k| self.matrix[(i, order[k])]);
        HubBasis {
            matrix,
            method: self.method,
        }
    }
}

/// max_{k,α} | |⟨b_k|E_α⟩|² − 1/D |.
pub fn unbiasedness_to_eigenbasis(basis: &CMat, sd: &SpectralDecomposition) -> f64 {
    mub::unbiasedness_deviation(basis, sd.eigenvectors())
}

/// Build a basis unbiased to the eigenbasis of `sd`: columns U·P where U
/// stacks the eigenvectors and P is the chosen partner basis.
pub fn hub_from_hamiltonian(
    sd: &SpectralDecomposition,
    method: HubMethod,
) -> Result<HubBasis> {
    let d = sd.dim();
    let partner: Basis = match method {
        HubMethod::Fourier => mub::fourier_basis(d)?,
        HubMethod::MubFamily { index } => {
            if index == 0 {
                return Err(Error::invalid(
                    "family basis 0 is the computational basis; rotated into the \
                     eigenframe it is the eigenbasis itself, not unbiased to it",
                ));
            }
            let family = mub::generate_mub_family(d)?;
            family.basis(index)?
        }
    };
    let matrix = sd.eigenvectors() * partner.matrix();
    let dev = unbiasedness_to_eigenbasis(&matrix, sd);
    if dev > HUB_CONSTRUCTION_TOL {
        return Err(Error::NotUnbiased(format!(
            "constructed basis deviates from unbiasedness by {dev:.3e}"
        )));
    }
    Ok(HubBasis {
        matrix,
        method,
    })
}

/// Distinct eigenvalues with multiplicities, summing to the full dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumAssignment {
    values: Vec<f64>,
    multiplicities: Vec<usize>,
}

impl SpectrumAssignment {
    /// D distinct values 2k − (D−1): symmetric integers, spacing 2, trace 0.
    pub fn nondegenerate(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        let values = (0..dim)
            .map(|k| (2 * k) as f64 - (dim - 1) as f64)
            .collect();
        Ok(Self {
            values,
            multiplicities: vec![1; dim],
        })
    }

    /// `distinct` values 2j − (distinct−1), each with multiplicity
    /// dim/distinct; requires distinct to divide dim.
    pub fn degenerate(dim: usize, distinct: usize) -> Result<Self> {
        if distinct == 0 || dim == 0 {
            return Err(Error::invalid("dimensions must be positive"));
        }
        if dim % distinct != 0 {
            return Err(Error::invalid(format!(
                "distinct value count {distinct} does not divide dimension {dim}"
            )));
        }
        let values = (0..distinct)
            .map(|j| (2 * j) as f64 - (distinct - 1) as f64)
            .collect();
        Ok(Self {
            values,
            multiplicities: vec![dim / distinct; distinct],
        })
    }

    /// Four distinct values; the workhorse degenerate shape.
    pub fn degenerate_default(dim: usize) -> Result<Self> {
        Self::degenerate(dim, 4)
    }

    pub fn custom(values: Vec<f64>, multiplicities: Vec<usize>) -> Result<Self> {
        if values.len() != multiplicities.len() || values.is_empty() {
            return Err(Error::invalid(
                "values and multiplicities must be nonempty and equal-length",
            ));
        }
        for w in values.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid("values must be strictly increasing"));
            }
        }
        if multiplicities.iter().any(|&m| m == 0) {
            return Err(Error::invalid("multiplicities must be positive"));
        }
        Ok(Self {
            values,
            multiplicities,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn n_distinct(&self) -> usize {
        self.values.len()
    }

    pub fn total_dim(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn trace(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.multiplicities)
            .map(|(&v, &m)| v * m as f64)
            .sum()
    }

    /// Σ_j m_j (λ_j − λ̄)² with λ̄ = trace / D.
    pub fn centered_square_sum(&self) -> f64 {
        let d = self.total_dim() as f64;
        let mean = self.trace() / d;
        self.values
            .iter()
            .zip(&self.multiplicities)
            .map(|(&v, &m)| m as f64 * (v - mean) * (v - mean))
            .sum()
    }
}

/// Attach a spectrum to an unbiased basis: sector j spans the columns
/// assigned to value j, contiguously in column order.
pub fn make_huo(basis: &HubBasis, spectrum: &SpectrumAssignment) -> Result<Observable> {
    if spectrum.total_dim() != basis.dim() {
        return Err(Error::invalid(format!(
            "spectrum multiplicities sum to {}, basis dimension is {}",
            spectrum.total_dim(),
            basis.dim()
        )));
    }
    Observable::from_basis(
        basis.matrix().clone(),
        spectrum.values().to_vec(),
        spectrum.multiplicities().to_vec(),
    )
}

/// Overlap phases θ[k, α] = arg(√D ⟨b_k|E_α⟩), each in (−π, π], plus the
/// largest distance of the reconstructed overlaps e^{iθ}/√D from the true
/// ones (tiny for a genuine unbiased basis).
#[derive(Debug, Clone)]
pub struct PhaseTable {
    theta: RMat,
    reproduction_deviation: f64,
}

pub fn phase_table(basis: &HubBasis, sd: &SpectralDecomposition) -> Result<PhaseTable> {
    phase_table_from_matrix(basis.matrix(), sd)
}

/// Same construction from a raw orthonormal basis matrix, for callers that
/// hold an observable's eigenbasis rather than a [`HubBasis`].
pub fn phase_table_from_matrix(
    basis: &CMat,
    sd: &SpectralDecomposition,
) -> Result<PhaseTable> {
    if basis.nrows() != sd.dim() || basis.ncols() != sd.dim() {
        return Err(Error::invalid("basis and decomposition dims differ"));
    }
    let d = sd.dim();
    let g = basis.adjoint() * sd.eigenvectors();
    let target = 1.0 / d as f64;
    let mut worst = 0.0f64;
    for a in 0..d {
        for k in 0..d {
            let z = g[(k, a)];
            let p = z.re * z.re + z.im * z.im;
            worst = worst.max((p - target).abs());
        }
    }
    if worst > PHASE_TABLE_UNBIASED_TOL {
        return Err(Error::NotUnbiased(format!(
            "overlap magnitudes deviate from 1/D by {worst:.3e}; phases are \
             only defined for an unbiased basis"
        )));
    }
    let inv_sqrt_d = target.sqrt();
    let mut theta = RMat::zeros(d, d);
    let mut repro = 0.0f64;
    for a in 0..d {
        for k in 0..d {
            let z = g[(k, a)];
            let th = z.arg();
            theta[(k, a)] = th;
            let rebuilt = c64::new(th.cos() * inv_sqrt_d, th.sin() * inv_sqrt_d);
            repro = repro.max((rebuilt - z).abs());
        }
    }
    Ok(PhaseTable {
        theta,
        reproduction_deviation: repro,
    })
}

impl PhaseTable {
    pub fn dim(&self) -> usize {
        self.theta.nrows()
    }

    /// θ for basis column k against eigenvector α.
    pub fn theta(&self, k: usize, alpha: usize) -> f64 {
        self.theta[(k, alpha)]
    }

    /// ω_k^{αβ} = θ_kβ − θ_kα wrapped to (−π, π].
    pub fn omega(&self, k: usize, alpha: usize, beta: usize) -> f64 {
        wrap_angle(self.theta[(k, beta)] - self.theta[(k, alpha)])
    }

    /// All D phase differences for the pair (α, β).
    pub fn omega_column(&self, alpha: usize, beta: usize) -> Vec<f64> {
        (0..self.dim()).map(|k| self.omega(k, alpha, beta)).collect()
    }

    pub fn reproduction_deviation(&self) -> f64 {
        self.reproduction_deviation
    }
}

/// Map any angle to (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// O_{αβ} rebuilt from phases alone: (1/D) Σ_k λ_{j(k)} e^{i(θ_kβ − θ_kα)}.
/// Independent route to the same number as direct conjugation ⟨E_α|O|E_β⟩.
pub fn reconstruct_matrix_element(
    o: &Observable,
    phases: &PhaseTable,
    alpha: usize,
    beta: usize,
) -> c64 {
    let d = o.dim();
    let mut acc = c64::new(0.0, 0.0);
    for k in 0..d {
        let th = phases.theta(k, beta) - phases.theta(k, alpha);
        let lambda = o.value_of_column(k);
        acc += c64::new(th.cos() * lambda, th.sin() * lambda);
    }
    acc * (1.0 / d as f64)
}
