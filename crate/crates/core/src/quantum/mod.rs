//! Quantum primitives: Hermitian operators, spectral decompositions with
//! degeneracy grouping, observables with sector structure, states, outcome
//! distributions, and constraint evaluation.

use std::ops::Range;

use crate::mat;
use crate::{c64, CMat, Error, Result};

pub mod models;

/// Relative hermiticity gate: max |M − M†| ≤ tol · max(1, max|M|).
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Orthonormality gate for sector bases and state eigenvectors.
pub const BASIS_ORTHONORMALITY_TOL: f64 = 1e-10;

/// A dense self-adjoint matrix, validated at construction.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: CMat,
}

impl HermitianOperator {
    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::invalid(format!(
                "operator must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = mat::max_abs(&matrix).max(1.0);
        let dev = mat::hermiticity_deviation(&matrix);
        if dev > HERMITICITY_TOL * scale {
            return Err(Error::NumericCheck(format!(
                "matrix is not Hermitian: max |M - M^H| = {dev:.3e} exceeds {:.3e}",
                HERMITICITY_TOL * scale
            )));
        }
        Ok(Self { matrix })
    }

    /// Build from (M + M†)/2; always Hermitian by construction.
    pub fn symmetrize(m: &CMat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::invalid("symmetrize requires a square matrix"));
        }
        let h = CMat::from_fn(m.nrows(), m.ncols(), |i, j| {
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        });
        Ok(Self { matrix: h })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        mat::matvec(&self.matrix, v)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }
}

/// Eigenvalues (ascending), orthonormal eigenvectors, and degeneracy groups
/// obtained by gap-chaining: consecutive eigenvalues closer than the tolerance
/// share a group.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
    groups: Vec<Range<usize>>,
    degeneracy_tol: f64,
}

/// Default grouping tolerance for a spectrum: scales with the spectral range,
/// with an absolute floor so exactly-degenerate spectra still group.
pub fn default_degeneracy_tol(eigenvalues: &[f64]) -> f64 {
    let lo = eigenvalues.first().copied().unwrap_or(0.0);
    let hi = eigenvalues.last().copied().unwrap_or(0.0);
    let scale = eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    1e-9 * (hi - lo) + 1e-12 * scale + f64::MIN_POSITIVE
}

pub fn spectral_decompose(op: &HermitianOperator) -> Result<SpectralDecomposition> {
    decompose_impl(op, None)
}

pub fn spectral_decompose_with_tol(
    op: &HermitianOperator,
    degeneracy_tol: f64,
) -> Result<SpectralDecomposition> {
    if !(degeneracy_tol > 0.0) {
        return Err(Error::invalid("degeneracy tolerance must be positive"));
    }
    decompose_impl(op, Some(degeneracy_tol))
}

fn decompose_impl(
    op: &HermitianOperator,
    tol: Option<f64>,
) -> Result<SpectralDecomposition> {
    let evd = op
        .matrix()
        .selfadjoint_eigendecomposition(faer::Side::Lower);
    let d = op.dim();
    let s = evd.s().column_vector();
    let mut eigenvalues: Vec<f64> = (0..d).map(|i| s[i].re).collect();
    let eigenvectors = evd.u().to_owned();
    // faer returns ascending eigenvalues; enforce the contract defensively.
    for w in eigenvalues.windows(2) {
        if w[1] < w[0] {
            return Err(Error::NumericCheck(
                "eigensolver returned non-ascending eigenvalues".into(),
            ));
        }
    }
    for x in &mut eigenvalues {
        if !x.is_finite() {
            return Err(Error::NumericCheck(
                "eigensolver returned non-finite eigenvalues".into(),
            ));
        }
        // Normalize negative zero for stable text output.
        if *x == 0.0 {
            *x = 0.0;
        }
    }
    let degeneracy_tol = tol.unwrap_or_else(|| default_degeneracy_tol(&eigenvalues));
    let groups = chain_groups(&eigenvalues, degeneracy_tol);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        groups,
        degeneracy_tol,
    })
}

fn chain_groups(eigenvalues: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0usize;
    for i in 1..eigenvalues.len() {
        if eigenvalues[i] - eigenvalues[i - 1] > tol {
            groups.push(start..i);
            start = i;
        }
    }
    if !eigenvalues.is_empty() {
        groups.push(start..eigenvalues.len());
    }
    groups
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, alpha: usize) -> f64 {
        self.eigenvalues[alpha]
    }

    /// Columns are eigenvectors in eigenvalue order.
    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, alpha: usize) -> &[c64] {
        self.eigenvectors.col_as_slice(alpha)
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn degeneracy_tol(&self) -> f64 {
        self.degeneracy_tol
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.groups.iter().all(|g| g.len() == 1)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    pub fn spectral_range(&self) -> f64 {
        self.max_eigenvalue() - self.min_eigenvalue()
    }

    /// Coefficients c_α = ⟨E_α|v⟩.
    pub fn coefficients_of(&self, v: &[c64]) -> Vec<c64> {
        mat::adjoint_matvec(&self.eigenvectors, v)
    }

    /// ‖V Λ V† − M‖_max.
    pub fn reconstruction_deviation(&self, op: &HermitianOperator) -> f64 {
        let d = self.dim();
        let scaled = CMat::from_fn(d, d, |i, j| {
            self.eigenvectors[(i, j)] * self.eigenvalues[j]
        });
        let rebuilt = &scaled * self.eigenvectors.adjoint();
        mat::max_abs_diff(&rebuilt, op.matrix())
    }

    pub fn orthonormality_deviation(&self) -> f64 {
        mat::orthonormality_deviation(&self.eigenvectors)
    }
}

/// An observable resolved into distinct eigenvalues λ_j (strictly ascending)
/// with an orthonormal sector basis: column k of `basis` is |j,s⟩ where j =
/// `sector_of[k]` and s indexes within the sector.
#[derive(Debug, Clone)]
pub struct Observable {
    values: Vec<f64>,
    sectors: Vec<Range<usize>>,
    sector_of: Vec<usize>,
    basis: CMat,
}

impl Observable {
    /// Collapse a spectral decomposition's degeneracy groups into sectors;
    /// each sector's eigenvalue is its group mean.
    pub fn from_spectral(sd: &SpectralDecomposition) -> Result<Self> {
        let values: Vec<f64> = sd
            .groups()
            .iter()
            .map(|g| {
                let sum: f64 = sd.eigenvalues()[g.clone()].iter().sum();
                sum / g.len() as f64
            })
            .collect();
        let multiplicities: Vec<usize> = sd.groups().iter().map(|g| g.len()).collect();
        Self::from_basis(sd.eigenvectors().clone(), values, multiplicities)
    }

    /// Assemble from an explicit orthonormal basis with sector sizes.
    pub fn from_basis(
        basis: CMat,
        values: Vec<f64>,
        multiplicities: Vec<usize>,
    ) -> Result<Self> {
        let d = basis.nrows();
        if basis.ncols() != d || d == 0 {
            return Err(Error::invalid("sector basis must be square and nonempty"));
        }
        if values.len() != multiplicities.len() || values.is_empty() {
            return Err(Error::invalid(
                "values and multiplicities must be nonempty and equal-length",
            ));
        }
        if multiplicities.iter().any(|&m| m == 0) {
            return Err(Error::invalid("sector multiplicities must be positive"));
        }
        let total: usize = multiplicities.iter().sum();
        if total != d {
            return Err(Error::invalid(format!(
                "multiplicities sum to {total}, expected dimension {d}"
            )));
        }
        for w in values.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid(
                    "distinct eigenvalues must be strictly increasing",
                ));
            }
        }
        let dev = mat::orthonormality_deviation(&basis);
        if dev > BASIS_ORTHONORMALITY_TOL {
            return Err(Error::NumericCheck(format!(
                "sector basis not orthonormal: deviation {dev:.3e}"
            )));
        }
        let mut sectors = Vec::with_capacity(values.len());
        let mut sector_of = vec![0usize; d];
        let mut start = 0usize;
        for (j, &m) in multiplicities.iter().enumerate() {
            sectors.push(start..start + m);
            for k in start..start + m {
                sector_of[k] = j;
            }
            start += m;
        }
        Ok(Self {
            values,
            sectors,
            sector_of,
            basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn n_outcomes(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn sector(&self, j: usize) -> Range<usize> {
        self.sectors[j].clone()
    }

    pub fn sectors(&self) -> &[Range<usize>] {
        &self.sectors
    }

    pub fn multiplicity(&self, j: usize) -> usize {
        self.sectors[j].len()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.sectors.iter().map(|r| r.len()).collect()
    }

    /// Outcome index j for basis column k.
    pub fn outcome_of_column(&self, k: usize) -> usize {
        self.sector_of[k]
    }

    /// Eigenvalue attached to basis column k.
    pub fn value_of_column(&self, k: usize) -> f64 {
        self.values[self.sector_of[k]]
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn basis_column(&self, k: usize) -> &[c64] {
        self.basis.col_as_slice(k)
    }

    pub fn trace(&self) -> f64 {
        self.sectors
            .iter()
            .zip(&self.values)
            .map(|(r, &v)| v * r.len() as f64)
            .sum()
    }

    pub fn trace_over_dim(&self) -> f64 {
        self.trace() / self.dim() as f64
    }

    /// Dense matrix B Λ B†.
    pub fn to_matrix(&self) -> CMat {
        let d = self.dim();
        let scaled = CMat::from_fn(d, d, |i, k| {
            self.basis[(i, k)] * self.value_of_column(k)
        });
        &scaled * self.basis.adjoint()
    }

    pub fn to_operator(&self) -> Result<HermitianOperator> {
        HermitianOperator::symmetrize(&self.to_matrix())
    }

    /// ‖Σ_j Π_j − I‖_max (completeness of the sector projectors).
    pub fn completeness_deviation(&self) -> f64 {
        mat::orthonormality_deviation(&self.basis)
    }
}

/// Outcome probabilities p(λ_j) = Tr(ρ Π_j), aligned with an observable's
/// distinct eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenvalueDistribution {
    values: Vec<f64>,
    probabilities: Vec<f64>,
}

/// Probability sanity gates for a measured distribution.
pub const PROB_NEGATIVE_TOL: f64 = 1e-12;
pub const PROB_SUM_TOL: f64 = 1e-10;

impl EigenvalueDistribution {
    pub fn new(values: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if values.len() != probabilities.len() || values.is_empty() {
            return Err(Error::invalid(
                "distribution needs equal-length nonempty values/probabilities",
            ));
        }
        for &p in &probabilities {
            if !((-PROB_NEGATIVE_TOL..=1.0 + PROB_NEGATIVE_TOL).contains(&p)) {
                return Err(Error::NumericCheck(format!(
                    "probability {p:.3e} outside [0, 1] tolerance band"
                )));
            }
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::NumericCheck(format!(
                "probabilities sum to {total:.12} (must be 1 within {PROB_SUM_TOL:.0e})"
            )));
        }
        Ok(Self {
            values,
            probabilities,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, j: usize) -> f64 {
        self.probabilities[j]
    }

    /// Σ λ_j p(λ_j).
    pub fn mean(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.probabilities)
            .map(|(&v, &p)| v * p)
            .sum()
    }

    /// Total-variation distance; the two distributions must share outcomes.
    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::invalid("distributions have different outcome counts"));
        }
        for (a, b) in self.values.iter().zip(other.values()) {
            if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::invalid(
                    "distributions are over different outcome values",
                ));
            }
        }
        Ok(0.5
            * self
                .probabilities
                .iter()
                .zip(other.probabilities())
                .map(|(&p, &q)| (p - q).abs())
                .sum::<f64>())
    }
}

/// A pure vector or a spectrally-resolved density matrix.
#[derive(Debug, Clone)]
pub enum QuantumState {
    Pure(Vec<c64>),
    Mixed {
        /// Eigenvalues q_n of ρ, each ≥ 0, summing to 1.
        weights: Vec<f64>,
        /// Orthonormal eigenvector columns aligned with `weights`.
        vectors: CMat,
    },
}

pub const STATE_NORM_TOL: f64 = 1e-12;
pub const STATE_TRACE_TOL: f64 = 1e-12;
pub const STATE_NEG_EIG_TOL: f64 = 1e-10;

impl QuantumState {
    /// A unit vector; rejects norms off by more than the tolerance, then
    /// renormalizes exactly to kill residual drift.
    pub fn pure(mut v: Vec<c64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::invalid("state vector must be nonempty"));
        }
        let n = mat::norm(&v);
        if (n - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::invalid(format!(
                "pure state norm {n:.15} is not 1 within {STATE_NORM_TOL:.0e}"
            )));
        }
        mat::normalize(&mut v);
        Ok(Self::Pure(v))
    }

    /// Normalize any nonzero vector into a pure state.
    pub fn pure_normalized(mut v: Vec<c64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::invalid("state vector must be nonempty"));
        }
        if mat::normalize(&mut v) == 0.0 {
            return Err(Error::invalid("cannot normalize the zero vector"));
        }
        Ok(Self::Pure(v))
    }

    /// Mixed state from explicit spectral data. Weights may include zeros;
    /// small negative weights within tolerance are clamped.
    pub fn mixed(weights: Vec<f64>, vectors: CMat) -> Result<Self> {
        if weights.len() != vectors.ncols() || weights.is_empty() {
            return Err(Error::invalid(
                "need one weight per eigenvector column, at least one",
            ));
        }
        if vectors.nrows() < vectors.ncols() {
            return Err(Error::invalid(
                "more eigenvectors than the space dimension",
            ));
        }
        let mut w = weights;
        for q in &mut w {
            if *q < -STATE_NEG_EIG_TOL {
                return Err(Error::invalid(format!(
                    "state eigenvalue {q:.3e} below -{STATE_NEG_EIG_TOL:.0e}"
                )));
            }
            *q = q.max(0.0);
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "state weights sum to {total:.12}, expected 1"
            )));
        }
        for q in &mut w {
            *q /= total;
        }
        let dev = mat::orthonormality_deviation(&vectors);
        if dev > BASIS_ORTHONORMALITY_TOL {
            return Err(Error::NumericCheck(format!(
                "state eigenvectors not orthonormal: deviation {dev:.3e}"
            )));
        }
        Ok(Self::Mixed {
            weights: w,
            vectors,
        })
    }

    /// Spectrally resolve a density matrix. Requires hermiticity, unit trace,
    /// and eigenvalues ≥ −1e-10 (clamped to 0). Weights come out descending.
    pub fn from_density_matrix(rho: &CMat) -> Result<Self> {
        let op = HermitianOperator::new(rho.clone()).map_err(|e| {
            Error::invalid(format!("density matrix rejected: {e}"))
        })?;
        let tr = op.trace();
        if (tr - 1.0).abs() > STATE_TRACE_TOL {
            return Err(Error::invalid(format!(
                "density matrix trace {tr:.15} is not 1 within {STATE_TRACE_TOL:.0e}"
            )));
        }
        let sd = spectral_decompose(&op)?;
        if sd.min_eigenvalue() < -STATE_NEG_EIG_TOL {
            return Err(Error::invalid(format!(
                "density matrix has eigenvalue {:.3e} below -{STATE_NEG_EIG_TOL:.0e}",
                sd.min_eigenvalue()
            )));
        }
        let d = sd.dim();
        // Reverse to descending weights so the dominant component is first.
        let weights: Vec<f64> = (0..d)
            .rev()
            .map(|i| sd.eigenvalue(i).max(0.0))
            .collect();
        let vectors = CMat::from_fn(d, d, |i, n| sd.eigenvectors()[(i, d - 1 - n)]);
        Self::mixed(weights, vectors)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::Mixed {
            weights: vec![1.0 / dim as f64; dim],
            vectors: mat::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(v) => v.len(),
            Self::Mixed { vectors, .. } => vectors.nrows(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, Self::Pure(_))
    }

    pub fn n_components(&self) -> usize {
        match self {
            Self::Pure(_) => 1,
            Self::Mixed { weights, .. } => weights.len(),
        }
    }

    pub fn weight(&self, n: usize) -> f64 {
        match self {
            Self::Pure(_) => {
                assert_eq!(n, 0);
                1.0
            }
            Self::Mixed { weights, .. } => weights[n],
        }
    }

    pub fn component(&self, n: usize) -> &[c64] {
        match self {
            Self::Pure(v) => {
                assert_eq!(n, 0);
                v
            }
            Self::Mixed { vectors, .. } => vectors.col_as_slice(n),
        }
    }

    pub fn density_matrix(&self) -> CMat {
        let d = self.dim();
        let mut rho = CMat::zeros(d, d);
        for n in 0..self.n_components() {
            let q = self.weight(n);
            if q == 0.0 {
                continue;
            }
            let v = self.component(n);
            for j in 0..d {
                let vj = v[j].conj() * q;
                for i in 0..d {
                    rho[(i, j)] += v[i] * vj;
                }
            }
        }
        rho
    }

    /// Tr ρ² = Σ q_n².
    pub fn purity(&self) -> f64 {
        (0..self.n_components())
            .map(|n| self.weight(n) * self.weight(n))
            .sum()
    }
}

/// Overlaps D^{(n)}_{js} = ⟨j,s|ψ_n⟩ for every state component against an
/// observable's sector basis. Component n occupies column n; each column has
/// unit norm because the sector basis is complete.
#[derive(Debug, Clone)]
pub struct OverlapTable {
    entries: CMat,
    weights: Vec<f64>,
    sectors: Vec<Range<usize>>,
}

pub fn overlap_table(state: &QuantumState, o: &Observable) -> Result<OverlapTable> {
    if state.dim() != o.dim() {
        return Err(Error::invalid(format!(
            "state dim {} does not match observable dim {}",
            state.dim(),
            o.dim()
        )));
    }
    let d = o.dim();
    let n = state.n_components();
    let mut entries = CMat::zeros(d, n);
    for c in 0..n {
        let w = mat::adjoint_matvec(o.basis(), state.component(c));
        for k in 0..d {
            entries[(k, c)] = w[k];
        }
    }
    Ok(OverlapTable {
        entries,
        weights: (0..n).map(|c| state.weight(c)).collect(),
        sectors: o.sectors().to_vec(),
    })
}

impl OverlapTable {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, n: usize) -> f64 {
        self.weights[n]
    }

    /// ⟨j,s|ψ_n⟩ with (j,s) flattened to basis column k.
    pub fn overlap(&self, k: usize, n: usize) -> c64 {
        self.entries[(k, n)]
    }

    /// Σ_{j,s} |D_{js}^{(n)}|² — unit for every component.
    pub fn component_norm_sq(&self, n: usize) -> f64 {
        self.entries
            .col_as_slice(n)
            .iter()
            .map(|z| z.abs() * z.abs())
            .sum()
    }

    pub fn sectors(&self) -> &[Range<usize>] {
        &self.sectors
    }

    /// p(λ_j) = Σ_{s,n} q_n |D_{js}^{(n)}|².
    pub fn probabilities(&self) -> Vec<f64> {
        self.sectors
            .iter()
            .map(|sec| {
                let mut p = 0.0;
                for n in 0..self.n_components() {
                    let col = self.entries.col_as_slice(n);
                    let part: f64 =
                        col[sec.clone()].iter().map(|z| z.abs() * z.abs()).sum();
                    p += self.weights[n] * part;
                }
                p
            })
            .collect()
    }
}

/// p(λ_j) = Tr(ρ Π_j) for every distinct eigenvalue of the observable.
pub fn eigenvalue_distribution(
    state: &QuantumState,
    o: &Observable,
) -> Result<EigenvalueDistribution> {
    let table = overlap_table(state, o)?;
    EigenvalueDistribution::new(o.values().to_vec(), table.probabilities())
}

/// Tr(ρ M); the imaginary part vanishes by hermiticity and is discarded.
pub fn expectation(state: &QuantumState, m: &HermitianOperator) -> Result<f64> {
    if state.dim() != m.dim() {
        return Err(Error::invalid(format!(
            "state dim {} does not match operator dim {}",
            state.dim(),
            m.dim()
        )));
    }
    let mut acc = 0.0f64;
    for n in 0..state.n_components() {
        let q = state.weight(n);
        if q == 0.0 {
            continue;
        }
        let v = state.component(n);
        let mv = m.apply(v);
        acc += q * mat::inner(v, &mv).re;
    }
    Ok(acc)
}

/// Constraint residuals (C_N, C_E) = (Tr ρ − 1, Tr(ρT) − E0).
pub fn constraints_eval(
    state: &QuantumState,
    t: &HermitianOperator,
    e0: f64,
) -> Result<(f64, f64)> {
    let trace: f64 = (0..state.n_components()).map(|n| state.weight(n)).sum();
    Ok((trace - 1.0, expectation(state, t)? - e0))
}

/// Raw-matrix variant for inputs QuantumState would reject (e.g. unnormalized
/// ρ): C_N = Re Tr ρ − 1, C_E = Re Tr(ρT) − E0.
pub fn constraints_eval_matrix(
    rho: &CMat,
    t: &HermitianOperator,
    e0: f64,
) -> Result<(f64, f64)> {
    if rho.nrows() != t.dim() || rho.ncols() != t.dim() {
        return Err(Error::invalid("matrix dims do not match operator"));
    }
    let mut tr = 0.0f64;
    let mut tr_t = 0.0f64;
    for i in 0..t.dim() {
        tr += rho[(i, i)].re;
        for k in 0..t.dim() {
            tr_t += (rho[(i, k)] * t.matrix()[(k, i)]).re;
        }
    }
    Ok((tr - 1.0, tr_t - e0))
}
