//! Energy-basis matrix elements of observables and the statistical tests on
//! them: diagonal constancy, off-diagonal magnitude and scaling, phase
//! uniformity, residual-moment checks, and the factorization identity.

use std::collections::HashSet;

use crate::hub::{
    hub_from_hamiltonian, make_huo, phase_table_from_matrix, HubMethod, PhaseTable,
    SpectrumAssignment,
};
use crate::quantum::models::random_hermitian;
use crate::quantum::{spectral_decompose, Observable, SpectralDecomposition};
use crate::rng;
use crate::stats;
use crate::{c64, CMat, Error, Result};

use rand::Rng;

/// Hermitian-symmetry gate on a matrix-element table, relative to its scale.
pub const TABLE_HERMITIAN_TOL: f64 = 1e-12;

/// Diagonal entries of an unbiased observable must match Tr O/D this tightly.
pub const DIAGONAL_CONSTANCY_TOL: f64 = 1e-10;

/// Full O(D²) pair scans up to here; larger tables are sampled.
pub const FULL_SCAN_MAX_DIM: usize = 256;
pub const SAMPLED_PAIRS: usize = 10_000;

/// Phase-uniformity acceptance: per-pair KS p-value floor and the fraction
/// of pairs that must clear it.
pub const KS_P_THRESHOLD: f64 = 0.01;
pub const PASS_FRACTION_REQUIRED: f64 = 0.95;
/// Below this dimension the per-pair sample is too small for the KS
/// asymptotics and reports carry a small-dimension flag.
pub const ASYMPTOTIC_MIN_DIM: usize = 64;

/// Moment bands for the standardized off-diagonal residuals.
pub const CLT_MEAN_TOL: f64 = 0.05;
pub const CLT_VARIANCE_TOL: f64 = 0.1;
pub const CLT_KURTOSIS_TOL: f64 = 0.5;
pub const CLT_MIN_PAIRS: usize = 10_000;
/// Sector dimension must exceed the distinct-value count by this factor.
pub const CLT_SECTOR_RATIO: usize = 64;

/// Correlation threshold is this many standard errors, 1/√D each.
pub const CORRELATION_SIGMAS: f64 = 3.0;
/// Off-diagonal magnitudes must stay under this multiple of max|λ|/√D.
pub const MAGNITUDE_FACTOR: f64 = 10.0;

/// Ē and ω bin counts for the ansatz summary.
pub const ETH_BINS: usize = 16;
/// Bins holding fewer pairs than this are excluded and flagged.
pub const MIN_BIN_POPULATION: usize = 5;
/// Default smearing width divisor: ε = spectral range / this.
pub const SMEARING_DIVISOR: f64 = 50.0;

/// O_{αβ} = ⟨E_α|O|E_β⟩ for all α, β, with the level energies.
#[derive(Debug, Clone)]
pub struct MatrixElementTable {
    table: CMat,
    energies: Vec<f64>,
}

pub fn matrix_elements(
    o: &Observable,
    sd: &SpectralDecomposition,
) -> Result<MatrixElementTable> {
    if o.dim() != sd.dim() {
        return Err(Error::invalid("observable and decomposition dims differ"));
    }
    let d = o.dim();
    // U†OU = (U†B) Λ (U†B)† with O = BΛB†.
    let g = sd.eigenvectors().adjoint() * o.basis();
    let mut scaled = g.clone();
    for k in 0..d {
        let lambda = o.value_of_column(k);
        for a in 0..d {
            scaled[(a, k)] *= lambda;
        }
    }
    let table = scaled * g.adjoint();
    let herm = crate::mat::hermiticity_deviation(&table);
    let scale = crate::mat::max_abs(&table).max(1.0);
    if herm > TABLE_HERMITIAN_TOL * scale {
        return Err(Error::NumericCheck(format!(
            "matrix-element table lost Hermitian symmetry: {herm:.3e}"
        )));
    }
    Ok(MatrixElementTable {
        table,
        energies: sd.eigenvalues().to_vec(),
    })
}

impl MatrixElementTable {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn entry(&self, alpha: usize, beta: usize) -> c64 {
        self.table[(alpha, beta)]
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, alpha: usize) -> f64 {
        self.energies[alpha]
    }

    /// Ē = (E_α + E_β)/2.
    pub fn mean_energy(&self, alpha: usize, beta: usize) -> f64 {
        0.5 * (self.energies[alpha] + self.energies[beta])
    }

    /// ω = E_α − E_β.
    pub fn frequency(&self, alpha: usize, beta: usize) -> f64 {
        self.energies[alpha] - self.energies[beta]
    }

    /// Real parts of the diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.table[(a, a)].re).collect()
    }

    pub fn trace_over_dim(&self) -> f64 {
        self.diagonal().iter().sum::<f64>() / self.dim() as f64
    }

    pub fn hermitian_gap(&self) -> f64 {
        crate::mat::hermiticity_deviation(&self.table)
    }

    pub fn spectral_span(&self) -> f64 {
        self.energies[self.energies.len() - 1] - self.energies[0]
    }
}

#[derive(Debug, Clone)]
pub struct DiagonalConstancyReport {
    /// Tr O / D.
    pub reference: f64,
    pub max_abs_deviation: f64,
    pub mean_abs_deviation: f64,
    pub worst_index: usize,
    pub max_imag: f64,
    pub pass: bool,
}

/// Exhaustive check of O_{αα} against Tr O/D.
pub fn diagonal_constancy(
    table: &MatrixElementTable,
    o: &Observable,
) -> Result<DiagonalConstancyReport> {
    if table.dim() != o.dim() {
        return Err(Error::invalid("table and observable dims differ"));
    }
    let reference = o.trace_over_dim();
    let mut max_abs = 0.0f64;
    let mut sum_abs = 0.0f64;
    let mut worst = 0usize;
    let mut max_imag = 0.0f64;
    for a in 0..table.dim() {
        let z = table.entry(a, a);
        let dev = (z.re - reference).abs();
        sum_abs += dev;
        if dev > max_abs {
            max_abs = dev;
            worst = a;
        }
        max_imag = max_imag.max(z.im.abs());
    }
    Ok(DiagonalConstancyReport {
        reference,
        max_abs_deviation: max_abs,
        mean_abs_deviation: sum_abs / table.dim() as f64,
        worst_index: worst,
        max_imag,
        pass: max_abs <= DIAGONAL_CONSTANCY_TOL && max_imag <= DIAGONAL_CONSTANCY_TOL,
    })
}

/// Off-diagonal (α, β) pairs with α < β: every pair up to
/// [`FULL_SCAN_MAX_DIM`], a seeded uniform sample without replacement above.
pub fn sample_offdiag_pairs(dim: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if dim < 2 {
        return Err(Error::invalid("need at least two levels for pairs"));
    }
    if dim <= FULL_SCAN_MAX_DIM {
        let mut pairs = Vec::with_capacity(dim * (dim - 1) / 2);
        for a in 0..dim {
            for b in (a + 1)..dim {
                pairs.push((a, b));
            }
        }
        return Ok(pairs);
    }
    let mut stream = rng::substream(seed, "eth.pairs", 0);
    let mut seen = HashSet::with_capacity(SAMPLED_PAIRS * 2);
    let mut pairs = Vec::with_capacity(SAMPLED_PAIRS);
    while pairs.len() < SAMPLED_PAIRS {
        let a = stream.gen_range(0..dim);
        let b = stream.gen_range(0..dim);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            pairs.push(key);
        }
    }
    Ok(pairs)
}

/// Phase statistics for one level pair.
#[derive(Debug, Clone, Copy)]
pub struct PairPhase {
    pub alpha: usize,
    pub beta: usize,
    pub ks: f64,
    pub p_value: f64,
    /// First circular moment: (mean cos ω, mean sin ω).
    pub cos_mean: f64,
    pub sin_mean: f64,
    /// Second circular moment: (mean cos 2ω, mean sin 2ω).
    pub cos2_mean: f64,
    pub sin2_mean: f64,
}

#[derive(Debug, Clone)]
pub struct PhaseUniformityReport {
    pub pairs: Vec<PairPhase>,
    /// Fraction of pairs with KS p-value at or above the threshold.
    pub pass_fraction: f64,
    pub pass: bool,
    /// Set when the per-pair sample size (= D) is below the asymptotic
    /// regime; the pass verdict is then only indicative.
    pub small_dim: bool,
    pub dim: usize,
}

/// Kolmogorov-Smirnov test of the phase differences ω^{αβ} against the
/// uniform distribution on (−π, π], one test per requested pair.
pub fn phase_uniformity(
    phases: &PhaseTable,
    pairs: &[(usize, usize)],
) -> Result<PhaseUniformityReport> {
    if pairs.is_empty() {
        return Err(Error::invalid("no pairs requested"));
    }
    let d = phases.dim();
    let pi = std::f64::consts::PI;
    let mut out = Vec::with_capacity(pairs.len());
    let mut passed = 0usize;
    for &(alpha, beta) in pairs {
        if alpha == beta {
            return Err(Error::invalid(
                "phase differences of a level with itself are identically zero",
            ));
        }
        if alpha >= d || beta >= d {
            return Err(Error::invalid("pair index out of range"));
        }
        let omegas = phases.omega_column(alpha, beta);
        let ks = stats::ks_statistic_uniform(&omegas, -pi, pi)?;
        let p_value = stats::ks_p_value(ks, omegas.len());
        let n = omegas.len() as f64;
        let mut sums = [0.0f64; 4];
        for &w in &omegas {
            sums[0] += w.cos();
            sums[1] += w.sin();
            sums[2] += (2.0 * w).cos();
            sums[3] += (2.0 * w).sin();
        }
        if p_value >= KS_P_THRESHOLD {
            passed += 1;
        }
        out.push(PairPhase {
            alpha,
            beta,
            ks,
            p_value,
            cos_mean: sums[0] / n,
            sin_mean: sums[1] / n,
            cos2_mean: sums[2] / n,
            sin2_mean: sums[3] / n,
        });
    }
    let pass_fraction = passed as f64 / pairs.len() as f64;
    Ok(PhaseUniformityReport {
        pairs: out,
        pass_fraction,
        pass: pass_fraction >= PASS_FRACTION_REQUIRED,
        small_dim: d < ASYMPTOTIC_MIN_DIM,
        dim: d,
    })
}

/// Predicted per-component standard deviation of an off-diagonal element of
/// an unbiased observable: √(Σ_j m_j (λ_j − λ̄)² / (2D²)).
pub fn predicted_offdiag_std(spectrum: &SpectrumAssignment) -> f64 {
    let d = spectrum.total_dim() as f64;
    (spectrum.centered_square_sum() / (2.0 * d * d)).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct ScalingPoint {
    pub dim: usize,
    pub std_re: f64,
    pub std_im: f64,
    /// Re and Im samples pooled.
    pub pooled_std: f64,
    pub predicted_std: f64,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

#[derive(Debug, Clone)]
pub struct ScalingFit {
    pub points: Vec<ScalingPoint>,
    /// None when the data are degenerate (all off-diagonals ≈ 0).
    pub fit: Option<LogLogFit>,
    pub degenerate: bool,
}

/// Measure off-diagonal magnitudes across dimensions and fit
/// ln std vs ln D. Each dimension gets a seeded random Hamiltonian, a
/// Fourier-rotated unbiased basis, and an equally degenerate spectrum with
/// `distinct` values.
pub fn offdiag_scaling(dims: &[usize], distinct: usize, seed: u64) -> Result<ScalingFit> {
    if dims.len() < 4 {
        return Err(Error::invalid(format!(
            "the scaling fit needs at least 4 dimensions, got {}",
            dims.len()
        )));
    }
    for w in dims.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("dimensions must be strictly increasing"));
        }
    }
    let mut points = Vec::with_capacity(dims.len());
    for &d in dims {
        let spectrum = SpectrumAssignment::degenerate(d, distinct)?;
        let model_seed: u64 = rng::substream(seed, "eth.scaling", d as u64).gen();
        let t = random_hermitian(d, model_seed)?;
        let sd = spectral_decompose(&t)?;
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier)?.shuffled(model_seed);
        let o = make_huo(&hub, &spectrum)?;
        let pairs = sample_offdiag_pairs(d, seed)?;
        let samples = offdiag_component_samples(&o, &sd, &pairs);
        points.push(scaling_point(d, &samples, predicted_offdiag_std(&spectrum)));
    }
    finish_scaling_fit(points)
}

/// Off-diagonal scaling over explicit (observable, decomposition) pairs,
/// for callers that already built the family.
pub fn offdiag_scaling_from(
    family: &[(Observable, SpectralDecomposition, SpectrumAssignment)],
    seed: u64,
) -> Result<ScalingFit> {
    if family.len() < 4 {
        return Err(Error::invalid(format!(
            "the scaling fit needs at least 4 dimensions, got {}",
            family.len()
        )));
    }
    let mut points = Vec::with_capacity(family.len());
    for (o, sd, spectrum) in family {
        if o.dim() != sd.dim() || spectrum.total_dim() != o.dim() {
            return Err(Error::invalid("family entry dims disagree"));
        }
        let pairs = sample_offdiag_pairs(o.dim(), seed)?;
        let samples = offdiag_component_samples(o, sd, &pairs);
        points.push(scaling_point(
            o.dim(),
            &samples,
            predicted_offdiag_std(spectrum),
        ));
    }
    for w in points.windows(2) {
        if w[1].dim <= w[0].dim {
            return Err(Error::invalid("dimensions must be strictly increasing"));
        }
    }
    finish_scaling_fit(points)
}

/// (Re, Im) samples of ⟨E_α|O|E_β⟩ over the given pairs, computed through
/// G = B†U so only sampled entries are formed.
fn offdiag_component_samples(
    o: &Observable,
    sd: &SpectralDecomposition,
    pairs: &[(usize, usize)],
) -> Vec<(f64, f64)> {
    let d = o.dim();
    let g = o.basis().adjoint() * sd.eigenvectors();
    let lambdas: Vec<f64> = (0..d).map(|k| o.value_of_column(k)).collect();
    pairs
        .iter()
        .map(|&(alpha, beta)| {
            let mut acc = c64::new(0.0, 0.0);
            for k in 0..d {
                acc += g[(k, alpha)].conj() * g[(k, beta)] * lambdas[k];
            }
            (acc.re, acc.im)
        })
        .collect()
}

fn scaling_point(dim: usize, samples: &[(f64, f64)], predicted: f64) -> ScalingPoint {
    let re: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let im: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let pooled: Vec<f64> = re.iter().chain(im.iter()).copied().collect();
    let std_of = |xs: &[f64]| stats::moments(xs).map(|(_, v, _)| v.sqrt()).unwrap_or(0.0);
    ScalingPoint {
        dim,
        std_re: std_of(&re),
        std_im: std_of(&im),
        pooled_std: std_of(&pooled),
        predicted_std: predicted,
        n_pairs: samples.len(),
    }
}

fn finish_scaling_fit(points: Vec<ScalingPoint>) -> Result<ScalingFit> {
    let degenerate = points.iter().any(|p| p.pooled_std < 1e-14);
    let fit = if degenerate {
        None
    } else {
        let xs: Vec<f64> = points.iter().map(|p| (p.dim as f64).ln()).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.pooled_std.ln()).collect();
        let lf = stats::linear_fit(&xs, &ys)?;
        Some(LogLogFit {
            slope: lf.slope,
            intercept: lf.intercept,
            slope_stderr: lf.slope_stderr,
        })
    };
    Ok(ScalingFit {
        points,
        fit,
        degenerate,
    })
}

#[derive(Debug, Clone)]
pub struct CltReport {
    pub n_pairs: usize,
    pub n_samples: usize,
    pub mean: f64,
    pub variance: f64,
    pub kurtosis: f64,
    pub pass: bool,
    /// Spectrum is nondegenerate: the sector-sum limit does not apply.
    pub not_applicable: bool,
    /// All eigenvalues equal: residuals are identically zero.
    pub degenerate_data: bool,
}

/// Moments of the off-diagonal components standardized by the closed-form
/// prediction; they approach a standard normal when each sector is much
/// larger than the number of distinct values.
pub fn clt_residual_test(
    table: &MatrixElementTable,
    spectrum: &SpectrumAssignment,
    seed: u64,
) -> Result<CltReport> {
    let d = table.dim();
    if spectrum.total_dim() != d {
        return Err(Error::invalid("spectrum and table dims differ"));
    }
    let d1 = spectrum.n_distinct();
    if d1 == d {
        return Ok(CltReport {
            n_pairs: 0,
            n_samples: 0,
            mean: 0.0,
            variance: 0.0,
            kurtosis: 0.0,
            pass: false,
            not_applicable: true,
            degenerate_data: false,
        });
    }
    let min_sector = *spectrum.multiplicities().iter().min().unwrap();
    if min_sector < CLT_SECTOR_RATIO * d1 {
        return Err(Error::InsufficientStatistics(format!(
            "smallest sector holds {min_sector} columns; the residual limit \
             needs at least {} (= {CLT_SECTOR_RATIO} × {d1} distinct values)",
            CLT_SECTOR_RATIO * d1
        )));
    }
    let sigma = predicted_offdiag_std(spectrum);
    if sigma < 1e-14 {
        return Ok(CltReport {
            n_pairs: 0,
            n_samples: 0,
            mean: 0.0,
            variance: 0.0,
            kurtosis: 0.0,
            pass: false,
            not_applicable: false,
            degenerate_data: true,
        });
    }
    let pairs = sample_offdiag_pairs(d, seed)?;
    if pairs.len() < CLT_MIN_PAIRS {
        return Err(Error::InsufficientStatistics(format!(
            "{} pairs available, need {CLT_MIN_PAIRS}",
            pairs.len()
        )));
    }
    let mut samples = Vec::with_capacity(2 * pairs.len());
    for &(alpha, beta) in &pairs {
        let z = table.entry(alpha, beta);
        samples.push(z.re / sigma);
        samples.push(z.im / sigma);
    }
    let (mean, variance, kurtosis) = stats::moments(&samples)?;
    let pass = mean.abs() <= CLT_MEAN_TOL
        && (variance - 1.0).abs() <= CLT_VARIANCE_TOL
        && (kurtosis - 3.0).abs() <= CLT_KURTOSIS_TOL;
    Ok(CltReport {
        n_pairs: pairs.len(),
        n_samples: samples.len(),
        mean,
        variance,
        kurtosis,
        pass,
        not_applicable: false,
        degenerate_data: false,
    })
}

/// Correlations between the eigenvalue sequence and the cosine/sine of the
/// phase-difference sequence for one pair.
pub fn sequence_correlations(values: &[f64], omegas: &[f64]) -> Result<(f64, f64)> {
    let cos: Vec<f64> = omegas.iter().map(|w| w.cos()).collect();
    let sin: Vec<f64> = omegas.iter().map(|w| w.sin()).collect();
    Ok((
        stats::sample_correlation(values, &cos)?,
        stats::sample_correlation(values, &sin)?,
    ))
}

#[derive(Debug, Clone, Copy)]
pub struct PairCorrelation {
    pub alpha: usize,
    pub beta: usize,
    pub cos_corr: f64,
    pub sin_corr: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct FactorizationReport {
    pub pairs: Vec<PairCorrelation>,
    /// 3/√D.
    pub correlation_threshold: f64,
    pub corr_pass_fraction: f64,
    /// 10 max|λ| / √D.
    pub magnitude_bound: f64,
    pub max_offdiag: f64,
    /// max_α |O_{αα} − Tr O/D| from the direct table.
    pub diagonal_max_dev: f64,
    pub pass: bool,
}

/// Both halves of the factorization identity: off-diagonals are small
/// because the eigenvalue and phase sequences are uncorrelated, while
/// diagonals reproduce Tr O/D exactly.
pub fn uncorrelated_factorization_check(
    o: &Observable,
    sd: &SpectralDecomposition,
    seed: u64,
) -> Result<FactorizationReport> {
    if o.dim() != sd.dim() {
        return Err(Error::invalid("observable and decomposition dims differ"));
    }
    let d = o.dim();
    let phases = phase_table_from_matrix(o.basis(), sd)?;
    let table = matrix_elements(o, sd)?;
    let reference = o.trace_over_dim();
    let mut diagonal_max_dev = 0.0f64;
    for a in 0..d {
        diagonal_max_dev = diagonal_max_dev.max((table.entry(a, a).re - reference).abs());
    }
    let lambdas: Vec<f64> = (0..d).map(|k| o.value_of_column(k)).collect();
    let max_lambda = lambdas.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let sqrt_d = (d as f64).sqrt();
    let correlation_threshold = CORRELATION_SIGMAS / sqrt_d;
    let magnitude_bound = MAGNITUDE_FACTOR * max_lambda / sqrt_d;
    let pair_list = sample_offdiag_pairs(d, seed)?;
    let mut pairs = Vec::with_capacity(pair_list.len());
    let mut corr_ok = 0usize;
    let mut max_offdiag = 0.0f64;
    for &(alpha, beta) in &pair_list {
        let omegas = phases.omega_column(alpha, beta);
        let (cos_corr, sin_corr) = sequence_correlations(&lambdas, &omegas)?;
        let magnitude = table.entry(alpha, beta).abs();
        max_offdiag = max_offdiag.max(magnitude);
        if cos_corr.abs() <= correlation_threshold
            && sin_corr.abs() <= correlation_threshold
        {
            corr_ok += 1;
        }
        pairs.push(PairCorrelation {
            alpha,
            beta,
            cos_corr,
            sin_corr,
            magnitude,
        });
    }
    let corr_pass_fraction = corr_ok as f64 / pair_list.len() as f64;
    let pass = corr_pass_fraction >= PASS_FRACTION_REQUIRED
        && max_offdiag <= magnitude_bound
        && diagonal_max_dev <= DIAGONAL_CONSTANCY_TOL;
    Ok(FactorizationReport {
        pairs,
        correlation_threshold,
        corr_pass_fraction,
        magnitude_bound,
        max_offdiag,
        diagonal_max_dev,
        pass,
    })
}

/// One diagonal bin of the ansatz summary.
#[derive(Debug, Clone, Copy)]
pub struct F1Bin {
    pub ebar_mean: f64,
    pub mean: f64,
    pub count: usize,
}

/// One (Ē, |ω|) cell of the off-diagonal summary.
#[derive(Debug, Clone, Copy)]
pub struct F2Bin {
    pub ebar_lo: f64,
    pub ebar_hi: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
    /// Std of e^{S(Ē)/2}|O_{αβ}| inside the cell.
    pub std: f64,
    pub count: usize,
    pub usable: bool,
}

#[derive(Debug, Clone)]
pub struct EthAnsatzStats {
    pub reference: f64,
    pub diagonal_max_dev: f64,
    pub diagonal_mean_dev: f64,
    pub f1_bins: Vec<F1Bin>,
    pub f2_bins: Vec<F2Bin>,
    /// Smeared level-counting entropy at each f1 bin center.
    pub entropy_at_bins: Vec<f64>,
    pub epsilon: f64,
    pub residual_mean: f64,
    pub residual_variance: f64,
    pub residual_kurtosis: f64,
    pub n_residual_samples: usize,
    /// Set when no cell reaches the population floor.
    pub insufficient_statistics: bool,
}

/// ε when the caller does not choose one: spectral span / 50.
pub fn default_smearing_width(table: &MatrixElementTable) -> f64 {
    table.spectral_span() / SMEARING_DIVISOR
}

/// S(Ē) = ln Σ_α exp(−(Ē − E_α)²/(2ε²)): log of the smeared level count.
pub fn smeared_level_entropy(energies: &[f64], ebar: f64, epsilon: f64) -> f64 {
    let mut acc = 0.0f64;
    for &e in energies {
        let x = (ebar - e) / epsilon;
        acc += (-0.5 * x * x).exp();
    }
    acc.max(f64::MIN_POSITIVE).ln()
}

/// Binned estimates of the smooth diagonal function, the off-diagonal
/// envelope, and the standardized-residual moments.
pub fn eth_ansatz_summary(
    table: &MatrixElementTable,
    epsilon: f64,
    seed: u64,
) -> Result<EthAnsatzStats> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid("smearing width must be positive and finite"));
    }
    let d = table.dim();
    let reference = table.trace_over_dim();
    let diag = table.diagonal();
    let mut diagonal_max_dev = 0.0f64;
    let mut sum_dev = 0.0f64;
    for &v in &diag {
        let dev = (v - reference).abs();
        diagonal_max_dev = diagonal_max_dev.max(dev);
        sum_dev += dev;
    }
    let diagonal_mean_dev = sum_dev / d as f64;

    // Energies are ascending, so index chunks are energy-ordered bins.
    let f1_chunks = stats::equal_population_chunks(d, ETH_BINS.min(d));
    let mut f1_bins = Vec::with_capacity(f1_chunks.len());
    let mut entropy_at_bins = Vec::with_capacity(f1_chunks.len());
    for chunk in &f1_chunks {
        let count = chunk.len();
        let ebar_mean =
            chunk.clone().map(|a| table.energy(a)).sum::<f64>() / count as f64;
        let mean = chunk.clone().map(|a| diag[a]).sum::<f64>() / count as f64;
        f1_bins.push(F1Bin {
            ebar_mean,
            mean,
            count,
        });
        entropy_at_bins.push(smeared_level_entropy(table.energies(), ebar_mean, epsilon));
    }

    // Off-diagonal pairs with Ē, |ω|, and the entropy-weighted magnitude.
    let pair_list = sample_offdiag_pairs(d, seed)?;
    struct PairSample {
        ebar: f64,
        omega_abs: f64,
        weighted: c64,
    }
    let mut samples: Vec<PairSample> = pair_list
        .iter()
        .map(|&(alpha, beta)| {
            let ebar = table.mean_energy(alpha, beta);
            let s = smeared_level_entropy(table.energies(), ebar, epsilon);
            PairSample {
                ebar,
                omega_abs: table.frequency(alpha, beta).abs(),
                weighted: table.entry(alpha, beta) * (0.5 * s).exp(),
            }
        })
        .collect();
    samples.sort_by(|a, b| a.ebar.partial_cmp(&b.ebar).unwrap());
    let omega_max = samples
        .iter()
        .fold(0.0f64, |m, s| m.max(s.omega_abs))
        .max(f64::MIN_POSITIVE);

    let ebar_chunks = stats::equal_population_chunks(samples.len(), ETH_BINS);
    let mut f2_bins = Vec::new();
    let mut residual_components: Vec<f64> = Vec::new();
    for chunk in &ebar_chunks {
        if chunk.is_empty() {
            continue;
        }
        let block = &samples[chunk.clone()];
        let ebar_lo = block.first().unwrap().ebar;
        let ebar_hi = block.last().unwrap().ebar;
        // Linear |ω| bins inside this Ē stripe.
        let mut cells: Vec<Vec<&PairSample>> = vec![Vec::new(); ETH_BINS];
        for s in block {
            let idx = ((s.omega_abs / omega_max) * ETH_BINS as f64) as usize;
            cells[idx.min(ETH_BINS - 1)].push(s);
        }
        for (w, cell) in cells.iter().enumerate() {
            let omega_lo = omega_max * w as f64 / ETH_BINS as f64;
            let omega_hi = omega_max * (w + 1) as f64 / ETH_BINS as f64;
            let count = cell.len();
            let usable = count >= MIN_BIN_POPULATION;
            let std = if count >= 2 {
                let mags: Vec<f64> = cell.iter().map(|s| s.weighted.abs()).collect();
                stats::moments(&mags).map(|(_, v, _)| v.sqrt()).unwrap_or(0.0)
            } else {
                0.0
            };
            if usable {
                for component in [
                    cell.iter().map(|s| s.weighted.re).collect::<Vec<f64>>(),
                    cell.iter().map(|s| s.weighted.im).collect::<Vec<f64>>(),
                ] {
                    if let Ok((m, v, _)) = stats::moments(&component) {
                        let sd_c = v.sqrt();
                        if sd_c > 1e-300 {
                            residual_components
                                .extend(component.iter().map(|x| (x - m) / sd_c));
                        }
                    }
                }
            }
            f2_bins.push(F2Bin {
                ebar_lo,
                ebar_hi,
                omega_lo,
                omega_hi,
                std,
                count,
                usable,
            });
        }
    }
    let (residual_mean, residual_variance, residual_kurtosis, n_residual_samples) =
        match stats::moments(&residual_components) {
            Ok((m, v, k)) => (m, v, k, residual_components.len()),
            Err(_) => (0.0, 0.0, 0.0, 0),
        };
    let insufficient_statistics = !f2_bins.iter().any(|b| b.usable);
    Ok(EthAnsatzStats {
        reference,
        diagonal_max_dev,
        diagonal_mean_dev,
        f1_bins,
        f2_bins,
        entropy_at_bins,
        epsilon,
        residual_mean,
        residual_variance,
        residual_kurtosis,
        n_residual_samples,
        insufficient_statistics,
    })
}
