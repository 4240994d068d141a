//! Equilibrium analysis for outcome distributions: sector energies, the two
//! equilibrium residuals, Lagrange-multiplier recovery, the time derivative
//! of the outcome distribution, energy shells, feasible-state sampling, and
//! constrained entropy maximization over pure states.

use std::ops::Range;

use crate::entropy::shannon_entropy_probs;
use crate::mat;
use crate::quantum::{
    expectation, overlap_table, EigenvalueDistribution, HermitianOperator,
    Observable, OverlapTable, QuantumState, SpectralDecomposition,
};
use crate::rng;
use crate::{c64, CMat, Error, Result};

use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// Weights and overlap magnitudes at or below this cutoff are treated as
/// zero-support, the x·ln x → 0 convention.
pub const SUPPORT_CUTOFF: f64 = 1e-12;

/// ‖Tψ − ⟨T⟩ψ‖ gate for operations that require an energy eigenstate.
pub const EIGENSTATE_RESIDUAL_TOL: f64 = 1e-8;

/// Smallest level count an energy shell may hold.
pub const SHELL_MIN_LEVELS: usize = 3;

/// Energy stored per sector and state component:
/// 𝓔_n(j,s) = ⟨ψ_n|Π_{js} T|ψ_n⟩, complex in general, with (j,s) flattened
/// to the observable's basis column index.
#[derive(Debug, Clone)]
pub struct SectorEnergy {
    table: CMat,
    weights: Vec<f64>,
    sectors: Vec<Range<usize>>,
    component_energies: Vec<f64>,
}

pub fn sector_energies(
    state: &QuantumState,
    o: &Observable,
    t: &HermitianOperator,
) -> Result<SectorEnergy> {
    if state.dim() != o.dim() || t.dim() != o.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: state {}, observable {}, operator {}",
            state.dim(),
            o.dim(),
            t.dim()
        )));
    }
    let d = o.dim();
    let n = state.n_components();
    let mut table = CMat::zeros(d, n);
    let mut component_energies = Vec::with_capacity(n);
    for c in 0..n {
        let psi = state.component(c);
        let tpsi = t.apply(psi);
        component_energies.push(mat::inner(psi, &tpsi).re);
        let x = mat::adjoint_matvec(o.basis(), psi);
        let y = mat::adjoint_matvec(o.basis(), &tpsi);
        for k in 0..d {
            table[(k, c)] = x[k].conj() * y[k];
        }
    }
    Ok(SectorEnergy {
        table,
        weights: (0..n).map(|c| state.weight(c)).collect(),
        sectors: o.sectors().to_vec(),
        component_energies,
    })
}

impl SectorEnergy {
    pub fn dim(&self) -> usize {
        self.table.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    /// 𝓔 for basis column k and component n.
    pub fn entry(&self, k: usize, n: usize) -> c64 {
        self.table[(k, n)]
    }

    pub fn weight(&self, n: usize) -> f64 {
        self.weights[n]
    }

    pub fn sectors(&self) -> &[Range<usize>] {
        &self.sectors
    }

    /// Σ_{s∈j} 𝓔_n(j,s).
    pub fn sector_sum(&self, j: usize, n: usize) -> c64 {
        let mut acc = c64::new(0.0, 0.0);
        for k in self.sectors[j].clone() {
            acc += self.table[(k, n)];
        }
        acc
    }

    /// max_n |Σ_k 𝓔_n(k) − ⟨ψ_n|T|ψ_n⟩|: completeness of the sector family.
    pub fn completeness_gap(&self) -> f64 {
        let mut worst = 0.0f64;
        for n in 0..self.n_components() {
            let mut acc = c64::new(0.0, 0.0);
            for k in 0..self.dim() {
                acc += self.table[(k, n)];
            }
            worst = worst.max((acc - self.component_energies[n]).abs());
        }
        worst
    }

    /// Largest |Im 𝓔| over all entries.
    pub fn max_imag(&self) -> f64 {
        let mut worst = 0.0f64;
        for n in 0..self.n_components() {
            for k in 0..self.dim() {
                worst = worst.max(self.table[(k, n)].im.abs());
            }
        }
        worst
    }
}

/// dp(λ_j)/dt = 2 Σ_{n, s∈j} q_n Im 𝓔_n(j,s), one entry per distinct
/// eigenvalue, in the observable's value order.
pub fn distribution_time_derivative(
    state: &QuantumState,
    o: &Observable,
    t: &HermitianOperator,
) -> Result<Vec<f64>> {
    let se = sector_energies(state, o, t)?;
    let mut out = vec![0.0f64; o.n_outcomes()];
    for (j, slot) in out.iter_mut().enumerate() {
        for n in 0..se.n_components() {
            *slot += 2.0 * se.weight(n) * se.sector_sum(j, n).im;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangeMultipliers {
    pub lambda_n: f64,
    pub lambda_e: f64,
}

impl LagrangeMultipliers {
    pub fn new(lambda_n: f64, lambda_e: f64) -> Result<Self> {
        if !lambda_n.is_finite() || !lambda_e.is_finite() {
            return Err(Error::invalid("multipliers must be finite"));
        }
        Ok(Self { lambda_n, lambda_e })
    }
}

/// One per-(component, column) residual of the stationarity equation.
#[derive(Debug, Clone, Copy)]
pub struct Ee2Term {
    pub component: usize,
    pub column: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    /// max |Im 𝓔| over the support: the reality condition.
    pub ee1_residual: f64,
    /// max over support of |−|D|² ln p − (1−λ_N)|D|² + λ_E 𝓔|.
    pub ee2_max: f64,
    pub ee2_terms: Vec<Ee2Term>,
    pub multipliers: LagrangeMultipliers,
    /// |H − (1−λ_N) + λ_E ⟨T⟩|.
    pub linear_relation_gap: f64,
    pub entropy: f64,
    pub energy: f64,
    /// (component, column) pairs carrying weight above the cutoff.
    pub support: Vec<(usize, usize)>,
}

struct ResidualInputs {
    overlaps: OverlapTable,
    probs: Vec<f64>,
    se: SectorEnergy,
    col_outcome: Vec<usize>,
    support: Vec<(usize, usize)>,
}

fn residual_inputs(
    state: &QuantumState,
    o: &Observable,
    t: &HermitianOperator,
) -> Result<ResidualInputs> {
    let overlaps = overlap_table(state, o)?;
    let probs = overlaps.probabilities();
    let se = sector_energies(state, o, t)?;
    let col_outcome: Vec<usize> = (0..o.dim()).map(|k| o.outcome_of_column(k)).collect();
    let mut support = Vec::new();
    for n in 0..overlaps.n_components() {
        if overlaps.weight(n) <= SUPPORT_CUTOFF {
            continue;
        }
        for k in 0..overlaps.dim() {
            let d = overlaps.overlap(k, n);
            if d.re * d.re + d.im * d.im > SUPPORT_CUTOFF {
                support.push((n, k));
            }
        }
    }
    for &(_, k) in &support {
        if probs[col_outcome[k]] <= 0.0 {
            return Err(Error::NumericCheck(format!(
                "outcome probability {:.3e} is nonpositive on the support",
                probs[col_outcome[k]]
            )));
        }
    }
    Ok(ResidualInputs {
        overlaps,
        probs,
        se,
        col_outcome,
        support,
    })
}

/// Evaluate both equilibrium residuals at fixed multipliers.
pub fn ee_residuals(
    state: &QuantumState,
    o: &Observable,
    t: &HermitianOperator,
    multipliers: LagrangeMultipliers,
) -> Result<EquilibriumReport> {
    let inputs = residual_inputs(state, o, t)?;
    let mut ee1 = 0.0f64;
    let mut ee2_max = 0.0f64;
    let mut terms = Vec::with_capacity(inputs.support.len());
    for &(n, k) in &inputs.support {
        let d = inputs.overlaps.overlap(k, n);
        let a = d.re * d.re + d.im * d.im;
        let e = inputs.se.entry(k, n);
        ee1 = ee1.max(e.im.abs());
        let p = inputs.probs[inputs.col_outcome[k]];
        let r = c64::new(
            -a * p.ln() - (1.0 - multipliers.lambda_n) * a + multipliers.lambda_e * e.re,
            multipliers.lambda_e * e.im,
        )
        .abs();
        ee2_max = ee2_max.max(r);
        terms.push(Ee2Term {
            component: n,
            column: k,
            residual: r,
        });
    }
    let entropy = shannon_entropy_probs(&inputs.probs);
    let energy = expectation(state, t)?;
    let linear_relation_gap =
        (entropy - (1.0 - multipliers.lambda_n) + multipliers.lambda_e * energy).abs();
    Ok(EquilibriumReport {
        ee1_residual: ee1,
        ee2_max,
        ee2_terms: terms,
        multipliers,
        linear_relation_gap,
        entropy,
        energy,
        support: inputs.support,
    })
}

/// Min-norm solution of the symmetric PSD system [[a11,a12],[a12,a22]]u = v,
/// dropping directions below 1e-12 of the dominant curvature.
fn solve_2x2_min_norm(a11: f64, a12: f64, a22: f64, v1: f64, v2: f64) -> (f64, f64) {
    let half_tr = 0.5 * (a11 + a22);
    let half_diff = 0.5 * (a11 - a22);
    let disc = (half_diff * half_diff + a12 * a12).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if l1 <= 0.0 {
        return (0.0, 0.0);
    }
    // Eigenvector for l1, picking the numerically larger expression.
    let (e1x, e1y) = if a12.abs() > (l1 - a11).abs() {
        (a12, l1 - a11)
    } else if (l1 - a22).abs() > 0.0 || a12 != 0.0 {
        (l1 - a22, a12)
    } else {
        (1.0, 0.0)
    };
    let n1 = (e1x * e1x + e1y * e1y).sqrt();
    let (e1x, e1y) = if n1 > 0.0 { (e1x / n1, e1y / n1) } else { (1.0, 0.0) };
    let (e2x, e2y) = (-e1y, e1x);
    let cutoff = 1e-12 * l1;
    let mut u = (0.0, 0.0);
    let p1 = (v1 * e1x + v2 * e1y) / l1;
    u.0 += p1 * e1x;
    u.1 += p1 * e1y;
    if l2 > cutoff {
        let p2 = (v1 * e2x + v2 * e2y) / l2;
        u.0 += p2 * e2x;
        u.1 += p2 * e2y;
    }
    u
}

/// Recover (λ_N, λ_E) by weighted least squares of the stationarity
/// equation over the support: rows −a ln p = u₁ a − u₂ b with a = |D|²,
/// b = Re 𝓔, weight q_n, unknowns u = (1−λ_N, λ_E).
pub fn fit_multipliers(
    state: &QuantumState,
    o: &Observable,
    t: &HermitianOperator,
) -> Result<LagrangeMultipliers> {
    let inputs = residual_inputs(state, o, t)?;
    let mut m11 = 0.0;
    let mut m12 = 0.0;
    let mut m22 = 0.0;
    let mut v1 = 0.0;
    let mut v2 = 0.0;
    for &(n, k) in &inputs.support {
        let w = inputs.overlaps.weight(n);
        let d = inputs.overlaps.overlap(k, n);
        let a = d.re * d.re + d.im * d.im;
        let b = inputs.se.entry(k, n).re;
        let y = -a * inputs.probs[inputs.col_outcome[k]].ln();
        m11 += w * a * a;
        m12 += w * a * (-b);
        m22 += w * b * b;
        v1 += w * y * a;
        v2 += w * y * (-b);
    }
    let (u1, u2) = solve_2x2_min_norm(m11, m12, m22, v1, v2);
    LagrangeMultipliers::new(1.0 - u1, u2)
}

/// Fit multipliers, then evaluate the residuals with them.
pub fn equilibrium_report(
    state: &QuantumState,
    o: &Observable,
    t: &HermitianOperator,
) -> Result<EquilibriumReport> {
    let multipliers = fit_multipliers(state, o, t)?;
    ee_residuals(state, o, t, multipliers)
}

/// Contiguous block of energy levels within |E − E0| ≤ δE/2.
#[derive(Debug, Clone)]
pub struct EnergyShell {
    pub e0: f64,
    pub delta_e: f64,
    members: Range<usize>,
}

impl EnergyShell {
    pub fn member_indices(&self) -> Range<usize> {
        self.members.clone()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, alpha: usize) -> bool {
        self.members.contains(&alpha)
    }
}

/// Levels within the window [e0 − δE/2, e0 + δE/2]; errors when fewer than
/// `min_levels` (floored at 1) fall inside.
pub fn energy_shell(
    sd: &SpectralDecomposition,
    e0: f64,
    delta_e: f64,
    min_levels: usize,
) -> Result<EnergyShell> {
    if !(delta_e > 0.0) {
        return Err(Error::invalid("shell width must be positive"));
    }
    let min_levels = min_levels.max(1);
    let evs = sd.eigenvalues();
    let lo_bound = e0 - 0.5 * delta_e;
    let hi_bound = e0 + 0.5 * delta_e;
    let lo = evs.partition_point(|&e| e < lo_bound);
    let hi = evs.partition_point(|&e| e <= hi_bound);
    if hi - lo < min_levels {
        return Err(Error::InsufficientStatistics(format!(
            "shell [{lo_bound:.6}, {hi_bound:.6}] holds {} levels, need {min_levels}",
            hi - lo
        )));
    }
    Ok(EnergyShell {
        e0,
        delta_e,
        members: lo..hi,
    })
}

/// Smallest symmetric window width around e0 containing at least `levels`
/// levels, padded so boundary levels stay strictly inside.
pub fn shell_width_for_levels(
    sd: &SpectralDecomposition,
    e0: f64,
    levels: usize,
) -> Result<f64> {
    let levels = levels.max(1);
    if sd.dim() < levels {
        return Err(Error::InsufficientStatistics(format!(
            "spectrum has {} levels, shell needs {levels}",
            sd.dim()
        )));
    }
    let mut dists: Vec<f64> = sd.eigenvalues().iter().map(|&e| (e - e0).abs()).collect();
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let r = dists[levels - 1];
    let scale = sd
        .eigenvalues()
        .iter()
        .fold(0.0f64, |a, &x| a.max(x.abs()))
        .max(1.0);
    Ok(2.0 * r + 1e-9 * sd.spectral_range() + 8.0 * f64::EPSILON * scale)
}

/// Mix of the two eigenvectors bracketing e0, weighted so ⟨T⟩ = e0 exactly;
/// `phase` rotates the upper component.
pub fn bracketing_mix(
    sd: &SpectralDecomposition,
    e0: f64,
    phase: f64,
) -> Result<Vec<c64>> {
    let evs = sd.eigenvalues();
    let d = sd.dim();
    if e0 < evs[0] || e0 > evs[d - 1] {
        return Err(Error::invalid(format!(
            "target energy {e0} outside the spectrum [{}, {}]",
            evs[0],
            evs[d - 1]
        )));
    }
    // Last level at or below e0.
    let a = evs.partition_point(|&e| e <= e0).saturating_sub(1);
    let tol = 1e-12 * (1.0 + sd.spectral_range());
    if (evs[a] - e0).abs() <= tol || a + 1 == d {
        return Ok(sd.eigenvector(a).to_vec());
    }
    let b = a + 1;
    let w = (evs[b] - e0) / (evs[b] - evs[a]);
    let (s, c) = phase.sin_cos();
    let rot = c64::new(c, s);
    let ua = sd.eigenvector(a);
    let ub = sd.eigenvector(b);
    let wa = w.sqrt();
    let wb = (1.0 - w).sqrt();
    Ok((0..d).map(|i| ua[i] * wa + ub[i] * rot * wb).collect())
}

/// Exponentially tilt nonnegative weights over the energies until their mean
/// hits e0; None when e0 is outside the reachable range of the support.
fn tilted_weights(energies: &[f64], base: &[f64], e0: f64) -> Option<Vec<f64>> {
    let weights_at = |beta: f64| -> (Vec<f64>, f64) {
        let m = energies
            .iter()
            .zip(base)
            .filter(|&(_, &b)| b > 0.0)
            .map(|(&e, _)| -beta * e)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut ws: Vec<f64> = energies
            .iter()
            .zip(base)
            .map(|(&e, &b)| if b > 0.0 { b * (-beta * e - m).exp() } else { 0.0 })
            .collect();
        let z: f64 = ws.iter().sum();
        for w in &mut ws {
            *w /= z;
        }
        let mean: f64 = ws.iter().zip(energies).map(|(&w, &e)| w * e).sum();
        (ws, mean)
    };
    let (w0, mean0) = weights_at(0.0);
    if (mean0 - e0).abs() == 0.0 {
        return Some(w0);
    }
    // The tilted mean decreases in β; find a bracket, then bisect.
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    if mean0 > e0 {
        let mut step = 1.0;
        loop {
            hi = lo + step;
            if weights_at(hi).1 <= e0 {
                break;
            }
            lo = hi;
            step *= 2.0;
            if step > 1e18 {
                return None;
            }
        }
    } else {
        let mut step = 1.0;
        loop {
            lo = hi - step;
            if weights_at(lo).1 >= e0 {
                break;
            }
            hi = lo;
            step *= 2.0;
            if step > 1e18 {
                return None;
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if weights_at(mid).1 > e0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (ws, mean) = weights_at(0.5 * (lo + hi));
    let scale = energies
        .iter()
        .fold(0.0f64, |a, &x| a.max(x.abs()))
        .max(1.0);
    if (mean - e0).abs() > 1e-9 * scale {
        return None;
    }
    Some(ws)
}

/// Draw a Haar-like pure state, then retune its energy-basis amplitude
/// profile so ⟨T⟩ = e0 exactly; phases stay random. Falls back to a
/// two-level bracketing mix when the tilt cannot reach e0.
pub fn feasible_state_sample(
    sd: &SpectralDecomposition,
    e0: f64,
    stream: &mut ChaCha12Rng,
) -> Result<Vec<c64>> {
    let evs = sd.eigenvalues();
    let d = sd.dim();
    if e0 < evs[0] || e0 > evs[d - 1] {
        return Err(Error::invalid(format!(
            "target energy {e0} outside the spectrum [{}, {}]",
            evs[0],
            evs[d - 1]
        )));
    }
    let raw = rng::haar_state(d, stream);
    let base: Vec<f64> = raw.iter().map(|z| z.re * z.re + z.im * z.im).collect();
    match tilted_weights(evs, &base, e0) {
        Some(ws) => {
            let coeffs: Vec<c64> = raw
                .iter()
                .zip(&ws)
                .map(|(z, &w)| {
                    let r = z.abs();
                    let phase = if r > 0.0 { *z * (1.0 / r) } else { c64::new(1.0, 0.0) };
                    phase * w.sqrt()
                })
                .collect();
            let mut psi = vec![c64::new(0.0, 0.0); d];
            for (alpha, &ca) in coeffs.iter().enumerate() {
                if ca == c64::new(0.0, 0.0) {
                    continue;
                }
                let u = sd.eigenvector(alpha);
                for i in 0..d {
                    psi[i] += u[i] * ca;
                }
            }
            mat::normalize(&mut psi);
            Ok(psi)
        }
        None => bracketing_mix(sd, e0, stream.gen_range(0.0..std::f64::consts::TAU)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MaximizeOptions {
    pub seed: u64,
    pub n_starts: usize,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Cap on total inner iterations per start.
    pub max_total: usize,
    pub grad_tol: f64,
    pub constraint_tol: f64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            n_starts: 6,
            max_outer: 60,
            max_inner: 2000,
            max_total: 100_000,
            grad_tol: 1e-9,
            constraint_tol: 1e-8,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            max_penalty: 1e13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaximizerOutcome {
    /// The maximizing pure state, in the original coordinates.
    pub state: QuantumState,
    pub multipliers: LagrangeMultipliers,
    pub report: EquilibriumReport,
    pub entropy: f64,
    /// |⟨T⟩ − E0| at the returned state.
    pub energy_error: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub starts_converged: usize,
    /// Entropy spread across converged starts.
    pub multi_start_spread: f64,
    /// Set when converged starts disagree in H by more than 1e-8.
    pub spread_flagged: bool,
}

/// Entropy disagreement between converged starts worth surfacing.
pub const MULTI_START_SPREAD_TOL: f64 = 1e-8;

struct SectorProblem {
    t_tilde: CMat,
    col_outcome: Vec<usize>,
    n_outcomes: usize,
    e0: f64,
}

impl SectorProblem {
    fn probs(&self, c: &[c64]) -> Vec<f64> {
        let mut p = vec![0.0f64; self.n_outcomes];
        for (k, z) in c.iter().enumerate() {
            p[self.col_outcome[k]] += z.re * z.re + z.im * z.im;
        }
        p
    }

    /// (entropy, energy-constraint value, T̃c).
    fn evaluate(&self, c: &[c64]) -> (f64, f64, Vec<c64>) {
        let tc = mat::matvec(&self.t_tilde, c);
        let ce = mat::inner(c, &tc).re - self.e0;
        let h = shannon_entropy_probs(&self.probs(c));
        (h, ce, tc)
    }

    /// Ascent direction of the penalized objective with respect to the
    /// conjugate coordinates, before tangent projection.
    fn gradient(&self, c: &[c64], tc: &[c64], ce: f64, nu: f64, mu: f64) -> Vec<c64> {
        let p = self.probs(c);
        let coef = nu + mu * ce;
        c.iter()
            .enumerate()
            .map(|(k, &ck)| {
                let pj = p[self.col_outcome[k]];
                let ent = if pj > 1e-300 {
                    ck * (-(pj.ln() + 1.0))
                } else {
                    c64::new(0.0, 0.0)
                };
                ent - tc[k] * coef
            })
            .collect()
    }
}

struct StartSolve {
    c: Vec<c64>,
    entropy: f64,
    constraint: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
}

fn solve_from_start(
    problem: &SectorProblem,
    c0: Vec<c64>,
    opts: &MaximizeOptions,
) -> StartSolve {
    let mut c = c0;
    mat::normalize(&mut c);
    let mut nu = 0.0f64;
    let mut mu = opts.initial_penalty;
    let mut prev_ce = f64::INFINITY;
    let mut total = 0usize;
    let mut last = problem.evaluate(&c);
    let mut grad_norm = f64::INFINITY;
    for _outer in 0..opts.max_outer {
        let mut eta = 0.5f64;
        let mut inner = 0usize;
        loop {
            inner += 1;
            total += 1;
            let (h, ce, tc) = last.clone();
            let l_now = h - nu * ce - 0.5 * mu * ce * ce;
            let mut g = problem.gradient(&c, &tc, ce, nu, mu);
            let overlap = mat::inner(&c, &g);
            for (gk, &ck) in g.iter_mut().zip(&c) {
                *gk -= ck * overlap;
            }
            grad_norm = mat::norm(&g);
            if grad_norm <= opts.grad_tol
                || inner >= opts.max_inner
                || total >= opts.max_total
            {
                break;
            }
            let mut step = eta;
            let mut accepted = false;
            for _ in 0..60 {
                let mut trial: Vec<c64> = c
                    .iter()
                    .zip(&g)
                    .map(|(&ck, &gk)| ck + gk * step)
                    .collect();
                mat::normalize(&mut trial);
                let (h2, ce2, tc2) = problem.evaluate(&trial);
                let l_trial = h2 - nu * ce2 - 0.5 * mu * ce2 * ce2;
                if l_trial >= l_now + 1e-4 * step * grad_norm * grad_norm {
                    c = trial;
                    last = (h2, ce2, tc2);
                    eta = (step * 1.5).min(10.0);
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // No ascent step exists at this precision.
                break;
            }
        }
        let ce = last.1;
        if grad_norm <= opts.grad_tol && ce.abs() <= opts.constraint_tol {
            return StartSolve {
                entropy: last.0,
                constraint: ce,
                c,
                grad_norm,
                iterations: total,
                converged: true,
            };
        }
        if total >= opts.max_total {
            break;
        }
        nu += mu * ce;
        if ce.abs() > 0.25 * prev_ce {
            mu = (mu * opts.penalty_growth).min(opts.max_penalty);
        }
        prev_ce = ce.abs();
    }
    StartSolve {
        entropy: last.0,
        constraint: last.1,
        c,
        grad_norm,
        iterations: total,
        converged: false,
    }
}

/// Maximize the outcome entropy over pure states at fixed energy:
/// projected-gradient ascent with an augmented energy penalty, run from
/// several starts (an exact two-level mix, a tilted narrow profile, and
/// random feasible draws). Start i draws from the (seed, "maximize.start",
/// i) stream.
pub fn maximize_entropy(
    o: &Observable,
    t: &HermitianOperator,
    e0: f64,
    opts: &MaximizeOptions,
) -> Result<MaximizerOutcome> {
    if o.dim() != t.dim() {
        return Err(Error::invalid("observable and operator dims differ"));
    }
    if opts.n_starts == 0 {
        return Err(Error::invalid("need at least one start"));
    }
    let sd_t = crate::quantum::spectral_decompose(t)?;
    let evs = sd_t.eigenvalues();
    if e0 < evs[0] || e0 > evs[sd_t.dim() - 1] {
        return Err(Error::invalid(format!(
            "target energy {e0} outside the spectrum [{}, {}]",
            evs[0],
            evs[sd_t.dim() - 1]
        )));
    }
    let d = o.dim();
    let problem = SectorProblem {
        t_tilde: o.basis().adjoint() * t.matrix() * o.basis(),
        col_outcome: (0..d).map(|k| o.outcome_of_column(k)).collect(),
        n_outcomes: o.n_outcomes(),
        e0,
    };
    let to_sector = |psi: &[c64]| mat::adjoint_matvec(o.basis(), psi);

    let h_ceiling = (o.n_outcomes() as f64).ln();
    let mut best: Option<StartSolve> = None;
    let mut converged_entropies: Vec<f64> = Vec::new();
    let mut iterations = 0usize;
    let mut best_failed: Option<StartSolve> = None;
    for start in 0..opts.n_starts {
        let mut stream = rng::substream(opts.seed, "maximize.start", start as u64);
        let psi0 = match start {
            0 => bracketing_mix(&sd_t, e0, 0.0)?,
            1 => narrow_profile_start(&sd_t, e0, &mut stream)?,
            _ => feasible_state_sample(&sd_t, e0, &mut stream)?,
        };
        let solve = solve_from_start(&problem, to_sector(&psi0), opts);
        iterations += solve.iterations;
        if solve.converged {
            converged_entropies.push(solve.entropy);
            let better = best
                .as_ref()
                .map(|b| solve.entropy > b.entropy)
                .unwrap_or(true);
            if better {
                best = Some(solve);
            }
            if best.as_ref().unwrap().entropy >= h_ceiling - 1e-12 {
                break;
            }
        } else {
            let better = best_failed
                .as_ref()
                .map(|b| solve.constraint.abs() < b.constraint.abs())
                .unwrap_or(true);
            if better {
                best_failed = Some(solve);
            }
        }
    }
    let Some(winner) = best else {
        let diag = best_failed
            .map(|s| {
                format!(
                    "best attempt: gradient norm {:.3e}, constraint {:.3e}, H {:.12}",
                    s.grad_norm, s.constraint, s.entropy
                )
            })
            .unwrap_or_else(|| "no attempts recorded".into());
        return Err(Error::NoConvergence(format!(
            "no start converged within the iteration budget; {diag}"
        )));
    };
    let spread = converged_entropies
        .iter()
        .fold(f64::NEG_INFINITY, |a, &x| a.max(x))
        - converged_entropies
            .iter()
            .fold(f64::INFINITY, |a, &x| a.min(x));
    let psi = mat::matvec(o.basis(), &winner.c);
    let state = QuantumState::pure_normalized(psi)?;
    let multipliers = fit_multipliers(&state, o, t)?;
    let report = ee_residuals(&state, o, t, multipliers)?;
    let energy_error = (report.energy - e0).abs();
    Ok(MaximizerOutcome {
        state,
        multipliers,
        report,
        entropy: winner.entropy,
        energy_error,
        grad_norm: winner.grad_norm,
        iterations,
        starts_converged: converged_entropies.len(),
        multi_start_spread: spread,
        spread_flagged: spread > MULTI_START_SPREAD_TOL,
    })
}

/// Tilted narrow Gaussian amplitude profile over the energy levels with
/// random phases; exactly feasible by construction.
fn narrow_profile_start(
    sd: &SpectralDecomposition,
    e0: f64,
    stream: &mut ChaCha12Rng,
) -> Result<Vec<c64>> {
    let d = sd.dim();
    let sigma = (0.05 * sd.spectral_range()).max(1e-12);
    let base: Vec<f64> = sd
        .eigenvalues()
        .iter()
        .map(|&e| (-((e - e0) * (e - e0)) / (2.0 * sigma * sigma)).exp())
        .collect();
    match tilted_weights(sd.eigenvalues(), &base, e0) {
        Some(ws) => {
            let mut psi = vec![c64::new(0.0, 0.0); d];
            for (alpha, &w) in ws.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let phi: f64 = stream.gen_range(0.0..std::f64::consts::TAU);
                let amp = c64::new(phi.cos(), phi.sin()) * w.sqrt();
                let u = sd.eigenvector(alpha);
                for i in 0..d {
                    psi[i] += u[i] * amp;
                }
            }
            mat::normalize(&mut psi);
            Ok(psi)
        }
        None => bracketing_mix(sd, e0, stream.gen_range(0.0..std::f64::consts::TAU)),
    }
}

/// How close an eigenstate's outcome distribution sits to the flat profile
/// forced by unbiasedness.
#[derive(Debug, Clone)]
pub struct ConstantDistributionReport {
    pub distribution: EigenvalueDistribution,
    /// Number of basis columns carrying weight above the cutoff.
    pub support_size: usize,
    /// max_k |π_k − prediction|, prediction = 1/support on it, 0 off it.
    pub uniform_deviation: f64,
    /// max_j |p_j − m_j/D|: the unbiased-basis prediction.
    pub multiplicity_deviation: f64,
    pub eigenstate_residual: f64,
}

/// Check the flat-distribution property of an energy eigenstate; rejects
/// states that are not eigenstates of `t`.
pub fn constant_distribution_check(
    state: &QuantumState,
    o: &Observable,
    t: &HermitianOperator,
) -> Result<ConstantDistributionReport> {
    if !state.is_pure() {
        return Err(Error::invalid(
            "the flat-distribution check takes a pure energy eigenstate",
        ));
    }
    if state.dim() != o.dim() || t.dim() != o.dim() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let psi = state.component(0);
    let tpsi = t.apply(psi);
    let e = mat::inner(psi, &tpsi).re;
    let resid: f64 = tpsi
        .iter()
        .zip(psi)
        .map(|(&y, &x)| {
            let r = y - x * e;
            r.re * r.re + r.im * r.im
        })
        .sum::<f64>()
        .sqrt();
    let scale = mat::max_abs(t.matrix()).max(1.0);
    if resid > EIGENSTATE_RESIDUAL_TOL * scale {
        return Err(Error::invalid(format!(
            "state is not an eigenstate: residual {resid:.3e} exceeds {:.3e}",
            EIGENSTATE_RESIDUAL_TOL * scale
        )));
    }
    let x = mat::adjoint_matvec(o.basis(), psi);
    let pi: Vec<f64> = x.iter().map(|z| z.re * z.re + z.im * z.im).collect();
    let support: Vec<usize> = (0..pi.len())
        .filter(|&k| pi[k] > SUPPORT_CUTOFF)
        .collect();
    let support_size = support.len();
    let pred_on = 1.0 / support_size as f64;
    let mut uniform_deviation = 0.0f64;
    for &p in &pi {
        let pred = if p > SUPPORT_CUTOFF { pred_on } else { 0.0 };
        uniform_deviation = uniform_deviation.max((p - pred).abs());
    }
    let d = o.dim() as f64;
    let mut probs = vec![0.0f64; o.n_outcomes()];
    for (k, &p) in pi.iter().enumerate() {
        probs[o.outcome_of_column(k)] += p;
    }
    let mut multiplicity_deviation = 0.0f64;
    for (j, &p) in probs.iter().enumerate() {
        multiplicity_deviation =
            multiplicity_deviation.max((p - o.multiplicity(j) as f64 / d).abs());
    }
    let distribution = EigenvalueDistribution::new(o.values().to_vec(), probs)?;
    Ok(ConstantDistributionReport {
        distribution,
        support_size,
        uniform_deviation,
        multiplicity_deviation,
        eigenstate_residual: resid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hub::{hub_from_hamiltonian, HubMethod, SpectrumAssignment};
    use crate::quantum::models::{ising_chain, pauli_x, pauli_z, random_hermitian};
    use crate::quantum::{spectral_decompose, Observable};

    fn sigma_z_op() -> HermitianOperator {
        HermitianOperator::new(pauli_z()).unwrap()
    }

    fn sigma_x_observable() -> Observable {
        let op = HermitianOperator::new(pauli_x()).unwrap();
        let sd = spectral_decompose(&op).unwrap();
        Observable::from_spectral(&sd).unwrap()
    }

    #[test]
    fn sector_energies_complete_for_random_state() {
        let t = ising_chain(3, 1.0, 0.5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
        let o = crate::hub::make_huo(&hub, &SpectrumAssignment::degenerate(8, 4).unwrap())
            .unwrap();
        let mut stream = rng::substream(3, "test.sec", 0);
        let psi = QuantumState::pure(rng::haar_state(8, &mut stream)).unwrap();
        let se = sector_energies(&psi, &o, &t).unwrap();
        assert!(se.completeness_gap() < 1e-10);
    }

    #[test]
    fn basis_state_sector_energy_is_diagonal_element() {
        let t = random_hermitian(5, 9).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let o = Observable::from_spectral(&sd).unwrap();
        // ψ = third sector basis vector.
        let psi = QuantumState::pure(o.basis_column(2).to_vec()).unwrap();
        let se = sector_energies(&psi, &o, &t).unwrap();
        for k in 0..5 {
            let e = se.entry(k, 0);
            if k == 2 {
                assert!((e.re - sd.eigenvalue(2)).abs() < 1e-12);
                assert!(e.im.abs() < 1e-12);
            } else {
                assert!(e.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenstate_with_commuting_observable_has_real_energies() {
        let t = random_hermitian(6, 4).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let o = Observable::from_spectral(&sd).unwrap();
        let psi = QuantumState::pure(sd.eigenvector(1).to_vec()).unwrap();
        let se = sector_energies(&psi, &o, &t).unwrap();
        assert!(se.max_imag() < 1e-12);
    }

    #[test]
    fn rabi_distribution_derivative_matches_closed_form() {
        // ψ(t) = (e^{−it}|0⟩ + e^{it}|1⟩)/√2 under T = σ^z; measured in the
        // σ^x eigenbasis the lower outcome probability is sin²t, so its time
        // derivative is sin 2t.
        let t_op = sigma_z_op();
        let o = sigma_x_observable();
        for t in [0.0f64, 0.3, 1.1] {
            let a = c64::new((0.5f64).sqrt(), 0.0);
            let psi = vec![
                a * c64::new((-t).cos(), (-t).sin()),
                a * c64::new(t.cos(), t.sin()),
            ];
            let state = QuantumState::pure_normalized(psi).unwrap();
            let dp = distribution_time_derivative(&state, &o, &t_op).unwrap();
            let expected = (2.0 * t).sin();
            assert!(
                (dp[0] - expected).abs() < 1e-12,
                "t={t}: got {} want {expected}",
                dp[0]
            );
            assert!((dp[1] + expected).abs() < 1e-12);
            assert!((dp[0] + dp[1]).abs() < 1e-14, "derivatives must sum to 0");
        }
    }

    #[test]
    fn eigenstate_distribution_is_stationary() {
        let t = ising_chain(3, 1.0, 0.5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
        let o = crate::hub::make_huo(&hub, &SpectrumAssignment::degenerate(8, 4).unwrap())
            .unwrap();
        let psi = QuantumState::pure(sd.eigenvector(3).to_vec()).unwrap();
        let dp = distribution_time_derivative(&psi, &o, &t).unwrap();
        for v in dp {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn wirtinger_gradient_matches_finite_differences() {
        let t = random_hermitian(6, 21).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
        let o = crate::hub::make_huo(&hub, &SpectrumAssignment::degenerate(6, 3).unwrap())
            .unwrap();
        let problem = SectorProblem {
            t_tilde: o.basis().adjoint() * t.matrix() * o.basis(),
            col_outcome: (0..6).map(|k| o.outcome_of_column(k)).collect(),
            n_outcomes: 3,
            e0: 0.2,
        };
        let mut stream = rng::substream(8, "test.grad", 0);
        let c = rng::haar_state(6, &mut stream);
        let (nu, mu) = (0.7, 3.0);
        let l_of = |c: &[c64]| {
            let (h, ce, _) = problem.evaluate(c);
            h - nu * ce - 0.5 * mu * ce * ce
        };
        let (_, ce0, tc0) = problem.evaluate(&c);
        let g = problem.gradient(&c, &tc0, ce0, nu, mu);
        let h = 1e-6;
        for dir in 0..4 {
            let v = rng::haar_state(6, &mut stream);
            let shift = |s: f64| -> Vec<c64> {
                c.iter().zip(&v).map(|(&ck, &vk)| ck + vk * s).collect()
            };
            let fd = (l_of(&shift(h)) - l_of(&shift(-h))) / (2.0 * h);
            let analytic: f64 = 2.0 * mat::inner(&v, &g).re;
            assert!(
                (fd - analytic).abs() < 1e-5 * (1.0 + analytic.abs()),
                "direction {dir}: fd {fd} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn qubit_maximizer_closed_forms() {
        let t = sigma_z_op();
        let o = sigma_x_observable();
        let opts = MaximizeOptions::default();

        // Free choice at E0 = 0: uniform distribution.
        let out = maximize_entropy(&o, &t, 0.0, &opts).unwrap();
        assert!((out.entropy - 2.0f64.ln()).abs() < 1e-9);
        assert!(out.energy_error < 1e-8);
        let dist = crate::quantum::eigenvalue_distribution(&out.state, &o).unwrap();
        assert!((dist.probability(0) - 0.5).abs() < 1e-6);

        // Ground state forced, still unbiased to the σ^x basis.
        let out = maximize_entropy(&o, &t, -1.0, &opts).unwrap();
        assert!((out.entropy - 2.0f64.ln()).abs() < 1e-9);

        // O = T with the constraint pinning the ground state: H = 0. A
        // constraint slack ε admits entropy up to ε(ln(1/ε) + 1), so the
        // bound follows the constraint tolerance, not machine precision.
        let sd_t = spectral_decompose(&t).unwrap();
        let o_t = Observable::from_spectral(&sd_t).unwrap();
        let out = maximize_entropy(&o_t, &t, -1.0, &opts).unwrap();
        assert!(out.entropy.abs() < 1e-6, "entropy {:e}", out.entropy);
        assert!(out.report.linear_relation_gap < 1e-6);
    }

    #[test]
    fn maximizer_is_deterministic_in_the_seed() {
        let t = random_hermitian(4, 33).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
        let o = crate::hub::make_huo(&hub, &SpectrumAssignment::degenerate(4, 2).unwrap())
            .unwrap();
        let opts = MaximizeOptions::default();
        let a = maximize_entropy(&o, &t, 0.1, &opts).unwrap();
        let b = maximize_entropy(&o, &t, 0.1, &opts).unwrap();
        assert_eq!(a.entropy, b.entropy);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn maximizer_rejects_energy_outside_spectrum() {
        let t = sigma_z_op();
        let o = sigma_x_observable();
        assert!(maximize_entropy(&o, &t, 2.0, &MaximizeOptions::default()).is_err());
    }

    #[test]
    fn eigenstate_equilibrium_residuals_vanish() {
        let t = ising_chain(3, 1.0, 0.5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
        let o = crate::hub::make_huo(&hub, &SpectrumAssignment::degenerate(8, 4).unwrap())
            .unwrap();
        let psi = QuantumState::pure(sd.eigenvector(2).to_vec()).unwrap();
        let report = equilibrium_report(&psi, &o, &t).unwrap();
        assert!(report.ee1_residual < 1e-10, "ee1 {}", report.ee1_residual);
        assert!(report.ee2_max < 1e-8, "ee2 {}", report.ee2_max);
        assert!(report.linear_relation_gap < 1e-8);
        // Unbiased sectors of equal multiplicity: uniform distribution.
        assert!((report.entropy - 4.0f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn nonstationary_state_shows_imaginary_energy() {
        let t = ising_chain(3, 1.0, 0.5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
        let o = crate::hub::make_huo(&hub, &SpectrumAssignment::degenerate(8, 4).unwrap())
            .unwrap();
        let mut stream = rng::substream(14, "test.nonstat", 0);
        let psi = QuantumState::pure(rng::haar_state(8, &mut stream)).unwrap();
        let report = equilibrium_report(&psi, &o, &t).unwrap();
        assert!(report.ee1_residual > 1e-3);
    }

    #[test]
    fn energy_shell_selection_and_errors() {
        let t = random_hermitian(16, 11).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let mid = 0.5 * (sd.min_eigenvalue() + sd.max_eigenvalue());
        let width = shell_width_for_levels(&sd, mid, 5).unwrap();
        let shell = energy_shell(&sd, mid, width, SHELL_MIN_LEVELS).unwrap();
        assert!(shell.len() >= 5);
        for alpha in shell.member_indices() {
            assert!((sd.eigenvalue(alpha) - mid).abs() <= width / 2.0);
        }
        // A sliver around a gap holds nothing.
        assert!(matches!(
            energy_shell(&sd, mid, 1e-15, SHELL_MIN_LEVELS),
            Err(Error::InsufficientStatistics(_))
        ));
    }

    #[test]
    fn feasible_samples_hit_the_target_energy() {
        let t = ising_chain(4, 1.0, 0.7).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let mut stream = rng::substream(5, "test.feas", 0);
        for e0 in [-2.0, 0.0, 1.5] {
            for _ in 0..10 {
                let psi = feasible_state_sample(&sd, e0, &mut stream).unwrap();
                let state = QuantumState::pure_normalized(psi).unwrap();
                let e = expectation(&state, &t).unwrap();
                assert!((e - e0).abs() < 1e-9, "energy {e} target {e0}");
            }
        }
    }

    #[test]
    fn bracketing_mix_recovers_exact_eigenvalue() {
        let t = sigma_z_op();
        let sd = spectral_decompose(&t).unwrap();
        let psi = bracketing_mix(&sd, -1.0, 0.0).unwrap();
        let state = QuantumState::pure_normalized(psi).unwrap();
        assert!((expectation(&state, &t).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_distribution_at_eigenstate_of_unbiased_observable() {
        let t = ising_chain(3, 1.0, 0.5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
        let o = crate::hub::make_huo(&hub, &SpectrumAssignment::degenerate(8, 4).unwrap())
            .unwrap();
        let psi = QuantumState::pure(sd.eigenvector(0).to_vec()).unwrap();
        let rep = constant_distribution_check(&psi, &o, &t).unwrap();
        assert_eq!(rep.support_size, 8);
        assert!(rep.uniform_deviation < 1e-10);
        assert!(rep.multiplicity_deviation < 1e-10);
    }

    #[test]
    fn flat_distribution_rejects_non_eigenstates() {
        let t = ising_chain(2, 1.0, 0.5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
        let o = crate::hub::make_huo(&hub, &SpectrumAssignment::degenerate(4, 2).unwrap())
            .unwrap();
        let mut stream = rng::substream(6, "test.flatrej", 0);
        let psi = QuantumState::pure(rng::haar_state(4, &mut stream)).unwrap();
        assert!(constant_distribution_check(&psi, &o, &t).is_err());
    }

    #[test]
    fn observable_as_its_own_support_check() {
        // O = T: an eigenstate concentrates on its own eigenvalue sector.
        let t = random_hermitian(6, 13).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let o = Observable::from_spectral(&sd).unwrap();
        let psi = QuantumState::pure(sd.eigenvector(4).to_vec()).unwrap();
        let rep = constant_distribution_check(&psi, &o, &t).unwrap();
        assert_eq!(rep.support_size, 1);
        assert!((rep.distribution.probability(4) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multiplier_fit_solves_rank_one_systems_consistently() {
        // Eigenstate rows are collinear; the min-norm fit must still satisfy
        // the summed linear relation exactly.
        let t = ising_chain(3, 1.0, 0.5).unwrap();
        let sd = spectral_decompose(&t).unwrap();
        let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
        let o = crate::hub::make_huo(&hub, &SpectrumAssignment::degenerate(8, 4).unwrap())
            .unwrap();
        let psi = QuantumState::pure(sd.eigenvector(5).to_vec()).unwrap();
        let report = equilibrium_report(&psi, &o, &t).unwrap();
        assert!(report.linear_relation_gap < 1e-9);
    }
}
