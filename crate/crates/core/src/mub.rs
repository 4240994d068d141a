//! Mutually unbiased bases: the discrete Fourier basis for any dimension,
//! and complete families of D+1 pairwise-unbiased bases for odd-prime and
//! power-of-two dimensions.
//!
//! Power-of-two families come from binary-field quadratic forms: basis μ has
//! components i^{q_μ(k)} (−1)^{k·m} / √D, where q_μ is built from the bit
//! matrix S_μ[r][c] = Tr(μ x^{r+c}) over GF(2^N). Odd-prime families use
//! ω^{a k² + m k} / √p. Both are exact up to floating-point rounding.

use std::f64::consts::PI;

use crate::mat;
use crate::quantum::BASIS_ORTHONORMALITY_TOL;
use crate::{c64, CMat, Error, Result};

/// Largest dimension for which a family will be generated; one basis at this
/// size is already a 268 MB matrix.
pub const MAX_MUB_DIM: usize = 4096;

/// An orthonormal basis stored as matrix columns.
#[derive(Debug, Clone)]
pub struct Basis {
    matrix: CMat,
}

impl Basis {
    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::invalid("basis matrix must be square and nonempty"));
        }
        let dev = mat::orthonormality_deviation(&matrix);
        if dev > BASIS_ORTHONORMALITY_TOL {
            return Err(Error::NumericCheck(format!(
                "basis not orthonormal: deviation {dev:.3e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn computational(dim: usize) -> Self {
        Self {
            matrix: mat::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn column(&self, k: usize) -> &[c64] {
        self.matrix.col_as_slice(k)
    }
}

/// max_{k,m} | |⟨a_k|b_m⟩|² − 1/D |: zero iff the two orthonormal bases are
/// exactly mutually unbiased.
pub fn unbiasedness_deviation(a: &CMat, b: &CMat) -> f64 {
    let d = a.nrows();
    let g = a.adjoint() * b;
    let target = 1.0 / d as f64;
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let z = g[(i, j)];
            let p = z.re * z.re + z.im * z.im;
            worst = worst.max((p - target).abs());
        }
    }
    worst
}

/// F[m][k] = e^{2πi m k / D} / √D.
pub fn fourier_basis(dim: usize) -> Result<Basis> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if dim > MAX_MUB_DIM {
        return Err(Error::UnsupportedDimension {
            dim,
            reason: format!("dimensions above {MAX_MUB_DIM} are not supported"),
        });
    }
    let norm = 1.0 / (dim as f64).sqrt();
    let step = 2.0 * PI / dim as f64;
    let matrix = CMat::from_fn(dim, dim, |m, k| {
        let e = (m * k) % dim;
        let th = step * e as f64;
        c64::new(th.cos() * norm, th.sin() * norm)
    });
    Basis::new(matrix)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum FamilyKind {
    OddPrime { p: u64 },
    /// GF(2^n) with an irreducible polynomial of degree n (bit-packed).
    PowerOfTwo { n: u32, poly: u32 },
}

/// A complete family of D+1 mutually unbiased bases. Bases materialize on
/// demand: index 0 is the computational basis, indices 1..=D come from the
/// family construction. At D = 4096 the whole family would occupy about a
/// terabyte, so nothing is cached.
#[derive(Debug, Clone)]
pub struct MubFamily {
    dim: usize,
    kind: FamilyKind,
}

/// Irreducible polynomials over GF(2), degree 1 through 12.
const IRREDUCIBLE_POLY: [u32; 12] = [
    0b11,            // x + 1
    0b111,           // x² + x + 1
    0b1011,          // x³ + x + 1
    0b10011,         // x⁴ + x + 1
    0b100101,        // x⁵ + x² + 1
    0b1000011,       // x⁶ + x + 1
    0b10000011,      // x⁷ + x + 1
    0b100011011,     // x⁸ + x⁴ + x³ + x + 1
    0b1000010001,    // x⁹ + x⁴ + 1
    0b10000001001,   // x¹⁰ + x³ + 1
    0b100000000101,  // x¹¹ + x² + 1
    0b1000001010011, // x¹² + x⁶ + x⁴ + x + 1
];

pub fn generate_mub_family(dim: usize) -> Result<MubFamily> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if dim > MAX_MUB_DIM {
        return Err(Error::UnsupportedDimension {
            dim,
            reason: format!("dimensions above {MAX_MUB_DIM} are not supported"),
        });
    }
    if dim.is_power_of_two() {
        let n = dim.trailing_zeros();
        let poly = if n == 0 { 1 } else { IRREDUCIBLE_POLY[n as usize - 1] };
        return Ok(MubFamily {
            dim,
            kind: FamilyKind::PowerOfTwo { n, poly },
        });
    }
    if is_odd_prime(dim as u64) {
        return Ok(MubFamily {
            dim,
            kind: FamilyKind::OddPrime { p: dim as u64 },
        });
    }
    Err(Error::UnsupportedDimension {
        dim,
        reason: "dimension is neither a power of two nor an odd prime".into(),
    })
}

fn is_odd_prime(n: u64) -> bool {
    if n < 3 || n % 2 == 0 {
        return false;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

impl MubFamily {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of bases in the family, always dim + 1.
    pub fn len(&self) -> usize {
        self.dim + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Materialize basis `idx`; 0 is the computational basis.
    pub fn basis(&self, idx: usize) -> Result<Basis> {
        if idx >= self.len() {
            return Err(Error::invalid(format!(
                "basis index {idx} out of range for family of {}",
                self.len()
            )));
        }
        if idx == 0 {
            return Ok(Basis::computational(self.dim));
        }
        match &self.kind {
            FamilyKind::OddPrime { p } => odd_prime_basis(*p, (idx - 1) as u64),
            FamilyKind::PowerOfTwo { n, poly } => {
                power_of_two_basis(*n, *poly, (idx - 1) as u32)
            }
        }
    }

    pub fn bases(&self) -> impl Iterator<Item = Result<Basis>> + '_ {
        (0..self.len()).map(move |i| self.basis(i))
    }

    /// Worst pairwise unbiasedness deviation across the whole family.
    /// Materializes bases pair by pair; quadratic in the family size.
    pub fn max_pairwise_deviation(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            let a = self.basis(i)?;
            for j in (i + 1)..self.len() {
                let b = self.basis(j)?;
                worst = worst.max(unbiasedness_deviation(a.matrix(), b.matrix()));
            }
        }
        Ok(worst)
    }
}

/// B_a[k, m] = ω^{a k² + m k} / √p with ω = e^{2πi/p}.
fn odd_prime_basis(p: u64, a: u64) -> Result<Basis> {
    let d = p as usize;
    let norm = 1.0 / (p as f64).sqrt();
    let step = 2.0 * PI / p as f64;
    let matrix = CMat::from_fn(d, d, |k, m| {
        let k = k as u64;
        let e = (a * k % p * k + m as u64 * k) % p;
        let th = step * e as f64;
        c64::new(th.cos() * norm, th.sin() * norm)
    });
    Basis::new(matrix)
}

/// Carry-less multiplication in GF(2^n) modulo `poly`.
fn gf_mul(a: u32, b: u32, poly: u32, n: u32) -> u32 {
    if n == 0 {
        return 0;
    }
    let mut acc: u64 = 0;
    let a64 = a as u64;
    for i in 0..n {
        if (b >> i) & 1 == 1 {
            acc ^= a64 << i;
        }
    }
    let p64 = poly as u64;
    for i in (n..2 * n).rev() {
        if (acc >> i) & 1 == 1 {
            acc ^= p64 << (i - n);
        }
    }
    acc as u32
}

/// Absolute trace GF(2^n) → GF(2): x + x² + x⁴ + … + x^{2^{n−1}}.
fn gf_trace(x: u32, poly: u32, n: u32) -> u32 {
    let mut acc = 0u32;
    let mut t = x;
    for _ in 0..n {
        acc ^= t;
        t = gf_mul(t, t, poly, n);
    }
    debug_assert!(acc <= 1, "trace must land in GF(2); polynomial table broken");
    acc & 1
}

/// Basis μ for D = 2^n: component (k, m) is i^{q_μ(k)} (−1)^{popcount(k&m)} / √D
/// with q_μ(k) = Σ_r S[r][r] k_r + 2 Σ_{r<c} S[r][c] k_r k_c (mod 4) and
/// S[r][c] = Tr(μ x^{r+c}).
fn power_of_two_basis(n: u32, poly: u32, mu: u32) -> Result<Basis> {
    let d = 1usize << n;
    let nn = n as usize;
    // Monomial powers x^e for e ≤ 2n−2.
    let mut pow = vec![0u32; (2 * nn).max(1)];
    pow[0] = if n == 0 { 0 } else { 1 };
    for e in 1..pow.len() {
        pow[e] = gf_mul(pow[e - 1], 0b10, poly, n);
    }
    let mut diag_mask = 0u32;
    let mut upper = vec![0u32; nn];
    for r in 0..nn {
        for c in r..nn {
            if gf_trace(gf_mul(mu, pow[r + c], poly, n), poly, n) == 1 {
                if c == r {
                    diag_mask |= 1 << r;
                } else {
                    upper[r] |= 1 << c;
                }
            }
        }
    }
    // q depends only on the row index; tabulate it once.
    let mut quartic_phase = vec![0u8; d];
    for (k, q) in quartic_phase.iter_mut().enumerate() {
        let k32 = k as u32;
        let mut cross = 0u32;
        for (r, &row) in upper.iter().enumerate() {
            if (k32 >> r) & 1 == 1 {
                cross += (row & k32).count_ones();
            }
        }
        *q = (((diag_mask & k32).count_ones() + 2 * cross) % 4) as u8;
    }
    let norm = 1.0 / (d as f64).sqrt();
    let i_pow = [
        c64::new(norm, 0.0),
        c64::new(0.0, norm),
        c64::new(-norm, 0.0),
        c64::new(0.0, -norm),
    ];
    let matrix = CMat::from_fn(d, d, |k, m| {
        let z = i_pow[quartic_phase[k] as usize];
        if (k & m).count_ones() % 2 == 0 {
            z
        } else {
            -z
        }
    });
    Basis::new(matrix)
}
