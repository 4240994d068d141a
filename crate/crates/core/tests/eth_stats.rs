//! Statistical behavior of energy-basis matrix elements at moderate scale:
//! phase uniformity, factorization, residual moments, and negative controls
//! that must fail.

use huo_core::eth::{
    clt_residual_test, diagonal_constancy, eth_ansatz_summary, matrix_elements,
    phase_uniformity, sample_offdiag_pairs, sequence_correlations,
    uncorrelated_factorization_check, default_smearing_width,
};
use huo_core::hub::{
    hub_from_hamiltonian, make_huo, phase_table, HubMethod, SpectrumAssignment,
};
use huo_core::quantum::models::random_hermitian;
use huo_core::quantum::{spectral_decompose, Observable};
use huo_core::rng;

use rand::Rng;

#[test]
fn phase_uniformity_holds_at_d_256() {
    let t = random_hermitian(256, 41).unwrap();
    let sd = spectral_decompose(&t).unwrap();
    let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
    let phases = phase_table(&hub, &sd).unwrap();
    // 100 seeded distinct pairs.
    let mut stream = rng::substream(41, "test.pairs", 0);
    let mut pairs = Vec::new();
    while pairs.len() < 100 {
        let a = stream.gen_range(0..256usize);
        let b = stream.gen_range(0..256usize);
        if a != b && !pairs.contains(&(a.min(b), a.max(b))) {
            pairs.push((a.min(b), a.max(b)));
        }
    }
    let report = phase_uniformity(&phases, &pairs).unwrap();
    assert!(!report.small_dim);
    assert!(
        report.pass_fraction >= 0.95,
        "only {}% of pairs pass",
        100.0 * report.pass_fraction
    );
}

#[test]
fn factorization_holds_for_a_zero_trace_huo_at_d_512() {
    let t = random_hermitian(512, 43).unwrap();
    let sd = spectral_decompose(&t).unwrap();
    let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier).unwrap();
    let spectrum = SpectrumAssignment::degenerate(512, 4).unwrap();
    assert_eq!(spectrum.trace(), 0.0);
    let o = make_huo(&hub, &spectrum).unwrap();
    let report = uncorrelated_factorization_check(&o, &sd, 1).unwrap();
    assert!(
        report.pass,
        "corr fraction {}, max offdiag {} vs bound {}",
        report.corr_pass_fraction, report.max_offdiag, report.magnitude_bound
    );
    assert!(report.diagonal_max_dev <= 1e-10);
}

#[test]
fn diagonal_observables_fail_both_huo_statistics() {
    // Negative control: an observable sharing the Hamiltonian eigenbasis is
    // maximally biased. Diagonal constancy must fail, and the phase table
    // must refuse the basis outright.
    let t = random_hermitian(64, 47).unwrap();
    let sd = spectral_decompose(&t).unwrap();
    let o = Observable::from_spectral(&sd).unwrap();
    let table = matrix_elements(&o, &sd).unwrap();
    let report = diagonal_constancy(&table, &o).unwrap();
    assert!(!report.pass, "biased observable passed diagonal constancy");
    assert!(report.max_abs_deviation > 1.0);
    assert!(huo_core::hub::phase_table_from_matrix(o.basis(), &sd).is_err());
}

#[test]
fn adversarial_sorted_phases_are_flagged_as_correlated() {
    // Construct value and phase sequences sorted to co-vary; the correlation
    // statistic must exceed the 3/√D threshold that generic pairs satisfy.
    let d = 512usize;
    let mut stream = rng::substream(49, "test.sorted", 0);
    let mut values: Vec<f64> = (0..d).map(|_| stream.gen_range(-2.0..2.0)).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // ω confined to (−π, 0) makes cos ω monotone in ω; sorting both
    // sequences then locks them together.
    let omegas: Vec<f64> = (0..d)
        .map(|k| -std::f64::consts::PI * (1.0 - (k as f64 + 0.5) / d as f64))
        .collect();
    let (cos_corr, _) = sequence_correlations(&values, &omegas).unwrap();
    let threshold = 3.0 / (d as f64).sqrt();
    assert!(
        cos_corr.abs() > threshold,
        "adversarial correlation {cos_corr} under threshold {threshold}"
    );
}

#[test]
fn residual_moments_are_gaussian_for_a_generic_pairing_at_d_1024() {
    // Four distinct values with sectors of 256: the smallest shape that
    // clears the sector-to-distinct ratio the residual limit requires.
    let t = random_hermitian(1024, 53).unwrap();
    let sd = spectral_decompose(&t).unwrap();
    let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier)
        .unwrap()
        .shuffled(53);
    let spectrum = SpectrumAssignment::degenerate(1024, 4).unwrap();
    let o = make_huo(&hub, &spectrum).unwrap();
    let table = matrix_elements(&o, &sd).unwrap();
    let report = clt_residual_test(&table, &spectrum, 3).unwrap();
    assert!(!report.not_applicable && !report.degenerate_data);
    assert!(
        report.pass,
        "moments ({}, {}, {})",
        report.mean, report.variance, report.kurtosis
    );
}

#[test]
fn ansatz_summary_scales_off_diagonals_by_the_level_density() {
    let t = random_hermitian(256, 59).unwrap();
    let sd = spectral_decompose(&t).unwrap();
    let hub = hub_from_hamiltonian(&sd, HubMethod::Fourier)
        .unwrap()
        .shuffled(59);
    let o = make_huo(&hub, &SpectrumAssignment::degenerate(256, 4).unwrap()).unwrap();
    let table = matrix_elements(&o, &sd).unwrap();
    let stats = eth_ansatz_summary(&table, default_smearing_width(&table), 1).unwrap();
    assert!(!stats.insufficient_statistics);
    assert!(stats.diagonal_max_dev <= 1e-10);
    // The bulk of the spectrum is denser than the edges, so the smeared
    // level count must peak in the middle bins.
    let first = stats.entropy_at_bins[0];
    let mid = stats.entropy_at_bins[stats.entropy_at_bins.len() / 2];
    assert!(mid > first, "level density should peak mid-spectrum");
    // Residual moments from the shared standardization path.
    assert!(stats.residual_mean.abs() < 1e-10);
    assert!((stats.residual_variance - 1.0).abs() < 0.05);
    assert!((stats.residual_kurtosis - 3.0).abs() < 1.0);
}

#[test]
fn pair_sampler_covers_the_full_scan_boundary() {
    let at_boundary = sample_offdiag_pairs(256, 1).unwrap();
    assert_eq!(at_boundary.len(), 256 * 255 / 2);
    let above = sample_offdiag_pairs(257, 1).unwrap();
    assert_eq!(above.len(), 10_000);
}
