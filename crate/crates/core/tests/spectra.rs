//! Whole-spectrum checks across basis, model and eigen.

use proptest::prelude::*;

use polariton_ed::basis::{build_sector_basis, full_dimension, Boundary, Sector, SymBasis};
use polariton_ed::eigen::full_spectrum;
use polariton_ed::model::{build_block, build_hamiltonian, Hamiltonian, ModelParams};

fn sector_eigenvalues(params: &ModelParams, sector: &Sector) -> Vec<f64> {
    let basis = build_sector_basis(sector).unwrap();
    if basis.dimension() == 0 {
        return Vec::new();
    }
    match build_hamiltonian(params, &basis).unwrap() {
        Hamiltonian::Real(h) => full_spectrum(&h, false, 10_000).unwrap().eigenvalues,
        Hamiltonian::Complex(h) => full_spectrum(&h, false, 10_000).unwrap().eigenvalues,
    }
}

fn unreduced_eigenvalues(params: &ModelParams, sites: usize, excitations: usize) -> Vec<f64> {
    let basis = SymBasis::unreduced(sites, excitations).unwrap();
    let h = build_block::<f64>(params, &basis).unwrap();
    full_spectrum(&h, false, 10_000).unwrap().eigenvalues
}

fn assert_same_levels(mut union: Vec<f64>, reference: &[f64]) {
    union.sort_by(f64::total_cmp);
    assert_eq!(union.len(), reference.len());
    for (a, b) in union.iter().zip(reference) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn sector_spectra_partition_the_full_spectrum() {
    for boundary in [Boundary::Pbc, Boundary::Hwbc] {
        for (l, n, delta, t) in [(4, 4, 0.0, 1.0), (4, 3, 1.3, 0.4), (5, 5, -0.7, 0.8), (3, 4, 2.0, 0.3)] {
            let params = ModelParams::new(delta, t, boundary);
            let reference = unreduced_eigenvalues(&params, l, n);
            let union: Vec<f64> = Sector::all(l, n, boundary)
                .unwrap()
                .iter()
                .flat_map(|s| sector_eigenvalues(&params, s))
                .collect();
            assert_same_levels(union, &reference);
        }
    }
}

/// Eigenvalues of the 2x2 block of one cavity with `n` excitations, by
/// direct diagonalization rather than the closed form.
fn site_levels(n: usize, delta: f64) -> Vec<f64> {
    if n == 0 {
        return vec![0.0];
    }
    // basis |n, g>, |n-1, e> with omega_c = 0, omega_a = delta
    let (a, d, b) = (0.0, delta, (n as f64).sqrt());
    let mean = 0.5 * (a + d);
    let half = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    vec![mean - half, mean + half]
}

/// All sums over sites of single-site levels with total excitation `n`.
fn product_levels(sites: usize, n: usize, delta: f64) -> Vec<f64> {
    if sites == 0 {
        return if n == 0 { vec![0.0] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for k in 0..=n {
        let rest = product_levels(sites - 1, n - k, delta);
        for e in site_levels(k, delta) {
            out.extend(rest.iter().map(|r| e + r));
        }
    }
    out
}

#[test]
fn zero_hopping_levels_are_sums_of_site_levels() {
    for (l, n, delta) in [(3, 3, 0.0), (4, 4, 0.5), (4, 2, -2.0), (5, 5, 5.0)] {
        let mut expected = product_levels(l, n, delta);
        expected.sort_by(f64::total_cmp);
        let params = ModelParams::new(delta, 0.0, Boundary::Pbc);
        let got = unreduced_eigenvalues(&params, l, n);
        assert_same_levels(got, &expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sector_dimensions_sum_to_full(l in 1usize..7, n in 0usize..6, pbc in any::<bool>()) {
        let boundary = if pbc { Boundary::Pbc } else { Boundary::Hwbc };
        let total: usize = Sector::all(l, n, boundary)
            .unwrap()
            .iter()
            .map(|s| build_sector_basis(s).unwrap().dimension())
            .sum();
        prop_assert_eq!(total as u64, full_dimension(l, n).unwrap());
    }

    #[test]
    fn trace_is_detuning_times_atomic_excitations(
        delta in -3.0f64..3.0,
        t in 0.0f64..2.0,
        l in 2usize..5,
    ) {
        // tr H = Δ * sum over states of excited atoms; the hopping and JC terms are traceless
        let basis = SymBasis::unreduced(l, l).unwrap();
        let params = ModelParams::new(delta, t, Boundary::Hwbc);
        let h = build_block::<f64>(&params, &basis).unwrap();
        let atoms: usize = (0..basis.dimension())
            .map(|i| basis.state(i).sites.iter().filter(|s| s.atom == polariton_ed::basis::Atom::Excited).count())
            .sum();
        prop_assert!((h.total.trace() - delta * atoms as f64).abs() < 1e-9);
    }
}
