mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{table_ecd, FullHamiltonian};
use spinweave::{
    averaged_fidelity, chain_spectrum, project_hamiltonian, transferred_population, ChainParameters,
    CouplingDistribution, EnergyScale,
};

fn random_chain(rng: &mut ChaCha8Rng, n: usize) -> CouplingDistribution {
    CouplingDistribution::new((0..n - 1).map(|_| rng.random_range(0.1..3.0)).collect()).unwrap()
}

#[test]
fn projection_matches_full_space_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for scale in [EnergyScale::Pauli, EnergyScale::Hopping] {
        for n in 2..=6 {
            for delta in [0.0, 0.8, 1.0, 1.2] {
                let params = ChainParameters::with_scale(n, delta, scale).unwrap();
                let ecd = random_chain(&mut rng, n);
                let block = FullHamiltonian::new(&params, &ecd).one_excitation_block();
                let h = project_hamiltonian(&params, &ecd).unwrap();
                let dense = h.to_dense();
                for i in 0..n {
                    for j in 0..n {
                        assert!(
                            (block[i][j] - dense[i * n + j]).abs() < 1e-12,
                            "N={n} Δ={delta} entry ({i},{j}): {} vs {}",
                            block[i][j],
                            dense[i * n + j]
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn three_site_block_from_full_space() {
    let params = ChainParameters::with_scale(3, 1.0, EnergyScale::Pauli).unwrap();
    let ecd = CouplingDistribution::new(vec![2.0, 3.0]).unwrap();
    let block = FullHamiltonian::new(&params, &ecd).one_excitation_block();
    let diagonal: Vec<f64> = (0..3).map(|i| block[i][i]).collect();
    assert_eq!(diagonal, vec![-1.0, 5.0, 1.0]);
    assert_eq!(project_hamiltonian(&params, &ecd).unwrap().diagonal, diagonal);
}

#[test]
fn spectral_route_matches_full_space_up_to_ten_sites() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (n, delta) in [(9, 1.0), (10, 0.8), (10, 1.2)] {
        let params = ChainParameters::new(n, delta).unwrap();
        let ecd = random_chain(&mut rng, n);
        let full = FullHamiltonian::new(&params, &ecd);
        for t in [0.7, 3.1, 6.4] {
            let spectral = transferred_population(&params, &ecd, t).unwrap();
            let brute = full.transferred_population(t);
            assert!((spectral - brute).abs() < 1e-8, "N={n} t={t}: {spectral} vs {brute}");
        }
    }
}

#[test]
fn reference_tables_reproduce_listed_populations() {
    let params = ChainParameters::new(50, 1.0).unwrap();
    let cases = [("2", 100.0, 0.9550), ("5", 250.0, 0.9573)];
    for (tag, t, expected) in cases {
        let file = table_ecd(tag);
        assert_eq!(file.n_sites, 50);
        assert_eq!(file.ecd.len(), 49);
        assert!(file.ecd.is_centro_symmetric());
        let p = transferred_population(&params, &file.ecd, t).unwrap();
        assert!((p - expected).abs() <= 5e-4, "κ={tag}: {p}");
        assert_eq!(file.population, Some(expected));
    }
}

#[test]
fn no_transfer_at_time_zero() {
    let params = ChainParameters::new(50, 1.0).unwrap();
    let p = transferred_population(&params, &table_ecd("1").ecd, 0.0).unwrap();
    assert_eq!(p, 0.0);
    assert_eq!(averaged_fidelity(p).unwrap(), 0.5);
}

#[test]
fn fidelity_at_reference_population() {
    let f = averaged_fidelity(0.9550).unwrap();
    assert!((f - (0.9550f64.sqrt() / 3.0 + 0.9550 / 6.0 + 0.5)).abs() < 1e-15);
    assert!((f - 0.985).abs() < 5e-4);
}

#[test]
fn population_matrix_corner_is_transferred_population() {
    let params = ChainParameters::new(12, 1.0).unwrap();
    let ecd = CouplingDistribution::centro_symmetric(&[0.6, 1.1, 1.4, 1.7, 1.9, 2.0], 12).unwrap();
    let spectrum = chain_spectrum(&params, &ecd).unwrap();
    for t in [0.5, 4.0, 17.0] {
        let matrix = spectrum.site_population_matrix(t);
        let p = transferred_population(&params, &ecd, t).unwrap();
        assert!((matrix[0][11] - p).abs() < 1e-13);
    }
}

#[test]
fn table_file_is_verbatim_round_trip() {
    let path = common::data_path("table_n50_kappa_3.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let parsed = spinweave::EcdFile::parse(&text).unwrap();
    let again = spinweave::EcdFile::parse(&parsed.to_csv_string()).unwrap();
    assert_eq!(parsed, again);
    assert_eq!(parsed.ecd.free_values().len(), 25);
}
