use proptest::prelude::*;

use spinweave::analysis::{fit_exponential, renyi_half_divergence};
use spinweave::disorder::{disorder_statistics, DisorderSpec, NoiseLaw};
use spinweave::spectral::TransferSpectrum;
use spinweave::{
    chain_spectrum, eigendecompose, project_hamiltonian, transferred_population, ChainParameters,
    CouplingDistribution,
};

fn anisotropy() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.0, 0.5, 0.8, 1.0, 1.2, 2.0])
}

fn chain() -> impl Strategy<Value = (ChainParameters, CouplingDistribution)> {
    (2usize..=20, anisotropy()).prop_flat_map(|(n, delta)| {
        prop::collection::vec(0.05f64..5.0, n - 1).prop_map(move |couplings| {
            (
                ChainParameters::new(n, delta).unwrap(),
                CouplingDistribution::new(couplings).unwrap(),
            )
        })
    })
}

fn probability_vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("nonzero mass", |raw| {
        let total: f64 = raw.iter().sum();
        (total > 1e-3).then(|| raw.iter().map(|x| x / total).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn decomposition_meets_contract((params, ecd) in chain()) {
        let h = project_hamiltonian(&params, &ecd).unwrap();
        let spectrum = eigendecompose(&h).unwrap();
        prop_assert!(spectrum.reconstruction_residual(&h) <= 1e-10 * h.max_abs().max(1.0));
        prop_assert!(spectrum.orthogonality_defect() <= 1e-10);
        prop_assert!(spectrum.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rows_of_population_matrix_sum_to_one((params, ecd) in chain(), t in -100.0f64..100.0) {
        let matrix = chain_spectrum(&params, &ecd).unwrap().site_population_matrix(t);
        for row in matrix {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn population_is_even_in_time((params, ecd) in chain(), t in 0.0f64..100.0) {
        let forward = transferred_population(&params, &ecd, t).unwrap();
        let backward = transferred_population(&params, &ecd, -t).unwrap();
        prop_assert!((forward - backward).abs() <= 1e-12);
    }

    #[test]
    fn diagonal_shift_leaves_populations_unchanged(
        (params, ecd) in chain(),
        shift in -10.0f64..10.0,
        t in 0.0f64..40.0,
    ) {
        let h = project_hamiltonian(&params, &ecd).unwrap();
        let mut shifted = h.clone();
        for d in &mut shifted.diagonal {
            *d += shift;
        }
        let a = eigendecompose(&h).unwrap().site_population_matrix(t);
        let b = eigendecompose(&shifted).unwrap().site_population_matrix(t);
        for (row_a, row_b) in a.iter().zip(&b) {
            for (x, y) in row_a.iter().zip(row_b) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn two_sites_ignore_anisotropy(j in 0.05f64..5.0, delta in -3.0f64..3.0, t in 0.0f64..20.0) {
        let ecd = CouplingDistribution::new(vec![j]).unwrap();
        let isotropic = transferred_population(&ChainParameters::new(2, 0.0).unwrap(), &ecd, t).unwrap();
        let p = transferred_population(&ChainParameters::new(2, delta).unwrap(), &ecd, t).unwrap();
        prop_assert!((p - isotropic).abs() <= 1e-12);
    }

    #[test]
    fn mirror_chains_have_mirror_end_weights(
        n in 2usize..=30,
        delta in anisotropy(),
        seed_values in prop::collection::vec(0.01f64..6.0, 15),
    ) {
        let free = &seed_values[..n / 2];
        let ecd = CouplingDistribution::centro_symmetric(free, n).unwrap();
        let params = ChainParameters::new(n, delta).unwrap();
        let spectrum = chain_spectrum(&params, &ecd).unwrap();
        for k in 0..n {
            prop_assert!((spectrum.component(0, k).abs() - spectrum.component(n - 1, k).abs()).abs() <= 1e-8);
        }
    }

    #[test]
    fn endpoint_route_agrees_with_full_decomposition((params, ecd) in chain(), t in 0.0f64..60.0) {
        let full = chain_spectrum(&params, &ecd).unwrap().transferred_population(t);
        let fast = transferred_population(&params, &ecd, t).unwrap();
        prop_assert!((full - fast).abs() <= 1e-10);
    }

    #[test]
    fn centro_embedding_round_trips(n in 2usize..=40, values in prop::collection::vec(0.0f64..10.0, 20)) {
        let free = &values[..n / 2];
        let ecd = CouplingDistribution::centro_symmetric(free, n).unwrap();
        prop_assert_eq!(ecd.free_values(), free);
        let couplings = ecd.couplings();
        prop_assert!(couplings.iter().eq(couplings.iter().rev()));
        let h = project_hamiltonian(&ChainParameters::new(n, 1.0).unwrap(), &ecd).unwrap();
        prop_assert!(h.diagonal.iter().eq(h.diagonal.iter().rev()));
    }

    #[test]
    fn worst_case_never_exceeds_mean(
        (params, ecd) in chain(),
        amplitude in 0.0f64..0.3,
        seed in any::<u64>(),
        gaussian in any::<bool>(),
    ) {
        let spec = DisorderSpec {
            noise_law: if gaussian { NoiseLaw::Gaussian } else { NoiseLaw::Uniform },
            ..DisorderSpec::new(amplitude, 50, seed)
        };
        let stats = disorder_statistics(&params, &ecd, params.n_sites() as f64, &spec).unwrap();
        prop_assert!(stats.minimum <= stats.mean);
        prop_assert!(stats.std_dev >= 0.0);
        prop_assert!((0.0..=1.0).contains(&stats.minimum) && stats.mean <= 1.0);
    }

    #[test]
    fn divergence_is_symmetric((p, q) in (2usize..12).prop_flat_map(|len| (probability_vector(len), probability_vector(len)))) {
        let forward = renyi_half_divergence(&p, &q).unwrap();
        let backward = renyi_half_divergence(&q, &p).unwrap();
        prop_assert!(forward >= 0.0);
        prop_assert!(forward == backward || (forward - backward).abs() <= 1e-15 * forward.abs().max(1.0));
    }

    #[test]
    fn fit_residual_ignores_point_order(
        a in 0.5f64..3.0,
        b in 1.0f64..15.0,
        c in 0.2f64..2.0,
        noise in prop::collection::vec(-0.05f64..0.05, 6),
        rotation in 0usize..6,
    ) {
        let n = 20;
        let points: Vec<(f64, f64)> = noise
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let t = ((i + 1) * n) as f64;
                (t, a + b * (-c * t / n as f64).exp() + e)
            })
            .collect();
        let mut shuffled = points.clone();
        shuffled.rotate_left(rotation);
        shuffled.reverse();
        let first = fit_exponential(&points, n).unwrap();
        let second = fit_exponential(&shuffled, n).unwrap();
        prop_assert_eq!(first.rms_residual.to_bits(), second.rms_residual.to_bits());
    }
}
