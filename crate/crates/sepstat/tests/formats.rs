//! Round-trip properties of the file formats and number formatting.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

use sepstat::config::parse_p_grid;
use sepstat::csv::num;
use sepstat::io::{parse_density_matrix, parse_stiefel_point, DensityMatrixJson, StiefelPointJson};
use sepstat_core::ensembles::haar_stiefel;
use sepstat_core::rng::stream_rng;
use sepstat_core::state::random_density_matrix;

fn config() -> Config {
    Config {
        cases: 200,
        rng_seed: RngSeed::Fixed(17),
        failure_persistence: None,
        ..Config::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn numbers_round_trip(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let s = num(x);
        prop_assert!(!s.contains('e') && !s.contains('E'));
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn density_matrices_round_trip(seed in any::<u64>(), m in 1usize..=3, n in 1usize..=3) {
        let rho = random_density_matrix(m, n, &mut stream_rng(seed, 0));
        let text = serde_json::to_string(&DensityMatrixJson::from_state(&rho)).unwrap();
        prop_assert_eq!(parse_density_matrix(&text).unwrap(), rho);
    }

    #[test]
    fn stiefel_points_round_trip(seed in any::<u64>(), r in 1usize..=4, extra in 0usize..=6) {
        let z = haar_stiefel(r + extra, r, &mut stream_rng(seed, 0)).unwrap();
        let text = serde_json::to_string(&StiefelPointJson::from_point(&z)).unwrap();
        prop_assert_eq!(parse_stiefel_point(&text).unwrap(), z);
    }

    #[test]
    fn p_grids_are_inclusive(a in 0.0f64..0.5, k in 1usize..100, steps in 0usize..60) {
        let step = k as f64 / 1000.0;
        let b = a + steps as f64 * step;
        let g = parse_p_grid(&format!("{a}:{step}:{b}")).unwrap();
        prop_assert_eq!(g.len(), steps + 1);
        prop_assert!((g[steps] - b).abs() < 1e-9);
    }
}
