//! Property tests for invariants that hold over whole input ranges rather
//! than fixtures.

use bvar_core::forecastkit::{crps, ForecastRecord};
use bvar_core::randmat::{sample_wishart, wishart_log_density, RngStream, SpdMatrix};
use bvar_core::special::digamma;
use bvar_core::varcore::{devectorize, vectorize};
use bvar_oracles::gamma_log_pdf;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

proptest! {
    #[test]
    fn digamma_recurrence(x in 0.1f64..100.0) {
        let lhs = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
        prop_assert!((lhs - 1.0 / x).abs() < 1e-10);
    }

    #[test]
    fn digamma_dominates_log_lower_bound(x in 0.5001f64..500.0) {
        prop_assert!((x - 0.5).ln() < digamma(x).unwrap());
    }

    #[test]
    fn vectorize_round_trips(k in 1usize..6, m in 1usize..6, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0).rng();
        use rand::Rng;
        let a = DMatrix::from_fn(k, m, |_, _| rng.random::<f64>() - 0.5);
        let v = vectorize(&a);
        prop_assert_eq!(v.len(), k * m);
        let back = devectorize(&v, k, m).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn scalar_wishart_density_equals_gamma(
        nu in 1usize..12,
        x in 0.05f64..30.0,
        s in 0.2f64..4.0,
    ) {
        let got = wishart_log_density(
            &SpdMatrix::scaled_identity(1, x).unwrap(),
            nu,
            &SpdMatrix::scaled_identity(1, s).unwrap(),
        )
        .unwrap();
        let want = gamma_log_pdf(x, nu as f64 / 2.0, 2.0 * s);
        prop_assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn wishart_draws_stay_spd(seed in any::<u64>(), nu_extra in 0usize..20) {
        let scale = SpdMatrix::identity(3);
        let mut rng = RngStream::new(seed, 1).rng();
        let draw = sample_wishart(3 + nu_extra, &scale, &mut rng).unwrap();
        prop_assert!(draw.cholesky().is_ok());
    }

    #[test]
    fn crps_is_nonnegative(draws in prop::collection::vec(-50.0f64..50.0, 2..40), y in -50.0f64..50.0) {
        let s = draws.len();
        let point = draws.iter().sum::<f64>() / s as f64;
        let record = ForecastRecord {
            window_index: 0,
            origin_time: 0,
            predictive_draws: DMatrix::from_column_slice(s, 1, &draws),
            realized: DVector::from_vec(vec![y]),
            point_forecast: DVector::from_vec(vec![point]),
        };
        prop_assert!(crps(&record, 0).unwrap() >= 0.0);
    }
}
