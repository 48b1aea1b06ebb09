//! Long-running check of the study's central empirical pattern: the farther
//! the generating degrees of freedom sit from the conventional m + 1 pin,
//! the larger the adaptive scheme's accuracy advantage.
//!
//! Several minutes of compute; excluded from the default run:
//! `cargo test -p bvar-core --test study_effect -- --ignored --nocapture`

use bvar_core::inference::SamplerConfig;
use bvar_core::mcstudy::{run_study, RmadSample, Scheme, StudyGrid};
use bvar_core::randmat::RngStream;
use bvar_oracles::median;

fn median_advantage(samples: &[RmadSample], m: usize, t_len: usize, nu_true: usize) -> f64 {
    let pick = |scheme: Scheme| -> Vec<f64> {
        samples
            .iter()
            .filter(|s| s.m == m && s.t_len == t_len && s.nu_true == nu_true && s.scheme == scheme)
            .map(|s| s.rmad_sigma)
            .collect()
    };
    let fixed = pick(Scheme::Fixed);
    let loss = pick(Scheme::LossBased);
    assert_eq!(fixed.len(), 50);
    median(&fixed) - median(&loss)
}

#[test]
#[ignore = "several minutes: full desk grid at 50 replications"]
fn advantage_grows_with_distance_from_the_conventional_pin() {
    let grid = StudyGrid::desk();
    let mut config = SamplerConfig::new(RngStream::new(424_242, 0));
    config.iterations = 2000;
    config.burn_in = 500;
    let samples = run_study(&grid, &config, 0).unwrap();

    let nu_of = |m: usize| -> Vec<usize> {
        match m {
            5 => vec![5, 10, 15],
            10 => vec![10, 15, 20],
            _ => unreachable!(),
        }
    };
    for m in [5usize, 10] {
        for t_len in [30usize, 100] {
            let advantages: Vec<f64> = nu_of(m)
                .iter()
                .map(|&nu| median_advantage(&samples, m, t_len, nu))
                .collect();
            println!("m = {m}, T = {t_len}: advantages (fixed - loss) = {advantages:?}");
            // each nu sequence may carry one Monte Carlo inversion at this
            // replication count
            let inversions = advantages
                .windows(2)
                .filter(|pair| pair[1] < pair[0])
                .count();
            assert!(
                inversions <= 1,
                "m = {m}, T = {t_len}: {inversions} inversions in {advantages:?}"
            );
        }
    }
}
