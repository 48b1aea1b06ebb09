//! Replicated simulation comparison of the fixed and adaptive
//! degrees-of-freedom schemes, scored by root mean absolute deviation of the
//! posterior means from the generating parameters.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::inference::{
    run_gibbs, summarize, NormalWishartPrior, NuScheme, SamplerConfig,
};
use crate::randmat::{mix_tags, SpdMatrix};
use crate::varcore::{build_lag_design, devectorize, diagonal_coeffs, simulate_var, SigmaSource};

const DATA_SALT: u64 = 0x64_61_74;
const FIXED_SALT: u64 = 0x66_69_78;
const LOSS_SALT: u64 = 0x6c_6f_73;

/// Scale matrix handed to the inverse-Wishart covariance generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GenScalePolicy {
    /// Identity scale for every cell: the generated precision is a draw from
    /// the same Wishart family the fitted prior assumes (scale I), so the
    /// generating degrees of freedom are recoverable from the data.
    PriorMatched,
    /// (nu - m - 1) I so that E[Sigma] = I for nu > m + 1, keeping the error
    /// scale comparable across nu; falls back to I where the mean does not
    /// exist (nu <= m + 1).
    UnitMean,
}

fn generation_scale(policy: GenScalePolicy, m: usize, nu_true: usize) -> SpdMatrix {
    match policy {
        GenScalePolicy::PriorMatched => SpdMatrix::identity(m),
        GenScalePolicy::UnitMean => {
            if nu_true > m + 1 {
                SpdMatrix::scaled_identity(m, (nu_true - m - 1) as f64)
                    .expect("positive scalar by construction")
            } else {
                SpdMatrix::identity(m)
            }
        }
    }
}

/// One (dimension, sample size, generating degrees of freedom) combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StudyCell {
    pub m: usize,
    pub t_len: usize,
    pub nu_true: usize,
}

/// Full study layout.
#[derive(Debug, Clone, Serialize)]
pub struct StudyGrid {
    pub cells: Vec<StudyCell>,
    pub replications: usize,
    pub p: usize,
    /// Diagonal of the single nonzero lag matrix used by the generator.
    pub ar_coeff: f64,
    pub scale_policy: GenScalePolicy,
}

impl StudyGrid {
    pub fn from_cells(cells: Vec<StudyCell>, replications: usize) -> Result<Self> {
        if cells.is_empty() || replications == 0 {
            return Err(Error::domain("study grid needs cells and replications"));
        }
        for c in &cells {
            if c.nu_true < c.m {
                return Err(Error::domain(format!(
                    "cell (m = {}, nu_true = {}) has nu_true below m",
                    c.m, c.nu_true
                )));
            }
        }
        Ok(StudyGrid {
            cells,
            replications,
            p: 1,
            ar_coeff: 0.5,
            scale_policy: GenScalePolicy::PriorMatched,
        })
    }

    /// The full published layout: m in {5, 10, 20} crossed with T in
    /// {30, 100}, generating nu per dimension, 250 replications.
    pub fn full() -> Self {
        let mut cells = Vec::new();
        for (m, nus) in [(5usize, [5usize, 10, 15]), (10, [10, 15, 20]), (20, [20, 24, 26])] {
            for t_len in [30usize, 100] {
                for nu_true in nus {
                    cells.push(StudyCell { m, t_len, nu_true });
                }
            }
        }
        StudyGrid::from_cells(cells, 250).expect("static grid is valid")
    }

    /// CI-sized preset: m in {5, 10}, 50 replications.
    pub fn desk() -> Self {
        let mut cells = Vec::new();
        for (m, nus) in [(5usize, [5usize, 10, 15]), (10, [10, 15, 20])] {
            for t_len in [30usize, 100] {
                for nu_true in nus {
                    cells.push(StudyCell { m, t_len, nu_true });
                }
            }
        }
        StudyGrid::from_cells(cells, 50).expect("static grid is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Fixed,
    LossBased,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Fixed => "fixed",
            Scheme::LossBased => "loss-based",
        }
    }
}

/// Accuracy of one fitted scheme on one replication.
#[derive(Debug, Clone, Serialize)]
pub struct RmadSample {
    pub m: usize,
    pub t_len: usize,
    pub nu_true: usize,
    pub scheme: Scheme,
    pub replication: usize,
    pub rmad_sigma: f64,
    pub rmad_coeffs: f64,
}

/// Square root of the mean absolute deviation between two equally shaped
/// matrices (the mean runs over all N entries; no squaring inside).
pub fn rmad(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    if estimate.shape() != truth.shape() {
        return Err(Error::dim(format!(
            "estimate is {:?}, truth is {:?}",
            estimate.shape(),
            truth.shape()
        )));
    }
    let n = (estimate.nrows() * estimate.ncols()) as f64;
    let total: f64 = estimate
        .iter()
        .zip(truth.iter())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok((total / n).sqrt())
}

/// Bounded retries per replication before giving up on a cell.
const MAX_ATTEMPTS: u64 = 3;

/// Run the whole grid. Each replication simulates one dataset and fits both
/// schemes on it (the pair shares the dataset, so the accuracy difference is
/// attributable to the prior alone). Replications execute concurrently with
/// per-item derived streams; output order and content are independent of the
/// worker count.
pub fn run_study(
    grid: &StudyGrid,
    config: &SamplerConfig,
    threads: usize,
) -> Result<Vec<RmadSample>> {
    config.validate()?;
    let n_items = grid.cells.len() * grid.replications;
    let results: Vec<Result<[RmadSample; 2]>> = map_indexed(n_items, threads, |item| {
        let cell = grid.cells[item / grid.replications];
        let replication = item % grid.replications;
        run_replication(grid, config, cell, replication)
    });
    let mut samples = Vec::with_capacity(2 * n_items);
    for r in results {
        samples.extend(r?);
    }
    Ok(samples)
}

fn run_replication(
    grid: &StudyGrid,
    config: &SamplerConfig,
    cell: StudyCell,
    replication: usize,
) -> Result<[RmadSample; 2]> {
    let mut last_err = None;
    for attempt in 0..MAX_ATTEMPTS {
        match try_replication(grid, config, cell, replication, attempt) {
            Ok(pair) => return Ok(pair),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt ran"))
}

fn try_replication(
    grid: &StudyGrid,
    config: &SamplerConfig,
    cell: StudyCell,
    replication: usize,
    attempt: u64,
) -> Result<[RmadSample; 2]> {
    let tags = |salt: u64| {
        mix_tags(&[
            salt,
            cell.m as u64,
            cell.t_len as u64,
            cell.nu_true as u64,
            replication as u64,
            attempt,
        ])
    };
    let coeffs = diagonal_coeffs(cell.m, grid.p, grid.ar_coeff);
    let source = SigmaSource::InverseWishart {
        nu: cell.nu_true,
        scale: generation_scale(grid.scale_policy, cell.m, cell.nu_true),
    };
    let mut data_rng = config.rng.derive(tags(DATA_SALT)).rng();
    let (data, truth) = simulate_var(cell.t_len, &coeffs, &source, &mut data_rng)?;
    let design = build_lag_design(&data, grid.p, false)?;

    let fit = |scheme: Scheme, salt: u64| -> Result<RmadSample> {
        let nu_scheme = match scheme {
            Scheme::Fixed => NuScheme::Fixed(cell.m + 1),
            Scheme::LossBased => NuScheme::LossBased,
        };
        let prior = NormalWishartPrior::default_for(design.k(), cell.m, nu_scheme)?;
        let mut run_config = *config;
        run_config.rng = config.rng.derive(tags(salt));
        let draws = run_gibbs(&design, &prior, &run_config)?;
        let summary = summarize(&draws)?;
        let a_mean = devectorize(&summary.alpha_mean, design.k(), cell.m)?;
        Ok(RmadSample {
            m: cell.m,
            t_len: cell.t_len,
            nu_true: cell.nu_true,
            scheme,
            replication,
            rmad_sigma: rmad(&summary.sigma_mean, truth.sigma.as_matrix())?,
            rmad_coeffs: rmad(&a_mean, &truth.a)?,
        })
    };

    Ok([fit(Scheme::Fixed, FIXED_SALT)?, fit(Scheme::LossBased, LOSS_SALT)?])
}

/// Long-format CSV, one row per (scheme, replication), ready for grouped
/// boxplots.
pub fn boxplot_csv(samples: &[RmadSample]) -> String {
    let mut out = String::from("m,T,nu_true,scheme,replication,rmad_sigma,rmad_coeffs\n");
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.m,
            s.t_len,
            s.nu_true,
            s.scheme.label(),
            s.replication,
            crate::g17(s.rmad_sigma),
            crate::g17(s.rmad_coeffs)
        ));
    }
    out
}

pub fn export_boxplot_data(samples: &[RmadSample], path: &Path) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::domain("no samples to export"));
    }
    let io_err = |source: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(boxplot_csv(samples).as_bytes()).map_err(io_err)?;
    Ok(())
}
