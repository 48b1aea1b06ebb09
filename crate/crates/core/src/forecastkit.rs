//! One-step-ahead predictive simulation, rolling-window evaluation, and the
//! point (RMSE) and density (CRPS) scores with fixed-vs-adaptive ratio tables.

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::inference::{run_gibbs, summarize, NormalWishartPrior, PosteriorDraws, SamplerConfig};
use crate::randmat::{mix_tags, sample_mvn};
use crate::varcore::{build_lag_design, devectorize, VarDataset};

const WINDOW_SAMPLER_SALT: u64 = 0x57_49_4e;
const WINDOW_PREDICT_SALT: u64 = 0x50_52_44;

/// Predictive draws and the realized outcome for one forecast origin.
#[derive(Debug, Clone)]
pub struct ForecastRecord {
    pub window_index: usize,
    /// Time index of the forecast origin (the forecast targets origin + 1).
    pub origin_time: usize,
    /// S x m posterior predictive draws of the next observation.
    pub predictive_draws: DMatrix<f64>,
    pub realized: DVector<f64>,
    /// Mean of the predictive draws, used as the point forecast.
    pub point_forecast: DVector<f64>,
}

/// Fixed-length estimation window advanced one period at a time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RollingPlan {
    pub window_length: usize,
}

impl RollingPlan {
    pub fn new(window_length: usize) -> Self {
        RollingPlan { window_length }
    }
}

/// Composition sampling from the posterior predictive: each retained
/// (alpha, Sigma) draw contributes exactly one simulated next observation.
/// `last_obs` holds the final p observations, most recent first.
pub fn predictive_draws<R: rand::Rng + ?Sized>(
    draws: &PosteriorDraws,
    last_obs: &[DVector<f64>],
    n_draws: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if draws.is_empty() {
        return Err(Error::domain("no posterior draws available"));
    }
    if n_draws == 0 || n_draws > draws.len() {
        return Err(Error::domain(format!(
            "requested {n_draws} predictive draws but {} posterior draws are retained",
            draws.len()
        )));
    }
    if last_obs.len() != draws.p {
        return Err(Error::dim(format!(
            "need the last {} observations, got {}",
            draws.p,
            last_obs.len()
        )));
    }
    let m = draws.m;
    let mut x_new = RowDVector::zeros(draws.k);
    let mut col = 0;
    if draws.intercept {
        x_new[0] = 1.0;
        col = 1;
    }
    for lag in last_obs {
        if lag.len() != m {
            return Err(Error::dim("lagged observation has wrong dimension"));
        }
        for j in 0..m {
            x_new[col] = lag[j];
            col += 1;
        }
    }
    let mut out = DMatrix::zeros(n_draws, m);
    for s in 0..n_draws {
        let a = devectorize(&draws.alpha_draws[s], draws.k, m)?;
        let mean = (&x_new * a).transpose();
        let draw = sample_mvn(&mean, &draws.sigma_draws[s], rng)?;
        out.row_mut(s).copy_from(&draw.transpose());
    }
    Ok(out)
}

/// Root mean squared one-step error of the point forecasts for one variable.
pub fn rmse(records: &[ForecastRecord], variable: usize) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::domain("no forecast records"));
    }
    let mut acc = 0.0;
    for r in records {
        if variable >= r.realized.len() {
            return Err(Error::dim(format!(
                "variable index {variable} out of range for {} variables",
                r.realized.len()
            )));
        }
        let e = r.point_forecast[variable] - r.realized[variable];
        acc += e * e;
    }
    Ok((acc / records.len() as f64).sqrt())
}

/// Monte Carlo CRPS with a deterministic circular pairing for the
/// draw-vs-draw term: E|Y - y| - 0.5 E|Y - Y'|, with Y' taken as the next
/// draw in circular order. Distinct draw indices are independent, so the
/// pairing is unbiased while keeping runs reproducible. Lower is better.
pub fn crps(record: &ForecastRecord, variable: usize) -> Result<f64> {
    let s = record.predictive_draws.nrows();
    if s < 2 {
        return Err(Error::domain("CRPS needs at least two predictive draws"));
    }
    if variable >= record.realized.len() {
        return Err(Error::dim(format!("variable index {variable} out of range")));
    }
    let y = record.realized[variable];
    let col = record.predictive_draws.column(variable);
    let mut first = 0.0;
    let mut second = 0.0;
    for i in 0..s {
        first += (col[i] - y).abs();
        second += (col[i] - col[(i + 1) % s]).abs();
    }
    // nonnegative by the triangle inequality; floor out float rounding
    Ok((first / s as f64 - 0.5 * second / s as f64).max(0.0))
}

/// CRPS with the exhaustive O(S^2) draw-vs-draw term. This variant equals the
/// exact integral of (F(z) - 1{y <= z})^2 for the empirical predictive
/// distribution; used to validate the circular estimator.
pub fn crps_exhaustive(record: &ForecastRecord, variable: usize) -> Result<f64> {
    let s = record.predictive_draws.nrows();
    if s < 2 {
        return Err(Error::domain("CRPS needs at least two predictive draws"));
    }
    let y = record.realized[variable];
    let col = record.predictive_draws.column(variable);
    let mut first = 0.0;
    let mut second = 0.0;
    for i in 0..s {
        first += (col[i] - y).abs();
        for j in 0..s {
            second += (col[i] - col[j]).abs();
        }
    }
    Ok((first / s as f64 - 0.5 * second / (s * s) as f64).max(0.0))
}

/// Rolling posterior of the degrees of freedom for one window.
#[derive(Debug, Clone, Serialize)]
pub struct NuWindowEstimate {
    pub window_index: usize,
    pub origin_time: usize,
    pub nu_mean: f64,
    pub hpd_low: usize,
    pub hpd_high: usize,
}

/// A window whose sampler failed; excluded from scoring, never silent.
#[derive(Debug, Clone, Serialize)]
pub struct SkippedWindow {
    pub window_index: usize,
    pub message: String,
}

#[derive(Debug)]
pub struct RollingOutcome {
    pub records: Vec<ForecastRecord>,
    /// One entry per successful window under the adaptive scheme, empty
    /// otherwise.
    pub nu_track: Vec<NuWindowEstimate>,
    pub skipped: Vec<SkippedWindow>,
}

/// Fit-and-forecast over rolling windows. Window w covers observations
/// [w, w + R) and forecasts observation w + R; the last origin is the
/// penultimate observation, giving T - R records. Windows are independent
/// and fitted concurrently, each on its own derived RNG stream, so results
/// do not depend on the worker count.
pub fn rolling_forecast(
    data: &VarDataset,
    p: usize,
    intercept: bool,
    prior: &NormalWishartPrior,
    plan: RollingPlan,
    config: &SamplerConfig,
    threads: usize,
) -> Result<RollingOutcome> {
    config.validate()?;
    let r = plan.window_length;
    if r < p + 2 {
        return Err(Error::domain(format!(
            "window length {r} too short for lag order {p}"
        )));
    }
    if data.t_len() < r + 1 {
        return Err(Error::domain(format!(
            "series of length {} leaves no out-of-sample point after a window of {r}",
            data.t_len()
        )));
    }
    let n_windows = data.t_len() - r;
    type WindowResult = std::result::Result<(ForecastRecord, Option<NuWindowEstimate>), (usize, String)>;
    let results: Vec<WindowResult> = map_indexed(n_windows, threads, |w| {
        run_window(data, p, intercept, prior, r, config, w).map_err(|e| (w, e.to_string()))
    });
    let mut records = Vec::new();
    let mut nu_track = Vec::new();
    let mut skipped = Vec::new();
    for item in results {
        match item {
            Ok((record, nu)) => {
                records.push(record);
                if let Some(nu) = nu {
                    nu_track.push(nu);
                }
            }
            Err((window_index, message)) => skipped.push(SkippedWindow {
                window_index,
                message,
            }),
        }
    }
    Ok(RollingOutcome {
        records,
        nu_track,
        skipped,
    })
}

fn run_window(
    data: &VarDataset,
    p: usize,
    intercept: bool,
    prior: &NormalWishartPrior,
    r: usize,
    config: &SamplerConfig,
    w: usize,
) -> Result<(ForecastRecord, Option<NuWindowEstimate>)> {
    let origin = w + r - 1;
    let window = data.slice_rows(w, w + r)?;
    let design = build_lag_design(&window, p, intercept)?;
    let mut window_config = *config;
    window_config.rng = config.rng.derive(mix_tags(&[WINDOW_SAMPLER_SALT, w as u64]));
    let draws = run_gibbs(&design, prior, &window_config)?;
    let last_obs: Vec<DVector<f64>> = (0..p).map(|lag| data.row(origin - lag)).collect();
    let mut pred_rng = config
        .rng
        .derive(mix_tags(&[WINDOW_PREDICT_SALT, w as u64]))
        .rng();
    let n_draws = draws.len();
    let predictive = predictive_draws(&draws, &last_obs, n_draws, &mut pred_rng)?;
    let m = data.n_vars();
    let point = DVector::from_iterator(m, (0..m).map(|j| predictive.column(j).mean()));
    let nu = if draws.nu_draws.is_empty() {
        None
    } else {
        let summary = summarize(&draws)?;
        let (lo, hi) = summary.nu_hpd.expect("adaptive scheme has an HPD set");
        Some(NuWindowEstimate {
            window_index: w,
            origin_time: origin,
            nu_mean: summary.nu_mean.expect("adaptive scheme has a mean"),
            hpd_low: lo,
            hpd_high: hi,
        })
    };
    Ok((
        ForecastRecord {
            window_index: w,
            origin_time: origin,
            predictive_draws: predictive,
            realized: data.row(origin + 1),
            point_forecast: point,
        },
        nu,
    ))
}

/// Per-variable scores under both priors and their ratios. A ratio below one
/// favors the adaptive scheme.
#[derive(Debug, Clone, Serialize)]
pub struct MetricRow {
    pub variable: String,
    pub rmse_fixed: f64,
    pub rmse_loss: f64,
    pub rmse_ratio: f64,
    pub crps_fixed: f64,
    pub crps_loss: f64,
    pub crps_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("variable,rmse_fixed,rmse_loss,rmse_ratio,crps_fixed,crps_loss,crps_ratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.variable,
                crate::g17(r.rmse_fixed),
                crate::g17(r.rmse_loss),
                crate::g17(r.rmse_ratio),
                crate::g17(r.crps_fixed),
                crate::g17(r.crps_loss),
                crate::g17(r.crps_ratio)
            ));
        }
        out
    }
}

/// Drop records whose window failed under either prior, keeping the pairing
/// intact for ratio comparability.
pub fn align_paired_records(
    fixed: Vec<ForecastRecord>,
    loss: Vec<ForecastRecord>,
) -> (Vec<ForecastRecord>, Vec<ForecastRecord>) {
    use std::collections::BTreeSet;
    let fixed_ids: BTreeSet<usize> = fixed.iter().map(|r| r.window_index).collect();
    let loss_ids: BTreeSet<usize> = loss.iter().map(|r| r.window_index).collect();
    let common: BTreeSet<usize> = fixed_ids.intersection(&loss_ids).copied().collect();
    (
        fixed
            .into_iter()
            .filter(|r| common.contains(&r.window_index))
            .collect(),
        loss.into_iter()
            .filter(|r| common.contains(&r.window_index))
            .collect(),
    )
}

/// Score both record sets variable by variable. The inputs must cover the
/// same windows in the same order.
pub fn compare_priors(
    fixed: &[ForecastRecord],
    loss: &[ForecastRecord],
    variable_names: &[String],
) -> Result<MetricReport> {
    if fixed.len() != loss.len() || fixed.is_empty() {
        return Err(Error::dim(format!(
            "window coverage differs: {} fixed vs {} adaptive records",
            fixed.len(),
            loss.len()
        )));
    }
    for (a, b) in fixed.iter().zip(loss) {
        if a.window_index != b.window_index {
            return Err(Error::dim(format!(
                "window pairing broken at indices {} vs {}",
                a.window_index, b.window_index
            )));
        }
    }
    let m = fixed[0].realized.len();
    if variable_names.len() != m {
        return Err(Error::dim(format!(
            "{} variable names for {} variables",
            variable_names.len(),
            m
        )));
    }
    let mean_crps = |records: &[ForecastRecord], v: usize| -> Result<f64> {
        let mut acc = 0.0;
        for r in records {
            acc += crps(r, v)?;
        }
        Ok(acc / records.len() as f64)
    };
    let mut rows = Vec::with_capacity(m);
    for (v, name) in variable_names.iter().enumerate() {
        let rmse_fixed = rmse(fixed, v)?;
        let rmse_loss = rmse(loss, v)?;
        let crps_fixed = mean_crps(fixed, v)?;
        let crps_loss = mean_crps(loss, v)?;
        rows.push(MetricRow {
            variable: name.clone(),
            rmse_fixed,
            rmse_loss,
            rmse_ratio: rmse_loss / rmse_fixed,
            crps_fixed,
            crps_loss,
            crps_ratio: crps_loss / crps_fixed,
        });
    }
    Ok(MetricReport { rows })
}
