//! The four workflows behind the subcommands: synthetic data generation,
//! single-model fitting, paired rolling forecasts, and the replication study.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde_json::json;

use bvar_core::forecastkit::{
    align_paired_records, compare_priors, rolling_forecast, RollingOutcome, RollingPlan,
};
use bvar_core::g17;
use bvar_core::inference::{
    run_gibbs, summarize, NormalWishartPrior, NuScheme, SamplerConfig,
};
use bvar_core::mcstudy::{export_boxplot_data, run_study, GenScalePolicy, StudyCell, StudyGrid};
use bvar_core::randmat::{RngStream, SpdMatrix};
use bvar_core::varcore::{
    build_lag_design, diagonal_coeffs, simulate_var, SigmaSource, VarDataset,
};

use crate::config::{resolve, resolve_required, FileConfig, ResolvedConfig};
use crate::error::{CliError, CliResult};
use crate::ingest::{ingest_csv, TransformSpec};
use crate::{FitArgs, ForecastArgs, SimulateArgs, StudyArgs};

fn ensure_out_dir(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::config(format!("cannot create output directory {}: {e}", out.display())))
}

fn write_text(path: &Path, body: &str) -> CliResult<()> {
    std::fs::write(path, body).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    write_text(path, &(body + "\n"))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn dataset_csv(data: &VarDataset) -> String {
    let mut out = data.variable_names().join(",");
    out.push('\n');
    for t in 0..data.t_len() {
        let row: Vec<String> = (0..data.n_vars())
            .map(|j| g17(data.observations()[(t, j)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn parse_nu_scheme(spec: &str, m: usize) -> CliResult<NuScheme> {
    let trimmed = spec.trim();
    if trimmed == "loss" {
        return Ok(NuScheme::LossBased);
    }
    if let Some(rest) = trimmed.strip_prefix("fixed:") {
        let nu: usize = rest
            .parse()
            .map_err(|_| CliError::config(format!("cannot parse degrees of freedom in `{spec}`")))?;
        if nu < m {
            return Err(CliError::config(format!(
                "fixed degrees of freedom {nu} below dimension {m}"
            )));
        }
        return Ok(NuScheme::Fixed(nu));
    }
    Err(CliError::config(format!(
        "nu scheme must be `loss` or `fixed:<int>`, got `{spec}`"
    )))
}

fn parse_gen_scale(spec: &str) -> CliResult<GenScalePolicy> {
    match spec.trim() {
        "identity" => Ok(GenScalePolicy::PriorMatched),
        "unit-mean" => Ok(GenScalePolicy::UnitMean),
        other => Err(CliError::config(format!(
            "generation scale must be `identity` or `unit-mean`, got `{other}`"
        ))),
    }
}

struct Common {
    seed: u64,
    out: PathBuf,
    threads: usize,
}

fn resolve_common(
    seed: Option<u64>,
    out: &Option<PathBuf>,
    threads: Option<usize>,
    file: &FileConfig,
    echo: &mut ResolvedConfig,
) -> CliResult<Common> {
    let seed = resolve(seed, file, "seed", 42u64)?;
    let threads = resolve(threads, file, "threads", 0usize)?;
    let out = match out {
        Some(o) => o.clone(),
        None => PathBuf::from(
            file.get::<String>("out")?
                .ok_or_else(|| CliError::config("`--out <dir>` must be set (flag or config)"))?,
        ),
    };
    echo.push("seed", seed);
    echo.push("threads", threads);
    echo.push("out", out.display());
    Ok(Common { seed, out, threads })
}

#[allow(clippy::too_many_arguments)]
fn sampler_from(
    file: &FileConfig,
    echo: &mut ResolvedConfig,
    seed: u64,
    iterations: Option<usize>,
    burn_in: Option<usize>,
    thin: Option<usize>,
    mh_step: Option<usize>,
    default_iterations: usize,
    default_burn_in: usize,
) -> CliResult<SamplerConfig> {
    let mut config = SamplerConfig::new(RngStream::new(seed, 0));
    config.iterations = resolve(iterations, file, "iterations", default_iterations)?;
    config.burn_in = resolve(burn_in, file, "burn_in", default_burn_in)?;
    config.thin = resolve(thin, file, "thin", 1usize)?;
    config.mh_step = resolve(mh_step, file, "mh_step", 3usize)?;
    config
        .validate()
        .map_err(|e| CliError::config(e.to_string()))?;
    echo.push("iterations", config.iterations);
    echo.push("burn_in", config.burn_in);
    echo.push("thin", config.thin);
    echo.push("mh_step", config.mh_step);
    Ok(config)
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let mut echo = ResolvedConfig::default();
    echo.push("command", "simulate");
    let common = resolve_common(args.seed, &args.out, None, &file, &mut echo)?;
    let m = resolve_required(args.m, &file, "m")?;
    let t_len = resolve_required(args.t, &file, "t")?;
    let p = resolve(args.p, &file, "p", 1usize)?;
    let ar_coeff = resolve(args.ar_coeff, &file, "ar_coeff", 0.5f64)?;
    let nu_true = match args.nu_true {
        Some(v) => Some(v),
        None => file.get::<usize>("nu_true")?,
    };
    let gen_scale_raw = resolve(args.gen_scale.clone(), &file, "gen_scale", "identity".to_string())?;
    let gen_scale = parse_gen_scale(&gen_scale_raw)?;
    if m == 0 || t_len < p + 2 {
        return Err(CliError::config(format!(
            "need m >= 1 and t >= p + 2, got m = {m}, t = {t_len}, p = {p}"
        )));
    }
    echo.push("m", m);
    echo.push("t", t_len);
    echo.push("p", p);
    echo.push("ar_coeff", ar_coeff);
    echo.push(
        "nu_true",
        nu_true.map_or("none".to_string(), |v| v.to_string()),
    );
    echo.push("gen_scale", &gen_scale_raw);
    file.reject_unknown()?;

    ensure_out_dir(&common.out)?;
    echo.write_to(&common.out)?;

    let source = match nu_true {
        None => SigmaSource::Explicit(SpdMatrix::identity(m)),
        Some(nu) => {
            if nu < m {
                return Err(CliError::config(format!(
                    "nu_true = {nu} below dimension m = {m}"
                )));
            }
            let scale = match gen_scale {
                GenScalePolicy::PriorMatched => SpdMatrix::identity(m),
                GenScalePolicy::UnitMean if nu > m + 1 => {
                    SpdMatrix::scaled_identity(m, (nu - m - 1) as f64)
                        .map_err(|e| CliError::runtime(e.to_string()))?
                }
                GenScalePolicy::UnitMean => SpdMatrix::identity(m),
            };
            SigmaSource::InverseWishart { nu, scale }
        }
    };
    let coeffs = diagonal_coeffs(m, p, ar_coeff);
    let mut rng = RngStream::new(common.seed, 0).rng();
    let (data, truth) =
        simulate_var(t_len, &coeffs, &source, &mut rng).map_err(|e| CliError::runtime(e.to_string()))?;

    write_text(&common.out.join("data.csv"), &dataset_csv(&data))?;
    let truth_json = json!({
        "command": "simulate",
        "seed": common.seed,
        "m": m,
        "t": t_len,
        "p": p,
        "ar_coeff": ar_coeff,
        "nu_true": nu_true,
        "gen_scale": gen_scale_raw,
        "coefficients_stacked": matrix_rows(&truth.a),
        "sigma": matrix_rows(truth.sigma.as_matrix()),
    });
    write_json(&common.out.join("truth.json"), &truth_json)?;
    Ok(())
}

fn draws_csv<F: Fn(usize) -> Vec<f64>>(n: usize, width: usize, prefix: &str, row: F) -> String {
    let mut header: Vec<String> = vec!["draw".into()];
    header.extend((1..=width).map(|i| format!("{prefix}{i}")));
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..n {
        let mut cells = vec![i.to_string()];
        cells.extend(row(i).iter().map(|v| g17(*v)));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let mut echo = ResolvedConfig::default();
    echo.push("command", "fit");
    let common = resolve_common(args.seed, &args.out, None, &file, &mut echo)?;
    let data_path = match &args.data {
        Some(p) => p.clone(),
        None => PathBuf::from(
            file.get::<String>("data")?
                .ok_or_else(|| CliError::config("`--data <csv>` must be set"))?,
        ),
    };
    let p = resolve(args.p, &file, "p", 1usize)?;
    let intercept = args.intercept || file.get::<bool>("intercept")?.unwrap_or(false);
    let transform_raw = resolve(args.transform.clone(), &file, "transform", "none".to_string())?;
    let transforms = TransformSpec::parse(&transform_raw)?;
    let date_column = match &args.date_column {
        Some(c) => Some(c.clone()),
        None => file.get::<String>("date_column")?,
    };
    let scheme_raw = resolve(args.nu_scheme.clone(), &file, "nu_scheme", "loss".to_string())?;
    let sampler = sampler_from(
        &file, &mut echo, common.seed, args.iterations, args.burn_in, args.thin, args.mh_step,
        6000, 1000,
    )?;
    echo.push("data", data_path.display());
    echo.push("p", p);
    echo.push("intercept", intercept);
    echo.push("transform", &transform_raw);
    echo.push("date_column", date_column.as_deref().unwrap_or("none"));
    echo.push("nu_scheme", &scheme_raw);
    file.reject_unknown()?;

    let data = ingest_csv(&data_path, &transforms, date_column.as_deref())?;
    let m = data.n_vars();
    let nu_scheme = parse_nu_scheme(&scheme_raw, m)?;
    let design =
        build_lag_design(&data, p, intercept).map_err(|e| CliError::config(e.to_string()))?;
    let prior = NormalWishartPrior::default_for(design.k(), m, nu_scheme)
        .map_err(|e| CliError::config(e.to_string()))?;

    ensure_out_dir(&common.out)?;
    echo.write_to(&common.out)?;

    let draws = run_gibbs(&design, &prior, &sampler).map_err(|e| CliError::runtime(e.to_string()))?;
    let summary = summarize(&draws).map_err(|e| CliError::runtime(e.to_string()))?;

    let km = design.k() * m;
    write_text(
        &common.out.join("alpha_draws.csv"),
        &draws_csv(draws.len(), km, "c", |i| {
            draws.alpha_draws[i].iter().copied().collect()
        }),
    )?;
    write_text(
        &common.out.join("sigma_draws.csv"),
        &draws_csv(draws.len(), m * m, "s", |i| {
            draws.sigma_draws[i].as_matrix().iter().copied().collect()
        }),
    )?;
    if !draws.nu_draws.is_empty() {
        let mut body = String::from("draw,nu\n");
        for (i, nu) in draws.nu_draws.iter().enumerate() {
            body.push_str(&format!("{i},{nu}\n"));
        }
        write_text(&common.out.join("nu_draws.csv"), &body)?;
    }
    let summary_json = json!({
        "command": "fit",
        "seed": common.seed,
        "m": m,
        "k": design.k(),
        "p": p,
        "intercept": intercept,
        "nu_scheme": scheme_raw,
        "retained_draws": draws.len(),
        "alpha_mean": summary.alpha_mean.iter().copied().collect::<Vec<f64>>(),
        "sigma_mean": matrix_rows(&summary.sigma_mean),
        "nu_mean": summary.nu_mean,
        "nu_hpd_low": summary.nu_hpd.map(|h| h.0),
        "nu_hpd_high": summary.nu_hpd.map(|h| h.1),
        "mh_acceptance": summary.mh_acceptance,
    });
    write_json(&common.out.join("summary.json"), &summary_json)?;
    Ok(())
}

fn nu_track_csv(outcome: &RollingOutcome) -> String {
    let mut body = String::from("window_index,origin_time,nu_mean,hpd_low,hpd_high\n");
    for e in &outcome.nu_track {
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            e.window_index,
            e.origin_time,
            g17(e.nu_mean),
            e.hpd_low,
            e.hpd_high
        ));
    }
    body
}

pub fn cmd_forecast(args: &ForecastArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let mut echo = ResolvedConfig::default();
    echo.push("command", "forecast");
    let common = resolve_common(args.seed, &args.out, args.threads, &file, &mut echo)?;
    let data_path = match &args.data {
        Some(p) => p.clone(),
        None => PathBuf::from(
            file.get::<String>("data")?
                .ok_or_else(|| CliError::config("`--data <csv>` must be set"))?,
        ),
    };
    // lag order is never silently defaulted for forecasting
    let p: usize = resolve_required(args.p, &file, "p")?;
    let window: usize = resolve_required(args.window, &file, "window")?;
    let intercept = args.intercept || file.get::<bool>("intercept")?.unwrap_or(false);
    let transform_raw = resolve(args.transform.clone(), &file, "transform", "none".to_string())?;
    let transforms = TransformSpec::parse(&transform_raw)?;
    let date_column = match &args.date_column {
        Some(c) => Some(c.clone()),
        None => file.get::<String>("date_column")?,
    };
    let nu_fixed_opt = match args.nu_fixed {
        Some(v) => Some(v),
        None => file.get::<usize>("nu_fixed")?,
    };
    let sampler = sampler_from(
        &file, &mut echo, common.seed, args.iterations, args.burn_in, args.thin, args.mh_step,
        6000, 1000,
    )?;
    echo.push("data", data_path.display());
    echo.push("p", p);
    echo.push("window", window);
    echo.push("intercept", intercept);
    echo.push("transform", &transform_raw);
    echo.push("date_column", date_column.as_deref().unwrap_or("none"));
    file.reject_unknown()?;

    let data = ingest_csv(&data_path, &transforms, date_column.as_deref())?;
    let m = data.n_vars();
    let nu_fixed = nu_fixed_opt.unwrap_or(m + 1);
    if nu_fixed < m {
        return Err(CliError::config(format!(
            "fixed degrees of freedom {nu_fixed} below dimension {m}"
        )));
    }
    echo.push("nu_fixed", nu_fixed);
    if data.t_len() < window + 1 {
        return Err(CliError::config(format!(
            "series of length {} cannot support a rolling window of {window}",
            data.t_len()
        )));
    }
    let plan = RollingPlan::new(window);
    let design_k = m * p + usize::from(intercept);
    let prior_fixed = NormalWishartPrior::default_for(design_k, m, NuScheme::Fixed(nu_fixed))
        .map_err(|e| CliError::config(e.to_string()))?;
    let prior_loss = NormalWishartPrior::default_for(design_k, m, NuScheme::LossBased)
        .map_err(|e| CliError::config(e.to_string()))?;

    ensure_out_dir(&common.out)?;
    echo.write_to(&common.out)?;

    let run = |prior: &NormalWishartPrior, arm: u64| -> CliResult<RollingOutcome> {
        let mut config = sampler;
        config.rng = sampler.rng.derive(arm);
        rolling_forecast(&data, p, intercept, prior, plan, &config, common.threads)
            .map_err(|e| CliError::runtime(e.to_string()))
    };
    let fixed = run(&prior_fixed, 1)?;
    let loss = run(&prior_loss, 2)?;

    let skipped_fixed: Vec<usize> = fixed.skipped.iter().map(|s| s.window_index).collect();
    let skipped_loss: Vec<usize> = loss.skipped.iter().map(|s| s.window_index).collect();
    let nu_track = nu_track_csv(&loss);
    let (fixed_records, loss_records) = align_paired_records(fixed.records, loss.records);
    let report = compare_priors(&fixed_records, &loss_records, data.variable_names())
        .map_err(|e| CliError::runtime(e.to_string()))?;

    write_text(&common.out.join("metric_report.csv"), &report.to_csv())?;
    let report_json = json!({
        "command": "forecast",
        "seed": common.seed,
        "window_length": window,
        "windows_total": data.t_len() - window,
        "windows_scored": fixed_records.len(),
        "skipped_fixed": skipped_fixed,
        "skipped_loss": skipped_loss,
        "variables": report.rows,
    });
    write_json(&common.out.join("metric_report.json"), &report_json)?;
    write_text(&common.out.join("nu_track.csv"), &nu_track)?;
    Ok(())
}

fn parse_cells(spec: &str) -> CliResult<Vec<StudyCell>> {
    let mut cells = Vec::new();
    for part in spec.split(',') {
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() != 3 {
            return Err(CliError::config(format!(
                "cell `{part}` must be m:T:nu_true"
            )));
        }
        let parse = |s: &str| -> CliResult<usize> {
            s.trim()
                .parse()
                .map_err(|_| CliError::config(format!("cell `{part}`: `{s}` is not an integer")))
        };
        cells.push(StudyCell {
            m: parse(fields[0])?,
            t_len: parse(fields[1])?,
            nu_true: parse(fields[2])?,
        });
    }
    Ok(cells)
}

pub fn cmd_study(args: &StudyArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let mut echo = ResolvedConfig::default();
    echo.push("command", "study");
    let common = resolve_common(args.seed, &args.out, args.threads, &file, &mut echo)?;
    let preset = resolve(args.preset.clone(), &file, "preset", "desk".to_string())?;
    let cells_raw = match &args.cells {
        Some(c) => Some(c.clone()),
        None => file.get::<String>("cells")?,
    };
    let (mut grid, default_iterations, default_burn_in) = match (preset.as_str(), &cells_raw) {
        (_, Some(spec)) => {
            let cells = parse_cells(spec)?;
            let grid = StudyGrid::from_cells(cells, 50)
                .map_err(|e| CliError::config(e.to_string()))?;
            (grid, 2000, 500)
        }
        ("desk", None) => (StudyGrid::desk(), 2000, 500),
        ("full", None) => (StudyGrid::full(), 6000, 1000),
        (other, None) => {
            return Err(CliError::config(format!(
                "preset must be `desk` or `full`, got `{other}`"
            )))
        }
    };
    let reps_override = match args.replications {
        Some(v) => Some(v),
        None => file.get::<usize>("replications")?,
    };
    if let Some(reps) = reps_override {
        if reps == 0 {
            return Err(CliError::config("replications must be at least 1"));
        }
        grid.replications = reps;
    }
    grid.ar_coeff = resolve(args.ar_coeff, &file, "ar_coeff", grid.ar_coeff)?;
    let gen_scale_raw = resolve(args.gen_scale.clone(), &file, "gen_scale", "identity".to_string())?;
    grid.scale_policy = parse_gen_scale(&gen_scale_raw)?;
    let sampler = sampler_from(
        &file, &mut echo, common.seed, args.iterations, args.burn_in, args.thin, args.mh_step,
        default_iterations, default_burn_in,
    )?;
    echo.push("preset", &preset);
    echo.push("cells", cells_raw.as_deref().unwrap_or("preset"));
    echo.push("replications", grid.replications);
    echo.push("ar_coeff", grid.ar_coeff);
    echo.push("gen_scale", &gen_scale_raw);
    file.reject_unknown()?;

    ensure_out_dir(&common.out)?;
    echo.write_to(&common.out)?;

    let samples = run_study(&grid, &sampler, common.threads)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    export_boxplot_data(&samples, &common.out.join("rmad_boxplot.csv"))
        .map_err(|e| CliError::runtime(e.to_string()))?;
    let manifest = json!({
        "command": "study",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": common.seed,
        "grid": &grid,
        "sampler": {
            "iterations": sampler.iterations,
            "burn_in": sampler.burn_in,
            "thin": sampler.thin,
            "mh_step": sampler.mh_step,
        },
        "samples": samples.len(),
    });
    write_json(&common.out.join("manifest.json"), &manifest)?;
    Ok(())
}
