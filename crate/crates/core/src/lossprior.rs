//! Loss-based hyperprior on the Wishart degrees of freedom.
//!
//! The prior weight of each admissible nu is exp(KL to the nearest
//! alternative) - 1, where the nearest Wishart sharing the scale matrix sits
//! at nu + 1. This module provides the KL divergence between such Wisharts,
//! the resulting log prior, the unnormalized conditional log posterior of nu
//! given a precision draw, and brute-force verification utilities for the
//! minimizer claim and posterior properness.
//!
//! Note the prior itself is not summable (weights decay like 1/nu); only the
//! posterior is proper. Nothing here ever needs the prior's normalizing
//! constant, and enumeration utilities report tail diagnostics instead of
//! assuming summability.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::randmat::SpdMatrix;
use crate::special::{
    log_gamma, multivariate_digamma, multivariate_log_gamma, Dimension,
};

/// Discrete support of nu: starts at the matrix dimension; `nu_max` caps
/// enumeration-based utilities only (the MH kernel is unbounded above).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NuSupport {
    pub m: usize,
    pub nu_min: usize,
    pub nu_max: usize,
}

impl NuSupport {
    pub fn new(m: Dimension, nu_max: usize) -> Result<Self> {
        let m = m.get();
        if nu_max < m {
            return Err(Error::domain(format!(
                "nu_max {nu_max} below support minimum {m}"
            )));
        }
        Ok(NuSupport {
            m,
            nu_min: m,
            nu_max,
        })
    }

    /// Conservative default cap for enumeration utilities.
    pub fn with_default_cap(m: Dimension) -> Self {
        NuSupport {
            m: m.get(),
            nu_min: m.get(),
            nu_max: m.get() + 2000,
        }
    }
}

/// Read-only cache of log prior weights over a contiguous nu range. Safe to
/// share across concurrent samplers once built.
#[derive(Debug, Clone)]
pub struct PriorWeightTable {
    m: usize,
    nu_min: usize,
    log_weights: Vec<f64>,
}

impl PriorWeightTable {
    pub fn build(m: Dimension, support: NuSupport) -> Result<Self> {
        let mut log_weights = Vec::with_capacity(support.nu_max - support.nu_min + 1);
        for nu in support.nu_min..=support.nu_max {
            log_weights.push(log_prior_nu(m, nu)?);
        }
        Ok(PriorWeightTable {
            m: m.get(),
            nu_min: support.nu_min,
            log_weights,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn log_weight(&self, nu: usize) -> Option<f64> {
        nu.checked_sub(self.nu_min)
            .and_then(|i| self.log_weights.get(i).copied())
    }
}

fn check_kl_domain(m: usize, nu: usize, c: i64) -> Result<()> {
    if m == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if nu < m {
        return Err(Error::domain(format!("nu = {nu} below dimension m = {m}")));
    }
    let shifted = nu as i64 + c;
    if shifted < m as i64 {
        return Err(Error::domain(format!(
            "shifted degrees of freedom nu + c = {shifted} leave the density family (m = {m})"
        )));
    }
    Ok(())
}

/// KL(W_nu || W_{nu+c}) for Wisharts sharing a scale matrix:
/// ln(Gamma_m((nu+c)/2) / Gamma_m(nu/2)) - (c/2) psi_m(nu/2).
///
/// For c = +-1 the Gamma_m ratio telescopes to a ratio of two scalar gammas,
/// which is used directly: it is exact and avoids cancellation on the hot
/// path. c = 0 returns 0.
pub fn kl_wishart(m: Dimension, nu: usize, c: i64) -> Result<f64> {
    check_kl_domain(m.get(), nu, c)?;
    if c == 0 {
        return Ok(0.0);
    }
    let nu_f = nu as f64;
    let m_f = m.get() as f64;
    let psi_m = multivariate_digamma(m, nu_f / 2.0)?;
    match c {
        1 => Ok(log_gamma((nu_f + 1.0) / 2.0)? - log_gamma((nu_f + 1.0 - m_f) / 2.0)?
            - 0.5 * psi_m),
        -1 => Ok(log_gamma((nu_f - m_f) / 2.0)? - log_gamma(nu_f / 2.0)? + 0.5 * psi_m),
        _ => Ok(multivariate_log_gamma(m, (nu_f + c as f64) / 2.0)?
            - multivariate_log_gamma(m, nu_f / 2.0)?
            - c as f64 / 2.0 * psi_m),
    }
}

/// One grid point of the KL minimizer scan.
#[derive(Debug, Clone, Serialize)]
pub struct KlGridEntry {
    pub m: usize,
    pub nu: usize,
    pub argmin_c: i64,
    pub min_kl: f64,
}

/// Result of brute-forcing argmin_c KL(W_nu || W_{nu+c}) over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct KlMinimizerReport {
    pub entries: Vec<KlGridEntry>,
    /// True iff the argmin is c = 1 at every grid point.
    pub pass: bool,
    /// Smallest observed KL(c = -1) - KL(c = 1) over points where both exist.
    pub worst_margin: Option<f64>,
}

/// Evaluate argmin over `c_range` (0 excluded, existence enforced) of the KL
/// divergence, for every m in `m_range` and nu = m + k with k in `k_range`.
pub fn verify_kl_minimizer(
    m_range: std::ops::RangeInclusive<usize>,
    k_range: std::ops::RangeInclusive<usize>,
    c_range: std::ops::RangeInclusive<i64>,
) -> Result<KlMinimizerReport> {
    if m_range.is_empty() || k_range.is_empty() || c_range.is_empty() {
        return Err(Error::domain("empty scan range"));
    }
    if *m_range.start() < 2 {
        return Err(Error::domain("minimizer scan requires m >= 2"));
    }
    if *k_range.start() < 1 {
        return Err(Error::domain("minimizer scan requires nu > m"));
    }
    let mut entries = Vec::new();
    let mut pass = true;
    let mut worst_margin: Option<f64> = None;
    for m in m_range {
        let dm = Dimension::new(m)?;
        for k in k_range.clone() {
            let nu = m + k;
            let mut best: Option<(i64, f64)> = None;
            for c in c_range.clone() {
                if c == 0 || (nu as i64 + c) < m as i64 {
                    continue;
                }
                let kl = kl_wishart(dm, nu, c)?;
                if best.is_none_or(|(_, b)| kl < b) {
                    best = Some((c, kl));
                }
            }
            let (argmin_c, min_kl) =
                best.ok_or_else(|| Error::domain("no admissible c in scan range"))?;
            if argmin_c != 1 {
                pass = false;
            }
            if c_range.contains(&-1) && c_range.contains(&1) && nu > m {
                let margin = kl_wishart(dm, nu, -1)? - kl_wishart(dm, nu, 1)?;
                worst_margin = Some(worst_margin.map_or(margin, |w: f64| w.min(margin)));
            }
            entries.push(KlGridEntry {
                m,
                nu,
                argmin_c,
                min_kl,
            });
        }
    }
    Ok(KlMinimizerReport {
        entries,
        pass,
        worst_margin,
    })
}

/// ln pi(nu) up to the (divergent) normalizing constant: ln(exp(d) - 1)
/// with d = ln Gamma((nu+1)/2) - ln Gamma((nu+1-m)/2) - psi_m(nu/2)/2.
/// d equals the KL divergence to the neighboring Wishart at c = 1, so it is
/// strictly positive; expm1 keeps the small-d tail accurate.
pub fn log_prior_nu(m: Dimension, nu: usize) -> Result<f64> {
    if nu < m.get() {
        return Err(Error::domain(format!(
            "prior support starts at m = {}, got nu = {nu}",
            m.get()
        )));
    }
    let nu_f = nu as f64;
    let m_f = m.get() as f64;
    let d = log_gamma((nu_f + 1.0) / 2.0)?
        - log_gamma((nu_f + 1.0 - m_f) / 2.0)?
        - 0.5 * multivariate_digamma(m, nu_f / 2.0)?;
    debug_assert!(d > 0.0, "prior exponent must be positive, got {d}");
    if d > 30.0 {
        // ln(e^d - 1) = d + ln(1 - e^-d), safe against overflow of e^d
        Ok(d + (-(-d).exp()).ln_1p())
    } else {
        Ok(d.exp_m1().ln())
    }
}

/// Cached pieces of the unnormalized conditional log posterior of nu given a
/// precision draw: p(nu | X) prop pi(nu) W(X | nu, S0^-1). Everything that
/// does not depend on nu is computed once so repeated Metropolis evaluations
/// only pay for scalar special functions.
#[derive(Debug, Clone)]
pub struct NuConditional {
    m: Dimension,
    ln_det_precision: f64,
    ln_det_s0: f64,
    trace_s0_precision: f64,
}

impl NuConditional {
    pub fn new(precision: &SpdMatrix, s0: &SpdMatrix) -> Result<Self> {
        if precision.dim() != s0.dim() {
            return Err(Error::dim(format!(
                "precision has dimension {} but scale has {}",
                precision.dim(),
                s0.dim()
            )));
        }
        let m = Dimension::new(precision.dim())?;
        // density scale is S0^-1: tr((S0^-1)^-1 X) = tr(S0 X), ln|S0^-1| = -ln|S0|
        let trace = (s0.as_matrix() * precision.as_matrix()).trace();
        Ok(NuConditional {
            m,
            ln_det_precision: precision.log_det()?,
            ln_det_s0: s0.log_det()?,
            trace_s0_precision: trace,
        })
    }

    pub fn m(&self) -> usize {
        self.m.get()
    }

    /// Unnormalized log posterior at nu.
    pub fn log_at(&self, nu: usize) -> Result<f64> {
        let m_f = self.m.get() as f64;
        let nu_f = nu as f64;
        let prior = log_prior_nu(self.m, nu)?;
        let likelihood = (nu_f - m_f - 1.0) / 2.0 * self.ln_det_precision
            - 0.5 * self.trace_s0_precision
            - nu_f * m_f / 2.0 * std::f64::consts::LN_2
            + nu_f / 2.0 * self.ln_det_s0
            - multivariate_log_gamma(self.m, nu_f / 2.0)?;
        Ok(prior + likelihood)
    }

    /// Normalized pmf over `support` by direct enumeration.
    pub fn enumerate(&self, support: NuSupport) -> Result<Vec<f64>> {
        if support.m != self.m.get() {
            return Err(Error::dim("support dimension mismatch"));
        }
        let logs: Result<Vec<f64>> = (support.nu_min..=support.nu_max)
            .map(|nu| self.log_at(nu))
            .collect();
        let logs = logs?;
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        Ok(weights.into_iter().map(|w| w / total).collect())
    }
}

/// Unnormalized conditional log posterior of nu given one precision draw.
pub fn log_conditional_posterior_nu(
    nu: usize,
    precision: &SpdMatrix,
    s0: &SpdMatrix,
) -> Result<f64> {
    NuConditional::new(precision, s0)?.log_at(nu)
}

/// Numerical properness evidence for the conditional posterior of nu.
#[derive(Debug, Clone, Serialize)]
pub struct PropernessDiagnostic {
    /// log of the successive-term ratio of the likelihood part, for
    /// nu = m .. nu_max.
    pub log_likelihood_ratios: Vec<f64>,
    pub ratios_strictly_decreasing: bool,
    /// Upper bound on the normalized posterior mass beyond nu_max.
    pub tail_mass_beyond: f64,
    /// Relative change of the enumerated normalizing constant when the cap is
    /// extended by 100 terms past nu_max.
    pub normalizer_rel_change: f64,
}

/// Ratio-test style diagnostic: the log of
/// R_nu = |X|^{1/2} Gamma((nu+1-m)/2) / (2^{m/2} |S0^-1|^{1/2} Gamma((nu+1)/2))
/// for each nu, which must fall monotonically toward -inf, plus enumerated
/// tail mass of the posterior beyond `nu_max`.
pub fn properness_diagnostic(
    precision: &SpdMatrix,
    s0: &SpdMatrix,
    nu_max: usize,
) -> Result<PropernessDiagnostic> {
    let cond = NuConditional::new(precision, s0)?;
    let m = cond.m();
    if nu_max <= m + 10 {
        return Err(Error::domain(format!(
            "nu_max must exceed m + 10 = {}",
            m + 10
        )));
    }
    let m_f = m as f64;
    let constant = 0.5 * cond.ln_det_precision - m_f / 2.0 * std::f64::consts::LN_2
        + 0.5 * cond.ln_det_s0;
    let mut log_ratios = Vec::with_capacity(nu_max - m + 1);
    for nu in m..=nu_max {
        let nu_f = nu as f64;
        log_ratios.push(
            constant + log_gamma((nu_f + 1.0 - m_f) / 2.0)? - log_gamma((nu_f + 1.0) / 2.0)?,
        );
    }
    let decreasing = log_ratios.windows(2).all(|w| w[1] < w[0]);

    // enumerate the posterior well past the cap and bound what is left over
    // by a geometric series with the (decreasing) final term ratio
    let extended = nu_max + 1000;
    let logs: Result<Vec<f64>> = (m..=extended).map(|nu| cond.log_at(nu)).collect();
    let logs = logs?;
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let head: f64 = weights[..=(nu_max - m)].iter().sum();
    let window: f64 = weights[(nu_max - m + 1)..].iter().sum();
    let last = *weights.last().expect("non-empty enumeration");
    let last_ratio = (logs[logs.len() - 1] - logs[logs.len() - 2]).exp();
    let remainder = if last_ratio < 1.0 {
        last * last_ratio / (1.0 - last_ratio)
    } else {
        f64::INFINITY
    };
    let total = head + window + remainder;
    let tail_mass_beyond = (window + remainder) / total;

    let z_at_cap = head;
    let z_100: f64 = weights[..=(nu_max - m + 100).min(weights.len() - 1)].iter().sum();
    let normalizer_rel_change = (z_100 - z_at_cap) / z_at_cap;

    Ok(PropernessDiagnostic {
        log_likelihood_ratios: log_ratios,
        ratios_strictly_decreasing: decreasing,
        tail_mass_beyond,
        normalizer_rel_change,
    })
}
