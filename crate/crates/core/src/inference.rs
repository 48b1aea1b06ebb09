//! Gibbs sampling for the Normal-Wishart VAR under a fixed or adaptive
//! degrees-of-freedom scheme, plus posterior summaries.
//!
//! One sweep draws the vectorized coefficients from their Gaussian
//! conditional, the precision matrix from its Wishart conditional, and (under
//! the adaptive scheme) the degrees of freedom through a discrete
//! random-walk Metropolis step targeting the conditional posterior of nu.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lossprior::NuConditional;
use crate::randmat::{sample_wishart, standard_normal_vector, RngStream, SpdMatrix};
use crate::varcore::{devectorize, residuals, vectorize, LagDesign};

/// Prior treatment of the Wishart degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NuScheme {
    /// Conventional choice: nu pinned at a constant (usually m + 1).
    Fixed(usize),
    /// Adaptive: nu carries the loss-based hyperprior and is sampled.
    LossBased,
}

/// Prior covariance of the vectorized coefficients. `Diffuse` is the
/// improper flat limit, implemented as zero prior precision.
#[derive(Debug, Clone)]
pub enum CoeffCovariance {
    Spd(SpdMatrix),
    Diffuse,
}

/// Conjugate prior block: alpha ~ N(alpha0, V0), precision ~ W(nu, S0^-1).
#[derive(Debug, Clone)]
pub struct NormalWishartPrior {
    pub alpha0: DVector<f64>,
    pub v0: CoeffCovariance,
    pub s0: SpdMatrix,
    pub nu_scheme: NuScheme,
}

impl NormalWishartPrior {
    /// Weakly informative defaults: alpha0 = 0, V0 = 10 I, S0 = I.
    pub fn default_for(k: usize, m: usize, nu_scheme: NuScheme) -> Result<Self> {
        let prior = NormalWishartPrior {
            alpha0: DVector::zeros(k * m),
            v0: CoeffCovariance::Spd(SpdMatrix::scaled_identity(k * m, 10.0)?),
            s0: SpdMatrix::identity(m),
            nu_scheme,
        };
        prior.validate(k, m)?;
        Ok(prior)
    }

    pub fn validate(&self, k: usize, m: usize) -> Result<()> {
        if self.alpha0.len() != k * m {
            return Err(Error::dim(format!(
                "prior mean has length {}, expected k*m = {}",
                self.alpha0.len(),
                k * m
            )));
        }
        if let CoeffCovariance::Spd(v0) = &self.v0 {
            if v0.dim() != k * m {
                return Err(Error::dim(format!(
                    "prior covariance has dimension {}, expected k*m = {}",
                    v0.dim(),
                    k * m
                )));
            }
        }
        if self.s0.dim() != m {
            return Err(Error::dim(format!(
                "prior scale has dimension {}, expected m = {}",
                self.s0.dim(),
                m
            )));
        }
        if let NuScheme::Fixed(nu) = self.nu_scheme {
            if nu < m {
                return Err(Error::domain(format!(
                    "fixed degrees of freedom {nu} below dimension {m}"
                )));
            }
        }
        Ok(())
    }
}

/// MCMC run length and proposal settings.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Maximum |nu' - nu| of the uniform random-walk proposal.
    pub mh_step: usize,
    pub rng: RngStream,
}

impl SamplerConfig {
    pub fn new(rng: RngStream) -> Self {
        SamplerConfig {
            iterations: 6000,
            burn_in: 1000,
            thin: 1,
            mh_step: 3,
            rng,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(Error::domain(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::domain("thinning interval must be at least 1"));
        }
        if self.mh_step == 0 {
            return Err(Error::domain("proposal width must be at least 1"));
        }
        Ok(())
    }

    /// Number of retained draws.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// Retained post burn-in draws.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub alpha_draws: Vec<DVector<f64>>,
    pub sigma_draws: Vec<SpdMatrix>,
    /// Empty under the fixed scheme.
    pub nu_draws: Vec<usize>,
    /// None under the fixed scheme (no proposals are made).
    pub mh_acceptance: Option<f64>,
    pub k: usize,
    pub m: usize,
    pub p: usize,
    pub intercept: bool,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.alpha_draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha_draws.is_empty()
    }
}

/// Moments of the Gaussian conditional of the vectorized coefficients, given
/// the precision matrix: mean and the Cholesky factor of the posterior
/// precision. Uses the Kronecker identity
/// sum_t Z_t' P Z_t = P kron X'X  (Z_t = I_m kron x_t'),
/// which matches the per-observation summation form exactly.
pub fn alpha_conditional(
    design: &LagDesign,
    sigma_inv: &SpdMatrix,
    prior: &NormalWishartPrior,
) -> Result<(DVector<f64>, Cholesky<f64, Dyn>)> {
    let parts = GibbsParts::new(design, prior)?;
    parts.alpha_conditional(sigma_inv)
}

/// One exact draw from the coefficient conditional.
pub fn draw_alpha<R: Rng + ?Sized>(
    design: &LagDesign,
    sigma_inv: &SpdMatrix,
    prior: &NormalWishartPrior,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let (mean, chol) = alpha_conditional(design, sigma_inv, prior)?;
    draw_from_conditional(&mean, &chol, rng)
}

fn draw_from_conditional<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    precision_chol: &Cholesky<f64, Dyn>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    // cov = P^-1 = (L L')^-1, so mean + L'^-1 z has the right covariance
    let z = standard_normal_vector(mean.len(), rng);
    let lt = precision_chol.l().transpose();
    let w = lt
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::numerical("singular posterior precision factor"))?;
    Ok(mean + w)
}

/// One Wishart draw from the precision conditional, with
/// df = nu_current + T_eff and scale (S0 + E'E)^-1.
pub fn draw_sigma_inv<R: Rng + ?Sized>(
    design: &LagDesign,
    alpha: &DVector<f64>,
    prior: &NormalWishartPrior,
    nu_current: usize,
    rng: &mut R,
) -> Result<SpdMatrix> {
    let m = design.n_vars();
    if nu_current < m {
        return Err(Error::domain(format!(
            "current degrees of freedom {nu_current} below dimension {m}"
        )));
    }
    let a = devectorize(alpha, design.k(), m)?;
    let resid = residuals(design, &a)?;
    let s_bar = SpdMatrix::from_symmetrized(
        prior.s0.as_matrix() + resid.transpose() * &resid,
    )?;
    let nu_bar = nu_current + design.t_eff();
    sample_wishart(nu_bar, &s_bar.inverse()?, rng)
}

/// Discrete random-walk Metropolis step for nu. Proposes uniformly on
/// {nu - step, ..., nu - 1, nu + 1, ..., nu + step}; proposals below the
/// support minimum m are rejected outright. The proposal is symmetric, so the
/// accept ratio is just the posterior ratio.
pub fn draw_nu<R: Rng + ?Sized>(
    nu_current: usize,
    sigma_inv: &SpdMatrix,
    prior: &NormalWishartPrior,
    mh_step: usize,
    rng: &mut R,
) -> Result<(usize, bool)> {
    let cond = NuConditional::new(sigma_inv, &prior.s0)?;
    draw_nu_with(&cond, nu_current, mh_step, rng)
}

pub(crate) fn draw_nu_with<R: Rng + ?Sized>(
    cond: &NuConditional,
    nu_current: usize,
    mh_step: usize,
    rng: &mut R,
) -> Result<(usize, bool)> {
    let m = cond.m();
    if nu_current < m {
        return Err(Error::domain(format!(
            "current degrees of freedom {nu_current} below dimension {m}"
        )));
    }
    if mh_step == 0 {
        return Err(Error::domain("proposal width must be at least 1"));
    }
    // index 0..2*step maps onto {-step..-1, +1..+step}
    let pick = rng.random_range(0..(2 * mh_step)) as i64;
    let offset = if pick < mh_step as i64 {
        pick - mh_step as i64
    } else {
        pick - mh_step as i64 + 1
    };
    debug_assert!(offset != 0);
    let proposal = nu_current as i64 + offset;
    if proposal < m as i64 {
        return Ok((nu_current, false));
    }
    let proposal = proposal as usize;
    let delta = cond.log_at(proposal)? - cond.log_at(nu_current)?;
    let accept = delta >= 0.0 || rng.random::<f64>() < delta.exp();
    Ok(if accept {
        (proposal, true)
    } else {
        (nu_current, false)
    })
}

/// Per-run constants of the Gibbs conditionals.
struct GibbsParts {
    xtx: DMatrix<f64>,
    xty: DMatrix<f64>,
    v0_inv: Option<DMatrix<f64>>,
    v0_inv_alpha0: DVector<f64>,
    km: usize,
}

impl GibbsParts {
    fn new(design: &LagDesign, prior: &NormalWishartPrior) -> Result<Self> {
        prior.validate(design.k(), design.n_vars())?;
        let x = design.regressors();
        let xtx = x.transpose() * x;
        let xty = x.transpose() * design.responses();
        let km = design.k() * design.n_vars();
        let (v0_inv, v0_inv_alpha0) = match &prior.v0 {
            CoeffCovariance::Spd(v0) => {
                let inv = v0.inverse()?;
                let prod = inv.as_matrix() * &prior.alpha0;
                (Some(inv.into_matrix()), prod)
            }
            CoeffCovariance::Diffuse => (None, DVector::zeros(km)),
        };
        Ok(GibbsParts {
            xtx,
            xty,
            v0_inv,
            v0_inv_alpha0,
            km,
        })
    }

    fn alpha_conditional(
        &self,
        sigma_inv: &SpdMatrix,
    ) -> Result<(DVector<f64>, Cholesky<f64, Dyn>)> {
        let mut precision = sigma_inv.as_matrix().kronecker(&self.xtx);
        if let Some(v0_inv) = &self.v0_inv {
            precision += v0_inv;
        }
        let rhs = &self.v0_inv_alpha0 + vectorize(&(&self.xty * sigma_inv.as_matrix()));
        let chol = cholesky_with_jitter(precision)?;
        let mean = chol.solve(&rhs);
        Ok((mean, chol))
    }
}

/// Cholesky with escalating diagonal jitter: the posterior precision can sit
/// at the conditioning edge for large k*m, so retry with 1e-10 * trace * I
/// scaled up tenfold per attempt before giving up.
fn cholesky_with_jitter(matrix: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let trace = matrix.trace();
    let n = matrix.nrows();
    let mut jitter = 0.0;
    for _ in 0..4 {
        let mut candidate = matrix.clone();
        if jitter > 0.0 {
            for i in 0..n {
                candidate[(i, i)] += jitter;
            }
        }
        if let Some(chol) = Cholesky::new(candidate) {
            return Ok(chol);
        }
        jitter = if jitter == 0.0 {
            1e-10 * trace
        } else {
            jitter * 10.0
        };
    }
    Err(Error::numerical(
        "posterior precision not positive definite after jitter escalation",
    ))
}

/// Run the full Gibbs sampler. Numerical failures abort the run carrying the
/// sweep index.
pub fn run_gibbs(
    design: &LagDesign,
    prior: &NormalWishartPrior,
    config: &SamplerConfig,
) -> Result<PosteriorDraws> {
    config.validate()?;
    let m = design.n_vars();
    let parts = GibbsParts::new(design, prior)?;
    let mut rng = config.rng.rng();

    let mut sigma_inv = SpdMatrix::identity(m);
    let mut nu = match prior.nu_scheme {
        NuScheme::Fixed(nu) => nu,
        NuScheme::LossBased => m + 1,
    };

    let retained = config.retained();
    let mut alpha_draws = Vec::with_capacity(retained);
    let mut sigma_draws = Vec::with_capacity(retained);
    let mut nu_draws = Vec::with_capacity(if matches!(prior.nu_scheme, NuScheme::LossBased) {
        retained
    } else {
        0
    });
    let mut proposals = 0usize;
    let mut accepts = 0usize;

    for sweep in 0..config.iterations {
        let (mean, chol) = parts
            .alpha_conditional(&sigma_inv)
            .map_err(|e| e.at_sweep(sweep))?;
        let alpha = draw_from_conditional(&mean, &chol, &mut rng)
            .map_err(|e| e.at_sweep(sweep))?;
        debug_assert_eq!(alpha.len(), parts.km);

        sigma_inv = draw_sigma_inv(design, &alpha, prior, nu, &mut rng)
            .map_err(|e| e.at_sweep(sweep))?;

        if matches!(prior.nu_scheme, NuScheme::LossBased) {
            let cond =
                NuConditional::new(&sigma_inv, &prior.s0).map_err(|e| e.at_sweep(sweep))?;
            let (next, accepted) =
                draw_nu_with(&cond, nu, config.mh_step, &mut rng).map_err(|e| e.at_sweep(sweep))?;
            proposals += 1;
            accepts += usize::from(accepted);
            nu = next;
        }

        if sweep >= config.burn_in && (sweep - config.burn_in).is_multiple_of(config.thin) {
            alpha_draws.push(alpha);
            sigma_draws.push(sigma_inv.inverse().map_err(|e| e.at_sweep(sweep))?);
            if matches!(prior.nu_scheme, NuScheme::LossBased) {
                nu_draws.push(nu);
            }
        }
    }

    Ok(PosteriorDraws {
        alpha_draws,
        sigma_draws,
        nu_draws,
        mh_acceptance: (proposals > 0).then(|| accepts as f64 / proposals as f64),
        k: design.k(),
        m,
        p: design.p(),
        intercept: design.intercept(),
    })
}

/// Posterior means plus the discrete 95% HPD set of nu.
#[derive(Debug, Clone)]
pub struct PosteriorSummary {
    pub alpha_mean: DVector<f64>,
    pub sigma_mean: DMatrix<f64>,
    pub nu_mean: Option<f64>,
    /// [min, max] of the smallest set of nu values (by descending frequency)
    /// with at least 95% posterior mass.
    pub nu_hpd: Option<(usize, usize)>,
    pub mh_acceptance: Option<f64>,
}

/// Smallest discrete set with mass >= level, collected by descending
/// frequency (ties broken toward smaller nu), reported as [min, max].
pub fn discrete_hpd(values: &[usize], level: f64) -> Result<(usize, usize)> {
    if values.is_empty() {
        return Err(Error::domain("empty draw list"));
    }
    let mut counts: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    let mut by_freq: Vec<(usize, usize)> = counts.into_iter().collect();
    by_freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let total = values.len() as f64;
    let mut mass = 0.0;
    let mut lo = usize::MAX;
    let mut hi = 0usize;
    for (value, count) in by_freq {
        mass += count as f64 / total;
        lo = lo.min(value);
        hi = hi.max(value);
        if mass >= level {
            break;
        }
    }
    Ok((lo, hi))
}

pub fn summarize(draws: &PosteriorDraws) -> Result<PosteriorSummary> {
    if draws.is_empty() {
        return Err(Error::domain("no retained draws to summarize"));
    }
    let n = draws.len() as f64;
    let mut alpha_mean = DVector::zeros(draws.alpha_draws[0].len());
    for a in &draws.alpha_draws {
        alpha_mean += a;
    }
    alpha_mean /= n;
    let mut sigma_mean = DMatrix::zeros(draws.m, draws.m);
    for s in &draws.sigma_draws {
        sigma_mean += s.as_matrix();
    }
    sigma_mean /= n;
    let (nu_mean, nu_hpd) = if draws.nu_draws.is_empty() {
        (None, None)
    } else {
        let mean = draws.nu_draws.iter().sum::<usize>() as f64 / n;
        (Some(mean), Some(discrete_hpd(&draws.nu_draws, 0.95)?))
    };
    Ok(PosteriorSummary {
        alpha_mean,
        sigma_mean,
        nu_mean,
        nu_hpd,
        mh_acceptance: draws.mh_acceptance,
    })
}
