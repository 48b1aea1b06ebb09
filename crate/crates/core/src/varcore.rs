//! VAR(p) data model: datasets, lag/design matrices, vectorization,
//! residuals and synthetic-data generation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::randmat::{sample_mvn, sample_wishart, SpdMatrix};

/// Observed multivariate series: rows are time points y_t.
#[derive(Debug, Clone)]
pub struct VarDataset {
    observations: DMatrix<f64>,
    variable_names: Vec<String>,
    frequency: Option<String>,
}

impl VarDataset {
    pub fn new(
        observations: DMatrix<f64>,
        variable_names: Vec<String>,
        frequency: Option<String>,
    ) -> Result<Self> {
        if observations.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("dataset contains non-finite entries"));
        }
        if variable_names.len() != observations.ncols() {
            return Err(Error::dim(format!(
                "{} variable names for {} columns",
                variable_names.len(),
                observations.ncols()
            )));
        }
        Ok(VarDataset {
            observations,
            variable_names,
            frequency,
        })
    }

    /// Construct with autogenerated names y1..ym.
    pub fn from_matrix(observations: DMatrix<f64>) -> Result<Self> {
        let names = (1..=observations.ncols()).map(|i| format!("y{i}")).collect();
        Self::new(observations, names, None)
    }

    #[inline]
    pub fn t_len(&self) -> usize {
        self.observations.nrows()
    }

    #[inline]
    pub fn n_vars(&self) -> usize {
        self.observations.ncols()
    }

    pub fn observations(&self) -> &DMatrix<f64> {
        &self.observations
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn frequency(&self) -> Option<&str> {
        self.frequency.as_deref()
    }

    pub fn row(&self, t: usize) -> DVector<f64> {
        self.observations.row(t).transpose()
    }

    /// Contiguous sub-series over rows [start, end).
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<VarDataset> {
        if start >= end || end > self.t_len() {
            return Err(Error::dim(format!(
                "invalid window [{start}, {end}) for series of length {}",
                self.t_len()
            )));
        }
        Ok(VarDataset {
            observations: self.observations.rows(start, end - start).into_owned(),
            variable_names: self.variable_names.clone(),
            frequency: self.frequency.clone(),
        })
    }
}

/// Response block and lagged-regressor block for a fixed lag order.
///
/// Row t of X is (y'_{t-1}, ..., y'_{t-p}), lag one first, preceded by a
/// constant 1 when the intercept is enabled.
#[derive(Debug, Clone)]
pub struct LagDesign {
    p: usize,
    intercept: bool,
    y_eff: DMatrix<f64>,
    x: DMatrix<f64>,
}

impl LagDesign {
    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn intercept(&self) -> bool {
        self.intercept
    }

    /// Effective sample size T - p: the first p observations only condition
    /// the likelihood.
    #[inline]
    pub fn t_eff(&self) -> usize {
        self.y_eff.nrows()
    }

    #[inline]
    pub fn n_vars(&self) -> usize {
        self.y_eff.ncols()
    }

    /// Number of regressors k = m p (+1 with intercept).
    #[inline]
    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn responses(&self) -> &DMatrix<f64> {
        &self.y_eff
    }

    pub fn regressors(&self) -> &DMatrix<f64> {
        &self.x
    }
}

/// Stack the lagged design: Y_eff holds y_{p+1..T}, X holds the lag rows.
pub fn build_lag_design(data: &VarDataset, p: usize, intercept: bool) -> Result<LagDesign> {
    if p == 0 {
        return Err(Error::domain("lag order must be at least 1"));
    }
    if data.t_len() < p + 2 {
        return Err(Error::domain(format!(
            "need at least p + 2 = {} observations, got {}",
            p + 2,
            data.t_len()
        )));
    }
    let t = data.t_len();
    let m = data.n_vars();
    let rows = t - p;
    let k = m * p + usize::from(intercept);
    let obs = data.observations();
    let mut y_eff = DMatrix::zeros(rows, m);
    let mut x = DMatrix::zeros(rows, k);
    for r in 0..rows {
        let t_idx = p + r;
        for j in 0..m {
            y_eff[(r, j)] = obs[(t_idx, j)];
        }
        let mut col = 0;
        if intercept {
            x[(r, 0)] = 1.0;
            col = 1;
        }
        for lag in 1..=p {
            for j in 0..m {
                x[(r, col)] = obs[(t_idx - lag, j)];
                col += 1;
            }
        }
    }
    Ok(LagDesign {
        p,
        intercept,
        y_eff,
        x,
    })
}

/// Column-stacking vectorization: entry (i, j) of a k x m matrix maps to
/// position j k + i.
pub fn vectorize(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &DVector<f64>, k: usize, m: usize) -> Result<DMatrix<f64>> {
    if v.len() != k * m {
        return Err(Error::dim(format!(
            "vector of length {} cannot fill a {k}x{m} matrix",
            v.len()
        )));
    }
    Ok(DMatrix::from_column_slice(k, m, v.as_slice()))
}

/// Coefficients and error covariance of a VAR in stacked form (A is k x m).
#[derive(Debug, Clone)]
pub struct VarParameters {
    pub a: DMatrix<f64>,
    pub sigma: SpdMatrix,
}

/// Y_eff - X A.
pub fn residuals(design: &LagDesign, coeffs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if coeffs.nrows() != design.k() || coeffs.ncols() != design.n_vars() {
        return Err(Error::dim(format!(
            "coefficient matrix is {}x{}, design expects {}x{}",
            coeffs.nrows(),
            coeffs.ncols(),
            design.k(),
            design.n_vars()
        )));
    }
    Ok(design.responses() - design.regressors() * coeffs)
}

/// Spectral radius of the companion matrix of the lag polynomial.
pub fn companion_spectral_radius(coeffs: &[DMatrix<f64>]) -> Result<f64> {
    if coeffs.is_empty() {
        return Err(Error::domain("no coefficient matrices supplied"));
    }
    let m = coeffs[0].nrows();
    for (j, a) in coeffs.iter().enumerate() {
        if a.nrows() != m || a.ncols() != m {
            return Err(Error::dim(format!(
                "lag matrix {} is {}x{}, expected {m}x{m}",
                j + 1,
                a.nrows(),
                a.ncols()
            )));
        }
    }
    let p = coeffs.len();
    let n = m * p;
    let mut companion = DMatrix::zeros(n, n);
    for (j, a) in coeffs.iter().enumerate() {
        companion.view_mut((0, j * m), (m, m)).copy_from(a);
    }
    for i in m..n {
        companion[(i, i - m)] = 1.0;
    }
    Ok(companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Where the error covariance of a simulated system comes from.
#[derive(Debug, Clone)]
pub enum SigmaSource {
    Explicit(SpdMatrix),
    /// Sigma = X^-1 with X ~ W(nu, scale^-1), i.e. Sigma inverse-Wishart with
    /// the given scale. Valid for any nu >= m; no finite mean is required.
    InverseWishart { nu: usize, scale: SpdMatrix },
}

/// Transient length discarded before retaining the requested sample.
const WARM_UP: usize = 100;

/// Simulate a stationary VAR(p) from zero initial conditions (a 100-step
/// warm-up is discarded) and return the data together with the generating
/// parameters.
pub fn simulate_var<R: Rng + ?Sized>(
    t_len: usize,
    coeffs: &[DMatrix<f64>],
    sigma_source: &SigmaSource,
    rng: &mut R,
) -> Result<(VarDataset, VarParameters)> {
    let p = coeffs.len();
    if p == 0 || t_len < p + 2 {
        return Err(Error::domain(format!(
            "simulation needs p >= 1 and T >= p + 2, got p = {p}, T = {t_len}"
        )));
    }
    let m = coeffs[0].nrows();
    let radius = companion_spectral_radius(coeffs)?;
    if radius >= 1.0 {
        return Err(Error::RejectedConfiguration(format!(
            "companion spectral radius {radius:.4} >= 1: generated series would be explosive"
        )));
    }
    let sigma = match sigma_source {
        SigmaSource::Explicit(s) => {
            if s.dim() != m {
                return Err(Error::dim(format!(
                    "explicit covariance has dimension {}, coefficients have {m}",
                    s.dim()
                )));
            }
            s.clone()
        }
        SigmaSource::InverseWishart { nu, scale } => {
            if scale.dim() != m {
                return Err(Error::dim(format!(
                    "inverse-Wishart scale has dimension {}, coefficients have {m}",
                    scale.dim()
                )));
            }
            let precision = sample_wishart(*nu, &scale.inverse()?, rng)?;
            precision.inverse()?
        }
    };
    let zero = DVector::zeros(m);
    let mut history: Vec<DVector<f64>> = vec![DVector::zeros(m); p];
    let mut kept = DMatrix::zeros(t_len, m);
    for step in 0..(WARM_UP + t_len) {
        let mut next = sample_mvn(&zero, &sigma, rng)?;
        for (j, a) in coeffs.iter().enumerate() {
            next += a * &history[j];
        }
        // history[0] is y_{t-1}
        history.rotate_right(1);
        history[0] = next.clone();
        if step >= WARM_UP {
            kept.row_mut(step - WARM_UP).copy_from(&next.transpose());
        }
    }
    // stacked coefficient matrix: row-block j holds A_j'
    let k = m * p;
    let mut a_stacked = DMatrix::zeros(k, m);
    for (j, a) in coeffs.iter().enumerate() {
        a_stacked
            .view_mut((j * m, 0), (m, m))
            .copy_from(&a.transpose());
    }
    Ok((
        VarDataset::from_matrix(kept)?,
        VarParameters {
            a: a_stacked,
            sigma,
        },
    ))
}

/// A_1 = diag(c), all further lags zero: the default generator used by the
/// simulation studies. The coefficient matrices behind the studies are a
/// documented configuration choice, not an estimated quantity.
pub fn diagonal_coeffs(m: usize, p: usize, c: f64) -> Vec<DMatrix<f64>> {
    let mut coeffs = vec![DMatrix::zeros(m, m); p];
    coeffs[0] = DMatrix::identity(m, m) * c;
    coeffs
}
