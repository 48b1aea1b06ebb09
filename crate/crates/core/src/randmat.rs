//! SPD matrices, reproducible RNG streams, multivariate normal and Wishart
//! sampling, and the exact Wishart log-density.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{multivariate_log_gamma, Dimension};

/// Relative tolerance for the symmetry check on SPD inputs.
const SYMMETRY_RTOL: f64 = 1e-10;

/// A validated symmetric positive definite matrix.
///
/// Construction checks symmetry (to 1e-10 relative tolerance) and positive
/// definiteness (Cholesky succeeds). The inner matrix is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    inner: DMatrix<f64>,
}

impl SpdMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::dim(format!(
                "SPD matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("SPD matrix contains non-finite entries"));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        for i in 0..matrix.nrows() {
            for j in (i + 1)..matrix.ncols() {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_RTOL * scale {
                    return Err(Error::domain(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        if Cholesky::new(matrix.clone()).is_none() {
            return Err(Error::NotPositiveDefinite(
                "Cholesky factorization failed".into(),
            ));
        }
        Ok(SpdMatrix { inner: matrix })
    }

    /// Symmetrize (X + X')/2 first, then validate. Used for matrices assembled
    /// from floating-point products where rounding breaks exact symmetry.
    pub fn from_symmetrized(matrix: DMatrix<f64>) -> Result<Self> {
        let sym = (&matrix + matrix.transpose()) * 0.5;
        Self::new(sym)
    }

    pub fn identity(dim: usize) -> Self {
        SpdMatrix {
            inner: DMatrix::identity(dim, dim),
        }
    }

    /// c * I with c > 0.
    pub fn scaled_identity(dim: usize, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::domain(format!(
                "scaled identity requires c > 0, got {c}"
            )));
        }
        Ok(SpdMatrix {
            inner: DMatrix::identity(dim, dim) * c,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    #[inline]
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        Cholesky::new(self.inner.clone()).ok_or_else(|| {
            Error::NotPositiveDefinite("Cholesky factorization failed".into())
        })
    }

    /// Lower-triangular Cholesky factor L with L L' = self.
    pub fn chol_lower(&self) -> Result<DMatrix<f64>> {
        Ok(self.cholesky()?.unpack())
    }

    pub fn log_det(&self) -> Result<f64> {
        let chol = self.cholesky()?;
        let l = chol.l_dirty();
        let mut acc = 0.0;
        for i in 0..self.dim() {
            acc += l[(i, i)].ln();
        }
        Ok(2.0 * acc)
    }

    pub fn inverse(&self) -> Result<SpdMatrix> {
        let inv = self.cholesky()?.inverse();
        SpdMatrix::from_symmetrized(inv)
    }
}

/// A named position in a counter-based RNG: the same (seed, stream_id) always
/// reproduces the same draw sequence, and distinct stream ids give
/// statistically independent streams. Streams are values: hand each worker its
/// own derived stream instead of sharing one generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

/// SplitMix64 finalizer, used to mix derivation tags into stream ids.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combine tag words into a single derivation tag.
pub fn mix_tags(words: &[u64]) -> u64 {
    let mut acc = 0x243f_6a88_85a3_08d3u64; // arbitrary non-zero start
    for &w in words {
        acc = mix64(acc ^ w);
    }
    acc
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Instantiate the generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derive an independent child stream for a tagged sub-task.
    pub fn derive(&self, tag: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: mix64(self.stream_id ^ mix64(tag)),
        }
    }
}

/// mean + L z for a standard normal vector z and L = chol(cov). Split out so
/// tests can drive it with a fixed z.
pub fn mvn_from_standard(mean: &DVector<f64>, chol_lower: &DMatrix<f64>, z: &DVector<f64>) -> DVector<f64> {
    mean + chol_lower * z
}

/// One draw from N(mean, cov).
pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &SpdMatrix,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if mean.len() != cov.dim() {
        return Err(Error::dim(format!(
            "mean length {} does not match covariance dimension {}",
            mean.len(),
            cov.dim()
        )));
    }
    let l = cov.chol_lower()?;
    let z = standard_normal_vector(mean.len(), rng);
    Ok(mvn_from_standard(mean, &l, &z))
}

pub(crate) fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

/// Chi-squared draw with integer degrees of freedom via Gamma(df/2, 2)
/// (Marsaglia-Tsang under the hood, squeeze-free and deterministic given the
/// stream).
fn sample_chi_squared<R: Rng + ?Sized>(df: u64, rng: &mut R) -> f64 {
    let gamma = Gamma::new(df as f64 / 2.0, 2.0).expect("df/2 > 0 by construction");
    gamma.sample(rng)
}

/// One Wishart draw W(nu, scale) via the Bartlett decomposition:
/// X = L A A' L' with L = chol(scale), A lower-triangular with
/// chi-squared diagonal squares (df nu, nu-1, ...) and standard normal
/// subdiagonals. Cost is O(m^3) per draw independent of nu.
pub fn sample_wishart<R: Rng + ?Sized>(
    nu: usize,
    scale: &SpdMatrix,
    rng: &mut R,
) -> Result<SpdMatrix> {
    let m = scale.dim();
    if nu < m {
        return Err(Error::domain(format!(
            "Wishart degrees of freedom {nu} below dimension {m}"
        )));
    }
    let l = scale.chol_lower()?;
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = sample_chi_squared((nu - i) as u64, rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let la = &l * a;
    let x = &la * la.transpose();
    // symmetrize to absorb rounding before the SPD validation
    SpdMatrix::from_symmetrized(x)
}

/// Log-density of the Wishart W(x | scale, nu):
/// ((nu-m-1)/2) ln|x| - tr(scale^-1 x)/2 - (nu m/2) ln 2
///   - (nu/2) ln|scale| - ln Gamma_m(nu/2).
pub fn wishart_log_density(x: &SpdMatrix, nu: usize, scale: &SpdMatrix) -> Result<f64> {
    let m = scale.dim();
    if x.dim() != m {
        return Err(Error::dim(format!(
            "density argument has dimension {} but scale has {}",
            x.dim(),
            m
        )));
    }
    if nu < m {
        return Err(Error::domain(format!(
            "Wishart degrees of freedom {nu} below dimension {m}"
        )));
    }
    let dm = Dimension::new(m)?;
    let nu_f = nu as f64;
    let m_f = m as f64;
    let ln_det_x = x.log_det()?;
    let ln_det_scale = scale.log_det()?;
    let trace = scale.cholesky()?.solve(x.as_matrix()).trace();
    Ok((nu_f - m_f - 1.0) / 2.0 * ln_det_x
        - 0.5 * trace
        - nu_f * m_f / 2.0 * std::f64::consts::LN_2
        - nu_f / 2.0 * ln_det_scale
        - multivariate_log_gamma(dm, nu_f / 2.0)?)
}
