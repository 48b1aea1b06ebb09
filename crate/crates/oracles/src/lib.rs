//! Brute-force reference implementations used as oracles by the test suites.
//!
//! Everything in this crate is deliberately slow, simple and independent of
//! the production code paths it is used to check. Do not depend on this crate
//! outside of `dev-dependencies`.

use nalgebra::DMatrix;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Reference log-gamma via the Stirling series after shifting the argument
/// above 32. Series truncation is negligible there; the shift-and-subtract
/// construction leaves a few 1e-14 of absolute rounding, two orders below
/// the 1e-12 tolerances this oracle backs.
pub fn lgamma_ref(x: f64) -> f64 {
    assert!(x > 0.0 && x.is_finite(), "lgamma_ref requires x > 0");
    let mut shift = 0.0;
    let mut y = x;
    while y < 32.0 {
        shift += y.ln();
        y += 1.0;
    }
    // Stirling coefficients B_{2j} / (2j (2j-1))
    let r = 1.0 / y;
    let r2 = r * r;
    let series = r
        * (1.0 / 12.0
            - r2 * (1.0 / 360.0
                - r2 * (1.0 / 1260.0
                    - r2 * (1.0 / 1680.0
                        - r2 * (1.0 / 1188.0
                            - r2 * (691.0 / 360_360.0 - r2 * (1.0 / 156.0)))))));
    (y - 0.5) * y.ln() - y + 0.5 * (2.0 * std::f64::consts::PI).ln() + series - shift
}

/// Reference digamma: recurrence up to 64, then the asymptotic expansion.
pub fn digamma_ref(x: f64) -> f64 {
    assert!(x > 0.0 && x.is_finite(), "digamma_ref requires x > 0");
    let mut acc = 0.0;
    let mut y = x;
    while y < 64.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let r = 1.0 / y;
    let r2 = r * r;
    let series = r2
        * (1.0 / 12.0
            - r2 * (1.0 / 120.0
                - r2 * (1.0 / 252.0
                    - r2 * (1.0 / 240.0 - r2 * (1.0 / 132.0 - r2 * (691.0 / 32_760.0))))));
    acc + y.ln() - 0.5 * r - series
}

/// Log-density of Gamma(shape, scale) at x. Used for the m = 1 Wishart
/// equivalence check: W(nu, s) in one dimension is Gamma(nu/2, 2s).
pub fn gamma_log_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    assert!(x > 0.0 && shape > 0.0 && scale > 0.0);
    (shape - 1.0) * x.ln() - x / scale - shape * scale.ln() - lgamma_ref(shape)
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, lm, flm, left, tol * 0.5, depth - 1)
                + recurse(f, m, fm, b, fb, rm, frm, right, tol * 0.5, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Normalize a discrete log-weight function over an inclusive support into a
/// probability vector, via log-sum-exp.
pub fn enumerate_pmf<F: Fn(usize) -> f64>(log_w: F, lo: usize, hi: usize) -> Vec<f64> {
    let logs: Vec<f64> = (lo..=hi).map(log_w).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    unnorm.into_iter().map(|w| w / total).collect()
}

/// Total variation distance between two pmfs on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Exact CRPS of a discrete predictive distribution against outcome y,
/// evaluated as the integral of (F(z) - 1{y <= z})^2 over the real line.
/// The integrand is piecewise constant between the breakpoints, so the
/// integral is a finite sum over segments.
pub fn crps_exact_discrete(points: &[f64], weights: &[f64], y: f64) -> f64 {
    assert_eq!(points.len(), weights.len());
    assert!(!points.is_empty());
    let total: f64 = weights.iter().sum();
    let mut breaks: Vec<f64> = points.to_vec();
    breaks.push(y);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let mut integral = 0.0;
    for pair in breaks.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        // value of F and the indicator on the open segment (lo, hi)
        let cdf: f64 = points
            .iter()
            .zip(weights)
            .filter(|(p, _)| **p <= lo)
            .map(|(_, w)| *w)
            .sum::<f64>()
            / total;
        let ind = if y <= lo { 1.0 } else { 0.0 };
        integral += (cdf - ind) * (cdf - ind) * (hi - lo);
    }
    integral
}

/// Naive double-loop root mean absolute deviation.
pub fn naive_rmad(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    assert_eq!(estimate.shape(), truth.shape());
    let mut acc = 0.0;
    for i in 0..estimate.nrows() {
        for j in 0..estimate.ncols() {
            acc += (estimate[(i, j)] - truth[(i, j)]).abs();
        }
    }
    (acc / (estimate.nrows() * estimate.ncols()) as f64).sqrt()
}

/// Naive RMSE over per-window scalar errors.
pub fn naive_rmse(forecasts: &[f64], realized: &[f64]) -> f64 {
    assert_eq!(forecasts.len(), realized.len());
    assert!(!forecasts.is_empty());
    let ss: f64 = forecasts
        .iter()
        .zip(realized)
        .map(|(f, y)| (f - y) * (f - y))
        .sum();
    (ss / forecasts.len() as f64).sqrt()
}

/// Dense Kronecker product, row-major loops.
pub fn naive_kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Spectral radius of a 3x3 matrix by solving the characteristic cubic with
/// Cardano's formula. Only valid for real input matrices.
pub fn spectral_radius_3x3(m: &DMatrix<f64>) -> f64 {
    assert_eq!(m.shape(), (3, 3));
    // characteristic polynomial lambda^3 + p2 lambda^2 + p1 lambda + p0
    let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
    let m2 = m * m;
    let tr2 = m2[(0, 0)] + m2[(1, 1)] + m2[(2, 2)];
    let det = m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
    let p2 = -tr;
    let p1 = 0.5 * (tr * tr - tr2);
    let p0 = -det;
    // depressed cubic t^3 + pt + q with lambda = t - p2/3
    let shift = p2 / 3.0;
    let p = p1 - p2 * p2 / 3.0;
    let q = 2.0 * p2 * p2 * p2 / 27.0 - p2 * p1 / 3.0 + p0;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let roots: Vec<(f64, f64)> = if disc > 0.0 {
        // one real root, two complex conjugates
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        let real = u + v;
        let re = -real / 2.0;
        let im = (u - v) * 3.0_f64.sqrt() / 2.0;
        vec![(real, 0.0), (re, im), (re, -im)]
    } else {
        // three real roots (trigonometric form)
        let r = (-p * p * p / 27.0).sqrt();
        let phi = (-q / (2.0 * r)).clamp(-1.0, 1.0).acos();
        let c = 2.0 * (-p / 3.0).sqrt();
        (0..3)
            .map(|k| {
                (
                    c * ((phi + 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos(),
                    0.0,
                )
            })
            .collect()
    };
    roots
        .iter()
        .map(|(re, im)| ((re - shift) * (re - shift) + im * im).sqrt())
        .fold(0.0, f64::max)
}

/// Closed-form posterior moments of the slope in the one-dimensional model
/// y = x beta + eps with a flat prior on beta and precision prior
/// Gamma(nu0/2, rate s0/2): the marginal posterior of beta is a Student t
/// centered at the least-squares estimate.
pub fn scalar_conjugate_posterior(x: &[f64], y: &[f64], nu0: f64, s0: f64) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let beta_hat = sxy / sxx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - beta_hat * a) * (b - beta_hat * a))
        .sum();
    let df = nu0 + n - 1.0;
    let var = (s0 + rss) / (df - 2.0) / sxx;
    (beta_hat, var)
}

/// Median of a slice (not in place).
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty());
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample mean and variance (denominator n).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}
