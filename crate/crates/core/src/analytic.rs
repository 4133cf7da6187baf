//! Closed-form and approximate post-processing SINR laws.
//!
//! All per-stream laws are exponential; [`ExpDist`] carries them. Correlation
//! enters through `sigma^2 = [R~^{-1}]_nn` with `R~ = F* Rt F`, approximated
//! here by treating the matrix whose eigenvectors define `F` as complex
//! Wishart and using first- and second-order eigenvector moments.

use serde::{Deserialize, Serialize};

use crate::channel_model::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ComplexVector};
use crate::special;

/// Exponential law parameterized by its mean (linear SINR).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpDist {
    mean: f64,
}

impl ExpDist {
    pub fn new(mean: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::InvalidArgument(format!("exponential mean must be positive and finite, got {mean}")));
        }
        Ok(Self { mean })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            (-x / self.mean).exp() / self.mean
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-x / self.mean).exp_m1()
        }
    }

    /// `P(X > x)`.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            (-x / self.mean).exp()
        }
    }

    /// `P(lo < X <= hi)`, accurate in the far tail.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        if lo <= 0.0 {
            return self.cdf(hi);
        }
        // e^{-lo/m} (1 - e^{-(hi-lo)/m})
        -self.sf(lo) * (-(hi - lo) / self.mean).exp_m1()
    }

    /// Inverse cdf.
    pub fn quantile(&self, p: f64) -> f64 {
        -self.mean * (-p).ln_1p()
    }
}

/// Perfect-CSI, uncorrelated law: mean `gamma / d`.
pub fn pdf_perfect(gamma: f64, d: usize) -> Result<ExpDist> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    ExpDist::new(gamma / d as f64)
}

/// Bounds on `sigma^2`. `lower` is `None` where the formula is vacuous.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sigma2Bounds {
    pub lower: Option<f64>,
    pub upper: f64,
}

impl Sigma2Bounds {
    pub fn contains(&self, x: f64) -> bool {
        self.lower.is_none_or(|l| l <= x) && x <= self.upper
    }
}

/// Per-stream bounds on `sigma^2` for `d` streams (identical across streams).
///
/// With eigenvalues `l1 <= .. <= lN`: for `d = 1`, `[1/lN, 1/l1]`; otherwise
/// `lower = 1/l1 + (l1-lN)^2 / (l1 (l1 lN - d ||Rt||^2))` (spectral norm) and
/// `upper = (l1/lN + lN/l1 + 2) / (4 l1)`.
pub fn sigma2_bounds(rt: &CorrelationMatrix, d: usize) -> Result<Vec<Sigma2Bounds>> {
    let (l1, ln) = (rt.min_eigenvalue(), rt.max_eigenvalue());
    if !(l1 > 1e-12 * ln) {
        return Err(Error::Degenerate(format!("rank-deficient correlation (smallest eigenvalue {l1:e})")));
    }
    if d == 0 || d > rt.size() {
        return Err(Error::InvalidArgument(format!("{d} streams for {} antennas", rt.size())));
    }
    let bounds = if d == 1 {
        Sigma2Bounds { lower: Some(1.0 / ln), upper: 1.0 / l1 }
    } else {
        let denom = l1 * (l1 * ln - d as f64 * ln * ln);
        let lower = 1.0 / l1 + (l1 - ln).powi(2) / denom;
        let lower = (denom.abs() > 1e-12 && lower.is_finite() && lower > 0.0).then_some(lower);
        Sigma2Bounds { lower, upper: (l1 / ln + ln / l1 + 2.0) / (4.0 * l1) }
    };
    Ok(vec![bounds; d])
}

/// Large-sample eigenvector moments of a complex Wishart matrix with `dof`
/// degrees of freedom and covariance `Rt`.
///
/// Index `p` runs over eigenvalues in descending order, so `p = 0` is the
/// dominant eigenvector and `p = N - 1` the least dominant.
#[derive(Clone, Debug)]
pub struct EigvecMoments {
    values: Vec<f64>,
    vectors: ComplexMatrix,
    dof: f64,
}

impl EigvecMoments {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    /// `E{u~_p} = u_p`.
    pub fn mean(&self, p: usize) -> ComplexVector {
        self.vectors.column(p).into_owned()
    }

    /// `C[q, q'] = cov(u~_pq, u~_p'q')`.
    pub fn cov(&self, p: usize, pp: usize) -> ComplexMatrix {
        let n = self.values.len();
        let u = &self.vectors;
        let lp = self.values[p];
        if p == pp {
            let mut c = ComplexMatrix::zeros(n, n);
            for r in (0..n).filter(|&r| r != p) {
                let lr = self.values[r];
                let w = lp * lr / (self.dof * (lr - lp).powi(2));
                let ur = u.column(r);
                c += (ur * ur.adjoint()).scale(w);
            }
            c
        } else {
            let lq = self.values[pp];
            let w = -lp * lq / (self.dof * (lp - lq).powi(2));
            (u.column(p) * u.column(pp).adjoint()).scale(w)
        }
    }
}

/// Eigenvector moments; fails when two eigenvalues are closer than `1e-6`.
pub fn wishart_eigvec_moments(rt: &CorrelationMatrix, dof: usize) -> Result<EigvecMoments> {
    if dof == 0 {
        return Err(Error::InvalidArgument("Wishart degrees of freedom must be positive".into()));
    }
    let eig = rt.eigen();
    let n = eig.values.len();
    let values: Vec<f64> = eig.values.iter().rev().copied().collect();
    if let Some(gap) = values.windows(2).map(|w| w[0] - w[1]).find(|&g| g < 1e-6) {
        return Err(Error::EigenvalueGap { gap });
    }
    Ok(EigvecMoments { values, vectors: eig.largest(n), dof: dof as f64 })
}

/// Approximate `R~_i` for one user together with `sigma^2` and its bounds.
#[derive(Clone, Debug)]
pub struct RtildeApprox {
    pub matrix: ComplexMatrix,
    pub sigma2: Vec<f64>,
    pub bounds: Vec<Sigma2Bounds>,
}

/// Approximates `R~_i = F_i* Rt F_i` for user `user`.
///
/// The precoder-defining matrix is taken as Wishart with
/// `sum_{k != i} d_k` degrees of freedom and covariance `Rt`; column `m` of
/// `F_i` is its `m`-th least-dominant eigenvector. Entry `(n, m)` is
/// `tr((cov(f_m, f_n) + u_m u_n*) Rt)`, then rows and columns are rescaled by
/// `1/sqrt(t_n t_m)`, `t_m = E||f_m||^2`, so every column has unit expected
/// norm. Uncorrelated `Rt` short-circuits to `R~ = I`.
pub fn approx_rtilde(rt: &CorrelationMatrix, streams: &[usize], user: usize) -> Result<RtildeApprox> {
    let d = *streams
        .get(user)
        .ok_or_else(|| Error::InvalidArgument(format!("user {user} out of {}", streams.len())))?;
    let bounds = sigma2_bounds(rt, d)?;
    if rt.is_identity() {
        return Ok(RtildeApprox { matrix: linalg::identity(d), sigma2: vec![1.0; d], bounds });
    }
    let dof: usize = streams.iter().enumerate().filter(|&(k, _)| k != user).map(|(_, &d)| d).sum();
    let moments = wishart_eigvec_moments(rt, dof)?;
    let n_ant = rt.size();
    let idx = |m: usize| n_ant - 1 - m;
    let second = |m: usize, n: usize| {
        let (pm, pn) = (idx(m), idx(n));
        moments.cov(pm, pn) + moments.mean(pm) * moments.mean(pn).adjoint()
    };
    let norms: Vec<f64> = (0..d).map(|m| linalg::trace(&second(m, m)).re).collect();
    let mut matrix = ComplexMatrix::zeros(d, d);
    for n in 0..d {
        for m in 0..d {
            let raw = linalg::trace(&(second(m, n) * rt.matrix()));
            matrix[(n, m)] = raw / (norms[n] * norms[m]).sqrt();
        }
    }
    let matrix = linalg::hermitian_part(&matrix);
    let inv = linalg::checked_inverse(&matrix)?;
    let sigma2 = (0..d).map(|n| inv[(n, n)].re).collect();
    Ok(RtildeApprox { matrix, sigma2, bounds })
}

/// Moment-matched single Wishart for a sum of independent Wisharts
/// `W_i(d_i, R_i)`: returns `(d_bar, R_bar)`.
pub fn wishart_sum_approx(parts: &[(f64, ComplexMatrix)]) -> Result<(f64, ComplexMatrix)> {
    let first = parts.first().ok_or_else(|| Error::InvalidArgument("empty Wishart sum".into()))?;
    let n = first.1.nrows();
    if parts.iter().any(|(_, r)| r.nrows() != n || r.ncols() != n) {
        return Err(Error::Shape("Wishart sum parts must share one square size".into()));
    }
    let mut total = ComplexMatrix::zeros(n, n);
    let mut denom = 0.0;
    for (d, r) in parts {
        total += r.scale(*d);
        denom += d * (linalg::trace(&(r * r)).re + linalg::trace(r).re.powi(2));
    }
    let d_bar = (linalg::trace(&(&total * &total)).re + linalg::trace(&total).re.powi(2)) / denom;
    Ok((d_bar, total.unscale(d_bar)))
}

/// `sum_i tr(R~_i) / d_i` over per-user approximations.
pub fn cal_i(rtilde: &[RtildeApprox]) -> f64 {
    rtilde.iter().map(|r| linalg::trace(&r.matrix).re / r.matrix.nrows() as f64).sum()
}

/// Per-user approximations and the resulting `cal_i`; exactly `K` when `Rt = I`.
pub fn cal_i_for(rt: &CorrelationMatrix, streams: &[usize]) -> Result<(Vec<RtildeApprox>, f64)> {
    let per_user = (0..streams.len()).map(|i| approx_rtilde(rt, streams, i)).collect::<Result<Vec<_>>>()?;
    let value = if rt.is_identity() { streams.len() as f64 } else { cal_i(&per_user) };
    Ok((per_user, value))
}

/// Imperfect-CSI law with mean `(1-beta^2) / (sigma^2 d (beta^2 I + 1/gamma))`.
pub fn pdf_ci(gamma: f64, d: usize, beta: f64, sigma2: f64, cal_i: f64) -> Result<ExpDist> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta = {beta} outside [0, 1)")));
    }
    let b2 = beta * beta;
    ExpDist::new((1.0 - b2) / (sigma2 * d as f64 * (b2 * cal_i + 1.0 / gamma)))
}

/// Per-stream laws of `N`-stream ZF spatial multiplexing:
/// mean `(1-beta^2) / ([Rt^{-1}]_nn (beta^2 tr(Rt) + N/gamma))`.
pub fn pdf_sm(gamma: f64, beta: f64, rt: &CorrelationMatrix) -> Result<Vec<ExpDist>> {
    let inv = rt.inverse()?;
    let n = rt.size() as f64;
    let b2 = beta * beta;
    (0..rt.size())
        .map(|s| ExpDist::new((1.0 - b2) / (inv[(s, s)].re * (b2 * rt.trace() + n / gamma))))
        .collect()
}

/// `nu = E{v1* Rt v1}` for the dominant eigenvector of a Wishart with `N`
/// degrees of freedom, normalized like [`approx_rtilde`].
pub fn bf_mean_nu(rt: &CorrelationMatrix) -> Result<f64> {
    if rt.is_identity() {
        return Ok(1.0);
    }
    let moments = wishart_eigvec_moments(rt, rt.size())?;
    let second = moments.cov(0, 0) + moments.mean(0) * moments.mean(0).adjoint();
    Ok(linalg::trace(&(&second * rt.matrix())).re / linalg::trace(&second).re)
}

/// Integral of an [`ExpDist`] pdf over `[0, inf)` by quadrature.
pub fn pdf_mass(dist: &ExpDist) -> f64 {
    special::integrate_half_line(|x| dist.pdf(x), dist.mean(), 1e-12)
}
