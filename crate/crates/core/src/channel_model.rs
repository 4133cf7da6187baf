//! Correlated Rayleigh channels and their Gauss-Markov observations.
//!
//! Every link is `H = (sqrt(1 - beta^2) Hw_obs + beta E) Rt^{1/2}` and the
//! nodes only see `Hw_obs Rt^{1/2}`. Both `Hw_obs` and `E` have i.i.d. CN(0,1)
//! entries. Transmit correlation is shared by all links.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, HermitianEigen};
use crate::scenario::Scenario;

/// Hermitian positive semidefinite transmit correlation with trace `N`.
#[derive(Clone, Debug)]
pub struct CorrelationMatrix {
    matrix: ComplexMatrix,
    eigen: HermitianEigen,
    sqrt: ComplexMatrix,
}

impl CorrelationMatrix {
    /// Validates `matrix` and rescales it so that its trace equals its size.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Shape(format!(
                "correlation matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = linalg::hermitian_defect(&matrix);
        if defect > 1e-12 {
            return Err(Error::NotHermitian(defect));
        }
        let n = matrix.nrows() as f64;
        let tr = linalg::trace(&matrix).re;
        if !(tr > 0.0) {
            return Err(Error::NotPsd { min_eigenvalue: tr });
        }
        let matrix = linalg::hermitian_part(&matrix).scale(n / tr);
        let sqrt = linalg::psd_sqrt(&matrix)?;
        let eigen = linalg::hermitian_eigen(&matrix);
        Ok(Self { matrix, eigen, sqrt })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(linalg::identity(n)).expect("identity is a valid correlation matrix")
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Principal square root `Rt^{1/2}`.
    pub fn sqrt(&self) -> &ComplexMatrix {
        &self.sqrt
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen.values[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigen.values.last().unwrap()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn is_identity(&self) -> bool {
        linalg::frob(&(&self.matrix - linalg::identity(self.size()))) < 1e-12
    }

    /// `Rt^{-1}`; fails for rank-deficient correlation.
    pub fn inverse(&self) -> Result<ComplexMatrix> {
        linalg::checked_inverse(&self.matrix)
    }
}

/// Exponential (uniform linear array) correlation `Rt(i,j) = alpha^(j-i)` for
/// `j >= i`, completed Hermitian below the diagonal.
pub fn exp_correlation_matrix(alpha: Complex64, n: usize) -> Result<CorrelationMatrix> {
    if !(alpha.norm() < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha.norm()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("correlation matrix of size 0".into()));
    }
    let m = ComplexMatrix::from_fn(n, n, |i, j| {
        if j >= i {
            alpha.powu((j - i) as u32)
        } else {
            alpha.conj().powu((i - j) as u32)
        }
    });
    CorrelationMatrix::new(m)
}

/// `K x K` array of link matrices; `get(i, k)` is receiver `i` from transmitter `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkArray {
    users: usize,
    links: Vec<ComplexMatrix>,
}

impl LinkArray {
    pub fn from_fn(users: usize, mut f: impl FnMut(usize, usize) -> ComplexMatrix) -> Self {
        let mut links = Vec::with_capacity(users * users);
        for i in 0..users {
            for k in 0..users {
                links.push(f(i, k));
            }
        }
        Self { users, links }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn get(&self, rx: usize, tx: usize) -> &ComplexMatrix {
        &self.links[rx * self.users + tx]
    }

    pub fn set(&mut self, rx: usize, tx: usize, h: ComplexMatrix) {
        self.links[rx * self.users + tx] = h;
    }

    pub fn shape(&self) -> (usize, usize) {
        let h = &self.links[0];
        (h.nrows(), h.ncols())
    }
}

/// One Monte-Carlo draw of every link, true and observed.
///
/// `error_h` holds the white error term `E Rt^{1/2}` before scaling by `beta`,
/// so that `true_h = sqrt(1 - beta^2) obs_h + beta error_h`.
#[derive(Clone, Debug)]
pub struct ChannelSet {
    pub true_h: LinkArray,
    pub obs_h: LinkArray,
    pub error_h: LinkArray,
    pub rt: Arc<CorrelationMatrix>,
    pub beta: f64,
}

impl ChannelSet {
    /// The same draw with a different CSI error level.
    pub fn with_beta(&self, beta: f64) -> ChannelSet {
        ChannelSet {
            true_h: combine(&self.obs_h, &self.error_h, beta),
            obs_h: self.obs_h.clone(),
            error_h: self.error_h.clone(),
            rt: Arc::clone(&self.rt),
            beta,
        }
    }
}

fn combine(obs: &LinkArray, err: &LinkArray, beta: f64) -> LinkArray {
    if beta == 0.0 {
        return obs.clone();
    }
    let keep = (1.0 - beta * beta).sqrt();
    LinkArray {
        users: obs.users,
        links: obs.links.iter().zip(&err.links).map(|(o, e)| o.scale(keep) + e.scale(beta)).collect(),
    }
}

/// Draws channel sets for a fixed scenario; holds the precomputed `Rt^{1/2}`.
#[derive(Clone, Debug)]
pub struct ChannelSampler {
    users: usize,
    nr: usize,
    nt: usize,
    beta: f64,
    rt: Arc<CorrelationMatrix>,
}

impl ChannelSampler {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let rt = exp_correlation_matrix(scenario.alpha, scenario.nt)?;
        Ok(Self::with_correlation(scenario, Arc::new(rt)))
    }

    pub fn with_correlation(scenario: &Scenario, rt: Arc<CorrelationMatrix>) -> Self {
        assert_eq!(rt.size(), scenario.nt, "correlation size must match Nt");
        Self {
            users: scenario.users,
            nr: scenario.nr,
            nt: scenario.nt,
            beta: scenario.beta,
            rt,
        }
    }

    pub fn correlation(&self) -> &Arc<CorrelationMatrix> {
        &self.rt
    }

    /// Draws every link independently. For each link, in order `(0,0), (0,1),
    /// ..`, the observation `Hw_obs` is drawn and then the error `E`, so the
    /// observed channels of a trial do not depend on `beta`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSet {
        let sqrt = self.rt.sqrt();
        let mut obs = Vec::with_capacity(self.users * self.users);
        let mut err = Vec::with_capacity(self.users * self.users);
        for _ in 0..self.users * self.users {
            let hw = linalg::complex_gaussian(rng, self.nr, self.nt);
            let e = linalg::complex_gaussian(rng, self.nr, self.nt);
            obs.push(&hw * sqrt);
            err.push(&e * sqrt);
        }
        let obs_h = LinkArray { users: self.users, links: obs };
        let error_h = LinkArray { users: self.users, links: err };
        ChannelSet {
            true_h: combine(&obs_h, &error_h, self.beta),
            obs_h,
            error_h,
            rt: Arc::clone(&self.rt),
            beta: self.beta,
        }
    }
}

pub fn sample_channel_set<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<ChannelSet> {
    Ok(ChannelSampler::new(scenario)?.sample(rng))
}

/// Diagonal entries of `Rt^{-1}`.
pub fn inverse_diagonal(rt: &CorrelationMatrix) -> Result<Vec<f64>> {
    let inv = rt.inverse()?;
    Ok(inv.diagonal().iter().map(|z| z.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cx;
    use crate::rng::SeedStream;

    #[test]
    fn zero_alpha_is_identity() {
        let r = exp_correlation_matrix(cx(0.0, 0.0), 2).unwrap();
        assert!(r.is_identity());
    }

    #[test]
    fn real_alpha_two_by_two() {
        let r = exp_correlation_matrix(cx(0.5, 0.0), 2).unwrap();
        assert!((r.matrix()[(0, 1)].re - 0.5).abs() < 1e-15);
        assert!((r.eigenvalues()[0] - 0.5).abs() < 1e-12);
        assert!((r.eigenvalues()[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn table_alpha_magnitude() {
        let r = exp_correlation_matrix(cx(0.8193, 0.1101), 2).unwrap();
        assert!((r.matrix()[(0, 1)].norm() - 0.8267).abs() < 5e-5);
        assert_eq!(r.matrix()[(1, 0)], r.matrix()[(0, 1)].conj());
    }

    #[test]
    fn alpha_on_unit_circle_rejected() {
        assert!(matches!(
            exp_correlation_matrix(cx(0.6, 0.8), 3),
            Err(Error::AlphaOutOfRange(_))
        ));
    }

    #[test]
    fn sqrt_squares_back() {
        let r = exp_correlation_matrix(cx(0.5, 0.0), 2).unwrap();
        let s = r.sqrt();
        assert!(linalg::frob(&(s * s - r.matrix())) < 1e-10);
    }

    #[test]
    fn perfect_csi_observation_is_truth() {
        let sc = Scenario::symmetric(3, 2, 1).with_alpha(cx(0.3, 0.1));
        let ch = sample_channel_set(&sc, &mut SeedStream::new(5).trial(0)).unwrap();
        assert_eq!(ch.true_h, ch.obs_h);
    }

    #[test]
    fn observation_does_not_depend_on_beta() {
        let sc = Scenario::symmetric(3, 2, 1);
        let a = sample_channel_set(&sc, &mut SeedStream::new(5).trial(3)).unwrap();
        let b = sample_channel_set(&sc.clone().with_beta(0.4), &mut SeedStream::new(5).trial(3)).unwrap();
        assert_eq!(a.obs_h, b.obs_h);
        assert_ne!(a.true_h, b.true_h);
    }
}
