//! Interference-alignment precoders by alternating minimization.
//!
//! The solver alternates between two exact subproblems on the observed
//! channels:
//!
//! * precoders: `F_i` spans the `d_i` least dominant eigenvectors of
//!   `sum_{k != i} H_ki* (I - C_k C_k*) H_ki`;
//! * interference bases: `C_i` spans the `Nr - d_i` dominant eigenvectors of
//!   `sum_{k != i} H_ik F_k F_k* H_ik*`.
//!
//! Each step minimizes the total leakage
//! `sum_i sum_{k != i} ||(I - C_i C_i*) H_ik F_k||_F^2` over its own block of
//! variables, so the leakage never increases. Direct links `H_ii` are never
//! read.

use rand::Rng;

use crate::channel_model::LinkArray;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub reason: String,
}

/// Properness count: every user needs `Nt + Nr - 2 d_i >= sum_{k != i} d_k`,
/// i.e. at least as many free variables in its precoder and interference
/// basis as alignment equations it takes part in. For symmetric streams this
/// is `Nt + Nr >= (K + 1) d`.
pub fn check_feasibility(users: usize, nt: usize, nr: usize, streams: &[usize]) -> FeasibilityReport {
    let fail = |reason: String| FeasibilityReport { feasible: false, reason };
    if users < 2 {
        return fail(format!("K = {users}: alignment needs at least two users"));
    }
    if streams.len() != users {
        return fail(format!("{} stream counts for {users} users", streams.len()));
    }
    let total: usize = streams.iter().sum();
    for (i, &d) in streams.iter().enumerate() {
        if d == 0 || d > nt.min(nr) {
            return fail(format!("user {i}: d = {d} outside 1..={}", nt.min(nr)));
        }
        let variables = nt + nr - 2 * d;
        let equations = total - d;
        if variables < equations {
            return fail(format!(
                "user {i}: Nt + Nr - 2d = {variables} < {equations} interfering streams (improper)"
            ));
        }
    }
    FeasibilityReport {
        feasible: true,
        reason: format!("proper: Nt + Nr = {} covers every user's alignment equations", nt + nr),
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Keep the leakage after every iteration in [`IaSolution::history`].
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 5000, record_history: false }
    }
}

#[derive(Clone, Debug)]
pub struct IaSolution {
    /// `F_i`, `Nt x d_i` with orthonormal columns.
    pub precoders: Vec<ComplexMatrix>,
    /// `C_i`, `Nr x (Nr - d_i)` with orthonormal columns.
    pub bases: Vec<ComplexMatrix>,
    pub leakage: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

impl IaSolution {
    pub fn converged(&self, tol: f64) -> bool {
        self.leakage < tol
    }

    pub fn streams(&self) -> Vec<usize> {
        self.precoders.iter().map(|f| f.ncols()).collect()
    }
}

/// Runs alternating minimization from Haar-random interference bases drawn
/// from `rng`.
///
/// Non-convergence is not an error: the returned solution simply carries a
/// leakage at or above `cfg.tol`.
pub fn alternating_min<R: Rng + ?Sized>(
    h: &LinkArray,
    streams: &[usize],
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<IaSolution> {
    let (nr, nt) = h.shape();
    let report = check_feasibility(h.users(), nt, nr, streams);
    if !report.feasible {
        return Err(Error::Infeasible(report.reason));
    }
    alternating_min_unchecked(h, streams, cfg, rng)
}

/// [`alternating_min`] without the properness gate, for studying networks
/// that cannot be aligned. Stream counts must still fit the antennas.
pub fn alternating_min_unchecked<R: Rng + ?Sized>(
    h: &LinkArray,
    streams: &[usize],
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<IaSolution> {
    let users = h.users();
    let (nr, nt) = h.shape();
    if streams.len() != users || streams.iter().any(|&d| d == 0 || d > nt.min(nr)) {
        return Err(Error::Shape(format!("stream counts {streams:?} do not fit {users} users of {nr}x{nt}")));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {} must be positive", cfg.tol)));
    }

    let mut bases: Vec<ComplexMatrix> =
        streams.iter().map(|&d| linalg::haar_basis(rng, nr, nr - d)).collect();
    let mut precoders: Vec<ComplexMatrix> = streams.iter().map(|&d| ComplexMatrix::zeros(nt, d)).collect();
    let mut leakage = f64::INFINITY;
    let mut history = Vec::new();
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;

        let projectors: Vec<ComplexMatrix> = bases.iter().map(linalg::complement_projector).collect();
        for i in 0..users {
            let mut s = ComplexMatrix::zeros(nt, nt);
            for k in (0..users).filter(|&k| k != i) {
                let hki = h.get(k, i);
                s += hki.adjoint() * &projectors[k] * hki;
            }
            precoders[i] = linalg::hermitian_eigen(&s).smallest(streams[i]);
        }

        // with C_i fixed to the dominant eigenvectors of Q_i, user i leaks
        // exactly the sum of the discarded eigenvalues
        leakage = 0.0;
        for i in 0..users {
            let mut q = ComplexMatrix::zeros(nr, nr);
            for k in (0..users).filter(|&k| k != i) {
                let g = h.get(i, k) * &precoders[k];
                q += &g * g.adjoint();
            }
            let eig = linalg::hermitian_eigen(&q);
            leakage += eig.values[..streams[i]].iter().map(|v| v.max(0.0)).sum::<f64>();
            bases[i] = eig.largest(nr - streams[i]);
        }

        if cfg.record_history {
            history.push(leakage);
        }
        if leakage < cfg.tol {
            break;
        }
    }

    Ok(IaSolution { precoders, bases, leakage, iterations, history })
}

fn leakage_of(h: &LinkArray, precoders: &[ComplexMatrix], bases: &[ComplexMatrix]) -> f64 {
    let users = h.users();
    let mut total = 0.0;
    for i in 0..users {
        let proj = linalg::complement_projector(&bases[i]);
        for k in (0..users).filter(|&k| k != i) {
            total += linalg::frob2(&(&proj * h.get(i, k) * &precoders[k]));
        }
    }
    total
}

fn check_shapes(sol: &IaSolution, h: &LinkArray) -> Result<()> {
    let users = h.users();
    let (nr, nt) = h.shape();
    if sol.precoders.len() != users || sol.bases.len() != users {
        return Err(Error::Shape(format!(
            "solution for {} users, channels for {users}",
            sol.precoders.len()
        )));
    }
    for i in 0..users {
        let (f, c) = (&sol.precoders[i], &sol.bases[i]);
        if f.nrows() != nt || c.nrows() != nr || f.ncols() + c.ncols() != nr {
            return Err(Error::Shape(format!(
                "user {i}: F is {}x{}, C is {}x{}, links are {nr}x{nt}",
                f.nrows(),
                f.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
    }
    Ok(())
}

/// Total interference left outside the interference subspaces.
pub fn interference_leakage(sol: &IaSolution, h: &LinkArray) -> Result<f64> {
    check_shapes(sol, h)?;
    Ok(leakage_of(h, &sol.precoders, &sol.bases))
}

#[derive(Clone, Debug)]
pub struct IaReport {
    /// `(rx, tx, residual)` for every cross link.
    pub alignment: Vec<(usize, usize, f64)>,
    /// Smallest singular value of `(I - C_i C_i*) H_ii F_i` per user.
    pub rank_margin: Vec<f64>,
    pub alignment_ok: bool,
    pub rank_ok: bool,
    pub orthonormal_ok: bool,
}

impl IaReport {
    pub fn passed(&self) -> bool {
        self.alignment_ok && self.rank_ok && self.orthonormal_ok
    }

    pub fn max_alignment_residual(&self) -> f64 {
        self.alignment.iter().map(|a| a.2).fold(0.0, f64::max)
    }

    pub fn min_rank_margin(&self) -> f64 {
        self.rank_margin.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Checks both alignment conditions with the combiner taken as the projector
/// onto the complement of `span(C_i)`: every cross link residual below `tol`
/// and every direct link keeping rank `d_i` (smallest singular value above
/// `sqrt(tol)`).
pub fn verify_ia(sol: &IaSolution, h: &LinkArray, tol: f64) -> Result<IaReport> {
    check_shapes(sol, h)?;
    let users = h.users();
    let mut alignment = Vec::with_capacity(users * (users - 1));
    let mut rank_margin = Vec::with_capacity(users);
    let mut orthonormal_ok = true;
    for i in 0..users {
        let proj = linalg::complement_projector(&sol.bases[i]);
        for k in (0..users).filter(|&k| k != i) {
            alignment.push((i, k, linalg::frob2(&(&proj * h.get(i, k) * &sol.precoders[k]))));
        }
        let direct = &proj * h.get(i, i) * &sol.precoders[i];
        rank_margin.push(*linalg::singular_values(&direct).last().unwrap_or(&0.0));
        orthonormal_ok &= linalg::orthonormality_defect(&sol.precoders[i]) < 1e-10
            && linalg::orthonormality_defect(&sol.bases[i]) < 1e-10;
    }
    let alignment_ok = alignment.iter().all(|a| a.2 < tol);
    let rank_ok = rank_margin.iter().all(|&s| s > tol.sqrt());
    Ok(IaReport { alignment, rank_margin, alignment_ok, rank_ok, orthonormal_ok })
}
