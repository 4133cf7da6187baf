//! Effective channels, zero-forcing receivers and per-stream SINR.
//!
//! Power convention: every stream of user `i` carries `P / d_i`, noise has
//! unit variance, so `P = gamma_o`.
//!
//! Two SINR models exist for imperfect CSI. [`SinrModel::Instantaneous`]
//! applies the receiver built from the observed channels to the realized true
//! channels, so the CSI error shows up as a random interference term.
//! [`SinrModel::ErrorAveraged`] replaces the error-induced interference power
//! by its expectation over the error, conditional on the observed channels.
//! The two agree at `beta = 0`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel_model::{ChannelSet, CorrelationMatrix, LinkArray};
use crate::error::{Error, Result};
use crate::ia_solver::IaSolution;
use crate::linalg::{self, ComplexMatrix};
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SinrModel {
    #[default]
    Instantaneous,
    ErrorAveraged,
}

impl SinrModel {
    pub fn name(self) -> &'static str {
        match self {
            SinrModel::Instantaneous => "instantaneous",
            SinrModel::ErrorAveraged => "error-averaged",
        }
    }
}

impl std::str::FromStr for SinrModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "instantaneous" => Ok(SinrModel::Instantaneous),
            "error-averaged" | "averaged" => Ok(SinrModel::ErrorAveraged),
            other => Err(Error::InvalidArgument(format!("unknown SINR model `{other}`"))),
        }
    }
}

/// Empirical SINR samples keyed by `(user, stream, gamma index)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SinrSampleSet {
    pub samples: BTreeMap<(usize, usize, usize), Vec<f64>>,
    pub meta: Scenario,
}

impl SinrSampleSet {
    pub fn new(meta: Scenario) -> Self {
        Self { samples: BTreeMap::new(), meta }
    }

    pub fn push(&mut self, user: usize, stream: usize, gamma_idx: usize, value: f64) {
        self.samples.entry((user, stream, gamma_idx)).or_default().push(value);
    }

    pub fn cell(&self, user: usize, stream: usize, gamma_idx: usize) -> &[f64] {
        self.samples.get(&(user, stream, gamma_idx)).map_or(&[], Vec::as_slice)
    }

    /// Every stream of every user at one SNR point, in key order.
    pub fn pooled(&self, gamma_idx: usize) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|((_, _, g), _)| *g == gamma_idx)
            .flat_map(|(_, v)| v.iter().copied())
            .collect()
    }
}

/// `[H_ii F_i, C_i]`.
pub fn effective_channel(h_ii: &ComplexMatrix, f: &ComplexMatrix, c: &ComplexMatrix) -> Result<ComplexMatrix> {
    let nr = h_ii.nrows();
    if h_ii.ncols() != f.nrows() || c.nrows() != nr || f.ncols() + c.ncols() != nr {
        return Err(Error::Shape(format!(
            "effective channel from H {}x{}, F {}x{}, C {}x{}",
            h_ii.nrows(),
            h_ii.ncols(),
            f.nrows(),
            f.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    let mut out = ComplexMatrix::zeros(nr, nr);
    out.columns_mut(0, f.ncols()).copy_from(&(h_ii * f));
    out.columns_mut(f.ncols(), c.ncols()).copy_from(c);
    Ok(out)
}

/// First `d` rows of `heff^{-1}`.
pub fn zf_equalizer(heff: &ComplexMatrix, d: usize) -> Result<ComplexMatrix> {
    if d > heff.nrows() {
        return Err(Error::Shape(format!("{d} streams from a {}x{} channel", heff.nrows(), heff.ncols())));
    }
    let inv = linalg::checked_inverse(heff)?;
    Ok(inv.rows(0, d).into_owned())
}

fn row_norms2(w: &ComplexMatrix) -> Vec<f64> {
    w.row_iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum()).collect()
}

/// Perfect-CSI SINR from the full effective channel: `(gamma/d) / [W W*]_nn`.
pub fn sinr_direct(h_ii: &ComplexMatrix, f: &ComplexMatrix, c: &ComplexMatrix, gamma: f64) -> Result<Vec<f64>> {
    let d = f.ncols();
    let w = zf_equalizer(&effective_channel(h_ii, f, c)?, d)?;
    Ok(row_norms2(&w).into_iter().map(|g| gamma / d as f64 / g).collect())
}

/// Perfect-CSI SINR from the projected core `F* H* (I - C C*) H F`.
pub fn sinr_projected(h_ii: &ComplexMatrix, f: &ComplexMatrix, c: &ComplexMatrix, gamma: f64) -> Result<Vec<f64>> {
    let d = f.ncols();
    let g = h_ii * f;
    let core = g.adjoint() * linalg::complement_projector(c) * &g;
    let inv = linalg::checked_inverse(&core)?;
    Ok((0..d).map(|n| gamma / d as f64 / inv[(n, n)].re).collect())
}

/// Perfect-CSI per-stream SINR, cross-checked between both forms.
///
/// Fails with [`Error::OracleMismatch`] if the forms differ by more than
/// `1e-8` relative on any stream.
pub fn sinr_perfect(h_ii: &ComplexMatrix, f: &ComplexMatrix, c: &ComplexMatrix, gamma: f64) -> Result<Vec<f64>> {
    let direct = sinr_direct(h_ii, f, c, gamma)?;
    let projected = sinr_projected(h_ii, f, c, gamma)?;
    let worst = direct
        .iter()
        .zip(&projected)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()))
        .fold(0.0, f64::max);
    if worst > 1e-8 {
        return Err(Error::OracleMismatch(worst));
    }
    Ok(direct)
}

/// `sum_k tr(F_k* Rt F_k) / d_k`.
pub fn precoder_correlation_sum(precoders: &[ComplexMatrix], rt: &CorrelationMatrix) -> f64 {
    precoders
        .iter()
        .map(|f| linalg::trace(&(f.adjoint() * rt.matrix() * f)).re / f.ncols() as f64)
        .sum()
}

/// ZF receivers designed on `obs` for every user.
fn receivers(obs: &LinkArray, sol: &IaSolution) -> Result<Vec<ComplexMatrix>> {
    (0..obs.users())
        .map(|i| {
            let heff = effective_channel(obs.get(i, i), &sol.precoders[i], &sol.bases[i])?;
            zf_equalizer(&heff, sol.precoders[i].ncols())
        })
        .collect()
}

/// Per-stream SINR at receiver `own` from `M_k = W_own H_own,k F_k`.
fn stream_sinr(products: &[ComplexMatrix], own: usize, noise: &[f64], gamma: f64) -> Vec<f64> {
    (0..products[own].nrows())
        .map(|n| {
            let mut interference = noise[n];
            let mut signal = 0.0;
            for (k, m) in products.iter().enumerate() {
                let p = gamma / m.ncols() as f64;
                for col in 0..m.ncols() {
                    let power = p * m[(n, col)].norm_sqr();
                    if k == own && col == n {
                        signal = power;
                    } else {
                        interference += power;
                    }
                }
            }
            signal / interference
        })
        .collect()
}

/// Instantaneous SINR of every stream, receivers designed on `ch.obs_h` and
/// applied to `ch.true_h`. Result is indexed `[user][stream]`.
pub fn sinr_imperfect(ch: &ChannelSet, sol: &IaSolution, gamma: f64) -> Result<Vec<Vec<f64>>> {
    let ws = receivers(&ch.obs_h, sol)?;
    let mut out = Vec::with_capacity(ws.len());
    for (i, w) in ws.iter().enumerate() {
        let products: Vec<ComplexMatrix> =
            (0..ch.true_h.users()).map(|k| w * ch.true_h.get(i, k) * &sol.precoders[k]).collect();
        let sinr = stream_sinr(&products, i, &row_norms2(w), gamma);
        out.push(sinr);
    }
    Ok(out)
}

/// Error-averaged SINR `(1 - beta^2) / (d_i (beta^2 I + 1/gamma) ||w_n||^2)`
/// with `I` the precoder correlation sum of this draw.
pub fn sinr_imperfect_averaged(ch: &ChannelSet, sol: &IaSolution, gamma: f64) -> Result<Vec<Vec<f64>>> {
    let ws = receivers(&ch.obs_h, sol)?;
    let cal_i = precoder_correlation_sum(&sol.precoders, &ch.rt);
    let b2 = ch.beta * ch.beta;
    Ok(ws
        .iter()
        .map(|w| {
            let d = w.nrows() as f64;
            row_norms2(w)
                .into_iter()
                .map(|g| (1.0 - b2) / (d * (b2 * cal_i + 1.0 / gamma) * g))
                .collect()
        })
        .collect())
}

/// Per-trial quantities from which IA SINR follows cheaply for any
/// `(beta, gamma)`: with `M_ik = W_i H_ik F_k` linear in the true channel,
/// `M_ik = sqrt(1-beta^2) A_ik + beta B_ik` for observed part `A` and error
/// part `B`.
#[derive(Clone, Debug)]
pub struct IaTrialTerms {
    observed: Vec<Vec<ComplexMatrix>>,
    error: Vec<Vec<ComplexMatrix>>,
    noise_gain: Vec<Vec<f64>>,
    cal_i: f64,
}

impl IaTrialTerms {
    pub fn new(ch: &ChannelSet, sol: &IaSolution) -> Result<Self> {
        let ws = receivers(&ch.obs_h, sol)?;
        let k_users = ch.obs_h.users();
        let mut observed = Vec::with_capacity(k_users);
        let mut error = Vec::with_capacity(k_users);
        for (i, w) in ws.iter().enumerate() {
            observed.push((0..k_users).map(|k| w * ch.obs_h.get(i, k) * &sol.precoders[k]).collect());
            error.push((0..k_users).map(|k| w * ch.error_h.get(i, k) * &sol.precoders[k]).collect());
        }
        Ok(Self {
            observed,
            error,
            noise_gain: ws.iter().map(row_norms2).collect(),
            cal_i: precoder_correlation_sum(&sol.precoders, &ch.rt),
        })
    }

    /// `||W_i(n,:)||^2` indexed `[user][stream]`.
    pub fn noise_gain(&self) -> &[Vec<f64>] {
        &self.noise_gain
    }

    /// Precoder correlation sum of this draw.
    pub fn cal_i(&self) -> f64 {
        self.cal_i
    }

    pub fn sinr(&self, beta: f64, gamma: f64, model: SinrModel) -> Vec<Vec<f64>> {
        let b2 = beta * beta;
        match model {
            SinrModel::ErrorAveraged => self
                .noise_gain
                .iter()
                .map(|gains| {
                    let d = gains.len() as f64;
                    gains.iter().map(|g| (1.0 - b2) / (d * (b2 * self.cal_i + 1.0 / gamma) * g)).collect()
                })
                .collect(),
            SinrModel::Instantaneous => {
                let keep = (1.0 - b2).sqrt();
                (0..self.observed.len())
                    .map(|i| {
                        let products: Vec<ComplexMatrix> = self.observed[i]
                            .iter()
                            .zip(&self.error[i])
                            .map(|(a, b)| if beta == 0.0 { a.clone() } else { a.scale(keep) + b.scale(beta) })
                            .collect();
                        stream_sinr(&products, i, &self.noise_gain[i], gamma)
                    })
                    .collect()
            }
        }
    }
}

/// Beamforming on the dominant singular pair of `obs`, evaluated on `tru`:
/// `gamma |u1* H v1|^2`.
pub fn beamforming_sinr(obs: &ComplexMatrix, tru: &ComplexMatrix, gamma: f64) -> f64 {
    let (u, v, _) = dominant_pair(obs);
    let g = (u.adjoint() * tru * &v)[(0, 0)];
    gamma * g.norm_sqr()
}

/// Error-averaged beamforming SINR
/// `(1-beta^2) s1^2 gamma / (beta^2 gamma v1* Rt v1 + 1)`.
pub fn beamforming_sinr_averaged(obs: &ComplexMatrix, rt: &CorrelationMatrix, beta: f64, gamma: f64) -> f64 {
    let (_, v, s) = dominant_pair(obs);
    let nu = (v.adjoint() * rt.matrix() * &v)[(0, 0)].re;
    let b2 = beta * beta;
    (1.0 - b2) * s * s * gamma / (b2 * gamma * nu + 1.0)
}

/// `(u1, v1, s1)` of the largest singular value.
pub fn dominant_pair(m: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix, f64) {
    let svd = m.clone().svd(true, true);
    let (idx, s) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (j, s)| if s > best.1 { (j, s) } else { best });
    let u = svd.u.expect("requested u").column(idx).into_owned();
    let v_t = svd.v_t.expect("requested v_t");
    let v = v_t.row(idx).adjoint();
    (ComplexMatrix::from_column_slice(u.len(), 1, u.as_slice()), ComplexMatrix::from_column_slice(v.len(), 1, v.as_slice()), s)
}

/// Spatial multiplexing of `N` streams with ZF `obs^{-1}` applied to `tru`.
pub fn sm_zf_sinr(obs: &ComplexMatrix, tru: &ComplexMatrix, gamma: f64) -> Result<Vec<f64>> {
    let n = obs.ncols();
    let w = zf_equalizer(obs, obs.nrows())?;
    let m = &w * tru;
    let noise = row_norms2(&w);
    let p = gamma / n as f64;
    Ok((0..obs.nrows())
        .map(|s| {
            let row: f64 = m.row(s).iter().map(|z| z.norm_sqr()).sum();
            let signal = p * m[(s, s)].norm_sqr();
            signal / (p * row - signal + noise[s])
        })
        .collect())
}

/// Error-averaged SM SINR `(1-beta^2) / ((beta^2 tr(Rt) + N/gamma) ||w_n||^2)`.
pub fn sm_zf_sinr_averaged(obs: &ComplexMatrix, rt: &CorrelationMatrix, beta: f64, gamma: f64) -> Result<Vec<f64>> {
    let n = obs.ncols() as f64;
    let w = zf_equalizer(obs, obs.nrows())?;
    let b2 = beta * beta;
    Ok(row_norms2(&w)
        .into_iter()
        .map(|g| (1.0 - b2) / ((b2 * rt.trace() + n / gamma) * g))
        .collect())
}
