//! Seeded, parallel Monte-Carlo sweeps.
//!
//! One IA trial draws the observed and error channels, solves for the IA
//! solution once and evaluates every `(beta, gamma)` pair from it. That is
//! sound because neither the observed channels nor the solution depend on
//! `beta`. Trials run on the rayon pool; results are reduced in trial order,
//! so the output does not depend on the number of workers.
//!
//! Trials whose receivers are numerically singular are discarded and counted.
//! Solutions that hit the iteration cap are kept and counted.

use rayon::prelude::*;

use crate::channel_model::{exp_correlation_matrix, ChannelSampler, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::ia_solver::{alternating_min, SolverConfig};
use crate::linalg::{self, ComplexMatrix};
use crate::link_level::{self, IaTrialTerms, SinrModel, SinrSampleSet};
use crate::rng::SeedStream;
use crate::scenario::{db_to_linear, Scenario};

/// Seed domain of IA trials.
pub const IA_DOMAIN: u32 = 0;
/// Seed domain of point-to-point (SM and beamforming) trials.
pub const P2P_DOMAIN: u32 = 1;

/// Samples for one `(model, beta)` pair.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub model: SinrModel,
    pub beta: f64,
    pub set: SinrSampleSet,
}

fn find<'a>(cells: &'a [SweepCell], model: SinrModel, beta: f64) -> Option<&'a SinrSampleSet> {
    cells.iter().find(|c| c.model == model && c.beta == beta).map(|c| &c.set)
}

#[derive(Clone, Debug)]
pub struct IaSweep {
    /// Network, correlation, trial count and seed; its `beta` and
    /// `gamma_db` are ignored in favour of the lists below.
    pub scenario: Scenario,
    pub betas: Vec<f64>,
    pub gamma_db: Vec<f64>,
    pub models: Vec<SinrModel>,
    pub solver: SolverConfig,
}

impl IaSweep {
    /// Sweep over the scenario's own `beta` and SNR grid.
    pub fn from_scenario(scenario: &Scenario, model: SinrModel) -> Self {
        Self {
            scenario: scenario.clone(),
            betas: vec![scenario.beta],
            gamma_db: scenario.gamma_db.clone(),
            models: vec![model],
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IaSweepResult {
    pub cells: Vec<SweepCell>,
    /// `[(F_i* Rt F_i)^{-1}]_nn` for every kept trial, user and stream.
    pub sigma2: Vec<f64>,
    /// Precoder correlation sum of every kept trial.
    pub cal_i: Vec<f64>,
    pub iterations: Vec<usize>,
    pub trials: usize,
    pub discarded: usize,
    pub unconverged: usize,
}

impl IaSweepResult {
    pub fn samples(&self, model: SinrModel, beta: f64) -> Option<&SinrSampleSet> {
        find(&self.cells, model, beta)
    }

    pub fn kept(&self) -> usize {
        self.trials - self.discarded
    }
}

struct IaTrial {
    /// `[model][beta][gamma][user][stream]`
    sinr: Vec<Vec<Vec<Vec<Vec<f64>>>>>,
    sigma2: Vec<f64>,
    cal_i: f64,
    iterations: usize,
    converged: bool,
}

fn per_trial_sigma2(precoders: &[ComplexMatrix], rt: &CorrelationMatrix) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for f in precoders {
        let inv = linalg::checked_inverse(&(f.adjoint() * rt.matrix() * f))?;
        out.extend(inv.diagonal().iter().map(|z| z.re));
    }
    Ok(out)
}

pub fn run_ia(sweep: &IaSweep) -> Result<IaSweepResult> {
    let sc = &sweep.scenario;
    sc.validate()?;
    if sweep.betas.iter().any(|b| !(0.0..=1.0).contains(b)) {
        return Err(Error::InvalidScenario("beta outside [0, 1]".into()));
    }
    let feas = crate::ia_solver::check_feasibility(sc.users, sc.nt, sc.nr, &sc.streams);
    if !feas.feasible {
        return Err(Error::Infeasible(feas.reason));
    }
    let sampler = ChannelSampler::new(&sc.clone().with_beta(0.0))?;
    let rt = sampler.correlation().clone();
    let gammas: Vec<f64> = sweep.gamma_db.iter().map(|&g| db_to_linear(g)).collect();
    let seeds = SeedStream::new(sc.seed).with_domain(IA_DOMAIN);

    let outcomes: Vec<Result<Option<IaTrial>>> = (0..sc.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeds.trial(t);
            let ch = sampler.sample(&mut rng);
            let sol = alternating_min(&ch.obs_h, &sc.streams, &sweep.solver, &mut rng)?;
            let terms = match IaTrialTerms::new(&ch, &sol) {
                Ok(terms) => terms,
                Err(Error::Degenerate(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let sigma2 = match per_trial_sigma2(&sol.precoders, &rt) {
                Ok(s) => s,
                Err(Error::Degenerate(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let sinr = sweep
                .models
                .iter()
                .map(|&m| {
                    sweep
                        .betas
                        .iter()
                        .map(|&b| gammas.iter().map(|&g| terms.sinr(b, g, m)).collect())
                        .collect()
                })
                .collect();
            Ok(Some(IaTrial {
                sinr,
                sigma2,
                cal_i: terms.cal_i(),
                iterations: sol.iterations,
                converged: sol.converged(sweep.solver.tol),
            }))
        })
        .collect();

    let mut cells: Vec<SweepCell> = Vec::new();
    for &model in &sweep.models {
        for &beta in &sweep.betas {
            let meta = sc.clone().with_beta(beta).with_gamma_db(sweep.gamma_db.clone());
            cells.push(SweepCell { model, beta, set: SinrSampleSet::new(meta) });
        }
    }
    let mut result = IaSweepResult {
        cells,
        sigma2: Vec::new(),
        cal_i: Vec::new(),
        iterations: Vec::new(),
        trials: sc.trials,
        discarded: 0,
        unconverged: 0,
    };
    let nb = sweep.betas.len();
    for outcome in outcomes {
        let Some(trial) = outcome? else {
            result.discarded += 1;
            continue;
        };
        for (mi, per_beta) in trial.sinr.iter().enumerate() {
            for (bi, per_gamma) in per_beta.iter().enumerate() {
                let set = &mut result.cells[mi * nb + bi].set;
                for (gi, users) in per_gamma.iter().enumerate() {
                    for (user, streams) in users.iter().enumerate() {
                        for (stream, &v) in streams.iter().enumerate() {
                            set.push(user, stream, gi, v);
                        }
                    }
                }
            }
        }
        result.sigma2.extend(trial.sigma2);
        result.cal_i.push(trial.cal_i);
        result.iterations.push(trial.iterations);
        if !trial.converged {
            result.unconverged += 1;
        }
    }
    let kept = result.kept();
    for cell in &mut result.cells {
        cell.set.meta.trials = kept;
    }
    Ok(result)
}

/// Single `N x N` link sweep for the spatial-multiplexing and beamforming
/// baselines.
#[derive(Clone, Debug)]
pub struct P2pSweep {
    pub antennas: usize,
    pub alpha: num_complex::Complex64,
    pub trials: usize,
    pub seed: u64,
    pub betas: Vec<f64>,
    pub gamma_db: Vec<f64>,
    pub models: Vec<SinrModel>,
}

#[derive(Clone, Debug)]
pub struct P2pSweepResult {
    /// Spatial multiplexing, user 0, streams `0..N`.
    pub sm: Vec<SweepCell>,
    /// Beamforming, user 0, stream 0.
    pub bf: Vec<SweepCell>,
    /// Largest eigenvalue of `H H*` for every kept trial (observed channel).
    pub lambda_max: Vec<f64>,
    /// `v1* Rt v1` for every kept trial.
    pub nu: Vec<f64>,
    pub trials: usize,
    pub discarded: usize,
}

impl P2pSweepResult {
    pub fn sm_samples(&self, model: SinrModel, beta: f64) -> Option<&SinrSampleSet> {
        find(&self.sm, model, beta)
    }

    pub fn bf_samples(&self, model: SinrModel, beta: f64) -> Option<&SinrSampleSet> {
        find(&self.bf, model, beta)
    }
}

struct P2pTrial {
    /// `[model][beta][gamma]` -> SM streams, BF value
    sm: Vec<Vec<Vec<Vec<f64>>>>,
    bf: Vec<Vec<Vec<f64>>>,
    lambda_max: f64,
    nu: f64,
}

pub fn run_p2p(sweep: &P2pSweep) -> Result<P2pSweepResult> {
    let n = sweep.antennas;
    if n == 0 || sweep.trials == 0 {
        return Err(Error::InvalidScenario("need at least one antenna and one trial".into()));
    }
    let rt = exp_correlation_matrix(sweep.alpha, n)?;
    let gammas: Vec<f64> = sweep.gamma_db.iter().map(|&g| db_to_linear(g)).collect();
    let seeds = SeedStream::new(sweep.seed).with_domain(P2P_DOMAIN);

    let outcomes: Vec<Result<Option<P2pTrial>>> = (0..sweep.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeds.trial(t);
            let obs = linalg::complex_gaussian(&mut rng, n, n) * rt.sqrt();
            let err = linalg::complex_gaussian(&mut rng, n, n) * rt.sqrt();
            let (_, v, s) = link_level::dominant_pair(&obs);
            let nu = (v.adjoint() * rt.matrix() * &v)[(0, 0)].re;
            let mut sm = Vec::new();
            let mut bf = Vec::new();
            for &model in &sweep.models {
                let mut sm_b = Vec::new();
                let mut bf_b = Vec::new();
                for &beta in &sweep.betas {
                    let tru = if beta == 0.0 {
                        obs.clone()
                    } else {
                        obs.scale((1.0 - beta * beta).sqrt()) + err.scale(beta)
                    };
                    let mut sm_g = Vec::new();
                    let mut bf_g = Vec::new();
                    for &g in &gammas {
                        let sm_v = match model {
                            SinrModel::Instantaneous => link_level::sm_zf_sinr(&obs, &tru, g),
                            SinrModel::ErrorAveraged => link_level::sm_zf_sinr_averaged(&obs, &rt, beta, g),
                        };
                        match sm_v {
                            Ok(v) => sm_g.push(v),
                            Err(Error::Degenerate(_)) => return Ok(None),
                            Err(e) => return Err(e),
                        }
                        bf_g.push(match model {
                            SinrModel::Instantaneous => link_level::beamforming_sinr(&obs, &tru, g),
                            SinrModel::ErrorAveraged => link_level::beamforming_sinr_averaged(&obs, &rt, beta, g),
                        });
                    }
                    sm_b.push(sm_g);
                    bf_b.push(bf_g);
                }
                sm.push(sm_b);
                bf.push(bf_b);
            }
            Ok(Some(P2pTrial { sm, bf, lambda_max: s * s, nu }))
        })
        .collect();

    let meta = Scenario {
        users: 1,
        nt: n,
        nr: n,
        streams: vec![n],
        alpha: sweep.alpha,
        beta: 0.0,
        gamma_db: sweep.gamma_db.clone(),
        trials: sweep.trials,
        seed: sweep.seed,
    };
    let mut sm_cells = Vec::new();
    let mut bf_cells = Vec::new();
    for &model in &sweep.models {
        for &beta in &sweep.betas {
            let m = meta.clone().with_beta(beta);
            sm_cells.push(SweepCell { model, beta, set: SinrSampleSet::new(m.clone()) });
            bf_cells.push(SweepCell { model, beta, set: SinrSampleSet::new(m) });
        }
    }
    let mut result = P2pSweepResult {
        sm: sm_cells,
        bf: bf_cells,
        lambda_max: Vec::new(),
        nu: Vec::new(),
        trials: sweep.trials,
        discarded: 0,
    };
    let nb = sweep.betas.len();
    for outcome in outcomes {
        let Some(trial) = outcome? else {
            result.discarded += 1;
            continue;
        };
        for mi in 0..sweep.models.len() {
            for bi in 0..nb {
                for gi in 0..gammas.len() {
                    for (s, &v) in trial.sm[mi][bi][gi].iter().enumerate() {
                        result.sm[mi * nb + bi].set.push(0, s, gi, v);
                    }
                    result.bf[mi * nb + bi].set.push(0, 0, gi, trial.bf[mi][bi][gi]);
                }
            }
        }
        result.lambda_max.push(trial.lambda_max);
        result.nu.push(trial.nu);
    }
    let kept = result.trials - result.discarded;
    for cell in result.sm.iter_mut().chain(result.bf.iter_mut()) {
        cell.set.meta.trials = kept;
    }
    Ok(result)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ia_sweep_is_reproducible_and_shaped() {
        let sc = Scenario::symmetric(3, 2, 1).with_trials(40).with_seed(11);
        let sweep = IaSweep {
            scenario: sc,
            betas: vec![0.0, 0.1],
            gamma_db: vec![0.0, 20.0],
            models: vec![SinrModel::Instantaneous, SinrModel::ErrorAveraged],
            solver: SolverConfig::default(),
        };
        let a = run_ia(&sweep).unwrap();
        let b = run_ia(&sweep).unwrap();
        assert_eq!(a.cells.len(), 4);
        let set = a.samples(SinrModel::Instantaneous, 0.1).unwrap();
        assert_eq!(set.cell(2, 0, 1).len(), a.kept());
        assert_eq!(set, b.samples(SinrModel::Instantaneous, 0.1).unwrap());
        assert_eq!(a.sigma2.len(), 3 * a.kept());
    }

    #[test]
    fn p2p_sweep_shapes() {
        let sweep = P2pSweep {
            antennas: 2,
            alpha: num_complex::Complex64::new(0.3, 0.0),
            trials: 50,
            seed: 3,
            betas: vec![0.0],
            gamma_db: vec![10.0],
            models: vec![SinrModel::Instantaneous],
        };
        let r = run_p2p(&sweep).unwrap();
        let sm = r.sm_samples(SinrModel::Instantaneous, 0.0).unwrap();
        assert_eq!(sm.cell(0, 1, 0).len(), 50 - r.discarded);
        assert_eq!(r.lambda_max.len(), 50 - r.discarded);
    }
}
