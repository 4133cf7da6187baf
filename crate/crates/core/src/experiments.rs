//! Figure presets and config-driven runs, producing schema-checked tables.
//!
//! Every table has a registered [`TableSchema`] (name, version, columns).
//! Writers must call [`Table::validate`] before emitting anything.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::{self, ExpDist};
use crate::channel_model::{exp_correlation_matrix, inverse_diagonal, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::ia_solver::{check_feasibility, SolverConfig};
use crate::link_level::SinrModel;
use crate::metrics::{self, ModulationModel, Polyline, RatioInputs};
use crate::montecarlo::{self, mean, IaSweep, P2pSweep};
use crate::scenario::{db_to_linear, Scenario};

pub const DEFAULT_TRIALS: usize = 20_000;
/// A 5-user 3x3 solve takes about 20 times longer than a 3-user 2x2 one.
pub const FIG2_LARGE_TRIALS: usize = 2_000;

/// Correlation parameters for antenna spacings of 0.5 to 3 wavelengths in a
/// suburban macro-cell.
pub const TABLE_ALPHAS: [(f64, f64); 8] = [
    (-0.1743, 0.0951),
    (0.2064, 0.1066),
    (-0.0341, -0.2872),
    (-0.2817, 0.2408),
    (0.4551, 0.1317),
    (-0.1717, -0.5660),
    (-0.4616, 0.5439),
    (0.8193, 0.1101),
];

/// The `(alpha, beta)` point where unity contours for different SNRs meet.
pub const FIXED_POINT: (f64, f64) = (0.58, 0.04);
/// Half-widths of the box around [`FIXED_POINT`] a contour must enter.
pub const FIXED_POINT_TOLERANCE: (f64, f64) = (0.1, 0.02);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

impl Preset {
    pub const ALL: [Preset; 6] = [Preset::Fig2, Preset::Fig3, Preset::Fig4, Preset::Fig5, Preset::Fig6, Preset::Fig7];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Fig2 => "sigma^2 vs alpha: Monte-Carlo, approximation and bounds (3-user 2x2, 5-user 3x3)",
            Preset::Fig3 => "KLD of the imperfect-CSI law vs tabulated alpha, beta in {0.01,0.1,0.3}, SNR in {10,20} dB",
            Preset::Fig4 => "sum rate of a 4-user 3x3 network, alpha=0, beta in {0,0.01,0.05,0.15}",
            Preset::Fig5 => "3-user 2x2 IA vs 2x2 beamforming sum rate, beta=0.19, alpha in {0,0.3,0.6,0.9}",
            Preset::Fig6 => "theoretical unity contours of the SM/IA mean-SINR ratio, SNR in {10,20,30} dB",
            Preset::Fig7 => "numerical unity contours of the SM/IA mean-SINR ratio, SNR in {10,20,30} dB",
        }
    }

    /// Trial count per Monte-Carlo sweep when none is given; fig6 is purely
    /// analytic. The 5-user network of fig2 uses [`FIG2_LARGE_TRIALS`].
    pub fn default_trials(self) -> usize {
        match self {
            Preset::Fig6 => 0,
            _ => DEFAULT_TRIALS,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            // shortest round-trip representation, stable across runs
            Cell::Float(v) if v.is_finite() => write!(f, "{v:?}"),
            Cell::Float(v) if v.is_nan() => f.write_str("nan"),
            Cell::Float(v) => f.write_str(if *v > 0.0 { "inf" } else { "-inf" }),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TableSchema {
    pub name: &'static str,
    pub version: u32,
    pub columns: &'static [&'static str],
}

/// Every table the tool can emit.
pub const SCHEMAS: &[TableSchema] = &[
    TableSchema {
        name: "simulate_streams",
        version: 1,
        columns: &["gamma_db", "beta", "model", "user", "stream", "mean_sinr", "rate_bps_hz", "ser_bpsk", "samples"],
    },
    TableSchema {
        name: "simulate_sum_rate",
        version: 1,
        columns: &["gamma_db", "beta", "model", "sum_rate_empirical", "sum_rate_analytic", "samples"],
    },
    TableSchema {
        name: "analytic_streams",
        version: 1,
        columns: &[
            "gamma_db", "beta", "user", "stream", "sigma2", "sigma2_lower", "sigma2_upper", "cal_i", "mean_sinr",
            "rate_bps_hz", "ser_bpsk", "ser_qpsk",
        ],
    },
    TableSchema { name: "analytic_pdf", version: 1, columns: &["gamma_db", "user", "stream", "sinr", "pdf"] },
    TableSchema { name: "analytic_sum_rate", version: 1, columns: &["gamma_db", "sum_rate", "sum_rate_cap"] },
    TableSchema { name: "analytic_ratio", version: 1, columns: &["gamma_db", "alpha", "beta", "ratio"] },
    TableSchema {
        name: "fig2_sigma2",
        version: 1,
        columns: &[
            "users", "antennas", "alpha", "sigma2_mc_inverse_mean", "sigma2_mc_mean_inverse", "sigma2_approx",
            "sigma2_lower", "sigma2_upper", "cal_i_mc", "cal_i_approx", "trials", "unconverged",
        ],
    },
    TableSchema {
        name: "fig3_kld",
        version: 1,
        columns: &[
            "alpha_re", "alpha_im", "alpha_abs", "beta", "gamma_db", "model", "kld", "mean_empirical",
            "mean_analytic", "samples",
        ],
    },
    TableSchema {
        name: "fig4_sum_rate",
        version: 1,
        columns: &["beta", "gamma_db", "model", "sum_rate_empirical", "sum_rate_analytic", "sum_rate_cap", "samples"],
    },
    TableSchema {
        name: "fig5_sum_rate",
        version: 1,
        columns: &["scheme", "alpha", "beta", "gamma_db", "model", "sum_rate_empirical", "sum_rate_analytic", "samples"],
    },
    TableSchema { name: "fig6_ratio", version: 1, columns: &["gamma_db", "alpha", "beta", "ratio"] },
    TableSchema { name: "fig6_contour", version: 1, columns: &["gamma_db", "line", "point", "alpha", "beta"] },
    TableSchema {
        name: "fig7_ratio",
        version: 1,
        columns: &["gamma_db", "alpha", "beta", "model", "mean_sm", "mean_ia", "ratio", "samples"],
    },
    TableSchema { name: "fig7_contour", version: 1, columns: &["gamma_db", "line", "point", "alpha", "beta"] },
];

pub fn schema(name: &str) -> Option<&'static TableSchema> {
    SCHEMAS.iter().find(|s| s.name == name)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub schema: &'static TableSchema,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str) -> Self {
        let schema = schema(name).unwrap_or_else(|| panic!("table `{name}` has no registered schema"));
        Self { schema, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    /// Checks the table against its registered schema: same name, version
    /// and columns, and every row as wide as the header.
    pub fn validate(&self) -> Result<()> {
        let registered = schema(self.schema.name)
            .ok_or_else(|| Error::InvalidArgument(format!("table `{}` is not registered", self.schema.name)))?;
        if registered != self.schema {
            return Err(Error::InvalidArgument(format!("table `{}` does not match its schema", self.schema.name)));
        }
        let width = registered.columns.len();
        if let Some((i, row)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(Error::InvalidArgument(format!(
                "table `{}` row {i} has {} cells, schema has {width}",
                self.schema.name,
                row.len()
            )));
        }
        Ok(())
    }
}

/// Tables plus scalar findings and bookkeeping from one experiment.
#[derive(Clone, Debug, Default)]
pub struct Output {
    pub tables: Vec<Table>,
    pub summary: BTreeMap<String, f64>,
    pub trials: usize,
    pub discarded: usize,
    pub unconverged: usize,
}

impl Output {
    fn absorb(&mut self, trials: usize, discarded: usize, unconverged: usize) {
        self.trials += trials;
        self.discarded += discarded;
        self.unconverged += unconverged;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub trials: Option<usize>,
    pub seed: u64,
    pub model: SinrModel,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { trials: None, seed: 1, model: SinrModel::Instantaneous }
    }
}

fn real(a: f64) -> Complex64 {
    Complex64::new(a, 0.0)
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).map(|x| (x * 1e9).round() / 1e9).collect()
}

fn db_grid() -> Vec<f64> {
    grid(0.0, 40.0, 5.0)
}

/// `sigma^2` of user 0 and the aggregate trace for a symmetric network.
fn ia_law_inputs(rt: &CorrelationMatrix, streams: &[usize]) -> Result<(Vec<analytic::RtildeApprox>, f64)> {
    analytic::cal_i_for(rt, streams)
}

pub fn run_preset(preset: Preset, opts: &RunOptions) -> Result<Output> {
    match preset {
        Preset::Fig2 => fig2(opts),
        Preset::Fig3 => fig3(opts, &TABLE_ALPHAS.map(|(r, i)| Complex64::new(r, i)), &[0.01, 0.1, 0.3], &[10.0, 20.0]),
        Preset::Fig4 => fig4(opts),
        Preset::Fig5 => fig5(opts),
        Preset::Fig6 => fig6(&[10.0, 20.0, 30.0]),
        Preset::Fig7 => fig7(opts, &grid(0.0, 0.9, 0.05), &grid(0.0, 0.2, 0.01), &[10.0, 20.0, 30.0]),
    }
}

/// Monte-Carlo `sigma^2` against the approximation and bounds.
pub fn fig2(opts: &RunOptions) -> Result<Output> {
    fig2_with(opts, &[(3, 2, opts.trials.unwrap_or(DEFAULT_TRIALS)), (5, 3, opts.trials.unwrap_or(FIG2_LARGE_TRIALS))], &grid(0.0, 0.6, 0.1))
}

/// `networks` holds `(users, antennas, trials)`.
pub fn fig2_with(opts: &RunOptions, networks: &[(usize, usize, usize)], alphas: &[f64]) -> Result<Output> {
    let mut out = Output::default();
    let mut table = Table::new("fig2_sigma2");
    for &(users, n, trials) in networks {
        for &a in alphas {
            let sc = Scenario::symmetric(users, n, 1).with_alpha(real(a)).with_trials(trials).with_seed(opts.seed);
            let r = montecarlo::run_ia(&IaSweep {
                scenario: sc.clone(),
                betas: vec![0.0],
                gamma_db: vec![],
                models: vec![opts.model],
                solver: SolverConfig::default(),
            })?;
            out.absorb(r.trials, r.discarded, r.unconverged);
            let rt = exp_correlation_matrix(sc.alpha, n)?;
            let (per_user, cal_i) = ia_law_inputs(&rt, &sc.streams)?;
            let approx = &per_user[0];
            // d = 1: R~ = f* Rt f is a scalar
            let inverse_mean = 1.0 / mean(&r.sigma2.iter().map(|s| 1.0 / s).collect::<Vec<_>>());
            table.push(vec![
                users.into(),
                n.into(),
                a.into(),
                inverse_mean.into(),
                mean(&r.sigma2).into(),
                approx.sigma2[0].into(),
                Cell::opt(approx.bounds[0].lower),
                approx.bounds[0].upper.into(),
                mean(&r.cal_i).into(),
                cal_i.into(),
                r.kept().into(),
                r.unconverged.into(),
            ]);
        }
    }
    out.tables.push(table);
    Ok(out)
}

/// KLD between empirical SINR of user 0, stream 0 and the imperfect-CSI law.
pub fn fig3(opts: &RunOptions, alphas: &[Complex64], betas: &[f64], gamma_db: &[f64]) -> Result<Output> {
    let mut out = Output::default();
    let mut table = Table::new("fig3_kld");
    let trials = opts.trials.unwrap_or(DEFAULT_TRIALS);
    for &alpha in alphas {
        let sc = Scenario::symmetric(3, 2, 1).with_alpha(alpha).with_trials(trials).with_seed(opts.seed);
        let r = montecarlo::run_ia(&IaSweep {
            scenario: sc.clone(),
            betas: betas.to_vec(),
            gamma_db: gamma_db.to_vec(),
            models: vec![opts.model],
            solver: SolverConfig::default(),
        })?;
        out.absorb(r.trials, r.discarded, r.unconverged);
        let rt = exp_correlation_matrix(alpha, 2)?;
        let (per_user, cal_i) = ia_law_inputs(&rt, &sc.streams)?;
        for &beta in betas {
            let set = r.samples(opts.model, beta).expect("swept beta");
            for (gi, &g) in gamma_db.iter().enumerate() {
                let law = analytic::pdf_ci(db_to_linear(g), 1, beta, per_user[0].sigma2[0], cal_i)?;
                let samples = set.cell(0, 0, gi);
                let kld = metrics::kl_divergence(samples, &law, metrics::DEFAULT_KLD_BINS)?;
                table.push(vec![
                    alpha.re.into(),
                    alpha.im.into(),
                    alpha.norm().into(),
                    beta.into(),
                    g.into(),
                    opts.model.name().into(),
                    kld.into(),
                    mean(samples).into(),
                    law.mean().into(),
                    samples.len().into(),
                ]);
            }
        }
    }
    out.tables.push(table);
    Ok(out)
}

/// Sum rate of a 4-user 3x3 uncorrelated network.
pub fn fig4(opts: &RunOptions) -> Result<Output> {
    fig4_with(opts, &[0.0, 0.01, 0.05, 0.15], &db_grid())
}

pub fn fig4_with(opts: &RunOptions, betas: &[f64], gamma_db: &[f64]) -> Result<Output> {
    let sc = Scenario::symmetric(4, 3, 1).with_trials(opts.trials.unwrap_or(DEFAULT_TRIALS)).with_seed(opts.seed);
    let r = montecarlo::run_ia(&IaSweep {
        scenario: sc.clone(),
        betas: betas.to_vec(),
        gamma_db: gamma_db.to_vec(),
        models: vec![opts.model],
        solver: SolverConfig::default(),
    })?;
    let mut out = Output::default();
    out.absorb(r.trials, r.discarded, r.unconverged);
    let k = sc.users as f64;
    let mut table = Table::new("fig4_sum_rate");
    for &beta in betas {
        let set = r.samples(opts.model, beta).expect("swept beta");
        let cap = (beta > 0.0).then(|| k * metrics::rate_exp((1.0 - beta * beta) / (beta * beta * k)));
        for (gi, &g) in gamma_db.iter().enumerate() {
            let empirical: f64 = (0..sc.users).map(|u| metrics::empirical_rate(set.cell(u, 0, gi))).sum();
            let law = analytic::pdf_ci(db_to_linear(g), 1, beta, 1.0, k)?;
            table.push(vec![
                beta.into(),
                g.into(),
                opts.model.name().into(),
                empirical.into(),
                (k * metrics::rate_exp(law.mean())).into(),
                Cell::opt(cap),
                set.cell(0, 0, gi).len().into(),
            ]);
        }
    }
    out.tables.push(table);
    Ok(out)
}

/// 3-user 2x2 IA against 2x2 beamforming at `beta = 0.19`.
pub fn fig5(opts: &RunOptions) -> Result<Output> {
    fig5_with(opts, &[0.0, 0.3, 0.6, 0.9], 0.19, &db_grid())
}

pub fn fig5_with(opts: &RunOptions, alphas: &[f64], beta: f64, gamma_db: &[f64]) -> Result<Output> {
    let trials = opts.trials.unwrap_or(DEFAULT_TRIALS);
    let mut out = Output::default();
    let mut table = Table::new("fig5_sum_rate");
    for &a in alphas {
        let sc = Scenario::symmetric(3, 2, 1).with_alpha(real(a)).with_trials(trials).with_seed(opts.seed);
        let ia = montecarlo::run_ia(&IaSweep {
            scenario: sc.clone(),
            betas: vec![beta],
            gamma_db: gamma_db.to_vec(),
            models: vec![opts.model],
            solver: SolverConfig::default(),
        })?;
        out.absorb(ia.trials, ia.discarded, ia.unconverged);
        let p2p = montecarlo::run_p2p(&P2pSweep {
            antennas: 2,
            alpha: real(a),
            trials,
            seed: opts.seed,
            betas: vec![beta],
            gamma_db: gamma_db.to_vec(),
            models: vec![opts.model],
        })?;
        out.absorb(p2p.trials, p2p.discarded, 0);
        let rt = exp_correlation_matrix(real(a), 2)?;
        let (per_user, cal_i) = ia_law_inputs(&rt, &sc.streams)?;
        let nu = analytic::bf_mean_nu(&rt)?;
        let ia_set = ia.samples(opts.model, beta).expect("swept beta");
        let bf_set = p2p.bf_samples(opts.model, beta).expect("swept beta");
        let b2 = beta * beta;
        for (gi, &g) in gamma_db.iter().enumerate() {
            let gl = db_to_linear(g);
            let ia_emp: f64 = (0..3).map(|u| metrics::empirical_rate(ia_set.cell(u, 0, gi))).sum();
            let ia_law = analytic::pdf_ci(gl, 1, beta, per_user[0].sigma2[0], cal_i)?;
            table.push(vec![
                "ia".into(),
                a.into(),
                beta.into(),
                g.into(),
                opts.model.name().into(),
                ia_emp.into(),
                (3.0 * metrics::rate_exp(ia_law.mean())).into(),
                ia_set.cell(0, 0, gi).len().into(),
            ]);
            // the largest-eigenvalue law is sampled; nu comes from the
            // eigenvector moments
            let bf_law: Vec<f64> =
                p2p.lambda_max.iter().map(|&l| (1.0 - b2) * l * gl / (b2 * gl * nu + 1.0)).collect();
            table.push(vec![
                "bf".into(),
                a.into(),
                beta.into(),
                g.into(),
                opts.model.name().into(),
                metrics::empirical_rate(bf_set.cell(0, 0, gi)).into(),
                metrics::empirical_rate(&bf_law).into(),
                bf_set.cell(0, 0, gi).len().into(),
            ]);
        }
    }
    out.tables.push(table);
    Ok(out)
}

/// Theoretical SM/IA mean-SINR ratio for a 3-user 2x2 network against a 2x2
/// SM link, stream 0 of each.
pub fn theoretical_ratio(alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    let rt = exp_correlation_matrix(real(alpha), 2)?;
    let (per_user, cal_i) = ia_law_inputs(&rt, &[1, 1, 1])?;
    Ok(metrics::mean_sinr_ratio(&RatioInputs {
        beta,
        gamma,
        antennas: 2,
        streams: 1,
        sigma2_ia: per_user[0].sigma2[0],
        cal_i,
        sigma2_sm: inverse_diagonal(&rt)?[0],
        trace_rt: rt.trace(),
    }))
}

/// Ratio surface `z[alpha][beta]` for one SNR.
pub fn theoretical_ratio_grid(alphas: &[f64], betas: &[f64], gamma_db: f64) -> Result<Vec<Vec<f64>>> {
    let gamma = db_to_linear(gamma_db);
    alphas
        .iter()
        .map(|&a| betas.iter().map(|&b| theoretical_ratio(a, b, gamma)).collect::<Result<Vec<_>>>())
        .collect()
}

fn contour_rows(table: &mut Table, gamma_db: f64, lines: &[Polyline]) {
    for (li, line) in lines.iter().enumerate() {
        for (pi, &(a, b)) in line.iter().enumerate() {
            table.push(vec![gamma_db.into(), li.into(), pi.into(), a.into(), b.into()]);
        }
    }
}

fn fixed_point_summary(out: &mut Output, prefix: &str, gamma_db: f64, lines: &[Polyline]) {
    let near = metrics::passes_near(lines, FIXED_POINT, FIXED_POINT_TOLERANCE);
    let dist = metrics::scaled_distance(lines, FIXED_POINT, FIXED_POINT_TOLERANCE);
    out.summary.insert(format!("{prefix}_{gamma_db}dB_passes_fixed_point"), if near { 1.0 } else { 0.0 });
    out.summary.insert(format!("{prefix}_{gamma_db}dB_box_distance"), dist);
}

pub fn fig6(gamma_db: &[f64]) -> Result<Output> {
    fig6_with(&grid(0.0, 0.95, 0.01), &grid(0.0, 0.2, 0.002), gamma_db)
}

pub fn fig6_with(alphas: &[f64], betas: &[f64], gamma_db: &[f64]) -> Result<Output> {
    let mut out = Output::default();
    let mut ratio = Table::new("fig6_ratio");
    let mut contour = Table::new("fig6_contour");
    for &g in gamma_db {
        let z = theoretical_ratio_grid(alphas, betas, g)?;
        for (ai, &a) in alphas.iter().enumerate() {
            for (bi, &b) in betas.iter().enumerate() {
                ratio.push(vec![g.into(), a.into(), b.into(), z[ai][bi].into()]);
            }
        }
        let lines = metrics::contour_lines(alphas, betas, &z, 1.0);
        fixed_point_summary(&mut out, "theoretical", g, &lines);
        contour_rows(&mut contour, g, &lines);
    }
    out.tables.push(ratio);
    out.tables.push(contour);
    Ok(out)
}

/// Ratio of Monte-Carlo mean SINRs (SM over IA) and its unity contours.
pub fn fig7(opts: &RunOptions, alphas: &[f64], betas: &[f64], gamma_db: &[f64]) -> Result<Output> {
    let trials = opts.trials.unwrap_or(Preset::Fig7.default_trials());
    let mut out = Output::default();
    let mut ratio = Table::new("fig7_ratio");
    let mut contour = Table::new("fig7_contour");
    // z[gamma][alpha][beta]
    let mut z = vec![vec![vec![0.0; betas.len()]; alphas.len()]; gamma_db.len()];
    for (ai, &a) in alphas.iter().enumerate() {
        let sc = Scenario::symmetric(3, 2, 1).with_alpha(real(a)).with_trials(trials).with_seed(opts.seed);
        let ia = montecarlo::run_ia(&IaSweep {
            scenario: sc,
            betas: betas.to_vec(),
            gamma_db: gamma_db.to_vec(),
            models: vec![opts.model],
            solver: SolverConfig::default(),
        })?;
        out.absorb(ia.trials, ia.discarded, ia.unconverged);
        let p2p = montecarlo::run_p2p(&P2pSweep {
            antennas: 2,
            alpha: real(a),
            trials,
            seed: opts.seed,
            betas: betas.to_vec(),
            gamma_db: gamma_db.to_vec(),
            models: vec![opts.model],
        })?;
        out.absorb(p2p.trials, p2p.discarded, 0);
        for (bi, &b) in betas.iter().enumerate() {
            let ia_set = ia.samples(opts.model, b).expect("swept beta");
            let sm_set = p2p.sm_samples(opts.model, b).expect("swept beta");
            for (gi, &g) in gamma_db.iter().enumerate() {
                let ia_mean = mean(&ia_set.pooled(gi));
                let sm_mean = mean(&sm_set.pooled(gi));
                z[gi][ai][bi] = sm_mean / ia_mean;
                ratio.push(vec![
                    g.into(),
                    a.into(),
                    b.into(),
                    opts.model.name().into(),
                    sm_mean.into(),
                    ia_mean.into(),
                    (sm_mean / ia_mean).into(),
                    ia_set.cell(0, 0, gi).len().into(),
                ]);
            }
        }
    }
    for (gi, &g) in gamma_db.iter().enumerate() {
        let lines = metrics::contour_lines(alphas, betas, &z[gi], 1.0);
        fixed_point_summary(&mut out, "numerical", g, &lines);
        contour_rows(&mut contour, g, &lines);
    }
    out.tables.push(ratio);
    out.tables.push(contour);
    Ok(out)
}

/// Monte-Carlo run of a config scenario: per-stream statistics and sum rate.
pub fn simulate(sc: &Scenario, model: SinrModel) -> Result<Output> {
    let report = check_feasibility(sc.users, sc.nt, sc.nr, &sc.streams);
    if !report.feasible {
        return Err(Error::Infeasible(report.reason));
    }
    let r = montecarlo::run_ia(&IaSweep::from_scenario(sc, model))?;
    let mut out = Output::default();
    out.absorb(r.trials, r.discarded, r.unconverged);
    let set = r.samples(model, sc.beta).expect("swept beta");
    let laws = stream_laws(sc)?;
    let bpsk = ModulationModel::bpsk();
    let mut streams = Table::new("simulate_streams");
    let mut sums = Table::new("simulate_sum_rate");
    for (gi, &g) in sc.gamma_db.iter().enumerate() {
        let mut total = 0.0;
        let mut total_law = 0.0;
        for (user, &d) in sc.streams.iter().enumerate() {
            for stream in 0..d {
                let s = set.cell(user, stream, gi);
                let rate = metrics::empirical_rate(s);
                total += rate;
                total_law += metrics::rate_exp(laws[gi][user][stream].mean());
                streams.push(vec![
                    g.into(),
                    sc.beta.into(),
                    model.name().into(),
                    user.into(),
                    stream.into(),
                    mean(s).into(),
                    rate.into(),
                    metrics::empirical_ser(s, &bpsk).into(),
                    s.len().into(),
                ]);
            }
        }
        sums.push(vec![
            g.into(),
            sc.beta.into(),
            model.name().into(),
            total.into(),
            total_law.into(),
            set.cell(0, 0, gi).len().into(),
        ]);
    }
    out.tables.push(streams);
    out.tables.push(sums);
    Ok(out)
}

/// `[gamma][user][stream]` laws of the imperfect-CSI model for `sc`.
fn stream_laws(sc: &Scenario) -> Result<Vec<Vec<Vec<ExpDist>>>> {
    let rt = exp_correlation_matrix(sc.alpha, sc.nt)?;
    let (per_user, cal_i) = ia_law_inputs(&rt, &sc.streams)?;
    sc.gamma_linear()
        .iter()
        .map(|&g| {
            per_user
                .iter()
                .zip(&sc.streams)
                .map(|(approx, &d)| approx.sigma2.iter().map(|&s2| analytic::pdf_ci(g, d, sc.beta, s2, cal_i)).collect())
                .collect()
        })
        .collect()
}

/// Closed-form evaluation of a config scenario.
pub fn analytic_tables(sc: &Scenario) -> Result<Output> {
    sc.validate()?;
    let rt = exp_correlation_matrix(sc.alpha, sc.nt)?;
    let (per_user, cal_i) = ia_law_inputs(&rt, &sc.streams)?;
    let laws = stream_laws(sc)?;
    let (bpsk, qpsk) = (ModulationModel::bpsk(), ModulationModel::qpsk());
    let mut streams = Table::new("analytic_streams");
    let mut pdf = Table::new("analytic_pdf");
    let mut sums = Table::new("analytic_sum_rate");
    let b2 = sc.beta * sc.beta;
    for (gi, &g) in sc.gamma_db.iter().enumerate() {
        let mut total = 0.0;
        let mut cap = 0.0;
        for (user, approx) in per_user.iter().enumerate() {
            let d = sc.streams[user];
            for stream in 0..d {
                let law = laws[gi][user][stream];
                total += metrics::rate_exp(law.mean());
                if sc.beta > 0.0 {
                    cap += metrics::rate_exp((1.0 - b2) / (approx.sigma2[stream] * d as f64 * b2 * cal_i));
                }
                streams.push(vec![
                    g.into(),
                    sc.beta.into(),
                    user.into(),
                    stream.into(),
                    approx.sigma2[stream].into(),
                    Cell::opt(approx.bounds[stream].lower),
                    approx.bounds[stream].upper.into(),
                    cal_i.into(),
                    law.mean().into(),
                    metrics::rate_exp(law.mean()).into(),
                    metrics::ser(&law, &bpsk).into(),
                    metrics::ser(&law, &qpsk).into(),
                ]);
                for k in 0..=100 {
                    let x = law.quantile(0.999) * k as f64 / 100.0;
                    pdf.push(vec![g.into(), user.into(), stream.into(), x.into(), law.pdf(x).into()]);
                }
            }
        }
        sums.push(vec![g.into(), total.into(), Cell::opt((sc.beta > 0.0).then_some(cap))]);
    }
    let mut out = Output::default();
    out.tables.push(streams);
    out.tables.push(pdf);
    out.tables.push(sums);
    // the ratio surface needs a 3-user 2x2 against 2x2 SM comparison
    if sc.users == 3 && sc.nt == 2 && sc.nr == 2 && sc.streams.iter().all(|&d| d == 1) {
        let mut ratio = Table::new("analytic_ratio");
        let (alphas, betas) = (grid(0.0, 0.95, 0.05), grid(0.0, 0.2, 0.01));
        for &g in &sc.gamma_db {
            let z = theoretical_ratio_grid(&alphas, &betas, g)?;
            for (ai, &a) in alphas.iter().enumerate() {
                for (bi, &b) in betas.iter().enumerate() {
                    ratio.push(vec![g.into(), a.into(), b.into(), z[ai][bi].into()]);
                }
            }
        }
        out.tables.push(ratio);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("fig9".parse::<Preset>().is_err());
    }

    #[test]
    fn schemas_are_unique() {
        let mut names: Vec<_> = SCHEMAS.iter().map(|s| s.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), SCHEMAS.len());
    }

    #[test]
    fn ragged_table_is_rejected() {
        let mut t = Table::new("fig6_contour");
        t.push(vec![1.0.into()]);
        assert!(t.validate().is_err());
    }

    #[test]
    fn float_cells_round_trip() {
        let v = 0.1 + 0.2;
        assert_eq!(Cell::Float(v).to_string().parse::<f64>().unwrap(), v);
        assert_eq!(Cell::Empty.to_string(), "");
    }

    #[test]
    fn ratio_at_no_correlation_and_perfect_csi() {
        assert!((theoretical_ratio(0.0, 0.0, 100.0).unwrap() - 0.5).abs() < 1e-12);
    }
}
