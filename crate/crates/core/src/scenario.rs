//! Experiment description and its key-value configuration format.
//!
//! A config file holds one `key = value` pair per line; blank lines and lines
//! starting with `#` are ignored. Keys mirror the [`Scenario`] fields:
//!
//! ```text
//! K = 3
//! Nt = 2
//! Nr = 2
//! d = 1            # one value for every user, or a comma list of K values
//! alpha = 0.5,0.0  # re,im of the correlation parameter
//! beta = 0.1
//! gammaO_dB = 0,5,10,15,20
//! trials = 20000
//! seed = 1
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub users: usize,
    pub nt: usize,
    pub nr: usize,
    pub streams: Vec<usize>,
    pub alpha: Complex64,
    pub beta: f64,
    pub gamma_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl Scenario {
    /// Symmetric scenario: every user sends `d` streams.
    pub fn symmetric(users: usize, antennas: usize, d: usize) -> Self {
        Self {
            users,
            nt: antennas,
            nr: antennas,
            streams: vec![d; users],
            alpha: Complex64::new(0.0, 0.0),
            beta: 0.0,
            gamma_db: (0..=8).map(|i| 5.0 * i as f64).collect(),
            trials: 20_000,
            seed: 1,
        }
    }

    pub fn with_alpha(mut self, alpha: Complex64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_gamma_db(mut self, gamma_db: Vec<f64>) -> Self {
        self.gamma_db = gamma_db;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn gamma_linear(&self) -> Vec<f64> {
        self.gamma_db.iter().map(|&g| db_to_linear(g)).collect()
    }

    pub fn total_streams(&self) -> usize {
        self.streams.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.users < 2 {
            return bad(format!("K = {} but at least 2 users are required", self.users));
        }
        if self.nt == 0 || self.nr == 0 {
            return bad("antenna counts must be at least 1".into());
        }
        if self.streams.len() != self.users {
            return bad(format!(
                "{} stream counts given for {} users",
                self.streams.len(),
                self.users
            ));
        }
        let cap = self.nt.min(self.nr);
        if let Some(&d) = self.streams.iter().find(|&&d| d == 0 || d > cap) {
            return bad(format!("stream count {d} outside 1..={cap}"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta = {} outside [0, 1]", self.beta));
        }
        if !(self.alpha.norm() < 1.0) {
            return bad(format!("|alpha| = {} must be below 1", self.alpha.norm()));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.gamma_db.iter().any(|g| !g.is_finite()) {
            return bad("non-finite SNR point".into());
        }
        Ok(())
    }

    /// Parses the key-value format described in the module docs.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut users = None;
        let mut nt = None;
        let mut nr = None;
        let mut streams: Option<Vec<usize>> = None;
        let mut alpha = None;
        let mut beta = None;
        let mut gamma_db = None;
        let mut trials = None;
        let mut seed = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line: line_no, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "K" => users = Some(parse_scalar(value).map_err(err)?),
                "Nt" => nt = Some(parse_scalar(value).map_err(err)?),
                "Nr" => nr = Some(parse_scalar(value).map_err(err)?),
                "d" => streams = Some(parse_list(value).map_err(err)?),
                "alpha" => {
                    let parts: Vec<f64> = parse_list(value).map_err(err)?;
                    alpha = Some(match parts.as_slice() {
                        [re] => Complex64::new(*re, 0.0),
                        [re, im] => Complex64::new(*re, *im),
                        _ => return Err(err("alpha must be `re` or `re,im`".into())),
                    });
                }
                "beta" => beta = Some(parse_scalar(value).map_err(err)?),
                "gammaO_dB" => gamma_db = Some(parse_list(value).map_err(err)?),
                "trials" => trials = Some(parse_scalar(value).map_err(err)?),
                "seed" => seed = Some(parse_scalar(value).map_err(err)?),
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }

        let missing = |k: &str| Error::Config { line: 0, message: format!("missing key `{k}`") };
        let users: usize = users.ok_or_else(|| missing("K"))?;
        let mut streams = streams.ok_or_else(|| missing("d"))?;
        if streams.len() == 1 {
            streams = vec![streams[0]; users];
        }
        let scenario = Scenario {
            users,
            nt: nt.ok_or_else(|| missing("Nt"))?,
            nr: nr.ok_or_else(|| missing("Nr"))?,
            streams,
            alpha: alpha.unwrap_or(Complex64::new(0.0, 0.0)),
            beta: beta.unwrap_or(0.0),
            gamma_db: gamma_db.ok_or_else(|| missing("gammaO_dB"))?,
            trials: trials.ok_or_else(|| missing("trials"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Renders the scenario back into config text.
    pub fn to_config(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut out = String::new();
        let _ = writeln!(out, "K = {}", self.users);
        let _ = writeln!(out, "Nt = {}", self.nt);
        let _ = writeln!(out, "Nr = {}", self.nr);
        let _ = writeln!(out, "d = {}", join(self.streams.iter().map(|d| d.to_string()).collect()));
        let _ = writeln!(out, "alpha = {},{}", self.alpha.re, self.alpha.im);
        let _ = writeln!(out, "beta = {}", self.beta);
        let _ = writeln!(out, "gammaO_dB = {}", join(self.gamma_db.iter().map(|g| g.to_string()).collect()));
        let _ = writeln!(out, "trials = {}", self.trials);
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }
}

fn parse_scalar<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse `{value}`"))
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    value.split(',').map(|s| parse_scalar(s.trim())).collect()
}
