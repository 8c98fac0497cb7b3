//! Experiment configuration: a flat `key = value` text file.
//!
//! Blank lines and `#` comments are ignored; every other line must be
//! `key = value`. Unknown and duplicate keys are hard errors so experiments
//! cannot silently drift. Defaults are the desk-scale scenario: 20 W
//! transmitter, price weight 1, demand rates in [1, 3] W, efficiencies in
//! [11%, 19%], sure delivery, 1000 trials.
//!
//! Keys:
//!
//! | key              | value                                             |
//! |------------------|---------------------------------------------------|
//! | `power`          | transmit power in watts                           |
//! | `lambda`         | price weight                                      |
//! | `demand_rate_lo` / `demand_rate_hi` | demand-rate sampling range (W) |
//! | `efficiency_lo` / `efficiency_hi`   | efficiency sampling range      |
//! | `users`          | user count or comma list (sweep)                  |
//! | `delivery_prob`  | scalar, or matrix rows `1,0.8;0.8,1`              |
//! | `update_prob`    | scalar, comma list, or `round-robin`              |
//! | `seed`           | master seed                                       |
//! | `tolerance`      | solver residual tolerance                         |
//! | `max_iterations` | solver iteration cap                              |
//! | `init`           | `half-k`, `constant:<c>`, `random:<lo>,<hi>`, `explicit:<v1>,<v2>,...` |
//! | `trials`         | instances per sweep point                         |

use std::collections::HashSet;
use std::path::Path;

use chargegame::{AsyncNetworkModel, ChargingGame, InitMode, SolverSettings, UpdateSchedule, UserProfile};
use chargegame::rng::{self, SplitMix64};
use thiserror::Error;

use crate::output::fmt_float;

const LANE_SAMPLE: u64 = 0x5a4d_91e0;
const LANE_MODEL: u64 = 0x4d0d_e15e;
const LANE_INIT: u64 = 0x12a7_0191;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Unreadable { path: String, message: String },
    #[error("config line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("config line {line}: invalid value for `{key}`: {message}")]
    InvalidValue {
        line: usize,
        key: String,
        message: String,
    },
    #[error("config invalid: {0}")]
    Semantic(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeliveryProb {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum UpdateProb {
    Scalar(f64),
    PerUser(Vec<f64>),
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    HalfK,
    Constant(f64),
    Random(f64, f64),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub power: f64,
    pub lambda: f64,
    pub demand_rate: (f64, f64),
    pub efficiency: (f64, f64),
    /// None means each experiment's default (2 for single-instance runs,
    /// the 2..=10 sweep otherwise).
    pub users: Option<Vec<usize>>,
    pub delivery_prob: DeliveryProb,
    pub update_prob: UpdateProb,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub init: InitSpec,
    pub trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            power: 20.0,
            lambda: 1.0,
            demand_rate: (1.0, 3.0),
            efficiency: (0.11, 0.19),
            users: None,
            delivery_prob: DeliveryProb::Scalar(1.0),
            update_prob: UpdateProb::Scalar(1.0),
            seed: 1,
            tolerance: 1e-9,
            max_iterations: 10_000,
            init: InitSpec::HalfK,
            trials: 1000,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = ExperimentConfig::default();
        let mut seen = HashSet::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Malformed {
                line,
                text: content.to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            config.apply(line, key, value)?;
        }
        config.validate().map_err(ConfigError::Semantic)?;
        Ok(config)
    }

    fn apply(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |message: String| ConfigError::InvalidValue {
            line,
            key: key.to_string(),
            message,
        };
        match key {
            "power" => self.power = parse_f64(value).map_err(bad)?,
            "lambda" => self.lambda = parse_f64(value).map_err(bad)?,
            "demand_rate_lo" => self.demand_rate.0 = parse_f64(value).map_err(bad)?,
            "demand_rate_hi" => self.demand_rate.1 = parse_f64(value).map_err(bad)?,
            "efficiency_lo" => self.efficiency.0 = parse_f64(value).map_err(bad)?,
            "efficiency_hi" => self.efficiency.1 = parse_f64(value).map_err(bad)?,
            "users" => {
                let list = value
                    .split(',')
                    .map(|v| v.trim().parse::<usize>().map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(bad)?;
                self.users = Some(list);
            }
            "delivery_prob" => {
                self.delivery_prob = if value.contains(';') || value.contains(',') {
                    let matrix = value
                        .split(';')
                        .map(|row| {
                            row.split(',')
                                .map(|v| parse_f64(v.trim()))
                                .collect::<Result<Vec<_>, _>>()
                        })
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(bad)?;
                    DeliveryProb::Matrix(matrix)
                } else {
                    DeliveryProb::Scalar(parse_f64(value).map_err(bad)?)
                };
            }
            "update_prob" => {
                self.update_prob = if value == "round-robin" {
                    UpdateProb::RoundRobin
                } else if value.contains(',') {
                    let list = value
                        .split(',')
                        .map(|v| parse_f64(v.trim()))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(bad)?;
                    UpdateProb::PerUser(list)
                } else {
                    UpdateProb::Scalar(parse_f64(value).map_err(bad)?)
                };
            }
            "seed" => self.seed = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "tolerance" => self.tolerance = parse_f64(value).map_err(bad)?,
            "max_iterations" => {
                self.max_iterations = value
                    .parse()
                    .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
            }
            "init" => self.init = parse_init(value).map_err(bad)?,
            "trials" => {
                self.trials = value
                    .parse()
                    .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("{name} must be positive and finite, got {v}"))
            }
        };
        positive("power", self.power)?;
        positive("lambda", self.lambda)?;
        positive("tolerance", self.tolerance)?;
        positive("demand_rate_lo", self.demand_rate.0)?;
        if self.demand_rate.1 < self.demand_rate.0 {
            return Err("demand_rate range is empty".into());
        }
        positive("efficiency_lo", self.efficiency.0)?;
        if self.efficiency.1 < self.efficiency.0 || self.efficiency.1 > 1.0 {
            return Err("efficiency range must satisfy 0 < lo <= hi <= 1".into());
        }
        if let Some(users) = &self.users {
            if users.is_empty() {
                return Err("users list is empty".into());
            }
            if users.iter().any(|&m| m < 2) {
                return Err("every user count must be at least 2".into());
            }
        }
        match &self.delivery_prob {
            DeliveryProb::Scalar(p) => {
                if !(p.is_finite() && *p > 0.0 && *p <= 1.0) {
                    return Err(format!("delivery_prob {p} must lie in (0, 1]"));
                }
            }
            DeliveryProb::Matrix(rows) => {
                let m = rows.len();
                if rows.iter().any(|r| r.len() != m) {
                    return Err("delivery_prob matrix must be square".into());
                }
            }
        }
        match &self.update_prob {
            UpdateProb::Scalar(p) => {
                if !(p.is_finite() && *p > 0.0 && *p <= 1.0) {
                    return Err(format!("update_prob {p} must lie in (0, 1]"));
                }
            }
            UpdateProb::PerUser(list) => {
                if list.iter().any(|p| !(p.is_finite() && *p > 0.0 && *p <= 1.0)) {
                    return Err("every update_prob must lie in (0, 1]".into());
                }
            }
            UpdateProb::RoundRobin => {}
        }
        match &self.init {
            InitSpec::HalfK => {}
            InitSpec::Constant(c) => positive("init constant", *c)?,
            InitSpec::Random(lo, hi) => {
                positive("init random lo", *lo)?;
                if hi <= lo {
                    return Err("init random range is empty".into());
                }
            }
            InitSpec::Explicit(v) => {
                if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err("init explicit vector must be nonempty and positive".into());
                }
            }
        }
        if self.max_iterations == 0 {
            return Err("max_iterations must be at least 1".into());
        }
        if self.trials == 0 {
            return Err("trials must be at least 1".into());
        }
        Ok(())
    }

    /// User counts for sweep experiments (defaults to 2..=10).
    pub fn sweep_users(&self) -> Vec<usize> {
        self.users.clone().unwrap_or_else(|| (2..=10).collect())
    }

    /// User count for single-instance experiments (defaults to 2).
    pub fn single_users(&self) -> usize {
        self.users.as_ref().map_or(2, |list| list[0])
    }

    /// Solver settings with this config's init; `salt` decorrelates random
    /// initializations across runs within one experiment.
    pub fn solver_settings(&self, salt: u64) -> SolverSettings {
        let init_mode = match &self.init {
            InitSpec::HalfK => InitMode::HalfK,
            InitSpec::Constant(c) => InitMode::Constant(*c),
            InitSpec::Random(lo, hi) => InitMode::RandomUniform {
                lo: *lo,
                hi: *hi,
                seed: rng::derive(self.seed, &[LANE_INIT, salt]).next_u64(),
            },
            InitSpec::Explicit(v) => InitMode::Explicit(v.clone()),
        };
        SolverSettings {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            init_mode,
        }
    }

    /// Deterministic per-(experiment, M, trial) sampling stream.
    pub fn sample_stream(&self, experiment: u64, users: usize, trial: u64) -> SplitMix64 {
        rng::derive(self.seed, &[LANE_SAMPLE, experiment, users as u64, trial])
    }

    /// Draw one game: demand rate and efficiency uniform per user, unit
    /// deadlines (only the rate and efficiency reach the coefficients).
    pub fn sample_game(&self, users: usize, stream: &mut SplitMix64) -> ChargingGame {
        let profiles = (0..users)
            .map(|_| {
                let rate = stream.next_in(self.demand_rate.0, self.demand_rate.1);
                let efficiency = stream.next_in(self.efficiency.0, self.efficiency.1);
                UserProfile::new(rate, 1.0, efficiency).expect("validated ranges")
            })
            .collect();
        ChargingGame::new(self.power, self.lambda, profiles).expect("validated parameters")
    }

    /// Network model for `users`, seeded per trial.
    pub fn network_model(&self, users: usize, trial: u64) -> Result<AsyncNetworkModel, String> {
        let matrix = match &self.delivery_prob {
            DeliveryProb::Scalar(p) => vec![vec![*p; users]; users],
            DeliveryProb::Matrix(rows) => {
                if rows.len() != users {
                    return Err(format!(
                        "delivery_prob matrix is {}x{} but the experiment needs {users} users",
                        rows.len(),
                        rows.len()
                    ));
                }
                rows.clone()
            }
        };
        let schedule = match &self.update_prob {
            UpdateProb::Scalar(p) => UpdateSchedule::Bernoulli(vec![*p; users]),
            UpdateProb::PerUser(list) => {
                if list.len() != users {
                    return Err(format!(
                        "update_prob lists {} users but the experiment needs {users}",
                        list.len()
                    ));
                }
                UpdateSchedule::Bernoulli(list.clone())
            }
            UpdateProb::RoundRobin => UpdateSchedule::RoundRobin,
        };
        let seed = rng::derive(self.seed, &[LANE_MODEL, users as u64, trial]).next_u64();
        AsyncNetworkModel::new(matrix, schedule, seed).map_err(|e| e.to_string())
    }

    /// Canonical text form: sorted keys, 17-significant-digit floats. The
    /// config hash is the FNV-1a of this string.
    pub fn canonical_string(&self) -> String {
        let delivery = match &self.delivery_prob {
            DeliveryProb::Scalar(p) => fmt_float(*p),
            DeliveryProb::Matrix(rows) => rows
                .iter()
                .map(|row| row.iter().map(|p| fmt_float(*p)).collect::<Vec<_>>().join(","))
                .collect::<Vec<_>>()
                .join(";"),
        };
        let update = match &self.update_prob {
            UpdateProb::Scalar(p) => fmt_float(*p),
            UpdateProb::PerUser(list) => list
                .iter()
                .map(|p| fmt_float(*p))
                .collect::<Vec<_>>()
                .join(","),
            UpdateProb::RoundRobin => "round-robin".to_string(),
        };
        let init = match &self.init {
            InitSpec::HalfK => "half-k".to_string(),
            InitSpec::Constant(c) => format!("constant:{}", fmt_float(*c)),
            InitSpec::Random(lo, hi) => format!("random:{},{}", fmt_float(*lo), fmt_float(*hi)),
            InitSpec::Explicit(v) => format!(
                "explicit:{}",
                v.iter().map(|x| fmt_float(*x)).collect::<Vec<_>>().join(",")
            ),
        };
        let users = match &self.users {
            None => "default".to_string(),
            Some(list) => list
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(","),
        };
        format!(
            "delivery_prob = {delivery}\n\
             demand_rate_hi = {}\n\
             demand_rate_lo = {}\n\
             efficiency_hi = {}\n\
             efficiency_lo = {}\n\
             init = {init}\n\
             lambda = {}\n\
             max_iterations = {}\n\
             power = {}\n\
             seed = {}\n\
             tolerance = {}\n\
             trials = {}\n\
             update_prob = {update}\n\
             users = {users}\n",
            fmt_float(self.demand_rate.1),
            fmt_float(self.demand_rate.0),
            fmt_float(self.efficiency.1),
            fmt_float(self.efficiency.0),
            fmt_float(self.lambda),
            self.max_iterations,
            fmt_float(self.power),
            self.seed,
            fmt_float(self.tolerance),
            self.trials,
        )
    }

    pub fn hash(&self) -> String {
        format!("{:016x}", fnv1a64(self.canonical_string().as_bytes()))
    }
}

fn parse_f64(value: &str) -> Result<f64, String> {
    value.parse::<f64>().map_err(|e| e.to_string())
}

fn parse_init(value: &str) -> Result<InitSpec, String> {
    if value == "half-k" {
        return Ok(InitSpec::HalfK);
    }
    let (kind, args) = value
        .split_once(':')
        .ok_or_else(|| format!("unrecognized init `{value}`"))?;
    match kind {
        "constant" => Ok(InitSpec::Constant(parse_f64(args)?)),
        "random" => {
            let (lo, hi) = args
                .split_once(',')
                .ok_or_else(|| "random init needs `lo,hi`".to_string())?;
            Ok(InitSpec::Random(parse_f64(lo.trim())?, parse_f64(hi.trim())?))
        }
        "explicit" => {
            let list = args
                .split(',')
                .map(|v| parse_f64(v.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(InitSpec::Explicit(list))
        }
        _ => Err(format!("unrecognized init `{value}`")),
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
