//! Totally asynchronous best-response updating under packet loss.
//!
//! The network is simulated on a discrete round clock. Each round, every
//! directed link `(src → dst)` independently delivers `src`'s current bid
//! with its configured probability, overwriting `dst`'s mailbox entry;
//! afterwards each scheduled user recomputes its bid from its (possibly
//! stale) mailbox, and everyone else keeps the previous bid. With all
//! delivery and update probabilities at 1 the process is exactly the
//! synchronous sweep.
//!
//! All randomness is drawn from per-`(event, round)` streams derived from the
//! model seed, so a run is bit-reproducible regardless of evaluation order.

use thiserror::Error;

use crate::dynamics::{ConvergenceTrace, SolveError, SolverSettings};
use crate::game::{BidVector, ChargingGame};
use crate::numeric::inf_norm_diff;
use crate::rng;

const LANE_DELIVERY: u64 = 0xde11_04e5;
const LANE_UPDATE: u64 = 0x0bda_7e01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("delivery matrix must be square of size {expected}, got row {row} of length {len}")]
    BadMatrixShape {
        expected: usize,
        row: usize,
        len: usize,
    },
    #[error("model needs at least two users, got {0}")]
    TooFewUsers(usize),
    #[error("delivery probability {p} on link {from}->{to} must lie in (0, 1]")]
    InvalidDeliveryProb { from: usize, to: usize, p: f64 },
    #[error("update probability {p} for user {user} must lie in (0, 1]")]
    InvalidUpdateProb { user: usize, p: f64 },
    #[error("update schedule covers {schedule} users, model has {model}")]
    ScheduleMismatch { schedule: usize, model: usize },
    #[error("model sized for {model} users, input has {input}")]
    SizeMismatch { model: usize, input: usize },
}

/// When users recompute their bids.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateSchedule {
    /// Each round, user `i` updates with probability `probs[i]`.
    Bernoulli(Vec<f64>),
    /// Exactly one user updates per round, cycling in index order; with
    /// all-sure delivery this is the sequential (Gauss–Seidel) sweep.
    RoundRobin,
}

/// Per-link delivery probabilities, an update schedule, and the master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct AsyncNetworkModel {
    delivery_prob: Vec<Vec<f64>>,
    schedule: UpdateSchedule,
    seed: u64,
}

impl AsyncNetworkModel {
    /// `delivery_prob[src][dst]` is the chance that `src`'s bid reaches
    /// `dst` in a given round; the diagonal is ignored (a user always knows
    /// its own bid).
    pub fn new(
        delivery_prob: Vec<Vec<f64>>,
        schedule: UpdateSchedule,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let m = delivery_prob.len();
        if m < 2 {
            return Err(ModelError::TooFewUsers(m));
        }
        for (row, probs) in delivery_prob.iter().enumerate() {
            if probs.len() != m {
                return Err(ModelError::BadMatrixShape {
                    expected: m,
                    row,
                    len: probs.len(),
                });
            }
            for (col, &p) in probs.iter().enumerate() {
                if row != col && (!p.is_finite() || p <= 0.0 || p > 1.0) {
                    return Err(ModelError::InvalidDeliveryProb {
                        from: row,
                        to: col,
                        p,
                    });
                }
            }
        }
        match &schedule {
            UpdateSchedule::Bernoulli(probs) => {
                if probs.len() != m {
                    return Err(ModelError::ScheduleMismatch {
                        schedule: probs.len(),
                        model: m,
                    });
                }
                for (user, &p) in probs.iter().enumerate() {
                    if !p.is_finite() || p <= 0.0 || p > 1.0 {
                        return Err(ModelError::InvalidUpdateProb { user, p });
                    }
                }
            }
            UpdateSchedule::RoundRobin => {}
        }
        Ok(AsyncNetworkModel {
            delivery_prob,
            schedule,
            seed,
        })
    }

    /// Every link delivers with probability `p`; every user updates every
    /// round.
    pub fn uniform(users: usize, p: f64, seed: u64) -> Result<Self, ModelError> {
        Self::new(
            vec![vec![p; users]; users],
            UpdateSchedule::Bernoulli(vec![1.0; users]),
            seed,
        )
    }

    /// Sure delivery with users updating one at a time: the sequential
    /// sweep expressed as a schedule.
    pub fn round_robin(users: usize, seed: u64) -> Result<Self, ModelError> {
        Self::new(vec![vec![1.0; users]; users], UpdateSchedule::RoundRobin, seed)
    }

    pub fn with_schedule(mut self, schedule: UpdateSchedule) -> Result<Self, ModelError> {
        Self::new(
            std::mem::take(&mut self.delivery_prob),
            schedule,
            self.seed,
        )
    }

    pub fn user_count(&self) -> usize {
        self.delivery_prob.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn delivery_prob(&self) -> &[Vec<f64>] {
        &self.delivery_prob
    }

    pub fn schedule(&self) -> &UpdateSchedule {
        &self.schedule
    }

    /// Rounds of quiet required before declaring convergence:
    /// `2·⌈1 / min event probability⌉`. A single quiet round can simply mean
    /// nobody updated, so the window scales with how rare events are.
    pub fn detection_window(&self) -> usize {
        let m = self.user_count();
        let mut min_p: f64 = 1.0;
        for (row, probs) in self.delivery_prob.iter().enumerate() {
            for (col, &p) in probs.iter().enumerate() {
                if row != col {
                    min_p = min_p.min(p);
                }
            }
        }
        match &self.schedule {
            UpdateSchedule::Bernoulli(probs) => {
                for &p in probs {
                    min_p = min_p.min(p);
                }
            }
            UpdateSchedule::RoundRobin => min_p = min_p.min(1.0 / m as f64),
        }
        2 * (1.0 / min_p).ceil() as usize
    }
}

/// What each user currently believes about everyone's bids.
///
/// `view(i)[j]` is the freshest bid of `j` known to `i`; `age` counts rounds
/// since that entry was delivered, and `emitted_round` records the round at
/// whose end the owner computed it (0 for the broadcast initial profile).
/// Mailboxes start with everyone knowing the initial bids.
#[derive(Debug, Clone, PartialEq)]
pub struct MailboxState {
    round: u64,
    last_received: Vec<Vec<f64>>,
    age: Vec<Vec<u64>>,
    emitted_round: Vec<Vec<u64>>,
    last_update: Vec<u64>,
}

impl MailboxState {
    pub fn new(initial: &BidVector) -> Self {
        let m = initial.len();
        MailboxState {
            round: 0,
            last_received: vec![initial.to_vec(); m],
            age: vec![vec![0; m]; m],
            emitted_round: vec![vec![0; m]; m],
            last_update: vec![0; m],
        }
    }

    /// Rounds stepped so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Receiver `i`'s current view of all bids.
    pub fn view(&self, receiver: usize) -> &[f64] {
        &self.last_received[receiver]
    }

    pub fn age(&self, receiver: usize, source: usize) -> u64 {
        self.age[receiver][source]
    }

    pub fn emitted_round(&self, receiver: usize, source: usize) -> u64 {
        self.emitted_round[receiver][source]
    }

    /// Round at which `user` last recomputed its bid (0 if never).
    pub fn last_update_round(&self, user: usize) -> u64 {
        self.last_update[user]
    }

    /// Largest staleness across all off-diagonal entries.
    pub fn max_age(&self) -> u64 {
        let mut max = 0;
        for (i, row) in self.age.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if i != j {
                    max = max.max(a);
                }
            }
        }
        max
    }
}

/// Advance the network by one round.
///
/// Phase one delivers each user's current bid over every directed link that
/// fires; phase two lets scheduled users recompute from their mailboxes while
/// the rest keep their bids. Returns the end-of-round bid profile.
pub fn step_async(
    state: &mut MailboxState,
    bids: &BidVector,
    model: &AsyncNetworkModel,
    game: &ChargingGame,
) -> Result<BidVector, ModelError> {
    let m = model.user_count();
    if game.user_count() != m {
        return Err(ModelError::SizeMismatch {
            model: m,
            input: game.user_count(),
        });
    }
    if bids.len() != m || state.last_received.len() != m {
        return Err(ModelError::SizeMismatch {
            model: m,
            input: bids.len(),
        });
    }

    state.round += 1;
    let round = state.round;

    for src in 0..m {
        for dst in 0..m {
            if src == dst {
                // own bid is always current
                state.last_received[dst][src] = bids[src];
                state.age[dst][src] = 0;
                state.emitted_round[dst][src] = round - 1;
                continue;
            }
            let draw = rng::derive(
                model.seed,
                &[LANE_DELIVERY, round, src as u64, dst as u64],
            )
            .next_f64();
            if draw < model.delivery_prob[src][dst] {
                state.last_received[dst][src] = bids[src];
                state.age[dst][src] = 0;
                state.emitted_round[dst][src] = round - 1;
            } else {
                state.age[dst][src] += 1;
            }
        }
    }

    let mut next = bids.to_vec();
    for user in 0..m {
        let updates = match &model.schedule {
            UpdateSchedule::Bernoulli(probs) => {
                rng::derive(model.seed, &[LANE_UPDATE, round, user as u64]).next_f64()
                    < probs[user]
            }
            UpdateSchedule::RoundRobin => ((round - 1) as usize % m) == user,
        };
        if updates {
            next[user] = game.best_response_with(user, &state.last_received[user]);
            state.last_update[user] = round;
        }
    }
    Ok(BidVector::new(next).expect("best responses are positive"))
}

/// Run the asynchronous process until it settles.
///
/// Convergence is declared once the profile has moved less than the
/// tolerance both over the last round and over the model's detection window
/// of rounds, *and* the window carried real information: every link
/// delivered and every user updated at least once within it. A window in
/// which nothing was delivered leaves the profile frozen without being
/// anywhere near the equilibrium, so bare residuals are not trusted. The
/// limit matches the synchronous equilibrium.
pub fn run_async(
    game: &ChargingGame,
    model: &AsyncNetworkModel,
    settings: &SolverSettings,
) -> Result<(BidVector, ConvergenceTrace), SolveError> {
    if model.user_count() != game.user_count() {
        return Err(SolveError::Model(ModelError::SizeMismatch {
            model: model.user_count(),
            input: game.user_count(),
        }));
    }
    let start = settings.initial_bids(game)?;
    let window = model.detection_window();
    let mut state = MailboxState::new(&start);
    let mut iterates = vec![start];
    let mut residuals: Vec<f64> = Vec::new();

    for n in 1..=settings.max_iterations {
        let current = iterates.last().expect("nonempty").clone();
        let next = step_async(&mut state, &current, model, game).map_err(SolveError::Model)?;
        let residual = inf_norm_diff(next.as_slice(), current.as_slice());
        residuals.push(residual);
        iterates.push(next);

        if n >= window && residual < settings.tolerance {
            let over_window = inf_norm_diff(
                iterates[n].as_slice(),
                iterates[n - window].as_slice(),
            );
            let links_fresh = state.max_age() < window as u64;
            let everyone_updated = (0..game.user_count())
                .all(|i| state.last_update_round(i) + window as u64 > n as u64);
            if over_window < settings.tolerance && links_fresh && everyone_updated {
                let solution = iterates[n].clone();
                let probe = game.joint_best_response_with(solution.as_slice());
                let fixed_point = inf_norm_diff(&probe, solution.as_slice());
                let trace = ConvergenceTrace::build(iterates, residuals, true, fixed_point);
                return Ok((solution, trace));
            }
        }
    }

    Err(SolveError::NonConvergence {
        iterations: residuals.len(),
        residual: *residuals.last().expect("at least one round ran"),
    })
}
