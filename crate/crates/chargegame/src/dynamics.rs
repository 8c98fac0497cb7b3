//! Synchronous best-response iteration and convergence diagnostics.
//!
//! The solver runs the simultaneous (Jacobi) sweep `x⁽ⁿ⁾ = F(x⁽ⁿ⁻¹⁾)`, where
//! `F` applies every user's best response to the previous round's vector.
//! The iteration converges to the game's unique equilibrium from any positive
//! start; starting from half the aggregate coefficients (`u = K/2`) the
//! trajectory is componentwise nonincreasing and is the fastest start among
//! all profiles above `u`.

use thiserror::Error;

use crate::game::{BidVector, ChargingGame, GameError};
use crate::numeric::inf_norm_diff;
use crate::rng;

const LANE_INIT: u64 = 0x1217_50de;

/// How the iteration is seeded.
#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    /// `x⁽⁰⁾ = K/2`, the provably monotone (and fastest-from-above) start.
    HalfK,
    /// Every component set to the given constant.
    Constant(f64),
    /// Caller-provided start vector.
    Explicit(Vec<f64>),
    /// Componentwise uniform draws from `[lo, hi)`, derived from `seed`.
    RandomUniform { lo: f64, hi: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Infinity-norm residual below which successive iterates count as
    /// converged.
    pub tolerance: f64,
    /// Hard cap on sweeps.
    pub max_iterations: usize,
    pub init_mode: InitMode,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: 1e-9,
            max_iterations: 10_000,
            init_mode: InitMode::HalfK,
        }
    }
}

impl SolverSettings {
    pub fn with_tolerance(tolerance: f64) -> Self {
        SolverSettings {
            tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(SolveError::InvalidTolerance(self.tolerance));
        }
        if self.max_iterations == 0 {
            return Err(SolveError::ZeroIterationCap);
        }
        match &self.init_mode {
            InitMode::HalfK => {}
            InitMode::Constant(c) => {
                if !c.is_finite() || *c <= 0.0 {
                    return Err(SolveError::InvalidInit(format!("constant {c}")));
                }
            }
            InitMode::Explicit(v) => {
                if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
                    return Err(SolveError::InvalidInit(format!("explicit vector {v:?}")));
                }
            }
            InitMode::RandomUniform { lo, hi, .. } => {
                if !(lo.is_finite() && hi.is_finite()) || *lo <= 0.0 || lo >= hi {
                    return Err(SolveError::InvalidInit(format!("uniform range [{lo}, {hi})")));
                }
            }
        }
        Ok(())
    }

    /// Materialize the start vector for `game`.
    pub fn initial_bids(&self, game: &ChargingGame) -> Result<BidVector, SolveError> {
        self.validate()?;
        let m = game.user_count();
        let bids = match &self.init_mode {
            InitMode::HalfK => game.aggregate_coeffs().iter().map(|k| k / 2.0).collect(),
            InitMode::Constant(c) => vec![*c; m],
            InitMode::Explicit(v) => {
                if v.len() != m {
                    return Err(SolveError::Game(GameError::DimensionMismatch {
                        expected: m,
                        actual: v.len(),
                    }));
                }
                v.clone()
            }
            InitMode::RandomUniform { lo, hi, seed } => {
                let mut stream = rng::derive(*seed, &[LANE_INIT]);
                (0..m).map(|_| stream.next_in(*lo, *hi)).collect()
            }
        };
        Ok(BidVector::new(bids)?)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("max_iterations must be at least 1")]
    ZeroIterationCap,
    #[error("initial bids must be strictly positive: {0}")]
    InvalidInit(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Model(#[from] crate::async_sim::ModelError),
    #[error("no convergence after {iterations} iterations (last residual {residual:.3e}); raise the cap or loosen the tolerance")]
    NonConvergence { iterations: usize, residual: f64 },
}

/// Full record of one solver run.
#[derive(Debug, Clone)]
pub struct ConvergenceTrace {
    iterates: Vec<BidVector>,
    residuals: Vec<f64>,
    part_distances: Vec<f64>,
    converged: bool,
    fixed_point_residual: f64,
}

impl ConvergenceTrace {
    pub(crate) fn build(
        iterates: Vec<BidVector>,
        residuals: Vec<f64>,
        converged: bool,
        fixed_point_residual: f64,
    ) -> Self {
        debug_assert_eq!(residuals.len() + 1, iterates.len());
        let last = iterates.last().expect("trace has at least the start");
        let part_distances = iterates
            .iter()
            .map(|x| part_metric(x, last).expect("trace iterates share a length"))
            .collect();
        ConvergenceTrace {
            iterates,
            residuals,
            part_distances,
            converged,
            fixed_point_residual,
        }
    }

    /// Bid snapshots; index 0 is the initial profile.
    pub fn iterates(&self) -> &[BidVector] {
        &self.iterates
    }

    /// `‖x⁽ⁿ⁾ − x⁽ⁿ⁻¹⁾‖_∞`, one entry per sweep.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Part-metric distance from each iterate to the final one.
    pub fn part_distances(&self) -> &[f64] {
        &self.part_distances
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations_used(&self) -> usize {
        self.residuals.len()
    }

    /// `‖F(x_final) − x_final‖_∞`, measured once after the run.
    pub fn fixed_point_residual(&self) -> f64 {
        self.fixed_point_residual
    }

    pub fn final_bids(&self) -> &BidVector {
        self.iterates.last().expect("trace has at least the start")
    }
}

/// One simultaneous sweep; identical to
/// [`ChargingGame::joint_best_response`].
pub fn iterate_sync(game: &ChargingGame, bids: &BidVector) -> Result<BidVector, GameError> {
    game.joint_best_response(bids)
}

/// Iterate the simultaneous sweep to the unique equilibrium.
///
/// Stops once the successive residual is below the tolerance *and* the
/// returned profile's own fixed-point residual `‖F(x) − x‖_∞` is too — the
/// probe sweep that verifies the latter is reused as the next iterate when it
/// fails, so no work is wasted.
pub fn solve_nash(
    game: &ChargingGame,
    settings: &SolverSettings,
) -> Result<(BidVector, ConvergenceTrace), SolveError> {
    let start = settings.initial_bids(game)?;
    let mut iterates = vec![start];
    let mut residuals: Vec<f64> = Vec::new();
    let mut pending: Option<Vec<f64>> = None;

    for _ in 0..settings.max_iterations {
        let current = iterates.last().expect("nonempty").as_slice();
        let next = pending
            .take()
            .unwrap_or_else(|| game.joint_best_response_with(current));
        let residual = inf_norm_diff(&next, current);
        let next = BidVector::new(next)?;
        residuals.push(residual);
        iterates.push(next);

        if residual < settings.tolerance {
            let latest = iterates.last().expect("nonempty");
            let probe = game.joint_best_response_with(latest.as_slice());
            let fixed_point = inf_norm_diff(&probe, latest.as_slice());
            if fixed_point < settings.tolerance {
                let solution = latest.clone();
                let trace = ConvergenceTrace::build(iterates, residuals, true, fixed_point);
                return Ok((solution, trace));
            }
            pending = Some(probe);
        }
    }

    Err(SolveError::NonConvergence {
        iterations: residuals.len(),
        residual: *residuals.last().expect("at least one sweep ran"),
    })
}

/// Part (Thompson) metric on the positive orthant:
/// `max_i |ln(x_i / y_i)|`.
pub fn part_metric(x: &BidVector, y: &BidVector) -> Result<f64, GameError> {
    if x.len() != y.len() {
        return Err(GameError::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(x.iter()
        .zip(y.iter())
        .map(|(a, b)| (a / b).ln().abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("rate estimation needs at least 4 iterates, trace has {0}")]
    TraceTooShort(usize),
    #[error("residuals are zero or non-finite; no log-linear fit exists")]
    DegenerateResiduals,
}

/// Least-squares slope of `ln(residual)` against the iteration index over
/// the pre-terminal window (the final residual is dropped, as it is clipped
/// by the stopping rule). Negative slope means geometric decay with factor
/// `exp(slope)`.
pub fn estimate_rate(trace: &ConvergenceTrace) -> Result<f64, RateError> {
    if trace.iterates().len() < 4 {
        return Err(RateError::TraceTooShort(trace.iterates().len()));
    }
    let window = &trace.residuals()[..trace.residuals().len() - 1];
    if window.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(RateError::DegenerateResiduals);
    }

    let n = window.len() as f64;
    let mut sum_i = 0.0;
    let mut sum_y = 0.0;
    let mut sum_ii = 0.0;
    let mut sum_iy = 0.0;
    for (idx, r) in window.iter().enumerate() {
        let i = (idx + 1) as f64;
        let y = r.ln();
        sum_i += i;
        sum_y += y;
        sum_ii += i * i;
        sum_iy += i * y;
    }
    let denom = n * sum_ii - sum_i * sum_i;
    if denom == 0.0 {
        return Err(RateError::DegenerateResiduals);
    }
    Ok((n * sum_iy - sum_i * sum_y) / denom)
}

/// Componentwise ordering of a whole trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Decreasing,
    Increasing,
    NonMonotone,
}

/// Classify a trace: `Decreasing` when every iterate is componentwise `≤`
/// its predecessor, `Increasing` for the mirror case, `NonMonotone`
/// otherwise. A constant trace counts as `Decreasing`.
pub fn check_monotone(trace: &ConvergenceTrace) -> Monotonicity {
    let mut all_down = true;
    let mut all_up = true;
    for pair in trace.iterates().windows(2) {
        let (prev, next) = (pair[0].as_slice(), pair[1].as_slice());
        for (p, n) in prev.iter().zip(next) {
            if n > p {
                all_down = false;
            }
            if n < p {
                all_up = false;
            }
        }
    }
    if all_down {
        Monotonicity::Decreasing
    } else if all_up {
        Monotonicity::Increasing
    } else {
        Monotonicity::NonMonotone
    }
}
