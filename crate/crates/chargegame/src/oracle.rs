//! Independent brute-force references.
//!
//! Everything here deliberately avoids the closed-form best response: the
//! grid maximizer only evaluates utilities, so agreement between the two
//! routes is evidence, not circularity. The property battery stress-tests
//! the structural facts the solvers rely on (componentwise monotonicity and
//! strict scaling of the joint best response).

use thiserror::Error;

use crate::game::{BidVector, ChargingGame, GameError};
use crate::numeric::golden_section_max;
use crate::rng;

const LANE_TUPLE: u64 = 0xba77_e12a;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("grid bounds invalid: lo {lo}, hi {hi}, steps {steps} (need 0 < lo < hi, steps >= 100)")]
    InvalidGrid { lo: f64, hi: f64, steps: usize },
    #[error("grid argmax landed on the {which} endpoint ({value}); the grid misses the optimum")]
    OptimumAtGridEdge { which: &'static str, value: f64 },
}

/// Search grid for the brute-force maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self, OracleError> {
        if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || lo >= hi || steps < 100 {
            return Err(OracleError::InvalidGrid { lo, hi, steps });
        }
        Ok(GridSpec { lo, hi, steps })
    }

    /// Default grid for a user with aggregate coefficient `k`: the optimum
    /// provably lies in `(0, k/2)`, so `[1e-4·k, k]` with 10⁴ steps brackets
    /// it comfortably.
    pub fn spanning_coefficient(k: f64) -> Result<Self, OracleError> {
        Self::new(1e-4 * k, k, 10_000)
    }
}

/// Maximize `U_user` over its own bid by exhaustive grid search followed by
/// one golden-section refinement around the best cell.
///
/// Returns the maximizing bid. Errors if the argmax lands on a grid endpoint,
/// since that means the grid may exclude the true optimum.
pub fn brute_force_best_response(
    game: &ChargingGame,
    user: usize,
    bids: &BidVector,
    grid: GridSpec,
) -> Result<f64, OracleError> {
    if user >= game.user_count() {
        return Err(GameError::UserOutOfRange {
            index: user,
            count: game.user_count(),
        }
        .into());
    }
    if bids.len() != game.user_count() {
        return Err(GameError::DimensionMismatch {
            expected: game.user_count(),
            actual: bids.len(),
        }
        .into());
    }

    let mut probe = bids.to_vec();
    let mut eval = |x: f64| {
        probe[user] = x;
        game.utility(user, &BidVector::new(probe.clone()).expect("probe bids positive"))
            .expect("validated dimensions")
    };

    let width = grid.hi - grid.lo;
    let mut best_index = 0;
    let mut best_value = f64::NEG_INFINITY;
    for i in 0..=grid.steps {
        let x = grid.lo + width * i as f64 / grid.steps as f64;
        let u = eval(x);
        if u > best_value {
            best_value = u;
            best_index = i;
        }
    }
    if best_index == 0 {
        return Err(OracleError::OptimumAtGridEdge {
            which: "lower",
            value: grid.lo,
        });
    }
    if best_index == grid.steps {
        return Err(OracleError::OptimumAtGridEdge {
            which: "upper",
            value: grid.hi,
        });
    }

    let cell = width / grid.steps as f64;
    let lo = grid.lo + cell * (best_index - 1) as f64;
    let hi = grid.lo + cell * (best_index + 1) as f64;
    let (argmax, _) = golden_section_max(eval, lo, hi, cell * 1e-10);
    Ok(argmax)
}

/// One failed property check, kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyViolation {
    pub trial: usize,
    pub property: &'static str,
    pub detail: String,
}

/// Outcome of [`property_battery`].
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub trials: usize,
    pub seed: u64,
    pub monotonicity_failures: usize,
    pub scaling_failures: usize,
    /// First few violations, capped so the report stays small.
    pub counterexamples: Vec<PropertyViolation>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.monotonicity_failures == 0 && self.scaling_failures == 0
    }
}

const MAX_COUNTEREXAMPLES: usize = 8;

/// Randomized check of the joint best response's structural properties.
///
/// Per trial: sample a game from `sample_game` (which receives a derived
/// sub-seed), then a bid profile `x`, a componentwise-larger profile `y`, and
/// a scale `α ∈ [0.05, 0.95]`, and assert
///
/// - monotonicity: `x ≤ y` implies `F(x) ≤ F(y)` componentwise;
/// - strict scaling: `F(α·x) > α·F(x)` and `α⁻¹·F(x) > F(α⁻¹·x)`
///   componentwise (α is sampled away from 1, where both collapse to
///   equalities).
///
/// Failures are counted and reported, never panicked, and the whole battery
/// is a pure function of `seed`.
pub fn property_battery(
    mut sample_game: impl FnMut(u64) -> ChargingGame,
    trials: usize,
    seed: u64,
) -> PropertyReport {
    let mut report = PropertyReport {
        trials,
        seed,
        monotonicity_failures: 0,
        scaling_failures: 0,
        counterexamples: Vec::new(),
    };

    for trial in 0..trials {
        let game = sample_game(rng::derive(seed, &[LANE_TUPLE, trial as u64, 0]).next_u64());
        let m = game.user_count();
        let mut stream = rng::derive(seed, &[LANE_TUPLE, trial as u64, 1]);

        let coeffs = game.aggregate_coeffs().to_vec();
        let x: Vec<f64> = coeffs.iter().map(|k| stream.next_in(1e-3 * k, 3.0 * k)).collect();
        let y: Vec<f64> = x
            .iter()
            .zip(&coeffs)
            .map(|(xi, k)| {
                // leave some components equal so the weak inequality is hit
                if stream.next_f64() < 0.25 {
                    *xi
                } else {
                    xi + stream.next_in(0.0, *k)
                }
            })
            .collect();
        let alpha = stream.next_in(0.05, 0.95);

        let fx = game.joint_best_response_with(&x);
        let fy = game.joint_best_response_with(&y);
        if (0..m).any(|i| fx[i] > fy[i]) {
            report.monotonicity_failures += 1;
            push_violation(
                &mut report,
                trial,
                "monotonicity",
                format!("x={x:?} y={y:?} F(x)={fx:?} F(y)={fy:?}"),
            );
        }

        let scaled_down: Vec<f64> = x.iter().map(|v| alpha * v).collect();
        let scaled_up: Vec<f64> = x.iter().map(|v| v / alpha).collect();
        let f_down = game.joint_best_response_with(&scaled_down);
        let f_up = game.joint_best_response_with(&scaled_up);
        let down_ok = (0..m).all(|i| f_down[i] > alpha * fx[i]);
        let up_ok = (0..m).all(|i| fx[i] / alpha > f_up[i]);
        if !(down_ok && up_ok) {
            report.scaling_failures += 1;
            push_violation(
                &mut report,
                trial,
                "scaling",
                format!("alpha={alpha} x={x:?} F(x)={fx:?} F(ax)={f_down:?} F(x/a)={f_up:?}"),
            );
        }
    }

    report
}

fn push_violation(report: &mut PropertyReport, trial: usize, property: &'static str, detail: String) {
    if report.counterexamples.len() < MAX_COUNTEREXAMPLES {
        report.counterexamples.push(PropertyViolation {
            trial,
            property,
            detail,
        });
    }
}
