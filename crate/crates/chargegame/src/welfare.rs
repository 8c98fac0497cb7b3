//! Social welfare, the cooperative benchmark, and the price of anarchy.
//!
//! Total welfare at a bid profile is `λ·P·(Σ K_i·x_i − Σ x_i²) / Σ x_j`.
//! Writing `x = t·w` with `w` on the simplex shows the supremum over the open
//! strategy set is `λ·P·max_i K_i`, approached (never attained) by shrinking
//! the bids toward the max-coefficient vertex; the price of anarchy compares
//! that supremum against the welfare the equilibrium actually delivers. A
//! compact-box maximizer provides the numeric cross-check.

use thiserror::Error;

use crate::dynamics::{solve_nash, SolveError, SolverSettings};
use crate::game::{BidVector, ChargingGame, GameError};
use crate::numeric::golden_section_max;
use crate::rng;

const LANE_ASCENT: u64 = 0xa5ce_0170;
const ASCENT_SEED: u64 = 0x0c0f_fee1;
const ASCENT_STARTS: usize = 20;
const ASCENT_OBJECTIVE_TOL: f64 = 1e-8;
const ASCENT_MAX_PASSES: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WelfareError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("box bounds invalid: lo {lo}, hi {hi} (need 0 < lo <= hi, both finite)")]
    InvalidBox { lo: f64, hi: f64 },
    #[error("price of anarchy undefined: equilibrium welfare {0} is not positive")]
    UndefinedPoa(f64),
}

/// Sum of all utilities at `bids`.
pub fn social_welfare(game: &ChargingGame, bids: &BidVector) -> Result<f64, GameError> {
    if bids.len() != game.user_count() {
        return Err(GameError::DimensionMismatch {
            expected: game.user_count(),
            actual: bids.len(),
        });
    }
    Ok(social_welfare_with(game, bids.as_slice()))
}

fn social_welfare_with(game: &ChargingGame, bids: &[f64]) -> f64 {
    let total: f64 = bids.iter().sum();
    let mut weighted = 0.0;
    let mut squares = 0.0;
    for (k, x) in game.aggregate_coeffs().iter().zip(bids) {
        weighted += k * x;
        squares += x * x;
    }
    game.price_weight() * game.transmit_power() * (weighted - squares) / total
}

/// Least upper bound of total welfare over the open strategy set:
/// `λ·P·max_i K_i`. Not attained by any feasible profile.
pub fn cooperative_supremum(game: &ChargingGame) -> f64 {
    let max_k = game
        .aggregate_coeffs()
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    game.price_weight() * game.transmit_power() * max_k
}

/// Result of the compact-box welfare maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxOptimum {
    pub bids: BidVector,
    pub value: f64,
    /// True when the best ascent run hit the pass cap instead of the
    /// objective-change criterion; the reported point is still the best
    /// found.
    pub stalled: bool,
}

/// Maximize total welfare over the box `[box_lo, box_hi]^M` with multi-start
/// coordinate ascent (golden-section line search per coordinate).
///
/// The welfare restricted to one coordinate is unimodal, so each line search
/// is exact up to bracketing tolerance; multi-start guards the joint search.
/// A degenerate box (`box_lo == box_hi`) evaluates the single feasible point.
pub fn constrained_cooperative_optimum(
    game: &ChargingGame,
    box_lo: f64,
    box_hi: f64,
) -> Result<BoxOptimum, WelfareError> {
    if !(box_lo.is_finite() && box_hi.is_finite()) || box_lo <= 0.0 || box_lo > box_hi {
        return Err(WelfareError::InvalidBox {
            lo: box_lo,
            hi: box_hi,
        });
    }
    let m = game.user_count();
    if box_lo == box_hi {
        let bids = BidVector::uniform(box_lo, m)?;
        let value = social_welfare(game, &bids)?;
        return Ok(BoxOptimum {
            bids,
            value,
            stalled: false,
        });
    }

    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for start_index in 0..ASCENT_STARTS {
        let mut point = match start_index {
            0 => vec![box_lo; m],
            1 => vec![box_hi; m],
            _ => {
                let mut stream = rng::derive(ASCENT_SEED, &[LANE_ASCENT, start_index as u64]);
                (0..m).map(|_| stream.next_in(box_lo, box_hi)).collect()
            }
        };
        let mut value = social_welfare_with(game, &point);
        let mut stalled = true;
        for _ in 0..ASCENT_MAX_PASSES {
            for coord in 0..m {
                let (x, _) = golden_section_max(
                    |candidate| {
                        let mut probe = point.clone();
                        probe[coord] = candidate;
                        social_welfare_with(game, &probe)
                    },
                    box_lo,
                    box_hi,
                    (box_hi - box_lo) * 1e-12,
                );
                point[coord] = x;
            }
            let new_value = social_welfare_with(game, &point);
            let improvement = new_value - value;
            value = new_value;
            if improvement.abs() < ASCENT_OBJECTIVE_TOL {
                stalled = false;
                break;
            }
        }
        match &best {
            Some((_, best_value, _)) if *best_value >= value => {}
            _ => best = Some((point, value, stalled)),
        }
    }

    let (point, value, stalled) = best.expect("at least one start ran");
    Ok(BoxOptimum {
        bids: BidVector::new(point)?,
        value,
        stalled,
    })
}

/// Cooperative supremum divided by the welfare at the Nash equilibrium.
///
/// For a symmetric game this is `(2M−1)/M`. Errors if the equilibrium
/// welfare is not positive (cannot happen for valid games, where every
/// equilibrium utility is strictly positive).
pub fn price_of_anarchy(
    game: &ChargingGame,
    settings: &SolverSettings,
) -> Result<f64, WelfareError> {
    let (equilibrium, _) = solve_nash(game, settings)?;
    let at_equilibrium = social_welfare(game, &equilibrium)?;
    if at_equilibrium <= 0.0 {
        return Err(WelfareError::UndefinedPoa(at_equilibrium));
    }
    Ok(cooperative_supremum(game) / at_equilibrium)
}

/// Everything the efficiency analysis produces for one game.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareReport {
    pub equilibrium_welfare: f64,
    pub cooperative_supremum: f64,
    pub constrained_optimum: f64,
    pub constrained_argmax: Vec<f64>,
    pub poa: f64,
}

/// Solve the game and assemble the welfare summary, using
/// `[box_lo, box_hi]^M` for the numeric cross-check.
pub fn welfare_report(
    game: &ChargingGame,
    settings: &SolverSettings,
    box_lo: f64,
    box_hi: f64,
) -> Result<WelfareReport, WelfareError> {
    let (equilibrium, _) = solve_nash(game, settings)?;
    let equilibrium_welfare = social_welfare(game, &equilibrium)?;
    if equilibrium_welfare <= 0.0 {
        return Err(WelfareError::UndefinedPoa(equilibrium_welfare));
    }
    let supremum = cooperative_supremum(game);
    let boxed = constrained_cooperative_optimum(game, box_lo, box_hi)?;
    Ok(WelfareReport {
        equilibrium_welfare,
        cooperative_supremum: supremum,
        constrained_optimum: boxed.value,
        constrained_argmax: boxed.bids.to_vec(),
        poa: supremum / equilibrium_welfare,
    })
}
