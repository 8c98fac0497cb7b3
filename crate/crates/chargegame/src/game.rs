//! Game data model and the closed-form best response.
//!
//! A game instance couples a transmitter power budget `P` and a price weight
//! `λ` with `M ≥ 2` user profiles. Users submit strictly positive unit-price
//! bids `x_i`; the transmitter splits its power in proportion to the bids, so
//! user `i` receives `y_i = x_i·P·h_i / Σ_j x_j` where `h_i` is its link
//! efficiency. A user's payoff is its charging satisfaction minus the priced
//! payment, which collapses to
//!
//! ```text
//! U_i(x) = λ·P·(K_i·x_i − x_i²) / Σ_j x_j,      K_i = D_i·h_i / (λ·C_i)
//! ```
//!
//! with `C_i` the energy demand and `D_i` the deadline. `K_i` is the only
//! user-private quantity the dynamics ever need: the bid maximizing `U_i`
//! against opponents with bid sum `S` is `√(S² + K_i·S) − S`, strictly inside
//! `(0, K_i/2)`.

use std::ops::Index;

use thiserror::Error;

/// Errors from constructing or evaluating game primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("energy demand must be positive and finite, got {0}")]
    InvalidDemand(f64),
    #[error("deadline must be positive and finite, got {0}")]
    InvalidDeadline(f64),
    #[error("link efficiency must lie in (0, 1], got {0}")]
    InvalidEfficiency(f64),
    #[error("transmit power must be positive and finite, got {0}")]
    InvalidPower(f64),
    #[error("price weight must be positive and finite, got {0}")]
    InvalidPriceWeight(f64),
    #[error("a game needs at least two users, got {0}")]
    TooFewUsers(usize),
    #[error("bid at index {index} must be positive and finite, got {value}")]
    InvalidBid { index: usize, value: f64 },
    #[error("expected {expected} bids, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("user index {index} out of range for {count} users")]
    UserOutOfRange { index: usize, count: usize },
    #[error("opponent bid sum must be positive, got {0}")]
    NonPositiveOpponentSum(f64),
    #[error("difference step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("difference step {step} too large for bid {bid}")]
    StepTooLarge { step: f64, bid: f64 },
}

fn positive_finite(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// One charging user: how much energy it needs, by when, and how efficiently
/// transmitted power reaches it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserProfile {
    demand: f64,
    deadline: f64,
    efficiency: f64,
}

impl UserProfile {
    /// `demand` in joules (> 0), `deadline` in seconds (> 0), `efficiency`
    /// a fraction in `(0, 1]`.
    pub fn new(demand: f64, deadline: f64, efficiency: f64) -> Result<Self, GameError> {
        if !positive_finite(demand) {
            return Err(GameError::InvalidDemand(demand));
        }
        if !positive_finite(deadline) {
            return Err(GameError::InvalidDeadline(deadline));
        }
        if !positive_finite(efficiency) || efficiency > 1.0 {
            return Err(GameError::InvalidEfficiency(efficiency));
        }
        Ok(UserProfile {
            demand,
            deadline,
            efficiency,
        })
    }

    pub fn demand(&self) -> f64 {
        self.demand
    }

    pub fn deadline(&self) -> f64 {
        self.deadline
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// Minimum received power (W) that finishes charging exactly at the
    /// deadline: `C / D`.
    pub fn min_charge_rate(&self) -> f64 {
        self.demand / self.deadline
    }
}

/// Strictly positive unit-price bids, one per user.
///
/// The strategy set is the open positive orthant; the constructor rejects
/// non-finite and non-positive components so every downstream formula stays
/// well-defined.
#[derive(Debug, Clone, PartialEq)]
pub struct BidVector(Vec<f64>);

impl BidVector {
    pub fn new(bids: Vec<f64>) -> Result<Self, GameError> {
        for (index, &value) in bids.iter().enumerate() {
            if !positive_finite(value) {
                return Err(GameError::InvalidBid { index, value });
            }
        }
        Ok(BidVector(bids))
    }

    /// All-equal bid profile.
    pub fn uniform(value: f64, len: usize) -> Result<Self, GameError> {
        Self::new(vec![value; len])
    }

    /// Wrap values already known to be positive (solver outputs).
    pub(crate) fn from_raw(bids: Vec<f64>) -> Self {
        debug_assert!(bids.iter().all(|&b| positive_finite(b)));
        BidVector(bids)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.clone()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }
}

impl Index<usize> for BidVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Per-user outcome of a bid profile: received power, satisfaction ratio,
/// and utility.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationReport {
    /// Received power `y_i` in watts.
    pub received_power: Vec<f64>,
    /// `y_i / (C_i/D_i)`: 1 means charged exactly by the deadline.
    pub satisfaction: Vec<f64>,
    /// Utility `U_i` at the profile.
    pub utility: Vec<f64>,
}

/// A full game instance.
///
/// The per-user aggregate coefficients `K_i = D_i·h_i / (λ·C_i)` are computed
/// once at construction; all game math afterwards depends on user privates
/// only through them.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargingGame {
    transmit_power: f64,
    price_weight: f64,
    users: Vec<UserProfile>,
    aggregate: Vec<f64>,
}

impl ChargingGame {
    pub fn new(
        transmit_power: f64,
        price_weight: f64,
        users: Vec<UserProfile>,
    ) -> Result<Self, GameError> {
        if !positive_finite(transmit_power) {
            return Err(GameError::InvalidPower(transmit_power));
        }
        if !positive_finite(price_weight) {
            return Err(GameError::InvalidPriceWeight(price_weight));
        }
        if users.len() < 2 {
            return Err(GameError::TooFewUsers(users.len()));
        }
        let aggregate = users
            .iter()
            .map(|u| (u.deadline * u.efficiency) / (price_weight * u.demand))
            .collect();
        Ok(ChargingGame {
            transmit_power,
            price_weight,
            users,
            aggregate,
        })
    }

    /// Game of `count` identical users.
    pub fn symmetric(
        transmit_power: f64,
        price_weight: f64,
        count: usize,
        profile: UserProfile,
    ) -> Result<Self, GameError> {
        Self::new(transmit_power, price_weight, vec![profile; count])
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn transmit_power(&self) -> f64 {
        self.transmit_power
    }

    pub fn price_weight(&self) -> f64 {
        self.price_weight
    }

    pub fn users(&self) -> &[UserProfile] {
        &self.users
    }

    /// Aggregate coefficients `K_i = D_i·h_i / (λ·C_i)`.
    pub fn aggregate_coeffs(&self) -> &[f64] {
        &self.aggregate
    }

    fn check_bids(&self, bids: &BidVector) -> Result<(), GameError> {
        if bids.len() != self.users.len() {
            return Err(GameError::DimensionMismatch {
                expected: self.users.len(),
                actual: bids.len(),
            });
        }
        Ok(())
    }

    fn check_user(&self, user: usize) -> Result<(), GameError> {
        if user >= self.users.len() {
            return Err(GameError::UserOutOfRange {
                index: user,
                count: self.users.len(),
            });
        }
        Ok(())
    }

    /// Proportional power allocation: `y_i = x_i·P·h_i / Σ_j x_j`.
    pub fn allocate_power(&self, bids: &BidVector) -> Result<Vec<f64>, GameError> {
        self.check_bids(bids)?;
        let total: f64 = bids.iter().sum();
        Ok(self
            .users
            .iter()
            .zip(bids.iter())
            .map(|(u, &x)| x * self.transmit_power * u.efficiency / total)
            .collect())
    }

    /// Utility of `user` at `bids`: `λ·P·(K_i·x_i − x_i²) / Σ_j x_j`.
    pub fn utility(&self, user: usize, bids: &BidVector) -> Result<f64, GameError> {
        self.check_user(user)?;
        self.check_bids(bids)?;
        Ok(self.utility_with(user, bids.as_slice()))
    }

    pub(crate) fn utility_with(&self, user: usize, bids: &[f64]) -> f64 {
        let total: f64 = bids.iter().sum();
        let x = bids[user];
        let k = self.aggregate[user];
        self.price_weight * self.transmit_power * (k * x - x * x) / total
    }

    /// The bid maximizing `U_user` against the opponents' bids held fixed.
    ///
    /// Closed form `√(S² + K·S) − S` with `S` the opponent bid sum, evaluated
    /// as `K / (√(1 + K/S) + 1)`, which is algebraically identical and free
    /// of cancellation for any `S`. The result lies strictly in `(0, K/2)`.
    pub fn best_response(&self, user: usize, bids: &BidVector) -> Result<f64, GameError> {
        self.check_user(user)?;
        self.check_bids(bids)?;
        let s = self.opponent_sum(user, bids.as_slice());
        if s <= 0.0 {
            return Err(GameError::NonPositiveOpponentSum(s));
        }
        Ok(best_response_from_sum(self.aggregate[user], s))
    }

    fn opponent_sum(&self, user: usize, bids: &[f64]) -> f64 {
        bids.iter()
            .enumerate()
            .filter(|&(j, _)| j != user)
            .map(|(_, &x)| x)
            .sum()
    }

    pub(crate) fn best_response_with(&self, user: usize, bids: &[f64]) -> f64 {
        best_response_from_sum(self.aggregate[user], self.opponent_sum(user, bids))
    }

    /// One simultaneous sweep: every component is the best response computed
    /// from the same input vector.
    pub fn joint_best_response(&self, bids: &BidVector) -> Result<BidVector, GameError> {
        self.check_bids(bids)?;
        Ok(BidVector::from_raw(
            self.joint_best_response_with(bids.as_slice()),
        ))
    }

    pub(crate) fn joint_best_response_with(&self, bids: &[f64]) -> Vec<f64> {
        (0..self.users.len())
            .map(|i| self.best_response_with(i, bids))
            .collect()
    }

    /// Centered second difference of `U_user` in its own bid.
    ///
    /// The utility is strictly concave in the own bid, so the result is
    /// negative for every valid input; the exact second derivative is
    /// `−2·λ·P·S·(K + S) / (Σ_j x_j)³`.
    pub fn utility_curvature(
        &self,
        user: usize,
        bids: &BidVector,
        step: f64,
    ) -> Result<f64, GameError> {
        self.check_user(user)?;
        self.check_bids(bids)?;
        if !positive_finite(step) {
            return Err(GameError::InvalidStep(step));
        }
        let x = bids[user];
        if x - step <= 0.0 {
            return Err(GameError::StepTooLarge { step, bid: x });
        }
        let mut probe = bids.to_vec();
        let center = self.utility_with(user, &probe);
        probe[user] = x + step;
        let up = self.utility_with(user, &probe);
        probe[user] = x - step;
        let down = self.utility_with(user, &probe);
        Ok((up - 2.0 * center + down) / (step * step))
    }

    /// Received power, satisfaction, and utility for every user at `bids`.
    pub fn allocation_report(&self, bids: &BidVector) -> Result<AllocationReport, GameError> {
        let received_power = self.allocate_power(bids)?;
        let satisfaction = self
            .users
            .iter()
            .zip(&received_power)
            .map(|(u, &y)| y / u.min_charge_rate())
            .collect();
        let utility = (0..self.users.len())
            .map(|i| self.utility_with(i, bids.as_slice()))
            .collect();
        Ok(AllocationReport {
            received_power,
            satisfaction,
            utility,
        })
    }
}

/// Best response given the aggregate coefficient and the opponent bid sum.
///
/// Uses `K / (√(1 + K/S) + 1)` whenever `K/S` is representable; if `S` is so
/// small that `K/S` overflows, falls back to `√(S² + K·S) − S`, where the
/// subtraction is benign because `S ≪ √(K·S)` in that regime.
pub(crate) fn best_response_from_sum(k: f64, s: f64) -> f64 {
    debug_assert!(k > 0.0 && s > 0.0);
    let ratio = k / s;
    if ratio.is_finite() {
        k / ((1.0 + ratio).sqrt() + 1.0)
    } else {
        (s * s + k * s).sqrt() - s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    fn two_user_game(power: f64, efficiency: f64) -> ChargingGame {
        let user = UserProfile::new(1.0, 1.0, efficiency).unwrap();
        ChargingGame::symmetric(power, 1.0, 2, user).unwrap()
    }

    #[test]
    fn profile_rejects_out_of_range_fields() {
        assert!(UserProfile::new(0.0, 1.0, 0.5).is_err());
        assert!(UserProfile::new(1.0, -1.0, 0.5).is_err());
        assert!(UserProfile::new(1.0, 1.0, 0.0).is_err());
        assert!(UserProfile::new(1.0, 1.0, 1.1).is_err());
        assert!(UserProfile::new(f64::NAN, 1.0, 0.5).is_err());
        assert!(UserProfile::new(1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn bids_must_be_positive_and_finite() {
        assert!(BidVector::new(vec![1.0, 0.0]).is_err());
        assert!(BidVector::new(vec![1.0, -2.0]).is_err());
        assert!(BidVector::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(BidVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(BidVector::new(vec![1.0, 1e-300]).is_ok());
    }

    #[test]
    fn game_needs_two_users() {
        let user = UserProfile::new(1.0, 1.0, 0.5).unwrap();
        assert_eq!(
            ChargingGame::new(20.0, 1.0, vec![user]),
            Err(GameError::TooFewUsers(1))
        );
    }

    #[test]
    fn aggregate_coefficients_match_definition() {
        let users = vec![
            UserProfile::new(2.0, 3.0, 0.5).unwrap(),
            UserProfile::new(1.2, 1.0, 0.15).unwrap(),
        ];
        let game = ChargingGame::new(20.0, 2.0, users.clone()).unwrap();
        for (u, &k) in users.iter().zip(game.aggregate_coeffs()) {
            assert_eq!(k, (u.deadline() * u.efficiency()) / (2.0 * u.demand()));
            assert!(k > 0.0);
        }
    }

    #[test]
    fn symmetric_bids_split_power_equally() {
        let game = two_user_game(20.0, 0.15);
        for c in [0.2, 1.0, 7.0] {
            let y = game
                .allocate_power(&BidVector::uniform(c, 2).unwrap())
                .unwrap();
            assert!(close(y[0], 1.5, 1e-12), "y0 = {}", y[0]);
            assert!(close(y[1], 1.5, 1e-12), "y1 = {}", y[1]);
        }
    }

    #[test]
    fn allocation_follows_bid_proportions() {
        let game = two_user_game(20.0, 0.15);
        let y = game
            .allocate_power(&BidVector::new(vec![1.0, 3.0]).unwrap())
            .unwrap();
        assert!(close(y[0], 0.75, 1e-12));
        assert!(close(y[1], 2.25, 1e-12));

        let users = vec![
            UserProfile::new(1.0, 1.0, 0.11).unwrap(),
            UserProfile::new(1.0, 1.0, 0.15).unwrap(),
            UserProfile::new(1.0, 1.0, 0.19).unwrap(),
        ];
        let game = ChargingGame::new(20.0, 1.0, users).unwrap();
        let y = game
            .allocate_power(&BidVector::new(vec![1.0, 1.0, 2.0]).unwrap())
            .unwrap();
        assert!(close(y[0], 0.55, 1e-12));
        assert!(close(y[1], 0.75, 1e-12));
        assert!(close(y[2], 1.90, 1e-12));
    }

    #[test]
    fn allocation_rejects_wrong_length() {
        let game = two_user_game(20.0, 0.15);
        let bids = BidVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(
            game.allocate_power(&bids),
            Err(GameError::DimensionMismatch {
                expected: 2,
                actual: 3
            })
        );
    }

    #[test]
    fn allocation_conserves_the_power_budget() {
        let users = vec![
            UserProfile::new(2.0, 1.0, 0.11).unwrap(),
            UserProfile::new(1.0, 2.0, 0.19).unwrap(),
            UserProfile::new(3.0, 1.5, 0.15).unwrap(),
        ];
        let game = ChargingGame::new(20.0, 1.0, users).unwrap();
        let bids = BidVector::new(vec![0.3, 1.7, 0.04]).unwrap();
        let y = game.allocate_power(&bids).unwrap();
        let input_total: f64 = y
            .iter()
            .zip(game.users())
            .map(|(yi, u)| yi / u.efficiency())
            .sum();
        assert!(
            (input_total - 20.0).abs() / 20.0 < 1e-12,
            "conservation broke: {input_total}"
        );
    }

    #[test]
    fn utility_matches_hand_value() {
        // K = 1, symmetric bids 1/3: U = λ·P·(x − x²)/(2x) = 20/3.
        let user = UserProfile::new(1.0, 1.0, 1.0).unwrap();
        let game = ChargingGame::symmetric(20.0, 1.0, 2, user).unwrap();
        let bids = BidVector::uniform(1.0 / 3.0, 2).unwrap();
        let u = game.utility(0, &bids).unwrap();
        assert!(close(u, 20.0 / 3.0, 1e-12), "U = {u}");
    }

    #[test]
    fn utility_is_zero_at_bid_equal_to_coefficient() {
        let users = vec![
            UserProfile::new(2.0, 1.0, 0.4).unwrap(),
            UserProfile::new(1.0, 1.0, 0.9).unwrap(),
        ];
        let game = ChargingGame::new(20.0, 1.0, users).unwrap();
        let k0 = game.aggregate_coeffs()[0];
        let bids = BidVector::new(vec![k0, 0.7]).unwrap();
        assert_eq!(game.utility(0, &bids).unwrap(), 0.0);
    }

    #[test]
    fn utility_is_linear_in_transmit_power() {
        let low = two_user_game(20.0, 0.15);
        let high = two_user_game(40.0, 0.15);
        let bids = BidVector::new(vec![0.04, 0.11]).unwrap();
        for i in 0..2 {
            let u_low = low.utility(i, &bids).unwrap();
            let u_high = high.utility(i, &bids).unwrap();
            assert_eq!(u_high, 2.0 * u_low);
        }
    }

    #[test]
    fn utility_checks_the_user_index() {
        let game = two_user_game(20.0, 0.15);
        let bids = BidVector::uniform(1.0, 2).unwrap();
        assert_eq!(
            game.utility(2, &bids),
            Err(GameError::UserOutOfRange { index: 2, count: 2 })
        );
    }

    #[test]
    fn best_response_matches_closed_form_at_unit_point() {
        // K = 1, opponent sum 1: √2 − 1.
        let user = UserProfile::new(1.0, 1.0, 1.0).unwrap();
        let game = ChargingGame::symmetric(20.0, 1.0, 2, user).unwrap();
        let bids = BidVector::new(vec![0.5, 1.0]).unwrap();
        let br = game.best_response(0, &bids).unwrap();
        assert!(close(br, std::f64::consts::SQRT_2 - 1.0, 1e-14), "br = {br}");
    }

    #[test]
    fn best_response_approaches_half_coefficient_for_huge_opponents() {
        let k = 3.0;
        let br = best_response_from_sum(k, 1e12);
        assert!(br < k / 2.0, "must stay strictly below K/2");
        assert!(close(br, k / 2.0, 1e-11), "br = {br}");
    }

    #[test]
    fn best_response_vanishes_for_tiny_opponents() {
        let br = best_response_from_sum(1.0, 1e-30);
        assert!(br > 0.0);
        assert!(br < 1e-14, "br = {br}");
    }

    #[test]
    fn best_response_survives_ratio_overflow() {
        // K/S overflows f64 here; the fallback form must stay positive.
        let br = best_response_from_sum(1.0, 5e-324);
        assert!(br > 0.0, "br = {br}");
    }

    #[test]
    fn best_response_bounds_hold_across_scales() {
        let user = UserProfile::new(1.3, 2.0, 0.17).unwrap();
        let game = ChargingGame::symmetric(20.0, 0.8, 3, user).unwrap();
        let k = game.aggregate_coeffs()[0];
        for s in [1e-9, 1e-3, 0.1, 1.0, 1e3, 1e9] {
            let bids = BidVector::new(vec![0.1, s / 2.0, s / 2.0]).unwrap();
            let br = game.best_response(0, &bids).unwrap();
            assert!(br > 0.0 && br < k / 2.0, "bound violated at s={s}: {br}");
        }
    }

    #[test]
    fn joint_best_response_fixes_the_symmetric_equilibrium() {
        // M = 2, K = 1: the fixed point is 1/3 in both components.
        let user = UserProfile::new(1.0, 1.0, 1.0).unwrap();
        let game = ChargingGame::symmetric(20.0, 1.0, 2, user).unwrap();
        let fixed = BidVector::uniform(1.0 / 3.0, 2).unwrap();
        let next = game.joint_best_response(&fixed).unwrap();
        for i in 0..2 {
            assert!(close(next[i], fixed[i], 1e-15), "component {i}: {}", next[i]);
        }
    }

    #[test]
    fn sweep_from_half_coefficients_moves_strictly_down() {
        let users = vec![
            UserProfile::new(1.0, 1.0, 0.11).unwrap(),
            UserProfile::new(2.0, 1.5, 0.19).unwrap(),
            UserProfile::new(1.4, 1.0, 0.15).unwrap(),
        ];
        let game = ChargingGame::new(20.0, 1.0, users).unwrap();
        let half: Vec<f64> = game.aggregate_coeffs().iter().map(|k| k / 2.0).collect();
        let start = BidVector::new(half).unwrap();
        let next = game.joint_best_response(&start).unwrap();
        for i in 0..3 {
            assert!(next[i] < start[i], "component {i} did not decrease");
        }
    }

    #[test]
    fn joint_best_response_is_monotone_in_the_input() {
        let users = vec![
            UserProfile::new(1.0, 1.0, 0.11).unwrap(),
            UserProfile::new(2.0, 1.5, 0.19).unwrap(),
        ];
        let game = ChargingGame::new(20.0, 1.0, users).unwrap();
        let lo = BidVector::new(vec![0.02, 0.05]).unwrap();
        let hi = BidVector::new(vec![0.04, 0.05]).unwrap();
        let f_lo = game.joint_best_response(&lo).unwrap();
        let f_hi = game.joint_best_response(&hi).unwrap();
        for i in 0..2 {
            assert!(f_lo[i] <= f_hi[i], "order broke at component {i}");
        }
    }

    #[test]
    fn curvature_is_negative_on_sample_points() {
        let user = UserProfile::new(1.0, 1.0, 1.0).unwrap();
        let game = ChargingGame::symmetric(20.0, 1.0, 2, user).unwrap();
        let bids = BidVector::uniform(0.5, 2).unwrap();
        assert!(game.utility_curvature(0, &bids, 1e-4).unwrap() < 0.0);

        let users = vec![
            UserProfile::new(1.0, 1.0, 1.0).unwrap(),
            UserProfile::new(1.0, 2.0, 1.0).unwrap(),
        ];
        let game = ChargingGame::new(20.0, 1.0, users).unwrap();
        let bids = BidVector::new(vec![0.2, 0.9]).unwrap();
        assert!(game.utility_curvature(1, &bids, 1e-4).unwrap() < 0.0);
    }

    #[test]
    fn curvature_matches_the_analytic_second_derivative() {
        // K = 1, bids (1, 1), λ = 1, P = 20: −2·P·(K·S + S²)/(Σx)³ = −10.
        let user = UserProfile::new(1.0, 1.0, 1.0).unwrap();
        let game = ChargingGame::symmetric(20.0, 1.0, 2, user).unwrap();
        let bids = BidVector::uniform(1.0, 2).unwrap();
        let second = game.utility_curvature(0, &bids, 1e-4).unwrap();
        assert!(close(second, -10.0, 1e-3), "second difference = {second}");
    }

    #[test]
    fn curvature_rejects_bad_steps() {
        let game = two_user_game(20.0, 0.15);
        let bids = BidVector::new(vec![0.1, 0.4]).unwrap();
        assert_eq!(
            game.utility_curvature(0, &bids, 0.1),
            Err(GameError::StepTooLarge { step: 0.1, bid: 0.1 })
        );
        assert_eq!(
            game.utility_curvature(0, &bids, -1e-4),
            Err(GameError::InvalidStep(-1e-4))
        );
    }

    #[test]
    fn report_satisfaction_uses_the_minimum_rate() {
        let users = vec![
            UserProfile::new(2.0, 1.0, 0.15).unwrap(),
            UserProfile::new(1.0, 2.0, 0.15).unwrap(),
        ];
        let game = ChargingGame::new(20.0, 1.0, users).unwrap();
        let bids = BidVector::uniform(1.0, 2).unwrap();
        let report = game.allocation_report(&bids).unwrap();
        // Each receives 1.5 W; rates needed are 2 W and 0.5 W.
        assert!(close(report.satisfaction[0], 0.75, 1e-12));
        assert!(close(report.satisfaction[1], 3.0, 1e-12));
        assert_eq!(report.received_power.len(), 2);
        assert_eq!(report.utility.len(), 2);
    }
}
