//! Experiment runners.
//!
//! Each runner samples instances deterministically from the config seed,
//! solves them, and writes CSV data plus a JSON summary into the output
//! directory. Trace CSVs use the schema `iter,user,bid,residual` (the
//! residual cell is empty on the initial profile); sweep CSVs use
//! `M,trial,metric,value`.

use std::path::{Path, PathBuf};

use chargegame::{
    brute_force_best_response, cooperative_supremum, estimate_rate, property_battery, rng,
    run_async, social_welfare, solve_nash, BidVector, ChargingGame, ConvergenceTrace, GridSpec,
    InitMode, SolveError, SolverSettings, UserProfile,
};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::output::{fmt_float, write_csv, write_json};
use crate::CliError;

// Experiment identifiers mixed into sampling streams.
const EXP_CONVERGENCE_SYNC: u64 = 1;
const EXP_CONVERGENCE_ASYNC: u64 = 2;
const EXP_ITERS_VS_SIZE: u64 = 3;
const EXP_EQUILIBRIUM: u64 = 4;
const EXP_WELFARE: u64 = 5;
const EXP_POA: u64 = 6;
const EXP_VERIFY: u64 = 7;
const EXP_SOLVE: u64 = 8;

const LANE_VERIFY: u64 = 0x7e57_1f1e;

pub struct Runner<'a> {
    pub config: &'a ExperimentConfig,
    pub out: &'a Path,
    pub quiet: bool,
    pub hash: String,
}

impl<'a> Runner<'a> {
    pub fn new(config: &'a ExperimentConfig, out: &'a Path, quiet: bool) -> Self {
        let hash = config.hash();
        Runner {
            config,
            out,
            quiet,
            hash,
        }
    }

    fn note(&self, message: &str) {
        if !self.quiet {
            println!("{message}");
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn summary(&self, experiment: &str, aggregates: Value) -> Value {
        json!({
            "config_hash": self.hash,
            "seed": self.config.seed,
            "experiment": experiment,
            "aggregates": aggregates,
        })
    }

    fn solve_or_exit(
        &self,
        game: &ChargingGame,
        settings: &SolverSettings,
    ) -> Result<(BidVector, ConvergenceTrace), CliError> {
        solve_nash(game, settings).map_err(map_solve_error)
    }

    /// Fig. 1-class run: one instance, three starts (half the coefficients,
    /// well above, well below), one trace file per start.
    pub fn convergence_sync(&self) -> Result<(), CliError> {
        let users = self.config.single_users();
        let game = self
            .config
            .sample_game(users, &mut self.config.sample_stream(EXP_CONVERGENCE_SYNC, users, 0));
        let mut runs = serde_json::Map::new();
        for (label, init) in start_points(&game) {
            let settings = SolverSettings {
                init_mode: init,
                ..self.config.solver_settings(0)
            };
            let (_, trace) = self.solve_or_exit(&game, &settings)?;
            let file = format!("convergence-sync-{label}.csv");
            write_csv(
                &self.path(&file),
                "convergence-sync",
                &self.hash,
                self.config.seed,
                "iter,user,bid,residual",
                &trace_rows(&trace),
            )?;
            self.note(&format!(
                "convergence-sync [{label}]: {} iterations -> {file}",
                trace.iterations_used()
            ));
            runs.insert(label.to_string(), trace_summary(&trace));
        }
        write_json(
            &self.path("convergence-sync.json"),
            &self.summary("convergence-sync", json!({ "users": users, "runs": runs })),
        )
    }

    /// Fig. 2-class run: the same three starts under lossy delivery.
    pub fn convergence_async(&self) -> Result<(), CliError> {
        let users = self.config.single_users();
        let game = self.config.sample_game(
            users,
            &mut self.config.sample_stream(EXP_CONVERGENCE_ASYNC, users, 0),
        );
        let model = self
            .config
            .network_model(users, 0)
            .map_err(CliError::Config)?;
        let mut runs = serde_json::Map::new();
        for (label, init) in start_points(&game) {
            let settings = SolverSettings {
                init_mode: init,
                ..self.config.solver_settings(0)
            };
            let (_, trace) = run_async(&game, &model, &settings).map_err(map_solve_error)?;
            let file = format!("convergence-async-{label}.csv");
            write_csv(
                &self.path(&file),
                "convergence-async",
                &self.hash,
                self.config.seed,
                "iter,user,bid,residual",
                &trace_rows(&trace),
            )?;
            self.note(&format!(
                "convergence-async [{label}]: {} rounds -> {file}",
                trace.iterations_used()
            ));
            runs.insert(label.to_string(), trace_summary(&trace));
        }
        write_json(
            &self.path("convergence-async.json"),
            &self.summary(
                "convergence-async",
                json!({
                    "users": users,
                    "detection_window": model.detection_window(),
                    "runs": runs,
                }),
            ),
        )
    }

    /// Fig. 3-class sweep: iterations to converge versus network size, both
    /// synchronous and lossy-asynchronous.
    pub fn iters_vs_size(&self) -> Result<(), CliError> {
        let mut rows = Vec::new();
        let mut sync_means = serde_json::Map::new();
        let mut async_means = serde_json::Map::new();
        for users in self.config.sweep_users() {
            let mut sync_total = 0usize;
            let mut async_total = 0usize;
            for trial in 0..self.config.trials as u64 {
                let game = self.config.sample_game(
                    users,
                    &mut self.config.sample_stream(EXP_ITERS_VS_SIZE, users, trial),
                );
                let settings = self.config.solver_settings(trial);
                let (_, sync_trace) = self.solve_or_exit(&game, &settings)?;
                let model = self
                    .config
                    .network_model(users, trial)
                    .map_err(CliError::Config)?;
                let (_, async_trace) =
                    run_async(&game, &model, &settings).map_err(map_solve_error)?;
                sync_total += sync_trace.iterations_used();
                async_total += async_trace.iterations_used();
                rows.push(format!(
                    "{users},{trial},iters_sync,{}",
                    fmt_float(sync_trace.iterations_used() as f64)
                ));
                rows.push(format!(
                    "{users},{trial},iters_async,{}",
                    fmt_float(async_trace.iterations_used() as f64)
                ));
            }
            let denom = self.config.trials as f64;
            sync_means.insert(users.to_string(), json!(sync_total as f64 / denom));
            async_means.insert(users.to_string(), json!(async_total as f64 / denom));
            self.note(&format!(
                "iters-vs-size M={users}: sync {:.2}, async {:.2}",
                sync_total as f64 / denom,
                async_total as f64 / denom
            ));
        }
        write_csv(
            &self.path("iters-vs-size.csv"),
            "iters-vs-size",
            &self.hash,
            self.config.seed,
            "M,trial,metric,value",
            &rows,
        )?;
        write_json(
            &self.path("iters-vs-size.json"),
            &self.summary(
                "iters-vs-size",
                json!({ "mean_iterations": { "sync": sync_means, "async": async_means } }),
            ),
        )
    }

    /// Fig. 4/5/6-class sweeps share one shape: per network size, `trials`
    /// sampled instances, one metric of the solved equilibrium each.
    fn sweep(
        &self,
        experiment: &str,
        experiment_id: u64,
        metric: &str,
        value_of: impl Fn(&ChargingGame, &BidVector) -> f64,
    ) -> Result<(), CliError> {
        let mut rows = Vec::new();
        let mut means = serde_json::Map::new();
        for users in self.config.sweep_users() {
            let mut total = 0.0;
            for trial in 0..self.config.trials as u64 {
                let game = self.config.sample_game(
                    users,
                    &mut self.config.sample_stream(experiment_id, users, trial),
                );
                let settings = self.config.solver_settings(trial);
                let (bids, _) = self.solve_or_exit(&game, &settings)?;
                let value = value_of(&game, &bids);
                total += value;
                rows.push(format!("{users},{trial},{metric},{}", fmt_float(value)));
            }
            let mean = total / self.config.trials as f64;
            means.insert(users.to_string(), json!(mean));
            self.note(&format!("{experiment} M={users}: mean {metric} {mean:.6}"));
        }
        write_csv(
            &self.path(&format!("{experiment}.csv")),
            experiment,
            &self.hash,
            self.config.seed,
            "M,trial,metric,value",
            &rows,
        )?;
        write_json(
            &self.path(&format!("{experiment}.json")),
            &self.summary(experiment, json!({ "metric": metric, "mean": means })),
        )
    }

    pub fn equilibrium_vs_users(&self) -> Result<(), CliError> {
        self.sweep(
            "equilibrium-vs-users",
            EXP_EQUILIBRIUM,
            "equilibrium_bid",
            |_, bids| bids.iter().sum::<f64>() / bids.len() as f64,
        )
    }

    pub fn welfare_vs_users(&self) -> Result<(), CliError> {
        self.sweep("welfare-vs-users", EXP_WELFARE, "welfare", |game, bids| {
            social_welfare(game, bids).expect("solved bids are valid")
        })
    }

    pub fn poa_vs_users(&self) -> Result<(), CliError> {
        self.sweep("poa-vs-users", EXP_POA, "poa", |game, bids| {
            cooperative_supremum(game)
                / social_welfare(game, bids).expect("solved bids are valid")
        })
    }

    /// Independent cross-checks: the structural property battery, grid-
    /// oracle agreement with the closed-form best response, and own-bid
    /// concavity. Sizes are fixed (10^4 / 100 / 10^3) so configuration
    /// cannot weaken the verification.
    pub fn verify(&self) -> Result<(), CliError> {
        let config = self.config;
        let sampler = |seed: u64| {
            let mut stream = rng::SplitMix64::new(seed);
            let m = 2 + (stream.next_u64() % 7) as usize;
            let users = (0..m)
                .map(|_| {
                    UserProfile::new(
                        stream.next_in(config.demand_rate.0, config.demand_rate.1),
                        1.0,
                        stream.next_in(config.efficiency.0, config.efficiency.1),
                    )
                    .expect("validated ranges")
                })
                .collect();
            ChargingGame::new(config.power, config.lambda, users).expect("validated parameters")
        };
        let battery = property_battery(sampler, 10_000, config.seed);
        self.note(&format!(
            "verify: battery {} trials, {} monotonicity / {} scaling failures",
            battery.trials, battery.monotonicity_failures, battery.scaling_failures
        ));

        let mut oracle_failures = 0usize;
        let mut max_abs_diff: f64 = 0.0;
        for trial in 0..100u64 {
            let m = 2 + (trial % 7) as usize;
            let game = config.sample_game(m, &mut config.sample_stream(EXP_VERIFY, m, trial));
            let mut stream = rng::derive(config.seed, &[LANE_VERIFY, trial]);
            let bids = BidVector::new(
                game.aggregate_coeffs()
                    .iter()
                    .map(|k| stream.next_in(1e-3 * k, 10.0 * k))
                    .collect(),
            )
            .expect("positive bids");
            let user = (trial % m as u64) as usize;
            let grid = GridSpec::spanning_coefficient(game.aggregate_coeffs()[user])
                .expect("valid grid");
            let brute = brute_force_best_response(&game, user, &bids, grid)
                .map_err(|e| CliError::Verification(e.to_string()))?;
            let closed = game.best_response(user, &bids).expect("validated");
            let diff = (brute - closed).abs();
            max_abs_diff = max_abs_diff.max(diff);
            if diff >= 1e-5 {
                oracle_failures += 1;
            }
        }
        self.note(&format!(
            "verify: oracle agreement max |diff| {max_abs_diff:.3e}, {oracle_failures} failures"
        ));

        let mut curvature_failures = 0usize;
        for trial in 0..1000u64 {
            let m = 2 + (trial % 7) as usize;
            let game =
                config.sample_game(m, &mut config.sample_stream(EXP_VERIFY, m, 1000 + trial));
            let mut stream = rng::derive(config.seed, &[LANE_VERIFY, 1000 + trial]);
            let bids = BidVector::new(
                game.aggregate_coeffs()
                    .iter()
                    .map(|k| stream.next_in(1e-3 * k, 10.0 * k))
                    .collect(),
            )
            .expect("positive bids");
            let user = (trial % m as u64) as usize;
            let second = game
                .utility_curvature(user, &bids, 1e-4 * bids[user])
                .expect("step fits");
            if second >= 0.0 {
                curvature_failures += 1;
            }
        }
        self.note(&format!(
            "verify: curvature {curvature_failures} failures on 1000 points"
        ));

        let counterexamples: Vec<Value> = battery
            .counterexamples
            .iter()
            .map(|v| json!({ "trial": v.trial, "property": v.property, "detail": v.detail }))
            .collect();
        write_json(
            &self.path("verify.json"),
            &self.summary(
                "verify",
                json!({
                    "battery": {
                        "trials": battery.trials,
                        "monotonicity_failures": battery.monotonicity_failures,
                        "scaling_failures": battery.scaling_failures,
                        "counterexamples": counterexamples,
                    },
                    "oracle_agreement": {
                        "instances": 100,
                        "tolerance": 1e-5,
                        "max_abs_diff": max_abs_diff,
                        "failures": oracle_failures,
                    },
                    "curvature": {
                        "points": 1000,
                        "failures": curvature_failures,
                    },
                }),
            ),
        )?;

        if !battery.all_passed() || oracle_failures > 0 || curvature_failures > 0 {
            return Err(CliError::Verification(format!(
                "verification failed: {} monotonicity, {} scaling, {} oracle, {} curvature",
                battery.monotonicity_failures,
                battery.scaling_failures,
                oracle_failures,
                curvature_failures
            )));
        }
        Ok(())
    }

    /// Solve one instance and print the equilibrium, its welfare, and the
    /// price of anarchy.
    pub fn solve(&self) -> Result<(), CliError> {
        let users = self.config.single_users();
        let game = self
            .config
            .sample_game(users, &mut self.config.sample_stream(EXP_SOLVE, users, 0));
        let settings = self.config.solver_settings(0);
        let (bids, trace) = self.solve_or_exit(&game, &settings)?;
        let welfare = social_welfare(&game, &bids).expect("solved bids are valid");
        let poa = cooperative_supremum(&game) / welfare;
        self.note(&format!(
            "instance: {users} users, power {} W, lambda {}",
            game.transmit_power(),
            game.price_weight()
        ));
        println!("nash equilibrium bids:");
        for i in 0..users {
            println!("  user {i}: {}", fmt_float(bids[i]));
        }
        println!("welfare: {}", fmt_float(welfare));
        println!("poa: {}", fmt_float(poa));
        println!("iterations: {}", trace.iterations_used());
        Ok(())
    }
}

/// The three figure-class starts: half the coefficients, 10x the largest
/// coefficient, and a near-zero profile.
fn start_points(game: &ChargingGame) -> Vec<(&'static str, InitMode)> {
    let max_k = game
        .aggregate_coeffs()
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    vec![
        ("halfk", InitMode::HalfK),
        ("high", InitMode::Constant(10.0 * max_k)),
        ("low", InitMode::Constant(1e-6)),
    ]
}

fn trace_rows(trace: &ConvergenceTrace) -> Vec<String> {
    let mut rows = Vec::new();
    for (iter, bids) in trace.iterates().iter().enumerate() {
        for user in 0..bids.len() {
            let residual = if iter == 0 {
                String::new()
            } else {
                fmt_float(trace.residuals()[iter - 1])
            };
            rows.push(format!("{iter},{user},{},{residual}", fmt_float(bids[user])));
        }
    }
    rows
}

fn trace_summary(trace: &ConvergenceTrace) -> Value {
    let rate = estimate_rate(trace).ok();
    json!({
        "iterations": trace.iterations_used(),
        "converged": trace.converged(),
        "final_residual": trace.residuals().last().copied(),
        "fixed_point_residual": trace.fixed_point_residual(),
        "rate_slope": rate,
    })
}

fn map_solve_error(error: SolveError) -> CliError {
    match error {
        SolveError::NonConvergence { iterations, residual } => CliError::NonConvergence(format!(
            "no convergence after {iterations} iterations (residual {residual:.3e})"
        )),
        other => CliError::Config(other.to_string()),
    }
}
