//! Multi-trial evaluation, per-tick traces and the steering wobble proxy.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::policy::{Model, ModelError, NetPolicy};
use crate::sim::{
    random_start, run_episode, start_state, EpisodeLog, Outcome, Policy, SimError, TickRecord,
    TrackBundle,
};

pub const DEFAULT_TRIALS: usize = 10;
pub const DEFAULT_TIMEOUT_S: f64 = 60.0;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("trace has {0} ticks; at least 3 are needed")]
    TraceTooShort(usize),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub n_trials: usize,
    pub seed: u64,
    pub timeout_s: f64,
    /// Upper bound on parallel trials; results do not depend on it.
    pub workers: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n_trials: DEFAULT_TRIALS,
            seed: 0,
            timeout_s: DEFAULT_TIMEOUT_S,
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialSummary {
    pub trial: usize,
    pub start_index: usize,
    pub episode_seed: u64,
    pub outcome: Outcome,
    pub lap_time: Option<f64>,
    pub progress: f64,
    pub noise_sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub track: String,
    pub trials: Vec<TrialSummary>,
    /// Mean over successful trials only; `None` when nothing succeeded.
    pub avg_lap_time: Option<f64>,
    /// Mean over all trials.
    pub avg_progress: f64,
    pub success_rate: f64,
}

impl EvalReport {
    pub fn from_trials(
        model: impl Into<String>,
        track: impl Into<String>,
        mut trials: Vec<TrialSummary>,
    ) -> Self {
        trials.sort_by_key(|t| t.trial);
        let n = trials.len();
        let laps: Vec<f64> = trials.iter().filter_map(|t| t.lap_time).collect();
        let avg_lap_time = (!laps.is_empty()).then(|| laps.iter().sum::<f64>() / laps.len() as f64);
        let avg_progress = if n == 0 {
            0.0
        } else {
            trials.iter().map(|t| t.progress).sum::<f64>() / n as f64
        };
        let success_rate = if n == 0 {
            0.0
        } else {
            laps.len() as f64 / n as f64
        };
        EvalReport {
            model: model.into(),
            track: track.into(),
            trials,
            avg_lap_time,
            avg_progress,
            success_rate,
        }
    }

    pub fn csv_header() -> &'static str {
        "kind,model,track,trial,start_index,outcome,lap_time_s,progress_pct,success_rate\n"
    }

    /// Machine-readable rows (no header): one per trial, then a summary row.
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for t in &self.trials {
            let _ = writeln!(
                s,
                "trial,{},{},{},{},{},{},{:.4},",
                self.model,
                self.track,
                t.trial,
                t.start_index,
                t.outcome,
                fmt_lap(t.lap_time),
                t.progress
            );
        }
        let _ = writeln!(
            s,
            "summary,{},{},,,,{},{:.4},{:.4}",
            self.model,
            self.track,
            fmt_lap(self.avg_lap_time),
            self.avg_progress,
            self.success_rate
        );
        s
    }

    pub fn to_csv(&self) -> String {
        format!("{}{}", Self::csv_header(), self.csv_rows())
    }

    /// Human-readable summary table for a set of reports.
    pub fn table(reports: &[EvalReport]) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<20} {:<10} {:>12} {:>14} {:>9}",
            "model", "track", "avg lap (s)", "avg progress", "success"
        );
        for r in reports {
            let _ = writeln!(
                s,
                "{:<20} {:<10} {:>12} {:>13.1}% {:>8.0}%",
                r.model,
                r.track,
                fmt_lap(r.avg_lap_time),
                r.avg_progress,
                r.success_rate * 100.0
            );
        }
        s
    }
}

fn fmt_lap(t: Option<f64>) -> String {
    match t {
        Some(v) => format!("{v:.3}"),
        None => "N/A".into(),
    }
}

/// Start waypoint and episode seed of every trial, drawn up front so that
/// results do not depend on execution order.
pub fn trial_plan(track: &TrackBundle, n_trials: usize, seed: u64) -> Vec<(usize, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_trials)
        .map(|i| {
            let (start, _) = random_start(track, &mut rng);
            (
                start,
                seed ^ (0x5851_f42d_4c95_7f2d_u64.wrapping_mul(i as u64 + 1)),
            )
        })
        .collect()
}

/// Runs `n_trials` random-start episodes with a fresh policy per trial.
pub fn evaluate_with<F, P>(
    name: &str,
    make_policy: F,
    track: &TrackBundle,
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError>
where
    F: Fn() -> Result<P, EvalError> + Sync,
    P: Policy,
{
    let plan = trial_plan(track, cfg.n_trials, cfg.seed);
    let run = |(trial, &(start_index, episode_seed)): (usize, &(usize, u64))| -> Result<TrialSummary, EvalError> {
        let mut policy = make_policy()?;
        let log = run_episode(track, &mut policy, start_state(track, start_index), episode_seed, cfg.timeout_s)?;
        Ok(TrialSummary {
            trial,
            start_index,
            episode_seed,
            outcome: log.outcome,
            lap_time: log.lap_time,
            progress: log.progress,
            noise_sigma: log.noise_sigma,
        })
    };
    let trials: Vec<TrialSummary> = if cfg.workers <= 1 {
        plan.iter().enumerate().map(run).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| EvalError::Pool(e.to_string()))?;
        pool.install(|| {
            plan.par_iter()
                .enumerate()
                .map(run)
                .collect::<Result<_, _>>()
        })?
    };
    Ok(EvalReport::from_trials(name, track.name.clone(), trials))
}

pub fn evaluate(
    model: &Model,
    track: &TrackBundle,
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let name = format!("{}-{}", model.spec().name, model.format_name());
    evaluate_with(&name, || Ok(NetPolicy::new(model)?), track, cfg)
}

/// One full-resolution episode from waypoint `start`.
pub fn trace<P: Policy + ?Sized>(
    policy: &mut P,
    track: &TrackBundle,
    start: usize,
    seed: u64,
    timeout_s: f64,
) -> Result<EpisodeLog, EvalError> {
    Ok(run_episode(
        track,
        policy,
        start_state(track, start),
        seed,
        timeout_s,
    )?)
}

/// Per-tick CSV: time, rear-axle position, speed, commanded steering (rad)
/// and commanded speed (m/s).
pub fn trace_csv(ticks: &[TickRecord]) -> String {
    let mut s = String::from("t,x,y,v,steer,speed_cmd\n");
    for r in ticks {
        let _ = writeln!(
            s,
            "{:.3},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.t, r.state.x, r.state.y, r.state.v, r.action.steering_rad, r.action.speed_mps
        );
    }
    s
}

/// Mean absolute tick-to-tick change of the commanded steering angle, rad/tick.
pub fn wobble_metric(ticks: &[TickRecord]) -> Result<f64, EvalError> {
    if ticks.len() < 3 {
        return Err(EvalError::TraceTooShort(ticks.len()));
    }
    let total: f64 = ticks
        .windows(2)
        .map(|w| (w[1].action.steering_rad - w[0].action.steering_rad).abs())
        .sum();
    Ok(total / (ticks.len() - 1) as f64)
}
