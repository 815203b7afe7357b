//! Closed-loop episodes at the control rate, with progress and lap accounting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::noise::{add_noise, draw_sigma};
use super::raycast::raycast;
use super::track::{Centerline, TrackBundle};
use super::vehicle::{step, VehicleState};
use super::SimError;
use crate::scan::{preprocess, ActionPair, CONTROL_DT, CONTROL_HZ};

/// Anything that turns a preprocessed scan (and optionally the true state) into a command.
pub trait Policy {
    fn act(&mut self, scan: &[f32], state: &VehicleState) -> ActionPair;
}

impl<F: FnMut(&[f32], &VehicleState) -> ActionPair> Policy for F {
    fn act(&mut self, scan: &[f32], state: &VehicleState) -> ActionPair {
        self(scan, state)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    LapComplete,
    Collision,
    Timeout,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::LapComplete => "lap_complete",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One control tick: the state when the scan was taken and the command issued.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TickRecord {
    pub t: f64,
    pub state: VehicleState,
    pub action: ActionPair,
    /// FNV-1a over the bit patterns of the preprocessed scan.
    pub scan_checksum: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeLog {
    pub ticks: Vec<TickRecord>,
    pub outcome: Outcome,
    /// Present iff the outcome is [`Outcome::LapComplete`].
    pub lap_time: Option<f64>,
    pub progress: f64,
    pub noise_sigma: f64,
    pub final_state: VehicleState,
}

pub fn scan_checksum(scan: &[f32]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in scan {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Unwrapped arc-length tracking along a closed centerline.
#[derive(Clone, Debug)]
pub struct ProgressTracker<'a> {
    centerline: &'a Centerline,
    last_s: f64,
    unwrapped: f64,
    max_unwrapped: f64,
}

impl<'a> ProgressTracker<'a> {
    pub fn new(centerline: &'a Centerline, start: [f64; 2]) -> Self {
        ProgressTracker {
            centerline,
            last_s: centerline.project(start),
            unwrapped: 0.0,
            max_unwrapped: 0.0,
        }
    }

    pub fn update(&mut self, p: [f64; 2]) {
        let len = self.centerline.length();
        let s = self.centerline.project(p);
        let mut d = s - self.last_s;
        if d > len / 2.0 {
            d -= len;
        } else if d <= -len / 2.0 {
            d += len;
        }
        self.unwrapped += d;
        self.max_unwrapped = self.max_unwrapped.max(self.unwrapped);
        self.last_s = s;
    }

    pub fn percent(&self) -> f64 {
        (self.max_unwrapped / self.centerline.length() * 100.0).clamp(0.0, 100.0)
    }

    /// The car is back at its start after covering more than 95% of the loop.
    pub fn lap_complete(&self) -> bool {
        let len = self.centerline.length();
        self.max_unwrapped > 0.95 * len && self.unwrapped >= len
    }
}

/// Percentage of the centerline covered by a trajectory, measured from its first point.
pub fn progress(track: &TrackBundle, trajectory: &[[f64; 2]]) -> f64 {
    let Some(first) = trajectory.first() else {
        return 0.0;
    };
    let mut t = ProgressTracker::new(&track.centerline, *first);
    for p in &trajectory[1..] {
        t.update(*p);
    }
    t.percent()
}

/// Rest pose on waypoint `index`, heading along the centerline.
pub fn start_state(track: &TrackBundle, index: usize) -> VehicleState {
    let cl = &track.centerline;
    let i = index % cl.len();
    let p = cl.points()[i];
    VehicleState::at_rest(p[0], p[1], cl.heading(i))
}

/// Uniformly random waypoint start.
pub fn random_start<R: Rng + ?Sized>(track: &TrackBundle, rng: &mut R) -> (usize, VehicleState) {
    let i = rng.gen_range(0..track.centerline.len());
    (i, start_state(track, i))
}

pub fn timeout_ticks(timeout_s: f64) -> usize {
    (timeout_s * CONTROL_HZ).ceil().max(0.0) as usize
}

/// Runs one episode. `observer` sees every tick together with the
/// preprocessed scan the policy received.
pub fn run_episode_with<P, O>(
    track: &TrackBundle,
    policy: &mut P,
    start: VehicleState,
    seed: u64,
    timeout_s: f64,
    observer: O,
) -> Result<EpisodeLog, SimError>
where
    P: Policy + ?Sized,
    O: FnMut(&TickRecord, &[f32]),
{
    run_inner(track, policy, start, seed, timeout_s, true, observer)
}

/// Episode without the sensor: the policy receives an empty scan. For
/// state-feedback controllers only; much cheaper than a sensed episode.
pub fn run_blind<P: Policy + ?Sized>(
    track: &TrackBundle,
    policy: &mut P,
    start: VehicleState,
    timeout_s: f64,
) -> Result<EpisodeLog, SimError> {
    run_inner(track, policy, start, 0, timeout_s, false, |_, _| {})
}

fn run_inner<P, O>(
    track: &TrackBundle,
    policy: &mut P,
    start: VehicleState,
    seed: u64,
    timeout_s: f64,
    sense: bool,
    mut observer: O,
) -> Result<EpisodeLog, SimError>
where
    P: Policy + ?Sized,
    O: FnMut(&TickRecord, &[f32]),
{
    if start.collides(&track.grid) {
        return Err(SimError::StartInCollision);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = draw_sigma(&mut rng);
    let mut tracker = ProgressTracker::new(&track.centerline, [start.x, start.y]);
    let mut state = start;
    let mut ticks = Vec::new();
    let mut outcome = Outcome::Timeout;
    let mut lap_time = None;
    for tick in 0..timeout_ticks(timeout_s) {
        let scan = if sense {
            let mut raw = raycast(&track.grid, state.sensor_pose())?;
            add_noise(&mut raw, sigma, &mut rng);
            preprocess(&raw).map_err(|e| SimError::Sensor(e.to_string()))?
        } else {
            Vec::new()
        };
        let action = policy.act(&scan, &state);
        let rec = TickRecord {
            t: tick as f64 * CONTROL_DT,
            state,
            action,
            scan_checksum: scan_checksum(&scan),
        };
        observer(&rec, &scan);
        ticks.push(rec);
        state = step(&state, &action, CONTROL_DT);
        tracker.update([state.x, state.y]);
        if state.collides(&track.grid) {
            outcome = Outcome::Collision;
            break;
        }
        if tracker.lap_complete() {
            outcome = Outcome::LapComplete;
            lap_time = Some((tick + 1) as f64 * CONTROL_DT);
            break;
        }
    }
    let progress = if outcome == Outcome::LapComplete {
        100.0
    } else {
        tracker.percent()
    };
    Ok(EpisodeLog {
        ticks,
        outcome,
        lap_time,
        progress,
        noise_sigma: sigma,
        final_state: state,
    })
}

pub fn run_episode<P: Policy + ?Sized>(
    track: &TrackBundle,
    policy: &mut P,
    start: VehicleState,
    seed: u64,
    timeout_s: f64,
) -> Result<EpisodeLog, SimError> {
    run_episode_with(track, policy, start, seed, timeout_s, |_, _| {})
}
