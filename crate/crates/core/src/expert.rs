//! Pure-pursuit expert and behavior-cloning data collection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::dataset::{Dataset, Sample};
use crate::scan::{map_labels, ActionPair, SPEED_MAX, STEER_MAX};
use crate::sim::vehicle::WHEELBASE;
use crate::sim::{
    random_start, run_episode_with, Centerline, Outcome, Policy, SimError, TrackBundle,
    VehicleState,
};

/// Lateral acceleration budget of the speed profile, m/s^2.
pub const A_LAT_MAX: f64 = 4.0;
/// Waypoint offset of the three-point curvature estimate.
const CURVATURE_STRIDE: usize = 3;
/// Time allowed per demonstration lap.
pub const LAP_TIMEOUT_S: f64 = 120.0;

#[derive(Debug, Error)]
pub enum ExpertError {
    #[error("centerline has {0} waypoints; the expert needs at least 3")]
    DegenerateCenterline(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// `min(SPEED_MAX, sqrt(A_LAT_MAX / |kappa|))`.
pub fn curvature_speed(kappa: f64) -> f64 {
    if kappa == 0.0 {
        SPEED_MAX
    } else {
        (A_LAT_MAX / kappa.abs()).sqrt().min(SPEED_MAX)
    }
}

pub fn lookahead_distance(v: f64) -> f64 {
    (0.5 + 0.3 * v).clamp(0.5, 2.0)
}

/// Pure pursuit on the centerline with a curvature-limited speed profile.
///
/// The speed is set by the sharpest curvature within a preview window ahead
/// of the car, so that the lagged speed response settles before a turn.
#[derive(Clone, Debug)]
pub struct Expert<'a> {
    centerline: &'a Centerline,
    curvature: Vec<f64>,
}

impl<'a> Expert<'a> {
    pub fn new(track: &'a TrackBundle) -> Result<Self, ExpertError> {
        let cl = &track.centerline;
        if cl.len() < 3 {
            return Err(ExpertError::DegenerateCenterline(cl.len()));
        }
        let curvature = (0..cl.len())
            .map(|i| cl.curvature(i, CURVATURE_STRIDE))
            .collect();
        Ok(Expert {
            centerline: cl,
            curvature,
        })
    }

    /// Distance ahead over which curvature limits the current speed.
    pub fn preview_distance(v: f64) -> f64 {
        1.0 + 0.8 * v.max(0.0)
    }

    pub fn command(&self, state: &VehicleState) -> ActionPair {
        let cl = self.centerline;
        let rear = [state.x, state.y];
        let s = cl.project(rear);
        let ld = lookahead_distance(state.v);
        let target = cl.point_at(s + ld);
        let (dx, dy) = (target[0] - rear[0], target[1] - rear[1]);
        let d = (dx * dx + dy * dy).sqrt().max(1e-6);
        let alpha = dy.atan2(dx) - state.theta;
        let steer = (2.0 * WHEELBASE * alpha.sin() / d).atan();

        let (mut i, end) = (cl.index_at(s), s + Self::preview_distance(state.v));
        let mut kappa: f64 = 0.0;
        let mut station = s;
        let n = cl.len();
        let mut visited = 0;
        while station <= end && visited < n {
            kappa = kappa.max(self.curvature[i].abs());
            i = (i + 1) % n;
            visited += 1;
            station = s + (cl.station(i) - s).rem_euclid(cl.length());
        }
        ActionPair::from_command(steer, curvature_speed(kappa))
    }
}

impl Policy for Expert<'_> {
    fn act(&mut self, _scan: &[f32], state: &VehicleState) -> ActionPair {
        self.command(state)
    }
}

/// Bang-bang variant of the expert: full steering lock toward the pure-pursuit
/// side (straight inside a small deadband) at the expert's speed.
#[derive(Clone, Debug)]
pub struct BangBang<'a> {
    expert: Expert<'a>,
    deadband: f64,
}

impl<'a> BangBang<'a> {
    pub fn new(track: &'a TrackBundle) -> Result<Self, ExpertError> {
        Ok(BangBang {
            expert: Expert::new(track)?,
            deadband: 0.02,
        })
    }
}

impl Policy for BangBang<'_> {
    fn act(&mut self, _scan: &[f32], state: &VehicleState) -> ActionPair {
        let a = self.expert.command(state);
        let steer = if a.steering_rad.abs() < self.deadband {
            0.0
        } else {
            a.steering_rad.signum() * STEER_MAX
        };
        ActionPair::from_command(steer, a.speed_mps)
    }
}

/// Smooth random steering offset added to the executed command during
/// demonstrations: AR(1) with a ~0.5 s correlation time.
#[derive(Clone, Debug)]
pub struct SteerPerturbation {
    /// Stationary standard deviation, rad.
    pub std: f64,
    /// Per-tick autocorrelation.
    pub rho: f64,
}

impl Default for SteerPerturbation {
    fn default() -> Self {
        SteerPerturbation {
            std: 0.03,
            rho: 0.95,
        }
    }
}

/// Drives `n_laps` demonstration laps from seeded random starts with scan
/// noise on, recording one sample per control tick. Even laps follow the
/// centerline direction, odd laps the reverse, so both turn directions are
/// demonstrated.
///
/// The executed steering carries a [`SteerPerturbation`] so the car leaves
/// the racing line; each sample is labelled with the expert's unperturbed
/// command for the recorded state. A lap that ends without completing stops
/// collection and marks the dataset incomplete.
pub fn collect(track: &TrackBundle, n_laps: usize, seed: u64) -> Result<Dataset, ExpertError> {
    collect_with(track, n_laps, seed, &SteerPerturbation::default())
}

pub fn collect_with(
    track: &TrackBundle,
    n_laps: usize,
    seed: u64,
    perturbation: &SteerPerturbation,
) -> Result<Dataset, ExpertError> {
    let reverse = track.reversed();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Dataset::new(track.name.clone(), seed);
    let innovation = perturbation.std * (1.0 - perturbation.rho * perturbation.rho).sqrt();
    for lap in 0..n_laps {
        let lap_track = if lap % 2 == 0 { track } else { &reverse };
        let expert = Expert::new(lap_track)?;
        let (_, start) = random_start(lap_track, &mut rng);
        let episode_seed = seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(lap as u64);
        let mut offset = 0.0;
        let mut perturb_rng = ChaCha8Rng::seed_from_u64(episode_seed ^ 0xd1b5_4a32_d192_ed03);
        let mut driver = |_: &[f32], state: &VehicleState| {
            let clean = expert.command(state);
            offset = perturbation.rho * offset
                + innovation * perturb_rng.sample::<f64, _>(StandardNormal);
            ActionPair::from_command(clean.steering_rad + offset, clean.speed_mps)
        };
        let mut samples = Vec::new();
        let log = run_episode_with(
            lap_track,
            &mut driver,
            start,
            episode_seed,
            LAP_TIMEOUT_S,
            |rec, scan| {
                let clean = expert.command(&rec.state);
                let label = map_labels(clean.steering_rad, clean.speed_mps)
                    .expect("expert commands lie in the label range");
                samples.push(Sample {
                    scan: scan.to_vec(),
                    label,
                });
            },
        )?;
        data.samples.extend(samples);
        if log.outcome != Outcome::LapComplete {
            data.complete = false;
            break;
        }
    }
    Ok(data)
}
