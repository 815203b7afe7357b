//! 2D occupancy-grid racing simulator.

pub mod episode;
pub mod grid;
pub mod noise;
pub mod raycast;
pub mod track;
pub mod tracks;
pub mod vehicle;

pub use episode::{
    progress, random_start, run_blind, run_episode, run_episode_with, scan_checksum, start_state,
    EpisodeLog, Outcome, Policy, ProgressTracker, TickRecord,
};
pub use grid::{parse_map_yaml, parse_pgm, write_map_yaml, MapYaml, OccupancyGrid, Pgm};
pub use noise::add_noise;
pub use raycast::{cast_ray, raycast, Pose};
pub use track::{parse_centerline_csv, Centerline, PathBuilder, TrackBundle};
pub use vehicle::{step, VehicleState};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("invalid track: {0}")]
    InvalidTrack(String),
    #[error("{0}")]
    Io(String),
    #[error("sensor pose is inside an occupied cell")]
    Collision,
    #[error("start pose is in collision")]
    StartInCollision,
    #[error("sensor: {0}")]
    Sensor(String),
    #[error("unknown track '{0}'")]
    UnknownTrack(String),
}

/// Resolves a bundled track name or a track directory path.
pub fn load_track(name_or_path: &str) -> Result<TrackBundle, SimError> {
    if let Some(t) = tracks::bundled(name_or_path) {
        return t;
    }
    let p = std::path::Path::new(name_or_path);
    if p.is_dir() {
        return TrackBundle::load(p);
    }
    Err(SimError::UnknownTrack(name_or_path.to_string()))
}
