//! Bundled tracks. The files under `tracks/` are generated by
//! `cargo run --example gen_tracks` from the definitions below.

use std::f64::consts::PI;

use super::track::{PathBuilder, TrackBundle};
use super::SimError;

pub const RESOLUTION: f64 = 0.05;
const SPACING: f64 = 0.1;

pub const BUNDLED: [&str; 2] = ["oval", "uturn"];

/// Egg-shaped oval, driven counter-clockwise: a 4 m turn and a 2 m turn
/// joined by two slightly converging straights. Track width 2.2 m.
pub fn oval() -> Result<TrackBundle, SimError> {
    let (r1, r2, d) = (4.0, 2.0, 12.0);
    let phi = ((r1 - r2) / d as f64).asin();
    let straight = (d * d - (r1 - r2) * (r1 - r2)).sqrt();
    // bottom tangent point of the large circle centered at the origin
    let start = [r1 * phi.sin(), -r1 * phi.cos()];
    let pts = PathBuilder::new(start, phi, SPACING)
        .straight(straight)
        .arc(r2, PI - 2.0 * phi)
        .straight(straight)
        .arc(r1, PI + 2.0 * phi)
        .finish();
    TrackBundle::synthesize("oval", pts, 1.1, RESOLUTION)
}

/// Two hairpins (1.6 m radius) joined by a long straight and a return leg
/// with an outward double chicane. Track width 2 m.
pub fn uturn() -> Result<TrackBundle, SimError> {
    let (hairpin, kink_r, kink) = (1.6, 4.0, PI / 6.0);
    let pts = PathBuilder::new([0.0, 0.0], 0.0, SPACING)
        .straight(14.0)
        .arc(hairpin, PI)
        .straight(2.0)
        .arc(kink_r, -kink)
        .arc(kink_r, kink)
        .straight(2.0)
        .arc(kink_r, kink)
        .arc(kink_r, -kink)
        .straight(2.0)
        .arc(hairpin, PI)
        .finish();
    TrackBundle::synthesize("uturn", pts, 1.0, RESOLUTION)
}

/// Regenerates a bundled track from its definition.
pub fn generate(name: &str) -> Option<Result<TrackBundle, SimError>> {
    match name {
        "oval" => Some(oval()),
        "uturn" => Some(uturn()),
        _ => None,
    }
}

macro_rules! track_files {
    ($name:literal) => {
        (
            include_bytes!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/tracks/",
                $name,
                "/map.pgm"
            ))
            .as_slice(),
            include_str!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/tracks/",
                $name,
                "/map.yaml"
            )),
            include_bytes!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/tracks/",
                $name,
                "/centerline.csv"
            ))
            .as_slice(),
        )
    };
}

/// Loads a bundled track from the copy embedded in the library.
pub fn bundled(name: &str) -> Option<Result<TrackBundle, SimError>> {
    let (pgm, yaml, csv) = match name {
        "oval" => track_files!("oval"),
        "uturn" => track_files!("uturn"),
        _ => return None,
    };
    Some(TrackBundle::from_parts(name, pgm, yaml, csv))
}
