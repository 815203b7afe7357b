//! Expert coverage of the bundled tracks and train/deploy scan parity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tinylidar::expert::{collect, Expert};
use tinylidar::scan::preprocess;
use tinylidar::sim::noise::draw_sigma;
use tinylidar::sim::{
    add_noise, raycast, run_blind, run_episode_with, start_state, tracks, Outcome, VehicleState,
};

#[test]
fn expert_laps_both_tracks_from_every_waypoint() {
    for name in tracks::BUNDLED {
        let t = tracks::bundled(name).unwrap().unwrap();
        for track in [t.clone(), t.reversed()] {
            let mut expert = Expert::new(&track).unwrap();
            for i in 0..track.centerline.len() {
                let log = run_blind(&track, &mut expert, start_state(&track, i), 60.0).unwrap();
                assert_eq!(
                    log.outcome,
                    Outcome::LapComplete,
                    "{name} start {i}: {:.1}%",
                    log.progress
                );
                assert_eq!(log.progress, 100.0);
            }
        }
    }
}

#[test]
fn recorded_scans_replay_through_the_live_sensor_path() {
    let track = tracks::bundled("oval").unwrap().unwrap();
    let mut expert = Expert::new(&track).unwrap();
    let seed = 77;
    let mut recorded: Vec<(VehicleState, Vec<f32>)> = Vec::new();
    run_episode_with(
        &track,
        &mut expert,
        start_state(&track, 40),
        seed,
        2.0,
        |rec, scan| recorded.push((rec.state, scan.to_vec())),
    )
    .unwrap();
    assert_eq!(recorded.len(), 80);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = draw_sigma(&mut rng);
    for (state, scan) in &recorded {
        let mut raw = raycast(&track.grid, state.sensor_pose()).unwrap();
        add_noise(&mut raw, sigma, &mut rng);
        assert_eq!(&preprocess(&raw).unwrap(), scan);
    }
}

#[test]
fn collected_dataset_is_complete_and_seeded() {
    let track = tracks::bundled("oval").unwrap().unwrap();
    let a = collect(&track, 2, 9).unwrap();
    assert!(a.complete);
    a.validate().unwrap();
    // two laps of ~43 m at 2-5 m/s and 40 Hz
    assert!((400..2000).contains(&a.len()), "{}", a.len());
    assert_eq!(a, collect(&track, 2, 9).unwrap());
    assert_ne!(a.samples[0], collect(&track, 2, 10).unwrap().samples[0]);
}
